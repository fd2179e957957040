#pragma once

#include "cexample/checkpoint.hpp"
#include "cexample/container.hpp"
#include "cexample/dataset.hpp"
#include "cexample/error.hpp"
#include "cexample/evaluation.hpp"
#include "cexample/experiment.hpp"
#include "cexample/fingerprint.hpp"
#include "cexample/fingerprint_io.hpp"
#include "cexample/frequency.hpp"
#include "cexample/hash.hpp"
#include "cexample/image_io.hpp"
#include "cexample/mask.hpp"
#include "cexample/network.hpp"
#include "cexample/parallel.hpp"
#include "cexample/pruning.hpp"
#include "cexample/random.hpp"
#include "cexample/tensor.hpp"
#include "cexample/train.hpp"
