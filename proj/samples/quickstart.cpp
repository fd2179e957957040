// Train a small classifier on synthetic data, fingerprint it with LTRC
// examples, then check the fingerprints against the owner and a stranger.
#include <iostream>

#include "cexample.hpp"

int main() {
  using namespace cexample;
  const Dataset train_data = synth_dataset(1, 10, 1000, 32, 32, Split::kTrain);
  const Dataset test_data = synth_dataset(2, 10, 500, 32, 32, Split::kTest);

  TrainConfig tc;
  tc.epochs = 3;
  const std::uint64_t seeds[] = {11, 12};
  auto models = train_variants("cnn-small", train_data, tc, seeds, default_jobs());
  std::cout << "owner accuracy " << accuracy(models[0], test_data) << ", stranger accuracy "
            << accuracy(models[1], test_data) << "\n";

  FingerprintConfig fc;
  fc.method = Method::kLtrc;
  fc.delta = 0.03;
  fc.band_k = 2;
  fc.examples = 20;
  fc.seed = 7;
  const FingerprintSet set = generate(models[0], fc, default_jobs());
  std::cout << set.converged_count() << "/" << set.examples.size() << " fingerprints converged\n";

  for (std::size_t i = 0; i < models.size(); ++i) {
    const Real acc = fingerprint_accuracy(models[i], set);
    std::cout << (i == 0 ? "owner" : "stranger") << ": " << acc << "% -> "
              << to_string(verify_ownership(models[i], set, 50.0)) << "\n";
  }
}
