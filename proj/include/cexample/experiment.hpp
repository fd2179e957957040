#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cexample/checkpoint.hpp"
#include "cexample/dataset.hpp"
#include "cexample/evaluation.hpp"
#include "cexample/fingerprint.hpp"
#include "cexample/fingerprint_io.hpp"
#include "cexample/frequency.hpp"
#include "cexample/image_io.hpp"
#include "cexample/pruning.hpp"
#include "cexample/train.hpp"

namespace cexample {

namespace fs = std::filesystem;

/// Everything needed to rerun the train -> prune -> fingerprint -> evaluate
/// pipeline. Serialized as JSON; see README for the schema.
struct ExperimentConfig {
  std::uint64_t seed = 1;
  std::size_t jobs = 0;  // 0 = all cores; never affects results
  fs::path out = "runs/default";

  // dataset
  std::string dataset = "synthetic";  // synthetic | cifar10
  fs::path cifar_path;
  std::size_t classes = 10;
  std::size_t train_size = 2000;
  std::size_t test_size = 1000;
  std::size_t image_size = 32;
  std::size_t train_limit = 0;  // cifar subset sizes; 0 = all
  std::size_t test_limit = 0;

  // models
  std::string base_architecture = "cnn-small";
  std::size_t variants = 5;
  std::vector<std::string> other_architectures{"cnn-wide"};
  TrainConfig train{8, 32, 0.01, 0.9, 0.0, 0};

  // pruning
  std::vector<Real> prune_ratios{0.8, 0.9, 0.95};
  std::size_t prune_repeats = 5;
  PruneScope prune_scope = PruneScope::kPerLayer;
  std::size_t finetune_epochs = 3;
  Real finetune_lr_scale = 0.1;

  // fingerprints
  std::vector<Method> methods{Method::kVanilla, Method::kRc, Method::kRcGm, Method::kLtrc};
  std::vector<Real> deltas{0.01, 0.03, 0.05, 0.07};
  std::vector<Real> ltrc_deltas{0.0, 0.01, 0.03, 0.05, 0.07};
  std::vector<std::size_t> band_ks{1, 2, 3};
  std::size_t q = 10;
  Real alpha = 1.0 / 255.0;
  std::size_t steps = 500;
  Real eta = 1e-6;
  std::size_t examples = 100;
  bool zero_dc = false;

  // evaluation / verification / saliency
  Real threshold = 50.0;
  std::string group = "variants";
  std::size_t saliency_images = 200;

  std::size_t resolved_jobs() const { return jobs ? jobs : default_jobs(); }

  void validate() const {
    if (dataset != "synthetic" && dataset != "cifar10") {
      throw Error(ErrorKind::kParameter, "dataset must be 'synthetic' or 'cifar10'");
    }
    if (dataset == "cifar10" && cifar_path.empty()) throw Error(ErrorKind::kParameter, "cifar10 needs cifar_path");
    train.validate();
    for (Real r : prune_ratios) PruneConfig{r}.validate();
    if (prune_repeats < 1) throw Error(ErrorKind::kParameter, "prune repeats must be >= 1");
    if (!(finetune_lr_scale > 0.0)) throw Error(ErrorKind::kParameter, "finetune_lr_scale must be > 0");
    for (const auto& c : fingerprint_grid()) c.validate();
    if (!(threshold > 0.0 && threshold <= 100.0)) throw Error(ErrorKind::kParameter, "threshold must be in (0, 100]");
    if (saliency_images < 1) throw Error(ErrorKind::kParameter, "saliency needs at least one image");
    const std::size_t side = dataset == "cifar10" ? 32 : image_size;
    for (std::size_t k : band_ks) {
      if (k >= 2 * side - 1) throw Error(ErrorKind::kParameter, "band k " + std::to_string(k) + " too large");
    }
  }

  /// One config per (method, delta, k) cell. All cells share the fingerprint
  /// seed, so they start from the same images and targets.
  std::vector<FingerprintConfig> fingerprint_grid() const {
    std::vector<FingerprintConfig> grid;
    FingerprintConfig base;
    base.q = q;
    base.alpha = alpha;
    base.steps = steps;
    base.eta = eta;
    base.examples = examples;
    base.zero_dc = zero_dc;
    base.seed = derive_seed(seed, "fingerprint");
    for (Method m : methods) {
      FingerprintConfig c = base;
      c.method = m;
      switch (m) {
        case Method::kVanilla:
          grid.push_back(c);
          break;
        case Method::kRc:
        case Method::kRcGm:
          for (Real d : deltas) {
            c.delta = d;
            grid.push_back(c);
          }
          break;
        case Method::kLtrc:
          for (std::size_t k : band_ks) {
            for (Real d : ltrc_deltas) {
              c.delta = d;
              c.band_k = k;
              grid.push_back(c);
            }
          }
          break;
      }
    }
    return grid;
  }
};

inline nlohmann::json to_json(const ExperimentConfig& c) {
  std::vector<std::string> methods;
  for (Method m : c.methods) methods.emplace_back(to_string(m));
  return {
      {"seed", c.seed},
      {"dataset",
       {{"kind", c.dataset},
        {"cifar_path", c.cifar_path.string()},
        {"classes", c.classes},
        {"train_size", c.train_size},
        {"test_size", c.test_size},
        {"image_size", c.image_size},
        {"train_limit", c.train_limit},
        {"test_limit", c.test_limit}}},
      {"models", {{"base", c.base_architecture}, {"variants", c.variants}, {"other_architectures", c.other_architectures}}},
      {"train",
       {{"epochs", c.train.epochs},
        {"batch_size", c.train.batch_size},
        {"learning_rate", c.train.learning_rate},
        {"momentum", c.train.momentum},
        {"weight_decay", c.train.weight_decay}}},
      {"prune",
       {{"ratios", c.prune_ratios},
        {"repeats", c.prune_repeats},
        {"scope", to_string(c.prune_scope)},
        {"finetune_epochs", c.finetune_epochs},
        {"finetune_lr_scale", c.finetune_lr_scale}}},
      {"fingerprint",
       {{"methods", methods},
        {"deltas", c.deltas},
        {"ltrc_deltas", c.ltrc_deltas},
        {"band_k", c.band_ks},
        {"q", c.q},
        {"alpha", c.alpha},
        {"steps", c.steps},
        {"eta", c.eta},
        {"examples", c.examples},
        {"zero_dc", c.zero_dc}}},
      {"evaluate", {{"threshold", c.threshold}, {"group", c.group}}},
      {"saliency", {{"images", c.saliency_images}}},
  };
}

/// Missing keys keep their defaults; unknown keys are rejected.
inline ExperimentConfig experiment_config_from_json(const nlohmann::json& j) {
  static const std::map<std::string, std::vector<std::string>> kKnown{
      {"", {"seed", "jobs", "out", "dataset", "models", "train", "prune", "fingerprint", "evaluate", "saliency"}},
      {"dataset", {"kind", "cifar_path", "classes", "train_size", "test_size", "image_size", "train_limit", "test_limit"}},
      {"models", {"base", "variants", "other_architectures"}},
      {"train", {"epochs", "batch_size", "learning_rate", "momentum", "weight_decay"}},
      {"prune", {"ratios", "repeats", "scope", "finetune_epochs", "finetune_lr_scale"}},
      {"fingerprint", {"methods", "deltas", "ltrc_deltas", "band_k", "q", "alpha", "steps", "eta", "examples", "zero_dc"}},
      {"evaluate", {"threshold", "group"}},
      {"saliency", {"images"}},
  };
  auto check_keys = [&](const nlohmann::json& obj, const std::string& section) {
    if (!obj.is_object()) throw Error(ErrorKind::kParameter, "config section '" + section + "' must be an object");
    const auto& known = kKnown.at(section);
    for (const auto& [key, value] : obj.items()) {
      if (std::find(known.begin(), known.end(), key) == known.end()) {
        throw Error(ErrorKind::kParameter, "unknown config key '" + (section.empty() ? key : section + "." + key) + "'");
      }
    }
  };
  ExperimentConfig c;
  try {
    check_keys(j, "");
    c.seed = j.value("seed", c.seed);
    c.jobs = j.value("jobs", c.jobs);
    if (j.contains("out")) c.out = j.at("out").get<std::string>();
    if (j.contains("dataset")) {
      const auto& d = j.at("dataset");
      check_keys(d, "dataset");
      c.dataset = d.value("kind", c.dataset);
      c.cifar_path = d.value("cifar_path", c.cifar_path.string());
      c.classes = d.value("classes", c.classes);
      c.train_size = d.value("train_size", c.train_size);
      c.test_size = d.value("test_size", c.test_size);
      c.image_size = d.value("image_size", c.image_size);
      c.train_limit = d.value("train_limit", c.train_limit);
      c.test_limit = d.value("test_limit", c.test_limit);
    }
    if (j.contains("models")) {
      const auto& m = j.at("models");
      check_keys(m, "models");
      c.base_architecture = m.value("base", c.base_architecture);
      c.variants = m.value("variants", c.variants);
      c.other_architectures = m.value("other_architectures", c.other_architectures);
    }
    if (j.contains("train")) {
      const auto& t = j.at("train");
      check_keys(t, "train");
      c.train.epochs = t.value("epochs", c.train.epochs);
      c.train.batch_size = t.value("batch_size", c.train.batch_size);
      c.train.learning_rate = t.value("learning_rate", c.train.learning_rate);
      c.train.momentum = t.value("momentum", c.train.momentum);
      c.train.weight_decay = t.value("weight_decay", c.train.weight_decay);
    }
    if (j.contains("prune")) {
      const auto& p = j.at("prune");
      check_keys(p, "prune");
      c.prune_ratios = p.value("ratios", c.prune_ratios);
      c.prune_repeats = p.value("repeats", c.prune_repeats);
      if (p.contains("scope")) c.prune_scope = prune_scope_from_string(p.at("scope").get<std::string>());
      c.finetune_epochs = p.value("finetune_epochs", c.finetune_epochs);
      c.finetune_lr_scale = p.value("finetune_lr_scale", c.finetune_lr_scale);
    }
    if (j.contains("fingerprint")) {
      const auto& f = j.at("fingerprint");
      check_keys(f, "fingerprint");
      if (f.contains("methods")) {
        c.methods.clear();
        for (const auto& m : f.at("methods")) c.methods.push_back(method_from_string(m.get<std::string>()));
      }
      c.deltas = f.value("deltas", c.deltas);
      c.ltrc_deltas = f.value("ltrc_deltas", c.ltrc_deltas);
      c.band_ks = f.value("band_k", c.band_ks);
      c.q = f.value("q", c.q);
      c.alpha = f.value("alpha", c.alpha);
      c.steps = f.value("steps", c.steps);
      c.eta = f.value("eta", c.eta);
      c.examples = f.value("examples", c.examples);
      c.zero_dc = f.value("zero_dc", c.zero_dc);
    }
    if (j.contains("evaluate")) {
      const auto& e = j.at("evaluate");
      check_keys(e, "evaluate");
      c.threshold = e.value("threshold", c.threshold);
      c.group = e.value("group", c.group);
    }
    if (j.contains("saliency")) {
      const auto& s = j.at("saliency");
      check_keys(s, "saliency");
      c.saliency_images = s.value("images", c.saliency_images);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kParameter, std::string("malformed config: ") + e.what());
  }
  return c;
}

inline ExperimentConfig load_experiment_config(const fs::path& path) {
  const std::string text = read_file(path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text, nullptr, true, /*ignore_comments=*/true);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kParameter, path.string() + ": " + e.what());
  }
  return experiment_config_from_json(j);
}

/// Hash of every result-affecting field (excludes `out` and `jobs`).
inline std::string config_hash(const ExperimentConfig& c) { return sha256_hex(to_json(c).dump()); }

using LogFn = std::function<void(const std::string&)>;

inline LogFn stderr_log() {
  return [](const std::string& line) { std::cerr << line << std::endl; };
}

/// Shared state for one pipeline invocation.
struct RunContext {
  ExperimentConfig config;
  std::string command;
  LogFn log = [](const std::string&) {};

  nlohmann::json producer() const { return {{"command", command}, {"config_hash", config_hash(config)}}; }
  fs::path dir(const std::string& sub) const { return config.out / sub; }
};

inline void write_json(const fs::path& path, const nlohmann::json& j) { write_file(path, j.dump(2) + "\n"); }

inline nlohmann::json read_json(const fs::path& path) {
  try {
    return nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kCorruptFile, path.string() + ": " + e.what());
  }
}

/// Train/test splits per the config.
inline std::pair<Dataset, Dataset> load_datasets(const ExperimentConfig& c) {
  if (c.dataset == "cifar10") {
    auto [train, test] = load_cifar10(c.cifar_path);
    if (c.train_limit) train = train.head(c.train_limit);
    if (c.test_limit) test = test.head(c.test_limit);
    return {std::move(train), std::move(test)};
  }
  return {synth_dataset(derive_seed(c.seed, "data.train"), c.classes, c.train_size, c.image_size, c.image_size, Split::kTrain),
          synth_dataset(derive_seed(c.seed, "data.test"), c.classes, c.test_size, c.image_size, c.image_size, Split::kTest)};
}

inline nlohmann::json model_record(const fs::path& file, const Network& net, Real test_accuracy,
                                   nlohmann::json extra = nlohmann::json::object()) {
  extra["file"] = file.filename().string();
  extra["sha256"] = file_sha256(file);
  extra["network_hash"] = network_hash(net);
  extra["architecture"] = net.architecture();
  extra["seed"] = net.seed();
  extra["test_accuracy"] = test_accuracy;
  return extra;
}

/// Trains base, variant and other-architecture models; writes
/// models/{base,variant-i,other-<arch>}.ckpt and models/manifest.json.
inline nlohmann::json run_train(const RunContext& ctx) {
  const auto& c = ctx.config;
  c.validate();
  auto [train_data, test_data] = load_datasets(c);
  const fs::path dir = ctx.dir("models");
  fs::create_directories(dir);

  struct Job {
    std::string name, role, arch;
    std::uint64_t seed;
  };
  std::vector<Job> jobs{{"base", "base", c.base_architecture, derive_seed(c.seed, "model.base")}};
  for (std::size_t i = 0; i < c.variants; ++i) {
    jobs.push_back({"variant-" + std::to_string(i), "variant", c.base_architecture, derive_seed(c.seed, "model.variant", i)});
  }
  for (std::size_t i = 0; i < c.other_architectures.size(); ++i) {
    const auto& a = c.other_architectures[i];
    jobs.push_back({"other-" + a, "other-arch", a, derive_seed(c.seed, "model.other", i)});
  }

  std::vector<Network> nets(jobs.size());
  std::vector<Real> acc(jobs.size());
  parallel_for(jobs.size(), c.resolved_jobs(), [&](std::size_t i) {
    const std::uint64_t s = jobs[i].seed;
    nets[i] = train_variants(jobs[i].arch, train_data, c.train, std::span(&s, 1)).front();
    acc[i] = accuracy(nets[i], test_data);
    ctx.log("trained " + jobs[i].name + " (" + jobs[i].arch + "): test accuracy " + std::to_string(acc[i]));
  });

  nlohmann::json manifest{{"producer", ctx.producer()}, {"variants", nlohmann::json::array()},
                          {"others", nlohmann::json::array()}};
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    const fs::path file = dir / (jobs[i].name + ".ckpt");
    nlohmann::json prov = ctx.producer();
    prov["role"] = jobs[i].role;
    prov["name"] = jobs[i].name;
    save_checkpoint(file, {nets[i], std::nullopt, prov});
    auto rec = model_record(file, nets[i], acc[i], {{"name", jobs[i].name}, {"role", jobs[i].role}});
    if (jobs[i].role == "base") {
      manifest["base"] = rec;
    } else if (jobs[i].role == "variant") {
      manifest["variants"].push_back(rec);
    } else {
      manifest["others"].push_back(rec);
    }
  }
  write_json(dir / "manifest.json", manifest);
  return manifest;
}

inline fs::path default_base_checkpoint(const RunContext& ctx) { return ctx.dir("models") / "base.ckpt"; }

/// Pruned suite from the base checkpoint; writes pruned/*.ckpt + manifest.json.
inline nlohmann::json run_prune(const RunContext& ctx, const fs::path& base_path) {
  const auto& c = ctx.config;
  c.validate();
  auto [train_data, test_data] = load_datasets(c);
  const Checkpoint base = load_checkpoint(base_path);
  PruneSuiteConfig pc;
  pc.ratios = c.prune_ratios;
  pc.repeats = c.prune_repeats;
  pc.scope = c.prune_scope;
  pc.finetune_epochs = c.finetune_epochs;
  pc.finetune = c.train;
  pc.finetune.learning_rate = c.train.learning_rate * c.finetune_lr_scale;
  pc.seed = derive_seed(c.seed, "prune");
  auto suite = make_pruned_suite(base.network, train_data, test_data, pc, c.resolved_jobs());

  const fs::path dir = ctx.dir("pruned");
  fs::create_directories(dir);
  const std::string base_file_hash = file_sha256(base_path);
  nlohmann::json models = nlohmann::json::array();
  for (const auto& m : suite) {
    const std::string name = pruned_name(m.ratio, m.repeat);
    const fs::path file = dir / (name + ".ckpt");
    nlohmann::json prov = ctx.producer();
    prov.update({{"role", "pruned"},
                 {"name", name},
                 {"base_sha256", base_file_hash},
                 {"ratio", m.ratio},
                 {"scope", to_string(c.prune_scope)},
                 {"repeat", m.repeat},
                 {"finetune_seed", m.seed}});
    save_checkpoint(file, {m.network, m.mask, prov});
    models.push_back(model_record(file, m.network, m.test_accuracy,
                                  {{"name", name},
                                   {"ratio", m.ratio},
                                   {"repeat", m.repeat},
                                   {"finetune_seed", m.seed},
                                   {"sparsity", sparsity(m.network)}}));
    ctx.log("pruned " + name + ": sparsity " + std::to_string(sparsity(m.network)) + ", test accuracy " +
            std::to_string(m.test_accuracy));
  }
  nlohmann::json manifest{{"producer", ctx.producer()}, {"base_sha256", base_file_hash}, {"models", models}};
  write_json(dir / "manifest.json", manifest);
  return manifest;
}

inline std::optional<std::string> reproducible_timestamp() {
  if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH")) return std::string(epoch);
  return std::nullopt;
}

/// One set file (+ contact sheet) per grid cell; writes fingerprints/manifest.json.
inline nlohmann::json run_fingerprint(const RunContext& ctx, const fs::path& base_path,
                                      std::vector<FingerprintConfig> grid = {}) {
  const auto& c = ctx.config;
  c.validate();
  if (grid.empty()) grid = c.fingerprint_grid();
  const Checkpoint base = load_checkpoint(base_path);
  const fs::path dir = ctx.dir("fingerprints");
  fs::create_directories(dir);
  nlohmann::json sets = nlohmann::json::array();
  for (const auto& cell : grid) {
    FingerprintSet set = generate(base.network, cell, c.resolved_jobs());
    set.timestamp = reproducible_timestamp();
    set.provenance = ctx.producer();
    set.provenance["base_sha256"] = file_sha256(base_path);
    Real overshoot = 0.0;
    for (const auto& e : set.examples) overshoot = std::max(overshoot, range_overshoot(e.image));
    const std::string name = cell.cell_name();
    const fs::path file = dir / (name + ".cexs");
    save_set(file, set);
    write_png(dir / (name + ".png"), contact_sheet(set), {{"producer", ctx.producer().dump()}});
    const Real base_acc = fingerprint_accuracy(base.network, set);
    sets.push_back({{"cell", name},
                    {"file", file.filename().string()},
                    {"sha256", file_sha256(file)},
                    {"contact_sheet", name + ".png"},
                    {"config", to_json(cell)},
                    {"examples", set.examples.size()},
                    {"converged", set.converged_count()},
                    {"not_converged", set.examples.size() - set.converged_count()},
                    {"base_accuracy", base_acc},
                    {"max_range_overshoot", overshoot}});
    ctx.log("fingerprint " + name + ": base accuracy " + std::to_string(base_acc) + ", converged " +
            std::to_string(set.converged_count()) + "/" + std::to_string(set.examples.size()) +
            (overshoot > 1e-6 ? ", pixel range overshoot " + std::to_string(overshoot) : ""));
  }
  nlohmann::json manifest{{"producer", ctx.producer()}, {"base_network_hash", network_hash(base.network)}, {"sets", sets}};
  write_json(dir / "manifest.json", manifest);
  return manifest;
}

/// Registry from the models/ and pruned/ manifests of an output directory.
inline ModelRegistry load_registry(const RunContext& ctx) {
  ModelRegistry reg;
  const fs::path mdir = ctx.dir("models"), pdir = ctx.dir("pruned");
  const auto models = read_json(mdir / "manifest.json");
  auto named = [](const fs::path& dir, const nlohmann::json& rec) {
    return NamedModel{rec.at("name").get<std::string>(), load_checkpoint(dir / rec.at("file").get<std::string>()).network,
                      rec.at("test_accuracy").get<Real>()};
  };
  reg.base = named(mdir, models.at("base"));
  for (const auto& v : models.at("variants")) reg.others["variants"].push_back(named(mdir, v));
  for (const auto& o : models.at("others")) reg.others["other-arch"].push_back(named(mdir, o));
  const auto pruned = read_json(pdir / "manifest.json");
  for (const auto& p : pruned.at("models")) {
    reg.pruned.push_back({p.at("ratio").get<Real>(), p.at("repeat").get<std::size_t>(), named(pdir, p)});
  }
  return reg;
}

inline std::vector<FingerprintSet> load_sets(const RunContext& ctx, const std::string& base_hash, bool warn = true) {
  const fs::path dir = ctx.dir("fingerprints");
  const auto manifest = read_json(dir / "manifest.json");
  std::vector<FingerprintSet> sets;
  for (const auto& s : manifest.at("sets")) {
    sets.push_back(load_set(dir / s.at("file").get<std::string>()));
    if (warn && sets.back().base_hash != base_hash) {
      ctx.log("warning: " + s.at("file").get<std::string>() + " was generated from a different base model");
    }
  }
  return sets;
}

/// Writes report/{report.json, table.csv, curve.csv, curve.svg, table.txt}.
inline EvaluationReport run_evaluate(const RunContext& ctx) {
  const auto& c = ctx.config;
  const ModelRegistry reg = load_registry(ctx);
  const auto sets = load_sets(ctx, network_hash(reg.base.network));
  EvaluationReport report = build_report(sets, reg, c.resolved_jobs());
  report.config_echo = to_json(c);
  const fs::path dir = ctx.dir("report");
  fs::create_directories(dir);
  nlohmann::json j = to_json(report);
  j["producer"] = ctx.producer();
  write_json(dir / "report.json", j);
  const std::string header = "# producer=" + ctx.command + " config_hash=" + config_hash(c) + "\n";
  write_file(dir / "table.csv", header + report_csv(report));
  write_file(dir / "curve.csv", header + curve_csv(report));
  const std::string group = report.groups.empty() ? c.group : (reg.others.count(c.group) ? c.group : report.groups.front());
  write_file(dir / "curve.svg", "<!-- producer=" + ctx.command + " config_hash=" + config_hash(c) + " -->\n" +
                                    curve_svg(report, group));
  write_file(dir / "table.txt", header + report_table(report, group));
  return report;
}

/// Writes saliency/saliency-c<i>.csv and saliency/saliency.png.
inline std::vector<Matrix> run_saliency(const RunContext& ctx, const fs::path& base_path, std::size_t n) {
  const auto& c = ctx.config;
  const Checkpoint base = load_checkpoint(base_path);
  auto [train_data, test_data] = load_datasets(c);
  const Dataset& source = test_data.size() >= n ? test_data : train_data;
  auto maps = frequency_saliency(base.network, source, n);
  const fs::path dir = ctx.dir("saliency");
  fs::create_directories(dir);
  for (std::size_t ch = 0; ch < maps.size(); ++ch) {
    std::ostringstream os;
    os << "# producer=" << ctx.command << " config_hash=" << config_hash(c) << " channel=" << ch << " images=" << n
       << "\n";
    os.precision(17);
    for (Eigen::Index i = 0; i < maps[ch].rows(); ++i) {
      for (Eigen::Index j = 0; j < maps[ch].cols(); ++j) os << (j ? "," : "") << maps[ch](i, j);
      os << '\n';
    }
    write_file(dir / ("saliency-c" + std::to_string(ch) + ".csv"), os.str());
  }
  write_png(dir / "saliency.png", saliency_heatmap(maps), {{"producer", ctx.producer().dump()}});
  return maps;
}

/// train, prune, fingerprint, saliency and evaluate into `ctx.config.out`.
inline EvaluationReport run_pipeline(const RunContext& ctx) {
  const fs::path base = default_base_checkpoint(ctx);
  run_train(ctx);
  run_prune(ctx, base);
  run_fingerprint(ctx, base);
  run_saliency(ctx, base, ctx.config.saliency_images);
  return run_evaluate(ctx);
}

/// SHA-256 of every file under `root`, keyed by relative path.
inline std::map<std::string, std::string> artifact_hashes(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (entry.is_regular_file()) out[fs::relative(entry.path(), root).generic_string()] = file_sha256(entry.path());
  }
  return out;
}

}  // namespace cexample
