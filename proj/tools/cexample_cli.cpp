#if __has_include(<CLI11.hpp>)
#include <CLI11.hpp>
#else
#include <CLI/CLI.hpp>
#endif

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include "cexample.hpp"

namespace {

using namespace cexample;

struct Overrides {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> jobs;
  std::vector<std::string> methods;
  std::vector<Real> deltas;
  std::vector<std::size_t> band_ks;
  std::optional<std::size_t> steps;
  std::optional<Real> alpha;
  std::optional<std::size_t> examples;
  std::optional<Real> threshold;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config, "Experiment config (JSON)")->check(CLI::ExistingFile);
  cmd->add_option("--out", o.out, "Output directory (overrides config)");
  cmd->add_option("--seed", o.seed, "Master seed (overrides config)");
  cmd->add_option("--jobs", o.jobs, "Worker threads; 0 = all cores");
}

void add_fingerprint_flags(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--method", o.methods, "vanilla, rc, rc-gm or ltrc (repeatable)");
  cmd->add_option("--delta", o.deltas, "Weight perturbation bound(s)");
  cmd->add_option("--band-k", o.band_ks, "High-frequency band size(s) for ltrc");
  cmd->add_option("--steps", o.steps, "Maximum PGD steps");
  cmd->add_option("--alpha", o.alpha, "PGD step size");
  cmd->add_option("--examples", o.examples, "Fingerprints per set");
}

ExperimentConfig resolve(const Overrides& o) {
  ExperimentConfig c = o.config.empty() ? ExperimentConfig{} : load_experiment_config(o.config);
  if (!o.out.empty()) c.out = o.out;
  if (o.seed) c.seed = *o.seed;
  if (o.jobs) c.jobs = *o.jobs;
  if (!o.methods.empty()) {
    c.methods.clear();
    for (const auto& m : o.methods) c.methods.push_back(method_from_string(m));
  }
  if (!o.deltas.empty()) c.deltas = c.ltrc_deltas = o.deltas;
  if (!o.band_ks.empty()) c.band_ks = o.band_ks;
  if (o.steps) c.steps = *o.steps;
  if (o.alpha) c.alpha = *o.alpha;
  if (o.examples) c.examples = *o.examples;
  if (o.threshold) c.threshold = *o.threshold;
  c.validate();
  return c;
}

RunContext context(const Overrides& o, const std::string& sub) {
  RunContext ctx{resolve(o), "cexample " + sub, stderr_log()};
  ctx.log("config hash " + config_hash(ctx.config) + ", output " + ctx.config.out.string());
  return ctx;
}

int print_trends(const RunContext& ctx, const EvaluationReport& report) {
  bool ok = true;
  for (const auto& t : check_trends(report, {.group = ctx.config.group})) {
    std::cout << (t.passed ? "PASS " : "FAIL ") << t.name << ": " << t.detail << "\n";
    ok = ok && t.passed;
  }
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Characteristic-example fingerprinting for small image classifiers"};
  app.require_subcommand(1);
  Overrides o;
  std::string base, set_path, model_path;
  std::size_t saliency_images = 0;

  auto* train = app.add_subcommand("train", "Train base, variant and other-architecture models");
  add_common(train, o);

  auto* prune = app.add_subcommand("prune", "Build the pruned suite from the base model");
  add_common(prune, o);
  prune->add_option("--base", base, "Base checkpoint (default <out>/models/base.ckpt)");

  auto* fingerprint = app.add_subcommand("fingerprint", "Generate one fingerprint set per grid cell");
  add_common(fingerprint, o);
  add_fingerprint_flags(fingerprint, o);
  fingerprint->add_option("--base", base, "Base checkpoint (default <out>/models/base.ckpt)");

  auto* evaluate = app.add_subcommand("evaluate", "Score every set against the model registry");
  add_common(evaluate, o);

  auto* saliency = app.add_subcommand("saliency", "Mean DCT magnitude of input gradients");
  add_common(saliency, o);
  saliency->add_option("--base", base, "Base checkpoint (default <out>/models/base.ckpt)");
  saliency->add_option("--images", saliency_images, "Images to average (default from config)");

  auto* verify = app.add_subcommand("verify", "Claim or reject ownership of a suspect model");
  add_common(verify, o);
  verify->add_option("--set", set_path, "Fingerprint set file")->required();
  verify->add_option("--model", model_path, "Suspect checkpoint")->required();
  verify->add_option("--threshold", o.threshold, "Claim when accuracy >= threshold (percent)");

  auto* report = app.add_subcommand("report", "Run the full pipeline and check the expected trends");
  add_common(report, o);
  add_fingerprint_flags(report, o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (train->parsed()) {
      run_train(context(o, "train"));
    } else if (prune->parsed()) {
      const auto ctx = context(o, "prune");
      run_prune(ctx, base.empty() ? default_base_checkpoint(ctx) : fs::path(base));
    } else if (fingerprint->parsed()) {
      const auto ctx = context(o, "fingerprint");
      run_fingerprint(ctx, base.empty() ? default_base_checkpoint(ctx) : fs::path(base));
    } else if (evaluate->parsed()) {
      const auto ctx = context(o, "evaluate");
      const auto r = run_evaluate(ctx);
      std::cout << report_table(r, ctx.config.group);
      if (!report_identity_holds(r)) {
        std::cerr << "error: robustness != uniqueness + transferability in some cell\n";
        return 2;
      }
    } else if (saliency->parsed()) {
      const auto ctx = context(o, "saliency");
      const std::size_t n = saliency_images ? saliency_images : ctx.config.saliency_images;
      const auto maps = run_saliency(ctx, base.empty() ? default_base_checkpoint(ctx) : fs::path(base), n);
      const auto [low, high] = band_means(maps, 4);
      std::cout << "low-band (i+j<=4) mean " << low << ", high-band mean " << high << "\n";
    } else if (verify->parsed()) {
      const auto ctx = context(o, "verify");
      const auto set = load_set(set_path);
      const auto suspect = load_checkpoint(model_path);
      const Real acc = fingerprint_accuracy(suspect.network, set);
      const Decision d = verify_ownership(suspect.network, set, ctx.config.threshold);
      std::cout << to_string(d) << ": fingerprint accuracy " << acc << "% (threshold " << ctx.config.threshold
                << "%)\n";
      return d == Decision::kClaim ? 0 : 1;
    } else if (report->parsed()) {
      const auto ctx = context(o, "report");
      const auto r = run_pipeline(ctx);
      std::cout << report_table(r, ctx.config.group);
      return print_trends(ctx, r);
    }
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return 2;
  }
  return 0;
}
