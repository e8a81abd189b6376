#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "odsynth/cli/commands.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::size_t> jobs;
};

odsynth::config::RunConfig load(const Common& c) {
  auto cfg = c.config.empty() ? odsynth::config::RunConfig{} : odsynth::config::load_run_config(c.config);
  if (c.seed) cfg.run.seed = *c.seed;
  if (c.out) cfg.run.out = *c.out;
  if (c.jobs) cfg.run.jobs = *c.jobs;
  cfg.validate();
  return cfg;
}

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config, "run configuration file (key = value sections)");
  app->add_option("--seed", c.seed, "master seed (overrides run.seed)");
  app->add_option("--out", c.out, "output directory (overrides run.out)");
  app->add_option("--jobs", c.jobs, "worker threads; outputs do not depend on it")->check(CLI::PositiveNumber);
}

}  // namespace

int main(int argc, char** argv) {
  using namespace odsynth;
  CLI::App app{"Synthetic outlier-detection data, curriculum training and evaluation"};
  app.require_subcommand(1);

  Common common;
  std::optional<std::string> prior, archetype, baseline;
  std::string metric = "auroc";
  std::string input;

  auto* gen = app.add_subcommand("generate", "write synthetic labeled datasets and a manifest");
  add_common(gen, common);
  gen->add_option("--prior", prior, "gmm, scm or copula (default: uniform mix of all arms)");
  gen->add_option("--archetype", archetype, "outlier archetype for the chosen prior");

  auto* cur = app.add_subcommand("curriculum", "run curriculum epochs with checkpoints; resumes if a checkpoint exists");
  add_common(cur, common);

  auto* det = app.add_subcommand("detect", "score datasets with a baseline detector");
  add_common(det, common);
  det->add_option("input", input, "dataset CSV or directory of CSVs")->required();
  det->add_option("--baseline", baseline, "knn or iforest (default knn)");

  auto* evl = app.add_subcommand("evaluate", "ranking metrics and paired tests for a score table");
  add_common(evl, common);
  evl->add_option("input", input, "score table CSV (dataset,model,metric,value)")->required();
  evl->add_option("--metric", metric, "auroc or auprc")->check(CLI::IsMember({"auroc", "auprc"}));
  evl->add_option("--baseline", baseline, "reference model compared against every other row");

  auto* ded = app.add_subcommand("dedup", "group datasets whose feature hashes collide");
  add_common(ded, common);
  ded->add_option("input", input, "directory of dataset CSVs")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    const auto cfg = load(common);
    const std::filesystem::path out = cfg.run.out;
    if (gen->parsed()) {
      const auto m = cli::cmd_generate(cfg, {prior, archetype, out});
      std::cout << "wrote " << m["datasets"].size() << " datasets to " << out.string() << "\n";
    } else if (cur->parsed()) {
      const auto r = cli::cmd_curriculum(cfg, out);
      std::cout << "ran " << r.epochs_run << " epochs; held-out AUROC per arm:\n";
      for (const auto& [arm, v] : r.holdout.items()) std::cout << "  " << arm << " " << v["mean_auroc"].get<double>() << "\n";
    } else if (det->parsed()) {
      const auto b = eval::parse_baseline(baseline.value_or("knn"));
      const auto t = cli::cmd_detect(cfg, {input, b, out});
      std::cout << "scored " << t.n_datasets() << " dataset(s); table at " << (out / "score_table.csv").string() << "\n";
    } else if (evl->parsed()) {
      const auto rep = cli::cmd_evaluate(cfg, {input, eval::parse_metric(metric), baseline, out});
      std::cout << eval::format_text(rep);
    } else if (ded->parsed()) {
      const auto r = cli::cmd_dedup(cfg, input, out);
      for (const auto& w : r.warnings) std::cerr << "warning: " << w << "\n";
      std::cout << r.groups.size() << " duplicate group(s)\n";
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const Error& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  }
  return 0;
}
