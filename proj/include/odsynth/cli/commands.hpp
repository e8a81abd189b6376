#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "odsynth/config/run_config.hpp"
#include "odsynth/core/dataset_io.hpp"
#include "odsynth/core/error.hpp"
#include "odsynth/curriculum/sec.hpp"
#include "odsynth/dedup/feature_hash.hpp"
#include "odsynth/detectors/ensemble.hpp"
#include "odsynth/detectors/reference_learner.hpp"
#include "odsynth/eval/metrics.hpp"
#include "odsynth/eval/protocol.hpp"
#include "odsynth/eval/report.hpp"
#include "odsynth/priors/registry.hpp"

namespace odsynth::cli {

namespace fs = std::filesystem;

// Writes through a temporary file so a crash never leaves a torn file.
inline void write_text_file(const fs::path& p, const std::string& text) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  const fs::path tmp = p.string() + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw DataError("cannot open '" + tmp.string() + "' for writing");
    os << text;
    if (!os) throw DataError("write failed for '" + tmp.string() + "'");
  }
  fs::rename(tmp, p);
}

inline std::string read_text_file(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  if (!is) throw DataError("cannot open '" + p.string() + "'");
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

inline std::string indexed_name(const char* prefix, std::size_t i, const char* ext) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s_%05zu%s", prefix, i, ext);
  return buf;
}

// ---- generate --------------------------------------------------------------

struct GenerateArgs {
  std::optional<std::string> prior;  // unset: mixed mode, arm drawn uniformly
  std::optional<std::string> archetype;
  fs::path out;
};

// Dataset i: arm from seed.child(i, 0) in mixed mode, data from seed.child(i, 1).
inline nlohmann::json cmd_generate(const config::RunConfig& cfg, const GenerateArgs& args) {
  if (args.archetype && !args.prior) throw ConfigError("--archetype requires --prior");
  std::optional<PriorArm> fixed;
  if (args.prior) fixed = parse_arm(*args.prior, args.archetype.value_or(""));
  const SeedPath root(cfg.run.seed);
  const std::size_t n = cfg.generate.count;
  std::vector<std::optional<LabeledDataset>> out(n);
  std::vector<std::string> errors(n);
  detectors::parallel_for(n, cfg.run.jobs, [&](std::size_t i) {
    PriorArm arm;
    if (fixed) {
      arm = *fixed;
    } else {
      Rng rng = root.child(i, 0).rng();
      arm = kDefaultArms[uniform_index(rng, kDefaultArms.size())];
    }
    try {
      out[i] = generate_with_contamination(cfg.priors, arm, cfg.generate.n_inliers, root.child(i, 1));
    } catch (const GenerationStalled& e) {
      errors[i] = e.what();
    }
  });
  nlohmann::json manifest = {{"seed", cfg.run.seed}, {"n_inliers", cfg.generate.n_inliers}, {"datasets", nlohmann::json::array()}};
  nlohmann::json failures = nlohmann::json::array();
  for (std::size_t i = 0; i < n; ++i) {
    if (!out[i]) {
      failures.push_back({{"index", i}, {"error", errors[i]}});
      continue;
    }
    const auto& ds = *out[i];
    const std::string file = indexed_name("dataset", i, ".csv");
    write_dataset(ds, args.out / file);
    manifest["datasets"].push_back({{"index", i},
                                    {"file", file},
                                    {"prior", to_string(ds.meta().prior)},
                                    {"archetype", to_string(ds.meta().archetype)},
                                    {"dim", ds.dim()},
                                    {"n", ds.size()},
                                    {"n_outliers", ds.n_outliers()},
                                    {"seed", ds.meta().seed.to_string()}});
  }
  if (!failures.empty()) manifest["failures"] = failures;
  write_text_file(args.out / "manifest.json", manifest.dump(2) + "\n");
  if (!failures.empty())
    throw GenerationStalled(std::to_string(failures.size()) + " dataset(s) stalled; see manifest.json");
  return manifest;
}

// ---- curriculum ------------------------------------------------------------

inline curriculum::TaskSource curriculum_source(const config::RunConfig& cfg) {
  return curriculum::synthetic_task_source(cfg.priors, cfg.curriculum.n_inliers, cfg.curriculum.context_size);
}

inline curriculum::CategoryState initial_state(const config::RunConfig& cfg) {
  const auto& c = cfg.curriculum;
  return curriculum::CategoryState::make(c.arms, c.bins, c.tau, c.gamma, c.epochs);
}

// Mean held-out AUROC per arm; task i of arm a is drawn from seed.child(a, i)
// with a uniformly chosen bin and dimension.
inline nlohmann::json holdout_auroc(const config::RunConfig& cfg, curriculum::LearnerHandle& learner,
                                    const SeedPath& seed) {
  const auto& c = cfg.curriculum;
  const auto source = curriculum_source(cfg);
  nlohmann::json out = nlohmann::json::object();
  for (std::size_t a = 0; a < c.arms.size(); ++a) {
    std::vector<double> vals(c.holdout_per_arm);
    std::vector<Task> tasks(c.holdout_per_arm, Task{Matrix(), LabeledDataset(Matrix(1, 1), {Label::inlier}, {})});
    detectors::parallel_for(c.holdout_per_arm, cfg.run.jobs, [&](std::size_t i) {
      Rng rng = seed.child(a, i, 0).rng();
      const auto& bin = c.bins[uniform_index(rng, c.bins.size())];
      const auto d = static_cast<std::size_t>(
          uniform_int(rng, static_cast<std::int64_t>(bin.lo), static_cast<std::int64_t>(bin.hi) - 1));
      tasks[i] = source(c.arms[a], d, seed.child(a, i, 1));
    });
    for (std::size_t i = 0; i < c.holdout_per_arm; ++i) {
      const auto p = learner.predict(tasks[i].context, tasks[i].query.features(), seed.child(a, i, 2));
      vals[i] = eval::auroc(p, tasks[i].query.label_ints());
    }
    double m = 0.0;
    for (double v : vals) m += v;
    out[arm_name(c.arms[a])] = {{"mean_auroc", c.holdout_per_arm ? m / static_cast<double>(vals.size()) : 0.0},
                                {"auroc", vals}};
  }
  return out;
}

struct CurriculumResult {
  std::size_t epochs_run = 0;
  nlohmann::json holdout;
};

// Epoch t uses seed.child(1, t); the learner is initialised from seed.child(0)
// and held-out tasks come from seed.child(2). A checkpoint (state + learner)
// is written every `checkpoint_every` epochs and at the end; an existing
// checkpoint in `out` is resumed and the report stream truncated to match.
// `stop_after` ends the run early (as if interrupted) after that many epochs.
inline CurriculumResult cmd_curriculum(const config::RunConfig& cfg, const fs::path& out,
                                       std::optional<std::size_t> stop_after = std::nullopt) {
  const SeedPath root(cfg.run.seed);
  auto state = initial_state(cfg);
  detectors::ReferenceLearner learner(cfg.curriculum.learner, root.child(0));
  auto sec = cfg.curriculum.sec;
  sec.jobs = cfg.run.jobs;
  const auto source = curriculum_source(cfg);
  const fs::path ckpt = out / "checkpoint.json";
  const fs::path reports = out / "reports.jsonl";
  std::string stream;
  if (fs::exists(ckpt)) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(read_text_file(ckpt));
    } catch (const nlohmann::json::exception& e) {
      throw DataError(std::string("malformed checkpoint: ") + e.what());
    }
    if (!j.contains("seed") || j["seed"].get<std::uint64_t>() != cfg.run.seed)
      throw ConfigError("checkpoint in " + out.string() + " was written with a different seed");
    state = curriculum::category_state_from_json(j.at("state"));
    if (state.total_epochs != cfg.curriculum.epochs || !(state.arms == cfg.curriculum.arms) ||
        !(state.bins == cfg.curriculum.bins))
      throw ConfigError("checkpoint layout does not match the configuration");
    learner.restore(j.at("learner"));
    if (fs::exists(reports)) {
      std::istringstream is(read_text_file(reports));
      std::string line;
      for (std::size_t k = 0; k < state.t && std::getline(is, line); ++k) stream += line + "\n";
    }
  }
  auto save = [&] {
    write_text_file(reports, stream);
    const nlohmann::json j = {{"seed", cfg.run.seed}, {"state", curriculum::to_json(state)}, {"learner", learner.snapshot()}};
    write_text_file(ckpt, j.dump() + "\n");
  };
  CurriculumResult res;
  const std::size_t limit = stop_after ? std::min(*stop_after, cfg.curriculum.epochs) : cfg.curriculum.epochs;
  while (state.t < limit) {
    const auto rep = curriculum::run_sec_epoch(state, learner, sec, source, root.child(1, state.t));
    stream += curriculum::to_json(rep).dump() + "\n";
    ++res.epochs_run;
    if (state.t % cfg.curriculum.checkpoint_every == 0) save();
  }
  save();
  if (state.t >= cfg.curriculum.epochs) {
    res.holdout = holdout_auroc(cfg, learner, root.child(2));
    write_text_file(out / "holdout.json", res.holdout.dump(2) + "\n");
  }
  return res;
}

// ---- detect ----------------------------------------------------------------

struct DetectArgs {
  fs::path input;  // one CSV or a directory of CSVs
  eval::Baseline baseline = eval::Baseline::knn;
  fs::path out;
};

inline bool is_native_csv(const fs::path& p) {
  std::ifstream is(p);
  std::string header;
  std::getline(is, header);
  if (!header.empty() && header.back() == '\r') header.pop_back();
  return header.size() >= 10 && header.compare(header.size() - 10, 10, "is_outlier") == 0;
}

inline std::vector<fs::path> list_csv(const fs::path& input) {
  std::vector<fs::path> files;
  if (fs::is_directory(input)) {
    for (const auto& e : fs::directory_iterator(input))
      if (e.is_regular_file() && e.path().extension() == ".csv") files.push_back(e.path());
    std::sort(files.begin(), files.end());
  } else if (fs::is_regular_file(input)) {
    files.push_back(input);
  } else {
    throw DataError("input '" + input.string() + "' does not exist");
  }
  if (files.empty()) throw DataError("no CSV files under '" + input.string() + "'");
  return files;
}

// Per dataset i: a clean context of inliers is split off with seed.child(i, 0)
// and the baseline scores the remaining points with seed.child(i, 1).
inline eval::ScoreTable cmd_detect(const config::RunConfig& cfg, const DetectArgs& args) {
  const auto files = list_csv(args.input);
  const SeedPath root(cfg.run.seed);
  const std::string model = std::string(to_string(args.baseline)) + (cfg.detect.ensemble ? "-ensemble" : "");
  std::vector<std::string> names;
  for (const auto& f : files) names.push_back(f.stem().string());
  eval::ScoreTable auroc_t(names, {model}, eval::Metric::auroc), auprc_t(names, {model}, eval::Metric::auprc);
  for (std::size_t i = 0; i < files.size(); ++i) {
    const auto ds = is_native_csv(files[i]) ? read_dataset(files[i]) : read_external_csv(files[i]);
    const std::size_t n_in = ds.size() - ds.n_outliers();
    const std::size_t n_ctx = cfg.detect.context_size ? cfg.detect.context_size : n_in / 2;
    if (n_ctx == 0 || n_ctx >= n_in) throw DataError(files[i].string() + ": too few inliers for a context split");
    const auto task = split_context(ds, n_ctx, root.child(i, 0));
    std::vector<double> scores;
    const auto scorer = [b = args.baseline](const Matrix& c, const Matrix& q, const SeedPath& s) {
      return eval::baseline_scores(b, c, q, s);
    };
    if (cfg.detect.ensemble)
      scores = detectors::ensemble_score(scorer, task.context, task.query.features(), cfg.ensemble, root.child(i, 1),
                                         cfg.run.jobs);
    else
      scores = scorer(task.context, task.query.features(), root.child(i, 1));
    const auto y = task.query.label_ints();
    std::string text = "dataset_id,model,point_index,score\n";
    for (std::size_t r = 0; r < scores.size(); ++r)
      text += names[i] + "," + model + "," + std::to_string(r) + "," + format_double(scores[r]) + "\n";
    write_text_file(args.out / "scores" / (names[i] + ".csv"), text);
    auroc_t.set(i, 0, eval::auroc(scores, y));
    auprc_t.set(i, 0, eval::auprc(scores, y));
  }
  std::ostringstream os;
  auroc_t.to_csv(os);
  std::ostringstream os2;
  auprc_t.to_csv(os2);
  std::string table = os.str();
  table += os2.str().substr(os2.str().find('\n') + 1);
  write_text_file(args.out / "score_table.csv", table);
  return auroc_t;
}

// ---- evaluate --------------------------------------------------------------

struct EvaluateArgs {
  fs::path table;
  eval::Metric metric = eval::Metric::auroc;
  std::optional<std::string> reference;
  fs::path out;
};

inline eval::EvalReport cmd_evaluate(const config::RunConfig& cfg, const EvaluateArgs& args) {
  auto t = eval::ScoreTable::from_csv_file(args.table, args.metric);
  auto opt = cfg.evaluate;
  opt.seed = cfg.run.seed;
  opt.elo.seed = cfg.run.seed;
  if (args.reference) opt.reference = args.reference;
  const auto rep = eval::evaluate_table(t, opt);
  write_text_file(args.out / "report.json", eval::to_json(rep).dump(2) + "\n");
  write_text_file(args.out / "report.txt", eval::format_text(rep));
  return rep;
}

// ---- dedup -----------------------------------------------------------------

struct DedupResult {
  nlohmann::json groups;
  std::vector<std::string> warnings;
};

inline DedupResult cmd_dedup(const config::RunConfig& cfg, const fs::path& dir, const fs::path& out) {
  if (!fs::is_directory(dir)) throw DataError("'" + dir.string() + "' is not a directory");
  const auto files = list_csv(dir);
  DedupResult res;
  std::vector<dedup::DatasetHash> hashes;
  for (const auto& f : files) {
    const auto cols = dedup::read_numeric_columns(f);
    for (const auto& s : cols.skipped) res.warnings.push_back(f.filename().string() + ": skipped non-numeric column " + s);
    hashes.push_back(dedup::dataset_hash(cols.values));
  }
  const auto groups = dedup::conflict_groups(hashes, cfg.dedup.tolerance);
  res.groups = nlohmann::json::array();
  nlohmann::json keep = nlohmann::json::array();
  for (const auto& g : groups) {
    nlohmann::json members = nlohmann::json::array();
    for (auto i : g) members.push_back(files[i].filename().string());
    keep.push_back(members[0]);
    if (g.size() > 1) res.groups.push_back({{"representative", members[0]}, {"members", members}});
  }
  const nlohmann::json j = {{"tolerance", cfg.dedup.tolerance},
                            {"n_datasets", files.size()},
                            {"duplicate_groups", res.groups},
                            {"keep", keep},
                            {"warnings", res.warnings}};
  write_text_file(out / "dedup.json", j.dump(2) + "\n");
  return res;
}

}  // namespace odsynth::cli
