#include "cadgl/cli/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "cadgl/checkpoint.hpp"
#include "cadgl/cli/ablation.hpp"
#include "cadgl/cli/gradcheck_suite.hpp"
#include "cadgl/cli/run_config.hpp"
#include "cadgl/error.hpp"
#include "cadgl/synth.hpp"
#include "cadgl/trainer.hpp"

namespace fs = std::filesystem;

namespace cadgl::cli {

namespace {

constexpr std::uint64_t kTrainEvalSalt = 0x7EA1;
constexpr std::size_t kUnseenCap = 1'000'000;

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  f << text;
  if (!f) throw Error("failed to write " + path.string());
}

Split split_or_config_error(const DDIDataset& dataset, const RunConfig& config) {
  try {
    return split_edges(dataset, config.split_ratios, config.split_seed);
  } catch (const ContractError& e) {
    throw ConfigError(e.what());
  }
}

// Maps library errors onto the exit-code contract.
int guarded(std::ostream& err, const std::function<int()>& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}

// --- synth -----------------------------------------------------------------

struct SynthArgs {
  SynthParams params;
  std::string out = "synthetic";
};

int cmd_synth(const SynthArgs& a, std::ostream& out, std::ostream& err) {
  try {
    validate(a.params);
  } catch (const ContractError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return guarded(err, [&] {
    const DDIDataset dataset = synth_generate(a.params);
    write_synthetic(a.out, dataset, a.params);
    out << synth_meta_json(a.params, dataset);
    return kExitOk;
  });
}

// --- train -----------------------------------------------------------------

struct TrainArgs {
  std::string config;
  std::string out;
  bool no_lcp = false;
  bool no_mcp = false;
};

int cmd_train(const TrainArgs& a, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    RunConfig config = load_run_config(a.config);
    if (a.no_lcp) config.train.use_lcp = false;
    if (a.no_mcp) config.train.use_mcp = false;
    if (!a.out.empty()) config.out_dir = a.out;
    config.train.validate();

    const DDIDataset dataset = load_run_dataset(config);
    const Split split = split_or_config_error(dataset, config);
    const auto effective = to_json(config);

    fs::create_directories(config.out_dir);
    write_text(config.out_dir / "config.json", effective.dump(2) + "\n");
    std::ofstream log(config.out_dir / "metrics.jsonl", std::ios::binary);
    if (!log) throw Error("cannot open metrics log in " + config.out_dir.string());

    std::optional<TrainResult> trained;
    try {
      trained = train(dataset, split, config.train, [&](const EpochRecord& r) {
        log << to_json(r).dump() << "\n";
        log.flush();
      });
    } catch (const NumericError& e) {
      err << "error: training aborted: " << e.what() << "\n";
      return static_cast<int>(kExitRuntime);
    }
    TrainResult& result = *trained;

    nlohmann::json metadata;
    metadata["run_config"] = effective;
    metadata["best_epoch"] = result.best_epoch;
    const fs::path ckpt = config.out_dir / "checkpoint.bin";
    save_checkpoint(ckpt, make_checkpoint(result.model, result.optimizer, result.best_epoch,
                                          result.history, metadata));

    nlohmann::ordered_json summary;
    summary["best_epoch"] = result.best_epoch;
    summary["final_train_accuracy"] = result.history.back().train_accuracy;
    if (!split.test.empty()) {
      const MessageGraph graph = build_message_graph(dataset, split.train);
      const auto pairs = labelled_pairs(dataset, split.test, test_negative_seed(config.train));
      summary["test"] = to_json(evaluate(result.model, dataset, graph, pairs));
    }
    summary["checkpoint"] = fs::absolute(ckpt).string();
    summary["metrics_log"] = fs::absolute(config.out_dir / "metrics.jsonl").string();
    summary["effective_config"] = fs::absolute(config.out_dir / "config.json").string();
    out << summary.dump(2) << "\n";
    return static_cast<int>(kExitOk);
  });
}

// --- shared by eval / rank ---------------------------------------------------

struct LoadedRun {
  Checkpoint checkpoint;
  RunConfig config;
  DDIDataset dataset;
  Split split;
};

LoadedRun load_run(const std::string& checkpoint_path, const std::string& edges,
                   const std::string& features) {
  LoadedRun run;
  run.checkpoint = load_checkpoint(checkpoint_path);
  if (!run.checkpoint.metadata.contains("run_config")) {
    throw CheckpointError("checkpoint sidecar has no run_config metadata");
  }
  try {
    run.config = run_config_from_json(run.checkpoint.metadata.at("run_config"));
  } catch (const ConfigError& e) {
    throw CheckpointError(std::string("checkpoint run_config: ") + e.what());
  }
  if (edges.empty() != features.empty()) {
    throw ConfigError("--edges and --features must be given together");
  }
  if (!edges.empty()) {
    run.config.synthetic.reset();
    run.config.edges = edges;
    run.config.features = features;
  }
  run.dataset = load_run_dataset(run.config);
  if (dims_of(run.dataset) != run.checkpoint.dims) {
    const auto& d = run.checkpoint.dims;
    const auto have = dims_of(run.dataset);
    throw CheckpointError(fmt::format(
        "checkpoint/data mismatch: checkpoint expects {} drugs, {} features, {} types; data has "
        "{}, {}, {}",
        d.n_drugs, d.f_dim, d.n_types, have.n_drugs, have.f_dim, have.n_types));
  }
  run.split = split_or_config_error(run.dataset, run.config);
  return run;
}

// --- eval ------------------------------------------------------------------

struct EvalArgs {
  std::string checkpoint;
  std::string edges;
  std::string features;
  std::string split = "test";
  bool positives_only = false;
};

int cmd_eval(const EvalArgs& a, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const LoadedRun run = load_run(a.checkpoint, a.edges, a.features);
    const CadglModel model = model_from_checkpoint(run.checkpoint);
    const TrainConfig& tc = run.config.train;

    std::vector<std::size_t> edges;
    std::uint64_t seed = 0;
    if (a.split == "test") {
      edges = run.split.test;
      seed = test_negative_seed(tc);
    } else if (a.split == "valid") {
      edges = run.split.valid;
      seed = validation_negative_seed(tc);
    } else if (a.split == "train") {
      edges = run.split.train;
      seed = mix_seed(tc.seed, kTrainEvalSalt);
    } else {
      edges.resize(run.dataset.edges().size());
      for (std::size_t i = 0; i < edges.size(); ++i) edges[i] = i;
      seed = mix_seed(tc.seed, kTrainEvalSalt);
    }
    if (edges.empty()) throw ContractError("split '" + a.split + "' has no edges");
    const auto pairs = a.positives_only ? run.dataset.positives(edges)
                                        : labelled_pairs(run.dataset, edges, seed);

    nlohmann::ordered_json echo;
    echo["checkpoint"] = fs::absolute(a.checkpoint).string();
    echo["split"] = a.split;
    echo["positives_only"] = a.positives_only;
    echo["negative_seed"] = seed;
    echo["run_config"] = to_json(run.config);
    err << "effective config: " << echo.dump() << "\n";

    const MessageGraph graph = build_message_graph(run.dataset, run.split.train);
    out << to_json(evaluate(model, run.dataset, graph, pairs)).dump() << "\n";
    return static_cast<int>(kExitOk);
  });
}

// --- rank ------------------------------------------------------------------

struct RankArgs {
  std::string checkpoint;
  std::string edges;
  std::string features;
  std::string candidates;
  bool all_unseen = false;
  std::size_t top = 10;
  std::size_t cap = kUnseenCap;
  std::uint64_t seed = 0;
};

// `drug1<TAB>drug2<TAB>type_label` per line; '#' lines are comments.
std::vector<PairExample> read_candidates(const fs::path& path, const DDIDataset& dataset) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open candidates file " + path.string());
  std::vector<PairExample> out;
  std::string line;
  for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    for (std::string f; std::getline(ss, f, '\t');) fields.push_back(f);
    if (fields.size() != 3) {
      throw ParseError(fmt::format("{}:{}: expected 3 tab-separated fields, got {}",
                                   path.string(), lineno, fields.size()));
    }
    const auto d1 = dataset.drug_index(fields[0]);
    const auto d2 = dataset.drug_index(fields[1]);
    const auto t = dataset.type_index(fields[2]);
    if (!d1 || !d2) {
      throw ReferenceError(fmt::format("{}:{}: unknown drug id '{}'", path.string(), lineno,
                                       d1 ? fields[1] : fields[0]));
    }
    if (!t) {
      throw ReferenceError(
          fmt::format("{}:{}: unknown interaction type '{}'", path.string(), lineno, fields[2]));
    }
    out.push_back({*d1, *d2, *t, 0});
  }
  return out;
}

int cmd_rank(const RankArgs& a, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (a.candidates.empty() == !a.all_unseen) {
      throw ConfigError("give exactly one of --candidates or --all-unseen");
    }
    const LoadedRun run = load_run(a.checkpoint, a.edges, a.features);
    const CadglModel model = model_from_checkpoint(run.checkpoint);

    nlohmann::ordered_json echo;
    echo["checkpoint"] = fs::absolute(a.checkpoint).string();
    if (a.all_unseen) {
      echo["all_unseen"] = true;
      echo["cap"] = a.cap;
      echo["seed"] = a.seed;
    } else {
      echo["candidates"] = fs::absolute(a.candidates).string();
    }
    echo["top"] = a.top;
    err << "effective config: " << echo.dump() << "\n";

    const auto candidates = a.all_unseen ? unseen_candidates(run.dataset, a.cap, a.seed)
                                         : read_candidates(a.candidates, run.dataset);
    const MessageGraph graph = build_message_graph(run.dataset, run.split.train);
    const RankResult ranked = rank_novel(model, run.dataset, graph, candidates, a.top);
    const auto& ids = run.dataset.drug_ids();
    const auto& types = run.dataset.type_labels();
    for (const auto& x : ranked.excluded) {
      err << fmt::format("warning: candidate {}\t{}\t{} is a known interaction; excluded\n",
                         ids[x.d1], ids[x.d2], types[x.type]);
    }
    if (ranked.ranked.empty()) {
      err << "warning: no novel candidates left to rank\n";
      return static_cast<int>(kExitOk);
    }
    out << format_ranking_tsv(run.dataset, ranked.ranked);
    return static_cast<int>(kExitOk);
  });
}

// --- gradcheck -------------------------------------------------------------

struct GradCheckArgs {
  std::string scope = "all";
  double tol = 1e-4;
  double step = 1e-5;
  std::uint64_t seed = 0;
};

int cmd_gradcheck(const GradCheckArgs& a, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    GradCheckOptions options;
    options.tolerance = a.tol;
    options.step = a.step;
    options.seed = a.seed;
    err << fmt::format("effective config: {{\"scope\":\"{}\",\"tol\":{},\"step\":{},\"seed\":{}}}\n",
                       a.scope, a.tol, a.step, a.seed);
    const auto rows = run_gradchecks(a.scope, options);
    out << fmt::format("{:<20} {:<9} {:>7} {:>13}  {}\n", "check", "scope", "coords",
                       "max_rel_err", "status");
    std::vector<std::string> failing;
    for (const auto& r : rows) {
      out << fmt::format("{:<20} {:<9} {:>7} {:>13.3e}  {}\n", r.name, r.scope,
                         r.report.coords_checked, r.report.max_rel_err,
                         r.report.pass ? "pass" : "FAIL");
      if (!r.report.pass) failing.push_back(r.name);
    }
    if (!failing.empty()) {
      std::string names;
      for (const auto& n : failing) names += (names.empty() ? "" : ", ") + n;
      out << fmt::format("{} of {} checks failed: {}\n", failing.size(), rows.size(), names);
      return static_cast<int>(kExitCheckFailed);
    }
    out << fmt::format("all {} checks passed\n", rows.size());
    return static_cast<int>(kExitOk);
  });
}

// --- ablate ----------------------------------------------------------------

struct AblateArgs {
  std::string config;
  std::string out;
  std::size_t seeds = 5;
};

int cmd_ablate(const AblateArgs& a, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (a.seeds < 2) throw ConfigError("--seeds must be at least 2");
    RunConfig config = load_run_config(a.config);
    if (!a.out.empty()) config.out_dir = a.out;
    const DDIDataset dataset = load_run_dataset(config);
    const Split split = split_or_config_error(dataset, config);

    auto effective = to_json(config);
    effective["ablation_seeds"] = a.seeds;
    fs::create_directories(config.out_dir);
    write_text(config.out_dir / "config.json", effective.dump(2) + "\n");

    const AblationReport report = run_ablation(dataset, split, config.train, a.seeds);
    const std::string table = format_ablation_table(report);
    write_text(config.out_dir / "ablation.tsv", table);
    for (const auto& row : report.rows) {
      write_text(config.out_dir / ("curve_" + row.label + ".csv"), curve_csv(row.result));
    }
    out << table;
    for (const auto& w : report.warnings) err << "warning: " << w << "\n";
    return static_cast<int>(kExitOk);
  });
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Context-aware graph VGAE for drug-drug interaction prediction", "cadgl"};
  app.require_subcommand(1);

  SynthArgs synth;
  auto* s = app.add_subcommand("synth", "Write a stochastic-block synthetic dataset");
  s->add_option("--nodes", synth.params.n_drugs, "Number of drugs")->capture_default_str();
  s->add_option("--types", synth.params.n_types, "Number of interaction types")
      ->capture_default_str();
  s->add_option("--blocks", synth.params.n_blocks, "Number of blocks")->capture_default_str();
  s->add_option("--fdim", synth.params.f_dim, "Feature width")->capture_default_str();
  s->add_option("--pin", synth.params.p_in, "Same-block edge probability")->capture_default_str();
  s->add_option("--pout", synth.params.p_out, "Cross-block edge probability")
      ->capture_default_str();
  s->add_option("--seed", synth.params.seed, "Generator seed")->capture_default_str();
  s->add_option("--out", synth.out, "Output directory")->capture_default_str();

  TrainArgs train_args;
  auto* t = app.add_subcommand("train", "Train a model from a run config");
  t->add_option("--config", train_args.config, "Run config JSON")->required();
  t->add_option("--out", train_args.out, "Output directory (overrides out_dir)");
  t->add_flag("--no-lcp", train_args.no_lcp, "Disable the local context processor");
  t->add_flag("--no-mcp", train_args.no_mcp, "Disable the molecular context processor");

  EvalArgs eval_args;
  auto* e = app.add_subcommand("eval", "Evaluate a checkpoint on one split");
  e->add_option("--checkpoint", eval_args.checkpoint, "Checkpoint file")->required();
  e->add_option("--edges", eval_args.edges, "Edges file (default: the training data)");
  e->add_option("--features", eval_args.features, "Features file");
  e->add_option("--split", eval_args.split, "train, valid, test or all")
      ->check(CLI::IsMember({"train", "valid", "test", "all"}))
      ->capture_default_str();
  e->add_flag("--positives-only", eval_args.positives_only, "Skip negative sampling");

  RankArgs rank_args;
  auto* r = app.add_subcommand("rank", "Rank unseen interactions by predicted probability");
  r->add_option("--checkpoint", rank_args.checkpoint, "Checkpoint file")->required();
  r->add_option("--edges", rank_args.edges, "Edges file (default: the training data)");
  r->add_option("--features", rank_args.features, "Features file");
  auto* cand = r->add_option("--candidates", rank_args.candidates,
                             "TSV of drug1, drug2, type_label candidates");
  r->add_flag("--all-unseen", rank_args.all_unseen, "Score every unseen triple (capped)")
      ->excludes(cand);
  r->add_option("--top", rank_args.top, "Rows to print")->capture_default_str();
  r->add_option("--cap", rank_args.cap, "Maximum sampled candidates for --all-unseen")
      ->capture_default_str();
  r->add_option("--seed", rank_args.seed, "Sampling seed for --all-unseen")->capture_default_str();

  GradCheckArgs gc;
  auto* g = app.add_subcommand("gradcheck", "Finite-difference gradient checks");
  g->add_option("--scope", gc.scope, "all, ndtensor, encoder, vgae or loss")
      ->check(CLI::IsMember({"all", "ndtensor", "encoder", "vgae", "loss"}))
      ->capture_default_str();
  g->add_option("--tol", gc.tol, "Relative error tolerance")->capture_default_str();
  g->add_option("--step", gc.step, "Central difference step")->capture_default_str();
  g->add_option("--seed", gc.seed, "Seed for inputs and sampled coordinates")
      ->capture_default_str();

  AblateArgs ablate;
  auto* ab = app.add_subcommand("ablate", "Processor ablation over several seeds");
  ab->add_option("--config", ablate.config, "Run config JSON")->required();
  ab->add_option("--seeds", ablate.seeds, "Runs per configuration")->capture_default_str();
  ab->add_option("--out", ablate.out, "Output directory (overrides out_dir)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& ex) {
    return app.exit(ex, out, err) == 0 ? kExitOk : kExitUsage;
  }

  if (s->parsed()) return cmd_synth(synth, out, err);
  if (t->parsed()) return cmd_train(train_args, out, err);
  if (e->parsed()) return cmd_eval(eval_args, out, err);
  if (r->parsed()) return cmd_rank(rank_args, out, err);
  if (g->parsed()) return cmd_gradcheck(gc, out, err);
  return cmd_ablate(ablate, out, err);
}

}  // namespace cadgl::cli
