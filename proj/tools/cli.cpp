#include "cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <ostream>
#include <random>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "mocha/error.hpp"
#include "mocha/evaluation.hpp"
#include "mocha/intensity.hpp"
#include "mocha/io.hpp"
#include "mocha/likelihood.hpp"
#include "mocha/optimizer.hpp"
#include "mocha/simulation.hpp"

namespace mocha::cli {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

int exit_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument:
      return kUsage;
    case ErrorCode::NumericOverflow:
    case ErrorCode::NonFiniteLoss:
    case ErrorCode::Diverged:
    case ErrorCode::BoundViolation:
      return kNumeric;
    default:
      return kData;
  }
}

// Hyperparameter flags. Only flags given on the command line (or in the config
// file) override the base values, so checkpoint settings survive otherwise.
class HyperFlags {
 public:
  void add(CLI::App& app, bool shape) {
    if (shape) {
      bind(app, "--K", values_.K, "number of event types (default: inferred from the corpus)",
           [](HyperParameters& hp, const HyperParameters& v) { hp.K = v.K; });
      bind(app, "--d", values_.d, "embedding half-dimension",
           [](HyperParameters& hp, const HyperParameters& v) { hp.d = v.d; });
      bind(app, "--d-attn", values_.d_attn, "attention projection dimension",
           [](HyperParameters& hp, const HyperParameters& v) { hp.d_attn = v.d_attn; });
      bind(app, "--hidden", values_.hidden, "decay MLP hidden width",
           [](HyperParameters& hp, const HyperParameters& v) { hp.hidden = v.hidden; });
      bind(app, "--L", values_.L, "maximum causal order (default: min(3, K-1))",
           [](HyperParameters& hp, const HyperParameters& v) { hp.L = v.L; });
      bind(app, "--variant", variant_, "HAWKES_UNI, HAWKES_MULTI, MULTI_ORDER_STATIC or FULL_DYNAMIC",
           [this](HyperParameters& hp, const HyperParameters&) {
             const auto v = parse_variant(variant_);
             if (!v) throw Error(ErrorCode::InvalidArgument, "unknown variant " + variant_);
             hp.variant = *v;
           });
      bind(app, "--gamma-acyclic", values_.gamma_acyclic, "acyclicity penalty weight",
           [](HyperParameters& hp, const HyperParameters& v) { hp.gamma_acyclic = v.gamma_acyclic; });
      bind(app, "--gamma-sparse", values_.gamma_sparse, "sparsity penalty weight",
           [](HyperParameters& hp, const HyperParameters& v) { hp.gamma_sparse = v.gamma_sparse; });
      bind(app, "--time-scale", values_.time_scale, "multiply file times by this factor",
           [](HyperParameters& hp, const HyperParameters& v) { hp.time_scale = v.time_scale; });
      auto* opt = app.add_flag("--auto-time-scale", auto_scale_,
                               "rescale times so the mean inter-event gap is 1");
      opt->group("Model");
    }
    bind(app, "--beta", values_.beta, "edge activation sharpness",
         [](HyperParameters& hp, const HyperParameters& v) { hp.beta = v.beta; });
    bind(app, "--theta", values_.theta, "edge threshold",
         [](HyperParameters& hp, const HyperParameters& v) { hp.theta = v.theta; });
    bind(app, "--substeps", values_.substeps, "trapezoid sub-intervals per inter-event interval",
         [](HyperParameters& hp, const HyperParameters& v) { hp.substeps = v.substeps; });
    bind(app, "--epsilon", values_.epsilon, "intensity floor",
         [](HyperParameters& hp, const HyperParameters& v) { hp.epsilon = v.epsilon; });
    bind(app, "--max-history", values_.max_history, "history window in events (0 = all)",
         [](HyperParameters& hp, const HyperParameters& v) { hp.max_history = v.max_history; });
    bind_flag(app, "--frozen-weights", values_.frozen_weights,
              "hold W fixed across each inter-event interval",
              [](HyperParameters& hp, const HyperParameters& v) { hp.frozen_weights = v.frozen_weights; });
    bind_flag(app, "--dag-mask", values_.dag_mask, "mask sub-threshold edges at inference",
              [](HyperParameters& hp, const HyperParameters& v) { hp.dag_mask = v.dag_mask; });
  }

  [[nodiscard]] bool given(const std::string& name) const {
    for (const auto& b : bindings_) {
      if (b.option->get_name() == name && b.option->count() > 0) return true;
    }
    return false;
  }
  [[nodiscard]] bool auto_time_scale() const noexcept { return auto_scale_; }

  void apply(HyperParameters& hp) const {
    for (const auto& b : bindings_) {
      if (b.option->count() > 0) b.apply(hp, values_);
    }
  }

 private:
  using Setter = std::function<void(HyperParameters&, const HyperParameters&)>;
  struct Binding {
    CLI::Option* option;
    Setter apply;
  };

  template <class T>
  void bind(CLI::App& app, const std::string& name, T& target, const std::string& help, Setter s) {
    auto* opt = app.add_option(name, target, help);
    opt->group("Model");
    bindings_.push_back({opt, std::move(s)});
  }
  void bind_flag(CLI::App& app, const std::string& name, bool& target, const std::string& help,
                 Setter s) {
    auto* opt = app.add_flag(name, target, help);
    opt->group("Model");
    bindings_.push_back({opt, std::move(s)});
  }

  HyperParameters values_;
  std::string variant_;
  bool auto_scale_{false};
  std::vector<Binding> bindings_;
};

std::vector<EventSequence> scale_corpus(const std::vector<EventSequence>& corpus, double scale) {
  if (scale == 1.0) return corpus;
  return rescale_time(corpus, scale);
}

void check_corpus(std::span<const EventSequence> corpus, int K) {
  if (corpus.empty()) throw Error(ErrorCode::EmptySequence, "corpus has no sequences");
  for (const auto& seq : corpus) validate_sequence(seq, K);
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  return out;
}

// ---------------------------------------------------------------------------

struct TrainArgs {
  std::string corpus, checkpoint, log, init;
  TrainConfig config;
  std::string optimizer{"adam"};
  std::uint64_t init_seed{0};
  bool init_seed_given{false};
};

int cmd_train(const TrainArgs& a, const HyperFlags& flags, std::ostream& out) {
  const auto raw = read_corpus(fs::path(a.corpus));
  HyperParameters hp;
  ModelParameters init;
  if (!a.init.empty()) {
    Checkpoint ck = load_checkpoint(fs::path(a.init));
    hp = ck.hp;
    flags.apply(hp);
    init = std::move(ck.params);
  } else {
    const int K = flags.given("--K") ? 0 : infer_type_count(raw);
    hp = default_hyperparameters(K > 0 ? K : 2);
    flags.apply(hp);
    if (!flags.given("--L")) hp.L = std::min(3, hp.K - 1);
  }
  if (flags.auto_time_scale()) {
    const double gap = mean_inter_event_gap(raw);
    if (gap > 0.0) hp.time_scale = 1.0 / gap;
  }
  hp.validate();
  const auto corpus = scale_corpus(raw, hp.time_scale);
  check_corpus(corpus, hp.K);

  TrainConfig cfg = a.config;
  const auto kind = parse_optimizer(a.optimizer);
  if (!kind) throw Error(ErrorCode::InvalidArgument, "unknown optimizer " + a.optimizer);
  cfg.optimizer = *kind;
  cfg.validate();
  if (a.init.empty()) init = init_parameters(hp, a.init_seed_given ? a.init_seed : cfg.seed);
  check_shapes(init, hp);

  std::ofstream log_file;
  if (!a.log.empty()) log_file = open_out(a.log);
  const FitResult result = fit(corpus, std::move(init), hp, cfg, [&](const EpochRecord& r) {
    if (log_file.is_open()) {
      write_training_record(log_file, r);
      log_file.flush();
    }
  });
  save_checkpoint(fs::path(a.checkpoint), result.params, hp);

  const auto& last = result.log.back();
  out << json{{"best_epoch", result.best_epoch},
              {"early_stopped", result.early_stopped},
              {"nll", last.loss.nll},
              {"acyclic", last.loss.acyclic},
              {"sparse", last.loss.sparse},
              {"total", last.loss.total},
              {"K", hp.K},
              {"L", hp.L},
              {"variant", std::string(to_string(hp.variant))},
              {"time_scale", hp.time_scale}}
             .dump()
      << '\n';
  return kOk;
}

struct EvalArgs {
  std::string checkpoint, corpus, report;
  double horizon_cap{0.0};
  int grid{400};
};

int cmd_eval(const EvalArgs& a, const HyperFlags& flags, std::ostream& out) {
  Checkpoint ck = load_checkpoint(fs::path(a.checkpoint));
  flags.apply(ck.hp);
  ck.hp.validate();
  const auto corpus = scale_corpus(read_corpus(fs::path(a.corpus)), ck.hp.time_scale);
  check_corpus(corpus, ck.hp.K);
  PredictionOptions options;
  options.horizon_cap = a.horizon_cap * ck.hp.time_scale;
  options.grid = a.grid;
  Metrics m = evaluate_metrics(corpus, ck.params, ck.hp, options);
  // Report prediction error in file units.
  m.rmse /= ck.hp.time_scale;
  if (!a.report.empty()) {
    auto file = open_out(a.report);
    write_metrics(file, m);
  }
  write_metrics(out, m);
  return kOk;
}

struct SimulateArgs {
  std::string checkpoint, generator, out;
  double horizon{10.0};
  std::size_t count{1};
  std::uint64_t seed{0};
};

int cmd_simulate(const SimulateArgs& a, const HyperFlags& flags, std::ostream& out) {
  if (a.checkpoint.empty() == a.generator.empty()) {
    throw Error(ErrorCode::InvalidArgument, "give exactly one of --checkpoint or --generator");
  }
  std::vector<EventSequence> corpus;
  if (!a.generator.empty()) {
    corpus = simulate_corpus(read_planted(fs::path(a.generator)), a.count, a.horizon, a.seed);
  } else {
    Checkpoint ck = load_checkpoint(fs::path(a.checkpoint));
    flags.apply(ck.hp);
    ck.hp.validate();
    corpus = simulate_corpus(ck.params, ck.hp, a.count, a.horizon * ck.hp.time_scale, a.seed);
    if (ck.hp.time_scale != 1.0) {
      corpus = rescale_time(corpus, 1.0 / ck.hp.time_scale);
    }
  }
  if (a.out.empty()) {
    write_corpus(out, corpus);
  } else {
    write_corpus(fs::path(a.out), corpus);
  }
  return kOk;
}

struct GraphsArgs {
  std::string checkpoint, corpus, out, dot_dir, seq;
  std::vector<double> times;
};

int cmd_graphs(const GraphsArgs& a, const HyperFlags& flags, std::ostream& out) {
  Checkpoint ck = load_checkpoint(fs::path(a.checkpoint));
  flags.apply(ck.hp);
  ck.hp.validate();
  const HyperParameters& hp = ck.hp;
  const auto corpus = scale_corpus(read_corpus(fs::path(a.corpus)), hp.time_scale);
  check_corpus(corpus, hp.K);
  HyperParameters probe = hp;
  probe.dag_mask = false;

  std::vector<GraphSnapshot> snapshots;
  for (const auto& seq : corpus) {
    if (!a.seq.empty() && seq.id != a.seq) continue;
    std::vector<double> times;
    if (a.times.empty()) {
      for (const auto& e : seq.events) times.push_back(e.t);
    } else {
      for (double t : a.times) {
        const double scaled = t * hp.time_scale;
        if (scaled >= 0.0 && scaled <= seq.horizon) times.push_back(scaled);
      }
    }
    for (double t : times) {
      const auto end = std::lower_bound(seq.events.begin(), seq.events.end(), t,
                                        [](const Event& e, double x) { return e.t < x; });
      StructuralWeights Wt =
          query_weights(std::span<const Event>(seq.events.begin(), end), t, ck.params, probe);
      Wt.t = t / hp.time_scale;
      GraphSnapshot snap = make_snapshot(Wt, hp);
      snap.seq_id = seq.id;
      snapshots.push_back(std::move(snap));
    }
  }
  if (!a.seq.empty() && snapshots.empty()) {
    throw Error(ErrorCode::InvalidArgument, "no snapshots for sequence " + a.seq);
  }
  if (a.out.empty()) {
    write_graph_snapshots(out, snapshots, hp);
  } else {
    auto file = open_out(a.out);
    write_graph_snapshots(file, snapshots, hp);
  }
  if (!a.dot_dir.empty()) {
    fs::create_directories(a.dot_dir);
    std::size_t index = 0;
    for (const auto& s : snapshots) {
      std::ostringstream name;
      name << "graph_" << std::setw(6) << std::setfill('0') << index++ << ".dot";
      auto file = open_out(fs::path(a.dot_dir) / name.str());
      write_dot(file, s, hp);
    }
  }
  return kOk;
}

struct MatchArgs {
  std::string checkpoint, corpus, paths, out;
  int terminal{-1};
};

int cmd_match(const MatchArgs& a, const HyperFlags& flags, std::ostream& out) {
  Checkpoint ck = load_checkpoint(fs::path(a.checkpoint));
  flags.apply(ck.hp);
  ck.hp.validate();
  const auto corpus = scale_corpus(read_corpus(fs::path(a.corpus)), ck.hp.time_scale);
  check_corpus(corpus, ck.hp.K);
  const auto paths = read_paths(fs::path(a.paths));
  std::optional<int> terminal;
  if (a.terminal >= 0) terminal = a.terminal;
  const auto matches = path_matching_rate(corpus, ck.params, ck.hp, paths, terminal);
  if (!a.out.empty()) {
    auto file = open_out(a.out);
    write_path_matches(file, matches);
  }
  write_path_matches(out, matches);
  return kOk;
}

struct GradcheckArgs {
  std::uint64_t seed{0};
  int sequences{3};
  int max_events{6};
  double horizon{5.0};
  double step{1e-4};
  double tolerance{1e-4};
};

int cmd_gradcheck(const GradcheckArgs& a, const HyperFlags& flags, std::ostream& out) {
  const int K = flags.given("--K") ? 0 : 3;
  HyperParameters hp = default_hyperparameters(K > 0 ? K : 3);
  flags.apply(hp);
  if (!flags.given("--L")) hp.L = std::min(2, hp.K - 1);
  hp.validate();
  if (a.sequences < 1 || a.max_events < 1 || !(a.horizon > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "gradcheck needs positive sizes");
  }

  std::mt19937_64 rng(a.seed);
  std::uniform_real_distribution<double> time(0.0, a.horizon);
  std::uniform_int_distribution<int> type(0, hp.K - 1);
  std::uniform_int_distribution<int> count(1, a.max_events);
  std::vector<EventSequence> batch(static_cast<std::size_t>(a.sequences));
  for (std::size_t s = 0; s < batch.size(); ++s) {
    auto& seq = batch[s];
    seq.id = "toy-" + std::to_string(s);
    seq.horizon = a.horizon;
    std::vector<double> ts(static_cast<std::size_t>(count(rng)));
    for (double& t : ts) t = time(rng);
    std::sort(ts.begin(), ts.end());
    ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
    for (double t : ts) seq.events.push_back({t, type(rng)});
  }
  ModelParameters params = init_parameters(hp, a.seed);
  // Move off the symmetric initial point so every tensor carries signal.
  std::normal_distribution<double> jitter(0.0, 0.1);
  visit_tensors(params, [&](std::string_view, Eigen::Index, Eigen::Index, std::span<double> data) {
    for (double& x : data) x += jitter(rng);
  });

  const GradientCheckReport report = check_gradients(batch, params, hp, a.step);
  json tensors = json::array();
  for (const auto& t : report.tensors) {
    tensors.push_back({{"tensor", t.name},
                       {"relative_error", t.relative_error},
                       {"analytic_norm", t.analytic_norm},
                       {"numeric_norm", t.numeric_norm}});
  }
  const bool ok = report.passed(a.tolerance);
  out << json{{"passed", ok}, {"worst", report.worst}, {"tolerance", a.tolerance},
              {"refined", report.refined},
              {"tensors", std::move(tensors)}}
             .dump(2)
      << '\n';
  return ok ? kOk : kNumeric;
}

struct GenArgs {
  std::string generator, out, edges_out, paths_out;
  double horizon{10.0};
  std::size_t count{100};
  std::uint64_t seed{0};
};

int cmd_gen(const GenArgs& a, std::ostream& out) {
  const PlantedGenerator g = read_planted(fs::path(a.generator));
  const auto corpus = simulate_corpus(g, a.count, a.horizon, a.seed);
  if (a.out.empty()) {
    write_corpus(out, corpus);
  } else {
    write_corpus(fs::path(a.out), corpus);
  }
  if (!a.edges_out.empty()) {
    auto file = open_out(a.edges_out);
    write_edges(file, g.edges);
  }
  if (!a.paths_out.empty()) {
    std::vector<GroundTruthPath> paths;
    for (const auto& p : g.paths) paths.push_back({p.types, p.label});
    auto file = open_out(a.paths_out);
    write_paths(file, paths);
  }
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multi-order dynamic causal point process models"};
  app.name(args.empty() ? "mocha" : fs::path(args.front()).filename().string());
  app.set_config("--config", "", "TOML configuration file; sections name subcommands");
  app.require_subcommand(1);

  TrainArgs train;
  HyperFlags train_flags;
  auto* train_cmd = app.add_subcommand("train", "fit a model to a corpus");
  train_cmd->add_option("--corpus", train.corpus, "JSONL corpus")->required();
  train_cmd->add_option("--checkpoint", train.checkpoint, "output checkpoint")->required();
  train_cmd->add_option("--log", train.log, "JSONL training log");
  train_cmd->add_option("--init", train.init, "start from this checkpoint");
  train_cmd->add_option("--lr", train.config.learning_rate, "learning rate");
  train_cmd->add_option("--epochs", train.config.max_epochs, "maximum epochs");
  train_cmd->add_option("--batch-size", train.config.batch_size, "sequences per step");
  train_cmd->add_option("--seed", train.config.seed, "shuffling and split seed");
  auto* init_seed = train_cmd->add_option("--init-seed", train.init_seed,
                                          "parameter initialisation seed (default: --seed)");
  train_cmd->add_option("--optimizer", train.optimizer, "adam or sgd");
  train_cmd->add_option("--patience", train.config.patience, "early stopping patience");
  train_cmd->add_option("--holdout", train.config.holdout_fraction, "held-out fraction");
  train_flags.add(*train_cmd, true);

  EvalArgs eval;
  HyperFlags eval_flags;
  auto* eval_cmd = app.add_subcommand("eval", "predictive metrics of a checkpoint");
  eval_cmd->add_option("--checkpoint", eval.checkpoint, "model checkpoint")->required();
  eval_cmd->add_option("--corpus", eval.corpus, "JSONL corpus")->required();
  eval_cmd->add_option("--report", eval.report, "write the summary here as well");
  eval_cmd->add_option("--horizon-cap", eval.horizon_cap,
                       "prediction window in file units (default: 20x mean gap)");
  eval_cmd->add_option("--grid", eval.grid, "prediction quadrature points");
  eval_flags.add(*eval_cmd, false);

  SimulateArgs sim;
  HyperFlags sim_flags;
  auto* sim_cmd = app.add_subcommand("simulate", "sample sequences by thinning");
  sim_cmd->add_option("--checkpoint", sim.checkpoint, "model checkpoint");
  sim_cmd->add_option("--generator", sim.generator, "planted generator JSON");
  sim_cmd->add_option("--T", sim.horizon, "horizon in file units");
  sim_cmd->add_option("--count", sim.count, "number of sequences");
  sim_cmd->add_option("--seed", sim.seed, "random seed");
  sim_cmd->add_option("--out", sim.out, "output corpus (default: stdout)");
  sim_flags.add(*sim_cmd, false);

  GraphsArgs graphs;
  HyperFlags graph_flags;
  auto* graphs_cmd = app.add_subcommand("graphs", "causal graph snapshots");
  graphs_cmd->add_option("--checkpoint", graphs.checkpoint, "model checkpoint")->required();
  graphs_cmd->add_option("--corpus", graphs.corpus, "JSONL corpus")->required();
  graphs_cmd->add_option("--times", graphs.times, "probe times (default: every event time)")
      ->delimiter(',');
  graphs_cmd->add_option("--seq", graphs.seq, "only this sequence id");
  graphs_cmd->add_option("--out", graphs.out, "JSONL snapshots (default: stdout)");
  graphs_cmd->add_option("--dot-dir", graphs.dot_dir, "also write one DOT file per snapshot");
  graph_flags.add(*graphs_cmd, false);

  MatchArgs match;
  HyperFlags match_flags;
  auto* match_cmd = app.add_subcommand("match-paths", "causal path matching rates");
  match_cmd->add_option("--checkpoint", match.checkpoint, "model checkpoint")->required();
  match_cmd->add_option("--corpus", match.corpus, "JSONL corpus")->required();
  match_cmd->add_option("--paths", match.paths, "JSONL paths file")->required();
  match_cmd->add_option("--terminal-type", match.terminal,
                        "effect type (default: last type of each path)");
  match_cmd->add_option("--out", match.out, "write rates here as well");
  match_flags.add(*match_cmd, false);

  GradcheckArgs grad;
  HyperFlags grad_flags;
  auto* grad_cmd = app.add_subcommand("gradcheck", "finite-difference gradient verification");
  grad_cmd->add_option("--seed", grad.seed, "random seed");
  grad_cmd->add_option("--sequences", grad.sequences, "toy sequences");
  grad_cmd->add_option("--max-events", grad.max_events, "events per sequence at most");
  grad_cmd->add_option("--T", grad.horizon, "toy horizon");
  grad_cmd->add_option("--step", grad.step, "central difference step");
  grad_cmd->add_option("--tolerance", grad.tolerance, "largest accepted relative error");
  grad_flags.add(*grad_cmd, true);

  GenArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-synthetic", "corpus from a planted generator");
  gen_cmd->add_option("--generator", gen.generator, "planted generator JSON")->required();
  gen_cmd->add_option("--T", gen.horizon, "horizon");
  gen_cmd->add_option("--count", gen.count, "number of sequences");
  gen_cmd->add_option("--seed", gen.seed, "random seed");
  gen_cmd->add_option("--out", gen.out, "output corpus (default: stdout)");
  gen_cmd->add_option("--edges-out", gen.edges_out, "ground-truth edges JSONL");
  gen_cmd->add_option("--paths-out", gen.paths_out, "ground-truth paths JSONL");

  std::vector<std::string> rest(args.begin() + (args.empty() ? 0 : 1), args.end());
  std::reverse(rest.begin(), rest.end());
  try {
    app.parse(rest);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << e.what() << '\n';
    return kUsage;
  }
  train.init_seed_given = init_seed->count() > 0;

  try {
    if (*train_cmd) return cmd_train(train, train_flags, out);
    if (*eval_cmd) return cmd_eval(eval, eval_flags, out);
    if (*sim_cmd) return cmd_simulate(sim, sim_flags, out);
    if (*graphs_cmd) return cmd_graphs(graphs, graph_flags, out);
    if (*match_cmd) return cmd_match(match, match_flags, out);
    if (*grad_cmd) return cmd_gradcheck(grad, grad_flags, out);
    if (*gen_cmd) return cmd_gen(gen, out);
  } catch (const Error& e) {
    err << e.what() << '\n';
    return exit_code(e.code());
  } catch (const std::exception& e) {
    err << e.what() << '\n';
    return kData;
  }
  return kUsage;
}

}  // namespace mocha::cli
