#include "rpl/cli/cli.hpp"

#include "rpl/datasets.hpp"
#include "rpl/error.hpp"
#include "rpl/network.hpp"
#include "rpl/retrieval.hpp"
#include "rpl/rng.hpp"
#include "rpl/text_io.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>

namespace rpl::cli {
namespace {

namespace fs = std::filesystem;

constexpr const char* kVersion = "0.1.0";

// Raised for bad input files and inconsistent arguments; maps to kUsage.
class UsageError : public Error {
 public:
  using Error::Error;
};

const std::vector<std::string> kPhiNames = {"dot", "cosine", "covariance", "rbf"};
const std::vector<std::string> kMaskNames = {"none", "topk", "sigmoid", "linear", "gaussian"};
const std::vector<std::string> kDiscrepancyNames = {"mse", "abs", "kl"};
const std::vector<std::string> kActivationNames = {"tanh", "relu", "identity"};

// Flags shared by several subcommands, bound before parsing and resolved
// into RunConfig afterwards.
struct Flags {
  std::string phi = "dot";
  double gamma = 1.0;
  double norm_upper = 0.0;
  double norm_lower = 0.0;
  std::string discrepancy = "mse";
  std::string mask = "none";
  std::size_t top_k = 0;
  double alpha = 1.0;
  bool include_diagonal = true;
  std::size_t batch_size = 128;
  std::size_t epochs = 300;
  double lr = 1e-3;
  std::string optimizer = "adam";
  std::string loss_scale = "mean";
  bool no_shuffle = false;
  double early_stop_tol = 0.0;
  bool global_topk = false;
  std::size_t m = 0;
  double delta = 0.05;
  double entry_bound = 0.0;
  std::size_t probes = 1000;
  double step = 0.01;
  double noise = 0.0;

  CLI::Option* gamma_opt = nullptr;
  CLI::Option* norm_upper_opt = nullptr;
  CLI::Option* norm_lower_opt = nullptr;
  CLI::Option* include_diagonal_opt = nullptr;
  CLI::Option* early_stop_opt = nullptr;
  CLI::Option* m_opt = nullptr;
  CLI::Option* entry_bound_opt = nullptr;
  CLI::Option* noise_opt = nullptr;
};

void add_relationship_flags(CLI::App& app, Flags& f) {
  app.add_option("--phi", f.phi, "Relationship function")->check(CLI::IsMember(kPhiNames))->capture_default_str();
  f.gamma_opt = app.add_option("--gamma", f.gamma, "RBF bandwidth (required for rbf)")->check(CLI::PositiveNumber);
  f.norm_upper_opt = app.add_option("--norm-upper", f.norm_upper, "Row norm bound R")->check(CLI::PositiveNumber);
  f.norm_lower_opt = app.add_option("--norm-lower", f.norm_lower, "Row norm bound R_min")->check(CLI::PositiveNumber);
}

void add_loss_flags(CLI::App& app, Flags& f) {
  app.add_option("--discrepancy", f.discrepancy)->check(CLI::IsMember(kDiscrepancyNames))->capture_default_str();
  app.add_option("--mask", f.mask)->check(CLI::IsMember(kMaskNames))->capture_default_str();
  app.add_option("--top-k", f.top_k, "Entries kept by the topk mask");
  app.add_option("--alpha", f.alpha, "Sigmoid mask sharpness")->capture_default_str();
  f.include_diagonal_opt = app.add_option("--include-diagonal", f.include_diagonal,
                                          "Weight the diagonal of R (default depends on phi)");
}

void add_train_flags(CLI::App& app, Flags& f) {
  app.add_option("--batch-size", f.batch_size)->capture_default_str();
  app.add_option("--epochs", f.epochs)->capture_default_str();
  app.add_option("--lr", f.lr, "Learning rate")->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("--optimizer", f.optimizer)->check(CLI::IsMember({"sgd", "adam"}))->capture_default_str();
  app.add_option("--loss-scale", f.loss_scale)->check(CLI::IsMember({"sum", "mean"}))->capture_default_str();
  app.add_flag("--no-shuffle", f.no_shuffle, "Keep batch order fixed");
  f.early_stop_opt = app.add_option("--early-stop-tol", f.early_stop_tol)->check(CLI::PositiveNumber);
  app.add_flag("--global-topk", f.global_topk, "Select the topk mask once on the full data");
}

void add_audit_flags(CLI::App& app, Flags& f) {
  f.m_opt = app.add_option("--m", f.m, "Sampled entries for the Serfling estimate (default n^2/4)");
  app.add_option("--delta", f.delta, "Serfling confidence parameter")->check(CLI::Range(0.0, 1.0))->capture_default_str();
  f.entry_bound_opt = app.add_option("--entry-bound", f.entry_bound, "A-priori bound M on |Delta_ij|")
                          ->check(CLI::PositiveNumber);
  app.add_option("--probes", f.probes, "Kernel sensitivity probes")->capture_default_str();
  app.add_option("--probe-step", f.step, "Perturbation size of the sensitivity probes")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
}

void resolve(const Flags& f, RunConfig& cfg) {
  cfg.relationship.kind = kernels::relationship_kind_from_string(f.phi);
  if (f.gamma_opt && f.gamma_opt->count()) cfg.relationship.gamma = f.gamma;
  if (f.norm_upper_opt && f.norm_upper_opt->count()) cfg.relationship.norm_upper = f.norm_upper;
  if (f.norm_lower_opt && f.norm_lower_opt->count()) cfg.relationship.norm_lower = f.norm_lower;

  cfg.loss.discrepancy = loss::discrepancy_from_string(f.discrepancy);
  cfg.loss.masking = loss::masking_from_string(f.mask);
  cfg.loss.top_k = f.top_k;
  cfg.loss.alpha = f.alpha;
  if (f.include_diagonal_opt && f.include_diagonal_opt->count()) {
    cfg.loss.include_diagonal = f.include_diagonal;
  } else {
    cfg.loss.include_diagonal = loss::include_diagonal_for(cfg.loss, cfg.relationship.kind);
  }

  cfg.train.batch_size = f.batch_size;
  cfg.train.max_epochs = f.epochs;
  cfg.train.learning_rate = f.lr;
  cfg.train.optimizer = train::optimizer_from_string(f.optimizer);
  cfg.train.loss_scale = train::loss_scale_from_string(f.loss_scale);
  cfg.train.shuffle = !f.no_shuffle;
  if (f.early_stop_opt && f.early_stop_opt->count()) cfg.train.early_stop_tol = f.early_stop_tol;
  cfg.train.global_topk_mask = f.global_topk;
  cfg.train.seed = derive_seed(cfg.seed, seed_stream::kShuffle);

  if (f.m_opt && f.m_opt->count()) cfg.audit.m = f.m;
  cfg.audit.delta = f.delta;
  if (f.entry_bound_opt && f.entry_bound_opt->count()) cfg.audit.entry_bound = f.entry_bound;
  cfg.audit.sensitivity_probes = f.probes;
  cfg.audit.sensitivity_step = f.step;
  cfg.audit.seed = cfg.seed;
  if (f.noise_opt && f.noise_opt->count()) cfg.noise = f.noise;
}

Matrix load_input(const std::string& path, const char* what) {
  if (!fs::exists(path)) throw UsageError(std::string(what) + " file not found: " + path);
  return data::load_embeddings(path);
}

nn::MlpParams load_model(const std::string& path) {
  if (!fs::exists(path)) throw UsageError("checkpoint not found: " + path);
  return nn::load_checkpoint(path);
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw UsageError("cannot create output directory '" + dir + "': " + ec.message());
}

io::Json report_header(const RunConfig& cfg) {
  io::Json j;
  j["tool"] = "rpl";
  j["version"] = kVersion;
  j["command"] = cfg.command;
  j["master_seed"] = cfg.seed;
  j["run_config"] = to_json(cfg);
  return j;
}

Matrix project_rows(const nn::MlpParams& params, const Matrix& x, const char* what) {
  if (static_cast<std::size_t>(x.cols()) != params.input_dim()) {
    throw UsageError(std::string(what) + " has " + std::to_string(x.cols()) +
                     " columns but the checkpoint expects " + std::to_string(params.input_dim()));
  }
  return nn::predict(params, x);
}

int cmd_generate(RunConfig& cfg, std::ostream& out) {
  const std::string dir = cfg.paths.at("out");
  ensure_dir(dir);
  const fs::path base = fs::path(dir) / cfg.manifold;
  if (cfg.manifold == "paired-views") {
    data::PairedViewsOptions opts;
    opts.n = cfg.n;
    opts.dim = cfg.dim;
    opts.latent_dim = cfg.latent_dim;
    opts.seed = cfg.seed;
    if (cfg.noise) opts.noise = *cfg.noise;
    cfg.noise = opts.noise;
    const data::PairedViews v = data::generate_paired_views(opts);
    data::save_embeddings(base.string() + ".a.emb", v.a);
    data::save_embeddings(base.string() + ".b.emb", v.b);
    data::save_embeddings(base.string() + ".latent.emb", v.latent);
    out << "wrote " << base.string() << ".{a,b,latent}.emb (" << cfg.n << " rows)\n";
  } else {
    data::ManifoldSample s;
    if (cfg.manifold == "cinnamon-roll") {
      data::CinnamonRollOptions opts;
      opts.n = cfg.n;
      opts.turns = cfg.turns;
      opts.seed = cfg.seed;
      if (cfg.noise) opts.noise = *cfg.noise;
      cfg.noise = opts.noise;
      s = data::generate_cinnamon_roll(opts);
    } else {
      data::TwistedSurfaceOptions opts;
      opts.n = cfg.n;
      opts.twist = cfg.twist;
      opts.width = cfg.width;
      opts.seed = cfg.seed;
      if (cfg.noise) opts.noise = *cfg.noise;
      cfg.noise = opts.noise;
      s = data::generate_twisted_surface(opts);
    }
    if (cfg.lift > static_cast<std::size_t>(s.points.cols())) s = data::lift_to_high_dim(s, cfg.lift, cfg.seed);
    data::save_embeddings(base.string() + ".emb", s.points);
    data::save_embeddings(base.string() + ".latent.emb", Matrix(s.latent));
    out << "wrote " << base.string() << ".emb and " << base.string() << ".latent.emb (" << cfg.n
        << " rows)\n";
  }
  io::write_json(base.string() + ".json", report_header(cfg));
  return kSuccess;
}

int cmd_train(RunConfig& cfg, std::ostream& out) {
  const Matrix x = load_input(cfg.paths.at("input"), "input");
  const std::string dir = cfg.paths.at("out");
  ensure_dir(dir);

  cfg.relationship.validate();
  cfg.loss.validate();
  cfg.train.validate(static_cast<std::size_t>(x.rows()));
  std::vector<std::size_t> dims{static_cast<std::size_t>(x.cols())};
  dims.insert(dims.end(), cfg.hidden.begin(), cfg.hidden.end());
  dims.push_back(cfg.k);
  const nn::MlpParams init =
      nn::init_params(dims, nn::activation_from_string(cfg.activation), derive_seed(cfg.seed, seed_stream::kInit));

  const train::TrainResult result = train::train(x, cfg.k, cfg.relationship, cfg.loss, cfg.train, init);
  const Matrix y = nn::predict(result.params, x);

  const fs::path ckpt = fs::path(dir) / "checkpoint.rplm";
  const fs::path projected = fs::path(dir) / "projected.emb";
  const fs::path report_path = fs::path(dir) / "train_report.json";
  nn::save_checkpoint(ckpt, result.params);
  if (all_finite(y)) data::save_embeddings(projected, y);

  io::Json report = report_header(cfg);
  report["train"] = io::to_json(result.report);
  const auto& losses = result.report.epoch_loss;
  if (!losses.empty()) {
    report["train"]["first_epoch_loss"] = losses.front();
    report["train"]["final_epoch_loss"] = losses.back();
  }
  if (all_finite(y)) {
    report["train"]["final_relative_error"] = train::relative_relationship_error(x, y, cfg.relationship);
  }
  report["outputs"] = {{"checkpoint", ckpt.string()}, {"projected", projected.string()}};
  io::write_json(report_path, report);

  out << "trained " << losses.size() << " epochs";
  if (!losses.empty()) out << ", loss " << text::format_double(losses.front()) << " -> " << text::format_double(losses.back());
  out << "\nreport: " << report_path.string() << '\n';
  return result.report.diverged ? kDiverged : kSuccess;
}

int cmd_audit(RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const Matrix x = load_input(cfg.paths.at("original"), "original");
  const Matrix y = load_input(cfg.paths.at("projected"), "projected");
  if (x.rows() != y.rows()) {
    throw UsageError("original has " + std::to_string(x.rows()) + " rows but projected has " +
                     std::to_string(y.rows()));
  }
  cfg.relationship.validate();
  const audit::BoundReport bounds = audit::full_audit(x, y, cfg.relationship, cfg.audit);
  io::Json report = report_header(cfg);
  report["audit"] = io::to_json(bounds);
  const std::string report_path = cfg.paths.at("report");
  io::write_json(report_path, report);

  out << "epsilon " << text::format_double(bounds.epsilon) << " (relative "
      << text::format_double(bounds.epsilon_relative) << ")\n"
      << "weyl " << audit::to_string(bounds.weyl.verdict) << ", entrywise "
      << audit::to_string(bounds.entrywise.verdict) << ", rank " << audit::to_string(bounds.rank.verdict)
      << ", subspace " << audit::to_string(bounds.subspace.verdict) << ", sensitivity "
      << audit::to_string(bounds.sensitivity.verdict) << '\n'
      << "report: " << report_path << '\n';
  for (const auto& w : bounds.warnings) err << "warning: " << w << '\n';
  return bounds.theorem_assertions_pass ? kSuccess : kTheoremFailure;
}

int cmd_evaluate(RunConfig& cfg, std::ostream& out) {
  Matrix a = load_input(cfg.paths.at("a"), "query");
  Matrix b = load_input(cfg.paths.at("b"), "gallery");
  if (a.rows() != b.rows()) {
    throw UsageError("query file has " + std::to_string(a.rows()) + " rows but gallery has " +
                     std::to_string(b.rows()));
  }
  if (a.cols() != b.cols()) {
    throw UsageError("query file has " + std::to_string(a.cols()) + " columns but gallery has " +
                     std::to_string(b.cols()));
  }
  const auto ckpt = cfg.paths.find("checkpoint");
  if (ckpt != cfg.paths.end()) {
    const nn::MlpParams params = load_model(ckpt->second);
    a = project_rows(params, a, "query file");
    b = project_rows(params, b, "gallery file");
  }
  cfg.relationship.validate();
  const auto reports = retrieval::evaluate_pair(a, b, cfg.relationship, cfg.k_list);
  io::Json report = report_header(cfg);
  io::Json results = io::Json::array();
  for (const auto& r : reports) results.push_back(io::to_json(r));
  report["retrieval"] = std::move(results);
  const std::string report_path = cfg.paths.at("report");
  io::write_json(report_path, report);
  for (const auto& r : reports) {
    out << retrieval::to_string(r.direction) << ':';
    for (const auto& [k, v] : r.recall_at) out << " R@" << k << ' ' << text::format_double(v);
    out << " median " << text::format_double(r.median_rank) << " MRR@10 " << text::format_double(r.mrr_at_10)
        << '\n';
  }
  out << "report: " << report_path << '\n';
  return kSuccess;
}

int cmd_project(RunConfig& cfg, std::ostream& out) {
  const nn::MlpParams params = load_model(cfg.paths.at("checkpoint"));
  const Matrix x = load_input(cfg.paths.at("input"), "input");
  const Matrix y = project_rows(params, x, "input");
  std::optional<Matrix> latent;
  const auto latent_path = cfg.paths.find("latent");
  if (latent_path != cfg.paths.end()) {
    latent = load_input(latent_path->second, "latent");
    if (latent->rows() != x.rows()) {
      throw UsageError("latent file has " + std::to_string(latent->rows()) + " rows but input has " +
                       std::to_string(x.rows()));
    }
  }
  const std::string path = cfg.paths.at("output");
  std::ofstream file(path, std::ios::binary);
  if (!file) throw UsageError("cannot write '" + path + "'");
  for (Index j = 0; j < y.cols(); ++j) file << (j ? ",y" : "y") << j;
  if (latent) {
    for (Index j = 0; j < latent->cols(); ++j) file << ",latent" << (latent->cols() > 1 ? std::to_string(j) : "");
  }
  file << '\n';
  for (Index i = 0; i < y.rows(); ++i) {
    for (Index j = 0; j < y.cols(); ++j) file << (j ? "," : "") << text::format_double(y(i, j));
    if (latent) {
      for (Index j = 0; j < latent->cols(); ++j) file << ',' << text::format_double((*latent)(i, j));
    }
    file << '\n';
  }
  if (!file) throw UsageError("write to '" + path + "' failed");
  out << "wrote " << y.rows() << " rows to " << path << '\n';
  return kSuccess;
}

}  // namespace

io::Json to_json(const RunConfig& cfg) {
  io::Json j;
  j["command"] = cfg.command;
  j["seed"] = cfg.seed;
  j["seeds"] = {{"init", derive_seed(cfg.seed, seed_stream::kInit)},
                {"shuffle", derive_seed(cfg.seed, seed_stream::kShuffle)},
                {"audit", derive_seed(cfg.seed, seed_stream::kAudit)},
                {"data", derive_seed(cfg.seed, seed_stream::kData)},
                {"lift", derive_seed(cfg.seed, seed_stream::kLift)}};
  j["dataset"] = {{"manifold", cfg.manifold},
                  {"n", cfg.n},
                  {"lift", cfg.lift},
                  {"turns", cfg.turns},
                  {"twist", cfg.twist},
                  {"width", cfg.width},
                  {"noise", cfg.noise ? io::Json(*cfg.noise) : io::Json(nullptr)},
                  {"dim", cfg.dim},
                  {"latent_dim", cfg.latent_dim}};
  j["model"] = {{"k", cfg.k}, {"hidden", cfg.hidden}, {"activation", cfg.activation}};
  j["relationship"] = io::to_json(cfg.relationship);
  j["loss"] = io::to_json(cfg.loss);
  j["train"] = io::to_json(cfg.train);
  j["audit"] = io::to_json(cfg.audit);
  j["k_list"] = cfg.k_list;
  io::Json paths = io::Json::object();
  for (const auto& [key, value] : cfg.paths) paths[key] = value;
  j["paths"] = std::move(paths);
  return j;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Relationship-preserving dimensionality reduction and bound auditing", "rpl"};
  app.set_version_flag("--version", kVersion);
  app.set_config("--config", "", "TOML/INI file supplying flag values; command-line flags take precedence");
  app.require_subcommand(1);

  RunConfig cfg;
  Flags flags;
  std::map<std::string, std::string> paths;

  const auto add_seed = [&](CLI::App* sub) {
    sub->add_option("--seed", cfg.seed, "Master seed")->capture_default_str();
  };

  CLI::App* generate = app.add_subcommand("generate", "Sample a synthetic data set");
  generate->add_option("--manifold", cfg.manifold, "Data set name")
      ->check(CLI::IsMember({"cinnamon-roll", "twisted-surface", "paired-views"}))
      ->capture_default_str();
  generate->add_option("--n", cfg.n, "Number of points")->capture_default_str();
  generate->add_option("--lift", cfg.lift, "Embed the 3-D manifold isometrically into this dimension")
      ->capture_default_str();
  generate->add_option("--turns", cfg.turns, "Cinnamon roll turns")->capture_default_str();
  generate->add_option("--twist", cfg.twist, "Twisted surface half-twists")->capture_default_str();
  generate->add_option("--width", cfg.width, "Twisted surface band width")->capture_default_str();
  flags.noise_opt = generate->add_option("--noise", flags.noise, "Gaussian noise scale")->check(CLI::NonNegativeNumber);
  generate->add_option("--dim", cfg.dim, "Paired views: ambient dimension")->capture_default_str();
  generate->add_option("--latent-dim", cfg.latent_dim, "Paired views: latent dimension")->capture_default_str();
  generate->add_option("--out", paths["out"], "Output directory")->required();
  add_seed(generate);

  CLI::App* train_cmd = app.add_subcommand("train", "Train a projection network");
  train_cmd->add_option("--input", paths["input"], "Embedding file to project")->required();
  train_cmd->add_option("--out", paths["out"], "Output directory")->required();
  train_cmd->add_option("--k", cfg.k, "Target dimension")->check(CLI::PositiveNumber)->capture_default_str();
  train_cmd->add_option("--hidden", cfg.hidden, "Hidden layer widths")->delimiter(',')->capture_default_str();
  train_cmd->add_option("--activation", cfg.activation)->check(CLI::IsMember(kActivationNames))->capture_default_str();
  add_relationship_flags(*train_cmd, flags);
  add_loss_flags(*train_cmd, flags);
  add_train_flags(*train_cmd, flags);
  add_seed(train_cmd);

  CLI::App* audit_cmd = app.add_subcommand("audit", "Check the perturbation bounds on an (X, Y) pair");
  audit_cmd->add_option("--original", paths["original"], "High-dimensional embedding file")->required();
  audit_cmd->add_option("--projected", paths["projected"], "Projected embedding file")->required();
  audit_cmd->add_option("--report", paths["report"], "Report path")->required();
  add_relationship_flags(*audit_cmd, flags);
  add_audit_flags(*audit_cmd, flags);
  add_seed(audit_cmd);

  CLI::App* evaluate = app.add_subcommand("evaluate", "Cross-retrieval metrics between paired embeddings");
  evaluate->add_option("--a", paths["a"], "Query embedding file")->required();
  evaluate->add_option("--b", paths["b"], "Gallery embedding file (row i matches query i)")->required();
  evaluate->add_option("--checkpoint", paths["checkpoint"], "Project both sides through this network first");
  evaluate->add_option("--report", paths["report"], "Report path")->required();
  evaluate->add_option("--k-list", cfg.k_list, "Recall cut-offs")->delimiter(',')->capture_default_str();
  add_relationship_flags(*evaluate, flags);
  add_seed(evaluate);

  CLI::App* project = app.add_subcommand("project", "Write plot-ready projected coordinates");
  project->add_option("--checkpoint", paths["checkpoint"], "Network checkpoint")->required();
  project->add_option("--input", paths["input"], "Embedding file")->required();
  project->add_option("--latent", paths["latent"], "Latent file appended as extra columns");
  project->add_option("--output", paths["output"], "CSV output path")->required();
  add_seed(project);

  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kSuccess : kUsage;
  }

  // The evaluate default similarity is cosine unless --phi was given.
  if (evaluate->parsed() && !evaluate->get_option("--phi")->count()) flags.phi = "cosine";

  try {
    CLI::App* chosen = app.get_subcommands().front();
    cfg.command = chosen->get_name();
    for (const auto& [key, value] : paths) {
      if (!value.empty()) cfg.paths[key] = value;
    }
    resolve(flags, cfg);
    if (cfg.command == "generate") return cmd_generate(cfg, out);
    if (cfg.command == "train") return cmd_train(cfg, out);
    if (cfg.command == "audit") return cmd_audit(cfg, out, err);
    if (cfg.command == "evaluate") return cmd_evaluate(cfg, out);
    return cmd_project(cfg, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace rpl::cli
