#include "rpl/serialize.hpp"

#include "rpl/error.hpp"
#include "rpl/text_io.hpp"

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>

namespace rpl::io {
namespace {

// Non-finite doubles have no JSON spelling; they are written as strings.
Json number(double v) {
  if (std::isfinite(v)) return v;
  return text::format_double(v);
}

template <typename T>
Json optional_value(const std::optional<T>& v) {
  if (!v) return nullptr;
  if constexpr (std::is_floating_point_v<T>) {
    return number(*v);
  } else {
    return *v;
  }
}

// Guards reads from one JSON object.
class Fields {
 public:
  Fields(const Json& j, const char* what, std::initializer_list<const char*> allowed) : j_(j), what_(what) {
    if (!j.is_object()) throw ConfigError(std::string(what) + ": expected an object");
    for (const auto& [key, value] : j.items()) {
      bool known = false;
      for (const char* a : allowed) known = known || key == a;
      if (!known) throw ConfigError(std::string(what) + ": unknown key '" + key + "'");
    }
  }

  bool has(const char* key) const { return j_.contains(key) && !j_.at(key).is_null(); }

  double real(const char* key) const {
    const Json& v = j_.at(key);
    if (v.is_number()) return v.get<double>();
    if (v.is_string()) {
      double out = 0.0;
      if (text::parse_double(v.get<std::string>(), out)) return out;
    }
    fail(key, "a number");
  }

  template <typename T>
  T integer(const char* key) const {
    const Json& v = j_.at(key);
    if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<long long>() < 0)) {
      fail(key, "a non-negative integer");
    }
    return v.get<T>();
  }

  bool boolean(const char* key) const {
    const Json& v = j_.at(key);
    if (!v.is_boolean()) fail(key, "a boolean");
    return v.get<bool>();
  }

  std::string string(const char* key) const {
    const Json& v = j_.at(key);
    if (!v.is_string()) fail(key, "a string");
    return v.get<std::string>();
  }

  const Json& at(const char* key) const { return j_.at(key); }

  template <typename F>
  auto wrap(const char* key, F&& f) const {
    try {
      return f();
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& e) {
      throw ConfigError(std::string(what_) + "." + key + ": " + e.what());
    }
  }

 private:
  [[noreturn]] void fail(const char* key, const char* expected) const {
    throw ConfigError(std::string(what_) + "." + key + ": expected " + expected);
  }

  const Json& j_;
  const char* what_;
};

Json verdict(audit::Verdict v) { return std::string(audit::to_string(v)); }

}  // namespace

Json to_json(const kernels::RelationshipConfig& cfg) {
  Json j;
  j["phi"] = std::string(kernels::to_string(cfg.kind));
  j["gamma"] = optional_value(cfg.gamma);
  j["norm_upper"] = optional_value(cfg.norm_upper);
  j["norm_lower"] = optional_value(cfg.norm_lower);
  return j;
}

Json to_json(const loss::LossConfig& cfg) {
  Json j;
  j["discrepancy"] = std::string(loss::to_string(cfg.discrepancy));
  j["masking"] = std::string(loss::to_string(cfg.masking));
  j["top_k"] = cfg.top_k;
  j["alpha"] = number(cfg.alpha);
  j["include_diagonal"] = optional_value(cfg.include_diagonal);
  return j;
}

Json to_json(const train::TrainConfig& cfg) {
  Json j;
  j["batch_size"] = cfg.batch_size;
  j["max_epochs"] = cfg.max_epochs;
  j["learning_rate"] = number(cfg.learning_rate);
  j["optimizer"] = std::string(train::to_string(cfg.optimizer));
  j["adam"] = {{"beta1", number(cfg.adam.beta1)}, {"beta2", number(cfg.adam.beta2)}, {"eps", number(cfg.adam.eps)}};
  j["seed"] = cfg.seed;
  j["shuffle"] = cfg.shuffle;
  j["loss_scale"] = std::string(train::to_string(cfg.loss_scale));
  j["early_stop_tol"] = optional_value(cfg.early_stop_tol);
  j["global_topk_mask"] = cfg.global_topk_mask;
  return j;
}

Json to_json(const audit::AuditConfig& cfg) {
  Json j;
  j["m"] = optional_value(cfg.m);
  j["delta"] = number(cfg.delta);
  j["seed"] = cfg.seed;
  j["entry_bound"] = optional_value(cfg.entry_bound);
  j["sensitivity_probes"] = cfg.sensitivity_probes;
  j["sensitivity_step"] = number(cfg.sensitivity_step);
  j["tolerances"] = {{"ortho_tol", number(cfg.tol.ortho_tol)},
                     {"rank_tol", number(cfg.tol.rank_tol)},
                     {"eigengap_tol", number(cfg.tol.eigengap_tol)},
                     {"numeric_slack", number(cfg.tol.numeric_slack)},
                     {"psd_tol", number(cfg.tol.psd_tol)}};
  return j;
}

Json to_json(const train::TrainReport& report) {
  Json j;
  Json losses = Json::array();
  for (double v : report.epoch_loss) losses.push_back(number(v));
  Json eps = Json::array();
  for (double v : report.final_epsilon_hat) eps.push_back(number(v));
  j["epochs"] = report.epoch_loss.size();
  j["epoch_loss"] = std::move(losses);
  j["final_epsilon_hat"] = std::move(eps);
  j["observed_pairs"] = report.observed_pairs;
  j["steps"] = report.steps;
  j["diverged"] = report.diverged;
  j["early_stopped"] = report.early_stopped;
  j["last_finite_epoch"] = optional_value(report.last_finite_epoch);
  return j;
}

Json to_json(const audit::BoundReport& r) {
  Json j;
  j["relationship"] = std::string(kernels::to_string(r.relationship));
  j["regime"] = r.regime;
  j["n"] = r.n;
  j["d"] = r.d;
  j["k"] = r.k;
  j["epsilon"] = number(r.epsilon);
  j["epsilon_relative"] = number(r.epsilon_relative);
  j["theorem_assertions_pass"] = r.theorem_assertions_pass;
  j["serfling"] = {{"n", r.serfling.n},
                   {"m", r.serfling.m},
                   {"n_squared", r.serfling.n * r.serfling.n},
                   {"epsilon_hat", number(r.serfling.epsilon_hat)},
                   {"entry_bound", number(r.serfling.entry_bound)},
                   {"entry_bound_observed", r.serfling.entry_bound_observed},
                   {"delta", number(r.serfling.delta)},
                   {"rhs", number(r.serfling.rhs)},
                   {"holds", r.serfling.holds}};
  j["weyl"] = {{"max_displacement", number(r.weyl.max_displacement)},
               {"bound", number(r.weyl.bound)},
               {"verdict", verdict(r.weyl.verdict)}};
  j["entrywise"] = {{"pairs_checked", r.entrywise.pairs_checked},
                    {"violations", r.entrywise.violations},
                    {"max_abs_low", number(r.entrywise.max_abs_low)},
                    {"verdict", verdict(r.entrywise.verdict)}};
  j["psd_high"] = r.psd_high;
  j["psd_low"] = r.psd_low;
  j["rank"] = {{"r", r.rank.r},
               {"sigma_r", number(r.rank.sigma_r)},
               {"sigma_r_sq", number(r.rank.sigma_r_sq)},
               {"condition_met", r.rank.condition_met},
               {"lambda_tail", number(r.rank.lambda_tail)},
               {"lambda_bound", number(r.rank.lambda_bound)},
               {"lambda_next_high", number(r.rank.lambda_next_high)},
               {"lambda_next_low", number(r.rank.lambda_next_low)},
               {"rank_floor", number(r.rank.rank_floor)},
               {"effective_rank_low", r.rank.effective_rank_low},
               {"numeric_rank_low", r.rank.numeric_rank_low},
               {"rank_equality_guaranteed", r.rank.rank_equality_guaranteed},
               {"note", r.rank.note},
               {"verdict", verdict(r.rank.verdict)}};
  j["subspace"] = {{"sin_theta", number(r.subspace.sin_theta)},
                   {"bound_stated", number(r.subspace.bound_stated)},
                   {"bound_rigorous", number(r.subspace.bound_rigorous)},
                   {"stated_bound_holds", r.subspace.stated_bound_holds},
                   {"eigengap", number(r.subspace.eigengap)},
                   {"note", r.subspace.note},
                   {"verdict", verdict(r.subspace.verdict)}};
  j["sensitivity"] = {{"lipschitz_constant", number(r.sensitivity.lipschitz_constant)},
                      {"probes", r.sensitivity.probes},
                      {"violations", r.sensitivity.violations},
                      {"max_ratio", number(r.sensitivity.max_ratio)},
                      {"informational", r.sensitivity.informational},
                      {"verdict", verdict(r.sensitivity.verdict)}};
  j["warnings"] = r.warnings;
  j["audit_config"] = to_json(r.config);
  return j;
}

Json to_json(const retrieval::RetrievalReport& report) {
  Json j;
  j["direction"] = std::string(retrieval::to_string(report.direction));
  j["n_queries"] = report.n_queries;
  Json recall;
  for (const auto& [k, v] : report.recall_at) recall[std::to_string(k)] = number(v);
  j["recall_at"] = std::move(recall);
  j["median_rank"] = number(report.median_rank);
  j["mrr_at_10"] = number(report.mrr_at_10);
  return j;
}

kernels::RelationshipConfig relationship_config_from_json(const Json& j) {
  const Fields f(j, "relationship", {"phi", "gamma", "norm_upper", "norm_lower"});
  kernels::RelationshipConfig cfg;
  if (f.has("phi")) cfg.kind = f.wrap("phi", [&] { return kernels::relationship_kind_from_string(f.string("phi")); });
  if (f.has("gamma")) cfg.gamma = f.real("gamma");
  if (f.has("norm_upper")) cfg.norm_upper = f.real("norm_upper");
  if (f.has("norm_lower")) cfg.norm_lower = f.real("norm_lower");
  return cfg;
}

loss::LossConfig loss_config_from_json(const Json& j) {
  const Fields f(j, "loss", {"discrepancy", "masking", "top_k", "alpha", "include_diagonal"});
  loss::LossConfig cfg;
  if (f.has("discrepancy")) {
    cfg.discrepancy = f.wrap("discrepancy", [&] { return loss::discrepancy_from_string(f.string("discrepancy")); });
  }
  if (f.has("masking")) cfg.masking = f.wrap("masking", [&] { return loss::masking_from_string(f.string("masking")); });
  if (f.has("top_k")) cfg.top_k = f.integer<std::size_t>("top_k");
  if (f.has("alpha")) cfg.alpha = f.real("alpha");
  if (f.has("include_diagonal")) cfg.include_diagonal = f.boolean("include_diagonal");
  return cfg;
}

train::TrainConfig train_config_from_json(const Json& j) {
  const Fields f(j, "train",
                 {"batch_size", "max_epochs", "learning_rate", "optimizer", "adam", "seed", "shuffle",
                  "loss_scale", "early_stop_tol", "global_topk_mask"});
  train::TrainConfig cfg;
  if (f.has("batch_size")) cfg.batch_size = f.integer<std::size_t>("batch_size");
  if (f.has("max_epochs")) cfg.max_epochs = f.integer<std::size_t>("max_epochs");
  if (f.has("learning_rate")) cfg.learning_rate = f.real("learning_rate");
  if (f.has("optimizer")) {
    cfg.optimizer = f.wrap("optimizer", [&] { return train::optimizer_from_string(f.string("optimizer")); });
  }
  if (f.has("adam")) {
    const Fields a(f.at("adam"), "train.adam", {"beta1", "beta2", "eps"});
    if (a.has("beta1")) cfg.adam.beta1 = a.real("beta1");
    if (a.has("beta2")) cfg.adam.beta2 = a.real("beta2");
    if (a.has("eps")) cfg.adam.eps = a.real("eps");
  }
  if (f.has("seed")) cfg.seed = f.integer<std::uint64_t>("seed");
  if (f.has("shuffle")) cfg.shuffle = f.boolean("shuffle");
  if (f.has("loss_scale")) {
    cfg.loss_scale = f.wrap("loss_scale", [&] { return train::loss_scale_from_string(f.string("loss_scale")); });
  }
  if (f.has("early_stop_tol")) cfg.early_stop_tol = f.real("early_stop_tol");
  if (f.has("global_topk_mask")) cfg.global_topk_mask = f.boolean("global_topk_mask");
  return cfg;
}

audit::AuditConfig audit_config_from_json(const Json& j) {
  const Fields f(j, "audit",
                 {"m", "delta", "seed", "entry_bound", "sensitivity_probes", "sensitivity_step", "tolerances"});
  audit::AuditConfig cfg;
  if (f.has("m")) cfg.m = f.integer<std::size_t>("m");
  if (f.has("delta")) cfg.delta = f.real("delta");
  if (f.has("seed")) cfg.seed = f.integer<std::uint64_t>("seed");
  if (f.has("entry_bound")) cfg.entry_bound = f.real("entry_bound");
  if (f.has("sensitivity_probes")) cfg.sensitivity_probes = f.integer<std::size_t>("sensitivity_probes");
  if (f.has("sensitivity_step")) cfg.sensitivity_step = f.real("sensitivity_step");
  if (f.has("tolerances")) {
    const Fields t(f.at("tolerances"), "audit.tolerances",
                   {"ortho_tol", "rank_tol", "eigengap_tol", "numeric_slack", "psd_tol"});
    if (t.has("ortho_tol")) cfg.tol.ortho_tol = t.real("ortho_tol");
    if (t.has("rank_tol")) cfg.tol.rank_tol = t.real("rank_tol");
    if (t.has("eigengap_tol")) cfg.tol.eigengap_tol = t.real("eigengap_tol");
    if (t.has("numeric_slack")) cfg.tol.numeric_slack = t.real("numeric_slack");
    if (t.has("psd_tol")) cfg.tol.psd_tol = t.real("psd_tol");
  }
  return cfg;
}

train::TrainReport train_report_from_json(const Json& j) {
  const Fields f(j, "train_report",
                 {"epochs", "epoch_loss", "final_epsilon_hat", "observed_pairs", "steps", "diverged",
                  "early_stopped", "last_finite_epoch"});
  train::TrainReport r;
  const auto reals = [](const Json& arr, const char* what) {
    if (!arr.is_array()) throw ConfigError(std::string("train_report.") + what + ": expected an array");
    std::vector<double> out;
    for (const Json& v : arr) {
      double x = 0.0;
      if (v.is_number()) {
        x = v.get<double>();
      } else if (!v.is_string() || !text::parse_double(v.get<std::string>(), x)) {
        throw ConfigError(std::string("train_report.") + what + ": expected numbers");
      }
      out.push_back(x);
    }
    return out;
  };
  if (f.has("epoch_loss")) r.epoch_loss = reals(f.at("epoch_loss"), "epoch_loss");
  if (f.has("final_epsilon_hat")) r.final_epsilon_hat = reals(f.at("final_epsilon_hat"), "final_epsilon_hat");
  if (f.has("observed_pairs")) r.observed_pairs = f.integer<std::uint64_t>("observed_pairs");
  if (f.has("steps")) r.steps = f.integer<std::size_t>("steps");
  if (f.has("diverged")) r.diverged = f.boolean("diverged");
  if (f.has("early_stopped")) r.early_stopped = f.boolean("early_stopped");
  if (f.has("last_finite_epoch")) r.last_finite_epoch = f.integer<std::size_t>("last_finite_epoch");
  return r;
}

retrieval::RetrievalReport retrieval_report_from_json(const Json& j) {
  const Fields f(j, "retrieval", {"direction", "n_queries", "recall_at", "median_rank", "mrr_at_10"});
  retrieval::RetrievalReport r;
  if (f.has("direction")) {
    r.direction = f.wrap("direction", [&] { return retrieval::direction_from_string(f.string("direction")); });
  }
  if (f.has("n_queries")) r.n_queries = f.integer<std::size_t>("n_queries");
  if (f.has("recall_at")) {
    const Json& recall = f.at("recall_at");
    if (!recall.is_object()) throw ConfigError("retrieval.recall_at: expected an object");
    for (const auto& [key, value] : recall.items()) {
      std::size_t k = 0;
      try {
        std::size_t used = 0;
        k = std::stoul(key, &used);
        if (used != key.size()) throw std::invalid_argument(key);
      } catch (const std::exception&) {
        throw ConfigError("retrieval.recall_at: key '" + key + "' is not an integer");
      }
      if (!value.is_number()) throw ConfigError("retrieval.recall_at: expected numbers");
      r.recall_at[k] = value.get<double>();
    }
  }
  if (f.has("median_rank")) r.median_rank = f.real("median_rank");
  if (f.has("mrr_at_10")) r.mrr_at_10 = f.real("mrr_at_10");
  return r;
}

void write_json(const std::filesystem::path& path, const Json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << j.dump(2) << '\n';
  if (!out) throw Error("write to '" + path.string() + "' failed");
}

Json read_json(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

}  // namespace rpl::io
