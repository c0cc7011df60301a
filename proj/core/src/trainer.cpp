#include "rpl/trainer.hpp"

#include "rpl/error.hpp"
#include "rpl/rng.hpp"

#include <chrono>
#include <cmath>
#include <numeric>
#include <string>

namespace rpl::train {
namespace {

Matrix gather_rows(const Matrix& x, const Batch& batch) {
  Matrix out(static_cast<Index>(batch.size()), x.cols());
  for (std::size_t i = 0; i < batch.size(); ++i) out.row(static_cast<Index>(i)) = x.row(static_cast<Index>(batch[i]));
  return out;
}

Matrix gather_block(const Matrix& m, const Batch& batch) {
  const auto b = static_cast<Index>(batch.size());
  Matrix out(b, b);
  for (Index i = 0; i < b; ++i) {
    for (Index j = 0; j < b; ++j) out(i, j) = m(static_cast<Index>(batch[i]), static_cast<Index>(batch[j]));
  }
  return out;
}

bool all_finite(const nn::MlpParams& p) {
  for (std::size_t l = 0; l < p.layer_count(); ++l) {
    if (!p.weights[l].allFinite() || !p.biases[l].allFinite()) return false;
  }
  return true;
}

class OptimizerState {
 public:
  OptimizerState(const TrainConfig& cfg, const nn::MlpParams& shape)
      : cfg_(cfg), m_(shape.zeros_like()), v_(shape.zeros_like()) {}

  void step(nn::MlpParams& params, const nn::MlpParams& grads) {
    ++t_;
    const double lr = cfg_.learning_rate;
    if (cfg_.optimizer == Optimizer::Sgd) {
      for (std::size_t l = 0; l < params.layer_count(); ++l) {
        params.weights[l] -= lr * grads.weights[l];
        params.biases[l] -= lr * grads.biases[l];
      }
      return;
    }
    const auto& a = cfg_.adam;
    const double c1 = 1.0 - std::pow(a.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(a.beta2, static_cast<double>(t_));
    const auto update = [&](auto& param, auto& m, auto& v, const auto& g) {
      m = a.beta1 * m + (1.0 - a.beta1) * g;
      v = a.beta2 * v + (1.0 - a.beta2) * g.cwiseProduct(g);
      param.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + a.eps);
    };
    for (std::size_t l = 0; l < params.layer_count(); ++l) {
      update(params.weights[l], m_.weights[l], v_.weights[l], grads.weights[l]);
      update(params.biases[l], m_.biases[l], v_.biases[l], grads.biases[l]);
    }
  }

 private:
  TrainConfig cfg_;
  nn::MlpParams m_;
  nn::MlpParams v_;
  std::uint64_t t_ = 0;
};

}  // namespace

std::string_view to_string(Optimizer o) { return o == Optimizer::Sgd ? "sgd" : "adam"; }

std::string_view to_string(LossScale s) { return s == LossScale::Sum ? "sum" : "mean"; }

Optimizer optimizer_from_string(std::string_view name) {
  if (name == "sgd") return Optimizer::Sgd;
  if (name == "adam") return Optimizer::Adam;
  throw ConfigError("unknown optimizer '" + std::string(name) + "' (expected sgd or adam)");
}

LossScale loss_scale_from_string(std::string_view name) {
  if (name == "sum") return LossScale::Sum;
  if (name == "mean") return LossScale::MeanPerEntry;
  throw ConfigError("unknown loss scale '" + std::string(name) + "' (expected sum or mean)");
}

void TrainConfig::validate(std::size_t n) const {
  if (batch_size < 2 || batch_size > n) {
    throw ConfigError("batch size must satisfy 2 <= b <= n (b = " + std::to_string(batch_size) +
                      ", n = " + std::to_string(n) + ")");
  }
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("learning rate must be a finite positive number");
  }
  if (early_stop_tol && !(*early_stop_tol >= 0.0)) {
    throw ConfigError("early stopping tolerance must be non-negative");
  }
}

std::vector<Batch> sample_batches(std::size_t n, std::size_t b, std::uint64_t seed, bool shuffle) {
  if (b < 1 || b > n) {
    throw PreconditionError("sample_batches: need 1 <= b <= n (b = " + std::to_string(b) +
                            ", n = " + std::to_string(n) + ")");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (shuffle) {
    Rng rng(seed);
    rng.shuffle(order);
  }
  std::vector<Batch> batches;
  batches.reserve((n + b - 1) / b);
  for (std::size_t start = 0; start < n; start += b) {
    const std::size_t stop = std::min(n, start + b);
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                         order.begin() + static_cast<std::ptrdiff_t>(stop));
  }
  return batches;
}

TrainResult train(const Matrix& x, std::size_t target_dim, const kernels::RelationshipConfig& rel_cfg,
                  const loss::LossConfig& loss_cfg, const TrainConfig& train_cfg,
                  const nn::MlpParams& params_init, const EpochCallback& on_epoch) {
  const auto started = std::chrono::steady_clock::now();
  const auto n = static_cast<std::size_t>(x.rows());
  if (target_dim < 1) throw PreconditionError("train: target dimension must be >= 1");
  if (!x.allFinite()) throw PreconditionError("train: input data contains non-finite values");
  params_init.validate();
  if (params_init.input_dim() != static_cast<std::size_t>(x.cols()) ||
      params_init.output_dim() != target_dim) {
    throw PreconditionError("train: network maps R^" + std::to_string(params_init.input_dim()) +
                            " -> R^" + std::to_string(params_init.output_dim()) + " but data is R^" +
                            std::to_string(x.cols()) + " and k = " + std::to_string(target_dim));
  }
  rel_cfg.validate();
  train_cfg.validate(n);
  const loss::LossConfig cfg = loss::resolved_for(loss_cfg, rel_cfg.kind);
  cfg.validate();
  if (cfg.masking == loss::Masking::TopK && !train_cfg.global_topk_mask) {
    const std::size_t rest = n % train_cfg.batch_size;
    const std::size_t smallest = rest >= 2 ? rest : train_cfg.batch_size;
    const std::size_t entries = smallest * (cfg.include_diagonal.value_or(true) ? smallest : smallest - 1);
    if (cfg.top_k > entries) {
      throw ConfigError("top_k = " + std::to_string(cfg.top_k) + " exceeds the " + std::to_string(entries) +
                        " entries of the smallest batch (" + std::to_string(smallest) +
                        " rows); lower top_k or change the batch size");
    }
  }

  std::optional<loss::MaskMatrix> global_mask;
  if (train_cfg.global_topk_mask && cfg.masking == loss::Masking::TopK) {
    global_mask = loss::build_mask(kernels::relationship_matrix(x, rel_cfg), cfg);
  }

  TrainResult result{params_init, {}};
  auto& report = result.report;
  OptimizerState optimizer(train_cfg, params_init);

  for (std::size_t epoch = 1; epoch <= train_cfg.max_epochs; ++epoch) {
    const auto batches = sample_batches(n, train_cfg.batch_size,
                                        derive_seed(train_cfg.seed, epoch), train_cfg.shuffle);
    double loss_sum = 0.0;
    std::size_t loss_count = 0;
    std::vector<double> epsilon_hat;
    bool diverged = false;
    for (const Batch& batch : batches) {
      if (batch.size() < 2) continue;
      const Matrix x_b = gather_rows(x, batch);
      const Matrix r_high = kernels::relationship_matrix(x_b, rel_cfg);
      loss::MaskMatrix mask;
      if (global_mask) {
        mask.weights = gather_block(global_mask->weights, batch);
      } else {
        mask = loss::build_mask(r_high, cfg);
      }
      const nn::ForwardResult fwd = nn::forward(result.params, x_b);
      loss::LossAndGradient lg = loss::rpl_loss_and_grad(r_high, fwd.output, mask, rel_cfg, cfg);

      double scale = 1.0;
      if (train_cfg.loss_scale == LossScale::MeanPerEntry) {
        const double weight = mask.total_weight();
        scale = weight > 0.0 ? 1.0 / weight : 1.0;
      }
      const double batch_loss = scale * lg.loss;
      const nn::MlpParams grads = nn::backward(result.params, fwd.trace, scale * lg.grad_y);
      if (!std::isfinite(batch_loss) || !all_finite(grads)) {
        diverged = true;
        break;
      }
      loss_sum += batch_loss;
      ++loss_count;
      epsilon_hat.push_back((r_high - lg.r_low).squaredNorm());
      report.observed_pairs += static_cast<std::uint64_t>(batch.size()) * batch.size();
      ++report.steps;

      nn::MlpParams candidate = result.params;
      optimizer.step(candidate, grads);
      if (!all_finite(candidate)) {
        diverged = true;
        break;
      }
      result.params = std::move(candidate);
    }
    if (diverged) {
      report.diverged = true;
      report.last_finite_epoch = epoch - 1;
      break;
    }
    const double epoch_loss = loss_count ? loss_sum / static_cast<double>(loss_count) : 0.0;
    report.epoch_loss.push_back(epoch_loss);
    report.final_epsilon_hat = std::move(epsilon_hat);
    if (on_epoch) on_epoch(epoch, epoch_loss);
    if (train_cfg.early_stop_tol && report.epoch_loss.size() >= 2) {
      const double change = std::abs(report.epoch_loss[report.epoch_loss.size() - 1] -
                                     report.epoch_loss[report.epoch_loss.size() - 2]);
      if (change < *train_cfg.early_stop_tol) {
        report.early_stopped = true;
        break;
      }
    }
  }
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return result;
}

double relative_relationship_error(const Matrix& x, const Matrix& y,
                                   const kernels::RelationshipConfig& rel_cfg) {
  const Matrix r_high = kernels::relationship_matrix(x, rel_cfg);
  const Matrix r_low = kernels::relationship_matrix(y, rel_cfg);
  const double denom = r_high.squaredNorm();
  if (!(denom > 0.0)) throw PreconditionError("relative_relationship_error: R(X) is zero");
  return (r_high - r_low).squaredNorm() / denom;
}

}  // namespace rpl::train
