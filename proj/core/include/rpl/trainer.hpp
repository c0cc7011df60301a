#pragma once

#include "rpl/kernels.hpp"
#include "rpl/loss.hpp"
#include "rpl/matrix.hpp"
#include "rpl/network.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string_view>
#include <vector>

namespace rpl::train {

enum class Optimizer { Sgd, Adam };
enum class LossScale { Sum, MeanPerEntry };

std::string_view to_string(Optimizer o);
std::string_view to_string(LossScale s);
Optimizer optimizer_from_string(std::string_view name);
LossScale loss_scale_from_string(std::string_view name);

struct AdamSettings {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct TrainConfig {
  std::size_t batch_size = 128;
  std::size_t max_epochs = 300;
  double learning_rate = 1e-3;
  Optimizer optimizer = Optimizer::Adam;
  AdamSettings adam;
  std::uint64_t seed = 0;  // shuffle stream
  bool shuffle = true;
  // MeanPerEntry divides each batch loss by its total mask weight.
  LossScale loss_scale = LossScale::MeanPerEntry;
  std::optional<double> early_stop_tol;
  // TopK only: select the mask once on R(X) of the full data and slice it per
  // batch instead of recomputing it from R(X_B).
  bool global_topk_mask = false;

  // Throws ConfigError unless 2 <= batch_size <= n and learning_rate > 0.
  void validate(std::size_t n) const;
};

struct TrainReport {
  std::vector<double> epoch_loss;          // mean scaled batch loss per epoch
  std::vector<double> final_epsilon_hat;   // sum of Delta_ij^2 per batch, last epoch
  std::uint64_t observed_pairs = 0;        // m: sum of |B|^2 over all processed batches
  std::size_t steps = 0;
  double wall_seconds = 0.0;
  bool diverged = false;
  bool early_stopped = false;
  std::optional<std::size_t> last_finite_epoch;  // 1-based, set when diverged
};

struct TrainResult {
  nn::MlpParams params;
  TrainReport report;
};

using Batch = std::vector<std::size_t>;

// One epoch of batches: a partition of [0, n) into ceil(n / b) consecutive
// chunks of a (shuffled when `shuffle`) permutation. The last batch may be
// smaller.
std::vector<Batch> sample_batches(std::size_t n, std::size_t b, std::uint64_t seed, bool shuffle);

// Called after each epoch with (epoch index from 1, epoch loss).
using EpochCallback = std::function<void(std::size_t, double)>;

// Mini-batch training loop: per batch compute Y_B = f(X_B), R(X_B), R^(Y_B),
// the mask from R(X_B), the loss and one optimiser step. Batches of a
// single row carry no pair structure and are skipped. Stops early on a
// non-finite loss or gradient, keeping the last finite parameters.
TrainResult train(const Matrix& x, std::size_t target_dim, const kernels::RelationshipConfig& rel_cfg,
                  const loss::LossConfig& loss_cfg, const TrainConfig& train_cfg,
                  const nn::MlpParams& params_init, const EpochCallback& on_epoch = {});

// ||R(X) - R^(Y)||_F^2 / ||R(X)||_F^2 over all rows.
double relative_relationship_error(const Matrix& x, const Matrix& y,
                                   const kernels::RelationshipConfig& rel_cfg);

}  // namespace rpl::train
