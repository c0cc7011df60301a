#pragma once

#include "rpl/guarantees.hpp"
#include "rpl/kernels.hpp"
#include "rpl/loss.hpp"
#include "rpl/serialize.hpp"
#include "rpl/trainer.hpp"

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace rpl::cli {

enum ExitCode : int {
  kSuccess = 0,
  kUsage = 2,
  kTheoremFailure = 3,
  kDiverged = 4,
};

// Everything that determines a run. Echoed into every report.
struct RunConfig {
  std::string command;
  std::uint64_t seed = 0;

  std::string manifold = "cinnamon-roll";
  std::size_t n = 2000;
  std::size_t lift = 24;
  double turns = 2.0;
  double twist = 1.0;
  double width = 0.6;
  std::optional<double> noise;
  std::size_t dim = 64;
  std::size_t latent_dim = 16;

  std::size_t k = 3;
  std::vector<std::size_t> hidden{64, 64};
  std::string activation = "tanh";

  kernels::RelationshipConfig relationship;
  loss::LossConfig loss;
  train::TrainConfig train;
  audit::AuditConfig audit;
  std::vector<std::size_t> k_list{1, 5, 10, 100};

  std::map<std::string, std::string> paths;
};

io::Json to_json(const RunConfig& cfg);

// Runs one command line (args[0] is the program name). Never throws.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace rpl::cli
