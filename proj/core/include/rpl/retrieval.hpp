#pragma once

#include "rpl/kernels.hpp"
#include "rpl/matrix.hpp"

#include <cstddef>
#include <map>
#include <string_view>
#include <vector>

namespace rpl::retrieval {

enum class Direction { AtoB, BtoA };

std::string_view to_string(Direction d);
Direction direction_from_string(std::string_view name);

inline const std::vector<std::size_t> kDefaultRecallKs = {1, 5, 10, 100};

struct RetrievalReport {
  std::map<std::size_t, double> recall_at;
  double median_rank = 0.0;
  double mrr_at_10 = 0.0;
  std::size_t n_queries = 0;
  Direction direction = Direction::AtoB;
};

// Rank of the true match (gallery row i) for each query row i:
// 1 + #{j != i : sim(q_i, g_j) >= sim(q_i, g_i)}. Ties count against the match.
std::vector<std::size_t> rank_matrix(const Matrix& queries, const Matrix& gallery,
                                     const kernels::RelationshipConfig& similarity);

// Same, from a precomputed query x gallery similarity matrix.
std::vector<std::size_t> ranks_from_similarity(const Matrix& similarity);

RetrievalReport metrics_from_ranks(const std::vector<std::size_t>& ranks,
                                   const std::vector<std::size_t>& ks = kDefaultRecallKs,
                                   Direction direction = Direction::AtoB);

// Both directions: a as queries against b, then b against a.
std::vector<RetrievalReport> evaluate_pair(const Matrix& a, const Matrix& b,
                                           const kernels::RelationshipConfig& similarity,
                                           const std::vector<std::size_t>& ks = kDefaultRecallKs);

}  // namespace rpl::retrieval
