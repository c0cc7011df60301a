#include "rpl/retrieval.hpp"

#include "rpl/error.hpp"

#include <algorithm>
#include <string>

namespace rpl::retrieval {

std::string_view to_string(Direction d) { return d == Direction::AtoB ? "AtoB" : "BtoA"; }

Direction direction_from_string(std::string_view name) {
  if (name == "AtoB") return Direction::AtoB;
  if (name == "BtoA") return Direction::BtoA;
  throw FormatError("unknown retrieval direction '" + std::string(name) + "'");
}

std::vector<std::size_t> ranks_from_similarity(const Matrix& similarity) {
  if (similarity.rows() != similarity.cols()) {
    throw PreconditionError("ranks_from_similarity: expected a square matrix, got " +
                            shape_string(similarity));
  }
  std::vector<std::size_t> ranks(static_cast<std::size_t>(similarity.rows()));
  for (Index i = 0; i < similarity.rows(); ++i) {
    const double target = similarity(i, i);
    std::size_t rank = 1;
    for (Index j = 0; j < similarity.cols(); ++j) {
      if (j != i && !(similarity(i, j) < target)) ++rank;
    }
    ranks[static_cast<std::size_t>(i)] = rank;
  }
  return ranks;
}

std::vector<std::size_t> rank_matrix(const Matrix& queries, const Matrix& gallery,
                                     const kernels::RelationshipConfig& similarity) {
  if (queries.rows() != gallery.rows() || queries.cols() != gallery.cols()) {
    throw PreconditionError("rank_matrix: queries " + shape_string(queries) + " and gallery " +
                            shape_string(gallery) + " must have the same shape");
  }
  return ranks_from_similarity(kernels::cross_relationship(queries, gallery, similarity));
}

RetrievalReport metrics_from_ranks(const std::vector<std::size_t>& ranks,
                                   const std::vector<std::size_t>& ks, Direction direction) {
  if (ranks.empty()) throw PreconditionError("metrics_from_ranks: empty rank vector");
  for (std::size_t r : ranks) {
    if (r < 1) throw PreconditionError("metrics_from_ranks: ranks must be >= 1");
  }
  RetrievalReport report;
  report.direction = direction;
  report.n_queries = ranks.size();
  const double count = static_cast<double>(ranks.size());
  for (std::size_t k : ks) {
    if (k < 1) throw PreconditionError("metrics_from_ranks: K must be >= 1");
    const auto hits = std::count_if(ranks.begin(), ranks.end(), [k](std::size_t r) { return r <= k; });
    report.recall_at[k] = static_cast<double>(hits) / count;
  }
  double reciprocal = 0.0;
  for (std::size_t r : ranks) {
    if (r <= 10) reciprocal += 1.0 / static_cast<double>(r);
  }
  report.mrr_at_10 = reciprocal / count;

  std::vector<std::size_t> sorted = ranks;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t mid = sorted.size() / 2;
  report.median_rank = sorted.size() % 2
                           ? static_cast<double>(sorted[mid])
                           : 0.5 * (static_cast<double>(sorted[mid - 1]) + static_cast<double>(sorted[mid]));
  return report;
}

std::vector<RetrievalReport> evaluate_pair(const Matrix& a, const Matrix& b,
                                           const kernels::RelationshipConfig& similarity,
                                           const std::vector<std::size_t>& ks) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw PreconditionError("evaluate_pair: embeddings " + shape_string(a) + " and " +
                            shape_string(b) + " must have the same shape");
  }
  const Matrix s = kernels::cross_relationship(a, b, similarity);
  return {metrics_from_ranks(ranks_from_similarity(s), ks, Direction::AtoB),
          metrics_from_ranks(ranks_from_similarity(s.transpose()), ks, Direction::BtoA)};
}

}  // namespace rpl::retrieval
