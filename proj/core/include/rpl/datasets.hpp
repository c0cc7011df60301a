#pragma once

#include "rpl/matrix.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace rpl::data {

struct ManifoldSample {
  Matrix points;         // n x ambient_dim
  Vector latent;         // colour parameter, one per row
  Matrix coords;         // generative parameters before noise (n x 2)
  std::string manifold_tag;
};

// Archimedean spiral roll with uniform height:
//   (t cos(2 pi turns t), t sin(2 pi turns t), h),  t ~ U[0.2, 1], h ~ U[-0.5, 0.5]
// plus isotropic Gaussian noise of scale `noise`. latent = t.
struct CinnamonRollOptions {
  std::size_t n = 2000;
  double turns = 2.0;
  double noise = 0.01;
  std::uint64_t seed = 0;
};
ManifoldSample generate_cinnamon_roll(const CinnamonRollOptions& opts);

// Half-twist band. The centre line runs along a 270 degree arc of radius 1;
// the cross-section direction turns by pi * twist * u from radial to vertical
// as u goes from 0 to 1. Points: c(u) + v w(u), u ~ U[0, 1],
// v ~ U[-width/2, width/2]. latent = u.
struct TwistedSurfaceOptions {
  std::size_t n = 2000;
  double twist = 1.0;
  double width = 0.6;
  double noise = 0.01;
  std::uint64_t seed = 0;
};
ManifoldSample generate_twisted_surface(const TwistedSurfaceOptions& opts);

// Noise-free points on the surfaces, for residual checks.
RowVector cinnamon_roll_point(double t, double height, double turns);
RowVector twisted_surface_point(double u, double v, double twist);

// Applies X -> X Q with Q (ambient x target_dim) having orthonormal columns.
// Dot products between rows are unchanged.
ManifoldSample lift_to_high_dim(const ManifoldSample& sample, std::size_t target_dim,
                                std::uint64_t seed);
Matrix random_orthonormal_columns(std::size_t rows, std::size_t cols, std::uint64_t seed);

// Two views of shared Gaussian latents z ~ N(0, I_latent_dim): view = z Q + noise,
// with one orthonormal lift Q shared by both views and independent
// N(0, noise^2) noise per view. Row i of `a` and `b` form a matched pair.
struct PairedViewsOptions {
  std::size_t n = 1000;
  std::size_t dim = 64;
  std::size_t latent_dim = 16;
  double noise = 0.25;
  std::uint64_t seed = 0;
};
struct PairedViews {
  Matrix a;
  Matrix b;
  Matrix latent;
};
PairedViews generate_paired_views(const PairedViewsOptions& opts);

inline constexpr std::string_view kManifoldNames[] = {"cinnamon-roll", "twisted-surface",
                                                      "paired-views"};

// Embedding files: a header line "rpl-embeddings <columns> <ids|noids>",
// then one comma-separated row per vector, optionally led by an id.
struct EmbeddingTable {
  Matrix values;
  std::vector<std::string> ids;  // empty when the file has no id column
};

void save_embeddings(const std::filesystem::path& path, const Matrix& values,
                     const std::vector<std::string>& ids = {});
EmbeddingTable read_embeddings(const std::filesystem::path& path);
Matrix load_embeddings(const std::filesystem::path& path);

}  // namespace rpl::data
