#include "rpl/datasets.hpp"

#include "rpl/error.hpp"
#include "rpl/linalg.hpp"
#include "rpl/rng.hpp"
#include "rpl/text_io.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

namespace rpl::data {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kArc = 1.5 * kPi;

void require_min_points(std::size_t n, const char* what) {
  if (n < 8) throw PreconditionError(std::string(what) + ": n = " + std::to_string(n) + " < 8");
}

void add_noise(Matrix& points, double noise, Rng& rng) {
  if (noise < 0.0) throw PreconditionError("noise must be non-negative");
  if (noise == 0.0) return;
  for (Index i = 0; i < points.rows(); ++i) {
    for (Index j = 0; j < points.cols(); ++j) points(i, j) += noise * rng.normal();
  }
}

[[noreturn]] void format_error(const std::filesystem::path& path, std::size_t line,
                               const std::string& what) {
  throw FormatError(path.string() + ":" + std::to_string(line) + ": " + what);
}

}  // namespace

RowVector cinnamon_roll_point(double t, double height, double turns) {
  const double angle = 2.0 * kPi * turns * t;
  RowVector p(3);
  p << t * std::cos(angle), t * std::sin(angle), height;
  return p;
}

RowVector twisted_surface_point(double u, double v, double twist) {
  const double a = kArc * u;
  const double turn = kPi * twist * u;
  RowVector radial(3);
  radial << std::cos(a), std::sin(a), 0.0;
  RowVector up(3);
  up << 0.0, 0.0, 1.0;
  return radial + v * (std::cos(turn) * radial + std::sin(turn) * up);
}

ManifoldSample generate_cinnamon_roll(const CinnamonRollOptions& opts) {
  require_min_points(opts.n, "generate_cinnamon_roll");
  Rng rng(derive_seed(opts.seed, seed_stream::kData));
  const auto n = static_cast<Index>(opts.n);
  ManifoldSample s;
  s.manifold_tag = "cinnamon-roll";
  s.points.resize(n, 3);
  s.latent.resize(n);
  s.coords.resize(n, 2);
  for (Index i = 0; i < n; ++i) {
    const double t = rng.uniform(0.2, 1.0);
    const double h = rng.uniform(-0.5, 0.5);
    s.points.row(i) = cinnamon_roll_point(t, h, opts.turns);
    s.latent[i] = t;
    s.coords(i, 0) = t;
    s.coords(i, 1) = h;
  }
  add_noise(s.points, opts.noise, rng);
  return s;
}

ManifoldSample generate_twisted_surface(const TwistedSurfaceOptions& opts) {
  require_min_points(opts.n, "generate_twisted_surface");
  if (!(opts.width > 0.0)) throw PreconditionError("generate_twisted_surface: width must be positive");
  Rng rng(derive_seed(opts.seed, seed_stream::kData));
  const auto n = static_cast<Index>(opts.n);
  ManifoldSample s;
  s.manifold_tag = "twisted-surface";
  s.points.resize(n, 3);
  s.latent.resize(n);
  s.coords.resize(n, 2);
  for (Index i = 0; i < n; ++i) {
    const double u = rng.uniform();
    const double v = rng.uniform(-0.5, 0.5) * opts.width;
    s.points.row(i) = twisted_surface_point(u, v, opts.twist);
    s.latent[i] = u;
    s.coords(i, 0) = u;
    s.coords(i, 1) = v;
  }
  add_noise(s.points, opts.noise, rng);
  return s;
}

Matrix random_orthonormal_columns(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  if (cols == 0 || cols > rows) {
    throw PreconditionError("random_orthonormal_columns: need 0 < cols <= rows, got " +
                            std::to_string(rows) + " x " + std::to_string(cols));
  }
  Rng rng(seed);
  Matrix g(static_cast<Index>(rows), static_cast<Index>(cols));
  for (Index i = 0; i < g.rows(); ++i) {
    for (Index j = 0; j < g.cols(); ++j) g(i, j) = rng.normal();
  }
  return linalg::orthonormalize_columns(g);
}

ManifoldSample lift_to_high_dim(const ManifoldSample& sample, std::size_t target_dim,
                                std::uint64_t seed) {
  const auto ambient = static_cast<std::size_t>(sample.points.cols());
  if (target_dim < ambient) {
    throw PreconditionError("lift_to_high_dim: target_dim " + std::to_string(target_dim) +
                            " is below the ambient dimension " + std::to_string(ambient));
  }
  // Q^T has orthonormal columns, so Q has orthonormal rows: X Q preserves X X^T.
  const Matrix q =
      random_orthonormal_columns(target_dim, ambient, derive_seed(seed, seed_stream::kLift)).transpose();
  ManifoldSample out = sample;
  out.points = sample.points * q;
  return out;
}

PairedViews generate_paired_views(const PairedViewsOptions& opts) {
  if (opts.n < 2) throw PreconditionError("generate_paired_views: n must be at least 2");
  if (opts.latent_dim == 0 || opts.latent_dim > opts.dim) {
    throw PreconditionError("generate_paired_views: need 0 < latent_dim <= dim");
  }
  const auto n = static_cast<Index>(opts.n);
  Rng rng(derive_seed(opts.seed, seed_stream::kData));
  PairedViews v;
  v.latent.resize(n, static_cast<Index>(opts.latent_dim));
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < v.latent.cols(); ++j) v.latent(i, j) = rng.normal();
  }
  const Matrix q = random_orthonormal_columns(opts.dim, opts.latent_dim,
                                              derive_seed(opts.seed, seed_stream::kLift))
                       .transpose();
  const Matrix clean = v.latent * q;
  v.a = clean;
  v.b = clean;
  add_noise(v.a, opts.noise, rng);
  add_noise(v.b, opts.noise, rng);
  return v;
}

void save_embeddings(const std::filesystem::path& path, const Matrix& values,
                     const std::vector<std::string>& ids) {
  if (values.rows() == 0) throw PreconditionError(path.string() + ": no data rows");
  if (!ids.empty() && ids.size() != static_cast<std::size_t>(values.rows())) {
    throw PreconditionError("save_embeddings: " + std::to_string(ids.size()) + " ids for " +
                            std::to_string(values.rows()) + " rows");
  }
  for (const auto& id : ids) {
    if (id.empty() || id.find_first_of(",\r\n") != std::string::npos) {
      throw PreconditionError("save_embeddings: id '" + id + "' is empty or contains ',' or a newline");
    }
  }
  if (!all_finite(values)) throw PreconditionError("save_embeddings: values must be finite");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << "rpl-embeddings " << values.cols() << ' ' << (ids.empty() ? "noids" : "ids") << '\n';
  std::string line;
  for (Index i = 0; i < values.rows(); ++i) {
    line.clear();
    if (!ids.empty()) {
      line += ids[static_cast<std::size_t>(i)];
      line += ',';
    }
    for (Index j = 0; j < values.cols(); ++j) {
      if (j) line += ',';
      line += text::format_double(values(i, j));
    }
    line += '\n';
    out << line;
  }
  if (!out) throw Error("write to '" + path.string() + "' failed");
}

EmbeddingTable read_embeddings(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open embedding file '" + path.string() + "'");
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) format_error(path, 1, "no data rows");
  ++line_no;
  std::istringstream header{std::string(text::trim(line))};
  std::string tag;
  std::string id_flag;
  long long cols = 0;
  if (!(header >> tag >> cols >> id_flag) || tag != "rpl-embeddings" || cols <= 0 ||
      (id_flag != "ids" && id_flag != "noids")) {
    format_error(path, line_no, "expected header 'rpl-embeddings <columns> <ids|noids>'");
  }
  const bool has_ids = id_flag == "ids";

  EmbeddingTable table;
  std::vector<double> flat;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view body = text::trim(line);
    if (body.empty()) continue;
    std::size_t start = 0;
    long long field = 0;
    long long values_seen = 0;
    while (true) {
      const std::size_t comma = body.find(',', start);
      const std::string_view token =
          text::trim(body.substr(start, comma == std::string_view::npos ? body.npos : comma - start));
      if (has_ids && field == 0) {
        if (token.empty()) format_error(path, line_no, "empty id");
        table.ids.emplace_back(token);
      } else {
        double v = 0.0;
        if (!text::parse_double(token, v)) {
          format_error(path, line_no, "non-numeric token '" + std::string(token) + "'");
        }
        if (!std::isfinite(v)) format_error(path, line_no, "non-finite value '" + std::string(token) + "'");
        if (values_seen >= cols) format_error(path, line_no, "more than " + std::to_string(cols) + " columns");
        flat.push_back(v);
        ++values_seen;
      }
      ++field;
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (values_seen != cols) {
      format_error(path, line_no, "expected " + std::to_string(cols) + " columns, found " +
                                      std::to_string(values_seen));
    }
    ++rows;
  }
  if (rows == 0) format_error(path, line_no, "no data rows");
  table.values = Eigen::Map<Matrix>(flat.data(), static_cast<Index>(rows), static_cast<Index>(cols));
  return table;
}

Matrix load_embeddings(const std::filesystem::path& path) { return read_embeddings(path).values; }

}  // namespace rpl::data
