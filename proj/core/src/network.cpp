#include "rpl/network.hpp"

#include "rpl/error.hpp"
#include "rpl/rng.hpp"
#include "rpl/text_io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

namespace rpl::nn {
namespace {

Matrix activate(const Matrix& z, Activation a) {
  switch (a) {
    case Activation::Tanh: return z.array().tanh().matrix();
    case Activation::Relu: return z.cwiseMax(0.0);
    case Activation::Identity: return z;
  }
  return z;
}

// Derivative expressed through the pre-activation z and activation value h.
Matrix activation_derivative(const Matrix& z, const Matrix& h, Activation a) {
  switch (a) {
    case Activation::Tanh: return (1.0 - h.array().square()).matrix();
    case Activation::Relu:
      return z.unaryExpr([](double v) { return v > 0.0 ? 1.0 : 0.0; });
    case Activation::Identity: return Matrix::Ones(z.rows(), z.cols());
  }
  return Matrix::Ones(z.rows(), z.cols());
}

Matrix affine(const Matrix& a, const Matrix& w, const RowVector& b) {
  Matrix z = a * w;
  z.rowwise() += b;
  return z;
}

[[noreturn]] void checkpoint_error(const std::filesystem::path& path, int line,
                                   const std::string& what) {
  throw FormatError(path.string() + ":" + std::to_string(line) + ": " + what);
}

}  // namespace

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::Tanh: return "tanh";
    case Activation::Relu: return "relu";
    case Activation::Identity: return "identity";
  }
  return "unknown";
}

Activation activation_from_string(std::string_view name) {
  if (name == "tanh") return Activation::Tanh;
  if (name == "relu") return Activation::Relu;
  if (name == "identity") return Activation::Identity;
  throw ConfigError("unknown activation '" + std::string(name) +
                    "' (expected tanh, relu or identity)");
}

std::size_t MlpParams::parameter_count() const {
  std::size_t count = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    count += static_cast<std::size_t>(weights[l].size() + biases[l].size());
  }
  return count;
}

MlpParams MlpParams::zeros_like() const {
  MlpParams out = *this;
  for (auto& w : out.weights) w.setZero();
  for (auto& b : out.biases) b.setZero();
  return out;
}

void MlpParams::validate() const {
  if (layer_dims.size() < 2) {
    throw PreconditionError("MlpParams: need at least input and output dimensions");
  }
  if (weights.size() != layer_dims.size() - 1 || biases.size() != weights.size()) {
    throw PreconditionError("MlpParams: layer count does not match layer_dims");
  }
  for (std::size_t l = 0; l < weights.size(); ++l) {
    const auto in = static_cast<Index>(layer_dims[l]);
    const auto out = static_cast<Index>(layer_dims[l + 1]);
    if (weights[l].rows() != in || weights[l].cols() != out || biases[l].size() != out) {
      throw PreconditionError("MlpParams: layer " + std::to_string(l) + " has weights " +
                              shape_string(weights[l]) + " and bias of length " +
                              std::to_string(biases[l].size()) + ", expected " +
                              std::to_string(in) + "x" + std::to_string(out));
    }
    if (!weights[l].allFinite() || !biases[l].allFinite()) {
      throw PreconditionError("MlpParams: layer " + std::to_string(l) +
                              " holds non-finite values");
    }
  }
}

MlpParams init_params(std::span<const std::size_t> layer_dims, Activation activation,
                      std::uint64_t seed) {
  if (layer_dims.size() < 2) {
    throw PreconditionError("init_params: need at least two layer dimensions");
  }
  for (std::size_t d : layer_dims) {
    if (d < 1) throw PreconditionError("init_params: every layer dimension must be >= 1");
  }
  MlpParams p;
  p.layer_dims.assign(layer_dims.begin(), layer_dims.end());
  p.activation = activation;
  Rng rng(seed);
  for (std::size_t l = 0; l + 1 < layer_dims.size(); ++l) {
    const auto in = static_cast<Index>(layer_dims[l]);
    const auto out = static_cast<Index>(layer_dims[l + 1]);
    const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
    Matrix w(in, out);
    for (Index i = 0; i < in; ++i) {
      for (Index j = 0; j < out; ++j) w(i, j) = rng.uniform(-limit, limit);
    }
    p.weights.push_back(std::move(w));
    p.biases.push_back(RowVector::Zero(out));
  }
  return p;
}

MlpParams identity_params(std::size_t dim) {
  MlpParams p;
  p.layer_dims = {dim, dim};
  p.activation = Activation::Identity;
  p.weights.push_back(Matrix::Identity(static_cast<Index>(dim), static_cast<Index>(dim)));
  p.biases.push_back(RowVector::Zero(static_cast<Index>(dim)));
  return p;
}

ForwardResult forward(const MlpParams& params, const Matrix& x) {
  if (x.cols() != static_cast<Index>(params.input_dim())) {
    throw PreconditionError("forward: input has shape " + shape_string(x) + " but the network expects " +
                            std::to_string(params.input_dim()) + " columns");
  }
  ForwardResult result;
  auto& trace = result.trace;
  trace.activations.reserve(params.layer_count() + 1);
  trace.pre_activations.reserve(params.layer_count());
  trace.activations.push_back(x);
  const std::size_t last = params.layer_count() - 1;
  for (std::size_t l = 0; l < params.layer_count(); ++l) {
    Matrix z = affine(trace.activations.back(), params.weights[l], params.biases[l]);
    Matrix h = l == last ? z : activate(z, params.activation);
    trace.pre_activations.push_back(std::move(z));
    trace.activations.push_back(std::move(h));
  }
  result.output = trace.activations.back();
  return result;
}

Matrix predict(const MlpParams& params, const Matrix& x) {
  if (x.cols() != static_cast<Index>(params.input_dim())) {
    throw PreconditionError("predict: input has shape " + shape_string(x) + " but the network expects " +
                            std::to_string(params.input_dim()) + " columns");
  }
  Matrix a = x;
  const std::size_t last = params.layer_count() - 1;
  for (std::size_t l = 0; l < params.layer_count(); ++l) {
    Matrix z = affine(a, params.weights[l], params.biases[l]);
    a = l == last ? std::move(z) : activate(z, params.activation);
  }
  return a;
}

MlpParams backward(const MlpParams& params, const ForwardTrace& trace, const Matrix& grad_y) {
  const std::size_t layers = params.layer_count();
  if (trace.activations.size() != layers + 1 || trace.pre_activations.size() != layers) {
    throw PreconditionError("backward: trace does not belong to this network");
  }
  const Matrix& output = trace.activations.back();
  if (grad_y.rows() != output.rows() || grad_y.cols() != output.cols()) {
    throw PreconditionError("backward: upstream gradient " + shape_string(grad_y) +
                            " does not match forward output " + shape_string(output));
  }
  MlpParams grads = params.zeros_like();
  Matrix delta = grad_y;
  for (std::size_t l = layers; l-- > 0;) {
    const Matrix& input = trace.activations[l];
    if (input.cols() != params.weights[l].rows()) {
      throw PreconditionError("backward: stale trace at layer " + std::to_string(l));
    }
    grads.weights[l].noalias() = input.transpose() * delta;
    grads.biases[l] = delta.colwise().sum();
    if (l > 0) {
      Matrix upstream = delta * params.weights[l].transpose();
      delta = upstream.cwiseProduct(activation_derivative(trace.pre_activations[l - 1],
                                                          trace.activations[l], params.activation));
    }
  }
  return grads;
}

void save_checkpoint(const std::filesystem::path& path, const MlpParams& params) {
  params.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  out << "rpl-mlp 1\n";
  out << "activation " << to_string(params.activation) << "\n";
  out << "dims";
  for (std::size_t d : params.layer_dims) out << ' ' << d;
  out << "\n";
  for (std::size_t l = 0; l < params.layer_count(); ++l) {
    const Matrix& w = params.weights[l];
    out << "weights " << l << ' ' << w.rows() << ' ' << w.cols() << "\n";
    for (Index i = 0; i < w.rows(); ++i) {
      for (Index j = 0; j < w.cols(); ++j) {
        if (j) out << ' ';
        out << text::format_double(w(i, j));
      }
      out << "\n";
    }
    const RowVector& b = params.biases[l];
    out << "bias " << l << ' ' << b.size() << "\n";
    for (Index j = 0; j < b.size(); ++j) {
      if (j) out << ' ';
      out << text::format_double(b[j]);
    }
    out << "\n";
  }
  out << "end\n";
  if (!out) throw Error("failed writing checkpoint '" + path.string() + "'");
}

MlpParams load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint '" + path.string() + "'");
  int line_no = 0;
  std::string line;
  const auto next_line = [&]() -> std::istringstream {
    if (!std::getline(in, line)) checkpoint_error(path, line_no + 1, "unexpected end of file");
    ++line_no;
    return std::istringstream(line);
  };
  const auto read_values = [&](Index expected, double* dest) {
    std::istringstream row = next_line();
    std::string token;
    Index count = 0;
    while (row >> token) {
      double v = 0.0;
      if (!text::parse_double(token, v) || !std::isfinite(v)) {
        checkpoint_error(path, line_no, "invalid number '" + token + "'");
      }
      if (count >= expected) checkpoint_error(path, line_no, "too many values");
      dest[count++] = v;
    }
    if (count != expected) checkpoint_error(path, line_no, "too few values");
  };

  std::string tag;
  int version = 0;
  if (!(next_line() >> tag >> version) || tag != "rpl-mlp") {
    checkpoint_error(path, line_no, "missing 'rpl-mlp' header");
  }
  if (version != 1) checkpoint_error(path, line_no, "unsupported version " + std::to_string(version));

  MlpParams p;
  std::string name;
  {
    auto s = next_line();
    if (!(s >> tag >> name) || tag != "activation") checkpoint_error(path, line_no, "expected activation");
    try {
      p.activation = activation_from_string(name);
    } catch (const ConfigError& e) {
      checkpoint_error(path, line_no, e.what());
    }
  }
  {
    auto s = next_line();
    if (!(s >> tag) || tag != "dims") checkpoint_error(path, line_no, "expected dims");
    std::size_t d = 0;
    while (s >> d) p.layer_dims.push_back(d);
    if (p.layer_dims.size() < 2) checkpoint_error(path, line_no, "need at least two dims");
  }
  for (std::size_t l = 0; l + 1 < p.layer_dims.size(); ++l) {
    std::size_t index = 0;
    Index rows = 0;
    Index cols = 0;
    if (!(next_line() >> tag >> index >> rows >> cols) || tag != "weights" || index != l ||
        rows != static_cast<Index>(p.layer_dims[l]) || cols != static_cast<Index>(p.layer_dims[l + 1])) {
      checkpoint_error(path, line_no, "expected 'weights " + std::to_string(l) + "' block");
    }
    Matrix w(rows, cols);
    for (Index i = 0; i < rows; ++i) read_values(cols, w.data() + i * cols);
    Index len = 0;
    if (!(next_line() >> tag >> index >> len) || tag != "bias" || index != l || len != cols) {
      checkpoint_error(path, line_no, "expected 'bias " + std::to_string(l) + "' block");
    }
    RowVector b(cols);
    read_values(cols, b.data());
    p.weights.push_back(std::move(w));
    p.biases.push_back(std::move(b));
  }
  if (!(next_line() >> tag) || tag != "end") checkpoint_error(path, line_no, "expected 'end'");
  p.validate();
  return p;
}

}  // namespace rpl::nn
