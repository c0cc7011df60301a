#pragma once

#include "rpl/matrix.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

namespace rpl::nn {

enum class Activation { Tanh, Relu, Identity };

std::string_view to_string(Activation a);
Activation activation_from_string(std::string_view name);

// Parameters of the projection f: R^d -> R^k. Layer l maps
// a_{l-1} (b x dims[l]) to a_{l-1} W_l + b_l with W_l of shape
// dims[l] x dims[l+1]. Hidden layers apply `activation`; the output layer is
// always affine.
struct MlpParams {
  std::vector<std::size_t> layer_dims;
  std::vector<Matrix> weights;
  std::vector<RowVector> biases;
  Activation activation = Activation::Tanh;

  std::size_t layer_count() const { return weights.size(); }
  std::size_t input_dim() const { return layer_dims.front(); }
  std::size_t output_dim() const { return layer_dims.back(); }
  std::size_t parameter_count() const;

  // Same shapes, all parameters zero.
  MlpParams zeros_like() const;

  // Throws PreconditionError on inconsistent shapes or non-finite values.
  void validate() const;

  bool operator==(const MlpParams&) const = default;
};

// Activations retained by forward() for the backward pass. activations[0] is
// the input batch; pre_activations[l] is the affine output of layer l.
struct ForwardTrace {
  std::vector<Matrix> activations;
  std::vector<Matrix> pre_activations;
};

struct ForwardResult {
  Matrix output;
  ForwardTrace trace;
};

// Uniform Glorot initialisation, biases zero. Deterministic in `seed`.
MlpParams init_params(std::span<const std::size_t> layer_dims, Activation activation,
                      std::uint64_t seed);

// Single affine layer with W = I and b = 0 (d == k).
MlpParams identity_params(std::size_t dim);

ForwardResult forward(const MlpParams& params, const Matrix& x);

// Inference without a trace.
Matrix predict(const MlpParams& params, const Matrix& x);

// Reverse-mode gradient of <grad_y, f(x)> with respect to every parameter;
// returned with the same shapes as `params`.
MlpParams backward(const MlpParams& params, const ForwardTrace& trace, const Matrix& grad_y);

// Text checkpoint, see docs/file_formats.md. Values are written in shortest
// round-trip decimal form, so save/load is bit exact.
void save_checkpoint(const std::filesystem::path& path, const MlpParams& params);
MlpParams load_checkpoint(const std::filesystem::path& path);

}  // namespace rpl::nn
