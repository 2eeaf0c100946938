#pragma once

#include <cstdint>
#include <vector>

#include "epsdf/jet.hpp"
#include "epsdf/types.hpp"

namespace epsdf {

/// Architecture of the implicit function f: R^d -> R. An MLP with softplus
/// activations; hidden layer l (0-based) receives [h_{l-1}, x] when l is in
/// skip_layers, otherwise h_{l-1} alone. Layer 0 always consumes x and the
/// final affine layer emits one scalar.
struct MlpConfig {
  int input_dim = 3;
  int hidden_width = 512;
  int num_hidden_layers = 8;
  std::vector<int> skip_layers = {4};
  double softplus_beta = 100.0;
  double init_radius = 1.0;

  void validate() const;
  bool has_skip(int layer) const;

  /// Total number of affine layers (hidden + output).
  int num_layers() const { return num_hidden_layers + 1; }
  int layer_input_width(int layer) const;
  int layer_output_width(int layer) const;

  bool operator==(const MlpConfig&) const = default;
};

/// Offsets of one affine layer inside the flat parameter vector.
struct LayerShape {
  int in = 0;
  int out = 0;
  Index weight_offset = 0;  // row-major (out x in) block
  Index bias_offset = 0;    // (out) block
};

std::vector<LayerShape> layer_shapes(const MlpConfig& config);

Index param_count(const MlpConfig& config);

/// The implicit function: configuration plus the flat parameter vector
/// (row-major weights then biases, in layer order).
struct MlpModel {
  MlpConfig config;
  Vec params;

  Eigen::Map<const RowMat> weights(const LayerShape& s) const {
    return {params.data() + s.weight_offset, s.out, s.in};
  }
  Eigen::Map<const Vec> bias(const LayerShape& s) const {
    return {params.data() + s.bias_offset, s.out};
  }
};

/// Sphere-like initialization: hidden weights ~ N(0, 2/width) with zero
/// biases, final layer weights tightly clustered around sqrt(pi)/sqrt(width)
/// with bias -init_radius, so the untrained network approximates
/// f(x) = |x| - init_radius. Deterministic given the seed.
MlpModel init_geometric(const MlpConfig& config, std::uint64_t seed);

/// f(x) for a single point. Matches eval_jet(...).value bit-exactly.
double forward(const MlpModel& model, const Eigen::Ref<const Vec>& x);

/// f over many points (rows of `points`), evaluated with batched products.
Vec forward_many(const MlpModel& model, const Eigen::Ref<const Mat>& points);

/// Model snapshot written to / read from disk. Binary little-endian layout,
/// documented in the README; version checked on load. The normalization
/// entries record the similarity transform from original input coordinates
/// to the canonical frame the model was trained in.
struct Checkpoint {
  MlpConfig config;
  Vec params;
  std::uint64_t step = 0;
  std::uint64_t seed = 0;
  Vec norm_centroid;        // (input_dim); empty means identity
  double norm_scale = 1.0;
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace epsdf
