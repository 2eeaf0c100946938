#include "epsdf/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

namespace epsdf {

void MlpConfig::validate() const {
  if (input_dim != 2 && input_dim != 3)
    throw ConfigError("MlpConfig: input_dim must be 2 or 3");
  if (hidden_width < 1) throw ConfigError("MlpConfig: hidden_width must be positive");
  if (num_hidden_layers < 1)
    throw ConfigError("MlpConfig: num_hidden_layers must be positive");
  for (int l : skip_layers)
    if (l < 1 || l >= num_hidden_layers)
      throw ConfigError("MlpConfig: skip layer " + std::to_string(l) +
                        " outside [1, num_hidden_layers)");
  if (softplus_beta <= 0.0) throw ConfigError("MlpConfig: softplus_beta must be positive");
  if (init_radius <= 0.0) throw ConfigError("MlpConfig: init_radius must be positive");
}

bool MlpConfig::has_skip(int layer) const {
  return std::find(skip_layers.begin(), skip_layers.end(), layer) != skip_layers.end();
}

int MlpConfig::layer_input_width(int layer) const {
  if (layer == 0) return input_dim;
  if (layer == num_hidden_layers) return hidden_width;  // output layer
  return hidden_width + (has_skip(layer) ? input_dim : 0);
}

int MlpConfig::layer_output_width(int layer) const {
  return layer == num_hidden_layers ? 1 : hidden_width;
}

std::vector<LayerShape> layer_shapes(const MlpConfig& config) {
  std::vector<LayerShape> shapes(config.num_layers());
  Index offset = 0;
  for (int l = 0; l < config.num_layers(); ++l) {
    LayerShape& s = shapes[l];
    s.in = config.layer_input_width(l);
    s.out = config.layer_output_width(l);
    s.weight_offset = offset;
    s.bias_offset = offset + Index(s.in) * s.out;
    offset = s.bias_offset + s.out;
  }
  return shapes;
}

Index param_count(const MlpConfig& config) {
  const auto shapes = layer_shapes(config);
  const LayerShape& last = shapes.back();
  return last.bias_offset + last.out;
}

MlpModel init_geometric(const MlpConfig& config, std::uint64_t seed) {
  config.validate();
  MlpModel model{config, Vec::Zero(param_count(config))};
  Rng rng(seed);
  const auto shapes = layer_shapes(config);
  for (int l = 0; l < config.num_layers(); ++l) {
    const LayerShape& s = shapes[l];
    double* w = model.params.data() + s.weight_offset;
    if (l == config.num_hidden_layers) {
      // Final layer: near-constant positive weights and bias -r give the
      // signed sphere approximation f(x) ~ |x| - r.
      const double mean = std::sqrt(M_PI) / std::sqrt(double(s.in));
      for (Index i = 0; i < Index(s.in) * s.out; ++i) w[i] = rng.normal(mean, 1e-5);
      model.params[s.bias_offset] = -config.init_radius;
    } else {
      const double stddev = std::sqrt(2.0) / std::sqrt(double(s.out));
      for (Index i = 0; i < Index(s.in) * s.out; ++i) w[i] = rng.normal(0.0, stddev);
      // hidden biases stay zero
    }
  }
  return model;
}

double forward(const MlpModel& model, const Eigen::Ref<const Vec>& x) {
  if (x.size() != model.config.input_dim)
    throw ConfigError("forward: point dimension mismatch");
  const auto shapes = layer_shapes(model.config);
  // mirrors the value slot of eval_jet operation for operation, so the two
  // paths agree bit-exactly
  Vec h = x;
  for (int l = 0; l < model.config.num_hidden_layers; ++l) {
    if (model.config.has_skip(l)) {
      Vec cat(h.size() + x.size());
      cat << h, x;
      h = cat;
    }
    Vec z(shapes[l].out);
    z.noalias() = model.weights(shapes[l]) * h;
    z += model.bias(shapes[l]);
    for (Index i = 0; i < z.size(); ++i) z[i] = softplus(z[i], model.config.softplus_beta);
    h = std::move(z);
  }
  const LayerShape& out = shapes.back();
  Vec f(1);
  f.noalias() = model.weights(out) * h;
  f += model.bias(out);
  return f(0);
}

Vec forward_many(const MlpModel& model, const Eigen::Ref<const Mat>& points) {
  if (points.cols() != model.config.input_dim)
    throw ConfigError("forward_many: point dimension mismatch");
  const auto shapes = layer_shapes(model.config);
  const double beta = model.config.softplus_beta;
  const Mat xt = points.transpose();  // (d x n), one column per point
  Mat h = xt;
  for (int l = 0; l < model.config.num_hidden_layers; ++l) {
    if (model.config.has_skip(l)) {
      Mat cat(h.rows() + xt.rows(), h.cols());
      cat << h, xt;
      h = std::move(cat);
    }
    Mat z = model.weights(shapes[l]) * h;
    z.colwise() += model.bias(shapes[l]);
    Eigen::ArrayXXd t = beta * z.array();
    h = ((t.max(0.0) + (-t.abs()).exp().log1p()) / beta).matrix();
  }
  const LayerShape& out = shapes.back();
  Vec f = (model.weights(out) * h).transpose();
  f.array() += model.bias(out)(0);
  return f;
}

namespace {

constexpr char kMagic[8] = {'E', 'P', 'S', 'D', 'F', 'C', 'K', '1'};

template <typename T>
void write_raw(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_raw(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw IoError("checkpoint: truncated file");
  return v;
}

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  ckpt.config.validate();
  if (ckpt.params.size() != param_count(ckpt.config))
    throw ConfigError("checkpoint: parameter count does not match config");
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("checkpoint: cannot open '" + path + "' for writing");
  os.write(kMagic, sizeof(kMagic));
  write_raw<std::uint32_t>(os, std::uint32_t(ckpt.config.input_dim));
  write_raw<std::uint32_t>(os, std::uint32_t(ckpt.config.hidden_width));
  write_raw<std::uint32_t>(os, std::uint32_t(ckpt.config.num_hidden_layers));
  write_raw<std::uint32_t>(os, std::uint32_t(ckpt.config.skip_layers.size()));
  for (int l : ckpt.config.skip_layers) write_raw<std::uint32_t>(os, std::uint32_t(l));
  write_raw<double>(os, ckpt.config.softplus_beta);
  write_raw<double>(os, ckpt.config.init_radius);
  write_raw<std::uint64_t>(os, ckpt.step);
  write_raw<std::uint64_t>(os, ckpt.seed);
  for (int k = 0; k < ckpt.config.input_dim; ++k)
    write_raw<double>(os, ckpt.norm_centroid.size() == ckpt.config.input_dim
                              ? ckpt.norm_centroid[k]
                              : 0.0);
  write_raw<double>(os, ckpt.norm_scale);
  write_raw<std::uint64_t>(os, std::uint64_t(ckpt.params.size()));
  os.write(reinterpret_cast<const char*>(ckpt.params.data()),
           std::streamsize(sizeof(double)) * ckpt.params.size());
  if (!os) throw IoError("checkpoint: write failed for '" + path + "'");
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("checkpoint: cannot open '" + path + "'");
  char magic[8];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw IoError("checkpoint: bad magic in '" + path + "' (not a v1 checkpoint)");
  Checkpoint ckpt;
  ckpt.config.input_dim = int(read_raw<std::uint32_t>(is));
  ckpt.config.hidden_width = int(read_raw<std::uint32_t>(is));
  ckpt.config.num_hidden_layers = int(read_raw<std::uint32_t>(is));
  const auto n_skip = read_raw<std::uint32_t>(is);
  ckpt.config.skip_layers.clear();
  for (std::uint32_t i = 0; i < n_skip; ++i)
    ckpt.config.skip_layers.push_back(int(read_raw<std::uint32_t>(is)));
  ckpt.config.softplus_beta = read_raw<double>(is);
  ckpt.config.init_radius = read_raw<double>(is);
  ckpt.step = read_raw<std::uint64_t>(is);
  ckpt.seed = read_raw<std::uint64_t>(is);
  ckpt.norm_centroid.resize(ckpt.config.input_dim);
  for (int k = 0; k < ckpt.config.input_dim; ++k)
    ckpt.norm_centroid[k] = read_raw<double>(is);
  ckpt.norm_scale = read_raw<double>(is);
  const auto n = read_raw<std::uint64_t>(is);
  ckpt.config.validate();
  if (Index(n) != param_count(ckpt.config))
    throw IoError("checkpoint: parameter count does not match config");
  ckpt.params.resize(Index(n));
  is.read(reinterpret_cast<char*>(ckpt.params.data()),
          std::streamsize(sizeof(double)) * Index(n));
  if (!is) throw IoError("checkpoint: truncated parameter block");
  if (!ckpt.params.allFinite())
    throw NumericError("checkpoint: non-finite parameter in '" + path + "'");
  return ckpt;
}

}  // namespace epsdf
