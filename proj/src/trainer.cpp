#include "epsdf/trainer.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace epsdf {

namespace {

std::vector<Index> sample_indices(Index n, Index batch_size, Rng& rng) {
  std::vector<Index> idx;
  idx.reserve(std::size_t(batch_size));
  if (batch_size > n) {
    for (Index i = 0; i < batch_size; ++i) idx.push_back(Index(rng.below(std::uint64_t(n))));
    return idx;
  }
  std::vector<Index> pool(static_cast<std::size_t>(n), Index(0));
  std::iota(pool.begin(), pool.end(), Index(0));
  for (Index i = 0; i < batch_size; ++i) {
    const Index j = i + Index(rng.below(std::uint64_t(n - i)));
    std::swap(pool[std::size_t(i)], pool[std::size_t(j)]);
    idx.push_back(pool[std::size_t(i)]);
  }
  return idx;
}

Mat gather_rows(const Mat& src, const std::vector<Index>& idx) {
  Mat out(Index(idx.size()), src.cols());
  for (Index i = 0; i < out.rows(); ++i) out.row(i) = src.row(idx[std::size_t(i)]);
  return out;
}

}  // namespace

void TrainConfig::validate() const {
  if (iterations < 1) throw ConfigError("TrainConfig: iterations must be positive");
  if (batch_size < 1) throw ConfigError("TrainConfig: batch_size must be >= 1");
  if (learning_rate <= 0.0) throw ConfigError("TrainConfig: learning_rate must be positive");
  if (adam_beta1 < 0.0 || adam_beta1 >= 1.0 || adam_beta2 < 0.0 || adam_beta2 >= 1.0)
    throw ConfigError("TrainConfig: adam betas must lie in [0, 1)");
  if (adam_eps <= 0.0) throw ConfigError("TrainConfig: adam_eps must be positive");
  if (log_every < 1) throw ConfigError("TrainConfig: log_every must be >= 1");
  if (checkpoint_every < 0) throw ConfigError("TrainConfig: checkpoint_every must be >= 0");
  if (lr_decay_every < 0 || lr_decay_factor <= 0.0)
    throw ConfigError("TrainConfig: bad learning-rate decay");
  weights.validate();
}

Mat sample_surface_batch(const PointCloud& cloud, Index batch_size, Rng& rng) {
  if (cloud.size() == 0) throw ConfigError("sample_surface_batch: empty cloud");
  if (batch_size < 1) throw ConfigError("sample_surface_batch: batch_size must be >= 1");
  return gather_rows(cloud.points, sample_indices(cloud.size(), batch_size, rng));
}

Mat sample_domain_batch(const Bbox& bbox, Index count, Rng& rng) {
  if (count < 1) throw ConfigError("sample_domain_batch: count must be >= 1");
  if ((bbox.extent().array() < 0.0).any())
    throw ConfigError("sample_domain_batch: invalid bbox");
  const Bbox box = bbox.scaled(1.1);
  Mat out(count, box.dim());
  for (Index i = 0; i < count; ++i)
    for (int k = 0; k < box.dim(); ++k)
      out(i, k) = rng.uniform(box.min[k], box.max[k]);
  return out;
}

void adam_step(Vec& params, const Eigen::Ref<const Vec>& grad, AdamState& state,
               double learning_rate, double beta1, double beta2, double eps) {
  if (params.size() != grad.size() || state.m.size() != params.size() ||
      state.v.size() != params.size())
    throw ConfigError("adam_step: shape mismatch");
  ++state.step;
  state.m = beta1 * state.m + (1.0 - beta1) * grad;
  state.v = beta2 * state.v + (1.0 - beta2) * grad.cwiseProduct(grad);
  const double c1 = 1.0 - std::pow(beta1, double(state.step));
  const double c2 = 1.0 - std::pow(beta2, double(state.step));
  params.array() -= learning_rate * (state.m / c1).array() /
                    ((state.v / c2).array().sqrt() + eps);
}

std::pair<MlpModel, TrainHistory> train(const PointCloud& cloud,
                                        const MlpConfig& mlp_config,
                                        const TrainConfig& config,
                                        const TrainCallbacks& callbacks) {
  cloud.validate();
  mlp_config.validate();
  config.validate();
  if (cloud.dim() != mlp_config.input_dim)
    throw ConfigError("train: cloud dimension does not match model input_dim");

  const bool use_normals = config.weights.lambda_normal > 0.0;
  if (use_normals && !cloud.has_normals())
    throw ConfigError("train: normal supervision requested but the cloud has no normals");

  MlpModel model = init_geometric(mlp_config, config.seed);
  AdamState adam = AdamState::zero(model.params.size());
  Rng rng(config.seed + 0x9e3779b97f4a7c15ull);  // decorrelated from the init stream
  const Bbox bbox = Bbox::of_points(cloud.points);
  const Index batch = std::min<Index>(config.batch_size, cloud.size());

  TrainHistory history;
  const auto t0 = std::chrono::steady_clock::now();
  double lr = config.learning_rate;

  for (int step = 1; step <= config.iterations; ++step) {
    const std::vector<Index> idx = sample_indices(cloud.size(), batch, rng);
    const Mat surface = gather_rows(cloud.points, idx);
    const Mat domain = sample_domain_batch(bbox, batch, rng);
    Mat normals;
    if (use_normals) normals = gather_rows(cloud.normals, idx);

    TotalLossResult result = total_loss(model, surface, domain, config.weights,
                                        use_normals ? &normals : nullptr);
    const LossBreakdown& br = result.breakdown;
    if (!std::isfinite(br.total)) {
      std::ostringstream msg;
      msg << "train: non-finite loss at step " << step << " (vanish=" << br.vanish
          << " eikonal=" << br.eikonal << " laplacian=" << br.laplacian << ")";
      throw NumericError(msg.str());
    }

    adam_step(model.params, result.gradient, adam, lr, config.adam_beta1,
              config.adam_beta2, config.adam_eps);
    if (config.lr_decay_every > 0 && step % config.lr_decay_every == 0)
      lr *= config.lr_decay_factor;

    if (step % config.log_every == 0 || step == config.iterations) {
      TrainRecord rec;
      rec.step = step;
      rec.vanish = br.vanish;
      rec.eikonal = br.eikonal;
      rec.laplacian = br.laplacian;
      rec.total = br.total;
      rec.edge_fraction = br.edge_fraction;
      rec.seconds = config.deterministic
                        ? 0.0
                        : std::chrono::duration<double>(
                              std::chrono::steady_clock::now() - t0)
                              .count();
      history.records.push_back(rec);
      if (callbacks.on_record) callbacks.on_record(rec);
    }
    if (config.checkpoint_every > 0 && step % config.checkpoint_every == 0 &&
        callbacks.on_checkpoint)
      callbacks.on_checkpoint(step, model);
  }
  return {std::move(model), std::move(history)};
}

void save_loss_log(const std::string& path, const TrainHistory& history) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open '" + path + "' for writing");
  os.precision(12);
  os << "step,vanish,eikonal,laplacian,total,edge_fraction,seconds\n";
  for (const TrainRecord& r : history.records) {
    os << r.step << ',' << r.vanish << ',' << r.eikonal << ',' << r.laplacian << ','
       << r.total << ',' << r.edge_fraction << ',' << r.seconds << '\n';
  }
  if (!os) throw IoError("write failed for '" + path + "'");
}

}  // namespace epsdf
