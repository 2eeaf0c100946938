#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "epsdf/dataio.hpp"
#include "epsdf/losses.hpp"
#include "epsdf/mlp.hpp"

namespace epsdf {

struct TrainConfig {
  int iterations = 10000;
  int batch_size = 128;
  double learning_rate = 1e-4;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 0;
  LossWeights weights;
  int checkpoint_every = 0;  // 0: only the final model
  int log_every = 1;
  bool deterministic = false;  // zeroes wall-time columns so logs are byte-stable
  // optional step decay, off by default
  double lr_decay_factor = 1.0;
  int lr_decay_every = 0;

  void validate() const;
};

struct TrainRecord {
  int step = 0;
  double vanish = 0.0, eikonal = 0.0, laplacian = 0.0, total = 0.0;
  double edge_fraction = 0.0;
  double seconds = 0.0;
};

struct TrainHistory {
  std::vector<TrainRecord> records;
};

/// Uniform draw of batch_size points: without replacement (a partial
/// shuffle), or with replacement when batch_size exceeds the cloud.
Mat sample_surface_batch(const PointCloud& cloud, Index batch_size, Rng& rng);

/// Uniform points inside the 1.1-scaled box.
Mat sample_domain_batch(const Bbox& bbox, Index count, Rng& rng);

struct AdamState {
  Vec m, v;
  long step = 0;

  static AdamState zero(Index n) { return {Vec::Zero(n), Vec::Zero(n), 0}; }
};

/// Bias-corrected adaptive-moment update, in place.
void adam_step(Vec& params, const Eigen::Ref<const Vec>& grad, AdamState& state,
               double learning_rate, double beta1, double beta2, double eps);

struct TrainCallbacks {
  std::function<void(const TrainRecord&)> on_record;
  std::function<void(int step, const MlpModel&)> on_checkpoint;
};

/// The optimization loop: each step draws a surface and a domain batch,
/// recomputes the edge-sampling mask from the current Laplacians, evaluates
/// the total objective and applies one adaptive-moment update. Aborts with
/// NumericError if any loss value goes non-finite.
std::pair<MlpModel, TrainHistory> train(const PointCloud& cloud,
                                        const MlpConfig& mlp_config,
                                        const TrainConfig& config,
                                        const TrainCallbacks& callbacks = {});

/// CSV with header step,vanish,eikonal,laplacian,total,edge_fraction,seconds.
void save_loss_log(const std::string& path, const TrainHistory& history);

}  // namespace epsdf
