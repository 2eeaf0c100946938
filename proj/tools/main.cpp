// epsdf: fits an edge-preserving neural signed-distance function to a raw
// point cloud and derives meshes, normals, sharp-edge sets and evaluation
// metrics from the result.

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>

#include "epsdf/geometry.hpp"
#include "epsdf/metrics.hpp"
#include "epsdf/trainer.hpp"

namespace fs = std::filesystem;
using namespace epsdf;

namespace {

constexpr const char* kToolVersion = "1.0.0";
constexpr int kCheckpointFormat = 1;

struct Manifest {
  std::vector<std::pair<std::string, std::string>> entries;

  void add(const std::string& key, const std::string& value) {
    entries.emplace_back(key, value);
  }
  void add(const std::string& key, double value) {
    std::ostringstream ss;
    ss.precision(17);
    ss << value;
    add(key, ss.str());
  }
  void add(const std::string& key, std::int64_t value) { add(key, std::to_string(value)); }

  void write(const std::string& path) const {
    std::ofstream os(path);
    if (!os) throw IoError("cannot open '" + path + "' for writing");
    os << "tool=epsdf " << kToolVersion << '\n';
    os << "checkpoint_format=" << kCheckpointFormat << '\n';
    for (const auto& [k, v] : entries) os << k << '=' << v << '\n';
    if (!os) throw IoError("write failed for '" + path + "'");
  }
};

struct ModelFlags {
  int width = 512;
  int depth = 8;
  std::vector<int> skip;  // empty: centre layer
  bool no_skip = false;
  double beta = 100.0;
  double init_radius = 1.0;

  MlpConfig to_config(int dim) const {
    MlpConfig cfg;
    cfg.input_dim = dim;
    cfg.hidden_width = width;
    cfg.num_hidden_layers = depth;
    if (no_skip) cfg.skip_layers.clear();
    else if (!skip.empty()) cfg.skip_layers = skip;
    else if (depth >= 2) cfg.skip_layers = {depth / 2};
    else cfg.skip_layers.clear();
    cfg.softplus_beta = beta;
    cfg.init_radius = init_radius;
    cfg.validate();
    return cfg;
  }

  void register_flags(CLI::App* cmd) {
    cmd->add_option("--width", width, "Hidden layer width");
    cmd->add_option("--depth", depth, "Number of hidden layers");
    cmd->add_option("--skip", skip, "Hidden layers that re-receive the input point");
    cmd->add_flag("--no-skip", no_skip, "Disable skip connections");
    cmd->add_option("--beta", beta, "Softplus inverse temperature");
    cmd->add_option("--init-radius", init_radius, "Radius of the initialization sphere");
  }

  void describe(Manifest& m, const MlpConfig& cfg) const {
    m.add("model.width", std::int64_t(cfg.hidden_width));
    m.add("model.depth", std::int64_t(cfg.num_hidden_layers));
    std::ostringstream ss;
    for (std::size_t i = 0; i < cfg.skip_layers.size(); ++i)
      ss << (i ? "," : "") << cfg.skip_layers[i];
    m.add("model.skip", ss.str());
    m.add("model.beta", cfg.softplus_beta);
    m.add("model.init_radius", cfg.init_radius);
  }
};

struct TrainFlags {
  TrainConfig config;

  void register_flags(CLI::App* cmd) {
    cmd->add_option("--iterations", config.iterations, "Optimization steps");
    cmd->add_option("--batch", config.batch_size, "Surface batch size");
    cmd->add_option("--lr", config.learning_rate, "Learning rate");
    cmd->add_option("--lambda-eikonal", config.weights.lambda_eikonal,
                    "Weight of the unit-gradient term");
    cmd->add_option("--lambda-laplacian", config.weights.lambda_laplacian,
                    "Weight of the Laplacian smoothness term");
    cmd->add_option("--lambda-normal", config.weights.lambda_normal,
                    "Weight of the supervised normal term (0 disables)");
    cmd->add_option("--tau", config.weights.tau_edge,
                    "Laplacian magnitude above which points count as edges");
    cmd->add_option("--checkpoint-every", config.checkpoint_every,
                    "Write intermediate checkpoints every N steps (0: only final)");
    cmd->add_option("--log-every", config.log_every, "Log every N steps");
    cmd->add_option("--lr-decay-every", config.lr_decay_every,
                    "Decay the learning rate every N steps (0: constant)");
    cmd->add_option("--lr-decay-factor", config.lr_decay_factor,
                    "Multiplicative learning-rate decay factor");
  }

  void describe(Manifest& m) const {
    m.add("train.iterations", std::int64_t(config.iterations));
    m.add("train.batch", std::int64_t(config.batch_size));
    m.add("train.lr", config.learning_rate);
    m.add("train.adam_beta1", config.adam_beta1);
    m.add("train.adam_beta2", config.adam_beta2);
    m.add("train.adam_eps", config.adam_eps);
    m.add("train.lambda_eikonal", config.weights.lambda_eikonal);
    m.add("train.lambda_laplacian", config.weights.lambda_laplacian);
    m.add("train.lambda_normal", config.weights.lambda_normal);
    m.add("train.tau", config.weights.tau_edge);
    m.add("train.log_every", std::int64_t(config.log_every));
    m.add("train.checkpoint_every", std::int64_t(config.checkpoint_every));
    m.add("train.lr_decay_every", std::int64_t(config.lr_decay_every));
    m.add("train.lr_decay_factor", config.lr_decay_factor);
    m.add("train.seed", std::int64_t(config.seed));
    m.add("train.deterministic", std::int64_t(config.deterministic));
  }
};

std::string lower_ext(const std::string& path) {
  const auto dot = path.find_last_of('.');
  if (dot == std::string::npos) return "";
  std::string ext = path.substr(dot + 1);
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return char(std::tolower(c)); });
  return ext;
}

void require_exists(const std::string& path) {
  if (!fs::exists(path)) throw IoError("input file '" + path + "' does not exist");
}

MlpModel model_of(const Checkpoint& ckpt) { return {ckpt.config, ckpt.params}; }

NormalizationRecord record_of(const Checkpoint& ckpt) {
  return {ckpt.norm_centroid, ckpt.norm_scale};
}

/// Point set for evaluation: meshes are surface-sampled, clouds used as-is.
struct EvalPoints {
  Mat points;
  Mat normals;  // may be empty
  bool from_mesh = false;
};

EvalPoints load_eval_points(const std::string& path, Index samples, Rng& rng) {
  require_exists(path);
  const std::string ext = lower_ext(path);
  EvalPoints out;
  if (ext == "obj" || ext == "ply") {
    const TriMesh mesh = load_mesh(path);
    if (mesh.num_faces() > 0) {
      const PointCloud cloud = sample_mesh_surface(mesh, samples, rng);
      out.points = cloud.points;
      out.normals = cloud.normals;
      out.from_mesh = true;
      return out;
    }
    if (ext == "ply") {
      out.points = mesh.vertices;
      out.normals = mesh.normals;
      return out;
    }
    throw IoError(path + ": OBJ input has no faces");
  }
  const PointCloud cloud = load_cloud(path);
  out.points = cloud.points;
  if (cloud.has_normals()) out.normals = cloud.normals;
  return out;
}

/// Edge point set from any of: x,y[,z] sample rows; index,is_edge labels
/// (resolved against `cloud`); or an index,x,..,abs_laplacian report written
/// by `epsdf edges`.
Mat load_edge_points(const std::string& path, const Mat* cloud) {
  require_exists(path);
  std::ifstream probe(path);
  std::string first;
  std::getline(probe, first);
  probe.close();
  if (first.rfind("index,x", 0) == 0) {
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);  // header
    const int dim = first.rfind("index,x,y,z", 0) == 0 ? 3 : 2;
    std::vector<Vec> rows;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      std::replace(line.begin(), line.end(), ',', ' ');
      std::istringstream ss(line);
      double idx;
      Vec p(dim);
      ss >> idx;
      for (int k = 0; k < dim; ++k) ss >> p[k];
      if (!ss) throw IoError(path + ": malformed edge report row");
      rows.push_back(p);
    }
    Mat out(Index(rows.size()), dim);
    for (Index i = 0; i < out.rows(); ++i) out.row(i) = rows[std::size_t(i)].transpose();
    return out;
  }
  const EdgeGroundTruth gt = load_edge_ground_truth(path);
  if (!gt.labeled()) return gt.edge_points;
  if (cloud == nullptr)
    throw ConfigError("labeled edge file '" + path + "' needs its point cloud");
  if (Index(gt.labels.size()) != cloud->rows())
    throw ConfigError("edge labels in '" + path + "' do not match the cloud size");
  Index count = 0;
  for (auto b : gt.labels) count += b;
  Mat out(count, cloud->cols());
  Index at = 0;
  for (Index i = 0; i < cloud->rows(); ++i)
    if (gt.labels[std::size_t(i)]) out.row(at++) = cloud->row(i);
  return out;
}

double median_of(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

// ---------------------------------------------------------------------------
// subcommands

struct FitArgs {
  std::string input;
  std::string out_dir = "fit_out";
  ModelFlags model;
  TrainFlags train;
};

void run_fit(const FitArgs& args) {
  require_exists(args.input);
  const PointCloud cloud = normalize(load_cloud(args.input));
  const MlpConfig mlp_config = args.model.to_config(cloud.dim());

  fs::create_directories(args.out_dir);
  const std::string ckpt_path = (fs::path(args.out_dir) / "checkpoint.bin").string();
  const std::string log_path = (fs::path(args.out_dir) / "loss_log.csv").string();

  TrainCallbacks callbacks;
  callbacks.on_checkpoint = [&](int step, const MlpModel& model) {
    const std::string path =
        (fs::path(args.out_dir) / ("checkpoint_" + std::to_string(step) + ".bin")).string();
    save_checkpoint(path, {model.config, model.params, std::uint64_t(step),
                           args.train.config.seed, cloud.norm.centroid, cloud.norm.scale});
  };

  const auto [model, history] = train(cloud, mlp_config, args.train.config, callbacks);
  save_checkpoint(ckpt_path,
                  {model.config, model.params, std::uint64_t(args.train.config.iterations),
                   args.train.config.seed, cloud.norm.centroid, cloud.norm.scale});
  save_loss_log(log_path, history);

  Manifest manifest;
  manifest.add("command", std::string("fit"));
  manifest.add("input", args.input);
  manifest.add("input.points", std::int64_t(cloud.size()));
  manifest.add("input.dim", std::int64_t(cloud.dim()));
  args.model.describe(manifest, mlp_config);
  args.train.describe(manifest);
  manifest.add("output.checkpoint", std::string("checkpoint.bin"));
  manifest.add("output.loss_log", std::string("loss_log.csv"));
  manifest.write((fs::path(args.out_dir) / "run_manifest.txt").string());

  std::cout << "fit: " << cloud.size() << " points, " << args.train.config.iterations
            << " iterations -> " << ckpt_path << '\n';
}

struct MeshArgs {
  std::string checkpoint;
  std::string out = "mesh.obj";
  int resolution = 0;  // 0: 128 in 3d, 512 in 2d
};

void run_mesh(const MeshArgs& args) {
  require_exists(args.checkpoint);
  const Checkpoint ckpt = load_checkpoint(args.checkpoint);
  const MlpModel model = model_of(ckpt);
  const int dim = model.config.input_dim;
  const int resolution = args.resolution > 0 ? args.resolution : (dim == 3 ? 128 : 512);

  // the model lives in the canonical frame: the unit ball around the origin
  const Bbox box{Vec::Constant(dim, -1.0), Vec::Constant(dim, 1.0)};
  TriMesh mesh = extract_isosurface(field_of(model), box, resolution);
  mesh.vertices = denormalize(mesh.vertices, record_of(ckpt));

  const std::string ext = lower_ext(args.out);
  if (ext == "obj") save_mesh_obj(args.out, mesh);
  else if (ext == "ply") save_mesh_ply(args.out, mesh);
  else throw ConfigError("mesh output must end in .obj or .ply");

  Manifest manifest;
  manifest.add("command", std::string("mesh"));
  manifest.add("checkpoint", args.checkpoint);
  manifest.add("resolution", std::int64_t(resolution));
  manifest.add("vertices", std::int64_t(mesh.num_vertices()));
  manifest.add("faces", std::int64_t(mesh.num_faces()));
  manifest.write(args.out + ".manifest");

  std::cout << "mesh: " << mesh.num_vertices() << " vertices, " << mesh.num_faces()
            << (dim == 3 ? " triangles -> " : " segments -> ") << args.out << '\n';
}

struct PointsArgs {
  std::string checkpoint;
  std::string input;
  std::string out;
  double tau = 20.0;
  int bins = 64;
};

void run_normals(const PointsArgs& args) {
  require_exists(args.checkpoint);
  require_exists(args.input);
  const Checkpoint ckpt = load_checkpoint(args.checkpoint);
  const MlpModel model = model_of(ckpt);
  PointCloud cloud = load_cloud(args.input);
  if (cloud.dim() != model.config.input_dim)
    throw ConfigError("cloud dimension does not match the checkpoint");
  const Mat canonical = normalize_with(cloud.points, record_of(ckpt));
  Index zero_count = 0;
  cloud.normals = estimate_normals(model, canonical, &zero_count);
  save_cloud(args.out, cloud);

  Manifest manifest;
  manifest.add("command", std::string("normals"));
  manifest.add("checkpoint", args.checkpoint);
  manifest.add("input", args.input);
  manifest.add("points", std::int64_t(cloud.size()));
  manifest.add("zero_gradient_points", std::int64_t(zero_count));
  manifest.write(args.out + ".manifest");

  std::cout << "normals: " << cloud.size() << " points";
  if (zero_count > 0) std::cout << " (" << zero_count << " zero-gradient, flagged)";
  std::cout << " -> " << args.out << '\n';
}

void run_edges(const PointsArgs& args) {
  require_exists(args.checkpoint);
  require_exists(args.input);
  const Checkpoint ckpt = load_checkpoint(args.checkpoint);
  const MlpModel model = model_of(ckpt);
  const PointCloud cloud = load_cloud(args.input);
  if (cloud.dim() != model.config.input_dim)
    throw ConfigError("cloud dimension does not match the checkpoint");
  const Mat canonical = normalize_with(cloud.points, record_of(ckpt));
  const EdgeReport report = detect_edges(model, canonical, args.tau);
  // coordinates in the input frame; laplacian magnitudes in canonical units
  save_edge_csv(args.out, cloud.points, report);

  Manifest manifest;
  manifest.add("command", std::string("edges"));
  manifest.add("checkpoint", args.checkpoint);
  manifest.add("input", args.input);
  manifest.add("tau", args.tau);
  manifest.add("edge_points", std::int64_t(report.edge_indices.size()));
  manifest.write(args.out + ".manifest");

  std::cout << "edges: " << report.edge_indices.size() << " of " << cloud.size()
            << " points above tau=" << args.tau << " -> " << args.out << '\n';
}

void run_hist(const PointsArgs& args) {
  require_exists(args.checkpoint);
  require_exists(args.input);
  const Checkpoint ckpt = load_checkpoint(args.checkpoint);
  const MlpModel model = model_of(ckpt);
  const PointCloud cloud = load_cloud(args.input);
  if (cloud.dim() != model.config.input_dim)
    throw ConfigError("cloud dimension does not match the checkpoint");
  const Mat canonical = normalize_with(cloud.points, record_of(ckpt));
  const LaplacianHistogram hist = laplacian_histogram(model, canonical, args.bins);
  save_histogram_csv(args.out, hist);

  Manifest manifest;
  manifest.add("command", std::string("hist"));
  manifest.add("checkpoint", args.checkpoint);
  manifest.add("input", args.input);
  manifest.add("bins", std::int64_t(args.bins));
  manifest.add("q50", hist.q50);
  manifest.add("q90", hist.q90);
  manifest.add("q99", hist.q99);
  manifest.write(args.out + ".manifest");

  std::cout << "hist: |laplacian| quantiles q50=" << hist.q50 << " q90=" << hist.q90
            << " q99=" << hist.q99 << " -> " << args.out << '\n';
}

struct EvalArgs {
  std::string pred, gt;
  std::string pred_edges, gt_edges;
  std::string out_prefix = "report";
  Index samples = 10000;
  double match_radius = 0.01;
  bool oracle = false;
  bool orient_sensitive = false;
  std::uint64_t seed = 0;
};

double brute_directed_mean(const Mat& from, const Mat& to, double* worst) {
  double sum = 0.0;
  for (Index i = 0; i < from.rows(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (Index j = 0; j < to.rows(); ++j)
      best = std::min(best, (from.row(i) - to.row(j)).norm());
    sum += best;
    *worst = std::max(*worst, best);
  }
  return sum / double(from.rows());
}

void run_eval(const EvalArgs& args) {
  Rng rng(args.seed);
  const EvalPoints pred = load_eval_points(args.pred, args.samples, rng);
  const EvalPoints gt = load_eval_points(args.gt, args.samples, rng);

  MetricReport report;
  report.chamfer_mean = chamfer(pred.points, gt.points);
  report.hausdorff = hausdorff(pred.points, gt.points);
  // the angle metric needs row-matched normals, which only point-cloud
  // inputs provide
  if (pred.normals.rows() == gt.normals.rows() && pred.normals.rows() > 0 &&
      !pred.from_mesh && !gt.from_mesh) {
    report.angle_mean = normal_angle_error(pred.normals, gt.normals, !args.orient_sensitive);
  }
  if (!args.pred_edges.empty() && !args.gt_edges.empty()) {
    const Mat pe = load_edge_points(args.pred_edges, &pred.points);
    const Mat ge = load_edge_points(args.gt_edges, &gt.points);
    const EdgePr pr = edge_pr_iou(pe, ge, args.match_radius);
    report.edge_precision = pr.precision;
    report.edge_recall = pr.recall;
    report.edge_iou = pr.iou;
    if (pe.rows() > 0) report.ecd = edge_chamfer(pe, ge);
  }

  if (args.oracle) {
    double worst_a = 0.0, worst_b = 0.0;
    const double da = brute_directed_mean(pred.points, gt.points, &worst_a);
    const double db = brute_directed_mean(gt.points, pred.points, &worst_b);
    const double brute_c = 0.5 * (da + db);
    const double brute_h = std::max(worst_a, worst_b);
    std::cout << "oracle: chamfer " << report.chamfer_mean << " vs brute " << brute_c
              << ", hausdorff " << report.hausdorff << " vs brute " << brute_h << '\n';
    if (std::abs(brute_c - report.chamfer_mean) > 1e-9 ||
        std::abs(brute_h - report.hausdorff) > 1e-9)
      throw NumericError("eval: accelerated metrics disagree with brute force");
  }

  save_report_csv(args.out_prefix + ".csv", report);
  save_report_text(args.out_prefix + ".txt", report);

  Manifest manifest;
  manifest.add("command", std::string("eval"));
  manifest.add("pred", args.pred);
  manifest.add("gt", args.gt);
  manifest.add("pred_edges", args.pred_edges);
  manifest.add("gt_edges", args.gt_edges);
  manifest.add("samples", std::int64_t(args.samples));
  manifest.add("match_radius", args.match_radius);
  manifest.add("seed", std::int64_t(args.seed));
  manifest.add("oracle", std::int64_t(args.oracle));
  manifest.write(args.out_prefix + ".manifest");

  std::cout << format_report(report);
  std::cout << "eval -> " << args.out_prefix << ".csv\n";
}

struct StressArgs {
  std::vector<std::string> inputs;
  std::vector<double> noise{0.0, 0.005, 0.01};
  std::vector<Index> density{4096, 8192, 16384};
  std::string out_dir = "stress_out";
  Index eval_samples = 10000;
  int resolution = 0;
  ModelFlags model;
  TrainFlags train;
};

void run_stress(const StressArgs& args) {
  if (args.inputs.empty()) throw ConfigError("stress: at least one --input is required");
  if (args.noise.empty() || args.density.empty())
    throw ConfigError("stress: noise and density lists must be non-empty");
  for (const auto& path : args.inputs) require_exists(path);
  fs::create_directories(args.out_dir);

  std::ofstream grid_csv(fs::path(args.out_dir) / "stress.csv");
  if (!grid_csv) throw IoError("cannot open stress.csv for writing");
  grid_csv.precision(12);
  grid_csv << "noise,density,shapes_ok,shapes_failed,dc_mean,dc_median,dh_mean,dh_median\n";

  Index cell_index = 0;
  for (double sigma : args.noise) {
    for (Index density : args.density) {
      std::vector<double> dcs, dhs;
      Index failed = 0;
      for (std::size_t shape_i = 0; shape_i < args.inputs.size(); ++shape_i) {
        const std::string& input = args.inputs[shape_i];
        std::ostringstream cell_name;
        cell_name << "cell_n" << sigma << "_d" << density << "_s" << shape_i;
        const fs::path cell_dir = fs::path(args.out_dir) / cell_name.str();
        try {
          fs::create_directories(cell_dir);
          const std::uint64_t cell_seed = args.train.config.seed +
                                          1000003ull * std::uint64_t(cell_index) +
                                          std::uint64_t(shape_i);
          Rng rng(cell_seed);

          // training cloud at the requested density, ground truth at the
          // evaluation density, both in the shape's native frame
          PointCloud train_cloud;
          Mat gt_points;
          const std::string ext = lower_ext(input);
          if (ext == "obj" || ext == "ply") {
            const TriMesh mesh = load_mesh(input);
            if (mesh.num_faces() > 0) {
              train_cloud = sample_mesh_surface(mesh, density, rng);
              gt_points = sample_mesh_surface(mesh, args.eval_samples, rng).points;
            }
          }
          if (train_cloud.size() == 0) {
            const PointCloud full = load_cloud(input);
            train_cloud = subsample(full, density, rng);
            gt_points = full.points;
          }

          // noise in canonical units, after normalization
          train_cloud = add_noise(normalize(train_cloud), sigma, rng);

          TrainConfig train_config = args.train.config;
          train_config.seed = cell_seed;
          const MlpConfig mlp_config = args.model.to_config(train_cloud.dim());
          const auto [model, history] = train(train_cloud, mlp_config, train_config);
          save_loss_log((cell_dir / "loss_log.csv").string(), history);

          const int dim = train_cloud.dim();
          const int resolution =
              args.resolution > 0 ? args.resolution : (dim == 3 ? 128 : 512);
          const Bbox box{Vec::Constant(dim, -1.0), Vec::Constant(dim, 1.0)};
          const TriMesh mesh = extract_isosurface(field_of(model), box, resolution);
          if (mesh.empty()) throw NumericError("stress: empty reconstruction");
          const PointCloud mesh_samples =
              sample_mesh_surface(mesh, args.eval_samples, rng);

          // compare in the canonical frame so cells are commensurable
          const Mat gt_canonical = normalize_with(gt_points, train_cloud.norm);
          const double dc = chamfer(mesh_samples.points, gt_canonical);
          const double dh = hausdorff(mesh_samples.points, gt_canonical);
          dcs.push_back(dc);
          dhs.push_back(dh);

          MetricReport cell_report;
          cell_report.chamfer_mean = dc;
          cell_report.hausdorff = dh;
          save_report_csv((cell_dir / "metrics.csv").string(), cell_report);
        } catch (const std::exception& e) {
          ++failed;
          std::ofstream status(cell_dir / "FAILED.txt");
          status << e.what() << '\n';
          std::cerr << "stress cell failed (" << cell_name.str() << "): " << e.what()
                    << '\n';
        }
      }
      grid_csv << sigma << ',' << density << ',' << dcs.size() << ',' << failed << ',';
      if (dcs.empty()) {
        grid_csv << ",,,\n";
      } else {
        const double dc_mean =
            std::accumulate(dcs.begin(), dcs.end(), 0.0) / double(dcs.size());
        const double dh_mean =
            std::accumulate(dhs.begin(), dhs.end(), 0.0) / double(dhs.size());
        grid_csv << dc_mean << ',' << median_of(dcs) << ',' << dh_mean << ','
                 << median_of(dhs) << '\n';
      }
      ++cell_index;
    }
  }
  if (!grid_csv) throw IoError("write failed for stress.csv");

  Manifest manifest;
  manifest.add("command", std::string("stress"));
  for (const auto& input : args.inputs) manifest.add("input", input);
  {
    std::ostringstream ss;
    for (std::size_t i = 0; i < args.noise.size(); ++i) ss << (i ? "," : "") << args.noise[i];
    manifest.add("noise", ss.str());
  }
  {
    std::ostringstream ss;
    for (std::size_t i = 0; i < args.density.size(); ++i)
      ss << (i ? "," : "") << args.density[i];
    manifest.add("density", ss.str());
  }
  manifest.add("eval_samples", std::int64_t(args.eval_samples));
  args.train.describe(manifest);
  manifest.write((fs::path(args.out_dir) / "run_manifest.txt").string());

  std::cout << "stress: " << args.noise.size() * args.density.size() << " cells -> "
            << (fs::path(args.out_dir) / "stress.csv").string() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"edge-preserving neural signed-distance fitting"};
  app.require_subcommand(1);
  app.set_config("--config", "", "Read options from a key=value file with sections");
  app.allow_config_extras(false);

  FitArgs fit_args;
  MeshArgs mesh_args;
  PointsArgs normals_args, edges_args, hist_args;
  EvalArgs eval_args;
  StressArgs stress_args;

  auto add_seed_flags = [](CLI::App* cmd, TrainConfig& config) {
    cmd->add_option("--seed", config.seed, "Random seed");
    cmd->add_flag("--deterministic", config.deterministic,
                  "Byte-stable outputs (zeroes wall-time columns)");
  };

  CLI::App* fit = app.add_subcommand("fit", "Fit a signed-distance model to a cloud");
  fit->add_option("--input", fit_args.input, "Input point cloud (xyz/ply/csv)")->required();
  fit->add_option("--out-dir", fit_args.out_dir, "Output directory");
  fit_args.model.register_flags(fit);
  fit_args.train.register_flags(fit);
  add_seed_flags(fit, fit_args.train.config);
  fit->callback([&] { run_fit(fit_args); });

  CLI::App* mesh = app.add_subcommand("mesh", "Extract the zero level set as a mesh");
  mesh->add_option("--checkpoint", mesh_args.checkpoint, "Trained checkpoint")->required();
  mesh->add_option("--out", mesh_args.out, "Output mesh (.obj or .ply)");
  mesh->add_option("--resolution", mesh_args.resolution,
                   "Grid cells per axis (default 128 in 3d, 512 in 2d)");
  mesh->callback([&] { run_mesh(mesh_args); });

  CLI::App* normals = app.add_subcommand("normals", "Estimate per-point normals");
  normals->add_option("--checkpoint", normals_args.checkpoint)->required();
  normals->add_option("--input", normals_args.input, "Points to evaluate")->required();
  normals->add_option("--out", normals_args.out, "Output cloud with normals")->required();
  normals->callback([&] { run_normals(normals_args); });

  CLI::App* edges = app.add_subcommand("edges", "Detect sharp-edge points");
  edges->add_option("--checkpoint", edges_args.checkpoint)->required();
  edges->add_option("--input", edges_args.input, "Points to classify")->required();
  edges->add_option("--out", edges_args.out, "Edge CSV")->required();
  edges->add_option("--tau", edges_args.tau, "Laplacian magnitude threshold");
  edges->callback([&] { run_edges(edges_args); });

  CLI::App* hist = app.add_subcommand("hist", "Laplacian magnitude histogram");
  hist->add_option("--checkpoint", hist_args.checkpoint)->required();
  hist->add_option("--input", hist_args.input, "Points to evaluate")->required();
  hist->add_option("--out", hist_args.out, "Histogram CSV")->required();
  hist->add_option("--bins", hist_args.bins, "Number of bins");
  hist->callback([&] { run_hist(hist_args); });

  CLI::App* eval = app.add_subcommand("eval", "Compare predictions against ground truth");
  eval->add_option("--pred", eval_args.pred, "Predicted mesh or cloud")->required();
  eval->add_option("--gt", eval_args.gt, "Ground-truth mesh or cloud")->required();
  eval->add_option("--pred-edges", eval_args.pred_edges, "Predicted edge points (CSV)");
  eval->add_option("--gt-edges", eval_args.gt_edges, "Ground-truth edge points (CSV)");
  eval->add_option("--out-prefix", eval_args.out_prefix, "Report path prefix");
  eval->add_option("--samples", eval_args.samples, "Samples drawn from mesh inputs");
  eval->add_option("--match-radius", eval_args.match_radius, "Edge matching radius");
  eval->add_flag("--oracle", eval_args.oracle, "Cross-check distances with brute force");
  eval->add_flag("--orient-sensitive", eval_args.orient_sensitive,
                 "Respect normal orientation in the angle metric");
  eval->add_option("--seed", eval_args.seed, "Random seed for mesh sampling");
  eval->callback([&] { run_eval(eval_args); });

  CLI::App* stress = app.add_subcommand("stress", "Noise/density grid over input shapes");
  stress->add_option("--input", stress_args.inputs, "Input shapes (repeatable)")->required();
  stress->add_option("--noise", stress_args.noise, "Noise sigmas")->delimiter(',');
  stress->add_option("--density", stress_args.density, "Sample counts")->delimiter(',');
  stress->add_option("--out-dir", stress_args.out_dir, "Output directory");
  stress->add_option("--eval-samples", stress_args.eval_samples, "Evaluation sample count");
  stress->add_option("--resolution", stress_args.resolution, "Extraction resolution");
  stress_args.model.register_flags(stress);
  stress_args.train.register_flags(stress);
  add_seed_flags(stress, stress_args.train.config);
  stress->callback([&] { run_stress(stress_args); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // collapse CLI11's exit-code zoo onto the documented 0/1 contract
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const NumericError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
