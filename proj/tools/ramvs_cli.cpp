#include "ramvs/io.hpp"
#include "ramvs/pipeline.hpp"
#include "ramvs/sdf_supervision.hpp"
#include "ramvs/synthetic.hpp"
#include "ramvs/validation.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <functional>
#include <iostream>
#include <map>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

using namespace ramvs;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

int worker_count() {
  const char* env = std::getenv("RAMVS_THREADS");
  if (!env) return 1;
  const int n = std::atoi(env);
  return std::max(1, n);
}

// Runs fn(i) for i in [0, n); the first failure by index is rethrown.
void parallel_for(int n, const std::function<void(int)>& fn) {
  const int workers = std::min(worker_count(), std::max(n, 1));
  std::vector<std::exception_ptr> errors(n);
  std::atomic<int> next{0};
  const auto work = [&]() {
    for (int i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (int t = 1; t < workers; ++t) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

void make_dirs(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCategory::io, "cannot create '" + dir.string() + "': " + ec.message());
}

// ---------------------------------------------------------------------------
// Options shared by the subcommands that run the cascade

struct CascadeArgs {
  std::vector<int> hypotheses = {64, 32, 8};
  std::vector<double> intervals = {4.0, 2.0, 1.0};
  std::vector<int> divisors = {4, 2, 1};
  double theta = 0.1;
  bool no_fusion = false;
  int n_views = 5;
  int patch_k = 5;
  double temperature = PipelineConfig{}.temperature;
  int smoothing = 1;
  std::string weights = "similarity";
};

void add_cascade_options(CLI::App* sub, CascadeArgs& a) {
  sub->add_option("--hypotheses", a.hypotheses, "Hypotheses per stage")->delimiter(',')->capture_default_str();
  sub->add_option("--intervals", a.intervals, "Interval multipliers per stage")->delimiter(',')->capture_default_str();
  sub->add_option("--divisors", a.divisors, "Resolution divisors per stage")->delimiter(',')->capture_default_str();
  sub->add_option("--theta", a.theta, "Branch fusion threshold on |S|")->capture_default_str();
  sub->add_flag("--no-fusion", a.no_fusion, "Regress depth with soft-argmax only");
  sub->add_option("--n-views", a.n_views, "Views per estimate, reference included")->capture_default_str();
  sub->add_option("--patch-k", a.patch_k, "Patch size of the local distance search")->capture_default_str();
  sub->add_option("--temperature", a.temperature, "Softmax temperature of the probability head")->capture_default_str();
  sub->add_option("--smoothing", a.smoothing, "Box smoothing radius of the cost")->capture_default_str();
  sub->add_option("--weights", a.weights, "View weighting")->check(CLI::IsMember({"uniform", "similarity"}))->capture_default_str();
}

PipelineConfig to_config(const CascadeArgs& a) {
  if (a.hypotheses.size() != a.intervals.size() || a.hypotheses.size() != a.divisors.size()) {
    throw UsageError("--hypotheses, --intervals and --divisors must list the same number of stages");
  }
  PipelineConfig cfg;
  cfg.stages.clear();
  for (std::size_t i = 0; i < a.hypotheses.size(); ++i) cfg.stages.push_back({a.hypotheses[i], a.intervals[i], a.divisors[i]});
  cfg.theta = a.theta;
  cfg.fusion = !a.no_fusion;
  cfg.n_views = a.n_views;
  cfg.patch_k = a.patch_k;
  cfg.temperature = a.temperature;
  cfg.smoothing_radius = a.smoothing;
  cfg.weights = a.weights == "uniform" ? WeightMode::uniform : WeightMode::similarity;
  return cfg;
}

std::string describe(const PipelineConfig& cfg) {
  std::ostringstream s;
  const auto join = [&](auto getter) {
    std::string out;
    for (std::size_t i = 0; i < cfg.stages.size(); ++i) out += (i ? "," : "") + getter(cfg.stages[i]);
    return out;
  };
  s << "hypotheses=" << join([](const StageConfig& st) { return std::to_string(st.hypothesis_count); }) << "\n";
  s << "intervals=" << join([](const StageConfig& st) { return fmt17(st.interval_multiplier); }) << "\n";
  s << "divisors=" << join([](const StageConfig& st) { return std::to_string(st.resolution_divisor); }) << "\n";
  s << "theta=" << fmt17(cfg.theta) << "\n";
  s << "fusion=" << (cfg.fusion ? "true" : "false") << "\n";
  s << "n-views=" << cfg.n_views << "\n";
  s << "patch-k=" << cfg.patch_k << "\n";
  s << "temperature=" << fmt17(cfg.temperature) << "\n";
  s << "smoothing=" << cfg.smoothing_radius << "\n";
  s << "weights=" << (cfg.weights == WeightMode::uniform ? "uniform" : "similarity") << "\n";
  return s.str();
}

struct FilterArgs {
  FilterThresholds t;
};

void add_filter_options(CLI::App* sub, FilterArgs& f) {
  sub->add_option("--eps-px", f.t.eps_px, "Reprojection error threshold (pixels)")->capture_default_str();
  sub->add_option("--eps-rel", f.t.eps_rel, "Relative depth difference threshold")->capture_default_str();
  sub->add_option("--min-views", f.t.min_views, "Other views that must agree")->capture_default_str();
  sub->add_option("--min-conf", f.t.min_conf, "Minimum confidence")->capture_default_str();
}

std::vector<int> select_views(const std::vector<int>& requested, int n) {
  std::vector<int> views = requested;
  if (views.empty()) {
    for (int i = 0; i < n; ++i) views.push_back(i);
  }
  for (int v : views) {
    if (v < 0 || v >= n) throw UsageError("view index " + std::to_string(v) + " out of range");
  }
  return views;
}

DepthEstimate run_view(const SceneBundle& scene, const std::vector<GridXd>& images, int ref, const PipelineConfig& cfg,
                       bool keep_stages) {
  std::vector<GridXd> srcs;
  std::vector<Camera> cams;
  for (const PairEntry& e : scene.pairs[ref]) {
    if (static_cast<int>(srcs.size()) >= cfg.n_views - 1) break;
    srcs.push_back(images[e.view]);
    cams.push_back(scene.cams[e.view].camera);
  }
  if (srcs.empty()) throw Error(ErrorCategory::insufficient_views, "view " + std::to_string(ref) + " has no paired source views");
  return estimate_depth(images[ref], scene.cams[ref].camera, srcs, cams, cfg, keep_stages);
}

std::vector<GridXd> load_images(const SceneBundle& scene) {
  std::vector<GridXd> images(scene.size());
  parallel_for(scene.size(), [&](int i) { images[i] = read_image(scene.images[i]); });
  return images;
}

// ---------------------------------------------------------------------------
// Config files: keys mirror long flag names; command-line values win.

void apply_config(CLI::App* sub, const std::string& path) {
  if (path.empty()) return;
  for (const auto& [key, value] : read_config(path)) {
    CLI::Option* opt = sub->get_option_no_throw("--" + key);
    if (!opt || key == "config") throw UsageError(path + ": unknown key '" + key + "' for '" + sub->get_name() + "'");
    if (opt->count() > 0) continue;
    opt->add_result(value);
    opt->run_callback();
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ramvs: region-aware multi-view stereo toolkit"};
  app.require_subcommand(1);
  std::map<CLI::App*, std::string> config_paths;
  std::map<CLI::App*, std::function<void()>> actions;

  const auto add_config = [&](CLI::App* sub) {
    sub->add_option("--config", config_paths[sub], "key=value file; command-line flags take precedence");
  };

  // depth -------------------------------------------------------------------
  CascadeArgs depth_args;
  std::string depth_scene, depth_out;
  std::vector<int> depth_views;
  bool save_volumes = false, dry_run = false, theta_sweep = false;
  auto* depth = app.add_subcommand("depth", "Cascade depth and confidence maps (PFM)");
  depth->add_option("--scene", depth_scene, "Scene directory")->required();
  depth->add_option("--out", depth_out, "Output directory")->required();
  depth->add_option("--views", depth_views, "Reference views (default: all)")->delimiter(',');
  depth->add_flag("--save-volumes", save_volumes, "Also write the last stage's P and S volumes");
  depth->add_flag("--dry-run", dry_run, "Print the resolved configuration and exit");
  depth->add_flag("--theta-sweep", theta_sweep,
                  "Score theta 0.1, 0.2, 0.5, 1.0 against ground-truth depths (writes theta_sweep.txt)");
  add_cascade_options(depth, depth_args);
  add_config(depth);
  actions[depth] = [&]() {
    const PipelineConfig cfg = to_config(depth_args);
    cfg.validate();
    if (dry_run) {
      std::cout << describe(cfg);
      return;
    }
    const SceneBundle scene = load_scene(depth_scene);
    const std::vector<int> views = select_views(depth_views, scene.size());
    const std::vector<GridXd> images = load_images(scene);
    const fs::path out(depth_out);
    if (theta_sweep) {
      for (int v : views) {
        if (!scene.depths[v]) throw UsageError("--theta-sweep needs ground-truth depths for view " + std::to_string(v));
      }
      std::vector<DepthMap> gt(views.size());
      parallel_for(static_cast<int>(views.size()), [&](int k) { gt[k] = read_pfm_depth(*scene.depths[views[k]]); });
      std::string report = "theta    pixels     mean_abs_error     within_interval\n";
      for (double theta : {0.1, 0.2, 0.5, 1.0}) {
        PipelineConfig c = cfg;
        c.theta = theta;
        c.fusion = true;
        std::vector<double> err_sum(views.size(), 0.0);
        std::vector<long> count(views.size(), 0), within(views.size(), 0);
        parallel_for(static_cast<int>(views.size()), [&](int k) {
          const DepthEstimate est = run_view(scene, images, views[k], c, false);
          const double interval = c.stages.back().interval_multiplier * scene.cams[views[k]].camera.depth_interval;
          for (int v = 0; v < gt[k].height(); ++v) {
            for (int u = 0; u < gt[k].width(); ++u) {
              if (!gt[k].is_valid(v, u) || !est.depth.is_valid(v, u)) continue;
              const double e = std::abs(est.depth.depth(v, u) - gt[k].depth(v, u));
              err_sum[k] += e;
              ++count[k];
              within[k] += e < interval;
            }
          }
        });
        double e = 0.0;
        long n = 0, w = 0;
        for (std::size_t k = 0; k < views.size(); ++k) {
          e += err_sum[k];
          n += count[k];
          w += within[k];
        }
        char buf[160];
        std::snprintf(buf, sizeof buf, "%-8.2f %-10ld %-18.10g %-.10g\n", theta, n, n ? e / n : 0.0,
                      n ? static_cast<double>(w) / n : 0.0);
        report += buf;
      }
      make_dirs(out);
      std::ofstream f(out / "theta_sweep.txt", std::ios::binary);
      f << report;
      if (!f) throw Error(ErrorCategory::io, "write failed for '" + (out / "theta_sweep.txt").string() + "'");
      std::cout << report;
      return;
    }
    make_dirs(out / "depths");
    make_dirs(out / "confidence");
    if (save_volumes) make_dirs(out / "volumes");
    parallel_for(static_cast<int>(views.size()), [&](int k) {
      const int ref = views[k];
      const DepthEstimate est = run_view(scene, images, ref, cfg, save_volumes);
      const std::string stem = view_stem(ref);
      write_pfm(out / "depths" / (stem + ".pfm"), est.depth);
      write_pfm(out / "confidence" / (stem + ".pfm"), est.confidence);
      if (save_volumes) {
        const StageOutput& last = est.stages.back();
        write_volume(out / "volumes" / (stem + "_prob.vol"), last.probability.prob, 1.0);
        write_volume(out / "volumes" / (stem + "_dist.vol"), last.distance.values, last.distance.scale);
      }
    });
  };

  // sdf-gt ------------------------------------------------------------------
  std::string sdf_scene, sdf_out;
  std::vector<int> sdf_views;
  int sdf_hyps = 64, sdf_patch = 5;
  double sdf_mult = 4.0;
  auto* sdf = app.add_subcommand("sdf-gt", "Ground-truth signed distances of the first-stage sweep");
  sdf->add_option("--scene", sdf_scene, "Scene directory with depths/")->required();
  sdf->add_option("--out", sdf_out, "Output directory")->required();
  sdf->add_option("--views", sdf_views, "Views (default: all)")->delimiter(',');
  sdf->add_option("--hypotheses", sdf_hyps, "Sweep planes")->capture_default_str();
  sdf->add_option("--interval", sdf_mult, "Plane spacing in depth-interval units")->capture_default_str();
  sdf->add_option("--patch-k", sdf_patch, "Patch size of the local search")->capture_default_str();
  add_config(sdf);
  actions[sdf] = [&]() {
    const SceneBundle scene = load_scene(sdf_scene);
    const std::vector<int> views = select_views(sdf_views, scene.size());
    const SearchConfig search{sdf_patch};
    search.validate();
    make_dirs(sdf_out);
    parallel_for(static_cast<int>(views.size()), [&](int k) {
      const int view = views[k];
      if (!scene.depths[view]) throw Error(ErrorCategory::io, "view " + std::to_string(view) + " has no ground-truth depth");
      const DepthMap gt = read_pfm_depth(*scene.depths[view]);
      const Camera& cam = scene.cams[view].camera;
      const StageConfig stage{sdf_hyps, sdf_mult, 1};
      const HypothesisSet hyps = sample_hypotheses(1, stage, cam.depth_interval, global_range(cam, stage), gt.height(),
                                                   gt.width(), nullptr);
      const SignedDistanceGT sd = generate_sdf_gt(hyps, gt, cam, search);
      write_volume(fs::path(sdf_out) / (view_stem(view) + ".vol"), sd.distance, 1.0, &sd.valid);
    });
  };

  // fuse --------------------------------------------------------------------
  std::string fuse_scene, fuse_depths, fuse_out;
  bool fuse_binary = false;
  FilterArgs fuse_filter;
  auto* fuse = app.add_subcommand("fuse", "Consistency-filtered point cloud (PLY)");
  fuse->add_option("--scene", fuse_scene, "Scene directory")->required();
  fuse->add_option("--depths", fuse_depths, "Output directory of 'depth'")->required();
  fuse->add_option("--out", fuse_out, "Output PLY")->required();
  fuse->add_flag("--binary", fuse_binary, "Binary little-endian PLY");
  add_filter_options(fuse, fuse_filter);
  add_config(fuse);
  actions[fuse] = [&]() {
    const SceneBundle scene = load_scene(fuse_scene);
    const std::vector<GridXd> images = load_images(scene);
    std::vector<DepthMap> depths(scene.size());
    std::vector<ConfidenceMap> confs(scene.size());
    std::vector<Camera> cams;
    for (const CamFile& c : scene.cams) cams.push_back(c.camera);
    parallel_for(scene.size(), [&](int i) {
      const std::string stem = view_stem(i);
      depths[i] = read_pfm_depth(fs::path(fuse_depths) / "depths" / (stem + ".pfm"));
      confs[i] = read_pfm(fs::path(fuse_depths) / "confidence" / (stem + ".pfm")).at(0);
    });
    const auto masks = cross_view_filter(depths, confs, cams, fuse_filter.t);
    const PointCloud cloud = fuse_point_cloud(depths, masks, images, cams, fuse_filter.t);
    if (cloud.empty()) throw Error(ErrorCategory::empty_input, "no pixel passed the consistency filter");
    write_ply(fuse_out, cloud, fuse_binary ? PlyFormat::binary_little_endian : PlyFormat::ascii);
  };

  // mesh --------------------------------------------------------------------
  CascadeArgs mesh_args;
  std::string mesh_scene, mesh_out;
  int mesh_view = 0;
  double mesh_spacing = 0.0;
  std::vector<double> mesh_origin;
  std::vector<int> mesh_dims;
  bool mesh_binary = false;
  auto* mesh = app.add_subcommand("mesh", "Marching-cubes mesh of a view's distance volume (PLY)");
  mesh->add_option("--scene", mesh_scene, "Scene directory")->required();
  mesh->add_option("--out", mesh_out, "Output PLY")->required();
  mesh->add_option("--view", mesh_view, "Reference view")->capture_default_str();
  mesh->add_option("--spacing", mesh_spacing, "Voxel spacing (default: the view's depth interval)");
  mesh->add_option("--origin", mesh_origin, "Grid origin x,y,z (default: fitted to the depth map)")->delimiter(',')->expected(3);
  mesh->add_option("--dims", mesh_dims, "Grid size nx,ny,nz")->delimiter(',')->expected(3);
  mesh->add_flag("--binary", mesh_binary, "Binary little-endian PLY");
  add_cascade_options(mesh, mesh_args);
  add_config(mesh);
  actions[mesh] = [&]() {
    const PipelineConfig cfg = to_config(mesh_args);
    const SceneBundle scene = load_scene(mesh_scene);
    if (mesh_view < 0 || mesh_view >= scene.size()) throw UsageError("--view out of range");
    if (mesh_origin.empty() != mesh_dims.empty()) throw UsageError("--origin and --dims go together");
    const std::vector<GridXd> images = load_images(scene);
    const DepthEstimate est = run_view(scene, images, mesh_view, cfg, true);
    const StageOutput& last = est.stages.back();
    GridConfig grid;
    grid.spacing = mesh_spacing > 0.0 ? mesh_spacing : scene.cams[mesh_view].camera.depth_interval;
    if (!mesh_origin.empty()) {
      grid.origin = Vec3(mesh_origin[0], mesh_origin[1], mesh_origin[2]);
      grid.nx = mesh_dims[0];
      grid.ny = mesh_dims[1];
      grid.nz = mesh_dims[2];
    } else {
      Eigen::AlignedBox3d box;
      for (int v = 0; v < last.depth.height(); ++v) {
        for (int u = 0; u < last.depth.width(); ++u) {
          if (last.depth.is_valid(v, u)) box.extend(back_project(Pixel{double(u), double(v)}, last.depth.depth(v, u), last.camera));
        }
      }
      if (box.isEmpty()) throw Error(ErrorCategory::empty_input, "the depth map has no valid pixel");
      grid.origin = box.min() - Vec3::Constant(2.0 * grid.spacing);
      const Eigen::Vector3d extent = box.sizes() + Vec3::Constant(4.0 * grid.spacing);
      grid.nx = static_cast<int>(std::ceil(extent.x() / grid.spacing)) + 1;
      grid.ny = static_cast<int>(std::ceil(extent.y() / grid.spacing)) + 1;
      grid.nz = static_cast<int>(std::ceil(extent.z() / grid.spacing)) + 1;
    }
    const VoxelSDF sdf_grid = sdf_grid_from_volume(last.distance, last.hypotheses, last.camera, grid);
    const TriangleMesh m = marching_cubes(sdf_grid);
    if (m.triangles.empty()) throw Error(ErrorCategory::empty_input, "the zero level set is empty");
    write_ply(mesh_out, m, mesh_binary ? PlyFormat::binary_little_endian : PlyFormat::ascii);
  };

  // eval --------------------------------------------------------------------
  std::string eval_recon, eval_gt, eval_out;
  double eval_tau = 1.0, eval_max_dist = 0.0;
  auto* eval = app.add_subcommand("eval", "Accuracy, completeness and F-score of a point cloud");
  eval->add_option("--recon", eval_recon, "Reconstructed PLY")->required();
  eval->add_option("--gt", eval_gt, "Ground-truth PLY")->required();
  eval->add_option("--tau", eval_tau, "Distance threshold of precision and recall")->capture_default_str();
  eval->add_option("--max-dist", eval_max_dist, "Outlier cut-off of accuracy/completeness (default: 20 * tau)");
  eval->add_option("--out", eval_out, "Report file (default: stdout)");
  add_config(eval);
  actions[eval] = [&]() {
    PointCloud recon, gt;
    recon.points = read_ply(eval_recon).points;
    gt.points = read_ply(eval_gt).points;
    const double max_dist = eval_max_dist > 0.0 ? eval_max_dist : 20.0 * eval_tau;
    const EvalReport r = evaluate_point_clouds(recon, gt, max_dist, eval_tau);
    std::string s;
    s += "accuracy=" + fmt17(r.accuracy) + "\n";
    s += "completeness=" + fmt17(r.completeness) + "\n";
    s += "overall=" + fmt17(r.overall) + "\n";
    s += "precision=" + fmt17(r.precision) + "\n";
    s += "recall=" + fmt17(r.recall) + "\n";
    s += "f_score=" + fmt17(r.f_score) + "\n";
    s += "tau=" + fmt17(r.tau) + "\n";
    s += "max_dist=" + fmt17(r.max_dist) + "\n";
    s += "recon_points=" + std::to_string(r.recon_points) + "\n";
    s += "gt_points=" + std::to_string(r.gt_points) + "\n";
    if (eval_out.empty()) {
      std::cout << s;
    } else {
      std::ofstream f(eval_out, std::ios::binary);
      f << s;
      if (!f) throw Error(ErrorCategory::io, "write failed for '" + eval_out + "'");
    }
  };

  // bound-check -------------------------------------------------------------
  std::string bc_mode = "random", bc_scene, bc_out;
  int bc_count = 100000, bc_view = 0, bc_hyps = 16, bc_stride = 1;
  std::uint64_t bc_seed = 1;
  auto* bc = app.add_subcommand("bound-check", "Vertex-approximation error bounds on triangles");
  bc->add_option("--mode", bc_mode, "random | skinny | depth")->check(CLI::IsMember({"random", "skinny", "depth"}))->capture_default_str();
  bc->add_option("--count", bc_count, "Random (query, triangle) pairs")->capture_default_str();
  bc->add_option("--seed", bc_seed, "Random seed")->capture_default_str();
  bc->add_option("--scene", bc_scene, "Scene with depths/ (depth mode)");
  bc->add_option("--view", bc_view, "View (depth mode)")->capture_default_str();
  bc->add_option("--hypotheses", bc_hyps, "Queries per pixel ray (depth mode)")->capture_default_str();
  bc->add_option("--stride", bc_stride, "Pixel stride (depth mode)")->capture_default_str();
  bc->add_option("--out", bc_out, "Report file (default: stdout)");
  add_config(bc);
  actions[bc] = [&]() {
    BoundSummary summary;
    std::string rows;
    const auto row = [&](const Vec3& q, const Triangle& t) {
      const BoundReport r = bound_check(q, t);
      summary.add(r);
      char buf[256];
      std::snprintf(buf, sizeof buf, "%-6s %-4c %-14.8g %-14.8g %-14.8g %-14.8g %-14.8g %-5s %-5s\n", "query",
                    case_label(r.where), r.exact, r.vertex_distance, r.error, r.case_bound, r.final_bound,
                    r.case_holds ? "yes" : "no", r.final_holds ? "yes" : "no");
      rows += buf;
    };
    if (bc_mode == "random") {
      std::mt19937_64 rng(bc_seed);
      std::uniform_real_distribution<double> uni(-1.0, 1.0);
      const auto rnd = [&](double s) { return Vec3(s * uni(rng), s * uni(rng), s * uni(rng)); };
      for (int i = 0; i < bc_count; ++i) {
        Triangle t{rnd(1.0), rnd(1.0), rnd(1.0)};
        while (!(t.area() > 1e-12)) t = Triangle{rnd(1.0), rnd(1.0), rnd(1.0)};
        summary.add(bound_check(rnd(2.0), t));
      }
    } else if (bc_mode == "skinny") {
      row(Vec3(0.5, 5.0, 0.01), Triangle{Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0.5, 10, 0)});
    } else {
      if (bc_scene.empty()) throw UsageError("--mode depth needs --scene");
      const SceneBundle scene = load_scene(bc_scene);
      if (bc_view < 0 || bc_view >= scene.size() || !scene.depths[bc_view]) throw UsageError("--view has no ground-truth depth");
      const Camera& cam = scene.cams[bc_view].camera;
      summary = bound_check_depth_map(read_pfm_depth(*scene.depths[bc_view]), cam, bc_hyps, cam.depth_interval, bc_stride);
    }
    std::string s;
    char buf[256];
    if (!rows.empty()) {
      std::snprintf(buf, sizeof buf, "%-6s %-4s %-14s %-14s %-14s %-14s %-14s %-5s %-5s\n", "kind", "case", "exact",
                    "vertex", "error", "case_bound", "final_bound", "case", "final");
      s += buf + rows + "\n";
    }
    std::snprintf(buf, sizeof buf, "%-8s %-10s %-16s %-16s\n", "case", "queries", "case_violations", "final_violations");
    s += buf;
    for (int c = 0; c < 3; ++c) {
      std::snprintf(buf, sizeof buf, "%-8c %-10zu %-16zu %-16s\n", case_label(static_cast<ClosestCase>(c)),
                    summary.per_case[c], summary.case_violations[c], "-");
      s += buf;
    }
    std::snprintf(buf, sizeof buf, "%-8s %-10zu %-16zu %-16zu\n", "all", summary.queries, summary.total_case_violations(),
                  summary.final_violations);
    s += buf;
    std::snprintf(buf, sizeof buf, "max_error=%.17g\nmax_case_ratio=%.17g\nmax_final_ratio=%.17g\n", summary.max_error,
                  summary.max_case_ratio, summary.max_final_ratio);
    s += buf;
    if (bc_out.empty()) {
      std::cout << s;
    } else {
      std::ofstream f(bc_out, std::ios::binary);
      f << s;
      if (!f) throw Error(ErrorCategory::io, "write failed for '" + bc_out + "'");
    }
  };

  // synth -------------------------------------------------------------------
  std::string synth_out, synth_kind = "sphere-slanted", synth_format = "png";
  SceneSpec synth_spec;
  int synth_gt_min_views = 3;
  auto* synth = app.add_subcommand("synth", "Render a synthetic scene directory");
  synth->add_option("--out", synth_out, "Output directory")->required();
  synth->add_option("--kind", synth_kind, "fronto | slanted | sphere | step | lowtex | sphere-slanted")
      ->check(CLI::IsMember({"fronto", "slanted", "sphere", "step", "lowtex", "sphere-slanted"}))
      ->capture_default_str();
  synth->add_option("--seed", synth_spec.texture.seed, "Texture seed")->capture_default_str();
  synth->add_option("--views", synth_spec.views, "Number of cameras")->capture_default_str();
  synth->add_option("--height", synth_spec.height, "Image height")->capture_default_str();
  synth->add_option("--width", synth_spec.width, "Image width")->capture_default_str();
  synth->add_option("--focal", synth_spec.focal, "Focal length (pixels)")->capture_default_str();
  synth->add_option("--baseline", synth_spec.baseline, "Source camera circle radius")->capture_default_str();
  synth->add_option("--image-format", synth_format, "png | pfm")->check(CLI::IsMember({"png", "pfm"}))->capture_default_str();
  synth->add_option("--gt-min-views", synth_gt_min_views, "Cameras that must see a point of gt.ply")->capture_default_str();
  add_config(synth);
  actions[synth] = [&]() {
    synth_spec.kind = parse_scene_kind(synth_kind);
    const SyntheticScene scene = render_synthetic_scene(synth_spec);
    std::vector<CamFile> cams;
    for (const Camera& c : scene.cameras) cams.push_back({c, std::nullopt, std::nullopt});
    PairList pairs;
    for (const auto& list : scene.pairs) {
      std::vector<PairEntry> entries;
      for (std::size_t r = 0; r < list.size(); ++r) entries.push_back({list[r], static_cast<double>(list.size() - r)});
      pairs.push_back(std::move(entries));
    }
    write_scene(synth_out, scene.images, cams, scene.depths, pairs,
                synth_format == "png" ? ImageFormat::png : ImageFormat::pfm);
    write_ply(fs::path(synth_out) / "gt.ply", scene.gt_cloud(2, synth_gt_min_views), PlyFormat::binary_little_endian);
  };

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: usage: " << e.what() << "\n";
    return kExitUsage;
  }

  CLI::App* sub = app.get_subcommands().front();
  try {
    apply_config(sub, config_paths[sub]);
    actions.at(sub)();
  } catch (const UsageError& e) {
    std::cerr << "error: usage: " << e.what() << "\n";
    return kExitUsage;
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: usage: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    std::cerr << "error: " << category_name(e.category()) << ": " << e.what() << "\n";
    return kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << e.what() << "\n";
    return kExitRuntime;
  }
  return 0;
}
