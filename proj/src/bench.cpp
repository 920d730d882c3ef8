#include "a3fr/bench.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>
#include <thread>

namespace a3fr {

PsnrResult psnr(std::span<const float> a, std::span<const float> b, int width,
                int height, std::span<const std::uint8_t> mask) {
  const std::size_t pixels = std::size_t(width) * height;
  if (a.size() != 3 * pixels || b.size() != 3 * pixels)
    throw ConfigError("psnr: dimension mismatch");
  if (!mask.empty() && mask.size() != pixels)
    throw ConfigError("psnr: mask dimension mismatch");

  double sq = 0;
  std::size_t counted = 0;
  for (std::size_t p = 0; p < pixels; ++p) {
    if (!mask.empty() && !mask[p]) continue;
    for (int ch = 0; ch < 3; ++ch) {
      const double d = double(a[3 * p + ch]) - double(b[3 * p + ch]);
      sq += d * d;
    }
    ++counted;
  }
  PsnrResult r;
  if (counted == 0 || sq == 0) {
    r.bit_exact = true;
    r.db = std::numeric_limits<double>::infinity();
    return r;
  }
  r.db = 10.0 * std::log10(double(counted) * 3.0 / sq);
  return r;
}

double ssim(std::span<const float> a, std::span<const float> b, int width,
            int height) {
  const std::size_t pixels = std::size_t(width) * height;
  if (a.size() != 3 * pixels || b.size() != 3 * pixels)
    throw ConfigError("ssim: dimension mismatch");
  if (width < 8 || height < 8) throw ConfigError("ssim: min side is 8");

  // Channel-mean luma, then sliding uniform 8x8 windows.
  std::vector<double> la(pixels), lb(pixels);
  for (std::size_t p = 0; p < pixels; ++p) {
    la[p] = (a[3 * p] + a[3 * p + 1] + a[3 * p + 2]) / 3.0;
    lb[p] = (b[3 * p] + b[3 * p + 1] + b[3 * p + 2]) / 3.0;
  }

  constexpr int kWin = 8;
  constexpr double kC1 = 0.01 * 0.01, kC2 = 0.03 * 0.03;
  const double n = double(kWin) * kWin;
  double total = 0;
  std::size_t windows = 0;
  for (int y = 0; y + kWin <= height; ++y) {
    for (int x = 0; x + kWin <= width; ++x) {
      double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
      for (int wy = 0; wy < kWin; ++wy) {
        const std::size_t row = std::size_t(y + wy) * width + x;
        for (int wx = 0; wx < kWin; ++wx) {
          const double va = la[row + wx], vb = lb[row + wx];
          sa += va;
          sb += vb;
          saa += va * va;
          sbb += vb * vb;
          sab += va * vb;
        }
      }
      const double mu_a = sa / n, mu_b = sb / n;
      const double var_a = saa / n - mu_a * mu_a;
      const double var_b = sbb / n - mu_b * mu_b;
      const double cov = sab / n - mu_a * mu_b;
      total += ((2 * mu_a * mu_b + kC1) * (2 * cov + kC2)) /
               ((mu_a * mu_a + mu_b * mu_b + kC1) * (var_a + var_b + kC2));
      ++windows;
    }
  }
  return total / double(windows);
}

Scene make_synthetic_scene(std::uint64_t seed, int n_gaussians, int sh_degree,
                           int clusters) {
  if (n_gaussians < 1) throw ConfigError("synthetic scene: need >= 1 gaussian");
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> unit(0.0f, 1.0f);
  std::uniform_real_distribution<float> uniform(0.0f, 1.0f);

  std::vector<Eigen::Vector3f> centers;
  for (int c = 0; c < clusters; ++c)
    centers.emplace_back(uniform(rng) * 4 - 2, uniform(rng) * 4 - 2,
                         uniform(rng) * 4 - 2);

  const int coeffs = (sh_degree + 1) * (sh_degree + 1);
  Scene scene;
  scene.name = "synthetic-" + std::to_string(seed);
  scene.gaussians.reserve(std::size_t(n_gaussians));
  for (int i = 0; i < n_gaussians; ++i) {
    Gaussian3D g;
    const auto& c = centers[std::size_t(i % clusters)];
    g.mean = c + 0.5f * Eigen::Vector3f(unit(rng), unit(rng), unit(rng));
    g.scale = {0.02f + 0.15f * uniform(rng), 0.02f + 0.15f * uniform(rng),
               0.02f + 0.15f * uniform(rng)};
    g.rotation = Eigen::Quaternionf(unit(rng), unit(rng), unit(rng), unit(rng));
    if (g.rotation.norm() < 1e-4f) g.rotation = Eigen::Quaternionf::Identity();
    g.rotation.normalize();
    g.opacity = 0.05f + 0.9f * uniform(rng);
    g.sh.assign(std::size_t(coeffs) * 3, 0.0f);
    for (int ch = 0; ch < 3; ++ch) g.sh[std::size_t(ch)] = unit(rng) * 0.8f;
    for (int k = 3; k < coeffs * 3; ++k) g.sh[std::size_t(k)] = unit(rng) * 0.2f;
    scene.gaussians.push_back(std::move(g));
  }
  scene.recompute_bbox();
  return scene;
}

std::vector<Camera> make_orbit_poses(const Scene& scene, int count, int width,
                                     int height, double fov_deg) {
  const Eigen::Vector3f target = scene.bbox.center();
  const float radius =
      std::max(1.0f, scene.bbox.diagonal().norm()) * 1.2f;

  std::vector<Camera> cams;
  cams.reserve(std::size_t(count));
  for (int i = 0; i < count; ++i) {
    const float angle = float(2.0 * M_PI * i / std::max(1, count));
    const Eigen::Vector3f eye =
        target + radius * Eigen::Vector3f(std::cos(angle), 0.15f, std::sin(angle));

    const Eigen::Vector3f fwd = (target - eye).normalized();
    Eigen::Vector3f up(0, 1, 0);
    Eigen::Vector3f right = fwd.cross(up).normalized();
    up = right.cross(fwd);  // camera looks along +z, y down in image space
    Eigen::Matrix3f r;
    r.row(0) = right.transpose();
    r.row(1) = (-up).transpose();
    r.row(2) = fwd.transpose();

    Eigen::Matrix4f w2c = Eigen::Matrix4f::Identity();
    w2c.topLeftCorner<3, 3>() = r;
    w2c.topRightCorner<3, 1>() = -r * eye;
    cams.push_back(Camera::from_fov(w2c, float(fov_deg), width, height));
  }
  return cams;
}

namespace {

std::string csv_number(double v) {
  if (std::isinf(v)) return "inf";
  std::ostringstream ss;
  ss.precision(6);
  ss << std::fixed << v;
  return ss.str();
}

std::string join_ms(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += "|";
    out += csv_number(v[i]);
  }
  return out;
}

// Mask of all pixels in tiles this frame refined to level 4.
std::vector<std::uint8_t> foveal_mask(const FrameState& frame) {
  std::vector<std::uint8_t> mask(std::size_t(frame.width) * frame.height, 0);
  const int tiles_x = frame.tiles_x();
  for (std::size_t t = 0; t < frame.level_map.size(); ++t) {
    if (frame.level_map[t] < 4) continue;
    const int tx = int(t) % tiles_x, ty = int(t) / tiles_x;
    const int x0 = tx * kTileSize, y0 = ty * kTileSize;
    const int x1 = std::min(x0 + kTileSize, frame.width);
    const int y1 = std::min(y0 + kTileSize, frame.height);
    for (int y = y0; y < y1; ++y)
      for (int x = x0; x < x1; ++x)
        mask[std::size_t(y) * frame.width + x] = 1;
  }
  return mask;
}

}  // namespace

std::string RunReport::to_csv() const {
  std::ostringstream out;
  out << "# a3fr-summary v1\n";
  out << "scene,resolution,mode,poses,mean_t_tot_ms,min_t_tot_ms,max_t_tot_ms,"
         "mean_t_d_ms,mean_t_r_ms,pixels_total,foveal_psnr_db,image_psnr_db,"
         "mean_ssim,round_ms_means,exit_ms_means\n";
  for (const auto& r : rows) {
    out << r.scene << "," << r.width << "x" << r.height << ","
        << to_string(r.mode) << "," << r.poses << ","
        << csv_number(r.mean_t_tot_ms) << "," << csv_number(r.min_t_tot_ms)
        << "," << csv_number(r.max_t_tot_ms) << "," << csv_number(r.mean_t_d_ms)
        << "," << csv_number(r.mean_t_r_ms) << "," << r.pixels_total << ","
        << csv_number(r.foveal_psnr.db) << "," << csv_number(r.image_psnr.db)
        << "," << csv_number(r.mean_ssim) << "," << join_ms(r.round_ms_means)
        << "," << join_ms(r.exit_ms_means) << "\n";
  }
  return out.str();
}

RunReport run_benchmark(const BenchOptions& opt) {
  namespace fs = std::filesystem;
  fs::create_directories(opt.out_dir);

  std::vector<Scene> scenes;
  if (opt.scene_paths.empty()) {
    scenes.push_back(
        make_synthetic_scene(opt.seed, opt.synthetic_gaussians));
  } else {
    for (const auto& p : opt.scene_paths) scenes.push_back(load_scene(p));
  }

  std::vector<std::pair<double, GazeTruth>> trace;
  if (opt.trace_path) trace = load_trace(*opt.trace_path);

  RunReport report;
  for (const auto& scene : scenes) {
    for (const auto& [width, height] : opt.resolutions) {
      std::vector<Camera> cams;
      if (opt.pose_path) {
        cams = load_poses(*opt.pose_path);
        for (const auto& c : cams)
          if (c.width != width || c.height != height)
            throw ConfigError("pose file resolution differs from --resolution");
      } else {
        cams = make_orbit_poses(scene, opt.pose_count, width, height);
      }
      if (cams.empty()) throw ConfigError("no poses to render");

      // Shared per-resolution setup: one profile, one cost calibration.
      const FoveationConfig fov_cfg = FoveationConfig::for_camera(cams.front());
      const FoveationProfile profile =
          profile_exits(opt.exit_model.sigmas_deg(), opt.profile_samples,
                        opt.seed, fov_cfg);
      const EventCost cost =
          EventCost::calibrate(opt.anchor_frr_ms, width, height, opt.t_s_c_ms,
                               opt.preprocess_fraction);

      // FRR references for quality metrics, rendered once per pose.
      const bool want_quality = std::any_of(
          opt.modes.begin(), opt.modes.end(), [](Mode m) { return m != Mode::FRR; });
      std::vector<FrameState> frr_frames;

      auto truth_for = [&](std::size_t pose_idx) {
        if (!trace.empty()) {
          // One frame per trace-equidistant timestamp, sampled at frame start.
          const double span = trace.back().first - trace.front().first;
          const double t = trace.front().first +
                           span * double(pose_idx) / double(cams.size());
          return sample_trace(trace, t);
        }
        return GazeTruth{{width / 2.0f, height / 2.0f}, GazeTruth::Source::Model};
      };
      auto frame_seed = [&](std::size_t pose_idx) {
        return opt.seed * 1000003ull + pose_idx * 7919ull +
               std::uint64_t(width) * 131ull;
      };

      if (want_quality) {
        frr_frames.resize(cams.size());
        auto render_ref = [&](std::size_t begin, std::size_t end) {
          SchedulerConfig fc;
          fc.mode = Mode::FRR;
          fc.clock = opt.clock;
          fc.cost = cost;
          fc.n_threads = opt.parallel_frames ? 1 : opt.n_threads;
          for (std::size_t i = begin; i < end; ++i) {
            fc.seed = frame_seed(i);
            frr_frames[i] = run_frame(scene, cams[i], truth_for(i), fc).frame;
          }
        };
        if (!opt.parallel_frames || cams.size() < 2) {
          render_ref(0, cams.size());
        } else {
          const std::size_t n = cams.size();
          const unsigned workers = unsigned(std::min<std::size_t>(
              n, std::max(1u, std::thread::hardware_concurrency())));
          std::vector<std::thread> pool;
          for (unsigned w = 0; w < workers; ++w)
            pool.emplace_back(render_ref, n * w / workers, n * (w + 1) / workers);
          for (auto& th : pool) th.join();
        }
      }

      for (const Mode mode : opt.modes) {
        ReportRow row;
        row.scene = scene.name;
        row.width = width;
        row.height = height;
        row.mode = mode;
        row.poses = int(cams.size());
        row.min_t_tot_ms = std::numeric_limits<double>::infinity();

        double sum_tot = 0, sum_d = 0, sum_r = 0, sum_ssim = 0;
        double sum_fov_sq = 0, sum_img_sq = 0;
        std::size_t fov_count = 0, img_count = 0;
        std::vector<double> round_sums;
        std::vector<double> exit_sums;
        std::size_t exit_frames = 0;

        for (std::size_t i = 0; i < cams.size(); ++i) {
          SchedulerConfig sc;
          sc.mode = mode;
          sc.clock = opt.clock;
          sc.cost = cost;
          sc.exit_model = opt.exit_model;
          sc.fov_cfg = fov_cfg;
          sc.profile = profile;
          sc.seed = frame_seed(i);
          sc.n_threads = opt.n_threads;
          const GazeTruth truth = truth_for(i);

          FrameResult fr = run_frame(scene, cams[i], truth, sc);
          account(fr.schedule);

          const auto& lat = fr.schedule.latency;
          sum_tot += lat.t_tot_ms;
          sum_d += lat.t_d_ms;
          sum_r += lat.t_r_ms;
          row.min_t_tot_ms = std::min(row.min_t_tot_ms, lat.t_tot_ms);
          row.max_t_tot_ms = std::max(row.max_t_tot_ms, lat.t_tot_ms);
          row.pixels_total += fr.schedule.pixels_composited_total;

          for (std::size_t k = 1; k < fr.schedule.rounds.size(); ++k) {
            if (round_sums.size() < k) round_sums.resize(k, 0.0);
            round_sums[k - 1] += fr.schedule.rounds[k].elapsed_ms;
          }
          if (!fr.schedule.gaze_log.empty()) {
            ++exit_frames;
            if (exit_sums.size() < fr.schedule.gaze_log.size())
              exit_sums.resize(fr.schedule.gaze_log.size(), 0.0);
            for (std::size_t k = 0; k < fr.schedule.gaze_log.size(); ++k)
              exit_sums[k] += fr.schedule.gaze_log[k].available_at_ms;
          }

          const std::string stem = scene.name + "_" + std::to_string(width) +
                                   "x" + std::to_string(height) + "_" +
                                   to_string(mode) + "_pose" + std::to_string(i);
          fr.schedule.save(opt.out_dir / (stem + ".json"));
          if (opt.emit_images) write_ppm(opt.out_dir / (stem + ".ppm"), fr.frame);

          if (mode != Mode::FRR && want_quality) {
            const FrameState& ref = frr_frames[i];
            const auto img = psnr(fr.frame.color, ref.color, width, height);
            const auto mask = foveal_mask(fr.frame);
            const auto fov = psnr(fr.frame.color, ref.color, width, height, mask);
            // Aggregate through MSE so per-pose infinities stay meaningful.
            if (!img.bit_exact) {
              sum_img_sq += std::pow(10.0, -img.db / 10.0);
            }
            ++img_count;
            if (!fov.bit_exact) sum_fov_sq += std::pow(10.0, -fov.db / 10.0);
            ++fov_count;
            sum_ssim += ssim(fr.frame.color, ref.color, width, height);
          }
        }

        const double n = double(cams.size());
        row.mean_t_tot_ms = sum_tot / n;
        row.mean_t_d_ms = sum_d / n;
        row.mean_t_r_ms = sum_r / n;
        for (double s : round_sums) row.round_ms_means.push_back(s / n);
        for (double s : exit_sums)
          row.exit_ms_means.push_back(s / double(std::max<std::size_t>(1, exit_frames)));

        if (mode == Mode::FRR || !want_quality) {
          row.image_psnr = {std::numeric_limits<double>::infinity(), true};
          row.foveal_psnr = {std::numeric_limits<double>::infinity(), true};
          row.mean_ssim = 1.0;
        } else {
          auto to_psnr = [](double mse_sum, std::size_t count) {
            PsnrResult r;
            if (count == 0 || mse_sum == 0) {
              r.bit_exact = true;
              r.db = std::numeric_limits<double>::infinity();
            } else {
              r.db = 10.0 * std::log10(double(count) / mse_sum);
            }
            return r;
          };
          row.image_psnr = to_psnr(sum_img_sq, img_count);
          row.foveal_psnr = to_psnr(sum_fov_sq, fov_count);
          row.mean_ssim = sum_ssim / double(img_count);
        }
        report.rows.push_back(std::move(row));
      }
    }
  }

  std::ofstream csv(opt.out_dir / "summary.csv");
  if (!csv) throw FormatError("cannot write summary.csv");
  csv << report.to_csv();
  return report;
}

}  // namespace a3fr
