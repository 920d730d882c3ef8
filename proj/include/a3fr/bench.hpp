#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "a3fr/scheduler.hpp"

namespace a3fr {

struct PsnrResult {
  double db = 0;
  bool bit_exact = false;  // db is +inf, flagged instead
};

// 10*log10(1/MSE) over [0,1] floats. Optional per-pixel mask (W*H bytes,
// nonzero = included). Throws ConfigError on dimension mismatch.
PsnrResult psnr(std::span<const float> a, std::span<const float> b, int width,
                int height, std::span<const std::uint8_t> mask = {});

// Mean local SSIM over sliding 8x8 uniform windows, k1=0.01, k2=0.03, on
// the channel mean. Min side 8.
double ssim(std::span<const float> a, std::span<const float> b, int width,
            int height);

// Seeded generator: clustered Gaussians in a unit-scale box, random SH,
// usable by the acceptance suite without external datasets.
Scene make_synthetic_scene(std::uint64_t seed, int n_gaussians = 300,
                           int sh_degree = 1, int clusters = 6);

// Cameras orbiting the scene bbox at the paper-style 120 degree fov.
std::vector<Camera> make_orbit_poses(const Scene& scene, int count, int width,
                                     int height, double fov_deg = 120.0);

struct BenchOptions {
  std::vector<std::filesystem::path> scene_paths;  // empty: synthetic
  int synthetic_gaussians = 300;
  std::optional<std::filesystem::path> pose_path;  // empty: orbit poses
  int pose_count = 10;
  std::vector<std::pair<int, int>> resolutions{{1280, 720}};
  std::vector<Mode> modes{Mode::FRR, Mode::SFR, Mode::A3FR};
  ExitModel exit_model = ExitModel::preset("table2-unpruned");
  std::uint64_t seed = 1;
  ClockMode clock = ClockMode::Event;
  double anchor_frr_ms = 151.239;
  double t_s_c_ms = 2.0;
  double preprocess_fraction = 0.25;
  std::optional<std::filesystem::path> trace_path;
  std::filesystem::path out_dir = "bench_out";
  bool emit_images = false;
  long profile_samples = 100000;
  int n_threads = 0;
  // Parallelize only the FRR reference renders used for quality metrics;
  // latency-measured frames always run sequentially.
  bool parallel_frames = false;
};

struct ReportRow {
  std::string scene;
  int width = 0, height = 0;
  Mode mode = Mode::FRR;
  int poses = 0;
  double mean_t_tot_ms = 0, min_t_tot_ms = 0, max_t_tot_ms = 0;
  double mean_t_d_ms = 0, mean_t_r_ms = 0;
  std::int64_t pixels_total = 0;
  PsnrResult foveal_psnr;  // vs FRR, level-4 tiles of this mode's frame
  PsnrResult image_psnr;   // vs FRR, whole image
  double mean_ssim = 1.0;
  std::vector<double> round_ms_means;  // R_1..R_k (preprocess excluded)
  std::vector<double> exit_ms_means;   // L_1..L_k completion times
};

struct RunReport {
  std::vector<ReportRow> rows;
  std::string to_csv() const;
};

// Runs every (scene, resolution, mode, pose) combination, writes per-frame
// schedule files plus summary.csv under out_dir, returns the report.
RunReport run_benchmark(const BenchOptions& opt);

}  // namespace a3fr
