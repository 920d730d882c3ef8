#pragma once

#include <cstdint>
#include <filesystem>
#include <string_view>
#include <utility>
#include <vector>

#include "a3fr/foveation.hpp"
#include "a3fr/scene.hpp"

namespace a3fr {

struct ExitLayer {
  double sigma_x_deg = 0;
  double sigma_y_deg = 0;
  double latency_ms = 0;
};

// Early-exit tracker parameterization: per-layer error and compute time.
struct ExitModel {
  std::string name;
  double embed_ms = 0;  // front-end latency before layer 1
  std::vector<ExitLayer> layers;

  int n_exits() const { return static_cast<int>(layers.size()); }
  // Prefix sum of layer latencies through exit (1-based), without embed.
  double cumulative_ms(int exit_index) const;
  double total_latency_ms() const { return embed_ms + cumulative_ms(n_exits()); }
  std::vector<Eigen::Vector2d> sigmas_deg() const;

  void validate() const;
  void save(const std::filesystem::path& path) const;
  static ExitModel load(const std::filesystem::path& path);
  // "table2-unpruned", "table2-pruned01", "table2-pruned02".
  static ExitModel preset(std::string_view name);
  static bool is_preset(std::string_view name);
};

struct GazeTruth {
  Eigen::Vector2f point = Eigen::Vector2f::Zero();  // pixels
  enum class Source { Model, Trace } source = Source::Model;
};

struct GazePrediction {
  int exit_index = 0;                               // 1..N
  Eigen::Vector2f point = Eigen::Vector2f::Zero();  // pixels, clamped on-image
  double available_at_ms = 0;  // embed + cumulative latency, frame-relative
  bool clamped = false;
};

// Draws one prediction per exit: truth plus bivariate normal error in
// degrees, converted to pixels through rho_d * tan per component.
// Off-image points are clamped and flagged. Deterministic per seed.
std::vector<GazePrediction> simulate_exits(const GazeTruth& truth,
                                           const ExitModel& model,
                                           std::uint64_t seed,
                                           const FoveationConfig& cfg,
                                           const Camera& cam);

// CSV with header t_ms,x_px,y_px; timestamps must be non-decreasing.
std::vector<std::pair<double, GazeTruth>> load_trace(const std::filesystem::path& path);
void write_trace(const std::filesystem::path& path,
                 const std::vector<std::pair<double, GazeTruth>>& trace);
// Truth at frame start: last sample with t <= time_ms.
GazeTruth sample_trace(const std::vector<std::pair<double, GazeTruth>>& trace,
                       double time_ms);

// Sum-mode multi-exit loss: sum_n lambda_n * |preds[n] - truth|^2.
double multi_exit_loss(const std::vector<Eigen::Vector2d>& preds,
                       const Eigen::Vector2d& truth,
                       const std::vector<double>& lambdas);

// Batch-max variant: sum_n lambda_n * max over frames of the squared error
// at exit n. preds[frame][exit], truths[frame].
double multi_exit_loss_batch_max(const std::vector<std::vector<Eigen::Vector2d>>& preds,
                                 const std::vector<Eigen::Vector2d>& truths,
                                 const std::vector<double>& lambdas);

}  // namespace a3fr
