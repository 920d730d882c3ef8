#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <string>

#include "a3fr/gaze.hpp"
#include "a3fr/raster.hpp"

namespace a3fr {

enum class Mode { FRR, SFR, A3FR };
enum class ClockMode { Wallclock, Event };

std::string to_string(Mode mode);
Mode mode_from_string(std::string_view s);

// Single-writer latest-value register (seqlock). The reader never blocks
// and always observes either empty or a complete, previously written pair.
class SharedGazeSlot {
 public:
  struct Snapshot {
    int exit_index = 0;  // 0 = empty
    Eigen::Vector2f point = Eigen::Vector2f::Zero();
    std::uint32_t write_count = 0;
  };

  void publish(int exit_index, const Eigen::Vector2f& point);
  Snapshot read() const;

 private:
  std::atomic<std::uint32_t> seq_{0};
  std::atomic<std::uint32_t> writes_{0};
  std::atomic<int> exit_{0};
  std::atomic<float> x_{0}, y_{0};
};

// Virtual render-cost model for the discrete-event clock.
struct EventCost {
  double t_s_c_ms = 2.0;       // camera sensing + link, lumped
  double preprocess_ms = 0;    // projection + binning + sorting
  double cost_per_px_ms = 0;   // per composited pixel

  // Picks costs so an FRR frame at W x H lands exactly on anchor_frr_ms:
  // anchor = t_s_c + preprocess + cost_per_px * W * H, with preprocess
  // taking preprocess_fraction of the render budget.
  static EventCost calibrate(double anchor_frr_ms, int width, int height,
                             double t_s_c_ms = 2.0,
                             double preprocess_fraction = 0.25);
};

struct LatencyBreakdown {
  double t_s_c_ms = 0;
  double t_d_ms = 0;    // gaze completion, relative to t_s_c
  double t_r_ms = 0;    // render completion, relative to t_s_c
  double t_tot_ms = 0;  // end to end
};

struct FrameSchedule {
  Mode mode = Mode::FRR;
  std::vector<RenderRound> rounds;  // round 0 is the preprocess stage
  std::vector<GazePrediction> gaze_log;  // published predictions only
  LatencyBreakdown latency;
  int speculative_rounds = 0;
  std::int64_t pixels_composited_total = 0;

  double render_busy_ms() const;
  std::string to_json() const;
  void save(const std::filesystem::path& path) const;
};

struct SchedulerConfig {
  Mode mode = Mode::A3FR;
  ClockMode clock = ClockMode::Event;
  EventCost cost;                 // event mode only
  ExitModel exit_model;
  FoveationConfig fov_cfg;        // rho_d filled from camera when zero
  FoveationProfile profile;       // from profile_exits; required for A3FR
  std::uint64_t seed = 0;
  int stall_after_exit = 0;       // >0: gaze worker publishes nothing past it
  int n_threads = 0;              // raster pool inside the render worker
  float near_plane = 0.2f;
  Eigen::Vector3f background = Eigen::Vector3f::Zero();
};

struct FrameResult {
  FrameState frame;
  FrameSchedule schedule;
};

// Executes one frame in the requested mode. Event clock: deterministic
// virtual-time simulation of the two workers. Wallclock: real gaze and
// render threads coupled by a SharedGazeSlot.
FrameResult run_frame(const Scene& scene, const Camera& cam,
                      const GazeTruth& truth, const SchedulerConfig& cfg);

// Next speculative annulus outer radius around the current gaze, one tile
// width at a time, capped at r_max. Negative result means done.
double speculate_next_radius(int current_exit, double rendered_r,
                             const FoveationProfile& profile);

// Recomputes the breakdown from the schedule and verifies the mode-specific
// identity within quantum_ms. Throws on violation.
LatencyBreakdown account(const FrameSchedule& schedule, double quantum_ms = 0.1);

}  // namespace a3fr
