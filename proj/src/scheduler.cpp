#include "a3fr/scheduler.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <thread>

#include "json.hpp"

namespace a3fr {

std::string to_string(Mode mode) {
  switch (mode) {
    case Mode::FRR: return "frr";
    case Mode::SFR: return "sfr";
    case Mode::A3FR: return "a3fr";
  }
  return "?";
}

Mode mode_from_string(std::string_view s) {
  if (s == "frr") return Mode::FRR;
  if (s == "sfr") return Mode::SFR;
  if (s == "a3fr") return Mode::A3FR;
  throw ConfigError("unknown mode '" + std::string(s) + "'");
}

// ---------------------------------------------------------------------------
// SharedGazeSlot

void SharedGazeSlot::publish(int exit_index, const Eigen::Vector2f& point) {
  const auto s = seq_.load(std::memory_order_relaxed);
  seq_.store(s + 1, std::memory_order_release);  // odd: write in progress
  x_.store(point.x(), std::memory_order_relaxed);
  y_.store(point.y(), std::memory_order_relaxed);
  exit_.store(exit_index, std::memory_order_relaxed);
  writes_.fetch_add(1, std::memory_order_relaxed);
  seq_.store(s + 2, std::memory_order_release);
}

SharedGazeSlot::Snapshot SharedGazeSlot::read() const {
  Snapshot snap;
  for (;;) {
    const auto s1 = seq_.load(std::memory_order_acquire);
    if (s1 & 1u) continue;
    snap.exit_index = exit_.load(std::memory_order_relaxed);
    snap.point = {x_.load(std::memory_order_relaxed),
                  y_.load(std::memory_order_relaxed)};
    snap.write_count = writes_.load(std::memory_order_relaxed);
    std::atomic_thread_fence(std::memory_order_acquire);
    if (seq_.load(std::memory_order_relaxed) == s1) return snap;
  }
}

// ---------------------------------------------------------------------------
// Event cost

EventCost EventCost::calibrate(double anchor_frr_ms, int width, int height,
                               double t_s_c_ms, double preprocess_fraction) {
  if (anchor_frr_ms <= t_s_c_ms)
    throw ConfigError("calibrate: anchor below sensing latency");
  if (preprocess_fraction < 0 || preprocess_fraction >= 1)
    throw ConfigError("calibrate: preprocess fraction out of [0,1)");
  EventCost c;
  c.t_s_c_ms = t_s_c_ms;
  const double render_budget = anchor_frr_ms - t_s_c_ms;
  c.preprocess_ms = preprocess_fraction * render_budget;
  c.cost_per_px_ms =
      (render_budget - c.preprocess_ms) / (double(width) * double(height));
  return c;
}

// ---------------------------------------------------------------------------
// FrameSchedule

double FrameSchedule::render_busy_ms() const {
  double sum = 0;
  for (const auto& r : rounds) sum += r.elapsed_ms;
  return sum;
}

std::string FrameSchedule::to_json() const {
  nlohmann::json rounds_json = nlohmann::json::array();
  for (const auto& r : rounds) {
    nlohmann::json rj{{"round", r.round_index},
                      {"exit", r.exit_index},
                      {"speculative", r.speculative},
                      {"tiles_upgraded", r.tiles_upgraded},
                      {"pixels_composited", r.pixels_composited},
                      {"start_ms", r.start_ms},
                      {"elapsed_ms", r.elapsed_ms}};
    if (r.gaze_used) rj["gaze"] = {r.gaze_used->x(), r.gaze_used->y()};
    rounds_json.push_back(rj);
  }
  nlohmann::json gaze_json = nlohmann::json::array();
  for (const auto& p : gaze_log)
    gaze_json.push_back({{"exit", p.exit_index},
                         {"point", {p.point.x(), p.point.y()}},
                         {"available_at_ms", p.available_at_ms},
                         {"clamped", p.clamped}});
  nlohmann::json j{{"mode", to_string(mode)},
                   {"rounds", rounds_json},
                   {"gaze_log", gaze_json},
                   {"speculative_rounds", speculative_rounds},
                   {"pixels_composited_total", pixels_composited_total},
                   {"latency",
                    {{"t_s_c_ms", latency.t_s_c_ms},
                     {"t_d_ms", latency.t_d_ms},
                     {"t_r_ms", latency.t_r_ms},
                     {"t_tot_ms", latency.t_tot_ms}}}};
  return j.dump(1);
}

void FrameSchedule::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw FormatError(path.string() + ": cannot open for writing");
  out << to_json() << "\n";
}

// ---------------------------------------------------------------------------
// Frame execution

double speculate_next_radius(int current_exit, double rendered_r,
                             const FoveationProfile& profile) {
  if (current_exit < 1 || current_exit > profile.n_exits)
    throw ConfigError("speculate: exit index out of range");
  const double r_max = profile.r_max_px[std::size_t(current_exit - 1)];
  if (rendered_r >= r_max) return -1.0;
  return std::min(rendered_r + double(kTileSize), r_max);
}

namespace {

struct WorkerState {
  const TileWorkset* ws = nullptr;
  FrameState* frame = nullptr;
  const SchedulerConfig* cfg = nullptr;
  bool event = true;
  double now_ms = 0;  // event-mode cursor
  std::chrono::steady_clock::time_point wall_start;
  std::vector<RenderRound> rounds;
  std::int64_t pixels_total = 0;

  double now() const {
    if (event) return now_ms;
    return std::chrono::duration<double, std::milli>(
               std::chrono::steady_clock::now() - wall_start)
        .count();
  }

  RenderRound run_round(const std::vector<std::uint8_t>& request,
                        std::optional<Eigen::Vector2f> gaze, int exit_index,
                        bool speculative) {
    const auto t0 = std::chrono::steady_clock::now();
    const double started = now();
    RenderRound r = render_region(*ws, *frame, request, cfg->n_threads);
    r.start_ms = started;
    if (event) {
      r.elapsed_ms = double(r.pixels_composited) * cfg->cost.cost_per_px_ms;
      now_ms += r.elapsed_ms;
    } else {
      r.elapsed_ms = std::chrono::duration<double, std::milli>(
                         std::chrono::steady_clock::now() - t0)
                         .count();
    }
    r.gaze_used = gaze;
    r.exit_index = exit_index;
    r.speculative = speculative;
    frame->round_log.back() = r;
    rounds.push_back(r);
    pixels_total += r.pixels_composited;
    return r;
  }

  void log_preprocess(double elapsed_ms) {
    RenderRound r;
    r.round_index = 0;
    r.start_ms = event ? now_ms : 0.0;
    r.elapsed_ms = elapsed_ms;
    frame->round_log.push_back(r);
    rounds.push_back(r);
  }
};

std::vector<std::uint8_t> full_level(const Camera& cam, int level) {
  return std::vector<std::uint8_t>(
      std::size_t(tiles_x_for(cam.width)) * tiles_y_for(cam.height),
      std::uint8_t(level));
}

double band_outer_radius(const FoveationConfig& cfg) {
  return cfg.deg_to_px(cfg.band_edges_deg[2]);
}

}  // namespace

FrameResult run_frame(const Scene& scene, const Camera& cam,
                      const GazeTruth& truth, const SchedulerConfig& cfg_in) {
  cam.validate();
  SchedulerConfig cfg = cfg_in;
  if (cfg.fov_cfg.rho_d <= 0)
    cfg.fov_cfg.rho_d = FoveationConfig::for_camera(cam).rho_d;
  cfg.fov_cfg.validate();
  if (cfg.mode != Mode::FRR) cfg.exit_model.validate();
  if (cfg.mode == Mode::A3FR &&
      cfg.profile.n_exits != cfg.exit_model.n_exits())
    throw ConfigError("run_frame: profile does not match exit model");

  const bool event = cfg.clock == ClockMode::Event;
  const double t_s_c = cfg.cost.t_s_c_ms;
  const int n_exits = cfg.mode == Mode::FRR ? 0 : cfg.exit_model.n_exits();
  const int last_published =
      cfg.stall_after_exit > 0 ? std::min(cfg.stall_after_exit, n_exits)
                               : n_exits;

  std::vector<GazePrediction> preds;
  if (cfg.mode != Mode::FRR)
    preds = simulate_exits(truth, cfg.exit_model, cfg.seed, cfg.fov_cfg, cam);
  std::vector<GazePrediction> published(preds.begin(),
                                        preds.begin() + last_published);

  FrameResult res;
  res.frame = make_frame(cam, cfg.background);
  res.schedule.mode = cfg.mode;
  res.schedule.gaze_log = published;

  WorkerState st;
  st.frame = &res.frame;
  st.cfg = &cfg;
  st.event = event;
  st.wall_start = std::chrono::steady_clock::now();

  // Wallclock A3FR: the gaze worker runs while the render worker preprocesses.
  SharedGazeSlot slot;
  std::atomic<bool> gaze_done{false};
  std::thread gaze_thread;
  if (!event && cfg.mode == Mode::A3FR) {
    gaze_thread = std::thread([&] {
      auto sleep_ms = [](double ms) {
        std::this_thread::sleep_for(std::chrono::duration<double, std::milli>(ms));
      };
      sleep_ms(cfg.exit_model.embed_ms);
      for (auto& p : published) {
        sleep_ms(cfg.exit_model.layers[std::size_t(p.exit_index - 1)].latency_ms);
        p.available_at_ms = std::chrono::duration<double, std::milli>(
                                std::chrono::steady_clock::now() - st.wall_start)
                                .count();
        slot.publish(p.exit_index, p.point);
      }
      gaze_done.store(true, std::memory_order_release);
    });
  }

  // Preprocess: the buffered intermediate reused by every round.
  const auto pre0 = std::chrono::steady_clock::now();
  const TileWorkset ws =
      build_workset(project(scene, cam, cfg.near_plane), cam);
  const double pre_wall = std::chrono::duration<double, std::milli>(
                              std::chrono::steady_clock::now() - pre0)
                              .count();
  st.ws = &ws;

  // Wallclock A3FR recomputes t_d after the join; reading the availability
  // times here would race with the gaze thread still filling them in.
  const double t_d = (gaze_thread.joinable() || published.empty())
                         ? 0.0
                         : published.back().available_at_ms;

  if (cfg.mode == Mode::FRR) {
    st.now_ms = 0;
    st.log_preprocess(event ? cfg.cost.preprocess_ms : pre_wall);
    if (event) st.now_ms += cfg.cost.preprocess_ms;
    st.run_round(full_level(cam, 4), std::nullopt, -1, false);
  } else if (cfg.mode == Mode::SFR) {
    // Sequential: the tracker runs to its last exit, then one foveated pass.
    st.now_ms = t_d;
    st.log_preprocess(event ? cfg.cost.preprocess_ms : pre_wall);
    if (event) st.now_ms += cfg.cost.preprocess_ms;
    const Eigen::Vector2f gaze = published.back().point;
    st.run_round(
        level_requests(gaze, 0, band_outer_radius(cfg.fov_cfg), cfg.fov_cfg, cam),
        gaze, published.back().exit_index, false);
  } else {
    // A3FR: render worker starts immediately; exits arrive concurrently.
    st.now_ms = 0;
    st.log_preprocess(event ? cfg.cost.preprocess_ms : pre_wall);
    if (event) st.now_ms += cfg.cost.preprocess_ms;

    // Latest exit visible at virtual/wall time `now`; 0 when none yet.
    auto poll = [&](double now) -> SharedGazeSlot::Snapshot {
      if (!event) return slot.read();
      SharedGazeSlot::Snapshot snap;
      for (const auto& p : published) {
        if (p.available_at_ms <= now) {
          snap.exit_index = p.exit_index;
          snap.point = p.point;
          ++snap.write_count;
        }
      }
      return snap;
    };
    auto exits_exhausted = [&](int consumed) {
      if (event) return published.empty() || consumed >= published.back().exit_index;
      return gaze_done.load(std::memory_order_acquire) &&
             (published.empty() || consumed >= published.back().exit_index);
    };
    auto wait_for_exit = [&](int consumed) {
      if (event) {
        for (const auto& p : published) {
          if (p.exit_index > consumed) {
            st.now_ms = std::max(st.now_ms, p.available_at_ms);
            return;
          }
        }
      } else {
        std::this_thread::sleep_for(std::chrono::microseconds(100));
      }
    };

    // Round 1: peripheral resolution everywhere, no gaze needed.
    st.run_round(full_level(cam, cfg.fov_cfg.band_levels[3]), std::nullopt, -1,
                 false);

    int consumed = 0;
    Eigen::Vector2f center = Eigen::Vector2f::Zero();
    double rendered_r = 0;
    bool done = false;
    while (!done) {
      const auto snap = poll(st.now());
      if (snap.exit_index > consumed) {
        consumed = snap.exit_index;
        center = snap.point;
        if (consumed == n_exits) {
          // Final gaze: bring every band around it to its level.
          st.run_round(level_requests(center, rendered_r,
                                      band_outer_radius(cfg.fov_cfg),
                                      cfg.fov_cfg, cam),
                       center, consumed, false);
          done = true;
        } else {
          rendered_r = cfg.profile.r_f_px[std::size_t(consumed - 1)];
          st.run_round(disk_request(center, rendered_r, cam), center, consumed,
                       false);
        }
      } else if (consumed > 0) {
        const double next =
            speculate_next_radius(consumed, rendered_r, cfg.profile);
        if (next > 0) {
          auto r = st.run_round(disk_request(center, next, cam), center,
                                consumed, true);
          rendered_r = next;
          ++res.schedule.speculative_rounds;
          (void)r;
        } else if (exits_exhausted(consumed)) {
          break;  // stalled tracker: speculative cap reached
        } else {
          wait_for_exit(consumed);
        }
      } else if (exits_exhausted(0)) {
        break;  // no predictions at all
      } else {
        wait_for_exit(0);
      }
    }
    if (!event) {
      gaze_thread.join();
      res.schedule.gaze_log = published;  // measured availability times
    }
  }

  // Latency accounting. t_r includes idle gaps: it is the render worker's
  // completion time relative to the start of its window.
  LatencyBreakdown lat;
  lat.t_s_c_ms = t_s_c;
  lat.t_d_ms = cfg.mode == Mode::FRR ? 0.0 : t_d;
  if (!event) {
    const double wall_now = st.now();
    if (cfg.mode == Mode::FRR) {
      lat.t_r_ms = wall_now;
      lat.t_tot_ms = t_s_c + lat.t_r_ms;
    } else if (cfg.mode == Mode::SFR) {
      // Sequential: the tracker's model latency precedes the render stage.
      lat.t_r_ms = wall_now;
      lat.t_tot_ms = t_s_c + lat.t_d_ms + lat.t_r_ms;
    } else {
      if (!res.schedule.gaze_log.empty())
        lat.t_d_ms = res.schedule.gaze_log.back().available_at_ms;
      lat.t_r_ms = wall_now;
      lat.t_tot_ms = t_s_c + std::max(lat.t_d_ms, lat.t_r_ms);
    }
  } else if (cfg.mode == Mode::SFR) {
    lat.t_r_ms = st.now_ms - t_d;  // render window starts after the tracker
    lat.t_tot_ms = t_s_c + lat.t_d_ms + lat.t_r_ms;
  } else {
    lat.t_r_ms = st.now_ms;
    lat.t_tot_ms = t_s_c + std::max(lat.t_d_ms, lat.t_r_ms);
  }
  res.schedule.rounds = st.rounds;
  res.schedule.pixels_composited_total = st.pixels_total;
  res.schedule.latency = lat;
  return res;
}

LatencyBreakdown account(const FrameSchedule& schedule, double quantum_ms) {
  const auto& lat = schedule.latency;
  double expected = 0;
  switch (schedule.mode) {
    case Mode::FRR:
      if (lat.t_d_ms != 0) throw ConfigError("account: FRR with nonzero t_d");
      expected = lat.t_s_c_ms + lat.t_r_ms;
      break;
    case Mode::SFR:
      expected = lat.t_s_c_ms + lat.t_d_ms + lat.t_r_ms;
      break;
    case Mode::A3FR:
      expected = lat.t_s_c_ms + std::max(lat.t_d_ms, lat.t_r_ms);
      break;
  }
  if (std::abs(expected - lat.t_tot_ms) > quantum_ms)
    throw ConfigError("account: latency identity violated by " +
                      std::to_string(std::abs(expected - lat.t_tot_ms)) + " ms");
  return lat;
}

}  // namespace a3fr
