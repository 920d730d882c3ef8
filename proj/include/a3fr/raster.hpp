#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <vector>

#include "a3fr/splat.hpp"

namespace a3fr {

// Pattern slot offsets within each 2x2 block, indexed by level 1..4.
// Level 1 is the top-left pixel; the rest follow diagonal-first order.
inline constexpr int kSlotDx[5] = {0, 0, 1, 1, 0};
inline constexpr int kSlotDy[5] = {0, 0, 1, 0, 1};

struct RenderRound {
  int round_index = 0;
  std::optional<Eigen::Vector2f> gaze_used;
  int exit_index = -1;   // gaze exit this round consumed, -1 if none
  bool speculative = false;
  int tiles_upgraded = 0;
  std::int64_t pixels_composited = 0;
  double start_ms = 0;  // worker-clock time at round start
  double elapsed_ms = 0;
};

// Incremental framebuffer: colors plus the per-tile achieved level (0..4).
struct FrameState {
  int width = 0, height = 0;
  std::vector<float> color;        // 3 * W * H, row-major rgb
  std::vector<std::uint8_t> level_map;  // tiles_x * tiles_y
  std::vector<RenderRound> round_log;
  Eigen::Vector3f background = Eigen::Vector3f::Zero();

  int tiles_x() const { return tiles_x_for(width); }
  int tiles_y() const { return tiles_y_for(height); }

  float* pixel(int x, int y) { return color.data() + 3 * (std::size_t(y) * width + x); }
  const float* pixel(int x, int y) const {
    return color.data() + 3 * (std::size_t(y) * width + x);
  }
};

FrameState make_frame(const Camera& cam,
                      const Eigen::Vector3f& background = Eigen::Vector3f::Zero());

// Front-to-back alpha compositing of the pattern slots in (from_level,
// to_level] of one tile. Returns the number of pixels composited. Does not
// touch level_map slots outside the requested range and does not fill holes.
std::int64_t composite_tile(const TileWorkset& ws, int tile, int from_level,
                            int to_level, FrameState& frame);

// Copies the level-1 slot's color into every unrendered slot of each 2x2
// block of the tile. Idempotent.
void fill_holes(FrameState& frame, int tile);

// Upgrades every tile whose requested level exceeds its achieved level,
// compositing only the missing slots, then fills holes. level_request is
// dense per tile (values 0..4; 0 means no request). Parallel over tiles;
// the result is independent of scheduling.
RenderRound render_region(const TileWorkset& ws, FrameState& frame,
                          const std::vector<std::uint8_t>& level_request,
                          int n_threads = 0);

// Binary PPM (P6, 8-bit, no gamma) and a plain-text level grid.
void write_ppm(const std::filesystem::path& path, const FrameState& frame);
void write_level_map(std::ostream& os, const FrameState& frame);

}  // namespace a3fr
