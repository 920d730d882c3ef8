#include "a3fr/raster.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>
#include <thread>

#include "a3fr/errors.hpp"

namespace a3fr {

namespace {
constexpr float kAlphaFloor = 1.0f / 255.0f;
constexpr float kAlphaCeiling = 0.99f;
constexpr float kTransmittanceStop = 1e-4f;
}

FrameState make_frame(const Camera& cam, const Eigen::Vector3f& background) {
  cam.validate();
  FrameState f;
  f.width = cam.width;
  f.height = cam.height;
  f.background = background;
  f.color.assign(std::size_t(3) * cam.width * cam.height, 0.0f);
  f.level_map.assign(std::size_t(tiles_x_for(cam.width)) * tiles_y_for(cam.height), 0);
  return f;
}

std::int64_t composite_tile(const TileWorkset& ws, int tile, int from_level,
                            int to_level, FrameState& frame) {
  if (to_level <= from_level || to_level > 4 || from_level < 0)
    throw ConfigError("composite_tile: invalid level range");
  int x0, y0, x1, y1;
  ws.tile_rect(tile, x0, y0, x1, y1);
  const auto& list = ws.tile_splats[std::size_t(tile)];

  std::int64_t composited = 0;
  for (int level = from_level + 1; level <= to_level; ++level) {
    const int dx = kSlotDx[level], dy = kSlotDy[level];
    for (int by = y0; by < y1; by += 2) {
      for (int bx = x0; bx < x1; bx += 2) {
        const int px = bx + dx, py = by + dy;
        const float cxp = float(px) + 0.5f, cyp = float(py) + 0.5f;

        Eigen::Vector3f acc = Eigen::Vector3f::Zero();
        float transmittance = 1.0f;
        for (const auto idx : list) {
          const Splat2D& s = ws.splats[idx];
          const float ddx = cxp - s.mean2d.x();
          const float ddy = cyp - s.mean2d.y();
          const float power = 0.5f * (s.conic_a * ddx * ddx +
                                      s.conic_c * ddy * ddy) +
                              s.conic_b * ddx * ddy;
          if (power < 0.0f) continue;
          const float alpha =
              std::min(kAlphaCeiling, s.opacity * std::exp(-power));
          if (alpha < kAlphaFloor) continue;
          acc += transmittance * alpha * s.color;
          transmittance *= 1.0f - alpha;
          if (transmittance < kTransmittanceStop) break;
        }
        acc += transmittance * frame.background;
        float* out = frame.pixel(px, py);
        out[0] = acc.x();
        out[1] = acc.y();
        out[2] = acc.z();
        ++composited;
      }
    }
  }
  frame.level_map[std::size_t(tile)] = std::uint8_t(to_level);
  return composited;
}

void fill_holes(FrameState& frame, int tile) {
  const int tiles_x = frame.tiles_x();
  const int level = frame.level_map[std::size_t(tile)];
  if (level < 1) throw ConfigError("fill_holes: tile untouched");
  if (level >= 4) return;

  const int tx = tile % tiles_x, ty = tile / tiles_x;
  const int x0 = tx * kTileSize, y0 = ty * kTileSize;
  const int x1 = std::min(x0 + kTileSize, frame.width);
  const int y1 = std::min(y0 + kTileSize, frame.height);

  for (int by = y0; by < y1; by += 2) {
    for (int bx = x0; bx < x1; bx += 2) {
      const float* src = frame.pixel(bx + kSlotDx[1], by + kSlotDy[1]);
      for (int slot = level + 1; slot <= 4; ++slot) {
        float* dst = frame.pixel(bx + kSlotDx[slot], by + kSlotDy[slot]);
        dst[0] = src[0];
        dst[1] = src[1];
        dst[2] = src[2];
      }
    }
  }
}

RenderRound render_region(const TileWorkset& ws, FrameState& frame,
                          const std::vector<std::uint8_t>& level_request,
                          int n_threads) {
  if (level_request.size() != frame.level_map.size())
    throw ConfigError("render_region: request size mismatch");

  std::vector<int> upgrades;
  for (int t = 0; t < ws.tile_count(); ++t)
    if (level_request[std::size_t(t)] > frame.level_map[std::size_t(t)])
      upgrades.push_back(t);

  std::vector<std::int64_t> counts(upgrades.size(), 0);
  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t k = begin; k < end; ++k) {
      const int t = upgrades[k];
      counts[k] = composite_tile(ws, t, frame.level_map[std::size_t(t)],
                                 level_request[std::size_t(t)], frame);
      fill_holes(frame, t);
    }
  };

  unsigned hw = n_threads > 0 ? unsigned(n_threads)
                              : std::max(1u, std::thread::hardware_concurrency());
  // Tiles are disjoint pixel regions, so workers never overlap.
  if (hw <= 1 || upgrades.size() < 16) {
    work(0, upgrades.size());
  } else {
    const std::size_t n = upgrades.size();
    const unsigned workers = std::min<std::size_t>(hw, n);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w)
      pool.emplace_back(work, n * w / workers, n * (w + 1) / workers);
    for (auto& th : pool) th.join();
  }

  RenderRound round;
  round.round_index = int(frame.round_log.size());
  round.tiles_upgraded = int(upgrades.size());
  for (auto c : counts) round.pixels_composited += c;
  frame.round_log.push_back(round);
  return round;
}

void write_ppm(const std::filesystem::path& path, const FrameState& frame) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError(path.string() + ": cannot open for writing");
  out << "P6\n" << frame.width << " " << frame.height << "\n255\n";
  std::vector<unsigned char> row(std::size_t(frame.width) * 3);
  for (int y = 0; y < frame.height; ++y) {
    const float* src = frame.pixel(0, y);
    for (std::size_t k = 0; k < row.size(); ++k)
      row[k] = (unsigned char)std::lround(std::clamp(src[k], 0.0f, 1.0f) * 255.0f);
    out.write(reinterpret_cast<const char*>(row.data()), std::streamsize(row.size()));
  }
}

void write_level_map(std::ostream& os, const FrameState& frame) {
  const int tiles_x = frame.tiles_x(), tiles_y = frame.tiles_y();
  for (int ty = 0; ty < tiles_y; ++ty) {
    for (int tx = 0; tx < tiles_x; ++tx)
      os << int(frame.level_map[std::size_t(ty) * tiles_x + tx]);
    os << "\n";
  }
}

}  // namespace a3fr
