#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "a3fr/scene.hpp"

namespace a3fr {

inline constexpr int kTileSize = 32;
// W and H must be divisible by this so every 2x2 block is complete and
// clipped edge tiles stay block-aligned.
inline constexpr int kPixelAlign = 8;

inline int tiles_x_for(int width) { return (width + kTileSize - 1) / kTileSize; }
inline int tiles_y_for(int height) { return (height + kTileSize - 1) / kTileSize; }

// A screen-space Gaussian: 2D mean, conic (inverse covariance), view color.
struct Splat2D {
  Eigen::Vector2f mean2d = Eigen::Vector2f::Zero();
  float conic_a = 0, conic_b = 0, conic_c = 0;  // symmetric 2x2 inverse cov
  float depth = 0;                               // camera-space z
  Eigen::Vector3f color = Eigen::Vector3f::Zero();
  float opacity = 0;
  float radius_px = 0;  // conservative 3-sigma screen extent
};

struct ProjectStats {
  std::size_t dropped_near_plane = 0;
  std::size_t dropped_degenerate = 0;
};

// EWA projection of every Gaussian to screen space. Gaussians behind the
// near plane or with a non-positive-definite 2D covariance are dropped and
// counted, never raised.
std::vector<Splat2D> project(const Scene& scene, const Camera& cam,
                             float near_plane = 0.2f, ProjectStats* stats = nullptr);

// The buffered intermediate shared across rendering rounds: splats binned to
// 32x32 tiles, each tile list sorted ascending by (depth, splat index).
struct TileWorkset {
  int tiles_x = 0, tiles_y = 0;
  Camera camera;
  std::vector<Splat2D> splats;
  std::vector<std::vector<std::uint32_t>> tile_splats;
  double build_ms = 0;

  int tile_count() const { return tiles_x * tiles_y; }
  // Pixel rectangle [x0,x1) x [y0,y1) of a tile, clipped to the image.
  void tile_rect(int tile, int& x0, int& y0, int& x1, int& y1) const;
};

TileWorkset build_workset(std::vector<Splat2D> splats, const Camera& cam);

// Plain-text dump (tile -> sorted index/depth pairs) for oracle comparison.
void dump_workset(std::ostream& os, const TileWorkset& ws);

}  // namespace a3fr
