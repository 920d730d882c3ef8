#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <random>

#include "a3fr/bench.hpp"
#include "a3fr/raster.hpp"
#include "doctest.h"

using namespace a3fr;

namespace {

Camera test_camera(int w = 128, int h = 96) {
  return Camera::from_fov(Eigen::Matrix4f::Identity(), 90.0f, w, h);
}

std::vector<Splat2D> random_splats(std::mt19937_64& rng, int n, int w, int h) {
  std::uniform_real_distribution<float> px(0.0f, float(w)), py(0.0f, float(h));
  std::uniform_real_distribution<float> uo(0.1f, 1.0f), uc(0.005f, 0.2f),
      ud(0.5f, 20.0f), ur(0.0f, 1.0f);
  std::vector<Splat2D> splats;
  for (int i = 0; i < n; ++i) {
    Splat2D s;
    s.mean2d = {px(rng), py(rng)};
    // Random positive-definite conic.
    const float a = uc(rng), c = uc(rng);
    const float b = 0.5f * std::sqrt(a * c) * (2 * ur(rng) - 1);
    s.conic_a = a;
    s.conic_b = b;
    s.conic_c = c;
    s.depth = ud(rng);
    s.opacity = uo(rng);
    s.color = {ur(rng), ur(rng), ur(rng)};
    s.radius_px = std::ceil(3.0f / std::sqrt(std::min(a, c)));
    splats.push_back(s);
  }
  return splats;
}

// Straight-line reference: full volume-rendering sum, no early termination.
Eigen::Vector3f reference_pixel(const TileWorkset& ws, int tile, int x, int y,
                                const Eigen::Vector3f& background) {
  Eigen::Vector3d acc = Eigen::Vector3d::Zero();
  double t = 1.0;
  for (const auto idx : ws.tile_splats[std::size_t(tile)]) {
    const auto& s = ws.splats[idx];
    const double dx = x + 0.5 - s.mean2d.x();
    const double dy = y + 0.5 - s.mean2d.y();
    const double power =
        0.5 * (s.conic_a * dx * dx + s.conic_c * dy * dy) + s.conic_b * dx * dy;
    if (power < 0) continue;
    const double alpha = std::min(0.99, double(s.opacity) * std::exp(-power));
    if (alpha < 1.0 / 255.0) continue;
    acc += t * alpha * s.color.cast<double>();
    t *= 1.0 - alpha;
  }
  return (acc + t * background.cast<double>()).cast<float>();
}

}  // namespace

TEST_CASE("empty tile renders the background") {
  const Camera cam = test_camera();
  const auto ws = build_workset({}, cam);
  FrameState frame = make_frame(cam, {0.25f, 0.5f, 0.75f});
  composite_tile(ws, 0, 0, 4, frame);
  for (int y = 0; y < 32; ++y)
    for (int x = 0; x < 32; ++x) {
      const float* p = frame.pixel(x, y);
      CHECK(p[0] == doctest::Approx(0.25f));
      CHECK(p[1] == doctest::Approx(0.5f));
      CHECK(p[2] == doctest::Approx(0.75f));
    }
}

TEST_CASE("single opaque splat over a pixel center: 0.99 color + 0.01 bg") {
  const Camera cam = test_camera();
  Splat2D s;
  s.mean2d = {0.5f, 0.5f};  // level-1 slot center of block (0,0)
  s.conic_a = s.conic_c = 1e-6f;
  s.conic_b = 0;
  s.opacity = 1.0f;
  s.color = {1.0f, 0.0f, 0.5f};
  s.depth = 1;
  s.radius_px = 4;
  const auto ws = build_workset({s}, cam);
  FrameState frame = make_frame(cam, {0.0f, 1.0f, 0.0f});
  composite_tile(ws, 0, 0, 1, frame);
  const float* p = frame.pixel(0, 0);
  CHECK(p[0] == doctest::Approx(0.99f));
  CHECK(p[1] == doctest::Approx(0.01f));
  CHECK(p[2] == doctest::Approx(0.99f * 0.5f));
}

TEST_CASE("compositing matches no-early-termination scalar reference") {
  const Camera cam = test_camera();
  std::mt19937_64 rng(31);
  const Eigen::Vector3f bg(0.1f, 0.1f, 0.1f);
  const auto ws = build_workset(random_splats(rng, 120, cam.width, cam.height), cam);
  FrameState frame = make_frame(cam, bg);
  render_region(ws, frame, std::vector<std::uint8_t>(frame.level_map.size(), 4));

  std::uniform_int_distribution<int> ux(0, cam.width - 1), uy(0, cam.height - 1);
  for (int probe = 0; probe < 1000; ++probe) {
    const int x = ux(rng), y = uy(rng);
    const int tile = (y / kTileSize) * frame.tiles_x() + (x / kTileSize);
    const Eigen::Vector3f expect = reference_pixel(ws, tile, x, y, bg);
    const float* got = frame.pixel(x, y);
    for (int ch = 0; ch < 3; ++ch)
      CHECK(std::abs(got[ch] - expect[ch]) < 1e-4f);
  }
}

TEST_CASE("fill_holes: enumerated block states") {
  const Camera cam = test_camera();
  std::mt19937_64 rng(32);
  const auto ws = build_workset(random_splats(rng, 60, cam.width, cam.height), cam);

  SUBCASE("level 1: all four pixels equal the slot-1 color") {
    FrameState frame = make_frame(cam);
    composite_tile(ws, 0, 0, 1, frame);
    fill_holes(frame, 0);
    for (int by = 0; by < 32; by += 2)
      for (int bx = 0; bx < 32; bx += 2) {
        const float* ref = frame.pixel(bx, by);
        for (int slot = 2; slot <= 4; ++slot) {
          const float* p = frame.pixel(bx + kSlotDx[slot], by + kSlotDy[slot]);
          CHECK((p[0] == ref[0] && p[1] == ref[1] && p[2] == ref[2]));
        }
      }
  }

  SUBCASE("level 2: slots 3 and 4 inherit, slot 2 untouched") {
    FrameState frame = make_frame(cam);
    composite_tile(ws, 0, 0, 2, frame);
    FrameState before = frame;
    fill_holes(frame, 0);
    for (int by = 0; by < 32; by += 2)
      for (int bx = 0; bx < 32; bx += 2) {
        const float* ref = frame.pixel(bx, by);
        const float* s2b = before.pixel(bx + kSlotDx[2], by + kSlotDy[2]);
        const float* s2 = frame.pixel(bx + kSlotDx[2], by + kSlotDy[2]);
        CHECK((s2[0] == s2b[0] && s2[1] == s2b[1] && s2[2] == s2b[2]));
        for (int slot : {3, 4}) {
          const float* p = frame.pixel(bx + kSlotDx[slot], by + kSlotDy[slot]);
          CHECK((p[0] == ref[0] && p[1] == ref[1] && p[2] == ref[2]));
        }
      }
  }

  SUBCASE("level 4: fill_holes is the identity") {
    FrameState frame = make_frame(cam);
    composite_tile(ws, 0, 0, 4, frame);
    FrameState before = frame;
    fill_holes(frame, 0);
    CHECK(frame.color == before.color);
  }

  SUBCASE("idempotent") {
    FrameState frame = make_frame(cam);
    composite_tile(ws, 0, 0, 2, frame);
    fill_holes(frame, 0);
    FrameState once = frame;
    fill_holes(frame, 0);
    CHECK(frame.color == once.color);
  }
}

TEST_CASE("render_region: monotone no-op and exact upgrade counts") {
  const Camera cam = test_camera();
  std::mt19937_64 rng(33);
  const auto ws = build_workset(random_splats(rng, 60, cam.width, cam.height), cam);
  FrameState frame = make_frame(cam);
  const std::size_t n_tiles = frame.level_map.size();

  const auto r1 = render_region(ws, frame, std::vector<std::uint8_t>(n_tiles, 1));
  CHECK(r1.pixels_composited == std::int64_t(n_tiles) * 256);
  const auto r2 = render_region(ws, frame, std::vector<std::uint8_t>(n_tiles, 1));
  CHECK(r2.pixels_composited == 0);
  CHECK(r2.tiles_upgraded == 0);

  std::vector<std::uint8_t> one(n_tiles, 0);
  one[0] = 2;
  const auto r3 = render_region(ws, frame, one);
  CHECK(r3.pixels_composited == 256);
  CHECK(r3.tiles_upgraded == 1);
}

TEST_CASE("work accounting: 256 x sum of level deltas") {
  const Camera cam = test_camera();
  std::mt19937_64 rng(34);
  const auto ws = build_workset(random_splats(rng, 40, cam.width, cam.height), cam);
  FrameState frame = make_frame(cam);
  const std::size_t n_tiles = frame.level_map.size();
  std::uniform_int_distribution<int> lvl(0, 4);

  for (int round = 0; round < 5; ++round) {
    std::vector<std::uint8_t> req(n_tiles);
    std::int64_t expect = 0;
    for (std::size_t t = 0; t < n_tiles; ++t) {
      req[t] = std::uint8_t(lvl(rng));
      if (req[t] > frame.level_map[t]) expect += 256 * (req[t] - frame.level_map[t]);
    }
    const auto r = render_region(ws, frame, req);
    CHECK(r.pixels_composited == expect);
  }
}

TEST_CASE("path independence: any upgrade split equals one-shot") {
  const Camera cam = test_camera();
  std::mt19937_64 rng(35);
  std::uniform_int_distribution<int> lvl(0, 4);

  for (int trial = 0; trial < 10; ++trial) {
    const auto ws =
        build_workset(random_splats(rng, 80, cam.width, cam.height), cam);
    const std::size_t n_tiles = std::size_t(ws.tile_count());

    // Random monotone request sequence; its pointwise max is the final map.
    std::vector<std::vector<std::uint8_t>> rounds;
    std::vector<std::uint8_t> final_map(n_tiles, 0);
    const int n_rounds = 2 + trial % 3;
    for (int k = 0; k < n_rounds; ++k) {
      std::vector<std::uint8_t> req(n_tiles);
      for (std::size_t t = 0; t < n_tiles; ++t) {
        req[t] = std::uint8_t(lvl(rng));
        final_map[t] = std::max(final_map[t], req[t]);
      }
      rounds.push_back(std::move(req));
    }
    for (std::size_t t = 0; t < n_tiles; ++t)
      if (final_map[t] == 0) final_map[t] = 1;  // leave no tile untouched
    rounds.push_back(final_map);

    FrameState incremental = make_frame(cam);
    for (const auto& req : rounds) render_region(ws, incremental, req);
    FrameState oneshot = make_frame(cam);
    render_region(ws, oneshot, final_map);

    CHECK(incremental.color == oneshot.color);
    CHECK(incremental.level_map == oneshot.level_map);
  }
}

TEST_CASE("level-4 tiles equal a plain full-resolution pass") {
  const Camera cam = test_camera();
  std::mt19937_64 rng(36);
  const auto ws = build_workset(random_splats(rng, 80, cam.width, cam.height), cam);

  FrameState full = make_frame(cam);
  render_region(ws, full, std::vector<std::uint8_t>(full.level_map.size(), 4));

  FrameState partial = make_frame(cam);
  std::vector<std::uint8_t> req(partial.level_map.size(), 1);
  req[0] = req[5] = req[7] = 4;
  render_region(ws, partial, req);

  for (int t : {0, 5, 7}) {
    int x0, y0, x1, y1;
    ws.tile_rect(t, x0, y0, x1, y1);
    for (int y = y0; y < y1; ++y)
      for (int x = x0; x < x1; ++x) {
        const float* a = partial.pixel(x, y);
        const float* b = full.pixel(x, y);
        CHECK((a[0] == b[0] && a[1] == b[1] && a[2] == b[2]));
      }
  }
}

TEST_CASE("pre-sort splat order does not change output") {
  const Camera cam = test_camera();
  std::mt19937_64 rng(37);
  auto splats = random_splats(rng, 80, cam.width, cam.height);
  auto shuffled = splats;
  std::shuffle(shuffled.begin(), shuffled.end(), rng);

  auto render = [&](const std::vector<Splat2D>& in) {
    FrameState frame = make_frame(cam);
    render_region(build_workset(in, cam), frame,
                  std::vector<std::uint8_t>(frame.level_map.size(), 4));
    return frame;
  };
  CHECK(render(splats).color == render(shuffled).color);
}

TEST_CASE("result independent of thread count") {
  const Camera cam = test_camera(256, 192);
  std::mt19937_64 rng(38);
  const auto ws = build_workset(random_splats(rng, 150, cam.width, cam.height), cam);
  const std::vector<std::uint8_t> req(std::size_t(ws.tile_count()), 4);

  FrameState serial = make_frame(cam);
  render_region(ws, serial, req, 1);
  FrameState parallel = make_frame(cam);
  render_region(ws, parallel, req, 4);
  CHECK(serial.color == parallel.color);
}
