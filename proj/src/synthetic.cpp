#include "thermalcycle/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <random>

#include "thermalcycle/image_io.hpp"
#include "thermalcycle/seeding.hpp"

namespace thermalcycle::synthetic {

namespace fs = std::filesystem;

namespace {

using Rgb = std::array<float, 3>;

// Scene colours lie on a curve whose luminance rises strictly, so each RGB
// colour has exactly one thermal rendering and the reverse map is well posed.
constexpr std::array<Rgb, 4> kScenePalette{{
    {0.05f, 0.10f, 0.30f},
    {0.15f, 0.45f, 0.25f},
    {0.70f, 0.60f, 0.35f},
    {0.95f, 0.95f, 0.85f},
}};

Rgb random_color(std::mt19937_64& rng) {
  const float t = std::uniform_real_distribution<float>(0.0f, 1.0f)(rng) * (kScenePalette.size() - 1);
  const std::size_t i = std::min(static_cast<std::size_t>(t), kScenePalette.size() - 2);
  const float a = t - i;
  const Rgb& c0 = kScenePalette[i];
  const Rgb& c1 = kScenePalette[i + 1];
  return {c0[0] + a * (c1[0] - c0[0]), c0[1] + a * (c1[1] - c0[1]), c0[2] + a * (c1[2] - c0[2])};
}

void paint(Tensor& img, int y, int x, const Rgb& c) {
  for (int ch = 0; ch < 3; ++ch) img.at(0, ch, y, x) = c[ch];
}

// Piecewise-linear ironbow-like ramp.
constexpr std::array<std::pair<float, Rgb>, 6> kColormap{{
    {0.00f, {0.00f, 0.00f, 0.00f}},
    {0.20f, {0.30f, 0.00f, 0.50f}},
    {0.45f, {0.80f, 0.05f, 0.25f}},
    {0.65f, {1.00f, 0.45f, 0.00f}},
    {0.85f, {1.00f, 0.85f, 0.10f}},
    {1.00f, {1.00f, 1.00f, 1.00f}},
}};

Rgb colormap(float t) {
  t = std::clamp(t, 0.0f, 1.0f);
  for (std::size_t i = 1; i < kColormap.size(); ++i) {
    const auto& [t1, c1] = kColormap[i];
    if (t <= t1) {
      const auto& [t0, c0] = kColormap[i - 1];
      const float a = (t - t0) / (t1 - t0);
      return {c0[0] + a * (c1[0] - c0[0]), c0[1] + a * (c1[1] - c0[1]), c0[2] + a * (c1[2] - c0[2])};
    }
  }
  return kColormap.back().second;
}

std::string file_name(int index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d.png", index);
  return buf;
}

}  // namespace

Tensor render_scene(std::uint64_t seed, int size) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  Tensor img(Shape{1, 3, size, size});
  const Rgb top = random_color(rng);
  const Rgb bottom = random_color(rng);
  for (int y = 0; y < size; ++y) {
    const float a = size > 1 ? static_cast<float>(y) / (size - 1) : 0.0f;
    const Rgb c{top[0] + a * (bottom[0] - top[0]), top[1] + a * (bottom[1] - top[1]), top[2] + a * (bottom[2] - top[2])};
    for (int x = 0; x < size; ++x) paint(img, y, x, c);
  }
  std::uniform_int_distribution<int> count(2, 4);
  const int shapes = count(rng);
  for (int s = 0; s < shapes; ++s) {
    const Rgb c = random_color(rng);
    const float cx = u(rng) * size;
    const float cy = u(rng) * size;
    const float extent = (0.1f + 0.25f * u(rng)) * size;
    const bool disc = u(rng) < 0.5f;
    const float aspect = 0.5f + u(rng);
    for (int y = 0; y < size; ++y) {
      for (int x = 0; x < size; ++x) {
        const float dx = x + 0.5f - cx;
        const float dy = y + 0.5f - cy;
        const bool inside = disc ? dx * dx + dy * dy <= extent * extent
                                 : std::abs(dx) <= extent * aspect && std::abs(dy) <= extent / aspect;
        if (inside) paint(img, y, x, c);
      }
    }
  }
  return img;
}

Tensor pseudo_thermal(const Tensor& rgb) {
  const Shape s = rgb.shape();
  if (s.c != 3) throw ShapeError("pseudo_thermal: expected 3 channels, got " + s.str());
  Tensor out(s);
  const std::size_t plane = s.plane();
  for (int n = 0; n < s.n; ++n) {
    const std::size_t base = static_cast<std::size_t>(n) * 3 * plane;
    for (std::size_t i = 0; i < plane; ++i) {
      const float lum = 0.299f * rgb[base + i] + 0.587f * rgb[base + plane + i] + 0.114f * rgb[base + 2 * plane + i];
      const Rgb c = colormap(lum);
      for (int ch = 0; ch < 3; ++ch) out[base + ch * plane + i] = c[ch];
    }
  }
  return out;
}

void write_dataset(const fs::path& root, const DatasetLayout& layout) {
  for (const char* sub : {"trainA", "trainB", "testA", "testB"}) fs::create_directories(root / sub);
  enum : std::uint64_t { kTrainA = 1, kTrainB = 2, kTest = 3 };
  for (int i = 0; i < layout.train_count; ++i) {
    save_png(render_scene(derive_seed(layout.seed, {kTrainA, static_cast<std::uint64_t>(i)}), layout.size),
             root / "trainA" / file_name(i));
    const Tensor other = render_scene(derive_seed(layout.seed, {kTrainB, static_cast<std::uint64_t>(i)}), layout.size);
    save_png(pseudo_thermal(other), root / "trainB" / file_name(i));
  }
  for (int i = 0; i < layout.test_count; ++i) {
    const Tensor scene = render_scene(derive_seed(layout.seed, {kTest, static_cast<std::uint64_t>(i)}), layout.size);
    save_png(scene, root / "testA" / file_name(i));
    save_png(pseudo_thermal(scene), root / "testB" / file_name(i));
  }
}

}  // namespace thermalcycle::synthetic
