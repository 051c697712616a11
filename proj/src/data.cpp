#include "thermalcycle/data.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <numeric>

#include "thermalcycle/seeding.hpp"

namespace thermalcycle {

namespace fs = std::filesystem;

namespace {

constexpr float kRangeSlack = 1e-6f;

enum : std::uint64_t { kTagAugment = 1, kTagShuffleX = 2, kTagShuffleY = 3 };

bool is_image_file(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

Tensor crop(const Tensor& image, int top, int left, int h, int w) {
  const Shape s = image.shape();
  Tensor out(Shape{s.n, s.c, h, w});
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c)
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) out.at(n, c, y, x) = image.at(n, c, top + y, left + x);
  return out;
}

struct Tap {
  int lo;
  int hi;
  float frac;
};

// Half-pixel centre mapping with clamping at the borders.
std::vector<Tap> bilinear_taps(int in, int out) {
  std::vector<Tap> taps(out);
  const double scale = static_cast<double>(in) / out;
  for (int i = 0; i < out; ++i) {
    double src = (i + 0.5) * scale - 0.5;
    src = std::clamp(src, 0.0, static_cast<double>(in - 1));
    const int lo = static_cast<int>(std::floor(src));
    const int hi = std::min(lo + 1, in - 1);
    taps[i] = {lo, hi, static_cast<float>(src - lo)};
  }
  return taps;
}

Tensor map_range(const Tensor& in, float lo, float hi, float mul, float add, bool clamp01) {
  Tensor out(in.shape());
  for (std::size_t i = 0; i < in.numel(); ++i) {
    const float v = in[i];
    if (!(v >= lo - kRangeSlack && v <= hi + kRangeSlack)) {
      throw std::out_of_range("pixel value " + std::to_string(v) + " outside [" + std::to_string(lo) + ", " +
                              std::to_string(hi) + "]");
    }
    float r = v * mul + add;
    if (clamp01) r = std::clamp(r, 0.0f, 1.0f);
    out[i] = r;
  }
  return out;
}

}  // namespace

DatasetConfig DatasetConfig::from_root(const fs::path& root, const std::string& split) {
  DatasetConfig cfg;
  cfg.rgb_dir = root / (split + "A");
  cfg.thermal_dir = root / (split + "B");
  return cfg;
}

Tensor resize_bilinear(const Tensor& image, int out_h, int out_w) {
  const Shape s = image.shape();
  if (out_h < 1 || out_w < 1) throw ShapeError("resize: output size must be positive");
  if (s.h == out_h && s.w == out_w) return image;
  const auto ty = bilinear_taps(s.h, out_h);
  const auto tx = bilinear_taps(s.w, out_w);
  Tensor out(Shape{s.n, s.c, out_h, out_w});
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      for (int y = 0; y < out_h; ++y) {
        const Tap& a = ty[y];
        for (int x = 0; x < out_w; ++x) {
          const Tap& b = tx[x];
          const float top = image.at(n, c, a.lo, b.lo) * (1.0f - b.frac) + image.at(n, c, a.lo, b.hi) * b.frac;
          const float bottom = image.at(n, c, a.hi, b.lo) * (1.0f - b.frac) + image.at(n, c, a.hi, b.hi) * b.frac;
          out.at(n, c, y, x) = top * (1.0f - a.frac) + bottom * a.frac;
        }
      }
    }
  }
  return out;
}

Tensor geometry_normalize(const Tensor& image, int size, CropMode mode) {
  if (size < 1) throw ShapeError("geometry_normalize: size must be positive");
  const Shape s = image.shape();
  Tensor region = image;
  if (mode == CropMode::center_square) {
    const int side = std::min(s.h, s.w);
    if (side != s.h || side != s.w) region = crop(image, (s.h - side) / 2, (s.w - side) / 2, side, side);
  }
  const Shape r = region.shape();
  if (r.h < size || r.w < size) {
    throw ShapeError("geometry_normalize: image " + std::to_string(r.h) + "x" + std::to_string(r.w) +
                     " is smaller than the target size " + std::to_string(size));
  }
  return resize_bilinear(region, size, size);
}

Tensor flip_horizontal(const Tensor& image) {
  const Shape s = image.shape();
  Tensor out(s);
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c)
      for (int y = 0; y < s.h; ++y)
        for (int x = 0; x < s.w; ++x) out.at(n, c, y, x) = image.at(n, c, y, s.w - 1 - x);
  return out;
}

Tensor flip_vertical(const Tensor& image) {
  const Shape s = image.shape();
  Tensor out(s);
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c)
      for (int y = 0; y < s.h; ++y)
        for (int x = 0; x < s.w; ++x) out.at(n, c, y, x) = image.at(n, c, s.h - 1 - y, x);
  return out;
}

Tensor rotate90(const Tensor& image, int quarter_turns) {
  const Shape s = image.shape();
  if (s.h != s.w) throw ShapeError("rotate90: square input required, got " + s.str());
  const int k = ((quarter_turns % 4) + 4) % 4;
  Tensor out = image;
  for (int turn = 0; turn < k; ++turn) {
    Tensor next(s);
    for (int n = 0; n < s.n; ++n)
      for (int c = 0; c < s.c; ++c)
        for (int y = 0; y < s.h; ++y)
          for (int x = 0; x < s.w; ++x) next.at(n, c, y, x) = out.at(n, c, x, s.w - 1 - y);
    out = std::move(next);
  }
  return out;
}

Tensor augment(const Tensor& image, const AugmentConfig& cfg, std::mt19937_64& rng) {
  if (image.shape().h != image.shape().w) throw ShapeError("augment: square input required");
  std::bernoulli_distribution coin(0.5);
  std::uniform_int_distribution<int> turns(0, 3);
  Tensor out = image;
  if (cfg.hflip && coin(rng)) out = flip_horizontal(out);
  if (cfg.vflip && coin(rng)) out = flip_vertical(out);
  if (cfg.rotate) {
    if (const int k = turns(rng); k != 0) out = rotate90(out, k);
  }
  return out;
}

Tensor to_model_range(const Tensor& image01) { return map_range(image01, 0.0f, 1.0f, 2.0f, -1.0f, false); }

Tensor from_model_range(const Tensor& image_model) {
  return map_range(image_model, -1.0f, 1.0f, 0.5f, 0.5f, true);
}

std::vector<fs::path> list_images(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw std::runtime_error("image directory '" + dir.string() + "' does not exist");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && is_image_file(entry.path())) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

std::vector<std::pair<std::size_t, std::size_t>> epoch_plan(std::size_t count_x, std::size_t count_y,
                                                            Pairing pairing, std::uint64_t seed,
                                                            std::uint64_t epoch) {
  if (count_x == 0 || count_y == 0) throw std::invalid_argument("epoch_plan: empty domain");
  std::vector<std::pair<std::size_t, std::size_t>> plan;
  if (pairing == Pairing::paired_by_name) {
    if (count_x != count_y) throw std::invalid_argument("epoch_plan: paired domains differ in size");
    for (std::size_t i = 0; i < count_x; ++i) plan.emplace_back(i, i);
    return plan;
  }
  std::vector<std::size_t> px(count_x);
  std::vector<std::size_t> py(count_y);
  std::iota(px.begin(), px.end(), 0);
  std::iota(py.begin(), py.end(), 0);
  std::mt19937_64 rx(derive_seed(seed, {kTagShuffleX, epoch}));
  std::mt19937_64 ry(derive_seed(seed, {kTagShuffleY, epoch}));
  std::shuffle(px.begin(), px.end(), rx);
  std::shuffle(py.begin(), py.end(), ry);
  const std::size_t length = std::max(count_x, count_y);
  for (std::size_t i = 0; i < length; ++i) plan.emplace_back(px[i % count_x], py[i % count_y]);
  return plan;
}

Dataset::Dataset(DatasetConfig cfg) : cfg_(std::move(cfg)) {
  rgb_ = list_images(cfg_.rgb_dir);
  thermal_ = list_images(cfg_.thermal_dir);
  if (rgb_.empty()) throw std::runtime_error("no images in '" + cfg_.rgb_dir.string() + "'");
  if (thermal_.empty()) throw std::runtime_error("no images in '" + cfg_.thermal_dir.string() + "'");
  if (cfg_.pairing == Pairing::paired_by_name) {
    auto stems = [](const std::vector<fs::path>& files) {
      std::vector<std::string> out;
      for (const auto& f : files) out.push_back(f.stem().string());
      return out;
    };
    if (stems(rgb_) != stems(thermal_)) {
      throw std::runtime_error("paired dataset: basenames in '" + cfg_.rgb_dir.string() + "' and '" +
                               cfg_.thermal_dir.string() + "' do not match");
    }
  }
}

std::size_t Dataset::epoch_length() const { return std::max(rgb_.size(), thermal_.size()); }

Sample Dataset::load_sample(Domain domain, std::size_t file_index, std::uint64_t epoch, std::size_t position) const {
  const auto& files = domain == Domain::x_rgb ? rgb_ : thermal_;
  const fs::path& path = files.at(file_index);
  Tensor image = geometry_normalize(load_image(path), cfg_.image_size, cfg_.crop);
  // Paired samples share one augmentation draw so both sides stay aligned.
  const std::uint64_t domain_tag = cfg_.pairing == Pairing::paired_by_name ? 0 : static_cast<std::uint64_t>(domain) + 1;
  std::mt19937_64 rng(derive_seed(cfg_.seed, {kTagAugment, epoch, position, domain_tag}));
  image = augment(image, cfg_.augment, rng);
  return Sample{to_model_range(image), path, domain};
}

EpochStream::EpochStream(const Dataset& dataset, std::uint64_t epoch)
    : dataset_(dataset),
      epoch_(epoch),
      plan_(epoch_plan(dataset.rgb_files().size(), dataset.thermal_files().size(), dataset.config().pairing,
                       dataset.config().seed, epoch)) {}

void EpochStream::refill() {
  const std::size_t window = static_cast<std::size_t>(std::max(dataset_.config().workers, 0));
  while (pending_.size() < window && issued_ < plan_.size()) {
    const std::size_t pos = issued_++;
    const auto [ix, iy] = plan_[pos];
    pending_.push_back(std::async(std::launch::async, [this, pos, ix, iy] {
      return std::make_pair(dataset_.load_sample(Domain::x_rgb, ix, epoch_, pos),
                            dataset_.load_sample(Domain::y_thermal, iy, epoch_, pos));
    }));
  }
}

std::optional<std::pair<Sample, Sample>> EpochStream::next() {
  if (dataset_.config().workers <= 0) {
    if (issued_ >= plan_.size()) return std::nullopt;
    const std::size_t pos = issued_++;
    const auto [ix, iy] = plan_[pos];
    return std::make_pair(dataset_.load_sample(Domain::x_rgb, ix, epoch_, pos),
                          dataset_.load_sample(Domain::y_thermal, iy, epoch_, pos));
  }
  refill();
  if (pending_.empty()) return std::nullopt;
  auto item = pending_.front().get();
  pending_.pop_front();
  refill();
  return item;
}

}  // namespace thermalcycle
