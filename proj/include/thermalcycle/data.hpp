#pragma once

#include <cstdint>
#include <deque>
#include <filesystem>
#include <future>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "thermalcycle/image_io.hpp"
#include "thermalcycle/tensor.hpp"

namespace thermalcycle {

enum class CropMode { center_square, none };
enum class Pairing { unpaired, paired_by_name };
enum class Domain { x_rgb, y_thermal };

struct AugmentConfig {
  bool hflip = true;
  bool vflip = true;
  bool rotate = true;
  bool operator==(const AugmentConfig&) const = default;
};

struct DatasetConfig {
  std::filesystem::path rgb_dir;
  std::filesystem::path thermal_dir;
  int image_size = 256;
  CropMode crop = CropMode::center_square;
  AugmentConfig augment;
  Pairing pairing = Pairing::unpaired;
  std::uint64_t seed = 0;
  /// Prefetch threads; 0 decodes on the calling thread.
  int workers = 4;

  /// `<root>/trainA` + `<root>/trainB` (or testA/testB when `split` is "test").
  static DatasetConfig from_root(const std::filesystem::path& root, const std::string& split = "train");
};

struct Sample {
  Tensor image;  ///< [1, 3, S, S] in [-1, 1]
  std::filesystem::path source;
  Domain domain = Domain::x_rgb;
};

/// Center-square crop (optional) followed by a bilinear resize to S x S with
/// half-pixel sample centres and edge clamping.
Tensor geometry_normalize(const Tensor& image, int size, CropMode crop);

/// Bilinear resize of every (n, c) plane to out_h x out_w.
Tensor resize_bilinear(const Tensor& image, int out_h, int out_w);

Tensor flip_horizontal(const Tensor& image);
Tensor flip_vertical(const Tensor& image);
/// Counter-clockwise rotation by quarter_turns * 90 degrees (square input).
Tensor rotate90(const Tensor& image, int quarter_turns);

/// Independent coin flips for horizontal and vertical mirroring (p = 1/2
/// each) and a uniform quarter-turn count, drawn in that order from `rng`.
Tensor augment(const Tensor& image, const AugmentConfig& cfg, std::mt19937_64& rng);

/// 2x - 1; inputs must lie in [0, 1] (1e-6 slack).
Tensor to_model_range(const Tensor& image01);
/// (x + 1) / 2 clamped to [0, 1]; inputs must lie in [-1, 1] (1e-6 slack).
Tensor from_model_range(const Tensor& image_model);

/// Image files (.png, .jpg, .jpeg) in `dir`, sorted lexicographically.
std::vector<std::filesystem::path> list_images(const std::filesystem::path& dir);

/// Index pairs for one epoch. Unpaired: both domains shuffled independently
/// and zipped, the shorter cycling, length max(|X|, |Y|). Paired: aligned by
/// basename in sorted order.
std::vector<std::pair<std::size_t, std::size_t>> epoch_plan(std::size_t count_x, std::size_t count_y,
                                                            Pairing pairing, std::uint64_t seed,
                                                            std::uint64_t epoch);

class Dataset {
 public:
  explicit Dataset(DatasetConfig cfg);

  const DatasetConfig& config() const { return cfg_; }
  const std::vector<std::filesystem::path>& rgb_files() const { return rgb_; }
  const std::vector<std::filesystem::path>& thermal_files() const { return thermal_; }
  std::size_t epoch_length() const;

  /// Loads, normalizes and augments one sample. The augmentation draw depends
  /// only on (seed, epoch, position, domain), so results are independent of
  /// which thread produces them.
  Sample load_sample(Domain domain, std::size_t file_index, std::uint64_t epoch, std::size_t position) const;

 private:
  DatasetConfig cfg_;
  std::vector<std::filesystem::path> rgb_;
  std::vector<std::filesystem::path> thermal_;
};

/// Ordered stream of (x, y) samples for one epoch, prefetched by up to
/// `workers` threads. Emission order equals the single-threaded order.
class EpochStream {
 public:
  EpochStream(const Dataset& dataset, std::uint64_t epoch);

  std::optional<std::pair<Sample, Sample>> next();
  std::size_t size() const { return plan_.size(); }

 private:
  void refill();

  const Dataset& dataset_;
  std::uint64_t epoch_;
  std::vector<std::pair<std::size_t, std::size_t>> plan_;
  std::size_t issued_ = 0;
  std::deque<std::future<std::pair<Sample, Sample>>> pending_;
};

}  // namespace thermalcycle
