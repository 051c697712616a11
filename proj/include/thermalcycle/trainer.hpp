#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "thermalcycle/data.hpp"
#include "thermalcycle/image_pool.hpp"
#include "thermalcycle/models.hpp"
#include "thermalcycle/objectives.hpp"
#include "thermalcycle/optimizer.hpp"

namespace thermalcycle {

/// Every knob of a training run. Defaults are the published hyperparameters.
struct TrainConfig {
  int epochs = 100;
  int batch = 1;
  float lr = 0.001f;
  float beta1 = 0.9f;
  float beta2 = 0.999f;
  float adam_eps = 1e-8f;
  float lambda_cycle = 10.0f;
  float lambda_identity = 0.0f;
  int pool_capacity = 50;
  LossMode loss_mode = LossMode::least_squares;
  int image_size = 256;
  int n_res_blocks = 9;
  int base_filters = 64;
  std::vector<int> disc_filters{64, 128, 256, 512};
  std::uint64_t seed = 0;
  int checkpoint_every = 10;
  int log_every = 100;
  int workers = 4;
  CropMode crop = CropMode::center_square;
  AugmentConfig augment;

  void validate() const;
  GeneratorSpec generator_spec() const;
  DiscriminatorSpec discriminator_spec() const;
  AdamHyper adam() const;
  LossWeights weights() const { return {lambda_cycle, lambda_identity}; }

  bool operator==(const TrainConfig&) const = default;
};

/// Flat `key = value` rendering, one field per line in a fixed order.
/// Floats use the shortest representation that round-trips.
std::string format_config(const TrainConfig& cfg);

/// Sets one field from text. Throws std::invalid_argument for unknown keys
/// or unparsable values.
void apply_config_entry(TrainConfig& cfg, const std::string& key, const std::string& value);

/// Parses `key = value` lines (blank lines and `#` comments ignored) and
/// applies them on top of `base`.
TrainConfig parse_config(const std::string& text, TrainConfig base = {});

/// Raised when a loss becomes NaN or infinite.
class TrainingDiverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised by load_checkpoint for malformed files.
class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Unpaired `<root>/trainA` + `<root>/trainB` with the run's image size,
/// crop, augmentation, seed and worker count.
DatasetConfig training_data(const TrainConfig& cfg, const std::filesystem::path& root);

struct Networks {
  GeneratorSpec g_spec;
  DiscriminatorSpec d_spec;
  ModelParams g;   ///< RGB -> thermal
  ModelParams f;   ///< thermal -> RGB
  ModelParams dx;  ///< judges RGB images
  ModelParams dy;  ///< judges thermal images

  static Networks build(const TrainConfig& cfg);
  bool operator==(const Networks&) const = default;
};

struct Optimizers {
  AdamState gen;  ///< joint over G and F
  AdamState dx;
  AdamState dy;
  bool operator==(const Optimizers&) const = default;
};

struct Pools {
  ImagePool x;
  ImagePool y;

  static Pools create(const TrainConfig& cfg);
};

struct StepLosses {
  float g_loss = 0.0f;
  float d_x_loss = 0.0f;
  float d_y_loss = 0.0f;
};

/// Test hooks for a single step.
struct StepControl {
  bool update_generators = true;
  bool update_discriminators = true;
  /// Called with "generators", "d_x", "d_y" as each update is applied.
  std::function<void(std::string_view)> on_update;
  /// Receives the cycle loss of the step when set.
  float* cycle_loss_out = nullptr;
};

/// One iteration: joint G/F update on the full objective, then D_X and D_Y
/// updates on pooled, detached fakes.
StepLosses train_step(Networks& nets, Pools& pools, Optimizers& opt, const Tensor& x, const Tensor& y,
                      const TrainConfig& cfg, const StepControl& control = {});

struct Checkpoint {
  static constexpr std::uint32_t kVersion = 1;

  TrainConfig config;
  int epoch = 0;
  Networks nets;
  Optimizers opt;

  bool operator==(const Checkpoint&) const = default;
};

/// Binary layout: "CYGN", u32 version, u32 length + UTF-8 config block, then
/// one record per tensor: u32 name length, name, 4 x u32 shape, little-endian
/// float32 data. Pool contents are not stored.
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
std::string serialize_checkpoint(const Checkpoint& ckpt);

/// Validates magic, version, config, and the complete tensor table before
/// returning anything.
Checkpoint load_checkpoint(const std::filesystem::path& path);
Checkpoint deserialize_checkpoint(const std::string& bytes);

struct LossRecord {
  int epoch = 0;
  double generator_loss = 0.0;
  double discriminator_loss = 0.0;  ///< mean of the D_X and D_Y epoch means
  bool operator==(const LossRecord&) const = default;
};

/// `epoch,generator_loss,discriminator_loss` with a header row.
void write_loss_csv(const std::vector<LossRecord>& records, const std::filesystem::path& path);

struct FitOptions {
  /// Checkpoints and losses.csv go here; nothing is written when empty.
  std::filesystem::path out_dir;
  std::optional<Checkpoint> resume;
  std::ostream* log = nullptr;
  /// Optional per-step hook (epoch index, iteration, losses).
  std::function<void(int, std::size_t, const StepLosses&)> on_step;
};

struct FitResult {
  Checkpoint checkpoint;
  std::vector<LossRecord> records;
};

/// Runs epochs [resume epoch, cfg.epochs). Checkpoints every
/// cfg.checkpoint_every epochs and after the final epoch.
FitResult fit(const TrainConfig& cfg, const Dataset& dataset, const FitOptions& options = {});

std::filesystem::path checkpoint_path(const std::filesystem::path& out_dir, int epoch);

}  // namespace thermalcycle
