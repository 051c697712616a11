#pragma once

#include <filesystem>
#include <limits>
#include <string>
#include <vector>

#include "thermalcycle/trainer.hpp"

namespace thermalcycle {

enum class Direction { rgb_to_thermal, thermal_to_rgb };

/// Runs G (rgb_to_thermal) or F (thermal_to_rgb) on a [1, 3, H, W] image in
/// [0, 1] and returns the translation in [0, 1].
Tensor translate(const Checkpoint& ckpt, const Tensor& image01, Direction direction);

double paired_mse(const Tensor& a, const Tensor& b);

/// 10 log10(1 / mse) for images in [0, 1]; +infinity when mse == 0.
double psnr(const Tensor& a, const Tensor& b);
double psnr_from_mse(double mse);

struct ImageScore {
  std::string name;
  double mse = 0.0;
  double psnr = 0.0;
};

struct EvalReport {
  std::vector<ImageScore> images;
  double mean_mse = 0.0;
  double mean_psnr = 0.0;  ///< mean over images with finite PSNR
  std::string config;      ///< config block of the evaluated checkpoint

  void write_csv(const std::filesystem::path& path) const;
  std::string summary() const;
};

/// `<root>/testA` + `<root>/testB` paired by name, geometry-normalized like
/// training data but never augmented.
DatasetConfig evaluation_data(const TrainConfig& cfg, const std::filesystem::path& root);

/// Translates every image of `dataset` (paired by name, no augmentation
/// expected) and scores it against its counterpart in the other domain.
EvalReport evaluate(const Checkpoint& ckpt, const Dataset& dataset, Direction direction,
                    const std::filesystem::path& image_out_dir = {});

struct TrendSummary {
  bool g_decreased = false;
  bool d_increased = false;
};

/// Last-vs-first comparison; both flags are false with fewer than two records.
TrendSummary loss_trend(const std::vector<LossRecord>& records);

/// Writes the loss table CSV and returns its trend summary.
TrendSummary export_loss_table(const std::vector<LossRecord>& records, const std::filesystem::path& path);

}  // namespace thermalcycle
