#pragma once

#include <cstdint>
#include <filesystem>

#include "thermalcycle/tensor.hpp"

namespace thermalcycle::synthetic {

/// Procedural RGB scene in [0, 1]: a two-colour vertical gradient with a few
/// filled discs and rectangles. Colours come from a fixed curve with strictly
/// rising luminance, so the thermal rendering is invertible. Deterministic in
/// `seed`.
Tensor render_scene(std::uint64_t seed, int size);

/// Pseudo-thermal rendering: Rec. 601 luminance mapped through a fixed
/// black-purple-red-orange-yellow-white colormap.
Tensor pseudo_thermal(const Tensor& rgb);

struct DatasetLayout {
  int train_count = 200;
  int test_count = 20;
  int size = 64;
  std::uint64_t seed = 7;
};

/// Writes `<root>/{trainA,trainB,testA,testB}`. trainB renders scenes that do
/// not appear in trainA, so the training split is genuinely unpaired; testA
/// and testB are aligned by file name.
void write_dataset(const std::filesystem::path& root, const DatasetLayout& layout);

}  // namespace thermalcycle::synthetic
