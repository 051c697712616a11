#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>

#include "oracles.hpp"
#include "thermalcycle/evaluator.hpp"
#include "thermalcycle/synthetic.hpp"

using namespace thermalcycle;
using thermalcycle::testing::random_tensor;
namespace fs = std::filesystem;

namespace {

Checkpoint toy_checkpoint() {
  Checkpoint ckpt;
  ckpt.config.image_size = 16;
  ckpt.config.n_res_blocks = 1;
  ckpt.config.base_filters = 4;
  ckpt.config.disc_filters = {4, 8};
  ckpt.config.seed = 3;
  ckpt.nets = Networks::build(ckpt.config);
  return ckpt;
}

// The nine published (generator, discriminator) rows.
const std::vector<LossRecord> kPublishedTable{
    {1, 0.415, 0.547}, {2, 0.358, 0.605}, {3, 0.339, 0.631}, {4, 0.349, 0.646}, {5, 0.334, 0.662},
    {6, 0.329, 0.671}, {7, 0.328, 0.669}, {8, 0.288, 0.693}, {9, 0.246, 0.742},
};

}  // namespace

TEST(Translate, KeepsShapeAndRange) {
  const Checkpoint ckpt = toy_checkpoint();
  const Tensor in = random_tensor(Shape{1, 3, 16, 16}, 1, 0.0f, 1.0f);
  for (Direction d : {Direction::rgb_to_thermal, Direction::thermal_to_rgb}) {
    const Tensor out = translate(ckpt, in, d);
    ASSERT_EQ(out.shape(), in.shape());
    for (float v : out.data()) EXPECT_TRUE(v >= 0.0f && v <= 1.0f);
    EXPECT_EQ(translate(ckpt, in, d), out);
  }
  EXPECT_NE(translate(ckpt, in, Direction::rgb_to_thermal), translate(ckpt, in, Direction::thermal_to_rgb));
}

TEST(Translate, RejectsIndivisibleShape) {
  EXPECT_THROW(translate(toy_checkpoint(), Tensor(Shape{1, 3, 10, 16}), Direction::rgb_to_thermal), ShapeError);
}

TEST(Metrics, HandExamples) {
  const Tensor ones(Shape{1, 3, 4, 4}, 1.0f), zeros(Shape{1, 3, 4, 4});
  EXPECT_EQ(paired_mse(ones, ones), 0.0);
  EXPECT_TRUE(std::isinf(psnr(ones, ones)));
  EXPECT_EQ(paired_mse(ones, zeros), 1.0);
  EXPECT_EQ(psnr(ones, zeros), 0.0);
  EXPECT_NEAR(psnr_from_mse(0.01), 20.0, 1e-12);
  EXPECT_THROW(paired_mse(ones, Tensor(Shape{1, 3, 4, 5})), ShapeError);
}

TEST(Metrics, RandomPairMatchesDirectFormula) {
  const Tensor a = random_tensor(Shape{1, 3, 9, 7}, 2, 0.0f, 1.0f);
  const Tensor b = random_tensor(Shape{1, 3, 9, 7}, 3, 0.0f, 1.0f);
  long double acc = 0.0L;
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < 9; ++y)
      for (int x = 0; x < 7; ++x) {
        const long double d = static_cast<long double>(a.at(0, c, y, x)) - b.at(0, c, y, x);
        acc += d * d;
      }
  const double mse = static_cast<double>(acc / (3 * 9 * 7));
  EXPECT_NEAR(paired_mse(a, b), mse, 1e-7);
  EXPECT_NEAR(psnr(a, b), -10.0 * std::log10(mse), 1e-7);
}

TEST(Metrics, SymmetricAndPermutationInvariant) {
  const Tensor a = random_tensor(Shape{1, 3, 6, 6}, 4, 0.0f, 1.0f);
  const Tensor b = random_tensor(Shape{1, 3, 6, 6}, 5, 0.0f, 1.0f);
  EXPECT_EQ(paired_mse(a, b), paired_mse(b, a));
  std::vector<std::size_t> order(a.numel());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), std::mt19937_64(6));
  Tensor pa(a.shape()), pb(b.shape());
  for (std::size_t i = 0; i < order.size(); ++i) {
    pa[i] = a[order[i]];
    pb[i] = b[order[i]];
  }
  EXPECT_NEAR(paired_mse(pa, pb), paired_mse(a, b), 1e-15);
}

TEST(Trend, PublishedTableFallsAndRises) {
  const TrendSummary t = loss_trend(kPublishedTable);
  EXPECT_TRUE(t.g_decreased);
  EXPECT_TRUE(t.d_increased);
}

TEST(Trend, InsufficientOrFlatData) {
  const TrendSummary single = loss_trend({kPublishedTable.front()});
  EXPECT_FALSE(single.g_decreased);
  EXPECT_FALSE(single.d_increased);
  const TrendSummary flat = loss_trend({{1, 0.5, 0.5}, {2, 0.5, 0.5}, {3, 0.5, 0.5}});
  EXPECT_FALSE(flat.g_decreased);
  EXPECT_FALSE(flat.d_increased);
}

TEST(Trend, ExportWritesTheTable) {
  const fs::path path = fs::temp_directory_path() / "thermalcycle_trend.csv";
  const TrendSummary t = export_loss_table(kPublishedTable, path);
  EXPECT_TRUE(t.g_decreased && t.d_increased);
  EXPECT_GT(fs::file_size(path), 100u);
  fs::remove(path);
  EXPECT_THROW(export_loss_table({}, path), std::invalid_argument);
}

TEST(Evaluate, ScoresEveryHeldOutPair) {
  const fs::path root = fs::temp_directory_path() / "thermalcycle_eval";
  fs::remove_all(root);
  synthetic::write_dataset(root, {1, 3, 16, 4});
  const Checkpoint ckpt = toy_checkpoint();
  const Dataset ds(evaluation_data(ckpt.config, root));
  const EvalReport report = evaluate(ckpt, ds, Direction::rgb_to_thermal, root / "out");
  ASSERT_EQ(report.images.size(), 3u);
  double sum = 0.0;
  for (const ImageScore& s : report.images) {
    EXPECT_NEAR(s.psnr, psnr_from_mse(s.mse), 1e-12);
    EXPECT_TRUE(fs::exists(root / "out" / (s.name + ".png")));
    sum += s.mse;
  }
  EXPECT_NEAR(report.mean_mse, sum / 3.0, 1e-12);
  EXPECT_NE(report.summary().find("image_size = 16"), std::string::npos);
  fs::remove_all(root);
}

TEST(Evaluate, RequiresPairedData) {
  const fs::path root = fs::temp_directory_path() / "thermalcycle_eval_unpaired";
  fs::remove_all(root);
  synthetic::write_dataset(root, {2, 2, 16, 4});
  DatasetConfig cfg = DatasetConfig::from_root(root, "test");
  cfg.image_size = 16;
  EXPECT_THROW(evaluate(toy_checkpoint(), Dataset(cfg), Direction::rgb_to_thermal), std::invalid_argument);
  fs::remove_all(root);
}
