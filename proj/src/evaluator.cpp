#include "thermalcycle/evaluator.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace thermalcycle {

Tensor translate(const Checkpoint& ckpt, const Tensor& image01, Direction direction) {
  const ModelParams& params = direction == Direction::rgb_to_thermal ? ckpt.nets.g : ckpt.nets.f;
  const BoundParams bound(params, nullptr);
  const Var out = generator_forward(ckpt.nets.g_spec, bound, Var::constant(to_model_range(image01)));
  return from_model_range(out.value());
}

double paired_mse(const Tensor& a, const Tensor& b) {
  require_same_shape(a.shape(), b.shape(), "paired_mse");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.numel(); ++i) {
    const double d = static_cast<double>(a[i]) - b[i];
    acc += d * d;
  }
  return acc / static_cast<double>(a.numel());
}

double psnr_from_mse(double mse) {
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / mse);
}

double psnr(const Tensor& a, const Tensor& b) { return psnr_from_mse(paired_mse(a, b)); }

DatasetConfig evaluation_data(const TrainConfig& cfg, const std::filesystem::path& root) {
  DatasetConfig dc = DatasetConfig::from_root(root, "test");
  dc.image_size = cfg.image_size;
  dc.crop = cfg.crop;
  dc.augment = {false, false, false};
  dc.pairing = Pairing::paired_by_name;
  dc.seed = cfg.seed;
  dc.workers = 0;
  return dc;
}

EvalReport evaluate(const Checkpoint& ckpt, const Dataset& dataset, Direction direction,
                    const std::filesystem::path& image_out_dir) {
  if (dataset.config().pairing != Pairing::paired_by_name) {
    throw std::invalid_argument("evaluate: dataset must be paired by name");
  }
  if (!image_out_dir.empty()) std::filesystem::create_directories(image_out_dir);
  const Domain source = direction == Direction::rgb_to_thermal ? Domain::x_rgb : Domain::y_thermal;
  const Domain target = direction == Direction::rgb_to_thermal ? Domain::y_thermal : Domain::x_rgb;

  EvalReport report;
  report.config = format_config(ckpt.config);
  const std::size_t count = dataset.rgb_files().size();
  double mse_sum = 0.0;
  double psnr_sum = 0.0;
  std::size_t finite = 0;
  for (std::size_t i = 0; i < count; ++i) {
    const Sample in = dataset.load_sample(source, i, 0, i);
    const Sample ref = dataset.load_sample(target, i, 0, i);
    const Tensor out = translate(ckpt, from_model_range(in.image), direction);
    const Tensor truth = from_model_range(ref.image);
    ImageScore score{in.source.stem().string(), paired_mse(out, truth), 0.0};
    score.psnr = psnr_from_mse(score.mse);
    mse_sum += score.mse;
    if (std::isfinite(score.psnr)) {
      psnr_sum += score.psnr;
      ++finite;
    }
    if (!image_out_dir.empty()) save_png(out, image_out_dir / (score.name + ".png"));
    report.images.push_back(std::move(score));
  }
  report.mean_mse = count ? mse_sum / static_cast<double>(count) : 0.0;
  report.mean_psnr = finite ? psnr_sum / static_cast<double>(finite) : std::numeric_limits<double>::infinity();
  return report;
}

void EvalReport::write_csv(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write report '" + path.string() + "'");
  out << "name,mse,psnr\n" << std::setprecision(9);
  for (const ImageScore& s : images) {
    out << s.name << ',' << s.mse << ',';
    if (std::isfinite(s.psnr)) out << s.psnr; else out << "inf";
    out << '\n';
  }
  if (!out) throw std::runtime_error("write failed for report '" + path.string() + "'");
}

std::string EvalReport::summary() const {
  std::ostringstream out;
  out << "images: " << images.size() << '\n'
      << std::setprecision(6) << "mean mse: " << mean_mse << '\n'
      << "mean psnr (dB): " << mean_psnr << '\n'
      << "config:\n" << config;
  return out.str();
}

TrendSummary loss_trend(const std::vector<LossRecord>& records) {
  TrendSummary t;
  if (records.size() < 2) return t;
  t.g_decreased = records.back().generator_loss < records.front().generator_loss;
  t.d_increased = records.back().discriminator_loss > records.front().discriminator_loss;
  return t;
}

TrendSummary export_loss_table(const std::vector<LossRecord>& records, const std::filesystem::path& path) {
  if (records.empty()) throw std::invalid_argument("export_loss_table: no records");
  write_loss_csv(records, path);
  return loss_trend(records);
}

}  // namespace thermalcycle
