#include "thermalcycle/trainer.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "thermalcycle/seeding.hpp"

namespace thermalcycle {

namespace fs = std::filesystem;

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

// ---------------------------------------------------------------------------
// Configuration text
// ---------------------------------------------------------------------------

namespace {

std::string format_float(float v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general);
  return std::string(buf, res.ptr);
}

std::string format_ints(const std::vector<int>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(values[i]);
  }
  return out;
}

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const char* end = value.data() + value.size();
  auto res = std::from_chars(value.data(), end, out);
  if (res.ec != std::errc() || res.ptr != end) {
    throw std::invalid_argument("config key '" + key + "': cannot parse '" + value + "'");
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw std::invalid_argument("config key '" + key + "': expected true/false, got '" + value + "'");
}

std::vector<int> parse_ints(const std::string& key, const std::string& value) {
  std::vector<int> out;
  std::stringstream in(value);
  std::string item;
  while (std::getline(in, item, ',')) out.push_back(parse_number<int>(key, trim(item)));
  if (out.empty()) throw std::invalid_argument("config key '" + key + "': empty list");
  return out;
}

// Splits "key = value"; returns false for blank and comment lines.
bool split_line(const std::string& raw, std::string& key, std::string& value) {
  const std::string line = trim(raw);
  if (line.empty() || line[0] == '#') return false;
  const auto eq = line.find('=');
  if (eq == std::string::npos) throw std::invalid_argument("config line without '=': '" + line + "'");
  key = trim(line.substr(0, eq));
  value = trim(line.substr(eq + 1));
  return true;
}

}  // namespace

std::string format_config(const TrainConfig& cfg) {
  std::ostringstream out;
  out << "epochs = " << cfg.epochs << '\n'
      << "batch = " << cfg.batch << '\n'
      << "lr = " << format_float(cfg.lr) << '\n'
      << "beta1 = " << format_float(cfg.beta1) << '\n'
      << "beta2 = " << format_float(cfg.beta2) << '\n'
      << "adam_eps = " << format_float(cfg.adam_eps) << '\n'
      << "lambda_cycle = " << format_float(cfg.lambda_cycle) << '\n'
      << "lambda_identity = " << format_float(cfg.lambda_identity) << '\n'
      << "pool_capacity = " << cfg.pool_capacity << '\n'
      << "loss_mode = " << to_string(cfg.loss_mode) << '\n'
      << "image_size = " << cfg.image_size << '\n'
      << "n_res_blocks = " << cfg.n_res_blocks << '\n'
      << "base_filters = " << cfg.base_filters << '\n'
      << "disc_filters = " << format_ints(cfg.disc_filters) << '\n'
      << "seed = " << cfg.seed << '\n'
      << "checkpoint_every = " << cfg.checkpoint_every << '\n'
      << "log_every = " << cfg.log_every << '\n'
      << "workers = " << cfg.workers << '\n'
      << "crop = " << (cfg.crop == CropMode::center_square ? "center_square" : "none") << '\n'
      << "hflip = " << (cfg.augment.hflip ? "true" : "false") << '\n'
      << "vflip = " << (cfg.augment.vflip ? "true" : "false") << '\n'
      << "rotate = " << (cfg.augment.rotate ? "true" : "false") << '\n';
  return out.str();
}

void apply_config_entry(TrainConfig& cfg, const std::string& key, const std::string& value) {
  if (key == "epochs") cfg.epochs = parse_number<int>(key, value);
  else if (key == "batch") cfg.batch = parse_number<int>(key, value);
  else if (key == "lr") cfg.lr = parse_number<float>(key, value);
  else if (key == "beta1") cfg.beta1 = parse_number<float>(key, value);
  else if (key == "beta2") cfg.beta2 = parse_number<float>(key, value);
  else if (key == "adam_eps") cfg.adam_eps = parse_number<float>(key, value);
  else if (key == "lambda_cycle") cfg.lambda_cycle = parse_number<float>(key, value);
  else if (key == "lambda_identity") cfg.lambda_identity = parse_number<float>(key, value);
  else if (key == "pool_capacity") cfg.pool_capacity = parse_number<int>(key, value);
  else if (key == "loss_mode") cfg.loss_mode = parse_loss_mode(value);
  else if (key == "image_size") cfg.image_size = parse_number<int>(key, value);
  else if (key == "n_res_blocks") cfg.n_res_blocks = parse_number<int>(key, value);
  else if (key == "base_filters") cfg.base_filters = parse_number<int>(key, value);
  else if (key == "disc_filters") cfg.disc_filters = parse_ints(key, value);
  else if (key == "seed") cfg.seed = parse_number<std::uint64_t>(key, value);
  else if (key == "checkpoint_every") cfg.checkpoint_every = parse_number<int>(key, value);
  else if (key == "log_every") cfg.log_every = parse_number<int>(key, value);
  else if (key == "workers") cfg.workers = parse_number<int>(key, value);
  else if (key == "crop") {
    if (value == "center_square") cfg.crop = CropMode::center_square;
    else if (value == "none") cfg.crop = CropMode::none;
    else throw std::invalid_argument("config key 'crop': expected center_square or none, got '" + value + "'");
  }
  else if (key == "hflip") cfg.augment.hflip = parse_bool(key, value);
  else if (key == "vflip") cfg.augment.vflip = parse_bool(key, value);
  else if (key == "rotate") cfg.augment.rotate = parse_bool(key, value);
  else throw std::invalid_argument("unknown config key '" + key + "'");
}

TrainConfig parse_config(const std::string& text, TrainConfig base) {
  std::istringstream in(text);
  std::string line;
  std::string key;
  std::string value;
  while (std::getline(in, line)) {
    if (split_line(line, key, value)) apply_config_entry(base, key, value);
  }
  return base;
}

void TrainConfig::validate() const {
  auto positive = [](int v, const char* name) {
    if (v < 1) throw std::invalid_argument(std::string(name) + " must be positive");
  };
  if (epochs < 0) throw std::invalid_argument("epochs must be non-negative");
  if (batch != 1) throw std::invalid_argument("batch must be 1 (instance normalization regime)");
  if (pool_capacity < 0) throw std::invalid_argument("pool_capacity must be non-negative");
  if (lambda_cycle < 0.0f || lambda_identity < 0.0f) throw std::invalid_argument("loss weights must be non-negative");
  positive(checkpoint_every, "checkpoint_every");
  positive(log_every, "log_every");
  if (workers < 0) throw std::invalid_argument("workers must be non-negative");
  adam().validate();
  generator_spec().validate();
  discriminator_spec().validate();
}

GeneratorSpec TrainConfig::generator_spec() const {
  GeneratorSpec spec;
  spec.base_filters = base_filters;
  spec.n_res_blocks = n_res_blocks;
  spec.image_size = image_size;
  return spec;
}

DiscriminatorSpec TrainConfig::discriminator_spec() const {
  DiscriminatorSpec spec;
  spec.filters = disc_filters;
  // Stride 2 on every layer except the last hidden one and the output.
  spec.strides.assign(disc_filters.size() + 1, 2);
  spec.strides[spec.strides.size() - 1] = 1;
  if (disc_filters.size() >= 2) spec.strides[spec.strides.size() - 2] = 1;
  return spec;
}

AdamHyper TrainConfig::adam() const { return {lr, beta1, beta2, adam_eps}; }

// ---------------------------------------------------------------------------
// Networks, pools, single step
// ---------------------------------------------------------------------------

namespace {

enum : std::uint64_t { kSeedG = 11, kSeedF = 12, kSeedDX = 13, kSeedDY = 14, kSeedPoolX = 21, kSeedPoolY = 22 };

void require_finite(float value, const char* name) {
  if (!std::isfinite(value)) throw TrainingDiverged(std::string("non-finite ") + name + " loss");
}

float discriminator_update(ModelParams& params, const DiscriminatorSpec& spec, AdamState& state,
                           const AdamHyper& hyper, const Tensor& real, const Tensor& pooled_fake, LossMode mode,
                           bool apply, const char* name) {
  Tape tape;
  const BoundParams bound(params, apply ? &tape : nullptr);
  const Var d_real = discriminator_forward(spec, bound, Var::constant(real));
  const Var d_fake = discriminator_forward(spec, bound, Var::constant(pooled_fake));
  const Var loss = adversarial_d_loss(d_real, d_fake, mode);
  const float value = loss.value().item();
  require_finite(value, name);
  if (apply) adam_step(params, bound.gradients(tape.backward(loss)), state, hyper);
  return value;
}

}  // namespace

DatasetConfig training_data(const TrainConfig& cfg, const fs::path& root) {
  DatasetConfig dc = DatasetConfig::from_root(root, "train");
  dc.image_size = cfg.image_size;
  dc.crop = cfg.crop;
  dc.augment = cfg.augment;
  dc.pairing = Pairing::unpaired;
  dc.seed = cfg.seed;
  dc.workers = cfg.workers;
  return dc;
}

Networks Networks::build(const TrainConfig& cfg) {
  Networks nets;
  nets.g_spec = cfg.generator_spec();
  nets.d_spec = cfg.discriminator_spec();
  nets.g = build_generator(nets.g_spec, derive_seed(cfg.seed, {kSeedG}));
  nets.f = build_generator(nets.g_spec, derive_seed(cfg.seed, {kSeedF}));
  nets.dx = build_discriminator(nets.d_spec, derive_seed(cfg.seed, {kSeedDX}));
  nets.dy = build_discriminator(nets.d_spec, derive_seed(cfg.seed, {kSeedDY}));
  return nets;
}

Pools Pools::create(const TrainConfig& cfg) {
  const auto capacity = static_cast<std::size_t>(cfg.pool_capacity);
  return Pools{ImagePool(capacity, derive_seed(cfg.seed, {kSeedPoolX})),
               ImagePool(capacity, derive_seed(cfg.seed, {kSeedPoolY}))};
}

StepLosses train_step(Networks& nets, Pools& pools, Optimizers& opt, const Tensor& x, const Tensor& y,
                      const TrainConfig& cfg, const StepControl& control) {
  if (cfg.batch != 1 || x.shape().n != 1 || y.shape().n != 1) {
    throw std::invalid_argument("train_step: batch size must be 1");
  }
  const AdamHyper hyper = cfg.adam();
  const LossMode mode = cfg.loss_mode;
  StepLosses out;
  Tensor fake_x;
  Tensor fake_y;

  {
    Tape tape;
    Tape* track = control.update_generators ? &tape : nullptr;
    const BoundParams g(nets.g, track);
    const BoundParams f(nets.f, track);
    const BoundParams dx(nets.dx, nullptr);
    const BoundParams dy(nets.dy, nullptr);
    const Var real_x = Var::constant(x);
    const Var real_y = Var::constant(y);

    const Var gen_y = generator_forward(nets.g_spec, g, real_x);
    const Var gen_x = generator_forward(nets.g_spec, f, real_y);
    const Var rec_x = generator_forward(nets.g_spec, f, gen_y);
    const Var rec_y = generator_forward(nets.g_spec, g, gen_x);

    const Var adv_xy = adversarial_g_loss(discriminator_forward(nets.d_spec, dy, gen_y), mode);
    const Var adv_yx = adversarial_g_loss(discriminator_forward(nets.d_spec, dx, gen_x), mode);
    const Var cyc = cycle_loss(real_x, rec_x, real_y, rec_y);
    Var idt;
    if (cfg.lambda_identity != 0.0f) {
      idt = identity_loss(real_y, generator_forward(nets.g_spec, g, real_y), real_x,
                          generator_forward(nets.g_spec, f, real_x));
    }
    const Var total = total_generator_objective(adv_xy, adv_yx, cyc, idt, cfg.weights());
    out.g_loss = total.value().item();
    require_finite(out.g_loss, "generator");
    if (control.cycle_loss_out) *control.cycle_loss_out = cyc.value().item();

    if (control.update_generators) {
      const Gradients grads = tape.backward(total);
      const GradMap grad_g = g.gradients(grads);
      const GradMap grad_f = f.gradients(grads);
      const ParamGroup groups[] = {{"G/", &nets.g, &grad_g}, {"F/", &nets.f, &grad_f}};
      adam_step(groups, opt.gen, hyper);
      if (control.on_update) control.on_update("generators");
    }
    fake_x = gen_x.value();
    fake_y = gen_y.value();
  }

  const bool apply_d = control.update_discriminators;
  out.d_x_loss = discriminator_update(nets.dx, nets.d_spec, opt.dx, hyper, x, pools.x.query(fake_x), mode, apply_d,
                                      "discriminator X");
  if (apply_d && control.on_update) control.on_update("d_x");
  out.d_y_loss = discriminator_update(nets.dy, nets.d_spec, opt.dy, hyper, y, pools.y.query(fake_y), mode, apply_d,
                                      "discriminator Y");
  if (apply_d && control.on_update) control.on_update("d_y");
  return out;
}

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------

namespace {

constexpr char kMagic[4] = {'C', 'Y', 'G', 'N'};

void put_u32(std::string& out, std::uint32_t v) {
  char b[4];
  std::memcpy(b, &v, 4);
  out.append(b, 4);
}

void put_tensor(std::string& out, const std::string& name, const Tensor& t) {
  put_u32(out, static_cast<std::uint32_t>(name.size()));
  out += name;
  const Shape s = t.shape();
  for (int d : {s.n, s.c, s.h, s.w}) put_u32(out, static_cast<std::uint32_t>(d));
  out.append(reinterpret_cast<const char*>(t.raw()), t.numel() * sizeof(float));
}

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  bool at_end() const { return pos_ == bytes_.size(); }

  const char* take(std::size_t n, const char* what) {
    if (bytes_.size() - pos_ < n) {
      throw CheckpointError(std::string("checkpoint truncated while reading ") + what);
    }
    const char* p = bytes_.data() + pos_;
    pos_ += n;
    return p;
  }

  std::uint32_t u32(const char* what) {
    std::uint32_t v;
    std::memcpy(&v, take(4, what), 4);
    return v;
  }

 private:
  const std::string& bytes_;
  std::size_t pos_ = 0;
};

struct Slot {
  Tensor* tensor;
  bool filled = false;
};

// Visits every tensor a checkpoint carries, in a fixed order, with its record name.
template <typename Ckpt, typename Fn>
void for_each_tensor(Ckpt& ckpt, Fn&& fn) {
  auto model = [&](const char* prefix, auto& params) {
    for (auto& [name, t] : params.tensors) fn(std::string(prefix) + name, t);
  };
  model("G/", ckpt.nets.g);
  model("F/", ckpt.nets.f);
  model("DX/", ckpt.nets.dx);
  model("DY/", ckpt.nets.dy);
  auto moments = [&](const char* tag, auto& state) {
    for (auto& [name, mom] : state.moments) {
      fn(std::string("adam.") + tag + ".m/" + name, mom.m);
      fn(std::string("adam.") + tag + ".v/" + name, mom.v);
    }
  };
  moments("gen", ckpt.opt.gen);
  moments("dx", ckpt.opt.dx);
  moments("dy", ckpt.opt.dy);
}

// Creates zero moments for every parameter the optimizer has already stepped.
void expect_moments(AdamState& state, const std::vector<std::pair<std::string, const ModelParams*>>& groups) {
  if (state.step == 0) return;
  for (const auto& [prefix, params] : groups) {
    for (const auto& [name, t] : params->tensors) {
      state.moments.emplace(prefix + name, AdamMoments{Tensor(t.shape()), Tensor(t.shape())});
    }
  }
}

}  // namespace

std::string serialize_checkpoint(const Checkpoint& ckpt) {
  std::string text = format_config(ckpt.config);
  text += "epoch = " + std::to_string(ckpt.epoch) + '\n';
  text += "adam.gen.step = " + std::to_string(ckpt.opt.gen.step) + '\n';
  text += "adam.dx.step = " + std::to_string(ckpt.opt.dx.step) + '\n';
  text += "adam.dy.step = " + std::to_string(ckpt.opt.dy.step) + '\n';

  std::string out(kMagic, 4);
  put_u32(out, Checkpoint::kVersion);
  put_u32(out, static_cast<std::uint32_t>(text.size()));
  out += text;

  for_each_tensor(ckpt, [&](const std::string& name, const Tensor& t) { put_tensor(out, name, t); });
  return out;
}

void save_checkpoint(const Checkpoint& ckpt, const fs::path& path) {
  const std::string bytes = serialize_checkpoint(ckpt);
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write checkpoint '" + tmp.string() + "'");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("write failed for checkpoint '" + tmp.string() + "'");
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw std::runtime_error("cannot move checkpoint into '" + path.string() + "': " + ec.message());
}

Checkpoint deserialize_checkpoint(const std::string& bytes) {
  Reader in(bytes);
  if (std::memcmp(in.take(4, "magic"), kMagic, 4) != 0) throw CheckpointError("bad checkpoint magic (expected CYGN)");
  const std::uint32_t version = in.u32("version");
  if (version != Checkpoint::kVersion) {
    throw CheckpointError("unsupported checkpoint version " + std::to_string(version) + " (expected " +
                          std::to_string(Checkpoint::kVersion) + ")");
  }
  const std::uint32_t text_len = in.u32("config length");
  const std::string text(in.take(text_len, "config block"), text_len);

  Checkpoint ckpt;
  std::istringstream lines(text);
  std::string line;
  std::string key;
  std::string value;
  std::set<std::string> meta_seen;
  try {
    while (std::getline(lines, line)) {
      if (!split_line(line, key, value)) continue;
      if (key == "epoch") ckpt.epoch = parse_number<int>(key, value);
      else if (key == "adam.gen.step") ckpt.opt.gen.step = parse_number<std::int64_t>(key, value);
      else if (key == "adam.dx.step") ckpt.opt.dx.step = parse_number<std::int64_t>(key, value);
      else if (key == "adam.dy.step") ckpt.opt.dy.step = parse_number<std::int64_t>(key, value);
      else {
        apply_config_entry(ckpt.config, key, value);
        continue;
      }
      meta_seen.insert(key);
    }
    ckpt.config.validate();
  } catch (const std::invalid_argument& e) {
    throw CheckpointError(std::string("bad checkpoint config: ") + e.what());
  }
  if (meta_seen.size() != 4) throw CheckpointError("checkpoint config is missing epoch or optimizer step fields");

  ckpt.nets = Networks::build(ckpt.config);
  expect_moments(ckpt.opt.gen, {{"G/", &ckpt.nets.g}, {"F/", &ckpt.nets.f}});
  expect_moments(ckpt.opt.dx, {{"", &ckpt.nets.dx}});
  expect_moments(ckpt.opt.dy, {{"", &ckpt.nets.dy}});

  std::map<std::string, Slot> table;
  for_each_tensor(ckpt, [&](const std::string& name, Tensor& t) { table.emplace(name, Slot{&t}); });
  while (!in.at_end()) {
    const std::uint32_t name_len = in.u32("tensor name length");
    const std::string name(in.take(name_len, "tensor name"), name_len);
    Shape shape;
    shape.n = static_cast<int>(in.u32("tensor shape"));
    shape.c = static_cast<int>(in.u32("tensor shape"));
    shape.h = static_cast<int>(in.u32("tensor shape"));
    shape.w = static_cast<int>(in.u32("tensor shape"));
    auto it = table.find(name);
    if (it == table.end()) throw CheckpointError("unexpected tensor '" + name + "' in checkpoint");
    if (it->second.filled) throw CheckpointError("duplicate tensor '" + name + "' in checkpoint");
    if (!(it->second.tensor->shape() == shape)) {
      throw CheckpointError("tensor '" + name + "' has shape " + shape.str() + ", expected " +
                            it->second.tensor->shape().str());
    }
    Tensor& dst = *it->second.tensor;
    std::memcpy(dst.raw(), in.take(dst.numel() * sizeof(float), ("data of '" + name + "'").c_str()),
                dst.numel() * sizeof(float));
    it->second.filled = true;
  }
  for (const auto& [name, slot] : table) {
    if (!slot.filled) throw CheckpointError("checkpoint truncated: tensor '" + name + "' missing");
  }
  return ckpt;
}

Checkpoint load_checkpoint(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return deserialize_checkpoint(buf.str());
  } catch (const CheckpointError& e) {
    throw CheckpointError(path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Training loop
// ---------------------------------------------------------------------------

void write_loss_csv(const std::vector<LossRecord>& records, const fs::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write loss table '" + path.string() + "'");
  out << "epoch,generator_loss,discriminator_loss\n";
  out << std::setprecision(9);
  for (const LossRecord& r : records) out << r.epoch << ',' << r.generator_loss << ',' << r.discriminator_loss << '\n';
  if (!out) throw std::runtime_error("write failed for loss table '" + path.string() + "'");
}

fs::path checkpoint_path(const fs::path& out_dir, int epoch) {
  std::ostringstream name;
  name << "checkpoint_epoch" << std::setw(4) << std::setfill('0') << epoch << ".cygn";
  return out_dir / name.str();
}

FitResult fit(const TrainConfig& cfg, const Dataset& dataset, const FitOptions& options) {
  cfg.validate();
  if (dataset.config().image_size != cfg.image_size) {
    throw std::invalid_argument("dataset image_size " + std::to_string(dataset.config().image_size) +
                                " does not match training image_size " + std::to_string(cfg.image_size));
  }

  FitResult result;
  Checkpoint& ckpt = result.checkpoint;
  if (options.resume) {
    ckpt = *options.resume;
    if (!(ckpt.nets.g_spec.base_filters == cfg.base_filters && ckpt.nets.g_spec.n_res_blocks == cfg.n_res_blocks &&
          ckpt.nets.d_spec.filters == cfg.disc_filters)) {
      throw std::invalid_argument("resume checkpoint architecture does not match the training config");
    }
    ckpt.config = cfg;
  } else {
    ckpt.config = cfg;
    ckpt.nets = Networks::build(cfg);
  }
  if (!options.out_dir.empty()) fs::create_directories(options.out_dir);

  Pools pools = Pools::create(cfg);
  for (int epoch = ckpt.epoch; epoch < cfg.epochs; ++epoch) {
    EpochStream stream(dataset, static_cast<std::uint64_t>(epoch));
    double g_sum = 0.0;
    double dx_sum = 0.0;
    double dy_sum = 0.0;
    std::size_t iteration = 0;
    while (auto item = stream.next()) {
      StepLosses losses;
      try {
        losses = train_step(ckpt.nets, pools, ckpt.opt, item->first.image, item->second.image, cfg);
      } catch (const TrainingDiverged& e) {
        throw TrainingDiverged(std::string(e.what()) + " at epoch " + std::to_string(epoch + 1) + ", iteration " +
                               std::to_string(iteration + 1));
      }
      g_sum += losses.g_loss;
      dx_sum += losses.d_x_loss;
      dy_sum += losses.d_y_loss;
      ++iteration;
      if (options.on_step) options.on_step(epoch, iteration, losses);
      if (options.log && iteration % static_cast<std::size_t>(cfg.log_every) == 0) {
        *options.log << "epoch " << epoch + 1 << " iter " << iteration << "/" << stream.size()
                     << " g=" << losses.g_loss << " d_x=" << losses.d_x_loss << " d_y=" << losses.d_y_loss << '\n';
      }
    }
    const double n = static_cast<double>(iteration);
    result.records.push_back(LossRecord{epoch + 1, g_sum / n, 0.5 * (dx_sum / n + dy_sum / n)});
    ckpt.epoch = epoch + 1;
    if (options.log) {
      *options.log << "epoch " << epoch + 1 << " generator_loss=" << result.records.back().generator_loss
                   << " discriminator_loss=" << result.records.back().discriminator_loss << std::endl;
    }
    if (!options.out_dir.empty()) {
      write_loss_csv(result.records, options.out_dir / "losses.csv");
      if (ckpt.epoch % cfg.checkpoint_every == 0 || ckpt.epoch == cfg.epochs) {
        save_checkpoint(ckpt, checkpoint_path(options.out_dir, ckpt.epoch));
      }
    }
  }
  return result;
}

}  // namespace thermalcycle
