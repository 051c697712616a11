// Command-line front end: train, translate, eval, gradcheck, selftest, synth.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "thermalcycle/diagnostics.hpp"
#include "thermalcycle/evaluator.hpp"
#include "thermalcycle/synthetic.hpp"
#include "thermalcycle/trainer.hpp"

namespace fs = std::filesystem;
using namespace thermalcycle;

namespace {

struct TrainArgs {
  std::string data;
  std::string out;
  std::string config_file;
  std::string resume;
  bool dry_run = false;
  int epochs = 0;
  float lr = 0.0f;
  float lambda_cycle = 0.0f;
  float lambda_identity = 0.0f;
  int image_size = 0;
  int res_blocks = 0;
  int pool = 0;
  std::string loss;
  std::uint64_t seed = 0;
  int workers = 0;
  int base_filters = 0;
  std::string disc_filters;
  int checkpoint_every = 0;
  int log_every = 0;
  std::vector<std::string> set;
};

struct TranslateArgs {
  std::string ckpt;
  std::string in;
  std::string out;
  std::string direction = "ab";
};

struct EvalArgs {
  std::string ckpt;
  std::string data;
  std::string out;
  std::string direction = "ab";
};

struct SynthArgs {
  std::string out;
  synthetic::DatasetLayout layout;
};

std::string read_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read config file '" + path.string() + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return text.str();
}

std::optional<std::uint64_t> env_seed() {
  const char* raw = std::getenv("THERMALCYCLE_SEED");
  if (!raw || !*raw) return std::nullopt;
  try {
    std::size_t used = 0;
    const unsigned long long v = std::stoull(raw, &used);
    if (used != std::string(raw).size()) throw std::invalid_argument(raw);
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument(std::string("THERMALCYCLE_SEED is not an unsigned integer: '") + raw + "'");
  }
}

Direction parse_direction(const std::string& text) {
  if (text == "ab") return Direction::rgb_to_thermal;
  if (text == "ba") return Direction::thermal_to_rgb;
  throw std::invalid_argument("direction must be 'ab' or 'ba', got '" + text + "'");
}

/// Precedence: command-line flag, then config file, then THERMALCYCLE_SEED
/// (seed only), then the defaults or the resumed checkpoint's config.
TrainConfig resolve_config(const TrainArgs& a, const CLI::App& cmd, TrainConfig base) {
  if (auto s = env_seed()) base.seed = *s;
  TrainConfig cfg = a.config_file.empty() ? base : parse_config(read_file(a.config_file), base);
  auto given = [&cmd](const char* flag) { return cmd.get_option(flag)->count() > 0; };
  if (given("--epochs")) cfg.epochs = a.epochs;
  if (given("--lr")) cfg.lr = a.lr;
  if (given("--lambda-cycle")) cfg.lambda_cycle = a.lambda_cycle;
  if (given("--lambda-identity")) cfg.lambda_identity = a.lambda_identity;
  if (given("--image-size")) cfg.image_size = a.image_size;
  if (given("--res-blocks")) cfg.n_res_blocks = a.res_blocks;
  if (given("--pool")) cfg.pool_capacity = a.pool;
  if (given("--loss")) cfg.loss_mode = parse_loss_mode(a.loss);
  if (given("--seed")) cfg.seed = a.seed;
  if (given("--workers")) cfg.workers = a.workers;
  if (given("--base-filters")) cfg.base_filters = a.base_filters;
  if (given("--disc-filters")) apply_config_entry(cfg, "disc_filters", a.disc_filters);
  if (given("--checkpoint-every")) cfg.checkpoint_every = a.checkpoint_every;
  if (given("--log-every")) cfg.log_every = a.log_every;
  for (const std::string& entry : a.set) {
    const auto eq = entry.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("--set expects key=value, got '" + entry + "'");
    apply_config_entry(cfg, entry.substr(0, eq), entry.substr(eq + 1));
  }
  cfg.validate();
  return cfg;
}

int run_train(const TrainArgs& a, const CLI::App& cmd) {
  std::optional<Checkpoint> resume;
  if (!a.resume.empty()) resume = load_checkpoint(a.resume);
  const TrainConfig cfg = resolve_config(a, cmd, resume ? resume->config : TrainConfig{});
  if (a.dry_run) {
    std::cout << format_config(cfg);
    return 0;
  }
  if (a.data.empty()) throw std::invalid_argument("train: --data is required");
  if (a.out.empty()) throw std::invalid_argument("train: --out is required");
  if (!fs::is_directory(a.data)) throw std::runtime_error("data directory '" + a.data + "' does not exist");

  const Dataset dataset(training_data(cfg, a.data));
  FitOptions options;
  options.out_dir = a.out;
  options.resume = std::move(resume);
  options.log = &std::cout;
  const FitResult result = fit(cfg, dataset, options);
  std::cout << "final checkpoint: " << checkpoint_path(a.out, result.checkpoint.epoch).string() << '\n';
  return 0;
}

int run_translate(const TranslateArgs& a) {
  const Checkpoint ckpt = load_checkpoint(a.ckpt);
  const Direction dir = parse_direction(a.direction);
  std::vector<fs::path> inputs;
  if (fs::is_directory(a.in)) {
    inputs = list_images(a.in);
    if (inputs.empty()) throw std::runtime_error("no images in '" + a.in + "'");
  } else if (fs::exists(a.in)) {
    inputs.push_back(a.in);
  } else {
    throw std::runtime_error("input '" + a.in + "' does not exist");
  }
  fs::create_directories(a.out);
  for (const fs::path& path : inputs) {
    const Tensor image = geometry_normalize(load_image(path), ckpt.config.image_size, ckpt.config.crop);
    const fs::path target = fs::path(a.out) / (path.stem().string() + ".png");
    save_png(translate(ckpt, image, dir), target);
    std::cout << path.string() << " -> " << target.string() << '\n';
  }
  return 0;
}

int run_eval(const EvalArgs& a) {
  const Checkpoint ckpt = load_checkpoint(a.ckpt);
  if (!fs::is_directory(a.data)) throw std::runtime_error("data directory '" + a.data + "' does not exist");
  const Dataset dataset(evaluation_data(ckpt.config, a.data));
  const fs::path out(a.out);
  fs::create_directories(out);
  const EvalReport report = evaluate(ckpt, dataset, parse_direction(a.direction), out / "images");
  report.write_csv(out / "scores.csv");
  const std::string summary = report.summary();
  std::ofstream(out / "summary.txt") << summary;
  std::cout << summary;
  return 0;
}

void print_outcome(const diagnostics::CheckOutcome& c) {
  std::printf("%-32s %-4s value=%.3e threshold=%.3e %s\n", c.name.c_str(), c.passed ? "PASS" : "FAIL", c.value,
              c.threshold, c.detail.c_str());
}

int run_gradcheck(const std::string& op) {
  std::vector<std::string> names;
  if (op == "all") names = diagnostics::gradcheck_names();
  else names.push_back(op);
  bool ok = true;
  for (const std::string& name : names) {
    const diagnostics::CheckOutcome c = diagnostics::run_gradcheck(name);
    print_outcome(c);
    ok = ok && c.passed;
  }
  return ok ? 0 : 1;
}

int run_selftest() {
  bool ok = true;
  for (const diagnostics::CheckOutcome& c : diagnostics::run_selftest()) {
    print_outcome(c);
    ok = ok && c.passed;
  }
  std::cout << (ok ? "selftest passed\n" : "selftest FAILED\n");
  return ok ? 0 : 1;
}

std::string one_line(std::string text) {
  for (char& ch : text)
    if (ch == '\n' || ch == '\r') ch = ' ';
  return text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"thermalcycle: unpaired RGB to thermal image translation"};
  app.require_subcommand(1);

  TrainArgs train;
  CLI::App* train_cmd = app.add_subcommand("train", "Train the four networks on <data>/trainA and <data>/trainB");
  train_cmd->add_option("--data", train.data, "Dataset root holding trainA/ and trainB/");
  train_cmd->add_option("--out", train.out, "Output directory for checkpoints and losses.csv");
  train_cmd->add_option("--config", train.config_file, "key = value file applied before flags");
  train_cmd->add_option("--resume", train.resume, "Checkpoint to continue from");
  train_cmd->add_flag("--dry-run", train.dry_run, "Print the resolved configuration and exit");
  train_cmd->add_option("--epochs", train.epochs, "Training epochs (default 100)");
  train_cmd->add_option("--lr", train.lr, "Adam learning rate (default 0.001)");
  train_cmd->add_option("--lambda-cycle", train.lambda_cycle, "Cycle loss weight (default 10)");
  train_cmd->add_option("--lambda-identity", train.lambda_identity, "Identity loss weight (default 0)");
  train_cmd->add_option("--image-size", train.image_size, "Square training resolution (default 256)");
  train_cmd->add_option("--res-blocks", train.res_blocks, "Generator residual blocks (default 9)");
  train_cmd->add_option("--pool", train.pool, "Image pool capacity (default 50)");
  train_cmd->add_option("--loss", train.loss, "Adversarial loss: lsgan or log (default lsgan)")
      ->check(CLI::IsMember({"lsgan", "least_squares", "log"}));
  train_cmd->add_option("--seed", train.seed, "Run seed (fallback: THERMALCYCLE_SEED)");
  train_cmd->add_option("--workers", train.workers, "Prefetch threads (default 4)");
  train_cmd->add_option("--base-filters", train.base_filters, "Generator width (default 64)");
  train_cmd->add_option("--disc-filters", train.disc_filters, "Discriminator widths, comma separated");
  train_cmd->add_option("--checkpoint-every", train.checkpoint_every, "Epochs between checkpoints (default 10)");
  train_cmd->add_option("--log-every", train.log_every, "Iterations between log lines (default 100)");
  train_cmd->add_option("--set", train.set, "Any config key as key=value (repeatable)");

  TranslateArgs tr;
  CLI::App* tr_cmd = app.add_subcommand("translate", "Translate an image or a directory of images");
  tr_cmd->add_option("--ckpt", tr.ckpt, "Checkpoint file")->required();
  tr_cmd->add_option("--in", tr.in, "Input image or directory")->required();
  tr_cmd->add_option("--out", tr.out, "Output directory")->required();
  tr_cmd->add_option("--direction", tr.direction, "ab (RGB to thermal) or ba")->check(CLI::IsMember({"ab", "ba"}));

  EvalArgs ev;
  CLI::App* ev_cmd = app.add_subcommand("eval", "Score translations of <data>/testA against <data>/testB");
  ev_cmd->add_option("--ckpt", ev.ckpt, "Checkpoint file")->required();
  ev_cmd->add_option("--data", ev.data, "Dataset root holding testA/ and testB/")->required();
  ev_cmd->add_option("--out", ev.out, "Report directory (scores.csv, summary.txt, images/)")->required();
  ev_cmd->add_option("--direction", ev.direction, "ab (RGB to thermal) or ba")->check(CLI::IsMember({"ab", "ba"}));

  std::string op = "all";
  std::string op_positional;
  CLI::App* gc_cmd = app.add_subcommand("gradcheck", "Finite-difference gradient checks");
  gc_cmd->add_option("--op", op, "Op name or 'all'");
  gc_cmd->add_option("name", op_positional, "Op name or 'all' (same as --op)");

  CLI::App* st_cmd = app.add_subcommand("selftest", "Run the built-in oracle checks");

  SynthArgs sy;
  CLI::App* sy_cmd = app.add_subcommand("synth", "Write a procedural RGB / pseudo-thermal dataset");
  sy_cmd->add_option("--out", sy.out, "Dataset root to create")->required();
  sy_cmd->add_option("--train-count", sy.layout.train_count, "Images per training domain");
  sy_cmd->add_option("--test-count", sy.layout.test_count, "Paired test images");
  sy_cmd->add_option("--size", sy.layout.size, "Image side in pixels");
  sy_cmd->add_option("--seed", sy.layout.seed, "Scene seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (train_cmd->parsed()) return run_train(train, *train_cmd);
    if (tr_cmd->parsed()) return run_translate(tr);
    if (ev_cmd->parsed()) return run_eval(ev);
    if (gc_cmd->parsed()) return run_gradcheck(op_positional.empty() ? op : op_positional);
    if (st_cmd->parsed()) return run_selftest();
    if (sy_cmd->parsed()) {
      synthetic::write_dataset(sy.out, sy.layout);
      std::cout << "wrote dataset to " << sy.out << '\n';
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "thermalcycle: error: " << one_line(e.what()) << '\n';
    return 1;
  }
  return 2;
}
