#include <gtest/gtest.h>
#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <string>

namespace fs = std::filesystem;

namespace {

struct CliRun {
  int status = -1;
  std::string output;
};

/// Runs the CLI with `args`, capturing stdout and stderr together.
CliRun cli(const std::string& args) {
  const std::string command = std::string(THERMALCYCLE_CLI) + " " + args + " 2>&1";
  CliRun run;
  FILE* pipe = popen(command.c_str(), "r");
  if (!pipe) return run;
  std::array<char, 4096> buf;
  while (std::size_t n = std::fread(buf.data(), 1, buf.size(), pipe)) run.output.append(buf.data(), n);
  const int raw = pclose(pipe);
  run.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  return run;
}

bool contains(const std::string& text, const std::string& part) { return text.find(part) != std::string::npos; }

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("thermalcycle_cli_" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST(Cli, GradcheckAllPasses) {
  const CliRun run = cli("gradcheck all");
  EXPECT_EQ(run.status, 0) << run.output;
  EXPECT_TRUE(contains(run.output, "gradcheck.conv2d.w"));
  EXPECT_TRUE(contains(run.output, "gradcheck.generator"));
  EXPECT_TRUE(contains(run.output, "gradcheck.discriminator"));
  EXPECT_FALSE(contains(run.output, "FAIL"));
}

TEST(Cli, GradcheckSingleOpAndUnknownOp) {
  const CliRun one = cli("gradcheck --op tanh");
  EXPECT_EQ(one.status, 0) << one.output;
  EXPECT_TRUE(contains(one.output, "gradcheck.tanh"));
  const CliRun bad = cli("gradcheck no_such_op");
  EXPECT_NE(bad.status, 0);
  EXPECT_TRUE(contains(bad.output, "no_such_op"));
}

TEST(Cli, SelftestPasses) {
  const CliRun run = cli("selftest");
  EXPECT_EQ(run.status, 0) << run.output;
}

TEST(Cli, DryRunPrintsPublishedDefaults) {
  const CliRun run = cli("train --dry-run");
  EXPECT_EQ(run.status, 0) << run.output;
  for (const char* line : {"epochs = 100\n", "batch = 1\n", "lr = 0.001\n", "lambda_cycle = 10\n",
                           "lambda_identity = 0\n", "pool_capacity = 50\n", "loss_mode = least_squares\n",
                           "image_size = 256\n", "n_res_blocks = 9\n", "workers = 4\n"}) {
    EXPECT_TRUE(contains(run.output, line)) << line << run.output;
  }
}

TEST(Cli, FlagsOverrideDefaults) {
  const CliRun run = cli("train --dry-run --epochs 7 --lr 0.0002 --set lambda_identity=0.5 --loss log");
  EXPECT_EQ(run.status, 0) << run.output;
  EXPECT_TRUE(contains(run.output, "epochs = 7\n"));
  EXPECT_TRUE(contains(run.output, "lr = 0.0002\n"));
  EXPECT_TRUE(contains(run.output, "lambda_identity = 0.5\n"));
  EXPECT_TRUE(contains(run.output, "loss_mode = log\n"));
}

TEST(Cli, MissingDataDirIsNamed) {
  const CliRun run = cli("train --data /nonexistent/thermal_data --out " + scratch("missing").string());
  EXPECT_NE(run.status, 0);
  EXPECT_TRUE(contains(run.output, "/nonexistent/thermal_data")) << run.output;
}

TEST(Cli, BadFlagsPrintUsage) {
  const CliRun run = cli("train --no-such-flag");
  EXPECT_NE(run.status, 0);
  EXPECT_TRUE(contains(run.output, "--no-such-flag")) << run.output;
  EXPECT_NE(cli("train --dry-run --loss hinge").status, 0);
  EXPECT_NE(cli("").status, 0);
  EXPECT_EQ(cli("--help").status, 0);
}

TEST(Cli, SynthTrainTranslateEvaluate) {
  const fs::path root = scratch("pipeline");
  const fs::path data = root / "data", run_dir = root / "run";
  ASSERT_EQ(cli("synth --out " + data.string() + " --train-count 2 --test-count 2 --size 16").status, 0);
  const CliRun train = cli("train --data " + data.string() + " --out " + run_dir.string() +
                        " --epochs 1 --image-size 16 --res-blocks 1 --base-filters 4 --disc-filters 4,8 --seed 3");
  ASSERT_EQ(train.status, 0) << train.output;
  const fs::path ckpt = run_dir / "checkpoint_epoch0001.cygn";
  ASSERT_TRUE(fs::exists(ckpt));
  EXPECT_TRUE(fs::exists(run_dir / "losses.csv"));

  const CliRun tr = cli("translate --ckpt " + ckpt.string() + " --in " + (data / "testA").string() + " --out " +
                     (root / "translated").string());
  EXPECT_EQ(tr.status, 0) << tr.output;
  EXPECT_TRUE(fs::exists(root / "translated" / "0000.png"));

  const CliRun ev = cli("eval --ckpt " + ckpt.string() + " --data " + data.string() + " --out " + (root / "eval").string());
  EXPECT_EQ(ev.status, 0) << ev.output;
  EXPECT_TRUE(fs::exists(root / "eval" / "scores.csv"));
  EXPECT_TRUE(contains(ev.output, "mean psnr"));
  fs::remove_all(root);
}
