#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "pcm/checkpoint.hpp"
#include "pcm/cli/commands.hpp"
#include "pcm/cli/manifest.hpp"
#include "pcm/cli/run_config.hpp"
#include "pcm/error.hpp"
#include "pcm/mask.hpp"
#include "pcm/text.hpp"
#include "support.hpp"

namespace pcm::cli {
namespace {

namespace fs = std::filesystem;

struct Result {
  int status = 0;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int status = run_cli(args, out, err);
  return {status, out.str(), err.str()};
}

void write(const fs::path& path, const std::string& text) { std::ofstream(path) << text; }

constexpr const char* kSpec =
    "[synthetic]\n"
    "mechanism = sparse_linear\n"
    "d = 8\n"
    "n_samples = 1200\n"
    "driver_set = 1,5\n"
    "seed = 3\n";

constexpr const char* kTraining =
    "[training]\n"
    "lambda = 1\n"
    "epochs_premask = 2\n"
    "epochs_mask = 2\n"
    "train_batch = 64\n"
    "hidden = 8,8\n"
    "n_thresholds = 4\n";

TEST(RunConfig, HiddenSpellings) {
  EXPECT_EQ(parse_hidden("256x9"), std::vector<std::size_t>(9, 256));
  EXPECT_EQ(parse_hidden("64, 32"), (std::vector<std::size_t>{64, 32}));
  EXPECT_TRUE(parse_hidden("none").empty());
  EXPECT_EQ(format_hidden(std::vector<std::size_t>(9, 256)), "256x9");
  EXPECT_EQ(format_hidden({64, 32}), "64,32");
  EXPECT_THROW(parse_hidden("0x3"), Error);
  EXPECT_THROW(parse_hidden("abc"), Error);
}

TEST(RunConfig, RelativeDataPathsResolveAgainstConfigDir) {
  const auto dir = testing::fresh_dir("cli_cfg_paths");
  fs::create_directories(dir / "d");
  for (const char* f : {"train.bin", "val.bin", "test.bin"}) write(dir / "d" / f, "x");
  write(dir / "run.ini", std::string("[data]\ntrain = d/train.bin\nval = d/val.bin\ntest = d/test.bin\n") +
                             "[output]\ndir = " + (dir / "out").string() + "\n");
  const auto cfg = load_run_config(dir / "run.ini");
  EXPECT_EQ(*cfg.train_path, dir / "d" / "train.bin");
  EXPECT_EQ(cfg.output_dir, dir / "out");
  EXPECT_EQ(cfg.training.lambda, 0.001);
  EXPECT_EQ(cfg.training.n_thresholds, 20u);
}

TEST(RunConfig, BadValuesNameTheKey) {
  const auto dir = testing::fresh_dir("cli_cfg_bad");
  write(dir / "run.ini", std::string(kSpec) + "[training]\nlambda = -1\n");
  try {
    load_run_config(dir / "run.ini").validate();
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_EQ(e.field(), "lambda");
  }
}

TEST(RunConfig, IniRoundTrip) {
  const auto dir = testing::fresh_dir("cli_cfg_roundtrip");
  write(dir / "run.ini", std::string(kSpec) + kTraining + "[output]\ndir = " + (dir / "o").string() + "\n");
  const auto cfg = load_run_config(dir / "run.ini");
  write(dir / "again.ini", to_ini(cfg));
  EXPECT_EQ(to_ini(load_run_config(dir / "again.ini")), to_ini(cfg));
}

TEST(Manifest, RoundTripAndIntegrity) {
  const auto dir = testing::fresh_dir("cli_manifest");
  write(dir / "a.txt", "hello");
  RunManifest m;
  m.version = "1";
  m.command = "train";
  m.seed = 9;
  m.stage("premask").status = StageStatus::kCompleted;
  m.add_artifact(dir, "premask", "a", dir / "a.txt");
  EXPECT_EQ(m.find_artifact("a")->sha256, "2cf24dba5fb0a30e26e83b2ac5b9e29e1b161e5c1fa7425e73043362938b9824");
  EXPECT_EQ(m.find_artifact("a")->bytes, 5u);
  save_manifest(dir / kManifestName, m);
  const auto back = load_manifest(dir / kManifestName);
  EXPECT_EQ(back.seed, 9u);
  ASSERT_NE(back.find_stage("premask"), nullptr);
  EXPECT_EQ(back.find_stage("premask")->status, StageStatus::kCompleted);
  EXPECT_TRUE(back.stage_intact(dir, "premask"));
  write(dir / "a.txt", "hellO");
  EXPECT_FALSE(back.stage_intact(dir, "premask"));
}

TEST(Cli, HelpAndUnknownCommand) {
  EXPECT_EQ(run({"--help"}).status, 0);
  const auto r = run({"bogus"});
  EXPECT_EQ(r.status, 2);
  EXPECT_EQ(r.err.rfind("pcmask: error[", 0), 0u) << r.err;
}

TEST(Cli, GenDataIsDeterministic) {
  const auto dir = testing::fresh_dir("cli_gen");
  write(dir / "spec.ini", kSpec);
  ASSERT_EQ(run({"gen-data", (dir / "spec.ini").string(), "-o", (dir / "a").string()}).status, 0);
  ASSERT_EQ(run({"gen-data", (dir / "spec.ini").string(), "-o", (dir / "b").string()}).status, 0);
  for (const char* f : {"train.bin", "val.bin", "test.bin", "truth.txt", "schema.ini"}) {
    EXPECT_EQ(testing::read_file(dir / "a" / f), testing::read_file(dir / "b" / f)) << f;
  }
  ASSERT_EQ(run({"gen-data", (dir / "spec.ini").string(), "-o", (dir / "c").string(), "--seed", "4"}).status, 0);
  EXPECT_NE(testing::read_file(dir / "a" / "train.bin"), testing::read_file(dir / "c" / "train.bin"));
}

TEST(Cli, GenDataEmptyDriverSetNamesTheField) {
  const auto dir = testing::fresh_dir("cli_gen_empty");
  write(dir / "spec.ini", "[synthetic]\nmechanism = sparse_linear\nd = 8\ndriver_set =\n");
  const auto r = run({"gen-data", (dir / "spec.ini").string(), "-o", (dir / "a").string()});
  EXPECT_EQ(r.status, 3);
  EXPECT_NE(r.err.find("driver_set"), std::string::npos) << r.err;
  EXPECT_EQ(std::count(r.err.begin(), r.err.end(), '\n'), 1);
}

TEST(Cli, PrintConfigShowsDefaults) {
  const auto r = run({"train", "--print-config"});
  // Without a config file there is no data, so printing still works but
  // training would fail validation.
  EXPECT_NE(r.out.find("lambda = 0.001"), std::string::npos) << r.out << r.err;
  EXPECT_NE(r.out.find("hidden = 256x9"), std::string::npos);
  EXPECT_NE(r.out.find("n_thresholds = 20"), std::string::npos);
}

class TrainedRun : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new fs::path(testing::fresh_dir("cli_train"));
    write(*dir_ / "run.ini", std::string(kSpec) + kTraining);
    const auto r = run({"train", (*dir_ / "run.ini").string(), "-o", (*dir_ / "run").string(), "--lambda", "0.5"});
    ASSERT_EQ(r.status, 0) << r.err;
  }
  static void TearDownTestSuite() { delete dir_; }
  static fs::path root() { return *dir_ / "run"; }
  static fs::path* dir_;
};
fs::path* TrainedRun::dir_ = nullptr;

TEST_F(TrainedRun, WritesEveryStageArtifact) {
  for (const char* f : {"manifest.json", "scaler.json", "premask.ckpt", "premask_history.csv", "mask_vector.csv",
                        "grid.json", "sweep.csv", "best.ckpt", "best_mask.txt", "selection.json", "report.json"}) {
    EXPECT_TRUE(fs::exists(root() / f)) << f;
  }
  const auto m = load_manifest(root() / kManifestName);
  for (const auto& s : train_stages()) {
    ASSERT_NE(m.find_stage(s), nullptr) << s;
    EXPECT_EQ(m.find_stage(s)->status, StageStatus::kCompleted) << s;
    EXPECT_TRUE(m.stage_intact(root(), s)) << s;
  }
}

TEST_F(TrainedRun, OverrideIsRecordedInManifest) {
  const auto m = load_manifest(root() / kManifestName);
  EXPECT_NE(m.config.find("lambda = 0.5"), std::string::npos) << m.config;
}

TEST_F(TrainedRun, ResumeOfCompletedRunChangesNothing) {
  const auto before = load_manifest(root() / kManifestName);
  const auto r = run({"train", (*dir_ / "run.ini").string(), "-o", root().string(), "--lambda", "0.5", "--resume"});
  ASSERT_EQ(r.status, 0) << r.err;
  const auto after = load_manifest(root() / kManifestName);
  ASSERT_EQ(before.artifacts.size(), after.artifacts.size());
  for (std::size_t i = 0; i < before.artifacts.size(); ++i) {
    EXPECT_EQ(before.artifacts[i].sha256, after.artifacts[i].sha256) << before.artifacts[i].name;
  }
}

TEST_F(TrainedRun, ResumeWithDifferentConfigIsRejected) {
  const auto r = run({"train", (*dir_ / "run.ini").string(), "-o", root().string(), "--lambda", "0.7", "--resume"});
  EXPECT_EQ(r.status, 3);
  EXPECT_NE(r.err.find("resume"), std::string::npos);
}

TEST_F(TrainedRun, StopAfterThenResumeMatchesFullRun) {
  const auto partial = *dir_ / "partial";
  const auto cfg = (*dir_ / "run.ini").string();
  ASSERT_EQ(run({"train", cfg, "-o", partial.string(), "--lambda", "0.5", "--stop-after", "grid"}).status, 0);
  EXPECT_FALSE(fs::exists(partial / "sweep.csv"));
  ASSERT_EQ(run({"train", cfg, "-o", partial.string(), "--lambda", "0.5", "--resume"}).status, 0);
  for (const char* f : {"best.ckpt", "sweep.csv", "best_mask.txt", "premask.ckpt"}) {
    EXPECT_EQ(testing::read_file(partial / f), testing::read_file(root() / f)) << f;
  }
}

TEST_F(TrainedRun, EvaluateWritesReports) {
  const auto out = *dir_ / "eval";
  const auto r = run({"evaluate", (root() / "best.ckpt").string(), (root() / "data" / "test.bin").string(), "-o",
                      out.string()});
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_TRUE(fs::exists(out / "r2.json"));
}

TEST_F(TrainedRun, EvaluateDimensionMismatchIsShapeError) {
  const auto other = *dir_ / "other";
  write(*dir_ / "spec12.ini", "[synthetic]\nmechanism = sparse_linear\nd = 12\nn_samples = 200\ndriver_set = 1\n");
  ASSERT_EQ(run({"gen-data", (*dir_ / "spec12.ini").string(), "-o", other.string()}).status, 0);
  const auto r = run({"evaluate", (root() / "best.ckpt").string(), (other / "test.bin").string(), "--scaler",
                      (root() / "scaler.json").string()});
  EXPECT_EQ(r.status, 6) << r.err;
  EXPECT_EQ(r.err.rfind("pcmask: error[", 0), 0u);
}

TEST_F(TrainedRun, AttributionOfMaskedInputsIsExactlyZero) {
  const auto out = *dir_ / "attr";
  const auto r = run({"attribute", (root() / "best.ckpt").string(), (root() / "data" / "test.bin").string(), "-o",
                      out.string(), "-n", "20", "--background", "10", "--permutations", "8"});
  ASSERT_EQ(r.status, 0) << r.err;
  const auto mask = load_checkpoint(root() / "best.ckpt").network.mask;
  ASSERT_TRUE(mask.has_value());
  std::istringstream csv(testing::read_file(out / "attribution.csv"));
  std::string header, row;
  std::getline(csv, header);
  std::getline(csv, row);
  const auto cells = split(row, ',');
  ASSERT_EQ(cells.size(), mask->size() + 1);
  for (std::size_t j = 0; j < mask->size(); ++j) {
    if (!mask->bits[j]) {
      EXPECT_EQ(parse_real(cells[j + 1]), 0.0) << j;
    }
  }
}

TEST_F(TrainedRun, CompareMaskWithItselfIsJaccardOne) {
  const auto m = (root() / "best_mask.txt").string();
  const auto r = run({"compare-masks", m, m});
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_NE(r.out.find("jaccard 1 "), std::string::npos) << r.out;
}

TEST_F(TrainedRun, InspectRecognizesEveryFormat) {
  EXPECT_NE(run({"inspect", (root() / "best.ckpt").string()}).out.find("mode        mask"), std::string::npos);
  EXPECT_NE(run({"inspect", (root() / "data" / "train.bin").string()}).out.find("dataset"), std::string::npos);
  EXPECT_NE(run({"inspect", (root() / kManifestName).string()}).out.find("stage report: completed"),
            std::string::npos);
  EXPECT_NE(run({"inspect", (root() / "best_mask.txt").string()}).out.find("mask "), std::string::npos);
  EXPECT_EQ(run({"inspect", (root() / "sweep.csv").string()}).status, 2);
}

TEST(Cli, MissingInputIsSingleLineIoError) {
  const auto r = run({"inspect", "/nonexistent/file.ckpt"});
  EXPECT_EQ(r.status, 5);
  EXPECT_EQ(std::count(r.err.begin(), r.err.end(), '\n'), 1);
}

}  // namespace
}  // namespace pcm::cli
