#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "kacflow/cli.hpp"
#include "kacflow/io.hpp"
#include "kacflow/process.hpp"

namespace kacflow {
namespace {

namespace fs = std::filesystem;

struct CliRun {
  int code = -1;
  std::string out, err;
};

// Runs the built binary in `dir` with the given KACFLOW_THREADS.
CliRun run_cli(const std::string& args, const fs::path& dir, int threads = 1) {
  const fs::path out = dir / "stdout.txt", err = dir / "stderr.txt";
  const std::string cmd = "cd '" + dir.string() + "' && KACFLOW_THREADS=" + std::to_string(threads) + " '" +
                          KACFLOW_CLI_PATH + "' " + args + " > '" + out.string() + "' 2> '" + err.string() + "'";
  const int status = std::system(cmd.c_str());
  CliRun r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = read_text(out.string());
  r.err = read_text(err.string());
  fs::remove(out);
  fs::remove(err);
  return r;
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("kacflow_test_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

TEST(Cli, DensityGridContract) {
  const CliRun r = run_cli("density --a 1 --c 1 --t 1 --xmin -1 --xmax 1 --points 5", scratch("density"));
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = lines(r.out);
  ASSERT_EQ(rows.size(), 6u);
  EXPECT_EQ(rows[0], "x,u_cont,flux,velocity");
  EXPECT_EQ(rows[3].substr(0, 2), "0,");
}

TEST(Cli, UnknownSubcommandIsUsageError) {
  const CliRun r = run_cli("frobnicate", scratch("unknown"));
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("frobnicate"), std::string::npos);
  EXPECT_NE(r.err.find("Usage"), std::string::npos);
  EXPECT_TRUE(r.out.empty());
  EXPECT_EQ(run_cli("", scratch("none")).code, 2);
}

TEST(Cli, MissingConfigIsRuntimeFailure) {
  const CliRun r = run_cli("toy --config cfg.json", scratch("missing"));
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("cfg.json"), std::string::npos) << r.err;
}

TEST(Cli, InvalidUsageExitsTwo) {
  const fs::path dir = scratch("usage");
  EXPECT_EQ(run_cli("density --a -1", dir).code, 2);
  EXPECT_EQ(run_cli("density --points abc", dir).code, 2);
  EXPECT_EQ(run_cli("density --bogus 1", dir).code, 2);
  EXPECT_EQ(run_cli("sample --method magic", dir).code, 2);
  EXPECT_EQ(run_cli("velonorm --n 10", dir).code, 2);
  EXPECT_EQ(run_cli("generate", dir).code, 2);
  EXPECT_EQ(run_cli("convergence --t-grid 1", dir, 0).code, 2);  // KACFLOW_THREADS must be positive
  write_text((dir / "bad.json").string(), R"({"iterations": 10, "colour": "red"})");
  const CliRun r = run_cli("train --config bad.json --out ck.json", dir);
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("colour"), std::string::npos);
}

TEST(Cli, HelpDocumentsEveryFlag) {
  const fs::path dir = scratch("help");
  const CliRun top = run_cli("--help", dir);
  EXPECT_EQ(top.code, 0);
  EXPECT_NE(top.out.find("KACFLOW_THREADS"), std::string::npos);
  const std::map<std::string, std::vector<std::string>> flags{
      {"paths", {"--a", "--c", "--T", "--n", "--seed", "--dt", "--out", "--process", "--dim"}},
      {"sample", {"--a", "--c", "--t", "--n", "--method", "--seed", "--out"}},
      {"density", {"--a", "--c", "--t", "--xmin", "--xmax", "--points", "--out"}},
      {"velocity", {"--a", "--c", "--t", "--xmin", "--xmax", "--points", "--out"}},
      {"train", {"--config", "--out", "--loss", "--iterations", "--seed", "500000"}},
      {"generate", {"--checkpoint", "--n", "--solver", "--steps", "--rtol", "--atol", "--seed", "--latent", "--out"}},
      {"validate", {"--samples", "--target", "--radius", "--out"}},
      {"convergence", {"--a", "--c", "--sigma0", "--t-grid", "--out"}},
      {"velonorm", {"--model", "--a", "--c", "--t-grid", "--n", "--seed", "--out"}},
      {"toy", {"--config", "--output-dir", "500000"}}};
  for (const auto& [cmd, names] : flags) {
    const CliRun r = run_cli(cmd + " --help", dir);
    EXPECT_EQ(r.code, 0) << cmd;
    for (const auto& f : names) EXPECT_NE(r.out.find(f), std::string::npos) << cmd << " " << f;
  }
}

TEST(Cli, SampleCsvRoundTripsExactly) {
  const fs::path dir = scratch("sample");
  const CliRun r = run_cli("sample --a 2 --c 1 --t 0.7 --n 50 --seed 3 --out s.csv", dir);
  ASSERT_EQ(r.code, 0) << r.err;
  RngStream rng(3, 0);
  const auto expected = sample_kac(KacParams(2, 1), 0.7, 50, rng);
  const auto got = read_samples_csv((dir / "s.csv").string());
  ASSERT_EQ(got.size(), 50u);
  for (std::size_t k = 0; k < 50; ++k) EXPECT_EQ(got[k][0], expected[k]);
  const nlohmann::json m = read_json((dir / "s.csv.manifest.json").string());
  EXPECT_EQ(m.at("seed"), 3);
  EXPECT_EQ(m.at("version"), kVersion);
  EXPECT_EQ(m.at("config_hash"), config_hash(m.at("config")));
}

TEST(Cli, ValidateAtModes) {
  const fs::path dir = scratch("validate");
  write_text((dir / "target.json").string(), TargetSpec::grid3x3().to_json().dump());
  write_text((dir / "s.csv").string(), samples_csv(TargetSpec::grid3x3().points()));
  const CliRun r = run_cli("validate --samples s.csv --target target.json --radius 0.1", dir);
  ASSERT_EQ(r.code, 0) << r.err;
  const nlohmann::json m = nlohmann::json::parse(r.out);
  EXPECT_EQ(m.at("mode_coverage").at(0).at("fraction"), 1.0);
  EXPECT_EQ(m.at("mode_coverage").at(0).at("modes_hit"), 9);
  write_text((dir / "s3.csv").string(), "sample_id,x1,x2,x3\n0,0,0,0\n");
  EXPECT_EQ(run_cli("validate --samples s3.csv --target target.json", dir).code, 2);
}

TEST(Cli, InProcessDispatchUsesInjectedStreams) {
  const char* argv[] = {"kacflow", "convergence", "--a", "1", "--c", "1", "--t-grid", "1,2"};
  std::ostringstream out, err;
  EXPECT_EQ(cli::parse_and_dispatch(8, argv, out, err), 0) << err.str();
  const auto rows = lines(out.str());
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0], "t,l2_error");
}

// Every subcommand, run twice with the same arguments and different thread
// counts, produces byte-identical files.
TEST(Cli, DeterministicAcrossRunsAndThreadCounts) {
  const fs::path dir = scratch("determinism");
  write_text((dir / "train.json").string(),
             R"({"model": {"hidden": [16, 16]}, "iterations": 150, "batch_size": 32, "loss_log_every": 50, "seed": 4})");
  write_text((dir / "toy.json").string(),
             R"({"train": {"model": {"hidden": [16]}, "iterations": 100, "batch_size": 32, "loss_log_every": 50},
                 "samples": 30, "solver": {"method": "rk4", "steps": 10}})");
  write_text((dir / "target.json").string(), TargetSpec::grid3x3().to_json().dump());
  const std::vector<std::pair<std::string, std::vector<std::string>>> commands{
      {"paths --n 3 --dim 2 --dt 0.05 --seed 2 --out paths.csv", {"paths.csv"}},
      {"paths --process brownian --n 2 --dt 0.1 --out bpaths.csv", {"bpaths.csv"}},
      {"sample --n 200 --method walk --seed 5 --out sample.csv", {"sample.csv"}},
      {"density --a 2 --c 1 --t 0.5 --points 21 --out density.csv", {"density.csv"}},
      {"velocity --a 2 --c 1 --t 0.5 --points 21 --out velocity.csv", {"velocity.csv"}},
      {"train --config train.json --out ck.json --loss loss.csv", {"ck.json", "loss.csv"}},
      {"generate --checkpoint ck.json --n 24 --exact --seed 1 --out gen.csv", {"gen.csv"}},
      {"generate --checkpoint ck.json --n 24 --solver rk4 --steps 20 --out gen4.csv", {"gen4.csv"}},
      {"validate --samples gen.csv --target target.json --out metrics.json", {"metrics.json"}},
      {"convergence --a 1 --c 1 --t-grid 1,2,4 --out conv.csv", {"conv.csv"}},
      {"velonorm --model kac --t-grid 0.1,0.5,1 --n 2000 --out vn.csv", {"vn.csv"}},
      {"velonorm --model diffusion --t-grid 0.5,0.9 --n 2000 --out vnd.csv", {"vnd.csv"}},
      {"toy --config toy.json --output-dir toy", {"toy/samples.csv", "toy/metrics.json", "toy/loss.csv",
                                                  "toy/checkpoint.json", "toy/diffusion_samples.csv"}}};
  for (const auto& [args, files] : commands) {
    std::map<std::string, std::string> first;
    for (int threads : {1, 3}) {
      const CliRun r = run_cli(args, dir, threads);
      ASSERT_EQ(r.code, 0) << args << "\n" << r.err;
      for (const auto& f : files) {
        for (const std::string& name : {f, manifest_path(f)}) {
          const std::string bytes = read_text((dir / name).string());
          if (threads == 1) {
            first[name] = bytes;
          } else {
            EXPECT_EQ(bytes, first[name]) << args << " -> " << name;
          }
        }
      }
    }
  }
}

}  // namespace
}  // namespace kacflow
