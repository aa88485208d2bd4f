#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "trinuseg/cli.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "trinuseg");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = trinuseg::run_cli(int(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("trinuseg_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

const char* kTinyConfig = R"(# tiny
[model]
input_size = 64
embed_dim = 8
heads_per_stage = 2,2,4
window_size = 4
mlp_ratio = 2
[train]
epochs = 1
batch_size = 2
synthetic_count = 3
synthetic_size = 64
)";

}  // namespace

TEST_CASE("help exits 0 for the tool and every subcommand") {
  CHECK(run({"--help"}).code == 0);
  for (const char* sub : {"synth", "train", "eval", "complexity", "ablate", "overlay"}) {
    const Result r = run({sub, "--help"});
    INFO(sub);
    CHECK(r.code == 0);
    CHECK(r.out.find("--") != std::string::npos);
  }
}

TEST_CASE("bad usage gives a one-line error and usage text") {
  const Result unknown = run({"complexity", "--bogus"});
  CHECK(unknown.code != 0);
  CHECK(unknown.err.rfind("error: ", 0) == 0);
  CHECK(unknown.err.find("Usage") != std::string::npos);
  CHECK(run({}).code != 0);
  CHECK(run({"frobnicate"}).code != 0);
}

TEST_CASE("complexity prints four strictly decreasing rows") {
  const Result r = run({"complexity"});
  REQUIRE(r.code == 0);
  std::istringstream is(r.out);
  std::string line;
  std::getline(is, line);  // header
  std::vector<long> params;
  while (std::getline(is, line)) {
    std::istringstream ls(line);
    std::vector<std::string> cols;
    for (std::string c; ls >> c;) cols.push_back(c);
    // label may contain spaces; params is the 3rd column from the end
    params.push_back(std::stol(cols[cols.size() - 3]));
  }
  REQUIRE(params.size() == 4);
  CHECK(params[0] > params[1]);
  CHECK(params[1] > params[2]);
  CHECK(params[2] > params[3]);
}

TEST_CASE("missing files and config violations") {
  const Result missing = run({"complexity", "--config", "/nonexistent/x.cfg"});
  CHECK(missing.code != 0);
  CHECK(missing.err.find("/nonexistent/x.cfg") != std::string::npos);
  CHECK(std::count(missing.err.begin(), missing.err.end(), '\n') == 1);

  const fs::path dir = scratch("bad");
  std::ofstream(dir / "bad.cfg") << "embed_dim = 10\nheads_per_stage = 3,6,12\n";
  const Result bad = run({"complexity", "--config", (dir / "bad.cfg").string()});
  CHECK(bad.code != 0);
  CHECK(bad.err.find("invalid model config") != std::string::npos);

  std::ofstream(dir / "typo.cfg") << "embed_dims = 96\n";
  const Result typo = run({"complexity", "--config", (dir / "typo.cfg").string()});
  CHECK(typo.code != 0);
  CHECK(typo.err.find("embed_dims") != std::string::npos);

  const Result ev = run({"eval", "--checkpoint", (dir / "none.bin").string(), "--data", dir.string(), "--out", dir.string()});
  CHECK(ev.code != 0);
  CHECK(ev.err.find("none.bin") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("synth: empty dataset and seed fallback") {
  const fs::path dir = scratch("synth");
  CHECK(run({"synth", "--out", (dir / "empty").string(), "--n", "0"}).code == 0);
  CHECK(fs::is_directory(dir / "empty" / "images"));
  CHECK(fs::is_empty(dir / "empty" / "images"));

  CHECK(run({"synth", "--out", (dir / "a").string(), "--n", "2", "--size", "64", "--seed", "5"}).code == 0);
  ::setenv("TRINUSEG_SEED", "5", 1);
  CHECK(run({"synth", "--out", (dir / "b").string(), "--n", "2", "--size", "64"}).code == 0);
  ::unsetenv("TRINUSEG_SEED");
  CHECK(run({"synth", "--out", (dir / "c").string(), "--n", "2", "--size", "64", "--seed", "6"}).code == 0);
  CHECK(slurp(dir / "a" / "images" / "0001.png") == slurp(dir / "b" / "images" / "0001.png"));
  CHECK(slurp(dir / "a" / "instances" / "0001.png") == slurp(dir / "b" / "instances" / "0001.png"));
  CHECK(slurp(dir / "a" / "images" / "0001.png") != slurp(dir / "c" / "images" / "0001.png"));
  CHECK(fs::exists(dir / "a" / "labels" / "0001_cluster.png"));

  ::setenv("TRINUSEG_SEED", "abc", 1);
  CHECK(run({"synth", "--out", (dir / "d").string(), "--n", "1", "--size", "64"}).code != 0);
  ::unsetenv("TRINUSEG_SEED");
  fs::remove_all(dir);
}

TEST_CASE("train, eval, overlay and ablate end to end") {
  const fs::path dir = scratch("e2e");
  std::ofstream(dir / "tiny.cfg") << kTinyConfig;
  const std::string cfg = (dir / "tiny.cfg").string();

  const Result t = run({"train", "--config", cfg, "--out", (dir / "run").string(), "--seed", "2"});
  REQUIRE(t.code == 0);
  CHECK(fs::exists(dir / "run" / "checkpoint.bin"));
  CHECK(slurp(dir / "run" / "history.csv").rfind("epoch,", 0) == 0);

  REQUIRE(run({"synth", "--out", (dir / "data").string(), "--n", "3", "--size", "64", "--seed", "2"}).code == 0);
  const Result e = run({"eval", "--checkpoint", (dir / "run" / "checkpoint.bin").string(), "--data",
                        (dir / "data").string(), "--out", (dir / "eval").string(), "--overlays"});
  REQUIRE(e.code == 0);
  const std::string csv = slurp(dir / "eval" / "metrics.csv");
  CHECK(csv.rfind("seed,split,dsc,f1,acc,iou,ercnt\n", 0) == 0);
  CHECK(fs::exists(dir / "eval" / "overlays" / "0000.png"));
  CHECK(slurp(dir / "eval" / "metrics.txt").find("dsc=") != std::string::npos);

  const Result o = run({"overlay", "--checkpoint", (dir / "run" / "checkpoint.bin").string(), "--image",
                        (dir / "data" / "images" / "0001.png").string(), "--out", (dir / "ov.png").string()});
  CHECK(o.code == 0);
  CHECK(fs::exists(dir / "ov.png"));

  // same seed, fresh directory: identical checkpoint bytes
  REQUIRE(run({"train", "--config", cfg, "--out", (dir / "run2").string(), "--seed", "2"}).code == 0);
  CHECK(slurp(dir / "run" / "checkpoint.bin") == slurp(dir / "run2" / "checkpoint.bin"));

  const Result a = run({"ablate", "--config", cfg, "--out", (dir / "ablate").string()});
  REQUIRE(a.code == 0);
  const std::string grid = slurp(dir / "ablate" / "ablation.csv");
  CHECK(std::count(grid.begin(), grid.end(), '\n') == 9);
  CHECK(fs::exists(dir / "ablate" / "complexity.txt"));
  fs::remove_all(dir);
}
