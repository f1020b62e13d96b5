#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "spikefit/cli.hpp"
#include "spikefit/dataio.hpp"

using namespace spikefit;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli::run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string dir() {
  const auto p = std::filesystem::temp_directory_path() / "spikefit_unit_cli";
  std::filesystem::create_directories(p);
  return p.string() + "/";
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST_CASE("argument errors exit with 2") {
  CHECK(run({}).code == cli::kArgumentError);
  CHECK(run({"nope"}).code == cli::kArgumentError);
  CHECK(run({"synth"}).code == cli::kArgumentError);  // --out missing
  CHECK(run({"synth", "--out", dir() + "x", "--sigma2", "-1"}).code == cli::kArgumentError);
  CHECK(run({"fit", "--out", dir() + "x", "--input", dir() + "missing.csv"}).code == cli::kArgumentError);
  CHECK(run({"segment", "--out", dir() + "x", "--input", dir() + "missing.spkc"}).code == cli::kArgumentError);
  CHECK(run({"synth", "--n", "0", "--out", dir() + "x"}).code == cli::kArgumentError);
  CHECK(run({"--help"}).code == cli::kOk);
}

TEST_CASE("synth is deterministic in the seed") {
  const auto a = dir() + "sa", b = dir() + "sb", c = dir() + "sc";
  REQUIRE(run({"synth", "--n", "50", "--seed", "3", "--out", a}).code == cli::kOk);
  REQUIRE(run({"synth", "--n", "50", "--seed", "3", "--out", b}).code == cli::kOk);
  REQUIRE(run({"synth", "--n", "50", "--seed", "4", "--out", c}).code == cli::kOk);
  CHECK(slurp(a + ".csv") == slurp(b + ".csv"));
  CHECK(slurp(a + ".csv") != slurp(c + ".csv"));
  CHECK(cli::file_checksum(a + ".csv") == cli::file_checksum(b + ".csv"));
  CHECK(cli::file_checksum(a + ".csv").size() == 16);
}

TEST_CASE("SPIKEFIT_SEED overrides --seed and is recorded") {
  const auto a = dir() + "ea", b = dir() + "eb";
  REQUIRE(run({"synth", "--n", "40", "--seed", "9", "--out", a}).code == cli::kOk);
  setenv("SPIKEFIT_SEED", "9", 1);
  const auto r = run({"synth", "--n", "40", "--seed", "1", "--out", b});
  setenv("SPIKEFIT_SEED", "abc", 1);
  const auto bad = run({"synth", "--n", "40", "--out", b});
  unsetenv("SPIKEFIT_SEED");
  REQUIRE(r.code == cli::kOk);
  CHECK(bad.code == cli::kArgumentError);
  CHECK(slurp(a + ".csv") == slurp(b + ".csv"));
  const auto m = serialize::read_json(b + ".manifest.json");
  CHECK(m.at("seed").get<std::uint64_t>() == 9);
}

TEST_CASE("fit writes outputs for every method and replay reproduces them") {
  const auto data = dir() + "fd";
  REQUIRE(run({"synth", "--n", "200", "--seed", "2", "--out", data}).code == cli::kOk);
  for (std::string method : {"smm", "gmm", "kmeans"}) {
    const auto out = dir() + "fit_" + method;
    const auto r = run({"fit", "--method", method, "--input", data + ".csv", "--k", "3", "--n1", "2", "--d1",
                        "2", "--n2", "1", "--d2", "20", "--seed", "5", "--out", out});
    REQUIRE(r.code == cli::kOk);
    CHECK(std::filesystem::exists(out + ".json"));
    CHECK(std::filesystem::exists(out + ".labels.csv"));
    CHECK(std::filesystem::exists(out + ".rho.csv") == (method != "kmeans"));
    CHECK(run({"replay", out + ".manifest.json"}).code == cli::kOk);
  }
}

TEST_CASE("replay detects a changed output") {
  const auto out = dir() + "rp";
  REQUIRE(run({"synth", "--n", "30", "--seed", "1", "--out", out}).code == cli::kOk);
  auto m = serialize::read_json(out + ".manifest.json");
  for (auto& o : m["outputs"]) o["fnv1a64"] = "0000000000000000";
  serialize::write_json(out + ".tampered.json", m);
  CHECK(run({"replay", out + ".tampered.json"}).code == cli::kNumericFailure);
  m["outputs"][0]["fnv1a64"] = nullptr;
  serialize::write_json(out + ".pending.json", m);
  CHECK(run({"replay", out + ".pending.json"}).code == cli::kArgumentError);
}

TEST_CASE("segment with K = 1 gives a uniform image") {
  const auto cube = dir() + "cube";
  REQUIRE(run({"synth-cube", "--height", "6", "--width", "5", "--bands", "6", "--k", "2", "--seed", "1", "--out",
               cube})
              .code == cli::kOk);
  const auto seg = dir() + "seg1";
  const auto r = run({"segment", "--input", cube + ".spkc", "--k", "1", "--n1", "1", "--d1", "1", "--n2", "1",
                      "--d2", "5", "--out", seg});
  REQUIRE(r.code == cli::kOk);
  const auto img = dataio::read_pnm(seg + ".pgm");
  CHECK(img.pixels == std::vector<std::uint8_t>(30, 0));
}

TEST_CASE("fit on a rank deficient input reports a numeric failure or succeeds cleanly") {
  const auto path = dir() + "zeros.csv";
  {
    std::ofstream f(path);
    f << "x1,x2\n";
    for (int i = 0; i < 10; ++i) f << "0,0\n";
  }
  const auto r = run({"fit", "--input", path, "--k", "2", "--out", dir() + "zf"});
  CHECK((r.code == cli::kNumericFailure || r.code == cli::kArgumentError));
  CHECK_FALSE(r.err.empty());
}
