#include <doctest.h>

#include <filesystem>
#include <vector>

#include "spikefit/errors.hpp"
#include "spikefit/serialize.hpp"

using namespace spikefit;
using namespace spikefit::serialize;

TEST_CASE("model json round trip is exact") {
  smm::ModelParams p;
  p.spikes = {{0.1, -1.0 / 3.0}, {0.0, 0.0}};
  p.weights = {0.3, 0.7};
  p.noise_var = 1e-7;
  const auto j = model_to_json(p);
  CHECK(j.begin().key() == "spikes");
  const auto back = model_from_json(Json::parse(j.dump()));
  CHECK(back.spikes == p.spikes);
  CHECK(back.weights == p.weights);
  CHECK(back.noise_var == p.noise_var);
  auto bad = j;
  bad["noise_var"] = -1.0;
  CHECK_THROWS_AS(model_from_json(bad), ArgumentError);
}

TEST_CASE("gmm json round trip") {
  baselines::GmmParams p;
  p.means = {{1, 2}};
  p.covs = {SymMatrix(2, {2, 0.5, 0.5, 1})};
  p.weights = {1.0};
  const auto ex = baselines::extract_spikes(p.covs);
  const auto j = gmm_to_json(p, ex);
  CHECK(j.contains("sigma_sq_gmm"));
  CHECK(j.contains("gap_ok"));
  const auto back = gmm_from_json(j);
  CHECK(back.means == p.means);
  CHECK(back.covs[0].entries()[1] == 0.5);
}

TEST_CASE("label and responsibility csv files") {
  const auto dir = std::filesystem::temp_directory_path() / "spikefit_unit_serialize";
  std::filesystem::create_directories(dir);
  const std::vector<int> labels = {3, 1, 2};
  write_labels_csv((dir / "l.csv").string(), labels);
  CHECK(read_labels_csv((dir / "l.csv").string()) == labels);
  write_responsibilities_csv((dir / "r.csv").string(), smm::Responsibilities(1, 2, {0.25, 0.75}));
  const auto j = Json{{"a", 1}};
  write_json((dir / "x.json").string(), j);
  CHECK(read_json((dir / "x.json").string()) == j);
  CHECK_THROWS(read_json((dir / "missing.json").string()));
}
