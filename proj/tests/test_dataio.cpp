#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <sstream>
#include <vector>

#include "spikefit/dataio.hpp"
#include "spikefit/errors.hpp"
#include "spikefit/rng.hpp"

using namespace spikefit;
using namespace spikefit::dataio;

namespace {

SpectralCube small_cube() {
  SpectralCube c;
  c.height = 2;
  c.width = 3;
  c.bands = 4;
  c.band_axis = {400, 450, 500.5, 600};
  c.unit = "nm";
  for (int i = 0; i < 24; ++i) c.values.push_back(0.25f * static_cast<float>(i));
  return c;
}

std::string encode(const SpectralCube& c) {
  std::ostringstream os(std::ios::binary);
  cube_write(c, os);
  return os.str();
}

std::filesystem::path tmp_dir() {
  auto p = std::filesystem::temp_directory_path() / "spikefit_unit_dataio";
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("cube round trip through a stream") {
  const auto c = small_cube();
  std::istringstream is(encode(c), std::ios::binary);
  const auto back = cube_read(is);
  CHECK(back.values == c.values);
  CHECK(back.band_axis == c.band_axis);
  CHECK(back.unit == "nm");
  CHECK(back.at(1, 2, 3) == c.values[23]);
}

TEST_CASE("header layout") {
  const auto bytes = encode(small_cube());
  CHECK(bytes.substr(0, 4) == "SPKC");
  CHECK(bytes.size() == 4 + 2 + 12 + 4 + 2 + 4 * 8 + 24 * 4);
}

TEST_CASE("malformed cubes raise FormatError") {
  const auto good = encode(small_cube());
  auto expect_bad = [](const std::string& bytes) {
    std::istringstream is(bytes, std::ios::binary);
    CHECK_THROWS_AS(cube_read(is), FormatError);
  };
  expect_bad("");
  expect_bad("XPKC" + good.substr(4));
  std::string v = good;
  v[4] = 2;
  expect_bad(v);
  expect_bad(good.substr(0, good.size() - 1));
  expect_bad(good + "x");
  std::string axis = good;  // swap two band positions
  std::memcpy(axis.data() + 24, good.data() + 32, 8);
  expect_bad(axis);
  std::string nan = good;
  const float q = NAN;
  std::memcpy(nan.data() + good.size() - 4, &q, 4);
  expect_bad(nan);
  std::string unit = good;
  unit[18] = static_cast<char>(0xff);
  expect_bad(unit);
}

TEST_CASE("truncation and byte corruption never crash") {
  const auto good = encode(small_cube());
  Rng r(1);
  for (std::size_t cut = 0; cut < good.size(); ++cut) {
    std::istringstream is(good.substr(0, cut), std::ios::binary);
    CHECK_THROWS_AS(cube_read(is), FormatError);
  }
  for (int rep = 0; rep < 500; ++rep) {
    std::string b = good;
    b[r.below(b.size())] = static_cast<char>(r.below(256));
    std::istringstream is(b, std::ios::binary);
    try {
      cube_read(is).validate();
    } catch (const FormatError&) {
    } catch (const ArgumentError&) {
    }
  }
}

TEST_CASE("flatten and unflatten are inverse") {
  const auto c = small_cube();
  const auto m = flatten(c);
  CHECK(m.count() == 6);
  CHECK(m.dim() == 4);
  CHECK(m(4, 1) == c.at(1, 1, 1));
  const auto back = unflatten(m, 2, 3, c.band_axis, c.unit);
  CHECK(back.values == c.values);
}

TEST_CASE("min-max and l1 normalizations invert") {
  Rng r(2);
  std::vector<double> v(5 * 30);
  for (double& x : v) x = 10.0 * r.uniform();
  for (std::size_t i = 0; i < 30; ++i) v[i * 5 + 2] = 7.0;  // constant feature
  for (std::size_t f = 0; f < 5; ++f) v[3 * 5 + f] = 0.0;   // zero row
  v[3 * 5 + 2] = 7.0;
  const DataMatrix m(5, 30, v);
  for (NormKind k : {NormKind::none, NormKind::minmax, NormKind::l1}) {
    const auto [nm, rec] = normalize(m, k);
    const auto back = denormalize(nm, rec);
    for (std::size_t i = 0; i < v.size(); ++i) CHECK(back.values()[i] == doctest::Approx(v[i]).epsilon(1e-12));
    CHECK(parse_norm(norm_name(k)) == k);
  }
  const auto [mm, rec] = minmax_normalize(m);
  for (double x : mm.values()) CHECK((x >= 0.0 && x <= 1.0));
  CHECK(rec.constant[2]);
  const auto sp = denormalize_spikes({{0, 0, 0, 0, 0}, {1, 1, 1, 1, 1}}, rec);
  CHECK(sp[1][0] == doctest::Approx(rec.maxes[0]));
  CHECK_THROWS_AS(denormalize_spikes({{1, 1, 1, 1, 1}}, l1_normalize(m).second), ArgumentError);
  CHECK_THROWS_AS(parse_norm("zscore"), ArgumentError);
}

TEST_CASE("matrix csv round trip and rejections") {
  const auto path = (tmp_dir() / "m.csv").string();
  const DataMatrix m(3, 2, {1.5, -2, 1e-300, 4, 5, 6});
  write_data_csv(path, m);
  const auto back = read_data_csv(path);
  CHECK(std::vector<double>(back.values().begin(), back.values().end()) ==
        std::vector<double>(m.values().begin(), m.values().end()));
  std::istringstream quoted("a,b\n\"1\",2\n");
  CHECK_THROWS(read_matrix_csv(quoted));
  std::istringstream ragged("a,b\n1,2\n3\n");
  CHECK_THROWS(read_matrix_csv(ragged));
  std::istringstream ok("a,b\n1,2\n3,4\n");
  const auto c = read_matrix_csv(ok);
  CHECK(c.rows == 2);
  CHECK(c.header == std::vector<std::string>{"a", "b"});
}

TEST_CASE("label images round trip") {
  const auto stem = (tmp_dir() / "labels").string();
  const std::vector<int> labels = {1, 2, 3, 3, 2, 1};
  const auto files = export_labels_image(labels, 3, 2, 3, stem);
  REQUIRE_FALSE(files.ppm.empty());
  const auto gray = read_pnm(files.pgm);
  CHECK(gray.channels == 1);
  CHECK(labels_from_pnm(gray, 3) == labels);
  const auto color = read_pnm(files.ppm);
  CHECK(color.channels == 3);
  CHECK(labels_from_pnm(color, 3) == labels);
  CHECK(label_gray(1, 1) == 0);
  CHECK(label_gray(3, 3) == 255);
  std::vector<int> many(20);
  for (int i = 0; i < 20; ++i) many[i] = i + 1;
  const auto big = export_labels_image(many, 20, 4, 5, stem + "_big");
  CHECK(big.palette_overflow);
  CHECK(big.ppm.empty());
}
