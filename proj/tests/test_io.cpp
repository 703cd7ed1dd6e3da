#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>

#include "crvb/error.hpp"
#include "crvb/io.hpp"

using namespace crvb;
namespace fs = std::filesystem;

namespace {

std::string bytes_of(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "crvb_test_io";
  fs::create_directories(dir);
  return dir / name;
}

ConnectionForm sample_form(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const ChartPtr c = std::make_shared<GridChart>(build_grid(3, 0.5, 5));
  return ConnectionForm::sample(c, {random_polynomial(2, 2, 0, 2, rng, 1.0), random_polynomial(2, 2, 0, 2, rng, 1.0)});
}

}  // namespace

TEST_CASE("form container round trip is byte identical") {
  const ConnectionForm w = sample_form(1);
  const fs::path a = scratch("a.crvb"), b = scratch("b.crvb");
  save_field(a.string(), FieldFile::from(w));
  const FieldFile f = load_field(a.string());
  CHECK(f.kind == "form");
  CHECK(f.chart->rho() == 0.5);
  const ConnectionForm back = f.form();
  REQUIRE(back.m() == 2);
  for (int al = 1; al <= 2; ++al) CHECK(back[al].values() == w[al].values());
  save_field(b.string(), f);
  CHECK(bytes_of(a) == bytes_of(b));
  CHECK_THROWS_AS(f.matrix(), Error);
}

TEST_CASE("undefined points are stored as NaN and come back undefined") {
  MatrixField m = sample_form(2)[1];
  m.drop_polynomial();
  m.set_defined(0, false);
  m.set_defined(7, false);
  const fs::path p = scratch("m.crvb");
  save_field(p.string(), FieldFile::from(m));
  const MatrixField back = load_field(p.string()).matrix();
  CHECK_FALSE(back.defined(0));
  CHECK_FALSE(back.defined(7));
  CHECK(back.defined(1));
  CHECK(back.at(0).norm() == 0.0);
  // first value after the header
  const std::string raw = bytes_of(p);
  const std::size_t header = raw.size() - 16 * 4 * m.size();
  double first;
  std::memcpy(&first, raw.data() + header, sizeof first);
  CHECK(std::isnan(first));
  CHECK(back.at(1) == m.at(1));
}

TEST_CASE("damaged files are rejected as format errors") {
  const fs::path p = scratch("t.crvb");
  save_field(p.string(), FieldFile::from(sample_form(3)));
  const std::string full = bytes_of(p);
  auto expect_format = [&](const std::string& content) {
    {
      std::ofstream out(p, std::ios::binary | std::ios::trunc);
      out << content;
    }
    try {
      load_field(p.string());
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::Format);
    }
  };
  expect_format(full.substr(0, full.size() / 2));
  expect_format(full + "x");
  expect_format("CRVB9" + full.substr(5));
  expect_format("");
  try {
    load_field(scratch("missing.crvb").string());
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Io);
  }
}

TEST_CASE("polynomial JSON round trip") {
  std::mt19937_64 rng(4);
  const MatrixPolynomial p = random_polynomial(2, 3, 0, 3, rng, 1.0);
  const nlohmann::json j = polynomial_to_json(p);
  CHECK(j.at("m") == 2);
  CHECK(j.at("rank") == 3);
  const MatrixPolynomial q = polynomial_from_json(j);
  CHECK((p - q).max_coefficient() == 0.0);
  CHECK(polynomial_to_json(q) == j);
  CHECK_THROWS_AS(polynomial_from_json(nlohmann::json::parse(R"({"m": 2})")), Error);
}

TEST_CASE("atomic text write and JSON read") {
  const fs::path p = scratch("c.json");
  write_text(p.string(), R"({"a": [1, 2]})");
  CHECK(read_json(p.string()).at("a").size() == 2u);
  write_text(p.string(), "{broken");
  CHECK_THROWS_AS(read_json(p.string()), Error);
}
