#include "curvepat/errors.hpp"
#include "curvepat/generators.hpp"
#include "curvepat/io.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>

#include <unistd.h>

using namespace curvepat;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir() {
  auto d = fs::temp_directory_path() / ("curvepat_io_" + std::to_string(::getpid()));
  fs::create_directories(d);
  return d;
}

}  // namespace

TEST_CASE("sha256 known vectors") {
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST_CASE("config hash ignores key order") {
  json a = {{"eps", 0.2}, {"seed", 1}, {"curve", "c.json"}};
  json b = json::parse(R"({"seed":1,"curve":"c.json","eps":0.2})");
  CHECK(config_hash(a) == config_hash(b));
  CHECK(config_hash(a).size() == 16);
  b["eps"] = 0.3;
  CHECK(config_hash(a) != config_hash(b));
}

TEST_CASE("reproducibility header") {
  RunMeta m;
  m.command = "decay";
  m.config_hash = "abcd";
  m.seed = 7;
  m.tolerances = {{"tol", 1e-9}};
  auto j = to_json(m);
  CHECK(j["tool_version"] == kToolVersion);
  CHECK(j["seed"] == 7);
  auto h = csv_header(m);
  CHECK(h.find("# tool_version=") != std::string::npos);
  CHECK(h.find("# config_hash=abcd") != std::string::npos);
}

TEST_CASE("atomic write replaces the file") {
  auto d = scratch_dir();
  const auto p = (d / "out.txt").string();
  atomic_write(p, "first");
  atomic_write(p, "second");
  CHECK(read_file(p) == "second");
  for (const auto& e : fs::directory_iterator(d)) CHECK(e.path().filename().string().find(".tmp") == std::string::npos);
  CHECK_THROWS_AS(atomic_write((d / "missing" / "x").string(), "x"), IoError);
  CHECK_THROWS_AS(read_file((d / "absent").string()), IoError);
  fs::remove_all(d);
}

TEST_CASE("curve JSON in both accepted forms") {
  auto wrapped = curve_from_json(json::parse(R"({"polys":[{"coeffs":{"1":1.0}},{"coeffs":{"2":1.0,"1":-0.5}}]})"));
  auto bare = curve_from_json(json::parse(R"({"polys":[{"1":1.0},{"2":1.0,"1":-0.5}]})"));
  CHECK(wrapped.n == 2);
  CHECK(wrapped.coeff_matrix == bare.coeff_matrix);
  auto back = curve_from_json(curve_to_json(wrapped));
  CHECK(back.coeff_matrix == wrapped.coeff_matrix);
  CHECK_THROWS_AS(curve_from_json(json::parse(R"({"polys":[]})")), ConfigError);
  CHECK_THROWS_AS(curve_from_json(json::parse(R"({"polys":[{"x":1}]})")), ConfigError);
  CHECK_THROWS_AS(curve_from_json(json::parse(R"({"polys":[{"0":1}]})")), ConstantTermError);
}

TEST_CASE("curve files") {
  auto d = scratch_dir();
  const auto p = (d / "c.json").string();
  atomic_write(p, "{ not json");
  CHECK_THROWS_AS(read_curve(p), ConfigError);
  atomic_write(p, R"({"polys":[{"coeffs":{"1":1}},{"coeffs":{"3":2}}]})");
  auto c = read_curve(p);
  CHECK(c.d == 3);
  CHECK(c.polys[1].coeff(3) == 2.0);
  fs::remove_all(d);
}

TEST_CASE("grid round trip with sidecar") {
  auto d = scratch_dir();
  const auto p = (d / "g.bin").string();
  auto g = random_density({8, 12}, 0.5, 3, {0.0, -1.0}, {2.0, 1.0});
  g.values(5) = 0.123456789012345;
  RunMeta m;
  m.command = "gen";
  write_grid(p, g, m);
  CHECK(fs::file_size(p) == 8u * 96u);
  auto side = json::parse(read_file(sidecar_path(p)));
  CHECK(side["dtype"] == "f64-le");
  CHECK(side["order"] == "row-major");
  CHECK(side["box"][1][0] == -1.0);
  CHECK(side["payload_sha256"] == sha256_hex(read_file(p)));
  auto h = read_grid(p);
  CHECK(h.dims == g.dims);
  CHECK(h.lo == g.lo);
  CHECK(h.hi == g.hi);
  CHECK((h.values == g.values).all());

  atomic_write(p, "short");
  CHECK_THROWS_AS(read_grid(p), IoError);
  atomic_write(sidecar_path(p), "{}");
  CHECK_THROWS_AS(read_grid(p), IoError);
  fs::remove_all(d);
}

TEST_CASE("witness report fields") {
  auto c = make_curve({{{1, 1.0}}, {{2, 1.0}}});
  auto P = planted_pair({64, 64}, {0, 0}, {1, 1}, c, 0.5, 1);
  SearchConfig cfg;
  cfg.epsilon = integral(P.set);
  auto w = search_unit(P.set, c, cfg);
  auto j = to_json(w);
  for (const char* key : {"mode", "x", "y", "t", "gap_certified", "overlap_mass", "noise", "threshold", "scan"})
    CHECK_MESSAGE(j.contains(key), key);
  CHECK(j["mode"] == "unit");
  auto csv = witness_csv(w, RunMeta{});
  CHECK(csv.rfind("# tool_version=", 0) == 0);
}
