#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "glue/cli.hpp"
#include "glue/family_io.hpp"

using namespace glue;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("glue_cli_test_" + name);
  fs::remove_all(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p);
  std::stringstream s;
  s << f.rdbuf();
  return s.str();
}

} // namespace

TEST_CASE("generate writes families that validate") {
  for (int n = 1; n <= 4; ++n) {
    const auto r = cli({"generate", "cube", std::to_string(n)});
    REQUIRE(r.code == kPass);
    const auto doc = parse_family(r.out);
    CHECK(doc.family.poset.size() == static_cast<std::size_t>(n + 1));
    CHECK(validate_family(doc.family, 200, 1, 1e-9).ok);
  }
  const auto dir = scratch("gen");
  REQUIRE(cli({"generate", "cube", "3", "--out", dir.string()}).code == kPass);
  CHECK(fs::exists(dir / "cube3.json"));
  CHECK(serialize_family(load_family((dir / "cube3.json").string()).family) == serialize_family(cube_family(3)));

  const auto flipped = cli({"generate", "cube", "3", "--mutate", "p0,p1,p3"});
  REQUIRE(flipped.code == kPass);
  CHECK_FALSE(validate_family(parse_family(flipped.out).family, 200, 1, 1e-9).ok);
  CHECK(cli({"generate", "empty"}).code == kPass);
}

TEST_CASE("verify passes a clean cube and reports") {
  const auto dir = scratch("verify");
  const auto r = cli({"verify", "--family", "cube3", "--samples", "300", "--out", dir.string()});
  CHECK(r.code == kPass);
  CHECK(r.out.find("PASS") != std::string::npos);
  const auto report = nlohmann::json::parse(slurp(dir / "report.json"));
  CHECK(report["schema_version"] == 1);
  CHECK(report["passed"] == true);
  CHECK(report["first_failure"].is_null());
  CHECK(report["config"]["samples"] == 300);
  CHECK(!report["identities"].empty());
  const auto csv = slurp(dir / "residuals.csv");
  CHECK(csv.rfind("family,identity,pair,I1,I2,samples,max_residual,pass\n", 0) == 0);
  const auto rows = std::count(csv.begin(), csv.end(), '\n') - 1;
  CHECK(rows == static_cast<long>(report["validation"].size() + report["identities"].size()));

  // same inputs, same bytes
  const auto again = scratch("verify2");
  cli({"verify", "--family", "cube3", "--samples", "300", "--out", again.string()});
  CHECK(slurp(again / "report.json") == slurp(dir / "report.json"));
  CHECK(slurp(again / "residuals.csv") == csv);
}

TEST_CASE("verify on a family file") {
  const auto dir = scratch("file");
  cli({"generate", "cube", "2", "--out", dir.string()});
  const auto r = cli({"verify", "--family", (dir / "cube2.json").string(), "--samples", "200"});
  CHECK(r.code == kPass);
}

TEST_CASE("a flipped embedding fails with a named witness") {
  const auto dir = scratch("mutate");
  const auto r = cli({"verify", "--family", "cube3", "--mutate", "p0,p1,p3", "--out", dir.string()});
  CHECK(r.code == kIdentityFailure);
  CHECK(r.out.find("FAIL ") != std::string::npos);
  CHECK(r.out.find("p0,p1,p3") != std::string::npos);
  const auto report = nlohmann::json::parse(slurp(dir / "report.json"));
  CHECK(report["passed"] == false);
  CHECK(report["first_failure"].get<std::string>().find("p3") != std::string::npos);
}

TEST_CASE("the empty family passes vacuously") {
  const auto r = cli({"verify", "--family", "empty"});
  CHECK(r.code == kPass);
}

TEST_CASE("input errors exit 2") {
  CHECK(cli({}).code == kInputError);
  CHECK(cli({"frobnicate"}).code == kInputError);
  CHECK(cli({"verify"}).code == kInputError);
  CHECK(cli({"verify", "--family", "cube3", "--samples", "0"}).code == kInputError);
  CHECK(cli({"verify", "--family", "no_such_family"}).code == kInputError);
  CHECK(cli({"verify", "--family", "cube3", "--mutate", "p0,p1"}).code == kInputError);
  CHECK(cli({"verify", "--family", "cube3", "--mutate", "p0,p2,p1"}).code == kInputError);
  CHECK(cli({"generate", "cube"}).code == kInputError);
  CHECK(cli({"generate", "cube", "9"}).code == kInputError);
  CHECK(cli({"morse"}).code == kInputError);
  CHECK(cli({"morse", "--function", "x*y"}).code == kInputError);

  const auto bad = scratch("bad");
  fs::create_directories(bad);
  std::ofstream(bad / "broken.json") << "{\"poset\": {\"points\": 3}}";
  const auto r = cli({"verify", "--family", (bad / "broken.json").string()});
  CHECK(r.code == kInputError);
  CHECK(r.err.find("$.poset.points") != std::string::npos);
}

TEST_CASE("a constant function is not Morse") {
  const auto r = cli({"morse", "--function", "1", "--variables", "x,y"});
  CHECK(r.code == kInputError);
  CHECK(r.err.find("not a Morse function") != std::string::npos);
}

TEST_CASE("morse on the sphere reports a circle") {
  const auto dir = scratch("sphere");
  const auto r = cli({"morse", "--system", "sphere", "--export", "--out", dir.string()});
  CHECK(r.code == kPass);
  CHECK(r.out.find("circle of length") != std::string::npos);
  const auto m = nlohmann::json::parse(slurp(dir / "morse.json"));
  REQUIRE(m["arcs"].size() == 1);
  CHECK(m["arcs"][0]["circle"] == true);
  CHECK(m["critical_points"].size() == 2);
  const auto fam = load_family((dir / "family.json").string()).family;
  CHECK(fam.space("max", "min").dim() == 1);
}

TEST_CASE("morse from an expression and from a file") {
  const auto r = cli({"morse", "--function", "x^2 + 2*y^2", "--variables", "x,y", "--box", "-1:1,-1:1"});
  CHECK(r.code == kPass);
  CHECK(r.out.find("1 critical points") != std::string::npos);

  const auto dir = scratch("system");
  fs::create_directories(dir);
  MorseSystemSpec spec{"well", "(x-0.2)^2 + y^2", {"x", "y"}, {{"-1", "1"}, {"-1", "1"}}, {}};
  save_family((dir / "well.json").string(), StratifiedFamily{}, spec);
  const auto f = cli({"morse", "--system", (dir / "well.json").string()});
  CHECK(f.code == kPass);
  CHECK(f.out.find("system well: 1 critical points") != std::string::npos);

  const auto plain = scratch("plain");
  cli({"generate", "cube", "2", "--out", plain.string()});
  CHECK(cli({"morse", "--system", (plain / "cube2.json").string()}).code == kInputError);
}
