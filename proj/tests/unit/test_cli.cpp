#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "commands.hpp"
#include "config.hpp"
#include "relaxor/error.hpp"

namespace fs = std::filesystem;
using relaxor::cli::run;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result relaxor_cmd(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string scratch(const std::string& name) {
  const fs::path p = fs::path(RELAXOR_TEST_OUTPUT_DIR) / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p.string();
}

nlohmann::json load(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  return nlohmann::json::parse(in);
}

}  // namespace

TEST_CASE("config file parsing") {
  using relaxor::cli::parse_config;
  const auto e = parse_config("# comment\n r = 0.6 \nt_end = 12  # trailing\n\nname = \"x y\"\n");
  REQUIRE(e.size() == 3);
  CHECK(e[0].key == "r");
  CHECK(e[0].value == "0.6");
  CHECK(e[1].key == "t-end");
  CHECK(e[1].line == 3);
  CHECK(e[2].value == "x y");
  CHECK_THROWS_AS(parse_config("r 0.5\n"), relaxor::Error);
  CHECK_THROWS_AS(parse_config("r = 0.5\nr = 0.6\n"), relaxor::Error);
}

TEST_CASE("exit codes") {
  CHECK(relaxor_cmd({}).code == 2);
  CHECK(relaxor_cmd({"frobnicate"}).code == 2);
  CHECK(relaxor_cmd({"--version"}).code == 0);
  CHECK(relaxor_cmd({"--help"}).code == 0);
  const std::string dir = scratch("exit_codes");
  CHECK(relaxor_cmd({"construct", "--out", dir}).code == 2);  // nothing to solve from
  CHECK(relaxor_cmd({"construct", "--seed", "hybrid", "--r", "1.2", "--out", dir}).code == 2);
  CHECK(relaxor_cmd({"construct", "--seed", "nosuch", "--out", dir}).code == 2);
  CHECK(relaxor_cmd({"simulate", "--state", "1,2", "--out", dir}).code == 2);
  CHECK(relaxor_cmd({"simulate", "--config", dir + "/missing.cfg", "--out", dir}).code == 2);
  CHECK(relaxor_cmd({"classify", dir + "/missing.json", "--out", dir}).code == 2);
  // a solve that cannot converge is a numerical failure
  CHECK(relaxor_cmd({"construct", "--A", "1.81,0.49,1.35", "--B", "0.51,1.59,1.40", "--max-iter", "1", "--tol",
                     "1e-300", "--out", dir})
            .code == 1);
}

TEST_CASE("flags override the config file, which overrides defaults") {
  const std::string dir = scratch("precedence");
  relaxor::cli::write_text(dir + "/run.cfg", "eps = 0.2\nt_end = 3\nsamples = 101\n");
  const Result r = relaxor_cmd({"simulate", "--config", dir + "/run.cfg", "--t-end", "2", "--out", dir});
  REQUIRE(r.code == 0);
  const auto m = load(dir + "/simulate.manifest.json");
  CHECK(m["parameters"]["t-end"]["value"] == 2.0);
  CHECK(m["parameters"]["t-end"]["source"] == "flag");
  CHECK(m["parameters"]["eps"]["value"] == 0.2);
  CHECK(m["parameters"]["eps"]["source"] == "config");
  CHECK(m["parameters"]["r"]["source"] == "default");
  const auto tr = load(dir + "/trajectory.json");
  CHECK(tr["config"]["t_end"] == 2.0);

  relaxor::cli::write_text(dir + "/bad.cfg", "no_such_key = 1\n");
  CHECK(relaxor_cmd({"simulate", "--config", dir + "/bad.cfg", "--out", dir}).code == 2);
}

TEST_CASE("the manifest lists every output") {
  const std::string dir = scratch("manifest");
  const Result r = relaxor_cmd({"construct", "--seed", "hybrid", "--samples", "400", "--out", dir});
  REQUIRE(r.code == 0);
  const auto m = load(dir + "/construct.manifest.json");
  CHECK(m["command"] == "construct");
  CHECK(m["parameters"]["r"]["source"] == "seed");
  REQUIRE(m["outputs"].size() == 2);
  for (const auto& o : m["outputs"]) CHECK(fs::exists(o["path"].get<std::string>()));
  CHECK(!m["version"].get<std::string>().empty());
  CHECK(m["summary"]["classification"]["orientation"] == "Neither");
}

TEST_CASE("construct then classify reproduces the labels") {
  const std::string dir = scratch("taxonomy");
  struct Case {
    const char* seed;
    const char* label;
  };
  for (Case c : {Case{"antiphase", "PreyPreyAntiphase"}, Case{"predpreyprey", "PredatorPreyPrey"},
                 Case{"predp2", "PredatorPrey2Alternating"}}) {
    CAPTURE(c.seed);
    const std::string sub = dir + "/" + c.seed;
    REQUIRE(relaxor_cmd({"construct", "--seed", c.seed, "--out", sub}).code == 0);
    REQUIRE(relaxor_cmd({"classify", sub + "/orbit.json", "--out", sub}).code == 0);
    const auto rep = load(sub + "/classification.json");
    CHECK(rep["label"] == c.label);
    CHECK(rep["kind"] == "singular-orbit");
  }
}

TEST_CASE("scan writes matching JSON and CSV tables") {
  const std::string dir = scratch("scan");
  REQUIRE(relaxor_cmd({"scan", "--first", "1.2,2.4,3", "--second", "1.0,1.6,3", "--out", dir}).code == 0);
  const auto j = load(dir + "/family.json");
  std::ifstream csv(dir + "/family.csv");
  std::string header;
  std::getline(csv, header);
  std::string joined;
  for (const auto& c : j["columns"]) joined += (joined.empty() ? "" : ",") + c.get<std::string>();
  CHECK(header == joined);
  CHECK(fs::exists(dir + "/family.svg"));
}

TEST_CASE("simulate and classify a CSV trajectory") {
  const std::string dir = scratch("csv");
  REQUIRE(relaxor_cmd({"simulate", "--eps", "0.05", "--t-end", "40", "--out", dir}).code == 0);
  const std::string svg = [&] {
    std::ifstream in(dir + "/trajectory.svg");
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }();
  CHECK(svg.find("stroke-dasharray") != std::string::npos);
  REQUIRE(relaxor_cmd({"classify", dir + "/trajectory.csv", "--eps", "0.05", "--name", "fromcsv", "--out", dir}).code ==
          0);
  const auto rep = load(dir + "/fromcsv.json");
  CHECK(rep["kind"] == "trajectory-csv");
  CHECK(rep.contains("label"));
}
