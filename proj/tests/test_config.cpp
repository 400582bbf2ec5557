#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <sys/wait.h>

#include "bosonize/app.hpp"
#include "bosonize/config.hpp"
#include "bosonize/standard_models.hpp"

using namespace bosonize;
namespace fs = std::filesystem;

namespace {

const char* kMinimal = R"({
  "model": {
    "system": {
      "hamiltonian": [[[0.5, 0], [0, 0]], [[0, 0], [-0.5, 0]]],
      "state": [[[1, 0], [0, 0]], [[0, 0], [0, 0]]],
      "couplings": [[[[0, 0], [0, 0]], [[1, 0], [0, 0]]]]
    },
    "component": {
      "hamiltonian": [[[1, 0], [0, 0]], [[0, 0], [0, 0]]],
      "state": [[[0.75, 0], [0, 0]], [[0, 0], [0.25, 0]]],
      "couplings": [[[[0, 0], [1, 0]], [[0, 0], [0, 0]]]]
    }
  }
})";

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("bosonize_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(BOSONIZE_CLI) + " " + args + " --quiet 2>/dev/null";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Config, MinimalUsesDefaults) {
  const RunConfig c = parse_config_text(kMinimal);
  EXPECT_EQ(c.fock.cutoff, 4);
  EXPECT_TRUE(c.fock.adaptive);
  EXPECT_EQ(c.dyson.order, 4);
  EXPECT_EQ(c.ms, (std::vector<int>{2, 4, 8}));
  EXPECT_EQ(c.format, "csv");
  EXPECT_EQ(c.tol.herm, Tolerances{}.herm);
  EXPECT_LT(max_abs(c.model.component.couplings[0] - models::sigma_plus()), 1e-15);
  EXPECT_EQ(c.digest.size(), 16u);
}

TEST(Config, DigestIgnoresKeyOrderAndOutputPath) {
  const RunConfig a = parse_config_text(kMinimal);
  nlohmann::json doc = nlohmann::json::parse(kMinimal);
  nlohmann::ordered_json reordered;
  reordered["output"] = {{"path", "elsewhere"}};
  reordered["model"]["component"] = doc["model"]["component"];
  reordered["model"]["system"] = doc["model"]["system"];
  const RunConfig b = parse_config_text(reordered.dump());
  EXPECT_EQ(a.digest, b.digest);
  ConfigOverrides ov;
  ov.tolerances["tol_pop"] = 1e-9;
  EXPECT_NE(parse_config_text(kMinimal, ".", ov).digest, a.digest);
}

TEST(Config, SchemaErrorsAreCollected) {
  nlohmann::json doc = nlohmann::json::parse(kMinimal);
  doc["model"]["system"]["hamiltonian"][1] = {{0, 0}};  // short row
  doc["fock"]["cutof"] = 3;                              // typo
  doc["times"]["steps"] = -1;
  try {
    config_from_json(doc);
    FAIL() << "expected SchemaError";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::SchemaError);
    const std::string msg = e.what();
    EXPECT_NE(msg.find("/model/system/hamiltonian"), std::string::npos) << msg;
    EXPECT_NE(msg.find("/fock/cutof"), std::string::npos) << msg;
    EXPECT_NE(msg.find("/times/steps"), std::string::npos) << msg;
  }
}

TEST(Config, ParseErrorHasLocation) {
  try {
    parse_config_text("{\n  \"model\": [1,\n}", ".", {}, "broken.json");
    FAIL() << "expected ParseError";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ParseError);
    EXPECT_NE(std::string(e.what()).find("broken.json:3"), std::string::npos) << e.what();
  }
}

TEST(Config, UnknownToleranceKey) {
  ConfigOverrides ov;
  ov.tolerances["nope"] = 1.0;
  EXPECT_THROW(parse_config_text(kMinimal, ".", ov), Error);
}

TEST(Config, ModelFromFile) {
  const fs::path dir = scratch("model_file");
  const nlohmann::json doc = nlohmann::json::parse(kMinimal);
  std::ofstream(dir / "model.json") << doc["model"].dump();
  std::ofstream(dir / "run.json") << R"({"model": "model.json", "times": {"t_max": 1.0, "steps": 4}})";
  const RunConfig c = parse_config(dir / "run.json");
  EXPECT_EQ(c.model_source, "model.json");
  EXPECT_EQ(c.times.points().size(), 5u);
}

TEST(Config, BundledConfigsParseAndValidate) {
  for (const char* name : {"qubit.json", "multimode.json", "braun.json", "nondemolition.json"}) {
    const RunConfig c = parse_config(fs::path(BOSONIZE_CONFIG_DIR) / name);
    EXPECT_TRUE(validate(c.model, c.tol).passed()) << name;
  }
}

TEST(Output, NumberFormatting) {
  EXPECT_EQ(format_number(0.1), "0.10000000000000001");
  EXPECT_EQ(format_number(std::nan("")), "nan");
  Table t{{"a", "b"}, {{1.0, 0.5}}};
  const std::string csv = render_csv(t, OutputMeta{"abc", {}, {}});
  EXPECT_NE(csv.find("# config_digest: abc\n"), std::string::npos);
  EXPECT_NE(csv.find("a,b\n1,0.5\n"), std::string::npos);
}

TEST(Cli, ValidateAndExitCodes) {
  const fs::path dir = scratch("cli");
  std::ofstream(dir / "run.json") << kMinimal;
  EXPECT_EQ(run_cli("validate --config " + (dir / "run.json").string() + " --output " + (dir / "ok").string()), 0);
  EXPECT_TRUE(fs::exists(dir / "ok" / "validation.json"));

  nlohmann::json bad = nlohmann::json::parse(kMinimal);
  bad["model"]["component"]["state"] = {{{0.5, 0}, {0.5, 0}}, {{0.5, 0}, {0.5, 0}}};
  std::ofstream(dir / "bad.json") << bad.dump();
  EXPECT_EQ(run_cli("validate --config " + (dir / "bad.json").string() + " --output " + (dir / "bad").string()), 2);

  nlohmann::json big = nlohmann::json::parse(kMinimal);
  big["finite_m"] = {{"M", {30}}};
  std::ofstream(dir / "big.json") << big.dump();
  EXPECT_EQ(run_cli("simulate-finite --config " + (dir / "big.json").string() + " --output " + (dir / "big").string()),
            3);
  const auto err = nlohmann::json::parse(slurp(dir / "big" / "error.json"));
  EXPECT_EQ(err["error"], "DimensionOverflow");

  EXPECT_EQ(run_cli("validate --config " + (dir / "run.json").string() + " --tol bogus=1"), 2);
  EXPECT_NE(run_cli("frobnicate --config " + (dir / "run.json").string()), 0);
}

TEST(Cli, CompareTable) {
  const fs::path dir = scratch("compare");
  nlohmann::json doc = nlohmann::json::parse(kMinimal);
  doc["times"] = {{"t_max", 1.5}, {"steps", 15}};
  doc["finite_m"] = {{"M", {2, 4, 8}}};
  doc["dyson"] = {{"order", 2}, {"quadrature_points", 6}};
  std::ofstream(dir / "run.json") << doc.dump();
  ASSERT_EQ(run_cli("compare --config " + (dir / "run.json").string() + " --output " + dir.string()), 0);
  std::istringstream in(slurp(dir / "compare.csv"));
  std::string line;
  std::vector<double> distances;
  bool header = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      EXPECT_EQ(line, "M,distance,ratio_next,bosonic_vs_dyson");
      header = true;
      continue;
    }
    const auto c1 = line.find(','), c2 = line.find(',', c1 + 1);
    distances.push_back(std::stod(line.substr(c1 + 1, c2 - c1 - 1)));
  }
  ASSERT_EQ(distances.size(), 3u);
  EXPECT_GT(distances[0], distances[1]);
  EXPECT_GT(distances[1], distances[2]);
}
