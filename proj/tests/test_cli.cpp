#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "polyflux/cli.hpp"

using namespace polyflux;
using nlohmann::json;

namespace {

json base() {
  return json::parse(R"({
    "flux": {"breaks": [0], "slopes": [-1, 1], "anchor": 0},
    "initial_data": {"type": "polynomial", "coeffs": [0, 0, 1]},
    "grid": {"x_min": -2, "x_max": 2, "points": 41, "t": [1]}
  })");
}

std::string config_error_key(const json& j, const std::string& command) {
  try {
    parse_config(j, command);
  } catch (const ConfigError& e) {
    return e.key();
  }
  return "";
}

class TempDir {
 public:
  TempDir() : path_(std::filesystem::temp_directory_path() / ("polyflux_cli_" + std::to_string(::getpid()))) {
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() { std::filesystem::remove_all(path_); }
  std::string str() const { return path_.string(); }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

}  // namespace

TEST(ParseConfig, Defaults) {
  const auto c = parse_config(base(), "solve");
  EXPECT_EQ(c.command, "solve");
  EXPECT_EQ(c.grid.points, 41);
  EXPECT_EQ(c.search.tie_eta, 1e-9);
  const auto r = resolve(c);
  EXPECT_EQ(r.at("grid").at("points"), 41);
  EXPECT_EQ(config_hash(r), config_hash(resolve(parse_config(base(), "solve"))));
}

TEST(ParseConfig, ErrorsNameTheKey) {
  auto j = base();
  j["grid"]["pionts"] = 3;
  EXPECT_EQ(config_error_key(j, "solve"), "grid.pionts");
  j = base();
  j["grid"]["points"] = "many";
  EXPECT_EQ(config_error_key(j, "solve"), "grid.points");
  j = base();
  j.erase("initial_data");
  EXPECT_EQ(config_error_key(j, "solve"), "initial_data");
  EXPECT_EQ(config_error_key(j, "conjugate"), "");
  j = base();
  j["initial_data"] = {{"type", "spline"}};
  EXPECT_EQ(config_error_key(j, "solve"), "initial_data.type");
  EXPECT_EQ(config_error_key(base(), "integrate"), "command");
  j = base();
  j["epsilons"] = {0.1, 0.2};
  EXPECT_EQ(config_error_key(j, "mollify"), "epsilons");
  j = base();
  j["flux"].erase("anchor");
  EXPECT_EQ(config_error_key(j, "solve"), "anchor");
}

TEST(ParseConfig, NonConvexFluxMentionsSlopes) {
  auto j = base();
  j["flux"] = {{"breaks", {0, 1}}, {"slopes", {-1, 2, 1}}, {"anchor", 0}};
  try {
    parse_config(j, "solve");
    FAIL() << "expected ConvexityError";
  } catch (const ConvexityError& e) {
    EXPECT_NE(std::string(e.what()).find("slopes"), std::string::npos);
  }
}

TEST(Execute, SolveWritesTaggedCsv) {
  TempDir dir;
  auto c = parse_config(base(), "solve");
  c.out_dir = dir.str();
  EXPECT_EQ(execute(c), kExitOk);
  std::ifstream in(dir.file("solution_t0.csv"));
  std::string first;
  std::getline(in, first);
  EXPECT_EQ(first.rfind("# config_hash=", 0), 0u);
  const auto cols = read_csv_columns(dir.file("solution_t0.csv"), {"x", "w"});
  ASSERT_EQ(cols[0].size(), 41u);
  for (std::size_t i = 0; i < 41; ++i) {
    const double x = cols[0][i];
    const double exact = std::abs(x) <= 1 ? 0.0 : (x > 0 ? 2 * (x - 1) : 2 * (x + 1));
    EXPECT_NEAR(cols[1][i], exact, 1e-8) << x;
  }
  EXPECT_TRUE(std::filesystem::exists(dir.file("solution.json")));
}

TEST(Execute, VerifyDetectsCorruptField) {
  TempDir dir;
  auto c = parse_config(base(), "solve");
  c.out_dir = dir.str();
  ASSERT_EQ(execute(c), kExitOk);
  auto v = base();
  v["field_file"] = dir.file("solution_t0.csv");
  auto vc = parse_config(v, "verify");
  vc.out_dir = dir.str();
  EXPECT_EQ(execute(vc), kExitOk);

  // Swap two y_star entries so the field is no longer monotone.
  std::ifstream in(dir.file("solution_t0.csv"));
  std::vector<std::string> lines;
  for (std::string l; std::getline(in, l);) lines.push_back(l);
  in.close();
  std::swap(lines[5], lines[35]);
  std::ofstream out(dir.file("bad.csv"));
  for (const auto& l : lines) out << l << '\n';
  out.close();
  v["field_file"] = dir.file("bad.csv");
  vc = parse_config(v, "verify");
  vc.out_dir = dir.str();
  EXPECT_EQ(execute(vc), kExitCheckFailed);
}

TEST(Execute, DiscreteNeedsPiecewiseConstant) {
  TempDir dir;
  auto c = parse_config(base(), "discrete");
  c.out_dir = dir.str();
  EXPECT_THROW(execute(c), ConfigError);
}
