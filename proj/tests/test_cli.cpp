#include <doctest.h>

#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "lpvce/cli.hpp"
#include "lpvce/geometry.hpp"
#include "lpvce/image.hpp"
#include "lpvce/mlp.hpp"

using namespace lpvce;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("lpvce_cli_" + std::to_string(std::rand()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string str(const std::string& name = "") const { return (path / name).string(); }
};

json read_json(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  json j;
  in >> j;
  return j;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int train_fixture(const TempDir& dir) {
  return dispatch({"train", "--out", dir.str("model.bin"), "--synthetic-seed", "1",
                   "--classes", "3", "--image-size", "8", "--per-class", "200",
                   "--epochs", "6", "--seed", "3", "--dump-images", "2",
                   "--dump-dir", dir.str()});
}

}  // namespace

TEST_CASE("png round-trip through the quantized format") {
  TempDir dir;
  Image img;
  img.height = 5;
  img.width = 4;
  img.channels = 3;
  img.data.resize(img.value_count());
  for (int i = 0; i < img.value_count(); ++i) img.data[i] = (i % 256) / 255.0;
  write_png(img, dir.str("rt.png"));
  const Image back = read_png(dir.str("rt.png"));
  REQUIRE(back.height == 5);
  REQUIRE(back.width == 4);
  REQUIRE(back.channels == 3);
  for (int i = 0; i < img.value_count(); ++i)
    REQUIRE(back.data[i] == doctest::Approx(img.data[i]).epsilon(1e-12));
}

TEST_CASE("train -> calibrate -> vce pipeline artifacts") {
  TempDir dir;
  REQUIRE(train_fixture(dir) == 0);
  REQUIRE(fs::exists(dir.str("model.bin")));
  REQUIRE(fs::exists(dir.str("sample_0.png")));

  const double t_before = load_model(dir.str("model.bin")).temperature;
  REQUIRE(dispatch({"calibrate", "--model", dir.str("model.bin"), "--synthetic-seed", "1",
                    "--classes", "3", "--image-size", "8", "--per-class", "200"}) == 0);
  const MlpClassifier calibrated = load_model(dir.str("model.bin"));
  CHECK(calibrated.temperature > 0.0);
  (void)t_before;

  REQUIRE(dispatch({"vce", "--model", dir.str("model.bin"), "--image", dir.str("sample_0.png"),
                    "--target", "second", "--p", "1.5", "--eps", "1.2", "--iters", "40",
                    "--restarts", "3", "--seed", "0", "--out-dir", dir.str("out")}) == 0);
  REQUIRE(fs::exists(dir.str("out/cf.png")));
  REQUIRE(fs::exists(dir.str("out/diff.png")));

  // Round-trip: re-read the result file and re-verify feasibility/validity.
  const json result = read_json(dir.str("out/result.json"));
  const MlpClassifier model = load_model(dir.str("model.bin"));
  const Image original = read_png(dir.str("sample_0.png"));
  const std::vector<double> cf_values = result["counterfactual"].get<std::vector<double>>();
  Eigen::VectorXd cf(static_cast<int>(cf_values.size()));
  for (int i = 0; i < cf.size(); ++i) cf[i] = cf_values[i];

  const FeasibleRegion region(original.to_vector(), result["eps"].get<double>(),
                              result["p"].get<double>());
  CHECK(region.contains(cf));
  CHECK((model.predict(cf) == result["target"].get<int>()) == result["valid"].get<bool>());
  CHECK(result["p_end"].get<double>() ==
        doctest::Approx(std::exp(result["best_objective"].get<double>())));

  // Bit-for-bit reproducibility of artifacts under the same seed.
  REQUIRE(dispatch({"vce", "--model", dir.str("model.bin"), "--image", dir.str("sample_0.png"),
                    "--target", "second", "--p", "1.5", "--eps", "1.2", "--iters", "40",
                    "--restarts", "3", "--seed", "0", "--out-dir", dir.str("out2")}) == 0);
  CHECK(slurp(dir.str("out/result.json")) == slurp(dir.str("out2/result.json")));
  CHECK(slurp(dir.str("out/cf.png")) == slurp(dir.str("out2/cf.png")));
}

TEST_CASE("config file precedence: flags > config > defaults") {
  TempDir dir;
  REQUIRE(train_fixture(dir) == 0);
  {
    std::ofstream out(dir.str("config.json"));
    out << R"({"iters": 7, "restarts": 2})";
  }

  REQUIRE(dispatch({"vce", "--config", dir.str("config.json"), "--model", dir.str("model.bin"),
                    "--image", dir.str("sample_0.png"), "--eps", "0.8",
                    "--out-dir", dir.str("a")}) == 0);
  const json from_config = read_json(dir.str("a/result.json"));
  CHECK(from_config["iterations"].get<int>() == 7);
  CHECK(from_config["restarts"].get<int>() == 2);

  REQUIRE(dispatch({"vce", "--config", dir.str("config.json"), "--model", dir.str("model.bin"),
                    "--image", dir.str("sample_0.png"), "--eps", "0.8", "--iters", "9",
                    "--out-dir", dir.str("b")}) == 0);
  const json from_flag = read_json(dir.str("b/result.json"));
  CHECK(from_flag["iterations"].get<int>() == 9);
  CHECK(from_flag["restarts"].get<int>() == 2);

  // Defaults when neither source pins the value.
  REQUIRE(dispatch({"vce", "--model", dir.str("model.bin"), "--image", dir.str("sample_0.png"),
                    "--eps", "0.8", "--iters", "5", "--out-dir", dir.str("c")}) == 0);
  CHECK(read_json(dir.str("c/result.json"))["restarts"].get<int>() == 5);
}

TEST_CASE("invalid configurations exit nonzero") {
  TempDir dir;
  REQUIRE(train_fixture(dir) == 0);
  CHECK(dispatch({"vce", "--model", dir.str("model.bin"), "--image", dir.str("sample_0.png"),
                  "--method", "apgd", "--p", "1.5", "--eps", "1.0",
                  "--out-dir", dir.str("x")}) != 0);
  CHECK(dispatch({"nonsense"}) != 0);
  CHECK(dispatch({}) != 0);
  CHECK(dispatch({"vce", "--model", dir.str("missing.bin"), "--image", dir.str("sample_0.png"),
                  "--eps", "1.0"}) != 0);
}

TEST_CASE("sweep panel and per-radius json") {
  TempDir dir;
  REQUIRE(train_fixture(dir) == 0);
  REQUIRE(dispatch({"sweep", "--model", dir.str("model.bin"), "--image", dir.str("sample_0.png"),
                    "--radii", "0.5,1.0,2.0", "--iters", "30", "--restarts", "2",
                    "--seed", "1", "--out-dir", dir.str("sweep")}) == 0);
  const Image panel = read_png(dir.str("sweep/panel.png"));
  CHECK(panel.width == 8 * 4);  // original + three counterfactuals
  CHECK(panel.height == 8);
  const json sweep = read_json(dir.str("sweep/sweep.json"));
  REQUIRE(sweep["results"].size() == 3);
  CHECK(sweep["results"][0]["eps"].get<double>() == 0.5);

  CHECK(dispatch({"sweep", "--model", dir.str("model.bin"), "--image", dir.str("sample_0.png"),
                  "--radii", "2.0,1.0", "--out-dir", dir.str("bad")}) != 0);
}

TEST_CASE("bench command writes the documented csv schema") {
  TempDir dir;
  REQUIRE(train_fixture(dir) == 0);
  REQUIRE(dispatch({"bench", "--model", dir.str("model.bin"), "--synthetic-seed", "1",
                    "--classes", "3", "--image-size", "8", "--per-class", "200",
                    "--sample", "3", "--budgets", "5", "--eps", "1.0", "--seed", "0",
                    "--out", dir.str("bench.csv")}) == 0);
  const std::string csv = slurp(dir.str("bench.csv"));
  CHECK(csv.rfind("method,gamma0,budget,mean_log_prob,n\n", 0) == 0);
  int lines = 0;
  for (char c : csv)
    if (c == '\n') ++lines;
  CHECK(lines == 1 + 22);
}

TEST_CASE("metrics command") {
  TempDir dir;
  Image original;
  original.height = 6;
  original.width = 6;
  original.channels = 1;
  original.data.assign(36, 0.5);
  Image changed = original;
  changed.at(2, 5) = 1.0;
  Image mask_img = original;
  mask_img.data.assign(36, 0.0);
  mask_img.at(2, 2) = 1.0;
  write_png(original, dir.str("orig.png"));
  write_png(changed, dir.str("cf.png"));
  write_png(mask_img, dir.str("mask.png"));

  REQUIRE(dispatch({"metrics", "--original", dir.str("orig.png"), "--counterfactual",
                    dir.str("cf.png"), "--mask", dir.str("mask.png"), "--out",
                    dir.str("metrics.json")}) == 0);
  const json metrics = read_json(dir.str("metrics.json"));
  CHECK(metrics["expected_distance"].get<double>() == doctest::Approx(3.0));
  CHECK(metrics["mass_in_mask"].get<double>() == 0.0);
  CHECK(metrics["iou_at_095"].get<double>() == 0.0);
}

TEST_CASE("oracle-check command is deterministic and passes") {
  const auto run_captured = [](const std::vector<std::string>& args) {
    std::ostringstream captured;
    std::streambuf* saved = std::cout.rdbuf(captured.rdbuf());
    const int code = dispatch(args);
    std::cout.rdbuf(saved);
    return std::make_pair(code, captured.str());
  };
  const auto first = run_captured({"oracle-check", "--trials", "60", "--seed", "0"});
  const auto second = run_captured({"oracle-check", "--trials", "60", "--seed", "0"});
  CHECK(first.first == 0);
  CHECK(second.first == 0);
  CHECK(first.second == second.second);
  CHECK(first.second.find("passed") != std::string::npos);
}

TEST_CASE("env var provides the default output directory") {
  TempDir dir;
  REQUIRE(train_fixture(dir) == 0);
  const std::string env_dir = dir.str("from_env");
  setenv("LPVCE_OUT_DIR", env_dir.c_str(), 1);
  const int code = dispatch({"vce", "--model", dir.str("model.bin"), "--image",
                             dir.str("sample_0.png"), "--eps", "0.8", "--iters", "5",
                             "--restarts", "1"});
  unsetenv("LPVCE_OUT_DIR");
  REQUIRE(code == 0);
  CHECK(fs::exists(env_dir + "/result.json"));
}
