#include "lpvce/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "lpvce/benchmark.hpp"
#include "lpvce/calibration.hpp"
#include "lpvce/metrics.hpp"
#include "lpvce/oracle.hpp"
#include "lpvce/vce.hpp"

namespace lpvce {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

json load_config(const std::vector<std::string>& args) {
  for (std::size_t i = 0; i + 1 < args.size(); ++i) {
    if (args[i] == "--config") {
      std::ifstream in(args[i + 1]);
      if (!in) throw std::runtime_error("cannot open config file " + args[i + 1]);
      json cfg;
      in >> cfg;
      return cfg;
    }
  }
  return json::object();
}

std::string default_out_dir(const json& cfg) {
  if (const char* env = std::getenv("LPVCE_OUT_DIR")) return env;
  if (cfg.contains("out_dir")) return cfg["out_dir"].get<std::string>();
  return ".";
}

// Shared generation options with the documented defaults (p = 1.5, 75
// iterations, 5 restarts, adaptive Frank-Wolfe).
struct GenerateFlags {
  std::string model_path;
  std::string method = "afw";
  double gamma0 = 0.3;
  double exponent = presets::kDefaultExponent;
  int iterations = presets::kDefaultIterations;
  int restarts = presets::kDefaultRestarts;
  std::uint64_t seed = 0;
  int threads = 1;

  void attach(CLI::App* cmd, const json& cfg) {
    const auto d = [&cfg](const char* key, double v) {
      return cfg.contains(key) ? cfg[key].get<double>() : v;
    };
    const auto i = [&cfg](const char* key, int v) {
      return cfg.contains(key) ? cfg[key].get<int>() : v;
    };
    if (cfg.contains("method")) method = cfg["method"].get<std::string>();
    gamma0 = d("gamma0", gamma0);
    exponent = d("p", exponent);
    iterations = i("iters", iterations);
    restarts = i("restarts", restarts);
    seed = static_cast<std::uint64_t>(i("seed", static_cast<int>(seed)));
    threads = i("threads", threads);

    cmd->add_option("--model", model_path, "model file")->required();
    cmd->add_option("--method", method, "afw|apgd|fw-constant|fw-decaying");
    cmd->add_option("--gamma0", gamma0, "step parameter for fw-constant/fw-decaying");
    cmd->add_option("--p", exponent, "norm exponent (inf for sup-norm)");
    cmd->add_option("--iters", iterations, "iterations per restart");
    cmd->add_option("--restarts", restarts, "number of restarts");
    cmd->add_option("--seed", seed, "random seed");
    cmd->add_option("--threads", threads, "worker pool size");
  }

  Method to_method() const {
    if (method == "afw") return Method::afw();
    if (method == "apgd") return Method::apgd();
    if (method == "fw-constant") return Method::fw_constant(gamma0);
    if (method == "fw-decaying") return Method::fw_decaying(gamma0);
    throw std::invalid_argument("unknown method: " + method);
  }
};

struct DatasetFlags {
  std::string idx_images, idx_labels;
  std::uint64_t synthetic_seed = 0;
  int classes = 4;
  int image_size = 12;
  int per_class = 600;

  void attach(CLI::App* cmd, const json& cfg) {
    const auto i = [&cfg](const char* key, int v) {
      return cfg.contains(key) ? cfg[key].get<int>() : v;
    };
    classes = i("classes", classes);
    image_size = i("image_size", image_size);
    per_class = i("per_class", per_class);
    cmd->add_option("--idx-images", idx_images, "IDX image file");
    cmd->add_option("--idx-labels", idx_labels, "IDX label file");
    cmd->add_option("--synthetic-seed", synthetic_seed, "seed for the built-in blob dataset");
    cmd->add_option("--classes", classes, "synthetic class count");
    cmd->add_option("--image-size", image_size, "synthetic image side length");
    cmd->add_option("--per-class", per_class, "synthetic samples per class");
  }

  Dataset load() const {
    if (!idx_images.empty() || !idx_labels.empty()) {
      if (idx_images.empty() || idx_labels.empty())
        throw std::invalid_argument("both --idx-images and --idx-labels are required");
      return load_idx_dataset(idx_images, idx_labels);
    }
    BlobsConfig config;
    config.classes = classes;
    config.image_size = image_size;
    config.per_class = per_class;
    config.seed = synthetic_seed;
    return make_blobs_dataset(config);
  }
};

json exponent_json(double p) {
  if (std::isinf(p)) return json("inf");
  return json(p);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

json vce_result_json(const VceResult& result, const VceRequest& request,
                     const MlpClassifier& model) {
  json j;
  j["target"] = request.target;
  j["p"] = exponent_json(request.exponent);
  j["eps"] = request.radius;
  j["iterations"] = request.iterations;
  j["restarts"] = request.restarts;
  j["seed"] = request.seed;
  j["p_initial"] = result.p_initial;
  j["p_end"] = result.p_end;
  j["valid"] = result.valid;
  j["best_objective"] = result.best_objective;
  j["restart_objectives"] = result.restart_objectives;
  j["image_shape"] = {{"height", model.image_height},
                      {"width", model.image_width},
                      {"channels", model.image_channels}};
  j["counterfactual"] = std::vector<double>(result.counterfactual.data(),
                                            result.counterfactual.data() +
                                                result.counterfactual.size());
  return j;
}

int resolve_target(const std::string& spec, const MlpClassifier& model,
                   const Eigen::VectorXd& image) {
  if (spec == "second") return pick_target_second(model, image);
  return std::stoi(spec);
}

Image image_for_model(const MlpClassifier& model, const Eigen::VectorXd& flat) {
  const int h = model.image_height > 0 ? model.image_height : 1;
  const int w = model.image_width > 0 ? model.image_width : static_cast<int>(flat.size());
  const int c = model.image_channels > 0 ? model.image_channels : 1;
  return Image::from_vector(flat, h, w, c);
}

int cmd_train(const std::vector<std::string>& args, const json& cfg);
int cmd_calibrate(const std::vector<std::string>& args, const json& cfg);
int cmd_vce(const std::vector<std::string>& args, const json& cfg);
int cmd_sweep(const std::vector<std::string>& args, const json& cfg);
int cmd_bench(const std::vector<std::string>& args, const json& cfg);
int cmd_metrics(const std::vector<std::string>& args, const json& cfg);
int cmd_scaling(const std::vector<std::string>& args, const json& cfg);
int cmd_oracle_check(const std::vector<std::string>& args, const json& cfg);

int run_app(CLI::App& app, const std::vector<std::string>& args) {
  // CLI11 wants argv in reverse order when parsing from a vector.
  std::vector<std::string> reversed(args.rbegin(), args.rend());
  app.parse(reversed);
  return 0;
}

int cmd_train(const std::vector<std::string>& args, const json& cfg) {
  CLI::App app{"train a classifier"};
  app.allow_extras(false);
  std::string out_path = "model.bin";
  std::string hidden = cfg.contains("hidden") ? cfg["hidden"].get<std::string>() : "32";
  TrainConfig train;
  train.epochs = cfg.contains("epochs") ? cfg["epochs"].get<int>() : train.epochs;
  train.learning_rate = cfg.contains("lr") ? cfg["lr"].get<double>() : train.learning_rate;
  train.batch_size = cfg.contains("batch") ? cfg["batch"].get<int>() : train.batch_size;
  DatasetFlags dataset;
  std::string config_path;
  int dump_images = 0;
  std::string dump_dir = default_out_dir(cfg);
  app.add_option("--config", config_path, "JSON config file");
  app.add_option("--out", out_path, "output model file")->required();
  app.add_option("--hidden", hidden, "comma-separated hidden layer sizes (empty for linear)");
  app.add_option("--epochs", train.epochs, "training epochs");
  app.add_option("--lr", train.learning_rate, "learning rate");
  app.add_option("--batch", train.batch_size, "mini-batch size");
  app.add_option("--seed", train.seed, "training seed");
  app.add_option("--dump-images", dump_images, "also write N test-split PNGs for the pipeline");
  app.add_option("--dump-dir", dump_dir, "directory for dumped images");
  dataset.attach(&app, cfg);
  run_app(app, args);

  train.hidden.clear();
  std::stringstream ss(hidden);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) train.hidden.push_back(std::stoi(item));

  const Dataset data = dataset.load();
  TrainReport report;
  const MlpClassifier model = train_mlp(train, data, &report);
  save_model(model, out_path);

  json j;
  j["model"] = out_path;
  j["train_accuracy"] = report.train_accuracy;
  j["test_accuracy"] = report.test_accuracy;
  j["epoch_mean_loss"] = report.epoch_mean_loss;

  if (dump_images > 0) {
    fs::create_directories(dump_dir);
    json dumped = json::array();
    const std::vector<int> test_idx = data.indices(Split::Test);
    for (int i = 0; i < dump_images && i < static_cast<int>(test_idx.size()); ++i) {
      const int idx = test_idx[i];
      const std::string name = "sample_" + std::to_string(i) + ".png";
      write_png(Image::from_vector(data.features[idx], data.image_height, data.image_width,
                                   data.image_channels),
                (fs::path(dump_dir) / name).string());
      dumped.push_back({{"file", name}, {"label", data.labels[idx]}});
    }
    j["dumped_images"] = dumped;
  }
  std::cout << j.dump(2) << "\n";
  return 0;
}

int cmd_calibrate(const std::vector<std::string>& args, const json& cfg) {
  CLI::App app{"temperature-calibrate a model on the calibration split"};
  std::string model_path;
  std::string config_path;
  int bins = cfg.contains("bins") ? cfg["bins"].get<int>() : 15;
  DatasetFlags dataset;
  app.add_option("--config", config_path, "JSON config file");
  app.add_option("--model", model_path, "model file (updated in place)")->required();
  app.add_option("--bins", bins, "ECE bin count");
  dataset.attach(&app, cfg);
  run_app(app, args);

  MlpClassifier model = load_model(model_path);
  const Dataset data = dataset.load();
  const double ece_before =
      expected_calibration_error(model, data, Split::Calibration, bins);
  const double t_before = model.temperature;
  model.temperature = calibrate_temperature(model, data, Split::Calibration, bins);
  const double ece_after = expected_calibration_error(model, data, Split::Calibration, bins);
  save_model(model, model_path);

  json j;
  j["temperature_before"] = t_before;
  j["temperature_after"] = model.temperature;
  j["ece_before"] = ece_before;
  j["ece_after"] = ece_after;
  std::cout << j.dump(2) << "\n";
  return 0;
}

int cmd_vce(const std::vector<std::string>& args, const json& cfg) {
  CLI::App app{"generate a counterfactual"};
  GenerateFlags gen;
  std::string image_path, target = "second", out_dir = default_out_dir(cfg);
  std::string config_path;
  double eps = cfg.contains("eps") ? cfg["eps"].get<double>() : 0.0;
  double penalized_lambda = 0.0;
  app.add_option("--config", config_path, "JSON config file");
  gen.attach(&app, cfg);
  app.add_option("--image", image_path, "input PNG")->required();
  app.add_option("--target", target, "target class index, or 'second'");
  app.add_option("--eps", eps, "perturbation budget");
  app.add_option("--out-dir", out_dir, "output directory");
  app.add_option("--penalized-lambda", penalized_lambda,
                 "optimize the penalized objective by plain gradient descent instead");
  run_app(app, args);
  if (penalized_lambda <= 0.0 && !(eps > 0.0))
    throw std::invalid_argument("--eps is required (or use --penalized-lambda)");

  const MlpClassifier model = load_model(gen.model_path);
  const Image input = read_png(image_path);
  if (input.value_count() != model.input_dim())
    throw std::invalid_argument("image does not match the model input size");
  const Eigen::VectorXd x0 = input.to_vector();
  const int k = resolve_target(target, model, x0);

  fs::create_directories(out_dir);

  if (penalized_lambda > 0.0) {
    const Eigen::VectorXd x = minimize_penalized(model, k, x0, penalized_lambda,
                                                 gen.exponent, gen.iterations, 0.5);
    const Image cf = image_for_model(model, x);
    write_png(cf, (fs::path(out_dir) / "cf.png").string());
    write_png(difference_map(input, cf), (fs::path(out_dir) / "diff.png").string());
    json j;
    j["mode"] = "penalized";
    j["lambda"] = penalized_lambda;
    j["target"] = k;
    j["p"] = exponent_json(gen.exponent);
    j["p_initial"] = std::exp(log_prob(model, k, x0));
    j["p_end"] = std::exp(log_prob(model, k, x));
    j["valid"] = model.predict(x) == k;
    j["distance"] = lp_norm(x - x0, gen.exponent);
    write_text(fs::path(out_dir) / "result.json", j.dump(2) + "\n");
    std::cout << j.dump(2) << "\n";
    return 0;
  }

  VceRequest request;
  request.image = x0;
  request.target = k;
  request.exponent = gen.exponent;
  request.radius = eps;
  request.method = gen.to_method();
  request.iterations = gen.iterations;
  request.restarts = gen.restarts;
  request.seed = gen.seed;
  request.threads = gen.threads;

  const VceResult result = generate_vce(model, request);
  const Image cf = image_for_model(model, result.counterfactual);
  write_png(cf, (fs::path(out_dir) / "cf.png").string());
  write_png(difference_map(input, cf), (fs::path(out_dir) / "diff.png").string());
  const json j = vce_result_json(result, request, model);
  write_text(fs::path(out_dir) / "result.json", j.dump(2) + "\n");

  json summary = j;
  summary.erase("counterfactual");
  std::cout << summary.dump(2) << "\n";
  return 0;
}

int cmd_sweep(const std::vector<std::string>& args, const json& cfg) {
  CLI::App app{"counterfactual panel across radii"};
  GenerateFlags gen;
  std::string image_path, target = "second", out_dir = default_out_dir(cfg);
  std::string radii_spec = cfg.contains("radii") ? cfg["radii"].get<std::string>() : "";
  std::string config_path;
  app.add_option("--config", config_path, "JSON config file");
  gen.attach(&app, cfg);
  app.add_option("--image", image_path, "input PNG")->required();
  app.add_option("--target", target, "target class index, or 'second'");
  app.add_option("--radii", radii_spec, "comma-separated ascending radii")->required();
  app.add_option("--out-dir", out_dir, "output directory");
  run_app(app, args);

  std::vector<double> radii;
  std::stringstream ss(radii_spec);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) radii.push_back(std::stod(item));

  const MlpClassifier model = load_model(gen.model_path);
  const Image input = read_png(image_path);
  if (input.value_count() != model.input_dim())
    throw std::invalid_argument("image does not match the model input size");
  const Eigen::VectorXd x0 = input.to_vector();

  VceRequest base;
  base.image = x0;
  base.target = resolve_target(target, model, x0);
  base.exponent = gen.exponent;
  base.radius = radii.front();
  base.method = gen.to_method();
  base.iterations = gen.iterations;
  base.restarts = gen.restarts;
  base.seed = gen.seed;
  base.threads = gen.threads;

  const std::vector<VceResult> results = radius_sweep(model, base, radii);

  fs::create_directories(out_dir);
  std::vector<Image> panel{input};
  json entries = json::array();
  for (std::size_t i = 0; i < results.size(); ++i) {
    panel.push_back(image_for_model(model, results[i].counterfactual));
    json entry;
    entry["eps"] = radii[i];
    entry["p_initial"] = results[i].p_initial;
    entry["p_end"] = results[i].p_end;
    entry["valid"] = results[i].valid;
    entry["best_objective"] = results[i].best_objective;
    entries.push_back(entry);
  }
  write_png(hconcat(panel), (fs::path(out_dir) / "panel.png").string());
  json j;
  j["target"] = base.target;
  j["p"] = exponent_json(base.exponent);
  j["results"] = entries;
  write_text(fs::path(out_dir) / "sweep.json", j.dump(2) + "\n");
  std::cout << j.dump(2) << "\n";
  return 0;
}

int cmd_bench(const std::vector<std::string>& args, const json& cfg) {
  CLI::App app{"schedule benchmark over a sample of the test split"};
  GenerateFlags gen;
  DatasetFlags dataset;
  std::string out_path = "bench.csv";
  std::string budgets_spec = "25,75,125";
  std::string config_path;
  int sample_size = cfg.contains("sample") ? cfg["sample"].get<int>() : 100;
  double eps = cfg.contains("eps") ? cfg["eps"].get<double>() : 3.0;
  app.add_option("--config", config_path, "JSON config file");
  gen.attach(&app, cfg);
  dataset.attach(&app, cfg);
  app.add_option("--out", out_path, "output CSV");
  app.add_option("--budgets", budgets_spec, "comma-separated iteration budgets");
  app.add_option("--sample", sample_size, "number of test images");
  app.add_option("--eps", eps, "perturbation budget");
  run_app(app, args);

  const MlpClassifier model = load_model(gen.model_path);
  const Dataset data = dataset.load();
  std::vector<Eigen::VectorXd> sample;
  for (int i : data.indices(Split::Test)) {
    if (static_cast<int>(sample.size()) >= sample_size) break;
    sample.push_back(data.features[i]);
  }

  BenchmarkConfig config;
  config.budgets.clear();
  std::stringstream ss(budgets_spec);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) config.budgets.push_back(std::stoi(item));
  config.exponent = gen.exponent;
  config.radius = eps;
  config.restarts = gen.restarts;
  config.seed = gen.seed;
  config.threads = gen.threads;

  const std::vector<BenchmarkRow> rows = benchmark_schedules(model, sample, config);
  write_text(out_path, benchmark_csv(rows));
  std::cout << "wrote " << rows.size() << " rows to " << out_path << "\n";
  return 0;
}

int cmd_metrics(const std::vector<std::string>& args, const json& cfg) {
  CLI::App app{"localization metrics against a segmentation mask"};
  std::string original_path, counterfactual_path, mask_path;
  std::string out_path, config_path;
  app.add_option("--config", config_path, "JSON config file");
  app.add_option("--original", original_path, "original PNG")->required();
  app.add_option("--counterfactual", counterfactual_path, "counterfactual PNG")->required();
  app.add_option("--mask", mask_path, "mask PNG (nonzero = inside)")->required();
  app.add_option("--out", out_path, "output JSON (stdout when omitted)");
  run_app(app, args);
  (void)cfg;

  const Image original = read_png(original_path);
  const Image counterfactual = read_png(counterfactual_path);
  const Mask mask = Mask::from_image(read_png(mask_path));
  const ChangeDistribution dist = change_distribution(original, counterfactual);
  const LocalizationReport report = localization_metrics(dist, mask);

  json j;
  j["expected_distance"] = report.expected_distance;
  j["mass_in_mask"] = report.mass_in_mask;
  j["iou_at_095"] = report.iou_at_095;
  const std::string text = j.dump(2) + "\n";
  if (!out_path.empty()) write_text(out_path, text);
  std::cout << text;
  return 0;
}

int cmd_scaling(const std::vector<std::string>& args, const json& cfg) {
  CLI::App app{"LMO runtime scaling probe"};
  std::string dims_spec = "1000,10000,100000,1000000";
  std::string config_path;
  int trials = cfg.contains("trials") ? cfg["trials"].get<int>() : 9;
  double p = cfg.contains("p") ? cfg["p"].get<double>() : 1.5;
  std::uint64_t seed = 0;
  app.add_option("--config", config_path, "JSON config file");
  app.add_option("--dims", dims_spec, "comma-separated ascending dimensions");
  app.add_option("--trials", trials, "timing trials per dimension");
  app.add_option("--p", p, "norm exponent");
  app.add_option("--seed", seed, "random seed");
  run_app(app, args);

  std::vector<int> dims;
  std::stringstream ss(dims_spec);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) dims.push_back(std::stoi(item));

  const ScalingReport report = lmo_scaling_probe(dims, trials, p, seed);
  json rows = json::array();
  for (const ScalingRow& row : report.rows)
    rows.push_back({{"dim", row.dim},
                    {"median_seconds", row.median_seconds},
                    {"trials", row.trials}});
  json j;
  j["rows"] = rows;
  j["loglog_slope"] = report.loglog_slope;
  std::cout << j.dump(2) << "\n";
  return 0;
}

int cmd_oracle_check(const std::vector<std::string>& args, const json& cfg) {
  CLI::App app{"closed-form oracle vs brute-force equivalence suite"};
  int trials = cfg.contains("trials") ? cfg["trials"].get<int>() : 1000;
  std::uint64_t seed = 0;
  std::string config_path;
  app.add_option("--config", config_path, "JSON config file");
  app.add_option("--trials", trials, "number of random instances");
  app.add_option("--seed", seed, "random seed");
  run_app(app, args);

  const OracleCheckReport report = run_oracle_check(trials, seed);
  std::cout << "lmo:         " << report.lmo_passed << "/" << report.lmo_trials << " passed\n";
  std::cout << "certificate: " << report.certificate_passed << "/" << report.certificate_trials
            << " passed\n";
  std::cout << "projection:  " << report.projection_passed << "/" << report.projection_trials
            << " passed\n";
  for (const std::string& failure : report.failures) std::cout << "  " << failure << "\n";
  return report.all_passed() ? 0 : 1;
}

}  // namespace

int dispatch(const std::vector<std::string>& args) {
  try {
    if (args.empty()) {
      std::cerr << "usage: lpvce <train|calibrate|vce|sweep|bench|metrics|scaling-probe|"
                   "oracle-check> [flags]\n";
      return 2;
    }
    const json cfg = load_config(args);
    const std::string command = args.front();
    const std::vector<std::string> rest(args.begin() + 1, args.end());
    if (command == "train") return cmd_train(rest, cfg);
    if (command == "calibrate") return cmd_calibrate(rest, cfg);
    if (command == "vce") return cmd_vce(rest, cfg);
    if (command == "sweep") return cmd_sweep(rest, cfg);
    if (command == "bench") return cmd_bench(rest, cfg);
    if (command == "metrics") return cmd_metrics(rest, cfg);
    if (command == "scaling-probe") return cmd_scaling(rest, cfg);
    if (command == "oracle-check") return cmd_oracle_check(rest, cfg);
    std::cerr << "unknown command: " << command << "\n";
    return 2;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() != 0) std::cerr << "error: " << e.what() << "\n";
    return e.get_exit_code();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace lpvce
