// Command-line front end. Subcommands: scan, extract, train, eval,
// invariance, axis-stability, reconstruct2d. Exit codes: 0 success,
// 1 usage error, 2 data error.
#pragma once

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "canon/experiments.hpp"
#include "canon/pipeline.hpp"

namespace canon {

namespace detail {

inline const std::set<std::string>& known_config_keys() {
  static const std::set<std::string> keys = {
      // extraction
      "n_surface", "m_sampling", "k_nodes", "seed_sampling", "seed_basis", "seed_subsample",
      "aug_t", "aug_nsub", "per_instance_resample",
      // training
      "hidden", "epochs", "batch_size", "learning_rate", "optimizer", "momentum", "dropout",
      "validation_split", "lr_decay", "plateau_patience", "standardize", "seed_train"};
  return keys;
}

inline void validate_config_keys(const std::map<std::string, std::string>& kv) {
  for (const auto& [k, v] : kv)
    if (!known_config_keys().count(k))
      throw CLI::ValidationError("config", "unknown config key: " + k);
}

inline std::vector<int> parse_int_list(const std::string& s) {
  std::vector<int> out;
  std::string cur;
  for (char c : s + ",") {
    if (c == ',') {
      if (!trim(cur).empty()) out.push_back(std::stoi(trim(cur)));
      cur.clear();
    } else {
      cur += c;
    }
  }
  return out;
}

inline ExtractionConfig make_extraction_config(const std::map<std::string, std::string>& kv,
                                               std::uint64_t master_seed) {
  ExtractionConfig cfg;
  cfg.seed_sampling = derive_seed(master_seed, "sampling");
  cfg.seed_basis = derive_seed(master_seed, "basis");
  cfg.seed_subsample = derive_seed(master_seed, "subsample");
  auto geti = [&](const char* key, int& dst) {
    if (auto it = kv.find(key); it != kv.end()) dst = std::stoi(it->second);
  };
  auto getu = [&](const char* key, std::uint64_t& dst) {
    if (auto it = kv.find(key); it != kv.end()) dst = std::stoull(it->second);
  };
  geti("n_surface", cfg.n_surface);
  geti("m_sampling", cfg.m_sampling);
  geti("k_nodes", cfg.k_nodes);
  getu("seed_sampling", cfg.seed_sampling);
  getu("seed_basis", cfg.seed_basis);
  getu("seed_subsample", cfg.seed_subsample);
  geti("aug_t", cfg.aug_t);
  geti("aug_nsub", cfg.aug_nsub);
  if (auto it = kv.find("per_instance_resample"); it != kv.end())
    cfg.per_instance_resample = it->second == "1" || it->second == "true";
  return cfg;
}

inline TrainConfig make_train_config(const std::map<std::string, std::string>& kv,
                                     std::uint64_t master_seed) {
  TrainConfig cfg;
  cfg.seed = derive_seed(master_seed, "train");
  auto geti = [&](const char* key, int& dst) {
    if (auto it = kv.find(key); it != kv.end()) dst = std::stoi(it->second);
  };
  auto getd = [&](const char* key, double& dst) {
    if (auto it = kv.find(key); it != kv.end()) dst = std::stod(it->second);
  };
  geti("epochs", cfg.epochs);
  geti("batch_size", cfg.batch_size);
  getd("learning_rate", cfg.learning_rate);
  getd("momentum", cfg.momentum);
  getd("dropout", cfg.dropout_rate);
  getd("validation_split", cfg.validation_split);
  getd("lr_decay", cfg.lr_decay);
  geti("plateau_patience", cfg.plateau_patience);
  if (auto it = kv.find("optimizer"); it != kv.end()) {
    if (it->second == "sgd")
      cfg.use_momentum = false;
    else if (it->second == "momentum")
      cfg.use_momentum = true;
    else
      throw CLI::ValidationError("config", "optimizer must be 'sgd' or 'momentum'");
  }
  if (auto it = kv.find("standardize"); it != kv.end())
    cfg.standardize = it->second == "1" || it->second == "true";
  if (auto it = kv.find("seed_train"); it != kv.end()) cfg.seed = std::stoull(it->second);
  return cfg;
}

inline std::string dataset_root_or_env(const std::string& given) {
  if (!given.empty()) return given;
  if (const char* env = std::getenv("CANON_DATA_DIR")) return env;
  throw std::runtime_error("no dataset root given and CANON_DATA_DIR is not set");
}

inline void write_manifest_csv(const std::string& path, const DatasetManifest& manifest) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write manifest: " + path);
  out << "instance_id,path,label,split\n";
  for (const auto& e : manifest.entries)
    out << e.instance_id << ',' << e.path << ',' << e.label << ',' << e.split << '\n';
}

}  // namespace detail

inline int cli_main(int argc, const char* const* argv) {
  CLI::App app{"canonical, compact point-cloud shape features"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::uint64_t seed = 0;
  int jobs = 1;
  std::string out_dir = "out";
  app.add_option("--config", config_path, "key=value text config file");
  app.add_option("--seed", seed, "master seed (per-stage seeds are derived from it)");
  app.add_option("--jobs", jobs, "parallel workers for extraction")->check(CLI::PositiveNumber);
  app.add_option("--out", out_dir, "output directory");

  std::string root, features_path, model_path, mesh_path, xyz_path;
  auto* scan = app.add_subcommand("scan", "index a class/{train,test}/*.off dataset tree");
  scan->add_option("root", root, "dataset root (default: $CANON_DATA_DIR)");
  auto* extract = app.add_subcommand("extract", "extract shape features for a dataset");
  extract->add_option("root", root, "dataset root (default: $CANON_DATA_DIR)");
  auto* train_cmd = app.add_subcommand("train", "train the classifier on a feature file");
  train_cmd->add_option("--features", features_path, "training feature file")->required();
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a model on a feature file");
  eval_cmd->add_option("--model", model_path, "model checkpoint")->required();
  eval_cmd->add_option("--features", features_path, "feature file")->required();
  auto* inv = app.add_subcommand("invariance", "run the invariance property suite");
  auto* axis = app.add_subcommand("axis-stability", "compare canonical axis stability against PCA");
  axis->add_option("--mesh", mesh_path, "OFF mesh to probe (default: bundled shape)");
  axis->add_option("--xyz", xyz_path, "XYZ point cloud to probe");
  auto* recon = app.add_subcommand("reconstruct2d", "2D distance-field reconstruction demo");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    std::map<std::string, std::string> kv;
    if (!config_path.empty()) {
      kv = parse_config_file(config_path);
      detail::validate_config_keys(kv);
    }
    namespace fs = std::filesystem;

    if (scan->parsed()) {
      DatasetManifest manifest = scan_modelnet(detail::dataset_root_or_env(root));
      fs::create_directories(out_dir);
      detail::write_manifest_csv((fs::path(out_dir) / "manifest.csv").string(), manifest);
      std::cout << "classes: " << manifest.class_names.size()
                << ", instances: " << manifest.entries.size() << '\n';
    } else if (extract->parsed()) {
      DatasetManifest manifest = scan_modelnet(detail::dataset_root_or_env(root));
      ExtractionConfig cfg = detail::make_extraction_config(kv, seed);
      ExtractionResult res = extract_features(manifest, cfg, jobs);
      fs::create_directories(out_dir);
      write_features_file((fs::path(out_dir) / "features_train.txt").string(), res.train_features);
      write_features_file((fs::path(out_dir) / "features_test.txt").string(), res.test_features);
      std::ofstream log(fs::path(out_dir) / "extraction_log.csv");
      write_extraction_log(log, res.records);
      std::size_t failures = 0;
      for (const auto& r : res.records)
        if (!r.ok) ++failures;
      std::cout << "extracted " << res.train_features.features.size() << " train and "
                << res.test_features.features.size() << " test features ("
                << failures << " failures), basis " << res.basis_id << '\n';
    } else if (train_cmd->parsed()) {
      FeatureSet features = read_features_file(features_path);
      std::vector<int> hidden = {512, 256, 128};
      if (auto it = kv.find("hidden"); it != kv.end()) hidden = detail::parse_int_list(it->second);
      TrainConfig cfg = detail::make_train_config(kv, seed);
      std::set<std::string> labels;
      for (const auto& f : features.features) labels.insert(f.label);
      MlpModel model = init_mlp(features.k, hidden, static_cast<int>(labels.size()),
                                derive_seed(cfg.seed, "init"));
      model.dropout_rate = cfg.dropout_rate;
      TrainReport report = train(model, features, cfg);
      fs::create_directories(out_dir);
      std::ofstream mf(fs::path(out_dir) / "model.txt");
      save_model(mf, model);
      std::ofstream rf(fs::path(out_dir) / "train_report.csv");
      write_train_report_csv(rf, report);
      const auto& last = report.epochs.back();
      std::cout << "trained " << report.epochs.size() << " epochs in "
                << format_double(report.wall_seconds) << " s; final loss "
                << format_double(last.loss) << ", train acc " << format_double(last.train_accuracy)
                << ", val acc " << format_double(last.val_accuracy) << '\n';
      for (const auto& w : report.warnings) std::cout << "warning: " << w << '\n';
    } else if (eval_cmd->parsed()) {
      std::ifstream mf(model_path);
      if (!mf) throw std::runtime_error("cannot open model: " + model_path);
      MlpModel model = load_model(mf);
      FeatureSet features = read_features_file(features_path);
      // vote over each instance's features (reduces to plain prediction at T=1)
      std::vector<std::string> order;
      std::map<std::string, std::vector<ShapeFeature>> grouped;
      for (const auto& f : features.features) {
        if (!grouped.count(f.instance_id)) order.push_back(f.instance_id);
        grouped[f.instance_id].push_back(f);
      }
      int inst_hits = 0, feat_hits = 0, feat_total = 0;
      for (const auto& id : order) {
        const auto& fs_i = grouped[id];
        int pred = vote_predict(model, fs_i);
        if (model.class_names[static_cast<std::size_t>(pred)] == fs_i.front().label) ++inst_hits;
        for (const auto& f : fs_i) {
          Eigen::VectorXd p = predict(model, f);
          Eigen::Index arg = 0;
          p.maxCoeff(&arg);
          if (model.class_names[static_cast<std::size_t>(arg)] == f.label) ++feat_hits;
          ++feat_total;
        }
      }
      double inst_acc = static_cast<double>(inst_hits) / static_cast<double>(order.size());
      double feat_acc = static_cast<double>(feat_hits) / static_cast<double>(feat_total);
      std::cout << "instances: " << order.size() << ", vote accuracy: " << format_double(inst_acc)
                << ", per-feature accuracy: " << format_double(feat_acc) << '\n';
      fs::create_directories(out_dir);
      std::ofstream sf(fs::path(out_dir) / "eval_summary.txt");
      sf << "instances=" << order.size() << "\nvote_accuracy=" << format_double(inst_acc)
         << "\nfeature_accuracy=" << format_double(feat_acc) << '\n';
    } else if (inv->parsed()) {
      InvarianceResult res = run_invariance_suite(seed, out_dir);
      res.report.write(out_dir);
      for (const auto& line : res.report.summary) std::cout << line << '\n';
    } else if (axis->parsed()) {
      std::optional<Mesh> mesh;
      std::optional<Points<3>> cloud;
      if (!mesh_path.empty()) mesh = load_off_file(mesh_path);
      if (!xyz_path.empty()) {
        std::ifstream xf(xyz_path);
        if (!xf) throw std::runtime_error("cannot open xyz file: " + xyz_path);
        cloud = load_xyz(xf, xyz_path).points;
      }
      AxisStabilityResult res = run_axis_stability(seed, mesh, cloud);
      res.report.write(out_dir);
      for (const auto& line : res.report.summary) std::cout << line << '\n';
    } else if (recon->parsed()) {
      Reconstruct2dResult res = reconstruct2d(seed, out_dir);
      res.report.write(out_dir);
      for (const auto& line : res.report.summary) std::cout << line << '\n';
    }
  } catch (const CLI::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}

}  // namespace canon
