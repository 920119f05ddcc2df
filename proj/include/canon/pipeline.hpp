// Dataset ingestion and end-to-end feature extraction: load -> sample ->
// normalize -> distance field on a shared sampling set -> canonical frame ->
// ELM embedding, with optional surface-subset augmentation. Extraction
// parallelizes across instances; per-instance seeds are derived from the
// master seed and the instance id, so results are independent of the job
// count.
#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "canon/canonical.hpp"
#include "canon/classifier.hpp"
#include "canon/distance_field.hpp"
#include "canon/elm.hpp"
#include "canon/geometry.hpp"
#include "canon/shapes.hpp"
#include "canon/util.hpp"

namespace canon {

struct ManifestEntry {
  std::string instance_id;
  std::string path;
  std::string label;
  std::string split;  // "train" or "test"
};

struct DatasetManifest {
  std::vector<ManifestEntry> entries;
  std::vector<std::string> class_names;
};

// Directory convention: root/<class>/{train,test}/*.off, lexicographic order.
inline DatasetManifest scan_modelnet(const std::string& root) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(root)) throw std::runtime_error("dataset root is not a directory: " + root);

  std::vector<std::string> classes;
  for (const auto& e : fs::directory_iterator(root))
    if (e.is_directory()) classes.push_back(e.path().filename().string());
  std::sort(classes.begin(), classes.end());
  if (classes.empty()) throw std::runtime_error("dataset root has no class directories: " + root);

  DatasetManifest manifest;
  manifest.class_names = classes;
  std::map<std::string, int> seen;
  for (const auto& cls : classes) {
    for (const char* split : {"train", "test"}) {
      fs::path dir = fs::path(root) / cls / split;
      if (!fs::is_directory(dir))
        throw std::runtime_error("class '" + cls + "' is missing its " + split + " split");
      std::vector<std::string> files;
      for (const auto& e : fs::directory_iterator(dir))
        if (e.is_regular_file() && e.path().extension() == ".off")
          files.push_back(e.path().string());
      std::sort(files.begin(), files.end());
      for (const auto& f : files) {
        std::string id = fs::path(f).stem().string();
        if (seen.count(id)) id = cls + "_" + id;
        if (seen.count(id))
          throw std::runtime_error("duplicate instance id in dataset: " + id);
        seen[id] = 1;
        manifest.entries.push_back({id, f, cls, split});
      }
    }
  }
  if (manifest.entries.empty()) throw std::runtime_error("dataset contains no .off files");
  return manifest;
}

struct ExtractionConfig {
  int n_surface = 2048;
  int m_sampling = 4096;
  int k_nodes = 256;
  std::uint64_t seed_sampling = 1;
  std::uint64_t seed_basis = 2;
  std::uint64_t seed_subsample = 3;
  int aug_t = 16;     // features per instance; 1 disables subsetting
  int aug_nsub = 512; // surface points per subset
  bool per_instance_resample = false;

  void validate() const {
    if (n_surface < 4 || m_sampling < 8 || k_nodes < 1 || aug_t < 1 || aug_nsub < 4)
      throw std::invalid_argument("extraction config: counts must be positive");
    if (aug_nsub > n_surface)
      throw std::invalid_argument("extraction config: aug_nsub must not exceed n_surface");
  }
};

struct ExtractionRecord {
  std::string instance_id;
  bool ok = false;
  std::string message;     // error text on failure
  bool gap_warning = false;
  double seconds = 0;
};

struct ExtractionResult {
  FeatureSet train_features;
  FeatureSet test_features;
  std::vector<ExtractionRecord> records;
  std::string sampling_id;
  std::string basis_id;
};

namespace detail {

// First n_sub entries of a seeded Fisher-Yates shuffle of 0..n-1.
inline std::vector<int> pick_subset(int n, int n_sub, std::uint64_t seed) {
  std::vector<int> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 rng(seed);
  for (int i = 0; i < n_sub; ++i) {
    std::uniform_int_distribution<int> pick(i, n - 1);
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(pick(rng))]);
  }
  idx.resize(static_cast<std::size_t>(n_sub));
  return idx;
}

template <int D>
ShapeFeature embed_cloud(const Points<D>& cloud, const SamplingSet<D>& sampling,
                         const ElmBasis<D>& basis, bool* gap_warning) {
  DistanceField field = compute_distance_field<D>(cloud, sampling);
  DataMatrix<D> dm = assemble_data_matrix<D>(sampling, field);
  CanonicalFrame<D> frame = canonical_projection<D>(dm);
  if (gap_warning && frame.gap_warning) *gap_warning = true;
  CanonicalInput<D> ci = canonical_input<D>(sampling, frame);
  AugmentedInput<D> aug = augment_input<D>(ci);
  return embed<D>(aug, field, basis);
}

}  // namespace detail

inline ExtractionResult extract_features(const DatasetManifest& manifest,
                                         const ExtractionConfig& config, int jobs = 1) {
  config.validate();
  if (manifest.entries.empty()) throw std::invalid_argument("extract_features: empty manifest");
  if (jobs < 1) jobs = 1;

  const SamplingSet<3> shared = generate_sampling_points<3>(config.m_sampling, config.seed_sampling);
  const ElmBasis<3> basis = make_shared_basis<3>(config.k_nodes, config.seed_basis);

  const std::size_t n = manifest.entries.size();
  std::vector<std::vector<ShapeFeature>> produced(n);
  std::vector<ExtractionRecord> records(n);

  auto work = [&](std::size_t i) {
    const ManifestEntry& entry = manifest.entries[i];
    ExtractionRecord rec;
    rec.instance_id = entry.instance_id;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      Mesh mesh = load_off_file(entry.path);
      const std::uint64_t inst_seed = derive_seed(config.seed_subsample, entry.instance_id);
      PointCloud cloud =
          sample_surface(mesh, config.n_surface, derive_seed(inst_seed, "surface"), entry.path);
      Points<3> norm = normalize_points<3>(cloud.points);
      SamplingSet<3> sampling =
          config.per_instance_resample
              ? generate_sampling_points<3>(config.m_sampling,
                                            derive_seed(config.seed_sampling, entry.instance_id))
              : shared;

      std::vector<ShapeFeature> feats;
      if (config.aug_t == 1) {
        feats.push_back(detail::embed_cloud<3>(norm, sampling, basis, &rec.gap_warning));
      } else {
        for (int t = 0; t < config.aug_t; ++t) {
          auto subset = detail::pick_subset(config.n_surface, config.aug_nsub,
                                            derive_seed(inst_seed, "subset", static_cast<std::uint64_t>(t)));
          Points<3> sub(config.aug_nsub, 3);
          for (int r = 0; r < config.aug_nsub; ++r)
            sub.row(r) = norm.row(subset[static_cast<std::size_t>(r)]);
          feats.push_back(detail::embed_cloud<3>(sub, sampling, basis, &rec.gap_warning));
        }
      }
      for (auto& f : feats) {
        f.instance_id = entry.instance_id;
        f.label = entry.label;
      }
      produced[i] = std::move(feats);
      rec.ok = true;
    } catch (const std::exception& e) {
      rec.ok = false;
      rec.message = e.what();
    }
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    records[i] = std::move(rec);
  };

  if (jobs == 1) {
    for (std::size_t i = 0; i < n; ++i) work(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (int j = 0; j < jobs; ++j)
      pool.emplace_back([&] {
        for (;;) {
          std::size_t i = next.fetch_add(1);
          if (i >= n) return;
          work(i);
        }
      });
    for (auto& t : pool) t.join();
  }

  ExtractionResult result;
  result.sampling_id = shared.id;
  result.basis_id = basis.basis_id;
  result.train_features.basis_id = basis.basis_id;
  result.train_features.k = config.k_nodes;
  result.test_features.basis_id = basis.basis_id;
  result.test_features.k = config.k_nodes;
  std::size_t ok_count = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!records[i].ok) continue;
    ++ok_count;
    auto& dst =
        manifest.entries[i].split == "train" ? result.train_features : result.test_features;
    for (auto& f : produced[i]) dst.features.push_back(std::move(f));
  }
  result.records = std::move(records);
  if (ok_count == 0) throw std::runtime_error("extract_features: no instance extracted successfully");
  return result;
}

inline void write_extraction_log(std::ostream& out, const std::vector<ExtractionRecord>& records) {
  out << "instance_id,ok,gap_warning,seconds,message\n";
  for (const auto& r : records)
    out << r.instance_id << ',' << (r.ok ? 1 : 0) << ',' << (r.gap_warning ? 1 : 0) << ','
        << format_double(r.seconds) << ',' << r.message << '\n';
}

// ---- experiment report (CSV + plain-text summary, config embedded) ----

struct ExperimentReport {
  std::string name;
  std::vector<std::pair<std::string, std::string>> config;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> summary;

  void add_config(const std::string& key, const std::string& value) {
    config.emplace_back(key, value);
  }
  void add_row(std::vector<std::string> row) { rows.push_back(std::move(row)); }

  void write(const std::string& dir) const {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    std::ofstream csv(fs::path(dir) / (name + ".csv"));
    if (!csv) throw std::runtime_error("cannot write report in " + dir);
    for (const auto& [k, v] : config) csv << "# " << k << '=' << v << '\n';
    for (std::size_t i = 0; i < columns.size(); ++i) csv << (i ? "," : "") << columns[i];
    csv << '\n';
    for (const auto& row : rows) {
      for (std::size_t i = 0; i < row.size(); ++i) csv << (i ? "," : "") << row[i];
      csv << '\n';
    }
    std::ofstream txt(fs::path(dir) / (name + "_summary.txt"));
    for (const auto& [k, v] : config) txt << k << '=' << v << '\n';
    if (!config.empty()) txt << '\n';
    for (const auto& line : summary) txt << line << '\n';
  }
};

// ---- synthetic four-class dataset (written as an OFF tree) ----

// Generates per_class_train + per_class_test instances of each class under
// root/<class>/{train,test}/ with one sequential seeded generator, so the
// split is reproducible and ships with the code.
inline void write_synthetic_dataset(const std::string& root, int per_class_train,
                                    int per_class_test, std::uint64_t seed) {
  namespace fs = std::filesystem;
  std::mt19937_64 rng(derive_seed(seed, "synthetic-dataset"));
  char name[128];
  for (std::size_t c = 0; c < synthetic_class_names().size(); ++c) {
    const std::string& cls = synthetic_class_names()[c];
    for (const char* split : {"train", "test"}) {
      fs::create_directories(fs::path(root) / cls / split);
      const int count = split == std::string("train") ? per_class_train : per_class_test;
      for (int i = 0; i < count; ++i) {
        Mesh mesh = make_synthetic_instance(static_cast<SyntheticClass>(c), rng);
        std::snprintf(name, sizeof(name), "%s_%s_%04d.off", cls.c_str(), split, i);
        std::ofstream out(fs::path(root) / cls / split / name);
        if (!out) throw std::runtime_error("cannot write synthetic dataset file");
        write_off(out, mesh);
      }
    }
  }
}

// ---- config file (flat key=value lines, '#' comments) ----

inline std::map<std::string, std::string> parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  std::map<std::string, std::string> kv;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    auto eq = t.find('=');
    if (eq == std::string::npos) throw ParseError("expected key=value", line_no);
    kv[trim(t.substr(0, eq))] = trim(t.substr(eq + 1));
  }
  return kv;
}

}  // namespace canon
