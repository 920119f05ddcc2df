// Shallow fully-connected softmax classifier over shape features, trained with
// mini-batch gradient descent. Everything is deterministic given the seed.
#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "canon/elm.hpp"
#include "canon/util.hpp"

namespace canon {

struct MlpModel {
  std::vector<int> layer_sizes;            // {input, hidden..., classes}
  std::vector<Eigen::MatrixXd> weights;    // per layer, out x in
  std::vector<Eigen::VectorXd> biases;
  std::vector<std::string> class_names;
  std::string basis_id;
  Eigen::VectorXd feat_mean, feat_std;     // input standardization (empty = identity)
  double dropout_rate = 0.0;
  std::uint64_t seed = 0;

  int input_dim() const { return layer_sizes.front(); }
  int num_classes() const { return layer_sizes.back(); }
  std::size_t num_layers() const { return weights.size(); }
};

// Variance-scaled Gaussian init: sqrt(2/fan_in) in front of ReLU, sqrt(1/fan_in)
// at the softmax layer. Biases start at zero.
inline MlpModel init_mlp(int input_dim, const std::vector<int>& hidden, int classes,
                         std::uint64_t seed) {
  if (input_dim < 1) throw std::invalid_argument("init_mlp: input_dim must be positive");
  if (classes < 2) throw std::invalid_argument("init_mlp: need at least 2 classes");
  MlpModel model;
  model.seed = seed;
  model.layer_sizes.push_back(input_dim);
  for (int h : hidden) {
    if (h < 1) throw std::invalid_argument("init_mlp: hidden sizes must be positive");
    model.layer_sizes.push_back(h);
  }
  model.layer_sizes.push_back(classes);

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t l = 0; l + 1 < model.layer_sizes.size(); ++l) {
    int in = model.layer_sizes[l];
    int out = model.layer_sizes[l + 1];
    bool is_output = (l + 2 == model.layer_sizes.size());
    double scale = std::sqrt((is_output ? 1.0 : 2.0) / in);
    Eigen::MatrixXd w(out, in);
    for (int i = 0; i < out; ++i)
      for (int j = 0; j < in; ++j) w(i, j) = scale * normal(rng);
    model.weights.push_back(std::move(w));
    model.biases.push_back(Eigen::VectorXd::Zero(out));
  }
  return model;
}

namespace detail {

inline Eigen::MatrixXd softmax_rows(Eigen::MatrixXd z) {
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    Eigen::RowVectorXd row = z.row(i);
    row.array() -= row.maxCoeff();
    row = row.array().exp();
    z.row(i) = row / row.sum();
  }
  return z;
}

struct ForwardPass {
  std::vector<Eigen::MatrixXd> pre;   // z per layer
  std::vector<Eigen::MatrixXd> post;  // activation per layer (post[0] = input)
  Eigen::MatrixXd probs;
};

// masks, when given, hold one multiplicative dropout mask per hidden layer
// that has one (inverted dropout, already scaled by 1/(1-p)); empty matrices
// mean "no dropout at this layer".
inline ForwardPass forward(const MlpModel& model, const Eigen::MatrixXd& input,
                           const std::vector<Eigen::MatrixXd>* masks = nullptr) {
  ForwardPass fp;
  fp.post.push_back(input);
  Eigen::MatrixXd a = input;
  for (std::size_t l = 0; l < model.num_layers(); ++l) {
    Eigen::MatrixXd z = a * model.weights[l].transpose();
    z.rowwise() += model.biases[l].transpose();
    fp.pre.push_back(z);
    if (l + 1 < model.num_layers()) {
      a = z.array().max(0.0);
      if (masks && (*masks)[l].size() > 0) a = a.cwiseProduct((*masks)[l]);
      fp.post.push_back(a);
    } else {
      fp.probs = softmax_rows(z);
    }
  }
  return fp;
}

inline double cross_entropy(const Eigen::MatrixXd& probs, const std::vector<int>& y) {
  double loss = 0;
  for (Eigen::Index i = 0; i < probs.rows(); ++i)
    loss -= std::log(std::max(probs(i, y[static_cast<std::size_t>(i)]), 1e-300));
  return loss / static_cast<double>(probs.rows());
}

}  // namespace detail

struct MlpGradients {
  std::vector<Eigen::MatrixXd> dw;
  std::vector<Eigen::VectorXd> db;
  double loss = 0;
};

// Mean cross-entropy of the softmax output on (already standardized) inputs.
inline double mlp_loss(const MlpModel& model, const Eigen::MatrixXd& input,
                       const std::vector<int>& labels) {
  return detail::cross_entropy(detail::forward(model, input).probs, labels);
}

// Analytic gradients of mlp_loss with respect to every weight and bias.
// The softmax/cross-entropy pair gives the output delta (p - onehot)/batch.
inline MlpGradients mlp_gradients(const MlpModel& model, const Eigen::MatrixXd& input,
                                  const std::vector<int>& labels,
                                  const std::vector<Eigen::MatrixXd>* masks = nullptr) {
  const auto fp = detail::forward(model, input, masks);
  const Eigen::Index batch = input.rows();
  MlpGradients g;
  g.loss = detail::cross_entropy(fp.probs, labels);
  g.dw.resize(model.num_layers());
  g.db.resize(model.num_layers());

  Eigen::MatrixXd delta = fp.probs;
  for (Eigen::Index i = 0; i < batch; ++i) delta(i, labels[static_cast<std::size_t>(i)]) -= 1.0;
  delta /= static_cast<double>(batch);

  for (std::size_t l = model.num_layers(); l-- > 0;) {
    g.dw[l] = delta.transpose() * fp.post[l];
    g.db[l] = delta.colwise().sum().transpose();
    if (l > 0) {
      delta = delta * model.weights[l];
      if (masks && (*masks)[l - 1].size() > 0) delta = delta.cwiseProduct((*masks)[l - 1]);
      delta = delta.cwiseProduct((fp.pre[l - 1].array() > 0.0).cast<double>().matrix());
    }
  }
  return g;
}

struct TrainConfig {
  int epochs = 200;
  int batch_size = 64;
  double learning_rate = 0.01;
  bool use_momentum = true;
  double momentum = 0.9;
  double dropout_rate = 0.0;
  std::uint64_t seed = 0;
  double validation_split = 0.1;
  double lr_decay = 0.5;      // multiplied in when validation loss plateaus
  int plateau_patience = 10;
  bool standardize = true;
};

struct EpochStats {
  int epoch = 0;
  double loss = 0;
  double train_accuracy = 0;
  double val_accuracy = -1;  // -1 when no validation split
};

struct TrainReport {
  std::vector<EpochStats> epochs;
  double final_test_accuracy = -1;
  double wall_seconds = 0;
  std::vector<std::string> warnings;
};

inline void write_train_report_csv(std::ostream& out, const TrainReport& report) {
  out << "epoch,loss,train_acc,val_acc\n";
  for (const auto& e : report.epochs)
    out << e.epoch << ',' << format_double(e.loss) << ',' << format_double(e.train_accuracy)
        << ',' << format_double(e.val_accuracy) << '\n';
}

namespace detail {

inline Eigen::MatrixXd standardize_rows(const Eigen::MatrixXd& x, const MlpModel& model) {
  if (model.feat_mean.size() == 0) return x;
  Eigen::MatrixXd out = x;
  out.rowwise() -= model.feat_mean.transpose();
  out.array().rowwise() /= model.feat_std.transpose().array();
  return out;
}

inline double accuracy(const MlpModel& model, const Eigen::MatrixXd& x,
                       const std::vector<int>& y) {
  if (x.rows() == 0) return -1;
  Eigen::MatrixXd probs = forward(model, x).probs;
  int hits = 0;
  for (Eigen::Index i = 0; i < probs.rows(); ++i) {
    Eigen::Index arg = 0;
    probs.row(i).maxCoeff(&arg);
    if (static_cast<int>(arg) == y[static_cast<std::size_t>(i)]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(probs.rows());
}

}  // namespace detail

// Trains in place. Features must share one basis and carry labels; the model's
// class list is derived from the labels (sorted) unless already set.
inline TrainReport train(MlpModel& model, const FeatureSet& features, const TrainConfig& config) {
  const auto t0 = std::chrono::steady_clock::now();
  if (features.features.empty()) throw std::invalid_argument("train: no features");
  if (config.epochs < 1 || config.batch_size < 1 || config.learning_rate <= 0)
    throw std::invalid_argument("train: epochs, batch size and learning rate must be positive");
  for (const auto& f : features.features) {
    if (f.basis_id != features.basis_id)
      throw std::invalid_argument("train: feature/basis mismatch for instance " + f.instance_id);
    if (f.label.empty() || f.label == "-")
      throw std::invalid_argument("train: missing label for instance " + f.instance_id);
  }
  if (model.basis_id.empty())
    model.basis_id = features.basis_id;
  else if (model.basis_id != features.basis_id)
    throw std::invalid_argument("train: model is bound to a different basis");

  if (model.class_names.empty()) {
    std::vector<std::string> names;
    for (const auto& f : features.features) names.push_back(f.label);
    std::sort(names.begin(), names.end());
    names.erase(std::unique(names.begin(), names.end()), names.end());
    model.class_names = names;
  }
  if (static_cast<int>(model.class_names.size()) != model.num_classes())
    throw std::invalid_argument("train: class count does not match the model output layer");
  if (features.k != model.input_dim())
    throw std::invalid_argument("train: feature dimension does not match the model input layer");

  auto class_index = [&](const std::string& label) {
    auto it = std::lower_bound(model.class_names.begin(), model.class_names.end(), label);
    if (it == model.class_names.end() || *it != label)
      throw std::invalid_argument("train: unknown class label " + label);
    return static_cast<int>(it - model.class_names.begin());
  };

  const Eigen::Index n = static_cast<Eigen::Index>(features.features.size());
  Eigen::MatrixXd x(n, features.k);
  std::vector<int> y(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    x.row(i) = features.features[static_cast<std::size_t>(i)].beta.transpose();
    y[static_cast<std::size_t>(i)] = class_index(features.features[static_cast<std::size_t>(i)].label);
  }

  std::mt19937_64 rng(config.seed);
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  const Eigen::Index n_val =
      std::min<Eigen::Index>(n - 1, static_cast<Eigen::Index>(config.validation_split * n));
  const Eigen::Index n_train = n - n_val;

  Eigen::MatrixXd xt(n_train, features.k), xv(n_val, features.k);
  std::vector<int> yt(static_cast<std::size_t>(n_train)), yv(static_cast<std::size_t>(n_val));
  for (Eigen::Index i = 0; i < n_train; ++i) {
    xt.row(i) = x.row(order[static_cast<std::size_t>(i)]);
    yt[static_cast<std::size_t>(i)] = y[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])];
  }
  for (Eigen::Index i = 0; i < n_val; ++i) {
    xv.row(i) = x.row(order[static_cast<std::size_t>(n_train + i)]);
    yv[static_cast<std::size_t>(i)] =
        y[static_cast<std::size_t>(order[static_cast<std::size_t>(n_train + i)])];
  }

  if (config.standardize) {
    model.feat_mean = xt.colwise().mean().transpose();
    Eigen::VectorXd var =
        (xt.rowwise() - model.feat_mean.transpose()).array().square().colwise().mean().transpose();
    model.feat_std = var.array().sqrt().max(1e-12);
  } else {
    model.feat_mean.resize(0);
    model.feat_std.resize(0);
  }
  Eigen::MatrixXd xts = detail::standardize_rows(xt, model);
  Eigen::MatrixXd xvs = detail::standardize_rows(xv, model);

  model.dropout_rate = config.dropout_rate;
  std::vector<Eigen::MatrixXd> vel_w(model.num_layers()), masks(model.num_layers() - 1);
  std::vector<Eigen::VectorXd> vel_b(model.num_layers());
  for (std::size_t l = 0; l < model.num_layers(); ++l) {
    vel_w[l] = Eigen::MatrixXd::Zero(model.weights[l].rows(), model.weights[l].cols());
    vel_b[l] = Eigen::VectorXd::Zero(model.biases[l].size());
  }
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const std::size_t n_hidden = model.num_layers() - 1;

  TrainReport report;
  double lr = config.learning_rate;
  double best_monitor = std::numeric_limits<double>::infinity();
  int stale = 0;

  std::vector<int> idx(static_cast<std::size_t>(n_train));
  std::iota(idx.begin(), idx.end(), 0);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(idx.begin(), idx.end(), rng);
    double epoch_loss = 0;
    Eigen::Index seen = 0;
    for (Eigen::Index start = 0; start < n_train; start += config.batch_size) {
      const Eigen::Index bsz = std::min<Eigen::Index>(config.batch_size, n_train - start);
      Eigen::MatrixXd xb(bsz, features.k);
      std::vector<int> yb(static_cast<std::size_t>(bsz));
      for (Eigen::Index i = 0; i < bsz; ++i) {
        xb.row(i) = xts.row(idx[static_cast<std::size_t>(start + i)]);
        yb[static_cast<std::size_t>(i)] = yt[static_cast<std::size_t>(idx[static_cast<std::size_t>(start + i)])];
      }
      // dropout strictly between hidden layers: not after the last hidden one
      for (std::size_t l = 0; l < n_hidden; ++l) {
        if (config.dropout_rate > 0 && l + 1 < n_hidden) {
          masks[l].resize(bsz, model.layer_sizes[l + 1]);
          const double keep = 1.0 - config.dropout_rate;
          for (Eigen::Index i = 0; i < masks[l].rows(); ++i)
            for (Eigen::Index j = 0; j < masks[l].cols(); ++j)
              masks[l](i, j) = unit(rng) < keep ? 1.0 / keep : 0.0;
        } else {
          masks[l].resize(0, 0);
        }
      }
      MlpGradients g = mlp_gradients(model, xb, yb, &masks);
      if (!std::isfinite(g.loss))
        throw std::runtime_error("train: loss became non-finite at epoch " + std::to_string(epoch));
      epoch_loss += g.loss * static_cast<double>(bsz);
      seen += bsz;
      for (std::size_t l = 0; l < model.num_layers(); ++l) {
        if (config.use_momentum) {
          vel_w[l] = config.momentum * vel_w[l] - lr * g.dw[l];
          vel_b[l] = config.momentum * vel_b[l] - lr * g.db[l];
          model.weights[l] += vel_w[l];
          model.biases[l] += vel_b[l];
        } else {
          model.weights[l] -= lr * g.dw[l];
          model.biases[l] -= lr * g.db[l];
        }
      }
    }
    EpochStats es;
    es.epoch = epoch;
    es.loss = epoch_loss / static_cast<double>(seen);
    es.train_accuracy = detail::accuracy(model, xts, yt);
    es.val_accuracy = n_val > 0 ? detail::accuracy(model, xvs, yv) : -1;
    report.epochs.push_back(es);

    const double monitor = n_val > 0 ? mlp_loss(model, xvs, yv) : es.loss;
    if (monitor < best_monitor * (1.0 - 1e-4)) {
      best_monitor = monitor;
      stale = 0;
    } else if (++stale >= config.plateau_patience) {
      lr *= config.lr_decay;
      stale = 0;
    }
  }

  if (!report.epochs.empty() && report.epochs.back().loss > report.epochs.front().loss)
    report.warnings.push_back("training cross-entropy did not decrease over the run");
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

inline Eigen::VectorXd predict(const MlpModel& model, const ShapeFeature& feature) {
  if (feature.basis_id != model.basis_id)
    throw std::invalid_argument("predict: feature basis does not match the model basis");
  if (feature.beta.size() != model.input_dim())
    throw std::invalid_argument("predict: feature dimension mismatch");
  Eigen::MatrixXd x = detail::standardize_rows(feature.beta.transpose(), model);
  return detail::forward(model, x).probs.row(0).transpose();
}

// Averages the predicted probability vectors of one instance's features and
// returns the arg-max class (ties go to the lowest index).
inline int vote_predict(const MlpModel& model, const std::vector<ShapeFeature>& features) {
  if (features.empty()) throw std::invalid_argument("vote_predict: empty feature list");
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(model.num_classes());
  for (const auto& f : features) mean += predict(model, f);
  mean /= static_cast<double>(features.size());
  int arg = 0;
  for (int i = 1; i < mean.size(); ++i)
    if (mean[i] > mean[arg]) arg = i;
  return arg;
}

// ---- checkpoint (text header + full-precision weight dump) ----

inline void save_model(std::ostream& out, const MlpModel& model) {
  out << "canon-mlp 1\n";
  out << "layers";
  for (int s : model.layer_sizes) out << ' ' << s;
  out << '\n';
  out << "classes";
  for (const auto& c : model.class_names) out << ' ' << c;
  out << '\n';
  out << "basis_id " << (model.basis_id.empty() ? "-" : model.basis_id) << '\n';
  out << "dropout " << format_double(model.dropout_rate) << '\n';
  out << "seed " << model.seed << '\n';
  out << "standardize " << (model.feat_mean.size() > 0 ? 1 : 0) << '\n';
  if (model.feat_mean.size() > 0) {
    for (Eigen::Index i = 0; i < model.feat_mean.size(); ++i)
      out << (i ? " " : "") << format_double(model.feat_mean[i]);
    out << '\n';
    for (Eigen::Index i = 0; i < model.feat_std.size(); ++i)
      out << (i ? " " : "") << format_double(model.feat_std[i]);
    out << '\n';
  }
  for (std::size_t l = 0; l < model.num_layers(); ++l) {
    const auto& w = model.weights[l];
    out << "layer " << l << ' ' << w.rows() << ' ' << w.cols() << '\n';
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      for (Eigen::Index j = 0; j < w.cols(); ++j) out << (j ? " " : "") << format_double(w(i, j));
      out << '\n';
    }
    for (Eigen::Index i = 0; i < model.biases[l].size(); ++i)
      out << (i ? " " : "") << format_double(model.biases[l][i]);
    out << '\n';
  }
}

inline MlpModel load_model(std::istream& in) {
  std::string word;
  int version = 0;
  in >> word >> version;
  if (word != "canon-mlp" || version != 1)
    throw std::runtime_error("load_model: unrecognized checkpoint header");
  MlpModel model;
  std::string line;
  std::getline(in, line);
  std::getline(in, line);
  {
    std::istringstream ls(line);
    ls >> word;
    int s;
    while (ls >> s) model.layer_sizes.push_back(s);
  }
  std::getline(in, line);
  {
    std::istringstream ls(line);
    ls >> word;
    std::string c;
    while (ls >> c) model.class_names.push_back(c);
  }
  in >> word >> model.basis_id;
  if (model.basis_id == "-") model.basis_id.clear();
  in >> word >> model.dropout_rate;
  in >> word >> model.seed;
  int standardized = 0;
  in >> word >> standardized;
  if (standardized) {
    const int k = model.layer_sizes.front();
    model.feat_mean.resize(k);
    model.feat_std.resize(k);
    for (int i = 0; i < k; ++i) in >> model.feat_mean[i];
    for (int i = 0; i < k; ++i) in >> model.feat_std[i];
  }
  for (std::size_t l = 0; l + 1 < model.layer_sizes.size(); ++l) {
    std::size_t li;
    Eigen::Index rows, cols;
    in >> word >> li >> rows >> cols;
    if (word != "layer" || li != l) throw std::runtime_error("load_model: malformed layer block");
    Eigen::MatrixXd w(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
      for (Eigen::Index j = 0; j < cols; ++j) in >> w(i, j);
    Eigen::VectorXd b(rows);
    for (Eigen::Index i = 0; i < rows; ++i) in >> b[i];
    if (!in) throw std::runtime_error("load_model: truncated checkpoint");
    model.weights.push_back(std::move(w));
    model.biases.push_back(std::move(b));
  }
  return model;
}

}  // namespace canon
