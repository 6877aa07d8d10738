#pragma once

// Adversary-side metrics: Pearson correlation, KNN and linear SVM user
// identification over per-day pattern vectors, and the interception vector.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "fnf/core_model.hpp"
#include "fnf/pattern.hpp"

namespace fnf {

inline double pearson(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DomainError("pearson needs equal lengths");
  if (a.size() < 2) throw DomainError("pearson needs at least two points");
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - ma, db = b[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa == 0.0 || sbb == 0.0) throw UndefinedCorrelation("pearson undefined for a constant vector");
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

struct Correlation {
  double value = 0.0;
  bool undefined = false;
};

// Constant inputs carry no linear information: reported as 0, flagged.
inline Correlation pearson_or_zero(std::span<const double> a, std::span<const double> b) {
  try {
    return {pearson(a, b), false};
  } catch (const UndefinedCorrelation&) {
    return {0.0, true};
  }
}

// p_i = f_i / u_i, 0 where u_i = 0, clamped to [0, 1].
inline std::vector<double> interception_vector(const PatternVector& f, const PatternVector& u) {
  if (f.size() != u.size()) throw DomainError("interception vector needs equal lengths");
  std::vector<double> p(f.size(), 0.0);
  for (std::size_t i = 0; i < f.size(); ++i)
    if (u[i] > 0.0) p[i] = std::clamp(f[i] / u[i], 0.0, 1.0);
  return p;
}

struct LabeledVector {
  std::vector<double> x;
  int label = 0;
};

using LabeledVectorSet = std::vector<LabeledVector>;

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

// Euclidean majority vote over the k nearest training points. Distance ties
// go to the earlier training point; vote ties to the nearest neighbour's label.
inline int knn_predict(const LabeledVectorSet& train, std::span<const double> x, std::size_t k) {
  if (train.empty()) throw DomainError("knn needs a non-empty training set");
  if (k == 0 || k > train.size()) throw DomainError("knn needs 1 <= k <= |train|");
  std::vector<std::pair<double, std::size_t>> d;
  d.reserve(train.size());
  for (std::size_t i = 0; i < train.size(); ++i) d.emplace_back(squared_distance(train[i].x, x), i);
  std::partial_sort(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(k), d.end());
  std::map<int, std::size_t> votes;
  for (std::size_t i = 0; i < k; ++i) ++votes[train[d[i].second].label];
  std::size_t best = 0;
  for (const auto& [label, c] : votes) best = std::max(best, c);
  for (std::size_t i = 0; i < k; ++i) {
    const int label = train[d[i].second].label;
    if (votes[label] == best) return label;
  }
  return train[d.front().second].label;
}

inline std::vector<int> knn_classify(const LabeledVectorSet& train, const std::vector<std::vector<double>>& test,
                                     std::size_t k = 5) {
  std::vector<int> out;
  out.reserve(test.size());
  for (const auto& x : test) out.push_back(knn_predict(train, x, k));
  return out;
}

struct SvmParams {
  double lambda = 1e-3;
  int epochs = 200;
  std::uint64_t seed = 1;
};

// Two-class linear SVM: hinge loss + L2, Pegasos step size 1/(lambda t),
// on features z-scored with the training split's statistics.
class LinearSvm {
 public:
  void train(const LabeledVectorSet& data, const SvmParams& params = {}) {
    if (data.empty()) throw DomainError("svm needs a non-empty training set");
    std::vector<int> labels;
    for (const auto& p : data)
      if (std::find(labels.begin(), labels.end(), p.label) == labels.end()) labels.push_back(p.label);
    if (labels.size() != 2) throw DomainError("svm needs exactly two classes");
    std::sort(labels.begin(), labels.end());
    neg_ = labels[0];
    pos_ = labels[1];

    const std::size_t dim = data.front().x.size();
    mean_.assign(dim, 0.0);
    scale_.assign(dim, 1.0);
    for (const auto& p : data)
      for (std::size_t j = 0; j < dim; ++j) mean_[j] += p.x[j];
    for (auto& m : mean_) m /= static_cast<double>(data.size());
    std::vector<double> var(dim, 0.0);
    for (const auto& p : data)
      for (std::size_t j = 0; j < dim; ++j) var[j] += (p.x[j] - mean_[j]) * (p.x[j] - mean_[j]);
    for (std::size_t j = 0; j < dim; ++j) {
      const double sd = std::sqrt(var[j] / static_cast<double>(data.size()));
      scale_[j] = sd > 0.0 ? sd : 1.0;
    }

    std::vector<std::vector<double>> z;
    std::vector<double> y;
    z.reserve(data.size());
    for (const auto& p : data) {
      z.push_back(features(p.x));
      y.push_back(p.label == pos_ ? 1.0 : -1.0);
    }
    w_.assign(dim + 1, 0.0);
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(params.seed);
    std::uint64_t t = 0;
    for (int epoch = 0; epoch < params.epochs; ++epoch) {
      std::shuffle(order.begin(), order.end(), rng);
      for (auto i : order) {
        ++t;
        const double eta = 1.0 / (params.lambda * static_cast<double>(t));
        const double margin = y[i] * dot(z[i]);
        for (auto& wj : w_) wj *= (1.0 - eta * params.lambda);
        if (margin < 1.0)
          for (std::size_t j = 0; j < w_.size(); ++j) w_[j] += eta * y[i] * z[i][j];
      }
    }
  }

  double decision(std::span<const double> x) const { return dot(features(x)); }
  int predict(std::span<const double> x) const { return decision(x) >= 0.0 ? pos_ : neg_; }

  std::vector<int> classify(const std::vector<std::vector<double>>& test) const {
    std::vector<int> out;
    out.reserve(test.size());
    for (const auto& x : test) out.push_back(predict(x));
    return out;
  }

  const std::vector<double>& weights() const noexcept { return w_; }

 private:
  // Standardized features plus a constant 1 for the bias.
  std::vector<double> features(std::span<const double> x) const {
    std::vector<double> z(mean_.size() + 1, 1.0);
    for (std::size_t j = 0; j < mean_.size(); ++j) z[j] = (x[j] - mean_[j]) / scale_[j];
    return z;
  }
  double dot(const std::vector<double>& z) const {
    double s = 0.0;
    for (std::size_t j = 0; j < w_.size(); ++j) s += w_[j] * z[j];
    return s;
  }

  std::vector<double> mean_, scale_, w_;
  int neg_ = 0, pos_ = 1;
};

inline double accuracy(std::span<const int> predicted, std::span<const int> truth) {
  if (predicted.size() != truth.size() || truth.empty()) throw DomainError("accuracy needs equal non-empty lists");
  std::size_t ok = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) ok += predicted[i] == truth[i];
  return static_cast<double>(ok) / static_cast<double>(truth.size());
}

// Mean per-class recall.
inline double balanced_accuracy(std::span<const int> predicted, std::span<const int> truth) {
  if (predicted.size() != truth.size() || truth.empty()) throw DomainError("accuracy needs equal non-empty lists");
  std::map<int, std::pair<std::size_t, std::size_t>> per;  // label -> (correct, total)
  for (std::size_t i = 0; i < truth.size(); ++i) {
    auto& c = per[truth[i]];
    c.first += predicted[i] == truth[i];
    ++c.second;
  }
  double s = 0.0;
  for (const auto& [label, c] : per) s += static_cast<double>(c.first) / static_cast<double>(c.second);
  return s / static_cast<double>(per.size());
}

struct Split {
  LabeledVectorSet train;
  LabeledVectorSet test;
};

// Per-label shuffle, first round(train_fraction * size) of each label to train.
inline Split stratified_split(const LabeledVectorSet& data, double train_fraction, std::uint64_t seed) {
  std::map<int, std::vector<std::size_t>> by_label;
  for (std::size_t i = 0; i < data.size(); ++i) by_label[data[i].label].push_back(i);
  std::mt19937_64 rng(seed);
  Split out;
  for (auto& [label, idx] : by_label) {
    std::shuffle(idx.begin(), idx.end(), rng);
    const auto cut = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(idx.size())));
    for (std::size_t i = 0; i < idx.size(); ++i) (i < cut ? out.train : out.test).push_back(data[idx[i]]);
  }
  return out;
}

struct ClassifierScores {
  double knn = 0.0;
  double svm = 0.0;
  double mean() const { return 0.5 * (knn + svm); }
};

// 70/30 stratified split, KNN (k) and SVM, balanced accuracy on the test part.
inline ClassifierScores identify_users(const LabeledVectorSet& data, std::uint64_t seed, std::size_t k = 5,
                                       SvmParams svm = {}, double train_fraction = 0.7) {
  auto split = stratified_split(data, train_fraction, seed);
  if (split.train.empty() || split.test.empty()) throw DomainError("split left an empty part");
  std::vector<std::vector<double>> xs;
  std::vector<int> truth;
  for (const auto& p : split.test) {
    xs.push_back(p.x);
    truth.push_back(p.label);
  }
  ClassifierScores s;
  s.knn = balanced_accuracy(knn_classify(split.train, xs, k), truth);
  LinearSvm model;
  svm.seed = seed ^ 0x5bd1e995ULL;
  model.train(split.train, svm);
  s.svm = balanced_accuracy(model.classify(xs), truth);
  return s;
}

}  // namespace fnf
