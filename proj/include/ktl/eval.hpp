#ifndef KTL_EVAL_HPP
#define KTL_EVAL_HPP

// Nearest-neighbour evaluation of learned features and wall-clock benchmarks
// of the representation learners.

#include "ktl/error.hpp"
#include "ktl/linalg.hpp"
#include "ktl/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

namespace ktl {

/// k-NN with Euclidean distance. Distance ties go to the smaller training
/// index; vote ties go to the smaller class id.
inline std::vector<int> knn_classify(const Matrix& train, const std::vector<int>& train_labels, const Matrix& test,
                                     int k = 1) {
  const Index n = train.cols();
  if (n == 0) throw Error(Errc::EmptyTrainingSet, "no training samples");
  if (static_cast<Index>(train_labels.size()) != n)
    throw Error(Errc::LengthMismatch, "training labels vs training samples");
  if (train.rows() != test.rows())
    throw Error(Errc::DimensionMismatch, "feature dims " + std::to_string(train.rows()) + " vs " +
                                             std::to_string(test.rows()));
  if (k < 1 || k > n) throw Error(Errc::InvalidArgument, "k must be in [1, N]");
  const int classes = *std::max_element(train_labels.begin(), train_labels.end()) + 1;
  if (*std::min_element(train_labels.begin(), train_labels.end()) < 0)
    throw Error(Errc::InvalidArgument, "class ids must be non-negative");

  std::vector<int> predictions(static_cast<std::size_t>(test.cols()));
  std::vector<double> dist(static_cast<std::size_t>(n));
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::vector<int> votes(static_cast<std::size_t>(classes));
  for (Index j = 0; j < test.cols(); ++j) {
    for (Index i = 0; i < n; ++i) dist[static_cast<std::size_t>(i)] = (train.col(i) - test.col(j)).squaredNorm();
    std::iota(order.begin(), order.end(), Index{0});
    auto closer = [&dist](Index a, Index b) {
      const double da = dist[static_cast<std::size_t>(a)], db = dist[static_cast<std::size_t>(b)];
      return da < db || (da == db && a < b);
    };
    std::partial_sort(order.begin(), order.begin() + k, order.end(), closer);
    std::fill(votes.begin(), votes.end(), 0);
    for (int i = 0; i < k; ++i) ++votes[static_cast<std::size_t>(train_labels[static_cast<std::size_t>(order[i])])];
    predictions[static_cast<std::size_t>(j)] =
        static_cast<int>(std::max_element(votes.begin(), votes.end()) - votes.begin());
  }
  return predictions;
}

inline double accuracy(const std::vector<int>& predictions, const std::vector<int>& truth) {
  if (predictions.size() != truth.size())
    throw Error(Errc::LengthMismatch, std::to_string(predictions.size()) + " predictions vs " +
                                          std::to_string(truth.size()) + " labels");
  if (truth.empty()) throw Error(Errc::EmptyInput, "no predictions to score");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) hits += predictions[i] == truth[i];
  return static_cast<double>(hits) / static_cast<double>(truth.size());
}

struct EvalResult {
  double accuracy = 0.0;
  int n_test = 0;
  std::vector<int> predictions;
  Eigen::MatrixXi confusion;  // rows: true class, cols: predicted class
};

inline EvalResult evaluate(const std::vector<int>& predictions, const std::vector<int>& truth) {
  EvalResult out;
  out.accuracy = accuracy(predictions, truth);
  out.n_test = static_cast<int>(truth.size());
  out.predictions = predictions;
  const int classes = std::max(*std::max_element(truth.begin(), truth.end()),
                               *std::max_element(predictions.begin(), predictions.end())) + 1;
  out.confusion = Eigen::MatrixXi::Zero(classes, classes);
  for (std::size_t i = 0; i < truth.size(); ++i) ++out.confusion(truth[i], predictions[i]);
  return out;
}

inline EvalResult evaluate_knn(const Matrix& train, const std::vector<int>& train_labels, const Matrix& test,
                               const std::vector<int>& test_labels, int k = 1) {
  return evaluate(knn_classify(train, train_labels, test, k), test_labels);
}

// ---------------------------------------------------------------- timing

struct TimingReport {
  Method method = Method::TL;
  double fit_seconds = 0.0;
  double encode_seconds_per_1k = 0.0;
  Index n_train = 0;
  std::string config_digest;
  FitReport fit;
};

inline std::string describe_config(Method method, const Matrix& data, const FitSettings& s) {
  std::ostringstream out;
  out.precision(17);
  out << "method=" << method_name(method) << ";n=" << data.rows() << ";N=" << data.cols()
      << ";threshold=" << s.tl.threshold << ";lambda=" << s.tl.lambda << ";max_iters=" << s.tl.max_iters
      << ";rel_tol=" << s.tl.rel_tol << ";init=" << (s.tl.init == InitKind::Identity ? "identity" : "random")
      << ";seed=" << s.tl.seed;
  switch (method) {
    case Method::TL: out << ";pca_dim=" << s.pca_dim; break;
    case Method::KTL: out << ";kernel=" << to_string(s.kernel); break;
    case Method::EKTL:
      out << ";kernel=" << to_string(s.kernel) << ";rank=" << (s.rank == 0 ? default_rank(data) : s.rank)
          << ";epsilon=" << s.ektl.epsilon << ";inner_iters=" << s.ektl.inner_iters
          << ";eig=" << (s.ektl.eig.solver == EigSolverKind::Dense ? "dense" : "randomized");
      break;
  }
  return out.str();
}

/// FNV-1a of the canonical configuration text plus the data fingerprint.
inline std::string config_digest(Method method, const Matrix& data, const FitSettings& s) {
  const std::string text = describe_config(method, data, s);
  std::uint64_t h = fingerprint(data);
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

/// Times the fit call only; the encode figure is measured separately on up to
/// 1000 training columns and scaled to 1000 samples.
inline TimingReport bench_fit(Method method, const Matrix& data, const FitSettings& s) {
  TimingReport out;
  out.method = method;
  out.n_train = data.cols();
  out.config_digest = config_digest(method, data, s);

  const auto t0 = std::chrono::steady_clock::now();
  PipelineFit fit = fit_method(method, data, s);
  const auto t1 = std::chrono::steady_clock::now();
  out.fit_seconds = std::chrono::duration<double>(t1 - t0).count();
  out.fit = std::move(fit.report);

  const Index probe = std::min<Index>(1000, data.cols());
  const auto t2 = std::chrono::steady_clock::now();
  const Matrix codes = encode(fit.model, data.leftCols(probe));
  const auto t3 = std::chrono::steady_clock::now();
  out.encode_seconds_per_1k = std::chrono::duration<double>(t3 - t2).count() * 1000.0 / static_cast<double>(probe);
  return out;
}

/// Loads once (untimed), then benchmarks each method on the loaded data.
template <typename Loader>
std::vector<TimingReport> bench_methods(Loader&& load, const std::vector<Method>& methods, const FitSettings& s) {
  const Matrix data = load();
  std::vector<TimingReport> out;
  out.reserve(methods.size());
  for (Method m : methods) out.push_back(bench_fit(m, data, s));
  return out;
}

}  // namespace ktl

#endif  // KTL_EVAL_HPP
