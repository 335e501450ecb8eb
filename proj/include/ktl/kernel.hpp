#ifndef KTL_KERNEL_HPP
#define KTL_KERNEL_HPP

#include "ktl/error.hpp"
#include "ktl/linalg.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace ktl {

enum class KernelFamily : std::uint8_t { Linear = 0, Polynomial = 1, Rbf = 2 };

struct KernelSpec {
  KernelFamily family = KernelFamily::Polynomial;
  int degree = 4;
  double gain = 1.0;
  double coef0 = 1.0;
  double gamma = 1.0;

  static KernelSpec linear() { return {KernelFamily::Linear, 1, 1.0, 0.0, 1.0}; }
  static KernelSpec polynomial(int degree = 4, double gain = 1.0, double coef0 = 1.0) {
    return {KernelFamily::Polynomial, degree, gain, coef0, 1.0};
  }
  static KernelSpec rbf(double gamma) { return {KernelFamily::Rbf, 1, 1.0, 0.0, gamma}; }

  void validate() const {
    switch (family) {
      case KernelFamily::Linear: return;
      case KernelFamily::Polynomial:
        if (degree < 1) throw Error(Errc::InvalidArgument, "polynomial degree must be positive");
        if (!(gain > 0.0)) throw Error(Errc::InvalidArgument, "polynomial gain must be positive");
        if (!(coef0 >= 0.0)) throw Error(Errc::InvalidArgument, "polynomial coef0 must be non-negative");
        return;
      case KernelFamily::Rbf:
        if (!(gamma > 0.0)) throw Error(Errc::InvalidArgument, "rbf gamma must be positive");
        return;
    }
    throw Error(Errc::InvalidArgument, "unknown kernel family");
  }

  friend bool operator==(const KernelSpec&, const KernelSpec&) = default;
};

namespace detail {
inline double parse_number(std::string_view tok, std::string_view what) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size())
    throw Error(Errc::InvalidArgument, "bad " + std::string(what) + " '" + std::string(tok) + "' in kernel spec");
  return v;
}
}  // namespace detail

/// Parses `linear`, `poly[:degree[:gain[:coef0]]]` (also `polynomial`), or `rbf:gamma`.
inline KernelSpec parse_kernel_spec(std::string_view text) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const std::size_t colon = text.find(':', start);
    parts.push_back(text.substr(start, colon - start));
    if (colon == std::string_view::npos) break;
    start = colon + 1;
  }
  KernelSpec spec;
  const std::string_view family = parts.front();
  if (family == "linear") {
    if (parts.size() != 1) throw Error(Errc::InvalidArgument, "linear kernel takes no parameters");
    spec = KernelSpec::linear();
  } else if (family == "poly" || family == "polynomial") {
    if (parts.size() > 4) throw Error(Errc::InvalidArgument, "too many polynomial kernel parameters");
    spec = KernelSpec::polynomial();
    if (parts.size() > 1) {
      const double d = detail::parse_number(parts[1], "degree");
      if (d != std::floor(d)) throw Error(Errc::InvalidArgument, "polynomial degree must be an integer");
      spec.degree = static_cast<int>(d);
    }
    if (parts.size() > 2) spec.gain = detail::parse_number(parts[2], "gain");
    if (parts.size() > 3) spec.coef0 = detail::parse_number(parts[3], "coef0");
  } else if (family == "rbf") {
    if (parts.size() != 2) throw Error(Errc::InvalidArgument, "rbf kernel needs exactly one parameter: rbf:gamma");
    spec = KernelSpec::rbf(detail::parse_number(parts[1], "gamma"));
  } else {
    throw Error(Errc::InvalidArgument, "unknown kernel family '" + std::string(family) + "'");
  }
  spec.validate();
  return spec;
}

inline std::string to_string(const KernelSpec& spec) {
  std::ostringstream out;
  out.precision(17);
  switch (spec.family) {
    case KernelFamily::Linear: out << "linear"; break;
    case KernelFamily::Polynomial: out << "poly:" << spec.degree << ':' << spec.gain << ':' << spec.coef0; break;
    case KernelFamily::Rbf: out << "rbf:" << spec.gamma; break;
  }
  return out.str();
}

namespace detail {
inline double apply_kernel(double inner, double dist2, const KernelSpec& spec) {
  switch (spec.family) {
    case KernelFamily::Linear: return inner;
    case KernelFamily::Polynomial: {
      const double base = spec.gain * inner + spec.coef0;
      double acc = 1.0;
      for (int i = 0; i < spec.degree; ++i) acc *= base;
      return acc;
    }
    case KernelFamily::Rbf: return std::exp(-spec.gamma * dist2);
  }
  return 0.0;
}

// Entry-wise kernel of two column blocks. Linear and polynomial kernels go
// through one matrix product; RBF uses explicit squared differences so the
// diagonal is exactly exp(0) = 1.
inline Matrix kernel_block(const Eigen::Ref<const Matrix>& a, const Eigen::Ref<const Matrix>& b,
                           const KernelSpec& spec) {
  Matrix out(a.cols(), b.cols());
  if (spec.family == KernelFamily::Rbf) {
    for (Index j = 0; j < b.cols(); ++j)
      for (Index i = 0; i < a.cols(); ++i)
        out(i, j) = std::exp(-spec.gamma * (a.col(i) - b.col(j)).squaredNorm());
    return out;
  }
  out.noalias() = a.transpose() * b;
  if (spec.family == KernelFamily::Polynomial)
    out = out.unaryExpr([&spec](double v) { return apply_kernel(v, 0.0, spec); });
  return out;
}
}  // namespace detail

inline double kernel_value(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& y,
                           const KernelSpec& spec) {
  if (x.size() != y.size())
    throw Error(Errc::DimensionMismatch, "kernel arguments have lengths " + std::to_string(x.size()) + " and " +
                                             std::to_string(y.size()));
  const double inner = spec.family == KernelFamily::Rbf ? 0.0 : x.dot(y);
  const double dist2 = spec.family == KernelFamily::Rbf ? (x - y).squaredNorm() : 0.0;
  return detail::apply_kernel(inner, dist2, spec);
}

struct GramMatrix {
  Matrix values;  // N x N, symmetric
  KernelSpec spec;
  std::uint64_t fingerprint = 0;  // of the training matrix
};

struct GramOptions {
  Index tile = 1024;  // columns per assembly tile
};

/// Gram matrix assembled over column tiles, upper blocks mirrored, then
/// symmetrised as (K + K^T) / 2.
inline GramMatrix gram(const Matrix& x, const KernelSpec& spec, const GramOptions& opts = {}) {
  spec.validate();
  if (x.cols() < 1) throw Error(Errc::EmptyInput, "gram of an empty sample set");
  const Index n = x.cols();
  const Index tile = std::max<Index>(1, opts.tile);
  GramMatrix out;
  out.spec = spec;
  out.fingerprint = fingerprint(x);
  out.values.resize(n, n);
  for (Index j0 = 0; j0 < n; j0 += tile) {
    const Index jn = std::min(tile, n - j0);
    for (Index i0 = 0; i0 <= j0; i0 += tile) {
      const Index in = std::min(tile, n - i0);
      out.values.block(i0, j0, in, jn) = detail::kernel_block(x.middleCols(i0, in), x.middleCols(j0, jn), spec);
      if (i0 != j0) out.values.block(j0, i0, jn, in) = out.values.block(i0, j0, in, jn).transpose();
    }
  }
  Matrix sym = 0.5 * (out.values + out.values.transpose());
  out.values = std::move(sym);
  return out;
}

inline Matrix cross_gram(const Matrix& train, const Matrix& test, const KernelSpec& spec,
                         const GramOptions& opts = {}) {
  spec.validate();
  if (train.rows() != test.rows())
    throw Error(Errc::DimensionMismatch, "train dim " + std::to_string(train.rows()) + " vs test dim " +
                                             std::to_string(test.rows()));
  Matrix out(train.cols(), test.cols());
  const Index tile = std::max<Index>(1, opts.tile);
  for (Index j0 = 0; j0 < test.cols(); j0 += tile) {
    const Index jn = std::min(tile, test.cols() - j0);
    out.middleCols(j0, jn) = detail::kernel_block(train, test.middleCols(j0, jn), spec);
  }
  return out;
}

}  // namespace ktl

#endif  // KTL_KERNEL_HPP
