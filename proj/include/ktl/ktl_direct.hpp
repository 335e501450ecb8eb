#ifndef KTL_KTL_DIRECT_HPP
#define KTL_KTL_DIRECT_HPP

// Kernel transform learning on the full Gram matrix: B K(X,X) ~ Z with B
// square N x N, solved by the same alternation as linear transform learning
// with K in place of the data. Test samples are encoded through the cross-Gram
// column K(X, x).

#include "ktl/error.hpp"
#include "ktl/kernel.hpp"
#include "ktl/linalg.hpp"
#include "ktl/transform.hpp"

#include <optional>
#include <string>

namespace ktl {

/// B = b (r x r) * basis^T, basis N x r with orthonormal columns.
struct ReducedTransform {
  Matrix b;
  Matrix basis;
};

struct KtlModel {
  std::optional<Matrix> b_full;            // direct path, N x N
  std::optional<ReducedTransform> reduced;  // efficient path
  KernelSpec kernel;
  Matrix train_samples;  // n x N, needed for the cross-Gram at encode time
  double threshold = 0.0;
  double lambda = 1.0;
  std::uint64_t gram_fingerprint = 0;

  bool is_direct() const { return b_full.has_value(); }
  Index train_size() const { return train_samples.cols(); }
  Index input_dim() const { return train_samples.rows(); }
  Index code_dim() const { return b_full ? b_full->rows() : reduced ? reduced->b.rows() : 0; }

  void validate() const {
    if (b_full.has_value() == reduced.has_value())
      throw Error(Errc::InvalidArgument, "exactly one of the direct or reduced transforms must be set");
    const Index n = train_size();
    if (b_full && (b_full->rows() != n || b_full->cols() != n))
      throw Error(Errc::DimensionMismatch, "direct transform must be N x N");
    if (reduced) {
      const Index r = reduced->b.rows();
      if (reduced->b.cols() != r || reduced->basis.rows() != n || reduced->basis.cols() != r)
        throw Error(Errc::DimensionMismatch, "reduced transform must be r x r with an N x r basis");
      const double ortho = (reduced->basis.transpose() * reduced->basis - Matrix::Identity(r, r)).norm();
      if (ortho > 1e-10) throw Error(Errc::InvalidArgument, "basis columns are not orthonormal");
    }
    if (gram_fingerprint != 0 && fingerprint(train_samples) != gram_fingerprint)
      throw Error(Errc::InvalidArgument, "training samples do not match the Gram matrix used at fit time");
  }
};

struct KtlFit {
  KtlModel model;
  Matrix codes;
  FitReport report;
};

struct KtlOptions {
  Index sample_cap = 5000;
  GramOptions gram;
};

inline KtlFit fit_ktl(const Matrix& x, const KernelSpec& kernel, const TlConfig& cfg, const KtlOptions& opts = {}) {
  cfg.validate();
  if (x.cols() > opts.sample_cap)
    throw Error(Errc::SampleCapExceeded, std::to_string(x.cols()) + " samples exceed the direct-path cap of " +
                                             std::to_string(opts.sample_cap) + "; use the efficient path (--method ektl)");
  const auto start = std::chrono::steady_clock::now();
  const GramMatrix k = gram(x, kernel, opts.gram);
  TransformFit tl = fit_transform(k.values, cfg);

  KtlFit out;
  out.model.b_full = std::move(tl.model.matrix);
  out.model.kernel = kernel;
  out.model.train_samples = x;
  out.model.threshold = cfg.threshold;
  out.model.lambda = cfg.lambda;
  out.model.gram_fingerprint = k.fingerprint;
  out.codes = std::move(tl.codes);
  out.report = std::move(tl.report);
  out.report.wall_time_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

/// Materialises the N-column transform B (b_full, or b * basis^T).
inline Matrix effective_transform(const KtlModel& model) {
  if (model.b_full) return *model.b_full;
  return model.reduced->b * model.reduced->basis.transpose();
}

/// One cross-Gram, one product, one threshold. The reduced path applies
/// b * (basis^T k) and never forms b * basis^T.
inline Matrix ktl_encode(const KtlModel& model, const Matrix& x_test, const GramOptions& opts = {}) {
  if (x_test.rows() != model.input_dim())
    throw Error(Errc::DimensionMismatch, "test dim " + std::to_string(x_test.rows()) + " vs training dim " +
                                             std::to_string(model.input_dim()));
  const Matrix k = cross_gram(model.train_samples, x_test, model.kernel, opts);
  if (model.b_full) return hard_threshold(*model.b_full * k, model.threshold);
  if (!model.reduced) throw Error(Errc::InvalidArgument, "model has no transform");
  const Matrix projected = model.reduced->basis.transpose() * k;
  return hard_threshold(model.reduced->b * projected, model.threshold);
}

inline Vector ktl_encode(const KtlModel& model, const Vector& x_test) {
  return ktl_encode(model, Matrix(x_test)).col(0);
}

}  // namespace ktl

#endif  // KTL_KTL_DIRECT_HPP
