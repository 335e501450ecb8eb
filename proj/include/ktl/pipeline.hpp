#ifndef KTL_PIPELINE_HPP
#define KTL_PIPELINE_HPP

// Method-agnostic fit/encode entry points shared by the CLI and benchmarks.

#include "ktl/dataset.hpp"
#include "ktl/error.hpp"
#include "ktl/kernel.hpp"
#include "ktl/ktl_direct.hpp"
#include "ktl/ktl_efficient.hpp"
#include "ktl/transform.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <variant>

namespace ktl {

enum class Method : std::uint8_t { TL = 1, KTL = 2, EKTL = 3 };

inline std::string_view method_name(Method m) {
  switch (m) {
    case Method::TL: return "tl";
    case Method::KTL: return "ktl";
    case Method::EKTL: return "ektl";
  }
  return "?";
}

inline Method parse_method(std::string_view text) {
  if (text == "tl") return Method::TL;
  if (text == "ktl") return Method::KTL;
  if (text == "ektl") return Method::EKTL;
  throw Error(Errc::InvalidArgument, "unknown method '" + std::string(text) + "' (expected tl, ktl or ektl)");
}

struct FitSettings {
  TlConfig tl;
  KernelSpec kernel = KernelSpec::polynomial(4);
  Index rank = 0;     // eKTL; 0 selects min(n, N)
  Index pca_dim = 0;  // TL; 0 keeps the raw dimension
  KtlOptions ktl;
  EktlOptions ektl;
};

using Model = std::variant<TransformModel, KtlModel>;

inline Method method_of(const Model& model) {
  if (std::holds_alternative<TransformModel>(model)) return Method::TL;
  return std::get<KtlModel>(model).is_direct() ? Method::KTL : Method::EKTL;
}

struct PipelineFit {
  Model model;
  Matrix codes;
  FitReport report;
};

inline PipelineFit fit_method(Method method, const Matrix& x, const FitSettings& s) {
  switch (method) {
    case Method::TL: {
      if (s.pca_dim == 0) {
        TransformFit f = fit_transform(x, s.tl);
        return {std::move(f.model), std::move(f.codes), std::move(f.report)};
      }
      const auto start = std::chrono::steady_clock::now();
      Matrix basis = principal_basis(x, s.pca_dim);
      TransformFit f = fit_transform(basis.transpose() * x, s.tl);
      f.model.projection = std::move(basis);
      f.report.wall_time_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      return {std::move(f.model), std::move(f.codes), std::move(f.report)};
    }
    case Method::KTL: {
      KtlFit f = fit_ktl(x, s.kernel, s.tl, s.ktl);
      return {std::move(f.model), std::move(f.codes), std::move(f.report)};
    }
    case Method::EKTL: {
      const Index rank = s.rank == 0 ? default_rank(x) : s.rank;
      KtlFit f = fit_ektl(x, s.kernel, rank, s.tl, s.ektl);
      return {std::move(f.model), std::move(f.codes), std::move(f.report)};
    }
  }
  throw Error(Errc::InvalidArgument, "unknown method");
}

/// Codes for each column of x (code_dim x M).
inline Matrix encode(const Model& model, const Matrix& x) {
  if (const auto* tl = std::get_if<TransformModel>(&model)) return tl_encode(*tl, x);
  return ktl_encode(std::get<KtlModel>(model), x);
}

}  // namespace ktl

#endif  // KTL_PIPELINE_HPP
