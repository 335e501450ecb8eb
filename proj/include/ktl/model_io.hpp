#ifndef KTL_MODEL_IO_HPP
#define KTL_MODEL_IO_HPP

// Binary model files, all integers and reals little-endian:
//
//   "KTLM"            4 bytes
//   version           u32 (= 1)
//   method            u8  (1 = TL, 2 = KTL, 3 = eKTL)
//   kernel            u8 family, u32 degree, f64 gain, f64 coef0, f64 gamma
//   threshold         f64
//   lambda            f64
//   matrix blocks     u64 rows, u64 cols, rows*cols f64 in row-major order
//     TL    transform, projection (0 x 0 when absent)
//     KTL   B (N x N), training samples (n x N)
//     eKTL  B' (r x r), U (N x r), training samples (n x N)

#include "ktl/error.hpp"
#include "ktl/pipeline.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <span>
#include <string>
#include <vector>

namespace ktl {

namespace model_file {
inline constexpr std::array<std::uint8_t, 4> kMagic = {'K', 'T', 'L', 'M'};
inline constexpr std::uint32_t kVersion = 1;

class Writer {
 public:
  void bytes(std::span<const std::uint8_t> b) { out_.insert(out_.end(), b.begin(), b.end()); }
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void matrix(const Matrix& m) {
    u64(static_cast<std::uint64_t>(m.rows()));
    u64(static_cast<std::uint64_t>(m.cols()));
    for (Index i = 0; i < m.rows(); ++i)
      for (Index j = 0; j < m.cols(); ++j) f64(m(i, j));
  }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}

  void need(std::uint64_t n, const char* what) const {
    if (in_.size() - pos_ < n)
      throw Error(Errc::CorruptLength, std::string("file ends inside ") + what);
  }
  std::uint8_t u8(const char* what) {
    need(1, what);
    return in_[pos_++];
  }
  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t{in_[pos_++]} << (8 * i);
    return v;
  }
  std::uint64_t u64(const char* what) {
    need(8, what);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t{in_[pos_++]} << (8 * i);
    return v;
  }
  double f64(const char* what) { return std::bit_cast<double>(u64(what)); }
  Matrix matrix(const char* what) {
    const std::uint64_t rows = u64(what);
    const std::uint64_t cols = u64(what);
    if (rows != 0 && cols > (in_.size() - pos_) / 8 / rows)
      throw Error(Errc::CorruptLength, std::string("matrix block '") + what + "' is truncated");
    need(rows * cols * 8, what);
    Matrix m(static_cast<Index>(rows), static_cast<Index>(cols));
    for (Index i = 0; i < m.rows(); ++i)
      for (Index j = 0; j < m.cols(); ++j) m(i, j) = f64(what);
    return m;
  }
  bool at_end() const { return pos_ == in_.size(); }
  std::size_t position() const { return pos_; }

 private:
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};
}  // namespace model_file

inline std::vector<std::uint8_t> serialize_model(const Model& model) {
  model_file::Writer w;
  w.bytes(model_file::kMagic);
  w.u32(model_file::kVersion);
  const Method method = method_of(model);
  w.u8(static_cast<std::uint8_t>(method));

  const KernelSpec kernel =
      method == Method::TL ? KernelSpec::linear() : std::get<KtlModel>(model).kernel;
  w.u8(static_cast<std::uint8_t>(kernel.family));
  w.u32(static_cast<std::uint32_t>(kernel.degree));
  w.f64(kernel.gain);
  w.f64(kernel.coef0);
  w.f64(kernel.gamma);

  if (const auto* tl = std::get_if<TransformModel>(&model)) {
    w.f64(tl->threshold);
    w.f64(tl->lambda);
    w.matrix(tl->matrix);
    w.matrix(tl->projection);
  } else {
    const auto& k = std::get<KtlModel>(model);
    w.f64(k.threshold);
    w.f64(k.lambda);
    if (k.b_full) {
      w.matrix(*k.b_full);
    } else {
      w.matrix(k.reduced->b);
      w.matrix(k.reduced->basis);
    }
    w.matrix(k.train_samples);
  }
  return w.take();
}

inline Model deserialize_model(std::span<const std::uint8_t> bytes) {
  model_file::Reader r(bytes);
  r.need(4, "magic");
  if (!std::equal(model_file::kMagic.begin(), model_file::kMagic.end(), bytes.begin()))
    throw Error(Errc::BadMagic, "not a model file (expected \"KTLM\")");
  for (int i = 0; i < 4; ++i) r.u8("magic");
  const std::uint32_t version = r.u32("version");
  if (version != model_file::kVersion)
    throw Error(Errc::VersionUnsupported, "model file version " + std::to_string(version));
  const std::uint8_t tag = r.u8("method tag");
  if (tag < 1 || tag > 3) throw Error(Errc::CorruptLength, "unknown method tag " + std::to_string(tag));
  const auto method = static_cast<Method>(tag);

  KernelSpec kernel;
  const std::uint8_t family = r.u8("kernel family");
  if (family > 2) throw Error(Errc::CorruptLength, "unknown kernel family " + std::to_string(family));
  kernel.family = static_cast<KernelFamily>(family);
  kernel.degree = static_cast<int>(r.u32("kernel degree"));
  kernel.gain = r.f64("kernel gain");
  kernel.coef0 = r.f64("kernel coef0");
  kernel.gamma = r.f64("kernel gamma");
  const double threshold = r.f64("threshold");
  const double lambda = r.f64("lambda");

  Model out;
  if (method == Method::TL) {
    TransformModel tl;
    tl.threshold = threshold;
    tl.lambda = lambda;
    tl.matrix = r.matrix("transform");
    tl.projection = r.matrix("projection");
    if (tl.matrix.rows() != tl.matrix.cols())
      throw Error(Errc::CorruptLength, "transform block is not square");
    if (tl.projection.size() && tl.projection.cols() != tl.matrix.cols())
      throw Error(Errc::CorruptLength, "projection block does not match the transform");
    out = std::move(tl);
  } else {
    kernel.validate();
    KtlModel k;
    k.kernel = kernel;
    k.threshold = threshold;
    k.lambda = lambda;
    if (method == Method::KTL) {
      k.b_full = r.matrix("transform");
    } else {
      ReducedTransform red;
      red.b = r.matrix("transform");
      red.basis = r.matrix("basis");
      k.reduced = std::move(red);
    }
    k.train_samples = r.matrix("train_samples");
    k.gram_fingerprint = fingerprint(k.train_samples);
    try {
      k.validate();
    } catch (const Error& e) {
      throw Error(Errc::CorruptLength, e.what());
    }
    out = std::move(k);
  }
  if (!r.at_end()) throw Error(Errc::CorruptLength, "trailing bytes after the last matrix block");
  return out;
}

inline void save_model(const Model& model, const std::string& path) {
  const auto bytes = serialize_model(model);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::Io, "cannot write " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(Errc::Io, "write failed for " + path);
}

inline Model load_model(const std::string& path) { return deserialize_model(read_file_bytes(path)); }

}  // namespace ktl

#endif  // KTL_MODEL_IO_HPP
