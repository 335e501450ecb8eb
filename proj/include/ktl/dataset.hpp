#ifndef KTL_DATASET_HPP
#define KTL_DATASET_HPP

// Dataset ingestion and per-sample preprocessing.
//
// Samples are stored column-major: an n x N matrix with one sample per
// column. IDX files (the MNIST distribution format) are big-endian:
//
//   offset  type     value
//   0000    u32 BE   0x00000803 (images) or 0x00000801 (labels)
//   0004    u32 BE   dim 0 (item count)
//   0008    u32 BE   dim 1 (rows, images only)
//   0012    u32 BE   dim 2 (cols, images only)
//   ....    u8       payload, row-major per item

#include "ktl/error.hpp"
#include "ktl/linalg.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <iterator>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace ktl {

struct Dataset {
  Matrix samples;                 // n x N
  std::optional<std::vector<int>> labels;
  std::string source;
  std::optional<std::array<std::uint32_t, 2>> image_shape;  // rows, cols for IDX images

  Index dim() const { return samples.rows(); }
  Index size() const { return samples.cols(); }

  void validate() const {
    if (!samples.allFinite())
      throw Error(Errc::InvalidArgument, "dataset '" + source + "' contains non-finite values");
    if (labels && static_cast<Index>(labels->size()) != samples.cols())
      throw Error(Errc::LengthMismatch, "label count does not match sample count");
    if (labels && std::any_of(labels->begin(), labels->end(), [](int l) { return l < 0; }))
      throw Error(Errc::InvalidArgument, "class ids must be non-negative");
  }

  /// First `count` samples (and labels), or everything when count >= size().
  Dataset head(Index count) const {
    Dataset out = *this;
    if (count >= size()) return out;
    out.samples = samples.leftCols(count);
    if (labels) out.labels = std::vector<int>(labels->begin(), labels->begin() + count);
    return out;
  }

  /// Samples [first, first + count).
  Dataset slice(Index first, Index count) const {
    if (first < 0 || count < 0 || first + count > size())
      throw Error(Errc::InvalidArgument, "slice out of range");
    Dataset out = *this;
    out.samples = samples.middleCols(first, count);
    if (labels) out.labels = std::vector<int>(labels->begin() + first, labels->begin() + first + count);
    return out;
  }
};

// ---------------------------------------------------------------- IDX

namespace idx {
inline constexpr std::uint32_t kImageMagic = 0x00000803;
inline constexpr std::uint32_t kLabelMagic = 0x00000801;

inline std::uint32_t read_be32(std::span<const std::uint8_t> bytes, std::size_t offset) {
  if (bytes.size() < offset + 4)
    throw Error(Errc::TruncatedPayload, "header ends at byte " + std::to_string(bytes.size()));
  return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
         (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

inline void write_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

inline void check_payload(std::span<const std::uint8_t> bytes, std::size_t header, std::uint64_t expected) {
  const std::uint64_t have = bytes.size() - header;
  if (have < expected)
    throw Error(Errc::TruncatedPayload, "payload has " + std::to_string(have) + " bytes, dims imply " +
                                            std::to_string(expected));
  if (have > expected)
    throw Error(Errc::CorruptLength, "payload has " + std::to_string(have - expected) + " trailing bytes");
}
}  // namespace idx

using IdxContent = std::variant<Dataset, std::vector<int>>;

inline IdxContent load_idx(std::span<const std::uint8_t> bytes) {
  const std::uint32_t magic = idx::read_be32(bytes, 0);
  if (magic == idx::kImageMagic) {
    const std::uint32_t count = idx::read_be32(bytes, 4);
    const std::uint32_t rows = idx::read_be32(bytes, 8);
    const std::uint32_t cols = idx::read_be32(bytes, 12);
    const std::uint64_t pixels = std::uint64_t{rows} * cols;
    idx::check_payload(bytes, 16, pixels * count);
    Dataset ds;
    ds.samples.resize(static_cast<Index>(pixels), static_cast<Index>(count));
    const std::uint8_t* p = bytes.data() + 16;
    for (Index j = 0; j < ds.samples.cols(); ++j)
      for (Index i = 0; i < ds.samples.rows(); ++i) ds.samples(i, j) = *p++ / 255.0;
    ds.image_shape = std::array<std::uint32_t, 2>{rows, cols};
    ds.source = "idx";
    return ds;
  }
  if (magic == idx::kLabelMagic) {
    const std::uint32_t count = idx::read_be32(bytes, 4);
    idx::check_payload(bytes, 8, count);
    return std::vector<int>(bytes.begin() + 8, bytes.end());
  }
  std::ostringstream msg;
  msg << "magic 0x" << std::hex << std::setw(8) << std::setfill('0') << magic;
  throw Error(Errc::UnknownMagic, msg.str());
}

/// Inverse of load_idx for image tensors; values are rounded back to bytes.
inline std::vector<std::uint8_t> save_idx_images(const Dataset& ds) {
  if (!ds.image_shape) throw Error(Errc::InvalidArgument, "dataset has no image shape");
  const auto [rows, cols] = *ds.image_shape;
  if (Index{rows} * Index{cols} != ds.dim()) throw Error(Errc::DimensionMismatch, "image shape vs sample dim");
  std::vector<std::uint8_t> out;
  out.reserve(16 + static_cast<std::size_t>(ds.samples.size()));
  idx::write_be32(out, idx::kImageMagic);
  idx::write_be32(out, static_cast<std::uint32_t>(ds.size()));
  idx::write_be32(out, rows);
  idx::write_be32(out, cols);
  for (Index j = 0; j < ds.size(); ++j)
    for (Index i = 0; i < ds.dim(); ++i)
      out.push_back(static_cast<std::uint8_t>(std::clamp(std::lround(ds.samples(i, j) * 255.0), 0L, 255L)));
  return out;
}

inline std::vector<std::uint8_t> save_idx_labels(const std::vector<int>& labels) {
  std::vector<std::uint8_t> out;
  idx::write_be32(out, idx::kLabelMagic);
  idx::write_be32(out, static_cast<std::uint32_t>(labels.size()));
  for (int l : labels) {
    if (l < 0 || l > 255) throw Error(Errc::InvalidArgument, "label does not fit an unsigned byte");
    out.push_back(static_cast<std::uint8_t>(l));
  }
  return out;
}

inline std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Io, "cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline Dataset load_idx_images(std::span<const std::uint8_t> bytes) {
  auto content = load_idx(bytes);
  if (auto* ds = std::get_if<Dataset>(&content)) return std::move(*ds);
  throw Error(Errc::UnknownMagic, "expected an image file (0x00000803), found labels");
}

inline std::vector<int> load_idx_labels(std::span<const std::uint8_t> bytes) {
  auto content = load_idx(bytes);
  if (auto* labels = std::get_if<std::vector<int>>(&content)) return std::move(*labels);
  throw Error(Errc::UnknownMagic, "expected a label file (0x00000801), found images");
}

// ---------------------------------------------------------------- CSV

struct CsvOptions {
  bool skip_header = false;
  bool label_last = false;  // final column holds the integer class id
};

namespace csv {
inline double parse_real(std::string_view field, std::size_t line) {
  while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.remove_prefix(1);
  while (!field.empty() && (field.back() == ' ' || field.back() == '\t' || field.back() == '\r'))
    field.remove_suffix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size())
    throw Error(Errc::InvalidArgument, "line " + std::to_string(line) + ": bad number '" + std::string(field) + "'");
  return v;
}

inline std::vector<double> split_reals(std::string_view row, std::size_t line) {
  std::vector<double> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = row.find(',', start);
    out.push_back(parse_real(row.substr(start, comma - start), line));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}
}  // namespace csv

inline Dataset load_csv(std::istream& in, const CsvOptions& opts = {}) {
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (lineno == 1 && opts.skip_header) continue;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    rows.push_back(csv::split_reals(line, lineno));
    if (rows.back().size() != rows.front().size())
      throw Error(Errc::DimensionMismatch, "line " + std::to_string(lineno) + ": ragged row");
  }
  if (rows.empty()) throw Error(Errc::EmptyInput, "no samples in CSV input");
  const Index width = static_cast<Index>(rows.front().size());
  const Index n = opts.label_last ? width - 1 : width;
  if (n < 1) throw Error(Errc::DimensionMismatch, "CSV rows have no feature columns");
  Dataset ds;
  ds.source = "csv";
  ds.samples.resize(n, static_cast<Index>(rows.size()));
  if (opts.label_last) ds.labels.emplace();
  for (Index j = 0; j < ds.samples.cols(); ++j) {
    const auto& r = rows[static_cast<std::size_t>(j)];
    for (Index i = 0; i < n; ++i) ds.samples(i, j) = r[static_cast<std::size_t>(i)];
    if (opts.label_last) {
      const double lab = r.back();
      if (lab != std::floor(lab)) throw Error(Errc::InvalidArgument, "label column is not integral");
      ds.labels->push_back(static_cast<int>(lab));
    }
  }
  ds.validate();
  return ds;
}

inline Dataset load_csv_file(const std::string& path, const CsvOptions& opts = {}) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::Io, "cannot open " + path);
  Dataset ds = load_csv(in, opts);
  ds.source = path;
  return ds;
}

/// One sample (column) per output row, 17 significant digits.
inline void write_csv(std::ostream& out, const Matrix& columns) {
  out << std::setprecision(17);
  for (Index j = 0; j < columns.cols(); ++j) {
    for (Index i = 0; i < columns.rows(); ++i) {
      if (i) out << ',';
      out << columns(i, j);
    }
    out << '\n';
  }
}

// ---------------------------------------------------------------- preprocessing

enum class PreprocessStep { MeanSubtract, GlobalContrastNormalize, RgbToLuma };

struct PreprocessConfig {
  std::vector<PreprocessStep> steps;
  double gcn_floor = 1e-8;

  void validate() const {
    if (!(gcn_floor > 0.0)) throw Error(Errc::InvalidArgument, "gcn_floor must be positive");
    for (std::size_t i = 1; i < steps.size(); ++i)
      if (steps[i] == PreprocessStep::RgbToLuma)
        throw Error(Errc::InvalidArgument, "RgbToLuma must be the first preprocessing step");
  }
};

/// Parses "luma,mean,gcn" (or "none" / empty).
inline PreprocessConfig parse_preprocess(std::string_view text) {
  PreprocessConfig cfg;
  if (text.empty() || text == "none") return cfg;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t comma = text.find(',', start);
    const std::string_view tok = text.substr(start, comma - start);
    if (tok == "mean") cfg.steps.push_back(PreprocessStep::MeanSubtract);
    else if (tok == "gcn") cfg.steps.push_back(PreprocessStep::GlobalContrastNormalize);
    else if (tok == "luma") cfg.steps.push_back(PreprocessStep::RgbToLuma);
    else throw Error(Errc::InvalidArgument, "unknown preprocessing step '" + std::string(tok) + "'");
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  cfg.validate();
  return cfg;
}

inline Dataset preprocess(Dataset data, const PreprocessConfig& cfg) {
  cfg.validate();
  Matrix& x = data.samples;
  for (PreprocessStep step : cfg.steps) {
    switch (step) {
      case PreprocessStep::RgbToLuma: {
        if (x.rows() % 3 != 0)
          throw Error(Errc::BadChannelLayout, "sample dimension " + std::to_string(x.rows()) + " is not divisible by 3");
        const Index p = x.rows() / 3;
        Matrix y = 0.299 * x.topRows(p) + 0.587 * x.middleRows(p, p) + 0.114 * x.bottomRows(p);
        x = std::move(y);
        data.image_shape.reset();
        break;
      }
      case PreprocessStep::MeanSubtract:
        x.rowwise() -= x.colwise().mean();
        break;
      case PreprocessStep::GlobalContrastNormalize:
        for (Index j = 0; j < x.cols(); ++j) x.col(j) /= std::max(x.col(j).norm(), cfg.gcn_floor);
        break;
    }
  }
  return data;
}

// ---------------------------------------------------------------- synthetic data

struct SynthResult {
  Dataset data;
  Matrix transform;  // T0, n x n, det > 0, condition number <= 10
  Matrix codes;      // Z0, n x N
};

inline SynthResult synth_dataset(Index n, Index count, double code_density, double noise_sigma, std::uint64_t seed) {
  if (n < 1 || count < 1) throw Error(Errc::InvalidArgument, "n and N must be positive");
  if (!(code_density > 0.0 && code_density <= 1.0)) throw Error(Errc::InvalidArgument, "code_density must be in (0,1]");
  if (!(noise_sigma >= 0.0)) throw Error(Errc::InvalidArgument, "noise_sigma must be >= 0");

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  const Matrix q = random_orthogonal_rows(n, n, rng());
  Vector scale(n);
  for (Index i = 0; i < n; ++i) scale(i) = std::pow(10.0, unit(rng));  // singular values in [1, 10)
  SynthResult out;
  out.transform = q * scale.asDiagonal();

  out.codes = Matrix::Zero(n, count);
  for (Index j = 0; j < count; ++j)
    for (Index i = 0; i < n; ++i) {
      const double keep = unit(rng);
      const double value = gauss(rng);
      if (keep < code_density) out.codes(i, j) = value;
    }

  out.data.samples = out.transform.partialPivLu().solve(out.codes);
  if (noise_sigma > 0.0)
    for (Index j = 0; j < count; ++j)
      for (Index i = 0; i < n; ++i) out.data.samples(i, j) += noise_sigma * gauss(rng);
  out.data.source = "synth(seed=" + std::to_string(seed) + ")";
  return out;
}

/// Top-m principal directions (n x m, orthonormal columns) of the uncentred
/// second-moment matrix X X^T; used to reduce data before square transform
/// learning.
inline Matrix principal_basis(const Matrix& x, Index m) {
  if (m < 1 || m > x.rows()) throw Error(Errc::InvalidArgument, "projection dimension must be in [1, n]");
  Eigen::SelfAdjointEigenSolver<Matrix> eig(x * x.transpose());
  if (eig.info() != Eigen::Success) throw Error(Errc::InvalidArgument, "eigendecomposition failed");
  return eig.eigenvectors().rightCols(m).rowwise().reverse();
}

}  // namespace ktl

#endif  // KTL_DATASET_HPP
