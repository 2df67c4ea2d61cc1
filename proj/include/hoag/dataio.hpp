#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "hoag/core.hpp"

namespace hoag {

using DenseMatrix = Eigen::MatrixXd;
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Row-oriented design matrix, dense or compressed sparse row.
class DesignMatrix {
 public:
  DesignMatrix() = default;
  explicit DesignMatrix(DenseMatrix dense) : storage_(std::move(dense)) {}
  explicit DesignMatrix(SparseMatrix sparse) : storage_(std::move(sparse)) {}

  Index rows() const;
  Index cols() const;
  bool is_sparse() const { return std::holds_alternative<SparseMatrix>(storage_); }

  /// A * v
  Vector multiply(const Vector& v) const;
  /// A^T * v
  Vector multiply_transpose(const Vector& v) const;
  /// A * V for a cols() x k block.
  DenseMatrix multiply(const DenseMatrix& v) const;
  /// A^T * W for a rows() x k block.
  DenseMatrix multiply_transpose(const DenseMatrix& w) const;

  double row_norm(Index i) const;
  DenseMatrix to_dense() const;
  const DenseMatrix& dense() const { return std::get<DenseMatrix>(storage_); }
  const SparseMatrix& sparse() const { return std::get<SparseMatrix>(storage_); }

  DesignMatrix select_rows(std::span<const Index> rows) const;

 private:
  std::variant<DenseMatrix, SparseMatrix> storage_;
};

/// Features plus per-row targets: +-1 for binary classification, a 0-based
/// class index for multiclass, a real value for regression.
struct Dataset {
  DesignMatrix features;
  Vector targets;

  Index size() const { return targets.size(); }
  Index feature_count() const { return features.cols(); }
  Dataset subset(std::span<const Index> rows) const;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, std::size_t column, const std::string& reason);
  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }
  const std::string& reason() const { return reason_; }

 private:
  std::size_t line_;
  std::size_t column_;
  std::string reason_;
};

/// Reads "label idx:val idx:val ..." lines with 1-based strictly ascending
/// indices into a sparse dataset. Blank lines and '#' comments are skipped.
/// `feature_count` overrides the column count (it must cover every index).
Dataset parse_libsvm(std::istream& in, std::optional<Index> feature_count = std::nullopt);

/// Canonical libsvm text; parse_libsvm(write_libsvm(d)) reproduces d exactly.
void write_libsvm(std::ostream& out, const Dataset& data);

/// Comma-separated numeric table; a non-numeric first row is treated as a
/// header. Column `target_column` becomes the targets, the rest the (dense)
/// features. Features are returned unscaled; see Standardizer.
Dataset parse_csv(std::istream& in, Index target_column);

/// Per-column affine scaling fitted on a subset of rows.
struct Standardizer {
  static constexpr double kVarianceFloor = 1e-12;

  Vector mean;
  Vector scale;  // standard deviation, or 1 for columns below the variance floor

  static Standardizer fit(const Dataset& data, std::span<const Index> rows);
  /// Dense datasets only; sparse features are returned unchanged.
  Dataset apply(const Dataset& data) const;
};

struct ThreeWaySplit {
  std::vector<Index> train;
  std::vector<Index> test;
  std::vector<Index> validation;
  std::uint64_t seed = 0;
};

/// Seeded permutation of 0..n-1 cut into thirds; the remainder goes to the
/// earlier parts.
ThreeWaySplit split_three(Index n, std::uint64_t seed);

/// Two unit-covariance Gaussian blobs centred at +-0.5 * ones, labels +-1.
Dataset synth_classification(Index n, Index p, std::uint64_t seed);
/// targets = features * w + noise * N(0, 1), with w ~ N(0, I) drawn from the seed.
Dataset synth_regression(Index n, Index p, double noise, std::uint64_t seed);
/// Same as synth_regression, also returning the generating coefficients.
Dataset synth_regression(Index n, Index p, double noise, std::uint64_t seed, Vector* coefficients);
/// K unit-covariance Gaussian blobs with N(0, I) centres; labels 0..K-1.
Dataset synth_multiclass(Index n, Index p, Index classes, std::uint64_t seed);

}  // namespace hoag
