#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <span>
#include <vector>

#include "dgasm/errors.hpp"

namespace dgasm {

using Vector = std::vector<double>;

struct Triplet {
  std::size_t row;
  std::size_t col;
  double value;
};

/// Compressed sparse row matrix. Column indices are strictly increasing
/// within each row; the constructor rejects anything else.
class CsrMatrix {
 public:
  CsrMatrix() = default;
  CsrMatrix(std::size_t nrows, std::size_t ncols, std::vector<std::size_t> row_offsets,
            std::vector<std::size_t> col_indices, std::vector<double> values);

  /// Duplicate (row, col) entries are summed in the order they appear in
  /// `triplets`, so identical input produces bit-identical values.
  static CsrMatrix from_triplets(std::size_t nrows, std::size_t ncols,
                                 std::vector<Triplet> triplets);
  static CsrMatrix identity(std::size_t n);

  std::size_t nrows() const noexcept { return nrows_; }
  std::size_t ncols() const noexcept { return ncols_; }
  std::size_t nnz() const noexcept { return values_.size(); }

  std::span<const std::size_t> row_offsets() const noexcept { return row_offsets_; }
  std::span<const std::size_t> col_indices() const noexcept { return col_indices_; }
  std::span<const double> values() const noexcept { return values_; }

  /// Stored value at (i, j), or 0 when the entry is not in the pattern.
  double at(std::size_t i, std::size_t j) const;

  CsrMatrix transpose() const;
  CsrMatrix scaled(double s) const;

  /// Rows and columns restricted to `index` (which must be sorted and unique).
  CsrMatrix principal_submatrix(std::span<const std::size_t> index) const;

  friend bool operator==(const CsrMatrix&, const CsrMatrix&) = default;

 private:
  std::size_t nrows_ = 0;
  std::size_t ncols_ = 0;
  std::vector<std::size_t> row_offsets_{0};
  std::vector<std::size_t> col_indices_;
  std::vector<double> values_;
};

/// a - b over the union of both sparsity patterns.
CsrMatrix subtract(const CsrMatrix& a, const CsrMatrix& b);
double max_abs_entry(const CsrMatrix& m);

void spmv(const CsrMatrix& m, std::span<const double> v, std::span<double> out);
Vector spmv(const CsrMatrix& m, std::span<const double> v);
void spmv_transpose(const CsrMatrix& m, std::span<const double> v, std::span<double> out);
Vector spmv_transpose(const CsrMatrix& m, std::span<const double> v);

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);
/// y += a * x
void axpy(double a, std::span<const double> x, std::span<double> y);

/// Sparse LU factorization with row pivoting and a fill-reducing column
/// ordering. Immutable once built; solves may run concurrently.
class LuFactors {
 public:
  explicit LuFactors(const CsrMatrix& m);
  ~LuFactors();
  LuFactors(LuFactors&&) noexcept;
  LuFactors& operator=(LuFactors&&) noexcept;
  LuFactors(const LuFactors&) = delete;
  LuFactors& operator=(const LuFactors&) = delete;

  std::size_t size() const noexcept { return n_; }

  void solve(std::span<const double> b, std::span<double> x) const;
  void solve_transpose(std::span<const double> b, std::span<double> x) const;

 private:
  struct Impl;
  std::size_t n_ = 0;
  std::unique_ptr<Impl> impl_;
};

LuFactors lu_factor(const CsrMatrix& m);
Vector lu_solve(const LuFactors& f, std::span<const double> b);
Vector lu_solve_transpose(const LuFactors& f, std::span<const double> b);

/// `%%MatrixMarket matrix coordinate real general`, 1-based, 17 significant
/// digits. Reading also accepts the `symmetric` qualifier and sums duplicates.
void write_matrix_market(const CsrMatrix& m, const std::filesystem::path& path);
CsrMatrix read_matrix_market(const std::filesystem::path& path);

/// Dense column vector in MatrixMarket `array` format.
void write_vector_market(std::span<const double> v, const std::filesystem::path& path);
Vector read_vector_market(const std::filesystem::path& path);

}  // namespace dgasm
