#include "dgasm/sparse.hpp"

#include <Eigen/OrderingMethods>
#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>
#include <string>

namespace dgasm {

CsrMatrix::CsrMatrix(std::size_t nrows, std::size_t ncols, std::vector<std::size_t> row_offsets,
                     std::vector<std::size_t> col_indices, std::vector<double> values)
    : nrows_(nrows),
      ncols_(ncols),
      row_offsets_(std::move(row_offsets)),
      col_indices_(std::move(col_indices)),
      values_(std::move(values)) {
  if (row_offsets_.size() != nrows_ + 1)
    throw DimensionMismatch("CsrMatrix row_offsets", nrows_ + 1, row_offsets_.size());
  if (col_indices_.size() != values_.size())
    throw DimensionMismatch("CsrMatrix values", col_indices_.size(), values_.size());
  if (row_offsets_.front() != 0 || row_offsets_.back() != values_.size())
    throw InvalidArgument("CsrMatrix: row_offsets must start at 0 and end at nnz");
  for (std::size_t i = 0; i < nrows_; ++i) {
    if (row_offsets_[i + 1] < row_offsets_[i])
      throw InvalidArgument("CsrMatrix: row_offsets must be nondecreasing");
    for (std::size_t k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k) {
      if (col_indices_[k] >= ncols_)
        throw InvalidArgument("CsrMatrix: column index out of range in row " + std::to_string(i));
      if (k > row_offsets_[i] && col_indices_[k] <= col_indices_[k - 1])
        throw InvalidArgument("CsrMatrix: columns not strictly increasing in row " +
                              std::to_string(i));
    }
  }
}

CsrMatrix CsrMatrix::from_triplets(std::size_t nrows, std::size_t ncols,
                                   std::vector<Triplet> triplets) {
  // Stable bucket by row, then stable sort by column: duplicates keep their
  // input order and are summed left to right.
  std::vector<std::size_t> count(nrows + 1, 0);
  for (const auto& t : triplets) {
    if (t.row >= nrows || t.col >= ncols)
      throw InvalidArgument("from_triplets: entry (" + std::to_string(t.row) + ", " +
                            std::to_string(t.col) + ") outside " + std::to_string(nrows) + "x" +
                            std::to_string(ncols));
    ++count[t.row + 1];
  }
  std::partial_sum(count.begin(), count.end(), count.begin());
  std::vector<Triplet> bucketed(triplets.size());
  {
    auto next = count;
    for (const auto& t : triplets) bucketed[next[t.row]++] = t;
  }

  std::vector<std::size_t> offsets(nrows + 1, 0);
  std::vector<std::size_t> cols;
  std::vector<double> vals;
  cols.reserve(triplets.size());
  vals.reserve(triplets.size());
  for (std::size_t i = 0; i < nrows; ++i) {
    auto first = bucketed.begin() + static_cast<std::ptrdiff_t>(count[i]);
    auto last = bucketed.begin() + static_cast<std::ptrdiff_t>(count[i + 1]);
    std::stable_sort(first, last, [](const Triplet& a, const Triplet& b) { return a.col < b.col; });
    for (auto it = first; it != last; ++it) {
      if (!cols.empty() && cols.size() > offsets[i] && cols.back() == it->col) {
        vals.back() += it->value;
      } else {
        cols.push_back(it->col);
        vals.push_back(it->value);
      }
    }
    offsets[i + 1] = cols.size();
  }
  return CsrMatrix(nrows, ncols, std::move(offsets), std::move(cols), std::move(vals));
}

CsrMatrix CsrMatrix::identity(std::size_t n) {
  std::vector<std::size_t> offsets(n + 1);
  std::iota(offsets.begin(), offsets.end(), std::size_t{0});
  std::vector<std::size_t> cols(n);
  std::iota(cols.begin(), cols.end(), std::size_t{0});
  return CsrMatrix(n, n, std::move(offsets), std::move(cols), Vector(n, 1.0));
}

double CsrMatrix::at(std::size_t i, std::size_t j) const {
  if (i >= nrows_ || j >= ncols_) throw InvalidArgument("CsrMatrix::at out of range");
  auto first = col_indices_.begin() + static_cast<std::ptrdiff_t>(row_offsets_[i]);
  auto last = col_indices_.begin() + static_cast<std::ptrdiff_t>(row_offsets_[i + 1]);
  auto it = std::lower_bound(first, last, j);
  if (it == last || *it != j) return 0.0;
  return values_[static_cast<std::size_t>(it - col_indices_.begin())];
}

CsrMatrix CsrMatrix::transpose() const {
  std::vector<std::size_t> offsets(ncols_ + 1, 0);
  for (auto c : col_indices_) ++offsets[c + 1];
  std::partial_sum(offsets.begin(), offsets.end(), offsets.begin());
  std::vector<std::size_t> cols(nnz());
  Vector vals(nnz());
  auto next = offsets;
  for (std::size_t i = 0; i < nrows_; ++i) {
    for (std::size_t k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k) {
      const auto dst = next[col_indices_[k]]++;
      cols[dst] = i;
      vals[dst] = values_[k];
    }
  }
  return CsrMatrix(ncols_, nrows_, std::move(offsets), std::move(cols), std::move(vals));
}

CsrMatrix CsrMatrix::scaled(double s) const {
  CsrMatrix out = *this;
  for (auto& v : out.values_) v *= s;
  return out;
}

CsrMatrix CsrMatrix::principal_submatrix(std::span<const std::size_t> index) const {
  if (nrows_ != ncols_) throw InvalidArgument("principal_submatrix: matrix is not square");
  constexpr auto npos = static_cast<std::size_t>(-1);
  std::vector<std::size_t> local(ncols_, npos);
  for (std::size_t k = 0; k < index.size(); ++k) {
    if (index[k] >= ncols_ || (k > 0 && index[k] <= index[k - 1]))
      throw InvalidArgument("principal_submatrix: index must be sorted, unique and in range");
    local[index[k]] = k;
  }
  std::vector<std::size_t> offsets(index.size() + 1, 0);
  std::vector<std::size_t> cols;
  Vector vals;
  for (std::size_t r = 0; r < index.size(); ++r) {
    const auto i = index[r];
    for (std::size_t k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k) {
      const auto c = local[col_indices_[k]];
      if (c == npos) continue;
      cols.push_back(c);
      vals.push_back(values_[k]);
    }
    offsets[r + 1] = cols.size();
  }
  return CsrMatrix(index.size(), index.size(), std::move(offsets), std::move(cols),
                   std::move(vals));
}

CsrMatrix subtract(const CsrMatrix& a, const CsrMatrix& b) {
  if (a.nrows() != b.nrows() || a.ncols() != b.ncols())
    throw DimensionMismatch("subtract", a.nrows() * a.ncols(), b.nrows() * b.ncols());
  std::vector<Triplet> t;
  t.reserve(a.nnz() + b.nnz());
  for (std::size_t i = 0; i < a.nrows(); ++i) {
    for (std::size_t k = a.row_offsets()[i]; k < a.row_offsets()[i + 1]; ++k)
      t.push_back({i, a.col_indices()[k], a.values()[k]});
    for (std::size_t k = b.row_offsets()[i]; k < b.row_offsets()[i + 1]; ++k)
      t.push_back({i, b.col_indices()[k], -b.values()[k]});
  }
  return CsrMatrix::from_triplets(a.nrows(), a.ncols(), std::move(t));
}

double max_abs_entry(const CsrMatrix& m) {
  double out = 0.0;
  for (double v : m.values()) out = std::max(out, std::abs(v));
  return out;
}

void spmv(const CsrMatrix& m, std::span<const double> v, std::span<double> out) {
  if (v.size() != m.ncols()) throw DimensionMismatch("spmv input", m.ncols(), v.size());
  if (out.size() != m.nrows()) throw DimensionMismatch("spmv output", m.nrows(), out.size());
  const auto offsets = m.row_offsets();
  const auto cols = m.col_indices();
  const auto vals = m.values();
  for (std::size_t i = 0; i < m.nrows(); ++i) {
    double s = 0.0;
    for (std::size_t k = offsets[i]; k < offsets[i + 1]; ++k) s += vals[k] * v[cols[k]];
    out[i] = s;
  }
}

Vector spmv(const CsrMatrix& m, std::span<const double> v) {
  Vector out(m.nrows());
  spmv(m, v, out);
  return out;
}

void spmv_transpose(const CsrMatrix& m, std::span<const double> v, std::span<double> out) {
  if (v.size() != m.nrows()) throw DimensionMismatch("spmv_transpose input", m.nrows(), v.size());
  if (out.size() != m.ncols())
    throw DimensionMismatch("spmv_transpose output", m.ncols(), out.size());
  std::fill(out.begin(), out.end(), 0.0);
  const auto offsets = m.row_offsets();
  const auto cols = m.col_indices();
  const auto vals = m.values();
  for (std::size_t i = 0; i < m.nrows(); ++i) {
    const double vi = v[i];
    for (std::size_t k = offsets[i]; k < offsets[i + 1]; ++k) out[cols[k]] += vals[k] * vi;
  }
}

Vector spmv_transpose(const CsrMatrix& m, std::span<const double> v) {
  Vector out(m.ncols());
  spmv_transpose(m, v, out);
  return out;
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionMismatch("dot", a.size(), b.size());
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

void axpy(double a, std::span<const double> x, std::span<double> y) {
  if (x.size() != y.size()) throw DimensionMismatch("axpy", x.size(), y.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

// ---------------------------------------------------------------------------
// LU

namespace {
using EigenSparse = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;
using EigenLu = Eigen::SparseLU<EigenSparse, Eigen::COLAMDOrdering<int>>;

EigenSparse to_eigen(const CsrMatrix& m) {
  std::vector<Eigen::Triplet<double, int>> t;
  t.reserve(m.nnz());
  for (std::size_t i = 0; i < m.nrows(); ++i)
    for (std::size_t k = m.row_offsets()[i]; k < m.row_offsets()[i + 1]; ++k)
      t.emplace_back(static_cast<int>(i), static_cast<int>(m.col_indices()[k]), m.values()[k]);
  EigenSparse out(static_cast<int>(m.nrows()), static_cast<int>(m.ncols()));
  out.setFromTriplets(t.begin(), t.end());
  out.makeCompressed();
  return out;
}
}  // namespace

struct LuFactors::Impl {
  // SparseLU::transpose() is not const-qualified even though it only builds
  // a view, hence mutable.
  mutable EigenLu lu;
};

LuFactors::LuFactors(const CsrMatrix& m) : n_(m.nrows()), impl_(std::make_unique<Impl>()) {
  if (m.nrows() != m.ncols()) throw InvalidArgument("lu_factor: matrix is not square");
  if (n_ == 0) return;
  const EigenSparse a = to_eigen(m);
  impl_->lu.analyzePattern(a);
  impl_->lu.factorize(a);
  if (impl_->lu.info() != Eigen::Success) {
    // Eigen reports the 1-based position in the column-permuted ordering.
    const std::string& msg = impl_->lu.lastErrorMessage();
    const auto pos = msg.find_last_not_of("0123456789");
    std::size_t pivot = 0;
    if (pos != std::string::npos && pos + 1 < msg.size()) {
      const auto permuted = std::stoul(msg.substr(pos + 1)) - 1;
      const Eigen::PermutationMatrix<Eigen::Dynamic, Eigen::Dynamic, int> inverse =
          impl_->lu.colsPermutation().inverse();
      pivot = static_cast<std::size_t>(inverse.indices()(static_cast<int>(permuted)));
    }
    throw SingularMatrix("lu_factor", pivot);
  }
}

LuFactors::~LuFactors() = default;
LuFactors::LuFactors(LuFactors&&) noexcept = default;
LuFactors& LuFactors::operator=(LuFactors&&) noexcept = default;

void LuFactors::solve(std::span<const double> b, std::span<double> x) const {
  if (b.size() != n_) throw DimensionMismatch("lu_solve rhs", n_, b.size());
  if (x.size() != n_) throw DimensionMismatch("lu_solve result", n_, x.size());
  if (n_ == 0) return;
  const int n = static_cast<int>(n_);
  Eigen::Map<const Eigen::VectorXd> rhs(b.data(), n);
  Eigen::Map<Eigen::VectorXd> out(x.data(), n);
  out = impl_->lu.solve(rhs);
}

void LuFactors::solve_transpose(std::span<const double> b, std::span<double> x) const {
  if (b.size() != n_) throw DimensionMismatch("lu_solve_transpose rhs", n_, b.size());
  if (x.size() != n_) throw DimensionMismatch("lu_solve_transpose result", n_, x.size());
  if (n_ == 0) return;
  const int n = static_cast<int>(n_);
  Eigen::Map<const Eigen::VectorXd> rhs(b.data(), n);
  Eigen::Map<Eigen::VectorXd> out(x.data(), n);
  out = impl_->lu.transpose().solve(rhs);
}

LuFactors lu_factor(const CsrMatrix& m) { return LuFactors(m); }

Vector lu_solve(const LuFactors& f, std::span<const double> b) {
  Vector x(f.size());
  f.solve(b, x);
  return x;
}

Vector lu_solve_transpose(const LuFactors& f, std::span<const double> b) {
  Vector x(f.size());
  f.solve_transpose(b, x);
  return x;
}

// ---------------------------------------------------------------------------
// MatrixMarket

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

struct MarketHeader {
  std::string format;
  std::string field;
  std::string symmetry;
};

MarketHeader read_header(std::istream& in, const std::filesystem::path& path) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError(path.string() + ": empty file");
  std::istringstream hs(line);
  std::string banner, object;
  MarketHeader h;
  hs >> banner >> object >> h.format >> h.field >> h.symmetry;
  if (banner != "%%MatrixMarket" || lower(object) != "matrix")
    throw ParseError(path.string() + ": malformed MatrixMarket header '" + line + "'");
  h.format = lower(h.format);
  h.field = lower(h.field);
  h.symmetry = lower(h.symmetry);
  if (h.field != "real" && h.field != "integer")
    throw ParseError(path.string() + ": unsupported field '" + h.field + "'");
  if (h.symmetry != "general" && h.symmetry != "symmetric")
    throw ParseError(path.string() + ": unsupported symmetry '" + h.symmetry + "'");
  return h;
}

std::string next_data_line(std::istream& in) {
  std::string line;
  while (std::getline(in, line)) {
    const auto p = line.find_first_not_of(" \t\r");
    if (p == std::string::npos || line[p] == '%') continue;
    return line;
  }
  return {};
}

}  // namespace

void write_matrix_market(const CsrMatrix& m, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << "%%MatrixMarket matrix coordinate real general\n";
  out << m.nrows() << ' ' << m.ncols() << ' ' << m.nnz() << '\n';
  out << std::setprecision(17);
  for (std::size_t i = 0; i < m.nrows(); ++i)
    for (std::size_t k = m.row_offsets()[i]; k < m.row_offsets()[i + 1]; ++k)
      out << i + 1 << ' ' << m.col_indices()[k] + 1 << ' ' << m.values()[k] << '\n';
}

CsrMatrix read_matrix_market(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  const auto h = read_header(in, path);
  if (h.format != "coordinate")
    throw ParseError(path.string() + ": expected coordinate format, got '" + h.format + "'");
  std::istringstream size_line(next_data_line(in));
  std::size_t nrows = 0, ncols = 0, nnz = 0;
  if (!(size_line >> nrows >> ncols >> nnz))
    throw ParseError(path.string() + ": malformed size line");
  std::vector<Triplet> t;
  t.reserve(h.symmetry == "symmetric" ? 2 * nnz : nnz);
  for (std::size_t k = 0; k < nnz; ++k) {
    const auto line = next_data_line(in);
    std::istringstream ls(line);
    std::size_t i = 0, j = 0;
    double v = 0.0;
    if (line.empty() || !(ls >> i >> j >> v))
      throw ParseError(path.string() + ": expected " + std::to_string(nnz) + " entries, read " +
                       std::to_string(k));
    if (i == 0 || j == 0 || i > nrows || j > ncols)
      throw ParseError(path.string() + ": entry index out of range at entry " +
                       std::to_string(k + 1));
    t.push_back({i - 1, j - 1, v});
    if (h.symmetry == "symmetric" && i != j) t.push_back({j - 1, i - 1, v});
  }
  if (!next_data_line(in).empty())
    throw ParseError(path.string() + ": more entries than the declared " + std::to_string(nnz));
  return CsrMatrix::from_triplets(nrows, ncols, std::move(t));
}

void write_vector_market(std::span<const double> v, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << "%%MatrixMarket matrix array real general\n";
  out << v.size() << " 1\n" << std::setprecision(17);
  for (double x : v) out << x << '\n';
}

Vector read_vector_market(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  const auto h = read_header(in, path);
  if (h.format != "array")
    throw ParseError(path.string() + ": expected array format, got '" + h.format + "'");
  std::istringstream size_line(next_data_line(in));
  std::size_t nrows = 0, ncols = 0;
  if (!(size_line >> nrows >> ncols) || ncols != 1)
    throw ParseError(path.string() + ": expected an n x 1 array");
  Vector v(nrows);
  for (std::size_t k = 0; k < nrows; ++k) {
    std::istringstream ls(next_data_line(in));
    if (!(ls >> v[k]))
      throw ParseError(path.string() + ": expected " + std::to_string(nrows) + " values, read " +
                       std::to_string(k));
  }
  return v;
}

}  // namespace dgasm
