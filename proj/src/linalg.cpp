#include "pmpir/linalg.hpp"

#include <set>
#include <sstream>
#include <utility>

#include "pmpir/error.hpp"

namespace pmpir {

namespace {

std::string shape(const Mat& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

Residue checked_residue(const PrimeField& field, const FieldElement& v) {
  if (v.modulus() != field.modulus()) {
    throw FieldMismatch("element modulus " + std::to_string(v.modulus()) +
                        " does not match matrix modulus " +
                        std::to_string(field.modulus()));
  }
  return v.value();
}

// In-place reduced row echelon form over the first `pivot_cols` columns.
// Pivots are the first nonzero entry in column order. Returns the pivot
// column of each leading row.
std::vector<std::size_t> rref(Mat& m, std::size_t pivot_cols) {
  const PrimeField& f = m.field();
  std::vector<std::size_t> pivots;
  std::size_t row = 0;
  for (std::size_t col = 0; col < pivot_cols && row < m.rows(); ++col) {
    std::size_t sel = row;
    while (sel < m.rows() && m.raw(sel, col) == 0) ++sel;
    if (sel == m.rows()) continue;
    if (sel != row) {
      for (std::size_t j = 0; j < m.cols(); ++j) std::swap(m.raw(sel, j), m.raw(row, j));
    }
    const Residue scale = f.inv(m.raw(row, col));
    for (std::size_t j = col; j < m.cols(); ++j) m.raw(row, j) = f.mul(m.raw(row, j), scale);
    for (std::size_t i = 0; i < m.rows(); ++i) {
      if (i == row) continue;
      const Residue factor = m.raw(i, col);
      if (factor == 0) continue;
      for (std::size_t j = col; j < m.cols(); ++j) {
        m.raw(i, j) = f.sub(m.raw(i, j), f.mul(factor, m.raw(row, j)));
      }
    }
    pivots.push_back(col);
    ++row;
  }
  return pivots;
}

}  // namespace

Vec make_vec(const PrimeField& field, std::initializer_list<std::int64_t> values) {
  Vec v;
  v.reserve(values.size());
  for (auto x : values) v.push_back(field.element(x));
  return v;
}

Vec zero_vec(const PrimeField& field, std::size_t n) { return Vec(n, field.zero()); }

FieldElement dot(std::span<const FieldElement> a, std::span<const FieldElement> b) {
  if (a.size() != b.size()) {
    throw ShapeMismatch("dot: length " + std::to_string(a.size()) + " vs " +
                        std::to_string(b.size()));
  }
  if (a.empty()) throw ShapeMismatch("dot: empty vectors carry no field");
  FieldElement acc = a[0].field().zero();
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

Mat::Mat(const PrimeField& field, std::size_t rows, std::size_t cols)
    : field_(field), rows_(rows), cols_(cols), data_(rows * cols, 0) {}

Mat Mat::identity(const PrimeField& field, std::size_t n) {
  Mat m(field, n, n);
  for (std::size_t i = 0; i < n; ++i) m.raw(i, i) = 1 % field.modulus();
  return m;
}

Mat Mat::from_rows(const PrimeField& field,
                   std::initializer_list<std::initializer_list<std::int64_t>> rows) {
  const std::size_t nc = rows.size() == 0 ? 0 : rows.begin()->size();
  Mat m(field, rows.size(), nc);
  std::size_t i = 0;
  for (const auto& r : rows) {
    if (r.size() != nc) throw ShapeMismatch("from_rows: ragged rows");
    std::size_t j = 0;
    for (auto x : r) m.raw(i, j++) = field.reduce(x);
    ++i;
  }
  return m;
}

Mat Mat::from_rows(const PrimeField& field, const std::vector<Vec>& rows) {
  const std::size_t nc = rows.empty() ? 0 : rows.front().size();
  Mat m(field, rows.size(), nc);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != nc) throw ShapeMismatch("from_rows: ragged rows");
    m.set_row(i, rows[i]);
  }
  return m;
}

Mat Mat::row_vector(const PrimeField& field, std::span<const FieldElement> v) {
  Mat m(field, 1, v.size());
  m.set_row(0, v);
  return m;
}

FieldElement Mat::at(std::size_t i, std::size_t j) const {
  if (i >= rows_ || j >= cols_) {
    throw ShapeMismatch("index (" + std::to_string(i) + "," + std::to_string(j) +
                        ") outside " + shape(*this));
  }
  return FieldElement(data_[i * cols_ + j], field_);
}

void Mat::set(std::size_t i, std::size_t j, const FieldElement& v) {
  if (i >= rows_ || j >= cols_) {
    throw ShapeMismatch("index (" + std::to_string(i) + "," + std::to_string(j) +
                        ") outside " + shape(*this));
  }
  data_[i * cols_ + j] = checked_residue(field_, v);
}

Vec Mat::row(std::size_t i) const {
  if (i >= rows_) throw ShapeMismatch("row index out of range");
  Vec v;
  v.reserve(cols_);
  for (std::size_t j = 0; j < cols_; ++j) v.emplace_back(raw(i, j), field_);
  return v;
}

Vec Mat::col(std::size_t j) const {
  if (j >= cols_) throw ShapeMismatch("column index out of range");
  Vec v;
  v.reserve(rows_);
  for (std::size_t i = 0; i < rows_; ++i) v.emplace_back(raw(i, j), field_);
  return v;
}

void Mat::set_row(std::size_t i, std::span<const FieldElement> v) {
  if (i >= rows_ || v.size() != cols_) {
    throw ShapeMismatch("set_row: length " + std::to_string(v.size()) +
                        " into " + shape(*this));
  }
  for (std::size_t j = 0; j < cols_; ++j) raw(i, j) = checked_residue(field_, v[j]);
}

Mat Mat::transpose() const {
  Mat t(field_, cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) t.raw(j, i) = raw(i, j);
  return t;
}

Mat Mat::select_rows(std::span<const std::size_t> idx) const {
  Mat out(field_, idx.size(), cols_);
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] >= rows_) throw ShapeMismatch("select_rows: index out of range");
    for (std::size_t j = 0; j < cols_; ++j) out.raw(i, j) = raw(idx[i], j);
  }
  return out;
}

Mat Mat::select_cols(std::span<const std::size_t> idx) const {
  Mat out(field_, rows_, idx.size());
  for (std::size_t j = 0; j < idx.size(); ++j) {
    if (idx[j] >= cols_) throw ShapeMismatch("select_cols: index out of range");
    for (std::size_t i = 0; i < rows_; ++i) out.raw(i, j) = raw(i, idx[j]);
  }
  return out;
}

Mat Mat::block(std::size_t r0, std::size_t c0, std::size_t nr, std::size_t nc) const {
  if (r0 + nr > rows_ || c0 + nc > cols_) {
    throw ShapeMismatch("block exceeds " + shape(*this));
  }
  Mat out(field_, nr, nc);
  for (std::size_t i = 0; i < nr; ++i)
    for (std::size_t j = 0; j < nc; ++j) out.raw(i, j) = raw(r0 + i, c0 + j);
  return out;
}

Mat Mat::hstack(const Mat& right) const {
  if (!(field_ == right.field_)) throw FieldMismatch("hstack: modulus mismatch");
  if (rows_ != right.rows_) {
    throw ShapeMismatch("hstack: " + shape(*this) + " with " + shape(right));
  }
  Mat out(field_, rows_, cols_ + right.cols_);
  for (std::size_t i = 0; i < rows_; ++i) {
    for (std::size_t j = 0; j < cols_; ++j) out.raw(i, j) = raw(i, j);
    for (std::size_t j = 0; j < right.cols_; ++j) out.raw(i, cols_ + j) = right.raw(i, j);
  }
  return out;
}

Mat Mat::vstack(const Mat& below) const {
  if (!(field_ == below.field_)) throw FieldMismatch("vstack: modulus mismatch");
  if (cols_ != below.cols_) {
    throw ShapeMismatch("vstack: " + shape(*this) + " with " + shape(below));
  }
  Mat out(field_, rows_ + below.rows_, cols_);
  std::copy(data_.begin(), data_.end(), out.data_.begin());
  std::copy(below.data_.begin(), below.data_.end(),
            out.data_.begin() + static_cast<std::ptrdiff_t>(data_.size()));
  return out;
}

bool Mat::is_zero() const noexcept {
  for (auto v : data_)
    if (v != 0) return false;
  return true;
}

bool Mat::is_symmetric() const noexcept {
  if (rows_ != cols_) return false;
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = i + 1; j < cols_; ++j)
      if (raw(i, j) != raw(j, i)) return false;
  return true;
}

void Mat::check_compatible(const Mat& o, const char* op) const {
  if (!(field_ == o.field_)) throw FieldMismatch(std::string(op) + ": modulus mismatch");
  if (rows_ != o.rows_ || cols_ != o.cols_) {
    throw ShapeMismatch(std::string(op) + ": " + shape(*this) + " vs " + shape(o));
  }
}

Mat& Mat::operator+=(const Mat& o) {
  check_compatible(o, "add");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] = field_.add(data_[i], o.data_[i]);
  return *this;
}

Mat& Mat::operator-=(const Mat& o) {
  check_compatible(o, "sub");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] = field_.sub(data_[i], o.data_[i]);
  return *this;
}

Mat operator*(const Mat& a, const Mat& b) {
  if (!(a.field_ == b.field_)) throw FieldMismatch("mat_mul: modulus mismatch");
  if (a.cols_ != b.rows_) {
    throw ShapeMismatch("mat_mul: " + shape(a) + " times " + shape(b));
  }
  const PrimeField& f = a.field_;
  Mat out(f, a.rows_, b.cols_);
  for (std::size_t i = 0; i < a.rows_; ++i) {
    for (std::size_t l = 0; l < a.cols_; ++l) {
      const Residue av = a.raw(i, l);
      if (av == 0) continue;
      for (std::size_t j = 0; j < b.cols_; ++j) {
        out.raw(i, j) = f.add(out.raw(i, j), f.mul(av, b.raw(l, j)));
      }
    }
  }
  return out;
}

std::string Mat::to_string() const {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < rows_; ++i) {
    os << (i ? ", [" : "[");
    for (std::size_t j = 0; j < cols_; ++j) os << (j ? "," : "") << raw(i, j);
    os << "]";
  }
  os << "] mod " << field_.modulus();
  return os.str();
}

Mat mat_mul(const Mat& a, const Mat& b) { return a * b; }

Vec mat_vec(const Mat& a, std::span<const FieldElement> x) {
  if (x.size() != a.cols()) {
    throw ShapeMismatch("mat_vec: " + shape(a) + " times length " +
                        std::to_string(x.size()));
  }
  const PrimeField& f = a.field();
  Vec out;
  out.reserve(a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    Residue acc = 0;
    for (std::size_t j = 0; j < a.cols(); ++j) {
      acc = f.add(acc, f.mul(a.raw(i, j), checked_residue(f, x[j])));
    }
    out.emplace_back(acc, f);
  }
  return out;
}

std::size_t rank(const Mat& a) {
  Mat work = a;
  return rref(work, work.cols()).size();
}

Mat mat_inv(const Mat& a) {
  if (a.rows() != a.cols()) throw ShapeMismatch("mat_inv: non-square " + shape(a));
  const std::size_t n = a.rows();
  Mat aug = a.hstack(Mat::identity(a.field(), n));
  const auto pivots = rref(aug, n);
  if (pivots.size() != n) {
    throw SingularMatrix("mat_inv: matrix is singular (rank " +
                         std::to_string(pivots.size()) + " < " + std::to_string(n) + ")");
  }
  return aug.block(0, n, n, n);
}

Vec solve(const Mat& a, std::span<const FieldElement> y) {
  if (y.size() != a.rows()) {
    throw ShapeMismatch("solve: " + shape(a) + " with rhs length " + std::to_string(y.size()));
  }
  const std::size_t n = a.cols();
  Mat aug(a.field(), a.rows(), n + 1);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < n; ++j) aug.raw(i, j) = a.raw(i, j);
    aug.raw(i, n) = checked_residue(a.field(), y[i]);
  }
  const auto pivots = rref(aug, n);
  // Any nonzero right-hand side below the pivot rows is a violated equation.
  for (std::size_t i = pivots.size(); i < aug.rows(); ++i) {
    if (aug.raw(i, n) != 0) {
      throw InconsistentSystem("solve: equation " + std::to_string(i) +
                               " of the reduced system is 0 = nonzero");
    }
  }
  if (pivots.size() < n) {
    throw RankDeficient("solve: rank " + std::to_string(pivots.size()) + " < " +
                        std::to_string(n) + " unknowns; solution is not unique");
  }
  Vec x;
  x.reserve(n);
  for (std::size_t j = 0; j < n; ++j) x.emplace_back(aug.raw(j, n), a.field());
  return x;
}

Mat vandermonde(std::span<const FieldElement> xs, std::size_t cols) {
  if (xs.empty()) throw ShapeMismatch("vandermonde: no evaluation points");
  if (cols == 0) throw ShapeMismatch("vandermonde: cols must be >= 1");
  const PrimeField f = xs[0].field();
  std::set<Residue> seen;
  for (const auto& x : xs) {
    checked_residue(f, x);
    if (!seen.insert(x.value()).second) {
      throw InvalidParameters("vandermonde: duplicate evaluation point " +
                              std::to_string(x.value()));
    }
  }
  Mat m(f, xs.size(), cols);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    Residue p = 1 % f.modulus();
    for (std::size_t j = 0; j < cols; ++j) {
      m.raw(i, j) = p;
      p = f.mul(p, xs[i].value());
    }
  }
  return m;
}

Mat left_null_space(const Mat& a) {
  // w * a = 0  <=>  a^T * w^T = 0; read the null space off rref(a^T).
  Mat t = a.transpose();
  const auto pivots = rref(t, t.cols());
  const std::size_t n = t.cols();
  std::vector<bool> is_pivot(n, false);
  for (auto p : pivots) is_pivot[p] = true;
  const PrimeField& f = a.field();
  Mat basis(f, n - pivots.size(), n);
  std::size_t out = 0;
  for (std::size_t free = 0; free < n; ++free) {
    if (is_pivot[free]) continue;
    basis.raw(out, free) = 1;
    for (std::size_t r = 0; r < pivots.size(); ++r) {
      basis.raw(out, pivots[r]) = f.neg(t.raw(r, free));
    }
    ++out;
  }
  return basis;
}

}  // namespace pmpir
