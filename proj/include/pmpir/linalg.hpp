#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "pmpir/field.hpp"

namespace pmpir {

using Vec = std::vector<FieldElement>;

Vec make_vec(const PrimeField& field, std::initializer_list<std::int64_t> values);
Vec zero_vec(const PrimeField& field, std::size_t n);
FieldElement dot(std::span<const FieldElement> a, std::span<const FieldElement> b);

// Dense row-major matrix over a prime field. Entries are stored as canonical
// residues that all share the matrix's modulus; element accessors re-attach
// the field. Zero-sized dimensions are allowed.
class Mat {
 public:
  Mat(const PrimeField& field, std::size_t rows, std::size_t cols);

  static Mat identity(const PrimeField& field, std::size_t n);
  static Mat from_rows(const PrimeField& field,
                       std::initializer_list<std::initializer_list<std::int64_t>> rows);
  static Mat from_rows(const PrimeField& field, const std::vector<Vec>& rows);
  static Mat row_vector(const PrimeField& field, std::span<const FieldElement> v);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  const PrimeField& field() const noexcept { return field_; }

  FieldElement at(std::size_t i, std::size_t j) const;
  void set(std::size_t i, std::size_t j, const FieldElement& v);

  // Unchecked residue access for inner loops.
  Residue raw(std::size_t i, std::size_t j) const noexcept { return data_[i * cols_ + j]; }
  Residue& raw(std::size_t i, std::size_t j) noexcept { return data_[i * cols_ + j]; }

  Vec row(std::size_t i) const;
  Vec col(std::size_t j) const;
  void set_row(std::size_t i, std::span<const FieldElement> v);

  Mat transpose() const;
  Mat select_rows(std::span<const std::size_t> idx) const;
  Mat select_cols(std::span<const std::size_t> idx) const;
  Mat block(std::size_t r0, std::size_t c0, std::size_t nr, std::size_t nc) const;
  Mat hstack(const Mat& right) const;
  Mat vstack(const Mat& below) const;

  bool is_zero() const noexcept;
  bool is_symmetric() const noexcept;

  Mat& operator+=(const Mat& o);
  Mat& operator-=(const Mat& o);
  friend Mat operator+(Mat a, const Mat& b) { return a += b; }
  friend Mat operator-(Mat a, const Mat& b) { return a -= b; }
  friend Mat operator*(const Mat& a, const Mat& b);
  friend bool operator==(const Mat& a, const Mat& b) noexcept {
    return a.field_ == b.field_ && a.rows_ == b.rows_ && a.cols_ == b.cols_ &&
           a.data_ == b.data_;
  }

  std::string to_string() const;

 private:
  void check_compatible(const Mat& o, const char* op) const;

  PrimeField field_;
  std::size_t rows_;
  std::size_t cols_;
  std::vector<Residue> data_;
};

Mat mat_mul(const Mat& a, const Mat& b);
Vec mat_vec(const Mat& a, std::span<const FieldElement> x);

// Row rank by Gaussian elimination.
std::size_t rank(const Mat& a);

// Gauss-Jordan inverse; throws SingularMatrix.
Mat mat_inv(const Mat& a);

// Unique x with a*x = y. Over-determined systems are accepted when every
// residual equation holds exactly. Throws InconsistentSystem or RankDeficient.
Vec solve(const Mat& a, std::span<const FieldElement> y);

// Row i is (1, x_i, x_i^2, ..., x_i^(cols-1)). Throws on duplicate points.
Mat vandermonde(std::span<const FieldElement> xs, std::size_t cols);

// Rows span {w : w * a = 0}; the result has a.rows() - rank(a) rows.
Mat left_null_space(const Mat& a);

}  // namespace pmpir
