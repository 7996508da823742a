#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace la {

using Vec = std::vector<double>;

// Small dense row-major matrix. Everything here is desk scale (n <= 10),
// so plain O(n^3) algorithms are used throughout.
class Mat {
 public:
  Mat() = default;
  Mat(int rows, int cols, double fill = 0.0);

  static Mat identity(int n);
  static Mat diag(const Vec& d);

  int rows() const { return rows_; }
  int cols() const { return cols_; }

  double& operator()(int i, int j) { return data_[static_cast<size_t>(i) * cols_ + j]; }
  double operator()(int i, int j) const { return data_[static_cast<size_t>(i) * cols_ + j]; }

  const std::vector<double>& data() const { return data_; }

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> data_;
};

Mat operator+(const Mat& a, const Mat& b);
Mat operator-(const Mat& a, const Mat& b);
Mat operator*(const Mat& a, const Mat& b);
Mat operator*(double s, const Mat& a);

Mat transpose(const Mat& a);
Mat symmetrize(const Mat& a);  // (A + A^T)/2

Vec mul(const Mat& a, const Vec& x);

double dot(const Vec& a, const Vec& b);
double norm2(const Vec& x);
double quad_form(const Mat& p, const Vec& x);  // x^T P x

double frobenius(const Mat& a);
double max_abs(const Mat& a);

// Gauss-Jordan with partial pivoting; throws std::runtime_error on (near) singular input.
Mat inverse(const Mat& a);

// Numerical rank via row elimination with a relative pivot threshold.
int rank(Mat a, double rel_tol = 1e-10);

// Solve the dense linear system A z = b (square, partial pivoting).
Vec solve(Mat a, Vec b);

struct SymEigen {
  Vec values;   // ascending
  Mat vectors;  // columns; M = V diag(values) V^T
};

// Cyclic Jacobi rotations for symmetric matrices; sweeps until the
// off-diagonal Frobenius mass is below tol * ||M||_F.
SymEigen jacobi_eigensym(const Mat& m, double tol = 1e-12);

// Plain-text matrix exchange format: first line "rows cols", then one row
// of space-separated decimals per line.
std::string to_text(const Mat& a);
Mat mat_from_text(std::istream& in);
Mat mat_from_text(const std::string& text);

}  // namespace la
