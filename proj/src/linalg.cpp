#include "webcolor/linalg.hpp"

#include <cmath>

#include "webcolor/errors.hpp"

namespace webcolor {

Mat Mat::identity(int n) {
  Mat m(n, n);
  for (int i = 0; i < n; ++i) m.at(i, i) = 1.0;
  return m;
}

Mat matmul(const Mat& x, const Mat& y) {
  if (x.cols != y.rows)
    throw ShapeError("matmul: " + std::to_string(x.cols) + " cols vs " +
                     std::to_string(y.rows) + " rows");
  Mat out(x.rows, y.cols);
  for (int i = 0; i < x.rows; ++i)
    for (int k = 0; k < x.cols; ++k) {
      double v = x.at(i, k);
      if (v == 0.0) continue;
      const double* yrow = &y.a[static_cast<std::size_t>(k) * y.cols];
      double* orow = &out.a[static_cast<std::size_t>(i) * out.cols];
      for (int j = 0; j < y.cols; ++j) orow[j] += v * yrow[j];
    }
  return out;
}

double frobenius(const Mat& m) {
  double s = 0.0;
  for (double v : m.a) s += v * v;
  return std::sqrt(s);
}

bool is_symmetric(const Mat& m, double tol) {
  if (m.rows != m.cols) return false;
  for (int i = 0; i < m.rows; ++i)
    for (int j = i + 1; j < m.cols; ++j)
      if (std::abs(m.at(i, j) - m.at(j, i)) > tol) return false;
  return true;
}

namespace {

double off_diagonal_frobenius(const Mat& m) {
  double s = 0.0;
  for (int i = 0; i < m.rows; ++i)
    for (int j = 0; j < m.cols; ++j)
      if (i != j) s += m.at(i, j) * m.at(i, j);
  return std::sqrt(s);
}

}  // namespace

EigenDecomposition jacobi_eigen(const Mat& sym, bool want_vectors, double tol,
                                int max_sweeps) {
  if (sym.rows != sym.cols)
    throw ShapeError("jacobi_eigen: matrix is not square");
  const int n = sym.rows;
  Mat a = sym;
  Mat v = want_vectors ? Mat::identity(n) : Mat();

  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    if (off_diagonal_frobenius(a) < tol) {
      EigenDecomposition out;
      out.values.resize(static_cast<std::size_t>(n));
      for (int i = 0; i < n; ++i)
        out.values[static_cast<std::size_t>(i)] = a.at(i, i);
      out.vectors = std::move(v);
      return out;
    }
    for (int p = 0; p < n - 1; ++p)
      for (int q = p + 1; q < n; ++q) {
        double apq = a.at(p, q);
        if (apq == 0.0) continue;
        double theta = (a.at(q, q) - a.at(p, p)) / (2.0 * apq);
        double t = (theta >= 0.0 ? 1.0 : -1.0) /
                   (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        double c = 1.0 / std::sqrt(t * t + 1.0);
        double s = t * c;

        double app = a.at(p, p), aqq = a.at(q, q);
        a.at(p, p) = app - t * apq;
        a.at(q, q) = aqq + t * apq;
        a.at(p, q) = 0.0;
        a.at(q, p) = 0.0;
        for (int i = 0; i < n; ++i) {
          if (i == p || i == q) continue;
          double aip = a.at(i, p), aiq = a.at(i, q);
          a.at(i, p) = c * aip - s * aiq;
          a.at(p, i) = a.at(i, p);
          a.at(i, q) = s * aip + c * aiq;
          a.at(q, i) = a.at(i, q);
        }
        if (want_vectors)
          for (int i = 0; i < n; ++i) {
            double vip = v.at(i, p), viq = v.at(i, q);
            v.at(i, p) = c * vip - s * viq;
            v.at(i, q) = s * vip + c * viq;
          }
      }
  }
  throw NumericError("jacobi_eigen: no convergence after " +
                     std::to_string(max_sweeps) + " sweeps (off-diagonal " +
                     std::to_string(off_diagonal_frobenius(a)) + ")");
}

Mat sym_sqrt(const Mat& sym_psd) {
  EigenDecomposition eig = jacobi_eigen(sym_psd, /*want_vectors=*/true);
  const int n = sym_psd.rows;
  Mat scaled = eig.vectors;  // V * diag(sqrt(lambda+))
  for (int j = 0; j < n; ++j) {
    double root = std::sqrt(std::max(0.0, eig.values[static_cast<std::size_t>(j)]));
    for (int i = 0; i < n; ++i) scaled.at(i, j) *= root;
  }
  Mat out(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double s = 0.0;
      for (int k = 0; k < n; ++k) s += scaled.at(i, k) * eig.vectors.at(j, k);
      out.at(i, j) = s;
    }
  return out;
}

double trace_sqrt(const Mat& sym_psd) {
  EigenDecomposition eig = jacobi_eigen(sym_psd, /*want_vectors=*/false);
  double total = 0.0;
  for (double lambda : eig.values) total += std::sqrt(std::max(0.0, lambda));
  return total;
}

}  // namespace webcolor
