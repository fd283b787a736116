#pragma once

#include <vector>

namespace webcolor {

// Dense row-major matrix for the metric computations (separate from the
// autodiff Tensor on purpose: these paths never need gradients).
struct Mat {
  int rows = 0;
  int cols = 0;
  std::vector<double> a;

  Mat() = default;
  Mat(int r, int c) : rows(r), cols(c), a(static_cast<std::size_t>(r) * c, 0.0) {}

  double& at(int i, int j) { return a[static_cast<std::size_t>(i) * cols + j]; }
  double at(int i, int j) const {
    return a[static_cast<std::size_t>(i) * cols + j];
  }
  static Mat identity(int n);
};

Mat matmul(const Mat& x, const Mat& y);
double frobenius(const Mat& m);
bool is_symmetric(const Mat& m, double tol = 1e-12);

struct EigenDecomposition {
  std::vector<double> values;
  Mat vectors;  // columns are eigenvectors; empty when not requested
};

// Cyclic Jacobi for a symmetric matrix. Converges when the off-diagonal
// Frobenius norm drops below `tol`; throws NumericError when `max_sweeps`
// is exhausted first.
EigenDecomposition jacobi_eigen(const Mat& sym, bool want_vectors,
                                double tol = 1e-10, int max_sweeps = 100);

// V diag(sqrt(max(lambda, 0))) V^T for a symmetric PSD matrix (negative
// eigenvalues from numerical fit-noise are clamped at 0).
Mat sym_sqrt(const Mat& sym_psd);

// Sum of sqrt(max(lambda, 0)) over eigenvalues; cheaper than sym_sqrt
// when only the trace of the root is needed.
double trace_sqrt(const Mat& sym_psd);

}  // namespace webcolor
