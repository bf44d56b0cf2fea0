#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <vector>

namespace cornerfem {

struct Csr {
  int n = 0;
  std::vector<int> row_ptr, col;
  std::vector<double> val;

  double* find(int i, int j) {
    auto b = col.begin() + row_ptr[i], e = col.begin() + row_ptr[i + 1];
    auto it = std::lower_bound(b, e, j);
    if (it == e || *it != j) return nullptr;
    return &val[it - col.begin()];
  }
  double get(int i, int j) const {
    auto b = col.begin() + row_ptr[i], e = col.begin() + row_ptr[i + 1];
    auto it = std::lower_bound(b, e, j);
    return (it == e || *it != j) ? 0.0 : val[it - col.begin()];
  }
  void add(int i, int j, double v) {
    double* p = find(i, j);
    if (!p) throw std::logic_error("Csr::add: entry outside sparsity pattern");
    *p += v;
  }

  void matvec(const std::vector<double>& x, std::vector<double>& y) const {
    for (int i = 0; i < n; ++i) {
      double s = 0.0;
      for (int k = row_ptr[i]; k < row_ptr[i + 1]; ++k) s += val[k] * x[col[k]];
      y[i] = s;
    }
  }

  double max_abs() const {
    double m = 0.0;
    for (double v : val) m = std::max(m, std::abs(v));
    return m;
  }

  // i j value lines, 0-based
  std::string dump() const {
    std::string out;
    char buf[128];
    for (int i = 0; i < n; ++i)
      for (int k = row_ptr[i]; k < row_ptr[i + 1]; ++k) {
        std::snprintf(buf, sizeof buf, "%d %d %.17g\n", i, col[k], val[k]);
        out += buf;
      }
    return out;
  }
};

struct CgFailure : std::runtime_error {
  int iterations;
  double residual;
  CgFailure(int it, double res)
      : std::runtime_error("cg did not converge after " + std::to_string(it) +
                           " iterations, relative residual " + std::to_string(res)),
        iterations(it),
        residual(res) {}
};

struct CgStats {
  int iterations = 0;
  double rel_residual = 0.0;
};

// Jacobi-preconditioned conjugate gradients.  Fully deterministic: fixed
// order of operations, no randomization.  Stops when ||Kx-b|| <= rel_tol*||b||.
inline std::vector<double> solve_cg(const Csr& K, const std::vector<double>& b,
                                    CgStats* stats = nullptr, double rel_tol = 1e-10,
                                    int max_iter = 200000) {
  const int n = K.n;
  if (static_cast<int>(b.size()) != n) throw std::invalid_argument("solve_cg: size mismatch");
  std::vector<double> x(n, 0.0);
  double bnorm2 = 0.0;
  for (double v : b) bnorm2 += v * v;
  if (bnorm2 == 0.0) {
    if (stats) *stats = {0, 0.0};
    return x;
  }
  std::vector<double> diag(n);
  for (int i = 0; i < n; ++i) {
    diag[i] = K.get(i, i);
    if (!(diag[i] > 0.0))
      throw std::invalid_argument("solve_cg: non-positive diagonal at row " + std::to_string(i));
  }
  std::vector<double> r = b, z(n), p(n), q(n);
  for (int i = 0; i < n; ++i) z[i] = r[i] / diag[i];
  p = z;
  double rz = 0.0;
  for (int i = 0; i < n; ++i) rz += r[i] * z[i];
  const double tol2 = rel_tol * rel_tol * bnorm2;
  double rnorm2 = bnorm2;
  for (int it = 1; it <= max_iter; ++it) {
    K.matvec(p, q);
    double pq = 0.0;
    for (int i = 0; i < n; ++i) pq += p[i] * q[i];
    if (pq <= 0.0) throw CgFailure(it, std::sqrt(rnorm2 / bnorm2));
    const double alpha = rz / pq;
    rnorm2 = 0.0;
    for (int i = 0; i < n; ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * q[i];
      rnorm2 += r[i] * r[i];
    }
    if (rnorm2 <= tol2) {
      if (stats) *stats = {it, std::sqrt(rnorm2 / bnorm2)};
      return x;
    }
    double rz_new = 0.0;
    for (int i = 0; i < n; ++i) {
      z[i] = r[i] / diag[i];
      rz_new += r[i] * z[i];
    }
    const double beta = rz_new / rz;
    rz = rz_new;
    for (int i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
  }
  throw CgFailure(max_iter, std::sqrt(rnorm2 / bnorm2));
}

}  // namespace cornerfem
