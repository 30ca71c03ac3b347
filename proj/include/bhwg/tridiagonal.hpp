#pragma once

// Real symmetric tridiagonal eigensolvers.
//
// Two routes are provided:
//   * implicit QL with Wilkinson shifts, returning the full decomposition.
//     Used for the small Fock lattices (N+1 up to a few hundred).
//   * Sturm-sequence bisection plus inverse iteration for a handful of
//     extremal eigenpairs of large matrices (finite-difference mode solves).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

namespace bhwg {

/// Symmetric tridiagonal matrix stored by its diagonal and first off-diagonal.
struct SymTridiagonal {
  std::vector<double> diag;
  std::vector<double> off;  // off[i] couples rows i and i+1

  std::size_t size() const { return diag.size(); }

  void validate() const {
    if (diag.empty()) throw std::invalid_argument("SymTridiagonal: empty matrix");
    if (off.size() + 1 != diag.size())
      throw std::invalid_argument("SymTridiagonal: off-diagonal must have size n-1");
  }

  /// y = T x
  template <class T>
  void apply(std::span<const T> x, std::span<T> y) const {
    const std::size_t n = size();
    for (std::size_t i = 0; i < n; ++i) {
      T acc = diag[i] * x[i];
      if (i > 0) acc += off[i - 1] * x[i - 1];
      if (i + 1 < n) acc += off[i] * x[i + 1];
      y[i] = acc;
    }
  }

  /// Gershgorin interval enclosing the spectrum.
  std::pair<double, double> gershgorin() const {
    const std::size_t n = size();
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (std::size_t i = 0; i < n; ++i) {
      double r = 0.0;
      if (i > 0) r += std::abs(off[i - 1]);
      if (i + 1 < n) r += std::abs(off[i]);
      lo = std::min(lo, diag[i] - r);
      hi = std::max(hi, diag[i] + r);
    }
    return {lo, hi};
  }
};

/// Eigen-decomposition T = Q diag(values) Q^T, eigenvalues ascending.
/// `vectors` is row-major n x n with eigenvector k stored in column k.
struct TridiagonalEigen {
  std::vector<double> values;
  std::vector<double> vectors;
  std::size_t n = 0;

  double vec(std::size_t row, std::size_t k) const { return vectors[row * n + k]; }
};

/// Full eigen-decomposition by implicit QL iteration (EISPACK tql2 lineage).
inline TridiagonalEigen eigen_ql(const SymTridiagonal& t) {
  t.validate();
  const std::size_t n = t.size();
  std::vector<double> d = t.diag;
  std::vector<double> e(n, 0.0);
  for (std::size_t i = 0; i + 1 < n; ++i) e[i] = t.off[i];

  std::vector<double> z(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) z[i * n + i] = 1.0;

  const double eps = std::numeric_limits<double>::epsilon();
  double f = 0.0;
  double tst1 = 0.0;
  constexpr int max_iter = 60;

  for (std::size_t l = 0; l < n; ++l) {
    tst1 = std::max(tst1, std::abs(d[l]) + std::abs(e[l]));
    std::size_t m = l;
    while (m < n - 1 && std::abs(e[m]) > eps * tst1) ++m;

    if (m > l) {
      int iter = 0;
      do {
        if (++iter > max_iter) throw std::runtime_error("eigen_ql: no convergence");
        // Wilkinson-type shift from the leading 2x2 block.
        double g = d[l];
        double p = (d[l + 1] - g) / (2.0 * e[l]);
        double r = std::hypot(p, 1.0);
        if (p < 0) r = -r;
        d[l] = e[l] / (p + r);
        d[l + 1] = e[l] * (p + r);
        const double dl1 = d[l + 1];
        double h = g - d[l];
        for (std::size_t i = l + 2; i < n; ++i) d[i] -= h;
        f += h;

        p = d[m];
        double c = 1.0, c2 = 1.0, c3 = 1.0;
        const double el1 = e[l + 1];
        double s = 0.0, s2 = 0.0;
        for (std::size_t ii = m; ii-- > l;) {
          const std::size_t i = ii;
          c3 = c2;
          c2 = c;
          s2 = s;
          g = c * e[i];
          h = c * p;
          r = std::hypot(p, e[i]);
          e[i + 1] = s * r;
          s = e[i] / r;
          c = p / r;
          p = c * d[i] - s * g;
          d[i + 1] = h + s * (c * g + s * d[i]);
          for (std::size_t k = 0; k < n; ++k) {
            const double zk1 = z[k * n + i + 1];
            const double zk = z[k * n + i];
            z[k * n + i + 1] = s * zk + c * zk1;
            z[k * n + i] = c * zk - s * zk1;
          }
        }
        p = -s * s2 * c3 * el1 * e[l] / dl1;
        e[l] = s * p;
        d[l] = c * p;
      } while (std::abs(e[l]) > eps * tst1);
    }
    d[l] += f;
    e[l] = 0.0;
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return d[a] < d[b]; });

  TridiagonalEigen out;
  out.n = n;
  out.values.resize(n);
  out.vectors.assign(n * n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    out.values[k] = d[order[k]];
    for (std::size_t row = 0; row < n; ++row) out.vectors[row * n + k] = z[row * n + order[k]];
  }
  return out;
}

/// Number of eigenvalues strictly below `x` (Sturm sequence count).
inline std::size_t sturm_count(const SymTridiagonal& t, double x) {
  const std::size_t n = t.size();
  const double tiny = std::numeric_limits<double>::min() / std::numeric_limits<double>::epsilon();
  std::size_t count = 0;
  double q = t.diag[0] - x;
  if (q < 0) ++count;
  for (std::size_t i = 1; i < n; ++i) {
    if (std::abs(q) < tiny) q = -tiny;
    q = t.diag[i] - x - t.off[i - 1] * t.off[i - 1] / q;
    if (q < 0) ++count;
  }
  return count;
}

/// k-th smallest eigenvalue (k = 0 is the minimum) by bisection.
inline double bisect_eigenvalue(const SymTridiagonal& t, std::size_t k) {
  if (k >= t.size()) throw std::out_of_range("bisect_eigenvalue: index out of range");
  auto [lo, hi] = t.gershgorin();
  const double eps = std::numeric_limits<double>::epsilon();
  const double scale = std::max(std::abs(lo), std::abs(hi));
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (hi - lo <= 2.0 * eps * scale || mid == lo || mid == hi) break;
    if (sturm_count(t, mid) > k) hi = mid;
    else lo = mid;
  }
  return 0.5 * (lo + hi);
}

namespace detail {

// Solve (T - shift I) y = b in place with partial pivoting (LAPACK dlagtf/dlagts style).
inline void shifted_tridiagonal_solve(const SymTridiagonal& t, double shift, std::vector<double>& b) {
  const std::size_t n = t.size();
  // Rows hold up to three upper entries after pivoting: u0 (diag), u1, u2.
  std::vector<double> u0(n), u1(n, 0.0), u2(n, 0.0);
  std::vector<double> lower(n, 0.0);
  std::vector<char> swapped(n, 0);
  for (std::size_t i = 0; i < n; ++i) u0[i] = t.diag[i] - shift;
  for (std::size_t i = 0; i + 1 < n; ++i) u1[i] = t.off[i];

  const auto [glo, ghi] = t.gershgorin();
  const double tiny = std::numeric_limits<double>::epsilon() *
                      std::max({std::abs(glo), std::abs(ghi), 1e-300});

  for (std::size_t i = 0; i + 1 < n; ++i) {
    // Row i: [u0[i], u1[i], u2[i]], row i+1: [sub=t.off[i], u0[i+1], u1[i+1]]
    const double sub = t.off[i];
    if (std::abs(u0[i]) >= std::abs(sub)) {
      if (u0[i] == 0.0) u0[i] = tiny;
      const double m = sub / u0[i];
      lower[i] = m;
      u0[i + 1] -= m * u1[i];
      u1[i + 1] -= m * u2[i];
    } else {
      const double m = u0[i] / sub;
      lower[i] = m;
      swapped[i] = 1;
      const double a1 = u1[i], a2 = u2[i];
      u0[i] = sub;
      u1[i] = u0[i + 1];
      u2[i] = u1[i + 1];
      u0[i + 1] = a1 - m * u1[i];
      u1[i + 1] = a2 - m * u2[i];
    }
  }
  if (u0[n - 1] == 0.0) u0[n - 1] = tiny;

  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (swapped[i]) {
      std::swap(b[i], b[i + 1]);
    }
    b[i + 1] -= lower[i] * b[i];
  }
  for (std::size_t ii = n; ii-- > 0;) {
    double acc = b[ii];
    if (ii + 1 < n) acc -= u1[ii] * b[ii + 1];
    if (ii + 2 < n) acc -= u2[ii] * b[ii + 2];
    b[ii] = acc / u0[ii];
  }
}

}  // namespace detail

/// Eigenpair from bisection + inverse iteration.
struct Eigenpair {
  double value = 0.0;
  std::vector<double> vector;  // unit 2-norm
};

/// The `count` smallest eigenpairs, ascending. Vectors are mutually
/// orthogonalized, which keeps tight clusters (weakly coupled waveguides) well separated.
inline std::vector<Eigenpair> lowest_eigenpairs(const SymTridiagonal& t, std::size_t count) {
  t.validate();
  const std::size_t n = t.size();
  if (count > n) throw std::out_of_range("lowest_eigenpairs: count exceeds dimension");
  std::vector<Eigenpair> out;
  out.reserve(count);

  for (std::size_t k = 0; k < count; ++k) {
    Eigenpair ep;
    ep.value = bisect_eigenvalue(t, k);
    std::vector<double> v(n);
    // Deterministic, generic start vector.
    for (std::size_t i = 0; i < n; ++i) v[i] = 1.0 + 0.5 * std::sin(0.7 * double(i) + double(k));
    for (int it = 0; it < 4; ++it) {
      for (const auto& prev : out) {
        double dot = 0.0;
        for (std::size_t i = 0; i < n; ++i) dot += prev.vector[i] * v[i];
        for (std::size_t i = 0; i < n; ++i) v[i] -= dot * prev.vector[i];
      }
      detail::shifted_tridiagonal_solve(t, ep.value, v);
      for (const auto& prev : out) {
        double dot = 0.0;
        for (std::size_t i = 0; i < n; ++i) dot += prev.vector[i] * v[i];
        for (std::size_t i = 0; i < n; ++i) v[i] -= dot * prev.vector[i];
      }
      double nrm = 0.0;
      for (double x : v) nrm += x * x;
      nrm = std::sqrt(nrm);
      if (!(nrm > 0.0) || !std::isfinite(nrm))
        throw std::runtime_error("lowest_eigenpairs: inverse iteration breakdown");
      for (double& x : v) x /= nrm;
    }
    ep.vector = std::move(v);
    out.push_back(std::move(ep));
  }
  return out;
}

}  // namespace bhwg
