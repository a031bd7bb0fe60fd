#pragma once

// Direct-summation reference implementations. Every quantity is rebuilt from
// raw node values with explicit index arithmetic, sharing no code with the
// library beyond the Field container.

#include <cmath>
#include <complex>
#include <vector>

#include "convexify/grid.hpp"

namespace oracle {

using convexify::cplx;
using convexify::Field;
using convexify::GridSpec;

inline cplx at(const Field& f, int j, int s, int m, int n = 0) {
  const GridSpec& g = f.grid();
  const std::size_t idx = ((static_cast<std::size_t>(n) * g.n_h() + j) * g.n_h() + s) * g.n_z() + m;
  return f.values()[idx];
}

inline bool interior(const GridSpec& g, int j, int s, int m) {
  return j >= 1 && j <= g.n_h() - 2 && s >= 1 && s <= g.n_h() - 2 && m >= 1 && m <= g.n_z() - 2;
}

inline cplx lap(const Field& f, int j, int s, int m, int n = 0) {
  const GridSpec& g = f.grid();
  if (!interior(g, j, s, m)) return 0.0;
  const double h = 2.0 * g.b() / (g.n_h() - 1);
  const double dz = (g.d() + g.xi()) / (g.n_z() - 1);
  return (at(f, j + 1, s, m, n) - 2.0 * at(f, j, s, m, n) + at(f, j - 1, s, m, n)) / (h * h) +
         (at(f, j, s + 1, m, n) - 2.0 * at(f, j, s, m, n) + at(f, j, s - 1, m, n)) / (h * h) +
         (at(f, j, s, m + 1, n) - 2.0 * at(f, j, s, m, n) + at(f, j, s, m - 1, n)) / (dz * dz);
}

inline cplx grad(const Field& f, int axis, int j, int s, int m, int n = 0) {
  const GridSpec& g = f.grid();
  if (!interior(g, j, s, m)) return 0.0;
  const double h = 2.0 * g.b() / (g.n_h() - 1);
  const double dz = (g.d() + g.xi()) / (g.n_z() - 1);
  if (axis == 0) return (at(f, j + 1, s, m, n) - at(f, j - 1, s, m, n)) / (2.0 * h);
  if (axis == 1) return (at(f, j, s + 1, m, n) - at(f, j, s - 1, m, n)) / (2.0 * h);
  return (at(f, j, s, m + 1, n) - at(f, j, s, m - 1, n)) / (2.0 * dz);
}

/// Trapezoid weight of node i among n nodes.
inline double trap(int i, int n, double step) { return (i == 0 || i == n - 1) ? 0.5 * step : step; }

/// First and second z-derivatives at node m, one-sided second order at the ends.
inline void dz_derivs(const Field& f, int j, int s, int m, int n, cplx& d1, cplx& d2) {
  const GridSpec& g = f.grid();
  const int nz = g.n_z();
  const double dz = (g.d() + g.xi()) / (nz - 1);
  auto c = [&](int mm) { return at(f, j, s, mm, n); };
  if (m == 0) {
    d1 = (-3.0 * c(0) + 4.0 * c(1) - c(2)) / (2.0 * dz);
    d2 = (2.0 * c(0) - 5.0 * c(1) + 4.0 * c(2) - c(3)) / (dz * dz);
  } else if (m == nz - 1) {
    d1 = (3.0 * c(m) - 4.0 * c(m - 1) + c(m - 2)) / (2.0 * dz);
    d2 = (2.0 * c(m) - 5.0 * c(m - 1) + 4.0 * c(m - 2) - c(m - 3)) / (dz * dz);
  } else {
    d1 = (c(m + 1) - c(m - 1)) / (2.0 * dz);
    d2 = (c(m + 1) - 2.0 * c(m) + c(m - 1)) / (dz * dz);
  }
}

inline double sq_norm_slice(const Field& f, int n, bool h2) {
  const GridSpec& g = f.grid();
  const double h = 2.0 * g.b() / (g.n_h() - 1);
  const double dz = (g.d() + g.xi()) / (g.n_z() - 1);
  double sum = 0.0;
  for (int j = 0; j < g.n_h(); ++j)
    for (int s = 0; s < g.n_h(); ++s)
      for (int m = 0; m < g.n_z(); ++m) {
        double v = std::norm(at(f, j, s, m, n));
        if (h2) {
          cplx d1, d2;
          dz_derivs(f, j, s, m, n, d1, d2);
          v += std::norm(d1) + std::norm(d2);
        }
        sum += h * h * trap(m, g.n_z(), dz) * v;
      }
  return sum;
}

inline double norm_L2h(const Field& f, int n = 0) { return std::sqrt(sq_norm_slice(f, n, false)); }
inline double norm_H2h(const Field& f, int n = 0) { return std::sqrt(sq_norm_slice(f, n, true)); }

inline double norm_k(const Field& f, bool h2) {
  const GridSpec& g = f.grid();
  const double dk = (g.k_max() - g.k_min()) / (g.n_k() - 1);
  double sum = 0.0;
  for (int n = 0; n < g.n_k(); ++n) sum += trap(n, g.n_k(), dk) * sq_norm_slice(f, n, h2);
  return std::sqrt(sum);
}

/// sum over interior nodes of h^2 dz exp(-2 lambda z) |g|^2, with g evaluated per node.
template <typename G>
double weighted_interior(const GridSpec& gr, double lambda, double balance, G&& value) {
  const double h = 2.0 * gr.b() / (gr.n_h() - 1);
  const double dz = (gr.d() + gr.xi()) / (gr.n_z() - 1);
  double sum = 0.0;
  for (int j = 1; j <= gr.n_h() - 2; ++j)
    for (int s = 1; s <= gr.n_h() - 2; ++s)
      for (int m = 1; m <= gr.n_z() - 2; ++m) {
        const double z = -gr.xi() + m * dz;
        sum += h * h * dz * balance * std::exp(-2.0 * lambda * z) * std::norm(value(j, s, m));
      }
  return sum;
}

inline double carleman_B(const Field& u, double lambda) {
  return weighted_interior(u.grid(), lambda, 1.0, [&](int j, int s, int m) { return lap(u, j, s, m); });
}

inline double tail_I(const Field& W, const Field& Q, double mu) {
  const GridSpec& g = W.grid();
  return weighted_interior(g, mu, std::exp(2.0 * mu * g.d()), [&](int j, int s, int m) {
    return lap(W, j, s, m) + lap(Q, j, s, m);
  });
}

/// S_n = sum_i w_{n,i} q_i, the trapezoid rule on [k_n, k_max] written out in full.
inline cplx k_integral(const Field& q, int j, int s, int m, int n) {
  const GridSpec& g = q.grid();
  const int nk = g.n_k();
  const double dk = (g.k_max() - g.k_min()) / (nk - 1);
  cplx sum = 0.0;
  for (int i = n; i < nk - 1; ++i) sum += 0.5 * dk * (at(q, j, s, m, i) + at(q, j, s, m, i + 1));
  return sum;
}

/**
 * L(q) = Lap q + 2k (grad V - grad S) . (k grad q + grad V - grad S)
 *        + 2i (k q_z + V_z - S_z)
 */
inline cplx L(const Field& q, const Field& V, int j, int s, int m, int n) {
  const GridSpec& g = q.grid();
  if (!interior(g, j, s, m)) return 0.0;
  const double k = g.k_min() + n * (g.k_max() - g.k_min()) / (g.n_k() - 1);
  const double h = 2.0 * g.b() / (g.n_h() - 1);
  const double dz = (g.d() + g.xi()) / (g.n_z() - 1);
  auto S = [&](int jj, int ss, int mm) { return k_integral(q, jj, ss, mm, n); };
  const cplx gS[3] = {(S(j + 1, s, m) - S(j - 1, s, m)) / (2.0 * h),
                      (S(j, s + 1, m) - S(j, s - 1, m)) / (2.0 * h),
                      (S(j, s, m + 1) - S(j, s, m - 1)) / (2.0 * dz)};
  cplx dot = 0.0;
  for (int a = 0; a < 3; ++a) {
    const cplx gv = grad(V, a, j, s, m);
    dot += (gv - gS[a]) * (k * grad(q, a, j, s, m, n) + gv - gS[a]);
  }
  return lap(q, j, s, m, n) + 2.0 * k * dot +
         2.0 * cplx(0.0, 1.0) * (k * grad(q, 2, j, s, m, n) + grad(V, 2, j, s, m) - gS[2]);
}

inline double J(const Field& p, const Field& F, const Field& V, double lambda) {
  const GridSpec& g = F.grid();
  Field q = F;
  q += p;
  const double dk = (g.k_max() - g.k_min()) / (g.n_k() - 1);
  double sum = 0.0;
  for (int n = 0; n < g.n_k(); ++n)
    sum += trap(n, g.n_k(), dk) *
           weighted_interior(g, lambda, std::exp(2.0 * lambda * g.d()),
                             [&](int j, int s, int m) { return L(q, V, j, s, m, n); });
  return sum;
}

inline double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace oracle
