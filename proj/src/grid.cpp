#include "convexify/grid.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "convexify/errors.hpp"

namespace convexify {

GridSpec::GridSpec(const GridParams& p) : p_(p) {
  std::ostringstream why;
  if (!(p.b > 0)) why << "b must be positive; ";
  if (!(p.xi > 0)) why << "xi must be positive; ";
  if (!(p.d > 0)) why << "d must be positive; ";
  if (p.n_h < 3) why << "n_h must be at least 3; ";
  if (p.n_z < 5) why << "n_z must be at least 5; ";
  if (p.n_k < 3) why << "n_k must be at least 3; ";
  if (!(p.k_min > 0 && p.k_min < p.k_max)) why << "need 0 < k_min < k_max; ";
  if (!why.str().empty()) throw StructuralError("invalid grid: " + why.str());
}

bool GridSpec::operator==(const GridSpec& o) const {
  return p_.b == o.p_.b && p_.xi == o.p_.xi && p_.d == o.p_.d && p_.n_h == o.p_.n_h &&
         p_.n_z == o.p_.n_z && p_.k_min == o.p_.k_min && p_.k_max == o.p_.k_max &&
         p_.n_k == o.p_.n_k;
}

Field::Field(const GridSpec& grid, bool with_k_axis)
    : grid_(grid), with_k_(with_k_axis), values_(slice_size() * n_k(), cplx{}) {}

Field Field::k_slice(int n) const {
  Field out(grid_, false);
  auto src = slice(n);
  std::copy(src.begin(), src.end(), out.values_.begin());
  return out;
}

void Field::set_k_slice(int n, const Field& f) {
  if (f.grid_ != grid_ || f.has_k_axis()) throw StructuralError("set_k_slice: incompatible field");
  std::copy(f.values_.begin(), f.values_.end(), values_.begin() + n * slice_size());
}

bool Field::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](const cplx& v) {
    return std::isfinite(v.real()) && std::isfinite(v.imag());
  });
}

Field& Field::operator+=(const Field& o) {
  require_same_grid(*this, o, "operator+=");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += o.values_[i];
  return *this;
}

Field& Field::operator-=(const Field& o) {
  require_same_grid(*this, o, "operator-=");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= o.values_[i];
  return *this;
}

Field& Field::operator*=(cplx a) {
  for (auto& v : values_) v *= a;
  return *this;
}

BoundaryTrace::BoundaryTrace(const GridSpec& grid, int n_k)
    : grid_(grid), n_k_(n_k), values_(static_cast<std::size_t>(grid.n_h()) * grid.n_h() * n_k) {}

UnknownLayout::UnknownLayout(const GridSpec& grid)
    : n_int_(grid.n_h() - 2), n_mz_(grid.n_z() - 3), n_z_(grid.n_z()) {}

bool UnknownLayout::is_unknown(int j, int s, int m) const {
  return j >= 1 && j <= n_int_ && s >= 1 && s <= n_int_ && m >= 2 && m <= n_z_ - 2;
}

void require_same_grid(const Field& a, const Field& b, const char* op) {
  if (a.grid() != b.grid() || a.has_k_axis() != b.has_k_axis())
    throw StructuralError(std::string(op) + ": fields live on different grids");
}

std::vector<double> trapezoid_weights(int n, double step) {
  std::vector<double> w(n, step);
  if (n > 0) {
    w.front() = 0.5 * step;
    w.back() = 0.5 * step;
  }
  return w;
}

std::vector<cplx> reverse_cumulative_trapezoid(std::span<const cplx> f, double step) {
  const int n = static_cast<int>(f.size());
  std::vector<cplx> out(n, cplx{});
  for (int i = n - 2; i >= 0; --i) out[i] = out[i + 1] + 0.5 * step * (f[i] + f[i + 1]);
  return out;
}

Field laplacian_h(const Field& f) {
  const GridSpec& g = f.grid();
  const int nh = g.n_h(), nz = g.n_z();
  const double ih2 = 1.0 / (g.h() * g.h());
  const double idz2 = 1.0 / (g.dz() * g.dz());
  Field out(g, f.has_k_axis());
  for (int n = 0; n < f.n_k(); ++n) {
#pragma omp parallel for schedule(static)
    for (int j = 1; j < nh - 1; ++j)
      for (int s = 1; s < nh - 1; ++s) {
        auto c = f.column(j, s, n);
        auto xm = f.column(j - 1, s, n), xp = f.column(j + 1, s, n);
        auto ym = f.column(j, s - 1, n), yp = f.column(j, s + 1, n);
        auto o = out.column(j, s, n);
        for (int m = 1; m < nz - 1; ++m) {
          o[m] = (xm[m] + xp[m] + ym[m] + yp[m] - 4.0 * c[m]) * ih2 +
                 (c[m - 1] - 2.0 * c[m] + c[m + 1]) * idz2;
        }
      }
  }
  return out;
}

std::array<Field, 3> gradient_h(const Field& f) {
  const GridSpec& g = f.grid();
  const int nh = g.n_h(), nz = g.n_z();
  const double i2h = 0.5 / g.h();
  const double i2dz = 0.5 / g.dz();
  std::array<Field, 3> out{Field(g, f.has_k_axis()), Field(g, f.has_k_axis()),
                           Field(g, f.has_k_axis())};
  for (int n = 0; n < f.n_k(); ++n) {
#pragma omp parallel for schedule(static)
    for (int j = 1; j < nh - 1; ++j)
      for (int s = 1; s < nh - 1; ++s) {
        auto c = f.column(j, s, n);
        auto xm = f.column(j - 1, s, n), xp = f.column(j + 1, s, n);
        auto ym = f.column(j, s - 1, n), yp = f.column(j, s + 1, n);
        auto gx = out[0].column(j, s, n), gy = out[1].column(j, s, n), gz = out[2].column(j, s, n);
        for (int m = 1; m < nz - 1; ++m) {
          gx[m] = (xp[m] - xm[m]) * i2h;
          gy[m] = (yp[m] - ym[m]) * i2h;
          gz[m] = (c[m + 1] - c[m - 1]) * i2dz;
        }
      }
  }
  return out;
}

void z_derivatives(std::span<const cplx> c, double dz, std::span<cplx> d1, std::span<cplx> d2) {
  const int nz = static_cast<int>(c.size());
  const double i2dz = 0.5 / dz, idz2 = 1.0 / (dz * dz);
  d1[0] = (-3.0 * c[0] + 4.0 * c[1] - c[2]) * i2dz;
  d1[nz - 1] = (3.0 * c[nz - 1] - 4.0 * c[nz - 2] + c[nz - 3]) * i2dz;
  d2[0] = (2.0 * c[0] - 5.0 * c[1] + 4.0 * c[2] - c[3]) * idz2;
  d2[nz - 1] = (2.0 * c[nz - 1] - 5.0 * c[nz - 2] + 4.0 * c[nz - 3] - c[nz - 4]) * idz2;
  for (int m = 1; m < nz - 1; ++m) {
    d1[m] = (c[m + 1] - c[m - 1]) * i2dz;
    d2[m] = (c[m + 1] - 2.0 * c[m] + c[m - 1]) * idz2;
  }
}

namespace {

// Squared norm of one k slice; max_order 0 gives L2, 2 gives H^{2,h}.
// Column partial sums are reduced in index order so the result does not
// depend on the thread count.
double squared_norm_slice(const Field& f, int n, int max_order) {
  const GridSpec& g = f.grid();
  const int nh = g.n_h(), nz = g.n_z();
  const auto wz = trapezoid_weights(nz, g.dz());
  std::vector<double> partial(static_cast<std::size_t>(nh) * nh, 0.0);
#pragma omp parallel for schedule(static)
  for (int j = 0; j < nh; ++j) {
    std::vector<cplx> d1(nz), d2(nz);
    for (int s = 0; s < nh; ++s) {
      auto c = f.column(j, s, n);
      double acc = 0.0;
      if (max_order > 0) z_derivatives(c, g.dz(), d1, d2);
      for (int m = 0; m < nz; ++m) {
        double v = std::norm(c[m]);
        if (max_order > 0) v += std::norm(d1[m]) + std::norm(d2[m]);
        acc += wz[m] * v;
      }
      partial[static_cast<std::size_t>(j) * nh + s] = acc;
    }
  }
  double sum = 0.0;
  for (double p : partial) sum += p;
  return g.h() * g.h() * sum;
}

double squared_norm_k(const Field& f, int max_order) {
  if (!f.has_k_axis()) throw StructuralError("norm over k requires a field with a k axis");
  const auto wk = trapezoid_weights(f.n_k(), f.grid().dk());
  double sum = 0.0;
  for (int n = 0; n < f.n_k(); ++n) sum += wk[n] * squared_norm_slice(f, n, max_order);
  return sum;
}

void check_k_index(const Field& f, int n) {
  if (n < 0 || n >= f.n_k()) throw StructuralError("k index out of range");
}

}  // namespace

double norm_L2h(const Field& f, int k_index) {
  check_k_index(f, k_index);
  return std::sqrt(squared_norm_slice(f, k_index, 0));
}

double norm_H2h(const Field& f, int k_index) {
  check_k_index(f, k_index);
  return std::sqrt(squared_norm_slice(f, k_index, 2));
}

double norm_L2h_k(const Field& f) { return std::sqrt(squared_norm_k(f, 0)); }
double norm_H2h_k(const Field& f) { return std::sqrt(squared_norm_k(f, 2)); }

void check_h0_conditions(const Field& f, double tol) {
  const GridSpec& g = f.grid();
  const int nh = g.n_h(), nz = g.n_z();
  double scale = 1.0;
  for (const auto& v : f.values()) scale = std::max(scale, std::abs(v));
  const double bound = tol * scale;
  for (int n = 0; n < f.n_k(); ++n)
    for (int j = 0; j < nh; ++j)
      for (int s = 0; s < nh; ++s) {
        auto c = f.column(j, s, n);
        const bool lateral = !g.is_interior_column(j, s);
        for (int m = 0; m < nz; ++m) {
          const bool constrained = lateral || m <= 1 || m == nz - 1;
          if (constrained && std::abs(c[m]) > bound) {
            std::ostringstream os;
            os << "field violates H0 boundary conditions at (j=" << j << ", s=" << s
               << ", m=" << m << ", k=" << n << "): |f| = " << std::abs(c[m]);
            throw ContractError(os.str());
          }
        }
      }
}

double norm_H02h_equivalent(const Field& f, int k_index) {
  check_k_index(f, k_index);
  check_h0_conditions(f);
  const GridSpec& g = f.grid();
  const Field lap = laplacian_h(f);
  const int nh = g.n_h(), nz = g.n_z();
  double sum = 0.0;
  for (int j = 1; j < nh - 1; ++j)
    for (int s = 1; s < nh - 1; ++s) {
      auto c = lap.column(j, s, k_index);
      for (int m = 1; m < nz - 1; ++m) sum += std::norm(c[m]);
    }
  return std::sqrt(g.h() * g.h() * g.dz() * sum);
}

double Rng::normal() {
  // Box-Muller; 1 - u keeps the log argument in (0, 1].
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

cplx Rng::unit_disc() {
  const double r = std::sqrt(uniform());
  const double t = 2.0 * std::numbers::pi * uniform();
  return {r * std::cos(t), r * std::sin(t)};
}

}  // namespace convexify
