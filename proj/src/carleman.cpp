#include "convexify/carleman.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "convexify/errors.hpp"
#include "convexify/field_io.hpp"

namespace convexify {

double weight(double z, double lambda) {
  if (!(lambda > 0.0)) throw DomainError("Carleman parameter must be positive");
  return std::exp(-2.0 * lambda * z);
}

CarlemanWeight::CarlemanWeight(const GridSpec& grid, double lambda)
    : lambda_(lambda), balance_(std::exp(2.0 * lambda * grid.d())), dz_(grid.dz()) {
  if (!(lambda >= 0.0)) throw DomainError("Carleman parameter must be nonnegative");
  phi_.resize(grid.n_z());
  for (int m = 0; m < grid.n_z(); ++m) phi_[m] = std::exp(-2.0 * lambda * grid.z(m));
}

std::vector<double> CarlemanWeight::interior_quadrature(bool balanced) const {
  const int nz = static_cast<int>(phi_.size());
  std::vector<double> w(nz, 0.0);
  const double scale = balanced ? balance_ : 1.0;
  for (int m = 1; m < nz - 1; ++m) w[m] = dz_ * phi_[m] * scale;
  return w;
}

double weighted_interior_sum(const Field& f, int k_index, const std::vector<double>& wz) {
  const GridSpec& g = f.grid();
  const int nh = g.n_h(), nz = g.n_z();
  double sum = 0.0;
  for (int j = 1; j < nh - 1; ++j)
    for (int s = 1; s < nh - 1; ++s) {
      auto c = f.column(j, s, k_index);
      double acc = 0.0;
      for (int m = 0; m < nz; ++m) acc += wz[m] * std::norm(c[m]);
      sum += acc;
    }
  return g.h() * g.h() * sum;
}

double carleman_quadratic(const Field& u, double lambda) {
  check_h0_conditions(u);
  const CarlemanWeight cw(u.grid(), lambda);
  return weighted_interior_sum(laplacian_h(u), 0, cw.interior_quadrature(false));
}

double carleman_lower_terms(const Field& u, double lambda) {
  check_h0_conditions(u);
  const GridSpec& g = u.grid();
  const CarlemanWeight cw(g, lambda);
  const auto wz = cw.interior_quadrature(false);
  const int nh = g.n_h(), nz = g.n_z();
  const double dz = g.dz();
  double sum = 0.0;
  for (int j = 1; j < nh - 1; ++j)
    for (int s = 1; s < nh - 1; ++s) {
      auto c = u.column(j, s);
      for (int m = 1; m < nz - 1; ++m) {
        const cplx uzz = (c[m + 1] - 2.0 * c[m] + c[m - 1]) / (dz * dz);
        const cplx uz = (c[m + 1] - c[m - 1]) / (2.0 * dz);
        sum += wz[m] * (std::norm(uzz) + lambda * std::norm(uz) +
                        lambda * lambda * lambda * std::norm(c[m]));
      }
    }
  return g.h() * g.h() * sum;
}

CarlemanReport verify_carleman(const std::vector<Field>& samples,
                               const std::vector<double>& lambdas) {
  if (samples.empty()) throw DomainError("verify_carleman needs at least one sample");
  if (lambdas.empty()) throw DomainError("verify_carleman needs at least one lambda");
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    if (!(lambdas[i] > 0.0)) throw DomainError("Carleman parameters must be positive");
    if (i > 0 && !(lambdas[i] > lambdas[i - 1])) throw DomainError("lambda list must increase");
  }
  CarlemanReport report;
  const double h = samples.front().grid().h();
  for (double lambda : lambdas) {
    double min_ratio = INFINITY;
    for (const Field& u : samples)
      min_ratio = std::min(min_ratio, carleman_quadratic(u, lambda) / carleman_lower_terms(u, lambda));
    report.rows.push_back({lambda, min_ratio, lambda * lambda * lambda * h * h});
  }
  report.lambda0 = report.rows.back().lambda;
  for (std::size_t i = 0; i + 1 < report.rows.size(); ++i)
    if (report.rows[i + 1].min_ratio >= report.rows[i].min_ratio) {
      report.lambda0 = report.rows[i].lambda;
      break;
    }
  return report;
}

void write_carleman_csv(std::ostream& os, const CarlemanReport& report) {
  os << "lambda,min_ratio,lambda3_h2\n";
  for (const auto& r : report.rows)
    os << format_double(r.lambda) << ',' << format_double(r.min_ratio) << ','
       << format_double(r.lambda3_h2) << '\n';
}

void enforce_h0(Field& f) {
  const GridSpec& g = f.grid();
  for (int n = 0; n < f.n_k(); ++n)
    for (int j = 0; j < g.n_h(); ++j)
      for (int s = 0; s < g.n_h(); ++s) {
        auto c = f.column(j, s, n);
        if (!g.is_interior_column(j, s)) {
          std::fill(c.begin(), c.end(), cplx{});
          continue;
        }
        c[0] = c[1] = c[g.n_z() - 1] = cplx{};
      }
}

namespace {

// One 3-point average along each axis; end nodes average over the two available neighbours.
void smooth_once(Field& f) {
  const GridSpec& g = f.grid();
  const int nh = g.n_h(), nz = g.n_z();
  for (int n = 0; n < f.n_k(); ++n) {
    Field src = f.k_slice(n);
    Field tmp = src;
    auto avg = [](const cplx& a, const cplx& b, const cplx& c) { return (a + b + c) / 3.0; };
    for (int j = 0; j < nh; ++j)
      for (int s = 0; s < nh; ++s)
        for (int m = 0; m < nz; ++m)
          tmp(j, s, m) = avg(src(std::max(j - 1, 0), s, m), src(j, s, m), src(std::min(j + 1, nh - 1), s, m));
    src = tmp;
    for (int j = 0; j < nh; ++j)
      for (int s = 0; s < nh; ++s)
        for (int m = 0; m < nz; ++m)
          tmp(j, s, m) = avg(src(j, std::max(s - 1, 0), m), src(j, s, m), src(j, std::min(s + 1, nh - 1), m));
    src = tmp;
    for (int j = 0; j < nh; ++j)
      for (int s = 0; s < nh; ++s)
        for (int m = 0; m < nz; ++m)
          tmp(j, s, m) = avg(src(j, s, std::max(m - 1, 0)), src(j, s, m), src(j, s, std::min(m + 1, nz - 1)));
    f.set_k_slice(n, tmp);
  }
}

}  // namespace

Field random_admissible_field(const GridSpec& grid, Rng& rng, bool with_k_axis) {
  Field f(grid, with_k_axis);
  for (auto& v : f.values()) v = {2.0 * rng.uniform() - 1.0, 2.0 * rng.uniform() - 1.0};
  enforce_h0(f);
  smooth_once(f);
  smooth_once(f);
  enforce_h0(f);
  return f;
}

}  // namespace convexify
