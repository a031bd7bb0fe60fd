#include "convexify/reconstructor.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "convexify/convexifier.hpp"
#include "convexify/errors.hpp"
#include "convexify/field_io.hpp"

namespace convexify {

namespace {
constexpr cplx kI{0.0, 1.0};
}

Field recover_v(const Field& p_min, const Field& F, const Field& V, int k_index) {
  require_same_grid(p_min, F, "recover_v");
  if (V.has_k_axis() || V.grid() != F.grid()) throw StructuralError("recover_v: V does not match");
  if (k_index < 0 || k_index >= F.n_k()) throw DomainError("k index is not a node of the k grid");
  const Field S = k_tail_integral(p_min + F);
  Field v = V;
  v -= S.k_slice(k_index);
  return v;
}

Field raw_beta(const Field& v, double k, RecoveryFormula formula) {
  if (v.has_k_axis()) throw StructuralError("raw_beta expects v at a single k");
  const GridSpec& g = v.grid();
  const Field lap = laplacian_h(v);
  const auto gv = gradient_h(v);
  Field beta(g, false);
  for (int j = 1; j < g.n_h() - 1; ++j)
    for (int s = 1; s < g.n_h() - 1; ++s)
      for (int m = 1; m < g.n_z() - 1; ++m) {
        cplx dot{};
        for (int c = 0; c < 3; ++c) dot += gv[c](j, s, m) * gv[c](j, s, m);
        cplx val = lap(j, s, m) + k * k * dot;
        if (formula == RecoveryFormula::WithDrift) val += 2.0 * kI * k * gv[2](j, s, m);
        // The drift-free form returns c itself; shift to beta = c - 1.
        beta(j, s, m) = formula == RecoveryFormula::WithDrift ? -val : -val - 1.0;
      }
  return beta;
}

ReconstructionResult coefficient_from_beta(const Field& beta, double k) {
  const GridSpec& g = beta.grid();
  const int nh = g.n_h(), nz = g.n_z();
  Field c(g, false);
  double imag_sq = 0.0;
  for (int j = 0; j < nh; ++j)
    for (int s = 0; s < nh; ++s)
      for (int m = 0; m < nz; ++m) {
        const bool interior = g.is_interior_column(j, s) && m > 0 && m < nz - 1;
        const cplx b = beta(j, s, m);
        c(j, s, m) = interior ? 1.0 + std::max(b.real(), 0.0) : 1.0;
        if (interior) imag_sq += b.imag() * b.imag();
      }
  // One pass of a 3-point average along each axis over the interior nodes.
  auto pass = [&](int axis) {
    Field src = c;
    for (int j = 1; j < nh - 1; ++j)
      for (int s = 1; s < nh - 1; ++s)
        for (int m = 1; m < nz - 1; ++m) {
          const int dj = axis == 0, ds = axis == 1, dm = axis == 2;
          c(j, s, m) = (src(j - dj, s - ds, m - dm) + src(j, s, m) + src(j + dj, s + ds, m + dm)) / 3.0;
        }
  };
  pass(0);
  pass(1);
  pass(2);

  ReconstructionResult r;
  r.k = k;
  r.c_comp = 1.0;
  for (int j = 0; j < nh; ++j)
    for (int s = 0; s < nh; ++s)
      for (int m = 0; m < nz; ++m) {
        c(j, s, m) = std::max(c(j, s, m).real(), 1.0);
        if (c(j, s, m).real() > r.c_comp) {
          r.c_comp = c(j, s, m).real();
          r.location_index = {j, s, m};
        }
      }
  if (r.c_comp == 1.0) r.location_index = {nh / 2, nh / 2, nz / 2};
  r.location = {g.x(r.location_index[0]), g.y(r.location_index[1]), g.z(r.location_index[2])};
  r.imag_norm = std::sqrt(g.h() * g.h() * g.dz() * imag_sq);
  r.c = std::move(c);
  return r;
}

ReconstructionResult recover_c(const Field& v, double k, RecoveryFormula formula) {
  return coefficient_from_beta(raw_beta(v, k, formula), k);
}

double eps_comp(double c_comp, double c_ref) {
  if (!(c_ref > 0.0)) throw DomainError("reference contrast must be positive");
  return std::abs(c_comp - c_ref) / c_ref * 100.0;
}

void report_tables(std::ostream& table3, std::ostream& table4,
                   const std::vector<ReconstructionResult>& results,
                   const std::vector<ReferenceTarget>& references) {
  if (results.size() != references.size())
    throw StructuralError("report_tables: results and references differ in length");
  table3 << "object,c_ref,c_comp,eps_comp_percent\n";
  table4 << "object,ref_x,ref_y,ref_z,comp_x,comp_y,comp_z,dx,dy,dz\n";
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& res = results[i];
    const auto& ref = references[i];
    table3 << ref.name << ',' << format_double(ref.c_ref) << ',' << format_double(res.c_comp) << ','
           << format_double(eps_comp(res.c_comp, ref.c_ref)) << '\n';
    table4 << ref.name;
    for (double v : ref.location) table4 << ',' << format_double(v);
    for (double v : res.location) table4 << ',' << format_double(v);
    for (int a = 0; a < 3; ++a) table4 << ',' << format_double(res.location[a] - ref.location[a]);
    table4 << '\n';
  }
}

}  // namespace convexify
