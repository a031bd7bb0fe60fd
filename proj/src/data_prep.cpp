#include "convexify/data_prep.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "convexify/errors.hpp"

namespace convexify {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr cplx kI{0.0, 1.0};
constexpr double kMinAmplitude = 1e-12;

int winding_of(const cplx& log_value, const cplx& w) {
  return static_cast<int>(std::lround((log_value.imag() - std::arg(w)) / (2.0 * kPi)));
}

// log b continued from log a along the short arc from a to b.
cplx continue_log(const cplx& log_a, const cplx& a, const cplx& b) {
  return log_a + std::log(b / a);
}

void check_jump(const cplx& la, const cplx& lb, const char* axis, int j, int s, int n) {
  if (std::abs(la.imag() - lb.imag()) >= kPi) {
    std::ostringstream os;
    os << "phase unwrapping failed: jump of " << std::abs(la.imag() - lb.imag()) << " along "
       << axis << " at (j=" << j << ", s=" << s << ", k=" << n << ")";
    throw UnwrapError(os.str());
  }
}

}  // namespace

WTraces compute_w(const MeasuredBoundaryData& data) {
  const GridSpec& g = data.grid;
  WTraces out{BoundaryTrace(g, g.n_k()), BoundaryTrace(g, g.n_k())};
  const double z0 = g.z(0);
  for (int n = 0; n < g.n_k(); ++n) {
    const double k = g.k(n);
    const cplx inv_ui = std::exp(-kI * k * z0);
    for (int j = 0; j < g.n_h(); ++j)
      for (int s = 0; s < g.n_h(); ++s) {
        const cplx u = data.g0(j, s, n), uz = data.g1(j, s, n);
        out.w(j, s, n) = u * inv_ui;
        out.w_z(j, s, n) = (uz - kI * k * u) * inv_ui;
      }
  }
  return out;
}

Field compute_w(const Field& u) {
  if (!u.has_k_axis()) throw StructuralError("compute_w needs a field with a k axis");
  const GridSpec& g = u.grid();
  Field w(g, true);
  for (int n = 0; n < g.n_k(); ++n)
    for (int j = 0; j < g.n_h(); ++j)
      for (int s = 0; s < g.n_h(); ++s)
        for (int m = 0; m < g.n_z(); ++m)
          w(j, s, m, n) = u(j, s, m, n) * std::exp(-kI * g.k(n) * g.z(m));
  return w;
}

LogField log_unwrapped(const BoundaryTrace& w) {
  const GridSpec& g = w.grid();
  const int nh = g.n_h(), nk = w.n_k();
  for (int n = 0; n < nk; ++n)
    for (int j = 0; j < nh; ++j)
      for (int s = 0; s < nh; ++s)
        if (!(std::abs(w(j, s, n)) >= kMinAmplitude)) {
          std::ostringstream os;
          os << "|w| = " << std::abs(w(j, s, n)) << " below 1e-12 at (j=" << j << ", s=" << s
             << ", k=" << n << ")";
          throw DegenerateAmplitudeError(os.str(), j, s, n);
        }

  LogField out{BoundaryTrace(g, nk), std::vector<int>(w.values().size(), 0)};
  BoundaryTrace& L = out.values;
  const int top = nk - 1;
  for (int j = 0; j < nh; ++j)
    for (int s = 0; s < nh; ++s) {
      if (j == 0 && s == 0) {
        L(0, 0, top) = std::log(w(0, 0, top));
      } else {
        const int rj = s == 0 ? j - 1 : j;
        const int rs = s == 0 ? 0 : s - 1;
        L(j, s, top) = continue_log(L(rj, rs, top), w(rj, rs, top), w(j, s, top));
      }
      for (int n = top - 1; n >= 0; --n)
        L(j, s, n) = continue_log(L(j, s, n + 1), w(j, s, n + 1), w(j, s, n));
    }

  for (int n = 0; n < nk; ++n)
    for (int j = 0; j < nh; ++j)
      for (int s = 0; s < nh; ++s) {
        if (n + 1 < nk) check_jump(L(j, s, n), L(j, s, n + 1), "k", j, s, n);
        if (j + 1 < nh) check_jump(L(j, s, n), L(j + 1, s, n), "x", j, s, n);
        if (s + 1 < nh) check_jump(L(j, s, n), L(j, s + 1, n), "y", j, s, n);
        out.winding[L.index(j, s, n)] = winding_of(L(j, s, n), w(j, s, n));
      }
  return out;
}

std::vector<cplx> k_derivative(std::span<const cplx> f, double dk) {
  const int n = static_cast<int>(f.size());
  if (n < 3) throw StructuralError("k derivative needs at least 3 k nodes");
  std::vector<cplx> d(n);
  const double i2 = 0.5 / dk;
  d[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) * i2;
  d[n - 1] = (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) * i2;
  for (int i = 1; i < n - 1; ++i) d[i] = (f[i + 1] - f[i - 1]) * i2;
  return d;
}

namespace {

BoundaryTrace k_derivative_trace(const BoundaryTrace& f) {
  const GridSpec& g = f.grid();
  BoundaryTrace out(g, f.n_k());
  std::vector<cplx> line(f.n_k());
  for (int j = 0; j < g.n_h(); ++j)
    for (int s = 0; s < g.n_h(); ++s) {
      for (int n = 0; n < f.n_k(); ++n) line[n] = f(j, s, n);
      const auto d = k_derivative(line, g.dk());
      for (int n = 0; n < f.n_k(); ++n) out(j, s, n) = d[n];
    }
  return out;
}

}  // namespace

VQTraces compute_v_q(const LogField& log_w, const WTraces& w) {
  const BoundaryTrace& L = log_w.values;
  const GridSpec& g = L.grid();
  if (L.n_k() < 3) throw StructuralError("compute_v_q needs at least 3 k nodes");
  VQTraces out{BoundaryTrace(g, L.n_k()), BoundaryTrace(g, L.n_k()), {}, {}};
  for (int n = 0; n < L.n_k(); ++n) {
    const double k2 = g.k(n) * g.k(n);
    for (int j = 0; j < g.n_h(); ++j)
      for (int s = 0; s < g.n_h(); ++s) {
        out.v(j, s, n) = L(j, s, n) / k2;
        out.v_z(j, s, n) = (w.w_z(j, s, n) / w.w(j, s, n)) / k2;
      }
  }
  out.q = k_derivative_trace(out.v);
  out.q_z = k_derivative_trace(out.v_z);
  return out;
}

BoundaryFunctions boundary_functions(const VQTraces& vq) {
  const GridSpec& g = vq.v.grid();
  const int top = vq.v.n_k() - 1;
  BoundaryFunctions bf;
  bf.grid = g;
  bf.phi0 = vq.q;
  bf.phi1 = vq.q_z;
  bf.psi0 = BoundaryTrace(g, 1);
  bf.psi1 = BoundaryTrace(g, 1);
  const double k_top = g.k(top);
  for (int j = 0; j < g.n_h(); ++j)
    for (int s = 0; s < g.n_h(); ++s) {
      bf.psi0(j, s) = vq.v(j, s, top);
      bf.psi1(j, s) = vq.v_z(j, s, top);
      bf.tail_ansatz_gap =
          std::max(bf.tail_ansatz_gap, std::abs(vq.q(j, s, top) + vq.v(j, s, top) / k_top));
    }
  return bf;
}

double z_cutoff(const GridSpec& grid, double z) {
  const double t = (z + grid.xi()) / (0.3 * grid.depth());
  if (t <= 0.0) return 1.0;
  if (t >= 1.0) return 0.0;
  return 1.0 - 3.0 * t * t + 2.0 * t * t * t;
}

double z_cutoff_derivative(const GridSpec& grid, double z) {
  const double len = 0.3 * grid.depth();
  const double t = (z + grid.xi()) / len;
  if (t <= 0.0 || t >= 1.0) return 0.0;
  return (-6.0 * t + 6.0 * t * t) / len;
}

double lateral_taper(const GridSpec& grid, int j, int s) {
  auto axis = [&](int i) {
    const int dist = std::min(i, grid.n_h() - 1 - i);
    return dist == 0 ? 0.0 : dist == 1 ? 0.5 : 1.0;
  };
  return axis(j) * axis(s);
}

namespace {

void extend_slice(const BoundaryTrace& a0, const BoundaryTrace& a1, int n, Field& out, int n_out) {
  const GridSpec& g = out.grid();
  for (int j = 0; j < g.n_h(); ++j)
    for (int s = 0; s < g.n_h(); ++s) {
      const double kappa = lateral_taper(g, j, s);
      auto col = out.column(j, s, n_out);
      for (int m = 0; m < g.n_z(); ++m) {
        const double zeta = g.z(m) + g.xi();
        col[m] = (a0(j, s, n) + zeta * a1(j, s, n)) * z_cutoff(g, g.z(m)) * kappa;
      }
    }
}

// Checks one extended slice against its boundary data; returns the taper defect.
double verify_slice(const Field& f, int n_f, const BoundaryTrace& a0, const BoundaryTrace& a1,
                    int n) {
  const GridSpec& g = f.grid();
  const double z0 = g.z(0);
  double scale = 1.0;
  for (int j = 0; j < g.n_h(); ++j)
    for (int s = 0; s < g.n_h(); ++s)
      scale = std::max({scale, std::abs(a0(j, s, n)), std::abs(a1(j, s, n))});
  const double tol = 1e-10 * scale;
  double gamma_defect = 0.0, slope_defect = 0.0, lateral = 0.0, top = 0.0, taper = 0.0;
  for (int j = 0; j < g.n_h(); ++j)
    for (int s = 0; s < g.n_h(); ++s) {
      auto col = f.column(j, s, n_f);
      const double kappa = lateral_taper(g, j, s);
      top = std::max(top, std::abs(col[g.n_z() - 1]));
      if (!g.is_interior_column(j, s)) {
        for (int m = 0; m < g.n_z(); ++m) lateral = std::max(lateral, std::abs(col[m]));
        continue;
      }
      if (kappa < 1.0) {
        taper = std::max(taper, std::abs(col[0] - a0(j, s, n)));
        continue;
      }
      // Exact z-derivative of the extension on Gamma, from its closed form.
      const cplx slope = a1(j, s, n) * z_cutoff(g, z0) + a0(j, s, n) * z_cutoff_derivative(g, z0);
      gamma_defect = std::max(gamma_defect, std::abs(col[0] - a0(j, s, n)));
      slope_defect = std::max(slope_defect, std::abs(slope - a1(j, s, n)));
    }
  if (gamma_defect > tol) throw ConstructionError("extension misses its value on Gamma", "gamma", gamma_defect);
  if (slope_defect > tol) throw ConstructionError("extension misses its slope on Gamma", "gamma", slope_defect);
  if (lateral > tol) throw ConstructionError("extension nonzero on a lateral face", "lateral", lateral);
  if (top > tol) throw ConstructionError("extension nonzero on the top face", "top", top);
  return taper;
}

}  // namespace

ExtensionPair build_extensions(const BoundaryFunctions& bf) {
  const GridSpec& g = bf.grid;
  ExtensionPair ext{Field(g, false), Field(g, true), 0.0};
  extend_slice(bf.psi0, bf.psi1, 0, ext.Q, 0);
  ext.taper_defect = verify_slice(ext.Q, 0, bf.psi0, bf.psi1, 0);
  for (int n = 0; n < g.n_k(); ++n) {
    extend_slice(bf.phi0, bf.phi1, n, ext.F, n);
    ext.taper_defect = std::max(ext.taper_defect, verify_slice(ext.F, n, bf.phi0, bf.phi1, n));
  }
  return ext;
}

VolumetricVQ volumetric_v_q(const Field& u) {
  const GridSpec& g = u.grid();
  const Field w = compute_w(u);
  BoundaryTrace w_gamma(g, g.n_k());
  for (int n = 0; n < g.n_k(); ++n)
    for (int j = 0; j < g.n_h(); ++j)
      for (int s = 0; s < g.n_h(); ++s) w_gamma(j, s, n) = w(j, s, 0, n);
  const LogField lg = log_unwrapped(w_gamma);

  VolumetricVQ out{Field(g, true), Field(g, true), Field(g, true)};
  for (int n = 0; n < g.n_k(); ++n) {
    const double k2 = g.k(n) * g.k(n);
    for (int j = 0; j < g.n_h(); ++j)
      for (int s = 0; s < g.n_h(); ++s) {
        auto wc = w.column(j, s, n);
        auto lc = out.log_w.column(j, s, n);
        auto vc = out.v.column(j, s, n);
        lc[0] = lg.values(j, s, n);
        for (int m = 1; m < g.n_z(); ++m) {
          if (!(std::abs(wc[m]) >= kMinAmplitude))
            throw DegenerateAmplitudeError("|w| vanishes inside the domain", j, s, n);
          lc[m] = continue_log(lc[m - 1], wc[m - 1], wc[m]);
        }
        for (int m = 0; m < g.n_z(); ++m) vc[m] = lc[m] / k2;
      }
  }
  std::vector<cplx> line(g.n_k());
  for (int j = 0; j < g.n_h(); ++j)
    for (int s = 0; s < g.n_h(); ++s)
      for (int m = 0; m < g.n_z(); ++m) {
        for (int n = 0; n < g.n_k(); ++n) line[n] = out.v(j, s, m, n);
        const auto d = k_derivative(line, g.dk());
        for (int n = 0; n < g.n_k(); ++n) out.q(j, s, m, n) = d[n];
      }
  return out;
}

PreparedData prepare_data(const MeasuredBoundaryData& data) {
  PreparedData p;
  p.w = compute_w(data);
  p.log_w = log_unwrapped(p.w.w);
  p.vq = compute_v_q(p.log_w, p.w);
  p.bf = boundary_functions(p.vq);
  p.ext = build_extensions(p.bf);
  return p;
}

}  // namespace convexify
