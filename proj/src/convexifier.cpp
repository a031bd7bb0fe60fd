#include "convexify/convexifier.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

#include <Eigen/SparseCholesky>

#include "convexify/errors.hpp"
#include "convexify/field_io.hpp"
#include "convexify/tail_solver.hpp"

namespace convexify {

namespace {

constexpr cplx kI{0.0, 1.0};

// Weight of q_i in S_n = integral from k_n to k_max of q (composite trapezoid).
double tail_weight(int n, int i, int n_k, double dk) {
  if (n >= n_k - 1 || i < n) return 0.0;
  if (i == n || i == n_k - 1) return 0.5 * dk;
  return dk;
}

void zero_off_unknowns(Field& f) {
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

}  // namespace

void InversionConfig::validate() const {
  std::ostringstream why;
  if (!(lambda >= 0.0)) why << "lambda must be nonnegative; ";
  if (!(gamma > 0.0 && gamma < 1.0)) why << "gamma must lie in (0, 1); ";
  if (max_iter < 1) why << "max_iter must be positive; ";
  if (!(grad_tol > 0.0)) why << "grad_tol must be positive; ";
  if (!(delta >= 0.0 && delta < 1.0)) why << "delta must lie in [0, 1); ";
  if (burn_in < 0) why << "burn_in must be nonnegative; ";
  if (max_halvings < 0) why << "max_halvings must be nonnegative; ";
  if (checkpoint_every < 0) why << "checkpoint_every must be nonnegative; ";
  if (!why.str().empty()) throw DomainError("invalid inversion settings: " + why.str());
}

Field k_tail_integral(const Field& q) {
  if (!q.has_k_axis()) throw StructuralError("k integral needs a field with a k axis");
  const GridSpec& g = q.grid();
  Field S(g, true);
  const double dk = g.dk();
  for (int n = g.n_k() - 2; n >= 0; --n) {
    auto dst = S.slice(n);
    auto above = S.slice(n + 1);
    auto a = q.slice(n), b = q.slice(n + 1);
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = above[i] + 0.5 * dk * (a[i] + b[i]);
  }
  return S;
}

namespace {

struct Parts {
  Field lap;
  std::array<Field, 3> A;  // grad V - grad S
  std::array<Field, 3> B;  // k grad q + c_V grad V - grad S
  Field L;
};

Parts build_parts(const Field& q, const Field& V, const std::array<Field, 3>& gV, LhForm form) {
  const GridSpec& g = q.grid();
  if (!q.has_k_axis()) throw StructuralError("L_h needs q with a k axis");
  if (V.has_k_axis() || V.grid() != g) throw StructuralError("tail field does not match q");
  const Field S = k_tail_integral(q);
  const auto gq = gradient_h(q);
  const auto gS = gradient_h(S);
  Parts P{laplacian_h(q), {Field(g, true), Field(g, true), Field(g, true)},
          {Field(g, true), Field(g, true), Field(g, true)}, Field(g, true)};
  const std::size_t slice = q.slice_size();
  for (int n = 0; n < g.n_k(); ++n) {
    const double k = g.k(n);
    const double cv = form == LhForm::Derived ? 1.0 : k;
    const std::size_t off = n * slice;
    for (std::size_t i = 0; i < slice; ++i) {
      cplx dot{};
      for (int c = 0; c < 3; ++c) {
        const cplx a = gV[c].values()[i] - gS[c].values()[off + i];
        const cplx b = k * gq[c].values()[off + i] + cv * gV[c].values()[i] - gS[c].values()[off + i];
        P.A[c].values()[off + i] = a;
        P.B[c].values()[off + i] = b;
        dot += a * b;
      }
      P.L.values()[off + i] =
          P.lap.values()[off + i] + 2.0 * k * dot +
          2.0 * kI * (k * gq[2].values()[off + i] + gV[2].values()[i] - gS[2].values()[off + i]);
    }
  }
  return P;
}

}  // namespace

Field lh_residual(const Field& q, const Field& V, LhForm form) {
  return build_parts(q, V, gradient_h(V), form).L;
}

Field apply_Lh(const Field& p, const Field& F, const Field& V, int k_index, LhForm form) {
  require_same_grid(p, F, "apply_Lh");
  if (k_index < 0 || k_index >= p.n_k()) throw StructuralError("k index out of range");
  return lh_residual(p + F, V, form).k_slice(k_index);
}

double real_pairing(const Field& a, const Field& b) {
  require_same_grid(a, b, "real_pairing");
  double s = 0.0;
  const auto& x = a.values();
  const auto& y = b.values();
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i].real() * y[i].real() + x[i].imag() * y[i].imag();
  return s;
}

struct Functional::Terms {
  Parts parts;
};

Functional::Functional(Field F, Field V, double lambda, LhForm form)
    : F_(std::move(F)), V_(std::move(V)), lambda_(lambda), form_(form) {
  if (!F_.has_k_axis()) throw StructuralError("F must carry a k axis");
  if (V_.has_k_axis() || V_.grid() != F_.grid()) throw StructuralError("V must be a k-less field on F's grid");
  const CarlemanWeight cw(F_.grid(), lambda);
  wz_ = cw.interior_quadrature(true);
  wk_ = trapezoid_weights(F_.grid().n_k(), F_.grid().dk());
  grad_V_ = gradient_h(V_);
}

Functional::Terms Functional::terms(const Field& p) const {
  require_same_grid(p, F_, "Functional");
  return Terms{build_parts(p + F_, V_, grad_V_, form_)};
}

double Functional::sum_weighted(const Field& L) const {
  const int nk = grid().n_k();
  std::vector<double> partial(nk);
#pragma omp parallel for schedule(static)
  for (int n = 0; n < nk; ++n) partial[n] = wk_[n] * weighted_interior_sum(L, n, wz_);
  double sum = 0.0;
  for (double v : partial) sum += v;
  return sum;
}

double Functional::value(const Field& p) const { return sum_weighted(terms(p).parts.L); }

Field Functional::gradient(const Field& p) const {
  Field g;
  value_and_gradient(p, g);
  return g;
}

double Functional::value_and_gradient(const Field& p, Field& grad) const {
  const GridSpec& g = grid();
  const Terms t = terms(p);
  const Parts& P = t.parts;
  const int nk = g.n_k(), nh = g.n_h(), nz = g.n_z();
  const double h2 = g.h() * g.h();

  // rho = dJ/dL-bar = 2 c L with c the quadrature weight of each node.
  Field rho(g, true);
  for (int n = 0; n < nk; ++n)
    for (int j = 1; j < nh - 1; ++j)
      for (int s = 1; s < nh - 1; ++s) {
        auto L = P.L.column(j, s, n);
        auto r = rho.column(j, s, n);
        for (int m = 1; m < nz - 1; ++m) r[m] = 2.0 * wk_[n] * h2 * wz_[m] * L[m];
      }

  // Coefficient fields of the linearization
  //   dL = Lap dq + sum_c a_c D_c dq - sum_c b_c D_c dS
  // with a = 2k^2 A (+ 2ik on z) and b = 2k (A + B) (+ 2i on z).
  // Adjoints use D_c^T x = -D_c x for fields vanishing off the interior nodes.
  Field direct = laplacian_h(rho);
  Field through_S(g, true);
  const std::size_t slice = rho.slice_size();
  for (int c = 0; c < 3; ++c) {
    Field wa(g, true), wb(g, true);
    for (int n = 0; n < nk; ++n) {
      const double k = g.k(n);
      const std::size_t off = n * slice;
      for (std::size_t i = 0; i < slice; ++i) {
        const cplx A = P.A[c].values()[off + i], B = P.B[c].values()[off + i];
        cplx a = 2.0 * k * k * A;
        cplx b = -2.0 * k * (A + B);
        if (c == 2) {
          a += 2.0 * kI * k;
          b += -2.0 * kI;
        }
        const cplx r = rho.values()[off + i];
        wa.values()[off + i] = std::conj(a) * r;
        wb.values()[off + i] = std::conj(b) * r;
      }
    }
    const Field da = gradient_h(wa)[c];
    const Field db = gradient_h(wb)[c];
    direct -= da;
    through_S -= db;
  }

  // Transpose of the k-integral: grad_i += sum_n T(n, i) through_S_n.
  grad = direct;
  const double dk = g.dk();
  for (int i = 0; i < nk; ++i) {
    auto dst = grad.slice(i);
    for (int n = 0; n < nk; ++n) {
      const double w = tail_weight(n, i, nk, dk);
      if (w == 0.0) continue;
      auto src = through_S.slice(n);
      for (std::size_t x = 0; x < dst.size(); ++x) dst[x] += w * src[x];
    }
  }
  zero_off_unknowns(grad);
  return sum_weighted(P.L);
}

double evaluate_J(const Field& p, const InversionConfig& cfg, const Field& F, const Field& V) {
  return Functional(F, V, cfg.lambda, cfg.form).value(p);
}

Field gradient_J(const Field& p, const InversionConfig& cfg, const Field& F, const Field& V) {
  return Functional(F, V, cfg.lambda, cfg.form).gradient(p);
}

Field project_ball(const Field& p, double R) {
  if (!(R > 0.0)) throw DomainError("ball radius must be positive");
  const double nrm = p.has_k_axis() ? norm_H2h_k(p) : norm_H2h(p);
  if (nrm <= R) return p;
  return p * cplx(R / nrm);
}

struct RieszMap::Impl {
  GridSpec grid;
  std::vector<double> wk;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<cplx>> drift_ldlt;
  bool drift = false;
};

RieszMap::RieszMap(const GridSpec& grid, double lambda, bool with_drift) : impl_(std::make_unique<Impl>()) {
  impl_->grid = grid;
  impl_->wk = trapezoid_weights(grid.n_k(), grid.dk());
  const auto A = laplacian_matrix(grid, 2);
  const Eigen::VectorXd w = laplacian_row_weights(grid, lambda);
  if (!with_drift) {
    const Eigen::SparseMatrix<double> M = A.transpose() * w.asDiagonal() * A;
    impl_->ldlt.compute(M);
    if (impl_->ldlt.info() != Eigen::Success) throw SolverError("Riesz map factorization failed", INFINITY);
    return;
  }
  // One factorization at the mid-band wavenumber serves every k node.
  const double k_mid = 0.5 * (grid.k_min() + grid.k_max());
  const Eigen::SparseMatrix<cplx> An = A.cast<cplx>() + cplx(0.0, 2.0 * k_mid) * dz_matrix(grid, 2).cast<cplx>();
  const Eigen::SparseMatrix<cplx> M = An.adjoint() * w.cast<cplx>().asDiagonal() * An;
  impl_->drift_ldlt.compute(M);
  if (impl_->drift_ldlt.info() != Eigen::Success) throw SolverError("Riesz map factorization failed", INFINITY);
  impl_->drift = true;
}

RieszMap::~RieszMap() = default;
RieszMap::RieszMap(RieszMap&&) noexcept = default;

Field RieszMap::apply(const Field& gradient) const {
  const GridSpec& g = impl_->grid;
  Field out(g, true);
  for (int n = 0; n < g.n_k(); ++n) {
    const Eigen::VectorXcd b = gather_unknowns(gradient, n, 2) / (2.0 * impl_->wk[n]);
    Eigen::VectorXcd x(b.size());
    if (!impl_->drift) {
      x.real() = impl_->ldlt.solve(b.real().eval());
      x.imag() = impl_->ldlt.solve(b.imag().eval());
    } else {
      x = impl_->drift_ldlt.solve(b);
    }
    scatter_unknowns(x, out, n, 2);
  }
  return out;
}

double effective_radius(const InversionConfig& cfg, const Field& F) {
  return cfg.R > 0.0 ? cfg.R : 10.0 * norm_H2h_k(F) + 1.0;
}

IterateState gradient_projection(const Field& p0, const InversionConfig& cfg, const Field& F,
                                 const Field& V, const IterateObserver& observer) {
  cfg.validate();
  require_same_grid(p0, F, "gradient_projection");
  check_h0_conditions(p0);
  const double R = effective_radius(cfg, F);
  if (norm_H2h_k(p0) > R * (1.0 + 1e-12)) throw ContractError("starting point lies outside the ball");
  const Functional J(F, V, cfg.lambda, cfg.form);
  std::optional<RieszMap> riesz;
  if (cfg.geometry != StepGeometry::Coefficient)
    riesz.emplace(F.grid(), cfg.lambda, cfg.geometry == StepGeometry::RieszDrift);

  IterateState st;
  st.R = R;
  st.p = p0;
  Field grad;
  st.J = J.value_and_gradient(st.p, grad);
  double gamma = cfg.gamma;
  std::vector<double> j_history{st.J};
  st.history.push_back({0, st.J, 0.0, 0.0, false, gamma});

  for (int n = 1; n <= cfg.max_iter; ++n) {
    const Field dir = riesz ? riesz->apply(grad) : grad;
    const double grad_norm = norm_H2h_k(dir);
    if (n == 1) st.history.front().grad_norm = grad_norm;
    Field next, next_grad;
    double next_J = 0.0, step = 0.0;
    bool projected = false;
    for (;;) {
      Field trial = st.p - cplx(gamma) * dir;
      projected = norm_H2h_k(trial) > R;
      next = projected ? project_ball(trial, R) : std::move(trial);
      next_J = J.value_and_gradient(next, next_grad);
      step = norm_H2h_k(next - st.p);
      const bool ascent = n > cfg.burn_in && next_J > st.J;
      if (!ascent) break;
      if (st.halvings >= cfg.max_halvings) {
        j_history.push_back(next_J);
        std::ostringstream os;
        os << "J increased at iteration " << n << " after " << st.halvings << " step halvings";
        throw DivergenceError(os.str(), j_history);
      }
      gamma *= 0.5;
      ++st.halvings;
    }
    st.p = std::move(next);
    grad = std::move(next_grad);
    st.J = next_J;
    st.grad_norm = grad_norm;
    st.projection_active = st.projection_active || projected;
    j_history.push_back(next_J);
    st.history.push_back({n, next_J, grad_norm, step, projected, gamma});
    if (observer) observer(n, st.p);
    if (cfg.checkpoint_every > 0 && n % cfg.checkpoint_every == 0 && !cfg.checkpoint_dir.empty()) {
      std::ostringstream name;
      name << "checkpoint_" << n << ".field";
      write_field_file(cfg.checkpoint_dir / name.str(), st.p,
                       {{"iteration", std::to_string(n)}, {"J", format_double(st.J)}});
    }
    if (step <= cfg.grad_tol * gamma) {
      st.converged = true;
      break;
    }
  }
  return st;
}

void write_iteration_log(std::ostream& os, const IterateState& state) {
  os << "n,J,grad_norm,step_norm,projected,gamma\n";
  for (const auto& r : state.history)
    os << r.n << ',' << format_double(r.J) << ',' << format_double(r.grad_norm) << ','
       << format_double(r.step_norm) << ',' << (r.projected ? 1 : 0) << ',' << format_double(r.gamma)
       << '\n';
}

double choose_lambda(double delta, double d, double xi, double lambda1) {
  const double delta1 = std::exp(-4.0 * (d + xi) * lambda1);
  if (!(delta > 0.0 && delta < delta1)) {
    std::ostringstream os;
    os << "noise level " << delta << " outside (0, " << delta1 << ") for the lambda schedule";
    throw ScheduleError(os.str());
  }
  return -std::log(delta) / (4.0 * (d + xi));
}

Field random_direction(const GridSpec& grid, Rng& rng, double norm) {
  Field r = random_admissible_field(grid, rng, true);
  const double nrm = norm_H2h_k(r);
  return nrm > 0.0 ? r * cplx(norm / nrm) : r;
}

ConvexityReport convexity_probe(const Functional& J, double R, int n_pairs, std::uint64_t seed) {
  if (n_pairs < 1) throw DomainError("convexity probe needs at least one pair");
  Rng rng(seed);
  ConvexityReport rep;
  rep.min_ratio = INFINITY;
  rep.max_ratio = -INFINITY;
  for (int i = 0; i < n_pairs; ++i) {
    const double a = R * rng.uniform();
    const Field p = random_direction(J.grid(), rng, a);
    // |r| <= R - |p| keeps p + r inside the ball.
    const double b = (R - a) * (0.05 + 0.95 * rng.uniform());
    const Field r = random_direction(J.grid(), rng, b);
    Field g;
    const double jp = J.value_and_gradient(p, g);
    const double gap = J.value(p + r) - jp - real_pairing(g, r);
    const double ratio = gap / (b * b);
    rep.min_ratio = std::min(rep.min_ratio, ratio);
    rep.max_ratio = std::max(rep.max_ratio, ratio);
    ++rep.pairs;
  }
  return rep;
}

GradientCheckReport gradient_check(const Functional& J, const Field& p, int n_directions,
                                   std::uint64_t seed, double step) {
  Rng rng(seed);
  GradientCheckReport rep;
  const Field g = J.gradient(p);
  const double scale = std::max(1.0, norm_H2h_k(p));
  for (int i = 0; i < n_directions; ++i) {
    const Field r = random_direction(J.grid(), rng, 1.0);
    const double eps = step * scale;
    const double fd = (J.value(p + cplx(eps) * r) - J.value(p - cplx(eps) * r)) / (2.0 * eps);
    const double an = real_pairing(g, r);
    const double err = std::abs(fd - an) / std::max(std::abs(an), 1e-300);
    rep.max_relative_error = std::max(rep.max_relative_error, err);
    ++rep.directions;
  }
  return rep;
}

LipschitzReport lipschitz_probe(const Functional& J, double R, int n_pairs, std::uint64_t seed) {
  if (n_pairs < 1) throw DomainError("Lipschitz probe needs at least one pair");
  Rng rng(seed);
  std::vector<double> ratios;
  for (int i = 0; i < n_pairs; ++i) {
    const Field p1 = random_direction(J.grid(), rng, R * rng.uniform());
    const Field p2 = random_direction(J.grid(), rng, R * rng.uniform());
    const double num = norm_L2h_k(J.gradient(p1) - J.gradient(p2));
    const double den = norm_H2h_k(p1 - p2);
    ratios.push_back(num / den);
  }
  std::vector<double> sorted = ratios;
  std::sort(sorted.begin(), sorted.end());
  return {sorted.back(), sorted.front(), sorted[sorted.size() / 2], n_pairs};
}

}  // namespace convexify
