#include "convexify/tail_solver.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/SparseCholesky>

#include "convexify/carleman.hpp"
#include "convexify/data_prep.hpp"
#include "convexify/errors.hpp"

namespace convexify {

namespace {

struct Block {
  int n_int, n_mz, first_m;
  Block(const GridSpec& g, int first) : n_int(g.n_h() - 2), n_mz(g.n_z() - 1 - first), first_m(first) {}
  int size() const { return n_int * n_int * n_mz; }
  int index(int j, int s, int m) const { return ((j - 1) * n_int + (s - 1)) * n_mz + (m - first_m); }
};

void check_first_m(const GridSpec& g, int first_m) {
  if (first_m < 1 || first_m > g.n_z() - 2) throw StructuralError("free z block out of range");
}

Eigen::VectorXcd laplacian_rows(const Field& f) {
  const GridSpec& g = f.grid();
  const Field lap = laplacian_h(f);
  const int nh = g.n_h(), nz = g.n_z();
  Eigen::VectorXcd r((nh - 2) * (nh - 2) * (nz - 2));
  for (int j = 1; j < nh - 1; ++j)
    for (int s = 1; s < nh - 1; ++s)
      for (int m = 1; m < nz - 1; ++m) r[laplacian_row(g, j, s, m)] = lap(j, s, m);
  return r;
}

// Jacobi-preconditioned CG for the real SPD matrix M with a complex right-hand side.
Eigen::VectorXcd conjugate_gradient(const Eigen::SparseMatrix<double>& M, const Eigen::VectorXcd& b,
                                    Eigen::VectorXcd x, double tol, int max_iter, int& iterations) {
  const Eigen::SparseMatrix<cplx> Mc = M.cast<cplx>();
  const Eigen::VectorXd inv_diag = M.diagonal().cwiseInverse();
  const double bnorm = b.norm();
  std::vector<double> history;
  if (bnorm == 0.0) {
    iterations = 0;
    return Eigen::VectorXcd::Zero(b.size());
  }
  Eigen::VectorXcd r = b - Mc * x;
  Eigen::VectorXcd z = inv_diag.cast<cplx>().cwiseProduct(r);
  Eigen::VectorXcd p = z;
  cplx rz = r.dot(z);
  for (int it = 0; it < max_iter; ++it) {
    const double rel = r.norm() / bnorm;
    history.push_back(rel);
    if (rel <= tol) {
      iterations = it;
      return x;
    }
    const Eigen::VectorXcd Mp = Mc * p;
    const cplx alpha = rz / p.dot(Mp);
    x += alpha * p;
    r -= alpha * Mp;
    z = inv_diag.cast<cplx>().cwiseProduct(r);
    const cplx rz_new = r.dot(z);
    p = z + (rz_new / rz) * p;
    rz = rz_new;
  }
  const double rel = r.norm() / bnorm;
  history.push_back(rel);
  if (rel <= tol) {
    iterations = max_iter;
    return x;
  }
  std::ostringstream os;
  os << "tail CG stagnated at relative residual " << rel << " after " << max_iter << " iterations";
  throw SolverError(os.str(), rel, std::move(history));
}

}  // namespace

int laplacian_row(const GridSpec& g, int j, int s, int m) {
  const int n_int = g.n_h() - 2, nr = g.n_z() - 2;
  return ((j - 1) * n_int + (s - 1)) * nr + (m - 1);
}

Eigen::SparseMatrix<double> laplacian_matrix(const GridSpec& g, int first_m) {
  check_first_m(g, first_m);
  const Block blk(g, first_m);
  const int nh = g.n_h(), nz = g.n_z();
  const double ih2 = 1.0 / (g.h() * g.h()), idz2 = 1.0 / (g.dz() * g.dz());
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(static_cast<std::size_t>(blk.size()) * 7);
  auto add = [&](int row, int j, int s, int m, double v) {
    if (j < 1 || j > nh - 2 || s < 1 || s > nh - 2 || m < first_m || m > nz - 2) return;
    t.emplace_back(row, blk.index(j, s, m), v);
  };
  for (int j = 1; j < nh - 1; ++j)
    for (int s = 1; s < nh - 1; ++s)
      for (int m = 1; m < nz - 1; ++m) {
        const int row = laplacian_row(g, j, s, m);
        add(row, j, s, m, -4.0 * ih2 - 2.0 * idz2);
        add(row, j - 1, s, m, ih2);
        add(row, j + 1, s, m, ih2);
        add(row, j, s - 1, m, ih2);
        add(row, j, s + 1, m, ih2);
        add(row, j, s, m - 1, idz2);
        add(row, j, s, m + 1, idz2);
      }
  Eigen::SparseMatrix<double> A((nh - 2) * (nh - 2) * (nz - 2), blk.size());
  A.setFromTriplets(t.begin(), t.end());
  return A;
}

Eigen::SparseMatrix<double> dz_matrix(const GridSpec& g, int first_m) {
  check_first_m(g, first_m);
  const Block blk(g, first_m);
  const int nh = g.n_h(), nz = g.n_z();
  const double c = 0.5 / g.dz();
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(static_cast<std::size_t>(blk.size()) * 2);
  for (int j = 1; j < nh - 1; ++j)
    for (int s = 1; s < nh - 1; ++s)
      for (int m = 1; m < nz - 1; ++m) {
        const int row = laplacian_row(g, j, s, m);
        if (m - 1 >= first_m) t.emplace_back(row, blk.index(j, s, m - 1), -c);
        if (m + 1 <= nz - 2) t.emplace_back(row, blk.index(j, s, m + 1), c);
      }
  Eigen::SparseMatrix<double> D((nh - 2) * (nh - 2) * (nz - 2), blk.size());
  D.setFromTriplets(t.begin(), t.end());
  return D;
}

Eigen::VectorXcd gather_unknowns(const Field& f, int k_index, int first_m) {
  const GridSpec& g = f.grid();
  check_first_m(g, first_m);
  const Block blk(g, first_m);
  Eigen::VectorXcd x(blk.size());
  for (int j = 1; j < g.n_h() - 1; ++j)
    for (int s = 1; s < g.n_h() - 1; ++s)
      for (int m = first_m; m < g.n_z() - 1; ++m) x[blk.index(j, s, m)] = f(j, s, m, k_index);
  return x;
}

void scatter_unknowns(const Eigen::VectorXcd& x, Field& f, int k_index, int first_m) {
  const GridSpec& g = f.grid();
  check_first_m(g, first_m);
  const Block blk(g, first_m);
  if (x.size() != blk.size()) throw StructuralError("unknown vector has the wrong length");
  for (int j = 1; j < g.n_h() - 1; ++j)
    for (int s = 1; s < g.n_h() - 1; ++s)
      for (int m = first_m; m < g.n_z() - 1; ++m) f(j, s, m, k_index) = x[blk.index(j, s, m)];
}

Eigen::VectorXd laplacian_row_weights(const GridSpec& g, double mu) {
  const CarlemanWeight cw(g, mu);
  const auto wz = cw.interior_quadrature(true);
  const int n_int = g.n_h() - 2, nr = g.n_z() - 2;
  Eigen::VectorXd w(n_int * n_int * nr);
  const double h2 = g.h() * g.h();
  for (int c = 0; c < n_int * n_int; ++c)
    for (int m = 1; m <= nr; ++m) w[c * nr + (m - 1)] = h2 * wz[m];
  return w;
}

double choose_mu(double delta, double d, double xi, double lambda0) {
  const double delta0 = std::exp(-2.0 * (d + xi) * lambda0);
  if (!(delta > 0.0 && delta < delta0)) {
    std::ostringstream os;
    os << "noise level " << delta << " outside (0, " << delta0 << ") for the mu schedule";
    throw ScheduleError(os.str());
  }
  return -std::log(delta) / (2.0 * (d + xi));
}

double tail_functional(const Field& W, const Field& Q, double mu) {
  require_same_grid(W, Q, "tail_functional");
  const CarlemanWeight cw(Q.grid(), mu);
  return weighted_interior_sum(laplacian_h(W + Q), 0, cw.interior_quadrature(true));
}

Metadata TailFunction::metadata() const {
  return {{"mu", format_double(mu)},
          {"residual", format_double(residual)},
          {"residual_at_zero", format_double(residual_at_zero)},
          {"boundary_defect", format_double(boundary_defect)},
          {"iterations", std::to_string(iterations)}};
}

TailFunction minimize_tail(const Field& Q, double mu, const TailOptions& opts) {
  if (Q.has_k_axis()) throw StructuralError("tail extension must not carry a k axis");
  if (!(mu >= 0.0)) throw DomainError("mu must be nonnegative");
  const GridSpec& g = Q.grid();
  const int first_m = opts.variant == TailVariant::Carleman ? 2 : 1;
  const auto A = laplacian_matrix(g, first_m);
  const Eigen::VectorXd w = laplacian_row_weights(g, mu);
  const Eigen::SparseMatrix<double> M = A.transpose() * w.asDiagonal() * A;
  const Eigen::VectorXcd rhs = -(A.transpose() * w.asDiagonal()).cast<cplx>() * laplacian_rows(Q);

  TailFunction out;
  out.mu = mu;
  Eigen::VectorXcd x;
  const bool direct = opts.method == TailMethod::Direct ||
                      (opts.method == TailMethod::Auto && M.rows() < opts.direct_limit);
  if (direct) {
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(M);
    if (ldlt.info() != Eigen::Success) throw SolverError("tail factorization failed", INFINITY);
    x.resize(M.rows());
    x.real() = ldlt.solve(rhs.real().eval());
    x.imag() = ldlt.solve(rhs.imag().eval());
  } else {
    Eigen::VectorXcd x0 = Eigen::VectorXcd::Zero(M.rows());
    if (opts.initial_guess) x0 = gather_unknowns(*opts.initial_guess, 0, first_m);
    x = conjugate_gradient(M, rhs, x0, opts.cg_tolerance, opts.cg_max_iterations, out.iterations);
  }

  Field W(g, false);
  scatter_unknowns(x, W, 0, first_m);
  out.V = W + Q;
  out.residual = tail_functional(W, Q, mu);
  out.residual_at_zero = tail_functional(Field(g, false), Q, mu);
  for (int j = 0; j < g.n_h(); ++j)
    for (int s = 0; s < g.n_h(); ++s)
      for (int m = 0; m < g.n_z(); ++m) {
        const bool free = g.is_interior_column(j, s) && m >= first_m && m <= g.n_z() - 2;
        if (!free) out.boundary_defect = std::max(out.boundary_defect, std::abs(out.V(j, s, m) - Q(j, s, m)));
      }
  return out;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw StructuralError("slope fit needs matched lists of length >= 2");
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

TailProbeReport tail_convergence_probe(const MeasuredBoundaryData& clean, const Field& exact_tail,
                                       const std::vector<double>& deltas, std::uint64_t seed,
                                       double lambda0) {
  if (deltas.size() < 3) throw DomainError("tail probe needs at least 3 noise levels");
  const GridSpec& g = clean.grid;
  const PreparedData clean_prep = prepare_data(clean);
  TailProbeReport report;
  report.exact_tail_norm = norm_H2h(exact_tail);
  std::vector<double> xs, ys;
  for (double delta : deltas) {
    const double mu = choose_mu(delta, g.d(), g.xi(), lambda0);
    const PreparedData noisy_prep = prepare_data(add_noise(clean, delta, seed));
    const Field v_noisy = minimize_tail(noisy_prep.ext.Q, mu).V;
    const Field v_clean = minimize_tail(clean_prep.ext.Q, mu).V;
    TailProbeRow row{delta, mu, norm_H2h(v_noisy - v_clean), norm_H2h(v_clean - exact_tail),
                     norm_H2h(v_noisy - exact_tail)};
    report.rows.push_back(row);
    xs.push_back(delta);
    ys.push_back(row.noise_error);
  }
  report.slope = loglog_slope(xs, ys);
  double smallest = deltas.front();
  for (double d : deltas) smallest = std::min(smallest, d);
  const double mu0 = choose_mu(smallest, g.d(), g.xi(), lambda0);
  report.floor_at_zero_noise = norm_H2h(minimize_tail(clean_prep.ext.Q, mu0).V - exact_tail);
  return report;
}

}  // namespace convexify
