#pragma once

#include <optional>
#include <vector>

#include <Eigen/SparseCore>

#include "convexify/field_io.hpp"
#include "convexify/forward_sim.hpp"
#include "convexify/grid.hpp"

namespace convexify {

/**
 * Lap_h as a real sparse matrix from the free nodes (interior columns, z nodes
 * first_m..n_z-2, ordered as in UnknownLayout) to the nodes where Lap_h is
 * evaluated (interior columns, z nodes 1..n_z-2).
 */
Eigen::SparseMatrix<double> laplacian_matrix(const GridSpec& grid, int first_m = 2);

/// Central z difference with the rows and columns of laplacian_matrix.
Eigen::SparseMatrix<double> dz_matrix(const GridSpec& grid, int first_m = 2);

/// Row index of node (j, s, m) in laplacian_matrix, m in 1..n_z-2.
int laplacian_row(const GridSpec& grid, int j, int s, int m);

/// h^2 dz e^{2 mu d} phi_mu(z_m) for every row of laplacian_matrix.
Eigen::VectorXd laplacian_row_weights(const GridSpec& grid, double mu);

/// Free-node vector <-> field slice for the node block starting at first_m.
Eigen::VectorXcd gather_unknowns(const Field& f, int k_index = 0, int first_m = 2);
void scatter_unknowns(const Eigen::VectorXcd& x, Field& f, int k_index = 0, int first_m = 2);

/// mu = -ln(delta) / (2 (d + xi)); throws ScheduleError unless 0 < delta < exp(-2 (d + xi) lambda0).
double choose_mu(double delta, double d, double xi, double lambda0);

enum class TailVariant {
  /// Both Gamma conditions: V = psi0 and V_z = psi1.
  Carleman,
  /// psi1 dropped; V = psi0 on Gamma and Lap_h V = 0 solved exactly.
  DirichletLaplace,
};

enum class TailMethod { Auto, Direct, ConjugateGradient };

struct TailOptions {
  TailVariant variant = TailVariant::Carleman;
  TailMethod method = TailMethod::Auto;
  /// Auto switches from sparse factorization to CG at this many unknowns.
  int direct_limit = 20000;
  double cg_tolerance = 1e-10;
  int cg_max_iterations = 20000;
  /// CG starting point for W (free nodes only); zero when absent.
  std::optional<Field> initial_guess;
};

struct TailFunction {
  Field V;
  double mu = 0.0;
  /// I_mu at the minimizer and at W = 0.
  double residual = 0.0;
  double residual_at_zero = 0.0;
  /// Largest |V - Q| over the nodes where W is held at zero.
  double boundary_defect = 0.0;
  int iterations = 0;
  Metadata metadata() const;
};

/// I_mu(W) = e^{2 mu d} sum h^2 integral |Lap_h(W + Q)|^2 phi_mu dz.
double tail_functional(const Field& W, const Field& Q, double mu);

/**
 * Minimizes I_mu over W vanishing on the boundary and on z node 1 by solving
 * the normal equations, and returns V = W_min + Q. For the Dirichlet variant
 * the caller passes an extension built without psi1 and z node 1 is free.
 */
TailFunction minimize_tail(const Field& Q, double mu, const TailOptions& opts = {});

struct TailProbeRow {
  double delta;
  double mu;
  /// ||V_mu[noisy] - V_mu[clean]||_H2h: the part of the error driven by the noise.
  double noise_error;
  /// ||V_mu[clean] - V*||_H2h: discretization and modelling floor at this mu.
  double floor_error;
  /// ||V_mu[noisy] - V*||_H2h.
  double total_error;
};

struct TailProbeReport {
  std::vector<TailProbeRow> rows;
  /// Least-squares slope of log noise_error against log delta.
  double slope = 0.0;
  /// ||V_0[clean] - V*|| with the exact boundary data and mu from the smallest delta.
  double floor_at_zero_noise = 0.0;
  double exact_tail_norm = 0.0;
};

/**
 * Runs data preparation and the tail solve per noise level with mu(delta),
 * reusing one clean dataset; `exact_tail` is v(x, k_max) from the simulator.
 */
TailProbeReport tail_convergence_probe(const MeasuredBoundaryData& clean, const Field& exact_tail,
                                       const std::vector<double>& deltas, std::uint64_t seed,
                                       double lambda0);

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace convexify
