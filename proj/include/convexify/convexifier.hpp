#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <vector>

#include "convexify/carleman.hpp"
#include "convexify/grid.hpp"

namespace convexify {

/**
 * Which operator to minimize. Derived uses k grad q + grad V - grad S in the
 * second factor, the form obtained by differentiating the v equation in k and
 * substituting v = V - S. AsPrinted uses k grad(q + V) - grad S.
 */
enum class LhForm { Derived, AsPrinted };

/// Geometry of the descent step.
enum class StepGeometry {
  /// Gradient represented in the Carleman-weighted Lap_h inner product (one sparse solve per k).
  Riesz,
  /// Same, with the Gram matrix of Lap_h + 2ik d/dz at the mid-band k.
  RieszDrift,
  /// Raw coefficient-space gradient.
  Coefficient,
};

struct InversionConfig {
  double lambda = 3.0;
  /// Ball radius in the H2h norm over k; <= 0 selects 10 ||F|| + 1.
  double R = 0.0;
  double gamma = 0.1;
  int max_iter = 500;
  double grad_tol = 1e-6;
  /// Assumed noise level (drives lambda in schedule mode).
  double delta = 0.0;
  int burn_in = 3;
  int max_halvings = 6;
  StepGeometry geometry = StepGeometry::RieszDrift;
  LhForm form = LhForm::Derived;
  int checkpoint_every = 0;
  std::filesystem::path checkpoint_dir;

  /// Throws DomainError on an invalid combination.
  void validate() const;
};

/// S(k_n) = integral from k_n to k_max of q, node by node (reverse cumulative trapezoid).
Field k_tail_integral(const Field& q);

/// L_h(q) at every k node; q carries a k axis, V does not.
Field lh_residual(const Field& q, const Field& V, LhForm form = LhForm::Derived);
/// L_h(p + F) at one k node.
Field apply_Lh(const Field& p, const Field& F, const Field& V, int k_index,
               LhForm form = LhForm::Derived);

/// Re sum conj(a) b over all nodes: the pairing under which gradients act on directions.
double real_pairing(const Field& a, const Field& b);

/**
 * J_lambda(p) = e^{2 lambda d} sum h^2 integral integral |L_h(p + F)|^2 phi_lambda dz dk
 * and its exact gradient. The gradient G satisfies dJ[r] = real_pairing(G, r)
 * for every admissible direction r and vanishes off the free nodes.
 */
class Functional {
 public:
  Functional(Field F, Field V, double lambda, LhForm form = LhForm::Derived);

  const GridSpec& grid() const { return F_.grid(); }
  double lambda() const { return lambda_; }
  const Field& F() const { return F_; }
  const Field& V() const { return V_; }
  LhForm form() const { return form_; }

  double value(const Field& p) const;
  Field gradient(const Field& p) const;
  double value_and_gradient(const Field& p, Field& gradient) const;

 private:
  struct Terms;
  Terms terms(const Field& p) const;
  double sum_weighted(const Field& L) const;

  Field F_;
  Field V_;
  double lambda_;
  LhForm form_;
  std::vector<double> wz_;  // balanced z weights
  std::vector<double> wk_;  // trapezoid k weights
  std::array<Field, 3> grad_V_;
};

double evaluate_J(const Field& p, const InversionConfig& cfg, const Field& F, const Field& V);
Field gradient_J(const Field& p, const InversionConfig& cfg, const Field& F, const Field& V);

/// Radial projection onto {||p||_H2h,k <= R}.
Field project_ball(const Field& p, double R);

/**
 * Riesz map of the inner product <a, b> = 2 Re sum_n w_n a_n^H M b_n, with M the
 * Carleman-weighted Lap_h Gram matrix on the free nodes and w_n the k weights.
 */
class RieszMap {
 public:
  RieszMap(const GridSpec& grid, double lambda, bool with_drift = false);
  ~RieszMap();
  RieszMap(RieszMap&&) noexcept;
  Field apply(const Field& gradient) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

struct IterateRecord {
  int n;
  double J;
  double grad_norm;
  double step_norm;
  bool projected;
  double gamma;
};

struct IterateState {
  Field p;
  double J = 0.0;
  double grad_norm = 0.0;
  bool projection_active = false;
  bool converged = false;
  int halvings = 0;
  double R = 0.0;
  std::vector<IterateRecord> history;
};

/// Called after every accepted iterate with (n, p_n).
using IterateObserver = std::function<void(int, const Field&)>;

/**
 * p_n = P(p_{n-1} - gamma * g(p_{n-1})) until ||p_n - p_{n-1}|| <= grad_tol * gamma
 * or max_iter. An increase of J after burn_in halves gamma and retries the step;
 * after max_halvings the run fails with DivergenceError.
 */
IterateState gradient_projection(const Field& p0, const InversionConfig& cfg, const Field& F,
                                 const Field& V, const IterateObserver& observer = {});

void write_iteration_log(std::ostream& os, const IterateState& state);

/// Radius actually used for a given config and F.
double effective_radius(const InversionConfig& cfg, const Field& F);

/// lambda = -ln(delta) / (4 (d + xi)); ScheduleError unless 0 < delta < exp(-4 (d + xi) lambda1).
double choose_lambda(double delta, double d, double xi, double lambda1);

struct ConvexityReport {
  double min_ratio = 0.0;
  double max_ratio = 0.0;
  int pairs = 0;
};

/// min over random pairs p, p + r in the ball of (J(p+r) - J(p) - <g(p), r>) / ||r||^2.
ConvexityReport convexity_probe(const Functional& J, double R, int n_pairs, std::uint64_t seed);

struct GradientCheckReport {
  double max_relative_error = 0.0;
  int directions = 0;
};

/// Central-difference directional derivatives against the gradient pairing.
GradientCheckReport gradient_check(const Functional& J, const Field& p, int n_directions,
                                   std::uint64_t seed, double step = 1e-4);

struct LipschitzReport {
  double max_ratio = 0.0;
  double min_ratio = 0.0;
  double median_ratio = 0.0;
  int pairs = 0;
};

/// ||g(p1) - g(p2)||_L2h,k / ||p1 - p2||_H2h,k over random pairs in the ball of radius R.
LipschitzReport lipschitz_probe(const Functional& J, double R, int n_pairs, std::uint64_t seed);

/// Random field satisfying the H0 conditions for every k, scaled to H2h norm `norm`.
Field random_direction(const GridSpec& grid, Rng& rng, double norm);

}  // namespace convexify
