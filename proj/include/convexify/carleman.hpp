#pragma once

#include <iosfwd>
#include <vector>

#include "convexify/grid.hpp"

namespace convexify {

/// phi_lambda(z) = exp(-2 lambda z); throws DomainError for lambda <= 0.
double weight(double z, double lambda);

/**
 * Carleman weight on the z nodes of a grid. lambda = 0 is accepted here so
 * that the weighted functionals can be compared against their unweighted
 * versions.
 */
class CarlemanWeight {
 public:
  CarlemanWeight(const GridSpec& grid, double lambda);

  double lambda() const { return lambda_; }
  /// exp(2 lambda d), which makes balance() * min phi = 1.
  double balance() const { return balance_; }
  const std::vector<double>& node_values() const { return phi_; }

  /**
   * z-quadrature weights of the Lap_h-based forms: dz * phi at z nodes
   * 1..n_z-2 (where Lap_h lives) and 0 at the two end nodes, optionally
   * times balance().
   */
  std::vector<double> interior_quadrature(bool balanced) const;

 private:
  double lambda_;
  double balance_;
  double dz_;
  std::vector<double> phi_;
};

/// sum over interior columns of h^2 * sum_m wz[m] * |f(j,s,m,n)|^2.
double weighted_interior_sum(const Field& f, int k_index, const std::vector<double>& wz);

/// B_h(u, lambda) = sum h^2 * integral |Lap_h u|^2 phi_lambda dz; u must satisfy the H0 conditions.
double carleman_quadratic(const Field& u, double lambda);

/// Denominator of the Carleman ratio: the u_zz, lambda u_z and lambda^3 u terms weighted by phi.
double carleman_lower_terms(const Field& u, double lambda);

struct CarlemanRow {
  double lambda;
  double min_ratio;
  double lambda3_h2;  // lambda^3 h^2
};

struct CarlemanReport {
  std::vector<CarlemanRow> rows;
  /// Smallest tested lambda after which the minimum ratio no longer decreases
  /// (the last lambda when it decreases throughout).
  double lambda0 = 0.0;
};

/// Minimum of B_h / lower terms over the samples, per lambda (the list must increase).
CarlemanReport verify_carleman(const std::vector<Field>& samples, const std::vector<double>& lambdas);

void write_carleman_csv(std::ostream& os, const CarlemanReport& report);

/**
 * Random field meeting the H0 conditions: uniform random interior values
 * smoothed by two passes of a 3-point average along each axis, then zeroed on
 * the lateral columns, the top node and the two z nodes at Gamma.
 */
Field random_admissible_field(const GridSpec& grid, Rng& rng, bool with_k_axis = false);

/// Zeroes every node that is not a free H0 unknown.
void enforce_h0(Field& f);

}  // namespace convexify
