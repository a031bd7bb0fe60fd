#pragma once

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

#include "convexify/grid.hpp"

namespace convexify {

/// v(., k_n) = -integral from k_n to k_max of (p + F) + V.
Field recover_v(const Field& p_min, const Field& F, const Field& V, int k_index);

enum class RecoveryFormula {
  /// beta = -(Lap v + k^2 grad v . grad v + 2ik v_z)
  WithDrift,
  /// c = -(Lap v + k^2 grad v . grad v), the form without the 2ik v_z term.
  WithoutDrift,
};

struct ReconstructionResult {
  /// Real coefficient field (stored as complex with zero imaginary part).
  Field c;
  double c_comp = 1.0;
  std::array<int, 3> location_index{0, 0, 0};
  std::array<double, 3> location{0.0, 0.0, 0.0};
  /// ||Im beta_raw||_L2h, discarded by the truncation.
  double imag_norm = 0.0;
  double k = 0.0;
};

/// Raw beta at interior nodes, zero elsewhere.
Field raw_beta(const Field& v, double k, RecoveryFormula formula = RecoveryFormula::WithDrift);

/// c = 1 + max(Re beta, 0), one 3-point average per axis, boundary nodes 1, and the maximizer.
ReconstructionResult recover_c(const Field& v, double k,
                               RecoveryFormula formula = RecoveryFormula::WithDrift);

/// Builds the truncated, smoothed coefficient from a raw beta field.
ReconstructionResult coefficient_from_beta(const Field& beta, double k);

/// |c_comp - c_ref| / c_ref * 100.
double eps_comp(double c_comp, double c_ref);

struct ReferenceTarget {
  std::string name;
  double c_ref;
  std::array<double, 3> location;
};

/// CSV analogs of the contrast table (name, c_ref, c_comp, eps_comp) and the location table.
void report_tables(std::ostream& table3, std::ostream& table4,
                   const std::vector<ReconstructionResult>& results,
                   const std::vector<ReferenceTarget>& references);

}  // namespace convexify
