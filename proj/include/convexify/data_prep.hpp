#pragma once

#include <span>
#include <vector>

#include "convexify/forward_sim.hpp"
#include "convexify/grid.hpp"

namespace convexify {

/// w = u / u_i and w_z on Gamma, per k.
struct WTraces {
  BoundaryTrace w;
  BoundaryTrace w_z;
};

/// w = u exp(-ikz) and w_z = (u_z - ik u) exp(-ikz) at z = -xi.
WTraces compute_w(const MeasuredBoundaryData& data);

/// w = u exp(-ikz) pointwise for a field with a k axis.
Field compute_w(const Field& u);

/// Unwrapped log w on Gamma with the integer branch offsets of each sample.
struct LogField {
  BoundaryTrace values;
  /// (Im log w - Arg w) / 2pi, same indexing as `values`.
  std::vector<int> winding;
};

/**
 * Principal log at the anchor (column (0,0), top wavenumber), then unwrapped
 * down the k axis and across columns in row-major order; each column's
 * top-k sample is referenced to (j, s-1), or to (j-1, 0) when s = 0.
 * Throws DegenerateAmplitudeError for |w| < 1e-12 and UnwrapError if any
 * two adjacent samples (in k, x or y) still differ in phase by pi or more.
 */
LogField log_unwrapped(const BoundaryTrace& w);

struct VQTraces {
  BoundaryTrace v, v_z, q, q_z;
};

/// v = log w / k^2, v_z = (w_z / w) / k^2, and their k-derivatives.
VQTraces compute_v_q(const LogField& log_w, const WTraces& w);

/// d/dk on a uniform k grid: centered inside, second-order one-sided at both ends.
std::vector<cplx> k_derivative(std::span<const cplx> f, double dk);

struct BoundaryFunctions {
  GridSpec grid;
  BoundaryTrace phi0, phi1;  // q and q_z on Gamma, per k
  BoundaryTrace psi0, psi1;  // v and v_z on Gamma at the top wavenumber
  /// max over Gamma of |q(k_max) + v(k_max) / k_max|, the gap to the tail ansatz v = p/k.
  double tail_ansatz_gap = 0.0;
};

BoundaryFunctions boundary_functions(const VQTraces& vq);

struct ExtensionPair {
  Field Q;  // no k axis
  Field F;  // k axis
  /// max |Q - psi0| and |F - phi0| on Gamma over the columns where the lateral taper is active.
  double taper_defect = 0.0;
};

/// Cubic Hermite cutoff in z: 1 with zero slope on Gamma, 0 with zero slope from
/// z = -xi + 0.3 (d + xi) on.
double z_cutoff(const GridSpec& grid, double z);
double z_cutoff_derivative(const GridSpec& grid, double z);
/// Transverse taper: 0 on the lateral faces, 1/2 one node in, 1 elsewhere.
double lateral_taper(const GridSpec& grid, int j, int s);

/**
 * Q = (psi0 + (z + xi) psi1) chi(z) kappa(x, y) and F the same per k from
 * (phi0, phi1). The fields are checked against their boundary conditions;
 * a failure throws ConstructionError naming the face.
 */
ExtensionPair build_extensions(const BoundaryFunctions& bf);

/// Volumetric v and q from a total field with a k axis, for oracle use. The
/// log is unwrapped on Gamma as in log_unwrapped and then up each column in z.
struct VolumetricVQ {
  Field log_w;
  Field v;
  Field q;
  /// v at the top wavenumber, the exact tail.
  Field tail() const { return v.k_slice(v.n_k() - 1); }
};
VolumetricVQ volumetric_v_q(const Field& u);

/// The full boundary-data chain: w, log w, v, q, boundary functions, extensions.
struct PreparedData {
  WTraces w;
  LogField log_w;
  VQTraces vq;
  BoundaryFunctions bf;
  ExtensionPair ext;
};
PreparedData prepare_data(const MeasuredBoundaryData& data);

}  // namespace convexify
