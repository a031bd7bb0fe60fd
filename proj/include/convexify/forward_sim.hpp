#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "convexify/grid.hpp"

namespace convexify {

enum class InclusionShape { Box, Ball };

struct Inclusion {
  InclusionShape shape = InclusionShape::Box;
  std::array<double, 3> center{0.0, 0.0, 0.0};
  /// Box half-extents; for a ball only half_size[0] (the radius) is used.
  std::array<double, 3> half_size{0.1, 0.1, 0.1};
  /// Coefficient value c inside the inclusion, >= 1.
  double contrast = 1.0;
};

/// Dielectric scene: c = 1 + beta, beta >= 0, with mollified inclusion edges.
struct Scene {
  std::vector<Inclusion> inclusions;
  /// Width over which an inclusion edge ramps from 0 to full contrast.
  double smoothing_width = 0.0;

  double beta(double x, double y, double z) const;
  double coefficient(double x, double y, double z) const { return 1.0 + beta(x, y, z); }
  bool empty() const;
  /// Axis-aligned box {lo_x, lo_y, lo_z, hi_x, hi_y, hi_z} containing supp(beta).
  std::array<double, 6> support_box() const;
  /// Throws DomainError unless contrasts are >= 1 and supp(beta) lies inside the open domain.
  void validate(const GridSpec& grid) const;
};

struct ForwardOptions {
  /// Edge length of the cubic voxels that discretize supp(beta).
  double voxel_size = 0.025;
  double tolerance = 1e-8;
  int max_iterations = 3000;
  int restart = 100;
};

/**
 * Solution of u = u_i + k^2 * integral G_k(x - y) beta(y) u(y) dy on the
 * voxelized support of beta, with u_i = exp(i k z) and
 * G_k(r) = exp(i k r) / (4 pi r). The self cell integrates G_k over the ball
 * of equal volume; the same ball potential is used when an observation
 * point falls inside a voxel's ball.
 */
class ScatteringSolution {
 public:
  ScatteringSolution() = default;

  double k() const { return k_; }
  int voxel_count() const { return static_cast<int>(centers_.size()); }
  int iterations() const { return iterations_; }
  double residual() const { return residual_; }

  cplx incident(double z) const;
  cplx scattered_field(double x, double y, double z) const;
  cplx total_field(double x, double y, double z) const;
  /// z-derivative of the total field, differentiated analytically through the kernel.
  cplx total_field_dz(double x, double y, double z) const;

  const std::vector<std::array<double, 3>>& voxel_centers() const { return centers_; }
  const std::vector<double>& voxel_beta() const { return beta_; }
  /// Total field at the voxel centers.
  const std::vector<cplx>& voxel_field() const { return u_; }
  double voxel_volume() const { return volume_; }

  /// Im sum_n beta_n conj(u_i) u_n vol; nonnegative for lossless scatterers.
  double extinction() const;
  /// k^2 f^H Im(K) f with f = beta u vol; equals extinction() up to solver tolerance.
  double scattered_power() const;

 private:
  friend ScatteringSolution solve_scattering(const Scene&, double, const ForwardOptions&);
  cplx kernel(double r) const;
  /// dK/dr divided by r, finite at r = 0.
  cplx kernel_dr_over_r(double r) const;

  double k_ = 0.0;
  double volume_ = 0.0;
  double ball_radius_ = 0.0;
  int iterations_ = 0;
  double residual_ = 0.0;
  std::vector<std::array<double, 3>> centers_;
  std::vector<double> beta_;
  std::vector<cplx> u_;
  std::vector<cplx> source_;  // beta_n * u_n
};

ScatteringSolution solve_scattering(const Scene& scene, double k, const ForwardOptions& opts = {});

/**
 * Dense system I - k^2 B^{1/2} K B^{1/2} in the unknowns B^{1/2} u, where K
 * holds the discretized Green kernel and B = diag(beta). It is complex
 * symmetric. Exposed for small-instance checks.
 */
Eigen::MatrixXcd assemble_system(const Scene& scene, double k, const ForwardOptions& opts = {});

/// Total field u on every node of the grid at wavenumber k.
Field solve_forward(const Scene& scene, double k, const GridSpec& grid,
                    const ForwardOptions& opts = {});

/// Total field sampled on the grid from an existing solution.
Field sample_on_grid(const ScatteringSolution& sol, const GridSpec& grid);

/// Multi-frequency backscatter traces u|Gamma and u_z|Gamma.
struct MeasuredBoundaryData {
  GridSpec grid;
  BoundaryTrace g0;
  BoundaryTrace g1;
  double delta = 0.0;
  std::uint64_t seed = 0;
};

struct SyntheticDataset {
  MeasuredBoundaryData noisy;
  MeasuredBoundaryData clean;
  /// max |u - exp(ikz)| over the nodes of the boundary outside Gamma, all k.
  double lateral_heuristic_defect = 0.0;
  /// Total field on every grid node and k (only when requested).
  std::optional<Field> interior;
};

/**
 * Solves the forward problem at every k node and records the traces on
 * Gamma, each sample multiplied by (1 + delta * zeta) with zeta uniform on
 * the unit disc. The noise stream is a pure function of `seed`.
 */
SyntheticDataset synthesize_dataset(const Scene& scene, const GridSpec& grid, double delta,
                                    std::uint64_t seed, const ForwardOptions& opts = {},
                                    bool keep_interior = false);

/// Applies the multiplicative noise model to clean traces.
MeasuredBoundaryData add_noise(const MeasuredBoundaryData& clean, double delta, std::uint64_t seed);

/// Discrete L2 norm on Gamma over all k (h^2 * sum |g|^2)^(1/2).
double trace_norm(const BoundaryTrace& t);

/**
 * Dataset file:
 *
 *     convexify-dataset 1
 *     b, xi, d, n_h, n_z, k_min, k_max, n_k, delta, seed   (one "key value" per line)
 *     rows <count>
 *     j s k_index g0_re g0_im g1_re g1_im
 */
void write_dataset(std::ostream& os, const MeasuredBoundaryData& data);
MeasuredBoundaryData read_dataset(std::istream& is);

}  // namespace convexify
