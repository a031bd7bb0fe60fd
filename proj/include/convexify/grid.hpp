#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace convexify {

using cplx = std::complex<double>;

/// Plain parameter block used to build a GridSpec.
struct GridParams {
  double b = 0.5;    ///< half-width of the transverse cross-section
  double xi = 0.5;   ///< depth of the backscatter face below the origin
  double d = 0.5;    ///< top of the domain
  int n_h = 15;      ///< transverse nodes per axis
  int n_z = 31;      ///< z nodes, node 0 on the backscatter face
  double k_min = 6.322;
  double k_max = 6.638;
  int n_k = 11;
};

/**
 * Semidiscrete computational stage.
 *
 * The domain is (-b, b)^2 x (-xi, d). Transverse nodes x_j = -b + j h with
 * h = 2b / (n_h - 1), so the columns tile [-b, b]^2 exactly. The z axis is
 * sampled uniformly from z = -xi (node 0, the face Gamma) to z = d. The
 * wavenumber interval [k_min, k_max] is sampled uniformly with n_k nodes.
 */
class GridSpec {
 public:
  GridSpec() : GridSpec(GridParams{}) {}
  explicit GridSpec(const GridParams& p);

  double b() const { return p_.b; }
  double xi() const { return p_.xi; }
  double d() const { return p_.d; }
  int n_h() const { return p_.n_h; }
  int n_z() const { return p_.n_z; }
  double k_min() const { return p_.k_min; }
  double k_max() const { return p_.k_max; }
  int n_k() const { return p_.n_k; }
  const GridParams& params() const { return p_; }

  double h() const { return 2.0 * p_.b / (p_.n_h - 1); }
  double dz() const { return (p_.d + p_.xi) / (p_.n_z - 1); }
  double dk() const { return (p_.k_max - p_.k_min) / (p_.n_k - 1); }
  double depth() const { return p_.d + p_.xi; }

  double x(int j) const { return -p_.b + j * h(); }
  double y(int s) const { return -p_.b + s * h(); }
  double z(int m) const { return -p_.xi + m * dz(); }
  double k(int n) const { return p_.k_min + n * dk(); }

  bool is_interior_column(int j, int s) const {
    return j > 0 && j < p_.n_h - 1 && s > 0 && s < p_.n_h - 1;
  }

  bool operator==(const GridSpec& o) const;
  bool operator!=(const GridSpec& o) const { return !(*this == o); }

 private:
  GridParams p_;
};

/**
 * Complex scalar field on the grid columns times the z nodes, optionally
 * carrying a wavenumber axis. Storage is z-fastest:
 * index = ((n * n_h + j) * n_h + s) * n_z + m.
 */
class Field {
 public:
  Field() = default;
  Field(const GridSpec& grid, bool with_k_axis);

  const GridSpec& grid() const { return grid_; }
  bool has_k_axis() const { return with_k_; }
  int n_k() const { return with_k_ ? grid_.n_k() : 1; }
  std::size_t size() const { return values_.size(); }
  std::size_t slice_size() const {
    return static_cast<std::size_t>(grid_.n_h()) * grid_.n_h() * grid_.n_z();
  }

  std::size_t index(int j, int s, int m, int n = 0) const {
    return ((static_cast<std::size_t>(n) * grid_.n_h() + j) * grid_.n_h() + s) * grid_.n_z() + m;
  }
  cplx& operator()(int j, int s, int m, int n = 0) { return values_[index(j, s, m, n)]; }
  const cplx& operator()(int j, int s, int m, int n = 0) const {
    return values_[index(j, s, m, n)];
  }

  std::span<cplx> column(int j, int s, int n = 0) {
    return {values_.data() + index(j, s, 0, n), static_cast<std::size_t>(grid_.n_z())};
  }
  std::span<const cplx> column(int j, int s, int n = 0) const {
    return {values_.data() + index(j, s, 0, n), static_cast<std::size_t>(grid_.n_z())};
  }
  std::span<cplx> slice(int n) { return {values_.data() + n * slice_size(), slice_size()}; }
  std::span<const cplx> slice(int n) const {
    return {values_.data() + n * slice_size(), slice_size()};
  }

  std::vector<cplx>& values() { return values_; }
  const std::vector<cplx>& values() const { return values_; }

  /// Copy of wavenumber slice n as a field without a k axis.
  Field k_slice(int n) const;
  /// Writes a k-less field into slice n.
  void set_k_slice(int n, const Field& f);

  bool all_finite() const;

  Field& operator+=(const Field& o);
  Field& operator-=(const Field& o);
  Field& operator*=(cplx a);
  friend Field operator+(Field a, const Field& b) { return a += b; }
  friend Field operator-(Field a, const Field& b) { return a -= b; }
  friend Field operator*(cplx a, Field f) { return f *= a; }
  friend Field operator*(Field f, cplx a) { return f *= a; }

 private:
  GridSpec grid_;
  bool with_k_ = false;
  std::vector<cplx> values_;
};

/// Complex trace on the face Gamma, indexed (j, s, k_index).
class BoundaryTrace {
 public:
  BoundaryTrace() = default;
  BoundaryTrace(const GridSpec& grid, int n_k);

  const GridSpec& grid() const { return grid_; }
  int n_k() const { return n_k_; }
  std::size_t index(int j, int s, int n) const {
    return (static_cast<std::size_t>(n) * grid_.n_h() + j) * grid_.n_h() + s;
  }
  cplx& operator()(int j, int s, int n = 0) { return values_[index(j, s, n)]; }
  const cplx& operator()(int j, int s, int n = 0) const { return values_[index(j, s, n)]; }
  std::vector<cplx>& values() { return values_; }
  const std::vector<cplx>& values() const { return values_; }

 private:
  GridSpec grid_;
  int n_k_ = 0;
  std::vector<cplx> values_;
};

/**
 * Maps the free unknowns of an H_0 field (interior columns, z nodes 2..n_z-2)
 * to a flat index. Node 0 is Gamma, node 1 is held at zero to enforce a
 * vanishing z-derivative on Gamma at first order, node n_z-1 is the top face.
 */
class UnknownLayout {
 public:
  explicit UnknownLayout(const GridSpec& grid);
  int size() const { return n_int_ * n_int_ * n_mz_; }
  int index(int j, int s, int m) const { return ((j - 1) * n_int_ + (s - 1)) * n_mz_ + (m - 2); }
  bool is_unknown(int j, int s, int m) const;
  int first_m() const { return 2; }
  int last_m() const { return n_z_ - 2; }

 private:
  int n_int_, n_mz_, n_z_;
};

void require_same_grid(const Field& a, const Field& b, const char* op);

/// Composite trapezoid weights for n uniformly spaced nodes.
std::vector<double> trapezoid_weights(int n, double step);

/// S_n = integral from k_n to k_max of f, by composite trapezoid; S_{n_k-1} = 0.
std::vector<cplx> reverse_cumulative_trapezoid(std::span<const cplx> f, double step);

// -- partial finite-difference operators (interior nodes only; zero elsewhere) --

Field laplacian_h(const Field& f);
std::array<Field, 3> gradient_h(const Field& f);

// -- discrete norms --

double norm_L2h(const Field& f, int k_index = 0);
double norm_H2h(const Field& f, int k_index = 0);
double norm_L2h_k(const Field& f);
double norm_H2h_k(const Field& f);

/// Throws ContractError unless f = 0 on the boundary nodes and on z node 1.
void check_h0_conditions(const Field& f, double tol = 1e-10);

/// (sum over interior columns of h^2 * integral of |Lap_h f|^2 dz)^(1/2).
double norm_H02h_equivalent(const Field& f, int k_index = 0);

/// First and second z-derivative on a single column with second-order one-sided end stencils.
void z_derivatives(std::span<const cplx> col, double dz, std::span<cplx> d1, std::span<cplx> d2);

/// Seeded generator. The engine sequence is fixed by the standard and the
/// mappings below avoid the implementation-defined std distributions, so
/// draws are bit-identical across platforms.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double normal();
  /// Uniform point on the closed unit disc in the complex plane.
  cplx unit_disc();

 private:
  std::mt19937_64 engine_;
};

}  // namespace convexify
