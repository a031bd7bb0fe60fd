#include "convexify/forward_sim.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>

#include <unsupported/Eigen/IterativeSolvers>

#include "convexify/errors.hpp"
#include "convexify/field_io.hpp"

namespace convexify {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr cplx kI{0.0, 1.0};

// C2 ramp from 0 (t <= -w/2) to 1 (t >= w/2); t is the signed distance inside.
double ramp(double t, double w) {
  if (w <= 0.0) return t >= 0.0 ? 1.0 : 0.0;
  const double u = std::clamp(t / w + 0.5, 0.0, 1.0);
  return u * u * u * (10.0 - 15.0 * u + 6.0 * u * u);
}

double inclusion_profile(const Inclusion& inc, double w, double x, double y, double z) {
  const double p[3] = {x - inc.center[0], y - inc.center[1], z - inc.center[2]};
  if (inc.shape == InclusionShape::Ball) {
    const double r = std::sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]);
    return ramp(inc.half_size[0] - r, w);
  }
  double v = 1.0;
  for (int a = 0; a < 3; ++a) {
    v *= ramp(inc.half_size[a] - std::abs(p[a]), w);
    if (v == 0.0) break;
  }
  return v;
}

struct VoxelLattice {
  std::array<int, 3> dims{};
  std::array<double, 3> origin{};  // center of voxel (0,0,0)
  double size = 0.0;
  std::vector<std::array<int, 3>> index;
  std::vector<std::array<double, 3>> centers;
  std::vector<double> beta;
};

VoxelLattice voxelize(const Scene& scene, double size) {
  if (!(size > 0.0)) throw DomainError("voxel_size must be positive");
  VoxelLattice lat;
  lat.size = size;
  if (scene.empty()) return lat;
  const auto box = scene.support_box();
  for (int a = 0; a < 3; ++a) {
    const double extent = box[a + 3] - box[a];
    lat.dims[a] = std::max(1, static_cast<int>(std::ceil(extent / size - 1e-9)));
    const double mid = 0.5 * (box[a] + box[a + 3]);
    lat.origin[a] = mid - 0.5 * (lat.dims[a] - 1) * size;
  }
  for (int ix = 0; ix < lat.dims[0]; ++ix)
    for (int iy = 0; iy < lat.dims[1]; ++iy)
      for (int iz = 0; iz < lat.dims[2]; ++iz) {
        const std::array<double, 3> c{lat.origin[0] + ix * size, lat.origin[1] + iy * size,
                                      lat.origin[2] + iz * size};
        const double b = scene.beta(c[0], c[1], c[2]);
        if (b > 1e-14) {
          lat.index.push_back({ix, iy, iz});
          lat.centers.push_back(c);
          lat.beta.push_back(b);
        }
      }
  return lat;
}

// Kernel weights for every integer voxel offset, including the self cell.
class OffsetTable {
 public:
  OffsetTable(const VoxelLattice& lat, double k) : dims_(lat.dims) {
    const double vol = lat.size * lat.size * lat.size;
    const double a = std::cbrt(3.0 * vol / (4.0 * kPi));
    nx_ = 2 * dims_[0] - 1;
    ny_ = 2 * dims_[1] - 1;
    nz_ = 2 * dims_[2] - 1;
    table_.resize(static_cast<std::size_t>(nx_) * ny_ * nz_);
    for (int dx = -(dims_[0] - 1); dx < dims_[0]; ++dx)
      for (int dy = -(dims_[1] - 1); dy < dims_[1]; ++dy)
        for (int dz = -(dims_[2] - 1); dz < dims_[2]; ++dz) {
          const double r = lat.size * std::sqrt(double(dx * dx + dy * dy + dz * dz));
          cplx v;
          if (r == 0.0)
            v = ((1.0 - kI * k * a) * std::exp(kI * k * a) - 1.0) / (k * k);
          else
            v = std::exp(kI * k * r) / (4.0 * kPi * r) * vol;
          table_[slot(dx, dy, dz)] = v;
        }
  }
  cplx operator()(const std::array<int, 3>& p, const std::array<int, 3>& q) const {
    return table_[slot(p[0] - q[0], p[1] - q[1], p[2] - q[2])];
  }

 private:
  std::size_t slot(int dx, int dy, int dz) const {
    return (static_cast<std::size_t>(dx + dims_[0] - 1) * ny_ + (dy + dims_[1] - 1)) * nz_ +
           (dz + dims_[2] - 1);
  }
  std::array<int, 3> dims_;
  int nx_ = 0, ny_ = 0, nz_ = 0;
  std::vector<cplx> table_;
};

Eigen::MatrixXcd assemble(const VoxelLattice& lat, double k) {
  const int n = static_cast<int>(lat.centers.size());
  const OffsetTable table(lat, k);
  Eigen::VectorXd sqrt_beta(n);
  for (int i = 0; i < n; ++i) sqrt_beta[i] = std::sqrt(lat.beta[i]);
  Eigen::MatrixXcd a(n, n);
  const double k2 = k * k;
#pragma omp parallel for schedule(static)
  for (int col = 0; col < n; ++col)
    for (int row = 0; row < n; ++row)
      a(row, col) = (row == col ? 1.0 : 0.0) -
                    k2 * sqrt_beta[row] * table(lat.index[row], lat.index[col]) * sqrt_beta[col];
  return a;
}

}  // namespace

double Scene::beta(double x, double y, double z) const {
  double b = 0.0;
  for (const auto& inc : inclusions)
    b = std::max(b, (inc.contrast - 1.0) * inclusion_profile(inc, smoothing_width, x, y, z));
  return b;
}

bool Scene::empty() const {
  return std::none_of(inclusions.begin(), inclusions.end(),
                      [](const Inclusion& i) { return i.contrast > 1.0; });
}

std::array<double, 6> Scene::support_box() const {
  std::array<double, 6> box{1e300, 1e300, 1e300, -1e300, -1e300, -1e300};
  const double pad = 0.5 * smoothing_width;
  for (const auto& inc : inclusions) {
    if (!(inc.contrast > 1.0)) continue;
    for (int a = 0; a < 3; ++a) {
      const double half = (inc.shape == InclusionShape::Ball ? inc.half_size[0] : inc.half_size[a]) + pad;
      box[a] = std::min(box[a], inc.center[a] - half);
      box[a + 3] = std::max(box[a + 3], inc.center[a] + half);
    }
  }
  return box;
}

void Scene::validate(const GridSpec& grid) const {
  if (smoothing_width < 0.0) throw DomainError("smoothing width must be nonnegative");
  for (const auto& inc : inclusions) {
    if (!(inc.contrast >= 1.0)) throw DomainError("inclusion contrast must be >= 1");
    const int axes = inc.shape == InclusionShape::Ball ? 1 : 3;
    for (int a = 0; a < axes; ++a)
      if (!(inc.half_size[a] > 0.0)) throw DomainError("inclusion size must be positive");
  }
  if (empty()) return;
  const auto box = support_box();
  const bool inside = box[0] > -grid.b() && box[3] < grid.b() && box[1] > -grid.b() &&
                      box[4] < grid.b() && box[2] > -grid.xi() && box[5] < grid.d();
  if (!inside) throw DomainError("scene support must lie strictly inside the domain");
}

cplx ScatteringSolution::incident(double z) const { return std::exp(kI * k_ * z); }

cplx ScatteringSolution::kernel(double r) const {
  const double a = ball_radius_, k = k_;
  if (r >= a) return std::exp(kI * k * r) / (4.0 * kPi * r) * volume_;
  const cplx outer = (1.0 - kI * k * a) * std::exp(kI * k * a);
  const double sinc = r == 0.0 ? 1.0 : std::sin(k * r) / (k * r);
  return (outer * sinc - 1.0) / (k * k);
}

cplx ScatteringSolution::kernel_dr_over_r(double r) const {
  const double a = ball_radius_, k = k_;
  if (r >= a)
    return std::exp(kI * k * r) * (kI * k * r - 1.0) / (4.0 * kPi * r * r * r) * volume_;
  const cplx outer = (1.0 - kI * k * a) * std::exp(kI * k * a);
  // d/dr [sin(kr)/(kr)] / r, with its r -> 0 limit -k^2/3.
  const double kr = k * r;
  const double dsinc_over_r =
      kr < 1e-4 ? -k * k / 3.0 : (kr * std::cos(kr) - std::sin(kr)) / (k * r * r * r);
  return outer * dsinc_over_r / (k * k);
}

cplx ScatteringSolution::scattered_field(double x, double y, double z) const {
  cplx acc{};
  for (std::size_t n = 0; n < centers_.size(); ++n) {
    const double dx = x - centers_[n][0], dy = y - centers_[n][1], dz = z - centers_[n][2];
    acc += kernel(std::sqrt(dx * dx + dy * dy + dz * dz)) * source_[n];
  }
  return k_ * k_ * acc;
}

cplx ScatteringSolution::total_field(double x, double y, double z) const {
  return incident(z) + scattered_field(x, y, z);
}

cplx ScatteringSolution::total_field_dz(double x, double y, double z) const {
  cplx acc{};
  for (std::size_t n = 0; n < centers_.size(); ++n) {
    const double dx = x - centers_[n][0], dy = y - centers_[n][1], dz = z - centers_[n][2];
    acc += kernel_dr_over_r(std::sqrt(dx * dx + dy * dy + dz * dz)) * dz * source_[n];
  }
  return kI * k_ * incident(z) + k_ * k_ * acc;
}

double ScatteringSolution::extinction() const {
  cplx acc{};
  for (std::size_t n = 0; n < centers_.size(); ++n)
    acc += std::conj(incident(centers_[n][2])) * source_[n];
  return (acc * volume_).imag();
}

double ScatteringSolution::scattered_power() const {
  // Im K(r) = vol sin(kr)/(4 pi r) off the diagonal, Im K(0) from the ball integral.
  const std::size_t n = centers_.size();
  double acc = 0.0;
  for (std::size_t p = 0; p < n; ++p)
    for (std::size_t q = 0; q < n; ++q) {
      const double dx = centers_[p][0] - centers_[q][0], dy = centers_[p][1] - centers_[q][1],
                   dz = centers_[p][2] - centers_[q][2];
      const double r = std::sqrt(dx * dx + dy * dy + dz * dz);
      const double im_k = p == q ? kernel(0.0).imag() : kernel(r).imag();
      acc += (std::conj(source_[p]) * im_k * source_[q]).real();
    }
  return k_ * k_ * acc * volume_;
}

ScatteringSolution solve_scattering(const Scene& scene, double k, const ForwardOptions& opts) {
  if (!(k > 0.0)) throw DomainError("wavenumber must be positive");
  const VoxelLattice lat = voxelize(scene, opts.voxel_size);
  ScatteringSolution sol;
  sol.k_ = k;
  sol.volume_ = lat.size * lat.size * lat.size;
  sol.ball_radius_ = std::cbrt(3.0 * sol.volume_ / (4.0 * kPi));
  sol.centers_ = lat.centers;
  sol.beta_ = lat.beta;
  const int n = static_cast<int>(lat.centers.size());
  sol.u_.assign(n, cplx{});
  sol.source_.assign(n, cplx{});
  if (n == 0) return sol;

  const Eigen::MatrixXcd a = assemble(lat, k);
  Eigen::VectorXcd rhs(n);
  for (int i = 0; i < n; ++i) rhs[i] = std::sqrt(lat.beta[i]) * sol.incident(lat.centers[i][2]);

  Eigen::GMRES<Eigen::MatrixXcd, Eigen::IdentityPreconditioner> gmres;
  gmres.setTolerance(opts.tolerance);
  gmres.setMaxIterations(opts.max_iterations);
  gmres.set_restart(opts.restart);
  gmres.compute(a);
  Eigen::VectorXcd x = gmres.solve(rhs);
  const double rel = (a * x - rhs).norm() / rhs.norm();
  sol.iterations_ = static_cast<int>(gmres.iterations());
  sol.residual_ = rel;
  if (!(rel <= opts.tolerance * 1.0001)) {
    std::ostringstream os;
    os << "forward solve did not converge at k=" << k << ": relative residual " << rel << " after "
       << gmres.iterations() << " iterations";
    throw SolverError(os.str(), rel);
  }
  for (int i = 0; i < n; ++i) {
    const double sb = std::sqrt(lat.beta[i]);
    sol.u_[i] = x[i] / sb;
    sol.source_[i] = sb * x[i];
  }
  return sol;
}

Eigen::MatrixXcd assemble_system(const Scene& scene, double k, const ForwardOptions& opts) {
  if (!(k > 0.0)) throw DomainError("wavenumber must be positive");
  return assemble(voxelize(scene, opts.voxel_size), k);
}

Field sample_on_grid(const ScatteringSolution& sol, const GridSpec& grid) {
  Field u(grid, false);
  const int nh = grid.n_h(), nz = grid.n_z();
#pragma omp parallel for schedule(static)
  for (int j = 0; j < nh; ++j)
    for (int s = 0; s < nh; ++s)
      for (int m = 0; m < nz; ++m) u(j, s, m) = sol.total_field(grid.x(j), grid.y(s), grid.z(m));
  return u;
}

Field solve_forward(const Scene& scene, double k, const GridSpec& grid, const ForwardOptions& opts) {
  scene.validate(grid);
  return sample_on_grid(solve_scattering(scene, k, opts), grid);
}

MeasuredBoundaryData add_noise(const MeasuredBoundaryData& clean, double delta, std::uint64_t seed) {
  if (!(delta >= 0.0 && delta < 1.0)) throw DomainError("noise level must lie in [0, 1)");
  MeasuredBoundaryData out = clean;
  out.delta = delta;
  out.seed = seed;
  Rng rng(seed);
  const GridSpec& g = clean.grid;
  for (int n = 0; n < g.n_k(); ++n)
    for (int j = 0; j < g.n_h(); ++j)
      for (int s = 0; s < g.n_h(); ++s) {
        const cplx z0 = rng.unit_disc();
        const cplx z1 = rng.unit_disc();
        out.g0(j, s, n) *= 1.0 + delta * z0;
        out.g1(j, s, n) *= 1.0 + delta * z1;
      }
  return out;
}

SyntheticDataset synthesize_dataset(const Scene& scene, const GridSpec& grid, double delta,
                                    std::uint64_t seed, const ForwardOptions& opts,
                                    bool keep_interior) {
  if (!(delta >= 0.0 && delta < 1.0)) throw DomainError("noise level must lie in [0, 1)");
  scene.validate(grid);
  SyntheticDataset out;
  MeasuredBoundaryData& clean = out.clean;
  clean.grid = grid;
  clean.g0 = BoundaryTrace(grid, grid.n_k());
  clean.g1 = BoundaryTrace(grid, grid.n_k());
  clean.seed = seed;
  if (keep_interior) out.interior = Field(grid, true);
  const int nh = grid.n_h(), nz = grid.n_z();
  const double z0 = grid.z(0);
  double defect = 0.0;
  for (int n = 0; n < grid.n_k(); ++n) {
    const double k = grid.k(n);
    const ScatteringSolution sol = solve_scattering(scene, k, opts);
    for (int j = 0; j < nh; ++j)
      for (int s = 0; s < nh; ++s) {
        clean.g0(j, s, n) = sol.total_field(grid.x(j), grid.y(s), z0);
        clean.g1(j, s, n) = sol.total_field_dz(grid.x(j), grid.y(s), z0);
      }
    if (keep_interior) out.interior->set_k_slice(n, sample_on_grid(sol, grid));
    // Heuristic Dirichlet data exp(ikz) on the boundary away from Gamma.
    for (int j = 0; j < nh; ++j)
      for (int s = 0; s < nh; ++s) {
        const bool lateral = !grid.is_interior_column(j, s);
        for (int m = 1; m < nz; ++m) {
          if (!lateral && m != nz - 1) continue;
          const double z = grid.z(m);
          const cplx u = keep_interior ? (*out.interior)(j, s, m, n)
                                       : sol.total_field(grid.x(j), grid.y(s), z);
          defect = std::max(defect, std::abs(u - sol.incident(z)));
        }
      }
  }
  out.lateral_heuristic_defect = defect;
  out.noisy = add_noise(clean, delta, seed);
  return out;
}

double trace_norm(const BoundaryTrace& t) {
  double sum = 0.0;
  for (const auto& v : t.values()) sum += std::norm(v);
  const double h = t.grid().h();
  return std::sqrt(h * h * sum);
}

void write_dataset(std::ostream& os, const MeasuredBoundaryData& data) {
  const GridSpec& g = data.grid;
  os << "convexify-dataset 1\n"
     << "b " << format_double(g.b()) << "\n"
     << "xi " << format_double(g.xi()) << "\n"
     << "d " << format_double(g.d()) << "\n"
     << "n_h " << g.n_h() << "\n"
     << "n_z " << g.n_z() << "\n"
     << "k_min " << format_double(g.k_min()) << "\n"
     << "k_max " << format_double(g.k_max()) << "\n"
     << "n_k " << g.n_k() << "\n"
     << "delta " << format_double(data.delta) << "\n"
     << "seed " << data.seed << "\n"
     << "rows " << static_cast<long long>(g.n_h()) * g.n_h() * g.n_k() << "\n";
  for (int n = 0; n < g.n_k(); ++n)
    for (int j = 0; j < g.n_h(); ++j)
      for (int s = 0; s < g.n_h(); ++s) {
        const cplx a = data.g0(j, s, n), b = data.g1(j, s, n);
        os << j << ' ' << s << ' ' << n << ' ' << format_double(a.real()) << ' '
           << format_double(a.imag()) << ' ' << format_double(b.real()) << ' '
           << format_double(b.imag()) << '\n';
      }
}

MeasuredBoundaryData read_dataset(std::istream& is) {
  HeaderReader hdr(is, "convexify-dataset");
  const long long rows = hdr.read_until("rows");
  GridParams p;
  p.b = hdr.real("b");
  p.xi = hdr.real("xi");
  p.d = hdr.real("d");
  p.n_h = static_cast<int>(hdr.integer("n_h"));
  p.n_z = static_cast<int>(hdr.integer("n_z"));
  p.k_min = hdr.real("k_min");
  p.k_max = hdr.real("k_max");
  p.n_k = static_cast<int>(hdr.integer("n_k"));
  MeasuredBoundaryData data;
  data.grid = GridSpec(p);
  data.delta = hdr.real("delta");
  data.seed = static_cast<std::uint64_t>(hdr.integer("seed"));
  data.g0 = BoundaryTrace(data.grid, p.n_k);
  data.g1 = BoundaryTrace(data.grid, p.n_k);
  if (rows != static_cast<long long>(p.n_h) * p.n_h * p.n_k)
    throw IoError("dataset row count does not match the grid");
  std::string v[4];
  for (long long r = 0; r < rows; ++r) {
    int j, s, n;
    if (!(is >> j >> s >> n >> v[0] >> v[1] >> v[2] >> v[3])) throw IoError("truncated dataset");
    if (j < 0 || j >= p.n_h || s < 0 || s >= p.n_h || n < 0 || n >= p.n_k)
      throw IoError("dataset row index out of range");
    data.g0(j, s, n) = {parse_double(v[0]), parse_double(v[1])};
    data.g1(j, s, n) = {parse_double(v[2]), parse_double(v[3])};
  }
  return data;
}

}  // namespace convexify
