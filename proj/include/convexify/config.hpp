#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "convexify/convexifier.hpp"
#include "convexify/forward_sim.hpp"
#include "convexify/grid.hpp"
#include "convexify/reconstructor.hpp"
#include "convexify/tail_solver.hpp"

namespace convexify {

struct SolverSettings {
  double lambda = 3.0;
  double mu = 3.0;
  /// <= 0 selects the default radius 10 ||F|| + 1.
  double R = 0.0;
  double gamma = 0.1;
  int max_iter = 500;
  double grad_tol = 1e-6;
  int burn_in = 3;
  int max_halvings = 6;
  /// Derive mu and lambda from the noise level instead of using the explicit values.
  bool schedule_mode = false;
  /// Lower ends of the mu and lambda schedules (delta must stay below exp(-2(d+xi)lambda0), ...).
  double lambda0 = 0.5;
  double lambda1 = 0.5;
  StepGeometry geometry = StepGeometry::RieszDrift;
  LhForm form = LhForm::Derived;
  TailVariant tail_variant = TailVariant::Carleman;
  RecoveryFormula recovery = RecoveryFormula::WithDrift;
  /// k node at which the coefficient is recovered (0 = lowest wavenumber).
  int k_target = 0;
  int checkpoint_every = 0;
};

/**
 * Parsed run configuration. The file is INI-style with the sections
 * [grid], [scene], [noise], [solver] and [output]; unknown sections or keys
 * are rejected. Inclusions are keys `inclusion_<n>` in [scene] with values
 *
 *     box  cx cy cz hx hy hz contrast
 *     ball cx cy cz radius contrast
 */
struct RunConfig {
  GridParams grid;
  Scene scene;
  ForwardOptions forward;
  double delta = 0.0;
  std::uint64_t seed = 1;
  SolverSettings solver;
  std::filesystem::path out_dir = "out";

  GridSpec grid_spec() const { return GridSpec(grid); }
  /// mu and lambda actually used (after the schedule, if on).
  double effective_mu() const;
  double effective_lambda() const;
  InversionConfig inversion() const;
  /// Throws ConfigError when any module invariant fails.
  void validate() const;
};

RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);

/// Canonical text form; parse_config(to_text(c)) reproduces c.
std::string to_text(const RunConfig& cfg);

}  // namespace convexify
