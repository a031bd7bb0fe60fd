#include <string>

#include "doctest.h"
#include "convexify/config.hpp"
#include "convexify/errors.hpp"

using namespace convexify;

TEST_CASE("a full config parses") {
  const RunConfig c = parse_config(R"(
[grid]
n_h = 9
n_z = 17
n_k = 5
k_min = 6.0
k_max = 6.5

[scene]
inclusion_1 = box 0 0 0.1 0.1 0.1 0.1 3
inclusion_2 = ball 0.2 -0.2 -0.1 0.05 2
smoothing_width = 0.04
voxel_size = 0.03

[noise]
delta = 0.05
seed = 42

[solver]
lambda = 4
gamma = 0.2
geometry = coefficient
form = printed
tail_variant = dirichlet
recovery = no_drift
schedule_mode = off

[output]
dir = somewhere
)");
  CHECK(c.grid.n_h == 9);
  CHECK(c.grid.k_max == 6.5);
  REQUIRE(c.scene.inclusions.size() == 2);
  CHECK(c.scene.inclusions[0].shape == InclusionShape::Box);
  CHECK(c.scene.inclusions[0].center[2] == 0.1);
  CHECK(c.scene.inclusions[1].shape == InclusionShape::Ball);
  CHECK(c.scene.inclusions[1].contrast == 2.0);
  CHECK(c.forward.voxel_size == 0.03);
  CHECK(c.delta == 0.05);
  CHECK(c.seed == 42);
  CHECK(c.solver.lambda == 4.0);
  CHECK(c.solver.geometry == StepGeometry::Coefficient);
  CHECK(c.solver.form == LhForm::AsPrinted);
  CHECK(c.solver.tail_variant == TailVariant::DirichletLaplace);
  CHECK(c.solver.recovery == RecoveryFormula::WithoutDrift);
  CHECK(c.out_dir == "somewhere");
  CHECK(c.effective_lambda() == 4.0);
}

TEST_CASE("empty text gives the defaults") {
  const RunConfig c = parse_config("");
  CHECK(c.grid.n_h == 15);
  CHECK(c.grid.n_z == 31);
  CHECK(c.grid.n_k == 11);
  CHECK(c.scene.inclusions.empty());
  CHECK(c.solver.lambda == 3.0);
  CHECK(c.solver.mu == 3.0);
}

TEST_CASE("unknown keys and sections are rejected") {
  CHECK_THROWS_AS(parse_config("[grid]\nnh = 5\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[gird]\nn_h = 5\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[solver]\ngeometry = spectral\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[solver]\nlambda = three\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[scene]\ninclusion_1 = box 0 0 0 0.1 0.1 3\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[scene]\ninclusion_1 = cone 0 0 0 0.1 3\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[grid\nn_h = 5\n"), ConfigError);
}

TEST_CASE("module invariants surface as config errors") {
  CHECK_THROWS_AS(parse_config("[grid]\nn_h = 2\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[solver]\ngamma = 2\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[noise]\ndelta = 1.5\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[scene]\ninclusion_1 = ball 0.45 0 0 0.1 2\n"), ConfigError);
}

TEST_CASE("spacing h is converted to n_h") {
  CHECK(parse_config("[grid]\nh = 0.125\n").grid.n_h == 9);
  CHECK_THROWS_AS(parse_config("[grid]\nh = 0.3\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[grid]\nh = 0.125\nn_h = 7\n"), ConfigError);
  CHECK(parse_config("[grid]\nh = 0.125\nn_h = 9\n").grid.n_h == 9);
}

TEST_CASE("schedule mode derives mu and lambda from delta") {
  const RunConfig c = parse_config("[noise]\ndelta = 0.01\n[solver]\nschedule_mode = on\n");
  CHECK(c.effective_mu() == doctest::Approx(choose_mu(0.01, 0.5, 0.5, 0.5)));
  CHECK(c.effective_lambda() == doctest::Approx(choose_lambda(0.01, 0.5, 0.5, 0.5)));
  CHECK_THROWS_AS(parse_config("[noise]\ndelta = 0\n[solver]\nschedule_mode = on\n"), ConfigError);
}

TEST_CASE("canonical text round trips") {
  const RunConfig a = parse_config(
      "[scene]\ninclusion_1 = box 0 0.05 0.1 0.1 0.12 0.1 4.5\nsmoothing_width = 0.05\n"
      "[noise]\ndelta = 0.03\nseed = 9\n[solver]\nR = 12.5\nrecovery = no_drift\n");
  const std::string t = to_text(a);
  const RunConfig b = parse_config(t);
  CHECK(to_text(b) == t);
  CHECK(b.scene.inclusions[0].half_size[1] == 0.12);
  CHECK(b.solver.R == 12.5);
  CHECK(b.seed == 9);
}
