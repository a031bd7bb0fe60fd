#include <cmath>
#include <filesystem>
#include <sstream>

#include "doctest.h"
#include "convexify/carleman.hpp"
#include "convexify/convexifier.hpp"
#include "convexify/errors.hpp"
#include "convexify/field_io.hpp"
#include "oracles.hpp"

using namespace convexify;

namespace {

GridSpec grid(int n_h = 5, int n_z = 9, int n_k = 5) {
  GridParams p;
  p.n_h = n_h;
  p.n_z = n_z;
  p.n_k = n_k;
  return GridSpec(p);
}

Field smooth_random(const GridSpec& g, bool k_axis, double scale, std::uint64_t seed) {
  Rng rng(seed);
  Field f(g, k_axis);
  for (int n = 0; n < f.n_k(); ++n)
    for (int j = 0; j < g.n_h(); ++j)
      for (int s = 0; s < g.n_h(); ++s)
        for (int m = 0; m < g.n_z(); ++m) {
          const double x = g.x(j), y = g.y(s), z = g.z(m);
          f(j, s, m, n) = scale * cplx(std::sin(1.3 * x + 0.7 * z + 0.1 * n) + 0.2 * rng.normal(),
                                       std::cos(0.9 * y - 1.1 * z) + 0.2 * rng.normal());
        }
  return f;
}

struct Instance {
  GridSpec g;
  Field F, V;
};

Instance instance(int n_h = 5, int n_z = 9, int n_k = 5) {
  const GridSpec g = grid(n_h, n_z, n_k);
  return {g, smooth_random(g, true, 0.02, 1), smooth_random(g, false, 0.05, 2)};
}

}  // namespace

TEST_CASE("k tail integral matches the trapezoid rule written out") {
  const Instance in = instance();
  const Field S = k_tail_integral(in.F);
  for (int n = 0; n < in.g.n_k(); ++n)
    CHECK(std::abs(S(2, 1, 4, n) - oracle::k_integral(in.F, 2, 1, 4, n)) < 1e-15);
  CHECK(S(2, 1, 4, in.g.n_k() - 1) == cplx(0.0));
}

TEST_CASE("L_h matches direct evaluation") {
  const Instance in = instance();
  const Field L = lh_residual(in.F, in.V);
  for (int n = 0; n < in.g.n_k(); ++n)
    for (int j = 0; j < in.g.n_h(); ++j)
      for (int s = 0; s < in.g.n_h(); ++s)
        for (int m = 0; m < in.g.n_z(); ++m) {
          const cplx ref = oracle::L(in.F, in.V, j, s, m, n);
          CHECK(std::abs(L(j, s, m, n) - ref) <= 1e-12 * std::max(1.0, std::abs(ref)));
        }
}

TEST_CASE("printed form differs by 2k (k - 1) A . grad V") {
  const Instance in = instance();
  const Field Ld = lh_residual(in.F, in.V, LhForm::Derived);
  const Field Lp = lh_residual(in.F, in.V, LhForm::AsPrinted);
  const Field S = k_tail_integral(in.F);
  const int j = 2, s = 2, m = 4, n = 1;
  const double k = in.g.k(n);
  cplx dot = 0.0;
  for (int a = 0; a < 3; ++a) {
    const cplx gv = oracle::grad(in.V, a, j, s, m);
    dot += (gv - oracle::grad(S, a, j, s, m, n)) * (k - 1.0) * gv;
  }
  CHECK(std::abs((Lp(j, s, m, n) - Ld(j, s, m, n)) - 2.0 * k * dot) < 1e-12);
}

TEST_CASE("J_lambda matches direct summation") {
  const Instance in = instance();
  Rng rng(3);
  const Field p = random_direction(in.g, rng, 0.3);
  for (double lambda : {0.0, 3.0, 6.0}) {
    const Functional J(in.F, in.V, lambda);
    CHECK(oracle::rel(J.value(p), oracle::J(p, in.F, in.V, lambda)) < 1e-12);
  }
  InversionConfig cfg;
  cfg.lambda = 3.0;
  CHECK(oracle::rel(evaluate_J(p, cfg, in.F, in.V), oracle::J(p, in.F, in.V, 3.0)) < 1e-12);
}

TEST_CASE("gradient agrees with central differences") {
  const Instance in = instance();
  Rng rng(4);
  const Field p = random_direction(in.g, rng, 0.5);
  for (LhForm form : {LhForm::Derived, LhForm::AsPrinted}) {
    const Functional J(in.F, in.V, 3.0, form);
    const GradientCheckReport rep = gradient_check(J, p, 10, 7);
    CHECK(rep.directions == 10);
    CHECK(rep.max_relative_error < 1e-6);
  }
}

TEST_CASE("gradient vanishes off the free nodes") {
  const Instance in = instance();
  InversionConfig cfg;
  const Field G = gradient_J(Field(in.g, true), cfg, in.F, in.V);
  CHECK_NOTHROW(check_h0_conditions(G, 0.0));
  CHECK(norm_L2h_k(G) > 0.0);
}

TEST_CASE("value_and_gradient is consistent with the separate calls") {
  const Instance in = instance();
  const Functional J(in.F, in.V, 2.0);
  Rng rng(6);
  const Field p = random_direction(in.g, rng, 0.2);
  Field g;
  const double v = J.value_and_gradient(p, g);
  CHECK(v == J.value(p));
  CHECK(g.values() == J.gradient(p).values());
}

TEST_CASE("Riesz maps represent the gradient in their weighted inner products") {
  const Instance in = instance(5, 11, 5);
  const double lambda = 3.0;
  const Functional J(in.F, in.V, lambda);
  Rng rng(8);
  const Field G = J.gradient(random_direction(in.g, rng, 0.2));
  const auto wk = trapezoid_weights(in.g.n_k(), in.g.dk());
  const CarlemanWeight cw(in.g, lambda);
  const auto wz = cw.interior_quadrature(true);
  const double k_mid = 0.5 * (in.g.k_min() + in.g.k_max());
  for (bool drift : {false, true}) {
    const Field gr = RieszMap(in.g, lambda, drift).apply(G);
    CHECK_NOTHROW(check_h0_conditions(gr, 0.0));
    // Lap_h, plus 2i k_mid times the central z difference for the drift variant.
    auto op = [&](const Field& f, int j, int s, int m, int n) {
      cplx v = oracle::lap(f, j, s, m, n);
      if (drift) v += cplx(0.0, 2.0 * k_mid) * oracle::grad(f, 2, j, s, m, n);
      return v;
    };
    for (int i = 0; i < 3; ++i) {
      const Field r = random_direction(in.g, rng, 1.0);
      double inner = 0.0;
      for (int n = 0; n < in.g.n_k(); ++n)
        for (int j = 1; j < in.g.n_h() - 1; ++j)
          for (int s = 1; s < in.g.n_h() - 1; ++s)
            for (int m = 1; m < in.g.n_z() - 1; ++m)
              inner += 2.0 * wk[n] * in.g.h() * in.g.h() * wz[m] *
                       std::real(std::conj(op(gr, j, s, m, n)) * op(r, j, s, m, n));
      CHECK(oracle::rel(inner, real_pairing(G, r)) < 1e-9);
    }
  }
}

TEST_CASE("projection onto the ball") {
  const GridSpec g = grid();
  Rng rng(1);
  const Field p = random_direction(g, rng, 5.0);
  CHECK(norm_H2h_k(project_ball(p, 2.0)) == doctest::Approx(2.0));
  CHECK(project_ball(p, 10.0).values() == p.values());
}

TEST_CASE("convexity ratio is positive on a small instance") {
  const Instance in = instance();
  const Functional J(in.F, in.V, 3.0);
  const ConvexityReport rep = convexity_probe(J, 1.0, 10, 2);
  CHECK(rep.pairs == 10);
  CHECK(rep.min_ratio > 0.0);
  CHECK(rep.max_ratio >= rep.min_ratio);
}

TEST_CASE("Lipschitz probe reports finite ratios") {
  const Instance in = instance();
  const Functional J(in.F, in.V, 3.0);
  const LipschitzReport rep = lipschitz_probe(J, 1.0, 10, 3);
  CHECK(rep.pairs == 10);
  CHECK(std::isfinite(rep.max_ratio));
  CHECK(rep.min_ratio <= rep.median_ratio);
  CHECK(rep.median_ratio <= rep.max_ratio);
}

TEST_CASE("gradient projection decreases J monotonically and converges") {
  const Instance in = instance();
  InversionConfig cfg;
  cfg.gamma = 0.5;
  cfg.max_iter = 2000;
  cfg.grad_tol = 1e-8;
  const IterateState st = gradient_projection(Field(in.g, true), cfg, in.F, in.V);
  CHECK(st.converged);
  for (std::size_t i = 1 + cfg.burn_in; i < st.history.size(); ++i)
    CHECK(st.history[i].J <= st.history[i - 1].J);
  CHECK(st.J < st.history.front().J);
  std::ostringstream os;
  write_iteration_log(os, st);
  CHECK(os.str().rfind("n,J,grad_norm,step_norm,projected,gamma\n", 0) == 0);
}

TEST_CASE("plain Riesz and coefficient geometries also descend") {
  const Instance in = instance();
  InversionConfig cfg;
  cfg.geometry = StepGeometry::Coefficient;
  // Raw coefficient steps are scaled by the stiff fourth-order operator.
  cfg.gamma = 1e-5;
  cfg.max_iter = 20;
  const IterateState st = gradient_projection(Field(in.g, true), cfg, in.F, in.V);
  CHECK(st.J < st.history.front().J);
  cfg.geometry = StepGeometry::Riesz;
  cfg.gamma = 0.5;
  const IterateState sr = gradient_projection(Field(in.g, true), cfg, in.F, in.V);
  CHECK(sr.J < sr.history.front().J);
}

TEST_CASE("starting point outside the ball is rejected") {
  const Instance in = instance();
  InversionConfig cfg;
  cfg.R = 0.1;
  Rng rng(1);
  CHECK_THROWS_AS(gradient_projection(random_direction(in.g, rng, 1.0), cfg, in.F, in.V), ContractError);
}

TEST_CASE("projection binds for a small radius") {
  const Instance in = instance();
  InversionConfig cfg;
  cfg.R = 1e-4;
  cfg.gamma = 0.5;
  cfg.max_iter = 5;
  const IterateState st = gradient_projection(Field(in.g, true), cfg, in.F, in.V);
  CHECK(st.projection_active);
  CHECK(norm_H2h_k(st.p) <= 1e-4 * (1.0 + 1e-12));
}

TEST_CASE("checkpoints are written every N iterations") {
  const Instance in = instance();
  const auto dir = std::filesystem::temp_directory_path() / "convexify_ckpt_test";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  InversionConfig cfg;
  cfg.gamma = 0.5;
  cfg.max_iter = 6;
  cfg.grad_tol = 1e-30;
  cfg.checkpoint_every = 3;
  cfg.checkpoint_dir = dir;
  const IterateState st = gradient_projection(Field(in.g, true), cfg, in.F, in.V);
  CHECK(std::filesystem::exists(dir / "checkpoint_3.field"));
  CHECK(std::filesystem::exists(dir / "checkpoint_6.field"));
  CHECK_FALSE(std::filesystem::exists(dir / "checkpoint_4.field"));
  const FieldFile f = read_field_file(dir / "checkpoint_6.field");
  CHECK(f.field.values() == st.p.values());
  std::filesystem::remove_all(dir);
}

TEST_CASE("ascent after every halving raises a divergence error") {
  const Instance in = instance();
  InversionConfig cfg;
  cfg.geometry = StepGeometry::Coefficient;
  cfg.gamma = 0.99;
  cfg.burn_in = 0;
  cfg.max_halvings = 0;
  cfg.max_iter = 50;
  // A large F makes the raw coefficient step of 0.99 overshoot.
  Field F = in.F * cplx(50.0);
  try {
    gradient_projection(Field(in.g, true), cfg, F, in.V);
    FAIL("expected DivergenceError");
  } catch (const DivergenceError& e) {
    CHECK(e.j_history().size() >= 2);
    CHECK(e.j_history().back() > e.j_history()[e.j_history().size() - 2]);
  }
}

TEST_CASE("config validation and lambda schedule") {
  InversionConfig cfg;
  cfg.gamma = 1.5;
  CHECK_THROWS_AS(cfg.validate(), DomainError);
  cfg = {};
  cfg.max_iter = 0;
  CHECK_THROWS_AS(cfg.validate(), DomainError);
  CHECK(choose_lambda(1e-2, 0.5, 0.5, 0.5) == doctest::Approx(-std::log(1e-2) / 4.0));
  CHECK_THROWS_AS(choose_lambda(0.5, 0.5, 0.5, 0.5), ScheduleError);
}
