#include <cmath>
#include <sstream>

#include "doctest.h"
#include "convexify/carleman.hpp"
#include "convexify/errors.hpp"
#include "oracles.hpp"

using namespace convexify;

namespace {

GridSpec grid(int n_h, int n_z) {
  GridParams p;
  p.n_h = n_h;
  p.n_z = n_z;
  p.n_k = 5;
  return GridSpec(p);
}

}  // namespace

TEST_CASE("weight function") {
  CHECK(weight(0.0, 3.0) == 1.0);
  CHECK(weight(0.5, 3.0) == doctest::Approx(std::exp(-3.0)));
  CHECK(weight(-0.5, 2.0) == doctest::Approx(std::exp(2.0)));
  CHECK_THROWS_AS(weight(0.1, 0.0), DomainError);
  CHECK_THROWS_AS(weight(0.1, -1.0), DomainError);
}

TEST_CASE("balanced weight has unit minimum") {
  const GridSpec g = grid(5, 9);
  const CarlemanWeight cw(g, 4.0);
  double mn = INFINITY;
  for (double v : cw.node_values()) mn = std::min(mn, v * cw.balance());
  CHECK(mn == doctest::Approx(1.0));
  const auto q = cw.interior_quadrature(false);
  CHECK(q.front() == 0.0);
  CHECK(q.back() == 0.0);
  CHECK(q[3] == doctest::Approx(g.dz() * std::exp(-8.0 * g.z(3))));
}

TEST_CASE("B_h matches direct summation") {
  const GridSpec g = grid(5, 9);
  Rng rng(2);
  const Field u = random_admissible_field(g, rng);
  for (double lambda : {0.5, 3.0, 10.0})
    CHECK(oracle::rel(carleman_quadratic(u, lambda), oracle::carleman_B(u, lambda)) < 1e-12);
}

TEST_CASE("B_h demands H0 conditions") {
  const GridSpec g = grid(5, 9);
  Field u(g, false);
  u(2, 2, 1) = 1.0;
  CHECK_THROWS_AS(carleman_quadratic(u, 1.0), ContractError);
}

TEST_CASE("random admissible fields satisfy H0 and are seeded") {
  const GridSpec g = grid(7, 17);
  Rng a(5), b(5);
  const Field u = random_admissible_field(g, a, true);
  const Field v = random_admissible_field(g, b, true);
  CHECK(u.values() == v.values());
  CHECK_NOTHROW(check_h0_conditions(u));
  CHECK(norm_L2h_k(u) > 0.0);
}

TEST_CASE("enforce_h0 zeroes exactly the constrained nodes") {
  const GridSpec g = grid(5, 9);
  Field f(g, false);
  for (auto& v : f.values()) v = 1.0;
  enforce_h0(f);
  const UnknownLayout lay(g);
  for (int j = 0; j < g.n_h(); ++j)
    for (int s = 0; s < g.n_h(); ++s)
      for (int m = 0; m < g.n_z(); ++m) CHECK(f(j, s, m) == cplx(lay.is_unknown(j, s, m) ? 1.0 : 0.0));
}

TEST_CASE("Carleman ratio stays positive and the report is complete") {
  const GridSpec g = grid(7, 17);
  Rng rng(1);
  std::vector<Field> samples;
  for (int i = 0; i < 20; ++i) samples.push_back(random_admissible_field(g, rng));
  const CarlemanReport rep = verify_carleman(samples, {5.0, 10.0, 20.0});
  REQUIRE(rep.rows.size() == 3);
  for (const auto& r : rep.rows) {
    CHECK(r.min_ratio > 0.0);
    CHECK(r.lambda3_h2 == doctest::Approx(r.lambda * r.lambda * r.lambda * g.h() * g.h()));
  }
  CHECK((rep.lambda0 == 5.0 || rep.lambda0 == 10.0 || rep.lambda0 == 20.0));
  std::ostringstream os;
  write_carleman_csv(os, rep);
  CHECK(os.str().rfind("lambda,min_ratio,lambda3_h2\n", 0) == 0);
  CHECK_THROWS_AS(verify_carleman(samples, {10.0, 5.0}), DomainError);
  CHECK_THROWS_AS(verify_carleman({}, {5.0}), DomainError);
}

TEST_CASE("ratio is a direct quotient of the two forms") {
  const GridSpec g = grid(5, 9);
  Rng rng(8);
  const Field u = random_admissible_field(g, rng);
  const CarlemanReport rep = verify_carleman({u}, {7.0});
  // Lower terms by hand: u_zz, lambda u_z and lambda^3 u with central differences.
  const double lambda = 7.0;
  double lower = 0.0;
  const double h = g.h(), dz = g.dz();
  for (int j = 1; j < g.n_h() - 1; ++j)
    for (int s = 1; s < g.n_h() - 1; ++s)
      for (int m = 1; m < g.n_z() - 1; ++m) {
        const cplx a = oracle::at(u, j, s, m - 1), b = oracle::at(u, j, s, m), c = oracle::at(u, j, s, m + 1);
        const double w = h * h * dz * std::exp(-2.0 * lambda * g.z(m));
        lower += w * (std::norm((a - 2.0 * b + c) / (dz * dz)) + lambda * std::norm((c - a) / (2 * dz)) +
                      lambda * lambda * lambda * std::norm(b));
      }
  CHECK(oracle::rel(carleman_lower_terms(u, lambda), lower) < 1e-12);
  CHECK(oracle::rel(rep.rows[0].min_ratio, oracle::carleman_B(u, lambda) / lower) < 1e-12);
}
