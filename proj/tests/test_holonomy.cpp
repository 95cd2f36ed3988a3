#include <cmath>

#include "doctest.h"
#include "holo_gen.hpp"
#include "lamina/holonomy.hpp"

using namespace lamina;

namespace {

const Rational kEps(1, 1000000000000L);  // 1e-12
const double kResidual = 1e-9;

Rational Q(long a, long b) {
  Rational r(a, b);
  r.canonicalize();
  return r;
}

double ev(const HoloMap& f, const Rational& z) { return to_double(evaluate(f, z, kEps)); }

std::vector<Rational> samples(std::mt19937_64& rng, int n) {
  std::vector<Rational> out{Rational(-1), Rational(0), Rational(1), Rational(1, 3), Rational(-1, 3)};
  std::uniform_int_distribution<long> d(-1000000, 1000000);
  while (static_cast<int>(out.size()) < n) out.push_back(Rational(d(rng), 1000000));
  for (auto& r : out) r.canonicalize();
  return out;
}

// Affine block coordinates, written out independently of the library.
Rational to_local(const Rational& z, const Rational& a, const Rational& b) { return (2 * z - a - b) / (b - a); }
Rational from_local(const Rational& t, const Rational& a, const Rational& b) { return a + (t + 1) * (b - a) / 2; }

}  // namespace

TEST_CASE("construction rejects invalid maps") {
  CHECK_THROWS_AS(HoloMap::pl({-1, 0, 1}, {-1, 1, 1}), HoloError);
  CHECK_THROWS_AS(HoloMap::pl({-1, 1}, {-1, Rational(1, 2)}), HoloError);
  CHECK_THROWS_AS(HoloMap::pl({-1, Rational(1, 2), 0, 1}, {-1, 0, Rational(1, 2), 1}), HoloError);
  CHECK_THROWS_AS(concatenate({HoloMap()}, Partition::uniform(2)), HoloError);
}

TEST_CASE("group operations on exact maps") {
  const HoloMap f = standard_push();
  CHECK(apply_exact(invert(f), Rational(1, 2)) == 0);
  std::mt19937_64 rng(1);
  for (int i = 0; i < 50; ++i) {
    const HoloMap a = holo_gen::random_pl(rng), b = holo_gen::random_pl(rng), c = holo_gen::random_pl(rng);
    CHECK(compose(HoloMap(), a).is_exact());
    CHECK(same_function(compose(HoloMap(), a), a));
    CHECK(same_function(compose(compose(a, b), c), compose(a, compose(b, c))));
    CHECK(same_function(compose(a, invert(a)), HoloMap()));
    CHECK(same_function(commutator(a, a), HoloMap()));
    CHECK(same_function(simplify(compose(a, b)), compose(a, b)));
    // composition value at breakpoints and midpoints
    const HoloMap ab = compose(a, b);
    for (std::size_t k = 0; k + 1 < ab.xs().size(); ++k) {
      const Rational mid = (ab.xs()[k] + ab.xs()[k + 1]) / 2;
      CHECK(apply_exact(ab, mid) == apply_exact(a, apply_exact(b, mid)));
    }
  }
}

TEST_CASE("pl_max and diagonal_sign") {
  const HoloMap f = standard_push();
  CHECK(diagonal_sign(f) == 1);
  CHECK(diagonal_sign(invert(f)) == -1);
  Rational w;
  CHECK(diagonal_sign(HoloMap(), &w) == 0);
  const HoloMap m = pl_max(invert(f), HoloMap());
  CHECK(same_function(m, HoloMap()));
  std::mt19937_64 rng(2);
  for (int i = 0; i < 50; ++i) {
    const HoloMap a = holo_gen::random_pl(rng), b = holo_gen::random_pl(rng);
    const HoloMap mx = pl_max(a, b);
    for (int k = -20; k <= 20; ++k) {
      const Rational z = Q(k, 20);
      const Rational ya = apply_exact(a, z), yb = apply_exact(b, z);
      CHECK(apply_exact(mx, z) == (ya < yb ? yb : ya));
    }
  }
}

TEST_CASE("concatenate") {
  std::mt19937_64 rng(3);
  const HoloMap f = holo_gen::random_pl(rng), h = holo_gen::random_pl(rng);
  CHECK(same_function(concatenate({f}, Partition::uniform(1)), f));
  const HoloMap fh = concatenate({f, h}, Partition::uniform(2));
  CHECK(apply_exact(fh, 0) == 0);
  CHECK(same_function(concatenate({HoloMap(), HoloMap(), HoloMap()}, Partition{{-1, Rational(-1, 5), Rational(2, 3), 1}}),
                      HoloMap()));
  for (int k = -10; k <= 10; ++k) {
    const Rational z = Q(k, 10);
    const Rational want = z <= 0 ? from_local(apply_exact(f, to_local(z, -1, 0)), -1, 0)
                                 : from_local(apply_exact(h, to_local(z, 0, 1)), 0, 1);
    CHECK(apply_exact(fh, z) == want);
  }
}

TEST_CASE("conjugacy witness") {
  std::mt19937_64 rng(4);
  SUBCASE("f = p gives the identity on the fundamental domain") {
    const HoloMap f = holo_gen::random_above(rng);
    const HoloMap q = conjugacy_witness(f, f);
    const Rational f0 = apply_exact(f, 0);
    for (int k = 0; k <= 10; ++k) {
      const Rational z = f0 * Q(k, 10);
      CHECK(evaluate(q, z, kEps) == z);
    }
    for (const auto& z : samples(rng, 100)) CHECK(std::abs(ev(q, apply_exact(f, z)) - to_double(apply_exact(f, evaluate(q, z, kEps)))) <= kResidual);
  }
  SUBCASE("pair through (0, 1/2) and (-1/2, 1/4)") {
    const HoloMap f = standard_push();
    const HoloMap p = HoloMap::pl({-1, Rational(-1, 2), 1}, {-1, Rational(1, 4), 1});
    const HoloMap q = conjugacy_witness(f, p);
    for (const auto& z : samples(rng, 200))
      CHECK(std::abs(ev(q, apply_exact(f, z)) - to_double(apply_exact(p, evaluate(q, z, kEps)))) <= kResidual);
  }
  SUBCASE("random pairs, above and below") {
    for (int i = 0; i < 20; ++i) {
      HoloMap f = holo_gen::random_above(rng), p = holo_gen::random_above(rng);
      if (i % 2) {
        f = invert(f);
        p = invert(p);
      }
      const HoloMap q = conjugacy_witness(f, p);
      EvalStats st;
      for (const auto& z : samples(rng, 60)) {
        const double lhs = to_double(evaluate(q, apply_exact(f, z), kEps, &st));
        const double rhs = to_double(apply_exact(p, evaluate(q, z, kEps)));
        CHECK(std::abs(lhs - rhs) <= kResidual);
      }
      // q is affine from [0, f(0)] onto [0, p(0)]
      const Rational f0 = apply_exact(f, 0), p0 = apply_exact(p, 0);
      CHECK(evaluate(q, f0 / 2, kEps) == p0 / 2);
    }
  }
  SUBCASE("precondition violations carry a witness") {
    const HoloMap f = invert(standard_push());
    try {
      conjugacy_witness(f, standard_push());
      FAIL("accepted");
    } catch (const HoloError& e) {
      CHECK(std::string(e.what()).find("f(z) <= z at z = 0") != std::string::npos);
      CHECK(apply_exact(f, 0) <= 0);
    }
    CHECK_THROWS_AS(conjugacy_witness(HoloMap(), standard_push()), HoloError);
  }
}

TEST_CASE("commutator factorization") {
  std::mt19937_64 rng(5);
  SUBCASE("identity") {
    const auto [g, h] = commutator_factorization(HoloMap());
    CHECK(same_function(commutator(g, h), HoloMap()));
  }
  auto verify = [&](const HoloMap& f, int n) {
    const auto [g, h] = commutator_factorization(f);
    // The word as one enclosure; chaining rounded steps through g^-1 is
    // ill-conditioned where the witness squeezes against an endpoint.
    const HoloMap word = compose(g, compose(h, compose(invert(g), invert(h))));
    for (const auto& z : samples(rng, n)) {
      CHECK(std::abs(ev(word, z) - to_double(apply_exact(f, z))) <= kResidual);
      CHECK(std::abs(ev(commutator(g, h), z) - to_double(apply_exact(f, z))) <= kResidual);
    }
  };
  SUBCASE("above-diagonal two-piece map") { verify(standard_push(), 200); }
  SUBCASE("interior fixed point at 0") {
    const HoloMap f = concatenate({standard_push(), invert(standard_push())}, Partition::uniform(2));
    CHECK(apply_exact(f, 0) == 0);
    CHECK(apply_exact(f, Rational(-1, 2)) > Rational(-1, 2));
    CHECK(apply_exact(f, Rational(1, 2)) < Rational(1, 2));
    verify(f, 200);
  }
  SUBCASE("random maps with 0..3 interior fixed points") {
    for (std::size_t k = 0; k <= 3; ++k)
      for (int i = 0; i < 3; ++i) verify(holo_gen::random_with_fixed_points(rng, k), 30);
  }
}

TEST_CASE("genus factorization") {
  CHECK_THROWS_AS(genus_factorization(HoloMap(), 0), HoloError);
  const auto ids = genus_factorization(HoloMap(), 3);
  REQUIRE(ids.size() == 3);
  for (const auto& [a, b] : ids) CHECK(same_function(commutator(a, b), HoloMap()));
  std::mt19937_64 rng(6);
  const HoloMap f = holo_gen::random_with_fixed_points(rng, 1);
  const auto pairs = genus_factorization(f, 2);
  HoloMap prod = HoloMap();
  for (const auto& [a, b] : pairs) prod = compose(prod, commutator(a, b));
  for (const auto& z : samples(rng, 100)) CHECK(std::abs(ev(prod, z) - to_double(apply_exact(f, z))) <= kResidual);
}

TEST_CASE("solve_concatenation_i") {
  std::mt19937_64 rng(7);
  SUBCASE("identity inputs give the identity exactly") {
    const auto s = solve_concatenation_i(HoloMap(), HoloMap());
    CHECK(s.g.is_exact());
    CHECK(same_function(s.g, HoloMap()));
  }
  SUBCASE("relation residual") {
    for (int i = 0; i < 10; ++i) {
      const HoloMap f = holo_gen::random_above(rng), h = holo_gen::random_above(rng);
      const auto s = solve_concatenation_i(f, h);
      REQUIRE(s.partition.cuts == std::vector<Rational>{-1, Rational(-1, 3), Rational(1, 3), 1});
      for (const auto& z : samples(rng, 40)) {
        // the right-hand side assembled block by block
        const auto& c = s.partition.cuts;
        double rhs;
        if (z <= c[1]) rhs = to_double(from_local(apply_exact(f, to_local(z, c[0], c[1])), c[0], c[1]));
        else if (z <= c[2]) rhs = to_double(from_local(evaluate(s.g, to_local(z, c[1], c[2]), kEps), c[1], c[2]));
        else rhs = to_double(from_local(apply_exact(h, to_local(z, c[2], c[3])), c[2], c[3]));
        CHECK(std::abs(ev(s.g, z) - rhs) <= kResidual);
      }
    }
  }
  SUBCASE("descent depth is logarithmic in 1/eps") {
    const auto s = solve_concatenation_i(standard_push(), standard_push());
    for (int e = 3; e <= 15; e += 3) {
      Rational eps(1);
      for (int i = 0; i < e; ++i) eps /= 10;
      const double bound = std::log(std::pow(10.0, e)) / std::log(3.0) + 3;
      for (long k : {1L, 3L, 5L, 0L}) {
        EvalStats st;
        Rational z = Q(k, 1L << 20);  // dyadic points deep in the middle block
        evaluate(s.g, z, eps, &st);
        CHECK(st.max_depth <= bound);
      }
    }
  }
  SUBCASE("absent blocks are dropped") {
    const auto s = solve_concatenation_i(std::nullopt, standard_push());
    CHECK(s.partition.cuts == std::vector<Rational>{-1, 0, 1});
    for (const auto& z : samples(rng, 20)) {
      const double rhs = z <= 0 ? to_double(from_local(evaluate(s.g, to_local(z, -1, 0), kEps), -1, 0))
                                : to_double(from_local(apply_exact(standard_push(), to_local(z, 0, 1)), 0, 1));
      CHECK(std::abs(ev(s.g, z) - rhs) <= kResidual);
    }
  }
}

TEST_CASE("solve_concatenation_ii") {
  std::mt19937_64 rng(8);
  SUBCASE("identity inputs") {
    const auto s = solve_concatenation_ii(HoloMap(), HoloMap(), HoloMap(), HoloMap());
    CHECK(same_function(s.g, HoloMap()));
    CHECK(same_function(s.mu, HoloMap()));
  }
  auto block_rhs = [](const Partition& p, const HoloMap& a, const HoloMap& mid_inv, const HoloMap& b, const Rational& z) {
    const auto& c = p.cuts;
    if (z <= c[1]) return to_double(from_local(apply_exact(a, to_local(z, c[0], c[1])), c[0], c[1]));
    if (z <= c[2]) return to_double(from_local(evaluate(mid_inv, to_local(z, c[1], c[2]), kEps), c[1], c[2]));
    return to_double(from_local(apply_exact(b, to_local(z, c[2], c[3])), c[2], c[3]));
  };
  SUBCASE("both relations and the swap") {
    for (int i = 0; i < 6; ++i) {
      const HoloMap f = holo_gen::random_pl(rng), h = holo_gen::random_pl(rng);
      const HoloMap sg = holo_gen::random_pl(rng), tu = holo_gen::random_pl(rng);
      const auto s = solve_concatenation_ii(f, h, sg, tu);
      const auto t = solve_concatenation_ii(sg, tu, f, h);
      for (const auto& z : samples(rng, 30)) {
        CHECK(std::abs(ev(s.mu, z) - block_rhs(s.partition_mu, f, invert(s.g), h, z)) <= kResidual);
        CHECK(std::abs(ev(s.g, z) - block_rhs(s.partition_g, sg, invert(s.mu), tu, z)) <= kResidual);
        CHECK(std::abs(ev(t.g, z) - ev(s.mu, z)) <= kResidual);
        CHECK(std::abs(ev(t.mu, z) - ev(s.g, z)) <= kResidual);
      }
    }
  }
}

TEST_CASE("lazy evaluation is monotone and refines consistently") {
  std::mt19937_64 rng(9);
  const auto [g, h] = commutator_factorization(holo_gen::random_with_fixed_points(rng, 2));
  const auto s = solve_concatenation_i(holo_gen::random_above(rng), holo_gen::random_pl(rng));
  for (const HoloMap& m : {g, s.g, compose(g, s.g)}) {
    CHECK(evaluate(m, -1, kEps) == -1);
    CHECK(evaluate(m, 1, kEps) == 1);
    Rational prev = -1;
    const Rational e1(1, 1000000), e2(1, 1000000000);
    for (int k = -50; k <= 50; ++k) {
      const Rational z = Q(k, 50);
      const Rational a = evaluate(m, z, e1), b = evaluate(m, z, e2);
      CHECK(abs(a - b) <= e1 + e2);
      CHECK(a >= prev - 2 * e1);
      prev = a;
    }
  }
}

TEST_CASE("serialization round trip") {
  std::mt19937_64 rng(10);
  const HoloMap f = holo_gen::random_pl(rng);
  CHECK(same_function(holo_from_json(to_json(f)), f));
  CHECK(to_json(f)["kind"] == "pl");
  const auto [g, h] = commutator_factorization(holo_gen::random_with_fixed_points(rng, 1));
  const auto s2 = solve_concatenation_ii(holo_gen::random_pl(rng), std::nullopt, holo_gen::random_pl(rng), holo_gen::random_pl(rng));
  for (const HoloMap& m : {g, s2.g, s2.mu, compose(g, s2.mu)}) {
    const auto j = to_json(m);
    CHECK(j["kind"] == "dag");
    const HoloMap back = holo_from_json(j);
    CHECK(to_json(back) == j);
    for (const auto& z : samples(rng, 20)) CHECK(evaluate(back, z, kEps) == evaluate(m, z, kEps));
  }
  auto j = to_json(g);
  j["nodes"][0]["points"][1][1] = "5";
  CHECK_THROWS_AS(holo_from_json(j), HoloError);
}
