#include <algorithm>
#include <random>

#include "doctest.h"
#include "lamina/detect.hpp"
#include "lamina/generators.hpp"
#include "lamina/io.hpp"
#include "lamina/splitting.hpp"
#include "oracles.hpp"

using namespace lamina;

namespace {

BranchedSurfaceComplex fixture(const std::string& name) {
  return read_complex_file(LAMINA_SOURCE_DIR "/fixtures/" + name);
}

std::set<SectorId> plain(const SectorSet& s) { return {s.begin(), s.end()}; }
SafeRegion region(std::initializer_list<const char*> ids) {
  SafeRegion r;
  for (const char* s : ids) r.insert(s);
  return r;
}

void assert_all(BranchedSurfaceComplex& b) {
  for (Tri* t : {&b.assertions.horizontal_boundary_incompressible, &b.assertions.no_monogon,
                 &b.assertions.no_reeb_component, &b.assertions.complement_irreducible,
                 &b.assertions.no_sphere_boundary})
    *t = Tri::asserted_true;
}

BranchedSurfaceComplex random_complex(std::uint64_t seed) {
  gen::RandomOptions opts;
  opts.walks = seed % 3 == 0;
  return gen::random(seed, 3 + static_cast<int>(seed % 6), opts);
}

SafeRegion random_subset(const BranchedSurfaceComplex& b, std::mt19937_64& rng, double p) {
  SafeRegion r;
  std::bernoulli_distribution coin(p);
  for (const auto& [id, s] : b.sectors)
    if (coin(rng)) r.insert(id);
  return r;
}

// Safe subsets of random complexes, drawn until `want` are found or the seeds run out.
std::vector<std::pair<BranchedSurfaceComplex, SafeRegion>> safe_samples(int want, std::uint64_t seed0) {
  std::vector<std::pair<BranchedSurfaceComplex, SafeRegion>> out;
  std::mt19937_64 rng(seed0);
  for (std::uint64_t s = seed0; s < seed0 + 20 * static_cast<std::uint64_t>(want) && static_cast<int>(out.size()) < want; ++s) {
    auto b = random_complex(s);
    for (int k = 0; k < 6; ++k) {
      auto r = random_subset(b, rng, 0.35);
      if (oracle::unsafe_members(b, plain(r)).empty()) {
        out.emplace_back(b, r);
        break;
      }
    }
  }
  return out;
}

}  // namespace

TEST_CASE("the empty region is safe and closed") {
  for (const auto& b : {gen::disk_sink(), gen::necklace(3), gen::pita(), gen::closed_surface(2)}) {
    CHECK(is_safe_region(b, {}).safe);
    CHECK(expand_safe_region(b, {}).empty());
  }
}

TEST_CASE("a sink disk on its own is unsafe and is named") {
  const auto b = gen::disk_sink();
  const auto r = is_safe_region(b, region({"S"}));
  CHECK_FALSE(r.safe);
  CHECK(r.violating == std::vector<SectorId>{"S"});
  CHECK_THROWS_AS(expand_safe_region(b, region({"S"})), SplitError);
  CHECK_THROWS_AS(is_safe_region(b, region({"nope"})), SplitError);
}

TEST_CASE("an annulus pointing all inward is safe only with an essential curve") {
  auto b = gen::disk_sink();
  CHECK(is_safe_region(b, region({"W"})).safe);
  b.sectors.at("W").essential_curve = false;
  CHECK(is_safe_region(b, region({"W"})).violating == std::vector<SectorId>{"W"});
}

TEST_CASE("disk_sink is never laminar as given") {
  auto b = gen::disk_sink();
  assert_all(b);
  for (const auto& r : {region({}), region({"W"})}) {
    const auto v = certify_laminar(b, r);
    CHECK_FALSE(v.laminar_conditional);
    CHECK(std::count(v.uncovered.begin(), v.uncovered.end(), SectorId("S")) == 1);
  }
}

TEST_CASE("closed genus-2 surface: laminar once the flags are asserted") {
  auto b = fixture("genus2");
  auto v = certify_laminar(b, region({"F"}));
  CHECK_FALSE(v.laminar_conditional);
  CHECK(v.uncovered.empty());
  CHECK(v.missing_assertions.size() == 5);
  assert_all(b);
  v = certify_laminar(b, region({"F"}));
  CHECK(v.laminar_conditional);
}

TEST_CASE("necklace(3): {T} is safe but does not grow by closure") {
  // T is a source at every arc it meets, so no edge ever pulls a disk in.
  auto b = fixture("necklace3");
  assert_all(b);
  CHECK(is_safe_region(b, region({"T"})).safe);
  CHECK(plain(expand_safe_region(b, region({"T"}))) == std::set<SectorId>{"T"});
  auto v = certify_laminar(b, region({"T"}));
  CHECK_FALSE(v.laminar_conditional);
  CHECK(v.uncovered == std::vector<SectorId>{"D1", "D2", "D3"});

  const SafeRegion all = region({"D1", "D2", "D3", "T"});
  CHECK(is_safe_region(b, all).safe);
  CHECK(certify_laminar(b, all).laminar_conditional);
}

TEST_CASE("necklace(3): one slide makes the whole branch safe") {
  auto b = fixture("necklace3");
  assert_all(b);
  const auto r = apply_split_move(b, region({"T"}), SplitMove{1, "E1", std::nullopt});
  CHECK(r.moved == "D1");
  CHECK(plain(r.region) == std::set<SectorId>{"D1", "T"});
  CHECK(r.complex.edges.at("E1").sink.sector == "T");
  CHECK(plain(expand_safe_region(r.complex, r.region)) == std::set<SectorId>{"D1", "D2", "D3", "T"});
  CHECK(certify_laminar(r.complex, r.region).laminar_conditional);
}

TEST_CASE("kind 2 merge: the moved sheet becomes the sink and joins only if still safe") {
  auto b = fixture("necklace3");
  const auto r = apply_split_move(b, region({"T"}), SplitMove{2, "E1", std::nullopt});
  CHECK(r.complex.edges.at("E1").sink.sector == "D1");
  // D1 now receives at both of its arcs: a sink disk, kept out.
  CHECK(plain(r.region) == std::set<SectorId>{"T"});
  CHECK(plain(find_sink_disks(r.complex)) == std::set<SectorId>{"D1"});
}

TEST_CASE("kind 2 where both sources are the same sector keeps it in the region") {
  const auto b = gen::disk_sink();
  const auto r = apply_split_move(b, region({"W"}), SplitMove{2, "c", std::string("a")});
  CHECK(r.moved == "W");
  CHECK(r.complex.edges.at("c").sink.sector == "W");
  CHECK(plain(r.region) == std::set<SectorId>{"W"});
  CHECK(oracle::unsafe_members(r.complex, plain(r.region)).empty());
}

TEST_CASE("unnecessary moves and site mismatches are refused") {
  auto b = fixture("necklace3");
  const auto all = region({"D1", "D2", "D3", "T"});
  CHECK(necessity(b, all, SplitMove{1, "E1", std::nullopt}) == Necessity::unnecessary);
  CHECK_THROWS_WITH_AS(apply_split_move(b, all, SplitMove{1, "E1", std::nullopt}),
                       doctest::Contains("unnecessary"), SplitError);
  CHECK(necessity(b, region({"T"}), SplitMove{1, "E1", std::nullopt}) == Necessity::necessary);
  // Orientation b makes T the moving sheet, leaving D1 (outside) as P.
  CHECK_THROWS_WITH_AS(apply_split_move(b, region({"T"}), SplitMove{1, "E1", std::string("b")}),
                       doctest::Contains("site mismatch"), SplitError);
  CHECK_THROWS_WITH_AS(apply_split_move(b, region({"T"}), SplitMove{1, "E9", std::nullopt}),
                       doctest::Contains("site mismatch"), SplitError);
  CHECK_THROWS_WITH_AS(apply_split_move(b, region({}), SplitMove{1, "E1", std::nullopt}),
                       doctest::Contains("site mismatch"), SplitError);
  CHECK_THROWS_AS(apply_split_move(b, region({"T"}), SplitMove{3, "E1", std::nullopt}), SplitError);
}

TEST_CASE("script parsing") {
  const auto moves = parse_split_script("# warm-up\n\nsplit 1 @ E1\n  split 2 @ E2 b  # trailing\n");
  REQUIRE(moves.size() == 2);
  CHECK(moves[0].kind == 1);
  CHECK(moves[0].edge == "E1");
  CHECK_FALSE(moves[0].orientation);
  CHECK(moves[1].kind == 2);
  CHECK(moves[1].orientation == std::string("b"));
  CHECK_THROWS_WITH_AS(parse_split_script("split 1 @ E1\nsplit 3 @ E2\n"), doctest::Contains("line 2"), SplitError);
  CHECK_THROWS_WITH_AS(parse_split_script("split 1 E1\n"), doctest::Contains("line 1"), SplitError);
  CHECK_THROWS_WITH_AS(parse_split_script("split 1 @ E1 c\n"), doctest::Contains("orientation"), SplitError);
  CHECK(parse_split_script("").empty());
}

TEST_CASE("script traces") {
  const auto b = fixture("necklace3");
  SUBCASE("empty script: the expanded input only") {
    const auto t = run_split_script(b, region({"T"}), {});
    CHECK(t.entries.size() == 1);
    CHECK_FALSE(t.failed_move);
  }
  SUBCASE("two merges: three entries") {
    const auto t = run_split_script(b, region({"T"}), parse_split_script("split 2 @ E1\nsplit 2 @ E2\n"));
    CHECK_FALSE(t.failed_move);
    REQUIRE(t.entries.size() == 3);
    for (std::size_t i = 1; i < t.entries.size(); ++i) {
      CHECK(std::includes(t.entries[i].region.begin(), t.entries[i].region.end(), t.entries[i - 1].region.begin(),
                          t.entries[i - 1].region.end(), IdLess{}));
      CHECK(oracle::unsafe_members(t.entries[i].complex, plain(t.entries[i].region)).empty());
    }
  }
  SUBCASE("an unnecessary second move aborts at index 2") {
    const auto t = run_split_script(b, region({"T"}), parse_split_script("split 1 @ E1\nsplit 1 @ E2\n"));
    REQUIRE(t.failed_move);
    CHECK(*t.failed_move == 2);
    CHECK(t.entries.size() == 2);
    CHECK(t.error.find("unnecessary") != std::string::npos);
  }
  SUBCASE("an unsafe starting region is refused outright") {
    CHECK_THROWS_AS(run_split_script(b, region({"D1"}), {}), SplitError);
  }
}

TEST_CASE("safety agrees with the edge-table oracle on random subsets") {
  std::mt19937_64 rng(5);
  int safe = 0, unsafe = 0;
  for (std::uint64_t s = 1; s <= 400; ++s) {
    const auto b = random_complex(s);
    for (int k = 0; k < 4; ++k) {
      const auto r = random_subset(b, rng, k * 0.3);
      CAPTURE(s);
      const auto rep = is_safe_region(b, r);
      const auto want = oracle::unsafe_members(b, plain(r));
      CHECK(std::set<SectorId>(rep.violating.begin(), rep.violating.end()) == want);
      CHECK(rep.safe == want.empty());
      (rep.safe ? safe : unsafe)++;
    }
  }
  CHECK(safe > 100);
  CHECK(unsafe > 100);
}

TEST_CASE("closure: matches the oracle, extensive, idempotent, monotone, order independent") {
  const auto samples = safe_samples(600, 1000);
  REQUIRE(samples.size() >= 500);
  std::mt19937_64 rng(9);
  for (const auto& [b, r] : samples) {
    const auto c = expand_safe_region(b, r);
    CHECK(plain(c) == oracle::closure(b, plain(r)));
    CHECK(std::includes(c.begin(), c.end(), r.begin(), r.end(), IdLess{}));
    CHECK(expand_safe_region(b, c) == c);
    CHECK(expand_safe_region(b, r, true) == c);
    CHECK(is_safe_region(b, c).safe);
    // A safe subset of r closes inside c.
    SafeRegion sub;
    for (const auto& x : r)
      if (rng() % 2) sub.insert(x);
    if (is_safe_region(b, sub).safe) {
      const auto cs = expand_safe_region(b, sub);
      CHECK(std::includes(c.begin(), c.end(), cs.begin(), cs.end(), IdLess{}));
    }
  }
}

TEST_CASE("split moves keep the complex valid, the sectors' topology, and a growing safe region") {
  int applied = 0, grew = 0;
  for (const auto& [b0, r0] : safe_samples(400, 5000)) {
    const auto r = expand_safe_region(b0, r0);
    for (const auto& [eid, e] : b0.edges) {
      for (int kind : {1, 2}) {
        const SplitMove m{kind, eid, std::nullopt};
        if (necessity(b0, r, m) == Necessity::unnecessary) {
          CHECK_THROWS_AS(apply_split_move(b0, r, m), SplitError);
          continue;
        }
        SplitResult res;
        try {
          res = apply_split_move(b0, r, m);
        } catch (const SplitError&) {
          // only a site mismatch: neither source is in the region
          CHECK_FALSE((r.count(e.source_a.sector) || r.count(e.source_b.sector)));
          continue;
        }
        ++applied;
        CHECK(validate(res.complex).empty());
        CHECK(std::includes(res.region.begin(), res.region.end(), r.begin(), r.end(), IdLess{}));
        CHECK(oracle::unsafe_members(res.complex, plain(res.region)).empty());
        if (kind == 1) CHECK(res.region.count(res.moved));
        grew += res.region.size() > r.size();
        REQUIRE(res.complex.sectors.size() == b0.sectors.size());
        for (const auto& [sid, s] : b0.sectors) {
          const auto& t = res.complex.sectors.at(sid);
          CHECK(t.euler_char == s.euler_char);
          CHECK(t.circuits.size() == s.circuits.size());
        }
        CHECK(find_sink_disks(res.complex).size() <= find_sink_disks(b0).size() + 1);
      }
    }
  }
  MESSAGE(applied << " moves applied, " << grew << " grew the region");
  CHECK(applied > 200);
  CHECK(grew > 50);
}

TEST_CASE("laminar verdicts never cover a sink disk") {
  std::mt19937_64 rng(3);
  int laminar = 0;
  for (std::uint64_t s = 1; s <= 600; ++s) {
    auto b = random_complex(s);
    assert_all(b);
    for (auto& [id, sec] : b.sectors) sec.essential_curve = true;
    SafeRegion r;
    for (const auto& [id, sec] : b.sectors)
      if (!sec.is_disk()) r.insert(id);
    if (!is_safe_region(b, r).safe) continue;
    const auto v = certify_laminar(b, r);
    if (!v.laminar_conditional) continue;
    ++laminar;
    CHECK(find_sink_disks(b).empty());
    CHECK(oracle::sink_disks(b).empty());
  }
  MESSAGE(laminar << " laminar verdicts");
  CHECK(laminar > 20);
}
