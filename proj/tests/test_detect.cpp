#include <random>

#include "doctest.h"
#include "lamina/canonical.hpp"
#include "lamina/detect.hpp"
#include "lamina/generators.hpp"
#include "oracles.hpp"

using namespace lamina;

namespace {

std::set<SectorId> plain(const SectorSet& s) { return {s.begin(), s.end()}; }

}  // namespace

TEST_CASE("disk_sink: S is the only sink disk, nothing removable") {
  const auto b = gen::disk_sink();
  CHECK(plain(find_sink_disks(b)) == std::set<SectorId>{"S"});
  CHECK(find_removable_disks(b).empty());
  CHECK(find_bubble_candidates(b).empty());
}

TEST_CASE("necklaces have no sink disk and no bubble") {
  for (int k = 2; k <= 7; ++k) {
    const auto b = gen::necklace(k);
    CHECK(find_sink_disks(b).empty());
    CHECK(find_bubble_candidates(b).empty());
    CHECK(find_removable_disks(b).empty());
  }
}

TEST_CASE("pita") {
  const auto b = gen::pita();
  CHECK(plain(find_removable_disks(b)) == oracle::removable_disks(b));
  CHECK(plain(find_removable_disks(b)) == std::set<SectorId>{"D1", "D2"});
  CHECK(find_bubble_candidates(b) == std::set<SectorPair>{{"D1", "D2"}});

  SUBCASE("deleting D2 leaves one disk with a free boundary") {
    const auto c = delete_removable(b, "D2");
    CHECK(c.edges.empty());
    REQUIRE(c.sectors.size() == 1);
    const auto& s = c.sectors.begin()->second;
    CHECK(s.euler_char == 1);
    REQUIRE(s.circuits.size() == 1);
    CHECK(s.circuits[0].size() == 1);
    CHECK(s.circuits[0][0].is_free());
    CHECK(oracle::sectors_after_delete(b, "D2") == c.sectors.size());
  }
  SUBCASE("make_efficient stops after one deletion") {
    const auto steps = make_efficient(b);
    REQUIRE(steps.size() == 2);
    CHECK_FALSE(steps[0].deleted.has_value());
    CHECK(steps[1].deleted == SectorId("D1"));
    CHECK(find_removable_disks(steps[1].complex).empty());
  }
  SUBCASE("collapse needs confirmation") {
    CHECK_THROWS_AS(collapse_bubble(b, {"D1", "D2"}, false), RewriteError);
    const auto c = collapse_bubble(b, {"D2", "D1"}, true);
    CHECK(c.edges.empty());
    CHECK(c.vertices.empty());
    REQUIRE(c.sectors.size() == 1);
    CHECK(c.sectors.begin()->second.is_disk());
    CHECK(validate(c).empty());
  }
  SUBCASE("collapse of a non-candidate is refused") {
    CHECK_THROWS_AS(collapse_bubble(b, {"D1", "E"}, true), RewriteError);
  }
}

TEST_CASE("removable excludes disks that traverse an edge twice") {
  BranchedSurfaceComplex b;
  Sector d;
  d.circuits = {{{"e", Slot::source_through, Side::left}, {"e", Slot::source_merge, Side::left}}};
  b.sectors["D"] = d;
  Sector a;
  a.euler_char = 0;
  a.circuits = {{{"e", Slot::sink, Side::left}}, {BoundaryEntry::free_arc()}};
  b.sectors["A"] = a;
  b.edges["e"] = LocusEdge{};
  b.reindex();
  REQUIRE(validate(b).empty());
  CHECK(find_removable_disks(b).empty());
  CHECK(oracle::removable_disks(b).empty());
  CHECK_THROWS_AS(delete_removable(b, "D"), RewriteError);
}

TEST_CASE("a bubble hides a sink disk until it is collapsed") {
  const auto b = gen::bubble_over_sink();
  CHECK(find_sink_disks(b).empty());
  REQUIRE(find_bubble_candidates(b) == std::set<SectorPair>{{"D1", "D2"}});
  const auto c = collapse_bubble(b, {"D1", "D2"}, true);
  CHECK(plain(find_sink_disks(c)) == oracle::sink_disks(c));
  CHECK(find_sink_disks(c).size() == 1);
  CHECK(collapse_confirmed_bubbles(b) == c);
}

TEST_CASE("collapsing two disjoint bubbles commutes up to relabeling") {
  // Two pitas sharing nothing, renamed apart.
  auto left = gen::pita();
  auto right = oracle::relabel_sectors(gen::pita(), {{"D1", "F1"}, {"D2", "F2"}, {"E", "G"}});
  BranchedSurfaceComplex both = left;
  for (auto& [sid, s] : right.sectors) {
    for (auto& c : s.circuits)
      for (auto& en : c)
        if (en.edge) en.edge = "f";
    both.sectors[sid] = s;
  }
  both.edges["f"] = LocusEdge{};
  both.reindex();
  REQUIRE(validate(both).empty());
  REQUIRE(find_bubble_candidates(both).size() == 2);

  const auto ab = collapse_bubble(collapse_bubble(both, {"D1", "D2"}, true), {"F1", "F2"}, true);
  const auto ba = collapse_bubble(collapse_bubble(both, {"F1", "F2"}, true), {"D1", "D2"}, true);
  CHECK(canonical_signature(ab) == canonical_signature(ba));
  CHECK(ab == ba);
}

TEST_CASE("detectors agree with definitional scans on random complexes") {
  gen::RandomOptions walk;
  walk.walks = true;
  for (std::uint64_t s = 0; s < 400; ++s) {
    for (const auto& b : {gen::random(s, 8), gen::random(s, 8, walk)}) {
      CHECK(plain(find_sink_disks(b)) == oracle::sink_disks(b));
      CHECK(plain(find_removable_disks(b)) == oracle::removable_disks(b));
      const auto cands = find_bubble_candidates(b);
      std::set<std::pair<SectorId, SectorId>> got(cands.begin(), cands.end());
      CHECK(got == oracle::bubble_pairs(b));
    }
  }
}

TEST_CASE("deletion keeps the complex valid and merges sectors as the union-find count predicts") {
  int deletions = 0;
  for (std::uint64_t s = 0; s < 600; ++s) {
    const auto b = gen::random(s, 8);
    for (const auto& r : find_removable_disks(b)) {
      try {
        const auto c = delete_removable(b, r);
        CHECK(validate(c).empty());
        CHECK(c.sectors.size() == oracle::sectors_after_delete(b, r));
        CHECK(!c.sectors.count(r));
        ++deletions;
      } catch (const RewriteError& e) {
        CHECK(std::string(e.what()).find("sphere") != std::string::npos);
      }
    }
  }
  CHECK(deletions > 100);
}

TEST_CASE("make_efficient ends efficient and each step removes the lowest removable id") {
  for (std::uint64_t s = 0; s < 300; ++s) {
    const auto b = gen::random(s, 8);
    const auto steps = make_efficient(b);
    REQUIRE(!steps.empty());
    CHECK(steps.front().complex == b);
    for (std::size_t i = 1; i < steps.size(); ++i) {
      REQUIRE(steps[i].deleted.has_value());
      CHECK(find_removable_disks(steps[i - 1].complex).count(*steps[i].deleted));
      CHECK(steps[i].complex.sectors.size() < steps[i - 1].complex.sectors.size());
    }
  }
  CHECK(make_efficient(gen::necklace(3)).size() == 1);
}

TEST_CASE("make_efficient after canonicalization is invariant under relabeling") {
  gen::RandomOptions walk;
  walk.walks = true;
  walk.allow_unknown = false;
  walk.allow_free = false;
  std::mt19937_64 rng(7);
  int compared = 0;
  for (std::uint64_t s = 0; s < 400; ++s) {
    const auto b = gen::random(s, 8, walk);
    if (find_removable_disks(b).size() < 2) continue;
    std::vector<SectorId> ids;
    for (const auto& [sid, sec] : b.sectors) ids.push_back(sid);
    auto shuffled = ids;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    std::map<SectorId, SectorId> rename;
    for (std::size_t i = 0; i < ids.size(); ++i) rename[ids[i]] = "R" + shuffled[i];
    const auto a = make_efficient(canonicalize(b)).back().complex;
    const auto c = make_efficient(canonicalize(oracle::relabel_sectors(b, rename))).back().complex;
    CHECK(canonical_signature(a) == canonical_signature(c));
    ++compared;
  }
  CHECK(compared > 20);
}

TEST_CASE("free-form circuits can defeat deletion safety; realizable ones do not") {
  // S2 runs along the closed loop e1 twice inside one circuit; deleting S1
  // glues those two runs together and leaves S2 with inward arcs only.
  const auto b = gen::random(6136, 8);
  REQUIRE(find_sink_disks(b).empty());
  REQUIRE(find_bubble_candidates(b).empty());
  REQUIRE(find_removable_disks(b).count("S1"));
  CHECK(plain(find_sink_disks(delete_removable(b, "S1"))) == std::set<SectorId>{"S2"});
  bool noted = false;
  for (const auto& v : lint(b)) noted = noted || v.code == "closed_loop_in_circuit";
  CHECK(noted);

  gen::RandomOptions walk;
  walk.walks = true;
  walk.allow_unknown = false;
  walk.allow_free = false;
  int deletions = 0;
  for (std::uint64_t s = 0; s < 3000; ++s) {
    const auto c = gen::random(s, 8, walk);
    if (!find_sink_disks(c).empty() || !find_bubble_candidates(c).empty() || oracle::has_generalized_bubble(c)) continue;
    for (const auto& r : find_removable_disks(c)) {
      try {
        const auto d = delete_removable(c, r);
        ++deletions;
        CHECK(find_sink_disks(d).empty());
        CHECK(find_bubble_candidates(d).empty());
      } catch (const RewriteError&) {
      }
    }
  }
  CHECK(deletions > 300);
}
