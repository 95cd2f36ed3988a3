// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "cert_fuzz.hpp"
#include "holo_gen.hpp"
#include "lam_gen.hpp"
#include "lamina/certificate.hpp"
#include "lamina/decompose.hpp"
#include "lamina/detect.hpp"
#include "lamina/generators.hpp"
#include "lamina/io.hpp"
#include "lamina/splitting.hpp"
#include "oracles.hpp"

using namespace lamina;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;
  void fail(const std::string& why) {
    if (pass) detail << "first failure: " << why << "; ";
    pass = false;
  }
};

std::vector<fs::path> fixtures() {
  std::vector<fs::path> out;
  for (const auto& f : fs::directory_iterator(LAMINA_SOURCE_DIR "/fixtures")) out.push_back(f.path());
  std::sort(out.begin(), out.end());
  return out;
}

std::set<SectorId> plain(const SectorSet& s) { return {s.begin(), s.end()}; }

bool subset(const SafeRegion& a, const SafeRegion& b) { return std::includes(b.begin(), b.end(), a.begin(), a.end(), IdLess{}); }

Rational decimal(long num, int neg_exp) {
  Rational r(num);
  for (int i = 0; i < neg_exp; ++i) r /= 10;
  return r;
}

const Rational kEps = decimal(1, 12);
const Rational kResidual = decimal(1, 9);

// ---------------------------------------------------------------------------

void detectors(Outcome& o) {
  gen::RandomOptions walk;
  walk.walks = true;
  int n = 0;
  for (std::uint64_t s = 0; s < 500; ++s)
    for (const auto& b : {gen::random(s, 8), gen::random(s, 8, walk)}) {
      ++n;
      if (plain(find_sink_disks(b)) != oracle::sink_disks(b)) o.fail("sink disks, seed " + std::to_string(s));
      if (plain(find_removable_disks(b)) != oracle::removable_disks(b)) o.fail("removable, seed " + std::to_string(s));
      const auto c = find_bubble_candidates(b);
      if (std::set<std::pair<SectorId, SectorId>>(c.begin(), c.end()) != oracle::bubble_pairs(b))
        o.fail("bubbles, seed " + std::to_string(s));
    }
  if (n < 1000) o.fail("too few complexes");
  o.detail << n << " complexes";
}

// The lemma is about surfaces, so the population is the walk-realizable family
// with known sides and no free arcs; bubble-free includes bubbles whose disks
// are unions of several sectors. Free-form circuits are run too, reported only.
void deletion_lemma(Outcome& o) {
  gen::RandomOptions walk;
  walk.walks = true;
  walk.allow_unknown = false;
  walk.allow_free = false;
  int complexes = 0, deletions = 0, refused = 0;
  for (std::uint64_t s = 0; complexes < 1000 && s < 40000; ++s) {
    const auto b = gen::random(s, 8, walk);
    if (!find_sink_disks(b).empty() || !find_bubble_candidates(b).empty()) continue;
    const auto removable = find_removable_disks(b);
    if (removable.empty() || oracle::has_generalized_bubble(b)) continue;
    ++complexes;
    for (const auto& r : removable) {
      BranchedSurfaceComplex c;
      try {
        c = delete_removable(b, r);
      } catch (const RewriteError&) {
        ++refused;  // the merge would close up a sphere
        continue;
      }
      ++deletions;
      if (!find_sink_disks(c).empty() || !oracle::sink_disks(c).empty())
        o.fail("sink disk after deleting " + r + " at seed " + std::to_string(s));
      if (!find_bubble_candidates(c).empty() || !oracle::bubble_pairs(c).empty())
        o.fail("bubble after deleting " + r + " at seed " + std::to_string(s));
    }
  }
  if (complexes < 500) o.fail("only " + std::to_string(complexes) + " qualifying complexes");

  int free_form = 0, free_form_bad = 0;
  for (std::uint64_t s = 0; s < 4000; ++s) {
    const auto b = gen::random(s, 8);
    if (!find_sink_disks(b).empty() || !find_bubble_candidates(b).empty()) continue;
    for (const auto& r : find_removable_disks(b)) {
      try {
        const auto c = delete_removable(b, r);
        ++free_form;
        free_form_bad += !find_sink_disks(c).empty() || !find_bubble_candidates(c).empty();
      } catch (const RewriteError&) {
      }
    }
  }
  o.detail << complexes << " complexes, " << deletions << " deletions, " << refused << " refused as spheres; not scored: "
           << free_form_bad << " of " << free_form << " free-form deletions create one";
}

void maximality(Outcome& o) {
  gen::RandomOptions walk;
  walk.walks = true;
  int checked = 0, stranded = 0, cycles = 0;
  for (const auto& opts : {gen::RandomOptions{}, walk})
    for (std::uint64_t s = 0; s < 800; ++s) {
      const auto b = gen::random(s, 8, opts);
      if (!find_sink_disks(b).empty()) continue;
      ChainCycleDecomposition d;
      try {
        d = decompose_chains_cycles(b);
      } catch (const DecompositionError&) {
        ++stranded;  // a disk with no outward edge has no out-edge to enumerate
        continue;
      }
      ++checked;
      cycles += static_cast<int>(d.cycles.size());
      if (static_cast<int>(d.cycles.size()) != oracle::max_cycles_bruteforce(b)) o.fail("gap at seed " + std::to_string(s));
    }
  o.detail << checked << " complexes, " << cycles << " cycles, " << stranded << " skipped with a stranded disk";
}

void all_disk_witness(Outcome& o) {
  gen::RandomOptions opts;
  opts.all_disk = true;
  int tried = 0;
  for (std::uint64_t s = 0; tried < 600 && s < 40000; ++s) {
    const auto b = gen::random(s, 8, opts);
    if (!find_sink_disks(b).empty()) continue;
    ++tried;
    const auto w = all_disk_cycle_witness(b);
    if (!w) {
      o.fail("ABSENT at seed " + std::to_string(s));
      continue;
    }
    for (std::size_t i = 0; i < w->size(); ++i) {
      bool linked = false;
      for (const auto& e : outward_edges(b, (*w)[i]))
        linked = linked || b.edges.at(e).sink.sector == (*w)[(i + 1) % w->size()];
      if (!linked) o.fail("witness is not a cycle at seed " + std::to_string(s));
    }
  }
  if (tried < 500) o.fail("too few complexes");
  o.detail << tried << " all-disk complexes";
}

// Affine block coordinates, written out here rather than borrowed from the library.
Rational to_local(const Rational& z, const Rational& a, const Rational& b) { return (2 * z - a - b) / (b - a); }
Rational from_local(const Rational& t, const Rational& a, const Rational& b) { return a + (t + 1) * (b - a) / 2; }

std::vector<Rational> sample_zs(std::mt19937_64& rng, int n) {
  std::vector<Rational> out{Rational(-1), Rational(0), Rational(1)};
  std::uniform_int_distribution<long> d(-999999, 999999);
  while (static_cast<int>(out.size()) < n) {
    Rational r(d(rng), 1000000);
    r.canonicalize();
    out.push_back(r);
  }
  return out;
}

Rational gap(const Rational& a, const Rational& b) { return abs(Rational(a - b)); }

void holonomy(Outcome& o) {
  std::mt19937_64 rng(2024);
  const int inputs = 100, per = 1000;
  long evals = 0;
  auto check = [&](const char* what, int i, const Rational& got, const Rational& want, bool exact) {
    ++evals;
    if (exact ? got != want : gap(got, want) > kResidual)
      o.fail(std::string(what) + " input " + std::to_string(i) + " residual " + std::to_string(to_double(gap(got, want))));
  };
  // Block value of concatenate([a, mid, b]) at z, the middle block evaluated lazily.
  auto block = [&](const Partition& p, const std::vector<std::optional<HoloMap>>& maps, const Rational& z) -> Rational {
    std::size_t k = 0;
    while (k + 2 < p.cuts.size() && z > p.cuts[k + 1]) ++k;
    return from_local(evaluate(*maps[k], to_local(z, p.cuts[k], p.cuts[k + 1]), kEps / 1000), p.cuts[k], p.cuts[k + 1]);
  };
  for (int i = 0; i < inputs; ++i) {
    const auto zs = sample_zs(rng, per);
    {
      const HoloMap f = holo_gen::random_with_fixed_points(rng, static_cast<std::size_t>(i % 4));
      const auto [g, h] = commutator_factorization(f);
      // One certified enclosure of the whole word. Chaining separately rounded
      // steps is ill-conditioned: the witness can squeeze an interval against
      // an endpoint so hard that its inverse magnifies 1e-15 into 1e-2.
      const HoloMap word = compose(g, compose(h, compose(invert(g), invert(h))));
      const bool exact = g.is_exact() && h.is_exact();
      for (const auto& z : zs) check("commutator_factorization", i, evaluate(word, z, kEps), apply_exact(f, z), exact);
    }
    {
      HoloMap f = holo_gen::random_above(rng), p = holo_gen::random_above(rng);
      if (i % 2) {
        f = invert(f);
        p = invert(p);
      }
      const HoloMap q = conjugacy_witness(f, p);
      for (const auto& z : zs)
        check("conjugacy_witness", i, evaluate(q, apply_exact(f, z), kEps / 1000), apply_exact(p, evaluate(q, z, kEps / 1000)),
              q.is_exact());
    }
    {
      const HoloMap f = holo_gen::random_with_fixed_points(rng, static_cast<std::size_t>(i % 3));
      const int genus = 1 + i % 3;
      const auto pairs = genus_factorization(f, genus);
      if (static_cast<int>(pairs.size()) != genus) o.fail("genus_factorization: wrong number of pairs");
      HoloMap word;
      for (const auto& [a, b] : pairs) word = compose(word, compose(a, compose(b, compose(invert(a), invert(b)))));
      for (const auto& z : zs) check("genus_factorization", i, evaluate(word, z, kEps), apply_exact(f, z), false);
    }
    {
      std::optional<HoloMap> f = holo_gen::random_pl(rng), h = holo_gen::random_pl(rng);
      if (i % 10 == 3) f.reset();
      if (i % 10 == 7) h.reset();
      const auto s = solve_concatenation_i(f, h);
      std::vector<std::optional<HoloMap>> maps;
      if (f) maps.push_back(f);
      maps.push_back(s.g);
      if (h) maps.push_back(h);
      for (const auto& z : zs) check("solve_concatenation_i", i, evaluate(s.g, z, kEps), block(s.partition, maps, z), false);
    }
    {
      const HoloMap f = holo_gen::random_pl(rng), h = holo_gen::random_pl(rng);
      const HoloMap sg = holo_gen::random_pl(rng), tu = holo_gen::random_pl(rng);
      const auto s = solve_concatenation_ii(f, h, sg, tu);
      const std::vector<std::optional<HoloMap>> mu_blocks{f, invert(s.g), h}, g_blocks{sg, invert(s.mu), tu};
      for (std::size_t k = 0; k < zs.size(); k += 2) {
        check("solve_concatenation_ii (mu)", i, evaluate(s.mu, zs[k], kEps), block(s.partition_mu, mu_blocks, zs[k]), false);
        check("solve_concatenation_ii (g)", i, evaluate(s.g, zs[k + 1], kEps), block(s.partition_g, g_blocks, zs[k + 1]), false);
      }
    }
  }
  o.detail << inputs << " inputs per identity, " << evals << " evaluations";
}

void regluing(Outcome& o) {
  std::mt19937_64 rng(31);
  int spiraling = 0;
  const int trials = 1200;
  for (int t = 0; t < trials; ++t) {
    const auto mu = lam_gen::random_lamination(rng);
    const auto track = lam_gen::random_track(rng);
    spiraling += !mu.all_circles();
    const auto [out, record] = reglue_to_circles(mu, track);
    if (!same_function(out.return_map, HoloMap()) || !out.all_circles()) o.fail("return map not the identity");
    const auto [again, record2] = reglue_to_circles(out, track);
    if (!same_lamination(again, out)) o.fail("not idempotent");
    if (!same_lamination(unreglue(out, record), mu)) o.fail("cut record does not undo the regluing");
  }
  o.detail << trials << " laminations, " << spiraling << " with spiral leaves";
}

void certificates(Outcome& o) {
  std::vector<json> docs;
  int built = 0, refused = 0;
  for (const auto& f : fixtures()) {
    const auto b = read_complex_file(f.string());
    json doc;
    try {
      doc = build_lamination_certificate(b).document;
    } catch (const CertificateError&) {
      ++refused;
      continue;
    } catch (const LaminationError&) {
      ++refused;
      continue;
    }
    ++built;
    docs.push_back(doc);
    const auto path = fs::temp_directory_path() / ("lamina_acceptance_" + f.filename().string() + ".cert");
    write_text_file(path.string(), doc.dump(1) + "\n");
    const std::string cmd = "'" LAMINA_CLI "' laminate --check '" + path.string() + "' > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    fs::remove(path);
    if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) o.fail("laminate --check failed on " + f.filename().string());
  }
  for (std::uint64_t seed = 1; docs.size() < 10 && seed < 400; ++seed) {
    auto b = cert_fuzz::random_certifiable(seed);
    if (!b) continue;
    try {
      docs.push_back(build_lamination_certificate(*b).document);
    } catch (const std::exception&) {
    }
  }
  std::mt19937_64 rng(4242);
  const int trials = 1000;
  int false_accepts = 0;
  for (int t = 0; t < trials; ++t) {
    const json& doc = docs[static_cast<std::size_t>(t) % docs.size()];
    std::vector<json::json_pointer> paths;
    cert_fuzz::leaves(doc["steps"], json::json_pointer("/steps"), paths);
    const auto& p = paths[rng() % paths.size()];
    json bad = doc;
    bad[p] = cert_fuzz::mutated(doc[p], rng);
    if (bad == doc) {
      o.fail("mutation left the document unchanged");
      continue;
    }
    if (check_lamination_certificate(bad).ok()) {
      ++false_accepts;
      o.fail("accepted a mutation at " + p.to_string());
    }
  }
  if (built == 0) o.fail("no fixture certificate built");
  o.detail << built << " fixture certificates checked by the CLI (" << refused << " refused), " << trials
           << " mutations over " << docs.size() << " certificates, " << false_accepts << " accepted";
}

void safe_regions(Outcome& o) {
  std::mt19937_64 rng(8);
  gen::RandomOptions walk;
  walk.walks = true;
  int pairs = 0, moves = 0, laminar = 0;
  for (std::uint64_t s = 0; s < 4000 && pairs < 600; ++s) {
    auto b = gen::random(s, 3 + static_cast<int>(s % 6), s % 3 ? gen::RandomOptions{} : walk);
    if (s % 2) {
      for (Tri* t : {&b.assertions.horizontal_boundary_incompressible, &b.assertions.no_monogon, &b.assertions.no_reeb_component,
                     &b.assertions.complement_irreducible, &b.assertions.no_sphere_boundary})
        *t = Tri::asserted_true;
    }
    SafeRegion r;
    for (const auto& [id, sec] : b.sectors)
      if (rng() % 3 == 0 || (!sec.is_disk() && sec.essential_curve && rng() % 2)) r.insert(id);
    if (!oracle::unsafe_members(b, plain(r)).empty()) continue;
    ++pairs;
    const std::string at = " at seed " + std::to_string(s);
    const auto c = expand_safe_region(b, r);
    if (!subset(r, c)) o.fail("closure not extensive" + at);
    if (expand_safe_region(b, c) != c) o.fail("closure not idempotent" + at);
    if (plain(c) != oracle::closure(b, plain(r))) o.fail("closure differs from the oracle" + at);
    SafeRegion sub;
    for (const auto& x : r)
      if (rng() % 2) sub.insert(x);
    if (is_safe_region(b, sub).safe && !subset(expand_safe_region(b, sub), c)) o.fail("closure not monotone" + at);

    for (const auto& [eid, e] : b.edges)
      for (int kind : {1, 2}) {
        const SplitMove m{kind, eid, std::nullopt};
        if (necessity(b, c, m) == Necessity::unnecessary) continue;
        SplitResult res;
        try {
          res = apply_split_move(b, c, m);
        } catch (const SplitError&) {
          continue;  // site mismatch: no region sheet at this edge
        }
        ++moves;
        if (!subset(c, res.region)) o.fail("split lost containment" + at);
        if (!oracle::unsafe_members(res.complex, plain(res.region)).empty()) o.fail("split left an unsafe region" + at);
        if (!subset(res.region, expand_safe_region(res.complex, res.region))) o.fail("closure after split" + at);
      }

    const auto v = certify_laminar(b, r);
    if (v.laminar_conditional) {
      ++laminar;
      if (!find_sink_disks(b).empty() || !oracle::sink_disks(b).empty()) o.fail("LAMINAR with a sink disk" + at);
    }
  }
  if (pairs < 500) o.fail("only " + std::to_string(pairs) + " safe pairs");
  if (laminar == 0) o.fail("no LAMINAR verdict reached");
  o.detail << pairs << " (B, B') pairs, " << moves << " necessary moves, " << laminar << " LAMINAR verdicts";
}

void serialization(Outcome& o) {
  int n = 0;
  for (const auto& f : fixtures()) {
    const auto b = read_complex_file(f.string());
    if (parse_complex(serialize_complex(b)) != b) o.fail("fixture " + f.filename().string());
    ++n;
  }
  gen::RandomOptions walk;
  walk.walks = true;
  for (std::uint64_t s = 0; s < 1000; ++s) {
    const auto b = gen::random(s, 1 + static_cast<int>(s % 12), s % 2 ? walk : gen::RandomOptions{});
    if (parse_complex(serialize_complex(b)) != b) o.fail("random seed " + std::to_string(s));
    ++n;
  }
  o.detail << n << " complexes";
}

struct Criterion {
  const char* name;
  double limit_s;  // 0: no time limit
  std::function<void(Outcome&)> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> all{
      {"detector/oracle equivalence", 60, detectors},
      {"removable-disk deletion keeps sink-free and bubble-free", 0, deletion_lemma},
      {"chain/cycle maximality", 120, maximality},
      {"all-disk cycle witness", 0, all_disk_witness},
      {"holonomy identities", 120, holonomy},
      {"regluing to circles", 0, regluing},
      {"certificate soundness", 0, certificates},
      {"safe-region calculus", 0, safe_regions},
      {"serialization round trip", 0, serialization},
  };
  int failed = 0;
  for (std::size_t i = 0; i < all.size(); ++i) {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      all[i].run(o);
    } catch (const std::exception& e) {
      o.fail(std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (all[i].limit_s > 0 && secs > all[i].limit_s) o.fail("over the " + std::to_string(static_cast<int>(all[i].limit_s)) + " s limit");
    failed += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  " << i + 1 << ". " << all[i].name << ": " << o.detail.str() << " ("
              << std::fixed << std::setprecision(1) << secs << " s)" << std::endl;
  }
  return failed ? 1 : 0;
}
