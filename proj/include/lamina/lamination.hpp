#pragma once

// Finite symbolic 1-D laminations: a transversal fiber I = [-1, 1] carrying
// isolated points and labeled Cantor blocks, with the return map of the
// lamination around an annulus. Plus the collar around the branch locus and
// the boundary train tracks of the branches.

#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "lamina/complex.hpp"
#include "lamina/decompose.hpp"
#include "lamina/holonomy.hpp"

namespace lamina {

class LaminationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct FiberElement {
  Rational lo, hi;  // lo == hi: an isolated point, otherwise the hull of a Cantor block
  std::string label;
  bool is_point() const { return lo == hi; }
  bool operator==(const FiberElement&) const = default;
};

// Leaves through (from, to) wind toward `to` when direction is +1, toward
// `from` when -1. Both limits are fixed by the return map.
struct Spiral {
  std::size_t element = 0;
  Rational from, to;
  int direction = 0;
  bool operator==(const Spiral&) const = default;
};

struct AnnulusLamination {
  std::vector<FiberElement> fibers;
  HoloMap return_map;  // exact; maps every element onto itself
  std::vector<Spiral> spirals;

  bool all_circles() const { return spirals.empty(); }
};

/// Checks the fiber set (sorted, disjoint, inside I) and that the exact
/// return map preserves every element; derives the spiral annotations.
AnnulusLamination make_annulus_lamination(std::vector<FiberElement> fibers, HoloMap return_map);

/// Everything wrong with a lamination as given, including stale spirals.
std::vector<std::string> lamination_problems(const AnnulusLamination& mu);

bool same_lamination(const AnnulusLamination& a, const AnnulusLamination& b);

// ---------------------------------------------------------------------------
// Boundary train tracks

// Shape of the tail edge near its ends: the collar adds a corner next to each
// crossing of the branch locus.
enum class AttachPattern { plain, one_corner, two_corners };
std::string to_string(AttachPattern p);

enum class TailSide { above, below, unknown };
std::string to_string(TailSide s);

struct TrackPosition {
  std::optional<EdgeId> edge;  // nullopt: free arc
  Slot slot = Slot::sink;
  Side side = Side::unknown;
};

struct Tail {
  std::size_t circle = 0;
  std::size_t position = 0;
  EdgeId edge;
  AttachPattern pattern = AttachPattern::plain;
  int switch_direction = 0;  // +1 / -1 along the circle's traversal, 0 when the side is unknown
  TailSide side = TailSide::unknown;
};

struct TrackSite {
  std::size_t circle = 0;
  std::size_t position = 0;
  auto operator<=>(const TrackSite&) const = default;
};

struct BoundaryTrainTrack {
  SectorId sector;
  std::vector<std::vector<TrackPosition>> circles;  // one per boundary circuit
  std::vector<Tail> tails;
  std::optional<TrackSite> puncture;  // midpoint of a designated outward edge
};

/// Points in which the fiber over the midpoint of a position meets the track:
/// two at an inward edge (both source sheets still apart), otherwise one.
int fiber_points(const BoundaryTrainTrack& t, const TrackSite& at);

struct CutRecord {
  TrackSite puncture;
  HoloMap cut;  // the return map that was cut out; gluing it back undoes the reglue
};

/// Cuts along the puncture fiber and reglues so every leaf closes up.
/// Throws LaminationError when the puncture fiber does not meet the track in
/// exactly one point.
std::pair<AnnulusLamination, CutRecord> reglue_to_circles(const AnnulusLamination& mu, const BoundaryTrainTrack& track);

/// Inverse of reglue_to_circles.
AnnulusLamination unreglue(const AnnulusLamination& mu, const CutRecord& record);

// ---------------------------------------------------------------------------
// Collar around the branch locus

struct CollarPiece {
  std::string id;
  bool at_vertex = false;
  std::string locus;               // edge id, or vertex id for a crossing
  std::vector<SectorId> sheets;    // edge pieces: sink, source_a, source_b
  std::vector<EdgeId> incident;    // vertex pieces: edges ending there
};

struct LocusArc {
  std::vector<EdgeId> edges;
  bool closed = false;
};

struct CollarComplex {
  std::vector<CollarPiece> pieces;
  std::vector<LocusArc> locus;  // the collar's branch locus: simple arcs and circles
  std::map<SectorId, std::string, IdLess> component;  // branch -> its complementary component
  std::map<SectorId, BoundaryTrainTrack, IdLess> tracks;  // disks, and other branches without free boundary arcs
};

/// Throws InvalidComplex for invalid input.
CollarComplex build_collar(const BranchedSurfaceComplex& b);

/// Structural self-check: simple locus, branch/component bijection, tracks
/// matching the slot data. Empty when consistent.
std::vector<std::string> collar_problems(const BranchedSurfaceComplex& b, const CollarComplex& c);

/// Cantor-block product lamination on the collar: each source sheet of an edge
/// piece carries one block, glued into the sink fiber by a monotone bijection
/// (affine onto its image block, then `glue_*`).
struct EdgeGluing {
  FiberElement block_a, block_b;  // in the source sheets' fibers
  FiberElement image_a, image_b;  // in the sink fiber
  HoloMap glue_a, glue_b;
};

struct CollarLamination {
  std::map<EdgeId, EdgeGluing, IdLess> gluings;
};

/// Blocks [-1, 1] glued onto [-1, -1/3] and [1/3, 1]; glue_a is the standard
/// push and glue_b its inverse.
CollarLamination collar_lamination(const CollarComplex& c);

/// Fibers of the collar not met by the lamination, as readable strings.
std::vector<std::string> fiber_scan(const CollarComplex& c, const CollarLamination& lam);

/// Holonomy factor of one boundary position: the sheet's own gluing at a source
/// slot, the concatenation of both incoming gluings at a sink slot, identity on
/// free arcs.
HoloMap position_factor(const BranchedSurfaceComplex& b, const CollarLamination& lam, const BoundaryEntry& e,
                        const Occurrence& at);

/// Return map around a circuit, read at the midpoint of `start`: the factors of
/// start+1, start+2, ..., start are applied in that order.
HoloMap circuit_holonomy(const BranchedSurfaceComplex& b, const CollarLamination& lam, const SectorId& s,
                         std::size_t circuit, std::size_t start);

/// Boundary tracks of a cycle core: one circle per boundary of the annulus
/// (one for a Möbius band) with the tails of the third sheets, above or below
/// according to their side relative to the cycle.
std::vector<BoundaryTrainTrack> core_tracks(const BranchedSurfaceComplex& b, const Cycle& cycle, const CoreAnnulus& core);

// ---------------------------------------------------------------------------
// Extending across an annulus between two boundary circles

enum class AnnulusCase { c1a, c1b, c1c, c2a, c2b };
std::string to_string(AnnulusCase c);
AnnulusCase annulus_case_from_string(const std::string& s);

// The leaf through the isolated circle at the edge of one side.
struct LeafProfile {
  bool compact_planar = false;
  bool meets_own_j = false;    // has another boundary circle in the J annulus on its own side
  bool meets_other_j = false;  // has a boundary circle in the J annulus of the other side
  bool free_component = false; // has a boundary circle outside both J annuli
};

/// Which of the five configurations applies; `swapped` is set when the sides
/// had to be exchanged so the non-planar leaf comes first.
AnnulusCase classify_annulus(const LeafProfile& l1, const LeafProfile& l2, bool* swapped = nullptr);

// Side i carries K_i (the new collar next to the isolated circle) and J_i (the
// old boundary lamination). Both sides become concatenate([K1, J1]) and
// concatenate([J2, K2]) on the halves of I.
struct AnnulusWitness {
  AnnulusCase kind = AnnulusCase::c1a;
  bool swapped = false;
  HoloMap f1, f2;                 // old holonomies of the two sides
  std::optional<Rational> split1, split2;  // fixed points where J1 / J2 were opened
  HoloMap k1, k2, j1, j2;         // new holonomies on K_i and J_i
  std::optional<HoloMap> g, mu;   // solutions used by cases 1c, 2a, 2b
};

/// Fixed point of an exact map strictly inside I, lowest first.
std::optional<Rational> interior_fixed_point(const HoloMap& f);

AnnulusWitness annulus_extension(const HoloMap& f1, const HoloMap& f2, AnnulusCase kind);

/// Residual-checked relations of a witness; empty when they hold to eps at
/// `samples` points (plus exact restriction checks).
std::vector<std::string> annulus_witness_problems(const AnnulusWitness& w, const Rational& eps, int samples);

/// Sample points k/n, k = -n..n, plus a few with odd denominators.
std::vector<Rational> sample_points(int samples);
/// Largest |f(z) - g(z)| over the sample points, each side evaluated to eps / 4.
Rational max_residual(const HoloMap& f, const HoloMap& g, const std::vector<Rational>& zs, const Rational& eps);

}  // namespace lamina
