#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace lamina {

using SectorId = std::string;
using EdgeId = std::string;
using VertexId = std::string;

/// Natural ordering on ids: digit runs compare numerically, so "D2" < "D10".
bool id_less(const std::string& a, const std::string& b);

struct IdLess {
  bool operator()(const std::string& a, const std::string& b) const { return id_less(a, b); }
};

// Branch direction across a locus edge points from the two SOURCE sheets into
// the single SINK sheet.
enum class Slot { sink, source_through, source_merge };
enum class Side { left, right, unknown };
enum class Orientability { orientable, nonorientable, unknown };
enum class Tri { asserted_true, asserted_false, unknown };

constexpr bool is_source(Slot s) { return s != Slot::sink; }

struct BoundaryEntry {
  std::optional<EdgeId> edge;  // nullopt marks a free-boundary arc (part of the boundary of B)
  Slot slot = Slot::sink;
  Side side = Side::unknown;

  bool is_free() const { return !edge.has_value(); }
  static BoundaryEntry free_arc() { return BoundaryEntry{std::nullopt, Slot::sink, Side::unknown}; }
  bool operator==(const BoundaryEntry&) const = default;
};

using Circuit = std::vector<BoundaryEntry>;

struct Sector {
  int euler_char = 1;
  Orientability orientable = Orientability::orientable;
  std::vector<Circuit> circuits;
  bool essential_curve = false;  // user assertion: contains a curve nontrivial in M

  bool is_disk() const { return euler_char == 1 && circuits.size() == 1; }
  bool has_free_boundary() const;
  bool operator==(const Sector&) const = default;
};

struct Occurrence {
  SectorId sector;
  std::size_t circuit = 0;
  std::size_t position = 0;
  auto operator<=>(const Occurrence&) const = default;
};

struct VertexEnd {
  VertexId vertex;
  int port = 0;
  bool operator==(const VertexEnd&) const = default;
};

struct EdgeEnd {
  EdgeId edge;
  int end = 0;  // 0 or 1: which endpoint of the edge
  bool operator==(const EdgeEnd&) const = default;
};

struct LocusEdge {
  std::optional<std::array<VertexEnd, 2>> endpoints;  // nullopt: closed loop
  Occurrence sink;
  Occurrence source_a;
  Occurrence source_b;

  bool closed_loop() const { return !endpoints.has_value(); }
  bool operator==(const LocusEdge&) const = default;
};

enum class VertexKind { crossing, subdivision };

/// Ports are positions in `ends`. A crossing has ports 0..3 with strands {0,1}
/// and {2,3}; a subdivision has ports 0,1 on one strand.
struct LocusVertex {
  VertexKind kind = VertexKind::subdivision;
  std::vector<EdgeEnd> ends;
  bool operator==(const LocusVertex&) const = default;
};

struct GoFlags {
  Tri horizontal_boundary_incompressible = Tri::unknown;
  Tri no_monogon = Tri::unknown;
  Tri no_reeb_component = Tri::unknown;
  Tri complement_irreducible = Tri::unknown;
  Tri no_sphere_boundary = Tri::unknown;

  bool all_asserted() const { return missing().empty(); }
  /// Names of flags that are not asserted-true.
  std::vector<std::string> missing() const;
  std::vector<std::pair<std::string, Tri>> items() const;
  bool operator==(const GoFlags&) const = default;
};

struct BranchedSurfaceComplex {
  std::string name;
  std::map<SectorId, Sector, IdLess> sectors;
  std::map<EdgeId, LocusEdge, IdLess> edges;
  std::map<VertexId, LocusVertex, IdLess> vertices;
  GoFlags assertions;
  /// Bubble pairs the caller confirmed as trivial (ordered, lower id first).
  std::vector<std::pair<SectorId, SectorId>> confirmed_bubbles;

  const BoundaryEntry& entry(const Occurrence& occ) const;
  /// The three occurrences of an edge, sink first.
  std::array<Occurrence, 3> occurrences(const EdgeId& e) const;
  /// Rebuilds every edge's occurrence references from the sector circuits.
  /// Edges whose circuit entries are not exactly one SINK plus two SOURCE are left untouched.
  void reindex();
  bool is_confirmed_bubble(const SectorId& a, const SectorId& b) const;

  bool operator==(const BranchedSurfaceComplex&) const = default;
};

struct Violation {
  std::string code;
  std::string message;
  std::vector<std::string> ids;
};

/// Checks every structural invariant; empty result means the complex is valid.
std::vector<Violation> validate(const BranchedSurfaceComplex& b);

/// Permitted-but-unusual features: immersed self-adjacency, unknown orientability.
std::vector<Violation> lint(const BranchedSurfaceComplex& b);

class InvalidComplex : public std::runtime_error {
 public:
  explicit InvalidComplex(std::vector<Violation> violations);
  const std::vector<Violation>& violations() const { return violations_; }

 private:
  std::vector<Violation> violations_;
};

void require_valid(const BranchedSurfaceComplex& b);

std::string to_string(Slot s);
std::string to_string(Side s);
std::string to_string(Orientability o);
std::string to_string(Tri t);
std::string to_string(VertexKind k);

Side opposite(Side s);

}  // namespace lamina
