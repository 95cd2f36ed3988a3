#pragma once

// Safe regions and local splittings that only ever enlarge them.
//
// Directions associated with a region R: an arc whose sink sheet and at least
// one source sheet lie in R is interior (R is locally a smooth surface there)
// and carries its branch direction; every other arc of R, free arcs included,
// is on the boundary of R and points into R.

#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "lamina/complex.hpp"
#include "lamina/detect.hpp"

namespace lamina {

class SplitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using SafeRegion = SectorSet;

struct SafetyReport {
  bool safe = true;
  std::vector<SectorId> violating;  // disks pointing all inward; non-disks doing so without an essential curve
};

/// Throws SplitError for sector ids not in `b`.
SafetyReport is_safe_region(const BranchedSurfaceComplex& b, const SafeRegion& region);

/// Closure under absorbing every sheet of an edge whose sink lies in the region.
/// Edges are scanned lowest id first (highest first with `reverse_order`).
/// Throws SplitError unless the input is safe.
SafeRegion expand_safe_region(const BranchedSurfaceComplex& b, const SafeRegion& region, bool reverse_order = false);

struct LaminarVerdict {
  bool laminar_conditional = false;
  SafeRegion closure;
  std::vector<SectorId> uncovered;
  std::vector<std::string> missing_assertions;
  std::set<SectorPair> unconfirmed_bubbles;
};

/// Throws SplitError unless `region` is safe.
LaminarVerdict certify_laminar(const BranchedSurfaceComplex& b, const SafeRegion& region);

enum class Necessity { necessary, unnecessary };

// Site: edge `edge`. Its sink is the middle sheet M; `orientation` picks the
// moving sheet S among the two sources, the other source P being the region
// sheet S moves against.
//   kind 1 (slide): S slides across P. Afterwards P is the sink and S, M feed into it.
//   kind 2 (merge): S and P continue into each other. Afterwards S is the sink.
struct SplitMove {
  int kind = 1;
  EdgeId edge;
  std::optional<std::string> orientation;  // "a" or "b": S is source_a or source_b
};

Necessity necessity(const BranchedSurfaceComplex& b, const SafeRegion& region, const SplitMove& m);

struct SplitResult {
  BranchedSurfaceComplex complex;
  SafeRegion region;
  SectorId moved;  // S
};

/// Throws SplitError for an unsafe region, a site mismatch or an unnecessary move.
SplitResult apply_split_move(const BranchedSurfaceComplex& b, const SafeRegion& region, const SplitMove& m);

/// One move per line: `split <kind> @ <edge-id> [a|b]`. Blank lines and `#`
/// comments are skipped. Throws SplitError naming the line.
std::vector<SplitMove> parse_split_script(const std::string& text);

struct TraceEntry {
  BranchedSurfaceComplex complex;
  SafeRegion region;
};

struct SplitTrace {
  std::vector<TraceEntry> entries;   // the expanded input first, then one per applied move
  std::optional<std::size_t> failed_move;  // 1-based index of the move that aborted the script
  std::string error;
};

/// Expands the region, then applies and re-expands after every move.
SplitTrace run_split_script(const BranchedSurfaceComplex& b, const SafeRegion& region, const std::vector<SplitMove>& moves);

std::string to_string(Necessity n);

}  // namespace lamina
