#pragma once

// Low-level surgery on complexes shared by deletion, bubble collapse and
// splitting. Callers are expected to reindex() and validate afterwards.

#include <map>
#include <set>
#include <stdexcept>
#include <string>

#include "lamina/complex.hpp"

namespace lamina {

class RewriteError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Sector renaming produced by a rewrite: every surviving original id maps to its image.
using SectorImage = std::map<SectorId, SectorId, IdLess>;

/// Glues the two sheets that remain at edge `e` smoothly across it and removes
/// the edge from every circuit. Exactly two circuit entries must still name `e`.
/// Merged sectors keep the lower id; `image` is updated accordingly.
/// The edge record itself is left in place; drop it with drop_edges().
void splice_across(BranchedSurfaceComplex& b, const EdgeId& e, SectorImage& image);

/// Removes edges from the edge table and repairs vertices: a crossing that
/// loses ends becomes a subdivision, vertices with no ends are deleted, and
/// dangling ends are re-paired through fresh subdivision vertices (or close
/// an edge into a loop when both of its ends dangle).
void drop_edges(BranchedSurfaceComplex& b, const std::set<EdgeId, IdLess>& doomed);

/// Remove sector `s` and splice the remaining two sheets across every edge of
/// its boundary. Shared by removable-disk deletion and bubble collapse.
SectorImage excise_sector(BranchedSurfaceComplex& b, const SectorId& s);

/// Throws RewriteError if the complex now holds a sphere sector, and
/// InvalidComplex for any other violation.
void require_valid_after_rewrite(const BranchedSurfaceComplex& b, const std::string& op);

/// An id not yet used as a vertex id, derived from `base`.
VertexId fresh_vertex_id(const BranchedSurfaceComplex& b, const VertexId& base);

}  // namespace lamina
