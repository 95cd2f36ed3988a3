#pragma once

#include <string>

#include "lamina/complex.hpp"

namespace lamina {

/// Relabeling-invariant fingerprint: unchanged by renaming sectors, edges or
/// vertices, rotating or reordering circuits, or reorienting a sector.
/// Isomorphic complexes always agree; distinct ones agree only on a hash collision
/// of the colour refinement, so treat equality as "same up to relabeling" in tests.
std::string canonical_signature(const BranchedSurfaceComplex& b);

/// Renames sectors, edges and vertices in an order fixed by the structure alone
/// (ties fall back to the old ids). Running a lowest-id rule after this makes
/// the outcome independent of how the input was labelled.
BranchedSurfaceComplex canonicalize(const BranchedSurfaceComplex& b);

}  // namespace lamina
