#pragma once

// Out-edge digraph on disk sectors: every disk picks one locus edge where it is
// a SOURCE sheet; the target is that edge's SINK sector.

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "lamina/complex.hpp"

namespace lamina {

class DecompositionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// D1 -> D2 -> ... -> Dk, closing back to D1.
using Cycle = std::vector<SectorId>;

struct Chain {
  std::vector<SectorId> disks;  // in processing order: each feeds the next
  SectorId target;              // cycle disk, non-disk sector, or a disk of a later chain
};

struct ChainCycleDecomposition {
  std::map<SectorId, EdgeId, IdLess> out_edge;
  std::vector<Cycle> cycles;  // pairwise disjoint, each rotated to start at its lowest id
  std::vector<Chain> chains;  // every chain precedes the chain its target belongs to
};

/// Edges on which `s` is a SOURCE sheet, lowest id first.
std::vector<EdgeId> outward_edges(const BranchedSurfaceComplex& b, const SectorId& s);

/// Maximum number of disjoint cycles, then an acyclic assignment for the rest.
/// Throws DecompositionError when a sink disk exists or a disk has no outward edge.
ChainCycleDecomposition decompose_chains_cycles(const BranchedSurfaceComplex& b);

enum class CoreKind { annulus, mobius, unknown };
std::string to_string(CoreKind k);

struct CoreStep {
  EdgeId edge;
  Occurrence exit;   // SOURCE occurrence of the cycle disk leaving through the edge
  Occurrence enter;  // SINK occurrence of the next cycle disk
  Occurrence tail;   // the third sheet
};

struct CoreAnnulus {
  CoreKind kind = CoreKind::unknown;
  std::vector<CoreStep> steps;
};

/// Throws DecompositionError when consecutive disks are not joined by their out-edges.
CoreAnnulus cycle_core(const BranchedSurfaceComplex& b, const Cycle& cycle,
                       const std::map<SectorId, EdgeId, IdLess>& out_edge);

/// Some cycle among the disks when every sector is a disk and none is a sink disk.
std::optional<Cycle> all_disk_cycle_witness(const BranchedSurfaceComplex& b);

/// Nodes: every disk (ellipse) and every non-disk target (box); one arrow per out-edge.
std::string export_dot(const BranchedSurfaceComplex& b, const ChainCycleDecomposition& d);

}  // namespace lamina
