#pragma once

#include <cstdint>
#include <stdexcept>

#include "lamina/complex.hpp"

namespace lamina::gen {

class GeneratorError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Disk S is the sole SINK sheet of closed loop c; annulus W holds both sources.
BranchedSurfaceComplex disk_sink();

/// Two disks D1, D2 bounding a bubble over closed loop e; annulus E is the sink
/// sheet and has one free boundary circle.
BranchedSurfaceComplex pita();

/// disk_sink() with a bubble inflated inside S: S becomes an annulus sinking
/// along a second loop b whose sources are the bubble disks D1, D2.
BranchedSurfaceComplex bubble_over_sink();

/// Disks D1..Dk arranged in a cycle: edge E_i leaves D_i into D_{i+1}; the
/// third sheet of every E_i is the tail annulus T (free outer boundary).
BranchedSurfaceComplex necklace(int k);

/// necklace(k) with the tail replaced by a disk, so every sector is a disk.
BranchedSurfaceComplex necklace_all_disk(int k);

/// necklace(k) with one side flag reversed so the core is a Möbius band.
BranchedSurfaceComplex coherent_mobius(int k);

/// A closed orientable sector of the given genus and no branch locus.
BranchedSurfaceComplex closed_surface(int genus);

struct RandomOptions {
  int max_sectors = 8;
  int max_edges = 6;
  bool all_disk = false;         // every sector a disk, no free boundary
  bool allow_free = true;        // free-boundary arcs
  bool allow_unknown = true;     // UNKNOWN sides and orientability
  bool walks = false;            // circuits are closed walks through the locus vertices
  double bubble_chance = 0.15;   // chance of adding a bubble pair
};

inline constexpr int kRandomSizeCap = 64;

/// A valid complex with at most `size` sectors (size ≤ kRandomSizeCap),
/// determined by `seed` and the options.
BranchedSurfaceComplex random(std::uint64_t seed, int size, const RandomOptions& opts = {});

}  // namespace lamina::gen
