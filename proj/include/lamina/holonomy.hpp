#pragma once

// Orientation-preserving homeomorphisms of I = [-1, 1] fixing both endpoints.
// A HoloMap is an immutable node in a DAG: exact piecewise-linear leaves, and
// lazy nodes (composites, conjugacy witnesses, self-similar systems) evaluated
// through rational interval enclosures.

#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "lamina/rational.hpp"

namespace lamina {

class HoloError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct HoloNode;

class HoloMap {
 public:
  /// The identity.
  HoloMap();

  /// Exact PL map through (xs[i], ys[i]); both sequences strictly increasing
  /// and running from -1 to 1. Throws HoloError otherwise.
  static HoloMap pl(std::vector<Rational> xs, std::vector<Rational> ys);
  static HoloMap identity() { return HoloMap(); }

  bool is_exact() const;
  /// Breakpoints of an exact map; throws HoloError for lazy maps.
  const std::vector<Rational>& xs() const;
  const std::vector<Rational>& ys() const;

  const std::shared_ptr<const HoloNode>& node() const { return node_; }
  explicit HoloMap(std::shared_ptr<const HoloNode> n) : node_(std::move(n)) {}

 private:
  std::shared_ptr<const HoloNode> node_;
};

struct EvalStats {
  int level = 0;         // refinement rounds before the enclosure met the tolerance
  int max_depth = 0;     // deepest self-similar descent
  long iterations = 0;   // orbit steps taken by conjugacy witnesses
};

/// Exact for exact maps; otherwise a rational within `eps` of the true value.
Rational evaluate(const HoloMap& f, const Rational& z, const Rational& eps = Rational(1, 1000000000000L),
                  EvalStats* stats = nullptr);

/// Exact value of an exact map.
Rational apply_exact(const HoloMap& f, const Rational& z);

HoloMap compose(const HoloMap& f, const HoloMap& g);  // z -> f(g(z))
HoloMap invert(const HoloMap& f);
HoloMap commutator(const HoloMap& g, const HoloMap& h);  // g h g^-1 h^-1

/// Same exact map with collinear breakpoints removed.
HoloMap simplify(const HoloMap& f);
/// Exact maps only: equal as functions.
bool same_function(const HoloMap& f, const HoloMap& g);

/// Pointwise maximum of two exact maps.
HoloMap pl_max(const HoloMap& a, const HoloMap& b);

/// Exact maps: +1 when f(z) > z on (-1, 1), -1 when f(z) < z there, 0 otherwise.
/// `witness` receives a point violating the strict sign when the result is 0.
int diagonal_sign(const HoloMap& f, Rational* witness = nullptr);

/// Exact f restricted to an invariant [a, b] (f(a) = a, f(b) = b), rescaled to I.
HoloMap restrict_to(const HoloMap& f, const Rational& a, const Rational& b);

/// Maximal open intervals where an exact f moves points; sign is that of f(z) - z.
struct MovedInterval {
  Rational lo, hi;
  int sign = 0;
};
std::vector<MovedInterval> moved_intervals(const HoloMap& f);

/// Strictly increasing cut points from -1 to 1 (at least one subinterval).
struct Partition {
  std::vector<Rational> cuts;
  static Partition uniform(std::size_t pieces);
  void check() const;
  std::size_t pieces() const { return cuts.size() - 1; }
};

/// Acts on [c_{i-1}, c_i] by the affine conjugate of maps[i]. Exact when all inputs are.
HoloMap concatenate(const std::vector<HoloMap>& maps, const Partition& p);

/// q with q∘f = p∘q, q affine on the fundamental domain between 0 and f(0).
/// Requires f and p both above or both below the diagonal; the error message
/// names a point where the sign fails.
HoloMap conjugacy_witness(const HoloMap& f, const HoloMap& p);

/// (g, h) with g h g^-1 h^-1 = f.
std::pair<HoloMap, HoloMap> commutator_factorization(const HoloMap& f);

/// f = [a1,b1] ∘ ... ∘ [ag,bg]; the pairs after the first are identities.
std::vector<std::pair<HoloMap, HoloMap>> genus_factorization(const HoloMap& f, int genus);

/// Missing blocks are dropped from the concatenation and the partition is
/// split evenly among the blocks that remain.
struct ConcatSolutionI {
  HoloMap g;
  Partition partition;  // partition of the defining concatenation
};
/// g = concatenate([f, g, h]) (self-similar).
ConcatSolutionI solve_concatenation_i(const std::optional<HoloMap>& f, const std::optional<HoloMap>& h);

struct ConcatSolutionII {
  HoloMap g;
  HoloMap mu;
  Partition partition_g;   // g = concatenate([sigma, mu^-1, tau])
  Partition partition_mu;  // mu = concatenate([f, g^-1, h])
};
ConcatSolutionII solve_concatenation_ii(const std::optional<HoloMap>& f, const std::optional<HoloMap>& h,
                                        const std::optional<HoloMap>& sigma, const std::optional<HoloMap>& tau);

/// Exact maps serialize as their (breakpoint, value) list; lazy ones as the node DAG.
nlohmann::json to_json(const HoloMap& f);
HoloMap holo_from_json(const nlohmann::json& j);

/// Above-diagonal 2-piece map through (0, 1/2).
HoloMap standard_push();

}  // namespace lamina
