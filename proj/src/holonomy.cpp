#include "lamina/holonomy.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <variant>

namespace lamina {

namespace {

struct PlNode {
  std::vector<Rational> xs, ys;
};

// parts[0] ∘ parts[1] ∘ ...
struct ComposeNode {
  std::vector<HoloMap> parts;
};

// q(z) = p^n(q0(g^-n(z))) where g^n(0) <= z < g^(n+1)(0). g and p are exact and
// above the diagonal; q0 maps [0, g(0)] onto [0, p(0)].
struct ConjNode {
  HoloMap g, g_inv, p, p_inv;
  std::vector<Rational> q0x, q0y;
};

struct Block {
  std::optional<HoloMap> map, map_inv;  // set for an ordinary block
  int self = -1;                        // otherwise a map of the same system
  bool inverted = false;
};

struct Definition {
  std::vector<Rational> cuts;
  std::vector<Block> blocks;
};

struct System {
  std::vector<Definition> defs;
};

struct RefNode {
  std::shared_ptr<const System> sys;
  int index = 0;
  bool inverted = false;
};

}  // namespace

struct HoloNode {
  std::variant<PlNode, ComposeNode, ConjNode, RefNode> v;
};

namespace {

const Rational kOne(1), kMinusOne(-1);

void check_pl(const std::vector<Rational>& xs, const std::vector<Rational>& ys) {
  if (xs.size() != ys.size() || xs.size() < 2) throw HoloError("PL map needs matching breakpoint and value lists of length >= 2");
  if (xs.front() != kMinusOne || xs.back() != kOne) throw HoloError("PL breakpoints must run from -1 to 1");
  if (ys.front() != kMinusOne || ys.back() != kOne) throw HoloError("PL map must fix -1 and 1");
  for (std::size_t i = 1; i < xs.size(); ++i) {
    if (!(xs[i - 1] < xs[i])) throw HoloError("PL breakpoints must be strictly increasing");
    if (!(ys[i - 1] < ys[i])) throw HoloError("PL values must be strictly increasing at breakpoint " + format_rational(xs[i]));
  }
}

Rational interp(const std::vector<Rational>& xs, const std::vector<Rational>& ys, const Rational& z) {
  auto it = std::upper_bound(xs.begin(), xs.end(), z);
  if (it == xs.begin()) return ys.front();
  if (it == xs.end()) return ys.back();
  const auto i = static_cast<std::size_t>(it - xs.begin());
  const Rational& x0 = xs[i - 1];
  if (z == x0) return ys[i - 1];
  return ys[i - 1] + (ys[i] - ys[i - 1]) * (z - x0) / (xs[i] - x0);
}

const PlNode& pl_of(const HoloMap& f) {
  const auto* p = std::get_if<PlNode>(&f.node()->v);
  if (!p) throw HoloError("operation requires an exact PL map");
  return *p;
}

HoloMap make(HoloNode n) { return HoloMap(std::make_shared<const HoloNode>(std::move(n))); }

HoloMap pl_raw(std::vector<Rational> xs, std::vector<Rational> ys) {
  return make(HoloNode{PlNode{std::move(xs), std::move(ys)}});
}

struct Interval {
  Rational lo, hi;
};

struct Ctx {
  unsigned long bits;
  EvalStats* stats;
};

// Outward rounding to the dyadic grid 2^-bits once denominators outgrow it.
void round_out(Interval& iv, unsigned long bits) {
  auto too_big = [&](const Rational& r) { return mpz_sizeinbase(r.get_den_mpz_t(), 2) > bits + 8; };
  mpz_class scale;
  mpz_ui_pow_ui(scale.get_mpz_t(), 2, bits);
  if (too_big(iv.lo)) {
    mpz_class t = iv.lo.get_num() * scale;
    mpz_fdiv_q(t.get_mpz_t(), t.get_mpz_t(), iv.lo.get_den_mpz_t());
    iv.lo = Rational(t, scale);
    iv.lo.canonicalize();
    if (iv.lo < kMinusOne) iv.lo = kMinusOne;
  }
  if (too_big(iv.hi)) {
    mpz_class t = iv.hi.get_num() * scale;
    mpz_cdiv_q(t.get_mpz_t(), t.get_mpz_t(), iv.hi.get_den_mpz_t());
    iv.hi = Rational(t, scale);
    iv.hi.canonicalize();
    if (iv.hi > kOne) iv.hi = kOne;
  }
}

Interval eval_node(const HoloNode& n, const Rational& z, const Rational& tol, Ctx& ctx, int depth);

Interval eval_map(const HoloMap& f, const Rational& z, const Rational& tol, Ctx& ctx, int depth) {
  return eval_node(*f.node(), z, tol, ctx, depth);
}

Interval eval_conj(const ConjNode& c, const Rational& z, const Rational& tol, Ctx& ctx) {
  if (z == 0 || z == kOne || z == kMinusOne) return {z, z};
  const auto& g = pl_of(c.g);
  const auto& gi = pl_of(c.g_inv);
  const auto& p = pl_of(c.p);
  const auto& pi = pl_of(c.p_inv);
  long n = 0;
  Rational a = 0, b = 0;
  if (z > 0) {
    while (true) {
      const Rational next = interp(g.xs, g.ys, a);
      if (z < next) break;
      a = next;
      b = interp(p.xs, p.ys, b);
      ++n;
      if (ctx.stats) ++ctx.stats->iterations;
      if (kOne - b <= tol) return {b, kOne};
    }
  } else {
    while (z < a) {
      a = interp(gi.xs, gi.ys, a);
      b = interp(pi.xs, pi.ys, b);
      --n;
      if (ctx.stats) ++ctx.stats->iterations;
      if (z < a && b - kMinusOne <= tol) return {kMinusOne, b};
    }
  }
  Rational w = z;
  for (long k = 0; k < n; ++k) w = interp(gi.xs, gi.ys, w);
  for (long k = 0; k < -n; ++k) w = interp(g.xs, g.ys, w);
  Rational v = interp(c.q0x, c.q0y, w);
  for (long k = 0; k < n; ++k) v = interp(p.xs, p.ys, v);
  for (long k = 0; k < -n; ++k) v = interp(pi.xs, pi.ys, v);
  Interval out{v, v};
  round_out(out, ctx.bits);
  return out;
}

Interval eval_ref(const RefNode& r, const Rational& z, const Rational& tol, Ctx& ctx, int depth) {
  if (ctx.stats) ctx.stats->max_depth = std::max(ctx.stats->max_depth, depth);
  const Definition& d = r.sys->defs[static_cast<std::size_t>(r.index)];
  auto it = std::upper_bound(d.cuts.begin(), d.cuts.end(), z);
  if (it == d.cuts.begin() || it == d.cuts.end()) return {z, z};
  const auto j = static_cast<std::size_t>(it - d.cuts.begin()) - 1;
  const Rational& c0 = d.cuts[j];
  const Rational& c1 = d.cuts[j + 1];
  if (z == c0) return {z, z};
  const Rational w = c1 - c0;
  const Rational t = (2 * z - c0 - c1) / w;
  const Rational local_tol = tol * 2 / w;
  const Block& blk = d.blocks[j];
  Interval iv;
  if (blk.map) {
    iv = eval_map(r.inverted ? *blk.map_inv : *blk.map, t, local_tol, ctx, depth);
  } else if (local_tol >= 2) {
    iv = {kMinusOne, kOne};
  } else {
    RefNode next{r.sys, blk.self, r.inverted != blk.inverted};
    iv = eval_ref(next, t, local_tol, ctx, depth + 1);
  }
  return {c0 + (iv.lo + 1) * w / 2, c0 + (iv.hi + 1) * w / 2};
}

Interval eval_node(const HoloNode& n, const Rational& z, const Rational& tol, Ctx& ctx, int depth) {
  if (const auto* p = std::get_if<PlNode>(&n.v)) {
    const Rational v = interp(p->xs, p->ys, z);
    return {v, v};
  }
  if (const auto* c = std::get_if<ComposeNode>(&n.v)) {
    Interval iv{z, z};
    for (auto it = c->parts.rbegin(); it != c->parts.rend(); ++it) {
      if (iv.lo == iv.hi) {
        iv = eval_map(*it, iv.lo, tol, ctx, depth);
      } else {
        const Rational lo = eval_map(*it, iv.lo, tol, ctx, depth).lo;
        iv.hi = eval_map(*it, iv.hi, tol, ctx, depth).hi;
        iv.lo = lo;
      }
      round_out(iv, ctx.bits);
    }
    return iv;
  }
  if (const auto* q = std::get_if<ConjNode>(&n.v)) return eval_conj(*q, z, tol, ctx);
  return eval_ref(std::get<RefNode>(n.v), z, tol, ctx, depth);
}

unsigned long bits_for(const Rational& eps) {
  // smallest k with 2^-k <= eps
  unsigned long k = 0;
  Rational t = eps;
  while (t < 1) {
    t *= 2;
    ++k;
  }
  return k;
}

std::vector<Rational> merged(std::vector<Rational> a, const std::vector<Rational>& b) {
  a.insert(a.end(), b.begin(), b.end());
  std::sort(a.begin(), a.end());
  a.erase(std::unique(a.begin(), a.end()), a.end());
  return a;
}

bool all_identity(const std::vector<std::optional<HoloMap>>& ms) {
  for (const auto& m : ms)
    if (m && !(m->is_exact() && same_function(*m, HoloMap()))) return false;
  return true;
}

Block plain_block(const HoloMap& m) { return Block{m, invert(m), -1, false}; }
Block self_block(int index, bool inverted) { return Block{std::nullopt, std::nullopt, index, inverted}; }

Definition define(const std::vector<std::optional<HoloMap>>& before, Block middle,
                  const std::vector<std::optional<HoloMap>>& after) {
  Definition d;
  for (const auto& m : before)
    if (m) d.blocks.push_back(plain_block(*m));
  d.blocks.push_back(std::move(middle));
  for (const auto& m : after)
    if (m) d.blocks.push_back(plain_block(*m));
  d.cuts = Partition::uniform(d.blocks.size()).cuts;
  return d;
}

HoloMap ref(std::shared_ptr<const System> sys, int index, bool inverted) {
  return make(HoloNode{RefNode{std::move(sys), index, inverted}});
}

}  // namespace

HoloMap::HoloMap() : node_(std::make_shared<const HoloNode>(HoloNode{PlNode{{kMinusOne, kOne}, {kMinusOne, kOne}}})) {}

HoloMap HoloMap::pl(std::vector<Rational> xs, std::vector<Rational> ys) {
  for (auto& x : xs) x.canonicalize();
  for (auto& y : ys) y.canonicalize();
  check_pl(xs, ys);
  return pl_raw(std::move(xs), std::move(ys));
}

bool HoloMap::is_exact() const { return std::holds_alternative<PlNode>(node_->v); }
const std::vector<Rational>& HoloMap::xs() const { return pl_of(*this).xs; }
const std::vector<Rational>& HoloMap::ys() const { return pl_of(*this).ys; }

Rational apply_exact(const HoloMap& f, const Rational& z) {
  const auto& p = pl_of(f);
  Rational c = z;
  c.canonicalize();
  return interp(p.xs, p.ys, c);
}

Rational evaluate(const HoloMap& f, const Rational& z_in, const Rational& eps, EvalStats* stats) {
  Rational z = z_in;
  z.canonicalize();
  if (z < kMinusOne || z > kOne) throw HoloError("evaluation point " + format_rational(z) + " outside [-1, 1]");
  if (f.is_exact()) return apply_exact(f, z);
  if (eps <= 0) throw HoloError("evaluation tolerance must be positive");
  const unsigned long base = bits_for(eps);
  Rational tol = eps;
  for (int level = 0; level < 40; ++level) {
    EvalStats local;
    Ctx ctx{base + 12 + 6 * static_cast<unsigned long>(level), &local};
    const Interval iv = eval_map(f, z, tol, ctx, 0);
    if (iv.hi - iv.lo <= 2 * eps) {
      if (stats) {
        *stats = local;
        stats->level = level;
      }
      return (iv.lo + iv.hi) / 2;
    }
    tol /= 64;
  }
  throw HoloError("evaluation at " + format_rational(z) + " did not reach the requested precision");
}

HoloMap compose(const HoloMap& f, const HoloMap& g) {
  if (f.is_exact() && g.is_exact()) {
    const auto& pf = pl_of(f);
    const auto& pg = pl_of(g);
    std::vector<Rational> pre;
    for (const auto& x : pf.xs) pre.push_back(interp(pg.ys, pg.xs, x));
    auto xs = merged(pg.xs, pre);
    std::vector<Rational> ys;
    ys.reserve(xs.size());
    for (const auto& x : xs) ys.push_back(interp(pf.xs, pf.ys, interp(pg.xs, pg.ys, x)));
    return pl_raw(std::move(xs), std::move(ys));
  }
  std::vector<HoloMap> parts;
  for (const auto* m : {&f, &g}) {
    if (const auto* c = std::get_if<ComposeNode>(&m->node()->v)) parts.insert(parts.end(), c->parts.begin(), c->parts.end());
    else parts.push_back(*m);
  }
  return make(HoloNode{ComposeNode{std::move(parts)}});
}

HoloMap invert(const HoloMap& f) {
  const HoloNode& n = *f.node();
  if (const auto* p = std::get_if<PlNode>(&n.v)) return pl_raw(p->ys, p->xs);
  if (const auto* c = std::get_if<ComposeNode>(&n.v)) {
    std::vector<HoloMap> parts;
    for (auto it = c->parts.rbegin(); it != c->parts.rend(); ++it) parts.push_back(invert(*it));
    return make(HoloNode{ComposeNode{std::move(parts)}});
  }
  if (const auto* q = std::get_if<ConjNode>(&n.v)) return make(HoloNode{ConjNode{q->p, q->p_inv, q->g, q->g_inv, q->q0y, q->q0x}});
  const auto& r = std::get<RefNode>(n.v);
  return ref(r.sys, r.index, !r.inverted);
}

HoloMap commutator(const HoloMap& g, const HoloMap& h) {
  return compose(compose(g, h), compose(invert(g), invert(h)));
}

HoloMap simplify(const HoloMap& f) {
  const auto& p = pl_of(f);
  std::vector<Rational> xs{p.xs.front()}, ys{p.ys.front()};
  for (std::size_t i = 1; i + 1 < p.xs.size(); ++i) {
    const Rational s0 = (p.ys[i] - ys.back()) / (p.xs[i] - xs.back());
    const Rational s1 = (p.ys[i + 1] - p.ys[i]) / (p.xs[i + 1] - p.xs[i]);
    if (s0 != s1) {
      xs.push_back(p.xs[i]);
      ys.push_back(p.ys[i]);
    }
  }
  xs.push_back(p.xs.back());
  ys.push_back(p.ys.back());
  return pl_raw(std::move(xs), std::move(ys));
}

bool same_function(const HoloMap& f, const HoloMap& g) {
  const auto& pf = pl_of(f);
  const auto& pg = pl_of(g);
  for (const auto& x : merged(pf.xs, pg.xs))
    if (interp(pf.xs, pf.ys, x) != interp(pg.xs, pg.ys, x)) return false;
  return true;
}

HoloMap pl_max(const HoloMap& a, const HoloMap& b) {
  const auto& pa = pl_of(a);
  const auto& pb = pl_of(b);
  const auto base = merged(pa.xs, pb.xs);
  std::vector<Rational> xs;
  auto diff = [&](const Rational& x) -> Rational { return interp(pa.xs, pa.ys, x) - interp(pb.xs, pb.ys, x); };
  for (std::size_t i = 0; i < base.size(); ++i) {
    xs.push_back(base[i]);
    if (i + 1 == base.size()) break;
    const Rational d0 = diff(base[i]), d1 = diff(base[i + 1]);
    if ((d0 > 0 && d1 < 0) || (d0 < 0 && d1 > 0)) xs.push_back(base[i] + (base[i + 1] - base[i]) * d0 / (d0 - d1));
  }
  std::vector<Rational> ys;
  for (const auto& x : xs) {
    Rational ya = interp(pa.xs, pa.ys, x), yb = interp(pb.xs, pb.ys, x);
    ys.push_back(ya < yb ? yb : ya);
  }
  return pl_raw(std::move(xs), std::move(ys));
}

int diagonal_sign(const HoloMap& f, Rational* witness) {
  const auto& p = pl_of(f);
  int sign = 0;
  for (std::size_t i = 1; i + 1 < p.xs.size(); ++i) {
    const int s = sgn(Rational(p.ys[i] - p.xs[i]));
    if (s == 0 || (sign != 0 && s != sign)) {
      if (witness) *witness = p.xs[i];
      return 0;
    }
    sign = s;
  }
  if (sign == 0 && witness) *witness = 0;
  return sign;
}

HoloMap restrict_to(const HoloMap& f, const Rational& a, const Rational& b) {
  const auto& p = pl_of(f);
  if (!(kMinusOne <= a && a < b && b <= kOne)) throw HoloError("restrict_to: need -1 <= a < b <= 1");
  if (interp(p.xs, p.ys, a) != a || interp(p.xs, p.ys, b) != b)
    throw HoloError("restrict_to: [" + format_rational(a) + ", " + format_rational(b) + "] is not invariant");
  const Rational w = b - a;
  auto local = [&](const Rational& x) -> Rational { return 2 * (x - a) / w - 1; };
  std::vector<Rational> xs{kMinusOne}, ys{kMinusOne};
  for (std::size_t i = 0; i < p.xs.size(); ++i)
    if (p.xs[i] > a && p.xs[i] < b) {
      xs.push_back(local(p.xs[i]));
      ys.push_back(local(p.ys[i]));
    }
  xs.push_back(kOne);
  ys.push_back(kOne);
  return pl_raw(std::move(xs), std::move(ys));
}

std::vector<MovedInterval> moved_intervals(const HoloMap& f) {
  const auto& p = pl_of(f);
  // f - id is linear between breakpoints, so zeros are breakpoints, whole
  // segments, or single crossings.
  std::vector<Rational> zeros;
  for (std::size_t i = 0; i < p.xs.size(); ++i) {
    if (p.ys[i] == p.xs[i]) zeros.push_back(p.xs[i]);
    if (i + 1 == p.xs.size()) break;
    const Rational d0 = p.ys[i] - p.xs[i], d1 = p.ys[i + 1] - p.xs[i + 1];
    if ((d0 > 0 && d1 < 0) || (d0 < 0 && d1 > 0)) zeros.push_back(p.xs[i] + (p.xs[i + 1] - p.xs[i]) * d0 / (d0 - d1));
  }
  std::vector<MovedInterval> out;
  for (std::size_t i = 0; i + 1 < zeros.size(); ++i) {
    const Rational mid = (zeros[i] + zeros[i + 1]) / 2;
    const int s = sgn(Rational(interp(p.xs, p.ys, mid) - mid));
    if (s != 0) out.push_back({zeros[i], zeros[i + 1], s});
  }
  return out;
}

Partition Partition::uniform(std::size_t pieces) {
  if (pieces == 0) throw HoloError("partition needs at least one piece");
  Partition p;
  for (std::size_t k = 0; k <= pieces; ++k)
    p.cuts.push_back(Rational(-1) + Rational(2 * static_cast<long>(k), static_cast<long>(pieces)));
  for (auto& c : p.cuts) c.canonicalize();
  return p;
}

void Partition::check() const {
  if (cuts.size() < 2) throw HoloError("partition needs at least one piece");
  if (cuts.front() != kMinusOne || cuts.back() != kOne) throw HoloError("partition must run from -1 to 1");
  for (std::size_t i = 1; i < cuts.size(); ++i)
    if (!(cuts[i - 1] < cuts[i])) throw HoloError("partition cuts must be strictly increasing");
}

HoloMap concatenate(const std::vector<HoloMap>& maps, const Partition& part) {
  part.check();
  if (maps.size() != part.pieces())
    throw HoloError("concatenate: " + std::to_string(maps.size()) + " maps for " + std::to_string(part.pieces()) +
                    " subintervals");
  const bool exact = std::all_of(maps.begin(), maps.end(), [](const HoloMap& m) { return m.is_exact(); });
  if (exact) {
    std::vector<Rational> xs, ys;
    for (std::size_t i = 0; i < maps.size(); ++i) {
      const Rational& c0 = part.cuts[i];
      const Rational w = part.cuts[i + 1] - c0;
      const auto& p = pl_of(maps[i]);
      for (std::size_t k = (i == 0 ? 0 : 1); k < p.xs.size(); ++k) {
        xs.push_back(c0 + (p.xs[k] + 1) * w / 2);
        ys.push_back(c0 + (p.ys[k] + 1) * w / 2);
      }
    }
    return pl_raw(std::move(xs), std::move(ys));
  }
  auto sys = std::make_shared<System>();
  Definition d;
  d.cuts = part.cuts;
  for (const auto& m : maps) d.blocks.push_back(plain_block(m));
  sys->defs.push_back(std::move(d));
  return ref(sys, 0, false);
}

HoloMap standard_push() { return HoloMap::pl({-1, 0, 1}, {-1, Rational(1, 2), 1}); }

HoloMap conjugacy_witness(const HoloMap& f, const HoloMap& p) {
  if (!f.is_exact() || !p.is_exact()) throw HoloError("conjugacy_witness requires exact PL maps");
  Rational wf, wp;
  const int sf = diagonal_sign(f, &wf);
  const int sp = diagonal_sign(p, &wp);
  if (sf == 0) throw HoloError("f is not fixed-point free: f(z) <= z or f(z) >= z fails at z = " + format_rational(wf));
  if (sp == 0) throw HoloError("p is not fixed-point free: sign changes at z = " + format_rational(wp));
  if (sf != sp) {
    const bool f_below = sf < 0;
    throw HoloError(std::string(f_below ? "f" : "p") + "(z) <= z at z = 0 while " + (f_below ? "p" : "f") +
                    " is above the diagonal");
  }
  const Rational f0 = apply_exact(f, 0);
  const Rational p0 = apply_exact(p, 0);
  if (sf > 0) {
    return make(HoloNode{ConjNode{f, invert(f), p, invert(p), {0, f0}, {0, p0}}});
  }
  // Below the diagonal: iterate f^-1, p^-1 instead. On [0, f^-1(0)] the map is
  // p^-1 ∘ A ∘ f with A affine from [f(0), 0] onto [p(0), 0].
  const HoloMap a = HoloMap::pl({-1, f0, 0, 1}, {-1, p0, 0, 1});
  const HoloMap full = compose(invert(p), compose(a, f));
  const Rational top = apply_exact(invert(f), 0);
  std::vector<Rational> qx{0}, qy{0};
  for (std::size_t i = 0; i < full.xs().size(); ++i)
    if (full.xs()[i] > 0 && full.xs()[i] < top) {
      qx.push_back(full.xs()[i]);
      qy.push_back(full.ys()[i]);
    }
  qx.push_back(top);
  qy.push_back(apply_exact(full, top));
  return make(HoloNode{ConjNode{invert(f), f, invert(p), p, qx, qy}});
}

std::pair<HoloMap, HoloMap> commutator_factorization(const HoloMap& f) {
  if (!f.is_exact()) throw HoloError("commutator_factorization requires an exact PL map");
  if (same_function(f, HoloMap())) return {HoloMap(), HoloMap()};
  // h dominates both f^-1 and the identity strictly, so h and f∘h are above the diagonal.
  const HoloMap h = simplify(compose(standard_push(), pl_max(invert(f), HoloMap())));
  const HoloMap fh = simplify(compose(f, h));
  const HoloMap q = conjugacy_witness(fh, h);  // q (f h) = h q, so f = q^-1 h q h^-1
  return {invert(q), h};
}

std::vector<std::pair<HoloMap, HoloMap>> genus_factorization(const HoloMap& f, int genus) {
  if (genus < 1) throw HoloError("genus must be at least 1");
  std::vector<std::pair<HoloMap, HoloMap>> out{commutator_factorization(f)};
  for (int i = 1; i < genus; ++i) out.emplace_back(HoloMap(), HoloMap());
  return out;
}

ConcatSolutionI solve_concatenation_i(const std::optional<HoloMap>& f, const std::optional<HoloMap>& h) {
  if ((!f && !h) || all_identity({f, h})) {
    const std::size_t pieces = 1 + (f ? 1 : 0) + (h ? 1 : 0);
    return {HoloMap(), Partition::uniform(pieces)};
  }
  auto sys = std::make_shared<System>();
  sys->defs.push_back(define({f}, self_block(0, false), {h}));
  Partition part{sys->defs[0].cuts};
  return {ref(sys, 0, false), part};
}

ConcatSolutionII solve_concatenation_ii(const std::optional<HoloMap>& f, const std::optional<HoloMap>& h,
                                        const std::optional<HoloMap>& sigma, const std::optional<HoloMap>& tau) {
  auto pieces = [](const std::optional<HoloMap>& a, const std::optional<HoloMap>& b) {
    return Partition::uniform(1 + (a ? 1 : 0) + (b ? 1 : 0));
  };
  ConcatSolutionII out{HoloMap(), HoloMap(), pieces(sigma, tau), pieces(f, h)};
  if (all_identity({f, h, sigma, tau}) || (!f && !h && !sigma && !tau)) return out;
  auto sys = std::make_shared<System>();
  if (!sigma && !tau) {
    // g = mu^-1, so mu = concatenate([f, mu, h]).
    sys->defs.push_back(define({f}, self_block(0, false), {h}));
    out.mu = ref(sys, 0, false);
    out.g = ref(sys, 0, true);
  } else if (!f && !h) {
    sys->defs.push_back(define({sigma}, self_block(0, false), {tau}));
    out.g = ref(sys, 0, false);
    out.mu = ref(sys, 0, true);
  } else {
    sys->defs.push_back(define({sigma}, self_block(1, true), {tau}));  // g
    sys->defs.push_back(define({f}, self_block(0, true), {h}));        // mu
    out.g = ref(sys, 0, false);
    out.mu = ref(sys, 1, false);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

using nlohmann::json;

json points(const std::vector<Rational>& xs, const std::vector<Rational>& ys) {
  json a = json::array();
  for (std::size_t i = 0; i < xs.size(); ++i) a.push_back({format_rational(xs[i]), format_rational(ys[i])});
  return a;
}

void read_points(const json& a, std::vector<Rational>& xs, std::vector<Rational>& ys) {
  if (!a.is_array()) throw HoloError("expected a list of points");
  for (const auto& pt : a) {
    if (!pt.is_array() || pt.size() != 2 || !pt[0].is_string() || !pt[1].is_string())
      throw HoloError("point must be a pair of fraction strings");
    xs.push_back(parse_rational(pt[0].get<std::string>()));
    ys.push_back(parse_rational(pt[1].get<std::string>()));
  }
}

class Writer {
 public:
  int node(const HoloMap& m) {
    const HoloNode* key = m.node().get();
    if (auto it = ids_.find(key); it != ids_.end()) return it->second;
    json j;
    const HoloNode& n = *m.node();
    if (const auto* p = std::get_if<PlNode>(&n.v)) {
      j = {{"type", "pl"}, {"points", points(p->xs, p->ys)}};
    } else if (const auto* c = std::get_if<ComposeNode>(&n.v)) {
      json parts = json::array();
      for (const auto& part : c->parts) parts.push_back(node(part));
      j = {{"type", "compose"}, {"parts", parts}};
    } else if (const auto* q = std::get_if<ConjNode>(&n.v)) {
      const int g = node(q->g);
      const int p = node(q->p);
      j = {{"type", "conj"}, {"g", g}, {"p", p}, {"q0", points(q->q0x, q->q0y)}};
    } else {
      const auto& r = std::get<RefNode>(n.v);
      const int s = system(r.sys);
      j = {{"type", "ref"}, {"system", s}, {"index", r.index}, {"inverted", r.inverted}};
    }
    nodes_.push_back(j);
    return ids_[key] = static_cast<int>(nodes_.size()) - 1;
  }

  json done(int root) const { return {{"kind", "dag"}, {"root", root}, {"nodes", nodes_}}; }

 private:
  int system(const std::shared_ptr<const System>& s) {
    const void* key = s.get();
    if (auto it = sys_ids_.find(key); it != sys_ids_.end()) return it->second;
    json defs = json::array();
    for (const auto& d : s->defs) {
      json cuts = json::array();
      for (const auto& c : d.cuts) cuts.push_back(format_rational(c));
      json blocks = json::array();
      for (const auto& b : d.blocks) {
        if (b.map) blocks.push_back({{"map", node(*b.map)}});
        else blocks.push_back({{"self", b.self}, {"inverted", b.inverted}});
      }
      defs.push_back({{"cuts", cuts}, {"blocks", blocks}});
    }
    nodes_.push_back({{"type", "system"}, {"defs", defs}});
    return sys_ids_[key] = static_cast<int>(nodes_.size()) - 1;
  }

  std::map<const HoloNode*, int> ids_;
  std::map<const void*, int> sys_ids_;
  std::vector<json> nodes_;
};

template <class T>
T field(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw HoloError(std::string("missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw HoloError(std::string("field '") + key + "' has the wrong type");
  }
}

}  // namespace

json to_json(const HoloMap& f) {
  if (const auto* p = std::get_if<PlNode>(&f.node()->v)) return {{"kind", "pl"}, {"points", points(p->xs, p->ys)}};
  Writer w;
  const int root = w.node(f);
  return w.done(root);
}

HoloMap holo_from_json(const json& j) {
  const auto kind = field<std::string>(j, "kind");
  if (kind == "pl") {
    std::vector<Rational> xs, ys;
    read_points(j.at("points"), xs, ys);
    return HoloMap::pl(std::move(xs), std::move(ys));
  }
  if (kind != "dag") throw HoloError("unknown map kind '" + kind + "'");
  const auto& nodes = j.at("nodes");
  if (!nodes.is_array()) throw HoloError("nodes must be a list");
  std::vector<std::optional<HoloMap>> maps(nodes.size());
  std::vector<std::shared_ptr<const System>> systems(nodes.size());
  auto earlier_map = [&](int id, std::size_t self) -> const HoloMap& {
    if (id < 0 || static_cast<std::size_t>(id) >= self || !maps[static_cast<std::size_t>(id)])
      throw HoloError("node " + std::to_string(self) + " references an invalid map node " + std::to_string(id));
    return *maps[static_cast<std::size_t>(id)];
  };
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const auto& n = nodes[i];
    const auto type = field<std::string>(n, "type");
    if (type == "pl") {
      std::vector<Rational> xs, ys;
      read_points(n.at("points"), xs, ys);
      maps[i] = HoloMap::pl(std::move(xs), std::move(ys));
    } else if (type == "compose") {
      std::vector<HoloMap> parts;
      for (const auto& id : field<std::vector<int>>(n, "parts")) parts.push_back(earlier_map(id, i));
      if (parts.size() < 2) throw HoloError("compose node needs at least two parts");
      maps[i] = make(HoloNode{ComposeNode{std::move(parts)}});
    } else if (type == "conj") {
      const HoloMap g = earlier_map(field<int>(n, "g"), i);
      const HoloMap p = earlier_map(field<int>(n, "p"), i);
      if (!g.is_exact() || !p.is_exact()) throw HoloError("conj node needs exact maps");
      if (diagonal_sign(g) <= 0 || diagonal_sign(p) <= 0) throw HoloError("conj node maps must lie above the diagonal");
      std::vector<Rational> qx, qy;
      read_points(n.at("q0"), qx, qy);
      if (qx.size() < 2 || qx.front() != 0 || qy.front() != 0 || qx.back() != apply_exact(g, 0) ||
          qy.back() != apply_exact(p, 0))
        throw HoloError("conj node fundamental-domain map has wrong endpoints");
      for (std::size_t k = 1; k < qx.size(); ++k)
        if (!(qx[k - 1] < qx[k]) || !(qy[k - 1] < qy[k])) throw HoloError("conj node fundamental-domain map not increasing");
      maps[i] = make(HoloNode{ConjNode{g, invert(g), p, invert(p), qx, qy}});
    } else if (type == "system") {
      auto sys = std::make_shared<System>();
      const auto& defs = n.at("defs");
      if (!defs.is_array() || defs.empty()) throw HoloError("system needs definitions");
      for (const auto& dj : defs) {
        Definition d;
        for (const auto& c : field<std::vector<std::string>>(dj, "cuts")) d.cuts.push_back(parse_rational(c));
        Partition{d.cuts}.check();
        for (const auto& bj : dj.at("blocks")) {
          if (bj.contains("map")) {
            d.blocks.push_back(plain_block(earlier_map(field<int>(bj, "map"), i)));
          } else {
            const int self = field<int>(bj, "self");
            if (self < 0 || static_cast<std::size_t>(self) >= defs.size()) throw HoloError("self reference out of range");
            d.blocks.push_back(self_block(self, field<bool>(bj, "inverted")));
          }
        }
        if (d.blocks.size() != d.cuts.size() - 1) throw HoloError("system block count does not match its cuts");
        const bool recursive = std::any_of(d.blocks.begin(), d.blocks.end(), [](const Block& b) { return !b.map; });
        if (recursive && d.blocks.size() < 2) throw HoloError("a self-similar definition needs at least two blocks");
        sys->defs.push_back(std::move(d));
      }
      systems[i] = sys;
    } else if (type == "ref") {
      const int s = field<int>(n, "system");
      if (s < 0 || static_cast<std::size_t>(s) >= i || !systems[static_cast<std::size_t>(s)])
        throw HoloError("ref node names an invalid system");
      const int index = field<int>(n, "index");
      if (index < 0 || static_cast<std::size_t>(index) >= systems[static_cast<std::size_t>(s)]->defs.size())
        throw HoloError("ref index out of range");
      maps[i] = ref(systems[static_cast<std::size_t>(s)], index, field<bool>(n, "inverted"));
    } else {
      throw HoloError("unknown node type '" + type + "'");
    }
  }
  return earlier_map(field<int>(j, "root"), nodes.size());
}

}  // namespace lamina
