#pragma once

#include <cmath>
#include <functional>
#include <ostream>
#include <unordered_map>
#include <vector>

#include <boost/container_hash/hash.hpp>

#include "lipforge/sampling.hpp"
#include "lipforge/space.hpp"

namespace lipforge {

/// Finite representation of G ⊆ Int Q. Greedy passes visit points in order.
struct TargetSet {
  std::vector<Vec> points;

  /// lo + i·step for every i with all coordinates strictly inside (lo, hi).
  /// Coordinates are exact rationals rounded once, so grid values are
  /// correctly rounded.
  static TargetSet open_grid(const std::vector<Rational>& lo, const std::vector<Rational>& hi, const Rational& step) {
    if (lo.empty() || lo.size() != hi.size()) throw Error("grid: corners must share a positive dimension");
    if (step <= 0) throw Error("grid: step must be positive");
    std::vector<std::vector<Real>> axes(lo.size());
    for (std::size_t i = 0; i < lo.size(); ++i)
      for (Rational x = lo[i] + step; x < hi[i]; x += step) axes[i].push_back(to_real(x));
    TargetSet out;
    for (const auto& a : axes)
      if (a.empty()) return out;
    // Odometer over the axes, last axis fastest.
    std::vector<std::size_t> idx(axes.size(), 0);
    for (;;) {
      std::vector<Real> c(axes.size());
      for (std::size_t i = 0; i < axes.size(); ++i) c[i] = axes[i][idx[i]];
      out.points.emplace_back(std::move(c));
      std::size_t i = axes.size();
      while (i > 0) {
        --i;
        if (++idx[i] < axes[i].size()) break;
        idx[i] = 0;
        if (i == 0) return out;
      }
    }
  }

  /// `count` low-discrepancy points of the domain interior accepted by `keep`.
  static TargetSet sampled(const Domain& domain, const std::function<bool(const Vec&)>& keep, std::size_t count,
                           std::uint64_t seed) {
    TargetSet out;
    for (auto& p : sample_domain(domain, count, seed))
      if (domain.dist_to_boundary(p) > 0 && keep(p)) out.points.push_back(std::move(p));
    return out;
  }
};

/// G_k = {x ∈ G : dist(x, ∂Q) ≥ 2^{-k}}, in input order.
inline std::vector<Vec> restrict(const TargetSet& g, const Domain& domain, int k) {
  if (k < 1) throw Error("restrict: level must be at least 1");
  const Real margin = pow2(-k);
  std::vector<Vec> out;
  for (const auto& p : g.points)
    if (domain.contains(p) && domain.dist_to_boundary(p) >= margin) out.push_back(p);
  return out;
}

/// Minimum pairwise distance; +∞ below two points.
inline Real separation(const std::vector<Vec>& s, NormKind norm) {
  Real best = infinity();
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t j = i + 1; j < s.size(); ++j) best = std::min(best, distance(s[i], s[j], norm));
  return best;
}

namespace detail {

/// Hash grid with cell side slightly above delta: any point within delta of z
/// sits in z's cell or a neighbouring one, even after the keys are rounded to
/// double.
class SeparationGrid {
 public:
  SeparationGrid(std::size_t dim, const Real& delta, NormKind norm)
      : dim_(dim), delta_(delta), norm_(norm), cell_(static_cast<double>(delta) * (1 + 1e-9)) {
    if (!(cell_ > 1e-280) || !std::isfinite(cell_)) cell_ = 1.0;
  }

  bool far_from_all(const Vec& z) const {
    const Key base = key(z);
    Key probe = base;
    std::size_t total = 1;
    for (std::size_t i = 0; i < dim_; ++i) total *= 3;
    for (std::size_t code = 0; code < total; ++code) {
      std::size_t rest = code;
      for (std::size_t i = 0; i < dim_; ++i) {
        probe[i] = base[i] + static_cast<std::int64_t>(rest % 3) - 1;
        rest /= 3;
      }
      auto it = cells_.find(probe);
      if (it == cells_.end()) continue;
      for (const Vec* p : it->second)
        if (distance(z, *p, norm_) < delta_) return false;
    }
    return true;
  }

  void insert(const Vec& z) { cells_[key(z)].push_back(&z); }

 private:
  using Key = std::vector<std::int64_t>;
  struct KeyHash {
    std::size_t operator()(const Key& k) const { return boost::hash_range(k.begin(), k.end()); }
  };
  Key key(const Vec& z) const {
    Key k(dim_);
    for (std::size_t i = 0; i < dim_; ++i) k[i] = static_cast<std::int64_t>(std::floor(static_cast<double>(z[i]) / cell_));
    return k;
  }

  std::size_t dim_;
  Real delta_;
  NormKind norm_;
  double cell_;
  std::unordered_map<Key, std::vector<const Vec*>, KeyHash> cells_;
};

}  // namespace detail

/// Extends `seed_set` greedily, in input order, to a delta-separated subset of
/// seed_set ∪ points that is maximal relative to `points`.
inline std::vector<Vec> greedy_net(const std::vector<Vec>& points, const Real& delta, const std::vector<Vec>& seed_set,
                                   NormKind norm) {
  if (!(delta > 0)) throw Error("greedy net: delta must be positive");
  if (separation(seed_set, norm) < delta) throw Error("seed set violates separation");
  if (points.empty() && seed_set.empty()) return {};
  const std::size_t dim = points.empty() ? seed_set.front().size() : points.front().size();
  std::vector<Vec> out(seed_set);
  // `out` must not reallocate while the grid holds pointers into it.
  out.reserve(seed_set.size() + points.size());
  detail::SeparationGrid grid(dim, delta, norm);
  for (const auto& p : out) grid.insert(p);
  for (const auto& p : points) {
    if (p.size() != dim) throw Error("dimension mismatch");
    if (grid.far_from_all(p)) {
      out.push_back(p);
      grid.insert(out.back());
    }
  }
  return out;
}

/// Nested levels Γ_1 ⊆ … ⊆ Γ_kmax with Γ_k a maximal 2^{-k}-separated subset
/// of G_k containing Γ_{k−1}.
struct NetFamily {
  std::vector<std::vector<Vec>> levels;
  std::vector<Real> deltas;
  std::vector<Real> margins;
  NormKind norm = NormKind::euclidean;

  int k_max() const { return static_cast<int>(levels.size()); }
  /// Γ_k for 1 ≤ k ≤ k_max; empty outside that range.
  const std::vector<Vec>& level(int k) const {
    static const std::vector<Vec> none;
    if (k < 1 || k > k_max()) return none;
    return levels[static_cast<std::size_t>(k - 1)];
  }
};

inline NetFamily nested_nets(const TargetSet& g, const Domain& domain, int k_max) {
  if (k_max < 1) throw Error("nested nets: k_max must be at least 1");
  NetFamily fam;
  fam.norm = domain.norm_kind();
  std::vector<Vec> prev;
  for (int k = 1; k <= k_max; ++k) {
    const Real delta = pow2(-k);
    auto level = greedy_net(restrict(g, domain, k), delta, prev, domain.norm_kind());
    Real margin = infinity();
    for (const auto& p : level) margin = std::min(margin, domain.dist_to_boundary(p));
    fam.levels.push_back(level);
    fam.deltas.push_back(delta);
    fam.margins.push_back(margin);
    prev = std::move(level);
  }
  return fam;
}

/// Rows "k,x1,…,xd" with exact decimal coordinates.
inline void write_net_csv(std::ostream& os, const NetFamily& fam) {
  const std::size_t dim = [&] {
    for (const auto& l : fam.levels)
      if (!l.empty()) return l.front().size();
    return std::size_t{0};
  }();
  os << "k";
  for (std::size_t i = 1; i <= dim; ++i) os << ",x" << i;
  os << "\n";
  for (int k = 1; k <= fam.k_max(); ++k)
    for (const auto& p : fam.level(k)) {
      os << k;
      for (const auto& c : p) os << "," << to_decimal(c);
      os << "\n";
    }
}

}  // namespace lipforge
