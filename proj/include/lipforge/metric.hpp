#pragma once

#include <algorithm>
#include <unordered_set>
#include <vector>

#include "lipforge/lipfun.hpp"

namespace lipforge {

namespace detail {

using NodeSet = std::unordered_set<const Node*>;

inline NodeSet reachable_nodes(const LipFun& root) {
  NodeSet seen;
  std::vector<const Node*> stack{&root.node()};
  while (!stack.empty()) {
    const Node* n = stack.back();
    stack.pop_back();
    if (!seen.insert(n).second) continue;
    std::visit([&](const auto& payload) {
      using T = std::decay_t<decltype(payload)>;
      if constexpr (std::is_same_v<T, node::Sum>) {
        stack.push_back(&payload.lhs.node());
        stack.push_back(&payload.rhs.node());
      } else if constexpr (std::is_same_v<T, node::Scale> || std::is_same_v<T, node::AddConst>) {
        stack.push_back(&payload.f.node());
      } else if constexpr (std::is_same_v<T, node::RadialBlend>) {
        stack.push_back(&payload.f1.node());
        stack.push_back(&payload.f2.node());
      } else if constexpr (std::is_same_v<T, node::Patched>) {
        stack.push_back(&payload.outer.node());
        for (const auto& g : payload.inners) stack.push_back(&g.node());
      } else if constexpr (std::is_same_v<T, node::Precompose>) {
        stack.push_back(&payload.f.node());
        stack.push_back(&payload.inner.node());
      }
    }, n->payload);
  }
  return seen;
}

/// Blend radii reachable from a patch inner without crossing into the
/// patched node's outer function or another patched node.
inline void collect_blend_radii(const Node& n, const Node* stop, std::vector<Real>& radii, int depth = 0) {
  if (&n == stop || depth > 8) return;
  std::visit([&](const auto& payload) {
    using T = std::decay_t<decltype(payload)>;
    if constexpr (std::is_same_v<T, node::RadialBlend>) {
      radii.push_back(payload.a);
      radii.push_back(payload.b);
    } else if constexpr (std::is_same_v<T, node::Sum>) {
      collect_blend_radii(payload.lhs.node(), stop, radii, depth + 1);
      collect_blend_radii(payload.rhs.node(), stop, radii, depth + 1);
    } else if constexpr (std::is_same_v<T, node::Scale> || std::is_same_v<T, node::AddConst>) {
      collect_blend_radii(payload.f.node(), stop, radii, depth + 1);
    } else if constexpr (std::is_same_v<T, node::Precompose>) {
      collect_blend_radii(payload.f.node(), stop, radii, depth + 1);
      collect_blend_radii(payload.inner.node(), stop, radii, depth + 1);
    }
  }, n.payload);
}

/// Points where two functions are likely to differ most: patch centers and
/// axis points on spheres at every patch and blend radius (plus geometric
/// midpoints), for patched nodes of `root` that are not shared with `other`.
inline void collect_features(const LipFun& root, const NodeSet& shared, std::vector<Vec>& points,
                             Real& smallest_radius) {
  for (const Node* n : reachable_nodes(root)) {
    if (shared.count(n)) continue;
    const auto* p = std::get_if<node::Patched>(&n->payload);
    if (!p) continue;
    for (std::size_t i = 0; i < p->centers.size(); ++i) {
      std::vector<Real> radii{p->radii[i]};
      collect_blend_radii(p->inners[i].node(), &p->outer.node(), radii);
      std::sort(radii.begin(), radii.end());
      radii.erase(std::unique(radii.begin(), radii.end()), radii.end());
      std::vector<Real> all = radii;
      for (std::size_t j = 0; j + 1 < radii.size(); ++j) all.push_back(sqrt(radii[j] * radii[j + 1]));
      points.push_back(p->centers[i]);
      const std::size_t d = p->centers[i].size();
      for (const auto& rho : all) {
        if (!(rho > 0)) continue;
        smallest_radius = std::min(smallest_radius, rho);
        for (std::size_t axis = 0; axis < d; ++axis) {
          points.push_back(p->centers[i] + Vec::unit(d, axis, rho));
          points.push_back(p->centers[i] - Vec::unit(d, axis, rho));
        }
      }
    }
  }
}

}  // namespace detail

/// Sampled lower estimate of ρ_Q(f,g) = sup_Q ‖f − g‖. Uses `budget`
/// low-discrepancy domain points plus feature points from the parts of each
/// DAG that the other does not share. Symmetric in (f, g).
inline Real sup_dist(const LipFun& f, const LipFun& g, const Domain& domain, NormKind out_norm,
                     std::size_t budget = 256, std::uint64_t seed = 1) {
  if (f.in_dim() != g.in_dim() || f.out_dim() != g.out_dim()) throw Error("dimension mismatch");
  if (f.same_as(g)) return Real(0);
  std::vector<Vec> points = sample_domain(domain, budget, seed);
  Real smallest = infinity();
  const auto nodes_f = detail::reachable_nodes(f);
  const auto nodes_g = detail::reachable_nodes(g);
  detail::collect_features(f, nodes_g, points, smallest);
  detail::collect_features(g, nodes_f, points, smallest);
  PrecisionScope scope(is_finite(smallest) ? bits_for_scale(smallest) : working_bits());
  Real best(0);
  for (const auto& z : points) {
    if (!domain.contains(z)) continue;
    best = std::max(best, norm(f(z) - g(z), out_norm));
  }
  return best;
}

/// max ‖f(x) − f(y)‖/‖x − y‖ over the given pairs.
inline Real max_difference_quotient(const LipFun& f, const std::vector<std::pair<Vec, Vec>>& pairs,
                                    NormKind in_norm, NormKind out_norm) {
  Real best(0);
  for (const auto& [x, y] : pairs) {
    const Real dx = distance(x, y, in_norm);
    if (dx == 0) continue;
    PrecisionScope scope(bits_for_scale(dx, max_abs(x)));
    best = std::max(best, Real(norm(f(x) - f(y), out_norm) / dx));
  }
  return best;
}

}  // namespace lipforge
