#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <unordered_map>
#include <vector>

#include <boost/container_hash/hash.hpp>

#include "lipforge/space.hpp"

namespace lipforge {

/// Uniform hash grid over ball centers. The cell side is at least the largest
/// ball diameter, so any ball containing a query point has its center in the
/// query cell or one of its 3^d neighbours. Cell coordinates and a distance
/// prefilter use double approximations; membership is always decided in exact
/// arithmetic.
class PatchIndex {
 public:
  PatchIndex() = default;

  PatchIndex(const std::vector<Vec>& centers, const std::vector<Real>& radii, NormKind norm)
      : centers_(&centers), radii_(&radii), norm_(norm) {
    if (centers.empty()) return;
    dim_ = centers.front().size();
    double max_diameter = 0;
    for (const auto& r : radii) max_diameter = std::max(max_diameter, 2 * static_cast<double>(r));
    // Radii can underflow double range; coarsen to the typical center spacing
    // so the grid stays representable. Any side ≥ the diameter is valid.
    std::vector<double> lo(dim_, HUGE_VAL), hi(dim_, -HUGE_VAL);
    for (const auto& c : centers)
      for (std::size_t i = 0; i < dim_; ++i) {
        lo[i] = std::min(lo[i], static_cast<double>(c[i]));
        hi[i] = std::max(hi[i], static_cast<double>(c[i]));
      }
    double extent = 0;
    for (std::size_t i = 0; i < dim_; ++i) extent = std::max(extent, hi[i] - lo[i]);
    const double per_axis = std::ceil(std::pow(static_cast<double>(centers.size()), 1.0 / static_cast<double>(dim_)));
    // The margin keeps neighbours at exactly one diameter in adjacent cells
    // after the keys are rounded to double.
    cell_ = std::max(max_diameter, extent / per_axis) * (1 + 1e-9);
    if (!(cell_ > 1e-280) || !std::isfinite(cell_)) cell_ = 1.0;
    double magnitude = 1;
    approx_centers_.reserve(centers.size() * dim_);
    for (const auto& c : centers)
      for (std::size_t i = 0; i < dim_; ++i) {
        approx_centers_.push_back(static_cast<double>(c[i]));
        magnitude = std::max(magnitude, std::abs(approx_centers_.back()));
      }
    for (const auto& r : radii) approx_radii_.push_back(static_cast<double>(r));
    // Double rounding moves a distance by far less than this.
    slack_ = 1e-12 * magnitude;
    for (std::size_t k = 0; k < centers.size(); ++k) buckets_[cell_of(centers[k])].push_back(k);
  }

  double cell_size() const { return cell_; }

  /// Index of the ball strictly containing z, if any. Balls are assumed
  /// pairwise disjoint, so the first hit is the unique one.
  std::optional<std::size_t> find(const Vec& z) const {
    std::optional<std::size_t> hit;
    if (buckets_.empty()) return hit;
    double small[16];
    std::vector<double> large;
    double* approx = small;
    if (dim_ > 16) {
      large.resize(dim_);
      approx = large.data();
    }
    for (std::size_t i = 0; i < dim_; ++i) approx[i] = static_cast<double>(z[i]);
    for_each_candidate(z, [&](std::size_t k) {
      if (hit || approx_distance(approx, k) > approx_radii_[k] * (1 + 1e-9) + slack_) return;
      if (strictly_within(z - (*centers_)[k], (*radii_)[k], norm_)) hit = k;
    });
    return hit;
  }

  /// Visits every center whose cell neighbours the cell of z.
  template <typename F>
  void for_each_candidate(const Vec& z, F&& visit) const {
    if (buckets_.empty()) return;
    const Key base = cell_of(z);
    Key probe = base;
    const std::size_t total = ipow3(dim_);
    for (std::size_t code = 0; code < total; ++code) {
      std::size_t rest = code;
      for (std::size_t i = 0; i < dim_; ++i) {
        probe[i] = base[i] + static_cast<std::int64_t>(rest % 3) - 1;
        rest /= 3;
      }
      if (auto it = buckets_.find(probe); it != buckets_.end())
        for (std::size_t k : it->second) visit(k);
    }
  }

 private:
  using Key = std::vector<std::int64_t>;
  struct KeyHash {
    std::size_t operator()(const Key& k) const { return boost::hash_range(k.begin(), k.end()); }
  };

  static std::size_t ipow3(std::size_t n) {
    std::size_t r = 1;
    while (n--) r *= 3;
    return r;
  }

  double approx_distance(const double* z, std::size_t k) const {
    const double* c = &approx_centers_[k * dim_];
    double acc = 0;
    for (std::size_t i = 0; i < dim_; ++i) {
      const double t = std::abs(z[i] - c[i]);
      switch (norm_) {
        case NormKind::euclidean: acc += t * t; break;
        case NormKind::sup: acc = std::max(acc, t); break;
        case NormKind::one: acc += t; break;
      }
    }
    return norm_ == NormKind::euclidean ? std::sqrt(acc) : acc;
  }

  Key cell_of(const Vec& z) const {
    Key k(dim_);
    for (std::size_t i = 0; i < dim_; ++i) k[i] = static_cast<std::int64_t>(std::floor(static_cast<double>(z[i]) / cell_));
    return k;
  }

  const std::vector<Vec>* centers_ = nullptr;
  const std::vector<Real>* radii_ = nullptr;
  NormKind norm_ = NormKind::euclidean;
  std::size_t dim_ = 0;
  double cell_ = 1.0;
  double slack_ = 0;
  std::vector<double> approx_centers_;
  std::vector<double> approx_radii_;
  std::unordered_map<Key, std::vector<std::size_t>, KeyHash> buckets_;
};

}  // namespace lipforge
