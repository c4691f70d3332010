#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include <boost/random/sobol.hpp>

#include "lipforge/space.hpp"

namespace lipforge {

/// Bit-reproducible uniform doubles in [0,1) from a seed (the raw mt19937_64
/// stream is fixed by the standard; distributions are not).
class UnitRng {
 public:
  explicit UnitRng(std::uint64_t seed) : engine_(seed) {}
  double next() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * next(); }
  std::uint64_t next_u64() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Sobol points in [0,1)^d with a seeded Cranley–Patterson rotation.
class LowDiscrepancy {
 public:
  LowDiscrepancy(std::size_t dim, std::uint64_t seed) : dim_(dim), sobol_(static_cast<unsigned>(dim)), shift_(dim) {
    UnitRng rng(seed);
    for (auto& s : shift_) s = rng.next();
  }

  std::vector<double> next() {
    std::vector<double> p(dim_);
    for (std::size_t i = 0; i < dim_; ++i) {
      const double u = static_cast<double>(sobol_() >> 11) * 0x1.0p-53 + shift_[i];
      p[i] = u >= 1.0 ? u - 1.0 : u;
    }
    return p;
  }

 private:
  std::size_t dim_;
  boost::random::sobol sobol_;
  std::vector<double> shift_;
};

namespace detail {

/// Rescales v onto the unit sphere of `k`, nudging inward if rounding lands
/// it outside.
inline Vec onto_unit_sphere(Vec v, NormKind k) {
  const Real n = norm(v, k);
  if (n == 0) return Vec::unit(v.size(), 0);
  for (auto i = 0u; i < v.size(); ++i) v[i] /= n;
  if (norm(v, k) > 1) v *= Real(1) - pow2(-(working_bits() - 4));
  return v;
}

}  // namespace detail

/// Offsets u with ‖u‖ ≤ 1: the 2d signed axis vectors first, then
/// low-discrepancy points of the cube [-1,1]^d. Odd-indexed extras are
/// projected to the unit sphere; even-indexed ones are kept when inside the
/// ball and projected otherwise.
inline std::vector<Vec> unit_ball_offsets(std::size_t dim, NormKind k, std::size_t count, std::uint64_t seed) {
  std::vector<Vec> out;
  out.reserve(count);
  for (std::size_t i = 0; i < dim && out.size() < count; ++i) {
    out.push_back(Vec::unit(dim, i));
    if (out.size() < count) out.push_back(Vec::unit(dim, i, Real(-1)));
  }
  LowDiscrepancy ld(dim, seed);
  for (std::size_t j = 0; out.size() < count; ++j) {
    const auto p = ld.next();
    Vec h(dim);
    for (std::size_t i = 0; i < dim; ++i) h[i] = Real(2 * p[i] - 1);
    if (j % 2 == 1 || norm(h, k) > 1) h = detail::onto_unit_sphere(std::move(h), k);
    out.push_back(std::move(h));
  }
  return out;
}

/// Points on the unit sphere of `k`: signed axes first, then projected
/// low-discrepancy directions.
inline std::vector<Vec> unit_sphere_points(std::size_t dim, NormKind k, std::size_t count, std::uint64_t seed) {
  std::vector<Vec> out;
  out.reserve(count);
  for (std::size_t i = 0; i < dim && out.size() < count; ++i) {
    out.push_back(Vec::unit(dim, i));
    if (out.size() < count) out.push_back(Vec::unit(dim, i, Real(-1)));
  }
  LowDiscrepancy ld(dim, seed);
  while (out.size() < count) {
    const auto p = ld.next();
    Vec h(dim);
    for (std::size_t i = 0; i < dim; ++i) h[i] = Real(2 * p[i] - 1);
    out.push_back(detail::onto_unit_sphere(std::move(h), k));
  }
  return out;
}

/// Offsets of B̄(0,r) (see unit_ball_offsets), scaled by r.
inline std::vector<Vec> ball_offsets(std::size_t dim, const Real& r, NormKind k, std::size_t budget,
                                     std::uint64_t seed) {
  if (!(r > 0)) throw Error("sample_ball: radius must be positive");
  if (budget < 2 * dim + 1) throw Error("sample_ball: budget too small (need at least 2d+1)");
  auto out = unit_ball_offsets(dim, k, budget, seed);
  for (auto& u : out) u *= r;
  return out;
}

/// Deterministic sample of B̄(c,r); always contains c ± r·e_i.
inline std::vector<Vec> sample_ball(const Vec& c, const Real& r, NormKind k, std::size_t budget,
                                    std::uint64_t seed) {
  auto out = ball_offsets(c.size(), r, k, budget, seed);
  for (auto& u : out) u += c;
  return out;
}

/// Low-discrepancy points of the domain (rejection against the domain for
/// balls). Deterministic in `seed`.
inline std::vector<Vec> sample_domain(const Domain& domain, std::size_t count, std::uint64_t seed) {
  std::vector<Vec> out;
  out.reserve(count);
  const auto [lo, hi] = domain.bounds();
  LowDiscrepancy ld(domain.dim(), seed);
  for (std::size_t tries = 0; out.size() < count && tries < 64 * count + 64; ++tries) {
    const auto p = ld.next();
    Vec x(domain.dim());
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = lo[i] + Real(p[i]) * (hi[i] - lo[i]);
    if (domain.contains(x)) out.push_back(std::move(x));
  }
  return out;
}

}  // namespace lipforge
