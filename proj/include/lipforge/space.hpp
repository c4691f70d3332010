#pragma once

#include <cstddef>
#include <initializer_list>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "lipforge/real.hpp"

namespace lipforge {

enum class NormKind { euclidean, sup, one };

inline std::string_view to_string(NormKind k) {
  switch (k) {
    case NormKind::euclidean: return "euclidean";
    case NormKind::sup: return "sup";
    case NormKind::one: return "one";
  }
  return "euclidean";
}

inline NormKind parse_norm_kind(std::string_view s) {
  if (s == "euclidean") return NormKind::euclidean;
  if (s == "sup") return NormKind::sup;
  if (s == "one") return NormKind::one;
  throw Error("unknown norm '" + std::string(s) + "' (expected euclidean, sup or one)");
}

/// Point of R^d or value in R^l.
class Vec {
 public:
  Vec() = default;
  explicit Vec(std::size_t dim) : coords_(dim) {}
  explicit Vec(std::vector<Real> coords) : coords_(std::move(coords)) {}
  Vec(std::initializer_list<double> coords) {
    coords_.reserve(coords.size());
    for (double c : coords) coords_.emplace_back(c);
  }

  static Vec unit(std::size_t dim, std::size_t axis, const Real& scale = Real(1)) {
    Vec v(dim);
    v[axis] = scale;
    return v;
  }

  std::size_t size() const { return coords_.size(); }
  Real& operator[](std::size_t i) { return coords_[i]; }
  const Real& operator[](std::size_t i) const { return coords_[i]; }
  auto begin() const { return coords_.begin(); }
  auto end() const { return coords_.end(); }
  const std::vector<Real>& coords() const { return coords_; }

  Vec& operator+=(const Vec& o) {
    check_same(o);
    for (std::size_t i = 0; i < size(); ++i) coords_[i] += o.coords_[i];
    return *this;
  }
  Vec& operator-=(const Vec& o) {
    check_same(o);
    for (std::size_t i = 0; i < size(); ++i) coords_[i] -= o.coords_[i];
    return *this;
  }
  Vec& operator*=(const Real& c) {
    for (auto& x : coords_) x *= c;
    return *this;
  }
  friend Vec operator+(Vec a, const Vec& b) { return a += b; }
  friend Vec operator-(Vec a, const Vec& b) { return a -= b; }
  friend Vec operator*(const Real& c, Vec a) { return a *= c; }
  friend Vec operator*(Vec a, const Real& c) { return a *= c; }
  friend Vec operator/(Vec a, const Real& c) {
    for (auto& x : a.coords_) x /= c;
    return a;
  }
  friend Vec operator-(Vec a) {
    for (auto& x : a.coords_) x = -x;
    return a;
  }
  friend bool operator==(const Vec& a, const Vec& b) { return a.coords_ == b.coords_; }

  bool is_zero() const {
    for (const auto& x : coords_)
      if (x != 0) return false;
    return true;
  }

 private:
  void check_same(const Vec& o) const {
    if (o.size() != size()) throw Error("dimension mismatch");
  }
  std::vector<Real> coords_;
};

inline bool lex_less(const Vec& a, const Vec& b) {
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

inline Real norm(const Vec& v, NormKind k) {
  Real acc(0);
  switch (k) {
    case NormKind::euclidean:
      for (const auto& x : v) acc += x * x;
      return sqrt(acc);
    case NormKind::sup:
      for (const auto& x : v) acc = std::max(acc, Real(abs(x)));
      return acc;
    case NormKind::one:
      for (const auto& x : v) acc += abs(x);
      return acc;
  }
  return acc;
}

inline Real distance(const Vec& a, const Vec& b, NormKind k) { return norm(a - b, k); }

/// ‖diff‖ < radius without a square root for the euclidean case.
inline bool strictly_within(const Vec& diff, const Real& radius, NormKind k) {
  if (k == NormKind::euclidean) {
    Real acc(0);
    for (const auto& x : diff) acc += x * x;
    return acc < radius * radius;
  }
  return norm(diff, k) < radius;
}

/// Largest absolute coordinate; the tolerance metric for value comparisons.
inline Real max_abs(const Vec& v) { return norm(v, NormKind::sup); }

/// Copy of v with every coordinate carried at no fewer than `bits`; evaluating
/// f at it keeps f(x) as precise as f(x + u) for small u.
inline Vec at_least_bits(const Vec& v, long bits) {
  Vec out(v);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = with_bits(out[i], std::max(precision_of(out[i]), bits));
  return out;
}

namespace detail {

inline Real op_norm_power_iteration(std::size_t rows, std::size_t cols, const std::vector<Real>& a) {
  // Gram matrix A^T A.
  std::vector<Real> gram(cols * cols);
  for (std::size_t i = 0; i < cols; ++i)
    for (std::size_t j = 0; j < cols; ++j) {
      Real acc(0);
      for (std::size_t r = 0; r < rows; ++r) acc += a[r * cols + i] * a[r * cols + j];
      gram[i * cols + j] = acc;
    }
  auto multiply = [&](const std::vector<Real>& v) {
    std::vector<Real> w(cols);
    for (std::size_t i = 0; i < cols; ++i) {
      Real acc(0);
      for (std::size_t j = 0; j < cols; ++j) acc += gram[i * cols + j] * v[j];
      w[i] = acc;
    }
    return w;
  };
  auto euclid = [](const std::vector<Real>& v) {
    Real acc(0);
    for (const auto& x : v) acc += x * x;
    return sqrt(acc);
  };

  if (cols == 2) {
    // Largest eigenvalue of a symmetric 2×2 matrix in closed form.
    const Real mean = (gram[0] + gram[3]) / 2;
    const Real half_gap = (gram[0] - gram[3]) / 2;
    return sqrt(mean + sqrt(half_gap * half_gap + gram[1] * gram[1]));
  }

  // Column norms are lower bounds and cover a start vector orthogonal to the
  // top singular direction.
  Real best(0);
  for (std::size_t j = 0; j < cols; ++j) best = std::max(best, Real(gram[j * cols + j]));

  std::vector<Real> v(cols, Real(1));
  const Real v_norm = euclid(v);
  for (auto& x : v) x /= v_norm;
  Real lambda(0);
  const Real tol(1e-10);
  for (int it = 0; it < 200; ++it) {
    std::vector<Real> w = multiply(v);
    Real rayleigh(0);
    for (std::size_t i = 0; i < cols; ++i) rayleigh += v[i] * w[i];
    const Real w_norm = euclid(w);
    if (w_norm == 0) break;
    const bool converged = it > 0 && abs(rayleigh - lambda) <= tol * abs(rayleigh);
    lambda = rayleigh;
    if (converged) break;
    for (std::size_t i = 0; i < cols; ++i) v[i] = w[i] / w_norm;
  }
  return sqrt(std::max(best, lambda));
}

template <typename F>
void for_each_sign_vector(std::size_t n, F&& visit) {
  if (n > 24) throw Error("operator norm: dimension too large for vertex enumeration");
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
    std::vector<int> signs(n);
    for (std::size_t i = 0; i < n; ++i) signs[i] = (mask >> i) & 1 ? -1 : 1;
    visit(signs);
  }
}

inline Real compute_op_norm(std::size_t rows, std::size_t cols, const std::vector<Real>& a, NormKind in,
                            NormKind out) {
  auto column = [&](std::size_t j) {
    Vec c(rows);
    for (std::size_t r = 0; r < rows; ++r) c[r] = a[r * cols + j];
    return c;
  };
  auto row = [&](std::size_t r) {
    Vec v(cols);
    for (std::size_t j = 0; j < cols; ++j) v[j] = a[r * cols + j];
    return v;
  };
  auto apply = [&](const std::vector<int>& signs) {
    Vec y(rows);
    for (std::size_t r = 0; r < rows; ++r) {
      Real acc(0);
      for (std::size_t j = 0; j < cols; ++j) acc += signs[j] < 0 ? Real(-a[r * cols + j]) : a[r * cols + j];
      y[r] = acc;
    }
    return y;
  };

  Real best(0);
  switch (in) {
    case NormKind::one:
      // Extreme points of the l1 ball are the signed unit vectors.
      for (std::size_t j = 0; j < cols; ++j) best = std::max(best, norm(column(j), out));
      return best;
    case NormKind::sup:
      for_each_sign_vector(cols, [&](const std::vector<int>& s) { best = std::max(best, norm(apply(s), out)); });
      return best;
    case NormKind::euclidean:
      switch (out) {
        case NormKind::sup:
          for (std::size_t r = 0; r < rows; ++r) best = std::max(best, norm(row(r), NormKind::euclidean));
          return best;
        case NormKind::one:
          // max over sign vectors s of ‖A^T s‖₂
          for_each_sign_vector(rows, [&](const std::vector<int>& s) {
            Vec t(cols);
            for (std::size_t j = 0; j < cols; ++j) {
              Real acc(0);
              for (std::size_t r = 0; r < rows; ++r) acc += s[r] < 0 ? Real(-a[r * cols + j]) : a[r * cols + j];
              t[j] = acc;
            }
            best = std::max(best, norm(t, NormKind::euclidean));
          });
          return best;
        case NormKind::euclidean:
          if (rows == 1) return norm(row(0), NormKind::euclidean);
          if (cols == 1) return norm(column(0), NormKind::euclidean);
          return op_norm_power_iteration(rows, cols, a);
      }
  }
  return best;
}

}  // namespace detail

/// Real l×d matrix acting R^d → R^l under a fixed (in, out) norm pair. The
/// operator norm is computed once at construction.
class LinearMap {
 public:
  LinearMap(std::size_t rows, std::size_t cols, std::vector<Real> entries, NormKind in_norm, NormKind out_norm)
      : rows_(rows), cols_(cols), entries_(std::move(entries)), in_norm_(in_norm), out_norm_(out_norm) {
    if (rows_ == 0 || cols_ == 0) throw Error("linear map: empty shape");
    if (entries_.size() != rows_ * cols_) throw Error("linear map: entry count does not match shape");
    for (const auto& e : entries_)
      if (!is_finite(e)) throw Error("linear map: non-finite entries");
    op_norm_ = detail::compute_op_norm(rows_, cols_, entries_, in_norm_, out_norm_);
    identity_ = rows_ == cols_;
    for (std::size_t r = 0; identity_ && r < rows_; ++r)
      for (std::size_t c = 0; identity_ && c < cols_; ++c) identity_ = entries_[r * cols_ + c] == (r == c ? 1 : 0);
  }

  static LinearMap from_rows(const std::vector<std::vector<double>>& rows, NormKind in_norm, NormKind out_norm) {
    std::vector<Real> entries;
    const std::size_t cols = rows.empty() ? 0 : rows.front().size();
    for (const auto& r : rows) {
      if (r.size() != cols) throw Error("linear map: ragged rows");
      for (double x : r) entries.emplace_back(x);
    }
    return LinearMap(rows.size(), cols, std::move(entries), in_norm, out_norm);
  }

  static LinearMap identity(std::size_t dim, NormKind norm) {
    std::vector<Real> entries(dim * dim);
    for (std::size_t i = 0; i < dim; ++i) entries[i * dim + i] = 1;
    return LinearMap(dim, dim, std::move(entries), norm, norm);
  }

  static LinearMap zero(std::size_t rows, std::size_t cols, NormKind in_norm, NormKind out_norm) {
    return LinearMap(rows, cols, std::vector<Real>(rows * cols), in_norm, out_norm);
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  const Real& at(std::size_t r, std::size_t c) const { return entries_[r * cols_ + c]; }
  const std::vector<Real>& entries() const { return entries_; }
  NormKind in_norm() const { return in_norm_; }
  NormKind out_norm() const { return out_norm_; }
  const Real& op_norm() const { return op_norm_; }
  bool is_identity() const { return identity_; }

  Vec apply(const Vec& x) const {
    if (x.size() != cols_) throw Error("dimension mismatch");
    if (identity_) return x;
    Vec y(rows_);
    for (std::size_t r = 0; r < rows_; ++r) {
      Real acc(0);
      for (std::size_t c = 0; c < cols_; ++c) acc += entries_[r * cols_ + c] * x[c];
      y[r] = acc;
    }
    return y;
  }

  LinearMap scaled(const Real& c) const {
    std::vector<Real> e(entries_);
    for (auto& x : e) x *= c;
    return LinearMap(rows_, cols_, std::move(e), in_norm_, out_norm_);
  }

  LinearMap minus(const LinearMap& o) const {
    if (o.rows_ != rows_ || o.cols_ != cols_) throw Error("dimension mismatch");
    std::vector<Real> e(entries_);
    for (std::size_t i = 0; i < e.size(); ++i) e[i] -= o.entries_[i];
    return LinearMap(rows_, cols_, std::move(e), in_norm_, out_norm_);
  }

  friend bool operator==(const LinearMap& a, const LinearMap& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.entries_ == b.entries_ && a.in_norm_ == b.in_norm_ &&
           a.out_norm_ == b.out_norm_;
  }

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<Real> entries_;
  NormKind in_norm_;
  NormKind out_norm_;
  Real op_norm_;
  bool identity_ = false;
};

inline const Real& op_norm(const LinearMap& a) { return a.op_norm(); }

/// Closed bounded region Q with nonempty interior: an axis box or a norm ball.
class Domain {
 public:
  struct Box {
    Vec lo;
    Vec hi;
  };
  struct Ball {
    Vec center;
    Real radius;
  };

  static Domain box(Vec lo, Vec hi, NormKind norm) {
    if (lo.size() == 0 || lo.size() != hi.size()) throw Error("domain: box corners must share a positive dimension");
    for (std::size_t i = 0; i < lo.size(); ++i)
      if (!(lo[i] < hi[i])) throw Error("domain: box needs lo < hi componentwise");
    return Domain(Box{std::move(lo), std::move(hi)}, norm);
  }

  static Domain ball(Vec center, Real radius, NormKind norm) {
    if (center.size() == 0) throw Error("domain: ball center must have positive dimension");
    if (!(radius > 0)) throw Error("domain: ball radius must be positive");
    return Domain(Ball{std::move(center), std::move(radius)}, norm);
  }

  std::size_t dim() const {
    return std::visit([](const auto& s) -> std::size_t {
      if constexpr (std::is_same_v<std::decay_t<decltype(s)>, Box>) return s.lo.size();
      else return s.center.size();
    }, shape_);
  }
  NormKind norm_kind() const { return norm_; }
  bool is_box() const { return std::holds_alternative<Box>(shape_); }
  const Box& as_box() const { return std::get<Box>(shape_); }
  const Ball& as_ball() const { return std::get<Ball>(shape_); }

  bool contains(const Vec& x) const {
    if (x.size() != dim()) throw Error("dimension mismatch");
    if (is_box()) {
      const auto& b = as_box();
      for (std::size_t i = 0; i < x.size(); ++i)
        if (x[i] < b.lo[i] || x[i] > b.hi[i]) return false;
      return true;
    }
    const auto& b = as_ball();
    return distance(x, b.center, norm_) <= b.radius;
  }

  /// Exact distance to ∂Q under the domain norm; zero exactly on the boundary.
  Real dist_to_boundary(const Vec& x) const {
    if (!contains(x)) throw Error("point outside domain");
    if (is_box()) {
      // Moving along one axis costs |t| in every supported norm, and any
      // boundary point differs from x by at least this much in some coordinate.
      const auto& b = as_box();
      Real best = x[0] - b.lo[0];
      for (std::size_t i = 0; i < x.size(); ++i) {
        best = std::min(best, Real(x[i] - b.lo[i]));
        best = std::min(best, Real(b.hi[i] - x[i]));
      }
      return best;
    }
    const auto& b = as_ball();
    return b.radius - distance(x, b.center, norm_);
  }

  Real diam() const {
    if (is_box()) return distance(as_box().hi, as_box().lo, norm_);
    return 2 * as_ball().radius;
  }

  /// Componentwise bounding box, used by samplers.
  std::pair<Vec, Vec> bounds() const {
    if (is_box()) return {as_box().lo, as_box().hi};
    const auto& b = as_ball();
    Vec lo = b.center, hi = b.center;
    for (std::size_t i = 0; i < lo.size(); ++i) {
      lo[i] -= b.radius;
      hi[i] += b.radius;
    }
    return {lo, hi};
  }

 private:
  Domain(std::variant<Box, Ball> shape, NormKind norm) : shape_(std::move(shape)), norm_(norm) {}
  std::variant<Box, Ball> shape_;
  NormKind norm_;
};

inline Real dist_to_boundary(const Domain& d, const Vec& x) { return d.dist_to_boundary(x); }
inline Real diam(const Domain& d) { return d.diam(); }

/// max(1, largest coordinate magnitude in the domain); sets absolute rounding scale.
inline Real magnitude(const Domain& d) {
  const auto [lo, hi] = d.bounds();
  return std::max({Real(1), max_abs(lo), max_abs(hi)});
}

}  // namespace lipforge
