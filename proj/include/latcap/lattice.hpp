#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <initializer_list>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace latcap {

/// Largest ambient dimension supported by the fixed-size point type.
inline constexpr int kMaxDim = 8;

/// A point of Z^d. Coordinates live inline so points are cheap to copy in
/// the Monte Carlo hot loops.
class LatticePoint {
 public:
  LatticePoint() = default;
  explicit LatticePoint(int dim);
  LatticePoint(std::initializer_list<int> coords);
  static LatticePoint from_coords(std::span<const int> coords);
  static LatticePoint unit(int dim, int axis, int sign = 1);

  int dim() const noexcept { return dim_; }
  int operator[](int i) const noexcept { return c_[static_cast<std::size_t>(i)]; }
  int& operator[](int i) noexcept { return c_[static_cast<std::size_t>(i)]; }
  std::vector<int> coords() const;

  LatticePoint operator+(const LatticePoint& o) const;
  LatticePoint operator-(const LatticePoint& o) const;
  LatticePoint operator-() const;
  LatticePoint scaled(int k) const;

  std::int64_t norm2() const noexcept;
  double norm() const noexcept;
  bool is_zero() const noexcept;

  friend bool operator==(const LatticePoint& a, const LatticePoint& b) noexcept;
  friend std::strong_ordering operator<=>(const LatticePoint& a, const LatticePoint& b) noexcept;

  std::string to_string() const;

 private:
  std::array<std::int32_t, kMaxDim> c_{};
  int dim_ = 0;
};

struct LatticePointHash {
  std::size_t operator()(const LatticePoint& p) const noexcept;
};

/// Nonempty finite subset of Z^d. Points are kept in lexicographic order,
/// which fixes the index map used by every matrix or weight vector built
/// from the set.
class FiniteSet {
 public:
  /// Throws ConfigError on an empty input, mixed dimensions or duplicates.
  FiniteSet(int dim, std::vector<LatticePoint> points);

  int dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return points_.size(); }
  const std::vector<LatticePoint>& points() const noexcept { return points_; }
  const LatticePoint& operator[](std::size_t i) const { return points_[i]; }
  auto begin() const { return points_.begin(); }
  auto end() const { return points_.end(); }

  bool contains(const LatticePoint& p) const;
  std::optional<std::size_t> index_of(const LatticePoint& p) const;

  /// Largest Euclidean distance between two points of the set.
  double diameter() const;
  /// Radius of the smallest origin-centred ball containing the set.
  double max_norm() const;

  friend bool operator==(const FiniteSet& a, const FiniteSet& b) = default;

 private:
  int dim_;
  std::vector<LatticePoint> points_;
};

enum class ShapeKind { ball, box, segment, random };

ShapeKind parse_shape_kind(const std::string& name);
std::string to_string(ShapeKind kind);

/// Parameters of a generated shape. `size` is the radius for balls, the
/// side for boxes and random subsets, and the length n of the segment
/// {0..n}e1.
struct ShapeSpec {
  ShapeKind kind = ShapeKind::ball;
  int size = 0;
  std::size_t cardinality = 0;        // random only
  std::optional<std::uint64_t> seed;  // random only
};

FiniteSet make_shape(const ShapeSpec& spec, int dim);

FiniteSet translate(const FiniteSet& s, const LatticePoint& z);
FiniteSet set_union(const FiniteSet& a, const FiniteSet& b);
FiniteSet negate(const FiniteSet& s);
bool intersects(const FiniteSet& a, const FiniteSet& b);

/// Minimal Euclidean distance between a point of `s` and a point of `t`.
double min_distance(const FiniteSet& s, const FiniteSet& t);

}  // namespace latcap
