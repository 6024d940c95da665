#include "latcap/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <unordered_set>

#include "latcap/errors.hpp"
#include "latcap/rng.hpp"

namespace latcap {

namespace {

void check_dim(int dim) {
  if (dim < 1 || dim > kMaxDim)
    throw ConfigError("dimension must be in [1, " + std::to_string(kMaxDim) + "], got " +
                      std::to_string(dim));
}

void check_same_dim(int a, int b) {
  if (a != b)
    throw ConfigError("dimension mismatch: " + std::to_string(a) + " vs " + std::to_string(b));
}

}  // namespace

LatticePoint::LatticePoint(int dim) : dim_(dim) { check_dim(dim); }

LatticePoint::LatticePoint(std::initializer_list<int> coords)
    : dim_(static_cast<int>(coords.size())) {
  check_dim(dim_);
  std::copy(coords.begin(), coords.end(), c_.begin());
}

LatticePoint LatticePoint::from_coords(std::span<const int> coords) {
  LatticePoint p(static_cast<int>(coords.size()));
  std::copy(coords.begin(), coords.end(), p.c_.begin());
  return p;
}

LatticePoint LatticePoint::unit(int dim, int axis, int sign) {
  LatticePoint p(dim);
  if (axis < 0 || axis >= dim) throw ConfigError("unit vector axis out of range");
  p[axis] = sign;
  return p;
}

std::vector<int> LatticePoint::coords() const { return {c_.begin(), c_.begin() + dim_}; }

LatticePoint LatticePoint::operator+(const LatticePoint& o) const {
  check_same_dim(dim_, o.dim_);
  LatticePoint r = *this;
  for (int i = 0; i < dim_; ++i) r.c_[i] += o.c_[i];
  return r;
}

LatticePoint LatticePoint::operator-(const LatticePoint& o) const {
  check_same_dim(dim_, o.dim_);
  LatticePoint r = *this;
  for (int i = 0; i < dim_; ++i) r.c_[i] -= o.c_[i];
  return r;
}

LatticePoint LatticePoint::operator-() const {
  LatticePoint r = *this;
  for (int i = 0; i < dim_; ++i) r.c_[i] = -r.c_[i];
  return r;
}

LatticePoint LatticePoint::scaled(int k) const {
  LatticePoint r = *this;
  for (int i = 0; i < dim_; ++i) r.c_[i] *= k;
  return r;
}

std::int64_t LatticePoint::norm2() const noexcept {
  std::int64_t s = 0;
  for (int i = 0; i < dim_; ++i) s += static_cast<std::int64_t>(c_[i]) * c_[i];
  return s;
}

double LatticePoint::norm() const noexcept { return std::sqrt(static_cast<double>(norm2())); }

bool LatticePoint::is_zero() const noexcept {
  for (int i = 0; i < dim_; ++i)
    if (c_[i] != 0) return false;
  return true;
}

bool operator==(const LatticePoint& a, const LatticePoint& b) noexcept {
  return a.dim_ == b.dim_ && a.c_ == b.c_;
}

std::strong_ordering operator<=>(const LatticePoint& a, const LatticePoint& b) noexcept {
  if (auto c = a.dim_ <=> b.dim_; c != 0) return c;
  for (int i = 0; i < a.dim_; ++i)
    if (auto c = a.c_[i] <=> b.c_[i]; c != 0) return c;
  return std::strong_ordering::equal;
}

std::string LatticePoint::to_string() const {
  std::ostringstream os;
  os << '(';
  for (int i = 0; i < dim_; ++i) os << (i ? "," : "") << c_[i];
  os << ')';
  return os.str();
}

std::size_t LatticePointHash::operator()(const LatticePoint& p) const noexcept {
  std::uint64_t h = static_cast<std::uint64_t>(p.dim());
  for (int i = 0; i < p.dim(); ++i)
    h = splitmix64(h ^ static_cast<std::uint64_t>(static_cast<std::uint32_t>(p[i])));
  return static_cast<std::size_t>(h);
}

FiniteSet::FiniteSet(int dim, std::vector<LatticePoint> points) : dim_(dim), points_(std::move(points)) {
  check_dim(dim);
  if (points_.empty()) throw ConfigError("finite set must be nonempty");
  for (const auto& p : points_) check_same_dim(dim, p.dim());
  std::sort(points_.begin(), points_.end());
  if (std::adjacent_find(points_.begin(), points_.end()) != points_.end())
    throw ConfigError("finite set contains duplicate points");
}

bool FiniteSet::contains(const LatticePoint& p) const {
  return std::binary_search(points_.begin(), points_.end(), p);
}

std::optional<std::size_t> FiniteSet::index_of(const LatticePoint& p) const {
  auto it = std::lower_bound(points_.begin(), points_.end(), p);
  if (it == points_.end() || *it != p) return std::nullopt;
  return static_cast<std::size_t>(it - points_.begin());
}

double FiniteSet::diameter() const {
  std::int64_t best = 0;
  for (std::size_t i = 0; i < points_.size(); ++i)
    for (std::size_t j = i + 1; j < points_.size(); ++j)
      best = std::max(best, (points_[i] - points_[j]).norm2());
  return std::sqrt(static_cast<double>(best));
}

double FiniteSet::max_norm() const {
  std::int64_t best = 0;
  for (const auto& p : points_) best = std::max(best, p.norm2());
  return std::sqrt(static_cast<double>(best));
}

ShapeKind parse_shape_kind(const std::string& name) {
  if (name == "ball") return ShapeKind::ball;
  if (name == "box") return ShapeKind::box;
  if (name == "segment") return ShapeKind::segment;
  if (name == "random") return ShapeKind::random;
  throw ConfigError("unknown shape kind '" + name + "'");
}

std::string to_string(ShapeKind kind) {
  switch (kind) {
    case ShapeKind::ball: return "ball";
    case ShapeKind::box: return "box";
    case ShapeKind::segment: return "segment";
    case ShapeKind::random: return "random";
  }
  return "?";
}

namespace {

// Visits every point of the box [lo, hi]^d in lexicographic order.
template <typename F>
void for_each_in_box(int dim, int lo, int hi, F&& f) {
  LatticePoint p(dim);
  for (int i = 0; i < dim; ++i) p[i] = lo;
  while (true) {
    f(p);
    int i = dim - 1;
    while (i >= 0 && p[i] == hi) {
      p[i] = lo;
      --i;
    }
    if (i < 0) return;
    ++p[i];
  }
}

}  // namespace

FiniteSet make_shape(const ShapeSpec& spec, int dim) {
  check_dim(dim);
  if (spec.size < 0) throw ConfigError("shape size must be nonnegative");
  std::vector<LatticePoint> pts;
  switch (spec.kind) {
    case ShapeKind::ball: {
      const std::int64_t r2 = static_cast<std::int64_t>(spec.size) * spec.size;
      for_each_in_box(dim, -spec.size, spec.size, [&](const LatticePoint& p) {
        if (p.norm2() <= r2) pts.push_back(p);
      });
      break;
    }
    case ShapeKind::box:
      for_each_in_box(dim, 0, spec.size, [&](const LatticePoint& p) { pts.push_back(p); });
      break;
    case ShapeKind::segment:
      for (int k = 0; k <= spec.size; ++k) pts.push_back(LatticePoint::unit(dim, 0).scaled(k));
      break;
    case ShapeKind::random: {
      if (!spec.seed) throw ConfigError("random shape requires a seed");
      if (spec.cardinality == 0) throw ConfigError("random shape requires a positive cardinality");
      const double box_points = std::pow(static_cast<double>(spec.size) + 1.0, dim);
      if (static_cast<double>(spec.cardinality) > box_points)
        throw ConfigError("random shape cardinality exceeds the number of box points");
      Stream rng = Stream::derive(*spec.seed, {0x5A4E, static_cast<std::uint64_t>(dim)});
      std::unordered_set<LatticePoint, LatticePointHash> chosen;
      while (chosen.size() < spec.cardinality) {
        LatticePoint p(dim);
        for (int i = 0; i < dim; ++i) p[i] = static_cast<int>(rng.below(static_cast<std::uint32_t>(spec.size) + 1));
        if (chosen.insert(p).second) pts.push_back(p);
      }
      break;
    }
  }
  if (pts.empty()) throw ConfigError("shape is empty");
  return FiniteSet(dim, std::move(pts));
}

FiniteSet translate(const FiniteSet& s, const LatticePoint& z) {
  check_same_dim(s.dim(), z.dim());
  std::vector<LatticePoint> pts;
  pts.reserve(s.size());
  for (const auto& p : s) pts.push_back(p + z);
  return FiniteSet(s.dim(), std::move(pts));
}

FiniteSet set_union(const FiniteSet& a, const FiniteSet& b) {
  check_same_dim(a.dim(), b.dim());
  std::vector<LatticePoint> pts;
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(pts));
  return FiniteSet(a.dim(), std::move(pts));
}

FiniteSet negate(const FiniteSet& s) {
  std::vector<LatticePoint> pts;
  for (const auto& p : s) pts.push_back(-p);
  return FiniteSet(s.dim(), std::move(pts));
}

bool intersects(const FiniteSet& a, const FiniteSet& b) {
  check_same_dim(a.dim(), b.dim());
  for (const auto& p : a)
    if (b.contains(p)) return true;
  return false;
}

double min_distance(const FiniteSet& s, const FiniteSet& t) {
  check_same_dim(s.dim(), t.dim());
  std::int64_t best = std::numeric_limits<std::int64_t>::max();
  for (const auto& p : s)
    for (const auto& q : t) best = std::min(best, (p - q).norm2());
  return std::sqrt(static_cast<double>(best));
}

}  // namespace latcap
