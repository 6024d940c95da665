#include "latcap/green.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <map>
#include <tuple>
#include <mutex>
#include <numbers>
#include <shared_mutex>
#include <sstream>
#include <unordered_map>

#include "latcap/bessel.hpp"
#include "latcap/errors.hpp"

namespace latcap {

namespace {

// 15-point Kronrod abscissae (positive half) and weights; the 7-point Gauss
// rule uses the odd-indexed abscissae.
constexpr double kXgk[8] = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.58608723546769113029414483825873, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr double kWgk[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr double kWg[4] = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

constexpr double kUMin = -40.0;
constexpr double kPanelWidth = 0.25;
constexpr int kTailTerms = 16;

class NodeTable {
 public:
  NodeTable() {
    const int kmax = kMaxGreenCoordinate;
    orders_ = kmax + 1;
    s_max_ = std::max(4.0 * kmax * kmax, 1e4);
    const double umax = std::log(s_max_);
    panels_ = static_cast<int>(std::ceil((umax - kUMin) / kPanelWidth));
    const double h = (umax - kUMin) / panels_;
    const int nodes = panels_ * 15;
    s_.resize(static_cast<std::size_t>(nodes));
    wk_.resize(s_.size());
    wg_.resize(s_.size());
    values_.resize(s_.size() * static_cast<std::size_t>(orders_));
    for (int p = 0; p < panels_; ++p) {
      const double centre = kUMin + (p + 0.5) * h;
      const double half = 0.5 * h;
      for (int j = 0; j < 15; ++j) {
        // j = 0..6 left abscissae, 7 centre, 8..14 right abscissae.
        const int a = j < 7 ? j : (j == 7 ? 7 : 14 - j);
        const double x = j < 7 ? -kXgk[a] : kXgk[a];
        const double u = centre + half * x;
        const double s = std::exp(u);
        const std::size_t n = static_cast<std::size_t>(p * 15 + j);
        s_[n] = s;
        // ds = s du.
        wk_[n] = half * kWgk[a] * s;
        wg_[n] = (a % 2 == 1) ? half * kWg[a / 2] * s : 0.0;
        bessel::scaled_i_sequence(s, std::span<double>(values_.data() + n * orders_, orders_));
      }
    }
    tail_coef_.resize(static_cast<std::size_t>(orders_) * kTailTerms);
    for (int k = 0; k < orders_; ++k) {
      const auto c = bessel::scaled_i_asymptotic_coefficients(k, kTailTerms);
      std::copy(c.begin(), c.end(), tail_coef_.begin() + static_cast<std::ptrdiff_t>(k) * kTailTerms);
    }
  }

  int panels() const noexcept { return panels_; }
  double s_max() const noexcept { return s_max_; }
  double s(std::size_t n) const noexcept { return s_[n]; }
  double wk(std::size_t n) const noexcept { return wk_[n]; }
  double wg(std::size_t n) const noexcept { return wg_[n]; }
  const double* values(std::size_t n) const noexcept { return values_.data() + n * orders_; }
  const double* tail_coefficients(int order) const noexcept {
    return tail_coef_.data() + static_cast<std::size_t>(order) * kTailTerms;
  }

 private:
  int orders_ = 0;
  int panels_ = 0;
  double s_max_ = 0.0;
  std::vector<double> s_, wk_, wg_, values_, tail_coef_;
};

const NodeTable& node_table() {
  static const NodeTable table;
  return table;
}

// int_S^inf s^p (2 pi s)^{-d/2} prod_i sum_k c_k(n_i) s^{-k} ds, with the
// magnitude of the last retained term.
GreenValue tail_integral(const int* orders, int dim, int p, const NodeTable& t) {
  double poly[kTailTerms] = {1.0};
  for (int i = 0; i < dim; ++i) {
    const double* c = t.tail_coefficients(orders[i]);
    double next[kTailTerms] = {};
    for (int a = 0; a < kTailTerms; ++a) {
      if (poly[a] == 0.0) continue;
      for (int b = 0; a + b < kTailTerms; ++b) next[a + b] += poly[a] * c[b];
    }
    std::copy(std::begin(next), std::end(next), std::begin(poly));
  }
  const double S = t.s_max();
  const double half_d = 0.5 * dim;
  const double pref = std::pow(2.0 * std::numbers::pi, -half_d);
  double sum = 0.0, last = 0.0;
  for (int k = 0; k < kTailTerms; ++k) {
    const double q = k + half_d - p - 1.0;
    const double term = pref * poly[k] * std::pow(S, -q) / q;
    sum += term;
    last = term;
  }
  return {sum, std::abs(last)};
}

void check_quadrature_point(const LatticePoint& x) {
  for (int i = 0; i < x.dim(); ++i)
    if (std::abs(x[i]) > kMaxGreenCoordinate)
      throw DomainError("Green's function coordinate exceeds " +
                        std::to_string(kMaxGreenCoordinate) + ": " + x.to_string());
}

void check_tol(double tol) {
  if (!(tol > 0.0 && tol < 1.0)) throw ConfigError("tolerance must lie in (0, 1)");
}

LatticePoint canonical(const LatticePoint& x) {
  LatticePoint c(x.dim());
  for (int i = 0; i < x.dim(); ++i) c[i] = std::abs(x[i]);
  std::array<int, kMaxDim> v{};
  for (int i = 0; i < x.dim(); ++i) v[static_cast<std::size_t>(i)] = c[i];
  std::sort(v.begin(), v.begin() + x.dim());
  return LatticePoint::from_coords(std::span<const int>(v.data(), static_cast<std::size_t>(x.dim())));
}

}  // namespace

GreenPair green_quadrature(const LatticePoint& x) {
  check_quadrature_point(x);
  const NodeTable& t = node_table();
  const int d = x.dim();
  int orders[kMaxDim];
  for (int i = 0; i < d; ++i) orders[i] = std::abs(x[i]);

  double g = 0.0, g_err = 0.0, gg = 0.0, gg_err = 0.0;
  for (int p = 0; p < t.panels(); ++p) {
    double k1 = 0.0, g1 = 0.0, k2 = 0.0, g2 = 0.0;
    for (int j = 0; j < 15; ++j) {
      const std::size_t n = static_cast<std::size_t>(p * 15 + j);
      const double* v = t.values(n);
      double f = 1.0;
      for (int i = 0; i < d; ++i) f *= v[orders[i]];
      const double fs = f * t.s(n);
      k1 += t.wk(n) * f;
      g1 += t.wg(n) * f;
      k2 += t.wk(n) * fs;
      g2 += t.wg(n) * fs;
    }
    g += k1;
    g_err += std::abs(k1 - g1);
    gg += k2;
    gg_err += std::abs(k2 - g2);
  }
  GreenPair out;
  const GreenValue tail_g = tail_integral(orders, d, 0, t);
  out.g = {d * (g + tail_g.value), d * (g_err + tail_g.error)};
  if (d >= 5) {
    const GreenValue tail_gg = tail_integral(orders, d, 1, t);
    const double d2 = static_cast<double>(d) * d;
    out.gg = {d2 * (gg + tail_gg.value), d2 * (gg_err + tail_gg.error)};
  } else {
    out.gg = {std::numeric_limits<double>::infinity(), 0.0};
  }
  return out;
}

double srw_green(const LatticePoint& x, double tol) {
  if (x.dim() < 3) throw DomainError("srw_green requires d >= 3");
  check_tol(tol);
  const GreenValue v = green_quadrature(x).g;
  if (!(v.error <= tol * v.value))
    throw NumericalError("srw_green quadrature missed tolerance at " + x.to_string(), v.error / v.value);
  return v.value;
}

double srw_green_convolution(const LatticePoint& x, double tol) {
  if (x.dim() < 5) throw DomainError("g*g is finite only for d >= 5");
  check_tol(tol);
  const GreenValue v = green_quadrature(x).gg;
  if (!(v.error <= tol * v.value))
    throw NumericalError("g*g quadrature missed tolerance at " + x.to_string(), v.error / v.value);
  return v.value;
}

double riesz_kernel(const LatticePoint& x, double alpha) {
  if (!(alpha > 0.0 && alpha < x.dim()))
    throw DomainError("riesz kernel requires 0 < alpha < d");
  return std::pow(1.0 + x.norm(), -alpha);
}

namespace {

double past_green_from(const GreenPair& p, bool at_origin, double m, double tol,
                       const LatticePoint& z) {
  const double value = (1.0 - 2.0 * m) * p.g.value + m * p.gg.value + (at_origin ? m - 1.0 : 0.0);
  const double error = std::abs(1.0 - 2.0 * m) * p.g.error + m * p.gg.error;
  if (!(value > 0.0) || !(error <= tol * value))
    throw NumericalError("brw_past_green missed tolerance at " + z.to_string(), error / value);
  return value;
}

}  // namespace

double brw_past_green(const LatticePoint& z, const OffspringDistribution& offspring, double tol) {
  if (z.dim() < 5) throw DomainError("brw_past_green requires d >= 5");
  check_tol(tol);
  return past_green_from(green_quadrature(z), z.is_zero(), offspring.tail_mean(), tol, z);
}

double srw_green_far_field_constant(int dim) {
  if (dim < 3) throw DomainError("far-field constant requires d >= 3");
  const double h = 0.5 * dim;
  return dim * std::tgamma(h - 1.0) / (2.0 * std::pow(std::numbers::pi, h));
}

std::string to_string(KernelKind kind) {
  switch (kind) {
    case KernelKind::srw_green: return "srw_green";
    case KernelKind::riesz: return "riesz";
    case KernelKind::brw_past_green: return "brw_past_green";
    case KernelKind::asymptotic: return "asymptotic";
  }
  return "unknown";
}

struct Kernel::Memo {
  std::shared_mutex mutex;
  std::unordered_map<LatticePoint, double, LatticePointHash> values;
};

Kernel::Kernel(KernelKind kind, int dim, double tol)
    : kind_(kind), dim_(dim), tol_(tol), memo_(std::make_shared<Memo>()) {
  if (dim < 1 || dim > kMaxDim) throw ConfigError("kernel dimension out of range");
}

Kernel Kernel::srw_green(int dim, double tol) {
  if (dim < 3) throw DomainError("srw_green requires d >= 3");
  check_tol(tol);
  return Kernel(KernelKind::srw_green, dim, tol);
}

Kernel Kernel::riesz(int dim, double alpha) {
  if (!(alpha > 0.0 && alpha < dim)) throw DomainError("riesz kernel requires 0 < alpha < d");
  Kernel k(KernelKind::riesz, dim, 0.0);
  k.alpha_ = alpha;
  return k;
}

Kernel Kernel::brw_past_green(int dim, const OffspringDistribution& offspring, double tol) {
  if (dim < 5) throw DomainError("brw_past_green requires d >= 5");
  check_tol(tol);
  Kernel k(KernelKind::brw_past_green, dim, tol);
  k.tail_mean_ = offspring.tail_mean();
  return k;
}

Kernel Kernel::asymptotic(int dim, double c, double exponent) {
  if (!(c > 0.0)) throw DomainError("asymptotic kernel constant must be positive");
  Kernel k(KernelKind::asymptotic, dim, 0.0);
  k.c_ = c;
  k.alpha_ = exponent;
  return k;
}

std::string Kernel::describe() const {
  std::ostringstream os;
  os << to_string(kind_) << "(d=" << dim_;
  switch (kind_) {
    case KernelKind::riesz: os << ", alpha=" << alpha_; break;
    case KernelKind::brw_past_green: os << ", tail_mean=" << tail_mean_ << ", tol=" << tol_; break;
    case KernelKind::asymptotic: os << ", c=" << c_ << ", exponent=" << alpha_; break;
    case KernelKind::srw_green: os << ", tol=" << tol_; break;
  }
  os << ")";
  return os.str();
}

double Kernel::evaluate(const LatticePoint& x) const {
  switch (kind_) {
    case KernelKind::srw_green: return latcap::srw_green(x, tol_);
    case KernelKind::riesz: return riesz_kernel(x, alpha_);
    case KernelKind::brw_past_green:
      return past_green_from(green_quadrature(x), x.is_zero(), tail_mean_, tol_, x);
    case KernelKind::asymptotic: return x.is_zero() ? c_ : c_ * std::pow(x.norm(), -alpha_);
  }
  return 0.0;
}

double Kernel::operator()(const LatticePoint& x) const {
  if (x.dim() != dim_)
    throw ConfigError("kernel dimension " + std::to_string(dim_) + " applied to " + x.to_string());
  if (kind_ == KernelKind::riesz || kind_ == KernelKind::asymptotic) return evaluate(x);
  const LatticePoint key = canonical(x);
  {
    std::shared_lock lock(memo_->mutex);
    auto it = memo_->values.find(key);
    if (it != memo_->values.end()) return it->second;
  }
  const double v = evaluate(key);
  std::unique_lock lock(memo_->mutex);
  memo_->values.emplace(key, v);
  return v;
}

Kernel shared_srw_green_kernel(int dim, double tol) {
  static std::mutex mutex;
  static std::map<std::pair<int, double>, Kernel> kernels;
  std::lock_guard lock(mutex);
  const auto key = std::make_pair(dim, tol);
  auto it = kernels.find(key);
  if (it == kernels.end()) it = kernels.emplace(key, Kernel::srw_green(dim, tol)).first;
  return it->second;
}

Kernel shared_past_green_kernel(int dim, const OffspringDistribution& offspring, double tol) {
  static std::mutex mutex;
  static std::map<std::tuple<int, double, double>, Kernel> kernels;
  std::lock_guard lock(mutex);
  const auto key = std::make_tuple(dim, offspring.tail_mean(), tol);
  auto it = kernels.find(key);
  if (it == kernels.end()) it = kernels.emplace(key, Kernel::brw_past_green(dim, offspring, tol)).first;
  return it->second;
}

namespace {

double far_field(double r, int dim, int p) {
  const double h = 0.5 * dim;
  return dim * std::pow(static_cast<double>(dim), p) * std::pow(2.0 * std::numbers::pi, -h) *
         std::pow(0.5 * r * r, 1.0 + p - h) * std::tgamma(h - 1.0 - p);
}

}  // namespace

double srw_green_asymptotic(double r, int dim) {
  if (dim < 3) throw DomainError("far-field form of g requires d >= 3");
  return far_field(r, dim, 0);
}

double srw_green_convolution_asymptotic(double r, int dim) {
  if (dim < 5) throw DomainError("far-field form of g*g requires d >= 5");
  return far_field(r, dim, 1);
}

struct GreenTable::Entry {
  std::atomic<double> g{-1.0};
  std::atomic<double> gg{-1.0};
};

GreenTable::GreenTable(int dim) : dim_(dim) {
  if (dim < 3 || dim > kMaxDim) throw DomainError("GreenTable requires 3 <= d <= 8");
  auto binom = [](int n, int k) {
    double v = 1.0;
    for (int i = 1; i <= k; ++i) v = v * (n - k + i) / i;
    return v;
  };
  limit_ = 32;
  while (limit_ > 4 && binom(limit_ + dim, dim) > 3e6) --limit_;
  const int rows = limit_ + dim + 1;
  binom_.assign(static_cast<std::size_t>(rows) * (dim + 1), 0);
  for (int n = 0; n < rows; ++n)
    for (int k = 0; k <= dim; ++k)
      binom_[static_cast<std::size_t>(n) * (dim + 1) + k] =
          k > n ? 0 : static_cast<std::size_t>(std::llround(binom(n, k)));
  size_ = static_cast<std::size_t>(std::llround(binom(limit_ + dim, dim)));
  entries_ = std::make_unique<Entry[]>(size_);
  for (int p = 0; p < 2; ++p) {
    far_k_[p] = 2 + 2 * p - dim;
    far_c_[p] = far_field(std::sqrt(2.0), dim, p);
  }
}

double GreenTable::far(double r, int p) const {
  // (r^2/2)^{k/2} = s^k with s = r / sqrt 2.
  const double s = r * std::numbers::sqrt2 * 0.5;
  double v = 1.0;
  for (int i = std::abs(far_k_[p]); i > 0; --i) v *= s;
  return far_c_[p] * (far_k_[p] < 0 ? 1.0 / v : v);
}

GreenTable::~GreenTable() = default;

const GreenTable& GreenTable::shared(int dim) {
  static std::mutex mutex;
  static std::map<int, std::unique_ptr<GreenTable>> tables;
  std::lock_guard lock(mutex);
  auto& slot = tables[dim];
  if (!slot) slot = std::make_unique<GreenTable>(dim);
  return *slot;
}

const GreenTable::Entry& GreenTable::entry(const LatticePoint& x, bool& far, double& r) const {
  std::array<int, kMaxDim> c{};
  int maxc = 0;
  for (int i = 0; i < dim_; ++i) {
    c[static_cast<std::size_t>(i)] = std::abs(x[i]);
    maxc = std::max(maxc, c[static_cast<std::size_t>(i)]);
  }
  static const Entry dummy;
  if (maxc > limit_) {
    far = true;
    r = x.norm();
    return dummy;
  }
  far = false;
  for (int i = 1; i < dim_; ++i)
    for (int j = i; j > 0 && c[static_cast<std::size_t>(j - 1)] > c[static_cast<std::size_t>(j)]; --j)
      std::swap(c[static_cast<std::size_t>(j - 1)], c[static_cast<std::size_t>(j)]);
  std::size_t rank = 0;
  for (int i = 0; i < dim_; ++i)
    rank += binom_[static_cast<std::size_t>(c[static_cast<std::size_t>(i)] + i) * (dim_ + 1) + i + 1];
  Entry& e = entries_[rank];
  if (e.g.load(std::memory_order_acquire) < 0.0) {
    const GreenPair p = green_quadrature(x);
    e.gg.store(p.gg.value, std::memory_order_relaxed);
    e.g.store(p.g.value, std::memory_order_release);
  }
  return e;
}

double GreenTable::g(const LatticePoint& x) const {
  bool far;
  double r;
  const Entry& e = entry(x, far, r);
  return far ? this->far(r, 0) : e.g.load(std::memory_order_acquire);
}

double GreenTable::gg(const LatticePoint& x) const {
  if (dim_ < 5) throw DomainError("g*g requires d >= 5");
  bool far;
  double r;
  const Entry& e = entry(x, far, r);
  if (far) return this->far(r, 1);
  e.g.load(std::memory_order_acquire);
  return e.gg.load(std::memory_order_relaxed);
}

double GreenTable::past(const LatticePoint& x, double m) const {
  if (dim_ < 5) throw DomainError("past Green's function requires d >= 5");
  bool far;
  double r;
  const Entry& e = entry(x, far, r);
  if (far) return (1.0 - 2.0 * m) * this->far(r, 0) + m * this->far(r, 1);
  const double g = e.g.load(std::memory_order_acquire);
  const double gg = e.gg.load(std::memory_order_relaxed);
  return (1.0 - 2.0 * m) * g + m * gg + (x.is_zero() ? m - 1.0 : 0.0);
}

Matrix green_matrix(const FiniteSet& s, const Kernel& k) {
  const std::size_t n = s.size();
  Matrix m(n);
  for (std::size_t i = 0; i < n; ++i) {
    m(i, i) = k(s[i] - s[i]);
    for (std::size_t j = i + 1; j < n; ++j) {
      const double v = k(s[j] - s[i]);
      m(i, j) = v;
      m(j, i) = v;
    }
  }
  return m;
}

FarFieldFit fit_far_field_constant(const Kernel& k, const LatticePoint& direction,
                                   const std::vector<int>& radii, double exponent) {
  if (radii.size() < 2) throw ConfigError("far-field fit needs at least two radii");
  if (direction.is_zero()) throw ConfigError("far-field fit direction must be nonzero");
  FarFieldFit fit;
  fit.exponent = exponent;
  for (int r : radii) {
    const LatticePoint x = direction.scaled(r);
    const double dist = x.norm();
    fit.radii.push_back(dist);
    fit.scaled.push_back(k(x) * std::pow(dist, exponent));
  }
  const std::size_t n = fit.radii.size();
  const double r1 = fit.radii[n - 2], r2 = fit.radii[n - 1];
  const double w1 = 1.0 / (r1 * r1), w2 = 1.0 / (r2 * r2);
  fit.constant = (fit.scaled[n - 1] * w1 - fit.scaled[n - 2] * w2) / (w1 - w2);
  return fit;
}

}  // namespace latcap
