#include "latcap/numerics.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

#include "latcap/errors.hpp"

namespace latcap {

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

bool Matrix::is_symmetric() const noexcept {
  for (std::size_t i = 0; i < n_; ++i)
    for (std::size_t j = i + 1; j < n_; ++j)
      if ((*this)(i, j) != (*this)(j, i)) return false;
  return true;
}

std::vector<double> Matrix::multiply(const std::vector<double>& v) const {
  std::vector<double> out(n_, 0.0);
  for (std::size_t i = 0; i < n_; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < n_; ++j) s += (*this)(i, j) * v[j];
    out[i] = s;
  }
  return out;
}

double Matrix::quadratic_form(const std::vector<double>& v) const {
  const auto mv = multiply(v);
  double s = 0.0;
  for (std::size_t i = 0; i < n_; ++i) s += v[i] * mv[i];
  return s;
}

double WeightVector::total() const {
  double s = 0.0;
  for (double w : weights) s += w;
  return s;
}

double WeightVector::at(const LatticePoint& p) const {
  const auto i = base.index_of(p);
  return i ? weights[*i] : 0.0;
}

SpdSolution solve_spd(const Matrix& m, const std::vector<double>& rhs) {
  const std::size_t n = m.size();
  if (rhs.size() != n) throw ConfigError("solve_spd: matrix and right-hand side sizes differ");
  if (!m.is_symmetric()) throw PreconditionError("solve_spd: matrix is not symmetric");
  if (n == 0) return {};
  using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const Eigen::Map<const RowMajor> a(m.data(), static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  const Eigen::Map<const Eigen::VectorXd> b(rhs.data(), static_cast<Eigen::Index>(n));
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(a);
  // Eigen's estimate ignores zero pivots, so the pivot spread caps it.
  const Eigen::VectorXd piv = ldlt.vectorD().cwiseAbs();
  const double spread = piv.maxCoeff() > 0.0 ? piv.minCoeff() / piv.maxCoeff() : 0.0;
  const double rcond = std::min(ldlt.rcond(), spread);
  if (ldlt.info() != Eigen::Success || !(rcond > 1e3 * std::numeric_limits<double>::epsilon()))
    throw NumericalError("solve_spd: matrix is numerically singular", rcond);
  const Eigen::VectorXd x = ldlt.solve(b);
  const double scale = b.lpNorm<Eigen::Infinity>();
  const double residual = (a * x - b).lpNorm<Eigen::Infinity>();
  if (!(residual <= 1e-10 * scale) && scale > 0.0)
    throw NumericalError("solve_spd: residual above 1e-10 |rhs|", rcond);
  SpdSolution out;
  out.x.assign(x.data(), x.data() + n);
  out.rcond = rcond;
  out.residual = residual;
  return out;
}

SimplexSolution min_energy_simplex(const Matrix& m, double tol, int max_iter) {
  const std::size_t n = m.size();
  if (n == 0) throw ConfigError("min_energy_simplex: empty matrix");
  if (!m.is_symmetric()) throw PreconditionError("min_energy_simplex: matrix is not symmetric");
  if (!(tol >= 0.0)) throw ConfigError("min_energy_simplex: tolerance must be nonnegative");

  std::vector<double> mu(n, 1.0 / static_cast<double>(n));
  std::vector<double> y = m.multiply(mu);  // M mu
  std::vector<double> md(n);

  auto certificate = [&](int it) {
    double energy = 0.0;
    for (std::size_t i = 0; i < n; ++i) energy += mu[i] * y[i];
    const double ymin = *std::min_element(y.begin(), y.end());
    return QpCertificate{energy, std::max(0.0, 2.0 * (energy - ymin)), it};
  };

  QpCertificate best = certificate(0);
  for (int it = 0; it < max_iter; ++it) {
    if (it % 64 == 0) y = m.multiply(mu);
    const QpCertificate cert = certificate(it);
    best = cert;
    if (cert.duality_gap <= tol) return {mu, cert};

    std::size_t s = 0, a = n;
    for (std::size_t i = 1; i < n; ++i)
      if (y[i] < y[s]) s = i;
    for (std::size_t i = 0; i < n; ++i)
      if (mu[i] > 0.0 && (a == n || y[i] > y[a])) a = i;

    // Directional slopes of f = mu^T M mu are twice these.
    const double fw_slope = y[s] - cert.energy;
    const double away_slope = cert.energy - y[a];
    const bool forward = fw_slope <= away_slope || mu[a] >= 1.0;
    double gmax;
    if (forward) {
      for (std::size_t i = 0; i < n; ++i) md[i] = m(i, s) - y[i];
      gmax = 1.0;
    } else {
      for (std::size_t i = 0; i < n; ++i) md[i] = y[i] - m(i, a);
      gmax = mu[a] / (1.0 - mu[a]);
    }
    // f(mu + g d) = f + 2 g d^T M mu + g^2 d^T M d.
    const double slope = forward ? fw_slope : away_slope;
    const double curv = forward ? m(s, s) - 2.0 * y[s] + cert.energy
                                : m(a, a) - 2.0 * y[a] + cert.energy;
    double gamma = curv > 0.0 ? -slope / curv : gmax;
    gamma = std::clamp(gamma, 0.0, gmax);
    if (gamma == 0.0) break;

    if (forward) {
      for (std::size_t i = 0; i < n; ++i) mu[i] *= (1.0 - gamma);
      mu[s] += gamma;
    } else {
      for (std::size_t i = 0; i < n; ++i) mu[i] *= (1.0 + gamma);
      mu[a] -= gamma;
      if (gamma == gmax) mu[a] = 0.0;
    }
    for (std::size_t i = 0; i < n; ++i) y[i] += gamma * md[i];
  }
  y = m.multiply(mu);
  best = certificate(max_iter);
  if (best.duality_gap <= tol) return {mu, best};
  throw NumericalError("min_energy_simplex: duality gap above tolerance", best.duality_gap);
}

}  // namespace latcap
