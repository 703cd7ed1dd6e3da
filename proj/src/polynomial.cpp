#include "crvb/polynomial.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/LU>
#include <Eigen/SVD>

#include "crvb/error.hpp"

namespace crvb {

namespace {

constexpr Complex kI(0.0, 1.0);

Exponent zero_exponent(int m) { return Exponent(2 * m + 1, 0); }

void check_compatible(const MatrixPolynomial& a, const MatrixPolynomial& b) {
  require(a.m() == b.m() && a.rank() == b.rank(), "polynomial shape mismatch");
}

void enumerate(int nvars, int pos, int remaining, const std::vector<int>& cost, Exponent& cur,
               std::vector<Exponent>& out) {
  if (pos == nvars) {
    if (remaining == 0) out.push_back(cur);
    return;
  }
  for (int k = 0; k * cost[pos] <= remaining; ++k) {
    cur[pos] = k;
    enumerate(nvars, pos + 1, remaining - k * cost[pos], cost, cur, out);
  }
  cur[pos] = 0;
}

}  // namespace

Eigen::MatrixXcd elementary(int rank, int i, int j) {
  Eigen::MatrixXcd e = Eigen::MatrixXcd::Zero(rank, rank);
  e(i - 1, j - 1) = 1.0;
  return e;
}

std::vector<Exponent> exponents_of(int m, int order, bool weighted) {
  const int nv = 2 * m + 1;
  std::vector<int> cost(nv, 1);
  if (weighted) cost[nv - 1] = 2;
  std::vector<Exponent> out;
  Exponent cur(nv, 0);
  enumerate(nv, 0, order, cost, cur, out);
  std::sort(out.begin(), out.end());
  return out;
}

MatrixPolynomial MatrixPolynomial::constant(int m, const Eigen::MatrixXcd& c) {
  MatrixPolynomial p(m, static_cast<int>(c.rows()));
  p.add_term(zero_exponent(m), c);
  return p;
}

MatrixPolynomial MatrixPolynomial::identity(int m, int rank) {
  return constant(m, Eigen::MatrixXcd::Identity(rank, rank));
}

MatrixPolynomial MatrixPolynomial::monomial(int m, const Exponent& e, const Eigen::MatrixXcd& c) {
  require(static_cast<int>(e.size()) == 2 * m + 1, "exponent length mismatch");
  MatrixPolynomial p(m, static_cast<int>(c.rows()));
  p.add_term(e, c);
  return p;
}

MatrixPolynomial MatrixPolynomial::z(int m, int alpha, const Eigen::MatrixXcd& c) {
  Exponent e = zero_exponent(m);
  e[alpha - 1] = 1;
  return monomial(m, e, c);
}

MatrixPolynomial MatrixPolynomial::zbar(int m, int alpha, const Eigen::MatrixXcd& c) {
  Exponent e = zero_exponent(m);
  e[m + alpha - 1] = 1;
  return monomial(m, e, c);
}

MatrixPolynomial MatrixPolynomial::x(int m, const Eigen::MatrixXcd& c) {
  Exponent e = zero_exponent(m);
  e[2 * m] = 1;
  return monomial(m, e, c);
}

void MatrixPolynomial::add_term(const Exponent& e, const Eigen::MatrixXcd& c) {
  require(c.rows() == rank_ && c.cols() == rank_, "coefficient rank mismatch");
  auto it = terms_.find(e);
  if (it == terms_.end()) {
    terms_.emplace(e, c);
  } else {
    it->second += c;
  }
}

MatrixPolynomial& MatrixPolynomial::prune(double tol) {
  for (auto it = terms_.begin(); it != terms_.end();) {
    if (it->second.cwiseAbs().maxCoeff() <= tol) {
      it = terms_.erase(it);
    } else {
      ++it;
    }
  }
  return *this;
}

int MatrixPolynomial::degree_of(const Exponent& e) { return std::accumulate(e.begin(), e.end(), 0); }

int MatrixPolynomial::weight_of(const Exponent& e, int m) { return degree_of(e) + e[2 * m]; }

int MatrixPolynomial::degree() const {
  int d = -1;
  for (const auto& [e, c] : terms_) d = std::max(d, degree_of(e));
  return d;
}

int MatrixPolynomial::weight() const {
  int w = -1;
  for (const auto& [e, c] : terms_) w = std::max(w, weight_of(e, m_));
  return w;
}

MatrixPolynomial MatrixPolynomial::homogeneous_part(int degree) const {
  MatrixPolynomial out(m_, rank_);
  for (const auto& [e, c] : terms_)
    if (degree_of(e) == degree) out.terms_.emplace(e, c);
  return out;
}

MatrixPolynomial MatrixPolynomial::weighted_part(int weight) const {
  MatrixPolynomial out(m_, rank_);
  for (const auto& [e, c] : terms_)
    if (weight_of(e, m_) == weight) out.terms_.emplace(e, c);
  return out;
}

MatrixPolynomial MatrixPolynomial::truncated(int max_degree) const {
  MatrixPolynomial out(m_, rank_);
  for (const auto& [e, c] : terms_)
    if (degree_of(e) <= max_degree) out.terms_.emplace(e, c);
  return out;
}

namespace {

MatrixPolynomial differentiate(const MatrixPolynomial& p, int var) {
  MatrixPolynomial out(p.m(), p.rank());
  for (const auto& [e, c] : p.terms()) {
    if (e[var] == 0) continue;
    Exponent f = e;
    f[var] -= 1;
    out.add_term(f, static_cast<double>(e[var]) * c);
  }
  return out;
}

MatrixPolynomial multiply_var(const MatrixPolynomial& p, int var) {
  MatrixPolynomial out(p.m(), p.rank());
  for (const auto& [e, c] : p.terms()) {
    Exponent f = e;
    f[var] += 1;
    out.add_term(f, c);
  }
  return out;
}

}  // namespace

MatrixPolynomial MatrixPolynomial::d_z(int alpha) const { return differentiate(*this, alpha - 1); }
MatrixPolynomial MatrixPolynomial::d_zbar(int alpha) const {
  return differentiate(*this, m_ + alpha - 1);
}
MatrixPolynomial MatrixPolynomial::d_x() const { return differentiate(*this, 2 * m_); }
MatrixPolynomial MatrixPolynomial::times_z(int alpha) const { return multiply_var(*this, alpha - 1); }
MatrixPolynomial MatrixPolynomial::times_zbar(int alpha) const {
  return multiply_var(*this, m_ + alpha - 1);
}

MatrixPolynomial MatrixPolynomial::d_axis(int axis) const {
  if (axis == 2 * m_) return d_x();
  const int alpha = axis / 2 + 1;
  if (axis % 2 == 0) return d_z(alpha) + d_zbar(alpha);
  return kI * (d_z(alpha) - d_zbar(alpha));
}

MatrixPolynomial MatrixPolynomial::xbar(int alpha) const {
  return d_zbar(alpha) - kI * d_x().times_z(alpha);
}

MatrixPolynomial MatrixPolynomial::xhol(int alpha) const {
  return d_z(alpha) + kI * d_x().times_zbar(alpha);
}

MatrixPolynomial MatrixPolynomial::fs_derivative(int m, const std::vector<int>& s,
                                                 const std::vector<int>& r) const {
  MatrixPolynomial out = *this;
  for (int a = 0; a < static_cast<int>(r.size()); ++a)
    for (int k = 0; k < r[a]; ++k) out = out.xbar(a + 1);
  for (int a = 0; a < static_cast<int>(s.size()); ++a)
    for (int k = 0; k < s[a]; ++k) out = out.xhol(a + 1);
  for (int k = 0; k < m; ++k) out = out.t();
  return out;
}

MatrixPolynomial MatrixPolynomial::dilated(double kappa) const {
  require(kappa > 0.0, "dilation scale must be positive");
  const double sk = std::sqrt(kappa);
  MatrixPolynomial out(m_, rank_);
  for (const auto& [e, c] : terms_) {
    double f = 1.0;
    for (int v = 0; v < 2 * m_; ++v)
      for (int k = 0; k < e[v]; ++k) f *= sk;
    for (int k = 0; k < e[2 * m_]; ++k) f *= kappa;
    out.terms_.emplace(e, f * c);
  }
  return out;
}

MatrixPolynomial MatrixPolynomial::adjoint_coefficients() const {
  // Conjugate transpose as a function: z <-> zbar swap, coefficient adjoint.
  MatrixPolynomial out(m_, rank_);
  for (const auto& [e, c] : terms_) {
    Exponent f = e;
    for (int a = 0; a < m_; ++a) std::swap(f[a], f[m_ + a]);
    out.add_term(f, c.adjoint());
  }
  return out;
}

Eigen::MatrixXcd MatrixPolynomial::evaluate(const Eigen::VectorXd& coords) const {
  Eigen::MatrixXcd v = Eigen::MatrixXcd::Zero(rank_, rank_);
  if (terms_.empty()) return v;
  const int nv = 2 * m_ + 1;
  std::vector<Complex> base(nv);
  for (int a = 0; a < m_; ++a) {
    base[a] = Complex(coords[2 * a], coords[2 * a + 1]);
    base[m_ + a] = std::conj(base[a]);
  }
  base[2 * m_] = coords[2 * m_];
  // Small power cache keyed by variable.
  std::vector<std::vector<Complex>> pw(nv, std::vector<Complex>(1, 1.0));
  for (const auto& [e, c] : terms_) {
    Complex mono = 1.0;
    for (int k = 0; k < nv; ++k) {
      auto& cache = pw[k];
      while (static_cast<int>(cache.size()) <= e[k]) cache.push_back(cache.back() * base[k]);
      mono *= cache[e[k]];
    }
    v += mono * c;
  }
  return v;
}

Eigen::MatrixXcd MatrixPolynomial::value_at_origin() const {
  auto it = terms_.find(zero_exponent(m_));
  if (it == terms_.end()) return Eigen::MatrixXcd::Zero(rank_, rank_);
  return it->second;
}

double MatrixPolynomial::max_coefficient() const {
  double v = 0.0;
  for (const auto& [e, c] : terms_) v = std::max(v, c.cwiseAbs().maxCoeff());
  return v;
}

MatrixPolynomial& MatrixPolynomial::operator+=(const MatrixPolynomial& o) {
  if (rank_ == 0) {
    *this = o;
    return *this;
  }
  check_compatible(*this, o);
  for (const auto& [e, c] : o.terms_) add_term(e, c);
  return *this;
}

MatrixPolynomial& MatrixPolynomial::operator-=(const MatrixPolynomial& o) {
  check_compatible(*this, o);
  for (const auto& [e, c] : o.terms_) add_term(e, -c);
  return *this;
}

MatrixPolynomial& MatrixPolynomial::operator*=(Complex s) {
  for (auto& [e, c] : terms_) c *= s;
  return *this;
}

MatrixPolynomial operator+(MatrixPolynomial a, const MatrixPolynomial& b) { return a += b; }
MatrixPolynomial operator-(MatrixPolynomial a, const MatrixPolynomial& b) { return a -= b; }
MatrixPolynomial operator-(MatrixPolynomial a) { return a *= -1.0; }
MatrixPolynomial operator*(Complex s, MatrixPolynomial a) { return a *= s; }

MatrixPolynomial operator*(const MatrixPolynomial& a, const MatrixPolynomial& b) {
  return multiply_truncated(a, b, -1);
}

MatrixPolynomial operator*(const Eigen::MatrixXcd& c, const MatrixPolynomial& p) {
  MatrixPolynomial out(p.m(), p.rank());
  for (const auto& [e, t] : p.terms()) out.add_term(e, c * t);
  return out;
}

MatrixPolynomial operator*(const MatrixPolynomial& p, const Eigen::MatrixXcd& c) {
  MatrixPolynomial out(p.m(), p.rank());
  for (const auto& [e, t] : p.terms()) out.add_term(e, t * c);
  return out;
}

MatrixPolynomial multiply_truncated(const MatrixPolynomial& a, const MatrixPolynomial& b,
                                    int max_degree) {
  check_compatible(a, b);
  MatrixPolynomial out(a.m(), a.rank());
  const int nv = a.num_vars();
  Exponent e(nv);
  for (const auto& [ea, ca] : a.terms()) {
    const int da = MatrixPolynomial::degree_of(ea);
    for (const auto& [eb, cb] : b.terms()) {
      if (max_degree >= 0 && da + MatrixPolynomial::degree_of(eb) > max_degree) continue;
      for (int k = 0; k < nv; ++k) e[k] = ea[k] + eb[k];
      out.add_term(e, ca * cb);
    }
  }
  return out;
}

MatrixPolynomial inverse_series(const MatrixPolynomial& p, int max_degree) {
  const Eigen::MatrixXcd p0 = p.value_at_origin();
  Eigen::FullPivLU<Eigen::MatrixXcd> lu(p0);
  if (!lu.isInvertible())
    throw Error(ErrorKind::GaugeSingular, "series inverse: constant term is singular");
  const Eigen::MatrixXcd p0inv = lu.inverse();
  // p = p0 (I + N), N = p0^{-1} (p - p0); p^{-1} = (sum (-N)^k) p0^{-1}.
  MatrixPolynomial n = p0inv * (p - MatrixPolynomial::constant(p.m(), p0));
  n.prune();
  MatrixPolynomial term = MatrixPolynomial::identity(p.m(), p.rank());
  MatrixPolynomial sum = term;
  for (int k = 1; k <= max_degree; ++k) {
    term = -multiply_truncated(term, n, max_degree);
    term.prune();
    if (term.is_zero()) break;
    sum += term;
  }
  return sum * p0inv;
}

MatrixPolynomial random_polynomial(int m, int rank, int min_degree, int max_degree,
                                   std::mt19937_64& rng, double scale) {
  require(0 <= min_degree && min_degree <= max_degree, "bad degree range");
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  MatrixPolynomial p(m, rank);
  double total = 0.0;
  for (int d = min_degree; d <= max_degree; ++d)
    for (const auto& e : exponents_of(m, d, false)) {
      Eigen::MatrixXcd c(rank, rank);
      for (int i = 0; i < rank; ++i)
        for (int j = 0; j < rank; ++j) c(i, j) = Complex(u(rng), u(rng));
      total += c.jacobiSvd().singularValues()(0);
      p.add_term(e, c);
    }
  if (total > 0.0) p *= Complex(scale / total);
  return p;
}

}  // namespace crvb
