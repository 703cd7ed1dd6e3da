#include "crvb/exact_form.hpp"

#include <cmath>

#include <Eigen/LU>

#include "crvb/error.hpp"

namespace crvb {

namespace {

// The three algebras the gauge formula is evaluated in.

struct ValueAlgebra {
  using T = Eigen::MatrixXcd;
  T mul(const T& a, const T& b) const { return a * b; }
  T add(const T& a, const T& b) const { return a + b; }
  T neg(const T& a) const { return -a; }
  T inv(const T& a) const { return a.inverse(); }
};

struct JetAlgebra {
  using T = MatrixJet;
  T mul(const T& a, const T& b) const {
    T r;
    r.value = a.value * b.value;
    r.d.resize(a.d.size());
    for (std::size_t k = 0; k < a.d.size(); ++k) r.d[k] = a.d[k] * b.value + a.value * b.d[k];
    return r;
  }
  T add(const T& a, const T& b) const {
    T r;
    r.value = a.value + b.value;
    r.d.resize(a.d.size());
    for (std::size_t k = 0; k < a.d.size(); ++k) r.d[k] = a.d[k] + b.d[k];
    return r;
  }
  T neg(const T& a) const {
    T r = a;
    r.value = -r.value;
    for (auto& x : r.d) x = -x;
    return r;
  }
  T inv(const T& a) const {
    T r;
    r.value = a.value.inverse();
    r.d.resize(a.d.size());
    for (std::size_t k = 0; k < a.d.size(); ++k) r.d[k] = -r.value * a.d[k] * r.value;
    return r;
  }
};

struct SeriesAlgebra {
  using T = MatrixPolynomial;
  int degree;
  T mul(const T& a, const T& b) const { return multiply_truncated(a, b, degree); }
  T add(const T& a, const T& b) const { return a + b; }
  T neg(const T& a) const { return -a; }
  T inv(const T& a) const { return inverse_series(a, degree); }
};

// Shared gauge formula. `p` holds the raw factor polynomials (evaluated in the
// algebra), `xp[i][alpha]` their Xbar derivatives, `base[alpha]` omega_p.
template <class Alg>
std::vector<typename Alg::T> gauge_formula(const Alg& alg, const std::vector<bool>& inverted,
                                           const std::vector<typename Alg::T>& p,
                                           const std::vector<std::vector<typename Alg::T>>& xp,
                                           const std::vector<typename Alg::T>& base,
                                           const typename Alg::T& one) {
  using T = typename Alg::T;
  const std::size_t q = p.size();
  const std::size_t m = base.size();
  if (q == 0) return base;

  std::vector<T> f(q), finv(q);
  std::vector<std::vector<T>> xf(q);
  for (std::size_t i = 0; i < q; ++i) {
    const T pinv = alg.inv(p[i]);
    f[i] = inverted[i] ? pinv : p[i];
    finv[i] = inverted[i] ? p[i] : pinv;
    xf[i].resize(m);
    for (std::size_t a = 0; a < m; ++a)
      xf[i][a] = inverted[i] ? alg.neg(alg.mul(alg.mul(pinv, xp[i][a]), pinv)) : xp[i][a];
  }
  // prefix[i] = f_0..f_{i-1}, suffix[i] = f_{i+1}..f_{q-1}
  std::vector<T> prefix(q + 1), suffix(q + 1);
  prefix[0] = one;
  for (std::size_t i = 0; i < q; ++i) prefix[i + 1] = alg.mul(prefix[i], f[i]);
  suffix[q] = one;
  for (std::size_t i = q; i-- > 0;) suffix[i] = alg.mul(f[i], suffix[i + 1]);
  T cinv = finv[q - 1];
  for (std::size_t i = q - 1; i-- > 0;) cinv = alg.mul(cinv, finv[i]);
  const T& c = prefix[q];

  std::vector<T> out(m);
  for (std::size_t a = 0; a < m; ++a) {
    T xc = alg.mul(alg.mul(prefix[0], xf[0][a]), suffix[1]);
    for (std::size_t i = 1; i < q; ++i)
      xc = alg.add(xc, alg.mul(alg.mul(prefix[i], xf[i][a]), suffix[i + 1]));
    out[a] = alg.mul(alg.add(xc, alg.mul(c, base[a])), cinv);
  }
  return out;
}

}  // namespace

ExactForm::ExactForm(int m, int rank) : m_(m), rank_(rank) {
  base_.assign(m, MatrixPolynomial(m, rank));
  prepare_base();
}

void ExactForm::prepare_base() {
  dbase_.assign(m_, {});
  for (int a = 0; a < m_; ++a)
    for (int ax = 0; ax < 2 * m_ + 1; ++ax) dbase_[a].push_back(base_[a].d_axis(ax));
}

ExactForm::Factor ExactForm::make_factor(const MatrixPolynomial& p, bool inverted) {
  Factor f;
  f.p = p;
  f.inverted = inverted;
  const int m = p.m();
  for (int ax = 0; ax < 2 * m + 1; ++ax) f.dp.push_back(p.d_axis(ax));
  for (int a = 1; a <= m; ++a) {
    f.xbar.push_back(p.xbar(a));
    std::vector<MatrixPolynomial> d;
    for (int ax = 0; ax < 2 * m + 1; ++ax) d.push_back(f.xbar.back().d_axis(ax));
    f.dxbar.push_back(std::move(d));
  }
  return f;
}

ExactForm ExactForm::from_polynomials(const PolyForm& form) {
  require(!form.empty(), "empty form");
  ExactForm e(form.front().m(), form.front().rank());
  require(static_cast<int>(form.size()) == e.m_, "form needs n-1 components");
  e.base_ = form;
  e.prepare_base();
  return e;
}

ExactForm ExactForm::pure_gauge(const MatrixPolynomial& a) {
  ExactForm e(a.m(), a.rank());
  e.factors_.push_back(make_factor(a, true));
  return e;
}

ExactForm ExactForm::gauged(const MatrixPolynomial& a) const {
  require(a.m() == m_ && a.rank() == rank_, "gauge shape mismatch");
  ExactForm e = *this;
  e.factors_.insert(e.factors_.begin(), make_factor(a, false));
  return e;
}

ExactForm ExactForm::pulled_back(double kappa) const {
  ExactForm e(m_, rank_);
  const double sk = std::sqrt(kappa);
  for (int a = 0; a < m_; ++a) e.base_[a] = Complex(sk) * base_[a].dilated(kappa);
  e.prepare_base();
  for (const auto& f : factors_) e.factors_.push_back(make_factor(f.p.dilated(kappa), f.inverted));
  return e;
}

std::vector<Eigen::MatrixXcd> ExactForm::evaluate(const Eigen::VectorXd& coords) const {
  std::vector<bool> inv;
  std::vector<Eigen::MatrixXcd> p;
  std::vector<std::vector<Eigen::MatrixXcd>> xp;
  for (const auto& f : factors_) {
    inv.push_back(f.inverted);
    p.push_back(f.p.evaluate(coords));
    std::vector<Eigen::MatrixXcd> x;
    for (const auto& xb : f.xbar) x.push_back(xb.evaluate(coords));
    xp.push_back(std::move(x));
  }
  std::vector<Eigen::MatrixXcd> base;
  for (const auto& b : base_) base.push_back(b.evaluate(coords));
  return gauge_formula(ValueAlgebra{}, inv, p, xp, base,
                       Eigen::MatrixXcd::Identity(rank_, rank_));
}

std::vector<MatrixJet> ExactForm::evaluate_jet(const Eigen::VectorXd& coords) const {
  const int naxes = 2 * m_ + 1;
  auto jet_of = [&](const MatrixPolynomial& v, const std::vector<MatrixPolynomial>& dv) {
    MatrixJet j;
    j.value = v.evaluate(coords);
    for (int ax = 0; ax < naxes; ++ax) j.d.push_back(dv[ax].evaluate(coords));
    return j;
  };
  std::vector<bool> inv;
  std::vector<MatrixJet> p;
  std::vector<std::vector<MatrixJet>> xp;
  for (const auto& f : factors_) {
    inv.push_back(f.inverted);
    p.push_back(jet_of(f.p, f.dp));
    std::vector<MatrixJet> x;
    for (int a = 0; a < m_; ++a) x.push_back(jet_of(f.xbar[a], f.dxbar[a]));
    xp.push_back(std::move(x));
  }
  std::vector<MatrixJet> base;
  for (int a = 0; a < m_; ++a) base.push_back(jet_of(base_[a], dbase_[a]));
  MatrixJet one;
  one.value = Eigen::MatrixXcd::Identity(rank_, rank_);
  one.d.assign(naxes, Eigen::MatrixXcd::Zero(rank_, rank_));
  return gauge_formula(JetAlgebra{}, inv, p, xp, base, one);
}

PolyForm ExactForm::taylor(int degree) const {
  require(degree >= 0, "Taylor degree must be nonnegative");
  SeriesAlgebra alg{degree};
  std::vector<bool> inv;
  std::vector<MatrixPolynomial> p;
  std::vector<std::vector<MatrixPolynomial>> xp;
  for (const auto& f : factors_) {
    inv.push_back(f.inverted);
    p.push_back(f.p.truncated(degree));
    std::vector<MatrixPolynomial> x;
    for (const auto& xb : f.xbar) x.push_back(xb.truncated(degree));
    xp.push_back(std::move(x));
  }
  std::vector<MatrixPolynomial> base;
  for (const auto& b : base_) base.push_back(b.truncated(degree));
  auto out = gauge_formula(alg, inv, p, xp, base, MatrixPolynomial::identity(m_, rank_));
  for (auto& o : out) o = o.truncated(degree).prune();
  return out;
}

}  // namespace crvb
