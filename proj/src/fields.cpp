#include "crvb/fields.hpp"

#include <sstream>

#include <Eigen/Dense>

#include "crvb/error.hpp"

namespace crvb {

double spectral_norm(const Eigen::Ref<const Eigen::MatrixXcd>& m) {
  if (m.rows() == 1) return std::abs(m(0, 0));
  if (m.rows() == 2) {
    // Largest eigenvalue of the 2x2 Gram matrix in closed form.
    const Eigen::Matrix2cd g = m.adjoint() * m;
    const double a = g(0, 0).real();
    const double d = g(1, 1).real();
    const double b2 = std::norm(g(0, 1));
    const double tr = 0.5 * (a + d);
    const double disc = std::sqrt(0.25 * (a - d) * (a - d) + b2);
    return std::sqrt(std::max(0.0, tr + disc));
  }
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(m);
  return svd.singularValues()(0);
}

namespace {

double smallest_singular(const Eigen::Ref<const Eigen::MatrixXcd>& m) {
  if (m.rows() == 1) return std::abs(m(0, 0));
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(m);
  return svd.singularValues()(svd.singularValues().size() - 1);
}

void check_same(const MatrixField& a, const MatrixField& b) {
  require(a.chart().same_lattice(b.chart()), "fields live on different lattices");
  require(a.rank() == b.rank(), "rank mismatch");
}

template <class Op>
MatrixField combine(const MatrixField& a, const MatrixField& b, Op op) {
  check_same(a, b);
  MatrixField out(a.chart_ptr(), a.rank());
  for (std::size_t i = 0; i < a.size(); ++i) {
    const bool d = a.defined(i) && b.defined(i);
    out.set_defined(i, d);
    if (d) out.at(i) = op(a.at(i), b.at(i));
  }
  return out;
}

}  // namespace

MatrixField::MatrixField(ChartPtr chart, int rank)
    : chart_(std::move(chart)),
      rank_(rank),
      values_(Eigen::MatrixXcd::Zero(rank * rank, static_cast<Eigen::Index>(chart_->size()))),
      defined_(chart_->size(), 1) {
  require(rank >= 1, "rank must be positive");
}

MatrixField MatrixField::constant(ChartPtr chart, const Eigen::MatrixXcd& value) {
  MatrixField f(std::move(chart), static_cast<int>(value.rows()));
  for (std::size_t i = 0; i < f.size(); ++i) f.at(i) = value;
  f.set_polynomial(std::make_shared<MatrixPolynomial>(
      MatrixPolynomial::constant(f.chart().n() - 1, value)));
  return f;
}

MatrixField MatrixField::identity(ChartPtr chart, int rank) {
  return constant(std::move(chart), Eigen::MatrixXcd::Identity(rank, rank));
}

MatrixField MatrixField::sample(ChartPtr chart, const MatrixPolynomial& p) {
  require(p.m() == chart->n() - 1, "polynomial dimension does not match chart");
  MatrixField f(chart, p.rank());
  for (std::size_t i = 0; i < f.size(); ++i) f.at(i) = p.evaluate(chart->coords(i));
  f.set_polynomial(std::make_shared<MatrixPolynomial>(p));
  return f;
}

MatrixField MatrixField::on_chart(ChartPtr chart) const {
  require(chart->same_lattice(*chart_), "on_chart requires the same lattice");
  MatrixField out = *this;
  out.chart_ = std::move(chart);
  return out;
}

ConnectionForm::ConnectionForm(ChartPtr chart, int rank) {
  for (int a = 0; a < chart->n() - 1; ++a) components.emplace_back(chart, rank);
}

ConnectionForm ConnectionForm::sample(ChartPtr chart, const PolyForm& form) {
  require(static_cast<int>(form.size()) == chart->n() - 1, "form needs n-1 components");
  ConnectionForm w;
  for (const auto& p : form) w.components.push_back(MatrixField::sample(chart, p));
  return w;
}

ConnectionForm ConnectionForm::on_chart(ChartPtr chart) const {
  ConnectionForm out;
  out.exact = exact;
  for (const auto& c : components) out.components.push_back(c.on_chart(chart));
  return out;
}

TwoForm::TwoForm(ChartPtr chart, int rank, int m_) : m(m_) {
  for (int k = 0; k < m * (m - 1) / 2; ++k) components.emplace_back(chart, rank);
}

int TwoForm::pair_index(int m, int a, int b) {
  require(1 <= a && a < b && b <= m, "two-form index must satisfy a < b");
  // Lexicographic over pairs (a,b).
  int idx = 0;
  for (int i = 1; i < a; ++i) idx += m - i;
  return idx + (b - a - 1);
}

MatrixField operator+(const MatrixField& a, const MatrixField& b) {
  auto out = combine(a, b, [](const auto& x, const auto& y) { return Eigen::MatrixXcd(x + y); });
  if (a.polynomial() && b.polynomial())
    out.set_polynomial(std::make_shared<MatrixPolynomial>(*a.polynomial() + *b.polynomial()));
  return out;
}

MatrixField operator-(const MatrixField& a, const MatrixField& b) {
  auto out = combine(a, b, [](const auto& x, const auto& y) { return Eigen::MatrixXcd(x - y); });
  if (a.polynomial() && b.polynomial())
    out.set_polynomial(std::make_shared<MatrixPolynomial>(*a.polynomial() - *b.polynomial()));
  return out;
}

MatrixField operator*(const MatrixField& a, const MatrixField& b) {
  auto out = combine(a, b, [](const auto& x, const auto& y) { return Eigen::MatrixXcd(x * y); });
  if (a.polynomial() && b.polynomial())
    out.set_polynomial(std::make_shared<MatrixPolynomial>(*a.polynomial() * *b.polynomial()));
  return out;
}

MatrixField operator*(Complex s, const MatrixField& a) {
  MatrixField out = a;
  out.values() *= s;
  if (a.polynomial()) out.set_polynomial(std::make_shared<MatrixPolynomial>(s * *a.polynomial()));
  return out;
}

MatrixField adjoint(const MatrixField& a) {
  MatrixField out(a.chart_ptr(), a.rank());
  out.defined_mask() = a.defined_mask();
  for (std::size_t i = 0; i < a.size(); ++i) out.at(i) = a.at(i).adjoint();
  if (a.polynomial())
    out.set_polynomial(std::make_shared<MatrixPolynomial>(a.polynomial()->adjoint_coefficients()));
  return out;
}

MatrixField inverse(const MatrixField& a, double tol) {
  MatrixField out(a.chart_ptr(), a.rank());
  out.defined_mask() = a.defined_mask();
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!a.defined(i)) continue;
    const Eigen::MatrixXcd m = a.at(i);
    if (a.chart().masked(i) && smallest_singular(m) <= tol) {
      std::ostringstream os;
      os << "matrix not invertible at lattice point " << i << " (coords "
         << a.chart().coords(i).transpose() << ")";
      throw Error(ErrorKind::GaugeSingular, os.str());
    }
    out.at(i) = m.inverse();
  }
  return out;
}

double min_singular_value(const MatrixField& a) {
  double v = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a.active(i)) v = std::min(v, smallest_singular(a.at(i)));
  return v;
}

ConnectionForm operator+(const ConnectionForm& a, const ConnectionForm& b) {
  ConnectionForm out;
  for (int k = 0; k < a.m(); ++k) out.components.push_back(a.components[k] + b.components[k]);
  return out;
}

ConnectionForm operator-(const ConnectionForm& a, const ConnectionForm& b) {
  ConnectionForm out;
  for (int k = 0; k < a.m(); ++k) out.components.push_back(a.components[k] - b.components[k]);
  return out;
}

ConnectionForm operator*(Complex s, const ConnectionForm& a) {
  ConnectionForm out;
  for (const auto& c : a.components) out.components.push_back(s * c);
  return out;
}

ConnectionForm operator*(const ConnectionForm& w, const MatrixField& a) {
  ConnectionForm out;
  for (const auto& c : w.components) out.components.push_back(c * a);
  return out;
}

ConnectionForm operator*(const MatrixField& a, const ConnectionForm& w) {
  ConnectionForm out;
  for (const auto& c : w.components) out.components.push_back(a * c);
  return out;
}

}  // namespace crvb
