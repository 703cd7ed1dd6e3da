#pragma once

#include <memory>
#include <vector>

#include <Eigen/Core>

#include "crvb/geometry.hpp"
#include "crvb/polynomial.hpp"

namespace crvb {

class ExactForm;

/// r x r complex matrices on the lattice of a chart.
///
/// Values are stored column-per-point (r*r rows, column-major within a point).
/// `defined` marks lattice points that carry meaningful data; derivative
/// operators shrink it by one stencil layer. A field may also carry the exact
/// polynomial it was sampled from (the polynomial backend).
class MatrixField {
 public:
  MatrixField() = default;
  MatrixField(ChartPtr chart, int rank);

  static MatrixField constant(ChartPtr chart, const Eigen::MatrixXcd& value);
  static MatrixField identity(ChartPtr chart, int rank);
  static MatrixField sample(ChartPtr chart, const MatrixPolynomial& p);

  const GridChart& chart() const { return *chart_; }
  const ChartPtr& chart_ptr() const { return chart_; }
  int rank() const { return rank_; }
  std::size_t size() const { return chart_->size(); }

  Eigen::Map<Eigen::MatrixXcd> at(std::size_t i) {
    return {values_.col(static_cast<Eigen::Index>(i)).data(), rank_, rank_};
  }
  Eigen::Map<const Eigen::MatrixXcd> at(std::size_t i) const {
    return {values_.col(static_cast<Eigen::Index>(i)).data(), rank_, rank_};
  }
  Eigen::MatrixXcd& values() { return values_; }
  const Eigen::MatrixXcd& values() const { return values_; }

  bool defined(std::size_t i) const { return defined_[i] != 0; }
  void set_defined(std::size_t i, bool d) { defined_[i] = d ? 1 : 0; }
  std::vector<std::uint8_t>& defined_mask() { return defined_; }
  const std::vector<std::uint8_t>& defined_mask() const { return defined_; }
  /// Point is in the chart's ball and carries data.
  bool active(std::size_t i) const { return chart_->masked(i) && defined_[i] != 0; }

  const MatrixPolynomial* polynomial() const { return poly_.get(); }
  void set_polynomial(std::shared_ptr<const MatrixPolynomial> p) { poly_ = std::move(p); }
  void drop_polynomial() { poly_.reset(); }

  /// Same data viewed on another chart with the same lattice (e.g. a restriction).
  MatrixField on_chart(ChartPtr chart) const;

 private:
  ChartPtr chart_;
  int rank_ = 0;
  Eigen::MatrixXcd values_;
  std::vector<std::uint8_t> defined_;
  std::shared_ptr<const MatrixPolynomial> poly_;
};

/// (0,1) matrix form: one MatrixField per dzbar^alpha, alpha = 1..n-1.
struct ConnectionForm {
  std::vector<MatrixField> components;
  /// Exact pointwise representation, when the form was built from polynomials.
  std::shared_ptr<const ExactForm> exact;

  ConnectionForm() = default;
  ConnectionForm(ChartPtr chart, int rank);

  static ConnectionForm sample(ChartPtr chart, const PolyForm& form);

  const GridChart& chart() const { return components.front().chart(); }
  const ChartPtr& chart_ptr() const { return components.front().chart_ptr(); }
  int rank() const { return components.front().rank(); }
  int m() const { return static_cast<int>(components.size()); }
  MatrixField& operator[](int alpha) { return components[alpha - 1]; }
  const MatrixField& operator[](int alpha) const { return components[alpha - 1]; }
  ConnectionForm on_chart(ChartPtr chart) const;
};

/// (0,2) matrix form: coefficient of dzbar^a ^ dzbar^b stored for a < b.
struct TwoForm {
  int m = 0;
  std::vector<MatrixField> components;

  TwoForm() = default;
  TwoForm(ChartPtr chart, int rank, int m);

  static int pair_index(int m, int a, int b);
  MatrixField& at(int a, int b) { return components[pair_index(m, a, b)]; }
  const MatrixField& at(int a, int b) const { return components[pair_index(m, a, b)]; }
};

// Pointwise algebra. Results are defined where every input is defined.
MatrixField operator+(const MatrixField& a, const MatrixField& b);
MatrixField operator-(const MatrixField& a, const MatrixField& b);
MatrixField operator*(const MatrixField& a, const MatrixField& b);
MatrixField operator*(Complex s, const MatrixField& a);
MatrixField adjoint(const MatrixField& a);
/// Pointwise inverse; throws gauge-singular naming the first active point
/// whose smallest singular value is <= tol.
MatrixField inverse(const MatrixField& a, double tol = 1e-12);
/// Smallest singular value over active points.
double min_singular_value(const MatrixField& a);

ConnectionForm operator+(const ConnectionForm& a, const ConnectionForm& b);
ConnectionForm operator-(const ConnectionForm& a, const ConnectionForm& b);
ConnectionForm operator*(Complex s, const ConnectionForm& a);
/// Right and left multiplication of each component by a matrix field.
ConnectionForm operator*(const ConnectionForm& w, const MatrixField& a);
ConnectionForm operator*(const MatrixField& a, const ConnectionForm& w);

/// Largest singular value.
double spectral_norm(const Eigen::Ref<const Eigen::MatrixXcd>& m);

}  // namespace crvb
