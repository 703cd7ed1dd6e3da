#include "crvb/norms.hpp"

#include <cmath>
#include <iomanip>
#include <random>
#include <sstream>

#include <Eigen/LU>

#include "crvb/error.hpp"

namespace crvb {

namespace {

GridChart ball_of(const GridChart& chart, double rho) {
  require(rho > 0.0, "radius must be positive");
  require(rho <= chart.lattice_rho() * (1.0 + 1e-12), "radius exceeds the lattice box");
  return GridChart(chart.n(), chart.lattice_rho(), chart.resolution(), rho);
}

// Field copy whose defined set is cut down to the ball; grid values only.
MatrixField restricted(const MatrixField& f, const GridChart& ball) {
  MatrixField out = f;
  out.drop_polynomial();
  for (std::size_t i = 0; i < f.size(); ++i)
    if (!ball.masked(i)) out.set_defined(i, false);
  return out;
}

double field_max(const MatrixField& f) {
  double v = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i)
    if (f.defined(i)) v = std::max(v, spectral_norm(f.at(i)));
  return v;
}

double poly_max(const MatrixPolynomial& p, const GridChart& ball) {
  if (p.is_zero()) return 0.0;
  double v = 0.0;
  for (std::size_t i = 0; i < ball.size(); ++i)
    if (ball.masked(i)) v = std::max(v, spectral_norm(p.evaluate(ball.coords(i))));
  return v;
}

// All derivatives of order exactly `order`, as nondecreasing axis sequences.
void axis_sequences(int dims, int order, int start, std::vector<int>& cur,
                    std::vector<std::vector<int>>& out) {
  if (static_cast<int>(cur.size()) == order) {
    out.push_back(cur);
    return;
  }
  for (int a = start; a < dims; ++a) {
    cur.push_back(a);
    axis_sequences(dims, order, a, cur, out);
    cur.pop_back();
  }
}

// Derivative fields of each order 0..k (grid path): fields[q] lists order-q fields.
std::vector<std::vector<MatrixField>> grid_derivatives(const MatrixField& base, int k) {
  const int dims = base.chart().dims();
  std::vector<std::vector<MatrixField>> fields(k + 1);
  std::vector<std::vector<int>> last_axis(k + 1);
  fields[0].push_back(base);
  last_axis[0].push_back(0);
  for (int q = 1; q <= k; ++q)
    for (std::size_t j = 0; j < fields[q - 1].size(); ++j)
      for (int a = last_axis[q - 1][j]; a < dims; ++a) {
        fields[q].push_back(apply_axis(fields[q - 1][j], a));
        last_axis[q].push_back(a);
      }
  return fields;
}

std::vector<std::vector<MatrixPolynomial>> poly_derivatives(const MatrixPolynomial& p, int k) {
  const int dims = 2 * p.m() + 1;
  std::vector<std::vector<MatrixPolynomial>> out(k + 1);
  for (int q = 0; q <= k; ++q) {
    std::vector<std::vector<int>> seqs;
    std::vector<int> cur;
    axis_sequences(dims, q, 0, cur, seqs);
    for (const auto& s : seqs) {
      MatrixPolynomial d = p;
      for (int a : s) d = d.d_axis(a);
      out[q].push_back(std::move(d));
    }
  }
  return out;
}

struct PointSet {
  std::vector<Eigen::VectorXd> coords;
  std::vector<Eigen::MatrixXcd> values;
};

using Distance = double (*)(const Eigen::VectorXd&, const Eigen::VectorXd&);

double euclidean(const Eigen::VectorXd& a, const Eigen::VectorXd& b) { return (a - b).norm(); }

double holder_ratio(const PointSet& s, double alpha, std::int64_t budget, std::uint64_t seed,
                    Distance dist) {
  const std::int64_t np = static_cast<std::int64_t>(s.coords.size());
  if (np < 2) return 0.0;
  double best = 0.0;
  auto visit = [&](std::int64_t i, std::int64_t j) {
    const double d = dist(s.coords[i], s.coords[j]);
    if (d <= 0.0) return;
    const double num = spectral_norm(s.values[i] - s.values[j]);
    best = std::max(best, alpha == 0.0 ? num : num / std::pow(d, alpha));
  };
  if (np * (np - 1) / 2 <= budget) {
    for (std::int64_t i = 0; i < np; ++i)
      for (std::int64_t j = i + 1; j < np; ++j) visit(i, j);
  } else {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::int64_t> pick(0, np - 1);
    for (std::int64_t t = 0; t < budget; ++t) {
      const std::int64_t i = pick(rng), j = pick(rng);
      if (i != j) visit(i, j);
    }
  }
  return best;
}

PointSet collect(const MatrixField& f) {
  PointSet s;
  for (std::size_t i = 0; i < f.size(); ++i)
    if (f.defined(i)) {
      s.coords.push_back(f.chart().coords(i));
      s.values.push_back(f.at(i));
    }
  return s;
}

PointSet collect(const MatrixPolynomial& p, const GridChart& ball) {
  PointSet s;
  for (std::size_t i = 0; i < ball.size(); ++i)
    if (ball.masked(i)) {
      s.coords.push_back(ball.coords(i));
      s.values.push_back(p.evaluate(s.coords.back()));
    }
  return s;
}

void merge(NormReport& into, const NormReport& r) {
  into.value = std::max(into.value, r.value);
  for (const auto& [name, v] : r.breakdown) {
    bool found = false;
    for (auto& [n2, v2] : into.breakdown)
      if (n2 == name) {
        v2 = std::max(v2, v);
        found = true;
      }
    if (!found) into.breakdown.emplace_back(name, v);
  }
}

// Multi-indices over m slots with total `total`.
void counts(int m, int total, std::vector<int>& cur, std::vector<std::vector<int>>& out) {
  if (static_cast<int>(cur.size()) == m - 1) {
    cur.push_back(total);
    out.push_back(cur);
    cur.pop_back();
    return;
  }
  for (int c = 0; c <= total; ++c) {
    cur.push_back(c);
    counts(m, total - c, cur, out);
    cur.pop_back();
  }
}

MatrixField fs_apply(const MatrixField& f, const FsIndex& idx, const TangentialFrame& frame) {
  MatrixField g = f;
  for (std::size_t a = 0; a < idx.r.size(); ++a)
    for (int c = 0; c < idx.r[a]; ++c) g = apply_xbar(g, static_cast<int>(a) + 1, frame);
  for (std::size_t a = 0; a < idx.s.size(); ++a)
    for (int c = 0; c < idx.s[a]; ++c) g = apply_xhol(g, static_cast<int>(a) + 1, frame);
  for (int c = 0; c < idx.t; ++c) g = apply_t(g);
  return g;
}

std::string index_name(const FsIndex& idx) {
  std::ostringstream os;
  os << "T" << idx.t << "_X";
  for (int v : idx.s) os << v;
  os << "_Xbar";
  for (int v : idx.r) os << v;
  return os.str();
}

}  // namespace

std::string NormReport::csv_row() const {
  std::ostringstream os;
  os << std::setprecision(17) << kind << "," << k << "," << alpha << "," << rho << "," << value;
  return os.str();
}

int FsIndex::weight() const {
  int w = 2 * t;
  for (int v : s) w += v;
  for (int v : r) w += v;
  return w;
}

std::vector<FsIndex> fs_indices(int m, int k) {
  std::vector<FsIndex> out;
  for (int t = 0; 2 * t <= k; ++t)
    for (int ns = 0; 2 * t + ns <= k; ++ns)
      for (int nr = 0; 2 * t + ns + nr <= k; ++nr) {
        std::vector<std::vector<int>> ss, rs;
        std::vector<int> cur;
        counts(m, ns, cur, ss);
        counts(m, nr, cur, rs);
        for (const auto& s : ss)
          for (const auto& r : rs) out.push_back({t, s, r});
      }
  return out;
}

NormReport ck_norm(const MatrixField& f, double rho, int k) {
  require(k >= 0, "k must be nonnegative");
  require(f.chart().resolution() >= 2 * k + 1, "resolution too small for k-th differences");
  const GridChart ball = ball_of(f.chart(), rho);
  NormReport rep{"ck", k, 0.0, rho, 0.0, {}};
  if (f.polynomial()) {
    const auto ders = poly_derivatives(*f.polynomial(), k);
    for (int q = 0; q <= k; ++q) {
      double v = 0.0;
      for (const auto& d : ders[q]) v = std::max(v, poly_max(d, ball));
      rep.breakdown.emplace_back("order" + std::to_string(q), v);
      rep.value = std::max(rep.value, v);
    }
    return rep;
  }
  const auto ders = grid_derivatives(restricted(f, ball), k);
  for (int q = 0; q <= k; ++q) {
    double v = 0.0;
    for (const auto& d : ders[q]) v = std::max(v, field_max(d));
    rep.breakdown.emplace_back("order" + std::to_string(q), v);
    rep.value = std::max(rep.value, v);
  }
  return rep;
}

NormReport ck_norm(const ConnectionForm& w, double rho, int k) {
  NormReport rep{"ck", k, 0.0, rho, 0.0, {}};
  for (const auto& c : w.components) merge(rep, ck_norm(c, rho, k));
  return rep;
}

NormReport holder_seminorm(const MatrixField& f, double rho, int k, double alpha,
                           std::int64_t pair_budget, std::uint64_t seed) {
  require(alpha >= 0.0 && alpha < 1.0, "alpha must lie in [0, 1)");
  require(k >= 0, "k must be nonnegative");
  require(f.chart().resolution() >= 2 * k + 1, "resolution too small for k-th differences");
  const GridChart ball = ball_of(f.chart(), rho);
  NormReport rep{"holder", k, alpha, rho, 0.0, {}};
  if (f.polynomial()) {
    const auto ders = poly_derivatives(*f.polynomial(), k);
    for (const auto& d : ders[k])
      rep.value = std::max(rep.value, holder_ratio(collect(d, ball), alpha, pair_budget, seed, euclidean));
  } else {
    const auto ders = grid_derivatives(restricted(f, ball), k);
    for (const auto& d : ders[k])
      rep.value = std::max(rep.value, holder_ratio(collect(d), alpha, pair_budget, seed, euclidean));
  }
  rep.breakdown.emplace_back("order" + std::to_string(k), rep.value);
  return rep;
}

NormReport holder_seminorm(const ConnectionForm& w, double rho, int k, double alpha,
                           std::int64_t pair_budget, std::uint64_t seed) {
  NormReport rep{"holder", k, alpha, rho, 0.0, {}};
  for (const auto& c : w.components) merge(rep, holder_seminorm(c, rho, k, alpha, pair_budget, seed));
  return rep;
}

double koranyi_distance(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  // (w,s)^{-1}(z,t) = (z - w, t - s + 2 Im <z, w>).
  const int m = static_cast<int>(a.size() - 1) / 2;
  double z2 = 0.0, im = 0.0;
  for (int k = 0; k < m; ++k) {
    const Complex z(b(2 * k), b(2 * k + 1));
    const Complex w(a(2 * k), a(2 * k + 1));
    z2 += std::norm(z - w);
    im += std::imag(z * std::conj(w));
  }
  const double t = b(2 * m) - a(2 * m) + 2.0 * im;
  return std::pow(z2 * z2 + t * t, 0.25);
}

NormReport fs_norm(const MatrixField& f, double rho, int k, double alpha,
                   const TangentialFrame& frame, std::int64_t pair_budget, std::uint64_t seed) {
  if (!frame.is_heisenberg())
    throw Error(ErrorKind::UnsupportedSurface, "Folland-Stein norms need the Heisenberg frame");
  require(alpha >= 0.0 && alpha < 1.0, "alpha must lie in [0, 1)");
  require(k >= 0, "k must be nonnegative");
  const GridChart ball = ball_of(f.chart(), rho);
  NormReport rep{"fs", k, alpha, rho, 0.0, {}};
  const MatrixField base = f.polynomial() ? f : restricted(f, ball);
  for (const auto& idx : fs_indices(f.chart().n() - 1, k)) {
    double sup = 0.0, hol = 0.0;
    const bool top = alpha > 0.0 && idx.weight() == k;
    if (f.polynomial()) {
      const MatrixPolynomial d = f.polynomial()->fs_derivative(idx.t, idx.s, idx.r);
      sup = poly_max(d, ball);
      if (top) hol = holder_ratio(collect(d, ball), alpha, pair_budget, seed, koranyi_distance);
    } else {
      const MatrixField d = fs_apply(base, idx, frame);
      sup = field_max(d);
      if (top) hol = holder_ratio(collect(d), alpha, pair_budget, seed, koranyi_distance);
    }
    rep.breakdown.emplace_back(index_name(idx), std::max(sup, hol));
    rep.value = std::max({rep.value, sup, hol});
  }
  return rep;
}

NormReport fs_norm(const ConnectionForm& w, double rho, int k, double alpha,
                   const TangentialFrame& frame, std::int64_t pair_budget, std::uint64_t seed) {
  NormReport rep{"fs", k, alpha, rho, 0.0, {}};
  for (const auto& c : w.components) merge(rep, fs_norm(c, rho, k, alpha, frame, pair_budget, seed));
  return rep;
}

NormReport scaled_fs_norm(const ConnectionForm& phi, double rho, int k, double alpha,
                          const TangentialFrame& frame, std::int64_t pair_budget,
                          std::uint64_t seed) {
  const ConnectionForm pulled = pullback_form(phi, rho);
  NormReport rep = fs_norm(pulled, 1.0, k, alpha, frame, pair_budget, seed);
  rep.kind = "fs_scaled";
  rep.rho = rho;
  return rep;
}

NormConstants submultiplicativity_constant(int k, int trials, std::uint64_t seed, int n, int rank,
                                           int resolution) {
  require(trials >= 1, "trials must be positive");
  auto chart = std::make_shared<const GridChart>(build_grid(n, 1.0, resolution));
  std::mt19937_64 rng(seed);
  NormConstants c;
  c.k = k;
  c.trials = trials;
  for (int t = 0; t < trials; ++t) {
    const MatrixPolynomial pa = MatrixPolynomial::identity(n - 1, rank) +
                                random_polynomial(n - 1, rank, 1, 2, rng, 1.0);
    const MatrixPolynomial pb = random_polynomial(n - 1, rank, 0, 2, rng, 1.0);
    const double na = ck_norm(MatrixField::sample(chart, pa), 1.0, k).value;
    const double nb = ck_norm(MatrixField::sample(chart, pb), 1.0, k).value;
    const double nab = ck_norm(MatrixField::sample(chart, pa * pb), 1.0, k).value;
    if (na > 0.0 && nb > 0.0) c.measured = std::max(c.measured, nab / (na * nb));
  }
  c.c_tilde = std::max(1.0, c.measured);
  return c;
}

NeumannCheck neumann_check(const MatrixField& b, double rho, double c_tilde) {
  NeumannCheck r;
  r.norm_b = ck_norm(b, rho, 0).value;
  require(c_tilde * r.norm_b < 1.0, "Neumann check needs c ||B|| < 1");
  const GridChart ball = ball_of(b.chart(), rho);
  const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(b.rank(), b.rank());
  for (std::size_t i = 0; i < b.size(); ++i)
    if (ball.masked(i) && b.defined(i))
      r.norm_inverse = std::max(r.norm_inverse, spectral_norm((id + b.at(i)).inverse()));
  r.bound = 1.0 / (1.0 - c_tilde * r.norm_b);
  r.holds = r.norm_inverse <= r.bound + 1e-9;
  return r;
}

double eta_bound(int n, int k, double rho, double sigma, double c) {
  if (!(sigma > 0.0 && sigma < 1.0)) throw Error(ErrorKind::InvalidArgument, "sigma must lie in (0, 1)");
  require(rho > 0.0, "radius must be positive");
  return c * std::pow(sigma, -2 * n - 2 * k + 1) * std::pow(rho, -2 * k);
}

double alpha_j(int n, int k, int j) {
  require(j >= 0, "j must be nonnegative");
  return std::ldexp(1.0, 2 * n + 2 * k - 1) * std::pow(1.0 - schedule_sigma(j), -2 * k);
}

}  // namespace crvb
