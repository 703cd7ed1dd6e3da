#include "crvb/kam_engine.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace crvb {

NormalizationMode normalization_mode_from_string(const std::string& s) {
  if (s == "taylor") return NormalizationMode::Taylor;
  if (s == "fs") return NormalizationMode::FS;
  if (s == "dilation") return NormalizationMode::Dilation;
  if (s == "none") return NormalizationMode::None;
  throw Error(ErrorKind::InvalidArgument, "unknown normalization '" + s + "'");
}

std::string to_string(NormalizationMode m) {
  switch (m) {
    case NormalizationMode::Taylor: return "taylor";
    case NormalizationMode::FS: return "fs";
    case NormalizationMode::Dilation: return "dilation";
    case NormalizationMode::None: return "none";
  }
  return "none";
}

std::string IterationTrace::csv_header() const {
  std::ostringstream os;
  os << "j,rho,sigma";
  for (int s = 0; s <= k; ++s) os << ",delta" << s;
  os << ",eta_hat,alpha_j,zeta_j,normB,normB_holder,residual";
  return os.str();
}

std::string IterationTrace::csv() const {
  std::ostringstream os;
  os.precision(17);
  os << csv_header() << "\n";
  for (const auto& r : rows) {
    os << r.j << "," << r.rho << "," << r.sigma;
    for (int s = 0; s <= k; ++s) os << "," << (s < static_cast<int>(r.delta.size()) ? r.delta[s] : 0.0);
    os << "," << r.eta_hat << "," << r.alpha_j << "," << r.zeta_j << "," << r.norm_b << ","
       << r.norm_b_holder << "," << r.residual << "\n";
  }
  return os.str();
}

namespace {

MatrixField grid_only(MatrixField f) {
  f.drop_polynomial();
  return f;
}

ConnectionForm grid_only(ConnectionForm w) {
  w.exact.reset();
  for (auto& c : w.components) c.drop_polynomial();
  return w;
}

ConnectionForm gauge_residual(const ConnectionForm& omega0, const MatrixField& g,
                              const TangentialFrame& frame) {
  return dbar_matrix(g, frame) + g * omega0;
}

std::vector<double> deltas(const ConnectionForm& w, double rho, int k) {
  std::vector<double> d;
  for (int s = 0; s <= k; ++s) d.push_back(ck_norm(w, rho, s).value);
  return d;
}

double rho_at(const RadiusSchedule& s, int j) {
  if (j < static_cast<int>(s.rhos.size())) return s.rhos[j];
  double r = s.rhos.back();
  for (int l = static_cast<int>(s.rhos.size()) - 1; l < j; ++l) r *= 1.0 - schedule_sigma(l);
  return r;
}

ChartPtr restricted(const ChartPtr& chart, double rho) {
  return std::make_shared<const GridChart>(restrict_chart(*chart, rho));
}

// Solve for B_{j+1} from the current state and fill the step columns of `row`.
MatrixField solve_step(const IterationState& st, const EngineConfig& cfg,
                       const TangentialFrame& frame, TraceRow& row) {
  const double rho = row.rho;
  const double sigma = row.sigma;
  const double rho_next = rho * (1.0 - sigma);
  SolveResult sol = solve_P(st.r, rho, sigma, cfg.solver, frame, &st.g);
  MatrixField b = grid_only(sol.b);
  const double b0 = ck_norm(b, rho_next, 0).value;
  row.norm_b = cfg.k == 0 ? b0 : ck_norm(b, rho_next, cfg.k).value;
  row.norm_b_holder =
      holder_seminorm(b, rho_next, cfg.k, cfg.alpha, cfg.holder_pairs, cfg.seed + row.j).value;
  row.norm_b_holder0 =
      cfg.k == 0 ? row.norm_b_holder
                 : holder_seminorm(b, rho_next, 0, cfg.alpha, cfg.holder_pairs, cfg.seed + row.j)
                       .value;
  row.eta_hat = row.delta[0] > 0.0 ? b0 / row.delta[0] : 0.0;
  row.alpha_j = alpha_j(st.chart->n(), cfg.k, row.j);
  row.zeta_j = row.alpha_j * row.eta_hat * row.delta[0];
  row.residual = sol.report.residual;
  return b;
}

}  // namespace

IterationState initial_state(const ConnectionForm& omega0, const MatrixField* g0, int jmax,
                             const TangentialFrame& frame) {
  IterationState st;
  st.chart = omega0.chart_ptr();
  st.omega0 = grid_only(omega0);
  st.g = g0 ? grid_only(*g0) : MatrixField::identity(st.chart, omega0.rank());
  st.g.drop_polynomial();
  st.r = gauge_residual(st.omega0, st.g, frame);
  st.omega = st.r * inverse(st.g);
  st.schedule = radius_schedule(st.chart->rho(), std::max(jmax, 1));
  return st;
}

TraceRow kam_step(IterationState& st, const EngineConfig& cfg, const TangentialFrame& frame) {
  TraceRow row;
  row.j = st.j;
  row.rho = rho_at(st.schedule, st.j);
  row.sigma = schedule_sigma(st.j);
  row.delta = deltas(st.omega, row.rho, cfg.k);

  MatrixField b = solve_step(st, cfg, frame, row);
  if (!(cfg.c_tilde * row.norm_b < cfg.smallness)) {
    std::ostringstream os;
    os << "step " << st.j << ": c~ ||B||_{" << row.rho * (1.0 - row.sigma) << "," << cfg.k
       << "} = " << cfg.c_tilde * row.norm_b << " >= " << cfg.smallness;
    throw Error(ErrorKind::SmallnessViolation, os.str());
  }

  MatrixField eye = MatrixField::identity(st.chart, st.g.rank());
  st.g = grid_only((eye + b) * st.g);
  st.r = gauge_residual(st.omega0, st.g, frame);
  st.omega = st.r * inverse(st.g);
  ++st.j;
  return row;
}

namespace {

struct Prepared {
  ConnectionForm omega;
  MatrixField g0;
  bool has_g0 = false;
  int g0_degree = 0;
};

Prepared prepare(const ConnectionForm& omega0, NormalizationMode mode, int order, double kappa,
                 const TangentialFrame& frame) {
  Prepared p;
  p.omega = omega0;
  switch (mode) {
    case NormalizationMode::Taylor:
    case NormalizationMode::FS: {
      auto jm = mode == NormalizationMode::Taylor ? JetMode::Ordinary : JetMode::Weighted;
      NormalizationResult nr = normalize_to_order(omega0, order, jm, frame);
      // Terms of degree > order + 1 in the gauge only touch jets above `order`.
      if (const MatrixPolynomial* poly = nr.gauge.polynomial()) {
        const MatrixPolynomial cut = poly->truncated(order + 1);
        p.g0 = MatrixField::sample(omega0.chart_ptr(), cut);
        p.g0_degree = cut.degree();
      } else {
        p.g0 = nr.gauge;
        p.g0_degree = order + 1;
      }
      p.g0.drop_polynomial();
      p.has_g0 = true;
      break;
    }
    case NormalizationMode::Dilation:
      if (kappa != 1.0) p.omega = dilation_prescale(omega0, kappa, frame).omega;
      break;
    case NormalizationMode::None:
      break;
  }
  return p;
}

}  // namespace

RunResult run(const ConnectionForm& omega0, const EngineConfig& cfg, const TangentialFrame& frame) {
  require(cfg.jmax >= 1, "jmax must be at least 1");
  require(cfg.k >= 0, "k must be non-negative");
  RunResult res;
  res.kappa = cfg.normalization == NormalizationMode::Dilation ? cfg.kappa : 1.0;
  res.normalization_order = cfg.normalization_order;
  res.trace.k = cfg.k;

  const double integrability = max_norm(integrability_residual(omega0, frame));
  if (integrability > 1e-8) {
    std::ostringstream os;
    os << "integrability residual " << integrability << " exceeds 1e-8";
    res.notes.push_back(os.str());
  }

  for (int attempt = 0;; ++attempt) {
    res.restarts = attempt;
    res.trace.rows.clear();
    try {
      Prepared p = prepare(omega0, cfg.normalization, res.normalization_order, res.kappa, frame);
      IterationState st = initial_state(p.omega, p.has_g0 ? &p.g0 : nullptr, cfg.jmax, frame);
      EngineConfig step_cfg = cfg;
      step_cfg.solver.ansatz_degree = std::max(cfg.solver.ansatz_degree, p.g0_degree);
      res.omega0 = st.omega0;
      res.omega0_norm = ck_norm(st.omega0, st.chart->rho(), 0).value;
      res.tol = cfg.tol >= 0.0 ? cfg.tol : cfg.tol_relative * res.omega0_norm;

      double margin_sum = 0.0;
      int increases = 0;
      double last_delta = -1.0;
      bool done = false;
      while (!done) {
        const double rho = rho_at(st.schedule, st.j);
        const double d0 = ck_norm(st.omega, rho, 0).value;
        if (last_delta >= 0.0) {
          increases = d0 > last_delta ? increases + 1 : 0;
          if (increases >= 2) {
            std::ostringstream os;
            os << "delta0 increased on two consecutive steps (j = " << st.j << ")";
            throw Error(ErrorKind::Diverged, os.str());
          }
        }
        last_delta = d0;
        if (d0 <= res.tol || st.j >= cfg.jmax) {
          // Closing row: probe solve, not applied.
          TraceRow row;
          row.j = st.j;
          row.rho = rho;
          row.sigma = schedule_sigma(st.j);
          row.delta = deltas(st.omega, rho, cfg.k);
          row.applied = false;
          if (d0 > 0.0) solve_step(st, step_cfg, frame, row);
          res.trace.rows.push_back(row);
          res.converged = d0 <= res.tol;
          done = true;
          break;
        }
        TraceRow row = kam_step(st, step_cfg, frame);
        margin_sum += std::pow(2.0 * cfg.c_tilde, row.j + 1) * row.norm_b;
        res.trace.rows.push_back(row);
      }

      res.g = st.g;
      res.invertibility_margin = 1.0 - margin_sum;
      const double rho_inf = st.schedule.rho_infinity;
      res.min_singular = min_singular_value(st.g.on_chart(restricted(st.chart, rho_inf)));
      res.final_residual = verify_solution(st.omega0, st.g, frame, rho_inf).raw;
      if (!res.converged) {
        std::ostringstream os;
        os << "jmax = " << cfg.jmax << " reached with delta0 above tol " << res.tol;
        res.notes.push_back(os.str());
      }
      if (res.invertibility_margin <= 0.0) {
        std::ostringstream os;
        os << "invertibility margin " << res.invertibility_margin << " (min singular value "
           << res.min_singular << ")";
        throw Error(ErrorKind::FrameDegenerate, os.str());
      }
      return res;
    } catch (const Error& e) {
      const bool retry = e.kind() == ErrorKind::SmallnessViolation ||
                         e.kind() == ErrorKind::Diverged;
      if (!retry || cfg.normalization == NormalizationMode::None || attempt >= cfg.max_restarts)
        throw;
      res.notes.push_back(std::string("restart after ") + e.what());
      if (cfg.normalization == NormalizationMode::Dilation)
        res.kappa *= 0.25;
      else
        res.normalization_order += 1;
    }
  }
}

VerifyReport verify_solution(const ConnectionForm& omega0, const MatrixField& g,
                             const TangentialFrame& frame, double rho) {
  VerifyReport v;
  v.rho = rho;
  const MatrixField gg = grid_only(g);
  const ConnectionForm r = gauge_residual(grid_only(omega0), gg, frame);
  v.raw = ck_norm(r, rho, 0).value;
  v.normalized = ck_norm(r * inverse(gg), rho, 0).value;
  return v;
}

Diagnostics convergence_diagnostics(const IterationTrace& trace, int first, int last) {
  const auto& rows = trace.rows;
  require(rows.size() >= 3, "convergence diagnostics need at least 3 trace rows");
  Diagnostics d;
  const int n = static_cast<int>(rows.size());

  double sum = 0.0;
  for (int j = std::max(first, 0); j <= last && j + 1 < n; ++j) {
    const double a = rows[j].delta[0];
    const double b = rows[j + 1].delta[0];
    if (!(a > 0.0 && a < 1.0 && b > 0.0)) continue;
    sum += std::log(b) / std::log(a);
    ++d.p_steps;
  }
  d.p_hat = d.p_steps > 0 ? sum / d.p_steps : 0.0;
  d.quadratic = d.p_steps > 0 && d.p_hat >= 1.5;

  for (int j = 0; j < n; ++j)
    if (rows[j].zeta_j < 0.5) {
      d.zeta_start = j;
      break;
    }
  d.zeta_chain = d.zeta_start >= 0;
  for (int j = std::max(d.zeta_start, 0); d.zeta_chain && j + 1 < n; ++j)
    if (rows[j + 1].zeta_j > rows[j].zeta_j * rows[j].zeta_j) d.zeta_chain = false;

  d.contraction = true;
  for (int j = 0; j + 1 < n; ++j) {
    if (!rows[j].applied) continue;
    const double bound = 1.5 * rows[j].eta_hat * rows[j].delta[0] * rows[j].delta[0];
    if (rows[j + 1].delta[0] > bound) d.contraction = false;
  }

  if (trace.k >= 1) {
    d.j1 = n - 1;
    while (d.j1 > 0 && rows[d.j1].delta[1] < rows[d.j1 - 1].delta[1]) --d.j1;
    if (d.j1 == n - 1) d.j1 = -1;
  }

  // ||B_{j+1}||_{0,1/2} / ||omega_j||_{0,0}; a trace read back from CSV only has the
  // order-k column, which is the same thing when k = 0.
  double eta_max = 1.0;
  std::vector<double> ratios;
  for (const auto& r : rows) {
    eta_max = std::max(eta_max, r.eta_hat);
    const double h = trace.k == 0 ? r.norm_b_holder : r.norm_b_holder0;
    if (r.delta[0] > 0.0 && h > 0.0) ratios.push_back(h / r.delta[0]);
  }
  d.holder_constant = 10.0 * eta_max;
  if (!ratios.empty()) {
    d.holder_ratio_max = *std::max_element(ratios.begin(), ratios.end());
    d.holder_bounded = std::isfinite(d.holder_ratio_max) && d.holder_ratio_max <= d.holder_constant;
  }
  return d;
}

}  // namespace crvb
