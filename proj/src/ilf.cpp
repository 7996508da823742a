#include "hyperilf/ilf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "hyperilf/rng.hpp"

namespace ilf {

namespace {
const double kE = std::numbers::e;
const double kLnEm1 = std::log(std::numbers::e - 1.0);
}  // namespace

Dilation Dilation::descending(int n, double mu) {
  if (n < 1) throw std::invalid_argument("Dilation: n must be >= 1");
  if (!(mu > 0.0) || mu > 1.0) throw std::invalid_argument("Dilation: mu must be in (0,1]");
  Dilation d{DilKind::Descending, mu, {}};
  d.exponents.resize(n);
  for (int i = 1; i <= n; ++i) d.exponents[i - 1] = 1.0 + (n - i) * mu;
  return d;
}

Dilation Dilation::ascending(int n, double nu) {
  if (n < 1) throw std::invalid_argument("Dilation: n must be >= 1");
  if (!(nu > 0.0)) throw std::invalid_argument("Dilation: nu must be > 0");
  Dilation d{DilKind::Ascending, nu, {}};
  d.exponents.resize(n);
  for (int i = 1; i <= n; ++i) d.exponents[i - 1] = 1.0 + (i - 1) * nu;
  return d;
}

la::Mat dilation_matrix(const Dilation& d, double lambda) {
  if (!(lambda > 0.0)) throw std::domain_error("dilation_matrix: lambda must be > 0");
  la::Vec diag(d.exponents.size());
  for (size_t i = 0; i < diag.size(); ++i) diag[i] = std::pow(lambda, d.exponents[i]);
  return la::Mat::diag(diag);
}

la::Mat weight_matrix(const Dilation& d) { return la::Mat::diag(d.exponents); }

double varrho(double V) {
  if (!(V > 0.0)) throw std::domain_error("varrho: V must be > 0");
  return std::log1p((kE - 1.0) / V);
}

IlfCandidate::IlfCandidate(IlfVariant variant, la::Mat p, std::optional<Dilation> dilation)
    : variant_(variant), p_(std::move(p)), dilation_(std::move(dilation)) {
  if (p_.rows() != p_.cols() || p_.rows() < 1)
    throw std::invalid_argument("IlfCandidate: P must be square");
  const double asym = la::max_abs(p_ - la::transpose(p_));
  if (asym > 1e-8 * std::max(1.0, la::max_abs(p_)))
    throw std::invalid_argument("IlfCandidate: P must be symmetric");
  const auto eig = la::jacobi_eigensym(p_);
  p_min_eig_ = eig.values.front();
  p_max_eig_ = eig.values.back();
  if (!(p_min_eig_ > 0.0))
    throw std::invalid_argument("IlfCandidate: P must be positive definite");

  const bool wants_desc =
      variant_ == IlfVariant::FiniteTimeQ || variant_ == IlfVariant::HyperQ1;
  const bool wants_asc = variant_ == IlfVariant::NearlyFixedQ2bar;
  if (variant_ == IlfVariant::QuadraticQ2) {
    if (dilation_) throw std::invalid_argument("IlfCandidate: QuadraticQ2 takes no dilation");
  } else {
    if (!dilation_) throw std::invalid_argument("IlfCandidate: variant needs a dilation");
    if (dilation_->dim() != p_.rows())
      throw std::invalid_argument("IlfCandidate: dilation dimension mismatch");
    if (wants_desc && dilation_->kind != DilKind::Descending)
      throw std::invalid_argument("IlfCandidate: variant needs a descending dilation");
    if (wants_asc && dilation_->kind != DilKind::Ascending)
      throw std::invalid_argument("IlfCandidate: variant needs an ascending dilation");
  }
}

IlfCandidate IlfCandidate::finite_time(la::Mat p, double mu) {
  const int n = p.rows();
  return IlfCandidate(IlfVariant::FiniteTimeQ, std::move(p), Dilation::descending(n, mu));
}

IlfCandidate IlfCandidate::hyper_q1(la::Mat p, double mu) {
  const int n = p.rows();
  return IlfCandidate(IlfVariant::HyperQ1, std::move(p), Dilation::descending(n, mu));
}

IlfCandidate IlfCandidate::quadratic_q2(la::Mat p) {
  return IlfCandidate(IlfVariant::QuadraticQ2, std::move(p), std::nullopt);
}

IlfCandidate IlfCandidate::nearly_fixed_q2bar(la::Mat p, double nu) {
  const int n = p.rows();
  return IlfCandidate(IlfVariant::NearlyFixedQ2bar, std::move(p), Dilation::ascending(n, nu));
}

const Dilation& IlfCandidate::dilation() const {
  if (!dilation_) throw std::logic_error("IlfCandidate: no dilation for this variant");
  return *dilation_;
}

double IlfCandidate::q_eval(double V, const la::Vec& x) const {
  if (!(V > 0.0)) throw std::domain_error("q_eval: V must be > 0");
  if (static_cast<int>(x.size()) != dim())
    throw std::invalid_argument("q_eval: state dimension mismatch");
  switch (variant_) {
    case IlfVariant::FiniteTimeQ:
    case IlfVariant::NearlyFixedQ2bar: {
      const la::Vec z = la::mul(dilation_matrix(*dilation_, 1.0 / V), x);
      return la::quad_form(p_, z) - 1.0;
    }
    case IlfVariant::HyperQ1: {
      const la::Vec z = la::mul(dilation_matrix(*dilation_, varrho(V)), x);
      return la::quad_form(p_, z) - 1.0;
    }
    case IlfVariant::QuadraticQ2:
      return la::quad_form(p_, x) / (V * V) - 1.0;
  }
  return 0.0;
}

double IlfCandidate::dq_dv_closed(double V, const la::Vec& x) const {
  if (variant_ != IlfVariant::HyperQ1)
    throw std::logic_error("dq_dv_closed: only available for HyperQ1");
  if (!(V > 0.0)) throw std::domain_error("dq_dv_closed: V must be > 0");
  const double rho = varrho(V);
  const la::Vec z = la::mul(dilation_matrix(*dilation_, rho), x);
  la::Vec hz = z;
  for (size_t i = 0; i < hz.size(); ++i) hz[i] *= dilation_->exponents[i];
  const double w = 2.0 * la::dot(la::mul(p_, z), hz);  // z^T (PH + HP) z
  return -(kE - 1.0) / (V * (V + kE - 1.0) * rho) * w;
}

BisectionSolver::BisectionSolver(IlfCandidate candidate, double v_min, double rel_precision)
    : candidate_(std::move(candidate)), v_min_(v_min), rel_precision_(rel_precision) {
  if (!(v_min_ > 0.0)) throw std::invalid_argument("BisectionSolver: v_min must be > 0");
  if (!(rel_precision_ > 0.0))
    throw std::invalid_argument("BisectionSolver: precision must be > 0");
  reset();
}

void BisectionSolver::reset() {
  a_ = v_min_;
  b_ = 1.0;
}

SolveResult BisectionSolver::solve(const la::Vec& x) {
  if (la::norm2(x) == 0.0) throw std::domain_error("BisectionSolver: x must be nonzero");

  // Q is strictly decreasing in V: Q(b) > 0 means the root is above b,
  // Q(a) < 0 means it is below a. The bracket is expanded/shifted until it
  // holds the root, then halved; the lower end never drops below v_min.
  auto q = [&](double v) { return candidate_.q_eval(v, x); };
  const int max_iters = 2000;
  int it = 0;
  do {
    if (q(b_) > 0.0) {
      a_ = b_;
      b_ = 2.0 * b_;
    } else if (q(a_) < 0.0) {
      b_ = a_;
      a_ = std::max(a_ / 2.0, v_min_);
      if (a_ == b_ && a_ == v_min_) break;  // pinned at the floor
    } else {
      const double c = 0.5 * (a_ + b_);
      if (q(c) < 0.0)
        b_ = c;
      else
        a_ = std::max(v_min_, c);
    }
    ++it;
  } while ((b_ - a_) > rel_precision_ * b_ && it < max_iters);
  if (it >= max_iters)
    throw std::runtime_error("BisectionSolver: failed to converge");

  SolveResult r;
  r.v = b_;
  r.iterations = it;
  r.residual = q(b_);
  // A root below v_min leaves the bracket pinned there with Q still negative.
  r.clamped = b_ <= v_min_ * (1.0 + 4.0 * rel_precision_) && r.residual < 0.0 &&
              q(v_min_) < 0.0;
  return r;
}

const char* to_string(ConditionId id) {
  switch (id) {
    case ConditionId::C4: return "C4";
    case ConditionId::C5: return "C5";
    case ConditionId::C6: return "C6";
    case ConditionId::C7: return "C7";
    case ConditionId::C8: return "C8";
    case ConditionId::C9: return "C9";
    case ConditionId::C10: return "C10";
    case ConditionId::Theorem3Beta: return "Theorem3Beta";
    case ConditionId::Theorem2Nested: return "Theorem2Nested";
  }
  return "?";
}

namespace {

double dq_dv_fd(const IlfCandidate& c, double v, const la::Vec& x) {
  const double h = 1e-6 * v;
  return (c.q_eval(v + h, x) - c.q_eval(v - h, x)) / (2.0 * h);
}

la::Vec grad_x_fd(const IlfCandidate& c, double v, const la::Vec& x) {
  const double nx = la::norm2(x);
  la::Vec g(x.size(), 0.0);
  la::Vec xp = x, xm = x;
  for (size_t i = 0; i < x.size(); ++i) {
    const double h = 1e-6 * (std::fabs(x[i]) + nx);
    xp[i] = x[i] + h;
    xm[i] = x[i] - h;
    g[i] = (c.q_eval(v, xp) - c.q_eval(v, xm)) / (2.0 * h);
    xp[i] = x[i];
    xm[i] = x[i];
  }
  return g;
}

}  // namespace

C4C5Report check_c4_c5(const IlfCandidate& q1, const IlfCandidate& q2,
                       const std::vector<std::pair<double, la::Vec>>& samples) {
  if (samples.empty()) throw std::invalid_argument("check_c4_c5: no samples");

  C4C5Report rep;
  rep.c4.id = ConditionId::C4;
  rep.c5.id = ConditionId::C5;

  double worst_c4 = -std::numeric_limits<double>::infinity();
  double worst_c5 = 0.0;
  la::Vec worst_c4_x, worst_c5_x;
  for (const auto& [v, x] : samples) {
    for (const IlfCandidate* c : {&q1, &q2}) {
      const double d = dq_dv_fd(*c, v, x);
      if (d > worst_c4) {
        worst_c4 = d;
        worst_c4_x = x;
      }
    }
    const double diff = std::fabs(q1.q_eval(1.0, x) - q2.q_eval(1.0, x));
    if (diff >= worst_c5) {
      worst_c5 = diff;
      worst_c5_x = x;
    }
  }
  rep.c4.margin = worst_c4;
  rep.c4.holds = worst_c4 < 0.0;
  rep.c4.sample_count = static_cast<int>(samples.size());
  rep.c4.worst_sample = worst_c4_x;

  rep.c5.margin = worst_c5;
  rep.c5.holds = worst_c5 <= 1e-12;
  rep.c5.sample_count = static_cast<int>(samples.size());
  rep.c5.worst_sample = worst_c5_x;
  return rep;
}

ConditionReport check_differential_conditions(const IlfCandidate& candidate,
                                              const VectorField& closed_loop_field,
                                              DiffRegime regime, double c_rate,
                                              const ratefn::RateProfile& profile,
                                              const std::vector<la::Vec>& samples,
                                              double v_min, double rel_precision) {
  ConditionReport rep;
  rep.id = regime == DiffRegime::C6 ? ConditionId::C6 : ConditionId::C7;
  rep.constants["c"] = c_rate;

  BisectionSolver solver(candidate, v_min, rel_precision);
  double min_slack = std::numeric_limits<double>::infinity();
  for (const la::Vec& x : samples) {
    if (la::norm2(x) == 0.0) {
      ++rep.skipped;
      continue;
    }
    const SolveResult sol = solver.solve(x);
    if (sol.clamped) {
      ++rep.skipped;
      continue;
    }
    const double v = sol.v;
    if ((regime == DiffRegime::C6 && v > 1.0) || (regime == DiffRegime::C7 && v < 1.0)) {
      ++rep.skipped;
      continue;
    }
    const la::Vec f = closed_loop_field(x);
    const double lhs = la::dot(grad_x_fd(candidate, v, x), f);
    const double dv = dq_dv_fd(candidate, v, x);
    double rhs = c_rate * v * dv;
    if (regime == DiffRegime::C6) {
      for (int i = 1; i <= profile.degree(); ++i) rhs *= ratefn::sigma(profile, i, v);
    }
    const double scale = std::max({1.0, std::fabs(lhs), std::fabs(rhs)});
    const double slack = (rhs - lhs) / scale;
    if (slack < min_slack) {
      min_slack = slack;
      rep.worst_sample = x;
      rep.constants["worst_v"] = v;
    }
    ++rep.sample_count;
  }
  if (rep.sample_count == 0)
    throw ratefn::InsufficientData("check_differential_conditions: all samples skipped");
  rep.margin = min_slack;
  rep.holds = min_slack >= -1e-8;
  return rep;
}

ConditionReport check_norm_bounds(const IlfCandidate& candidate, NormRegime regime,
                                  const std::vector<la::Vec>& samples, double alpha_r,
                                  double v_min, double rel_precision) {
  if (alpha_r == 0.0) alpha_r = kLnEm1;
  ConditionReport rep;
  rep.id = regime == NormRegime::C8
               ? ConditionId::C8
               : (regime == NormRegime::C9 ? ConditionId::C9 : ConditionId::C10);

  BisectionSolver solver(candidate, v_min, rel_precision);
  std::vector<double> vs, nxs;
  for (const la::Vec& x : samples) {
    const double nx = la::norm2(x);
    if (nx == 0.0) {
      ++rep.skipped;
      continue;
    }
    const SolveResult sol = solver.solve(x);
    if (sol.clamped) {
      ++rep.skipped;
      continue;
    }
    if (regime == NormRegime::C9 && sol.v > 1.0) {
      ++rep.skipped;
      continue;
    }
    if (regime == NormRegime::C10 && sol.v < 1.0) {
      ++rep.skipped;
      continue;
    }
    vs.push_back(sol.v);
    nxs.push_back(nx);
    if (rep.worst_sample.empty()) rep.worst_sample = x;
  }
  if (vs.empty()) throw ratefn::InsufficientData("check_norm_bounds: no usable samples");
  rep.sample_count = static_cast<int>(vs.size());

  if (regime == NormRegime::C9) {
    double k_hat = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < vs.size(); ++i) {
      const double val = alpha_r / ((-std::log(vs[i]) + 1.0) * nxs[i]);
      k_hat = std::min(k_hat, val);
    }
    rep.constants["k_hat"] = k_hat;
    rep.constants["alpha_r"] = alpha_r;
    rep.margin = k_hat;
    rep.holds = k_hat > 0.0;
  } else if (regime == NormRegime::C10) {
    double k1 = std::numeric_limits<double>::infinity(), k2 = 0.0;
    for (size_t i = 0; i < vs.size(); ++i) {
      const double ratio = vs[i] / nxs[i];
      k1 = std::min(k1, ratio);
      k2 = std::max(k2, ratio);
    }
    rep.constants["k1_hat"] = k1;
    rep.constants["k2_hat"] = k2;
    rep.margin = k1;
    rep.holds = k1 > 0.0;
  } else {
    // fit ln V = a ln||x|| + ln k, then bound k from both sides at that a
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (size_t i = 0; i < vs.size(); ++i) {
      const double lx = std::log(nxs[i]);
      const double ly = std::log(vs[i]);
      sx += lx;
      sy += ly;
      sxx += lx * lx;
      sxy += lx * ly;
    }
    const double m = static_cast<double>(vs.size());
    const double det = m * sxx - sx * sx;
    const double a_hat = det != 0.0 ? (m * sxy - sx * sy) / det : 1.0;
    double k1 = std::numeric_limits<double>::infinity(), k2 = 0.0;
    for (size_t i = 0; i < vs.size(); ++i) {
      const double ratio = vs[i] / std::pow(nxs[i], a_hat);
      k1 = std::min(k1, ratio);
      k2 = std::max(k2, ratio);
    }
    rep.constants["a_hat"] = a_hat;
    rep.constants["k1_hat"] = k1;
    rep.constants["k2_hat"] = k2;
    rep.margin = k1;
    rep.holds = k1 > 0.0 && a_hat > 0.0;
  }
  return rep;
}

ConditionReport theorem3_beta_margin(const std::vector<double>& times,
                                     const std::vector<double>& v_series) {
  if (times.size() != v_series.size())
    throw std::invalid_argument("theorem3_beta_margin: length mismatch");
  if (times.size() < 3)
    throw ratefn::InsufficientData("theorem3_beta_margin: need at least 3 points");
  for (double v : v_series)
    if (!(v > 0.0)) throw std::domain_error("theorem3_beta_margin: V must stay positive");

  const size_t m = times.size();
  std::vector<std::pair<double, double>> pts;  // (V^-1, beta)
  pts.reserve(m - 2);
  for (size_t k = 1; k + 1 < m; ++k) {
    const double beta = -(std::log(v_series[k + 1]) - std::log(v_series[k - 1])) /
                        (times[k + 1] - times[k - 1]);
    pts.emplace_back(1.0 / v_series[k], beta);
  }
  std::sort(pts.begin(), pts.end());

  ConditionReport rep;
  rep.id = ConditionId::Theorem3Beta;
  rep.sample_count = static_cast<int>(pts.size());

  double min_beta = std::numeric_limits<double>::infinity();
  int violations = 0;
  for (size_t k = 0; k < pts.size(); ++k) {
    min_beta = std::min(min_beta, pts[k].second);
    if (k + 1 < pts.size()) {
      const double prev = pts[k].second, next = pts[k + 1].second;
      if (next < prev - 1e-9 * std::fabs(prev) - 1e-12) ++violations;
    }
  }
  const double viol_frac =
      pts.size() > 1 ? static_cast<double>(violations) / (pts.size() - 1) : 0.0;

  const size_t dec = std::max<size_t>(1, pts.size() / 10);
  double first_mean = 0, last_mean = 0;
  for (size_t k = 0; k < dec; ++k) first_mean += pts[k].second;
  for (size_t k = pts.size() - dec; k < pts.size(); ++k) last_mean += pts[k].second;
  first_mean /= dec;
  last_mean /= dec;

  rep.margin = min_beta;
  rep.constants["violation_fraction"] = viol_frac;
  rep.constants["first_decile_mean"] = first_mean;
  rep.constants["last_decile_mean"] = last_mean;
  rep.constants["growth"] = last_mean > first_mean * (1.0 + 1e-6) ? 1.0 : 0.0;
  rep.holds = min_beta > 0.0 && viol_frac <= 0.05;
  return rep;
}

std::vector<IntervalDiag> theorem2_nested_diagnostics(
    const std::vector<double>& times, const std::vector<la::Vec>& states,
    const std::vector<double>& v_values, const la::Mat& p, double mu, double a,
    const std::vector<double>& sample_times) {
  if (times.size() != states.size() || times.size() != v_values.size())
    throw std::invalid_argument("theorem2_nested_diagnostics: trajectory arrays mismatch");
  if (sample_times.empty())
    throw std::invalid_argument("theorem2_nested_diagnostics: no sample times");

  auto find_index = [&](double t) -> size_t {
    for (size_t i = 0; i < times.size(); ++i)
      if (std::fabs(times[i] - t) <= 1e-9 * std::max(1.0, std::fabs(t))) return i;
    throw std::invalid_argument("theorem2_nested_diagnostics: trajectory missing sample time t=" +
                                std::to_string(t));
  };

  const int n = p.rows();
  const Dilation dil = Dilation::descending(n, mu);
  std::vector<IntervalDiag> out;
  out.reserve(sample_times.size());
  for (size_t i = 0; i < sample_times.size(); ++i) {
    const size_t idx = find_index(sample_times[i]);
    const size_t end_idx =
        i + 1 < sample_times.size() ? find_index(sample_times[i + 1]) : times.size() - 1;
    const double vi = v_values[idx];
    const la::Mat d = dilation_matrix(dil, 1.0 / vi);
    const la::Mat pi = d * p * d;
    IntervalDiag rec;
    rec.t = times[idx];
    rec.v = vi;
    rec.vtilde = la::quad_form(pi, states[end_idx]);
    rec.c = a * std::pow(rec.vtilde, -mu);
    out.push_back(rec);
  }
  return out;
}

double alpha1_margin(double mu, int grid_points, double v_low) {
  if (!(mu > 0.0) || mu > 1.0) throw std::invalid_argument("alpha1_margin: mu in (0,1]");
  double lo = std::numeric_limits<double>::infinity();
  for (int k = 0; k < grid_points; ++k) {
    const double f = static_cast<double>(k) / (grid_points - 1);
    const double v = v_low * std::pow(1.0 / v_low, f);
    const double s1 = -std::log(v) + kLnEm1;
    const double g = std::pow(varrho(v), mu) - std::log(s1 / kLnEm1);
    lo = std::min(lo, g);
  }
  return lo;
}

std::vector<la::Vec> sample_shells(int n, int count, double r_min, double r_max,
                                   std::uint64_t seed) {
  if (n < 1 || count < 1) throw std::invalid_argument("sample_shells: bad arguments");
  if (!(r_min > 0.0) || !(r_max >= r_min))
    throw std::invalid_argument("sample_shells: bad radius range");
  rng::Rng gen(seed);
  std::vector<la::Vec> out;
  out.reserve(count);
  for (int k = 0; k < count; ++k) {
    const double f = count > 1 ? static_cast<double>(k) / (count - 1) : 0.0;
    const double r = r_min * std::pow(r_max / r_min, f);
    la::Vec x = gen.unit_vec(n);
    for (auto& c : x) c *= r;
    out.push_back(std::move(x));
  }
  return out;
}

}  // namespace ilf
