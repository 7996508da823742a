#include "hyperilf/ratefn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ratefn {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kSigmaSaturation = -700.0;  // ln s below this saturates sigma to +inf
}  // namespace

RateProfile::RateProfile(std::vector<double> alphas) : alphas_(std::move(alphas)) {
  if (alphas_.empty()) throw std::invalid_argument("RateProfile: needs at least alpha_0");
  for (double a : alphas_)
    if (!(a > 0.0)) throw std::invalid_argument("RateProfile: every alpha must be > 0");
}

double rho(const RateProfile& profile, int level, double t) {
  if (level < 0 || level > profile.degree())
    throw std::invalid_argument("rho: level out of range");
  double v = profile.alpha(0) * t;
  for (int i = 1; i <= level; ++i) {
    // e^{rho_{i-1}(0)} = 1 since rho(0) = 0 at every level
    v = profile.alpha(i) * std::expm1(v);
  }
  return v;
}

double sigma(const RateProfile& profile, int level, double s) {
  const int r = profile.degree();
  if (level < 1 || level > r) throw std::invalid_argument("sigma: level out of range");
  if (!(s > 0.0) || s > 1.0) throw std::domain_error("sigma: s must be in (0,1]");
  const double ls = std::log(s);
  if (ls < kSigmaSaturation) return kInf;
  double v = -ls + profile.alpha(r);
  for (int i = 2; i <= level; ++i) {
    double arg = v / profile.alpha(r - i + 2);
    arg = std::max(arg, std::numeric_limits<double>::epsilon());
    v = std::log(arg) + profile.alpha(r - i + 1);
  }
  return v;
}

double envelope(const RateProfile& profile, double C, double t) {
  if (!(C > 0.0)) throw std::domain_error("envelope: C must be > 0");
  if (t < 0.0) throw std::domain_error("envelope: t must be >= 0");
  return C * std::exp(-rho(profile, profile.degree(), t));
}

IntegrationError::IntegrationError(const std::string& what, double t)
    : std::runtime_error(what + " (t=" + std::to_string(t) + ")"), time(t) {}

ComparisonSeries integrate_comparison(const RateProfile& profile, double y0,
                                      double horizon, double step) {
  if (!(y0 > 0.0)) throw std::domain_error("integrate_comparison: y0 must be > 0");
  if (!(horizon > 0.0) || !(step > 0.0))
    throw std::domain_error("integrate_comparison: horizon and step must be > 0");

  const int r = profile.degree();
  auto deriv = [&](double y, double t) {
    if (!(y > 0.0)) throw IntegrationError("comparison ODE left (0, y0]", t);
    // RK4 stage values may poke above y0 by rounding; the ratio stays in (0,1].
    const double s = std::min(y / y0, 1.0);
    double prod = 1.0;
    for (int i = 1; i <= r; ++i) prod *= sigma(profile, i, s);
    return -profile.alpha(0) * y * prod;
  };

  const int steps = static_cast<int>(std::llround(horizon / step));
  ComparisonSeries out;
  out.times.reserve(steps + 1);
  out.values.reserve(steps + 1);
  double y = y0;
  out.times.push_back(0.0);
  out.values.push_back(y);
  for (int k = 0; k < steps; ++k) {
    const double t = k * step;
    const double k1 = deriv(y, t);
    const double k2 = deriv(y + 0.5 * step * k1, t + 0.5 * step);
    const double k3 = deriv(y + 0.5 * step * k2, t + 0.5 * step);
    const double k4 = deriv(y + step * k3, t + step);
    const double y_next = y + step / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    const double t_next = (k + 1) * step;
    if (!(y_next > 0.0) || !(y_next < y) || y_next > y0 || !std::isfinite(y_next))
      throw IntegrationError("comparison ODE left (0, y0] or stopped decreasing", t_next);
    y = y_next;
    out.times.push_back(t_next);
    out.values.push_back(y);
  }
  return out;
}

const char* to_string(Decay d) {
  switch (d) {
    case Decay::Exponential: return "Exponential";
    case Decay::Hyperexponential: return "Hyperexponential";
    case Decay::Inconclusive: return "Inconclusive";
  }
  return "?";
}

DecayReport classify_decay(const std::vector<double>& times,
                           const std::vector<double>& norms, double window,
                           const DecayOptions& opts) {
  if (times.size() != norms.size())
    throw std::invalid_argument("classify_decay: times/norms length mismatch");
  if (!(window > 0.0)) throw std::invalid_argument("classify_decay: window must be > 0");

  // Data at the norm floor carries no rate information; stop at the first crossing.
  size_t end = times.size();
  for (size_t i = 0; i < norms.size(); ++i) {
    if (norms[i] <= opts.norm_floor) {
      end = i;
      break;
    }
  }
  if (end < 2) throw InsufficientData("classify_decay: series exhausted at the norm floor");

  const double t0 = times.front();
  DecayReport rep;
  size_t i = 0;
  int win = 0;
  while (i < end) {
    const double hi = t0 + (win + 1) * window;
    double st = 0, sy = 0, stt = 0, sty = 0;
    int m = 0;
    double tsum = 0;
    size_t j = i;
    for (; j < end && times[j] < hi; ++j) {
      const double t = times[j];
      const double y = std::log(std::max(norms[j], opts.norm_floor));
      st += t;
      sy += y;
      stt += t * t;
      sty += t * y;
      tsum += t;
      ++m;
    }
    if (m >= 2) {
      const double det = m * stt - st * st;
      if (det > 0.0) {
        const double slope = (m * sty - st * sy) / det;
        rep.window_times.push_back(tsum / m);
        rep.instantaneous_rates.push_back(-slope);
      }
    }
    i = j;
    ++win;
  }

  const size_t w = rep.instantaneous_rates.size();
  if (w < 3) throw InsufficientData("classify_decay: need at least 3 windows of data");

  // Ties (up to slope-estimation noise) count as half so flat data lands near 0.5.
  double up = 0.0;
  for (size_t k = 0; k + 1 < w; ++k) {
    const double a = rep.instantaneous_rates[k];
    const double b = rep.instantaneous_rates[k + 1];
    const double tie = 1e-12 + 1e-9 * std::max(std::fabs(a), std::fabs(b));
    if (std::fabs(b - a) <= tie)
      up += 0.5;
    else if (b > a)
      up += 1.0;
  }
  rep.monotone_fraction = up / static_cast<double>(w - 1);

  const double first = rep.instantaneous_rates.front();
  const double last = rep.instantaneous_rates.back();
  double lo = rep.instantaneous_rates[0], hi = lo, mean = 0.0;
  for (double v : rep.instantaneous_rates) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
    mean += v;
  }
  mean /= static_cast<double>(w);

  const bool grows = last > 0.0 && last >= opts.growth_factor * first;
  const bool flat = (hi - lo) <= std::max(opts.flat_tol * std::fabs(mean), opts.flat_abs);

  if (rep.monotone_fraction >= opts.monotone_threshold && grows)
    rep.classification = Decay::Hyperexponential;
  else if (flat)
    rep.classification = Decay::Exponential;
  else
    rep.classification = Decay::Inconclusive;
  return rep;
}

ReferenceCurves reference_curves(const std::vector<double>& grid) {
  for (size_t i = 0; i < grid.size(); ++i) {
    if (grid[i] < 0.0) throw std::invalid_argument("reference_curves: negative time");
    if (i > 0 && grid[i] <= grid[i - 1])
      throw std::invalid_argument("reference_curves: grid must be increasing");
  }
  const RateProfile alpha({1.0, 1.0, 1.0});
  ReferenceCurves out;
  out.t = grid;
  out.es.reserve(grid.size());
  out.hes1.reserve(grid.size());
  out.hes2.reserve(grid.size());
  out.fts.reserve(grid.size());
  for (double t : grid) {
    out.es.push_back(std::exp(-rho(alpha, 0, t)));
    out.hes1.push_back(std::exp(-rho(alpha, 1, t)));
    out.hes2.push_back(std::exp(-rho(alpha, 2, t)));
    out.fts.push_back(t > 1.25 ? 0.0 : std::pow(std::max(1.0 - 0.8 * t, 0.0), 1.25));
  }
  return out;
}

}  // namespace ratefn
