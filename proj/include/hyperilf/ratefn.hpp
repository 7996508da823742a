#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace ratefn {

// Positive rate parameters (alpha_0 .. alpha_r) of a nested-exponential decay
// profile of degree r. The number of entries fixes the degree.
class RateProfile {
 public:
  explicit RateProfile(std::vector<double> alphas);
  int degree() const { return static_cast<int>(alphas_.size()) - 1; }
  const std::vector<double>& alphas() const { return alphas_; }
  double alpha(int i) const { return alphas_.at(static_cast<size_t>(i)); }

 private:
  std::vector<double> alphas_;
};

// rho_level(t): rho_0 = alpha_0 * t, rho_i = alpha_i * (e^{rho_{i-1}(t)} - e^{rho_{i-1}(0)}).
// Strictly increasing in t, rho(0) = 0. Saturates to +inf once e^rho overflows.
double rho(const RateProfile& profile, int level, double t);

// sigma_level(s) on s in (0,1]:
//   sigma_1(s) = -ln s + alpha_r
//   sigma_i(s) = ln(sigma_{i-1}(s) / alpha_{r-i+2}) + alpha_{r-i+1}
// sigma_level(1) = alpha_{r-level+1}; diverges as s -> 0+. Saturates to +inf
// for s below e^-700; inner log arguments are floored at machine epsilon.
double sigma(const RateProfile& profile, int level, double s);

// C * e^{-rho_r(t)}
double envelope(const RateProfile& profile, double C, double t);

struct IntegrationError : std::runtime_error {
  IntegrationError(const std::string& what, double t);
  double time;
};

struct ComparisonSeries {
  std::vector<double> times;
  std::vector<double> values;
};

// Fixed-step RK4 on  y' = -alpha_0 * y * prod_i sigma_i(y/y0),  y(0) = y0.
// The result stays in (0, y0] and is strictly decreasing; a step that leaves
// that range raises IntegrationError with the offending time.
ComparisonSeries integrate_comparison(const RateProfile& profile, double y0,
                                      double horizon, double step);

enum class Decay { Exponential, Hyperexponential, Inconclusive };
const char* to_string(Decay d);

struct DecayOptions {
  double monotone_threshold = 0.9;  // fraction of rate pairs that must increase
  double growth_factor = 2.0;       // last rate must exceed first by this factor
  double norm_floor = 1e-12;        // data at/below this is noise; trailing part is dropped
  double flat_tol = 0.1;            // relative rate spread considered flat
  double flat_abs = 1e-6;
};

struct DecayReport {
  std::vector<double> window_times;         // window midpoints, strictly increasing
  std::vector<double> instantaneous_rates;  // -d ln||x|| / dt per window (OLS)
  Decay classification = Decay::Inconclusive;
  double monotone_fraction = 0.0;
};

struct InsufficientData : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Windowed least-squares slopes of -ln(norm) against time. Hyperexponential
// when the per-window rates keep growing, Exponential when they are flat.
DecayReport classify_decay(const std::vector<double>& times,
                           const std::vector<double>& norms, double window,
                           const DecayOptions& opts = {});

struct ReferenceCurves {
  std::vector<double> t, es, hes1, hes2, fts;
};

// Decay-rate reference curves on the given grid: e^{-rho_i(t)} for i = 0,1,2
// with alpha = (1,1,1), plus the finite-time curve (1-0.8t)^1.25 cut at t = 1.25.
ReferenceCurves reference_curves(const std::vector<double>& grid);

}  // namespace ratefn
