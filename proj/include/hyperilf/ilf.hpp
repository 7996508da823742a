#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "hyperilf/linalg.hpp"
#include "hyperilf/ratefn.hpp"

namespace ilf {

enum class DilKind { Descending, Ascending };

// Diagonal scaling weights. Descending(mu): q_i = 1 + (n-i)*mu with q_n = 1;
// Ascending(nu): p_i = 1 + (i-1)*nu with p_1 = 1.
struct Dilation {
  DilKind kind;
  double param;
  std::vector<double> exponents;

  static Dilation descending(int n, double mu);
  static Dilation ascending(int n, double nu);
  int dim() const { return static_cast<int>(exponents.size()); }
};

// diag(lambda^{e_i}), lambda > 0
la::Mat dilation_matrix(const Dilation& d, double lambda);

// diag of the exponents themselves (the H / Hbar weight matrix)
la::Mat weight_matrix(const Dilation& d);

// ln((V + e - 1)/V): strictly decreasing, varrho(1) = 1, -> 0 as V -> inf.
double varrho(double V);

enum class IlfVariant { FiniteTimeQ, HyperQ1, QuadraticQ2, NearlyFixedQ2bar };

// One implicit Lyapunov function family Q(V, x). P must be symmetric positive
// definite; HyperQ1/FiniteTimeQ take a descending dilation, NearlyFixedQ2bar an
// ascending one, QuadraticQ2 none.
class IlfCandidate {
 public:
  IlfCandidate(IlfVariant variant, la::Mat p, std::optional<Dilation> dilation);

  static IlfCandidate finite_time(la::Mat p, double mu);
  static IlfCandidate hyper_q1(la::Mat p, double mu);
  static IlfCandidate quadratic_q2(la::Mat p);
  static IlfCandidate nearly_fixed_q2bar(la::Mat p, double nu);

  double q_eval(double V, const la::Vec& x) const;

  // Analytic dQ1/dV for HyperQ1 (cross-check against finite differences);
  // throws for other variants.
  double dq_dv_closed(double V, const la::Vec& x) const;

  IlfVariant variant() const { return variant_; }
  const la::Mat& p() const { return p_; }
  const Dilation& dilation() const;
  int dim() const { return p_.rows(); }
  double p_min_eig() const { return p_min_eig_; }
  double p_max_eig() const { return p_max_eig_; }

 private:
  IlfVariant variant_;
  la::Mat p_;
  std::optional<Dilation> dilation_;
  double p_min_eig_ = 0.0;
  double p_max_eig_ = 0.0;
};

struct SolveResult {
  double v = 0.0;
  bool clamped = false;
  int iterations = 0;
  double residual = 0.0;  // Q(v, x)
};

// Bracketing bisection for the unique root of Q(V, x) = 0, warm-started from
// the previous bracket. First call starts from a = v_min, b = 1. The bracket
// never goes below v_min; a root below it returns v_min with clamped = true.
class BisectionSolver {
 public:
  BisectionSolver(IlfCandidate candidate, double v_min = 1e-9,
                  double rel_precision = 1e-12);

  SolveResult solve(const la::Vec& x);
  void reset();

  const IlfCandidate& candidate() const { return candidate_; }
  double v_min() const { return v_min_; }
  double rel_precision() const { return rel_precision_; }

 private:
  IlfCandidate candidate_;
  double v_min_;
  double rel_precision_;
  double a_, b_;
};

enum class ConditionId { C4, C5, C6, C7, C8, C9, C10, Theorem3Beta, Theorem2Nested };
const char* to_string(ConditionId id);

struct ConditionReport {
  ConditionId id;
  bool holds = false;
  double margin = 0.0;  // worst slack over the samples; sign convention per condition
  std::map<std::string, double> constants;
  int sample_count = 0;
  int skipped = 0;
  la::Vec worst_sample;
};

struct C4C5Report {
  ConditionReport c4;
  ConditionReport c5;
};

// C4: dQ/dV < 0 by central differences (step 1e-6 * V) for both candidates at
// every (V, x) sample; margin is the largest derivative seen (want < 0).
// C5: Q1(1,x) == Q2(1,x); margin is the largest |difference|.
C4C5Report check_c4_c5(const IlfCandidate& q1, const IlfCandidate& q2,
                       const std::vector<std::pair<double, la::Vec>>& samples);

using VectorField = std::function<la::Vec(const la::Vec&)>;

enum class DiffRegime { C6, C7 };

// C6 (V in (0,1], on Q(V,x)=0):  dQ/dx . f(x) <= c * V * prod_i sigma_i(V) * dQ/dV
// C7 (V >= 1):                   dQ/dx . f(x) <= c * V * dQ/dV
// Gradients by central differences; samples whose root lands on the wrong
// branch (or clamps at v_min) are skipped and counted. The margin is the
// minimum relative slack (rhs - lhs)/scale; holds when it is >= -1e-8.
ConditionReport check_differential_conditions(const IlfCandidate& candidate,
                                              const VectorField& closed_loop_field,
                                              DiffRegime regime, double c_rate,
                                              const ratefn::RateProfile& profile,
                                              const std::vector<la::Vec>& samples,
                                              double v_min = 1e-9,
                                              double rel_precision = 1e-12);

enum class NormRegime { C8, C9, C10 };

// C8:  fit V ~ k ||x||^a over all samples; constants k1_hat, k2_hat, a_hat.
// C9:  k_hat = inf alpha_r / ((-ln V + 1) ||x||) over V <= 1 samples.
// C10: k1_hat = inf V/||x||, k2_hat = sup V/||x|| over V >= 1 samples.
ConditionReport check_norm_bounds(const IlfCandidate& candidate, NormRegime regime,
                                  const std::vector<la::Vec>& samples,
                                  double alpha_r = 0.0,  // 0 -> ln(e-1)
                                  double v_min = 1e-9, double rel_precision = 1e-12);

// Empirical beta(V^-1) = -Vdot/V along a V series; holds when beta stays
// positive and is nondecreasing in V^-1 (up to 5% violating pairs). The
// "growth" constant records whether the top decile mean exceeds the bottom one.
ConditionReport theorem3_beta_margin(const std::vector<double>& times,
                                     const std::vector<double>& v_series);

struct IntervalDiag {
  double t = 0.0;       // sample instant t_i
  double v = 0.0;       // ILF value V_i held on [t_i, t_{i+1})
  double vtilde = 0.0;  // x(t_{i+1})^T P_i x(t_{i+1}), the level reached within the interval
  double c = 0.0;       // a * vtilde^{-mu}
};

// Per-interval contraction levels and rates of a sampled run. The trajectory
// arrays must contain every sample time exactly; a missing instant raises an
// error naming it. For a contracting loop v decreases and c increases.
std::vector<IntervalDiag> theorem2_nested_diagnostics(
    const std::vector<double>& times, const std::vector<la::Vec>& states,
    const std::vector<double>& v_values, const la::Mat& p, double mu, double a,
    const std::vector<double>& sample_times);

// inf over a log-spaced V grid on (0,1] of
//   varrho^mu(V) - ln((-ln V + ln(e-1)) / ln(e-1)).
// The degree-2 sigma construction for the hyperexponential loop needs this to
// be positive; it is not for small mu, and callers must check the sign.
double alpha1_margin(double mu, int grid_points = 4000, double v_low = 1e-9);

// count points on log-spaced spherical shells, radii in [r_min, r_max].
std::vector<la::Vec> sample_shells(int n, int count, double r_min, double r_max,
                                   std::uint64_t seed);

}  // namespace ilf
