#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "hyperilf/ilf.hpp"
#include "hyperilf/linalg.hpp"

namespace ctrl {

enum class ControlVariant { FiniteTimeIlf, HyperIlf, CombinedNearlyFixed, LinearOnly };

struct SamplingPolicy {
  bool continuous = true;
  double period = 0.0;  // seconds, used when !continuous

  static SamplingPolicy Continuous() { return {true, 0.0}; }
  static SamplingPolicy Sampled(double period);
};

struct ControllerSpec {
  ControlVariant variant = ControlVariant::LinearOnly;
  la::Mat P;  // n x n SPD
  la::Mat K;  // 1 x n
  double mu = 0.5;
  double nu = 1.0;  // CombinedNearlyFixed only
  SamplingPolicy sampling = SamplingPolicy::Continuous();
  double v_min = 1e-9;
  double bisect_precision = 1e-12;
};

// u = V^{1-mu} K D(V^{-1}) x. V below v_min is clamped (flag via out pointer).
double u_finite_time(const ControllerSpec& spec, double V, const la::Vec& x,
                     bool* clamped = nullptr);

// u = varrho^{mu-1}(V) K D(varrho(V)) x   for x^T P x < 1   (V from Q1)
// u = K x                                 for x^T P x >= 1
double u_hyper(const ControllerSpec& spec, double V, const la::Vec& x,
               bool* clamped = nullptr);

// u = K D(varrho(V)) x          for x^T P x < 1   (V from Q1)
// u = V^{1+nu} K Dbar(V^{-1}) x for x^T P x >= 1  (V from Q2bar)
double u_combined(const ControllerSpec& spec, double V, const la::Vec& x,
                  bool* clamped = nullptr);

struct LedgerRow {
  double t = 0.0;
  double v = 0.0;
  bool clamped = false;
  char branch = 'i';  // 'i' inner ILF, 'o' outer, 'l' linear fallback at the v_min shell
};

// Stateful control-signal generator: owns the warm-started root solvers and
// the (t_i, V_i) ledger. One instance per simulation; instances are independent.
class Controller {
 public:
  explicit Controller(ControllerSpec spec);

  // Control value at time t given the measured state. Re-solves V at sample
  // instants (every call when continuous) and holds it in between.
  double operator()(double t, const la::Vec& x_measured);

  double current_v() const { return held_v_; }
  const std::vector<LedgerRow>& ledger() const { return ledger_; }
  const ControllerSpec& spec() const { return spec_; }

 private:
  void resolve(double t, const la::Vec& x);

  ControllerSpec spec_;
  std::unique_ptr<ilf::BisectionSolver> inner_solver_;  // Q for the ILF branch
  std::unique_ptr<ilf::BisectionSolver> outer_solver_;  // Q2bar (combined law only)
  double held_v_ = 1.0;
  bool held_clamped_ = false;
  char held_branch_ = 'i';
  double next_sample_ = 0.0;
  bool solved_once_ = false;
  std::vector<LedgerRow> ledger_;
};

}  // namespace ctrl
