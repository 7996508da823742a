#include "hyperilf/control.hpp"

#include <cmath>
#include <stdexcept>

namespace ctrl {

SamplingPolicy SamplingPolicy::Sampled(double period) {
  if (!(period > 0.0)) throw std::invalid_argument("SamplingPolicy: period must be > 0");
  return {false, period};
}

namespace {

double gain_dilated(const la::Mat& k, const la::Mat& d, const la::Vec& x) {
  double u = 0.0;
  for (int j = 0; j < k.cols(); ++j) u += k(0, j) * d(j, j) * x[j];
  return u;
}

double gain(const la::Mat& k, const la::Vec& x) {
  double u = 0.0;
  for (int j = 0; j < k.cols(); ++j) u += k(0, j) * x[j];
  return u;
}

double clamp_v(const ControllerSpec& spec, double v, bool* clamped) {
  if (v < spec.v_min) {
    if (clamped) *clamped = true;
    return spec.v_min;
  }
  if (clamped) *clamped = false;
  return v;
}

}  // namespace

double u_finite_time(const ControllerSpec& spec, double V, const la::Vec& x, bool* clamped) {
  const double v = clamp_v(spec, V, clamped);
  const auto dil = ilf::Dilation::descending(spec.P.rows(), spec.mu);
  const la::Mat d = ilf::dilation_matrix(dil, 1.0 / v);
  return std::pow(v, 1.0 - spec.mu) * gain_dilated(spec.K, d, x);
}

double u_hyper(const ControllerSpec& spec, double V, const la::Vec& x, bool* clamped) {
  if (clamped) *clamped = false;
  if (la::quad_form(spec.P, x) >= 1.0) return gain(spec.K, x);
  const double v = clamp_v(spec, V, clamped);
  const double r = ilf::varrho(v);
  const auto dil = ilf::Dilation::descending(spec.P.rows(), spec.mu);
  const la::Mat d = ilf::dilation_matrix(dil, r);
  return std::pow(r, spec.mu - 1.0) * gain_dilated(spec.K, d, x);
}

double u_combined(const ControllerSpec& spec, double V, const la::Vec& x, bool* clamped) {
  if (clamped) *clamped = false;
  const int n = spec.P.rows();
  if (la::quad_form(spec.P, x) < 1.0) {
    const double v = clamp_v(spec, V, clamped);
    const la::Mat d =
        ilf::dilation_matrix(ilf::Dilation::descending(n, spec.mu), ilf::varrho(v));
    return gain_dilated(spec.K, d, x);
  }
  const double v = clamp_v(spec, V, clamped);
  const la::Mat dbar = ilf::dilation_matrix(ilf::Dilation::ascending(n, spec.nu), 1.0 / v);
  return std::pow(v, 1.0 + spec.nu) * gain_dilated(spec.K, dbar, x);
}

Controller::Controller(ControllerSpec spec) : spec_(std::move(spec)) {
  const int n = spec_.P.rows();
  if (spec_.K.rows() != 1 || spec_.K.cols() != n)
    throw std::invalid_argument("Controller: K must be 1 x n");
  if (!spec_.sampling.continuous && !(spec_.sampling.period > 0.0))
    throw std::invalid_argument("Controller: sampled policy needs a positive period");

  switch (spec_.variant) {
    case ControlVariant::FiniteTimeIlf:
      inner_solver_ = std::make_unique<ilf::BisectionSolver>(
          ilf::IlfCandidate::finite_time(spec_.P, spec_.mu), spec_.v_min,
          spec_.bisect_precision);
      break;
    case ControlVariant::HyperIlf:
      inner_solver_ = std::make_unique<ilf::BisectionSolver>(
          ilf::IlfCandidate::hyper_q1(spec_.P, spec_.mu), spec_.v_min,
          spec_.bisect_precision);
      break;
    case ControlVariant::CombinedNearlyFixed:
      inner_solver_ = std::make_unique<ilf::BisectionSolver>(
          ilf::IlfCandidate::hyper_q1(spec_.P, spec_.mu), spec_.v_min,
          spec_.bisect_precision);
      outer_solver_ = std::make_unique<ilf::BisectionSolver>(
          ilf::IlfCandidate::nearly_fixed_q2bar(spec_.P, spec_.nu), spec_.v_min,
          spec_.bisect_precision);
      break;
    case ControlVariant::LinearOnly:
      break;
  }
}

void Controller::resolve(double t, const la::Vec& x) {
  const double s = la::quad_form(spec_.P, x);
  held_clamped_ = false;
  switch (spec_.variant) {
    case ControlVariant::FiniteTimeIlf: {
      if (la::norm2(x) == 0.0) {
        held_v_ = spec_.v_min;
        held_clamped_ = true;
      } else {
        const auto sol = inner_solver_->solve(x);
        held_v_ = sol.v;
        held_clamped_ = sol.clamped;
      }
      held_branch_ = held_clamped_ ? 'l' : 'i';
      break;
    }
    case ControlVariant::HyperIlf: {
      if (s >= 1.0) {
        held_v_ = std::sqrt(s);
        held_branch_ = 'o';
      } else if (la::norm2(x) == 0.0) {
        held_v_ = spec_.v_min;
        held_clamped_ = true;
        held_branch_ = 'l';
      } else {
        const auto sol = inner_solver_->solve(x);
        held_v_ = sol.v;
        held_clamped_ = sol.clamped;
        held_branch_ = held_clamped_ ? 'l' : 'i';
      }
      break;
    }
    case ControlVariant::CombinedNearlyFixed: {
      if (la::norm2(x) == 0.0) {
        held_v_ = spec_.v_min;
        held_clamped_ = true;
        held_branch_ = 'l';
      } else if (s >= 1.0) {
        const auto sol = outer_solver_->solve(x);
        held_v_ = sol.v;
        held_branch_ = 'o';
      } else {
        const auto sol = inner_solver_->solve(x);
        held_v_ = sol.v;
        held_clamped_ = sol.clamped;
        held_branch_ = held_clamped_ ? 'l' : 'i';
      }
      break;
    }
    case ControlVariant::LinearOnly:
      held_v_ = std::max(std::sqrt(std::max(s, 0.0)), spec_.v_min);
      held_branch_ = 'o';
      break;
  }
  ledger_.push_back({t, held_v_, held_clamped_, held_branch_});
  solved_once_ = true;
  if (!spec_.sampling.continuous) next_sample_ = t + spec_.sampling.period;
}

double Controller::operator()(double t, const la::Vec& x) {
  const bool due = spec_.sampling.continuous || !solved_once_ ||
                   t >= next_sample_ - 1e-9 * std::max(1.0, spec_.sampling.period);
  if (due) resolve(t, x);

  switch (spec_.variant) {
    case ControlVariant::FiniteTimeIlf:
      // inside the v_min shell the dilation blows up; fall back to the linear gain
      if (held_clamped_) return gain(spec_.K, x);
      return u_finite_time(spec_, held_v_, x);
    case ControlVariant::HyperIlf:
      if (la::quad_form(spec_.P, x) >= 1.0) return gain(spec_.K, x);
      if (held_clamped_) return gain(spec_.K, x);
      return u_hyper(spec_, held_v_, x);
    case ControlVariant::CombinedNearlyFixed:
      if (held_clamped_) return gain(spec_.K, x);
      return u_combined(spec_, held_v_, x);
    case ControlVariant::LinearOnly:
      return gain(spec_.K, x);
  }
  return 0.0;
}

}  // namespace ctrl
