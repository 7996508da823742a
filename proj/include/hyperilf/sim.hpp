#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "hyperilf/control.hpp"
#include "hyperilf/linalg.hpp"
#include "hyperilf/lmi.hpp"
#include "hyperilf/rng.hpp"

namespace sim {

struct NoiseConfig {
  double power = 0.0;             // band-limited noise power
  double sample_interval = 0.01;  // s; per-component variance = power / sample_interval
  std::uint64_t seed = 0;
};

struct SimConfig {
  double dt = 1e-3;
  double horizon = 10.0;
  double delay_tau = 0.0;  // rounded to a multiple of dt
  std::optional<NoiseConfig> noise;
  la::Vec x0;
  double norm_floor = 1e-12;  // for logging/classification only, never for dynamics
};

struct Trajectory {
  std::vector<double> times;
  std::vector<la::Vec> states;
  std::vector<la::Vec> measured;
  std::vector<double> controls;  // control entering the plant (after the delay line)
  std::vector<double> v_values;
  std::vector<double> norms;  // ||x||, floored at norm_floor
};

struct IntegrationFailure : std::runtime_error {
  IntegrationFailure(const std::string& what, double t);
  double time;
};

// Integer-step circular delay with zero initial history.
class DelayLine {
 public:
  explicit DelayLine(std::size_t capacity);
  double push_pop(double u);
  std::size_t capacity() const { return buf_.size(); }

 private:
  std::vector<double> buf_;
  std::size_t head_ = 0;
};

// Piecewise-constant measurement noise, one independent Gaussian per component,
// resampled every sample_interval with variance power / sample_interval.
class PiecewiseNoise {
 public:
  PiecewiseNoise(const NoiseConfig& cfg, int dim);
  la::Vec apply(const la::Vec& x, double t);

 private:
  NoiseConfig cfg_;
  rng::Rng gen_;
  la::Vec current_;
  double next_resample_ = 0.0;
};

// Classical fixed-step RK4 on xdot = A x + B u with u held constant per step.
// The control path per step: measure (+noise), controller (V per its sampling
// policy), then the delay line before the plant input.
Trajectory integrate(const lmi::PlantConfig& plant, ctrl::Controller& controller,
                     const SimConfig& config);

// Convenience overload; the controller (and its ledger) stays internal.
Trajectory integrate(const lmi::PlantConfig& plant, const ctrl::ControllerSpec& spec,
                     const SimConfig& config);

}  // namespace sim
