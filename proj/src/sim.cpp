#include "hyperilf/sim.hpp"

#include <cmath>

namespace sim {

IntegrationFailure::IntegrationFailure(const std::string& what, double t)
    : std::runtime_error(what + " (t=" + std::to_string(t) + ")"), time(t) {}

DelayLine::DelayLine(std::size_t capacity) : buf_(capacity, 0.0) {}

double DelayLine::push_pop(double u) {
  if (buf_.empty()) return u;
  const double out = buf_[head_];
  buf_[head_] = u;
  head_ = (head_ + 1) % buf_.size();
  return out;
}

PiecewiseNoise::PiecewiseNoise(const NoiseConfig& cfg, int dim)
    : cfg_(cfg), gen_(cfg.seed), current_(dim, 0.0) {
  if (!(cfg_.sample_interval > 0.0))
    throw std::invalid_argument("PiecewiseNoise: sample_interval must be > 0");
  if (cfg_.power < 0.0) throw std::invalid_argument("PiecewiseNoise: power must be >= 0");
  next_resample_ = 0.0;
}

la::Vec PiecewiseNoise::apply(const la::Vec& x, double t) {
  if (t >= next_resample_ - 1e-12) {
    const double sd = std::sqrt(cfg_.power / cfg_.sample_interval);
    for (auto& c : current_) c = sd * gen_.gaussian();
    next_resample_ += cfg_.sample_interval;
  }
  la::Vec y = x;
  for (size_t i = 0; i < y.size(); ++i) y[i] += current_[i];
  return y;
}

namespace {

la::Vec rk4_step(const la::Mat& a, const la::Vec& b_col, double u, const la::Vec& x,
                 double dt) {
  auto f = [&](const la::Vec& s) {
    la::Vec d = la::mul(a, s);
    for (size_t i = 0; i < d.size(); ++i) d[i] += b_col[i] * u;
    return d;
  };
  const size_t n = x.size();
  const la::Vec k1 = f(x);
  la::Vec tmp(n);
  for (size_t i = 0; i < n; ++i) tmp[i] = x[i] + 0.5 * dt * k1[i];
  const la::Vec k2 = f(tmp);
  for (size_t i = 0; i < n; ++i) tmp[i] = x[i] + 0.5 * dt * k2[i];
  const la::Vec k3 = f(tmp);
  for (size_t i = 0; i < n; ++i) tmp[i] = x[i] + dt * k3[i];
  const la::Vec k4 = f(tmp);
  la::Vec out(n);
  for (size_t i = 0; i < n; ++i)
    out[i] = x[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  return out;
}

}  // namespace

Trajectory integrate(const lmi::PlantConfig& plant, ctrl::Controller& controller,
                     const SimConfig& config) {
  const int n = plant.n;
  if (static_cast<int>(config.x0.size()) != n)
    throw std::invalid_argument("integrate: x0 dimension mismatch");
  if (!(config.dt > 0.0) || !(config.horizon > 0.0))
    throw std::invalid_argument("integrate: dt and horizon must be > 0");
  if (config.delay_tau < 0.0) throw std::invalid_argument("integrate: delay_tau must be >= 0");
  if (config.noise && config.noise->sample_interval < config.dt)
    throw std::invalid_argument("integrate: noise sample_interval must be >= dt");

  la::Vec b_col(n);
  for (int i = 0; i < n; ++i) b_col[i] = plant.B(i, 0);

  const long steps = std::lround(config.horizon / config.dt);
  const std::size_t delay_steps =
      static_cast<std::size_t>(std::lround(config.delay_tau / config.dt));
  DelayLine delay(delay_steps);
  std::optional<PiecewiseNoise> noise;
  if (config.noise && config.noise->power > 0.0) noise.emplace(*config.noise, n);

  Trajectory traj;
  traj.times.reserve(steps + 1);
  traj.states.reserve(steps + 1);
  traj.measured.reserve(steps + 1);
  traj.controls.reserve(steps + 1);
  traj.v_values.reserve(steps + 1);
  traj.norms.reserve(steps + 1);

  la::Vec x = config.x0;
  for (long k = 0; k <= steps; ++k) {
    const double t = k * config.dt;
    const la::Vec y = noise ? noise->apply(x, t) : x;
    const double u_cmd = controller(t, y);
    const double u = delay.push_pop(u_cmd);

    traj.times.push_back(t);
    traj.states.push_back(x);
    traj.measured.push_back(y);
    traj.controls.push_back(u);
    traj.v_values.push_back(controller.current_v());
    traj.norms.push_back(std::max(la::norm2(x), config.norm_floor));

    if (k == steps) break;
    x = rk4_step(plant.A, b_col, u, x, config.dt);
    for (double c : x)
      if (!std::isfinite(c))
        throw IntegrationFailure("integrate: state became non-finite", (k + 1) * config.dt);
  }
  return traj;
}

Trajectory integrate(const lmi::PlantConfig& plant, const ctrl::ControllerSpec& spec,
                     const SimConfig& config) {
  ctrl::Controller controller(spec);
  return integrate(plant, controller, config);
}

}  // namespace sim
