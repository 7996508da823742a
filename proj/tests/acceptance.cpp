// Acceptance suite: runs every top-level criterion at its stated tolerance and
// prints one [PASS]/[FAIL] line per criterion. Exit code = number of failures.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "hyperilf/experiments.hpp"
#include "hyperilf/ilf.hpp"
#include "hyperilf/lmi.hpp"
#include "hyperilf/ratefn.hpp"
#include "hyperilf/rng.hpp"
#include "hyperilf/sim.hpp"

namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void criterion(int id, const std::string& name, double time_limit_s,
               const std::function<Outcome()>& body) {
  const auto start = std::chrono::steady_clock::now();
  Outcome out;
  try {
    out = body();
  } catch (const std::exception& e) {
    out.pass = false;
    out.detail = std::string("exception: ") + e.what();
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  bool in_time = true;
  if (time_limit_s > 0.0 && secs > time_limit_s) {
    in_time = false;
    out.detail += " [exceeded " + std::to_string(time_limit_s) + " s limit]";
  }
  const bool ok = out.pass && in_time;
  if (!ok) ++failures;
  std::printf("[%s] criterion %2d: %s (%.2f s)%s%s\n", ok ? "PASS" : "FAIL", id,
              name.c_str(), secs, out.detail.empty() ? "" : " — ", out.detail.c_str());
  std::fflush(stdout);
}

std::string out_dir(const std::string& leaf) {
  const fs::path dir = fs::temp_directory_path() / "hyperilf_acceptance" / leaf;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir.string();
}

Outcome from_run(const experiments::RunResult& r) {
  Outcome out;
  out.pass = r.exit_code == 0;
  for (const auto& c : r.checks) {
    if (!out.detail.empty()) out.detail += "; ";
    out.detail += c.name + "=" + (c.passed ? "ok" : "FAIL");
    if (!c.passed && !c.detail.empty()) out.detail += " (" + c.detail + ")";
  }
  return out;
}

}  // namespace

int main() {
  criterion(1, "comparison ODE matches its closed form (rel err <= 1e-6)", 1.0, [] {
    const ratefn::RateProfile profile({1.0, 1.0});
    const auto series = ratefn::integrate_comparison(profile, 1.0, 3.0, 1e-4);
    double worst = 0.0;
    for (size_t i = 0; i < series.times.size(); ++i) {
      const double exact = ratefn::envelope(profile, 1.0, series.times[i]);
      worst = std::max(worst, std::fabs(series.values[i] - exact) / exact);
    }
    Outcome out;
    out.pass = worst <= 1e-6;
    out.detail = "max rel err " + std::to_string(worst);
    return out;
  });

  criterion(2, "rate reference curves ordered, FTS cut exactly at 1.25", 1.0, [] {
    return from_run(experiments::run("fig1-rates", {}, out_dir("fig1")));
  });

  criterion(3, "reference gains verify both LMI systems with positive witnesses", 1.0, [] {
    return from_run(experiments::run("lmi-verify", {}, out_dir("lmi")));
  });

  criterion(4, "sampled finite-time run: ledger decreasing, rates increasing, hyper decay",
            10.0, [] {
              return from_run(
                  experiments::run("ex1-sampled-finite-time", {}, out_dir("ex1")));
            });

  criterion(5, "hyperexponential run: V decreasing inside the ellipsoid, hyper decay",
            10.0, [] { return from_run(experiments::run("ex2-hyper", {}, out_dir("ex2"))); });

  criterion(6, "condition certification (C4/C5 exact, C6, C7, C9 bound, C10)", 30.0, [] {
    return from_run(experiments::run("certify-conditions", {}, out_dir("certify")));
  });

  criterion(7, "noise comparison: hyper residual wins in enough paired runs", 120.0, [] {
    return from_run(experiments::run("compare-noise", {}, out_dir("noise")));
  });

  criterion(8, "delay comparison: both bounded, hyper residual no worse", 10.0, [] {
    return from_run(experiments::run("compare-delay", {}, out_dir("delay")));
  });

  criterion(9, "bisection residual contract and quadratic closed form (1e-9)", 5.0, [] {
    const la::Mat p = lmi::chain3_reference_gains().P;
    const auto q2 = ilf::IlfCandidate::quadratic_q2(p);
    const auto q1 = ilf::IlfCandidate::hyper_q1(p, 0.2);
    const auto ft = ilf::IlfCandidate::finite_time(p, 0.5);
    ilf::BisectionSolver s2(q2), s1(q1), sf(ft);
    rng::Rng gen(777);
    double worst_rel = 0.0, worst_resid_ratio = 0.0;
    int clamped = 0;
    for (int k = 0; k < 1000; ++k) {
      la::Vec x = gen.unit_vec(3);
      const double r = std::pow(10.0, gen.uniform(-3.0, 3.0));
      for (auto& c : x) c *= r;

      const auto sol2 = s2.solve(x);
      const double expect = std::sqrt(la::quad_form(p, x));
      if (!sol2.clamped)
        worst_rel = std::max(worst_rel, std::fabs(sol2.v - expect) / expect);

      for (auto* pair : {&s1, &sf}) {
        const auto sol = pair->solve(x);
        if (sol.clamped) {
          ++clamped;
          continue;
        }
        const auto& cand = pair->candidate();
        const double h = 1e-6 * sol.v;
        const double slope =
            (cand.q_eval(sol.v + h, x) - cand.q_eval(sol.v - h, x)) / (2.0 * h);
        const double allowed = std::fabs(slope) * (1e-12 * sol.v) * 10.0 + 1e-15;
        worst_resid_ratio = std::max(worst_resid_ratio, std::fabs(sol.residual) / allowed);
      }
    }
    Outcome out;
    out.pass = worst_rel <= 1e-9 && worst_resid_ratio <= 1.0;
    out.detail = "closed-form rel err " + std::to_string(worst_rel) +
                 ", residual/bound " + std::to_string(worst_resid_ratio) + ", " +
                 std::to_string(clamped) + " clamped skipped";
    return out;
  });

  criterion(10, "numerical hygiene: dQ1/dV cross-check, RK4 order, sym_eigs identities",
            0.0, [] {
    Outcome out;
    out.pass = true;

    // finite differences vs the closed-form derivative of the hyper family
    const la::Mat p = lmi::chain3_reference_gains().P;
    const auto q1 = ilf::IlfCandidate::hyper_q1(p, 0.2);
    rng::Rng gen(31337);
    double worst_fd = 0.0;
    for (int k = 0; k < 100; ++k) {
      const la::Vec x = gen.gaussian_vec(3);
      const double v = std::pow(10.0, gen.uniform(-3.0, 2.0));
      const double h = 1e-6 * v;
      const double fd = (q1.q_eval(v + h, x) - q1.q_eval(v - h, x)) / (2.0 * h);
      const double closed = q1.dq_dv_closed(v, x);
      worst_fd = std::max(worst_fd,
                          std::fabs(fd - closed) / std::max(1.0, std::fabs(closed)));
    }
    if (worst_fd > 1e-5) {
      out.pass = false;
      out.detail += "dQ1/dV mismatch " + std::to_string(worst_fd) + "; ";
    }

    // integrator order on the rotation system
    lmi::PlantConfig rot;
    rot.n = 2;
    rot.A = la::Mat(2, 2);
    rot.A(0, 1) = 1.0;
    rot.A(1, 0) = -1.0;
    rot.B = la::Mat(2, 1);
    ctrl::ControllerSpec zero;
    zero.variant = ctrl::ControlVariant::LinearOnly;
    zero.P = la::Mat::identity(2);
    zero.K = la::Mat(1, 2);
    auto end_error = [&](double dt) {
      sim::SimConfig cfg;
      cfg.dt = dt;
      cfg.horizon = 1.0;
      cfg.x0 = {1.0, 0.0};
      const auto traj = sim::integrate(rot, zero, cfg);
      return std::hypot(traj.states.back()[0] - std::cos(1.0),
                        traj.states.back()[1] + std::sin(1.0));
    };
    const double factor = end_error(2e-3) / end_error(1e-3);
    if (!(factor >= 12.0 && factor <= 20.0)) {
      out.pass = false;
      out.detail += "order factor " + std::to_string(factor) + "; ";
    }

    // symmetric eigensolver identities
    double worst_trace = 0.0, worst_recon = 0.0;
    for (int k = 0; k < 100; ++k) {
      const int n = 2 + static_cast<int>(gen.uniform() * 5);
      la::Mat m(n, n);
      for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) m(i, j) = m(j, i) = gen.uniform(-2.0, 2.0);
      const auto eig = la::jacobi_eigensym(m);
      double tr = 0.0, sum = 0.0;
      for (int i = 0; i < n; ++i) tr += m(i, i);
      for (double v : eig.values) sum += v;
      worst_trace =
          std::max(worst_trace, std::fabs(tr - sum) / std::max(1.0, std::fabs(tr)));
      const la::Mat rec = eig.vectors * la::Mat::diag(eig.values) * la::transpose(eig.vectors);
      worst_recon =
          std::max(worst_recon, la::frobenius(rec - m) / std::max(1.0, la::frobenius(m)));
    }
    if (worst_trace > 1e-8 || worst_recon > 1e-8) {
      out.pass = false;
      out.detail += "eigs trace " + std::to_string(worst_trace) + " recon " +
                    std::to_string(worst_recon) + "; ";
    }

    if (out.detail.empty())
      out.detail = "fd " + std::to_string(worst_fd) + ", order factor " +
                   std::to_string(factor) + ", recon " + std::to_string(worst_recon);
    return out;
  });

  std::printf("%s: %d of 10 criteria failed\n", failures == 0 ? "PASS" : "FAIL", failures);
  return failures;
}
