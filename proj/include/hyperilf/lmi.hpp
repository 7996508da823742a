#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "hyperilf/ilf.hpp"
#include "hyperilf/linalg.hpp"

namespace lmi {

// Chain of integrators: A has ones on the superdiagonal, B = (0,...,0,1)^T.
struct PlantConfig {
  int n = 0;
  la::Mat A;
  la::Mat B;  // n x 1
};

PlantConfig build_chain(int n);

// Kalman rank of [B AB ... A^{n-1}B].
int controllability_rank(const PlantConfig& plant);

// Eigenvalues of a symmetric matrix, ascending. The input must be symmetric
// within tol * ||M||_inf or a domain error is raised.
la::Vec sym_eigs(const la::Mat& m, double tol = 1e-9);

enum class LmiKind { FiniteTimeLmi, HyperLmi };

// Gains with their shape certificate. X > 0 and XH + HX > 0 are enforced at
// construction; P = X^{-1}, K = Y X^{-1}.
struct GainCertificate {
  la::Mat X;  // n x n symmetric
  la::Mat Y;  // 1 x n
  la::Mat P;  // X^{-1}
  la::Mat K;  // Y X^{-1}, 1 x n
  double mu = 0.5;
  double gamma_or_a = 0.0;
  LmiKind which = LmiKind::HyperLmi;

  static GainCertificate from_xy(la::Mat x, la::Mat y, double mu, double rate,
                                 LmiKind which);
  static GainCertificate from_pk(la::Mat p, la::Mat k, double mu, double rate,
                                 LmiKind which);
};

struct LmiVerification {
  bool feasible = false;
  double lmi_max_eig = 0.0;  // lambda_max of the LMI left side (want <= eps_psd)
  double xh_min_eig = 0.0;   // lambda_min of XH + HX (want > 0)
  double x_min_eig = 0.0;    // lambda_min of X (want > 0)
};

// AX + XA^T + BY + Y^T B^T + a X <= 0,  XH + HX > 0,  X > 0
LmiVerification verify_finite_time_lmi(const GainCertificate& cert,
                                       const PlantConfig& plant);

// AX + XA^T + BY + Y^T B^T + gamma (XH + HX) <= 0,  XH + HX > 0,  X > 0
LmiVerification verify_hyper_lmi(const GainCertificate& cert, const PlantConfig& plant);

struct RateSearch {
  bool feasible = false;
  double value = 0.0;  // largest verified-feasible rate
  LmiVerification at_value;
};

// Largest gamma keeping the hyper LMI feasible for fixed (X, Y), by doubling
// then bisection; the returned value itself passed verification.
RateSearch max_gamma_search(const la::Mat& x, const la::Mat& y, const PlantConfig& plant,
                            double mu, double tol = 1e-6);

// Same search for the finite-time system's a.
RateSearch max_a_search(const la::Mat& x, const la::Mat& y, const PlantConfig& plant,
                        double mu, double tol = 1e-6);

// Best-effort gain synthesis: a Lyapunov-equation initializer followed by
// coordinate descent on lambda_max of the LMI left side, subject to
// lambda_min(X) >= delta and lambda_min(XH+HX) >= delta. Returns only
// certificates that pass verify_hyper_lmi; nullopt when the budget runs out.
std::optional<GainCertificate> synthesize_gains(const PlantConfig& plant, double mu,
                                                double gamma_target,
                                                std::uint64_t seed = 1,
                                                int budget = 40000);

// Text block with named sections X, Y, mu, gamma (round-trips exactly).
std::string cert_to_text(const GainCertificate& cert);
GainCertificate cert_from_text(const std::string& text);

struct Gains {
  la::Mat P;
  la::Mat K;
};

// Reference stabilizing gains for the n = 3 chain, used throughout the
// bundled experiments and tests.
Gains chain3_reference_gains();

}  // namespace lmi
