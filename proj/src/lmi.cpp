#include "hyperilf/lmi.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "hyperilf/rng.hpp"

namespace lmi {

PlantConfig build_chain(int n) {
  if (n < 1) throw std::domain_error("build_chain: n must be >= 1");
  PlantConfig p;
  p.n = n;
  p.A = la::Mat(n, n);
  for (int i = 0; i + 1 < n; ++i) p.A(i, i + 1) = 1.0;
  p.B = la::Mat(n, 1);
  p.B(n - 1, 0) = 1.0;
  return p;
}

int controllability_rank(const PlantConfig& plant) {
  const int n = plant.n;
  la::Mat ctrb(n, n);
  la::Vec col(n);
  for (int i = 0; i < n; ++i) col[i] = plant.B(i, 0);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) ctrb(i, j) = col[i];
    col = la::mul(plant.A, col);
  }
  return la::rank(ctrb);
}

la::Vec sym_eigs(const la::Mat& m, double tol) {
  if (m.rows() != m.cols()) throw std::domain_error("sym_eigs: not square");
  const double asym = la::max_abs(m - la::transpose(m));
  if (asym > tol * std::max(la::max_abs(m), 1e-300))
    throw std::domain_error("sym_eigs: matrix is not symmetric within tolerance");
  return la::jacobi_eigensym(m, std::min(tol, 1e-12)).values;
}

GainCertificate GainCertificate::from_xy(la::Mat x, la::Mat y, double mu, double rate,
                                         LmiKind which) {
  const int n = x.rows();
  if (x.cols() != n || n < 1) throw std::invalid_argument("GainCertificate: X must be square");
  if (y.rows() != 1 || y.cols() != n)
    throw std::invalid_argument("GainCertificate: Y must be 1 x n");
  if (!(mu > 0.0) || mu > 1.0) throw std::invalid_argument("GainCertificate: mu in (0,1]");

  GainCertificate cert;
  cert.X = la::symmetrize(x);
  cert.Y = std::move(y);
  cert.mu = mu;
  cert.gamma_or_a = rate;
  cert.which = which;

  const auto eig_x = la::jacobi_eigensym(cert.X);
  if (!(eig_x.values.front() > 0.0))
    throw std::invalid_argument("GainCertificate: X must be positive definite");
  const la::Mat h = ilf::weight_matrix(ilf::Dilation::descending(n, mu));
  const la::Mat xh = cert.X * h + h * cert.X;
  if (!(la::jacobi_eigensym(xh).values.front() > 0.0))
    throw std::invalid_argument("GainCertificate: XH + HX must be positive definite");

  cert.P = la::symmetrize(la::inverse(cert.X));
  cert.K = cert.Y * cert.P;
  return cert;
}

GainCertificate GainCertificate::from_pk(la::Mat p, la::Mat k, double mu, double rate,
                                         LmiKind which) {
  la::Mat x = la::symmetrize(la::inverse(p));
  la::Mat y = k * x;
  return from_xy(std::move(x), std::move(y), mu, rate, which);
}

namespace {

la::Mat lmi_base(const la::Mat& x, const la::Mat& y, const PlantConfig& plant) {
  const la::Mat ax = plant.A * x;
  const la::Mat by = plant.B * y;
  return la::symmetrize(ax + la::transpose(ax) + by + la::transpose(by));
}

LmiVerification verify_impl(const la::Mat& x, const la::Mat& y, const PlantConfig& plant,
                            double mu, double rate, bool hyper) {
  if (x.rows() != plant.n || y.cols() != plant.n)
    throw std::invalid_argument("verify LMI: dimension mismatch");
  const la::Mat h = ilf::weight_matrix(ilf::Dilation::descending(plant.n, mu));
  const la::Mat xh = la::symmetrize(x * h + h * x);
  la::Mat lhs = lmi_base(x, y, plant);
  if (hyper)
    lhs = lhs + rate * xh;
  else
    lhs = lhs + rate * x;

  LmiVerification v;
  v.lmi_max_eig = la::jacobi_eigensym(lhs).values.back();
  v.xh_min_eig = la::jacobi_eigensym(xh).values.front();
  v.x_min_eig = la::jacobi_eigensym(x).values.front();
  const double eps_psd = 1e-9 * la::frobenius(x);
  v.feasible = v.lmi_max_eig <= eps_psd && v.xh_min_eig > 0.0 && v.x_min_eig > 0.0;
  return v;
}

}  // namespace

LmiVerification verify_finite_time_lmi(const GainCertificate& cert,
                                       const PlantConfig& plant) {
  if (cert.which != LmiKind::FiniteTimeLmi)
    throw std::invalid_argument("verify_finite_time_lmi: certificate kind mismatch");
  return verify_impl(cert.X, cert.Y, plant, cert.mu, cert.gamma_or_a, false);
}

LmiVerification verify_hyper_lmi(const GainCertificate& cert, const PlantConfig& plant) {
  if (cert.which != LmiKind::HyperLmi)
    throw std::invalid_argument("verify_hyper_lmi: certificate kind mismatch");
  if (!(cert.gamma_or_a > 0.0)) throw std::invalid_argument("verify_hyper_lmi: gamma must be > 0");
  return verify_impl(cert.X, cert.Y, plant, cert.mu, cert.gamma_or_a, true);
}

namespace {

RateSearch rate_search_impl(const la::Mat& x, const la::Mat& y, const PlantConfig& plant,
                            double mu, double tol, bool hyper) {
  if (!(tol > 0.0)) throw std::invalid_argument("rate search: tol must be > 0");
  if (!(la::jacobi_eigensym(x).values.front() > 0.0))
    throw std::invalid_argument("rate search: X must be positive definite");
  const la::Mat h = ilf::weight_matrix(ilf::Dilation::descending(plant.n, mu));
  if (!(la::jacobi_eigensym(x * h + h * x).values.front() > 0.0))
    throw std::invalid_argument("rate search: XH + HX must be positive definite");

  auto feasible_at = [&](double rate) { return verify_impl(x, y, plant, mu, rate, hyper); };

  RateSearch out;
  if (!feasible_at(tol).feasible) {
    out.feasible = false;
    return out;
  }
  double lo = tol;
  double hi = std::max(1.0, 2.0 * tol);
  int guard = 0;
  while (feasible_at(hi).feasible && guard++ < 200) {
    lo = hi;
    hi *= 2.0;
  }
  // the rate term is positive definite, so feasibility is monotone in the rate
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (feasible_at(mid).feasible)
      lo = mid;
    else
      hi = mid;
  }
  out.feasible = true;
  out.value = lo;
  out.at_value = feasible_at(lo);
  return out;
}

}  // namespace

RateSearch max_gamma_search(const la::Mat& x, const la::Mat& y, const PlantConfig& plant,
                            double mu, double tol) {
  return rate_search_impl(x, y, plant, mu, tol, true);
}

RateSearch max_a_search(const la::Mat& x, const la::Mat& y, const PlantConfig& plant,
                        double mu, double tol) {
  return rate_search_impl(x, y, plant, mu, tol, false);
}

namespace {

// Solve (A+BK) X + X (A+BK)^T = -I for symmetric X (vech unknowns, dense solve).
la::Mat lyapunov_solve(const la::Mat& acl) {
  const int n = acl.rows();
  const int m = n * (n + 1) / 2;
  auto idx = [&](int i, int j) {  // vech index, i <= j
    return i * n - i * (i - 1) / 2 + (j - i);
  };
  la::Mat sys(m, m);
  la::Vec rhs(m, 0.0);
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      const int row = idx(i, j);
      rhs[row] = (i == j) ? -1.0 : 0.0;
      // (Acl X + X Acl^T)_{ i j } = sum_k acl(i,k) X(k,j) + X(i,k) acl(j,k)
      for (int k = 0; k < n; ++k) {
        const int c1 = k <= j ? idx(k, j) : idx(j, k);
        sys(row, c1) += acl(i, k);
        const int c2 = i <= k ? idx(i, k) : idx(k, i);
        sys(row, c2) += acl(j, k);
      }
    }
  }
  const la::Vec sol = la::solve(sys, rhs);
  la::Mat x(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) x(i, j) = x(j, i) = sol[idx(i, j)];
  return x;
}

double binom(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

}  // namespace

std::optional<GainCertificate> synthesize_gains(const PlantConfig& plant, double mu,
                                                double gamma_target, std::uint64_t seed,
                                                int budget) {
  if (controllability_rank(plant) != plant.n)
    throw std::invalid_argument("synthesize_gains: plant is not controllable");
  if (!(mu > 0.0) || mu > 1.0) throw std::invalid_argument("synthesize_gains: mu in (0,1]");
  if (!(gamma_target > 0.0))
    throw std::invalid_argument("synthesize_gains: gamma_target must be > 0");

  const int n = plant.n;
  const la::Mat h = ilf::weight_matrix(ilf::Dilation::descending(n, mu));
  const double delta = 1e-3;

  auto score = [&](const la::Mat& x, const la::Mat& y) {
    const la::Mat xh = la::symmetrize(x * h + h * x);
    const double phi =
        la::jacobi_eigensym(lmi_base(x, y, plant) + gamma_target * xh).values.back();
    const double vx = la::jacobi_eigensym(x).values.front();
    const double vxh = la::jacobi_eigensym(xh).values.front();
    return phi + 1e3 * std::max(0.0, delta - vx) + 1e3 * std::max(0.0, delta - vxh);
  };

  // Deterministic initializers: pole placement at -omega, X from the Lyapunov
  // equation of the resulting closed loop (so the gamma-free part is -I).
  la::Mat best_x = la::Mat::identity(n);
  la::Mat best_y(1, n);
  double best = std::numeric_limits<double>::infinity();
  for (double omega : {1.0, 2.0, 4.0, 8.0}) {
    la::Mat k(1, n);
    for (int j = 1; j <= n; ++j) k(0, j - 1) = -binom(n, j - 1) * std::pow(omega, n - j + 1);
    la::Mat acl = plant.A + plant.B * k;
    la::Mat x;
    try {
      x = lyapunov_solve(acl);
    } catch (const std::exception&) {
      continue;
    }
    if (!(la::jacobi_eigensym(x).values.front() > 0.0)) continue;
    // normalize so later perturbation steps act on an O(1) matrix
    const double s = 1.0 / std::max(la::max_abs(x), 1e-12);
    x = s * x;
    la::Mat y = k * x;
    const double sc = score(x, y);
    if (sc < best) {
      best = sc;
      best_x = x;
      best_y = y;
    }
  }

  // Coordinate descent with a decreasing step over vech(X) and Y.
  rng::Rng gen(seed);
  (void)gen;  // perturbation order is fixed; the generator stays for future use
  const int m = n * (n + 1) / 2 + n;
  double step = 0.25;
  int evals = 0;
  while (step > 1e-7 && evals < budget) {
    bool improved = false;
    for (int c = 0; c < m && evals < budget; ++c) {
      for (double dir : {+1.0, -1.0}) {
        la::Mat x = best_x;
        la::Mat y = best_y;
        if (c < n * (n + 1) / 2) {
          int i = 0, j = 0, t = c;
          for (i = 0; i < n; ++i) {
            const int row_len = n - i;
            if (t < row_len) {
              j = i + t;
              break;
            }
            t -= row_len;
          }
          x(i, j) += dir * step;
          x(j, i) = x(i, j);
        } else {
          y(0, c - n * (n + 1) / 2) += dir * step;
        }
        const double sc = score(x, y);
        ++evals;
        if (sc < best - 1e-15) {
          best = sc;
          best_x = x;
          best_y = y;
          improved = true;
          break;
        }
      }
    }
    if (!improved) step *= 0.5;
  }

  try {
    GainCertificate cert =
        GainCertificate::from_xy(best_x, best_y, mu, gamma_target, LmiKind::HyperLmi);
    if (verify_hyper_lmi(cert, plant).feasible) return cert;
  } catch (const std::exception&) {
  }
  return std::nullopt;
}

std::string cert_to_text(const GainCertificate& cert) {
  std::string s;
  char buf[40];
  s += "X\n" + la::to_text(cert.X);
  s += "Y\n" + la::to_text(cert.Y);
  std::snprintf(buf, sizeof buf, "%.17g", cert.mu);
  s += std::string("mu ") + buf + "\n";
  std::snprintf(buf, sizeof buf, "%.17g", cert.gamma_or_a);
  s += std::string(cert.which == LmiKind::HyperLmi ? "gamma " : "a ") + buf + "\n";
  return s;
}

GainCertificate cert_from_text(const std::string& text) {
  std::istringstream in(text);
  std::string tag;
  la::Mat x, y;
  double mu = 0.0, rate = 0.0;
  LmiKind which = LmiKind::HyperLmi;
  bool have_x = false, have_y = false, have_mu = false, have_rate = false;
  while (in >> tag) {
    if (tag == "X") {
      x = la::mat_from_text(in);
      have_x = true;
    } else if (tag == "Y") {
      y = la::mat_from_text(in);
      have_y = true;
    } else if (tag == "mu") {
      in >> mu;
      have_mu = true;
    } else if (tag == "gamma" || tag == "a") {
      in >> rate;
      which = tag == "gamma" ? LmiKind::HyperLmi : LmiKind::FiniteTimeLmi;
      have_rate = true;
    } else {
      throw std::runtime_error("cert_from_text: unknown section " + tag);
    }
  }
  if (!have_x || !have_y || !have_mu || !have_rate)
    throw std::runtime_error("cert_from_text: missing section");
  return GainCertificate::from_xy(std::move(x), std::move(y), mu, rate, which);
}

Gains chain3_reference_gains() {
  Gains g;
  g.P = la::mat_from_text(
      "3 3\n"
      "3.3119 3.2943 0.8806\n"
      "3.2943 5.2366 1.4426\n"
      "0.8806 1.4426 0.9682\n");
  g.K = la::mat_from_text("1 3\n-4.2618 -7.7818 -3.2635\n");
  return g;
}

}  // namespace lmi
