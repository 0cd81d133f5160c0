// Closed-form minimizers of the three per-block subproblems and the
// bisection that pins their total-bits multipliers.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

#include "uav_offload/solver.hpp"
#include "uav_offload/summation.hpp"

namespace uav_offload {

namespace {

void require_same_size(std::size_t a, std::size_t b, const char* what) {
  if (a != b) throw std::invalid_argument(std::string(what) + ": array sizes differ");
}

// Smallest step that surely overshoots: every slot alone carrying total / M.
double safe_step(double candidate, double fallback) {
  if (std::isfinite(candidate) && candidate > 0.0) return candidate;
  return fallback > 0.0 ? fallback : 1.0;
}

}  // namespace

double bisect(double target, const std::function<double(double)>& total, double lo,
              double initial_step, const SolverConfig& cfg) {
  const double at_lo = total(lo);
  if (target <= at_lo) return lo;

  double step = initial_step > 0.0 ? initial_step : 1.0;
  double hi = lo + step;
  double at_hi = total(hi);
  int expansions = 0;
  while (!(at_hi >= target)) {
    if (expansions >= cfg.bisection_max_expand || !std::isfinite(hi)) {
      throw BracketError("bisection could not bracket target total " + std::to_string(target) +
                         " after " + std::to_string(expansions) + " expansions");
    }
    lo = hi;
    step *= 2.0;
    hi = lo + step;
    at_hi = total(hi);
    ++expansions;
  }

  double a = lo;
  double b = hi;
  double fb = at_hi;
  double fa = total(a);
  for (int iter = 0; iter < 4000; ++iter) {
    const double mid = a + 0.5 * (b - a);
    if (!(mid > a && mid < b)) break;
    const double fm = total(mid);
    if (fm == target) return mid;
    if (fm < target) {
      a = mid;
      fa = fm;
    } else {
      b = mid;
      fb = fm;
    }
  }
  return (target - fa) <= (fb - target) ? a : b;
}

InnerSolution solve_uplink(std::span<const double> alpha, std::span<const double> gains,
                           const Channel& channel, double slot_s, double total_bits,
                           const SolverConfig& cfg) {
  require_same_size(alpha.size(), gains.size(), "solve_uplink");
  const std::size_t m = gains.size();
  if (m == 0) throw std::invalid_argument("solve_uplink: no slots");
  const double bd = channel.bandwidth_hz * slot_s;
  // Marginal energy of the first bit in each slot.
  std::vector<double> theta(m);
  for (std::size_t n = 0; n < m; ++n) theta[n] = channel.noise_psd_w_hz * std::numbers::ln2 / gains[n];

  if (m == 1) {
    return {{std::max(total_bits, 0.0)}, theta[0] * std::exp2(total_bits / bd) - alpha[0]};
  }

  // Slot n turns on once lambda exceeds theta_n - alpha_n.
  double lo = std::numeric_limits<double>::infinity();
  for (std::size_t n = 0; n < m; ++n) lo = std::min(lo, theta[n] - alpha[n]);
  std::vector<double> base(m);
  for (std::size_t n = 0; n < m; ++n) base[n] = lo + alpha[n];

  std::vector<double> bits(m, 0.0);
  auto fill = [&](double t) {
    CompensatedSum sum;
    for (std::size_t n = 0; n < m; ++n) {
      const double level = (base[n] + t) / theta[n];
      bits[n] = level > 1.0 ? bd * std::log2(level) : 0.0;
      sum.add(bits[n]);
    }
    return sum.value();
  };

  double t = 0.0;
  if (total_bits > 0.0) {
    const double share = std::exp2(total_bits / (static_cast<double>(m) * bd));
    double step = 0.0;
    double theta_max = 0.0;
    for (std::size_t n = 0; n < m; ++n) {
      step = std::max(step, theta[n] * share - base[n]);
      theta_max = std::max(theta_max, theta[n]);
    }
    t = bisect(total_bits, fill, 0.0, safe_step(step, theta_max), cfg);
  }
  fill(t);
  return {bits, lo + t};
}

InnerSolution solve_compute(double mu, std::span<const double> alpha, std::span<const double> beta,
                            double kappa, double gamma_cloudlet, double cycles_per_bit,
                            double slot_s, double total_bits, const SolverConfig& cfg) {
  require_same_size(alpha.size(), beta.size(), "solve_compute");
  const std::size_t m = alpha.size();
  if (m == 0) throw std::invalid_argument("solve_compute: no slots");
  mu = std::max(mu, cfg.mu_min);
  const double k = slot_s * slot_s / (3.0 * gamma_cloudlet * std::pow(cycles_per_bit, 3));

  // Slot coefficient q_n = -alpha_n + kappa beta_n; slot n is active once nu > -q_n.
  std::vector<double> q(m);
  double q_max = -std::numeric_limits<double>::infinity();
  for (std::size_t n = 0; n < m; ++n) {
    q[n] = -alpha[n] + kappa * beta[n];
    q_max = std::max(q_max, q[n]);
  }
  const double lo = -q_max;

  if (m == 1) {
    const double l = std::max(total_bits, 0.0);
    return {{l}, mu * l * l / k - q[0]};
  }

  std::vector<double> base(m);
  for (std::size_t n = 0; n < m; ++n) base[n] = q[n] - q_max;

  std::vector<double> bits(m, 0.0);
  const double scale = k / mu;
  auto fill = [&](double t) {
    CompensatedSum sum;
    for (std::size_t n = 0; n < m; ++n) {
      const double excess = base[n] + t;
      bits[n] = excess > 0.0 ? std::sqrt(scale * excess) : 0.0;
      sum.add(bits[n]);
    }
    return sum.value();
  };

  double t = 0.0;
  if (total_bits > 0.0) {
    const double share = total_bits / static_cast<double>(m);
    double step = 0.0;
    for (std::size_t n = 0; n < m; ++n) step = std::max(step, share * share / scale - base[n]);
    t = bisect(total_bits, fill, 0.0, safe_step(step, share * share / scale), cfg);
  }
  fill(t);
  return {bits, lo + t};
}

InnerSolution solve_downlink(double mu, std::span<const double> beta, std::span<const double> gains,
                             const Channel& channel, double slot_s, double total_bits,
                             const SolverConfig& cfg) {
  require_same_size(beta.size(), gains.size(), "solve_downlink");
  const std::size_t m = gains.size();
  if (m == 0) throw std::invalid_argument("solve_downlink: no slots");
  mu = std::max(mu, cfg.mu_min);
  const double bd = channel.bandwidth_hz * slot_s;
  std::vector<double> theta(m);
  for (std::size_t n = 0; n < m; ++n) {
    theta[n] = mu * channel.noise_psd_w_hz * std::numbers::ln2 / gains[n];
  }

  if (m == 1) {
    const double l = std::max(total_bits, 0.0);
    return {{l}, theta[0] * std::exp2(l / bd) + beta[0]};
  }

  double lo = std::numeric_limits<double>::infinity();
  for (std::size_t n = 0; n < m; ++n) lo = std::min(lo, beta[n] + theta[n]);
  std::vector<double> base(m);
  for (std::size_t n = 0; n < m; ++n) base[n] = lo - beta[n];

  std::vector<double> bits(m, 0.0);
  auto fill = [&](double t) {
    CompensatedSum sum;
    for (std::size_t n = 0; n < m; ++n) {
      const double level = (base[n] + t) / theta[n];
      bits[n] = level > 1.0 ? bd * std::log2(level) : 0.0;
      sum.add(bits[n]);
    }
    return sum.value();
  };

  double t = 0.0;
  if (total_bits > 0.0) {
    const double share = std::exp2(total_bits / (static_cast<double>(m) * bd));
    double step = 0.0;
    double theta_max = 0.0;
    for (std::size_t n = 0; n < m; ++n) {
      step = std::max(step, theta[n] * share - base[n]);
      theta_max = std::max(theta_max, theta[n]);
    }
    t = bisect(total_bits, fill, 0.0, safe_step(step, theta_max), cfg);
  }
  fill(t);
  return {bits, lo + t};
}

}  // namespace uav_offload
