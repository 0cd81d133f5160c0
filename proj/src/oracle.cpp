#include "uav_offload/oracle.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

namespace uav_offload::oracle {

namespace {

using Composition = std::vector<int>;

// Nonnegative integer vectors of length `parts` summing to `total`, in
// lexicographic order.
std::vector<Composition> compositions(int total, int parts) {
  std::vector<Composition> out;
  Composition cur(static_cast<std::size_t>(parts), 0);
  auto rec = [&](auto&& self, int slot, int left) -> void {
    if (slot == parts - 1) {
      cur[static_cast<std::size_t>(slot)] = left;
      out.push_back(cur);
      return;
    }
    for (int v = 0; v <= left; ++v) {
      cur[static_cast<std::size_t>(slot)] = v;
      self(self, slot + 1, left - v);
    }
  };
  rec(rec, 0, total);
  return out;
}

std::uint64_t saturating_mul(std::uint64_t a, std::uint64_t b) {
  if (a != 0 && b > std::numeric_limits<std::uint64_t>::max() / a) {
    return std::numeric_limits<std::uint64_t>::max();
  }
  return a * b;
}

std::uint64_t saturating_add(std::uint64_t a, std::uint64_t b) {
  return b > std::numeric_limits<std::uint64_t>::max() - a ? std::numeric_limits<std::uint64_t>::max()
                                                           : a + b;
}

std::uint64_t composition_count(int total, int parts) {
  // C(total + parts - 1, parts - 1), parts <= 3 here.
  std::uint64_t num = 1;
  std::uint64_t den = 1;
  for (int k = 1; k < parts; ++k) {
    num = saturating_mul(num, static_cast<std::uint64_t>(total + k));
    den *= static_cast<std::uint64_t>(k);
  }
  return num / den;
}

int grid_units(double total_bits, double grid_bits, const char* what) {
  const double units = total_bits / grid_bits;
  const double rounded = std::round(units);
  if (std::abs(units - rounded) > 1e-9 * std::max(1.0, rounded) || rounded > 1e6) {
    throw std::invalid_argument(std::string("grid_search: grid does not divide ") + what);
  }
  return static_cast<int>(rounded);
}

struct Grid {
  int slots = 0;
  int up_units = 0;
  int down_units = 0;
};

Grid make_grid(const Scenario& s, double grid_bits) {
  if (!(grid_bits > 0.0)) throw std::invalid_argument("grid_search: grid must be positive");
  Grid g;
  g.slots = s.usable_slots();
  if (g.slots > 3) {
    throw InstanceTooLarge("grid_search: " + std::to_string(g.slots) + " slots, at most 3 supported");
  }
  g.up_units = grid_units(s.application.input_bits, grid_bits, "L");
  g.down_units = grid_units(s.application.output_ratio * s.application.input_bits, grid_bits, "kappa L");
  return g;
}

bool prefix_dominates(const Composition& big, const Composition& small, double scale_small) {
  int pb = 0;
  int ps = 0;
  for (std::size_t i = 0; i < big.size(); ++i) {
    pb += big[i];
    ps += small[i];
    if (scale_small * ps > pb + 1e-9) return false;
  }
  return true;
}

}  // namespace

std::uint64_t grid_search_nodes(const Scenario& s, double grid_bits) {
  const Grid g = make_grid(s, grid_bits);
  const std::uint64_t up = composition_count(g.up_units, g.slots);
  const std::uint64_t down = composition_count(g.down_units, g.slots);
  return saturating_add(saturating_mul(up, down), saturating_mul(up, up));
}

OracleResult grid_search(const Scenario& s, double grid_bits, std::uint64_t node_budget) {
  const Grid g = make_grid(s, grid_bits);
  const std::uint64_t nodes = grid_search_nodes(s, grid_bits);
  if (nodes > node_budget) {
    throw InstanceTooLarge("grid_search: " + std::to_string(nodes) + " nodes exceed budget " +
                           std::to_string(node_budget));
  }
  const auto gains = slot_gains(s);
  const auto& ch = s.channel;
  const double delta = s.timing.slot_s;
  const double kappa = s.application.output_ratio;
  const double budget = s.devices.cloudlet_budget_j;

  const auto ups = compositions(g.up_units, g.slots);
  const auto downs = compositions(g.down_units, g.slots);

  auto uplink_energy = [&](const Composition& u) {
    double e = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
      e += comm_energy(u[i] * grid_bits, gains.uplink[i], ch.bandwidth_hz, delta, ch.noise_psd_w_hz);
    }
    return e;
  };
  auto compute_energy = [&](const Composition& c) {
    double e = 0.0;
    for (int v : c) {
      e += comp_energy_slot(v * grid_bits, s.devices.gamma_cloudlet, s.application.cycles_per_bit, delta);
    }
    return e;
  };
  auto downlink_energy = [&](const Composition& d) {
    double e = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) {
      e += comm_energy(d[i] * grid_bits, gains.downlink[i], ch.bandwidth_hz, delta, ch.noise_psd_w_hz);
    }
    return e;
  };
  // Downlink units are kappa L / grid while compute units are L / grid, so
  // output causality compares d against kappa * c in grid units.
  auto downlink_causal = [&](const Composition& c, const Composition& d) {
    int pc = 0;
    int pd = 0;
    for (std::size_t i = 0; i < c.size(); ++i) {
      pc += c[i];
      pd += d[i];
      if (pd > kappa * pc + 1e-9) return false;
    }
    return true;
  };

  // Cheapest causal downlink for every compute schedule.
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> cloud_cost(ups.size(), inf);
  for (std::size_t ci = 0; ci < ups.size(); ++ci) {
    const double ec = compute_energy(ups[ci]);
    double best = inf;
    for (const auto& d : downs) {
      if (downlink_causal(ups[ci], d)) best = std::min(best, downlink_energy(d));
    }
    cloud_cost[ci] = ec + best;
  }

  std::size_t best_u = ups.size();
  double best_obj = inf;
  for (std::size_t ui = 0; ui < ups.size(); ++ui) {
    const double obj = uplink_energy(ups[ui]);
    if (!(obj < best_obj)) continue;
    bool feasible = false;
    for (std::size_t ci = 0; ci < ups.size() && !feasible; ++ci) {
      feasible = cloud_cost[ci] <= budget && prefix_dominates(ups[ui], ups[ci], 1.0);
    }
    if (feasible) {
      best_u = ui;
      best_obj = obj;
    }
  }
  if (best_u == ups.size()) throw InfeasibleInstance("grid_search: no feasible grid point");

  // Lexicographically first compute and downlink completing the best uplink.
  const auto& u = ups[best_u];
  for (const auto& c : ups) {
    if (!prefix_dominates(u, c, 1.0)) continue;
    const double ec = compute_energy(c);
    for (const auto& d : downs) {
      if (!downlink_causal(c, d) || ec + downlink_energy(d) > budget) continue;
      OracleResult r;
      auto to_bits = [grid_bits](const Composition& v) {
        std::vector<double> bits(v.size());
        for (std::size_t i = 0; i < v.size(); ++i) bits[i] = v[i] * grid_bits;
        return bits;
      };
      r.allocation = {to_bits(u), to_bits(c), to_bits(d)};
      r.objective_j = best_obj;
      return r;
    }
  }
  throw InfeasibleInstance("grid_search: inconsistent feasibility bookkeeping");
}

double grid_step_energy(const Scenario& s, const BitAllocation& a, double grid_bits) {
  const auto gains = slot_gains(s);
  const auto& ch = s.channel;
  double worst = 0.0;
  for (std::size_t i = 0; i < a.uplink.size(); ++i) {
    const double here = comm_energy(a.uplink[i], gains.uplink[i], ch.bandwidth_hz, s.timing.slot_s,
                                    ch.noise_psd_w_hz);
    const double more = comm_energy(a.uplink[i] + grid_bits, gains.uplink[i], ch.bandwidth_hz,
                                    s.timing.slot_s, ch.noise_psd_w_hz);
    worst = std::max(worst, more - here);
    if (a.uplink[i] >= grid_bits) {
      const double less = comm_energy(a.uplink[i] - grid_bits, gains.uplink[i], ch.bandwidth_hz,
                                      s.timing.slot_s, ch.noise_psd_w_hz);
      worst = std::max(worst, here - less);
    }
  }
  return worst;
}

namespace {

// Barrier problem in bits normalized by L. Layout: u[0..M), c[M..2M), d[2M..3M)
// with the downlink block absent when kappa == 0.
class BarrierProblem {
 public:
  explicit BarrierProblem(const Scenario& s)
      : s_(s),
        gains_(slot_gains(s)),
        m_(s.usable_slots()),
        kappa_(s.application.output_ratio),
        has_down_(kappa_ > 0.0),
        l_(s.application.input_bits),
        bd_(s.channel.bandwidth_hz * s.timing.slot_s) {
    const double c3 = std::pow(s.application.cycles_per_bit, 3);
    comp_coef_ = s.devices.gamma_cloudlet * c3 / (s.timing.slot_s * s.timing.slot_s);
  }

  int size() const { return (has_down_ ? 3 : 2) * m_; }
  int u(int i) const { return i; }
  int c(int i) const { return m_ + i; }
  int d(int i) const { return 2 * m_ + i; }
  int constraint_count() const { return size() + (has_down_ ? 2 : 1) * (m_ - 1) + 1; }

  Eigen::MatrixXd equalities() const {
    const int blocks = has_down_ ? 3 : 2;
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(blocks, size());
    for (int b = 0; b < blocks; ++b) a.block(b, b * m_, 1, m_).setOnes();
    return a;
  }

  Eigen::VectorXd tilted_start(double tilt) const {
    Eigen::VectorXd x(size());
    for (int i = 0; i < m_; ++i) {
      // Decreasing weights with zero sum: proper prefix sums are positive.
      const double w = m_ > 1 ? static_cast<double>(m_ - 1 - 2 * i) / (m_ - 1) : 0.0;
      x(u(i)) = (1.0 + tilt * w) / m_;
      x(c(i)) = 1.0 / m_;
      if (has_down_) x(d(i)) = kappa_ * (1.0 - tilt * w) / m_;
    }
    return x;
  }

  double objective(const Eigen::VectorXd& x) const {
    double f = 0.0;
    for (int i = 0; i < m_; ++i) f += comm(x(u(i)) * l_, gains_.uplink[i]);
    return f;
  }

  double cloudlet(const Eigen::VectorXd& x) const {
    double q = 0.0;
    for (int i = 0; i < m_; ++i) {
      const double bits = x(c(i)) * l_;
      q += comp_coef_ * bits * bits * bits;
      if (has_down_) q += comm(x(d(i)) * l_, gains_.downlink[i]);
    }
    return q;
  }

  /// Slacks of every inequality; the point is strictly feasible when all are positive.
  Eigen::VectorXd slacks(const Eigen::VectorXd& x) const {
    Eigen::VectorXd g(constraint_count());
    int k = 0;
    for (int j = 0; j < size(); ++j) g(k++) = x(j);
    double pu = 0.0, pc = 0.0, pd = 0.0;
    for (int i = 0; i + 1 < m_; ++i) {
      pu += x(u(i));
      pc += x(c(i));
      g(k++) = pu - pc;
      if (has_down_) {
        pd += x(d(i));
        g(k++) = kappa_ * pc - pd;
      }
    }
    g(k++) = 1.0 - cloudlet(x) / s_.devices.cloudlet_budget_j;
    return g;
  }

  bool strictly_feasible(const Eigen::VectorXd& x) const {
    const auto g = slacks(x);
    return g.allFinite() && (g.array() > 0.0).all();
  }

  /// t * f / f_scale - sum log(slack), with gradient and Hessian.
  double barrier(const Eigen::VectorXd& x, double t, double f_scale, Eigen::VectorXd* grad,
                 Eigen::MatrixXd* hess) const {
    const int n = size();
    const Eigen::VectorXd g = slacks(x);
    double phi = t * objective(x) / f_scale;
    for (Eigen::Index k = 0; k < g.size(); ++k) phi -= std::log(g(k));
    if (!grad) return phi;

    grad->setZero(n);
    hess->setZero(n, n);
    const double ln2 = std::numbers::ln2;
    const double noise = s_.channel.noise_psd_w_hz;
    for (int i = 0; i < m_; ++i) {
      const double first = noise * ln2 / gains_.uplink[i] * std::exp2(x(u(i)) * l_ / bd_);
      (*grad)(u(i)) += t / f_scale * l_ * first;
      (*hess)(u(i), u(i)) += t / f_scale * l_ * l_ * first * ln2 / bd_;
    }

    int k = 0;
    for (int j = 0; j < n; ++j, ++k) {
      (*grad)(j) -= 1.0 / g(k);
      (*hess)(j, j) += 1.0 / (g(k) * g(k));
    }
    // Prefix constraints a^T x > 0.
    Eigen::VectorXd a_up = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd a_dn = Eigen::VectorXd::Zero(n);
    for (int i = 0; i + 1 < m_; ++i) {
      a_up(u(i)) = 1.0;
      a_up(c(i)) = -1.0;
      *grad -= a_up / g(k);
      hess->noalias() += a_up * a_up.transpose() / (g(k) * g(k));
      ++k;
      if (has_down_) {
        a_dn(c(i)) = kappa_;
        a_dn(d(i)) = -1.0;
        *grad -= a_dn / g(k);
        hess->noalias() += a_dn * a_dn.transpose() / (g(k) * g(k));
        ++k;
      }
    }
    // Budget 1 - Q(x)/E0 > 0 with Q convex and separable.
    const double e0 = s_.devices.cloudlet_budget_j;
    const double gb = g(k);
    Eigen::VectorXd dq = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd d2q = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < m_; ++i) {
      const double bits = x(c(i)) * l_;
      dq(c(i)) = l_ * 3.0 * comp_coef_ * bits * bits;
      d2q(c(i)) = l_ * l_ * 6.0 * comp_coef_ * bits;
      if (has_down_) {
        const double first = noise * ln2 / gains_.downlink[i] * std::exp2(x(d(i)) * l_ / bd_);
        dq(d(i)) = l_ * first;
        d2q(d(i)) = l_ * l_ * first * ln2 / bd_;
      }
    }
    *grad += dq / (e0 * gb);
    hess->noalias() += dq * dq.transpose() / (e0 * e0 * gb * gb);
    hess->diagonal() += d2q / (e0 * gb);
    return phi;
  }

  BitAllocation to_allocation(const Eigen::VectorXd& x) const {
    BitAllocation a;
    a.uplink.resize(static_cast<std::size_t>(m_));
    a.compute.resize(static_cast<std::size_t>(m_));
    a.downlink.assign(static_cast<std::size_t>(m_), 0.0);
    for (int i = 0; i < m_; ++i) {
      const auto k = static_cast<std::size_t>(i);
      a.uplink[k] = std::max(x(u(i)), 0.0) * l_;
      a.compute[k] = std::max(x(c(i)), 0.0) * l_;
      if (has_down_) a.downlink[k] = std::max(x(d(i)), 0.0) * l_;
    }
    auto rescale = [](std::vector<double>& v, double total) {
      double sum = 0.0;
      for (double b : v) sum += b;
      if (sum > 0.0) {
        for (double& b : v) b *= total / sum;
      }
    };
    rescale(a.uplink, l_);
    rescale(a.compute, l_);
    rescale(a.downlink, kappa_ * l_);
    return a;
  }

 private:
  double comm(double bits, double gain) const {
    return comm_energy(bits, gain, s_.channel.bandwidth_hz, s_.timing.slot_s, s_.channel.noise_psd_w_hz);
  }

  const Scenario& s_;
  SlotGains gains_;
  int m_;
  double kappa_;
  bool has_down_;
  double l_;
  double bd_;
  double comp_coef_ = 0.0;
};

// Equality-constrained Newton step: [H A^T; A 0] [dx; w] = [-g; 0], with H
// symmetrically scaled to unit diagonal first.
Eigen::VectorXd newton_step(const Eigen::MatrixXd& h, const Eigen::VectorXd& g, const Eigen::MatrixXd& a) {
  const Eigen::Index n = h.rows();
  const Eigen::Index p = a.rows();
  const Eigen::VectorXd scale = h.diagonal().cwiseMax(1e-300).cwiseSqrt().cwiseInverse();
  Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(n + p, n + p);
  kkt.topLeftCorner(n, n) = scale.asDiagonal() * h * scale.asDiagonal();
  kkt.topRightCorner(n, p) = scale.asDiagonal() * a.transpose();
  kkt.bottomLeftCorner(p, n) = a * scale.asDiagonal();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + p);
  rhs.head(n) = -scale.cwiseProduct(g);
  const Eigen::VectorXd sol = kkt.partialPivLu().solve(rhs);
  return scale.cwiseProduct(sol.head(n));
}

}  // namespace

OracleResult primal_descent(const Scenario& s, const BarrierConfig& cfg) {
  const int m = s.usable_slots();
  if (m < 1) throw std::invalid_argument("primal_descent: at least one usable slot required");
  if (m == 1) {
    const double l = s.application.input_bits;
    OracleResult r;
    r.allocation = {{l}, {l}, {s.application.output_ratio * l}};
    const auto rep = evaluate(s, r.allocation);
    if (rep.budget_residual_j > 0.0) throw InfeasibleInstance("primal_descent: forced schedule exceeds budget");
    r.objective_j = rep.mobile_uplink_total_j;
    return r;
  }

  const BarrierProblem prob(s);
  Eigen::VectorXd x;
  double tilt = cfg.start_tilt;
  for (int attempt = 0; attempt < 40; ++attempt, tilt *= 0.5) {
    x = prob.tilted_start(tilt);
    if (prob.strictly_feasible(x)) break;
    x.resize(0);
  }
  if (x.size() == 0) throw InfeasibleInstance("primal_descent: no strictly feasible start");

  const Eigen::MatrixXd a = prob.equalities();
  const double f_scale = std::max(prob.objective(x), std::numeric_limits<double>::min());
  const double constraints = prob.constraint_count();
  Eigen::VectorXd grad;
  Eigen::MatrixXd hess;
  for (double t = 1.0;; t *= cfg.growth) {
    for (int it = 0; it < cfg.max_newton_per_center; ++it) {
      const double phi = prob.barrier(x, t, f_scale, &grad, &hess);
      const Eigen::VectorXd dx = newton_step(hess, grad, a);
      const double decrement = -grad.dot(dx);
      if (!(decrement > 1e-12)) break;
      double step = 1.0;
      bool moved = false;
      for (int ls = 0; ls < 80; ++ls, step *= 0.5) {
        const Eigen::VectorXd trial = x + step * dx;
        if (!prob.strictly_feasible(trial)) continue;
        if (prob.barrier(trial, t, f_scale, nullptr, nullptr) <= phi - 0.25 * step * decrement) {
          x = trial;
          moved = true;
          break;
        }
      }
      if (!moved) break;
    }
    // Suboptimality of a central point is at most constraints / t in scaled units.
    const double f = prob.objective(x) / f_scale;
    if (constraints / t <= 0.1 * cfg.rel_tol * f || t > 1e16) break;
  }

  OracleResult r;
  r.allocation = prob.to_allocation(x);
  r.objective_j = evaluate(s, r.allocation).mobile_uplink_total_j;
  return r;
}

}  // namespace uav_offload::oracle
