#include "uav_offload/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>

#include "uav_offload/dual_model.hpp"
#include "uav_offload/summation.hpp"

namespace uav_offload {

namespace {

std::vector<double> suffix_sums(const std::vector<double>& xs) {
  std::vector<double> out(xs.size());
  CompensatedSum acc;
  for (std::size_t i = xs.size(); i-- > 0;) {
    acc.add(xs[i]);
    out[i] = acc.value();
  }
  return out;
}

double relative_gap(double gap, double primal) {
  return gap / std::max(std::abs(primal), std::numeric_limits<double>::min());
}

}  // namespace

std::vector<double> DualState::alpha() const { return suffix_sums(a); }
std::vector<double> DualState::beta() const { return suffix_sums(b); }

bool DualState::suffix_consistent(std::span<const double> alpha_in, std::span<const double> beta_in,
                                  double rel_tol) const {
  if (alpha_in.size() != a.size() || beta_in.size() != b.size()) return false;
  const auto al = alpha();
  const auto be = beta();
  auto close = [rel_tol](double x, double y) {
    return std::abs(x - y) <= rel_tol * std::max({std::abs(x), std::abs(y), 1e-300});
  };
  for (std::size_t i = 0; i < al.size(); ++i) {
    if (!close(al[i], alpha_in[i])) return false;
    if (i + 1 < al.size() && alpha_in[i] < alpha_in[i + 1]) return false;
  }
  for (std::size_t i = 0; i < be.size(); ++i) {
    if (!close(be[i], beta_in[i])) return false;
    if (i + 1 < be.size() && beta_in[i] < beta_in[i + 1]) return false;
  }
  return true;
}

std::string_view to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::kConverged:
      return "converged";
    case SolveStatus::kIterLimit:
      return "iter_limit";
    case SolveStatus::kInfeasible:
      return "infeasible";
  }
  return "unknown";
}

double KktSummary::max_stationarity() const {
  return std::max({uplink_stationarity, compute_stationarity, downlink_stationarity});
}

Subgradients subgradients(const Scenario& s, const BitAllocation& a, double exponent_cap) {
  const auto r = evaluate(s, a, exponent_cap);
  return {r.budget_residual_j, r.causality_residuals_uplink, r.causality_residuals_downlink};
}

double dual_value(const Scenario& s, const DualState& d, const BitAllocation& a,
                  double exponent_cap) {
  const auto r = evaluate(s, a, exponent_cap);
  const auto alpha = d.alpha();
  const auto beta = d.beta();
  const double kappa = s.application.output_ratio;
  CompensatedSum g;
  g.add(r.mobile_uplink_total_j);
  g.add(d.mu * r.cloudlet_total_j);
  g.add(-d.mu * s.devices.cloudlet_budget_j);
  for (std::size_t n = 0; n < a.size(); ++n) {
    g.add(-alpha[n] * a.uplink[n]);
    g.add((alpha[n] - kappa * beta[n]) * a.compute[n]);
    g.add(beta[n] * a.downlink[n]);
  }
  return g.value();
}

BitAllocation repair_causality(const BitAllocation& a, double kappa) {
  BitAllocation out = a;
  const std::size_t m = a.size();
  if (m == 0) return out;

  CompensatedSum received;
  CompensatedSum processed;
  double carry = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    received.add(a.uplink[i]);
    const double want = a.compute[i] + carry;
    const double room = std::max(0.0, received.value() - processed.value());
    const double take = i + 1 == m ? want : std::min(want, room);
    carry = want - take;
    out.compute[i] = take;
    processed.add(take);
  }

  CompensatedSum produced;
  CompensatedSum returned;
  carry = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    produced.add(kappa * out.compute[i]);
    const double want = a.downlink[i] + carry;
    const double room = std::max(0.0, produced.value() - returned.value());
    const double take = i + 1 == m ? want : std::min(want, room);
    carry = want - take;
    out.downlink[i] = take;
    returned.add(take);
  }
  return out;
}

KktSummary kkt_residuals(const Scenario& s, const Solution& sol, const SolverConfig& cfg) {
  KktSummary k;
  const auto& alloc = sol.allocation;
  const std::size_t m = alloc.size();
  if (m == 0) return k;
  const auto gains = slot_gains(s);
  const auto alpha = sol.dual.alpha();
  const auto beta = sol.dual.beta();
  const double mu = sol.dual.mu;
  const double kappa = s.application.output_ratio;
  const double bd = s.channel.bandwidth_hz * s.timing.slot_s;
  const double n0_ln2 = s.channel.noise_psd_w_hz * std::numbers::ln2;
  const double delta = s.timing.slot_s;
  const double compute_coeff =
      3.0 * mu * s.devices.gamma_cloudlet * std::pow(s.application.cycles_per_bit, 3) / (delta * delta);
  const double active = cfg.bisection_tol_rel * s.application.input_bits;

  auto normalized = [](double residual, std::initializer_list<double> terms) {
    double scale = 0.0;
    for (double t : terms) scale = std::max(scale, std::abs(t));
    return scale > 0.0 ? std::abs(residual) / scale : 0.0;
  };

  for (std::size_t n = 0; n < m; ++n) {
    if (alloc.uplink[n] > active) {
      const double t1 = n0_ln2 / gains.uplink[n] * std::exp2(alloc.uplink[n] / bd);
      k.uplink_stationarity = std::max(
          k.uplink_stationarity,
          normalized(t1 - alpha[n] - sol.inner.lambda, {t1, alpha[n], sol.inner.lambda}));
    }
    if (alloc.compute[n] > active) {
      const double t1 = compute_coeff * alloc.compute[n] * alloc.compute[n];
      k.compute_stationarity =
          std::max(k.compute_stationarity,
                   normalized(t1 + alpha[n] - kappa * beta[n] - sol.inner.nu,
                              {t1, alpha[n], kappa * beta[n], sol.inner.nu}));
    }
    if (alloc.downlink[n] > active * std::max(kappa, 0.0)) {
      const double t1 = mu * n0_ln2 / gains.downlink[n] * std::exp2(alloc.downlink[n] / bd);
      k.downlink_stationarity =
          std::max(k.downlink_stationarity,
                   normalized(t1 + beta[n] - sol.inner.eta, {t1, beta[n], sol.inner.eta}));
    }
  }

  const auto& r = sol.report;
  k.budget_slackness_j = std::abs(mu * r.budget_residual_j);
  for (std::size_t n = 0; n < m && n < sol.dual.a.size(); ++n) {
    k.uplink_causality_slackness =
        std::max(k.uplink_causality_slackness, std::abs(sol.dual.a[n] * r.causality_residuals_uplink[n]));
    k.downlink_causality_slackness = std::max(
        k.downlink_causality_slackness, std::abs(sol.dual.b[n] * r.causality_residuals_downlink[n]));
  }
  return k;
}

namespace {

struct Recovery {
  BitAllocation allocation;
  EnergyReport report;
  double primal = 0.0;
  bool feasible = false;
};

Recovery recover(const Scenario& s, const BitAllocation& raw, const SolverConfig& cfg) {
  Recovery r;
  r.allocation = repair_causality(raw, s.application.output_ratio);
  r.report = evaluate(s, r.allocation, cfg.exponent_cap);
  r.primal = r.report.mobile_uplink_total_j;
  const double feas_bits = cfg.feas_tol_rel * s.application.input_bits;
  r.feasible = !r.report.overflow && std::isfinite(r.primal) &&
               r.report.budget_residual_j <= cfg.dual_tol * s.devices.cloudlet_budget_j &&
               r.report.max_causality_residual() <= feas_bits &&
               r.report.max_abs_totals_residual() <= feas_bits;
  return r;
}

Solution finish(const Scenario& s, const SolverConfig& cfg, Solution sol) {
  sol.report = evaluate(s, sol.allocation, cfg.exponent_cap);
  sol.primal_value_j = sol.report.mobile_uplink_total_j;
  sol.gap_j = sol.primal_value_j - sol.dual_value_j;
  sol.gap_rel = relative_gap(sol.gap_j, sol.primal_value_j);
  sol.kkt = kkt_residuals(s, sol, cfg);
  return sol;
}

// A single usable slot pins the schedule to (L, L, kappa L).
Solution solve_single_slot(const Scenario& s, const SolverConfig& cfg) {
  Solution sol;
  const double l = s.application.input_bits;
  sol.allocation = {{l}, {l}, {s.application.output_ratio * l}};
  sol.dual = {0.0, {0.0}, {0.0}};
  const auto gains = slot_gains(s);
  const double bd = s.channel.bandwidth_hz * s.timing.slot_s;
  sol.inner.lambda = s.channel.noise_psd_w_hz * std::numbers::ln2 / gains.uplink[0] * std::exp2(l / bd);
  sol.inner.nu = 0.0;
  sol.inner.eta = 0.0;
  const auto report = evaluate(s, sol.allocation, cfg.exponent_cap);
  sol.dual_value_j = report.mobile_uplink_total_j;
  sol.status = report.budget_residual_j <= 0.0 ? SolveStatus::kConverged : SolveStatus::kInfeasible;
  return finish(s, cfg, std::move(sol));
}

Solution infeasible_solution(const Scenario& s, const SolverConfig& cfg, const DualModel& model,
                             const DualModel::Evaluation& e, int iterations) {
  Solution sol;
  sol.allocation = repair_causality(e.allocation, s.application.output_ratio);
  sol.dual = model.unpack(e.x);
  sol.inner = e.inner;
  sol.dual_value_j = e.value;
  sol.iterations = iterations;
  sol.status = SolveStatus::kInfeasible;
  return finish(s, cfg, std::move(sol));
}

// Budget-slack certificate: zero multipliers, water-filled uplink and any
// causal compute/downlink schedule that fits the budget.
std::optional<Solution> try_slack_certificate(const Scenario& s, const SolverConfig& cfg,
                                              const DualModel& model) {
  Eigen::VectorXd x = model.lower_bounds();
  const auto e = model.evaluate(x);
  if (!e.finite) return std::nullopt;
  const auto rec = recover(s, e.allocation, cfg);
  if (!rec.feasible || rec.report.budget_residual_j > 0.0) return std::nullopt;
  // Dual value at mu = 0, a = b = 0 is the unconstrained uplink minimum.
  const double g0 = rec.primal;
  Solution sol;
  sol.allocation = rec.allocation;
  sol.dual = model.unpack(Eigen::VectorXd::Zero(model.dimension()));
  sol.inner = {e.inner.lambda, 0.0, 0.0};
  sol.dual_value_j = g0;
  sol.iterations = 0;
  sol.status = SolveStatus::kConverged;
  return finish(s, cfg, std::move(sol));
}

Solution run_projected_newton(const Scenario& s, const SolverConfig& cfg, const DualModel& model) {
  const int dim = model.dimension();
  const int m = model.slots();
  const Eigen::VectorXd lb = model.lower_bounds();

  Eigen::VectorXd x = Eigen::VectorXd::Zero(dim);
  x(model.mu_index()) = model.initial_mu();
  auto current = model.evaluate(x);

  Solution sol;
  std::optional<Recovery> best_primal;
  int iter = 0;
  double tau = 1e-10;
  int stalls = 0;

  std::optional<Recovery> latest;  // recovery of the current iterate
  auto accept_primal = [&](const DualModel::Evaluation& e) {
    latest = recover(s, e.allocation, cfg);
    if (latest->feasible && (!best_primal || latest->primal < best_primal->primal)) best_primal = latest;
  };
  auto gap_within = [&](double tol) {
    if (!best_primal) return false;
    return relative_gap(best_primal->primal - current.value, best_primal->primal) <= tol;
  };
  auto converged = [&]() { return gap_within(cfg.dual_tol); };
  // The gap barely sees multipliers of constraints that cost the mobile
  // almost nothing (downlink causality), so after the gap test passes Newton
  // keeps going until the stationarity residuals are small as well.
  const double polish_tol = 1e-4 * cfg.dual_tol;
  constexpr double kPolishStationarity = 1e-7;
  int polish_left = 40;

  accept_primal(current);
  auto stationarity = [&]() {
    Solution probe;
    probe.allocation = repair_causality(current.allocation, s.application.output_ratio);
    probe.dual = model.unpack(current.x);
    probe.inner = current.inner;
    probe.report = evaluate(s, probe.allocation, cfg.exponent_cap);
    return kkt_residuals(s, probe, cfg).max_stationarity();
  };
  auto polished = [&]() {
    return latest && latest->feasible &&
           std::abs(relative_gap(latest->primal - current.value, latest->primal)) <= polish_tol &&
           stationarity() <= kPolishStationarity;
  };
  while (iter < cfg.max_iters && !polished()) {
    if (converged() && polish_left-- <= 0) break;
    ++iter;
    if (current.x(model.mu_index()) > cfg.mu_cap && current.gradient(model.mu_index()) > 0.0) {
      return infeasible_solution(s, cfg, model, current, iter);
    }
    const Eigen::VectorXd& grad = current.gradient;
    const Eigen::MatrixXd hess = model.hessian(current);

    // Variables whose diagonal Newton step would cross their bound are moved
    // along the scaled gradient only, which the projection clamps to the bound.
    std::vector<Eigen::Index> free_idx;
    Eigen::VectorXd bound_step = Eigen::VectorXd::Zero(dim);
    for (Eigen::Index i = 0; i < dim; ++i) {
      if (i == model.a_index(m - 1) || i == model.b_index(m - 1)) continue;  // no effect on g
      const double curvature = -hess(i, i);
      if (!(curvature > 0.0)) continue;
      if (grad(i) <= 0.0 && current.x(i) + grad(i) / curvature <= lb(i)) {
        bound_step(i) = grad(i) / curvature;
        continue;
      }
      free_idx.push_back(i);
    }
    if (free_idx.empty() && bound_step.isZero()) break;

    const auto nf = static_cast<Eigen::Index>(free_idx.size());
    Eigen::MatrixXd a(nf, nf);
    Eigen::VectorXd rhs(nf);
    Eigen::VectorXd scale(nf);
    for (Eigen::Index i = 0; i < nf; ++i) scale(i) = std::sqrt(-hess(free_idx[i], free_idx[i]));
    for (Eigen::Index i = 0; i < nf; ++i) {
      rhs(i) = grad(free_idx[i]) / scale(i);
      for (Eigen::Index j = 0; j < nf; ++j) {
        a(i, j) = -hess(free_idx[i], free_idx[j]) / (scale(i) * scale(j));
      }
    }

    bool moved = false;
    for (int attempt = 0; attempt < 12 && !moved; ++attempt) {
      Eigen::MatrixXd reg = a;
      reg.diagonal().array() += tau;
      Eigen::LDLT<Eigen::MatrixXd> ldlt(reg);
      if (ldlt.info() != Eigen::Success) {
        tau *= 100.0;
        continue;
      }
      const Eigen::VectorXd step_scaled = ldlt.solve(rhs);
      Eigen::VectorXd dir = bound_step;
      for (Eigen::Index i = 0; i < nf; ++i) dir(free_idx[i]) = step_scaled(i) / scale(i);
      if (!dir.allFinite() || grad.dot(dir) <= 0.0) {
        tau *= 100.0;
        continue;
      }

      double t = 1.0;
      for (int ls = 0; ls < 40; ++ls, t *= 0.5) {
        const Eigen::VectorXd trial_x = (current.x + t * dir).cwiseMax(lb);
        const double predicted = grad.dot(trial_x - current.x);
        if (!(predicted > 0.0)) break;
        DualModel::Evaluation trial;
        try {
          trial = model.evaluate(trial_x);
        } catch (const BracketError&) {
          continue;
        }
        if (!trial.finite) continue;
        if (trial.value >= current.value + 1e-4 * predicted) {
          current = std::move(trial);
          moved = true;
          break;
        }
      }
      if (moved) {
        tau = std::max(tau * 0.1, 1e-12);
      } else {
        tau *= 100.0;
      }
    }
    if (!moved) {
      // Line search exhausted: the dual is flat to rounding here.
      if (++stalls >= 3) break;
      continue;
    }
    stalls = 0;
    accept_primal(current);
  }

  if (current.x(model.mu_index()) > cfg.mu_cap && current.gradient(model.mu_index()) > 0.0) {
    return infeasible_solution(s, cfg, model, current, iter);
  }

  sol.dual = model.unpack(current.x);
  sol.inner = current.inner;
  sol.dual_value_j = current.value;
  sol.iterations = iter;
  if (best_primal) {
    sol.allocation = best_primal->allocation;
  } else {
    sol.allocation = repair_causality(current.allocation, s.application.output_ratio);
  }
  sol.status = converged() ? SolveStatus::kConverged : SolveStatus::kIterLimit;
  if (sol.status == SolveStatus::kConverged) {
    // Report the multipliers that generated the certified allocation.
    sol.allocation = repair_causality(current.allocation, s.application.output_ratio);
    const auto rec = recover(s, current.allocation, cfg);
    if (!(rec.feasible &&
          relative_gap(rec.primal - current.value, rec.primal) <= cfg.dual_tol)) {
      sol.allocation = best_primal->allocation;
    }
  }
  return finish(s, cfg, std::move(sol));
}

Solution run_diminishing(const Scenario& s, const SolverConfig& cfg, const DualModel& model) {
  const int dim = model.dimension();
  const int m = model.slots();
  const Eigen::VectorXd lb = model.lower_bounds();

  Eigen::VectorXd x = Eigen::VectorXd::Zero(dim);
  x(model.mu_index()) = model.initial_mu();
  auto e = model.evaluate(x);

  // Per-block multiplier scales, taken from the starting point.
  const double mu_scale = x(model.mu_index());
  const double a_scale = std::max(std::abs(e.inner.lambda), 1e-300);
  const double b_scale = std::max(std::abs(e.inner.eta), a_scale * mu_scale);
  double mu_norm = 0.0, a_norm = 0.0, b_norm = 0.0;

  BitAllocation avg{std::vector<double>(static_cast<std::size_t>(m), 0.0),
                    std::vector<double>(static_cast<std::size_t>(m), 0.0),
                    std::vector<double>(static_cast<std::size_t>(m), 0.0)};
  double best_dual = -std::numeric_limits<double>::infinity();
  DualModel::Evaluation best_eval = e;
  std::optional<Recovery> recovered;
  SolveStatus status = SolveStatus::kIterLimit;
  int k = 0;
  for (k = 1; k <= cfg.max_iters; ++k) {
    if (e.value > best_dual) {
      best_dual = e.value;
      best_eval = e;
    }
    const double w = 1.0 / static_cast<double>(k);
    for (std::size_t n = 0; n < static_cast<std::size_t>(m); ++n) {
      avg.uplink[n] += w * (e.allocation.uplink[n] - avg.uplink[n]);
      avg.compute[n] += w * (e.allocation.compute[n] - avg.compute[n]);
      avg.downlink[n] += w * (e.allocation.downlink[n] - avg.downlink[n]);
    }
    auto rec = recover(s, avg, cfg);
    const bool ok = rec.feasible && relative_gap(rec.primal - best_dual, rec.primal) <= cfg.dual_tol;
    recovered = std::move(rec);
    if (ok) {
      status = SolveStatus::kConverged;
      break;
    }
    if (x(model.mu_index()) > cfg.mu_cap && e.gradient(model.mu_index()) > 0.0) {
      return infeasible_solution(s, cfg, model, e, k);
    }

    const Eigen::VectorXd& g = e.gradient;
    mu_norm = std::max(mu_norm, std::abs(g(model.mu_index())));
    const Eigen::VectorXd ga = g.segment(model.a_index(0), m);
    const Eigen::VectorXd gb = g.segment(model.b_index(0), m);
    a_norm = std::max(a_norm, ga.lpNorm<Eigen::Infinity>());
    b_norm = std::max(b_norm, gb.lpNorm<Eigen::Infinity>());
    const double step = cfg.step_scale / std::sqrt(static_cast<double>(k));
    if (mu_norm > 0.0) x(model.mu_index()) += step * mu_scale * g(model.mu_index()) / mu_norm;
    if (a_norm > 0.0) x.segment(model.a_index(0), m) += step * a_scale * ga / a_norm;
    if (b_norm > 0.0) x.segment(model.b_index(0), m) += step * b_scale * gb / b_norm;
    x = x.cwiseMax(lb);
    e = model.evaluate(x);
  }

  Solution sol;
  sol.allocation = recovered->allocation;
  sol.dual = model.unpack(best_eval.x);
  sol.inner = best_eval.inner;
  sol.dual_value_j = best_dual;
  sol.iterations = std::min(k, cfg.max_iters);
  sol.status = status;
  return finish(s, cfg, std::move(sol));
}

}  // namespace

Solution optimize(const Scenario& s, const SolverConfig& cfg) {
  if (auto violations = validate(s); !violations.empty()) {
    throw ScenarioValidationError(std::move(violations));
  }
  const int m = s.usable_slots();
  if (m == 1) return solve_single_slot(s, cfg);

  DualModel model(s, cfg);

  // Equal compute split already minimizes compute energy; if even that
  // overruns the budget nothing can fit.
  const auto equal = equal_allocation(s);
  const auto equal_report = evaluate(s, equal, cfg.exponent_cap);
  if (equal_report.cloudlet_compute_total_j > s.devices.cloudlet_budget_j) {
    Solution sol;
    sol.allocation = equal;
    sol.dual = model.unpack(model.lower_bounds());
    sol.dual_value_j = std::numeric_limits<double>::infinity();
    sol.status = SolveStatus::kInfeasible;
    return finish(s, cfg, std::move(sol));
  }

  if (auto cert = try_slack_certificate(s, cfg, model)) return *cert;

  if (cfg.step_rule == StepRule::kDiminishing) return run_diminishing(s, cfg, model);
  return run_projected_newton(s, cfg, model);
}

}  // namespace uav_offload
