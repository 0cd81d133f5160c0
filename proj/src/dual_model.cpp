#include "uav_offload/dual_model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace uav_offload {

namespace {

// (S^T X S)_{ij} = sum_{k <= i} sum_{l <= j} X_{kl}, S the suffix-sum operator.
Eigen::MatrixXd prefix_both(const Eigen::MatrixXd& x) {
  Eigen::MatrixXd out = x;
  for (Eigen::Index i = 1; i < out.rows(); ++i) out.row(i) += out.row(i - 1);
  for (Eigen::Index j = 1; j < out.cols(); ++j) out.col(j) += out.col(j - 1);
  return out;
}

Eigen::VectorXd prefix(const Eigen::VectorXd& v) {
  Eigen::VectorXd out = v;
  for (Eigen::Index i = 1; i < out.size(); ++i) out(i) += out(i - 1);
  return out;
}

// diag(w) - w w^T / sum(w), restricted to the active entries (w_n > 0).
Eigen::MatrixXd projected_diag(const Eigen::VectorXd& w) {
  const double total = w.sum();
  Eigen::MatrixXd j = Eigen::MatrixXd::Zero(w.size(), w.size());
  if (total <= 0.0) return j;
  j.diagonal() = w;
  j.noalias() -= w * w.transpose() / total;
  return j;
}

}  // namespace

DualModel::DualModel(const Scenario& s, const SolverConfig& cfg)
    : scenario_(s), cfg_(cfg), gains_(slot_gains(s)), slots_(s.usable_slots()) {}

Eigen::VectorXd DualModel::lower_bounds() const {
  Eigen::VectorXd lb = Eigen::VectorXd::Zero(dimension());
  lb(mu_index()) = cfg_.mu_min;
  return lb;
}

Eigen::VectorXd DualModel::project(const Eigen::VectorXd& x) const {
  return x.cwiseMax(lower_bounds());
}

DualState DualModel::unpack(const Eigen::VectorXd& x) const {
  DualState d;
  d.mu = x(mu_index());
  d.a.resize(static_cast<std::size_t>(slots_));
  d.b.resize(static_cast<std::size_t>(slots_));
  for (int n = 0; n < slots_; ++n) {
    d.a[static_cast<std::size_t>(n)] = x(a_index(n));
    d.b[static_cast<std::size_t>(n)] = x(b_index(n));
  }
  return d;
}

Eigen::VectorXd DualModel::pack(const DualState& d) const {
  Eigen::VectorXd x(dimension());
  x(mu_index()) = d.mu;
  for (int n = 0; n < slots_; ++n) {
    x(a_index(n)) = d.a[static_cast<std::size_t>(n)];
    x(b_index(n)) = d.b[static_cast<std::size_t>(n)];
  }
  return x;
}

DualModel::Evaluation DualModel::evaluate(const Eigen::VectorXd& x) const {
  const Scenario& s = scenario_;
  Evaluation e;
  e.x = x;
  e.dual = unpack(x);
  e.dual.mu = std::max(e.dual.mu, cfg_.mu_min);
  const auto alpha = e.dual.alpha();
  const auto beta = e.dual.beta();
  const double delta = s.timing.slot_s;
  const double l_total = s.application.input_bits;
  const double kappa = s.application.output_ratio;

  auto up = solve_uplink(alpha, gains_.uplink, s.channel, delta, l_total, cfg_);
  auto cp = solve_compute(e.dual.mu, alpha, beta, kappa, s.devices.gamma_cloudlet,
                          s.application.cycles_per_bit, delta, l_total, cfg_);
  auto dn = solve_downlink(e.dual.mu, beta, gains_.downlink, s.channel, delta, kappa * l_total, cfg_);
  e.allocation.uplink = std::move(up.bits);
  e.allocation.compute = std::move(cp.bits);
  e.allocation.downlink = std::move(dn.bits);
  e.inner = {up.multiplier, cp.multiplier, dn.multiplier};

  e.value = dual_value(s, e.dual, e.allocation, cfg_.exponent_cap);
  const auto sg = subgradients(s, e.allocation, cfg_.exponent_cap);
  e.gradient.resize(dimension());
  e.gradient(mu_index()) = sg.mu;
  for (int n = 0; n < slots_; ++n) {
    e.gradient(a_index(n)) = sg.a[static_cast<std::size_t>(n)];
    e.gradient(b_index(n)) = sg.b[static_cast<std::size_t>(n)];
  }
  e.finite = std::isfinite(e.value) && e.gradient.allFinite();
  return e;
}

Eigen::MatrixXd DualModel::hessian(const Evaluation& e) const {
  const Scenario& s = scenario_;
  const int m = slots_;
  const double mu = e.dual.mu;
  const double bd = s.channel.bandwidth_hz * s.timing.slot_s;
  const double kappa = s.application.output_ratio;
  const double delta = s.timing.slot_s;
  const double c3 = std::pow(s.application.cycles_per_bit, 3);
  const double k = delta * delta / (3.0 * s.devices.gamma_cloudlet * c3);
  const auto alpha = e.dual.alpha();
  const auto beta = e.dual.beta();
  const auto& alloc = e.allocation;
  // Compute slots this close to the clamp have unbounded sensitivity; leave them out.
  const double compute_floor = 1e-9 * s.application.input_bits / m;

  Eigen::VectorXd w = Eigen::VectorXd::Zero(m);   // d uplink_n / d(lambda + alpha_n)
  Eigen::VectorXd v = Eigen::VectorXd::Zero(m);   // d compute_n / d(nu + q_n)
  Eigen::VectorXd z = Eigen::VectorXd::Zero(m);   // d downlink_n / d(eta - beta_n)
  double compute_sum = 0.0;
  int downlink_active = 0;
  for (int n = 0; n < m; ++n) {
    const auto i = static_cast<std::size_t>(n);
    if (alloc.uplink[i] > 0.0) w(n) = bd / (std::numbers::ln2 * (e.inner.lambda + alpha[i]));
    if (alloc.compute[i] > compute_floor) {
      v(n) = k / (2.0 * mu * alloc.compute[i]);
      compute_sum += alloc.compute[i];
    }
    if (alloc.downlink[i] > 0.0) {
      z(n) = bd / (std::numbers::ln2 * (e.inner.eta - beta[i]));
      ++downlink_active;
    }
  }

  const Eigen::MatrixXd ju = projected_diag(w);
  const Eigen::MatrixXd jc = projected_diag(v);
  const Eigen::MatrixXd jd = projected_diag(z);

  // Sensitivities to mu with the totals held fixed.
  Eigen::VectorXd dc_dmu = Eigen::VectorXd::Zero(m);
  Eigen::VectorXd dd_dmu = Eigen::VectorXd::Zero(m);
  const double v_sum = v.sum();
  const double z_sum = z.sum();
  for (int n = 0; n < m; ++n) {
    const auto i = static_cast<std::size_t>(n);
    if (v(n) > 0.0 && v_sum > 0.0) {
      dc_dmu(n) = v(n) * compute_sum / (2.0 * mu * v_sum) - alloc.compute[i] / (2.0 * mu);
    }
    if (z(n) > 0.0 && z_sum > 0.0) {
      dd_dmu(n) = bd / (std::numbers::ln2 * mu) * (z(n) * downlink_active / z_sum - 1.0);
    }
  }

  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(dimension(), dimension());
  const Eigen::MatrixXd haa = prefix_both(-jc - ju);
  const Eigen::MatrixXd hab = prefix_both(kappa * jc);
  const Eigen::MatrixXd hbb = prefix_both(-jd - kappa * kappa * jc);
  h.block(1, 1, m, m) = haa;
  h.block(1, 1 + m, m, m) = hab;
  h.block(1 + m, 1, m, m) = hab.transpose();
  h.block(1 + m, 1 + m, m, m) = hbb;

  const Eigen::VectorXd ha_mu = prefix(dc_dmu);
  const Eigen::VectorXd hb_mu = prefix(dd_dmu - kappa * dc_dmu);
  h.block(1, 0, m, 1) = ha_mu;
  h.block(0, 1, 1, m) = ha_mu.transpose();
  h.block(1 + m, 0, m, 1) = hb_mu;
  h.block(0, 1 + m, 1, m) = hb_mu.transpose();

  double hmm = 0.0;
  for (int n = 0; n < m; ++n) {
    const auto i = static_cast<std::size_t>(n);
    const double ec_prime = alloc.compute[i] * alloc.compute[i] / k;
    const double ed_prime = s.channel.noise_psd_w_hz * std::numbers::ln2 / gains_.downlink[i] *
                            std::exp2(alloc.downlink[i] / bd);
    hmm += ec_prime * dc_dmu(n) + ed_prime * dd_dmu(n);
  }
  h(0, 0) = hmm;
  return h;
}

double DualModel::initial_mu() const {
  const Scenario& s = scenario_;
  const int m = slots_;
  const double bd = s.channel.bandwidth_hz * s.timing.slot_s;
  const double share = s.application.input_bits / m;
  double uplink_marginal = 0.0;
  for (double g : gains_.uplink) {
    uplink_marginal += s.channel.noise_psd_w_hz * std::numbers::ln2 / g * std::exp2(share / bd);
  }
  uplink_marginal /= m;
  const double delta = s.timing.slot_s;
  const double compute_marginal = 3.0 * s.devices.gamma_cloudlet *
                                  std::pow(s.application.cycles_per_bit, 3) * share * share /
                                  (delta * delta);
  const double mu = uplink_marginal / compute_marginal;
  return std::isfinite(mu) && mu > cfg_.mu_min ? mu : 1.0;
}

}  // namespace uav_offload
