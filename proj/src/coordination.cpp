#include "dvpp/coordination.hpp"

#include <algorithm>
#include <cmath>

namespace dvpp::coord {

tf::Rational DvppSpec::desired_response() const {
  // droop_d + inertia_h s / (1 + tau s)
  //   = (droop_d + (droop_d tau + inertia_h) s) / (1 + tau s)
  return {{droop_d, droop_d * filter_tau_s + inertia_h}, {1.0, filter_tau_s}};
}

void DvppSpec::validate() const {
  if (droop_d < 0.0) throw std::invalid_argument("droop must be >= 0");
  if (inertia_h < 0.0) throw std::invalid_argument("inertia must be >= 0");
  if (!(filter_tau_s > 0.0))
    throw std::invalid_argument("filter tau must be > 0");
}

namespace {

// Exact-sum weights: the last positive entry absorbs the rounding residue so
// the weights add to 1 bit-exactly.
std::vector<double> headroom_weights(const std::vector<double>& headroom) {
  double total = 0.0;
  for (double h : headroom) total += h;
  std::vector<double> w(headroom.size(), 0.0);
  if (total <= 0.0) return w;
  int last_pos = -1;
  for (size_t i = 0; i < headroom.size(); ++i)
    if (headroom[i] > 0.0) last_pos = static_cast<int>(i);
  double acc = 0.0;
  for (size_t i = 0; i < headroom.size(); ++i) {
    if (static_cast<int>(i) == last_pos) {
      w[i] = 1.0 - acc;
    } else if (headroom[i] > 0.0) {
      w[i] = headroom[i] / total;
      acc += w[i];
    }
  }
  return w;
}

tf::Rational pool_filter(Pool pool, double split_tau, double weight) {
  switch (pool) {
    case Pool::single:
      return tf::Rational::constant(weight);
    case Pool::slow:
      // weight / (1 + T s)
      return {{weight}, {1.0, split_tau}};
    case Pool::fast:
      // weight T s / (1 + T s)
      return {{0.0, weight * split_tau}, {1.0, split_tau}};
  }
  return tf::Rational::constant(weight);
}

FactorDesign single_pool_design(const std::vector<CandidateUnit>& units) {
  std::vector<double> hr;
  hr.reserve(units.size());
  for (const auto& u : units) hr.push_back(std::max(0.0, u.headroom_up_mw));
  auto w = headroom_weights(hr);
  FactorDesign d;
  d.split_tau_s = 0.0;
  for (size_t i = 0; i < units.size(); ++i) {
    ParticipationFactor f;
    f.unit_id = units[i].id;
    f.static_weight = w[i];
    f.pool = Pool::single;
    f.filter = tf::Rational::constant(w[i]);
    f.headroom_mw = hr[i];
    f.lag_tau_s = units[i].lag_tau_s;
    d.factors.push_back(std::move(f));
  }
  return d;
}

}  // namespace

FactorDesign design_participation(const std::vector<CandidateUnit>& units,
                                  const DvppSpec& spec,
                                  const DesignOptions& opts) {
  spec.validate();
  if (units.empty()) throw NoHeadroomError("no units to coordinate");
  double total_headroom = 0.0;
  for (const auto& u : units) total_headroom += std::max(0.0, u.headroom_up_mw);
  if (total_headroom <= 0.0)
    throw NoHeadroomError("pool has no upward headroom to distribute");
  if (units.size() == 1) {
    FactorDesign d = single_pool_design(units);
    d.factors[0].filter = tf::Rational::constant(1.0);
    d.factors[0].static_weight = 1.0;
    return d;
  }

  // Classify by tracking constant: a forced split constant separates at
  // tau = T; otherwise split at the widest log-gap if it is wide enough.
  std::vector<size_t> order(units.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return units[a].lag_tau_s < units[b].lag_tau_s;
  });

  double split_tau = 0.0;
  std::vector<Pool> pool_of(units.size(), Pool::single);
  if (opts.split_tau_s > 0.0) {
    split_tau = opts.split_tau_s;
    for (size_t i = 0; i < units.size(); ++i)
      pool_of[i] = units[i].lag_tau_s <= split_tau ? Pool::fast : Pool::slow;
  } else {
    double best_ratio = 0.0;
    size_t best_after = 0;  // slow pool starts at order[best_after + 1]
    for (size_t k = 0; k + 1 < order.size(); ++k) {
      double lo = std::max(units[order[k]].lag_tau_s, 1e-9);
      double hi = std::max(units[order[k + 1]].lag_tau_s, 1e-9);
      double ratio = hi / lo;
      if (ratio > best_ratio) {
        best_ratio = ratio;
        best_after = k;
      }
    }
    if (best_ratio >= opts.pool_gap_ratio) {
      double tau_fast = units[order[best_after]].lag_tau_s;
      double tau_slow = units[order[best_after + 1]].lag_tau_s;
      split_tau = std::sqrt(std::max(tau_fast, 1e-9) * tau_slow);
      for (size_t k = 0; k < order.size(); ++k)
        pool_of[order[k]] = (k <= best_after) ? Pool::fast : Pool::slow;
    }
  }

  if (split_tau <= 0.0) return single_pool_design(units);

  // Weight each pool internally by headroom.
  std::vector<double> hr_fast, hr_slow;
  for (size_t i = 0; i < units.size(); ++i) {
    double h = std::max(0.0, units[i].headroom_up_mw);
    (pool_of[i] == Pool::fast ? hr_fast : hr_slow).push_back(h);
  }
  auto sum = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  };
  // A pool with zero capability cannot hold its share of the response:
  // fall back to static weights (flagged: bandwidth separation is lost).
  if (hr_fast.empty() || hr_slow.empty() || sum(hr_fast) <= 0.0 ||
      sum(hr_slow) <= 0.0) {
    FactorDesign d = single_pool_design(units);
    d.degraded = true;
    d.warning =
        "pool split impossible (a pool has no capacity); using static weights";
    return d;
  }
  auto w_fast = headroom_weights(hr_fast);
  auto w_slow = headroom_weights(hr_slow);

  FactorDesign d;
  d.split_tau_s = split_tau;
  size_t i_fast = 0, i_slow = 0;
  for (size_t i = 0; i < units.size(); ++i) {
    ParticipationFactor f;
    f.unit_id = units[i].id;
    f.pool = pool_of[i];
    f.headroom_mw = std::max(0.0, units[i].headroom_up_mw);
    f.lag_tau_s = units[i].lag_tau_s;
    f.static_weight =
        (pool_of[i] == Pool::fast) ? w_fast[i_fast++] : w_slow[i_slow++];
    f.filter = pool_filter(f.pool, split_tau, f.static_weight);
    d.factors.push_back(std::move(f));
  }
  return d;
}

FactorDesign renormalize_on_failure(
    const FactorDesign& design, const std::string& failed_unit,
    const std::map<std::string, double>* current_headroom_mw) {
  int failed_idx = -1;
  for (size_t i = 0; i < design.factors.size(); ++i)
    if (design.factors[i].unit_id == failed_unit) failed_idx = static_cast<int>(i);
  if (failed_idx < 0)
    throw std::invalid_argument("unknown unit '" + failed_unit + "'");
  if (design.factors.size() <= 1)
    throw AllUnitsFailedError("no surviving units after failure of '" +
                              failed_unit + "'");

  const Pool failed_pool = design.factors[failed_idx].pool;
  auto headroom_of = [&](const ParticipationFactor& f) {
    if (current_headroom_mw) {
      auto it = current_headroom_mw->find(f.unit_id);
      if (it != current_headroom_mw->end()) return std::max(0.0, it->second);
    }
    return f.headroom_mw;
  };

  // Survivors, preserving order.
  std::vector<ParticipationFactor> survivors;
  for (size_t i = 0; i < design.factors.size(); ++i)
    if (static_cast<int>(i) != failed_idx) survivors.push_back(design.factors[i]);

  bool pool_survives = false;
  for (const auto& f : survivors)
    if (f.pool == failed_pool && headroom_of(f) > 0.0) pool_survives = true;

  FactorDesign out;
  out.split_tau_s = design.split_tau_s;
  out.degraded = design.degraded;
  out.warning = design.warning;

  if (failed_pool == Pool::single || !pool_survives) {
    // Either there were no pools to begin with, or the failed unit's pool is
    // gone: redistribute across everything that is left, statically. The
    // survivors cannot honour the original bandwidth split, so flag it.
    std::vector<double> hr;
    for (const auto& f : survivors) hr.push_back(headroom_of(f));
    auto w = headroom_weights(hr);
    double total = 0.0;
    for (double x : hr) total += x;
    if (total <= 0.0)
      throw AllUnitsFailedError("survivors have no headroom after failure of '" +
                                failed_unit + "'");
    out.split_tau_s = 0.0;
    for (size_t i = 0; i < survivors.size(); ++i) {
      ParticipationFactor f = survivors[i];
      f.pool = Pool::single;
      f.static_weight = w[i];
      f.filter = tf::Rational::constant(w[i]);
      f.headroom_mw = hr[i];
      out.factors.push_back(std::move(f));
    }
    if (failed_pool != Pool::single) {
      out.degraded = true;
      out.warning = "pool of failed unit '" + failed_unit +
                    "' emptied; design degraded to static weights across "
                    "pools (bandwidth split no longer honoured)";
    }
    return out;
  }

  // Intra-pool redistribution: recompute that pool's weights from the
  // surviving members' headroom; the other pool is untouched.
  std::vector<double> hr;
  for (const auto& f : survivors)
    if (f.pool == failed_pool) hr.push_back(headroom_of(f));
  auto w = headroom_weights(hr);
  size_t k = 0;
  for (auto& f : survivors) {
    if (f.pool == failed_pool) {
      f.static_weight = w[k];
      f.headroom_mw = hr[k];
      f.filter = pool_filter(f.pool, design.split_tau_s, f.static_weight);
      ++k;
    }
    out.factors.push_back(f);
  }
  return out;
}

LocalController make_local_controller(const ParticipationFactor& factor,
                                      const DvppSpec& spec,
                                      double unit_lag_tau_s, double dt,
                                      const DesignOptions& opts) {
  LocalController c;
  c.unit_id = factor.unit_id;
  if (opts.input_smooth_tau_s > 0.0 && dt > 0.0) {
    // Exact pole mapping: with the broadcast held constant between updates
    // the discrete smoother reproduces the continuous one sample for sample,
    // so refining the device step does not move the smoothed signal.
    c.input_smooth_alpha = 1.0 - std::exp(-dt / opts.input_smooth_tau_s);
  }
  if (spec.droop_d == 0.0 && spec.inertia_h == 0.0) {
    c.k = tf::Rational::constant(0.0);
    c.filt = tf::DiscreteFilter::bilinear(c.k, dt);
    return c;
  }
  // K_i = m_i C_des / G_i with the nominal tracking model G_i = 1/(1+tau s).
  auto build = [&](double w_aug) {
    tf::Rational k = factor.filter * spec.desired_response();
    k.num = tf::mul(k.num, {1.0, unit_lag_tau_s});
    k = k.normalized();
    // Properness guard: bring the relative degree back to >= 0 with poles
    // far above the unit's own bandwidth.
    while (k.relative_degree() < 0) {
      k.den = tf::mul(k.den, {1.0, 1.0 / w_aug});
      k = k.normalized();
    }
    return k;
  };
  double w_aug = opts.aug_pole_min_rad_s;
  if (unit_lag_tau_s > 0.0) w_aug = std::max(w_aug, 10.0 / unit_lag_tau_s);
  c.k = build(w_aug);
  // The realised filter slews the augmentation poles to what the sample rate
  // can represent: beyond half the bilinear corner 2/dt they would map to
  // negative z-poles and ring at the Nyquist rate.  The slewed poles stay far
  // above the service band, so only the sub-centisecond tail differs.
  c.filt = tf::DiscreteFilter::bilinear(build(std::min(w_aug, 0.5 / dt)), dt);
  return c;
}

double local_control_step(LocalController& c, const BroadcastSignal& b,
                          double headroom_up_pu, double headroom_down_pu) {
  if (b.staleness_s > c.stale_timeout_s) {
    // Measurement too old: hold the last action rather than act on it.
    c.stale = true;
    return c.last_output_pu;
  }
  c.stale = false;
  const double u_raw = -b.delta_f_hz / c.f_nominal_hz;
  c.u_smooth += c.input_smooth_alpha * (u_raw - c.u_smooth);
  const double u = c.u_smooth;
  // The filter state evolves linearly - it is stable with finite static gain,
  // so nothing winds up - and only the action sent to the device is clamped.
  // Feeding the clamped value back into the recursion would corrupt the
  // state: these compensators carry a lead whose feedthrough dwarfs the
  // static gain, and a rewritten history swings the next outputs negative.
  const double y_free = c.filt.step(u);
  const double y = std::clamp(y_free, -std::max(0.0, headroom_down_pu),
                              std::max(0.0, headroom_up_pu));
  c.saturated = (y != y_free);
  c.last_output_pu = y;
  return y;
}

AggregateFit evaluate_aggregate(const std::vector<ParticipationFactor>& factors,
                                const DvppSpec& spec,
                                const std::vector<LocalController>& controllers,
                                double omega_min, double omega_max,
                                int n_points) {
  AggregateFit fit;
  fit.profile.reserve(n_points);
  const tf::Rational c_des = spec.desired_response();
  const bool zero_spec = (spec.droop_d == 0.0 && spec.inertia_h == 0.0);
  for (int k = 0; k < n_points; ++k) {
    double t = (n_points == 1) ? 0.0 : static_cast<double>(k) / (n_points - 1);
    double omega = omega_min * std::pow(omega_max / omega_min, t);
    if (zero_spec) {
      fit.profile.emplace_back(omega, 0.0);
      continue;
    }
    tf::Complex agg(0.0, 0.0);
    for (size_t i = 0; i < controllers.size(); ++i) {
      tf::Complex g =
          tf::Rational::lag(factors[i].lag_tau_s).at_jomega(omega);
      agg += controllers[i].k.at_jomega(omega) * g;
    }
    tf::Complex c = c_des.at_jomega(omega);
    double err = std::abs(agg - c) / std::abs(c);
    fit.profile.emplace_back(omega, err);
    fit.max_rel_error = std::max(fit.max_rel_error, err);
  }
  return fit;
}

void LayerSchedule::validate() const {
  const double p[4] = {device_s, freq_service_s, redispatch_s, market_s};
  for (double v : p)
    if (!(v > 0.0)) throw std::invalid_argument("layer periods must be > 0");
  for (int i = 0; i + 1 < 4; ++i) {
    if (!(p[i + 1] > p[i]))
      throw std::invalid_argument("layer periods must strictly increase");
    if (p[i + 1] / p[i] < 10.0 - 1e-9)
      throw std::invalid_argument("adjacent layer periods must differ >= 10x");
  }
}

LayerSchedule hierarchical_layers() {
  LayerSchedule s;
  s.validate();
  return s;
}

}  // namespace dvpp::coord
