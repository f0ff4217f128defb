//! One-zone building thermodynamics with exact event detection.
//!
//! The zone follows the first-order balance `C dT/dt + K (T - T_o) = u * Qh`.
//! For constant outdoor temperature the solution is a single exponential and
//! events (threshold crossings) are located analytically. For time-varying
//! weather the integrator freezes `T_o` per step, applies the exact one-step
//! exponential update, and localizes crossings by bisection. That scheme is
//! unconditionally stable and collapses to the analytic solution in the
//! constant-weather limit.

use crate::error::{Error, Result};
use crate::smdp::{accumulate_reward, RewardWeights, SystemState, ThresholdAction, Transition};

/// Thermal parameters of the zone.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BuildingParams {
    /// Heat capacity C, J/K.
    pub heat_capacity_j_per_k: f64,
    /// Thermal conductance K, W/K.
    pub conductance_w_per_k: f64,
    /// Heater power Qh, W.
    pub heater_power_w: f64,
}

impl BuildingParams {
    pub fn new(heat_capacity_j_per_k: f64, conductance_w_per_k: f64, heater_power_w: f64) -> Result<Self> {
        if !(heat_capacity_j_per_k > 0.0 && conductance_w_per_k > 0.0 && heater_power_w > 0.0) {
            return Err(Error::InvalidParams(
                "heat capacity, conductance and heater power must all be positive".into(),
            ));
        }
        Ok(Self {
            heat_capacity_j_per_k,
            conductance_w_per_k,
            heater_power_w,
        })
    }

    /// C = 2000 kJ/K, K = 325 W/K, Qh = 13 kW.
    pub fn default_linear() -> Self {
        Self {
            heat_capacity_j_per_k: 2.0e6,
            conductance_w_per_k: 325.0,
            heater_power_w: 13.0e3,
        }
    }

    /// Time constant C/K in seconds.
    pub fn time_constant_s(&self) -> f64 {
        self.heat_capacity_j_per_k / self.conductance_w_per_k
    }

    /// Temperature rise Qh/K above outdoor when the heater runs forever.
    pub fn heater_lift_k(&self) -> f64 {
        self.heater_power_w / self.conductance_w_per_k
    }

    /// Steady-state temperature for the given heater status.
    pub fn asymptote_c(&self, t_out_c: f64, heater_on: bool) -> f64 {
        if heater_on {
            t_out_c + self.heater_lift_k()
        } else {
            t_out_c
        }
    }
}

/// Periodic outdoor-temperature trace with piecewise-linear interpolation.
#[derive(Debug, Clone, PartialEq)]
pub struct WeatherTrace {
    samples: Vec<(f64, f64)>,
    period_s: f64,
}

impl WeatherTrace {
    /// Timestamps must be strictly increasing and start at a finite value.
    /// Past the last sample the trace wraps periodically.
    pub fn new(samples: Vec<(f64, f64)>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::InvalidParams("weather trace needs at least two samples".into()));
        }
        for w in samples.windows(2) {
            if !(w[1].0 > w[0].0) {
                return Err(Error::InvalidParams(format!(
                    "weather trace timestamps must be strictly increasing (at t={})",
                    w[1].0
                )));
            }
        }
        for &(t, v) in &samples {
            if !t.is_finite() || !v.is_finite() {
                return Err(Error::NonFinite(format!("weather trace sample ({t}, {v})")));
            }
        }
        // Wrap period: one inter-sample gap past the last sample back to the first.
        let first = samples[0].0;
        let last = samples[samples.len() - 1].0;
        let mean_gap = (last - first) / (samples.len() - 1) as f64;
        let period_s = last - first + mean_gap;
        Ok(Self { samples, period_s })
    }

    pub fn t_out(&self, t_s: f64) -> f64 {
        let first = self.samples[0].0;
        let mut t = (t_s - first).rem_euclid(self.period_s) + first;
        let last = self.samples[self.samples.len() - 1].0;
        if t > last {
            // Inside the wrap gap: interpolate last -> first (shifted by the period).
            let (t0, v0) = self.samples[self.samples.len() - 1];
            let (t1, v1) = (first + self.period_s, self.samples[0].1);
            let f = (t - t0) / (t1 - t0);
            return v0 + f * (v1 - v0);
        }
        let idx = self
            .samples
            .partition_point(|&(ts, _)| ts <= t)
            .saturating_sub(1);
        let (t0, v0) = self.samples[idx];
        if idx + 1 == self.samples.len() {
            return v0;
        }
        let (t1, v1) = self.samples[idx + 1];
        t = t.clamp(t0, t1);
        v0 + (t - t0) / (t1 - t0) * (v1 - v0)
    }

    pub fn bounds(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &(_, v) in &self.samples {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        (lo, hi)
    }

    pub fn samples(&self) -> &[(f64, f64)] {
        &self.samples
    }
}

/// Outdoor temperature model.
#[derive(Debug, Clone, PartialEq)]
pub enum WeatherModel {
    Constant(f64),
    Sinusoid {
        mean_c: f64,
        amplitude_c: f64,
        period_s: f64,
        phase_s: f64,
    },
    Trace(WeatherTrace),
}

impl WeatherModel {
    pub fn sinusoid(mean_c: f64, amplitude_c: f64, period_s: f64, phase_s: f64) -> Result<Self> {
        if !(period_s > 0.0) {
            return Err(Error::InvalidParams("sinusoid period must be positive".into()));
        }
        Ok(WeatherModel::Sinusoid {
            mean_c,
            amplitude_c,
            period_s,
            phase_s,
        })
    }

    pub fn t_out(&self, t_s: f64) -> f64 {
        match self {
            WeatherModel::Constant(v) => *v,
            WeatherModel::Sinusoid {
                mean_c,
                amplitude_c,
                period_s,
                phase_s,
            } => mean_c + amplitude_c * (2.0 * std::f64::consts::PI * (t_s - phase_s) / period_s).sin(),
            WeatherModel::Trace(tr) => tr.t_out(t_s),
        }
    }

    /// (min, max) outdoor temperature over all time.
    pub fn bounds(&self) -> (f64, f64) {
        match self {
            WeatherModel::Constant(v) => (*v, *v),
            WeatherModel::Sinusoid {
                mean_c, amplitude_c, ..
            } => (mean_c - amplitude_c.abs(), mean_c + amplitude_c.abs()),
            WeatherModel::Trace(tr) => tr.bounds(),
        }
    }

    pub fn constant_value(&self) -> Option<f64> {
        match self {
            WeatherModel::Constant(v) => Some(*v),
            _ => None,
        }
    }
}

/// Integration and event-detection options.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimOptions {
    /// Integrator step for time-varying weather, seconds.
    pub step_s: f64,
    /// Bisection time tolerance for crossing localization, seconds.
    pub event_tol_s: f64,
    /// Expected |T_in - threshold| at a localized event, degrees C.
    pub event_temp_tol_c: f64,
    /// Transitions longer than this end as timeouts (no switch).
    pub max_dwell_s: f64,
    /// Minimum transition duration; bounds the delta/dwell term in learning.
    pub min_dwell_s: f64,
    /// Force the numerical integrator even for constant weather.
    pub force_numeric: bool,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            step_s: 10.0,
            event_tol_s: 0.1,
            event_temp_tol_c: 1e-3,
            max_dwell_s: 24.0 * 3600.0,
            min_dwell_s: 60.0,
            force_numeric: false,
        }
    }
}

/// Exact solution of the zone temperature after `dt` seconds of constant
/// outdoor temperature and heater status.
pub fn closed_form_temperature(
    bp: &BuildingParams,
    t0_c: f64,
    t_out_c: f64,
    heater_on: bool,
    dt_s: f64,
) -> f64 {
    let t_inf = bp.asymptote_c(t_out_c, heater_on);
    t_inf + (t0_c - t_inf) * (-dt_s / bp.time_constant_s()).exp()
}

/// The threshold lies on the wrong side of, or beyond, the asymptote.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Unreachable;

/// Smallest `dt > 0` with `closed_form_temperature(..) == t_th_c`, for
/// constant weather.
pub fn time_to_threshold(
    bp: &BuildingParams,
    t0_c: f64,
    t_out_c: f64,
    heater_on: bool,
    t_th_c: f64,
) -> std::result::Result<f64, Unreachable> {
    let t_inf = bp.asymptote_c(t_out_c, heater_on);
    let num = t_inf - t0_c;
    let den = t_inf - t_th_c;
    // Reachable iff t_th is strictly between t0 and the asymptote.
    if num == 0.0 || den == 0.0 || num.signum() != den.signum() || (num / den) <= 1.0 {
        return Err(Unreachable);
    }
    Ok(bp.time_constant_s() * (num / den).ln())
}

/// Exact integral of `(T(t) - t_d)^2` over `[0, dt]` where `T(t)` relaxes
/// exponentially from `t0` toward `t_inf` with time constant `tau`.
pub(crate) fn comfort_integral_exact(t0: f64, t_inf: f64, t_d: f64, tau: f64, dt: f64) -> f64 {
    let d = t_inf - t_d;
    let a = t0 - t_inf;
    let e = (-dt / tau).exp();
    d * d * dt + 2.0 * d * a * tau * (1.0 - e) + a * a * (tau / 2.0) * (1.0 - e * e)
}

fn crossed(t_in: f64, threshold: f64, heater_on: bool) -> bool {
    if heater_on {
        t_in >= threshold
    } else {
        t_in <= threshold
    }
}

/// Advance the state with the current heater status held fixed until the
/// indoor temperature first reaches the threshold, then flip the heater.
///
/// The crossing time is clamped up to `min_dwell_s` (a switch already due at
/// decision time still waits out the minimum dwell). If no crossing occurs
/// within `max_dwell_s` the transition ends as a timeout with no switch.
pub fn step_to_event(
    bp: &BuildingParams,
    weather: &WeatherModel,
    s: &SystemState,
    a: &ThresholdAction,
    rw: &RewardWeights,
    opts: &SimOptions,
) -> Result<Transition> {
    if !s.t_in_c.is_finite() || !a.value_c.is_finite() {
        return Err(Error::NonFinite(format!(
            "state T_in = {}, action = {}",
            s.t_in_c, a.value_c
        )));
    }
    match weather.constant_value() {
        Some(t_out) if !opts.force_numeric => step_analytic(bp, t_out, s, a, rw, opts),
        _ => step_numeric(bp, weather, s, a, rw, opts),
    }
}

fn step_analytic(
    bp: &BuildingParams,
    t_out: f64,
    s: &SystemState,
    a: &ThresholdAction,
    rw: &RewardWeights,
    opts: &SimOptions,
) -> Result<Transition> {
    let tau = bp.time_constant_s();
    let t_inf = bp.asymptote_c(t_out, s.heater_on);

    let crossing = if crossed(s.t_in_c, a.value_c, s.heater_on) {
        Some(0.0)
    } else {
        time_to_threshold(bp, s.t_in_c, t_out, s.heater_on, a.value_c).ok()
    };

    let (dwell, switched) = match crossing {
        Some(tc) if tc <= opts.max_dwell_s => (tc.max(opts.min_dwell_s), true),
        _ => (opts.max_dwell_s, false),
    };

    let t_end = closed_form_temperature(bp, s.t_in_c, t_out, s.heater_on, dwell);
    let energy = if s.heater_on { rw.r_energy_per_s * dwell } else { 0.0 };
    let comfort =
        rw.r_comfort_per_k2_s * comfort_integral_exact(s.t_in_c, t_inf, rw.t_desired_c, tau, dwell);
    let switch_cost = if switched { rw.r_switch } else { 0.0 };

    let next = SystemState {
        t_in_c: t_end,
        t_out_c: t_out,
        heater_on: if switched { !s.heater_on } else { s.heater_on },
        t_s: s.t_s + dwell,
    };
    Ok(Transition {
        state: *s,
        action: *a,
        reward: energy + comfort + switch_cost,
        dwell_s: dwell,
        next,
        timeout: !switched,
    })
}

fn step_numeric(
    bp: &BuildingParams,
    weather: &WeatherModel,
    s: &SystemState,
    a: &ThresholdAction,
    rw: &RewardWeights,
    opts: &SimOptions,
) -> Result<Transition> {
    let tau = bp.time_constant_s();
    let mut t_rel = 0.0_f64;
    let mut t_in = s.t_in_c;
    // Sampled (t, T) polyline for the reward quadrature.
    let mut segment: Vec<(f64, f64)> = Vec::with_capacity(64);
    segment.push((0.0, t_in));

    let already = crossed(t_in, a.value_c, s.heater_on);
    let mut crossing_at: Option<f64> = if already { Some(0.0) } else { None };

    loop {
        // Flip once the located crossing has aged past the minimum dwell.
        if let Some(tc) = crossing_at {
            let event_t = tc.max(opts.min_dwell_s);
            if t_rel >= event_t {
                break;
            }
        }
        if t_rel >= opts.max_dwell_s {
            break;
        }
        let mut dt = opts.step_s.min(opts.max_dwell_s - t_rel);
        if let Some(tc) = crossing_at {
            // Committed switch: land exactly on the event time.
            dt = dt.min(tc.max(opts.min_dwell_s) - t_rel);
        }
        let t_out = weather.t_out(s.t_s + t_rel);
        if !t_out.is_finite() {
            return Err(Error::NonFinite(format!("T_out at t = {}", s.t_s + t_rel)));
        }
        let t_inf = bp.asymptote_c(t_out, s.heater_on);
        let one_step = |h: f64| t_inf + (t_in - t_inf) * (-h / tau).exp();
        let t_next = one_step(dt);

        if crossing_at.is_none() && crossed(t_next, a.value_c, s.heater_on) {
            // Bisect the crossing inside this step to the time tolerance.
            let (mut lo, mut hi) = (0.0_f64, dt);
            while hi - lo > opts.event_tol_s {
                let mid = 0.5 * (lo + hi);
                if crossed(one_step(mid), a.value_c, s.heater_on) {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            crossing_at = Some(t_rel + hi);
            if t_rel + hi >= opts.min_dwell_s {
                // Event lands inside this step: advance exactly to it.
                t_in = one_step(hi);
                t_rel += hi;
                segment.push((t_rel, t_in));
                break;
            }
            // Crossing before the minimum dwell: keep integrating to it.
            continue;
        }

        t_in = t_next;
        t_rel += dt;
        segment.push((t_rel, t_in));
    }

    let switched = crossing_at.is_some();
    let dwell = if switched {
        crossing_at.unwrap().max(opts.min_dwell_s)
    } else {
        opts.max_dwell_s
    };
    debug_assert!((t_rel - dwell).abs() < 1e-6 || !switched);

    let reward = accumulate_reward(&segment, s.heater_on, rw, switched);
    let next = SystemState {
        t_in_c: t_in,
        t_out_c: weather.t_out(s.t_s + dwell),
        heater_on: if switched { !s.heater_on } else { s.heater_on },
        t_s: s.t_s + dwell,
    };
    Ok(Transition {
        state: *s,
        action: *a,
        reward,
        dwell_s: dwell,
        next,
        timeout: !switched,
    })
}
