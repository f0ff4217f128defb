//! Event-triggered SMDP environment semantics: reward accumulation, action
//! clamping, and the closed-loop event loop that produces transition samples.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::thermal::{step_to_event, BuildingParams, SimOptions, WeatherModel};
use crate::trace::{EventRecord, EventTrace};

pub const SECONDS_PER_HOUR: f64 = 3600.0;

/// System state at a decision epoch: `[T, T_o, h_s]` plus simulation time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemState {
    pub t_in_c: f64,
    pub t_out_c: f64,
    pub heater_on: bool,
    pub t_s: f64,
}

/// Reward weights. All three rates are penalties (non-positive).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardWeights {
    /// Cost per completed switch.
    pub r_switch: f64,
    /// Cost per second of heater-ON time.
    pub r_energy_per_s: f64,
    /// Cost per K^2 per second of deviation from the desired temperature.
    pub r_comfort_per_k2_s: f64,
    /// Desired indoor temperature, degrees C.
    pub t_desired_c: f64,
}

impl RewardWeights {
    pub fn new(r_switch: f64, r_energy_per_s: f64, r_comfort_per_k2_s: f64, t_desired_c: f64) -> Result<Self> {
        if r_switch > 0.0 || r_energy_per_s > 0.0 || r_comfort_per_k2_s > 0.0 {
            return Err(Error::InvalidParams("reward rates must be non-positive".into()));
        }
        Ok(Self {
            r_switch,
            r_energy_per_s,
            r_comfort_per_k2_s,
            t_desired_c,
        })
    }

    /// r_sw = -0.8, r_e = r_c = -1.2/3600 per second, T_d = 15 C.
    pub fn default_linear() -> Self {
        Self {
            r_switch: -0.8,
            r_energy_per_s: -1.2 / SECONDS_PER_HOUR,
            r_comfort_per_k2_s: -1.2 / SECONDS_PER_HOUR,
            t_desired_c: 15.0,
        }
    }
}

/// Which way the next switch goes; implied by the current heater status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SwitchKind {
    /// Heater is OFF; the threshold arms the next switch ON.
    SwitchOn,
    /// Heater is ON; the threshold arms the next switch OFF.
    SwitchOff,
}

/// A switching-temperature decision, after clamping.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdAction {
    pub value_c: f64,
    pub kind: SwitchKind,
}

/// One SMDP sample: the unit of learning.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub state: SystemState,
    pub action: ThresholdAction,
    /// Accumulated reward over the dwell, including the switch cost at the
    /// terminal event. Timeout transitions carry no switch cost.
    pub reward: f64,
    pub dwell_s: f64,
    pub next: SystemState,
    pub timeout: bool,
}

/// Feasible band and hysteresis gap for action clamping.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClampConfig {
    pub band_lo_c: f64,
    pub band_hi_c: f64,
    pub epsilon_gap_c: f64,
}

impl ClampConfig {
    /// Band `[T_o_min + margin, T_o_max + Qh/K - margin]` from the weather
    /// model's outdoor-temperature envelope.
    pub fn from_weather(bp: &BuildingParams, weather: &WeatherModel, margin_c: f64) -> Self {
        let (lo, hi) = weather.bounds();
        Self {
            band_lo_c: lo + margin_c,
            band_hi_c: hi + bp.heater_lift_k() - margin_c,
            epsilon_gap_c: 0.1,
        }
    }
}

/// Pull a raw policy output into the feasible band and at least the
/// hysteresis gap away from the current temperature on the reachable side.
/// A threshold that is already satisfied (e.g. a switch-ON threshold above
/// the current temperature while the heater is OFF) is left in place; it
/// triggers a minimum-dwell switch downstream.
pub fn clamp_action(raw_c: f64, s: &SystemState, cfg: &ClampConfig) -> ThresholdAction {
    let mut v = raw_c.clamp(cfg.band_lo_c, cfg.band_hi_c);
    let kind = if s.heater_on {
        SwitchKind::SwitchOff
    } else {
        SwitchKind::SwitchOn
    };
    match kind {
        // Heating up toward the switch-OFF threshold: keep it at least the
        // gap above the current temperature unless it is already satisfied.
        SwitchKind::SwitchOff => {
            if v > s.t_in_c && v < s.t_in_c + cfg.epsilon_gap_c {
                v = (s.t_in_c + cfg.epsilon_gap_c).min(cfg.band_hi_c);
            }
        }
        SwitchKind::SwitchOn => {
            if v < s.t_in_c && v > s.t_in_c - cfg.epsilon_gap_c {
                v = (s.t_in_c - cfg.epsilon_gap_c).max(cfg.band_lo_c);
            }
        }
    }
    ThresholdAction { value_c: v, kind }
}

/// Reward over one dwell from a sampled `(t, T)` polyline: the switch cost
/// (when the dwell ends in a switch) plus the energy and comfort integrals.
/// Each linear piece of the polyline is integrated exactly, so splitting a
/// segment at any interior point leaves the result unchanged.
pub fn accumulate_reward(
    segment: &[(f64, f64)],
    heater_on: bool,
    rw: &RewardWeights,
    ends_in_switch: bool,
) -> f64 {
    let mut comfort = 0.0;
    let mut elapsed = 0.0;
    for w in segment.windows(2) {
        let (t0, temp0) = w[0];
        let (t1, temp1) = w[1];
        let h = t1 - t0;
        let a = temp0 - rw.t_desired_c;
        let b = temp1 - rw.t_desired_c;
        // Exact integral of the squared deviation along the linear piece.
        comfort += h * (a * a + a * b + b * b) / 3.0;
        elapsed += h;
    }
    let energy = if heater_on { rw.r_energy_per_s * elapsed } else { 0.0 };
    let switch_cost = if ends_in_switch { rw.r_switch } else { 0.0 };
    energy + rw.r_comfort_per_k2_s * comfort + switch_cost
}

/// The event-triggered environment: building, weather, rewards, options.
#[derive(Debug, Clone)]
pub struct Env {
    pub building: BuildingParams,
    pub weather: WeatherModel,
    pub rewards: RewardWeights,
    pub options: SimOptions,
    pub clamp: ClampConfig,
}

impl Env {
    pub fn new(
        building: BuildingParams,
        weather: WeatherModel,
        rewards: RewardWeights,
        options: SimOptions,
    ) -> Self {
        let clamp = ClampConfig::from_weather(&building, &weather, 2.0);
        Self {
            building,
            weather,
            rewards,
            options,
            clamp,
        }
    }

    /// Initial state: desired temperature, heater off, t = 0.
    pub fn initial_state(&self) -> SystemState {
        SystemState {
            t_in_c: self.rewards.t_desired_c,
            t_out_c: self.weather.t_out(0.0),
            heater_on: false,
            t_s: 0.0,
        }
    }

    /// Clamp a raw threshold and advance to the next event.
    pub fn step(&self, s: &SystemState, raw_action_c: f64) -> Result<Transition> {
        let a = clamp_action(raw_action_c, s, &self.clamp);
        step_to_event(&self.building, &self.weather, s, &a, &self.rewards, &self.options)
    }

    /// Advance exactly `tick_s` seconds with the heater status held fixed;
    /// at the tick boundary apply the threshold comparison and switch if it
    /// holds. Control executes only at ticks.
    pub fn step_tick(&self, s: &SystemState, raw_action_c: f64, tick_s: f64) -> Result<Transition> {
        let a = clamp_action(raw_action_c, s, &self.clamp);
        let tau = self.building.time_constant_s();
        let mut t_in = s.t_in_c;
        let mut t_rel = 0.0;
        let mut segment = vec![(0.0, t_in)];
        while t_rel < tick_s - 1e-9 {
            let dt = self.options.step_s.min(tick_s - t_rel);
            let t_out = self.weather.t_out(s.t_s + t_rel);
            let t_inf = self.building.asymptote_c(t_out, s.heater_on);
            t_in = t_inf + (t_in - t_inf) * (-dt / tau).exp();
            t_rel += dt;
            segment.push((t_rel, t_in));
        }
        let switched = match a.kind {
            SwitchKind::SwitchOff => t_in >= a.value_c,
            SwitchKind::SwitchOn => t_in <= a.value_c,
        };
        let reward = accumulate_reward(&segment, s.heater_on, &self.rewards, switched);
        let next = SystemState {
            t_in_c: t_in,
            t_out_c: self.weather.t_out(s.t_s + tick_s),
            heater_on: if switched { !s.heater_on } else { s.heater_on },
            t_s: s.t_s + tick_s,
        };
        Ok(Transition {
            state: *s,
            action: a,
            reward,
            dwell_s: tick_s,
            next,
            timeout: false,
        })
    }

    /// Advance exactly `tick_s` seconds, but execute the switch at the true
    /// crossing inside the tick (event-triggered control under tick-based
    /// learning). At most one switch per tick.
    pub fn step_tick_event_control(
        &self,
        s: &SystemState,
        raw_action_c: f64,
        tick_s: f64,
    ) -> Result<Transition> {
        let a = clamp_action(raw_action_c, s, &self.clamp);
        let tau = self.building.time_constant_s();
        let crossed = |t_in: f64, heater_on: bool| match a.kind {
            SwitchKind::SwitchOff if heater_on => t_in >= a.value_c,
            SwitchKind::SwitchOn if !heater_on => t_in <= a.value_c,
            _ => false,
        };
        let mut heater_on = s.heater_on;
        let mut t_in = s.t_in_c;
        let mut t_rel = 0.0;
        let mut switched = false;
        let mut reward = 0.0;
        let mut segment = vec![(0.0, t_in)];
        if crossed(t_in, heater_on) {
            // Threshold already satisfied at the tick: switch immediately.
            heater_on = !heater_on;
            switched = true;
            reward += self.rewards.r_switch;
        }
        while t_rel < tick_s - 1e-9 {
            let dt = self.options.step_s.min(tick_s - t_rel);
            let t_out = self.weather.t_out(s.t_s + t_rel);
            let t_inf = self.building.asymptote_c(t_out, heater_on);
            let one_step = |h: f64, from: f64| t_inf + (from - t_inf) * (-h / tau).exp();
            let t_next = one_step(dt, t_in);
            if !switched && crossed(t_next, heater_on) {
                let (mut lo, mut hi) = (0.0_f64, dt);
                while hi - lo > self.options.event_tol_s {
                    let mid = 0.5 * (lo + hi);
                    if crossed(one_step(mid, t_in), heater_on) {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                let t_cross = one_step(hi, t_in);
                segment.push((t_rel + hi, t_cross));
                reward += accumulate_reward(&segment, heater_on, &self.rewards, true);
                segment = vec![(t_rel + hi, t_cross)];
                t_in = t_cross;
                t_rel += hi;
                heater_on = !heater_on;
                switched = true;
                continue;
            }
            t_in = t_next;
            t_rel += dt;
            segment.push((t_rel, t_in));
        }
        reward += accumulate_reward(&segment, heater_on, &self.rewards, false);
        let next = SystemState {
            t_in_c: t_in,
            t_out_c: self.weather.t_out(s.t_s + tick_s),
            heater_on,
            t_s: s.t_s + tick_s,
        };
        Ok(Transition {
            state: *s,
            action: a,
            reward,
            dwell_s: tick_s,
            next,
            timeout: false,
        })
    }
}

/// A control policy mapping states to raw (pre-clamp) threshold proposals.
pub trait Policy {
    fn propose(&mut self, s: &SystemState, rng: &mut ChaCha8Rng) -> f64;
}

/// Constant switch-ON / switch-OFF thresholds.
#[derive(Debug, Clone, Copy)]
pub struct FixedThresholds {
    pub t_on_c: f64,
    pub t_off_c: f64,
}

impl Policy for FixedThresholds {
    fn propose(&mut self, s: &SystemState, _rng: &mut ChaCha8Rng) -> f64 {
        if s.heater_on {
            self.t_off_c
        } else {
            self.t_on_c
        }
    }
}

/// Closed-loop rollout under event-triggered control. Returns the event
/// trace and the empirical average reward in unit/hr.
pub fn run_policy(
    env: &Env,
    policy: &mut dyn Policy,
    duration_s: f64,
    seed: u64,
) -> Result<(EventTrace, f64)> {
    if !(duration_s > 0.0) {
        return Err(Error::InvalidParams("rollout duration must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = env.initial_state();
    let mut trace = EventTrace::new();
    let mut total_reward = 0.0;
    let mut total_time = 0.0;
    while s.t_s < duration_s {
        let raw = policy.propose(&s, &mut rng);
        let tr = env.step(&s, raw)?;
        total_reward += tr.reward;
        total_time += tr.dwell_s;
        trace.push(EventRecord {
            t_s: tr.next.t_s,
            t_in_c: tr.next.t_in_c,
            t_out_c: tr.next.t_out_c,
            heater_on: tr.next.heater_on,
            event: !tr.timeout,
            action_c: tr.action.value_c,
            step_reward: tr.reward,
            cum_reward: total_reward,
            avg_reward_per_hr: total_reward / total_time * SECONDS_PER_HOUR,
        });
        s = tr.next;
    }
    Ok((trace, total_reward / total_time * SECONDS_PER_HOUR))
}

/// Closed-loop rollout under time-triggered (fixed-interval) control: the
/// policy is consulted and the switch comparison applied only at ticks.
pub fn run_policy_fixed(
    env: &Env,
    policy: &mut dyn Policy,
    tick_s: f64,
    duration_s: f64,
    seed: u64,
) -> Result<(EventTrace, f64)> {
    if !(duration_s > 0.0) {
        return Err(Error::InvalidParams("rollout duration must be positive".into()));
    }
    if !(tick_s > 0.0) {
        return Err(Error::InvalidParams("tick must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = env.initial_state();
    let mut trace = EventTrace::new();
    let mut total_reward = 0.0;
    let mut total_time = 0.0;
    while s.t_s < duration_s {
        let raw = policy.propose(&s, &mut rng);
        let tr = env.step_tick(&s, raw, tick_s)?;
        total_reward += tr.reward;
        total_time += tr.dwell_s;
        let switched = tr.next.heater_on != tr.state.heater_on;
        if switched || trace.is_empty() || tr.next.t_s >= duration_s {
            trace.push(EventRecord {
                t_s: tr.next.t_s,
                t_in_c: tr.next.t_in_c,
                t_out_c: tr.next.t_out_c,
                heater_on: tr.next.heater_on,
                event: switched,
                action_c: tr.action.value_c,
                step_reward: tr.reward,
                cum_reward: total_reward,
                avg_reward_per_hr: total_reward / total_time * SECONDS_PER_HOUR,
            });
        }
        s = tr.next;
    }
    Ok((trace, total_reward / total_time * SECONDS_PER_HOUR))
}
