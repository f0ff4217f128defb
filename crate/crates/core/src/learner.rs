//! Event-triggered average-reward actor-critic learners and their
//! time-triggered (fixed-interval) baseline.
//!
//! Two algorithms are implemented. The stochastic one samples thresholds
//! from a Gaussian policy and follows the score-function gradient with
//! eligibility traces. The deterministic one (compatible off-policy
//! deterministic actor-critic with a Q-learning critic) perturbs the
//! deterministic policy with a decaying Gaussian exploration process and
//! follows the compatible-Q gradient. Both update only at events, with the
//! TD error formed from the transition reward, the dwell-weighted
//! average-reward estimate, and the differential value difference.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::policy::{
    compatible_q, dot, features, CriticParams, DeterministicPolicyParams, PolicyParams,
    StochasticPolicyParams,
};
use crate::smdp::{Env, SystemState, Transition, SECONDS_PER_HOUR};
use crate::trace::{EventRecord, EventTrace, TrainRecord};

/// Guard band for the policy parameters; leaving it aborts the run.
pub const THETA_GUARD_C: (f64, f64) = (-50.0, 80.0);

/// Learning-rate, trace-decay, exploration, and initialization settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub alpha_j: f64,
    pub alpha_v: f64,
    pub alpha_w: f64,
    pub alpha_theta: f64,
    pub lambda_v: f64,
    pub lambda_theta: f64,
    /// Initial exploration std for the deterministic algorithm, degrees C.
    pub explore_std0_c: f64,
    /// Per-event multiplicative decay of the exploration std.
    pub explore_decay: f64,
    /// Initial thresholds, degrees C.
    pub init_on_c: f64,
    pub init_off_c: f64,
    /// Initial policy std for the stochastic algorithm, degrees C.
    pub init_std_c: f64,
    /// Bounds on the learned std; a divergence guard, not a tuning knob.
    pub sigma_min_c: f64,
    pub sigma_max_c: f64,
    pub duration_days: f64,
    pub seed: u64,
    /// Update interval of the fixed-interval baseline, seconds.
    pub tick_s: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            alpha_j: 0.02,
            alpha_v: 0.05,
            alpha_w: 0.05,
            alpha_theta: 0.02,
            lambda_v: 0.5,
            lambda_theta: 0.5,
            explore_std0_c: 1.0,
            explore_decay: 0.999,
            init_on_c: 11.0,
            init_off_c: 19.0,
            init_std_c: 1.0,
            sigma_min_c: 0.2,
            sigma_max_c: 1.5,
            duration_days: 10.0,
            seed: 0,
            tick_s: 300.0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let rates = [
            self.alpha_j,
            self.alpha_v,
            self.alpha_w,
            self.alpha_theta,
        ];
        if rates.iter().any(|r| !(*r >= 0.0)) {
            return Err(Error::InvalidParams("learning rates must be >= 0".into()));
        }
        for l in [self.lambda_v, self.lambda_theta] {
            if !(0.0..=1.0).contains(&l) {
                return Err(Error::InvalidParams("trace decay must lie in [0, 1]".into()));
            }
        }
        if !(self.duration_days > 0.0) {
            return Err(Error::InvalidParams("training duration must be positive".into()));
        }
        if !(self.tick_s > 0.0) {
            return Err(Error::InvalidParams("tick must be positive".into()));
        }
        if !(self.sigma_min_c > 0.0 && self.sigma_max_c >= self.sigma_min_c) {
            return Err(Error::InvalidParams("sigma bounds must satisfy 0 < min <= max".into()));
        }
        Ok(())
    }

    pub fn duration_s(&self) -> f64 {
        self.duration_days * 86_400.0
    }
}

/// Sub-mode of the fixed-interval baseline: where the switch executes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FixedControlMode {
    /// Both learning and control at ticks: the heater flips at the first
    /// tick boundary where the threshold comparison holds.
    FixedControl,
    /// Learning at ticks, control event-triggered: the heater flips at the
    /// true crossing inside the tick.
    EventControl,
}

/// Outcome of a training run.
#[derive(Debug, Clone)]
pub struct TrainResult {
    pub records: Vec<TrainRecord>,
    pub trace: EventTrace,
    pub params: PolicyParams,
}

impl TrainResult {
    /// Standard deviation of the average-reward estimate over records with
    /// `t_s >= from_s` (population form).
    pub fn j_bar_trace_std(&self, from_s: f64) -> f64 {
        let xs: Vec<f64> = self
            .records
            .iter()
            .filter(|r| r.t_s >= from_s)
            .map(|r| r.j_bar_per_hr)
            .collect();
        if xs.len() < 2 {
            return 0.0;
        }
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / xs.len() as f64).sqrt()
    }
}

/// TD error for a state-value critic:
/// `delta = r - j_bar * dwell + V(s') - V(s)`.
pub fn td_error_v(r: f64, j_bar_per_s: f64, dwell_s: f64, v_next: f64, v_curr: f64) -> f64 {
    r - j_bar_per_s * dwell_s + v_next - v_curr
}

/// TD error for an action-value critic:
/// `delta = r - j_bar * dwell + Q(s', mu(s')) - Q(s, a)`.
pub fn td_error_q(r: f64, j_bar_per_s: f64, dwell_s: f64, q_next: f64, q_curr: f64) -> f64 {
    r - j_bar_per_s * dwell_s + q_next - q_curr
}

/// Average-reward tracking: `j_bar <- j_bar + alpha_j * delta / dwell`.
pub fn update_average_reward(j_bar_per_s: f64, alpha_j: f64, delta: f64, dwell_s: f64) -> f64 {
    j_bar_per_s + alpha_j * delta / dwell_s
}

fn check_guard(theta: &[f64; 2], event: u64) -> Result<()> {
    if theta.iter().any(|t| *t < THETA_GUARD_C.0 || *t > THETA_GUARD_C.1 || !t.is_finite()) {
        return Err(Error::Diverged {
            event,
            theta_on: theta[0],
            theta_off: theta[1],
        });
    }
    Ok(())
}

fn push_event(trace: &mut EventTrace, tr: &Transition, cum_reward: f64, total_time: f64, j_bar_per_s: f64) {
    trace.push(EventRecord {
        t_s: tr.next.t_s,
        t_in_c: tr.next.t_in_c,
        t_out_c: tr.next.t_out_c,
        heater_on: tr.next.heater_on,
        event: !tr.timeout,
        action_c: tr.action.value_c,
        step_reward: tr.reward,
        cum_reward,
        avg_reward_per_hr: if total_time > 0.0 {
            cum_reward / total_time * SECONDS_PER_HOUR
        } else {
            j_bar_per_s * SECONDS_PER_HOUR
        },
    });
}

/// Event-triggered actor-critic with a Gaussian policy and eligibility
/// traces. Each event: sample `a ~ pi(.|s)`, wait to the next event, form
/// the state-value TD error, update the average reward, decay-and-add the
/// eligibility traces, and step `v` and `theta` along `delta * z`.
///
/// Timeout transitions update the critic and the average reward but leave
/// the actor (policy traces and parameters) untouched.
pub fn train_stochastic(env: &Env, cfg: &TrainConfig) -> Result<TrainResult> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut pol = StochasticPolicyParams::new(cfg.init_on_c, cfg.init_off_c, cfg.init_std_c);
    let mut critic = CriticParams::zeroed();
    let mut z_v = [0.0_f64; 2];
    let mut z_mean = [0.0_f64; 2];
    let mut z_log_std = 0.0_f64;
    let (log_std_min, log_std_max) = (cfg.sigma_min_c.ln(), cfg.sigma_max_c.ln());

    let mut s = env.initial_state();
    let mut records = Vec::new();
    let mut trace = EventTrace::new();
    let (mut cum_reward, mut total_time) = (0.0, 0.0);
    let mut k: u64 = 0;

    while s.t_s < cfg.duration_s() {
        let a = pol.sample(&s, &mut rng);
        let tr = env.step(&s, a)?;

        let delta = td_error_v(
            tr.reward,
            critic.j_bar_per_s,
            tr.dwell_s,
            critic.state_value(&tr.next),
            critic.state_value(&s),
        );
        critic.j_bar_per_s = update_average_reward(critic.j_bar_per_s, cfg.alpha_j, delta, tr.dwell_s);

        let phi = features(&s);
        for i in 0..2 {
            z_v[i] = cfg.lambda_v * z_v[i] + phi[i];
            critic.v[i] += cfg.alpha_v * delta * z_v[i];
        }
        if !tr.timeout {
            let score = pol.score(&s, a);
            for i in 0..2 {
                z_mean[i] = cfg.lambda_theta * z_mean[i] + score.theta_mean[i];
                pol.theta_mean[i] += cfg.alpha_theta * delta * z_mean[i];
            }
            z_log_std = cfg.lambda_theta * z_log_std + score.theta_log_std;
            pol.theta_log_std =
                (pol.theta_log_std + cfg.alpha_theta * delta * z_log_std).clamp(log_std_min, log_std_max);
        }
        check_guard(&pol.theta_mean, k)?;

        cum_reward += tr.reward;
        total_time += tr.dwell_s;
        records.push(TrainRecord {
            k,
            t_s: tr.next.t_s,
            dwell_s: tr.dwell_s,
            action_c: a,
            reward: tr.reward,
            delta,
            j_bar_per_hr: critic.j_bar_per_s * SECONDS_PER_HOUR,
            theta_on_c: pol.theta_mean[0],
            theta_off_c: pol.theta_mean[1],
            sigma_c: Some(pol.std()),
            heater_on: s.heater_on,
            next_heater_on: tr.next.heater_on,
            timeout: tr.timeout,
        });
        push_event(&mut trace, &tr, cum_reward, total_time, critic.j_bar_per_s);
        s = tr.next;
        k += 1;
    }

    Ok(TrainResult {
        records,
        trace,
        params: PolicyParams {
            theta_on_c: pol.theta_mean[0],
            theta_off_c: pol.theta_mean[1],
            sigma_c: Some(pol.std()),
            critic,
        },
    })
}

/// Event-triggered COPDAC-Q. Each event: act `a = mu(s) + F` with `F` a
/// zero-mean Gaussian whose std decays per event, wait to the next event,
/// form the action-value TD error against the compatible approximator, and
/// step `v`, `w`, and `theta` along their respective gradients.
pub fn train_deterministic(env: &Env, cfg: &TrainConfig) -> Result<TrainResult> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut pol = DeterministicPolicyParams::new(cfg.init_on_c, cfg.init_off_c);
    let mut critic = CriticParams::zeroed();

    let mut s = env.initial_state();
    let mut records = Vec::new();
    let mut trace = EventTrace::new();
    let (mut cum_reward, mut total_time) = (0.0, 0.0);
    let mut k: u64 = 0;

    while s.t_s < cfg.duration_s() {
        let mu = pol.action(&s);
        let noise: f64 = rng.sample(StandardNormal);
        let a = mu + noise * cfg.explore_std0_c * cfg.explore_decay.powi(k as i32);
        let tr = env.step(&s, a)?;

        let q_next = compatible_q(&critic, &pol, &tr.next, pol.action(&tr.next));
        let q_curr = compatible_q(&critic, &pol, &s, a);
        let delta = td_error_q(tr.reward, critic.j_bar_per_s, tr.dwell_s, q_next, q_curr);
        critic.j_bar_per_s = update_average_reward(critic.j_bar_per_s, cfg.alpha_j, delta, tr.dwell_s);

        let phi = features(&s);
        for i in 0..2 {
            critic.v[i] += cfg.alpha_v * delta * phi[i];
        }
        if !tr.timeout {
            let grad_mu = pol.grad(&s);
            for i in 0..2 {
                critic.w[i] += cfg.alpha_w * delta * (a - mu) * grad_mu[i];
            }
            let advantage_grad = dot(&grad_mu, &critic.w);
            for i in 0..2 {
                pol.theta[i] += cfg.alpha_theta * grad_mu[i] * advantage_grad;
            }
        }
        check_guard(&pol.theta, k)?;

        cum_reward += tr.reward;
        total_time += tr.dwell_s;
        records.push(TrainRecord {
            k,
            t_s: tr.next.t_s,
            dwell_s: tr.dwell_s,
            action_c: a,
            reward: tr.reward,
            delta,
            j_bar_per_hr: critic.j_bar_per_s * SECONDS_PER_HOUR,
            theta_on_c: pol.theta[0],
            theta_off_c: pol.theta[1],
            sigma_c: None,
            heater_on: s.heater_on,
            next_heater_on: tr.next.heater_on,
            timeout: tr.timeout,
        });
        push_event(&mut trace, &tr, cum_reward, total_time, critic.j_bar_per_s);
        s = tr.next;
        k += 1;
    }

    Ok(TrainResult {
        records,
        trace,
        params: PolicyParams {
            theta_on_c: pol.theta[0],
            theta_off_c: pol.theta[1],
            sigma_c: None,
            critic,
        },
    })
}

/// Time-triggered baseline: the COPDAC-Q update applied at every fixed tick
/// with `dwell = tick_s`. Control executes at ticks (or at true crossings in
/// the event-control sub-mode); learning always happens at ticks.
pub fn train_fixed_interval(
    env: &Env,
    cfg: &TrainConfig,
    tick_s: f64,
    mode: FixedControlMode,
) -> Result<TrainResult> {
    cfg.validate()?;
    if !(tick_s > 0.0) {
        return Err(Error::InvalidParams("tick must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut pol = DeterministicPolicyParams::new(cfg.init_on_c, cfg.init_off_c);
    let mut critic = CriticParams::zeroed();

    let mut s = env.initial_state();
    let mut records = Vec::new();
    let mut trace = EventTrace::new();
    let (mut cum_reward, mut total_time) = (0.0, 0.0);
    let mut k: u64 = 0;

    while s.t_s < cfg.duration_s() {
        let mu = pol.action(&s);
        let noise: f64 = rng.sample(StandardNormal);
        let a = mu + noise * cfg.explore_std0_c * cfg.explore_decay.powi(k as i32);
        let tr = match mode {
            FixedControlMode::FixedControl => env.step_tick(&s, a, tick_s)?,
            FixedControlMode::EventControl => env.step_tick_event_control(&s, a, tick_s)?,
        };

        let q_next = compatible_q(&critic, &pol, &tr.next, pol.action(&tr.next));
        let q_curr = compatible_q(&critic, &pol, &s, a);
        let delta = td_error_q(tr.reward, critic.j_bar_per_s, tr.dwell_s, q_next, q_curr);
        critic.j_bar_per_s = update_average_reward(critic.j_bar_per_s, cfg.alpha_j, delta, tr.dwell_s);

        let phi = features(&s);
        for i in 0..2 {
            critic.v[i] += cfg.alpha_v * delta * phi[i];
        }
        let grad_mu = pol.grad(&s);
        for i in 0..2 {
            critic.w[i] += cfg.alpha_w * delta * (a - mu) * grad_mu[i];
        }
        let advantage_grad = dot(&grad_mu, &critic.w);
        for i in 0..2 {
            pol.theta[i] += cfg.alpha_theta * grad_mu[i] * advantage_grad;
        }
        check_guard(&pol.theta, k)?;

        cum_reward += tr.reward;
        total_time += tr.dwell_s;
        let switched = tr.next.heater_on != s.heater_on;
        records.push(TrainRecord {
            k,
            t_s: tr.next.t_s,
            dwell_s: tr.dwell_s,
            action_c: a,
            reward: tr.reward,
            delta,
            j_bar_per_hr: critic.j_bar_per_s * SECONDS_PER_HOUR,
            theta_on_c: pol.theta[0],
            theta_off_c: pol.theta[1],
            sigma_c: None,
            heater_on: s.heater_on,
            next_heater_on: tr.next.heater_on,
            timeout: tr.timeout,
        });
        if switched {
            push_event(&mut trace, &tr, cum_reward, total_time, critic.j_bar_per_s);
        }
        s = tr.next;
        k += 1;
    }

    Ok(TrainResult {
        records,
        trace,
        params: PolicyParams {
            theta_on_c: pol.theta[0],
            theta_off_c: pol.theta[1],
            sigma_c: None,
            critic,
        },
    })
}

/// Behavior policy adapter so learned parameters can be evaluated by
/// `run_policy` / `run_policy_fixed`.
#[derive(Debug, Clone, Copy)]
pub struct GreedyPolicy {
    pub params: DeterministicPolicyParams,
}

impl crate::smdp::Policy for GreedyPolicy {
    fn propose(&mut self, s: &SystemState, _rng: &mut ChaCha8Rng) -> f64 {
        self.params.action(s)
    }
}

/// Gaussian behavior policy adapter (samples every proposal).
#[derive(Debug, Clone, Copy)]
pub struct GaussianPolicy {
    pub params: StochasticPolicyParams,
}

impl crate::smdp::Policy for GaussianPolicy {
    fn propose(&mut self, s: &SystemState, rng: &mut ChaCha8Rng) -> f64 {
        self.params.sample(s, rng)
    }
}
