//! Timestamped run records and their CSV schemas.

/// One row of the event trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventRecord {
    pub t_s: f64,
    pub t_in_c: f64,
    pub t_out_c: f64,
    pub heater_on: bool,
    /// False for timeout transitions and dense sampling rows.
    pub event: bool,
    pub action_c: f64,
    pub step_reward: f64,
    pub cum_reward: f64,
    pub avg_reward_per_hr: f64,
}

/// Ordered record of events for CSV emission and analysis.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EventTrace {
    records: Vec<EventRecord>,
}

pub const EVENT_TRACE_HEADER: &str =
    "t_s,T_in_C,T_out_C,heater_on,event,action_C,step_reward,cum_reward,avg_reward_est";

impl EventTrace {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, r: EventRecord) {
        debug_assert!(self.records.last().map_or(true, |p| r.t_s >= p.t_s));
        self.records.push(r);
    }

    pub fn records(&self) -> &[EventRecord] {
        &self.records
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(64 * (self.records.len() + 1));
        out.push_str(EVENT_TRACE_HEADER);
        out.push('\n');
        for r in &self.records {
            out.push_str(&format!(
                "{:.3},{:.6},{:.6},{},{},{:.6},{:.9},{:.9},{:.9}\n",
                r.t_s,
                r.t_in_c,
                r.t_out_c,
                u8::from(r.heater_on),
                u8::from(r.event),
                r.action_c,
                r.step_reward,
                r.cum_reward,
                r.avg_reward_per_hr,
            ));
        }
        out
    }
}

/// One per-event row of a training run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainRecord {
    pub k: u64,
    pub t_s: f64,
    pub dwell_s: f64,
    /// Raw (pre-clamp) action the policy proposed.
    pub action_c: f64,
    pub reward: f64,
    pub delta: f64,
    pub j_bar_per_hr: f64,
    pub theta_on_c: f64,
    pub theta_off_c: f64,
    /// Empty column for deterministic runs.
    pub sigma_c: Option<f64>,
    /// Heater status at the decision epoch and at the next event, plus the
    /// timeout flag; kept so updates can be replayed from the log.
    pub heater_on: bool,
    pub next_heater_on: bool,
    pub timeout: bool,
}

pub const TRAIN_LOG_HEADER: &str =
    "k,t_s,dwell_s,action_C,reward,delta,jbar_per_hr,theta_on,theta_off,theta_sigma";

pub fn train_log_to_csv(records: &[TrainRecord]) -> String {
    let mut out = String::with_capacity(64 * (records.len() + 1));
    out.push_str(TRAIN_LOG_HEADER);
    out.push('\n');
    for r in records {
        let sigma = r.sigma_c.map_or(String::new(), |s| format!("{s:.9}"));
        out.push_str(&format!(
            "{},{:.3},{:.3},{:.6},{:.9},{:.9},{:.9},{:.6},{:.6},{}\n",
            r.k, r.t_s, r.dwell_s, r.action_c, r.reward, r.delta, r.j_bar_per_hr, r.theta_on_c, r.theta_off_c, sigma,
        ));
    }
    out
}
