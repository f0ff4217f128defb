//! Parameterized threshold policies: Gaussian stochastic and linear
//! deterministic, their score functions, and the compatible action-value
//! approximator.
//!
//! The feature vector is the heater-status one-hot `[1 - h_s, h_s]`, so each
//! parameter component owns one mode: index 0 is the switch-ON threshold
//! (heater OFF), index 1 the switch-OFF threshold (heater ON).

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::smdp::SystemState;

pub type FeatureVector = [f64; 2];

/// `[1, 0]` when the heater is OFF, `[0, 1]` when ON.
pub fn features(s: &SystemState) -> FeatureVector {
    if s.heater_on {
        [0.0, 1.0]
    } else {
        [1.0, 0.0]
    }
}

pub(crate) fn dot(a: &FeatureVector, b: &FeatureVector) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

/// Gaussian threshold policy: mean `theta_m' phi(s)`, shared log-sigma.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StochasticPolicyParams {
    /// Mean thresholds `[theta_m_ON, theta_m_OFF]`, degrees C.
    pub theta_mean: [f64; 2],
    /// Shared log standard deviation; sigma = exp(theta_log_std) > 0 always.
    pub theta_log_std: f64,
}

impl StochasticPolicyParams {
    pub fn new(on_c: f64, off_c: f64, std_c: f64) -> Self {
        Self {
            theta_mean: [on_c, off_c],
            theta_log_std: std_c.ln(),
        }
    }

    pub fn mean(&self, s: &SystemState) -> f64 {
        dot(&self.theta_mean, &features(s))
    }

    pub fn std(&self) -> f64 {
        self.theta_log_std.exp()
    }

    /// Draw a raw (pre-clamp) threshold from N(mean(s), sigma^2).
    pub fn sample(&self, s: &SystemState, rng: &mut ChaCha8Rng) -> f64 {
        let z: f64 = rng.sample(StandardNormal);
        self.mean(s) + self.std() * z
    }

    pub fn log_density(&self, s: &SystemState, a: f64) -> f64 {
        let sigma = self.std();
        let z = (a - self.mean(s)) / sigma;
        -0.5 * z * z - sigma.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln()
    }

    /// Score function grad log pi at (s, a), over (theta_mean, theta_log_std).
    pub fn score(&self, s: &SystemState, a: f64) -> StochasticScore {
        let phi = features(s);
        let sigma = self.std();
        let d = a - self.mean(s);
        let gm = d / (sigma * sigma);
        StochasticScore {
            theta_mean: [gm * phi[0], gm * phi[1]],
            theta_log_std: d * d / (sigma * sigma) - 1.0,
        }
    }
}

/// Gradient of `log pi` with respect to the stochastic policy parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StochasticScore {
    pub theta_mean: [f64; 2],
    pub theta_log_std: f64,
}

/// Constant-threshold deterministic policy `mu(s) = theta' phi(s)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeterministicPolicyParams {
    /// `[theta_ON, theta_OFF]`, degrees C.
    pub theta: [f64; 2],
}

impl DeterministicPolicyParams {
    pub fn new(on_c: f64, off_c: f64) -> Self {
        Self { theta: [on_c, off_c] }
    }

    pub fn action(&self, s: &SystemState) -> f64 {
        dot(&self.theta, &features(s))
    }

    /// Gradient of mu with respect to theta: the feature vector.
    pub fn grad(&self, s: &SystemState) -> FeatureVector {
        features(s)
    }
}

/// Critic parameters: baseline weights `v`, compatible advantage weights
/// `w`, and the average-reward estimate (unit/s internally).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticParams {
    pub v: [f64; 2],
    pub w: [f64; 2],
    pub j_bar_per_s: f64,
}

impl CriticParams {
    pub fn zeroed() -> Self {
        Self {
            v: [0.0, 0.0],
            w: [0.0, 0.0],
            j_bar_per_s: 0.0,
        }
    }

    /// Baseline `V(s) = v' phi(s)`.
    pub fn state_value(&self, s: &SystemState) -> f64 {
        dot(&self.v, &features(s))
    }
}

/// Compatible approximator `Q(s, a) = (a - mu(s)) grad_mu(s)' w + V(s)`.
pub fn compatible_q(
    c: &CriticParams,
    p: &DeterministicPolicyParams,
    s: &SystemState,
    a: f64,
) -> f64 {
    let g = p.grad(s);
    (a - p.action(s)) * dot(&g, &c.w) + c.state_value(s)
}

/// Learned parameters of either algorithm, as persisted to disk.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolicyParams {
    pub theta_on_c: f64,
    pub theta_off_c: f64,
    /// Standard deviation in degrees C; `None` for deterministic policies.
    pub sigma_c: Option<f64>,
    pub critic: CriticParams,
}

impl PolicyParams {
    /// Flat key-value text, one `key=value` per line.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("theta_on={}\n", self.theta_on_c));
        out.push_str(&format!("theta_off={}\n", self.theta_off_c));
        if let Some(sigma) = self.sigma_c {
            out.push_str(&format!("theta_sigma={sigma}\n"));
        }
        out.push_str(&format!("v0={}\n", self.critic.v[0]));
        out.push_str(&format!("v1={}\n", self.critic.v[1]));
        out.push_str(&format!("w0={}\n", self.critic.w[0]));
        out.push_str(&format!("w1={}\n", self.critic.w[1]));
        out.push_str(&format!(
            "jbar_per_hr={}\n",
            self.j_bar_per_hr()
        ));
        out
    }

    pub fn j_bar_per_hr(&self) -> f64 {
        self.critic.j_bar_per_s * crate::smdp::SECONDS_PER_HOUR
    }

    pub fn from_text(text: &str, path: &str) -> Result<Self> {
        let mut theta_on = None;
        let mut theta_off = None;
        let mut sigma = None;
        let mut v = [0.0, 0.0];
        let mut w = [0.0, 0.0];
        let mut j_bar_per_hr = 0.0;
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                path: path.into(),
                line: i + 1,
                msg: format!("expected key=value, got `{line}`"),
            })?;
            let parse = |v: &str| -> Result<f64> {
                v.trim().parse().map_err(|_| Error::Parse {
                    path: path.into(),
                    line: i + 1,
                    msg: format!("not a number: `{}`", v.trim()),
                })
            };
            match key.trim() {
                "theta_on" => theta_on = Some(parse(value)?),
                "theta_off" => theta_off = Some(parse(value)?),
                "theta_sigma" => sigma = Some(parse(value)?),
                "v0" => v[0] = parse(value)?,
                "v1" => v[1] = parse(value)?,
                "w0" => w[0] = parse(value)?,
                "w1" => w[1] = parse(value)?,
                "jbar_per_hr" => j_bar_per_hr = parse(value)?,
                other => {
                    return Err(Error::Parse {
                        path: path.into(),
                        line: i + 1,
                        msg: format!("unknown key `{other}`"),
                    })
                }
            }
        }
        let (theta_on_c, theta_off_c) = match (theta_on, theta_off) {
            (Some(on), Some(off)) => (on, off),
            _ => {
                return Err(Error::Parse {
                    path: path.into(),
                    line: 0,
                    msg: "missing theta_on or theta_off".into(),
                })
            }
        };
        Ok(Self {
            theta_on_c,
            theta_off_c,
            sigma_c: sigma,
            critic: CriticParams {
                v,
                w,
                j_bar_per_s: j_bar_per_hr / crate::smdp::SECONDS_PER_HOUR,
            },
        })
    }
}
