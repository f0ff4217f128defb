//! Ground-truth evaluation: the closed-form limit-cycle average reward for
//! constant weather and a brute-force grid search over constant threshold
//! pairs.
//!
//! The closed-form path is deliberately self-contained (its own exponential
//! and comfort-integral algebra) so it stays an independent check on the
//! simulator.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::smdp::{run_policy, Env, FixedThresholds, RewardWeights, SECONDS_PER_HOUR};
use crate::thermal::BuildingParams;

/// Rectangular grid of (T_ON, T_OFF) pairs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub on_lo_c: f64,
    pub on_hi_c: f64,
    pub off_lo_c: f64,
    pub off_hi_c: f64,
    pub step_c: f64,
    /// Pairs with `t_on + epsilon_gap > t_off` are skipped.
    pub epsilon_gap_c: f64,
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.on_lo_c < self.on_hi_c && self.off_lo_c < self.off_hi_c) {
            return Err(Error::InvalidParams("grid ranges must satisfy lo < hi".into()));
        }
        if !(self.step_c > 0.0) {
            return Err(Error::InvalidParams("grid step must be positive".into()));
        }
        Ok(())
    }

    /// Default grid [8, 15] x [15, 22] C at 0.5 C.
    pub fn default_linear() -> Self {
        Self {
            on_lo_c: 8.0,
            on_hi_c: 15.0,
            off_lo_c: 15.0,
            off_hi_c: 22.0,
            step_c: 0.5,
            epsilon_gap_c: 0.1,
        }
    }

    pub fn on_values(&self) -> Vec<f64> {
        axis_values(self.on_lo_c, self.on_hi_c, self.step_c)
    }

    pub fn off_values(&self) -> Vec<f64> {
        axis_values(self.off_lo_c, self.off_hi_c, self.step_c)
    }
}

fn axis_values(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step).round() as usize;
    (0..=n).map(|i| lo + i as f64 * step).collect()
}

/// One evaluated grid cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceCell {
    pub t_on_c: f64,
    pub t_off_c: f64,
    pub j_per_hr: f64,
}

/// Average reward as a function of the constant threshold pair.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardSurface {
    /// Feasible cells in row-major (t_on, then t_off) order.
    pub cells: Vec<SurfaceCell>,
    pub argmax: SurfaceCell,
}

impl RewardSurface {
    fn from_cells(cells: Vec<SurfaceCell>) -> Result<Self> {
        // Ties break toward the lexicographically smallest pair; cells are
        // already in lexicographic order, so strict improvement suffices.
        let argmax = cells
            .iter()
            .copied()
            .reduce(|best, c| if c.j_per_hr > best.j_per_hr { c } else { best })
            .ok_or_else(|| Error::InvalidParams("grid contains no feasible pair".into()))?;
        Ok(Self { cells, argmax })
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("t_on_C,t_off_C,j_per_hr\n");
        for c in &self.cells {
            out.push_str(&format!("{:.4},{:.4},{:.9}\n", c.t_on_c, c.t_off_c, c.j_per_hr));
        }
        out
    }
}

/// Exact average reward of the steady limit cycle of the hysteresis
/// controller `(t_on, t_off)` under constant weather, in unit/hr.
///
/// Heating leg: `t_on -> t_off` toward the asymptote `T_o + Qh/K`; cooling
/// leg: `t_off -> t_on` toward `T_o`. Each leg's comfort term uses the exact
/// antiderivative of the squared deviation under exponential relaxation.
/// The cycle pays the switch cost twice.
pub fn limit_cycle_average_reward(
    bp: &BuildingParams,
    rw: &RewardWeights,
    t_out_c: f64,
    t_on_c: f64,
    t_off_c: f64,
) -> Result<f64> {
    let tau = bp.heat_capacity_j_per_k / bp.conductance_w_per_k;
    let t_hot = t_out_c + bp.heater_power_w / bp.conductance_w_per_k;
    if !(t_out_c < t_on_c && t_on_c < t_off_c && t_off_c < t_hot) {
        return Err(Error::InfeasibleCycle(format!(
            "need T_o < T_ON < T_OFF < T_o + Qh/K, got {t_out_c} < {t_on_c} < {t_off_c} < {t_hot}"
        )));
    }
    let t_heat = tau * ((t_hot - t_on_c) / (t_hot - t_off_c)).ln();
    let t_cool = tau * ((t_off_c - t_out_c) / (t_on_c - t_out_c)).ln();

    // integral of (T(t) - T_d)^2 with T relaxing from t0 toward t_inf.
    let comfort = |t0: f64, t_inf: f64, dt: f64| -> f64 {
        let d = t_inf - rw.t_desired_c;
        let a = t0 - t_inf;
        let e = (-dt / tau).exp();
        d * d * dt + 2.0 * d * a * tau * (1.0 - e) + a * a * (tau / 2.0) * (1.0 - e * e)
    };

    let cycle_reward = 2.0 * rw.r_switch
        + rw.r_energy_per_s * t_heat
        + rw.r_comfort_per_k2_s * (comfort(t_on_c, t_hot, t_heat) + comfort(t_off_c, t_out_c, t_cool));
    Ok(cycle_reward / (t_heat + t_cool) * SECONDS_PER_HOUR)
}

/// How grid cells are evaluated.
#[derive(Debug, Clone)]
pub enum GridEvaluator {
    /// Closed-form limit-cycle ratio; constant weather only.
    Analytic {
        building: BuildingParams,
        rewards: RewardWeights,
        t_out_c: f64,
    },
    /// Closed-loop rollout of `eval_days` simulated days per cell.
    Simulated { env: Env, eval_days: f64 },
}

/// Evaluate every feasible pair and return the full surface with its argmax.
/// Cells evaluate independently (in parallel); aggregation order is fixed,
/// so results are identical regardless of scheduling.
pub fn grid_search(evaluator: &GridEvaluator, spec: &GridSpec) -> Result<RewardSurface> {
    spec.validate()?;
    let mut pairs = Vec::new();
    for t_on in spec.on_values() {
        for t_off in spec.off_values() {
            if t_on + spec.epsilon_gap_c <= t_off {
                pairs.push((t_on, t_off));
            }
        }
    }
    let cells: Vec<SurfaceCell> = pairs
        .par_iter()
        .filter_map(|&(t_on, t_off)| {
            let j = match evaluator {
                GridEvaluator::Analytic {
                    building,
                    rewards,
                    t_out_c,
                } => limit_cycle_average_reward(building, rewards, *t_out_c, t_on, t_off).ok(),
                GridEvaluator::Simulated { env, eval_days } => {
                    let mut policy = FixedThresholds {
                        t_on_c: t_on,
                        t_off_c: t_off,
                    };
                    run_policy(env, &mut policy, eval_days * 86_400.0, 0)
                        .ok()
                        .map(|(_, j)| j)
                }
            };
            j.map(|j_per_hr| SurfaceCell {
                t_on_c: t_on,
                t_off_c: t_off,
                j_per_hr,
            })
        })
        .collect();
    RewardSurface::from_cells(cells)
}
