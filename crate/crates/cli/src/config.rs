//! Flat sectioned key-value run configuration.
//!
//! The grammar is line-oriented: `[section]` headers, `key = value` pairs,
//! `#` comments, blank lines. Unknown sections or keys are rejected with the
//! offending line number. `to_text` emits the canonical form; parsing that
//! form yields an identical `RunConfig` (reward rates are stored in the
//! per-hour units they are written in, so no unit conversion happens on the
//! round trip).

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use switchpoint::{
    BuildingParams, Error, GridSpec, Result, RewardWeights, SimOptions, TrainConfig, WeatherModel,
    WeatherTrace, SECONDS_PER_HOUR,
};

/// Weather section as written in the file; `Trace` keeps the path so the
/// config round-trips without touching the referenced CSV.
#[derive(Debug, Clone, PartialEq)]
pub enum WeatherConfig {
    Constant {
        t_out_c: f64,
    },
    Sinusoid {
        mean_c: f64,
        amplitude_c: f64,
        period_s: f64,
        phase_s: f64,
    },
    Trace {
        trace_path: String,
    },
}

/// Everything a run needs, as parsed from one config file.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub building: BuildingParams,
    pub weather: WeatherConfig,
    pub r_switch: f64,
    pub r_energy_per_hr: f64,
    pub r_comfort_per_k2_hr: f64,
    pub t_desired_c: f64,
    pub sim: SimOptions,
    pub train: TrainConfig,
    pub grid: GridSpec,
    pub grid_eval_days: f64,
    pub eval_days: f64,
    /// Directory the config file lives in; trace paths resolve against it.
    pub base_dir: PathBuf,
}

impl RunConfig {
    pub fn default_linear() -> Self {
        Self {
            building: BuildingParams::default_linear(),
            weather: WeatherConfig::Constant { t_out_c: -10.0 },
            r_switch: -0.8,
            r_energy_per_hr: -1.2,
            r_comfort_per_k2_hr: -1.2,
            t_desired_c: 15.0,
            sim: SimOptions::default(),
            train: TrainConfig::default(),
            grid: GridSpec::default_linear(),
            grid_eval_days: 10.0,
            eval_days: 10.0,
            base_dir: PathBuf::from("."),
        }
    }

    pub fn rewards(&self) -> Result<RewardWeights> {
        RewardWeights::new(
            self.r_switch,
            self.r_energy_per_hr / SECONDS_PER_HOUR,
            self.r_comfort_per_k2_hr / SECONDS_PER_HOUR,
            self.t_desired_c,
        )
    }

    /// Build the weather model, loading the trace CSV when referenced.
    pub fn weather_model(&self) -> Result<WeatherModel> {
        match &self.weather {
            WeatherConfig::Constant { t_out_c } => Ok(WeatherModel::Constant(*t_out_c)),
            WeatherConfig::Sinusoid {
                mean_c,
                amplitude_c,
                period_s,
                phase_s,
            } => WeatherModel::sinusoid(*mean_c, *amplitude_c, *period_s, *phase_s),
            WeatherConfig::Trace { trace_path } => {
                let path = self.base_dir.join(trace_path);
                Ok(WeatherModel::Trace(load_weather_trace(&path)?))
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        BuildingParams::new(
            self.building.heat_capacity_j_per_k,
            self.building.conductance_w_per_k,
            self.building.heater_power_w,
        )?;
        self.rewards()?;
        // Also checks that a referenced weather trace exists and parses.
        self.weather_model()?;
        self.train.validate()?;
        self.grid.validate()?;
        if !(self.eval_days > 0.0 && self.grid_eval_days > 0.0) {
            return Err(Error::InvalidParams("evaluation durations must be positive".into()));
        }
        if !(self.sim.step_s > 0.0 && self.sim.event_tol_s > 0.0) {
            return Err(Error::InvalidParams("integrator step and event tolerance must be positive".into()));
        }
        if !(self.sim.min_dwell_s > 0.0 && self.sim.max_dwell_s > self.sim.min_dwell_s) {
            return Err(Error::InvalidParams(
                "dwell bounds must satisfy 0 < min_dwell_s < max_dwell_s".into(),
            ));
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        let base_dir = path.parent().unwrap_or(Path::new(".")).to_path_buf();
        Self::from_text(&text, &path.display().to_string(), base_dir)
    }

    pub fn from_text(text: &str, path: &str, base_dir: PathBuf) -> Result<Self> {
        let mut cfg = Self::default_linear();
        cfg.base_dir = base_dir;
        let mut weather_section = WeatherSection::default();
        let mut section = String::new();
        for (i, raw_line) in text.lines().enumerate() {
            let line = match raw_line.find('#') {
                Some(pos) => &raw_line[..pos],
                None => raw_line,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| Error::Parse {
                path: path.into(),
                line: i + 1,
                msg,
            };
            if let Some(name) = line.strip_prefix('[') {
                let name = name.strip_suffix(']').ok_or_else(|| err("unterminated section header".into()))?;
                match name {
                    "building" | "weather" | "rewards" | "sim" | "train" | "grid" | "eval" => {
                        section = name.to_string();
                    }
                    other => return Err(err(format!("unknown section `[{other}]`"))),
                }
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected key = value, got `{line}`")))?;
            let key = key.trim();
            let value = value.trim();
            let num = || -> Result<f64> {
                value.parse().map_err(|_| err(format!("not a number: `{value}`")))
            };
            let flag = || -> Result<bool> {
                value.parse().map_err(|_| err(format!("not a boolean: `{value}`")))
            };
            match (section.as_str(), key) {
                ("building", "heat_capacity_j_per_k") => cfg.building.heat_capacity_j_per_k = num()?,
                ("building", "conductance_w_per_k") => cfg.building.conductance_w_per_k = num()?,
                ("building", "heater_power_w") => cfg.building.heater_power_w = num()?,
                ("weather", "model") => match value {
                    "constant" | "sinusoid" | "trace" => weather_section.model = Some(value.to_string()),
                    other => return Err(err(format!("unknown weather model `{other}`"))),
                },
                ("weather", "t_out_c") => weather_section.t_out_c = Some(num()?),
                ("weather", "mean_c") => weather_section.mean_c = Some(num()?),
                ("weather", "amplitude_c") => weather_section.amplitude_c = Some(num()?),
                ("weather", "period_s") => weather_section.period_s = Some(num()?),
                ("weather", "phase_s") => weather_section.phase_s = Some(num()?),
                ("weather", "trace_path") => weather_section.trace_path = Some(value.to_string()),
                ("rewards", "r_switch") => cfg.r_switch = num()?,
                ("rewards", "r_energy_per_hr") => cfg.r_energy_per_hr = num()?,
                ("rewards", "r_comfort_per_k2_hr") => cfg.r_comfort_per_k2_hr = num()?,
                ("rewards", "t_desired_c") => cfg.t_desired_c = num()?,
                ("sim", "step_s") => cfg.sim.step_s = num()?,
                ("sim", "event_tol_s") => cfg.sim.event_tol_s = num()?,
                ("sim", "event_temp_tol_c") => cfg.sim.event_temp_tol_c = num()?,
                ("sim", "max_dwell_s") => cfg.sim.max_dwell_s = num()?,
                ("sim", "min_dwell_s") => cfg.sim.min_dwell_s = num()?,
                ("sim", "force_numeric") => cfg.sim.force_numeric = flag()?,
                ("train", "alpha_j") => cfg.train.alpha_j = num()?,
                ("train", "alpha_v") => cfg.train.alpha_v = num()?,
                ("train", "alpha_w") => cfg.train.alpha_w = num()?,
                ("train", "alpha_theta") => cfg.train.alpha_theta = num()?,
                ("train", "lambda_v") => cfg.train.lambda_v = num()?,
                ("train", "lambda_theta") => cfg.train.lambda_theta = num()?,
                ("train", "explore_std0_c") => cfg.train.explore_std0_c = num()?,
                ("train", "explore_decay") => cfg.train.explore_decay = num()?,
                ("train", "init_on_c") => cfg.train.init_on_c = num()?,
                ("train", "init_off_c") => cfg.train.init_off_c = num()?,
                ("train", "init_std_c") => cfg.train.init_std_c = num()?,
                ("train", "sigma_min_c") => cfg.train.sigma_min_c = num()?,
                ("train", "sigma_max_c") => cfg.train.sigma_max_c = num()?,
                ("train", "duration_days") => cfg.train.duration_days = num()?,
                ("train", "seed") => {
                    cfg.train.seed = value.parse().map_err(|_| err(format!("not a seed: `{value}`")))?
                }
                ("train", "tick_s") => cfg.train.tick_s = num()?,
                ("grid", "on_lo_c") => cfg.grid.on_lo_c = num()?,
                ("grid", "on_hi_c") => cfg.grid.on_hi_c = num()?,
                ("grid", "off_lo_c") => cfg.grid.off_lo_c = num()?,
                ("grid", "off_hi_c") => cfg.grid.off_hi_c = num()?,
                ("grid", "step_c") => cfg.grid.step_c = num()?,
                ("grid", "epsilon_gap_c") => cfg.grid.epsilon_gap_c = num()?,
                ("grid", "eval_days") => cfg.grid_eval_days = num()?,
                ("eval", "days") => cfg.eval_days = num()?,
                ("", k) => return Err(err(format!("key `{k}` appears before any section header"))),
                (s, k) => return Err(err(format!("unknown key `{k}` in section `[{s}]`"))),
            }
        }
        cfg.weather = weather_section.build().map_err(|msg| Error::Parse {
            path: path.into(),
            line: 0,
            msg,
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Canonical serialization; parsing it reproduces this config exactly.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "[building]");
        let _ = writeln!(s, "heat_capacity_j_per_k = {}", self.building.heat_capacity_j_per_k);
        let _ = writeln!(s, "conductance_w_per_k = {}", self.building.conductance_w_per_k);
        let _ = writeln!(s, "heater_power_w = {}", self.building.heater_power_w);
        let _ = writeln!(s, "\n[weather]");
        match &self.weather {
            WeatherConfig::Constant { t_out_c } => {
                let _ = writeln!(s, "model = constant");
                let _ = writeln!(s, "t_out_c = {t_out_c}");
            }
            WeatherConfig::Sinusoid {
                mean_c,
                amplitude_c,
                period_s,
                phase_s,
            } => {
                let _ = writeln!(s, "model = sinusoid");
                let _ = writeln!(s, "mean_c = {mean_c}");
                let _ = writeln!(s, "amplitude_c = {amplitude_c}");
                let _ = writeln!(s, "period_s = {period_s}");
                let _ = writeln!(s, "phase_s = {phase_s}");
            }
            WeatherConfig::Trace { trace_path } => {
                let _ = writeln!(s, "model = trace");
                let _ = writeln!(s, "trace_path = {trace_path}");
            }
        }
        let _ = writeln!(s, "\n[rewards]");
        let _ = writeln!(s, "r_switch = {}", self.r_switch);
        let _ = writeln!(s, "r_energy_per_hr = {}", self.r_energy_per_hr);
        let _ = writeln!(s, "r_comfort_per_k2_hr = {}", self.r_comfort_per_k2_hr);
        let _ = writeln!(s, "t_desired_c = {}", self.t_desired_c);
        let _ = writeln!(s, "\n[sim]");
        let _ = writeln!(s, "step_s = {}", self.sim.step_s);
        let _ = writeln!(s, "event_tol_s = {}", self.sim.event_tol_s);
        let _ = writeln!(s, "event_temp_tol_c = {}", self.sim.event_temp_tol_c);
        let _ = writeln!(s, "max_dwell_s = {}", self.sim.max_dwell_s);
        let _ = writeln!(s, "min_dwell_s = {}", self.sim.min_dwell_s);
        let _ = writeln!(s, "force_numeric = {}", self.sim.force_numeric);
        let _ = writeln!(s, "\n[train]");
        let t = &self.train;
        let _ = writeln!(s, "alpha_j = {}", t.alpha_j);
        let _ = writeln!(s, "alpha_v = {}", t.alpha_v);
        let _ = writeln!(s, "alpha_w = {}", t.alpha_w);
        let _ = writeln!(s, "alpha_theta = {}", t.alpha_theta);
        let _ = writeln!(s, "lambda_v = {}", t.lambda_v);
        let _ = writeln!(s, "lambda_theta = {}", t.lambda_theta);
        let _ = writeln!(s, "explore_std0_c = {}", t.explore_std0_c);
        let _ = writeln!(s, "explore_decay = {}", t.explore_decay);
        let _ = writeln!(s, "init_on_c = {}", t.init_on_c);
        let _ = writeln!(s, "init_off_c = {}", t.init_off_c);
        let _ = writeln!(s, "init_std_c = {}", t.init_std_c);
        let _ = writeln!(s, "sigma_min_c = {}", t.sigma_min_c);
        let _ = writeln!(s, "sigma_max_c = {}", t.sigma_max_c);
        let _ = writeln!(s, "duration_days = {}", t.duration_days);
        let _ = writeln!(s, "seed = {}", t.seed);
        let _ = writeln!(s, "tick_s = {}", t.tick_s);
        let _ = writeln!(s, "\n[grid]");
        let g = &self.grid;
        let _ = writeln!(s, "on_lo_c = {}", g.on_lo_c);
        let _ = writeln!(s, "on_hi_c = {}", g.on_hi_c);
        let _ = writeln!(s, "off_lo_c = {}", g.off_lo_c);
        let _ = writeln!(s, "off_hi_c = {}", g.off_hi_c);
        let _ = writeln!(s, "step_c = {}", g.step_c);
        let _ = writeln!(s, "epsilon_gap_c = {}", g.epsilon_gap_c);
        let _ = writeln!(s, "eval_days = {}", self.grid_eval_days);
        let _ = writeln!(s, "\n[eval]");
        let _ = writeln!(s, "days = {}", self.eval_days);
        s
    }
}

#[derive(Default)]
struct WeatherSection {
    model: Option<String>,
    t_out_c: Option<f64>,
    mean_c: Option<f64>,
    amplitude_c: Option<f64>,
    period_s: Option<f64>,
    phase_s: Option<f64>,
    trace_path: Option<String>,
}

impl WeatherSection {
    fn build(self) -> std::result::Result<WeatherConfig, String> {
        match self.model.as_deref() {
            None | Some("constant") => Ok(WeatherConfig::Constant {
                t_out_c: self.t_out_c.unwrap_or(-10.0),
            }),
            Some("sinusoid") => Ok(WeatherConfig::Sinusoid {
                mean_c: self.mean_c.ok_or("sinusoid weather needs mean_c")?,
                amplitude_c: self.amplitude_c.ok_or("sinusoid weather needs amplitude_c")?,
                period_s: self.period_s.ok_or("sinusoid weather needs period_s")?,
                phase_s: self.phase_s.unwrap_or(0.0),
            }),
            Some("trace") => Ok(WeatherConfig::Trace {
                trace_path: self.trace_path.ok_or("trace weather needs trace_path")?,
            }),
            Some(other) => Err(format!("unknown weather model `{other}`")),
        }
    }
}

/// Parse a weather trace CSV (`t_s,T_out_C` header, one sample per row).
pub fn load_weather_trace(path: &Path) -> Result<WeatherTrace> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim() == "t_s,T_out_C" => {}
        _ => {
            return Err(Error::Parse {
                path: path.display().to_string(),
                line: 1,
                msg: "expected header `t_s,T_out_C`".into(),
            })
        }
    }
    let mut samples = Vec::new();
    for (i, line) in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let err = |msg: String| Error::Parse {
            path: path.display().to_string(),
            line: i + 1,
            msg,
        };
        let (t, v) = line
            .split_once(',')
            .ok_or_else(|| err("expected `t_s,T_out_C` row".into()))?;
        let t: f64 = t.trim().parse().map_err(|_| err(format!("not a number: `{t}`")))?;
        let v: f64 = v.trim().parse().map_err(|_| err(format!("not a number: `{v}`")))?;
        samples.push((t, v));
    }
    WeatherTrace::new(samples)
}
