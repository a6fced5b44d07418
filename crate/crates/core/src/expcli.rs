//! Parameter sweeps: derived per-trial seeds, trial averaging and CSV rows.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{run_baseline, BaselineKind};
use crate::dual::{run_solver, SolverParams};
use crate::error::{Error, Result};
use crate::scenario::{generate_scenario, ScenarioConfig};
use crate::solution::SolveResult;

pub const CSV_HEADER: &str = "scheme,axis,axis_value,variant,variant_value,mean_sst,mean_delay_s,mean_eta,trials,seed,errors";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    NumUsers,
    NumKbs,
    /// Maximum transmit power in dBm.
    PMax,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    UserSkew,
    Capacity,
    EtaMin,
    None,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Proposed,
    Rpd,
    Mpk,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [Scheme::Proposed, Scheme::Rpd, Scheme::Mpk];

    fn tag(self) -> u64 {
        match self {
            Scheme::Proposed => 1,
            Scheme::Rpd => 2,
            Scheme::Mpk => 3,
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::Proposed => "proposed",
            Scheme::Rpd => "rpd",
            Scheme::Mpk => "mpk",
        })
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweepAxis::NumUsers => "num_users",
            SweepAxis::NumKbs => "num_kbs",
            SweepAxis::PMax => "p_max",
        })
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::UserSkew => "user_skew",
            Variant::Capacity => "capacity",
            Variant::EtaMin => "eta_min",
            Variant::None => "none",
        })
    }
}

/// Which iterate of the proposed solver a sweep reports.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportedIterate {
    #[default]
    Last,
    /// The best iterate without violations, falling back to the last one.
    BestFeasible,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSpec {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
    pub variant: Variant,
    pub variant_values: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    pub schemes: Vec<Scheme>,
    pub report: ReportedIterate,
    pub base: ScenarioConfig,
    pub solver: SolverParams,
}

impl Default for SweepSpec {
    fn default() -> Self {
        SweepSpec {
            axis: SweepAxis::NumUsers,
            values: vec![10.0, 20.0, 30.0, 40.0],
            variant: Variant::UserSkew,
            variant_values: vec![0.8, 1.4],
            trials: 20,
            seed: 1,
            schemes: Scheme::ALL.to_vec(),
            report: ReportedIterate::Last,
            base: ScenarioConfig { num_kbs: 8, ..Default::default() },
            solver: SolverParams::default(),
        }
    }
}

impl SweepSpec {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let spec: SweepSpec = toml::from_str(text).map_err(|e| Error::parse("sweep spec", e))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::InvalidConfig("sweep needs at least one axis value".into()));
        }
        if self.trials == 0 {
            return Err(Error::InvalidConfig("trials must be >= 1".into()));
        }
        if self.schemes.is_empty() {
            return Err(Error::InvalidConfig("at least one scheme is required".into()));
        }
        if self.variant != Variant::None && self.variant_values.is_empty() {
            return Err(Error::InvalidConfig("variant needs at least one value".into()));
        }
        self.solver.validate()?;
        for &v in self.variant_points().iter() {
            for &a in &self.values {
                self.config_for(a, v, 0)?.validate()?;
            }
        }
        Ok(())
    }

    fn variant_points(&self) -> Vec<f64> {
        if self.variant == Variant::None {
            vec![0.0]
        } else {
            self.variant_values.clone()
        }
    }

    /// Scenario configuration of one trial.
    pub fn config_for(&self, axis_value: f64, variant_value: f64, trial: usize) -> Result<ScenarioConfig> {
        let mut cfg = self.base.clone();
        let count = |v: f64, what: &str| {
            if v.fract() != 0.0 || v < 0.0 {
                Err(Error::InvalidConfig(format!("{what} must be a non-negative integer, got {v}")))
            } else {
                Ok(v as usize)
            }
        };
        match self.axis {
            SweepAxis::NumUsers => cfg.num_users = count(axis_value, "num_users")?,
            SweepAxis::NumKbs => cfg.num_kbs = count(axis_value, "num_kbs")?,
            SweepAxis::PMax => cfg.p_max_dbm = axis_value,
        }
        match self.variant {
            Variant::UserSkew => cfg.user_skew = variant_value,
            Variant::Capacity => cfg.capacity = count(variant_value, "capacity")? as u32,
            Variant::EtaMin => cfg.eta_min = variant_value,
            Variant::None => {}
        }
        cfg.rng_seed = scenario_seed(self.seed, axis_value, variant_value, trial);
        Ok(cfg)
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of the scenario drawn for one trial. All schemes see the same
/// scenario.
pub fn scenario_seed(seed: u64, axis_value: f64, variant_value: f64, trial: usize) -> u64 {
    let mut h = splitmix64(seed);
    h = splitmix64(h ^ axis_value.to_bits());
    h = splitmix64(h ^ variant_value.to_bits());
    splitmix64(h ^ trial as u64)
}

/// Seed of a scheme's own randomness within one trial.
pub fn scheme_seed(scenario_seed: u64, scheme: Scheme) -> u64 {
    splitmix64(scenario_seed ^ scheme.tag())
}

/// One CSV line: trial-pooled means over matched directed links.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub scheme: String,
    pub axis: String,
    pub axis_value: f64,
    pub variant: String,
    pub variant_value: f64,
    pub mean_sst: f64,
    pub mean_delay_s: f64,
    pub mean_eta: f64,
    pub trials: usize,
    pub seed: u64,
    /// `t<trial>:<message>` entries joined by `|`.
    pub errors: String,
}

/// Run one scheme on one trial's scenario.
pub fn run_scheme(spec: &SweepSpec, cfg: &ScenarioConfig, scheme: Scheme) -> Result<SolveResult> {
    let scn = generate_scenario(cfg)?;
    match scheme {
        Scheme::Proposed => {
            let res = run_solver(&scn, &spec.solver)?;
            Ok(match spec.report {
                ReportedIterate::Last => res,
                ReportedIterate::BestFeasible => match res.best_feasible {
                    Some(b) => *b,
                    None => res,
                },
            })
        }
        Scheme::Rpd => run_baseline(&scn, BaselineKind::Rpd, scheme_seed(cfg.rng_seed, scheme)),
        Scheme::Mpk => run_baseline(&scn, BaselineKind::Mpk, scheme_seed(cfg.rng_seed, scheme)),
    }
}

#[derive(Default)]
struct Pool {
    sst: f64,
    delay: f64,
    eta: f64,
    links: usize,
    errors: Vec<String>,
}

/// Run every (axis value, variant value, trial) in parallel and pool the
/// results per scheme. Rows come out ordered by axis value, variant value
/// and scheme; failed trials are listed in the errors column.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<ResultRow>> {
    spec.validate()?;
    let variants = spec.variant_points();
    let mut tasks = Vec::new();
    for &a in &spec.values {
        for &v in &variants {
            for t in 0..spec.trials {
                tasks.push((a, v, t));
            }
        }
    }
    let outcomes: Vec<Vec<std::result::Result<SolveResult, String>>> = tasks
        .par_iter()
        .map(|&(a, v, t)| {
            let cfg = spec.config_for(a, v, t).expect("validated");
            spec.schemes.iter().map(|&s| run_scheme(spec, &cfg, s).map_err(|e| e.to_string())).collect()
        })
        .collect();

    let mut rows = Vec::new();
    let per_point = spec.trials;
    for (p, chunk) in outcomes.chunks(per_point).enumerate() {
        let (a, v, _) = tasks[p * per_point];
        for (s, &scheme) in spec.schemes.iter().enumerate() {
            let mut pool = Pool::default();
            for (t, trial) in chunk.iter().enumerate() {
                match &trial[s] {
                    Ok(r) => {
                        for l in &r.links {
                            pool.sst += l.v_s;
                            pool.delay += l.delay();
                            pool.eta += r.eta[l.from];
                        }
                        pool.links += r.links.len();
                    }
                    Err(e) => pool.errors.push(format!("t{t}:{}", e.replace(['|', '\n'], " "))),
                }
            }
            let mean = |x: f64| if pool.links == 0 { 0.0 } else { x / pool.links as f64 };
            rows.push(ResultRow {
                scheme: scheme.to_string(),
                axis: spec.axis.to_string(),
                axis_value: a,
                variant: spec.variant.to_string(),
                variant_value: v,
                mean_sst: mean(pool.sst),
                mean_delay_s: mean(pool.delay),
                mean_eta: mean(pool.eta),
                trials: spec.trials,
                seed: spec.seed,
                errors: pool.errors.join("|"),
            });
        }
    }
    Ok(rows)
}

pub fn rows_to_csv(rows: &[ResultRow]) -> Result<String> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| Error::InvalidArgument(format!("csv: {e}")))?;
    }
    let body = String::from_utf8(w.into_inner().map_err(|e| Error::InvalidArgument(format!("csv: {e}")))?)
        .expect("csv output is utf-8");
    Ok(format!("{CSV_HEADER}\n{body}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> SweepSpec {
        SweepSpec {
            values: vec![6.0],
            variant: Variant::None,
            trials: 2,
            base: ScenarioConfig { num_kbs: 4, packet_bits: 24_000.0, ..Default::default() },
            solver: SolverParams { max_iters: 2, ..Default::default() },
            ..Default::default()
        }
    }

    #[test]
    fn seeds_depend_on_every_coordinate() {
        let s = scenario_seed(1, 20.0, 0.8, 0);
        assert_ne!(s, scenario_seed(2, 20.0, 0.8, 0));
        assert_ne!(s, scenario_seed(1, 40.0, 0.8, 0));
        assert_ne!(s, scenario_seed(1, 20.0, 1.4, 0));
        assert_ne!(s, scenario_seed(1, 20.0, 0.8, 1));
        assert_ne!(scheme_seed(s, Scheme::Rpd), scheme_seed(s, Scheme::Mpk));
        assert_eq!(s, scenario_seed(1, 20.0, 0.8, 0));
    }

    #[test]
    fn spec_parses_from_toml() {
        let spec = SweepSpec::from_toml_str(
            r#"
            axis = "p_max"
            values = [15.0, 18.0, 21.0]
            variant = "eta_min"
            variant_values = [0.4, 0.6]
            trials = 3
            schemes = ["proposed", "mpk"]
            [base]
            num_users = 10
            [solver]
            max_iters = 4
            [solver.pair]
            sigma = 1
            "#,
        )
        .unwrap();
        assert_eq!(spec.axis, SweepAxis::PMax);
        assert_eq!(spec.solver.pair.sigma, 1);
        let cfg = spec.config_for(18.0, 0.6, 2).unwrap();
        assert_eq!((cfg.p_max_dbm, cfg.eta_min, cfg.num_users), (18.0, 0.6, 10));
        assert!(SweepSpec::from_toml_str("trials = 0").is_err());
        assert!(SweepSpec::from_toml_str("bogus = 1").is_err());
    }

    #[test]
    fn fractional_user_count_rejected() {
        let spec = SweepSpec { values: vec![10.5], ..tiny() };
        assert!(spec.validate().is_err());
    }

    #[test]
    fn single_point_matches_direct_solve() {
        let spec = SweepSpec { trials: 1, schemes: vec![Scheme::Proposed], ..tiny() };
        let rows = run_sweep(&spec).unwrap();
        assert_eq!(rows.len(), 1);
        let cfg = spec.config_for(6.0, 0.0, 0).unwrap();
        let direct = run_solver(&generate_scenario(&cfg).unwrap(), &spec.solver).unwrap();
        assert_eq!(rows[0].mean_sst, direct.mean_link_sst());
        assert_eq!(rows[0].mean_delay_s, direct.mean_link_delay());
        assert_eq!(rows[0].errors, "");
    }

    #[test]
    fn csv_is_deterministic_with_header() {
        let spec = tiny();
        let a = rows_to_csv(&run_sweep(&spec).unwrap()).unwrap();
        let b = rows_to_csv(&run_sweep(&spec).unwrap()).unwrap();
        assert_eq!(a, b);
        assert!(a.starts_with(CSV_HEADER));
        assert_eq!(a.lines().count(), 1 + 3);
    }

    #[test]
    fn failed_trials_are_recorded() {
        // a 1-unit capacity with KBs of size >= 2 cannot satisfy anyone
        let spec = SweepSpec {
            schemes: vec![Scheme::Proposed],
            base: ScenarioConfig { num_kbs: 4, capacity: 1, kb_size_range: [2, 3], ..Default::default() },
            ..tiny()
        };
        let rows = run_sweep(&spec).unwrap();
        assert!(rows[0].errors.starts_with("t0:"));
        assert!(rows[0].errors.contains("|t1:"));
        assert_eq!(rows[0].mean_sst, 0.0);
    }
}
