//! Outer subgradient loop over the delay multipliers `tau` and the SST
//! multipliers `rho`.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matching::{build_omega, solve_dup, MatchingMode, OmegaMatrix, Pairing};
use crate::metrics::CacheVector;
use crate::pair_opt::{pair_score, solve_pair_exhaustive, solve_pair_subproblem_from, JointCache, PairDuals, PairParams, PairSolution};
use crate::scenario::Scenario;
use crate::solution::{check_users_feasible, evaluate, solo_cache, LinkReport, SolveResult, TraceRecord};

/// How each pair's caches are searched.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KbcMode {
    #[default]
    Tabu,
    /// Enumerate every joint cache (small libraries only).
    Exhaustive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverParams {
    /// Outer iterations `Q`.
    pub max_iters: usize,
    pub tau0: f64,
    pub rho0: f64,
    /// `nu_1(t) = nu1_0 / sqrt(t)`.
    pub nu1_0: f64,
    /// `nu_2(t) = nu2_0 / sqrt(t)`.
    pub nu2_0: f64,
    pub pair: PairParams,
    pub kbc: KbcMode,
    pub matching: MatchingMode,
    /// Start each pair's search from its previous best caches.
    pub warm_start: bool,
}

impl Default for SolverParams {
    fn default() -> Self {
        SolverParams {
            max_iters: 50,
            tau0: 1.0,
            rho0: 1.0,
            nu1_0: 100.0,
            nu2_0: 0.01,
            pair: PairParams::default(),
            kbc: KbcMode::Tabu,
            matching: MatchingMode::Greedy,
            warm_start: false,
        }
    }
}

impl SolverParams {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::InvalidConfig("max_iters must be >= 1".into()));
        }
        for (name, v) in [("tau0", self.tau0), ("rho0", self.rho0), ("nu1_0", self.nu1_0), ("nu2_0", self.nu2_0)] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::InvalidConfig(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        self.pair.validate()
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let params: SolverParams = toml::from_str(text).map_err(|e| Error::parse("solver parameters", e))?;
        params.validate()?;
        Ok(params)
    }
}

/// Multipliers and step sizes at outer iteration `t`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DualState {
    pub tau: Vec<f64>,
    pub rho: Vec<f64>,
    pub step1: f64,
    pub step2: f64,
    pub t: usize,
}

impl DualState {
    pub fn new(num_users: usize, params: &SolverParams) -> Self {
        DualState {
            tau: vec![params.tau0; num_users],
            rho: vec![params.rho0; num_users],
            step1: params.nu1_0,
            step2: params.nu2_0,
            t: 1,
        }
    }

    pub fn pair(&self, i: usize, j: usize) -> PairDuals {
        PairDuals { tau_i: self.tau[i], rho_i: self.rho[i], tau_j: self.tau[j], rho_j: self.rho[j] }
    }

    /// Move to iteration `t + 1` with diminishing steps.
    pub fn advance(&mut self, params: &SolverParams) {
        self.t += 1;
        let scale = 1.0 / (self.t as f64).sqrt();
        self.step1 = params.nu1_0 * scale;
        self.step2 = params.nu2_0 * scale;
    }

    /// `delta_0 sum(tau) - V_0 sum(rho)`.
    fn constant_terms(&self, scn: &Scenario) -> f64 {
        let cfg = scn.config();
        cfg.delay_max_s * self.tau.iter().sum::<f64>() - cfg.sst_min * self.rho.iter().sum::<f64>()
    }
}

/// Projected subgradient step. Each user's subgradient uses the delay and
/// SST of its outgoing matched link; unpaired users count both as zero.
pub fn update_duals(state: &DualState, links: &[LinkReport], delay_max: f64, sst_min: f64) -> DualState {
    let m = state.tau.len();
    let mut delay = vec![0.0; m];
    let mut value = vec![0.0; m];
    for l in links {
        delay[l.from] += l.delay();
        value[l.from] += l.v_s;
    }
    let mut next = state.clone();
    for u in 0..m {
        next.tau[u] = (state.tau[u] - state.step1 * (delay_max - delay[u])).max(0.0);
        next.rho[u] = (state.rho[u] + state.step2 * (sst_min - value[u])).max(0.0);
    }
    next
}

/// Lagrangian of a full decision at the given multipliers.
pub fn lagrangian_value(
    scn: &Scenario,
    caches: &[CacheVector],
    pairing: &Pairing,
    powers: &[f64],
    duals: &DualState,
) -> Result<f64> {
    pairing.validate(scn)?;
    let mut total = duals.constant_terms(scn);
    for (i, j) in pairing.pairs() {
        total += pair_score(scn, i, j, &caches[i], &caches[j], powers[i], powers[j], duals.pair(i, j))?;
    }
    Ok(total)
}

/// Maximizer of the multiplier-weighted objective for fixed multipliers.
#[derive(Clone, Debug)]
pub struct InnerSolution {
    pub omega: OmegaMatrix,
    pub pairing: Pairing,
    pub caches: Vec<CacheVector>,
    pub powers: Vec<f64>,
    /// Total score of the matched pairs.
    pub weighted_value: f64,
}

/// Solve every pair subproblem, match, and read caches and powers of the
/// matched pairs off their pair solutions.
pub fn inner_solve(
    scn: &Scenario,
    duals: &DualState,
    params: &SolverParams,
    warm: Option<&BTreeMap<(usize, usize), PairSolution>>,
) -> Result<InnerSolution> {
    let pairs = scn.eligible_pairs();
    let solved: Vec<Result<((usize, usize), PairSolution)>> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let d = duals.pair(i, j);
            let start = warm
                .and_then(|w| w.get(&(i, j)))
                .filter(|s| s.feasible)
                .map(|s| JointCache { ci: s.cache_i.kbs, cj: s.cache_j.kbs });
            let sol = match params.kbc {
                KbcMode::Tabu => solve_pair_subproblem_from(scn, i, j, d, &params.pair, start),
                KbcMode::Exhaustive => solve_pair_exhaustive(scn, i, j, d, params.pair.power),
            };
            match sol {
                Ok(s) => Ok(((i, j), s)),
                Err(Error::InfeasiblePair { .. }) => Ok(((i, j), PairSolution::infeasible(i, j))),
                Err(e) => Err(e),
            }
        })
        .collect();
    let solutions = solved.into_iter().collect::<Result<BTreeMap<_, _>>>()?;
    let omega = build_omega(scn, solutions)?;
    let pairing = solve_dup(&omega, params.matching)?;

    let m = scn.num_users();
    let mut caches: Vec<CacheVector> = (0..m).map(|u| solo_cache(scn, u)).collect();
    let mut powers = vec![0.0; m];
    let mut weighted_value = 0.0;
    for (i, j) in pairing.pairs() {
        let s = omega.solution(i, j).ok_or(Error::MissingPairSolution { i, j })?;
        caches[i] = s.cache_i;
        caches[j] = s.cache_j;
        powers[i] = s.p_i;
        powers[j] = s.p_j;
        weighted_value += s.omega;
    }
    Ok(InnerSolution { omega, pairing, caches, powers, weighted_value })
}

/// Run the dual loop for `max_iters` iterations. The result is the last
/// iterate; `best_feasible` holds the highest-SST iterate without delay or
/// SST violations on matched links, if any.
pub fn run_solver(scn: &Scenario, params: &SolverParams) -> Result<SolveResult> {
    params.validate()?;
    check_users_feasible(scn)?;
    let cfg = scn.config();
    let mut state = DualState::new(scn.num_users(), params);
    let mut trace = Vec::with_capacity(params.max_iters);
    let mut best: Option<SolveResult> = None;
    let mut last: Option<SolveResult> = None;
    let mut warm: Option<BTreeMap<(usize, usize), PairSolution>> = None;
    for t in 1..=params.max_iters {
        let inner = inner_solve(scn, &state, params, warm.as_ref())?;
        let dual_value = inner.weighted_value + state.constant_terms(scn);
        let mut res = evaluate(scn, "proposed", inner.caches, inner.pairing, inner.powers)?;
        res.iteration = Some(t);
        trace.push(TraceRecord { t, dual_value, sst: res.sst, max_violation: res.report.max_violation(scn) });
        if res.report.is_feasible() && best.as_ref().is_none_or(|b| res.sst > b.sst) {
            best = Some(res.clone());
        }
        state = update_duals(&state, &res.links, cfg.delay_max_s, cfg.sst_min);
        state.advance(params);
        if params.warm_start {
            warm = Some(
                scn.eligible_pairs()
                    .into_iter()
                    .filter_map(|(i, j)| inner.omega.solution(i, j).map(|s| ((i, j), *s)))
                    .collect(),
            );
        }
        last = Some(res);
    }
    let mut out = last.expect("at least one iteration");
    out.trace = trace;
    out.best_feasible = best.map(Box::new);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kbset::KbSet;
    use crate::pair_opt::solve_pair_subproblem;
    use crate::scenario::{generate_scenario, ScenarioConfig};

    fn state(tau: f64, step1: f64) -> DualState {
        DualState { tau: vec![tau], rho: vec![1.0], step1, step2: 0.01, t: 1 }
    }

    fn link(delay: f64, v_s: f64) -> LinkReport {
        LinkReport { from: 0, to: 1, power_w: 0.1, v_s, delay_s: Some(delay), utilization: 0.1 }
    }

    #[test]
    fn zero_subgradient_leaves_state() {
        let s = state(1.0, 0.1);
        let n = update_duals(&s, &[link(0.005, 50.0)], 0.005, 50.0);
        assert_eq!(n.tau, s.tau);
        assert_eq!(n.rho, s.rho);
    }

    #[test]
    fn delay_violation_raises_tau() {
        let n = update_duals(&state(1.0, 0.1), &[link(0.007, 50.0)], 0.005, 50.0);
        assert!((n.tau[0] - 1.0002).abs() < 1e-12);
    }

    #[test]
    fn projection_binds() {
        let n = update_duals(&state(0.001, 1e6), &[link(0.001, 500.0)], 0.005, 50.0);
        assert_eq!(n.tau[0], 0.0);
        assert_eq!(n.rho[0], 0.0);
    }

    #[test]
    fn unpaired_users_push_rho_up() {
        let s = DualState { tau: vec![1.0, 1.0], rho: vec![0.0, 0.0], step1: 1.0, step2: 0.01, t: 1 };
        let n = update_duals(&s, &[], 0.005, 50.0);
        assert!((n.tau[0] - 0.995).abs() < 1e-15);
        assert!((n.rho[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn step_schedule_diminishes() {
        let p = SolverParams::default();
        let mut s = DualState::new(3, &p);
        s.advance(&p);
        s.advance(&p);
        s.advance(&p);
        assert_eq!(s.t, 4);
        assert!((s.step1 - 50.0).abs() < 1e-12);
        assert!((s.step2 - 0.005).abs() < 1e-15);
    }

    fn small(seed: u64, users: usize) -> Scenario {
        let cfg = ScenarioConfig { num_users: users, num_kbs: 4, packet_bits: 24_000.0, rng_seed: seed, ..Default::default() };
        generate_scenario(&cfg).unwrap()
    }

    #[test]
    fn lagrangian_reductions() {
        let scn = small(2, 4);
        let params = SolverParams { tau0: 0.0, rho0: 0.0, ..Default::default() };
        let duals = DualState::new(4, &params);
        let inner = inner_solve(&scn, &duals, &params, None).unwrap();
        let l = lagrangian_value(&scn, &inner.caches, &inner.pairing, &inner.powers, &duals).unwrap();
        let sst = crate::metrics::network_sst(&scn, &inner.caches, &inner.pairing, &inner.powers).unwrap();
        assert!((l - sst).abs() <= 1e-9 * sst.max(1.0));

        let duals = DualState::new(4, &SolverParams::default());
        let l = lagrangian_value(&scn, &inner.caches, &Pairing::empty(4), &inner.powers, &duals).unwrap();
        let cfg = scn.config();
        assert!((l - (4.0 * cfg.delay_max_s - 4.0 * cfg.sst_min)).abs() < 1e-12);
    }

    #[test]
    fn two_users_collapse_to_the_pair_subproblem() {
        let scn = small(5, 2);
        let params = SolverParams { max_iters: 1, tau0: 0.0, rho0: 0.0, ..Default::default() };
        let res = run_solver(&scn, &params).unwrap();
        let pair = solve_pair_subproblem(&scn, 0, 1, PairDuals::default(), &params.pair).unwrap();
        assert_eq!(res.pairing.pairs(), vec![(0, 1)]);
        assert_eq!(res.caches[0], pair.cache_i);
        assert_eq!(res.caches[1], pair.cache_j);
        assert_eq!(res.powers, vec![pair.p_i, pair.p_j]);
        assert!((res.sst - (pair.v_s_ij + pair.v_s_ji)).abs() < 1e-9 * res.sst.max(1.0));
    }

    #[test]
    fn trace_is_finite_and_duals_stay_nonnegative() {
        let scn = small(8, 6);
        let params = SolverParams { max_iters: 6, ..Default::default() };
        let res = run_solver(&scn, &params).unwrap();
        assert_eq!(res.trace.len(), 6);
        assert!(res.trace.iter().all(|r| r.dual_value.is_finite()));
        assert!(res.report.is_structurally_valid());
        assert_eq!(res.iteration, Some(6));
    }

    #[test]
    fn infeasible_user_is_reported() {
        let cfg = ScenarioConfig { num_users: 3, num_kbs: 4, capacity: 1, kb_size_range: [2, 3], rng_seed: 1, ..Default::default() };
        let scn = generate_scenario(&cfg).unwrap();
        assert!(matches!(run_solver(&scn, &SolverParams::default()), Err(Error::InfeasibleUser { .. })));
    }

    #[test]
    fn warm_start_keeps_structure() {
        let scn = small(4, 5);
        let params = SolverParams { max_iters: 3, warm_start: true, ..Default::default() };
        let res = run_solver(&scn, &params).unwrap();
        assert!(res.report.is_structurally_valid());
        assert!(res.caches.iter().all(|c| c.kbs.bits() < KbSet::full(4).bits() + 1));
    }
}
