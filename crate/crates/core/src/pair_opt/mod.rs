//! The per-pair subproblem: joint caching for two users plus their transmit
//! powers, maximizing the dual-weighted pair score.

mod power;
mod tabu;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kbset::KbSet;
use crate::metrics::{pair_value_rates, CacheVector};
use crate::queueing::{pk_delay, queue_stats};
use crate::scenario::Scenario;
use crate::ETA_TOL;

pub use power::{optimize_direction, optimize_powers, DirectionTerms, LinkTable};
pub use tabu::{
    initial_kbc, neighborhood, solve_pair_exhaustive, solve_pair_subproblem, solve_pair_subproblem_from, tabu_search,
    tabu_search_from, JointCache, TabuList, TabuPoint,
    TabuState, EXHAUSTIVE_MAX_KBS,
};

/// Multipliers of the two users of a pair. Direction `i -> j` is weighted by
/// the sender's `tau_i` and `rho_i`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PairDuals {
    pub tau_i: f64,
    pub rho_i: f64,
    pub tau_j: f64,
    pub rho_j: f64,
}

impl PairDuals {
    pub fn uniform(tau: f64, rho: f64) -> Self {
        PairDuals { tau_i: tau, rho_i: rho, tau_j: tau, rho_j: rho }
    }

    pub fn swapped(self) -> Self {
        PairDuals { tau_i: self.tau_j, rho_i: self.rho_j, tau_j: self.tau_i, rho_j: self.rho_i }
    }
}

/// How sender powers are chosen once caches are fixed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PowerSearch {
    /// Uniform grid on `[0, P_max]` followed by golden-section refinement
    /// around the best grid point, to `tol * P_max`.
    Continuous { grid: usize, tol: f64 },
    /// `n` equally spaced levels `0, P_max/(n-1), .., P_max`.
    Levels(usize),
}

impl Default for PowerSearch {
    fn default() -> Self {
        PowerSearch::Continuous { grid: 256, tol: 1e-6 }
    }
}

/// Tabu search settings.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PairParams {
    /// Maximum Hamming distance of a move.
    pub sigma: usize,
    pub max_iters: usize,
    pub tabu_len: usize,
    /// Stop once the best score grew by less than this fraction over the
    /// last `growth_window` iterations.
    pub growth_eps: f64,
    pub growth_window: usize,
    pub power: PowerSearch,
}

impl Default for PairParams {
    fn default() -> Self {
        PairParams { sigma: 2, max_iters: 40, tabu_len: 64, growth_eps: 1e-4, growth_window: 10, power: PowerSearch::default() }
    }
}

impl PairParams {
    pub fn validate(&self) -> Result<()> {
        if self.sigma == 0 {
            return Err(Error::InvalidConfig("sigma must be >= 1".into()));
        }
        if !(self.growth_eps >= 0.0) {
            return Err(Error::InvalidConfig("growth_eps must be >= 0".into()));
        }
        match self.power {
            PowerSearch::Continuous { grid, tol } if grid < 2 || !(tol > 0.0) => {
                Err(Error::InvalidConfig("power grid needs >= 2 points and tol > 0".into()))
            }
            PowerSearch::Levels(n) if n < 2 => Err(Error::InvalidConfig("power levels must be >= 2".into())),
            _ => Ok(()),
        }
    }
}

/// Optimized decision of one candidate pair `(i, j)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairSolution {
    pub cache_i: CacheVector,
    pub cache_j: CacheVector,
    pub p_i: f64,
    pub p_j: f64,
    pub omega: f64,
    pub v_s_ij: f64,
    pub v_s_ji: f64,
    pub delta_ij: f64,
    pub delta_ji: f64,
    pub feasible: bool,
}

impl PairSolution {
    /// Placeholder for a pair with no feasible joint cache.
    pub fn infeasible(i: usize, j: usize) -> Self {
        PairSolution {
            cache_i: CacheVector::empty(i),
            cache_j: CacheVector::empty(j),
            p_i: 0.0,
            p_j: 0.0,
            omega: f64::NEG_INFINITY,
            v_s_ij: 0.0,
            v_s_ji: 0.0,
            delta_ij: 0.0,
            delta_ji: 0.0,
            feasible: false,
        }
    }

    /// Evaluate a decision with the reference metric and queue functions.
    pub fn evaluate(
        scn: &Scenario,
        cache_i: CacheVector,
        cache_j: CacheVector,
        p_i: f64,
        p_j: f64,
        duals: PairDuals,
    ) -> Result<Self> {
        let (i, j) = (cache_i.owner, cache_j.owner);
        let fwd = directed_terms(scn, i, j, &cache_i, &cache_j, p_i)?;
        let bwd = directed_terms(scn, j, i, &cache_j, &cache_i, p_j)?;
        let omega = combine(fwd, duals.tau_i, duals.rho_i) + combine(bwd, duals.tau_j, duals.rho_j);
        Ok(PairSolution {
            cache_i,
            cache_j,
            p_i,
            p_j,
            omega,
            v_s_ij: fwd.0,
            v_s_ji: bwd.0,
            delta_ij: fwd.1,
            delta_ji: bwd.1,
            feasible: omega.is_finite() && joint_feasible(scn, i, j, cache_i.kbs, cache_j.kbs),
        })
    }

    pub fn recompute_omega(&self, scn: &Scenario, duals: PairDuals) -> Result<f64> {
        pair_score(scn, self.cache_i.owner, self.cache_j.owner, &self.cache_i, &self.cache_j, self.p_i, self.p_j, duals)
    }
}

/// `(V^S, delta)` of the directed link; `delta = inf` when unstable.
fn directed_terms(
    scn: &Scenario,
    i: usize,
    j: usize,
    ci: &CacheVector,
    cj: &CacheVector,
    p_i: f64,
) -> Result<(f64, f64)> {
    let v = pair_value_rates(scn, i, j, ci, cj, p_i)?;
    let stats = queue_stats(
        ci.kbs,
        cj.kbs,
        scn.catalog().user_probs(i),
        scn.catalog().interp_rates(j),
        v.r_d,
        scn.packet_bits(),
    );
    let delay = match pk_delay(&stats) {
        Ok(d) => d,
        Err(Error::UnstableQueue { .. }) => f64::INFINITY,
        Err(e) => return Err(e),
    };
    Ok((v.v_s, delay))
}

fn combine((v_s, delay): (f64, f64), tau: f64, rho: f64) -> f64 {
    if delay.is_infinite() {
        return f64::NEG_INFINITY;
    }
    (1.0 + rho) * v_s - tau * delay
}

/// Dual-weighted score of the pair under fixed caches and powers. Returns
/// `-inf` when either direction's queue is unstable.
#[allow(clippy::too_many_arguments)]
pub fn pair_score(
    scn: &Scenario,
    i: usize,
    j: usize,
    cache_i: &CacheVector,
    cache_j: &CacheVector,
    p_i: f64,
    p_j: f64,
    duals: PairDuals,
) -> Result<f64> {
    if [duals.tau_i, duals.rho_i, duals.tau_j, duals.rho_j].iter().any(|d| !(*d >= 0.0)) {
        return Err(Error::InvalidArgument("multipliers must be >= 0".into()));
    }
    let fwd = directed_terms(scn, i, j, cache_i, cache_j, p_i)?;
    let bwd = directed_terms(scn, j, i, cache_j, cache_i, p_j)?;
    Ok(combine(fwd, duals.tau_i, duals.rho_i) + combine(bwd, duals.tau_j, duals.rho_j))
}

/// Capacity and satisfaction constraints of both users.
pub fn joint_feasible(scn: &Scenario, i: usize, j: usize, ci: KbSet, cj: KbSet) -> bool {
    user_feasible(scn, i, ci) && user_feasible(scn, j, cj)
}

pub(crate) fn user_feasible(scn: &Scenario, user: usize, cache: KbSet) -> bool {
    let cat = scn.catalog();
    cache.storage(cat.sizes()) <= scn.capacity(user)
        && cache.sum_of(cat.user_probs(user)) >= scn.config().eta_min - ETA_TOL
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{KbCatalog, ScenarioConfig};

    fn single_kb(g_e: f64) -> Scenario {
        let cfg = ScenarioConfig {
            num_users: 2,
            num_kbs: 1,
            bandwidth_hz: 1000.0,
            packet_bits: 800.0,
            noise_dbm: 30.0,
            p_max_dbm: 30.0,
            snr_threshold: 1e-6,
            eta_min: 0.0,
            user_skew: 0.0,
            eaves_skew: 0.0,
            ..Default::default()
        };
        let cat = KbCatalog::new(vec![1], vec![vec![1], vec![1]], vec![1], 0.0, 0.0, vec![vec![200.0]; 2]).unwrap();
        Scenario::assemble(cfg, vec![[0.0, 0.0], [1.0, 0.0]], [5.0, 5.0], vec![0.0, 255.0, 255.0, 0.0], vec![g_e; 2], cat)
            .unwrap()
    }

    fn full(owner: usize) -> CacheVector {
        CacheVector::new(owner, KbSet::full(1))
    }

    #[test]
    fn unweighted_score_is_bidirectional_sst() {
        let scn = single_kb(2f64.powf(0.8) - 1.0);
        let w = pair_score(&scn, 0, 1, &full(0), &full(1), 1.0, 1.0, PairDuals::default()).unwrap();
        assert!((w - 18.0).abs() < 1e-12);
    }

    #[test]
    fn hand_composition_per_direction() {
        // V^S = 9, lambda = 10/s, mu = 200: delta = 10 * 2/200^2 / (2 * 0.95)
        let scn = single_kb(2f64.powf(0.8) - 1.0);
        let delta = 10.0 * 2.0 / 40_000.0 / 1.9;
        let duals = PairDuals::uniform(2.0, 0.5);
        let w = pair_score(&scn, 0, 1, &full(0), &full(1), 1.0, 1.0, duals).unwrap();
        assert!((w - 2.0 * (1.5 * 9.0 - 2.0 * delta)).abs() < 1e-9);
        let s = PairSolution::evaluate(&scn, full(0), full(1), 1.0, 1.0, duals).unwrap();
        assert!((s.delta_ij - delta).abs() < 1e-15);
        assert_eq!(s.omega, w);
    }

    #[test]
    fn zero_overlap_with_strong_eavesdropper_scores_zero() {
        let scn = single_kb(1e6);
        let empty = |o| CacheVector::empty(o);
        let w = pair_score(&scn, 0, 1, &full(0), &empty(1), 1.0, 1.0, PairDuals::default()).unwrap();
        assert_eq!(w, 0.0);
    }

    #[test]
    fn unstable_direction_is_negative_infinity() {
        let mut scn = single_kb(0.0);
        let cfg = ScenarioConfig { packet_bits: 10.0, ..scn.config().clone() };
        scn = scn.with_config(cfg).unwrap();
        let w = pair_score(&scn, 0, 1, &full(0), &full(1), 1.0, 0.0, PairDuals::default()).unwrap();
        assert_eq!(w, f64::NEG_INFINITY);
    }

    #[test]
    fn negative_duals_rejected() {
        let scn = single_kb(0.0);
        let d = PairDuals { tau_i: -1.0, ..Default::default() };
        assert!(pair_score(&scn, 0, 1, &full(0), &full(1), 1.0, 1.0, d).is_err());
    }
}
