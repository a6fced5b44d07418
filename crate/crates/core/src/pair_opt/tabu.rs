//! Tabu search over the joint `2K`-bit caching vector of a pair.

use std::collections::{HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kbset::KbSet;
use crate::metrics::CacheVector;
use crate::scenario::Scenario;
use crate::solution::solo_cache;
use crate::ETA_TOL;

use super::power::{optimize_direction, DirectionTerms, LinkTable};
use super::{joint_feasible, PairDuals, PairParams, PairSolution, PowerSearch};

/// Largest library the exhaustive pair solver accepts.
pub const EXHAUSTIVE_MAX_KBS: usize = 6;

/// Caches of both users of a pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct JointCache {
    pub ci: KbSet,
    pub cj: KbSet,
}

impl JointCache {
    /// Flip bit `b` of the joint vector; bits `0..k` belong to user `i`.
    fn flip(self, b: usize, k: usize) -> Self {
        if b < k {
            JointCache { ci: self.ci.toggled(b), cj: self.cj }
        } else {
            JointCache { ci: self.ci, cj: self.cj.toggled(b - k) }
        }
    }
}

/// Bounded FIFO of visited joint vectors without duplicates.
#[derive(Clone, Debug, Default)]
pub struct TabuList {
    entries: VecDeque<JointCache>,
    capacity: usize,
}

impl TabuList {
    pub fn new(capacity: usize) -> Self {
        TabuList { entries: VecDeque::with_capacity(capacity), capacity }
    }

    pub fn contains(&self, joint: &JointCache) -> bool {
        self.entries.contains(joint)
    }

    /// Returns false if `joint` was already listed.
    pub fn push(&mut self, joint: JointCache) -> bool {
        if self.capacity == 0 || self.contains(&joint) {
            return false;
        }
        if self.entries.len() == self.capacity {
            self.entries.pop_front();
        }
        self.entries.push_back(joint);
        true
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &JointCache> {
        self.entries.iter()
    }
}

/// A joint cache with its optimized powers and score.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TabuPoint {
    pub joint: JointCache,
    pub p_i: f64,
    pub p_j: f64,
    pub omega: f64,
}

#[derive(Clone, Debug)]
pub struct TabuState {
    pub tabu: TabuList,
    pub best: TabuPoint,
    pub current: TabuPoint,
    pub iteration: usize,
    /// Best score after each iteration, starting with the initial point.
    pub best_trace: Vec<f64>,
}

/// Memoized scorer of joint caches. Each direction depends on the sender's
/// cache and the overlap only.
struct Evaluator<'a> {
    scn: &'a Scenario,
    i: usize,
    j: usize,
    duals: PairDuals,
    fwd: LinkTable,
    bwd: LinkTable,
    memo_fwd: HashMap<(u64, u64), (f64, f64)>,
    memo_bwd: HashMap<(u64, u64), (f64, f64)>,
}

impl<'a> Evaluator<'a> {
    fn new(scn: &'a Scenario, i: usize, j: usize, duals: PairDuals, search: PowerSearch) -> Self {
        Evaluator {
            scn,
            i,
            j,
            duals,
            fwd: LinkTable::new(scn, i, j, search),
            bwd: LinkTable::new(scn, j, i, search),
            memo_fwd: HashMap::new(),
            memo_bwd: HashMap::new(),
        }
    }

    fn eval(&mut self, joint: JointCache) -> TabuPoint {
        let JointCache { ci, cj } = joint;
        let overlap = ci.intersection(cj).bits();
        let (scn, i, j, d) = (self.scn, self.i, self.j, self.duals);
        let fwd = &self.fwd;
        let (p_i, v_i) = *self
            .memo_fwd
            .entry((ci.bits(), overlap))
            .or_insert_with(|| optimize_direction(fwd, &DirectionTerms::new(scn, i, j, ci, cj), d.tau_i, d.rho_i));
        let bwd = &self.bwd;
        let (p_j, v_j) = *self
            .memo_bwd
            .entry((cj.bits(), overlap))
            .or_insert_with(|| optimize_direction(bwd, &DirectionTerms::new(scn, j, i, cj, ci), d.tau_j, d.rho_j));
        TabuPoint { joint, p_i, p_j, omega: v_i + v_j }
    }

    fn solution(&self, point: &TabuPoint) -> Result<PairSolution> {
        PairSolution::evaluate(
            self.scn,
            CacheVector::new(self.i, point.joint.ci),
            CacheVector::new(self.j, point.joint.cj),
            point.p_i,
            point.p_j,
            self.duals,
        )
    }
}

/// Shared starting caches: repeatedly add the KB with the largest combined
/// preference to both users until both reach `eta_min`; on a capacity
/// overflow drop the largest cached KB for good.
pub fn initial_kbc(scn: &Scenario, i: usize, j: usize) -> Result<(CacheVector, CacheVector)> {
    let cat = scn.catalog();
    let (pi, pj, sizes) = (cat.user_probs(i), cat.user_probs(j), cat.sizes());
    let eta_min = scn.config().eta_min - ETA_TOL;
    let capacity = scn.capacity(i).min(scn.capacity(j));
    let mut cache = KbSet::EMPTY;
    let mut dropped = KbSet::EMPTY;
    while cache.sum_of(pi) < eta_min || cache.sum_of(pj) < eta_min {
        let mut pick: Option<usize> = None;
        for k in (0..cat.num_kbs()).filter(|&k| !cache.contains(k) && !dropped.contains(k)) {
            if pick.is_none_or(|b| pi[k] + pj[k] > pi[b] + pj[b]) {
                pick = Some(k);
            }
        }
        let Some(k0) = pick else {
            return Err(Error::InfeasiblePair { i, j });
        };
        cache.insert(k0);
        if cache.storage(sizes) > capacity {
            let mut big = k0;
            for k in cache.iter() {
                if sizes[k] > sizes[big] || (sizes[k] == sizes[big] && k < big) {
                    big = k;
                }
            }
            cache.remove(big);
            dropped.insert(big);
        }
    }
    Ok((CacheVector::new(i, cache), CacheVector::new(j, cache)))
}

/// Feasible, non-tabu joint vectors within Hamming distance `sigma` of
/// `current`, ordered by distance and then by flipped bit positions.
pub fn neighborhood(
    scn: &Scenario,
    i: usize,
    j: usize,
    current: JointCache,
    sigma: usize,
    tabu: &TabuList,
) -> Vec<JointCache> {
    let k = scn.num_kbs();
    let mut out = Vec::new();
    for d in 1..=sigma.min(2 * k) {
        flips(current, 2 * k, k, d, 0, &mut |c| {
            if !tabu.contains(&c) && joint_feasible(scn, i, j, c.ci, c.cj) {
                out.push(c);
            }
        });
    }
    out
}

fn flips(base: JointCache, bits: usize, k: usize, left: usize, start: usize, emit: &mut impl FnMut(JointCache)) {
    if left == 0 {
        emit(base);
        return;
    }
    for b in start..=(bits - left) {
        flips(base.flip(b, k), bits, k, left - 1, b + 1, emit);
    }
}

/// Run the search and return its final state.
pub fn tabu_search(scn: &Scenario, i: usize, j: usize, duals: PairDuals, params: &PairParams) -> Result<TabuState> {
    tabu_search_from(scn, i, j, duals, params, None)
}

/// As [`tabu_search`], starting from `start` instead of [`initial_kbc`] when
/// it is given and feasible.
pub fn tabu_search_from(
    scn: &Scenario,
    i: usize,
    j: usize,
    duals: PairDuals,
    params: &PairParams,
    start: Option<JointCache>,
) -> Result<TabuState> {
    params.validate()?;
    if !scn.is_eligible(i, j) {
        return Err(Error::NotEligible { i, j });
    }
    let start = match start.filter(|c| joint_feasible(scn, i, j, c.ci, c.cj)) {
        Some(c) => c,
        None => match initial_kbc(scn, i, j) {
            Ok((ci, cj)) => JointCache { ci: ci.kbs, cj: cj.kbs },
            // the shared greedy start can miss joint caches that differ per user
            Err(Error::InfeasiblePair { .. }) => {
                let c = JointCache { ci: solo_cache(scn, i).kbs, cj: solo_cache(scn, j).kbs };
                if !joint_feasible(scn, i, j, c.ci, c.cj) {
                    return Err(Error::InfeasiblePair { i, j });
                }
                c
            }
            Err(e) => return Err(e),
        },
    };
    let mut ev = Evaluator::new(scn, i, j, duals, params.power);
    let start = ev.eval(start);
    let mut state = TabuState {
        tabu: TabuList::new(params.tabu_len),
        best: start,
        current: start,
        iteration: 0,
        best_trace: vec![start.omega],
    };
    while state.iteration < params.max_iters {
        let mut step: Option<TabuPoint> = None;
        for c in neighborhood(scn, i, j, state.current.joint, params.sigma, &state.tabu) {
            let pt = ev.eval(c);
            if step.is_none_or(|s| pt.omega > s.omega) {
                step = Some(pt);
            }
        }
        let Some(step) = step else { break };
        state.current = step;
        state.iteration += 1;
        if step.omega > state.best.omega {
            state.best = step;
        } else {
            state.tabu.push(step.joint);
        }
        state.best_trace.push(state.best.omega);

        let t = state.best_trace.len() - 1;
        if params.growth_window > 0 && t >= params.growth_window {
            let old = state.best_trace[t - params.growth_window];
            if state.best.omega - old <= params.growth_eps * old.abs().max(1e-12) {
                break;
            }
        }
    }
    Ok(state)
}

/// Tabu-searched solution of the pair subproblem.
pub fn solve_pair_subproblem(
    scn: &Scenario,
    i: usize,
    j: usize,
    duals: PairDuals,
    params: &PairParams,
) -> Result<PairSolution> {
    solve_pair_subproblem_from(scn, i, j, duals, params, None)
}

pub fn solve_pair_subproblem_from(
    scn: &Scenario,
    i: usize,
    j: usize,
    duals: PairDuals,
    params: &PairParams,
    start: Option<JointCache>,
) -> Result<PairSolution> {
    let state = tabu_search_from(scn, i, j, duals, params, start)?;
    Evaluator::new(scn, i, j, duals, params.power).solution(&state.best)
}

/// Best solution over all feasible joint caches, each with optimized powers.
pub fn solve_pair_exhaustive(
    scn: &Scenario,
    i: usize,
    j: usize,
    duals: PairDuals,
    power: PowerSearch,
) -> Result<PairSolution> {
    let k = scn.num_kbs();
    if k > EXHAUSTIVE_MAX_KBS {
        return Err(Error::TooLarge { what: "KBs", max: EXHAUSTIVE_MAX_KBS, got: k });
    }
    if !scn.is_eligible(i, j) {
        return Err(Error::NotEligible { i, j });
    }
    let mut ev = Evaluator::new(scn, i, j, duals, power);
    let ok_i: Vec<KbSet> = (0..1u64 << k).map(KbSet::from_bits).filter(|&c| super::user_feasible(scn, i, c)).collect();
    let ok_j: Vec<KbSet> = (0..1u64 << k).map(KbSet::from_bits).filter(|&c| super::user_feasible(scn, j, c)).collect();
    let mut best: Option<TabuPoint> = None;
    for &ci in &ok_i {
        for &cj in &ok_j {
            let pt = ev.eval(JointCache { ci, cj });
            if best.is_none_or(|b| pt.omega > b.omega) {
                best = Some(pt);
            }
        }
    }
    let best = best.ok_or(Error::InfeasiblePair { i, j })?;
    ev.solution(&best)
}
