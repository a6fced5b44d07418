//! Joint solutions, their per-link metrics and constraint checks.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kbset::KbSet;
use crate::matching::Pairing;
use crate::metrics::{pair_value_rates, CacheVector};
use crate::queueing::{pk_delay, queue_stats};
use crate::scenario::Scenario;
use crate::ETA_TOL;

/// Metrics of one directed matched link.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinkReport {
    pub from: usize,
    pub to: usize,
    pub power_w: f64,
    pub v_s: f64,
    /// Mean queuing delay in seconds; `None` when the queue is unstable.
    pub delay_s: Option<f64>,
    pub utilization: f64,
}

impl LinkReport {
    pub fn delay(&self) -> f64 {
        self.delay_s.unwrap_or(f64::INFINITY)
    }
}

/// A per-link threshold miss. `excess` is `delay - delay_max` or
/// `sst_min - v_s`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub from: usize,
    pub to: usize,
    pub excess: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    /// Hard-constraint failures (capacity, satisfaction, symmetry, power
    /// bounds). Empty for every solution the solvers return.
    pub structural: Vec<String>,
    /// Links whose delay exceeds `delay_max_s`; unstable links have
    /// `excess = inf`.
    pub delay_violations: Vec<Violation>,
    /// Links whose SST falls short of `sst_min`.
    pub sst_violations: Vec<Violation>,
    pub unpaired: Vec<usize>,
}

impl FeasibilityReport {
    pub fn is_structurally_valid(&self) -> bool {
        self.structural.is_empty()
    }

    /// No structural failures and no delay or SST violations on matched links.
    pub fn is_feasible(&self) -> bool {
        self.is_structurally_valid() && self.delay_violations.is_empty() && self.sst_violations.is_empty()
    }

    /// Largest violation relative to its threshold, 0 when none.
    pub fn max_violation(&self, scn: &Scenario) -> f64 {
        let cfg = scn.config();
        let d = self.delay_violations.iter().map(|v| v.excess / cfg.delay_max_s);
        let s = self.sst_violations.iter().map(|v| v.excess / cfg.sst_min);
        d.chain(s).fold(0.0, f64::max)
    }
}

/// One outer iteration of the dual loop.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub t: usize,
    /// Dual function value at the iteration's multipliers.
    pub dual_value: f64,
    pub sst: f64,
    pub max_violation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    pub scheme: String,
    pub caches: Vec<CacheVector>,
    pub pairing: Pairing,
    pub powers: Vec<f64>,
    /// Network SST (value/s).
    pub sst: f64,
    pub links: Vec<LinkReport>,
    pub eta: Vec<f64>,
    pub report: FeasibilityReport,
    pub trace: Vec<TraceRecord>,
    /// Outer iteration that produced this tuple (1-based), if any.
    pub iteration: Option<usize>,
    /// Highest-SST iterate without violations, when the caller tracked one.
    pub best_feasible: Option<Box<SolveResult>>,
}

impl SolveResult {
    /// Mean SST over matched directed links (0 without links).
    pub fn mean_link_sst(&self) -> f64 {
        if self.links.is_empty() {
            return 0.0;
        }
        self.links.iter().map(|l| l.v_s).sum::<f64>() / self.links.len() as f64
    }

    /// Mean queuing delay over matched directed links.
    pub fn mean_link_delay(&self) -> f64 {
        if self.links.is_empty() {
            return 0.0;
        }
        self.links.iter().map(LinkReport::delay).sum::<f64>() / self.links.len() as f64
    }

    /// Mean satisfaction of the senders of matched links.
    pub fn mean_link_eta(&self) -> f64 {
        if self.links.is_empty() {
            return 0.0;
        }
        self.links.iter().map(|l| self.eta[l.from]).sum::<f64>() / self.links.len() as f64
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("result serializes")
    }
}

/// Metrics and checks of a complete decision.
pub fn evaluate(
    scn: &Scenario,
    scheme: &str,
    caches: Vec<CacheVector>,
    pairing: Pairing,
    powers: Vec<f64>,
) -> Result<SolveResult> {
    let m = scn.num_users();
    if caches.len() != m || powers.len() != m || pairing.num_users() != m {
        return Err(Error::InvalidArgument(format!("expected caches, powers and a pairing for {m} users")));
    }
    let cfg = scn.config();
    let mut report = FeasibilityReport { unpaired: pairing.unpaired(), ..Default::default() };
    if !pairing.is_symmetric() {
        report.structural.push("pairing is not symmetric".into());
    }
    for (i, cache) in caches.iter().enumerate() {
        if cache.owner != i {
            report.structural.push(format!("cache {i} is owned by {}", cache.owner));
        }
        if !cache.fits(scn) {
            report.structural.push(format!("user {i} stores {} > capacity {}", cache.storage(scn), scn.capacity(i)));
        }
        let eta = cache.satisfaction(scn);
        if eta < cfg.eta_min - ETA_TOL {
            report.structural.push(format!("user {i} has eta {eta:.6} < {}", cfg.eta_min));
        }
        if cache.kbs.iter().any(|k| k >= scn.num_kbs()) {
            report.structural.push(format!("user {i} caches an unknown KB"));
        }
        let p = powers[i];
        if !(0.0..=scn.p_max_w()).contains(&p) {
            report.structural.push(format!("user {i} power {p} outside [0, {}]", scn.p_max_w()));
        }
    }

    let mut links = Vec::new();
    for (i, j) in pairing.pairs() {
        if !scn.is_eligible(i, j) {
            report.structural.push(format!("users {i} and {j} are not eligible neighbours"));
            continue;
        }
        for (a, b) in [(i, j), (j, i)] {
            let link = link_report(scn, a, b, &caches[a], &caches[b], powers[a])?;
            if link.delay() > cfg.delay_max_s {
                report.delay_violations.push(Violation { from: a, to: b, excess: link.delay() - cfg.delay_max_s });
            }
            if link.v_s < cfg.sst_min {
                report.sst_violations.push(Violation { from: a, to: b, excess: cfg.sst_min - link.v_s });
            }
            links.push(link);
        }
    }
    let sst = links.iter().map(|l| l.v_s).sum();
    let eta = caches.iter().map(|c| c.satisfaction(scn)).collect();
    Ok(SolveResult {
        scheme: scheme.to_string(),
        caches,
        pairing,
        powers,
        sst,
        links,
        eta,
        report,
        trace: Vec::new(),
        iteration: None,
        best_feasible: None,
    })
}

fn link_report(scn: &Scenario, i: usize, j: usize, ci: &CacheVector, cj: &CacheVector, p: f64) -> Result<LinkReport> {
    let v = pair_value_rates(scn, i, j, ci, cj, p)?;
    let stats = queue_stats(ci.kbs, cj.kbs, scn.catalog().user_probs(i), scn.catalog().interp_rates(j), v.r_d, scn.packet_bits());
    let delay_s = match pk_delay(&stats) {
        Ok(d) => Some(d),
        Err(Error::UnstableQueue { .. }) => None,
        Err(e) => return Err(e),
    };
    Ok(LinkReport { from: i, to: j, power_w: p, v_s: v.v_s, delay_s, utilization: stats.utilization })
}

/// The cache of largest satisfaction within the user's capacity (0/1
/// knapsack over KB sizes), with that satisfaction.
pub fn max_satisfaction_cache(scn: &Scenario, user: usize) -> (KbSet, f64) {
    let cat = scn.catalog();
    let cap = scn.capacity(user) as usize;
    let probs = cat.user_probs(user);
    // table[k][c]: best mass using KBs 0..k within storage c
    let k = cat.num_kbs();
    let mut table = vec![vec![0.0f64; cap + 1]; k + 1];
    for n in 0..k {
        let s = cat.sizes()[n] as usize;
        for c in 0..=cap {
            let skip = table[n][c];
            let take = if s <= c { table[n][c - s] + probs[n] } else { f64::NEG_INFINITY };
            table[n + 1][c] = skip.max(take);
        }
    }
    let mut set = KbSet::EMPTY;
    let mut c = cap;
    for n in (0..k).rev() {
        if table[n + 1][c] != table[n][c] {
            set.insert(n);
            c -= cat.sizes()[n] as usize;
        }
    }
    (set, table[k][cap])
}

/// Check that every user can reach `eta_min` on its own.
pub fn check_users_feasible(scn: &Scenario) -> Result<()> {
    let eta_min = scn.config().eta_min;
    for user in 0..scn.num_users() {
        let (_, best_eta) = max_satisfaction_cache(scn, user);
        if best_eta < eta_min - ETA_TOL {
            return Err(Error::InfeasibleUser { user, best_eta, eta_min });
        }
    }
    Ok(())
}

/// Cache of a user with no partner: highest-preference KBs that fit until
/// `eta_min` is met, or the knapsack optimum if that greedy pass falls short.
pub fn solo_cache(scn: &Scenario, user: usize) -> CacheVector {
    let cat = scn.catalog();
    let probs = cat.user_probs(user);
    let eta_min = scn.config().eta_min - ETA_TOL;
    let mut order: Vec<usize> = (0..cat.num_kbs()).collect();
    order.sort_by(|&a, &b| probs[b].total_cmp(&probs[a]).then(a.cmp(&b)));
    let mut set = KbSet::EMPTY;
    let mut used = 0u64;
    for k in order {
        if set.sum_of(probs) >= eta_min {
            break;
        }
        let s = u64::from(cat.sizes()[k]);
        if used + s <= scn.capacity(user) {
            set.insert(k);
            used += s;
        }
    }
    if set.sum_of(probs) < eta_min {
        set = max_satisfaction_cache(scn, user).0;
    }
    CacheVector::new(user, set)
}
