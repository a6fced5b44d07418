//! Power optimization with caches fixed.
//!
//! With both caches fixed, the score of direction `i -> j` depends only on
//! `p_i`:
//! `f(p) = (1 + rho_i) [theta_d r_d(p) - theta_e r_e(p)]^+ - tau_i delta(r_d(p))`,
//! so the pair problem splits into two bounded 1-D maximizations.

use std::f64::consts::LN_2;

use crate::error::{Error, Result};
use crate::kbset::KbSet;
use crate::metrics::value_sums;
use crate::queueing::{queue_stats, STABILITY_LIMIT};
use crate::scenario::Scenario;

use super::{PairDuals, PowerSearch};

const GOLDEN_MAX_STEPS: usize = 200;

/// Channel constants of a directed link plus the rates at the fixed search
/// points, shared by every cache candidate of that link.
#[derive(Clone, Debug)]
pub struct LinkTable {
    a_d: f64,
    a_e: f64,
    bandwidth: f64,
    p_max: f64,
    search: PowerSearch,
    /// `(p, r_d(p), r_e(p))`
    points: Vec<(f64, f64, f64)>,
}

impl LinkTable {
    pub fn new(scn: &Scenario, i: usize, j: usize, search: PowerSearch) -> Self {
        let noise = scn.noise_w();
        let mut table = LinkTable {
            a_d: scn.gain_d(i, j) / noise,
            a_e: scn.gain_e(i) / noise,
            bandwidth: scn.bandwidth(),
            p_max: scn.p_max_w(),
            search,
            points: Vec::new(),
        };
        let n = match search {
            PowerSearch::Continuous { grid, .. } => grid,
            PowerSearch::Levels(n) => n,
        };
        let step = table.p_max / (n - 1) as f64;
        table.points = (0..n)
            .map(|g| {
                let p = if g + 1 == n { table.p_max } else { g as f64 * step };
                let (rd, re) = table.rates(p);
                (p, rd, re)
            })
            .collect();
        table
    }

    fn rates(&self, p: f64) -> (f64, f64) {
        let w = self.bandwidth;
        (w * (self.a_d * p).ln_1p() / LN_2, w * (self.a_e * p).ln_1p() / LN_2)
    }
}

/// Cache-dependent coefficients of one direction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DirectionTerms {
    pub theta_d: f64,
    pub theta_e: f64,
    /// Matched preference mass divided by the packet length.
    pub mass_per_bit: f64,
    pub mean_w: f64,
    /// `E[W]^2 + Var(W)`.
    pub second: f64,
}

impl DirectionTerms {
    pub fn new(scn: &Scenario, i: usize, j: usize, ci: KbSet, cj: KbSet) -> Self {
        let l = scn.packet_bits();
        let (legit, leaked) = value_sums(scn, i, ci, cj);
        // with r_d = L the effective arrival rate equals the matched mass
        let stats = queue_stats(ci, cj, scn.catalog().user_probs(i), scn.catalog().interp_rates(j), l, l);
        DirectionTerms {
            theta_d: legit / l,
            theta_e: leaked / l,
            mass_per_bit: stats.lambda_eff / l,
            mean_w: stats.mean_w,
            second: stats.mean_w * stats.mean_w + stats.var_w,
        }
    }

    /// Direction score at the given rates.
    pub fn value(&self, r_d: f64, r_e: f64, tau: f64, rho: f64) -> f64 {
        let v_s = (self.theta_d * r_d - self.theta_e * r_e).max(0.0);
        let lambda = r_d * self.mass_per_bit;
        let delay = if lambda == 0.0 {
            0.0
        } else {
            let u = lambda * self.mean_w;
            if u >= STABILITY_LIMIT {
                return f64::NEG_INFINITY;
            }
            lambda * self.second / (2.0 * (1.0 - u))
        };
        (1.0 + rho) * v_s - tau * delay
    }

    /// Supremum of the powers keeping the queue stable.
    fn stable_power_limit(&self, link: &LinkTable) -> f64 {
        if self.mass_per_bit == 0.0 || self.mean_w == 0.0 {
            return f64::INFINITY;
        }
        let max_rate = STABILITY_LIMIT / (self.mass_per_bit * self.mean_w);
        (max_rate / link.bandwidth * LN_2).exp_m1() / link.a_d
    }
}

/// Best sender power and score of one direction.
pub fn optimize_direction(link: &LinkTable, terms: &DirectionTerms, tau: f64, rho: f64) -> (f64, f64) {
    let f = |p: f64| {
        let (rd, re) = link.rates(p);
        terms.value(rd, re, tau, rho)
    };
    let mut best = 0usize;
    let mut best_val = f64::NEG_INFINITY;
    for (g, &(_, rd, re)) in link.points.iter().enumerate() {
        let v = terms.value(rd, re, tau, rho);
        if v > best_val {
            best = g;
            best_val = v;
        }
    }
    let (p_best, _, _) = link.points[best];
    let tol = match link.search {
        PowerSearch::Levels(_) => return (p_best, best_val),
        PowerSearch::Continuous { tol, .. } => tol * link.p_max,
    };
    let lo = if best == 0 { 0.0 } else { link.points[best - 1].0 };
    let hi = link.points.get(best + 1).map_or(link.p_max, |q| q.0).min(terms.stable_power_limit(link));
    let (p, v) = golden_max(f, lo, hi, tol);
    if v > best_val {
        (p, v)
    } else {
        (p_best, best_val)
    }
}

fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let inv = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv * (b - a);
    let mut d = a + inv * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    let mut steps = 0;
    while b - a > tol && steps < GOLDEN_MAX_STEPS {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv * (b - a);
            fd = f(d);
        }
        steps += 1;
    }
    if fc >= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Best `(p_i, p_j, omega)` for fixed caches.
pub fn optimize_powers(
    scn: &Scenario,
    i: usize,
    j: usize,
    cache_i: KbSet,
    cache_j: KbSet,
    duals: PairDuals,
    search: PowerSearch,
) -> Result<(f64, f64, f64)> {
    if !scn.is_eligible(i, j) {
        return Err(Error::NotEligible { i, j });
    }
    let fwd = LinkTable::new(scn, i, j, search);
    let bwd = LinkTable::new(scn, j, i, search);
    let (p_i, v_i) = optimize_direction(&fwd, &DirectionTerms::new(scn, i, j, cache_i, cache_j), duals.tau_i, duals.rho_i);
    let (p_j, v_j) = optimize_direction(&bwd, &DirectionTerms::new(scn, j, i, cache_j, cache_i), duals.tau_j, duals.rho_j);
    Ok((p_i, p_j, v_i + v_j))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::CacheVector;
    use crate::pair_opt::pair_score;
    use crate::scenario::{generate_scenario, KbCatalog, ScenarioConfig};

    fn two_users(g_d: f64, g_e: f64, packet_bits: f64) -> Scenario {
        let cfg = ScenarioConfig {
            num_users: 2,
            num_kbs: 2,
            packet_bits,
            snr_threshold: 1e-9,
            eta_min: 0.0,
            ..Default::default()
        };
        let cat = KbCatalog::new(vec![1, 1], vec![vec![1, 2], vec![2, 1]], vec![1, 2], 1.2, 1.2, vec![vec![150.0, 120.0]; 2])
            .unwrap();
        Scenario::assemble(cfg, vec![[0.0, 0.0], [30.0, 0.0]], [100.0, 100.0], vec![0.0, g_d, g_d, 0.0], vec![g_e; 2], cat)
            .unwrap()
    }

    #[test]
    fn dominant_channel_uses_full_power() {
        let scn = two_users(1e-9, 1e-16, 24_000.0);
        let (p_i, p_j, w) = optimize_powers(&scn, 0, 1, KbSet::full(2), KbSet::full(2), PairDuals::default(), PowerSearch::default())
            .unwrap();
        assert_eq!(p_i, scn.p_max_w());
        assert_eq!(p_j, scn.p_max_w());
        assert!(w > 0.0);
    }

    #[test]
    fn leaking_link_is_flat_zero() {
        let scn = two_users(1e-13, 1e-9, 24_000.0);
        let (p_i, _, w) =
            optimize_powers(&scn, 0, 1, KbSet::full(2), KbSet::full(2), PairDuals::default(), PowerSearch::default()).unwrap();
        assert_eq!(w, 0.0);
        assert_eq!(p_i, 0.0);
    }

    #[test]
    fn unstable_region_is_excluded() {
        // at P_max the matched arrival rate far exceeds the service rate
        let scn = two_users(1e-9, 1e-16, 800.0);
        let (p_i, p_j, w) =
            optimize_powers(&scn, 0, 1, KbSet::full(2), KbSet::full(2), PairDuals::uniform(1.0, 1.0), PowerSearch::default())
                .unwrap();
        assert!(w.is_finite() && w > 0.0);
        assert!(p_i < scn.p_max_w() && p_j < scn.p_max_w());
        let c0 = CacheVector::new(0, KbSet::full(2));
        let c1 = CacheVector::new(1, KbSet::full(2));
        let check = pair_score(&scn, 0, 1, &c0, &c1, p_i, p_j, PairDuals::uniform(1.0, 1.0)).unwrap();
        assert!((check - w).abs() <= 1e-9 * w.abs());
    }

    #[test]
    fn levels_pick_a_level() {
        let scn = two_users(1e-9, 1e-16, 24_000.0);
        let (p_i, _, _) =
            optimize_powers(&scn, 0, 1, KbSet::full(2), KbSet::full(2), PairDuals::uniform(5.0, 0.0), PowerSearch::Levels(5))
                .unwrap();
        let frac = p_i / scn.p_max_w() * 4.0;
        assert!((frac - frac.round()).abs() < 1e-12);
    }

    #[test]
    fn matches_dense_scan_on_random_links() {
        let cfg = ScenarioConfig { num_users: 6, num_kbs: 4, packet_bits: 4000.0, rng_seed: 3, ..Default::default() };
        let scn = generate_scenario(&cfg).unwrap();
        for (i, j) in scn.eligible_pairs().into_iter().take(6) {
            let ci = KbSet::full(4);
            let cj = KbSet::from_indices([0, 2]);
            let terms = DirectionTerms::new(&scn, i, j, ci, cj);
            let link = LinkTable::new(&scn, i, j, PowerSearch::default());
            for &(tau, rho) in &[(0.0, 0.0), (100.0, 1.0), (5000.0, 0.2)] {
                let (_, v) = optimize_direction(&link, &terms, tau, rho);
                let n = 100_000;
                let scan = (0..=n)
                    .map(|g| {
                        let (rd, re) = link.rates(scn.p_max_w() * g as f64 / n as f64);
                        terms.value(rd, re, tau, rho)
                    })
                    .fold(f64::NEG_INFINITY, f64::max);
                assert!(v >= scan - 1e-6 * scan.abs(), "({i},{j}) tau={tau}: {v} vs scan {scan}");
            }
        }
    }
}
