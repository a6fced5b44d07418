//! Rates, knowledge satisfaction, semantic value and semantic secrecy
//! throughput. Everything here is a pure function of a [`Scenario`] and a
//! candidate decision.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kbset::KbSet;
use crate::matching::Pairing;
use crate::scenario::Scenario;

/// The KBs cached by one user.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CacheVector {
    pub owner: usize,
    pub kbs: KbSet,
}

impl CacheVector {
    pub fn new(owner: usize, kbs: KbSet) -> Self {
        CacheVector { owner, kbs }
    }

    pub fn empty(owner: usize) -> Self {
        CacheVector { owner, kbs: KbSet::EMPTY }
    }

    pub fn storage(&self, scn: &Scenario) -> u64 {
        self.kbs.storage(scn.catalog().sizes())
    }

    /// Capacity constraint of the owner.
    pub fn fits(&self, scn: &Scenario) -> bool {
        self.storage(scn) <= scn.capacity(self.owner)
    }

    pub fn satisfaction(&self, scn: &Scenario) -> f64 {
        satisfaction(self.kbs, scn.catalog().user_probs(self.owner))
    }
}

pub fn snr(power: f64, gain: f64, noise: f64) -> f64 {
    power * gain / noise
}

/// Shannon rates `(r_d, r_e)` in bit/s of the D2D and eavesdropping links.
pub fn link_rates(power: f64, g_d: f64, g_e: f64, bandwidth: f64, noise: f64) -> Result<(f64, f64)> {
    if !(power >= 0.0) || !(g_d >= 0.0) || !(g_e >= 0.0) || !(bandwidth > 0.0) || !(noise > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "link_rates needs p, gains >= 0 and bandwidth, noise > 0 (p={power}, g_d={g_d}, g_e={g_e}, w={bandwidth}, noise={noise})"
        )));
    }
    let rate = |g: f64| bandwidth * snr(power, g, noise).ln_1p() / std::f64::consts::LN_2;
    Ok((rate(g_d), rate(g_e)))
}

/// Semantic knowledge satisfaction: preference mass covered by `cache`.
pub fn satisfaction(cache: KbSet, probs: &[f64]) -> f64 {
    debug_assert!(cache.iter().all(|k| k < probs.len()));
    cache.sum_of(probs)
}

/// Per-second semantic value rates of the directed link `i -> j`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairValueRates {
    pub v_d: f64,
    pub v_e: f64,
    pub v_s: f64,
    pub r_d: f64,
    pub r_e: f64,
}

/// Value sums of sender `i` towards receiver cache `cj`:
/// `(sum_{k in ci & cj} p w, sum_{k in ci} p p_E w)`.
pub(crate) fn value_sums(scn: &Scenario, i: usize, ci: KbSet, cj: KbSet) -> (f64, f64) {
    let cat = scn.catalog();
    let (p, w, pe) = (cat.user_probs(i), cat.user_weights(i), cat.eaves_probs());
    let legit = ci.intersection(cj).iter().map(|k| p[k] * w[k]).sum();
    let leaked = ci.iter().map(|k| p[k] * pe[k] * w[k]).sum();
    (legit, leaked)
}

/// Semantic value, leaked value and SST of the link `i -> j` when `i`
/// transmits with power `p_i`.
pub fn pair_value_rates(
    scn: &Scenario,
    i: usize,
    j: usize,
    cache_i: &CacheVector,
    cache_j: &CacheVector,
    p_i: f64,
) -> Result<PairValueRates> {
    if !scn.is_eligible(i, j) {
        return Err(Error::NotEligible { i, j });
    }
    if cache_i.owner != i || cache_j.owner != j {
        return Err(Error::InvalidArgument(format!(
            "cache owners ({}, {}) do not match link ({i}, {j})",
            cache_i.owner, cache_j.owner
        )));
    }
    let (r_d, r_e) = link_rates(p_i, scn.gain_d(i, j), scn.gain_e(i), scn.bandwidth(), scn.noise_w())?;
    let (legit, leaked) = value_sums(scn, i, cache_i.kbs, cache_j.kbs);
    let l = scn.packet_bits();
    let v_d = r_d / l * legit;
    let v_e = r_e / l * leaked;
    Ok(PairValueRates { v_d, v_e, v_s: (v_d - v_e).max(0.0), r_d, r_e })
}

/// Network SST: sum over matched pairs of both directed link SSTs.
pub fn network_sst(scn: &Scenario, caches: &[CacheVector], pairing: &Pairing, powers: &[f64]) -> Result<f64> {
    pairing.validate(scn)?;
    let m = scn.num_users();
    if caches.len() != m || powers.len() != m {
        return Err(Error::InvalidArgument(format!("expected caches and powers for {m} users")));
    }
    let mut total = 0.0;
    for (i, j) in pairing.pairs() {
        total += pair_value_rates(scn, i, j, &caches[i], &caches[j], powers[i])?.v_s;
        total += pair_value_rates(scn, j, i, &caches[j], &caches[i], powers[j])?.v_s;
    }
    Ok(total)
}
