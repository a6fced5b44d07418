//! Comparison schemes: random power with distance-first pairing (RPD) and
//! maximum power with knowledge-first pairing (MPK). Both use the
//! preference-first caching policy.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kbset::KbSet;
use crate::matching::Pairing;
use crate::metrics::CacheVector;
use crate::scenario::Scenario;
use crate::solution::{evaluate, SolveResult};
use crate::ETA_TOL;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaselineKind {
    Rpd,
    Mpk,
}

impl BaselineKind {
    pub const ALL: [BaselineKind; 2] = [BaselineKind::Rpd, BaselineKind::Mpk];

    pub fn name(self) -> &'static str {
        match self {
            BaselineKind::Rpd => "rpd",
            BaselineKind::Mpk => "mpk",
        }
    }
}

impl fmt::Display for BaselineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for BaselineKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rpd" => Ok(BaselineKind::Rpd),
            "mpk" => Ok(BaselineKind::Mpk),
            other => Err(Error::InvalidArgument(format!("unknown baseline {other:?}"))),
        }
    }
}

/// Per user: take KBs by descending preference (skipping those that do not
/// fit) until `eta_min` is met, then add uniformly random fitting KBs until
/// none fit. Users that cannot reach `eta_min` keep their best-effort cache.
pub fn preference_first_kbc(scn: &Scenario, rng: &mut impl Rng) -> Vec<CacheVector> {
    let cat = scn.catalog();
    let eta_min = scn.config().eta_min - ETA_TOL;
    (0..scn.num_users())
        .map(|u| {
            let probs = cat.user_probs(u);
            let cap = scn.capacity(u);
            let mut order: Vec<usize> = (0..cat.num_kbs()).collect();
            order.sort_by(|&a, &b| probs[b].total_cmp(&probs[a]).then(a.cmp(&b)));
            let mut set = KbSet::EMPTY;
            let mut used = 0u64;
            for k in order {
                if set.sum_of(probs) >= eta_min {
                    break;
                }
                let s = u64::from(cat.sizes()[k]);
                if used + s <= cap {
                    set.insert(k);
                    used += s;
                }
            }
            loop {
                let fitting: Vec<usize> = (0..cat.num_kbs())
                    .filter(|&k| !set.contains(k) && used + u64::from(cat.sizes()[k]) <= cap)
                    .collect();
                if fitting.is_empty() {
                    break;
                }
                let k = fitting[rng.random_range(0..fitting.len())];
                set.insert(k);
                used += u64::from(cat.sizes()[k]);
            }
            CacheVector::new(u, set)
        })
        .collect()
}

/// Greedy global pairing: repeatedly fix the eligible pair that ranks first
/// under `key` (smaller is better, then lexicographic) among free users.
fn greedy_pairing<K: PartialOrd>(scn: &Scenario, key: impl Fn(usize, usize) -> K) -> Pairing {
    let mut pairs: Vec<(K, usize, usize)> = scn.eligible_pairs().into_iter().map(|(i, j)| (key(i, j), i, j)).collect();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("comparable keys").then((a.1, a.2).cmp(&(b.1, b.2))));
    let mut pairing = Pairing::empty(scn.num_users());
    for (_, i, j) in pairs {
        if pairing.partner(i).is_none() && pairing.partner(j).is_none() {
            pairing.pair(i, j);
        }
    }
    pairing
}

/// Nearest-neighbour pairing.
pub fn distance_first_pairing(scn: &Scenario) -> Pairing {
    greedy_pairing(scn, |i, j| scn.distance(i, j))
}

/// Largest-cache-overlap pairing, ties by distance.
pub fn knowledge_first_pairing(scn: &Scenario, caches: &[CacheVector]) -> Pairing {
    greedy_pairing(scn, |i, j| {
        let overlap = caches[i].kbs.intersection(caches[j].kbs).len();
        (-(overlap as f64), scn.distance(i, j))
    })
}

/// Run a comparison scheme. Metrics are computed exactly as for the
/// proposed solver.
pub fn run_baseline(scn: &Scenario, kind: BaselineKind, seed: u64) -> Result<SolveResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let caches = preference_first_kbc(scn, &mut rng);
    let p_max = scn.p_max_w();
    let (pairing, powers) = match kind {
        BaselineKind::Rpd => {
            // (0, P_max]
            let powers = (0..scn.num_users()).map(|_| p_max * (1.0 - rng.random::<f64>())).collect();
            (distance_first_pairing(scn), powers)
        }
        BaselineKind::Mpk => (knowledge_first_pairing(scn, &caches), vec![p_max; scn.num_users()]),
    };
    evaluate(scn, kind.name(), caches, pairing, powers)
}
