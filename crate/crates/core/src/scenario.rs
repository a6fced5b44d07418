//! The SSCN world: users dropped on a disk, one eavesdropping center,
//! log-distance path loss, and a KB catalog with Zipf preferences.
//!
//! A [`Scenario`] is immutable once built. It is generated from a
//! [`ScenarioConfig`] and a seed, or assembled from explicit parts for
//! hand-built instances, and it round-trips through a JSON file holding the
//! configuration, positions, KB sizes, preference ranks and interpretation
//! rates (gains and eligibility are recomputed on load).

use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kbset::MAX_KBS;

/// Retries of the position draw before a topology is declared too sparse.
const TOPOLOGY_ATTEMPTS: usize = 100;

/// Convert a power level in dBm to watts.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

/// Linear power gain of the `34 + 40 log10(d)` dB path-loss model.
pub fn channel_gain_from_distance(d: f64) -> Result<f64> {
    if !(d > 0.0) || !d.is_finite() {
        return Err(Error::NonPositiveDistance(d));
    }
    let loss_db = 34.0 + 40.0 * d.log10();
    Ok(10f64.powf(-loss_db / 10.0))
}

/// Zipf probabilities `r^-xi / sum_{e=1..K} e^-xi` for a rank permutation.
pub fn zipf_probabilities(ranks: &[usize], skew: f64) -> Result<Vec<f64>> {
    check_permutation(ranks)?;
    if !(skew >= 0.0) {
        return Err(Error::InvalidArgument(format!("Zipf skew must be >= 0, got {skew}")));
    }
    let norm: f64 = (1..=ranks.len()).map(|e| (e as f64).powf(-skew)).sum();
    Ok(ranks.iter().map(|&r| (r as f64).powf(-skew) / norm).collect())
}

fn check_permutation(ranks: &[usize]) -> Result<()> {
    let k = ranks.len();
    let mut seen = vec![false; k];
    for &r in ranks {
        if r == 0 || r > k || seen[r - 1] {
            return Err(Error::NotAPermutation(k));
        }
        seen[r - 1] = true;
    }
    if k == 0 {
        return Err(Error::NotAPermutation(0));
    }
    Ok(())
}

fn default_config() -> ScenarioConfig {
    ScenarioConfig::default()
}

/// Scenario parameters. Powers are given in dBm and converted to watts once
/// when a [`Scenario`] is built; everything else is SI.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub num_users: usize,
    pub num_kbs: usize,
    pub cell_radius_m: f64,
    pub bandwidth_hz: f64,
    pub packet_bits: f64,
    pub noise_dbm: f64,
    pub p_max_dbm: f64,
    /// Linear SNR threshold for D2D eligibility, evaluated at `p_max`.
    pub snr_threshold: f64,
    pub eta_min: f64,
    pub delay_max_s: f64,
    pub sst_min: f64,
    pub user_skew: f64,
    pub eaves_skew: f64,
    /// Inclusive range of integer KB sizes.
    pub kb_size_range: [u32; 2],
    pub capacity: u32,
    /// Inclusive range of mean interpretation times (s/packet).
    pub interp_time_range_s: [f64; 2],
    /// Draw interpretation times per (user, KB) instead of per KB.
    pub per_user_interp: bool,
    pub rng_seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            num_users: 100,
            num_kbs: 12,
            cell_radius_m: 300.0,
            bandwidth_hz: 1e5,
            packet_bits: 800.0,
            noise_dbm: -111.45,
            p_max_dbm: 21.0,
            snr_threshold: 1.0,
            eta_min: 0.5,
            delay_max_s: 5e-3,
            sst_min: 50.0,
            user_skew: 1.2,
            eaves_skew: 1.2,
            kb_size_range: [1, 5],
            capacity: 24,
            interp_time_range_s: [5e-3, 1e-2],
            per_user_interp: false,
            rng_seed: 0,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.num_users < 2 {
            return bad(format!("num_users must be >= 2, got {}", self.num_users));
        }
        if self.num_kbs == 0 || self.num_kbs > MAX_KBS {
            return bad(format!("num_kbs must be in 1..={MAX_KBS}, got {}", self.num_kbs));
        }
        for (name, v) in [
            ("cell_radius_m", self.cell_radius_m),
            ("bandwidth_hz", self.bandwidth_hz),
            ("packet_bits", self.packet_bits),
            ("snr_threshold", self.snr_threshold),
            ("delay_max_s", self.delay_max_s),
        ] {
            if !(v > 0.0) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        for (name, v) in [
            ("cell_radius_m", self.cell_radius_m),
            ("bandwidth_hz", self.bandwidth_hz),
            ("packet_bits", self.packet_bits),
            ("noise_dbm", self.noise_dbm),
            ("p_max_dbm", self.p_max_dbm),
            ("snr_threshold", self.snr_threshold),
        ] {
            if !v.is_finite() {
                return bad(format!("{name} must be finite, got {v}"));
            }
        }
        if !(0.0..=1.0).contains(&self.eta_min) {
            return bad(format!("eta_min must lie in [0, 1], got {}", self.eta_min));
        }
        if !(self.sst_min >= 0.0) {
            return bad(format!("sst_min must be >= 0, got {}", self.sst_min));
        }
        if !(self.user_skew >= 0.0) || !(self.eaves_skew >= 0.0) {
            return bad("Zipf skews must be >= 0".into());
        }
        let [lo, hi] = self.kb_size_range;
        if lo == 0 || lo > hi {
            return bad(format!("kb_size_range must satisfy 1 <= lo <= hi, got [{lo}, {hi}]"));
        }
        let [tlo, thi] = self.interp_time_range_s;
        if !(tlo > 0.0) || !(tlo <= thi) || !thi.is_finite() {
            return bad(format!(
                "interp_time_range_s must satisfy 0 < lo <= hi, got [{tlo}, {thi}]"
            ));
        }
        Ok(())
    }

    pub fn noise_watts(&self) -> f64 {
        dbm_to_watts(self.noise_dbm)
    }

    pub fn p_max_watts(&self) -> f64 {
        dbm_to_watts(self.p_max_dbm)
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| Error::parse("scenario config", e))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// KB sizes, preference ranks and probabilities, and interpretation rates.
#[derive(Clone, Debug, PartialEq)]
pub struct KbCatalog {
    sizes: Vec<u32>,
    user_ranks: Vec<Vec<usize>>,
    eaves_ranks: Vec<usize>,
    user_probs: Vec<Vec<f64>>,
    eaves_probs: Vec<f64>,
    /// Semantic value `(r_i^k)^-xi_i` of a KB-k triplet sent by user i.
    user_weights: Vec<Vec<f64>>,
    interp_rates: Vec<Vec<f64>>,
}

impl KbCatalog {
    pub fn new(
        sizes: Vec<u32>,
        user_ranks: Vec<Vec<usize>>,
        eaves_ranks: Vec<usize>,
        user_skew: f64,
        eaves_skew: f64,
        interp_rates: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let k = sizes.len();
        if k == 0 || k > MAX_KBS {
            return Err(Error::InvalidArgument(format!("catalog must hold 1..={MAX_KBS} KBs")));
        }
        if user_ranks.len() != interp_rates.len() {
            return Err(Error::InvalidArgument("rank and rate tables differ in user count".into()));
        }
        if eaves_ranks.len() != k || user_ranks.iter().any(|r| r.len() != k) {
            return Err(Error::NotAPermutation(k));
        }
        if interp_rates.iter().flatten().any(|&mu| !(mu > 0.0) || !mu.is_finite())
            || interp_rates.iter().any(|r| r.len() != k)
        {
            return Err(Error::InvalidArgument("interpretation rates must be positive, one per KB".into()));
        }
        let user_probs = user_ranks
            .iter()
            .map(|r| zipf_probabilities(r, user_skew))
            .collect::<Result<Vec<_>>>()?;
        let eaves_probs = zipf_probabilities(&eaves_ranks, eaves_skew)?;
        let user_weights = user_ranks
            .iter()
            .map(|r| r.iter().map(|&rank| (rank as f64).powf(-user_skew)).collect())
            .collect();
        Ok(KbCatalog { sizes, user_ranks, eaves_ranks, user_probs, eaves_probs, user_weights, interp_rates })
    }

    pub fn num_kbs(&self) -> usize {
        self.sizes.len()
    }

    pub fn sizes(&self) -> &[u32] {
        &self.sizes
    }

    pub fn user_ranks(&self, i: usize) -> &[usize] {
        &self.user_ranks[i]
    }

    pub fn eaves_ranks(&self) -> &[usize] {
        &self.eaves_ranks
    }

    pub fn user_probs(&self, i: usize) -> &[f64] {
        &self.user_probs[i]
    }

    pub fn eaves_probs(&self) -> &[f64] {
        &self.eaves_probs
    }

    pub fn user_weights(&self, i: usize) -> &[f64] {
        &self.user_weights[i]
    }

    /// Interpretation rates `mu_j^k` at receiver `j`.
    pub fn interp_rates(&self, j: usize) -> &[f64] {
        &self.interp_rates[j]
    }
}

/// Immutable network state shared by every solver.
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    config: ScenarioConfig,
    noise_w: f64,
    p_max_w: f64,
    positions: Vec<[f64; 2]>,
    eavesdropper: [f64; 2],
    gain_d: Vec<f64>,
    gain_e: Vec<f64>,
    catalog: KbCatalog,
    neighbors: Vec<Vec<usize>>,
}

impl Scenario {
    /// Build from explicit positions; gains follow the path-loss model.
    pub fn from_positions(
        config: ScenarioConfig,
        positions: Vec<[f64; 2]>,
        eavesdropper: [f64; 2],
        catalog: KbCatalog,
    ) -> Result<Self> {
        let m = positions.len();
        let mut gain_d = vec![0.0; m * m];
        for i in 0..m {
            for j in (i + 1)..m {
                let g = channel_gain_from_distance(dist(positions[i], positions[j]))?;
                gain_d[i * m + j] = g;
                gain_d[j * m + i] = g;
            }
        }
        let gain_e = positions
            .iter()
            .map(|&p| channel_gain_from_distance(dist(p, eavesdropper)))
            .collect::<Result<Vec<_>>>()?;
        Scenario::assemble(config, positions, eavesdropper, gain_d, gain_e, catalog)
    }

    /// Build from explicit gains (row-major `M x M` D2D matrix, diagonal
    /// ignored). Eavesdropper gains may be zero, modelling a center out of
    /// range.
    pub fn assemble(
        config: ScenarioConfig,
        positions: Vec<[f64; 2]>,
        eavesdropper: [f64; 2],
        mut gain_d: Vec<f64>,
        gain_e: Vec<f64>,
        catalog: KbCatalog,
    ) -> Result<Self> {
        config.validate()?;
        let m = config.num_users;
        if positions.len() != m || gain_e.len() != m || gain_d.len() != m * m {
            return Err(Error::InvalidArgument(format!("expected data for {m} users")));
        }
        if catalog.num_kbs() != config.num_kbs || catalog.user_ranks.len() != m {
            return Err(Error::InvalidArgument("catalog does not match configuration".into()));
        }
        for i in 0..m {
            gain_d[i * m + i] = 0.0;
            for j in (i + 1)..m {
                let (a, b) = (gain_d[i * m + j], gain_d[j * m + i]);
                if !(a > 0.0) || a != b || !a.is_finite() {
                    return Err(Error::InvalidArgument(format!(
                        "D2D gain ({i}, {j}) must be positive, finite and reciprocal"
                    )));
                }
            }
        }
        if gain_e.iter().any(|&g| !(g >= 0.0) || !g.is_finite()) {
            return Err(Error::InvalidArgument("eavesdropper gains must be finite and >= 0".into()));
        }
        let noise_w = config.noise_watts();
        let p_max_w = config.p_max_watts();
        let neighbors = (0..m)
            .map(|i| {
                (0..m)
                    .filter(|&j| j != i && p_max_w * gain_d[i * m + j] / noise_w >= config.snr_threshold)
                    .collect()
            })
            .collect();
        Ok(Scenario { config, noise_w, p_max_w, positions, eavesdropper, gain_d, gain_e, catalog, neighbors })
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.config
    }

    pub fn catalog(&self) -> &KbCatalog {
        &self.catalog
    }

    pub fn num_users(&self) -> usize {
        self.config.num_users
    }

    pub fn num_kbs(&self) -> usize {
        self.config.num_kbs
    }

    pub fn noise_w(&self) -> f64 {
        self.noise_w
    }

    pub fn p_max_w(&self) -> f64 {
        self.p_max_w
    }

    pub fn bandwidth(&self) -> f64 {
        self.config.bandwidth_hz
    }

    pub fn packet_bits(&self) -> f64 {
        self.config.packet_bits
    }

    pub fn capacity(&self, _user: usize) -> u64 {
        u64::from(self.config.capacity)
    }

    pub fn positions(&self) -> &[[f64; 2]] {
        &self.positions
    }

    pub fn eavesdropper(&self) -> [f64; 2] {
        self.eavesdropper
    }

    pub fn gain_d(&self, i: usize, j: usize) -> f64 {
        self.gain_d[i * self.num_users() + j]
    }

    pub fn gain_e(&self, i: usize) -> f64 {
        self.gain_e[i]
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        dist(self.positions[i], self.positions[j])
    }

    /// Eligible neighbours of `i`, sorted.
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    pub fn is_eligible(&self, i: usize, j: usize) -> bool {
        self.neighbors[i].binary_search(&j).is_ok()
    }

    /// Eligible unordered pairs `(i, j)` with `i < j`, lexicographic.
    pub fn eligible_pairs(&self) -> Vec<(usize, usize)> {
        (0..self.num_users())
            .flat_map(|i| self.neighbors[i].iter().filter(move |&&j| j > i).map(move |&j| (i, j)))
            .collect()
    }

    /// Copy with the eligibility rule `snr(P_max) >= snr_threshold`
    /// re-evaluated under a modified configuration (for sweeps over powers).
    pub fn with_config(&self, config: ScenarioConfig) -> Result<Self> {
        Scenario::assemble(
            config,
            self.positions.clone(),
            self.eavesdropper,
            self.gain_d.clone(),
            self.gain_e.clone(),
            self.catalog.clone(),
        )
    }

    pub fn to_json(&self) -> String {
        let file = ScenarioFile {
            format: SCENARIO_FORMAT.to_string(),
            config: self.config.clone(),
            positions: self.positions.clone(),
            eavesdropper: self.eavesdropper,
            kb_sizes: self.catalog.sizes.clone(),
            user_ranks: self.catalog.user_ranks.clone(),
            eaves_ranks: self.catalog.eaves_ranks.clone(),
            interp_rates: self.catalog.interp_rates.clone(),
        };
        serde_json::to_string_pretty(&file).expect("scenario serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ScenarioFile = serde_json::from_str(text).map_err(|e| Error::parse("scenario file", e))?;
        if file.format != SCENARIO_FORMAT {
            return Err(Error::parse("scenario file", format!("unsupported format {:?}", file.format)));
        }
        file.config.validate()?;
        let catalog = KbCatalog::new(
            file.kb_sizes,
            file.user_ranks,
            file.eaves_ranks,
            file.config.user_skew,
            file.config.eaves_skew,
            file.interp_rates,
        )?;
        Scenario::from_positions(file.config, file.positions, file.eavesdropper, catalog)
    }

    pub fn write_file(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn read_file(path: &Path) -> Result<Self> {
        Scenario::from_json(&std::fs::read_to_string(path)?)
    }
}

const SCENARIO_FORMAT: &str = "sscn-scenario/1";

/// On-disk scenario schema.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    format: String,
    #[serde(default = "default_config")]
    config: ScenarioConfig,
    positions: Vec<[f64; 2]>,
    eavesdropper: [f64; 2],
    kb_sizes: Vec<u32>,
    /// One permutation of `1..=K` per user.
    user_ranks: Vec<Vec<usize>>,
    eaves_ranks: Vec<usize>,
    /// `mu_j^k` in packets/s, one row per user.
    interp_rates: Vec<Vec<f64>>,
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

fn random_permutation(k: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut ranks: Vec<usize> = (1..=k).collect();
    ranks.shuffle(rng);
    ranks
}

fn point_in_disk(radius: f64, rng: &mut ChaCha8Rng) -> [f64; 2] {
    let r = radius * rng.random::<f64>().sqrt();
    let theta = std::f64::consts::TAU * rng.random::<f64>();
    [r * theta.cos(), r * theta.sin()]
}

/// Draw a scenario from `config`; fully determined by `config.rng_seed`.
///
/// Catalog data is drawn first; user and eavesdropper positions are then
/// redrawn until every user has at least one eligible neighbour.
pub fn generate_scenario(config: &ScenarioConfig) -> Result<Scenario> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    let (m, k) = (config.num_users, config.num_kbs);

    let [slo, shi] = config.kb_size_range;
    let sizes: Vec<u32> = (0..k).map(|_| rng.random_range(slo..=shi)).collect();
    let user_ranks: Vec<Vec<usize>> = (0..m).map(|_| random_permutation(k, &mut rng)).collect();
    let eaves_ranks = random_permutation(k, &mut rng);

    let [tlo, thi] = config.interp_time_range_s;
    let draw_rate = |rng: &mut ChaCha8Rng| 1.0 / rng.random_range(tlo..=thi);
    let interp_rates: Vec<Vec<f64>> = if config.per_user_interp {
        (0..m).map(|_| (0..k).map(|_| draw_rate(&mut rng)).collect()).collect()
    } else {
        let shared: Vec<f64> = (0..k).map(|_| draw_rate(&mut rng)).collect();
        vec![shared; m]
    };
    let catalog =
        KbCatalog::new(sizes, user_ranks, eaves_ranks, config.user_skew, config.eaves_skew, interp_rates)?;

    for _ in 0..TOPOLOGY_ATTEMPTS {
        let eavesdropper = point_in_disk(config.cell_radius_m, &mut rng);
        let positions: Vec<[f64; 2]> = (0..m).map(|_| point_in_disk(config.cell_radius_m, &mut rng)).collect();
        let scn = Scenario::from_positions(config.clone(), positions, eavesdropper, catalog.clone())?;
        if scn.neighbors.iter().all(|n| !n.is_empty()) {
            return Ok(scn);
        }
    }
    Err(Error::SparseTopology { attempts: TOPOLOGY_ATTEMPTS })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform_catalog(m: usize, k: usize) -> KbCatalog {
        let ranks: Vec<usize> = (1..=k).collect();
        KbCatalog::new(vec![1; k], vec![ranks.clone(); m], ranks, 1.2, 1.2, vec![vec![150.0; k]; m]).unwrap()
    }

    #[test]
    fn path_loss_values() {
        let g1 = channel_gain_from_distance(1.0).unwrap();
        assert!((g1 / 10f64.powf(-3.4) - 1.0).abs() < 1e-12);
        assert!((g1 - 3.981e-4).abs() < 1e-7);
        let g100 = channel_gain_from_distance(100.0).unwrap();
        assert!((g100 / 10f64.powf(-11.4) - 1.0).abs() < 1e-12);
        assert!((g100 - 3.981e-12).abs() < 1e-15);
        assert!(channel_gain_from_distance(10.0).unwrap() > channel_gain_from_distance(11.0).unwrap());
    }

    #[test]
    fn path_loss_rejects_nonpositive() {
        assert!(matches!(channel_gain_from_distance(0.0), Err(Error::NonPositiveDistance(_))));
        assert!(channel_gain_from_distance(-3.0).is_err());
        assert!(channel_gain_from_distance(f64::NAN).is_err());
    }

    #[test]
    fn zipf_examples() {
        let u = zipf_probabilities(&[3, 1, 4, 2], 0.0).unwrap();
        assert!(u.iter().all(|&p| (p - 0.25).abs() < 1e-15));

        let p = zipf_probabilities(&[1, 2, 3], 1.2).unwrap();
        // the 4-digit hand values sum to 1; the exact third term is 0.15714
        for (got, want) in p.iter().zip([0.5872, 0.2556, 0.1572]) {
            assert!((got - want).abs() < 1e-4, "{got} vs {want}");
        }
        let z = 1.0 + 2f64.powf(-1.2) + 3f64.powf(-1.2);
        assert!((p[2] - 3f64.powf(-1.2) / z).abs() < 1e-15);

        let p = zipf_probabilities(&[2, 1], 1.0).unwrap();
        assert!((p[0] - 1.0 / 3.0).abs() < 1e-15);
        assert!((p[1] - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn zipf_rejects_non_permutations() {
        assert!(zipf_probabilities(&[1, 1, 3], 1.0).is_err());
        assert!(zipf_probabilities(&[0, 1], 1.0).is_err());
        assert!(zipf_probabilities(&[1, 4, 2], 1.0).is_err());
        assert!(zipf_probabilities(&[], 1.0).is_err());
    }

    #[test]
    fn two_users_are_mutual_neighbours() {
        let cfg = ScenarioConfig { num_users: 2, num_kbs: 2, snr_threshold: 1e-9, ..Default::default() };
        let scn = Scenario::from_positions(cfg, vec![[0.0, 0.0], [10.0, 0.0]], [100.0, 100.0], uniform_catalog(2, 2))
            .unwrap();
        assert_eq!(scn.neighbors(0), &[1]);
        assert_eq!(scn.neighbors(1), &[0]);
        assert_eq!(scn.eligible_pairs(), vec![(0, 1)]);
    }

    #[test]
    fn generation_is_deterministic() {
        let cfg = ScenarioConfig { num_users: 12, num_kbs: 6, rng_seed: 42, ..Default::default() };
        let a = generate_scenario(&cfg).unwrap();
        let b = generate_scenario(&cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.to_json(), b.to_json());
        let c = generate_scenario(&ScenarioConfig { rng_seed: 43, ..cfg }).unwrap();
        assert_ne!(a.positions(), c.positions());
    }

    #[test]
    fn generated_ranks_are_permutations() {
        let cfg = ScenarioConfig { num_users: 8, num_kbs: 12, rng_seed: 5, ..Default::default() };
        let scn = generate_scenario(&cfg).unwrap();
        let expect: Vec<usize> = (1..=12).collect();
        for i in 0..8 {
            let mut r = scn.catalog().user_ranks(i).to_vec();
            r.sort_unstable();
            assert_eq!(r, expect);
        }
        let mut r = scn.catalog().eaves_ranks().to_vec();
        r.sort_unstable();
        assert_eq!(r, expect);
    }

    #[test]
    fn generated_scenario_invariants() {
        let cfg = ScenarioConfig { num_users: 15, num_kbs: 5, rng_seed: 9, ..Default::default() };
        let scn = generate_scenario(&cfg).unwrap();
        for i in 0..15 {
            let [x, y] = scn.positions()[i];
            assert!(x.hypot(y) <= cfg.cell_radius_m);
            assert!(scn.gain_e(i) > 0.0);
            assert!(!scn.neighbors(i).is_empty());
            for j in 0..15 {
                if i != j {
                    assert_eq!(scn.gain_d(i, j), scn.gain_d(j, i));
                    assert_eq!(scn.is_eligible(i, j), scn.is_eligible(j, i));
                }
            }
            let s: f64 = scn.catalog().user_probs(i).iter().sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
        // interpretation rates shared across users by default
        assert_eq!(scn.catalog().interp_rates(0), scn.catalog().interp_rates(14));
        for &mu in scn.catalog().interp_rates(0) {
            assert!((100.0..=200.0 + 1e-9).contains(&mu));
        }
    }

    #[test]
    fn over_sparse_topology_is_rejected() {
        // eligibility needs an SNR no pair in the cell can reach
        let cfg = ScenarioConfig { num_users: 4, num_kbs: 2, snr_threshold: 1e30, ..Default::default() };
        assert!(matches!(generate_scenario(&cfg), Err(Error::SparseTopology { attempts: 100 })));
    }

    #[test]
    fn json_round_trip() {
        let cfg = ScenarioConfig { num_users: 6, num_kbs: 4, rng_seed: 3, per_user_interp: true, ..Default::default() };
        let scn = generate_scenario(&cfg).unwrap();
        let back = Scenario::from_json(&scn.to_json()).unwrap();
        assert_eq!(scn, back);
    }

    #[test]
    fn config_validation() {
        assert!(ScenarioConfig::default().validate().is_ok());
        assert!(ScenarioConfig { num_users: 1, ..Default::default() }.validate().is_err());
        assert!(ScenarioConfig { eta_min: 1.5, ..Default::default() }.validate().is_err());
        assert!(ScenarioConfig { kb_size_range: [3, 2], ..Default::default() }.validate().is_err());
        assert!(ScenarioConfig { interp_time_range_s: [0.0, 1.0], ..Default::default() }.validate().is_err());
        assert!(ScenarioConfig { num_kbs: 65, ..Default::default() }.validate().is_err());
        assert!(matches!(ScenarioConfig::from_toml_str("num_users = 'x'"), Err(Error::Parse { .. })));
        let cfg = ScenarioConfig::from_toml_str("num_users = 7\np_max_dbm = 18.0").unwrap();
        assert_eq!(cfg.num_users, 7);
        assert!((cfg.p_max_watts() - 10f64.powf(-1.2)).abs() < 1e-15);
    }
}
