//! Knowledge-matched M/G/1 queue at a receiver.
//!
//! Only packets whose KB is cached at both ends enter the receiver's queue.
//! A queued packet's interpretation time is `W = sum_k eps_k I_k`, where
//! `eps_k` is the share of KB-k packets among matched ones and `I_k` is
//! exponential with mean `1/mu_k`; the mean wait follows from the
//! Pollaczek–Khinchine formula on the first two moments of `W`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kbset::KbSet;

/// Utilization at or above which a queue is treated as unstable.
pub const STABILITY_LIMIT: f64 = 1.0 - 1e-9;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct QueueStats {
    /// Matched-packet arrival rate (packets/s).
    pub lambda_eff: f64,
    /// `E[W]` (s).
    pub mean_w: f64,
    /// `Var(W)` (s^2).
    pub var_w: f64,
    pub utilization: f64,
}

impl QueueStats {
    pub fn from_moments(lambda_eff: f64, mean_w: f64, var_w: f64) -> Self {
        QueueStats { lambda_eff, mean_w, var_w, utilization: lambda_eff * mean_w }
    }

    pub fn is_stable(&self) -> bool {
        self.utilization < STABILITY_LIMIT
    }
}

/// Mix and moments of the KB-matched traffic from `i` to `j`.
pub fn queue_stats(
    cache_i: KbSet,
    cache_j: KbSet,
    probs_i: &[f64],
    rates_j: &[f64],
    r_d: f64,
    packet_bits: f64,
) -> QueueStats {
    let matched = cache_i.intersection(cache_j);
    let mass = matched.sum_of(probs_i);
    if matched.is_empty() || mass <= 0.0 {
        return QueueStats::default();
    }
    let (mut mean_w, mut var_w) = (0.0, 0.0);
    for k in matched.iter() {
        let scaled = probs_i[k] / mass / rates_j[k];
        mean_w += scaled;
        var_w += scaled * scaled;
    }
    QueueStats::from_moments(r_d / packet_bits * mass, mean_w, var_w)
}

/// Mean queuing delay of a stable M/G/1 queue.
pub fn pk_delay(stats: &QueueStats) -> Result<f64> {
    if stats.lambda_eff == 0.0 {
        return Ok(0.0);
    }
    if !stats.is_stable() {
        return Err(Error::UnstableQueue { utilization: stats.utilization });
    }
    let second = stats.mean_w * stats.mean_w + stats.var_w;
    Ok(stats.lambda_eff * second / (2.0 * (1.0 - stats.utilization)))
}

/// One Poisson arrival stream (one matched KB).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ArrivalClass {
    /// Packets/s.
    pub rate: f64,
    /// `mu_k`, packets/s.
    pub service_rate: f64,
}

/// How the simulator draws a packet's interpretation time.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ServiceModel {
    /// `W = sum_k eps_k I_k` with independent exponential `I_k`; its first
    /// two moments are exactly those used by [`pk_delay`].
    WeightedSum,
    /// Each packet belongs to one class and takes `Exp(mu_k)`.
    Mixture,
}

/// Arrival classes of the link `i -> j` for use with [`simulate_mg1`].
pub fn link_classes(
    cache_i: KbSet,
    cache_j: KbSet,
    probs_i: &[f64],
    rates_j: &[f64],
    r_d: f64,
    packet_bits: f64,
) -> Vec<ArrivalClass> {
    let lambda_d = r_d / packet_bits;
    cache_i
        .intersection(cache_j)
        .iter()
        .map(|k| ArrivalClass { rate: lambda_d * probs_i[k], service_rate: rates_j[k] })
        .collect()
}

/// FIFO single-server discrete-event simulation via the Lindley recursion.
/// Returns the mean wait in queue (service excluded) over `packets`
/// arrivals after discarding the first 10% as warm-up.
pub fn simulate_mg1(classes: &[ArrivalClass], model: ServiceModel, packets: usize, seed: u64) -> Result<f64> {
    if classes.iter().any(|c| !(c.rate >= 0.0) || !(c.service_rate > 0.0)) {
        return Err(Error::InvalidArgument("arrival rates must be >= 0 and service rates > 0".into()));
    }
    let total: f64 = classes.iter().map(|c| c.rate).sum();
    if total == 0.0 || packets == 0 {
        return Ok(0.0);
    }
    let shares: Vec<f64> = classes.iter().map(|c| c.rate / total).collect();
    let mean_service: f64 = classes.iter().zip(&shares).map(|(c, s)| s / c.service_rate).sum();
    let utilization = total * mean_service;
    if utilization >= STABILITY_LIMIT {
        return Err(Error::UnstableQueue { utilization });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let interarrival = Exp::new(total).expect("positive rate");
    let services: Vec<Exp<f64>> = classes.iter().map(|c| Exp::new(c.service_rate).expect("positive rate")).collect();
    let mut cumulative = Vec::with_capacity(shares.len());
    let mut acc = 0.0;
    for s in &shares {
        acc += s;
        cumulative.push(acc);
    }

    let warmup = packets / 10;
    let (mut wait, mut sum, mut counted) = (0.0f64, 0.0f64, 0usize);
    for n in 0..packets {
        if n >= warmup {
            sum += wait;
            counted += 1;
        }
        let service = match model {
            ServiceModel::WeightedSum => {
                services.iter().zip(&shares).map(|(d, s)| s * d.sample(&mut rng)).sum::<f64>()
            }
            ServiceModel::Mixture => {
                let u: f64 = rng.random();
                let class = cumulative.iter().position(|&c| u < c).unwrap_or(classes.len() - 1);
                services[class].sample(&mut rng)
            }
        };
        wait = (wait + service - interarrival.sample(&mut rng)).max(0.0);
    }
    Ok(sum / counted as f64)
}
