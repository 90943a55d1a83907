//! Classical binary channel: a sender emits q± with probabilities w±, the
//! receiver reads d± and the symbol is flipped with probability ε.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qmath::seeded_rng;

/// Consistency checks inside this module use this tolerance.
pub const CHANNEL_TOL: f64 = 1e-14;

/// Both complements are stored so that relabeling (swapping them) is exact.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ChannelConfig {
    w_plus: f64,
    w_minus: f64,
    epsilon: f64,
    fidelity: f64,
}

fn unit_interval(name: &'static str, value: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&value) {
        Ok(value)
    } else {
        Err(Error::OutOfUnitInterval { name, value })
    }
}

impl ChannelConfig {
    pub fn new(w_plus: f64, epsilon: f64) -> Result<Self> {
        let w_plus = unit_interval("w_plus", w_plus)?;
        let epsilon = unit_interval("epsilon", epsilon)?;
        Ok(ChannelConfig { w_plus, w_minus: 1.0 - w_plus, epsilon, fidelity: 1.0 - epsilon })
    }

    pub fn w_plus(&self) -> f64 {
        self.w_plus
    }

    pub fn w_minus(&self) -> f64 {
        self.w_minus
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// 1 − ε
    pub fn fidelity(&self) -> f64 {
        self.fidelity
    }

    /// Swap the sender labels q+ and q−.
    pub fn relabel_sender(&self) -> Self {
        ChannelConfig { w_plus: self.w_minus, w_minus: self.w_plus, ..*self }
    }

    /// Swap the receiver labels d+ and d−, i.e. ε ↔ 1 − ε.
    pub fn relabel_receiver(&self) -> Self {
        ChannelConfig { epsilon: self.fidelity, fidelity: self.epsilon, ..*self }
    }
}

/// p(q, d) indexed as `p[q][d]` with 0 = plus, 1 = minus.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JointDistribution {
    pub plus_plus: f64,
    pub plus_minus: f64,
    pub minus_plus: f64,
    pub minus_minus: f64,
}

impl JointDistribution {
    pub fn total(&self) -> f64 {
        self.plus_plus + self.plus_minus + self.minus_plus + self.minus_minus
    }
}

pub fn joint_distribution(cfg: &ChannelConfig) -> JointDistribution {
    let (wp, wm, e, f) = (cfg.w_plus, cfg.w_minus, cfg.epsilon, cfg.fidelity);
    JointDistribution { plus_plus: wp * f, plus_minus: wp * e, minus_plus: wm * e, minus_minus: wm * f }
}

/// P = |w+ − w−| = |2w+ − 1|, cross-checked against sqrt(2⟨P⟩ − 1) with ⟨P⟩ = w+² + w−².
pub fn predictability(cfg: &ChannelConfig) -> f64 {
    let (wp, wm) = (cfg.w_plus, cfg.w_minus);
    let p = (wp - wm).abs();
    let mean = wp * wp + wm * wm;
    let via_mean = (2.0 * mean - 1.0).max(0.0).sqrt();
    // sqrt amplifies rounding near P = 0, so compare squares there.
    debug_assert!(
        (p - via_mean).abs() <= CHANNEL_TOL || (p * p - via_mean * via_mean).abs() <= CHANNEL_TOL,
        "predictability forms disagree: {p} vs {via_mean}"
    );
    p
}

/// Max{w+, w−} = ½(1 + P)
pub fn prior_likelihood(cfg: &ChannelConfig) -> f64 {
    cfg.w_plus.max(cfg.w_minus)
}

/// L = ½(1 + D)
pub fn likelihood_from_distinguishability(d: f64) -> Result<f64> {
    Ok(0.5 * (1.0 + unit_interval("D", d)?))
}

/// Q = |1 − 2ε|, evaluated as |(1 − ε) − ε|
pub fn channel_quality(cfg: &ChannelConfig) -> f64 {
    (cfg.fidelity - cfg.epsilon).abs()
}

/// P(d|q): 1 − ε when the reading matches the symbol, ε otherwise.
pub fn conditional(cfg: &ChannelConfig, reading_plus: bool, sent_plus: bool) -> f64 {
    if reading_plus == sent_plus {
        cfg.fidelity
    } else {
        cfg.epsilon
    }
}

/// |P(d±|q+) − P(d±|q−)|, checked to be the same for both readings.
pub fn conditional_distance(cfg: &ChannelConfig) -> f64 {
    let dist = |d| (conditional(cfg, d, true) - conditional(cfg, d, false)).abs();
    debug_assert_eq!(dist(true), dist(false));
    dist(true)
}

/// (P_D(d+), P_D(d−))
pub fn receiver_marginals(cfg: &ChannelConfig) -> (f64, f64) {
    let (wp, wm, e, f) = (cfg.w_plus, cfg.w_minus, cfg.epsilon, cfg.fidelity);
    (wp * f + wm * e, wp * e + wm * f)
}

/// ⟨f⟩ = f(d+) P_D(d+) + f(d−) P_D(d−)
pub fn receiver_expectation(cfg: &ChannelConfig, f_plus: f64, f_minus: f64) -> f64 {
    let (a, b) = receiver_marginals(cfg);
    f_plus * a + f_minus * b
}

fn max_via_abs(x: f64, y: f64) -> f64 {
    0.5 * (x + y) + 0.5 * (x - y).abs()
}

/// Likelihood of the bettor who reads d± and backs the larger contribution.
pub fn posterior_likelihood(cfg: &ChannelConfig) -> f64 {
    let j = joint_distribution(cfg);
    let l = j.plus_plus.max(j.minus_plus) + j.plus_minus.max(j.minus_minus);
    let via_identity = max_via_abs(j.plus_plus, j.minus_plus) + max_via_abs(j.plus_minus, j.minus_minus);
    debug_assert!((l - via_identity).abs() <= CHANNEL_TOL);
    l
}

/// D = Max{P, Q}
pub fn total_distinguishability(cfg: &ChannelConfig) -> f64 {
    predictability(cfg).max(channel_quality(cfg))
}

/// Maximum-a-posteriori guess for the sender symbol given the reading.
/// Ties go to the symbol matching the reading.
pub fn map_guess(cfg: &ChannelConfig, reading_plus: bool) -> bool {
    let j = joint_distribution(cfg);
    if reading_plus {
        j.plus_plus >= j.minus_plus
    } else {
        j.plus_minus > j.minus_minus
    }
}

fn simulate<R: Rng>(cfg: &ChannelConfig, n_trials: u64, rng: &mut R) -> u64 {
    let guess_on_plus = map_guess(cfg, true);
    let guess_on_minus = map_guess(cfg, false);
    let mut wins = 0;
    for _ in 0..n_trials {
        let sent_plus = rng.random::<f64>() < cfg.w_plus;
        let flipped = rng.random::<f64>() < cfg.epsilon;
        let read_plus = sent_plus != flipped;
        let guess = if read_plus { guess_on_plus } else { guess_on_minus };
        wins += u64::from(guess == sent_plus);
    }
    wins
}

/// Win fraction of the MAP bettor over `n_trials` simulated uses of the
/// channel, drawn from ChaCha8 stream 0 of `seed`.
pub fn monte_carlo_bet(cfg: &ChannelConfig, n_trials: u64, seed: u64) -> f64 {
    assert!(n_trials >= 1, "monte_carlo_bet needs at least one trial");
    let mut rng = seeded_rng(seed, 0);
    simulate(cfg, n_trials, &mut rng) as f64 / n_trials as f64
}

/// As [`monte_carlo_bet`], split over `shards` workers; shard k draws from
/// ChaCha8 stream k of `seed`. The result depends on `shards` but not on the
/// thread count.
pub fn monte_carlo_bet_sharded(cfg: &ChannelConfig, n_trials: u64, seed: u64, shards: u64) -> f64 {
    assert!(n_trials >= 1 && shards >= 1);
    let base = n_trials / shards;
    let extra = n_trials % shards;
    let wins: u64 = (0..shards)
        .into_par_iter()
        .map(|k| {
            let n = base + u64::from(k < extra);
            simulate(cfg, n, &mut seeded_rng(seed, k))
        })
        .sum();
    wins as f64 / n_trials as f64
}

/// Three binomial standard deviations for a likelihood `l` estimated from `n` trials.
pub fn binomial_3sigma(l: f64, n: u64) -> f64 {
    3.0 * (l * (1.0 - l) / n as f64).sqrt()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelReport {
    pub w_plus: f64,
    pub epsilon: f64,
    pub joint: JointDistribution,
    #[serde(rename = "P")]
    pub predictability: f64,
    #[serde(rename = "Q")]
    pub quality: f64,
    #[serde(rename = "D")]
    pub distinguishability: f64,
    pub prior_likelihood: f64,
    pub posterior_likelihood: f64,
    pub receiver_marginals: (f64, f64),
    pub monte_carlo: Option<MonteCarloSummary>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloSummary {
    pub trials: u64,
    pub seed: u64,
    pub likelihood: f64,
    pub three_sigma: f64,
    pub within_three_sigma: bool,
}

pub fn channel_report(cfg: &ChannelConfig, monte_carlo: Option<(u64, u64)>) -> ChannelReport {
    let posterior = posterior_likelihood(cfg);
    ChannelReport {
        w_plus: cfg.w_plus,
        epsilon: cfg.epsilon,
        joint: joint_distribution(cfg),
        predictability: predictability(cfg),
        quality: channel_quality(cfg),
        distinguishability: total_distinguishability(cfg),
        prior_likelihood: prior_likelihood(cfg),
        posterior_likelihood: posterior,
        receiver_marginals: receiver_marginals(cfg),
        monte_carlo: monte_carlo.map(|(trials, seed)| {
            let likelihood = monte_carlo_bet(cfg, trials, seed);
            let three_sigma = binomial_3sigma(posterior, trials);
            MonteCarloSummary {
                trials,
                seed,
                likelihood,
                three_sigma,
                within_three_sigma: (likelihood - posterior).abs() <= three_sigma,
            }
        }),
    }
}
