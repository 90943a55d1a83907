//! Batch invariant checks over random or replayed configurations.
//!
//! Every check is reduced to a nonnegative residual: |r| for identities,
//! max(0, −slack) for inequalities, 0/1 for boolean implications. A check
//! passes when its residual is at most its tolerance.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ReportInput;
use crate::channel::{self, ChannelConfig};
use crate::checks::Check;
use crate::engine::{self, InterferometerConfig, Outcome};
use crate::qmath::{seeded_rng, PIPELINE_TOL};
use crate::sqds::{self, SqdsConfig, SQDS_TOL};

/// Failures kept in the summary; the count is always exact.
pub const MAX_LISTED_FAILURES: usize = 100;

const SUITES: [&str; 3] = ["engine", "channel", "sqds"];
// ChaCha8 stream offsets keep the three suites independent for one seed.
const STREAM_STRIDE: u64 = 1 << 32;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelInput {
    pub w_plus: f64,
    pub epsilon: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SqdsInput {
    pub s_q0: [f64; 3],
    pub s_d0: [f64; 3],
    pub phi_q: f64,
    pub phi_d: f64,
    pub entangling_phase: f64,
}

impl SqdsInput {
    pub fn to_config(&self) -> crate::Result<SqdsConfig> {
        SqdsConfig::new(self.s_q0.into(), self.s_d0.into(), self.phi_q, self.phi_d, self.entangling_phase)
    }

    pub fn from_config(c: &SqdsConfig) -> Self {
        SqdsInput {
            s_q0: c.s_q0().as_array(),
            s_d0: c.s_d0().as_array(),
            phi_q: c.phi_q(),
            phi_d: c.phi_d(),
            entangling_phase: c.entangling_phase(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "suite", content = "config", rename_all = "snake_case")]
pub enum Case {
    Engine(ReportInput),
    Channel(ChannelInput),
    Sqds(SqdsInput),
}

impl Case {
    pub fn suite(&self) -> &'static str {
        match self {
            Case::Engine(_) => "engine",
            Case::Channel(_) => "channel",
            Case::Sqds(_) => "sqds",
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseFile {
    pub cases: Vec<Case>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteSummary {
    pub cases: u64,
    pub failures: u64,
    /// Largest residual seen for each check.
    pub worst: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub index: u64,
    pub check: String,
    pub residual: f64,
    pub tolerance: f64,
    #[serde(flatten)]
    pub case: Case,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifySummary {
    pub seed: Option<u64>,
    pub passed: bool,
    pub suites: BTreeMap<String, SuiteSummary>,
    pub failure_count: u64,
    pub failures: Vec<Failure>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Probe {
    pub name: String,
    pub residual: f64,
    pub tolerance: f64,
}

impl Probe {
    fn new(name: impl Into<String>, residual: f64, tolerance: f64) -> Self {
        Probe { name: name.into(), residual, tolerance }
    }

    fn inequality(name: impl Into<String>, slack: f64, tolerance: f64) -> Self {
        Probe::new(name, if slack.is_nan() { f64::NAN } else { (-slack).max(0.0) }, tolerance)
    }

    fn flag(name: impl Into<String>, ok: bool) -> Self {
        Probe::new(name, if ok { 0.0 } else { 1.0 }, 0.0)
    }

    pub fn passed(&self) -> bool {
        self.residual <= self.tolerance
    }
}

pub fn engine_probes(cfg: &InterferometerConfig) -> Vec<Probe> {
    let mut out = Vec::new();
    let dual = engine::evolve_pipeline(cfg).max_abs_diff(&engine::evolve_closed_form(cfg));
    out.push(Probe::new("dual_path", dual, engine::DUAL_PATH_TOL));

    let r = engine::duality_report(cfg);
    for (name, c) in &r.slacks {
        if let Check::Value(v) = c {
            out.push(Probe::inequality(format!("slack:{name}"), *v, PIPELINE_TOL));
        }
    }
    for name in ["full_visibility", "full_predictability", "full_distinguishability", "full_quality"] {
        out.push(Probe::flag(format!("extreme:{name}"), true));
    }
    for bad in engine::extreme_case_violations(&r) {
        if let Some(p) = out.iter_mut().find(|p| p.name == format!("extreme:{bad}")) {
            p.residual = 1.0;
        }
    }

    let fringe = [Outcome::Plus, Outcome::Minus]
        .iter()
        .map(|&o| (engine::fringe_probability(cfg, o) - engine::measured_fringe_probability(cfg, o)).abs())
        .fold(0.0, f64::max);
    out.push(Probe::new("fringe_closed_form", fringe, engine::DUAL_PATH_TOL));

    let sf2 = engine::final_quanton_bloch(cfg).norm_sq();
    let p2 = r.predictability * r.predictability;
    let v2 = r.visibility * r.visibility;
    out.push(Probe::new("final_bloch_norm", (sf2 - p2 - v2).abs(), 1e-10));
    out.push(Probe::new(
        "entropy_closed_form",
        (r.entropy_increase - 0.5 * (r.a_priori_visibility.powi(2) - v2)).abs(),
        1e-10,
    ));

    let both_pure = (1.0 - cfg.s_q0().norm_sq()).abs() <= engine::PURE_TOL && cfg.rho_d0().is_pure(engine::PURE_TOL);
    if both_pure {
        let d2 = r.distinguishability.powi(2);
        out.push(Probe::new("pure_englert_equality", (1.0 - d2 - v2).abs(), 1e-10));
        out.push(Probe::new("pure_quality_contrast", (1.0 - r.quality.powi(2) - r.contrast.norm_sqr()).abs(), 1e-10));
    }
    out
}

pub fn channel_probes(cfg: &ChannelConfig) -> Vec<Probe> {
    let mut out = Vec::new();
    let d = channel::total_distinguishability(cfg);
    let post = channel::posterior_likelihood(cfg);
    let prior = channel::prior_likelihood(cfg);
    let p = channel::predictability(cfg);
    let q = channel::channel_quality(cfg);

    out.push(Probe::new("max_theorem", (post - 0.5 * (1.0 + d)).abs(), channel::CHANNEL_TOL));
    out.push(Probe::new("prior_likelihood", (prior - 0.5 * (1.0 + p)).abs(), channel::CHANNEL_TOL));
    out.push(Probe::inequality("information_never_hurts", post - prior, channel::CHANNEL_TOL));
    out.push(Probe::new(
        "quality_is_conditional_distance",
        (q - channel::conditional_distance(cfg)).abs(),
        channel::CHANNEL_TOL,
    ));
    out.push(Probe::new(
        "joint_normalized",
        (channel::joint_distribution(cfg).total() - 1.0).abs(),
        channel::CHANNEL_TOL,
    ));

    for (name, other) in [("relabel_sender", cfg.relabel_sender()), ("relabel_receiver", cfg.relabel_receiver())] {
        let same = channel::total_distinguishability(&other) == d && channel::posterior_likelihood(&other) == post;
        out.push(Probe::flag(format!("symmetry:{name}"), same));
    }
    out
}

pub fn sqds_probes(cfg: &SqdsConfig) -> Vec<Probe> {
    let mut out = Vec::new();
    let r = sqds::sqds_report(cfg);
    for (name, c) in &r.residuals {
        if let Check::Value(v) = c {
            let tol = if name == "f_q_forms" { SQDS_TOL.max(r.f_q_forms_tol) } else { SQDS_TOL };
            out.push(Probe::new(format!("residual:{name}"), v.abs(), tol));
        }
    }
    for (name, ok) in &r.hierarchy {
        out.push(Probe::flag(format!("hierarchy:{name}"), *ok));
    }
    out.push(Probe::inequality("mixed_state_bound", r.mixed_state_slack, SQDS_TOL));
    if let Some(f) = r.f_q {
        let tol = SQDS_TOL.max(r.f_q_forms_tol);
        out.push(Probe::inequality("f_q_upper", 1.0 - f, tol));
        out.push(Probe::inequality("f_q_lower", f, SQDS_TOL));
        let xi = sqds::xi(cfg);
        out.push(Probe::inequality("stringency", (1.0 - r.d_q * r.d_q) - xi, SQDS_TOL));
    }

    let e = engine::duality_report(&sqds::to_engine_config(cfg));
    let bridge = [
        (r.q_d - e.quality).abs(),
        (r.d_q - e.distinguishability).abs(),
        (r.v_q - e.visibility).abs(),
        (r.contrast - e.contrast).norm(),
    ]
    .into_iter()
    .fold(0.0, f64::max);
    out.push(Probe::new("engine_bridge", bridge, engine::DUAL_PATH_TOL));

    let s = sqds::sqds_report(&cfg.swap_labels());
    out.push(Probe::flag("label_swap", s.q_q == r.q_d && s.q_d == r.q_q && s.d_q == r.d_d && s.v_q == r.v_d));
    out
}

/// Runs the probes of one case; an invalid configuration is a single failed
/// `config_valid` probe.
pub fn case_probes(case: &Case) -> Vec<Probe> {
    let built = match case {
        Case::Engine(i) => i.to_config().map(|c| engine_probes(&c)),
        Case::Channel(i) => ChannelConfig::new(i.w_plus, i.epsilon).map(|c| channel_probes(&c)),
        Case::Sqds(i) => i.to_config().map(|c| sqds_probes(&c)),
    };
    built.unwrap_or_else(|_| vec![Probe::new("config_valid", 1.0, 0.0)])
}

/// Case `index` of `suite` for `seed`; each case owns its own ChaCha8 stream.
pub fn random_case(suite: &str, seed: u64, index: u64) -> Case {
    let suite_no = SUITES.iter().position(|s| *s == suite).expect("known suite") as u64;
    let mut rng = seeded_rng(seed, suite_no * STREAM_STRIDE + index);
    match suite {
        "engine" => Case::Engine(ReportInput::from_config(&engine::random_config(&mut rng, index.is_multiple_of(2)))),
        "channel" => {
            use rand::Rng;
            Case::Channel(ChannelInput { w_plus: rng.random(), epsilon: rng.random() })
        }
        _ => Case::Sqds(SqdsInput::from_config(&sqds::random_sqds_config(&mut rng, index.is_multiple_of(3)))),
    }
}

fn summarize(seed: Option<u64>, cases: Vec<(u64, Case)>) -> VerifySummary {
    let results: Vec<_> = cases.into_par_iter().map(|(i, c)| (i, case_probes(&c), c)).collect();
    let mut suites: BTreeMap<String, SuiteSummary> = BTreeMap::new();
    let mut failures = Vec::new();
    let mut failure_count = 0;
    for (index, probes, case) in results {
        let s = suites.entry(case.suite().to_string()).or_insert_with(|| SuiteSummary {
            cases: 0,
            failures: 0,
            worst: BTreeMap::new(),
        });
        s.cases += 1;
        let mut failed = false;
        for p in probes {
            let w = s.worst.entry(p.name.clone()).or_insert(0.0);
            if p.residual > *w || p.residual.is_nan() {
                *w = p.residual;
            }
            if !p.passed() {
                failed = true;
                failure_count += 1;
                if failures.len() < MAX_LISTED_FAILURES {
                    failures.push(Failure {
                        index,
                        check: p.name,
                        residual: p.residual,
                        tolerance: p.tolerance,
                        case: case.clone(),
                    });
                }
            }
        }
        s.failures += u64::from(failed);
    }
    VerifySummary { seed, passed: failure_count == 0, suites, failure_count, failures }
}

/// `samples` random cases in each suite.
pub fn verify_random(samples: u64, seed: u64) -> VerifySummary {
    let cases = SUITES.iter().flat_map(|s| (0..samples).map(move |i| (i, random_case(s, seed, i)))).collect();
    summarize(Some(seed), cases)
}

/// Replays explicit cases; `index` is the position in the list.
pub fn run_cases(cases: &[Case]) -> VerifySummary {
    summarize(None, cases.iter().cloned().enumerate().map(|(i, c)| (i as u64, c)).collect())
}
