//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on failure.

use std::process::ExitCode;
use std::time::Instant;

use rand::Rng;
use whichway::channel::{self, ChannelConfig};
use whichway::checks::Check;
use whichway::cli::{self, FqValue, Grid};
use whichway::engine::{self, InterferometerConfig};
use whichway::qmath::{density_to_bloch, partial_trace, seeded_rng, BlochVector, ComplexMatrix2, Subsystem};
use whichway::sqds::{self, Branch, SqdsConfig};

const SEED: u64 = 0x5eed_2002;
const N_RANDOM: usize = 10_000;

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn worst(acc: &mut f64, r: f64) {
    if r.is_nan() || r > *acc {
        *acc = r;
    }
}

fn tr_square(m: &ComplexMatrix2) -> f64 {
    (*m * *m).trace().re
}

/// Reduced final Quanton state from the explicit two-qubit pipeline.
fn brute_quanton(cfg: &InterferometerConfig) -> ComplexMatrix2 {
    partial_trace(&engine::evolve_pipeline(cfg), Subsystem::Detector).expect("pipeline output is a state")
}

fn pure_duality_grid() -> Outcome {
    let rows = cli::sweep_fig3(Grid { rows: 101, cols: 101 }).expect("grid points are valid");
    let mut max = 0.0;
    for r in &rows {
        worst(&mut max, r.slack.abs());
    }
    Outcome {
        pass: rows.len() == 101 * 101 && max < 1e-10,
        detail: format!("{} points, max |D²+V²−1| = {max:.2e}", rows.len()),
    }
}

fn central_inequality() -> Outcome {
    let mut rng = seeded_rng(SEED, 2);
    let (mut violation, mut perm) = (0.0, 0.0);
    for _ in 0..N_RANDOM {
        let cfg = engine::random_config(&mut rng, false);
        let r = engine::duality_report(&cfg);
        let (p2, q2, v2) = (r.predictability.powi(2), r.quality.powi(2), r.visibility.powi(2));
        let slack = 1.0 - ((1.0 - p2) * q2 + p2 + v2);
        let permuted = (1.0 - p2) * (1.0 - q2) - v2;
        worst(&mut violation, -slack);
        worst(&mut perm, (slack - permuted).abs());
        worst(&mut perm, (r.slack("central").unwrap() - r.slack("central_permuted").unwrap()).abs());
    }
    Outcome {
        pass: violation < 1e-9 && perm <= 1e-12,
        detail: format!("max violation = {violation:.2e}, permuted-form mismatch = {perm:.2e}"),
    }
}

fn entropy_bound() -> Outcome {
    let mut rng = seeded_rng(SEED, 3);
    let (mut violation, mut brute, mut n) = (0.0_f64, 0.0, 0);
    while n < N_RANDOM {
        let cfg = engine::random_config(&mut rng, n % 2 == 0);
        let r = engine::duality_report(&cfg);
        let v0 = r.a_priori_visibility;
        if v0 <= 1e-3 {
            continue;
        }
        n += 1;
        let ratio = 2.0 * r.entropy_increase / (v0 * v0);
        worst(&mut violation, r.quality.powi(2) - ratio);
        worst(&mut violation, ratio - 1.0);
        let g0 = 1.0 - tr_square(cfg.rho_q0().matrix());
        let gf = 1.0 - tr_square(&brute_quanton(&cfg));
        worst(&mut brute, (r.entropy_increase - (gf - g0)).abs());
    }
    Outcome {
        pass: violation < 1e-9 && brute <= 1e-11,
        detail: format!("{n} configs, max violation = {violation:.2e}, |ΔG − brute| = {brute:.2e}"),
    }
}

fn channel_theorem() -> Outcome {
    let mut exact = 0.0;
    for i in 0..=100 {
        for j in 0..=100 {
            let cfg = ChannelConfig::new(i as f64 / 100.0, j as f64 / 100.0).unwrap();
            let (wp, wm, e, f) = (cfg.w_plus(), cfg.w_minus(), cfg.epsilon(), cfg.fidelity());
            // Classical trace distance between the two weighted reading distributions.
            let d_oracle = (wp * f - wm * e).abs() + (wp * e - wm * f).abs();
            let d = channel::total_distinguishability(&cfg);
            let max_pq = channel::predictability(&cfg).max(channel::channel_quality(&cfg));
            worst(&mut exact, (d - max_pq).abs());
            worst(&mut exact, (d_oracle - d).abs());
            worst(&mut exact, (channel::posterior_likelihood(&cfg) - 0.5 * (1.0 + d)).abs());
        }
    }
    let mut rng = seeded_rng(SEED, 4);
    let mut within = 0;
    for k in 0..100 {
        let cfg = ChannelConfig::new(rng.random(), rng.random()).unwrap();
        let l = channel::posterior_likelihood(&cfg);
        let emp = channel::monte_carlo_bet_sharded(&cfg, 1_000_000, SEED + k, cli::CHANNEL_SHARDS);
        within += usize::from((emp - l).abs() <= channel::binomial_3sigma(l, 1_000_000));
    }
    Outcome {
        pass: exact < 1e-14 && within >= 99,
        detail: format!("grid residual = {exact:.2e}, Monte-Carlo within 3σ: {within}/100"),
    }
}

fn sqds_bridge() -> Outcome {
    let mut rng = seeded_rng(SEED, 5);
    let mut max = 0.0;
    for k in 0..N_RANDOM {
        let cfg = sqds::random_sqds_config(&mut rng, k % 2 == 0);
        let e = engine::duality_report(&sqds::to_engine_config(&cfg));
        worst(&mut max, (sqds::quality_detecton(&cfg) - e.quality).abs());
        worst(&mut max, (sqds::distinguishability_q(&cfg) - e.distinguishability).abs());
        worst(&mut max, (sqds::contrast(&cfg) - e.contrast).norm());
        worst(&mut max, (sqds::visibility_quanton(&cfg) - e.visibility).abs());
    }
    Outcome { pass: max <= 1e-11, detail: format!("max closed-form vs engine = {max:.2e}") }
}

fn fq_bound() -> Outcome {
    let rows = cli::sweep_fq(Grid { rows: 101, cols: 101 }, 0.882).unwrap();
    let (mut range, mut forms) = (0.0, 0.0);
    let mut branches = [0usize; 2];
    let mut undefined = 0;
    for r in &rows {
        match r.value {
            FqValue::Defined(f, b) => {
                worst(&mut range, (f - 1.0).max(-f));
                branches[usize::from(b == Branch::CorrelationDominant)] += 1;
                let cfg = sqds::fq_grid_config(r.p_q, r.q_d, 0.882).unwrap();
                worst(&mut forms, (f - sqds::f_q_by_branch(&cfg).unwrap()).abs());
            }
            FqValue::Undefined(_) => undefined += 1,
            FqValue::Skipped => range = f64::NAN,
        }
    }
    let mut rng = seeded_rng(SEED, 6);
    for _ in 0..N_RANDOM {
        let cfg = sqds::random_sqds_config(&mut rng, false);
        if let (Ok(a), Ok(b)) = (sqds::f_q(&cfg), sqds::f_q_by_branch(&cfg)) {
            worst(&mut range, (a - 1.0).max(-a));
            worst(&mut forms, (a - b).abs());
        }
    }
    // Pure states reach D_Q → 1 where both forms lose ~ε/ξ; held to that bound.
    let mut pure_excess = 0.0_f64;
    for _ in 0..N_RANDOM {
        let cfg = sqds::random_sqds_config(&mut rng, true);
        if let (Ok(a), Ok(b)) = (sqds::f_q(&cfg), sqds::f_q_by_branch(&cfg)) {
            let tol = sqds::f_q_forms_tolerance(&cfg);
            pure_excess = pure_excess.max((a - b).abs() / tol).max((a - 1.0) / tol).max(-a / sqds::SQDS_TOL);
        }
    }
    Outcome {
        pass: range <= 1e-12 && forms <= 1e-12 && branches[0] > 0 && branches[1] > 0 && pure_excess <= 1.0,
        detail: format!(
            "range excess = {range:.2e}, dual-form mismatch = {forms:.2e}, branches P≥R/R>P = {}/{}, \
             undefined at P_Q = 1: {undefined}, pure worst/bound = {pure_excess:.2}",
            branches[0], branches[1]
        ),
    }
}

fn reciprocity() -> Outcome {
    let keys = [
        "weighted_degradation",
        "pure_degradation",
        "mutual_quality",
        "visibility_sum_quanton",
        "visibility_sum_detecton",
        "visibility_sum_scaled",
    ];
    let mut rng = seeded_rng(SEED, 7);
    let (mut max, mut pure, mut evaluated) = (0.0, 0.0, [0usize; 6]);
    let mut record = |cfg: &SqdsConfig| {
        let m = sqds::reciprocity(cfg);
        for (i, k) in keys.iter().enumerate() {
            if let Some(Check::Value(v)) = m.get(*k) {
                evaluated[i] += 1;
                worst(&mut max, v.abs());
                if *k == "pure_degradation" {
                    worst(&mut pure, v.abs());
                }
            }
        }
    };
    for k in 0..N_RANDOM {
        record(&sqds::random_sqds_config(&mut rng, k % 2 == 0));
    }
    // Unpredictable preparations, where the visibility sums apply.
    for _ in 0..N_RANDOM {
        let z = |rng: &mut rand_chacha::ChaCha8Rng| {
            let r: f64 = rng.random_range(0.05..=1.0);
            BlochVector::new(0.0, 0.0, if rng.random::<bool>() { r } else { -r })
        };
        let (sq, sd) = (z(&mut rng), z(&mut rng));
        let phases: [f64; 3] = std::array::from_fn(|_| std::f64::consts::TAU * rng.random::<f64>());
        record(&SqdsConfig::new(sq, sd, phases[0], phases[1], phases[2]).unwrap());
    }
    Outcome {
        pass: max < 1e-12 && pure <= 1e-12 && evaluated.iter().all(|&n| n > 0),
        detail: format!("max residual = {max:.2e}, pure ΔV_Q² − ΔV_D² = {pure:.2e}, evaluated {evaluated:?}"),
    }
}

fn fringe_scan() -> Outcome {
    let mut rng = seeded_rng(SEED, 8);
    let mut max = 0.0;
    for k in 0..1000 {
        let cfg = engine::random_config(&mut rng, k % 2 == 0);
        let scanned = engine::measured_visibility_scan(&cfg, 64).unwrap();
        worst(&mut max, (scanned - engine::visibility(&cfg)).abs());
    }
    Outcome { pass: max <= 1e-10, detail: format!("max |V_scan − |C|V0| = {max:.2e}") }
}

fn final_bloch_norm() -> Outcome {
    let mut rng = seeded_rng(SEED, 9);
    let (mut max, mut n) = (0.0, 0);
    for k in 0..2000 {
        let base = engine::random_config(&mut rng, k % 2 == 0);
        for _ in 0..5 {
            let cfg = base.with_phi(std::f64::consts::TAU * rng.random::<f64>());
            let r = engine::duality_report(&cfg);
            let rho = brute_quanton(&cfg);
            let s_brute = density_to_bloch(&rho).unwrap();
            let s_closed = engine::final_quanton_bloch(&cfg);
            let sf2 = s_closed.norm_sq();
            let pv = r.predictability.powi(2) + r.visibility.powi(2);
            let purity_form = 2.0 * tr_square(&rho) - 1.0;
            worst(&mut max, (sf2 - pv).abs());
            worst(&mut max, (sf2 - purity_form).abs());
            worst(&mut max, (s_brute.minus(&s_closed)).norm());
            n += 1;
        }
    }
    Outcome { pass: max <= 1e-10, detail: format!("{n} (config, φ) pairs, max residual = {max:.2e}") }
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("pure-state duality equality on the (P, Q) grid", pure_duality_grid),
        ("central inequality and its permuted form", central_inequality),
        ("linear-entropy bound", entropy_bound),
        ("classical channel: D = Max{P, Q}, L = (1 + D)/2", channel_theorem),
        ("SQDS closed forms vs engine", sqds_bridge),
        ("f_Q in [0, 1] and dual-form agreement", fq_bound),
        ("reciprocity equalities", reciprocity),
        ("fringe-scan visibility", fringe_scan),
        ("final Quanton Bloch norm", final_bloch_norm),
    ];
    let start = Instant::now();
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let o = run();
        failed += usize::from(!o.pass);
        println!(
            "{} {}. {name}: {} [{:.2}s]",
            if o.pass { "PASS" } else { "FAIL" },
            i + 1,
            o.detail,
            t.elapsed().as_secs_f64()
        );
    }
    println!("{}/{} criteria passed in {:.1}s", criteria.len() - failed, criteria.len(), start.elapsed().as_secs_f64());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
