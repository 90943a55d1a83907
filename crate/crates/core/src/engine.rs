//! Two-way interferometer with a quantum which-way detector.
//!
//! The Quanton passes a beam splitter (BS), a split-beam section where the
//! detector evolves as `U±† ρ_D U±` on the σz = ±1 way and the Quanton picks
//! up `e^{±iφ/2}`, and a beam merger (BM) that undoes the BS. The joint state
//! is computed twice, by multiplying out the 4×4 pipeline and by the closed
//! form for ρ^(f); [`evolve_full`] refuses to answer when they disagree.
//!
//! All scalar duality quantities (P, V0, V, C, D, Q, linear entropies) are
//! closed forms over the configuration. The brute-force joint state is what
//! the tests and the fringe scan measure them against.

use std::f64::consts::{FRAC_PI_2, TAU};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::checks::{Check, CheckMap};
use crate::error::{Error, Result};
use crate::qmath::{
    self, bloch_to_density, complex_json, random_bloch, random_density, random_unitary, ry, tensor, BlochVector,
    ComplexMatrix2, ComplexMatrix4, DensityOperator, Subsystem, ALGEBRAIC_TOL, C64, PIPELINE_TOL,
};

/// Closed form and matrix pipeline must agree to this level; above
/// [`PIPELINE_TOL`] the conventions are treated as broken.
pub const DUAL_PATH_TOL: f64 = 1e-11;
/// `entropy_bound` is evaluated only when V0 exceeds this.
pub const MIN_VISIBILITY_FOR_ENTROPY: f64 = 1e-8;
/// `q_vs_d_pure` is evaluated only when 1 − P² exceeds this.
pub const MIN_ONE_MINUS_P2: f64 = 1e-10;
/// Purity tolerance for deciding that both initial states are pure.
pub const PURE_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InterferometerConfig {
    s_q0: BlochVector,
    rho_d0: DensityOperator,
    u_plus: ComplexMatrix2,
    u_minus: ComplexMatrix2,
    phi: f64,
}

impl InterferometerConfig {
    pub fn new(
        s_q0: BlochVector,
        rho_d0: DensityOperator,
        u_plus: ComplexMatrix2,
        u_minus: ComplexMatrix2,
        phi: f64,
    ) -> Result<Self> {
        s_q0.check(ALGEBRAIC_TOL)?;
        for u in [&u_plus, &u_minus] {
            if !u.is_finite() {
                return Err(Error::NonFinite);
            }
            let dev = u.unitarity_deviation();
            if dev > ALGEBRAIC_TOL {
                return Err(Error::NotUnitary { deviation: dev });
            }
        }
        if !phi.is_finite() {
            return Err(Error::NonFinite);
        }
        Ok(InterferometerConfig { s_q0, rho_d0, u_plus, u_minus, phi })
    }

    /// Detector switched off: `U+ = U− = 1`.
    pub fn without_detector(s_q0: BlochVector, rho_d0: DensityOperator, phi: f64) -> Result<Self> {
        let id = ComplexMatrix2::identity();
        Self::new(s_q0, rho_d0, id, id, phi)
    }

    pub fn s_q0(&self) -> BlochVector {
        self.s_q0
    }

    pub fn rho_d0(&self) -> &DensityOperator {
        &self.rho_d0
    }

    pub fn u_plus(&self) -> &ComplexMatrix2 {
        &self.u_plus
    }

    pub fn u_minus(&self) -> &ComplexMatrix2 {
        &self.u_minus
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn with_phi(mut self, phi: f64) -> Self {
        self.phi = phi;
        self
    }

    pub fn rho_q0(&self) -> DensityOperator {
        // s_q0 was validated in `new`.
        bloch_to_density(self.s_q0).expect("validated Bloch vector")
    }
}

/// Output-port reading of σz.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Plus,
    Minus,
}

impl Outcome {
    pub fn sign(self) -> f64 {
        match self {
            Outcome::Plus => 1.0,
            Outcome::Minus => -1.0,
        }
    }
}

/// exp(−iπσy/4)
pub fn beam_splitter() -> ComplexMatrix2 {
    ry(FRAC_PI_2)
}

/// `B ρ B†` with B = exp(−iπσy/4).
pub fn beam_split(rho: &DensityOperator) -> DensityOperator {
    rho.evolve(&beam_splitter())
}

/// `B† ρ B`, the inverse of [`beam_split`].
pub fn beam_merge(rho: &DensityOperator) -> DensityOperator {
    rho.evolve_adjoint(&beam_splitter())
}

/// ½(1+σz)e^{iφ/2} ⊗ U+ + ½(1−σz)e^{−iφ/2} ⊗ U−
pub fn split_beam_unitary(cfg: &InterferometerConfig) -> ComplexMatrix4 {
    let half = 0.5 * cfg.phi;
    let plus = ComplexMatrix2::diag([C64::from_polar(1.0, half), C64::new(0.0, 0.0)]);
    let minus = ComplexMatrix2::diag([C64::new(0.0, 0.0), C64::from_polar(1.0, -half)]);
    tensor(&plus, &cfg.u_plus) + tensor(&minus, &cfg.u_minus)
}

pub fn initial_state(cfg: &InterferometerConfig) -> ComplexMatrix4 {
    tensor(cfg.rho_q0().matrix(), cfg.rho_d0.matrix())
}

/// Final joint state by multiplying out BS, split beam and BM on ρ^(0).
///
/// The split-beam operator S is applied as `S† ρ S`, matching the detector
/// ways `U±† ρ_D U±`.
pub fn evolve_pipeline(cfg: &InterferometerConfig) -> ComplexMatrix4 {
    let bs = tensor(&beam_splitter(), &ComplexMatrix2::identity());
    let s = split_beam_unitary(cfg);
    let after_bs = bs.conjugate(&initial_state(cfg));
    let after_ways = s.adjoint() * after_bs * s;
    bs.adjoint() * after_ways * bs
}

/// Final joint state from the four-term closed form.
pub fn evolve_closed_form(cfg: &InterferometerConfig) -> ComplexMatrix4 {
    let s = cfg.s_q0;
    let rho = cfg.rho_d0.matrix();
    let (up, um) = (&cfg.u_plus, &cfg.u_minus);
    let id = ComplexMatrix2::identity();
    let sx = ComplexMatrix2::pauli_x();
    let sy = ComplexMatrix2::pauli_y();
    let sz = ComplexMatrix2::pauli_z();
    let i = C64::new(0.0, 1.0);

    let way_plus = up.adjoint() * *rho * *up;
    let way_minus = um.adjoint() * *rho * *um;
    let cross = up.adjoint() * *rho * *um;
    let cross_back = um.adjoint() * *rho * *up;

    let amp = C64::new(s.z, -s.y);
    let phase = C64::from_polar(1.0, -cfg.phi);

    tensor(&((id - sx) * (0.25 * (1.0 - s.x))), &way_plus)
        + tensor(&((id + sx) * (0.25 * (1.0 + s.x))), &way_minus)
        + tensor(&((sz + sy * i) * (amp * phase * 0.25)), &cross)
        + tensor(&((sz - sy * i) * (amp.conj() * phase.conj() * 0.25)), &cross_back)
}

/// Final joint state ρ^(f). Returns the pipeline result after checking it
/// against the closed form.
pub fn evolve_full(cfg: &InterferometerConfig) -> Result<ComplexMatrix4> {
    let pipeline = evolve_pipeline(cfg);
    let closed = evolve_closed_form(cfg);
    let deviation = pipeline.max_abs_diff(&closed);
    if deviation > PIPELINE_TOL || deviation.is_nan() {
        return Err(Error::ConventionViolation { deviation });
    }
    Ok(pipeline)
}

/// C = tr{U+† ρ_D U−}
pub fn contrast(rho_d0: &DensityOperator, u_plus: &ComplexMatrix2, u_minus: &ComplexMatrix2) -> C64 {
    (u_plus.adjoint() * *rho_d0.matrix() * *u_minus).trace()
}

pub fn config_contrast(cfg: &InterferometerConfig) -> C64 {
    contrast(&cfg.rho_d0, &cfg.u_plus, &cfg.u_minus)
}

/// (s_z − i s_y) C e^{−iφ}: the complex fringe amplitude. Its real part is
/// the σz expectation at the output; its modulus is V.
pub fn fringe_amplitude(cfg: &InterferometerConfig) -> C64 {
    C64::new(cfg.s_q0.z, -cfg.s_q0.y) * config_contrast(cfg) * C64::from_polar(1.0, -cfg.phi)
}

/// p± = ½{1 ± Re[(s_z − i s_y) C e^{−iφ}]}
pub fn fringe_probability(cfg: &InterferometerConfig, outcome: Outcome) -> f64 {
    0.5 * (1.0 + outcome.sign() * fringe_amplitude(cfg).re)
}

/// p± measured on the brute-force final state: tr{(½(1 ± σz) ⊗ 1) ρ^(f)}.
pub fn measured_fringe_probability(cfg: &InterferometerConfig, outcome: Outcome) -> f64 {
    let rho_q = evolve_pipeline(cfg).trace_out(Subsystem::Detector);
    let k = if outcome == Outcome::Plus { 0 } else { 1 };
    rho_q.get(k, k).re
}

/// V0 = sqrt(s_y² + s_z²)
pub fn a_priori_visibility(s_q0: &BlochVector) -> f64 {
    s_q0.y.hypot(s_q0.z)
}

/// P = |s_x|
pub fn predictability(s_q0: &BlochVector) -> f64 {
    s_q0.x.abs()
}

/// (w+, w−) = (½(1 − s_x), ½(1 + s_x))
pub fn way_probabilities(s_q0: &BlochVector) -> (f64, f64) {
    (0.5 * (1.0 - s_q0.x), 0.5 * (1.0 + s_q0.x))
}

/// V = |C| V0
pub fn visibility(cfg: &InterferometerConfig) -> f64 {
    config_contrast(cfg).norm() * a_priori_visibility(&cfg.s_q0)
}

fn fringe_scan(cfg: &InterferometerConfig, n_phi: usize) -> Result<Vec<(f64, f64)>> {
    if n_phi < 8 {
        return Err(Error::TooFewPhaseSamples(n_phi));
    }
    Ok((0..n_phi)
        .map(|k| {
            let phi = TAU * k as f64 / n_phi as f64;
            (phi, measured_fringe_probability(&cfg.with_phi(phi), Outcome::Plus))
        })
        .collect())
}

/// Visibility from a φ scan of the brute-force p+: four times the modulus of
/// the first discrete Fourier coefficient over `n_phi` uniform samples.
pub fn measured_visibility_scan(cfg: &InterferometerConfig, n_phi: usize) -> Result<f64> {
    let scan = fringe_scan(cfg, n_phi)?;
    let c1: C64 = scan.iter().map(|&(phi, p)| C64::from_polar(p, phi)).sum::<C64>() / n_phi as f64;
    Ok(4.0 * c1.norm())
}

/// Michelson contrast (max − min)/(max + min) of the same scan. Exact only
/// when the fringe extrema fall on sample points.
pub fn measured_visibility_extrema(cfg: &InterferometerConfig, n_phi: usize) -> Result<f64> {
    let scan = fringe_scan(cfg, n_phi)?;
    let max = scan.iter().map(|s| s.1).fold(f64::NEG_INFINITY, f64::max);
    let min = scan.iter().map(|s| s.1).fold(f64::INFINITY, f64::min);
    Ok((max - min) / (max + min))
}

/// (ρ_D^+, ρ_D^−) = (U+† ρ_D U+, U−† ρ_D U−)
pub fn detector_way_states(cfg: &InterferometerConfig) -> (DensityOperator, DensityOperator) {
    (cfg.rho_d0.evolve_adjoint(&cfg.u_plus), cfg.rho_d0.evolve_adjoint(&cfg.u_minus))
}

/// w+ ρ_D^+ + w− ρ_D^−
pub fn detector_final(cfg: &InterferometerConfig) -> DensityOperator {
    let (wp, wm) = way_probabilities(&cfg.s_q0);
    let (dp, dm) = detector_way_states(cfg);
    DensityOperator::new(*dp.matrix() * wp + *dm.matrix() * wm).expect("convex combination of density operators")
}

/// D = tr|w+ ρ_D^+ − w− ρ_D^−|
pub fn distinguishability(cfg: &InterferometerConfig) -> f64 {
    let (wp, wm) = way_probabilities(&cfg.s_q0);
    let (dp, dm) = detector_way_states(cfg);
    qmath::trace_norm_hermitian(&(*dp.matrix() * wp - *dm.matrix() * wm))
}

/// Q = ½ tr|ρ_D^+ − ρ_D^−|
pub fn quality(rho_plus: &DensityOperator, rho_minus: &DensityOperator) -> f64 {
    0.5 * qmath::trace_norm_hermitian(&(*rho_plus.matrix() - *rho_minus.matrix()))
}

pub fn config_quality(cfg: &InterferometerConfig) -> f64 {
    let (dp, dm) = detector_way_states(cfg);
    quality(&dp, &dm)
}

/// G = 1 − tr ρ²
pub fn linear_entropy(rho: &DensityOperator) -> f64 {
    1.0 - rho.purity()
}

/// ΔG = ½(V0² − V²)
pub fn entropy_increase(cfg: &InterferometerConfig) -> f64 {
    let v0 = a_priori_visibility(&cfg.s_q0);
    let v = visibility(cfg);
    0.5 * (v0 * v0 - v * v)
}

/// Bloch vector of the reduced final Quanton:
/// s_x unchanged and s_z − i s_y = (s_z⁰ − i s_y⁰) C e^{−iφ}.
pub fn final_quanton_bloch(cfg: &InterferometerConfig) -> BlochVector {
    let z = fringe_amplitude(cfg);
    BlochVector::new(cfg.s_q0.x, -z.im, z.re)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualityReport {
    #[serde(rename = "P")]
    pub predictability: f64,
    #[serde(rename = "V0")]
    pub a_priori_visibility: f64,
    #[serde(rename = "V")]
    pub visibility: f64,
    #[serde(rename = "D")]
    pub distinguishability: f64,
    #[serde(rename = "Q")]
    pub quality: f64,
    #[serde(rename = "C", with = "complex_json")]
    pub contrast: C64,
    pub w_plus: f64,
    pub w_minus: f64,
    #[serde(rename = "G0")]
    pub entropy_initial: f64,
    #[serde(rename = "Gf")]
    pub entropy_final: f64,
    #[serde(rename = "dG")]
    pub entropy_increase: f64,
    pub slacks: CheckMap,
}

impl DualityReport {
    /// Slack names below `-tol`.
    pub fn violations(&self, tol: f64) -> Vec<&str> {
        crate::checks::violated_inequalities(&self.slacks, tol)
    }

    pub fn holds(&self, tol: f64) -> bool {
        self.violations(tol).is_empty()
    }

    pub fn slack(&self, name: &str) -> Option<f64> {
        self.slacks.get(name).and_then(Check::value)
    }
}

/// All duality scalars and the signed slack (RHS − LHS) of each inequality.
pub fn duality_report(cfg: &InterferometerConfig) -> DualityReport {
    let s0 = cfg.s_q0;
    let p = predictability(&s0);
    let v0 = a_priori_visibility(&s0);
    let c = config_contrast(cfg);
    let v = c.norm() * v0;
    let d = distinguishability(cfg);
    let q = config_quality(cfg);
    let (w_plus, w_minus) = way_probabilities(&s0);
    let dg = entropy_increase(cfg);
    let s0_sq = s0.norm_sq();
    let sf_sq = final_quanton_bloch(cfg).norm_sq();

    let (p2, v2, q2, d2) = (p * p, v * v, q * q, d * d);
    let mut slacks = CheckMap::new();
    let mut put = |k: &str, c: Check| {
        slacks.insert(k.to_string(), c);
    };
    put("englert", Check::Value(1.0 - d2 - v2));
    put("bloch_norm", Check::Value(1.0 - p2 - v0 * v0));
    put("q_contrast", Check::Value(1.0 - q2 - c.norm_sqr()));
    put("central", Check::Value(1.0 - ((1.0 - p2) * q2 + p2 + v2)));
    put("central_permuted", Check::Value((1.0 - p2) * (1.0 - q2) - v2));
    put("general_mixed", Check::Value(s0_sq - ((s0_sq - p2) * q2 + sf_sq)));

    if v0 > MIN_VISIBILITY_FOR_ENTROPY {
        let ratio = 2.0 * dg / (v0 * v0);
        put("entropy_bound", Check::Value(ratio - q2));
        put("entropy_bound_upper", Check::Value(1.0 - ratio));
    } else {
        let why = format!("V0 = {v0:e} <= {MIN_VISIBILITY_FOR_ENTROPY:e}");
        put("entropy_bound", Check::skipped(why.clone()));
        put("entropy_bound_upper", Check::skipped(why));
    }

    let both_pure = (1.0 - s0_sq).abs() <= PURE_TOL && cfg.rho_d0.is_pure(PURE_TOL);
    if !both_pure {
        put("q_vs_d_pure", Check::skipped("initial states are not both pure"));
    } else if 1.0 - p2 <= MIN_ONE_MINUS_P2 {
        put("q_vs_d_pure", Check::skipped(format!("1 - P^2 = {:e} <= {MIN_ONE_MINUS_P2:e}", 1.0 - p2)));
    } else {
        put("q_vs_d_pure", Check::Value(d2 - (d2 - p2) / (1.0 - p2)));
    }

    DualityReport {
        predictability: p,
        a_priori_visibility: v0,
        visibility: v,
        distinguishability: d,
        quality: q,
        contrast: c,
        w_plus,
        w_minus,
        entropy_initial: 0.5 * (1.0 - s0_sq),
        entropy_final: 0.5 * (1.0 - sf_sq),
        entropy_increase: dg,
        slacks,
    }
}

/// Threshold above which a quantity counts as maximal in
/// [`extreme_case_violations`].
pub const EXTREME_HIGH: f64 = 1.0 - 1e-9;
/// Threshold below which a quantity counts as vanishing.
pub const EXTREME_LOW: f64 = 1e-4;

/// Checks the four extreme-case implications of the duality inequalities:
/// V = 1 ⟹ D = P = Q = 0, and P = 1, D = 1, Q = 1 each ⟹ V = 0.
/// Returns the names of the implications that fail.
pub fn extreme_case_violations(r: &DualityReport) -> Vec<&'static str> {
    let mut bad = Vec::new();
    if r.visibility > EXTREME_HIGH
        && (r.distinguishability >= EXTREME_LOW || r.predictability >= EXTREME_LOW || r.quality >= EXTREME_LOW)
    {
        bad.push("full_visibility");
    }
    let vanishing_v = r.visibility < EXTREME_LOW;
    if r.predictability > EXTREME_HIGH && !vanishing_v {
        bad.push("full_predictability");
    }
    if r.distinguishability > EXTREME_HIGH && !vanishing_v {
        bad.push("full_distinguishability");
    }
    if r.quality > EXTREME_HIGH && !vanishing_v {
        bad.push("full_quality");
    }
    bad
}

/// Random configuration: Haar detector unitaries, uniform φ, and states on
/// the Bloch sphere (`pure`) or in the ball.
pub fn random_config<R: Rng + ?Sized>(rng: &mut R, pure: bool) -> InterferometerConfig {
    let s_q0 = random_bloch(rng, pure);
    let rho_d0 = random_density(rng, pure);
    let u_plus = random_unitary(rng);
    let u_minus = random_unitary(rng);
    let phi = TAU * rng.random::<f64>();
    InterferometerConfig { s_q0, rho_d0, u_plus, u_minus, phi }
}
