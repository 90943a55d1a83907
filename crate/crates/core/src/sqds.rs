//! Symmetric Quanton-Detecton System: two identical two-way interferometers,
//! each serving as the other's which-way detector, coupled by a conditional
//! phase Φ. Both initial Bloch vectors lie in the x–z plane.
//!
//! Everything here is closed form. [`to_engine_config`] maps a configuration
//! onto the generic interferometer so the tests can recompute each quantity
//! from the 4×4 joint state.

use std::f64::consts::TAU;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::checks::{Check, CheckMap};
use crate::engine::InterferometerConfig;
use crate::error::{Error, Result};
use crate::qmath::{bloch_to_density, complex_json, rz, BlochVector, ComplexMatrix2, DensityOperator, C64};

/// Tolerance of the closed-form identities in this module.
pub const SQDS_TOL: f64 = 1e-12;
/// f_Q is undefined once D_Q reaches 1 − this.
pub const FQ_GUARD: f64 = 1e-10;
/// Ratios by an initial visibility are skipped below this.
pub const MIN_VISIBILITY: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SqdsConfig {
    s_q0: BlochVector,
    s_d0: BlochVector,
    phi_q: f64,
    phi_d: f64,
    entangling_phase: f64,
}

impl SqdsConfig {
    pub fn new(s_q0: BlochVector, s_d0: BlochVector, phi_q: f64, phi_d: f64, entangling_phase: f64) -> Result<Self> {
        for (which, s) in [("Quanton", s_q0), ("Detecton", s_d0)] {
            s.check(SQDS_TOL)?;
            if s.y != 0.0 {
                return Err(Error::OutOfPlane { which, y: s.y });
            }
        }
        if ![phi_q, phi_d, entangling_phase].iter().all(|p| p.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(SqdsConfig { s_q0, s_d0, phi_q, phi_d, entangling_phase })
    }

    pub fn s_q0(&self) -> BlochVector {
        self.s_q0
    }

    pub fn s_d0(&self) -> BlochVector {
        self.s_d0
    }

    pub fn phi_q(&self) -> f64 {
        self.phi_q
    }

    pub fn phi_d(&self) -> f64 {
        self.phi_d
    }

    /// Φ
    pub fn entangling_phase(&self) -> f64 {
        self.entangling_phase
    }

    /// Exchange the roles of Quanton and Detecton: (s_Q0, φ_Q) ↔ (s_D0, φ_D).
    pub fn swap_labels(&self) -> Self {
        SqdsConfig { s_q0: self.s_d0, s_d0: self.s_q0, phi_q: self.phi_d, phi_d: self.phi_q, ..*self }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Way {
    Plus,
    Minus,
}

/// U± = exp[(i/2)(φ_D ± Φ)σz]
pub fn detecton_phase_unitaries(phi_d: f64, entangling_phase: f64) -> (ComplexMatrix2, ComplexMatrix2) {
    (rz(-(phi_d + entangling_phase)), rz(-(phi_d - entangling_phase)))
}

/// Detecton state after its beam splitter: Bloch (s_z, 0, −s_x).
pub fn detecton_after_bs(s_d0: BlochVector) -> Result<DensityOperator> {
    bloch_to_density(BlochVector::new(s_d0.z, 0.0, -s_d0.x))
}

/// s_D^± = (s_Dz cos φ±, s_Dz sin φ±, −s_Dx) with φ± = φ_D ± Φ.
pub fn detecton_way_bloch(cfg: &SqdsConfig, way: Way) -> BlochVector {
    let phase = match way {
        Way::Plus => cfg.phi_d + cfg.entangling_phase,
        Way::Minus => cfg.phi_d - cfg.entangling_phase,
    };
    let (sin, cos) = trig(phase);
    let s = cfg.s_d0;
    BlochVector::new(s.z * cos, s.z * sin, -s.x)
}

// Every use of sin Φ and cos Φ goes through here. Inlined libm calls may be
// fused into sincos at some call sites and not others, which breaks
// bit-exact label-swap symmetry.
#[inline(never)]
fn trig(angle: f64) -> (f64, f64) {
    (angle.sin(), angle.cos())
}

fn predictability(s: &BlochVector) -> f64 {
    s.x.abs()
}

fn initial_visibility(s: &BlochVector) -> f64 {
    s.z.abs()
}

/// Q_D = V_D0 |sin Φ|
pub fn quality_detecton(cfg: &SqdsConfig) -> f64 {
    initial_visibility(&cfg.s_d0) * trig(cfg.entangling_phase).0.abs()
}

/// Q_Q = V_Q0 |sin Φ|
pub fn quality_quanton(cfg: &SqdsConfig) -> f64 {
    quality_detecton(&cfg.swap_labels())
}

/// ½|s_D^+ − s_D^−|
pub fn quality_detecton_from_way_states(cfg: &SqdsConfig) -> f64 {
    let plus = detecton_way_bloch(cfg, Way::Plus);
    let minus = detecton_way_bloch(cfg, Way::Minus);
    0.5 * plus.minus(&minus).norm()
}

/// R_Q² = P_Q² P_D² + V_D0² (sin²Φ + P_Q² cos²Φ)
fn r_q_squared(cfg: &SqdsConfig) -> f64 {
    let pq = predictability(&cfg.s_q0);
    let pd = predictability(&cfg.s_d0);
    let vd = initial_visibility(&cfg.s_d0);
    let (sin, cos) = trig(cfg.entangling_phase);
    pq * pq * pd * pd + vd * vd * (sin * sin + pq * pq * cos * cos)
}

/// R_Q² = P_Q² |s_D0|² + Q_D² (1 − P_Q²)
fn r_q_squared_rewritten(cfg: &SqdsConfig) -> f64 {
    let pq = predictability(&cfg.s_q0);
    let qd = quality_detecton(cfg);
    pq * pq * cfg.s_d0.norm_sq() + qd * qd * (1.0 - pq * pq)
}

pub fn r_q(cfg: &SqdsConfig) -> f64 {
    let r2 = r_q_squared(cfg);
    debug_assert!((r2.sqrt() - r_q_squared_rewritten(cfg).sqrt()).abs() <= 1e-13);
    r2.sqrt()
}

/// The second closed form for R_Q, kept separate for cross-checks.
pub fn r_q_rewritten(cfg: &SqdsConfig) -> f64 {
    r_q_squared_rewritten(cfg).sqrt()
}

/// D_Q = Max{P_Q, R_Q}
pub fn distinguishability_q(cfg: &SqdsConfig) -> f64 {
    predictability(&cfg.s_q0).max(r_q(cfg))
}

/// Which term attains D_Q = Max{P_Q, R_Q}.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Branch {
    #[serde(rename = "P_Q>=R_Q")]
    PredictabilityDominant,
    #[serde(rename = "R_Q>P_Q")]
    CorrelationDominant,
}

impl Branch {
    pub fn as_str(self) -> &'static str {
        match self {
            Branch::PredictabilityDominant => "P_Q>=R_Q",
            Branch::CorrelationDominant => "R_Q>P_Q",
        }
    }
}

pub fn branch(cfg: &SqdsConfig) -> Branch {
    if predictability(&cfg.s_q0) >= r_q(cfg) {
        Branch::PredictabilityDominant
    } else {
        Branch::CorrelationDominant
    }
}

/// ξ = (1 − P_Q²)(1 − Q_D²)
pub fn xi(cfg: &SqdsConfig) -> f64 {
    let pq = predictability(&cfg.s_q0);
    let qd = quality_detecton(cfg);
    (1.0 - pq * pq) * (1.0 - qd * qd)
}

/// g = 1 − R_Q² − ξ, which reduces to P_Q² (1 − |s_D0|²).
pub fn g(cfg: &SqdsConfig) -> f64 {
    let pq = predictability(&cfg.s_q0);
    // Clamped: a pure state can round to |s|² slightly above 1.
    pq * pq * (1.0 - cfg.s_d0.norm_sq()).max(0.0)
}

fn check_fq_defined(cfg: &SqdsConfig) -> Result<f64> {
    let d = distinguishability_q(cfg);
    if d >= 1.0 - FQ_GUARD {
        Err(Error::FqUndefined { d_q: d })
    } else {
        Ok(d)
    }
}

/// f_Q = (1 − P_Q²)(1 − Q_D²)/(1 − D_Q²)
pub fn f_q(cfg: &SqdsConfig) -> Result<f64> {
    let d = check_fq_defined(cfg)?;
    Ok(xi(cfg) / ((1.0 - d) * (1.0 + d)))
}

/// Agreement to expect between [`f_q`] and [`f_q_by_branch`]. Both lose
/// about ε/ξ to rounding as D_Q approaches 1, so the bound widens from
/// [`SQDS_TOL`] to 4ε/ξ there.
pub fn f_q_forms_tolerance(cfg: &SqdsConfig) -> f64 {
    SQDS_TOL.max(4.0 * f64::EPSILON / xi(cfg))
}

/// f_Q by branch: 1 − Q_D² where D_Q = P_Q, and ξ/(g + ξ) where D_Q = R_Q.
pub fn f_q_by_branch(cfg: &SqdsConfig) -> Result<f64> {
    check_fq_defined(cfg)?;
    Ok(match branch(cfg) {
        Branch::PredictabilityDominant => {
            let qd = quality_detecton(cfg);
            1.0 - qd * qd
        }
        Branch::CorrelationDominant => {
            let x = xi(cfg);
            x / (g(cfg) + x)
        }
    })
}

/// C = cos Φ + i s_Dx sin Φ
pub fn contrast(cfg: &SqdsConfig) -> C64 {
    let (sin, cos) = trig(cfg.entangling_phase);
    C64::new(cos, cfg.s_d0.x * sin)
}

/// V_Q = V_Q0 sqrt(cos²Φ + P_D² sin²Φ)
pub fn visibility_quanton(cfg: &SqdsConfig) -> f64 {
    let (sin, cos) = trig(cfg.entangling_phase);
    let pd = predictability(&cfg.s_d0);
    initial_visibility(&cfg.s_q0) * (cos * cos + pd * pd * sin * sin).sqrt()
}

pub fn visibility_detecton(cfg: &SqdsConfig) -> f64 {
    visibility_quanton(&cfg.swap_labels())
}

/// ΔG_Q = ½(V_Q0² − V_Q²)
pub fn entropy_increase_quanton(cfg: &SqdsConfig) -> f64 {
    let v0 = initial_visibility(&cfg.s_q0);
    let v = visibility_quanton(cfg);
    0.5 * (v0 * v0 - v * v)
}

fn is_pure(s: &BlochVector) -> bool {
    (1.0 - s.norm_sq()).abs() <= SQDS_TOL
}

/// Signed residuals of the linear-entropy relations.
///
/// `entropy_vs_quality` checks 2ΔG_Q/V_Q0² = (1 − |s_D0|²) sin²Φ + Q_D², the
/// form that follows from ΔG_Q = ½V_Q0²(1 − P_D²) sin²Φ.
pub fn entropy_relations(cfg: &SqdsConfig) -> CheckMap {
    let mut m = CheckMap::new();
    let dg = entropy_increase_quanton(cfg);
    let v0 = initial_visibility(&cfg.s_q0);
    let pd = predictability(&cfg.s_d0);
    let qd = quality_detecton(cfg);
    let sin2 = trig(cfg.entangling_phase).0.powi(2);
    m.insert("entropy_increase".into(), Check::Value(dg - 0.5 * v0 * v0 * (1.0 - pd * pd) * sin2));
    if v0 > MIN_VISIBILITY {
        let ratio = 2.0 * dg / (v0 * v0);
        let mixed = (1.0 - cfg.s_d0.norm_sq()) * sin2;
        m.insert("entropy_vs_quality".into(), Check::Value(ratio - (mixed + qd * qd)));
        m.insert(
            "entropy_pure_detecton".into(),
            if is_pure(&cfg.s_d0) { Check::Value(ratio - qd * qd) } else { Check::skipped("Detecton is not pure") },
        );
    } else {
        for k in ["entropy_vs_quality", "entropy_pure_detecton"] {
            m.insert(k.into(), Check::skipped(format!("V_Q0 = {v0:e} <= {MIN_VISIBILITY:e}")));
        }
    }
    m
}

/// Signed residuals of the reciprocity relations between Quanton and
/// Detecton, with ΔV² = V² − V0².
pub fn reciprocity(cfg: &SqdsConfig) -> CheckMap {
    let mut m = CheckMap::new();
    let (pq, pd) = (predictability(&cfg.s_q0), predictability(&cfg.s_d0));
    let (vq0, vd0) = (initial_visibility(&cfg.s_q0), initial_visibility(&cfg.s_d0));
    let (vq, vd) = (visibility_quanton(cfg), visibility_detecton(cfg));
    let dvq = vq * vq - vq0 * vq0;
    let dvd = vd * vd - vd0 * vd0;
    let low = |v: f64| v <= MIN_VISIBILITY;
    let low_reason = || format!("V_Q0 or V_D0 <= {MIN_VISIBILITY:e}");

    m.insert(
        "weighted_degradation".into(),
        if low(vq0) || low(vd0) {
            Check::skipped(low_reason())
        } else {
            Check::Value((1.0 - pq * pq) * dvq / (vq0 * vq0) - (1.0 - pd * pd) * dvd / (vd0 * vd0))
        },
    );
    m.insert(
        "pure_degradation".into(),
        if is_pure(&cfg.s_q0) && is_pure(&cfg.s_d0) {
            Check::Value(dvq - dvd)
        } else {
            Check::skipped("initial states are not both pure")
        },
    );
    m.insert(
        "mutual_quality".into(),
        if low(vq0) || low(vd0) {
            Check::skipped(low_reason())
        } else {
            Check::Value(quality_detecton(cfg) / vd0 - quality_quanton(cfg) / vq0)
        },
    );

    let unpredictable = pq <= SQDS_TOL && pd <= SQDS_TOL;
    let (sum_q, sum_d, scaled) = if !unpredictable {
        let why = Check::skipped("P_Q and P_D are not both zero");
        (why.clone(), why.clone(), why)
    } else if low(vq0) || low(vd0) {
        let why = Check::skipped(low_reason());
        (why.clone(), why.clone(), why)
    } else {
        let dq = distinguishability_q(cfg);
        let dd = distinguishability_q(&cfg.swap_labels());
        (
            Check::Value(dq * dq / (vd0 * vd0) + vq * vq / (vq0 * vq0) - 1.0),
            Check::Value(dd * dd / (vq0 * vq0) + vd * vd / (vd0 * vd0) - 1.0),
            Check::Value(dq * dq + vd0 * vd0 / (vq0 * vq0) * vq * vq - vd0 * vd0),
        )
    };
    m.insert("visibility_sum_quanton".into(), sum_q);
    m.insert("visibility_sum_detecton".into(), sum_d);
    m.insert("visibility_sum_scaled".into(), scaled);
    m
}

/// Q_D² + |C|² − (|s_D0|² sin²Φ + cos²Φ), and Q_D² + |C|² − 1 for a pure Detecton.
pub fn pure_state_identity(cfg: &SqdsConfig) -> CheckMap {
    let mut m = CheckMap::new();
    let qd = quality_detecton(cfg);
    let sum = qd * qd + contrast(cfg).norm_sqr();
    let (sin, cos) = trig(cfg.entangling_phase);
    m.insert("quality_contrast_sum".into(), Check::Value(sum - (cfg.s_d0.norm_sq() * sin * sin + cos * cos)));
    m.insert(
        "quality_contrast_pure".into(),
        if is_pure(&cfg.s_d0) { Check::Value(sum - 1.0) } else { Check::skipped("Detecton is not pure") },
    );
    m
}

/// 1 − (Q_D² + |C|²)
pub fn mixed_state_bound(cfg: &SqdsConfig) -> f64 {
    let qd = quality_detecton(cfg);
    1.0 - (qd * qd + contrast(cfg).norm_sqr())
}

/// Distinguishability ordering and the chained duality inequalities, each
/// evaluated at [`SQDS_TOL`].
pub fn hierarchy(cfg: &SqdsConfig) -> std::collections::BTreeMap<String, bool> {
    let t = SQDS_TOL;
    let pq = predictability(&cfg.s_q0);
    let qd = quality_detecton(cfg);
    let rq = r_q(cfg);
    let dq = distinguishability_q(cfg);
    let vq2 = visibility_quanton(cfg).powi(2);
    [
        ("d_q_ge_r_q", dq >= rq - t),
        ("r_q_ge_q_d", rq >= qd - t),
        ("d_q_ge_p_q", dq >= pq - t),
        ("r_q_le_purity", rq <= cfg.s_d0.norm() + t),
        ("quality_le_correlation", qd * qd + vq2 <= rq * rq + vq2 + t),
        ("correlation_le_distinguishability", rq * rq + vq2 <= dq * dq + vq2 + t),
        ("englert", dq * dq + vq2 <= 1.0 + t),
        ("predictability", pq * pq + vq2 <= 1.0 + t),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect()
}

/// The same experiment as a generic interferometer: the Detecton after its
/// beam splitter as ρ_D0, the conditional phase shifters as U±, φ = φ_Q.
pub fn to_engine_config(cfg: &SqdsConfig) -> InterferometerConfig {
    let (u_plus, u_minus) = detecton_phase_unitaries(cfg.phi_d, cfg.entangling_phase);
    let rho_d0 = detecton_after_bs(cfg.s_d0).expect("validated Detecton state");
    InterferometerConfig::new(cfg.s_q0, rho_d0, u_plus, u_minus, cfg.phi_q)
        .expect("validated Quanton state and diagonal unitaries")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SqdsReport {
    #[serde(rename = "P_Q")]
    pub p_q: f64,
    #[serde(rename = "P_D")]
    pub p_d: f64,
    #[serde(rename = "V_Q0")]
    pub v_q0: f64,
    #[serde(rename = "V_D0")]
    pub v_d0: f64,
    #[serde(rename = "Q_D")]
    pub q_d: f64,
    #[serde(rename = "Q_Q")]
    pub q_q: f64,
    #[serde(rename = "R_Q")]
    pub r_q: f64,
    #[serde(rename = "D_Q")]
    pub d_q: f64,
    #[serde(rename = "D_D")]
    pub d_d: f64,
    #[serde(rename = "V_Q")]
    pub v_q: f64,
    #[serde(rename = "V_D")]
    pub v_d: f64,
    /// `None` where D_Q reaches 1.
    #[serde(rename = "f_Q")]
    pub f_q: Option<f64>,
    #[serde(rename = "C", with = "complex_json")]
    pub contrast: C64,
    pub branch: Branch,
    /// Signed identity residuals; each should vanish.
    pub residuals: CheckMap,
    /// Tolerance applied to the `f_q_forms` residual.
    pub f_q_forms_tol: f64,
    /// 1 − (Q_D² + |C|²), nonnegative.
    pub mixed_state_slack: f64,
    pub hierarchy: std::collections::BTreeMap<String, bool>,
}

impl SqdsReport {
    /// Residuals above `tol`; `f_q_forms` is held to `max(tol, f_q_forms_tol)`.
    pub fn residual_violations(&self, tol: f64) -> Vec<&str> {
        let fq_tol = tol.max(self.f_q_forms_tol);
        self.residuals
            .iter()
            .filter_map(|(k, c)| {
                let t = if k == "f_q_forms" { fq_tol } else { tol };
                match c.value() {
                    Some(v) if v.abs() > t || v.is_nan() => Some(k.as_str()),
                    _ => None,
                }
            })
            .collect()
    }
}

pub fn sqds_report(cfg: &SqdsConfig) -> SqdsReport {
    let swapped = cfg.swap_labels();
    let f = f_q(cfg).ok();
    let mut residuals = CheckMap::new();
    residuals.insert("r_q_forms".into(), Check::Value(r_q(cfg) - r_q_rewritten(cfg)));
    residuals
        .insert("q_d_way_states".into(), Check::Value(quality_detecton(cfg) - quality_detecton_from_way_states(cfg)));
    residuals.insert(
        "f_q_forms".into(),
        match (f, f_q_by_branch(cfg)) {
            (Some(a), Ok(b)) => Check::Value(a - b),
            _ => Check::skipped("f_Q undefined at D_Q = 1"),
        },
    );
    residuals.insert(
        "v_q_contrast".into(),
        Check::Value(visibility_quanton(cfg) - contrast(cfg).norm() * initial_visibility(&cfg.s_q0)),
    );
    for part in [entropy_relations(cfg), reciprocity(cfg), pure_state_identity(cfg)] {
        residuals.extend(part);
    }

    SqdsReport {
        p_q: predictability(&cfg.s_q0),
        p_d: predictability(&cfg.s_d0),
        v_q0: initial_visibility(&cfg.s_q0),
        v_d0: initial_visibility(&cfg.s_d0),
        q_d: quality_detecton(cfg),
        q_q: quality_quanton(cfg),
        r_q: r_q(cfg),
        d_q: distinguishability_q(cfg),
        d_d: distinguishability_q(&swapped),
        v_q: visibility_quanton(cfg),
        v_d: visibility_detecton(cfg),
        f_q: f,
        contrast: contrast(cfg),
        branch: branch(cfg),
        residuals,
        f_q_forms_tol: f_q_forms_tolerance(cfg),
        mixed_state_slack: mixed_state_bound(cfg),
        hierarchy: hierarchy(cfg),
    }
}

fn random_plane_bloch<R: Rng + ?Sized>(rng: &mut R, pure: bool) -> BlochVector {
    let theta = TAU * rng.random::<f64>();
    // sqrt gives a uniform density over the disk.
    let r = if pure { 1.0 } else { rng.random::<f64>().sqrt() };
    BlochVector::new(r * theta.sin(), 0.0, r * theta.cos())
}

/// Random configuration with both states in the x–z plane (on the unit
/// circle when `pure`, uniform over the disk otherwise) and uniform phases.
pub fn random_sqds_config<R: Rng + ?Sized>(rng: &mut R, pure: bool) -> SqdsConfig {
    let s_q0 = random_plane_bloch(rng, pure);
    let s_d0 = random_plane_bloch(rng, pure);
    let phi_q = TAU * rng.random::<f64>();
    let phi_d = TAU * rng.random::<f64>();
    let entangling_phase = TAU * rng.random::<f64>();
    SqdsConfig { s_q0, s_d0, phi_q, phi_d, entangling_phase }
}

/// Grid point for the f_Q sweep: pure Quanton with predictability `p_q`, Detecton of
/// norm `s_norm` along z, and Φ chosen so that Q_D = `q_d`. Requires
/// 0 ≤ p_q ≤ 1 and 0 ≤ q_d ≤ s_norm ≤ 1.
pub fn fq_grid_config(p_q: f64, q_d: f64, s_norm: f64) -> Result<SqdsConfig> {
    for (name, v) in [("P_Q", p_q), ("|s_D0|", s_norm)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::OutOfUnitInterval { name, value: v });
        }
    }
    if !(0.0..=s_norm).contains(&q_d) {
        return Err(Error::OutOfUnitInterval { name: "Q_D/|s_D0|", value: q_d / s_norm });
    }
    let s_q0 = BlochVector::new(p_q, 0.0, (1.0 - p_q * p_q).max(0.0).sqrt());
    let s_d0 = BlochVector::new(0.0, 0.0, s_norm);
    let ratio = if s_norm > 0.0 { (q_d / s_norm).min(1.0) } else { 0.0 };
    SqdsConfig::new(s_q0, s_d0, 0.0, 0.0, ratio.asin())
}
