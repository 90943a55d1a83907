//! Minimal complex-matrix kernel for one and two qubits.
//!
//! Everything here is fixed-size: 2×2 single-qubit operators, 4×4 operators on
//! Quanton ⊗ Detector, and real Bloch vectors. Two-qubit indices are always
//! `2 * quanton + detector`; [`tensor`] is the only constructor that builds a
//! joint operator from factors, and [`partial_trace`] is its inverse.

use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Tolerance for a single algebraic identity.
pub const ALGEBRAIC_TOL: f64 = 1e-12;
/// Tolerance for results that pass through several matrix stages.
pub const PIPELINE_TOL: f64 = 1e-9;
/// Roundoff allowance on the smallest eigenvalue of a density operator.
pub const PSD_TOL: f64 = 1e-12;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

/// Dense N×N complex matrix, row-major.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CMatrix<const N: usize>(pub [[C64; N]; N]);

pub type ComplexMatrix2 = CMatrix<2>;
pub type ComplexMatrix4 = CMatrix<4>;

impl<const N: usize> CMatrix<N> {
    pub fn zeros() -> Self {
        CMatrix([[ZERO; N]; N])
    }

    pub fn identity() -> Self {
        Self::from_fn(|i, j| if i == j { ONE } else { ZERO })
    }

    pub fn from_fn(mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut m = [[ZERO; N]; N];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, x) in row.iter_mut().enumerate() {
                *x = f(i, j);
            }
        }
        CMatrix(m)
    }

    pub fn diag(d: [C64; N]) -> Self {
        Self::from_fn(|i, j| if i == j { d[i] } else { ZERO })
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.0[i][j]
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(|i, j| self.0[j][i].conj())
    }

    pub fn trace(&self) -> C64 {
        (0..N).map(|i| self.0[i][i]).sum()
    }

    pub fn scale(&self, s: C64) -> Self {
        Self::from_fn(|i, j| self.0[i][j] * s)
    }

    /// `self * rho * self†`
    pub fn conjugate(&self, rho: &Self) -> Self {
        *self * *rho * self.adjoint()
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let mut worst = 0.0_f64;
        for i in 0..N {
            for j in 0..N {
                worst = worst.max((self.0[i][j] - other.0[i][j]).norm());
            }
        }
        worst
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().flatten().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn hermiticity_deviation(&self) -> f64 {
        self.max_abs_diff(&self.adjoint())
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.is_finite() && self.hermiticity_deviation() <= tol
    }

    pub fn unitarity_deviation(&self) -> f64 {
        (self.adjoint() * *self).max_abs_diff(&Self::identity())
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.is_finite() && self.unitarity_deviation() <= tol
    }
}

impl<const N: usize> Default for CMatrix<N> {
    fn default() -> Self {
        Self::zeros()
    }
}

impl<const N: usize> Add for CMatrix<N> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::from_fn(|i, j| self.0[i][j] + rhs.0[i][j])
    }
}

impl<const N: usize> Sub for CMatrix<N> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::from_fn(|i, j| self.0[i][j] - rhs.0[i][j])
    }
}

impl<const N: usize> Neg for CMatrix<N> {
    type Output = Self;
    fn neg(self) -> Self {
        Self::from_fn(|i, j| -self.0[i][j])
    }
}

impl<const N: usize> Mul for CMatrix<N> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        Self::from_fn(|i, j| (0..N).map(|k| self.0[i][k] * rhs.0[k][j]).sum())
    }
}

impl<const N: usize> Mul<C64> for CMatrix<N> {
    type Output = Self;
    fn mul(self, rhs: C64) -> Self {
        self.scale(rhs)
    }
}

impl<const N: usize> Mul<f64> for CMatrix<N> {
    type Output = Self;
    fn mul(self, rhs: f64) -> Self {
        self.scale(C64::new(rhs, 0.0))
    }
}

impl ComplexMatrix2 {
    pub const fn new(a: C64, b: C64, c: C64, d: C64) -> Self {
        CMatrix([[a, b], [c, d]])
    }

    pub fn pauli_x() -> Self {
        Self::new(ZERO, ONE, ONE, ZERO)
    }

    pub fn pauli_y() -> Self {
        Self::new(ZERO, -I, I, ZERO)
    }

    pub fn pauli_z() -> Self {
        Self::new(ONE, ZERO, ZERO, -ONE)
    }

    pub fn det(&self) -> C64 {
        self.0[0][0] * self.0[1][1] - self.0[0][1] * self.0[1][0]
    }

    /// Validates Hermiticity, unit trace and positivity within `tol`.
    pub fn check_density(&self, tol: f64) -> Result<()> {
        if !self.is_finite() {
            return Err(Error::NonFinite);
        }
        let dev = self.hermiticity_deviation();
        if dev > tol {
            return Err(Error::NotHermitian { deviation: dev });
        }
        let tr = self.trace();
        if (tr.re - 1.0).abs() > tol || tr.im.abs() > tol {
            return Err(Error::InvalidTrace { trace: tr.re });
        }
        let (_, low) = eigen2(self);
        if low < -tol {
            return Err(Error::NotPositive { min_eigenvalue: low });
        }
        Ok(())
    }

    pub fn is_density(&self, tol: f64) -> bool {
        self.check_density(tol).is_ok()
    }
}

impl ComplexMatrix4 {
    /// Eigenvalues of the Hermitian part, ascending.
    ///
    /// Only used for validation; the 2×2 kernel has its own closed form.
    pub fn hermitian_eigenvalues(&self) -> [f64; 4] {
        let h = nalgebra::Matrix4::<C64>::from_fn(|i, j| (self.0[i][j] + self.0[j][i].conj()) * 0.5);
        let ev = h.symmetric_eigenvalues();
        let mut out = [ev[0], ev[1], ev[2], ev[3]];
        out.sort_by(f64::total_cmp);
        out
    }

    pub fn check_density(&self, tol: f64) -> Result<()> {
        if !self.is_finite() {
            return Err(Error::NonFinite);
        }
        let dev = self.hermiticity_deviation();
        if dev > tol {
            return Err(Error::NotHermitian { deviation: dev });
        }
        let tr = self.trace();
        if (tr.re - 1.0).abs() > tol || tr.im.abs() > tol {
            return Err(Error::InvalidTrace { trace: tr.re });
        }
        let low = self.hermitian_eigenvalues()[0];
        if low < -tol {
            return Err(Error::NotPositive { min_eigenvalue: low });
        }
        Ok(())
    }

    pub fn is_density(&self, tol: f64) -> bool {
        self.check_density(tol).is_ok()
    }

    /// Partial trace without validating the input.
    pub fn trace_out(&self, traced: Subsystem) -> ComplexMatrix2 {
        let m = &self.0;
        match traced {
            Subsystem::Detector => CMatrix::from_fn(|i, j| m[2 * i][2 * j] + m[2 * i + 1][2 * j + 1]),
            Subsystem::Quanton => CMatrix::from_fn(|k, l| m[k][l] + m[2 + k][2 + l]),
        }
    }
}

/// Real polarization vector of a qubit.
#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct BlochVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl BlochVector {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        BlochVector { x, y, z }
    }

    pub fn norm_sq(&self) -> f64 {
        self.x * self.x + self.y * self.y + self.z * self.z
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn dot(&self, o: &Self) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self::new(self.x * s, self.y * s, self.z * s)
    }

    pub fn minus(&self, o: &Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }

    /// Rejects non-finite components and `|s| > 1 + tol`.
    pub fn check(&self, tol: f64) -> Result<()> {
        let n = self.norm();
        if !n.is_finite() || n > 1.0 + tol {
            return Err(Error::UnphysicalBloch { norm: n });
        }
        Ok(())
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }
}

impl From<[f64; 3]> for BlochVector {
    fn from(a: [f64; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }
}

/// A validated single-qubit density operator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DensityOperator(ComplexMatrix2);

impl DensityOperator {
    pub fn new(m: ComplexMatrix2) -> Result<Self> {
        m.check_density(PSD_TOL)?;
        Ok(DensityOperator(m))
    }

    pub fn from_bloch(s: BlochVector) -> Result<Self> {
        bloch_to_density(s)
    }

    pub fn maximally_mixed() -> Self {
        DensityOperator(ComplexMatrix2::identity() * 0.5)
    }

    pub fn matrix(&self) -> &ComplexMatrix2 {
        &self.0
    }

    pub fn bloch(&self) -> BlochVector {
        bloch_components(&self.0)
    }

    /// tr(ρ²)
    pub fn purity(&self) -> f64 {
        (self.0 * self.0).trace().re
    }

    pub fn is_pure(&self, tol: f64) -> bool {
        (1.0 - self.purity()).abs() <= tol
    }

    /// `u† ρ u`
    pub fn evolve_adjoint(&self, u: &ComplexMatrix2) -> Self {
        DensityOperator(u.adjoint() * self.0 * *u)
    }

    /// `u ρ u†`
    pub fn evolve(&self, u: &ComplexMatrix2) -> Self {
        DensityOperator(u.conjugate(&self.0))
    }
}

/// ½(1 + s·σ)
pub fn bloch_to_density(s: BlochVector) -> Result<DensityOperator> {
    s.check(ALGEBRAIC_TOL)?;
    Ok(DensityOperator(bloch_matrix(s)))
}

/// ½(1 + s·σ) for any real vector, without validation.
pub fn bloch_matrix(s: BlochVector) -> ComplexMatrix2 {
    let h = 0.5;
    ComplexMatrix2::new(
        C64::new(h * (1.0 + s.z), 0.0),
        C64::new(h * s.x, -h * s.y),
        C64::new(h * s.x, h * s.y),
        C64::new(h * (1.0 - s.z), 0.0),
    )
}

/// `s_k = tr(ρ σ_k)` for a validated density matrix.
pub fn density_to_bloch(rho: &ComplexMatrix2) -> Result<BlochVector> {
    rho.check_density(PSD_TOL)?;
    Ok(bloch_components(rho))
}

fn bloch_components(m: &ComplexMatrix2) -> BlochVector {
    let off = m.0[1][0] + m.0[0][1].conj();
    BlochVector::new(off.re, off.im, (m.0[0][0] - m.0[1][1]).re)
}

/// Kronecker product `a ⊗ b` with `a` on the Quanton (first) factor.
pub fn tensor(a: &ComplexMatrix2, b: &ComplexMatrix2) -> ComplexMatrix4 {
    CMatrix::from_fn(|r, c| a.0[r / 2][c / 2] * b.0[r % 2][c % 2])
}

/// Which factor of Quanton ⊗ Detector a partial trace removes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Subsystem {
    Quanton,
    Detector,
}

/// Traces `traced` out of a two-qubit density matrix; the remaining factor is
/// returned. Rejects inputs that are not density matrices.
pub fn partial_trace(rho: &ComplexMatrix4, traced: Subsystem) -> Result<ComplexMatrix2> {
    rho.check_density(PSD_TOL)?;
    Ok(rho.trace_out(traced))
}

// Closed-form eigenvalues of the Hermitian part, descending. The discriminant
// t²/4 − det is evaluated as ((a−d)/2)² + |b|², which is the same quantity
// without the cancellation.
fn eigen2(m: &ComplexMatrix2) -> (f64, f64) {
    let a = m.0[0][0].re;
    let d = m.0[1][1].re;
    let b = (m.0[0][1] + m.0[1][0].conj()) * 0.5;
    let half_trace = 0.5 * (a + d);
    let r = (0.5 * (a - d)).hypot(b.norm());
    (half_trace + r, half_trace - r)
}

/// Eigenvalues of a Hermitian 2×2 matrix, sorted descending.
pub fn hermitian_eigenvalues(m: &ComplexMatrix2) -> Result<(f64, f64)> {
    if !m.is_finite() {
        return Err(Error::NonFinite);
    }
    let dev = m.hermiticity_deviation();
    if dev > ALGEBRAIC_TOL {
        return Err(Error::NotHermitian { deviation: dev });
    }
    Ok(eigen2(m))
}

/// Sum of absolute eigenvalues of a Hermitian 2×2 matrix.
pub fn trace_norm(m: &ComplexMatrix2) -> Result<f64> {
    let (a, b) = hermitian_eigenvalues(m)?;
    Ok(a.abs() + b.abs())
}

/// Trace norm of the Hermitian part, for matrices Hermitian by construction.
pub(crate) fn trace_norm_hermitian(m: &ComplexMatrix2) -> f64 {
    let (a, b) = eigen2(m);
    a.abs() + b.abs()
}

/// exp(−iθσz/2)
pub fn rz(theta: f64) -> ComplexMatrix2 {
    let h = 0.5 * theta;
    ComplexMatrix2::diag([C64::from_polar(1.0, -h), C64::from_polar(1.0, h)])
}

/// exp(−iθσy/2)
pub fn ry(theta: f64) -> ComplexMatrix2 {
    let (s, c) = (0.5 * theta).sin_cos();
    ComplexMatrix2::new(C64::new(c, 0.0), C64::new(-s, 0.0), C64::new(s, 0.0), C64::new(c, 0.0))
}

/// ChaCha8 stream `stream` of `seed`. Every sampler in the crate draws from
/// this generator, so (seed, stream) fully determines a run.
pub fn seeded_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Random U(2) element `e^{iα} Rz(β) Ry(γ) Rz(δ)`.
///
/// α, β, δ are uniform on [0, 2π) and cos γ is uniform on [−1, 1], which is
/// the Haar measure in these Euler angles.
pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R) -> ComplexMatrix2 {
    let tau = std::f64::consts::TAU;
    let alpha = tau * rng.random::<f64>();
    let beta = tau * rng.random::<f64>();
    let delta = tau * rng.random::<f64>();
    let gamma = (1.0 - 2.0 * rng.random::<f64>()).clamp(-1.0, 1.0).acos();
    (rz(beta) * ry(gamma) * rz(delta)) * C64::from_polar(1.0, alpha)
}

/// Uniform on the unit sphere when `pure`, uniform in the unit ball otherwise.
pub fn random_bloch<R: Rng + ?Sized>(rng: &mut R, pure: bool) -> BlochVector {
    let z = 1.0 - 2.0 * rng.random::<f64>();
    let az = std::f64::consts::TAU * rng.random::<f64>();
    let rho = (1.0 - z * z).max(0.0).sqrt();
    let dir = BlochVector::new(rho * az.cos(), rho * az.sin(), z);
    if pure {
        dir
    } else {
        dir.scaled(rng.random::<f64>().cbrt())
    }
}

pub fn random_density<R: Rng + ?Sized>(rng: &mut R, pure: bool) -> DensityOperator {
    DensityOperator(bloch_matrix(random_bloch(rng, pure)))
}

/// Serde helpers writing complex numbers as `{"re": .., "im": ..}`.
pub mod complex_json {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use super::C64;

    #[derive(Serialize, Deserialize, Clone, Copy, Debug, PartialEq)]
    #[serde(deny_unknown_fields)]
    pub struct ReIm {
        pub re: f64,
        pub im: f64,
    }

    impl From<C64> for ReIm {
        fn from(z: C64) -> Self {
            ReIm { re: z.re, im: z.im }
        }
    }

    impl From<ReIm> for C64 {
        fn from(z: ReIm) -> Self {
            C64::new(z.re, z.im)
        }
    }

    pub fn serialize<S: Serializer>(z: &C64, s: S) -> Result<S::Ok, S::Error> {
        ReIm::from(*z).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<C64, D::Error> {
        ReIm::deserialize(d).map(C64::from)
    }
}
