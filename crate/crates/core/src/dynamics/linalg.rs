use std::ops::Mul;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

/// Two complex amplitudes in the {|0⟩, |1⟩} basis.
///
/// Used both for wave functions (unit norm) and for adjoint fields, whose norm
/// is arbitrary but conserved by the evolution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QubitState {
    pub c0: C64,
    pub c1: C64,
}

impl QubitState {
    pub const fn new(c0: C64, c1: C64) -> Self {
        Self { c0, c1 }
    }

    /// |0⟩ = [1, 0]ᵀ, the north pole.
    pub const fn zero() -> Self {
        Self::new(ONE, ZERO)
    }

    /// |1⟩ = [0, 1]ᵀ, the south pole.
    pub const fn one() -> Self {
        Self::new(ZERO, ONE)
    }

    pub const fn null() -> Self {
        Self::new(ZERO, ZERO)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.c0.norm_sqr() + self.c1.norm_sqr()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// ⟨self|other⟩
    pub fn inner(&self, other: &QubitState) -> C64 {
        self.c0.conj() * other.c0 + self.c1.conj() * other.c1
    }

    pub fn scale(&self, s: C64) -> Self {
        Self::new(self.c0 * s, self.c1 * s)
    }

    pub fn normalized(&self) -> Option<Self> {
        let n = self.norm();
        (n > 0.0 && n.is_finite()).then(|| self.scale(C64::new(1.0 / n, 0.0)))
    }

    pub fn is_normalized(&self, tol: f64) -> bool {
        (self.norm_sqr() - 1.0).abs() <= tol
    }

    /// Fidelity |⟨self|other⟩|², insensitive to global phase.
    pub fn overlap_sqr(&self, other: &QubitState) -> f64 {
        self.inner(other).norm_sqr()
    }

    pub fn max_abs_diff(&self, other: &QubitState) -> f64 {
        (self.c0 - other.c0).norm().max((self.c1 - other.c1).norm())
    }
}

/// 2×2 complex matrix, row-major.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Unitary2 {
    pub m: [[C64; 2]; 2],
}

impl Unitary2 {
    pub const fn from_rows(r0: [C64; 2], r1: [C64; 2]) -> Self {
        Self { m: [r0, r1] }
    }

    pub const fn identity() -> Self {
        Self::from_rows([ONE, ZERO], [ZERO, ONE])
    }

    pub const fn sigma_x() -> Self {
        Self::from_rows([ZERO, ONE], [ONE, ZERO])
    }

    pub fn sigma_y() -> Self {
        Self::from_rows([ZERO, -I], [I, ZERO])
    }

    pub const fn sigma_z() -> Self {
        Self::from_rows([ONE, ZERO], [ZERO, C64::new(-1.0, 0.0)])
    }

    /// ⟨row|U|col⟩
    pub fn entry(&self, row: usize, col: usize) -> C64 {
        self.m[row][col]
    }

    pub fn scale(&self, s: C64) -> Self {
        let m = self.m;
        Self::from_rows([m[0][0] * s, m[0][1] * s], [m[1][0] * s, m[1][1] * s])
    }

    pub fn dagger(&self) -> Self {
        let m = self.m;
        Self::from_rows(
            [m[0][0].conj(), m[1][0].conj()],
            [m[0][1].conj(), m[1][1].conj()],
        )
    }

    pub fn transpose(&self) -> Self {
        let m = self.m;
        Self::from_rows([m[0][0], m[1][0]], [m[0][1], m[1][1]])
    }

    pub fn det(&self) -> C64 {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    pub fn apply(&self, s: &QubitState) -> QubitState {
        let m = self.m;
        QubitState::new(
            m[0][0] * s.c0 + m[0][1] * s.c1,
            m[1][0] * s.c0 + m[1][1] * s.c1,
        )
    }

    pub fn max_abs_diff(&self, other: &Unitary2) -> f64 {
        let mut d: f64 = 0.0;
        for r in 0..2 {
            for c in 0..2 {
                d = d.max((self.m[r][c] - other.m[r][c]).norm());
            }
        }
        d
    }

    /// ‖U†U − I‖ entrywise maximum.
    pub fn unitarity_defect(&self) -> f64 {
        (self.dagger() * *self).max_abs_diff(&Unitary2::identity())
    }

    /// Integer power by repeated squaring.
    pub fn powi(&self, mut n: u32) -> Self {
        let mut base = *self;
        let mut acc = Unitary2::identity();
        while n > 0 {
            if n & 1 == 1 {
                acc = base * acc;
            }
            base = base * base;
            n >>= 1;
        }
        acc
    }
}

impl Mul for Unitary2 {
    type Output = Unitary2;

    fn mul(self, rhs: Unitary2) -> Unitary2 {
        let a = self.m;
        let b = rhs.m;
        Unitary2::from_rows(
            [
                a[0][0] * b[0][0] + a[0][1] * b[1][0],
                a[0][0] * b[0][1] + a[0][1] * b[1][1],
            ],
            [
                a[1][0] * b[0][0] + a[1][1] * b[1][0],
                a[1][0] * b[0][1] + a[1][1] * b[1][1],
            ],
        )
    }
}

impl Mul<QubitState> for Unitary2 {
    type Output = QubitState;

    fn mul(self, rhs: QubitState) -> QubitState {
        self.apply(&rhs)
    }
}

/// exp(−i t (hz σz + u σx)) in closed form.
///
/// `hz` is half the qubit splitting; the default model has hz = 1.
#[inline]
pub fn segment_unitary(t: f64, u: f64, hz: f64) -> Unitary2 {
    let w = (hz * hz + u * u).sqrt();
    let (s, c) = (w * t).sin_cos();
    let s = if w > 0.0 { s / w } else { t };
    Unitary2::from_rows(
        [C64::new(c, -s * hz), C64::new(0.0, -s * u)],
        [C64::new(0.0, -s * u), C64::new(c, s * hz)],
    )
}
