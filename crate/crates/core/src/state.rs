//! Four-state Hilbert space of the triple dot with infinite charging energy:
//! the empty state plus one electron on the left, central or right dot.

use std::ops::{Add, Index, IndexMut, Mul, Sub};

use nalgebra::{Matrix4, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub const DIM: usize = 4;

/// Basis labels, in storage order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Basis {
    Empty = 0,
    Left = 1,
    Center = 2,
    Right = 3,
}

impl Basis {
    pub const ALL: [Basis; DIM] = [Basis::Empty, Basis::Left, Basis::Center, Basis::Right];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn parse(label: &str) -> Option<Basis> {
        match label.to_ascii_lowercase().as_str() {
            "0" | "empty" => Some(Basis::Empty),
            "l" | "left" => Some(Basis::Left),
            "c" | "center" | "centre" => Some(Basis::Center),
            "r" | "right" => Some(Basis::Right),
            _ => None,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Basis::Empty => "0",
            Basis::Left => "L",
            Basis::Center => "C",
            Basis::Right => "R",
        }
    }
}

pub(crate) const E0: usize = 0;
pub(crate) const L: usize = 1;
pub(crate) const C: usize = 2;
pub(crate) const R: usize = 3;

/// Dense 4x4 complex matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat4(pub [[Complex64; DIM]; DIM]);

impl Default for Mat4 {
    fn default() -> Self {
        Self::zeros()
    }
}

impl Mat4 {
    pub fn zeros() -> Self {
        Mat4([[Complex64::new(0.0, 0.0); DIM]; DIM])
    }

    pub fn identity() -> Self {
        let mut m = Self::zeros();
        for i in 0..DIM {
            m.0[i][i] = Complex64::new(1.0, 0.0);
        }
        m
    }

    /// `|to><from|`
    pub fn outer(to: Basis, from: Basis) -> Self {
        let mut m = Self::zeros();
        m.0[to.index()][from.index()] = Complex64::new(1.0, 0.0);
        m
    }

    pub fn projector(b: Basis) -> Self {
        Self::outer(b, b)
    }

    pub fn dagger(&self) -> Self {
        let mut m = Self::zeros();
        for i in 0..DIM {
            for j in 0..DIM {
                m.0[i][j] = self.0[j][i].conj();
            }
        }
        m
    }

    pub fn trace(&self) -> Complex64 {
        (0..DIM).map(|i| self.0[i][i]).sum()
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut m = *self;
        m.0.iter_mut().flatten().for_each(|x| *x *= s);
        m
    }

    pub fn scale_c(&self, s: Complex64) -> Self {
        let mut m = *self;
        m.0.iter_mut().flatten().for_each(|x| *x *= s);
        m
    }

    /// Largest absolute element.
    pub fn max_abs(&self) -> f64 {
        self.0.iter().flatten().map(|x| x.norm()).fold(0.0, f64::max)
    }

    /// Largest |A - A^dagger| element.
    pub fn hermiticity_error(&self) -> f64 {
        let mut err: f64 = 0.0;
        for i in 0..DIM {
            for j in 0..DIM {
                err = err.max((self.0[i][j] - self.0[j][i].conj()).norm());
            }
        }
        err
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().flatten().all(|x| x.re.is_finite() && x.im.is_finite())
    }

    pub fn to_nalgebra(&self) -> Matrix4<Complex64> {
        Matrix4::from_fn(|i, j| self.0[i][j])
    }
}

impl Index<(usize, usize)> for Mat4 {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.0[i][j]
    }
}

impl IndexMut<(usize, usize)> for Mat4 {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.0[i][j]
    }
}

impl Add for Mat4 {
    type Output = Mat4;
    fn add(mut self, rhs: Mat4) -> Mat4 {
        for i in 0..DIM {
            for j in 0..DIM {
                self.0[i][j] += rhs.0[i][j];
            }
        }
        self
    }
}

impl Sub for Mat4 {
    type Output = Mat4;
    fn sub(mut self, rhs: Mat4) -> Mat4 {
        for i in 0..DIM {
            for j in 0..DIM {
                self.0[i][j] -= rhs.0[i][j];
            }
        }
        self
    }
}

impl Mul for Mat4 {
    type Output = Mat4;
    fn mul(self, rhs: Mat4) -> Mat4 {
        let mut m = Mat4::zeros();
        for i in 0..DIM {
            for k in 0..DIM {
                let a = self.0[i][k];
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                for j in 0..DIM {
                    m.0[i][j] += a * rhs.0[k][j];
                }
            }
        }
        m
    }
}

/// Index of the upper-triangle pair `(i, j)`, `i < j`, in packed storage.
const fn packed(i: usize, j: usize) -> usize {
    match (i, j) {
        (0, 1) => 0,
        (0, 2) => 1,
        (0, 3) => 2,
        (1, 2) => 3,
        (1, 3) => 4,
        (2, 3) => 5,
        _ => usize::MAX,
    }
}

const UPPER: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

/// Hermitian 4x4 matrix held as 4 real diagonals and 6 complex upper-triangle
/// entries, so `a[m][n] == conj(a[n][m])` holds exactly.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct HermitianMatrix4 {
    diag: [f64; DIM],
    upper: [(f64, f64); 6],
}

impl HermitianMatrix4 {
    pub fn zeros() -> Self {
        Self::default()
    }

    /// Hermitian part `(A + A^dagger)/2` of an arbitrary matrix.
    pub fn from_matrix(m: &Mat4) -> Self {
        let mut h = Self::zeros();
        for i in 0..DIM {
            h.diag[i] = m.0[i][i].re;
        }
        for (k, &(i, j)) in UPPER.iter().enumerate() {
            let z = (m.0[i][j] + m.0[j][i].conj()) * 0.5;
            h.upper[k] = (z.re, z.im);
        }
        h
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        use std::cmp::Ordering::*;
        match i.cmp(&j) {
            Equal => Complex64::new(self.diag[i], 0.0),
            Less => {
                let (re, im) = self.upper[packed(i, j)];
                Complex64::new(re, im)
            }
            Greater => {
                let (re, im) = self.upper[packed(j, i)];
                Complex64::new(re, -im)
            }
        }
    }

    /// Sets `a[i][j] = z` and `a[j][i] = conj(z)`. Diagonal entries keep only
    /// the real part.
    pub fn set(&mut self, i: usize, j: usize, z: Complex64) {
        use std::cmp::Ordering::*;
        match i.cmp(&j) {
            Equal => self.diag[i] = z.re,
            Less => self.upper[packed(i, j)] = (z.re, z.im),
            Greater => self.upper[packed(j, i)] = (z.re, -z.im),
        }
    }

    pub fn diag(&self, i: usize) -> f64 {
        self.diag[i]
    }

    pub fn to_matrix(&self) -> Mat4 {
        let mut m = Mat4::zeros();
        for i in 0..DIM {
            for j in 0..DIM {
                m.0[i][j] = self.get(i, j);
            }
        }
        m
    }

    pub fn trace(&self) -> f64 {
        self.diag.iter().sum()
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> [f64; DIM] {
        let eig = SymmetricEigen::new(self.to_matrix().to_nalgebra());
        let mut ev = [0.0; DIM];
        for (k, v) in eig.eigenvalues.iter().enumerate() {
            ev[k] = *v;
        }
        ev.sort_by(f64::total_cmp);
        ev
    }

    pub fn max_abs(&self) -> f64 {
        let d = self.diag.iter().map(|x| x.abs()).fold(0.0, f64::max);
        self.upper
            .iter()
            .map(|&(re, im)| re.hypot(im))
            .fold(d, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.diag.iter().all(|x| x.is_finite())
            && self
                .upper
                .iter()
                .all(|&(re, im)| re.is_finite() && im.is_finite())
    }

    /// Sixteen real coordinates: diagonals, then (re, im) of each upper entry.
    pub fn to_real_coords(&self) -> [f64; 16] {
        let mut x = [0.0; 16];
        x[..DIM].copy_from_slice(&self.diag);
        for (k, &(re, im)) in self.upper.iter().enumerate() {
            x[DIM + 2 * k] = re;
            x[DIM + 2 * k + 1] = im;
        }
        x
    }

    pub fn from_real_coords(x: &[f64; 16]) -> Self {
        let mut h = Self::zeros();
        h.diag.copy_from_slice(&x[..DIM]);
        for k in 0..6 {
            h.upper[k] = (x[DIM + 2 * k], x[DIM + 2 * k + 1]);
        }
        h
    }

    fn axpy(&mut self, a: f64, other: &Self) {
        for i in 0..DIM {
            self.diag[i] += a * other.diag[i];
        }
        for k in 0..6 {
            self.upper[k].0 += a * other.upper[k].0;
            self.upper[k].1 += a * other.upper[k].1;
        }
    }

    fn scaled(&self, a: f64) -> Self {
        let mut h = *self;
        h.diag.iter_mut().for_each(|x| *x *= a);
        h.upper.iter_mut().for_each(|(re, im)| {
            *re *= a;
            *im *= a;
        });
        h
    }
}

impl Add for HermitianMatrix4 {
    type Output = Self;
    fn add(mut self, rhs: Self) -> Self {
        self.axpy(1.0, &rhs);
        self
    }
}

impl Sub for HermitianMatrix4 {
    type Output = Self;
    fn sub(mut self, rhs: Self) -> Self {
        self.axpy(-1.0, &rhs);
        self
    }
}

impl Mul<f64> for HermitianMatrix4 {
    type Output = Self;
    fn mul(self, rhs: f64) -> Self {
        self.scaled(rhs)
    }
}

/// Density matrix over `{0, L, C, R}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityMatrix(HermitianMatrix4);

impl DensityMatrix {
    pub fn pure(b: Basis) -> Self {
        let mut h = HermitianMatrix4::zeros();
        h.diag[b.index()] = 1.0;
        DensityMatrix(h)
    }

    /// Wraps a Hermitian matrix without normalizing it.
    pub fn from_hermitian(h: HermitianMatrix4) -> Self {
        DensityMatrix(h)
    }

    /// Hermitian part of `m`, without normalization.
    pub fn from_matrix(m: &Mat4) -> Self {
        DensityMatrix(HermitianMatrix4::from_matrix(m))
    }

    /// Pure state `|psi><psi|` for an (unnormalized) amplitude vector.
    pub fn from_amplitudes(psi: [Complex64; DIM]) -> Self {
        let norm: f64 = psi.iter().map(|a| a.norm_sqr()).sum();
        let mut m = Mat4::zeros();
        for i in 0..DIM {
            for j in 0..DIM {
                m.0[i][j] = psi[i] * psi[j].conj() / norm;
            }
        }
        Self::from_matrix(&m)
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.0.get(i, j)
    }

    pub fn set(&mut self, i: usize, j: usize, z: Complex64) {
        self.0.set(i, j, z)
    }

    pub fn population(&self, b: Basis) -> f64 {
        self.0.diag(b.index())
    }

    pub fn rho_00(&self) -> f64 {
        self.0.diag(E0)
    }

    pub fn rho_ll(&self) -> f64 {
        self.0.diag(L)
    }

    pub fn rho_cc(&self) -> f64 {
        self.0.diag(C)
    }

    pub fn rho_rr(&self) -> f64 {
        self.0.diag(R)
    }

    pub fn trace(&self) -> f64 {
        self.0.trace()
    }

    pub fn as_hermitian(&self) -> &HermitianMatrix4 {
        &self.0
    }

    pub fn to_matrix(&self) -> Mat4 {
        self.0.to_matrix()
    }

    pub fn eigenvalues(&self) -> [f64; DIM] {
        self.0.eigenvalues()
    }

    /// `Tr(rho^2)`
    pub fn purity(&self) -> f64 {
        let mut p = 0.0;
        for i in 0..DIM {
            for j in 0..DIM {
                p += self.get(i, j).norm_sqr();
            }
        }
        p
    }

    pub fn is_finite(&self) -> bool {
        self.0.is_finite()
    }

    /// Divides by the trace. Returns `None` for a vanishing or non-finite trace.
    pub fn normalized(&self) -> Option<Self> {
        let tr = self.trace();
        if !tr.is_finite() || tr.abs() < f64::MIN_POSITIVE {
            return None;
        }
        Some(DensityMatrix(self.0.scaled(1.0 / tr)))
    }

    /// Clamps the diagonal into `[0, 1]` and returns the largest adjustment.
    pub fn clamp_populations(&mut self) -> f64 {
        let mut worst: f64 = 0.0;
        for d in self.0.diag.iter_mut() {
            let c = d.clamp(0.0, 1.0);
            worst = worst.max((c - *d).abs());
            *d = c;
        }
        worst
    }

    pub(crate) fn raw_mut(&mut self) -> &mut HermitianMatrix4 {
        &mut self.0
    }

    pub(crate) fn axpy(&mut self, a: f64, d: &HermitianMatrix4) {
        self.0.axpy(a, d);
    }
}
