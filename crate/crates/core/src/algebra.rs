//! η matrices, the interaction matrix `a`, the commutant of the η algebra
//! and free plane-wave modes.
//!
//! Integer-valued objects (the η matrices and their anticommutators) are kept
//! in exact `i64` arithmetic; everything derived from them is `f64`.

use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub, SubAssign};

use nalgebra::DMatrix;

use crate::error::{DiracError, Result};

/// Diagonal of the metric g^{αβ}.
pub const METRIC: [i64; 4] = [1, -1, -1, -1];

pub type IntMatrix8 = [[i64; 8]; 8];

/// Real 8×8 matrix, row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Matrix8(pub [[f64; 8]; 8]);

/// Eight real field components.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Spinor8(pub [f64; 8]);

/// A barred spinor sᵀη⁰, kept distinct from column spinors.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Covector8(pub [f64; 8]);

/// Contravariant four-vector (components with upper index α = 0..3).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FourVector(pub [f64; 4]);

impl Matrix8 {
    pub const fn zero() -> Self {
        Matrix8([[0.0; 8]; 8])
    }

    pub fn identity() -> Self {
        let mut m = Self::zero();
        for i in 0..8 {
            m.0[i][i] = 1.0;
        }
        m
    }

    pub fn from_int(m: &IntMatrix8) -> Self {
        let mut out = Self::zero();
        for i in 0..8 {
            for j in 0..8 {
                out.0[i][j] = m[i][j] as f64;
            }
        }
        out
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zero();
        for i in 0..8 {
            for j in 0..8 {
                out.0[j][i] = self.0[i][j];
            }
        }
        out
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut out = *self;
        out.0.iter_mut().flatten().for_each(|x| *x *= s);
        out
    }

    pub fn apply(&self, v: &Spinor8) -> Spinor8 {
        let mut out = [0.0; 8];
        for (o, row) in out.iter_mut().zip(self.0.iter()) {
            let mut acc = 0.0;
            for (m, x) in row.iter().zip(v.0.iter()) {
                acc += m * x;
            }
            *o = acc;
        }
        Spinor8(out)
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().flatten().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn frobenius_dot(&self, other: &Matrix8) -> f64 {
        self.0
            .iter()
            .flatten()
            .zip(other.0.iter().flatten())
            .map(|(a, b)| a * b)
            .sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.frobenius_dot(self).sqrt()
    }

    pub fn trace(&self) -> f64 {
        (0..8).map(|i| self.0[i][i]).sum()
    }

    /// Row-major flattening, entry (i, j) at 8i + j.
    pub fn to_flat(&self) -> [f64; 64] {
        let mut out = [0.0; 64];
        for (k, x) in self.0.iter().flatten().enumerate() {
            out[k] = *x;
        }
        out
    }

    pub fn from_flat(v: &[f64]) -> Self {
        assert_eq!(v.len(), 64);
        let mut out = Self::zero();
        for (k, x) in v.iter().enumerate() {
            out.0[k / 8][k % 8] = *x;
        }
        out
    }

    pub fn commutator(&self, other: &Matrix8) -> Matrix8 {
        *self * *other - *other * *self
    }
}

impl Mul for Matrix8 {
    type Output = Matrix8;

    fn mul(self, rhs: Matrix8) -> Matrix8 {
        let mut out = Matrix8::zero();
        for i in 0..8 {
            for j in 0..8 {
                let mut acc = 0.0;
                for k in 0..8 {
                    acc += self.0[i][k] * rhs.0[k][j];
                }
                out.0[i][j] = acc;
            }
        }
        out
    }
}

impl Add for Matrix8 {
    type Output = Matrix8;

    fn add(mut self, rhs: Matrix8) -> Matrix8 {
        for (a, b) in self.0.iter_mut().flatten().zip(rhs.0.iter().flatten()) {
            *a += b;
        }
        self
    }
}

impl Sub for Matrix8 {
    type Output = Matrix8;

    fn sub(mut self, rhs: Matrix8) -> Matrix8 {
        for (a, b) in self.0.iter_mut().flatten().zip(rhs.0.iter().flatten()) {
            *a -= b;
        }
        self
    }
}

impl Mul<f64> for Matrix8 {
    type Output = Matrix8;

    fn mul(self, s: f64) -> Matrix8 {
        self.scale(s)
    }
}

impl Neg for Matrix8 {
    type Output = Matrix8;

    fn neg(self) -> Matrix8 {
        self.scale(-1.0)
    }
}

impl Mul<Spinor8> for Matrix8 {
    type Output = Spinor8;

    fn mul(self, rhs: Spinor8) -> Spinor8 {
        self.apply(&rhs)
    }
}

impl Spinor8 {
    pub const ZERO: Spinor8 = Spinor8([0.0; 8]);

    pub fn basis(i: usize) -> Self {
        let mut s = Self::ZERO;
        s.0[i] = 1.0;
        s
    }

    pub fn dot(&self, other: &Spinor8) -> f64 {
        self.0.iter().zip(other.0.iter()).map(|(a, b)| a * b).sum()
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }
}

impl Covector8 {
    pub fn dot(&self, s: &Spinor8) -> f64 {
        self.0.iter().zip(s.0.iter()).map(|(a, b)| a * b).sum()
    }
}

impl FourVector {
    pub const ZERO: FourVector = FourVector([0.0; 4]);

    /// Covariant components A_μ = g_μν A^ν.
    pub fn lower(&self) -> [f64; 4] {
        let mut out = [0.0; 4];
        for mu in 0..4 {
            out[mu] = METRIC[mu] as f64 * self.0[mu];
        }
        out
    }

    /// A_μ A^μ.
    pub fn minkowski_square(&self) -> f64 {
        let low = self.lower();
        (0..4).map(|mu| low[mu] * self.0[mu]).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }
}

macro_rules! impl_vector_ops {
    ($t:ident, $n:expr) => {
        impl Add for $t {
            type Output = $t;
            fn add(mut self, rhs: $t) -> $t {
                for i in 0..$n {
                    self.0[i] += rhs.0[i];
                }
                self
            }
        }

        impl Sub for $t {
            type Output = $t;
            fn sub(mut self, rhs: $t) -> $t {
                for i in 0..$n {
                    self.0[i] -= rhs.0[i];
                }
                self
            }
        }

        impl Neg for $t {
            type Output = $t;
            fn neg(mut self) -> $t {
                for x in self.0.iter_mut() {
                    *x = -*x;
                }
                self
            }
        }

        impl Mul<f64> for $t {
            type Output = $t;
            fn mul(mut self, s: f64) -> $t {
                for x in self.0.iter_mut() {
                    *x *= s;
                }
                self
            }
        }

        impl AddAssign for $t {
            fn add_assign(&mut self, rhs: $t) {
                for i in 0..$n {
                    self.0[i] += rhs.0[i];
                }
            }
        }

        impl SubAssign for $t {
            fn sub_assign(&mut self, rhs: $t) {
                for i in 0..$n {
                    self.0[i] -= rhs.0[i];
                }
            }
        }

        impl Index<usize> for $t {
            type Output = f64;
            fn index(&self, i: usize) -> &f64 {
                &self.0[i]
            }
        }

        impl IndexMut<usize> for $t {
            fn index_mut(&mut self, i: usize) -> &mut f64 {
                &mut self.0[i]
            }
        }
    };
}

impl_vector_ops!(Spinor8, 8);
impl_vector_ops!(FourVector, 4);

// ---------------------------------------------------------------------------
// η matrices

const A1: [[i64; 4]; 4] = [[0, 0, 0, 1], [0, 0, 1, 0], [0, -1, 0, 0], [1, 0, 0, 0]];
const A2: [[i64; 4]; 4] = [[0, 0, -1, 0], [0, 0, 0, 1], [1, 0, 0, 0], [0, 1, 0, 0]];
const A3: [[i64; 4]; 4] = [[0, 1, 0, 0], [-1, 0, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]];

/// The four η matrices, held both as exact integers and as floats.
#[derive(Debug, Clone, PartialEq)]
pub struct EtaSet {
    int: [IntMatrix8; 4],
    eta: [Matrix8; 4],
}

/// Builds η⁰ = diag(I₄, −I₄) and η^i = [[0, a^i], [−(a^i)ᵀ, 0]].
pub fn build_eta() -> EtaSet {
    let mut eta0 = [[0i64; 8]; 8];
    for (i, row) in eta0.iter_mut().enumerate() {
        row[i] = if i < 4 { 1 } else { -1 };
    }
    let spatial = |block: &[[i64; 4]; 4]| {
        let mut m = [[0i64; 8]; 8];
        for i in 0..4 {
            for j in 0..4 {
                m[i][j + 4] = block[i][j];
                m[j + 4][i] = -block[i][j];
            }
        }
        m
    };
    EtaSet::from_integer([eta0, spatial(&A1), spatial(&A2), spatial(&A3)])
}

fn int_mul(a: &IntMatrix8, b: &IntMatrix8) -> IntMatrix8 {
    let mut out = [[0i64; 8]; 8];
    for i in 0..8 {
        for j in 0..8 {
            out[i][j] = (0..8).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

fn int_transpose(a: &IntMatrix8) -> IntMatrix8 {
    let mut out = [[0i64; 8]; 8];
    for i in 0..8 {
        for j in 0..8 {
            out[j][i] = a[i][j];
        }
    }
    out
}

impl EtaSet {
    /// Wraps arbitrary integer matrices without checking the Clifford
    /// relations; see [`EtaSet::clifford_violations`].
    pub fn from_integer(int: [IntMatrix8; 4]) -> Self {
        let eta = [
            Matrix8::from_int(&int[0]),
            Matrix8::from_int(&int[1]),
            Matrix8::from_int(&int[2]),
            Matrix8::from_int(&int[3]),
        ];
        EtaSet { int, eta }
    }

    pub fn get(&self, alpha: usize) -> &Matrix8 {
        &self.eta[alpha]
    }

    pub fn integer(&self, alpha: usize) -> &IntMatrix8 {
        &self.int[alpha]
    }

    pub fn all(&self) -> &[Matrix8; 4] {
        &self.eta
    }

    pub fn metric(&self) -> [i64; 4] {
        METRIC
    }

    /// η^α η^β + η^β η^α in exact integer arithmetic.
    pub fn anticommutator_exact(&self, alpha: usize, beta: usize) -> Result<IntMatrix8> {
        check_index(alpha, 4)?;
        check_index(beta, 4)?;
        let ab = int_mul(&self.int[alpha], &self.int[beta]);
        let ba = int_mul(&self.int[beta], &self.int[alpha]);
        let mut out = [[0i64; 8]; 8];
        for i in 0..8 {
            for j in 0..8 {
                out[i][j] = ab[i][j] + ba[i][j];
            }
        }
        Ok(out)
    }

    /// Pairs (α, β), α ≤ β, whose anticommutator differs from 2g^{αβ}I.
    pub fn clifford_violations(&self) -> Vec<(usize, usize)> {
        let mut bad = Vec::new();
        for alpha in 0..4 {
            for beta in alpha..4 {
                let ac = self.anticommutator_exact(alpha, beta).expect("indices in range");
                let g = if alpha == beta { 2 * METRIC[alpha] } else { 0 };
                let ok = (0..8).all(|i| (0..8).all(|j| ac[i][j] == if i == j { g } else { 0 }));
                if !ok {
                    bad.push((alpha, beta));
                }
            }
        }
        bad
    }

    /// Spatial indices j for which η⁰(η^j)ᵀ ≠ η^j η⁰ (exact).
    pub fn transpose_relation_violations(&self) -> Vec<usize> {
        (1..4)
            .filter(|&j| {
                int_mul(&self.int[0], &int_transpose(&self.int[j]))
                    != int_mul(&self.int[j], &self.int[0])
            })
            .collect()
    }

    /// Applies η⁰ without a matrix product.
    pub fn eta0_apply(&self, v: &Spinor8) -> Spinor8 {
        self.eta[0].apply(v)
    }
}

fn check_index(index: usize, bound: usize) -> Result<()> {
    if index >= bound {
        Err(DiracError::IndexOutOfRange { index, bound })
    } else {
        Ok(())
    }
}

/// Floating-point anticommutator η^α η^β + η^β η^α.
pub fn anticommutator(eta: &EtaSet, alpha: usize, beta: usize) -> Result<Matrix8> {
    Ok(Matrix8::from_int(&eta.anticommutator_exact(alpha, beta)?))
}

/// x̄ = xᵀη⁰.
pub fn bar(s: &Spinor8, eta: &EtaSet) -> Covector8 {
    let e0 = eta.get(0);
    let mut out = [0.0; 8];
    for (j, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for i in 0..8 {
            acc += s.0[i] * e0.0[i][j];
        }
        *o = acc;
    }
    Covector8(out)
}

/// a = (e/K) A_μ η^μ.
pub fn build_a(a_vec: &FourVector, e_over_k: f64, eta: &EtaSet) -> Matrix8 {
    let low = a_vec.lower();
    let mut out = Matrix8::zero();
    for mu in 0..4 {
        let c = e_over_k * low[mu];
        if c == 0.0 {
            continue;
        }
        for (o, m) in out.0.iter_mut().flatten().zip(eta.get(mu).0.iter().flatten()) {
            *o += c * m;
        }
    }
    out
}

/// (e/K)² A_μ A^μ, the scalar that `build_a(..)²` is proportional to.
pub fn a_squared_scalar(a_vec: &FourVector, e_over_k: f64) -> f64 {
    e_over_k * e_over_k * a_vec.minkowski_square()
}

// ---------------------------------------------------------------------------
// Commutant and complex structures

/// Relative singular-value cutoff for the commutant nullspace.
pub const NULLSPACE_RTOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-9;
const ZERO_ENTRY_TOL: f64 = 1e-12;

/// Frobenius-orthonormal basis of { M : M η^α = η^α M for all α }.
///
/// The nullspace of the stacked constraint system is found by SVD and then
/// brought to a rotation-independent form (reduced row echelon form followed
/// by Gram-Schmidt from the last pivot backwards), so the output does not
/// depend on the SVD's choice of nullspace basis. Elements are ordered by
/// descending position of their first nonzero entry, which is positive.
pub fn commutant_basis(eta: &EtaSet) -> Vec<Matrix8> {
    let mut constraints = DMatrix::<f64>::zeros(4 * 64, 64);
    for alpha in 0..4 {
        let e = eta.get(alpha);
        for i in 0..8 {
            for j in 0..8 {
                let row = alpha * 64 + 8 * i + j;
                // (M η)_{ij} = Σ_k M_{ik} η_{kj}
                for k in 0..8 {
                    constraints[(row, 8 * i + k)] += e.0[k][j];
                }
                // (η M)_{ij} = Σ_k η_{ik} M_{kj}
                for k in 0..8 {
                    constraints[(row, 8 * k + j)] -= e.0[i][k];
                }
            }
        }
    }
    let svd = constraints.svd(false, true);
    let v_t = svd.v_t.expect("v_t requested");
    let sigma_max = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let null_rows: Vec<Vec<f64>> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| s <= NULLSPACE_RTOL * sigma_max)
        .map(|(r, _)| v_t.row(r).iter().cloned().collect())
        .collect();

    let (rref, pivots) = reduced_row_echelon(null_rows);

    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(rref.len());
    for row in rref.iter().rev() {
        let mut v = row.clone();
        for b in &basis {
            let d: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
            v.iter_mut().zip(b).for_each(|(x, y)| *x -= d * y);
        }
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.iter_mut().for_each(|x| *x /= n);
        if let Some(first) = v.iter().find(|x| x.abs() > ZERO_ENTRY_TOL) {
            if *first < 0.0 {
                v.iter_mut().for_each(|x| *x = -*x);
            }
        }
        basis.push(v);
    }
    debug_assert_eq!(basis.len(), pivots.len());

    basis
        .into_iter()
        .map(|v| {
            let mut m = Matrix8::from_flat(&v);
            m.0.iter_mut().flatten().for_each(|x| {
                if x.abs() <= ZERO_ENTRY_TOL {
                    *x = 0.0;
                }
            });
            m
        })
        .collect()
}

/// Gauss-Jordan elimination with partial pivoting. Returns the nonzero rows
/// and their pivot columns, in increasing pivot order.
fn reduced_row_echelon(mut rows: Vec<Vec<f64>>) -> (Vec<Vec<f64>>, Vec<usize>) {
    let n_rows = rows.len();
    if n_rows == 0 {
        return (rows, Vec::new());
    }
    let n_cols = rows[0].len();
    let scale = rows
        .iter()
        .flatten()
        .fold(0.0f64, |m, x| m.max(x.abs()))
        .max(f64::MIN_POSITIVE);
    let mut pivots = Vec::new();
    let mut r = 0;
    for col in 0..n_cols {
        if r == n_rows {
            break;
        }
        let (best, best_val) = (r..n_rows)
            .map(|i| (i, rows[i][col].abs()))
            .fold((r, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if best_val <= PIVOT_TOL * scale {
            continue;
        }
        rows.swap(r, best);
        let p = rows[r][col];
        rows[r].iter_mut().for_each(|x| *x /= p);
        let pivot_row = rows[r].clone();
        for (i, row) in rows.iter_mut().enumerate() {
            if i != r {
                let f = row[col];
                if f != 0.0 {
                    row.iter_mut().zip(&pivot_row).for_each(|(x, y)| *x -= f * y);
                }
            }
        }
        pivots.push(col);
        r += 1;
    }
    rows.truncate(r);
    for row in rows.iter_mut() {
        row.iter_mut().for_each(|x| {
            if x.abs() <= ZERO_ENTRY_TOL {
                *x = 0.0;
            }
        });
    }
    (rows, pivots)
}

/// A complex structure: commutes with every η^α, squares to −I, Zᵀ = −Z.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZStructure {
    z: Matrix8,
    index: usize,
}

/// Residuals of the defining relations of a complex structure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZResiduals {
    /// max over α of ‖Zη^α − η^αZ‖_max
    pub commutator: f64,
    /// ‖Z² + I‖_max
    pub square: f64,
    /// ‖Zᵀ + Z‖_max
    pub antisymmetry: f64,
    /// ‖ZᵀZ − I‖_max
    pub orthogonality: f64,
}

impl ZResiduals {
    pub fn max(&self) -> f64 {
        self.commutator
            .max(self.square)
            .max(self.antisymmetry)
            .max(self.orthogonality)
    }
}

pub const Z_TOL: f64 = 1e-12;

impl ZStructure {
    pub fn matrix(&self) -> &Matrix8 {
        &self.z
    }

    pub fn index(&self) -> usize {
        self.index
    }

    /// −Z, which is again a complex structure.
    pub fn negated(&self) -> ZStructure {
        ZStructure {
            z: -self.z,
            index: self.index,
        }
    }

    pub fn apply(&self, v: &Spinor8) -> Spinor8 {
        self.z.apply(v)
    }

    /// exp(Zθ) = cos θ I + sin θ Z.
    pub fn exp(&self, theta: f64) -> Matrix8 {
        Matrix8::identity().scale(theta.cos()) + self.z.scale(theta.sin())
    }

    /// exp(Zθ)v without forming the matrix.
    pub fn exp_apply(&self, theta: f64, v: &Spinor8) -> Spinor8 {
        *v * theta.cos() + self.apply(v) * theta.sin()
    }

    pub fn residuals(&self, eta: &EtaSet) -> ZResiduals {
        let id = Matrix8::identity();
        let zt = self.z.transpose();
        ZResiduals {
            commutator: eta
                .all()
                .iter()
                .map(|e| self.z.commutator(e).max_abs())
                .fold(0.0, f64::max),
            square: (self.z * self.z + id).max_abs(),
            antisymmetry: (zt + self.z).max_abs(),
            orthogonality: (zt * self.z - id).max_abs(),
        }
    }
}

/// Antisymmetric unit generators of the commutant, in deterministic order.
pub fn complex_structure_generators(eta: &EtaSet) -> Vec<Matrix8> {
    let mut gens: Vec<Matrix8> = Vec::new();
    for m in commutant_basis(eta) {
        let mut v = (m - m.transpose()).scale(0.5);
        for g in &gens {
            let d = v.frobenius_dot(g);
            v = v - g.scale(d);
        }
        let n = v.frobenius_norm();
        if n > NULLSPACE_RTOL {
            gens.push(v.scale(1.0 / n));
        }
    }
    gens
}

/// Selects the `index`-th complex structure from the commutant.
pub fn find_z(eta: &EtaSet, index: usize) -> Result<ZStructure> {
    let gens = complex_structure_generators(eta);
    let m = *gens.get(index).ok_or(if gens.is_empty() {
        DiracError::NoComplexStructure(index)
    } else {
        DiracError::IndexOutOfRange {
            index,
            bound: gens.len(),
        }
    })?;
    // For a square root of a negative multiple of I, M² = −c I with c = −tr(M²)/8.
    let c = -(m * m).trace() / 8.0;
    if c <= 0.0 {
        return Err(DiracError::NoComplexStructure(index));
    }
    let z = ZStructure {
        z: m.scale(1.0 / c.sqrt()),
        index,
    };
    if z.residuals(eta).max() > Z_TOL {
        return Err(DiracError::NoComplexStructure(index));
    }
    Ok(z)
}

// ---------------------------------------------------------------------------
// Plane waves

/// Free plane-wave mode: (ωη⁰ − kη³)χ = branch·κ·χ with ω = +√(k² + κ²).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaneWaveMode {
    pub k: f64,
    pub omega: f64,
    pub branch: i8,
    pub chi: Spinor8,
}

pub fn mass_shell_omega(k: f64, kappa: f64) -> f64 {
    (k * k + kappa * kappa).sqrt()
}

/// (κ I + branch·(ωη⁰ − kη³)) / (2κ), the projector onto the branch eigenspace.
pub fn branch_projector(eta: &EtaSet, k: f64, omega: f64, branch: i8, kappa: f64) -> Matrix8 {
    let op = eta.get(0).scale(omega) - eta.get(3).scale(k);
    (Matrix8::identity().scale(kappa) + op.scale(branch as f64)).scale(0.5 / kappa)
}

pub fn plane_wave_mode(
    eta: &EtaSet,
    _z: &ZStructure,
    k: f64,
    branch: i8,
    kappa: f64,
) -> Result<PlaneWaveMode> {
    if !(kappa > 0.0) || !kappa.is_finite() {
        return Err(DiracError::Validation(format!("kappa must be positive, got {kappa}")));
    }
    if branch != 1 && branch != -1 {
        return Err(DiracError::Validation(format!("branch must be ±1, got {branch}")));
    }
    if !k.is_finite() {
        return Err(DiracError::Validation("wavenumber is not finite".into()));
    }
    let omega = mass_shell_omega(k, kappa);
    let proj = branch_projector(eta, k, omega, branch, kappa);
    for seed in 0..8 {
        let v = proj.apply(&Spinor8::basis(seed));
        let n = v.norm();
        if n > 1e-8 {
            return Ok(PlaneWaveMode {
                k,
                omega,
                branch,
                chi: v * (1.0 / n),
            });
        }
    }
    Err(DiracError::DegenerateProjector)
}

impl PlaneWaveMode {
    /// Residual of (ωη⁰ − kη³)χ = branch·κ·χ in max norm.
    pub fn eigen_residual(&self, eta: &EtaSet, kappa: f64) -> f64 {
        let lhs = eta.get(0).apply(&self.chi) * self.omega - eta.get(3).apply(&self.chi) * self.k;
        (lhs - self.chi * (self.branch as f64 * kappa)).max_abs()
    }

    pub fn mass_shell_residual(&self, kappa: f64) -> f64 {
        (self.omega * self.omega - self.k * self.k - kappa * kappa).abs()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{rngs::StdRng, Rng, SeedableRng};

    fn naive_mul(a: &Matrix8, b: &Matrix8) -> Matrix8 {
        let mut out = Matrix8::zero();
        for i in 0..8 {
            for j in 0..8 {
                for k in 0..8 {
                    out.0[i][j] += a.0[i][k] * b.0[k][j];
                }
            }
        }
        out
    }

    #[test]
    fn eta_entries_match_blocks() {
        let eta = build_eta();
        // row 1, col 8 and row 3, col 6 (1-based) of η¹
        assert_eq!(eta.integer(1)[0][7], 1);
        assert_eq!(eta.integer(1)[2][5], -1);
        for i in 0..8 {
            assert_eq!(eta.integer(0)[i][i], if i < 4 { 1 } else { -1 });
        }
    }

    #[test]
    fn eta0_squares_to_identity() {
        let eta = build_eta();
        let sq = naive_mul(eta.get(0), eta.get(0));
        assert_eq!(sq, Matrix8::identity());
    }

    #[test]
    fn clifford_relations_hold_exactly() {
        let eta = build_eta();
        assert!(eta.clifford_violations().is_empty());
        assert!(eta.transpose_relation_violations().is_empty());
        let twelve = naive_mul(eta.get(1), eta.get(2)) + naive_mul(eta.get(2), eta.get(1));
        assert_eq!(twelve.max_abs(), 0.0);
        assert_eq!(anticommutator(&eta, 0, 0).unwrap(), Matrix8::identity().scale(2.0));
        assert_eq!(anticommutator(&eta, 3, 3).unwrap(), Matrix8::identity().scale(-2.0));
        assert_eq!(anticommutator(&eta, 1, 3).unwrap(), Matrix8::zero());
    }

    #[test]
    fn spatial_etas_are_antisymmetric() {
        let eta = build_eta();
        for i in 1..4 {
            assert_eq!(eta.get(i).transpose(), -*eta.get(i));
        }
    }

    #[test]
    fn anticommutator_rejects_bad_index() {
        let eta = build_eta();
        assert!(matches!(
            anticommutator(&eta, 4, 0),
            Err(DiracError::IndexOutOfRange { index: 4, bound: 4 })
        ));
    }

    #[test]
    fn sign_flip_breaks_clifford() {
        let eta = build_eta();
        let mut int = [*eta.integer(0), *eta.integer(1), *eta.integer(2), *eta.integer(3)];
        let col = (0..8).find(|&j| int[2][0][j] != 0).unwrap();
        int[2][0][col] = -int[2][0][col];
        let tampered = EtaSet::from_integer(int);
        let bad = tampered.clifford_violations();
        assert!(bad.contains(&(2, 2)) || bad.contains(&(1, 2)));
    }

    #[test]
    fn bar_negates_lower_block() {
        let eta = build_eta();
        let b1 = bar(&Spinor8::basis(0), &eta);
        assert_eq!(b1.0[0], 1.0);
        let b5 = bar(&Spinor8::basis(4), &eta);
        assert_eq!(b5.0[4], -1.0);
        let ones = Spinor8([1.0; 8]);
        assert_eq!(bar(&ones, &eta).dot(&ones), 0.0);
    }

    #[test]
    fn a_matrix_examples() {
        let eta = build_eta();
        assert_eq!(build_a(&FourVector::ZERO, 1.0, &eta), Matrix8::zero());
        let a = build_a(&FourVector([1.0, 0.0, 0.0, 0.0]), 1.0, &eta);
        assert_eq!(a, *eta.get(0));
        assert_eq!(a * a, Matrix8::identity());
        let a = build_a(&FourVector([0.0, 0.0, 0.0, 1.0]), 1.0, &eta);
        assert_eq!(a * a, Matrix8::identity().scale(-1.0));
        assert_eq!(a_squared_scalar(&FourVector::ZERO, 1.0), 0.0);
        assert_eq!(a_squared_scalar(&FourVector([2.0, 0.0, 0.0, 0.0]), 1.0), 4.0);
    }

    #[test]
    fn a_square_is_scalar_for_random_potentials() {
        let eta = build_eta();
        let mut rng = StdRng::seed_from_u64(7);
        for _ in 0..1000 {
            let av = FourVector(std::array::from_fn(|_| rng.gen_range(-2.0..2.0)));
            let ek = rng.gen_range(-2.0..2.0);
            let a = build_a(&av, ek, &eta);
            let diff = naive_mul(&a, &a) - Matrix8::identity().scale(a_squared_scalar(&av, ek));
            assert!(diff.max_abs() <= 1e-12, "{}", diff.max_abs());
        }
    }

    /// Independent oracle: dimension of the commutant by brute-force
    /// Gaussian elimination of the 256×64 constraint system.
    fn brute_force_commutant_dim(eta: &EtaSet) -> usize {
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for alpha in 0..4 {
            let e = eta.integer(alpha);
            for i in 0..8 {
                for j in 0..8 {
                    let mut r = vec![0.0; 64];
                    for k in 0..8 {
                        r[8 * i + k] += e[k][j] as f64;
                        r[8 * k + j] -= e[i][k] as f64;
                    }
                    rows.push(r);
                }
            }
        }
        let mut rank = 0;
        for col in 0..64 {
            let Some(p) = (rank..rows.len()).find(|&i| rows[i][col].abs() > 0.5) else {
                continue;
            };
            rows.swap(rank, p);
            let pr = rows[rank].clone();
            for (i, row) in rows.iter_mut().enumerate() {
                if i != rank && row[col] != 0.0 {
                    let f = row[col] / pr[col];
                    row.iter_mut().zip(&pr).for_each(|(x, y)| *x -= f * y);
                }
            }
            rank += 1;
        }
        64 - rank
    }

    #[test]
    fn commutant_has_dimension_four() {
        let eta = build_eta();
        assert_eq!(brute_force_commutant_dim(&eta), 4);
        let basis = commutant_basis(&eta);
        assert_eq!(basis.len(), 4);
        for (i, m) in basis.iter().enumerate() {
            for e in eta.all() {
                assert!(m.commutator(e).max_abs() <= 1e-12);
            }
            for (j, n) in basis.iter().enumerate() {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((m.frobenius_dot(n) - expect).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn identity_lies_in_commutant_span() {
        let eta = build_eta();
        let basis = commutant_basis(&eta);
        let id = Matrix8::identity();
        let mut residual = id;
        for m in &basis {
            residual = residual - m.scale(m.frobenius_dot(&id));
        }
        assert!(residual.max_abs() <= 1e-12);
    }

    #[test]
    fn commutant_basis_is_deterministic_and_ordered() {
        let eta = build_eta();
        let a = commutant_basis(&eta);
        let b = commutant_basis(&eta);
        assert_eq!(a, b);
        let firsts: Vec<usize> = a
            .iter()
            .map(|m| m.to_flat().iter().position(|x| *x != 0.0).unwrap())
            .collect();
        assert!(firsts.windows(2).all(|w| w[0] > w[1]), "{firsts:?}");
        for m in &a {
            let f = m.to_flat();
            assert!(f.iter().find(|x| **x != 0.0).unwrap() > &0.0);
        }
    }

    #[test]
    fn find_z_satisfies_invariants() {
        let eta = build_eta();
        let gens = complex_structure_generators(&eta);
        assert_eq!(gens.len(), 3);
        let zs: Vec<ZStructure> = (0..3).map(|i| find_z(&eta, i).unwrap()).collect();
        for z in &zs {
            let r = z.residuals(&eta);
            assert!(r.max() <= 1e-12, "{r:?}");
        }
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    assert!((*zs[i].matrix() - *zs[j].matrix()).max_abs() > 0.1);
                    assert!((*zs[i].matrix() + *zs[j].matrix()).max_abs() > 0.1);
                }
            }
        }
        assert_eq!(find_z(&eta, 0).unwrap(), zs[0]);
        assert!(matches!(find_z(&eta, 3), Err(DiracError::IndexOutOfRange { .. })));
    }

    #[test]
    fn exp_z_is_rotation() {
        let eta = build_eta();
        let z = find_z(&eta, 0).unwrap();
        let e = z.exp(0.7);
        assert!((e.transpose() * e - Matrix8::identity()).max_abs() < 1e-15);
        let ez = z.exp(std::f64::consts::FRAC_PI_2);
        assert!((ez - *z.matrix()).max_abs() < 1e-15);
    }

    #[test]
    fn plane_wave_examples() {
        let eta = build_eta();
        let z = find_z(&eta, 0).unwrap();
        let m = plane_wave_mode(&eta, &z, 0.0, 1, 1.0).unwrap();
        assert_eq!(m.omega, 1.0);
        let m = plane_wave_mode(&eta, &z, 1.0, 1, 1.0).unwrap();
        assert!((m.omega - 2f64.sqrt()).abs() < 1e-15);
        assert!(m.mass_shell_residual(1.0) <= 1e-12);
        assert!(m.eigen_residual(&eta, 1.0) <= 1e-12);
        assert!((m.chi.norm() - 1.0).abs() < 1e-15);
        assert!(plane_wave_mode(&eta, &z, 1.0, 1, 0.0).is_err());
        assert!(plane_wave_mode(&eta, &z, 1.0, 0, 1.0).is_err());
    }

    #[test]
    fn projector_has_rank_four_on_shell() {
        let eta = build_eta();
        for &(k, b) in &[(0.0, 1i8), (1.0, 1), (2.5, -1), (-0.3, -1)] {
            let omega = mass_shell_omega(k, 1.3);
            let p = branch_projector(&eta, k, omega, b, 1.3);
            let dm = DMatrix::from_fn(8, 8, |i, j| p.0[i][j]);
            let sv = dm.singular_values();
            let smax = sv.max();
            let rank = sv.iter().filter(|s| **s > 1e-9 * smax).count();
            assert_eq!(rank, 4);
            assert!((p * p - p).max_abs() < 1e-12, "{k} {b} {}", (p * p - p).max_abs());
        }
    }
}
