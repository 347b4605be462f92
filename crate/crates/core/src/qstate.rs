//! Dense complex linear algebra and quantum-state containers.
//!
//! Everything here is immutable after construction and validated against the
//! type invariants on construction: state vectors are normalized, unitaries
//! satisfy U†U = I, density matrices are Hermitian with the trace (and, for
//! full matrices, positivity) condition of their kind.
//!
//! Basis convention: the state |q1 q2 … qn⟩ maps to index Σ qi·2^(n−i), so
//! qubit 1 owns the most significant bit. Matrix cell indices are zero-based.

use num_complex::Complex;

use crate::scalar::Scalar;
use crate::{tol, Error, Result};

/// Complex number over the generic real scalar.
pub type Cpx<T> = Complex<T>;

/// Unit-modulus complex number with phase `theta`.
pub fn expi<T: Scalar>(theta: T) -> Cpx<T> {
    Cpx::new(theta.cos(), theta.sin())
}

/// Validation tolerance for stored states: the `f64` contract value, widened
/// for scalars whose epsilon cannot meet it.
fn tol_state<T: Scalar>() -> T {
    T::of(tol::STATE).max(T::epsilon() * T::of(100.0))
}

fn tol_operator<T: Scalar>() -> T {
    T::of(tol::OPERATOR).max(T::epsilon() * T::of(1000.0))
}

/// Dense square complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix<T> {
    dim: usize,
    data: Vec<Cpx<T>>,
}

impl<T: Scalar> CMatrix<T> {
    /// Zero matrix of the given dimension.
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![Cpx::new(T::zero(), T::zero()); dim * dim],
        }
    }

    /// Identity matrix.
    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = Cpx::new(T::one(), T::zero());
        }
        m
    }

    /// Build from a function of (row, col).
    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> Cpx<T>) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    /// Diagonal matrix from its entries.
    pub fn from_diag(diag: &[Cpx<T>]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, d) in diag.iter().enumerate() {
            m[(i, i)] = *d;
        }
        m
    }

    /// Build from rows given as nested vectors; all rows must have length `dim`.
    pub fn from_rows(rows: Vec<Vec<Cpx<T>>>) -> Result<Self> {
        let dim = rows.len();
        let mut m = Self::zeros(dim);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: row.len(),
                });
            }
            for (j, v) in row.into_iter().enumerate() {
                m[(i, j)] = v;
            }
        }
        Ok(m)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn diag(&self) -> Vec<Cpx<T>> {
        (0..self.dim).map(|i| self[(i, i)]).collect()
    }

    pub fn trace(&self) -> Cpx<T> {
        let mut t = Cpx::new(T::zero(), T::zero());
        for i in 0..self.dim {
            t += self[(i, i)];
        }
        t
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self[(j, i)].conj())
    }

    pub fn scaled(&self, c: Cpx<T>) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|x| x * c).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        debug_assert_eq!(self.dim, other.dim);
        Self {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scaled(Cpx::new(-T::one(), T::zero())))
    }

    /// Matrix product `self · other`.
    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim, "matrix product dimension mismatch");
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a.norm_sqr() == T::zero() {
                    continue;
                }
                for j in 0..n {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    /// Matrix-vector product.
    pub fn apply(&self, v: &[Cpx<T>]) -> Vec<Cpx<T>> {
        assert_eq!(self.dim, v.len(), "matrix-vector dimension mismatch");
        (0..self.dim)
            .map(|i| {
                let mut acc = Cpx::new(T::zero(), T::zero());
                for j in 0..self.dim {
                    acc += self[(i, j)] * v[j];
                }
                acc
            })
            .collect()
    }

    /// Kronecker product; `self` owns the most significant index bits.
    pub fn kron(&self, other: &Self) -> Self {
        let (da, db) = (self.dim, other.dim);
        let mut out = Self::zeros(da * db);
        for i in 0..da {
            for j in 0..da {
                let a = self[(i, j)];
                for k in 0..db {
                    for l in 0..db {
                        out[(i * db + k, j * db + l)] = a * other[(k, l)];
                    }
                }
            }
        }
        out
    }

    pub fn max_abs(&self) -> T {
        self.data
            .iter()
            .map(|x| x.norm())
            .fold(T::zero(), T::max)
    }

    /// Max-entry modulus of the difference.
    pub fn max_abs_diff(&self, other: &Self) -> T {
        debug_assert_eq!(self.dim, other.dim);
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(T::zero(), T::max)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.re.is_finite() && x.im.is_finite())
    }

    /// Max |A(i,j) − conj(A(j,i))| over all cells.
    pub fn hermiticity_defect(&self) -> T {
        let mut worst = T::zero();
        for i in 0..self.dim {
            for j in 0..self.dim {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// Max entry of U†U − I.
    pub fn unitarity_defect(&self) -> T {
        self.adjoint()
            .mul(self)
            .max_abs_diff(&Self::identity(self.dim))
    }

    /// Eigenvalues of a Hermitian matrix, ascending.
    ///
    /// Cyclic Jacobi on the real symmetric embedding [[A, −B], [B, A]] of
    /// H = A + iB, whose spectrum is that of H doubled.
    pub fn hermitian_eigenvalues(&self) -> Vec<T> {
        let n = self.dim;
        let m = 2 * n;
        let mut a = vec![T::zero(); m * m];
        for i in 0..n {
            for j in 0..n {
                let h = self[(i, j)];
                a[i * m + j] = h.re;
                a[(i + n) * m + (j + n)] = h.re;
                a[i * m + (j + n)] = -h.im;
                a[(i + n) * m + j] = h.im;
            }
        }
        jacobi_eigenvalues(&mut a, m);
        let mut eig: Vec<T> = (0..m).map(|i| a[i * m + i]).collect();
        eig.sort_by(|x, y| x.partial_cmp(y).unwrap());
        // every eigenvalue of H appears twice in the embedding
        eig.into_iter().step_by(2).collect()
    }
}

impl<T> std::ops::Index<(usize, usize)> for CMatrix<T> {
    type Output = Cpx<T>;
    fn index(&self, (i, j): (usize, usize)) -> &Cpx<T> {
        &self.data[i * self.dim + j]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for CMatrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Cpx<T> {
        &mut self.data[i * self.dim + j]
    }
}

/// In-place cyclic Jacobi diagonalization of a real symmetric matrix.
fn jacobi_eigenvalues<T: Scalar>(a: &mut [T], n: usize) {
    let eps = T::epsilon() * T::of(16.0);
    for _sweep in 0..64 {
        let mut off = T::zero();
        for p in 0..n {
            for q in (p + 1)..n {
                off = off.max(a[p * n + q].abs());
            }
        }
        let scale = (0..n).map(|i| a[i * n + i].abs()).fold(T::one(), T::max);
        if off <= eps * scale {
            return;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq.abs() <= eps * scale {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (T::of(2.0) * apq);
                let t = if theta == T::zero() {
                    T::one()
                } else {
                    -theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt())
                };
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                // A' = Jᵀ A J with J[p][q] = s, J[q][p] = −s
                for r in 0..n {
                    let arp = a[r * n + p];
                    let arq = a[r * n + q];
                    a[r * n + p] = c * arp - s * arq;
                    a[r * n + q] = s * arp + c * arq;
                }
                for r in 0..n {
                    let apr = a[p * n + r];
                    let aqr = a[q * n + r];
                    a[p * n + r] = c * apr - s * aqr;
                    a[q * n + r] = s * apr + c * aqr;
                }
            }
        }
    }
}

/// Normalized pure state over n qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector<T> {
    n_qubits: usize,
    amps: Vec<Cpx<T>>,
}

impl<T: Scalar> StateVector<T> {
    /// Validates length 2^n, finiteness, and unit norm (within 1e−12).
    pub fn new(n_qubits: usize, amps: Vec<Cpx<T>>) -> Result<Self> {
        let dim = 1usize << n_qubits;
        if amps.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: amps.len(),
            });
        }
        if !amps.iter().all(|a| a.re.is_finite() && a.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        let norm2: T = amps.iter().map(|a| a.norm_sqr()).sum();
        let dev = (norm2 - T::one()).abs();
        if dev > tol_state::<T>() {
            return Err(Error::NotNormalized(norm2.sqrt().to_f64().unwrap_or(f64::NAN)));
        }
        Ok(Self { n_qubits, amps })
    }

    /// Computational basis state |index⟩.
    pub fn basis(n_qubits: usize, index: usize) -> Self {
        let dim = 1usize << n_qubits;
        assert!(index < dim);
        let mut amps = vec![Cpx::new(T::zero(), T::zero()); dim];
        amps[index] = Cpx::new(T::one(), T::zero());
        Self { n_qubits, amps }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Cpx<T>] {
        &self.amps
    }

    pub fn amp(&self, index: usize) -> Cpx<T> {
        self.amps[index]
    }

    pub fn norm(&self) -> T {
        self.amps
            .iter()
            .map(|a| a.norm_sqr())
            .sum::<T>()
            .sqrt()
    }

    /// Projector |ψ⟩⟨ψ| as a full density matrix.
    pub fn to_density(&self) -> DensityMatrix<T> {
        let mat = CMatrix::from_fn(self.dim(), |i, j| self.amps[i] * self.amps[j].conj());
        DensityMatrix::new(self.n_qubits, mat, DensityKind::Full)
            .expect("projector of a normalized state is a valid density matrix")
    }
}

/// Whether a density matrix carries the full state or its traceless deviation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DensityKind {
    Full,
    Deviation,
}

/// Hermitian square matrix over n qubits, full or traceless deviation.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix<T> {
    n_qubits: usize,
    mat: CMatrix<T>,
    kind: DensityKind,
}

impl<T: Scalar> DensityMatrix<T> {
    /// Validates Hermiticity (1e−12), and per kind: trace 1 with eigenvalues
    /// ≥ −1e−10 for `Full`, trace 0 for `Deviation` (both at 1e−10).
    pub fn new(n_qubits: usize, mat: CMatrix<T>, kind: DensityKind) -> Result<Self> {
        let dim = 1usize << n_qubits;
        if mat.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: mat.dim(),
            });
        }
        if !mat.is_finite() {
            return Err(Error::NonFinite);
        }
        let herm = mat.hermiticity_defect();
        if herm > tol_state::<T>() {
            return Err(Error::NotHermitian(herm.to_f64().unwrap_or(f64::NAN)));
        }
        let tr = mat.trace();
        let expected = match kind {
            DensityKind::Full => T::one(),
            DensityKind::Deviation => T::zero(),
        };
        if (tr.re - expected).abs() > tol_operator::<T>() || tr.im.abs() > tol_operator::<T>() {
            return Err(Error::BadTrace {
                expected: expected.to_f64().unwrap_or(f64::NAN),
                got: tr.re.to_f64().unwrap_or(f64::NAN),
            });
        }
        if kind == DensityKind::Full {
            let min = mat
                .hermitian_eigenvalues()
                .into_iter()
                .next()
                .unwrap_or(T::zero());
            if min < -tol_operator::<T>() {
                return Err(Error::NotPositive(min.to_f64().unwrap_or(f64::NAN)));
            }
        }
        Ok(Self { n_qubits, mat, kind })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.mat.dim()
    }

    pub fn kind(&self) -> DensityKind {
        self.kind
    }

    pub fn matrix(&self) -> &CMatrix<T> {
        &self.mat
    }

    /// Zero-based cell access.
    pub fn cell(&self, i: usize, j: usize) -> Cpx<T> {
        self.mat[(i, j)]
    }
}

/// Unitary matrix over n qubits; U†U = I within 1e−10.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryMatrix<T> {
    n_qubits: usize,
    mat: CMatrix<T>,
}

impl<T: Scalar> UnitaryMatrix<T> {
    pub fn new(n_qubits: usize, mat: CMatrix<T>) -> Result<Self> {
        let dim = 1usize << n_qubits;
        if mat.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: mat.dim(),
            });
        }
        if !mat.is_finite() {
            return Err(Error::NonFinite);
        }
        let defect = mat.unitarity_defect();
        if defect > tol_operator::<T>() {
            return Err(Error::NotUnitary(defect.to_f64().unwrap_or(f64::NAN)));
        }
        Ok(Self { n_qubits, mat })
    }

    pub fn identity(n_qubits: usize) -> Self {
        Self {
            n_qubits,
            mat: CMatrix::identity(1 << n_qubits),
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.mat.dim()
    }

    pub fn matrix(&self) -> &CMatrix<T> {
        &self.mat
    }

    /// Product `self · other` (other applied first).
    pub fn compose(&self, other: &Self) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: other.dim(),
            });
        }
        Ok(Self {
            n_qubits: self.n_qubits,
            mat: self.mat.mul(&other.mat),
        })
    }
}

/// Kronecker product of two square matrices.
///
/// The first factor owns the most significant index bits:
/// (a ⊗ b)[i·db + k, j·db + l] = a[i, j] · b[k, l].
pub fn tensor_product<T: Scalar>(a: &CMatrix<T>, b: &CMatrix<T>) -> CMatrix<T> {
    a.kron(b)
}

/// Uψ. Preserves the norm; errors on dimension mismatch.
pub fn apply_unitary_state<T: Scalar>(
    u: &UnitaryMatrix<T>,
    psi: &StateVector<T>,
) -> Result<StateVector<T>> {
    if u.dim() != psi.dim() {
        return Err(Error::DimensionMismatch {
            expected: u.dim(),
            got: psi.dim(),
        });
    }
    StateVector::new(psi.n_qubits(), u.matrix().apply(psi.amplitudes()))
}

/// UρU†. Preserves Hermiticity, trace, and kind.
pub fn apply_unitary_density<T: Scalar>(
    u: &UnitaryMatrix<T>,
    rho: &DensityMatrix<T>,
) -> Result<DensityMatrix<T>> {
    if u.dim() != rho.dim() {
        return Err(Error::DimensionMismatch {
            expected: u.dim(),
            got: rho.dim(),
        });
    }
    let conj = u.matrix().mul(rho.matrix()).mul(&u.matrix().adjoint());
    DensityMatrix::new(rho.n_qubits(), conj, rho.kind())
}

/// Max-entry distance between A and cB, with the unit-modulus c estimated
/// from the entry where |A|·|B| is largest.
///
/// Zero exactly when B = cA for some |c| = 1. For unequal inputs this is an
/// upper bound on the true minimum over c.
pub fn distance_up_to_global_phase<T: Scalar>(
    a: &UnitaryMatrix<T>,
    b: &UnitaryMatrix<T>,
) -> Result<T> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            got: b.dim(),
        });
    }
    let n = a.dim();
    let (am, bm) = (a.matrix(), b.matrix());
    let mut best = T::zero();
    let mut pick = (0usize, 0usize);
    for i in 0..n {
        for j in 0..n {
            let w = am[(i, j)].norm() * bm[(i, j)].norm();
            if w > best {
                best = w;
                pick = (i, j);
            }
        }
    }
    let c = if best > T::zero() {
        let r = am[pick] / bm[pick];
        r / r.norm()
    } else {
        Cpx::new(T::one(), T::zero())
    };
    Ok(am.max_abs_diff(&bm.scaled(c)))
}

/// Max difference over the listed zero-based cells after each side is scaled
/// so its largest listed-cell magnitude is 1.
///
/// Both sides all-zero on the listed cells returns 0. Errors on an empty cell
/// list or mismatched dimensions.
pub fn fidelity_observables<T: Scalar>(
    rho: &DensityMatrix<T>,
    sigma: &DensityMatrix<T>,
    cells: &[(usize, usize)],
) -> Result<T> {
    if cells.is_empty() {
        return Err(Error::EmptyCellList);
    }
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            got: sigma.dim(),
        });
    }
    let max_of = |m: &DensityMatrix<T>| {
        cells
            .iter()
            .map(|&(i, j)| m.cell(i, j).norm())
            .fold(T::zero(), T::max)
    };
    let (mr, ms) = (max_of(rho), max_of(sigma));
    if mr == T::zero() && ms == T::zero() {
        return Ok(T::zero());
    }
    let sr = if mr > T::zero() { mr } else { T::one() };
    let ss = if ms > T::zero() { ms } else { T::one() };
    Ok(cells
        .iter()
        .map(|&(i, j)| (rho.cell(i, j) / sr - sigma.cell(i, j) / ss).norm())
        .fold(T::zero(), T::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::C64;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn iz() -> CMatrix<f64> {
        CMatrix::from_diag(&[c(0.5, 0.0), c(-0.5, 0.0)])
    }

    #[test]
    fn tensor_identity_case() {
        let i2 = CMatrix::<f64>::identity(2);
        assert_eq!(tensor_product(&i2, &i2), CMatrix::identity(4));
    }

    #[test]
    fn tensor_block_structure() {
        // diag(1, e^{iφ}) ⊗ I2 = diag(1, 1, e^{iφ}, e^{iφ}) under the
        // MSB-first convention.
        let phi = 0.83;
        let d = CMatrix::from_diag(&[c(1.0, 0.0), expi(phi)]);
        let out = tensor_product(&d, &CMatrix::identity(2));
        let want = CMatrix::from_diag(&[c(1.0, 0.0), c(1.0, 0.0), expi(phi), expi(phi)]);
        assert!(out.max_abs_diff(&want) < 1e-15);
    }

    #[test]
    fn tensor_iz_iz_matches_explicit_construction() {
        // oracle: explicit 4×4 with eigenvalues multiplied elementwise
        let out = tensor_product(&iz(), &iz());
        let want = CMatrix::from_diag(&[c(0.25, 0.0), c(-0.25, 0.0), c(-0.25, 0.0), c(0.25, 0.0)]);
        assert!(out.max_abs_diff(&want) < 1e-15);
    }

    #[test]
    fn apply_unitary_state_identity_and_phase_gate() {
        let psi = StateVector::new(2, vec![c(0.5, 0.0); 4]).unwrap();
        let id = UnitaryMatrix::identity(2);
        assert_eq!(apply_unitary_state(&id, &psi).unwrap(), psi);

        let phi = 1.3;
        let u = UnitaryMatrix::new(
            2,
            CMatrix::from_diag(&[c(1.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), expi(phi)]),
        )
        .unwrap();
        let out = apply_unitary_state(&u, &psi).unwrap();
        for i in 0..3 {
            assert!((out.amp(i) - c(0.5, 0.0)).norm() < 1e-15);
        }
        assert!((out.amp(3) - expi(phi) * 0.5).norm() < 1e-15);
    }

    #[test]
    fn hadamard_pair_builds_uniform_superposition() {
        let h = CMatrix::from_rows(vec![
            vec![c(1.0, 0.0), c(1.0, 0.0)],
            vec![c(1.0, 0.0), c(-1.0, 0.0)],
        ])
        .unwrap()
        .scaled(c(1.0 / 2f64.sqrt(), 0.0));
        let hh = UnitaryMatrix::new(2, tensor_product(&h, &h)).unwrap();
        let out = apply_unitary_state(&hh, &StateVector::basis(2, 0)).unwrap();
        for i in 0..4 {
            assert!((out.amp(i) - c(0.5, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn density_conjugation_by_phase_gate() {
        let psi = StateVector::new(2, vec![c(0.5, 0.0); 4]).unwrap();
        let rho = psi.to_density();
        let phi = -2.1;
        let u = UnitaryMatrix::new(
            2,
            CMatrix::from_diag(&[c(1.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), expi(phi)]),
        )
        .unwrap();
        let out = apply_unitary_density(&u, &rho).unwrap();
        // row 4 carries e^{iφ}, column 4 carries e^{−iφ}, corner stays 1/4
        for j in 0..3 {
            assert!((out.cell(3, j) - expi(phi) * 0.25).norm() < 1e-15);
            assert!((out.cell(j, 3) - expi(-phi) * 0.25).norm() < 1e-15);
        }
        assert!((out.cell(3, 3) - c(0.25, 0.0)).norm() < 1e-15);
        assert!((out.cell(0, 1) - c(0.25, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn x_on_first_qubit_permutes_diagonal() {
        let x = CMatrix::from_rows(vec![
            vec![c(0.0, 0.0), c(1.0, 0.0)],
            vec![c(1.0, 0.0), c(0.0, 0.0)],
        ])
        .unwrap();
        let u = UnitaryMatrix::new(2, tensor_product(&x, &CMatrix::identity(2))).unwrap();
        let diag = [0.4, 0.3, 0.2, 0.1];
        let rho = DensityMatrix::new(
            2,
            CMatrix::from_diag(&diag.map(|d| c(d, 0.0))),
            DensityKind::Full,
        )
        .unwrap();
        let out = apply_unitary_density(&u, &rho).unwrap();
        let want = [0.2, 0.1, 0.4, 0.3];
        for (i, w) in want.iter().enumerate() {
            assert!((out.cell(i, i) - c(*w, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn distance_zero_for_equal_and_phase_shifted() {
        let u = UnitaryMatrix::new(
            2,
            CMatrix::from_diag(&[c(1.0, 0.0), expi(0.3), expi(-1.1), expi(2.0)]),
        )
        .unwrap();
        assert_eq!(distance_up_to_global_phase(&u, &u).unwrap(), 0.0);
        let shifted = UnitaryMatrix::new(2, u.matrix().scaled(expi(std::f64::consts::PI / 7.0)))
            .unwrap();
        assert!(distance_up_to_global_phase(&u, &shifted).unwrap() < 1e-12);
        assert!(distance_up_to_global_phase(&shifted, &u).unwrap() < 1e-12);
    }

    #[test]
    fn distance_of_phase_gate_from_identity() {
        let phi = std::f64::consts::FRAC_PI_2;
        let a = UnitaryMatrix::new(
            2,
            CMatrix::from_diag(&[c(1.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), expi(phi)]),
        )
        .unwrap();
        let b = UnitaryMatrix::identity(2);
        let d = distance_up_to_global_phase(&a, &b).unwrap();
        // dominant-entry phase estimate locks c = 1, leaving |1 − e^{iπ/2}| = √2
        assert!((d - 2f64.sqrt()).abs() < 1e-12);

        // brute-force scan over the phase never exceeds the estimate
        let mut brute = f64::INFINITY;
        for k in 0..20000 {
            let cph = expi(2.0 * std::f64::consts::PI * k as f64 / 20000.0);
            brute = brute.min(a.matrix().max_abs_diff(&b.matrix().scaled(cph)));
        }
        assert!(brute <= d + 1e-12);
    }

    #[test]
    fn fidelity_observables_basics() {
        let psi = StateVector::new(2, vec![c(0.5, 0.0); 4]).unwrap();
        let rho = psi.to_density();
        let cells = [(0, 2), (1, 3)];
        assert_eq!(fidelity_observables(&rho, &rho, &cells).unwrap(), 0.0);

        // scale invariance: compare against the same pattern at double scale
        let half = DensityMatrix::new(
            2,
            rho.matrix().scaled(c(1.0, 0.0)).sub(&CMatrix::identity(4).scaled(c(0.25, 0.0))),
            DensityKind::Deviation,
        )
        .unwrap();
        let double = DensityMatrix::new(
            2,
            half.matrix().scaled(c(2.0, 0.0)),
            DensityKind::Deviation,
        )
        .unwrap();
        assert!(fidelity_observables(&half, &double, &cells).unwrap() < 1e-15);

        assert!(matches!(
            fidelity_observables(&rho, &rho, &[]),
            Err(Error::EmptyCellList)
        ));
    }

    #[test]
    fn fidelity_observables_sees_phase_flip() {
        // the (2,4) cell (zero-based (1,3)) of the uniform-superposition
        // projector conjugated by diag(1,1,1,e^{iφ}) carries e^{−iφ}
        let build = |phi: f64| {
            let u = UnitaryMatrix::new(
                2,
                CMatrix::from_diag(&[c(1.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), expi(phi)]),
            )
            .unwrap();
            let psi = StateVector::new(2, vec![c(0.5, 0.0); 4]).unwrap();
            apply_unitary_density(&u, &psi.to_density()).unwrap()
        };
        let at_pi = build(std::f64::consts::PI);
        let at_zero = build(0.0);
        let d = fidelity_observables(&at_pi, &at_zero, &[(1, 3)]).unwrap();
        assert!((d - 2.0).abs() < 1e-12, "normalized |−1 − 1| = 2, got {d}");
    }

    #[test]
    fn full_density_rejects_negative_eigenvalue() {
        let mat = CMatrix::from_diag(&[c(1.5, 0.0), c(-0.5, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        assert!(matches!(
            DensityMatrix::new(2, mat, DensityKind::Full),
            Err(Error::NotPositive(_))
        ));
    }

    #[test]
    fn deviation_density_requires_zero_trace() {
        let mat = CMatrix::from_diag(&[c(0.5, 0.0), c(0.0, 0.0)]);
        assert!(matches!(
            DensityMatrix::new(1, mat, DensityKind::Deviation),
            Err(Error::BadTrace { .. })
        ));
    }

    #[test]
    fn hermitian_eigenvalues_of_known_matrices() {
        let x = CMatrix::from_rows(vec![
            vec![c(0.0, 0.0), c(1.0, 0.0)],
            vec![c(1.0, 0.0), c(0.0, 0.0)],
        ])
        .unwrap();
        let e = x.hermitian_eigenvalues();
        assert!((e[0] + 1.0).abs() < 1e-12 && (e[1] - 1.0).abs() < 1e-12);

        let y = CMatrix::from_rows(vec![
            vec![c(2.0, 0.0), c(0.0, -1.0)],
            vec![c(0.0, 1.0), c(2.0, 0.0)],
        ])
        .unwrap();
        let e = y.hermitian_eigenvalues();
        assert!((e[0] - 1.0).abs() < 1e-12 && (e[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn state_vector_rejects_unnormalized() {
        let amps = vec![c(1.0, 0.0), c(1.0, 0.0)];
        assert!(matches!(
            StateVector::new(1, amps),
            Err(Error::NotNormalized(_))
        ));
    }

    #[test]
    fn generic_scalar_kernel_works_at_f32() {
        let h = CMatrix::<f32>::from_rows(vec![
            vec![Complex::new(1.0, 0.0), Complex::new(1.0, 0.0)],
            vec![Complex::new(1.0, 0.0), Complex::new(-1.0, 0.0)],
        ])
        .unwrap()
        .scaled(Complex::new(std::f32::consts::FRAC_1_SQRT_2, 0.0));
        assert!(h.unitarity_defect() < 1e-6);
        let hh = tensor_product(&h, &h);
        assert!(hh.unitarity_defect() < 1e-5);
    }

    fn arb_phase() -> impl Strategy<Value = f64> {
        -std::f64::consts::PI..std::f64::consts::PI
    }

    proptest! {
        #[test]
        fn conjugation_preserves_trace_and_hermiticity(
            seeds in prop::collection::vec(arb_phase(), 16),
            phases in prop::collection::vec(arb_phase(), 4),
        ) {
            // random Hermitian deviation from a symmetrized seed matrix
            let raw = CMatrix::from_fn(4, |i, j| expi(seeds[4 * i + j]));
            let mut herm = raw.add(&raw.adjoint()).scaled(c(0.5, 0.0));
            let tr = herm.trace();
            for i in 0..4 {
                herm[(i, i)] = herm[(i, i)] - tr / 4.0;
            }
            let rho = DensityMatrix::new(2, herm, DensityKind::Deviation).unwrap();
            let u = UnitaryMatrix::new(2, CMatrix::from_diag(
                &[expi(phases[0]), expi(phases[1]), expi(phases[2]), expi(phases[3])],
            )).unwrap();
            let out = apply_unitary_density(&u, &rho).unwrap();
            prop_assert!(out.matrix().trace().norm() < 1e-10);
            prop_assert!(out.matrix().hermiticity_defect() < 1e-10);
        }

        #[test]
        fn tensor_product_is_associative(
            a in prop::collection::vec(arb_phase(), 4),
            b in prop::collection::vec(arb_phase(), 4),
            d in prop::collection::vec(arb_phase(), 4),
        ) {
            let ma = CMatrix::from_fn(2, |i, j| expi(a[2 * i + j]));
            let mb = CMatrix::from_fn(2, |i, j| expi(b[2 * i + j]));
            let md = CMatrix::from_fn(2, |i, j| expi(d[2 * i + j]));
            let left = tensor_product(&tensor_product(&ma, &mb), &md);
            let right = tensor_product(&ma, &tensor_product(&mb, &md));
            // index layout agrees exactly; entries are triple products whose
            // grouping differs by at most an ulp
            prop_assert!(left.max_abs_diff(&right) < 1e-14);
        }

        #[test]
        fn distance_symmetric_and_zero_iff_phase_related(
            phases in prop::collection::vec(arb_phase(), 4),
            global in arb_phase(),
        ) {
            let u = UnitaryMatrix::new(2, CMatrix::from_diag(
                &[expi(phases[0]), expi(phases[1]), expi(phases[2]), expi(phases[3])],
            )).unwrap();
            let v = UnitaryMatrix::new(2, u.matrix().scaled(expi(global))).unwrap();
            prop_assert!(distance_up_to_global_phase(&u, &v).unwrap() < 1e-10);
            prop_assert!(distance_up_to_global_phase(&v, &u).unwrap() < 1e-10);

            // perturb one phase: distance must be strictly positive both ways
            let mut bent = phases.clone();
            bent[2] += 0.5;
            let w = UnitaryMatrix::new(2, CMatrix::from_diag(
                &[expi(bent[0]), expi(bent[1]), expi(bent[2]), expi(bent[3])],
            )).unwrap();
            let d1 = distance_up_to_global_phase(&u, &w).unwrap();
            let d2 = distance_up_to_global_phase(&w, &u).unwrap();
            prop_assert!(d1 > 1e-3 && d2 > 1e-3);
            prop_assert!((d1 - d2).abs() < 1e-10);
        }
    }
}
