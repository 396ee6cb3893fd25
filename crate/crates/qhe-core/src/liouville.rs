//! Vectorized density-matrix machinery: operators, density vectors,
//! superoperators, norms, and propagation.
//!
//! The index map is column stacking, `alpha = i + N*j` for matrix entry
//! `(i, j)` (0-based). One convention, used everywhere; the round-trip and
//! isometry tests pin it down. With this map a product `A X B` in Hilbert
//! space becomes `kron(B^T, A)` acting on `vec(X)`.
//!
//! Sign conventions: a Hamiltonian `H` generates `i d_t|rho> = Hs|rho>`
//! reproducing `d_t rho = -i[H, rho]`, and the dissipator superoperator
//! absorbs a factor `i` so that the same Schrödinger-like equation
//! `i d_t|rho> = (Hs + L)|rho>` holds for baths too. Every propagator is
//! then uniformly `exp(-i G t)`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::expm::expm;
use crate::{Error, Result};

pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

/// Structural identity tolerance (Hermiticity, trace preservation, ...).
pub const TOL_STRUCT: f64 = 1e-12;
/// How negative an eigenvalue of a density matrix may get before we call it
/// unphysical.
pub const TOL_POSITIVITY: f64 = -1e-10;

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

fn all_finite(m: &CMat) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Dense operator on the N-dimensional Hilbert space of the working medium.
///
/// Hamiltonians carry energy units; jump operators carry sqrt(rate) units.
#[derive(Debug, Clone, PartialEq)]
pub struct HilbertOperator {
    mat: CMat,
    hermitian: bool,
}

impl HilbertOperator {
    /// General operator. Requires a square, finite matrix with dim >= 2.
    pub fn new(mat: CMat) -> Result<Self> {
        if mat.nrows() != mat.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "operator must be square, got {}x{}",
                mat.nrows(),
                mat.ncols()
            )));
        }
        if mat.nrows() < 2 {
            return Err(Error::InvalidModel(format!(
                "operator dimension must be at least 2, got {}",
                mat.nrows()
            )));
        }
        if !all_finite(&mat) {
            return Err(Error::NonFinite("operator entries".into()));
        }
        Ok(Self { mat, hermitian: false })
    }

    /// Hamiltonian-flagged operator; rejects matrices with Hermitian defect
    /// above `1e-12 * ||M||`.
    pub fn hermitian(mat: CMat) -> Result<Self> {
        let mut op = Self::new(mat)?;
        let norm = op.mat.norm();
        let defect = (&op.mat - op.mat.adjoint()).norm();
        if norm > 0.0 && defect > TOL_STRUCT * norm {
            return Err(Error::NotHermitian { defect: defect / norm });
        }
        op.hermitian = true;
        Ok(op)
    }

    pub fn from_diagonal(levels: &[f64]) -> Result<Self> {
        let diag = CVec::from_iterator(levels.len(), levels.iter().map(|&e| c(e)));
        Self::hermitian(CMat::from_diagonal(&diag))
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.mat
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn adjoint(&self) -> CMat {
        self.mat.adjoint()
    }

    /// Largest singular value.
    pub fn spectral_norm(&self) -> f64 {
        spectral_norm(&self.mat)
    }

    /// Real eigenvalues of a Hermitian-flagged operator, ascending.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        if !self.hermitian {
            return Err(Error::NotHermitian { defect: f64::NAN });
        }
        let mut eigs: Vec<f64> = nalgebra::SymmetricEigen::new(self.mat.clone())
            .eigenvalues
            .iter()
            .copied()
            .collect();
        eigs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Ok(eigs)
    }
}

/// Vectorized N x N operator: a length-N^2 complex vector.
///
/// Density matrices and observables alike live here; the Hilbert-Schmidt
/// inner product becomes the ordinary vector inner product.
#[derive(Debug, Clone, PartialEq)]
pub struct LiouvilleVector {
    v: CVec,
    n: usize,
}

impl LiouvilleVector {
    pub fn from_vector(v: CVec) -> Result<Self> {
        let len = v.len();
        let n = (len as f64).sqrt().round() as usize;
        if n * n != len || n < 2 {
            return Err(Error::DimensionMismatch(format!(
                "length {len} is not a perfect square of a dimension >= 2"
            )));
        }
        Ok(Self { v, n })
    }

    /// |k><k| as a density vector.
    pub fn basis_state(n: usize, k: usize) -> Self {
        assert!(k < n, "basis index out of range");
        let mut v = CVec::zeros(n * n);
        v[k + n * k] = c(1.0);
        Self { v, n }
    }

    pub fn maximally_mixed(n: usize) -> Self {
        let mut v = CVec::zeros(n * n);
        for k in 0..n {
            v[k + n * k] = c(1.0 / n as f64);
        }
        Self { v, n }
    }

    pub fn dim_hilbert(&self) -> usize {
        self.n
    }

    pub fn as_vector(&self) -> &CVec {
        &self.v
    }

    /// tr(rho) through the trace functional <I|rho>.
    pub fn trace(&self) -> C64 {
        (0..self.n).map(|k| self.v[k + self.n * k]).sum()
    }

    /// Diagonal of the unvectorized matrix, as complex entries.
    pub fn diagonal(&self) -> Vec<C64> {
        (0..self.n).map(|k| self.v[k + self.n * k]).collect()
    }

    /// Populations (real parts of the diagonal).
    pub fn populations(&self) -> Vec<f64> {
        self.diagonal().iter().map(|z| z.re).collect()
    }

    /// Projection onto the population space: off-diagonal entries zeroed.
    pub fn population_part(&self) -> Self {
        let mut v = CVec::zeros(self.n * self.n);
        for k in 0..self.n {
            v[k + self.n * k] = self.v[k + self.n * k];
        }
        Self { v, n: self.n }
    }

    /// Complement of [`Self::population_part`].
    pub fn coherence_part(&self) -> Self {
        let mut v = self.v.clone();
        for k in 0..self.n {
            v[k + self.n * k] = c(0.0);
        }
        Self { v, n: self.n }
    }

    /// Frobenius norm of the off-diagonal block.
    pub fn coherence_norm(&self) -> f64 {
        self.coherence_part().v.norm()
    }

    /// Checks the density-vector invariants: unit trace, Hermiticity of the
    /// unvectorized matrix, and eigenvalues above the positivity floor.
    pub fn validate_density(&self) -> Result<()> {
        let tr = self.trace();
        if (tr - c(1.0)).norm() > 1e-9 {
            return Err(Error::InvalidDensity(format!(
                "trace {:.12} deviates from 1",
                tr.re
            )));
        }
        let m = unvectorize(self);
        let herm_defect = (&m - m.adjoint()).norm();
        if herm_defect > 1e-9 {
            return Err(Error::InvalidDensity(format!(
                "Hermiticity defect {herm_defect:.3e}"
            )));
        }
        let h = (&m + m.adjoint()) * c(0.5);
        let min_eig = nalgebra::SymmetricEigen::new(h)
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        if min_eig < TOL_POSITIVITY {
            return Err(Error::InvalidDensity(format!(
                "negative eigenvalue {min_eig:.3e}"
            )));
        }
        Ok(())
    }
}

/// Column-stacking vectorization.
pub fn vectorize(m: &HilbertOperator) -> LiouvilleVector {
    vectorize_matrix(m.matrix())
}

pub fn vectorize_matrix(m: &CMat) -> LiouvilleVector {
    let n = m.nrows();
    // nalgebra stores column-major, so the stacked columns are the raw slice.
    let v = CVec::from_column_slice(m.as_slice());
    LiouvilleVector { v, n }
}

/// Inverse of [`vectorize`].
pub fn unvectorize(v: &LiouvilleVector) -> CMat {
    CMat::from_column_slice(v.n, v.n, v.v.as_slice())
}

/// Hilbert-Schmidt inner product <A|B> = tr(A^dag B).
pub fn inner(a: &LiouvilleVector, b: &LiouvilleVector) -> C64 {
    a.v.dotc(&b.v)
}

/// vec(I), the trace functional as a Liouville vector.
pub fn trace_functional(n: usize) -> LiouvilleVector {
    let mut v = CVec::zeros(n * n);
    for k in 0..n {
        v[k + n * k] = c(1.0);
    }
    LiouvilleVector { v, n }
}

/// Largest singular value, from the full spectrum of the Gram matrix
/// `M^dag M`. The Hermitian eigensolver stays accurate for the clustered
/// spectra that generators and propagators produce, where bidiagonal SVD
/// iterations can misconverge; matrices here are small enough that the
/// dense solve is free.
pub fn spectral_norm(m: &CMat) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    assert!(all_finite(m), "spectral norm of a non-finite matrix");
    if m.iter().all(|z| z.norm_sqr() == 0.0) {
        return 0.0;
    }
    let gram = m.adjoint() * m;
    nalgebra::SymmetricEigen::new(gram)
        .eigenvalues
        .iter()
        .copied()
        .fold(0.0, f64::max)
        .max(0.0)
        .sqrt()
}

/// Role tag for a superoperator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SuperOpKind {
    Hamiltonian,
    Dissipative,
    Dephasing,
    Composite,
    Propagator,
}

/// Dense N^2 x N^2 map on Liouville vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct SuperOperator {
    mat: CMat,
    kind: SuperOpKind,
    n: usize,
}

impl SuperOperator {
    pub fn from_matrix(mat: CMat, kind: SuperOpKind) -> Result<Self> {
        if mat.nrows() != mat.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "superoperator must be square, got {}x{}",
                mat.nrows(),
                mat.ncols()
            )));
        }
        let n = (mat.nrows() as f64).sqrt().round() as usize;
        if n * n != mat.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "superoperator dimension {} is not a perfect square",
                mat.nrows()
            )));
        }
        if !all_finite(&mat) {
            return Err(Error::NonFinite("superoperator entries".into()));
        }
        Ok(Self { mat, kind, n })
    }

    pub fn zero(n: usize, kind: SuperOpKind) -> Self {
        Self {
            mat: CMat::zeros(n * n, n * n),
            kind,
            n,
        }
    }

    /// Superoperator of a Hermitian Hamiltonian: `Hs = kron(I, H) - kron(H^T, I)`
    /// in the column-stacking convention, i.e. entries
    /// `Hs[(i,j),(m,n)] = H[i,m] d_jn - H[n,j] d_im`.
    pub fn hamiltonian(h: &HilbertOperator) -> Result<Self> {
        if !h.is_hermitian() {
            let norm = h.matrix().norm();
            let defect = (h.matrix() - h.adjoint()).norm();
            return Err(Error::NotHermitian {
                defect: if norm > 0.0 { defect / norm } else { 0.0 },
            });
        }
        let n = h.dim();
        let id = CMat::identity(n, n);
        let mat = id.kronecker(h.matrix()) - h.matrix().transpose().kronecker(&id);
        Ok(Self {
            mat,
            kind: SuperOpKind::Hamiltonian,
            n,
        })
    }

    /// Dissipative generator in the i-absorbed convention:
    /// `L = i * sum_k [kron(conj(A_k), A_k) - 1/2 kron(I, A_k^dag A_k)
    ///                 - 1/2 kron((A_k^dag A_k)^T, I)]`,
    /// so that `i d_t|rho> = L|rho>` reproduces the usual jump-operator form.
    pub fn dissipator(n: usize, jump_ops: &[HilbertOperator]) -> Result<Self> {
        let mut mat = CMat::zeros(n * n, n * n);
        let id = CMat::identity(n, n);
        for a in jump_ops {
            if a.dim() != n {
                return Err(Error::DimensionMismatch(format!(
                    "jump operator is {}x{}, expected {}x{}",
                    a.dim(),
                    a.dim(),
                    n,
                    n
                )));
            }
            let am = a.matrix();
            let adag_a = a.adjoint() * am;
            mat += am.conjugate().kronecker(am);
            mat -= id.kronecker(&adag_a) * c(0.5);
            mat -= adag_a.transpose().kronecker(&id) * c(0.5);
        }
        mat *= C64::new(0.0, 1.0);
        Ok(Self {
            mat,
            kind: SuperOpKind::Dissipative,
            n,
        })
    }

    pub fn kind(&self) -> SuperOpKind {
        self.kind
    }

    pub fn matrix(&self) -> &CMat {
        &self.mat
    }

    pub fn dim_hilbert(&self) -> usize {
        self.n
    }

    pub fn dim_liouville(&self) -> usize {
        self.n * self.n
    }

    pub fn scale(&self, w: f64) -> Self {
        Self {
            mat: &self.mat * c(w),
            kind: self.kind,
            n: self.n,
        }
    }

    /// Weighted sum of generators; the result is tagged composite.
    pub fn linear_combination(terms: &[(f64, &SuperOperator)]) -> Result<Self> {
        let n = terms
            .first()
            .map(|(_, g)| g.n)
            .ok_or_else(|| Error::DimensionMismatch("empty linear combination".into()))?;
        let mut mat = CMat::zeros(n * n, n * n);
        for (w, g) in terms {
            if g.n != n {
                return Err(Error::DimensionMismatch(
                    "mixed dimensions in linear combination".into(),
                ));
            }
            mat += &g.mat * c(*w);
        }
        Ok(Self {
            mat,
            kind: SuperOpKind::Composite,
            n,
        })
    }

    pub fn apply(&self, v: &LiouvilleVector) -> LiouvilleVector {
        assert_eq!(self.n, v.n, "superoperator/vector dimension mismatch");
        LiouvilleVector {
            v: &self.mat * &v.v,
            n: self.n,
        }
    }

    /// `self` after `other` (matrix product).
    pub fn compose(&self, other: &SuperOperator) -> SuperOperator {
        assert_eq!(self.n, other.n);
        SuperOperator {
            mat: &self.mat * &other.mat,
            kind: SuperOpKind::Propagator,
            n: self.n,
        }
    }

    /// exp(-i * G * t); rejects t < 0.
    pub fn propagator(&self, t: f64) -> Result<SuperOperator> {
        if t < 0.0 || !t.is_finite() {
            return Err(Error::NegativeDuration(t));
        }
        let mat = expm(&(&self.mat * C64::new(0.0, -t)));
        Ok(SuperOperator {
            mat,
            kind: SuperOpKind::Propagator,
            n: self.n,
        })
    }

    pub fn spectral_norm(&self) -> f64 {
        spectral_norm(&self.mat)
    }

    /// Full eigenvalue spectrum (Schur form).
    pub fn eigenvalues(&self) -> Result<Vec<C64>> {
        let schur = self.mat.clone().schur();
        let eigs = schur
            .eigenvalues()
            .ok_or_else(|| Error::Numerical("Schur eigenvalue extraction failed".into()))?;
        Ok(eigs.iter().copied().collect())
    }

    /// `||<I| G||`: how badly the generator fails to annihilate the trace
    /// functional. Zero (to tolerance) for every valid generator.
    pub fn trace_annihilation_defect(&self) -> f64 {
        let tf = trace_functional(self.n);
        let row = self.mat.ad_mul(&tf.v);
        row.norm()
    }

    /// `||<I| K - <I|||` for a map meant to preserve the trace.
    pub fn trace_preservation_defect(&self) -> f64 {
        let tf = trace_functional(self.n);
        let row = self.mat.ad_mul(&tf.v);
        (row - tf.v).norm()
    }
}

/// Projection onto the population space; complete dephasing as a map.
/// Idempotent and trace preserving.
pub fn complete_dephasing_projector(n: usize) -> SuperOperator {
    let mut mat = CMat::zeros(n * n, n * n);
    for k in 0..n {
        let idx = k + n * k;
        mat[(idx, idx)] = c(1.0);
    }
    SuperOperator {
        mat,
        kind: SuperOpKind::Propagator,
        n,
    }
}

/// tr(A rho) for Hermitian A. The imaginary part must sit below `1e-12`;
/// anything larger signals a corrupted state and is reported as an error
/// rather than silently discarded.
pub fn expectation(a: &HilbertOperator, rho: &LiouvilleVector) -> Result<f64> {
    if !a.is_hermitian() {
        return Err(Error::NotHermitian { defect: f64::NAN });
    }
    if a.dim() != rho.n {
        return Err(Error::DimensionMismatch(format!(
            "observable dim {} vs state dim {}",
            a.dim(),
            rho.n
        )));
    }
    let val = inner(&vectorize(a), rho);
    if val.im.abs() > TOL_STRUCT {
        return Err(Error::CorruptedState { imag: val.im });
    }
    Ok(val.re)
}

/// Choi matrix of a superoperator in the column-stacking convention.
/// Positive semidefinite iff the map is completely positive.
pub fn choi_matrix(k: &SuperOperator) -> CMat {
    let n = k.n;
    let mut choi = CMat::zeros(n * n, n * n);
    for i in 0..n {
        for j in 0..n {
            for m in 0..n {
                for nn in 0..n {
                    choi[(m * n + i, nn * n + j)] = k.mat[(i + n * j, m + n * nn)];
                }
            }
        }
    }
    choi
}

/// Quantitative CPTP diagnostics for a propagator.
#[derive(Debug, Clone, Copy)]
pub struct CptpDefects {
    pub trace_preservation: f64,
    pub choi_hermiticity: f64,
    pub choi_min_eigenvalue: f64,
}

pub fn cptp_defects(k: &SuperOperator) -> CptpDefects {
    let choi = choi_matrix(k);
    let herm = (&choi - choi.adjoint()).norm();
    let sym = (&choi + choi.adjoint()) * c(0.5);
    let min_eig = nalgebra::SymmetricEigen::new(sym)
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    CptpDefects {
        trace_preservation: k.trace_preservation_defect(),
        choi_hermiticity: herm,
        choi_min_eigenvalue: min_eig,
    }
}

/// Errors unless the map preserves traces to 1e-12 and its Choi matrix is
/// Hermitian (1e-12) and positive (floor -1e-10).
pub fn assert_cptp(k: &SuperOperator) -> Result<()> {
    let d = cptp_defects(k);
    if d.trace_preservation > TOL_STRUCT * (k.n as f64) {
        return Err(Error::CptpViolation(format!(
            "trace preservation defect {:.3e}",
            d.trace_preservation
        )));
    }
    if d.choi_hermiticity > TOL_STRUCT * (k.n as f64) {
        return Err(Error::CptpViolation(format!(
            "Choi Hermiticity defect {:.3e}",
            d.choi_hermiticity
        )));
    }
    if d.choi_min_eigenvalue < TOL_POSITIVITY {
        return Err(Error::CptpViolation(format!(
            "Choi minimum eigenvalue {:.3e}",
            d.choi_min_eigenvalue
        )));
    }
    Ok(())
}

/// Solves `M x = 0` with the normalization `<I|x> = 1`. `M` must annihilate
/// the trace functional from the left (true for `G` of any generator and
/// `K - I` of any trace-preserving map), which makes its population rows
/// linearly dependent; replacing one of them with the trace row yields a
/// square system solved by LU with one step of iterative refinement. A
/// stacked least-squares solve covers the degenerate-kernel case, where the
/// square system is singular and the minimum-norm element is wanted.
pub fn solve_trace_normalized_kernel(m: &CMat, n: usize) -> Result<LiouvilleVector> {
    let nn = n * n;
    assert_eq!(m.nrows(), nn);
    // Balance the kernel rows against the unit-scale trace row; otherwise
    // the solves tolerate kernel residuals proportional to the (often tiny)
    // generator norm.
    let scale = m.norm();
    let balanced = if scale > 0.0 { m / c(scale) } else { m.clone() };
    let tf = trace_functional(n);

    let residual_of = |x: &CVec| -> f64 {
        let r = (&balanced * x).norm();
        let t = (tf.v.dotc(x) - c(1.0)).norm();
        (r * r + t * t).sqrt() / x.norm().max(1e-300)
    };

    // Row replacement: the (1,1) population row is always in the linear
    // dependency enforced by trace annihilation.
    let mut square = balanced.clone();
    for col in 0..nn {
        square[(0, col)] = tf.v[col].conj();
    }
    let mut rhs = CVec::zeros(nn);
    rhs[0] = c(1.0);
    let lu = square.clone().lu();
    if let Some(mut x) = lu.solve(&rhs) {
        // one refinement step tightens the residual to the round-off floor
        let r = &rhs - &square * &x;
        if let Some(dx) = lu.solve(&r) {
            x += dx;
        }
        if residual_of(&x) <= 1e-12 {
            return LiouvilleVector::from_vector(x);
        }
    }

    // Degenerate or ill-conditioned square system: minimum-norm least
    // squares on the stacked system.
    let mut stacked = CMat::zeros(nn + 1, nn);
    stacked.view_mut((0, 0), (nn, nn)).copy_from(&balanced);
    for col in 0..nn {
        stacked[(nn, col)] = tf.v[col].conj();
    }
    let mut rhs = CVec::zeros(nn + 1);
    rhs[nn] = c(1.0);
    let svd = stacked.clone().svd(true, true);
    let sol = svd
        .solve(&rhs, 1e-12)
        .map_err(|e| Error::Numerical(format!("kernel least-squares solve failed: {e}")))?;
    let x = sol.column(0).into_owned();
    if residual_of(&x) <= 1e-10 {
        return LiouvilleVector::from_vector(x);
    }
    Err(Error::Numerical(format!(
        "kernel solve residual {:.3e} too large",
        residual_of(&x)
    )))
}
