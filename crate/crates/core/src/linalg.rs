//! Dense complex linear algebra and register state manipulation.
//!
//! Amplitudes are stored big-endian: site 0 is the most significant digit of
//! the base-`d` amplitude index, so `kron(a, b)` acting on sites `(i, i + 1)`
//! is the natural embedding of a two-site operator.

use std::fmt;
use std::ops::{Index, Mul};

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{invalid, Error, Result};

pub type C64 = Complex64;

/// Tolerance used when checking that an operator is Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Tolerance used when checking that an operator is unitary.
pub const UNITARY_TOL: f64 = 1e-10;
/// Tolerance on the Euclidean norm of a state vector.
pub const NORM_TOL: f64 = 1e-12;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);

/// Square complex matrix with an explicit dimension.
#[derive(Clone, PartialEq)]
pub struct DenseOperator {
    m: DMatrix<C64>,
}

impl fmt::Debug for DenseOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DenseOperator(dim={}) {}", self.dim(), self.m)
    }
}

impl DenseOperator {
    pub fn from_matrix(m: DMatrix<C64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(invalid(format!(
                "operator must be square, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.nrows() == 0 {
            return Err(invalid("operator dimension must be positive"));
        }
        Ok(Self { m })
    }

    pub fn from_fn(dim: usize, f: impl FnMut(usize, usize) -> C64) -> Self {
        assert!(dim > 0, "operator dimension must be positive");
        Self {
            m: DMatrix::from_fn(dim, dim, f),
        }
    }

    /// Builds an operator from row-major entries.
    pub fn from_rows(dim: usize, entries: &[C64]) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                found: entries.len(),
            });
        }
        Self::from_matrix(DMatrix::from_row_slice(dim, dim, entries))
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_fn(dim, |i, j| if i == j { ONE } else { ZERO })
    }

    pub fn zeros(dim: usize) -> Self {
        Self::from_fn(dim, |_, _| ZERO)
    }

    pub fn diagonal(entries: &[C64]) -> Self {
        Self::from_fn(entries.len(), |i, j| if i == j { entries[i] } else { ZERO })
    }

    pub fn real_diagonal(entries: &[f64]) -> Self {
        Self::from_fn(entries.len(), |i, j| {
            if i == j {
                C64::new(entries[i], 0.0)
            } else {
                ZERO
            }
        })
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.m
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.m
    }

    /// Row-major copy of the entries.
    pub fn to_rows(&self) -> Vec<C64> {
        let n = self.dim();
        let mut out = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                out.push(self.m[(i, j)]);
            }
        }
        out
    }

    pub fn adjoint(&self) -> Self {
        Self {
            m: self.m.adjoint(),
        }
    }

    pub fn scale(&self, s: C64) -> Self {
        Self { m: &self.m * s }
    }

    pub fn try_mul(&self, rhs: &Self) -> Result<Self> {
        self.check_same_dim(rhs)?;
        Ok(Self {
            m: &self.m * &rhs.m,
        })
    }

    pub fn try_add(&self, rhs: &Self) -> Result<Self> {
        self.check_same_dim(rhs)?;
        Ok(Self {
            m: &self.m + &rhs.m,
        })
    }

    pub fn try_sub(&self, rhs: &Self) -> Result<Self> {
        self.check_same_dim(rhs)?;
        Ok(Self {
            m: &self.m - &rhs.m,
        })
    }

    pub fn pow(&self, n: u32) -> Self {
        let mut out = Self::identity(self.dim());
        for _ in 0..n {
            out = &out * self;
        }
        out
    }

    pub fn trace(&self) -> C64 {
        self.m.trace()
    }

    /// Largest elementwise modulus of `self - rhs`.
    pub fn max_abs_diff(&self, rhs: &Self) -> Result<f64> {
        self.check_same_dim(rhs)?;
        Ok(self
            .m
            .iter()
            .zip(rhs.m.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    pub fn max_abs(&self) -> f64 {
        self.m.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `max |A - A^dag|`.
    pub fn hermiticity_deviation(&self) -> f64 {
        let n = self.dim();
        let mut dev = 0.0f64;
        for i in 0..n {
            for j in i..n {
                dev = dev.max((self.m[(i, j)] - self.m[(j, i)].conj()).norm());
            }
        }
        dev
    }

    /// `max |U^dag U - I|`.
    pub fn unitarity_deviation(&self) -> f64 {
        let prod = self.m.adjoint() * &self.m;
        let mut dev = 0.0f64;
        for (idx, z) in prod.iter().enumerate() {
            let (i, j) = (idx % self.dim(), idx / self.dim());
            let target = if i == j { ONE } else { ZERO };
            dev = dev.max((z - target).norm());
        }
        dev
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermiticity_deviation() < HERMITIAN_TOL
    }

    pub fn is_unitary(&self) -> bool {
        self.unitarity_deviation() < UNITARY_TOL
    }

    pub fn ensure_hermitian(&self) -> Result<()> {
        let deviation = self.hermiticity_deviation();
        if deviation < HERMITIAN_TOL {
            Ok(())
        } else {
            Err(Error::NotHermitian { deviation })
        }
    }

    pub fn ensure_unitary(&self) -> Result<()> {
        let deviation = self.unitarity_deviation();
        if deviation < UNITARY_TOL {
            Ok(())
        } else {
            Err(Error::NotUnitary { deviation })
        }
    }

    /// Restriction to the given basis indices (rows and columns in that order).
    pub fn submatrix(&self, indices: &[usize]) -> Self {
        Self::from_fn(indices.len(), |i, j| self.m[(indices[i], indices[j])])
    }

    /// `A v` for a raw amplitude slice.
    pub fn apply_to(&self, v: &[C64]) -> Result<Vec<C64>> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: v.len(),
            });
        }
        let n = self.dim();
        Ok((0..n)
            .map(|i| (0..n).map(|j| self.m[(i, j)] * v[j]).sum())
            .collect())
    }

    fn check_same_dim(&self, rhs: &Self) -> Result<()> {
        if self.dim() != rhs.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: rhs.dim(),
            });
        }
        Ok(())
    }
}

impl Index<(usize, usize)> for DenseOperator {
    type Output = C64;

    fn index(&self, idx: (usize, usize)) -> &C64 {
        &self.m[idx]
    }
}

impl Mul for &DenseOperator {
    type Output = DenseOperator;

    /// Panics on dimension mismatch; use [`DenseOperator::try_mul`] otherwise.
    fn mul(self, rhs: &DenseOperator) -> DenseOperator {
        self.try_mul(rhs).expect("operator dimensions must agree")
    }
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &DenseOperator, b: &DenseOperator) -> DenseOperator {
    let (da, db) = (a.dim(), b.dim());
    DenseOperator::from_fn(da * db, |i, j| {
        a.m[(i / db, j / db)] * b.m[(i % db, j % db)]
    })
}

/// Kronecker product of a list of operators, left to right.
pub fn kron_all<'a>(ops: impl IntoIterator<Item = &'a DenseOperator>) -> DenseOperator {
    let mut it = ops.into_iter();
    let first = it
        .next()
        .expect("kron_all needs at least one operator")
        .clone();
    it.fold(first, |acc, op| kron(&acc, op))
}

/// Eigendecomposition of a Hermitian operator: `h = V diag(values) V^dag`.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: DenseOperator,
}

impl HermitianEigen {
    pub fn new(h: &DenseOperator) -> Result<Self> {
        h.ensure_hermitian()?;
        let real = h.m.iter().all(|z| z.im == 0.0);
        if real {
            // Real symmetric input (all Potts generators) takes the cheaper path.
            let re = h.m.map(|z| z.re);
            let eig = SymmetricEigen::new(re);
            Ok(Self {
                values: eig.eigenvalues.iter().copied().collect(),
                vectors: DenseOperator {
                    m: eig.eigenvectors.map(|x| C64::new(x, 0.0)),
                },
            })
        } else {
            let eig = SymmetricEigen::new(h.m.clone());
            Ok(Self {
                values: eig.eigenvalues.iter().copied().collect(),
                vectors: DenseOperator {
                    m: eig.eigenvectors,
                },
            })
        }
    }

    /// `V diag(f(λ)) V^dag`.
    pub fn map_spectrum(&self, f: impl Fn(f64) -> C64) -> DenseOperator {
        let v = &self.vectors.m;
        let mut scaled = v.clone();
        for (j, &lambda) in self.values.iter().enumerate() {
            let factor = f(lambda);
            for z in scaled.column_mut(j).iter_mut() {
                *z *= factor;
            }
        }
        DenseOperator {
            m: scaled * v.adjoint(),
        }
    }

    /// Eigenvalues sorted ascending.
    pub fn sorted_values(&self) -> Vec<f64> {
        let mut v = self.values.clone();
        v.sort_by(f64::total_cmp);
        v
    }
}

/// Haar-distributed `dim x dim` unitary: QR of a complex Gaussian matrix,
/// with the phases of `R`'s diagonal folded back into `Q`.
pub fn haar_unitary(dim: usize, rng: &mut impl rand::Rng) -> DenseOperator {
    let normal = StandardNormal;
    let z = DMatrix::from_fn(dim, dim, |_, _| {
        let re: f64 = normal.sample(rng);
        let im: f64 = normal.sample(rng);
        C64::new(re, im)
    });
    let (q, r) = z.qr().unpack();
    let mut q = q;
    for j in 0..dim {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { ONE };
        for i in 0..dim {
            q[(i, j)] *= phase;
        }
    }
    DenseOperator { m: q }
}

/// `exp(i * scale * h)` for Hermitian `h`, via the spectral decomposition.
pub fn hermitian_expm(h: &DenseOperator, scale: f64) -> Result<DenseOperator> {
    let eig = HermitianEigen::new(h)?;
    Ok(eig.map_spectrum(|lambda| C64::from_polar(1.0, scale * lambda)))
}

const PHASE_SCAN_POINTS: usize = 256;

/// `min_φ max_ij |a_ij - e^{iφ} b_ij|`.
///
/// The trace phase `arg tr(b^dag a)` seeds the search; a coarse scan plus a
/// golden-section refinement of the best brackets handles cases where the
/// trace phase is not the minimiser of the elementwise maximum.
pub fn phase_aligned_distance(a: &DenseOperator, b: &DenseOperator) -> Result<f64> {
    a.check_same_dim(b)?;
    let trace_phase = (b.m.adjoint() * &a.m).trace().arg();
    let seed = C64::from_polar(1.0, trace_phase);
    // With r = a - e^{iφ0} b and w = e^{iδ} - 1:
    // |a - e^{i(φ0+δ)} b|^2 = |r|^2 - 2 Re(conj(r) w e^{iφ0} b) + |w|^2 |b|^2,
    // every term small when a and b are close.
    let terms: Vec<(f64, C64, f64)> =
        a.m.iter()
            .zip(b.m.iter())
            .map(|(x, y)| {
                let yb = seed * y;
                let r = x - yb;
                (r.norm_sqr(), r.conj() * yb, y.norm_sqr())
            })
            .collect();
    let cost = |delta: f64| -> f64 {
        let half = (0.5 * delta).sin();
        let w = C64::new(-2.0 * half * half, delta.sin());
        let w2 = w.norm_sqr();
        terms
            .iter()
            .map(|(r2, c, b2)| r2 - 2.0 * (c * w).re + w2 * b2)
            .fold(0.0, f64::max)
            .max(0.0)
    };

    let mut best = cost(0.0);
    if best == 0.0 {
        return Ok(0.0);
    }

    let step = std::f64::consts::TAU / PHASE_SCAN_POINTS as f64;
    let grid: Vec<(f64, f64)> = (0..PHASE_SCAN_POINTS)
        .map(|i| {
            let delta = i as f64 * step - std::f64::consts::PI;
            (delta, cost(delta))
        })
        .collect();
    let mut order: Vec<usize> = (0..PHASE_SCAN_POINTS).collect();
    order.sort_by(|&i, &j| grid[i].1.total_cmp(&grid[j].1));
    for &i in order.iter().take(4) {
        let centre = grid[i].0;
        best = best.min(golden_min(&cost, centre - step, centre + step));
    }
    Ok(best.sqrt())
}

fn golden_min(f: &impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - ratio * (hi - lo);
    let mut x2 = lo + ratio * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..80 {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - ratio * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + ratio * (hi - lo);
            f2 = f(x2);
        }
    }
    f1.min(f2)
}

/// Pure state of `sites` qudits, each of dimension `local_dim`.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    amplitudes: Vec<C64>,
    local_dim: usize,
    sites: usize,
}

impl StateVector {
    /// Wraps amplitudes, checking length `d^N` and unit norm.
    pub fn new(local_dim: usize, sites: usize, amplitudes: Vec<C64>) -> Result<Self> {
        let dim = register_dim(local_dim, sites)?;
        if amplitudes.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: amplitudes.len(),
            });
        }
        let state = Self {
            amplitudes,
            local_dim,
            sites,
        };
        let norm = state.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized { norm });
        }
        Ok(state)
    }

    /// Wraps amplitudes and rescales them to unit norm.
    pub fn normalized(local_dim: usize, sites: usize, mut amplitudes: Vec<C64>) -> Result<Self> {
        let norm = amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::NotNormalized { norm });
        }
        for z in &mut amplitudes {
            *z /= norm;
        }
        Self::new(local_dim, sites, amplitudes)
    }

    /// Computational basis state `|digits[0] digits[1] ...>`.
    pub fn basis(local_dim: usize, digits: &[usize]) -> Result<Self> {
        let dim = register_dim(local_dim, digits.len())?;
        let mut index = 0;
        for &digit in digits {
            if digit >= local_dim {
                return Err(invalid(format!(
                    "level {digit} out of range for local dimension {local_dim}"
                )));
            }
            index = index * local_dim + digit;
        }
        let mut amplitudes = vec![ZERO; dim];
        amplitudes[index] = ONE;
        Ok(Self {
            amplitudes,
            local_dim,
            sites: digits.len(),
        })
    }

    /// `|0 0 ... 0>`.
    pub fn all_zero(local_dim: usize, sites: usize) -> Result<Self> {
        Self::basis(local_dim, &vec![0; sites])
    }

    /// Tensor product of single-site states.
    pub fn product(local_states: &[Vec<C64>]) -> Result<Self> {
        let first = local_states
            .first()
            .ok_or_else(|| invalid("product state needs at least one site"))?;
        let d = first.len();
        let mut amps = vec![ONE];
        for local in local_states {
            if local.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: local.len(),
                });
            }
            amps = amps
                .iter()
                .flat_map(|a| local.iter().map(move |b| a * b))
                .collect();
        }
        Self::normalized(d, local_states.len(), amps)
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub(crate) fn amplitudes_mut(&mut self) -> &mut [C64] {
        &mut self.amplitudes
    }

    pub fn local_dim(&self) -> usize {
        self.local_dim
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes
            .iter()
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &Self) -> Result<C64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// `<self|op|self>` for an operator on the whole register.
    pub fn expectation(&self, op: &DenseOperator) -> Result<C64> {
        let applied = op.apply_to(&self.amplitudes)?;
        Ok(self
            .amplitudes
            .iter()
            .zip(&applied)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// Multiplies the whole register by a full `d^N x d^N` operator.
    pub fn apply_full(&mut self, op: &DenseOperator) -> Result<()> {
        self.amplitudes = op.apply_to(&self.amplitudes)?;
        Ok(())
    }

    /// Applies `op` to `sites` in place (identity elsewhere).
    ///
    /// `sites[0]` is the most significant factor of `op`. Non-adjacent and
    /// out-of-order targets are handled by stride arithmetic.
    pub fn apply_local(&mut self, op: &DenseOperator, sites: &[usize]) -> Result<()> {
        let layout = LocalLayout::new(self.local_dim, self.sites, sites)?;
        if op.dim() != layout.offsets.len() {
            return Err(Error::DimensionMismatch {
                expected: layout.offsets.len(),
                found: op.dim(),
            });
        }
        layout.apply(&op.to_rows(), &mut self.amplitudes);
        Ok(())
    }

    /// Embeds the state into a register with a larger local dimension; the
    /// extra levels start unpopulated.
    pub fn embed_levels(&self, local_dim: usize) -> Result<Self> {
        if local_dim < self.local_dim {
            return Err(invalid(format!(
                "cannot embed local dimension {} into {}",
                self.local_dim, local_dim
            )));
        }
        let dim = register_dim(local_dim, self.sites)?;
        let mut amplitudes = vec![ZERO; dim];
        for (idx, amp) in self.amplitudes.iter().enumerate() {
            amplitudes[reindex(idx, self.local_dim, local_dim, self.sites)] = *amp;
        }
        Ok(Self {
            amplitudes,
            local_dim,
            sites: self.sites,
        })
    }

    /// Inverse of [`Self::embed_levels`]: keeps levels `< local_dim` only.
    /// The result is not renormalised, so leakage shows up as a norm deficit.
    pub fn restrict_levels(&self, local_dim: usize) -> Result<Vec<C64>> {
        if local_dim > self.local_dim {
            return Err(invalid("restriction must not enlarge the local dimension"));
        }
        let dim = register_dim(local_dim, self.sites)?;
        Ok((0..dim)
            .map(|idx| self.amplitudes[reindex(idx, local_dim, self.local_dim, self.sites)])
            .collect())
    }

    /// Total probability on basis states where any site has level `>= level`.
    pub fn population_at_or_above(&self, level: usize) -> f64 {
        self.amplitudes
            .iter()
            .enumerate()
            .filter(|(idx, _)| digits(*idx, self.local_dim, self.sites).any(|x| x >= level))
            .map(|(_, z)| z.norm_sqr())
            .sum()
    }

    /// Multiplies all amplitudes by `e^{iφ}`.
    pub fn with_global_phase(mut self, phi: f64) -> Self {
        let e = C64::from_polar(1.0, phi);
        for z in &mut self.amplitudes {
            *z *= e;
        }
        self
    }
}

/// Functional form of [`StateVector::apply_local`].
pub fn apply_local(
    state: &StateVector,
    op: &DenseOperator,
    sites: &[usize],
) -> Result<StateVector> {
    let mut out = state.clone();
    out.apply_local(op, sites)?;
    Ok(out)
}

/// `|<a|b>|^2`, clamped to `[0, 1]`.
pub fn state_fidelity(a: &StateVector, b: &StateVector) -> Result<f64> {
    Ok(a.inner(b)?.norm_sqr().clamp(0.0, 1.0))
}

/// `min_φ || a - e^{iφ} b ||_2 = sqrt(2 - 2 |<a|b>|)` for unit vectors.
pub fn phase_aligned_state_distance(a: &StateVector, b: &StateVector) -> Result<f64> {
    let overlap = b.inner(a)?;
    let phase = if overlap.norm() > 0.0 {
        overlap / overlap.norm()
    } else {
        ONE
    };
    Ok(a.amplitudes
        .iter()
        .zip(&b.amplitudes)
        .map(|(x, y)| (x - phase * y).norm_sqr())
        .sum::<f64>()
        .sqrt())
}

pub(crate) fn register_dim(local_dim: usize, sites: usize) -> Result<usize> {
    if local_dim < 2 {
        return Err(invalid(format!(
            "local dimension must be >= 2, got {local_dim}"
        )));
    }
    if sites == 0 {
        return Err(invalid("register needs at least one site"));
    }
    local_dim
        .checked_pow(sites as u32)
        .ok_or_else(|| invalid("register dimension overflows"))
}

/// Base-`d` digits of `idx`, most significant (site 0) first.
pub(crate) fn digits(idx: usize, d: usize, sites: usize) -> impl Iterator<Item = usize> {
    (0..sites).map(move |s| (idx / d.pow((sites - 1 - s) as u32)) % d)
}

fn reindex(idx: usize, from: usize, to: usize, sites: usize) -> usize {
    digits(idx, from, sites).fold(0, |acc, x| acc * to + x)
}

/// Gather/scatter pattern for a k-local operator on an N-site register.
pub(crate) struct LocalLayout {
    offsets: Vec<usize>,
    bases: Vec<usize>,
}

impl LocalLayout {
    pub(crate) fn new(d: usize, n: usize, sites: &[usize]) -> Result<Self> {
        if sites.is_empty() {
            return Err(invalid("target site list is empty"));
        }
        for (i, &s) in sites.iter().enumerate() {
            if s >= n {
                return Err(Error::SiteOutOfRange { site: s, sites: n });
            }
            if sites[..i].contains(&s) {
                return Err(Error::RepeatedSite(s));
            }
        }
        let stride = |s: usize| d.pow((n - 1 - s) as u32);
        let k = sites.len();
        let block = d.pow(k as u32);
        let offsets = (0..block)
            .map(|j| {
                digits(j, d, k)
                    .zip(sites)
                    .map(|(digit, &s)| digit * stride(s))
                    .sum()
            })
            .collect();
        let others: Vec<usize> = (0..n).filter(|s| !sites.contains(s)).collect();
        let rest = d.pow(others.len() as u32);
        let bases = (0..rest)
            .map(|c| {
                digits(c, d, others.len())
                    .zip(&others)
                    .map(|(digit, &s)| digit * stride(s))
                    .sum()
            })
            .collect();
        Ok(Self { offsets, bases })
    }

    /// `op_rows` is the row-major operator.
    pub(crate) fn apply(&self, op_rows: &[C64], amplitudes: &mut [C64]) {
        let block = self.offsets.len();
        let mut input = vec![ZERO; block];
        for &base in &self.bases {
            for (slot, off) in input.iter_mut().zip(&self.offsets) {
                *slot = amplitudes[base + off];
            }
            for (row, off) in op_rows.chunks_exact(block).zip(&self.offsets) {
                amplitudes[base + off] = row.iter().zip(&input).map(|(a, b)| a * b).sum();
            }
        }
    }
}

/// `op` on `sites`, identity elsewhere, as a full `d^N x d^N` matrix.
pub fn embed_operator(
    op: &DenseOperator,
    d: usize,
    n: usize,
    sites: &[usize],
) -> Result<DenseOperator> {
    let dim = register_dim(d, n)?;
    let layout = LocalLayout::new(d, n, sites)?;
    if op.dim() != layout.offsets.len() {
        return Err(Error::DimensionMismatch {
            expected: layout.offsets.len(),
            found: op.dim(),
        });
    }
    let rows = op.to_rows();
    let mut out = DMatrix::from_element(dim, dim, ZERO);
    let mut column = vec![ZERO; dim];
    for j in 0..dim {
        column.iter_mut().for_each(|z| *z = ZERO);
        column[j] = ONE;
        layout.apply(&rows, &mut column);
        for (i, z) in column.iter().enumerate() {
            out[(i, j)] = *z;
        }
    }
    Ok(DenseOperator { m: out })
}
