//! Quantum Potts chain: `H = -J Σ_<n,n'> Σ_k Ω_n^k Ω_{n'}^{q-k} - g Σ_n Σ_k Γ_n^k`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::gates;
use crate::linalg::{digits, DenseOperator, HermitianEigen, StateVector, C64, ZERO};

/// Largest Hilbert-space dimension for dense construction (`3^10`).
pub const DENSE_DIM_CAP: usize = 59_049;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    #[default]
    Open,
    Periodic,
}

impl fmt::Display for Boundary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Boundary::Open => "open",
            Boundary::Periodic => "periodic",
        })
    }
}

impl FromStr for Boundary {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "open" => Ok(Boundary::Open),
            "periodic" => Ok(Boundary::Periodic),
            other => Err(invalid(format!("unknown boundary `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PottsParams {
    pub q: usize,
    pub sites: usize,
    pub coupling_j: f64,
    pub field_g: f64,
    pub boundary: Boundary,
}

impl PottsParams {
    pub fn new(
        q: usize,
        sites: usize,
        coupling_j: f64,
        field_g: f64,
        boundary: Boundary,
    ) -> Result<Self> {
        let p = Self {
            q,
            sites,
            coupling_j,
            field_g,
            boundary,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.q < 2 {
            return Err(invalid(format!("q must be >= 2, got {}", self.q)));
        }
        if self.sites < 2 {
            return Err(invalid(format!(
                "chain needs >= 2 sites, got {}",
                self.sites
            )));
        }
        if !self.coupling_j.is_finite() || !self.field_g.is_finite() {
            return Err(invalid("couplings must be finite"));
        }
        Ok(())
    }

    /// `q^N`, failing beyond [`DENSE_DIM_CAP`].
    pub fn dim(&self) -> Result<usize> {
        self.validate()?;
        let dim = self
            .q
            .checked_pow(self.sites as u32)
            .filter(|&d| d <= DENSE_DIM_CAP)
            .ok_or(Error::CapExceeded {
                dim: self.q.saturating_pow(self.sites as u32),
                cap: DENSE_DIM_CAP,
            })?;
        Ok(dim)
    }

    /// Nearest-neighbour bonds `(n, n+1)`, plus `(N-1, 0)` when periodic.
    ///
    /// A periodic two-site chain has a single bond.
    pub fn bonds(&self) -> Vec<(usize, usize)> {
        let mut bonds: Vec<(usize, usize)> = (0..self.sites - 1).map(|n| (n, n + 1)).collect();
        if self.boundary == Boundary::Periodic && self.sites > 2 {
            bonds.push((self.sites - 1, 0));
        }
        bonds
    }
}

/// `H^I_{n,n'} = Σ_{k=1}^{q-1} Ω^k ⊗ Ω^{q-k}` on two qudits.
pub fn interaction_bond_matrix(q: usize) -> Result<DenseOperator> {
    let mut h = DenseOperator::zeros(q * q);
    for k in 1..q {
        let term = crate::linalg::kron(&gates::clock_power(q, k)?, &gates::clock_power(q, q - k)?);
        h = h.try_add(&term)?;
    }
    Ok(clean_real(&h))
}

/// `H^L_n = Σ_{k=1}^{q-1} Γ^k` on one qudit.
pub fn local_site_matrix(q: usize) -> Result<DenseOperator> {
    let mut h = DenseOperator::zeros(q);
    for k in 1..q {
        h = h.try_add(&gates::shift_power(q, k)?)?;
    }
    Ok(h)
}

/// Drops imaginary parts at rounding level so real generators take the
/// real-symmetric eigen path.
fn clean_real(h: &DenseOperator) -> DenseOperator {
    DenseOperator::from_fn(h.dim(), |i, j| {
        let z = h[(i, j)];
        let re = if z.re.abs() < 1e-13 { 0.0 } else { z.re };
        let im = if z.im.abs() < 1e-13 { 0.0 } else { z.im };
        C64::new(re, im)
    })
}

/// Dense chain Hamiltonian, assembled by index arithmetic.
///
/// Bond terms contribute `-J (q δ_{s_n s_{n'}} - 1)` on the diagonal; each
/// site contributes `-g` between every pair of basis states that differ in
/// that site alone.
pub fn build_hamiltonian(p: &PottsParams) -> Result<DenseOperator> {
    let dim = p.dim()?;
    let (q, n) = (p.q, p.sites);
    let bonds = p.bonds();
    let mut m = nalgebra::DMatrix::from_element(dim, dim, ZERO);
    let mut levels = vec![0usize; n];
    for idx in 0..dim {
        for (slot, x) in levels.iter_mut().zip(digits(idx, q, n)) {
            *slot = x;
        }
        let diag: f64 = bonds
            .iter()
            .map(|&(a, b)| {
                let same = if levels[a] == levels[b] {
                    q as f64
                } else {
                    0.0
                };
                -p.coupling_j * (same - 1.0)
            })
            .sum();
        m[(idx, idx)] = C64::new(diag, 0.0);
        for (site, &level) in levels.iter().enumerate() {
            let stride = q.pow((n - 1 - site) as u32);
            let base = idx - level * stride;
            for other in 0..q {
                if other != level {
                    m[(base + other * stride, idx)] += C64::new(-p.field_g, 0.0);
                }
            }
        }
    }
    DenseOperator::from_matrix(m)
}

/// Exact propagator `exp(-itH)` from a cached eigendecomposition of `H`.
#[derive(Clone, Debug)]
pub struct ExactEvolution {
    eig: HermitianEigen,
}

/// Initial state expanded in the eigenbasis; evaluating at a new time costs
/// one matrix-vector pass.
#[derive(Clone, Debug)]
pub struct SpectralState<'a> {
    evolution: &'a ExactEvolution,
    coefficients: Vec<C64>,
    initial: StateVector,
}

impl ExactEvolution {
    pub fn new(h: &DenseOperator) -> Result<Self> {
        Ok(Self {
            eig: HermitianEigen::new(h)?,
        })
    }

    pub fn dim(&self) -> usize {
        self.eig.values.len()
    }

    pub fn energies(&self) -> &[f64] {
        &self.eig.values
    }

    pub fn prepare(&self, psi0: &StateVector) -> Result<SpectralState<'_>> {
        if psi0.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: psi0.dim(),
            });
        }
        // c = V^dag ψ0
        let v = self.eig.vectors.matrix();
        let amps = psi0.amplitudes();
        let coefficients = (0..self.dim())
            .map(|j| {
                v.column(j)
                    .iter()
                    .zip(amps)
                    .map(|(a, b)| a.conj() * b)
                    .sum()
            })
            .collect();
        Ok(SpectralState {
            evolution: self,
            coefficients,
            initial: psi0.clone(),
        })
    }

    /// `exp(-itH) ψ0`.
    pub fn evolve(&self, psi0: &StateVector, t: f64) -> Result<StateVector> {
        self.prepare(psi0)?.at(t)
    }
}

impl SpectralState<'_> {
    /// State at time `t`; `t = 0` returns the initial state untouched.
    pub fn at(&self, t: f64) -> Result<StateVector> {
        if t == 0.0 {
            return Ok(self.initial.clone());
        }
        let dim = self.coefficients.len();
        let phased: Vec<C64> = self
            .coefficients
            .iter()
            .zip(&self.evolution.eig.values)
            .map(|(c, &e)| c * C64::from_polar(1.0, -e * t))
            .collect();
        let v = self.evolution.eig.vectors.matrix();
        let mut out = vec![ZERO; dim];
        for (j, c) in phased.iter().enumerate() {
            for (slot, vij) in out.iter_mut().zip(v.column(j).iter()) {
                *slot += vij * c;
            }
        }
        StateVector::new(self.initial.local_dim(), self.initial.sites(), out)
    }

    /// `<ψ0| exp(-itH) |ψ0>` straight from the spectral weights.
    pub fn return_amplitude(&self, t: f64) -> C64 {
        self.coefficients
            .iter()
            .zip(&self.evolution.eig.values)
            .map(|(c, &e)| c.norm_sqr() * C64::from_polar(1.0, -e * t))
            .sum()
    }
}

/// One-shot `exp(-itH) ψ0`; prefer [`ExactEvolution`] for repeated times.
pub fn exact_evolution(h: &DenseOperator, t: f64, psi0: &StateVector) -> Result<StateVector> {
    ExactEvolution::new(h)?.evolve(psi0, t)
}
