//! Closed-form gate and generator matrices.
//!
//! Conventions:
//!
//! - `shift(q)` is the block matrix `[[0, I_{q-1}], [1, 0]]`, which maps
//!   `|m> -> |m - 1 mod q>` and satisfies `Γ Ω = ω Ω Γ`.
//! - `fourier(q)` has entries `ω^{jk} / sqrt(q)`.
//! - In the ancilla scheme the ancilla is the top level `d - 1`.

use std::f64::consts::{FRAC_PI_4, TAU};
use std::fmt;

use crate::error::{invalid, Error, Result};
use crate::linalg::{kron, DenseOperator, C64, ONE, ZERO};

fn check_dim(q: usize) -> Result<()> {
    if q < 2 {
        return Err(invalid(format!("qudit dimension must be >= 2, got {q}")));
    }
    Ok(())
}

fn check_ancilla_level(d: usize, k: usize) -> Result<()> {
    if d < 3 {
        return Err(invalid(format!(
            "ancilla gates need a local dimension >= 3, got {d}"
        )));
    }
    if k >= d - 1 {
        return Err(invalid(format!(
            "level {k} cannot pair with the ancilla level {}",
            d - 1
        )));
    }
    Ok(())
}

/// Primitive q-th root of unity `e^{2πi/q}`.
pub fn root_of_unity(q: usize) -> C64 {
    C64::from_polar(1.0, TAU / q as f64)
}

/// `ω^m`, reducing the exponent first.
fn omega_pow(q: usize, m: usize) -> C64 {
    let m = m % q;
    // exact values on the axes so q = 2 and q = 4 stay free of rounding noise
    if (4 * m).is_multiple_of(q) {
        return match 4 * m / q {
            0 => C64::new(1.0, 0.0),
            1 => C64::new(0.0, 1.0),
            2 => C64::new(-1.0, 0.0),
            _ => C64::new(0.0, -1.0),
        };
    }
    C64::from_polar(1.0, TAU * m as f64 / q as f64)
}

/// Clock operator `diag(1, ω, ..., ω^{q-1})`.
pub fn clock(q: usize) -> Result<DenseOperator> {
    check_dim(q)?;
    let entries: Vec<C64> = (0..q).map(|m| omega_pow(q, m)).collect();
    Ok(DenseOperator::diagonal(&entries))
}

/// Shift operator: ones on the superdiagonal and in the bottom-left corner.
pub fn shift(q: usize) -> Result<DenseOperator> {
    check_dim(q)?;
    Ok(DenseOperator::from_fn(q, |i, j| {
        if j == (i + 1) % q {
            ONE
        } else {
            ZERO
        }
    }))
}

/// `Ω^k`, with the exponent reduced mod `q` entrywise so `Ω^q = I` exactly.
pub fn clock_power(q: usize, k: usize) -> Result<DenseOperator> {
    check_dim(q)?;
    let entries: Vec<C64> = (0..q).map(|m| omega_pow(q, (m * k) % q)).collect();
    Ok(DenseOperator::diagonal(&entries))
}

/// `Γ^k` as a permutation matrix.
pub fn shift_power(q: usize, k: usize) -> Result<DenseOperator> {
    check_dim(q)?;
    Ok(DenseOperator::from_fn(q, |i, j| {
        if j == (i + k) % q {
            ONE
        } else {
            ZERO
        }
    }))
}

/// Discrete Fourier transform `(F)_{jk} = ω^{jk} / sqrt(q)`.
pub fn fourier(q: usize) -> Result<DenseOperator> {
    check_dim(q)?;
    let norm = 1.0 / (q as f64).sqrt();
    Ok(DenseOperator::from_fn(q, |j, k| omega_pow(q, j * k) * norm))
}

/// Spectrum of the mixer in the Fourier basis: `diag(q - 1, -1, ..., -1)`.
pub fn mixer_spectrum(q: usize) -> Vec<f64> {
    (0..q)
        .map(|m| if m == 0 { (q - 1) as f64 } else { -1.0 })
        .collect()
}

/// `R^{ab}(θ, φ) = exp(-iθ/2 [cos φ σ_x^{ab} + sin φ σ_y^{ab}])`.
pub fn two_level_rotation(
    d: usize,
    a: usize,
    b: usize,
    theta: f64,
    phi: f64,
) -> Result<DenseOperator> {
    if a >= b || b >= d {
        return Err(invalid(format!(
            "two-level rotation needs 0 <= a < b < d, got a={a}, b={b}, d={d}"
        )));
    }
    let (s, c) = (theta / 2.0).sin_cos();
    let mut m = DenseOperator::identity(d).into_matrix();
    m[(a, a)] = C64::new(c, 0.0);
    m[(b, b)] = C64::new(c, 0.0);
    m[(a, b)] = C64::new(0.0, -s) * C64::from_polar(1.0, -phi);
    m[(b, a)] = C64::new(0.0, -s) * C64::from_polar(1.0, phi);
    DenseOperator::from_matrix(m)
}

/// `diag(e^{iφ_0}, ..., e^{iφ_{d-1}})`.
pub fn diag_phase(phases: &[f64]) -> DenseOperator {
    let entries: Vec<C64> = phases.iter().map(|&p| C64::from_polar(1.0, p)).collect();
    DenseOperator::diagonal(&entries)
}

/// Symmetric light-shift gate: `|s,s> -> |s,s>`, `|s,s'> -> e^{iθ}|s,s'>`.
pub fn ls_sym(q: usize, theta: f64) -> Result<DenseOperator> {
    check_dim(q)?;
    let phase = C64::from_polar(1.0, theta);
    let entries: Vec<C64> = (0..q * q)
        .map(|idx| if idx / q == idx % q { ONE } else { phase })
        .collect();
    Ok(DenseOperator::diagonal(&entries))
}

/// Projector onto two-qudit states with equal levels.
pub fn same_level_projector(q: usize) -> Result<DenseOperator> {
    check_dim(q)?;
    let entries: Vec<f64> = (0..q * q)
        .map(|idx| if idx / q == idx % q { 1.0 } else { 0.0 })
        .collect();
    Ok(DenseOperator::real_diagonal(&entries))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
    Z,
}

/// Pauli operator on the `{|k>, |d-1>}` subspace; `|k>` plays the role of
/// the `+1` eigenstate of `σ_z`.
pub fn subspace_pauli(d: usize, k: usize, axis: Axis) -> Result<DenseOperator> {
    check_ancilla_level(d, k)?;
    let anc = d - 1;
    let mut m = DenseOperator::zeros(d).into_matrix();
    match axis {
        Axis::X => {
            m[(k, anc)] = ONE;
            m[(anc, k)] = ONE;
        }
        Axis::Y => {
            m[(k, anc)] = C64::new(0.0, -1.0);
            m[(anc, k)] = C64::new(0.0, 1.0);
        }
        Axis::Z => {
            m[(k, k)] = ONE;
            m[(anc, anc)] = -ONE;
        }
    }
    DenseOperator::from_matrix(m)
}

/// Projector onto `{|k>, |d-1>}`.
fn subspace_projector(d: usize, k: usize) -> DenseOperator {
    let mut diag = vec![0.0; d];
    diag[k] = 1.0;
    diag[d - 1] = 1.0;
    DenseOperator::real_diagonal(&diag)
}

/// `MS^k(θ) = exp(iθ σ_x^k ⊗ σ_x^k)` on two qudits of dimension `d`.
pub fn ms_subspace(d: usize, k: usize, theta: f64) -> Result<DenseOperator> {
    check_ancilla_level(d, k)?;
    // G = σx⊗σx squares to P⊗P, so exp(iθG) = I - P⊗P + cos θ P⊗P + i sin θ G.
    let sx = subspace_pauli(d, k, Axis::X)?;
    let generator = kron(&sx, &sx);
    let p = subspace_projector(d, k);
    let pp = kron(&p, &p);
    let (s, c) = theta.sin_cos();
    DenseOperator::identity(d * d)
        .try_sub(&pp.scale(C64::new(1.0 - c, 0.0)))?
        .try_add(&generator.scale(C64::new(0.0, s)))
}

/// `V^k = exp(-iπ/4 σ_y^k)`, mapping `σ_z^k` to `σ_x^k` under conjugation.
pub fn v_basis_change(d: usize, k: usize) -> Result<DenseOperator> {
    check_ancilla_level(d, k)?;
    let sy = subspace_pauli(d, k, Axis::Y)?;
    let p = subspace_projector(d, k);
    let (s, c) = FRAC_PI_4.sin_cos();
    DenseOperator::identity(d)
        .try_sub(&p.scale(C64::new(1.0 - c, 0.0)))?
        .try_sub(&sy.scale(C64::new(0.0, s)))
}

/// Named gate with its parameters; every label renders to a unitary of
/// dimension `local_dim^arity`.
#[derive(Clone, Debug, PartialEq)]
pub enum GateLabel {
    Clock {
        d: usize,
    },
    Shift {
        d: usize,
    },
    Fourier {
        d: usize,
    },
    FourierInv {
        d: usize,
    },
    TwoLevelRotation {
        d: usize,
        a: usize,
        b: usize,
        theta: f64,
        phi: f64,
    },
    DiagPhase {
        phases: Vec<f64>,
    },
    LsSym {
        q: usize,
        theta: f64,
    },
    Ms {
        d: usize,
        k: usize,
        theta: f64,
    },
    VBasis {
        d: usize,
        k: usize,
    },
    VBasisInv {
        d: usize,
        k: usize,
    },
    RawUnitary {
        arity: usize,
        op: DenseOperator,
    },
}

impl GateLabel {
    pub fn arity(&self) -> usize {
        match self {
            GateLabel::LsSym { .. } | GateLabel::Ms { .. } => 2,
            GateLabel::RawUnitary { arity, .. } => *arity,
            _ => 1,
        }
    }

    /// Local dimension of each site the gate acts on.
    pub fn local_dim(&self) -> usize {
        match self {
            GateLabel::Clock { d }
            | GateLabel::Shift { d }
            | GateLabel::Fourier { d }
            | GateLabel::FourierInv { d }
            | GateLabel::TwoLevelRotation { d, .. }
            | GateLabel::Ms { d, .. }
            | GateLabel::VBasis { d, .. }
            | GateLabel::VBasisInv { d, .. } => *d,
            GateLabel::LsSym { q, .. } => *q,
            GateLabel::DiagPhase { phases } => phases.len(),
            GateLabel::RawUnitary { arity, op } => integer_root(op.dim(), *arity),
        }
    }

    /// Short lowercase name, also used as the keyword in circuit files.
    pub fn kind(&self) -> &'static str {
        match self {
            GateLabel::Clock { .. } => "clock",
            GateLabel::Shift { .. } => "shift",
            GateLabel::Fourier { .. } => "fourier",
            GateLabel::FourierInv { .. } => "fourier_inv",
            GateLabel::TwoLevelRotation { .. } => "rot",
            GateLabel::DiagPhase { .. } => "phase",
            GateLabel::LsSym { .. } => "ls_sym",
            GateLabel::Ms { .. } => "ms",
            GateLabel::VBasis { .. } => "v",
            GateLabel::VBasisInv { .. } => "v_inv",
            GateLabel::RawUnitary { .. } => "raw",
        }
    }

    pub fn render(&self) -> Result<DenseOperator> {
        match self {
            GateLabel::Clock { d } => clock(*d),
            GateLabel::Shift { d } => shift(*d),
            GateLabel::Fourier { d } => fourier(*d),
            GateLabel::FourierInv { d } => Ok(fourier(*d)?.adjoint()),
            GateLabel::TwoLevelRotation {
                d,
                a,
                b,
                theta,
                phi,
            } => two_level_rotation(*d, *a, *b, *theta, *phi),
            GateLabel::DiagPhase { phases } => {
                check_dim(phases.len())?;
                Ok(diag_phase(phases))
            }
            GateLabel::LsSym { q, theta } => ls_sym(*q, *theta),
            GateLabel::Ms { d, k, theta } => ms_subspace(*d, *k, *theta),
            GateLabel::VBasis { d, k } => v_basis_change(*d, *k),
            GateLabel::VBasisInv { d, k } => Ok(v_basis_change(*d, *k)?.adjoint()),
            GateLabel::RawUnitary { arity, op } => {
                let d = integer_root(op.dim(), *arity);
                if *arity == 0 || d.pow(*arity as u32) != op.dim() {
                    return Err(Error::DimensionMismatch {
                        expected: d.pow(*arity as u32),
                        found: op.dim(),
                    });
                }
                op.ensure_unitary()?;
                Ok(op.clone())
            }
        }
    }
}

impl fmt::Display for GateLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GateLabel::TwoLevelRotation {
                a, b, theta, phi, ..
            } => {
                write!(f, "R^{a}{b}({theta}, {phi})")
            }
            GateLabel::LsSym { theta, .. } => write!(f, "LS_sym({theta})"),
            GateLabel::Ms { k, theta, .. } => write!(f, "MS^{k}({theta})"),
            GateLabel::VBasis { k, .. } => write!(f, "V^{k}"),
            GateLabel::VBasisInv { k, .. } => write!(f, "V^{k}†"),
            other => f.write_str(other.kind()),
        }
    }
}

fn integer_root(n: usize, k: usize) -> usize {
    if k <= 1 {
        return n;
    }
    let guess = (n as f64).powf(1.0 / k as f64).round() as usize;
    (guess.saturating_sub(1)..=guess + 1)
        .find(|r| r.checked_pow(k as u32) == Some(n))
        .unwrap_or(guess)
}
