//! Circuits and synthesis of the Potts evolution gates from native qudit operations.
//!
//! Three constructions are provided:
//!
//! - the mixer `exp(iτg Σ_k Γ^k)`, built as a Givens-decomposed Fourier
//!   transform, a virtual diagonal phase and the inverse transform;
//! - the bond interaction via one symmetric light-shift gate;
//! - the bond interaction via one Mølmer-Sørensen gate per logical level,
//!   using an extra ancilla level on each qudit.
//!
//! Circuit files are line oriented. The first non-comment line is
//! `circuit <sites> <local_dim>`; each further line is one gate,
//! `<kind> <site[,site]> <params...>`. Lines starting with `#` are notes.

use std::f64::consts::FRAC_PI_2;
use std::fmt::Write as _;

use crate::error::{invalid, Error, Result};
use crate::gates::{self, GateLabel};
use crate::linalg::{register_dim, DenseOperator, LocalLayout, StateVector, C64, ONE, ZERO};

/// Largest register dimension [`circuit_unitary`] will build.
pub const UNITARY_DIM_CAP: usize = 4096;

/// Entries below this magnitude are treated as already eliminated.
pub const GIVENS_SKIP_TOL: f64 = 1e-14;

/// Sign relating the light-shift angle to `τqJ`.
///
/// `ls_sym(θ) = e^{iθ} exp(-iθ Π_same)`, while the bond evolution is
/// `exp(iτJ H^I) ∝ exp(iτqJ Π_same)`, so the gate is driven at `θ = -τqJ`.
pub const LS_THETA_SIGN: f64 = -1.0;

/// Sign relating the MS angle to `τqJ`: `exp(iθ Π)` with `θ = +τqJ`.
pub const MS_THETA_SIGN: f64 = 1.0;

#[derive(Clone, Debug, PartialEq)]
pub struct Instruction {
    pub gate: GateLabel,
    pub targets: Vec<usize>,
}

/// Ordered gate list over `sites` qudits of dimension `local_dim`.
#[derive(Clone, Debug, PartialEq)]
pub struct Circuit {
    local_dim: usize,
    sites: usize,
    ops: Vec<Instruction>,
    metadata: Vec<String>,
}

impl Circuit {
    pub fn new(local_dim: usize, sites: usize) -> Result<Self> {
        register_dim(local_dim, sites)?;
        Ok(Self {
            local_dim,
            sites,
            ops: Vec::new(),
            metadata: Vec::new(),
        })
    }

    pub fn local_dim(&self) -> usize {
        self.local_dim
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn ops(&self) -> &[Instruction] {
        &self.ops
    }

    pub fn metadata(&self) -> &[String] {
        &self.metadata
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn note(&mut self, text: impl Into<String>) {
        self.metadata.push(text.into());
    }

    pub fn push(&mut self, gate: GateLabel, targets: &[usize]) -> Result<()> {
        if gate.arity() != targets.len() {
            return Err(invalid(format!(
                "gate {} has arity {} but {} targets were given",
                gate.kind(),
                gate.arity(),
                targets.len()
            )));
        }
        if gate.local_dim() != self.local_dim {
            return Err(Error::DimensionMismatch {
                expected: self.local_dim,
                found: gate.local_dim(),
            });
        }
        for (i, &s) in targets.iter().enumerate() {
            if s >= self.sites {
                return Err(Error::SiteOutOfRange {
                    site: s,
                    sites: self.sites,
                });
            }
            if targets[..i].contains(&s) {
                return Err(Error::RepeatedSite(s));
            }
        }
        self.ops.push(Instruction {
            gate,
            targets: targets.to_vec(),
        });
        Ok(())
    }

    /// Appends `other`, mapping its site `i` to `placement[i]`.
    pub fn append_mapped(&mut self, other: &Circuit, placement: &[usize]) -> Result<()> {
        if placement.len() != other.sites {
            return Err(Error::DimensionMismatch {
                expected: other.sites,
                found: placement.len(),
            });
        }
        for ins in &other.ops {
            let targets: Vec<usize> = ins.targets.iter().map(|&t| placement[t]).collect();
            self.push(ins.gate.clone(), &targets)?;
        }
        Ok(())
    }

    /// Applies every gate in order to `state`.
    pub fn apply(&self, state: &mut StateVector) -> Result<()> {
        self.compile()?.apply(state)
    }

    /// Renders all gates once so the circuit can be applied repeatedly.
    pub fn compile(&self) -> Result<CompiledCircuit> {
        let steps = self
            .ops
            .iter()
            .map(|ins| {
                let rows = ins.gate.render()?.to_rows();
                let layout = LocalLayout::new(self.local_dim, self.sites, &ins.targets)?;
                Ok((rows, layout))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(CompiledCircuit {
            local_dim: self.local_dim,
            sites: self.sites,
            steps,
        })
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for note in &self.metadata {
            for line in note.lines() {
                let _ = writeln!(out, "# {line}");
            }
        }
        let _ = writeln!(out, "circuit {} {}", self.sites, self.local_dim);
        for ins in &self.ops {
            let sites: Vec<String> = ins.targets.iter().map(|t| t.to_string()).collect();
            let _ = write!(out, "{} {}", ins.gate.kind(), sites.join(","));
            for p in gate_params(&ins.gate) {
                let _ = write!(out, " {p}");
            }
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut circuit: Option<Circuit> = None;
        let mut notes = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = lineno + 1;
            let err = |message: String| Error::Parse { line, message };
            let trimmed = raw.trim();
            if trimmed.is_empty() {
                continue;
            }
            if let Some(note) = trimmed.strip_prefix('#') {
                notes.push(note.strip_prefix(' ').unwrap_or(note).to_string());
                continue;
            }
            let mut fields = trimmed.split_whitespace();
            let kind = fields.next().unwrap_or_default();
            let Some(c) = circuit.as_mut() else {
                if kind != "circuit" {
                    return Err(err("expected `circuit <sites> <local_dim>` header".into()));
                }
                let nums: Vec<usize> = fields
                    .map(|f| {
                        f.parse()
                            .map_err(|e| err(format!("bad header field {f:?}: {e}")))
                    })
                    .collect::<Result<_>>()?;
                let [sites, d] = nums[..] else {
                    return Err(err("header needs exactly two integers".into()));
                };
                circuit = Some(Circuit::new(d, sites).map_err(|e| err(e.to_string()))?);
                continue;
            };
            let sites_field = fields
                .next()
                .ok_or_else(|| err(format!("missing target sites for `{kind}`")))?;
            let targets: Vec<usize> = sites_field
                .split(',')
                .map(|s| s.parse().map_err(|e| err(format!("bad site {s:?}: {e}"))))
                .collect::<Result<_>>()?;
            let params: Vec<f64> = fields
                .map(|f| {
                    f.parse()
                        .map_err(|e| err(format!("bad parameter {f:?}: {e}")))
                })
                .collect::<Result<_>>()?;
            let gate = parse_gate(kind, c.local_dim, targets.len(), &params).map_err(&err)?;
            c.push(gate, &targets).map_err(|e| err(e.to_string()))?;
        }
        let mut c = circuit.ok_or(Error::Parse {
            line: 0,
            message: "empty circuit file".into(),
        })?;
        c.metadata = notes;
        Ok(c)
    }
}

fn gate_params(gate: &GateLabel) -> Vec<String> {
    let f = |x: &f64| format!("{x:?}");
    match gate {
        GateLabel::TwoLevelRotation {
            a, b, theta, phi, ..
        } => {
            vec![a.to_string(), b.to_string(), f(theta), f(phi)]
        }
        GateLabel::DiagPhase { phases } => phases.iter().map(f).collect(),
        GateLabel::LsSym { theta, .. } => vec![f(theta)],
        GateLabel::Ms { k, theta, .. } => vec![k.to_string(), f(theta)],
        GateLabel::VBasis { k, .. } | GateLabel::VBasisInv { k, .. } => vec![k.to_string()],
        GateLabel::RawUnitary { op, .. } => op
            .to_rows()
            .iter()
            .flat_map(|z| [f(&z.re), f(&z.im)])
            .collect(),
        GateLabel::Clock { .. }
        | GateLabel::Shift { .. }
        | GateLabel::Fourier { .. }
        | GateLabel::FourierInv { .. } => Vec::new(),
    }
}

fn parse_gate(
    kind: &str,
    d: usize,
    arity: usize,
    p: &[f64],
) -> std::result::Result<GateLabel, String> {
    let want = |n: usize| {
        if p.len() == n {
            Ok(())
        } else {
            Err(format!("`{kind}` takes {n} parameters, got {}", p.len()))
        }
    };
    let level = |x: f64| {
        if x >= 0.0 && x.fract() == 0.0 {
            Ok(x as usize)
        } else {
            Err(format!(
                "level index must be a non-negative integer, got {x}"
            ))
        }
    };
    Ok(match kind {
        "clock" => want(0).map(|_| GateLabel::Clock { d })?,
        "shift" => want(0).map(|_| GateLabel::Shift { d })?,
        "fourier" => want(0).map(|_| GateLabel::Fourier { d })?,
        "fourier_inv" => want(0).map(|_| GateLabel::FourierInv { d })?,
        "rot" => {
            want(4)?;
            GateLabel::TwoLevelRotation {
                d,
                a: level(p[0])?,
                b: level(p[1])?,
                theta: p[2],
                phi: p[3],
            }
        }
        "phase" => {
            want(d)?;
            GateLabel::DiagPhase { phases: p.to_vec() }
        }
        "ls_sym" => {
            want(1)?;
            GateLabel::LsSym { q: d, theta: p[0] }
        }
        "ms" => {
            want(2)?;
            GateLabel::Ms {
                d,
                k: level(p[0])?,
                theta: p[1],
            }
        }
        "v" => {
            want(1)?;
            GateLabel::VBasis { d, k: level(p[0])? }
        }
        "v_inv" => {
            want(1)?;
            GateLabel::VBasisInv { d, k: level(p[0])? }
        }
        "raw" => {
            let dim = d.pow(arity as u32);
            want(2 * dim * dim)?;
            let entries: Vec<C64> = p.chunks_exact(2).map(|c| C64::new(c[0], c[1])).collect();
            let op = DenseOperator::from_rows(dim, &entries).map_err(|e| e.to_string())?;
            GateLabel::RawUnitary { arity, op }
        }
        other => return Err(format!("unknown gate kind `{other}`")),
    })
}

/// A circuit with every gate pre-rendered.
pub struct CompiledCircuit {
    local_dim: usize,
    sites: usize,
    steps: Vec<(Vec<C64>, LocalLayout)>,
}

impl CompiledCircuit {
    pub fn apply(&self, state: &mut StateVector) -> Result<()> {
        if state.local_dim() != self.local_dim || state.sites() != self.sites {
            return Err(Error::DimensionMismatch {
                expected: self.local_dim.pow(self.sites as u32),
                found: state.dim(),
            });
        }
        let amps = state.amplitudes_mut();
        for (rows, layout) in &self.steps {
            layout.apply(rows, amps);
        }
        Ok(())
    }
}

/// Full unitary of a circuit, gates multiplied in application order.
pub fn circuit_unitary(c: &Circuit) -> Result<DenseOperator> {
    let dim = register_dim(c.local_dim, c.sites)?;
    if dim > UNITARY_DIM_CAP {
        return Err(Error::CapExceeded {
            dim,
            cap: UNITARY_DIM_CAP,
        });
    }
    let compiled = c.compile()?;
    let mut columns = vec![ZERO; dim * dim];
    for (j, column) in columns.chunks_exact_mut(dim).enumerate() {
        column[j] = ONE;
        for (rows, layout) in &compiled.steps {
            layout.apply(rows, column);
        }
    }
    // `columns` holds column j contiguously, i.e. column-major storage
    DenseOperator::from_matrix(nalgebra::DMatrix::from_vec(dim, dim, columns))
}

/// Gate tally by kind.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct GateCounts {
    /// Two-level rotations, including the `V^k` basis changes.
    pub single_qudit_rotations: usize,
    /// Light-shift, MS and raw two-qudit gates.
    pub two_qudit_entangling: usize,
    /// Diagonal phases; implemented in software at no hardware cost.
    pub virtual_phases: usize,
    /// Clock, shift, Fourier and raw single-qudit gates that were not
    /// reduced to native rotations.
    pub unsynthesized: usize,
}

pub fn gate_counts(c: &Circuit) -> GateCounts {
    let mut counts = GateCounts::default();
    for ins in &c.ops {
        match &ins.gate {
            GateLabel::TwoLevelRotation { .. }
            | GateLabel::VBasis { .. }
            | GateLabel::VBasisInv { .. } => counts.single_qudit_rotations += 1,
            GateLabel::LsSym { .. } | GateLabel::Ms { .. } => counts.two_qudit_entangling += 1,
            GateLabel::RawUnitary { arity, .. } if *arity >= 2 => counts.two_qudit_entangling += 1,
            GateLabel::DiagPhase { .. } => counts.virtual_phases += 1,
            GateLabel::RawUnitary { .. }
            | GateLabel::Clock { .. }
            | GateLabel::Shift { .. }
            | GateLabel::Fourier { .. }
            | GateLabel::FourierInv { .. } => counts.unsynthesized += 1,
        }
    }
    counts
}

/// `u = diag(final_phase) · R_L ··· R_1`: applying the rotations in order and
/// then the phase reproduces `u`.
#[derive(Clone, Debug, PartialEq)]
pub struct GivensDecomposition {
    pub rotations: Vec<GateLabel>,
    pub final_phase: GateLabel,
}

impl GivensDecomposition {
    /// One-site circuit: rotations, then the phase.
    pub fn to_circuit(&self) -> Result<Circuit> {
        let d = self.final_phase.local_dim();
        let mut c = Circuit::new(d, 1)?;
        for r in &self.rotations {
            c.push(r.clone(), &[0])?;
        }
        c.push(self.final_phase.clone(), &[0])?;
        Ok(c)
    }
}

/// Triangularises `u^dag` with two-level rotations on adjacent levels.
///
/// Columns are processed left to right; within a column the entries below
/// the diagonal are eliminated from the bottom row upward.
pub fn givens_decompose(u: &DenseOperator) -> Result<GivensDecomposition> {
    u.ensure_unitary()?;
    let q = u.dim();
    if q < 2 {
        return Err(invalid("Givens decomposition needs dimension >= 2"));
    }
    let mut w = u.adjoint().into_matrix();
    let mut rotations = Vec::new();
    for col in 0..q - 1 {
        for b in (col + 1..q).rev() {
            let a = b - 1;
            let (x, y) = (w[(a, col)], w[(b, col)]);
            if y.norm() < GIVENS_SKIP_TOL {
                continue;
            }
            let theta = 2.0 * y.norm().atan2(x.norm());
            let phi = y.arg() - x.arg() - FRAC_PI_2;
            let (s, c) = (theta / 2.0).sin_cos();
            let off_ab = C64::new(0.0, -s) * C64::from_polar(1.0, -phi);
            let off_ba = C64::new(0.0, -s) * C64::from_polar(1.0, phi);
            for j in 0..q {
                let (ra, rb) = (w[(a, j)], w[(b, j)]);
                w[(a, j)] = ra * c + off_ab * rb;
                w[(b, j)] = off_ba * ra + rb * c;
            }
            w[(b, col)] = ZERO;
            rotations.push(GateLabel::TwoLevelRotation {
                d: q,
                a,
                b,
                theta,
                phi,
            });
        }
    }
    // w is now diagonal Δ with R_L···R_1 u^dag = Δ, so u = Δ^dag R_L···R_1.
    let phases = (0..q).map(|i| -w[(i, i)].arg()).collect();
    Ok(GivensDecomposition {
        rotations,
        final_phase: GateLabel::DiagPhase { phases },
    })
}

/// Inverse of a two-level rotation, `R(θ, φ)^dag = R(-θ, φ)`.
fn inverse_rotation(label: &GateLabel) -> GateLabel {
    match label {
        GateLabel::TwoLevelRotation {
            d,
            a,
            b,
            theta,
            phi,
        } => GateLabel::TwoLevelRotation {
            d: *d,
            a: *a,
            b: *b,
            theta: -theta,
            phi: *phi,
        },
        other => unreachable!("not a rotation: {other:?}"),
    }
}

fn with_local_dim(label: &GateLabel, local_dim: usize) -> GateLabel {
    match label {
        GateLabel::TwoLevelRotation {
            a, b, theta, phi, ..
        } => GateLabel::TwoLevelRotation {
            d: local_dim,
            a: *a,
            b: *b,
            theta: *theta,
            phi: *phi,
        },
        other => other.clone(),
    }
}

/// Single-site mixer `exp(iτg Σ_{k=1}^{q-1} Γ^k)`.
pub fn mixer_circuit(q: usize, g: f64, tau: f64) -> Result<Circuit> {
    mixer_circuit_in(q, q, g, tau)
}

/// Mixer acting on levels `0..q` of a qudit with `local_dim >= q` levels;
/// any extra levels are left untouched.
///
/// With `F = Δ^dag R_L···R_1`, the mixer `F^dag e^{igτD} F` becomes
/// `R_1^dag···R_L^dag e^{igτD} R_L···R_1`, because the residual diagonal `Δ`
/// commutes with `e^{igτD}`. The only phase gate is the virtual `e^{igτD}`.
pub fn mixer_circuit_in(q: usize, local_dim: usize, g: f64, tau: f64) -> Result<Circuit> {
    if local_dim < q {
        return Err(invalid(format!(
            "local dimension {local_dim} is smaller than q = {q}"
        )));
    }
    let fourier = givens_decompose(&gates::fourier(q)?)?;
    let mut c = Circuit::new(local_dim, 1)?;
    c.note(format!("mixer q={q} g={g} tau={tau}"));
    for r in &fourier.rotations {
        c.push(with_local_dim(r, local_dim), &[0])?;
    }
    let mut phases: Vec<f64> = gates::mixer_spectrum(q)
        .iter()
        .map(|x| g * tau * x)
        .collect();
    phases.resize(local_dim, 0.0);
    c.push(GateLabel::DiagPhase { phases }, &[0])?;
    for r in fourier.rotations.iter().rev() {
        c.push(with_local_dim(&inverse_rotation(r), local_dim), &[0])?;
    }
    Ok(c)
}

/// `τqJ`, the conditional phase accumulated by equal-level pairs.
pub fn interaction_angle(q: usize, coupling: f64, tau: f64) -> f64 {
    tau * q as f64 * coupling
}

/// Bond evolution `exp(iτJ H^I)` as a single symmetric light-shift gate
/// (up to a global phase).
pub fn interaction_circuit_ls(q: usize, coupling: f64, tau: f64) -> Result<Circuit> {
    let mut c = Circuit::new(q, 2)?;
    c.note(format!("ls interaction q={q} J={coupling} tau={tau}"));
    let theta = LS_THETA_SIGN * interaction_angle(q, coupling, tau);
    c.push(GateLabel::LsSym { q, theta }, &[0, 1])?;
    Ok(c)
}

/// Bond evolution `exp(iθ Σ_k σ_z^k ⊗ σ_z^k)`, `θ = τqJ`, over qudits with
/// one ancilla level (`local_dim = q + 1`). Each term is an MS gate in the
/// `{|k>, |q>}` subspace conjugated by `V^k` on both qudits.
pub fn interaction_circuit_ms(q: usize, coupling: f64, tau: f64) -> Result<Circuit> {
    if q < 2 {
        return Err(invalid(format!("qudit dimension must be >= 2, got {q}")));
    }
    let d = q + 1;
    let theta = MS_THETA_SIGN * interaction_angle(q, coupling, tau);
    let mut c = Circuit::new(d, 2)?;
    c.note(format!(
        "ms-ancilla interaction q={q} J={coupling} tau={tau}"
    ));
    for k in 0..q {
        c.push(GateLabel::VBasisInv { d, k }, &[0])?;
        c.push(GateLabel::VBasisInv { d, k }, &[1])?;
        c.push(GateLabel::Ms { d, k, theta }, &[0, 1])?;
        c.push(GateLabel::VBasis { d, k }, &[0])?;
        c.push(GateLabel::VBasis { d, k }, &[1])?;
    }
    Ok(c)
}

/// Model of the primitive asymmetric light-shift gate: phase `e^{-iθ}` on
/// `|0,0>` only. Used to check the symmetrisation construction; not a
/// calibrated hardware model.
pub fn ls_primitive(q: usize, theta: f64) -> Result<DenseOperator> {
    if q < 2 {
        return Err(invalid(format!("qudit dimension must be >= 2, got {q}")));
    }
    let mut phases = vec![0.0; q * q];
    phases[0] = -theta;
    Ok(gates::diag_phase(&phases))
}

/// `LS_sym(θ)` (up to a global phase) from `q` rounds of the primitive gate
/// followed by a shift on both qudits.
pub fn ls_sym_from_primitive(q: usize, theta: f64) -> Result<Circuit> {
    let mut c = Circuit::new(q, 2)?;
    c.note("symmetrised light shift from the |0,0> primitive model");
    let prim = ls_primitive(q, theta)?;
    for _ in 0..q {
        c.push(
            GateLabel::RawUnitary {
                arity: 2,
                op: prim.clone(),
            },
            &[0, 1],
        )?;
        c.push(GateLabel::Shift { d: q }, &[0])?;
        c.push(GateLabel::Shift { d: q }, &[1])?;
    }
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{hermitian_expm, kron, phase_aligned_distance};
    use crate::model::{interaction_bond_matrix, local_site_matrix};

    #[test]
    fn push_validates_targets() {
        let mut c = Circuit::new(3, 2).unwrap();
        assert!(c.push(GateLabel::Shift { d: 3 }, &[2]).is_err());
        assert!(c.push(GateLabel::Shift { d: 4 }, &[0]).is_err());
        assert!(c.push(GateLabel::LsSym { q: 3, theta: 0.1 }, &[0]).is_err());
        assert!(c
            .push(GateLabel::LsSym { q: 3, theta: 0.1 }, &[1, 1])
            .is_err());
        assert!(c
            .push(GateLabel::LsSym { q: 3, theta: 0.1 }, &[1, 0])
            .is_ok());
    }

    #[test]
    fn circuit_unitary_basics() {
        let c = Circuit::new(3, 2).unwrap();
        assert_eq!(circuit_unitary(&c).unwrap(), DenseOperator::identity(9));
        let mut single = Circuit::new(3, 2).unwrap();
        single
            .push(
                GateLabel::Ms {
                    d: 3,
                    k: 1,
                    theta: 0.4,
                },
                &[0, 1],
            )
            .unwrap();
        let u = circuit_unitary(&single).unwrap();
        assert!(
            u.max_abs_diff(&gates::ms_subspace(3, 1, 0.4).unwrap())
                .unwrap()
                < 1e-15
        );

        let big = Circuit::new(3, 8).unwrap();
        assert!(matches!(
            circuit_unitary(&big),
            Err(Error::CapExceeded { .. })
        ));
    }

    #[test]
    fn circuit_unitary_respects_order() {
        let mut c = Circuit::new(3, 1).unwrap();
        c.push(GateLabel::Fourier { d: 3 }, &[0]).unwrap();
        c.push(GateLabel::Clock { d: 3 }, &[0]).unwrap();
        let expected = &gates::clock(3).unwrap() * &gates::fourier(3).unwrap();
        assert!(
            circuit_unitary(&c)
                .unwrap()
                .max_abs_diff(&expected)
                .unwrap()
                < 1e-15
        );
    }

    #[test]
    fn givens_identity_needs_no_rotations() {
        let dec = givens_decompose(&DenseOperator::identity(4)).unwrap();
        assert!(dec.rotations.is_empty());
        assert_eq!(
            dec.final_phase,
            GateLabel::DiagPhase {
                phases: vec![0.0; 4]
            }
        );
    }

    #[test]
    fn givens_fourier3_uses_three_rotations() {
        let f3 = gates::fourier(3).unwrap();
        let dec = givens_decompose(&f3).unwrap();
        assert_eq!(dec.rotations.len(), 3);
        let u = circuit_unitary(&dec.to_circuit().unwrap()).unwrap();
        assert!(u.max_abs_diff(&f3).unwrap() < 1e-10);
    }

    #[test]
    fn givens_rejects_non_unitary() {
        let a = DenseOperator::real_diagonal(&[1.0, 2.0]);
        assert!(matches!(
            givens_decompose(&a),
            Err(Error::NotUnitary { .. })
        ));
    }

    #[test]
    fn mixer_q2_is_x_rotation() {
        let tau = 0.37;
        let c = mixer_circuit(2, 1.0, tau).unwrap();
        let x = DenseOperator::from_rows(2, &[ZERO, ONE, ONE, ZERO]).unwrap();
        let target = hermitian_expm(&x, tau).unwrap();
        assert!(phase_aligned_distance(&circuit_unitary(&c).unwrap(), &target).unwrap() < 1e-12);
    }

    #[test]
    fn mixer_q3_matches_spectral_exponential() {
        for tau in [0.1, 0.2] {
            let c = mixer_circuit(3, 1.0, tau).unwrap();
            let target = hermitian_expm(&local_site_matrix(3).unwrap(), tau).unwrap();
            let d = phase_aligned_distance(&circuit_unitary(&c).unwrap(), &target).unwrap();
            assert!(d < 1e-10, "tau={tau} distance={d}");
        }
    }

    #[test]
    fn mixer_counts() {
        assert_eq!(
            gate_counts(&mixer_circuit(5, 0.3, 0.7).unwrap()).single_qudit_rotations,
            20
        );
        let c4 = gate_counts(&mixer_circuit(4, 1.0, 0.1).unwrap());
        assert_eq!(
            c4,
            GateCounts {
                single_qudit_rotations: 12,
                two_qudit_entangling: 0,
                virtual_phases: 1,
                unsynthesized: 0,
            }
        );
    }

    #[test]
    fn mixer_with_ancilla_leaves_top_level_alone() {
        let c = mixer_circuit_in(3, 4, 1.0, 0.3).unwrap();
        let u = circuit_unitary(&c).unwrap();
        assert_eq!(u[(3, 3)], ONE);
        let target = hermitian_expm(&local_site_matrix(3).unwrap(), 0.3).unwrap();
        assert!(u.submatrix(&[0, 1, 2]).max_abs_diff(&target).unwrap() < 1e-12);
    }

    #[test]
    fn ls_interaction_examples() {
        let zero = circuit_unitary(&interaction_circuit_ls(3, 0.25, 0.0).unwrap()).unwrap();
        assert!(phase_aligned_distance(&zero, &DenseOperator::identity(9)).unwrap() < 1e-15);

        let (q, j, tau) = (3, 0.25, 0.1);
        let u = circuit_unitary(&interaction_circuit_ls(q, j, tau).unwrap()).unwrap();
        let target = hermitian_expm(&interaction_bond_matrix(q).unwrap(), tau * j).unwrap();
        assert!(phase_aligned_distance(&u, &target).unwrap() < 1e-12);

        // q = 2: exp(iτJ σz⊗σz)
        let z = DenseOperator::real_diagonal(&[1.0, -1.0]);
        let u2 = circuit_unitary(&interaction_circuit_ls(2, j, tau).unwrap()).unwrap();
        let ising = hermitian_expm(&kron(&z, &z), tau * j).unwrap();
        assert!(phase_aligned_distance(&u2, &ising).unwrap() < 1e-12);
        assert_eq!(
            gate_counts(&interaction_circuit_ls(q, j, tau).unwrap()).two_qudit_entangling,
            1
        );
    }

    #[test]
    fn ls_sign_is_pinned_by_spectral_oracle() {
        // ls_sym(-τqJ) matches exp(iτJ (qΠ - I)) up to phase; the opposite sign does not.
        let (q, j, tau) = (4, 0.25, 0.3);
        let target = hermitian_expm(&interaction_bond_matrix(q).unwrap(), tau * j).unwrap();
        let theta = interaction_angle(q, j, tau);
        let good = gates::ls_sym(q, LS_THETA_SIGN * theta).unwrap();
        let bad = gates::ls_sym(q, -LS_THETA_SIGN * theta).unwrap();
        assert!(phase_aligned_distance(&good, &target).unwrap() < 1e-12);
        assert!(phase_aligned_distance(&bad, &target).unwrap() > 1e-2);
    }

    #[test]
    fn ms_interaction_q2_logical_block() {
        let (j, tau) = (0.25, 0.4);
        let c = interaction_circuit_ms(2, j, tau).unwrap();
        let u = circuit_unitary(&c).unwrap();
        let logical = [0, 1, 3, 4];
        let theta = 2.0 * tau * j;
        let target = hermitian_expm(&gates::same_level_projector(2).unwrap(), theta).unwrap();
        assert!(phase_aligned_distance(&u.submatrix(&logical), &target).unwrap() < 1e-12);
        let counts = gate_counts(&c);
        assert_eq!(counts.two_qudit_entangling, 2);
        assert_eq!(counts.single_qudit_rotations, 8);
    }

    #[test]
    fn ms_interaction_tau_zero_is_identity() {
        let u = circuit_unitary(&interaction_circuit_ms(3, 0.25, 0.0).unwrap()).unwrap();
        assert!(phase_aligned_distance(&u, &DenseOperator::identity(16)).unwrap() < 1e-14);
    }

    #[test]
    fn ms_counts_q3_and_q4() {
        let c3 = gate_counts(&interaction_circuit_ms(3, 1.0, 0.2).unwrap());
        assert_eq!(c3.two_qudit_entangling, 3);
        assert_eq!(c3.single_qudit_rotations, 12);
        assert_eq!(c3.virtual_phases, 0);
        assert_eq!(
            gate_counts(&interaction_circuit_ms(4, 1.0, 0.2).unwrap()).two_qudit_entangling,
            4
        );
    }

    #[test]
    fn gate_counts_empty() {
        assert_eq!(
            gate_counts(&Circuit::new(3, 2).unwrap()),
            GateCounts::default()
        );
    }

    #[test]
    fn symmetrised_primitive_reproduces_ls_sym() {
        for q in 2..6 {
            let theta = 0.73;
            let u = circuit_unitary(&ls_sym_from_primitive(q, theta).unwrap()).unwrap();
            let target = gates::ls_sym(q, theta).unwrap();
            assert!(
                phase_aligned_distance(&u, &target).unwrap() < 1e-12,
                "q={q}"
            );
        }
    }

    #[test]
    fn text_roundtrip_is_exact() {
        let mut c = Circuit::new(4, 3).unwrap();
        c.append_mapped(&mixer_circuit_in(3, 4, 1.0, 0.1).unwrap(), &[2])
            .unwrap();
        c.append_mapped(&interaction_circuit_ms(3, 0.25, 0.1).unwrap(), &[2, 0])
            .unwrap();
        c.push(
            GateLabel::RawUnitary {
                arity: 1,
                op: gates::fourier(4).unwrap(),
            },
            &[1],
        )
        .unwrap();
        c.push(GateLabel::Clock { d: 4 }, &[1]).unwrap();
        let text = c.to_text();
        let back = Circuit::from_text(&text).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.to_text(), text);
    }

    #[test]
    fn text_parse_errors_carry_line_numbers() {
        assert!(matches!(
            Circuit::from_text("rot 0 0 1 0.1 0.2\n"),
            Err(Error::Parse { line: 1, .. })
        ));
        let bad = "circuit 2 3\nrot 0 0 1 0.1\n";
        assert!(matches!(
            Circuit::from_text(bad),
            Err(Error::Parse { line: 2, .. })
        ));
        let unknown = "# note\ncircuit 2 3\nfoo 0\n";
        assert!(matches!(
            Circuit::from_text(unknown),
            Err(Error::Parse { line: 3, .. })
        ));
        assert!(matches!(
            Circuit::from_text("circuit 2 3\nshift 5\n"),
            Err(Error::Parse { line: 2, .. })
        ));
    }
}
