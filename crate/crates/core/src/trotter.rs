//! First- and second-order Trotter circuits for the Potts chain.
//!
//! One step of order 1 is the interaction layer followed by the mixer layer;
//! order 2 is mixer(τ/2), interaction(τ), mixer(τ/2). Global phases dropped
//! by the light-shift and ancilla schemes are not tracked, so only
//! phase-insensitive quantities (overlap moduli, fidelities) are comparable
//! across schemes.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::gates::GateLabel;
use crate::linalg::{hermitian_expm, StateVector};
use crate::model::{interaction_bond_matrix, PottsParams};
use crate::synth::{interaction_circuit_ls, interaction_circuit_ms, mixer_circuit_in, Circuit};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Order {
    #[serde(rename = "1")]
    First,
    #[serde(rename = "2")]
    Second,
}

impl Order {
    pub fn from_int(order: u32) -> Result<Self> {
        match order {
            1 => Ok(Order::First),
            2 => Ok(Order::Second),
            other => Err(invalid(format!(
                "Trotter order must be 1 or 2, got {other}"
            ))),
        }
    }

    pub fn as_int(self) -> u32 {
        match self {
            Order::First => 1,
            Order::Second => 2,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    /// Symmetric light-shift gate per bond.
    #[default]
    Ls,
    /// MS gates on `{|k>, |q>}` subspaces with one ancilla level per qudit.
    Ms,
    /// Exact bond exponential as a raw two-qudit unitary.
    Exact,
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::Ls => "ls",
            Scheme::Ms => "ms",
            Scheme::Exact => "exact",
        })
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ls" => Ok(Scheme::Ls),
            "ms" => Ok(Scheme::Ms),
            "exact" => Ok(Scheme::Exact),
            other => Err(invalid(format!("unknown scheme `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrotterPlan {
    pub order: Order,
    pub tau: f64,
    pub scheme: Scheme,
}

impl TrotterPlan {
    pub fn new(order: Order, tau: f64, scheme: Scheme) -> Result<Self> {
        if !(tau.is_finite() && tau > 0.0) {
            return Err(invalid(format!("time step must be positive, got {tau}")));
        }
        Ok(Self { order, tau, scheme })
    }

    /// Local dimension the circuits act on.
    pub fn local_dim(&self, p: &PottsParams) -> usize {
        match self.scheme {
            Scheme::Ms => p.q + 1,
            Scheme::Ls | Scheme::Exact => p.q,
        }
    }

    /// `round(t / τ)`; the realised time is `steps * τ`.
    pub fn steps_for(&self, t: f64) -> usize {
        (t / self.tau).round().max(0.0) as usize
    }
}

fn interaction_layer(p: &PottsParams, plan: &TrotterPlan, tau: f64, c: &mut Circuit) -> Result<()> {
    let bond = match plan.scheme {
        Scheme::Ls => interaction_circuit_ls(p.q, p.coupling_j, tau)?,
        Scheme::Ms => interaction_circuit_ms(p.q, p.coupling_j, tau)?,
        Scheme::Exact => {
            let op = hermitian_expm(&interaction_bond_matrix(p.q)?, tau * p.coupling_j)?;
            let mut c = Circuit::new(p.q, 2)?;
            c.push(GateLabel::RawUnitary { arity: 2, op }, &[0, 1])?;
            c
        }
    };
    // bonds commute, so even-indexed bonds go first, then odd-indexed
    let bonds = p.bonds();
    for parity in [0, 1] {
        for (_, &(a, b)) in bonds.iter().enumerate().filter(|(i, _)| i % 2 == parity) {
            c.append_mapped(&bond, &[a, b])?;
        }
    }
    Ok(())
}

fn mixer_layer(p: &PottsParams, plan: &TrotterPlan, tau: f64, c: &mut Circuit) -> Result<()> {
    let mixer = mixer_circuit_in(p.q, plan.local_dim(p), p.field_g, tau)?;
    for site in 0..p.sites {
        c.append_mapped(&mixer, &[site])?;
    }
    Ok(())
}

/// Circuit for one Trotter step.
pub fn trotter_step_circuit(p: &PottsParams, plan: &TrotterPlan) -> Result<Circuit> {
    p.validate()?;
    let mut c = Circuit::new(plan.local_dim(p), p.sites)?;
    c.note(format!(
        "trotter step order={} tau={} scheme={} q={} sites={} J={} g={} boundary={}",
        plan.order.as_int(),
        plan.tau,
        plan.scheme,
        p.q,
        p.sites,
        p.coupling_j,
        p.field_g,
        p.boundary
    ));
    match plan.order {
        Order::First => {
            interaction_layer(p, plan, plan.tau, &mut c)?;
            mixer_layer(p, plan, plan.tau, &mut c)?;
        }
        Order::Second => {
            mixer_layer(p, plan, plan.tau / 2.0, &mut c)?;
            interaction_layer(p, plan, plan.tau, &mut c)?;
            mixer_layer(p, plan, plan.tau / 2.0, &mut c)?;
        }
    }
    Ok(c)
}

/// Snapshots of a Trotterised run.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub steps: Vec<usize>,
    pub times: Vec<f64>,
    pub states: Vec<StateVector>,
}

impl Trajectory {
    pub fn last(&self) -> &StateVector {
        self.states
            .last()
            .expect("a trajectory holds at least the initial state")
    }
}

/// Repeats the step circuit `round(t_max / τ)` times, recording the state
/// every `record_every` steps (and always at step 0 and the final step).
///
/// For the MS scheme a logical `ψ0` is embedded into the `q + 1` level
/// register with empty ancilla levels; snapshots stay in the embedded space.
pub fn trotter_evolve(
    p: &PottsParams,
    plan: &TrotterPlan,
    psi0: &StateVector,
    t_max: f64,
    record_every: usize,
) -> Result<Trajectory> {
    if record_every == 0 {
        return Err(invalid("record_every must be >= 1"));
    }
    if !(t_max.is_finite() && t_max >= 0.0) {
        return Err(invalid(format!("t_max must be non-negative, got {t_max}")));
    }
    let local_dim = plan.local_dim(p);
    if psi0.sites() != p.sites {
        return Err(Error::DimensionMismatch {
            expected: p.sites,
            found: psi0.sites(),
        });
    }
    let mut state = if psi0.local_dim() == local_dim {
        psi0.clone()
    } else if psi0.local_dim() == p.q {
        psi0.embed_levels(local_dim)?
    } else {
        return Err(Error::DimensionMismatch {
            expected: local_dim,
            found: psi0.local_dim(),
        });
    };

    let total = plan.steps_for(t_max);
    let step = trotter_step_circuit(p, plan)?.compile()?;
    let mut out = Trajectory {
        steps: vec![0],
        times: vec![0.0],
        states: vec![state.clone()],
    };
    for n in 1..=total {
        step.apply(&mut state)?;
        if n % record_every == 0 || n == total {
            out.steps.push(n);
            out.times.push(n as f64 * plan.tau);
            out.states.push(state.clone());
        }
    }
    Ok(out)
}

/// Drops ancilla levels from a snapshot of the MS scheme, failing if the
/// lost weight exceeds the normalisation tolerance.
pub fn to_logical(state: &StateVector, q: usize) -> Result<StateVector> {
    if state.local_dim() == q {
        return Ok(state.clone());
    }
    StateVector::new(q, state.sites(), state.restrict_levels(q)?)
}
