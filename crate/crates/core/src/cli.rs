//! Experiment drivers behind the `potts-qudit` binary.
//!
//! Configuration is resolved as built-in defaults, then an optional JSON
//! file (`--config`), then command-line flags. Exit codes: 0 success,
//! 1 validation error, 2 failed check, 3 I/O error.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::gates;
use crate::linalg::{
    haar_unitary, hermitian_expm, phase_aligned_distance, phase_aligned_state_distance, StateVector,
};
use crate::model::{
    build_hamiltonian, interaction_bond_matrix, local_site_matrix, Boundary, ExactEvolution,
    PottsParams, DENSE_DIM_CAP,
};
use crate::observables::{detect_cusps, echo_series, infidelity_series, rate_series, TimeSeries};
use crate::synth::{
    circuit_unitary, gate_counts, givens_decompose, interaction_circuit_ls, interaction_circuit_ms,
    mixer_circuit, Circuit,
};
use crate::trotter::{to_logical, trotter_evolve, Order, Scheme, TrotterPlan};

/// Tolerance for every synthesized-vs-exact equivalence check.
pub const EQUIVALENCE_TOL: f64 = 1e-10;
/// Tolerance on amplitude coupling between logical and ancilla states.
pub const LEAKAGE_TOL: f64 = 1e-12;
/// Random samples per verification sweep.
pub const VERIFY_SAMPLES: usize = 100;
/// Default step-size grid of the scaling study.
pub const SCALING_TAUS: [f64; 4] = [0.2, 0.1, 0.05, 0.025];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SubcommandKind {
    Dqpt,
    Verify,
    Scaling,
}

#[derive(Parser, Debug)]
#[command(
    name = "potts-qudit",
    version,
    about = "Qudit simulation of the quantum Potts chain"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Loschmidt echo and rate function after a field quench, exact vs Trotter.
    Dqpt(Flags),
    /// Check the gate decompositions against exact exponentials.
    Verify(Flags),
    /// Trotter error against step size for orders 1 and 2.
    Scaling(Flags),
}

#[derive(Args, Debug, Default, Clone)]
struct Flags {
    #[arg(long)]
    q: Option<usize>,
    #[arg(long)]
    sites: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    coupling_j: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    field_g: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    t_max: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    tau: Option<f64>,
    #[arg(long)]
    order: Option<u32>,
    #[arg(long)]
    scheme: Option<String>,
    #[arg(long)]
    boundary: Option<String>,
    #[arg(long)]
    record_every: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

/// Fully resolved run configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub subcommand: SubcommandKind,
    pub q: usize,
    pub sites: usize,
    pub coupling_j: f64,
    pub field_g: f64,
    pub t_max: f64,
    pub tau: f64,
    pub order: u32,
    pub scheme: Scheme,
    pub boundary: Boundary,
    pub record_every: usize,
    pub seed: u64,
    pub output: Option<PathBuf>,
}

/// Partial configuration as read from a JSON file.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub q: Option<usize>,
    pub sites: Option<usize>,
    pub coupling_j: Option<f64>,
    pub field_g: Option<f64>,
    pub t_max: Option<f64>,
    pub tau: Option<f64>,
    pub order: Option<u32>,
    pub scheme: Option<Scheme>,
    pub boundary: Option<Boundary>,
    pub record_every: Option<usize>,
    pub seed: Option<u64>,
    pub output: Option<PathBuf>,
}

impl RunConfig {
    /// Built-in defaults: the q = 3, N = 6, J = 1/4, g = 1 quench for `dqpt`,
    /// the N = 4, t = 1 convergence study for `scaling`.
    pub fn defaults(subcommand: SubcommandKind) -> Self {
        let base = Self {
            subcommand,
            q: 3,
            sites: 6,
            coupling_j: 0.25,
            field_g: 1.0,
            t_max: 10.0,
            tau: 0.02,
            order: 2,
            scheme: Scheme::Ls,
            boundary: Boundary::Open,
            record_every: 1,
            seed: 0,
            output: None,
        };
        match subcommand {
            SubcommandKind::Dqpt | SubcommandKind::Verify => base,
            SubcommandKind::Scaling => Self {
                sites: 4,
                t_max: 1.0,
                tau: SCALING_TAUS[0],
                ..base
            },
        }
    }

    fn merge_file(&mut self, f: ConfigFile) {
        macro_rules! take {
            ($($field:ident),*) => { $( if let Some(v) = f.$field { self.$field = v; } )* };
        }
        take!(
            q,
            sites,
            coupling_j,
            field_g,
            t_max,
            tau,
            order,
            scheme,
            boundary,
            record_every,
            seed
        );
        if f.output.is_some() {
            self.output = f.output;
        }
    }

    fn merge_flags(&mut self, f: &Flags) -> Result<(), CliError> {
        macro_rules! take {
            ($($field:ident),*) => { $( if let Some(v) = f.$field { self.$field = v; } )* };
        }
        take!(
            q,
            sites,
            coupling_j,
            field_g,
            t_max,
            tau,
            order,
            record_every,
            seed
        );
        if let Some(s) = &f.scheme {
            self.scheme = s
                .parse()
                .map_err(|e: crate::Error| CliError::Validation(e.to_string()))?;
        }
        if let Some(b) = &f.boundary {
            self.boundary = b
                .parse()
                .map_err(|e: crate::Error| CliError::Validation(e.to_string()))?;
        }
        if f.output.is_some() {
            self.output = f.output.clone();
        }
        Ok(())
    }

    /// Checks every numeric field before anything is allocated.
    pub fn validate(&self) -> Result<(), CliError> {
        let fail = |msg: String| Err(CliError::Validation(msg));
        if self.q < 2 {
            return fail(format!("--q must be >= 2, got {}", self.q));
        }
        if self.subcommand == SubcommandKind::Verify && self.q > 6 {
            return fail(format!("verify supports q in 2..=6, got {}", self.q));
        }
        if self.sites < 2 {
            return fail(format!("--sites must be >= 2, got {}", self.sites));
        }
        for (name, v) in [
            ("--coupling-j", self.coupling_j),
            ("--field-g", self.field_g),
        ] {
            if !v.is_finite() {
                return fail(format!("{name} must be finite"));
            }
        }
        if !(self.tau.is_finite() && self.tau > 0.0) {
            return fail(format!("--tau must be positive, got {}", self.tau));
        }
        if !(self.t_max.is_finite() && self.t_max >= 0.0) {
            return fail(format!("--t-max must be non-negative, got {}", self.t_max));
        }
        if self.order != 1 && self.order != 2 {
            return fail(format!("--order must be 1 or 2, got {}", self.order));
        }
        if self.record_every == 0 {
            return fail("--record-every must be >= 1".into());
        }
        if self.subcommand != SubcommandKind::Verify {
            let local = if self.scheme == Scheme::Ms {
                self.q + 1
            } else {
                self.q
            };
            let dim = (local as u128).checked_pow(self.sites as u32);
            if dim.is_none_or(|d| d > DENSE_DIM_CAP as u128) {
                return fail(format!(
                    "register {local}^{} exceeds the dense cap of {DENSE_DIM_CAP}",
                    self.sites
                ));
            }
        }
        Ok(())
    }

    pub fn params(&self) -> Result<PottsParams, CliError> {
        PottsParams::new(
            self.q,
            self.sites,
            self.coupling_j,
            self.field_g,
            self.boundary,
        )
        .map_err(|e| CliError::Validation(e.to_string()))
    }

    fn header_line(&self) -> String {
        format!(
            "# potts-qudit config={}",
            serde_json::to_string(self).expect("config serializes")
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    Validation(String),
    CheckFailed(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::CheckFailed(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "invalid configuration: {m}"),
            CliError::CheckFailed(m) => write!(f, "check failed: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl From<crate::Error> for CliError {
    fn from(e: crate::Error) -> Self {
        match e {
            crate::Error::CapExceeded { .. } | crate::Error::InvalidParameter(_) => {
                CliError::Validation(e.to_string())
            }
            other => CliError::CheckFailed(other.to_string()),
        }
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

/// Resolves defaults, config file and flags into a validated config.
fn resolve(kind: SubcommandKind, flags: &Flags) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::defaults(kind);
    if let Some(path) = &flags.config {
        let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
        let file: ConfigFile = serde_json::from_str(&text)
            .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
        cfg.merge_file(file);
    }
    cfg.merge_flags(flags)?;
    cfg.validate()?;
    Ok(cfg)
}

/// Entry point used by the binary; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if e.use_stderr() => {
            let text = e.to_string();
            eprintln!(
                "{}",
                text.lines().next().unwrap_or("error: invalid arguments")
            );
            return 1;
        }
        Err(e) => {
            let _ = e.print();
            return 0;
        }
    };
    let result = match &cli.command {
        Command::Dqpt(f) => resolve(SubcommandKind::Dqpt, f).and_then(|cfg| {
            let report = run_dqpt(&cfg)?;
            print!("{}", report.summary());
            Ok(())
        }),
        Command::Verify(f) => resolve(SubcommandKind::Verify, f).and_then(|cfg| {
            let report = run_verify(&cfg)?;
            print!("{}", report.render());
            if report.all_passed() {
                Ok(())
            } else {
                Err(CliError::CheckFailed(report.first_failure()))
            }
        }),
        Command::Scaling(f) => resolve(SubcommandKind::Scaling, f).and_then(|cfg| {
            let report = run_scaling(&cfg)?;
            print!("{}", report.summary());
            Ok(())
        }),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", e.to_string().replace('\n', " "));
            e.exit_code()
        }
    }
}

/// Scientific notation with 15 significant digits.
pub fn fmt15(x: f64) -> String {
    format!("{x:.14e}")
}

fn write_csv(
    path: &Path,
    header: &str,
    columns: &[&str],
    rows: impl IntoIterator<Item = Vec<String>>,
) -> Result<(), CliError> {
    let mut file = fs::File::create(path).map_err(|e| io_err(path, e))?;
    writeln!(file, "{header}").map_err(|e| io_err(path, e))?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(columns).map_err(|e| io_err(path, e))?;
    for row in rows {
        w.write_record(&row).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

/// Output of the quench experiment.
#[derive(Clone, Debug)]
pub struct DqptReport {
    pub config: RunConfig,
    /// `steps * τ`, which may differ from the requested `t_max`.
    pub realized_t_max: f64,
    pub echo_exact: TimeSeries,
    pub rate_exact: TimeSeries,
    pub echo_trotter: TimeSeries,
    pub rate_trotter: TimeSeries,
    pub infidelity: TimeSeries,
    pub cusp_times: Vec<f64>,
    pub max_infidelity: f64,
    pub max_rate_deviation: f64,
    pub output: Option<PathBuf>,
}

impl DqptReport {
    pub fn summary(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{}", self.config.header_line());
        let _ = writeln!(s, "realized_t_max={}", fmt15(self.realized_t_max));
        let cusps: Vec<String> = self.cusp_times.iter().map(|t| format!("{t:.4}")).collect();
        let _ = writeln!(s, "cusp_count={}", self.cusp_times.len());
        let _ = writeln!(s, "cusp_times={}", cusps.join(","));
        let _ = writeln!(s, "max_infidelity={}", fmt15(self.max_infidelity));
        let _ = writeln!(s, "max_rate_deviation={}", fmt15(self.max_rate_deviation));
        if let Some(p) = &self.output {
            let _ = writeln!(s, "csv={}", p.display());
        }
        s
    }

    pub fn csv_rows(&self) -> Vec<Vec<String>> {
        (0..self.echo_exact.len())
            .map(|i| {
                vec![
                    fmt15(self.echo_exact.times()[i]),
                    fmt15(self.echo_exact.values()[i]),
                    fmt15(self.rate_exact.values()[i]),
                    fmt15(self.echo_trotter.values()[i]),
                    fmt15(self.rate_trotter.values()[i]),
                    fmt15(self.infidelity.values()[i]),
                ]
            })
            .collect()
    }
}

pub const DQPT_COLUMNS: [&str; 6] = [
    "t",
    "loschmidt_exact",
    "rate_exact",
    "loschmidt_trotter",
    "rate_trotter",
    "infidelity",
];

/// Computes the quench experiment without touching the filesystem.
pub fn compute_dqpt(cfg: &RunConfig) -> Result<DqptReport, CliError> {
    cfg.validate()?;
    let p = cfg.params()?;
    let plan = TrotterPlan::new(Order::from_int(cfg.order)?, cfg.tau, cfg.scheme)?;
    let psi0 = StateVector::all_zero(p.q, p.sites)?;

    let traj = trotter_evolve(&p, &plan, &psi0, cfg.t_max, cfg.record_every)?;
    let trotter_states = traj
        .states
        .iter()
        .map(|s| to_logical(s, p.q))
        .collect::<crate::Result<Vec<_>>>()?;

    let exact = ExactEvolution::new(&build_hamiltonian(&p)?)?;
    let prepared = exact.prepare(&psi0)?;
    let exact_states = traj
        .times
        .iter()
        .map(|&t| prepared.at(t))
        .collect::<crate::Result<Vec<_>>>()?;

    let echo_exact = echo_series("loschmidt_exact", &traj.times, &psi0, &exact_states)?;
    let echo_trotter = echo_series("loschmidt_trotter", &traj.times, &psi0, &trotter_states)?;
    let rate_exact = rate_series("rate_exact", &echo_exact, p.sites)?;
    let rate_trotter = rate_series("rate_trotter", &echo_trotter, p.sites)?;
    let infidelity = infidelity_series(&traj.times, &exact_states, &trotter_states)?;
    let cusp_times = detect_cusps(&rate_exact)
        .into_iter()
        .map(|i| traj.times[i])
        .collect();
    let max_rate_deviation = rate_exact.max_abs_diff(&rate_trotter)?;
    Ok(DqptReport {
        config: cfg.clone(),
        realized_t_max: *traj.times.last().expect("non-empty"),
        max_infidelity: infidelity.max(),
        max_rate_deviation,
        echo_exact,
        rate_exact,
        echo_trotter,
        rate_trotter,
        infidelity,
        cusp_times,
        output: None,
    })
}

/// Runs the quench experiment and writes its CSV (default `dqpt.csv`).
pub fn run_dqpt(cfg: &RunConfig) -> Result<DqptReport, CliError> {
    let mut report = compute_dqpt(cfg)?;
    let path = cfg
        .output
        .clone()
        .unwrap_or_else(|| PathBuf::from("dqpt.csv"));
    write_csv(&path, &cfg.header_line(), &DQPT_COLUMNS, report.csv_rows())?;
    report.output = Some(path);
    Ok(report)
}

#[derive(Clone, Debug)]
pub struct CheckLine {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Default)]
pub struct VerifyReport {
    pub checks: Vec<CheckLine>,
    pub counts: Vec<(String, usize)>,
    pub max_distance: f64,
}

impl VerifyReport {
    fn check(&mut self, name: &str, passed: bool, detail: String) {
        self.checks.push(CheckLine {
            name: name.into(),
            passed,
            detail,
        });
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn first_failure(&self) -> String {
        self.checks
            .iter()
            .find(|c| !c.passed)
            .map(|c| format!("{} {}", c.name, c.detail))
            .unwrap_or_default()
    }

    pub fn count(&self, name: &str) -> Option<usize> {
        self.counts.iter().find(|(n, _)| n == name).map(|(_, c)| *c)
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        for c in &self.checks {
            let tag = if c.passed { "PASS" } else { "FAIL" };
            let _ = writeln!(s, "{tag} {} {}", c.name, c.detail);
        }
        let counts: Vec<String> = self
            .counts
            .iter()
            .map(|(n, c)| format!("{n}={c}"))
            .collect();
        let _ = writeln!(s, "counts {}", counts.join(" "));
        s
    }
}

/// Largest modulus of an entry coupling a logical basis state (every site
/// below `q`) to a state with some site on the ancilla level.
fn off_block_norm(u: &crate::DenseOperator, q: usize, sites: usize) -> f64 {
    let d = q + 1;
    let logical = |idx: usize| crate::linalg::digits(idx, d, sites).all(|x| x < q);
    let mut worst = 0.0f64;
    for i in 0..u.dim() {
        for j in 0..u.dim() {
            if logical(i) != logical(j) {
                worst = worst.max(u[(i, j)].norm());
            }
        }
    }
    worst
}

fn logical_indices(q: usize, sites: usize) -> Vec<usize> {
    let d = q + 1;
    (0..d.pow(sites as u32))
        .filter(|&idx| crate::linalg::digits(idx, d, sites).all(|x| x < q))
        .collect()
}

/// Equivalence, leakage and gate-count checks of all decompositions.
pub fn run_verify(cfg: &RunConfig) -> Result<VerifyReport, CliError> {
    cfg.validate()?;
    let (q, j, g) = (cfg.q, cfg.coupling_j, cfg.field_g);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let taus: Vec<f64> = (0..VERIFY_SAMPLES)
        .map(|_| rng.random_range(-2.0..2.0))
        .collect();
    let mut report = VerifyReport::default();
    let bond = interaction_bond_matrix(q)?;
    let site = local_site_matrix(q)?;
    let logical = logical_indices(q, 2);

    let (mut mixer_max, mut ls_max, mut ms_max, mut leak_max) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for &tau in &taus {
        let mixer = circuit_unitary(&mixer_circuit(q, g, tau)?)?;
        mixer_max = mixer_max.max(phase_aligned_distance(
            &mixer,
            &hermitian_expm(&site, g * tau)?,
        )?);

        let target = hermitian_expm(&bond, j * tau)?;
        let ls = circuit_unitary(&interaction_circuit_ls(q, j, tau)?)?;
        ls_max = ls_max.max(phase_aligned_distance(&ls, &target)?);

        let ms = circuit_unitary(&interaction_circuit_ms(q, j, tau)?)?;
        ms_max = ms_max.max(phase_aligned_distance(&ms.submatrix(&logical), &target)?);
        leak_max = leak_max.max(off_block_norm(&ms, q, 2));
    }
    let samples = format!("q={q} samples={VERIFY_SAMPLES}");
    report.check(
        "mixer_equivalence",
        mixer_max < EQUIVALENCE_TOL,
        format!("{samples} max_distance={mixer_max:e}"),
    );
    report.check(
        "ls_equivalence",
        ls_max < EQUIVALENCE_TOL,
        format!("{samples} max_distance={ls_max:e}"),
    );
    report.check(
        "ms_equivalence",
        ms_max < EQUIVALENCE_TOL,
        format!("{samples} max_distance={ms_max:e}"),
    );
    report.check(
        "ms_leakage",
        leak_max < LEAKAGE_TOL,
        format!("{samples} max_off_block={leak_max:e}"),
    );
    report.max_distance = mixer_max.max(ls_max).max(ms_max);

    let fourier = gates::fourier(q)?;
    let dec = givens_decompose(&fourier)?;
    let rebuilt = circuit_unitary(&dec.to_circuit()?)?;
    let fourier_err = rebuilt.max_abs_diff(&fourier)?;
    report.check(
        "givens_fourier",
        fourier_err < EQUIVALENCE_TOL && dec.rotations.len() == q * (q - 1) / 2,
        format!(
            "q={q} rotations={} reconstruction={fourier_err:e}",
            dec.rotations.len()
        ),
    );

    let (mut haar_err, mut haar_count) = (0.0f64, 0usize);
    for _ in 0..VERIFY_SAMPLES {
        let u = haar_unitary(q, &mut rng);
        let dec = givens_decompose(&u)?;
        haar_count = haar_count.max(dec.rotations.len());
        haar_err = haar_err.max(circuit_unitary(&dec.to_circuit()?)?.max_abs_diff(&u)?);
    }
    report.check(
        "givens_random",
        haar_err < 1e-9 && haar_count <= q * (q - 1) / 2,
        format!("q={q} samples={VERIFY_SAMPLES} max_rotations={haar_count} max_reconstruction={haar_err:e}"),
    );

    let tau = cfg.tau;
    let mixer = mixer_circuit(q, g, tau)?;
    let ls = interaction_circuit_ls(q, j, tau)?;
    let ms = interaction_circuit_ms(q, j, tau)?;
    let roundtrip = [&mixer, &ls, &ms]
        .iter()
        .all(|c| Circuit::from_text(&c.to_text()).as_ref() == Ok(*c));
    report.check("text_roundtrip", roundtrip, format!("q={q}"));

    let mixer_counts = gate_counts(&mixer);
    let ms_counts = gate_counts(&ms);
    report.check(
        "gate_counts",
        mixer_counts.single_qudit_rotations == q * (q - 1)
            && mixer_counts.virtual_phases == 1
            && ms_counts.two_qudit_entangling == q
            && gate_counts(&ls).two_qudit_entangling == 1,
        format!("q={q}"),
    );
    report.counts = vec![
        (
            "mixer_rotations".into(),
            mixer_counts.single_qudit_rotations,
        ),
        ("mixer_virtual_phases".into(), mixer_counts.virtual_phases),
        ("fourier_givens_rotations".into(), dec.rotations.len()),
        (
            "ls_entangling".into(),
            gate_counts(&ls).two_qudit_entangling,
        ),
        ("ms_entangling".into(), ms_counts.two_qudit_entangling),
        ("ms_rotations".into(), ms_counts.single_qudit_rotations),
    ];

    if let Some(dir) = &cfg.output {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        for (name, c) in [("mixer", &mixer), ("ls", &ls), ("ms", &ms)] {
            let path = dir.join(format!("{name}_q{q}.circ"));
            fs::write(&path, c.to_text()).map_err(|e| io_err(&path, e))?;
        }
    }
    Ok(report)
}

#[derive(Clone, Debug)]
pub struct ScalingRow {
    pub order: u32,
    pub tau: f64,
    pub state_error: f64,
}

#[derive(Clone, Debug)]
pub struct ScalingReport {
    pub config: RunConfig,
    pub rows: Vec<ScalingRow>,
    /// Least-squares slope of `ln(error)` against `ln(τ)` per order; `None`
    /// when some error is exactly zero.
    pub slopes: Vec<(u32, Option<f64>)>,
    pub output: Option<PathBuf>,
}

impl ScalingReport {
    pub fn slope(&self, order: u32) -> Option<f64> {
        self.slopes
            .iter()
            .find(|(o, _)| *o == order)
            .and_then(|(_, s)| *s)
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{}", self.config.header_line());
        for (order, slope) in &self.slopes {
            match slope {
                Some(v) => {
                    let _ = writeln!(s, "order={order} slope={v:.6}");
                }
                None => {
                    let _ = writeln!(s, "order={order} slope=n/a");
                }
            }
        }
        if let Some(p) = &self.output {
            let _ = writeln!(s, "csv={}", p.display());
        }
        s
    }
}

/// Step sizes for the scaling study: the default grid, or four successive
/// halvings of a user-supplied `--tau`.
pub fn scaling_taus(cfg: &RunConfig) -> Vec<f64> {
    if cfg.tau == SCALING_TAUS[0] {
        SCALING_TAUS.to_vec()
    } else {
        (0..4).map(|i| cfg.tau / 2f64.powi(i)).collect()
    }
}

/// Least-squares slope of `y` on `x`.
pub fn fit_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Global state error `min_φ ||ψ_trotter - e^{iφ} ψ_exact||` at `t_max`.
pub fn compute_scaling(cfg: &RunConfig) -> Result<ScalingReport, CliError> {
    cfg.validate()?;
    let p = cfg.params()?;
    let psi0 = StateVector::all_zero(p.q, p.sites)?;
    let exact = ExactEvolution::new(&build_hamiltonian(&p)?)?;
    let taus = scaling_taus(cfg);
    let mut rows = Vec::new();
    let mut slopes = Vec::new();
    for order in [1u32, 2] {
        let mut errors = Vec::new();
        for &tau in &taus {
            let plan = TrotterPlan::new(Order::from_int(order)?, tau, cfg.scheme)?;
            let steps = plan.steps_for(cfg.t_max);
            let traj = trotter_evolve(&p, &plan, &psi0, cfg.t_max, steps.max(1))?;
            let trotter = to_logical(traj.last(), p.q)?;
            let reference = exact.evolve(&psi0, steps as f64 * tau)?;
            let state_error = phase_aligned_state_distance(&reference, &trotter)?;
            errors.push(state_error);
            rows.push(ScalingRow {
                order,
                tau,
                state_error,
            });
        }
        let slope = if errors.iter().all(|&e| e > 0.0) {
            let lx: Vec<f64> = taus.iter().map(|t| t.ln()).collect();
            let ly: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
            Some(fit_slope(&lx, &ly))
        } else {
            None
        };
        slopes.push((order, slope));
    }
    Ok(ScalingReport {
        config: cfg.clone(),
        rows,
        slopes,
        output: None,
    })
}

/// Runs the scaling study and writes its CSV (default `scaling.csv`).
pub fn run_scaling(cfg: &RunConfig) -> Result<ScalingReport, CliError> {
    let mut report = compute_scaling(cfg)?;
    let path = cfg
        .output
        .clone()
        .unwrap_or_else(|| PathBuf::from("scaling.csv"));
    let rows = report
        .rows
        .iter()
        .map(|r| vec![r.order.to_string(), fmt15(r.tau), fmt15(r.state_error)]);
    write_csv(
        &path,
        &cfg.header_line(),
        &["order", "tau", "state_error"],
        rows,
    )?;
    report.output = Some(path);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flags() -> Flags {
        Flags::default()
    }

    #[test]
    fn defaults_match_the_quench_experiment() {
        let cfg = resolve(SubcommandKind::Dqpt, &flags()).unwrap();
        assert_eq!((cfg.q, cfg.sites), (3, 6));
        assert_eq!((cfg.coupling_j, cfg.field_g), (0.25, 1.0));
        assert_eq!((cfg.tau, cfg.t_max, cfg.order), (0.02, 10.0, 2));
        assert_eq!(cfg.scheme, Scheme::Ls);
        assert_eq!(cfg.boundary, Boundary::Open);
        let scaling = resolve(SubcommandKind::Scaling, &flags()).unwrap();
        assert_eq!((scaling.sites, scaling.t_max), (4, 1.0));
        assert_eq!(scaling_taus(&scaling), SCALING_TAUS.to_vec());
    }

    #[test]
    fn flags_override_config_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cfg.json");
        fs::write(
            &path,
            r#"{"q": 4, "sites": 3, "tau": 0.05, "scheme": "ms"}"#,
        )
        .unwrap();
        let mut f = flags();
        f.config = Some(path);
        f.sites = Some(2);
        let cfg = resolve(SubcommandKind::Dqpt, &f).unwrap();
        assert_eq!((cfg.q, cfg.sites, cfg.tau), (4, 2, 0.05));
        assert_eq!(cfg.scheme, Scheme::Ms);
    }

    #[test]
    fn bad_config_file_is_a_validation_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cfg.json");
        fs::write(&path, r#"{"qq": 4}"#).unwrap();
        let mut f = flags();
        f.config = Some(path);
        assert_eq!(
            resolve(SubcommandKind::Dqpt, &f).unwrap_err().exit_code(),
            1
        );
        let mut missing = flags();
        missing.config = Some(dir.path().join("nope.json"));
        assert_eq!(
            resolve(SubcommandKind::Dqpt, &missing)
                .unwrap_err()
                .exit_code(),
            3
        );
    }

    #[test]
    fn validation_rejects_bad_numbers() {
        let cases: Vec<fn(&mut Flags)> = vec![
            |f| f.q = Some(1),
            |f| f.sites = Some(1),
            |f| f.tau = Some(0.0),
            |f| f.t_max = Some(-1.0),
            |f| f.order = Some(3),
            |f| f.record_every = Some(0),
            |f| f.coupling_j = Some(f64::NAN),
            |f| f.sites = Some(12),
            |f| f.scheme = Some("foo".into()),
            |f| f.boundary = Some("twisted".into()),
        ];
        for case in cases {
            let mut f = flags();
            case(&mut f);
            let err = resolve(SubcommandKind::Dqpt, &f).unwrap_err();
            assert_eq!(err.exit_code(), 1, "{f:?}");
        }
        let mut f = flags();
        f.q = Some(7);
        assert!(resolve(SubcommandKind::Verify, &f).is_err());
    }

    #[test]
    fn ms_scheme_counts_ancilla_levels_against_the_cap() {
        let mut f = flags();
        f.scheme = Some("ms".into());
        f.sites = Some(8);
        // 4^8 = 65536 > 3^10
        assert!(resolve(SubcommandKind::Dqpt, &f).is_err());
    }

    #[test]
    fn verify_q2_passes() {
        let mut cfg = RunConfig::defaults(SubcommandKind::Verify);
        cfg.q = 2;
        let report = run_verify(&cfg).unwrap();
        assert!(report.all_passed(), "{}", report.render());
        assert_eq!(report.count("mixer_rotations"), Some(2));
    }

    #[test]
    fn slope_fit_recovers_power_law() {
        let x: Vec<f64> = [0.2f64, 0.1, 0.05].iter().map(|t| t.ln()).collect();
        let y: Vec<f64> = [0.2f64, 0.1, 0.05]
            .iter()
            .map(|t| (3.0 * t * t).ln())
            .collect();
        assert!((fit_slope(&x, &y) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn unwritable_output_is_an_io_error() {
        let mut cfg = RunConfig::defaults(SubcommandKind::Dqpt);
        cfg.sites = 2;
        cfg.t_max = 0.1;
        cfg.output = Some(PathBuf::from("/nonexistent-dir/out.csv"));
        assert_eq!(run_dqpt(&cfg).unwrap_err().exit_code(), 3);
    }
}
