use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::ValueEnum;
use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use super::config::{ConfigError, RunConfig};
use crate::dispersive::{analytic_effective, dispersive_params, residual_and_order};
use crate::dynamics::{
    evolve, format_float, prepare_initial, required_n_max, semiclassical_sweep, TrajectoryRecord, LEAKAGE_TOL,
};
use crate::error::Error;
use crate::hamiltonian::{
    build_hamiltonian, dark_state, excitation_operator, free_hamiltonian, interaction_hamiltonian, rotated_couplings,
    rotation_parameters, ClassicalFieldAmplitude,
};
use crate::hilbert::SpaceSpec;
use crate::linalg::{re, HermitianEigen};
use crate::operators::{commutator, verify_algebra, AlgebraMode, IdentityReport, EXACT_TOL};
use crate::weights::{
    classical_commutator_residual, classical_reflection, diagram_layout, render_svg, DiagramLayout, DiagramMode, Order,
};

const CONSERVATION_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    Verify,
    Evolve,
    DispersiveCompare,
    Weights,
    Sweep,
    Spectrum,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Verify => "verify",
            Command::Evolve => "evolve",
            Command::DispersiveCompare => "dispersive-compare",
            Command::Weights => "weights",
            Command::Sweep => "sweep",
            Command::Spectrum => "spectrum",
        }
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Model(#[from] Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    /// 2 for configuration problems, 3 for truncation-unsafe requests.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(ConfigError::Truncation { .. }) | CliError::Model(Error::TruncationUnsafe { .. }) => 3,
            _ => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckRecord {
    pub name: String,
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl CheckRecord {
    pub fn at_most(name: impl Into<String>, residual: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            residual,
            tolerance,
            pass: residual <= tolerance,
        }
    }
}

impl From<IdentityReport> for CheckRecord {
    fn from(r: IdentityReport) -> Self {
        let name = match r.guard {
            Some(g) => format!("{} (guard {g})", r.name),
            None => r.name,
        };
        Self {
            name,
            residual: r.residual,
            tolerance: r.tolerance,
            pass: r.pass,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportSummary {
    pub command: String,
    pub checks: Vec<CheckRecord>,
    pub pass: bool,
    pub notes: Vec<String>,
    pub details: Value,
    /// Printed, never written, so output files stay reproducible.
    #[serde(skip)]
    pub wall_time_s: f64,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub summary: ReportSummary,
    pub files: Vec<PathBuf>,
    pub truncation_unsafe: bool,
}

impl RunOutcome {
    pub fn exit_code(&self) -> i32 {
        if self.truncation_unsafe {
            3
        } else if self.summary.pass {
            0
        } else {
            1
        }
    }
}

struct Output {
    dir: PathBuf,
    files: Vec<PathBuf>,
}

impl Output {
    fn new(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|source| CliError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.dir.join(name);
        fs::write(&path, bytes).map_err(|source| CliError::Io {
            path: path.clone(),
            source,
        })?;
        self.files.push(path);
        Ok(())
    }

    fn write_json(&mut self, name: &str, value: &impl Serialize) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value).expect("serializable report");
        text.push('\n');
        self.write(name, text.as_bytes())
    }
}

struct Partial {
    checks: Vec<CheckRecord>,
    notes: Vec<String>,
    details: Value,
    truncation_unsafe: bool,
}

impl Partial {
    fn new(checks: Vec<CheckRecord>, details: Value) -> Self {
        Self {
            checks,
            notes: Vec::new(),
            details,
            truncation_unsafe: false,
        }
    }
}

/// Run one command, writing its files into `cfg.output_dir`.
pub fn run(command: Command, cfg: &RunConfig) -> Result<RunOutcome, CliError> {
    let start = Instant::now();
    let mut out = Output::new(&cfg.output_dir)?;
    let partial = match command {
        Command::Verify => verify(cfg)?,
        Command::Evolve => evolve_cmd(cfg, &mut out)?,
        Command::DispersiveCompare => dispersive_cmd(cfg, &mut out)?,
        Command::Weights => weights_cmd(cfg, &mut out)?,
        Command::Sweep => sweep_cmd(cfg)?,
        Command::Spectrum => spectrum_cmd(cfg, &mut out)?,
    };
    let summary = ReportSummary {
        command: command.name().to_string(),
        pass: partial.checks.iter().all(|c| c.pass),
        checks: partial.checks,
        notes: partial.notes,
        details: partial.details,
        wall_time_s: start.elapsed().as_secs_f64(),
    };
    out.write_json(&format!("{}.json", command.name()), &summary)?;
    Ok(RunOutcome {
        summary,
        files: out.files,
        truncation_unsafe: partial.truncation_unsafe,
    })
}

fn verify(cfg: &RunConfig) -> Result<Partial, CliError> {
    let spec = cfg.space;
    let h = &cfg.hamiltonian;
    let mut checks: Vec<CheckRecord> = verify_algebra(spec, AlgebraMode::U3, 0)?
        .into_iter()
        .map(CheckRecord::from)
        .collect();
    checks.extend(
        verify_algebra(spec, AlgebraMode::SecondOrder, cfg.guard)?
            .into_iter()
            .map(CheckRecord::from),
    );

    let ham = build_hamiltonian(spec, h)?;
    checks.push(CheckRecord::at_most("H Hermitian", ham.hermiticity_defect(), EXACT_TOL));
    let n_exc = excitation_operator(spec, h.scheme);
    checks.push(CheckRecord::at_most(
        "[H,N_exc] = 0",
        commutator(&ham, &n_exc)?.max_norm(),
        EXACT_TOL,
    ));

    let h_int = interaction_hamiltonian(spec, h);
    let mut dark_worst = 0.0_f64;
    for n in 0..spec.n_max() {
        let psi = dark_state(spec, h, n)?;
        dark_worst = dark_worst.max((h_int.entries() * psi).norm());
    }
    checks.push(CheckRecord::at_most(
        "dark state annihilated by H_int",
        dark_worst,
        EXACT_TOL,
    ));

    let r = rotation_parameters(h)?;
    let [(_, _, ga), (_, _, gb)] = h.coupled_pairs();
    checks.push(CheckRecord::at_most(
        "effective coupling = sqrt of squares",
        (r.effective_coupling - ga.hypot(gb)).abs(),
        EXACT_TOL,
    ));
    let mut notes = Vec::new();
    let mut details = json!({ "rotation": r });
    if h.is_degenerate() {
        let (_, rc) = rotated_couplings(spec, h)?;
        checks.push(CheckRecord::at_most(
            "rotated dark-mode coupling",
            rc.dark_coupling,
            1e-10,
        ));
        checks.push(CheckRecord::at_most(
            "rotated effective coupling",
            (rc.effective_coupling - r.effective_coupling).abs(),
            1e-10,
        ));
        details["rotated"] = json!(rc);
    } else {
        notes.push("energies of the degenerate pair differ; rotated-Hamiltonian checks skipped".into());
    }
    let mut partial = Partial::new(checks, details);
    partial.notes = notes;
    Ok(partial)
}

fn trajectory_checks(prefix: &str, rec: &TrajectoryRecord, atoms: usize) -> Vec<CheckRecord> {
    let s0 = rec.samples[0];
    let worst = |f: &dyn Fn(&crate::dynamics::Sample) -> f64| rec.samples.iter().map(f).fold(0.0_f64, f64::max);
    vec![
        CheckRecord::at_most(
            format!("{prefix}norm"),
            worst(&|s| (s.norm - 1.0).abs()),
            CONSERVATION_TOL,
        ),
        CheckRecord::at_most(
            format!("{prefix}excitation drift"),
            worst(&|s| (s.excitation - s0.excitation).abs()),
            CONSERVATION_TOL,
        ),
        CheckRecord::at_most(
            format!("{prefix}energy drift"),
            worst(&|s| (s.energy - s0.energy).abs()),
            CONSERVATION_TOL,
        ),
        CheckRecord::at_most(
            format!("{prefix}population sum"),
            worst(&|s| (s.populations.iter().sum::<f64>() - atoms as f64).abs()),
            CONSERVATION_TOL,
        ),
        CheckRecord::at_most(format!("{prefix}boundary leakage"), rec.max_leakage, LEAKAGE_TOL),
    ]
}

fn evolve_cmd(cfg: &RunConfig, out: &mut Output) -> Result<Partial, CliError> {
    let spec = cfg.space;
    let h = &cfg.hamiltonian;
    let grid = cfg.grid()?;
    let ham = build_hamiltonian(spec, h)?;
    let psi0 = prepare_initial(spec, &cfg.initial, h)?;
    let rec = evolve(&ham, &psi0, &grid, h.scheme)?;
    out.write("trajectory.csv", rec.to_csv().as_bytes())?;
    let mut partial = Partial::new(
        trajectory_checks("", &rec, spec.atoms()),
        json!({ "max_leakage": rec.max_leakage, "samples": rec.samples.len() }),
    );
    partial.truncation_unsafe = rec.truncation_unsafe;
    Ok(partial)
}

fn dispersive_cmd(cfg: &RunConfig, out: &mut Output) -> Result<Partial, CliError> {
    let spec = cfg.space;
    let h = &cfg.hamiltonian;
    let n_bar = cfg.initial.mean_photon_number();
    let p = dispersive_params(h, n_bar, spec.atoms())?;
    let probe = residual_and_order(spec, h, &p, cfg.guard)?;
    let model = analytic_effective(spec, h, &p)?;

    let mut checks = vec![match probe.reduction {
        Some(ratio) => CheckRecord {
            name: "transfer-block residual reduction under ε/2".into(),
            residual: ratio,
            tolerance: 3.5,
            pass: ratio >= 3.5,
        },
        None => CheckRecord::at_most("transfer-block residual", probe.residual, EXACT_TOL),
    }];
    let mut notes = Vec::new();
    if p.validity_margin < 10.0 {
        notes.push(format!(
            "validity margin {} is below the recommended 10",
            p.validity_margin
        ));
    }

    let grid = cfg.grid()?;
    let psi0 = prepare_initial(spec, &cfg.initial, h)?;
    let exact = evolve(&build_hamiltonian(spec, h)?, &psi0, &grid, h.scheme)?;
    let h_eff = &free_hamiltonian(spec, h) + &model.transfer_operator;
    let effective = evolve(&h_eff, &psi0, &grid, h.scheme)?;
    out.write("trajectory_exact.csv", exact.to_csv().as_bytes())?;
    out.write("trajectory_effective.csv", effective.to_csv().as_bytes())?;
    checks.extend(trajectory_checks("exact ", &exact, spec.atoms()));

    let mut partial = Partial::new(
        checks,
        json!({
            "params": p,
            "order_probe": probe,
            "prefactor": model.prefactor,
            "guard": cfg.guard,
        }),
    );
    partial.notes = notes;
    partial.truncation_unsafe = exact.truncation_unsafe;
    Ok(partial)
}

fn layout_checks(prefix: &str, layout: &DiagramLayout) -> Vec<CheckRecord> {
    let v = &layout.vectors;
    let conj = v
        .chunks(2)
        .filter(|pair| matches!(pair, [a, b] if a.kappa != [-b.kappa[0], -b.kappa[1]]))
        .count();
    // [T_a, T_b†] sits at index 4, parents at 0 and 3
    let sum = [v[0].kappa[0] + v[3].kappa[0], v[0].kappa[1] + v[3].kappa[1]];
    let additive = if sum == v[4].kappa { 0.0 } else { 1.0 };
    vec![
        CheckRecord::at_most(format!("{prefix}conjugates carry opposite weights"), conj as f64, 0.0),
        CheckRecord::at_most(
            format!("{prefix}second-order weight is the sum of its parents"),
            additive,
            0.0,
        ),
    ]
}

fn layout_json(layout: &DiagramLayout) -> Value {
    Value::Array(
        layout
            .vectors
            .iter()
            .map(|w| {
                json!({
                    "operator": w.label,
                    "order": w.order.to_string(),
                    "kappa": [w.kappa[0].to_string(), w.kappa[1].to_string()],
                    "coords": w.coords,
                })
            })
            .collect(),
    )
}

fn weights_cmd(cfg: &RunConfig, out: &mut Output) -> Result<Partial, CliError> {
    let spec = cfg.space;
    let scheme = cfg.scheme();
    let quantum = diagram_layout(scheme, DiagramMode::Quantum, spec)?;
    out.write("weights.csv", quantum.to_csv().as_bytes())?;
    out.write("weights.svg", &render_svg(&quantum)?)?;
    let mut checks = layout_checks("", &quantum);
    let mut details = json!({
        "quantum": layout_json(&quantum),
        "first_order": quantum.of_order(Order::First).count(),
        "second_order": quantum.of_order(Order::Second).count(),
    });
    if let Some(a) = cfg.classical_alpha {
        let alpha = ClassicalFieldAmplitude(re(a));
        let classical = diagram_layout(scheme, DiagramMode::Classical(alpha), spec)?;
        out.write("weights_classical.csv", classical.to_csv().as_bytes())?;
        out.write("weights_classical.svg", &render_svg(&classical)?)?;
        checks.extend(layout_checks("classical ", &classical));
        let search = classical_reflection(alpha, spec.atoms())?;
        checks.push(CheckRecord::at_most(
            "classical Λ and V first-order sets related by a reflection",
            if search.matches.is_empty() { 1.0 } else { 0.0 },
            0.0,
        ));
        checks.push(CheckRecord::at_most(
            "classical second-order commutator",
            classical_commutator_residual(scheme, alpha, spec.atoms())?,
            EXACT_TOL,
        ));
        details["classical"] = layout_json(&classical);
        details["reflections"] = json!(search.matches);
        details["weyl_candidates"] = json!(search.candidates);
    }
    Ok(Partial::new(checks, details))
}

fn sweep_cmd(cfg: &RunConfig) -> Result<Partial, CliError> {
    let specs = cfg
        .sweep_n_bar
        .iter()
        .map(|&n| SpaceSpec::new(cfg.space.atoms(), cfg.space.n_max().max(required_n_max(n))))
        .collect::<Result<Vec<_>, _>>()?;
    let table = semiclassical_sweep(&specs, &cfg.hamiltonian, &cfg.sweep_n_bar)?;
    let mut checks = Vec::new();
    if let Some(slope) = table.slope {
        checks.push(CheckRecord::at_most("log-log slope + 1", (slope + 1.0).abs(), 0.2));
    }
    let mut partial = Partial::new(checks, json!(table));
    if table.slope.is_none() {
        partial
            .notes
            .push("fewer than two positive mean photon numbers; no slope fitted".into());
    }
    Ok(partial)
}

fn spectrum_cmd(cfg: &RunConfig, out: &mut Output) -> Result<Partial, CliError> {
    let ham = build_hamiltonian(cfg.space, &cfg.hamiltonian)?;
    let eig = HermitianEigen::new(ham.entries());
    let mut csv = String::from("index,eigenvalue\n");
    for (k, e) in eig.values.iter().enumerate() {
        csv.push_str(&format!("{k},{}\n", format_float(*e)));
    }
    out.write("spectrum.csv", csv.as_bytes())?;
    let checks = vec![CheckRecord::at_most("H Hermitian", ham.hermiticity_defect(), EXACT_TOL)];
    Ok(Partial::new(checks, json!({ "dimension": eig.values.len() })))
}
