//! Exact unitary dynamics and the transfer / semiclassical experiments.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::dispersive::{transfer_factor, DispersiveParams};
use crate::error::{Error, Result};
use crate::hamiltonian::{bright_state, build_hamiltonian, dark_state, excitation_operator, HamiltonianSpec, Scheme};
use crate::hilbert::{index_map, AtomicBasisState, SpaceSpec};
use crate::linalg::{re, CVector, HermitianEigen, C64, I};
use crate::operators::{product_atomic, Level, OperatorMatrix};

/// Largest coherent-state probability allowed beyond the Fock cutoff.
pub const COHERENT_TAIL_TOL: f64 = 1e-10;
/// Population at `n = n_max` above which a trajectory is truncation-unsafe.
pub const LEAKAGE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AtomicInit {
    Occupations([usize; 3]),
    /// Every atom in the dark superposition of the scheme.
    Dark,
    /// Every atom in the bright superposition of the scheme.
    Bright,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FieldInit {
    Fock(usize),
    /// Truncated and renormalized coherent state `|α>`.
    Coherent(C64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitialState {
    pub atomic: AtomicInit,
    pub field: FieldInit,
}

impl InitialState {
    pub fn basis(occupations: [usize; 3], fock_n: usize) -> Self {
        Self {
            atomic: AtomicInit::Occupations(occupations),
            field: FieldInit::Fock(fock_n),
        }
    }

    pub fn mean_photon_number(&self) -> f64 {
        match self.field {
            FieldInit::Fock(n) => n as f64,
            FieldInit::Coherent(alpha) => alpha.norm_sqr(),
        }
    }
}

fn poisson_tail_beyond(n_bar: f64, n_max: usize) -> f64 {
    let mut p = (-n_bar).exp();
    let mut cumulative = p;
    for n in 1..=n_max {
        p *= n_bar / n as f64;
        cumulative += p;
    }
    (1.0 - cumulative).max(0.0)
}

/// Smallest cutoff that keeps the coherent-state tail below
/// [`COHERENT_TAIL_TOL`] and satisfies `n_max >= n̄ + 6 sqrt(n̄)`.
pub fn required_n_max(n_bar: f64) -> usize {
    let rule = (n_bar + 6.0 * n_bar.sqrt()).ceil().max(1.0) as usize;
    let mut n = rule;
    while poisson_tail_beyond(n_bar, n) > COHERENT_TAIL_TOL {
        n += 1;
    }
    n
}

fn field_amplitudes(spec: SpaceSpec, field: FieldInit) -> Result<Vec<C64>> {
    let nf = spec.field_dim();
    match field {
        FieldInit::Fock(n) => {
            if n > spec.n_max() {
                return Err(Error::FockOutOfRange { n, n_max: spec.n_max() });
            }
            let mut v = vec![re(0.0); nf];
            v[n] = re(1.0);
            Ok(v)
        }
        FieldInit::Coherent(alpha) => {
            let n_bar = alpha.norm_sqr();
            let mut c = Vec::with_capacity(nf);
            c.push(re((-n_bar / 2.0).exp()));
            for n in 1..nf {
                let prev = c[n - 1];
                c.push(prev * alpha / (n as f64).sqrt());
            }
            let kept: f64 = c.iter().map(|z| z.norm_sqr()).sum();
            let tail = (1.0 - kept).max(0.0);
            if tail > COHERENT_TAIL_TOL {
                return Err(Error::TruncationUnsafe {
                    n_bar,
                    n_max: spec.n_max(),
                    required: required_n_max(n_bar),
                    tail,
                });
            }
            let norm = kept.sqrt();
            Ok(c.into_iter().map(|z| z / norm).collect())
        }
    }
}

fn atomic_amplitudes(spec: SpaceSpec, atomic: AtomicInit, h: &HamiltonianSpec) -> Result<Vec<C64>> {
    let basis = index_map(spec);
    let nf = spec.field_dim();
    match atomic {
        AtomicInit::Occupations(occ) => {
            let k = basis.atomic_index(&AtomicBasisState(occ)).map_err(|_| {
                Error::InvalidInitialState(format!("occupations {occ:?} do not sum to {} atoms", spec.atoms()))
            })?;
            let mut v = vec![re(0.0); spec.atomic_dim()];
            v[k] = re(1.0);
            Ok(v)
        }
        AtomicInit::Dark | AtomicInit::Bright => {
            let psi = if atomic == AtomicInit::Dark {
                dark_state(spec, h, 0)?
            } else {
                bright_state(spec, h, 0)?
            };
            Ok((0..spec.atomic_dim()).map(|a| psi[a * nf]).collect())
        }
    }
}

pub fn prepare_initial(spec: SpaceSpec, init: &InitialState, h: &HamiltonianSpec) -> Result<CVector> {
    let atomic = atomic_amplitudes(spec, init.atomic, h)?;
    let field = field_amplitudes(spec, init.field)?;
    let nf = spec.field_dim();
    let psi = CVector::from_fn(spec.product_dim(), |flat, _| atomic[flat / nf] * field[flat % nf]);
    let norm = psi.norm();
    if (norm - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidInitialState(format!("initial state norm {norm}")));
    }
    Ok(psi)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub t_max: f64,
    pub n_samples: usize,
}

impl TimeGrid {
    pub fn new(t_max: f64, n_samples: usize) -> Result<Self> {
        if !(t_max.is_finite() && t_max > 0.0) {
            return Err(Error::InvalidGrid(format!("t_max must be > 0, got {t_max}")));
        }
        if n_samples < 2 {
            return Err(Error::InvalidGrid(format!("n_samples must be >= 2, got {n_samples}")));
        }
        Ok(Self { t_max, n_samples })
    }

    pub fn times(&self) -> Vec<f64> {
        let last = (self.n_samples - 1) as f64;
        (0..self.n_samples).map(|k| self.t_max * k as f64 / last).collect()
    }
}

/// `exp(-iHt)` through the eigendecomposition of `H`.
pub struct Propagator {
    eig: HermitianEigen,
}

impl Propagator {
    pub fn new(h: &OperatorMatrix) -> Result<Self> {
        let scale = h.max_norm().max(1.0);
        let defect = h.hermiticity_defect();
        if defect > 1e-12 * scale {
            return Err(Error::NotHermitian(defect));
        }
        Ok(Self {
            eig: HermitianEigen::new(h.entries()),
        })
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eig.values
    }

    /// States at each requested time.
    pub fn states(&self, psi0: &CVector, times: &[f64]) -> Vec<CVector> {
        let v = &self.eig.vectors;
        let coeffs = v.adjoint() * psi0;
        times
            .iter()
            .map(|&t| {
                let phased = CVector::from_fn(coeffs.len(), |k, _| coeffs[k] * (-I * self.eig.values[k] * t).exp());
                v * phased
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    pub populations: [f64; 3],
    pub photon_number: f64,
    pub norm: f64,
    pub excitation: f64,
    pub energy: f64,
    /// Probability at photon number `n_max`.
    pub leakage: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub samples: Vec<Sample>,
    pub max_leakage: f64,
    pub truncation_unsafe: bool,
}

pub const CSV_HEADER: &str = "t,pop1,pop2,pop3,n_photon,norm,excitation,leakage";

/// Shortest round-trip representation, switching to exponent form for very
/// small or large magnitudes.
pub fn format_float(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || (1e-5..1e16).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

impl TrajectoryRecord {
    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t).collect()
    }

    pub fn population(&self, level: Level) -> Vec<f64> {
        self.samples.iter().map(|s| s.populations[level.number() - 1]).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for s in &self.samples {
            let fields = [
                s.t,
                s.populations[0],
                s.populations[1],
                s.populations[2],
                s.photon_number,
                s.norm,
                s.excitation,
                s.leakage,
            ];
            let row: Vec<String> = fields.iter().map(|&x| format_float(x)).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

fn expectation_diag(diag: &[f64], psi: &CVector) -> f64 {
    diag.iter().zip(psi.iter()).map(|(d, z)| d * z.norm_sqr()).sum()
}

fn expectation(op: &OperatorMatrix, psi: &CVector) -> C64 {
    psi.dotc(&(op.entries() * psi))
}

/// Observables of one state in the product space of `spec`.
fn sample(spec: SpaceSpec, t: f64, psi: &CVector, h: &OperatorMatrix, n_exc: &[f64]) -> Sample {
    let basis = index_map(spec);
    let mut pops = [0.0; 3];
    let mut photons = 0.0;
    let mut leakage = 0.0;
    for (flat, s, n) in basis.iter() {
        let p = psi[flat].norm_sqr();
        for (k, pop) in pops.iter_mut().enumerate() {
            *pop += p * s.0[k] as f64;
        }
        photons += p * n as f64;
        if n == spec.n_max() {
            leakage += p;
        }
    }
    Sample {
        t,
        populations: pops,
        photon_number: photons,
        norm: psi.norm(),
        excitation: expectation_diag(n_exc, psi),
        energy: expectation(h, psi).re,
        leakage,
    }
}

pub fn evolve(h: &OperatorMatrix, psi0: &CVector, grid: &TimeGrid, scheme: Scheme) -> Result<TrajectoryRecord> {
    let spec = h.spec();
    if psi0.len() != spec.product_dim() {
        return Err(Error::SpaceMismatch(format!(
            "state of length {} for a {}-dimensional space",
            psi0.len(),
            spec.product_dim()
        )));
    }
    let prop = Propagator::new(h)?;
    let times = grid.times();
    let n_exc: Vec<f64> = excitation_operator(spec, scheme)
        .entries()
        .diagonal()
        .iter()
        .map(|z| z.re)
        .collect();
    let samples: Vec<Sample> = prop
        .states(psi0, &times)
        .iter()
        .zip(&times)
        .map(|(psi, &t)| sample(spec, t, psi, h, &n_exc))
        .collect();
    let max_leakage = samples.iter().fold(0.0_f64, |m, s| m.max(s.leakage));
    Ok(TrajectoryRecord {
        samples,
        max_leakage,
        truncation_unsafe: max_leakage > LEAKAGE_TOL,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferSummary {
    pub scheme: Scheme,
    /// Degenerate-pair level with the smaller initial population.
    pub spectator_level: Level,
    pub max_spectator_population: f64,
    /// Largest `|<S_pq>|` between the degenerate levels.
    pub max_pair_coherence: f64,
    /// First population maximum of the spectator level, refined by a parabola.
    pub half_period: Option<f64>,
    /// `π / (2 |prefactor · f|)` with `f` the enhancement factor of the initial state.
    pub predicted_half_period: Option<f64>,
    pub relative_period_error: Option<f64>,
    pub truncation_unsafe: bool,
    pub trajectory: TrajectoryRecord,
}

/// `ε g` of the scheme's effective transfer operator.
pub fn transfer_prefactor(h: &HamiltonianSpec, p: &DispersiveParams) -> f64 {
    match h.scheme {
        Scheme::Lambda => p.pair(Level::Three, Level::One).map_or(0.0, |q| q.epsilon) * h.couplings.g32,
        Scheme::Vee => p.pair(Level::Two, Level::One).map_or(0.0, |q| q.epsilon) * h.couplings.g31,
    }
}

fn first_peak(times: &[f64], values: &[f64]) -> Option<f64> {
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
        return None;
    }
    // the lower exit threshold keeps fast ripple from splitting the first lobe
    let start = values.iter().position(|&v| v >= 0.9 * max)?;
    let end = values[start..]
        .iter()
        .position(|&v| v < 0.5 * max)
        .map_or(values.len(), |k| start + k);
    let k = (start..end).max_by(|&a, &b| values[a].total_cmp(&values[b]))?;
    if k == 0 || k + 1 >= values.len() {
        return Some(times[k]);
    }
    let (y0, y1, y2) = (values[k - 1], values[k], values[k + 1]);
    let denom = y0 - 2.0 * y1 + y2;
    if denom == 0.0 {
        return Some(times[k]);
    }
    let dt = times[k + 1] - times[k];
    Some(times[k] + 0.5 * (y0 - y2) / denom * dt)
}

fn symmetric_couplings(h: &HamiltonianSpec) -> bool {
    let [a, b] = h.coupled_pairs().map(|(_, _, g)| g);
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs())
}

/// Exact evolution under the full Hamiltonian from `init`, summarized by the
/// population transfer inside the degenerate pair.
pub fn transfer_experiment(
    spec: SpaceSpec,
    h: &HamiltonianSpec,
    p: &DispersiveParams,
    init: &InitialState,
    grid: &TimeGrid,
) -> Result<TransferSummary> {
    if p.scheme != h.scheme {
        return Err(Error::InvalidHamiltonian(
            "dispersive parameters belong to the other scheme".into(),
        ));
    }
    if p.validity_margin < 10.0 {
        return Err(Error::NotDispersive(format!(
            "validity margin {} < 10",
            p.validity_margin
        )));
    }
    let ham = build_hamiltonian(spec, h)?;
    let psi0 = prepare_initial(spec, init, h)?;
    let trajectory = evolve(&ham, &psi0, grid, h.scheme)?;

    let (lp, lq) = h.scheme.degenerate_pair();
    let first = &trajectory.samples[0];
    let spectator_level = if first.populations[lp.number() - 1] < first.populations[lq.number() - 1] {
        lp
    } else {
        lq
    };
    let spectator = trajectory.population(spectator_level);
    let max_spectator_population = spectator.iter().cloned().fold(0.0, f64::max);

    let coherence_op = product_atomic(spec, lp, lq);
    let prop = Propagator::new(&ham)?;
    let times = grid.times();
    let max_pair_coherence = prop
        .states(&psi0, &times)
        .iter()
        .map(|psi| expectation(&coherence_op, psi).norm())
        .fold(0.0, f64::max);

    let predicted_half_period = match (init.atomic, init.field) {
        (AtomicInit::Occupations(occ), FieldInit::Fock(n)) if spec.atoms() == 1 && symmetric_couplings(h) => {
            let f = match h.scheme {
                Scheme::Lambda => occ[2] as f64 - n as f64,
                Scheme::Vee => (occ[0] + n + 1) as f64,
            };
            let in_pair = occ[lp.number() - 1] + occ[lq.number() - 1] > 0;
            let rate = (transfer_prefactor(h, p) * f).abs();
            (in_pair && rate > 0.0).then(|| PI / (2.0 * rate))
        }
        _ => None,
    };
    let half_period = predicted_half_period.and_then(|_| first_peak(&times, &spectator));
    let relative_period_error = match (half_period, predicted_half_period) {
        (Some(m), Some(e)) => Some((m - e).abs() / e),
        _ => None,
    };
    Ok(TransferSummary {
        scheme: h.scheme,
        spectator_level,
        max_spectator_population,
        max_pair_coherence,
        half_period,
        predicted_half_period,
        relative_period_error,
        truncation_unsafe: trajectory.truncation_unsafe,
        trajectory,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n_bar: f64,
    pub n_max: usize,
    /// Couplings rescaled by `1/sqrt(n̄)` so that `g sqrt(n̄)` stays fixed.
    pub g31: f64,
    pub validity_margin: Option<f64>,
    /// `<a†a - S33>` with the atom in level 1.
    pub lambda_factor: f64,
    /// `<S11 + a†a + 1>` with the atom in level 3.
    pub vee_factor: f64,
    /// `| <f_V> - |<f_Λ>| | / n̄`; undefined at `n̄ = 0`.
    pub relative_difference: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    /// Least-squares slope of `ln(relative_difference)` against `ln(n̄)`.
    pub slope: Option<f64>,
}

/// Compare the Λ and V enhancement factors in coherent fields of growing mean
/// photon number. `h` supplies the reference couplings at `n̄ = 1`.
pub fn semiclassical_sweep(specs: &[SpaceSpec], h: &HamiltonianSpec, n_bars: &[f64]) -> Result<SweepTable> {
    if specs.len() != n_bars.len() {
        return Err(Error::InvalidInitialState(format!(
            "{} spaces for {} mean photon numbers",
            specs.len(),
            n_bars.len()
        )));
    }
    let mut rows = Vec::with_capacity(specs.len());
    for (&spec, &n_bar) in specs.iter().zip(n_bars) {
        let rule = n_bar + 6.0 * n_bar.sqrt();
        if (spec.n_max() as f64) < rule {
            return Err(Error::TruncationUnsafe {
                n_bar,
                n_max: spec.n_max(),
                required: required_n_max(n_bar),
                tail: poisson_tail_beyond(n_bar, spec.n_max()),
            });
        }
        let scale = 1.0 / n_bar.max(1.0).sqrt();
        let scaled = h.with_scaled_couplings(scale);
        let field = FieldInit::Coherent(re(n_bar.sqrt()));
        let a = spec.atoms();

        let lam_init = InitialState {
            atomic: AtomicInit::Occupations([a, 0, 0]),
            field,
        };
        let psi_l = prepare_initial(spec, &lam_init, &scaled)?;
        let lambda_factor = -expectation(&transfer_factor(spec, Scheme::Lambda), &psi_l).re;

        let vee_init = InitialState {
            atomic: AtomicInit::Occupations([0, 0, a]),
            field,
        };
        let psi_v = prepare_initial(spec, &vee_init, &scaled)?;
        let vee_factor = expectation(&transfer_factor(spec, Scheme::Vee), &psi_v).re;

        let validity_margin = crate::dispersive::dispersive_params(&scaled, n_bar, a)
            .ok()
            .map(|p| p.validity_margin);
        let relative_difference = (n_bar > 0.0).then(|| (vee_factor - lambda_factor.abs()).abs() / n_bar);
        rows.push(SweepRow {
            n_bar,
            n_max: spec.n_max(),
            g31: scaled.couplings.g31,
            validity_margin,
            lambda_factor,
            vee_factor,
            relative_difference,
        });
    }
    let points: Vec<(f64, f64)> = rows
        .iter()
        .filter_map(|r| match r.relative_difference {
            Some(d) if d > 0.0 && r.n_bar > 0.0 => Some((r.n_bar.ln(), d.ln())),
            _ => None,
        })
        .collect();
    let slope = (points.len() >= 2).then(|| {
        let n = points.len() as f64;
        let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
        let my = points.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
        sxy / sxx
    });
    Ok(SweepTable { rows, slope })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dispersive::dispersive_params;
    use crate::hamiltonian::interaction_hamiltonian;
    use crate::linalg::vec_max_norm;

    fn spec(a: usize, n: usize) -> SpaceSpec {
        SpaceSpec::new(a, n).unwrap()
    }

    #[test]
    fn basis_initial_state() {
        let sp = spec(1, 3);
        let h = HamiltonianSpec::lambda([0.0, 0.0, 1.0], 1.0, 0.1, 0.1);
        let psi = prepare_initial(sp, &InitialState::basis([1, 0, 0], 0), &h).unwrap();
        assert_eq!(psi.norm(), 1.0);
        assert_eq!(psi[0], re(1.0));
        assert!(prepare_initial(sp, &InitialState::basis([1, 1, 0], 0), &h).is_err());
        assert!(prepare_initial(sp, &InitialState::basis([1, 0, 0], 4), &h).is_err());
    }

    #[test]
    fn coherent_tail_oracle() {
        // direct Poisson tail for n̄ = 4 beyond 32, summed from the top
        let mut tail = 0.0;
        let mut log_fact = (1..=33).map(|k| (k as f64).ln()).sum::<f64>();
        for n in 33..200 {
            if n > 33 {
                log_fact += (n as f64).ln();
            }
            tail += (-4.0 + n as f64 * 4f64.ln() - log_fact).exp();
        }
        assert!(tail < 1e-10);
        let sp = spec(1, 32);
        let h = HamiltonianSpec::lambda([0.0, 0.0, 1.0], 1.0, 0.1, 0.1);
        let init = InitialState {
            atomic: AtomicInit::Occupations([1, 0, 0]),
            field: FieldInit::Coherent(re(2.0)),
        };
        let psi = prepare_initial(sp, &init, &h).unwrap();
        assert!((psi.norm() - 1.0).abs() < 1e-12);

        let small = spec(1, 8);
        match prepare_initial(small, &init, &h) {
            Err(Error::TruncationUnsafe { required, .. }) => assert!(required > 8 && required <= 32),
            other => panic!("expected rejection, got {other:?}"),
        }
    }

    #[test]
    fn required_cutoff_covers_rule() {
        for n_bar in [0.0, 1.0, 4.0, 16.0, 64.0] {
            let n = required_n_max(n_bar);
            assert!(n as f64 >= n_bar + 6.0 * n_bar.sqrt());
            assert!(poisson_tail_beyond(n_bar, n) <= COHERENT_TAIL_TOL);
        }
    }

    #[test]
    fn dark_initial_state_is_annihilated() {
        let sp = spec(2, 3);
        let h = HamiltonianSpec::lambda([0.0, 0.0, 1.0], 1.0, 0.2, 0.5);
        let init = InitialState {
            atomic: AtomicInit::Dark,
            field: FieldInit::Fock(2),
        };
        let psi = prepare_initial(sp, &init, &h).unwrap();
        assert!(vec_max_norm(&(interaction_hamiltonian(sp, &h).entries() * psi)) <= 1e-12);
    }

    #[test]
    fn grid_validation() {
        assert!(TimeGrid::new(0.0, 10).is_err());
        assert!(TimeGrid::new(1.0, 1).is_err());
        let g = TimeGrid::new(2.0, 5).unwrap();
        assert_eq!(g.times(), vec![0.0, 0.5, 1.0, 1.5, 2.0]);
    }

    #[test]
    fn diagonal_hamiltonian_keeps_populations() {
        let sp = spec(2, 3);
        let h = HamiltonianSpec::vee([0.0, 1.0, 1.3], 0.9, 0.0, 0.0);
        let ham = build_hamiltonian(sp, &h).unwrap();
        let psi = prepare_initial(sp, &InitialState::basis([1, 0, 1], 2), &h).unwrap();
        let rec = evolve(&ham, &psi, &TimeGrid::new(10.0, 20).unwrap(), Scheme::Vee).unwrap();
        for s in &rec.samples {
            assert!((s.populations[0] - 1.0).abs() < 1e-12);
            assert!((s.populations[2] - 1.0).abs() < 1e-12);
            assert!((s.photon_number - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn dark_state_is_stationary() {
        let sp = spec(1, 5);
        let h = HamiltonianSpec::lambda([0.0, 0.0, 1.0], 1.0, 0.3, 0.2);
        let ham = build_hamiltonian(sp, &h).unwrap();
        let init = InitialState {
            atomic: AtomicInit::Dark,
            field: FieldInit::Fock(3),
        };
        let psi = prepare_initial(sp, &init, &h).unwrap();
        let rec = evolve(&ham, &psi, &TimeGrid::new(50.0, 60).unwrap(), Scheme::Lambda).unwrap();
        let s0 = rec.samples[0];
        for s in &rec.samples {
            for k in 0..3 {
                assert!((s.populations[k] - s0.populations[k]).abs() < 1e-10);
            }
            assert!((s.photon_number - s0.photon_number).abs() < 1e-10);
        }
    }

    #[test]
    fn resonant_rabi_oscillation_of_bright_mode() {
        // two-level oracle: P3(t) = sin²(g_Λ sqrt(n) t)
        let sp = spec(1, 4);
        let (g31, g32) = (0.12, 0.05);
        let h = HamiltonianSpec::lambda([0.0, 0.0, 1.0], 1.0, g31, g32);
        let g_eff = f64::hypot(g31, g32);
        let n = 2;
        let ham = build_hamiltonian(sp, &h).unwrap();
        let init = InitialState {
            atomic: AtomicInit::Bright,
            field: FieldInit::Fock(n),
        };
        let psi = prepare_initial(sp, &init, &h).unwrap();
        let rec = evolve(&ham, &psi, &TimeGrid::new(60.0, 121).unwrap(), Scheme::Lambda).unwrap();
        for s in &rec.samples {
            let oracle = (g_eff * (n as f64).sqrt() * s.t).sin().powi(2);
            assert!(
                (s.populations[2] - oracle).abs() < 1e-10,
                "t={} {} vs {}",
                s.t,
                s.populations[2],
                oracle
            );
        }
    }

    #[test]
    fn conservation_and_time_reversal() {
        let sp = spec(2, 6);
        let h = HamiltonianSpec::vee([0.0, 1.1, 1.1], 1.0, 0.07, 0.04);
        let ham = build_hamiltonian(sp, &h).unwrap();
        let init = InitialState::basis([1, 0, 1], 2);
        let psi = prepare_initial(sp, &init, &h).unwrap();
        let grid = TimeGrid::new(40.0, 81).unwrap();
        let rec = evolve(&ham, &psi, &grid, Scheme::Vee).unwrap();
        let s0 = rec.samples[0];
        for s in &rec.samples {
            assert!((s.norm - 1.0).abs() < 1e-10);
            assert!((s.excitation - s0.excitation).abs() < 1e-10);
            assert!((s.energy - s0.energy).abs() < 1e-10);
            assert!((s.populations.iter().sum::<f64>() - 2.0).abs() < 1e-10);
        }
        let forward = Propagator::new(&ham).unwrap().states(&psi, &[grid.t_max]).remove(0);
        let back = Propagator::new(&ham.scale_real(-1.0))
            .unwrap()
            .states(&forward, &[grid.t_max])
            .remove(0);
        assert!(psi.dotc(&back).norm_sqr() >= 1.0 - 1e-9);
    }

    #[test]
    fn csv_shape() {
        let sp = spec(1, 3);
        let h = HamiltonianSpec::lambda([0.0, 0.0, 1.0], 1.0, 0.1, 0.1);
        let ham = build_hamiltonian(sp, &h).unwrap();
        let psi = prepare_initial(sp, &InitialState::basis([0, 0, 1], 1), &h).unwrap();
        let csv = evolve(&ham, &psi, &TimeGrid::new(1.0, 4).unwrap(), Scheme::Lambda)
            .unwrap()
            .to_csv();
        let lines: Vec<_> = csv.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines.len(), 5);
        assert!(csv.ends_with('\n'));
        for l in &lines[1..] {
            assert_eq!(l.split(',').count(), 8);
            let norm: f64 = l.split(',').nth(5).unwrap().parse().unwrap();
            assert!((norm - 1.0).abs() < 1e-10);
        }
        assert_eq!(format_float(1e-30), "1e-30");
        assert_eq!(format_float(0.25), "0.25");
    }

    fn lambda_dispersive(eps: f64) -> HamiltonianSpec {
        HamiltonianSpec::lambda([0.0, 0.0, 11.0], 10.0, eps, eps)
    }

    #[test]
    fn lambda_photon_assisted_transfer_matches_effective_rate() {
        // atom in level 1 with one photon: factor (S33 - a†a) = -1, so transfer does happen
        let sp = spec(1, 6);
        let eps = 0.05;
        let h = lambda_dispersive(eps);
        let p = dispersive_params(&h, 1.0, 1).unwrap();
        let predicted = PI / (2.0 * eps * eps);
        let grid = TimeGrid::new(1.5 * predicted, 600).unwrap();
        let out = transfer_experiment(sp, &h, &p, &InitialState::basis([1, 0, 0], 1), &grid).unwrap();
        assert_eq!(out.spectator_level, Level::Two);
        assert!(out.max_spectator_population > 0.9);
        assert!(out.relative_period_error.unwrap() < 0.15, "{out:?}");
    }

    #[test]
    fn transfer_experiment_needs_dispersive_margin() {
        let sp = spec(1, 4);
        let h = HamiltonianSpec::lambda([0.0, 0.0, 11.0], 10.0, 0.3, 0.3);
        let p = dispersive_params(&h, 0.0, 1).unwrap();
        let grid = TimeGrid::new(1.0, 4).unwrap();
        assert!(matches!(
            transfer_experiment(sp, &h, &p, &InitialState::basis([1, 0, 0], 0), &grid),
            Err(Error::NotDispersive(_))
        ));
    }

    #[test]
    fn sweep_endpoint_and_slope() {
        let h = HamiltonianSpec::lambda([0.0, 0.0, 11.0], 10.0, 0.05, 0.05);
        let n_bars = [0.0, 4.0, 8.0, 16.0, 32.0];
        let specs: Vec<_> = n_bars.iter().map(|&n| spec(1, required_n_max(n))).collect();
        let table = semiclassical_sweep(&specs, &h, &n_bars).unwrap();
        let first = &table.rows[0];
        assert!(first.lambda_factor.abs() < 1e-12);
        assert!(first.vee_factor >= 1.0 - 1e-12);
        assert_eq!(first.relative_difference, None);
        let slope = table.slope.unwrap();
        assert!((slope + 1.0).abs() <= 0.2, "slope {slope}");
        let g_sqrt_n: Vec<f64> = table.rows[1..].iter().map(|r| r.g31 * r.n_bar.sqrt()).collect();
        assert!(g_sqrt_n.iter().all(|v| (v - g_sqrt_n[0]).abs() < 1e-12));
        assert!(semiclassical_sweep(&[spec(1, 10)], &h, &[16.0]).is_err());
    }
}
