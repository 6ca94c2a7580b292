//! Free and interaction Hamiltonians of the Λ and V schemes, the dark/bright
//! mode rotation, the classical-field substitution and the conserved
//! excitation number.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{index_map, AtomicBasisState, SpaceSpec};
use crate::linalg::{expm_anti_hermitian, re, unitarity_defect, CVector, C64};
use crate::operators::{
    atomic_operator, deformed_operator, product_atomic, product_field, FieldOp, Level, OperatorMatrix, SpaceKind,
};

/// Tolerance on couplings that should vanish after the mode rotation.
pub const ROTATION_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Lambda,
    Vee,
}

impl Scheme {
    /// The two driven transitions `(upper, lower)`.
    pub fn transitions(self) -> [(Level, Level); 2] {
        use Level::*;
        match self {
            Scheme::Lambda => [(Three, One), (Three, Two)],
            Scheme::Vee => [(Three, One), (Two, One)],
        }
    }

    /// The near-degenerate level pair sharing the common intermediate level.
    pub fn degenerate_pair(self) -> (Level, Level) {
        match self {
            Scheme::Lambda => (Level::One, Level::Two),
            Scheme::Vee => (Level::Two, Level::Three),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Lambda => "lambda",
            Scheme::Vee => "vee",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "lambda" | "λ" => Ok(Scheme::Lambda),
            "v" | "vee" => Ok(Scheme::Vee),
            other => Err(format!("unknown scheme {other:?} (expected \"lambda\" or \"v\")")),
        }
    }
}

/// Real dipole couplings. Only the scheme's two transitions are used.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Couplings {
    pub g31: f64,
    pub g32: f64,
    pub g21: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HamiltonianSpec {
    pub scheme: Scheme,
    /// Level energies `(E1, E2, E3)`, ascending.
    pub energies: [f64; 3],
    pub omega: f64,
    pub couplings: Couplings,
}

impl HamiltonianSpec {
    pub fn lambda(energies: [f64; 3], omega: f64, g31: f64, g32: f64) -> Self {
        Self {
            scheme: Scheme::Lambda,
            energies,
            omega,
            couplings: Couplings { g31, g32, g21: 0.0 },
        }
    }

    pub fn vee(energies: [f64; 3], omega: f64, g31: f64, g21: f64) -> Self {
        Self {
            scheme: Scheme::Vee,
            energies,
            omega,
            couplings: Couplings { g31, g32: 0.0, g21 },
        }
    }

    pub fn coupling(&self, upper: Level, lower: Level) -> f64 {
        use Level::*;
        match (upper, lower) {
            (Three, One) | (One, Three) => self.couplings.g31,
            (Three, Two) | (Two, Three) => self.couplings.g32,
            (Two, One) | (One, Two) => self.couplings.g21,
            _ => 0.0,
        }
    }

    /// `(upper, lower, g)` for the two driven transitions.
    pub fn coupled_pairs(&self) -> [(Level, Level, f64); 2] {
        self.scheme.transitions().map(|(u, l)| (u, l, self.coupling(u, l)))
    }

    pub fn energy(&self, level: Level) -> f64 {
        self.energies[level.number() - 1]
    }

    /// Whether the scheme's level pair is exactly degenerate.
    pub fn is_degenerate(&self) -> bool {
        let (a, b) = self.scheme.degenerate_pair();
        self.energy(a) == self.energy(b)
    }

    pub fn with_scaled_couplings(&self, factor: f64) -> Self {
        let c = self.couplings;
        Self {
            couplings: Couplings {
                g31: c.g31 * factor,
                g32: c.g32 * factor,
                g21: c.g21 * factor,
            },
            ..*self
        }
    }

    pub fn validate(&self) -> Result<()> {
        let [e1, e2, e3] = self.energies;
        if !(self.energies.iter().all(|e| e.is_finite()) && self.omega.is_finite()) {
            return Err(Error::InvalidHamiltonian("energies and omega must be finite".into()));
        }
        if !(e1 <= e2 && e2 <= e3) {
            return Err(Error::InvalidHamiltonian(format!(
                "level energies must satisfy E1 <= E2 <= E3, got ({e1}, {e2}, {e3})"
            )));
        }
        for (u, l, g) in self.coupled_pairs() {
            if !g.is_finite() || g < 0.0 {
                return Err(Error::InvalidHamiltonian(format!(
                    "coupling g{u}{l} must be finite and >= 0, got {g}"
                )));
            }
        }
        Ok(())
    }
}

/// `Σ E_i S_ii + ω a†a` on the product space.
pub fn free_hamiltonian(spec: SpaceSpec, h: &HamiltonianSpec) -> OperatorMatrix {
    let mut acc = product_field(spec, FieldOp::Number).scale_real(h.omega);
    for level in Level::ALL {
        acc = &acc + &product_atomic(spec, level, level).scale_real(h.energy(level));
    }
    acc
}

/// `Σ g (X + X†)` over the scheme's two transitions.
pub fn interaction_hamiltonian(spec: SpaceSpec, h: &HamiltonianSpec) -> OperatorMatrix {
    let mut acc = OperatorMatrix::zeros(SpaceKind::Product, spec);
    for (u, l, g) in h.coupled_pairs() {
        let x = deformed_operator(spec, u, l).expect("scheme transitions are supported");
        acc = &acc + &(&x + &x.adjoint()).scale_real(g);
    }
    acc
}

pub fn build_hamiltonian(spec: SpaceSpec, h: &HamiltonianSpec) -> Result<OperatorMatrix> {
    h.validate()?;
    Ok(&free_hamiltonian(spec, h) + &interaction_hamiltonian(spec, h))
}

/// `a†a + S_33` (Λ) or `a†a + S_22 + S_33` (V).
pub fn excitation_operator(spec: SpaceSpec, scheme: Scheme) -> OperatorMatrix {
    let mut acc = &product_field(spec, FieldOp::Number) + &product_atomic(spec, Level::Three, Level::Three);
    if scheme == Scheme::Vee {
        acc = &acc + &product_atomic(spec, Level::Two, Level::Two);
    }
    acc
}

/// Mixing angle and effective coupling of the bright/dark mode rotation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RotationResult {
    pub scheme: Scheme,
    /// α for Λ (`tan α = g32/g31`), β for V (`tan β = g21/g31`).
    pub angle: f64,
    pub effective_coupling: f64,
    /// Amplitudes of the decoupled single-atom superposition over `dark_levels`.
    pub dark_composition: [f64; 2],
    pub dark_levels: (Level, Level),
}

impl RotationResult {
    /// Amplitudes of the coupled superposition, orthogonal to the dark one.
    pub fn bright_composition(&self) -> [f64; 2] {
        let [x, y] = self.dark_composition;
        match self.scheme {
            Scheme::Lambda => [y, -x],
            Scheme::Vee => [-y, x],
        }
    }
}

pub fn rotation_parameters(h: &HamiltonianSpec) -> Result<RotationResult> {
    h.validate()?;
    let c = h.couplings;
    match h.scheme {
        Scheme::Lambda => {
            if c.g31 == 0.0 && c.g32 == 0.0 {
                return Err(Error::InvalidHamiltonian("rotation needs a nonzero coupling".into()));
            }
            let alpha = c.g32.atan2(c.g31);
            Ok(RotationResult {
                scheme: h.scheme,
                angle: alpha,
                effective_coupling: c.g31 * alpha.cos() + c.g32 * alpha.sin(),
                dark_composition: [-alpha.sin(), alpha.cos()],
                dark_levels: (Level::One, Level::Two),
            })
        }
        Scheme::Vee => {
            if c.g31 == 0.0 && c.g21 == 0.0 {
                return Err(Error::InvalidHamiltonian("rotation needs a nonzero coupling".into()));
            }
            let beta = c.g21.atan2(c.g31);
            Ok(RotationResult {
                scheme: h.scheme,
                angle: beta,
                effective_coupling: c.g21 * beta.sin() + c.g31 * beta.cos(),
                dark_composition: [beta.cos(), -beta.sin()],
                dark_levels: (Level::Two, Level::Three),
            })
        }
    }
}

/// Couplings read off a rotated Hamiltonian `U H U†`. After the rotation the
/// bright mode sits on level 1 (Λ) or level 3 (V) and the dark mode on level 2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RotatedCouplings {
    /// Largest photon-changing matrix element that also changes the level-2 population.
    pub dark_coupling: f64,
    /// Least-squares coefficient of `X_31 + X_13` in the photon-changing part.
    pub effective_coupling: f64,
    /// Max-norm of the photon-changing part not explained by that coefficient.
    pub bright_residual: f64,
    /// `‖[U H U†, S_22]‖`: zero when the dark level decouples entirely.
    pub dark_block_leak: f64,
}

fn rotation_generator(spec: SpaceSpec, scheme: Scheme) -> OperatorMatrix {
    let (p, q) = scheme.degenerate_pair();
    &product_atomic(spec, p, q) - &product_atomic(spec, q, p)
}

pub fn analyze_rotated(spec: SpaceSpec, rotated: &OperatorMatrix) -> RotatedCouplings {
    let basis = index_map(spec);
    let m = rotated.entries();
    let dim = spec.product_dim();
    let mut photon_changing = m.clone();
    let mut dark_coupling = 0.0_f64;
    for c in 0..dim {
        let (sc, nc) = basis.state_of(c);
        for r in 0..dim {
            let (sr, nr) = basis.state_of(r);
            if nr == nc {
                photon_changing[(r, c)] = re(0.0);
            } else if sr.occupation(2) != sc.occupation(2) {
                dark_coupling = dark_coupling.max(m[(r, c)].norm());
            }
        }
    }
    let x31 = deformed_operator(spec, Level::Three, Level::One).expect("supported");
    let bright = &x31 + &x31.adjoint();
    let v = rotated.with_entries(photon_changing);
    let g = bright.inner(&v).re / bright.inner(&bright).re;
    let bright_residual = (&v - &bright.scale_real(g)).max_norm();
    let s22 = product_atomic(spec, Level::Two, Level::Two);
    let leak = (&(rotated * &s22) - &(&s22 * rotated)).max_norm();
    RotatedCouplings {
        dark_coupling,
        effective_coupling: g,
        bright_residual,
        dark_block_leak: leak,
    }
}

/// Unitary `exp(θ (S_pq - S_qp))` on the degenerate pair that maps the bright
/// mode onto a bare level. The sign of θ is the one that removes the dark
/// mode's coupling to the field.
pub fn mode_rotation_unitary(spec: SpaceSpec, h: &HamiltonianSpec, r: &RotationResult) -> Result<OperatorMatrix> {
    let gen = rotation_generator(spec, h.scheme);
    let ham = build_hamiltonian(spec, h)?;
    let mut best: Option<(f64, OperatorMatrix)> = None;
    for theta in [r.angle, -r.angle] {
        let u = gen.with_entries(expm_anti_hermitian(gen.scale_real(theta).entries()));
        let defect = unitarity_defect(u.entries());
        if defect > 1e-10 {
            return Err(Error::Consistency(format!(
                "mode rotation is not unitary (defect {defect:e})"
            )));
        }
        let rotated = &(&u * &ham) * &u.adjoint();
        let dark = analyze_rotated(spec, &rotated).dark_coupling;
        if dark <= ROTATION_TOL {
            return Ok(u);
        }
        if best.as_ref().is_none_or(|(d, _)| dark < *d) {
            best = Some((dark, u));
        }
    }
    let (dark, _) = best.expect("two candidates tried");
    Err(Error::Consistency(format!(
        "no rotation sign decouples the dark mode (residual coupling {dark:e})"
    )))
}

/// Conjugate `H` by the mode rotation and read off the couplings.
pub fn rotated_couplings(spec: SpaceSpec, h: &HamiltonianSpec) -> Result<(RotationResult, RotatedCouplings)> {
    let r = rotation_parameters(h)?;
    let u = mode_rotation_unitary(spec, h, &r)?;
    let ham = build_hamiltonian(spec, h)?;
    let rotated = &(&u * &ham) * &u.adjoint();
    Ok((r, analyze_rotated(spec, &rotated)))
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// All atoms in the single-atom superposition `x|p> + y|q>`, field in `|n>`.
pub fn collective_mode_state(
    spec: SpaceSpec,
    levels: (Level, Level),
    amps: [f64; 2],
    fock_n: usize,
) -> Result<CVector> {
    let basis = index_map(spec);
    let a = spec.atoms();
    let mut psi = CVector::zeros(spec.product_dim());
    for k in 0..=a {
        let mut occ = [0usize; 3];
        occ[levels.0.number() - 1] = k;
        occ[levels.1.number() - 1] = a - k;
        let amp = binomial(a, k).sqrt() * amps[0].powi(k as i32) * amps[1].powi((a - k) as i32);
        psi[basis.flat(&AtomicBasisState(occ), fock_n)?] = re(amp);
    }
    Ok(psi)
}

/// Collective dark state `(c_dark†)^A |0> / sqrt(A!)` with `n` photons.
pub fn dark_state(spec: SpaceSpec, h: &HamiltonianSpec, fock_n: usize) -> Result<CVector> {
    let r = rotation_parameters(h)?;
    collective_mode_state(spec, r.dark_levels, r.dark_composition, fock_n)
}

/// Collective bright state: every atom in the coupled superposition.
pub fn bright_state(spec: SpaceSpec, h: &HamiltonianSpec, fock_n: usize) -> Result<CVector> {
    let r = rotation_parameters(h)?;
    collective_mode_state(spec, r.dark_levels, r.bright_composition(), fock_n)
}

/// Complex number substituted for the field annihilation operator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassicalFieldAmplitude(pub C64);

/// The scheme's classical transition operators `α g S_ij` (upper, lower).
pub fn classical_transitions(
    spec: SpaceSpec,
    h: &HamiltonianSpec,
    alpha: ClassicalFieldAmplitude,
) -> Vec<OperatorMatrix> {
    h.coupled_pairs()
        .iter()
        .map(|&(u, l, g)| atomic_operator(spec, u, l).scale(alpha.0 * g))
        .collect()
}

/// `Σ E_i S_ii + Σ g (α S_ul + α* S_lu)` on the atomic space.
pub fn classical_hamiltonian(
    h: &HamiltonianSpec,
    alpha: ClassicalFieldAmplitude,
    atoms: usize,
) -> Result<OperatorMatrix> {
    h.validate()?;
    if !(alpha.0.re.is_finite() && alpha.0.im.is_finite()) {
        return Err(Error::InvalidHamiltonian("classical amplitude must be finite".into()));
    }
    let spec = SpaceSpec::new(atoms, 1)?;
    let mut acc = OperatorMatrix::zeros(SpaceKind::Atomic, spec);
    for level in Level::ALL {
        acc = &acc + &atomic_operator(spec, level, level).scale_real(h.energy(level));
    }
    for t in classical_transitions(spec, h, alpha) {
        acc = &(&acc + &t) + &t.adjoint();
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{least_squares_span, vec_max_norm, CMatrix, ONE};
    use crate::operators::commutator;
    use proptest::prelude::*;

    fn spec(a: usize, n: usize) -> SpaceSpec {
        SpaceSpec::new(a, n).unwrap()
    }

    #[test]
    fn free_hamiltonian_is_diagonal() {
        let sp = spec(2, 3);
        let h = HamiltonianSpec::lambda([0.1, 0.2, 1.5], 1.1, 0.0, 0.0);
        let ham = build_hamiltonian(sp, &h).unwrap();
        let basis = index_map(sp);
        for (flat, s, n) in basis.iter() {
            let e = 0.1 * s.0[0] as f64 + 0.2 * s.0[1] as f64 + 1.5 * s.0[2] as f64 + 1.1 * n as f64;
            assert!((ham.entries()[(flat, flat)] - re(e)).norm() < 1e-14);
        }
        let off = ham.entries() - CMatrix::from_diagonal(&ham.entries().diagonal());
        assert_eq!(crate::linalg::max_norm(&off), 0.0);
    }

    #[test]
    fn lambda_matrix_element() {
        let sp = spec(1, 1);
        let h = HamiltonianSpec::lambda([0.0, 0.0, 1.0], 1.0, 0.3, 0.7);
        let ham = build_hamiltonian(sp, &h).unwrap();
        let b = index_map(sp);
        let r = b.flat(&AtomicBasisState([0, 0, 1]), 0).unwrap();
        let c = b.flat(&AtomicBasisState([1, 0, 0]), 1).unwrap();
        assert!((ham.entries()[(r, c)] - re(0.3)).norm() < 1e-15);
        assert!(ham.is_hermitian(1e-12));
    }

    #[test]
    fn excitation_eigenvalues() {
        let sp = spec(1, 3);
        let b = index_map(sp);
        let nl = excitation_operator(sp, Scheme::Lambda);
        for n in 0..=3 {
            let k = b.flat(&AtomicBasisState([0, 0, 1]), n).unwrap();
            assert_eq!(nl.entries()[(k, k)], re((n + 1) as f64));
        }
        let nv = excitation_operator(sp, Scheme::Vee);
        let k = b.flat(&AtomicBasisState([1, 0, 0]), 0).unwrap();
        assert_eq!(nv.entries()[(k, k)], re(0.0));
    }

    #[test]
    fn rotation_examples() {
        let r = rotation_parameters(&HamiltonianSpec::lambda([0.0, 0.0, 1.0], 1.0, 3.0, 4.0)).unwrap();
        assert!((r.effective_coupling - 5.0).abs() < 1e-12);

        let r = rotation_parameters(&HamiltonianSpec::lambda([0.0, 0.0, 1.0], 1.0, 0.5, 0.0)).unwrap();
        assert_eq!(r.angle, 0.0);
        assert_eq!(r.effective_coupling, 0.5);
        let psi = dark_state(spec(1, 2), &HamiltonianSpec::lambda([0.0, 0.0, 1.0], 1.0, 0.5, 0.0), 1).unwrap();
        let b = index_map(spec(1, 2));
        assert!((psi[b.flat(&AtomicBasisState([0, 1, 0]), 1).unwrap()] - ONE).norm() < 1e-15);

        let g = 0.2;
        let r = rotation_parameters(&HamiltonianSpec::vee([0.0, 1.0, 1.0], 1.0, g, g)).unwrap();
        assert!((r.angle - std::f64::consts::FRAC_PI_4).abs() < 1e-15);
        assert!((r.effective_coupling - g * 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn dark_state_lambda_symmetric() {
        let sp = spec(1, 4);
        let h = HamiltonianSpec::lambda([0.0, 0.0, 1.0], 1.0, 0.3, 0.3);
        let psi = dark_state(sp, &h, 3).unwrap();
        let b = index_map(sp);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((psi[b.flat(&AtomicBasisState([1, 0, 0]), 3).unwrap()] - re(-s)).norm() < 1e-15);
        assert!((psi[b.flat(&AtomicBasisState([0, 1, 0]), 3).unwrap()] - re(s)).norm() < 1e-15);
        let hint = interaction_hamiltonian(sp, &h);
        assert!(vec_max_norm(&(hint.entries() * &psi)) <= 1e-12);
    }

    #[test]
    fn dark_state_vee_is_annihilated() {
        for a in 1..=2 {
            let sp = spec(a, 4);
            let h = HamiltonianSpec::vee([0.0, 1.0, 1.0], 1.0, 0.25, 0.25);
            let hint = interaction_hamiltonian(sp, &h);
            for n in 0..sp.n_max() {
                let psi = dark_state(sp, &h, n).unwrap();
                assert!((psi.norm() - 1.0).abs() < 1e-14);
                assert!(vec_max_norm(&(hint.entries() * &psi)) <= 1e-12);
            }
        }
        let psi = dark_state(spec(1, 2), &HamiltonianSpec::vee([0.0, 1.0, 1.0], 1.0, 0.25, 0.25), 0).unwrap();
        let b = index_map(spec(1, 2));
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((psi[b.flat(&AtomicBasisState([0, 1, 0]), 0).unwrap()] - re(s)).norm() < 1e-15);
        assert!((psi[b.flat(&AtomicBasisState([0, 0, 1]), 0).unwrap()] - re(-s)).norm() < 1e-15);
    }

    #[test]
    fn rotation_identity_at_zero_angle() {
        let sp = spec(1, 2);
        let gen = rotation_generator(sp, Scheme::Lambda);
        let u = expm_anti_hermitian(gen.scale_real(0.0).entries());
        assert!(crate::linalg::max_norm(&(u - CMatrix::identity(sp.product_dim(), sp.product_dim()))) < 1e-15);
    }

    #[test]
    fn mode_rotation_decouples_dark_mode() {
        let sp = spec(1, 2);
        let h = HamiltonianSpec::lambda([0.0, 0.0, 1.0], 1.0, 0.4, 0.4);
        let r = rotation_parameters(&h).unwrap();
        let u = mode_rotation_unitary(sp, &h, &r).unwrap();
        assert!(unitarity_defect(u.entries()) < 1e-12);
        let rot = &(&u * &build_hamiltonian(sp, &h).unwrap()) * &u.adjoint();
        // <3, n-1| U H U† |dark = level 2, n> = 0
        let b = index_map(sp);
        for n in 1..=2 {
            let r = b.flat(&AtomicBasisState([0, 0, 1]), n - 1).unwrap();
            let c = b.flat(&AtomicBasisState([0, 1, 0]), n).unwrap();
            assert!(rot.entries()[(r, c)].norm() <= ROTATION_TOL);
        }
        let (res, rc) = rotated_couplings(sp, &h).unwrap();
        assert!((rc.effective_coupling - res.effective_coupling).abs() < 1e-10);
        assert!(rc.dark_block_leak < 1e-10);
    }

    #[test]
    fn vee_rotation_two_atoms() {
        let sp = spec(2, 3);
        let h = HamiltonianSpec::vee([0.0, 1.2, 1.2], 1.0, 0.3, 0.7);
        let (r, rc) = rotated_couplings(sp, &h).unwrap();
        assert!(rc.dark_coupling <= ROTATION_TOL);
        assert!((rc.effective_coupling - (0.3f64.hypot(0.7))).abs() < 1e-10);
        assert!((r.effective_coupling - 0.3f64.hypot(0.7)).abs() < 1e-12);
        assert!(rc.bright_residual < 1e-10);
        assert!(rc.dark_block_leak < 1e-10);
    }

    #[test]
    fn classical_second_order() {
        let sp = spec(2, 1);
        let alpha = C64::new(0.6, -0.8) * 1.7;
        let s = |i, j| atomic_operator(sp, i, j);
        use Level::*;
        let c = commutator(&s(Three, One).scale(alpha), &s(Two, Three).scale(alpha.conj())).unwrap();
        assert!((&c - &s(Two, One).scale_real(-alpha.norm_sqr())).max_norm() < 1e-12);
        let c = commutator(&s(Three, One).scale(alpha), &s(One, Two).scale(alpha.conj())).unwrap();
        assert!((&c - &s(Three, Two).scale_real(alpha.norm_sqr())).max_norm() < 1e-12);

        let h = HamiltonianSpec::lambda([0.0, 0.0, 1.0], 1.0, 0.3, 0.4);
        let hc = classical_hamiltonian(&h, ClassicalFieldAmplitude(C64::new(0.0, 0.0)), 2).unwrap();
        let diag = CMatrix::from_diagonal(&hc.entries().diagonal());
        assert_eq!(hc.entries(), &diag);
        let hc = classical_hamiltonian(&h, ClassicalFieldAmplitude(alpha), 2).unwrap();
        assert!(hc.is_hermitian(1e-12));
    }

    #[test]
    fn classical_operator_sets_close_on_su3() {
        let sp = spec(2, 1);
        let basis: Vec<CMatrix> = Level::ALL
            .iter()
            .flat_map(|&i| {
                Level::ALL
                    .iter()
                    .map(move |&j| atomic_operator(sp, i, j).into_entries())
            })
            .collect();
        let alpha = ClassicalFieldAmplitude(C64::new(0.7, 0.2));
        for h in [
            HamiltonianSpec::lambda([0.0, 0.0, 1.0], 1.0, 0.3, 0.5),
            HamiltonianSpec::vee([0.0, 1.0, 1.0], 1.0, 0.3, 0.5),
        ] {
            let mut ops = classical_transitions(sp, &h, alpha);
            let adj: Vec<_> = ops.iter().map(|o| o.adjoint()).collect();
            ops.extend(adj);
            for m in &ops {
                for n in &ops {
                    let c = commutator(m, n).unwrap();
                    let (_, residual) = least_squares_span(&basis, c.entries());
                    assert!(residual <= 1e-10);
                }
            }
        }
    }

    #[test]
    fn validation() {
        assert!(HamiltonianSpec::lambda([0.0, -1.0, 1.0], 1.0, 0.1, 0.1)
            .validate()
            .is_err());
        assert!(HamiltonianSpec::vee([0.0, 1.0, 1.0], 1.0, -0.1, 0.1)
            .validate()
            .is_err());
        assert!(HamiltonianSpec::lambda([0.0, 0.0, 1.0], 1.0, 0.1, 0.1).is_degenerate());
        assert!(!HamiltonianSpec::vee([0.0, 0.9, 1.0], 1.0, 0.1, 0.1).is_degenerate());
        assert_eq!("V".parse::<Scheme>().unwrap(), Scheme::Vee);
    }

    fn arb_spec() -> impl Strategy<Value = HamiltonianSpec> {
        (
            any::<bool>(),
            0.0..1.0f64,
            0.0..1.0f64,
            0.0..2.0f64,
            0.1..2.0f64,
            0.01..1.0f64,
            0.01..1.0f64,
        )
            .prop_map(|(lambda, e1, d1, d2, omega, ga, gb)| {
                let e = [e1, e1 + d1, e1 + d1 + d2];
                if lambda {
                    HamiltonianSpec::lambda(e, omega, ga, gb)
                } else {
                    HamiltonianSpec::vee(e, omega, ga, gb)
                }
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10))]

        #[test]
        fn hamiltonian_hermitian_and_conserves_excitations(h in arb_spec(), atoms in 1usize..=2) {
            let sp = spec(atoms, 4);
            let ham = build_hamiltonian(sp, &h).unwrap();
            prop_assert!(ham.is_hermitian(1e-12));
            let n = excitation_operator(sp, h.scheme);
            prop_assert!(commutator(&ham, &n).unwrap().max_norm() <= 1e-12);
        }

        #[test]
        fn effective_coupling_is_pythagorean(h in arb_spec()) {
            let r = rotation_parameters(&h).unwrap();
            let pair = h.coupled_pairs();
            prop_assert!((r.effective_coupling - pair[0].2.hypot(pair[1].2)).abs() <= 1e-12);
            let [x, y] = r.dark_composition;
            let [bx, by] = r.bright_composition();
            prop_assert!((x * x + y * y - 1.0).abs() < 1e-14);
            prop_assert!((x * bx + y * by).abs() < 1e-14);
        }
    }
}
