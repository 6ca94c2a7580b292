//! Dispersive regime: detunings, small parameters, the small unitaries
//! `U(ε) = exp[ε (X - X†)]`, the numerically conjugated Hamiltonian and the
//! analytic effective transfer operators it should reduce to.
//!
//! Only the off-diagonal transfer between the two degenerate levels is
//! compared. Diagonal Stark-shift terms are never reconstructed.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::{build_hamiltonian, HamiltonianSpec, Scheme};
use crate::hilbert::{index_map, SpaceSpec};
use crate::linalg::expm_anti_hermitian;
use crate::operators::{deformed_operator, product_atomic, product_field, FieldOp, Level, OperatorMatrix, SpaceKind};

pub const DEFAULT_GUARD: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairParams {
    pub upper: Level,
    pub lower: Level,
    pub coupling: f64,
    /// `Δ = E_upper - E_lower - ω`.
    pub detuning: f64,
    /// `ε = g / Δ`.
    pub epsilon: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DispersiveParams {
    pub scheme: Scheme,
    pub pairs: [PairParams; 2],
    /// `min |Δ| / (A g sqrt(n̄ + 1))` over the coupled pairs.
    pub validity_margin: f64,
}

impl DispersiveParams {
    pub fn pair(&self, upper: Level, lower: Level) -> Option<&PairParams> {
        self.pairs.iter().find(|p| p.upper == upper && p.lower == lower)
    }

    pub fn max_abs_epsilon(&self) -> f64 {
        self.pairs.iter().fold(0.0, |acc, p| acc.max(p.epsilon.abs()))
    }

    /// Couplings (and so every ε) scaled at fixed detunings.
    pub fn with_scaled_couplings(&self, factor: f64) -> Self {
        let pairs = self.pairs.map(|p| PairParams {
            coupling: p.coupling * factor,
            epsilon: p.epsilon * factor,
            ..p
        });
        Self {
            scheme: self.scheme,
            pairs,
            validity_margin: self.validity_margin / factor,
        }
    }

    /// Margin above 1 and every `|ε| < 1`.
    pub fn is_dispersive(&self) -> bool {
        self.validity_margin > 1.0 && self.max_abs_epsilon() < 1.0
    }
}

pub fn dispersive_params(h: &HamiltonianSpec, n_bar: f64, atoms: usize) -> Result<DispersiveParams> {
    h.validate()?;
    if !(n_bar.is_finite() && n_bar >= 0.0) {
        return Err(Error::InvalidHamiltonian(format!(
            "mean photon number must be >= 0, got {n_bar}"
        )));
    }
    let mut margin = f64::INFINITY;
    let pairs = h.coupled_pairs().map(|(u, l, g)| {
        let detuning = h.energy(u) - h.energy(l) - h.omega;
        (u, l, g, detuning)
    });
    let mut out = Vec::with_capacity(2);
    for (upper, lower, coupling, detuning) in pairs {
        if detuning == 0.0 {
            return Err(Error::ZeroDetuning(upper.number(), lower.number()));
        }
        let scale = atoms as f64 * coupling * (n_bar + 1.0).sqrt();
        margin = margin.min(detuning.abs() / scale);
        out.push(PairParams {
            upper,
            lower,
            coupling,
            detuning,
            epsilon: coupling / detuning,
        });
    }
    Ok(DispersiveParams {
        scheme: h.scheme,
        pairs: [out[0], out[1]],
        validity_margin: margin,
    })
}

/// `exp[ε (X_ul - X_ul†)]` on the product space.
pub fn small_rotation(spec: SpaceSpec, upper: Level, lower: Level, eps: f64) -> Result<OperatorMatrix> {
    let x = deformed_operator(spec, upper, lower)?;
    let gen = (&x - &x.adjoint()).scale_real(eps);
    Ok(gen.with_entries(expm_anti_hermitian(gen.entries())))
}

/// Transitions in the order their unitaries act on `H` (innermost first):
/// Λ is `U(ε32) U(ε31) H U†(ε31) U†(ε32)`, V is `U(ε31) U(ε21) H U†(ε21) U†(ε31)`.
fn conjugation_order(scheme: Scheme) -> [(Level, Level); 2] {
    use Level::*;
    match scheme {
        Scheme::Lambda => [(Three, One), (Three, Two)],
        Scheme::Vee => [(Two, One), (Three, One)],
    }
}

fn check_scheme(h: &HamiltonianSpec, p: &DispersiveParams) -> Result<()> {
    if h.scheme != p.scheme {
        return Err(Error::InvalidHamiltonian(format!(
            "dispersive parameters for {} used with a {} Hamiltonian",
            p.scheme, h.scheme
        )));
    }
    Ok(())
}

pub fn effective_transform(spec: SpaceSpec, h: &HamiltonianSpec, p: &DispersiveParams) -> Result<OperatorMatrix> {
    check_scheme(h, p)?;
    let mut ham = build_hamiltonian(spec, h)?;
    for (u, l) in conjugation_order(h.scheme) {
        let eps = p
            .pair(u, l)
            .ok_or(Error::UnsupportedPair(u.number(), l.number()))?
            .epsilon;
        let unitary = small_rotation(spec, u, l, eps)?;
        ham = &(&unitary * &ham) * &unitary.adjoint();
    }
    Ok(ham)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveModel {
    pub scheme: Scheme,
    pub transfer_operator: OperatorMatrix,
    pub prefactor: f64,
}

/// Λ: `ε31 g32 (S12 + S21)(S33 - a†a)`. V: `ε21 g31 (S32 + S23)(S11 + a†a + 1)`.
pub fn analytic_effective(spec: SpaceSpec, h: &HamiltonianSpec, p: &DispersiveParams) -> Result<EffectiveModel> {
    check_scheme(h, p)?;
    use Level::*;
    let (prefactor, hop, factor) = match h.scheme {
        Scheme::Lambda => {
            let eps31 = p.pair(Three, One).expect("Λ pair").epsilon;
            (eps31 * h.couplings.g32, (One, Two), lambda_factor(spec))
        }
        Scheme::Vee => {
            let eps21 = p.pair(Two, One).expect("V pair").epsilon;
            (eps21 * h.couplings.g31, (Three, Two), vee_factor(spec))
        }
    };
    let s = product_atomic(spec, hop.0, hop.1);
    let hop = &s + &s.adjoint();
    Ok(EffectiveModel {
        scheme: h.scheme,
        transfer_operator: (&hop * &factor).scale_real(prefactor),
        prefactor,
    })
}

/// `S33 - a†a`.
pub fn lambda_factor(spec: SpaceSpec) -> OperatorMatrix {
    &product_atomic(spec, Level::Three, Level::Three) - &product_field(spec, FieldOp::Number)
}

/// `S11 + a†a + 1`.
pub fn vee_factor(spec: SpaceSpec) -> OperatorMatrix {
    let id = OperatorMatrix::identity(SpaceKind::Product, spec);
    &(&product_atomic(spec, Level::One, Level::One) + &product_field(spec, FieldOp::Number)) + &id
}

/// Enhancement factor of the scheme's effective transfer.
pub fn transfer_factor(spec: SpaceSpec, scheme: Scheme) -> OperatorMatrix {
    match scheme {
        Scheme::Lambda => lambda_factor(spec),
        Scheme::Vee => vee_factor(spec),
    }
}

/// Max-norm difference of two operators restricted to the degenerate-transfer
/// block: elements between states that differ by one atom moved inside the
/// degenerate pair, at equal photon number, both photon numbers `<= n_max - guard`.
pub fn transfer_block_difference(a: &OperatorMatrix, b: &OperatorMatrix, scheme: Scheme, guard: usize) -> f64 {
    let spec = a.spec();
    let basis = index_map(spec);
    let limit = spec.n_max().saturating_sub(guard);
    let (p, q) = scheme.degenerate_pair();
    let dim = spec.product_dim();
    let mut worst = 0.0_f64;
    for c in 0..dim {
        let (sc, nc) = basis.state_of(c);
        if nc > limit {
            continue;
        }
        for r in 0..dim {
            let (sr, nr) = basis.state_of(r);
            if nr != nc {
                continue;
            }
            let dp = sr.occupation(p.number()) as i64 - sc.occupation(p.number()) as i64;
            let dq = sr.occupation(q.number()) as i64 - sc.occupation(q.number()) as i64;
            if dp.abs() == 1 && dp == -dq {
                worst = worst.max((a.entries()[(r, c)] - b.entries()[(r, c)]).norm());
            }
        }
    }
    worst
}

/// Transfer-block residual between numeric conjugation and the analytic form.
pub fn transfer_residual(spec: SpaceSpec, h: &HamiltonianSpec, p: &DispersiveParams, guard: usize) -> Result<f64> {
    let numeric = effective_transform(spec, h, p)?;
    let analytic = analytic_effective(spec, h, p)?;
    Ok(transfer_block_difference(
        &numeric,
        &analytic.transfer_operator,
        h.scheme,
        guard,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderProbe {
    pub epsilon: f64,
    pub residual: f64,
    pub residual_half: f64,
    /// `residual / residual_half`; `None` when both vanish.
    pub reduction: Option<f64>,
    /// `log2` of the reduction.
    pub order: Option<f64>,
}

/// Residual at the given couplings and with every ε halved (couplings halved at
/// fixed detunings), plus the observed convergence order.
pub fn residual_and_order(
    spec: SpaceSpec,
    h: &HamiltonianSpec,
    p: &DispersiveParams,
    guard: usize,
) -> Result<OrderProbe> {
    check_scheme(h, p)?;
    if p.max_abs_epsilon() > 0.1 {
        return Err(Error::NotDispersive(format!(
            "|ε| = {} exceeds 0.1",
            p.max_abs_epsilon()
        )));
    }
    if guard < 2 || guard > spec.n_max() {
        return Err(Error::InvalidGuard {
            guard,
            n_max: spec.n_max(),
        });
    }
    let residual = transfer_residual(spec, h, p, guard)?;
    let half = h.with_scaled_couplings(0.5);
    let p_half = p.with_scaled_couplings(0.5);
    let residual_half = transfer_residual(spec, &half, &p_half, guard)?;
    let (reduction, order) = if residual_half > 0.0 {
        let ratio = residual / residual_half;
        (Some(ratio), Some(ratio.log2()))
    } else {
        (None, None)
    };
    Ok(OrderProbe {
        epsilon: p.max_abs_epsilon(),
        residual,
        residual_half,
        reduction,
        order,
    })
}
