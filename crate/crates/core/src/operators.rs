//! Collective atomic operators `S_ij = b_i† b_j`, truncated field ladder
//! operators, photon-dressed transitions `X_ij = a S_ij`, and numerical checks
//! of the identities they satisfy.

use std::fmt;
use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{index_map, AtomicBasisState, SpaceSpec};
use crate::linalg::{frobenius_inner, max_norm, re, CMatrix, C64, ONE, ZERO};

/// Tolerance for identities that are finite sums of products of square roots.
pub const EXACT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Level {
    One,
    Two,
    Three,
}

impl Level {
    pub const ALL: [Level; 3] = [Level::One, Level::Two, Level::Three];

    pub fn number(self) -> usize {
        match self {
            Level::One => 1,
            Level::Two => 2,
            Level::Three => 3,
        }
    }

    pub fn from_number(n: usize) -> Option<Level> {
        match n {
            1 => Some(Level::One),
            2 => Some(Level::Two),
            3 => Some(Level::Three),
            _ => None,
        }
    }

    fn slot(self) -> usize {
        self.number() - 1
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.number())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SpaceKind {
    Atomic,
    Field,
    Product,
}

/// Dense complex operator tagged with the space it acts on.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    kind: SpaceKind,
    spec: SpaceSpec,
    entries: CMatrix,
}

fn dim_of(kind: SpaceKind, spec: &SpaceSpec) -> usize {
    match kind {
        SpaceKind::Atomic => spec.atomic_dim(),
        SpaceKind::Field => spec.field_dim(),
        SpaceKind::Product => spec.product_dim(),
    }
}

impl OperatorMatrix {
    pub fn new(kind: SpaceKind, spec: SpaceSpec, entries: CMatrix) -> Result<Self> {
        let d = dim_of(kind, &spec);
        if entries.nrows() != d || entries.ncols() != d {
            return Err(Error::SpaceMismatch(format!(
                "{kind:?} space needs {d}x{d}, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        Ok(Self { kind, spec, entries })
    }

    pub fn identity(kind: SpaceKind, spec: SpaceSpec) -> Self {
        let d = dim_of(kind, &spec);
        Self {
            kind,
            spec,
            entries: CMatrix::identity(d, d),
        }
    }

    pub fn zeros(kind: SpaceKind, spec: SpaceSpec) -> Self {
        let d = dim_of(kind, &spec);
        Self {
            kind,
            spec,
            entries: CMatrix::zeros(d, d),
        }
    }

    pub fn kind(&self) -> SpaceKind {
        self.kind
    }

    pub fn spec(&self) -> SpaceSpec {
        self.spec
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    pub fn into_entries(self) -> CMatrix {
        self.entries
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn adjoint(&self) -> Self {
        self.with_entries(self.entries.adjoint())
    }

    pub fn scale(&self, s: C64) -> Self {
        self.with_entries(&self.entries * s)
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.with_entries(self.entries.scale(s))
    }

    /// Same space tag, new entries. Panics on a dimension change.
    pub fn with_entries(&self, entries: CMatrix) -> Self {
        assert_eq!(entries.shape(), self.entries.shape(), "operator dimension changed");
        Self {
            kind: self.kind,
            spec: self.spec,
            entries,
        }
    }

    pub fn max_norm(&self) -> f64 {
        max_norm(&self.entries)
    }

    pub fn hermiticity_defect(&self) -> f64 {
        max_norm(&(&self.entries - self.entries.adjoint()))
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_defect() <= tol
    }

    pub fn trace(&self) -> C64 {
        self.entries.trace()
    }

    /// Frobenius inner product `tr(self† other)`.
    pub fn inner(&self, other: &OperatorMatrix) -> C64 {
        frobenius_inner(&self.entries, &other.entries)
    }

    fn same_space(&self, other: &OperatorMatrix) -> bool {
        self.kind == other.kind && self.spec == other.spec
    }

    fn check_same_space(&self, other: &OperatorMatrix) -> Result<()> {
        if self.same_space(other) {
            Ok(())
        } else {
            Err(Error::SpaceMismatch(format!(
                "{:?}{:?} vs {:?}{:?}",
                self.kind, self.spec, other.kind, other.spec
            )))
        }
    }
}

macro_rules! binop {
    ($tr:ident, $method:ident, $op:tt) => {
        impl $tr<&OperatorMatrix> for &OperatorMatrix {
            type Output = OperatorMatrix;
            fn $method(self, rhs: &OperatorMatrix) -> OperatorMatrix {
                assert!(self.same_space(rhs), "operator space mismatch");
                self.with_entries(&self.entries $op &rhs.entries)
            }
        }
    };
}

binop!(Add, add, +);
binop!(Sub, sub, -);
binop!(Mul, mul, *);

/// Collective transition `S_ij` on the symmetric atomic space.
pub fn atomic_operator(spec: SpaceSpec, i: Level, j: Level) -> OperatorMatrix {
    let basis = index_map(spec);
    let states = basis.atomic_states();
    let d = states.len();
    let mut m = CMatrix::zeros(d, d);
    for (col, s) in states.iter().enumerate() {
        let occ = s.0;
        if i == j {
            m[(col, col)] = re(occ[i.slot()] as f64);
        } else if occ[j.slot()] > 0 {
            let mut t = occ;
            t[j.slot()] -= 1;
            t[i.slot()] += 1;
            let row = basis
                .atomic_index(&AtomicBasisState(t))
                .expect("transition stays in the symmetric basis");
            m[(row, col)] = re((((occ[i.slot()] + 1) * occ[j.slot()]) as f64).sqrt());
        }
    }
    OperatorMatrix {
        kind: SpaceKind::Atomic,
        spec,
        entries: m,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldOp {
    Annihilate,
    Create,
    Number,
}

/// Truncated ladder operators on photon numbers `0..=n_max`.
pub fn field_operator(spec: SpaceSpec, kind: FieldOp) -> OperatorMatrix {
    let d = spec.field_dim();
    let mut a = CMatrix::zeros(d, d);
    for n in 1..d {
        a[(n - 1, n)] = re((n as f64).sqrt());
    }
    let entries = match kind {
        FieldOp::Annihilate => a,
        FieldOp::Create => a.adjoint(),
        FieldOp::Number => CMatrix::from_diagonal(&nalgebra::DVector::from_fn(d, |n, _| re(n as f64))),
    };
    OperatorMatrix {
        kind: SpaceKind::Field,
        spec,
        entries,
    }
}

/// Embed an atomic or field operator in the product space.
pub fn lift(spec: SpaceSpec, op: &OperatorMatrix) -> Result<OperatorMatrix> {
    if op.spec != spec {
        return Err(Error::SpaceMismatch(format!(
            "operator built for {:?}, lifting into {:?}",
            op.spec, spec
        )));
    }
    let entries = match op.kind {
        SpaceKind::Atomic => op
            .entries
            .kronecker(&CMatrix::identity(spec.field_dim(), spec.field_dim())),
        SpaceKind::Field => CMatrix::identity(spec.atomic_dim(), spec.atomic_dim()).kronecker(&op.entries),
        SpaceKind::Product => {
            return Err(Error::SpaceMismatch(
                "operator already acts on the product space".into(),
            ))
        }
    };
    Ok(OperatorMatrix {
        kind: SpaceKind::Product,
        spec,
        entries,
    })
}

/// Lifted `S_ij`.
pub fn product_atomic(spec: SpaceSpec, i: Level, j: Level) -> OperatorMatrix {
    lift(spec, &atomic_operator(spec, i, j)).expect("spec matches by construction")
}

/// Lifted field operator.
pub fn product_field(spec: SpaceSpec, kind: FieldOp) -> OperatorMatrix {
    lift(spec, &field_operator(spec, kind)).expect("spec matches by construction")
}

/// `X_ij = a S_ij` for `(i,j)` in {(3,1), (2,1), (3,2)}; the transposed pairs
/// give `X_ji†`.
pub fn deformed_operator(spec: SpaceSpec, i: Level, j: Level) -> Result<OperatorMatrix> {
    use Level::*;
    let lowering = matches!((i, j), (Three, One) | (Two, One) | (Three, Two));
    let raising = matches!((i, j), (One, Three) | (One, Two) | (Two, Three));
    if lowering {
        let a = product_field(spec, FieldOp::Annihilate);
        Ok(&a * &product_atomic(spec, i, j))
    } else if raising {
        Ok(deformed_operator(spec, j, i)?.adjoint())
    } else {
        Err(Error::UnsupportedPair(i.number(), j.number()))
    }
}

pub fn commutator(m: &OperatorMatrix, n: &OperatorMatrix) -> Result<OperatorMatrix> {
    m.check_same_space(n)?;
    Ok(m.with_entries(&m.entries * &n.entries - &n.entries * &m.entries))
}

/// Orthogonal projector onto product states with photon number `<= n_max - guard`.
pub fn guarded_projector(spec: SpaceSpec, guard: usize) -> Result<OperatorMatrix> {
    if guard > spec.n_max() {
        return Err(Error::InvalidGuard {
            guard,
            n_max: spec.n_max(),
        });
    }
    let basis = index_map(spec);
    let limit = spec.n_max() - guard;
    let diag = nalgebra::DVector::from_fn(spec.product_dim(), |flat, _| {
        if basis.decode(flat).fock_n <= limit {
            ONE
        } else {
            ZERO
        }
    });
    Ok(OperatorMatrix {
        kind: SpaceKind::Product,
        spec,
        entries: CMatrix::from_diagonal(&diag),
    })
}

/// Max-norm of the action of a product-space operator on states with photon
/// number `<= n_max - guard`.
pub fn guarded_residual(op: &OperatorMatrix, guard: usize) -> f64 {
    let spec = op.spec;
    let nf = spec.field_dim();
    let limit = spec.n_max().saturating_sub(guard);
    let m = &op.entries;
    let mut worst = 0.0_f64;
    for c in 0..m.ncols() {
        if c % nf <= limit {
            for r in 0..m.nrows() {
                worst = worst.max(m[(r, c)].norm());
            }
        }
    }
    worst
}

/// `(S_33 - a†a) S_21`: the commutator `[X_31, X_23]`.
pub fn lambda_second_order(spec: SpaceSpec) -> OperatorMatrix {
    let n = product_field(spec, FieldOp::Number);
    let s33 = product_atomic(spec, Level::Three, Level::Three);
    &(&s33 - &n) * &product_atomic(spec, Level::Two, Level::One)
}

/// `(S_11 + a†a + 1) S_32`: the commutator `[X_31, X_12]`.
pub fn vee_second_order(spec: SpaceSpec) -> OperatorMatrix {
    let n = product_field(spec, FieldOp::Number);
    let s11 = product_atomic(spec, Level::One, Level::One);
    let id = OperatorMatrix::identity(SpaceKind::Product, spec);
    &(&(&s11 + &n) + &id) * &product_atomic(spec, Level::Three, Level::Two)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AlgebraMode {
    U3,
    SecondOrder,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub name: String,
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub guard: Option<usize>,
}

impl IdentityReport {
    pub fn new(name: impl Into<String>, residual: f64, tolerance: f64, guard: Option<usize>) -> Self {
        Self {
            name: name.into(),
            residual,
            tolerance,
            pass: residual <= tolerance,
            guard,
        }
    }
}

/// Numerical check of the u(3) relations (atomic space, exact) or of the
/// second-order deformed-operator identities (product space, guarded).
///
/// A residual above tolerance produces a failing report rather than an error.
/// `guard = 0` is accepted in second-order mode so the truncation artifact can
/// be exhibited.
pub fn verify_algebra(spec: SpaceSpec, mode: AlgebraMode, guard: usize) -> Result<Vec<IdentityReport>> {
    match mode {
        AlgebraMode::U3 => Ok(verify_u3(spec)),
        AlgebraMode::SecondOrder => {
            if guard > spec.n_max() {
                return Err(Error::InvalidGuard {
                    guard,
                    n_max: spec.n_max(),
                });
            }
            Ok(verify_second_order(spec, guard))
        }
    }
}

fn verify_u3(spec: SpaceSpec) -> Vec<IdentityReport> {
    let s: Vec<Vec<OperatorMatrix>> = Level::ALL
        .iter()
        .map(|&i| Level::ALL.iter().map(|&j| atomic_operator(spec, i, j)).collect())
        .collect();
    let zero = OperatorMatrix::zeros(SpaceKind::Atomic, spec);
    let mut reports = Vec::with_capacity(81);
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                for l in 0..3 {
                    let lhs = commutator(&s[i][j], &s[k][l]).expect("same space");
                    let mut rhs = zero.clone();
                    if j == k {
                        rhs = &rhs + &s[i][l];
                    }
                    if i == l {
                        rhs = &rhs - &s[k][j];
                    }
                    let name = format!("[S{}{},S{}{}]", i + 1, j + 1, k + 1, l + 1);
                    reports.push(IdentityReport::new(name, (&lhs - &rhs).max_norm(), EXACT_TOL, None));
                }
            }
        }
    }
    reports
}

fn verify_second_order(spec: SpaceSpec, guard: usize) -> Vec<IdentityReport> {
    use Level::*;
    let x = |i, j| deformed_operator(spec, i, j).expect("supported pair");
    let s = |i, j| product_atomic(spec, i, j);
    let n = product_field(spec, FieldOp::Number);
    let id = OperatorMatrix::identity(SpaceKind::Product, spec);

    let x31 = x(Three, One);
    let x23 = x(Two, Three);
    let x12 = x(One, Two);
    let s21 = s(Two, One);
    let s33 = s(Three, Three);

    let cases = [
        ("X23*X31 = a†a(S33+1)S21", &x23 * &x31, &(&n * &(&s33 + &id)) * &s21),
        ("X31*X23 = (a†a+1)S33*S21", &x31 * &x23, &(&(&n + &id) * &s33) * &s21),
        (
            "[X31,X23] = (S33-a†a)S21",
            commutator(&x31, &x23).expect("same space"),
            lambda_second_order(spec),
        ),
        (
            "[X31,X12] = (S11+a†a+1)S32",
            commutator(&x31, &x12).expect("same space"),
            vee_second_order(spec),
        ),
    ];
    cases
        .into_iter()
        .map(|(name, lhs, rhs)| {
            IdentityReport::new(name, guarded_residual(&(&lhs - &rhs), guard), EXACT_TOL, Some(guard))
        })
        .collect()
}
