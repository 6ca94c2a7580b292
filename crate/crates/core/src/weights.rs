//! Weight components of first- and second-order transition operators and the
//! root-like diagram built from them.
//!
//! Weights are eigenvalues under commutation with two commuting population
//! inversions `h1`, `h2`. A weight `(κ1, κ2)` is drawn at `κ1·e1 + κ2·e2` with
//! `e1 = (1, 0)` and `e2 = (-1/2, √3/2)`.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};

use num_rational::Rational64;

use crate::dynamics::format_float;
use crate::error::{Error, Result};
use crate::hamiltonian::{ClassicalFieldAmplitude, Scheme};
use crate::hilbert::SpaceSpec;
use crate::linalg::{CMatrix, C64};
use crate::operators::{atomic_operator, commutator, deformed_operator, product_atomic, Level, OperatorMatrix};

/// Relative tolerance of the proportionality fit `[h, op] = κ op`.
pub const WEIGHT_TOL: f64 = 1e-10;
const MAX_DENOMINATOR: i64 = 4;

pub const E1: [f64; 2] = [1.0, 0.0];
pub const E2: [f64; 2] = [-0.5, 0.866_025_403_784_438_6];

#[derive(Debug, Clone)]
pub struct CartanChoice {
    pub scheme: Scheme,
    pub h1: OperatorMatrix,
    pub h2: OperatorMatrix,
}

fn inversions(scheme: Scheme) -> [(Level, Level); 2] {
    use Level::*;
    match scheme {
        Scheme::Lambda => [(One, Two), (Two, Three)],
        Scheme::Vee => [(Two, One), (Three, Two)],
    }
}

impl CartanChoice {
    /// Inversions acting on the atom-field product space.
    pub fn product(scheme: Scheme, spec: SpaceSpec) -> Self {
        let [h1, h2] = inversions(scheme).map(|(p, q)| &product_atomic(spec, p, p) - &product_atomic(spec, q, q));
        Self { scheme, h1, h2 }
    }

    /// Inversions acting on the atomic space alone.
    pub fn atomic(scheme: Scheme, spec: SpaceSpec) -> Self {
        let [h1, h2] = inversions(scheme).map(|(p, q)| &atomic_operator(spec, p, p) - &atomic_operator(spec, q, q));
        Self { scheme, h1, h2 }
    }
}

fn frobenius_norm(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn snap(x: f64) -> Option<Rational64> {
    (1..=MAX_DENOMINATOR).find_map(|d| {
        let num = (x * d as f64).round();
        ((x - num / d as f64).abs() <= WEIGHT_TOL).then(|| Rational64::new(num as i64, d))
    })
}

fn eigen_coefficient(h: &OperatorMatrix, op: &OperatorMatrix, op_norm: f64) -> Result<Rational64> {
    let c = commutator(h, op)?;
    let kappa: C64 = op.inner(&c) / (op_norm * op_norm);
    let residual = frobenius_norm((&c - &op.scale(kappa)).entries()) / op_norm;
    if residual > WEIGHT_TOL || kappa.im.abs() > WEIGHT_TOL {
        return Err(Error::NotWeightVector(format!(
            "commutator is not proportional to the operator (relative residual {residual:e})"
        )));
    }
    snap(kappa.re).ok_or_else(|| {
        Error::NotWeightVector(format!(
            "eigenvalue {} is not a rational with denominator <= {MAX_DENOMINATOR}",
            kappa.re
        ))
    })
}

/// `(κ1, κ2)` such that `[h_k, op] = κ_k op`.
pub fn weight_of(op: &OperatorMatrix, cartan: &CartanChoice) -> Result<[Rational64; 2]> {
    let norm = frobenius_norm(op.entries());
    if norm == 0.0 {
        return Err(Error::NotWeightVector("zero operator".into()));
    }
    Ok([
        eigen_coefficient(&cartan.h1, op, norm)?,
        eigen_coefficient(&cartan.h2, op, norm)?,
    ])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Order {
    First,
    Second,
}

impl fmt::Display for Order {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Order::First => "first",
            Order::Second => "second",
        })
    }
}

fn to_f64(r: Rational64) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector {
    pub label: String,
    pub kappa: [Rational64; 2],
    pub order: Order,
    pub coords: [f64; 2],
}

impl WeightVector {
    pub fn new(label: impl Into<String>, kappa: [Rational64; 2], order: Order) -> Self {
        let [k1, k2] = kappa.map(to_f64);
        Self {
            label: label.into(),
            kappa,
            order,
            coords: [k1 * E1[0] + k2 * E2[0], k1 * E1[1] + k2 * E2[1]],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineStyle {
    pub stroke_width: f64,
    pub dash: Option<&'static str>,
    pub color: &'static str,
}

impl LineStyle {
    pub fn default_for(order: Order) -> Self {
        match order {
            Order::First => LineStyle {
                stroke_width: 2.0,
                dash: None,
                color: "#1f3b73",
            },
            Order::Second => LineStyle {
                stroke_width: 1.5,
                dash: Some("6 4"),
                color: "#a0361c",
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DiagramMode {
    Quantum,
    Classical(ClassicalFieldAmplitude),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagramLayout {
    pub scheme: Scheme,
    pub vectors: Vec<WeightVector>,
    pub styles: BTreeMap<Order, LineStyle>,
}

impl DiagramLayout {
    pub fn style(&self, order: Order) -> LineStyle {
        self.styles
            .get(&order)
            .copied()
            .unwrap_or_else(|| LineStyle::default_for(order))
    }

    pub fn of_order(&self, order: Order) -> impl Iterator<Item = &WeightVector> {
        self.vectors.iter().filter(move |v| v.order == order)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("operator,order,kappa1,kappa2,x,y\n");
        for v in &self.vectors {
            let label = if v.label.contains([',', '"']) {
                format!("\"{}\"", v.label.replace('"', "\"\""))
            } else {
                v.label.clone()
            };
            let _ = writeln!(
                out,
                "{label},{},{},{},{},{}",
                v.order,
                v.kappa[0],
                v.kappa[1],
                format_float(v.coords[0]),
                format_float(v.coords[1])
            );
        }
        out
    }
}

/// Labelled operators of a diagram: the scheme's first-order transitions with
/// their conjugates, and the second-order commutator with its conjugate.
pub fn diagram_operators(
    scheme: Scheme,
    mode: DiagramMode,
    spec: SpaceSpec,
) -> Result<Vec<(String, Order, OperatorMatrix)>> {
    use Level::*;
    let [(u1, l1), (u2, l2)] = scheme.transitions();
    // second-order pair: [T_a, T_b†] with the common level eliminated
    let (a, b) = match scheme {
        Scheme::Lambda => ((Three, One), (Three, Two)),
        Scheme::Vee => ((Three, One), (Two, One)),
    };
    let name = |(i, j): (Level, Level)| format!("{}{}", i.number(), j.number());
    let mut ops = Vec::new();
    match mode {
        DiagramMode::Quantum => {
            for (u, l) in [(u1, l1), (u2, l2)] {
                let x = deformed_operator(spec, u, l)?;
                ops.push((format!("X{}", name((u, l))), Order::First, x.clone()));
                ops.push((format!("X{}", name((l, u))), Order::First, x.adjoint()));
            }
            let xa = deformed_operator(spec, a.0, a.1)?;
            let xb_dag = deformed_operator(spec, b.1, b.0)?;
            let c = commutator(&xa, &xb_dag)?;
            ops.push((
                format!("[X{},X{}]", name(a), name((b.1, b.0))),
                Order::Second,
                c.clone(),
            ));
            ops.push((
                format!("[X{},X{}]", name(b), name((a.1, a.0))),
                Order::Second,
                c.adjoint(),
            ));
        }
        DiagramMode::Classical(alpha) => {
            if alpha.0.norm() == 0.0 {
                return Err(Error::NotWeightVector("classical amplitude must be nonzero".into()));
            }
            let al = alpha.0;
            let s = |(i, j): (Level, Level)| atomic_operator(spec, i, j);
            for (u, l) in [(u1, l1), (u2, l2)] {
                ops.push((format!("αS{}", name((u, l))), Order::First, s((u, l)).scale(al)));
                ops.push((format!("α*S{}", name((l, u))), Order::First, s((l, u)).scale(al.conj())));
            }
            let c = commutator(&s(a).scale(al), &s((b.1, b.0)).scale(al.conj()))?;
            ops.push((
                format!("[αS{},α*S{}]", name(a), name((b.1, b.0))),
                Order::Second,
                c.clone(),
            ));
            ops.push((
                format!("[αS{},α*S{}]", name(b), name((a.1, a.0))),
                Order::Second,
                c.adjoint(),
            ));
        }
    }
    Ok(ops)
}

/// Weight diagram of the scheme. Quantum mode uses the photon-dressed
/// operators on the product space of `spec`; classical mode uses `α S_ij` on
/// its atomic space.
pub fn diagram_layout(scheme: Scheme, mode: DiagramMode, spec: SpaceSpec) -> Result<DiagramLayout> {
    let cartan = match mode {
        DiagramMode::Quantum => CartanChoice::product(scheme, spec),
        DiagramMode::Classical(_) => CartanChoice::atomic(scheme, spec),
    };
    let vectors = diagram_operators(scheme, mode, spec)?
        .into_iter()
        .map(|(label, order, op)| Ok(WeightVector::new(label, weight_of(&op, &cartan)?, order)))
        .collect::<Result<Vec<_>>>()?;
    Ok(DiagramLayout {
        scheme,
        vectors,
        styles: [Order::First, Order::Second]
            .into_iter()
            .map(|o| (o, LineStyle::default_for(o)))
            .collect(),
    })
}

/// Integer 2×2 matrix acting on `(κ1, κ2)`.
pub type KappaMap = [[i64; 2]; 2];

/// The twelve symmetries of the hexagonal weight lattice, generated by a 60°
/// rotation and the reflection about `e1`, in breadth-first order.
pub fn weyl_candidates() -> Vec<KappaMap> {
    const ID: KappaMap = [[1, 0], [0, 1]];
    const ROT: KappaMap = [[1, -1], [1, 0]];
    const FLIP: KappaMap = [[1, -1], [0, -1]];
    let mul = |a: KappaMap, b: KappaMap| -> KappaMap {
        let mut c = [[0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        c
    };
    let mut group = vec![ID];
    let mut k = 0;
    while k < group.len() {
        for g in [ROT, FLIP] {
            let next = mul(g, group[k]);
            if !group.contains(&next) {
                group.push(next);
            }
        }
        k += 1;
    }
    group
}

fn apply(m: &KappaMap, k: [Rational64; 2]) -> [Rational64; 2] {
    let r = |x: i64| Rational64::from_integer(x);
    [
        r(m[0][0]) * k[0] + r(m[0][1]) * k[1],
        r(m[1][0]) * k[0] + r(m[1][1]) * k[1],
    ]
}

fn determinant(m: &KappaMap) -> i64 {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReflectionSearch {
    pub candidates: usize,
    /// Reflections (determinant −1) carrying the first set onto the second.
    pub matches: Vec<KappaMap>,
}

/// Exhaustive search over [`weyl_candidates`] for a reflection mapping the
/// weight multiset `from` onto `to` exactly.
pub fn find_reflection(from: &[[Rational64; 2]], to: &[[Rational64; 2]]) -> ReflectionSearch {
    let mut target = to.to_vec();
    target.sort();
    let candidates = weyl_candidates();
    let matches = candidates
        .iter()
        .filter(|m| determinant(m) == -1)
        .filter(|m| {
            let mut image: Vec<_> = from.iter().map(|&k| apply(m, k)).collect();
            image.sort();
            image == target
        })
        .copied()
        .collect();
    ReflectionSearch {
        candidates: candidates.len(),
        matches,
    }
}

fn first_order_weights(layout: &DiagramLayout) -> Vec<[Rational64; 2]> {
    layout.of_order(Order::First).map(|v| v.kappa).collect()
}

/// Classical Λ and V first-order weight sets and the reflections relating them.
pub fn classical_reflection(alpha: ClassicalFieldAmplitude, atoms: usize) -> Result<ReflectionSearch> {
    let spec = SpaceSpec::new(atoms, 1)?;
    let lambda = diagram_layout(Scheme::Lambda, DiagramMode::Classical(alpha), spec)?;
    let vee = diagram_layout(Scheme::Vee, DiagramMode::Classical(alpha), spec)?;
    Ok(find_reflection(
        &first_order_weights(&lambda),
        &first_order_weights(&vee),
    ))
}

/// Max-norm distance of the classical second-order commutator from
/// `-|α|² S21` (Λ) or `+|α|² S32` (V).
pub fn classical_commutator_residual(scheme: Scheme, alpha: ClassicalFieldAmplitude, atoms: usize) -> Result<f64> {
    use Level::*;
    let spec = SpaceSpec::new(atoms, 1)?;
    let al = alpha.0;
    let s = |i, j| atomic_operator(spec, i, j);
    let n2 = al.norm_sqr();
    let (c, expected) = match scheme {
        Scheme::Lambda => (
            commutator(&s(Three, One).scale(al), &s(Two, Three).scale(al.conj()))?,
            s(Two, One).scale_real(-n2),
        ),
        Scheme::Vee => (
            commutator(&s(Three, One).scale(al), &s(One, Two).scale(al.conj()))?,
            s(Three, Two).scale_real(n2),
        ),
    };
    Ok((&c - &expected).max_norm())
}

const CANVAS: f64 = 400.0;
const RADIUS: f64 = 150.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn px(x: f64) -> String {
    format!("{x:.3}")
}

/// Deterministic SVG rendering of a weight diagram.
pub fn render_svg(layout: &DiagramLayout) -> Result<Vec<u8>> {
    if layout.vectors.is_empty() {
        return Err(Error::NotWeightVector("empty diagram layout".into()));
    }
    let extent = layout
        .vectors
        .iter()
        .map(|v| v.coords[0].hypot(v.coords[1]))
        .fold(1.0_f64, f64::max);
    let scale = RADIUS / extent;
    let c = CANVAS / 2.0;
    let to_px = |p: [f64; 2]| (c + scale * p[0], c - scale * p[1]);

    let mut svg = String::new();
    let _ = writeln!(svg, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{CANVAS}" height="{CANVAS}" viewBox="0 0 {CANVAS} {CANVAS}">"#
    );
    let _ = writeln!(svg, "<title>{} weight diagram</title>", layout.scheme);
    let _ = writeln!(svg, r##"<rect width="100%" height="100%" fill="#ffffff"/>"##);
    for (name, e) in [("e1", E1), ("e2", E2)] {
        let (x, y) = to_px(e);
        let _ = writeln!(
            svg,
            r##"<line class="basis" id="{name}" x1="{}" y1="{}" x2="{}" y2="{}" stroke="#9a9a9a" stroke-width="0.75"/>"##,
            px(c),
            px(c),
            px(x),
            px(y)
        );
    }
    for v in &layout.vectors {
        let style = layout.style(v.order);
        let (x, y) = to_px(v.coords);
        let dash = style
            .dash
            .map(|d| format!(r#" stroke-dasharray="{d}""#))
            .unwrap_or_default();
        let _ = writeln!(
            svg,
            r#"<line class="{}" x1="{}" y1="{}" x2="{}" y2="{}" stroke="{}" stroke-width="{}"{dash}/>"#,
            v.order,
            px(c),
            px(c),
            px(x),
            px(y),
            style.color,
            style.stroke_width
        );
        let norm = v.coords[0].hypot(v.coords[1]).max(1e-12);
        let (lx, ly) = (x + 14.0 * v.coords[0] / norm, y - 14.0 * v.coords[1] / norm);
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" font-family="serif" font-size="12" text-anchor="middle" dominant-baseline="middle">{}</text>"#,
            px(lx),
            px(ly),
            escape(&v.label)
        );
    }
    let _ = writeln!(svg, r##"<circle cx="{}" cy="{}" r="2" fill="#000000"/>"##, px(c), px(c));
    svg.push_str("</svg>\n");
    Ok(svg.into_bytes())
}
