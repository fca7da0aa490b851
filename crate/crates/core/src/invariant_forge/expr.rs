//! Expression trees for smooth first integrals and their evaluation with
//! gradients.
//!
//! Evaluation works with *scaled jets*: a value `e^s·v` and gradient `e^s·g`
//! carried as `(s, v, g)`, so that `exp(−1/Q²)` factors keep an exact
//! exponent even when the product underflows.

use super::poly::{CompiledPoly, RatPoly};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;
use std::sync::OnceLock;

/// Arguments of `exp(−1/u²)` below this magnitude evaluate to exactly zero.
pub const FLAT_GUARD: f64 = 1e-150;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PolyLeaf {
    pub poly: RatPoly,
    #[serde(skip)]
    compiled: OnceLock<CompiledPoly>,
}

impl PolyLeaf {
    pub fn new(poly: RatPoly) -> Self {
        PolyLeaf { poly, compiled: OnceLock::new() }
    }

    fn compiled(&self) -> &CompiledPoly {
        self.compiled.get_or_init(|| CompiledPoly::new(&self.poly))
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Expr {
    Const { value: f64 },
    Poly(PolyLeaf),
    Add { terms: Vec<Expr> },
    Mul { factors: Vec<Expr> },
    Div { num: Box<Expr>, den: Box<Expr> },
    Scale { factor: f64, arg: Box<Expr> },
    /// `log |arg|`
    LnAbs { arg: Box<Expr> },
    /// `sin(2π·arg)`
    Sin2Pi { arg: Box<Expr> },
    /// `exp(−1/arg²)`, extended by zero near `arg = 0`.
    Flat { arg: Box<Expr> },
}

impl Expr {
    pub fn poly(p: RatPoly) -> Self {
        Expr::Poly(PolyLeaf::new(p))
    }
    pub fn scale(factor: f64, arg: Expr) -> Self {
        Expr::Scale { factor, arg: Box::new(arg) }
    }
    pub fn quotient(num: Expr, den: Expr) -> Self {
        Expr::Div { num: Box::new(num), den: Box::new(den) }
    }
    pub fn ln_abs(arg: Expr) -> Self {
        Expr::LnAbs { arg: Box::new(arg) }
    }
    pub fn sin_2pi(arg: Expr) -> Self {
        Expr::Sin2Pi { arg: Box::new(arg) }
    }
    pub fn flat(arg: Expr) -> Self {
        Expr::Flat { arg: Box::new(arg) }
    }
    pub fn mul(factors: Vec<Expr>) -> Self {
        Expr::Mul { factors }
    }
    pub fn add(terms: Vec<Expr>) -> Self {
        Expr::Add { terms }
    }
}

/// Scaled jet `(e^s v, e^s g)`. The zero jet has `s = −∞`.
#[derive(Clone, Debug, PartialEq)]
pub struct Jet {
    pub log_scale: f64,
    pub value: f64,
    pub grad: Vec<f64>,
}

impl Jet {
    fn zero(n: usize) -> Self {
        Jet { log_scale: f64::NEG_INFINITY, value: 0.0, grad: vec![0.0; n] }
    }

    fn plain(value: f64, grad: Vec<f64>) -> Self {
        Jet { log_scale: 0.0, value, grad }
    }

    pub fn is_zero(&self) -> bool {
        self.log_scale == f64::NEG_INFINITY || (self.value == 0.0 && self.grad.iter().all(|&g| g == 0.0))
    }

    /// Unscaled value.
    pub fn materialize(&self) -> f64 {
        if self.log_scale == f64::NEG_INFINITY {
            0.0
        } else {
            self.value * self.log_scale.exp()
        }
    }

    pub fn materialize_grad(&self) -> Vec<f64> {
        if self.log_scale == f64::NEG_INFINITY {
            return vec![0.0; self.grad.len()];
        }
        let s = self.log_scale.exp();
        self.grad.iter().map(|g| g * s).collect()
    }

    fn rescaled(&self, to: f64) -> (f64, Vec<f64>) {
        if self.log_scale == f64::NEG_INFINITY {
            return (0.0, vec![0.0; self.grad.len()]);
        }
        let f = (self.log_scale - to).exp();
        (self.value * f, self.grad.iter().map(|g| g * f).collect())
    }
}

/// Where evaluation met the singular set.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Singular {
    /// Magnitude of the offending argument.
    pub q: f64,
}

/// Result of evaluating an expression: the jet and, if any guard or pole
/// was hit, the smallest offending magnitude.
#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    pub jet: Jet,
    pub singular: Option<Singular>,
}

struct Ctx {
    singular: Option<Singular>,
}

impl Ctx {
    fn hit(&mut self, q: f64) {
        let q = q.abs();
        match self.singular {
            Some(s) if s.q <= q => {}
            _ => self.singular = Some(Singular { q }),
        }
    }
}

impl Expr {
    pub fn evaluate(&self, x: &[f64]) -> Evaluation {
        let mut ctx = Ctx { singular: None };
        let jet = self.jet(x, &mut ctx);
        Evaluation { jet, singular: ctx.singular }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.evaluate(x).jet.materialize()
    }

    fn jet(&self, x: &[f64], ctx: &mut Ctx) -> Jet {
        let n = x.len();
        match self {
            Expr::Const { value } => Jet::plain(*value, vec![0.0; n]),
            Expr::Poly(leaf) => {
                let mut g = vec![0.0; n];
                let v = leaf.compiled().eval_grad(x, &mut g);
                Jet::plain(v, g)
            }
            Expr::Add { terms } => {
                let jets: Vec<Jet> = terms.iter().map(|t| t.jet(x, ctx)).collect();
                let s = jets.iter().map(|j| j.log_scale).fold(f64::NEG_INFINITY, f64::max);
                if s == f64::NEG_INFINITY {
                    return Jet::zero(n);
                }
                let mut v = 0.0;
                let mut g = vec![0.0; n];
                for j in &jets {
                    let (jv, jg) = j.rescaled(s);
                    v += jv;
                    g.iter_mut().zip(jg).for_each(|(a, b)| *a += b);
                }
                Jet { log_scale: s, value: v, grad: g }
            }
            Expr::Mul { factors } => {
                let mut acc = Jet::plain(1.0, vec![0.0; n]);
                for f in factors {
                    let j = f.jet(x, ctx);
                    if j.log_scale == f64::NEG_INFINITY {
                        return Jet::zero(n);
                    }
                    let grad = (0..n).map(|i| acc.value * j.grad[i] + j.value * acc.grad[i]).collect();
                    acc = Jet { log_scale: acc.log_scale + j.log_scale, value: acc.value * j.value, grad };
                }
                acc
            }
            Expr::Div { num, den } => {
                let a = num.jet(x, ctx);
                let b = den.jet(x, ctx);
                if b.log_scale == f64::NEG_INFINITY || b.value == 0.0 {
                    ctx.hit(0.0);
                    return Jet::zero(n);
                }
                if a.log_scale == f64::NEG_INFINITY {
                    return Jet::zero(n);
                }
                let v = a.value / b.value;
                let grad = (0..n).map(|i| (a.grad[i] - v * b.grad[i]) / b.value).collect();
                Jet { log_scale: a.log_scale - b.log_scale, value: v, grad }
            }
            Expr::Scale { factor, arg } => {
                let mut j = arg.jet(x, ctx);
                j.value *= factor;
                j.grad.iter_mut().for_each(|g| *g *= factor);
                j
            }
            Expr::LnAbs { arg } => {
                let j = arg.jet(x, ctx);
                if j.log_scale == f64::NEG_INFINITY || j.value == 0.0 {
                    ctx.hit(0.0);
                    return Jet::zero(n);
                }
                // log|e^s v| = s + log|v|, and the scale cancels in the gradient.
                let grad = j.grad.iter().map(|g| g / j.value).collect();
                Jet::plain(j.log_scale + j.value.abs().ln(), grad)
            }
            Expr::Sin2Pi { arg } => {
                let j = arg.jet(x, ctx);
                let u = j.materialize();
                let gu = j.materialize_grad();
                let c = TAU * (TAU * u).cos();
                Jet::plain((TAU * u).sin(), gu.into_iter().map(|g| g * c).collect())
            }
            Expr::Flat { arg } => {
                let j = arg.jet(x, ctx);
                let u = j.materialize();
                if u.abs() < FLAT_GUARD {
                    ctx.hit(u);
                    return Jet::zero(n);
                }
                let gu = j.materialize_grad();
                let c = 2.0 / (u * u * u);
                Jet { log_scale: -1.0 / (u * u), value: 1.0, grad: gu.into_iter().map(|g| g * c).collect() }
            }
        }
    }
}

/// A first integral depending on momenta only, `I(p) = expr(T p)`, where `T`
/// maps the momenta of some frame to the expression variables.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SmoothIntegral {
    pub label: String,
    pub expr: Expr,
    /// Row-major `T`.
    pub coords: Vec<Vec<f64>>,
    /// Names of the expression variables.
    pub variables: Vec<String>,
    /// Evaluation conventions attached to this integral.
    pub conventions: Vec<String>,
}

impl SmoothIntegral {
    pub fn new(label: impl Into<String>, expr: Expr, coords: &DMatrix<f64>, variables: Vec<String>) -> Self {
        let coords = (0..coords.nrows()).map(|i| (0..coords.ncols()).map(|j| coords[(i, j)]).collect()).collect();
        SmoothIntegral { label: label.into(), expr, coords, variables, conventions: Vec::new() }
    }

    pub fn with_convention(mut self, c: impl Into<String>) -> Self {
        self.conventions.push(c.into());
        self
    }

    pub fn nvars(&self) -> usize {
        self.coords.len()
    }

    pub fn coords_matrix(&self) -> DMatrix<f64> {
        let n = self.coords.len();
        let m = self.coords.first().map_or(0, |r| r.len());
        DMatrix::from_fn(n, m, |i, j| self.coords[i][j])
    }

    fn to_vars(&self, p: &[f64]) -> Vec<f64> {
        self.coords.iter().map(|row| row.iter().zip(p).map(|(a, b)| a * b).sum()).collect()
    }

    /// Evaluate at momenta `p`; the gradient is with respect to `p`.
    pub fn evaluate(&self, p: &[f64]) -> Evaluation {
        let y = self.to_vars(p);
        let mut e = self.expr.evaluate(&y);
        let m = p.len();
        let mut g = vec![0.0; m];
        for (i, row) in self.coords.iter().enumerate() {
            for j in 0..m {
                g[j] += row[j] * e.jet.grad[i];
            }
        }
        e.jet.grad = g;
        e
    }

    pub fn value(&self, p: &[f64]) -> f64 {
        self.evaluate(p).jet.materialize()
    }

    /// Re-express for momenta `p_new` with `p_old = M p_new`.
    pub fn compose(&self, m: &DMatrix<f64>) -> SmoothIntegral {
        let t = self.coords_matrix() * m;
        let mut t = t;
        for x in t.iter_mut() {
            let r = x.round();
            if (*x - r).abs() < 1e-12 {
                *x = r;
            }
        }
        let mut out = self.clone();
        out.coords = (0..t.nrows()).map(|i| (0..t.ncols()).map(|j| t[(i, j)]).collect()).collect();
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::invariant_forge::poly::momentum_names;

    fn p(s: &str) -> Expr {
        Expr::poly(RatPoly::parse(s, momentum_names(2)).unwrap())
    }

    fn fd_grad(e: &Expr, x: &[f64]) -> Vec<f64> {
        (0..x.len())
            .map(|i| {
                let h = 1e-6;
                let mut a = x.to_vec();
                let mut b = x.to_vec();
                a[i] += h;
                b[i] -= h;
                (e.value(&a) - e.value(&b)) / (2.0 * h)
            })
            .collect()
    }

    #[test]
    fn gradients_match_finite_differences() {
        let e = Expr::mul(vec![
            Expr::flat(p("p1*p2")),
            Expr::sin_2pi(Expr::scale(0.7, Expr::ln_abs(p("p1")))),
        ]);
        let x = [0.9, -1.3];
        let ev = e.evaluate(&x);
        let g = ev.jet.materialize_grad();
        for (a, b) in g.iter().zip(fd_grad(&e, &x)) {
            assert!((a - b).abs() < 1e-7, "{a} vs {b}");
        }
        assert!(ev.singular.is_none());
        let d = Expr::quotient(p("p2^2"), p("p1"));
        let g = d.evaluate(&x).jet.materialize_grad();
        for (a, b) in g.iter().zip(fd_grad(&d, &x)) {
            assert!((a - b).abs() < 1e-7);
        }
    }

    #[test]
    fn flat_guard_and_underflow() {
        let e = Expr::flat(p("p1"));
        let ev = e.evaluate(&[0.0, 1.0]);
        assert_eq!(ev.jet.materialize(), 0.0);
        assert!(ev.singular.is_some());
        // exp(−1/0.01²) underflows but the scaled jet keeps its direction.
        let ev = e.evaluate(&[0.01, 1.0]);
        assert_eq!(ev.jet.materialize(), 0.0);
        assert_eq!(ev.jet.log_scale, -1.0 / (0.01f64 * 0.01));
        assert!(ev.jet.grad[0] > 0.0);
    }

    #[test]
    fn json_round_trip() {
        let e = Expr::mul(vec![Expr::flat(p("p1*p2")), Expr::sin_2pi(Expr::ln_abs(p("p1")))]);
        let s = serde_json::to_string(&e).unwrap();
        let back: Expr = serde_json::from_str(&s).unwrap();
        assert_eq!(back.value(&[0.8, 0.6]), e.value(&[0.8, 0.6]));
    }
}
