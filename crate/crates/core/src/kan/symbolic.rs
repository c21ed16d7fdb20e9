//! Closed-form approximation of trained KAN networks.
//!
//! Every edge function is fitted by `c·f(a·x + b) + d` for `f` in a small
//! primitive library; `(a, b)` come from a 101×101 grid over `[-5, 5]²` and
//! `(c, d)` from the closed-form least-squares solution. Node formulas are the
//! sum of their incoming edge terms; deeper networks compose by substitution.

use std::f64::consts::PI;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::KanNetwork;
use crate::{Error, Result};

const GRID_STEPS: usize = 101;
const GRID_LIMIT: f64 = 5.0;
/// Primitives scoring within this much R² of the best fit are preferred when
/// they come earlier in the library.
const SIMPLICITY_SLACK: f64 = 0.002;
/// Terms whose output range is below this fraction of the largest incoming
/// term range are folded into the node constant.
const PRUNE_RATIO: f64 = 1e-2;
/// Edge inputs are summarised by this many quantile points before fitting.
const FIT_POINTS: usize = 48;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Primitive {
    X,
    X2,
    X3,
    Sin,
    Cos,
    Exp,
    Log,
    Inv,
    Sqrt,
}

impl Primitive {
    /// Library order, simplest first.
    pub const ALL: [Primitive; 9] = [
        Primitive::X,
        Primitive::X2,
        Primitive::X3,
        Primitive::Sin,
        Primitive::Cos,
        Primitive::Exp,
        Primitive::Log,
        Primitive::Inv,
        Primitive::Sqrt,
    ];

    pub fn apply(self, u: f64) -> f64 {
        match self {
            Primitive::X => u,
            Primitive::X2 => u * u,
            Primitive::X3 => u * u * u,
            Primitive::Sin => u.sin(),
            Primitive::Cos => u.cos(),
            Primitive::Exp => u.exp(),
            Primitive::Log => u.ln(),
            Primitive::Inv => 1.0 / u,
            Primitive::Sqrt => u.sqrt(),
        }
    }

    fn render(self, arg: &str) -> String {
        match self {
            Primitive::X => arg.to_string(),
            Primitive::X2 => format!("({arg})^2"),
            Primitive::X3 => format!("({arg})^3"),
            Primitive::Sin => format!("sin({arg})"),
            Primitive::Cos => format!("cos({arg})"),
            Primitive::Exp => format!("exp({arg})"),
            Primitive::Log => format!("log({arg})"),
            Primitive::Inv => format!("1/({arg})"),
            Primitive::Sqrt => format!("sqrt({arg})"),
        }
    }
}

/// Symbolic expression over network inputs `x0, x1, …`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Expr {
    Const { value: f64 },
    Var { index: usize },
    Sum { terms: Vec<Expr> },
    /// `scale · primitive(a · arg + b)`.
    Term {
        scale: f64,
        primitive: Primitive,
        a: f64,
        b: f64,
        arg: Box<Expr>,
    },
}

impl Expr {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Expr::Const { value } => *value,
            Expr::Var { index } => x[*index],
            Expr::Sum { terms } => terms.iter().map(|t| t.eval(x)).sum(),
            Expr::Term {
                scale,
                primitive,
                a,
                b,
                arg,
            } => scale * primitive.apply(a * arg.eval(x) + b),
        }
    }

    /// Largest input index referenced, if any.
    pub fn max_var(&self) -> Option<usize> {
        match self {
            Expr::Const { .. } => None,
            Expr::Var { index } => Some(*index),
            Expr::Sum { terms } => terms.iter().filter_map(Expr::max_var).max(),
            Expr::Term { arg, .. } => arg.max_var(),
        }
    }

    /// Rewrites the expression for inputs given by `x_i = m·v_i + s`, so that
    /// it can be evaluated directly on `v`. Affine arguments absorb the change.
    pub fn substitute_affine_inputs(&self, m: f64, s: f64) -> Expr {
        match self {
            Expr::Const { .. } => self.clone(),
            Expr::Var { index } => Expr::Sum {
                terms: vec![
                    Expr::Term {
                        scale: 1.0,
                        primitive: Primitive::X,
                        a: m,
                        b: s,
                        arg: Box::new(Expr::Var { index: *index }),
                    },
                ],
            },
            Expr::Sum { terms } => Expr::Sum {
                terms: terms.iter().map(|t| t.substitute_affine_inputs(m, s)).collect(),
            },
            Expr::Term {
                scale,
                primitive,
                a,
                b,
                arg,
            } => match arg.as_ref() {
                Expr::Var { .. } => Expr::Term {
                    scale: *scale,
                    primitive: *primitive,
                    a: a * m,
                    b: a * s + b,
                    arg: arg.clone(),
                },
                other => Expr::Term {
                    scale: *scale,
                    primitive: *primitive,
                    a: *a,
                    b: *b,
                    arg: Box::new(other.substitute_affine_inputs(m, s)),
                },
            },
        }
    }

    /// Human-readable rendering; `name` maps input indices to variable names.
    pub fn render(&self, name: &dyn Fn(usize) -> String) -> String {
        match self {
            Expr::Const { value } => fmt_num(*value),
            Expr::Var { index } => name(*index),
            Expr::Sum { terms } => {
                if terms.is_empty() {
                    return "0".into();
                }
                let mut out = String::new();
                for (i, t) in terms.iter().enumerate() {
                    let s = t.render(name);
                    if i == 0 {
                        out.push_str(&s);
                    } else if let Some(rest) = s.strip_prefix('-') {
                        let _ = write!(out, " - {rest}");
                    } else {
                        let _ = write!(out, " + {s}");
                    }
                }
                out
            }
            Expr::Term {
                scale,
                primitive,
                a,
                b,
                arg,
            } => {
                let inner = arg.render(name);
                let inner = if matches!(arg.as_ref(), Expr::Sum { terms } if terms.len() > 1) {
                    format!("({inner})")
                } else {
                    inner
                };
                let mut lin = if *a == 1.0 {
                    inner
                } else if *a == -1.0 {
                    format!("-{inner}")
                } else {
                    format!("{}*{inner}", fmt_num(*a))
                };
                if *b != 0.0 {
                    if *b < 0.0 {
                        let _ = write!(lin, " - {}", fmt_num(-b));
                    } else {
                        let _ = write!(lin, " + {}", fmt_num(*b));
                    }
                }
                let body = match primitive {
                    Primitive::X if *b != 0.0 && *scale != 1.0 => format!("({lin})"),
                    Primitive::X => lin,
                    p => p.render(&lin),
                };
                if *scale == 1.0 {
                    body
                } else {
                    format!("{}*{body}", fmt_num(*scale))
                }
            }
        }
    }
}

fn fmt_num(v: f64) -> String {
    let s = format!("{v:.4}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.to_string()
    }
}

/// Best closed-form fit of one edge function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeFit {
    pub layer: usize,
    pub output: usize,
    pub input: usize,
    pub primitive: Primitive,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub r2: f64,
    /// Spread of the fitted term over the sampled inputs.
    pub range: f64,
    /// False when the term was folded into the node constant.
    pub kept: bool,
}

impl EdgeFit {
    pub fn eval(&self, x: f64) -> f64 {
        self.c * self.primitive.apply(self.a * x + self.b) + self.d
    }
}

/// Closed-form formula for one network output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymbolicFormula {
    pub output: usize,
    pub expr: Expr,
    pub edges: Vec<EdgeFit>,
    /// Agreement between the formula and the network on the sample inputs.
    pub r2: f64,
}

impl SymbolicFormula {
    pub fn render(&self, name: &dyn Fn(usize) -> String) -> String {
        self.expr.render(name)
    }
}

struct Fit {
    primitive: Primitive,
    a: f64,
    b: f64,
    c: f64,
    d: f64,
    r2: f64,
}

/// Sums needed for a least-squares fit of centred targets against `g`.
struct Moments {
    n: f64,
    sg: f64,
    sgg: f64,
    sgy: f64,
}

impl Moments {
    /// Returns `(r², c, d)`; `None` when `g` is (numerically) constant.
    fn solve(&self, y_mean: f64, sst: f64) -> Option<(f64, f64, f64)> {
        let var = self.sgg - self.sg * self.sg / self.n;
        if !(var > 1e-12 * self.sgg.abs().max(1e-300)) || !var.is_finite() {
            return None;
        }
        let c = self.sgy / var;
        let r2 = (self.sgy * self.sgy / (var * sst)).min(1.0);
        let d = y_mean - c * self.sg / self.n;
        r2.is_finite().then_some((r2, c, d))
    }
}

fn grid_value(i: usize) -> f64 {
    -GRID_LIMIT + 2.0 * GRID_LIMIT * i as f64 / (GRID_STEPS - 1) as f64
}

fn domain_ok(p: Primitive, u: f64, sign: &mut f64) -> bool {
    match p {
        Primitive::Log => u > 1e-12,
        Primitive::Sqrt => u >= 0.0,
        Primitive::Inv => {
            if u.abs() < 1e-3 {
                return false;
            }
            let s = u.signum();
            if *sign == 0.0 {
                *sign = s;
            }
            *sign == s
        }
        _ => true,
    }
}

fn best_for_primitive(p: Primitive, xs: &[f64], yc: &[f64], y_mean: f64, sst: f64) -> Option<Fit> {
    let n = xs.len() as f64;
    let mut best: Option<Fit> = None;
    let mut consider = |a: f64, b: f64, m: Moments| {
        if let Some((r2, c, d)) = m.solve(y_mean, sst) {
            if best.as_ref().is_none_or(|f| r2 > f.r2) {
                best = Some(Fit { primitive: p, a, b, c, d, r2 });
            }
        }
    };
    match p {
        Primitive::X => {
            let m = direct(xs, yc, |x| x)?;
            consider(1.0, 0.0, m);
        }
        Primitive::Sin | Primitive::Cos => {
            for ia in 0..GRID_STEPS {
                let a = grid_value(ia);
                let (mut s_s, mut s_c, mut s_ss, mut s_cc, mut s_sc, mut s_sy, mut s_cy) =
                    (0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
                for (x, y) in xs.iter().zip(yc) {
                    let (s, c) = (a * x).sin_cos();
                    s_s += s;
                    s_c += c;
                    s_ss += s * s;
                    s_cc += c * c;
                    s_sc += s * c;
                    s_sy += s * y;
                    s_cy += c * y;
                }
                for ib in 0..GRID_STEPS {
                    let b = grid_value(ib);
                    let (sb, cb) = b.sin_cos();
                    // sin(u + b) = sin u cos b + cos u sin b
                    // cos(u + b) = cos u cos b - sin u sin b
                    let (ws, wc) = if p == Primitive::Sin { (cb, sb) } else { (-sb, cb) };
                    let m = Moments {
                        n,
                        sg: ws * s_s + wc * s_c,
                        sgg: ws * ws * s_ss + 2.0 * ws * wc * s_sc + wc * wc * s_cc,
                        sgy: ws * s_sy + wc * s_cy,
                    };
                    consider(a, b, m);
                }
            }
        }
        Primitive::Exp => {
            // exp(a x + b) = e^b exp(a x): the offset only rescales the term.
            for ia in 0..GRID_STEPS {
                let a = grid_value(ia);
                if let Some(m) = direct(xs, yc, |x| (a * x).exp()) {
                    consider(a, 0.0, m);
                }
            }
        }
        _ => {
            for ia in 0..GRID_STEPS {
                let a = grid_value(ia);
                for ib in 0..GRID_STEPS {
                    let b = grid_value(ib);
                    let mut sign = 0.0;
                    if !xs.iter().all(|x| domain_ok(p, a * x + b, &mut sign)) {
                        continue;
                    }
                    if let Some(m) = direct(xs, yc, |x| p.apply(a * x + b)) {
                        consider(a, b, m);
                    }
                }
            }
        }
    }
    best
}

fn direct(xs: &[f64], yc: &[f64], f: impl Fn(f64) -> f64) -> Option<Moments> {
    let mut m = Moments {
        n: xs.len() as f64,
        sg: 0.0,
        sgg: 0.0,
        sgy: 0.0,
    };
    for (x, y) in xs.iter().zip(yc) {
        let g = f(*x);
        if !g.is_finite() {
            return None;
        }
        m.sg += g;
        m.sgg += g * g;
        m.sgy += g * y;
    }
    Some(m)
}

/// Picks `(a, b)` representatives: `sin` and `cos` get `a ≥ 0` and
/// `b ∈ (-π/2, π/2]` using `sin(-u) = -sin(u)`, `cos(-u) = cos(u)` and
/// `f(u + π) = -f(u)`.
fn canonicalize(fit: &mut Fit) {
    if fit.primitive == Primitive::X2 && fit.a < 0.0 {
        fit.a = -fit.a;
        fit.b = -fit.b;
        return;
    }
    if !matches!(fit.primitive, Primitive::Sin | Primitive::Cos) {
        return;
    }
    if fit.a < 0.0 {
        fit.a = -fit.a;
        fit.b = -fit.b;
        if fit.primitive == Primitive::Sin {
            fit.c = -fit.c;
        }
    }
    fit.b -= 2.0 * PI * (fit.b / (2.0 * PI)).round();
    if fit.b > PI / 2.0 {
        fit.b -= PI;
        fit.c = -fit.c;
    } else if fit.b <= -PI / 2.0 {
        fit.b += PI;
        fit.c = -fit.c;
    }
}

/// Fits `ys ≈ c·f(a·xs + b) + d` over the primitive library.
fn fit_edge(xs: &[f64], ys: &[f64]) -> Fit {
    let n = xs.len() as f64;
    let y_mean = ys.iter().sum::<f64>() / n;
    let yc: Vec<f64> = ys.iter().map(|y| y - y_mean).collect();
    let sst: f64 = yc.iter().map(|y| y * y).sum();
    let scale = ys.iter().map(|y| y * y).sum::<f64>() / n;
    if !(sst > 1e-20 * n * scale.max(1e-300)) {
        return Fit {
            primitive: Primitive::X,
            a: 1.0,
            b: 0.0,
            c: 0.0,
            d: y_mean,
            r2: 1.0,
        };
    }
    let fits: Vec<Fit> = Primitive::ALL
        .iter()
        .filter_map(|&p| best_for_primitive(p, xs, &yc, y_mean, sst))
        .collect();
    let best_r2 = fits.iter().map(|f| f.r2).fold(f64::MIN, f64::max);
    let mut chosen = fits
        .into_iter()
        .find(|f| f.r2 >= best_r2 - SIMPLICITY_SLACK)
        .expect("identity fit always exists for non-constant data");
    canonicalize(&mut chosen);
    chosen
}

/// Quantile summary of the sampled edge inputs.
fn fit_points(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v.dedup();
    if v.len() <= FIT_POINTS {
        return v;
    }
    let mut out: Vec<f64> = (0..FIT_POINTS)
        .map(|i| v[i * (v.len() - 1) / (FIT_POINTS - 1)])
        .collect();
    out.dedup();
    out
}

fn r_squared(pred: &[f64], target: &[f64]) -> f64 {
    let n = target.len() as f64;
    let mean = target.iter().sum::<f64>() / n;
    let sst: f64 = target.iter().map(|t| (t - mean).powi(2)).sum();
    let sse: f64 = pred.iter().zip(target).map(|(p, t)| (p - t).powi(2)).sum();
    if sst <= 1e-24 * n {
        if sse <= 1e-12 * n {
            1.0
        } else {
            0.0
        }
    } else {
        1.0 - sse / sst
    }
}

/// Extracts one formula per network output from sample inputs.
pub fn extract_formulas(net: &KanNetwork, samples: &[Vec<f64>]) -> Result<Vec<SymbolicFormula>> {
    if samples.is_empty() {
        return Err(Error::EmptyData);
    }
    let mut acts: Vec<Vec<Vec<f64>>> = vec![samples.to_vec()];
    for layer in net.layers() {
        let next = acts
            .last()
            .expect("non-empty")
            .iter()
            .map(|x| layer.forward(x))
            .collect::<Result<Vec<_>>>()?;
        acts.push(next);
    }

    let mut node_exprs: Vec<Expr> = (0..net.n_in()).map(|i| Expr::Var { index: i }).collect();
    let mut all_edges: Vec<Vec<EdgeFit>> = Vec::new();
    for (l, layer) in net.layers().iter().enumerate() {
        let mut next_exprs = Vec::with_capacity(layer.n_out());
        let mut layer_edges = Vec::new();
        for q in 0..layer.n_out() {
            let mut fits = Vec::with_capacity(layer.n_in());
            for p in 0..layer.n_in() {
                let column: Vec<f64> = acts[l].iter().map(|x| x[p]).collect();
                let xs = fit_points(&column);
                let edge = layer.edge(q, p);
                let ys: Vec<f64> = xs.iter().map(|&x| edge.eval(x, layer.grid())).collect();
                let fit = fit_edge(&xs, &ys);
                let term: Vec<f64> = column.iter().map(|&x| fit.c * fit.primitive.apply(fit.a * x + fit.b)).collect();
                let lo = term.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = term.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let mean = term.iter().sum::<f64>() / term.len() as f64;
                fits.push((fit, hi - lo, mean, p));
            }
            let max_range = fits.iter().map(|f| f.1).fold(0.0, f64::max);
            let mut terms = Vec::new();
            let mut constant = 0.0;
            for (fit, range, mean, p) in fits {
                let kept = max_range > 0.0 && range >= PRUNE_RATIO * max_range && fit.c != 0.0;
                constant += fit.d;
                if kept {
                    terms.push(Expr::Term {
                        scale: fit.c,
                        primitive: fit.primitive,
                        a: fit.a,
                        b: fit.b,
                        arg: Box::new(node_exprs[p].clone()),
                    });
                } else {
                    constant += mean;
                }
                layer_edges.push(EdgeFit {
                    layer: l,
                    output: q,
                    input: p,
                    primitive: fit.primitive,
                    a: fit.a,
                    b: fit.b,
                    c: fit.c,
                    d: fit.d,
                    r2: fit.r2,
                    range,
                    kept,
                });
            }
            if constant != 0.0 || terms.is_empty() {
                terms.push(Expr::Const { value: constant });
            }
            next_exprs.push(if terms.len() == 1 {
                terms.pop().expect("one term")
            } else {
                Expr::Sum { terms }
            });
        }
        node_exprs = next_exprs;
        all_edges.push(layer_edges);
    }

    let outputs = acts.last().expect("non-empty");
    node_exprs
        .into_iter()
        .enumerate()
        .map(|(q, expr)| {
            let pred: Vec<f64> = samples.iter().map(|x| expr.eval(x)).collect();
            let target: Vec<f64> = outputs.iter().map(|o| o[q]).collect();
            // Only edges on paths into this output matter for its formula.
            let last = all_edges.len() - 1;
            let edges = all_edges
                .iter()
                .enumerate()
                .flat_map(|(l, es)| es.iter().filter(move |e| l < last || e.output == q).cloned())
                .collect();
            Ok(SymbolicFormula {
                output: q,
                r2: r_squared(&pred, &target),
                expr,
                edges,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fit_of(f: impl Fn(f64) -> f64) -> Fit {
        let xs: Vec<f64> = (0..41).map(|i| -1.0 + i as f64 / 20.0).collect();
        let ys: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
        fit_edge(&xs, &ys)
    }

    #[test]
    fn recovers_library_functions() {
        let f = fit_of(|x| 2.0 * x - 0.5);
        assert_eq!(f.primitive, Primitive::X);
        assert!((f.c - 2.0).abs() < 1e-12 && (f.d + 0.5).abs() < 1e-12);
        let f = fit_of(|x| x * x);
        assert_eq!(f.primitive, Primitive::X2);
        assert!(f.r2 > 0.9999);
        let f = fit_of(|x| (3.0 * x).sin());
        assert_eq!(f.primitive, Primitive::Sin);
        assert!((f.a - 3.0).abs() < 1e-9 && f.b.abs() < 1e-9 && (f.c - 1.0).abs() < 1e-9);
        let f = fit_of(|x| -(3.0 * x).sin());
        assert_eq!(f.primitive, Primitive::Sin);
        assert!((f.a - 3.0).abs() < 1e-9 && (f.c + 1.0).abs() < 1e-9);
        let f = fit_of(|x| 0.5 * (2.0 * x).exp());
        assert_eq!(f.primitive, Primitive::Exp);
        assert!((f.a - 2.0).abs() < 1e-9);
        let f = fit_of(|x| (x + 1.1).ln());
        assert_eq!(f.primitive, Primitive::Log);
        assert!(f.r2 > 0.9999);
    }

    #[test]
    fn constant_edges() {
        let f = fit_of(|_| 0.25);
        assert_eq!(f.c, 0.0);
        assert_eq!(f.d, 0.25);
    }

    #[test]
    fn rendering_and_substitution() {
        let e = Expr::Sum {
            terms: vec![
                Expr::Term {
                    scale: 0.5,
                    primitive: Primitive::Sin,
                    a: 3.0,
                    b: 0.0,
                    arg: Box::new(Expr::Var { index: 0 }),
                },
                Expr::Term {
                    scale: -2.0,
                    primitive: Primitive::X,
                    a: 1.0,
                    b: 0.0,
                    arg: Box::new(Expr::Var { index: 1 }),
                },
                Expr::Const { value: 0.1 },
            ],
        };
        let name = |i: usize| format!("x{i}");
        assert_eq!(e.render(&name), "0.5*sin(3*x0) - 2*x1 + 0.1");
        let x = [0.3, -0.7];
        let v = [(x[0] + 1.0) / 2.0, (x[1] + 1.0) / 2.0];
        let sub = e.substitute_affine_inputs(2.0, -1.0);
        assert!((sub.eval(&v) - e.eval(&x)).abs() < 1e-12);
        assert_eq!(e.max_var(), Some(1));
    }
}
