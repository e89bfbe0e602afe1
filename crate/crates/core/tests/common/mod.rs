//! Reference computations for integration tests. Nothing here shares code
//! with the recursions under test.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use sparj::lgssm::{random_covariance, ModelParams, ObservationSeries};

pub fn normal_matrix<R: Rng + ?Sized>(r: usize, c: usize, rng: &mut R) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| rng.sample(StandardNormal))
}

/// Random system with general `H`, `Q`, `R`, `P0` and `‖A‖₂ = 0.95`.
pub fn random_system<R: Rng + ?Sized>(dx: usize, dy: usize, rng: &mut R) -> ModelParams {
    let a = normal_matrix(dx, dx, rng);
    let a = &a * (0.95 / a.clone().svd(false, false).singular_values.max());
    ModelParams {
        a,
        h: normal_matrix(dy, dx, rng),
        q: random_covariance(dx, 0.2, 1.5, rng).unwrap(),
        r: random_covariance(dy, 0.2, 1.5, rng).unwrap(),
        x0_mean: DVector::from_fn(dx, |_, _| rng.sample(StandardNormal)),
        p0: random_covariance(dx, 0.1, 1.0, rng).unwrap(),
    }
}

fn gaussian_log_density(x: &DVector<f64>, mean: &DVector<f64>, cov: &DMatrix<f64>) -> f64 {
    let n = x.len() as f64;
    let chol = cov.clone().cholesky().expect("joint covariance is positive definite");
    let d = x - mean;
    let w = chol.solve(&d);
    let log_det = 2.0 * chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
    -0.5 * (n * (2.0 * std::f64::consts::PI).ln() + log_det + d.dot(&w))
}

/// Moments of `x_{0:T}` stacked, `(T+1)·dx` long.
fn state_moments(p: &ModelParams, t_len: usize) -> (DVector<f64>, DMatrix<f64>) {
    let dx = p.a.nrows();
    let n = (t_len + 1) * dx;
    let mut mean = DVector::zeros(n);
    let mut cov = DMatrix::zeros(n, n);
    let mut marg = vec![p.p0.clone()];
    let mut m = p.x0_mean.clone();
    mean.rows_mut(0, dx).copy_from(&m);
    for t in 1..=t_len {
        m = &p.a * m;
        mean.rows_mut(t * dx, dx).copy_from(&m);
        marg.push(&p.a * &marg[t - 1] * p.a.transpose() + &p.q);
    }
    for (s, p_s) in marg.iter().enumerate() {
        let mut block = p_s.clone();
        for t in s..=t_len {
            // Cov(x_t, x_s) = A^{t-s} P_s
            cov.view_mut((t * dx, s * dx), (dx, dx)).copy_from(&block);
            cov.view_mut((s * dx, t * dx), (dx, dx)).copy_from(&block.transpose());
            block = &p.a * block;
        }
    }
    (mean, cov)
}

/// Joint moments of `(x_{0:T}, y_{1:T})`.
fn joint_moments(p: &ModelParams, t_len: usize) -> (DVector<f64>, DMatrix<f64>) {
    let (dx, dy) = (p.a.nrows(), p.h.nrows());
    let (mx, cx) = state_moments(p, t_len);
    let nx = (t_len + 1) * dx;
    // y = G x + r with G picking H x_t for t >= 1.
    let mut g = DMatrix::zeros(t_len * dy, nx);
    let mut r = DMatrix::zeros(t_len * dy, t_len * dy);
    for t in 0..t_len {
        g.view_mut((t * dy, (t + 1) * dx), (dy, dx)).copy_from(&p.h);
        r.view_mut((t * dy, t * dy), (dy, dy)).copy_from(&p.r);
    }
    let my = &g * &mx;
    let cyy = &g * &cx * g.transpose() + r;
    let cxy = &cx * g.transpose();
    let n = nx + t_len * dy;
    let mut mean = DVector::zeros(n);
    mean.rows_mut(0, nx).copy_from(&mx);
    mean.rows_mut(nx, t_len * dy).copy_from(&my);
    let mut cov = DMatrix::zeros(n, n);
    cov.view_mut((0, 0), (nx, nx)).copy_from(&cx);
    cov.view_mut((nx, nx), (t_len * dy, t_len * dy)).copy_from(&cyy);
    cov.view_mut((0, nx), (nx, t_len * dy)).copy_from(&cxy);
    cov.view_mut((nx, 0), (t_len * dy, nx)).copy_from(&cxy.transpose());
    (mean, cov)
}

fn stacked(y: &ObservationSeries) -> DVector<f64> {
    DVector::from_column_slice(y.matrix().transpose().as_slice())
}

/// `log p(y_{1:T})` from the joint Gaussian of all observations.
pub fn brute_force_log_likelihood(p: &ModelParams, y: &ObservationSeries) -> f64 {
    let nx = (y.len() + 1) * p.a.nrows();
    let (mean, cov) = joint_moments(p, y.len());
    let ny = mean.len() - nx;
    gaussian_log_density(
        &stacked(y),
        &mean.rows(nx, ny).into_owned(),
        &cov.view((nx, nx), (ny, ny)).into_owned(),
    )
}

/// `E[x_{0:T} | y_{1:T}]` and `Cov[x_{0:T} | y_{1:T}]` by Gaussian conditioning.
pub fn brute_force_smoother(p: &ModelParams, y: &ObservationSeries) -> (DVector<f64>, DMatrix<f64>) {
    let nx = (y.len() + 1) * p.a.nrows();
    let (mean, cov) = joint_moments(p, y.len());
    let ny = mean.len() - nx;
    let cxx = cov.view((0, 0), (nx, nx));
    let cxy = cov.view((0, nx), (nx, ny));
    let cyy = cov.view((nx, nx), (ny, ny)).into_owned();
    let chol = cyy.cholesky().unwrap();
    let resid = stacked(y) - mean.rows(nx, ny);
    let post_mean = mean.rows(0, nx) + cxy * chol.solve(&resid);
    let post_cov = cxx - cxy * chol.solve(&cxy.transpose());
    (post_mean, post_cov)
}

/// Log-likelihood of a scalar system `x_t = a x_{t-1} + q_t`, `y_t = x_t + r_t`,
/// by integrating the states out of the joint density in precision form.
/// The precision of `x_{0:T}` is tridiagonal, so this stays well conditioned
/// for explosive `a` where the covariance form overflows.
pub fn scalar_log_likelihood(a: f64, q: f64, r: f64, x0: f64, p0: f64, y: &ObservationSeries) -> f64 {
    let t_len = y.len();
    let n = t_len + 1;
    let ln2pi = (2.0 * std::f64::consts::PI).ln();
    let mut lam = DMatrix::zeros(n, n);
    let mut b = DVector::zeros(n);
    lam[(0, 0)] = 1.0 / p0;
    b[0] = x0 / p0;
    let mut c = -0.5 * (ln2pi + p0.ln()) - 0.5 * x0 * x0 / p0;
    for t in 1..n {
        let yt = y.matrix()[(t - 1, 0)];
        lam[(t, t)] += 1.0 / q + 1.0 / r;
        lam[(t - 1, t - 1)] += a * a / q;
        lam[(t - 1, t)] -= a / q;
        lam[(t, t - 1)] -= a / q;
        b[t] += yt / r;
        c += -0.5 * (ln2pi + q.ln()) - 0.5 * (ln2pi + r.ln()) - 0.5 * yt * yt / r;
    }
    let chol = lam.cholesky().unwrap();
    let log_det = 2.0 * chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
    c + 0.5 * b.dot(&chol.solve(&b)) + 0.5 * n as f64 * ln2pi - 0.5 * log_det
}

/// Trapezoid rule on `n` equally spaced points of `[lo, hi]`, in log space.
pub fn log_trapezoid(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> f64 {
    let h = (hi - lo) / (n - 1) as f64;
    let vals: Vec<f64> = (0..n).map(|k| f(lo + h * k as f64)).collect();
    let max = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = vals
        .iter()
        .enumerate()
        .map(|(k, v)| {
            let w = if k == 0 || k == n - 1 { 0.5 } else { 1.0 };
            w * (v - max).exp()
        })
        .sum();
    max + (sum * h).ln()
}

/// Edge of a parsed DOT graph.
#[derive(Debug, Clone, PartialEq)]
pub struct DotEdge {
    pub from: String,
    pub to: String,
    pub attrs: Vec<(String, String)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DotGraph {
    pub directed: bool,
    pub nodes: Vec<String>,
    pub edges: Vec<DotEdge>,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Id(String),
    Sym(&'static str),
}

fn tokenize(src: &str) -> Result<Vec<Tok>, String> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c == '"' {
            let mut s = String::new();
            i += 1;
            loop {
                match chars.get(i) {
                    None => return Err("unterminated string".into()),
                    Some('"') => break,
                    Some('\\') => {
                        s.push(*chars.get(i + 1).ok_or("dangling escape")?);
                        i += 2;
                    }
                    Some(&ch) => {
                        s.push(ch);
                        i += 1;
                    }
                }
            }
            i += 1;
            out.push(Tok::Id(s));
        } else if c == '-' && chars.get(i + 1) == Some(&'>') {
            out.push(Tok::Sym("->"));
            i += 2;
        } else if c == '-' && chars.get(i + 1) == Some(&'-') {
            out.push(Tok::Sym("--"));
            i += 2;
        } else if let Some(sym) = ["{", "}", "[", "]", ";", ",", "="].iter().find(|s| s.starts_with(c)) {
            out.push(Tok::Sym(sym));
            i += 1;
        } else if c.is_alphanumeric() || c == '_' || c == '.' || c == '-' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_' || chars[i] == '.') {
                i += 1;
            }
            if i == start {
                i += 1;
            }
            out.push(Tok::Id(chars[start..i].iter().collect()));
        } else {
            return Err(format!("unexpected character `{c}`"));
        }
    }
    Ok(out)
}

/// Parser for the node/edge/attribute subset of the DOT language (no
/// subgraphs). Rejects anything outside it.
pub fn parse_dot(src: &str) -> Result<DotGraph, String> {
    let toks = tokenize(src)?;
    let mut pos = 0;
    let id = |pos: &mut usize| match toks.get(*pos) {
        Some(Tok::Id(s)) => {
            *pos += 1;
            Ok(s.clone())
        }
        other => Err(format!("expected identifier, found {other:?}")),
    };
    let sym = |pos: &mut usize, s: &str| match toks.get(*pos) {
        Some(Tok::Sym(t)) if *t == s => {
            *pos += 1;
            true
        }
        _ => false,
    };
    let kw = id(&mut pos)?;
    let directed = match kw.as_str() {
        "digraph" => true,
        "graph" => false,
        _ => return Err(format!("expected graph keyword, found `{kw}`")),
    };
    if matches!(toks.get(pos), Some(Tok::Id(_))) {
        pos += 1;
    }
    if !sym(&mut pos, "{") {
        return Err("expected `{`".into());
    }
    let edge_op = if directed { "->" } else { "--" };
    let mut graph = DotGraph {
        directed,
        nodes: Vec::new(),
        edges: Vec::new(),
    };
    loop {
        if sym(&mut pos, "}") {
            break;
        }
        let first = id(&mut pos)?;
        if sym(&mut pos, "=") {
            id(&mut pos)?;
        } else {
            let mut chain = vec![first];
            while sym(&mut pos, edge_op) {
                chain.push(id(&mut pos)?);
            }
            let mut attrs = Vec::new();
            if sym(&mut pos, "[") {
                while !sym(&mut pos, "]") {
                    let k = id(&mut pos)?;
                    if !sym(&mut pos, "=") {
                        return Err(format!("attribute `{k}` without value"));
                    }
                    attrs.push((k, id(&mut pos)?));
                    let _ = sym(&mut pos, ",") || sym(&mut pos, ";");
                }
            }
            if chain.len() == 1 {
                let defaults = ["graph", "node", "edge"].contains(&chain[0].as_str()) && !attrs.is_empty();
                if !defaults {
                    graph.nodes.push(chain.pop().unwrap());
                }
            } else {
                for w in chain.windows(2) {
                    graph.edges.push(DotEdge {
                        from: w[0].clone(),
                        to: w[1].clone(),
                        attrs: attrs.clone(),
                    });
                }
            }
        }
        let _ = sym(&mut pos, ";");
    }
    if pos != toks.len() {
        return Err("trailing tokens after graph".into());
    }
    Ok(graph)
}
