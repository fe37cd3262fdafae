//! Explicit solution of `−(a(x/ε)u′)′ = f` on `[0, 1]` with `u(0) = 0`,
//! `u(1) = b`, its homogenised limit and the decomposition of the rescaled
//! corrector.
//!
//! All integrals in `y` use the trapezoidal rule on the nodes of the
//! Gaussian path (`y_j = jεΔ`), so no interpolation of the rough
//! coefficient is needed and the discrete identities hold to rounding.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
#[allow(unused_imports)] // redundant when std is linked in by dev-dependencies
use num_traits::Float;

use crate::error::{Error, Result};
use crate::hermite::{CoefficientSampler, ScalarFn, RANK_THRESHOLD};
use crate::limit::aligned_cells;
use crate::lrd::GaussianPath;

/// Smallest number of path samples per unit of the fast variable.
pub const MIN_SAMPLES_PER_UNIT: f64 = 20.0;

/// Source term `f` on `[0, 1]`.
#[derive(Clone)]
pub enum Source {
    /// `f ≡ c`.
    Const(f64),
    /// `f(y) = k·y`.
    Linear(f64),
    /// `f(y) = sin(y)`.
    Sin,
    Custom { f: ScalarFn, name: String },
}

impl fmt::Debug for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Source::Const(c) => write!(f, "Const({c})"),
            Source::Linear(k) => write!(f, "Linear({k})"),
            Source::Sin => write!(f, "Sin"),
            Source::Custom { name, .. } => write!(f, "Custom({name})"),
        }
    }
}

impl Source {
    /// `const` (f ≡ 1), `linear` (f = 2y) or `sin`.
    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "const" => Ok(Source::Const(1.0)),
            "linear" => Ok(Source::Linear(2.0)),
            "sin" => Ok(Source::Sin),
            other => Err(Error::Inconsistent(format!(
                "unknown source '{other}'; expected const, linear or sin"
            ))),
        }
    }

    pub fn eval(&self, y: f64) -> f64 {
        match self {
            Source::Const(c) => *c,
            Source::Linear(k) => k * y,
            Source::Sin => y.sin(),
            Source::Custom { f, .. } => f(y),
        }
    }

    /// Closed-form `F(x) = ∫_0^x f`, when known.
    pub fn exact_antiderivative(&self, x: f64) -> Option<f64> {
        match self {
            Source::Const(c) => Some(c * x),
            Source::Linear(k) => Some(0.5 * k * x * x),
            Source::Sin => Some(1.0 - x.cos()),
            Source::Custom { .. } => None,
        }
    }
}

/// `F(x) = ∫_0^x f(y) dy` by composite Simpson with `panels` panels.
pub fn antiderivative_f<F: Fn(f64) -> f64 + ?Sized>(f: &F, x: f64, panels: usize) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let n = panels.max(1);
    let h = x / n as f64;
    let mut s = 0.0;
    for i in 0..n {
        let a = i as f64 * h;
        s += f(a) + 4.0 * f(a + 0.5 * h) + f(a + h);
    }
    s * h / 6.0
}

/// `F` at the nodes `x_j = j·h`, accumulated cell by cell with Simpson's rule.
fn antiderivative_on_grid(source: &Source, n: usize, h: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    out.push(0.0);
    let mut acc = 0.0;
    for j in 0..n {
        let a = j as f64 * h;
        acc += h / 6.0 * (source.eval(a) + 4.0 * source.eval(a + 0.5 * h) + source.eval(a + h));
        out.push(acc);
    }
    out
}

/// Data of the boundary-value problem.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub source: Source,
    pub b: f64,
    pub epsilon: f64,
    pub coeff: CoefficientSampler,
    /// Cells of the uniform grid used by [`solve_homogenized`] on its own.
    pub quad_grid: usize,
}

impl ProblemSpec {
    pub fn new(source: Source, b: f64, epsilon: f64, coeff: CoefficientSampler, quad_grid: usize) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::range("epsilon", epsilon, "must be positive"));
        }
        if !b.is_finite() {
            return Err(Error::range("b", b, "must be finite"));
        }
        if quad_grid < 2 {
            return Err(Error::range("quad_grid", quad_grid as f64, "needs at least two cells"));
        }
        for j in 0..=64 {
            let y = j as f64 / 64.0;
            let v = source.eval(y);
            if !v.is_finite() {
                return Err(Error::InputDomain { x: y, value: v });
            }
        }
        Ok(ProblemSpec {
            source,
            b,
            epsilon,
            coeff,
            quad_grid,
        })
    }

    /// `a* = 1/E[1/a(0)]`.
    pub fn a_star(&self) -> f64 {
        effective_coefficient(&self.coeff)
    }
}

/// `a* = 1/E[1/a(0)]`: the configured value when `Φ` is centred, otherwise
/// `1/(V_0 + 1/a*)` with `V_0 = E[Φ(g)]` from the Hermite expansion.
pub fn effective_coefficient(coeff: &CoefficientSampler) -> f64 {
    let v0 = coeff.phi.expansion.coeffs[0];
    if coeff.phi.declared_rank >= 1 || v0.abs() < RANK_THRESHOLD {
        coeff.a_star
    } else {
        1.0 / (v0 + 1.0 / coeff.a_star)
    }
}

/// Coefficient `a(y/ε)` sampled on `y_j = j·h`, `j = 0..n`, with the
/// centred fluctuation `q = 1/a − 1/a*`.
#[derive(Debug, Clone, PartialEq)]
pub struct Medium {
    pub epsilon: f64,
    pub h: f64,
    pub a: Vec<f64>,
    pub q: Vec<f64>,
    pub a_star: f64,
}

impl Medium {
    /// `a` read off a Gaussian path whose grid is aligned with `ε`.
    pub fn from_path(coeff: &CoefficientSampler, path: &GaussianPath, epsilon: f64) -> Result<Self> {
        if path.delta * MIN_SAMPLES_PER_UNIT > 1.0 + 1e-12 {
            return Err(Error::Resolution(format!(
                "path step {} gives fewer than {MIN_SAMPLES_PER_UNIT} samples per unit of the fast variable",
                path.delta
            )));
        }
        let n = aligned_cells(path, epsilon)?;
        let a_star = effective_coefficient(coeff);
        let inv: Vec<f64> = path.values[..=n].iter().map(|&g| coeff.inv_a(g)).collect();
        Ok(Medium {
            epsilon,
            h: 1.0 / n as f64,
            a: inv.iter().map(|v| 1.0 / v).collect(),
            q: inv.iter().map(|v| v - 1.0 / a_star).collect(),
            a_star,
        })
    }

    /// Arbitrary positive samples `a_j` on `n = a.len() − 1` cells.
    pub fn from_values(epsilon: f64, a_star: f64, a: Vec<f64>) -> Result<Self> {
        if a.len() < 3 {
            return Err(Error::Inconsistent("a medium needs at least two cells".into()));
        }
        if let Some((j, v)) = a.iter().enumerate().find(|(_, v)| !(**v > 0.0 && v.is_finite())) {
            return Err(Error::InputDomain { x: j as f64, value: *v });
        }
        Ok(Medium {
            epsilon,
            h: 1.0 / (a.len() - 1) as f64,
            q: a.iter().map(|v| 1.0 / v - 1.0 / a_star).collect(),
            a,
            a_star,
        })
    }

    pub fn constant(a: f64, cells: usize) -> Result<Self> {
        Self::from_values(1.0, a, alloc::vec![a; cells + 1])
    }

    pub fn cells(&self) -> usize {
        self.a.len() - 1
    }

    pub fn grid(&self) -> Vec<f64> {
        (0..=self.cells()).map(|j| j as f64 * self.h).collect()
    }
}

/// Prefix trapezoid sums `∫_0^{x_j} v`.
fn prefix(values: &[f64], h: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len());
    out.push(0.0);
    for w in values.windows(2) {
        let last = *out.last().unwrap();
        out.push(last + 0.5 * h * (w[0] + w[1]));
    }
    out
}

/// Random and homogenised solutions on a common grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionPair {
    pub x: Vec<f64>,
    pub u_eps: Vec<f64>,
    pub u_bar: Vec<f64>,
    /// `c^ε = (b + ∫F/a)/∫(1/a)`.
    pub c_eps: f64,
    /// `c* = a*b + ∫_0^1 F`.
    pub c_star: f64,
    pub a_star: f64,
    /// `F` at the grid nodes.
    pub big_f: Vec<f64>,
}

impl SolutionPair {
    /// `u^ε − ū`.
    pub fn corrector(&self) -> Vec<f64> {
        self.u_eps.iter().zip(&self.u_bar).map(|(a, b)| a - b).collect()
    }
}

/// `u^ε(x) = c^ε∫_0^x 1/a − ∫_0^x F/a` on the nodes of `medium`, paired
/// with `ū` on the same nodes.
pub fn solve_on(spec: &ProblemSpec, medium: &Medium) -> SolutionPair {
    let n = medium.cells();
    let h = medium.h;
    let big_f = antiderivative_on_grid(&spec.source, n, h);
    let inv: Vec<f64> = medium.a.iter().map(|a| 1.0 / a).collect();
    let f_over_a: Vec<f64> = big_f.iter().zip(&inv).map(|(f, i)| f * i).collect();
    let i1 = prefix(&inv, h);
    let i_f = prefix(&f_over_a, h);
    let c_eps = (spec.b + i_f[n]) / i1[n];
    let mut u_eps: Vec<f64> = i1.iter().zip(&i_f).map(|(a, b)| c_eps * a - b).collect();
    u_eps[0] = 0.0;

    let a_star = medium.a_star;
    let (x, u_bar, c_star) = homogenized_on(spec.b, a_star, &big_f, h);
    SolutionPair {
        x,
        u_eps,
        u_bar,
        c_eps,
        c_star,
        a_star,
        big_f,
    }
}

fn homogenized_on(b: f64, a_star: f64, big_f: &[f64], h: f64) -> (Vec<f64>, Vec<f64>, f64) {
    let n = big_f.len() - 1;
    let g = prefix(big_f, h);
    let c_star = a_star * b + g[n];
    let x: Vec<f64> = (0..=n).map(|j| j as f64 * h).collect();
    let mut u: Vec<f64> = x.iter().zip(&g).map(|(x, g)| (c_star * x - g) / a_star).collect();
    u[n] = b;
    (x, u, c_star)
}

/// Solves on the coefficient field read from `path`.
pub fn solve_random(spec: &ProblemSpec, path: &GaussianPath) -> Result<SolutionPair> {
    let medium = Medium::from_path(&spec.coeff, path, spec.epsilon)?;
    Ok(solve_on(spec, &medium))
}

/// Homogenised solution `ū(x) = (c*x − ∫_0^x F)/a*` on `spec.quad_grid` cells.
pub fn solve_homogenized(spec: &ProblemSpec) -> SolutionPair {
    let n = spec.quad_grid;
    let h = 1.0 / n as f64;
    let big_f = antiderivative_on_grid(&spec.source, n, h);
    let a_star = spec.a_star();
    let (x, u_bar, c_star) = homogenized_on(spec.b, a_star, &big_f, h);
    SolutionPair {
        u_eps: u_bar.clone(),
        x,
        u_bar,
        c_eps: c_star,
        c_star,
        a_star,
        big_f,
    }
}

/// `F(x,y) = [c* − F(y)]1_{[0,x]}(y) + x(F(y) − ∫_0^1F − a*b)1_{[0,1]}(y)`.
#[derive(Debug, Clone)]
pub struct LimitKernel {
    pub source: Source,
    pub c_star: f64,
    pub a_star: f64,
    pub b: f64,
    pub mean_f: f64,
    panels: usize,
}

impl LimitKernel {
    pub fn new(spec: &ProblemSpec) -> Self {
        let panels = spec.quad_grid.max(2);
        let source = spec.source.clone();
        let mean_f = crate::limit::unit_integral(|y| big_f_of(&source, y, panels));
        let a_star = spec.a_star();
        LimitKernel {
            c_star: a_star * spec.b + mean_f,
            a_star,
            b: spec.b,
            mean_f,
            source,
            panels,
        }
    }

    pub fn big_f(&self, y: f64) -> f64 {
        big_f_of(&self.source, y, self.panels)
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        if !(0.0..=1.0).contains(&y) {
            return 0.0;
        }
        let fy = self.big_f(y);
        // the indicator is taken half-open so that F(0, ·) vanishes identically
        let head = if y < x { self.c_star - fy } else { 0.0 };
        head + x * (fy - self.mean_f - self.a_star * self.b)
    }
}

fn big_f_of(source: &Source, y: f64, panels: usize) -> f64 {
    source
        .exact_antiderivative(y)
        .unwrap_or_else(|| antiderivative_f(&|t| source.eval(t), y, panels))
}

pub fn limit_kernel(x: f64, y: f64, spec: &ProblemSpec) -> f64 {
    LimitKernel::new(spec).eval(x, y)
}

/// Terms of `(u^ε−ū)/𝔛 = 𝒰^ε + (r^ε + ρ^ε·x/a*)/𝔛`.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrectorDecomposition {
    pub x: Vec<f64>,
    /// `(u^ε − ū)/𝔛(ε)`.
    pub rescaled: Vec<f64>,
    /// `𝒰^ε(x) = 𝔛^{−1}∫F(x,y)q(y/ε)dy`.
    pub u_big: Vec<f64>,
    /// `r^ε(x) = (c^ε − c*)∫_0^x q(y/ε)dy`.
    pub r_eps: Vec<f64>,
    pub rho_eps: f64,
    pub x_eps: f64,
    /// `max_x |rescaled − 𝒰^ε − ℛ^ε|`.
    pub reconstruction_error: f64,
}

impl CorrectorDecomposition {
    /// `ℛ^ε(x) = (r^ε(x) + ρ^ε·x/a*)/𝔛`.
    pub fn remainder(&self, a_star: f64) -> Vec<f64> {
        self.x
            .iter()
            .zip(&self.r_eps)
            .map(|(x, r)| (r + self.rho_eps * x / a_star) / self.x_eps)
            .collect()
    }
}

/// Splits the rescaled corrector with `x_eps = 𝔛(ε)`. `pair` must come from
/// [`solve_on`] with the same medium.
pub fn decompose(spec: &ProblemSpec, medium: &Medium, pair: &SolutionPair, x_eps: f64) -> Result<CorrectorDecomposition> {
    let n = medium.cells();
    if pair.u_eps.len() != n + 1 || (pair.a_star - medium.a_star).abs() > 1e-14 * medium.a_star {
        return Err(Error::Inconsistent(format!(
            "solution on {} nodes does not belong to a medium with {} nodes",
            pair.u_eps.len(),
            n + 1
        )));
    }
    if !(x_eps > 0.0) {
        return Err(Error::range("x_eps", x_eps, "must be positive"));
    }
    let h = medium.h;
    let a_star = medium.a_star;
    let fq: Vec<f64> = pair.big_f.iter().zip(&medium.q).map(|(f, q)| f * q).collect();
    let q_pre = prefix(&medium.q, h);
    let fq_pre = prefix(&fq, h);
    let (q1, fq1) = (q_pre[n], fq_pre[n]);
    let mean_f = prefix(&pair.big_f, h)[n];
    let c_star = pair.c_star;
    debug_assert!((c_star - (a_star * spec.b + mean_f)).abs() <= 1e-12 * (1.0 + c_star.abs()));
    let i1 = 1.0 / a_star + q1;
    let rho = a_star / i1 * (c_star * q1 * q1 - fq1 * q1);
    let dc = pair.c_eps - c_star;

    let x = pair.x.clone();
    let mut u_big = Vec::with_capacity(n + 1);
    let mut r_eps = Vec::with_capacity(n + 1);
    let mut rescaled = Vec::with_capacity(n + 1);
    let mut err: f64 = 0.0;
    for j in 0..=n {
        // ∫F(x_j,y)q dy with the indicator resolved on the trapezoid nodes
        let ub = (c_star * q_pre[j] - fq_pre[j] + x[j] * (fq1 - (mean_f + a_star * spec.b) * q1)) / x_eps;
        let r = dc * q_pre[j];
        let lhs = (pair.u_eps[j] - pair.u_bar[j]) / x_eps;
        let rem = (r + rho * x[j] / a_star) / x_eps;
        err = err.max((lhs - ub - rem).abs());
        u_big.push(ub);
        r_eps.push(r);
        rescaled.push(lhs);
    }
    Ok(CorrectorDecomposition {
        x,
        rescaled,
        u_big,
        r_eps,
        rho_eps: rho,
        x_eps,
        reconstruction_error: err,
    })
}

/// Residual of the conservative scheme `−(J_{j+1/2} − J_{j−1/2})/h − f(x_j)`
/// at interior nodes, where `J_{j+1/2} = ā_{j+1/2}(u_{j+1}−u_j)/h` and `ā`
/// is the harmonic mean of neighbouring coefficients. Returns the maximum.
pub fn residual_check(pair: &SolutionPair, spec: &ProblemSpec, medium: &Medium) -> f64 {
    let fl = fluxes(pair, medium);
    let h = medium.h;
    let mut worst: f64 = 0.0;
    for j in 1..medium.cells() {
        let r = -(fl[j] - fl[j - 1]) / h - spec.source.eval(pair.x[j]);
        worst = worst.max(r.abs());
    }
    worst
}

/// Discrete fluxes `J_{j+1/2}`.
pub fn fluxes(pair: &SolutionPair, medium: &Medium) -> Vec<f64> {
    let h = medium.h;
    (0..medium.cells())
        .map(|j| {
            let abar = 2.0 / (1.0 / medium.a[j] + 1.0 / medium.a[j + 1]);
            abar * (pair.u_eps[j + 1] - pair.u_eps[j]) / h
        })
        .collect()
}

/// `max_j |J_{j+1/2} + F̃_{j+1/2} − c^ε|` with `F̃` the `1/a`-weighted cell
/// average of `F`; the discrete form of the first integral `a u′ + F = c^ε`.
pub fn flux_defect(pair: &SolutionPair, medium: &Medium) -> f64 {
    let fl = fluxes(pair, medium);
    let mut worst: f64 = 0.0;
    for (j, jf) in fl.iter().enumerate() {
        let (w0, w1) = (1.0 / medium.a[j], 1.0 / medium.a[j + 1]);
        let ft = (w0 * pair.big_f[j] + w1 * pair.big_f[j + 1]) / (w0 + w1);
        worst = worst.max((jf + ft - pair.c_eps).abs());
    }
    worst
}
