//! Hermite polynomials, chaos expansions and bounded functions of a given
//! Hermite rank.
//!
//! Everything is expressed against the standard Gaussian measure `ν`, with
//! the probabilists' polynomials `H_0 = 1, H_1 = x, H_{q+1} = xH_q − qH_{q−1}`.

use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
#[allow(unused_imports)] // redundant when std is linked in by dev-dependencies
use num_traits::Float;

use crate::error::{Error, Result};
use crate::gauss_hermite::{GaussHermite, DEFAULT_ORDER};
use crate::math::{factorial, normal_cdf};

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

pub const DEFAULT_TRUNCATION: usize = 30;
pub const RANK_THRESHOLD: f64 = 1e-8;
/// Smallest admissible `|V_m|` (relative) for a declared rank `m`.
pub const LEADING_THRESHOLD: f64 = 1e-6;
const CONDITION_LIMIT: f64 = 1e12;

pub fn hermite_eval(q: usize, x: f64) -> f64 {
    let (mut h0, mut h1) = (1.0, x);
    if q == 0 {
        return h0;
    }
    for k in 1..q {
        let h2 = x * h1 - k as f64 * h0;
        h0 = h1;
        h1 = h2;
    }
    h1
}

/// `H_0(x) .. H_{out.len()-1}(x)`.
pub fn hermite_all(x: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    out[0] = 1.0;
    if out.len() > 1 {
        out[1] = x;
    }
    for k in 2..out.len() {
        out[k] = x * out[k - 1] - (k - 1) as f64 * out[k - 2];
    }
}

/// Coefficients `V_q = ∫ Φ H_q dν`, `q = 0..=Q`.
#[derive(Debug, Clone, PartialEq)]
pub struct HermiteExpansion {
    pub coeffs: Vec<f64>,
    pub quadrature_order: usize,
    /// `∫ Φ² dν` by the same quadrature.
    pub l2_norm_sq: f64,
}

impl HermiteExpansion {
    pub fn truncation(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn l2_norm(&self) -> f64 {
        self.l2_norm_sq.sqrt()
    }

    /// Smallest `q` with `|V_q| > threshold·‖Φ‖`, or `None` if all vanish.
    pub fn rank_with(&self, threshold: f64) -> Option<usize> {
        let scale = self.l2_norm();
        if scale == 0.0 {
            return None;
        }
        self.coeffs.iter().position(|v| v.abs() > threshold * scale)
    }

    pub fn rank(&self) -> Option<usize> {
        self.rank_with(RANK_THRESHOLD)
    }

    /// `Σ V_q²/q!`, which approaches `∫Φ²dν` from below.
    pub fn parseval_sum(&self) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(q, v)| v * v / factorial(q as u32))
            .sum()
    }

    /// Truncated series `Σ V_q H_q(x)/q!`.
    pub fn eval_series(&self, x: f64) -> f64 {
        let mut h = alloc::vec![0.0; self.coeffs.len()];
        hermite_all(x, &mut h);
        self.coeffs
            .iter()
            .zip(&h)
            .enumerate()
            .map(|(q, (v, hq))| v * hq / factorial(q as u32))
            .sum()
    }
}

pub fn expand<F: Fn(f64) -> f64>(phi: F, truncation: usize, quadrature_order: usize) -> Result<HermiteExpansion> {
    if quadrature_order < 2 * truncation {
        return Err(Error::range(
            "quadrature_order",
            quadrature_order as f64,
            format!("must be at least 2Q = {}", 2 * truncation),
        ));
    }
    let gh = GaussHermite::new(quadrature_order);
    expand_with(&phi, truncation, &gh)
}

pub fn expand_with<F: Fn(f64) -> f64 + ?Sized>(phi: &F, truncation: usize, gh: &GaussHermite) -> Result<HermiteExpansion> {
    let mut coeffs = alloc::vec![0.0; truncation + 1];
    let mut h = alloc::vec![0.0; truncation + 1];
    let mut l2 = 0.0;
    for (x, w) in gh.nodes.iter().zip(&gh.weights) {
        let v = phi(*x);
        if !v.is_finite() {
            return Err(Error::InputDomain { x: *x, value: v });
        }
        hermite_all(*x, &mut h);
        for (c, hq) in coeffs.iter_mut().zip(&h) {
            *c += w * v * hq;
        }
        l2 += w * v * v;
    }
    Ok(HermiteExpansion {
        coeffs,
        quadrature_order: gh.order(),
        l2_norm_sq: l2,
    })
}

/// `P_tψ(x) = ∫ψ(e^{−t}x + sqrt(1−e^{−2t})y) ν(dy)`.
pub fn ou_semigroup<F: Fn(f64) -> f64 + ?Sized>(phi: &F, t: f64, x: f64, gh: &GaussHermite) -> f64 {
    if t == 0.0 {
        return phi(x);
    }
    let a = (-t).exp();
    let s = (-(-2.0 * t).exp_m1()).sqrt();
    gh.expect(|y| phi(a * x + s * y))
}

/// Weights `b` solving `Σ_l b_l e^{−k t_l} = δ_{km}` for `k = 0..=m`.
#[derive(Debug, Clone, PartialEq)]
pub struct VandermondeSolution {
    pub nodes: Vec<f64>,
    pub b: Vec<f64>,
    /// `‖A‖_∞·‖A^{-1}‖_∞`.
    pub condition: f64,
    /// `‖Ab − e_m‖_∞`.
    pub residual: f64,
}

impl VandermondeSolution {
    pub fn abs_sum(&self) -> f64 {
        self.b.iter().map(|b| b.abs()).sum()
    }

    /// `Σ_l b_l e^{−k t_l}`.
    pub fn moment(&self, k: usize) -> f64 {
        self.nodes
            .iter()
            .zip(&self.b)
            .map(|(t, b)| b * (-(k as f64) * t).exp())
            .sum()
    }
}

/// Default nodes `t_l = l`, `l = 0..=m`.
pub fn default_nodes(m: usize) -> Vec<f64> {
    (0..=m).map(|l| l as f64).collect()
}

struct Lu {
    a: Vec<f64>,
    piv: Vec<usize>,
    n: usize,
}

impl Lu {
    fn factor(mut a: Vec<f64>, n: usize) -> Result<Lu> {
        let mut piv: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let p = (k..n)
                .max_by(|&i, &j| a[i * n + k].abs().total_cmp(&a[j * n + k].abs()))
                .unwrap();
            if a[p * n + k] == 0.0 {
                return Err(Error::Conditioning {
                    condition: f64::INFINITY,
                    limit: CONDITION_LIMIT,
                });
            }
            if p != k {
                for c in 0..n {
                    a.swap(k * n + c, p * n + c);
                }
                piv.swap(k, p);
            }
            for i in k + 1..n {
                let f = a[i * n + k] / a[k * n + k];
                a[i * n + k] = f;
                for c in k + 1..n {
                    a[i * n + c] -= f * a[k * n + c];
                }
            }
        }
        Ok(Lu { a, piv, n })
    }

    fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x: Vec<f64> = self.piv.iter().map(|&p| rhs[p]).collect();
        for i in 0..n {
            for c in 0..i {
                x[i] -= self.a[i * n + c] * x[c];
            }
        }
        for i in (0..n).rev() {
            for c in i + 1..n {
                x[i] -= self.a[i * n + c] * x[c];
            }
            x[i] /= self.a[i * n + i];
        }
        x
    }
}

pub fn vandermonde_weights(nodes: &[f64]) -> Result<VandermondeSolution> {
    let n = nodes.len();
    if n < 2 {
        return Err(Error::Inconsistent(String::from("at least two nodes are required")));
    }
    for (i, &t) in nodes.iter().enumerate() {
        if !(t >= 0.0 && t.is_finite()) {
            return Err(Error::range("nodes", t, "nodes must be finite and non-negative"));
        }
        if nodes[..i].contains(&t) {
            return Err(Error::range("nodes", t, "nodes must be distinct"));
        }
    }
    let m = n - 1;
    let mut a = alloc::vec![0.0; n * n];
    for k in 0..n {
        for l in 0..n {
            a[k * n + l] = (-(k as f64) * nodes[l]).exp();
        }
    }
    let norm_a = (0..n)
        .map(|k| a[k * n..(k + 1) * n].iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let lu = Lu::factor(a.clone(), n)?;
    let mut rhs = alloc::vec![0.0; n];
    rhs[m] = 1.0;
    let b = lu.solve(&rhs);
    // ‖A^{-1}‖_∞ from the columns of the inverse
    let mut inv_rows = alloc::vec![0.0; n];
    for c in 0..n {
        let mut e = alloc::vec![0.0; n];
        e[c] = 1.0;
        let col = lu.solve(&e);
        for (r, v) in col.iter().enumerate() {
            inv_rows[r] += v.abs();
        }
    }
    let condition = norm_a * inv_rows.iter().cloned().fold(0.0, f64::max);
    if !(condition < CONDITION_LIMIT) {
        return Err(Error::Conditioning {
            condition,
            limit: CONDITION_LIMIT,
        });
    }
    let residual = (0..n)
        .map(|k| {
            let s: f64 = (0..n).map(|l| a[k * n + l] * b[l]).sum();
            (s - rhs[k]).abs()
        })
        .fold(0.0, f64::max);
    Ok(VandermondeSolution {
        nodes: nodes.to_vec(),
        b,
        condition,
        residual,
    })
}

/// A bounded function `ψ` with known range, used as the seed of the
/// semigroup construction.
#[derive(Clone)]
pub struct Psi {
    pub name: String,
    pub f: ScalarFn,
    pub lower: f64,
    pub upper: f64,
}

impl core::fmt::Debug for Psi {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("Psi")
            .field("name", &self.name)
            .field("lower", &self.lower)
            .field("upper", &self.upper)
            .finish()
    }
}

impl Psi {
    pub fn new(name: &str, f: ScalarFn, lower: f64, upper: f64) -> Self {
        Psi {
            name: String::from(name),
            f,
            lower,
            upper,
        }
    }

    /// `1/(1+e^{−(x−1/2)})`. The unshifted logistic is odd about `1/2`, so
    /// its even Hermite coefficients of order ≥ 2 vanish and it cannot seed
    /// an even rank.
    pub fn shifted_logistic() -> Self {
        Psi::new("shifted_logistic", Arc::new(|x: f64| 1.0 / (1.0 + (0.5 - x).exp())), 0.0, 1.0)
    }

    pub fn logistic() -> Self {
        Psi::new("logistic", Arc::new(|x: f64| 1.0 / (1.0 + (-x).exp())), 0.0, 1.0)
    }

    /// Gaussian CDF shifted by `1/2`.
    pub fn shifted_normal_cdf() -> Self {
        Psi::new("shifted_normal_cdf", Arc::new(|x: f64| normal_cdf(x - 0.5)), 0.0, 1.0)
    }

    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "shifted_logistic" => Ok(Self::shifted_logistic()),
            "logistic" => Ok(Self::logistic()),
            "shifted_normal_cdf" => Ok(Self::shifted_normal_cdf()),
            _ => Err(Error::Construction(format!(
                "unknown psi `{name}` (known: shifted_logistic, logistic, shifted_normal_cdf)"
            ))),
        }
    }
}

// Cubic interpolation table; Φ is smooth and |g| > 9 has probability 2e-19.
const TABLE_HALF_WIDTH: f64 = 9.0;
const TABLE_STEP: f64 = 1e-3;

#[derive(Debug)]
struct Table {
    values: Vec<f64>,
}

impl Table {
    fn build(f: &(dyn Fn(f64) -> f64 + Send + Sync)) -> Self {
        let n = (2.0 * TABLE_HALF_WIDTH / TABLE_STEP).round() as usize;
        let values = (0..=n).map(|i| f(-TABLE_HALF_WIDTH + i as f64 * TABLE_STEP)).collect();
        Table { values }
    }

    fn eval(&self, x: f64) -> Option<f64> {
        let s = (x + TABLE_HALF_WIDTH) / TABLE_STEP;
        let i = s.floor();
        if !(i >= 1.0 && (i as usize) + 2 < self.values.len()) {
            return None;
        }
        let k = i as usize;
        let t = s - i;
        let v = &self.values[k - 1..k + 3];
        // 4-point Lagrange on nodes -1, 0, 1, 2
        let l0 = -t * (t - 1.0) * (t - 2.0) / 6.0;
        let l1 = (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0;
        let l2 = -(t + 1.0) * t * (t - 2.0) / 2.0;
        let l3 = (t + 1.0) * t * (t - 1.0) / 6.0;
        Some(l0 * v[0] + l1 * v[1] + l2 * v[2] + l3 * v[3])
    }
}

/// A function `Φ` together with its verified Hermite data.
#[derive(Clone)]
pub struct RankedFunction {
    evaluator: ScalarFn,
    table: Option<Arc<Table>>,
    pub expansion: HermiteExpansion,
    pub declared_rank: usize,
    pub sup_norm_bound: Option<f64>,
    pub description: String,
    pub vandermonde: Option<VandermondeSolution>,
}

impl core::fmt::Debug for RankedFunction {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("RankedFunction")
            .field("description", &self.description)
            .field("declared_rank", &self.declared_rank)
            .field("sup_norm_bound", &self.sup_norm_bound)
            .finish()
    }
}

impl RankedFunction {
    /// Wraps `f`, computes its expansion and checks that its rank is `rank`.
    pub fn new(f: ScalarFn, rank: usize, sup_norm_bound: Option<f64>, description: &str) -> Result<Self> {
        let gh = GaussHermite::new(DEFAULT_ORDER);
        let expansion = expand_with(&*f, DEFAULT_TRUNCATION.max(rank), &gh)?;
        let rf = RankedFunction {
            evaluator: f,
            table: None,
            expansion,
            declared_rank: rank,
            sup_norm_bound,
            description: String::from(description),
            vandermonde: None,
        };
        rf.verify_rank()?;
        Ok(rf)
    }

    fn scale(&self) -> f64 {
        self.expansion.l2_norm().max(1.0)
    }

    fn verify_rank(&self) -> Result<()> {
        let scale = self.scale();
        let m = self.declared_rank;
        for (k, v) in self.expansion.coeffs.iter().take(m).enumerate() {
            if v.abs() >= RANK_THRESHOLD * scale {
                return Err(Error::Construction(format!(
                    "coefficient V_{k} = {v:.3e} does not vanish; rank is below {m}"
                )));
            }
        }
        let vm = self.expansion.coeffs[m];
        if vm.abs() <= LEADING_THRESHOLD * scale {
            return Err(Error::Construction(format!(
                "leading coefficient V_{m} = {vm:.3e} is too small; try a different psi"
            )));
        }
        Ok(())
    }

    /// Enables the interpolation table for fast repeated evaluation.
    pub fn tabulated(mut self) -> Self {
        if self.table.is_none() {
            self.table = Some(Arc::new(Table::build(&*self.evaluator)));
        }
        self
    }

    pub fn eval(&self, x: f64) -> f64 {
        if let Some(t) = &self.table {
            if let Some(v) = t.eval(x) {
                return v;
            }
        }
        (self.evaluator)(x)
    }

    /// Evaluation bypassing the table.
    pub fn eval_exact(&self, x: f64) -> f64 {
        (self.evaluator)(x)
    }

    pub fn evaluator(&self) -> ScalarFn {
        self.evaluator.clone()
    }

    pub fn rank(&self) -> usize {
        self.declared_rank
    }

    /// `V_m`, the leading coefficient.
    pub fn leading_coefficient(&self) -> f64 {
        self.expansion.coeffs[self.declared_rank]
    }

    /// The constant function; rank 0 unless `c = 0`.
    pub fn constant(c: f64) -> Self {
        let expansion = HermiteExpansion {
            coeffs: {
                let mut v = alloc::vec![0.0; DEFAULT_TRUNCATION + 1];
                v[0] = c;
                v
            },
            quadrature_order: DEFAULT_ORDER,
            l2_norm_sq: c * c,
        };
        RankedFunction {
            evaluator: Arc::new(move |_| c),
            table: None,
            expansion,
            declared_rank: 0,
            sup_norm_bound: Some(c.abs()),
            description: format!("constant {c}"),
            vandermonde: None,
        }
    }
}

/// `Φ = H_m`, the function whose limit is the plain Hermite process.
pub fn pure_hermite(m: usize) -> Result<RankedFunction> {
    if m == 0 {
        return Err(Error::range("m", 0.0, "rank must be positive"));
    }
    let mut coeffs = alloc::vec![0.0; DEFAULT_TRUNCATION.max(m) + 1];
    coeffs[m] = factorial(m as u32);
    Ok(RankedFunction {
        evaluator: Arc::new(move |x| hermite_eval(m, x)),
        table: None,
        expansion: HermiteExpansion {
            coeffs,
            quadrature_order: DEFAULT_ORDER,
            l2_norm_sq: factorial(m as u32),
        },
        declared_rank: m,
        sup_norm_bound: None,
        description: format!("H_{m}"),
        vandermonde: None,
    })
}

/// `Φ = Σ_l b_l P_{t_l} ψ̃` with `ψ̃` an affine rescaling of `psi` into
/// `[0, 1/(2a*Σ|b_l|)]`, so that `‖Φ‖_∞ ≤ 1/(2a*)` and `V_k(Φ) = 0` for `k < m`.
pub fn construct_rank_m(m: usize, a_star: f64, psi: &Psi, nodes: Option<&[f64]>) -> Result<RankedFunction> {
    if m == 0 {
        return Err(Error::range("m", 0.0, "rank must be positive"));
    }
    check_a_star(a_star)?;
    let nodes: Vec<f64> = match nodes {
        Some(n) => n.to_vec(),
        None => default_nodes(m),
    };
    if nodes.len() != m + 1 {
        return Err(Error::Inconsistent(format!(
            "rank {m} needs {} nodes, got {}",
            m + 1,
            nodes.len()
        )));
    }
    let sol = vandermonde_weights(&nodes)?;
    let width = psi.upper - psi.lower;
    if !(width > 0.0 && width.is_finite()) {
        return Err(Error::Construction(format!("psi `{}` has an empty or unbounded range", psi.name)));
    }
    let bound = (1.0 - 1e-6) / (2.0 * a_star * sol.abs_sum());
    let scale = bound / width;
    let lower = psi.lower;
    let raw = psi.f.clone();
    let scaled: ScalarFn = Arc::new(move |x| ((raw)(x) - lower) * scale);

    let gh = Arc::new(GaussHermite::new(DEFAULT_ORDER));
    let psi_exp = expand_with(&*scaled, m, &gh)?;
    let am = psi_exp.coeffs[m];
    let psi_scale = psi_exp.l2_norm();
    if am.abs() <= 1e-10 * psi_scale.max(f64::MIN_POSITIVE) {
        return Err(Error::Construction(format!(
            "psi `{}` has vanishing Hermite coefficient of order {m}; choose a different psi",
            psi.name
        )));
    }
    let ts = nodes.clone();
    let bs = sol.b.clone();
    let gh2 = gh.clone();
    let f: ScalarFn = Arc::new(move |x| {
        ts.iter()
            .zip(&bs)
            .map(|(t, b)| b * ou_semigroup(&*scaled, *t, x, &gh2))
            .sum()
    });
    let mut rf = RankedFunction::new(f, m, Some(1.0 / (2.0 * a_star)), &format!("ou_vandermonde(m={m}, psi={})", psi.name))?;
    rf.vandermonde = Some(sol);
    Ok(rf)
}

/// Coefficients and sup of `Ψ = b_1(h_1 − ∫h_1) − a_1(h_2 − ∫h_2)`.
pub fn construct_rank_2_bounded(a_star: f64, h1: ScalarFn, h2: ScalarFn) -> Result<RankedFunction> {
    check_a_star(a_star)?;
    let gh = GaussHermite::new(DEFAULT_ORDER);
    let e1 = expand_with(&*h1, 2, &gh)?;
    let e2 = expand_with(&*h2, 2, &gh)?;
    let (m1, a1) = (e1.coeffs[0], e1.coeffs[1]);
    let (m2, b1) = (e2.coeffs[0], e2.coeffs[1]);
    let (g1, g2) = (h1.clone(), h2.clone());
    let psi = move |x: f64| b1 * ((g1)(x) - m1) - a1 * ((g2)(x) - m2);
    let v2 = b1 * e1.coeffs[2] - a1 * e2.coeffs[2];
    let sup = sup_abs(&psi, -50.0, 50.0, 200_001);
    if !(sup > 0.0) || v2.abs() <= 1e-10 * sup {
        return Err(Error::Construction(String::from(
            "degenerate pair: the combined function vanishes or has V_2 = 0",
        )));
    }
    let c = 1.0 / (2.0 * a_star * sup);
    let f: ScalarFn = Arc::new(move |x| c * psi(x));
    RankedFunction::new(f, 2, Some(1.0 / (2.0 * a_star)), "rank2_bounded")
}

pub fn sin_cos_pair() -> (ScalarFn, ScalarFn) {
    (Arc::new(|x: f64| x.sin()), Arc::new(|x: f64| x.cos()))
}

fn check_a_star(a_star: f64) -> Result<()> {
    if !(a_star > 0.0 && a_star.is_finite()) {
        return Err(Error::range("a_star", a_star, "must be positive and finite"));
    }
    Ok(())
}

/// `max |f|` on a grid, refined by golden-section search around the best
/// grid point.
pub fn sup_abs<F: Fn(f64) -> f64 + ?Sized>(f: &F, lo: f64, hi: f64, n: usize) -> f64 {
    let h = (hi - lo) / (n - 1) as f64;
    let mut best = (0.0f64, lo);
    for i in 0..n {
        let x = lo + i as f64 * h;
        let v = f(x).abs();
        if v > best.0 {
            best = (v, x);
        }
    }
    let (mut a, mut b) = (best.1 - h, best.1 + h);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..80 {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        if f(c).abs() > f(d).abs() {
            b = d;
        } else {
            a = c;
        }
    }
    best.0.max(f(0.5 * (a + b)).abs())
}

/// `a(x) = (Φ(g(x)) + 1/a*)^{−1}` as a function of the Gaussian value.
#[derive(Debug, Clone)]
pub struct CoefficientSampler {
    pub phi: RankedFunction,
    pub a_star: f64,
    /// `r ≤ a ≤ 1/r` style bounds `(a_min, a_max)`.
    pub bounds: (f64, f64),
}

impl CoefficientSampler {
    pub fn new(phi: RankedFunction, a_star: f64) -> Result<Self> {
        check_a_star(a_star)?;
        let sup = phi.sup_norm_bound.ok_or_else(|| {
            Error::Construction(format!("{} is not bounded; a(x) would not be positive", phi.description))
        })?;
        if !(sup < 1.0 / a_star) {
            return Err(Error::Construction(format!(
                "sup |Phi| = {sup} must be strictly below 1/a* = {}",
                1.0 / a_star
            )));
        }
        let bounds = (1.0 / (1.0 / a_star + sup), 1.0 / (1.0 / a_star - sup));
        Ok(CoefficientSampler {
            phi: phi.tabulated(),
            a_star,
            bounds,
        })
    }

    /// `q = Φ(g)`.
    pub fn q(&self, g: f64) -> f64 {
        self.phi.eval(g)
    }

    /// `1/a = Φ(g) + 1/a*`.
    pub fn inv_a(&self, g: f64) -> f64 {
        self.phi.eval(g) + 1.0 / self.a_star
    }

    pub fn a(&self, g: f64) -> f64 {
        1.0 / self.inv_a(g)
    }

    /// `r` with `r ≤ a ≤ 1/r`.
    pub fn ellipticity(&self) -> f64 {
        self.bounds.0.min(1.0 / self.bounds.1)
    }
}

pub fn coefficient_sampler(phi: RankedFunction, a_star: f64) -> Result<CoefficientSampler> {
    CoefficientSampler::new(phi, a_star)
}

pub fn boxed<F: Fn(f64) -> f64 + Send + Sync + 'static>(f: F) -> ScalarFn {
    Arc::new(f)
}

#[allow(dead_code)]
fn assert_send_sync() {
    fn is<T: Send + Sync>() {}
    is::<RankedFunction>();
    is::<CoefficientSampler>();
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    #[test]
    fn small_polynomials() {
        assert_eq!(hermite_eval(0, 4.0), 1.0);
        assert_eq!(hermite_eval(1, 4.0), 4.0);
        assert_eq!(hermite_eval(2, 3.0), 8.0);
        assert_eq!(hermite_eval(3, 2.0), 2.0);
        assert_eq!(hermite_eval(4, 1.0), 1.0 - 6.0 + 3.0);
    }

    #[test]
    fn orthogonality() {
        let gh = GaussHermite::new(DEFAULT_ORDER);
        for p in 0..=10 {
            for q in 0..=10 {
                let v = gh.expect(|x| hermite_eval(p, x) * hermite_eval(q, x));
                let want = if p == q { factorial(q as u32) } else { 0.0 };
                // relative to ‖H_p‖‖H_q‖ = sqrt(p!q!)
                let scale = (factorial(p as u32) * factorial(q as u32)).sqrt();
                assert!((v - want).abs() < 1e-10 * scale, "p={p} q={q} v={v}");
            }
        }
    }

    #[test]
    fn expansion_examples() {
        let e = expand(|x| hermite_eval(3, x), 8, 200).unwrap();
        for (q, v) in e.coeffs.iter().enumerate() {
            let want = if q == 3 { 6.0 } else { 0.0 };
            assert!((v - want).abs() < 1e-10);
        }
        let e = expand(|x| x * x, 6, 200).unwrap();
        assert!((e.coeffs[0] - 1.0).abs() < 1e-12);
        assert!(e.coeffs[1].abs() < 1e-12);
        assert!((e.coeffs[2] - 2.0).abs() < 1e-12);
        assert_eq!(e.rank(), Some(0));
    }

    #[test]
    fn indicator_expansion() {
        // Gauss-Hermite converges slowly for a jump; use a smooth odd proxy
        // whose leading coefficient is known to be 1/sqrt(2π) in the limit.
        let e = expand(|x| if x > 0.0 { 0.5 } else if x < 0.0 { -0.5 } else { 0.0 }, 4, 200).unwrap();
        let want = 1.0 / (2.0 * PI).sqrt();
        assert!((e.coeffs[1] - want).abs() < 1e-2, "{}", e.coeffs[1]);
        assert!(e.coeffs[2].abs() < 1e-12);
        assert_eq!(e.rank(), Some(1));
    }

    #[test]
    fn non_finite_is_rejected() {
        let r = expand(|x| 1.0 / x.sin(), 4, 201);
        assert!(matches!(r, Err(Error::InputDomain { .. })));
        assert!(expand(|x| x, 30, 40).is_err());
    }

    #[test]
    fn semigroup_eigenfunctions() {
        let gh = GaussHermite::new(DEFAULT_ORDER);
        for q in 0..=6 {
            for &t in &[0.3, 1.0, 2.5] {
                for &x in &[-1.7, 0.2, 2.4] {
                    let v = ou_semigroup(&|y| hermite_eval(q, y), t, x, &gh);
                    let want = (-(q as f64) * t).exp() * hermite_eval(q, x);
                    assert!((v - want).abs() <= 1e-8 * want.abs().max(1e-3), "q={q}");
                }
            }
        }
        assert_eq!(ou_semigroup(&|y: f64| y.sin(), 0.0, 0.7, &gh), 0.7f64.sin());
    }

    #[test]
    fn two_node_closed_form() {
        let s = vandermonde_weights(&[0.0, 1.0]).unwrap();
        let b0 = 1.0 / (1.0 - (-1.0f64).exp());
        assert!((s.b[0] - b0).abs() < 1e-12);
        assert!((s.b[1] + b0).abs() < 1e-12);
        assert!(s.residual < 1e-14);
    }

    #[test]
    fn repeated_nodes_fail() {
        assert!(vandermonde_weights(&[0.0, 1.0, 1.0]).is_err());
        assert!(vandermonde_weights(&[0.0, -1.0]).is_err());
        assert!(matches!(
            vandermonde_weights(&[0.0, 1e-9, 2e-9, 3e-9]),
            Err(Error::Conditioning { .. })
        ));
    }

    #[test]
    fn plain_logistic_fails_for_even_rank() {
        let r = construct_rank_m(2, 1.0, &Psi::logistic(), None);
        assert!(matches!(r, Err(Error::Construction(_))), "{r:?}");
        assert!(construct_rank_m(1, 1.0, &Psi::logistic(), None).is_ok());
    }

    #[test]
    fn rank2_from_sin_cos() {
        let (h1, h2) = sin_cos_pair();
        let phi = construct_rank_2_bounded(1.0, h1, h2).unwrap();
        assert!(phi.expansion.coeffs[0].abs() < 1e-10);
        assert!(phi.expansion.coeffs[1].abs() < 1e-10);
        assert!(phi.expansion.coeffs[2].abs() > 1e-6);
        // Φ = −(cos x − e^{−1/2})/(2(1+e^{−1/2})) up to sign of the sup scaling
        let s = (-0.5f64).exp();
        let want = -(0.3f64.cos() - s) / (2.0 * (1.0 + s));
        assert!((phi.eval(0.3) - want).abs() < 1e-9);
    }

    #[test]
    fn sampler_bounds() {
        let zero = RankedFunction::constant(0.0);
        let s = CoefficientSampler::new(zero, 1.5).unwrap();
        assert_eq!(s.a(0.3), 1.5);
        assert_eq!(s.q(0.3), 0.0);
        assert!(CoefficientSampler::new(pure_hermite(1).unwrap(), 1.0).is_err());
        assert!(CoefficientSampler::new(RankedFunction::constant(1.0), 1.0).is_err());
    }

    #[test]
    fn table_matches_exact() {
        let phi = construct_rank_m(2, 1.0, &Psi::shifted_logistic(), None).unwrap().tabulated();
        let mut worst: f64 = 0.0;
        for i in 0..2000 {
            let x = -10.0 + i as f64 * 0.01037;
            worst = worst.max((phi.eval(x) - phi.eval_exact(x)).abs());
        }
        assert!(worst < 1e-12, "{worst}");
    }
}
