//! Multilevel moving-average sampler for `g`.
//!
//! The kernel decays like `u^{H0−3/2}`, so a truncation window with tail mass
//! below `1e-4` is enormous (about `1.5e7` for `H0 = 0.75`, astronomically
//! more as `H0 → 1`). A single Riemann sum over such a window is out of
//! reach, so the kernel is split with a smooth partition of unity
//! `e = Σ_ℓ e·χ_ℓ`. The piece `χ_ℓ` lives on `[T_{ℓ−1}, T_{ℓ+1}]` with
//! `T_ℓ = K·Δ·2^ℓ` and is discretised on the grid of step `Δ·2^ℓ`. The white
//! noise is shared between levels through Lévy's midpoint refinement (a
//! coarse cell is the sum of its two children), and coarse components are
//! brought to the fine grid by 4-point interpolation. Each level costs
//! `O(K)` per output point of that level, so a path of `N` points costs
//! `O(K·N)` for any window.

use alloc::vec::Vec;
#[allow(unused_imports)] // redundant when std is linked in by dev-dependencies
use num_traits::Float;

use super::KernelSpec;
use crate::error::{Error, Result};
use crate::math::smooth_step;
use crate::quad::{adaptive, singular_head, GaussLegendre};
use crate::rng::NormalStream;

pub const DEFAULT_TAIL_TOLERANCE: f64 = 1e-4;

/// Taps per level; `T_0 = K·Δ`. Must be even.
const K: i64 = 32;
const MAX_LEVELS: usize = 960;

#[derive(Debug, Clone)]
pub struct MovingAverage {
    kernel: KernelSpec,
    delta: f64,
    top: usize,
    tail_mass: f64,
    /// Per level, weights in reversed tap order (see `level_taps`).
    weights: Vec<Vec<f64>>,
}

fn level_taps(level: usize) -> (i64, i64) {
    if level == 0 {
        (0, 2 * K)
    } else {
        (K / 2, 2 * K)
    }
}

impl MovingAverage {
    /// Sampler with the default tail tolerance. `window = None` picks the
    /// smallest admissible window.
    pub fn new(kernel: &KernelSpec, delta: f64, window: Option<f64>) -> Result<Self> {
        Self::with_tolerance(kernel, delta, window, DEFAULT_TAIL_TOLERANCE)
    }

    pub fn with_tolerance(kernel: &KernelSpec, delta: f64, window: Option<f64>, tol: f64) -> Result<Self> {
        check_delta(delta)?;
        let t = |l: usize| K as f64 * delta * 2f64.powi(l as i32);
        let mut needed = None;
        for l in 0..MAX_LEVELS {
            if !t(l + 1).is_finite() {
                break;
            }
            if kernel.tail_energy(t(l)) < tol {
                needed = Some(l);
                break;
            }
        }
        let needed = needed.ok_or(Error::Truncation {
            tail_mass: kernel.tail_energy(t(MAX_LEVELS.min(1000))),
            tolerance: tol,
            required_window: f64::INFINITY,
        })?;
        let top = match window {
            None => needed,
            Some(w) => {
                if !(w > 0.0) {
                    return Err(Error::range("window", w, "must be positive"));
                }
                // largest level whose outer edge T_{L+1} fits in the window
                let mut top = None;
                for l in 0..MAX_LEVELS {
                    if t(l + 1) <= w * (1.0 + 1e-12) {
                        top = Some(l);
                    } else {
                        break;
                    }
                }
                match top {
                    Some(l) if l >= needed => l,
                    _ => {
                        let tail = match top {
                            Some(l) => kernel.tail_energy(t(l)),
                            None => kernel.tail_energy(w * 0.5),
                        };
                        return Err(Error::Truncation {
                            tail_mass: tail,
                            tolerance: tol,
                            required_window: t(needed + 1),
                        });
                    }
                }
            }
        };
        Self::with_levels(kernel, delta, top)
    }

    /// Sampler with levels `0..=top` and no check on the truncated tail.
    pub fn with_levels(kernel: &KernelSpec, delta: f64, top: usize) -> Result<Self> {
        check_delta(delta)?;
        let mut ma = MovingAverage {
            kernel: kernel.clone(),
            delta,
            top,
            tail_mass: 0.0,
            weights: Vec::new(),
        };
        ma.tail_mass = kernel.tail_energy(ma.edge(top as i64));
        ma.weights = (0..=top).map(|l| ma.level_weights(l)).collect();
        Ok(ma)
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Index of the coarsest level.
    pub fn top_level(&self) -> usize {
        self.top
    }

    /// Length of the support of the truncated kernel, `T_{L+1}`.
    pub fn window(&self) -> f64 {
        self.edge(self.top as i64 + 1)
    }

    /// `∫_{T_L}^∞ e²`, an upper bound for the energy removed by truncation.
    pub fn tail_mass(&self) -> f64 {
        self.tail_mass
    }

    /// `C0²·T^{2H0−2}/(2−2H0)` at `T = T_L`, the closed-form bound for `L ≡ 1`.
    pub fn closed_form_tail_bound(&self) -> f64 {
        let h0 = self.kernel.h0;
        let t = self.edge(self.top as i64);
        self.kernel.c0.powi(2) * t.powf(2.0 * h0 - 2.0) / (2.0 - 2.0 * h0)
    }

    fn edge(&self, level: i64) -> f64 {
        K as f64 * self.delta * 2f64.powi(level as i32)
    }

    fn step(&self, level: usize) -> f64 {
        self.delta * 2f64.powi(level as i32)
    }

    fn chi(&self, level: usize, u: f64) -> f64 {
        if u <= 0.0 {
            return 0.0;
        }
        let lv = level as i64;
        let (tl, tn) = (self.edge(lv), self.edge(lv + 1));
        if u >= tn {
            0.0
        } else if u >= tl {
            smooth_step((tn - u) / (tn - tl))
        } else if level == 0 {
            1.0
        } else {
            let tp = self.edge(lv - 1);
            if u <= tp {
                0.0
            } else {
                smooth_step((u - tp) / (tl - tp))
            }
        }
    }

    /// Total taper `Σ_{ℓ≤L} χ_ℓ`.
    fn taper(&self, u: f64) -> f64 {
        let (tl, tn) = (self.edge(self.top as i64), self.edge(self.top as i64 + 1));
        if u <= 0.0 || u >= tn {
            0.0
        } else if u <= tl {
            1.0
        } else {
            smooth_step((tn - u) / (tn - tl))
        }
    }

    /// RMS weight `sqrt(Δ^{-1}∫_cell k²)` so that `Σ c_i²Δ = ∫k²` exactly;
    /// a plain cell mean would lose a third of the variance in the singular
    /// first cell.
    fn energy_weights<F: Fn(f64) -> f64>(&self, k: F, taps: i64) -> Vec<f64> {
        let d = self.delta;
        let gl = GaussLegendre::new(8);
        (0..taps)
            .map(|i| {
                let (lo, hi) = (i as f64 * d, (i + 1) as f64 * d);
                let sq = |u: f64| k(u).powi(2);
                let mass = if i == 0 {
                    singular_head(sq, self.kernel.exponent(), d, 1e-16, 1e-12).value
                } else if i < 4 {
                    adaptive(sq, lo, hi, 1e-16, 1e-12).value
                } else {
                    gl.integrate(sq, lo, hi)
                };
                (mass / d).sqrt()
            })
            .collect()
    }

    fn level_weights(&self, level: usize) -> Vec<f64> {
        let (i0, i1) = level_taps(level);
        let mut w = if level == 0 {
            self.energy_weights(|u| self.kernel.eval(u) * self.chi(0, u), i1)
        } else {
            let d = self.step(level);
            let gl = GaussLegendre::new(8);
            (i0..i1)
                .map(|i| {
                    let (lo, hi) = (i as f64 * d, (i + 1) as f64 * d);
                    gl.integrate(|u| self.kernel.eval(u) * self.chi(level, u), lo, hi) / d
                })
                .collect()
        };
        w.reverse();
        w
    }

    /// White-noise cell increments for every level, given the cell ranges
    /// each level must provide.
    fn noise(&self, seed: u64, needs: &[(i64, i64)]) -> Vec<(i64, Vec<f64>)> {
        let top = needs.len() - 1;
        let mut ranges = needs.to_vec();
        for l in 1..=top {
            let (clo, chi) = ranges[l - 1];
            let (lo, hi) = ranges[l];
            ranges[l] = (lo.min(clo.div_euclid(2)), hi.max(chi.div_euclid(2)));
        }
        let mut out: Vec<(i64, Vec<f64>)> = alloc::vec![(0, Vec::new()); top + 1];
        let (lo, hi) = ranges[top];
        let mut z = NormalStream::new(seed, 2 * top as u64);
        let scale = self.step(top).sqrt();
        let mut cells = alloc::vec![0.0; (hi - lo + 1) as usize];
        z.seek(lo);
        for c in cells.iter_mut() {
            *c = scale * z.next_normal();
        }
        out[top] = (lo, cells);
        for l in (1..=top).rev() {
            let (lower, upper) = out.split_at_mut(l);
            let (plo, parent) = (upper[0].0, &upper[0].1);
            let sigma = 0.5 * self.step(l).sqrt();
            let (lo, hi) = ranges[l - 1];
            let mut d = NormalStream::new(seed, 2 * l as u64 + 1);
            let mut cur_p = i64::MIN;
            let mut cur_d = 0.0;
            let child: Vec<f64> = (lo..=hi)
                .map(|c| {
                    let p = c.div_euclid(2);
                    if p != cur_p {
                        cur_p = p;
                        cur_d = d.at(p);
                    }
                    let half = 0.5 * parent[(p - plo) as usize];
                    if c.rem_euclid(2) == 0 {
                        half + sigma * cur_d
                    } else {
                        half - sigma * cur_d
                    }
                })
                .collect();
            lower[l - 1] = (lo, child);
        }
        out
    }

    /// Samples `g(jΔ)` for `j = 0..=n`.
    pub fn sample(&self, n: usize, seed: u64) -> Vec<f64> {
        let top = self.top;
        let mut points = alloc::vec![(0i64, n as i64); top + 1];
        for l in 1..=top {
            let (lo, hi) = points[l - 1];
            points[l] = (lo.div_euclid(2) - 1, hi.div_euclid(2) + 2);
        }
        let needs: Vec<(i64, i64)> = (0..=top)
            .map(|l| {
                let (i0, i1) = level_taps(l);
                let (lo, hi) = points[l];
                (lo - i1, hi - 1 - i0)
            })
            .collect();
        let noise = self.noise(seed, &needs);

        let mut acc: Vec<f64> = Vec::new();
        for l in (0..=top).rev() {
            let (lo, hi) = points[l];
            let (i0, i1) = level_taps(l);
            let w = &self.weights[l];
            let (nlo, ref cells) = noise[l];
            let mut s: Vec<f64> = (lo..=hi)
                .map(|j| {
                    let start = (j - i1 - nlo) as usize;
                    let len = (i1 - i0) as usize;
                    dot(w, &cells[start..start + len])
                })
                .collect();
            if l < top {
                let (clo, _) = points[l + 1];
                let c = |k: i64| acc[(k - clo) as usize];
                for (v, j) in s.iter_mut().zip(lo..=hi) {
                    let k = j.div_euclid(2);
                    *v += if j.rem_euclid(2) == 0 {
                        c(k)
                    } else {
                        (9.0 * (c(k) + c(k + 1)) - c(k - 1) - c(k + 2)) / 16.0
                    };
                }
            }
            acc = s;
        }
        acc
    }

    /// Single-grid moving average of the tapered kernel `e·Σχ_ℓ`, driven by
    /// the same white noise as [`sample`](Self::sample). Costs `O(n·W/Δ)`;
    /// kept for pathwise comparison.
    pub fn sample_direct(&self, n: usize, seed: u64) -> Vec<f64> {
        let taps = (self.window() / self.delta).round() as i64;
        let mut w = self.energy_weights(|u| self.kernel.eval(u) * self.taper(u), taps);
        w.reverse();
        let mut needs = alloc::vec![(0i64, 0i64); self.top + 1];
        needs[0] = (-taps, n as i64 - 1);
        for l in 1..=self.top {
            needs[l] = (needs[l - 1].0.div_euclid(2), needs[l - 1].1.div_euclid(2));
        }
        let noise = self.noise(seed, &needs);
        let (nlo, ref cells) = noise[0];
        (0..=n as i64)
            .map(|j| {
                let start = (j - taps - nlo) as usize;
                dot(&w, &cells[start..start + taps as usize])
            })
            .collect()
    }

    /// `Σ_i w_i²Δ_ℓ` summed over levels: the variance of the discretised
    /// sampler ignoring the overlap between neighbouring levels.
    pub fn level_energies(&self) -> Vec<f64> {
        self.weights
            .iter()
            .enumerate()
            .map(|(l, w)| w.iter().map(|x| x * x).sum::<f64>() * self.step(l))
            .collect()
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::range("delta", delta, "must be positive and finite"));
    }
    Ok(())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut s = [0.0f64; 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        for k in 0..4 {
            s[k] += a[4 * c + k] * b[4 * c + k];
        }
    }
    let mut t = (s[0] + s[1]) + (s[2] + s[3]);
    for k in 4 * chunks..a.len() {
        t += a[k] * b[k];
    }
    t
}

/// A sampled trajectory of `g` on `x_j = jΔ`, `j = 0..=N`.
#[derive(Debug, Clone)]
pub struct GaussianPath {
    pub delta: f64,
    pub values: Vec<f64>,
    pub seed: u64,
    pub kernel: KernelSpec,
    pub window: f64,
    pub tail_mass: f64,
}

impl GaussianPath {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn x(&self, j: usize) -> f64 {
        j as f64 * self.delta
    }

    /// Right end of the grid.
    pub fn extent(&self) -> f64 {
        self.x(self.values.len().saturating_sub(1))
    }
}

/// Samples `g` on `N+1` grid points. `window = None` chooses the smallest
/// window meeting the default tail tolerance.
pub fn simulate_path(
    spec: &KernelSpec,
    n: usize,
    delta: f64,
    window: Option<f64>,
    seed: u64,
) -> Result<GaussianPath> {
    if n < 1 {
        return Err(Error::range("n", n as f64, "at least one step is required"));
    }
    let ma = MovingAverage::new(spec, delta, window)?;
    Ok(ma.path(n, seed))
}

impl MovingAverage {
    pub fn path(&self, n: usize, seed: u64) -> GaussianPath {
        GaussianPath {
            delta: self.delta,
            values: self.sample(n, seed),
            seed,
            kernel: self.kernel.clone(),
            window: self.window(),
            tail_mass: self.tail_mass,
        }
    }
}
