//! Quasi-periodic equilibria via hull functions.
//!
//! An equilibrium `u_n = nω + ĥ(nωα)` is generated by a zero-average
//! function `ĥ` on the m-torus solving
//!
//! ```text
//! ℰ[ĥ](σ) = ĥ(σ+ωα) + ĥ(σ-ωα) - 2ĥ(σ) + ∂_αV̂(σ + αĥ(σ)) = 0
//! ```
//!
//! `ĥ` is truncated to Fourier modes `0 < |k|_∞ ≤ Kc` and solved by Newton
//! on grid samples with a least-squares linear step. Configurations
//! generated this way are equilibria of `½(x-y)² - V(x)`; see
//! [`Lagrangian::for_hull`](crate::model::Lagrangian::for_hull).

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{for_each_torus_point, Boundary, Configuration, FrequencyModule, QuasiPeriodicPotential};

/// `|l̂|` below this on the grid is reported as degenerate.
pub const DEGENERACY_FLOOR: f64 = 1e-10;

/// Zero-average hull `ĥ(σ) = Σ_k ĥ_k e^{ik·σ}` with `ĥ_{-k} = conj(ĥ_k)`.
///
/// Only one representative of each `±k` pair is stored: the one whose first
/// nonzero entry is positive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HullFunction {
    omega: f64,
    module: FrequencyModule,
    cutoff: usize,
    modes: Vec<Vec<i64>>,
    coeffs: Vec<Complex64>,
}

/// Representatives `k` with `0 < |k|_∞ ≤ cutoff`, first nonzero entry positive.
pub fn representative_modes(m: usize, cutoff: usize) -> Vec<Vec<i64>> {
    let side = 2 * cutoff + 1;
    let c = cutoff as i64;
    let mut out = Vec::new();
    for flat in 0..side.pow(m as u32) {
        let mut rem = flat;
        let k: Vec<i64> = (0..m)
            .map(|_| {
                let v = (rem % side) as i64 - c;
                rem /= side;
                v
            })
            .collect();
        if k.iter().find(|&&v| v != 0).is_some_and(|&v| v > 0) {
            out.push(k);
        }
    }
    out
}

fn dot_k(k: &[i64], sigma: &[f64]) -> f64 {
    k.iter().zip(sigma).map(|(&a, s)| a as f64 * s).sum()
}

impl HullFunction {
    /// `ĥ = 0`.
    pub fn zero(omega: f64, module: FrequencyModule, cutoff: usize) -> Self {
        let modes = representative_modes(module.len(), cutoff);
        let coeffs = vec![Complex64::new(0.0, 0.0); modes.len()];
        HullFunction {
            omega,
            module,
            cutoff,
            modes,
            coeffs,
        }
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn module(&self) -> &FrequencyModule {
        &self.module
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn modes(&self) -> &[Vec<i64>] {
        &self.modes
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// `ĥ_k` for any `k`; `0` outside the cutoff and at `k = 0`.
    pub fn coeff(&self, k: &[i64]) -> Complex64 {
        if let Some(i) = self.modes.iter().position(|m| m == k) {
            return self.coeffs[i];
        }
        let neg: Vec<i64> = k.iter().map(|v| -v).collect();
        match self.modes.iter().position(|m| *m == neg) {
            Some(i) => self.coeffs[i].conj(),
            None => Complex64::new(0.0, 0.0),
        }
    }

    /// Sets `ĥ_k` (and implicitly `ĥ_{-k}`).
    pub fn set_coeff(&mut self, k: &[i64], value: Complex64) -> Result<()> {
        if let Some(i) = self.modes.iter().position(|m| m == k) {
            self.coeffs[i] = value;
            return Ok(());
        }
        let neg: Vec<i64> = k.iter().map(|v| -v).collect();
        match self.modes.iter().position(|m| *m == neg) {
            Some(i) => {
                self.coeffs[i] = value.conj();
                Ok(())
            }
            None => Err(Error::usage(format!("mode {k:?} is outside the cutoff or zero"))),
        }
    }

    /// Real parametrisation `[a; b]` with `ĥ = Σ a_k cos(k·σ) + b_k sin(k·σ)`.
    fn real_params(&self) -> Vec<f64> {
        let mut x: Vec<f64> = self.coeffs.iter().map(|c| 2.0 * c.re).collect();
        x.extend(self.coeffs.iter().map(|c| -2.0 * c.im));
        x
    }

    fn set_real_params(&mut self, x: &[f64]) {
        let p = self.modes.len();
        for i in 0..p {
            self.coeffs[i] = Complex64::new(0.5 * x[i], -0.5 * x[p + i]);
        }
    }

    /// `ĥ(σ)`
    pub fn eval(&self, sigma: &[f64]) -> f64 {
        self.modes
            .iter()
            .zip(&self.coeffs)
            .map(|(k, c)| {
                let t = dot_k(k, sigma);
                2.0 * (c.re * t.cos() - c.im * t.sin())
            })
            .sum()
    }

    /// `∂_αĥ(σ) = Σ_j α_j ∂_{σ_j} ĥ(σ)`
    pub fn d_alpha(&self, sigma: &[f64]) -> f64 {
        self.modes
            .iter()
            .zip(&self.coeffs)
            .map(|(k, c)| {
                let t = dot_k(k, sigma);
                let f = self.module.dot(k);
                -2.0 * f * (c.re * t.sin() + c.im * t.cos())
            })
            .sum()
    }

    /// `l̂(σ) = 1 + ∂_αĥ(σ)`
    pub fn l_hat(&self, sigma: &[f64]) -> f64 {
        1.0 + self.d_alpha(sigma)
    }

    /// Torus point `θα`.
    pub fn torus_point(&self, theta: f64) -> Vec<f64> {
        self.module.alphas().iter().map(|a| theta * a).collect()
    }

    /// `sqrt(Σ_k |ĥ_k|²)` over all `k ≠ 0` (both members of each pair).
    pub fn l2_norm(&self) -> f64 {
        (2.0 * self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>()).sqrt()
    }

    /// Time-shift multiplier `2cos(ω k·α) - 2` of mode `k`.
    fn multiplier(&self, k: &[i64]) -> f64 {
        2.0 * (self.omega * self.module.dot(k)).cos() - 2.0
    }
}

/// Uniform grid with `points` nodes per torus dimension.
fn grid_points(m: usize, points: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(points.pow(m as u32));
    let mut sigma = vec![0.0; m];
    for_each_torus_point(m, points, &mut sigma, &mut |s| out.push(s.to_vec()));
    out
}

fn same_module(a: &FrequencyModule, b: &FrequencyModule) -> Result<()> {
    if a.alphas() != b.alphas() {
        return Err(Error::usage("hull and potential use different frequency modules"));
    }
    Ok(())
}

fn shifted(sigma: &[f64], alphas: &[f64], by: f64) -> Vec<f64> {
    sigma.iter().zip(alphas).map(|(s, a)| s + by * a).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HullResidual {
    /// `ℰ[ĥ]` at each grid node, in grid order (first coordinate fastest).
    pub samples: Vec<f64>,
    pub sup_norm: f64,
    pub grid: usize,
}

/// `ℰ[ĥ]` sampled on a `grid^m` torus grid. The shifts are applied as exact
/// Fourier multipliers; the potential term is composed pointwise.
pub fn hull_residual(h: &HullFunction, v: &QuasiPeriodicPotential, grid: usize) -> Result<HullResidual> {
    same_module(h.module(), v.module())?;
    if grid == 0 {
        return Err(Error::usage("grid must have at least one point per dimension"));
    }
    let alphas = h.module().alphas();
    let mult: Vec<f64> = h.modes.iter().map(|k| h.multiplier(k)).collect();
    let samples: Vec<f64> = grid_points(h.module().len(), grid)
        .iter()
        .map(|s| {
            let shifts: f64 = h
                .modes
                .iter()
                .zip(&h.coeffs)
                .zip(&mult)
                .map(|((k, c), mu)| {
                    let t = dot_k(k, s);
                    2.0 * mu * (c.re * t.cos() - c.im * t.sin())
                })
                .sum();
            let arg = shifted(s, alphas, h.eval(s));
            shifts + v.hat_derivative(&arg, 1)
        })
        .collect();
    let sup_norm = samples.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    Ok(HullResidual { samples, sup_norm, grid })
}

/// `ℰ[ĥ_β]` for the translated hull `ĥ_β(σ) = ĥ(σ+βα) + β`, by direct evaluation.
pub fn sliding_residual(h: &HullFunction, v: &QuasiPeriodicPotential, beta: f64, grid: usize) -> Result<HullResidual> {
    same_module(h.module(), v.module())?;
    let alphas = h.module().alphas();
    let hb = |s: &[f64]| h.eval(&shifted(s, alphas, beta)) + beta;
    let samples: Vec<f64> = grid_points(h.module().len(), grid)
        .iter()
        .map(|s| {
            let plus = hb(&shifted(s, alphas, h.omega));
            let minus = hb(&shifted(s, alphas, -h.omega));
            let here = hb(s);
            plus + minus - 2.0 * here + v.hat_derivative(&shifted(s, alphas, here), 1)
        })
        .collect();
    let sup_norm = samples.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    Ok(HullResidual { samples, sup_norm, grid })
}

// ---------------------------------------------------------------------------
// Diophantine scan
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiophantineParams {
    pub nu: f64,
    pub tau: f64,
    /// Per-frequency weights; `None` means `w_j = j` (1-based).
    pub weights: Option<Vec<f64>>,
    pub k_max: usize,
    pub n_max: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiophantineReport {
    pub nu: f64,
    pub tau: f64,
    pub weights: Vec<f64>,
    pub k_max: usize,
    pub n_max: usize,
    /// `min |ωα·k - 2nπ| · Π_j(1 + w_j^{1+τ}|k_j|^{1+τ}) / ν` over the scan.
    pub worst_ratio: f64,
    pub worst_k: Vec<i64>,
    pub worst_n: i64,
    pub pass: bool,
}

/// Exhaustive scan of `0 < |k|_∞ ≤ K_max`, `|n| ≤ N_max`.
pub fn diophantine_check(omega: f64, module: &FrequencyModule, params: &DiophantineParams) -> Result<DiophantineReport> {
    let DiophantineParams {
        nu,
        tau,
        ref weights,
        k_max,
        n_max,
    } = *params;
    if k_max < 1 || n_max < 1 {
        return Err(Error::usage("K_max and N_max must be at least 1"));
    }
    if !(nu > 0.0 && tau > 0.0) {
        return Err(Error::usage("nu and tau must be positive"));
    }
    let m = module.len();
    let weights = match weights {
        Some(w) if w.len() == m => w.clone(),
        Some(_) => return Err(Error::usage("one weight per frequency is required")),
        None => (1..=m).map(|j| j as f64).collect(),
    };
    let side = 2 * k_max + 1;
    let kc = k_max as i64;
    let mut worst = (f64::INFINITY, Vec::new(), 0i64);
    let mut k = vec![0i64; m];
    for flat in 0..side.pow(m as u32) {
        let mut rem = flat;
        for kj in k.iter_mut() {
            *kj = (rem % side) as i64 - kc;
            rem /= side;
        }
        if k.iter().all(|&v| v == 0) {
            continue;
        }
        let weight: f64 = k
            .iter()
            .zip(&weights)
            .map(|(&kj, w)| 1.0 + w.powf(1.0 + tau) * (kj.abs() as f64).powf(1.0 + tau))
            .product();
        let phase = omega * module.dot(&k);
        for n in -(n_max as i64)..=(n_max as i64) {
            let ratio = (phase - 2.0 * PI * n as f64).abs() * weight / nu;
            if ratio < worst.0 {
                worst = (ratio, k.clone(), n);
            }
        }
    }
    Ok(DiophantineReport {
        nu,
        tau,
        weights,
        k_max,
        n_max,
        worst_ratio: worst.0,
        worst_k: worst.1,
        worst_n: worst.2,
        pass: worst.0 >= 1.0,
    })
}

// ---------------------------------------------------------------------------
// Non-degeneracy
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NondegeneracyReport {
    /// `max |l̂|` on the grid.
    pub n_plus: f64,
    /// `max |1/l̂|` on the grid.
    pub n_minus: f64,
    /// `|⟨1/(l̂ · l̂∘T_{-ωα})⟩|` by grid average.
    pub c: f64,
    pub grid: usize,
}

pub fn nondegeneracy_report(h: &HullFunction, grid: usize) -> Result<NondegeneracyReport> {
    if grid == 0 {
        return Err(Error::usage("grid must have at least one point per dimension"));
    }
    let alphas = h.module().alphas();
    let pts = grid_points(h.module().len(), grid);
    let mut n_plus: f64 = 0.0;
    let mut n_minus: f64 = 0.0;
    let mut sum = 0.0;
    for s in &pts {
        let l = h.l_hat(s);
        if l.abs() < DEGENERACY_FLOOR {
            return Err(Error::Degeneracy(format!("l_hat = {l:e} at sigma = {s:?}")));
        }
        let back = h.l_hat(&shifted(s, alphas, -h.omega));
        n_plus = n_plus.max(l.abs());
        n_minus = n_minus.max(1.0 / l.abs());
        sum += 1.0 / (l * back);
    }
    Ok(NondegeneracyReport {
        n_plus,
        n_minus,
        c: (sum / pts.len() as f64).abs(),
        grid,
    })
}

// ---------------------------------------------------------------------------
// Newton solver
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HullSolveOptions {
    /// Fourier cutoff `Kc` on `|k|_∞`.
    pub cutoff: usize,
    /// Grid nodes per torus dimension; at least `2Kc+1`. `None` uses `4(2Kc+1)`.
    pub grid: Option<usize>,
    pub tol: f64,
    pub max_iter: usize,
    /// Scan run before solving; a failed scan is a warning only.
    pub diophantine: Option<DiophantineParams>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HullSolution {
    pub hull: HullFunction,
    pub iterations: usize,
    /// Residual sup-norm before each step and after the last.
    pub history: Vec<f64>,
    pub residual_sup: f64,
    pub grid: usize,
    pub diophantine: Option<DiophantineReport>,
    pub warnings: Vec<String>,
}

impl HullSolveOptions {
    pub fn grid_points(&self) -> usize {
        self.grid.unwrap_or(4 * (2 * self.cutoff + 1))
    }
}

/// Newton iteration for the truncated hull equation.
pub fn hull_newton_solve(v: &QuasiPeriodicPotential, omega: f64, opts: &HullSolveOptions) -> Result<HullSolution> {
    if !(opts.tol > 0.0) {
        return Err(Error::usage("tolerance must be positive"));
    }
    if opts.cutoff == 0 {
        return Err(Error::usage("Fourier cutoff must be at least 1"));
    }
    if !omega.is_finite() {
        return Err(Error::usage("rotation number must be finite"));
    }
    let grid = opts.grid_points();
    if grid < 2 * opts.cutoff + 1 {
        return Err(Error::usage(format!(
            "grid of {grid} points per dimension is below the minimum 2Kc+1 = {}",
            2 * opts.cutoff + 1
        )));
    }
    let module = v.module().clone();
    let mut warnings = Vec::new();
    let diophantine = match &opts.diophantine {
        Some(p) => {
            let report = diophantine_check(omega, &module, p)?;
            if !report.pass {
                let w = format!(
                    "Diophantine scan failed: worst ratio {:e} at k = {:?}, n = {}",
                    report.worst_ratio, report.worst_k, report.worst_n
                );
                log::warn!("{w}");
                warnings.push(w);
            }
            Some(report)
        }
        None => None,
    };

    let mut hull = HullFunction::zero(omega, module.clone(), opts.cutoff);
    let alphas = module.alphas().to_vec();
    let pts = grid_points(module.len(), grid);
    let p = hull.modes.len();
    let npts = pts.len();
    let cos_b = DMatrix::from_fn(npts, p, |i, j| dot_k(&hull.modes[j], &pts[i]).cos());
    let sin_b = DMatrix::from_fn(npts, p, |i, j| dot_k(&hull.modes[j], &pts[i]).sin());
    let mult: Vec<f64> = hull.modes.iter().map(|k| hull.multiplier(k)).collect();

    let mut x = DVector::from_vec(hull.real_params());
    let evaluate = |x: &DVector<f64>| -> (DVector<f64>, DVector<f64>) {
        let a = x.rows(0, p);
        let b = x.rows(p, p);
        let h_vals = &cos_b * a + &sin_b * b;
        let ma = DVector::from_iterator(p, a.iter().zip(&mult).map(|(v, m)| v * m));
        let mb = DVector::from_iterator(p, b.iter().zip(&mult).map(|(v, m)| v * m));
        let shifts = &cos_b * ma + &sin_b * mb;
        let mut f = DVector::zeros(npts);
        let mut g = DVector::zeros(npts);
        for i in 0..npts {
            let arg = shifted(&pts[i], &alphas, h_vals[i]);
            f[i] = shifts[i] + v.hat_derivative(&arg, 1);
            g[i] = v.hat_derivative(&arg, 2);
        }
        (f, g)
    };

    let (mut f, mut g) = evaluate(&x);
    let mut history = vec![f.amax()];
    loop {
        let res = *history.last().unwrap();
        if !res.is_finite() {
            return Err(Error::convergence("hull residual is not finite", history));
        }
        if res <= opts.tol {
            break;
        }
        let steps = history.len() - 1;
        if steps >= opts.max_iter {
            return Err(Error::convergence(
                format!("hull Newton did not converge within {} iterations", opts.max_iter),
                history,
            ));
        }
        if steps >= 3 && res > 0.9 * history[history.len() - 4] {
            return Err(Error::convergence("hull Newton stagnated", history));
        }
        let mut jac = DMatrix::zeros(npts, 2 * p);
        for j in 0..p {
            for i in 0..npts {
                let w = mult[j] + g[i];
                jac[(i, j)] = w * cos_b[(i, j)];
                jac[(i, p + j)] = w * sin_b[(i, j)];
            }
        }
        let delta = least_squares(jac, f.clone())
            .ok_or_else(|| Error::convergence("least-squares step failed", history.clone()))?;
        x -= delta;
        let next = evaluate(&x);
        f = next.0;
        g = next.1;
        history.push(f.amax());
    }
    hull.set_real_params(x.as_slice());
    Ok(HullSolution {
        iterations: history.len() - 1,
        residual_sup: *history.last().unwrap(),
        history,
        hull,
        grid,
        diophantine,
        warnings,
    })
}

/// Minimum-norm least-squares solution of `J δ = f` via QR then SVD of `R`.
fn least_squares(jac: DMatrix<f64>, mut f: DVector<f64>) -> Option<DVector<f64>> {
    let n = jac.ncols();
    let qr = jac.qr();
    qr.q_tr_mul(&mut f);
    let r = qr.r();
    let rhs = f.rows(0, n).into_owned();
    let svd = r.svd(true, true);
    let smax = svd.singular_values.max();
    let delta = svd.solve(&rhs, 1e-12 * smax.max(f64::MIN_POSITIVE)).ok()?;
    delta.iter().all(|v| v.is_finite()).then_some(delta)
}

// ---------------------------------------------------------------------------
// Sliding family
// ---------------------------------------------------------------------------

/// `u_n(β) = nω + ĥ((nω+β)α) + β` for `n₀ ≤ n ≤ n₁`, clamped to the same
/// formula at `n₀-1` and `n₁+1`.
pub fn sample_configuration(h: &HullFunction, beta: f64, n0: i64, n1: i64) -> Result<Configuration> {
    if n1 <= n0 {
        return Err(Error::usage("need n1 > n0"));
    }
    let u = |n: i64| {
        let theta = n as f64 * h.omega + beta;
        n as f64 * h.omega + h.eval(&h.torus_point(theta)) + beta
    };
    Configuration::scalar(
        n0,
        (n0..=n1).map(u).collect(),
        h.omega,
        Boundary::Clamped {
            left: vec![u(n0 - 1)],
            right: vec![u(n1 + 1)],
        },
    )
}

/// `ξ_n = ∂u_n/∂β = l̂((nω+β)α)` for `n₀ ≤ n ≤ n₁`.
pub fn sliding_mode(h: &HullFunction, beta: f64, n0: i64, n1: i64) -> Vec<f64> {
    (n0..=n1)
        .map(|n| h.l_hat(&h.torus_point(n as f64 * h.omega + beta)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::FourierMode;

    fn golden() -> f64 {
        (5f64.sqrt() - 1.0) / 2.0
    }

    fn golden_module() -> FrequencyModule {
        FrequencyModule::new(vec![1.0, golden()]).unwrap()
    }

    fn two_cosines(eps: f64) -> QuasiPeriodicPotential {
        QuasiPeriodicPotential::new(
            golden_module(),
            vec![
                FourierMode { k: vec![1, 0], amplitude: eps, phase: 0.0 },
                FourierMode { k: vec![0, 1], amplitude: eps, phase: 0.0 },
            ],
        )
        .unwrap()
    }

    #[test]
    fn representatives_cover_half_the_box() {
        assert_eq!(representative_modes(1, 3), vec![vec![1], vec![2], vec![3]]);
        assert_eq!(representative_modes(2, 8).len(), (17 * 17 - 1) / 2);
    }

    #[test]
    fn residual_of_zero_hull_is_potential_derivative() {
        let v = two_cosines(0.3);
        let h = HullFunction::zero(1.0, golden_module(), 3);
        let res = hull_residual(&h, &v, 9).unwrap();
        let pts = grid_points(2, 9);
        for (s, e) in pts.iter().zip(&res.samples) {
            assert!((e - v.hat_derivative(s, 1)).abs() < 1e-15);
        }
        assert!((res.sup_norm - v.sampled_sup(1, 9, |x| x)).abs() < 1e-15);
    }

    #[test]
    fn single_mode_multiplier() {
        let v = QuasiPeriodicPotential::zero(golden_module());
        let omega = 0.7;
        let mut h = HullFunction::zero(omega, golden_module(), 4);
        let k = [2i64, -3];
        let eps = 0.05;
        h.set_coeff(&k, Complex64::new(eps / 2.0, 0.0)).unwrap();
        let mu = 2.0 * (omega * golden_module().dot(&k)).cos() - 2.0;
        let res = hull_residual(&h, &v, 11).unwrap();
        for (s, e) in grid_points(2, 11).iter().zip(&res.samples) {
            let want = eps * mu * dot_k(&k, s).cos();
            assert!((e - want).abs() < 1e-12);
        }
        let zero = hull_residual(&HullFunction::zero(omega, golden_module(), 2), &v, 5).unwrap();
        assert_eq!(zero.sup_norm, 0.0);
    }

    #[test]
    fn module_mismatch_is_usage_error() {
        let v = QuasiPeriodicPotential::zero(FrequencyModule::new(vec![1.0]).unwrap());
        let h = HullFunction::zero(1.0, golden_module(), 2);
        assert!(matches!(hull_residual(&h, &v, 5), Err(Error::Usage(_))));
    }

    #[test]
    fn coefficient_symmetry() {
        let mut h = HullFunction::zero(1.0, golden_module(), 2);
        h.set_coeff(&[-1, 2], Complex64::new(0.1, 0.3)).unwrap();
        assert_eq!(h.coeff(&[1, -2]), Complex64::new(0.1, -0.3));
        assert_eq!(h.coeff(&[0, 0]), Complex64::new(0.0, 0.0));
        assert!(h.set_coeff(&[0, 0], Complex64::new(1.0, 0.0)).is_err());
        assert!(h.set_coeff(&[3, 0], Complex64::new(1.0, 0.0)).is_err());
    }

    #[test]
    fn zero_potential_solves_immediately() {
        let v = QuasiPeriodicPotential::zero(golden_module());
        let opts = HullSolveOptions { cutoff: 4, grid: None, tol: 1e-12, max_iter: 5, diophantine: None };
        let sol = hull_newton_solve(&v, 0.9, &opts).unwrap();
        assert_eq!(sol.iterations, 0);
        assert_eq!(sol.hull.l2_norm(), 0.0);
    }

    #[test]
    fn perturbed_hull_converges_and_scales_linearly() {
        let opts = HullSolveOptions { cutoff: 8, grid: None, tol: 1e-12, max_iter: 20, diophantine: None };
        let full = hull_newton_solve(&two_cosines(0.01), 1.0, &opts).unwrap();
        let half = hull_newton_solve(&two_cosines(0.005), 1.0, &opts).unwrap();
        assert!(full.residual_sup <= 1e-10);
        assert!(half.residual_sup <= 1e-10);
        let ratio = half.hull.l2_norm() / full.hull.l2_norm();
        assert!((ratio - 0.5).abs() <= 0.05, "ratio {ratio}");
    }

    #[test]
    fn newton_steps_keep_zero_average() {
        let opts = HullSolveOptions { cutoff: 6, grid: None, tol: 1e-12, max_iter: 20, diophantine: None };
        let sol = hull_newton_solve(&two_cosines(0.02), 1.0, &opts).unwrap();
        let pts = grid_points(2, 13);
        let mean: f64 = pts.iter().map(|s| sol.hull.eval(s)).sum::<f64>() / pts.len() as f64;
        assert!(mean.abs() < 1e-12);
    }

    #[test]
    fn exact_resonance_is_flagged() {
        let module = FrequencyModule::new(vec![1.0, golden()]).unwrap();
        let report = diophantine_check(
            2.0 * PI,
            &module,
            &DiophantineParams { nu: 0.01, tau: 1.0, weights: None, k_max: 3, n_max: 3 },
        )
        .unwrap();
        assert!(!report.pass);
        assert!(report.worst_ratio < 1e-12);

        let v = QuasiPeriodicPotential::new(
            module,
            vec![FourierMode { k: vec![1, 0], amplitude: 0.01, phase: 0.0 }],
        )
        .unwrap();
        let opts = HullSolveOptions {
            cutoff: 3,
            grid: None,
            tol: 1e-12,
            max_iter: 10,
            diophantine: Some(DiophantineParams { nu: 0.01, tau: 1.0, weights: None, k_max: 3, n_max: 3 }),
        };
        match hull_newton_solve(&v, 2.0 * PI, &opts) {
            Ok(sol) => assert!(!sol.warnings.is_empty()),
            Err(e) => assert!(matches!(e, Error::Convergence { .. })),
        }
    }

    #[test]
    fn diophantine_scan_properties() {
        let module = golden_module();
        let params = |k_max| DiophantineParams { nu: 0.01, tau: 1.0, weights: None, k_max, n_max: 10 };
        let a = diophantine_check(1.0, &module, &params(10)).unwrap();
        let b = diophantine_check(1.0, &module, &params(10)).unwrap();
        assert_eq!(a, b);
        let mut prev = f64::INFINITY;
        for k in 1..=10 {
            let r = diophantine_check(1.0, &module, &params(k)).unwrap().worst_ratio;
            assert!(r <= prev);
            prev = r;
        }
        assert!(diophantine_check(1.0, &module, &DiophantineParams { nu: 0.0, ..params(2) }).is_err());
        assert!(diophantine_check(1.0, &module, &params(0)).is_err());
    }

    #[test]
    fn nondegeneracy_of_zero_and_sine_hulls() {
        let r = nondegeneracy_report(&HullFunction::zero(1.0, golden_module(), 2), 16).unwrap();
        assert_eq!((r.n_plus, r.n_minus, r.c), (1.0, 1.0, 1.0));

        // ĥ = (0.1/α₁) cos σ₁, so ∂_αĥ = -0.1 sin σ₁
        let mut h = HullFunction::zero(1.0, golden_module(), 2);
        h.set_coeff(&[1, 0], Complex64::new(0.05, 0.0)).unwrap();
        let r = nondegeneracy_report(&h, 64).unwrap();
        assert!(r.n_plus >= 1.0 && r.n_plus <= 1.1 + 1e-12);
        assert!(r.n_minus >= 1.0 && r.n_minus <= 1.0 / 0.9 + 1e-12);
        assert!(r.n_plus * r.n_minus >= 1.0);

        let mut h = HullFunction::zero(1.0, golden_module(), 2);
        h.set_coeff(&[1, 0], Complex64::new(0.5, 0.0)).unwrap();
        assert!(matches!(nondegeneracy_report(&h, 64), Err(Error::Degeneracy(_))));
    }

    #[test]
    fn zero_hull_samples_and_sliding() {
        let h = HullFunction::zero(0.5, golden_module(), 2);
        let c = sample_configuration(&h, 0.25, -3, 3).unwrap();
        for (i, u) in c.values().iter().enumerate() {
            assert_eq!(*u, 0.5 * (i as f64 - 3.0) + 0.25);
        }
        let shifted = sample_configuration(&h, 0.25 + 0.125, -3, 3).unwrap();
        for (a, b) in shifted.values().iter().zip(c.values()) {
            assert_eq!(a - b, 0.125);
        }
        assert!(sliding_mode(&h, 0.3, -5, 5).iter().all(|&x| x == 1.0));
        assert!(sample_configuration(&h, 0.0, 2, 2).is_err());
    }
}
