//! Equilibrium configurations on finite windows.
//!
//! The residual at site `n` is `D₁L(u_n, u_{n+1}) + D₂L(u_{n-1}, u_n)`, i.e.
//!
//! ```text
//! ∇I(u_n - u_{n+1}) - ∇I(u_{n-1} - u_n) + λ∇V(u_n)
//! ```
//!
//! For the scalar chain `½(x-y)² + V(x)` this is `2u_n - u_{n+1} - u_{n-1} + V'(u_n)`.
//! The sign is fixed by the Lagrangian; its Jacobian is exactly the window
//! Hessian assembled in [`crate::phonon`].

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    axis_grid, for_each_product_point, interaction_bound_k, sigma_max, sigma_min, Boundary, Configuration,
    Lagrangian, Potential, WellPotential,
};
use crate::phonon::assemble_hessian_window;
use crate::spectral::{spectral_extrema, DENSE_LIMIT};

/// Below this `abs_min` the Newton Jacobian is treated as singular.
pub const SINGULAR_ABS_MIN: f64 = 1e-12;

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn norm(a: &[f64]) -> f64 {
    a.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Sup-norm of a flat field.
pub fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Window sites whose equation is evaluated, and their neighbours.
pub(crate) struct Stencil<'a> {
    config: &'a Configuration,
}

impl<'a> Stencil<'a> {
    pub(crate) fn new(config: &'a Configuration) -> Self {
        Stencil { config }
    }

    /// Local positions of the sites that carry an equation.
    pub(crate) fn rows(&self) -> std::ops::Range<usize> {
        match self.config.boundary() {
            Boundary::Clamped { .. } => 0..self.config.len(),
            Boundary::Free => 1..self.config.len() - 1,
        }
    }

    pub(crate) fn left(&self, i: usize) -> &'a [f64] {
        match (i, self.config.boundary()) {
            (0, Boundary::Clamped { left, .. }) => left,
            _ => self.config.site(i - 1),
        }
    }

    pub(crate) fn right(&self, i: usize) -> &'a [f64] {
        match self.config.boundary() {
            Boundary::Clamped { right, .. } if i + 1 == self.config.len() => right,
            _ => self.config.site(i + 1),
        }
    }
}

/// Equilibrium residual on the interior sites, flattened (`d` entries per site).
///
/// Clamped windows report every site; free windows report `n₀+1 … n₁-1`.
pub fn residual(lagrangian: &Lagrangian, config: &Configuration) -> Result<Vec<f64>> {
    if config.len() < 3 {
        return Err(Error::usage("window too short for a residual"));
    }
    if config.dim() != lagrangian.dim() {
        return Err(Error::usage("configuration and Lagrangian dimensions differ"));
    }
    let st = Stencil::new(config);
    let mut out = Vec::with_capacity(config.values().len());
    for i in st.rows() {
        let u = config.site(i);
        let forward = lagrangian.bond_force(u, st.right(i));
        let backward = lagrangian.bond_force(st.left(i), u);
        let onsite = lagrangian.onsite_force(u);
        for a in 0..config.dim() {
            out.push(forward[a] - backward[a] + onsite[a]);
        }
    }
    Ok(out)
}

/// Converged window solve.
#[derive(Debug, Clone, PartialEq)]
pub struct NewtonSolution {
    pub configuration: Configuration,
    pub iterations: usize,
    /// Residual sup-norm before each step and after the last one.
    pub history: Vec<f64>,
}

struct NewtonRun {
    configuration: Configuration,
    history: Vec<f64>,
    failure: Option<String>,
}

fn newton_iterate(lagrangian: &Lagrangian, start: &Configuration, tol: f64, max_iter: usize, damping: f64) -> Result<NewtonRun> {
    if !(tol > 0.0) {
        return Err(Error::usage("tolerance must be positive"));
    }
    if !(damping > 0.0 && damping <= 1.0) {
        return Err(Error::usage("damping must lie in (0, 1]"));
    }
    if !matches!(start.boundary(), Boundary::Clamped { .. }) {
        return Err(Error::usage("Newton window solves require clamped boundaries"));
    }
    let mut config = start.clone();
    let mut f = residual(lagrangian, &config)?;
    let mut history = vec![sup_norm(&f)];
    let fail = |config: Configuration, history: Vec<f64>, msg: String| {
        Ok(NewtonRun {
            configuration: config,
            history,
            failure: Some(msg),
        })
    };
    for iter in 0..=max_iter {
        let res = *history.last().unwrap();
        if !res.is_finite() {
            return fail(config, history, "residual is not finite".into());
        }
        if res <= tol {
            return Ok(NewtonRun {
                configuration: config,
                history,
                failure: None,
            });
        }
        if iter == max_iter {
            return fail(config, history, format!("no convergence within {max_iter} iterations"));
        }
        let h = assemble_hessian_window(lagrangian, &config)?;
        if h.dim() == 1 || h.order() <= DENSE_LIMIT {
            let ext = spectral_extrema(&h, 1e-14)?;
            if ext.abs_min < SINGULAR_ABS_MIN {
                return fail(
                    config,
                    history,
                    format!("singular Jacobian (abs_min {:e})", ext.abs_min),
                );
            }
        }
        let Some(step) = h.solve(&f) else {
            return fail(config, history, "singular pivot in banded solve".into());
        };
        let values: Vec<f64> = config
            .values()
            .iter()
            .zip(&step)
            .map(|(u, s)| u - damping * s)
            .collect();
        config = config.with_values(values)?;
        f = residual(lagrangian, &config)?;
        history.push(sup_norm(&f));
    }
    unreachable!()
}

/// Damped Newton for `DΦ(u) = 0` on a clamped window.
pub fn newton_solve_window(
    lagrangian: &Lagrangian,
    start: &Configuration,
    tol: f64,
    max_iter: usize,
    damping: f64,
) -> Result<NewtonSolution> {
    let run = newton_iterate(lagrangian, start, tol, max_iter, damping)?;
    match run.failure {
        Some(msg) => Err(Error::convergence(msg, run.history)),
        None => Ok(NewtonSolution {
            configuration: run.configuration,
            iterations: run.history.len() - 1,
            history: run.history,
        }),
    }
}

// ---------------------------------------------------------------------------
// Zero sets and the Aubry criterion
// ---------------------------------------------------------------------------

/// Candidate zero set `O` of `ψ = ∇V`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ZeroSet {
    /// `{ offset + Σ_j c_j g_j : c ∈ ℤ^d }` for each offset.
    Lattice {
        generators: Vec<Vec<f64>>,
        offsets: Vec<Vec<f64>>,
    },
    Points { points: Vec<Vec<f64>> },
}

impl ZeroSet {
    /// One-dimensional lattice `spacing·ℤ + offset`.
    pub fn scalar_lattice(spacing: f64, offset: f64) -> Self {
        ZeroSet::Lattice {
            generators: vec![vec![spacing]],
            offsets: vec![vec![offset]],
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            ZeroSet::Lattice { generators, .. } => generators.len(),
            ZeroSet::Points { points } => points.first().map_or(0, |p| p.len()),
        }
    }

    /// Checks dimensions and that lattice generators are independent.
    pub fn validate(&self) -> Result<()> {
        match self {
            ZeroSet::Lattice { generators, offsets } => {
                let d = generators.len();
                if d == 0 || offsets.is_empty() {
                    return Err(Error::usage("lattice needs generators and at least one offset"));
                }
                if generators.iter().chain(offsets).any(|g| g.len() != d) {
                    return Err(Error::usage("lattice vectors must have dimension equal to their count"));
                }
                if self.basis_inverse().is_none() {
                    return Err(Error::usage("lattice generators are linearly dependent"));
                }
            }
            ZeroSet::Points { points } => {
                if points.is_empty() {
                    return Err(Error::usage("explicit zero set is empty"));
                }
                let d = points[0].len();
                if points.iter().any(|p| p.len() != d) {
                    return Err(Error::usage("zero-set points have mixed dimensions"));
                }
            }
        }
        Ok(())
    }

    fn basis_inverse(&self) -> Option<DMatrix<f64>> {
        match self {
            ZeroSet::Lattice { generators, .. } => {
                let d = generators.len();
                let g = DMatrix::from_fn(d, d, |a, j| generators[j][a]);
                g.try_inverse()
            }
            ZeroSet::Points { .. } => None,
        }
    }

    fn lattice_point(generators: &[Vec<f64>], offset: &[f64], coeffs: &[i64]) -> Vec<f64> {
        let mut p = offset.to_vec();
        for (c, g) in coeffs.iter().zip(generators) {
            for (pa, ga) in p.iter_mut().zip(g) {
                *pa += *c as f64 * ga;
            }
        }
        p
    }

    /// Closest point of `O` to `x` and its distance.
    pub fn nearest(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let mut best = (f64::INFINITY, Vec::new());
        match self {
            ZeroSet::Points { points } => {
                for p in points {
                    let dist = norm(&sub(x, p));
                    if dist < best.0 {
                        best = (dist, p.clone());
                    }
                }
            }
            ZeroSet::Lattice { generators, offsets } => {
                let inv = self.basis_inverse().expect("validated lattice");
                let d = generators.len();
                for off in offsets {
                    let rel = nalgebra::DVector::from_vec(sub(x, off));
                    let c = &inv * rel;
                    let axes: Vec<Vec<f64>> = (0..d)
                        .map(|j| {
                            let f = c[j].floor();
                            vec![f - 1.0, f, f + 1.0, f + 2.0]
                        })
                        .collect();
                    for_each_product_point(&axes, &mut |cf| {
                        let coeffs: Vec<i64> = cf.iter().map(|v| *v as i64).collect();
                        let p = Self::lattice_point(generators, off, &coeffs);
                        let dist = norm(&sub(x, &p));
                        if dist < best.0 {
                            best = (dist, p);
                        }
                    });
                }
            }
        }
        best
    }

    /// Points of `O` inside the box `[lo, hi]`.
    pub fn points_in_box(&self, lo: &[f64], hi: &[f64]) -> Vec<Vec<f64>> {
        let inside = |p: &[f64]| {
            p.iter()
                .zip(lo.iter().zip(hi))
                .all(|(v, (a, b))| *v >= a - 1e-12 && *v <= b + 1e-12)
        };
        match self {
            ZeroSet::Points { points } => points.iter().filter(|p| inside(p)).cloned().collect(),
            ZeroSet::Lattice { generators, offsets } => {
                let inv = self.basis_inverse().expect("validated lattice");
                let d = generators.len();
                let corners: Vec<Vec<f64>> = (0..(1usize << d))
                    .map(|mask| (0..d).map(|a| if mask >> a & 1 == 1 { hi[a] } else { lo[a] }).collect())
                    .collect();
                let mut out = Vec::new();
                for off in offsets {
                    let mut cmin = vec![f64::INFINITY; d];
                    let mut cmax = vec![f64::NEG_INFINITY; d];
                    for corner in &corners {
                        let c = &inv * nalgebra::DVector::from_vec(sub(corner, off));
                        for j in 0..d {
                            cmin[j] = cmin[j].min(c[j]);
                            cmax[j] = cmax[j].max(c[j]);
                        }
                    }
                    let axes: Vec<Vec<f64>> = (0..d)
                        .map(|j| {
                            let a = cmin[j].floor() as i64 - 1;
                            let b = cmax[j].ceil() as i64 + 1;
                            (a..=b).map(|v| v as f64).collect()
                        })
                        .collect();
                    for_each_product_point(&axes, &mut |cf| {
                        let coeffs: Vec<i64> = cf.iter().map(|v| *v as i64).collect();
                        let p = Self::lattice_point(generators, off, &coeffs);
                        if inside(&p) {
                            out.push(p);
                        }
                    });
                }
                out.sort_by(|a, b| a.iter().zip(b).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal));
                out.dedup_by(|a, b| norm(&sub(a, b)) < 1e-12);
                out
            }
        }
    }
}

/// Vector field `ψ: ℝ^d → ℝ^d`, optionally with its Jacobian.
pub trait GradientField {
    fn dim(&self) -> usize;
    fn eval(&self, x: &[f64]) -> Vec<f64>;
    fn jacobian(&self, _x: &[f64]) -> Option<DMatrix<f64>> {
        None
    }
}

impl GradientField for WellPotential {
    fn dim(&self) -> usize {
        Potential::dim(self)
    }

    fn eval(&self, x: &[f64]) -> Vec<f64> {
        self.gradient(x)
    }

    fn jacobian(&self, x: &[f64]) -> Option<DMatrix<f64>> {
        Some(self.hessian(x))
    }
}

/// Field given by a closure, without a Jacobian.
pub struct FnField<F> {
    pub dim: usize,
    pub f: F,
}

impl<F: Fn(&[f64]) -> Vec<f64>> GradientField for FnField<F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, x: &[f64]) -> Vec<f64> {
        (self.f)(x)
    }
}

/// Outcome of one Aubry condition on the sampled domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionVerdict {
    pub pass: bool,
    /// Tightest sampled value: largest nearest-point distance for (1),
    /// largest `‖ψ(z)‖` for (2), smallest expansion ratio for (3).
    pub worst: f64,
    pub witness: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LipschitzMethod {
    /// `d = 1`, `ψ` monotone on each ball: `min |ψ'| ≥ m`.
    MonotoneDerivative,
    /// `d = 1`, `ψ` monotone, no derivative: consecutive secant slopes.
    MonotoneSecant,
    /// All pairs of sampled ball points.
    SampledPairs,
}

/// Result of checking the Aubry criterion for `ψ` on a bounded box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AubryCertificate {
    pub zero_set: ZeroSet,
    pub big_r: f64,
    pub r: f64,
    pub m: f64,
    pub grid: f64,
    pub zero_tol: f64,
    pub domain_lo: Vec<f64>,
    pub domain_hi: Vec<f64>,
    pub norm: String,
    pub covering: ConditionVerdict,
    pub zeros: ConditionVerdict,
    pub expansion: ConditionVerdict,
    pub expansion_method: LipschitzMethod,
    /// Smallest singular value of `∇ψ` sampled on the balls (`d > 1`, when available).
    pub jacobian_min_singular: Option<f64>,
    pub pass: bool,
}

/// Parameters of [`check_aubry_criterion`].
#[derive(Debug, Clone, PartialEq)]
pub struct AubryParams {
    pub big_r: f64,
    pub r: f64,
    pub m: f64,
    pub domain_lo: Vec<f64>,
    pub domain_hi: Vec<f64>,
    /// Sampling step.
    pub grid: f64,
    /// `‖ψ(z)‖` at or below this counts as zero.
    pub zero_tol: f64,
}

/// Sample points of the closed ball `B̄_r(z)` on a grid anchored at `z`.
fn ball_samples(z: &[f64], r: f64, step: f64) -> Vec<Vec<f64>> {
    let half = {
        let mut v = axis_grid(0.0, r, step);
        let neg: Vec<f64> = v.iter().skip(1).map(|x| -x).collect();
        v.extend(neg);
        v.sort_by(f64::total_cmp);
        v
    };
    let axes: Vec<Vec<f64>> = z.iter().map(|c| half.iter().map(|h| c + h).collect()).collect();
    let mut out = Vec::new();
    let limit = r * (1.0 + 1e-12);
    for_each_product_point(&axes, &mut |x| {
        if norm(&sub(x, z)) <= limit {
            out.push(x.to_vec());
        }
    });
    out
}

pub fn check_aubry_criterion(psi: &dyn GradientField, zero_set: &ZeroSet, params: &AubryParams) -> Result<AubryCertificate> {
    zero_set.validate()?;
    let d = psi.dim();
    let AubryParams {
        big_r,
        r,
        m,
        ref domain_lo,
        ref domain_hi,
        grid,
        zero_tol,
    } = *params;
    if zero_set.dim() != d || domain_lo.len() != d || domain_hi.len() != d {
        return Err(Error::usage("field, zero set and domain dimensions differ"));
    }
    if !(big_r > 0.0 && r > 0.0 && m > 0.0 && grid > 0.0) {
        return Err(Error::usage("R, r, m and grid must be positive"));
    }
    if domain_lo.iter().zip(domain_hi).any(|(a, b)| !(a < b)) {
        return Err(Error::usage("domain box is empty"));
    }

    // (1) every R-ball centred in the domain meets O
    let axes: Vec<Vec<f64>> = domain_lo
        .iter()
        .zip(domain_hi)
        .map(|(&a, &b)| axis_grid(a, b, grid))
        .collect();
    let mut covering = ConditionVerdict {
        pass: true,
        worst: 0.0,
        witness: Vec::new(),
    };
    for_each_product_point(&axes, &mut |x| {
        let (dist, _) = zero_set.nearest(x);
        if dist > covering.worst || covering.witness.is_empty() {
            covering.worst = dist;
            covering.witness = x.to_vec();
        }
    });
    covering.pass = covering.worst <= big_r * (1.0 + 1e-12);

    // (2) ψ vanishes on O
    let zeros_in_domain = zero_set.points_in_box(domain_lo, domain_hi);
    let mut zeros = ConditionVerdict {
        pass: !zeros_in_domain.is_empty(),
        worst: 0.0,
        witness: Vec::new(),
    };
    for z in &zeros_in_domain {
        let v = norm(&psi.eval(z));
        if v > zeros.worst || zeros.witness.is_empty() {
            zeros.worst = v;
            zeros.witness = z.clone();
        }
    }
    zeros.pass = zeros.pass && zeros.worst <= zero_tol;

    // (3) ‖ψ(x) - ψ(y)‖ ≥ m‖x - y‖ on every r-ball
    let mut expansion = ConditionVerdict {
        pass: !zeros_in_domain.is_empty(),
        worst: f64::INFINITY,
        witness: Vec::new(),
    };
    let mut method = LipschitzMethod::SampledPairs;
    let mut jac_min: Option<f64> = None;
    let record = |ratio: f64, at: &[f64], v: &mut ConditionVerdict| {
        if ratio < v.worst {
            v.worst = ratio;
            v.witness = at.to_vec();
        }
    };
    for z in &zeros_in_domain {
        if d == 1 {
            let pts = ball_samples(z, r, grid);
            let vals: Vec<f64> = pts.iter().map(|x| psi.eval(x)[0]).collect();
            let diffs: Vec<f64> = vals.windows(2).map(|w| w[1] - w[0]).collect();
            let monotone = diffs.iter().all(|&v| v > 0.0) || diffs.iter().all(|&v| v < 0.0);
            if monotone {
                if psi.jacobian(z).is_some() {
                    method = LipschitzMethod::MonotoneDerivative;
                    for x in &pts {
                        let slope = psi.jacobian(x).map(|j| j[(0, 0)].abs()).unwrap_or(0.0);
                        record(slope, x, &mut expansion);
                    }
                } else {
                    method = LipschitzMethod::MonotoneSecant;
                    for (i, dv) in diffs.iter().enumerate() {
                        let slope = dv.abs() / (pts[i + 1][0] - pts[i][0]);
                        record(slope, &pts[i], &mut expansion);
                    }
                }
                continue;
            }
            method = LipschitzMethod::SampledPairs;
            for i in 0..pts.len() {
                for j in (i + 1)..pts.len() {
                    let ratio = (vals[j] - vals[i]).abs() / (pts[j][0] - pts[i][0]).abs();
                    record(ratio, &pts[i], &mut expansion);
                }
            }
        } else {
            let pair_step = grid.max(r / 8.0);
            let pts = ball_samples(z, r, pair_step);
            let vals: Vec<Vec<f64>> = pts.iter().map(|x| psi.eval(x)).collect();
            for i in 0..pts.len() {
                for j in (i + 1)..pts.len() {
                    let ratio = norm(&sub(&vals[j], &vals[i])) / norm(&sub(&pts[j], &pts[i]));
                    record(ratio, &pts[i], &mut expansion);
                }
            }
            for x in &pts {
                if let Some(jac) = psi.jacobian(x) {
                    let s = sigma_min(&jac);
                    jac_min = Some(jac_min.map_or(s, |v: f64| v.min(s)));
                }
            }
        }
    }
    expansion.pass = expansion.pass && expansion.worst >= m;

    let pass = covering.pass && zeros.pass && expansion.pass;
    Ok(AubryCertificate {
        zero_set: zero_set.clone(),
        big_r,
        r,
        m,
        grid,
        zero_tol,
        domain_lo: domain_lo.clone(),
        domain_hi: domain_hi.clone(),
        norm: "euclidean".into(),
        covering,
        zeros,
        expansion,
        expansion_method: method,
        jacobian_min_singular: jac_min,
        pass,
    })
}

// ---------------------------------------------------------------------------
// Anti-integrable continuation
// ---------------------------------------------------------------------------

/// Address sequence `z_{n₀-1}, …, z_{n₁+1}`. The two outer entries are the
/// clamp values of the solve window; the rest are its initial guess.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Addresses {
    /// Index of the first (left clamp) address.
    pub start: i64,
    pub dim: usize,
    /// Flat, `dim` entries per site.
    pub points: Vec<f64>,
}

impl Addresses {
    pub fn len(&self) -> usize {
        self.points.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    /// Initial window configuration `u = z` with clamps at the outer addresses.
    pub fn initial_configuration(&self, rho: &[f64]) -> Result<Configuration> {
        if self.dim == 0 || !self.points.len().is_multiple_of(self.dim) {
            return Err(Error::usage("addresses are not a whole number of sites"));
        }
        let n = self.len();
        if n < 5 {
            return Err(Error::usage("need at least 5 addresses (3 window sites plus two clamps)"));
        }
        let d = self.dim;
        Configuration::new(
            self.start + 1,
            d,
            self.points[d..(n - 1) * d].to_vec(),
            rho.to_vec(),
            Boundary::Clamped {
                left: self.point(0).to_vec(),
                right: self.point(n - 1).to_vec(),
            },
        )
    }
}

/// Scalar postcondition check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub value: f64,
    pub limit: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AiSolveReport {
    pub configuration: Configuration,
    pub addresses: Addresses,
    pub coupling: f64,
    pub big_r: f64,
    pub r: f64,
    pub m: f64,
    /// `K(ρ, r+R)`.
    pub k_bound: f64,
    /// `(r+R)/(r m) · K`.
    pub lambda_threshold: f64,
    pub lambda_meets_threshold: bool,
    pub certificate_passed: bool,
    /// `sup_n ‖z_n - (n-n₀)ρ - z_{n₀}‖ ≤ r + R` for the addresses.
    pub addresses_compatible: bool,
    pub iterations: usize,
    pub residual_sup: f64,
    /// `sup_n ‖u_n - z_n‖`.
    pub address_distance: f64,
    /// `d(u, ρ)`.
    pub rotation_deviation: f64,
    /// `sup_n dist(u_n, O) ≤ r`.
    pub post_distance_to_zero_set: Check,
    /// `d(u, ρ) ≤ r + R`.
    pub post_rotation: Check,
    /// `max_n σ_max(∇²I(u_n - u_{n+1})) ≤ K/4` over every window bond.
    pub post_interaction: Check,
    /// `min_n σ_min(∇²V(u_n)) ≥ m`.
    pub post_onsite: Check,
    pub warnings: Vec<String>,
}

impl AiSolveReport {
    pub fn postconditions_pass(&self) -> bool {
        self.post_distance_to_zero_set.pass && self.post_rotation.pass && self.post_interaction.pass && self.post_onsite.pass
    }
}

fn build_ai_report(
    lagrangian: &Lagrangian,
    addresses: &Addresses,
    config: Configuration,
    cert: &AubryCertificate,
    k_bound: f64,
    history: &[f64],
) -> AiSolveReport {
    let d = config.dim();
    let (r, big_r, m, lambda) = (cert.r, cert.big_r, cert.m, lagrangian.coupling);
    let threshold = (r + big_r) / (r * m) * k_bound;
    let mut warnings = Vec::new();
    let meets = lambda >= threshold;
    if !meets {
        warnings.push(format!(
            "coupling {lambda} is below the continuation threshold {threshold:.6}"
        ));
    }
    if !cert.pass {
        warnings.push("Aubry certificate did not pass on the sampled domain".into());
    }
    let z0 = addresses.point(0);
    let rho = config.rotation();
    let compat = (0..addresses.len())
        .map(|i| {
            let dev: Vec<f64> = (0..d).map(|a| addresses.point(i)[a] - i as f64 * rho[a] - z0[a]).collect();
            norm(&dev)
        })
        .fold(0.0, f64::max);
    let addresses_compatible = compat <= (r + big_r) * (1.0 + 1e-12);
    if !addresses_compatible {
        warnings.push(format!(
            "addresses deviate from the rotation vector by {compat:.6} > r + R = {}",
            r + big_r
        ));
    }

    let n = config.len();
    let mut dist_o: f64 = 0.0;
    let mut addr_dist: f64 = 0.0;
    let mut onsite_min = f64::INFINITY;
    for i in 0..n {
        let u = config.site(i);
        dist_o = dist_o.max(cert.zero_set.nearest(u).0);
        addr_dist = addr_dist.max(norm(&sub(u, addresses.point(i + 1))));
        onsite_min = onsite_min.min(sigma_min(&lagrangian.onsite.hessian(u)));
    }
    let st = Stencil::new(&config);
    let mut bond_max: f64 = 0.0;
    for i in 0..n {
        bond_max = bond_max.max(sigma_max(&lagrangian.bond_stiffness(st.left(i), config.site(i))));
    }
    bond_max = bond_max.max(sigma_max(&lagrangian.bond_stiffness(config.site(n - 1), st.right(n - 1))));

    let rot_dev = config.rotation_deviation();
    let residual_sup = history.last().copied().unwrap_or(f64::NAN);
    let tiny = 1e-12;
    AiSolveReport {
        addresses: addresses.clone(),
        coupling: lambda,
        big_r,
        r,
        m,
        k_bound,
        lambda_threshold: threshold,
        lambda_meets_threshold: meets,
        certificate_passed: cert.pass,
        addresses_compatible,
        iterations: history.len().saturating_sub(1),
        residual_sup,
        address_distance: addr_dist,
        rotation_deviation: rot_dev,
        post_distance_to_zero_set: Check {
            value: dist_o,
            limit: r,
            pass: dist_o <= r + tiny,
        },
        post_rotation: Check {
            value: rot_dev,
            limit: r + big_r,
            pass: rot_dev <= r + big_r + tiny,
        },
        post_interaction: Check {
            value: bond_max,
            limit: k_bound / 4.0,
            pass: bond_max <= k_bound / 4.0 + tiny,
        },
        post_onsite: Check {
            value: onsite_min,
            limit: m,
            pass: onsite_min >= m - tiny,
        },
        configuration: config,
        warnings,
    }
}

/// Continues the address sequence to an equilibrium of `I(x-y) + λV(x)` by
/// Newton from `u = z`, then checks the continuation postconditions.
pub fn anti_integrable_solve(
    lagrangian: &Lagrangian,
    addresses: &Addresses,
    rho: &[f64],
    cert: &AubryCertificate,
    tol: f64,
    max_iter: usize,
) -> Result<AiSolveReport> {
    if addresses.dim != lagrangian.dim() || rho.len() != lagrangian.dim() {
        return Err(Error::usage("addresses, rotation vector and Lagrangian dimensions differ"));
    }
    for i in 0..addresses.len() {
        let z = addresses.point(i);
        let (dist, _) = cert.zero_set.nearest(z);
        if dist > cert.zero_tol.max(1e-9) {
            return Err(Error::Precondition(format!(
                "address {:?} at site {} is {dist:e} away from the zero set",
                z,
                addresses.start + i as i64
            )));
        }
    }
    let k_bound = interaction_bound_k(&lagrangian.interaction, rho, cert.r, cert.big_r, cert.grid)?;
    let start = addresses.initial_configuration(rho)?;
    let run = newton_iterate(lagrangian, &start, tol, max_iter, 1.0)?;
    let report = build_ai_report(lagrangian, addresses, run.configuration, cert, k_bound, &run.history);
    for w in &report.warnings {
        log::warn!("{w}");
    }
    match run.failure {
        None => Ok(report),
        Some(message) => Err(Error::Convergence {
            message,
            last_residual: report.residual_sup,
            history: run.history,
            partial: Some(Box::new(report)),
        }),
    }
}

/// Re-solves from `trials` random starts within `delta` of the addresses and
/// reports whether every solve lands on the reported configuration (sup-norm 1e-8).
pub fn uniqueness_probe(
    lagrangian: &Lagrangian,
    report: &AiSolveReport,
    delta: f64,
    trials: usize,
    seed: u64,
) -> Result<bool> {
    if !(delta >= 0.0) || delta > report.r / 2.0 {
        return Err(Error::Precondition(format!(
            "perturbation scale {delta} must lie in [0, r/2 = {}]",
            report.r / 2.0
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base = report.addresses.initial_configuration(report.configuration.rotation())?;
    let d = base.dim();
    let tol = report.residual_sup.max(1e-13);
    for _ in 0..trials {
        let mut values = base.values().to_vec();
        for site in values.chunks_mut(d) {
            loop {
                let offset: Vec<f64> = (0..d).map(|_| rng.gen_range(-delta..=delta)).collect();
                if norm(&offset) <= delta {
                    site.iter_mut().zip(&offset).for_each(|(u, o)| *u += o);
                    break;
                }
            }
        }
        let start = base.with_values(values)?;
        let sol = newton_solve_window(lagrangian, &start, tol, 100, 1.0)?;
        let diff = sol
            .configuration
            .values()
            .iter()
            .zip(report.configuration.values())
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        if diff > 1e-8 {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{InteractionPotential, OnSite};
    use std::f64::consts::PI;

    fn free_chain() -> Lagrangian {
        Lagrangian::standard(OnSite::Zero { dim: 1 }).unwrap()
    }

    fn cosine_chain(lambda: f64) -> Lagrangian {
        Lagrangian::new(
            InteractionPotential::quadratic(1),
            OnSite::Well(WellPotential::cosine_well(1)),
            lambda,
        )
        .unwrap()
    }

    fn clamped_line(n0: i64, len: usize, omega: f64, offset: f64) -> Configuration {
        let values = (0..len).map(|i| offset + (n0 + i as i64) as f64 * omega).collect();
        Configuration::scalar(
            n0,
            values,
            omega,
            Boundary::Clamped {
                left: vec![offset + (n0 - 1) as f64 * omega],
                right: vec![offset + (n0 + len as i64) as f64 * omega],
            },
        )
        .unwrap()
    }

    #[test]
    fn residual_vanishes_on_lines_and_integers() {
        let r = residual(&free_chain(), &clamped_line(-4, 9, 0.37, 0.0)).unwrap();
        assert!(sup_norm(&r) < 1e-14);
        let r = residual(&cosine_chain(20.0), &clamped_line(-4, 9, 1.0, 0.0)).unwrap();
        assert!(sup_norm(&r) < 1e-14);
    }

    #[test]
    fn residual_interior_site_free() {
        let c = Configuration::scalar(0, vec![0.0, 0.6, 1.0], 0.5, Boundary::Free).unwrap();
        let r = residual(&free_chain(), &c).unwrap();
        assert_eq!(r.len(), 1);
        assert!((r[0].abs() - 0.2).abs() < 1e-15);
    }

    #[test]
    fn newton_recovers_line() {
        let omega = 0.3;
        let noisy = clamped_line(1, 20, omega, 0.0);
        let values = noisy
            .values()
            .iter()
            .enumerate()
            .map(|(i, v)| v + 0.01 * ((i * 7 % 5) as f64 - 2.0))
            .collect();
        let start = noisy.with_values(values).unwrap();
        let sol = newton_solve_window(&free_chain(), &start, 1e-12, 5, 1.0).unwrap();
        for (i, u) in sol.configuration.values().iter().enumerate() {
            assert!((u - (1 + i) as f64 * omega).abs() < 1e-12);
        }
        assert!(sol.iterations <= 2);
    }

    #[test]
    fn newton_converges_to_integer_equilibrium() {
        let exact = clamped_line(-10, 21, 1.0, 0.0);
        let start = exact
            .with_values(exact.values().iter().map(|v| v + 0.05).collect())
            .unwrap();
        let sol = newton_solve_window(&cosine_chain(20.0), &start, 1e-13, 30, 1.0).unwrap();
        for (u, z) in sol.configuration.values().iter().zip(exact.values()) {
            assert!((u - z).abs() < 1e-10);
        }
    }

    #[test]
    fn newton_zero_iterations_fails() {
        let exact = clamped_line(0, 5, 1.0, 0.0);
        let start = exact.with_values(vec![0.0, 1.1, 2.0, 3.0, 4.0]).unwrap();
        match newton_solve_window(&cosine_chain(20.0), &start, 1e-12, 0, 1.0) {
            Err(Error::Convergence { history, .. }) => assert_eq!(history.len(), 1),
            other => panic!("expected convergence error, got {other:?}"),
        }
    }

    #[test]
    fn newton_rejects_free_boundary_and_bad_damping() {
        let free = Configuration::scalar(0, vec![0.0, 1.0, 2.0], 1.0, Boundary::Free).unwrap();
        assert!(matches!(newton_solve_window(&free_chain(), &free, 1e-12, 5, 1.0), Err(Error::Usage(_))));
        let c = clamped_line(0, 4, 1.0, 0.0);
        assert!(matches!(newton_solve_window(&free_chain(), &c, 1e-12, 5, 0.0), Err(Error::Usage(_))));
    }

    fn sine_field() -> WellPotential {
        WellPotential::cosine_well(1)
    }

    fn half_lattice_params(m: f64) -> AubryParams {
        AubryParams {
            big_r: 0.25,
            r: 0.125,
            m,
            domain_lo: vec![-2.0],
            domain_hi: vec![2.0],
            grid: 1e-3,
            zero_tol: 1e-9,
        }
    }

    #[test]
    fn aubry_cosine_well_passes() {
        let cert = check_aubry_criterion(&sine_field(), &ZeroSet::scalar_lattice(0.5, 0.0), &half_lattice_params(0.70)).unwrap();
        assert!(cert.pass, "{cert:?}");
        assert_eq!(cert.expansion_method, LipschitzMethod::MonotoneDerivative);
        assert!((cert.expansion.worst - (PI / 4.0).cos()).abs() < 1e-9);
        let strict = check_aubry_criterion(&sine_field(), &ZeroSet::scalar_lattice(0.5, 0.0), &half_lattice_params(0.71)).unwrap();
        assert!(!strict.expansion.pass);
    }

    #[test]
    fn aubry_constant_fields_fail() {
        let params = half_lattice_params(0.7);
        let o = ZeroSet::scalar_lattice(0.5, 0.0);
        let nonzero = FnField { dim: 1, f: |_: &[f64]| vec![0.01] };
        let cert = check_aubry_criterion(&nonzero, &o, &params).unwrap();
        assert!(!cert.zeros.pass && !cert.pass);
        let zero = FnField { dim: 1, f: |_: &[f64]| vec![0.0] };
        let cert = check_aubry_criterion(&zero, &o, &params).unwrap();
        assert!(cert.zeros.pass);
        assert!(!cert.expansion.pass && !cert.pass);
    }

    #[test]
    fn aubry_covering_fails_for_sparse_set() {
        let cert = check_aubry_criterion(&sine_field(), &ZeroSet::scalar_lattice(1.0, 0.0), &half_lattice_params(0.7)).unwrap();
        assert!(!cert.covering.pass);
        assert!((cert.covering.worst - 0.5).abs() < 1e-9);
    }

    #[test]
    fn lattice_points_and_nearest_2d() {
        let o = ZeroSet::Lattice {
            generators: vec![vec![0.5, 0.0], vec![0.0, 0.5]],
            offsets: vec![vec![0.0, 0.0]],
        };
        let (d, p) = o.nearest(&[0.6, -0.3]);
        assert!((d - (0.01f64 + 0.04).sqrt()).abs() < 1e-12);
        assert_eq!(p, vec![0.5, -0.5]);
        assert_eq!(o.points_in_box(&[0.0, 0.0], &[1.0, 1.0]).len(), 9);
    }

    #[test]
    fn aubry_2d_separable_well() {
        let params = AubryParams {
            big_r: 0.36,
            r: 0.125,
            m: 0.5,
            domain_lo: vec![-0.5, -0.5],
            domain_hi: vec![0.5, 0.5],
            grid: 0.02,
            zero_tol: 1e-9,
        };
        let o = ZeroSet::Lattice {
            generators: vec![vec![0.5, 0.0], vec![0.0, 0.5]],
            offsets: vec![vec![0.0, 0.0]],
        };
        let cert = check_aubry_criterion(&WellPotential::cosine_well(2), &o, &params).unwrap();
        assert_eq!(cert.expansion_method, LipschitzMethod::SampledPairs);
        assert!(cert.jacobian_min_singular.unwrap() >= 0.7);
        assert!(cert.pass, "{cert:?}");
    }

    fn integer_addresses(half: i64) -> Addresses {
        Addresses {
            start: -half,
            dim: 1,
            points: (-half..=half).map(|n| n as f64).collect(),
        }
    }

    fn certificate() -> AubryCertificate {
        check_aubry_criterion(&sine_field(), &ZeroSet::scalar_lattice(0.5, 0.0), &half_lattice_params(0.70)).unwrap()
    }

    #[test]
    fn ai_integer_addresses_are_exact() {
        let report = anti_integrable_solve(&cosine_chain(20.0), &integer_addresses(12), &[1.0], &certificate(), 1e-12, 20).unwrap();
        assert_eq!(report.iterations, 0);
        assert!(report.residual_sup < 1e-14);
        assert!(report.postconditions_pass());
        assert!(report.lambda_meets_threshold);
        assert!((report.lambda_threshold - 12.0 / 0.70).abs() < 1e-9);
        assert!(report.warnings.is_empty());
    }

    #[test]
    fn ai_half_integer_address() {
        let mut z = integer_addresses(12);
        z.points[12 + 5] = 5.5;
        let report = anti_integrable_solve(&cosine_chain(20.0), &z, &[1.0], &certificate(), 1e-12, 20).unwrap();
        // the coupling term 2u_5 - u_4 - u_6 = 1 at the addresses, so the
        // equilibrium moves off them but stays inside the r-ball
        assert!(report.residual_sup <= 1e-12);
        assert!(report.address_distance > 1e-3 && report.address_distance < report.r);
        assert!(report.post_onsite.pass);
        assert!(report.post_onsite.value >= 0.70);
        assert!(!report.addresses_compatible);
    }

    #[test]
    fn ai_below_threshold_is_flagged() {
        let report = anti_integrable_solve(&cosine_chain(2.0), &integer_addresses(6), &[1.0], &certificate(), 1e-12, 20).unwrap();
        assert!(!report.lambda_meets_threshold);
        assert!(!report.warnings.is_empty());
    }

    #[test]
    fn ai_address_outside_zero_set() {
        let mut z = integer_addresses(6);
        z.points[3] = 0.3;
        assert!(matches!(
            anti_integrable_solve(&cosine_chain(20.0), &z, &[1.0], &certificate(), 1e-12, 20),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn uniqueness_probe_cases() {
        let l = cosine_chain(20.0);
        let report = anti_integrable_solve(&l, &integer_addresses(12), &[1.0], &certificate(), 1e-12, 20).unwrap();
        assert!(uniqueness_probe(&l, &report, 0.05, 5, 7).unwrap());
        assert!(uniqueness_probe(&l, &report, 0.05, 0, 7).unwrap());
        assert!(matches!(uniqueness_probe(&l, &report, 0.1, 1, 7), Err(Error::Precondition(_))));
    }
}
