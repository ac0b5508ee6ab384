//! Potentials, interactions, Lagrangians and configurations.
//!
//! A chain configuration `u = (u_n)` with `u_n ∈ ℝ^d` has formal energy
//! `Φ(u) = Σ_n L(u_n, u_{n+1})` where
//!
//! ```text
//! L(x, y) = I(x - y) + λ V(x)
//! ```
//!
//! The scalar Frenkel-Kontorova chain is the special case `I(s) = s²/2`,
//! `λ = 1`. Every potential here has closed-form first and second
//! derivatives; nothing is differentiated numerically.

use std::f64::consts::{PI, TAU};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Depth of the continued-fraction test used to flag rational frequency ratios.
const CF_DEPTH: usize = 30;

/// `d^j/dt^j cos(t)` evaluated at `t`.
#[inline]
fn cos_derivative(t: f64, order: u32) -> f64 {
    match order % 4 {
        0 => t.cos(),
        1 => -t.sin(),
        2 => -t.cos(),
        _ => t.sin(),
    }
}

fn check_point(x: &[f64], dim: usize) -> Result<()> {
    if x.len() != dim {
        return Err(Error::usage(format!(
            "point has dimension {}, expected {dim}",
            x.len()
        )));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::usage("point has non-finite coordinates"));
    }
    Ok(())
}

/// Largest singular value of a square matrix.
pub fn sigma_max(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 1 {
        return m[(0, 0)].abs();
    }
    m.singular_values().max()
}

/// Smallest singular value of a square matrix.
pub fn sigma_min(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 1 {
        return m[(0, 0)].abs();
    }
    m.singular_values().min()
}

// ---------------------------------------------------------------------------
// Frequency module and quasi-periodic potentials
// ---------------------------------------------------------------------------

/// Finite list of base frequencies `α = (α_1, …, α_m)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyModule {
    alphas: Vec<f64>,
}

impl FrequencyModule {
    pub fn new(alphas: Vec<f64>) -> Result<Self> {
        if alphas.is_empty() {
            return Err(Error::usage("frequency module needs at least one frequency"));
        }
        if alphas.iter().any(|a| !(a.is_finite() && *a > 0.0)) {
            return Err(Error::usage("frequencies must be finite and strictly positive"));
        }
        let module = FrequencyModule { alphas };
        for (i, j) in module.rational_pairs() {
            log::warn!(
                "frequency ratio alpha[{i}]/alpha[{j}] looks rational (continued fraction terminates)"
            );
        }
        Ok(module)
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    /// Number of frequencies `m`.
    pub fn len(&self) -> usize {
        self.alphas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alphas.is_empty()
    }

    /// `k · α`.
    pub fn dot(&self, k: &[i64]) -> f64 {
        k.iter().zip(&self.alphas).map(|(&ki, a)| ki as f64 * a).sum()
    }

    /// Pairs `(i, j)`, `i < j`, whose ratio has a continued fraction that
    /// terminates within 30 terms. This is a heuristic warning only.
    pub fn rational_pairs(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.alphas.len() {
            for j in (i + 1)..self.alphas.len() {
                if continued_fraction_terminates(self.alphas[i] / self.alphas[j], CF_DEPTH) {
                    out.push((i, j));
                }
            }
        }
        out
    }
}

fn continued_fraction_terminates(mut x: f64, depth: usize) -> bool {
    for _ in 0..depth {
        let frac = x - x.floor();
        if !(1e-9..=1.0 - 1e-9).contains(&frac) {
            return true;
        }
        x = 1.0 / frac;
    }
    false
}

/// One term `c · cos(k·σ + φ)` of a quasi-periodic potential.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FourierMode {
    pub k: Vec<i64>,
    pub amplitude: f64,
    pub phase: f64,
}

/// `V(θ) = V̂(θα)` with `V̂(σ) = Σ c cos(k·σ + φ)` on the m-torus (period 2π).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuasiPeriodicPotential {
    module: FrequencyModule,
    modes: Vec<FourierMode>,
}

impl QuasiPeriodicPotential {
    pub fn new(module: FrequencyModule, modes: Vec<FourierMode>) -> Result<Self> {
        for mode in &modes {
            if mode.k.len() != module.len() {
                return Err(Error::usage(format!(
                    "mode index {:?} has length {}, module has {} frequencies",
                    mode.k,
                    mode.k.len(),
                    module.len()
                )));
            }
            if !(mode.amplitude.is_finite() && mode.phase.is_finite()) {
                return Err(Error::usage("mode amplitude and phase must be finite"));
            }
        }
        Ok(QuasiPeriodicPotential { module, modes })
    }

    /// `V ≡ 0` over the given module.
    pub fn zero(module: FrequencyModule) -> Self {
        QuasiPeriodicPotential {
            module,
            modes: Vec::new(),
        }
    }

    pub fn module(&self) -> &FrequencyModule {
        &self.module
    }

    pub fn modes(&self) -> &[FourierMode] {
        &self.modes
    }

    pub fn is_zero(&self) -> bool {
        self.modes.iter().all(|m| m.amplitude == 0.0)
    }

    /// `-V`.
    pub fn negated(&self) -> Self {
        let modes = self
            .modes
            .iter()
            .map(|m| FourierMode {
                amplitude: -m.amplitude,
                ..m.clone()
            })
            .collect();
        QuasiPeriodicPotential {
            module: self.module.clone(),
            modes,
        }
    }

    /// `d^j V / dθ^j` at `θ`.
    pub fn derivative(&self, theta: f64, order: u32) -> f64 {
        self.modes
            .iter()
            .map(|m| {
                let freq = self.module.dot(&m.k);
                m.amplitude * freq.powi(order as i32) * cos_derivative(freq * theta + m.phase, order)
            })
            .sum()
    }

    pub fn value(&self, theta: f64) -> f64 {
        self.derivative(theta, 0)
    }

    /// `∂_α^j V̂(σ)` where `∂_α = Σ_j α_j ∂_{σ_j}`. Order 0 is `V̂` itself.
    pub fn hat_derivative(&self, sigma: &[f64], order: u32) -> f64 {
        self.modes
            .iter()
            .map(|m| {
                let phase: f64 = m.k.iter().zip(sigma).map(|(&k, s)| k as f64 * s).sum();
                let freq = self.module.dot(&m.k);
                m.amplitude * freq.powi(order as i32) * cos_derivative(phase + m.phase, order)
            })
            .sum()
    }

    pub fn hat(&self, sigma: &[f64]) -> f64 {
        self.hat_derivative(sigma, 0)
    }

    /// Coefficient-sum upper bound `Σ |c| |k·α|^j` on `sup |V^{(j)}|`.
    pub fn sup_bound(&self, order: u32) -> f64 {
        self.modes
            .iter()
            .map(|m| m.amplitude.abs() * self.module.dot(&m.k).abs().powi(order as i32))
            .sum()
    }

    /// Grid-sampled `sup_σ |f(∂_α^j V̂(σ))|` over a uniform torus grid with
    /// `points` nodes per dimension.
    pub fn sampled_sup(&self, order: u32, points: usize, f: impl Fn(f64) -> f64) -> f64 {
        let m = self.module.len();
        let mut best = f64::NEG_INFINITY;
        let mut sigma = vec![0.0; m];
        for_each_torus_point(m, points, &mut sigma, &mut |s| {
            best = best.max(f(self.hat_derivative(s, order)).abs());
        });
        best
    }
}

/// Visits every node of the uniform `points^m` grid on `[0, 2π)^m`.
pub(crate) fn for_each_torus_point(
    m: usize,
    points: usize,
    sigma: &mut [f64],
    visit: &mut dyn FnMut(&[f64]),
) {
    let total = points.pow(m as u32);
    let step = 2.0 * PI / points as f64;
    for flat in 0..total {
        let mut rem = flat;
        for s in sigma.iter_mut() {
            *s = (rem % points) as f64 * step;
            rem /= points;
        }
        visit(sigma);
    }
}

// ---------------------------------------------------------------------------
// Generic potentials on ℝ^d
// ---------------------------------------------------------------------------

/// Scalar field with closed-form gradient and Hessian.
pub trait Potential {
    fn dim(&self) -> usize;
    fn value(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64]) -> Vec<f64>;
    fn hessian(&self, x: &[f64]) -> DMatrix<f64>;
}

#[derive(Debug, Clone, PartialEq)]
pub enum Evaluation {
    Value(f64),
    Gradient(Vec<f64>),
    Hessian(DMatrix<f64>),
}

/// Value (order 0), gradient (order 1) or Hessian (order 2) of `p` at `x`.
pub fn eval_potential<P: Potential + ?Sized>(p: &P, x: &[f64], order: u8) -> Result<Evaluation> {
    check_point(x, p.dim())?;
    match order {
        0 => Ok(Evaluation::Value(p.value(x))),
        1 => Ok(Evaluation::Gradient(p.gradient(x))),
        2 => Ok(Evaluation::Hessian(p.hessian(x))),
        _ => Err(Error::usage(format!("unsupported derivative order {order}"))),
    }
}

impl Potential for QuasiPeriodicPotential {
    fn dim(&self) -> usize {
        1
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.derivative(x[0], 0)
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        vec![self.derivative(x[0], 1)]
    }

    fn hessian(&self, x: &[f64]) -> DMatrix<f64> {
        DMatrix::from_element(1, 1, self.derivative(x[0], 2))
    }
}

/// `cos(w·x + φ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CosineFactor {
    pub wave: Vec<f64>,
    pub phase: f64,
}

impl CosineFactor {
    /// `w·x + φ` with each coordinate reduced modulo its period first, so
    /// lattice points of the well land exactly on zero phase.
    pub fn angle(&self, x: &[f64]) -> f64 {
        self.wave
            .iter()
            .zip(x)
            .map(|(&w, &xi)| if w == 0.0 { 0.0 } else { w * xi.rem_euclid(TAU / w.abs()) })
            .sum::<f64>()
            + self.phase
    }
}

/// `a · Π_i cos(w_i·x + φ_i)`. Sums of these cover trigonometric polynomials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrigProduct {
    pub amplitude: f64,
    pub factors: Vec<CosineFactor>,
}

/// On-site well potential `V: ℝ^d → ℝ`, a constant plus a sum of trigonometric products.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WellPotential {
    dim: usize,
    constant: f64,
    terms: Vec<TrigProduct>,
}

impl WellPotential {
    pub fn new(dim: usize, constant: f64, terms: Vec<TrigProduct>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::usage("well potential dimension must be positive"));
        }
        for t in &terms {
            if t.factors.iter().any(|f| f.wave.len() != dim) {
                return Err(Error::usage(format!(
                    "trig factor wave vector must have dimension {dim}"
                )));
            }
        }
        Ok(WellPotential {
            dim,
            constant,
            terms,
        })
    }

    /// Separable well `Σ_j (1 - cos 2π x_j) / (4π²)`; zeros of `∇V` are `(½ℤ)^d`.
    pub fn cosine_well(dim: usize) -> Self {
        let scale = 1.0 / (4.0 * PI * PI);
        let terms = (0..dim)
            .map(|j| {
                let mut wave = vec![0.0; dim];
                wave[j] = 2.0 * PI;
                TrigProduct {
                    amplitude: -scale,
                    factors: vec![CosineFactor { wave, phase: 0.0 }],
                }
            })
            .collect();
        WellPotential {
            dim,
            constant: dim as f64 * scale,
            terms,
        }
    }

    /// Sum of cosines `Σ a_t cos(w_t·x + φ_t)`.
    pub fn cosine_sum(dim: usize, constant: f64, cosines: Vec<(f64, CosineFactor)>) -> Result<Self> {
        let terms = cosines
            .into_iter()
            .map(|(amplitude, f)| TrigProduct {
                amplitude,
                factors: vec![f],
            })
            .collect();
        Self::new(dim, constant, terms)
    }

    pub fn terms(&self) -> &[TrigProduct] {
        &self.terms
    }

    pub fn constant(&self) -> f64 {
        self.constant
    }

    /// Coefficient bound `Σ |a| (Σ_i ‖w_i‖)²` on `sup σ_max(∇²V)`.
    pub fn hessian_bound(&self) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                let s: f64 = t
                    .factors
                    .iter()
                    .map(|f| f.wave.iter().map(|w| w * w).sum::<f64>().sqrt())
                    .sum();
                t.amplitude.abs() * s * s
            })
            .sum()
    }

    /// Grid-sampled `sup σ_max(∇²V)` over the box `[lo, hi]` with spacing `step`.
    pub fn hessian_sup(&self, lo: &[f64], hi: &[f64], step: f64) -> Result<f64> {
        if lo.len() != self.dim || hi.len() != self.dim {
            return Err(Error::usage("box corners must match potential dimension"));
        }
        if !(step > 0.0) {
            return Err(Error::usage("grid step must be positive"));
        }
        let axes: Vec<Vec<f64>> = lo.iter().zip(hi).map(|(&a, &b)| axis_grid(a, b, step)).collect();
        let mut best: f64 = 0.0;
        for_each_product_point(&axes, &mut |x| {
            best = best.max(sigma_max(&self.hessian(x)));
        });
        Ok(best)
    }
}

/// Points `a, a+h, …` up to `b`, with `b` appended when not hit.
pub(crate) fn axis_grid(a: f64, b: f64, step: f64) -> Vec<f64> {
    let count = ((b - a) / step + 1e-9).floor().max(0.0) as usize;
    let mut pts: Vec<f64> = (0..=count).map(|i| a + i as f64 * step).collect();
    if let Some(&last) = pts.last() {
        if (b - last).abs() > 1e-12 * step.max(1.0) && b > last {
            pts.push(b);
        }
    }
    pts
}

pub(crate) fn for_each_product_point(axes: &[Vec<f64>], visit: &mut dyn FnMut(&[f64])) {
    let d = axes.len();
    let mut idx = vec![0usize; d];
    let mut x: Vec<f64> = axes.iter().map(|a| a[0]).collect();
    if axes.iter().any(|a| a.is_empty()) {
        return;
    }
    loop {
        visit(&x);
        let mut j = 0;
        loop {
            if j == d {
                return;
            }
            idx[j] += 1;
            if idx[j] < axes[j].len() {
                x[j] = axes[j][idx[j]];
                break;
            }
            idx[j] = 0;
            x[j] = axes[j][0];
            j += 1;
        }
    }
}

impl Potential for WellPotential {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.constant
            + self
                .terms
                .iter()
                .map(|t| {
                    t.amplitude
                        * t.factors
                            .iter()
                            .map(|f| f.angle(x).cos())
                            .product::<f64>()
                })
                .sum::<f64>()
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.dim];
        for t in &self.terms {
            let args: Vec<f64> = t.factors.iter().map(|f| f.angle(x)).collect();
            for (i, fi) in t.factors.iter().enumerate() {
                let others: f64 = args
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != i)
                    .map(|(_, a)| a.cos())
                    .product();
                let coef = -t.amplitude * args[i].sin() * others;
                for (gk, wk) in g.iter_mut().zip(&fi.wave) {
                    *gk += coef * wk;
                }
            }
        }
        g
    }

    fn hessian(&self, x: &[f64]) -> DMatrix<f64> {
        let d = self.dim;
        let mut h = DMatrix::zeros(d, d);
        for t in &self.terms {
            let args: Vec<f64> = t.factors.iter().map(|f| f.angle(x)).collect();
            let nf = args.len();
            for i in 0..nf {
                for j in 0..nf {
                    let rest: f64 = (0..nf)
                        .filter(|&l| l != i && l != j)
                        .map(|l| args[l].cos())
                        .product();
                    let coef = if i == j {
                        -args[i].cos() * rest
                    } else {
                        args[i].sin() * args[j].sin() * rest
                    };
                    let coef = t.amplitude * coef;
                    let wi = &t.factors[i].wave;
                    let wj = &t.factors[j].wave;
                    for a in 0..d {
                        for b in 0..d {
                            h[(a, b)] += coef * wi[a] * wj[b];
                        }
                    }
                }
            }
        }
        h
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

// ---------------------------------------------------------------------------
// Interactions
// ---------------------------------------------------------------------------

/// Nearest-neighbour interaction `I(s)` evaluated on `s = x - y`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum InteractionPotential {
    /// `½‖s‖²`
    Quadratic { dim: usize },
    /// `½‖s‖² + (b/4)‖s‖⁴`
    QuadraticQuartic { dim: usize, quartic: f64 },
}

impl InteractionPotential {
    pub fn quadratic(dim: usize) -> Self {
        InteractionPotential::Quadratic { dim }
    }
}

impl Potential for InteractionPotential {
    fn dim(&self) -> usize {
        match *self {
            InteractionPotential::Quadratic { dim } => dim,
            InteractionPotential::QuadraticQuartic { dim, .. } => dim,
        }
    }

    fn value(&self, s: &[f64]) -> f64 {
        let s2 = dot(s, s);
        match *self {
            InteractionPotential::Quadratic { .. } => 0.5 * s2,
            InteractionPotential::QuadraticQuartic { quartic, .. } => 0.5 * s2 + 0.25 * quartic * s2 * s2,
        }
    }

    fn gradient(&self, s: &[f64]) -> Vec<f64> {
        match *self {
            InteractionPotential::Quadratic { .. } => s.to_vec(),
            InteractionPotential::QuadraticQuartic { quartic, .. } => {
                let f = 1.0 + quartic * dot(s, s);
                s.iter().map(|v| f * v).collect()
            }
        }
    }

    fn hessian(&self, s: &[f64]) -> DMatrix<f64> {
        let d = s.len();
        match *self {
            InteractionPotential::Quadratic { .. } => DMatrix::identity(d, d),
            InteractionPotential::QuadraticQuartic { quartic, .. } => {
                let mut h = DMatrix::identity(d, d) * (1.0 + quartic * dot(s, s));
                for a in 0..d {
                    for b in 0..d {
                        h[(a, b)] += 2.0 * quartic * s[a] * s[b];
                    }
                }
                h
            }
        }
    }
}

/// `K(ρ, r+R) = 4 sup_{‖x‖ ≤ ‖ρ‖ + 2(R+r)} σ_max(∇²I(x))`, sampled on a
/// cube grid of spacing `step` clipped to the ball.
pub fn interaction_bound_k(
    interaction: &InteractionPotential,
    rho: &[f64],
    r: f64,
    big_r: f64,
    step: f64,
) -> Result<f64> {
    if !(r > 0.0 && big_r > 0.0) {
        return Err(Error::usage("r and R must be positive"));
    }
    if !(step > 0.0) {
        return Err(Error::usage("grid step must be positive"));
    }
    let d = interaction.dim();
    if rho.len() != d {
        return Err(Error::usage("rotation vector dimension mismatch"));
    }
    if let InteractionPotential::Quadratic { .. } = interaction {
        return Ok(4.0);
    }
    let radius = norm(rho) + 2.0 * (big_r + r);
    let axis = axis_grid(-radius, radius, step);
    let axes = vec![axis; d];
    let mut best: f64 = 0.0;
    let limit = radius * (1.0 + 1e-12);
    for_each_product_point(&axes, &mut |x| {
        if norm(x) <= limit {
            best = best.max(sigma_max(&interaction.hessian(x)));
        }
    });
    Ok(4.0 * best)
}

// ---------------------------------------------------------------------------
// Lagrangian
// ---------------------------------------------------------------------------

/// On-site part `V` of the Lagrangian.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum OnSite {
    Zero { dim: usize },
    Well(WellPotential),
    QuasiPeriodic(QuasiPeriodicPotential),
}

impl Potential for OnSite {
    fn dim(&self) -> usize {
        match self {
            OnSite::Zero { dim } => *dim,
            OnSite::Well(w) => w.dim(),
            OnSite::QuasiPeriodic(_) => 1,
        }
    }

    fn value(&self, x: &[f64]) -> f64 {
        match self {
            OnSite::Zero { .. } => 0.0,
            OnSite::Well(w) => w.value(x),
            OnSite::QuasiPeriodic(q) => Potential::value(q, x),
        }
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        match self {
            OnSite::Zero { dim } => vec![0.0; *dim],
            OnSite::Well(w) => w.gradient(x),
            OnSite::QuasiPeriodic(q) => q.gradient(x),
        }
    }

    fn hessian(&self, x: &[f64]) -> DMatrix<f64> {
        match self {
            OnSite::Zero { dim } => DMatrix::zeros(*dim, *dim),
            OnSite::Well(w) => w.hessian(x),
            OnSite::QuasiPeriodic(q) => q.hessian(x),
        }
    }
}

/// `L(x, y) = I(x - y) + λ V(x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lagrangian {
    pub interaction: InteractionPotential,
    pub onsite: OnSite,
    pub coupling: f64,
}

impl Lagrangian {
    pub fn new(interaction: InteractionPotential, onsite: OnSite, coupling: f64) -> Result<Self> {
        if interaction.dim() != onsite.dim() {
            return Err(Error::usage(format!(
                "interaction dimension {} does not match on-site dimension {}",
                interaction.dim(),
                onsite.dim()
            )));
        }
        if !coupling.is_finite() {
            return Err(Error::usage("coupling must be finite"));
        }
        Ok(Lagrangian {
            interaction,
            onsite,
            coupling,
        })
    }

    /// Scalar chain `½(x - y)² + V(x)`.
    pub fn standard(onsite: OnSite) -> Result<Self> {
        let d = onsite.dim();
        Self::new(InteractionPotential::quadratic(d), onsite, 1.0)
    }

    /// Chain whose equilibria are generated by hulls solving
    /// `ĥ(σ+ωα) + ĥ(σ-ωα) - 2ĥ(σ) + ∂_αV̂(σ + αĥ(σ)) = 0`.
    ///
    /// That equation is the Euler-Lagrange equation of `½(x - y)² - V(x)`,
    /// so the on-site term is `-V`.
    pub fn for_hull(potential: &QuasiPeriodicPotential) -> Self {
        Lagrangian {
            interaction: InteractionPotential::quadratic(1),
            onsite: OnSite::QuasiPeriodic(potential.negated()),
            coupling: 1.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.interaction.dim()
    }

    pub fn value(&self, x: &[f64], y: &[f64]) -> f64 {
        let s: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
        self.interaction.value(&s) + self.coupling * self.onsite.value(x)
    }

    /// `∇I(x - y)`
    pub fn bond_force(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        let s: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
        self.interaction.gradient(&s)
    }

    /// `∇²I(x - y)`, which equals `D₂₂L(x, y) = -D₁₂L(x, y)`.
    pub fn bond_stiffness(&self, x: &[f64], y: &[f64]) -> DMatrix<f64> {
        let s: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
        self.interaction.hessian(&s)
    }

    /// `λ ∇V(x)`
    pub fn onsite_force(&self, x: &[f64]) -> Vec<f64> {
        let mut g = self.onsite.gradient(x);
        g.iter_mut().for_each(|v| *v *= self.coupling);
        g
    }

    /// `λ ∇²V(x)`
    pub fn onsite_stiffness(&self, x: &[f64]) -> DMatrix<f64> {
        self.onsite.hessian(x) * self.coupling
    }
}

// ---------------------------------------------------------------------------
// Configurations
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Boundary {
    /// Fixed neighbours `u_{n₀-1} = left`, `u_{n₁+1} = right`; every window site is free.
    Clamped { left: Vec<f64>, right: Vec<f64> },
    /// End sites are data; only `n₀+1 … n₁-1` are interior.
    Free,
}

/// Finite window `u_{n₀}, …, u_{n₁}` of a chain in `ℝ^d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Configuration {
    start: i64,
    dim: usize,
    values: Vec<f64>,
    rotation: Vec<f64>,
    boundary: Boundary,
}

impl Configuration {
    /// `values` is flat, `d` entries per site.
    pub fn new(start: i64, dim: usize, values: Vec<f64>, rotation: Vec<f64>, boundary: Boundary) -> Result<Self> {
        if dim == 0 || !values.len().is_multiple_of(dim) {
            return Err(Error::usage("configuration values are not a whole number of sites"));
        }
        if values.len() / dim < 3 {
            return Err(Error::usage("configuration window needs at least 3 sites"));
        }
        if rotation.len() != dim {
            return Err(Error::usage("rotation vector dimension mismatch"));
        }
        if let Boundary::Clamped { left, right } = &boundary {
            if left.len() != dim || right.len() != dim {
                return Err(Error::usage("clamp values dimension mismatch"));
            }
        }
        Ok(Configuration {
            start,
            dim,
            values,
            rotation,
            boundary,
        })
    }

    /// Scalar chain with the given values.
    pub fn scalar(start: i64, values: Vec<f64>, rotation: f64, boundary: Boundary) -> Result<Self> {
        Self::new(start, 1, values, vec![rotation], boundary)
    }

    pub fn start(&self) -> i64 {
        self.start
    }

    /// Last site index `n₁`.
    pub fn end(&self) -> i64 {
        self.start + self.len() as i64 - 1
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.values.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn rotation(&self) -> &[f64] {
        &self.rotation
    }

    pub fn boundary(&self) -> &Boundary {
        &self.boundary
    }

    /// Site by local position `0..len()`.
    pub fn site(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::new(self.start, self.dim, values, self.rotation.clone(), self.boundary.clone())
    }

    /// `d(u, ρ) = sup_n ‖u_n - (n - n₀)ρ - u_{n₀}‖` over the window.
    pub fn rotation_deviation(&self) -> f64 {
        let first = self.site(0);
        (0..self.len())
            .map(|i| {
                let u = self.site(i);
                let dev: Vec<f64> = (0..self.dim)
                    .map(|a| u[a] - i as f64 * self.rotation[a] - first[a])
                    .collect();
                norm(&dev)
            })
            .fold(0.0, f64::max)
    }
}

/// `Σ_{n=n₀}^{n₁-1} L(u_n, u_{n+1})`.
pub fn energy_window(lagrangian: &Lagrangian, config: &Configuration) -> Result<f64> {
    if config.dim() != lagrangian.dim() {
        return Err(Error::usage(format!(
            "configuration dimension {} does not match Lagrangian dimension {}",
            config.dim(),
            lagrangian.dim()
        )));
    }
    Ok((0..config.len() - 1)
        .map(|i| lagrangian.value(config.site(i), config.site(i + 1)))
        .sum())
}
