//! Phonon spectra of equilibria: window Hessians, gap sweeps, the
//! truncated sliding-mode quotient, and the anti-integrable gap bound.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::equilibrium::Stencil;
use crate::error::{Error, Result};
use crate::hull::{sample_configuration, sliding_mode, HullFunction};
use crate::model::{Configuration, Lagrangian};
use crate::spectral::{spectral_extrema, HessianWindow, SpectralExtrema};

/// Absolute slack on `G` when comparing finite windows to the ℓ² bound.
pub const EDGE_TOLERANCE: f64 = 0.02;

/// `D²Φ(u)` restricted to the window's equation sites.
///
/// Diagonal blocks are `∇²I(u_n - u_{n+1}) + ∇²I(u_{n-1} - u_n) + λ∇²V(u_n)`,
/// off-diagonal blocks `-∇²I(u_n - u_{n+1})`. Neighbours outside the rows
/// (clamp values, or the end sites of a free window) enter only the diagonal.
pub fn assemble_hessian_window(lagrangian: &Lagrangian, config: &Configuration) -> Result<HessianWindow> {
    if config.dim() != lagrangian.dim() {
        return Err(Error::usage(format!(
            "configuration dimension {} does not match Lagrangian dimension {}",
            config.dim(),
            lagrangian.dim()
        )));
    }
    if config.len() < 3 {
        return Err(Error::usage("window needs at least 3 sites"));
    }
    let st = Stencil::new(config);
    let rows = st.rows();
    let mut diag = Vec::with_capacity(rows.len());
    let mut off = Vec::with_capacity(rows.len().saturating_sub(1));
    for i in rows.clone() {
        let u = config.site(i);
        let forward = lagrangian.bond_stiffness(u, st.right(i));
        let backward = lagrangian.bond_stiffness(st.left(i), u);
        diag.push(&forward + backward + lagrangian.onsite_stiffness(u));
        if i + 1 < rows.end {
            off.push(-forward);
        }
    }
    HessianWindow::new(config.dim(), diag, off)
}

/// Rules turning a sequence of finite windows into a verdict.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerdictRules {
    /// `gap_persists` needs the largest window's `abs_min` within this
    /// relative drop of the second largest.
    pub persist_tolerance: f64,
    /// `gap_persists` needs the largest window's `abs_min` above this.
    pub floor: f64,
    /// `gap_vanishes` needs a decrease by at least this factor from the
    /// smallest to the largest window.
    pub vanish_factor: f64,
}

impl Default for VerdictRules {
    fn default() -> Self {
        VerdictRules {
            persist_tolerance: 0.10,
            floor: 1e-3,
            vanish_factor: 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    GapPersists,
    GapVanishes,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapRow {
    /// Number of sites in the window.
    pub window: usize,
    pub abs_min: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
    /// `abs_min / max(|lambda_min|, |lambda_max|)`.
    pub gap_parameter: f64,
}

impl GapRow {
    fn new(window: usize, e: &SpectralExtrema) -> Self {
        GapRow {
            window,
            abs_min: e.abs_min,
            lambda_min: e.lambda_min,
            lambda_max: e.lambda_max,
            gap_parameter: e.gap_parameter(),
        }
    }
}

/// Truncated sliding-mode quotient for one half-width `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuotientRow {
    pub k: usize,
    /// `‖η^[k]‖₂ / ‖ξ^[k]‖₂`
    pub quotient: f64,
    pub eta_norm: f64,
    pub xi_norm: f64,
    /// `2/√(2k+1)`, the value for the free chain.
    pub free_chain_reference: f64,
    /// Spectral extrema of the window over sites `|n| ≤ k+1`.
    pub window: GapRow,
}

/// Anti-integrable lower bound on the gap parameter and its ingredients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AiGapBound {
    pub bound: f64,
    /// Bound on the interaction part `‖A‖ ≤ K`.
    pub a_norm_bound: f64,
    /// Bound `‖B⁻¹‖ ≤ 1/m` on the inverse on-site part.
    pub b_inverse_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundComparison {
    pub window: usize,
    pub gap_parameter: f64,
    pub bound: f64,
    /// `gap_parameter ≥ bound - EDGE_TOLERANCE`.
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub rows: Vec<GapRow>,
    pub verdict: Verdict,
    pub ai_bound: Option<AiGapBound>,
    pub bound_checks: Vec<BoundComparison>,
    pub quotients: Vec<QuotientRow>,
    /// `M` bound on `‖η^[k]‖₂`, when computed.
    pub eta_bound: Option<f64>,
}

impl GapReport {
    /// Attaches the anti-integrable bound and compares every window against it.
    pub fn with_ai_bound(mut self, bound: AiGapBound) -> Self {
        self.bound_checks = self
            .rows
            .iter()
            .map(|r| BoundComparison {
                window: r.window,
                gap_parameter: r.gap_parameter,
                bound: bound.bound,
                holds: r.gap_parameter >= bound.bound - EDGE_TOLERANCE,
            })
            .collect();
        self.ai_bound = Some(bound);
        self
    }
}

/// Verdict from `abs_min` per window (ascending size) and optional quotients.
pub fn classify(abs_mins: &[f64], quotients: &[f64], rules: &VerdictRules) -> Verdict {
    let decays = |seq: &[f64]| match (seq.first(), seq.last()) {
        (Some(&a), Some(&b)) if seq.len() >= 2 => b * rules.vanish_factor <= a,
        _ => false,
    };
    if decays(quotients) || decays(abs_mins) {
        return Verdict::GapVanishes;
    }
    match abs_mins {
        [] => Verdict::Inconclusive,
        [.., prev, last] if *last >= (1.0 - rules.persist_tolerance) * prev && *last > rules.floor => {
            Verdict::GapPersists
        }
        [only] if *only > rules.floor => Verdict::GapPersists,
        _ => Verdict::Inconclusive,
    }
}

/// Where window configurations come from.
#[derive(Debug, Clone, Copy)]
pub enum ConfigSource<'a> {
    /// Principal sub-windows of one solved configuration, centred on site 0
    /// (or on the middle site when 0 is outside the window).
    Fixed(&'a Configuration),
    /// Fresh hull samples `u_n(β)` over `n = -⌊N/2⌋ … ` with clamped ends.
    Hull { hull: &'a HullFunction, beta: f64 },
}

fn check_windows(sizes: &[usize]) -> Result<()> {
    if sizes.is_empty() {
        return Err(Error::usage("no window sizes given"));
    }
    if sizes.iter().any(|&n| n < 3) {
        return Err(Error::usage("window sizes must be at least 3"));
    }
    if sizes.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::usage("window sizes must be strictly increasing"));
    }
    Ok(())
}

/// Spectral extrema of centred windows of each size, with a verdict.
pub fn gap_sweep(
    lagrangian: &Lagrangian,
    source: ConfigSource<'_>,
    sizes: &[usize],
    tol: f64,
    rules: &VerdictRules,
) -> Result<GapReport> {
    check_windows(sizes)?;
    let rows: Vec<GapRow> = match source {
        ConfigSource::Fixed(config) => {
            let full = assemble_hessian_window(lagrangian, config)?;
            let offset = match config.boundary() {
                crate::model::Boundary::Clamped { .. } => 0,
                crate::model::Boundary::Free => 1,
            };
            let centre = ((-config.start()) as usize)
                .checked_sub(offset)
                .filter(|&c| config.start() <= 0 && c < full.sites())
                .unwrap_or(full.sites() / 2);
            sizes
                .par_iter()
                .map(|&n| {
                    let first = centre.checked_sub(n / 2).filter(|f| f + n <= full.sites()).ok_or_else(|| {
                        Error::usage(format!(
                            "window of {n} sites does not fit in a configuration with {} equation sites",
                            full.sites()
                        ))
                    })?;
                    let h = full.principal(first, n)?;
                    Ok(GapRow::new(n, &spectral_extrema(&h, tol)?))
                })
                .collect::<Result<_>>()?
        }
        ConfigSource::Hull { hull, beta } => sizes
            .par_iter()
            .map(|&n| {
                let n0 = -((n / 2) as i64);
                let c = sample_configuration(hull, beta, n0, n0 + n as i64 - 1)?;
                let h = assemble_hessian_window(lagrangian, &c)?;
                Ok(GapRow::new(n, &spectral_extrema(&h, tol)?))
            })
            .collect::<Result<_>>()?,
    };
    let abs_mins: Vec<f64> = rows.iter().map(|r| r.abs_min).collect();
    Ok(GapReport {
        verdict: classify(&abs_mins, &[], rules),
        rows,
        ai_bound: None,
        bound_checks: Vec::new(),
        quotients: Vec::new(),
        eta_bound: None,
    })
}

/// `q_k = ‖η^[k]‖₂ / ‖ξ^[k]‖₂` where `ξ^[k]` is the sliding mode truncated to
/// `|n| ≤ k` and `η^[k] = D²Φ(u) ξ^[k]`, evaluated through its four boundary
/// entries at `n = ±k, ±(k+1)`. Interior entries vanish for an exact hull.
///
/// Returns `(q_k, ‖η^[k]‖₂, ‖ξ^[k]‖₂)`.
pub fn kam_truncation_quotient(lagrangian: &Lagrangian, hull: &HullFunction, beta: f64, k: usize) -> Result<(f64, f64, f64)> {
    if k < 1 {
        return Err(Error::usage("truncation half-width k must be at least 1"));
    }
    if lagrangian.dim() != 1 {
        return Err(Error::usage("sliding-mode quotient needs a scalar chain"));
    }
    let k = k as i64;
    let u = sample_configuration(hull, beta, -k - 1, k + 1)?;
    let xi = sliding_mode(hull, beta, -k - 1, k + 1);
    // local index of site n
    let at = |n: i64| (n + k + 1) as usize;
    let site = |n: i64| u.site(at(n));
    let stiff = |a: i64, b: i64| lagrangian.bond_stiffness(site(a), site(b))[(0, 0)];
    let onsite = |n: i64| lagrangian.onsite_stiffness(site(n))[(0, 0)];
    let x = |n: i64| if n.abs() <= k { xi[at(n)] } else { 0.0 };
    let diag = |n: i64| stiff(n, n + 1) + stiff(n - 1, n) + onsite(n);

    let eta_k = -stiff(k - 1, k) * x(k - 1) + diag(k) * x(k);
    let eta_minus_k = diag(-k) * x(-k) - stiff(-k, -k + 1) * x(-k + 1);
    let eta_k1 = -stiff(k, k + 1) * x(k);
    let eta_minus_k1 = -stiff(-k - 1, -k) * x(-k);
    let eta_norm = (eta_k * eta_k + eta_minus_k * eta_minus_k + eta_k1 * eta_k1 + eta_minus_k1 * eta_minus_k1).sqrt();
    let xi_norm = (-k..=k).map(|n| x(n) * x(n)).sum::<f64>().sqrt();
    Ok((eta_norm / xi_norm, eta_norm, xi_norm))
}

/// `M = √(2N⁺² + 2(A N⁺ + N⁺)²)`, a `k`-independent bound on `‖η^[k]‖₂`.
pub fn kam_eta_bound(a_sup: f64, n_star_plus: f64) -> Result<f64> {
    if !(a_sup > 0.0 && n_star_plus > 0.0) {
        return Err(Error::usage("A and N*+ must be positive"));
    }
    let n = n_star_plus;
    Ok((2.0 * n * n + 2.0 * (a_sup * n + n).powi(2)).sqrt())
}

/// `(λm - K)/(λM + K)`, valid when `λ > K/m`.
pub fn ai_gap_bound(lambda: f64, m: f64, m_v: f64, k: f64) -> Result<AiGapBound> {
    if !(m > 0.0 && m_v >= m) {
        return Err(Error::usage(format!("need M >= m > 0, got m = {m}, M = {m_v}")));
    }
    if !(k >= 0.0) {
        return Err(Error::usage("K must be non-negative"));
    }
    if !(lambda > k / m) {
        return Err(Error::Domain(format!(
            "coupling {lambda} does not exceed K/m = {}; the bound is not valid",
            k / m
        )));
    }
    Ok(AiGapBound {
        bound: (lambda * m - k) / (lambda * m_v + k),
        a_norm_bound: k,
        b_inverse_bound: 1.0 / m,
    })
}

/// Sliding-mode quotients for each `k` with the spectral extrema of the
/// enclosing windows `|n| ≤ k+1`, plus a verdict on both sequences.
pub fn kam_gap_report(
    lagrangian: &Lagrangian,
    hull: &HullFunction,
    beta: f64,
    ks: &[usize],
    tol: f64,
    rules: &VerdictRules,
) -> Result<GapReport> {
    if ks.is_empty() || ks.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::usage("k values must be non-empty and strictly increasing"));
    }
    let quotients: Vec<QuotientRow> = ks
        .par_iter()
        .map(|&k| {
            let (q, eta, xi) = kam_truncation_quotient(lagrangian, hull, beta, k)?;
            let n0 = -(k as i64) - 1;
            let c = sample_configuration(hull, beta, n0, k as i64 + 1)?;
            let h = assemble_hessian_window(lagrangian, &c)?;
            let window = GapRow::new(2 * k + 3, &spectral_extrema(&h, tol)?);
            Ok(QuotientRow {
                k,
                quotient: q,
                eta_norm: eta,
                xi_norm: xi,
                free_chain_reference: 2.0 / ((2 * k + 1) as f64).sqrt(),
                window,
            })
        })
        .collect::<Result<_>>()?;
    let rows: Vec<GapRow> = quotients.iter().map(|q| q.window.clone()).collect();
    let abs_mins: Vec<f64> = rows.iter().map(|r| r.abs_min).collect();
    let qs: Vec<f64> = quotients.iter().map(|q| q.quotient).collect();
    Ok(GapReport {
        verdict: classify(&abs_mins, &qs, rules),
        rows,
        ai_bound: None,
        bound_checks: Vec::new(),
        quotients,
        eta_bound: None,
    })
}
