//! solve, verify, measure.

use fkgap_core::equilibrium::{anti_integrable_solve, check_aubry_criterion, newton_solve_window, residual, sup_norm, uniqueness_probe};
use fkgap_core::hull::{diophantine_check, hull_newton_solve, nondegeneracy_report, DiophantineReport, NondegeneracyReport};
use fkgap_core::phonon::{ai_gap_bound, gap_sweep, kam_eta_bound, kam_gap_report, ConfigSource};
use fkgap_core::{AiSolveReport, AubryCertificate, GapReport, HullFunction, Lagrangian, OnSite, Verdict};
use serde::{Deserialize, Serialize};

use crate::scenario::{AiSection, CustomSection, KamSection, Kind, Scenario};
use crate::{ErrorInfo, Failure};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    Error,
}

/// Deterministic result payload; field order is the JSON key order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub scenario: String,
    pub kind: Kind,
    pub status: Status,
    pub verdict: Option<Verdict>,
    pub error: Option<ErrorInfo>,
    pub kam: Option<KamReport>,
    pub anti_integrable: Option<AiReport>,
    pub custom_window: Option<CustomReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KamBeta {
    pub beta: f64,
    pub gap: GapReport,
    /// Every measured `‖η^[k]‖₂` is at most `M`.
    pub eta_within_bound: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KamReport {
    pub iterations: usize,
    pub residual_history: Vec<f64>,
    pub residual_sup: f64,
    pub grid: usize,
    pub hull_l2_norm: f64,
    pub warnings: Vec<String>,
    pub diophantine: Option<DiophantineReport>,
    pub nondegeneracy: NondegeneracyReport,
    /// `sup |2 - ∂²_αV̂|` on the sampling grid and by coefficient sum.
    pub a_sup_sampled: f64,
    pub a_sup_bound: f64,
    /// `sup |l̂|` by coefficient sum; the sampled value is in `nondegeneracy`.
    pub n_plus_bound: f64,
    /// `M` from the coefficient bounds.
    pub eta_bound: f64,
    pub betas: Vec<KamBeta>,
    pub hull: HullFunction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniquenessReport {
    pub trials: usize,
    pub delta: f64,
    pub seed: u64,
    pub unique: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AiReport {
    pub certificate: AubryCertificate,
    /// Coefficient bound on `sup σ_max(∇²V)`.
    pub hessian_bound: f64,
    pub solve: AiSolveReport,
    pub uniqueness: Option<UniquenessReport>,
    pub gap: GapReport,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CustomReport {
    pub iterations: Option<usize>,
    pub residual_history: Vec<f64>,
    pub residual_sup: f64,
    pub gap: GapReport,
}

impl Report {
    fn empty(scenario: &Scenario) -> Self {
        Report {
            schema_version: crate::scenario::SCHEMA_VERSION,
            scenario: scenario.name.clone(),
            kind: scenario.kind,
            status: Status::Ok,
            verdict: None,
            error: None,
            kam: None,
            anti_integrable: None,
            custom_window: None,
        }
    }

    pub fn failed(scenario: &Scenario, failure: &Failure) -> Self {
        Report {
            status: Status::Error,
            error: Some(failure.info()),
            ..Self::empty(scenario)
        }
    }
}

/// Runs the whole pipeline for one scenario.
pub fn run(scenario: &Scenario) -> Result<Report, Failure> {
    let mut report = Report::empty(scenario);
    let rules = scenario.gap.rules();
    let tol = scenario.gap.tol;
    match scenario.kind {
        Kind::Kam => {
            let k = run_kam(scenario.kam.as_ref().unwrap(), tol, &rules)?;
            report.verdict = k.betas.first().map(|b| b.gap.verdict);
            report.kam = Some(k);
        }
        Kind::AntiIntegrable => {
            let a = run_ai(scenario.anti_integrable.as_ref().unwrap(), tol, &rules)?;
            report.verdict = Some(a.gap.verdict);
            report.anti_integrable = Some(a);
        }
        Kind::CustomWindow => {
            let c = run_custom(scenario.custom_window.as_ref().unwrap(), tol, &rules)?;
            report.verdict = Some(c.gap.verdict);
            report.custom_window = Some(c);
        }
    }
    Ok(report)
}

fn run_kam(section: &KamSection, tol: f64, rules: &fkgap_core::VerdictRules) -> Result<KamReport, Failure> {
    let v = section.potential()?;
    let sol = hull_newton_solve(&v, section.omega, &section.solve_options())?;
    let h = &sol.hull;
    let nondegeneracy = nondegeneracy_report(h, sol.grid)?;
    let lagrangian = Lagrangian::for_hull(&v);

    let a_sup_sampled = v.sampled_sup(2, section.sup_grid, |x| 2.0 - x);
    let a_sup_bound = 2.0 + v.sup_bound(2);
    let n_plus_bound = 1.0
        + h.modes()
            .iter()
            .zip(h.coeffs())
            .map(|(k, c)| 2.0 * c.norm() * h.module().dot(k).abs())
            .sum::<f64>();
    let eta_bound = kam_eta_bound(a_sup_bound, n_plus_bound)?;

    let betas = section
        .betas
        .iter()
        .map(|&beta| {
            let gap = kam_gap_report(&lagrangian, h, beta, &section.ks, tol, rules)?;
            let gap = GapReport {
                eta_bound: Some(eta_bound),
                ..gap
            };
            let eta_within_bound = gap.quotients.iter().all(|q| q.eta_norm <= eta_bound);
            Ok(KamBeta {
                beta,
                gap,
                eta_within_bound,
            })
        })
        .collect::<Result<Vec<_>, Failure>>()?;

    Ok(KamReport {
        iterations: sol.iterations,
        residual_history: sol.history.clone(),
        residual_sup: sol.residual_sup,
        grid: sol.grid,
        hull_l2_norm: h.l2_norm(),
        warnings: sol.warnings.clone(),
        diophantine: sol.diophantine.clone(),
        nondegeneracy,
        a_sup_sampled,
        a_sup_bound,
        n_plus_bound,
        eta_bound,
        betas,
        hull: sol.hull,
    })
}

pub fn certificate(section: &AiSection) -> Result<AubryCertificate, Failure> {
    let psi = section.well.field()?;
    Ok(check_aubry_criterion(&psi, &section.aubry.zero_set()?, &section.aubry.params())?)
}

fn run_ai(section: &AiSection, tol: f64, rules: &fkgap_core::VerdictRules) -> Result<AiReport, Failure> {
    let lagrangian = section.lagrangian()?;
    let cert = certificate(section)?;
    let mut warnings = Vec::new();
    if !cert.pass {
        warnings.push("Aubry certificate failed; postconditions are reported but not guaranteed".to_string());
    }
    let addresses = section.addresses()?;
    let solve = anti_integrable_solve(&lagrangian, &addresses, &section.rho, &cert, section.tol, section.max_iter)?;
    let uniqueness = match &section.uniqueness {
        Some(u) => Some(UniquenessReport {
            trials: u.trials,
            delta: u.delta,
            seed: u.seed,
            unique: uniqueness_probe(&lagrangian, &solve, u.delta, u.trials, u.seed)?,
        }),
        None => None,
    };
    let hessian_bound = match &lagrangian.onsite {
        OnSite::Well(w) => w.hessian_bound(),
        _ => 0.0,
    };
    let mut gap = gap_sweep(&lagrangian, ConfigSource::Fixed(&solve.configuration), &section.windows, tol, rules)?;
    match ai_gap_bound(section.coupling, cert.m, hessian_bound.max(cert.m), solve.k_bound) {
        Ok(b) => gap = gap.with_ai_bound(b),
        Err(e) => warnings.push(format!("no anti-integrable gap bound: {e}")),
    }
    for w in &warnings {
        log::warn!("{w}");
    }
    Ok(AiReport {
        certificate: cert,
        hessian_bound,
        solve,
        uniqueness,
        gap,
        warnings,
    })
}

fn run_custom(section: &CustomSection, tol: f64, rules: &fkgap_core::VerdictRules) -> Result<CustomReport, Failure> {
    let lagrangian = section.lagrangian()?;
    let start = section.configuration(lagrangian.dim())?;
    let (config, iterations, history) = if section.solve {
        let sol = newton_solve_window(&lagrangian, &start, section.tol, section.max_iter, 1.0)?;
        (sol.configuration, Some(sol.iterations), sol.history)
    } else {
        (start, None, Vec::new())
    };
    let residual_sup = sup_norm(&residual(&lagrangian, &config)?);
    let gap = gap_sweep(&lagrangian, ConfigSource::Fixed(&config), &section.windows, tol, rules)?;
    Ok(CustomReport {
        iterations,
        residual_history: history,
        residual_sup,
        gap,
    })
}

/// Diophantine scan for a kam scenario.
pub fn diophantine(scenario: &Scenario) -> Result<DiophantineReport, Failure> {
    let section = scenario
        .kam
        .as_ref()
        .ok_or_else(|| Failure::Schema("diophantine needs a kam scenario".into()))?;
    let params = section
        .diophantine_params()
        .ok_or_else(|| Failure::Schema("scenario has no [kam.diophantine] table".into()))?;
    Ok(diophantine_check(section.omega, &section.potential()?.module().clone(), &params)?)
}

/// Aubry certificate for an anti_integrable scenario.
pub fn check_aubry(scenario: &Scenario) -> Result<AubryCertificate, Failure> {
    let section = scenario
        .anti_integrable
        .as_ref()
        .ok_or_else(|| Failure::Schema("check-aubry needs an anti_integrable scenario".into()))?;
    certificate(section)
}
