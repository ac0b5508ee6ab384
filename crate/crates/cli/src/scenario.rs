//! Declarative scenario files (TOML, `schema_version = 1`).

use std::path::Path;

use fkgap_core::equilibrium::{Addresses, AubryParams};
use fkgap_core::hull::{DiophantineParams, HullSolveOptions};
use fkgap_core::model::{CosineFactor, FourierMode, FrequencyModule, TrigProduct};
use fkgap_core::phonon::VerdictRules;
use fkgap_core::{Boundary, Configuration, InteractionPotential, Lagrangian, OnSite, QuasiPeriodicPotential, WellPotential, ZeroSet};
use serde::{Deserialize, Serialize};

use crate::Failure;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Kam,
    AntiIntegrable,
    CustomWindow,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema_version: u32,
    pub name: String,
    pub kind: Kind,
    pub kam: Option<KamSection>,
    pub anti_integrable: Option<AiSection>,
    pub custom_window: Option<CustomSection>,
    #[serde(default)]
    pub gap: GapSection,
}

// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeEntry {
    pub k: Vec<i64>,
    pub amplitude: f64,
    #[serde(default)]
    pub phase: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiophantineSection {
    pub nu: f64,
    pub tau: f64,
    pub weights: Option<Vec<f64>>,
    pub k_max: usize,
    pub n_max: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KamSection {
    /// Frequency module `α`.
    pub frequencies: Vec<f64>,
    #[serde(default)]
    pub modes: Vec<ModeEntry>,
    pub omega: f64,
    pub cutoff: usize,
    pub grid: Option<usize>,
    #[serde(default = "default_hull_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    /// Truncation half-widths `k` for the sliding-mode quotient.
    pub ks: Vec<usize>,
    #[serde(default = "default_betas")]
    pub betas: Vec<f64>,
    /// Grid nodes per torus dimension for sampled sup-norms.
    #[serde(default = "default_sup_grid")]
    pub sup_grid: usize,
    pub diophantine: Option<DiophantineSection>,
}

fn default_hull_tol() -> f64 {
    1e-12
}
fn default_max_iter() -> usize {
    30
}
fn default_betas() -> Vec<f64> {
    vec![0.0]
}
fn default_sup_grid() -> usize {
    128
}

// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermEntry {
    pub amplitude: f64,
    /// One `(wave, phase)` cosine factor per entry.
    pub waves: Vec<Vec<f64>>,
    #[serde(default)]
    pub phases: Vec<f64>,
}

/// On-site well. `cosine` is `Σ_j (1 - cos 2πx_j)/(4π²)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum WellEntry {
    Cosine { dim: usize },
    Zero { dim: usize },
    Trig {
        dim: usize,
        #[serde(default)]
        constant: f64,
        terms: Vec<TermEntry>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
#[derive(Default)]
pub enum InteractionEntry {
    #[default]
    Quadratic,
    QuadraticQuartic { quartic: f64 },
}


#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ZeroSetEntry {
    Lattice { generators: Vec<Vec<f64>>, offsets: Vec<Vec<f64>> },
    Points { points: Vec<Vec<f64>> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AubrySection {
    pub big_r: f64,
    pub r: f64,
    pub m: f64,
    pub domain_lo: Vec<f64>,
    pub domain_hi: Vec<f64>,
    pub grid: f64,
    #[serde(default = "default_zero_tol")]
    pub zero_tol: f64,
    pub zero_set: ZeroSetEntry,
}

fn default_zero_tol() -> f64 {
    1e-9
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Substitution {
    pub site: i64,
    pub point: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PeriodicShift {
    pub period: i64,
    pub residue: i64,
    pub shift: Vec<f64>,
}

/// `z_n = offset + nρ`, then periodic shifts, then explicit substitutions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AddressSection {
    pub offset: Vec<f64>,
    #[serde(default)]
    pub periodic_shifts: Vec<PeriodicShift>,
    #[serde(default)]
    pub substitutions: Vec<Substitution>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UniquenessSection {
    pub trials: usize,
    pub delta: f64,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AiSection {
    pub well: WellEntry,
    #[serde(default)]
    pub interaction: InteractionEntry,
    /// `λ`
    pub coupling: f64,
    pub rho: Vec<f64>,
    pub aubry: AubrySection,
    pub addresses: AddressSection,
    pub windows: Vec<usize>,
    #[serde(default = "default_hull_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    pub uniqueness: Option<UniquenessSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomSection {
    pub well: WellEntry,
    #[serde(default)]
    pub interaction: InteractionEntry,
    pub coupling: f64,
    pub start: i64,
    /// Flat site values, `dim` entries per site.
    pub values: Vec<f64>,
    pub rotation: Vec<f64>,
    /// Clamp values; both or neither. Without them the window is free.
    pub left: Option<Vec<f64>>,
    pub right: Option<Vec<f64>>,
    /// Newton-solve the window before measuring.
    #[serde(default)]
    pub solve: bool,
    #[serde(default = "default_hull_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    pub windows: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GapSection {
    #[serde(default = "default_eig_tol")]
    pub tol: f64,
    #[serde(default)]
    pub rules: Option<RulesEntry>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RulesEntry {
    pub persist_tolerance: f64,
    pub floor: f64,
    pub vanish_factor: f64,
}

fn default_eig_tol() -> f64 {
    1e-12
}

impl Default for GapSection {
    fn default() -> Self {
        GapSection { tol: default_eig_tol(), rules: None }
    }
}

impl GapSection {
    pub fn rules(&self) -> VerdictRules {
        match self.rules {
            Some(r) => VerdictRules {
                persist_tolerance: r.persist_tolerance,
                floor: r.floor,
                vanish_factor: r.vanish_factor,
            },
            None => VerdictRules::default(),
        }
    }
}

// ---------------------------------------------------------------------------

fn schema(msg: impl Into<String>) -> Failure {
    Failure::Schema(msg.into())
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path).map_err(|e| schema(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, Failure> {
        let s: Scenario = toml::from_str(text).map_err(|e| schema(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    fn validate(&self) -> Result<(), Failure> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(schema(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        let present = [
            (Kind::Kam, self.kam.is_some()),
            (Kind::AntiIntegrable, self.anti_integrable.is_some()),
            (Kind::CustomWindow, self.custom_window.is_some()),
        ];
        for (kind, has) in present {
            if has != (kind == self.kind) {
                return Err(schema(format!(
                    "kind = {:?} requires exactly the matching section",
                    self.kind
                )));
            }
        }
        if !(self.gap.tol > 0.0) {
            return Err(schema("gap.tol must be positive"));
        }
        match self.kind {
            Kind::Kam => {
                let k = self.kam.as_ref().unwrap();
                if k.ks.is_empty() || k.betas.is_empty() {
                    return Err(schema("kam.ks and kam.betas must be non-empty"));
                }
            }
            Kind::AntiIntegrable => {
                let a = self.anti_integrable.as_ref().unwrap();
                if a.windows.is_empty() {
                    return Err(schema("anti_integrable.windows must be non-empty"));
                }
            }
            Kind::CustomWindow => {}
        }
        Ok(())
    }
}

impl KamSection {
    pub fn potential(&self) -> Result<QuasiPeriodicPotential, Failure> {
        let module = FrequencyModule::new(self.frequencies.clone())?;
        let modes = self
            .modes
            .iter()
            .map(|m| FourierMode {
                k: m.k.clone(),
                amplitude: m.amplitude,
                phase: m.phase,
            })
            .collect();
        Ok(QuasiPeriodicPotential::new(module, modes)?)
    }

    pub fn diophantine_params(&self) -> Option<DiophantineParams> {
        self.diophantine.as_ref().map(|d| DiophantineParams {
            nu: d.nu,
            tau: d.tau,
            weights: d.weights.clone(),
            k_max: d.k_max,
            n_max: d.n_max,
        })
    }

    pub fn solve_options(&self) -> HullSolveOptions {
        HullSolveOptions {
            cutoff: self.cutoff,
            grid: self.grid,
            tol: self.tol,
            max_iter: self.max_iter,
            diophantine: self.diophantine_params(),
        }
    }
}

impl WellEntry {
    pub fn build(&self) -> Result<OnSite, Failure> {
        Ok(match self {
            WellEntry::Cosine { dim } => OnSite::Well(WellPotential::cosine_well(*dim)),
            WellEntry::Zero { dim } => OnSite::Zero { dim: *dim },
            WellEntry::Trig { dim, constant, terms } => {
                let terms = terms
                    .iter()
                    .map(|t| {
                        if !t.phases.is_empty() && t.phases.len() != t.waves.len() {
                            return Err(schema("each trig term needs one phase per wave, or none"));
                        }
                        Ok(TrigProduct {
                            amplitude: t.amplitude,
                            factors: t
                                .waves
                                .iter()
                                .enumerate()
                                .map(|(i, w)| CosineFactor {
                                    wave: w.clone(),
                                    phase: t.phases.get(i).copied().unwrap_or(0.0),
                                })
                                .collect(),
                        })
                    })
                    .collect::<Result<Vec<_>, Failure>>()?;
                OnSite::Well(WellPotential::new(*dim, *constant, terms)?)
            }
        })
    }

    /// The gradient field `ψ = ∇V` when the well has closed-form derivatives.
    pub fn field(&self) -> Result<WellPotential, Failure> {
        match self.build()? {
            OnSite::Well(w) => Ok(w),
            _ => Err(schema("the Aubry check needs a nonzero well")),
        }
    }
}

impl InteractionEntry {
    pub fn build(&self, dim: usize) -> InteractionPotential {
        match *self {
            InteractionEntry::Quadratic => InteractionPotential::Quadratic { dim },
            InteractionEntry::QuadraticQuartic { quartic } => InteractionPotential::QuadraticQuartic { dim, quartic },
        }
    }
}

fn lagrangian(well: &WellEntry, interaction: &InteractionEntry, coupling: f64) -> Result<Lagrangian, Failure> {
    use fkgap_core::model::Potential;
    let onsite = well.build()?;
    let dim = onsite.dim();
    Ok(Lagrangian::new(interaction.build(dim), onsite, coupling)?)
}

impl AubrySection {
    pub fn params(&self) -> AubryParams {
        AubryParams {
            big_r: self.big_r,
            r: self.r,
            m: self.m,
            domain_lo: self.domain_lo.clone(),
            domain_hi: self.domain_hi.clone(),
            grid: self.grid,
            zero_tol: self.zero_tol,
        }
    }

    pub fn zero_set(&self) -> Result<ZeroSet, Failure> {
        let z = match &self.zero_set {
            ZeroSetEntry::Lattice { generators, offsets } => ZeroSet::Lattice {
                generators: generators.clone(),
                offsets: offsets.clone(),
            },
            ZeroSetEntry::Points { points } => ZeroSet::Points { points: points.clone() },
        };
        z.validate()?;
        Ok(z)
    }
}

impl AiSection {
    pub fn lagrangian(&self) -> Result<Lagrangian, Failure> {
        lagrangian(&self.well, &self.interaction, self.coupling)
    }

    /// Addresses over `|n| ≤ max(windows)/2 + 2`; the outer two clamp the solve.
    pub fn addresses(&self) -> Result<Addresses, Failure> {
        let d = self.rho.len();
        let section = &self.addresses;
        if d == 0 || section.offset.len() != d {
            return Err(schema("addresses.offset and rho must have the same nonzero length"));
        }
        let half = (*self.windows.iter().max().unwrap() / 2 + 2) as i64;
        let mut points = Vec::with_capacity((2 * half as usize + 1) * d);
        for n in -half..=half {
            let mut z: Vec<f64> = (0..d).map(|a| section.offset[a] + n as f64 * self.rho[a]).collect();
            for p in &section.periodic_shifts {
                if p.period <= 0 || p.shift.len() != d {
                    return Err(schema("periodic shifts need a positive period and a shift of length d"));
                }
                if n.rem_euclid(p.period) == p.residue.rem_euclid(p.period) {
                    z.iter_mut().zip(&p.shift).for_each(|(a, b)| *a += b);
                }
            }
            if let Some(s) = section.substitutions.iter().rev().find(|s| s.site == n) {
                if s.point.len() != d {
                    return Err(schema("substituted address has the wrong dimension"));
                }
                z = s.point.clone();
            }
            points.extend(z);
        }
        if section.substitutions.iter().any(|s| s.site.abs() > half) {
            log::warn!("address substitutions outside |n| <= {half} are ignored");
        }
        Ok(Addresses { start: -half, dim: d, points })
    }
}

impl CustomSection {
    pub fn lagrangian(&self) -> Result<Lagrangian, Failure> {
        lagrangian(&self.well, &self.interaction, self.coupling)
    }

    pub fn configuration(&self, dim: usize) -> Result<Configuration, Failure> {
        let boundary = match (&self.left, &self.right) {
            (Some(l), Some(r)) => Boundary::Clamped {
                left: l.clone(),
                right: r.clone(),
            },
            (None, None) => Boundary::Free,
            _ => return Err(schema("custom_window needs both clamps or neither")),
        };
        Ok(Configuration::new(self.start, dim, self.values.clone(), self.rotation.clone(), boundary)?)
    }
}
