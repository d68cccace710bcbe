//! TOML experiment configuration.
//!
//! ```toml
//! seed = 7
//!
//! [medium]
//! omega_extent = [0.5, 0.5]
//! epsilon = 0.25
//! a_eps = 0.25
//! regime = "critical"
//! obstacle_radius = 0.25
//! mu = 1.0
//! g = 1.0
//!
//! [forcing]
//! f1 = [{ c = 0.5 }, { c = -1.0, py = 1 }]
//! f2 = [{ c = -0.5 }, { c = 1.0, px = 1 }]
//!
//! [sweep]
//! directions = 8
//! magnitudes = [1.0, 2.0, 4.0]
//! ```
//!
//! Every section except `[medium]` may be omitted.

use serde::{Deserialize, Serialize};
use thinpore::cell_problems::{ColumnConfig, TableParams};
use thinpore::geometry::{Lambda, MediumSpec, Regime};
use thinpore::macroscale::DarcyConfig;
use thinpore::vi_solver::VISolverConfig;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Single,
    Cell,
    Sweep,
    Darcy,
    EpsilonStudy,
    VerifyApriori,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Single => "single",
            Command::Cell => "cell",
            Command::Sweep => "sweep",
            Command::Darcy => "darcy",
            Command::EpsilonStudy => "epsilon-study",
            Command::VerifyApriori => "verify-apriori",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RegimeName {
    Critical,
    Subcritical,
    Supercritical,
}

impl From<RegimeName> for Regime {
    fn from(r: RegimeName) -> Self {
        match r {
            RegimeName::Critical => Regime::Critical,
            RegimeName::Subcritical => Regime::Subcritical,
            RegimeName::Supercritical => Regime::Supercritical,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Optional guard: when set, it must match the subcommand.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<Command>,
    /// Seed of the randomized test fields.
    #[serde(default)]
    pub seed: u64,
    pub medium: MediumConfig,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub column: ColumnSection,
    #[serde(default)]
    pub forcing: ForcingConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub darcy: DarcySection,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MediumConfig {
    pub omega_extent: [f64; 2],
    pub epsilon: f64,
    pub a_eps: f64,
    pub regime: RegimeName,
    /// Critical regime only; defaults to `a_eps / epsilon`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    pub obstacle_radius: f64,
    pub mu: f64,
    pub g: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    /// Cells per period along each axis, also the vertical resolution.
    pub cell_resolution: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig { cell_resolution: 16 }
    }
}

/// Overrides of the variational solver defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub adaptive_rho: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relaxation: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub accelerate: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol_rel: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol_div: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_outer: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lin_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inner_rel: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_lin_iter: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ColumnSection {
    pub cells: usize,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for ColumnSection {
    fn default() -> Self {
        let c = ColumnConfig::<f64>::default();
        ColumnSection {
            cells: c.cells,
            tol: c.tol,
            max_iter: c.max_iter,
        }
    }
}

/// Monomial `c x^px y^py`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Term {
    pub c: f64,
    #[serde(default)]
    pub px: u32,
    #[serde(default)]
    pub py: u32,
}

/// Polynomial forcing `f' = (f1, f2)` in macroscopic coordinates.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForcingConfig {
    #[serde(default)]
    pub f1: Vec<Term>,
    #[serde(default)]
    pub f2: Vec<Term>,
}

impl ForcingConfig {
    /// Constant forcing.
    pub fn constant(f: [f64; 2]) -> Self {
        ForcingConfig {
            f1: vec![Term { c: f[0], px: 0, py: 0 }],
            f2: vec![Term { c: f[1], px: 0, py: 0 }],
        }
    }

    /// Rotation `s (-(y - c2), x - c1)` about `c`.
    pub fn swirl(s: f64, c: [f64; 2]) -> Self {
        ForcingConfig {
            f1: vec![Term { c: s * c[1], px: 0, py: 0 }, Term { c: -s, px: 0, py: 1 }],
            f2: vec![Term { c: -s * c[0], px: 0, py: 0 }, Term { c: s, px: 1, py: 0 }],
        }
    }

    pub fn eval(&self, x: [f64; 2]) -> [f64; 2] {
        let p = |terms: &[Term]| {
            terms
                .iter()
                .map(|t| t.c * x[0].powi(t.px as i32) * x[1].powi(t.py as i32))
                .sum::<f64>()
        };
        [p(&self.f1), p(&self.f2)]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    /// Number of uniformly spaced directions of the permeability table.
    pub directions: usize,
    #[serde(default)]
    pub magnitudes: Vec<f64>,
    /// Explicit forces for `cell`.
    #[serde(default)]
    pub xi: Vec<[f64; 2]>,
    /// Decreasing `eps` of a family.
    #[serde(default)]
    pub epsilons: Vec<f64>,
    /// Periods matching `epsilons`; critical families default to `lambda eps`.
    #[serde(default)]
    pub a_eps: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flow_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold_steps: Option<usize>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            directions: 8,
            magnitudes: Vec::new(),
            xi: Vec::new(),
            epsilons: Vec::new(),
            a_eps: Vec::new(),
            flow_tol: None,
            threshold_steps: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DarcySection {
    pub dims: [usize; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relaxation: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iter: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mobility_floor: Option<f64>,
}

impl Default for DarcySection {
    fn default() -> Self {
        DarcySection {
            dims: [16, 16],
            relaxation: None,
            tol: None,
            max_iter: None,
            eta: None,
            mobility_floor: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Used when `--out` is not given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<String>,
    /// Write velocity and pressure dumps of `single` runs.
    #[serde(default)]
    pub dump_fields: bool,
    /// Random test fields for the inequality certificate of `single` runs.
    #[serde(default)]
    pub certificate_samples: usize,
}

fn check(ok: bool, field: &str, reason: &str) -> Result<(), CliError> {
    if ok {
        Ok(())
    } else {
        Err(CliError::validation(field, reason))
    }
}

/// Maps a core validation error onto a config path.
fn at(field: &str) -> impl Fn(thinpore::Error) -> CliError + '_ {
    move |e| match e {
        thinpore::Error::InvalidParameter { field: f, reason } => CliError::validation(&format!("{field}.{f}"), &reason),
        other => CliError::validation(field, &other.to_string()),
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| CliError::Parse(e.message().to_string()))?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn lambda(&self) -> Lambda<f64> {
        let m = &self.medium;
        match m.regime {
            RegimeName::Critical => Lambda::Finite(m.lambda.unwrap_or(m.a_eps / m.epsilon)),
            RegimeName::Subcritical => Lambda::Zero,
            RegimeName::Supercritical => Lambda::Infinity,
        }
    }

    pub fn medium_spec(&self) -> MediumSpec<f64> {
        self.medium_at(self.medium.epsilon, self.medium.a_eps)
    }

    pub fn medium_at(&self, epsilon: f64, a_eps: f64) -> MediumSpec<f64> {
        let m = &self.medium;
        MediumSpec {
            omega_extent: m.omega_extent,
            epsilon,
            a_eps,
            lambda: self.lambda(),
            obstacle_radius: m.obstacle_radius,
            mu: m.mu,
            g: m.g,
            regime: m.regime.into(),
        }
    }

    /// `(eps, a_eps)` of the family in `[sweep]`.
    pub fn family(&self) -> Result<Vec<(f64, f64)>, CliError> {
        let s = &self.sweep;
        let a = if s.a_eps.is_empty() {
            match self.lambda() {
                Lambda::Finite(l) => s.epsilons.iter().map(|e| l * e).collect(),
                _ => return Err(CliError::validation("sweep.a_eps", "required outside the critical regime")),
            }
        } else {
            s.a_eps.clone()
        };
        check(a.len() == s.epsilons.len(), "sweep.a_eps", "length must match sweep.epsilons")?;
        for (i, w) in s.epsilons.windows(2).enumerate() {
            check(w[1] < w[0], &format!("sweep.epsilons[{}]", i + 1), "must decrease")?;
        }
        let pairs: Vec<(f64, f64)> = s.epsilons.iter().copied().zip(a).collect();
        for (i, (e, a)) in pairs.iter().enumerate() {
            self.medium_at(*e, *a)
                .validate()
                .map_err(at(&format!("sweep[{i}]")))?;
            self.medium_at(*e, *a)
                .macro_cells()
                .map_err(|err| CliError::validation(&format!("sweep.a_eps[{i}]"), &err.to_string()))?;
        }
        Ok(pairs)
    }

    pub fn solver_config(&self) -> VISolverConfig<f64> {
        let s = &self.solver;
        let d = VISolverConfig::default();
        VISolverConfig {
            rho: s.rho.or(d.rho),
            adaptive_rho: s.adaptive_rho.unwrap_or(d.adaptive_rho),
            relaxation: s.relaxation.unwrap_or(d.relaxation),
            accelerate: s.accelerate.unwrap_or(d.accelerate),
            tol_rel: s.tol_rel.unwrap_or(d.tol_rel),
            tol_div: s.tol_div.unwrap_or(d.tol_div),
            max_outer: s.max_outer.unwrap_or(d.max_outer),
            lin_tol: s.lin_tol.unwrap_or(d.lin_tol),
            inner_rel: s.inner_rel.unwrap_or(d.inner_rel),
            max_lin_iter: s.max_lin_iter.unwrap_or(d.max_lin_iter),
            ..d
        }
    }

    pub fn column_config(&self) -> ColumnConfig<f64> {
        ColumnConfig {
            cells: self.column.cells,
            tol: self.column.tol,
            max_iter: self.column.max_iter,
        }
    }

    pub fn table_params(&self) -> TableParams<f64> {
        let mut p = TableParams::new(self.medium.mu, self.medium.g);
        p.solver = self.solver_config();
        if let Some(t) = self.sweep.flow_tol {
            p.flow_tol = t;
        }
        if let Some(s) = self.sweep.threshold_steps {
            p.threshold_steps = s;
        }
        p
    }

    pub fn darcy_config(&self) -> DarcyConfig<f64> {
        let s = &self.darcy;
        let d = DarcyConfig::default();
        DarcyConfig {
            relaxation: s.relaxation.unwrap_or(d.relaxation),
            tol: s.tol.unwrap_or(d.tol),
            max_iter: s.max_iter.unwrap_or(d.max_iter),
            eta: s.eta.or(d.eta),
            mobility_floor: s.mobility_floor.unwrap_or(d.mobility_floor),
        }
    }

    /// Checks the sections `command` reads.
    pub fn validate(&self, command: Command) -> Result<(), CliError> {
        if let Some(c) = self.command {
            check(c == command, "command", &format!("config is for `{}`", c.name()))?;
        }
        let spec = self.medium_spec();
        spec.validate().map_err(at("medium"))?;
        spec.macro_cells()
            .map_err(|e| CliError::validation("medium.a_eps", &e.to_string()))?;
        check(self.grid.cell_resolution >= 4, "grid.cell_resolution", "must be at least 4")?;
        self.solver_config().validate().map_err(at("solver"))?;
        for (name, terms) in [("forcing.f1", &self.forcing.f1), ("forcing.f2", &self.forcing.f2)] {
            check(terms.iter().all(|t| t.c.is_finite()), name, "coefficients must be finite")?;
        }
        match command {
            Command::Cell => {
                check(self.column.cells >= 2, "column.cells", "need at least two intervals")?;
                check(self.column.tol > 0.0, "column.tol", "must be positive")?;
                for (i, x) in self.sweep.xi.iter().enumerate() {
                    check(x.iter().all(|v| v.is_finite()), &format!("sweep.xi[{i}]"), "must be finite")?;
                }
            }
            Command::Sweep | Command::Darcy | Command::EpsilonStudy => {
                for (i, t) in self.sweep.magnitudes.iter().enumerate() {
                    check(*t > 0.0 && t.is_finite(), &format!("sweep.magnitudes[{i}]"), "must be positive")?;
                }
                if let Some(t) = self.sweep.flow_tol {
                    check(t > 0.0, "sweep.flow_tol", "must be positive")?;
                }
                if command != Command::Sweep {
                    check(self.sweep.directions >= 3, "sweep.directions", "need at least three")?;
                    check(!self.sweep.magnitudes.is_empty(), "sweep.magnitudes", "must not be empty")?;
                    check(self.darcy.dims.iter().all(|d| *d >= 2), "darcy.dims", "need at least two cells per side")?;
                    self.darcy_config().validate().map_err(at("darcy"))?;
                }
                if command == Command::EpsilonStudy {
                    check(!self.sweep.epsilons.is_empty(), "sweep.epsilons", "must not be empty")?;
                    self.family()?;
                }
            }
            Command::VerifyApriori => {
                check(!self.sweep.epsilons.is_empty(), "sweep.epsilons", "must not be empty")?;
                self.family()?;
            }
            Command::Single => {}
        }
        Ok(())
    }
}
