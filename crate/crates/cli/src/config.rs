//! Experiment configuration files.

use serde::{Deserialize, Serialize};

use grassmann_holonomy::{linalg, ComplexMatrix, Tolerances, C64};

use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;
pub const MAX_DIM: usize = 256;

/// A complex entry; plain numbers are accepted as real values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Complex {
    Pair { re: f64, im: f64 },
    Real(f64),
}

impl Complex {
    pub fn value(self) -> C64 {
        match self {
            Complex::Pair { re, im } => C64::new(re, im),
            Complex::Real(re) => C64::new(re, 0.0),
        }
    }
}

impl From<C64> for Complex {
    fn from(z: C64) -> Self {
        Complex::Pair { re: z.re, im: z.im }
    }
}

/// Row-major nested arrays.
pub type MatrixRows = Vec<Vec<Complex>>;

pub fn matrix_from_rows(rows: &MatrixRows) -> Result<ComplexMatrix, CliError> {
    let rows: Vec<Vec<C64>> = rows
        .iter()
        .map(|r| r.iter().map(|z| z.value()).collect())
        .collect();
    linalg::from_rows(&rows).map_err(|e| CliError::Usage(format!("matrix: {e}")))
}

pub fn rows_from_matrix(m: &ComplexMatrix) -> MatrixRows {
    linalg::to_rows(m)
        .into_iter()
        .map(|r| r.into_iter().map(Complex::from).collect())
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default)]
    pub t0: f64,
    /// Defaults to the period of a latitude schedule, else `t0 + 1`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t1: Option<f64>,
    pub steps: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            t0: 0.0,
            t1: None,
            steps: 4000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScheduleConfig {
    Zero,
    /// Either an explicit anti-Hermitian generator or a seeded random one of
    /// the given norm.
    Constant {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        generator: Option<MatrixRows>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        norm: Option<f64>,
    },
    /// `theta`/`omega` select the latitude loop (requires `n = m + 1`);
    /// otherwise `base` and `generator` give `e^{tK} A e^{−tK}`.
    Rotating {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        theta: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        omega: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        base: Option<MatrixRows>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        generator: Option<MatrixRows>,
    },
    Sampled {
        knots: Vec<f64>,
        values: Vec<MatrixRows>,
    },
    /// The geometric Hamiltonian of a seeded random smooth loop.
    Geometric {
        #[serde(default = "default_period")]
        period: f64,
    },
}

fn default_period() -> f64 {
    1.0
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        ScheduleConfig::Rotating {
            theta: Some(std::f64::consts::FRAC_PI_2),
            omega: Some(1.0),
            base: None,
            generator: None,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceOverrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub structural: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ode: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub comparison: Option<f64>,
}

impl ToleranceOverrides {
    pub fn set(&mut self, key: &str, value: f64) -> Result<(), CliError> {
        match key {
            "structural" => self.structural = Some(value),
            "ode" => self.ode = Some(value),
            "comparison" => self.comparison = Some(value),
            _ => return Err(CliError::Usage(format!("unknown tolerance `{key}`"))),
        }
        Ok(())
    }

    pub fn resolve(&self) -> Result<Tolerances, CliError> {
        let d = Tolerances::default();
        let structural = self.structural.unwrap_or(d.structural);
        // A tighter structural override drags the other two along so the
        // ordering constraint still holds.
        let ode = self.ode.unwrap_or(d.ode.max(structural));
        let comparison = self.comparison.unwrap_or(d.comparison.max(structural));
        Tolerances::new(structural, ode, comparison).map_err(|e| CliError::Usage(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthesisConfig {
    /// Anti-Hermitian `m × m`; seeded random when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w: Option<MatrixRows>,
    #[serde(default = "default_scale")]
    pub t: f64,
    #[serde(default = "default_steps_per_leg")]
    pub steps_per_leg: usize,
}

fn default_scale() -> f64 {
    0.1
}

fn default_steps_per_leg() -> usize {
    200
}

impl Default for SynthesisConfig {
    fn default() -> Self {
        Self {
            w: None,
            t: default_scale(),
            steps_per_leg: default_steps_per_leg(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdiabaticConfig {
    pub totals: Vec<f64>,
    #[serde(default = "default_steps_per_unit")]
    pub steps_per_unit: f64,
    /// Spectral gap of the instantaneous Hamiltonian.
    #[serde(default = "default_gap")]
    pub gap: f64,
    /// Norm of the random rotation generator.
    #[serde(default = "default_gap")]
    pub sweep_norm: f64,
}

fn default_steps_per_unit() -> f64 {
    100.0
}

fn default_gap() -> f64 {
    1.0
}

impl Default for AdiabaticConfig {
    fn default() -> Self {
        Self {
            totals: vec![5.0, 10.0, 20.0, 40.0, 80.0],
            steps_per_unit: default_steps_per_unit(),
            gap: default_gap(),
            sweep_norm: default_gap(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub version: u32,
    pub n: usize,
    pub m: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub schedule: ScheduleConfig,
    #[serde(default)]
    pub tolerances: ToleranceOverrides,
    /// Initial frame; derived from the schedule or drawn at random when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frame: Option<MatrixRows>,
    /// Number of random cases for `chart`.
    #[serde(default = "default_cases")]
    pub cases: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synthesis: Option<SynthesisConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub adiabatic: Option<AdiabaticConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
}

fn default_cases() -> usize {
    100
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            version: SCHEMA_VERSION,
            n: 2,
            m: 1,
            seed: 0,
            grid: GridConfig::default(),
            schedule: ScheduleConfig::default(),
            tolerances: ToleranceOverrides::default(),
            frame: None,
            cases: default_cases(),
            synthesis: None,
            adiabatic: None,
            output: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| CliError::Usage(format!("config: {e}")))?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.version != SCHEMA_VERSION {
            return Err(CliError::Usage(format!(
                "unsupported config version {} (expected {SCHEMA_VERSION})",
                self.version
            )));
        }
        if !(1 <= self.m && self.m < self.n && self.n <= MAX_DIM) {
            return Err(CliError::Usage(format!(
                "dimensions must satisfy 1 <= m < n <= {MAX_DIM}, got n = {}, m = {}",
                self.n, self.m
            )));
        }
        if self.grid.steps < 2 {
            return Err(CliError::Usage(format!("grid.steps must be at least 2, got {}", self.grid.steps)));
        }
        if self.cases == 0 {
            return Err(CliError::Usage("cases must be positive".into()));
        }
        self.tolerances.resolve()?;
        Ok(())
    }
}
