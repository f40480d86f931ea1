//! Uniform time grids and sampled projector / frame paths.

use crate::bundle::Frame;
use crate::error::{GeomError, Result};
use crate::grassmann::Projector;

use super::schedule::{HamiltonianSchedule, ProjectorCurve};

/// `t_k = t0 + k·h`, `h = (t1 − t0)/steps`, `k = 0..=steps`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    t0: f64,
    t1: f64,
    steps: usize,
}

impl TimeGrid {
    pub fn new(t0: f64, t1: f64, steps: usize) -> Result<Self> {
        if !(t0.is_finite() && t1.is_finite()) || t1 <= t0 {
            return Err(GeomError::InvalidGrid(format!("need t0 < t1, got [{t0}, {t1}]")));
        }
        if steps == 0 {
            return Err(GeomError::InvalidGrid("steps must be positive".into()));
        }
        Ok(Self { t0, t1, steps })
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn t1(&self) -> f64 {
        self.t1
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn h(&self) -> f64 {
        (self.t1 - self.t0) / self.steps as f64
    }

    pub fn t(&self, k: usize) -> f64 {
        if k == self.steps {
            self.t1
        } else {
            self.t0 + k as f64 * self.h()
        }
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.steps).map(|k| self.t(k))
    }

    /// Node indices splitting the grid into pieces at the given breakpoints.
    /// Breakpoints that do not fall on a node are ignored.
    pub fn pieces(&self, breakpoints: &[f64]) -> Vec<(usize, usize)> {
        let h = self.h();
        let mut cuts = vec![0];
        for &b in breakpoints {
            let k = ((b - self.t0) / h).round();
            if k <= 0.0 || k >= self.steps as f64 {
                continue;
            }
            let k = k as usize;
            if (self.t(k) - b).abs() <= 1e-9 * h && cuts.last() != Some(&k) {
                cuts.push(k);
            }
        }
        cuts.push(self.steps);
        cuts.windows(2).map(|w| (w[0], w[1] + 1)).collect()
    }
}

/// Projector samples on a grid, optionally with the schedule that produced
/// them.
#[derive(Debug, Clone)]
pub struct ProjectorPath {
    grid: TimeGrid,
    samples: Vec<Projector>,
    schedule: Option<HamiltonianSchedule>,
    max_defect: f64,
}

impl ProjectorPath {
    pub fn new(grid: TimeGrid, samples: Vec<Projector>) -> Result<Self> {
        if samples.len() != grid.steps() + 1 {
            return Err(GeomError::InvalidGrid(format!(
                "{} samples for {} steps",
                samples.len(),
                grid.steps()
            )));
        }
        let (n, m) = (samples[0].dim(), samples[0].rank());
        if samples.iter().any(|p| p.dim() != n || p.rank() != m) {
            return Err(GeomError::DimensionMismatch("samples differ in shape".into()));
        }
        let max_defect = samples.iter().map(Projector::defect).fold(0.0, f64::max);
        Ok(Self {
            grid,
            samples,
            schedule: None,
            max_defect,
        })
    }

    /// Samples `curve` on `grid`; the curve's geometric schedule is attached.
    pub fn from_curve(curve: std::sync::Arc<dyn ProjectorCurve>, grid: TimeGrid) -> Self {
        let m = curve.rank();
        let h = grid.h();
        let samples: Vec<Projector> = (0..=grid.steps())
            .map(|k| {
                // Sample each node from the piece that starts there.
                let t = grid.t(k);
                let hint = if k == grid.steps() { t - 0.5 * h } else { t + 0.5 * h };
                Projector::from_matrix_unchecked(curve.point(t, hint), m)
            })
            .collect();
        let max_defect = samples.iter().map(Projector::defect).fold(0.0, f64::max);
        Self {
            grid,
            samples,
            schedule: Some(HamiltonianSchedule::geometric(curve)),
            max_defect,
        }
    }

    pub(crate) fn from_parts(
        grid: TimeGrid,
        samples: Vec<Projector>,
        schedule: Option<HamiltonianSchedule>,
        max_defect: f64,
    ) -> Self {
        Self {
            grid,
            samples,
            schedule,
            max_defect,
        }
    }

    pub fn with_schedule(mut self, schedule: HamiltonianSchedule) -> Self {
        self.schedule = Some(schedule);
        self
    }

    pub fn without_schedule(mut self) -> Self {
        self.schedule = None;
        self
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn samples(&self) -> &[Projector] {
        &self.samples
    }

    pub fn schedule(&self) -> Option<&HamiltonianSchedule> {
        self.schedule.as_ref()
    }

    pub fn start(&self) -> &Projector {
        &self.samples[0]
    }

    pub fn end(&self) -> &Projector {
        self.samples.last().expect("paths are nonempty")
    }

    pub fn dim(&self) -> usize {
        self.samples[0].dim()
    }

    pub fn rank(&self) -> usize {
        self.samples[0].rank()
    }

    /// Largest projector defect seen along the path, including before any
    /// retraction.
    pub fn max_defect(&self) -> f64 {
        self.max_defect
    }

    /// `‖P(T) − P(0)‖`.
    pub fn closure_residual(&self) -> f64 {
        self.end().distance(self.start())
    }

    /// The same loop traversed backwards over the same time interval.
    pub fn reversed(&self) -> Self {
        let mut samples = self.samples.clone();
        samples.reverse();
        Self {
            grid: self.grid,
            samples,
            schedule: self
                .schedule
                .as_ref()
                .map(|s| s.reversed(self.grid.t0(), self.grid.t1())),
            max_defect: self.max_defect,
        }
    }

    /// Fails with `PathTooRough` if some `‖P_{k+1} − P_k‖` exceeds `C·h` for
    /// the given `C`, or ten times the mean step when no constant is given.
    pub fn check_continuity(&self, constant: Option<f64>) -> Result<()> {
        let steps: Vec<f64> = self
            .samples
            .windows(2)
            .map(|w| w[1].distance(&w[0]))
            .collect();
        let bound = match constant {
            Some(c) => c * self.grid.h(),
            None => 10.0 * steps.iter().sum::<f64>() / steps.len() as f64,
        };
        for (k, &step) in steps.iter().enumerate() {
            if step > bound && step > f64::EPSILON {
                return Err(GeomError::PathTooRough { node: k, step, bound });
            }
        }
        Ok(())
    }
}

/// Frame samples on a grid.
#[derive(Debug, Clone)]
pub struct FramePath {
    grid: TimeGrid,
    samples: Vec<Frame>,
    max_defect: f64,
    horizontality: Option<Vec<f64>>,
}

impl FramePath {
    pub fn new(grid: TimeGrid, samples: Vec<Frame>) -> Result<Self> {
        if samples.len() != grid.steps() + 1 {
            return Err(GeomError::InvalidGrid(format!(
                "{} samples for {} steps",
                samples.len(),
                grid.steps()
            )));
        }
        let shape = samples[0].shape();
        if samples.iter().any(|f| f.shape() != shape) {
            return Err(GeomError::DimensionMismatch("samples differ in shape".into()));
        }
        let max_defect = samples.iter().map(Frame::defect).fold(0.0, f64::max);
        Ok(Self {
            grid,
            samples,
            max_defect,
            horizontality: None,
        })
    }

    pub(crate) fn from_parts(
        grid: TimeGrid,
        samples: Vec<Frame>,
        max_defect: f64,
        horizontality: Option<Vec<f64>>,
    ) -> Self {
        Self {
            grid,
            samples,
            max_defect,
            horizontality,
        }
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn samples(&self) -> &[Frame] {
        &self.samples
    }

    pub fn start(&self) -> &Frame {
        &self.samples[0]
    }

    pub fn end(&self) -> &Frame {
        self.samples.last().expect("paths are nonempty")
    }

    /// Largest isometry defect seen along the path, including before any
    /// retraction.
    pub fn max_defect(&self) -> f64 {
        self.max_defect
    }

    /// Per-node `‖ψ*ψ̇‖` for horizontal transports.
    pub fn horizontality(&self) -> Option<&[f64]> {
        self.horizontality.as_deref()
    }

    pub fn max_horizontality(&self) -> f64 {
        self.horizontality
            .as_ref()
            .map_or(0.0, |h| h.iter().copied().fold(0.0, f64::max))
    }

    /// `max_k ‖π(φ_k) − P_k‖` against a path on the same grid.
    pub fn tracking_error(&self, path: &ProjectorPath) -> f64 {
        self.samples
            .iter()
            .zip(path.samples())
            .map(|(f, p)| f.projector().distance(p))
            .fold(0.0, f64::max)
    }
}
