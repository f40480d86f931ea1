//! Time-dependent anti-Hermitian generators `H(t)` and the closed-form
//! projector curves that induce geometric ones.

use std::fmt::Debug;
use std::sync::Arc;

use crate::error::{GeomError, Result};
use crate::grassmann::{BasePoint, Projector};
use crate::linalg::{
    self, anti_hermitian_part, commutator, ensure_anti_hermitian, ensure_finite, identity,
    mat_exp, ComplexMatrix, Prng, Tolerances,
};

/// A smooth (or piecewise smooth) curve of rank-`m` projectors with an exact
/// velocity.
///
/// `hint` is a time strictly inside the step being evaluated; piecewise curves
/// use it to pick the piece when `t` falls on a breakpoint.
pub trait ProjectorCurve: Debug + Send + Sync {
    fn dim(&self) -> usize;
    fn rank(&self) -> usize;
    /// `(t0, t1)`.
    fn span(&self) -> (f64, f64);
    fn point(&self, t: f64, hint: f64) -> ComplexMatrix;
    fn velocity(&self, t: f64, hint: f64) -> ComplexMatrix;
    /// Interior times where the velocity may jump.
    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }
}

/// `Q(t) = U(t) Q₀ U(t)*` with `U = e^{f(t)A} e^{g(t)B}`,
/// `f = a sin(2πt/T)`, `g = b(1 − cos(2πt/T))`. Closed over `[0, T]`.
#[derive(Debug, Clone)]
pub struct SmoothLoop {
    q0: ComplexMatrix,
    rank: usize,
    a_gen: ComplexMatrix,
    b_gen: ComplexMatrix,
    a: f64,
    b: f64,
    period: f64,
}

impl SmoothLoop {
    pub fn new(
        q0: &Projector,
        a_gen: ComplexMatrix,
        b_gen: ComplexMatrix,
        amplitudes: (f64, f64),
        period: f64,
        tol: &Tolerances,
    ) -> Result<Self> {
        let n = q0.dim();
        for g in [&a_gen, &b_gen] {
            if g.shape() != (n, n) {
                return Err(GeomError::DimensionMismatch(format!("generator must be {n}x{n}")));
            }
            ensure_anti_hermitian(g, tol.structural)?;
        }
        if !(period.is_finite() && period > 0.0) {
            return Err(GeomError::InvalidGrid(format!("period {period}")));
        }
        Ok(Self {
            q0: q0.matrix().clone(),
            rank: q0.rank(),
            a_gen: anti_hermitian_part(&a_gen),
            b_gen: anti_hermitian_part(&b_gen),
            a: amplitudes.0,
            b: amplitudes.1,
            period,
        })
    }

    /// Random generators of unit norm, random amplitudes in `[0.5, 1.5)`.
    pub fn random(rng: &mut Prng, n: usize, m: usize, period: f64) -> Self {
        use rand::Rng;
        let a_gen = linalg::with_norm(&linalg::random_antihermitian_with(rng, n), 1.0);
        let b_gen = linalg::with_norm(&linalg::random_antihermitian_with(rng, n), 1.0);
        let q0 = linalg::random_frame_with(rng, n, m).projector();
        let a = rng.random_range(0.5..1.5);
        let b = rng.random_range(0.5..1.5);
        Self {
            q0: q0.into_matrix(),
            rank: m,
            a_gen,
            b_gen,
            a,
            b,
            period,
        }
    }

    fn parts(&self, t: f64) -> (f64, f64, f64, f64) {
        let w = 2.0 * std::f64::consts::PI / self.period;
        let (s, c) = (w * t).sin_cos();
        (self.a * s, self.b * (1.0 - c), self.a * w * c, self.b * w * s)
    }

    fn unitary(&self, t: f64) -> (ComplexMatrix, ComplexMatrix) {
        let (f, g, _, _) = self.parts(t);
        let ea = mat_exp(&self.a_gen.scale(f)).expect("finite generator");
        let eb = mat_exp(&self.b_gen.scale(g)).expect("finite generator");
        (ea, eb)
    }
}

impl ProjectorCurve for SmoothLoop {
    fn dim(&self) -> usize {
        self.q0.nrows()
    }

    fn rank(&self) -> usize {
        self.rank
    }

    fn span(&self) -> (f64, f64) {
        (0.0, self.period)
    }

    fn point(&self, t: f64, _hint: f64) -> ComplexMatrix {
        let (ea, eb) = self.unitary(t);
        let u = ea * eb;
        linalg::hermitian_part(&(&u * &self.q0 * u.adjoint()))
    }

    fn velocity(&self, t: f64, hint: f64) -> ComplexMatrix {
        let (_, _, df, dg) = self.parts(t);
        let (ea, _) = self.unitary(t);
        let k = self.a_gen.scale(df) + (&ea * &self.b_gen * ea.adjoint()).scale(dg);
        linalg::hermitian_part(&commutator(&k, &self.point(t, hint)))
    }
}

/// Closed polygon in the chart at `base`: vertex `j` at time `j`, straight
/// legs of unit duration between consecutive vertices.
#[derive(Debug, Clone)]
pub struct ChartPolygon {
    base: BasePoint,
    vertices: Vec<ComplexMatrix>,
}

impl ChartPolygon {
    pub fn new(base: BasePoint, vertices: Vec<ComplexMatrix>) -> Result<Self> {
        if vertices.len() < 2 {
            return Err(GeomError::InvalidGrid("a polygon needs at least two vertices".into()));
        }
        for v in &vertices {
            if v.shape() != (base.codim(), base.rank()) {
                return Err(GeomError::DimensionMismatch("vertex has wrong shape".into()));
            }
            ensure_finite(v)?;
        }
        Ok(Self { base, vertices })
    }

    pub fn legs(&self) -> usize {
        self.vertices.len() - 1
    }

    pub fn base(&self) -> &BasePoint {
        &self.base
    }

    fn leg(&self, hint: f64) -> usize {
        (hint.floor().max(0.0) as usize).min(self.legs() - 1)
    }

    /// `(G, M)` with `G = frame + coframe·F`, `M = (G*G)⁻¹`.
    fn graph(&self, t: f64, hint: f64) -> (ComplexMatrix, ComplexMatrix, ComplexMatrix) {
        let j = self.leg(hint);
        let step = &self.vertices[j + 1] - &self.vertices[j];
        let f = &self.vertices[j] + step.scale(t - j as f64);
        let g = self.base.frame().matrix() + self.base.coframe().matrix() * &f;
        let m = (g.adjoint() * &g)
            .cholesky()
            .expect("graph frame has full rank")
            .inverse();
        (g, m, step)
    }
}

impl ProjectorCurve for ChartPolygon {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn rank(&self) -> usize {
        self.base.rank()
    }

    fn span(&self) -> (f64, f64) {
        (0.0, self.legs() as f64)
    }

    fn point(&self, t: f64, hint: f64) -> ComplexMatrix {
        let (g, m, _) = self.graph(t, hint);
        linalg::hermitian_part(&(&g * m * g.adjoint()))
    }

    fn velocity(&self, t: f64, hint: f64) -> ComplexMatrix {
        let (g, m, step) = self.graph(t, hint);
        let q = &g * &m * g.adjoint();
        let a = (identity(self.dim()) - q) * self.base.coframe().matrix() * step * m * g.adjoint();
        &a + a.adjoint()
    }

    fn breakpoints(&self) -> Vec<f64> {
        (1..self.legs()).map(|j| j as f64).collect()
    }
}

/// `t ↦ Q(t0 + t1 − t)`.
#[derive(Debug, Clone)]
pub struct Reversed(pub Arc<dyn ProjectorCurve>);

impl Reversed {
    fn mirror(&self, t: f64) -> f64 {
        let (t0, t1) = self.0.span();
        t0 + t1 - t
    }
}

impl ProjectorCurve for Reversed {
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn rank(&self) -> usize {
        self.0.rank()
    }

    fn span(&self) -> (f64, f64) {
        self.0.span()
    }

    fn point(&self, t: f64, hint: f64) -> ComplexMatrix {
        self.0.point(self.mirror(t), self.mirror(hint))
    }

    fn velocity(&self, t: f64, hint: f64) -> ComplexMatrix {
        -self.0.velocity(self.mirror(t), self.mirror(hint))
    }

    fn breakpoints(&self) -> Vec<f64> {
        let mut b: Vec<f64> = self.0.breakpoints().into_iter().map(|t| self.mirror(t)).collect();
        b.reverse();
        b
    }
}

/// A time-dependent anti-Hermitian generator.
#[derive(Debug, Clone)]
pub enum HamiltonianSchedule {
    Constant(ComplexMatrix),
    /// `H(t) = e^{tK} A e^{−tK}`.
    Rotating {
        base: ComplexMatrix,
        generator: ComplexMatrix,
    },
    /// Piecewise-linear interpolation between `values` at increasing `knots`.
    Sampled {
        knots: Vec<f64>,
        values: Vec<ComplexMatrix>,
    },
    /// `H(t) = [Q̇(t), Q(t)]`, which drives `Q` with vanishing diagonal blocks.
    GeometricFromCurve(Arc<dyn ProjectorCurve>),
}

impl HamiltonianSchedule {
    pub fn constant(h: ComplexMatrix, tol: &Tolerances) -> Result<Self> {
        linalg::ensure_square(&h, "Hamiltonian")?;
        ensure_anti_hermitian(&h, tol.structural)?;
        Ok(Self::Constant(anti_hermitian_part(&h)))
    }

    pub fn zero(n: usize) -> Self {
        Self::Constant(ComplexMatrix::zeros(n, n))
    }

    pub fn rotating(base: ComplexMatrix, generator: ComplexMatrix, tol: &Tolerances) -> Result<Self> {
        linalg::ensure_square(&base, "Hamiltonian")?;
        if generator.shape() != base.shape() {
            return Err(GeomError::DimensionMismatch("generator and base differ in size".into()));
        }
        ensure_anti_hermitian(&base, tol.structural)?;
        ensure_anti_hermitian(&generator, tol.structural)?;
        Ok(Self::Rotating {
            base: anti_hermitian_part(&base),
            generator: anti_hermitian_part(&generator),
        })
    }

    pub fn sampled(knots: Vec<f64>, values: Vec<ComplexMatrix>, tol: &Tolerances) -> Result<Self> {
        if knots.len() != values.len() || knots.len() < 2 {
            return Err(GeomError::InvalidGrid(
                "a sampled schedule needs matching knots and values, at least two".into(),
            ));
        }
        if knots.windows(2).any(|w| w[1].partial_cmp(&w[0]) != Some(std::cmp::Ordering::Greater)) || knots.iter().any(|t| !t.is_finite()) {
            return Err(GeomError::InvalidGrid("knots must increase strictly".into()));
        }
        let n = values[0].nrows();
        for v in &values {
            if v.shape() != (n, n) {
                return Err(GeomError::DimensionMismatch("sampled values differ in size".into()));
            }
            ensure_anti_hermitian(v, tol.structural)?;
        }
        Ok(Self::Sampled { knots, values })
    }

    pub fn geometric(curve: Arc<dyn ProjectorCurve>) -> Self {
        Self::GeometricFromCurve(curve)
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Constant(h) => h.nrows(),
            Self::Rotating { base, .. } => base.nrows(),
            Self::Sampled { values, .. } => values[0].nrows(),
            Self::GeometricFromCurve(c) => c.dim(),
        }
    }

    pub fn at(&self, t: f64) -> ComplexMatrix {
        self.at_within(t, t)
    }

    /// `H(t)`, with `hint` selecting the piece at breakpoints.
    pub fn at_within(&self, t: f64, hint: f64) -> ComplexMatrix {
        match self {
            Self::Constant(h) => h.clone(),
            Self::Rotating { base, generator } => {
                let u = mat_exp(&generator.scale(t)).expect("finite generator");
                anti_hermitian_part(&(&u * base * u.adjoint()))
            }
            Self::Sampled { knots, values } => {
                let last = knots.len() - 1;
                let j = match knots.partition_point(|&k| k <= hint) {
                    0 => 0,
                    p => (p - 1).min(last - 1),
                };
                let s = ((t - knots[j]) / (knots[j + 1] - knots[j])).clamp(0.0, 1.0);
                values[j].scale(1.0 - s) + values[j + 1].scale(s)
            }
            Self::GeometricFromCurve(c) => {
                commutator(&c.velocity(t, hint), &c.point(t, hint))
            }
        }
    }

    /// Interior times where `H` may be discontinuous.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            Self::GeometricFromCurve(c) => c.breakpoints(),
            _ => Vec::new(),
        }
    }

    /// The schedule tracing the reversed flow over `[t0, t1]`:
    /// `H_rev(t) = −H(t0 + t1 − t)`.
    pub fn reversed(&self, t0: f64, t1: f64) -> Self {
        let s = t0 + t1;
        match self {
            Self::Constant(h) => Self::Constant(-h),
            Self::Rotating { base, generator } => {
                let u = mat_exp(&generator.scale(s)).expect("finite generator");
                Self::Rotating {
                    base: -anti_hermitian_part(&(&u * base * u.adjoint())),
                    generator: -generator,
                }
            }
            Self::Sampled { knots, values } => Self::Sampled {
                knots: knots.iter().rev().map(|k| s - k).collect(),
                values: values.iter().rev().map(|v| -v).collect(),
            },
            Self::GeometricFromCurve(c) => {
                debug_assert!({
                    let (a, b) = c.span();
                    (a + b - s).abs() <= 1e-9 * (1.0 + s.abs())
                });
                Self::GeometricFromCurve(Arc::new(Reversed(c.clone())))
            }
        }
    }

    /// `max ‖H(t_k)‖` over the given times.
    pub fn max_norm(&self, times: impl IntoIterator<Item = f64>) -> f64 {
        times.into_iter().map(|t| self.at(t).norm()).fold(0.0, f64::max)
    }
}
