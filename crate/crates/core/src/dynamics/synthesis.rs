//! First-order holonomy synthesis by parallelogram loops in a chart.
//!
//! For each horizontal pair `(u_i, v_i)` from
//! [`curvature_generators`](crate::bundle::curvature_generators), the chart
//! loop `0 → tA → tA + tB → tB → 0` with `A = coframe* u_i`,
//! `B = coframe* v_i` encloses area `t²` in the `(A, B)` plane. Concatenating
//! these loops gives holonomy `exp(c t² w) + O(t³)` with
//! [`SYNTHESIS_CONSTANT`] `c = −2`: the curvature of `𝒜` on the pair is
//! `u*v − v*u = 2Ω(u, v)` and the holonomy of a small positively oriented loop
//! is `exp(−∮ curvature)`.

use std::sync::Arc;

use crate::bundle::curvature_generators;
use crate::error::{GeomError, Result};
use crate::grassmann::BasePoint;
use crate::linalg::{ComplexMatrix, Tolerances};

use super::path::{ProjectorPath, TimeGrid};
use super::schedule::ChartPolygon;

/// `c` in `log(holonomy) ≈ c t² w`; confirmed by a log-log fit in the tests.
pub const SYNTHESIS_CONSTANT: f64 = -2.0;

/// The concatenated parallelogram loop realizing `exp(c t² w)` to first
/// order. Each leg lasts one time unit and is sampled with `steps_per_leg`
/// steps; the path carries its geometric schedule. `w = 0` gives a constant
/// loop of four legs.
pub fn synthesize_holonomy_step(
    w: &ComplexMatrix,
    t: f64,
    base: &BasePoint,
    steps_per_leg: usize,
    tol: &Tolerances,
) -> Result<ProjectorPath> {
    if !(t.is_finite() && t > 0.0 && t <= 0.5) {
        return Err(GeomError::InvalidGrid(format!("scale t must lie in (0, 0.5], got {t}")));
    }
    if steps_per_leg == 0 {
        return Err(GeomError::InvalidGrid("steps_per_leg must be positive".into()));
    }
    let pairs = curvature_generators(w, base, tol)?;
    let coframe = base.coframe().matrix().adjoint();
    let zero = ComplexMatrix::zeros(base.codim(), base.rank());
    let mut vertices = vec![zero.clone()];
    if pairs.is_empty() {
        vertices.extend(std::iter::repeat_n(zero.clone(), 4));
    }
    for (u, v) in &pairs {
        let a = (&coframe * u.matrix()).scale(t);
        let b = (&coframe * v.matrix()).scale(t);
        vertices.push(a.clone());
        vertices.push(&a + &b);
        vertices.push(b);
        vertices.push(zero.clone());
    }
    let polygon = ChartPolygon::new(base.clone(), vertices)?;
    let legs = polygon.legs();
    let grid = TimeGrid::new(0.0, legs as f64, legs * steps_per_leg)?;
    Ok(ProjectorPath::from_curve(Arc::new(polygon), grid))
}
