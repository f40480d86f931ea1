//! Berry maps, geometric Hamiltonians and loop holonomy.

use std::f64::consts::PI;

use crate::bundle::{Frame, GaugeElement};
use crate::error::{GeomError, Result};
use crate::fd;
use crate::grassmann::Projector;
use crate::linalg::{self, c, commutator, hermitian_part, ComplexMatrix, Tolerances};

use super::integrate::{horizontal_transport, integrate_frame, integrate_projector};
use super::path::{FramePath, ProjectorPath, TimeGrid};
use super::schedule::HamiltonianSchedule;

/// Outcome of [`berry_maps`].
#[derive(Debug, Clone)]
pub struct HolonomyResult {
    /// `σ*φ(T)` for the Schrödinger lift `φ`.
    pub dynamical: GaugeElement,
    /// `σ*ψ(T)` for the horizontal lift `ψ`.
    pub geometric: GaugeElement,
    /// `ψ(T)*φ(T)`.
    pub fiber_gap: GaugeElement,
    /// Whether `‖P(T) − P(0)‖` is within the comparison tolerance. Open paths
    /// still report `dynamical` and `geometric`, which are then not unitary.
    pub closed: bool,
    pub closure_residual: f64,
    pub max_projector_defect: f64,
    pub max_isometry_defect: f64,
    pub max_horizontality_defect: f64,
    pub projector_path: ProjectorPath,
    pub frame_path: FramePath,
    pub transport_path: FramePath,
}

impl HolonomyResult {
    /// `arg det` of the geometric holonomy; the Berry phase for `m = 1`.
    pub fn berry_phase(&self) -> f64 {
        self.geometric.phase()
    }
}

/// Runs the projector flow, the Schrödinger lift and the horizontal lift of
/// `H` from `σ` and compares their endpoints.
pub fn berry_maps(
    schedule: &HamiltonianSchedule,
    p0: &Projector,
    sigma: &Frame,
    grid: &TimeGrid,
    tol: &Tolerances,
) -> Result<HolonomyResult> {
    let distance = sigma.projector().distance(p0);
    if distance > tol.comparison {
        return Err(GeomError::BaseMismatch { distance });
    }
    let projector_path = integrate_projector(schedule, p0, grid, tol)?;
    let frame_path = integrate_frame(schedule, sigma, grid, tol)?;
    let transport_path = horizontal_transport(&projector_path, sigma, tol)?;
    let s = sigma.matrix().adjoint();
    let phi_t = frame_path.end().matrix();
    let psi_t = transport_path.end().matrix();
    let closure_residual = projector_path.closure_residual();
    Ok(HolonomyResult {
        dynamical: GaugeElement::from_matrix_unchecked(&s * phi_t),
        geometric: GaugeElement::from_matrix_unchecked(&s * psi_t),
        fiber_gap: GaugeElement::from_matrix_unchecked(psi_t.adjoint() * phi_t),
        closed: closure_residual <= tol.comparison,
        closure_residual,
        max_projector_defect: projector_path.max_defect(),
        max_isometry_defect: frame_path.max_defect().max(transport_path.max_defect()),
        max_horizontality_defect: transport_path.max_horizontality(),
        projector_path,
        frame_path,
        transport_path,
    })
}

/// The sampled geometric Hamiltonian `H^Q_k = [Q̇_k, Q_k]` of a path, with
/// `Q̇` from fourth-order differences, linearly interpolated between nodes.
///
/// `continuity` is the constant `C` of the step bound `‖ΔQ‖ ≤ C·h`; without
/// it steps are compared against ten times their mean.
pub fn geometric_hamiltonian(
    q: &ProjectorPath,
    continuity: Option<f64>,
    tol: &Tolerances,
) -> Result<HamiltonianSchedule> {
    q.check_continuity(continuity)?;
    let grid = q.grid();
    let h = grid.h();
    let samples = q.samples();
    let len = samples.len();
    let values = (0..len)
        .map(|k| {
            let mut d = ComplexMatrix::zeros(q.dim(), q.dim());
            for (j, w) in fd::first_derivative_stencil(k, 0, len, 4) {
                d += samples[j].matrix() * c(w / h, 0.0);
            }
            linalg::anti_hermitian_part(&commutator(&hermitian_part(&d), samples[k].matrix()))
        })
        .collect();
    HamiltonianSchedule::sampled(grid.times().collect(), values, tol)
}

fn ensure_closed(path: &ProjectorPath, tol: &Tolerances) -> Result<()> {
    let residual = path.closure_residual();
    if residual > tol.comparison {
        return Err(GeomError::NotClosed { residual });
    }
    Ok(())
}

/// Holonomy `σ*ψ(T)` of the horizontal lift around a closed loop.
pub fn loop_holonomy(path: &ProjectorPath, sigma: &Frame, tol: &Tolerances) -> Result<GaugeElement> {
    ensure_closed(path, tol)?;
    let psi = horizontal_transport(path, sigma, tol)?;
    Ok(GaugeElement::from_matrix_unchecked(
        sigma.matrix().adjoint() * psi.end().matrix(),
    ))
}

/// Discrete holonomy `isometrize(σ* P_{N−1} ⋯ P_1 σ)` of a closed sequence of
/// projectors.
pub fn pancharatnam_oracle(samples: &[Projector], sigma: &Frame, tol: &Tolerances) -> Result<GaugeElement> {
    if samples.len() < 2 {
        return Err(GeomError::InvalidGrid("need at least two samples".into()));
    }
    let residual = samples[samples.len() - 1].distance(&samples[0]);
    if residual > tol.comparison {
        return Err(GeomError::NotClosed { residual });
    }
    let distance = sigma.projector().distance(&samples[0]);
    if distance > tol.comparison {
        return Err(GeomError::BaseMismatch { distance });
    }
    let mut v = sigma.matrix().clone();
    for (k, p) in samples.iter().enumerate().skip(1) {
        let next = p.matrix() * &v;
        let sv = linalg::singular_values(&next);
        let scale = linalg::singular_values(&v)[0];
        let sigma_min = sv.last().copied().unwrap_or(0.0) / scale;
        if sigma_min <= tol.structural {
            return Err(GeomError::DegenerateStep { sample: k, sigma_min });
        }
        v = next;
    }
    let g = sigma.matrix().adjoint() * v;
    let q = linalg::isometrize_matrix(&g, 0.0).map_err(|_| GeomError::DegenerateStep {
        sample: samples.len() - 1,
        sigma_min: 0.0,
    })?;
    Ok(GaugeElement::from_matrix_unchecked(q))
}

/// The latitude loop at polar angle `θ` on `Gr_1(C^2)`, extended to rank `m`
/// in `C^{m+1}` by the fixed vectors `e_3, …, e_{m+1}`.
///
/// `H = −i(ω/2)(e₁e₁* − e₂e₂*)` rotates `|ψ_θ⟩ = (cos θ/2, sin θ/2)` once
/// around the axis in time `2π/ω`.
#[derive(Debug, Clone)]
pub struct LatitudeLoop {
    pub theta: f64,
    pub omega: f64,
    pub rank: usize,
}

impl LatitudeLoop {
    pub fn new(theta: f64, omega: f64, rank: usize) -> Result<Self> {
        if !(theta.is_finite() && omega.is_finite()) || omega == 0.0 {
            return Err(GeomError::InvalidGrid(format!("theta {theta}, omega {omega}")));
        }
        if rank == 0 {
            return Err(GeomError::DimensionTooSmall { n: 1, m: 0 });
        }
        Ok(Self { theta, omega, rank })
    }

    pub fn dim(&self) -> usize {
        self.rank + 1
    }

    pub fn period(&self) -> f64 {
        2.0 * PI / self.omega.abs()
    }

    pub fn schedule(&self) -> HamiltonianSchedule {
        let n = self.dim();
        let mut h = ComplexMatrix::zeros(n, n);
        h[(0, 0)] = c(0.0, -0.5 * self.omega);
        h[(1, 1)] = c(0.0, 0.5 * self.omega);
        HamiltonianSchedule::Constant(h)
    }

    pub fn frame(&self) -> Frame {
        let n = self.dim();
        let mut f = ComplexMatrix::zeros(n, self.rank);
        let (s, co) = (0.5 * self.theta).sin_cos();
        f[(0, 0)] = c(co, 0.0);
        f[(1, 0)] = c(s, 0.0);
        for j in 1..self.rank {
            f[(j + 1, j)] = c(1.0, 0.0);
        }
        Frame::from_matrix_unchecked(f)
    }

    pub fn projector(&self) -> Projector {
        self.frame().projector()
    }

    pub fn grid(&self, steps: usize) -> Result<TimeGrid> {
        TimeGrid::new(0.0, self.period(), steps)
    }

    /// `arg` of the geometric holonomy: `−sgn(ω)·π(1 − cos θ)`, wrapped to
    /// `(−π, π]`.
    pub fn expected_phase(&self) -> f64 {
        wrap_phase(-self.omega.signum() * PI * (1.0 - self.theta.cos()))
    }

    /// `π(1 − cos θ)`, half the enclosed solid angle.
    pub fn solid_angle_phase(&self) -> f64 {
        PI * (1.0 - self.theta.cos())
    }

    /// `N + 1` exact samples of the loop, first equal to last.
    pub fn samples(&self, n_samples: usize) -> Vec<Projector> {
        let h = self.schedule().at(0.0);
        let p0 = self.projector();
        let t = self.period();
        (0..=n_samples)
            .map(|k| {
                if k == n_samples {
                    return p0.clone();
                }
                let u = linalg::mat_exp(&h.scale(t * k as f64 / n_samples as f64))
                    .expect("finite generator");
                p0.conjugate(&u)
            })
            .collect()
    }
}

/// Maps an angle to `(−π, π]`.
pub fn wrap_phase(a: f64) -> f64 {
    let mut x = a.rem_euclid(2.0 * PI);
    if x > PI {
        x -= 2.0 * PI;
    }
    x
}

/// Distance between two angles on the circle.
pub fn phase_distance(a: f64, b: f64) -> f64 {
    wrap_phase(a - b).abs()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::schedule::{ProjectorCurve, SmoothLoop};
    use crate::linalg::{prng, random_antihermitian_with, random_frame_with};
    use std::sync::Arc;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn zero_schedule_gives_identities() {
        let sigma = Frame::standard(3, 2);
        let grid = TimeGrid::new(0.0, 1.0, 10).unwrap();
        let r = berry_maps(&HamiltonianSchedule::zero(3), &sigma.projector(), &sigma, &grid, &tol()).unwrap();
        assert!(r.closed);
        for g in [&r.dynamical, &r.geometric, &r.fiber_gap] {
            assert!(g.distance_from_identity() < 1e-15);
        }
    }

    #[test]
    fn open_path_is_flagged() {
        let mut rng = prng(1);
        let sigma = random_frame_with(&mut rng, 3, 1);
        let hs = HamiltonianSchedule::constant(random_antihermitian_with(&mut rng, 3), &tol()).unwrap();
        let grid = TimeGrid::new(0.0, 0.7, 100).unwrap();
        let r = berry_maps(&hs, &sigma.projector(), &sigma, &grid, &tol()).unwrap();
        assert!(!r.closed);
        assert!(r.closure_residual > 1e-3);
        assert!(r.fiber_gap.unitarity_defect() < 1e-8);
    }

    #[test]
    fn equatorial_loop_holonomy_is_minus_one() {
        let lat = LatitudeLoop::new(PI / 2.0, 1.0, 1).unwrap();
        let grid = lat.grid(4000).unwrap();
        let path = integrate_projector(&lat.schedule(), &lat.projector(), &grid, &tol()).unwrap();
        let g = loop_holonomy(&path, &lat.frame(), &tol()).unwrap();
        assert!((g.matrix()[(0, 0)] - c(-1.0, 0.0)).norm() < 1e-4);
        let oracle = pancharatnam_oracle(&lat.samples(10_000), &lat.frame(), &tol()).unwrap();
        assert!((oracle.matrix() - g.matrix()).norm() < 2e-3);
    }

    #[test]
    fn latitude_phase_sign() {
        let lat = LatitudeLoop::new(PI / 3.0, 1.0, 1).unwrap();
        let grid = lat.grid(4000).unwrap();
        let r = berry_maps(&lat.schedule(), &lat.projector(), &lat.frame(), &grid, &tol()).unwrap();
        assert!(r.closed);
        assert!(phase_distance(r.berry_phase(), lat.expected_phase()) < 1e-4);
        assert!((r.berry_phase().abs() - lat.solid_angle_phase()).abs() < 1e-4);
    }

    #[test]
    fn reversed_loop_gives_adjoint() {
        let mut rng = prng(5);
        let curve: Arc<dyn ProjectorCurve> = Arc::new(SmoothLoop::random(&mut rng, 4, 2, 1.0));
        let grid = TimeGrid::new(0.0, 1.0, 1000).unwrap();
        let path = ProjectorPath::from_curve(curve, grid);
        let sigma = linalg::isometrize(
            &(path.start().matrix() * random_frame_with(&mut rng, 4, 2).matrix()),
            &tol(),
        )
        .unwrap();
        let g = loop_holonomy(&path, &sigma, &tol()).unwrap();
        let g_rev = loop_holonomy(&path.reversed(), &sigma, &tol()).unwrap();
        assert!((g_rev.matrix() - g.matrix().adjoint()).norm() < 1e-6);
        let sampled = path.without_schedule();
        let g_s = loop_holonomy(&sampled, &sigma, &tol()).unwrap();
        assert!((g_s.matrix() - g.matrix()).norm() < 1e-6);
        let g_s_rev = loop_holonomy(&sampled.reversed(), &sigma, &tol()).unwrap();
        assert!((g_s_rev.matrix() - g_s.matrix().adjoint()).norm() < 1e-6);
    }

    #[test]
    fn loop_holonomy_rejects_open_path() {
        let lat = LatitudeLoop::new(1.0, 1.0, 1).unwrap();
        let grid = TimeGrid::new(0.0, 1.0, 100).unwrap();
        let path = integrate_projector(&lat.schedule(), &lat.projector(), &grid, &tol()).unwrap();
        assert!(matches!(
            loop_holonomy(&path, &lat.frame(), &tol()),
            Err(GeomError::NotClosed { .. })
        ));
    }

    #[test]
    fn geometric_schedule_closes_fiber_gap() {
        let mut rng = prng(6);
        let curve: Arc<dyn ProjectorCurve> = Arc::new(SmoothLoop::random(&mut rng, 4, 2, 2.0));
        let grid = TimeGrid::new(0.0, 2.0, 2000).unwrap();
        let q0 = Projector::from_matrix_unchecked(curve.point(0.0, 0.0), 2);
        let sigma = crate::grassmann::BasePoint::from_projector(&q0).frame().clone();
        let r = berry_maps(&HamiltonianSchedule::geometric(curve), &q0, &sigma, &grid, &tol()).unwrap();
        assert!(r.closed);
        assert!(r.fiber_gap.distance_from_identity() < 1e-8);
    }

    #[test]
    fn sampled_geometric_hamiltonian_residual() {
        let mut rng = prng(7);
        let curve: Arc<dyn ProjectorCurve> = Arc::new(SmoothLoop::random(&mut rng, 3, 1, 1.0));
        let grid = TimeGrid::new(0.0, 1.0, 2000).unwrap();
        let path = ProjectorPath::from_curve(curve.clone(), grid);
        let hq = geometric_hamiltonian(&path, None, &tol()).unwrap();
        for k in [0, 3, 1000, 2000] {
            let t = grid.t(k);
            let q = path.samples()[k].matrix();
            let residual = (curve.velocity(t, t) - commutator(&hq.at(t), q)).norm();
            assert!(residual < 1e-6, "node {k}: {residual}");
        }
        let constant = ProjectorPath::new(grid, vec![Projector::standard(3, 1); 2001]).unwrap();
        let hz = geometric_hamiltonian(&constant, None, &tol()).unwrap();
        assert!(hz.at(0.5).norm() == 0.0);
    }

    #[test]
    fn oracle_examples() {
        let sigma = Frame::standard(2, 1);
        let p = sigma.projector();
        let g = pancharatnam_oracle(&[p.clone(), p.clone()], &sigma, &tol()).unwrap();
        assert!(g.distance_from_identity() < 1e-15);
        let flip = Projector::from_matrix_unchecked(linalg::real_matrix(2, 2, &[0.0, 0.0, 0.0, 1.0]), 1);
        assert!(matches!(
            pancharatnam_oracle(&[p.clone(), flip, p], &sigma, &tol()),
            Err(GeomError::DegenerateStep { sample: 1, .. })
        ));
    }

    #[test]
    fn oracle_converges() {
        // Off the equator; there the discrete product is exact at any sampling.
        let lat = LatitudeLoop::new(PI / 3.0, 1.0, 1).unwrap();
        let grid = lat.grid(4000).unwrap();
        let path = integrate_projector(&lat.schedule(), &lat.projector(), &grid, &tol()).unwrap();
        let g = loop_holonomy(&path, &lat.frame(), &tol()).unwrap();
        let coarse = pancharatnam_oracle(&lat.samples(100), &lat.frame(), &tol()).unwrap();
        let fine = pancharatnam_oracle(&lat.samples(1000), &lat.frame(), &tol()).unwrap();
        let gap_coarse = (coarse.matrix() - g.matrix()).norm();
        let gap_fine = (fine.matrix() - g.matrix()).norm();
        assert!(gap_coarse >= 5.0 * gap_fine, "{gap_coarse} vs {gap_fine}");
    }

    #[test]
    fn wrap() {
        assert!((wrap_phase(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-15);
        assert!((phase_distance(PI - 0.01, -PI + 0.01) - 0.02).abs() < 1e-12);
    }
}
