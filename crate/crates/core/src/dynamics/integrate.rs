//! Classical fourth-order Runge–Kutta for `φ̇ = Hφ`, `Ṗ = [H, P]` and
//! horizontal transport, with retraction onto the constraint set whenever the
//! post-step defect exceeds the `ode` tolerance.

use crate::bundle::Frame;
use crate::error::{GeomError, Result};
use crate::fd;
use crate::grassmann::{linear_hamiltonian_unchecked, Projector};
use crate::linalg::{
    self, c, commutator, hermitian_part, identity, nearest_projector, polar_isometry,
    ComplexMatrix, Tolerances,
};

use super::path::{FramePath, ProjectorPath, TimeGrid};
use super::schedule::HamiltonianSchedule;

fn rk4_step<F>(f: F, t: f64, h: f64, y: &ComplexMatrix) -> ComplexMatrix
where
    F: Fn(f64, &ComplexMatrix) -> ComplexMatrix,
{
    let k1 = f(t, y);
    let k2 = f(t + 0.5 * h, &(y + k1.scale(0.5 * h)));
    let k3 = f(t + 0.5 * h, &(y + k2.scale(0.5 * h)));
    let k4 = f(t + h, &(y + k3.scale(h)));
    y + (k1 + k2.scale(2.0) + k3.scale(2.0) + k4).scale(h / 6.0)
}

fn check_dim(schedule: &HamiltonianSchedule, n: usize) -> Result<()> {
    if schedule.dim() != n {
        return Err(GeomError::DimensionMismatch(format!(
            "schedule acts on C^{}, state lives in C^{n}",
            schedule.dim()
        )));
    }
    Ok(())
}

/// Integrates `φ̇ = H(t)φ` from `φ0`.
pub fn integrate_frame(
    schedule: &HamiltonianSchedule,
    phi0: &Frame,
    grid: &TimeGrid,
    tol: &Tolerances,
) -> Result<FramePath> {
    check_dim(schedule, phi0.shape().0)?;
    let h = grid.h();
    let mut samples = Vec::with_capacity(grid.steps() + 1);
    samples.push(phi0.clone());
    let mut y = phi0.matrix().clone();
    let mut max_defect = phi0.defect();
    for k in 0..grid.steps() {
        let t = grid.t(k);
        let hint = t + 0.5 * h;
        y = rk4_step(|s, x| schedule.at_within(s, hint) * x, t, h, &y);
        let defect = linalg::isometry_defect(&y);
        max_defect = max_defect.max(defect);
        if defect > tol.ode {
            y = polar_isometry(&y, tol)?;
        }
        samples.push(Frame::from_matrix_unchecked(y.clone()));
    }
    Ok(FramePath::from_parts(*grid, samples, max_defect, None))
}

/// Integrates `Ṗ = [H(t), P]` from `P0`. The schedule is attached to the
/// returned path.
pub fn integrate_projector(
    schedule: &HamiltonianSchedule,
    p0: &Projector,
    grid: &TimeGrid,
    tol: &Tolerances,
) -> Result<ProjectorPath> {
    check_dim(schedule, p0.dim())?;
    let m = p0.rank();
    let h = grid.h();
    let mut samples = Vec::with_capacity(grid.steps() + 1);
    samples.push(p0.clone());
    let mut y = p0.matrix().clone();
    let mut max_defect = p0.defect();
    for k in 0..grid.steps() {
        let t = grid.t(k);
        let hint = t + 0.5 * h;
        y = hermitian_part(&rk4_step(
            |s, x| commutator(&schedule.at_within(s, hint), x),
            t,
            h,
            &y,
        ));
        let defect = linalg::projector_defect(&y, m);
        max_defect = max_defect.max(defect);
        if defect > tol.ode {
            y = nearest_projector(&y, m, tol)?.into_matrix();
        }
        samples.push(Projector::from_matrix_unchecked(y.clone(), m));
    }
    Ok(ProjectorPath::from_parts(
        *grid,
        samples,
        Some(schedule.clone()),
        max_defect,
    ))
}

/// `ũ(P_k) = −i tr(H(t_k) P_k)` along a path carrying its schedule.
pub fn energy_along(path: &ProjectorPath) -> Vec<f64> {
    match path.schedule() {
        Some(s) => path
            .grid()
            .times()
            .zip(path.samples())
            .map(|(t, p)| linear_hamiltonian_unchecked(&s.at(t), p.matrix()))
            .collect(),
        None => vec![0.0; path.samples().len()],
    }
}

/// Horizontal lift of `path` starting at `sigma`.
///
/// With a schedule attached this integrates `ψ̇ = (1 − ψψ*)H(t)ψ`; otherwise
/// `ψ̇ = Ṗψ` with `Ṗ` from fourth-order differences of the samples, and
/// `ψ ← polar(P_{k+1}ψ)` after every step.
pub fn horizontal_transport(
    path: &ProjectorPath,
    sigma: &Frame,
    tol: &Tolerances,
) -> Result<FramePath> {
    let (n, m) = sigma.shape();
    if (n, m) != (path.dim(), path.rank()) {
        return Err(GeomError::DimensionMismatch(
            "frame and path differ in shape".into(),
        ));
    }
    let distance = sigma.projector().distance(path.start());
    if distance > tol.comparison {
        return Err(GeomError::BaseMismatch { distance });
    }
    let grid = *path.grid();
    let (samples, max_defect) = match path.schedule() {
        Some(schedule) => {
            check_dim(schedule, n)?;
            transport_with_schedule(schedule, sigma, &grid, tol)?
        }
        None => transport_along_samples(path, sigma, tol)?,
    };
    let breakpoints = path.schedule().map_or_else(Vec::new, |s| s.breakpoints());
    let horizontality = horizontality_defects(&samples, &grid, &breakpoints);
    Ok(FramePath::from_parts(
        grid,
        samples.into_iter().map(Frame::from_matrix_unchecked).collect(),
        max_defect,
        Some(horizontality),
    ))
}

fn transport_with_schedule(
    schedule: &HamiltonianSchedule,
    sigma: &Frame,
    grid: &TimeGrid,
    tol: &Tolerances,
) -> Result<(Vec<ComplexMatrix>, f64)> {
    let n = sigma.shape().0;
    let id = identity(n);
    let h = grid.h();
    let mut y = sigma.matrix().clone();
    let mut samples = vec![y.clone()];
    let mut max_defect = sigma.defect();
    for k in 0..grid.steps() {
        let t = grid.t(k);
        let hint = t + 0.5 * h;
        y = rk4_step(
            |s, x| {
                let hx = schedule.at_within(s, hint) * x;
                (&id - x * x.adjoint()) * hx
            },
            t,
            h,
            &y,
        );
        let defect = linalg::isometry_defect(&y);
        max_defect = max_defect.max(defect);
        if defect > tol.ode {
            y = polar_isometry(&y, tol)?;
        }
        samples.push(y.clone());
    }
    Ok((samples, max_defect))
}

fn transport_along_samples(
    path: &ProjectorPath,
    sigma: &Frame,
    tol: &Tolerances,
) -> Result<(Vec<ComplexMatrix>, f64)> {
    path.check_continuity(None)?;
    let grid = path.grid();
    let h = grid.h();
    let p = path.samples();
    let len = p.len();
    let derivative = |stencil: Vec<(usize, f64)>| -> ComplexMatrix {
        let mut acc = ComplexMatrix::zeros(path.dim(), path.dim());
        for (j, w) in stencil {
            acc += p[j].matrix() * c(w / h, 0.0);
        }
        hermitian_part(&acc)
    };
    let nodes: Vec<ComplexMatrix> = (0..len)
        .map(|k| derivative(fd::first_derivative_stencil(k, 0, len, 4)))
        .collect();
    let mut y = sigma.matrix().clone();
    let mut samples = vec![y.clone()];
    let mut max_defect = sigma.defect();
    for k in 0..grid.steps() {
        let mid = derivative(fd::midpoint_derivative_stencil(k, 0, len));
        let k1 = &nodes[k] * &y;
        let k2 = &mid * (&y + k1.scale(0.5 * h));
        let k3 = &mid * (&y + k2.scale(0.5 * h));
        let k4 = &nodes[k + 1] * (&y + k3.scale(h));
        let next = &y + (k1 + k2.scale(2.0) + k3.scale(2.0) + k4).scale(h / 6.0);
        max_defect = max_defect.max(linalg::isometry_defect(&next));
        let projected = p[k + 1].matrix() * next;
        y = polar_isometry(&projected, tol).map_err(|e| match e {
            GeomError::RankDeficient { sigma_min } => GeomError::DegenerateStep {
                sample: k + 1,
                sigma_min,
            },
            other => other,
        })?;
        samples.push(y.clone());
    }
    Ok((samples, max_defect))
}

/// `‖ψ_k* ψ̇_k‖` with `ψ̇` from fourth-order differences within each smooth
/// piece of the grid.
fn horizontality_defects(samples: &[ComplexMatrix], grid: &TimeGrid, breakpoints: &[f64]) -> Vec<f64> {
    let h = grid.h();
    let mut out = vec![0.0f64; samples.len()];
    for (lo, hi) in grid.pieces(breakpoints) {
        for k in lo..hi {
            let mut d = ComplexMatrix::zeros(samples[k].nrows(), samples[k].ncols());
            for (j, w) in fd::first_derivative_stencil(k, lo, hi, 4) {
                d += &samples[j] * c(w / h, 0.0);
            }
            let v = (samples[k].adjoint() * d).norm();
            out[k] = out[k].max(v);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundle::{connection_a, FrameTangent};
    use crate::linalg::{mat_exp, prng, random_antihermitian_with, random_frame_with, random_unitary_with, real_matrix};
    use crate::GaugeElement;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn zero_schedule_is_stationary() {
        let grid = TimeGrid::new(0.0, 1.0, 50).unwrap();
        let phi = Frame::standard(3, 1);
        let h = HamiltonianSchedule::zero(3);
        let fp = integrate_frame(&h, &phi, &grid, &tol()).unwrap();
        assert!(fp.samples().iter().all(|f| f == &phi));
        let pp = integrate_projector(&h, &phi.projector(), &grid, &tol()).unwrap();
        assert!(pp.samples().iter().all(|p| p == &phi.projector()));
        let tp = horizontal_transport(&pp, &phi, &tol()).unwrap();
        assert!(tp.samples().iter().all(|f| f == &phi));
    }

    #[test]
    fn constant_schedule_matches_exponential() {
        let mut rng = prng(1);
        let a = linalg::with_norm(&random_antihermitian_with(&mut rng, 4), 2.5);
        let grid = TimeGrid::new(0.0, 2.0, 2000).unwrap();
        let h = HamiltonianSchedule::constant(a.clone(), &tol()).unwrap();
        let phi = random_frame_with(&mut rng, 4, 2);
        let e = mat_exp(&a.scale(2.0)).unwrap();
        let fp = integrate_frame(&h, &phi, &grid, &tol()).unwrap();
        assert!((fp.end().matrix() - &e * phi.matrix()).norm() < 1e-8);
        let pp = integrate_projector(&h, &phi.projector(), &grid, &tol()).unwrap();
        assert!(pp.end().distance(&phi.projector().conjugate(&e)) < 1e-8);
        let energy = energy_along(&pp);
        let e0 = energy[0];
        assert!(energy.iter().all(|e| (e - e0).abs() < 1e-8));
    }

    #[test]
    fn fixed_point_projector() {
        let p = Projector::standard(3, 1);
        let u = p.matrix() * c(0.0, 1.3);
        let grid = TimeGrid::new(0.0, 1.0, 20).unwrap();
        let h = HamiltonianSchedule::constant(u, &tol()).unwrap();
        let pp = integrate_projector(&h, &p, &grid, &tol()).unwrap();
        assert!(pp.samples().iter().all(|q| q.distance(&p) < 1e-15));
    }

    #[test]
    fn frame_flow_is_gauge_covariant_and_tracks_projector_flow() {
        let mut rng = prng(2);
        let hs = HamiltonianSchedule::rotating(
            random_antihermitian_with(&mut rng, 5),
            random_antihermitian_with(&mut rng, 5),
            &tol(),
        )
        .unwrap();
        let grid = TimeGrid::new(0.0, 1.0, 400).unwrap();
        let phi = random_frame_with(&mut rng, 5, 2);
        let g = GaugeElement::unitary(random_unitary_with(&mut rng, 2), &tol()).unwrap();
        let a = integrate_frame(&hs, &phi, &grid, &tol()).unwrap();
        let b = integrate_frame(&hs, &phi.act(&g), &grid, &tol()).unwrap();
        for (x, y) in a.samples().iter().zip(b.samples()) {
            assert!((x.matrix() * g.matrix() - y.matrix()).norm() < 1e-12);
        }
        let pp = integrate_projector(&hs, &phi.projector(), &grid, &tol()).unwrap();
        assert!(a.tracking_error(&pp) < 1e-7);
    }

    #[test]
    fn vertical_component_law() {
        let mut rng = prng(3);
        let hs = HamiltonianSchedule::rotating(
            random_antihermitian_with(&mut rng, 4),
            random_antihermitian_with(&mut rng, 4),
            &tol(),
        )
        .unwrap();
        let grid = TimeGrid::new(0.0, 1.0, 1000).unwrap();
        let phi = random_frame_with(&mut rng, 4, 2);
        let fp = integrate_frame(&hs, &phi, &grid, &tol()).unwrap();
        let h = grid.h();
        for k in [100, 500, 900] {
            let s = fp.samples();
            let d = (s[k - 2].matrix() - s[k - 1].matrix().scale(8.0) + s[k + 1].matrix().scale(8.0)
                - s[k + 2].matrix())
            .scale(1.0 / (12.0 * h));
            let xi = FrameTangent::new(s[k].clone(), d, &Tolerances::new(1e-8, 1e-9, 1e-8).unwrap()).unwrap();
            let lhs = connection_a(&xi);
            let hm = hs.at(grid.t(k));
            let rhs = s[k].matrix().adjoint() * hm * s[k].matrix();
            assert!((lhs.matrix() - rhs).norm() < 1e-8);
        }
    }

    #[test]
    fn great_circle_transport_matches_exponential() {
        let theta_dot = 0.8;
        let k = real_matrix(2, 2, &[0.0, -theta_dot, theta_dot, 0.0]);
        let grid = TimeGrid::new(0.0, 2.0, 1000).unwrap();
        let sigma = Frame::standard(2, 1);
        let hs = HamiltonianSchedule::constant(k.clone(), &tol()).unwrap();
        let path = integrate_projector(&hs, &sigma.projector(), &grid, &tol())
            .unwrap()
            .without_schedule();
        let psi = horizontal_transport(&path, &sigma, &tol()).unwrap();
        let exact = mat_exp(&k.scale(2.0)).unwrap() * sigma.matrix();
        assert!((psi.end().matrix() - exact).norm() < 1e-6);
        assert!(psi.max_horizontality() < 1e-6);
        assert!(psi.tracking_error(&path) < 1e-7);
    }

    #[test]
    fn transport_is_gauge_equivariant_in_both_modes() {
        let mut rng = prng(4);
        let hs = HamiltonianSchedule::rotating(
            random_antihermitian_with(&mut rng, 4),
            random_antihermitian_with(&mut rng, 4),
            &tol(),
        )
        .unwrap();
        let grid = TimeGrid::new(0.0, 1.0, 500).unwrap();
        let sigma = random_frame_with(&mut rng, 4, 2);
        let g = GaugeElement::unitary(random_unitary_with(&mut rng, 2), &tol()).unwrap();
        let with = integrate_projector(&hs, &sigma.projector(), &grid, &tol()).unwrap();
        let without = with.clone().without_schedule();
        for path in [&with, &without] {
            let a = horizontal_transport(path, &sigma, &tol()).unwrap();
            let b = horizontal_transport(path, &sigma.act(&g), &tol()).unwrap();
            assert!((a.end().matrix() * g.matrix() - b.end().matrix()).norm() < 1e-12);
            assert!(a.max_horizontality() < 1e-6);
            assert!(a.tracking_error(path) < 1e-7);
        }
    }

    #[test]
    fn transport_rejects_foreign_frame() {
        let grid = TimeGrid::new(0.0, 1.0, 10).unwrap();
        let p = Projector::standard(2, 1);
        let path = ProjectorPath::new(grid, vec![p; 11]).unwrap();
        let other = Frame::new(real_matrix(2, 1, &[0.0, 1.0]), &tol()).unwrap();
        assert!(matches!(
            horizontal_transport(&path, &other, &tol()),
            Err(GeomError::BaseMismatch { .. })
        ));
    }
}
