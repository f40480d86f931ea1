//! Seeded invariant checks over every module, used by the `selftest`
//! subcommand.
//!
//! Checks on exactly maintained invariants use `min(bound, structural)` as
//! threshold, so tightening the structural tolerance forces failures.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::bundle::{self, Frame, FrameTangent, GaugeElement};
use crate::dynamics::{
    berry_maps, horizontal_transport, integrate_frame, integrate_projector, phase_distance,
    HamiltonianSchedule, LatitudeLoop, ProjectorCurve, ProjectorPath, SmoothLoop, TimeGrid,
};
use crate::error::Result;
use crate::grassmann::{self, BasePoint, ChartTangent, EmbeddedTangent, Projector};
use crate::linalg::{self, prng, random_antihermitian_with, random_frame_with, random_gaussian, Tolerances};

/// One line of the self-test table.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckRow {
    pub module: &'static str,
    pub name: &'static str,
    /// `NaN` when the check raised an error.
    pub measured: f64,
    pub bound: f64,
    pub pass: bool,
    pub error: Option<String>,
}

struct Suite<'a> {
    tol: &'a Tolerances,
    rows: Vec<CheckRow>,
}

impl Suite<'_> {
    fn check(&mut self, module: &'static str, name: &'static str, bound: f64, f: impl FnOnce() -> Result<f64>) {
        let (measured, error) = match f() {
            Ok(v) => (v, None),
            Err(e) => (f64::NAN, Some(e.to_string())),
        };
        self.rows.push(CheckRow {
            module,
            name,
            measured,
            bound,
            pass: measured <= bound,
            error,
        });
    }

    fn exact(&self, bound: f64) -> f64 {
        bound.min(self.tol.structural)
    }
}

fn max_of(values: impl IntoIterator<Item = Result<f64>>) -> Result<f64> {
    let mut acc = 0.0f64;
    for v in values {
        acc = acc.max(v?);
    }
    Ok(acc)
}

/// Runs every check; `seed` offsets all generators.
pub fn run(tol: &Tolerances, seed: u64) -> Vec<CheckRow> {
    let mut s = Suite { tol, rows: Vec::new() };
    let t = *tol;
    linalg_checks(&mut s, t, seed);
    grassmann_checks(&mut s, t, seed);
    bundle_checks(&mut s, t, seed);
    dynamics_checks(&mut s, t, seed);
    s.rows
}

fn linalg_checks(s: &mut Suite, tol: Tolerances, seed: u64) {
    let mut rng = prng(seed);
    let b = s.exact(1e-12);
    s.check("linalg", "isometrize_isometry", b, || {
        max_of((0..20).map(|k| {
            let n = 2 + (k % 31);
            let m = 1 + k % n;
            let f = random_gaussian(&mut rng, n, m);
            Ok(linalg::isometrize(&f, &tol)?.defect())
        }))
    });
    s.check("linalg", "isometrize_idempotent", b, || {
        max_of((0..20).map(|_| {
            let f = random_gaussian(&mut rng, 6, 3);
            let q = linalg::isometrize(&f, &tol)?;
            let qq = linalg::isometrize(q.matrix(), &tol)?;
            Ok((qq.matrix() - q.matrix()).norm())
        }))
    });
    s.check("linalg", "mat_exp_inverse", 1e-10, || {
        max_of((0..20).map(|_| {
            let a = linalg::with_norm(&random_gaussian(&mut rng, 5, 5), 5.0);
            let prod = linalg::mat_exp(&a)? * linalg::mat_exp(&(-&a))?;
            Ok((prod - linalg::identity(5)).norm())
        }))
    });
    s.check("linalg", "mat_exp_unitary", s.exact(1e-10), || {
        max_of((0..20).map(|_| {
            let a = linalg::with_norm(&random_antihermitian_with(&mut rng, 6), 5.0);
            Ok(linalg::isometry_defect(&linalg::mat_exp(&a)?))
        }))
    });
    s.check("linalg", "nearest_projector_invariants", b, || {
        max_of((0..20).map(|_| {
            let m = linalg::random_hermitian_with(&mut rng, 6);
            Ok(linalg::nearest_projector(&m, 2, &tol)?.defect())
        }))
    });
}

fn grassmann_checks(s: &mut Suite, tol: Tolerances, seed: u64) {
    let mut rng = prng(seed.wrapping_add(1));
    s.check("grassmann", "chart_round_trip", 1e-10, || {
        max_of((0..50).map(|k| {
            let n = 2 + k % 15;
            let m = 1 + k % (n - 1);
            let base = BasePoint::from_frame(&random_frame_with(&mut rng, n, m));
            let block = linalg::with_norm(&random_gaussian(&mut rng, n - m, m), 10.0 * ((k % 10 + 1) as f64) / 10.0);
            let f = ChartTangent::new(base.clone(), block.clone())?;
            let back = grassmann::chart_from_proj(&base, &grassmann::proj_from_chart(&f), &tol)?;
            Ok((back.block() - block).norm())
        }))
    });
    let b = s.exact(1e-12);
    s.check("grassmann", "proj_from_chart_invariants", b, || {
        max_of((0..50).map(|_| {
            let base = BasePoint::standard(8, 3);
            let f = ChartTangent::new(base, linalg::with_norm(&random_gaussian(&mut rng, 5, 3), 10.0))?;
            Ok(grassmann::proj_from_chart(&f).defect())
        }))
    });
    s.check("grassmann", "tangent_embed_extract", b, || {
        max_of((0..50).map(|_| {
            let base = BasePoint::from_frame(&random_frame_with(&mut rng, 7, 3));
            let block = random_gaussian(&mut rng, 4, 3);
            let phi = grassmann::tangent_embed(&ChartTangent::new(base.clone(), block.clone())?);
            let back = grassmann::tangent_extract(&base, &phi, &tol)?;
            let again = grassmann::tangent_embed(&back);
            Ok((back.block() - &block).norm().max((again.matrix() - phi.matrix()).norm()))
        }))
    });
    s.check("grassmann", "chart_transport_equivariance", 1e-9, || {
        max_of((0..50).map(|_| {
            let base = BasePoint::standard(6, 2);
            let f = ChartTangent::new(base, random_gaussian(&mut rng, 4, 2))?;
            let u = linalg::random_unitary_with(&mut rng, 6);
            let moved = grassmann::chart_transport(&u, &f, &tol)?;
            Ok(grassmann::proj_from_chart(&moved).distance(&grassmann::proj_from_chart(&f).conjugate(&u)))
        }))
    });
    s.check("grassmann", "symplectic_bilinear_antisymmetric", b, || {
        max_of((0..50).map(|_| {
            let base = BasePoint::standard(5, 2);
            let p = base.projector();
            let emb = |rng: &mut linalg::Prng| -> Result<EmbeddedTangent> {
                Ok(grassmann::tangent_embed(&ChartTangent::new(base.clone(), random_gaussian(rng, 3, 2))?))
            };
            let (x, y, z) = (emb(&mut rng)?, emb(&mut rng)?, emb(&mut rng)?);
            let w = |a: &EmbeddedTangent, b: &EmbeddedTangent| grassmann::symplectic_form(p, a, b, &tol);
            let anti = (w(&x, &y)? + w(&y, &x)?).abs();
            let sum = EmbeddedTangent::new(p, x.matrix().scale(2.0) + z.matrix(), &tol)?;
            let lin = (w(&sum, &y)? - 2.0 * w(&x, &y)? - w(&z, &y)?).abs();
            Ok(anti.max(lin))
        }))
    });
    s.check("grassmann", "hamiltonian_duality", 1e-5, || {
        max_of((0..20).map(|_| hamiltonian_duality_case(&mut rng, 5, 2, &tol)))
    });
    s.check("grassmann", "ham_field_tangent", b, || {
        max_of((0..50).map(|_| {
            let p = random_frame_with(&mut rng, 6, 2).projector();
            let u = random_antihermitian_with(&mut rng, 6);
            let x = grassmann::ham_field(&u, &p, &tol)?;
            Ok(grassmann::tangent_defect(&p, x.matrix()))
        }))
    });
}

/// Relative error `|dũ(V) − ω([u,P], V)| / (1 + |dũ(V)|)` with a central
/// difference of step `1e-5` through the chart.
pub fn hamiltonian_duality_case(rng: &mut linalg::Prng, n: usize, m: usize, tol: &Tolerances) -> Result<f64> {
    let base = BasePoint::from_frame(&random_frame_with(rng, n, m));
    let u = random_antihermitian_with(rng, n);
    let dir = ChartTangent::new(base.clone(), random_gaussian(rng, n - m, m))?;
    let v = grassmann::tangent_embed(&dir);
    let eps = 1e-5;
    let h = |e: f64| grassmann::linear_hamiltonian(&u, &grassmann::proj_from_chart(&dir.scaled(e)), tol);
    let fd = (h(eps)? - h(-eps)?) / (2.0 * eps);
    let x = grassmann::ham_field(&u, base.projector(), tol)?;
    let w = grassmann::symplectic_form(base.projector(), &x, &v, tol)?;
    Ok((fd - w).abs() / (1.0 + fd.abs()))
}

fn bundle_checks(s: &mut Suite, tol: Tolerances, seed: u64) {
    let mut rng = prng(seed.wrapping_add(2));
    let b = s.exact(1e-12);
    s.check("bundle", "structure_group_action", b, || {
        max_of((0..50).map(|_| {
            let phi = random_frame_with(&mut rng, 6, 3);
            let g = GaugeElement::unitary(linalg::random_unitary_with(&mut rng, 3), &tol)?;
            let moved = phi.act(&g);
            Ok(moved.defect().max(moved.projector().distance(&phi.projector())))
        }))
    });
    s.check("bundle", "fiber_transitivity", 1e-10, || {
        max_of((0..50).map(|_| {
            let phi = random_frame_with(&mut rng, 6, 3);
            let g0 = GaugeElement::unitary(linalg::random_unitary_with(&mut rng, 3), &tol)?;
            let psi = phi.act(&g0);
            let g = phi.relative_to(&psi, &tol)?;
            Ok(g.unitarity_defect().max((psi.act(&g).matrix() - phi.matrix()).norm()))
        }))
    });
    s.check("bundle", "connection_axioms", b, || {
        max_of((0..50).map(|_| connection_axioms_case(&mut rng, 6, 2, &tol)))
    });
    s.check("bundle", "lift_is_horizontal", b, || {
        max_of((0..50).map(|_| {
            let phi = random_frame_with(&mut rng, 6, 2);
            let mu = ChartTangent::new(BasePoint::from_frame(&phi), random_gaussian(&mut rng, 4, 2))?;
            let xi = bundle::horizontal_lift(&phi, &mu, &tol)?;
            Ok(bundle::connection_a(&xi).matrix().norm())
        }))
    });
    s.check("bundle", "push_forward_tangent", b, || {
        max_of((0..50).map(|_| {
            let phi = random_frame_with(&mut rng, 6, 2);
            let mu = ChartTangent::new(BasePoint::from_frame(&phi), random_gaussian(&mut rng, 4, 2))?;
            let xi = bundle::horizontal_lift(&phi, &mu, &tol)?;
            Ok(grassmann::tangent_defect(&phi.projector(), bundle::push_forward(&xi).matrix()))
        }))
    });
    s.check("bundle", "curvature_reconstruction", b, || {
        max_of((0..40).map(|k| {
            let m = 1 + k % 6;
            let n = if k % 2 == 0 { 2 * m } else { m + 1 };
            curvature_reconstruction_case(&mut rng, n, m, &tol)
        }))
    });
}

/// `max(‖𝒜(φu) − u‖, ‖𝒜(ξg) − g⁻¹𝒜(ξ)g‖)` for random `φ`, `u`, `g` and a
/// random tangent `ξ`.
pub fn connection_axioms_case(rng: &mut linalg::Prng, n: usize, m: usize, tol: &Tolerances) -> Result<f64> {
    let phi = random_frame_with(rng, n, m);
    let u = GaugeElement::algebra(random_antihermitian_with(rng, m), tol)?;
    let vertical = bundle::connection_a(&FrameTangent::vertical(&phi, &u));
    let e1 = (vertical.matrix() - u.matrix()).norm();
    let a = random_antihermitian_with(rng, n);
    let xi = FrameTangent::new(phi.clone(), &a * phi.matrix(), tol)?;
    let g = GaugeElement::unitary(linalg::random_unitary_with(rng, m), tol)?;
    let lhs = bundle::connection_a(&xi.act(&g));
    let rhs = g.matrix().adjoint() * bundle::connection_a(&xi).matrix() * g.matrix();
    Ok(e1.max((lhs.matrix() - rhs).norm()))
}

/// `‖Σ Ω(u_i, v_i) − w‖` for a random `w` at a random base point.
pub fn curvature_reconstruction_case(rng: &mut linalg::Prng, n: usize, m: usize, tol: &Tolerances) -> Result<f64> {
    let base = BasePoint::from_frame(&random_frame_with(rng, n, m));
    let w = random_antihermitian_with(rng, m);
    let pairs = bundle::curvature_generators(&w, &base, tol)?;
    let mut acc = linalg::zeros(m, m);
    for (u, v) in &pairs {
        acc += bundle::curvature_omega(u, v, tol)?.matrix();
    }
    Ok((acc - w).norm())
}

fn dynamics_checks(s: &mut Suite, tol: Tolerances, seed: u64) {
    let mut rng = prng(seed.wrapping_add(3));
    let grid = TimeGrid::new(0.0, 2.0, 1000).expect("valid grid");
    let mut flows = Vec::new();
    for _ in 0..4 {
        let schedule = HamiltonianSchedule::Rotating {
            base: linalg::with_norm(&random_antihermitian_with(&mut rng, 5), 2.0),
            generator: linalg::with_norm(&random_antihermitian_with(&mut rng, 5), 1.0),
        };
        flows.push((schedule, random_frame_with(&mut rng, 5, 2)));
    }
    s.check("dynamics", "flow_invariants", 1e-9, || {
        max_of(flows.iter().map(|(h, phi)| {
            let fp = integrate_frame(h, phi, &grid, &tol)?;
            let pp = integrate_projector(h, &phi.projector(), &grid, &tol)?;
            let after = fp
                .samples()
                .iter()
                .map(Frame::defect)
                .chain(pp.samples().iter().map(Projector::defect))
                .fold(0.0, f64::max);
            Ok(after)
        }))
    });
    s.check("dynamics", "bundle_consistency", 1e-7, || {
        max_of(flows.iter().map(|(h, phi)| {
            let fp = integrate_frame(h, phi, &grid, &tol)?;
            let pp = integrate_projector(h, &phi.projector(), &grid, &tol)?;
            Ok(fp.tracking_error(&pp))
        }))
    });
    s.check("dynamics", "transport_horizontality", 1e-6, || {
        max_of(flows.iter().map(|(h, phi)| {
            let pp = integrate_projector(h, &phi.projector(), &grid, &tol)?;
            Ok(horizontal_transport(&pp, phi, &tol)?.max_horizontality())
        }))
    });
    s.check("dynamics", "energy_conservation", 1e-8, || {
        max_of(flows.iter().map(|(h, phi)| {
            let constant = HamiltonianSchedule::Constant(h.at(0.0));
            let pp = integrate_projector(&constant, &phi.projector(), &grid, &tol)?;
            let e = crate::dynamics::energy_along(&pp);
            Ok(e.iter().map(|x| (x - e[0]).abs()).fold(0.0, f64::max))
        }))
    });
    s.check("dynamics", "vertical_component_law", 1e-8, || {
        max_of(flows.iter().map(|(h, phi)| {
            let fp = integrate_frame(h, phi, &grid, &tol)?;
            let f = fp.samples();
            let dt = grid.h();
            max_of([250usize, 500, 750].into_iter().map(|k| {
                let d = (f[k - 2].matrix() - f[k - 1].matrix().scale(8.0) + f[k + 1].matrix().scale(8.0)
                    - f[k + 2].matrix())
                .scale(1.0 / (12.0 * dt));
                let a = f[k].matrix().adjoint() * d;
                let rhs = f[k].matrix().adjoint() * h.at(grid.t(k)) * f[k].matrix();
                Ok((a - rhs).norm())
            }))
        }))
    });
    s.check("dynamics", "berry_consistency", 1e-8, || {
        max_of((0..3).map(|_| {
            let curve: Arc<dyn ProjectorCurve> = Arc::new(SmoothLoop::random(&mut rng, 4, 2, 1.0));
            let q0 = Projector::from_matrix_unchecked(curve.point(0.0, 0.0), 2);
            let sigma = BasePoint::from_projector(&q0).frame().clone();
            let g = TimeGrid::new(0.0, 1.0, 1000)?;
            let r = berry_maps(&HamiltonianSchedule::geometric(curve), &q0, &sigma, &g, &tol)?;
            Ok(r.fiber_gap.distance_from_identity())
        }))
    });
    s.check("dynamics", "latitude_berry_phase", 1e-4, || {
        let lat = LatitudeLoop::new(PI / 3.0, 1.0, 1)?;
        let r = berry_maps(&lat.schedule(), &lat.projector(), &lat.frame(), &lat.grid(4000)?, &tol)?;
        Ok(phase_distance(r.berry_phase(), lat.expected_phase()))
    });
    s.check("dynamics", "loop_reversal", 1e-6, || {
        let curve: Arc<dyn ProjectorCurve> = Arc::new(SmoothLoop::random(&mut rng, 3, 1, 1.0));
        let path = ProjectorPath::from_curve(curve, TimeGrid::new(0.0, 1.0, 1000)?);
        let sigma = BasePoint::from_projector(path.start()).frame().clone();
        let g = crate::dynamics::loop_holonomy(&path, &sigma, &tol)?;
        let r = crate::dynamics::loop_holonomy(&path.reversed(), &sigma, &tol)?;
        Ok((r.matrix() - g.matrix().adjoint()).norm())
    });
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_tolerances_pass() {
        let rows = run(&Tolerances::default(), 0);
        for r in &rows {
            assert!(r.pass, "{}::{} measured {} bound {} ({:?})", r.module, r.name, r.measured, r.bound, r.error);
        }
    }

    #[test]
    fn tight_structural_tolerance_fails() {
        let tol = Tolerances::new(1e-30, 1e-9, 1e-8).unwrap();
        let rows = run(&tol, 0);
        assert!(rows.iter().any(|r| !r.pass));
    }

    #[test]
    fn deterministic() {
        assert_eq!(run(&Tolerances::default(), 3), run(&Tolerances::default(), 3));
    }
}
