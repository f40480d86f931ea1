//! Dense complex linear algebra used by every other module.
//!
//! Matrices are `nalgebra::DMatrix<Complex64>`. The functions here add the
//! handful of operations the geometry needs on top of that: oriented QR
//! (isometrization), a fixed-degree Padé exponential, spectral retraction
//! onto projectors, a unitary logarithm and seeded random generators.

use nalgebra::{DMatrix, Schur};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::bundle::Frame;
use crate::error::{GeomError, Result};
use crate::grassmann::Projector;

pub type C64 = Complex64;
pub type ComplexMatrix = DMatrix<C64>;

/// Seeded generator used for every randomized experiment.
pub type Prng = ChaCha8Rng;

pub fn prng(seed: u64) -> Prng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Numerical thresholds.
///
/// `structural` governs invariant checks on inputs (idempotency, isometry
/// defect), `ode` is the defect above which an integrator retracts after a
/// step, and `comparison` is the equality threshold for tangency and
/// base-point checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub structural: f64,
    pub ode: f64,
    pub comparison: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            structural: 1e-10,
            ode: 1e-9,
            comparison: 1e-8,
        }
    }
}

impl Tolerances {
    pub fn new(structural: f64, ode: f64, comparison: f64) -> Result<Self> {
        let tol = Self {
            structural,
            ode,
            comparison,
        };
        tol.validate()?;
        Ok(tol)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("structural", self.structural),
            ("ode", self.ode),
            ("comparison", self.comparison),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(GeomError::InvalidTolerances(format!(
                    "{name} must be finite and positive, got {v}"
                )));
            }
        }
        if self.structural > self.comparison {
            return Err(GeomError::InvalidTolerances(format!(
                "structural ({}) exceeds comparison ({})",
                self.structural, self.comparison
            )));
        }
        Ok(())
    }
}

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn identity(n: usize) -> ComplexMatrix {
    ComplexMatrix::identity(n, n)
}

pub fn zeros(r: usize, c: usize) -> ComplexMatrix {
    ComplexMatrix::zeros(r, c)
}

/// Builds a matrix from real row-major entries.
pub fn real_matrix(rows: usize, cols: usize, entries: &[f64]) -> ComplexMatrix {
    assert_eq!(entries.len(), rows * cols);
    ComplexMatrix::from_fn(rows, cols, |i, j| c(entries[i * cols + j], 0.0))
}

pub fn from_rows(rows: &[Vec<C64>]) -> Result<ComplexMatrix> {
    let r = rows.len();
    let cols = rows.first().map_or(0, Vec::len);
    if r == 0 || cols == 0 {
        return Err(GeomError::DimensionMismatch("empty matrix".into()));
    }
    if rows.iter().any(|row| row.len() != cols) {
        return Err(GeomError::DimensionMismatch("ragged rows".into()));
    }
    let m = ComplexMatrix::from_fn(r, cols, |i, j| rows[i][j]);
    ensure_finite(&m)?;
    Ok(m)
}

pub fn to_rows(m: &ComplexMatrix) -> Vec<Vec<C64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

pub fn ensure_finite(m: &ComplexMatrix) -> Result<()> {
    if m.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(GeomError::NonFinite)
    }
}

pub fn ensure_square(m: &ComplexMatrix, what: &str) -> Result<()> {
    if m.nrows() == m.ncols() {
        Ok(())
    } else {
        Err(GeomError::DimensionMismatch(format!(
            "{what} must be square, got {}x{}",
            m.nrows(),
            m.ncols()
        )))
    }
}

pub fn commutator(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a * b - b * a
}

pub fn trace(a: &ComplexMatrix) -> C64 {
    a.trace()
}

/// Frobenius norm.
pub fn norm(a: &ComplexMatrix) -> f64 {
    a.norm()
}

pub fn hermitian_part(a: &ComplexMatrix) -> ComplexMatrix {
    (a + a.adjoint()).scale(0.5)
}

pub fn anti_hermitian_part(a: &ComplexMatrix) -> ComplexMatrix {
    (a - a.adjoint()).scale(0.5)
}

/// `‖A + A*‖`.
pub fn anti_hermitian_defect(a: &ComplexMatrix) -> f64 {
    (a + a.adjoint()).norm()
}

/// `‖A − A*‖`.
pub fn hermitian_defect(a: &ComplexMatrix) -> f64 {
    (a - a.adjoint()).norm()
}

/// `‖F*F − I‖`.
pub fn isometry_defect(f: &ComplexMatrix) -> f64 {
    (f.adjoint() * f - identity(f.ncols())).norm()
}

/// Largest violation of `P² = P`, `P* = P`, `tr P = rank`.
pub fn projector_defect(p: &ComplexMatrix, rank: usize) -> f64 {
    let idem = (p * p - p).norm();
    let herm = hermitian_defect(p);
    let tr = (p.trace() - c(rank as f64, 0.0)).norm();
    idem.max(herm).max(tr)
}

pub fn ensure_anti_hermitian(a: &ComplexMatrix, tol: f64) -> Result<()> {
    ensure_square(a, "generator")?;
    ensure_finite(a)?;
    let defect = anti_hermitian_defect(a);
    if defect <= tol * (1.0 + a.norm()) {
        Ok(())
    } else {
        Err(GeomError::NotAntiHermitian { defect })
    }
}

pub fn ensure_unitary(u: &ComplexMatrix, tol: f64) -> Result<()> {
    ensure_square(u, "unitary")?;
    ensure_finite(u)?;
    let defect = isometry_defect(u);
    if defect <= tol {
        Ok(())
    } else {
        Err(GeomError::NotUnitary { defect })
    }
}

pub fn singular_values(a: &ComplexMatrix) -> Vec<f64> {
    let mut s: Vec<f64> = a.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|x, y| y.total_cmp(x));
    s
}

pub fn smallest_singular_value(a: &ComplexMatrix) -> f64 {
    singular_values(a).last().copied().unwrap_or(0.0)
}

/// Oriented QR: the unique `Q` with `f = QR`, `Q*Q = I` and `R` upper
/// triangular with strictly positive real diagonal.
pub fn isometrize(f: &ComplexMatrix, tol: &Tolerances) -> Result<Frame> {
    Ok(Frame::from_matrix_unchecked(isometrize_matrix(f, tol.structural)?))
}

pub(crate) fn isometrize_matrix(f: &ComplexMatrix, threshold: f64) -> Result<ComplexMatrix> {
    ensure_finite(f)?;
    let (n, m) = f.shape();
    if m == 0 || m > n {
        return Err(GeomError::DimensionMismatch(format!(
            "cannot isometrize a {n}x{m} matrix"
        )));
    }
    let sigma_min = smallest_singular_value(f);
    if sigma_min <= threshold {
        return Err(GeomError::RankDeficient { sigma_min });
    }
    let qr = f.clone().qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..m {
        let d = r[(j, j)];
        let phase = d / d.norm();
        for i in 0..n {
            q[(i, j)] *= phase;
        }
    }
    Ok(q)
}

/// Nearest isometry `UV*` from the SVD `f = UΣV*`. Unlike [`isometrize`] it
/// commutes with the right action of `U(m)`.
pub fn polar_isometry(f: &ComplexMatrix, tol: &Tolerances) -> Result<ComplexMatrix> {
    ensure_finite(f)?;
    let svd = f.clone().svd(true, true);
    let sigma_min = svd.singular_values.iter().copied().fold(f64::INFINITY, f64::min);
    if sigma_min <= tol.structural {
        return Err(GeomError::RankDeficient { sigma_min });
    }
    let u = svd.u.expect("requested");
    let v_t = svd.v_t.expect("requested");
    Ok(u * v_t)
}

/// Matrix exponential by scaling and squaring with the degree-13 Padé
/// approximant.
pub fn mat_exp(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    ensure_square(a, "exponent")?;
    ensure_finite(a)?;
    Ok(pade13_exp(a))
}

const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA13: f64 = 5.371920351148152;

fn one_norm(a: &ComplexMatrix) -> f64 {
    a.column_iter()
        .map(|col| col.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn pade13_exp(a: &ComplexMatrix) -> ComplexMatrix {
    let n = a.nrows();
    let nrm = one_norm(a);
    let squarings = if nrm > THETA13 {
        (nrm / THETA13).log2().ceil() as i32
    } else {
        0
    };
    let a = a.scale(0.5f64.powi(squarings));
    let b = &PADE13;
    let id = identity(n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let u_inner = &a6 * (a6.scale(b[13]) + a4.scale(b[11]) + a2.scale(b[9]))
        + a6.scale(b[7])
        + a4.scale(b[5])
        + a2.scale(b[3])
        + id.scale(b[1]);
    let u = &a * u_inner;
    let v = &a6 * (a6.scale(b[12]) + a4.scale(b[10]) + a2.scale(b[8]))
        + a6.scale(b[6])
        + a4.scale(b[4])
        + a2.scale(b[2])
        + id.scale(b[0]);
    let numer = &v + &u;
    let denom = &v - &u;
    // V − U is well conditioned for ‖A‖₁ ≤ θ₁₃.
    let mut r = denom
        .lu()
        .solve(&numer)
        .expect("Padé denominator is nonsingular after scaling");
    for _ in 0..squarings {
        r = &r * &r;
    }
    r
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues in descending order.
pub fn hermitian_eigen(m: &ComplexMatrix) -> (Vec<f64>, ComplexMatrix) {
    let h = hermitian_part(m);
    let eig = h.symmetric_eigen();
    let n = m.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = ComplexMatrix::from_fn(n, n, |r, k| eig.eigenvectors[(r, order[k])]);
    (values, vectors)
}

/// Spectral retraction: the projector onto the `rank` dominant eigenvectors of
/// the Hermitian part of `m`.
pub fn nearest_projector(m: &ComplexMatrix, rank: usize, tol: &Tolerances) -> Result<Projector> {
    ensure_square(m, "retraction input")?;
    ensure_finite(m)?;
    let n = m.nrows();
    if rank == 0 || rank >= n {
        return Err(GeomError::DimensionTooSmall { n, m: rank });
    }
    let herm = hermitian_defect(m);
    if herm > tol.comparison * (1.0 + m.norm()) {
        return Err(GeomError::NotTangent { defect: herm });
    }
    let (values, vectors) = hermitian_eigen(m);
    let gap = values[rank - 1] - values[rank];
    if gap <= tol.structural {
        return Err(GeomError::GapTooSmall { gap });
    }
    let v = vectors.columns(0, rank).into_owned();
    let p = &v * v.adjoint();
    Ok(Projector::from_matrix_unchecked(hermitian_part(&p), rank))
}

/// Principal logarithm of a unitary matrix, returned anti-Hermitian.
pub fn unitary_log(g: &ComplexMatrix) -> Result<ComplexMatrix> {
    ensure_square(g, "unitary")?;
    ensure_finite(g)?;
    let (q, t) = Schur::new(g.clone()).unpack();
    let n = g.nrows();
    let diag = ComplexMatrix::from_fn(n, n, |i, j| if i == j { t[(i, i)].ln() } else { c(0.0, 0.0) });
    Ok(anti_hermitian_part(&(&q * diag * q.adjoint())))
}

pub fn random_gaussian(rng: &mut Prng, rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        c(re, im)
    })
}

/// `(G − G*)/2` for a Gaussian `G`; anti-Hermitian bit-for-bit.
pub fn random_antihermitian_with(rng: &mut Prng, n: usize) -> ComplexMatrix {
    let g = random_gaussian(rng, n, n);
    let mut a = anti_hermitian_part(&g);
    // Make the symmetry exact rather than up to rounding in the subtraction.
    for i in 0..n {
        a[(i, i)] = c(0.0, a[(i, i)].im);
        for j in (i + 1)..n {
            a[(j, i)] = -a[(i, j)].conj();
        }
    }
    a
}

pub fn random_antihermitian(n: usize, seed: u64) -> ComplexMatrix {
    random_antihermitian_with(&mut prng(seed), n)
}

pub fn random_hermitian_with(rng: &mut Prng, n: usize) -> ComplexMatrix {
    random_antihermitian_with(rng, n) * c(0.0, 1.0)
}

/// Haar-distributed unitary via oriented QR of a Gaussian matrix.
pub fn random_unitary_with(rng: &mut Prng, n: usize) -> ComplexMatrix {
    loop {
        let g = random_gaussian(rng, n, n);
        if let Ok(q) = isometrize_matrix(&g, 1e-8) {
            return q;
        }
    }
}

pub fn random_frame_with(rng: &mut Prng, n: usize, m: usize) -> Frame {
    loop {
        let g = random_gaussian(rng, n, m);
        if let Ok(q) = isometrize_matrix(&g, 1e-8) {
            return Frame::from_matrix_unchecked(q);
        }
    }
}

/// Rescales `a` to Frobenius norm `target` (zero stays zero).
pub fn with_norm(a: &ComplexMatrix, target: f64) -> ComplexMatrix {
    let nrm = a.norm();
    if nrm == 0.0 {
        a.clone()
    } else {
        a.scale(target / nrm)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    /// Truncated Taylor series; independent of the Padé path.
    fn series_exp(a: &ComplexMatrix) -> ComplexMatrix {
        let n = a.nrows();
        let mut term = identity(n);
        let mut acc = identity(n);
        for k in 1..80 {
            term = &term * a / c(k as f64, 0.0);
            acc += &term;
        }
        acc
    }

    /// Classical Gram-Schmidt with positive real diagonal.
    fn gram_schmidt(f: &ComplexMatrix) -> (ComplexMatrix, ComplexMatrix) {
        let (n, m) = f.shape();
        let mut q = zeros(n, m);
        let mut r = zeros(m, m);
        for j in 0..m {
            let mut v = f.column(j).into_owned();
            for i in 0..j {
                let qi = q.column(i).into_owned();
                let proj = qi.dotc(&v);
                r[(i, j)] = proj;
                v -= qi * proj;
            }
            let nrm = v.norm();
            r[(j, j)] = c(nrm, 0.0);
            q.set_column(j, &(v / c(nrm, 0.0)));
        }
        (q, r)
    }

    #[test]
    fn isometrize_examples() {
        let tol = Tolerances::default();
        let q = isometrize(&identity(2), &tol).unwrap();
        assert!((q.matrix() - identity(2)).norm() < 1e-15);

        let col = real_matrix(2, 1, &[1.0, 1.0]);
        let q = isometrize(&col, &tol).unwrap();
        let expected = real_matrix(2, 1, &[FRAC_1_SQRT_2, FRAC_1_SQRT_2]);
        assert!((q.matrix() - expected).norm() < 1e-15);

        let col = ComplexMatrix::from_column_slice(2, 1, &[c(0.0, 1.0), c(0.0, 0.0)]);
        let (gs, r) = gram_schmidt(&col);
        assert!((r[(0, 0)] - c(1.0, 0.0)).norm() < 1e-15);
        let q = isometrize(&col, &tol).unwrap();
        assert!((q.matrix() - gs).norm() < 1e-15);
        assert!((q.matrix()[(0, 0)] - c(0.0, 1.0)).norm() < 1e-15);
    }

    #[test]
    fn isometrize_matches_gram_schmidt_oracle() {
        let tol = Tolerances::default();
        let mut rng = prng(11);
        for &(n, m) in &[(3, 1), (4, 2), (6, 3), (8, 8)] {
            let f = random_gaussian(&mut rng, n, m);
            let (gs, r) = gram_schmidt(&f);
            let q = isometrize(&f, &tol).unwrap();
            assert!((q.matrix() - &gs).norm() < 1e-12);
            assert!((q.matrix() * &r - &f).norm() < 1e-12);
        }
    }

    #[test]
    fn isometrize_rejects_rank_deficient() {
        let f = real_matrix(3, 2, &[1.0, 2.0, 1.0, 2.0, 1.0, 2.0]);
        assert!(matches!(
            isometrize(&f, &Tolerances::default()),
            Err(GeomError::RankDeficient { .. })
        ));
    }

    #[test]
    fn isometrize_is_idempotent() {
        let tol = Tolerances::default();
        let mut rng = prng(5);
        let f = random_gaussian(&mut rng, 7, 3);
        let q = isometrize(&f, &tol).unwrap();
        let qq = isometrize(q.matrix(), &tol).unwrap();
        assert!((q.matrix() - qq.matrix()).norm() < 1e-14);
    }

    #[test]
    fn polar_isometry_is_gauge_equivariant() {
        let tol = Tolerances::default();
        let mut rng = prng(17);
        let f = random_gaussian(&mut rng, 5, 2);
        let g = random_unitary_with(&mut rng, 2);
        let q = polar_isometry(&f, &tol).unwrap();
        assert!(isometry_defect(&q) < 1e-14);
        let qg = polar_isometry(&(&f * &g), &tol).unwrap();
        assert!((qg - &q * &g).norm() < 1e-13);
        // Same column span as f.
        assert!((&q * q.adjoint() * &f - &f).norm() < 1e-13);
    }

    #[test]
    fn mat_exp_examples() {
        assert!((mat_exp(&zeros(3, 3)).unwrap() - identity(3)).norm() < 1e-15);

        let theta = PI / 2.0;
        let a = real_matrix(2, 2, &[0.0, -theta, theta, 0.0]);
        let oracle = series_exp(&a);
        let expected = real_matrix(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        assert!((&oracle - &expected).norm() < 1e-14);
        assert!((mat_exp(&a).unwrap() - &expected).norm() < 1e-14);

        let d = ComplexMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(0.0, PI), c(0.0, 0.0)]));
        let expected = real_matrix(2, 2, &[-1.0, 0.0, 0.0, 1.0]);
        assert!((mat_exp(&d).unwrap() - expected).norm() < 1e-14);
    }

    #[test]
    fn mat_exp_matches_series_for_large_norm() {
        let mut rng = prng(3);
        let a = with_norm(&random_gaussian(&mut rng, 5, 5), 8.0);
        let e = mat_exp(&a).unwrap();
        // Series on A/8 then squared thrice keeps the oracle accurate.
        let mut s = series_exp(&a.scale(0.125));
        for _ in 0..3 {
            s = &s * &s;
        }
        assert!((e - &s).norm() / s.norm() < 1e-12);
    }

    #[test]
    fn mat_exp_rejects_non_finite() {
        let mut a = zeros(2, 2);
        a[(0, 1)] = c(f64::NAN, 0.0);
        assert_eq!(mat_exp(&a), Err(GeomError::NonFinite));
    }

    #[test]
    fn nearest_projector_examples() {
        let tol = Tolerances::default();
        let p = nearest_projector(&real_matrix(2, 2, &[1.0, 0.0, 0.0, 0.0]), 1, &tol).unwrap();
        assert!((p.matrix() - real_matrix(2, 2, &[1.0, 0.0, 0.0, 0.0])).norm() < 1e-15);

        // Closed-form dominant eigenvector of [[a, b], [b, d]].
        let (a, b, d): (f64, f64, f64) = (0.9, 0.1, 0.1);
        let lambda = 0.5 * (a + d) + (0.25 * (a - d) * (a - d) + b * b).sqrt();
        let (vx, vy) = (b, lambda - a);
        let nv = (vx * vx + vy * vy).sqrt();
        let (vx, vy) = (vx / nv, vy / nv);
        let expected = real_matrix(2, 2, &[vx * vx, vx * vy, vx * vy, vy * vy]);
        let p = nearest_projector(&real_matrix(2, 2, &[a, b, b, d]), 1, &tol).unwrap();
        assert!((p.matrix() - expected).norm() < 1e-14);

        let half = real_matrix(2, 2, &[0.5, 0.5, 0.5, 0.5]);
        let p = nearest_projector(&half, 1, &tol).unwrap();
        assert!((p.matrix() - half).norm() < 1e-15);

        assert!(matches!(
            nearest_projector(&identity(2), 1, &tol),
            Err(GeomError::GapTooSmall { .. })
        ));
    }

    #[test]
    fn random_antihermitian_examples() {
        let a = random_antihermitian(1, 42);
        assert_eq!(a[(0, 0)].re, 0.0);
        assert_eq!(random_antihermitian(5, 9), random_antihermitian(5, 9));
        let a = random_antihermitian(4, 7);
        assert_eq!((&a + a.adjoint()).norm(), 0.0);
    }

    #[test]
    fn unitary_log_inverts_exp() {
        let mut rng = prng(8);
        let a = with_norm(&random_antihermitian_with(&mut rng, 4), 1.5);
        let g = mat_exp(&a).unwrap();
        let l = unitary_log(&g).unwrap();
        assert!((l - a).norm() < 1e-12);
    }

    #[test]
    fn tolerances_validate() {
        assert!(Tolerances::new(1e-10, 1e-9, 1e-8).is_ok());
        assert!(Tolerances::new(1e-7, 1e-9, 1e-8).is_err());
        assert!(Tolerances::new(0.0, 1e-9, 1e-8).is_err());
        assert!(Tolerances::new(1e-30, 1e-9, 1e-8).is_ok());
    }
}
