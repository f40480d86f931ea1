//! The Grassmannian `Gr_m(C^n)` realized as rank-`m` orthogonal projectors.
//!
//! A [`BasePoint`] fixes an adapted orthonormal basis `[frame | coframe]` of
//! `X ⊕ X⊥`; chart coordinates and tangent vectors at `X` are `(n−m)×m`
//! blocks in that basis. Embedded tangents are the Hermitian, trace-free
//! matrices `Φ` with `PΦ + ΦP = Φ`.

use nalgebra::DVector;

use crate::bundle::Frame;
use crate::error::{GeomError, Result};
use crate::fd;
use crate::linalg::{
    self, c, commutator, ensure_anti_hermitian, ensure_finite, ensure_unitary, hermitian_eigen,
    hermitian_part, identity, ComplexMatrix, Tolerances, C64,
};

/// A point of `Gr_m(C^n)`: Hermitian idempotent of trace `m`.
#[derive(Debug, Clone, PartialEq)]
pub struct Projector {
    matrix: ComplexMatrix,
    rank: usize,
}

impl Projector {
    pub fn new(matrix: ComplexMatrix, rank: usize, tol: &Tolerances) -> Result<Self> {
        linalg::ensure_square(&matrix, "projector")?;
        ensure_finite(&matrix)?;
        let n = matrix.nrows();
        if rank == 0 || rank >= n {
            return Err(GeomError::DimensionTooSmall { n, m: rank });
        }
        let defect = linalg::projector_defect(&matrix, rank);
        if defect > tol.structural {
            return Err(GeomError::NotAProjector { rank, defect });
        }
        Ok(Self { matrix, rank })
    }

    pub(crate) fn from_matrix_unchecked(matrix: ComplexMatrix, rank: usize) -> Self {
        Self { matrix, rank }
    }

    /// `diag(I_m, 0)`.
    pub fn standard(n: usize, m: usize) -> Self {
        let matrix = ComplexMatrix::from_fn(n, n, |i, j| {
            if i == j && i < m {
                c(1.0, 0.0)
            } else {
                c(0.0, 0.0)
            }
        });
        Self { matrix, rank: m }
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn defect(&self) -> f64 {
        linalg::projector_defect(&self.matrix, self.rank)
    }

    /// `1 − P`.
    pub fn complement(&self) -> ComplexMatrix {
        identity(self.dim()) - &self.matrix
    }

    /// `u P u*`.
    pub fn conjugate(&self, u: &ComplexMatrix) -> Self {
        Self {
            matrix: hermitian_part(&(u * &self.matrix * u.adjoint())),
            rank: self.rank,
        }
    }

    pub fn distance(&self, other: &Projector) -> f64 {
        (&self.matrix - &other.matrix).norm()
    }
}

/// A projector together with an adapted orthonormal basis of `X ⊕ X⊥`.
#[derive(Debug, Clone, PartialEq)]
pub struct BasePoint {
    projector: Projector,
    frame: Frame,
    coframe: Frame,
}

impl BasePoint {
    /// `X = span(e_1, …, e_m)` with the standard basis.
    pub fn standard(n: usize, m: usize) -> Self {
        let id = identity(n);
        Self {
            projector: Projector::standard(n, m),
            frame: Frame::from_matrix_unchecked(id.columns(0, m).into_owned()),
            coframe: Frame::from_matrix_unchecked(id.columns(m, n - m).into_owned()),
        }
    }

    /// Adapted basis from the spectral decomposition of `P`.
    pub fn from_projector(p: &Projector) -> Self {
        let (_, vectors) = hermitian_eigen(p.matrix());
        let (n, m) = (p.dim(), p.rank());
        Self {
            projector: p.clone(),
            frame: Frame::from_matrix_unchecked(vectors.columns(0, m).into_owned()),
            coframe: Frame::from_matrix_unchecked(vectors.columns(m, n - m).into_owned()),
        }
    }

    /// Keeps `frame` as the basis of `X`; the coframe spans `ker(φφ*)`.
    pub fn from_frame(frame: &Frame) -> Self {
        let p = frame.projector();
        let (n, m) = (p.dim(), p.rank());
        let (_, vectors) = hermitian_eigen(&p.complement());
        Self {
            projector: p,
            frame: frame.clone(),
            coframe: Frame::from_matrix_unchecked(vectors.columns(0, n - m).into_owned()),
        }
    }

    pub fn from_parts(frame: Frame, coframe: Frame, tol: &Tolerances) -> Result<Self> {
        let (n, m) = frame.shape();
        if coframe.shape() != (n, n - m) {
            return Err(GeomError::DimensionMismatch(format!(
                "coframe must be {n}x{}",
                n - m
            )));
        }
        let cross = (frame.matrix().adjoint() * coframe.matrix()).norm();
        if cross > tol.structural {
            return Err(GeomError::NotAFrame { defect: cross });
        }
        Ok(Self {
            projector: frame.projector(),
            frame,
            coframe,
        })
    }

    pub fn projector(&self) -> &Projector {
        &self.projector
    }

    pub fn frame(&self) -> &Frame {
        &self.frame
    }

    pub fn coframe(&self) -> &Frame {
        &self.coframe
    }

    pub fn dim(&self) -> usize {
        self.projector.dim()
    }

    pub fn rank(&self) -> usize {
        self.projector.rank()
    }

    pub fn codim(&self) -> usize {
        self.dim() - self.rank()
    }

    /// The unitary `[frame | coframe]`.
    pub fn adapted_basis(&self) -> ComplexMatrix {
        let (n, m) = (self.dim(), self.rank());
        let mut b = ComplexMatrix::zeros(n, n);
        b.columns_mut(0, m).copy_from(self.frame.matrix());
        b.columns_mut(m, n - m).copy_from(self.coframe.matrix());
        b
    }

    /// Ambient operator `coframe · block · frame*` of a block in `Hom(X, X⊥)`.
    pub fn ambient(&self, block: &ComplexMatrix) -> ComplexMatrix {
        self.coframe.matrix() * block * self.frame.matrix().adjoint()
    }

    fn check_block(&self, block: &ComplexMatrix) -> Result<()> {
        if block.shape() != (self.codim(), self.rank()) {
            return Err(GeomError::DimensionMismatch(format!(
                "chart block must be {}x{}, got {}x{}",
                self.codim(),
                self.rank(),
                block.nrows(),
                block.ncols()
            )));
        }
        ensure_finite(block)
    }
}

/// An element of `Hom(X, X⊥)` written in the base point's adapted basis.
///
/// Serves both as chart coordinate (the graph `Γ(f)`) and as tangent vector
/// at `X`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChartTangent {
    base: BasePoint,
    block: ComplexMatrix,
}

impl ChartTangent {
    pub fn new(base: BasePoint, block: ComplexMatrix) -> Result<Self> {
        base.check_block(&block)?;
        Ok(Self { base, block })
    }

    pub fn zero(base: BasePoint) -> Self {
        let block = ComplexMatrix::zeros(base.codim(), base.rank());
        Self { base, block }
    }

    pub fn base(&self) -> &BasePoint {
        &self.base
    }

    pub fn block(&self) -> &ComplexMatrix {
        &self.block
    }

    /// The ambient `n×n` operator `f̂ = coframe · f · frame*`.
    pub fn ambient(&self) -> ComplexMatrix {
        self.base.ambient(&self.block)
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            base: self.base.clone(),
            block: self.block.scale(s),
        }
    }
}

/// Tangent vector in the projector picture.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddedTangent {
    matrix: ComplexMatrix,
}

impl EmbeddedTangent {
    /// Validates `Φ* = Φ` and `PΦ + ΦP = Φ` (hence `tr Φ = 0`) at `p`.
    pub fn new(p: &Projector, matrix: ComplexMatrix, tol: &Tolerances) -> Result<Self> {
        ensure_tangent_at(p, &matrix, tol)?;
        Ok(Self { matrix })
    }

    pub(crate) fn from_matrix_unchecked(matrix: ComplexMatrix) -> Self {
        Self { matrix }
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }
}

/// Largest violation of the embedded-tangent conditions at `p`.
pub fn tangent_defect(p: &Projector, phi: &ComplexMatrix) -> f64 {
    let pm = p.matrix();
    let sym = (pm * phi + phi * pm - phi).norm();
    let herm = linalg::hermitian_defect(phi);
    let tr = phi.trace().norm();
    sym.max(herm).max(tr)
}

fn ensure_tangent_at(p: &Projector, phi: &ComplexMatrix, tol: &Tolerances) -> Result<()> {
    if phi.shape() != (p.dim(), p.dim()) {
        return Err(GeomError::DimensionMismatch(format!(
            "tangent must be {0}x{0}",
            p.dim()
        )));
    }
    ensure_finite(phi)?;
    let defect = tangent_defect(p, phi);
    if defect <= tol.comparison * (1.0 + phi.norm()) {
        Ok(())
    } else {
        Err(GeomError::NotTangent { defect })
    }
}

/// The projector onto the graph `Γ(f) = {x + f(x) | x ∈ X}`.
pub fn proj_from_chart(f: &ChartTangent) -> Projector {
    let base = f.base();
    let (n, m) = (base.dim(), base.rank());
    let k = n - m;
    let fb = f.block();
    let fa = fb.adjoint();
    let inner = (identity(m) + &fa * fb)
        .cholesky()
        .expect("1 + f*f is positive definite")
        .inverse();
    let outer = (identity(k) + fb * &fa)
        .cholesky()
        .expect("1 + ff* is positive definite")
        .inverse();
    let mut blocks = ComplexMatrix::zeros(n, n);
    blocks.view_mut((0, 0), (m, m)).copy_from(&inner);
    blocks.view_mut((0, m), (m, k)).copy_from(&(&fa * &outer));
    blocks.view_mut((m, 0), (k, m)).copy_from(&(fb * &inner));
    blocks.view_mut((m, m), (k, k)).copy_from(&(fb * &fa * &outer));
    let b = base.adapted_basis();
    let p = &b * blocks * b.adjoint();
    Projector::from_matrix_unchecked(hermitian_part(&p), m)
}

/// Inverse chart: `f = (coframe* Q frame)(frame* Q frame)⁻¹`.
pub fn chart_from_proj(base: &BasePoint, q: &Projector, tol: &Tolerances) -> Result<ChartTangent> {
    if q.dim() != base.dim() || q.rank() != base.rank() {
        return Err(GeomError::DimensionMismatch(
            "projector and base point differ in shape".into(),
        ));
    }
    let frame = base.frame().matrix();
    let coframe = base.coframe().matrix();
    let top = frame.adjoint() * q.matrix() * frame;
    let sigma_min = linalg::smallest_singular_value(&top);
    if sigma_min <= tol.structural {
        return Err(GeomError::OutsideChart { sigma_min });
    }
    let bottom = coframe.adjoint() * q.matrix() * frame;
    // f · top = bottom, with top Hermitian.
    let ft = top
        .lu()
        .solve(&bottom.adjoint())
        .ok_or(GeomError::OutsideChart { sigma_min })?;
    ChartTangent::new(base.clone(), ft.adjoint())
}

/// `φ ↦ [[0, φ*], [φ, 0]]` in the adapted basis.
pub fn tangent_embed(v: &ChartTangent) -> EmbeddedTangent {
    let a = v.ambient();
    EmbeddedTangent::from_matrix_unchecked(&a + a.adjoint())
}

/// `φ = coframe* Φ frame`.
pub fn tangent_extract(
    base: &BasePoint,
    phi: &EmbeddedTangent,
    tol: &Tolerances,
) -> Result<ChartTangent> {
    ensure_tangent_at(base.projector(), phi.matrix(), tol)?;
    let block = base.coframe().matrix().adjoint() * phi.matrix() * base.frame().matrix();
    ChartTangent::new(base.clone(), block)
}

/// Transports chart coordinates along a unitary: `ũ(f) = u f u⁻¹`, written in
/// the base `u(X)` with frames `isometrize(u·frame)`, `isometrize(u·coframe)`.
///
/// Returns the transported coordinate, whose [`ChartTangent::base`] is the new
/// base point.
pub fn chart_transport(u: &ComplexMatrix, f: &ChartTangent, tol: &Tolerances) -> Result<ChartTangent> {
    let base = f.base();
    if u.shape() != (base.dim(), base.dim()) {
        return Err(GeomError::DimensionMismatch("unitary has wrong size".into()));
    }
    ensure_unitary(u, tol.structural)?;
    let frame = linalg::isometrize(&(u * base.frame().matrix()), tol)?;
    let coframe = linalg::isometrize(&(u * base.coframe().matrix()), tol)?;
    let moved = BasePoint::from_parts(frame, coframe, &Tolerances {
        structural: tol.comparison,
        ..*tol
    })?;
    let conj = u * f.ambient() * u.adjoint();
    let block = moved.coframe().matrix().adjoint() * conj * moved.frame().matrix();
    ChartTangent::new(moved, block)
}

/// Fundamental vector field of `u ∈ 𝔲(n)` at `X`: the block of `(1 − P)u|_X`.
pub fn lie_field_chart(u: &ComplexMatrix, base: &BasePoint, tol: &Tolerances) -> Result<ChartTangent> {
    check_generator(u, base.dim(), tol)?;
    let block = base.coframe().matrix().adjoint() * u * base.frame().matrix();
    ChartTangent::new(base.clone(), block)
}

fn check_generator(u: &ComplexMatrix, n: usize, tol: &Tolerances) -> Result<()> {
    if u.shape() != (n, n) {
        return Err(GeomError::DimensionMismatch(format!("generator must be {n}x{n}")));
    }
    ensure_anti_hermitian(u, tol.structural)
}

/// `ũ(P) = −i tr(uP)`.
pub fn linear_hamiltonian(u: &ComplexMatrix, p: &Projector, tol: &Tolerances) -> Result<f64> {
    check_generator(u, p.dim(), tol)?;
    Ok(linear_hamiltonian_unchecked(u, p.matrix()))
}

pub(crate) fn linear_hamiltonian_unchecked(u: &ComplexMatrix, p: &ComplexMatrix) -> f64 {
    // tr(uP) for anti-Hermitian u and Hermitian P is purely imaginary.
    (c(0.0, -1.0) * (u * p).trace()).re
}

/// `ω(P; Φ, Ψ) = Re(i tr(P[Φ, Ψ]))`. In chart blocks this is
/// `i tr(φ*ψ − ψ*φ)`.
pub fn symplectic_form(
    p: &Projector,
    phi: &EmbeddedTangent,
    psi: &EmbeddedTangent,
    tol: &Tolerances,
) -> Result<f64> {
    ensure_tangent_at(p, phi.matrix(), tol)?;
    ensure_tangent_at(p, psi.matrix(), tol)?;
    let br = commutator(phi.matrix(), psi.matrix());
    Ok((c(0.0, 1.0) * (p.matrix() * br).trace()).re)
}

/// Hamiltonian vector field of `ũ`: `[u, P]`.
pub fn ham_field(u: &ComplexMatrix, p: &Projector, tol: &Tolerances) -> Result<EmbeddedTangent> {
    check_generator(u, p.dim(), tol)?;
    Ok(EmbeddedTangent::from_matrix_unchecked(hermitian_part(
        &commutator(u, p.matrix()),
    )))
}

/// The connection form `F = 2P dP − dP` evaluated on `V`: `(2P − 1)V`.
pub fn grassmann_connection_f(
    p: &Projector,
    v: &EmbeddedTangent,
    tol: &Tolerances,
) -> Result<ComplexMatrix> {
    ensure_tangent_at(p, v.matrix(), tol)?;
    let two_p_minus_one = p.matrix().scale(2.0) - identity(p.dim());
    Ok(two_p_minus_one * v.matrix())
}

/// Curvature `dF = 2 dP dP`: `2(ΦΨ − ΨΦ)`.
pub fn grassmann_curvature_f(
    p: &Projector,
    phi: &EmbeddedTangent,
    psi: &EmbeddedTangent,
    tol: &Tolerances,
) -> Result<ComplexMatrix> {
    ensure_tangent_at(p, phi.matrix(), tol)?;
    ensure_tangent_at(p, psi.matrix(), tol)?;
    Ok(commutator(phi.matrix(), psi.matrix()).scale(2.0))
}

/// Which covariant derivative [`covariant_derivative_along`] applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Derivation {
    /// `∇s = P ṡ` on sections of the canonical bundle `im P`.
    Canonical,
    /// `∇⊥s = (1 − P) ṡ` on sections of the complement bundle `ker P`.
    Complement,
    /// `∇ᴴ = ∇ ⊕ ∇⊥` on the trivial bundle `C^n`.
    WhitneySum,
}

/// Covariant derivative of a sampled section along a sampled projector path
/// on a uniform grid of spacing `h`. `ṡ` uses second-order central
/// differences, one-sided at the ends.
pub fn covariant_derivative_along(
    curve: &[Projector],
    section: &[DVector<C64>],
    h: f64,
    kind: Derivation,
    tol: &Tolerances,
) -> Result<Vec<DVector<C64>>> {
    if curve.len() != section.len() || curve.len() < 3 {
        return Err(GeomError::DimensionMismatch(
            "curve and section need the same length, at least 3".into(),
        ));
    }
    if !(h.is_finite() && h > 0.0) {
        return Err(GeomError::InvalidGrid(format!("spacing {h}")));
    }
    let n = curve[0].dim();
    for (k, (p, s)) in curve.iter().zip(section).enumerate() {
        if p.dim() != n || s.len() != n {
            return Err(GeomError::DimensionMismatch(format!("node {k}")));
        }
        let defect = match kind {
            Derivation::Canonical => (p.complement() * s).norm(),
            Derivation::Complement => (p.matrix() * s).norm(),
            Derivation::WhitneySum => 0.0,
        };
        if defect > tol.comparison * (1.0 + s.norm()) {
            return Err(GeomError::SectionNotInFiber { node: k, defect });
        }
    }
    let len = curve.len();
    let derivative = |values: &[DVector<C64>], k: usize| -> DVector<C64> {
        let mut acc = DVector::zeros(n);
        for (j, w) in fd::first_derivative_stencil(k, 0, len, 2) {
            acc += &values[j] * c(w / h, 0.0);
        }
        acc
    };
    let out = match kind {
        Derivation::Canonical => (0..len)
            .map(|k| curve[k].matrix() * derivative(section, k))
            .collect(),
        Derivation::Complement => (0..len)
            .map(|k| curve[k].complement() * derivative(section, k))
            .collect(),
        Derivation::WhitneySum => {
            let inner: Vec<_> = curve.iter().zip(section).map(|(p, s)| p.matrix() * s).collect();
            let outer: Vec<_> = curve.iter().zip(section).map(|(p, s)| p.complement() * s).collect();
            (0..len)
                .map(|k| {
                    curve[k].matrix() * derivative(&inner, k)
                        + curve[k].complement() * derivative(&outer, k)
                })
                .collect()
        }
    };
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{prng, random_antihermitian_with, random_gaussian, random_unitary_with, real_matrix};

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn std_tangent(re: f64, im: f64) -> ChartTangent {
        ChartTangent::new(
            BasePoint::standard(2, 1),
            ComplexMatrix::from_element(1, 1, c(re, im)),
        )
        .unwrap()
    }

    /// `vv*` for the isometrized column `(1, z)ᵀ`.
    fn graph_projector_oracle(z: C64) -> ComplexMatrix {
        let col = ComplexMatrix::from_column_slice(2, 1, &[c(1.0, 0.0), z]);
        let v = linalg::isometrize(&col, &tol()).unwrap();
        v.matrix() * v.matrix().adjoint()
    }

    #[test]
    fn proj_from_chart_examples() {
        let base = BasePoint::standard(3, 1);
        let zero = ChartTangent::zero(base.clone());
        assert!(proj_from_chart(&zero).distance(base.projector()) < 1e-15);

        let p = proj_from_chart(&std_tangent(1.0, 0.0));
        let expected = real_matrix(2, 2, &[0.5, 0.5, 0.5, 0.5]);
        assert!((p.matrix() - &expected).norm() < 1e-15);
        assert!((graph_projector_oracle(c(1.0, 0.0)) - &expected).norm() < 1e-15);

        let p = proj_from_chart(&std_tangent(0.0, 1.0));
        let expected = ComplexMatrix::from_row_slice(
            2,
            2,
            &[c(0.5, 0.0), c(0.0, -0.5), c(0.0, 0.5), c(0.5, 0.0)],
        );
        assert!((p.matrix() - &expected).norm() < 1e-15);
        assert!((graph_projector_oracle(c(0.0, 1.0)) - &expected).norm() < 1e-15);
    }

    #[test]
    fn chart_from_proj_examples() {
        let base = BasePoint::standard(2, 1);
        let f = chart_from_proj(&base, base.projector(), &tol()).unwrap();
        assert!(f.block().norm() < 1e-15);

        let q = Projector::new(real_matrix(2, 2, &[0.5, 0.5, 0.5, 0.5]), 1, &tol()).unwrap();
        let f = chart_from_proj(&base, &q, &tol()).unwrap();
        assert!((f.block()[(0, 0)] - c(1.0, 0.0)).norm() < 1e-15);

        let q = Projector::new(real_matrix(2, 2, &[0.0, 0.0, 0.0, 1.0]), 1, &tol()).unwrap();
        assert!(matches!(
            chart_from_proj(&base, &q, &tol()),
            Err(GeomError::OutsideChart { .. })
        ));
    }

    #[test]
    fn chart_round_trip_random_base() {
        let mut rng = prng(21);
        let frame = linalg::random_frame_with(&mut rng, 6, 2);
        let base = BasePoint::from_frame(&frame);
        let block = random_gaussian(&mut rng, 4, 2).scale(3.0);
        let f = ChartTangent::new(base.clone(), block.clone()).unwrap();
        let q = proj_from_chart(&f);
        assert!(q.defect() < 1e-13);
        let back = chart_from_proj(&base, &q, &tol()).unwrap();
        assert!((back.block() - block).norm() < 1e-12);
    }

    #[test]
    fn tangent_embed_examples() {
        let base = BasePoint::standard(2, 1);
        assert!(tangent_embed(&ChartTangent::zero(base)).matrix().norm() == 0.0);
        let e = tangent_embed(&std_tangent(1.0, 0.0));
        assert!((e.matrix() - real_matrix(2, 2, &[0.0, 1.0, 1.0, 0.0])).norm() < 1e-15);
        let e = tangent_embed(&std_tangent(0.0, 1.0));
        let expected = ComplexMatrix::from_row_slice(
            2,
            2,
            &[c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)],
        );
        assert!((e.matrix() - expected).norm() < 1e-15);
    }

    #[test]
    fn tangent_extract_examples() {
        let base = BasePoint::standard(2, 1);
        let zero = EmbeddedTangent::from_matrix_unchecked(ComplexMatrix::zeros(2, 2));
        assert!(tangent_extract(&base, &zero, &tol()).unwrap().block().norm() == 0.0);
        let x = EmbeddedTangent::from_matrix_unchecked(real_matrix(2, 2, &[0.0, 1.0, 1.0, 0.0]));
        let f = tangent_extract(&base, &x, &tol()).unwrap();
        assert!((f.block()[(0, 0)] - c(1.0, 0.0)).norm() < 1e-15);
        let z = EmbeddedTangent::from_matrix_unchecked(real_matrix(2, 2, &[1.0, 0.0, 0.0, -1.0]));
        assert!(matches!(
            tangent_extract(&base, &z, &tol()),
            Err(GeomError::NotTangent { .. })
        ));
    }

    #[test]
    fn chart_transport_examples() {
        let f = std_tangent(0.7, -0.2);
        let same = chart_transport(&identity(2), &f, &tol()).unwrap();
        assert!((same.block() - f.block()).norm() < 1e-15);

        let u = real_matrix(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        let zero = ChartTangent::zero(BasePoint::standard(2, 1));
        let moved = chart_transport(&u, &zero, &tol()).unwrap();
        assert!(moved.block().norm() < 1e-15);
        let e2 = real_matrix(2, 2, &[0.0, 0.0, 0.0, 1.0]);
        assert!((moved.base().projector().matrix() - e2).norm() < 1e-15);
        assert!(matches!(
            chart_transport(&real_matrix(2, 2, &[2.0, 0.0, 0.0, 1.0]), &f, &tol()),
            Err(GeomError::NotUnitary { .. })
        ));
    }

    #[test]
    fn chart_transport_is_equivariant() {
        let mut rng = prng(4);
        let base = BasePoint::standard(5, 2);
        let f = ChartTangent::new(base, random_gaussian(&mut rng, 3, 2)).unwrap();
        let u = random_unitary_with(&mut rng, 5);
        let moved = chart_transport(&u, &f, &tol()).unwrap();
        let lhs = proj_from_chart(&moved);
        let rhs = proj_from_chart(&f).conjugate(&u);
        assert!(lhs.distance(&rhs) < 1e-12);
    }

    #[test]
    fn lie_field_examples() {
        let base = BasePoint::standard(2, 1);
        let diag = ComplexMatrix::from_row_slice(2, 2, &[c(0.0, 1.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 3.0)]);
        assert!(lie_field_chart(&diag, &base, &tol()).unwrap().block().norm() == 0.0);
        let u = real_matrix(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        let f = lie_field_chart(&u, &base, &tol()).unwrap();
        assert!((f.block()[(0, 0)] - c(1.0, 0.0)).norm() < 1e-15);

        let mut rng = prng(10);
        let u = random_antihermitian_with(&mut rng, 4);
        let base = BasePoint::standard(4, 2);
        let f = lie_field_chart(&u, &base, &tol()).unwrap();
        let direct = commutator(&u, base.projector().matrix());
        assert!((tangent_embed(&f).matrix() - direct).norm() < 1e-14);
        assert!(matches!(
            lie_field_chart(&identity(4), &base, &tol()),
            Err(GeomError::NotAntiHermitian { .. })
        ));
    }

    #[test]
    fn linear_hamiltonian_examples() {
        let p = Projector::standard(2, 1);
        assert_eq!(linear_hamiltonian(&ComplexMatrix::zeros(2, 2), &p, &tol()).unwrap(), 0.0);
        let u = ComplexMatrix::from_row_slice(2, 2, &[c(0.0, 1.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, -1.0)]);
        assert!((linear_hamiltonian(&u, &p, &tol()).unwrap() - 1.0).abs() < 1e-15);
        let u = real_matrix(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        assert!(linear_hamiltonian(&u, &p, &tol()).unwrap().abs() < 1e-15);
    }

    #[test]
    fn symplectic_form_examples() {
        let p = Projector::standard(2, 1);
        let phi = tangent_embed(&std_tangent(1.0, 0.0));
        let psi = tangent_embed(&std_tangent(0.0, 1.0));
        assert_eq!(symplectic_form(&p, &phi, &phi, &tol()).unwrap(), 0.0);
        // Direct 2x2 arithmetic: [Φ, Ψ] = diag(2i, −2i), so i·tr(P[Φ,Ψ]) = i·2i = −2.
        let direct = {
            let br = real_matrix(2, 2, &[0.0, 1.0, 1.0, 0.0])
                * ComplexMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)]);
            let br = &br - br.adjoint();
            (c(0.0, 1.0) * (p.matrix() * br).trace()).re
        };
        assert!((direct + 2.0).abs() < 1e-15);
        let w = symplectic_form(&p, &phi, &psi, &tol()).unwrap();
        assert!((w - direct).abs() < 1e-15);
        assert!((symplectic_form(&p, &psi, &phi, &tol()).unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn symplectic_block_formula() {
        let mut rng = prng(77);
        let base = BasePoint::standard(5, 2);
        let a = random_gaussian(&mut rng, 3, 2);
        let b = random_gaussian(&mut rng, 3, 2);
        let phi = tangent_embed(&ChartTangent::new(base.clone(), a.clone()).unwrap());
        let psi = tangent_embed(&ChartTangent::new(base.clone(), b.clone()).unwrap());
        let w = symplectic_form(base.projector(), &phi, &psi, &tol()).unwrap();
        let blocks = c(0.0, 1.0) * (a.adjoint() * &b - b.adjoint() * &a).trace();
        assert!((w - blocks.re).abs() < 1e-12);
        assert!(blocks.im.abs() < 1e-12);
    }

    #[test]
    fn ham_field_examples() {
        let p = Projector::standard(3, 1);
        let u = p.matrix() * c(0.0, 1.0);
        assert!(ham_field(&u, &p, &tol()).unwrap().matrix().norm() == 0.0);
        let p = Projector::standard(2, 1);
        let u = real_matrix(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        let x = ham_field(&u, &p, &tol()).unwrap();
        assert!((x.matrix() - real_matrix(2, 2, &[0.0, 1.0, 1.0, 0.0])).norm() < 1e-15);
    }

    #[test]
    fn ham_field_duality_finite_differences() {
        let mut rng = prng(13);
        let base = BasePoint::standard(4, 2);
        let u = random_antihermitian_with(&mut rng, 4);
        let dir = ChartTangent::new(base.clone(), random_gaussian(&mut rng, 2, 2)).unwrap();
        let v = tangent_embed(&dir);
        let eps = 1e-5;
        let h = |s: f64| {
            let q = proj_from_chart(&dir.scaled(s));
            linear_hamiltonian(&u, &q, &tol()).unwrap()
        };
        let fd = (h(eps) - h(-eps)) / (2.0 * eps);
        let x = ham_field(&u, base.projector(), &tol()).unwrap();
        let w = symplectic_form(base.projector(), &x, &v, &tol()).unwrap();
        assert!((fd - w).abs() <= 1e-5 * (1.0 + fd.abs()));
    }

    #[test]
    fn connection_and_curvature_examples() {
        let p = Projector::standard(2, 1);
        let zero = EmbeddedTangent::from_matrix_unchecked(ComplexMatrix::zeros(2, 2));
        assert!(grassmann_connection_f(&p, &zero, &tol()).unwrap().norm() == 0.0);
        let v = EmbeddedTangent::from_matrix_unchecked(real_matrix(2, 2, &[0.0, 1.0, 1.0, 0.0]));
        let f = grassmann_connection_f(&p, &v, &tol()).unwrap();
        assert!((f - real_matrix(2, 2, &[0.0, 1.0, -1.0, 0.0])).norm() < 1e-15);

        let phi = tangent_embed(&std_tangent(1.0, 0.0));
        let psi = tangent_embed(&std_tangent(0.0, 1.0));
        assert!(grassmann_curvature_f(&p, &phi, &phi, &tol()).unwrap().norm() == 0.0);
        let k = grassmann_curvature_f(&p, &phi, &psi, &tol()).unwrap();
        let expected = ComplexMatrix::from_row_slice(2, 2, &[c(0.0, 4.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, -4.0)]);
        assert!((&k - expected).norm() < 1e-15);
        let k2 = grassmann_curvature_f(&p, &psi, &phi, &tol()).unwrap();
        assert!((k + k2).norm() < 1e-15);
    }

    #[test]
    fn connection_form_is_anti_hermitian_and_curvature_block_diagonal() {
        let mut rng = prng(2);
        let base = BasePoint::standard(6, 2);
        let a = random_gaussian(&mut rng, 4, 2);
        let b = random_gaussian(&mut rng, 4, 2);
        let phi = tangent_embed(&ChartTangent::new(base.clone(), a.clone()).unwrap());
        let psi = tangent_embed(&ChartTangent::new(base.clone(), b.clone()).unwrap());
        let f = grassmann_connection_f(base.projector(), &phi, &tol()).unwrap();
        assert!(linalg::anti_hermitian_defect(&f) < 1e-12);
        let k = grassmann_curvature_f(base.projector(), &phi, &psi, &tol()).unwrap();
        let top = k.view((0, 0), (2, 2)).into_owned();
        assert!((top - (a.adjoint() * &b - b.adjoint() * &a).scale(2.0)).norm() < 1e-12);
        assert!(k.view((0, 2), (2, 4)).norm() < 1e-12);
    }

    #[test]
    fn covariant_derivative_examples() {
        let h = 1e-3;
        let n_nodes = 200;
        let p = Projector::standard(2, 1);
        let curve = vec![p.clone(); n_nodes];
        let constant = vec![DVector::from_vec(vec![c(0.3, 0.1), c(0.0, 0.0)]); n_nodes];
        let d = covariant_derivative_along(&curve, &constant, h, Derivation::Canonical, &tol()).unwrap();
        assert!(d.iter().all(|v| v.norm() < 1e-12));

        let cosine: Vec<_> = (0..n_nodes)
            .map(|k| DVector::from_vec(vec![c((k as f64 * h).cos(), 0.0), c(0.0, 0.0)]))
            .collect();
        let d = covariant_derivative_along(&curve, &cosine, h, Derivation::Canonical, &tol()).unwrap();
        for (k, v) in d.iter().enumerate() {
            let t = k as f64 * h;
            assert!((v[0] - c(-t.sin(), 0.0)).norm() < 1e-6);
            assert!(v[1].norm() == 0.0);
        }

        let wrong = vec![DVector::from_vec(vec![c(0.0, 0.0), c(1.0, 0.0)]); n_nodes];
        assert!(matches!(
            covariant_derivative_along(&curve, &wrong, h, Derivation::Canonical, &tol()),
            Err(GeomError::SectionNotInFiber { .. })
        ));
        assert!(covariant_derivative_along(&curve, &wrong, h, Derivation::Complement, &tol()).is_ok());
    }

    #[test]
    fn whitney_sum_is_metric() {
        // P(t) rotates by e^{tK}; sections are generic vectors.
        let mut rng = prng(31);
        let k = random_antihermitian_with(&mut rng, 3);
        let p0 = Projector::standard(3, 1);
        let a = random_gaussian(&mut rng, 3, 1);
        let b = random_gaussian(&mut rng, 3, 1);
        let h = 1e-3;
        let n_nodes = 101;
        let mut curve = Vec::new();
        let mut s1 = Vec::new();
        let mut s2 = Vec::new();
        for j in 0..n_nodes {
            let t = j as f64 * h;
            let u = linalg::mat_exp(&k.scale(t)).unwrap();
            curve.push(p0.conjugate(&u));
            s1.push(DVector::from_vec(vec![c(t.cos(), 0.0), c(t, t * t), c(1.0, -t)]) + a.column(0));
            s2.push(DVector::from_vec(vec![c(0.0, t), c(1.0, 0.0), c((2.0 * t).sin(), 0.0)]) + b.column(0));
        }
        let d1 = covariant_derivative_along(&curve, &s1, h, Derivation::WhitneySum, &tol()).unwrap();
        let d2 = covariant_derivative_along(&curve, &s2, h, Derivation::WhitneySum, &tol()).unwrap();
        for j in 1..n_nodes - 1 {
            let lhs = (s1[j + 1].dotc(&s2[j + 1]) - s1[j - 1].dotc(&s2[j - 1])) / c(2.0 * h, 0.0);
            let rhs = d1[j].dotc(&s2[j]) + s1[j].dotc(&d2[j]);
            assert!((lhs - rhs).norm() < 1e-4, "node {j}: {lhs} vs {rhs}");
        }
    }
}
