//! The principal `U(m)`-bundle `π: Isom(C^m, C^n) → Gr_m(C^n)`, `π(φ) = φφ*`,
//! with connection form `𝒜 = φ* dφ` and curvature `Ω(u, v) = ½(u*v − v*u)`
//! on horizontal vectors.

use crate::error::{GeomError, Result};
use crate::grassmann::{BasePoint, ChartTangent, EmbeddedTangent, Projector};
use crate::linalg::{
    self, anti_hermitian_part, c, ensure_anti_hermitian, ensure_finite, ensure_unitary,
    hermitian_eigen, hermitian_part, identity, ComplexMatrix, Tolerances,
};

/// An isometry `C^m → C^n`, i.e. an `n×m` matrix with `φ*φ = I_m`.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    matrix: ComplexMatrix,
}

impl Frame {
    pub fn new(matrix: ComplexMatrix, tol: &Tolerances) -> Result<Self> {
        ensure_finite(&matrix)?;
        if matrix.ncols() == 0 || matrix.ncols() > matrix.nrows() {
            return Err(GeomError::DimensionTooSmall {
                n: matrix.nrows(),
                m: matrix.ncols(),
            });
        }
        let defect = linalg::isometry_defect(&matrix);
        if defect > tol.structural {
            return Err(GeomError::NotAFrame { defect });
        }
        Ok(Self { matrix })
    }

    pub(crate) fn from_matrix_unchecked(matrix: ComplexMatrix) -> Self {
        Self { matrix }
    }

    /// The first `m` standard basis vectors of `C^n`.
    pub fn standard(n: usize, m: usize) -> Self {
        Self {
            matrix: identity(n).columns(0, m).into_owned(),
        }
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    /// `(n, m)`.
    pub fn shape(&self) -> (usize, usize) {
        self.matrix.shape()
    }

    pub fn defect(&self) -> f64 {
        linalg::isometry_defect(&self.matrix)
    }

    /// `π(φ) = φφ*`.
    pub fn projector(&self) -> Projector {
        let m = self.matrix.ncols();
        Projector::from_matrix_unchecked(hermitian_part(&(&self.matrix * self.matrix.adjoint())), m)
    }

    /// Right action `φ ↦ φg` of the structure group.
    pub fn act(&self, g: &GaugeElement) -> Self {
        Self {
            matrix: &self.matrix * g.matrix(),
        }
    }

    /// The unique `g` with `self = other · g`, provided both lie in one fiber.
    pub fn relative_to(&self, other: &Frame, tol: &Tolerances) -> Result<GaugeElement> {
        let distance = self.projector().distance(&other.projector());
        if distance > tol.comparison {
            return Err(GeomError::BaseMismatch { distance });
        }
        Ok(GaugeElement::from_matrix_unchecked(
            other.matrix.adjoint() * &self.matrix,
        ))
    }
}

/// A tangent vector `ξ` at a frame `φ`: `φ*ξ + ξ*φ = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameTangent {
    at: Frame,
    matrix: ComplexMatrix,
}

impl FrameTangent {
    pub fn new(at: Frame, matrix: ComplexMatrix, tol: &Tolerances) -> Result<Self> {
        if matrix.shape() != at.shape() {
            return Err(GeomError::DimensionMismatch(format!(
                "frame tangent must be {}x{}",
                at.shape().0,
                at.shape().1
            )));
        }
        ensure_finite(&matrix)?;
        let inner = at.matrix().adjoint() * &matrix;
        let defect = (&inner + inner.adjoint()).norm();
        if defect > tol.structural * (1.0 + matrix.norm()) {
            return Err(GeomError::NotTangent { defect });
        }
        Ok(Self { at, matrix })
    }

    pub(crate) fn from_parts_unchecked(at: Frame, matrix: ComplexMatrix) -> Self {
        Self { at, matrix }
    }

    /// The fundamental vertical vector `φu` of `u ∈ 𝔲(m)`.
    pub fn vertical(at: &Frame, u: &GaugeElement) -> Self {
        Self {
            at: at.clone(),
            matrix: at.matrix() * u.matrix(),
        }
    }

    pub fn at(&self) -> &Frame {
        &self.at
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    /// Pushforward of the right action: `ξ ↦ ξg` at `φg`.
    pub fn act(&self, g: &GaugeElement) -> Self {
        Self {
            at: self.at.act(g),
            matrix: &self.matrix * g.matrix(),
        }
    }

    /// `‖φ*ξ‖`.
    pub fn vertical_norm(&self) -> f64 {
        (self.at.matrix().adjoint() * &self.matrix).norm()
    }
}

/// An `m×m` element of `U(m)` or of its Lie algebra `𝔲(m)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaugeElement {
    matrix: ComplexMatrix,
}

impl GaugeElement {
    pub fn unitary(matrix: ComplexMatrix, tol: &Tolerances) -> Result<Self> {
        linalg::ensure_square(&matrix, "gauge element")?;
        ensure_finite(&matrix)?;
        ensure_unitary(&matrix, tol.structural)?;
        Ok(Self { matrix })
    }

    pub fn algebra(matrix: ComplexMatrix, tol: &Tolerances) -> Result<Self> {
        linalg::ensure_square(&matrix, "gauge element")?;
        ensure_finite(&matrix)?;
        ensure_anti_hermitian(&matrix, tol.structural)?;
        Ok(Self { matrix })
    }

    pub(crate) fn from_matrix_unchecked(matrix: ComplexMatrix) -> Self {
        Self { matrix }
    }

    pub fn identity(m: usize) -> Self {
        Self { matrix: identity(m) }
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn adjoint(&self) -> Self {
        Self {
            matrix: self.matrix.adjoint(),
        }
    }

    /// `‖g − I‖`.
    pub fn distance_from_identity(&self) -> f64 {
        (&self.matrix - identity(self.dim())).norm()
    }

    pub fn unitarity_defect(&self) -> f64 {
        linalg::isometry_defect(&self.matrix)
    }

    /// `arg det g`; the scalar Berry phase when `m = 1`.
    pub fn phase(&self) -> f64 {
        self.matrix.determinant().arg()
    }
}

/// `π(φ) = φφ*`.
pub fn project_frame(phi: &Frame) -> Projector {
    phi.projector()
}

/// `𝒜(ξ) = φ*ξ`.
pub fn connection_a(xi: &FrameTangent) -> GaugeElement {
    GaugeElement::from_matrix_unchecked(anti_hermitian_part(
        &(xi.at.matrix().adjoint() * &xi.matrix),
    ))
}

/// `ξ = φφ*ξ + (1 − φφ*)ξ`; the horizontal part is the exact remainder.
pub fn split_vertical_horizontal(xi: &FrameTangent) -> (FrameTangent, FrameTangent) {
    let phi = xi.at.matrix();
    let vertical = phi * (phi.adjoint() * &xi.matrix);
    let horizontal = &xi.matrix - &vertical;
    (
        FrameTangent::from_parts_unchecked(xi.at.clone(), vertical),
        FrameTangent::from_parts_unchecked(xi.at.clone(), horizontal),
    )
}

/// `dπ(ξ) = ξφ* + φξ*`.
pub fn push_forward(xi: &FrameTangent) -> EmbeddedTangent {
    let phi = xi.at.matrix();
    let a = &xi.matrix * phi.adjoint();
    EmbeddedTangent::from_matrix_unchecked(&a + a.adjoint())
}

fn ensure_same_base(phi: &Frame, base: &BasePoint, tol: &Tolerances) -> Result<()> {
    if phi.shape() != (base.dim(), base.rank()) {
        return Err(GeomError::DimensionMismatch(
            "frame and base point differ in shape".into(),
        ));
    }
    let distance = phi.projector().distance(base.projector());
    if distance > tol.comparison {
        return Err(GeomError::BaseMismatch { distance });
    }
    Ok(())
}

/// The horizontal lift `μφ` of a chart tangent at `im φ`.
pub fn horizontal_lift(phi: &Frame, mu: &ChartTangent, tol: &Tolerances) -> Result<FrameTangent> {
    let base = mu.base();
    ensure_same_base(phi, base, tol)?;
    let coords = base.frame().matrix().adjoint() * phi.matrix();
    let matrix = base.coframe().matrix() * mu.block() * coords;
    Ok(FrameTangent::from_parts_unchecked(phi.clone(), matrix))
}

/// `Ω(u, v) = ½(u*v − v*u)` on horizontal vectors at one frame.
pub fn curvature_omega(u: &FrameTangent, v: &FrameTangent, tol: &Tolerances) -> Result<GaugeElement> {
    let distance = (u.at.matrix() - v.at.matrix()).norm();
    if distance > tol.structural {
        return Err(GeomError::BaseMismatch { distance });
    }
    for xi in [u, v] {
        let defect = xi.vertical_norm();
        if defect > tol.comparison * (1.0 + xi.matrix.norm()) {
            return Err(GeomError::NotHorizontal { defect });
        }
    }
    let uv = u.matrix.adjoint() * &v.matrix;
    Ok(GaugeElement::from_matrix_unchecked(
        (&uv - uv.adjoint()).scale(0.5),
    ))
}

/// Horizontal pairs `(u_i, v_i)` at `base.frame()` with `Σ Ω(u_i, v_i) = w`.
///
/// With codimension at least `m` a single pair suffices: `u` embeds `C^m`
/// isometrically into the coframe and `v = uw`. Otherwise `iw = VΛV*` is
/// diagonalized and each nonzero eigenvalue `λ_j` contributes the rank-one
/// pair `u_j = √|λ_j| c r_j`, `v_j = −i sgn(λ_j) u_j`, where `c` is the first
/// coframe column and `r_j` the `j`-th row of `V*`. One spare dimension is
/// enough for the rank-one pairs, so intermediate codimensions need no block
/// splitting.
pub fn curvature_generators(
    w: &ComplexMatrix,
    base: &BasePoint,
    tol: &Tolerances,
) -> Result<Vec<(FrameTangent, FrameTangent)>> {
    let (n, m) = (base.dim(), base.rank());
    if n <= m {
        return Err(GeomError::DimensionTooSmall { n, m });
    }
    if w.shape() != (m, m) {
        return Err(GeomError::DimensionMismatch(format!("generator must be {m}x{m}")));
    }
    ensure_finite(w)?;
    ensure_anti_hermitian(w, tol.structural)?;
    let w = anti_hermitian_part(w);
    let at = base.frame().clone();
    if w.norm() == 0.0 {
        return Ok(Vec::new());
    }
    let coframe = base.coframe().matrix();
    if n - m >= m {
        let u = coframe.columns(0, m).into_owned();
        let v = &u * &w;
        return Ok(vec![(
            FrameTangent::from_parts_unchecked(at.clone(), u),
            FrameTangent::from_parts_unchecked(at, v),
        )]);
    }
    let (lambda, vectors) = hermitian_eigen(&(w.clone() * c(0.0, 1.0)));
    let col = coframe.column(0).into_owned();
    let floor = f64::EPSILON * w.norm();
    let mut pairs = Vec::new();
    for (j, &l) in lambda.iter().enumerate() {
        if l.abs() <= floor {
            continue;
        }
        let row = vectors.column(j).adjoint();
        let u = (&col * row).scale(l.abs().sqrt());
        let v = &u * c(0.0, -l.signum());
        pairs.push((
            FrameTangent::from_parts_unchecked(at.clone(), u),
            FrameTangent::from_parts_unchecked(at.clone(), v),
        ));
    }
    Ok(pairs)
}

/// `Φ_X(φ, f) = isometrize((1 + f̂)φ)`, a frame over `Γ(f)`.
pub fn local_trivialization(phi: &Frame, f: &ChartTangent, tol: &Tolerances) -> Result<Frame> {
    ensure_same_base(phi, f.base(), tol)?;
    let lifted = phi.matrix() + f.ambient() * phi.matrix();
    linalg::isometrize(&lifted, tol)
}
