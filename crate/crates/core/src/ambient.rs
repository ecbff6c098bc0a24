//! Ambient spaces: curvature operators, boundary shape operators, and
//! validation of immersed free-boundary surfaces.
//!
//! All built-in ambients are described in a single flat coordinate chart; the
//! boundary, where present, is a regular level set of an analytic function
//! `f` with the domain `{f <= 0}` and outward normal `W = grad f / |grad f|`.

use nalgebra::{Matrix2, Matrix3, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mesh::TriangulatedSurface;

/// Default tolerance for "point lies on the ambient boundary".
pub const TOL_BDRY: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum AmbientError {
    #[error("tangent frame is not orthonormal")]
    Frame,
    #[error("point is not on the ambient boundary (level value {0:.3e})")]
    OffBoundary(f64),
    #[error("vector is not tangent to the ambient boundary")]
    Tangency,
    #[error("ambient space has no boundary")]
    NoBoundary,
    #[error("unknown ambient spec '{0}'")]
    UnknownAmbient(String),
    #[error("mesh error: {0}")]
    Mesh(#[from] crate::mesh::MeshError),
    #[error("free-boundary validation failed: {0}")]
    Validation(String),
}

/// Catalogue of analytic level-set boundaries (flat metric).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum LevelSetKind {
    /// Domain `{z <= 0}` with flat boundary plane `z = 0`.
    HalfSpace,
    /// Ball of the given radius (convex boundary, shape operator 1/r).
    Ball { radius: f64 },
    /// Complement of a ball (concave boundary, shape operator -1/r).
    BallComplement { radius: f64 },
}

/// The ambient Riemannian domain the surface is immersed in.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum AmbientSpace {
    /// Flat R^3 without boundary.
    Euclidean3,
    /// Flat unit ball; boundary is the unit sphere.
    UnitBall3,
    /// Constant sectional curvature kappa, no boundary (chart evaluation of
    /// the curvature tensor only).
    SpaceForm { kappa: f64 },
    /// Flat metric with a catalogue level-set boundary.
    LevelSet(LevelSetKind),
}

impl AmbientSpace {
    /// Parses a CLI ambient spec such as `euclidean_3`, `unit_ball_3`,
    /// `space_form,kappa=-1`, `half_space`, `ball,r=2`,
    /// `ball_complement,r=2`.
    pub fn parse(spec: &str) -> Result<Self, AmbientError> {
        let mut parts = spec.split(',');
        let name = parts.next().unwrap_or("").trim();
        let mut params = std::collections::BTreeMap::new();
        for p in parts {
            if let Some((k, v)) = p.split_once('=') {
                let v: f64 = v
                    .trim()
                    .parse()
                    .map_err(|_| AmbientError::UnknownAmbient(spec.to_string()))?;
                params.insert(k.trim().to_string(), v);
            }
        }
        let get = |key: &str, default: f64| params.get(key).copied().unwrap_or(default);
        match name {
            "euclidean_3" => Ok(Self::Euclidean3),
            "unit_ball_3" => Ok(Self::UnitBall3),
            "space_form" => Ok(Self::SpaceForm {
                kappa: get("kappa", 1.0),
            }),
            "half_space" => Ok(Self::LevelSet(LevelSetKind::HalfSpace)),
            "ball" => Ok(Self::LevelSet(LevelSetKind::Ball { radius: get("r", 1.0) })),
            "ball_complement" => Ok(Self::LevelSet(LevelSetKind::BallComplement {
                radius: get("r", 1.0),
            })),
            _ => Err(AmbientError::UnknownAmbient(spec.to_string())),
        }
    }

    pub fn has_boundary(&self) -> bool {
        matches!(self, Self::UnitBall3 | Self::LevelSet(_))
    }

    /// Level function f with domain `{f <= 0}`, if the ambient has a boundary.
    pub fn level_value(&self, p: &Vector3<f64>) -> Option<f64> {
        match self {
            Self::UnitBall3 => Some(0.5 * (p.norm_squared() - 1.0)),
            Self::LevelSet(LevelSetKind::HalfSpace) => Some(p.z),
            Self::LevelSet(LevelSetKind::Ball { radius }) => {
                Some(0.5 * (p.norm_squared() - radius * radius))
            }
            Self::LevelSet(LevelSetKind::BallComplement { radius }) => {
                Some(0.5 * (radius * radius - p.norm_squared()))
            }
            _ => None,
        }
    }

    fn level_gradient(&self, p: &Vector3<f64>) -> Option<Vector3<f64>> {
        match self {
            Self::UnitBall3 | Self::LevelSet(LevelSetKind::Ball { .. }) => Some(*p),
            Self::LevelSet(LevelSetKind::HalfSpace) => Some(Vector3::z()),
            Self::LevelSet(LevelSetKind::BallComplement { .. }) => Some(-*p),
            _ => None,
        }
    }

    fn level_hessian(&self, _p: &Vector3<f64>) -> Option<Matrix3<f64>> {
        match self {
            Self::UnitBall3 | Self::LevelSet(LevelSetKind::Ball { .. }) => {
                Some(Matrix3::identity())
            }
            Self::LevelSet(LevelSetKind::HalfSpace) => Some(Matrix3::zeros()),
            Self::LevelSet(LevelSetKind::BallComplement { .. }) => Some(-Matrix3::identity()),
            _ => None,
        }
    }

    /// Outward unit normal W of the ambient boundary at a boundary point.
    pub fn outward_normal(&self, p: &Vector3<f64>) -> Result<Vector3<f64>, AmbientError> {
        let g = self.level_gradient(p).ok_or(AmbientError::NoBoundary)?;
        let n = g.norm();
        if n == 0.0 {
            return Err(AmbientError::OffBoundary(f64::INFINITY));
        }
        Ok(g / n)
    }

    /// Closest-point projection onto the boundary (catalogue shapes only).
    pub fn project_to_boundary(&self, p: &Vector3<f64>) -> Result<Vector3<f64>, AmbientError> {
        match self {
            Self::UnitBall3 => Ok(p / p.norm()),
            Self::LevelSet(LevelSetKind::HalfSpace) => Ok(Vector3::new(p.x, p.y, 0.0)),
            Self::LevelSet(LevelSetKind::Ball { radius })
            | Self::LevelSet(LevelSetKind::BallComplement { radius }) => Ok(p * (radius / p.norm())),
            _ => Err(AmbientError::NoBoundary),
        }
    }

    /// The partial Ricci-type trace R(V, e_1)e_1 + R(V, e_2)e_2 over an
    /// orthonormal tangent 2-frame.
    pub fn evaluate_curvature_operator(
        &self,
        point: &Vector3<f64>,
        tangent_frame: &[Vector3<f64>; 2],
        v: &Vector3<f64>,
    ) -> Result<Vector3<f64>, AmbientError> {
        let [e1, e2] = tangent_frame;
        let ortho = (e1.norm() - 1.0).abs().max((e2.norm() - 1.0).abs()).max(e1.dot(e2).abs());
        if ortho > 1e-10 {
            return Err(AmbientError::Frame);
        }
        Ok(self.curvature_apply(point, tangent_frame, v))
    }

    /// Unchecked curvature application, used in assembly inner loops.
    pub(crate) fn curvature_apply(
        &self,
        _point: &Vector3<f64>,
        tangent_frame: &[Vector3<f64>; 2],
        v: &Vector3<f64>,
    ) -> Vector3<f64> {
        match self {
            Self::Euclidean3 | Self::UnitBall3 | Self::LevelSet(_) => Vector3::zeros(),
            // R(X,Y)Z = kappa (<Y,Z>X - <X,Z>Y), so each frame vector
            // contributes kappa (V - <V,e>e).
            Self::SpaceForm { kappa } => {
                let [e1, e2] = tangent_frame;
                let tangential = e1 * v.dot(e1) + e2 * v.dot(e2);
                (v * 2.0 - tangential) * *kappa
            }
        }
    }

    /// Second fundamental form II(X,Y) = <grad_X W, Y> of the ambient
    /// boundary, via the level-set Hessian formula.
    pub fn boundary_second_form(
        &self,
        boundary_point: &Vector3<f64>,
        x: &Vector3<f64>,
        y: &Vector3<f64>,
    ) -> Result<f64, AmbientError> {
        let f = self.level_value(boundary_point).ok_or(AmbientError::NoBoundary)?;
        let g = self.level_gradient(boundary_point).unwrap();
        let gn = g.norm();
        if f.abs() > TOL_BDRY * gn.max(1.0) {
            return Err(AmbientError::OffBoundary(f));
        }
        let scale = x.norm().max(y.norm()).max(1.0);
        if x.dot(&g).abs() > 1e-8 * gn * scale || y.dot(&g).abs() > 1e-8 * gn * scale {
            return Err(AmbientError::Tangency);
        }
        let h = self.level_hessian(boundary_point).unwrap();
        Ok((h * x).dot(y) / gn)
    }

    /// Unchecked second-form value (assembly inner loops project inputs
    /// tangentially themselves).
    pub(crate) fn second_form_apply(
        &self,
        boundary_point: &Vector3<f64>,
        x: &Vector3<f64>,
        y: &Vector3<f64>,
    ) -> f64 {
        match (self.level_hessian(boundary_point), self.level_gradient(boundary_point)) {
            (Some(h), Some(g)) => (h * x).dot(y) / g.norm(),
            _ => 0.0,
        }
    }

    /// Scalar curvature/convexity bounds of the ambient:
    /// `rho = sup |curvature operator|`, `alpha = min{0, inf II}`.
    ///
    /// Exact for the curvature side; the boundary side probes the sample
    /// (projected to the boundary) and takes the infimum of the smallest
    /// shape-operator eigenvalue, which is exact for the catalogue shapes.
    pub fn ambient_bounds(&self, probe_points: &[Vector3<f64>]) -> (f64, f64) {
        let rho = match self {
            Self::SpaceForm { kappa } => 2.0 * kappa.abs(),
            _ => 0.0,
        };
        let mut alpha = 0.0_f64;
        if self.has_boundary() {
            for p in probe_points {
                let q = match self.project_to_boundary(p) {
                    Ok(q) if q.norm().is_finite() => q,
                    _ => continue,
                };
                alpha = alpha.min(self.min_shape_eigenvalue(&q));
            }
        }
        (rho, alpha)
    }

    fn min_shape_eigenvalue(&self, q: &Vector3<f64>) -> f64 {
        let w = match self.outward_normal(q) {
            Ok(w) => w,
            Err(_) => return 0.0,
        };
        // Any orthonormal tangent pair.
        let a = if w.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
        let t1 = (a - w * a.dot(&w)).normalize();
        let t2 = w.cross(&t1);
        let m = Matrix2::new(
            self.second_form_apply(q, &t1, &t1),
            self.second_form_apply(q, &t1, &t2),
            self.second_form_apply(q, &t2, &t1),
            self.second_form_apply(q, &t2, &t2),
        );
        // Cancellation-safe eigenvalue of the symmetric 2x2 block.
        let half_diff = 0.5 * (m[(0, 0)] - m[(1, 1)]);
        let off = 0.5 * (m[(0, 1)] + m[(1, 0)]);
        let disc = (half_diff * half_diff + off * off).sqrt();
        0.5 * m.trace() - disc
    }
}

/// Result of checking that a mesh is an approximate free-boundary minimal
/// surface.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FreeBoundaryReport {
    /// max over interior vertices of |discrete mean curvature| * local mean
    /// edge length (dimensionless).
    pub mean_curvature_residual: f64,
    /// max over boundary vertices of 1 - |<conormal, W>|.
    pub orthogonality_residual: f64,
    pub pass: bool,
}

/// A triangulated surface embedded in an ambient space, with per-vertex unit
/// normals and outward conormals along the boundary.
#[derive(Debug, Clone)]
pub struct ImmersedSurface {
    surface: TriangulatedSurface,
    ambient: AmbientSpace,
    normals: Vec<Vector3<f64>>,
    /// Outward conormal eta per vertex; zero for interior vertices.
    conormals: Vec<Vector3<f64>>,
}

impl ImmersedSurface {
    pub fn new(surface: TriangulatedSurface, ambient: AmbientSpace) -> Result<Self, AmbientError> {
        let normals = vertex_normals(&surface);
        let conormals = boundary_conormals(&surface, &normals);
        Ok(Self {
            surface,
            ambient,
            normals,
            conormals,
        })
    }

    pub fn surface(&self) -> &TriangulatedSurface {
        &self.surface
    }

    pub fn ambient(&self) -> &AmbientSpace {
        &self.ambient
    }

    pub fn normals(&self) -> &[Vector3<f64>] {
        &self.normals
    }

    /// Outward conormal at a boundary vertex (zero vector elsewhere).
    pub fn conormal(&self, v: usize) -> Vector3<f64> {
        self.conormals[v]
    }

    /// Outward ambient boundary normal W at a vertex position, if the ambient
    /// has a boundary.
    pub fn ambient_normal_at(&self, v: usize) -> Option<Vector3<f64>> {
        self.ambient.outward_normal(&self.surface.vertices()[v]).ok()
    }

    /// Checks approximate minimality (interior) and free-boundary
    /// orthogonality (boundary). Reports residuals; only a structurally
    /// invalid mesh is an error.
    pub fn validate_free_boundary(&self, tol_min: f64, tol_orth: f64) -> FreeBoundaryReport {
        let mean_curvature_residual = self.max_mean_curvature_residual();
        let mut orthogonality_residual: f64 = 0.0;
        if self.ambient.has_boundary() {
            for &v in &self.surface.boundary_vertex_set() {
                if let Some(w) = self.ambient_normal_at(v) {
                    let c = self.conormals[v];
                    orthogonality_residual = orthogonality_residual.max(1.0 - c.dot(&w).abs());
                }
            }
        }
        FreeBoundaryReport {
            mean_curvature_residual,
            orthogonality_residual,
            pass: mean_curvature_residual <= tol_min && orthogonality_residual <= tol_orth,
        }
    }

    /// Cotangent-formula mean curvature magnitude times the local edge
    /// length, maximized over interior vertices.
    fn max_mean_curvature_residual(&self) -> f64 {
        let vs = self.surface.vertices();
        let n = vs.len();
        let mut lap = vec![Vector3::zeros(); n];
        let mut ring_area = vec![0.0_f64; n];
        for (t, tri) in self.surface.triangles().iter().enumerate() {
            let area = self.surface.triangle_area(t);
            for r in 0..3 {
                let (i, j, k) = (tri[r], tri[(r + 1) % 3], tri[(r + 2) % 3]);
                ring_area[i] += area / 3.0;
                // cot of the angle at k, weighting edge (i, j)
                let a = vs[i] - vs[k];
                let b = vs[j] - vs[k];
                let cot = a.dot(&b) / a.cross(&b).norm();
                lap[i] += (vs[j] - vs[i]) * (0.5 * cot);
                lap[j] += (vs[i] - vs[j]) * (0.5 * cot);
            }
        }
        let boundary = self.surface.boundary_vertex_set();
        let mut edge_len_sum = vec![0.0_f64; n];
        let mut edge_count = vec![0usize; n];
        let mut seen = std::collections::BTreeSet::new();
        for tri in self.surface.triangles() {
            for &(a, b) in &[(tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])] {
                let key = if a < b { (a, b) } else { (b, a) };
                if seen.insert(key) {
                    let l = (vs[a] - vs[b]).norm();
                    for v in [a, b] {
                        edge_len_sum[v] += l;
                        edge_count[v] += 1;
                    }
                }
            }
        }
        let mut worst = 0.0_f64;
        for v in 0..n {
            if boundary.contains(&v) || ring_area[v] == 0.0 {
                continue;
            }
            let h = lap[v].norm() / ring_area[v];
            let local_h = edge_len_sum[v] / edge_count[v] as f64;
            worst = worst.max(h * local_h);
        }
        worst
    }
}

/// Area-weighted average of incident triangle normals, normalized.
fn vertex_normals(surface: &TriangulatedSurface) -> Vec<Vector3<f64>> {
    let vs = surface.vertices();
    let mut acc = vec![Vector3::zeros(); vs.len()];
    for tri in surface.triangles() {
        let n = (vs[tri[1]] - vs[tri[0]]).cross(&(vs[tri[2]] - vs[tri[0]]));
        for &v in tri {
            acc[v] += n; // cross product is already area-weighted
        }
    }
    acc.into_iter()
        .map(|v| {
            let n = v.norm();
            if n > 0.0 {
                v / n
            } else {
                Vector3::z()
            }
        })
        .collect()
}

/// Outward conormal per boundary vertex: length-weighted average of the
/// in-plane outward directions of the incident boundary edges, projected
/// orthogonal to the surface normal and normalized.
fn boundary_conormals(
    surface: &TriangulatedSurface,
    normals: &[Vector3<f64>],
) -> Vec<Vector3<f64>> {
    let vs = surface.vertices();
    let mut acc = vec![Vector3::zeros(); vs.len()];
    // Boundary directed edge (u -> v) follows the loop orientation; with the
    // triangle normal n the outward in-plane direction is d x n.
    let boundary: std::collections::BTreeSet<(usize, usize)> =
        surface.boundary_edges().into_iter().collect();
    for tri in surface.triangles() {
        let n_t = (vs[tri[1]] - vs[tri[0]]).cross(&(vs[tri[2]] - vs[tri[0]])).normalize();
        for &(u, v) in &[(tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])] {
            // A boundary edge keeps the direction of its unique triangle.
            if boundary.contains(&(u, v)) {
                let d = vs[v] - vs[u];
                let out = d.cross(&n_t);
                for w in [u, v] {
                    acc[w] += out; // |d x n| = |d|: length-weighted
                }
            }
        }
    }
    acc.iter()
        .enumerate()
        .map(|(v, a)| {
            if a.norm() == 0.0 {
                return Vector3::zeros();
            }
            let p = a - normals[v] * a.dot(&normals[v]);
            let n = p.norm();
            if n > 0.0 {
                p / n
            } else {
                Vector3::zeros()
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::builtin_by_name;
    use rand::Rng;
    use rand::SeedableRng;

    #[test]
    fn curvature_operator_flat_and_space_form() {
        let frame = [Vector3::x(), Vector3::y()];
        let p = Vector3::zeros();
        let flat = AmbientSpace::Euclidean3;
        assert_eq!(
            flat.evaluate_curvature_operator(&p, &frame, &Vector3::new(1.0, 2.0, 3.0)).unwrap(),
            Vector3::zeros()
        );
        let sf = AmbientSpace::SpaceForm { kappa: 1.0 };
        // Normal vector: R-trace doubles it.
        let rv = sf.evaluate_curvature_operator(&p, &frame, &Vector3::z()).unwrap();
        assert!((rv - Vector3::z() * 2.0).norm() < 1e-14);
        // In-frame vector: eigenvalue kappa.
        let rv = sf.evaluate_curvature_operator(&p, &frame, &Vector3::x()).unwrap();
        assert!((rv - Vector3::x()).norm() < 1e-14);
        // Non-orthonormal frame rejected.
        assert!(sf
            .evaluate_curvature_operator(&p, &[Vector3::x() * 2.0, Vector3::y()], &Vector3::z())
            .is_err());
    }

    #[test]
    fn curvature_operator_linear_in_v() {
        let sf = AmbientSpace::SpaceForm { kappa: -0.7 };
        let frame = [Vector3::x(), Vector3::y()];
        let p = Vector3::zeros();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let v1 = Vector3::from_fn(|_, _| rng.gen_range(-1.0..1.0));
            let v2 = Vector3::from_fn(|_, _| rng.gen_range(-1.0..1.0));
            let (a, b) = (rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            let lhs = sf
                .evaluate_curvature_operator(&p, &frame, &(v1 * a + v2 * b))
                .unwrap();
            let rhs = sf.evaluate_curvature_operator(&p, &frame, &v1).unwrap() * a
                + sf.evaluate_curvature_operator(&p, &frame, &v2).unwrap() * b;
            assert!((lhs - rhs).norm() < 1e-12);
        }
    }

    #[test]
    fn second_form_unit_ball_and_half_space() {
        let ball = AmbientSpace::UnitBall3;
        let p = Vector3::x();
        let x = Vector3::y();
        let y = Vector3::z();
        assert!((ball.boundary_second_form(&p, &x, &x).unwrap() - 1.0).abs() < 1e-14);
        assert!(ball.boundary_second_form(&p, &x, &y).unwrap().abs() < 1e-14);
        // Symmetry on random tangents.
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let a = Vector3::y() * rng.gen_range(-1.0..1.0) + Vector3::z() * rng.gen_range(-1.0..1.0);
            let b = Vector3::y() * rng.gen_range(-1.0..1.0) + Vector3::z() * rng.gen_range(-1.0..1.0);
            let ab = ball.boundary_second_form(&p, &a, &b).unwrap();
            let ba = ball.boundary_second_form(&p, &b, &a).unwrap();
            assert!((ab - ba).abs() < 1e-12);
        }
        let hs = AmbientSpace::LevelSet(LevelSetKind::HalfSpace);
        let q = Vector3::new(0.3, -0.2, 0.0);
        assert_eq!(hs.boundary_second_form(&q, &Vector3::x(), &Vector3::y()).unwrap(), 0.0);
        // Off-boundary and non-tangent inputs are rejected.
        assert!(ball.boundary_second_form(&(p * 1.1), &x, &x).is_err());
        assert!(ball.boundary_second_form(&p, &Vector3::x(), &x).is_err());
    }

    #[test]
    fn ambient_bounds_catalogue() {
        let probes: Vec<Vector3<f64>> = {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
            (0..50)
                .map(|_| Vector3::from_fn(|_, _| rng.gen_range(-1.0..1.0)))
                .collect()
        };
        assert_eq!(AmbientSpace::Euclidean3.ambient_bounds(&probes), (0.0, 0.0));
        assert_eq!(AmbientSpace::UnitBall3.ambient_bounds(&probes), (0.0, 0.0));
        let (rho, alpha) = AmbientSpace::SpaceForm { kappa: -1.0 }.ambient_bounds(&probes);
        assert_eq!((rho, alpha), (2.0, 0.0));
        // Concave boundary: shape operator -1/2 everywhere.
        let concave = AmbientSpace::LevelSet(LevelSetKind::BallComplement { radius: 2.0 });
        let (rho, alpha) = concave.ambient_bounds(&probes);
        assert_eq!(rho, 0.0);
        assert!((alpha + 0.5).abs() < 1e-12);
        // Probe-permutation invariance.
        let mut rev = probes.clone();
        rev.reverse();
        assert_eq!(concave.ambient_bounds(&rev), concave.ambient_bounds(&probes));
    }

    #[test]
    fn flat_disk_validates() {
        let s = builtin_by_name("flat_disk", 8).unwrap();
        let im = ImmersedSurface::new(s, AmbientSpace::UnitBall3).unwrap();
        let rep = im.validate_free_boundary(1e-10, 1e-10);
        assert!(rep.pass, "residuals {rep:?}");
    }

    #[test]
    fn catenoid_residuals_decrease_under_refinement() {
        let mut prev = f64::INFINITY;
        for res in [8u32, 16, 32] {
            let s = builtin_by_name("critical_catenoid", res).unwrap();
            let im = ImmersedSurface::new(s, AmbientSpace::UnitBall3).unwrap();
            let r = im.validate_free_boundary(0.05, 0.05);
            assert!(r.pass, "res {res} residuals {r:?}");
            assert!(r.mean_curvature_residual < prev);
            prev = r.mean_curvature_residual;
        }
        // Midpoint refinement of the coarse mesh also stays within tolerance.
        let fine = builtin_by_name("critical_catenoid", 8).unwrap().refine(1);
        let im = ImmersedSurface::new(fine, AmbientSpace::UnitBall3).unwrap();
        assert!(im.validate_free_boundary(0.05, 0.05).pass);
    }

    #[test]
    fn tilted_disk_fails_orthogonality() {
        // Dome the disk: z = 0.5 (1 - r^2). Boundary stays on the sphere but
        // the surface meets it at ~45 degrees.
        let s = builtin_by_name("flat_disk", 8).unwrap();
        let vs: Vec<Vector3<f64>> = s
            .vertices()
            .iter()
            .map(|p| Vector3::new(p.x, p.y, 0.5 * (1.0 - p.x * p.x - p.y * p.y)))
            .collect();
        let domed = TriangulatedSurface::new(vs, s.triangles().to_vec()).unwrap();
        let im = ImmersedSurface::new(domed, AmbientSpace::UnitBall3).unwrap();
        let rep = im.validate_free_boundary(0.05, 0.05);
        assert!(rep.orthogonality_residual > 0.1, "residuals {rep:?}");
        assert!(!rep.pass);
    }

    #[test]
    fn parse_ambient_specs() {
        assert_eq!(AmbientSpace::parse("euclidean_3").unwrap(), AmbientSpace::Euclidean3);
        assert_eq!(
            AmbientSpace::parse("space_form,kappa=-1").unwrap(),
            AmbientSpace::SpaceForm { kappa: -1.0 }
        );
        assert_eq!(
            AmbientSpace::parse("ball,r=2").unwrap(),
            AmbientSpace::LevelSet(LevelSetKind::Ball { radius: 2.0 })
        );
        assert!(AmbientSpace::parse("nope").is_err());
    }
}
