//! The disk reparametrization problem and the energy/area comparison
//! identity.
//!
//! For a free-boundary minimal surface, the second variation of energy at
//! `V = X + xi` (tangential `X` vanishing on the boundary, normal `xi`)
//! exceeds the second variation of area at `xi` by the defect
//! `8 ∫ |D^{1,0}X^{0,1} + (∇^{1,0}ξ)^⊤|² dA`.  On a disk the defect can be
//! driven to zero by solving a ∂̄-type boundary value problem for `X`; this
//! module discretizes that problem on the flat-disk chart and evaluates all
//! three quantities of the identity on arbitrary meshes.

use std::collections::BTreeSet;

use nalgebra::{Complex, DVector, Vector3};
use nalgebra_sparse::factorization::CscCholesky;
use nalgebra_sparse::{CooMatrix, CscMatrix};
use thiserror::Error;

use crate::ambient::ImmersedSurface;
use crate::forms::{
    assemble_area_form, assemble_energy_form, elements, Element, FormsError,
};
use crate::section::{SectionError, SectionField, SectionKind};

#[derive(Debug, Error)]
pub enum DbarError {
    #[error(
        "reparametrization requires a disk (genus 0, one boundary loop), \
         got genus {genus} with {boundary_count} boundary loops"
    )]
    Topology { genus: u32, boundary_count: u32 },
    #[error(
        "surface is not a flat z = 0 chart (max plane offset {max_offset:e}); \
         only the flat-disk parametrization is supported"
    )]
    Chart { max_offset: f64 },
    #[error("least-squares system is singular: {0}")]
    Solve(String),
    #[error("inadmissible input field: {0}")]
    Admissibility(String),
    #[error(transparent)]
    Section(#[from] SectionError),
    #[error(transparent)]
    Form(#[from] FormsError),
    #[error("field has {got} vertex values, mesh has {want} vertices")]
    Dimension { got: usize, want: usize },
}

/// Result of the ∂̄ boundary value problem.
#[derive(Debug, Clone)]
pub struct DbarSolution {
    /// Tangential field `X`, zero at every boundary vertex.
    pub field: SectionField,
    /// L² norm of the element-wise misfit `D^{1,0}X^{0,1} + (∇^{1,0}ξ)^⊤`.
    pub residual: f64,
}

/// The three quantities of the comparison identity and its discrete defect.
#[derive(Debug, Clone, Copy)]
pub struct ComparisonDefect {
    /// Second variation of energy at `X + xi`.
    pub e_val: f64,
    /// Second variation of area at `xi`.
    pub a_val: f64,
    /// `8 ∫ |D^{1,0}X^{0,1} + (∇^{1,0}ξ)^⊤|² dA`.
    pub defect_integral: f64,
    /// `e_val - a_val - defect_integral`; zero in the continuum.
    pub identity_residual: f64,
}

/// Complex ∂_z coefficients of the P1 basis gradients on one flat element.
fn dz_coefficients(el: &Element) -> [Complex<f64>; 3] {
    // On the z = 0 chart the coordinate frame is (e1, e2) and
    // ∂_z = (∂_x - i ∂_y) / 2.
    [0, 1, 2].map(|v| Complex::new(el.grads[v].x, -el.grads[v].y) * 0.5)
}

/// Decomposes the tangential part of `∇_{∂_z}ξ` on one flat-chart element
/// into coefficients along `u_z` and `u_z̄`: returns `(c1, c2)` with
/// `(∇_{∂_z}ξ)^⊤ = c1 u_z + c2 u_z̄`.
fn xi_chart_coefficients(
    el: &Element,
    xi: &[Vector3<f64>],
) -> (Complex<f64>, Complex<f64>) {
    let mut gx = Vector3::zeros();
    let mut gy = Vector3::zeros();
    for (v, &id) in el.verts.iter().enumerate() {
        gx += xi[id] * el.grads[v].x;
        gy += xi[id] * el.grads[v].y;
    }
    // Tangential projection on the z = 0 chart keeps the in-plane
    // components.  With w = ((∇_x ξ)^⊤ - i (∇_y ξ)^⊤) / 2, the bilinear
    // pairings c2 = 2 w·u_z and c1 = 2 w·u_z̄ give the frame coefficients.
    let wx = Complex::new(gx.x, -gy.x) * 0.5;
    let wy = Complex::new(gx.y, -gy.y) * 0.5;
    let i = Complex::new(0.0, 1.0);
    let c2 = wx - i * wy;
    let c1 = wx + i * wy;
    (c1, c2)
}

/// Checks the mesh lies in the z = 0 plane (the identity conformal chart).
fn require_flat_chart(immersed: &ImmersedSurface) -> Result<(), DbarError> {
    let scale = immersed.surface().mean_edge_length().max(1e-300);
    let max_offset = immersed
        .surface()
        .vertices()
        .iter()
        .map(|p| p.z.abs())
        .fold(0.0, f64::max);
    if max_offset > 1e-9 * scale {
        return Err(DbarError::Chart { max_offset });
    }
    Ok(())
}

/// Least-squares solve of `∂_z ψ = -rhs` per element for a P1 complex
/// function ψ with exact zeros at boundary vertices.  Returns the vertex
/// values of ψ and the L² misfit norm.
fn solve_dz_least_squares(
    elems: &[Element],
    boundary: &BTreeSet<usize>,
    n_verts: usize,
    rhs: &[Complex<f64>],
) -> Result<(Vec<Complex<f64>>, f64), DbarError> {
    // Interior vertices carry the complex unknowns.
    let mut index = vec![usize::MAX; n_verts];
    let mut n_int = 0;
    for v in 0..n_verts {
        if !boundary.contains(&v) {
            index[v] = n_int;
            n_int += 1;
        }
    }
    let mut psi = vec![Complex::new(0.0, 0.0); n_verts];
    if n_int > 0 {
        // Hermitian normal equations H ψ = b with
        // H_{uv} = Σ_T area conj(d_u) d_v, written as the real symmetric
        // system [[P, -Q], [Q, P]] on (Re ψ, Im ψ).
        let mut coo = CooMatrix::new(2 * n_int, 2 * n_int);
        let mut b = DVector::zeros(2 * n_int);
        for (el, &r) in elems.iter().zip(rhs) {
            let d = dz_coefficients(el);
            for u in 0..3 {
                let iu = index[el.verts[u]];
                if iu == usize::MAX {
                    continue;
                }
                let load = -el.area * d[u].conj() * r;
                b[iu] += load.re;
                b[iu + n_int] += load.im;
                for v in 0..3 {
                    let iv = index[el.verts[v]];
                    if iv == usize::MAX {
                        continue;
                    }
                    let h = el.area * d[u].conj() * d[v];
                    coo.push(iu, iv, h.re);
                    coo.push(iu + n_int, iv + n_int, h.re);
                    coo.push(iu + n_int, iv, h.im);
                    coo.push(iu, iv + n_int, -h.im);
                }
            }
        }
        let h = CscMatrix::from(&coo);
        let chol = CscCholesky::factor(&h)
            .map_err(|e| DbarError::Solve(format!("{e:?}")))?;
        let sol = chol.solve(&b);
        for v in 0..n_verts {
            if index[v] != usize::MAX {
                psi[v] = Complex::new(sol[(index[v], 0)], sol[(index[v] + n_int, 0)]);
            }
        }
    }
    let mut misfit_sq = 0.0;
    for (el, &r) in elems.iter().zip(rhs) {
        let d = dz_coefficients(el);
        let mut dz_psi = r;
        for v in 0..3 {
            dz_psi += d[v] * psi[el.verts[v]];
        }
        misfit_sq += el.area * dz_psi.norm_sqr();
    }
    Ok((psi, misfit_sq.sqrt()))
}

/// Solves the reparametrization problem `D^{1,0}X^{0,1} = -(∇^{1,0}ξ)^⊤`
/// with `X = 0` on the boundary, in least squares over the flat-disk chart.
pub fn solve_dbar_reparametrization(
    immersed: &ImmersedSurface,
    xi: &SectionField,
) -> Result<DbarSolution, DbarError> {
    let surface = immersed.surface();
    let topo = surface
        .topology()
        .map_err(|_| DbarError::Solve("inconsistent mesh topology".into()))?;
    if topo.genus != 0 || topo.boundary_count != 1 {
        return Err(DbarError::Topology {
            genus: topo.genus,
            boundary_count: topo.boundary_count,
        });
    }
    require_flat_chart(immersed)?;
    let v = surface.vertex_count();
    if xi.values().len() != v {
        return Err(DbarError::Dimension {
            got: xi.values().len(),
            want: v,
        });
    }
    if xi.kind() != SectionKind::Normal {
        return Err(DbarError::Admissibility(
            "reparametrization input must be a normal field".into(),
        ));
    }

    let elems = elements(immersed);
    // The right-hand side is the u_z̄ component of (∇_{∂_z}ξ)^⊤; the u_z
    // component is an obstruction the ∂̄ operator cannot reach and enters
    // only the reported residual through the defect integral.
    let rhs: Vec<Complex<f64>> = elems
        .iter()
        .map(|el| xi_chart_coefficients(el, xi.values()).1)
        .collect();
    let boundary = surface.boundary_vertex_set();
    let (psi, residual) = solve_dz_least_squares(&elems, &boundary, v, &rhs)?;

    // ψ = a - i b for the in-plane field X = (a, b, 0).
    let values: Vec<Vector3<f64>> = psi
        .iter()
        .map(|p| Vector3::new(p.re, -p.im, 0.0))
        .collect();
    let field = SectionField::new(values, SectionKind::Tangential, immersed.normals())?
        .assume_admissible();
    Ok(DbarSolution { field, residual })
}

/// Evaluates both second-variation forms and the discrete defect integral
/// of the comparison identity at `(xi, x)`.
pub fn comparison_defect(
    immersed: &ImmersedSurface,
    xi: &SectionField,
    x: &SectionField,
) -> Result<ComparisonDefect, DbarError> {
    let surface = immersed.surface();
    let v = surface.vertex_count();
    for (len, name) in [(xi.values().len(), "xi"), (x.values().len(), "x")] {
        if len != v {
            return Err(DbarError::Dimension { got: len, want: v });
        }
        let _ = name;
    }
    if xi.kind() != SectionKind::Normal {
        return Err(DbarError::Admissibility(
            "xi must be a normal field".into(),
        ));
    }
    let x_scale = x.values().iter().map(|w| w.norm()).fold(0.0, f64::max);
    let tol = 1e-12 * x_scale.max(1.0);
    for &b in &surface.boundary_vertex_set() {
        if x.values()[b].norm() > tol {
            return Err(DbarError::Admissibility(format!(
                "x must vanish at boundary vertices; |x| = {:e} at vertex {b}",
                x.values()[b].norm()
            )));
        }
    }

    // δ²ℰ at the combined field, as a full ambient vector field.
    let energy = assemble_energy_form(immersed)?;
    let mut combined = DVector::zeros(3 * v);
    for i in 0..v {
        let w = xi.values()[i] + x.values()[i];
        combined[3 * i] = w.x;
        combined[3 * i + 1] = w.y;
        combined[3 * i + 2] = w.z;
    }
    let e_val = energy.value(&combined)?;

    // δ²𝒜 at the scalar normal component of xi.
    let area = assemble_area_form(immersed)?;
    let scalar = DVector::from_iterator(
        v,
        (0..v).map(|i| xi.values()[i].dot(&immersed.normals()[i])),
    );
    let a_val = area.value(&scalar)?;

    let elems = elements(immersed);
    let defect_integral = if x_scale == 0.0 {
        // With X = 0 the defect integrand is 2 |(∇ξ)^⊤|², which is
        // chart-free and valid on any surface.
        let mut total = 0.0;
        for el in &elems {
            let mut sq = 0.0;
            for t in &el.frame {
                let mut g = Vector3::zeros();
                for (u, &id) in el.verts.iter().enumerate() {
                    g += xi.values()[id] * el.grads[u].dot(t);
                }
                let tangential = g - el.normal * g.dot(&el.normal);
                sq += tangential.norm_squared();
            }
            total += 2.0 * el.area * sq;
        }
        total
    } else {
        // A nonzero X needs the complex structure; only the flat-disk
        // identity chart is supported.
        require_flat_chart(immersed)?;
        let mut psi = vec![Complex::new(0.0, 0.0); v];
        for i in 0..v {
            let w = x.values()[i];
            if w.z.abs() > tol {
                return Err(DbarError::Admissibility(format!(
                    "x must be tangential to the chart plane at vertex {i}"
                )));
            }
            psi[i] = Complex::new(w.x, -w.y);
        }
        // ζ = c1 u_z + (c2 + ∂_z ψ) u_z̄ per element; |u_z|² = |u_z̄|² = ½,
        // so the integrand 8 |ζ|² is 4 (|c1|² + |c2 + ∂_z ψ|²).
        let mut total = 0.0;
        for el in &elems {
            let (c1, c2) = xi_chart_coefficients(el, xi.values());
            let d = dz_coefficients(el);
            let mut dz_psi = c2;
            for u in 0..3 {
                dz_psi += d[u] * psi[el.verts[u]];
            }
            total += 4.0 * el.area * (c1.norm_sqr() + dz_psi.norm_sqr());
        }
        total
    };

    Ok(ComparisonDefect {
        e_val,
        a_val,
        defect_integral,
        identity_residual: e_val - a_val - defect_integral,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ambient::AmbientSpace;
    use crate::mesh::builtin_by_name;

    fn disk(resolution: u32) -> ImmersedSurface {
        let surface = builtin_by_name("flat_disk", resolution).unwrap();
        ImmersedSurface::new(surface, AmbientSpace::UnitBall3).unwrap()
    }

    fn catenoid(resolution: u32) -> ImmersedSurface {
        let surface = builtin_by_name("critical_catenoid", resolution).unwrap();
        ImmersedSurface::new(surface, AmbientSpace::UnitBall3).unwrap()
    }

    fn normal_scalar(im: &ImmersedSurface, f: impl Fn(&Vector3<f64>) -> f64) -> SectionField {
        let phi: Vec<f64> = im.surface().vertices().iter().map(|p| f(p)).collect();
        SectionField::from_scalar(&phi, im.normals()).assume_admissible()
    }

    #[test]
    fn zero_fields_give_zero_defect() {
        let im = disk(8);
        let v = im.surface().vertex_count();
        let xi = SectionField::zeros(v, SectionKind::Normal);
        let x = SectionField::zeros(v, SectionKind::Tangential);
        let d = comparison_defect(&im, &xi, &x).unwrap();
        assert_eq!(d.e_val, 0.0);
        assert_eq!(d.a_val, 0.0);
        assert_eq!(d.defect_integral, 0.0);
        assert_eq!(d.identity_residual, 0.0);
    }

    #[test]
    fn constant_normal_field_has_trivial_reparametrization() {
        let im = disk(8);
        let xi = normal_scalar(&im, |_| 1.0);
        let sol = solve_dbar_reparametrization(&im, &xi).unwrap();
        assert!(sol.residual <= 1e-10, "residual {}", sol.residual);
        let max = sol
            .field
            .values()
            .iter()
            .map(|w| w.norm())
            .fold(0.0, f64::max);
        assert!(max <= 1e-10, "max |X| = {max}");
    }

    #[test]
    fn quadratic_field_residual_small_and_stable_under_refinement() {
        let mut prev = f64::INFINITY;
        for resolution in [6, 12] {
            let im = disk(resolution);
            let xi = normal_scalar(&im, |p| p.x * p.x - p.y * p.y);
            let sol = solve_dbar_reparametrization(&im, &xi).unwrap();
            assert!(sol.residual <= 1e-3, "residual {}", sol.residual);
            assert!(sol.residual <= prev + 1e-14);
            prev = sol.residual;
        }
    }

    #[test]
    fn least_squares_recovers_manufactured_solution() {
        let im = disk(10);
        let surface = im.surface();
        let v = surface.vertex_count();
        // Target ψ* vanishes exactly on the unit circle.
        let target: Vec<Complex<f64>> = surface
            .vertices()
            .iter()
            .map(|p| {
                let z = Complex::new(p.x, p.y);
                (Complex::new(1.0, 0.0) - z * z.conj()) * (z + Complex::new(0.3, 0.1))
            })
            .collect();
        let elems = elements(&im);
        let rhs: Vec<Complex<f64>> = elems
            .iter()
            .map(|el| {
                let d = dz_coefficients(el);
                let mut dz = Complex::new(0.0, 0.0);
                for u in 0..3 {
                    dz += d[u] * target[el.verts[u]];
                }
                -dz
            })
            .collect();
        let boundary = surface.boundary_vertex_set();
        let (psi, residual) = solve_dz_least_squares(&elems, &boundary, v, &rhs).unwrap();
        assert!(residual <= 1e-10, "residual {residual}");
        let err = psi
            .iter()
            .zip(&target)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(err <= 1e-8, "max recovery error {err}");
    }

    #[test]
    fn comparison_identity_on_flat_disk() {
        let im = disk(12);
        let v = im.surface().vertex_count();
        let xi = normal_scalar(&im, |p| p.x);
        let zero = SectionField::zeros(v, SectionKind::Tangential);
        let d0 = comparison_defect(&im, &xi, &zero).unwrap();
        let scale = d0.e_val.abs().max(d0.a_val.abs()).max(1.0);
        assert!(
            d0.identity_residual.abs() <= 1e-2 * scale,
            "identity residual {} at scale {}",
            d0.identity_residual,
            scale
        );
        assert!(d0.e_val >= d0.a_val - 1e-10 * scale);

        let sol = solve_dbar_reparametrization(&im, &xi).unwrap();
        let d1 = comparison_defect(&im, &xi, &sol.field).unwrap();
        assert!(d1.defect_integral <= 1e-2 * scale);
        assert!((d1.e_val - d1.a_val).abs() <= 1e-2 * scale);
        assert!(d1.identity_residual.abs() <= 1e-2 * scale);
    }

    #[test]
    fn catenoid_gap_equals_defect_integral() {
        let im = catenoid(12);
        let v = im.surface().vertex_count();
        let xi = normal_scalar(&im, |p| 1.0 + 0.3 * p.z);
        let zero = SectionField::zeros(v, SectionKind::Tangential);
        let d = comparison_defect(&im, &xi, &zero).unwrap();
        // The surface bends, so the tangential gradient of a normal field
        // is genuinely nonzero.
        assert!(d.defect_integral > 1e-2, "defect {}", d.defect_integral);
        let scale = d.e_val.abs().max(d.a_val.abs()).max(1.0);
        assert!(
            d.identity_residual.abs() <= 1e-10 * scale,
            "identity residual {}",
            d.identity_residual
        );
    }

    #[test]
    fn rejects_non_disk_topology() {
        let im = catenoid(8);
        let v = im.surface().vertex_count();
        let xi = SectionField::zeros(v, SectionKind::Normal);
        let err = solve_dbar_reparametrization(&im, &xi).unwrap_err();
        assert!(matches!(err, DbarError::Topology { .. }));
    }

    #[test]
    fn rejects_field_not_vanishing_on_boundary() {
        let im = disk(6);
        let v = im.surface().vertex_count();
        let xi = SectionField::zeros(v, SectionKind::Normal);
        let mut vals = vec![Vector3::zeros(); v];
        let b = *im.surface().boundary_vertex_set().iter().next().unwrap();
        let p = im.surface().vertices()[b];
        vals[b] = Vector3::new(-p.y, p.x, 0.0);
        let x = SectionField::new(vals, SectionKind::Tangential, im.normals())
            .unwrap()
            .assume_admissible();
        let err = comparison_defect(&im, &xi, &x).unwrap_err();
        assert!(matches!(err, DbarError::Admissibility(_)));
    }

    #[test]
    fn flat_chart_required_for_nonzero_reparametrization() {
        let im = catenoid(8);
        let v = im.surface().vertex_count();
        let xi = normal_scalar(&im, |_| 1.0);
        let mut vals = vec![Vector3::zeros(); v];
        let boundary = im.surface().boundary_vertex_set();
        for (i, p) in im.surface().vertices().iter().enumerate() {
            if !boundary.contains(&i) {
                let t = Vector3::new(-p.y, p.x, 0.0);
                let nu = im.normals()[i];
                vals[i] = t - nu * t.dot(&nu);
            }
        }
        let x = SectionField::new(vals, SectionKind::Tangential, im.normals())
            .unwrap()
            .assume_admissible();
        let err = comparison_defect(&im, &xi, &x).unwrap_err();
        assert!(matches!(err, DbarError::Chart { .. }));
    }

    #[test]
    fn planar_annulus_is_rejected_by_topology_check() {
        let surface = builtin_by_name("flat_annulus", 8).unwrap();
        let im = ImmersedSurface::new(surface, AmbientSpace::Euclidean3).unwrap();
        let v = im.surface().vertex_count();
        let xi = SectionField::zeros(v, SectionKind::Normal);
        let err = solve_dbar_reparametrization(&im, &xi).unwrap_err();
        assert!(matches!(err, DbarError::Topology { .. }));
    }
}
