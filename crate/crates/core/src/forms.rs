//! Assembly of the discrete second-variation quadratic forms.
//!
//! All forms are P1 (piecewise-linear) on triangles. A form is stored as a
//! symmetric sparse matrix `A`, a positive definite mass matrix `M`, and an
//! orthonormal `constraint_basis` whose columns span the admissible vertex
//! degrees of freedom; the eigenproblem is solved on the reduced pencil.
//!
//! Degrees of freedom:
//! - energy / tangential forms: 3 scalars per vertex (ambient components);
//! - area form: 1 scalar per vertex (component along the vertex normal);
//! - scalar Robin form: 1 scalar per vertex.

use nalgebra::{DVector, Matrix3, Vector3};
use nalgebra_sparse::{CooMatrix, CscMatrix};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ambient::{AmbientSpace, ImmersedSurface};
use crate::section::{SectionField, SectionKind};

/// Default residual tolerances for the free-boundary precondition.
pub const TOL_MIN_DEFAULT: f64 = 0.05;
pub const TOL_ORTH_DEFAULT: f64 = 0.05;

#[derive(Debug, Error)]
pub enum FormsError {
    #[error(
        "surface failed free-boundary validation \
         (mean curvature residual {mc:.3e}, orthogonality residual {orth:.3e})"
    )]
    Validation { mc: f64, orth: f64 },
    #[error("section has wrong kind or is not admissible")]
    Admissibility,
    #[error("degree-of-freedom vector has length {got}, expected {want}")]
    Dimension { got: usize, want: usize },
}

/// Which quadratic form an assembly represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FormKind {
    /// Second variation of area on normal sections (scalar DOFs).
    Area,
    /// Second variation of energy on full sections.
    Energy,
    /// Energy restricted to tangential sections.
    EnergyTangential,
    /// Robin rough Laplacian: energy without the curvature term.
    RobinBundle,
    /// Scalar Robin form with a boundary coefficient.
    RobinScalar,
}

/// Boundary coefficient of the scalar Robin form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScalarRobinCoeff {
    /// Constant coefficient: Q(phi) = int |grad phi|^2 - c int_bdry phi^2.
    Constant(f64),
    /// The ambient second fundamental form evaluated on the surface normal.
    NormalSecondForm,
}

/// A discretized quadratic form with its mass matrix and admissibility
/// constraint basis.
#[derive(Debug, Clone)]
pub struct FormAssembly {
    a: CscMatrix<f64>,
    m: CscMatrix<f64>,
    constraint_basis: CscMatrix<f64>,
    form_kind: FormKind,
    mesh_scale: f64,
}

impl FormAssembly {
    pub fn stiffness(&self) -> &CscMatrix<f64> {
        &self.a
    }

    pub fn mass(&self) -> &CscMatrix<f64> {
        &self.m
    }

    pub fn constraint_basis(&self) -> &CscMatrix<f64> {
        &self.constraint_basis
    }

    pub fn form_kind(&self) -> FormKind {
        self.form_kind
    }

    /// Mean edge length of the underlying mesh.
    pub fn mesh_scale(&self) -> f64 {
        self.mesh_scale
    }

    pub fn n_dofs(&self) -> usize {
        self.a.nrows()
    }

    pub fn reduced_dim(&self) -> usize {
        self.constraint_basis.ncols()
    }

    /// Quadratic form value d^T A d.
    pub fn value(&self, dofs: &DVector<f64>) -> Result<f64, FormsError> {
        if dofs.len() != self.n_dofs() {
            return Err(FormsError::Dimension {
                got: dofs.len(),
                want: self.n_dofs(),
            });
        }
        Ok(dofs.dot(&(&self.a * dofs)))
    }

    /// Mass inner product d^T M d.
    pub fn mass_value(&self, dofs: &DVector<f64>) -> Result<f64, FormsError> {
        if dofs.len() != self.n_dofs() {
            return Err(FormsError::Dimension {
                got: dofs.len(),
                want: self.n_dofs(),
            });
        }
        Ok(dofs.dot(&(&self.m * dofs)))
    }

    /// Extracts the DOF vector of a section matching this form's layout.
    pub fn dofs_from_section(
        &self,
        immersed: &ImmersedSurface,
        section: &SectionField,
    ) -> Result<DVector<f64>, FormsError> {
        let v = immersed.surface().vertex_count();
        if section.values().len() != v {
            return Err(FormsError::Dimension {
                got: section.values().len(),
                want: v,
            });
        }
        match self.form_kind {
            FormKind::Area => {
                if section.kind() != SectionKind::Normal {
                    return Err(FormsError::Admissibility);
                }
                let mut d = DVector::zeros(v);
                for i in 0..v {
                    d[i] = section.values()[i].dot(&immersed.normals()[i]);
                }
                Ok(d)
            }
            FormKind::RobinScalar => Err(FormsError::Admissibility),
            _ => Ok(section.to_dof_vector()),
        }
    }
}

/// Checks the free-boundary precondition shared by all assemblies.
fn require_valid(immersed: &ImmersedSurface) -> Result<(), FormsError> {
    let rep = immersed.validate_free_boundary(TOL_MIN_DEFAULT, TOL_ORTH_DEFAULT);
    if rep.pass {
        Ok(())
    } else {
        Err(FormsError::Validation {
            mc: rep.mean_curvature_residual,
            orth: rep.orthogonality_residual,
        })
    }
}

/// Per-triangle P1 element data.
pub(crate) struct Element {
    pub verts: [usize; 3],
    pub area: f64,
    pub normal: Vector3<f64>,
    /// Tangential gradients of the barycentric basis functions.
    pub grads: [Vector3<f64>; 3],
    /// Orthonormal in-plane frame.
    pub frame: [Vector3<f64>; 2],
    pub centroid: Vector3<f64>,
}

pub(crate) fn elements(immersed: &ImmersedSurface) -> Vec<Element> {
    let vs = immersed.surface().vertices();
    immersed
        .surface()
        .triangles()
        .iter()
        .map(|&[i, j, k]| {
            let (p0, p1, p2) = (vs[i], vs[j], vs[k]);
            let cross = (p1 - p0).cross(&(p2 - p0));
            let area = 0.5 * cross.norm();
            let normal = cross / cross.norm();
            let grads = [
                normal.cross(&(p2 - p1)) / (2.0 * area),
                normal.cross(&(p0 - p2)) / (2.0 * area),
                normal.cross(&(p1 - p0)) / (2.0 * area),
            ];
            let e1 = (p1 - p0).normalize();
            let e2 = normal.cross(&e1);
            Element {
                verts: [i, j, k],
                area,
                normal,
                grads,
                frame: [e1, e2],
                centroid: (p0 + p1 + p2) / 3.0,
            }
        })
        .collect()
}

/// 2-point Gauss nodes on [0,1].
const GAUSS2: [f64; 2] = [0.211324865405187_1, 0.788675134594812_9];

struct Accumulator {
    coo: CooMatrix<f64>,
}

impl Accumulator {
    fn new(n: usize) -> Self {
        Self {
            coo: CooMatrix::new(n, n),
        }
    }

    fn add(&mut self, i: usize, j: usize, v: f64) {
        if v != 0.0 {
            self.coo.push(i, j, v);
        }
    }

    /// Symmetrized CSC matrix (A + A^T)/2.
    fn finish(self) -> CscMatrix<f64> {
        let a = CscMatrix::from(&self.coo);
        let at = a.transpose();
        let mut sym = &a + &at;
        for v in sym.values_mut() {
            *v *= 0.5;
        }
        sym
    }
}

/// The consistent P1 element mass coefficient m_ij = area/12 (1 + delta_ij).
fn elem_mass(area: f64, i: usize, j: usize) -> f64 {
    if i == j {
        area / 6.0
    } else {
        area / 12.0
    }
}

/// II as a 3x3 matrix applied to ambient vectors at a boundary point.
fn second_form_matrix(ambient: &AmbientSpace, p: &Vector3<f64>) -> Matrix3<f64> {
    let mut m = Matrix3::zeros();
    if !ambient.has_boundary() {
        return m;
    }
    for a in 0..3 {
        for b in 0..3 {
            let (ea, eb) = (Matrix3::identity().column(a).into_owned(), Matrix3::identity().column(b).into_owned());
            m[(a, b)] = ambient.second_form_apply(p, &ea, &eb);
        }
    }
    m
}

/// Adds the boundary term -int_bdry II(V,V) dL to a vector-valued assembly.
fn add_vector_boundary_term(immersed: &ImmersedSurface, acc: &mut Accumulator) {
    if !immersed.ambient().has_boundary() {
        return;
    }
    let vs = immersed.surface().vertices();
    for (u, v) in immersed.surface().boundary_edges() {
        let (pu, pv) = (vs[u], vs[v]);
        let len = (pv - pu).norm();
        for t in GAUSS2 {
            let w = 0.5 * len;
            let x = pu + (pv - pu) * t;
            let b = second_form_matrix(immersed.ambient(), &x);
            let lam = [(u, 1.0 - t), (v, t)];
            for (i, li) in lam {
                for (j, lj) in lam {
                    for a in 0..3 {
                        for c in 0..3 {
                            acc.add(3 * i + a, 3 * j + c, -w * li * lj * b[(a, c)]);
                        }
                    }
                }
            }
        }
    }
}

/// Shared assembly of the vector-valued Dirichlet + curvature + boundary
/// terms; `with_curvature` toggles the -<R V, V> contribution.
fn assemble_vector_form(
    immersed: &ImmersedSurface,
    with_curvature: bool,
) -> (CscMatrix<f64>, CscMatrix<f64>) {
    let v = immersed.surface().vertex_count();
    let mut acc_a = Accumulator::new(3 * v);
    let mut acc_m = Accumulator::new(3 * v);
    for el in elements(immersed) {
        // Curvature bilinear form in ambient coordinates, constant per
        // element (frame is the element tangent plane).
        let rmat = if with_curvature {
            let mut r = Matrix3::zeros();
            for a in 0..3 {
                let ea = Matrix3::identity().column(a).into_owned();
                let rv = immersed
                    .ambient()
                    .curvature_apply(&el.centroid, &el.frame, &ea);
                for b in 0..3 {
                    r[(b, a)] = rv[b];
                }
            }
            r
        } else {
            Matrix3::zeros()
        };
        for i in 0..3 {
            for j in 0..3 {
                let (gi, gj) = (el.verts[i], el.verts[j]);
                let stiff = el.area * el.grads[i].dot(&el.grads[j]);
                let mass = elem_mass(el.area, i, j);
                for a in 0..3 {
                    acc_a.add(3 * gi + a, 3 * gj + a, stiff);
                    acc_m.add(3 * gi + a, 3 * gj + a, mass);
                    if with_curvature {
                        for b in 0..3 {
                            acc_a.add(3 * gi + a, 3 * gj + b, -mass * rmat[(b, a)]);
                        }
                    }
                }
            }
        }
    }
    add_vector_boundary_term(immersed, &mut acc_a);
    (acc_a.finish(), acc_m.finish())
}

/// Deterministic orthonormal pair spanning the plane orthogonal to `w`.
fn orthonormal_complement(w: &Vector3<f64>) -> (Vector3<f64>, Vector3<f64>) {
    let a = if w.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
    let t1 = (a - w * a.dot(w)).normalize();
    let t2 = w.cross(&t1);
    (t1, t2)
}

/// Constraint basis for full sections: tangent to the ambient boundary at
/// boundary vertices, free elsewhere.
fn admissible_basis_full(immersed: &ImmersedSurface) -> CscMatrix<f64> {
    let v = immersed.surface().vertex_count();
    let boundary = immersed.surface().boundary_vertex_set();
    let has_bdry = immersed.ambient().has_boundary();
    let mut builder = BasisBuilder::new(3 * v);
    for vtx in 0..v {
        if has_bdry && boundary.contains(&vtx) {
            if let Some(w) = immersed.ambient_normal_at(vtx) {
                let (t1, t2) = orthonormal_complement(&w);
                builder.push_column(vtx, t1);
                builder.push_column(vtx, t2);
                continue;
            }
        }
        builder.push_column(vtx, Vector3::x());
        builder.push_column(vtx, Vector3::y());
        builder.push_column(vtx, Vector3::z());
    }
    builder.finish()
}

/// Collects per-vertex direction columns into a sparse orthonormal basis.
struct BasisBuilder {
    nrows: usize,
    ncols: usize,
    triplets: Vec<(usize, usize, f64)>,
}

impl BasisBuilder {
    fn new(nrows: usize) -> Self {
        Self {
            nrows,
            ncols: 0,
            triplets: Vec::new(),
        }
    }

    fn push_column(&mut self, vtx: usize, dir: Vector3<f64>) {
        for a in 0..3 {
            if dir[a] != 0.0 {
                self.triplets.push((3 * vtx + a, self.ncols, dir[a]));
            }
        }
        self.ncols += 1;
    }

    fn finish(self) -> CscMatrix<f64> {
        let mut coo = CooMatrix::new(self.nrows, self.ncols);
        for (r, c, v) in self.triplets {
            coo.push(r, c, v);
        }
        CscMatrix::from(&coo)
    }
}

/// Constraint basis for tangential admissible sections: orthogonal to the
/// surface normal everywhere, and tangent to the ambient boundary on it.
fn admissible_basis_tangential(immersed: &ImmersedSurface) -> CscMatrix<f64> {
    let v = immersed.surface().vertex_count();
    let boundary = immersed.surface().boundary_vertex_set();
    let has_bdry = immersed.ambient().has_boundary();
    let mut builder = BasisBuilder::new(3 * v);
    for vtx in 0..v {
        let nu = immersed.normals()[vtx];
        if has_bdry && boundary.contains(&vtx) {
            if let Some(w) = immersed.ambient_normal_at(vtx) {
                // Orthogonal to both the surface normal and the ambient
                // boundary normal: one direction at a valid free boundary.
                let u = nu.cross(&w);
                if u.norm() > 1e-8 {
                    builder.push_column(vtx, u.normalize());
                }
                continue;
            }
        }
        let (t1, t2) = orthonormal_complement(&nu);
        builder.push_column(vtx, t1);
        builder.push_column(vtx, t2);
    }
    builder.finish()
}

/// Assembles the second variation of energy on full admissible sections.
pub fn assemble_energy_form(immersed: &ImmersedSurface) -> Result<FormAssembly, FormsError> {
    require_valid(immersed)?;
    let (a, m) = assemble_vector_form(immersed, true);
    Ok(FormAssembly {
        a,
        m,
        constraint_basis: admissible_basis_full(immersed),
        form_kind: FormKind::Energy,
        mesh_scale: immersed.surface().mean_edge_length(),
    })
}

/// Assembles the Robin rough-Laplacian form: energy without the curvature
/// term. Its eigenvalue counts give the comparison quantity beta.
pub fn assemble_robin_bundle_form(immersed: &ImmersedSurface) -> Result<FormAssembly, FormsError> {
    require_valid(immersed)?;
    let (a, m) = assemble_vector_form(immersed, false);
    Ok(FormAssembly {
        a,
        m,
        constraint_basis: admissible_basis_full(immersed),
        form_kind: FormKind::RobinBundle,
        mesh_scale: immersed.surface().mean_edge_length(),
    })
}

/// Assembles energy restricted to tangential admissible sections.
pub fn assemble_tangential_form(immersed: &ImmersedSurface) -> Result<FormAssembly, FormsError> {
    require_valid(immersed)?;
    let (a, m) = assemble_vector_form(immersed, true);
    Ok(FormAssembly {
        a,
        m,
        constraint_basis: admissible_basis_tangential(immersed),
        form_kind: FormKind::EnergyTangential,
        mesh_scale: immersed.surface().mean_edge_length(),
    })
}

/// Assembles the second variation of area on normal sections. Degrees of
/// freedom are the components along the vertex normals; admissibility is
/// automatic at a valid free boundary (the normal is tangent to the ambient
/// boundary), so the constraint basis is the identity.
pub fn assemble_area_form(immersed: &ImmersedSurface) -> Result<FormAssembly, FormsError> {
    require_valid(immersed)?;
    let v = immersed.surface().vertex_count();
    let nus = immersed.normals();
    let mut acc_a = Accumulator::new(v);
    let mut acc_m = Accumulator::new(v);
    for el in elements(immersed) {
        // Per-element curvature bilinear form applied to the vertex normals.
        let rnu: [Vector3<f64>; 3] = std::array::from_fn(|i| {
            immersed
                .ambient()
                .curvature_apply(&el.centroid, &el.frame, &nus[el.verts[i]])
        });
        // d_c xi = sum_i (grads_i . frame_c) nu_i phi_i for the two frame
        // directions c; split into parts along and orthogonal to the element
        // normal.
        for i in 0..3 {
            for j in 0..3 {
                let (gi, gj) = (el.verts[i], el.verts[j]);
                let (ni, nj) = (nus[gi], nus[gj]);
                let mut stiff = 0.0;
                for c in 0..2 {
                    let (di, dj) = (el.grads[i].dot(&el.frame[c]), el.grads[j].dot(&el.frame[c]));
                    let normal_i = ni.dot(&el.normal);
                    let normal_j = nj.dot(&el.normal);
                    let tang_i = ni - el.normal * normal_i;
                    let tang_j = nj - el.normal * normal_j;
                    // |grad^perp|^2 - |(grad)^T|^2 for this pair.
                    stiff += di * dj * (normal_i * normal_j - tang_i.dot(&tang_j));
                }
                let mass = elem_mass(el.area, i, j);
                acc_a.add(gi, gj, el.area * stiff - mass * rnu[i].dot(&nj));
                acc_m.add(gi, gj, mass * ni.dot(&nj));
            }
        }
    }
    // Boundary term -int II(xi, xi) dL with xi = phi nu.
    if immersed.ambient().has_boundary() {
        let vs = immersed.surface().vertices();
        for (u, w) in immersed.surface().boundary_edges() {
            let (pu, pw) = (vs[u], vs[w]);
            let len = (pw - pu).norm();
            for t in GAUSS2 {
                let x = pu + (pw - pu) * t;
                let b = second_form_matrix(immersed.ambient(), &x);
                let lam = [(u, 1.0 - t), (w, t)];
                for (i, li) in lam {
                    for (j, lj) in lam {
                        let val = (b * nus[i]).dot(&nus[j]);
                        acc_a.add(i, j, -0.5 * len * li * lj * val);
                    }
                }
            }
        }
    }
    Ok(FormAssembly {
        a: acc_a.finish(),
        m: acc_m.finish(),
        constraint_basis: CscMatrix::identity(v),
        form_kind: FormKind::Area,
        mesh_scale: immersed.surface().mean_edge_length(),
    })
}

/// Assembles the scalar Robin form Q(phi) = int |grad phi|^2 dA
/// - int_bdry c(x) phi^2 dL with the chosen boundary coefficient.
pub fn assemble_scalar_robin_form(
    immersed: &ImmersedSurface,
    coeff: ScalarRobinCoeff,
) -> Result<FormAssembly, FormsError> {
    let v = immersed.surface().vertex_count();
    let nus = immersed.normals();
    let mut acc_a = Accumulator::new(v);
    let mut acc_m = Accumulator::new(v);
    for el in elements(immersed) {
        for i in 0..3 {
            for j in 0..3 {
                let (gi, gj) = (el.verts[i], el.verts[j]);
                acc_a.add(gi, gj, el.area * el.grads[i].dot(&el.grads[j]));
                acc_m.add(gi, gj, elem_mass(el.area, i, j));
            }
        }
    }
    let vs = immersed.surface().vertices();
    for (u, w) in immersed.surface().boundary_edges() {
        let (pu, pw) = (vs[u], vs[w]);
        let len = (pw - pu).norm();
        for t in GAUSS2 {
            let x = pu + (pw - pu) * t;
            let lam = [(u, 1.0 - t), (w, t)];
            for (i, li) in lam {
                for (j, lj) in lam {
                    let c = match coeff {
                        ScalarRobinCoeff::Constant(c) => c,
                        ScalarRobinCoeff::NormalSecondForm => {
                            (second_form_matrix(immersed.ambient(), &x) * nus[i]).dot(&nus[j])
                        }
                    };
                    acc_a.add(i, j, -0.5 * len * li * lj * c);
                }
            }
        }
    }
    Ok(FormAssembly {
        a: acc_a.finish(),
        m: acc_m.finish(),
        constraint_basis: CscMatrix::identity(v),
        form_kind: FormKind::RobinScalar,
        mesh_scale: immersed.surface().mean_edge_length(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ambient::AmbientSpace;
    use crate::mesh::builtin_by_name;
    use rand::Rng;
    use rand::SeedableRng;

    fn disk(level: u32) -> ImmersedSurface {
        let s = builtin_by_name("flat_disk", 2).unwrap().refine(level);
        ImmersedSurface::new(s, AmbientSpace::UnitBall3).unwrap()
    }

    fn matrix_is_symmetric(m: &CscMatrix<f64>) -> bool {
        let d = nalgebra::DMatrix::from(m);
        (&d - d.transpose()).norm() == 0.0
    }

    #[test]
    fn energy_constant_vertical_section_matches_boundary_integral() {
        for level in [2u32, 3] {
            let im = disk(level);
            let form = assemble_energy_form(&im).unwrap();
            assert!(matrix_is_symmetric(form.stiffness()));
            let v = im.surface().vertex_count();
            let mut d = DVector::zeros(3 * v);
            for i in 0..v {
                d[3 * i + 2] = 1.0;
            }
            let val = form.value(&d).unwrap();
            let h = form.mesh_scale();
            // |grad V| = 0, R = 0, II(e3, e3) = 1 on the circle: the value
            // converges to -int_bdry 1 dL = -2 pi at O(h^2).
            assert!(
                (val + 2.0 * std::f64::consts::PI).abs() < 3.0 * h * h,
                "level {level}: {val}"
            );
        }
    }

    #[test]
    fn area_constant_section_matches_boundary_integral() {
        let im = disk(3);
        let form = assemble_area_form(&im).unwrap();
        let v = im.surface().vertex_count();
        let d = DVector::from_element(v, 1.0);
        let val = form.value(&d).unwrap();
        assert!((val + 2.0 * std::f64::consts::PI).abs() < 1e-2);
    }

    #[test]
    fn area_linear_mode_is_null() {
        // xi = x e3: int |grad x|^2 = area(disk) = pi equals int_bdry x^2 = pi.
        let im = disk(3);
        let form = assemble_area_form(&im).unwrap();
        let d = DVector::from_iterator(
            im.surface().vertex_count(),
            im.surface().vertices().iter().map(|p| p.x),
        );
        let val = form.value(&d).unwrap();
        let h = form.mesh_scale();
        assert!(val.abs() < 3.0 * h * h, "value {val}");
    }

    #[test]
    fn zero_and_scaling() {
        let im = disk(2);
        let form = assemble_area_form(&im).unwrap();
        let v = im.surface().vertex_count();
        assert_eq!(form.value(&DVector::zeros(v)).unwrap(), 0.0);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let d = DVector::from_fn(v, |_, _| rng.gen_range(-1.0..1.0));
        let f1 = form.value(&d).unwrap();
        let f3 = form.value(&(&d * 3.0)).unwrap();
        assert!((f3 - 9.0 * f1).abs() <= 1e-12 * f1.abs().max(1.0));
    }

    #[test]
    fn area_form_agrees_with_scalar_robin_on_flat_disk() {
        // On the flat disk the vertex normals are all e3, so the area form
        // must coincide entrywise with the scalar Robin form with the
        // normal-normal II coefficient.
        let im = disk(2);
        let area = assemble_area_form(&im).unwrap();
        let robin = assemble_scalar_robin_form(&im, ScalarRobinCoeff::NormalSecondForm).unwrap();
        let da = nalgebra::DMatrix::from(area.stiffness());
        let dr = nalgebra::DMatrix::from(robin.stiffness());
        assert!((da - dr).amax() < 1e-10);
    }

    #[test]
    fn tangential_agrees_with_energy_on_tangential_input() {
        let im = disk(2);
        let energy = assemble_energy_form(&im).unwrap();
        let tangential = assemble_tangential_form(&im).unwrap();
        // Rotation field (-y, x, 0) is tangential and admissible.
        let v = im.surface().vertex_count();
        let mut d = DVector::zeros(3 * v);
        for (i, p) in im.surface().vertices().iter().enumerate() {
            d[3 * i] = -p.y;
            d[3 * i + 1] = p.x;
        }
        let e = energy.value(&d).unwrap();
        let t = tangential.value(&d).unwrap();
        assert!((e - t).abs() < 1e-10, "{e} vs {t}");
    }

    #[test]
    fn mass_matrices_positive_definite() {
        let im = disk(2);
        for form in [
            assemble_area_form(&im).unwrap(),
            assemble_energy_form(&im).unwrap(),
        ] {
            let m = nalgebra::DMatrix::from(form.mass());
            let eig = m.symmetric_eigenvalues();
            assert!(eig.min() > 0.0);
        }
    }

    #[test]
    fn constraint_bases_orthonormal() {
        let im = disk(2);
        for form in [
            assemble_energy_form(&im).unwrap(),
            assemble_tangential_form(&im).unwrap(),
        ] {
            let c = nalgebra::DMatrix::from(form.constraint_basis());
            let gram = c.transpose() * &c;
            let eye = nalgebra::DMatrix::identity(gram.nrows(), gram.ncols());
            assert!((gram - eye).amax() < 1e-12);
        }
    }

    #[test]
    fn matrix_value_matches_direct_quadrature() {
        // Independent evaluation of the energy form by direct per-element
        // quadrature on a random admissible section.
        let im = disk(2);
        let form = assemble_energy_form(&im).unwrap();
        let v = im.surface().vertex_count();
        let boundary = im.surface().boundary_vertex_set();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let mut field: Vec<Vector3<f64>> = (0..v)
            .map(|_| Vector3::from_fn(|_, _| rng.gen_range(-1.0..1.0)))
            .collect();
        for &b in &boundary {
            let w = im.ambient_normal_at(b).unwrap();
            let proj = field[b].dot(&w);
            field[b] -= w * proj;
        }
        let mut direct = 0.0;
        for el in elements(&im) {
            for c in 0..2 {
                let mut dv = Vector3::zeros();
                for i in 0..3 {
                    dv += field[el.verts[i]] * el.grads[i].dot(&el.frame[c]);
                }
                direct += el.area * dv.norm_squared();
            }
        }
        let vs = im.surface().vertices();
        for (u, w) in im.surface().boundary_edges() {
            let len = (vs[w] - vs[u]).norm();
            for t in GAUSS2 {
                let x = vs[u] + (vs[w] - vs[u]) * t;
                let val = field[u] * (1.0 - t) + field[w] * t;
                let b = second_form_matrix(im.ambient(), &x);
                direct -= 0.5 * len * (b * val).dot(&val);
            }
        }
        let mut d = DVector::zeros(3 * v);
        for i in 0..v {
            for a in 0..3 {
                d[3 * i + a] = field[i][a];
            }
        }
        let via_matrix = form.value(&d).unwrap();
        assert!(
            (via_matrix - direct).abs() < 1e-12 * direct.abs().max(1.0),
            "{via_matrix} vs {direct}"
        );
    }

    #[test]
    fn domed_disk_rejected() {
        let s = builtin_by_name("flat_disk", 8).unwrap();
        let vs: Vec<Vector3<f64>> = s
            .vertices()
            .iter()
            .map(|p| Vector3::new(p.x, p.y, 0.5 * (1.0 - p.x * p.x - p.y * p.y)))
            .collect();
        let domed = crate::mesh::TriangulatedSurface::new(vs, s.triangles().to_vec()).unwrap();
        let im = ImmersedSurface::new(domed, AmbientSpace::UnitBall3).unwrap();
        assert!(matches!(
            assemble_energy_form(&im),
            Err(FormsError::Validation { .. })
        ));
    }
}
