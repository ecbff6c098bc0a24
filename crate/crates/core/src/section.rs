//! Vector fields along an immersed surface (variation fields).

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Alignment of a section relative to the surface normal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SectionKind {
    /// Unconstrained ambient vectors.
    Full,
    /// Parallel to the surface normal at every vertex.
    Normal,
    /// Orthogonal to the surface normal at every vertex.
    Tangential,
}

#[derive(Debug, Error)]
pub enum SectionError {
    #[error("section length {got} does not match vertex count {want}")]
    Length { got: usize, want: usize },
    #[error("vertex {0}: vector violates the declared {1:?} alignment")]
    Alignment(usize, SectionKind),
    #[error("vertex {0}: vector not tangent to the ambient boundary")]
    Inadmissible(usize),
}

const ALIGN_TOL: f64 = 1e-10;

/// A per-vertex ambient vector field along the immersion.
#[derive(Debug, Clone, PartialEq)]
pub struct SectionField {
    values: Vec<Vector3<f64>>,
    kind: SectionKind,
    admissible: bool,
}

impl SectionField {
    /// Wraps raw values after checking the declared alignment against the
    /// per-vertex normals.
    pub fn new(
        values: Vec<Vector3<f64>>,
        kind: SectionKind,
        normals: &[Vector3<f64>],
    ) -> Result<Self, SectionError> {
        if values.len() != normals.len() {
            return Err(SectionError::Length {
                got: values.len(),
                want: normals.len(),
            });
        }
        let scale = values.iter().map(|v| v.norm()).fold(0.0, f64::max).max(1.0);
        for (i, (v, nu)) in values.iter().zip(normals).enumerate() {
            let tangential_part = (v - nu * v.dot(nu)).norm();
            let normal_part = v.dot(nu).abs();
            let bad = match kind {
                SectionKind::Full => false,
                SectionKind::Normal => tangential_part > ALIGN_TOL * scale,
                SectionKind::Tangential => normal_part > ALIGN_TOL * scale,
            };
            if bad {
                return Err(SectionError::Alignment(i, kind));
            }
        }
        Ok(Self {
            values,
            kind,
            admissible: false,
        })
    }

    /// Builds a normal section `phi * nu` from a scalar field.
    pub fn from_scalar(phi: &[f64], normals: &[Vector3<f64>]) -> Self {
        let values = phi
            .iter()
            .zip(normals)
            .map(|(&p, nu)| nu * p)
            .collect();
        Self {
            values,
            kind: SectionKind::Normal,
            admissible: false,
        }
    }

    pub fn zeros(len: usize, kind: SectionKind) -> Self {
        Self {
            values: vec![Vector3::zeros(); len],
            kind,
            admissible: true,
        }
    }

    pub fn values(&self) -> &[Vector3<f64>] {
        &self.values
    }

    pub fn kind(&self) -> SectionKind {
        self.kind
    }

    pub fn is_admissible(&self) -> bool {
        self.admissible
    }

    /// Verifies tangency to the ambient boundary at the listed boundary
    /// vertices; `boundary_normals[i]` is the outward ambient normal W at
    /// boundary vertex `boundary_ids[i]`. Marks the section admissible.
    pub fn check_admissible(
        mut self,
        boundary_ids: &[usize],
        boundary_normals: &[Vector3<f64>],
    ) -> Result<Self, SectionError> {
        let scale = self.values.iter().map(|v| v.norm()).fold(0.0, f64::max).max(1.0);
        for (&v, w) in boundary_ids.iter().zip(boundary_normals) {
            if self.values[v].dot(w).abs() > ALIGN_TOL * scale {
                return Err(SectionError::Inadmissible(v));
            }
        }
        self.admissible = true;
        Ok(self)
    }

    /// Marks the section admissible without a boundary check (no ambient
    /// boundary present).
    pub fn assume_admissible(mut self) -> Self {
        self.admissible = true;
        self
    }

    /// Flat vector of 3V scalar degrees of freedom, vertex-major.
    pub fn to_dof_vector(&self) -> nalgebra::DVector<f64> {
        let mut out = nalgebra::DVector::zeros(3 * self.values.len());
        for (i, v) in self.values.iter().enumerate() {
            out[3 * i] = v.x;
            out[3 * i + 1] = v.y;
            out[3 * i + 2] = v.z;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn z_normals(n: usize) -> Vec<Vector3<f64>> {
        vec![Vector3::z(); n]
    }

    #[test]
    fn normal_alignment_enforced() {
        let ns = z_normals(2);
        assert!(SectionField::new(vec![Vector3::z(), Vector3::z() * 2.0], SectionKind::Normal, &ns).is_ok());
        assert!(SectionField::new(vec![Vector3::x(), Vector3::z()], SectionKind::Normal, &ns).is_err());
        assert!(SectionField::new(vec![Vector3::x(), Vector3::y()], SectionKind::Tangential, &ns).is_ok());
        assert!(SectionField::new(vec![Vector3::z(), Vector3::y()], SectionKind::Tangential, &ns).is_err());
    }

    #[test]
    fn admissibility_check() {
        let ns = z_normals(3);
        let s = SectionField::new(
            vec![Vector3::z(), Vector3::z(), Vector3::z()],
            SectionKind::Normal,
            &ns,
        )
        .unwrap();
        // W = x at boundary vertex 2: e3 is tangent to the sphere there.
        let ok = s.clone().check_admissible(&[2], &[Vector3::x()]);
        assert!(ok.unwrap().is_admissible());
        let bad = s.check_admissible(&[2], &[Vector3::z()]);
        assert!(bad.is_err());
    }

    #[test]
    fn dof_vector_layout() {
        let ns = z_normals(2);
        let s = SectionField::new(
            vec![Vector3::new(1.0, 2.0, 3.0), Vector3::new(4.0, 5.0, 6.0)],
            SectionKind::Full,
            &ns,
        )
        .unwrap();
        let d = s.to_dof_vector();
        assert_eq!(d.as_slice(), &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
    }
}
