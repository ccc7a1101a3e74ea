//! Geometry on spheres and products of spheres.
//!
//! States live in `ℝ^{3n} ≃ (ℝ³)^n`; the sphere product `(S²)^n` is the
//! subset with unit components. Everything here is chart-free: the only
//! primitives are the ray projection `ρ` (per-component normalization), the
//! radius-geometric-mean midpoint `Γ`, rotations, and geodesic utilities.

use nalgebra::{Matrix3, Quaternion, UnitQuaternion, Vector3};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Ambient 3-vector.
pub type Vec3 = Vector3<f64>;

/// Tolerance on `| |v| - 1 |` for unit vectors and on rotation-matrix checks.
pub const UNIT_TOL: f64 = 1e-12;

/// Below this norm a vector counts as zero for normalization purposes.
pub const ZERO_TOL: f64 = 1e-300;

/// `|w + W| < ANTIPODAL_TOL * (|w| + |W|)` marks a pair as antipodal.
pub const ANTIPODAL_TOL: f64 = 1e-12;

/// A unit vector in `ℝ³`, i.e. a point of `S²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitVec3(Vec3);

impl UnitVec3 {
    /// Normalize an arbitrary vector onto the sphere.
    pub fn new(v: Vec3) -> Result<Self> {
        Ok(Self(normalize_indexed(&v, 0)?))
    }

    /// Accept a vector already claimed to be unit; validates but does not rescale.
    pub fn from_unit(v: Vec3) -> Result<Self> {
        let deviation = (v.norm() - 1.0).abs();
        if deviation > UNIT_TOL {
            return Err(Error::UnitNormViolation {
                sphere: 0,
                deviation,
            });
        }
        Ok(Self(v))
    }

    pub fn as_vec3(&self) -> &Vec3 {
        &self.0
    }

    pub fn into_inner(self) -> Vec3 {
        self.0
    }
}

impl std::ops::Deref for UnitVec3 {
    type Target = Vec3;
    fn deref(&self) -> &Vec3 {
        &self.0
    }
}

/// A point of `(S²)^n`: a nonempty sequence of unit vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinState {
    spheres: Vec<UnitVec3>,
}

impl SpinState {
    pub fn new(spheres: Vec<UnitVec3>) -> Result<Self> {
        if spheres.is_empty() {
            return Err(Error::InvalidParameter(
                "spin state needs at least one sphere".into(),
            ));
        }
        Ok(Self { spheres })
    }

    /// Build from raw vectors, renormalizing each component.
    pub fn from_vectors(vectors: &[Vec3]) -> Result<Self> {
        let spheres = vectors
            .iter()
            .enumerate()
            .map(|(i, v)| normalize_indexed(v, i).map(UnitVec3))
            .collect::<Result<Vec<_>>>()?;
        Self::new(spheres)
    }

    /// Build from `[x, y, z]` triples, renormalizing each.
    pub fn from_components(components: &[[f64; 3]]) -> Result<Self> {
        let vectors: Vec<Vec3> = components.iter().map(|c| Vec3::from(*c)).collect();
        Self::from_vectors(&vectors)
    }

    /// Accept vectors that must already be unit; validates but does not rescale.
    ///
    /// This is the constructor used on integrator output, where renormalizing
    /// would mask a method error.
    pub fn from_unit_vectors(vectors: &[Vec3]) -> Result<Self> {
        let spheres = vectors
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let deviation = (v.norm() - 1.0).abs();
                if deviation > UNIT_TOL {
                    Err(Error::UnitNormViolation {
                        sphere: i,
                        deviation,
                    })
                } else {
                    Ok(UnitVec3(*v))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(spheres)
    }

    pub fn len(&self) -> usize {
        self.spheres.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spheres.is_empty()
    }

    pub fn sphere(&self, i: usize) -> &UnitVec3 {
        &self.spheres[i]
    }

    pub fn iter(&self) -> impl Iterator<Item = &UnitVec3> {
        self.spheres.iter()
    }

    /// Forget the unit constraint and view the state as ambient.
    pub fn to_ambient(&self) -> AmbientState {
        AmbientState::new(self.spheres.iter().map(|u| u.0).collect())
    }
}

/// A point of `ℝ^{3n}`, one 3-vector per sphere factor.
#[derive(Debug, Clone, PartialEq)]
pub struct AmbientState {
    components: Vec<Vec3>,
}

impl AmbientState {
    pub fn new(components: Vec<Vec3>) -> Self {
        Self { components }
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            components: vec![Vec3::zeros(); n],
        }
    }

    pub fn from_components(components: &[[f64; 3]]) -> Self {
        Self::new(components.iter().map(|c| Vec3::from(*c)).collect())
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn component(&self, i: usize) -> &Vec3 {
        &self.components[i]
    }

    pub fn component_mut(&mut self, i: usize) -> &mut Vec3 {
        &mut self.components[i]
    }

    pub fn components(&self) -> &[Vec3] {
        &self.components
    }

    pub fn iter(&self) -> impl Iterator<Item = &Vec3> {
        self.components.iter()
    }

    /// Max-norm over all 3n scalar entries.
    pub fn max_norm(&self) -> f64 {
        self.components
            .iter()
            .flat_map(|c| c.iter())
            .fold(0.0, |acc, x| acc.max(x.abs()))
    }

    /// Euclidean norm in `ℝ^{3n}`.
    pub fn norm(&self) -> f64 {
        self.components
            .iter()
            .map(|c| c.norm_squared())
            .sum::<f64>()
            .sqrt()
    }

    pub fn add(&self, other: &AmbientState) -> AmbientState {
        debug_assert_eq!(self.len(), other.len());
        AmbientState::new(
            self.components
                .iter()
                .zip(&other.components)
                .map(|(a, b)| a + b)
                .collect(),
        )
    }

    pub fn sub(&self, other: &AmbientState) -> AmbientState {
        debug_assert_eq!(self.len(), other.len());
        AmbientState::new(
            self.components
                .iter()
                .zip(&other.components)
                .map(|(a, b)| a - b)
                .collect(),
        )
    }

    pub fn scale(&self, factor: f64) -> AmbientState {
        AmbientState::new(self.components.iter().map(|c| c * factor).collect())
    }

    /// `self + factor * other`, the workhorse of the implicit solver.
    pub fn add_scaled(&self, factor: f64, other: &AmbientState) -> AmbientState {
        debug_assert_eq!(self.len(), other.len());
        AmbientState::new(
            self.components
                .iter()
                .zip(&other.components)
                .map(|(a, b)| a + factor * b)
                .collect(),
        )
    }

    pub fn dot(&self, other: &AmbientState) -> f64 {
        debug_assert_eq!(self.len(), other.len());
        self.components
            .iter()
            .zip(&other.components)
            .map(|(a, b)| a.dot(b))
            .sum()
    }

    /// Flatten to a `&[f64]`-style vector `(x1,y1,z1,x2,...)`.
    pub fn flatten(&self) -> Vec<f64> {
        self.components
            .iter()
            .flat_map(|c| [c.x, c.y, c.z])
            .collect()
    }

    pub fn from_flat(flat: &[f64]) -> Self {
        debug_assert_eq!(flat.len() % 3, 0);
        Self::new(
            flat.chunks_exact(3)
                .map(|c| Vec3::new(c[0], c[1], c[2]))
                .collect(),
        )
    }
}

/// An element of `(SO(3))^n`, acting componentwise on sphere products.
#[derive(Debug, Clone)]
pub struct RotationTuple {
    matrices: Vec<Matrix3<f64>>,
}

impl RotationTuple {
    /// Validate each matrix: `gᵀg = I` and `det g = 1` to `UNIT_TOL`.
    pub fn from_matrices(matrices: Vec<Matrix3<f64>>) -> Result<Self> {
        for (index, g) in matrices.iter().enumerate() {
            let ortho_defect = (g.transpose() * g - Matrix3::identity()).abs().max();
            let det_defect = (g.determinant() - 1.0).abs();
            let defect = ortho_defect.max(det_defect);
            if defect > UNIT_TOL {
                return Err(Error::NotARotation { index, defect });
            }
        }
        Ok(Self { matrices })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            matrices: vec![Matrix3::identity(); n],
        }
    }

    /// Uniformly random rotations, one per sphere (quaternion sampling).
    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let matrices = (0..n)
            .map(|_| {
                let q = Quaternion::new(
                    rng.sample(StandardNormal),
                    rng.sample(StandardNormal),
                    rng.sample(StandardNormal),
                    rng.sample(StandardNormal),
                );
                UnitQuaternion::from_quaternion(q).to_rotation_matrix().into_inner()
            })
            .collect();
        Self { matrices }
    }

    pub fn len(&self) -> usize {
        self.matrices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matrices.is_empty()
    }

    pub fn matrix(&self, i: usize) -> &Matrix3<f64> {
        &self.matrices[i]
    }

    /// Componentwise inverse (transpose).
    pub fn inverse(&self) -> Self {
        Self {
            matrices: self.matrices.iter().map(|g| g.transpose()).collect(),
        }
    }

    /// Componentwise product `self * other`.
    pub fn compose(&self, other: &RotationTuple) -> Result<Self> {
        if self.len() != other.len() {
            return Err(Error::DimensionMismatch {
                left: self.len(),
                right: other.len(),
            });
        }
        Ok(Self {
            matrices: self
                .matrices
                .iter()
                .zip(&other.matrices)
                .map(|(a, b)| a * b)
                .collect(),
        })
    }
}

fn normalize_indexed(v: &Vec3, sphere: usize) -> Result<Vec3> {
    let norm = v.norm();
    if norm < ZERO_TOL {
        return Err(Error::ZeroVector { sphere });
    }
    Ok(v / norm)
}

/// `v / |v|`.
pub fn normalize(v: &Vec3) -> Result<UnitVec3> {
    UnitVec3::new(*v)
}

/// The ray projection `ρ(w) = (w₁/|w₁|, …, w_n/|w_n|)`.
pub fn project_rays(w: &AmbientState) -> Result<SpinState> {
    let spheres = w
        .iter()
        .enumerate()
        .map(|(i, v)| normalize_indexed(v, i).map(UnitVec3))
        .collect::<Result<Vec<_>>>()?;
    SpinState::new(spheres)
}

/// The scaled midpoint `Γ(w, W)_i = √(|w_i||W_i|) (w_i + W_i)/|w_i + W_i|`.
///
/// Each output component has length `√(|w_i||W_i|)`, so `Γ(w, w) = w` and
/// `Γ` restricted to unit states is the projected midpoint `ρ(w + W)`.
pub fn gamma_midpoint(w: &AmbientState, big_w: &AmbientState) -> Result<AmbientState> {
    if w.len() != big_w.len() {
        return Err(Error::DimensionMismatch {
            left: w.len(),
            right: big_w.len(),
        });
    }
    let mut out = Vec::with_capacity(w.len());
    for (i, (wi, bi)) in w.iter().zip(big_w.iter()).enumerate() {
        let nw = wi.norm();
        let nb = bi.norm();
        if nw < ZERO_TOL || nb < ZERO_TOL {
            return Err(Error::ZeroVector { sphere: i });
        }
        let sum = wi + bi;
        let ns = sum.norm();
        if ns < ANTIPODAL_TOL * (nw + nb) {
            return Err(Error::AntipodalPair { sphere: i, norm: ns });
        }
        out.push(sum * ((nw * nb).sqrt() / ns));
    }
    Ok(AmbientState::new(out))
}

/// Apply a rotation tuple to a sphere-product state: component `i` maps to `g_i w_i`.
pub fn rotate(g: &RotationTuple, w: &SpinState) -> Result<SpinState> {
    if g.len() != w.len() {
        return Err(Error::DimensionMismatch {
            left: g.len(),
            right: w.len(),
        });
    }
    let spheres = w
        .iter()
        .zip(g.matrices.iter())
        .map(|(u, m)| UnitVec3(m * u.0))
        .collect();
    SpinState::new(spheres)
}

/// Apply a rotation tuple to an ambient state.
pub fn rotate_ambient(g: &RotationTuple, w: &AmbientState) -> Result<AmbientState> {
    if g.len() != w.len() {
        return Err(Error::DimensionMismatch {
            left: g.len(),
            right: w.len(),
        });
    }
    Ok(AmbientState::new(
        w.iter().zip(g.matrices.iter()).map(|(v, m)| m * v).collect(),
    ))
}

/// Geodesic midpoint `m(a, b) = (a + b)/|a + b|` of two sphere points.
pub fn geodesic_midpoint(a: &UnitVec3, b: &UnitVec3) -> Result<UnitVec3> {
    let sum = a.0 + b.0;
    let ns = sum.norm();
    if ns < ANTIPODAL_TOL * 2.0 {
        return Err(Error::AntipodalPair { sphere: 0, norm: ns });
    }
    Ok(UnitVec3(sum / ns))
}

/// Geodesic (great-circle) distance in radians, in `[0, π]`.
pub fn geodesic_distance(a: &UnitVec3, b: &UnitVec3) -> f64 {
    a.0.cross(&b.0).norm().atan2(a.0.dot(&b.0))
}
