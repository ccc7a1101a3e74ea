//! Midpoint integration of Nambu systems `ẇ = ∇C × ∇H` on level sets of a
//! homogeneous quadratic Casimir `C(w) = ½ wᵀ C w`.
//!
//! The construction mirrors the spherical case: replace the Hamiltonian by
//! its Casimir-ray rescaling `w ↦ H(w / √(C(w)/c))`, which is constant on
//! the rays of the rescaling and agrees with `H` on the leaf `C(w) = c`,
//! then apply the classical midpoint method. `C` is a quadratic invariant of
//! the resulting map, and `H` is preserved too whenever it is itself a
//! homogeneous quadratic.

use std::sync::Arc;

use nalgebra::Matrix3;

use crate::error::{Error, Result};
use crate::geometry::{AmbientState, Vec3, UNIT_TOL};
use crate::integrators::{classical_midpoint_step, StepConfig};

/// `C(w)/c` at or below this counts as leaving the admissible component.
pub const LEVEL_RATIO_TOL: f64 = 1e-14;

/// Tolerance on the precondition `C(w) = c` for a step's starting point.
pub const ON_LEAF_TOL: f64 = 1e-10;

type ScalarFn = dyn Fn(&Vec3) -> f64 + Send + Sync;
type GradFn = dyn Fn(&Vec3) -> Vec3 + Send + Sync;

/// A Nambu system: quadratic Casimir, smooth Hamiltonian with analytic
/// gradient, and the leaf level `c ≠ 0`.
#[derive(Clone)]
pub struct NambuSystem {
    c_matrix: Matrix3<f64>,
    level: f64,
    hamiltonian: Arc<ScalarFn>,
    gradient: Arc<GradFn>,
}

impl std::fmt::Debug for NambuSystem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("NambuSystem")
            .field("c_matrix", &self.c_matrix)
            .field("level", &self.level)
            .finish()
    }
}

impl NambuSystem {
    /// `C(w) = ½ wᵀ C w` with symmetric `C`; `level` is the leaf value `c ≠ 0`.
    pub fn new<H, G>(c_matrix: Matrix3<f64>, level: f64, hamiltonian: H, gradient: G) -> Result<Self>
    where
        H: Fn(&Vec3) -> f64 + Send + Sync + 'static,
        G: Fn(&Vec3) -> Vec3 + Send + Sync + 'static,
    {
        let asym = (c_matrix - c_matrix.transpose()).abs().max();
        if asym > UNIT_TOL {
            return Err(Error::InvalidParameter(format!(
                "Casimir matrix must be symmetric (asymmetry {asym:.3e})"
            )));
        }
        if !level.is_finite() || level == 0.0 {
            return Err(Error::InvalidParameter(format!(
                "Casimir level must be finite and nonzero, got {level}"
            )));
        }
        Ok(Self {
            c_matrix,
            level,
            hamiltonian: Arc::new(hamiltonian),
            gradient: Arc::new(gradient),
        })
    }

    /// Homogeneous quadratic Hamiltonian `H(w) = ½ wᵀ A w`.
    pub fn quadratic(c_matrix: Matrix3<f64>, h_matrix: Matrix3<f64>, level: f64) -> Result<Self> {
        let asym = (h_matrix - h_matrix.transpose()).abs().max();
        if asym > UNIT_TOL {
            return Err(Error::InvalidParameter(format!(
                "quadratic Hamiltonian matrix must be symmetric (asymmetry {asym:.3e})"
            )));
        }
        Self::new(
            c_matrix,
            level,
            move |w| 0.5 * w.dot(&(h_matrix * w)),
            move |w| h_matrix * w,
        )
    }

    /// The Lagrange system: `C = ½(w₁² - w₂²)`, `H = ½(w₁² - w₃²)`, so that
    /// `ẇ = (w₂ w₃, w₁ w₃, w₁ w₂)`.
    pub fn lagrange(level: f64) -> Result<Self> {
        Self::quadratic(
            Matrix3::from_diagonal(&Vec3::new(1.0, -1.0, 0.0)),
            Matrix3::from_diagonal(&Vec3::new(1.0, 0.0, -1.0)),
            level,
        )
    }

    pub fn c_matrix(&self) -> &Matrix3<f64> {
        &self.c_matrix
    }

    pub fn level(&self) -> f64 {
        self.level
    }

    /// `C(w) = ½ wᵀ C w`.
    pub fn casimir(&self, w: &Vec3) -> f64 {
        0.5 * w.dot(&(self.c_matrix * w))
    }

    /// `∇C(w) = C w`.
    pub fn casimir_gradient(&self, w: &Vec3) -> Vec3 {
        self.c_matrix * w
    }

    pub fn hamiltonian(&self, w: &Vec3) -> f64 {
        (self.hamiltonian)(w)
    }

    pub fn hamiltonian_gradient(&self, w: &Vec3) -> Vec3 {
        (self.gradient)(w)
    }

    /// The Nambu field `∇C(w) × ∇H(w)`.
    pub fn field(&self, w: &Vec3) -> Vec3 {
        self.casimir_gradient(w).cross(&self.hamiltonian_gradient(w))
    }

    fn level_ratio(&self, w: &Vec3) -> Result<f64> {
        let ratio = self.casimir(w) / self.level;
        if ratio <= LEVEL_RATIO_TOL {
            return Err(Error::InvalidLevel { ratio });
        }
        Ok(ratio)
    }

    /// The rescaled Hamiltonian `H̃(w) = H(w / √(C(w)/c))`.
    ///
    /// Constant on the rays of the Casimir rescaling and equal to `H` on the
    /// leaf `C(w) = c`.
    pub fn scaled_hamiltonian(&self, w: &Vec3) -> Result<f64> {
        let s = self.level_ratio(w)?.sqrt();
        Ok((self.hamiltonian)(&(w / s)))
    }

    /// Analytic chain-rule gradient of the rescaled Hamiltonian:
    /// `∇H̃(w) = ∇H(u)/s - (C w) (w · ∇H(u)) / (2 s³ c)` with `u = w/s`.
    pub fn scaled_hamiltonian_gradient(&self, w: &Vec3) -> Result<Vec3> {
        let s = self.level_ratio(w)?.sqrt();
        let u = w / s;
        let grad_u = (self.gradient)(&u);
        Ok(grad_u / s - self.casimir_gradient(w) * (w.dot(&grad_u) / (2.0 * s.powi(3) * self.level)))
    }

    /// The effective field `∇C × ∇H̃` that the midpoint method integrates.
    ///
    /// Constant on Casimir rays, tangent to every leaf of `C`, and equal to
    /// the Nambu field on the leaf `C(w) = c`.
    pub fn scaled_field(&self, w: &Vec3) -> Result<Vec3> {
        Ok(self
            .casimir_gradient(w)
            .cross(&self.scaled_hamiltonian_gradient(w)?))
    }
}

/// One classical-midpoint step of the rescaled field, staying on the leaf
/// `C(w) = c`.
///
/// Requires the starting point on the leaf to `1e-10`. `C` is preserved to
/// solver accuracy per step; so is `H` when it is homogeneous quadratic.
pub fn nambu_midpoint_step(sys: &NambuSystem, w: &Vec3, cfg: &StepConfig) -> Result<Vec3> {
    let deviation = (sys.casimir(w) - sys.level).abs();
    if deviation > ON_LEAF_TOL * sys.level.abs().max(1.0) {
        return Err(Error::InvalidLevel {
            ratio: sys.casimir(w) / sys.level,
        });
    }
    let state = AmbientState::new(vec![*w]);
    let next = classical_midpoint_step(
        |u, _| Ok(AmbientState::new(vec![sys.scaled_field(u.component(0))?])),
        &state,
        0.0,
        cfg,
    )?;
    Ok(*next.component(0))
}

/// The five 3-dimensional Lie algebra families with homogeneous quadratic
/// Casimirs, as symmetric matrices in the convention `C(w) = ½ wᵀ C w`.
pub fn casimir_catalog() -> Vec<(&'static str, Matrix3<f64>)> {
    vec![
        // w1²  (Heisenberg algebra)
        ("A3,1", Matrix3::from_diagonal(&Vec3::new(2.0, 0.0, 0.0))),
        // w1 w2  (e(1,1))
        (
            "A3,4",
            Matrix3::new(0.0, 1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0),
        ),
        // w1² + w2²  (e(2))
        ("A3,6", Matrix3::from_diagonal(&Vec3::new(2.0, 2.0, 0.0))),
        // w2² + w1 w3  (su(1,1), sl(2))
        (
            "A3,8",
            Matrix3::new(0.0, 0.0, 1.0, 0.0, 2.0, 0.0, 1.0, 0.0, 0.0),
        ),
        // w1² + w2² + w3²  (su(2), so(3))
        ("A3,9", Matrix3::from_diagonal(&Vec3::new(2.0, 2.0, 2.0))),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::SpinState;
    use crate::integrators::spherical_midpoint_step;
    use crate::systems::{free_rigid_body, InertiaDiag};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::UnitSphere;

    fn cfg(h: f64) -> StepConfig {
        StepConfig::new(h).unwrap().with_solver_tol(1e-14).unwrap()
    }

    #[test]
    fn lagrange_field_matches_hand_values() {
        let sys = NambuSystem::lagrange(1.5).unwrap();
        let w = Vec3::new(1.0, 1.0, 1.0);
        assert_relative_eq!(sys.field(&w), Vec3::new(1.0, 1.0, 1.0), epsilon = 1e-15);
        // general point: (w2 w3, w1 w3, w1 w2)
        let w = Vec3::new(2.0, -0.5, 3.0);
        assert_relative_eq!(
            sys.field(&w),
            Vec3::new(-0.5 * 3.0, 2.0 * 3.0, 2.0 * -0.5),
            epsilon = 1e-15
        );
    }

    #[test]
    fn parallel_gradients_give_zero_field() {
        // H = C makes ∇C ∥ ∇H everywhere.
        let c = Matrix3::from_diagonal(&Vec3::new(1.0, -1.0, 0.0));
        let sys = NambuSystem::quadratic(c, c, 2.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..20 {
            let w = Vec3::from(rng.sample::<[f64; 3], _>(UnitSphere)) * rng.gen_range(0.5..3.0);
            assert!(sys.field(&w).norm() <= 1e-14);
        }
    }

    #[test]
    fn spin_casimir_reduces_to_single_sphere_field() {
        // C = ½|w|² gives ∇C = w, so the Nambu field is w × ∇H.
        let body = free_rigid_body(InertiaDiag::new(1.0, 2.0, 4.0).unwrap());
        let sys = NambuSystem::new(
            Matrix3::identity(),
            0.5,
            |w: &Vec3| 0.5 * (w.x * w.x + w.y * w.y / 2.0 + w.z * w.z / 4.0),
            |w: &Vec3| Vec3::new(w.x, w.y / 2.0, w.z / 4.0),
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        for _ in 0..20 {
            let w = Vec3::from(rng.sample::<[f64; 3], _>(UnitSphere));
            let spin_field = body
                .vector_field(&AmbientState::new(vec![w]), 0.0)
                .unwrap();
            assert!((sys.field(&w) - spin_field.component(0)).norm() <= 1e-15);
        }
    }

    #[test]
    fn scaled_hamiltonian_identity_and_homogeneity() {
        let sys = NambuSystem::lagrange(1.5).unwrap();
        // on the leaf: H̃ = H
        let w = Vec3::new(2.0, 1.0, 1.0); // C = ½(4-1) = 3/2
        assert_relative_eq!(
            sys.scaled_hamiltonian(&w).unwrap(),
            sys.hamiltonian(&w),
            epsilon = 1e-14
        );
        // doubling the argument cancels in the rescale
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let mut checked = 0;
        while checked < 20 {
            let w = Vec3::from(rng.sample::<[f64; 3], _>(UnitSphere)) * rng.gen_range(0.5..3.0);
            if sys.level_ratio(&w).is_err() {
                continue;
            }
            assert_relative_eq!(
                sys.scaled_hamiltonian(&(2.0 * w)).unwrap(),
                sys.scaled_hamiltonian(&w).unwrap(),
                epsilon = 1e-12
            );
            // composition oracle evaluated directly
            let s = (sys.casimir(&w) / sys.level()).sqrt();
            let u = w / s;
            let direct = 0.5 * (u.x * u.x - u.z * u.z);
            assert_relative_eq!(sys.scaled_hamiltonian(&w).unwrap(), direct, epsilon = 1e-13);
            checked += 1;
        }
    }

    #[test]
    fn scaled_hamiltonian_rejects_wrong_component() {
        let sys = NambuSystem::lagrange(1.5).unwrap();
        // C(0,1,0) = -1/2, so C/c < 0
        assert!(matches!(
            sys.scaled_hamiltonian(&Vec3::new(0.0, 1.0, 0.0)),
            Err(Error::InvalidLevel { .. })
        ));
    }

    #[test]
    fn scaled_gradient_matches_finite_differences() {
        let sys = NambuSystem::lagrange(1.5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        let delta = 1e-6;
        let mut checked = 0;
        while checked < 50 {
            let w = Vec3::from(rng.sample::<[f64; 3], _>(UnitSphere)) * rng.gen_range(0.8..3.0);
            if sys.level_ratio(&w).map(|r| r < 0.1).unwrap_or(true) {
                continue; // keep away from the C = 0 cone where FD is ill-posed
            }
            let grad = sys.scaled_hamiltonian_gradient(&w).unwrap();
            for axis in 0..3 {
                let mut plus = w;
                plus[axis] += delta;
                let mut minus = w;
                minus[axis] -= delta;
                let fd = (sys.scaled_hamiltonian(&plus).unwrap()
                    - sys.scaled_hamiltonian(&minus).unwrap())
                    / (2.0 * delta);
                assert!(
                    (fd - grad[axis]).abs() / (1.0 + grad.norm()) <= 1e-6,
                    "axis {axis}: fd {fd} vs analytic {}",
                    grad[axis]
                );
            }
            checked += 1;
        }
    }

    #[test]
    fn scaled_field_is_constant_on_casimir_rays() {
        let sys = NambuSystem::lagrange(1.5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(25);
        let mut checked = 0;
        while checked < 30 {
            let w = Vec3::from(rng.sample::<[f64; 3], _>(UnitSphere)) * rng.gen_range(0.5..3.0);
            if sys.level_ratio(&w).is_err() {
                continue;
            }
            let lam = rng.gen_range(0.2..5.0);
            let a = sys.scaled_field(&w).unwrap();
            let b = sys.scaled_field(&(lam * w)).unwrap();
            assert!((a - b).norm() <= 1e-12 * (1.0 + a.norm()));
            checked += 1;
        }
    }

    #[test]
    fn step_fixes_equilibria_and_rejects_off_leaf_points() {
        let sys = NambuSystem::lagrange(2.0).unwrap();
        let w = Vec3::new(2.0, 0.0, 0.0); // C = 2, scaled field vanishes here
        let next = nambu_midpoint_step(&sys, &w, &cfg(0.05)).unwrap();
        assert!((next - w).norm() <= 1e-14);

        assert!(matches!(
            nambu_midpoint_step(&sys, &Vec3::new(2.0, 1.0, 1.0), &cfg(0.05)),
            Err(Error::InvalidLevel { .. })
        ));
    }

    #[test]
    fn lagrange_step_preserves_both_quadratics_and_matches_oracle() {
        let sys = NambuSystem::lagrange(1.5).unwrap();
        let w0 = Vec3::new(2.0, 1.0, 1.0);
        let h = 0.05;
        let next = nambu_midpoint_step(&sys, &w0, &cfg(h)).unwrap();

        assert!((sys.casimir(&next) - 1.5).abs() <= 1e-12);
        assert!((sys.hamiltonian(&next) - sys.hamiltonian(&w0)).abs() <= 1e-12);

        // independent fixed-point oracle on the scaled field
        let mut oracle = w0;
        for _ in 0..300 {
            let mid = 0.5 * (w0 + oracle);
            oracle = w0 + h * sys.scaled_field(&mid).unwrap();
        }
        assert!((next - oracle).norm() <= 1e-12);
    }

    #[test]
    fn unit_sphere_casimir_step_matches_spherical_midpoint() {
        // C = ½|w|² with c = ½ puts the leaf exactly on the unit sphere.
        let body = free_rigid_body(InertiaDiag::new(1.0, 2.0, 4.0).unwrap());
        let sys = NambuSystem::new(
            Matrix3::identity(),
            0.5,
            |w: &Vec3| 0.5 * (w.x * w.x + w.y * w.y / 2.0 + w.z * w.z / 4.0),
            |w: &Vec3| Vec3::new(w.x, w.y / 2.0, w.z / 4.0),
        )
        .unwrap();
        let c = cfg(0.1);
        let mut rng = ChaCha8Rng::seed_from_u64(26);
        for _ in 0..20 {
            let w = Vec3::from(rng.sample::<[f64; 3], _>(UnitSphere));
            let nambu_next = nambu_midpoint_step(&sys, &w, &c).unwrap();
            let spin = SpinState::from_vectors(&[w]).unwrap();
            let spherical_next = spherical_midpoint_step(&body, &spin, 0.0, &c).unwrap();
            assert!(
                (nambu_next - spherical_next.sphere(0).as_vec3()).norm() <= 10.0 * c.solver_tol
            );
        }
    }

    type Poly = fn(&Vec3) -> f64;

    #[test]
    fn catalog_matrices_reproduce_their_polynomials() {
        let polys: Vec<(&str, Poly)> = vec![
            ("A3,1", |w| w.x * w.x),
            ("A3,4", |w| w.x * w.y),
            ("A3,6", |w| w.x * w.x + w.y * w.y),
            ("A3,8", |w| w.y * w.y + w.x * w.z),
            ("A3,9", |w| w.norm_squared()),
        ];
        let catalog = casimir_catalog();
        assert_eq!(catalog.len(), 5);
        let mut rng = ChaCha8Rng::seed_from_u64(27);
        for ((name, matrix), (pname, poly)) in catalog.iter().zip(polys.iter()) {
            assert_eq!(name, pname);
            assert!((matrix - matrix.transpose()).abs().max() == 0.0);
            for _ in 0..20 {
                let w = Vec3::from(rng.sample::<[f64; 3], _>(UnitSphere)) * rng.gen_range(0.1..4.0);
                assert_relative_eq!(0.5 * w.dot(&(matrix * w)), poly(&w), epsilon = 1e-13);
            }
        }
        // A3,9 is the so(3)/su(2) case: twice the identity
        assert_eq!(catalog[4].1, 2.0 * Matrix3::identity());
    }

    #[test]
    fn construction_validation() {
        let skew = Matrix3::new(0.0, 1.0, 0.0, -1.0, 0.0, 0.0, 0.0, 0.0, 0.0);
        assert!(NambuSystem::quadratic(skew, Matrix3::identity(), 1.0).is_err());
        assert!(NambuSystem::lagrange(0.0).is_err());
    }
}
