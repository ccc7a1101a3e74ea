//! One-step midpoint maps and the trajectory driver.
//!
//! Three implicit one-step maps share a fixed-point solver with damped
//! Newton fallback:
//!
//! - spherical midpoint: `W - w = h ξ(ρ(w + W))`, a symplectic integrator on
//!   `(S²)^n` (the field is evaluated at the sphere-projected midpoint);
//! - classical midpoint: `W - w = h X((w + W)/2)` on `ℝ^{3n}`;
//! - extended spherical midpoint: `W - w = h X(Γ(w, W))`, a Lie-Poisson
//!   integrator on `ℝ^{3n}` that preserves every sphere radius for
//!   Hamiltonian fields.
//!
//! Time-dependent fields are evaluated at `t + h/2`, which keeps the maps
//! second order and self-adjoint. No post-step renormalization is applied
//! anywhere: radius preservation must hold intrinsically and is asserted by
//! the callers, never enforced.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::geometry::{gamma_midpoint, AmbientState, SpinState, ANTIPODAL_TOL, ZERO_TOL};
use crate::systems::SpinHamiltonian;

/// Step size and implicit-solver knobs.
///
/// `h` may be negative: stepping with `-h` realizes the adjoint map (used by
/// the reversal diagnostics). [`integrate`] requires `h > 0` so trajectory
/// times stay strictly increasing.
#[derive(Debug, Clone, Copy)]
pub struct StepConfig {
    /// Step size (nonzero).
    pub h: f64,
    /// Max-norm residual tolerance for the implicit solve.
    pub solver_tol: f64,
    /// Iteration budget for the fixed-point phase (and again for Newton).
    pub max_iterations: usize,
    /// Fall back to damped Newton when fixed-point iteration stalls.
    pub newton_fallback: bool,
    /// Finite-difference step for the fallback Jacobian.
    pub fd_delta: f64,
}

impl StepConfig {
    pub fn new(h: f64) -> Result<Self> {
        if !h.is_finite() || h == 0.0 {
            return Err(Error::InvalidParameter(format!(
                "step size must be finite and nonzero, got {h}"
            )));
        }
        Ok(Self {
            h,
            solver_tol: 1e-13,
            max_iterations: 100,
            newton_fallback: true,
            fd_delta: 1e-7,
        })
    }

    pub fn with_solver_tol(mut self, tol: f64) -> Result<Self> {
        if !tol.is_finite() || tol <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "solver tolerance must be positive, got {tol}"
            )));
        }
        self.solver_tol = tol;
        Ok(self)
    }

    pub fn with_max_iterations(mut self, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter(
                "max_iterations must be at least 1".into(),
            ));
        }
        self.max_iterations = n;
        Ok(self)
    }

    pub fn with_newton_fallback(mut self, enabled: bool) -> Self {
        self.newton_fallback = enabled;
        self
    }

    pub fn with_fd_delta(mut self, delta: f64) -> Result<Self> {
        if !delta.is_finite() || delta <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "fd_delta must be positive, got {delta}"
            )));
        }
        self.fd_delta = delta;
        Ok(self)
    }

    /// Same solver settings, reversed step: realizes `Φ(-h)`.
    pub fn negated(&self) -> StepConfig {
        StepConfig { h: -self.h, ..*self }
    }
}

/// Which one-step map drives a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Spherical,
    Classical,
    Extended,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Spherical => "spherical",
            Method::Classical => "classical",
            Method::Extended => "extended",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "spherical" => Ok(Method::Spherical),
            "classical" => Ok(Method::Classical),
            "extended" => Ok(Method::Extended),
            other => Err(Error::InvalidParameter(format!(
                "unknown method '{other}' (expected spherical, classical, or extended)"
            ))),
        }
    }
}

/// Time-stamped discrete trajectory.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<AmbientState>,
    pub energies: Option<Vec<f64>>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn sphere_count(&self) -> usize {
        self.states.first().map_or(0, AmbientState::len)
    }

    pub fn state(&self, k: usize) -> &AmbientState {
        &self.states[k]
    }

    pub fn last_state(&self) -> &AmbientState {
        self.states.last().expect("trajectory is never empty")
    }

    /// Max deviation of the recorded energies from their initial value.
    pub fn max_energy_deviation(&self) -> Option<f64> {
        let energies = self.energies.as_ref()?;
        let e0 = *energies.first()?;
        Some(
            energies
                .iter()
                .map(|e| (e - e0).abs())
                .fold(0.0, f64::max),
        )
    }
}

/// Solve `residual(W) = 0` for `W` near `guess`.
///
/// Strategy: fixed-point iteration `W ← W - residual(W)` (the step's natural
/// form), polished past the tolerance until the residual stops decreasing so
/// quadratic invariants hold to machine accuracy. If the budget runs out and
/// `newton_fallback` is set, a damped Newton iteration with a central-
/// difference Jacobian takes over from the original guess.
pub fn solve_implicit<F>(residual: F, guess: &AmbientState, cfg: &StepConfig) -> Result<AmbientState>
where
    F: Fn(&AmbientState) -> Result<AmbientState>,
{
    let mut w = guess.clone();
    let mut prev_norm = f64::INFINITY;
    let mut iterations = 0usize;
    let mut last_norm = f64::INFINITY;
    let mut fixed_point_error: Option<Error> = None;

    loop {
        let r = match residual(&w) {
            Ok(r) => r,
            Err(e) => {
                // The iterate wandered out of the field's domain.
                fixed_point_error = Some(e);
                break;
            }
        };
        last_norm = r.max_norm();
        if !last_norm.is_finite() {
            break;
        }
        if last_norm <= cfg.solver_tol && last_norm >= prev_norm {
            return Ok(w); // converged and stagnated: no further progress possible
        }
        if iterations >= cfg.max_iterations {
            if last_norm <= cfg.solver_tol {
                return Ok(w);
            }
            break;
        }
        w = w.sub(&r);
        prev_norm = last_norm;
        iterations += 1;
    }

    if !cfg.newton_fallback {
        return match fixed_point_error {
            Some(e) => Err(e),
            None => Err(Error::NoConvergence {
                iterations,
                residual: last_norm,
            }),
        };
    }
    newton_solve(&residual, guess, cfg, iterations)
}

fn newton_solve<F>(
    residual: &F,
    guess: &AmbientState,
    cfg: &StepConfig,
    used_iterations: usize,
) -> Result<AmbientState>
where
    F: Fn(&AmbientState) -> Result<AmbientState>,
{
    let dim = 3 * guess.len();
    let mut w = guess.clone();
    let mut r = residual(&w)?;
    let mut rn = r.max_norm();
    let mut iterations = used_iterations;
    let budget = used_iterations + cfg.max_iterations;

    while rn > cfg.solver_tol {
        if iterations >= budget {
            return Err(Error::NoConvergence {
                iterations,
                residual: rn,
            });
        }
        let jac = residual_jacobian(residual, &w, cfg.fd_delta, dim)?;
        let rhs = -DVector::from_vec(r.flatten());
        let delta = jac
            .lu()
            .solve(&rhs)
            .ok_or(Error::NoConvergence {
                iterations,
                residual: rn,
            })?;

        let mut alpha = 1.0;
        let mut accepted = false;
        for _ in 0..12 {
            let candidate = AmbientState::from_flat(
                &w.flatten()
                    .iter()
                    .zip(delta.iter())
                    .map(|(x, d)| x + alpha * d)
                    .collect::<Vec<_>>(),
            );
            if let Ok(rc) = residual(&candidate) {
                let cn = rc.max_norm();
                if cn.is_finite() && (cn < rn || cn <= cfg.solver_tol) {
                    w = candidate;
                    r = rc;
                    rn = cn;
                    accepted = true;
                    break;
                }
            }
            alpha *= 0.5;
        }
        iterations += 1;
        if !accepted {
            return Err(Error::NoConvergence {
                iterations,
                residual: rn,
            });
        }
    }
    Ok(w)
}

fn residual_jacobian<F>(
    residual: &F,
    w: &AmbientState,
    delta: f64,
    dim: usize,
) -> Result<DMatrix<f64>>
where
    F: Fn(&AmbientState) -> Result<AmbientState>,
{
    let flat = w.flatten();
    let mut jac = DMatrix::zeros(dim, dim);
    for col in 0..dim {
        let mut plus = flat.clone();
        plus[col] += delta;
        let mut minus = flat.clone();
        minus[col] -= delta;
        let rp = residual(&AmbientState::from_flat(&plus))?.flatten();
        let rm = residual(&AmbientState::from_flat(&minus))?.flatten();
        for row in 0..dim {
            jac[(row, col)] = (rp[row] - rm[row]) / (2.0 * delta);
        }
    }
    Ok(jac)
}

/// Per-sphere direction of `w + W`, with an antipodal guard.
fn project_sum(w: &AmbientState, cand: &AmbientState) -> Result<AmbientState> {
    let mut out = Vec::with_capacity(w.len());
    for (i, (wi, ci)) in w.iter().zip(cand.iter()).enumerate() {
        let sum = wi + ci;
        let ns = sum.norm();
        if ns < ANTIPODAL_TOL * (wi.norm() + ci.norm()).max(ZERO_TOL) {
            return Err(Error::AntipodalPair { sphere: i, norm: ns });
        }
        out.push(sum / ns);
    }
    Ok(AmbientState::new(out))
}

/// Spherical midpoint step for an arbitrary field `ξ` on `(S²)^n`.
///
/// Solves `W - w = h ξ(ρ(w + W), t + h/2)` and validates (without
/// renormalizing) that every output component is unit to `1e-12`.
pub fn spherical_midpoint_step_field<X>(
    field: X,
    w: &SpinState,
    t: f64,
    cfg: &StepConfig,
) -> Result<SpinState>
where
    X: Fn(&AmbientState, f64) -> Result<AmbientState>,
{
    let w_amb = w.to_ambient();
    let t_mid = t + 0.5 * cfg.h;
    let residual = |cand: &AmbientState| -> Result<AmbientState> {
        let mid = project_sum(&w_amb, cand)?;
        let xi = field(&mid, t_mid)?;
        Ok(cand.sub(&w_amb).sub(&xi.scale(cfg.h)))
    };
    let solution = solve_implicit(residual, &w_amb, cfg)?;
    SpinState::from_unit_vectors(solution.components())
}

/// Spherical midpoint step for a Hamiltonian system.
pub fn spherical_midpoint_step(
    hamiltonian: &SpinHamiltonian,
    w: &SpinState,
    t: f64,
    cfg: &StepConfig,
) -> Result<SpinState> {
    spherical_midpoint_step_field(|u, s| hamiltonian.vector_field(u, s), w, t, cfg)
}

/// Classical midpoint step `W - w = h X((w + W)/2, t + h/2)` on `ℝ^{3n}`.
pub fn classical_midpoint_step<X>(
    field: X,
    w: &AmbientState,
    t: f64,
    cfg: &StepConfig,
) -> Result<AmbientState>
where
    X: Fn(&AmbientState, f64) -> Result<AmbientState>,
{
    let t_mid = t + 0.5 * cfg.h;
    let residual = |cand: &AmbientState| -> Result<AmbientState> {
        let mid = w.add(cand).scale(0.5);
        let x = field(&mid, t_mid)?;
        Ok(cand.sub(w).sub(&x.scale(cfg.h)))
    };
    solve_implicit(residual, w, cfg)
}

/// Extended spherical midpoint step `W - w = h X(Γ(w, W), t + h/2)`.
pub fn extended_spherical_step<X>(
    field: X,
    w: &AmbientState,
    t: f64,
    cfg: &StepConfig,
) -> Result<AmbientState>
where
    X: Fn(&AmbientState, f64) -> Result<AmbientState>,
{
    let t_mid = t + 0.5 * cfg.h;
    let residual = |cand: &AmbientState| -> Result<AmbientState> {
        let mid = gamma_midpoint(w, cand)?;
        let x = field(&mid, t_mid)?;
        Ok(cand.sub(w).sub(&x.scale(cfg.h)))
    };
    solve_implicit(residual, w, cfg)
}

/// Integrate a Hamiltonian system with the chosen one-step map.
///
/// `times[k] = t0 + k h`; energies are recorded at `(w_k, t_k)` when
/// requested. Step failures carry the step index.
pub fn integrate(
    hamiltonian: &SpinHamiltonian,
    w0: &AmbientState,
    t0: f64,
    cfg: &StepConfig,
    steps: usize,
    method: Method,
    record_energy: bool,
) -> Result<Trajectory> {
    if cfg.h <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "trajectory step size must be positive, got {}",
            cfg.h
        )));
    }
    let mut times = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    let mut energies = if record_energy {
        Some(Vec::with_capacity(steps + 1))
    } else {
        None
    };

    // The spherical method marches validated spin states.
    let mut spin_current = if method == Method::Spherical {
        Some(SpinState::from_unit_vectors(w0.components())?)
    } else {
        None
    };
    let mut current = w0.clone();

    for k in 0..=steps {
        let t = t0 + k as f64 * cfg.h;
        times.push(t);
        states.push(current.clone());
        if let Some(list) = energies.as_mut() {
            list.push(hamiltonian.value(&current, t).map_err(|e| e.at_step(k))?);
        }
        if k == steps {
            break;
        }
        match method {
            Method::Spherical => {
                let spin = spin_current.as_ref().expect("spherical state tracked");
                let next = spherical_midpoint_step(hamiltonian, spin, t, cfg)
                    .map_err(|e| e.at_step(k))?;
                current = next.to_ambient();
                spin_current = Some(next);
            }
            Method::Classical => {
                current =
                    classical_midpoint_step(|u, s| hamiltonian.vector_field(u, s), &current, t, cfg)
                        .map_err(|e| e.at_step(k))?;
            }
            Method::Extended => {
                current =
                    extended_spherical_step(|u, s| hamiltonian.vector_field(u, s), &current, t, cfg)
                        .map_err(|e| e.at_step(k))?;
            }
        }
    }

    Ok(Trajectory {
        times,
        states,
        energies,
    })
}

/// Integrate an arbitrary field (no energy recording).
pub fn integrate_field<X>(
    field: X,
    w0: &AmbientState,
    t0: f64,
    cfg: &StepConfig,
    steps: usize,
    method: Method,
) -> Result<Trajectory>
where
    X: Fn(&AmbientState, f64) -> Result<AmbientState>,
{
    if cfg.h <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "trajectory step size must be positive, got {}",
            cfg.h
        )));
    }
    let mut times = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    let mut spin_current = if method == Method::Spherical {
        Some(SpinState::from_unit_vectors(w0.components())?)
    } else {
        None
    };
    let mut current = w0.clone();

    for k in 0..=steps {
        times.push(t0 + k as f64 * cfg.h);
        states.push(current.clone());
        if k == steps {
            break;
        }
        let t = t0 + k as f64 * cfg.h;
        match method {
            Method::Spherical => {
                let spin = spin_current.as_ref().expect("spherical state tracked");
                let next = spherical_midpoint_step_field(&field, spin, t, cfg)
                    .map_err(|e| e.at_step(k))?;
                current = next.to_ambient();
                spin_current = Some(next);
            }
            Method::Classical => {
                current = classical_midpoint_step(&field, &current, t, cfg)
                    .map_err(|e| e.at_step(k))?;
            }
            Method::Extended => {
                current = extended_spherical_step(&field, &current, t, cfg)
                    .map_err(|e| e.at_step(k))?;
            }
        }
    }

    Ok(Trajectory {
        times,
        states,
        energies: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{UnitVec3, Vec3};
    use crate::systems::{free_rigid_body, harmonic_oscillator, InertiaDiag};
    use approx::assert_relative_eq;
    use nalgebra::Matrix3;

    fn cfg(h: f64) -> StepConfig {
        StepConfig::new(h).unwrap()
    }

    #[test]
    fn step_config_validation() {
        assert!(StepConfig::new(0.0).is_err());
        assert!(StepConfig::new(f64::NAN).is_err());
        assert!(StepConfig::new(-0.25).is_ok());
        assert!(cfg(0.1).with_solver_tol(0.0).is_err());
        assert!(cfg(0.1).with_max_iterations(0).is_err());
        assert_relative_eq!(cfg(0.1).negated().h, -0.1);
    }

    #[test]
    fn solve_implicit_zero_field_is_immediate() {
        let w = AmbientState::from_components(&[[0.3, -0.4, 0.5]]);
        let w_res = w.clone();
        let sol = solve_implicit(move |cand| Ok(cand.sub(&w_res)), &w, &cfg(0.1)).unwrap();
        assert!(sol.sub(&w).max_norm() == 0.0);
    }

    #[test]
    fn solve_implicit_matches_direct_linear_solve() {
        // R(W) = W - w - hAW has the closed-form solution (I - hA)⁻¹ w.
        let a = Matrix3::new(0.0, 1.0, 0.0, -1.0, 0.0, 0.5, 0.25, -0.5, 0.0);
        let w0 = Vec3::new(0.7, -0.2, 0.4);
        let h = 0.3;
        let residual = move |cand: &AmbientState| -> Result<AmbientState> {
            let c = cand.component(0);
            Ok(AmbientState::new(vec![c - w0 - h * (a * c)]))
        };
        let c = cfg(h).with_solver_tol(1e-14).unwrap();
        let sol = solve_implicit(residual, &AmbientState::new(vec![w0]), &c).unwrap();
        let direct = (Matrix3::identity() - h * a).lu().solve(&w0).unwrap();
        assert!((sol.component(0) - direct).norm() <= 1e-13);
    }

    #[test]
    fn solve_implicit_reports_no_convergence() {
        // Fixed-point map with Lipschitz constant 3 and Newton disabled.
        let residual = |cand: &AmbientState| -> Result<AmbientState> {
            let c = cand.component(0);
            Ok(AmbientState::new(vec![c - Vec3::new(1.0, 0.0, 0.0) - 3.0 * c]))
        };
        let c = cfg(1.0).with_newton_fallback(false);
        let err = solve_implicit(residual, &AmbientState::new(vec![Vec3::zeros()]), &c).unwrap_err();
        assert!(matches!(err, Error::NoConvergence { .. }));
    }

    #[test]
    fn spherical_step_fixes_equilibria() {
        let body = free_rigid_body(InertiaDiag::new(1.0, 2.0, 4.0).unwrap());
        let w = SpinState::from_components(&[[1.0, 0.0, 0.0]]).unwrap();
        let next = spherical_midpoint_step(&body, &w, 0.0, &cfg(0.1)).unwrap();
        assert!((next.sphere(0).as_vec3() - w.sphere(0).as_vec3()).norm() <= 1e-15);
    }

    #[test]
    fn spherical_step_rotates_harmonic_oscillator_by_known_angle() {
        // λh = 1: rotation about a = e_z by arccos(1 - 1/2) = π/3, towards -y.
        let osc = harmonic_oscillator(UnitVec3::new(Vec3::new(0.0, 0.0, 1.0)).unwrap(), 1.0);
        let w = SpinState::from_components(&[[1.0, 0.0, 0.0]]).unwrap();
        let c = cfg(1.0).with_solver_tol(1e-15).unwrap();
        let next = spherical_midpoint_step(&osc, &w, 0.0, &c).unwrap();
        let third = std::f64::consts::FRAC_PI_3;
        assert_relative_eq!(next.sphere(0).x, third.cos(), epsilon = 1e-13);
        assert_relative_eq!(next.sphere(0).y, -third.sin(), epsilon = 1e-13);
        assert_relative_eq!(next.sphere(0).z, 0.0, epsilon = 1e-14);
    }

    #[test]
    fn spherical_step_matches_long_fixed_point_oracle() {
        // Oracle: 200 plain fixed-point sweeps of W ← w + hξ(ρ(w+W)), written
        // independently of solve_implicit.
        let body = free_rigid_body(InertiaDiag::new(1.0, 2.0, 4.0).unwrap());
        let w0 = Vec3::new(1.1_f64.cos(), 0.0, 1.1_f64.sin());
        let h = 0.1;

        let mut oracle = w0;
        for _ in 0..200 {
            let sum = w0 + oracle;
            let mid = sum / sum.norm();
            let grad = Vec3::new(mid.x / 1.0, mid.y / 2.0, mid.z / 4.0);
            oracle = w0 + h * mid.cross(&grad);
        }

        let state = SpinState::from_components(&[[w0.x, w0.y, w0.z]]).unwrap();
        let c = cfg(h).with_solver_tol(1e-15).unwrap();
        let next = spherical_midpoint_step(&body, &state, 0.0, &c).unwrap();
        assert!((next.sphere(0).as_vec3() - oracle).norm() <= 1e-14);
        assert!((next.sphere(0).norm() - 1.0).abs() <= 1e-13);
    }

    #[test]
    fn classical_step_examples() {
        // zero field
        let w = AmbientState::from_components(&[[0.2, 0.4, -0.6]]);
        let next = classical_midpoint_step(|_, _| Ok(AmbientState::zeros(1)), &w, 0.0, &cfg(0.5))
            .unwrap();
        assert!(next.sub(&w).max_norm() == 0.0);

        // constant field: exact
        let cfield = Vec3::new(0.1, -0.2, 0.3);
        let next = classical_midpoint_step(
            move |_, _| Ok(AmbientState::new(vec![cfield])),
            &w,
            0.0,
            &cfg(0.5),
        )
        .unwrap();
        assert!((next.component(0) - (w.component(0) + 0.5 * cfield)).norm() <= 1e-15);

        // linear field: Cayley map oracle (I - hA/2)⁻¹(I + hA/2) w
        let a = Matrix3::new(0.0, -1.0, 0.2, 1.0, 0.0, -0.3, -0.2, 0.3, 0.0);
        let h = 0.25;
        let next = classical_midpoint_step(
            move |u, _| Ok(AmbientState::new(vec![a * u.component(0)])),
            &w,
            0.0,
            &cfg(h).with_solver_tol(1e-15).unwrap(),
        )
        .unwrap();
        let cayley = (Matrix3::identity() - 0.5 * h * a)
            .lu()
            .solve(&((Matrix3::identity() + 0.5 * h * a) * w.component(0)))
            .unwrap();
        assert!((next.component(0) - cayley).norm() <= 1e-13);
    }

    #[test]
    fn extended_step_matches_spherical_on_unit_states() {
        let body = free_rigid_body(InertiaDiag::new(1.0, 2.0, 4.0).unwrap());
        let w = SpinState::from_components(&[[1.1_f64.cos(), 0.0, 1.1_f64.sin()]]).unwrap();
        let c = cfg(0.1).with_solver_tol(1e-15).unwrap();
        let spherical = spherical_midpoint_step(&body, &w, 0.0, &c).unwrap();
        let extended = extended_spherical_step(
            |u, s| body.vector_field(u, s),
            &w.to_ambient(),
            0.0,
            &c,
        )
        .unwrap();
        assert!(
            (extended.component(0) - spherical.sphere(0).as_vec3()).norm() <= 10.0 * c.solver_tol
        );
    }

    #[test]
    fn extended_step_preserves_nonunit_radius() {
        let body = free_rigid_body(InertiaDiag::new(1.0, 2.0, 4.0).unwrap());
        let w = AmbientState::from_components(&[[0.0, 2.0, 0.0]]);
        let c = cfg(0.1).with_solver_tol(1e-14).unwrap();
        let next =
            extended_spherical_step(|u, s| body.vector_field(u, s), &w, 0.0, &c).unwrap();

        // oracle: long plain fixed-point iteration on the Γ form
        let w0 = Vec3::new(0.0, 2.0, 0.0);
        let mut oracle = w0;
        for _ in 0..300 {
            let sum = w0 + oracle;
            let gamma = sum * ((w0.norm() * oracle.norm()).sqrt() / sum.norm());
            let grad = Vec3::new(gamma.x / 1.0, gamma.y / 2.0, gamma.z / 4.0);
            oracle = w0 + 0.1 * gamma.cross(&grad);
        }
        assert!((next.component(0) - oracle).norm() <= 1e-12);
        assert!((next.component(0).norm() - 2.0).abs() <= 1e-12);

        // zero field fixes the state
        let still =
            extended_spherical_step(|_, _| Ok(AmbientState::zeros(1)), &w, 0.0, &c).unwrap();
        assert!(still.sub(&w).max_norm() == 0.0);
    }

    #[test]
    fn integrate_zero_steps_returns_initial_point() {
        let body = free_rigid_body(InertiaDiag::new(1.0, 2.0, 4.0).unwrap());
        let w0 = AmbientState::from_components(&[[1.0, 0.0, 0.0]]);
        let traj = integrate(&body, &w0, 3.0, &cfg(0.1), 0, Method::Spherical, true).unwrap();
        assert_eq!(traj.len(), 1);
        assert_relative_eq!(traj.times[0], 3.0);
        assert_eq!(traj.energies.as_ref().unwrap().len(), 1);
    }

    #[test]
    fn integrate_conserves_free_rigid_body_energy() {
        let body = free_rigid_body(InertiaDiag::new(1.0, 2.0, 4.0).unwrap());
        let w0 = AmbientState::from_components(&[[1.1_f64.cos(), 0.0, 1.1_f64.sin()]]);
        let c = cfg(0.1).with_solver_tol(1e-14).unwrap();
        let traj = integrate(&body, &w0, 0.0, &c, 200, Method::Spherical, true).unwrap();
        assert!(traj.max_energy_deviation().unwrap() <= 1e-13);
        for state in &traj.states {
            assert!((state.component(0).norm() - 1.0).abs() <= 1e-13);
        }
    }

    #[test]
    fn stepping_forward_then_backward_returns_home() {
        let body = free_rigid_body(InertiaDiag::new(1.0, 2.0, 4.0).unwrap());
        let w0 = SpinState::from_components(&[[1.1_f64.cos(), 0.0, 1.1_f64.sin()]]).unwrap();
        let c = cfg(0.2).with_solver_tol(1e-14).unwrap();
        let forward = spherical_midpoint_step(&body, &w0, 0.0, &c).unwrap();
        let back = spherical_midpoint_step(&body, &forward, 0.2, &c.negated()).unwrap();
        assert!(
            (back.sphere(0).as_vec3() - w0.sphere(0).as_vec3()).norm() <= 10.0 * c.solver_tol
        );
    }

    #[test]
    fn integrate_rejects_nonpositive_h() {
        let body = free_rigid_body(InertiaDiag::new(1.0, 2.0, 4.0).unwrap());
        let w0 = AmbientState::from_components(&[[1.0, 0.0, 0.0]]);
        let bad = cfg(-0.1);
        assert!(integrate(&body, &w0, 0.0, &bad, 10, Method::Spherical, false).is_err());
    }
}
