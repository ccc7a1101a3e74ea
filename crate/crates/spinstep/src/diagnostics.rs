//! Numerical verification of the integrators' structural properties.
//!
//! Nothing here trusts the implementation it checks: Jacobians come from
//! central finite differences of the opaque step map, covectors are pulled
//! back through the transposed Jacobian, and reference trajectories are
//! produced by the same method at a much smaller step. Every check is
//! deterministic given its seed and configuration.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{StandardNormal, UnitSphere};

use crate::error::{Error, Result};
use crate::geometry::{rotate, AmbientState, RotationTuple, SpinState, Vec3};
use crate::integrators::{
    classical_midpoint_step, extended_spherical_step, integrate, spherical_midpoint_step, Method,
    StepConfig, Trajectory,
};
use crate::systems::{
    point_vortices, scale_invariant_extension, poisson_bivector, SpinHamiltonian, VortexConfig,
};

// ---------------------------------------------------------------------------
// sampling helpers (seeded; used across the diagnostics and test suites)
// ---------------------------------------------------------------------------

/// Uniform point on `S²`.
pub fn random_unit_vec3<R: Rng + ?Sized>(rng: &mut R) -> Vec3 {
    Vec3::from(rng.sample::<[f64; 3], _>(UnitSphere))
}

/// Uniform point on `(S²)^n`.
pub fn random_spin_state<R: Rng + ?Sized>(n: usize, rng: &mut R) -> SpinState {
    SpinState::from_vectors(&(0..n).map(|_| random_unit_vec3(rng)).collect::<Vec<_>>())
        .expect("n >= 1")
}

/// Uniform unit covector in `ℝ^{3n}`.
pub fn random_covector<R: Rng + ?Sized>(n: usize, rng: &mut R) -> AmbientState {
    let mut flat: Vec<f64> = (0..3 * n).map(|_| rng.sample(StandardNormal)).collect();
    let norm = flat.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-300);
    flat.iter_mut().for_each(|x| *x /= norm);
    AmbientState::from_flat(&flat)
}

// ---------------------------------------------------------------------------
// reports and step maps
// ---------------------------------------------------------------------------

/// Outcome of one named check. `pass` holds exactly when
/// `max_violation <= tolerance`.
#[derive(Debug, Clone)]
pub struct DiagnosticReport {
    pub name: String,
    pub max_violation: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub details: String,
}

impl DiagnosticReport {
    pub fn new(
        name: impl Into<String>,
        max_violation: f64,
        tolerance: f64,
        details: impl Into<String>,
    ) -> Self {
        Self {
            name: name.into(),
            max_violation,
            tolerance,
            pass: max_violation <= tolerance,
            details: details.into(),
        }
    }
}

impl std::fmt::Display for DiagnosticReport {
    /// One `name,max_violation,tolerance,pass` line.
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{},{},{},{}",
            self.name, self.max_violation, self.tolerance, self.pass
        )
    }
}

type StepFn = dyn Fn(&AmbientState) -> Result<AmbientState> + Send + Sync;

/// An opaque deterministic one-step map `w ↦ W` at fixed `(h, t, cfg)`.
///
/// The spherical variant is realized as the classical midpoint method applied
/// to the ray-projected field, which extends the map smoothly to an ambient
/// neighborhood of `(S²)^n` so it can be finite-differenced.
pub struct StepMap {
    spheres: usize,
    map: Box<StepFn>,
}

impl StepMap {
    pub fn from_fn<F>(spheres: usize, map: F) -> Self
    where
        F: Fn(&AmbientState) -> Result<AmbientState> + Send + Sync + 'static,
    {
        Self {
            spheres,
            map: Box::new(map),
        }
    }

    pub fn identity(spheres: usize) -> Self {
        Self::from_fn(spheres, |w| Ok(w.clone()))
    }

    /// Spherical midpoint step of `H` (ambient extension through `ξ ∘ ρ`).
    pub fn spherical(hamiltonian: &SpinHamiltonian, t: f64, cfg: StepConfig) -> Self {
        let h = hamiltonian.clone();
        Self::from_fn(hamiltonian.spheres(), move |w| {
            classical_midpoint_step(
                |u, s| {
                    let projected = crate::geometry::project_rays(u)?;
                    h.vector_field(&projected.to_ambient(), s)
                },
                w,
                t,
                &cfg,
            )
        })
    }

    /// Classical midpoint step applied directly to the unprojected field `X_H`.
    pub fn classical(hamiltonian: &SpinHamiltonian, t: f64, cfg: StepConfig) -> Self {
        let h = hamiltonian.clone();
        Self::from_fn(hamiltonian.spheres(), move |w| {
            classical_midpoint_step(|u, s| h.vector_field(u, s), w, t, &cfg)
        })
    }

    /// Extended spherical midpoint step of `X_H`.
    pub fn extended(hamiltonian: &SpinHamiltonian, t: f64, cfg: StepConfig) -> Self {
        let h = hamiltonian.clone();
        Self::from_fn(hamiltonian.spheres(), move |w| {
            extended_spherical_step(|u, s| h.vector_field(u, s), w, t, &cfg)
        })
    }

    pub fn spheres(&self) -> usize {
        self.spheres
    }

    pub fn apply(&self, w: &AmbientState) -> Result<AmbientState> {
        (self.map)(w)
    }
}

/// Central finite-difference Jacobian `Dφ(w)` of a step map, as a
/// `3n × 3n` matrix in flattened coordinates.
pub fn map_jacobian_fd(phi: &StepMap, w: &AmbientState, delta: f64) -> Result<DMatrix<f64>> {
    let dim = 3 * w.len();
    let flat = w.flatten();
    let mut jac = DMatrix::zeros(dim, dim);
    for col in 0..dim {
        let mut plus = flat.clone();
        plus[col] += delta;
        let mut minus = flat.clone();
        minus[col] -= delta;
        let fp = phi.apply(&AmbientState::from_flat(&plus))?.flatten();
        let fm = phi.apply(&AmbientState::from_flat(&minus))?.flatten();
        for row in 0..dim {
            jac[(row, col)] = (fp[row] - fm[row]) / (2.0 * delta);
        }
    }
    Ok(jac)
}

/// Options for the Poisson-preservation check.
#[derive(Debug, Clone, Copy)]
pub struct PoissonCheck {
    pub trials: usize,
    pub fd_delta: f64,
    pub seed: u64,
    pub tolerance: f64,
}

impl Default for PoissonCheck {
    fn default() -> Self {
        Self {
            trials: 50,
            fd_delta: 1e-5,
            seed: 0x5eed,
            tolerance: 1e-6,
        }
    }
}

/// Verify that a step map preserves the Lie-Poisson bivector
/// `K(w)(σ, λ) = Σ_i det([w_i, σ_i, λ_i])`.
///
/// For random unit covector pairs `(Σ, Λ)` at `W = φ(w)` the pullbacks
/// `σ = Dφ(w)ᵀ Σ`, `λ = Dφ(w)ᵀ Λ` are formed through the finite-difference
/// Jacobian, and the report carries
/// `max |K(W)(Σ, Λ) - K(w)(σ, λ)| / (|K(w)(σ, λ)| + 1)`.
pub fn check_poisson_preservation(
    phi: &StepMap,
    w: &AmbientState,
    opts: &PoissonCheck,
) -> Result<DiagnosticReport> {
    let image = phi.apply(w)?;
    let jac = map_jacobian_fd(phi, w, opts.fd_delta)?;
    let jac_t = jac.transpose();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let n = w.len();

    let pull_back = |cov: &AmbientState| -> AmbientState {
        let flat = nalgebra::DVector::from_vec(cov.flatten());
        AmbientState::from_flat((&jac_t * flat).as_slice())
    };

    let mut max_violation = 0.0_f64;
    for _ in 0..opts.trials {
        let big_sigma = random_covector(n, &mut rng);
        let big_lambda = random_covector(n, &mut rng);
        let sigma = pull_back(&big_sigma);
        let lambda = pull_back(&big_lambda);
        let before = poisson_bivector(w, &sigma, &lambda)?;
        let after = poisson_bivector(&image, &big_sigma, &big_lambda)?;
        max_violation = max_violation.max((after - before).abs() / (before.abs() + 1.0));
    }

    Ok(DiagnosticReport::new(
        "poisson-preservation",
        max_violation,
        opts.tolerance,
        format!(
            "trials={} fd_delta={} seed={}",
            opts.trials, opts.fd_delta, opts.seed
        ),
    ))
}

// ---------------------------------------------------------------------------
// conservation and convergence
// ---------------------------------------------------------------------------

type IntegralFn = dyn Fn(&AmbientState) -> f64 + Send + Sync;

/// A named scalar function of the state, checked for constancy along runs.
pub struct NamedIntegral {
    pub name: String,
    eval: Box<IntegralFn>,
}

impl NamedIntegral {
    pub fn new<F>(name: impl Into<String>, eval: F) -> Self
    where
        F: Fn(&AmbientState) -> f64 + Send + Sync + 'static,
    {
        Self {
            name: name.into(),
            eval: Box::new(eval),
        }
    }

    pub fn eval(&self, w: &AmbientState) -> f64 {
        (self.eval)(w)
    }
}

/// Max deviation of each integral from its value at the initial state.
pub fn conservation_report(
    name: impl Into<String>,
    traj: &Trajectory,
    integrals: &[NamedIntegral],
    tolerance: f64,
) -> DiagnosticReport {
    let mut max_violation = 0.0_f64;
    let mut details = Vec::new();
    for integral in integrals {
        let initial = integral.eval(traj.state(0));
        let worst = traj
            .states
            .iter()
            .map(|s| (integral.eval(s) - initial).abs())
            .fold(0.0, f64::max);
        details.push(format!("{}={worst:.3e}", integral.name));
        max_violation = max_violation.max(worst);
    }
    DiagnosticReport::new(name, max_violation, tolerance, details.join(" "))
}

/// Result of a convergence-order study.
#[derive(Debug, Clone)]
pub struct ConvergenceStudy {
    /// Fitted log-log slope of max error vs step size.
    pub slope: f64,
    /// `(h, max error vs reference)` per requested step size.
    pub errors: Vec<(f64, f64)>,
}

/// Measure the order of accuracy over a fixed time window.
///
/// The reference trajectory is produced by the same method at
/// `h_ref = min(h_list)/32` (self-convergence); every entry of `h_list` must
/// be an integer multiple of `h_ref` so states align in time.
pub fn convergence_order(
    hamiltonian: &SpinHamiltonian,
    w0: &AmbientState,
    t0: f64,
    total_time: f64,
    h_list: &[f64],
    method: Method,
    solver_tol: f64,
) -> Result<ConvergenceStudy> {
    if h_list.is_empty() {
        return Err(Error::InvalidParameter("empty step-size list".into()));
    }
    let h_min = h_list.iter().cloned().fold(f64::INFINITY, f64::min);
    let h_ref = h_min / 32.0;
    let ref_traj = trajectory_for(hamiltonian, w0, t0, total_time, h_ref, method, solver_tol)?;

    let mut errors = Vec::with_capacity(h_list.len());
    for &h in h_list {
        let err = max_error_vs_reference(hamiltonian, w0, t0, total_time, h, method, solver_tol,
            &ref_traj, h_ref)?;
        errors.push((h, err));
    }
    Ok(ConvergenceStudy {
        slope: log_log_slope(&errors),
        errors,
    })
}

/// Max error of each method against a common fine reference (the spherical
/// method at `h/32`), for a single step size.
pub fn compare_methods(
    hamiltonian: &SpinHamiltonian,
    w0: &AmbientState,
    t0: f64,
    total_time: f64,
    h: f64,
    methods: &[Method],
    solver_tol: f64,
) -> Result<Vec<(Method, f64)>> {
    let h_ref = h / 32.0;
    let ref_traj = trajectory_for(
        hamiltonian,
        w0,
        t0,
        total_time,
        h_ref,
        Method::Spherical,
        solver_tol,
    )?;
    methods
        .iter()
        .map(|&method| {
            let err = max_error_vs_reference(
                hamiltonian, w0, t0, total_time, h, method, solver_tol, &ref_traj, h_ref,
            )?;
            Ok((method, err))
        })
        .collect()
}

fn trajectory_for(
    hamiltonian: &SpinHamiltonian,
    w0: &AmbientState,
    t0: f64,
    total_time: f64,
    h: f64,
    method: Method,
    solver_tol: f64,
) -> Result<Trajectory> {
    let steps = (total_time / h).round() as usize;
    let cfg = StepConfig::new(h)?.with_solver_tol(solver_tol)?;
    integrate(hamiltonian, w0, t0, &cfg, steps, method, false)
}

#[allow(clippy::too_many_arguments)]
fn max_error_vs_reference(
    hamiltonian: &SpinHamiltonian,
    w0: &AmbientState,
    t0: f64,
    total_time: f64,
    h: f64,
    method: Method,
    solver_tol: f64,
    reference: &Trajectory,
    h_ref: f64,
) -> Result<f64> {
    let ratio = h / h_ref;
    if (ratio - ratio.round()).abs() > 1e-9 {
        return Err(Error::InvalidParameter(format!(
            "step size {h} is not an integer multiple of the reference step {h_ref}"
        )));
    }
    let stride = ratio.round() as usize;
    let traj = trajectory_for(hamiltonian, w0, t0, total_time, h, method, solver_tol)?;
    let mut worst = 0.0_f64;
    for (k, state) in traj.states.iter().enumerate() {
        let ref_state = reference.state(k * stride);
        worst = worst.max(state.sub(ref_state).norm());
    }
    Ok(worst)
}

fn log_log_slope(errors: &[(f64, f64)]) -> f64 {
    let points: Vec<(f64, f64)> = errors
        .iter()
        .map(|&(h, e)| (h.ln(), e.max(1e-300).ln()))
        .collect();
    let n = points.len() as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / n;
    let cov: f64 = points.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    let var: f64 = points.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    cov / var
}

// ---------------------------------------------------------------------------
// structural property residuals
// ---------------------------------------------------------------------------

/// `|Φ(-h)(Φ(h)(w)) - w|` in the max norm.
pub fn self_adjoint_residual(
    hamiltonian: &SpinHamiltonian,
    w: &AmbientState,
    t: f64,
    cfg: &StepConfig,
    method: Method,
) -> Result<f64> {
    let back = match method {
        Method::Spherical => {
            let spin = SpinState::from_unit_vectors(w.components())?;
            let fwd = spherical_midpoint_step(hamiltonian, &spin, t, cfg)?;
            spherical_midpoint_step(hamiltonian, &fwd, t + cfg.h, &cfg.negated())?.to_ambient()
        }
        Method::Classical => {
            let field = |u: &AmbientState, s: f64| hamiltonian.vector_field(u, s);
            let fwd = classical_midpoint_step(field, w, t, cfg)?;
            classical_midpoint_step(field, &fwd, t + cfg.h, &cfg.negated())?
        }
        Method::Extended => {
            let field = |u: &AmbientState, s: f64| hamiltonian.vector_field(u, s);
            let fwd = extended_spherical_step(field, w, t, cfg)?;
            extended_spherical_step(field, &fwd, t + cfg.h, &cfg.negated())?
        }
    };
    Ok(back.sub(w).max_norm())
}

/// Equivariance defect `|ψ_g⁻¹(Φ_H(ψ_g(w))) - Φ_{H∘ψ_g}(w)|` for the
/// spherical midpoint method.
pub fn equivariance_residual(
    hamiltonian: &SpinHamiltonian,
    w: &SpinState,
    g: &RotationTuple,
    t: f64,
    cfg: &StepConfig,
) -> Result<f64> {
    let rotated = rotate(g, w)?;
    let stepped = spherical_midpoint_step(hamiltonian, &rotated, t, cfg)?;
    let lhs = rotate(&g.inverse(), &stepped)?;

    let conjugated = hamiltonian.conjugate_rotation(g)?;
    let rhs = spherical_midpoint_step(&conjugated, w, t, cfg)?;
    Ok(lhs.to_ambient().sub(&rhs.to_ambient()).max_norm())
}

/// Step difference under `H ↦ H + c |w_i|²`.
///
/// Radial quadratic terms change the ambient gradient but not the on-sphere
/// dynamics, so the spherical midpoint step must not move.
pub fn extension_independence_residual(
    hamiltonian: &SpinHamiltonian,
    w: &SpinState,
    t: f64,
    cfg: &StepConfig,
    sphere: usize,
    c: f64,
) -> Result<f64> {
    let base = spherical_midpoint_step(hamiltonian, w, t, cfg)?;
    let shifted_h = hamiltonian.with_radial_term(sphere, c);
    let shifted = spherical_midpoint_step(&shifted_h, w, t, cfg)?;
    Ok(base.to_ambient().sub(&shifted.to_ambient()).max_norm())
}

/// Step difference between `H` and its ray-constant extension `H ∘ ρ`.
pub fn ray_constancy_residual(
    hamiltonian: &SpinHamiltonian,
    w: &SpinState,
    t: f64,
    cfg: &StepConfig,
) -> Result<f64> {
    let base = spherical_midpoint_step(hamiltonian, w, t, cfg)?;
    let extended_h = scale_invariant_extension(hamiltonian);
    let extended = spherical_midpoint_step(&extended_h, w, t, cfg)?;
    Ok(base.to_ambient().sub(&extended.to_ambient()).max_norm())
}

/// Rotation angle of `before ↦ after` about `axis`, measured in the plane
/// orthogonal to `axis`.
pub fn rotation_angle_about(axis: &Vec3, before: &Vec3, after: &Vec3) -> f64 {
    let u = before - axis * axis.dot(before);
    let v = after - axis * axis.dot(after);
    u.cross(&v).norm().atan2(u.dot(&v))
}

/// Geodesic-characterization defect of one accepted spherical step (n = 1):
/// returns `(alignment, length_defect)` where `alignment` measures how far
/// `ξ(m(w, W))` is from the geodesic tangent direction at the midpoint and
/// `length_defect = |2 sin(d(w,W)/2) - |h ξ(m)||`.
pub fn geodesic_characterization_defect(
    hamiltonian: &SpinHamiltonian,
    w: &SpinState,
    t: f64,
    cfg: &StepConfig,
) -> Result<(f64, f64)> {
    let next = spherical_midpoint_step(hamiltonian, w, t, cfg)?;
    let b = next.sphere(0).as_vec3();
    let mid = crate::geometry::geodesic_midpoint(w.sphere(0), next.sphere(0))?;
    let xi = *hamiltonian
        .vector_field(&AmbientState::new(vec![mid.into_inner()]), t + 0.5 * cfg.h)?
        .component(0);
    // Geodesic tangent at the midpoint, pointing from w towards W.
    let tangent_raw = b - mid.as_vec3() * mid.as_vec3().dot(b);
    let tangent = tangent_raw / tangent_raw.norm().max(1e-300);
    let xi_norm = xi.norm().max(1e-300);
    let alignment = (xi / xi_norm - tangent * cfg.h.signum()).norm();
    let d = crate::geometry::geodesic_distance(w.sphere(0), next.sphere(0));
    let length_defect = (2.0 * (d / 2.0).sin() - (cfg.h * xi_norm).abs()).abs();
    Ok((alignment, length_defect))
}

// ---------------------------------------------------------------------------
// Poincaré sections
// ---------------------------------------------------------------------------

/// Stroboscopic sampling of a time-periodic system: integrate with the
/// spherical midpoint method at `h = period / steps_per_period` and keep
/// every `steps_per_period`-th state (including the initial one).
pub fn poincare_section(
    hamiltonian: &SpinHamiltonian,
    w0: &SpinState,
    period: f64,
    steps_per_period: usize,
    num_periods: usize,
    t0: f64,
    base: &StepConfig,
) -> Result<Vec<SpinState>> {
    if !period.is_finite() || period <= 0.0 || steps_per_period == 0 {
        return Err(Error::InvalidParameter(
            "poincare section needs period > 0 and steps_per_period >= 1".into(),
        ));
    }
    let cfg = StepConfig {
        h: period / steps_per_period as f64,
        ..*base
    };
    let mut section = Vec::with_capacity(num_periods + 1);
    section.push(w0.clone());
    let mut current = w0.clone();
    for k in 0..num_periods * steps_per_period {
        let t = t0 + k as f64 * cfg.h;
        current = spherical_midpoint_step(hamiltonian, &current, t, &cfg)
            .map_err(|e| e.at_step(k))?;
        if (k + 1) % steps_per_period == 0 {
            section.push(current.clone());
        }
    }
    Ok(section)
}

// ---------------------------------------------------------------------------
// four-vortex invariant manifold
// ---------------------------------------------------------------------------

fn chart_point(theta: f64, phi: f64) -> Vec3 {
    Vec3::new(
        phi.cos() * theta.sin(),
        theta.sin() * phi.sin(),
        theta.cos(),
    )
}

fn chart_theta_derivative(theta: f64, phi: f64) -> Vec3 {
    Vec3::new(
        phi.cos() * theta.cos(),
        theta.cos() * phi.sin(),
        -theta.sin(),
    )
}

fn chart_phi_derivative(theta: f64, phi: f64) -> Vec3 {
    Vec3::new(-phi.sin() * theta.sin(), theta.sin() * phi.cos(), 0.0)
}

/// The two-parameter four-vortex configuration
/// `C(θ, φ) = (c(θ,φ), c(θ,φ+π), c(π-θ,-φ), c(π-θ,π-φ))` with
/// `c(θ,φ) = (cos φ sin θ, sin θ sin φ, cos θ)`.
///
/// Equivalently `(w, D_z w, D_x w, D_y w)` with `D_a` the half-turn about
/// axis `a`. Errors on configurations where two vortices coincide.
pub fn vortex_manifold_chart(theta: f64, phi: f64) -> Result<SpinState> {
    let points = [
        chart_point(theta, phi),
        chart_point(theta, phi + PI),
        chart_point(PI - theta, -phi),
        chart_point(PI - theta, PI - phi),
    ];
    for i in 0..4 {
        for j in (i + 1)..4 {
            let separation = 2.0 - 2.0 * points[i].dot(&points[j]);
            if separation < crate::systems::VORTEX_COLLISION_TOL {
                return Err(Error::VortexCollision { i, j, separation });
            }
        }
    }
    SpinState::from_vectors(&points)
}

/// Analytic chart derivatives `(∂C/∂θ, ∂C/∂φ)`.
pub fn vortex_chart_tangents(theta: f64, phi: f64) -> (AmbientState, AmbientState) {
    let d_theta = AmbientState::new(vec![
        chart_theta_derivative(theta, phi),
        chart_theta_derivative(theta, phi + PI),
        -chart_theta_derivative(PI - theta, -phi),
        -chart_theta_derivative(PI - theta, PI - phi),
    ]);
    let d_phi = AmbientState::new(vec![
        chart_phi_derivative(theta, phi),
        chart_phi_derivative(theta, phi + PI),
        -chart_phi_derivative(PI - theta, -phi),
        -chart_phi_derivative(PI - theta, PI - phi),
    ]);
    (d_theta, d_phi)
}

/// Norm of the component of the unit-strength four-vortex field at
/// `C(θ, φ)` orthogonal to the chart tangent plane.
///
/// The flow maps the chart family to itself, so this residual vanishes up
/// to rounding.
pub fn manifold_tangency_residual(theta: f64, phi: f64) -> Result<f64> {
    let w = vortex_manifold_chart(theta, phi)?;
    let hamiltonian = point_vortices(VortexConfig::unit(4)?);
    let field = hamiltonian.vector_field(&w.to_ambient(), 0.0)?;
    let (t1, t2) = vortex_chart_tangents(theta, phi);

    // Orthonormalize the tangent pair, then subtract the in-plane part.
    let n1 = t1.norm().max(1e-300);
    let e1 = t1.scale(1.0 / n1);
    let t2_perp = t2.add_scaled(-t2.dot(&e1), &e1);
    let n2 = t2_perp.norm();
    let mut residual = field.add_scaled(-field.dot(&e1), &e1);
    if n2 > 1e-12 {
        let e2 = t2_perp.scale(1.0 / n2);
        residual = residual.add_scaled(-residual.dot(&e2), &e2);
    }
    Ok(residual.norm())
}

/// Half-turn about the `z`, `x`, and `y` axes.
fn d_z(v: &Vec3) -> Vec3 {
    Vec3::new(-v.x, -v.y, v.z)
}
fn d_x(v: &Vec3) -> Vec3 {
    Vec3::new(v.x, -v.y, -v.z)
}
fn d_y(v: &Vec3) -> Vec3 {
    Vec3::new(-v.x, v.y, -v.z)
}

/// How far a four-vortex state sits from the chart family: the max of
/// `|w₂ - D_z w₁|`, `|w₃ - D_x w₁|`, `|w₄ - D_y w₁|`.
pub fn chart_symmetry_residual(w: &SpinState) -> f64 {
    let w1 = w.sphere(0).as_vec3();
    [
        (w.sphere(1).as_vec3() - d_z(w1)).norm(),
        (w.sphere(2).as_vec3() - d_x(w1)).norm(),
        (w.sphere(3).as_vec3() - d_y(w1)).norm(),
    ]
    .into_iter()
    .fold(0.0, f64::max)
}

/// Integrate unit-strength four-vortex dynamics with the spherical midpoint
/// method from an arbitrary start and report the chart-symmetry residual at
/// every step (including step 0).
pub fn manifold_invariance_run_from(
    w0: &SpinState,
    steps: usize,
    cfg: &StepConfig,
) -> Result<Vec<f64>> {
    let hamiltonian = point_vortices(VortexConfig::unit(4)?);
    let mut residuals = Vec::with_capacity(steps + 1);
    residuals.push(chart_symmetry_residual(w0));
    let mut current = w0.clone();
    for k in 0..steps {
        let t = k as f64 * cfg.h;
        current =
            spherical_midpoint_step(&hamiltonian, &current, t, cfg).map_err(|e| e.at_step(k))?;
        residuals.push(chart_symmetry_residual(&current));
    }
    Ok(residuals)
}

/// [`manifold_invariance_run_from`] starting on the chart at `(θ₀, φ₀)`.
pub fn manifold_invariance_run(
    theta0: f64,
    phi0: f64,
    steps: usize,
    cfg: &StepConfig,
) -> Result<Vec<f64>> {
    let w0 = vortex_manifold_chart(theta0, phi0)?;
    manifold_invariance_run_from(&w0, steps, cfg)
}
