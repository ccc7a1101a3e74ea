//! Command-line experiment runner for the spinstep integrators.
//!
//! Exit codes: 0 on success, 2 on numerical failure (non-convergence,
//! degenerate configurations), 3 on invalid input. All output files are
//! deterministic for a given invocation (plus `--seed` where randomness is
//! involved; `SPINSTEP_SEED` overrides the default seed).

mod runspec;

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use spinstep::diagnostics::{
    self, check_poisson_preservation, compare_methods, convergence_order,
    manifold_invariance_run, manifold_tangency_residual, poincare_section, PoissonCheck, StepMap,
};
use spinstep::error::Error;
use spinstep::geometry::{RotationTuple, Vec3};
use spinstep::integrators::{integrate, Method, StepConfig, Trajectory};
use spinstep::nambu::{nambu_midpoint_step, NambuSystem};

use runspec::{parse_state, SystemOpts};

#[derive(Parser)]
#[command(name = "spinstep", version, about = "Structure-preserving integrators on products of spheres")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List the named systems, their parameters, and presets
    ListSystems,
    /// Integrate a named system and emit a trajectory CSV (t,w1x,...,H)
    Integrate(IntegrateArgs),
    /// Compare methods against a fine reference at one or more step sizes
    Compare(CompareArgs),
    /// Fit the convergence order of a method over a list of step sizes
    Convergence(ConvergenceArgs),
    /// Stroboscopic section of a periodically forced system
    Poincare(PoincareArgs),
    /// Run structure checks and emit report lines (name,max_violation,tolerance,pass)
    Diagnose(DiagnoseArgs),
    /// Four-vortex invariant-manifold data (tangency grid or invariance run)
    VortexManifold(VortexManifoldArgs),
    /// Integrate a Nambu system on a Casimir level set (t,wx,wy,wz,C,H)
    Nambu(NambuArgs),
}

#[derive(Args, Clone)]
struct SystemArgs {
    /// System name: rb, irreversible-rb, forced-rb, vortices, chain
    #[arg(long)]
    system: Option<String>,
    /// Preset: rb-fig2, irrev-fig3, forced-rb
    #[arg(long)]
    preset: Option<String>,
    /// Inertia moments I1,I2,I3
    #[arg(long)]
    inertia: Option<String>,
    /// Irreversibility parameter (|sigma| < 1)
    #[arg(long)]
    sigma: Option<f64>,
    /// Forcing amplitude
    #[arg(long)]
    epsilon: Option<f64>,
    /// Vortex strengths k1,k2,...
    #[arg(long)]
    strengths: Option<String>,
    /// Sphere count for vortices/chain
    #[arg(long)]
    spins: Option<usize>,
    /// Initial state as 3n comma-separated components (renormalized per sphere
    /// for the spherical method)
    #[arg(long)]
    w0: Option<String>,
}

impl SystemArgs {
    fn to_opts(&self) -> SystemOpts {
        SystemOpts {
            system: self.system.clone(),
            preset: self.preset.clone(),
            inertia: self.inertia.clone(),
            sigma: self.sigma,
            epsilon: self.epsilon,
            strengths: self.strengths.clone(),
            spins: self.spins,
            w0: self.w0.clone(),
        }
    }
}

#[derive(Args, Clone)]
struct SolverArgs {
    /// Max-norm residual tolerance of the implicit solver
    #[arg(long, default_value_t = 1e-13)]
    solver_tol: f64,
    /// Iteration budget (fixed point, and again for Newton)
    #[arg(long, default_value_t = 100)]
    max_iterations: usize,
    /// Disable the damped-Newton fallback
    #[arg(long)]
    no_newton: bool,
}

impl SolverArgs {
    fn config(&self, h: f64) -> Result<StepConfig, Error> {
        Ok(StepConfig::new(h)?
            .with_solver_tol(self.solver_tol)?
            .with_max_iterations(self.max_iterations)?
            .with_newton_fallback(!self.no_newton))
    }
}

#[derive(Args)]
struct IntegrateArgs {
    #[command(flatten)]
    system: SystemArgs,
    #[command(flatten)]
    solver: SolverArgs,
    /// Step size
    #[arg(long)]
    h: f64,
    /// Number of steps
    #[arg(long, default_value_t = 1000)]
    steps: usize,
    /// Initial time
    #[arg(long, default_value_t = 0.0)]
    t0: f64,
    /// Method: spherical, classical, extended
    #[arg(long, default_value = "spherical")]
    method: String,
    /// Output path (stdout when absent)
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    system: SystemArgs,
    #[command(flatten)]
    solver: SolverArgs,
    /// Step size; repeat for a sweep
    #[arg(long = "h", required = true)]
    h_list: Vec<f64>,
    /// Total time of the comparison window
    #[arg(long, default_value_t = 10.0)]
    time: f64,
    /// Method to include; repeat (default: spherical and classical)
    #[arg(long = "method")]
    methods: Vec<String>,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct ConvergenceArgs {
    #[command(flatten)]
    system: SystemArgs,
    #[command(flatten)]
    solver: SolverArgs,
    /// Step size; repeat (at least two)
    #[arg(long = "h", required = true)]
    h_list: Vec<f64>,
    #[arg(long, default_value_t = 10.0)]
    time: f64,
    #[arg(long, default_value = "spherical")]
    method: String,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct PoincareArgs {
    #[command(flatten)]
    system: SystemArgs,
    #[command(flatten)]
    solver: SolverArgs,
    /// Steps per forcing period
    #[arg(long, default_value_t = 20)]
    steps_per_period: usize,
    /// Number of forcing periods to sample
    #[arg(long, default_value_t = 500)]
    periods: usize,
    #[arg(long, default_value_t = 0.0)]
    t0: f64,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct DiagnoseArgs {
    #[command(flatten)]
    system: SystemArgs,
    #[command(flatten)]
    solver: SolverArgs,
    /// Check to run: poisson, structural, conservation
    #[arg(long)]
    check: String,
    /// Step size of the probed map / run
    #[arg(long, default_value_t = 0.1)]
    h: f64,
    /// Random trials (covector pairs or states)
    #[arg(long, default_value_t = 50)]
    trials: usize,
    /// Finite-difference delta for map Jacobians
    #[arg(long, default_value_t = 1e-5)]
    fd_delta: f64,
    /// Steps for the conservation run
    #[arg(long, default_value_t = 1000)]
    steps: usize,
    /// Pass/fail tolerance for the conservation report
    #[arg(long, default_value_t = 1e-10)]
    tolerance: f64,
    /// RNG seed (SPINSTEP_SEED overrides the default)
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct VortexManifoldArgs {
    #[command(flatten)]
    solver: SolverArgs,
    /// Check to run: tangency, invariance
    #[arg(long)]
    check: String,
    /// Grid resolution per axis for the tangency check
    #[arg(long, default_value_t = 20)]
    grid: usize,
    #[arg(long, default_value_t = 1.0)]
    theta: f64,
    #[arg(long, default_value_t = 0.7)]
    phi: f64,
    #[arg(long, default_value_t = 0.1)]
    h: f64,
    #[arg(long, default_value_t = 1000)]
    steps: usize,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct NambuArgs {
    #[command(flatten)]
    solver: SolverArgs,
    /// Nambu system name (lagrange)
    #[arg(long, default_value = "lagrange")]
    system: String,
    /// Initial point x,y,z (must sit on the Casimir level set)
    #[arg(long, default_value = "2,1,-1")]
    w0: String,
    #[arg(long, default_value_t = 0.05)]
    h: f64,
    /// Number of steps. Lagrange orbits are scattering or separatrix type;
    /// runs much past t = 15 leave the representable part of the leaf.
    #[arg(long, default_value_t = 300)]
    steps: usize,
    #[arg(long)]
    output: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            use clap::error::ErrorKind;
            let _ = err.print();
            return match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(3),
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Numerics(err)) => {
            eprintln!("error: {err}");
            if err.is_numerical() {
                ExitCode::from(2)
            } else {
                ExitCode::from(3)
            }
        }
        Err(CliError::Io(err)) => {
            eprintln!("error: {err}");
            ExitCode::from(3)
        }
    }
}

enum CliError {
    Numerics(Error),
    Io(std::io::Error),
}

impl From<Error> for CliError {
    fn from(err: Error) -> Self {
        CliError::Numerics(err)
    }
}

impl From<std::io::Error> for CliError {
    fn from(err: std::io::Error) -> Self {
        CliError::Io(err)
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::ListSystems => {
            print!("{}", runspec::list_systems_text());
            Ok(())
        }
        Command::Integrate(args) => cmd_integrate(args),
        Command::Compare(args) => cmd_compare(args),
        Command::Convergence(args) => cmd_convergence(args),
        Command::Poincare(args) => cmd_poincare(args),
        Command::Diagnose(args) => cmd_diagnose(args),
        Command::VortexManifold(args) => cmd_vortex_manifold(args),
        Command::Nambu(args) => cmd_nambu(args),
    }
}

fn emit(output: Option<&PathBuf>, content: &str) -> Result<(), CliError> {
    match output {
        Some(path) => std::fs::write(path, content)?,
        None => print!("{content}"),
    }
    Ok(())
}

fn parse_method(name: &str) -> Result<Method, Error> {
    name.parse()
}

fn trajectory_csv(traj: &Trajectory) -> String {
    let n = traj.sphere_count();
    let mut out = String::from("t");
    for i in 1..=n {
        let _ = write!(out, ",w{i}x,w{i}y,w{i}z");
    }
    out.push_str(",H\n");
    for (k, state) in traj.states.iter().enumerate() {
        let _ = write!(out, "{}", traj.times[k]);
        for v in state.iter() {
            let _ = write!(out, ",{},{},{}", v.x, v.y, v.z);
        }
        match &traj.energies {
            Some(list) => {
                let _ = writeln!(out, ",{}", list[k]);
            }
            None => out.push('\n'),
        }
    }
    out
}

fn cmd_integrate(args: IntegrateArgs) -> Result<(), CliError> {
    let method = parse_method(&args.method)?;
    let cfg = args.solver.config(args.h)?;
    let resolved;
    let initial = match method {
        Method::Spherical => {
            let (r, spin) = args.system.to_opts().resolve_on_sphere()?;
            resolved = r;
            spin.to_ambient()
        }
        _ => {
            resolved = args.system.to_opts().resolve()?;
            resolved.initial.clone()
        }
    };
    let traj = integrate(
        &resolved.hamiltonian,
        &initial,
        args.t0,
        &cfg,
        args.steps,
        method,
        true,
    )?;
    emit(args.output.as_ref(), &trajectory_csv(&traj))
}

fn cmd_compare(args: CompareArgs) -> Result<(), CliError> {
    let (resolved, spin) = args.system.to_opts().resolve_on_sphere()?;
    let methods = if args.methods.is_empty() {
        vec![Method::Spherical, Method::Classical]
    } else {
        args.methods
            .iter()
            .map(|m| parse_method(m))
            .collect::<Result<Vec<_>, _>>()?
    };
    let mut out = String::from("h,method,max_error\n");
    for &h in &args.h_list {
        let table = compare_methods(
            &resolved.hamiltonian,
            &spin.to_ambient(),
            0.0,
            args.time,
            h,
            &methods,
            args.solver.solver_tol,
        )?;
        for (method, err) in table {
            let _ = writeln!(out, "{h},{},{err}", method.name());
        }
    }
    emit(args.output.as_ref(), &out)
}

fn cmd_convergence(args: ConvergenceArgs) -> Result<(), CliError> {
    if args.h_list.len() < 2 {
        return Err(Error::InvalidParameter("convergence needs at least two --h values".into()).into());
    }
    let method = parse_method(&args.method)?;
    let (resolved, spin) = args.system.to_opts().resolve_on_sphere()?;
    let study = convergence_order(
        &resolved.hamiltonian,
        &spin.to_ambient(),
        0.0,
        args.time,
        &args.h_list,
        method,
        args.solver.solver_tol,
    )?;
    let mut out = String::from("h,max_error\n");
    for (h, err) in &study.errors {
        let _ = writeln!(out, "{h},{err}");
    }
    emit(args.output.as_ref(), &out)?;
    eprintln!("slope = {}", study.slope);
    Ok(())
}

fn cmd_poincare(args: PoincareArgs) -> Result<(), CliError> {
    let mut opts = args.system.to_opts();
    if opts.system.is_none() && opts.preset.is_none() {
        opts.preset = Some("forced-rb".into());
    }
    let (resolved, spin) = opts.resolve_on_sphere()?;
    let period = resolved.period.ok_or_else(|| {
        Error::InvalidParameter(format!(
            "system '{}' is not time-periodic; poincare needs forced-rb",
            resolved.name
        ))
    })?;
    let cfg = args.solver.config(period / args.steps_per_period as f64)?;
    let section = poincare_section(
        &resolved.hamiltonian,
        &spin,
        period,
        args.steps_per_period,
        args.periods,
        args.t0,
        &cfg,
    )?;
    let mut out = String::from("w1x,w1y,w1z\n");
    for state in &section {
        let v = state.sphere(0).as_vec3();
        let _ = writeln!(out, "{},{},{}", v.x, v.y, v.z);
    }
    emit(args.output.as_ref(), &out)
}

fn resolve_seed(flag: Option<u64>) -> u64 {
    flag.or_else(|| {
        std::env::var("SPINSTEP_SEED")
            .ok()
            .and_then(|s| s.parse().ok())
    })
    .unwrap_or(0)
}

fn cmd_diagnose(args: DiagnoseArgs) -> Result<(), CliError> {
    use rand::SeedableRng;
    let seed = resolve_seed(args.seed);
    let (resolved, spin) = args.system.to_opts().resolve_on_sphere()?;
    let cfg = args.solver.config(args.h)?;
    let mut out = String::from("name,max_violation,tolerance,pass\n");

    match args.check.as_str() {
        "poisson" => {
            let map = StepMap::spherical(&resolved.hamiltonian, 0.0, cfg);
            let report = check_poisson_preservation(
                &map,
                &spin.to_ambient(),
                &PoissonCheck {
                    trials: args.trials,
                    fd_delta: args.fd_delta,
                    seed,
                    tolerance: 1e-6,
                },
            )?;
            let _ = writeln!(out, "{report}");
        }
        "structural" => {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let tolerance = 10.0 * cfg.solver_tol;
            let n = resolved.hamiltonian.spheres();
            let mut worst = [0.0_f64; 3];
            let mut done = 0;
            while done < args.trials {
                let w = diagnostics::random_spin_state(n, &mut rng);
                let g = RotationTuple::random(n, &mut rng);
                let adjoint = match diagnostics::self_adjoint_residual(
                    &resolved.hamiltonian,
                    &w.to_ambient(),
                    0.0,
                    &cfg,
                    Method::Spherical,
                ) {
                    Ok(r) => r,
                    Err(_) => continue,
                };
                let equivariance = match diagnostics::equivariance_residual(
                    &resolved.hamiltonian,
                    &w,
                    &g,
                    0.0,
                    &cfg,
                ) {
                    Ok(r) => r,
                    Err(_) => continue,
                };
                let extension = match diagnostics::extension_independence_residual(
                    &resolved.hamiltonian,
                    &w,
                    0.0,
                    &cfg,
                    0,
                    1.7,
                ) {
                    Ok(r) => r,
                    Err(_) => continue,
                };
                worst[0] = worst[0].max(adjoint);
                worst[1] = worst[1].max(equivariance);
                worst[2] = worst[2].max(extension);
                done += 1;
            }
            for (name, value) in ["self-adjoint", "equivariance", "extension-independence"]
                .iter()
                .zip(worst)
            {
                let report =
                    diagnostics::DiagnosticReport::new(*name, value, tolerance, "");
                let _ = writeln!(out, "{report}");
            }
        }
        "conservation" => {
            let traj = integrate(
                &resolved.hamiltonian,
                &spin.to_ambient(),
                0.0,
                &cfg,
                args.steps,
                Method::Spherical,
                !resolved.hamiltonian.time_dependent(),
            )?;
            let mut integrals = Vec::new();
            if !resolved.hamiltonian.time_dependent() {
                let h = resolved.hamiltonian.clone();
                integrals.push(diagnostics::NamedIntegral::new("energy", move |w| {
                    h.value(w, 0.0).unwrap_or(f64::NAN)
                }));
            }
            let n = resolved.hamiltonian.spheres();
            integrals.push(diagnostics::NamedIntegral::new("max-radius-sq", move |w| {
                (0..n)
                    .map(|i| w.component(i).norm_squared())
                    .fold(0.0, f64::max)
            }));
            integrals.push(diagnostics::NamedIntegral::new("total-spin-x", |w| {
                w.iter().map(|v| v.x).sum()
            }));
            let report = diagnostics::conservation_report(
                format!("conservation-{}", resolved.name),
                &traj,
                &integrals,
                args.tolerance,
            );
            let _ = writeln!(out, "{report}");
        }
        other => {
            return Err(Error::InvalidParameter(format!(
                "unknown check '{other}' (expected poisson, structural, conservation)"
            ))
            .into())
        }
    }
    emit(args.output.as_ref(), &out)
}

fn cmd_vortex_manifold(args: VortexManifoldArgs) -> Result<(), CliError> {
    match args.check.as_str() {
        "tangency" => {
            let grid = args.grid.max(1);
            let mut out = String::from("theta,phi,residual\n");
            for i in 0..grid {
                for j in 0..grid {
                    let theta = std::f64::consts::PI * (i as f64 + 0.5) / grid as f64;
                    let phi = 2.0 * std::f64::consts::PI * (j as f64 + 0.5) / grid as f64;
                    let residual = manifold_tangency_residual(theta, phi)?;
                    let _ = writeln!(out, "{theta},{phi},{residual}");
                }
            }
            emit(args.output.as_ref(), &out)
        }
        "invariance" => {
            let cfg = args.solver.config(args.h)?;
            let residuals = manifold_invariance_run(args.theta, args.phi, args.steps, &cfg)?;
            let mut out = String::from("t,residual\n");
            for (k, r) in residuals.iter().enumerate() {
                let _ = writeln!(out, "{},{r}", k as f64 * args.h);
            }
            emit(args.output.as_ref(), &out)
        }
        other => Err(Error::InvalidParameter(format!(
            "unknown check '{other}' (expected tangency, invariance)"
        ))
        .into()),
    }
}

fn cmd_nambu(args: NambuArgs) -> Result<(), CliError> {
    if args.system != "lagrange" {
        return Err(Error::InvalidParameter(format!(
            "unknown Nambu system '{}' (expected lagrange)",
            args.system
        ))
        .into());
    }
    let w0_state = parse_state(&args.w0)?;
    if w0_state.len() != 1 {
        return Err(
            Error::InvalidParameter("nambu takes a single 3-component state".into()).into(),
        );
    }
    let w0: Vec3 = *w0_state.component(0);
    // The level is taken from the initial point.
    let probe = NambuSystem::lagrange(1.0)?;
    let level = probe.casimir(&w0);
    let sys = NambuSystem::lagrange(level)?;
    let cfg = args.solver.config(args.h)?;

    let mut out = String::from("t,wx,wy,wz,C,H\n");
    let mut w = w0;
    for k in 0..=args.steps {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            k as f64 * args.h,
            w.x,
            w.y,
            w.z,
            sys.casimir(&w),
            sys.hamiltonian(&w)
        );
        if k == args.steps {
            break;
        }
        w = nambu_midpoint_step(&sys, &w, &cfg).map_err(|e| e.at_step(k))?;
    }
    emit(args.output.as_ref(), &out)
}
