//! Named systems, presets, and state parsing for the command line.

use std::f64::consts::PI;

use spinstep::error::{Error, Result};
use spinstep::geometry::{AmbientState, SpinState, Vec3};
use spinstep::systems::{
    forced_rigid_body, free_rigid_body, heisenberg_chain, irreversible_rigid_body, point_vortices,
    InertiaDiag, SpinHamiltonian, VortexConfig,
};

/// Everything needed to instantiate a named spin system.
#[derive(Debug, Clone, Default)]
pub struct SystemOpts {
    pub system: Option<String>,
    pub preset: Option<String>,
    pub inertia: Option<String>,
    pub sigma: Option<f64>,
    pub epsilon: Option<f64>,
    pub strengths: Option<String>,
    pub spins: Option<usize>,
    pub w0: Option<String>,
}

/// A resolved run target: the Hamiltonian plus a validated initial state.
pub struct ResolvedSystem {
    pub name: String,
    pub hamiltonian: SpinHamiltonian,
    pub initial: AmbientState,
    pub period: Option<f64>,
}

pub fn parse_reals(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|part| {
            part.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidParameter(format!("cannot parse real '{part}'")))
        })
        .collect()
}

pub fn parse_state(text: &str) -> Result<AmbientState> {
    let values = parse_reals(text)?;
    if values.is_empty() || values.len() % 3 != 0 {
        return Err(Error::InvalidParameter(format!(
            "state needs 3n comma-separated components, got {}",
            values.len()
        )));
    }
    Ok(AmbientState::from_flat(&values))
}

fn parse_inertia(text: &str) -> Result<InertiaDiag> {
    let values = parse_reals(text)?;
    if values.len() != 3 {
        return Err(Error::InvalidParameter(format!(
            "inertia needs exactly 3 moments, got {}",
            values.len()
        )));
    }
    InertiaDiag::new(values[0], values[1], values[2])
}

/// Deterministic default initial data per system.
fn golden_spiral(n: usize) -> AmbientState {
    let golden = PI * (3.0 - 5.0_f64.sqrt());
    AmbientState::new(
        (0..n)
            .map(|i| {
                let z = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
                let r = (1.0 - z * z).sqrt();
                let phi = golden * i as f64;
                Vec3::new(r * phi.cos(), r * phi.sin(), z)
            })
            .collect(),
    )
}

fn tilted_circle(n: usize) -> AmbientState {
    AmbientState::new(
        (0..n)
            .map(|i| {
                let theta = 2.0 * PI * i as f64 / n as f64;
                let raw = Vec3::new(theta.cos(), theta.sin(), 0.2 * (2.0 * theta).cos());
                raw / raw.norm()
            })
            .collect(),
    )
}

fn fig2_w0() -> AmbientState {
    AmbientState::new(vec![Vec3::new(1.1_f64.cos(), 0.0, 1.1_f64.sin())])
}

fn fig3_w0() -> AmbientState {
    let raw = Vec3::new(0.0, 0.7248, -0.6889);
    AmbientState::new(vec![raw / raw.norm()])
}

fn forced_w0() -> AmbientState {
    AmbientState::new(vec![Vec3::new(0.8, 0.0, 0.6)])
}

impl SystemOpts {
    /// Resolve preset/system/parameter flags into a runnable system.
    pub fn resolve(&self) -> Result<ResolvedSystem> {
        let mut opts = self.clone();
        if let Some(preset) = opts.preset.as_deref() {
            match preset {
                "rb-fig2" => {
                    opts.system.get_or_insert_with(|| "rb".into());
                    opts.inertia.get_or_insert_with(|| "1,2,4".into());
                }
                "irrev-fig3" => {
                    opts.system.get_or_insert_with(|| "irreversible-rb".into());
                    opts.inertia.get_or_insert_with(|| "1,2,4".into());
                    opts.sigma.get_or_insert(2.0 / 3.0);
                }
                "forced-rb" => {
                    opts.system.get_or_insert_with(|| "forced-rb".into());
                    opts.inertia.get_or_insert_with(|| "1,1.3333333333333333,2".into());
                    opts.epsilon.get_or_insert(0.07);
                }
                other => {
                    return Err(Error::InvalidParameter(format!(
                        "unknown preset '{other}' (expected rb-fig2, irrev-fig3, forced-rb)"
                    )))
                }
            }
        }
        let system = opts.system.as_deref().ok_or_else(|| {
            Error::InvalidParameter("no system given: use --system or --preset".into())
        })?;

        let (name, hamiltonian, default_w0, period): (&str, SpinHamiltonian, AmbientState, Option<f64>) =
            match system {
                "rb" => {
                    let inertia = parse_inertia(opts.inertia.as_deref().unwrap_or("1,2,4"))?;
                    ("rb", free_rigid_body(inertia), fig2_w0(), None)
                }
                "irreversible-rb" => {
                    let inertia = parse_inertia(opts.inertia.as_deref().unwrap_or("1,2,4"))?;
                    let sigma = opts.sigma.unwrap_or(2.0 / 3.0);
                    (
                        "irreversible-rb",
                        irreversible_rigid_body(inertia, sigma)?,
                        fig3_w0(),
                        None,
                    )
                }
                "forced-rb" => {
                    let inertia =
                        parse_inertia(opts.inertia.as_deref().unwrap_or("1,1.3333333333333333,2"))?;
                    let epsilon = opts.epsilon.unwrap_or(0.07);
                    (
                        "forced-rb",
                        forced_rigid_body(inertia, epsilon),
                        forced_w0(),
                        Some(2.0 * PI),
                    )
                }
                "vortices" => {
                    let cfg = match (&opts.strengths, opts.spins) {
                        (Some(text), _) => VortexConfig::new(parse_reals(text)?)?,
                        (None, Some(n)) => VortexConfig::unit(n)?,
                        (None, None) => VortexConfig::unit(4)?,
                    };
                    let n = cfg.len();
                    ("vortices", point_vortices(cfg), golden_spiral(n), None)
                }
                "chain" => {
                    let n = opts.spins.unwrap_or(100);
                    ("chain", heisenberg_chain(n)?, tilted_circle(n), None)
                }
                other => {
                    return Err(Error::InvalidParameter(format!(
                        "unknown system '{other}' (see `spinstep list-systems`)"
                    )))
                }
            };

        let initial = match (opts.w0.as_deref(), opts.preset.as_deref()) {
            (Some(text), _) => parse_state(text)?,
            (None, Some("rb-fig2")) => fig2_w0(),
            (None, Some("irrev-fig3")) => fig3_w0(),
            (None, Some("forced-rb")) => forced_w0(),
            (None, _) => default_w0,
        };
        if initial.len() != hamiltonian.spheres() {
            return Err(Error::InvalidParameter(format!(
                "initial state has {} spheres but system '{}' needs {}",
                initial.len(),
                name,
                hamiltonian.spheres()
            )));
        }

        Ok(ResolvedSystem {
            name: name.to_string(),
            hamiltonian,
            initial,
            period,
        })
    }

    /// Initial state renormalized onto the sphere product (raw-real policy).
    pub fn resolve_on_sphere(&self) -> Result<(ResolvedSystem, SpinState)> {
        let resolved = self.resolve()?;
        let spin = SpinState::from_vectors(resolved.initial.components())?;
        Ok((resolved, spin))
    }
}

pub fn list_systems_text() -> String {
    let mut out = String::new();
    out.push_str("systems:\n");
    out.push_str("  rb               free rigid body; params: --inertia I1,I2,I3 (default 1,2,4); 1 sphere\n");
    out.push_str("  irreversible-rb  direction-dependent inertia; params: --inertia (default 1,2,4), --sigma (default 2/3 = 0.6666666666666666, |sigma| < 1); 1 sphere\n");
    out.push_str("  forced-rb        periodic loading, period 2*pi; params: --inertia (default 1,4/3,2), --epsilon (default 0.07); 1 sphere\n");
    out.push_str("  vortices         point vortices on the sphere; params: --strengths k1,k2,... (default kappa_i = 1) or --spins N (default 4)\n");
    out.push_str("  chain            periodic Heisenberg spin chain; params: --spins N (default 100)\n");
    out.push_str("  lagrange         Nambu system C = (w1^2 - w2^2)/2, H = (w1^2 - w3^2)/2 (see `spinstep nambu`)\n");
    out.push_str("presets:\n");
    out.push_str("  rb-fig2          rb with I = (1, 2, 4), w0 = (cos 1.1, 0, sin 1.1)\n");
    out.push_str("  irrev-fig3       irreversible-rb with I = (1, 2, 4), sigma = 2/3, w0 = (0, 0.7248, -0.6889) renormalized\n");
    out.push_str("  forced-rb        forced-rb with I = (1, 4/3, 2), epsilon = 0.07, w0 = (0.8, 0, 0.6)\n");
    out.push_str("methods: spherical (default), classical, extended\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_resolve_to_expected_systems() {
        let opts = SystemOpts {
            preset: Some("rb-fig2".into()),
            ..Default::default()
        };
        let resolved = opts.resolve().unwrap();
        assert_eq!(resolved.name, "rb");
        assert_eq!(resolved.hamiltonian.spheres(), 1);
        assert!((resolved.initial.component(0).norm() - 1.0).abs() < 1e-12);

        let opts = SystemOpts {
            preset: Some("irrev-fig3".into()),
            ..Default::default()
        };
        let resolved = opts.resolve().unwrap();
        assert_eq!(resolved.name, "irreversible-rb");
        assert!((resolved.initial.component(0).norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn arity_is_validated_before_running() {
        let opts = SystemOpts {
            system: Some("rb".into()),
            w0: Some("1,0,0,0,1,0".into()),
            ..Default::default()
        };
        assert!(opts.resolve().is_err());

        let opts = SystemOpts {
            system: Some("chain".into()),
            spins: Some(4),
            w0: Some("1,0,0,0,1,0".into()),
            ..Default::default()
        };
        assert!(opts.resolve().is_err());
    }

    #[test]
    fn default_states_are_valid() {
        for system in ["rb", "irreversible-rb", "forced-rb", "vortices", "chain"] {
            let opts = SystemOpts {
                system: Some(system.into()),
                ..Default::default()
            };
            let (resolved, spin) = opts.resolve_on_sphere().unwrap();
            assert_eq!(spin.len(), resolved.hamiltonian.spheres());
            // the default state is in the Hamiltonian's domain
            resolved
                .hamiltonian
                .value(&spin.to_ambient(), 0.0)
                .unwrap();
        }
    }

    #[test]
    fn state_parsing_rejects_garbage() {
        assert!(parse_state("1,2").is_err());
        assert!(parse_state("a,b,c").is_err());
        assert!(parse_state("1,0,0").is_ok());
    }
}
