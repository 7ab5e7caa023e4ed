//! The four batch commands: equilibrium reports, normal forms, parameter
//! sweeps, and trajectory integration.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;

use symred::dynamics::{integrate_reduced, reconstruct, write_trajectory_csv, Rotation};
use symred::equilibria::{solve_effective_potential, EquilibriumProblem, RelativeEquilibrium};
use symred::mech::{MechanicalSystem, ReducedChart, SymmetryGroup};
use symred::models::{
    lagrange_triangle_shape, pendulum_system, three_body_system, PendulumParams, ThreeBodyParams,
};
use symred::nf::normal_form;

use crate::config::{ModelSelection, RunConfig};
use crate::Failure;

/// Paper-table precision: ten decimal places, with negative zero and
/// below-resolution noise displayed as plain zero.
fn fmt10(value: f64) -> String {
    let value = if value.abs() < 5e-11 { 0.0 } else { value };
    format!("{value:.10}")
}

fn join_floats(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(", ")
}

/// Chart coordinate labels in state order.
fn coordinate_labels(system: &MechanicalSystem) -> Vec<String> {
    let fs = system.shape_dim();
    let mut labels: Vec<String> = vec!["r1".into(), "r2".into(), "phi".into()];
    debug_assert_eq!(fs, 3);
    if system.group() == SymmetryGroup::So3 {
        labels.push("u".into());
    }
    for k in 1..=fs {
        labels.push(format!("p{k}"));
    }
    if system.group() == SymmetryGroup::So3 {
        labels.push("v".into());
    }
    labels
}

fn open_output(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|err| Failure::Runtime(format!("cannot write {}: {err}", path.display())))
}

fn csv_writer(path: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(path) => Box::new(open_output(path)?),
        None => Box::new(std::io::stdout()),
    })
}

/// A located equilibrium together with the system and chart it lives on.
pub struct SolvedEquilibrium {
    pub system: MechanicalSystem,
    pub chart: ReducedChart,
    pub equilibrium: RelativeEquilibrium,
}

fn build_three_body(masses: [f64; 3], d0: f64) -> Result<(ThreeBodyParams, MechanicalSystem), Failure> {
    let params = ThreeBodyParams::new(masses, d0)?;
    let system = three_body_system(&params)?;
    Ok((params, system))
}

fn build_pendulum(
    masses: [f64; 2],
    lengths: [f64; 2],
    gravity: f64,
) -> Result<MechanicalSystem, Failure> {
    Ok(pendulum_system(&PendulumParams::new(masses, lengths, gravity)?)?)
}

/// Solve the pendulum equilibrium at `target` momentum by continuation
/// from the well-conditioned configuration at `r = 1`.
fn pendulum_equilibrium(
    system: &MechanicalSystem,
    target: f64,
) -> Result<RelativeEquilibrium, Failure> {
    let mut guess = vec![0.4, 0.5, 0.0];
    let steps = ((target - 1.0).abs() / 0.25).ceil().max(1.0) as usize;
    let mut last = None;
    for k in 1..=steps {
        let momentum = 1.0 + (target - 1.0) * k as f64 / steps as f64;
        let eq = solve_effective_potential(
            system,
            &EquilibriumProblem::FixedMomentum {
                momentum,
                guess: guess.clone(),
            },
        )?;
        guess = eq.point[..system.shape_dim()].to_vec();
        last = Some(eq);
    }
    Ok(last.expect("at least one continuation step"))
}

/// Locate the equilibrium selected by the run configuration.
pub fn solve_configured(config: &RunConfig) -> Result<SolvedEquilibrium, Failure> {
    match &config.model {
        ModelSelection::ThreeBody { masses, d0 } => {
            let b = config.require_size()?;
            let (params, system) = build_three_body(*masses, *d0)?;
            let shape = lagrange_triangle_shape(&params, b)?.shape().to_vec();
            let equilibrium =
                solve_effective_potential(&system, &EquilibriumProblem::FixedShape { shape })?;
            let chart = ReducedChart::MomentumSphere {
                radius: equilibrium.momentum,
            };
            Ok(SolvedEquilibrium {
                system,
                chart,
                equilibrium,
            })
        }
        ModelSelection::Pendulum {
            masses,
            lengths,
            gravity,
        } => {
            let r = config.require_momentum()?;
            let system = build_pendulum(*masses, *lengths, *gravity)?;
            let equilibrium = pendulum_equilibrium(&system, r)?;
            let chart = ReducedChart::FiberParameter { momentum: r };
            Ok(SolvedEquilibrium {
                system,
                chart,
                equilibrium,
            })
        }
    }
}

fn describe_model(config: &RunConfig) -> String {
    match &config.model {
        ModelSelection::ThreeBody { masses, d0 } => {
            format!("three-body (masses {}; d0 = {d0})", join_floats(masses))
        }
        ModelSelection::Pendulum {
            masses,
            lengths,
            gravity,
        } => format!(
            "pendulum (masses {}; lengths {}; gravity = {gravity})",
            join_floats(masses),
            join_floats(lengths)
        ),
    }
}

fn model_json(config: &RunConfig) -> serde_json::Value {
    match &config.model {
        ModelSelection::ThreeBody { masses, d0 } => serde_json::json!({
            "system": "three-body",
            "masses": masses,
            "d0": d0,
            "b": config.size,
        }),
        ModelSelection::Pendulum {
            masses,
            lengths,
            gravity,
        } => serde_json::json!({
            "system": "pendulum",
            "masses": masses,
            "lengths": lengths,
            "gravity": gravity,
            "r": config.momentum,
        }),
    }
}

pub fn cmd_equilibrium(config: &RunConfig) -> Result<(), Failure> {
    let solved = solve_configured(config)?;
    let eq = &solved.equilibrium;
    println!("system: {}", describe_model(config));
    if let Some(b) = config.size {
        println!("b = {b}");
    }
    println!("point:");
    for (label, value) in coordinate_labels(&solved.system).iter().zip(&eq.point) {
        println!("  {label:<3} = {}", fmt10(*value));
    }
    println!("r  = {}", fmt10(eq.momentum));
    println!("E0 = {}", fmt10(eq.energy));
    println!("frequencies (ascending):");
    for (k, omega) in eq.frequencies.iter().enumerate() {
        println!("  omega{} = {}", k + 1, fmt10(*omega));
    }
    println!(
        "elliptic: {} (residual {:.1e})",
        eq.elliptic,
        eq.residuals.max()
    );
    if let Some(path) = &config.output {
        let report = serde_json::json!({
            "model": model_json(config),
            "equilibrium": eq,
        });
        let mut out = open_output(path)?;
        serde_json::to_writer_pretty(&mut out, &report)
            .map_err(|err| Failure::Runtime(format!("cannot serialize report: {err}")))?;
        writeln!(out).map_err(|err| Failure::Runtime(err.to_string()))?;
    }
    Ok(())
}

/// `I1^2 I3`-style label of an action monomial.
fn action_label(exponents: &[u8]) -> String {
    let mut parts = Vec::new();
    for (k, &e) in exponents.iter().enumerate() {
        match e {
            0 => {}
            1 => parts.push(format!("I{}", k + 1)),
            _ => parts.push(format!("I{}^{e}", k + 1)),
        }
    }
    parts.join(" ")
}

pub fn cmd_normalform(config: &RunConfig) -> Result<(), Failure> {
    let solved = solve_configured(config)?;
    let jet = solved.system.reduced_hamiltonian(
        &solved.chart,
        &solved.equilibrium.point,
        config.order,
    )?;
    let nf = normal_form(
        &jet,
        &vec![0.0; 2 * solved.system.dof()],
        config.order,
        config.resonance_tol,
    )?;

    println!("system: {}", describe_model(config));
    println!("E0 = {}", fmt10(nf.e0));
    println!("frequencies (ascending):");
    for (k, omega) in nf.frequencies.iter().enumerate() {
        println!("  omega{} = {}", k + 1, fmt10(*omega));
    }
    println!("normal form through degree {} in the actions I_k = (q_k^2 + p_k^2)/2:", nf.order);
    // Paper layout: degree by degree, leading mode first within a degree.
    let mut terms: Vec<(&Vec<u8>, &f64)> = nf.action_terms.iter().collect();
    terms.sort_by(|a, b| {
        let da: u32 = a.0.iter().map(|&e| u32::from(e)).sum();
        let db: u32 = b.0.iter().map(|&e| u32::from(e)).sum();
        da.cmp(&db).then_with(|| b.0.cmp(a.0))
    });
    for (exponents, coefficient) in terms {
        println!("  {:<10} {}", action_label(exponents), fmt10(*coefficient));
    }
    if !nf.resonant_terms.is_empty() {
        println!(
            "resonant terms kept in the normal form (denominator below {:.1e}):",
            config.resonance_tol
        );
        for term in &nf.resonant_terms {
            let f = term.exponents.len() / 2;
            let combination: Vec<i64> = (0..f)
                .map(|k| i64::from(term.exponents[k]) - i64::from(term.exponents[f + k]))
                .collect();
            let magnitude =
                (term.coefficient.0.powi(2) + term.coefficient.1.powi(2)).sqrt();
            println!(
                "  m = {combination:?}  |coefficient| = {}  denominator = {:.1e}",
                fmt10(magnitude),
                term.denominator
            );
        }
    }
    println!("resonance margin: {:.6e}", nf.resonance_margin);

    if let Some(path) = &config.output {
        let mut out = open_output(path)?;
        serde_json::to_writer_pretty(&mut out, &nf.record())
            .map_err(|err| Failure::Runtime(format!("cannot serialize normal form: {err}")))?;
        writeln!(out).map_err(|err| Failure::Runtime(err.to_string()))?;
    }
    Ok(())
}

pub fn cmd_sweep(config: &RunConfig) -> Result<(), Failure> {
    let range = config
        .range
        .ok_or_else(|| Failure::Usage("sweep needs a --b or --r range".to_string()))?;
    let values = range.values();
    let mut out = csv_writer(config.output.as_deref())?;
    match &config.model {
        ModelSelection::ThreeBody { masses, d0 } => {
            let (params, system) = build_three_body(*masses, *d0)?;
            writeln!(out, "b,r,v_eff").map_err(|err| Failure::Runtime(err.to_string()))?;
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(config.jobs)
                .build()
                .map_err(|err| Failure::Runtime(format!("cannot start worker pool: {err}")))?;
            // Sizes without a balancing momentum (the repulsive regime of
            // the pair potential) have no row, exactly as the equilibrium
            // curve has no point there.
            let rows: Result<Vec<Option<String>>, Failure> = pool.install(|| {
                values
                    .par_iter()
                    .map(|&b| {
                        let shape = lagrange_triangle_shape(&params, b)?.shape().to_vec();
                        match solve_effective_potential(
                            &system,
                            &EquilibriumProblem::FixedShape { shape },
                        ) {
                            Ok(eq) => Ok(Some(format!("{b},{},{}", eq.momentum, eq.energy))),
                            Err(symred::Error::NoEquilibrium { .. }) => Ok(None),
                            Err(err) => Err(err.into()),
                        }
                    })
                    .collect()
            });
            let rows = rows?;
            let missing = rows.iter().filter(|row| row.is_none()).count();
            if missing > 0 {
                eprintln!(
                    "note: no relative equilibrium at {missing} of {} sweep points (rows omitted)",
                    rows.len()
                );
            }
            for row in rows.into_iter().flatten() {
                writeln!(out, "{row}").map_err(|err| Failure::Runtime(err.to_string()))?;
            }
        }
        ModelSelection::Pendulum {
            masses,
            lengths,
            gravity,
        } => {
            let system = build_pendulum(*masses, *lengths, *gravity)?;
            let headers: Vec<String> =
                (1..=system.dof()).map(|k| format!("omega{k}")).collect();
            writeln!(out, "r,{}", headers.join(","))
                .map_err(|err| Failure::Runtime(err.to_string()))?;
            // The shape solves continue one another, so this sweep is
            // sequential regardless of --jobs.
            let mut guess: Option<Vec<f64>> = None;
            for &r in &values {
                let eq = match &guess {
                    None => pendulum_equilibrium(&system, r)?,
                    Some(shape) => solve_effective_potential(
                        &system,
                        &EquilibriumProblem::FixedMomentum {
                            momentum: r,
                            guess: shape.clone(),
                        },
                    )?,
                };
                guess = Some(eq.point[..system.shape_dim()].to_vec());
                let omegas: Vec<String> =
                    eq.frequencies.iter().map(|w| w.to_string()).collect();
                writeln!(out, "{r},{}", omegas.join(","))
                    .map_err(|err| Failure::Runtime(err.to_string()))?;
            }
        }
    }
    out.flush().map_err(|err| Failure::Runtime(err.to_string()))?;
    Ok(())
}

pub fn cmd_integrate(config: &RunConfig) -> Result<(), Failure> {
    let dt = config
        .time_step
        .ok_or_else(|| Failure::Usage("integrate needs --dt".to_string()))?;
    let horizon = config
        .horizon
        .ok_or_else(|| Failure::Usage("integrate needs --t-final".to_string()))?;
    let solved = solve_configured(config)?;
    if config.reconstruct && solved.system.group() != SymmetryGroup::So3 {
        return Err(Failure::Usage(
            "--reconstruct applies to the SO(3) three-body system only".to_string(),
        ));
    }
    let state = match &config.initial_state {
        Some(state) => {
            let expected = 2 * solved.system.dof();
            if state.len() != expected {
                return Err(Failure::Usage(format!(
                    "--state needs {expected} values, got {}",
                    state.len()
                )));
            }
            state.clone()
        }
        None => solved.equilibrium.point.clone(),
    };
    let trajectory = integrate_reduced(&solved.system, &solved.chart, &state, dt, horizon)?;
    if trajectory.truncated {
        let reached = trajectory.samples.last().map_or(0.0, |s| s.time);
        eprintln!(
            "warning: trajectory truncated at t = {reached} (chart boundary or inadmissible shape)"
        );
    }
    let rotations = if config.reconstruct {
        Some(reconstruct(
            &solved.system,
            &trajectory,
            &Rotation::identity(),
        )?)
    } else {
        None
    };
    let mut out = csv_writer(config.output.as_deref())?;
    write_trajectory_csv(&mut out, &trajectory, rotations.as_deref())?;
    out.flush().map_err(|err| Failure::Runtime(err.to_string()))?;
    Ok(())
}
