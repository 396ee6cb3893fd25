//! The experiment subcommands: steady, transient, sweep, signature, verify.

use std::path::Path;

use qhe_core::analysis::{
    equivalence_sweep, overthermalization_sweep, signature_test, verify_suite, DephasingSpec,
    SweepResult,
};
use qhe_core::liouville::{unvectorize, LiouvilleVector};
use qhe_core::model::{validate_regime, EngineModel, ScheduleParams};
use qhe_core::protocol::{schedule_for, EngineKind, PropagationMode};
use qhe_core::thermo::{evolve_transient, steady_cycle_ledger, CycleLedger, SteadyState};

use crate::config::{parse_engines, RunConfig};
use crate::output::{write_json_value, Cell, Table};
use crate::AppError;

fn numerical(e: qhe_core::Error) -> AppError {
    AppError::Numerical(e.to_string())
}

fn print_warnings(model: &EngineModel, m: f64) {
    for warning in validate_regime(model, &ScheduleParams { m }) {
        eprintln!("warning: {warning}");
    }
}

// Runs one engine at the configured dephasing and returns its steady state
// and per-cycle ledger.
fn steady_run(
    model: &EngineModel,
    kind: EngineKind,
    tau_cyc: f64,
    dephasing: DephasingSpec,
) -> Result<(SteadyState, CycleLedger), AppError> {
    let sched = schedule_for(kind, tau_cyc).map_err(numerical)?;
    match dephasing {
        DephasingSpec::None => {
            let gens = model.generators().map_err(numerical)?;
            steady_cycle_ledger(&sched, &gens, PropagationMode::Coherent).map_err(numerical)
        }
        DephasingSpec::Rate(rate) => {
            let gens = model
                .generators()
                .and_then(|g| g.with_dephasing(rate))
                .map_err(numerical)?;
            let dephased = sched.with_dephasing_channel();
            steady_cycle_ledger(&dephased, &gens, PropagationMode::Coherent).map_err(numerical)
        }
        DephasingSpec::Complete => {
            let gens = model.generators().map_err(numerical)?;
            steady_cycle_ledger(&sched, &gens, PropagationMode::CompleteDephasing)
                .map_err(numerical)
        }
    }
}

fn efficiency_cell(ledger: &CycleLedger) -> Cell {
    match ledger.efficiency() {
        Some(eta) => Cell::Float(eta),
        None => Cell::Na,
    }
}

/// One steady-state row per engine type, plus the states as JSON.
pub fn cmd_steady(config: &RunConfig, out_dir: &Path) -> Result<(), AppError> {
    let model = config.model.build()?;
    let kinds = parse_engines(&config.schedule.engines)?;
    let dephasing = config.schedule.dephasing.resolve(&model)?;
    print_warnings(&model, config.schedule.m);
    let tau_cyc = model.cycle_time(config.schedule.m);

    let mut table = Table::new(
        "steady",
        vec![
            "engine",
            "m",
            "tau_cyc",
            "s",
            "W",
            "Q_c",
            "Q_h",
            "P_w",
            "J_c",
            "J_h",
            "efficiency",
            "first_law_residual",
            "residual",
            "spectral_gap",
            "unique",
        ],
    );
    table.notes.push("cycle_anchor: midpoint".into());
    table
        .notes
        .push("W is the system-side drive energy per cycle; output power is -P_w".into());

    let mut states = serde_json::Map::new();
    for kind in kinds {
        let (ss, ledger) = steady_run(&model, kind, tau_cyc, dephasing)?;
        table.push(vec![
            Cell::Text(kind.to_string()),
            Cell::Float(config.schedule.m),
            Cell::Float(tau_cyc),
            Cell::Float(ledger.action),
            Cell::Float(ledger.work),
            Cell::Float(ledger.heat_cold),
            Cell::Float(ledger.heat_hot),
            Cell::Float(ledger.power()),
            Cell::Float(ledger.current_cold()),
            Cell::Float(ledger.current_hot()),
            efficiency_cell(&ledger),
            Cell::Float(ledger.first_law_residual()),
            Cell::Float(ss.residual),
            Cell::Float(ss.spectral_gap),
            Cell::Text(ss.unique.to_string()),
        ]);
        let rho = unvectorize(&ss.rho);
        let n = ss.rho.dim_hilbert();
        let grid = |f: &dyn Fn(usize, usize) -> f64| -> Vec<Vec<f64>> {
            (0..n).map(|i| (0..n).map(|j| f(i, j)).collect()).collect()
        };
        states.insert(
            kind.to_string(),
            serde_json::json!({
                "cycle_anchor": "midpoint",
                "rho_re": grid(&|i, j| rho[(i, j)].re),
                "rho_im": grid(&|i, j| rho[(i, j)].im),
                "residual": ss.residual,
                "spectral_gap": ss.spectral_gap,
                "unique": ss.unique,
            }),
        );
    }
    let path = table.write(out_dir, config)?;
    let doc = serde_json::json!({ "config": config, "states": states });
    let json_path = write_json_value(out_dir, "steady_states", &doc)?;
    eprintln!("wrote {} and {}", path.display(), json_path.display());
    Ok(())
}

/// Cumulative work and heat at every cycle boundary of a transient.
pub fn cmd_transient(config: &RunConfig, out_dir: &Path) -> Result<(), AppError> {
    let model = config.model.build()?;
    let kinds = parse_engines(&config.schedule.engines)?;
    let dephasing = config.schedule.dephasing.resolve(&model)?;
    print_warnings(&model, config.schedule.m);
    let tau_cyc = model.cycle_time(config.schedule.m);
    let n = model.dim();
    let rho0 = match config.experiment.initial_state.as_str() {
        "excited" => LiouvilleVector::basis_state(n, n - 1),
        "mixed" => LiouvilleVector::maximally_mixed(n),
        other => {
            return Err(AppError::Config(format!(
                "unknown initial state {other:?} (expected excited|mixed)"
            )))
        }
    };

    let mut table = Table::new(
        "transient",
        vec!["engine", "cycle", "t", "W_cum", "Q_c_cum", "Q_h_cum"],
    );
    table
        .notes
        .push(format!("initial_state: {}", config.experiment.initial_state));
    for kind in kinds {
        let sched = schedule_for(kind, tau_cyc).map_err(numerical)?;
        let (sched, gens, mode) = match dephasing {
            DephasingSpec::None => (
                sched,
                model.generators().map_err(numerical)?,
                PropagationMode::Coherent,
            ),
            DephasingSpec::Rate(rate) => (
                sched.with_dephasing_channel(),
                model
                    .generators()
                    .and_then(|g| g.with_dephasing(rate))
                    .map_err(numerical)?,
                PropagationMode::Coherent,
            ),
            DephasingSpec::Complete => (
                sched,
                model.generators().map_err(numerical)?,
                PropagationMode::CompleteDephasing,
            ),
        };
        let records =
            evolve_transient(&sched, &gens, &rho0, config.schedule.n_cycles, mode).map_err(numerical)?;
        for record in records
            .iter()
            .filter(|r| r.completed_cycles.is_some() && r.time > 0.0)
        {
            table.push(vec![
                Cell::Text(kind.to_string()),
                Cell::Int(record.completed_cycles.unwrap() as i64),
                Cell::Float(record.time),
                Cell::Float(record.cumulative.work),
                Cell::Float(record.cumulative.heat_cold),
                Cell::Float(record.cumulative.heat_hot),
            ]);
        }
    }
    let path = table.write(out_dir, config)?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    Action,
    Gamma,
}

fn sweep_table(name: &'static str, sweep: &SweepResult, extra_notes: Vec<String>) -> Table {
    let mut table = Table::new(
        name,
        vec![
            "grid_index",
            "axis",
            "axis_value",
            "engine",
            "m",
            "tau_cyc",
            "s",
            "W",
            "Q_c",
            "Q_h",
            "P_w",
            "J_c",
            "J_h",
            "efficiency",
            "first_law_residual",
            "dev_W_rel",
            "dev_Qc_rel",
            "dev_Qh_rel",
            "status",
        ],
    );
    table.notes = extra_notes;
    for (idx, point) in sweep.points.iter().enumerate() {
        for row in &point.rows {
            let mut cells = vec![
                Cell::Int(idx as i64),
                Cell::Text(sweep.axis.clone()),
                Cell::Float(point.axis_value),
                Cell::Text(row.kind.to_string()),
                Cell::Float(point.m),
                Cell::Float(point.tau_cyc),
            ];
            match (&row.ledger, &row.failure) {
                (Some(ledger), _) => {
                    cells.extend([
                        Cell::Float(row.action),
                        Cell::Float(ledger.work),
                        Cell::Float(ledger.heat_cold),
                        Cell::Float(ledger.heat_hot),
                        Cell::Float(ledger.power()),
                        Cell::Float(ledger.current_cold()),
                        Cell::Float(ledger.current_hot()),
                        efficiency_cell(ledger),
                        Cell::Float(ledger.first_law_residual()),
                        row.dev_work.map_or(Cell::Na, Cell::Float),
                        row.dev_heat_cold.map_or(Cell::Na, Cell::Float),
                        row.dev_heat_hot.map_or(Cell::Na, Cell::Float),
                        Cell::Text("ok".into()),
                    ]);
                }
                (None, failure) => {
                    cells.extend(std::iter::repeat_with(|| Cell::Na).take(12));
                    cells.push(Cell::Text(format!(
                        "failed: {}",
                        failure.as_deref().unwrap_or("unknown")
                    )));
                }
            }
            table.push(cells);
        }
    }
    table
}

/// Steady-state sweep over action (stroke duration) or bath rate.
pub fn cmd_sweep(config: &RunConfig, axis: SweepAxis, out_dir: &Path) -> Result<(), AppError> {
    let model = config.model.build()?;
    let kinds = parse_engines(&config.schedule.engines)?;
    if config.schedule.dephasing.resolve(&model)? != DephasingSpec::None {
        return Err(AppError::Config(
            "sweeps run coherent engines; use the signature command for dephased power".into(),
        ));
    }
    let (table, path) = match axis {
        SweepAxis::Action => {
            let gens = model.generators().map_err(numerical)?;
            let per_norm = gens.norm_cold + gens.norm_hot + gens.norm_drive;
            if per_norm <= 0.0 {
                return Err(AppError::Config(
                    "all couplings vanish; the action axis is degenerate".into(),
                ));
            }
            let taus: Vec<f64> = config
                .experiment
                .action_grid
                .values()?
                .iter()
                .map(|s| s / per_norm)
                .collect();
            if let Some(tau) = taus.first() {
                print_warnings(&model, tau / (6.0 * model.drive_period()));
            }
            let sweep = equivalence_sweep(&model, &kinds, &taus).map_err(numerical)?;
            let table = sweep_table(
                "sweep_action",
                &sweep,
                vec!["deviations are relative to the continuous engine".into()],
            );
            let path = table.write(out_dir, config)?;
            (table, path)
        }
        SweepAxis::Gamma => {
            print_warnings(&model, config.schedule.m);
            let gammas = config.experiment.gamma_grid.values()?;
            let sweep =
                overthermalization_sweep(&model, &kinds, &gammas, config.schedule.m).map_err(numerical)?;
            let table = sweep_table(
                "sweep_gamma",
                &sweep,
                vec![format!("m: {}", config.schedule.m)],
            );
            let path = table.write(out_dir, config)?;
            (table, path)
        }
    };
    let failed = table
        .rows
        .iter()
        .filter(|r| !matches!(r.last(), Some(Cell::Text(s)) if s == "ok"))
        .count();
    if failed > 0 {
        eprintln!("warning: {failed} grid rows flagged as failed");
    }
    eprintln!("wrote {}", path.display());
    Ok(())
}

/// Power against the stochastic bound across a grid of cycle times.
pub fn cmd_signature(config: &RunConfig, out_dir: &Path) -> Result<(), AppError> {
    let model = config.model.build()?;
    let dephasing = config.schedule.dephasing.resolve(&model)?;
    let dephasing = if dephasing == DephasingSpec::None {
        // a signature run without any dephasing set compares against the
        // fully stochastic engine
        DephasingSpec::Complete
    } else {
        dephasing
    };
    let kinds = parse_engines(&config.schedule.engines)?;
    let ms = config.experiment.cycle_grid.values()?;
    if let Some(&m) = ms.first() {
        print_warnings(&model, m);
    }

    let mut table = Table::new(
        "signature",
        vec![
            "grid_index",
            "engine",
            "m",
            "tau_cyc",
            "duty",
            "drive_gap",
            "z",
            "bound",
            "P_coherent",
            "verdict_coherent",
            "P_dephased",
            "verdict_dephased",
        ],
    );
    table.notes.push(format!("dephasing: {dephasing}"));
    for (idx, &m) in ms.iter().enumerate() {
        let tau = model.cycle_time(m);
        for &kind in &kinds {
            let coherent =
                signature_test(&model, kind, tau, DephasingSpec::None).map_err(numerical)?;
            let dephased = signature_test(&model, kind, tau, dephasing).map_err(numerical)?;
            table.push(vec![
                Cell::Int(idx as i64),
                Cell::Text(kind.to_string()),
                Cell::Float(m),
                Cell::Float(tau),
                Cell::Float(coherent.duty),
                Cell::Float(coherent.drive_gap),
                coherent.z_factor.map_or(Cell::Na, Cell::Float),
                coherent.bound.map_or(Cell::Na, Cell::Float),
                Cell::Float(coherent.measured_power),
                coherent
                    .verdict
                    .map_or(Cell::Na, |v| Cell::Text(v.to_string())),
                Cell::Float(dephased.measured_power),
                dephased
                    .verdict
                    .map_or(Cell::Na, |v| Cell::Text(v.to_string())),
            ]);
        }
    }
    let path = table.write(out_dir, config)?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

/// Invariant suite; exit code 0 only when every check passes.
pub fn cmd_verify(config: &RunConfig, out_dir: &Path) -> Result<bool, AppError> {
    let model = config.model.build()?;
    print_warnings(&model, config.schedule.m);
    let report = verify_suite(&model, config.schedule.m, config.experiment.seed).map_err(numerical)?;
    let checks: Vec<serde_json::Value> = report
        .checks
        .iter()
        .map(|c| {
            serde_json::json!({
                "name": c.name,
                "passed": c.passed,
                "detail": c.detail,
            })
        })
        .collect();
    let doc = serde_json::json!({
        "config": config,
        "all_passed": report.all_passed(),
        "checks": checks,
    });
    let path = write_json_value(out_dir, "verify", &doc)?;
    for c in &report.checks {
        println!(
            "{} {} ({})",
            if c.passed { "pass" } else { "FAIL" },
            c.name,
            c.detail
        );
    }
    eprintln!("wrote {}", path.display());
    Ok(report.all_passed())
}
