//! Verification harnesses and headline experiments: splitting-defect bounds,
//! engine-equivalence sweeps, the stochastic power bound, passivity, and
//! symmetric-rearrangement checks.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::grid::run_grid;
use crate::liouville::{spectral_norm, HilbertOperator, LiouvilleVector, SuperOperator};
use crate::model::{EngineModel, GeneratorSet};
use crate::protocol::{schedule_for, EngineKind, PropagationMode, Schedule};
use crate::thermo::{
    cycle_ledger, steady_cycle_ledger, steady_state_at, CycleAnchor, CycleLedger,
};
use crate::{Error, Result};

/// Symmetric-splitting defect of one step, with the norm-action bound.
#[derive(Debug, Clone, Copy)]
pub struct StrangDefect {
    /// `|| e^{-iA dt/2} e^{-iB dt} e^{-iA dt/2} - e^{-i(A+B)dt} ||`
    pub defect: f64,
    /// `((||A|| + ||B||) dt)^3`
    pub bound: f64,
    /// `(||A|| + ||B||) dt`
    pub action: f64,
}

/// Measures the symmetric-splitting defect of `exp(-i(A+B)dt)` against the
/// cubic action bound.
pub fn strang_defect(a: &SuperOperator, b: &SuperOperator, dt: f64) -> Result<StrangDefect> {
    if dt < 0.0 {
        return Err(Error::NegativeDuration(dt));
    }
    let sum = SuperOperator::linear_combination(&[(1.0, a), (1.0, b)])?;
    let exact = sum.propagator(dt)?;
    let half_a = a.propagator(dt / 2.0)?;
    let full_b = b.propagator(dt)?;
    let split = half_a.compose(&full_b).compose(&half_a);
    let defect = spectral_norm(&(split.matrix() - exact.matrix()));
    let action = (a.spectral_norm() + b.spectral_norm()) * dt;
    Ok(StrangDefect {
        defect,
        bound: action.powi(3),
        action,
    })
}

/// Cycle time at which the continuous schedule reaches the requested action.
pub fn tau_for_action(gens: &GeneratorSet, action: f64) -> f64 {
    action / (gens.norm_cold + gens.norm_hot + gens.norm_drive)
}

/// One engine's results at one grid point.
#[derive(Debug, Clone)]
pub struct EngineRow {
    pub kind: EngineKind,
    pub action: f64,
    pub ledger: Option<CycleLedger>,
    /// Set when the solve failed; the sweep continues.
    pub failure: Option<String>,
    /// Relative deviations from the continuous engine at the same grid point.
    pub dev_work: Option<f64>,
    pub dev_heat_cold: Option<f64>,
    pub dev_heat_hot: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub axis_value: f64,
    pub tau_cyc: f64,
    /// Drive periods per sixth-cycle implied by the cycle time.
    pub m: f64,
    pub rows: Vec<EngineRow>,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    /// Swept parameter name ("action" or "gamma").
    pub axis: String,
    pub points: Vec<SweepPoint>,
}

/// Which ledger quantity a deviation refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantity {
    Work,
    HeatCold,
    HeatHot,
}

fn ledger_quantity(ledger: &CycleLedger, q: Quantity) -> f64 {
    match q {
        Quantity::Work => ledger.work,
        Quantity::HeatCold => ledger.heat_cold,
        Quantity::HeatHot => ledger.heat_hot,
    }
}

fn engine_rows_at(
    gens: &GeneratorSet,
    kinds: &[EngineKind],
    tau_cyc: f64,
    mode: PropagationMode,
) -> Vec<EngineRow> {
    let mut rows: Vec<EngineRow> = kinds
        .iter()
        .map(|&kind| {
            let built = schedule_for(kind, tau_cyc)
                .and_then(|sched| Ok((sched.action(gens)?, steady_cycle_ledger(&sched, gens, mode)?)));
            match built {
                Ok((action, (_, ledger))) => EngineRow {
                    kind,
                    action,
                    ledger: Some(ledger),
                    failure: None,
                    dev_work: None,
                    dev_heat_cold: None,
                    dev_heat_hot: None,
                },
                Err(e) => EngineRow {
                    kind,
                    action: f64::NAN,
                    ledger: None,
                    failure: Some(e.to_string()),
                    dev_work: None,
                    dev_heat_cold: None,
                    dev_heat_hot: None,
                },
            }
        })
        .collect();
    // relative deviations against the continuous row
    let reference = rows
        .iter()
        .find(|r| r.kind == EngineKind::Continuous)
        .and_then(|r| r.ledger.clone());
    if let Some(ref_ledger) = reference {
        for row in rows.iter_mut() {
            if row.kind == EngineKind::Continuous {
                continue;
            }
            if let Some(ledger) = &row.ledger {
                let dev = |q: Quantity| {
                    let base = ledger_quantity(&ref_ledger, q);
                    let val = ledger_quantity(ledger, q);
                    if base.abs() > 0.0 {
                        Some((val - base).abs() / base.abs())
                    } else {
                        None
                    }
                };
                row.dev_work = dev(Quantity::Work);
                row.dev_heat_cold = dev(Quantity::HeatCold);
                row.dev_heat_hot = dev(Quantity::HeatHot);
            }
        }
    }
    rows
}

/// Steady-state sweep over cycle times (equivalently, over action) at fixed
/// couplings. The continuous engine is always included as the deviation
/// reference. Grid points run independently and in parallel.
pub fn equivalence_sweep(
    model: &EngineModel,
    kinds: &[EngineKind],
    tau_grid: &[f64],
) -> Result<SweepResult> {
    let gens = model.generators()?;
    let mut all_kinds = vec![EngineKind::Continuous];
    for &k in kinds {
        if !all_kinds.contains(&k) {
            all_kinds.push(k);
        }
    }
    let period_sixth = 6.0 * model.drive_period();
    let points = run_grid(tau_grid, |&tau_cyc| {
        let rows = engine_rows_at(&gens, &all_kinds, tau_cyc, PropagationMode::Coherent);
        let action = rows
            .iter()
            .find(|r| r.kind == EngineKind::Continuous)
            .map(|r| r.action)
            .unwrap_or(f64::NAN);
        SweepPoint {
            axis_value: action,
            tau_cyc,
            m: tau_cyc / period_sixth,
            rows,
        }
    });
    Ok(SweepResult {
        axis: "action".into(),
        points,
    })
}

/// Steady-state power against a common bath rate `gamma_c = gamma_h = gamma`
/// at fixed drive and fixed stroke durations.
pub fn overthermalization_sweep(
    model: &EngineModel,
    kinds: &[EngineKind],
    gamma_grid: &[f64],
    m: f64,
) -> Result<SweepResult> {
    let tau_cyc = model.cycle_time(m);
    let points = run_grid(gamma_grid, |&gamma| {
        let mut varied = model.clone();
        varied.gamma_hot = gamma;
        varied.gamma_cold = gamma;
        let rows = match varied.generators() {
            Ok(gens) => engine_rows_at(&gens, kinds, tau_cyc, PropagationMode::Coherent),
            Err(e) => kinds
                .iter()
                .map(|&kind| EngineRow {
                    kind,
                    action: f64::NAN,
                    ledger: None,
                    failure: Some(e.to_string()),
                    dev_work: None,
                    dev_heat_cold: None,
                    dev_heat_hot: None,
                })
                .collect(),
        };
        SweepPoint {
            axis_value: gamma,
            tau_cyc,
            m,
            rows,
        }
    });
    Ok(SweepResult {
        axis: "gamma".into(),
        points,
    })
}

impl SweepResult {
    /// (axis value, relative deviation) series for one engine and quantity,
    /// skipping failed rows and exact zeros.
    pub fn deviation_series(&self, kind: EngineKind, q: Quantity) -> Vec<(f64, f64)> {
        self.points
            .iter()
            .filter_map(|p| {
                let row = p.rows.iter().find(|r| r.kind == kind)?;
                let dev = match q {
                    Quantity::Work => row.dev_work,
                    Quantity::HeatCold => row.dev_heat_cold,
                    Quantity::HeatHot => row.dev_heat_hot,
                }?;
                (dev > 0.0).then_some((p.axis_value, dev))
            })
            .collect()
    }

    /// Output power along the sweep for one engine.
    pub fn power_series(&self, kind: EngineKind) -> Vec<(f64, f64)> {
        self.points
            .iter()
            .filter_map(|p| {
                let row = p.rows.iter().find(|r| r.kind == kind)?;
                let ledger = row.ledger.as_ref()?;
                Some((p.axis_value, ledger.output_power()))
            })
            .collect()
    }
}

/// Least-squares slope of log(y) against log(x).
pub fn loglog_slope(series: &[(f64, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = series
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    (denom.abs() > 0.0).then(|| (n * sxy - sx * sy) / denom)
}

/// Interior-maximum analysis of a sampled curve.
#[derive(Debug, Clone, Copy)]
pub struct PeakAnalysis {
    pub argmax_index: usize,
    pub peak_value: f64,
    /// True when the maximum is strictly inside the sampled range.
    pub interior: bool,
}

pub fn power_peak(values: &[f64]) -> Option<PeakAnalysis> {
    if values.is_empty() {
        return None;
    }
    let (argmax_index, &peak_value) = values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())?;
    Some(PeakAnalysis {
        argmax_index,
        peak_value,
        interior: argmax_index > 0
            && argmax_index < values.len() - 1
            && peak_value > values[0]
            && peak_value > values[values.len() - 1],
    })
}

/// Upper bound on the mean output power of a coherence-free stroke engine:
/// `(z/8) sqrt(tr(H0^2) - tr(H0)^2) * gap(Hw)^2 * duty^2 * tau_cyc`, with
/// `z = 1` for the two-stroke and `z = 1/2` for the four-stroke engine.
pub fn stochastic_power_bound(
    model: &EngineModel,
    kind: EngineKind,
    tau_cyc: f64,
) -> Result<f64> {
    let z = match kind {
        EngineKind::TwoStroke => 1.0,
        EngineKind::FourStroke => 0.5,
        other => {
            return Err(Error::Unsupported(format!(
                "the stochastic power bound applies to two-stroke and four-stroke engines; \
                 a {other} engine extracts work through coherences only"
            )))
        }
    };
    let h0 = model.build_h0();
    let tr: f64 = (0..model.dim()).map(|k| h0.matrix()[(k, k)].re).sum();
    let tr_sq: f64 = (0..model.dim())
        .map(|k| h0.matrix()[(k, k)].re.powi(2))
        .sum();
    let spread = (tr_sq - tr * tr).max(0.0).sqrt();
    let eigs = model.build_drive().eigenvalues()?;
    let gap = eigs.last().unwrap() - eigs.first().unwrap();
    let duty = schedule_for(kind, tau_cyc)?.duty_cycle();
    Ok(z / 8.0 * spread * gap.powi(2) * duty.powi(2) * tau_cyc)
}

/// Dephasing applied to an engine run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DephasingSpec {
    None,
    /// Uniform coherence decay rate, acting in parallel for the whole cycle.
    Rate(f64),
    /// Projection onto populations at every stroke boundary (and in parallel
    /// with any thermal coupling).
    Complete,
}

impl std::fmt::Display for DephasingSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DephasingSpec::None => f.write_str("none"),
            DephasingSpec::Rate(r) => write!(f, "rate={r:.6e}"),
            DephasingSpec::Complete => f.write_str("complete"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    /// Measured power exceeds the stochastic bound: coherence at work.
    Exceeds,
    Within,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Exceeds => "exceeds",
            Verdict::Within => "within",
        })
    }
}

/// Power measurement against the stochastic bound.
#[derive(Debug, Clone)]
pub struct SignatureReport {
    pub kind: EngineKind,
    pub tau_cyc: f64,
    pub dephasing: DephasingSpec,
    /// Output power delivered to the work repository.
    pub measured_power: f64,
    /// None for engines the bound does not apply to (continuous, two-field).
    pub bound: Option<f64>,
    pub z_factor: Option<f64>,
    /// Spectral gap of the drive Hamiltonian.
    pub drive_gap: f64,
    pub duty: f64,
    pub verdict: Option<Verdict>,
    /// Action of the coherent schedule (dephasing channel excluded).
    pub action_coherent: f64,
}

/// Runs one engine at one cycle time with the requested dephasing and
/// compares its steady-state output power to the stochastic bound.
pub fn signature_test(
    model: &EngineModel,
    kind: EngineKind,
    tau_cyc: f64,
    dephasing: DephasingSpec,
) -> Result<SignatureReport> {
    let sched = schedule_for(kind, tau_cyc)?;
    let base_gens = model.generators()?;
    let action_coherent = sched.action(&base_gens)?;
    let (ledger, duty) = match dephasing {
        DephasingSpec::None => {
            let (_, ledger) = steady_cycle_ledger(&sched, &base_gens, PropagationMode::Coherent)?;
            (ledger, sched.duty_cycle())
        }
        DephasingSpec::Rate(rate) => {
            let gens = model.generators()?.with_dephasing(rate)?;
            let dephased = sched.with_dephasing_channel();
            let (_, ledger) = steady_cycle_ledger(&dephased, &gens, PropagationMode::Coherent)?;
            (ledger, dephased.duty_cycle())
        }
        DephasingSpec::Complete => {
            let (_, ledger) =
                steady_cycle_ledger(&sched, &base_gens, PropagationMode::CompleteDephasing)?;
            (ledger, sched.duty_cycle())
        }
    };
    let measured_power = ledger.output_power();
    let bound = match kind {
        EngineKind::TwoStroke | EngineKind::FourStroke => {
            Some(stochastic_power_bound(model, kind, tau_cyc)?)
        }
        _ => None,
    };
    let eigs = model.build_drive().eigenvalues()?;
    let drive_gap = eigs.last().unwrap() - eigs.first().unwrap();
    let z_factor = match kind {
        EngineKind::TwoStroke => Some(1.0),
        EngineKind::FourStroke => Some(0.5),
        _ => None,
    };
    let verdict = bound.map(|b| {
        if measured_power > b {
            Verdict::Exceeds
        } else {
            Verdict::Within
        }
    });
    Ok(SignatureReport {
        kind,
        tau_cyc,
        dephasing,
        measured_power,
        bound,
        z_factor,
        drive_gap,
        duty,
        verdict,
        action_coherent,
    })
}

/// Passivity classification of a state against a diagonal Hamiltonian.
#[derive(Debug, Clone, PartialEq)]
pub enum Passivity {
    Passive,
    NonPassive(PassivityWitness),
}

#[derive(Debug, Clone, PartialEq)]
pub enum PassivityWitness {
    /// A higher level (0-based indices) holding more population than a lower
    /// one.
    Inversion { lower: usize, upper: usize },
    /// Residual coherence of the given norm.
    Coherence { magnitude: f64 },
}

/// A state is passive iff it is energy-diagonal and its populations do not
/// increase with energy; no unitary can extract work from it.
pub fn passivity_check(rho: &LiouvilleVector, h0: &HilbertOperator) -> Passivity {
    let energies: Vec<f64> = (0..h0.dim()).map(|k| h0.matrix()[(k, k)].re).collect();
    let pops = rho.populations();
    let mut order: Vec<usize> = (0..energies.len()).collect();
    order.sort_by(|&a, &b| energies[a].partial_cmp(&energies[b]).unwrap());
    for w in order.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        if pops[hi] > pops[lo] + 1e-12 {
            return Passivity::NonPassive(PassivityWitness::Inversion {
                lower: lo,
                upper: hi,
            });
        }
    }
    let coh = rho.coherence_norm();
    if coh > 1e-10 {
        return Passivity::NonPassive(PassivityWitness::Coherence { magnitude: coh });
    }
    Passivity::Passive
}

/// Extreme work/heat deviations over random symmetric rearrangements.
#[derive(Debug, Clone, Copy)]
pub struct SrtReport {
    pub action: f64,
    pub max_dev_work: f64,
    pub max_dev_heat_cold: f64,
    pub max_dev_heat_hot: f64,
    pub n_permutations: usize,
}

/// Splits the positive half-cycle into bins, applies random mirrored
/// permutations, and reports the largest per-cycle work and heat deviations
/// from the unpermuted schedule, all starting from the same `rho0`.
pub fn srt_verify(
    schedule: &Schedule,
    gens: &GeneratorSet,
    rho0: &LiouvilleVector,
    n_permutations: usize,
    subdivisions: usize,
    seed: u64,
) -> Result<SrtReport> {
    let fine = schedule.subdivide(subdivisions)?;
    let (base, _) = cycle_ledger(&fine, gens, rho0, PropagationMode::Coherent)?;
    let n_bins = fine.positive_half_bins().len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = SrtReport {
        action: fine.action(gens)?,
        max_dev_work: 0.0,
        max_dev_heat_cold: 0.0,
        max_dev_heat_hot: 0.0,
        n_permutations,
    };
    for _ in 0..n_permutations {
        let mut perm: Vec<usize> = (0..n_bins).collect();
        perm.shuffle(&mut rng);
        let rearranged = fine.symmetric_rearrange(&perm)?;
        let (ledger, _) = cycle_ledger(&rearranged, gens, rho0, PropagationMode::Coherent)?;
        report.max_dev_work = report.max_dev_work.max((ledger.work - base.work).abs());
        report.max_dev_heat_cold = report
            .max_dev_heat_cold
            .max((ledger.heat_cold - base.heat_cold).abs());
        report.max_dev_heat_hot = report
            .max_dev_heat_hot
            .max((ledger.heat_hot - base.heat_hot).abs());
    }
    Ok(report)
}

/// Named pass/fail entry of the verification suite.
#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone)]
pub struct VerifyReport {
    pub checks: Vec<CheckResult>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

fn check(name: &str, passed: bool, detail: String) -> CheckResult {
    CheckResult {
        name: name.into(),
        passed,
        detail,
    }
}

/// Structural identities of a generator set: trace annihilation, the
/// Hamiltonian-superoperator identities, and the vanishing population block.
pub fn check_generator_structure(gens: &GeneratorSet) -> Vec<CheckResult> {
    let mut out = Vec::new();
    let scale = |g: &SuperOperator| g.matrix().norm().max(1.0);
    for (name, g) in [
        ("cold bath", &gens.l_cold),
        ("hot bath", &gens.l_hot),
        ("half drive", &gens.hw_half),
        ("static hamiltonian", &gens.h0_super),
    ] {
        let defect = g.trace_annihilation_defect();
        out.push(check(
            &format!("trace_annihilation/{name}"),
            defect <= 1e-12 * scale(g),
            format!("defect {defect:.3e}"),
        ));
    }
    // Hs |H> = 0 and <H| Hs = 0 for the superoperator of H0
    let vh = crate::liouville::vectorize(&gens.h0);
    let right = gens.h0_super.apply(&vh).as_vector().norm();
    let left = gens.h0_super.matrix().ad_mul(vh.as_vector()).norm();
    out.push(check(
        "hamiltonian_annihilates_own_vec",
        right <= 1e-12 * scale(&gens.h0_super) && left <= 1e-12 * scale(&gens.h0_super),
        format!("right {right:.3e}, left {left:.3e}"),
    ));
    // population-population block of Hamiltonian superoperators vanishes
    let n = gens.dim();
    let mut max_pop_block: f64 = 0.0;
    for g in [&gens.h0_super, &gens.hw_half] {
        for i in 0..n {
            for k in 0..n {
                max_pop_block = max_pop_block.max(g.matrix()[(i + n * i, k + n * k)].norm());
            }
        }
    }
    out.push(check(
        "hamiltonian_population_block_zero",
        max_pop_block == 0.0,
        format!("max |entry| {max_pop_block:.3e}"),
    ));
    out
}

/// CPTP diagnostics of the four cycle propagators at one cycle time.
pub fn check_cycle_propagators(gens: &GeneratorSet, tau_cyc: f64) -> Vec<CheckResult> {
    let mut out = Vec::new();
    for kind in [
        EngineKind::Continuous,
        EngineKind::TwoStroke,
        EngineKind::FourStroke,
        EngineKind::TwoField,
    ] {
        let result = schedule_for(kind, tau_cyc)
            .and_then(|s| s.cycle_propagator(gens, PropagationMode::Coherent))
            .and_then(|k| crate::liouville::assert_cptp(&k));
        out.push(check(
            &format!("cptp/{kind}"),
            result.is_ok(),
            match result {
                Ok(()) => "ok".into(),
                Err(e) => e.to_string(),
            },
        ));
    }
    out
}

/// Margin used by the runtime verification suite for rearrangement
/// invariance; the constant in the cubic law is order unity, so a factor of
/// ten comfortably covers it without hiding real regressions.
const SRT_SUITE_MARGIN: f64 = 10.0;

/// Full verification run against a model: structure, CPTP, splitting bound,
/// first law, Carnot ceiling, rearrangement invariance, passivity.
pub fn verify_suite(model: &EngineModel, m: f64, seed: u64) -> Result<VerifyReport> {
    let gens = model.generators()?;
    verify_suite_with(model, &gens, m, seed)
}

/// Same as [`verify_suite`] but with caller-supplied generators, so broken
/// generators can be injected and must surface as named failures.
pub fn verify_suite_with(
    model: &EngineModel,
    gens: &GeneratorSet,
    m: f64,
    seed: u64,
) -> Result<VerifyReport> {
    let mut checks = Vec::new();
    checks.extend(check_generator_structure(gens));
    let tau_cyc = model.cycle_time(m);
    checks.extend(check_cycle_propagators(gens, tau_cyc));

    // splitting defect against the cubic bound at a handful of actions
    let thermal = SuperOperator::linear_combination(&[(1.0, &gens.l_cold), (1.0, &gens.l_hot)])?;
    let mut worst_ratio: f64 = 0.0;
    for &s in &[0.05, 0.1, 0.25, 0.5] {
        let norms = thermal.spectral_norm() + gens.hw_half.spectral_norm();
        if norms == 0.0 {
            continue;
        }
        let d = strang_defect(&thermal, &gens.hw_half, s / norms)?;
        worst_ratio = worst_ratio.max(d.defect / d.bound);
    }
    checks.push(check(
        "strang_bound",
        worst_ratio <= 1.0,
        format!("worst defect/bound {worst_ratio:.3e}"),
    ));

    // per-engine steady-state thermodynamics
    for kind in [
        EngineKind::Continuous,
        EngineKind::TwoStroke,
        EngineKind::FourStroke,
        EngineKind::TwoField,
    ] {
        let outcome = schedule_for(kind, tau_cyc)
            .and_then(|s| steady_cycle_ledger(&s, gens, PropagationMode::Coherent));
        match outcome {
            Ok((_, ledger)) => {
                let res = ledger.first_law_residual();
                checks.push(check(
                    &format!("first_law/{kind}"),
                    res <= 1e-10,
                    format!("residual {res:.3e}"),
                ));
                let carnot = 1.0 - model.t_cold / model.t_hot;
                let eta_ok = match ledger.efficiency() {
                    Some(eta) => eta <= carnot + 1e-9,
                    None => true,
                };
                checks.push(check(
                    &format!("carnot/{kind}"),
                    eta_ok,
                    format!("efficiency {:?}, ceiling {carnot}", ledger.efficiency()),
                ));
            }
            Err(e) => {
                checks.push(check(&format!("first_law/{kind}"), false, e.to_string()));
            }
        }
    }

    // rearrangement invariance at moderate action
    let norms = gens.norm_cold + gens.norm_hot + gens.norm_drive;
    if norms > 0.0 {
        let tau_srt = 0.05 / norms;
        let outcome = (|| -> Result<(f64, f64)> {
            let sched = schedule_for(EngineKind::FourStroke, tau_srt)?;
            let ss =
                steady_state_at(&sched, gens, PropagationMode::Coherent, CycleAnchor::Start)?;
            let report = srt_verify(&sched, gens, &ss.rho, 8, 2, seed)?;
            let worst = report
                .max_dev_work
                .max(report.max_dev_heat_cold)
                .max(report.max_dev_heat_hot);
            Ok((worst, SRT_SUITE_MARGIN * report.action.powi(3)))
        })();
        checks.push(match outcome {
            Ok((worst, bound)) => check(
                "srt_invariance",
                worst <= bound,
                format!("worst deviation {worst:.3e} vs {bound:.3e}"),
            ),
            Err(e) => check("srt_invariance", false, e.to_string()),
        });
    }

    // passivity expectations
    let gibbs = crate::model::gibbs_state(
        &model.levels,
        model.t_cold,
        &(0..model.dim()).collect::<Vec<_>>(),
    )?;
    let h0 = model.build_h0();
    checks.push(check(
        "passivity/gibbs",
        passivity_check(&gibbs, &h0) == Passivity::Passive,
        "thermal state must be passive".into(),
    ));
    let sched = schedule_for(EngineKind::Continuous, tau_cyc)?;
    if let Ok((ss, ledger)) = steady_cycle_ledger(&sched, gens, PropagationMode::Coherent) {
        if ledger.output_power() > 0.0 {
            let verdict = passivity_check(&ss.rho, &h0);
            checks.push(check(
                "passivity/driven_steady_state",
                matches!(verdict, Passivity::NonPassive(_)),
                "work extraction requires a non-passive state".into(),
            ));
        }
    }
    Ok(VerifyReport { checks })
}
