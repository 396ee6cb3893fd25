//! Steady states, transients, and the work/heat ledger.
//!
//! Heat and work are defined by energy balance against the static
//! Hamiltonian: the current fed by agent x is `j_x(t) = -i <H0| W_x |rho(t)>`
//! with `W_x` the agent's weighted generator, so a segment during which only
//! one agent acts attributes its whole energy change to that agent exactly.
//! Segments with several simultaneous agents integrate the per-agent
//! currents in closed form through the propagator integral
//! `int_0^T exp(-i G t) dt`, evaluated as one block matrix exponential.
//!
//! Work is recorded system-side: `work + heat_cold + heat_hot = 0` over a
//! steady-state cycle, and the energy delivered to the work repository is
//! `-work`.

use num_complex::Complex64 as C64;

use crate::liouville::{
    complete_dephasing_projector, inner, solve_trace_normalized_kernel, vectorize, CMat,
    HilbertOperator, LiouvilleVector, SuperOperator, SuperOpKind,
};
use crate::model::GeneratorSet;
use crate::protocol::{EngineKind, PropagationMode, Schedule, Segment};
use crate::{Error, Result};

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

const MINUS_I: C64 = C64::new(0.0, -1.0);

/// Pure-dephasing generator: every energy-basis coherence decays at `rate`,
/// populations stay fixed. Built from projector jump operators so the
/// resulting map is completely positive by construction.
pub fn build_dephasing(n: usize, rate: f64) -> Result<SuperOperator> {
    if rate < 0.0 || !rate.is_finite() {
        return Err(Error::InvalidModel(format!(
            "dephasing rate must be nonnegative, got {rate}"
        )));
    }
    let mut jumps = Vec::with_capacity(n);
    for k in 0..n {
        let mut m = CMat::zeros(n, n);
        m[(k, k)] = c(rate.sqrt());
        jumps.push(HilbertOperator::new(m)?);
    }
    let l = SuperOperator::dissipator(n, &jumps)?;
    SuperOperator::from_matrix(l.matrix().clone(), SuperOpKind::Dephasing)
}

/// Exact projection onto the population space (complete dephasing).
pub fn complete_dephase(n: usize) -> SuperOperator {
    complete_dephasing_projector(n)
}

/// Energy-exchanging agent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Agent {
    Cold,
    Hot,
    Drive,
}

impl std::fmt::Display for Agent {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Agent::Cold => "cold",
            Agent::Hot => "hot",
            Agent::Drive => "drive",
        })
    }
}

/// Energy attributed to one agent within one segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentEnergy {
    pub segment_index: usize,
    pub agent: Agent,
    pub energy: f64,
}

/// Per-cycle thermodynamic bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct CycleLedger {
    /// System energy change due to the drive (negative when the engine
    /// delivers work).
    pub work: f64,
    /// Heat taken from the cold bath (system-side sign).
    pub heat_cold: f64,
    /// Heat taken from the hot bath (system-side sign).
    pub heat_hot: f64,
    pub per_segment: Vec<SegmentEnergy>,
    /// Action of the schedule that produced this ledger.
    pub action: f64,
    pub tau_cyc: f64,
}

impl CycleLedger {
    fn zero(action: f64, tau_cyc: f64) -> Self {
        Self {
            work: 0.0,
            heat_cold: 0.0,
            heat_hot: 0.0,
            per_segment: Vec::new(),
            action,
            tau_cyc,
        }
    }

    /// Average drive power, system-side sign.
    pub fn power(&self) -> f64 {
        self.work / self.tau_cyc
    }

    /// Power delivered to the work repository (positive for an engine).
    pub fn output_power(&self) -> f64 {
        -self.work / self.tau_cyc
    }

    pub fn current_cold(&self) -> f64 {
        self.heat_cold / self.tau_cyc
    }

    pub fn current_hot(&self) -> f64 {
        self.heat_hot / self.tau_cyc
    }

    /// |W + Q_c + Q_h| relative to the energy turnover.
    pub fn first_law_residual(&self) -> f64 {
        let scale = self.work.abs() + self.heat_cold.abs() + self.heat_hot.abs();
        let sum = self.work + self.heat_cold + self.heat_hot;
        if scale > 0.0 {
            sum.abs() / scale
        } else {
            sum.abs()
        }
    }

    /// Work delivered over heat drawn from the hot bath; only defined when
    /// the hot bath actually supplies heat.
    pub fn efficiency(&self) -> Option<f64> {
        if self.heat_hot > 0.0 {
            Some(-self.work / self.heat_hot)
        } else {
            None
        }
    }
}

impl std::ops::AddAssign<&CycleLedger> for CycleLedger {
    fn add_assign(&mut self, rhs: &CycleLedger) {
        self.work += rhs.work;
        self.heat_cold += rhs.heat_cold;
        self.heat_hot += rhs.heat_hot;
    }
}

// Channels with nonzero weight in a segment, folded into the three agents.
// Returns (agent, weighted generator matrix) pairs.
fn energetic_agents(seg: &Segment, gens: &GeneratorSet) -> Result<Vec<(Agent, CMat)>> {
    let w = &seg.weights;
    let mut out: Vec<(Agent, CMat)> = Vec::new();
    if w.cold != 0.0 {
        out.push((Agent::Cold, gens.l_cold.matrix() * c(w.cold)));
    }
    if w.hot != 0.0 {
        out.push((Agent::Hot, gens.l_hot.matrix() * c(w.hot)));
    }
    let nn = gens.dim() * gens.dim();
    let mut drive = CMat::zeros(nn, nn);
    let mut drive_used = false;
    if w.drive != 0.0 {
        drive += gens.hw_half.matrix() * c(w.drive);
        drive_used = true;
    }
    for (i, &pw) in w.drive_pairs.iter().enumerate() {
        if pw != 0.0 {
            let g = gens.hw_pair_halves.get(i).ok_or_else(|| {
                Error::InvalidSchedule(format!("no generator for drive pair {i}"))
            })?;
            drive += g.matrix() * c(pw);
            drive_used = true;
        }
    }
    if drive_used {
        out.push((Agent::Drive, drive));
    }
    // The dephasing channel never carries an H0 current (populations are
    // untouched), so it is not an energetic agent.
    Ok(out)
}

#[cfg(test)]
fn energy_of(h0_vec: &LiouvilleVector, rho: &LiouvilleVector) -> f64 {
    inner(h0_vec, rho).re
}

// <H0|rho_out - rho_in>, formed on the difference vector so that small
// energy changes on top of order-one energies do not lose precision.
fn energy_change(
    h0_vec: &LiouvilleVector,
    rho_in: &LiouvilleVector,
    rho_out: &LiouvilleVector,
) -> f64 {
    let delta = rho_out.as_vector() - rho_in.as_vector();
    h0_vec.as_vector().dotc(&delta).re
}

// Integral of the propagator over one segment, int_0^T exp(-i G t) dt,
// from the block identity exp([[A, I],[0, 0]] T) = [[e^{AT}, int e^{As} ds],
// [0, I]] with A = -iG. Extracting the propagator from the same block keeps
// the attribution identity sum_x attr_x = <H0|(P - I)|rho> exact up to the
// accuracy of one exponential.
fn propagator_with_integral(g_eff: &SuperOperator, t: f64) -> Result<(SuperOperator, CMat)> {
    if t < 0.0 || !t.is_finite() {
        return Err(Error::NegativeDuration(t));
    }
    let nn = g_eff.dim_liouville();
    let mut block = CMat::zeros(2 * nn, 2 * nn);
    let a_t = g_eff.matrix() * C64::new(0.0, -t);
    block.view_mut((0, 0), (nn, nn)).copy_from(&a_t);
    for k in 0..nn {
        block[(k, nn + k)] = c(t);
    }
    let e = crate::expm::expm(&block);
    let p = e.view((0, 0), (nn, nn)).into_owned();
    let s_int = e.view((0, nn), (nn, nn)).into_owned();
    Ok((
        SuperOperator::from_matrix(p, SuperOpKind::Propagator)?,
        s_int,
    ))
}

// Everything needed to run one segment repeatedly: its propagator, the
// weighted agent generators, and (for segments with several simultaneous
// agents) the propagator integral for exact current attribution. Built once.
struct PlannedSegment {
    duration: f64,
    propagator: SuperOperator,
    agents: Vec<(Agent, CMat)>,
    integral: Option<CMat>,
}

fn plan_segment(seg: &Segment, gens: &GeneratorSet, mode: PropagationMode) -> Result<PlannedSegment> {
    let g_eff = seg.effective_generator(gens, mode)?;
    let agents = energetic_agents(seg, gens)?;
    let (propagator, integral) = if agents.len() > 1 {
        let (p, s_int) = propagator_with_integral(&g_eff, seg.duration)?;
        (p, Some(s_int))
    } else {
        (g_eff.propagator(seg.duration)?, None)
    };
    Ok(PlannedSegment {
        duration: seg.duration,
        propagator,
        agents,
        integral,
    })
}

fn run_planned_segment(
    plan: &PlannedSegment,
    h0_vec: &LiouvilleVector,
    rho_in: &LiouvilleVector,
) -> Result<(Vec<(Agent, f64)>, LiouvilleVector)> {
    let rho_out = plan.propagator.apply(rho_in);
    let delta_e = energy_change(h0_vec, rho_in, &rho_out);
    let attributions: Vec<(Agent, f64)> = match plan.agents.len() {
        0 => Vec::new(), // nothing exchanges energy; dephasing alone keeps populations
        1 => vec![(plan.agents[0].0, delta_e)],
        _ => {
            // attr_x = int_0^T -i <H0| W_x rho(t)> dt = -i <H0| W_x S rho_in>
            let s_int = plan.integral.as_ref().expect("planned for multi-agent");
            let integrated_state = s_int * rho_in.as_vector();
            let attrs: Vec<f64> = plan
                .agents
                .iter()
                .map(|(_, w)| (MINUS_I * h0_vec.as_vector().dotc(&(w * &integrated_state))).re)
                .collect();
            let total: f64 = attrs.iter().sum();
            // Floor the comparison scale at the observable's norm so that
            // segments with vanishing net flows are not judged against pure
            // round-off.
            let scale = attrs
                .iter()
                .map(|a| a.abs())
                .sum::<f64>()
                .max(delta_e.abs())
                .max(h0_vec.as_vector().norm());
            if (total - delta_e).abs() > 1e-10 * scale {
                return Err(Error::AttributionMismatch((total - delta_e).abs() / scale));
            }
            // Balance closure: absorb the (validated, round-off-level)
            // defect so the per-agent energies sum to the segment's energy
            // change exactly and cycle sums telescope.
            let defect = delta_e - total;
            let weight_sum: f64 = attrs.iter().map(|a| a.abs()).sum();
            let attrs: Vec<f64> = if weight_sum > 0.0 {
                attrs
                    .iter()
                    .map(|a| a + defect * a.abs() / weight_sum)
                    .collect()
            } else {
                attrs
            };
            plan.agents
                .iter()
                .map(|(agent, _)| *agent)
                .zip(attrs)
                .collect()
        }
    };
    Ok((attributions, rho_out))
}

/// Evolves one segment and attributes its energy change to the active
/// agents (exact single-agent balance, closed-form current integrals for
/// simultaneous agents). Returns the per-agent energies and the output
/// state.
pub fn segment_energy_ledger(
    seg: &Segment,
    gens: &GeneratorSet,
    rho_in: &LiouvilleVector,
    mode: PropagationMode,
) -> Result<(Vec<(Agent, f64)>, LiouvilleVector)> {
    let h0_vec = vectorize(&gens.h0);
    let plan = plan_segment(seg, gens, mode)?;
    run_planned_segment(&plan, &h0_vec, rho_in)
}

// Trace/Hermiticity drift check, cheap enough to run every cycle.
fn check_state_sane(rho: &LiouvilleVector) -> Result<()> {
    let tr = rho.trace();
    if !(tr.re.is_finite() && tr.im.is_finite()) || (tr - c(1.0)).norm() > 1e-8 {
        return Err(Error::CptpViolation(format!(
            "state trace drifted to {tr}"
        )));
    }
    Ok(())
}

struct CyclePlan {
    segments: Vec<PlannedSegment>,
    h0_vec: LiouvilleVector,
    projector: Option<SuperOperator>,
    action: f64,
    tau_cyc: f64,
}

fn plan_cycle(schedule: &Schedule, gens: &GeneratorSet, mode: PropagationMode) -> Result<CyclePlan> {
    let segments = schedule
        .segments()
        .iter()
        .map(|seg| plan_segment(seg, gens, mode))
        .collect::<Result<Vec<_>>>()?;
    Ok(CyclePlan {
        segments,
        h0_vec: vectorize(&gens.h0),
        projector: (mode == PropagationMode::CompleteDephasing)
            .then(|| complete_dephasing_projector(gens.dim())),
        action: schedule.action(gens)?,
        tau_cyc: schedule.tau_cyc(),
    })
}

impl CyclePlan {
    // One cycle, accumulating into the ledger. `rho` enters at the cycle
    // start and leaves at the cycle end (projected at boundaries under
    // complete dephasing).
    fn run_once(&self, rho: &mut LiouvilleVector, ledger: &mut CycleLedger) -> Result<()> {
        if let Some(d) = &self.projector {
            *rho = d.apply(rho);
        }
        for (idx, plan) in self.segments.iter().enumerate() {
            let (attrs, mut rho_out) = run_planned_segment(plan, &self.h0_vec, rho)?;
            if let Some(d) = &self.projector {
                rho_out = d.apply(&rho_out);
            }
            for (agent, energy) in attrs {
                match agent {
                    Agent::Cold => ledger.heat_cold += energy,
                    Agent::Hot => ledger.heat_hot += energy,
                    Agent::Drive => ledger.work += energy,
                }
                ledger.per_segment.push(SegmentEnergy {
                    segment_index: idx,
                    agent,
                    energy,
                });
            }
            *rho = rho_out;
        }
        Ok(())
    }
}

/// Runs one cycle of the schedule from `rho0`, accumulating the ledger.
/// Under complete dephasing the state is projected onto the population
/// space at every segment boundary.
pub fn cycle_ledger(
    schedule: &Schedule,
    gens: &GeneratorSet,
    rho0: &LiouvilleVector,
    mode: PropagationMode,
) -> Result<(CycleLedger, LiouvilleVector)> {
    let plan = plan_cycle(schedule, gens, mode)?;
    let mut ledger = CycleLedger::zero(plan.action, plan.tau_cyc);
    let mut rho = rho0.clone();
    plan.run_once(&mut rho, &mut ledger)?;
    check_state_sane(&rho)?;
    Ok((ledger, rho))
}

/// Which point of the cycle the returned steady state is anchored to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CycleAnchor {
    /// The symmetric frame's `-tau/2` point (first listed segment).
    Start,
    /// The cycle midpoint; this is the reported convention.
    Midpoint,
}

/// Steady-state solve result.
#[derive(Debug, Clone)]
pub struct SteadyState {
    pub rho: LiouvilleVector,
    /// `||G rho||` for the continuous engine, `||K rho - rho||` for stroke
    /// engines.
    pub residual: f64,
    /// Modulus gap between the largest and second-largest propagator
    /// eigenvalues.
    pub spectral_gap: f64,
    pub unique: bool,
    pub anchor: CycleAnchor,
}

/// Midpoint-anchored steady state (the reported convention).
pub fn steady_state(schedule: &Schedule, gens: &GeneratorSet) -> Result<SteadyState> {
    steady_state_at(schedule, gens, PropagationMode::Coherent, CycleAnchor::Midpoint)
}

/// Steady state with explicit propagation mode and anchor.
pub fn steady_state_at(
    schedule: &Schedule,
    gens: &GeneratorSet,
    mode: PropagationMode,
    anchor: CycleAnchor,
) -> Result<SteadyState> {
    let anchored = match anchor {
        CycleAnchor::Start => schedule.clone(),
        CycleAnchor::Midpoint => schedule.rotate_to_midpoint(),
    };
    let continuous_direct = schedule.kind() == EngineKind::Continuous
        && schedule.segments().len() == 1
        && mode == PropagationMode::Coherent;

    let k = anchored.cycle_propagator(gens, mode)?;
    let eigs = k.eigenvalues()?;
    let nearest = eigs
        .iter()
        .map(|l| (l - c(1.0)).norm())
        .fold(f64::INFINITY, f64::min);
    if nearest > 1e-6 {
        return Err(Error::SteadyState(format!(
            "no propagator eigenvalue within 1e-6 of unity (closest at distance {nearest:.3e}); \
             the generator does not define a physical cycle"
        )));
    }
    let unique = eigs.iter().filter(|l| (*l - c(1.0)).norm() <= 1e-8).count() <= 1;
    let mut moduli: Vec<f64> = eigs.iter().map(|l| l.norm()).collect();
    moduli.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let spectral_gap = if moduli.len() > 1 {
        moduli[0] - moduli[1]
    } else {
        0.0
    };

    let n = gens.dim();
    let mut rho = if continuous_direct {
        let g = schedule.segments()[0].generator(gens)?;
        solve_trace_normalized_kernel(g.matrix(), n)?
    } else {
        let km_minus_i = k.matrix() - CMat::identity(n * n, n * n);
        solve_trace_normalized_kernel(&km_minus_i, n)?
    };

    if rho.validate_density().is_err() {
        if unique {
            return Err(Error::SteadyState(
                "unique fixed point failed density validation".into(),
            ));
        }
        // Degenerate peripheral spectrum: project the maximally mixed state
        // onto the fixed-point subspace by repeated squaring of the cycle map.
        let mut km = k.matrix().clone();
        for _ in 0..40 {
            km = &km * &km;
        }
        let mixed = LiouvilleVector::maximally_mixed(n);
        let projected = &km * mixed.as_vector();
        let candidate = LiouvilleVector::from_vector(projected)?;
        let tr = candidate.trace();
        rho = LiouvilleVector::from_vector(candidate.as_vector() / tr)?;
        rho.validate_density().map_err(|e| {
            Error::SteadyState(format!("degenerate fixed-point projection failed: {e}"))
        })?;
    }

    let residual = if continuous_direct {
        let g = schedule.segments()[0].generator(gens)?;
        g.apply(&rho).as_vector().norm()
    } else {
        (k.matrix() * rho.as_vector() - rho.as_vector()).norm()
    };
    if residual > 1e-10 {
        return Err(Error::SteadyState(format!(
            "steady-state residual {residual:.3e} above 1e-10"
        )));
    }
    Ok(SteadyState {
        rho,
        residual,
        spectral_gap,
        unique,
        anchor,
    })
}

/// Steady state plus its per-cycle ledger (computed over the
/// midpoint-anchored cycle, whose totals are anchor-independent).
///
/// The per-cycle energies can be many orders of magnitude below the state
/// norm, in which case a single-cycle ledger closes the first law only to
/// the round-off of one propagation chain. Since the steady-state ledger is
/// cycle-invariant, it is evaluated as an average over as many cycles as it
/// takes for the (bounded) round-off defect to become negligible against
/// the (growing) energy turnover.
pub fn steady_cycle_ledger(
    schedule: &Schedule,
    gens: &GeneratorSet,
    mode: PropagationMode,
) -> Result<(SteadyState, CycleLedger)> {
    let ss = steady_state_at(schedule, gens, mode, CycleAnchor::Midpoint)?;
    let rotated = schedule.rotate_to_midpoint();
    let plan = plan_cycle(&rotated, gens, mode)?;
    let mut totals = CycleLedger::zero(plan.action, plan.tau_cyc);
    let mut rho = ss.rho.clone();
    let mut cycles_run = 0usize;
    let mut batch = 1usize;
    loop {
        for _ in 0..batch {
            plan.run_once(&mut rho, &mut totals)?;
        }
        cycles_run += batch;
        let drift = (rho.as_vector() - ss.rho.as_vector()).norm();
        if drift > 1e-8 {
            return Err(Error::SteadyState(format!(
                "state drifted by {drift:.3e} over the steady-state ledger"
            )));
        }
        // Flows at the round-off floor of the observable have nothing left
        // to amortize.
        let turnover_per_cycle = (totals.work.abs()
            + totals.heat_cold.abs()
            + totals.heat_hot.abs())
            / cycles_run as f64;
        let noise_floor = 64.0 * f64::EPSILON * plan.h0_vec.as_vector().norm();
        if totals.first_law_residual() <= 1e-12
            || turnover_per_cycle <= noise_floor
            || cycles_run >= 4096
        {
            break;
        }
        batch = cycles_run; // doubles the total each round
    }
    check_state_sane(&rho)?;
    let inv = 1.0 / cycles_run as f64;
    let mut per_segment: Vec<SegmentEnergy> = Vec::new();
    for e in &totals.per_segment {
        match per_segment
            .iter_mut()
            .find(|x| x.segment_index == e.segment_index && x.agent == e.agent)
        {
            Some(x) => x.energy += e.energy,
            None => per_segment.push(*e),
        }
    }
    for e in &mut per_segment {
        e.energy *= inv;
    }
    let ledger = CycleLedger {
        work: totals.work * inv,
        heat_cold: totals.heat_cold * inv,
        heat_hot: totals.heat_hot * inv,
        per_segment,
        action: totals.action,
        tau_cyc: totals.tau_cyc,
    };
    Ok((ss, ledger))
}

/// One record per segment boundary along a transient.
#[derive(Debug, Clone)]
pub struct TransientRecord {
    pub time: f64,
    /// Set at cycle boundaries, counting completed cycles.
    pub completed_cycles: Option<usize>,
    pub rho: LiouvilleVector,
    pub cumulative: CycleLedger,
}

/// Applies the cycle segment-by-segment `n_cycles` times, recording states
/// and cumulative energies at every segment boundary.
pub fn evolve_transient(
    schedule: &Schedule,
    gens: &GeneratorSet,
    rho0: &LiouvilleVector,
    n_cycles: usize,
    mode: PropagationMode,
) -> Result<Vec<TransientRecord>> {
    rho0.validate_density()?;
    let plan = plan_cycle(schedule, gens, mode)?;
    let mut rho = rho0.clone();
    if let Some(d) = &plan.projector {
        rho = d.apply(&rho);
    }
    let mut totals = CycleLedger::zero(plan.action, plan.tau_cyc);
    let mut records = vec![TransientRecord {
        time: 0.0,
        completed_cycles: Some(0),
        rho: rho.clone(),
        cumulative: totals.clone(),
    }];
    let mut t = 0.0;
    let n_segments = plan.segments.len();
    for cycle in 0..n_cycles {
        for (idx, seg_plan) in plan.segments.iter().enumerate() {
            let (attrs, mut rho_out) = run_planned_segment(seg_plan, &plan.h0_vec, &rho)?;
            if let Some(d) = &plan.projector {
                rho_out = d.apply(&rho_out);
            }
            for (agent, energy) in attrs {
                match agent {
                    Agent::Cold => totals.heat_cold += energy,
                    Agent::Hot => totals.heat_hot += energy,
                    Agent::Drive => totals.work += energy,
                }
            }
            t += seg_plan.duration;
            rho = rho_out;
            let at_cycle_end = idx + 1 == n_segments;
            records.push(TransientRecord {
                time: t,
                completed_cycles: at_cycle_end.then_some(cycle + 1),
                rho: rho.clone(),
                cumulative: totals.clone(),
            });
        }
        check_state_sane(&rho)?;
        rho.validate_density()
            .map_err(|e| Error::CptpViolation(format!("after cycle {}: {e}", cycle + 1)))?;
    }
    Ok(records)
}

/// Splits the work of an isolated drive stroke `exp(-i M tau_w)` into the
/// coherent part (odd powers of the drive acting on the coherences) and the
/// stochastic part (even powers acting on the populations). The two parts
/// sum to the exact stroke work.
pub fn decompose_work(
    h0: &HilbertOperator,
    rho: &LiouvilleVector,
    drive_gen: &SuperOperator,
    tau_w: f64,
) -> Result<(f64, f64)> {
    if tau_w < 0.0 {
        return Err(Error::NegativeDuration(tau_w));
    }
    let h0_vec = vectorize(h0);
    let m = drive_gen.matrix() * C64::new(0.0, -tau_w);
    let series = |start: &LiouvilleVector, keep_odd: bool| -> f64 {
        let mut term = start.as_vector().clone();
        let mut acc = 0.0;
        for k in 1..=200usize {
            term = &m * &term / c(k as f64);
            let keep = if keep_odd { k % 2 == 1 } else { k % 2 == 0 && k >= 2 };
            if keep {
                acc += h0_vec.as_vector().dotc(&term).re;
            }
            if term.norm() < 1e-30 {
                break;
            }
        }
        acc
    };
    let w_coherent = series(&rho.coherence_part(), true);
    let w_stochastic = series(&rho.population_part(), false);
    Ok((w_coherent, w_stochastic))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::liouville::{expectation, unvectorize};
    use crate::model::{gibbs_state, EngineModel};
    use crate::protocol::{
        continuous_schedule, four_stroke_schedule, schedule_for, two_stroke_schedule, Weights,
    };
    use approx::assert_abs_diff_eq;

    fn model() -> EngineModel {
        EngineModel::default()
    }

    fn tau_for(m: f64) -> f64 {
        model().cycle_time(m)
    }

    #[test]
    fn dephasing_generator_decays_single_coherence() {
        let rate = 0.25;
        let l = build_dephasing(4, rate).unwrap();
        let mut v = LiouvilleVector::maximally_mixed(4).as_vector().clone();
        v[0 + 4 * 1] = c(0.1);
        v[1 + 4 * 0] = c(0.1);
        let rho = LiouvilleVector::from_vector(v).unwrap();
        let t = 3.0;
        let out = l.propagator(t).unwrap().apply(&rho);
        let m = unvectorize(&out);
        assert_abs_diff_eq!(m[(0, 1)].re, 0.1 * (-rate * t).exp(), epsilon = 1e-12);
        assert_eq!(out.populations(), rho.populations());
        // populations invariant under the projector too
        let d = complete_dephase(4);
        assert_eq!(d.apply(&rho).populations(), rho.populations());
    }

    #[test]
    fn thermal_segment_attributes_no_work() {
        let gens = model().generators().unwrap();
        let seg = Segment::new(2.5, Weights::thermal(3.0, 0.0));
        let rho = LiouvilleVector::basis_state(4, 3);
        let (attrs, _) = segment_energy_ledger(&seg, &gens, &rho, PropagationMode::Coherent).unwrap();
        assert_eq!(attrs.len(), 1);
        assert_eq!(attrs[0].0, Agent::Cold);
    }

    #[test]
    fn multi_agent_attribution_matches_manifold_bookkeeping() {
        // In a simultaneous thermal segment the two baths act on disjoint
        // manifolds, so the exact heat split is the energy change of each
        // manifold's populations. The current integration must agree.
        let gens = model().generators().unwrap();
        let seg = Segment::new(tau_for(1.0) / 3.0, Weights::thermal(1.5, 1.5));
        let rho = LiouvilleVector::basis_state(4, 3);
        let (attrs, rho_out) =
            segment_energy_ledger(&seg, &gens, &rho, PropagationMode::Coherent).unwrap();
        let levels = model().levels;
        let de = |sel: &[usize]| -> f64 {
            sel.iter()
                .map(|&k| levels[k] * (rho_out.populations()[k] - rho.populations()[k]))
                .sum()
        };
        let q_cold_direct = de(&model().cold_manifold);
        let q_hot_direct = de(&model().hot_manifold);
        for (agent, e) in attrs {
            match agent {
                Agent::Cold => assert_abs_diff_eq!(e, q_cold_direct, epsilon = 1e-12),
                Agent::Hot => assert_abs_diff_eq!(e, q_hot_direct, epsilon = 1e-12),
                Agent::Drive => panic!("no drive in a thermal segment"),
            }
        }
    }

    #[test]
    fn continuous_steady_state_solves_the_generator_kernel() {
        let m = model();
        let gens = m.generators().unwrap();
        let sched = continuous_schedule(tau_for(1.0)).unwrap();
        let ss = steady_state(&sched, &gens).unwrap();
        assert!(ss.unique);
        assert!(ss.residual <= 1e-10);
        ss.rho.validate_density().unwrap();
        let g = sched.segments()[0].generator(&gens).unwrap();
        assert!(g.apply(&ss.rho).as_vector().norm() <= 1e-10);
    }

    #[test]
    fn stroke_and_continuous_steady_states_agree_to_cubic_order() {
        let m = model();
        let gens = m.generators().unwrap();
        let tau = tau_for(1.0);
        let cont = continuous_schedule(tau).unwrap();
        let four = four_stroke_schedule(tau).unwrap();
        let s = cont.action(&gens).unwrap();
        let ss_c = steady_state(&cont, &gens).unwrap();
        let ss_4 = steady_state(&four, &gens).unwrap();
        let diff = (ss_c.rho.as_vector() - ss_4.rho.as_vector()).norm();
        assert!(
            diff <= s.powi(3),
            "steady states differ by {diff:.3e}, action cubed is {:.3e}",
            s.powi(3)
        );
    }

    #[test]
    fn no_drive_steady_state_is_product_of_manifold_gibbs_states() {
        let mut m = model();
        m.epsilon = 0.0;
        let gens = m.generators().unwrap();
        let sched = continuous_schedule(tau_for(1.0)).unwrap();
        let ss = steady_state(&sched, &gens).unwrap();
        assert!(!ss.unique, "no-drive fixed point must be flagged degenerate");
        // Whatever mixture was returned, each manifold is internally Gibbs.
        let p = ss.rho.populations();
        assert_abs_diff_eq!(p[3] / p[0], (-0.8f64).exp(), epsilon = 1e-9);
        assert_abs_diff_eq!(p[2] / p[1], (-1.0f64).exp(), epsilon = 1e-9);
        assert_abs_diff_eq!(ss.rho.coherence_norm(), 0.0, epsilon = 1e-10);
    }

    #[test]
    fn hot_bath_alone_reaches_detailed_balance_through_the_solver() {
        let mut m = model();
        m.epsilon = 0.0;
        m.gamma_cold = 0.0;
        let gens = m.generators().unwrap();
        let sched = continuous_schedule(tau_for(1.0)).unwrap();
        let ss = steady_state(&sched, &gens).unwrap();
        let p = ss.rho.populations();
        assert_abs_diff_eq!(p[3] / p[0], (-0.8f64).exp(), epsilon = 1e-9);
    }

    #[test]
    fn broken_generator_is_rejected() {
        // A non-generator (random Hermitian matrix that does not annihilate
        // the trace functional) has no eigenvalue pinned near unity.
        let m = model();
        let mut gens = m.generators().unwrap();
        let nn = 16;
        let mut bad = CMat::zeros(nn, nn);
        for k in 0..nn {
            bad[(k, k)] = c(0.3 + 0.1 * k as f64);
        }
        gens.l_cold = SuperOperator::from_matrix(bad, SuperOpKind::Dissipative).unwrap();
        let sched = continuous_schedule(tau_for(1.0)).unwrap();
        assert!(matches!(
            steady_state(&sched, &gens),
            Err(Error::SteadyState(_))
        ));
    }

    #[test]
    fn steady_ledger_closes_the_first_law_and_sits_below_carnot() {
        let m = model();
        let gens = m.generators().unwrap();
        for kind in [
            EngineKind::Continuous,
            EngineKind::TwoStroke,
            EngineKind::FourStroke,
            EngineKind::TwoField,
        ] {
            let sched = schedule_for(kind, tau_for(1.0)).unwrap();
            let (_, ledger) = steady_cycle_ledger(&sched, &gens, PropagationMode::Coherent).unwrap();
            assert!(
                ledger.first_law_residual() <= 1e-10,
                "{kind}: first-law residual {:.3e}",
                ledger.first_law_residual()
            );
            let eta = ledger.efficiency().expect("engine mode");
            assert!(eta <= 1.0 - m.t_cold / m.t_hot + 1e-9, "{kind}: efficiency {eta}");
            assert!(ledger.output_power() > 0.0, "{kind} should deliver work");
            // resonant quanta bookkeeping fixes the efficiency at
            // 1 - dE_c/dE_h for disjoint manifolds
            assert_abs_diff_eq!(eta, 0.75, epsilon = 1e-9);
        }
    }

    #[test]
    fn steady_state_power_equals_the_direct_current_expression() {
        let m = model();
        let gens = m.generators().unwrap();
        let sched = continuous_schedule(tau_for(1.0)).unwrap();
        let (ss, ledger) = steady_cycle_ledger(&sched, &gens, PropagationMode::Coherent).unwrap();
        // W = -i <H0| (Hw/2) |rho_s> tau for the time-independent steady state
        let h0_vec = vectorize(&gens.h0);
        let j_w = (MINUS_I * h0_vec.as_vector().dotc(&(gens.hw_half.matrix() * ss.rho.as_vector()))).re;
        let w_expect = j_w * sched.tau_cyc();
        assert_abs_diff_eq!(ledger.work, w_expect, epsilon = 1e-11 * w_expect.abs());
        // P + J_c + J_h = 0
        let balance = ledger.power() + ledger.current_cold() + ledger.current_hot();
        assert!(balance.abs() <= 1e-10 * ledger.power().abs().max(1e-30));
    }

    #[test]
    fn transient_from_steady_state_repeats_identically() {
        let m = model();
        let gens = m.generators().unwrap();
        let sched = four_stroke_schedule(tau_for(1.0)).unwrap();
        let ss = steady_state_at(
            &sched,
            &gens,
            PropagationMode::Coherent,
            CycleAnchor::Start,
        )
        .unwrap();
        let records = evolve_transient(&sched, &gens, &ss.rho, 3, PropagationMode::Coherent).unwrap();
        let cycles: Vec<&TransientRecord> = records
            .iter()
            .filter(|r| r.completed_cycles.is_some() && r.time > 0.0)
            .collect();
        let w1 = cycles[0].cumulative.work;
        for (k, rec) in cycles.iter().enumerate() {
            assert_abs_diff_eq!(
                rec.cumulative.work,
                w1 * (k + 1) as f64,
                epsilon = 1e-10 * w1.abs().max(1e-30) * (k + 1) as f64
            );
        }
    }

    #[test]
    fn transient_blow_up_is_reported() {
        // Scale a generator by a complex factor so it is no longer trace
        // preserving; evolution inflates the trace and must be caught.
        let m = model();
        let mut gens = m.generators().unwrap();
        let broken = gens.l_hot.matrix() * C64::new(0.0, 200.0);
        gens.l_hot = SuperOperator::from_matrix(broken, SuperOpKind::Dissipative).unwrap();
        let sched = four_stroke_schedule(tau_for(1.0)).unwrap();
        let rho0 = LiouvilleVector::basis_state(4, 3);
        let r = evolve_transient(&sched, &gens, &rho0, 2, PropagationMode::Coherent);
        assert!(matches!(r, Err(Error::CptpViolation(_))));
    }

    #[test]
    fn diagonal_state_has_no_coherent_work() {
        let m = model();
        let gens = m.generators().unwrap();
        let rho = gibbs_state(&m.levels, m.t_cold, &[0, 1, 2, 3]).unwrap();
        let (w_coh, _) = decompose_work(&gens.h0, &rho, &gens.hw_half.scale(3.0), 1.7).unwrap();
        assert_eq!(w_coh, 0.0);
    }

    #[test]
    fn work_decomposition_sums_to_exact_stroke_work() {
        let m = model();
        let gens = m.generators().unwrap();
        // steady state of the four-stroke engine entering its work stroke
        let sched = four_stroke_schedule(tau_for(1.0)).unwrap();
        let ss = steady_state_at(&sched, &gens, PropagationMode::Coherent, CycleAnchor::Start)
            .unwrap();
        // propagate through the first cold segment to the stroke boundary
        let seg0 = &sched.segments()[0];
        let rho_at_stroke = seg0
            .generator(&gens)
            .unwrap()
            .propagator(seg0.duration)
            .unwrap()
            .apply(&ss.rho);
        let drive = gens.hw_half.scale(3.0);
        let tau_w = sched.segments()[1].duration;
        let (w_coh, w_stoch) = decompose_work(&gens.h0, &rho_at_stroke, &drive, tau_w).unwrap();
        let h0_vec = vectorize(&gens.h0);
        let p = drive.propagator(tau_w).unwrap();
        let exact = energy_of(&h0_vec, &p.apply(&rho_at_stroke)) - energy_of(&h0_vec, &rho_at_stroke);
        assert_abs_diff_eq!(w_coh + w_stoch, exact, epsilon = 1e-12 * exact.abs().max(1e-15));
        // the coherent channel dominates in the small-action regime
        assert!(w_coh.abs() > w_stoch.abs());
    }

    #[test]
    fn full_swap_stroke_work_matches_permutation_oracle() {
        // A pi rotation on both drive pairs swaps populations 1<->2, 3<->4.
        // For a diagonal input the stroke work is then a pure permutation
        // energy difference.
        let mut m = model();
        m.epsilon = 5e-4;
        let gens = m.generators().unwrap();
        let rho = LiouvilleVector::from_vector({
            let mut v = crate::liouville::CVec::zeros(16);
            let pops = [0.4, 0.3, 0.2, 0.1];
            for (k, p) in pops.iter().enumerate() {
                v[k + 4 * k] = c(*p);
            }
            v
        })
        .unwrap();
        // half-drive generator at weight 1: gap of Hw is 2 eps, a full swap
        // takes tau_w = 2 pi / gap = pi / eps.
        let tau_w = std::f64::consts::PI / m.epsilon;
        let (w_coh, w_stoch) = decompose_work(&gens.h0, &rho, &gens.hw_half, tau_w).unwrap();
        assert_eq!(w_coh, 0.0);
        let levels = &m.levels;
        let pops = rho.populations();
        let swapped = [pops[1], pops[0], pops[3], pops[2]];
        let oracle: f64 = levels
            .iter()
            .zip(swapped.iter().zip(&pops))
            .map(|(e, (after, before))| e * (after - before))
            .sum();
        assert_abs_diff_eq!(w_stoch, oracle, epsilon = 1e-10 * oracle.abs());
    }

    #[test]
    fn continuous_engine_stochastic_work_vanishes_per_unit_time() {
        // For an infinitesimal slice of the continuous evolution the
        // stochastic share of the work rate goes to zero.
        let m = model();
        let gens = m.generators().unwrap();
        let sched = continuous_schedule(tau_for(1.0)).unwrap();
        let ss = steady_state(&sched, &gens).unwrap();
        let mut prev_rate = f64::INFINITY;
        for tau_w in [1e-2, 1e-3, 1e-4] {
            let (_, w_stoch) = decompose_work(&gens.h0, &ss.rho, &gens.hw_half, tau_w).unwrap();
            let rate = w_stoch.abs() / tau_w;
            assert!(rate < prev_rate);
            prev_rate = rate;
        }
        assert!(prev_rate <= 1e-12);
    }

    #[test]
    fn complete_dephasing_kills_continuous_power() {
        let m = model();
        let gens = m.generators().unwrap();
        let sched = continuous_schedule(tau_for(1.0)).unwrap();
        let (_, ledger) =
            steady_cycle_ledger(&sched, &gens, PropagationMode::CompleteDephasing).unwrap();
        assert!(
            ledger.work.abs() <= 1e-12,
            "dephased continuous work {:.3e}",
            ledger.work
        );
    }

    #[test]
    fn dephased_stroke_engine_still_closes_the_first_law() {
        let m = model();
        let gens = m.generators().unwrap();
        let sched = two_stroke_schedule(tau_for(1.0)).unwrap();
        let (_, ledger) =
            steady_cycle_ledger(&sched, &gens, PropagationMode::CompleteDephasing).unwrap();
        assert!(ledger.first_law_residual() <= 1e-10);
        assert!(ledger.output_power() > 0.0);
    }

    #[test]
    fn rate_dephasing_runs_through_the_generator_channel() {
        let m = model();
        let rate = 1.0 / (100.0 * m.drive_period());
        let gens = m.generators().unwrap().with_dephasing(rate).unwrap();
        let sched = four_stroke_schedule(tau_for(1.0))
            .unwrap()
            .with_dephasing_channel();
        let (_, ledger) = steady_cycle_ledger(&sched, &gens, PropagationMode::Coherent).unwrap();
        assert!(ledger.first_law_residual() <= 1e-10);
        // action gains the dephasing norm contribution
        let bare = four_stroke_schedule(tau_for(1.0)).unwrap();
        let bare_gens = m.generators().unwrap();
        let s_bare = bare.action(&bare_gens).unwrap();
        let s_deph = sched.action(&gens).unwrap();
        assert_abs_diff_eq!(
            s_deph - s_bare,
            gens.norm_dephase * sched.tau_cyc(),
            epsilon = 1e-12 * s_deph
        );
    }

    #[test]
    fn expectation_of_identity_is_preserved_along_transients() {
        let m = model();
        let gens = m.generators().unwrap();
        let sched = two_stroke_schedule(tau_for(1.0)).unwrap();
        let rho0 = LiouvilleVector::basis_state(4, 3);
        let records = evolve_transient(&sched, &gens, &rho0, 2, PropagationMode::Coherent).unwrap();
        let id = HilbertOperator::hermitian(CMat::identity(4, 4)).unwrap();
        for r in &records {
            assert_abs_diff_eq!(expectation(&id, &r.rho).unwrap(), 1.0, epsilon = 1e-10);
        }
    }
}
