//! Engine protocols: symmetric sequences of constant-generator segments.
//!
//! A schedule covers one cycle `[-tau/2, +tau/2]` with the segment list
//! running in time order, palindromic about the midpoint. Segment weights
//! are dimensionless multipliers on the shared generator set, so a stroke
//! that compresses a coupling into a third of the cycle simply carries
//! weight 3 on that channel. Every schedule conserves the weight-time area
//! of each channel at exactly one cycle time, which is what makes the
//! different engine types split the same continuous evolution.

use crate::liouville::{complete_dephasing_projector, SuperOperator, SuperOpKind};
use crate::model::GeneratorSet;
use crate::{Error, Result};

/// Relative tolerance for symmetry and area validation.
const TOL_SCHEDULE: f64 = 1e-12;

/// Engine family tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EngineKind {
    Continuous,
    TwoStroke,
    FourStroke,
    /// Four-stroke variant with the drive split into two separately
    /// scheduled pair couplings.
    TwoField,
    /// Product of a symmetric rearrangement.
    Rearranged,
}

impl std::fmt::Display for EngineKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            EngineKind::Continuous => "continuous",
            EngineKind::TwoStroke => "two-stroke",
            EngineKind::FourStroke => "four-stroke",
            EngineKind::TwoField => "two-field",
            EngineKind::Rearranged => "rearranged",
        };
        f.write_str(s)
    }
}

/// Whether propagation keeps coherences or projects them out at stroke
/// boundaries (with dephasing also acting in parallel to any thermal
/// coupling inside a segment).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PropagationMode {
    Coherent,
    CompleteDephasing,
}

/// Multipliers applied to the generator channels during one segment.
#[derive(Debug, Clone, PartialEq)]
pub struct Weights {
    pub cold: f64,
    pub hot: f64,
    /// Multiplier on the half-drive generator (all pairs together).
    pub drive: f64,
    /// Multipliers on the per-pair half-drive generators.
    pub drive_pairs: Vec<f64>,
    /// Multiplier on the pure-dephasing generator.
    pub dephase: f64,
}

impl Weights {
    pub fn zero() -> Self {
        Self {
            cold: 0.0,
            hot: 0.0,
            drive: 0.0,
            drive_pairs: Vec::new(),
            dephase: 0.0,
        }
    }

    pub fn thermal(cold: f64, hot: f64) -> Self {
        Self {
            cold,
            hot,
            ..Self::zero()
        }
    }

    pub fn drive(w: f64) -> Self {
        Self {
            drive: w,
            ..Self::zero()
        }
    }

    pub fn drive_pair(index: usize, w: f64) -> Self {
        let mut pairs = vec![0.0; index + 1];
        pairs[index] = w;
        Self {
            drive_pairs: pairs,
            ..Self::zero()
        }
    }

    pub fn all_on() -> Self {
        Self {
            cold: 1.0,
            hot: 1.0,
            drive: 1.0,
            drive_pairs: Vec::new(),
            dephase: 0.0,
        }
    }

    pub fn pair_weight(&self, index: usize) -> f64 {
        self.drive_pairs.get(index).copied().unwrap_or(0.0)
    }

    pub fn max_pair_channels(&self) -> usize {
        self.drive_pairs.len()
    }

    /// Any work-repository coupling active?
    pub fn drive_on(&self) -> bool {
        self.drive != 0.0 || self.drive_pairs.iter().any(|w| *w != 0.0)
    }

    pub fn thermal_on(&self) -> bool {
        self.cold != 0.0 || self.hot != 0.0
    }

    fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        let close = |a: f64, b: f64| (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0);
        let pairs = self.drive_pairs.len().max(other.drive_pairs.len());
        close(self.cold, other.cold)
            && close(self.hot, other.hot)
            && close(self.drive, other.drive)
            && close(self.dephase, other.dephase)
            && (0..pairs).all(|i| close(self.pair_weight(i), other.pair_weight(i)))
    }
}

/// One constant-generator time segment.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub duration: f64,
    pub weights: Weights,
}

impl Segment {
    pub fn new(duration: f64, weights: Weights) -> Self {
        Self { duration, weights }
    }

    /// The segment's generator: the weighted sum of the set's channels.
    pub fn generator(&self, gens: &GeneratorSet) -> Result<SuperOperator> {
        let w = &self.weights;
        let mut terms: Vec<(f64, &SuperOperator)> = vec![
            (w.cold, &gens.l_cold),
            (w.hot, &gens.l_hot),
            (w.drive, &gens.hw_half),
        ];
        for (i, &pw) in w.drive_pairs.iter().enumerate() {
            if pw != 0.0 {
                let g = gens.hw_pair_halves.get(i).ok_or_else(|| {
                    Error::InvalidSchedule(format!(
                        "segment uses drive pair {i} but the generator set has only {} pairs",
                        gens.hw_pair_halves.len()
                    ))
                })?;
                terms.push((pw, g));
            }
        }
        if w.dephase != 0.0 {
            let (_, l) = gens.l_dephase.as_ref().ok_or_else(|| {
                Error::InvalidSchedule(
                    "segment uses a dephasing weight but the generator set has no dephasing generator"
                        .into(),
                )
            })?;
            terms.push((w.dephase, l));
        }
        SuperOperator::linear_combination(&terms)
    }

    /// Generator actually used during propagation: under complete dephasing,
    /// segments with thermal coupling act entirely inside the population
    /// sector (dephasing runs in parallel to the baths), while drive-only
    /// segments keep their coherent generator and are dephased at their
    /// boundaries instead.
    pub fn effective_generator(
        &self,
        gens: &GeneratorSet,
        mode: PropagationMode,
    ) -> Result<SuperOperator> {
        let g = self.generator(gens)?;
        match mode {
            PropagationMode::Coherent => Ok(g),
            PropagationMode::CompleteDephasing => {
                if self.weights.thermal_on() {
                    let d = complete_dephasing_projector(gens.dim());
                    let sandwiched = d.compose(&g).compose(&d);
                    Ok(SuperOperator::from_matrix(
                        sandwiched.matrix().clone(),
                        SuperOpKind::Composite,
                    )?)
                } else {
                    Ok(g)
                }
            }
        }
    }

    /// Contribution to the schedule action: duration times the weighted sum
    /// of channel norms.
    fn action_contribution(&self, gens: &GeneratorSet) -> Result<f64> {
        let w = &self.weights;
        if w.dephase != 0.0 && gens.l_dephase.is_none() {
            return Err(Error::InvalidSchedule(
                "schedule carries a dephasing weight but the generator set has no dephasing generator"
                    .into(),
            ));
        }
        let mut per_time = w.cold * gens.norm_cold + w.hot * gens.norm_hot + w.drive * gens.norm_drive;
        for (i, &pw) in w.drive_pairs.iter().enumerate() {
            if pw != 0.0 {
                let norm = gens.norm_pairs.get(i).ok_or_else(|| {
                    Error::InvalidSchedule(format!("no generator for drive pair {i}"))
                })?;
                per_time += pw * norm;
            }
        }
        per_time += w.dephase * gens.norm_dephase;
        Ok(self.duration * per_time)
    }
}

/// A full engine cycle.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    segments: Vec<Segment>,
    tau_cyc: f64,
    kind: EngineKind,
}

impl Schedule {
    /// Builds and validates. Rejects schedules that break reflection
    /// symmetry or the per-channel area conservation.
    pub fn new(segments: Vec<Segment>, kind: EngineKind) -> Result<Self> {
        let tau_cyc: f64 = segments.iter().map(|s| s.duration).sum();
        let sched = Self {
            segments,
            tau_cyc,
            kind,
        };
        sched.validate()?;
        Ok(sched)
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn tau_cyc(&self) -> f64 {
        self.tau_cyc
    }

    pub fn kind(&self) -> EngineKind {
        self.kind
    }

    /// Fraction of the cycle with the work coupling on.
    pub fn duty_cycle(&self) -> f64 {
        let on: f64 = self
            .segments
            .iter()
            .filter(|s| s.weights.drive_on())
            .map(|s| s.duration)
            .sum();
        on / self.tau_cyc
    }

    fn max_pair_channels(&self) -> usize {
        self.segments
            .iter()
            .map(|s| s.weights.max_pair_channels())
            .max()
            .unwrap_or(0)
    }

    /// Weight-time area of each channel.
    fn areas(&self) -> (f64, f64, f64, Vec<f64>, f64) {
        let pairs = self.max_pair_channels();
        let mut cold = 0.0;
        let mut hot = 0.0;
        let mut drive = 0.0;
        let mut pair_areas = vec![0.0; pairs];
        let mut deph = 0.0;
        for s in &self.segments {
            cold += s.weights.cold * s.duration;
            hot += s.weights.hot * s.duration;
            drive += s.weights.drive * s.duration;
            for (i, a) in pair_areas.iter_mut().enumerate() {
                *a += s.weights.pair_weight(i) * s.duration;
            }
            deph += s.weights.dephase * s.duration;
        }
        (cold, hot, drive, pair_areas, deph)
    }

    pub fn validate(&self) -> Result<()> {
        if self.segments.is_empty() {
            return Err(Error::InvalidSchedule("no segments".into()));
        }
        if !(self.tau_cyc > 0.0) || !self.tau_cyc.is_finite() {
            return Err(Error::InvalidSchedule(format!(
                "cycle time must be positive and finite, got {}",
                self.tau_cyc
            )));
        }
        for s in &self.segments {
            if !(s.duration >= 0.0) || !s.duration.is_finite() {
                return Err(Error::InvalidSchedule(format!(
                    "segment duration {} is invalid",
                    s.duration
                )));
            }
        }
        // Reflection symmetry about the cycle midpoint.
        let n = self.segments.len();
        for i in 0..n / 2 + 1 {
            let a = &self.segments[i];
            let b = &self.segments[n - 1 - i];
            let dur_ok =
                (a.duration - b.duration).abs() <= TOL_SCHEDULE * a.duration.max(b.duration).max(1e-300);
            if !dur_ok || !a.weights.approx_eq(&b.weights, TOL_SCHEDULE) {
                return Err(Error::InvalidSchedule(format!(
                    "segments {i} and {} break reflection symmetry",
                    n - 1 - i
                )));
            }
        }
        // Area conservation against the continuous engine.
        let (cold, hot, drive, pair_areas, deph) = self.areas();
        let tau = self.tau_cyc;
        let close = |x: f64, y: f64| (x - y).abs() <= TOL_SCHEDULE * y.max(1e-300);
        if !close(cold, tau) {
            return Err(Error::InvalidSchedule(format!(
                "cold-coupling area {cold} != cycle time {tau}"
            )));
        }
        if !close(hot, tau) {
            return Err(Error::InvalidSchedule(format!(
                "hot-coupling area {hot} != cycle time {tau}"
            )));
        }
        if pair_areas.is_empty() {
            if !close(drive, tau) {
                return Err(Error::InvalidSchedule(format!(
                    "drive area {drive} != cycle time {tau}"
                )));
            }
        } else {
            // Split drive: the combined-channel and per-pair areas must add
            // up to one full cycle for every pair.
            for (i, pa) in pair_areas.iter().enumerate() {
                if !close(drive + pa, tau) {
                    return Err(Error::InvalidSchedule(format!(
                        "drive area {} for pair {i} != cycle time {tau}",
                        drive + pa
                    )));
                }
            }
        }
        if !(close(deph, 0.0) || close(deph, tau)) {
            return Err(Error::InvalidSchedule(format!(
                "dephasing area {deph} must be zero or one full cycle"
            )));
        }
        Ok(())
    }

    /// Turns on the parallel dephasing channel for the whole cycle.
    pub fn with_dephasing_channel(&self) -> Schedule {
        let mut out = self.clone();
        for s in &mut out.segments {
            s.weights.dephase = 1.0;
        }
        out
    }

    /// Action of the cycle: sum over segments of duration times the weighted
    /// channel norms. For the continuous schedule this reduces to
    /// `(||L_c|| + ||L_h|| + ||Hw/2||) tau_cyc`.
    pub fn action(&self, gens: &GeneratorSet) -> Result<f64> {
        self.segments
            .iter()
            .map(|s| s.action_contribution(gens))
            .sum()
    }

    /// Ordered product of segment propagators (first segment acts first).
    pub fn cycle_propagator(
        &self,
        gens: &GeneratorSet,
        mode: PropagationMode,
    ) -> Result<SuperOperator> {
        let nn = gens.dim();
        let mut k = match mode {
            PropagationMode::Coherent => {
                SuperOperator::from_matrix(crate::liouville::CMat::identity(nn * nn, nn * nn), SuperOpKind::Propagator)?
            }
            PropagationMode::CompleteDephasing => complete_dephasing_projector(nn),
        };
        for seg in &self.segments {
            let g = seg.effective_generator(gens, mode)?;
            let p = g.propagator(seg.duration)?;
            k = p.compose(&k);
            if mode == PropagationMode::CompleteDephasing {
                k = complete_dephasing_projector(nn).compose(&k);
            }
        }
        Ok(k)
    }

    /// Splits every segment into `parts` equal sub-segments. The cycle
    /// propagator is unchanged (same generator, same total time).
    pub fn subdivide(&self, parts: usize) -> Result<Schedule> {
        if parts == 0 {
            return Err(Error::InvalidSchedule("cannot subdivide into 0 parts".into()));
        }
        let mut segments = Vec::with_capacity(self.segments.len() * parts);
        for s in &self.segments {
            for _ in 0..parts {
                segments.push(Segment::new(s.duration / parts as f64, s.weights.clone()));
            }
        }
        Ok(Schedule {
            segments,
            tau_cyc: self.tau_cyc,
            kind: self.kind,
        })
    }

    /// Merges adjacent segments with identical weights.
    pub fn merged(&self) -> Schedule {
        let mut segments: Vec<Segment> = Vec::new();
        for s in &self.segments {
            if let Some(last) = segments.last_mut() {
                if last.weights.approx_eq(&s.weights, TOL_SCHEDULE) {
                    last.duration += s.duration;
                    continue;
                }
            }
            segments.push(s.clone());
        }
        Schedule {
            segments,
            tau_cyc: self.tau_cyc,
            kind: self.kind,
        }
    }

    /// The same cycle re-anchored to start at the midpoint: segments from
    /// the second half first, then the first half. A segment straddling the
    /// midpoint is split there.
    pub fn rotate_to_midpoint(&self) -> Schedule {
        let half = self.tau_cyc / 2.0;
        let mut first: Vec<Segment> = Vec::new();
        let mut second: Vec<Segment> = Vec::new();
        let mut t = 0.0;
        for s in &self.segments {
            let end = t + s.duration;
            if end <= half * (1.0 + 1e-15) && !(t < half && end > half) {
                first.push(s.clone());
            } else if t >= half * (1.0 - 1e-15) {
                second.push(s.clone());
            } else {
                // straddles the midpoint
                first.push(Segment::new(half - t, s.weights.clone()));
                second.push(Segment::new(end - half, s.weights.clone()));
            }
            t = end;
        }
        let mut segments = second;
        segments.append(&mut first);
        Schedule {
            segments,
            tau_cyc: self.tau_cyc,
            kind: self.kind,
        }
    }

    /// Bins of the positive half-cycle `[0, tau/2]`, in time order.
    pub fn positive_half_bins(&self) -> Vec<Segment> {
        let rotated = self.rotate_to_midpoint();
        let half = self.tau_cyc / 2.0;
        let mut bins = Vec::new();
        let mut t = 0.0;
        for s in rotated.segments {
            if t >= half * (1.0 - 1e-15) {
                break;
            }
            bins.push(s.clone());
            t += s.duration;
        }
        bins
    }

    /// Permutes the positive-half bins and mirrors the result onto the
    /// negative half, preserving reflection symmetry and all channel areas.
    pub fn symmetric_rearrange(&self, permutation: &[usize]) -> Result<Schedule> {
        self.validate()?;
        let bins = self.positive_half_bins();
        if permutation.len() != bins.len() {
            return Err(Error::InvalidSchedule(format!(
                "permutation length {} != number of positive-half bins {}",
                permutation.len(),
                bins.len()
            )));
        }
        let mut seen = vec![false; bins.len()];
        for &p in permutation {
            if p >= bins.len() || seen[p] {
                return Err(Error::InvalidSchedule(
                    "index list is not a permutation of the positive-half bins".into(),
                ));
            }
            seen[p] = true;
        }
        let positive: Vec<Segment> = permutation.iter().map(|&p| bins[p].clone()).collect();
        let mut segments: Vec<Segment> = positive.iter().rev().cloned().collect();
        segments.extend(positive);
        let rearranged = Schedule {
            segments,
            tau_cyc: self.tau_cyc,
            kind: if permutation.windows(2).all(|w| w[0] < w[1]) {
                self.kind
            } else {
                EngineKind::Rearranged
            },
        }
        .merged();
        rearranged.validate()?;
        Ok(rearranged)
    }
}

/// Single segment with every coupling on at unit weight.
pub fn continuous_schedule(tau_cyc: f64) -> Result<Schedule> {
    check_tau(tau_cyc)?;
    Schedule::new(
        vec![Segment::new(tau_cyc, Weights::all_on())],
        EngineKind::Continuous,
    )
}

/// Cold / work / hot / work / cold at triple coupling, durations
/// (1/6, 1/6, 1/3, 1/6, 1/6) of the cycle. The two cold end segments are the
/// halves of one periodic thermal stroke.
pub fn four_stroke_schedule(tau_cyc: f64) -> Result<Schedule> {
    check_tau(tau_cyc)?;
    let sixth = tau_cyc / 6.0;
    Schedule::new(
        vec![
            Segment::new(sixth, Weights::thermal(3.0, 0.0)),
            Segment::new(sixth, Weights::drive(3.0)),
            Segment::new(2.0 * sixth, Weights::thermal(0.0, 3.0)),
            Segment::new(sixth, Weights::drive(3.0)),
            Segment::new(sixth, Weights::thermal(3.0, 0.0)),
        ],
        EngineKind::FourStroke,
    )
}

/// Simultaneous thermal coupling at 3/2 strength around a central work
/// stroke, each a third of the cycle.
pub fn two_stroke_schedule(tau_cyc: f64) -> Result<Schedule> {
    check_tau(tau_cyc)?;
    let third = tau_cyc / 3.0;
    Schedule::new(
        vec![
            Segment::new(third, Weights::thermal(1.5, 1.5)),
            Segment::new(third, Weights::drive(3.0)),
            Segment::new(third, Weights::thermal(1.5, 1.5)),
        ],
        EngineKind::TwoStroke,
    )
}

/// Four-stroke variant with two physically distinct drive couplings, one per
/// drive pair, each carrying a full cycle of area on its own channel:
/// cold / pair-0 / hot / pair-1 / hot / pair-0 / cold. Total drive-on time
/// stays at one third of the cycle.
pub fn two_field_four_stroke_schedule(tau_cyc: f64) -> Result<Schedule> {
    check_tau(tau_cyc)?;
    let sixth = tau_cyc / 6.0;
    let twelfth = tau_cyc / 12.0;
    Schedule::new(
        vec![
            Segment::new(sixth, Weights::thermal(3.0, 0.0)),
            Segment::new(twelfth, Weights::drive_pair(0, 6.0)),
            Segment::new(sixth, Weights::thermal(0.0, 3.0)),
            Segment::new(sixth, Weights::drive_pair(1, 6.0)),
            Segment::new(sixth, Weights::thermal(0.0, 3.0)),
            Segment::new(twelfth, Weights::drive_pair(0, 6.0)),
            Segment::new(sixth, Weights::thermal(3.0, 0.0)),
        ],
        EngineKind::TwoField,
    )
}

/// Convenience constructor by engine kind.
pub fn schedule_for(kind: EngineKind, tau_cyc: f64) -> Result<Schedule> {
    match kind {
        EngineKind::Continuous => continuous_schedule(tau_cyc),
        EngineKind::TwoStroke => two_stroke_schedule(tau_cyc),
        EngineKind::FourStroke => four_stroke_schedule(tau_cyc),
        EngineKind::TwoField => two_field_four_stroke_schedule(tau_cyc),
        EngineKind::Rearranged => Err(Error::InvalidSchedule(
            "rearranged schedules are produced by symmetric_rearrange".into(),
        )),
    }
}

fn check_tau(tau_cyc: f64) -> Result<()> {
    if !(tau_cyc > 0.0) || !tau_cyc.is_finite() {
        return Err(Error::InvalidSchedule(format!(
            "cycle time must be positive, got {tau_cyc}"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::liouville::TOL_STRUCT;
    use crate::model::EngineModel;
    use approx::assert_abs_diff_eq;

    fn gens() -> GeneratorSet {
        EngineModel::default().generators().unwrap()
    }

    #[test]
    fn continuous_cycle_time_and_areas() {
        let model = EngineModel::default();
        let tau = model.cycle_time(1.0);
        assert_abs_diff_eq!(tau, 25.132741228718345, epsilon = 1e-12);
        let s = continuous_schedule(tau).unwrap();
        assert_eq!(s.segments().len(), 1);
        let (cold, hot, drive, _, _) = s.areas();
        assert_abs_diff_eq!(cold, tau);
        assert_abs_diff_eq!(hot, tau);
        assert_abs_diff_eq!(drive, tau);
        assert!(continuous_schedule(-1.0).is_err());
    }

    #[test]
    fn four_stroke_structure() {
        let tau = 12.0;
        let s = four_stroke_schedule(tau).unwrap();
        assert_eq!(s.segments().len(), 5);
        let d: Vec<f64> = s.segments().iter().map(|x| x.duration).collect();
        assert_abs_diff_eq!(d[0], 2.0);
        assert_abs_diff_eq!(d[2], 4.0);
        assert_abs_diff_eq!(s.duty_cycle(), 1.0 / 3.0, epsilon = 1e-15);
        // first and last segments are halves of one cold stroke
        assert_eq!(s.segments()[0].weights, s.segments()[4].weights);

        let (cold, hot, drive, _, _) = s.areas();
        assert_abs_diff_eq!(cold, tau, epsilon = 1e-12);
        assert_abs_diff_eq!(hot, tau, epsilon = 1e-12);
        assert_abs_diff_eq!(drive, tau, epsilon = 1e-12);
    }

    #[test]
    fn two_stroke_structure() {
        let s = two_stroke_schedule(9.0).unwrap();
        assert_eq!(s.segments().len(), 3);
        assert!(s.segments()[0].weights.cold == 1.5 && s.segments()[0].weights.hot == 1.5);
        assert_abs_diff_eq!(s.duty_cycle(), 1.0 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn two_field_structure() {
        let tau = 24.0;
        let s = two_field_four_stroke_schedule(tau).unwrap();
        let (cold, hot, drive, pairs, _) = s.areas();
        assert_abs_diff_eq!(cold, tau, epsilon = 1e-12);
        assert_abs_diff_eq!(hot, tau, epsilon = 1e-12);
        assert_abs_diff_eq!(drive, 0.0);
        assert_abs_diff_eq!(pairs[0], tau, epsilon = 1e-12);
        assert_abs_diff_eq!(pairs[1], tau, epsilon = 1e-12);
        assert_abs_diff_eq!(s.duty_cycle(), 1.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn asymmetric_schedule_is_rejected() {
        let r = Schedule::new(
            vec![
                Segment::new(1.0, Weights::thermal(3.0, 0.0)),
                Segment::new(1.0, Weights::thermal(0.0, 3.0)),
            ],
            EngineKind::Rearranged,
        );
        assert!(matches!(r, Err(Error::InvalidSchedule(_))));
    }

    #[test]
    fn action_is_shared_by_all_single_field_schedules_and_linear_in_tau() {
        let g = gens();
        let model = EngineModel::default();
        let tau = model.cycle_time(2.0);
        let s_cont = continuous_schedule(tau).unwrap().action(&g).unwrap();
        let s_two = two_stroke_schedule(tau).unwrap().action(&g).unwrap();
        let s_four = four_stroke_schedule(tau).unwrap().action(&g).unwrap();
        assert_abs_diff_eq!(s_cont, s_two, epsilon = 1e-12 * s_cont);
        assert_abs_diff_eq!(s_cont, s_four, epsilon = 1e-12 * s_cont);
        // linearity in cycle time
        let s_cont_half = continuous_schedule(tau / 2.0).unwrap().action(&g).unwrap();
        assert_abs_diff_eq!(s_cont, 2.0 * s_cont_half, epsilon = 1e-12 * s_cont);
        // explicit formula for the continuous engine
        let expect = (g.norm_cold + g.norm_hot + g.norm_drive) * tau;
        assert_abs_diff_eq!(s_cont, expect, epsilon = 1e-12 * expect);
    }

    #[test]
    fn action_vanishes_without_couplings() {
        let mut model = EngineModel::default();
        model.epsilon = 0.0;
        model.gamma_hot = 0.0;
        model.gamma_cold = 0.0;
        let g = model.generators().unwrap();
        let s = continuous_schedule(10.0).unwrap().action(&g).unwrap();
        assert_eq!(s, 0.0);
    }

    #[test]
    fn cycle_propagator_preserves_traces_and_splitting_segments_is_exact() {
        let g = gens();
        let tau = EngineModel::default().cycle_time(1.0);
        let four = four_stroke_schedule(tau).unwrap();
        let k = four.cycle_propagator(&g, PropagationMode::Coherent).unwrap();
        assert!(k.trace_preservation_defect() <= TOL_STRUCT * 4.0);

        let k_split = four
            .subdivide(2)
            .unwrap()
            .cycle_propagator(&g, PropagationMode::Coherent)
            .unwrap();
        assert!((k.matrix() - k_split.matrix()).norm() <= 1e-12);
    }

    #[test]
    fn strang_defect_of_four_stroke_is_cubic_small() {
        // At small action the stroke propagator sits within s^3 of the
        // continuous one.
        let model = EngineModel::default();
        let g = model.generators().unwrap();
        let tau = 0.01 / (g.norm_cold + g.norm_hot + g.norm_drive);
        let cont = continuous_schedule(tau).unwrap();
        let four = four_stroke_schedule(tau).unwrap();
        let s = cont.action(&g).unwrap();
        assert_abs_diff_eq!(s, 0.01, epsilon = 1e-14);
        let kc = cont.cycle_propagator(&g, PropagationMode::Coherent).unwrap();
        let k4 = four.cycle_propagator(&g, PropagationMode::Coherent).unwrap();
        let defect = crate::liouville::spectral_norm(&(k4.matrix() - kc.matrix()));
        assert!(defect <= s.powi(3), "defect {defect:.3e} vs bound {:.3e}", s.powi(3));
    }

    #[test]
    fn rotation_to_midpoint_preserves_totals() {
        let tau = 18.0;
        let four = four_stroke_schedule(tau).unwrap();
        let rot = four.rotate_to_midpoint();
        assert_abs_diff_eq!(rot.tau_cyc(), tau);
        let total: f64 = rot.segments().iter().map(|s| s.duration).sum();
        assert_abs_diff_eq!(total, tau, epsilon = 1e-12);
        // starts in the middle of the hot stroke
        assert!(rot.segments()[0].weights.hot > 0.0);
        assert_abs_diff_eq!(rot.segments()[0].duration, tau / 6.0, epsilon = 1e-12);
    }

    #[test]
    fn identity_permutation_is_identity() {
        let four = four_stroke_schedule(10.0).unwrap();
        let bins = four.positive_half_bins();
        let perm: Vec<usize> = (0..bins.len()).collect();
        let same = four.symmetric_rearrange(&perm).unwrap();
        assert_eq!(same.merged().segments().len(), four.segments().len());
        let g = gens();
        let k0 = four.cycle_propagator(&g, PropagationMode::Coherent).unwrap();
        let k1 = same.cycle_propagator(&g, PropagationMode::Coherent).unwrap();
        assert!((k0.matrix() - k1.matrix()).norm() <= 1e-12);
    }

    #[test]
    fn rearranging_four_stroke_into_two_stroke_order_matches_exactly() {
        // Putting the work bin first in each half interleaves the thermal
        // couplings; because the two baths commute, the resulting cycle
        // propagator equals the genuine two-stroke one exactly -- except
        // that the four-stroke figures carry weight 3 per bath over a sixth
        // of the cycle rather than 3/2 over a third. Compare propagators.
        let model = EngineModel::default();
        let tau = model.cycle_time(1.0);
        let four = four_stroke_schedule(tau).unwrap();
        // positive half: [hot, work, cold] -> [work, hot, cold]
        let rearranged = four.symmetric_rearrange(&[1, 0, 2]).unwrap();
        let g = gens();
        let k_re = rearranged.cycle_propagator(&g, PropagationMode::Coherent).unwrap();
        let k_two = two_stroke_schedule(tau)
            .unwrap()
            .cycle_propagator(&g, PropagationMode::Coherent)
            .unwrap();
        let rel = (k_re.matrix() - k_two.matrix()).norm() / k_two.matrix().norm();
        assert!(rel <= 1e-12, "relative difference {rel:.3e}");
    }

    #[test]
    fn rearrangement_rejects_non_permutations_and_preserves_areas() {
        let four = four_stroke_schedule(10.0).unwrap();
        assert!(four.symmetric_rearrange(&[0, 0, 1]).is_err());
        assert!(four.symmetric_rearrange(&[0, 1]).is_err());
        let re = four.symmetric_rearrange(&[2, 0, 1]).unwrap();
        let (cold, hot, drive, _, _) = re.areas();
        assert_abs_diff_eq!(cold, 10.0, epsilon = 1e-12);
        assert_abs_diff_eq!(hot, 10.0, epsilon = 1e-12);
        assert_abs_diff_eq!(drive, 10.0, epsilon = 1e-12);
    }

    #[test]
    fn two_field_rearrangement_keeps_pair_areas() {
        let s = two_field_four_stroke_schedule(24.0).unwrap();
        let bins = s.positive_half_bins();
        let perm: Vec<usize> = (0..bins.len()).rev().collect();
        let re = s.symmetric_rearrange(&perm).unwrap();
        let (_, _, _, pairs, _) = re.areas();
        assert_abs_diff_eq!(pairs[0], 24.0, epsilon = 1e-12);
        assert_abs_diff_eq!(pairs[1], 24.0, epsilon = 1e-12);
    }
}
