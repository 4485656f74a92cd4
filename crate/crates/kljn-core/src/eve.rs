//! The passive eavesdropper's toolkit.
//!
//! Three distinguishers of increasing generality try to tell LH from HL:
//!
//! * `corr_sign` — the sign of the sample V/I correlation. Near-optimal when
//!   a finite-variance mis-scaling leaves a nonzero covariance whose sign
//!   flips between the two states.
//! * `tail_quadrant` — the mean sign of `V * I` restricted to the largest
//!   |V| samples. In the tails the dominating source fixes the relative sign
//!   of V and I, and which source dominates differs between LH and HL; this
//!   is what the heavy-tailed stable families leak.
//! * `ref_match` — distribution-free reference matching. Eve, who knows the
//!   full configuration, simulates her own LH and HL reference traces and
//!   assigns the observation to the class with the smaller mean energy
//!   distance.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::{simulate_state, LoopState, ResistorPair, WireTrace};
use crate::error::{Error, Result};
use crate::noise::NoiseAssignment;
use crate::rng::Rng64;
use crate::stats::energy::energy_distance_capped;
use crate::stats::{mean, wilson_interval};

/// Point budget per cloud inside the reference-matching energy distances.
pub const REF_MATCH_MAX_POINTS: usize = 1024;

/// Minimum tail points the quadrant statistic needs.
pub const MIN_TAIL_SAMPLES: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DistinguisherKind {
    CorrSign,
    TailQuadrant { q: f64 },
    RefMatch { refs_per_state: usize },
}

/// A configured attack statistic plus its orientation: which statistic sign
/// is read as HL. The orientation is not always derivable a priori, so it is
/// fixed at construction and can be recalibrated per configuration by
/// simulation with known states (Eve can always do that: she knows the
/// resistors, the noise law, and the magnitudes).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Distinguisher {
    kind: DistinguisherKind,
    orientation: f64,
}

impl Distinguisher {
    pub fn corr_sign() -> Self {
        Distinguisher { kind: DistinguisherKind::CorrSign, orientation: 1.0 }
    }

    pub fn tail_quadrant(q: f64) -> Result<Self> {
        if !(q > 0.5 && q < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "quantile must lie strictly inside (0.5, 1), got {q}"
            )));
        }
        Ok(Distinguisher { kind: DistinguisherKind::TailQuadrant { q }, orientation: 1.0 })
    }

    pub fn ref_match(refs_per_state: usize) -> Result<Self> {
        if refs_per_state == 0 {
            return Err(Error::InvalidParameter("refs_per_state must be at least 1".into()));
        }
        Ok(Distinguisher { kind: DistinguisherKind::RefMatch { refs_per_state }, orientation: 1.0 })
    }

    pub fn kind(&self) -> DistinguisherKind {
        self.kind
    }

    pub fn orientation(&self) -> f64 {
        self.orientation
    }

    pub fn name(&self) -> String {
        match self.kind {
            DistinguisherKind::CorrSign => "corr_sign".into(),
            DistinguisherKind::TailQuadrant { q } => format!("tail_quadrant(q={q})"),
            DistinguisherKind::RefMatch { refs_per_state } => {
                format!("ref_match(refs_per_state={refs_per_state})")
            }
        }
    }

    /// Fixes the orientation by simulating `episodes` known-LH periods and
    /// pointing the statistic's LH-side mean at the LH guess. Reference
    /// matching needs no orientation and is left untouched.
    pub fn calibrate(
        &mut self,
        pair: &ResistorPair,
        assignment: &NoiseAssignment,
        n: usize,
        episodes: usize,
        rng: &mut Rng64,
    ) -> Result<()> {
        let stats = match self.kind {
            DistinguisherKind::RefMatch { .. } => return Ok(()),
            DistinguisherKind::CorrSign => {
                let mut stats = Vec::with_capacity(episodes);
                for _ in 0..episodes {
                    let t = simulate_state(LoopState::LH, pair, assignment, n, rng)?;
                    stats.push(corr_sign_statistic(&t)?);
                }
                stats
            }
            DistinguisherKind::TailQuadrant { q } => {
                let mut stats = Vec::with_capacity(episodes);
                for _ in 0..episodes {
                    let t = simulate_state(LoopState::LH, pair, assignment, n, rng)?;
                    stats.push(tail_quadrant_statistic(&t, q)?);
                }
                stats
            }
        };
        self.orientation = if mean(&stats) > 0.0 { -1.0 } else { 1.0 };
        Ok(())
    }

    /// One classification of a trace. For the statistic-based kinds the
    /// guess is HL when `statistic * orientation > 0`; reference matching
    /// picks the nearer class directly.
    pub fn classify(
        &self,
        trace: &WireTrace,
        pair: &ResistorPair,
        assignment: &NoiseAssignment,
        episode_seed: u64,
        rng: &mut Rng64,
    ) -> Result<DistinguisherOutcome> {
        match self.kind {
            DistinguisherKind::CorrSign => {
                let s = corr_sign_statistic(trace)?;
                Ok(DistinguisherOutcome::from_oriented(s, self.orientation, episode_seed))
            }
            DistinguisherKind::TailQuadrant { q } => {
                let s = tail_quadrant_statistic(trace, q)?;
                Ok(DistinguisherOutcome::from_oriented(s, self.orientation, episode_seed))
            }
            DistinguisherKind::RefMatch { refs_per_state } => {
                let mut out = ref_match_classify(
                    trace,
                    pair,
                    assignment,
                    refs_per_state,
                    trace.len().max(100),
                    rng,
                )?;
                out.episode_seed = episode_seed;
                Ok(out)
            }
        }
    }
}

/// One episode's statistic and guess.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistinguisherOutcome {
    pub statistic: f64,
    pub guess: LoopState,
    pub episode_seed: u64,
}

impl DistinguisherOutcome {
    fn from_oriented(statistic: f64, orientation: f64, episode_seed: u64) -> Self {
        let guess = if statistic * orientation > 0.0 { LoopState::HL } else { LoopState::LH };
        DistinguisherOutcome { statistic, guess, episode_seed }
    }
}

/// Pearson correlation of the V and I samples.
pub fn corr_sign_statistic(trace: &WireTrace) -> Result<f64> {
    if trace.len() < 2 {
        return Err(Error::TooFewSamples { required: 2, got: trace.len() });
    }
    let mv = mean(trace.v());
    let mi = mean(trace.i());
    let mut svv = 0.0;
    let mut sii = 0.0;
    let mut svi = 0.0;
    for (v, i) in trace.v().iter().zip(trace.i()) {
        let dv = v - mv;
        let di = i - mi;
        svv += dv * dv;
        sii += di * di;
        svi += dv * di;
    }
    if svv == 0.0 || sii == 0.0 {
        return Err(Error::DegenerateTrace("zero variance in V or I".into()));
    }
    Ok(svi / (svv.sqrt() * sii.sqrt()))
}

/// Mean of `sign(V * I)` over the samples whose |V| exceeds the empirical
/// q-quantile of |V|.
pub fn tail_quadrant_statistic(trace: &WireTrace, q: f64) -> Result<f64> {
    if !(q > 0.5 && q < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "quantile must lie strictly inside (0.5, 1), got {q}"
        )));
    }
    let mut abs_v: Vec<f64> = trace.v().iter().map(|v| v.abs()).collect();
    abs_v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let threshold = abs_v[((q * trace.len() as f64) as usize).min(trace.len() - 1)];
    let mut count = 0usize;
    let mut sum = 0.0;
    for (v, i) in trace.v().iter().zip(trace.i()) {
        if v.abs() > threshold {
            count += 1;
            sum += (v * i).signum();
        }
    }
    if count < MIN_TAIL_SAMPLES {
        return Err(Error::TooFewTailSamples { got: count });
    }
    Ok(sum / count as f64)
}

/// Kerckhoffs-style reference matching: simulate `refs_per_state` reference
/// traces per class and assign the observation to the class with the smaller
/// mean energy distance. The statistic is `dist(HL refs) - dist(LH refs)`,
/// positive favoring LH.
pub fn ref_match_classify(
    observed: &WireTrace,
    pair: &ResistorPair,
    assignment: &NoiseAssignment,
    refs_per_state: usize,
    ref_n: usize,
    rng: &mut Rng64,
) -> Result<DistinguisherOutcome> {
    if refs_per_state == 0 {
        return Err(Error::InvalidParameter("refs_per_state must be at least 1".into()));
    }
    if ref_n < 100 {
        return Err(Error::TooFewSamples { required: 100, got: ref_n });
    }
    let obs = observed.points();
    let mut mean_dist = |state: LoopState| -> Result<f64> {
        let mut acc = 0.0;
        for _ in 0..refs_per_state {
            let reference = simulate_state(state, pair, assignment, ref_n, rng)?;
            let (d, _) =
                energy_distance_capped(&obs, &reference.points(), REF_MATCH_MAX_POINTS, rng)?;
            acc += d;
        }
        Ok(acc / refs_per_state as f64)
    };
    let d_lh = mean_dist(LoopState::LH)?;
    let d_hl = mean_dist(LoopState::HL)?;
    let statistic = d_hl - d_lh;
    let guess = if statistic > 0.0 { LoopState::LH } else { LoopState::HL };
    Ok(DistinguisherOutcome { statistic, guess, episode_seed: 0 })
}

/// Aggregate attack-success measurement over many hidden-state episodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdvantageReport {
    pub episodes: u64,
    pub correct: u64,
    pub accuracy: f64,
    pub advantage: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub distinguisher: String,
    pub seed: u64,
    pub config: ReportConfig,
}

/// Configuration fingerprint embedded in every report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportConfig {
    pub r_low: f64,
    pub r_high: f64,
    pub assignment: String,
    pub samples_per_episode: usize,
}

impl AdvantageReport {
    /// Single-line JSON record.
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("report serialization cannot fail")
    }

    /// Human-readable table.
    pub fn to_table(&self) -> String {
        format!(
            "distinguisher      {}\n\
             episodes           {}\n\
             correct            {}\n\
             accuracy           {:.4}\n\
             advantage          {:+.4}\n\
             accuracy 95% CI    [{:.4}, {:.4}]\n\
             seed               {}\n\
             configuration      R_L={} R_H={} n={} {}",
            self.distinguisher,
            self.episodes,
            self.correct,
            self.accuracy,
            self.advantage,
            self.ci_lo,
            self.ci_hi,
            self.seed,
            self.config.r_low,
            self.config.r_high,
            self.config.samples_per_episode,
            self.config.assignment,
        )
    }

    /// The 95% CI mapped from accuracy to advantage covers zero.
    pub fn advantage_ci_covers_zero(&self) -> bool {
        2.0 * self.ci_lo - 1.0 <= 0.0 && 0.0 <= 2.0 * self.ci_hi - 1.0
    }
}

/// Monte Carlo attack bench: each episode hides a uniformly random mixed
/// state, simulates a trace, and lets the distinguisher guess. Episodes run
/// in parallel; the per-episode seed is `Rng64::derive(master_seed, index)`,
/// so the report is identical however the episodes are scheduled.
pub fn estimate_advantage(
    distinguisher: &Distinguisher,
    pair: &ResistorPair,
    assignment: &NoiseAssignment,
    episodes: usize,
    samples_per_episode: usize,
    master_seed: u64,
) -> Result<AdvantageReport> {
    if episodes < 10 {
        return Err(Error::InvalidParameter(format!(
            "at least 10 episodes required, got {episodes}"
        )));
    }
    let outcomes: Vec<Result<bool>> = (0..episodes)
        .into_par_iter()
        .map(|k| {
            let mut rng = Rng64::derive(master_seed, k as u64);
            let episode_seed = rng.state();
            let hidden = if rng.next_bool() { LoopState::LH } else { LoopState::HL };
            let trace = simulate_state(hidden, pair, assignment, samples_per_episode, &mut rng)?;
            let outcome = distinguisher.classify(&trace, pair, assignment, episode_seed, &mut rng)?;
            Ok(outcome.guess == hidden)
        })
        .collect();
    let mut correct = 0u64;
    for o in outcomes {
        if o? {
            correct += 1;
        }
    }
    let accuracy = correct as f64 / episodes as f64;
    let (ci_lo, ci_hi) = wilson_interval(correct, episodes as u64, 1.96);
    Ok(AdvantageReport {
        episodes: episodes as u64,
        correct,
        accuracy,
        advantage: 2.0 * accuracy - 1.0,
        ci_lo,
        ci_hi,
        distinguisher: distinguisher.name(),
        seed: master_seed,
        config: ReportConfig {
            r_low: pair.r_low(),
            r_high: pair.r_high(),
            assignment: assignment.describe(),
            samples_per_episode,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::simulate_state_with_sources;
    use crate::noise::{johnson_scaling, NoiseFamily, NoiseModel};

    fn pair() -> ResistorPair {
        ResistorPair::new(1_000.0, 10_000.0).unwrap()
    }

    fn fig2_assignment() -> NoiseAssignment {
        NoiseAssignment::explicit(
            NoiseModel::gaussian(1.0).unwrap(),
            NoiseModel::gaussian(1.5).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn corr_sign_matches_analytic_rho_for_fig2() {
        // rho = cov / (sigma_V * sigma_I) = -0.42513 from the moment
        // expansions; also confirmed by the Monte Carlo oracle in
        // tests/oracles.rs.
        let p = pair();
        let a = fig2_assignment();
        let lh =
            simulate_state(LoopState::LH, &p, &a, 1 << 13, &mut Rng64::new(41)).unwrap();
        let s_lh = corr_sign_statistic(&lh).unwrap();
        assert!((s_lh + 0.425).abs() < 0.03, "LH statistic {s_lh}");
        let hl =
            simulate_state(LoopState::HL, &p, &a, 1 << 13, &mut Rng64::new(42)).unwrap();
        let s_hl = corr_sign_statistic(&hl).unwrap();
        assert!((s_hl - 0.425).abs() < 0.03, "HL statistic {s_hl}");
    }

    #[test]
    fn corr_sign_vanishes_under_johnson_scaling() {
        let p = pair();
        let a = johnson_scaling(&p, NoiseFamily::Gaussian, 1.0).unwrap();
        let n = 1 << 15;
        for (seed, state) in [(43u64, LoopState::LH), (44, LoopState::HL)] {
            let t = simulate_state(state, &p, &a, n, &mut Rng64::new(seed)).unwrap();
            let s = corr_sign_statistic(&t).unwrap();
            assert!(s.abs() <= 5.0 / (n as f64).sqrt(), "{state:?}: {s}");
        }
    }

    #[test]
    fn corr_sign_rejects_degenerate_traces() {
        let p = pair();
        let t = simulate_state_with_sources(LoopState::LH, &p, &[1.0; 16], &[1.0; 16]).unwrap();
        assert!(matches!(corr_sign_statistic(&t), Err(Error::DegenerateTrace(_))));
    }

    #[test]
    fn corr_sign_is_odd_under_mirror() {
        let p = pair();
        let a = fig2_assignment();
        let t = simulate_state(LoopState::LH, &p, &a, 4096, &mut Rng64::new(45)).unwrap();
        let s = corr_sign_statistic(&t).unwrap();
        let sm = corr_sign_statistic(&t.mirror()).unwrap();
        assert_eq!(s, -sm);
    }

    #[test]
    fn tail_quadrant_near_zero_for_independent_signs() {
        // V and I generated independently: the tail signs are fair coins.
        let p = pair();
        let g = NoiseModel::gaussian(1.0).unwrap();
        let mut rng = Rng64::new(46);
        let n = 1 << 15;
        let v = g.sample(n, &mut rng).unwrap();
        let i = g.sample(n, &mut rng).unwrap();
        let t = WireTrace::from_samples(
            v,
            i,
            crate::circuit::TraceMeta { pair: p, seed: 46, sample_count: n },
        )
        .unwrap();
        let s = tail_quadrant_statistic(&t, 0.95).unwrap();
        assert!(s.abs() <= 5.0 / (0.05 * n as f64).sqrt(), "statistic {s}");
    }

    #[test]
    fn tail_quadrant_flips_sign_between_states_for_cauchy() {
        let p = pair();
        let a = johnson_scaling(&p, NoiseFamily::SymmetricStable { alpha: 1.0 }, 1.0).unwrap();
        let n = 1 << 15;
        let lh = simulate_state(LoopState::LH, &p, &a, n, &mut Rng64::new(47)).unwrap();
        let hl = simulate_state(LoopState::HL, &p, &a, n, &mut Rng64::new(48)).unwrap();
        // The +/-0.45 magnitude is pinned by the Monte Carlo pilot in
        // tests/oracles.rs.
        let s_lh = tail_quadrant_statistic(&lh, 0.95).unwrap();
        let s_hl = tail_quadrant_statistic(&hl, 0.95).unwrap();
        assert!(s_lh < -0.4, "LH statistic {s_lh}");
        assert!(s_hl > 0.4, "HL statistic {s_hl}");
        assert!((s_lh + s_hl).abs() < 0.1, "magnitudes differ: {s_lh} vs {s_hl}");
    }

    #[test]
    fn tail_quadrant_is_odd_under_mirror() {
        let p = pair();
        let a = johnson_scaling(&p, NoiseFamily::SymmetricStable { alpha: 1.5 }, 1.0).unwrap();
        let t = simulate_state(LoopState::LH, &p, &a, 4096, &mut Rng64::new(49)).unwrap();
        let s = tail_quadrant_statistic(&t, 0.9).unwrap();
        let sm = tail_quadrant_statistic(&t.mirror(), 0.9).unwrap();
        assert_eq!(s, -sm);
    }

    #[test]
    fn tail_quadrant_errors_on_thin_tails() {
        let p = pair();
        let a = johnson_scaling(&p, NoiseFamily::Gaussian, 1.0).unwrap();
        let t = simulate_state(LoopState::LH, &p, &a, 64, &mut Rng64::new(50)).unwrap();
        assert!(matches!(
            tail_quadrant_statistic(&t, 0.95),
            Err(Error::TooFewTailSamples { .. })
        ));
    }

    #[test]
    fn quantile_bounds_are_enforced() {
        assert!(Distinguisher::tail_quadrant(0.5).is_err());
        assert!(Distinguisher::tail_quadrant(1.0).is_err());
        assert!(Distinguisher::tail_quadrant(0.95).is_ok());
        assert!(Distinguisher::ref_match(0).is_err());
    }

    #[test]
    fn ref_match_breaks_insecure_uniform() {
        let p = pair();
        let a = johnson_scaling(&p, NoiseFamily::Uniform, 1.0).unwrap();
        let d = Distinguisher::ref_match(4).unwrap();
        let report = estimate_advantage(&d, &p, &a, 50, 2048, 51).unwrap();
        assert!(report.accuracy >= 0.9, "accuracy {}", report.accuracy);
    }

    #[test]
    fn ref_match_is_blind_on_secure_gaussian() {
        let p = pair();
        let a = johnson_scaling(&p, NoiseFamily::Gaussian, 1.0).unwrap();
        let d = Distinguisher::ref_match(4).unwrap();
        let report = estimate_advantage(&d, &p, &a, 100, 1024, 52).unwrap();
        // 99% binomial band around 0.5 for 100 episodes.
        assert!((report.accuracy - 0.5).abs() <= 2.576 * 0.05, "accuracy {}", report.accuracy);
    }

    #[test]
    fn advantage_report_is_reproducible() {
        let p = pair();
        let a = fig2_assignment();
        let d = Distinguisher::corr_sign();
        let r1 = estimate_advantage(&d, &p, &a, 64, 1024, 53).unwrap();
        let r2 = estimate_advantage(&d, &p, &a, 64, 1024, 53).unwrap();
        assert_eq!(r1, r2);
        assert_eq!(r1.to_json_line(), r2.to_json_line());
    }

    #[test]
    fn fig2_corr_sign_advantage_is_near_total() {
        let p = pair();
        let a = fig2_assignment();
        let d = Distinguisher::corr_sign();
        let report = estimate_advantage(&d, &p, &a, 100, 8192, 54).unwrap();
        assert!(report.advantage >= 0.95, "advantage {}", report.advantage);
    }

    #[test]
    fn calibration_on_identical_classes_stays_at_chance() {
        // Equal resistors and equal noise: LH and HL are the same
        // distribution, so every distinguisher must sit at accuracy 1/2.
        let p = ResistorPair::degenerate(1_000.0).unwrap();
        let g = NoiseModel::gaussian(1.0).unwrap();
        let a = NoiseAssignment::explicit(g, g).unwrap();
        for d in [
            Distinguisher::corr_sign(),
            Distinguisher::tail_quadrant(0.9).unwrap(),
            Distinguisher::ref_match(2).unwrap(),
        ] {
            let report = estimate_advantage(&d, &p, &a, 200, 512, 55).unwrap();
            let band = 2.576 * 0.5 / (200.0f64).sqrt();
            assert!(
                (report.accuracy - 0.5).abs() <= band,
                "{}: accuracy {}",
                report.distinguisher,
                report.accuracy
            );
        }
    }

    #[test]
    fn advantage_monotone_in_samples_per_episode() {
        // Under the ratio-1.5 mis-scaling the advantage must not decrease
        // as the per-episode sample count grows.
        let p = pair();
        let a = fig2_assignment();
        let d = Distinguisher::corr_sign();
        let mut last = -1.0;
        for n in [512, 2048, 8192] {
            let r = estimate_advantage(&d, &p, &a, 200, n, 56).unwrap();
            let slack = 2.0 * (r.ci_hi - r.ci_lo);
            assert!(r.advantage + slack >= last, "n={n}: {} < {last}", r.advantage);
            last = r.advantage;
        }
    }

    #[test]
    fn calibrate_fixes_orientation_against_inverted_mis_scaling() {
        // Over-scaling the high side past the Johnson ratio flips the
        // covariance sign; calibration must recover the correct guess.
        let p = pair();
        let a = NoiseAssignment::explicit(
            NoiseModel::gaussian(1.0).unwrap(),
            NoiseModel::gaussian(4.0).unwrap(),
        )
        .unwrap();
        let mut d = Distinguisher::corr_sign();
        d.calibrate(&p, &a, 4096, 16, &mut Rng64::new(57)).unwrap();
        let report = estimate_advantage(&d, &p, &a, 100, 8192, 58).unwrap();
        assert!(report.accuracy >= 0.95, "accuracy {}", report.accuracy);
    }
}
