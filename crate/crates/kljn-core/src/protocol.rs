//! The full key-exchange session.
//!
//! Per bit period both parties pick a random resistor level and the loop is
//! simulated for `samples_per_bit` samples. Everyone (the parties and Eve)
//! sees the same wire statistic; the variance of the current separates the
//! three power classes {LL, mixed, HH}, so same-level periods are detected
//! and discarded by all sides alike. In a kept period each party infers the
//! other's resistor from the current variance and the public thermal
//! constant; the bit convention is `bit = 1` iff Alice holds the high
//! resistor. Eve can only attack the kept periods with a distinguisher.
//!
//! Only finite-variance families (Gaussian, uniform) are accepted here: the
//! variance-based inference is undefined for the heavier stable laws, which
//! exist in this crate as analysis counterexamples, not as protocol noise.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::circuit::{simulate_state, Level, LoopState, ResistorPair, WireTrace};
use crate::error::{Error, Result};
use crate::eve::Distinguisher;
use crate::noise::{NoiseAssignment, NoiseModel};
use crate::rng::Rng64;

/// Stream index reserved for distinguisher calibration, outside the
/// per-period range.
const CALIBRATION_STREAM: u64 = u64::MAX;
const CALIBRATION_EPISODES: usize = 16;

/// Eve's (and the parties') three-way power classification of a period.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StateClass {
    LL,
    #[serde(rename = "mixed")]
    Mixed,
    HH,
}

/// Session parameters. `thermal_constant` is the public volts^2-per-ohm
/// constant `c` with `sigma^2 = c * R`; the low-side model anchors it, so a
/// deliberately mis-scaled high side is still expressible.
#[derive(Debug, Clone)]
pub struct SessionConfig {
    pair: ResistorPair,
    assignment: NoiseAssignment,
    thermal_constant: f64,
    bits_requested: usize,
    samples_per_bit: usize,
    master_seed: u64,
    eve_distinguisher: Option<Distinguisher>,
}

impl SessionConfig {
    pub fn new(
        pair: ResistorPair,
        assignment: NoiseAssignment,
        thermal_constant: f64,
        bits_requested: usize,
        samples_per_bit: usize,
        master_seed: u64,
        eve_distinguisher: Option<Distinguisher>,
    ) -> Result<Self> {
        if matches!(assignment.low(), NoiseModel::SymmetricStable { .. }) {
            return Err(Error::InvalidParameter(
                "protocol sessions require a finite-variance family (gaussian or uniform)".into(),
            ));
        }
        if !(thermal_constant.is_finite() && thermal_constant > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "thermal constant must be > 0, got {thermal_constant}"
            )));
        }
        let var_low = assignment.low().variance().expect("family has a variance");
        let expected = thermal_constant * pair.r_low();
        if (var_low - expected).abs() > 1e-9 * expected {
            return Err(Error::InvalidParameter(format!(
                "thermal constant inconsistent with the low-side noise: var_low = {var_low}, c * R_L = {expected}"
            )));
        }
        if bits_requested == 0 {
            return Err(Error::InvalidParameter("bits_requested must be at least 1".into()));
        }
        if samples_per_bit < 256 {
            return Err(Error::TooFewSamples { required: 256, got: samples_per_bit });
        }
        Ok(SessionConfig {
            pair,
            assignment,
            thermal_constant,
            bits_requested,
            samples_per_bit,
            master_seed,
            eve_distinguisher,
        })
    }

    pub fn pair(&self) -> &ResistorPair {
        &self.pair
    }

    pub fn assignment(&self) -> &NoiseAssignment {
        &self.assignment
    }

    pub fn thermal_constant(&self) -> f64 {
        self.thermal_constant
    }

    pub fn bits_requested(&self) -> usize {
        self.bits_requested
    }

    pub fn samples_per_bit(&self) -> usize {
        self.samples_per_bit
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }
}

/// One bit period's bookkeeping, for the per-period CSV.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodRecord {
    pub period: usize,
    pub alice_level: Level,
    pub bob_level: Level,
    pub kept: bool,
    pub bit: Option<u8>,
    pub eve_guess: Option<u8>,
}

/// Outcome of a whole session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeyExchangeResult {
    pub alice_key: Vec<u8>,
    pub bob_key: Vec<u8>,
    pub alice_key_hex: String,
    pub bob_key_hex: String,
    pub kept_periods: usize,
    pub discarded_periods: usize,
    pub agreement_rate: f64,
    pub party_inference_errors: usize,
    pub eve_state_classification: Vec<StateClass>,
    pub eve_bit_guesses: Vec<u8>,
    pub eve_accuracy: Option<f64>,
    pub seed: u64,
    #[serde(skip)]
    pub periods: Vec<PeriodRecord>,
}

impl KeyExchangeResult {
    /// Summary as a single JSON object.
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("result serialization cannot fail")
    }

    /// Per-period CSV: `period,alice_level,bob_level,kept,bit,eve_guess`.
    pub fn write_periods_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        out.write_all(b"period,alice_level,bob_level,kept,bit,eve_guess\n")?;
        for p in &self.periods {
            let bit = p.bit.map(|b| b.to_string()).unwrap_or_default();
            let eve = p.eve_guess.map(|b| b.to_string()).unwrap_or_default();
            writeln!(
                out,
                "{},{},{},{},{bit},{eve}",
                p.period,
                p.alice_level.letter(),
                p.bob_level.letter(),
                u8::from(p.kept),
            )?;
        }
        Ok(())
    }
}

/// MSB-first bit packing, zero-padded to whole bytes, lowercase hex.
pub fn bits_to_hex(bits: &[u8]) -> String {
    let mut out = String::with_capacity(bits.len().div_ceil(8) * 2);
    for chunk in bits.chunks(8) {
        let mut byte = 0u8;
        for (k, &b) in chunk.iter().enumerate() {
            byte |= (b & 1) << (7 - k);
        }
        out.push_str(&format!("{byte:02x}"));
    }
    out
}

/// Second moment of the current samples. The sources are zero-mean by
/// construction, so no mean is subtracted.
fn current_power(trace: &WireTrace) -> Result<f64> {
    let m2 = trace.i().iter().map(|x| x * x).sum::<f64>() / trace.len() as f64;
    if !m2.is_finite() || m2 <= 0.0 {
        return Err(Error::NonFiniteVariance);
    }
    Ok(m2)
}

/// Nearest-neighbor classification of `c / Var(I)` among the three total
/// resistances `{2 R_L, R_L + R_H, 2 R_H}`, with log-domain midpoints as
/// thresholds. Assumes Johnson-consistent noise (`sigma^2 = c R`).
pub fn classify_r_sum(trace: &WireTrace, pair: &ResistorPair, c: f64) -> Result<StateClass> {
    if trace.len() < 256 {
        return Err(Error::TooFewSamples { required: 256, got: trace.len() });
    }
    let r_est = c / current_power(trace)?;
    let r_ll = 2.0 * pair.r_low();
    let r_mixed = pair.r_low() + pair.r_high();
    let r_hh = 2.0 * pair.r_high();
    if r_est < (r_ll * r_mixed).sqrt() {
        Ok(StateClass::LL)
    } else if r_est < (r_mixed * r_hh).sqrt() {
        Ok(StateClass::Mixed)
    } else {
        Ok(StateClass::HH)
    }
}

/// Expected Var(I_E) for a joint state under the actual assignment.
fn expected_current_power(state: LoopState, pair: &ResistorPair, assignment: &NoiseAssignment) -> f64 {
    let var_a = assignment.model_for(state.alice()).variance().expect("finite variance");
    let var_b = assignment.model_for(state.bob()).variance().expect("finite variance");
    let sum = pair.resistance(state.alice()) + pair.resistance(state.bob());
    (var_a + var_b) / (sum * sum)
}

/// Three-way classification against the assignment's own variance targets.
/// For Johnson-scaled noise this coincides with `classify_r_sum`; for a
/// mis-scaled assignment it is what anyone who knows the configuration
/// actually computes.
fn classify_state_power(
    power: f64,
    pair: &ResistorPair,
    assignment: &NoiseAssignment,
) -> StateClass {
    let p_ll = expected_current_power(LoopState::LL, pair, assignment);
    let p_mixed = expected_current_power(LoopState::LH, pair, assignment);
    let p_hh = expected_current_power(LoopState::HH, pair, assignment);
    // Var(I) decreases from LL to HH; compare in the log domain.
    if power > (p_ll * p_mixed).sqrt() {
        StateClass::LL
    } else if power > (p_mixed * p_hh).sqrt() {
        StateClass::Mixed
    } else {
        StateClass::HH
    }
}

/// One party's inference of the other's level from the current power.
fn infer_other_level(
    power: f64,
    own: Level,
    pair: &ResistorPair,
    assignment: &NoiseAssignment,
) -> Level {
    let hyp = |other: Level| {
        expected_current_power(LoopState::from_levels(own, other), pair, assignment)
    };
    // Higher other-side resistance means lower current power.
    let p_low = hyp(Level::Low);
    let p_high = hyp(Level::High);
    if (power.ln() - p_low.ln()).abs() <= (power.ln() - p_high.ln()).abs() {
        Level::Low
    } else {
        Level::High
    }
}

/// Runs a whole session. Periods repeat until `bits_requested` bits are kept
/// or the period cap (4x requested) is hit, which is an error. The result is
/// a pure function of the config, including the master seed.
pub fn run_key_exchange(config: &SessionConfig) -> Result<KeyExchangeResult> {
    let pair = &config.pair;
    let assignment = &config.assignment;
    let n = config.samples_per_bit;

    let eve = match &config.eve_distinguisher {
        Some(d) => {
            let mut d = *d;
            let mut cal_rng = Rng64::derive(config.master_seed, CALIBRATION_STREAM);
            d.calibrate(pair, assignment, n, CALIBRATION_EPISODES, &mut cal_rng)?;
            Some(d)
        }
        None => None,
    };

    let cap = 4 * config.bits_requested;
    let mut alice_key = Vec::new();
    let mut bob_key = Vec::new();
    let mut periods = Vec::new();
    let mut eve_classes = Vec::new();
    let mut eve_guesses = Vec::new();
    let mut eve_correct = 0usize;
    let mut discarded = 0usize;
    let mut inference_errors = 0usize;
    let mut agreements = 0usize;

    for period in 0..cap {
        if alice_key.len() == config.bits_requested {
            break;
        }
        let mut rng = Rng64::derive(config.master_seed, period as u64);
        let episode_seed = rng.state();
        let alice = if rng.next_bool() { Level::High } else { Level::Low };
        let bob = if rng.next_bool() { Level::High } else { Level::Low };
        let state = LoopState::from_levels(alice, bob);
        let trace = simulate_state(state, pair, assignment, n, &mut rng)?;
        let power = current_power(&trace)?;

        // The same wire statistic drives everyone's three-way class.
        let class = classify_state_power(power, pair, assignment);
        eve_classes.push(class);

        if class != StateClass::Mixed {
            discarded += 1;
            periods.push(PeriodRecord {
                period,
                alice_level: alice,
                bob_level: bob,
                kept: false,
                bit: None,
                eve_guess: None,
            });
            continue;
        }

        let alice_bit = u8::from(alice == Level::High);
        let bob_inferred_alice = infer_other_level(power, bob, pair, assignment);
        let bob_bit = u8::from(bob_inferred_alice == Level::High);
        let alice_inferred_bob = infer_other_level(power, alice, pair, assignment);
        if bob_inferred_alice != alice {
            inference_errors += 1;
        }
        if alice_inferred_bob != bob {
            inference_errors += 1;
        }
        if alice_bit == bob_bit {
            agreements += 1;
        }

        let eve_guess = match &eve {
            Some(d) => {
                let outcome = d.classify(&trace, pair, assignment, episode_seed, &mut rng)?;
                let guess = u8::from(outcome.guess == LoopState::HL);
                if guess == alice_bit {
                    eve_correct += 1;
                }
                eve_guesses.push(guess);
                Some(guess)
            }
            None => None,
        };

        alice_key.push(alice_bit);
        bob_key.push(bob_bit);
        periods.push(PeriodRecord {
            period,
            alice_level: alice,
            bob_level: bob,
            kept: true,
            bit: Some(alice_bit),
            eve_guess,
        });
    }

    let kept = alice_key.len();
    if kept < config.bits_requested {
        return Err(Error::PeriodCapExceeded {
            cap,
            kept,
            requested: config.bits_requested,
        });
    }

    Ok(KeyExchangeResult {
        alice_key_hex: bits_to_hex(&alice_key),
        bob_key_hex: bits_to_hex(&bob_key),
        agreement_rate: agreements as f64 / kept as f64,
        eve_accuracy: eve.is_some().then(|| eve_correct as f64 / kept as f64),
        alice_key,
        bob_key,
        kept_periods: kept,
        discarded_periods: discarded,
        party_inference_errors: inference_errors,
        eve_state_classification: eve_classes,
        eve_bit_guesses: eve_guesses,
        seed: config.master_seed,
        periods,
    })
}
