//! The ideal Kirchhoff loop.
//!
//! For a joint state the wire observables per sample are
//!
//! ```text
//! V_E = (V_A * R_B + V_B * R_A) / (R_A + R_B)
//! I_E = (V_B - V_A) / (R_A + R_B)
//! ```
//!
//! where `R_A`, `R_B` are the resistors selected by Alice and Bob and `V_A`,
//! `V_B` their noise sources. The sign convention fixes positive current for
//! a positive Bob-side source, which makes the HL trace distributionally the
//! LH trace with the current negated (the mirror identity).

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::noise::NoiseAssignment;
use crate::rng::Rng64;

/// A resistor level held by one party during a bit period.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Level {
    Low,
    High,
}

impl Level {
    pub fn letter(self) -> char {
        match self {
            Level::Low => 'L',
            Level::High => 'H',
        }
    }
}

/// Joint resistor state; first letter Alice, second Bob.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LoopState {
    LL,
    LH,
    HL,
    HH,
}

impl LoopState {
    pub const ALL: [LoopState; 4] = [LoopState::LL, LoopState::LH, LoopState::HL, LoopState::HH];

    pub fn alice(self) -> Level {
        match self {
            LoopState::LL | LoopState::LH => Level::Low,
            LoopState::HL | LoopState::HH => Level::High,
        }
    }

    pub fn bob(self) -> Level {
        match self {
            LoopState::LL | LoopState::HL => Level::Low,
            LoopState::LH | LoopState::HH => Level::High,
        }
    }

    /// The LH/HL pair carries the key bits; LL/HH are publicly decodable.
    pub fn is_mixed(self) -> bool {
        matches!(self, LoopState::LH | LoopState::HL)
    }

    pub fn from_levels(alice: Level, bob: Level) -> Self {
        match (alice, bob) {
            (Level::Low, Level::Low) => LoopState::LL,
            (Level::Low, Level::High) => LoopState::LH,
            (Level::High, Level::Low) => LoopState::HL,
            (Level::High, Level::High) => LoopState::HH,
        }
    }
}

/// The public circuit parameters, in ohms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResistorPair {
    r_low: f64,
    r_high: f64,
}

impl ResistorPair {
    /// Strict pair: `0 < r_low < r_high`.
    pub fn new(r_low: f64, r_high: f64) -> Result<Self> {
        if !(r_low.is_finite() && r_high.is_finite() && r_low > 0.0 && r_low < r_high) {
            return Err(Error::InvalidParameter(format!(
                "resistor pair requires 0 < r_low < r_high, got ({r_low}, {r_high})"
            )));
        }
        Ok(ResistorPair { r_low, r_high })
    }

    /// Equal-resistor pair for degenerate tests only; protocol constructors
    /// keep using `new` and so never accept it.
    pub fn degenerate(r: f64) -> Result<Self> {
        if !(r.is_finite() && r > 0.0) {
            return Err(Error::InvalidParameter(format!("resistance must be > 0, got {r}")));
        }
        Ok(ResistorPair { r_low: r, r_high: r })
    }

    pub fn r_low(&self) -> f64 {
        self.r_low
    }

    pub fn r_high(&self) -> f64 {
        self.r_high
    }

    pub fn resistance(&self, level: Level) -> f64 {
        match level {
            Level::Low => self.r_low,
            Level::High => self.r_high,
        }
    }
}

/// Provenance of a trace: enough to regenerate it, minus the hidden state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceMeta {
    pub pair: ResistorPair,
    pub seed: u64,
    pub sample_count: usize,
}

/// The (V_E, I_E) samples Eve observes during one bit period. The generating
/// `LoopState` is deliberately not stored here; attack code only ever sees
/// the trace.
#[derive(Debug, Clone, PartialEq)]
pub struct WireTrace {
    v: Vec<f64>,
    i: Vec<f64>,
    meta: TraceMeta,
}

impl WireTrace {
    pub fn from_samples(v: Vec<f64>, i: Vec<f64>, meta: TraceMeta) -> Result<Self> {
        if v.is_empty() || v.len() != i.len() {
            return Err(Error::InvalidParameter(format!(
                "trace requires equal non-empty v/i lengths, got {} and {}",
                v.len(),
                i.len()
            )));
        }
        if v.iter().chain(i.iter()).any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter("trace contains non-finite samples".into()));
        }
        Ok(WireTrace { v, i, meta })
    }

    pub fn v(&self) -> &[f64] {
        &self.v
    }

    pub fn i(&self) -> &[f64] {
        &self.i
    }

    pub fn len(&self) -> usize {
        self.v.len()
    }

    pub fn is_empty(&self) -> bool {
        self.v.is_empty()
    }

    pub fn meta(&self) -> &TraceMeta {
        &self.meta
    }

    /// The (V, I) pairs as points, for the joint-distribution tests.
    pub fn points(&self) -> Vec<(f64, f64)> {
        self.v.iter().copied().zip(self.i.iter().copied()).collect()
    }

    /// Same voltages, current negated. An HL trace is distributed as the
    /// mirror of an LH trace, for every symmetric noise family.
    pub fn mirror(&self) -> WireTrace {
        WireTrace {
            v: self.v.clone(),
            i: self.i.iter().map(|x| -x).collect(),
            meta: self.meta,
        }
    }

    /// Writes the trace as CSV: header `index,v_volts,i_amps`, floats with
    /// 17 significant digits so parsing round-trips bit-exactly, LF endings.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        out.write_all(b"index,v_volts,i_amps\n")?;
        for (k, (v, i)) in self.v.iter().zip(self.i.iter()).enumerate() {
            writeln!(out, "{k},{v:.16e},{i:.16e}")?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("write to Vec cannot fail");
        String::from_utf8(buf).expect("csv output is ascii")
    }
}

/// Parses the `index,v_volts,i_amps` CSV back into (v, i) columns.
pub fn parse_trace_csv(text: &str) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut lines = text.lines();
    match lines.next() {
        Some("index,v_volts,i_amps") => {}
        other => {
            return Err(Error::InvalidParameter(format!("bad csv header: {other:?}")));
        }
    }
    let mut v = Vec::new();
    let mut i = Vec::new();
    for (k, line) in lines.enumerate() {
        let mut fields = line.split(',');
        let idx: usize = fields
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::InvalidParameter(format!("bad index on row {k}")))?;
        if idx != k {
            return Err(Error::InvalidParameter(format!("row {k} has index {idx}")));
        }
        let vv: f64 = fields
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::InvalidParameter(format!("bad v on row {k}")))?;
        let ii: f64 = fields
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::InvalidParameter(format!("bad i on row {k}")))?;
        v.push(vv);
        i.push(ii);
    }
    Ok((v, i))
}

/// Simulates one bit period: draws Alice's and Bob's sources from the models
/// selected by `state` and applies the loop formulas sample by sample.
/// Alice's draw precedes Bob's at every index, so the stream layout is fixed.
pub fn simulate_state(
    state: LoopState,
    pair: &ResistorPair,
    assignment: &NoiseAssignment,
    n: usize,
    rng: &mut Rng64,
) -> Result<WireTrace> {
    if n == 0 {
        return Err(Error::TooFewSamples { required: 1, got: 0 });
    }
    let model_a = assignment.model_for(state.alice());
    let model_b = assignment.model_for(state.bob());
    model_a.validate()?;
    model_b.validate()?;
    let seed = rng.state();
    let r_a = pair.resistance(state.alice());
    let r_b = pair.resistance(state.bob());
    let sum = r_a + r_b;
    let mut v = Vec::with_capacity(n);
    let mut i = Vec::with_capacity(n);
    for _ in 0..n {
        let va = model_a.draw(rng);
        let vb = model_b.draw(rng);
        v.push((va * r_b + vb * r_a) / sum);
        i.push((vb - va) / sum);
    }
    WireTrace::from_samples(v, i, TraceMeta { pair: *pair, seed, sample_count: n })
}

/// Deterministic-source seam: the same loop arithmetic with injected sample
/// sequences instead of noise draws, so the formulas are testable exactly.
pub fn simulate_state_with_sources(
    state: LoopState,
    pair: &ResistorPair,
    v_alice: &[f64],
    v_bob: &[f64],
) -> Result<WireTrace> {
    if v_alice.is_empty() || v_alice.len() != v_bob.len() {
        return Err(Error::InvalidParameter(format!(
            "source sequences must have equal non-zero length, got {} and {}",
            v_alice.len(),
            v_bob.len()
        )));
    }
    let r_a = pair.resistance(state.alice());
    let r_b = pair.resistance(state.bob());
    let sum = r_a + r_b;
    let v = v_alice.iter().zip(v_bob).map(|(a, b)| (a * r_b + b * r_a) / sum).collect();
    let i = v_alice.iter().zip(v_bob).map(|(a, b)| (b - a) / sum).collect();
    WireTrace::from_samples(v, i, TraceMeta { pair: *pair, seed: 0, sample_count: v_alice.len() })
}

/// Coefficients expressing the wire observables' numerators as linear forms
/// of the two sources: `V_num = a1 * X_alice + a2 * X_bob`,
/// `I_num = b1 * X_alice + b2 * X_bob`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFormCoefficients {
    pub a1: f64,
    pub a2: f64,
    pub b1: f64,
    pub b2: f64,
}

/// Signed left side of the independence condition for two linear forms of
/// independent variables: `a1*b1*var1 + a2*b2*var2`. Zero means the
/// necessary covariance condition holds.
pub fn lukacs_king_residual(
    a1: f64,
    a2: f64,
    b1: f64,
    b2: f64,
    var1: f64,
    var2: f64,
) -> Result<f64> {
    if var1 < 0.0 || var2 < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "variances must be non-negative, got ({var1}, {var2})"
        )));
    }
    Ok(a1 * b1 * var1 + a2 * b2 * var2)
}

/// The KLJN specialization of the linear-form coefficients for a mixed state.
pub fn kljn_coefficients(state: LoopState, pair: &ResistorPair) -> Result<LinearFormCoefficients> {
    if !state.is_mixed() {
        return Err(Error::NotMixed(state));
    }
    // V numerator weights the opposite party's resistor; I is Bob minus Alice.
    Ok(LinearFormCoefficients {
        a1: pair.resistance(state.bob()),
        a2: pair.resistance(state.alice()),
        b1: -1.0,
        b2: 1.0,
    })
}

/// Analytic `Cov(V_E, I_E)` for a mixed state:
/// `(R_A * var_B - R_B * var_A) / (R_A + R_B)^2`.
pub fn theoretical_cov(
    state: LoopState,
    pair: &ResistorPair,
    var_alice: f64,
    var_bob: f64,
) -> Result<f64> {
    if !state.is_mixed() {
        return Err(Error::NotMixed(state));
    }
    let r_a = pair.resistance(state.alice());
    let r_b = pair.resistance(state.bob());
    Ok((r_a * var_bob - r_b * var_alice) / ((r_a + r_b) * (r_a + r_b)))
}
