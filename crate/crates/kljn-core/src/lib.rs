//! Desk-scale simulator and statistical attack bench for the ideal
//! Kirchhoff-Law-Johnson-Noise (KLJN) key exchange.
//!
//! The crate demonstrates, by construction and by measurement, that Gaussian
//! noise with square-root-of-resistance scaling is the unique secure choice
//! for the ideal loop, and quantifies how badly other noise choices leak the
//! key:
//!
//! * [`noise`] — symmetric noise families (Gaussian, symmetric alpha-stable,
//!   uniform), their characteristic functions, and the Johnson scaling rule.
//! * [`circuit`] — the ideal Kirchhoff loop, Eve's observable traces, and
//!   the analytic independence criteria.
//! * [`eve`] — attack statistics, joint-distribution equality testing, and
//!   Monte Carlo advantage estimation.
//! * [`protocol`] — full key-exchange sessions with a passive eavesdropper.
//! * [`stats`] — shared statistical machinery (energy distance, KS test).

pub mod circuit;
pub mod error;
pub mod eve;
pub mod noise;
pub mod protocol;
pub mod rng;
pub mod stats;

pub use circuit::{
    kljn_coefficients, lukacs_king_residual, parse_trace_csv, simulate_state,
    simulate_state_with_sources, theoretical_cov, Level, LinearFormCoefficients, LoopState,
    ResistorPair, TraceMeta, WireTrace,
};
pub use error::{Error, Result};
pub use eve::{
    corr_sign_statistic, estimate_advantage, ref_match_classify, tail_quadrant_statistic,
    AdvantageReport, Distinguisher, DistinguisherKind, DistinguisherOutcome,
};
pub use noise::{
    empirical_cf, johnson_scaling, NoiseAssignment, NoiseFamily, NoiseModel, ScalingTag,
};
pub use protocol::{
    bits_to_hex, classify_r_sum, run_key_exchange, KeyExchangeResult, PeriodRecord, SessionConfig,
    StateClass,
};
pub use rng::Rng64;
pub use stats::energy::{energy_two_sample, EnergyTestOutcome};
