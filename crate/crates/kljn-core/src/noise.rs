//! Symmetric zero-mean noise models and their resistance-scaling rules.
//!
//! Three families are supported: Gaussian, symmetric alpha-stable, and
//! uniform. All are symmetric about zero, which keeps the characteristic
//! function real. The stable family is sampled with the Chambers-Mallows-Stuck
//! construction and uses the convention `phi(t) = exp(-|scale * t|^alpha)`,
//! so a larger scale always means larger noise. `alpha = 2` is Gaussian with
//! `sigma = scale * sqrt(2)`, `alpha = 1` is Cauchy.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::circuit::{Level, ResistorPair};
use crate::error::{Error, Result};
use crate::rng::Rng64;

/// Stability parameters at or below this bound are rejected: draws start
/// overflowing the double range with non-negligible probability.
pub const MIN_ALPHA: f64 = 0.1;

/// A symmetric, zero-centered noise law. Magnitudes are in volts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum NoiseModel {
    Gaussian { sigma: f64 },
    SymmetricStable { alpha: f64, scale: f64 },
    Uniform { half_width: f64 },
}

/// Family tag without magnitudes, used to request a Johnson-scaled pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseFamily {
    Gaussian,
    SymmetricStable { alpha: f64 },
    Uniform,
}

impl NoiseModel {
    pub fn gaussian(sigma: f64) -> Result<Self> {
        let m = NoiseModel::Gaussian { sigma };
        m.validate()?;
        Ok(m)
    }

    pub fn symmetric_stable(alpha: f64, scale: f64) -> Result<Self> {
        let m = NoiseModel::SymmetricStable { alpha, scale };
        m.validate()?;
        Ok(m)
    }

    pub fn uniform(half_width: f64) -> Result<Self> {
        let m = NoiseModel::Uniform { half_width };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        let check_mag = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("{name} must be finite and > 0, got {v}")))
            }
        };
        match *self {
            NoiseModel::Gaussian { sigma } => check_mag("sigma", sigma),
            NoiseModel::SymmetricStable { alpha, scale } => {
                check_mag("scale", scale)?;
                if !(alpha > MIN_ALPHA && alpha <= 2.0) {
                    return Err(Error::InvalidParameter(format!(
                        "alpha must lie in ({MIN_ALPHA}, 2], got {alpha}"
                    )));
                }
                Ok(())
            }
            NoiseModel::Uniform { half_width } => check_mag("half_width", half_width),
        }
    }

    /// The family's magnitude parameter: sigma, scale, or half_width.
    pub fn magnitude(&self) -> f64 {
        match *self {
            NoiseModel::Gaussian { sigma } => sigma,
            NoiseModel::SymmetricStable { scale, .. } => scale,
            NoiseModel::Uniform { half_width } => half_width,
        }
    }

    /// Variance, when it exists. Stable laws with `alpha < 2` have none.
    pub fn variance(&self) -> Option<f64> {
        match *self {
            NoiseModel::Gaussian { sigma } => Some(sigma * sigma),
            NoiseModel::SymmetricStable { alpha, scale } => {
                (alpha == 2.0).then(|| 2.0 * scale * scale)
            }
            NoiseModel::Uniform { half_width } => Some(half_width * half_width / 3.0),
        }
    }

    pub fn family(&self) -> NoiseFamily {
        match *self {
            NoiseModel::Gaussian { .. } => NoiseFamily::Gaussian,
            NoiseModel::SymmetricStable { alpha, .. } => NoiseFamily::SymmetricStable { alpha },
            NoiseModel::Uniform { .. } => NoiseFamily::Uniform,
        }
    }

    /// Same family with the magnitude multiplied by `ratio`.
    pub fn with_magnitude_ratio(&self, ratio: f64) -> Self {
        match *self {
            NoiseModel::Gaussian { sigma } => NoiseModel::Gaussian { sigma: sigma * ratio },
            NoiseModel::SymmetricStable { alpha, scale } => {
                NoiseModel::SymmetricStable { alpha, scale: scale * ratio }
            }
            NoiseModel::Uniform { half_width } => {
                NoiseModel::Uniform { half_width: half_width * ratio }
            }
        }
    }

    /// Single draw. Gaussian uses Box-Muller, the stable family the
    /// Chambers-Mallows-Stuck construction; each draw consumes a fixed
    /// number of uniforms so streams are reproducible per sample index.
    pub fn draw(&self, rng: &mut Rng64) -> f64 {
        match *self {
            NoiseModel::Gaussian { sigma } => {
                let u1 = rng.next_f64();
                let u2 = rng.next_f64();
                sigma * (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
            }
            NoiseModel::SymmetricStable { alpha, scale } => scale * standard_stable(alpha, rng),
            NoiseModel::Uniform { half_width } => half_width * (2.0 * rng.next_f64() - 1.0),
        }
    }

    /// `n` i.i.d. draws. Deterministic given the generator state.
    pub fn sample(&self, n: usize, rng: &mut Rng64) -> Result<Vec<f64>> {
        self.validate()?;
        if n == 0 {
            return Err(Error::TooFewSamples { required: 1, got: 0 });
        }
        Ok((0..n).map(|_| self.draw(rng)).collect())
    }

    /// Characteristic function `E[exp(i t X)]`; real by symmetry.
    pub fn char_function(&self, t: f64) -> Result<f64> {
        self.validate()?;
        if !t.is_finite() {
            return Err(Error::InvalidParameter(format!("t must be finite, got {t}")));
        }
        Ok(match *self {
            NoiseModel::Gaussian { sigma } => (-sigma * sigma * t * t / 2.0).exp(),
            NoiseModel::SymmetricStable { alpha, scale } => (-(scale * t).abs().powf(alpha)).exp(),
            NoiseModel::Uniform { half_width } => {
                let x = half_width * t;
                if x == 0.0 {
                    1.0
                } else {
                    x.sin() / x
                }
            }
        })
    }
}

/// Standard symmetric alpha-stable variate (unit scale), Chambers-Mallows-Stuck.
///
/// `U` uniform on (-pi/2, pi/2), `W` unit exponential;
/// `X = sin(alpha U) / cos(U)^(1/alpha) * (cos((1-alpha) U) / W)^((1-alpha)/alpha)`,
/// with `X = tan(U)` on the `alpha = 1` branch.
fn standard_stable(alpha: f64, rng: &mut Rng64) -> f64 {
    let u = PI * (rng.next_f64() - 0.5);
    let w = -rng.next_f64().ln();
    if alpha == 1.0 {
        return u.tan();
    }
    let lead = (alpha * u).sin() / u.cos().powf(1.0 / alpha);
    let tail = (((1.0 - alpha) * u).cos() / w).powf((1.0 - alpha) / alpha);
    lead * tail
}

/// Empirical characteristic function `(1/n) sum cos(t x_k)`; the real part
/// suffices because every model in scope is symmetric.
pub fn empirical_cf(samples: &[f64], t: f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::TooFewSamples { required: 1, got: 0 });
    }
    Ok(samples.iter().map(|x| (t * x).cos()).sum::<f64>() / samples.len() as f64)
}

/// How a `NoiseAssignment` was built.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalingTag {
    Johnson,
    Explicit,
}

/// The pair of noise models attached to the low and high resistors.
///
/// Both sides always belong to the same family; mixing families across the
/// two resistors is never meaningful here.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseAssignment {
    low: NoiseModel,
    high: NoiseModel,
    scaling_tag: ScalingTag,
}

impl NoiseAssignment {
    /// Explicitly chosen magnitudes, typically a deliberate mis-scaling.
    pub fn explicit(low: NoiseModel, high: NoiseModel) -> Result<Self> {
        low.validate()?;
        high.validate()?;
        if low.family() != high.family() {
            return Err(Error::InvalidParameter(format!(
                "low and high must share a family, got {:?} vs {:?}",
                low.family(),
                high.family()
            )));
        }
        Ok(NoiseAssignment { low, high, scaling_tag: ScalingTag::Explicit })
    }

    pub fn low(&self) -> &NoiseModel {
        &self.low
    }

    pub fn high(&self) -> &NoiseModel {
        &self.high
    }

    pub fn scaling_tag(&self) -> ScalingTag {
        self.scaling_tag
    }

    pub fn model_for(&self, level: Level) -> &NoiseModel {
        match level {
            Level::Low => &self.low,
            Level::High => &self.high,
        }
    }

    /// Short description used in report fingerprints.
    pub fn describe(&self) -> String {
        let tag = match self.scaling_tag {
            ScalingTag::Johnson => "johnson",
            ScalingTag::Explicit => "explicit",
        };
        match (self.low, self.high) {
            (NoiseModel::Gaussian { sigma: lo }, NoiseModel::Gaussian { sigma: hi }) => {
                format!("gaussian(sigma_low={lo},sigma_high={hi},{tag})")
            }
            (
                NoiseModel::SymmetricStable { alpha, scale: lo },
                NoiseModel::SymmetricStable { scale: hi, .. },
            ) => format!("stable(alpha={alpha},scale_low={lo},scale_high={hi},{tag})"),
            (NoiseModel::Uniform { half_width: lo }, NoiseModel::Uniform { half_width: hi }) => {
                format!("uniform(half_width_low={lo},half_width_high={hi},{tag})")
            }
            _ => unreachable!("mixed families are rejected at construction"),
        }
    }
}

/// Builds the Johnson-scaled assignment: the low-side magnitude is
/// `high_magnitude * sqrt(R_L / R_H)`, so that magnitude^2 is proportional
/// to the attached resistance for every family in scope.
pub fn johnson_scaling(
    pair: &ResistorPair,
    family: NoiseFamily,
    high_magnitude: f64,
) -> Result<NoiseAssignment> {
    let ratio = (pair.r_low() / pair.r_high()).sqrt();
    let (low, high) = match family {
        NoiseFamily::Gaussian => (
            NoiseModel::gaussian(high_magnitude * ratio)?,
            NoiseModel::gaussian(high_magnitude)?,
        ),
        NoiseFamily::SymmetricStable { alpha } => (
            NoiseModel::symmetric_stable(alpha, high_magnitude * ratio)?,
            NoiseModel::symmetric_stable(alpha, high_magnitude)?,
        ),
        NoiseFamily::Uniform => (
            NoiseModel::uniform(high_magnitude * ratio)?,
            NoiseModel::uniform(high_magnitude)?,
        ),
    };
    Ok(NoiseAssignment { low, high, scaling_tag: ScalingTag::Johnson })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair() -> ResistorPair {
        ResistorPair::new(1_000.0, 10_000.0).unwrap()
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(NoiseModel::gaussian(0.0).is_err());
        assert!(NoiseModel::gaussian(-1.0).is_err());
        assert!(NoiseModel::gaussian(f64::NAN).is_err());
        assert!(NoiseModel::uniform(0.0).is_err());
        assert!(NoiseModel::symmetric_stable(0.0, 1.0).is_err());
        assert!(NoiseModel::symmetric_stable(0.1, 1.0).is_err());
        assert!(NoiseModel::symmetric_stable(2.1, 1.0).is_err());
        assert!(NoiseModel::symmetric_stable(1.5, -2.0).is_err());
        assert!(NoiseModel::symmetric_stable(0.2, 1.0).is_ok());
    }

    #[test]
    fn sample_rejects_zero_count() {
        let m = NoiseModel::gaussian(1.0).unwrap();
        assert!(m.sample(0, &mut Rng64::new(1)).is_err());
    }

    #[test]
    fn gaussian_moments_match_parameters() {
        // Law of large numbers on the defining parameters.
        let n = 100_000;
        let m = NoiseModel::gaussian(1.0).unwrap();
        let xs = m.sample(n, &mut Rng64::new(11)).unwrap();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let sd = (xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n as f64).sqrt();
        let nf = n as f64;
        assert!(mean.abs() < 4.0 / nf.sqrt(), "mean {mean}");
        assert!((sd - 1.0).abs() < 4.0 / (2.0 * nf).sqrt(), "sd {sd}");
    }

    #[test]
    fn cauchy_quartiles_from_closed_form_cdf() {
        // Cauchy CDF F(x) = 1/2 + atan(x)/pi gives F(1) = 0.75, F(-1) = 0.25.
        let n = 100_000;
        let m = NoiseModel::symmetric_stable(1.0, 1.0).unwrap();
        let mut xs = m.sample(n, &mut Rng64::new(12)).unwrap();
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median = xs[n / 2];
        let q1 = xs[n / 4];
        let q3 = xs[3 * n / 4];
        assert!(median.abs() < 0.05, "median {median}");
        assert!((q1 + 1.0).abs() < 0.05, "q1 {q1}");
        assert!((q3 - 1.0).abs() < 0.05, "q3 {q3}");
    }

    #[test]
    fn char_function_values() {
        let stable1 = NoiseModel::symmetric_stable(1.0, 1.0).unwrap();
        let stable2 = NoiseModel::symmetric_stable(2.0, 1.0).unwrap();
        let gauss = NoiseModel::gaussian(1.0).unwrap();
        let unif = NoiseModel::uniform(1.0).unwrap();
        for m in [stable1, stable2, gauss, unif] {
            assert_eq!(m.char_function(0.0).unwrap(), 1.0);
        }
        assert!((stable1.char_function(1.0).unwrap() - (-1.0f64).exp()).abs() < 1e-15);
        assert!((stable2.char_function(2.0).unwrap() - (-4.0f64).exp()).abs() < 1e-15);
        assert!(gauss.char_function(f64::INFINITY).is_err());
    }

    #[test]
    fn gaussian_cf_equals_alpha2_cf_with_sigma_w_sqrt2() {
        let w = 0.7;
        let stable = NoiseModel::symmetric_stable(2.0, w).unwrap();
        let gauss = NoiseModel::gaussian(w * 2.0f64.sqrt()).unwrap();
        for k in 0..50 {
            let t = -3.0 + 0.13 * k as f64;
            let a = stable.char_function(t).unwrap();
            let b = gauss.char_function(t).unwrap();
            assert!((a - b).abs() < 1e-12, "t={t}: {a} vs {b}");
        }
    }

    #[test]
    fn empirical_cf_trivial_cases() {
        assert_eq!(empirical_cf(&[0.0, 0.0, 0.0], 2.7).unwrap(), 1.0);
        let c = 1.3;
        let t = 0.9;
        let got = empirical_cf(&[c, -c], t).unwrap();
        assert!((got - (t * c).cos()).abs() < 1e-15);
        assert!(empirical_cf(&[], 1.0).is_err());
    }

    #[test]
    fn empirical_cf_converges_to_exact_cf() {
        // Monte Carlo CF convergence; the exact CF is the oracle.
        let n = 1 << 16;
        let m = NoiseModel::symmetric_stable(1.5, 1.0).unwrap();
        let xs = m.sample(n, &mut Rng64::new(13)).unwrap();
        let bound = 3.0 / (n as f64).sqrt();
        for k in 1..=30 {
            let t = 0.1 * k as f64;
            let err = (empirical_cf(&xs, t).unwrap() - m.char_function(t).unwrap()).abs();
            assert!(err <= bound, "t={t}: err {err} > {bound}");
        }
    }

    #[test]
    fn johnson_scaling_examples() {
        let a = johnson_scaling(&pair(), NoiseFamily::Gaussian, 1.0).unwrap();
        assert!((a.low().magnitude() - 1.0 / 10.0f64.sqrt()).abs() < 1e-15);
        assert_eq!(a.scaling_tag(), ScalingTag::Johnson);

        let eq = ResistorPair::degenerate(1_000.0).unwrap();
        let b = johnson_scaling(&eq, NoiseFamily::Uniform, 2.0).unwrap();
        assert_eq!(b.low().magnitude(), 2.0);

        let p = ResistorPair::new(1.0, 4.0).unwrap();
        let c = johnson_scaling(&p, NoiseFamily::SymmetricStable { alpha: 1.0 }, 2.0).unwrap();
        assert!((c.low().magnitude() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn johnson_scaling_is_algebraically_exact() {
        // magnitude(low)^2 * R_H = magnitude(high)^2 * R_L to 1e-12 relative.
        for (rl, rh, hi) in [(1_000.0, 10_000.0, 1.0), (50.0, 75.0, 3.7), (1.0, 1e6, 0.01)] {
            let p = ResistorPair::new(rl, rh).unwrap();
            let a = johnson_scaling(&p, NoiseFamily::Gaussian, hi).unwrap();
            let lhs = a.low().magnitude().powi(2) * rh;
            let rhs = a.high().magnitude().powi(2) * rl;
            assert!((lhs - rhs).abs() <= 1e-12 * rhs.abs());
        }
    }

    #[test]
    fn assignment_rejects_mixed_families() {
        let g = NoiseModel::gaussian(1.0).unwrap();
        let u = NoiseModel::uniform(1.0).unwrap();
        assert!(NoiseAssignment::explicit(g, u).is_err());
        assert!(NoiseAssignment::explicit(g, g).is_ok());
    }

    #[test]
    fn sampling_is_deterministic() {
        let m = NoiseModel::symmetric_stable(1.5, 2.0).unwrap();
        let a = m.sample(1000, &mut Rng64::new(99)).unwrap();
        let b = m.sample(1000, &mut Rng64::new(99)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn variance_is_defined_only_where_it_exists() {
        assert_eq!(NoiseModel::gaussian(2.0).unwrap().variance(), Some(4.0));
        assert_eq!(NoiseModel::uniform(3.0).unwrap().variance(), Some(3.0));
        assert_eq!(NoiseModel::symmetric_stable(2.0, 1.0).unwrap().variance(), Some(2.0));
        assert_eq!(NoiseModel::symmetric_stable(1.0, 1.0).unwrap().variance(), None);
    }
}
