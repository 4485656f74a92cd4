use std::fs;
use std::path::{Path, PathBuf};

use kljn_core::eve::Distinguisher;
use kljn_core::noise::{johnson_scaling, NoiseAssignment, NoiseFamily, NoiseModel};
use kljn_core::{
    empirical_cf, estimate_advantage, run_key_exchange, simulate_state, LoopState, ResistorPair,
    Rng64, SessionConfig,
};
use serde_json::json;

use crate::cfg::ConfigMap;
use crate::{
    AttackArgs, CfCheckArgs, CliError, DistinguisherArg, FigureArgs, KeyexchangeArgs, NoiseArg,
    NoiseFlags, ScalingArg, SimulateArgs, StateArg,
};

const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Stream index reserved for distinguisher calibration.
const CALIBRATION_STREAM: u64 = u64::MAX;
const CALIBRATION_EPISODES: usize = 16;

/// A fully resolved pair + assignment, with the manifest fields kept around.
struct ResolvedNoise {
    pair: ResistorPair,
    assignment: NoiseAssignment,
    manifest: serde_json::Value,
}

fn family_of(noise: NoiseArg, alpha: f64) -> NoiseFamily {
    match noise {
        NoiseArg::Gaussian => NoiseFamily::Gaussian,
        NoiseArg::Stable => NoiseFamily::SymmetricStable { alpha },
        NoiseArg::Uniform => NoiseFamily::Uniform,
    }
}

fn model_of(noise: NoiseArg, alpha: f64, magnitude: f64) -> Result<NoiseModel, CliError> {
    Ok(match noise {
        NoiseArg::Gaussian => NoiseModel::gaussian(magnitude)?,
        NoiseArg::Stable => NoiseModel::symmetric_stable(alpha, magnitude)?,
        NoiseArg::Uniform => NoiseModel::uniform(magnitude)?,
    })
}

fn resolve_noise(flags: &NoiseFlags, cfg: &ConfigMap) -> Result<ResolvedNoise, CliError> {
    let noise = cfg.pick(flags.noise, "noise", NoiseArg::Gaussian)?;
    let alpha = cfg.pick(flags.alpha, "alpha", 2.0)?;
    let scaling = cfg.pick(flags.scaling, "scaling", ScalingArg::Johnson)?;
    let high = cfg.pick(flags.high_magnitude, "high_magnitude", 1.0)?;
    let low = cfg.pick_opt(flags.low_magnitude, "low_magnitude")?;
    let r_low = cfg.pick(flags.r_low, "r_low", 1_000.0)?;
    let r_high = cfg.pick(flags.r_high, "r_high", 10_000.0)?;
    let pair = ResistorPair::new(r_low, r_high)?;
    let assignment = match scaling {
        ScalingArg::Johnson => {
            if low.is_some() {
                return Err(CliError::Usage(
                    "--low-magnitude is only valid with --scaling explicit".into(),
                ));
            }
            johnson_scaling(&pair, family_of(noise, alpha), high)?
        }
        ScalingArg::Explicit => {
            let low = low.ok_or_else(|| {
                CliError::Usage("--scaling explicit requires --low-magnitude".into())
            })?;
            NoiseAssignment::explicit(
                model_of(noise, alpha, low)?,
                model_of(noise, alpha, high)?,
            )?
        }
    };
    let manifest = json!({
        "r_low": r_low,
        "r_high": r_high,
        "noise": format!("{noise:?}").to_lowercase(),
        "alpha": if matches!(noise, NoiseArg::Stable) { Some(alpha) } else { None },
        "scaling": format!("{scaling:?}").to_lowercase(),
        "low_magnitude": assignment.low().magnitude(),
        "high_magnitude": assignment.high().magnitude(),
    });
    Ok(ResolvedNoise { pair, assignment, manifest })
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents)
        .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))
}

/// Sibling `<file>.manifest.json` describing how to regenerate `<file>`.
fn write_manifest(output: &Path, body: serde_json::Value) -> Result<(), CliError> {
    let mut manifest = body;
    manifest["version"] = json!(VERSION);
    let path = PathBuf::from(format!("{}.manifest.json", output.display()));
    write_file(&path, &format!("{manifest:#}\n"))
}

pub fn simulate(args: SimulateArgs) -> Result<(), CliError> {
    let cfg = ConfigMap::load(args.config.as_deref())?;
    let state = cfg.pick(args.state, "state", StateArg::Lh)?.to_state();
    let n = cfg.pick(args.n, "n", 8_192)?;
    let seed = cfg.pick(args.seed, "seed", 0)?;
    let resolved = resolve_noise(&args.noise, &cfg)?;

    let mut rng = Rng64::new(seed);
    let trace = simulate_state(state, &resolved.pair, &resolved.assignment, n, &mut rng)?;
    write_file(&args.out, &trace.to_csv_string())?;
    write_manifest(
        &args.out,
        json!({
            "command": "simulate",
            "state": format!("{state:?}"),
            "params": resolved.manifest,
            "n": n,
            "seed": seed,
        }),
    )?;
    println!("wrote {} samples to {}", n, args.out.display());
    Ok(())
}

pub fn figure(args: FigureArgs) -> Result<(), CliError> {
    let cfg = ConfigMap::load(args.config.as_deref())?;
    let n = cfg.pick(args.n, "n", 8_192)?;
    let seed = cfg.pick(args.seed, "seed", 0)?;
    let pair = ResistorPair::new(1_000.0, 10_000.0).expect("fixed reference pair");

    // (file name, state, assignment, extra manifest fields)
    let mut datasets: Vec<(String, LoopState, NoiseAssignment, serde_json::Value)> = Vec::new();
    match args.id {
        2 => {
            // Mis-scaled Gaussian, ratio 1.5 against the Johnson sqrt(10).
            let a = NoiseAssignment::explicit(
                NoiseModel::gaussian(1.0).expect("fixed"),
                NoiseModel::gaussian(1.5).expect("fixed"),
            )
            .expect("same family");
            for state in [LoopState::LH, LoopState::HL] {
                datasets.push((
                    format!("fig2_{state:?}.csv"),
                    state,
                    a,
                    json!({"noise": "gaussian", "sigma_low": 1.0, "sigma_high": 1.5}),
                ));
            }
        }
        3 => {
            // Johnson-scaled symmetric stable across light-to-heavy tails;
            // alpha = 1 and alpha = 2 are the Cauchy and normal endpoints.
            for alpha in [0.5, 1.0, 1.5, 2.0] {
                let a = johnson_scaling(&pair, NoiseFamily::SymmetricStable { alpha }, 1.0)?;
                datasets.push((
                    format!("fig3_alpha_{alpha:.1}.csv"),
                    LoopState::HL,
                    a,
                    json!({"noise": "stable", "alpha": alpha,
                           "scale_low": a.low().magnitude(), "scale_high": 1.0}),
                ));
            }
        }
        4 => {
            let a = johnson_scaling(&pair, NoiseFamily::Uniform, 1.0)?;
            for state in [LoopState::LH, LoopState::HL] {
                datasets.push((
                    format!("fig4_{state:?}.csv"),
                    state,
                    a,
                    json!({"noise": "uniform",
                           "half_width_low": a.low().magnitude(), "half_width_high": 1.0}),
                ));
            }
        }
        other => {
            return Err(CliError::Usage(format!("unknown figure id {other}; valid ids are 2, 3, 4")));
        }
    }

    fs::create_dir_all(&args.out_dir)
        .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", args.out_dir.display())))?;
    let mut entries = Vec::new();
    for (stream, (name, state, assignment, params)) in datasets.iter().enumerate() {
        let mut rng = Rng64::derive(seed, stream as u64);
        let trace = simulate_state(*state, &pair, assignment, n, &mut rng)?;
        write_file(&args.out_dir.join(name), &trace.to_csv_string())?;
        entries.push(json!({
            "file": name,
            "state": format!("{state:?}"),
            "stream": stream,
            "params": params,
        }));
    }
    let manifest = json!({
        "version": VERSION,
        "command": "figure",
        "id": args.id,
        "r_low": pair.r_low(),
        "r_high": pair.r_high(),
        "n": n,
        "seed": seed,
        "datasets": entries,
    });
    write_file(&args.out_dir.join("manifest.json"), &format!("{manifest:#}\n"))?;
    println!("wrote {} datasets to {}", datasets.len(), args.out_dir.display());
    Ok(())
}

fn build_distinguisher(
    kind: DistinguisherArg,
    q: f64,
    refs_per_state: usize,
) -> Result<Distinguisher, CliError> {
    Ok(match kind {
        DistinguisherArg::CorrSign => Distinguisher::corr_sign(),
        DistinguisherArg::TailQuadrant => Distinguisher::tail_quadrant(q)?,
        DistinguisherArg::RefMatch => Distinguisher::ref_match(refs_per_state)?,
    })
}

pub fn attack(args: AttackArgs) -> Result<(), CliError> {
    let cfg = ConfigMap::load(args.config.as_deref())?;
    let kind = cfg.pick(args.distinguisher, "distinguisher", DistinguisherArg::CorrSign)?;
    let q = cfg.pick(args.q, "q", 0.95)?;
    let refs = cfg.pick(args.refs_per_state, "refs_per_state", 8)?;
    let episodes = cfg.pick(args.episodes, "episodes", 500)?;
    let n = cfg.pick(args.n, "n", 4_096)?;
    let seed = cfg.pick(args.seed, "seed", 0)?;
    let resolved = resolve_noise(&args.noise, &cfg)?;

    let mut distinguisher = build_distinguisher(kind, q, refs)?;
    let mut cal_rng = Rng64::derive(seed, CALIBRATION_STREAM);
    distinguisher.calibrate(
        &resolved.pair,
        &resolved.assignment,
        n,
        CALIBRATION_EPISODES,
        &mut cal_rng,
    )?;

    let report = estimate_advantage(
        &distinguisher,
        &resolved.pair,
        &resolved.assignment,
        episodes,
        n,
        seed,
    )?;
    write_file(&args.out, &format!("{}\n", report.to_json_line()))?;
    write_manifest(
        &args.out,
        json!({
            "command": "attack",
            "distinguisher": report.distinguisher,
            "params": resolved.manifest,
            "episodes": episodes,
            "n": n,
            "seed": seed,
        }),
    )?;
    println!("{}", report.to_table());
    Ok(())
}

pub fn keyexchange(args: KeyexchangeArgs) -> Result<(), CliError> {
    let cfg = ConfigMap::load(args.config.as_deref())?;
    let bits = cfg.pick(args.bits, "bits", 128)?;
    let samples_per_bit = cfg.pick(args.samples_per_bit, "samples_per_bit", 4_096)?;
    let c = cfg.pick(args.thermal_constant, "thermal_constant", 1e-4)?;
    let noise = cfg.pick(args.noise, "noise", NoiseArg::Gaussian)?;
    let mis_ratio = cfg.pick_opt(args.mis_ratio, "mis_ratio")?;
    let r_low = cfg.pick(args.r_low, "r_low", 1_000.0)?;
    let r_high = cfg.pick(args.r_high, "r_high", 10_000.0)?;
    let eve_kind = cfg.pick_opt(args.eve, "eve")?;
    let q = cfg.pick(args.q, "q", 0.95)?;
    let refs = cfg.pick(args.refs_per_state, "refs_per_state", 8)?;
    let seed = cfg.pick(args.seed, "seed", 0)?;

    let pair = ResistorPair::new(r_low, r_high)?;
    if !(c.is_finite() && c > 0.0) {
        return Err(CliError::Usage(format!("thermal constant must be > 0, got {c}")));
    }
    // The thermal constant anchors the low side: var_low = c * R_L.
    let (low_magnitude, family) = match noise {
        NoiseArg::Gaussian => ((c * r_low).sqrt(), NoiseFamily::Gaussian),
        NoiseArg::Uniform => ((3.0 * c * r_low).sqrt(), NoiseFamily::Uniform),
        NoiseArg::Stable => {
            return Err(CliError::Usage(
                "keyexchange requires a finite-variance family: gaussian or uniform".into(),
            ));
        }
    };
    let assignment = match mis_ratio {
        None => johnson_scaling(&pair, family, low_magnitude * (r_high / r_low).sqrt())?,
        Some(ratio) => {
            if !(ratio.is_finite() && ratio > 0.0) {
                return Err(CliError::Usage(format!("mis-ratio must be > 0, got {ratio}")));
            }
            NoiseAssignment::explicit(
                model_of(noise, 2.0, low_magnitude)?,
                model_of(noise, 2.0, low_magnitude * ratio)?,
            )?
        }
    };
    let eve = eve_kind.map(|k| build_distinguisher(k, q, refs)).transpose()?;
    let config = SessionConfig::new(pair, assignment, c, bits, samples_per_bit, seed, eve)?;
    let result = run_key_exchange(&config)?;

    write_file(&args.out, &format!("{}\n", result.to_json()))?;
    if let Some(periods_out) = &args.periods_out {
        let mut buf = Vec::new();
        result.write_periods_csv(&mut buf)?;
        write_file(periods_out, &String::from_utf8(buf).expect("csv is ascii"))?;
    }
    write_manifest(
        &args.out,
        json!({
            "command": "keyexchange",
            "bits": bits,
            "samples_per_bit": samples_per_bit,
            "thermal_constant": c,
            "noise": format!("{noise:?}").to_lowercase(),
            "mis_ratio": mis_ratio,
            "r_low": r_low,
            "r_high": r_high,
            "eve": eve_kind.map(|k| format!("{k:?}")),
            "seed": seed,
        }),
    )?;
    println!(
        "kept {} bits ({} discarded periods), agreement {:.4}, eve accuracy {}",
        result.kept_periods,
        result.discarded_periods,
        result.agreement_rate,
        result
            .eve_accuracy
            .map(|a| format!("{a:.4}"))
            .unwrap_or_else(|| "n/a".into()),
    );
    Ok(())
}

pub fn cf_check(args: CfCheckArgs) -> Result<(), CliError> {
    let cfg = ConfigMap::load(args.config.as_deref())?;
    let noise = cfg.pick(args.noise, "noise", NoiseArg::Stable)?;
    let alpha = cfg.pick(args.alpha, "alpha", 2.0)?;
    let magnitude = cfg.pick(args.magnitude, "magnitude", 1.0)?;
    let n = cfg.pick(args.n, "n", 1 << 16)?;
    let t_min = cfg.pick(args.t_min, "t_min", 0.1)?;
    let t_max = cfg.pick(args.t_max, "t_max", 3.0)?;
    let t_steps = cfg.pick(args.t_steps, "t_steps", 30)?;
    let seed = cfg.pick(args.seed, "seed", 0)?;

    if t_steps == 0 {
        return Err(CliError::Usage("t-steps must be at least 1".into()));
    }
    if !(t_min.is_finite() && t_max.is_finite() && t_min <= t_max) {
        return Err(CliError::Usage(format!("bad t grid [{t_min}, {t_max}]")));
    }
    let model = model_of(noise, alpha, magnitude)?;
    let samples = model.sample(n, &mut Rng64::new(seed))?;

    let mut out = String::from("t,empirical,exact,abs_error\n");
    let mut max_err: f64 = 0.0;
    for k in 0..t_steps {
        let t = if t_steps == 1 {
            t_min
        } else {
            t_min + (t_max - t_min) * k as f64 / (t_steps - 1) as f64
        };
        let emp = empirical_cf(&samples, t)?;
        let exact = model.char_function(t)?;
        let err = (emp - exact).abs();
        max_err = max_err.max(err);
        out.push_str(&format!("{t:.16e},{emp:.16e},{exact:.16e},{err:.16e}\n"));
    }
    write_file(&args.out, &out)?;
    write_manifest(
        &args.out,
        json!({
            "command": "cf-check",
            "noise": format!("{noise:?}").to_lowercase(),
            "alpha": if matches!(noise, NoiseArg::Stable) { Some(alpha) } else { None },
            "magnitude": magnitude,
            "n": n,
            "t_min": t_min,
            "t_max": t_max,
            "t_steps": t_steps,
            "seed": seed,
        }),
    )?;
    println!("max |empirical - exact| = {max_err:.3e} over {t_steps} grid points");
    Ok(())
}
