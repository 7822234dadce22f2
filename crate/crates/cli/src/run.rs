//! One runner per subcommand.

use std::time::Instant;

use cfpoisson::diagnostics::{renyi_report, short_return_report, ReturnBoundReport};
use cfpoisson::orbit::sample_point;
use cfpoisson::renewal::calibrate_intensity;
use cfpoisson::rng::{trial_rng, PURPOSE_ACCEPT, PURPOSE_POINT};
use cfpoisson::transfer::{
    build_ulam, leading_eigen, mixing_decay, Frac, OperatorSetup, UlamGrid, DEFAULT_BRANCH_TOL, DEFAULT_MAX_ITER, DEFAULT_TOL,
};
use cfpoisson::{
    certified_digits, cylinder_interval, empirical_laplace, first_hit_times, poisson_pmf, renewal_stationary, renewal_tail_mass,
    rational_cf, run_trials, target_measure, Digits, RationalInterval, System,
};
use num_bigint::BigUint;
use serde_json::{json, Value};

use crate::config::{parse_ratio, Command, Config, ConfigError};
use crate::error::AppError;
use crate::output::{csv, num, report, Artifact, HISTOGRAM_HEADER, HITTING_HEADER, SPECTRAL_HEADER};

const RENEWAL_TRUNCATION: usize = 40;

pub fn run(cfg: &Config) -> Result<Vec<Artifact>, AppError> {
    let start = Instant::now();
    let (csv_out, results, witnesses) = match cfg.command {
        Command::Doeblin | Command::Tuples | Command::Pattern | Command::NegControl | Command::Renewal => histogram(cfg)?,
        Command::HittingTime => hitting(cfg)?,
        Command::LemmaRatio | Command::Escape | Command::Laplace => spectral(cfg)?,
        Command::Spectrum => (None, spectrum(cfg)?, json!({})),
        Command::Mixing => (None, mixing(cfg)?, json!({})),
        Command::ShortRet => {
            let r = short_return_report(cfg.u64("max_len")? as usize, cfg.u64("max_digit")?)?;
            diagnostic(&r)
        }
        Command::Renyi => {
            let r = renyi_report(cfg.u64("max_len")? as usize, cfg.u64("max_digit")?, cfg.u64("samples")? as usize)?;
            diagnostic(&r)
        }
        Command::Digits => (None, digits(cfg)?, json!({})),
        Command::Measure => (None, measure(cfg)?, json!({})),
    };
    let json_out = Artifact { name: "report.json", body: report(cfg, results, witnesses, start.elapsed().as_secs_f64()) };
    Ok(match csv_out {
        Some(c) => vec![c, json_out],
        None => vec![json_out],
    })
}

type Outputs = (Option<Artifact>, Value, Value);

fn single_n(cfg: &Config) -> Result<u64, ConfigError> {
    match cfg.ns()?.as_slice() {
        [n] => Ok(*n),
        _ => Err(ConfigError(format!("{} takes a single n", cfg.command.name()))),
    }
}

fn histogram(cfg: &Config) -> Result<Outputs, AppError> {
    let n = single_n(cfg)?;
    let trials = cfg.u64("trials")?;
    let seed = cfg.seed();
    let mut extra = serde_json::Map::new();
    let (hist, mu, reference_t) = if cfg.command == Command::Renewal {
        let threshold = cfg.u64("threshold")? as usize;
        let law = match cfg.branch()? {
            Some(law) => law,
            None => {
                let l = calibrate_intensity(threshold, 1.0 / n as f64)?;
                cfpoisson::BranchLaw::PoissonIntensity(l)
            }
        };
        let chain = renewal_stationary(&law, RENEWAL_TRUNCATION)?;
        extra.insert("branch_law".into(), json!(law));
        let mu = renewal_tail_mass(&chain, threshold);
        let hist = run_trials(&System::Renewal { chain: &chain, threshold }, n, trials, seed)?;
        (hist, mu, n as f64 * mu)
    } else {
        let fam = cfg.family()?;
        let target = fam.resolve(n)?;
        let hist = run_trials(&System::Gauss { target: &target, law: cfg.law()? }, n, trials, seed)?;
        extra.insert("family".into(), json!(fam.to_string()));
        let t = match (cfg.str("reference"), fam.limit_intensity()) {
            ("limit", Some(t)) => t,
            _ => hist.t_hat,
        };
        (hist, target.measure(), t)
    };
    let rep = cfpoisson::tv_distance(&hist, |k| poisson_pmf(reference_t, k));
    let rows: Vec<String> = rep
        .per_k
        .iter()
        .map(|r| format!("{},{},{},{},{}", r.k, r.count, num(r.empirical), num(r.reference), num(r.std_err)))
        .collect();
    let laplace = empirical_laplace(&hist.dense(), 1.0);
    let mut results = json!({
        "n": n,
        "trials": trials,
        "mu_An": mu,
        "t_hat": hist.t_hat,
        "reference_intensity": reference_t,
        "tv": rep.tv,
        "p0_empirical": rep.per_k.first().map_or(0.0, |r| r.empirical),
        "p0_reference": poisson_pmf(reference_t, 0),
        "laplace_s1": laplace,
    });
    results.as_object_mut().expect("object").extend(extra);
    Ok((Some(Artifact { name: "histogram.csv", body: csv(cfg, HISTOGRAM_HEADER, &rows) }), results, json!({})))
}

fn hitting(cfg: &Config) -> Result<Outputs, AppError> {
    let n = single_n(cfg)?;
    let fam = cfg.family()?;
    let target = fam.resolve(n)?;
    let sample = first_hit_times(&System::Gauss { target: &target, law: cfg.law()? }, cfg.u64("trials")?, cfg.seed())?;
    let rows: Vec<String> = sample
        .taus
        .iter()
        .enumerate()
        .map(|(j, t)| match t {
            Some(t) => format!("{j},{t},{},0", num(*t as f64 * sample.mu)),
            None => format!("{j},,,1"),
        })
        .collect();
    let results = json!({
        "n": n,
        "family": fam.to_string(),
        "mu_An": sample.mu,
        "horizon": sample.horizon,
        "censored": sample.censored,
        "censored_fraction": sample.censored_fraction(),
        "ks_exp1": sample.ks,
        "mean_scaled": sample.mean_scaled,
    });
    Ok((Some(Artifact { name: "hitting.csv", body: csv(cfg, HITTING_HEADER, &rows) }), results, json!({})))
}

fn spectral(cfg: &Config) -> Result<Outputs, AppError> {
    let fam = cfg.family()?;
    let s_values = if cfg.command == Command::Escape { vec![f64::INFINITY] } else { cfg.s_values()? };
    let mut rows = Vec::new();
    let mut results = Vec::new();
    for grid in cfg.grids()? {
        for n in cfg.ns()? {
            let target = fam.resolve(n)?;
            let setup = OperatorSetup::new(&target, grid)?;
            for &s in &s_values {
                let (mu, lambda, ratio, residual, detail) = match cfg.command {
                    Command::LemmaRatio => {
                        let r = setup.lemma_ratio(s)?;
                        (r.mu_an, r.lambda_n, r.ratio, r.residual, json!(r))
                    }
                    Command::Escape => {
                        let r = setup.escape_ratio()?;
                        (r.mu_an, r.lambda_tilde_n, r.ratio, r.residual, json!(r))
                    }
                    _ => {
                        let r = setup.laplace_predict(s)?;
                        (target.measure(), r.lambda_n, r.lambda_n_pow_n / r.limit, r.residual, json!(r))
                    }
                };
                let s_col = if s.is_infinite() { "inf".to_string() } else { num(s) };
                rows.push(format!("{n},{},{s_col},{},{},{grid},{}", num(mu), num(lambda), num(ratio), num(residual)));
                results.push(detail);
            }
        }
    }
    let body = csv(cfg, SPECTRAL_HEADER, &rows);
    Ok((Some(Artifact { name: "spectral.csv", body }), json!({ "family": fam.to_string(), "rows": results }), json!({})))
}

fn spectrum(cfg: &Config) -> Result<Value, AppError> {
    let mut out = Vec::new();
    for n in cfg.grids()? {
        let grid = UlamGrid::graded(n, &[])?;
        let w = build_ulam::<f64>(&grid, DEFAULT_BRANCH_TOL)?;
        let r = leading_eigen(&w, DEFAULT_TOL, DEFAULT_MAX_ITER)?;
        out.push(json!({
            "grid": n,
            "lambda": r.lambda,
            "lambda2": r.lambda2,
            "gap": r.gap,
            "residual": r.residual,
            "iterations": r.iterations,
            "nnz": w.nnz(),
            "row_sum_error": w.row_sum_error(),
        }));
    }
    Ok(json!(out))
}

fn frac(x: &num_rational::BigRational) -> Result<Frac, ConfigError> {
    Frac::from_big(x).ok_or_else(|| ConfigError(format!("{x} does not fit a 64-bit fraction")))
}

fn mixing(cfg: &Config) -> Result<Value, AppError> {
    let a = Digits::new(cfg.word("a")?)?;
    let a_iv = cylinder_interval(&a)?;
    let ((bp, bq), (cp, cq)) = cfg.b_interval()?;
    let (b_lo, b_hi) = (Frac::new(bp as u64, bq as u64), Frac::new(cp as u64, cq as u64));
    let (a_lo, a_hi) = (frac(a_iv.lo())?, frac(a_iv.hi())?);
    let gaps = cfg.gaps()?;
    let mut out = Vec::new();
    for n in cfg.grids()? {
        let grid = UlamGrid::graded(n, &[a_lo, a_hi, b_lo, b_hi])?;
        let w = build_ulam::<f64>(&grid, DEFAULT_BRANCH_TOL)?;
        let cells = |lo, hi| {
            grid.cells_between(lo, hi)
                .map(|r| r.collect::<Vec<usize>>())
                .ok_or_else(|| ConfigError("interval endpoints are not grid boundaries".into()))
        };
        let est = mixing_decay(&w, &cells(a_lo, a_hi)?, &cells(b_lo, b_hi)?, &gaps, 1)?;
        out.push(json!({ "grid": grid.len(), "estimate": est }));
    }
    Ok(json!(out))
}

fn diagnostic(r: &ReturnBoundReport) -> Outputs {
    let results = json!({
        "max_len": r.max_len,
        "max_digit": r.max_digit,
        "constant": r.constant,
        "worst_ratio": r.worst_ratio,
        "min_ratio": r.min_ratio,
        "evaluated": r.evaluated,
    });
    let witnesses = json!({
        "worst": { "word": r.worst_witness.0, "k": r.worst_witness.1 },
        "min": r.min_witness.as_ref().map(|(w, k)| json!({ "word": w, "k": k })),
    });
    (None, results, witnesses)
}

fn digits(cfg: &Config) -> Result<Value, AppError> {
    let count = cfg.u64("count")? as usize;
    if cfg.has("lo") {
        let (lo, hi) = (parse_ratio("lo", cfg.str("lo"))?, parse_ratio("hi", cfg.str("hi"))?);
        if lo.0 * hi.1 == hi.0 * lo.1 {
            let (p, q) = (BigUint::from(lo.0 as u64), BigUint::from(lo.1 as u64));
            let mut d = rational_cf(&p, &q)?.into_vec();
            d.truncate(count);
            return Ok(json!({ "source": "rational", "digits": d }));
        }
        let d = certified_digits(&RationalInterval::from_ratios(lo, hi)?, count);
        return Ok(json!({ "source": "interval", "digits": d }));
    }
    let (seed, trial) = (cfg.seed(), cfg.u64("trial")?);
    let mut xr = trial_rng(seed, PURPOSE_POINT, trial);
    let mut ur = trial_rng(seed, PURPOSE_ACCEPT, trial);
    let mut p = sample_point(&mut xr, &mut ur, cfg.law()?);
    let d = p.certified_digits(count, &mut xr)?;
    Ok(json!({ "source": "sample", "trial": trial, "digits": d }))
}

fn measure(cfg: &Config) -> Result<Value, AppError> {
    let fam = cfg.family()?;
    let law = cfg.law()?;
    let mut out = Vec::new();
    for n in cfg.ns()? {
        let mu = match law {
            cfpoisson::MeasureLaw::Gauss => target_measure(&fam, n)?,
            other => fam.resolve(n)?.measure_under(other),
        };
        out.push(json!({ "n": n, "mu_An": mu, "n_mu_An": n as f64 * mu }));
    }
    Ok(json!({ "family": fam.to_string(), "limit_intensity": fam.limit_intensity(), "values": out }))
}
