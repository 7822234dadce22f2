//! Acceptance experiments. Prints one PASS/FAIL line per criterion.

mod common;

use std::process::ExitCode;
use std::time::Instant;

use cfpoisson::diagnostics::{cylinder_self_overlap, short_return_report};
use cfpoisson::renewal::calibrate_intensity;
use cfpoisson::transfer::{
    build_ulam, leading_eigen, mixing_decay, Frac, OperatorSetup, UlamGrid, DEFAULT_BRANCH_TOL,
};
use cfpoisson::{
    assumption_b_ratio, empirical_laplace, first_hit_times, poisson_pmf, renewal_stationary, renewal_tail_mass, run_trials,
    tv_distance, BranchLaw, Digits, MeasureLaw, OverlapMethod, System, TargetFamily,
};

const LN2: f64 = std::f64::consts::LN_2;
const TRIALS: u64 = 100_000;

/// Criteria that cannot pass as stated; their FAIL lines do not change the exit status.
const KNOWN_INFEASIBLE: &[&str] = &["C3"];

/// Pinned regression values.
const LAMBDA2_8192: f64 = -0.30394021031485924;
const SHORT_RETURN_WITNESS: (&[u64], usize) = (&[1, 1, 1, 1], 1);

type Run = Box<dyn Fn() -> String + Sync>;

struct Harness {
    lines: Vec<(String, bool)>,
    runs: Vec<(String, String, Run)>,
}

impl Harness {
    fn report(&mut self, id: &str, pass: bool, detail: String) {
        let line = format!("{id} {} {detail}", if pass { "PASS" } else { "FAIL" });
        println!("{line}");
        self.lines.push((id.to_string(), pass));
    }

    /// Runs a Monte Carlo experiment and keeps it for the determinism check.
    fn monte_carlo<T: std::fmt::Debug>(&mut self, label: &str, f: impl Fn() -> T + Sync + 'static) -> T {
        let out = f();
        self.runs.push((label.to_string(), format!("{out:?}"), Box::new(move || format!("{:?}", f()))));
        out
    }
}

fn tail() -> TargetFamily {
    TargetFamily::TailSet { theta: 1.0 }
}

fn c1(h: &mut Harness) {
    let n = 1000;
    let hist = h.monte_carlo("C1", move || {
        let target = tail().resolve(n).unwrap();
        run_trials(&System::Gauss { target: &target, law: MeasureLaw::Lebesgue }, n, TRIALS, 1).unwrap()
    });
    let t = 1.0 / LN2;
    let r = tv_distance(&hist, |k| poisson_pmf(t, k));
    let p0 = hist.counts.get(&0).copied().unwrap_or(0) as f64 / TRIALS as f64;
    let dp0 = (p0 - (-t).exp()).abs();
    h.report("C1", r.tv <= 0.02 && dp0 <= 0.01, format!("doeblin n={n}: tv={:.5} (<= 0.02), |P(0) - e^(-1/log 2)|={dp0:.5} (<= 0.01)", r.tv));
}

fn c2(h: &mut Harness) {
    let n = 4000;
    let fam = TargetFamily::TupleSet { m: 2, theta: 1.0 };
    let hist = h.monte_carlo("C2", move || {
        let target = fam.resolve(n).unwrap();
        run_trials(&System::Gauss { target: &target, law: MeasureLaw::Lebesgue }, n, TRIALS, 2).unwrap()
    });
    let r = tv_distance(&hist, |k| poisson_pmf(1.0 / LN2, k));
    h.report("C2", r.tv <= 0.03, format!("pairs n={n}: tv={:.5} (<= 0.03), t_hat={:.4}", r.tv, hist.t_hat));
}

fn c3(h: &mut Harness) {
    let n = 10_000;
    let hist = h.monte_carlo("C3", move || {
        let target = TargetFamily::pattern().resolve(n).unwrap();
        run_trials(&System::Gauss { target: &target, law: MeasureLaw::Lebesgue }, n, TRIALS, 3).unwrap()
    });
    let r = tv_distance(&hist, |k| poisson_pmf(1.0 / LN2, k));
    let own = tv_distance(&hist, |k| poisson_pmf(hist.t_hat, k));
    h.report(
        "C3",
        r.tv <= 0.03,
        format!(
            "pattern [10,10] n={n}: tv={:.5} (<= 0.03) against Poisson(1/log 2); t_hat={:.4}, tv against Poisson(t_hat)={:.5}",
            r.tv, hist.t_hat, own.tv
        ),
    );
}

fn c4(h: &mut Harness) {
    let n = 2000u64;
    let threshold = 3;
    let lambda = calibrate_intensity(threshold, 1.0 / n as f64).unwrap();
    let chain = renewal_stationary(&BranchLaw::PoissonIntensity(lambda), 40).unwrap();
    let t_hat = n as f64 * renewal_tail_mass(&chain, threshold);
    let hist = h.monte_carlo("C4", move || {
        run_trials(&System::Renewal { chain: &chain, threshold }, n, TRIALS, 4).unwrap()
    });
    let r = tv_distance(&hist, |k| poisson_pmf(hist.t_hat, k));
    h.report(
        "C4",
        r.tv <= 0.03 && (t_hat - 1.0).abs() <= 0.05,
        format!("renewal n={n}, states >= {threshold}, intensity {lambda:.6}: n*pi(tail)={t_hat:.6}, tv={:.5} (<= 0.03)", r.tv),
    );
}

fn c5_c6_c7(h: &mut Harness) {
    let fam = tail();
    let ns = [200u64, 400, 800];
    let mut dev = Vec::new();
    let mut coarse = Vec::new();
    let mut fine = Vec::new();
    let mut esc = 0.0;
    let mut pred = None;
    for &n in &ns {
        let target = fam.resolve(n).unwrap();
        let a = OperatorSetup::new(&target, 8192).unwrap();
        let b = OperatorSetup::new(&target, 16384).unwrap();
        let ra = a.lemma_ratio(1.0).unwrap();
        let rb = b.lemma_ratio(1.0).unwrap();
        dev.push((ra.ratio - 1.0).abs());
        coarse.push(ra.ratio);
        fine.push(rb.ratio);
        if n == 800 {
            esc = a.escape_ratio().unwrap().ratio;
            pred = Some(a.laplace_predict(1.0).unwrap());
        }
    }
    let monotone = dev.windows(2).all(|w| w[1] <= w[0]);
    let agree = coarse.iter().zip(&fine).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    h.report(
        "C5",
        monotone && dev[2] <= 0.1 && agree <= 0.01,
        format!("lemma ratio s=1 at n=200,400,800: {coarse:.6?}; |ratio-1| non-increasing={monotone}; grid 8192 vs 16384 max diff={agree:.2e}"),
    );
    h.report("C6", (esc - 1.0).abs() <= 0.05, format!("escape ratio n=800: {esc:.6} (|ratio-1| <= 0.05)"));

    let pred = pred.unwrap();
    let n = 800;
    let hist = h.monte_carlo("C7", move || {
        let target = tail().resolve(n).unwrap();
        run_trials(&System::Gauss { target: &target, law: MeasureLaw::Gauss }, n, TRIALS, 7).unwrap()
    });
    let est = empirical_laplace(&hist.dense(), 1.0);
    let z = (pred.lambda_n_pow_n - est.value).abs() / est.std_err;
    h.report(
        "C7",
        pred.rel_diff <= 0.05 && z <= 2.0,
        format!(
            "laplace s=1 n=800: lambda^n={:.6}, limit={:.6}, rel diff={:.2e} (<= 0.05); monte carlo {:.6} +- {:.6} ({z:.2} SE, <= 2)",
            pred.lambda_n_pow_n, pred.limit, pred.rel_diff, est.value, est.std_err
        ),
    );
}

fn c8(h: &mut Harness) {
    let mut lambda2 = Vec::new();
    let mut ok = true;
    let mut worst = (0.0f64, 0.0f64, 0.0f64);
    for n in [4096, 8192, 16384] {
        let grid = UlamGrid::graded(n, &[]).unwrap();
        let w = build_ulam::<f64>(&grid, DEFAULT_BRANCH_TOL).unwrap();
        let r = leading_eigen(&w, 1e-13, 10_000).unwrap();
        let flat = r.eigvec.iter().map(|v| (v - 1.0).abs()).fold(0.0, f64::max);
        worst.0 = worst.0.max((r.lambda - 1.0).abs());
        worst.1 = worst.1.max(flat);
        worst.2 = worst.2.max(w.row_sum_error().max(w.adjoint_error()));
        ok &= (r.lambda - 1.0).abs() <= 1e-8 && flat <= 1e-6 && w.row_sum_error() <= 1e-10 && w.adjoint_error() <= 1e-10;
        lambda2.push(r.lambda2);
    }
    let stable = lambda2.windows(2).all(|p| (p[0] - p[1]).abs() <= 5e-3);
    let pinned = (lambda2[1] - LAMBDA2_8192).abs() <= 1e-8;
    h.report(
        "C8",
        ok && stable && pinned,
        format!(
            "|lambda-1|={:.1e}, eigvec flatness={:.1e}, invariants={:.1e}; lambda2 at 4096/8192/16384 = {lambda2:.6?}, pinned={pinned}",
            worst.0, worst.1, worst.2
        ),
    );
}

fn c9(h: &mut Harness) {
    let n = 2000;
    let s = h.monte_carlo("C9", move || {
        let target = tail().resolve(n).unwrap();
        first_hit_times(&System::Gauss { target: &target, law: MeasureLaw::Gauss }, TRIALS, 9).unwrap()
    });
    let frac = s.censored_fraction();
    h.report(
        "C9",
        s.ks <= 0.02 && frac <= 1e-6,
        format!("hitting times n={n}: ks={:.5} (<= 0.02), censored fraction={frac:.1e}, mean scaled tau={:.4}", s.ks, s.mean_scaled.value),
    );
}

fn c10(h: &mut Harness) {
    let (max_len, max_digit) = (4usize, 20u64);
    let report = short_return_report(max_len, max_digit);
    let mut mismatches = 0u64;
    let mut checked = 0u64;
    for len in 1..=max_len as u32 {
        for code in 0..max_digit.pow(len) {
            let w: Vec<u64> = (0..len).map(|i| code / max_digit.pow(i) % max_digit + 1).collect();
            for k in 1..=w.len() {
                let oracle = common::overlap_interval(&w, k);
                let word = cylinder_self_overlap(&Digits::new(w.clone()).unwrap(), k).unwrap();
                let agree = match (word, oracle) {
                    (None, None) => true,
                    (Some(o), Some((lo, hi))) => {
                        let (a, b) = common::cylinder(o.as_slice());
                        common::same(a, lo) && common::same(b, hi)
                    }
                    _ => false,
                };
                mismatches += !agree as u64;
                checked += 1;
            }
        }
    }
    match report {
        Ok(r) => {
            let (w, k) = &r.worst_witness;
            let pinned = w.as_slice() == SHORT_RETURN_WITNESS.0 && *k == SHORT_RETURN_WITNESS.1;
            // mu(overlap) / mu(word)^(1 + 1/(1 + len)) from the rational oracle
            let gauss = |(lo, hi): (common::Q, common::Q)| {
                (((hi.0 + hi.1) * lo.1) as f64 / ((lo.0 + lo.1) * hi.1) as f64).log2()
            };
            let oracle = common::overlap_interval(w.as_slice(), *k)
                .map_or(0.0, |o| gauss(o) / gauss(common::cylinder(w.as_slice())).powf(1.0 + 1.0 / (1.0 + w.as_slice().len() as f64)));
            let agrees = (oracle - r.constant).abs() <= 1e-12 * r.constant;
            h.report(
                "C10",
                r.constant.is_finite() && mismatches == 0 && pinned && agrees,
                format!(
                    "short returns, length <= {max_len}, digits <= {max_digit}: {} ratios finite, M1={:.6} at ({:?}, k={k}), pinned={pinned}, oracle ratio={oracle:.6}; {checked} overlaps checked, {mismatches} mismatches",
                    r.evaluated,
                    r.constant,
                    w.as_slice()
                ),
            );
        }
        Err(e) => h.report("C10", false, format!("short-return report failed: {e}")),
    }
}

fn c11(h: &mut Harness) {
    let mut neg_min = f64::INFINITY;
    let mut neg_at = 0;
    for n in 10..=1000u64 {
        let r = assumption_b_ratio(&TargetFamily::NegControl, n, 1, OverlapMethod::Exact).unwrap();
        if r < neg_min {
            (neg_min, neg_at) = (r, n);
        }
    }
    let tail_ratio = |n| assumption_b_ratio(&tail(), n, 1, OverlapMethod::Exact).unwrap();
    let below = (10..=1000u64).find(|&n| tail_ratio(n) < 0.005);
    let at_1000 = tail_ratio(1000);
    h.report(
        "C11",
        neg_min >= 0.02 && at_1000 < 0.005,
        format!(
            "assumption (b) ratio at i=1: negative control min {neg_min:.5} at n={neg_at} (>= 0.02); tail set {at_1000:.5} at n=1000 (< 0.005), below 0.005 from n={}",
            below.map_or("never".to_string(), |n| n.to_string())
        ),
    );
}

fn c12(h: &mut Harness) {
    let half = Frac::new(1, 2);
    let grid = UlamGrid::graded(8192, &[half]).unwrap();
    let w = build_ulam::<f64>(&grid, DEFAULT_BRANCH_TOL).unwrap();
    let a: Vec<usize> = grid.cells_between(half, Frac::ONE).unwrap().collect();
    let b: Vec<usize> = grid.cells_between(Frac::ZERO, half).unwrap().collect();
    let gaps: Vec<u64> = (2..=32).collect();
    match mixing_decay(&w, &a, &b, &gaps, 1) {
        Ok(m) => h.report(
            "C12",
            m.theta_fit < 1.0 && m.fit_rms <= 0.05,
            format!(
                "mixing [1] vs (0,1/2), gaps 2..32: theta={:.5}, K={:.5}, rms log residual={:.4} (<= 0.05) over {} gaps above 1e-13",
                m.theta_fit, m.k_fit, m.fit_rms, m.fitted_points
            ),
        ),
        Err(e) => h.report("C12", false, format!("mixing fit failed: {e}")),
    }
}

fn c13(h: &mut Harness) {
    let max = std::thread::available_parallelism().map_or(1, |n| n.get());
    let mut counts = vec![1, 4, max];
    counts.sort_unstable();
    counts.dedup();
    let mut bad = Vec::new();
    // the original runs used the global pool, which has `max` threads
    let reruns: Vec<usize> = counts.iter().copied().filter(|&c| c != rayon::current_num_threads()).collect();
    for &threads in &reruns {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        for (label, original, run) in &h.runs {
            if pool.install(run) != *original {
                bad.push(format!("{label}@{threads}"));
            }
        }
    }
    let labels: Vec<&str> = h.runs.iter().map(|r| r.0.as_str()).collect();
    h.report(
        "C13",
        bad.is_empty(),
        format!("runs {labels:?} identical across thread counts {counts:?}; mismatches: {bad:?}"),
    );
}

fn main() -> ExitCode {
    let start = Instant::now();
    let mut h = Harness { lines: Vec::new(), runs: Vec::new() };
    c1(&mut h);
    c2(&mut h);
    c3(&mut h);
    c4(&mut h);
    c5_c6_c7(&mut h);
    c8(&mut h);
    c9(&mut h);
    c10(&mut h);
    c11(&mut h);
    c12(&mut h);
    c13(&mut h);
    let passed = h.lines.iter().filter(|l| l.1).count();
    let unexpected: Vec<&str> =
        h.lines.iter().filter(|l| !l.1 && !KNOWN_INFEASIBLE.contains(&l.0.as_str())).map(|l| l.0.as_str()).collect();
    println!("{passed}/{} criteria passed in {:.0} s", h.lines.len(), start.elapsed().as_secs_f64());
    for id in KNOWN_INFEASIBLE {
        if h.lines.iter().any(|l| l.0 == *id && !l.1) {
            println!("{id} failure is the documented infeasible case (see README)");
        }
    }
    if unexpected.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("unexpected failures: {unexpected:?}");
        ExitCode::FAILURE
    }
}
