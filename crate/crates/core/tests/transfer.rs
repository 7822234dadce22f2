use cfpoisson::transfer::{
    build_ulam, escape_ratio, leading_eigen, lemma_ratio, mixing_decay, operator_overlap, perturb, poisson_laplace_predict,
    Frac, OperatorSetup, Perturbation, UlamGrid,
};
use cfpoisson::{
    interval_measure, overlap_measure, target_measure, MeasureLaw, OverlapMethod, RationalInterval, TargetFamily,
};
use num_bigint::BigInt;
use num_rational::BigRational;

const TOL: f64 = 1e-13;

fn uniform(n: u64) -> UlamGrid {
    UlamGrid::from_boundaries((0..=n).map(|i| Frac::new(i, n)).collect()).unwrap()
}

fn rat(p: u64, q: u64) -> BigRational {
    BigRational::new(BigInt::from(p), BigInt::from(q))
}

#[test]
fn entries_match_branch_by_branch_intersections() {
    let n = 8u64;
    let grid = uniform(n);
    let w = build_ulam::<f64>(&grid, 1e-14).unwrap();
    for i in 1..n as usize {
        let src = RationalInterval::new(rat(i as u64, n), rat(i as u64 + 1, n)).unwrap();
        // 1/x ranges over (n/(i+1), n/i), so only these branches meet the cell
        let d_lo = n / (i as u64 + 1);
        let d_hi = n.div_ceil(i as u64);
        for j in 0..n as usize {
            let mut joint = 0.0;
            for d in d_lo.max(1)..=d_hi {
                // v_d maps (j/n, (j+1)/n) onto (n/(dn+j+1), n/(dn+j))
                let img = RationalInterval::new(rat(n, d * n + j as u64 + 1), rat(n, d * n + j as u64)).unwrap();
                if let Some(x) = img.intersect(&src) {
                    joint += interval_measure::<f64>(&x, MeasureLaw::Gauss);
                }
            }
            let expected = joint / grid.masses()[j];
            let got = w.row(j).find(|&(c, _)| c == i).map_or(0.0, |e| e.1);
            assert!((got - expected).abs() < 1e-13, "W[{j}][{i}] = {got} vs {expected}");
        }
    }
}

#[test]
fn invariants_hold_on_graded_grids() {
    for n in [1024, 4096, 16384] {
        let grid = UlamGrid::graded(n, &[]).unwrap();
        assert_eq!(grid.len(), n);
        assert!((grid.masses().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let w = build_ulam::<f64>(&grid, 1e-14).unwrap();
        assert!(w.row_sum_error() <= 1e-10 && w.adjoint_error() <= 1e-10);
        for (s, _) in w.row_sums().iter().zip(0..) {
            assert!((s - 1.0).abs() <= 1e-10);
        }
        for (c, m) in w.column_masses().iter().zip(grid.masses()) {
            assert!(((c - m) / m).abs() <= 1e-10);
        }
        assert!(w.explicit_branches() > 0);
    }
}

#[test]
fn graded_grid_places_designated_points() {
    let pts = [Frac::new(1, 101), Frac::new(2, 5), Frac::new(3, 7)];
    let grid = UlamGrid::graded(64, &pts).unwrap();
    for p in pts {
        assert!(grid.boundaries().binary_search(&p).is_ok());
    }
    assert!(grid.len() >= 64);
    assert!(UlamGrid::graded(1, &[]).is_err());
    assert!(UlamGrid::from_boundaries(vec![Frac::ZERO, Frac::new(1, 2)]).is_err());
    assert!(UlamGrid::from_boundaries(vec![Frac::ZERO, Frac::new(1, 2), Frac::new(1, 2), Frac::ONE]).is_err());
}

#[test]
fn unperturbed_operator_has_constant_eigenvector() {
    let mut second = Vec::new();
    for n in [4096, 8192] {
        let grid = UlamGrid::graded(n, &[]).unwrap();
        let w = build_ulam::<f64>(&grid, 1e-14).unwrap();
        let r = leading_eigen(&w, TOL, 10_000).unwrap();
        assert!((r.lambda - 1.0).abs() < 1e-12);
        assert!(r.eigvec.iter().all(|v| (v - 1.0).abs() < 1e-10));
        assert!((r.gap - r.lambda2.abs()).abs() < 1e-12);
        second.push(r.lambda2);
    }
    assert!((second[0] - second[1]).abs() < 5e-3, "{second:?}");
    // Gauss-Kuzmin-Wirsing constant
    assert!((second[1] + 0.3036630029).abs() < 5e-3, "{second:?}");
}

#[test]
fn single_precision_operator_agrees() {
    let grid = UlamGrid::graded(512, &[]).unwrap();
    let w64 = build_ulam::<f64>(&grid, 1e-14).unwrap();
    let w32 = build_ulam::<f32>(&grid, 1e-14).unwrap();
    let cells: Vec<usize> = (0..40).collect();
    let a = leading_eigen(&perturb(&w64, &cells, Perturbation::Exponential(0.5)).unwrap(), 1e-13, 10_000).unwrap();
    let b = leading_eigen(&perturb(&w32, &cells, Perturbation::Exponential(0.5)).unwrap(), 1e-6, 10_000).unwrap();
    assert!((a.lambda - b.lambda as f64).abs() < 1e-5);
}

#[test]
fn perturbation_edge_cases() {
    let target = TargetFamily::TailSet { theta: 1.0 }.resolve(20).unwrap();
    let setup = OperatorSetup::new(&target, 1024).unwrap();
    let w = &setup.weights;
    let x: Vec<f64> = (0..w.len()).map(|i| ((i * 37) % 101) as f64 / 101.0).collect();
    let same = perturb(w, &setup.cells, Perturbation::Exponential(0.0)).unwrap();
    assert_eq!(same.mul(&x), w.mul(&x));
    assert!(perturb(w, &setup.cells, Perturbation::Exponential(-1.0)).is_err());
    assert!(perturb(w, &[w.len()], Perturbation::Survival).is_err());

    let surv = perturb(w, &setup.cells, Perturbation::Survival).unwrap();
    assert!(surv.row_sums().iter().all(|&s| s <= 1.0 + 1e-12));
    let big = perturb(w, &setup.cells, Perturbation::Exponential(40.0)).unwrap();
    let (a, b) = (surv.mul(&x), big.mul(&x));
    assert!(a.iter().zip(&b).all(|(p, q)| (p - q).abs() < 1e-15));

    let mut prev = 1.0;
    for s in [0.01, 0.1, 0.5, 1.0, 3.0, 10.0] {
        let r = setup.perturbed_eigen(Perturbation::Exponential(s)).unwrap();
        assert!(r.lambda < prev);
        assert!(r.eigvec.iter().all(|&v| v > 0.0));
        prev = r.lambda;
    }
    let lt = setup.perturbed_eigen(Perturbation::Survival).unwrap();
    assert!(lt.lambda <= prev);
    assert!(lt.eigvec.iter().all(|&v| v >= 0.0));
}

#[test]
fn lemma_ratio_is_stable_in_s_and_consistent() {
    let fam = TargetFamily::TailSet { theta: 1.0 };
    let a = lemma_ratio(&fam, 200, 1e-3, 2048).unwrap();
    let b = lemma_ratio(&fam, 200, 1e-2, 2048).unwrap();
    assert!((a.ratio - b.ratio).abs() < 0.05, "{} vs {}", a.ratio, b.ratio);
    assert!((a.ratio - 1.0).abs() < 0.01, "{a:?}");
    // for the discrete operator the eigenvector average over A equals the ratio
    assert!((a.eigvec_average - a.ratio).abs() < 1e-6 * a.ratio.max(1.0), "{a:?}");
    assert_eq!(a.mu_an, target_measure(&fam, 200).unwrap());
    assert!(lemma_ratio(&fam, 200, 0.0, 1024).is_err());
    let e = escape_ratio(&fam, 200, 2048).unwrap();
    assert!((e.ratio - 1.0).abs() < 0.05, "{e:?}");
    assert!(lemma_ratio(&TargetFamily::TupleSet { m: 2, theta: 1.0 }, 100, 0.1, 512).is_err());
}

#[test]
fn laplace_prediction_at_zero_is_one() {
    let fam = TargetFamily::TailSet { theta: 1.0 };
    let p = poisson_laplace_predict(&fam, 100, 0.0, 1024).unwrap();
    assert_eq!(p.lambda_n_pow_n, 1.0);
    assert_eq!(p.limit, 1.0);
    assert_eq!(p.rel_diff, 0.0);
    let q = poisson_laplace_predict(&fam, 100, 1.0, 1024).unwrap();
    assert!((q.limit - (-(1.0 - (-1.0f64).exp()) / std::f64::consts::LN_2).exp()).abs() < 1e-15);
    assert!(q.lambda_n_pow_n > 0.0 && q.lambda_n_pow_n < 1.0);
    assert!(poisson_laplace_predict(&TargetFamily::NegControl, 100, 1.0, 1024).is_err());
}

#[test]
fn operator_overlaps() {
    let target = TargetFamily::NegControl.resolve(30).unwrap();
    let setup = OperatorSetup::new(&target, 4096).unwrap();
    let mu = target.measure();
    assert!((operator_overlap(&setup.weights, &setup.cells, 0) - mu).abs() < 1e-14);
    assert!((setup.cell_mass() - mu).abs() < 1e-14);

    for fam in [TargetFamily::NegControl, TargetFamily::pattern(), TargetFamily::TailSet { theta: 1.0 }] {
        let exact = overlap_measure(&fam, 30, 1, OverlapMethod::Exact).unwrap().value;
        let op = overlap_measure(&fam, 30, 1, OverlapMethod::Operator { grid_size: 4096 }).unwrap().value;
        assert!((op / exact - 1.0).abs() < 1e-9, "{fam}: {op} vs {exact}");
    }
    let exact = overlap_measure(&TargetFamily::NegControl, 30, 2, OverlapMethod::Exact).unwrap().value;
    let op = overlap_measure(&TargetFamily::NegControl, 30, 2, OverlapMethod::Operator { grid_size: 16384 }).unwrap().value;
    assert!((op / exact - 1.0).abs() < 1e-3, "{op} vs {exact}");

    // far apart, the two events decorrelate
    let far = operator_overlap(&setup.weights, &setup.cells, 30);
    assert!((far / (mu * mu) - 1.0).abs() < 0.01);
}

#[test]
fn correlations_decay_geometrically() {
    let grid = uniform(1024);
    let w = build_ulam::<f64>(&grid, 1e-14).unwrap();
    let a: Vec<usize> = (0..512).collect();
    let b: Vec<usize> = (300..700).collect();
    let gaps: Vec<u64> = (0..12).collect();
    let m = mixing_decay(&w, &a, &b, &gaps, 1).unwrap();
    assert!(m.theta_fit < 1.0 && m.theta_fit > 0.0);
    for p in m.psi.windows(2) {
        assert!(p[1].1 <= p[0].1 * (1.0 + 1e-9), "{:?}", p);
    }
    assert!(mixing_decay(&w, &[], &b, &gaps, 1).is_err());
}
