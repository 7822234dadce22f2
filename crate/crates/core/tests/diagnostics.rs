mod common;

use cfpoisson::diagnostics::{branch_derivative, cylinder_self_overlap, renyi_report, short_return_ratio, short_return_report};
use cfpoisson::{cylinder_interval, interval_measure, Digits, MeasureLaw, RationalInterval};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn digits(v: &[u64]) -> Digits {
    Digits::new(v.to_vec()).unwrap()
}

fn rat(p: i64, q: i64) -> BigRational {
    BigRational::new(BigInt::from(p), BigInt::from(q))
}

#[test]
fn derivative_examples() {
    let one = digits(&[1]);
    // v_1(x) = 1/(1+x)
    assert_eq!(branch_derivative(&one, &rat(0, 1), MeasureLaw::Lebesgue).unwrap(), 1.0);
    assert_eq!(branch_derivative(&one, &rat(1, 1), MeasureLaw::Lebesgue).unwrap(), 0.25);
    assert_eq!(branch_derivative(&one, &rat(0, 1), MeasureLaw::Gauss).unwrap(), 0.5);
    assert!((branch_derivative(&one, &rat(1, 1), MeasureLaw::Gauss).unwrap() - 1.0 / 3.0).abs() < 1e-16);
    assert_eq!(branch_derivative(&digits(&[2]), &rat(0, 1), MeasureLaw::Lebesgue).unwrap(), 0.25);
    assert!(branch_derivative(&Digits::empty(), &rat(1, 2), MeasureLaw::Gauss).is_err());
}

#[test]
fn derivatives_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..100 {
        let len = rng.gen_range(1..=4);
        let w: Vec<u64> = (0..len).map(|_| rng.gen_range(1..=9)).collect();
        let xi = rng.gen_range(1..1000i64);
        let x = rat(xi, 1000);
        let xf = xi as f64 / 1000.0;
        let (pp, qp, p, q) = common::mobius(&w);
        let v = |y: &BigRational| {
            let big = |c: u128| BigRational::from_integer(BigInt::from(c));
            (big(pp) * y + big(p)) / (big(qp) * y + big(q))
        };
        // exact secants over (x - h, x + h)
        let h = rat(1, 1_000_000_000);
        let (xl, xh) = (&x - &h, &x + &h);
        let span = |a: BigRational, b: BigRational| {
            let iv = if a < b { RationalInterval::new(a, b) } else { RationalInterval::new(b, a) }.unwrap();
            (interval_measure::<f64>(&iv, MeasureLaw::Lebesgue), interval_measure::<f64>(&iv, MeasureLaw::Gauss))
        };
        let (il, ig) = span(v(&xl), v(&xh));
        let (dl, dg) = span(xl, xh);
        let (leb, gauss) = (il / dl, ig / dg);
        let vx = v(&x).to_f64().unwrap();
        let d = digits(&w);
        let got_l = branch_derivative(&d, &x, MeasureLaw::Lebesgue).unwrap();
        let got_g = branch_derivative(&d, &x, MeasureLaw::Gauss).unwrap();
        assert!((got_l / leb - 1.0).abs() < 1e-6, "{w:?} at {xf}");
        assert!((got_g / gauss - 1.0).abs() < 1e-6, "{w:?} at {xf}");
        assert!((got_g / got_l - (1.0 + xf) / (1.0 + vx)).abs() < 1e-12);
    }
}

#[test]
fn self_overlap_examples() {
    assert_eq!(cylinder_self_overlap(&digits(&[1, 1]), 1).unwrap(), Some(digits(&[1, 1, 1])));
    assert_eq!(cylinder_self_overlap(&digits(&[1, 2]), 1).unwrap(), None);
    assert_eq!(cylinder_self_overlap(&digits(&[1, 2]), 2).unwrap(), Some(digits(&[1, 2, 1, 2])));
    assert_eq!(cylinder_self_overlap(&digits(&[1, 2, 1]), 2).unwrap(), Some(digits(&[1, 2, 1, 2, 1])));
    assert_eq!(cylinder_self_overlap(&digits(&[1, 1, 1]), 1).unwrap(), Some(digits(&[1, 1, 1, 1])));
    assert_eq!(cylinder_self_overlap(&digits(&[1, 2, 1, 2]), 2).unwrap(), Some(digits(&[1, 2, 1, 2, 1, 2])));
    assert!(cylinder_self_overlap(&digits(&[1, 2]), 0).is_err());
    assert!(cylinder_self_overlap(&digits(&[1, 2]), 3).is_err());
}

#[test]
fn overlap_words_match_interval_intersection() {
    let mut checked = 0;
    for len in 1..=4u32 {
        for code in 0..8u64.pow(len) {
            let w: Vec<u64> = (0..len).map(|i| code / 8u64.pow(i) % 8 + 1).collect();
            for k in 1..=w.len() {
                let oracle = common::overlap_interval(&w, k);
                match cylinder_self_overlap(&digits(&w), k).unwrap() {
                    None => assert!(oracle.is_none(), "{w:?} k = {k}"),
                    Some(o) => {
                        let (lo, hi) = oracle.unwrap_or_else(|| panic!("{w:?} k = {k}"));
                        let iv = cylinder_interval(&o).unwrap();
                        let (a, b) = common::cylinder(o.as_slice());
                        assert!(common::same(a, lo) && common::same(b, hi), "{w:?} k = {k}");
                        assert_eq!(iv.lo().to_f64().unwrap(), lo.0 as f64 / lo.1 as f64);
                    }
                }
                checked += 1;
            }
        }
    }
    assert!(checked > 1000);
}

#[test]
fn short_return_examples() {
    // [1,1] = (1/2, 2/3) and [1,1,1] = (3/5, 2/3)
    let expected = (25.0f64 / 24.0).log2() / (10.0f64 / 9.0).log2().powf(4.0 / 3.0);
    assert!((short_return_ratio(&digits(&[1, 1]), 1).unwrap() - expected).abs() < 1e-13);
    assert!((expected - 0.73).abs() < 0.01);
    assert_eq!(short_return_ratio(&digits(&[1, 2]), 1).unwrap(), 0.0);
    assert_eq!(short_return_ratio(&digits(&[3, 1, 2]), 2).unwrap(), 0.0);
    assert!(short_return_ratio(&digits(&[3]), 2).is_err());
}

#[test]
fn short_return_constant_grows_with_the_family() {
    let mut prev = 0.0;
    for len in 2..=4 {
        let r = short_return_report(len, 6).unwrap();
        assert!(r.constant.is_finite() && r.constant >= prev);
        let (w, k) = &r.worst_witness;
        assert!((short_return_ratio(w, *k).unwrap() - r.worst_ratio).abs() < 1e-15);
        let words: u64 = (1..=len as u32).map(|l| 6u64.pow(l) * l as u64).sum();
        assert_eq!(r.evaluated, words);
        prev = r.constant;
    }
    assert!(short_return_report(1, 6).is_err());
    assert!(short_return_report(3, 0).is_err());
}

#[test]
fn distortion_constant_is_finite_and_stable() {
    let a = renyi_report(3, 12, 17).unwrap();
    let b = renyi_report(3, 12, 33).unwrap();
    assert!(a.constant.is_finite() && a.constant >= 1.0);
    assert!((b.constant / a.constant - 1.0).abs() < 0.05);
    assert!(b.min_ratio.unwrap() <= 1.0 && b.worst_ratio >= 1.0);
    let c = renyi_report(1, 12, 17).unwrap();
    assert!(c.constant <= 4.0);
    assert_eq!(c.evaluated, 12 * 17);
    assert!(renyi_report(2, 5, 1).is_err());
}

#[test]
fn single_branch_spread_is_at_most_four() {
    for a in 1..=20u64 {
        let w = digits(&[a]);
        let vals: Vec<f64> =
            (0..=64).map(|i| branch_derivative(&w, &rat(i, 64), MeasureLaw::Gauss).unwrap()).collect();
        let hi = vals.iter().cloned().fold(f64::MIN, f64::max);
        let lo = vals.iter().cloned().fold(f64::MAX, f64::min);
        // the Lebesgue factor alone spans ((a+1)/a)^2 between x = 0 and x = 1
        let endpoints = branch_derivative(&w, &rat(0, 1), MeasureLaw::Lebesgue).unwrap()
            / branch_derivative(&w, &rat(1, 1), MeasureLaw::Lebesgue).unwrap();
        assert!((endpoints - ((a + 1) as f64 / a as f64).powi(2)).abs() < 1e-12);
        assert!(hi / lo <= 4.0, "a = {a}: {}", hi / lo);
        // the mean-value identity puts mu(a) inside the range of v'_a
        let mass = cfpoisson::cylinder_measure(&[a], MeasureLaw::Gauss);
        assert!(lo <= mass && mass <= hi);
    }
}
