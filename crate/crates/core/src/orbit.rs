//! Dyadic sampling of initial points and certified orbit digits.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::One;
use rand::RngCore;

use crate::cf::{MeasureLaw, RationalInterval};
use crate::error::{Error, Result};
use crate::lehmer::{extract, Endpoints};

/// Doublings of the bit budget before a point is given up on.
pub const RETRY_CAP: u32 = 8;

/// Initial bit budget for `needed` certified digits.
pub fn initial_bits(needed: usize) -> u64 {
    4 * needed as u64 + 64
}

/// A point of (0,1) known through a growing prefix of its binary expansion.
///
/// Bits are stored most significant first in 64-bit words; more words are
/// drawn from the same stream when a finer enclosure is needed, so extending
/// a point never changes it.
#[derive(Clone, Debug, Default)]
pub struct DyadicPoint {
    words: Vec<u64>,
}

impl DyadicPoint {
    pub fn from_words(words: Vec<u64>) -> Self {
        DyadicPoint { words }
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    /// Makes at least `bits` bits available, drawing from `rng`.
    pub fn ensure_bits<R: RngCore + ?Sized>(&mut self, bits: u64, rng: &mut R) {
        let need = bits.div_ceil(64) as usize;
        while self.words.len() < need {
            self.words.push(rng.next_u64());
        }
    }

    /// `floor(x 2^bits)` as little-endian limbs. Needs the bits to be available.
    fn prefix_limbs(&self, bits: u64) -> Vec<u64> {
        let nw = bits.div_ceil(64) as usize;
        assert!(self.words.len() >= nw, "dyadic point has too few bits");
        let mut limbs: Vec<u64> = self.words[..nw].iter().rev().copied().collect();
        let extra = (64 * nw as u64 - bits) as u32;
        if extra > 0 {
            let mut carry = 0u64;
            for w in limbs.iter_mut().rev() {
                let next = *w << (64 - extra);
                *w = (*w >> extra) | carry;
                carry = next;
            }
        }
        limbs
    }

    /// Width-`2^-bits` enclosure `(X/2^bits, (X+1)/2^bits)`.
    pub fn interval(&self, bits: u64) -> RationalInterval {
        let x = biguint_from_limbs(&self.prefix_limbs(bits));
        let den = BigInt::one() << bits;
        let lo = BigRational::new(BigInt::from(x.clone()), den.clone());
        let hi = BigRational::new(BigInt::from(x + 1u32), den);
        RationalInterval::new(lo, hi).expect("dyadic enclosure is a valid interval")
    }

    fn endpoints(&self, bits: u64) -> Endpoints {
        let lo_n = self.prefix_limbs(bits);
        let mut hi_n = lo_n.clone();
        let mut carry = true;
        for w in hi_n.iter_mut() {
            let (v, c) = w.overflowing_add(carry as u64);
            *w = v;
            carry = c;
            if !carry {
                break;
            }
        }
        if carry {
            hi_n.push(1);
        }
        let mut den = vec![0u64; (bits / 64) as usize];
        den.push(1u64 << (bits % 64));
        Endpoints { lo_n, lo_d: den.clone(), hi_n, hi_d: den }
    }

    /// Digits certified by the `bits`-bit enclosure, at most `max_count`.
    pub fn digits_at(&self, bits: u64, max_count: usize) -> Vec<u64> {
        let mut ends = self.endpoints(bits);
        let mut out = Vec::with_capacity(max_count);
        extract(&mut ends, max_count, &mut out);
        out
    }

    /// At least `needed` certified digits, doubling the bit budget on shortfall.
    pub fn certified_digits<R: RngCore + ?Sized>(&mut self, needed: usize, rng: &mut R) -> Result<Vec<u64>> {
        let mut bits = initial_bits(needed).max(64 * self.words.len() as u64);
        let mut got = 0;
        for _ in 0..=RETRY_CAP {
            self.ensure_bits(bits, rng);
            let d = self.digits_at(bits, needed);
            if d.len() >= needed {
                return Ok(d);
            }
            got = d.len();
            bits *= 2;
        }
        Err(Error::PrecisionShortfall { needed, got })
    }
}

fn biguint_from_limbs(limbs: &[u64]) -> BigUint {
    let mut words = Vec::with_capacity(2 * limbs.len());
    for &w in limbs {
        words.push(w as u32);
        words.push((w >> 32) as u32);
    }
    BigUint::new(words)
}

/// Source of proposal bits and acceptance bits.
trait Words {
    fn x(&mut self) -> u64;
    fn u(&mut self) -> u64;
}

struct Single<'a, R: RngCore + ?Sized>(&'a mut R);

impl<R: RngCore + ?Sized> Words for Single<'_, R> {
    fn x(&mut self) -> u64 {
        self.0.next_u64()
    }
    fn u(&mut self) -> u64 {
        self.0.next_u64()
    }
}

struct Split<'a, R: RngCore + ?Sized, Q: RngCore + ?Sized>(&'a mut R, &'a mut Q);

impl<R: RngCore + ?Sized, Q: RngCore + ?Sized> Words for Split<'_, R, Q> {
    fn x(&mut self) -> u64 {
        self.0.next_u64()
    }
    fn u(&mut self) -> u64 {
        self.1.next_u64()
    }
}

fn big_from_words_msf(words: &[u64]) -> BigUint {
    let limbs: Vec<u64> = words.iter().rev().copied().collect();
    biguint_from_limbs(&limbs)
}

/// Draws a point from `law`; for the Gauss law the proposal `x` is accepted
/// when `U (1 + x) < 1`, decided exactly from bit prefixes of `x` and `U`.
fn draw_point<W: Words>(src: &mut W, law: MeasureLaw) -> DyadicPoint {
    match law {
        MeasureLaw::Lebesgue => DyadicPoint { words: vec![src.x()] },
        MeasureLaw::Gauss => loop {
            let mut xs = vec![src.x()];
            let mut us = vec![src.u()];
            loop {
                let bits = 64 * xs.len() as u64;
                let n = BigUint::one() << bits;
                let n2 = &n * &n;
                let x = big_from_words_msf(&xs);
                let v = big_from_words_msf(&us);
                if (&v + 1u32) * (&n + &x + 1u32) <= n2 {
                    return DyadicPoint { words: xs };
                }
                if &v * (&n + &x) >= n2 {
                    break;
                }
                xs.push(src.x());
                us.push(src.u());
            }
        },
    }
}

/// Point drawn with separate streams for the proposal and acceptance bits.
pub fn sample_point<R: RngCore + ?Sized, Q: RngCore + ?Sized>(x_rng: &mut R, u_rng: &mut Q, law: MeasureLaw) -> DyadicPoint {
    draw_point(&mut Split(x_rng, u_rng), law)
}

/// Width-`2^-bits` dyadic interval around a point drawn from `law`.
pub fn sample_dyadic<R: RngCore + ?Sized>(rng: &mut R, bits: u64, law: MeasureLaw) -> Result<RationalInterval> {
    if bits == 0 {
        return Err(Error::domain("bits must be at least 1"));
    }
    let mut p = draw_point(&mut Single(&mut *rng), law);
    p.ensure_bits(bits, rng);
    Ok(p.interval(bits))
}
