//! Arithmetic in Z/pZ for a word-sized odd prime, and a seeded element stream.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// The field used throughout the experiments: 2^17 - 1.
pub const DEFAULT_PRIME: u32 = 131_071;

/// A canonical residue `0 <= value < p`.
///
/// Elements do not carry their modulus; every operation goes through the
/// [`PrimeField`] that produced them.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[repr(transparent)]
pub struct FieldElement(pub(crate) u32);

impl FieldElement {
    pub const ZERO: FieldElement = FieldElement(0);
    pub const ONE: FieldElement = FieldElement(1);

    #[inline]
    pub fn value(self) -> u32 {
        self.0
    }

    #[inline]
    pub fn is_zero(self) -> bool {
        self.0 == 0
    }
}

impl std::fmt::Display for FieldElement {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.0.fmt(f)
    }
}

/// The prime field Z/pZ, `2 < p < 2^31`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PrimeField {
    p: u32,
    /// How many products of two reduced residues fit in a `u64` on top of a
    /// reduced value.
    acc_budget: u32,
}

impl Default for PrimeField {
    fn default() -> Self {
        PrimeField::new(DEFAULT_PRIME).expect("default prime is prime")
    }
}

fn is_prime_u32(n: u32) -> bool {
    if n < 2 {
        return false;
    }
    for small in [2u32, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n % small == 0 {
            return n == small;
        }
    }
    // Deterministic Miller-Rabin for 32-bit inputs.
    let n64 = n as u64;
    let mut d = n64 - 1;
    let mut r = 0;
    while d % 2 == 0 {
        d /= 2;
        r += 1;
    }
    let pow = |mut b: u64, mut e: u64| {
        let mut acc = 1u64;
        b %= n64;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * b % n64;
            }
            b = b * b % n64;
            e >>= 1;
        }
        acc
    };
    'witness: for a in [2u64, 7, 61] {
        if a % n64 == 0 {
            continue;
        }
        let mut x = pow(a, d);
        if x == 1 || x == n64 - 1 {
            continue;
        }
        for _ in 1..r {
            x = x * x % n64;
            if x == n64 - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

impl PrimeField {
    pub fn new(p: u32) -> Result<Self> {
        if p <= 2 || p >= (1 << 31) || !is_prime_u32(p) {
            return Err(Error::Param(format!("{p} is not an odd prime below 2^31")));
        }
        let sq = (p as u64 - 1) * (p as u64 - 1);
        let acc_budget = ((u64::MAX - p as u64) / sq).min(u32::MAX as u64) as u32;
        Ok(PrimeField { p, acc_budget })
    }

    #[inline]
    pub fn modulus(&self) -> u32 {
        self.p
    }

    /// Number of unreduced products that can be summed into a reduced `u64`.
    #[inline]
    pub(crate) fn acc_budget(&self) -> u32 {
        self.acc_budget
    }

    /// Reduce an arbitrary integer.
    #[inline]
    pub fn elem(&self, v: u64) -> FieldElement {
        FieldElement((v % self.p as u64) as u32)
    }

    /// Reduce a signed integer.
    pub fn elem_i64(&self, v: i64) -> FieldElement {
        FieldElement(v.rem_euclid(self.p as i64) as u32)
    }

    /// Accept a residue that must already be canonical.
    pub fn checked(&self, v: u64) -> Result<FieldElement> {
        if v < self.p as u64 {
            Ok(FieldElement(v as u32))
        } else {
            Err(Error::Parse(format!("residue {v} not below modulus {}", self.p)))
        }
    }

    #[inline]
    pub fn add(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        let s = a.0 + b.0;
        FieldElement(if s >= self.p { s - self.p } else { s })
    }

    #[inline]
    pub fn sub(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        FieldElement(if a.0 >= b.0 { a.0 - b.0 } else { a.0 + self.p - b.0 })
    }

    #[inline]
    pub fn neg(&self, a: FieldElement) -> FieldElement {
        FieldElement(if a.0 == 0 { 0 } else { self.p - a.0 })
    }

    #[inline]
    pub fn mul(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        FieldElement(((a.0 as u64 * b.0 as u64) % self.p as u64) as u32)
    }

    /// `acc - a*b`
    #[inline]
    pub fn mul_sub(&self, acc: FieldElement, a: FieldElement, b: FieldElement) -> FieldElement {
        self.sub(acc, self.mul(a, b))
    }

    /// Inverse by the extended Euclidean algorithm.
    pub fn inv(&self, a: FieldElement) -> Result<FieldElement> {
        if a.0 == 0 {
            return Err(Error::DivisionByZero);
        }
        let (mut r0, mut r1) = (self.p as i64, a.0 as i64);
        let (mut t0, mut t1) = (0i64, 1i64);
        while r1 != 0 {
            let q = r0 / r1;
            (r0, r1) = (r1, r0 - q * r1);
            (t0, t1) = (t1, t0 - q * t1);
        }
        debug_assert_eq!(r0, 1);
        Ok(self.elem_i64(t0))
    }

    pub fn div(&self, a: FieldElement, b: FieldElement) -> Result<FieldElement> {
        Ok(self.mul(a, self.inv(b)?))
    }
}

/// Deterministic, platform-independent stream of field elements.
///
/// Single-owner; parallel callers should derive their own stream with
/// [`SeededRng::split`].
#[derive(Clone, Debug)]
pub struct SeededRng {
    seed: u64,
    inner: ChaCha8Rng,
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        SeededRng { seed, inner: ChaCha8Rng::seed_from_u64(seed) }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// An independent stream keyed by `seed XOR stream_id`.
    pub fn split(&self, stream_id: u64) -> SeededRng {
        SeededRng::new(self.seed ^ stream_id.wrapping_mul(0x9E37_79B9_7F4A_7C15))
    }

    /// One element uniform over the whole field.
    pub fn element(&mut self, field: &PrimeField) -> FieldElement {
        FieldElement(self.inner.gen_range(0..field.modulus()))
    }

    /// One element uniform over the nonzero residues.
    pub fn nonzero(&mut self, field: &PrimeField) -> FieldElement {
        FieldElement(self.inner.gen_range(1..field.modulus()))
    }

    pub fn uniform(&mut self, field: &PrimeField, n: usize) -> Vec<FieldElement> {
        (0..n).map(|_| self.element(field)).collect()
    }

    /// Uniform index in `0..bound`.
    pub fn index(&mut self, bound: usize) -> usize {
        self.inner.gen_range(0..bound)
    }

    pub fn unit_f64(&mut self) -> f64 {
        self.inner.gen::<f64>()
    }

    /// `k` distinct indices from `0..n`, sorted.
    pub fn subset(&mut self, n: usize, k: usize) -> Vec<usize> {
        let mut picked = rand::seq::index::sample(&mut self.inner, n, k.min(n)).into_vec();
        picked.sort_unstable();
        picked
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f() -> PrimeField {
        PrimeField::default()
    }

    #[test]
    fn small_examples() {
        let k = f();
        assert_eq!(k.add(FieldElement(3), FieldElement(2)), FieldElement(5));
        assert_eq!(k.inv(FieldElement(2)).unwrap(), FieldElement(65536));
        assert_eq!(k.mul(FieldElement(65535), FieldElement(2)), FieldElement(131070));
        assert_eq!(k.neg(FieldElement(1)), FieldElement(131070));
        assert_eq!(k.sub(FieldElement(0), FieldElement(1)), FieldElement(131070));
    }

    #[test]
    fn inverse_of_zero() {
        assert!(matches!(f().inv(FieldElement::ZERO), Err(Error::DivisionByZero)));
    }

    #[test]
    fn rejects_non_primes() {
        for bad in [0u32, 1, 2, 4, 9, 131_073, 561, 2_147_483_648u32 - 1 + 1] {
            assert!(PrimeField::new(bad).is_err(), "{bad}");
        }
        for good in [3u32, 5, 65_537, 131_071, 2_147_483_647] {
            assert!(PrimeField::new(good).is_ok(), "{good}");
        }
    }

    #[test]
    fn primality_matches_trial_division() {
        let trial = |n: u32| n >= 2 && (2..).take_while(|d| d * d <= n).all(|d| n % d != 0);
        for n in 0..20_000u32 {
            assert_eq!(is_prime_u32(n), trial(n), "{n}");
        }
    }

    #[test]
    fn rng_determinism() {
        let k = f();
        let a = SeededRng::new(42).uniform(&k, 100);
        let b = SeededRng::new(42).uniform(&k, 100);
        assert_eq!(a, b);
        assert!(SeededRng::new(42).uniform(&k, 0).is_empty());
        assert_ne!(a, SeededRng::new(43).uniform(&k, 100));
    }

    #[test]
    fn rng_chi_squared_uniformity() {
        // 10^6 draws into 128 equal-width buckets of residues.
        let k = f();
        let mut rng = SeededRng::new(7);
        let buckets = 128usize;
        let width = (k.modulus() as usize).div_ceil(buckets);
        let mut counts = vec![0u64; buckets];
        let draws = 1_000_000;
        for _ in 0..draws {
            counts[rng.element(&k).value() as usize / width] += 1;
        }
        let p = k.modulus() as f64;
        let chi2: f64 = counts
            .iter()
            .enumerate()
            .map(|(b, &c)| {
                let lo = (b * width) as f64;
                let hi = (((b + 1) * width) as f64).min(p);
                let expected = draws as f64 * (hi - lo) / p;
                (c as f64 - expected).powi(2) / expected
            })
            .sum();
        // chi^2 critical value for 127 dof at alpha = 0.001.
        assert!(chi2 < 181.99, "chi2 = {chi2}");
    }

    #[test]
    fn wide_prime_budget_is_small() {
        let k = PrimeField::new(2_147_483_647).unwrap();
        assert!(k.acc_budget() >= 1);
        assert!(k.acc_budget() < 8);
        assert!(f().acc_budget() > 1 << 20);
    }
}
