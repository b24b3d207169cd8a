//! Exact rational arithmetic helpers and verified enclosures of the
//! transcendental constants the abstraction needs (`e`, `ln q`, `q^r`).
//!
//! Every enclosure is a pair of rationals `lo <= x <= hi` whose width is
//! driven below a caller-chosen bound. Logarithms come from the artanh
//! series with an explicit tail estimate, `e` from its factorial series,
//! and rational powers from bisection with the exact predicate
//! `x^b <= q^a`. No floating point is involved anywhere.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use std::cmp::Ordering;

pub fn rat_i64(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

pub fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// Floor of a rational as a BigInt.
pub fn rat_floor(x: &BigRational) -> BigInt {
    x.floor().to_integer()
}

/// Parses "p", "p/q" or a plain decimal like "1.6" into an exact rational.
pub fn parse_rat(s: &str) -> Option<BigRational> {
    let s = s.trim();
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = p.trim().parse().ok()?;
        let q: BigInt = q.trim().parse().ok()?;
        if q.is_zero() {
            return None;
        }
        return Some(BigRational::new(p, q));
    }
    if let Some((int, frac)) = s.split_once('.') {
        let neg = int.trim_start().starts_with('-');
        let int: BigInt = if int.is_empty() || int == "-" {
            BigInt::zero()
        } else {
            int.parse().ok()?
        };
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        let num: BigInt = frac.parse().ok()?;
        let den = BigInt::from(10u32).pow(frac.len() as u32);
        let f = BigRational::new(num, den);
        let i = BigRational::from_integer(int);
        return Some(if neg { i - f } else { i + f });
    }
    let p: BigInt = s.parse().ok()?;
    Some(BigRational::from_integer(p))
}

/// Renders a rational as a decimal approximation with the given number of
/// fractional digits (round toward zero), used for human-readable output.
pub fn decimal_approx(x: &BigRational, digits: u32) -> String {
    let scale = BigInt::from(10u32).pow(digits);
    let scaled = (x * BigRational::from_integer(scale.clone())).trunc().to_integer();
    let sign = if scaled.is_negative() { "-" } else { "" };
    let abs = scaled.abs();
    let int = &abs / &scale;
    let frac = &abs % &scale;
    if digits == 0 {
        return format!("{}{}", sign, int);
    }
    let frac_s = format!("{:0>width$}", frac.to_string(), width = digits as usize);
    let frac_s = frac_s.trim_end_matches('0');
    if frac_s.is_empty() {
        format!("{}{}", sign, int)
    } else {
        format!("{}{}.{}", sign, int, frac_s)
    }
}

/// A closed rational interval guaranteed to contain the exact value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Enclosure {
    pub lo: BigRational,
    pub hi: BigRational,
}

impl Enclosure {
    pub fn exact(x: BigRational) -> Self {
        Enclosure { lo: x.clone(), hi: x }
    }

    pub fn width(&self) -> BigRational {
        &self.hi - &self.lo
    }

    pub fn add(&self, other: &Enclosure) -> Enclosure {
        Enclosure { lo: &self.lo + &other.lo, hi: &self.hi + &other.hi }
    }

    pub fn sub(&self, other: &Enclosure) -> Enclosure {
        Enclosure { lo: &self.lo - &other.hi, hi: &self.hi - &other.lo }
    }

    pub fn neg(&self) -> Enclosure {
        Enclosure { lo: -self.hi.clone(), hi: -self.lo.clone() }
    }

    pub fn mul(&self, other: &Enclosure) -> Enclosure {
        let cands = [
            &self.lo * &other.lo,
            &self.lo * &other.hi,
            &self.hi * &other.lo,
            &self.hi * &other.hi,
        ];
        let lo = cands.iter().min().unwrap().clone();
        let hi = cands.iter().max().unwrap().clone();
        Enclosure { lo, hi }
    }

    pub fn scale(&self, c: &BigRational) -> Enclosure {
        if c.is_negative() {
            Enclosure { lo: &self.hi * c, hi: &self.lo * c }
        } else {
            Enclosure { lo: &self.lo * c, hi: &self.hi * c }
        }
    }

    /// Reciprocal; requires the interval not to straddle zero.
    pub fn recip(&self) -> Enclosure {
        assert!(
            self.lo.is_positive() || self.hi.is_negative(),
            "recip of interval containing zero"
        );
        Enclosure { lo: self.hi.recip(), hi: self.lo.recip() }
    }

    pub fn div(&self, other: &Enclosure) -> Enclosure {
        self.mul(&other.recip())
    }

    /// Integer power by repeated squaring on the interval.
    pub fn powi(&self, mut n: u32) -> Enclosure {
        let mut acc = Enclosure::exact(BigRational::one());
        let mut base = self.clone();
        while n > 0 {
            if n & 1 == 1 {
                acc = acc.mul(&base);
            }
            base = base.mul(&base);
            n >>= 1;
        }
        acc
    }

    /// Compares the enclosed value against an exact rational, if decidable.
    pub fn cmp_rat(&self, q: &BigRational) -> Option<Ordering> {
        if &self.hi < q {
            Some(Ordering::Less)
        } else if &self.lo > q {
            Some(Ordering::Greater)
        } else if self.lo == self.hi && &self.lo == q {
            Some(Ordering::Equal)
        } else {
            None
        }
    }
}

/// Enclosure of Euler's number with `width <= eps`.
pub fn enclose_e(eps: &BigRational) -> Enclosure {
    // e = sum 1/k!, tail after K terms bounded by 2/(K+1)!.
    let mut sum = BigRational::zero();
    let mut term = BigRational::one(); // 1/0!
    let mut k: u64 = 0;
    loop {
        sum += &term;
        k += 1;
        term /= BigRational::from_integer(BigInt::from(k));
        // term is now 1/k!; the tail from index k is < 2 * term.
        let tail = &term + &term;
        if &tail <= eps {
            return Enclosure { lo: sum.clone(), hi: sum + tail };
        }
    }
}

/// artanh series: ln((1+z)/(1-z)) = 2 * sum z^(2k+1)/(2k+1) for |z| < 1,
/// with tail bounded by |z|^(2K+3) / ((2K+3) (1 - z^2)).
fn ln_via_artanh(z: &BigRational, eps: &BigRational) -> Enclosure {
    assert!(z.abs() < BigRational::one());
    let z2 = z * z;
    let one_minus_z2 = BigRational::one() - &z2;
    let mut sum = BigRational::zero();
    let mut pow = z.clone(); // z^(2k+1)
    let mut k: u64 = 0;
    loop {
        sum += &pow / BigRational::from_integer(BigInt::from(2 * k + 1));
        pow *= &z2;
        k += 1;
        // pow is now |z|^(2k+1) up to sign; bound the remaining tail.
        let tail = pow.abs()
            / (BigRational::from_integer(BigInt::from(2 * k + 1)) * &one_minus_z2);
        if &(&tail + &tail) <= eps {
            let two = rat_i64(2);
            let base = &two * &sum;
            let t2 = two * tail;
            return if z.is_negative() {
                Enclosure { lo: &base - &t2, hi: base }
            } else {
                Enclosure { lo: base.clone(), hi: base + t2 }
            };
        }
    }
}

/// Enclosure of ln(q) for rational q > 0 with `width <= eps`.
pub fn enclose_ln(q: &BigRational, eps: &BigRational) -> Enclosure {
    assert!(q.is_positive(), "ln of non-positive rational");
    if q.is_one() {
        return Enclosure::exact(BigRational::zero());
    }
    // Range-reduce q = 2^m * q' with q' in [3/4, 3/2): ln q = m ln 2 + ln q'.
    let mut m: i64 = 0;
    let mut qq = q.clone();
    let three_half = rat(3, 2);
    let three_quarter = rat(3, 4);
    while qq >= three_half {
        qq /= rat_i64(2);
        m += 1;
    }
    while qq < three_quarter {
        qq *= rat_i64(2);
        m -= 1;
    }
    let sub_eps = eps / rat_i64(4);
    let mut result = {
        // ln qq via artanh with z = (qq-1)/(qq+1), |z| <= 1/5.
        let z = (&qq - BigRational::one()) / (&qq + BigRational::one());
        ln_via_artanh(&z, &sub_eps)
    };
    if m != 0 {
        let ln2 = ln_via_artanh(&rat(1, 3), &(sub_eps / rat_i64(2 * m.unsigned_abs() as i64)));
        let scaled = ln2.scale(&rat_i64(m));
        result = result.add(&scaled);
    }
    result
}

/// Enclosure of q^r for rational q > 0 and rational exponent r, with
/// `width <= eps`. Uses bisection with the exact predicate x^b <=> q^a.
pub fn enclose_pow(q: &BigRational, r: &BigRational, eps: &BigRational) -> Enclosure {
    assert!(q.is_positive(), "power of non-positive base");
    let a = r.numer().clone();
    let b = r.denom().clone(); // b > 0 by BigRational normalization
    if a.is_zero() {
        return Enclosure::exact(BigRational::one());
    }
    if q.is_one() {
        return Enclosure::exact(BigRational::one());
    }
    // Exact when the exponent is an integer.
    if b.is_one() {
        let n: i64 = a.to_string().parse().expect("integer exponent fits i64");
        let p = pow_rat_int(q, n.unsigned_abs() as u32);
        return if n < 0 { Enclosure::exact(p.recip()) } else { Enclosure::exact(p) };
    }
    // x = q^(a/b) is the unique positive root of x^b = q^a.
    let qa = pow_big(q, &a);
    let bu: u32 = b.to_string().parse().expect("exponent denominator fits u32");
    // Initial bracket.
    let mut lo = BigRational::zero();
    let mut hi = BigRational::one();
    while pow_rat_int(&hi, bu) < qa {
        hi *= rat_i64(2);
    }
    // lo^b <= q^a <= hi^b throughout.
    while &(&hi - &lo) > eps {
        let mid = (&lo + &hi) / rat_i64(2);
        if pow_rat_int(&mid, bu) <= qa {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Enclosure { lo, hi }
}

fn pow_rat_int(x: &BigRational, n: u32) -> BigRational {
    let mut acc = BigRational::one();
    let mut base = x.clone();
    let mut n = n;
    while n > 0 {
        if n & 1 == 1 {
            acc *= &base;
        }
        base = base.clone() * base;
        n >>= 1;
    }
    acc
}

/// q^a for a possibly negative BigInt exponent.
fn pow_big(q: &BigRational, a: &BigInt) -> BigRational {
    let n: i64 = a.to_string().parse().expect("exponent fits i64");
    let p = pow_rat_int(q, n.unsigned_abs() as u32);
    if n < 0 {
        p.recip()
    } else {
        p
    }
}

/// Default relative width for directed constants embedded in constraints.
/// Well below the four-decimal rounding grid, so the outward rounding of an
/// enclosure almost always lands on the rounding of the true value.
pub fn default_constant_eps(value_hint: &BigRational) -> BigRational {
    let one = BigRational::one();
    let m = if value_hint.abs() > one { value_hint.abs() } else { BigRational::one() };
    m * rat(1, 100_000_000)
}

/// Largest multiple of 10^-digits that is <= q.
pub fn round_down_dec(q: &BigRational, digits: u32) -> BigRational {
    let scale = BigRational::from_integer(BigInt::from(10u32).pow(digits));
    BigRational::new((q * &scale).floor().to_integer(), BigInt::one()) / scale
}

/// Smallest multiple of 10^-digits that is >= q.
pub fn round_up_dec(q: &BigRational, digits: u32) -> BigRational {
    let scale = BigRational::from_integer(BigInt::from(10u32).pow(digits));
    BigRational::new((q * &scale).ceil().to_integer(), BigInt::one()) / scale
}
