//! Exact arithmetic in `Z[ω]`, `ω` a primitive complex `p`-th root of unity.
//!
//! A [`CycInt`] is stored in the power basis `1, ω, …, ω^{p-2}`, reduced
//! with `Φ_p(ω) = 1 + ω + … + ω^{p-1} = 0`, so equal values have equal
//! coefficient lists. Correlation values of the sequences studied here lie in
//! the real quadratic subfield `Q(√p)`; [`CycInt::recognize_quadratic`] maps
//! them to a [`QuadValue`] `u + v√p` using the quadratic Gauss sum
//! `g = Σ_t (t/p) ω^t`, which equals `√p` when `p ≡ 1 (mod 4)`.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::modp::legendre;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CycError {
    #[error("mismatched roots of unity: p = {0} vs p = {1}")]
    Mismatch(u64, u64),
    #[error("exponent {k} out of range for p = {p}")]
    ExponentRange { k: u64, p: u64 },
    #[error("coefficient list has length {got}, expected {expected}")]
    Length { got: usize, expected: usize },
    #[error("√p is a Gauss sum in Z[ω] only for p ≡ 1 (mod 4); got p = {0}")]
    NotOneModFour(u64),
    #[error("value is not in Q(√{0})")]
    NotQuadratic(u64),
    #[error("{0} is not a cyclotomic integer")]
    NotIntegral(String),
    #[error("precision must be at least 53 bits, got {0}")]
    Precision(u32),
}

/// An element of `Z[ω]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CycInt {
    p: u64,
    coeffs: Vec<BigInt>,
}

/// `ω^k` for `0 <= k < p`.
pub fn omega_pow(p: u64, k: u64) -> Result<CycInt, CycError> {
    if k >= p {
        return Err(CycError::ExponentRange { k, p });
    }
    let mut counts = vec![0u64; p as usize];
    counts[k as usize] = 1;
    Ok(CycInt::from_residue_counts(p, &counts))
}

/// The quadratic Gauss sum `Σ_{t=1}^{p-1} (t/p) ω^t`, checked to square to `p`.
pub fn sqrt_p_element(p: u64) -> Result<CycInt, CycError> {
    if p % 4 != 1 {
        return Err(CycError::NotOneModFour(p));
    }
    let g = gauss_element(p);
    assert_eq!(&g * &g, CycInt::from_int(p, p as i64), "g^2 = p");
    Ok(g)
}

fn gauss_element(p: u64) -> CycInt {
    let full: Vec<BigInt> = (0..p).map(|t| BigInt::from(legendre(t, p))).collect();
    CycInt::reduce_full(p, full)
}

impl CycInt {
    pub fn new(p: u64, coeffs: Vec<BigInt>) -> Result<Self, CycError> {
        let expected = p as usize - 1;
        if coeffs.len() != expected {
            return Err(CycError::Length {
                got: coeffs.len(),
                expected,
            });
        }
        Ok(CycInt { p, coeffs })
    }

    pub fn zero(p: u64) -> Self {
        assert!(p >= 3, "ω must have odd prime order");
        CycInt {
            p,
            coeffs: vec![BigInt::zero(); p as usize - 1],
        }
    }

    pub fn from_int(p: u64, k: i64) -> Self {
        let mut z = Self::zero(p);
        z.coeffs[0] = BigInt::from(k);
        z
    }

    /// `Σ_j counts[j]·ω^j` for a histogram over the residues `0..p`.
    pub fn from_residue_counts(p: u64, counts: &[u64]) -> Self {
        assert_eq!(counts.len(), p as usize, "one count per residue");
        let top = counts[p as usize - 1] as i128;
        let coeffs = counts[..p as usize - 1]
            .iter()
            .map(|&c| BigInt::from(c as i128 - top))
            .collect();
        CycInt { p, coeffs }
    }

    /// Reduces a length-`p` coefficient vector over `1, ω, …, ω^{p-1}`.
    fn reduce_full(p: u64, mut full: Vec<BigInt>) -> Self {
        let top = full.pop().expect("length p");
        for c in &mut full {
            *c -= &top;
        }
        CycInt { p, coeffs: full }
    }

    fn to_full(&self) -> Vec<BigInt> {
        let mut full = self.coeffs.clone();
        full.push(BigInt::zero());
        full
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn coeffs(&self) -> &[BigInt] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(Zero::is_zero)
    }

    fn same_p(&self, other: &CycInt) -> Result<(), CycError> {
        if self.p == other.p {
            Ok(())
        } else {
            Err(CycError::Mismatch(self.p, other.p))
        }
    }

    pub fn checked_add(&self, other: &CycInt) -> Result<CycInt, CycError> {
        self.same_p(other)?;
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect();
        Ok(CycInt { p: self.p, coeffs })
    }

    pub fn checked_sub(&self, other: &CycInt) -> Result<CycInt, CycError> {
        self.same_p(other)?;
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a - b).collect();
        Ok(CycInt { p: self.p, coeffs })
    }

    pub fn checked_mul(&self, other: &CycInt) -> Result<CycInt, CycError> {
        self.same_p(other)?;
        let p = self.p as usize;
        let mut full = vec![BigInt::zero(); p];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                if b.is_zero() {
                    continue;
                }
                full[(i + j) % p] += a * b;
            }
        }
        Ok(Self::reduce_full(self.p, full))
    }

    pub fn scale(&self, k: &BigInt) -> CycInt {
        CycInt {
            p: self.p,
            coeffs: self.coeffs.iter().map(|c| c * k).collect(),
        }
    }

    /// Exact division by an integer; `None` if some coefficient is not divisible.
    pub fn div_exact(&self, k: &BigInt) -> Option<CycInt> {
        let mut coeffs = Vec::with_capacity(self.coeffs.len());
        for c in &self.coeffs {
            if !(c % k).is_zero() {
                return None;
            }
            coeffs.push(c / k);
        }
        Some(CycInt { p: self.p, coeffs })
    }

    /// Complex conjugation, `ω^k -> ω^{p-k}`.
    pub fn conjugate(&self) -> CycInt {
        let p = self.p as usize;
        let full = self.to_full();
        let swapped = (0..p).map(|k| full[(p - k) % p].clone()).collect();
        Self::reduce_full(self.p, swapped)
    }

    pub fn is_real(&self) -> bool {
        self.conjugate() == *self
    }

    /// Writes `self = u + v·g` with `g` the Gauss sum (`= √p`), or fails if
    /// `self` is outside `Q(√p)`.
    pub fn recognize_quadratic(&self) -> Result<QuadValue, CycError> {
        let p = self.p;
        if p % 4 != 1 {
            return Err(CycError::NotOneModFour(p));
        }
        let g = gauss_element(p);
        // g_0 = -1 and g_k ∈ {0, -2} for k >= 1; use the first nonzero g_k.
        let k0 = (1..g.coeffs.len())
            .find(|&k| !g.coeffs[k].is_zero())
            .expect("g is not rational");
        let v = BigRational::new(self.coeffs[k0].clone(), g.coeffs[k0].clone());
        let u = BigRational::from_integer(self.coeffs[0].clone())
            - &v * BigRational::from_integer(g.coeffs[0].clone());
        for (k, (x, gk)) in self.coeffs.iter().zip(&g.coeffs).enumerate() {
            let mut expect = &v * BigRational::from_integer(gk.clone());
            if k == 0 {
                expect += &u;
            }
            if expect != BigRational::from_integer(x.clone()) {
                return Err(CycError::NotQuadratic(p));
            }
        }
        Ok(QuadValue { p, u, v })
    }

    /// The cyclotomic integer `u + v·g`.
    pub fn from_quad(q: &QuadValue) -> Result<CycInt, CycError> {
        let p = q.p;
        if p % 4 != 1 {
            return Err(CycError::NotOneModFour(p));
        }
        let g = gauss_element(p);
        let mut coeffs = Vec::with_capacity(g.coeffs.len());
        for (k, gk) in g.coeffs.iter().enumerate() {
            let mut c = &q.v * BigRational::from_integer(gk.clone());
            if k == 0 {
                c += &q.u;
            }
            if !c.is_integer() {
                return Err(CycError::NotIntegral(q.to_string()));
            }
            coeffs.push(c.to_integer());
        }
        Ok(CycInt { p, coeffs })
    }

    /// Numerical value `Σ coeffs[k]·e^{2πik/p}`.
    ///
    /// At 53 bits this is a plain `f64` sum. Above that the sum is accumulated
    /// in fixed point with `precision` fractional bits (plus guard bits) and
    /// rounded to `f64` once, so large cancelling coefficients lose nothing.
    pub fn to_complex(&self, precision: u32) -> Result<Complex64, CycError> {
        if precision < 53 {
            return Err(CycError::Precision(precision));
        }
        if precision == 53 {
            let p = self.p as f64;
            let mut acc = Complex64::new(0.0, 0.0);
            for (k, c) in self.coeffs.iter().enumerate() {
                let c = c.to_f64().unwrap_or(f64::NAN);
                acc += Complex64::from_polar(c, std::f64::consts::TAU * k as f64 / p);
            }
            return Ok(acc);
        }
        let bits = precision + 32;
        let pi = fixed_pi(bits);
        let p = self.p as i64;
        let (mut re, mut im) = (BigInt::zero(), BigInt::zero());
        for (k, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            // Angle 2πk/p reduced into (-π, π].
            let k = k as i64;
            let k = if 2 * k > p { k - p } else { k };
            let theta = &pi * BigInt::from(2 * k) / BigInt::from(p);
            let (cos, sin) = fixed_cos_sin(&theta, bits);
            re += c * cos;
            im += c * sin;
        }
        let denom = BigInt::one() << bits;
        let to_f64 = |x: BigInt| {
            BigRational::new(x, denom.clone())
                .to_f64()
                .unwrap_or(f64::NAN)
        };
        Ok(Complex64::new(to_f64(re), to_f64(im)))
    }
}

/// `π·2^bits` via Machin's formula.
fn fixed_pi(bits: u32) -> BigInt {
    let atan_inv = |x: u64| -> BigInt {
        let x = BigInt::from(x);
        let x2 = &x * &x;
        let mut term = (BigInt::one() << bits) / &x;
        let mut sum = term.clone();
        let mut k = 1u64;
        loop {
            term /= &x2;
            if term.is_zero() {
                break;
            }
            let t = &term / BigInt::from(2 * k + 1);
            if k % 2 == 1 {
                sum -= t;
            } else {
                sum += t;
            }
            k += 1;
        }
        sum
    };
    atan_inv(5) * 16 - atan_inv(239) * 4
}

/// Taylor series for `(cos θ, sin θ)`, `θ` given as `θ·2^bits` with `|θ| <= π`.
fn fixed_cos_sin(theta: &BigInt, bits: u32) -> (BigInt, BigInt) {
    let one = BigInt::one() << bits;
    let mut cos = BigInt::zero();
    let mut sin = BigInt::zero();
    let mut term = one; // θ^j / j!
    let mut j = 0u64;
    while !term.is_zero() {
        match j % 4 {
            0 => cos += &term,
            1 => sin += &term,
            2 => cos -= &term,
            _ => sin -= &term,
        }
        j += 1;
        term = ((term * theta) >> bits) / BigInt::from(j);
    }
    (cos, sin)
}

macro_rules! forward_binop {
    ($trait:ident, $method:ident, $checked:ident) => {
        impl $trait<&CycInt> for &CycInt {
            type Output = CycInt;
            fn $method(self, rhs: &CycInt) -> CycInt {
                self.$checked(rhs).expect("operands share p")
            }
        }
        impl $trait<CycInt> for CycInt {
            type Output = CycInt;
            fn $method(self, rhs: CycInt) -> CycInt {
                (&self).$checked(&rhs).expect("operands share p")
            }
        }
    };
}

forward_binop!(Add, add, checked_add);
forward_binop!(Sub, sub, checked_sub);
forward_binop!(Mul, mul, checked_mul);

impl Neg for &CycInt {
    type Output = CycInt;
    fn neg(self) -> CycInt {
        CycInt {
            p: self.p,
            coeffs: self.coeffs.iter().map(|c| -c).collect(),
        }
    }
}

impl Neg for CycInt {
    type Output = CycInt;
    fn neg(self) -> CycInt {
        -&self
    }
}

/// The real number `u + v·√p` with rational `u`, `v`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct QuadValue {
    p: u64,
    u: BigRational,
    v: BigRational,
}

impl QuadValue {
    pub fn new(p: u64, u: BigRational, v: BigRational) -> Self {
        QuadValue { p, u, v }
    }

    pub fn integer(p: u64, k: impl Into<BigInt>) -> Self {
        QuadValue {
            p,
            u: BigRational::from_integer(k.into()),
            v: BigRational::zero(),
        }
    }

    pub fn zero(p: u64) -> Self {
        Self::integer(p, 0)
    }

    /// `p^{k/2}`: an integer for even `k`, an integer multiple of `√p` for odd `k`.
    pub fn p_power_half(p: u64, k: u32) -> Self {
        let base = BigInt::from(p);
        let whole = BigRational::from_integer(num_traits::pow(base, (k / 2) as usize));
        if k.is_multiple_of(2) {
            QuadValue {
                p,
                u: whole,
                v: BigRational::zero(),
            }
        } else {
            QuadValue {
                p,
                u: BigRational::zero(),
                v: whole,
            }
        }
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn u(&self) -> &BigRational {
        &self.u
    }

    pub fn v(&self) -> &BigRational {
        &self.v
    }

    pub fn is_rational(&self) -> bool {
        self.v.is_zero()
    }

    pub fn scale(&self, k: &BigRational) -> QuadValue {
        QuadValue {
            p: self.p,
            u: &self.u * k,
            v: &self.v * k,
        }
    }

    pub fn half(&self) -> QuadValue {
        self.scale(&BigRational::new(BigInt::one(), BigInt::from(2)))
    }

    pub fn pow(&self, k: u32) -> QuadValue {
        (0..k).fold(QuadValue::integer(self.p, 1), |acc, _| &acc * self)
    }

    pub fn to_f64(&self) -> f64 {
        let u = self.u.to_f64().unwrap_or(f64::NAN);
        let v = self.v.to_f64().unwrap_or(f64::NAN);
        u + v * (self.p as f64).sqrt()
    }

    /// Sign of the real number, computed exactly.
    pub fn signum(&self) -> i8 {
        let su = self.u.signum();
        let sv = self.v.signum();
        if su == sv || sv.is_zero() {
            return sign_of(&su);
        }
        if su.is_zero() {
            return sign_of(&sv);
        }
        // Opposite signs: compare u² with p·v².
        let u2 = &self.u * &self.u;
        let pv2 = &self.v * &self.v * BigRational::from_integer(BigInt::from(self.p));
        match u2.cmp(&pv2) {
            std::cmp::Ordering::Greater => sign_of(&su),
            std::cmp::Ordering::Less => sign_of(&sv),
            std::cmp::Ordering::Equal => 0,
        }
    }

    fn checked(&self, other: &QuadValue) {
        assert_eq!(self.p, other.p, "operands share p");
    }
}

fn sign_of(r: &BigRational) -> i8 {
    if r.is_positive() {
        1
    } else if r.is_negative() {
        -1
    } else {
        0
    }
}

impl fmt::Display for QuadValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.v.is_zero() {
            write!(f, "{}", self.u)
        } else if self.u.is_zero() {
            write!(f, "{}·√{}", self.v, self.p)
        } else if self.v.is_negative() {
            write!(f, "{} - {}·√{}", self.u, -&self.v, self.p)
        } else {
            write!(f, "{} + {}·√{}", self.u, self.v, self.p)
        }
    }
}

impl Add<&QuadValue> for &QuadValue {
    type Output = QuadValue;
    fn add(self, rhs: &QuadValue) -> QuadValue {
        self.checked(rhs);
        QuadValue {
            p: self.p,
            u: &self.u + &rhs.u,
            v: &self.v + &rhs.v,
        }
    }
}

impl Sub<&QuadValue> for &QuadValue {
    type Output = QuadValue;
    fn sub(self, rhs: &QuadValue) -> QuadValue {
        self.checked(rhs);
        QuadValue {
            p: self.p,
            u: &self.u - &rhs.u,
            v: &self.v - &rhs.v,
        }
    }
}

impl Mul<&QuadValue> for &QuadValue {
    type Output = QuadValue;
    fn mul(self, rhs: &QuadValue) -> QuadValue {
        self.checked(rhs);
        let p = BigRational::from_integer(BigInt::from(self.p));
        QuadValue {
            p: self.p,
            u: &self.u * &rhs.u + &self.v * &rhs.v * p,
            v: &self.u * &rhs.v + &self.v * &rhs.u,
        }
    }
}

impl Neg for &QuadValue {
    type Output = QuadValue;
    fn neg(self) -> QuadValue {
        QuadValue {
            p: self.p,
            u: -&self.u,
            v: -&self.v,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ints(v: &[i64]) -> Vec<BigInt> {
        v.iter().map(|&x| BigInt::from(x)).collect()
    }

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn omega_powers() {
        assert_eq!(omega_pow(5, 0).unwrap().coeffs(), &ints(&[1, 0, 0, 0])[..]);
        assert_eq!(omega_pow(5, 4).unwrap().coeffs(), &ints(&[-1, -1, -1, -1])[..]);
        let total = (0..5).fold(CycInt::zero(5), |acc, k| acc + omega_pow(5, k).unwrap());
        assert!(total.is_zero());
        assert_eq!(omega_pow(5, 5), Err(CycError::ExponentRange { k: 5, p: 5 }));
    }

    #[test]
    fn ring_identities() {
        let w = omega_pow(5, 1).unwrap();
        let w4 = omega_pow(5, 4).unwrap();
        assert_eq!(&w * &w4, CycInt::from_int(5, 1));
        let one_plus_w = CycInt::from_int(5, 1) + w.clone();
        assert!((&one_plus_w * &CycInt::zero(5)).is_zero());
        assert_eq!(
            w.checked_mul(&omega_pow(13, 1).unwrap()),
            Err(CycError::Mismatch(5, 13))
        );
    }

    #[test]
    fn gauss_sum_squares_to_p() {
        let g = sqrt_p_element(5).unwrap();
        assert_eq!(g.coeffs(), &ints(&[-1, 0, -2, -2])[..]);
        let z = g.to_complex(53).unwrap();
        assert!((z.re - 5f64.sqrt()).abs() < 1e-12 && z.im.abs() < 1e-12);
        let g13 = sqrt_p_element(13).unwrap();
        assert_eq!(&g13 * &g13, CycInt::from_int(13, 13));
        assert_eq!(sqrt_p_element(7), Err(CycError::NotOneModFour(7)));
    }

    #[test]
    fn recognize_examples() {
        let five = CycInt::from_int(5, 5);
        let q = five.recognize_quadratic().unwrap();
        assert_eq!((q.u().clone(), q.v().clone()), (rat(5, 1), rat(0, 1)));
        let g = sqrt_p_element(5).unwrap();
        let q = g.recognize_quadratic().unwrap();
        assert_eq!((q.u().clone(), q.v().clone()), (rat(0, 1), rat(1, 1)));
        let w = omega_pow(5, 1).unwrap();
        assert_eq!(w.recognize_quadratic(), Err(CycError::NotQuadratic(5)));
    }

    #[test]
    fn half_integer_values_round_trip() {
        // (1 + √5)/2·5 - 1 = 3/2 + 5/2·√5
        let q = QuadValue::new(5, rat(3, 2), rat(5, 2));
        let c = CycInt::from_quad(&q).unwrap();
        assert_eq!(c.recognize_quadratic().unwrap(), q);
        assert!(c.is_real());
        let bad = QuadValue::new(5, rat(1, 2), rat(0, 1));
        assert!(CycInt::from_quad(&bad).is_err());
    }

    #[test]
    fn to_complex_examples() {
        let one = CycInt::from_int(5, 1).to_complex(53).unwrap();
        assert_eq!((one.re, one.im), (1.0, 0.0));
        let x = omega_pow(5, 1).unwrap() + omega_pow(5, 4).unwrap();
        let z = x.to_complex(53).unwrap();
        assert!((z.re - 0.618_033_988_749_895).abs() < 1e-12 && z.im.abs() < 1e-12);
        let z = x.to_complex(128).unwrap();
        assert!((z.re - 0.618_033_988_749_895).abs() < 1e-15 && z.im.abs() < 1e-15);
        assert_eq!(x.to_complex(32), Err(CycError::Precision(32)));
    }

    #[test]
    fn conjugation() {
        let w = omega_pow(13, 3).unwrap();
        assert_eq!(w.conjugate(), omega_pow(13, 10).unwrap());
        assert!(!w.is_real());
        assert!((w.clone() + w.conjugate()).is_real());
    }

    #[test]
    fn quad_value_arithmetic() {
        let a = QuadValue::new(5, rat(3, 2), rat(5, 2));
        let b = QuadValue::new(5, rat(3, 2), rat(-5, 2));
        // (3/2)² - (5/2)²·5 = 9/4 - 125/4 = -29
        assert_eq!(&a * &b, QuadValue::integer(5, -29));
        assert_eq!((&a + &b).u(), &rat(3, 1));
        assert!((a.to_f64() - (1.5 + 2.5 * 5f64.sqrt())).abs() < 1e-12);
        assert_eq!(QuadValue::p_power_half(5, 3), QuadValue::new(5, rat(0, 1), rat(5, 1)));
        assert_eq!(QuadValue::p_power_half(5, 4), QuadValue::integer(5, 25));
        assert_eq!(b.signum(), -1);
        assert_eq!(a.signum(), 1);
        assert_eq!(QuadValue::new(5, rat(5, 1), rat(-1, 1)).signum(), 1);
        assert_eq!(a.pow(2), &a * &a);
    }
}
