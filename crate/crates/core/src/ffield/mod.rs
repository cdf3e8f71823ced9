//! Arithmetic in GF(p) and GF(p^n).
//!
//! Elements are stored as their coordinate vector over the power basis
//! `1, α, …, α^{n-1}`, packed into a single integer `Σ coords[i]·p^i`. The
//! generator `α` is the residue of `x` modulo the canonical modulus, which is
//! chosen so that `α` is primitive. For fields below the size cap a full
//! exp/log table is built, which turns multiplication, inversion and the
//! quadratic character into table lookups.

mod cache;
pub(crate) mod poly;

use std::fmt;
use std::path::PathBuf;

use thiserror::Error;

pub use cache::DlogStatus;

/// Default upper bound on `p^n` for fields that carry a discrete-log table.
pub const DEFAULT_CAP: u64 = 1 << 24;

/// Largest field accepted in no-dlog mode. Beyond this the modulus search
/// (which factors `p^n - 1` by trial division) stops being desk-scale.
const MAX_FIELD_SIZE: u64 = 1 << 40;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FieldError {
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("characteristic must be odd, got {0}")]
    EvenCharacteristic(u64),
    #[error("extension degree must be at least 1")]
    ZeroDegree,
    #[error("field size {p}^{n} exceeds the dlog cap {cap}; use no-dlog mode or raise the cap")]
    CapExceeded { p: u64, n: u32, cap: u64 },
    #[error("field size {p}^{n} is beyond the supported range")]
    TooLarge { p: u64, n: u32 },
    #[error("modulus {0:?} is not a primitive polynomial")]
    NotPrimitive(Vec<u64>),
    #[error("inverse of zero")]
    ZeroInverse,
    #[error("element index {0} does not belong to this field")]
    ForeignElement(u64),
    #[error("coordinate vector has length {got}, expected {expected}")]
    CoordLength { got: usize, expected: usize },
    #[error("discrete logarithm of zero")]
    ZeroLog,
    #[error("discrete-log table was not built for this field")]
    NoTable,
    #[error("degree {sub} does not divide {n}")]
    NotDivisor { sub: u32, n: u32 },
    #[error("operation needs a second operand")]
    MissingOperand,
}

/// An element of some `FieldDesc`: the packed power-basis coordinates.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FieldElem(u64);

impl FieldElem {
    pub const ZERO: FieldElem = FieldElem(0);
    pub const ONE: FieldElem = FieldElem(1);

    pub fn from_index(index: u64) -> Self {
        FieldElem(index)
    }

    pub fn index(self) -> u64 {
        self.0
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }
}

/// Binary and unary field operations accepted by [`FieldDesc::arith`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Inv,
    Pow(u64),
    /// `x -> x^{p^k}`
    Frobenius(u32),
}

#[derive(Clone, Debug)]
pub struct FieldOptions {
    /// Maximum `p^n` for which the dlog table is built.
    pub cap: u64,
    /// Build the exp/log tables. Without them multiplication falls back to
    /// polynomial arithmetic and `dlog` is unavailable.
    pub dlog: bool,
    /// Directory for the persisted dlog table.
    pub cache_dir: Option<PathBuf>,
}

impl Default for FieldOptions {
    fn default() -> Self {
        FieldOptions {
            cap: DEFAULT_CAP,
            dlog: true,
            cache_dir: None,
        }
    }
}

#[derive(Clone)]
struct Tables {
    /// `exp[k]` is the packed index of `α^k`, `0 <= k < order`.
    exp: Vec<u32>,
    /// `log[i]` is the exponent of the element with packed index `i`; `log[0]` is unused.
    log: Vec<u32>,
}

/// A finite field GF(p^n) with its canonical modulus and generator.
#[derive(Clone)]
pub struct FieldDesc {
    p: u64,
    n: u32,
    size: u64,
    /// Little-endian monic modulus, length `n + 1`.
    modulus: Vec<u64>,
    /// `p^i` for `0 <= i <= n`.
    radix: Vec<u64>,
    tables: Option<Tables>,
    dlog_status: DlogStatus,
}

impl fmt::Debug for FieldDesc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FieldDesc")
            .field("p", &self.p)
            .field("n", &self.n)
            .field("modulus", &self.modulus)
            .field("dlog", &self.dlog_status)
            .finish()
    }
}

/// Builds GF(p^n) with default options (dlog table, default cap, no cache).
pub fn build_field(p: u64, n: u32) -> Result<FieldDesc, FieldError> {
    FieldDesc::build(p, n, &FieldOptions::default())
}

fn checked_size(p: u64, n: u32) -> Result<u64, FieldError> {
    if n < 1 {
        return Err(FieldError::ZeroDegree);
    }
    if !poly::is_prime(p) {
        return Err(FieldError::NotPrime(p));
    }
    if p == 2 {
        return Err(FieldError::EvenCharacteristic(p));
    }
    p.checked_pow(n)
        .filter(|&s| s <= MAX_FIELD_SIZE)
        .ok_or(FieldError::TooLarge { p, n })
}

impl FieldDesc {
    /// Builds GF(p^n) with the canonical (lexicographically least primitive) modulus.
    pub fn build(p: u64, n: u32, opts: &FieldOptions) -> Result<Self, FieldError> {
        let size = checked_size(p, n)?;
        if opts.dlog && size > opts.cap {
            return Err(FieldError::CapExceeded { p, n, cap: opts.cap });
        }
        let modulus = poly::canonical_modulus(p, n, size - 1);
        Self::assemble(p, n, size, modulus, opts)
    }

    /// Builds GF(p^n) over an explicitly chosen primitive modulus (little-endian,
    /// monic, length `n + 1`).
    pub fn with_modulus(
        p: u64,
        n: u32,
        modulus: &[u64],
        opts: &FieldOptions,
    ) -> Result<Self, FieldError> {
        let size = checked_size(p, n)?;
        if opts.dlog && size > opts.cap {
            return Err(FieldError::CapExceeded { p, n, cap: opts.cap });
        }
        let order = size - 1;
        if modulus.len() != n as usize + 1
            || modulus[n as usize] != 1
            || modulus.iter().any(|&c| c >= p)
            || !poly::is_primitive(modulus, p, order, &poly::prime_factors(order))
        {
            return Err(FieldError::NotPrimitive(modulus.to_vec()));
        }
        Self::assemble(p, n, size, modulus.to_vec(), opts)
    }

    fn assemble(
        p: u64,
        n: u32,
        size: u64,
        modulus: Vec<u64>,
        opts: &FieldOptions,
    ) -> Result<Self, FieldError> {
        let radix = (0..=n).map(|i| p.pow(i)).collect();
        let mut field = FieldDesc {
            p,
            n,
            size,
            modulus,
            radix,
            tables: None,
            dlog_status: DlogStatus::Absent,
        };
        if opts.dlog {
            let (tables, status) = match &opts.cache_dir {
                Some(dir) => cache::load_or_build(&field, dir),
                None => (field.compute_tables(), DlogStatus::Computed),
            };
            field.tables = Some(tables);
            field.dlog_status = status;
        }
        Ok(field)
    }

    fn compute_tables(&self) -> Tables {
        let order = self.order() as usize;
        let mut exp = Vec::with_capacity(order);
        let mut log = vec![u32::MAX; self.size as usize];
        let mut cur = FieldElem::ONE;
        for k in 0..order {
            exp.push(cur.0 as u32);
            log[cur.0 as usize] = k as u32;
            cur = self.mul_by_alpha(cur);
        }
        debug_assert_eq!(cur, FieldElem::ONE);
        Tables { exp, log }
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn degree(&self) -> u32 {
        self.n
    }

    /// Number of elements, `p^n`.
    pub fn size(&self) -> u64 {
        self.size
    }

    /// Order of the multiplicative group, `p^n - 1`.
    pub fn order(&self) -> u64 {
        self.size - 1
    }

    /// Little-endian monic modulus coefficients.
    pub fn modulus(&self) -> &[u64] {
        &self.modulus
    }

    pub fn has_dlog(&self) -> bool {
        self.tables.is_some()
    }

    pub fn dlog_status(&self) -> DlogStatus {
        self.dlog_status
    }

    /// Renders the modulus as e.g. `x^2+x+2`.
    pub fn modulus_string(&self) -> String {
        let mut terms = Vec::new();
        for (i, &c) in self.modulus.iter().enumerate().rev() {
            if c == 0 {
                continue;
            }
            let coef = if c == 1 && i > 0 { String::new() } else { c.to_string() };
            let term = match i {
                0 => coef,
                1 => format!("{coef}x"),
                _ => format!("{coef}x^{i}"),
            };
            terms.push(term);
        }
        terms.join("+")
    }

    /// The generator `α`.
    pub fn alpha(&self) -> FieldElem {
        if self.n == 1 {
            FieldElem((self.p - self.modulus[0]) % self.p)
        } else {
            FieldElem(self.p)
        }
    }

    /// Multiplicative order of `α`, recomputed by exponentiation without the tables.
    pub fn alpha_order(&self) -> u64 {
        let order = self.order();
        let mut k = order;
        for q in poly::prime_factors(order) {
            while k.is_multiple_of(q) && self.pow_poly(self.alpha(), k / q) == FieldElem::ONE {
                k /= q;
            }
        }
        k
    }

    fn pow_poly(&self, x: FieldElem, mut k: u64) -> FieldElem {
        let mut acc = FieldElem::ONE;
        let mut base = x;
        while k > 0 {
            if k & 1 == 1 {
                acc = self.mul_poly(acc, base);
            }
            base = self.mul_poly(base, base);
            k >>= 1;
        }
        acc
    }

    /// Embeds an integer into the prime subfield.
    pub fn from_int(&self, k: i64) -> FieldElem {
        FieldElem(k.rem_euclid(self.p as i64) as u64)
    }

    pub fn coords(&self, x: FieldElem) -> Vec<u64> {
        let mut v = x.0;
        (0..self.n)
            .map(|_| {
                let d = v % self.p;
                v /= self.p;
                d
            })
            .collect()
    }

    pub fn from_coords(&self, coords: &[u64]) -> Result<FieldElem, FieldError> {
        if coords.len() != self.n as usize {
            return Err(FieldError::CoordLength {
                got: coords.len(),
                expected: self.n as usize,
            });
        }
        Ok(FieldElem(
            coords
                .iter()
                .zip(&self.radix)
                .map(|(&c, &r)| (c % self.p) * r)
                .sum(),
        ))
    }

    pub fn contains(&self, x: FieldElem) -> bool {
        x.0 < self.size
    }

    fn check(&self, x: FieldElem) -> Result<FieldElem, FieldError> {
        if self.contains(x) {
            Ok(x)
        } else {
            Err(FieldError::ForeignElement(x.0))
        }
    }

    /// Iterates over all `p^n` elements in packed-index order.
    pub fn elements(&self) -> impl Iterator<Item = FieldElem> {
        (0..self.size).map(FieldElem)
    }

    pub fn add(&self, x: FieldElem, y: FieldElem) -> FieldElem {
        let p = self.p;
        let (mut a, mut b) = (x.0, y.0);
        let mut out = 0;
        for &r in &self.radix[..self.n as usize] {
            let d = (a % p + b % p) % p;
            out += d * r;
            a /= p;
            b /= p;
        }
        FieldElem(out)
    }

    pub fn neg(&self, x: FieldElem) -> FieldElem {
        let p = self.p;
        let mut a = x.0;
        let mut out = 0;
        for &r in &self.radix[..self.n as usize] {
            let d = a % p;
            out += ((p - d) % p) * r;
            a /= p;
        }
        FieldElem(out)
    }

    pub fn sub(&self, x: FieldElem, y: FieldElem) -> FieldElem {
        self.add(x, self.neg(y))
    }

    /// Multiplication by an element of the prime field.
    pub fn scale(&self, k: u64, x: FieldElem) -> FieldElem {
        let p = self.p;
        let k = k % p;
        let mut a = x.0;
        let mut out = 0;
        for &r in &self.radix[..self.n as usize] {
            out += ((a % p) * k % p) * r;
            a /= p;
        }
        FieldElem(out)
    }

    fn mul_by_alpha(&self, x: FieldElem) -> FieldElem {
        let alpha = self.coords(self.alpha());
        let prod = poly::mulmod(&self.coords(x), &alpha, &self.modulus, self.p);
        self.pack(&prod)
    }

    fn pack(&self, coords: &[u64]) -> FieldElem {
        FieldElem(coords.iter().zip(&self.radix).map(|(&c, &r)| c * r).sum())
    }

    /// Product by polynomial multiplication, ignoring any tables.
    pub fn mul_poly(&self, x: FieldElem, y: FieldElem) -> FieldElem {
        let prod = poly::mulmod(&self.coords(x), &self.coords(y), &self.modulus, self.p);
        self.pack(&prod)
    }

    pub fn mul(&self, x: FieldElem, y: FieldElem) -> FieldElem {
        match &self.tables {
            Some(t) => {
                if x.is_zero() || y.is_zero() {
                    return FieldElem::ZERO;
                }
                let order = self.order();
                let k = (t.log[x.0 as usize] as u64 + t.log[y.0 as usize] as u64) % order;
                FieldElem(t.exp[k as usize] as u64)
            }
            None => self.mul_poly(x, y),
        }
    }

    pub fn inv(&self, x: FieldElem) -> Result<FieldElem, FieldError> {
        if x.is_zero() {
            return Err(FieldError::ZeroInverse);
        }
        Ok(match &self.tables {
            Some(t) => {
                let order = self.order();
                let k = (order - t.log[x.0 as usize] as u64) % order;
                FieldElem(t.exp[k as usize] as u64)
            }
            None => self.pow(x, self.order() - 1),
        })
    }

    pub fn div(&self, x: FieldElem, y: FieldElem) -> Result<FieldElem, FieldError> {
        Ok(self.mul(x, self.inv(y)?))
    }

    /// `x^k` by square-and-multiply; `0^0 = 1`.
    pub fn pow(&self, x: FieldElem, mut k: u64) -> FieldElem {
        let mut result = FieldElem::ONE;
        let mut base = x;
        while k > 0 {
            if k & 1 == 1 {
                result = self.mul(result, base);
            }
            base = self.mul(base, base);
            k >>= 1;
        }
        result
    }

    /// `x^{p^k}`.
    pub fn frobenius(&self, x: FieldElem, k: u32) -> FieldElem {
        if x.is_zero() {
            return x;
        }
        let order = self.order() as u128;
        let mut e = 1u128;
        for _ in 0..k % self.n {
            e = e * self.p as u128 % order;
        }
        self.pow(x, e as u64)
    }

    /// Checked dispatch over [`ArithOp`]; `y` is required for binary operations.
    pub fn arith(
        &self,
        op: ArithOp,
        x: FieldElem,
        y: Option<FieldElem>,
    ) -> Result<FieldElem, FieldError> {
        let x = self.check(x)?;
        let second = || -> Result<FieldElem, FieldError> {
            self.check(y.ok_or(FieldError::MissingOperand)?)
        };
        Ok(match op {
            ArithOp::Add => self.add(x, second()?),
            ArithOp::Sub => self.sub(x, second()?),
            ArithOp::Mul => self.mul(x, second()?),
            ArithOp::Inv => self.inv(x)?,
            ArithOp::Pow(k) => self.pow(x, k),
            ArithOp::Frobenius(k) => self.frobenius(x, k),
        })
    }

    /// `Tr^n_m(x) = Σ_{i<n/m} x^{p^{im}}`.
    pub fn trace(&self, x: FieldElem, target_degree: u32) -> Result<FieldElem, FieldError> {
        if target_degree == 0 || !self.n.is_multiple_of(target_degree) {
            return Err(FieldError::NotDivisor {
                sub: target_degree,
                n: self.n,
            });
        }
        let h = self.n / target_degree;
        Ok((0..h).fold(FieldElem::ZERO, |acc, i| {
            self.add(acc, self.frobenius(x, i * target_degree))
        }))
    }

    /// Absolute trace `Tr^n_1(x)` as a residue in `[0, p)`.
    pub fn abs_trace(&self, x: FieldElem) -> u64 {
        self.trace(x, 1).expect("1 divides n").0
    }

    /// Membership in the subfield GF(p^m), tested as `x^{p^m} = x`.
    pub fn in_subfield(&self, x: FieldElem, m: u32) -> Result<bool, FieldError> {
        if m == 0 || !self.n.is_multiple_of(m) {
            return Err(FieldError::NotDivisor { sub: m, n: self.n });
        }
        Ok(self.frobenius(x, m) == x)
    }

    /// Quadratic character: `0` at zero, `+1` on nonzero squares, `-1` otherwise.
    pub fn quad_char(&self, x: FieldElem) -> i8 {
        if x.is_zero() {
            return 0;
        }
        let even = match &self.tables {
            Some(t) => t.log[x.0 as usize] % 2 == 0,
            None => self.pow(x, self.order() / 2) == FieldElem::ONE,
        };
        if even {
            1
        } else {
            -1
        }
    }

    /// Exponent `k` in `[0, p^n - 1)` with `α^k = x`.
    pub fn dlog(&self, x: FieldElem) -> Result<u64, FieldError> {
        let t = self.tables.as_ref().ok_or(FieldError::NoTable)?;
        let x = self.check(x)?;
        if x.is_zero() {
            return Err(FieldError::ZeroLog);
        }
        Ok(t.log[x.0 as usize] as u64)
    }

    /// `α^k` for any `k` (reduced modulo the group order).
    pub fn exp(&self, k: u64) -> FieldElem {
        let k = k % self.order();
        match &self.tables {
            Some(t) => FieldElem(t.exp[k as usize] as u64),
            None => self.pow(self.alpha(), k),
        }
    }

    /// Unchecked table access for hot loops: `log` of a nonzero element.
    #[inline]
    pub(crate) fn log_unchecked(&self, x: FieldElem) -> u64 {
        self.tables.as_ref().expect("dlog table").log[x.0 as usize] as u64
    }

    /// Unchecked table access for hot loops: `α^k` with `k < order`.
    #[inline]
    pub(crate) fn exp_unchecked(&self, k: u64) -> FieldElem {
        FieldElem(self.tables.as_ref().expect("dlog table").exp[k as usize] as u64)
    }
}
