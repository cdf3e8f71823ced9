//! Dense polynomials over F_p, used to search for the canonical modulus and
//! to multiply field elements when no log table is available.
//!
//! Coefficient vectors are little-endian: `a[i]` is the coefficient of `x^i`.

use crate::modp::pow_mod;

/// `a * b mod modulus` over F_p. `modulus` is monic of degree `n = modulus.len() - 1`;
/// `a` and `b` have length `n`.
pub(crate) fn mulmod(a: &[u64], b: &[u64], modulus: &[u64], p: u64) -> Vec<u64> {
    let n = modulus.len() - 1;
    let mut prod = vec![0u64; 2 * n - 1];
    for (i, &ai) in a.iter().enumerate() {
        if ai == 0 {
            continue;
        }
        for (j, &bj) in b.iter().enumerate() {
            prod[i + j] = ((prod[i + j] as u128 + ai as u128 * bj as u128) % p as u128) as u64;
        }
    }
    reduce(&mut prod, modulus, p);
    prod.truncate(n);
    prod
}

/// Reduces `r` in place modulo the monic `modulus`; afterwards only the low
/// `n` coefficients are meaningful.
pub(crate) fn reduce(r: &mut [u64], modulus: &[u64], p: u64) {
    let n = modulus.len() - 1;
    for k in (n..r.len()).rev() {
        let t = r[k];
        if t == 0 {
            continue;
        }
        r[k] = 0;
        // x^k = x^{k-n} * x^n and x^n = -(c_0 + ... + c_{n-1} x^{n-1}).
        for (i, &c) in modulus[..n].iter().enumerate() {
            let idx = k - n + i;
            let tc = (t as u128 * c as u128 % p as u128) as u64;
            r[idx] = (r[idx] + (p - tc)) % p;
        }
    }
}

/// `x^e mod modulus`.
pub(crate) fn pow_x(mut e: u64, modulus: &[u64], p: u64) -> Vec<u64> {
    let n = modulus.len() - 1;
    let mut result = vec![0u64; n];
    result[0] = 1;
    let mut base = vec![0u64; n];
    if n == 1 {
        // x ≡ -c_0
        base[0] = (p - modulus[0] % p) % p;
    } else {
        base[1] = 1;
    }
    while e > 0 {
        if e & 1 == 1 {
            result = mulmod(&result, &base, modulus, p);
        }
        base = mulmod(&base, &base, modulus, p);
        e >>= 1;
    }
    result
}

fn is_one(a: &[u64]) -> bool {
    a[0] == 1 && a[1..].iter().all(|&c| c == 0)
}

/// Distinct prime factors by trial division.
pub(crate) fn prime_factors(mut v: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut q = 2u64;
    while q * q <= v {
        if v.is_multiple_of(q) {
            out.push(q);
            while v.is_multiple_of(q) {
                v /= q;
            }
        }
        q += if q == 2 { 1 } else { 2 };
    }
    if v > 1 {
        out.push(v);
    }
    out
}

pub(crate) fn is_prime(v: u64) -> bool {
    if v < 2 {
        return false;
    }
    if v.is_multiple_of(2) {
        return v == 2;
    }
    let mut q = 3u64;
    while q * q <= v {
        if v.is_multiple_of(q) {
            return false;
        }
        q += 2;
    }
    true
}

/// True when the residue of `x` has multiplicative order exactly `order = p^n - 1`
/// in F_p[x]/(modulus). This forces the quotient ring to be a field, so the
/// modulus is irreducible as well as primitive.
pub(crate) fn is_primitive(modulus: &[u64], p: u64, order: u64, factors: &[u64]) -> bool {
    if modulus[0].is_multiple_of(p) {
        return false;
    }
    if !is_one(&pow_x(order, modulus, p)) {
        return false;
    }
    factors
        .iter()
        .all(|&q| !is_one(&pow_x(order / q, modulus, p)))
}

/// Least primitive root modulo the prime `p`.
pub(crate) fn least_primitive_root(p: u64) -> u64 {
    if p == 2 {
        return 1;
    }
    let factors = prime_factors(p - 1);
    (2..p)
        .find(|&g| factors.iter().all(|&q| pow_mod(g, (p - 1) / q, p) != 1))
        .expect("every prime has a primitive root")
}

/// The canonical modulus: the first monic degree-`n` polynomial, in ascending
/// order of the tuple `(c_{n-1}, ..., c_0)`, whose root is primitive.
///
/// For `n = 1` the modulus is `x - g` with `g` the least primitive root, so
/// that the generator is the smallest primitive residue.
pub(crate) fn canonical_modulus(p: u64, n: u32, order: u64) -> Vec<u64> {
    if n == 1 {
        let g = least_primitive_root(p);
        return vec![(p - g) % p, 1];
    }
    let factors = prime_factors(order);
    let n = n as usize;
    let mut modulus = vec![0u64; n + 1];
    modulus[n] = 1;
    loop {
        if is_primitive(&modulus, p, order, &factors) {
            return modulus;
        }
        // Odometer increment with c_0 as the least significant digit.
        let mut i = 0;
        loop {
            assert!(i < n, "a primitive polynomial always exists");
            modulus[i] += 1;
            if modulus[i] < p {
                break;
            }
            modulus[i] = 0;
            i += 1;
        }
    }
}
