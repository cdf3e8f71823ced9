//! Scalar arithmetic modulo a small prime.

pub(crate) fn pow_mod(b: u64, mut e: u64, m: u64) -> u64 {
    let m = m as u128;
    let mut r = 1u128 % m;
    let mut b = b as u128 % m;
    while e > 0 {
        if e & 1 == 1 {
            r = r * b % m;
        }
        b = b * b % m;
        e >>= 1;
    }
    r as u64
}

/// Inverse modulo the prime `p`; `a` must be nonzero mod `p`.
pub(crate) fn inv_mod(a: u64, p: u64) -> u64 {
    debug_assert!(!a.is_multiple_of(p));
    pow_mod(a, p - 2, p)
}

/// Legendre symbol `(a/p)` for an odd prime `p`.
pub(crate) fn legendre(a: u64, p: u64) -> i8 {
    let a = a % p;
    if a == 0 {
        0
    } else if pow_mod(a, (p - 1) / 2, p) == 1 {
        1
    } else {
        -1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_mod_5_and_13() {
        let l5: Vec<i8> = (0..5).map(|a| legendre(a, 5)).collect();
        assert_eq!(l5, vec![0, 1, -1, -1, 1]);
        let squares13: Vec<u64> = (1..13).filter(|&a| legendre(a, 13) == 1).collect();
        assert_eq!(squares13, vec![1, 3, 4, 9, 10, 12]);
    }

    #[test]
    fn inverses() {
        for a in 1..13 {
            assert_eq!(a * inv_mod(a, 13) % 13, 1);
        }
    }
}
