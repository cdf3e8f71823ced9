//! Checks against independent reference computations that share no code
//! with the library's table-driven paths.

use corrspec::qform::{rank_and_sign, Analyzer, ExpSumMethod};
use corrspec::spectrum::{ClassTable, Spectrum};
use corrspec::{validate_params, CorrTag, FieldDesc, FieldElem, FieldOptions, Instance, Method, QuadValue};
use num_complex::Complex64;

/// Polynomials over F_p modulo a monic modulus, schoolbook style.
struct NaiveField {
    p: u64,
    modulus: Vec<u64>,
}

impl NaiveField {
    fn n(&self) -> usize {
        self.modulus.len() - 1
    }

    fn mul(&self, x: &[u64], y: &[u64]) -> Vec<u64> {
        let n = self.n();
        let mut prod = vec![0u64; 2 * n];
        for (i, a) in x.iter().enumerate() {
            for (j, b) in y.iter().enumerate() {
                prod[i + j] = (prod[i + j] + a * b) % self.p;
            }
        }
        for k in (n..2 * n).rev() {
            let c = prod[k];
            if c == 0 {
                continue;
            }
            for (j, m) in self.modulus[..n].iter().enumerate() {
                prod[k - n + j] = (prod[k - n + j] + self.p * self.p - c * m) % self.p;
            }
            prod[k] = 0;
        }
        prod.truncate(n);
        prod
    }

    fn pow(&self, x: &[u64], mut k: u64) -> Vec<u64> {
        let mut acc = self.one();
        let mut base = x.to_vec();
        while k > 0 {
            if k & 1 == 1 {
                acc = self.mul(&acc, &base);
            }
            base = self.mul(&base, &base);
            k >>= 1;
        }
        acc
    }

    fn one(&self) -> Vec<u64> {
        let mut v = vec![0; self.n()];
        v[0] = 1;
        v
    }

    fn x(&self) -> Vec<u64> {
        let mut v = vec![0; self.n()];
        if self.n() == 1 {
            v[0] = (self.p - self.modulus[0]) % self.p;
        } else {
            v[1] = 1;
        }
        v
    }

    /// Absolute trace as the sum of Frobenius conjugates.
    fn trace(&self, x: &[u64]) -> u64 {
        let mut acc = vec![0u64; self.n()];
        let mut y = x.to_vec();
        for _ in 0..self.n() {
            for (a, b) in acc.iter_mut().zip(&y) {
                *a = (*a + b) % self.p;
            }
            y = self.pow(&y, self.p);
        }
        assert!(acc[1..].iter().all(|&c| c == 0), "trace lies in F_p");
        acc[0]
    }
}

/// m-sequence `Tr(x^t)` and `C_d(τ)` in floating point, from scratch.
fn naive_spectrum(p: u64, modulus: &[u64], d: u64) -> Vec<Complex64> {
    let nf = NaiveField {
        p,
        modulus: modulus.to_vec(),
    };
    let period = p.pow(nf.n() as u32) - 1;
    let x = nf.x();
    let mut seq = Vec::with_capacity(period as usize);
    let mut cur = nf.one();
    for _ in 0..period {
        seq.push(nf.trace(&cur));
        cur = nf.mul(&cur, &x);
    }
    assert_eq!(cur, nf.one(), "x has full order");
    let omega = |k: u64| Complex64::from_polar(1.0, std::f64::consts::TAU * (k % p) as f64 / p as f64);
    (0..period)
        .map(|tau| {
            (0..period)
                .map(|t| {
                    let a = seq[((t + tau) % period) as usize];
                    let b = seq[((d * t) % period) as usize];
                    omega(a + p - b)
                })
                .sum()
        })
        .collect()
}

fn instance(p: u64, m: u32, e: u32) -> Instance {
    Instance::build(p, m, e, &FieldOptions::default()).unwrap()
}

#[test]
fn direct_spectrum_matches_naive_float() {
    for (p, m, e) in [(5, 1, 1), (13, 1, 1)] {
        let inst = instance(p, m, e);
        let naive = naive_spectrum(p, inst.field().modulus(), inst.params().d);
        let values = Spectrum::new(&inst).sweep(Method::Direct).unwrap();
        for (v, z) in values.iter().zip(&naive) {
            assert!(z.im.abs() < 1e-8, "real correlation");
            assert!((v.corr.to_f64() - z.re).abs() < 1e-8, "τ = {}: {} vs {}", v.tau, v.corr, z);
        }
    }
}

#[test]
fn sums_path_equals_definition_everywhere() {
    for (p, m, e) in [(5, 1, 1), (13, 1, 1), (5, 3, 1)] {
        let inst = instance(p, m, e);
        let sp = Spectrum::new(&inst);
        for tau in 0..inst.params().period {
            assert_eq!(
                sp.correlation_via_sums(tau).unwrap(),
                inst.cross_correlation_direct(tau).unwrap(),
                "{:?} τ = {tau}",
                (p, m, e)
            );
        }
    }
}

/// The second-least primitive polynomial of degree `n`, found by brute force.
fn alternative_modulus(p: u64, n: u32) -> Vec<u64> {
    let canonical = FieldDesc::build(p, n, &FieldOptions::default()).unwrap();
    let count = p.pow(n);
    (0..count)
        .map(|k| {
            let mut coeffs: Vec<u64> = (0..n).map(|i| (k / p.pow(i)) % p).collect();
            coeffs.push(1);
            coeffs
        })
        .find(|c| c.as_slice() != canonical.modulus() && FieldDesc::with_modulus(p, n, c, &FieldOptions::default()).is_ok())
        .unwrap()
}

#[test]
fn spectrum_is_independent_of_modulus() {
    for (p, m, e, want) in [
        (5, 1, 1, [6, 6, 6, 3, 3, 0]),
        (5, 3, 1, [5796, 2646, 3906, 1575, 1575, 126]),
    ] {
        let params = validate_params(p, m, e).unwrap();
        let modulus = alternative_modulus(p, 2 * m);
        let field = FieldDesc::with_modulus(p, 2 * m, &modulus, &FieldOptions::default()).unwrap();
        assert_ne!(field.modulus(), FieldDesc::build(p, 2 * m, &FieldOptions::default()).unwrap().modulus());
        let inst = Instance::new(params, field).unwrap();
        let sp = Spectrum::new(&inst);
        for method in [Method::Direct, Method::RankFast] {
            let r = sp.full_spectrum(method);
            assert_eq!(r.count_vector(), want, "{modulus:?} {method}");
            assert!(r.all_pass());
        }
    }
}

#[test]
fn kernel_solver_matches_exhaustive_count() {
    let inst = instance(5, 1, 1);
    let f = inst.field();
    let an = Analyzer::new(&inst);
    for a in f.elements() {
        for b in f.elements() {
            if a.is_zero() && b.is_zero() {
                continue;
            }
            assert_eq!(an.kernel_size(a, b).unwrap(), an.kernel_size_exhaustive(a, b));
        }
    }
    let inst = instance(5, 3, 3);
    let f = inst.field();
    let an = Analyzer::new(&inst);
    for tau in (0..inst.params().period).step_by(251) {
        let (a, b) = (f.from_int(-1), f.exp(tau));
        assert_eq!(an.kernel_size(a, b).unwrap(), an.kernel_size_exhaustive(a, b));
    }
}

#[test]
fn gram_matrix_matches_polarization_by_field_trace() {
    let inst = instance(13, 1, 1);
    let f = inst.field();
    let an = Analyzer::new(&inst);
    let q = |a: FieldElem, b: FieldElem, x: FieldElem| -> u64 {
        let pm = 13u64;
        let t1 = f.mul(a, f.pow(x, pm + 1));
        let t2 = f.mul(b, f.pow(x, pm * 13 + 1));
        f.abs_trace(f.add(t1, t2))
    };
    for (ai, bi) in [(1u64, 2u64), (0, 5), (7, 0), (100, 33), (168, 1)] {
        let (a, b) = (FieldElem::from_index(ai), FieldElem::from_index(bi));
        for x in f.elements().step_by(5) {
            assert_eq!(an.eval_qform(a, b, x), q(a, b, x));
        }
        let g = an.gram_matrix(a, b);
        let basis = [FieldElem::ONE, f.alpha()];
        for i in 0..2 {
            for j in 0..2 {
                let both = q(a, b, f.add(basis[i], basis[j]));
                let twice = (both + 26 - q(a, b, basis[i]) - q(a, b, basis[j])) % 13;
                assert_eq!(2 * g[i][j] % 13, twice);
            }
        }
    }
}

#[test]
fn rank_sign_equals_direct_for_every_main_form() {
    for (p, m, e) in [(5, 1, 1), (13, 1, 1), (5, 3, 3)] {
        let inst = instance(p, m, e);
        let f = inst.field();
        let an = Analyzer::new(&inst);
        for tau in 0..inst.params().period {
            let (a, b) = (f.from_int(-1), f.exp(tau));
            assert_eq!(
                an.exp_sum(a, b, ExpSumMethod::Direct).unwrap(),
                an.exp_sum(a, b, ExpSumMethod::RankSign).unwrap()
            );
        }
    }
}

#[test]
fn diagonalization_preserves_square_class() {
    // diag(1, 2) over F_5 and its congruent image under [[1,1],[0,1]].
    let d = rank_and_sign(&[vec![1, 1], vec![1, 3]], 5);
    assert_eq!((d.rank, d.det_class), (2, -1));
    let d = rank_and_sign(&[vec![0, 2, 0], vec![2, 0, 0], vec![0, 0, 0]], 13);
    assert_eq!(d.rank, 2);
    // det of the nonzero block is -4, a square mod 13 since -1 is.
    assert_eq!(d.det_class, 1);
}

#[test]
fn class_values_cover_the_closed_form_values() {
    let params = validate_params(5, 3, 1).unwrap();
    let table = ClassTable::new(&params);
    let got: Vec<String> = table.classes().iter().map(|c| c.value.to_string()).collect();
    assert_eq!(got, ["-1", "124", "-126", "123/2 + 125/2·√5", "123/2 - 125/2·√5", "-251"]);
    assert_eq!(CorrTag::ENeg.value(&params), QuadValue::integer(5, -251));
}
