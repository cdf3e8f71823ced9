//! The trace quadratic forms `q_{a,b}(x) = Tr(a x^{p^m+1} + b x^{p^{m+e}+1})`
//! over GF(p^{2m}) and their exponential sums `E(a,b) = Σ_x ω^{q_{a,b}(x)}`.
//!
//! `E(a,b)` is available two ways: by direct exact summation, and from the
//! rank `r` and determinant class `η(Δ)` of the form as `η(Δ)·p^{n-r/2}`
//! (valid since the one-variable Gauss sum over F_p is `+√p` for
//! `p ≡ 1 mod 4`). The rank itself comes from the radical of the form, which
//! is the kernel of the F_{p^e}-linearized polynomial
//! `L(y) = b^{p^{m+e}} y^{p^{2e}} + (a^{p^{m+e}} + a^{p^e}) y^{p^e} + b y`,
//! and independently from congruence-diagonalizing the Gram matrix.

use std::collections::BTreeMap;
use std::io::{self, Write};

use rayon::prelude::*;
use thiserror::Error;

use crate::audit::Audit;
use crate::cyclotomic::{CycError, CycInt, QuadValue};
use crate::ffield::{FieldDesc, FieldElem};
use crate::modp::{inv_mod, legendre};
use crate::seqgen::Instance;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QFormError {
    #[error("a and b are both zero")]
    ZeroForm,
    #[error("υ must be nonzero")]
    ZeroUpsilon,
    #[error(transparent)]
    Cyclotomic(#[from] CycError),
}

/// How the sign of `E(a,b)` is derived from `η(Δ)`. `Negated` exists only to
/// show that the audits catch a wrong convention.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SignConvention {
    #[default]
    Standard,
    Negated,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExpSumMethod {
    Direct,
    RankSign,
}

/// Rank and determinant class of a symmetric matrix over F_p.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagonalization {
    pub rank: usize,
    /// `η(Δ)` for `Δ` the product of the nonzero diagonal entries; `+1` when empty.
    pub det_class: i8,
    pub pivots: Vec<u64>,
}

/// Everything known about one form `q_{a,b}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QFormAnalysis {
    pub a: FieldElem,
    pub b: FieldElem,
    /// Number of solutions of `L(y) = 0` in GF(p^n).
    pub kernel_size: u64,
    /// `n - log_p(kernel_size)`.
    pub rank: u32,
    /// Rank of the Gram matrix; equals `rank` by the radical argument.
    pub gram_rank: u32,
    pub det_class: i8,
    /// `E(a,b)` from rank and sign.
    pub sum_value: QuadValue,
}

fn swap_sym(a: &mut [u64], n: usize, i: usize, j: usize) {
    if i == j {
        return;
    }
    for c in 0..n {
        a.swap(i * n + c, j * n + c);
    }
    for r in 0..n {
        a.swap(r * n + i, r * n + j);
    }
}

/// Congruence diagonalization of a symmetric matrix over F_p, `p` odd.
///
/// Pivots are taken in index order. A zero pivot is replaced by the lowest
/// later nonzero diagonal entry; if the remaining diagonal is all zero, the
/// lowest nonzero off-diagonal `a_ij` is turned into the diagonal entry
/// `2·a_ij` by adding row/column `j` to row/column `i`.
pub fn rank_and_sign(matrix: &[Vec<u64>], p: u64) -> Diagonalization {
    let a: Vec<u64> = matrix.iter().flatten().map(|&x| x % p).collect();
    diagonalize_flat(a, matrix.len(), p)
}

/// [`rank_and_sign`] on a reduced row-major `n`×`n` matrix.
fn diagonalize_flat(mut a: Vec<u64>, n: usize, p: u64) -> Diagonalization {
    let mut pivots = Vec::new();
    for k in 0..n {
        if a[k * n + k] == 0 {
            if let Some(i) = (k + 1..n).find(|&i| a[i * n + i] != 0) {
                swap_sym(&mut a, n, k, i);
            } else if let Some((i, j)) = (k..n)
                .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
                .find(|&(i, j)| a[i * n + j] != 0)
            {
                for c in 0..n {
                    a[i * n + c] = (a[i * n + c] + a[j * n + c]) % p;
                }
                for r in 0..n {
                    a[r * n + i] = (a[r * n + i] + a[r * n + j]) % p;
                }
                swap_sym(&mut a, n, k, i);
            } else {
                break;
            }
        }
        let pivot = a[k * n + k];
        let inv = inv_mod(pivot, p);
        for i in k + 1..n {
            if a[i * n + k] == 0 {
                continue;
            }
            // Row and column operations together keep the matrix symmetric,
            // so the column pass only has to clear column k.
            let f = a[i * n + k] * inv % p;
            for c in k..n {
                a[i * n + c] = (a[i * n + c] + p * p - f * a[k * n + c]) % p;
            }
            for r in k..n {
                a[r * n + i] = a[i * n + r];
            }
        }
        pivots.push(pivot);
    }
    let delta = pivots.iter().fold(1u64, |acc, &d| acc * d % p);
    Diagonalization {
        rank: pivots.len(),
        det_class: legendre(delta, p),
        pivots,
    }
}

/// Inverse of a square matrix over F_p by Gauss-Jordan elimination.
fn invert_mod_p(matrix: &[Vec<u64>], p: u64) -> Option<Vec<Vec<u64>>> {
    let n = matrix.len();
    let mut a: Vec<Vec<u64>> = matrix
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r: Vec<u64> = row.iter().map(|&x| x % p).collect();
            r.extend((0..n).map(|j| u64::from(i == j)));
            r
        })
        .collect();
    for col in 0..n {
        let piv = (col..n).find(|&r| a[r][col] != 0)?;
        a.swap(col, piv);
        let inv = inv_mod(a[col][col], p);
        for x in a[col].iter_mut() {
            *x = *x * inv % p;
        }
        for r in 0..n {
            if r != col && a[r][col] != 0 {
                let f = a[r][col];
                for c in 0..2 * n {
                    a[r][c] = (a[r][c] + p - f * a[col][c] % p) % p;
                }
            }
        }
    }
    Some(a.into_iter().map(|row| row[n..].to_vec()).collect())
}

/// Coordinates of GF(p^n) over the subfield GF(p^e) in the basis
/// `1, α, …, α^{n/e-1}`, with subfield elements kept inside GF(p^n).
///
/// Elimination works on subfield elements written as `γ^j` with
/// `γ = α^{(p^n-1)/(p^e-1)}`, adding through a Zech table of `log_γ(1 + γ^j)`.
pub struct SubfieldBasis {
    p: u64,
    e: usize,
    dim: usize,
    /// Inverse of the F_p-matrix whose column `k + e·i` is `γ^k α^i`, row-major.
    to_product_basis: Vec<u64>,
    /// `Σ_k w_k γ^k` indexed by `Σ_k w_k p^k`.
    elems: Vec<FieldElem>,
    /// `log_γ` of `elems[idx]`, [`ZERO_LOG`] for zero.
    logs: Vec<u32>,
    /// `log_γ(1 + γ^j)`, [`ZERO_LOG`] where `γ^j = -1`.
    zech: Vec<u32>,
    /// `p^e - 1`
    sub_order: u32,
}

const ZERO_LOG: u32 = u32::MAX;

impl SubfieldBasis {
    pub fn new(field: &FieldDesc, e: u32) -> Self {
        let n = field.degree();
        assert!(e >= 1 && n.is_multiple_of(e), "e divides n");
        let p = field.p();
        let q = p.pow(e);
        let dim = (n / e) as usize;
        let step = field.order() / (q - 1);
        let gamma = field.exp(step);
        let gamma_pows: Vec<FieldElem> = (0..e as u64).map(|k| field.pow(gamma, k)).collect();
        let mut columns = Vec::with_capacity(n as usize);
        for i in 0..dim {
            let alpha_i = field.exp(i as u64);
            for g in &gamma_pows {
                columns.push(field.coords(field.mul(*g, alpha_i)));
            }
        }
        let matrix: Vec<Vec<u64>> = (0..n as usize)
            .map(|r| columns.iter().map(|col| col[r]).collect())
            .collect();
        let to_product_basis = invert_mod_p(&matrix, p)
            .expect("γ^k α^i is an F_p-basis")
            .concat();
        let elems: Vec<FieldElem> = (0..q)
            .map(|idx| {
                let mut rest = idx;
                gamma_pows.iter().fold(FieldElem::ZERO, |acc, &g| {
                    let w = rest % p;
                    rest /= p;
                    field.add(acc, field.scale(w, g))
                })
            })
            .collect();
        let sub_log = |x: FieldElem| -> u32 {
            if x.is_zero() {
                return ZERO_LOG;
            }
            let k = field.dlog(x).expect("dlog table");
            debug_assert_eq!(k % step, 0, "element of the subfield");
            (k / step) as u32
        };
        let logs = elems.iter().map(|&x| sub_log(x)).collect();
        let zech = (0..q - 1)
            .map(|j| sub_log(field.add(FieldElem::ONE, field.exp(j * step))))
            .collect();
        SubfieldBasis {
            p,
            e: e as usize,
            dim,
            to_product_basis,
            elems,
            logs,
            zech,
            sub_order: (q - 1) as u32,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `z = Σ_i coords[i]·α^i` with every `coords[i]` in GF(p^e).
    pub fn coords(&self, z: FieldElem) -> Vec<FieldElem> {
        let mut idx = vec![0; self.dim];
        self.coord_indices(z, &mut idx);
        idx.into_iter().map(|i| self.elems[i]).collect()
    }

    /// Like [`Self::coords`], each coordinate as `log_γ` or [`ZERO_LOG`].
    fn log_coords(&self, z: FieldElem, out: &mut [u32]) {
        let mut idx = [0usize; 64];
        self.coord_indices(z, &mut idx[..self.dim]);
        for (o, &i) in out.iter_mut().zip(&idx[..self.dim]) {
            *o = self.logs[i];
        }
    }

    fn coord_indices(&self, z: FieldElem, out: &mut [usize]) {
        let p = self.p;
        let n = self.dim * self.e;
        let mut v = [0u64; 64];
        let mut rest = z.index();
        for d in v.iter_mut().take(n) {
            *d = rest % p;
            rest /= p;
        }
        let mut w = [0u64; 64];
        for (r, wr) in w.iter_mut().take(n).enumerate() {
            let row = &self.to_product_basis[r * n..(r + 1) * n];
            *wr = row.iter().zip(&v[..n]).map(|(a, b)| a * b).sum::<u64>() % p;
        }
        for (i, slot) in out.iter_mut().enumerate() {
            let digits = &w[self.e * i..self.e * (i + 1)];
            *slot = digits.iter().rev().fold(0u64, |acc, &d| acc * p + d) as usize;
        }
    }

    fn mul_log(&self, a: u32, b: u32) -> u32 {
        if a == ZERO_LOG || b == ZERO_LOG {
            return ZERO_LOG;
        }
        let s = a + b;
        if s >= self.sub_order {
            s - self.sub_order
        } else {
            s
        }
    }

    fn add_log(&self, a: u32, b: u32) -> u32 {
        if a == ZERO_LOG {
            return b;
        }
        if b == ZERO_LOG {
            return a;
        }
        let d = if b >= a { b - a } else { b + self.sub_order - a };
        match self.zech[d as usize] {
            ZERO_LOG => ZERO_LOG,
            z => self.mul_log(a, z),
        }
    }

    /// `-1 = γ^{(p^e-1)/2}` since `p` is odd.
    fn neg_log(&self, a: u32) -> u32 {
        self.mul_log(a, self.sub_order / 2)
    }

    fn inv_log(&self, a: u32) -> u32 {
        (self.sub_order - a) % self.sub_order
    }

    /// Rank of a `dim`×`dim` row-major matrix of `log_γ` entries.
    fn rank(&self, rows: &mut [u32]) -> usize {
        let dim = self.dim;
        let mut rank = 0;
        for col in 0..dim {
            let Some(piv) = (rank..dim).find(|&r| rows[r * dim + col] != ZERO_LOG) else {
                continue;
            };
            if piv != rank {
                for c in 0..dim {
                    rows.swap(rank * dim + c, piv * dim + c);
                }
            }
            let inv = self.inv_log(rows[rank * dim + col]);
            for r in rank + 1..dim {
                if rows[r * dim + col] == ZERO_LOG {
                    continue;
                }
                let f = self.neg_log(self.mul_log(rows[r * dim + col], inv));
                for c in col..dim {
                    let t = self.mul_log(f, rows[rank * dim + c]);
                    rows[r * dim + c] = self.add_log(rows[r * dim + c], t);
                }
            }
            rank += 1;
        }
        rank
    }
}

/// Quadratic-form machinery bound to one instance.
pub struct Analyzer<'a> {
    inst: &'a Instance,
    subfield: SubfieldBasis,
    /// `k·(p^m+1) mod N`
    main_exp: Vec<u32>,
    /// `k·(p^{m+e}+1) mod N`
    cross_exp: Vec<u32>,
    /// `p^k mod N`, `k < n`
    frob_exp: Vec<u64>,
    /// `log(α^i + α^j)` for `i < j < n`, row-major over the upper triangle.
    pair_logs: Vec<Option<u64>>,
    sign: SignConvention,
}

impl<'a> Analyzer<'a> {
    pub fn new(inst: &'a Instance) -> Self {
        Self::with_sign(inst, SignConvention::Standard)
    }

    pub fn with_sign(inst: &'a Instance, sign: SignConvention) -> Self {
        let params = inst.params();
        let order = params.period;
        let field = inst.field();
        let mult = |k: u32| (params.pow(k) + 1) % order;
        let (m1, m2) = (mult(params.m), mult(params.m + params.e));
        let table = |mul: u64| -> Vec<u32> {
            (0..order)
                .map(|k| ((k as u128 * mul as u128) % order as u128) as u32)
                .collect()
        };
        let frob_exp = (0..params.n).map(|k| params.pow(k) % order).collect();
        let n = params.n as u64;
        let pair_logs = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .map(|(i, j)| {
                let x = field.add(field.exp(i), field.exp(j));
                (!x.is_zero()).then(|| field.log_unchecked(x))
            })
            .collect();
        Analyzer {
            inst,
            subfield: SubfieldBasis::new(field, params.e),
            main_exp: table(m1),
            cross_exp: table(m2),
            frob_exp,
            pair_logs,
            sign,
        }
    }

    pub fn instance(&self) -> &Instance {
        self.inst
    }

    pub fn subfield(&self) -> &SubfieldBasis {
        &self.subfield
    }

    fn field(&self) -> &FieldDesc {
        self.inst.field()
    }

    /// `x^{p^k}` through the log table.
    fn frob(&self, x: FieldElem, k: u32) -> FieldElem {
        if x.is_zero() {
            return x;
        }
        let f = self.field();
        let k = (k % self.inst.params().n) as usize;
        let e = (f.log_unchecked(x) as u128 * self.frob_exp[k] as u128) % f.order() as u128;
        f.exp_unchecked(e as u64)
    }

    /// `Tr(a·α^{exps[k]})` as a residue, zero when `a = 0`.
    #[inline]
    fn trace_term(&self, log_a: Option<u64>, exps: &[u32], k: usize) -> u32 {
        match log_a {
            Some(la) => self.inst.s2(la as usize + exps[k] as usize),
            None => 0,
        }
    }

    fn log_opt(&self, x: FieldElem) -> Option<u64> {
        (!x.is_zero()).then(|| self.field().log_unchecked(x))
    }

    /// `q_{a,b}(x)` as a residue mod p.
    pub fn eval_qform(&self, a: FieldElem, b: FieldElem, x: FieldElem) -> u64 {
        if x.is_zero() {
            return 0;
        }
        let k = self.field().log_unchecked(x) as usize;
        let p = self.inst.params().p as u32;
        let t1 = self.trace_term(self.log_opt(a), &self.main_exp, k);
        let t2 = self.trace_term(self.log_opt(b), &self.cross_exp, k);
        ((t1 + t2) % p) as u64
    }

    /// The linearized polynomial `L(y)` of the radical of `q_{a,b}`.
    pub fn linearized(&self, a: FieldElem, b: FieldElem, y: FieldElem) -> FieldElem {
        let params = self.inst.params();
        let (m, e) = (params.m, params.e);
        let f = self.field();
        let c2 = self.frob(b, m + e);
        let c1 = f.add(self.frob(a, m + e), self.frob(a, e));
        let t2 = f.mul(c2, self.frob(y, 2 * e));
        let t1 = f.mul(c1, self.frob(y, e));
        f.add(f.add(t2, t1), f.mul(b, y))
    }

    /// Solution count of `L(y) = 0`, from the rank of `L` as an
    /// (n/e)×(n/e) matrix over GF(p^e). This is one of `1, p^e, p^{2e}`
    /// whenever `b ≠ 0`; for `b = 0` it is `1` or, when the form vanishes
    /// identically, `p^n`.
    pub fn kernel_size(&self, a: FieldElem, b: FieldElem) -> Result<u64, QFormError> {
        Ok(self.inst.params().p.pow(self.kernel_log(a, b)?))
    }

    /// `log_p` of [`Self::kernel_size`].
    pub fn kernel_log(&self, a: FieldElem, b: FieldElem) -> Result<u32, QFormError> {
        if a.is_zero() && b.is_zero() {
            return Err(QFormError::ZeroForm);
        }
        let params = self.inst.params();
        let (m, e) = (params.m, params.e);
        let f = self.field();
        let order = f.order() as u128;
        let c2 = self.frob(b, m + e);
        let c1 = f.add(self.frob(a, m + e), self.frob(a, e));
        let (pe, p2e) = (self.frob_exp[e as usize] as u128, self.frob_exp[(2 * e % params.n) as usize] as u128);
        let dim = self.subfield.dim();
        let mut rows = vec![ZERO_LOG; dim * dim];
        let mut col = vec![ZERO_LOG; dim];
        for j in 0..dim {
            // L(α^j), with α^{j·p^k} read straight from the exp table.
            let y = f.exp_unchecked(j as u64);
            let y_e = f.exp_unchecked((j as u128 * pe % order) as u64);
            let y_2e = f.exp_unchecked((j as u128 * p2e % order) as u64);
            let value = f.add(f.add(f.mul(c2, y_2e), f.mul(c1, y_e)), f.mul(b, y));
            self.subfield.log_coords(value, &mut col);
            for (i, &c) in col.iter().enumerate() {
                rows[i * dim + j] = c;
            }
        }
        let rank = self.subfield.rank(&mut rows);
        Ok(e * (dim - rank) as u32)
    }

    /// Root count of `L(y)` by trying every `y`.
    pub fn kernel_size_exhaustive(&self, a: FieldElem, b: FieldElem) -> u64 {
        self.field()
            .elements()
            .filter(|&y| self.linearized(a, b, y).is_zero())
            .count() as u64
    }

    /// All roots of `L(y)`.
    pub fn kernel_elements(&self, a: FieldElem, b: FieldElem) -> Vec<FieldElem> {
        self.field()
            .elements()
            .filter(|&y| self.linearized(a, b, y).is_zero())
            .collect()
    }

    /// Gram matrix of `q_{a,b}` in the power basis `α^0, …, α^{n-1}`.
    pub fn gram_matrix(&self, a: FieldElem, b: FieldElem) -> Vec<Vec<u64>> {
        let n = self.inst.params().n as usize;
        self.gram_flat(a, b).chunks(n).map(<[u64]>::to_vec).collect()
    }

    fn gram_flat(&self, a: FieldElem, b: FieldElem) -> Vec<u64> {
        let p = self.inst.params().p;
        let n = self.inst.params().n as usize;
        let inv2 = p.div_ceil(2);
        let (la, lb) = (self.log_opt(a), self.log_opt(b));
        let q = |log_x: Option<u64>| -> u64 {
            log_x.map_or(0, |k| {
                let k = k as usize;
                (self.trace_term(la, &self.main_exp, k) + self.trace_term(lb, &self.cross_exp, k)) as u64 % p
            })
        };
        let mut g = vec![0u64; n * n];
        for i in 0..n {
            g[i * n + i] = q(Some(i as u64));
        }
        let mut pairs = self.pair_logs.iter();
        for i in 0..n {
            for j in i + 1..n {
                let both = q(*pairs.next().expect("one log per pair"));
                let polar = (both + 2 * p - g[i * n + i] - g[j * n + j]) % p;
                let v = polar * inv2 % p;
                g[i * n + j] = v;
                g[j * n + i] = v;
            }
        }
        g
    }

    /// Kernel rank and Gram sign, without building `E(a,b)`.
    pub(crate) fn rank_and_class(&self, a: FieldElem, b: FieldElem) -> Result<(u32, i8), QFormError> {
        let params = self.inst.params();
        let rank = params.n - self.kernel_log(a, b)?;
        let diag = diagonalize_flat(self.gram_flat(a, b), params.n as usize, params.p);
        Ok((rank, diag.det_class))
    }

    /// `η(Δ)·p^{n - r/2}` for a given rank and determinant class.
    pub(crate) fn signed_magnitude(&self, rank: u32, det_class: i8) -> QuadValue {
        let params = self.inst.params();
        let mag = QuadValue::p_power_half(params.p, 2 * params.n - rank);
        let positive = (det_class >= 0) == (self.sign == SignConvention::Standard);
        if positive {
            mag
        } else {
            -&mag
        }
    }

    /// Full analysis: kernel rank, Gram rank and sign, and `E(a,b)` from them.
    pub fn analyze(&self, a: FieldElem, b: FieldElem) -> Result<QFormAnalysis, QFormError> {
        let n = self.inst.params().n;
        let kernel_log = self.kernel_log(a, b)?;
        let rank = n - kernel_log;
        let diag = rank_and_sign(&self.gram_matrix(a, b), self.inst.params().p);
        Ok(QFormAnalysis {
            a,
            b,
            kernel_size: self.inst.params().p.pow(kernel_log),
            rank,
            gram_rank: diag.rank as u32,
            det_class: diag.det_class,
            sum_value: self.signed_magnitude(rank, diag.det_class),
        })
    }

    /// Histogram of `q_{a,b}(x)` over all `x`.
    pub(crate) fn value_counts(&self, a: FieldElem, b: FieldElem) -> Vec<u64> {
        let p = self.inst.params().p as u32;
        let (la, lb) = (self.log_opt(a), self.log_opt(b));
        let mut counts = vec![0u64; p as usize];
        counts[0] += 1; // x = 0
        for k in 0..self.main_exp.len() {
            let v = self.trace_term(la, &self.main_exp, k) + self.trace_term(lb, &self.cross_exp, k);
            counts[(v % p) as usize] += 1;
        }
        counts
    }

    /// `E(a,b)` by direct exact summation over all of GF(p^n).
    pub fn exp_sum_exact(&self, a: FieldElem, b: FieldElem) -> CycInt {
        CycInt::from_residue_counts(self.inst.params().p, &self.value_counts(a, b))
    }

    pub fn exp_sum(
        &self,
        a: FieldElem,
        b: FieldElem,
        method: ExpSumMethod,
    ) -> Result<QuadValue, QFormError> {
        match method {
            ExpSumMethod::Direct => Ok(self.exp_sum_exact(a, b).recognize_quadratic()?),
            ExpSumMethod::RankSign => {
                if a.is_zero() && b.is_zero() {
                    return Ok(QuadValue::integer(self.inst.params().p, self.field().size()));
                }
                let diag = rank_and_sign(&self.gram_matrix(a, b), self.inst.params().p);
                Ok(self.signed_magnitude(diag.rank as u32, diag.det_class))
            }
        }
    }

    /// Roots of `g_υ(z) = z^{p^e+1} - υz + υ` in GF(p^n), by trying every `z`.
    pub fn g_upsilon_roots(&self, upsilon: FieldElem) -> Result<Vec<FieldElem>, QFormError> {
        if upsilon.is_zero() {
            return Err(QFormError::ZeroUpsilon);
        }
        let f = self.field();
        let q1 = self.inst.params().pow(self.inst.params().e) + 1;
        Ok(f.elements()
            .filter(|&z| {
                let lhs = f.add(f.pow(z, q1), upsilon);
                lhs == f.mul(upsilon, z)
            })
            .collect())
    }

    pub fn g_upsilon_root_count(&self, upsilon: FieldElem) -> Result<u64, QFormError> {
        Ok(self.g_upsilon_roots(upsilon)?.len() as u64)
    }

    /// Root counts of `g_υ` for every nonzero `υ` at once. Each `z ∉ {0, 1}`
    /// is a root of exactly one `g_υ`, namely `υ = z^{p^e+1}/(z - 1)`, so
    /// bucketing all `z` by that `υ` counts every (υ, z) incidence.
    pub fn g_upsilon_census(&self) -> GUpsilonCensus {
        let f = self.field();
        let params = self.inst.params();
        let q1 = params.pow(params.e) + 1;
        let size = f.size() as usize;
        let mut counts = vec![0u32; size];
        let mut root = vec![FieldElem::ZERO; size];
        for z in f.elements().skip(2) {
            if z == FieldElem::ONE {
                continue;
            }
            let zm1 = f.sub(z, FieldElem::ONE);
            let ups = f.div(f.pow(z, q1), zm1).expect("z ≠ 1");
            counts[ups.index() as usize] += 1;
            root[ups.index() as usize] = z;
        }
        let power = params.period / (params.pow(params.e) - 1);
        let mut histogram = BTreeMap::new();
        let mut single_root = 0;
        let mut power_failures = 0;
        for u in 1..size {
            *histogram.entry(counts[u] as u64).or_insert(0u64) += 1;
            if counts[u] == 1 {
                single_root += 1;
                let z0 = root[u];
                if f.pow(f.sub(z0, FieldElem::ONE), power) != FieldElem::ONE {
                    power_failures += 1;
                }
            }
        }
        GUpsilonCensus {
            histogram,
            single_root,
            power_failures,
        }
    }

    /// `Σ_{x≠0} η(x) χ(x)` over GF(p^n), exactly.
    pub fn gauss_sum(&self) -> CycInt {
        let p = self.inst.params().p as usize;
        let seq = self.inst.seq().values();
        let mut counts = vec![0i64; p];
        for (k, &s) in seq.iter().enumerate() {
            counts[s as usize] += if k % 2 == 0 { 1 } else { -1 };
        }
        let top = counts[p - 1];
        let coeffs = counts[..p - 1].iter().map(|&c| (c - top).into()).collect();
        CycInt::new(p as u64, coeffs).expect("p - 1 coefficients")
    }

    /// `Σ_x χ(a x²)` exactly.
    pub fn quadratic_sum(&self, a: FieldElem) -> CycInt {
        let p = self.inst.params().p;
        let n_ord = self.inst.params().period as usize;
        let mut counts = vec![0u64; p as usize];
        counts[0] += 1;
        match self.log_opt(a) {
            None => counts[0] += n_ord as u64,
            Some(la) => {
                for k in 0..n_ord {
                    let idx = (la as usize + 2 * k) % n_ord;
                    counts[self.inst.s2(idx) as usize] += 1;
                }
            }
        }
        CycInt::from_residue_counts(p, &counts)
    }

    /// Checks `G(η, χ) = -p^m` and `Σ_x χ(a x²) = -η(a) p^m` on a spread of `a`.
    pub fn gauss_sum_audit(&self) -> Vec<Audit> {
        let params = self.inst.params();
        let f = self.field();
        let pm = params.pow(params.m) as i64;
        let mut audits = vec![Audit::compare(
            "gauss_sum G(η,χ) = -p^m",
            quad_or_raw(&self.gauss_sum()),
            QuadValue::integer(params.p, -pm).to_string(),
        )];
        let order = params.period;
        let mut exps: Vec<u64> = (0..order.min(8)).collect();
        exps.extend((1..=8).map(|i| order * i / 9 + i % 2));
        exps.sort_unstable();
        exps.dedup();
        let failures: Vec<u64> = exps
            .par_iter()
            .copied()
            .filter(|&k| {
                let a = f.exp(k);
                let expected = QuadValue::integer(params.p, -(f.quad_char(a) as i64) * pm);
                self.quadratic_sum(a).recognize_quadratic().ok() != Some(expected)
            })
            .collect();
        audits.push(Audit::check(
            "quadratic_sum Σχ(ax²) = -η(a)p^m",
            failures.is_empty(),
            format!("{} of {} sampled a fail {:?}", failures.len(), exps.len(), failures),
            format!("0 of {} sampled a fail", exps.len()),
        ));
        audits
    }

    /// The `g_υ` root census as audits.
    pub fn g_upsilon_audit(&self) -> Vec<Audit> {
        let params = self.inst.params();
        let census = self.g_upsilon_census();
        let allowed = [0, 1, 2, params.pow(params.e) + 1];
        let bad: Vec<u64> = census
            .histogram
            .keys()
            .copied()
            .filter(|c| !allowed.contains(c))
            .collect();
        vec![
            Audit::compare(
                "g_upsilon single-root count = p^(n-e)",
                census.single_root,
                params.pow(params.n - params.e),
            ),
            Audit::check(
                "g_upsilon root counts in {0,1,2,p^e+1}",
                bad.is_empty(),
                format!("{:?}", census.histogram),
                format!("keys ⊆ {allowed:?}"),
            ),
            Audit::compare(
                "g_upsilon single root z0 has (z0-1)^((p^n-1)/(p^e-1)) = 1",
                census.power_failures,
                0,
            ),
        ]
    }

    /// Analysis of `q_{-1,c}` for every `c = α^τ`, in τ order.
    pub fn main_form_sweep(&self) -> Result<Vec<QFormAnalysis>, QFormError> {
        let f = self.field();
        let minus_one = f.from_int(-1);
        (0..self.inst.params().period)
            .into_par_iter()
            .map(|tau| self.analyze(minus_one, f.exp(tau)))
            .collect()
    }
}

fn quad_or_raw(x: &CycInt) -> String {
    match x.recognize_quadratic() {
        Ok(q) => q.to_string(),
        Err(_) => format!("{:?}", x.coeffs()),
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GUpsilonCensus {
    /// Root count → number of `υ ∈ GF(p^n)*` with that count.
    pub histogram: BTreeMap<u64, u64>,
    pub single_root: u64,
    /// Single-root `υ` whose root violates the `(p^e-1)`-th power condition.
    pub power_failures: u64,
}

/// Tab-separated dump of the analysis of `q_{-1,c}` for every `c = α^τ`.
pub fn write_analysis<W: Write>(rows: &[QFormAnalysis], field: &FieldDesc, mut w: W) -> io::Result<()> {
    writeln!(w, "dlog_c\tkernel_size\trank\tdet_class\tE_u\tE_v")?;
    for r in rows {
        let tau = field.dlog(r.b).map_err(io::Error::other)?;
        writeln!(
            w,
            "{}\t{}\t{}\t{}\t{}\t{}",
            tau,
            r.kernel_size,
            r.rank,
            r.det_class,
            r.sum_value.u(),
            r.sum_value.v()
        )?;
    }
    Ok(())
}
