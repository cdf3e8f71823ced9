//! Parameters, the m-sequence `s_t = Tr(α^t)` over GF(p^{2m}), its decimation
//! by `d = (p^m+1)²/(2(p^e+1))`, and the definitional cross-correlation
//! `C_d(τ) = Σ_t ω^{s_{t+τ} - s_{dt}}`.

use std::io::{self, BufRead, Write};

use num_complex::Complex64;
use num_integer::Integer;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cyclotomic::CycInt;
use crate::ffield::{poly, FieldDesc, FieldError, FieldOptions};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParamError {
    #[error("p = {0} is not prime")]
    NotPrime(u64),
    #[error("p = {0} does not satisfy p ≡ 1 (mod 4)")]
    NotOneModFour(u64),
    #[error("m = {0} must be an odd positive integer")]
    BadM(u32),
    #[error("e = {e} must be a positive divisor of m = {m}")]
    BadE { e: u32, m: u32 },
    #[error("d = (p^m+1)^2 / (2(p^e+1)) is not an integer")]
    NonIntegralD,
    #[error("p^(2m) does not fit in 64 bits")]
    Overflow,
    #[error("parameter invariant violated: {0}")]
    Invariant(&'static str),
}

#[derive(Debug, Error)]
pub enum SeqError {
    #[error(transparent)]
    Params(#[from] ParamError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("field GF({fp}^{fn_}) does not match parameters p = {p}, n = {n}")]
    FieldMismatch { fp: u64, fn_: u32, p: u64, n: u32 },
    #[error("shift {tau} out of range [0, {period})")]
    ShiftRange { tau: u64, period: u64 },
    #[error("malformed sequence export: {0}")]
    Export(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// A validated `(p, m, e)` with the derived decimation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeqParams {
    pub p: u64,
    pub m: u32,
    pub e: u32,
    pub n: u32,
    pub d: u64,
    /// `p^n - 1`
    pub period: u64,
    /// `gcd(d, p^n - 1)`
    pub gcd_dn: u64,
}

impl SeqParams {
    /// `p^k` as u64; callers stay within `p^{3m}`.
    pub fn pow(&self, k: u32) -> u64 {
        self.p.pow(k)
    }

    /// `p^n`
    pub fn size(&self) -> u64 {
        self.period + 1
    }
}

/// Checks `(p, m, e)` against the required regime and derives `d`.
pub fn validate_params(p: u64, m: u32, e: u32) -> Result<SeqParams, ParamError> {
    if !poly::is_prime(p) {
        return Err(ParamError::NotPrime(p));
    }
    if p % 4 != 1 {
        return Err(ParamError::NotOneModFour(p));
    }
    if m == 0 || m.is_multiple_of(2) {
        return Err(ParamError::BadM(m));
    }
    if e == 0 || !m.is_multiple_of(e) {
        return Err(ParamError::BadE { e, m });
    }
    let n = 2 * m;
    let size = p.checked_pow(n).ok_or(ParamError::Overflow)?;
    let period = size - 1;
    let pm = p.pow(m) as u128;
    let pe = p.pow(e) as u128;
    let num = (pm + 1) * (pm + 1);
    let den = 2 * (pe + 1);
    if !num.is_multiple_of(den) {
        return Err(ParamError::NonIntegralD);
    }
    let d = (num / den) as u64;
    let gcd_dn = d.gcd(&period);
    let half = pm.div_ceil(2) as u64;
    if gcd_dn != half {
        return Err(ParamError::Invariant("gcd(d, p^n - 1) = (p^m + 1)/2"));
    }
    if d.is_multiple_of(2) || half.is_multiple_of(2) {
        return Err(ParamError::Invariant("d and (p^m + 1)/2 are odd"));
    }
    let lhs = d as u128 * (pm * pe + 1) % period as u128;
    if lhs != (pm + 1) % period as u128 {
        return Err(ParamError::Invariant("d(p^(m+e) + 1) ≡ p^m + 1 (mod p^n - 1)"));
    }
    Ok(SeqParams {
        p,
        m,
        e,
        n,
        d,
        period,
        gcd_dn,
    })
}

/// One period of `s_t = Tr^n_1(α^t)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MSeq {
    p: u64,
    values: Vec<u32>,
}

impl MSeq {
    pub fn values(&self) -> &[u32] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `s_t` for any `t`, indexing modulo the period.
    pub fn at(&self, t: u64) -> u32 {
        self.values[(t % self.values.len() as u64) as usize]
    }

    /// Number of occurrences of each residue `0..p`.
    pub fn residue_counts(&self) -> Vec<u64> {
        let mut counts = vec![0u64; self.p as usize];
        for &v in &self.values {
            counts[v as usize] += 1;
        }
        counts
    }
}

fn check_field(params: &SeqParams, field: &FieldDesc) -> Result<(), SeqError> {
    if field.p() != params.p || field.degree() != params.n {
        return Err(SeqError::FieldMismatch {
            fp: field.p(),
            fn_: field.degree(),
            p: params.p,
            n: params.n,
        });
    }
    Ok(())
}

/// Generates `s_t` for `t = 0..p^n-2`. The absolute trace is linear, so it is
/// evaluated once per basis vector `α^i` and then applied to coordinates.
pub fn m_sequence(params: &SeqParams, field: &FieldDesc) -> Result<MSeq, SeqError> {
    check_field(params, field)?;
    let p = params.p;
    let basis_trace: Vec<u64> = (0..params.n as u64)
        .map(|i| field.abs_trace(field.exp(i)))
        .collect();
    let values = (0..params.period)
        .into_par_iter()
        .map(|t| {
            let coords = field.coords(field.exp(t));
            let s: u64 = coords
                .iter()
                .zip(&basis_trace)
                .map(|(c, tr)| c * tr % p)
                .sum();
            (s % p) as u32
        })
        .collect();
    Ok(MSeq { p, values })
}

/// `t -> s_{dt mod period}` over one period of the original sequence.
pub fn decimated_sequence(seq: &MSeq, d: u64) -> Vec<u32> {
    let len = seq.len() as u64;
    (0..len).map(|t| seq.values[((d as u128 * t as u128) % len as u128) as usize]).collect()
}

/// Least `k` dividing `values.len()` with `values[t + k] = values[t]` for all `t`.
pub fn least_period(values: &[u32]) -> usize {
    let len = values.len();
    (1..=len)
        .filter(|k| len.is_multiple_of(*k))
        .find(|&k| (0..len).all(|t| values[t] == values[(t + k) % len]))
        .unwrap_or(len)
}

/// A validated parameter set with its field and both sequences, shared by
/// every correlation path.
pub struct Instance {
    params: SeqParams,
    field: FieldDesc,
    seq: MSeq,
    /// Two concatenated periods of `s`, so `s_{t+τ}` needs no reduction.
    doubled: Vec<u32>,
    decimated: Vec<u32>,
}

impl Instance {
    pub fn new(params: SeqParams, field: FieldDesc) -> Result<Self, SeqError> {
        check_field(&params, &field)?;
        if !field.has_dlog() {
            return Err(FieldError::NoTable.into());
        }
        let seq = m_sequence(&params, &field)?;
        let decimated = decimated_sequence(&seq, params.d);
        let mut doubled = seq.values.clone();
        doubled.extend_from_slice(&seq.values);
        Ok(Instance {
            params,
            field,
            seq,
            doubled,
            decimated,
        })
    }

    /// Validates `(p, m, e)` and builds GF(p^{2m}) with the canonical modulus.
    pub fn build(p: u64, m: u32, e: u32, opts: &FieldOptions) -> Result<Self, SeqError> {
        let params = validate_params(p, m, e)?;
        let field = FieldDesc::build(p, params.n, opts)?;
        Self::new(params, field)
    }

    pub fn params(&self) -> &SeqParams {
        &self.params
    }

    pub fn field(&self) -> &FieldDesc {
        &self.field
    }

    pub fn seq(&self) -> &MSeq {
        &self.seq
    }

    pub fn decimated(&self) -> &[u32] {
        &self.decimated
    }

    /// `s_k` for `0 <= k < 2·period`.
    #[inline]
    pub(crate) fn s2(&self, k: usize) -> u32 {
        self.doubled[k]
    }

    fn check_shift(&self, tau: u64) -> Result<(), SeqError> {
        if tau >= self.params.period {
            return Err(SeqError::ShiftRange {
                tau,
                period: self.params.period,
            });
        }
        Ok(())
    }

    /// Histogram of `s_{t+τ} - s_{dt} mod p` over one period.
    fn difference_counts(&self, tau: u64) -> Vec<u64> {
        let p = self.params.p as u32;
        let mut counts = vec![0u64; p as usize];
        let shifted = &self.doubled[tau as usize..tau as usize + self.decimated.len()];
        for (&a, &b) in shifted.iter().zip(&self.decimated) {
            let diff = if a >= b { a - b } else { a + p - b };
            counts[diff as usize] += 1;
        }
        counts
    }

    /// Exact `C_d(τ)` from the definition.
    pub fn cross_correlation_direct(&self, tau: u64) -> Result<CycInt, SeqError> {
        self.check_shift(tau)?;
        Ok(CycInt::from_residue_counts(
            self.params.p,
            &self.difference_counts(tau),
        ))
    }

    /// `C_d(τ)` accumulated term by term in `f64` from a table of `ω^j`.
    pub fn cross_correlation_float(&self, tau: u64) -> Result<Complex64, SeqError> {
        self.check_shift(tau)?;
        let p = self.params.p as u32;
        let roots: Vec<Complex64> = (0..p)
            .map(|j| Complex64::from_polar(1.0, std::f64::consts::TAU * j as f64 / p as f64))
            .collect();
        let shifted = &self.doubled[tau as usize..tau as usize + self.decimated.len()];
        let mut acc = Complex64::new(0.0, 0.0);
        for (&a, &b) in shifted.iter().zip(&self.decimated) {
            acc += roots[((a + p - b) % p) as usize];
        }
        Ok(acc)
    }
}

/// Writes a sequence as text: a header `# p=.. m=.. e=.. n=.. d=.. period=..`
/// followed by one residue per line.
pub fn write_sequence<W: Write>(params: &SeqParams, values: &[u32], mut w: W) -> io::Result<()> {
    writeln!(
        w,
        "# p={} m={} e={} n={} d={} period={}",
        params.p, params.m, params.e, params.n, params.d, params.period
    )?;
    for v in values {
        writeln!(w, "{v}")?;
    }
    Ok(())
}

/// Parses the format written by [`write_sequence`], re-validating the header.
pub fn read_sequence<R: BufRead>(r: R) -> Result<(SeqParams, Vec<u32>), SeqError> {
    let mut lines = r.lines();
    let header = lines
        .next()
        .ok_or_else(|| SeqError::Export("empty input".into()))??;
    let fields = header
        .strip_prefix("# ")
        .ok_or_else(|| SeqError::Export("missing header".into()))?;
    let get = |key: &str| -> Result<u64, SeqError> {
        fields
            .split_whitespace()
            .find_map(|kv| kv.strip_prefix(key)?.strip_prefix('='))
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| SeqError::Export(format!("header field {key}")))
    };
    let (p, m, e) = (get("p")?, get("m")? as u32, get("e")? as u32);
    let params = validate_params(p, m, e)?;
    if get("d")? != params.d || get("period")? != params.period || get("n")? != params.n as u64 {
        return Err(SeqError::Export("header disagrees with derived parameters".into()));
    }
    let mut values = Vec::new();
    for line in lines {
        let line = line?;
        let v: u32 = line
            .trim()
            .parse()
            .map_err(|_| SeqError::Export(format!("bad residue {line:?}")))?;
        if v as u64 >= p {
            return Err(SeqError::Export(format!("residue {v} out of range")));
        }
        values.push(v);
    }
    Ok((params, values))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validate_examples() {
        let a = validate_params(5, 1, 1).unwrap();
        assert_eq!((a.d, a.gcd_dn, a.period), (3, 3, 24));
        let b = validate_params(5, 3, 1).unwrap();
        assert_eq!((b.d, b.gcd_dn, b.period), (1323, 63, 15624));
        let c = validate_params(5, 3, 3).unwrap();
        assert_eq!(c.d, 63);
        let d = validate_params(13, 1, 1).unwrap();
        assert_eq!(d.d, 14 * 14 / 28);
    }

    #[test]
    fn validate_rejections() {
        assert_eq!(validate_params(7, 1, 1), Err(ParamError::NotOneModFour(7)));
        assert_eq!(validate_params(9, 1, 1), Err(ParamError::NotPrime(9)));
        assert_eq!(validate_params(5, 2, 1), Err(ParamError::BadM(2)));
        assert_eq!(validate_params(5, 3, 2), Err(ParamError::BadE { e: 2, m: 3 }));
        assert_eq!(validate_params(5, 3, 0), Err(ParamError::BadE { e: 0, m: 3 }));
    }

    #[test]
    fn m_sequence_5_1_1() {
        let inst = Instance::build(5, 1, 1, &FieldOptions::default()).unwrap();
        let seq = inst.seq();
        assert_eq!(seq.values()[0], 2);
        assert_eq!(seq.residue_counts(), vec![4, 5, 5, 5, 5]);
        assert_eq!(seq.at(24 + 7), seq.at(7));
        assert_eq!(least_period(inst.decimated()), 8);
    }

    #[test]
    fn identity_decimation() {
        let inst = Instance::build(5, 1, 1, &FieldOptions::default()).unwrap();
        assert_eq!(decimated_sequence(inst.seq(), 1), inst.seq().values());
    }

    #[test]
    fn field_mismatch_is_rejected() {
        let params = validate_params(5, 1, 1).unwrap();
        let field = crate::ffield::build_field(5, 3).unwrap();
        assert!(matches!(
            m_sequence(&params, &field),
            Err(SeqError::FieldMismatch { .. })
        ));
    }

    #[test]
    fn shift_range() {
        let inst = Instance::build(5, 1, 1, &FieldOptions::default()).unwrap();
        assert!(matches!(
            inst.cross_correlation_direct(24),
            Err(SeqError::ShiftRange { tau: 24, period: 24 })
        ));
    }

    #[test]
    fn export_round_trip() {
        let inst = Instance::build(5, 1, 1, &FieldOptions::default()).unwrap();
        let mut buf = Vec::new();
        write_sequence(inst.params(), inst.seq().values(), &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# p=5 m=1 e=1 n=2 d=3 period=24\n2\n"));
        let (params, values) = read_sequence(&buf[..]).unwrap();
        assert_eq!(&params, inst.params());
        assert_eq!(values, inst.seq().values());
        assert!(read_sequence(&b"# p=5 m=1 e=1 n=2 d=4 period=24\n"[..]).is_err());
    }
}
