//! The cross-correlation spectrum `C_d(τ)`, `0 ≤ τ < p^n - 1`, by three
//! methods, the closed-form six-valued distribution, and the census and
//! moment audits that tie the two together.
//!
//! With `c = α^τ`, `C_d(τ) = -1 + C(-1,c)` and
//! `C(-1,c) = ½(E(-1,c) + E(-α^d, cα))`.
//!
//! * `direct` sums `ω^{s_{t+τ} - s_{dt}}` over one period.
//! * `sums` evaluates both exponential sums by exact summation over the field.
//! * `rank_fast` takes `E(-1,c)` from the rank and sign of `q_{-1,c}` and
//!   `E(-α^d, cα) = η(c)p^m = (-1)^τ p^m`.

use std::collections::BTreeMap;
use std::fmt;
use std::io;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::audit::Audit;
use crate::cyclotomic::{CycError, CycInt, QuadValue};
use crate::ffield::FieldElem;
use crate::qform::{Analyzer, QFormAnalysis, QFormError, SignConvention};
use crate::seqgen::{validate_params, Instance, ParamError, SeqError, SeqParams};

/// Relative tolerance between the floating-point and exact correlation values.
pub const FLOAT_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum SpectrumError {
    #[error(transparent)]
    Params(#[from] ParamError),
    #[error(transparent)]
    Seq(#[from] SeqError),
    #[error(transparent)]
    QForm(#[from] QFormError),
    #[error(transparent)]
    Cyclotomic(#[from] CycError),
    #[error("closed-form count for {tag} is not a nonnegative integer: {num}/{den}")]
    NonIntegral { tag: CorrTag, num: i128, den: i128 },
    #[error("malformed report: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum CorrTag {
    MinusOne,
    PlusPm,
    MinusPm,
    HalfPlus,
    HalfMinus,
    ENeg,
}

impl CorrTag {
    pub const ALL: [CorrTag; 6] = [
        CorrTag::MinusOne,
        CorrTag::PlusPm,
        CorrTag::MinusPm,
        CorrTag::HalfPlus,
        CorrTag::HalfMinus,
        CorrTag::ENeg,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CorrTag::MinusOne => "MINUS_ONE",
            CorrTag::PlusPm => "PLUS_PM",
            CorrTag::MinusPm => "MINUS_PM",
            CorrTag::HalfPlus => "HALF_PLUS",
            CorrTag::HalfMinus => "HALF_MINUS",
            CorrTag::ENeg => "E_NEG",
        }
    }

    /// The correlation value this class stands for.
    pub fn value(self, params: &SeqParams) -> QuadValue {
        let p = params.p;
        let pm = QuadValue::integer(p, params.pow(params.m));
        let one = QuadValue::integer(p, 1);
        let half_e = QuadValue::p_power_half(p, params.e);
        let full_e = QuadValue::integer(p, params.pow(params.e));
        let times_pm_minus_one = |x: QuadValue| &(&x.half() * &pm) - &one;
        match self {
            CorrTag::MinusOne => -&one,
            CorrTag::PlusPm => &pm - &one,
            CorrTag::MinusPm => &(-&pm) - &one,
            CorrTag::HalfPlus => times_pm_minus_one(&one + &half_e),
            CorrTag::HalfMinus => times_pm_minus_one(&one - &half_e),
            CorrTag::ENeg => times_pm_minus_one(&one - &full_e),
        }
    }
}

impl fmt::Display for CorrTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CorrTag {
    type Err = SpectrumError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        CorrTag::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| SpectrumError::Parse(format!("unknown class tag {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CorrClass {
    pub tag: CorrTag,
    pub value: QuadValue,
}

/// Why a value could not be classified.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Unclassified {
    /// One of the candidate values that must never occur.
    Excluded(&'static str, QuadValue),
    Unknown(QuadValue),
    NotQuadratic,
}

impl fmt::Display for Unclassified {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Unclassified::Excluded(name, v) => write!(f, "excluded value {name} = {v}"),
            Unclassified::Unknown(v) => write!(f, "unknown value {v}"),
            Unclassified::NotQuadratic => f.write_str("value outside Q(√p)"),
        }
    }
}

/// The six class values together with the candidates that must not occur.
#[derive(Clone, Debug)]
pub struct ClassTable {
    classes: Vec<CorrClass>,
    excluded: Vec<(&'static str, QuadValue)>,
}

impl ClassTable {
    pub fn new(params: &SeqParams) -> Self {
        let p = params.p;
        let pm = QuadValue::integer(p, params.pow(params.m));
        let one = QuadValue::integer(p, 1);
        let half_e = QuadValue::p_power_half(p, params.e);
        let full_e = QuadValue::integer(p, params.pow(params.e));
        let shape = |x: QuadValue| &(&x.half() * &pm) - &one;
        let classes = CorrTag::ALL
            .into_iter()
            .map(|tag| CorrClass {
                tag,
                value: tag.value(params),
            })
            .collect();
        let excluded = vec![
            ("(-1+p^(e/2))/2·p^m-1", shape(&(-&one) + &half_e)),
            ("(-1-p^(e/2))/2·p^m-1", shape(&(-&one) - &half_e)),
            ("(1+p^e)/2·p^m-1", shape(&one + &full_e)),
            ("-(1+p^e)/2·p^m-1", shape(-&(&one + &full_e))),
        ];
        ClassTable { classes, excluded }
    }

    pub fn classes(&self) -> &[CorrClass] {
        &self.classes
    }

    pub fn classify_quad(&self, value: &QuadValue) -> Result<CorrTag, Unclassified> {
        if let Some(c) = self.classes.iter().find(|c| &c.value == value) {
            return Ok(c.tag);
        }
        if let Some((name, v)) = self.excluded.iter().find(|(_, v)| v == value) {
            return Err(Unclassified::Excluded(name, v.clone()));
        }
        Err(Unclassified::Unknown(value.clone()))
    }

    pub fn classify(&self, value: &CycInt) -> Result<CorrTag, Unclassified> {
        let q = value
            .recognize_quadratic()
            .map_err(|_| Unclassified::NotQuadratic)?;
        self.classify_quad(&q)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Direct,
    Sums,
    RankFast,
    ClosedForm,
    /// Consensus of the three computed methods.
    All,
}

impl Method {
    pub const COMPUTED: [Method; 3] = [Method::Direct, Method::Sums, Method::RankFast];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Direct => "direct",
            Method::Sums => "sums",
            Method::RankFast => "rank_fast",
            Method::ClosedForm => "closed_form",
            Method::All => "all",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = SpectrumError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        [Method::Direct, Method::Sums, Method::RankFast, Method::ClosedForm, Method::All]
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| SpectrumError::Parse(format!("unknown method {s:?}")))
    }
}

/// Value distribution of one computation path.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpectrumReport {
    pub params: SeqParams,
    pub method: Method,
    /// Every tag is present, possibly with count 0.
    pub counts: BTreeMap<CorrTag, u64>,
    pub audits: Vec<Audit>,
}

impl SpectrumReport {
    pub fn count(&self, tag: CorrTag) -> u64 {
        self.counts.get(&tag).copied().unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }

    pub fn all_pass(&self) -> bool {
        crate::audit::all_pass(&self.audits)
    }

    /// Counts in `CorrTag::ALL` order.
    pub fn count_vector(&self) -> [u64; 6] {
        CorrTag::ALL.map(|t| self.count(t))
    }
}

/// One correlation value with whatever intermediate sums the method produced.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShiftValue {
    pub tau: u64,
    /// `C_d(τ)`
    pub corr: QuadValue,
    /// `E(-1, α^τ)`
    pub e1: Option<QuadValue>,
    /// `E(-α^d, α^{τ+1})`
    pub e2: Option<QuadValue>,
}

fn pow128(p: u64, k: u32) -> i128 {
    (p as i128).pow(k)
}

fn exact_div(tag: CorrTag, num: i128, den: i128) -> Result<u64, SpectrumError> {
    if den <= 0 || num < 0 || num % den != 0 {
        return Err(SpectrumError::NonIntegral { tag, num, den });
    }
    Ok((num / den) as u64)
}

/// The closed-form six-valued distribution.
pub fn closed_form_table(params: &SeqParams) -> Result<SpectrumReport, SpectrumError> {
    let p = params.p;
    let (m, e) = (params.m, params.e);
    let pm = pow128(p, m);
    let pe = pow128(p, e);
    let pme = pow128(p, m + e);
    let pm_e = pow128(p, m - e);
    let p2e = pow128(p, 2 * e);
    let half = exact_div(CorrTag::HalfPlus, pm_e * (pm + 1), 2)?;
    let counts: BTreeMap<CorrTag, u64> = [
        (
            CorrTag::MinusOne,
            exact_div(
                CorrTag::MinusOne,
                (pme - 2 * pm - 2 * pe + 3) * (pm + 1),
                2 * (pe - 1),
            )?,
        ),
        (
            CorrTag::PlusPm,
            exact_div(CorrTag::PlusPm, (pe - 1) * (pm + 1) * (pm + 1), 4 * (pe + 1))?,
        ),
        (CorrTag::MinusPm, exact_div(CorrTag::MinusPm, pm * pm - 1, 4)?),
        (CorrTag::HalfPlus, half),
        (CorrTag::HalfMinus, half),
        (
            CorrTag::ENeg,
            exact_div(CorrTag::ENeg, (pm_e - 1) * (pm + 1), p2e - 1)?,
        ),
    ]
    .into_iter()
    .collect();
    let total: u64 = counts.values().sum();
    let audits = vec![Audit::compare(
        "closed-form counts sum to p^n - 1",
        total,
        params.period,
    )];
    Ok(SpectrumReport {
        params: *params,
        method: Method::ClosedForm,
        counts,
        audits,
    })
}

/// Integer closed forms of the rank census, indexed by kernel dimension
/// `i ∈ {0, e, 2e}` and the sign of `E(-1,c)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RankCensusForms {
    pub n0: u64,
    pub ne: u64,
    pub n2e: u64,
    pub n0_plus: u64,
    pub n0_minus: u64,
    pub ne_plus: u64,
    pub ne_minus: u64,
    pub n2e_plus: u64,
    pub n2e_minus: u64,
}

pub fn rank_census_forms(params: &SeqParams) -> Result<RankCensusForms, SpectrumError> {
    let p = params.p;
    let (m, e) = (params.m, params.e);
    let pm = pow128(p, m);
    let pe = pow128(p, e);
    let pme = pow128(p, m + e);
    let pm2e = pow128(p, m + 2 * e);
    let pm_e = pow128(p, m - e);
    let p2e = pow128(p, 2 * e);
    let tag = CorrTag::MinusOne;
    let n2e = exact_div(tag, (pm_e - 1) * (pm + 1), p2e - 1)?;
    let ne_half = exact_div(tag, pm_e * (pm + 1), 2)?;
    Ok(RankCensusForms {
        n0: exact_div(tag, (pm2e - pme - pm - p2e + 2) * (pm + 1), p2e - 1)?,
        ne: exact_div(tag, pm_e * (pm + 1), 1)?,
        n2e,
        n0_plus: exact_div(tag, (pme - 1) * (pm + 1), 2 * (pe + 1))?,
        n0_minus: exact_div(tag, (pme - 2 * pm - 2 * pe + 3) * (pm + 1), 2 * (pe - 1))?,
        ne_plus: ne_half,
        ne_minus: ne_half,
        n2e_plus: 0,
        n2e_minus: n2e,
    })
}

fn rational(num: BigInt, den: i64) -> BigRational {
    BigRational::new(num, BigInt::from(den))
}

/// Spectrum computations bound to one instance.
/// `E(-1,c)` from rank and sign, `E(-α^d, cα) = ±p^m` from the parity of
/// `log c`, and `C_d = (E1 + E2)/2 - 1`.
fn fast_parts(analyzer: &Analyzer<'_>, (rank, det, even): (u32, i8, bool)) -> [QuadValue; 3] {
    let params = analyzer.instance().params();
    let e1 = analyzer.signed_magnitude(rank, det);
    let pm = params.pow(params.m) as i64;
    let e2 = QuadValue::integer(params.p, if even { pm } else { -pm });
    let corr = &(&e1 + &e2).half() - &QuadValue::integer(params.p, 1);
    [e1, e2, corr]
}

pub struct Spectrum<'a> {
    inst: &'a Instance,
    analyzer: Analyzer<'a>,
    table: ClassTable,
    /// rank_fast `(E1, E2, C_d)` keyed by rank, sign and parity of τ.
    fast_values: Vec<((u32, i8, bool), [QuadValue; 3])>,
}

impl<'a> Spectrum<'a> {
    pub fn new(inst: &'a Instance) -> Self {
        Self::with_sign(inst, SignConvention::Standard)
    }

    /// With an explicit sign convention for the rank/sign path.
    pub fn with_sign(inst: &'a Instance, sign: SignConvention) -> Self {
        let analyzer = Analyzer::with_sign(inst, sign);
        let params = inst.params();
        let fast_values = [params.n, params.n - params.e, params.n - 2 * params.e]
            .into_iter()
            .flat_map(|rank| [(rank, 1i8), (rank, -1)])
            .flat_map(|(rank, det)| [(rank, det, true), (rank, det, false)])
            .map(|key| (key, fast_parts(&analyzer, key)))
            .collect();
        Spectrum {
            inst,
            analyzer,
            table: ClassTable::new(params),
            fast_values,
        }
    }

    pub fn instance(&self) -> &Instance {
        self.inst
    }

    pub fn analyzer(&self) -> &Analyzer<'a> {
        &self.analyzer
    }

    pub fn table(&self) -> &ClassTable {
        &self.table
    }

    fn params(&self) -> &SeqParams {
        self.inst.params()
    }

    fn check_shift(&self, tau: u64) -> Result<(), SpectrumError> {
        let period = self.params().period;
        if tau >= period {
            return Err(SeqError::ShiftRange { tau, period }.into());
        }
        Ok(())
    }

    /// The coefficients `(a, b)` of the two forms at shift `τ`.
    fn forms(&self, tau: u64) -> [(FieldElem, FieldElem); 2] {
        let f = self.inst.field();
        let c = f.exp(tau);
        let twist = f.neg(f.exp(self.params().d));
        [(f.from_int(-1), c), (twist, f.exp(tau + 1))]
    }

    /// Exact `C_d(τ)` from the two exponential sums.
    pub fn correlation_via_sums(&self, tau: u64) -> Result<CycInt, SpectrumError> {
        self.check_shift(tau)?;
        let [(a1, b1), (a2, b2)] = self.forms(tau);
        let mut counts = self.analyzer.value_counts(a1, b1);
        for (acc, c) in counts.iter_mut().zip(self.analyzer.value_counts(a2, b2)) {
            *acc += c;
        }
        let p = self.params().p;
        let both = CycInt::from_residue_counts(p, &counts);
        let half = both
            .div_exact(&BigInt::from(2))
            .ok_or_else(|| CycError::NotIntegral("halving".into()))?;
        Ok(&half - &CycInt::from_int(p, 1))
    }

    fn shift_value(&self, tau: u64, method: Method) -> Result<ShiftValue, SpectrumError> {
        let p = self.params().p;
        match method {
            Method::Direct | Method::ClosedForm | Method::All => Ok(ShiftValue {
                tau,
                corr: self.inst.cross_correlation_direct(tau)?.recognize_quadratic()?,
                e1: None,
                e2: None,
            }),
            Method::Sums => {
                let [(a1, b1), (a2, b2)] = self.forms(tau);
                let e1 = self.analyzer.exp_sum_exact(a1, b1);
                let e2 = self.analyzer.exp_sum_exact(a2, b2);
                let half = (&e1 + &e2)
                    .div_exact(&BigInt::from(2))
                    .ok_or_else(|| CycError::NotIntegral("halving".into()))?;
                let corr = (&half - &CycInt::from_int(p, 1)).recognize_quadratic()?;
                Ok(ShiftValue {
                    tau,
                    corr,
                    e1: Some(e1.recognize_quadratic()?),
                    e2: Some(e2.recognize_quadratic()?),
                })
            }
            Method::RankFast => {
                let [(a1, b1), _] = self.forms(tau);
                let (rank, det_class) = self.analyzer.rank_and_class(a1, b1)?;
                let key = (rank, det_class, tau.is_multiple_of(2));
                let [e1, e2, corr] = match self.fast_values.iter().find(|(k, _)| *k == key) {
                    Some((_, parts)) => parts.clone(),
                    None => fast_parts(&self.analyzer, key),
                };
                Ok(ShiftValue {
                    tau,
                    corr,
                    e1: Some(e1),
                    e2: Some(e2),
                })
            }
        }
    }

    /// Every shift's value by one method, in τ order.
    pub fn sweep(&self, method: Method) -> Result<Vec<ShiftValue>, SpectrumError> {
        let method = match method {
            Method::ClosedForm | Method::All => Method::Direct,
            m => m,
        };
        (0..self.params().period)
            .into_par_iter()
            .map(|tau| self.shift_value(tau, method))
            .collect()
    }

    /// Counts and classification audits for a sweep.
    pub fn report_from_sweep(&self, method: Method, values: &[ShiftValue]) -> SpectrumReport {
        let params = *self.params();
        let mut counts: BTreeMap<CorrTag, u64> = CorrTag::ALL.iter().map(|&t| (t, 0)).collect();
        let mut unknown = Vec::new();
        let mut excluded = Vec::new();
        for v in values {
            match self.table.classify_quad(&v.corr) {
                Ok(tag) => *counts.get_mut(&tag).expect("all tags present") += 1,
                Err(e @ Unclassified::Excluded(..)) => excluded.push(format!("τ={}: {e}", v.tau)),
                Err(e) => unknown.push(format!("τ={}: {e}", v.tau)),
            }
        }
        let total: u64 = counts.values().sum();
        let mut audits = vec![
            Audit::check(
                "every value classified",
                unknown.is_empty() && excluded.is_empty(),
                format!("{} unclassified {:?}", unknown.len() + excluded.len(), first(&unknown, &excluded)),
                "0 unclassified",
            ),
            Audit::check(
                "excluded values never occur",
                excluded.is_empty(),
                format!("{} occurrences {:?}", excluded.len(), excluded.iter().take(4).collect::<Vec<_>>()),
                "0 occurrences",
            ),
            Audit::compare("counts sum to p^n - 1", total, params.period),
        ];
        match closed_form_table(&params) {
            Ok(closed) => {
                let observed = CorrTag::ALL.map(|t| counts[&t]);
                audits.push(Audit::compare(
                    "counts match closed form",
                    format!("{observed:?}"),
                    format!("{:?}", closed.count_vector()),
                ));
            }
            Err(e) => audits.push(Audit::check("counts match closed form", false, e.to_string(), "integral closed form")),
        }
        SpectrumReport {
            params,
            method,
            counts,
            audits,
        }
    }

    /// Reports of the three computed methods, then their [`consensus`].
    pub fn all_methods(&self) -> (Vec<SpectrumReport>, SpectrumReport) {
        let reports: Vec<SpectrumReport> = Method::COMPUTED.iter().map(|&m| self.full_spectrum(m)).collect();
        let combined = consensus(&reports);
        (reports, combined)
    }

    /// Full spectrum by one method. Failures surface as audits.
    pub fn full_spectrum(&self, method: Method) -> SpectrumReport {
        if method == Method::All {
            return self.all_methods().1;
        }
        if method == Method::ClosedForm {
            return closed_form_table(self.params()).unwrap_or_else(|e| SpectrumReport {
                params: *self.params(),
                method,
                counts: BTreeMap::new(),
                audits: vec![Audit::check("closed form evaluates", false, e.to_string(), "integral counts")],
            });
        }
        match self.sweep(method) {
            Ok(values) => self.report_from_sweep(method, &values),
            Err(e) => SpectrumReport {
                params: *self.params(),
                method,
                counts: CorrTag::ALL.iter().map(|&t| (t, 0)).collect(),
                audits: vec![Audit::check("sweep completes", false, e.to_string(), "no error")],
            },
        }
    }

    /// `E(-1,0)` and `C(-1,0)` by direct summation.
    pub fn zero_shift_values(&self) -> Result<(QuadValue, QuadValue), SpectrumError> {
        let f = self.inst.field();
        let e0 = self
            .analyzer
            .exp_sum_exact(f.from_int(-1), FieldElem::ZERO)
            .recognize_quadratic()?;
        // C(-1,0) = Σ_x χ(-x^d) = 1 + Σ_t ω^{-s_{dt}}
        let p = self.params().p;
        let mut counts = vec![0u64; p as usize];
        counts[0] += 1;
        for &v in self.inst.decimated() {
            counts[((p - v as u64) % p) as usize] += 1;
        }
        let c0 = CycInt::from_residue_counts(p, &counts).recognize_quadratic()?;
        Ok((e0, c0))
    }

    /// First, second and third moments of `E(-1,c)` and `C(-1,c)` over all
    /// of GF(p^n), against their closed forms. `values` must carry `e1`.
    pub fn moment_audit(&self, values: &[ShiftValue]) -> Vec<Audit> {
        let params = *self.params();
        let p = params.p;
        let (m, e) = (params.m, params.e);
        let big = |k: u32| BigInt::from(p).pow(k);
        let q = |x: BigInt| QuadValue::integer(p, x);
        let pm = big(m);
        let mut audits = Vec::new();

        let e0_stated = q(-pm.clone());
        let c0_stated = QuadValue::new(p, rational((&pm - 1) * &pm, 2), BigRational::zero());
        match self.zero_shift_values() {
            Ok((e0, c0)) => {
                audits.push(Audit::compare("E(-1,0) = -p^m by direct summation", e0, e0_stated.clone()));
                audits.push(Audit::compare(
                    "C(-1,0) = (p^m-1)p^m/2 by direct summation",
                    c0,
                    c0_stated.clone(),
                ));
            }
            Err(err) => audits.push(Audit::check("c = 0 terms evaluate", false, err.to_string(), "no error")),
        }

        let Some(es) = values.iter().map(|v| v.e1.clone()).collect::<Option<Vec<_>>>() else {
            audits.push(Audit::check("moments need E(-1,c)", false, "sweep without E values", "sums or rank_fast sweep"));
            return audits;
        };
        let one = QuadValue::integer(p, 1);
        let cs: Vec<QuadValue> = values.iter().map(|v| &v.corr + &one).collect();
        let power_sum = |xs: &[QuadValue], zero_term: &QuadValue, k: u32| {
            let sum = xs
                .par_iter()
                .map(|x| x.pow(k))
                .reduce(|| QuadValue::zero(p), |a, b| &a + &b);
            &sum + &zero_term.pow(k)
        };
        let expected = [
            ("sum E(-1,c) = p^{2m}", 1, q(big(2 * m))),
            ("sum E(-1,c)^2 = (2p^{2m}-1)p^{2m}", 2, q((2 * big(2 * m) - 1) * big(2 * m))),
            (
                "sum E(-1,c)^3 = (-p^{2m}+p^{m+e}+p^e)p^{3m}",
                3,
                q((-big(2 * m) + big(m + e) + big(e)) * big(3 * m)),
            ),
        ];
        for (name, k, want) in expected {
            audits.push(Audit::compare(name, power_sum(&es, &e0_stated, k), want));
        }
        let c3 = big(3 * m) * (big(3 * m) - big(2 * m) + big(m + e) + 6 * big(m) + big(e));
        let expected = [
            ("sum C(-1,c) = p^{2m}", 1, q(big(2 * m))),
            ("sum C(-1,c)^2 = p^{4m}", 2, q(big(4 * m))),
            (
                "sum C(-1,c)^3 = p^{3m}(p^{3m}-p^{2m}+p^{m+e}+6p^m+p^e)/8",
                3,
                QuadValue::new(p, rational(c3, 8), BigRational::zero()),
            ),
        ];
        for (name, k, want) in expected {
            audits.push(Audit::compare(name, power_sum(&cs, &c0_stated, k), want));
        }
        audits
    }

    /// Rank of `q_{-1,c}` and sign of `E(-1,c)` tallied over all nonzero `c`.
    pub fn rank_census(&self, analyses: &[QFormAnalysis]) -> Vec<Audit> {
        let params = *self.params();
        let (e, n) = (params.e, params.n);
        let mut by_rank = [0u64; 3];
        let mut by_sign = [[0u64; 2]; 3];
        let mut odd = 0u64;
        for a in analyses {
            let drop = n - a.rank;
            let slot = match drop {
                0 => 0,
                d if d == e => 1,
                d if d == 2 * e => 2,
                _ => {
                    odd += 1;
                    continue;
                }
            };
            by_rank[slot] += 1;
            let s = if a.sum_value.signum() > 0 { 0 } else { 1 };
            by_sign[slot][s] += 1;
        }
        let mut audits = vec![Audit::compare("kernel dimension in {0, e, 2e}", odd, 0)];
        let forms = match rank_census_forms(&params) {
            Ok(f) => f,
            Err(err) => {
                audits.push(Audit::check("rank census closed forms", false, err.to_string(), "integral"));
                return audits;
            }
        };
        let rows = [
            ("N_0", by_rank[0], forms.n0),
            ("N_e", by_rank[1], forms.ne),
            ("N_2e", by_rank[2], forms.n2e),
            ("N_{0,1}", by_sign[0][0], forms.n0_plus),
            ("N_{0,-1}", by_sign[0][1], forms.n0_minus),
            ("N_{e,1}", by_sign[1][0], forms.ne_plus),
            ("N_{e,-1}", by_sign[1][1], forms.ne_minus),
            ("N_{2e,1}", by_sign[2][0], forms.n2e_plus),
            ("N_{2e,-1}", by_sign[2][1], forms.n2e_minus),
        ];
        for (name, observed, expected) in rows {
            audits.push(Audit::compare(format!("rank census {name}"), observed, expected));
        }
        audits.push(Audit::compare(
            "rank census N_{e,1} = N_{e,-1}",
            by_sign[1][0] as i64 - by_sign[1][1] as i64,
            0,
        ));
        let gram_mismatch = analyses.iter().filter(|a| a.gram_rank != a.rank).count();
        audits.push(Audit::compare("gram rank = kernel rank", gram_mismatch, 0));

        let p = params.p;
        let allowed: Vec<QuadValue> = [2 * params.m, 2 * params.m + e, 2 * params.m + 2 * e]
            .into_iter()
            .flat_map(|k| {
                let v = QuadValue::p_power_half(p, k);
                [-&v, v]
            })
            .collect();
        let outside = analyses.iter().filter(|a| !allowed.contains(&a.sum_value)).count();
        audits.push(Audit::compare("E(-1,c) in {±p^m, ±p^{m+e/2}, ±p^{m+e}}", outside, 0));
        audits
    }

    /// `E(-α^d, cα) = η(c)p^m` for every nonzero `c`, from a `sums` sweep.
    pub fn twisted_sum_audit(&self, values: &[ShiftValue]) -> Audit {
        let p = self.params().p;
        let pm = self.params().pow(self.params().m) as i64;
        let f = self.inst.field();
        let mut bad = Vec::new();
        let mut missing = 0;
        for v in values {
            match &v.e2 {
                Some(e2) => {
                    let eta = f.quad_char(f.exp(v.tau)) as i64;
                    if *e2 != QuadValue::integer(p, eta * pm) {
                        bad.push(v.tau);
                    }
                }
                None => missing += 1,
            }
        }
        Audit::check(
            "E(-α^d, cα) = η(c)p^m for all c ≠ 0",
            bad.is_empty() && missing == 0 && !values.is_empty(),
            format!("{} violations {:?}, {} missing", bad.len(), &bad[..bad.len().min(8)], missing),
            format!("0 violations over {}", self.params().period),
        )
    }

    /// `rank(-1,c) = n - e` forces `c` to be a square.
    pub fn square_class_audit(&self, analyses: &[QFormAnalysis]) -> Audit {
        let f = self.inst.field();
        let target = self.params().n - self.params().e;
        let hits: Vec<&QFormAnalysis> = analyses.iter().filter(|a| a.rank == target).collect();
        let bad: Vec<u64> = hits
            .iter()
            .filter(|a| f.quad_char(a.b) != 1)
            .map(|a| f.dlog(a.b).unwrap_or(u64::MAX))
            .collect();
        Audit::check(
            "rank(-1,c) = n-e implies η(c) = +1",
            bad.is_empty(),
            format!("{} of {} nonsquare {:?}", bad.len(), hits.len(), &bad[..bad.len().min(8)]),
            format!("0 of {} nonsquare", hits.len()),
        )
    }

    /// Equality of `E(-1,c)` between exact summation and rank/sign.
    pub fn method_agreement_audit(&self, sums: &[ShiftValue], analyses: &[QFormAnalysis]) -> Audit {
        let bad: Vec<u64> = sums
            .iter()
            .zip(analyses)
            .filter(|(s, a)| s.e1.as_ref() != Some(&a.sum_value))
            .map(|(s, _)| s.tau)
            .collect();
        let complete = sums.len() == analyses.len();
        Audit::check(
            "E(-1,c) by summation = E(-1,c) by rank and sign",
            bad.is_empty() && complete,
            format!("{} disagreements {:?}", bad.len(), &bad[..bad.len().min(8)]),
            format!("0 disagreements over {}", analyses.len()),
        )
    }

    /// `max |C_d(τ)| ≤ 2√(p^n) + 1` in `f64`. Only claimed for `(p, e) = (5, 1)`.
    pub fn bound_audit(&self, values: &[ShiftValue]) -> Option<Audit> {
        let params = self.params();
        if (params.p, params.e) != (5, 1) {
            return None;
        }
        let max = values.iter().map(|v| v.corr.to_f64().abs()).fold(0.0, f64::max);
        let bound = 2.0 * (params.size() as f64).sqrt() + 1.0;
        Some(Audit::check(
            "max |C_d(τ)| <= 2√(p^n) + 1",
            max <= bound,
            format!("{max}"),
            format!("<= {bound}"),
        ))
    }

    /// The `f64` definitional sum against the exact value, which is evaluated
    /// at `precision_bits`.
    pub fn float_audit(&self, values: &[ShiftValue], precision_bits: u32) -> Audit {
        let results: Vec<Result<f64, String>> = values
            .par_iter()
            .map(|v| {
                let float = self.inst.cross_correlation_float(v.tau).map_err(|e| e.to_string())?;
                let exact = CycInt::from_quad(&v.corr)
                    .and_then(|c| c.to_complex(precision_bits))
                    .map_err(|e| e.to_string())?;
                let scale = exact.norm().max(1.0);
                Ok(((float - exact).norm()) / scale)
            })
            .collect();
        let mut worst = 0.0f64;
        let mut errors = Vec::new();
        for r in results {
            match r {
                Ok(x) => worst = worst.max(x),
                Err(e) => errors.push(e),
            }
        }
        Audit::check(
            "float correlation within 1e-6 relative of exact",
            errors.is_empty() && worst <= FLOAT_TOLERANCE,
            format!("max relative error {worst:e}; {} errors", errors.len()),
            format!("<= {FLOAT_TOLERANCE:e}"),
        )
    }

    /// All structural audits for one instance.
    pub fn verify_all(&self) -> Result<Vec<Audit>, SpectrumError> {
        let sums = self.sweep(Method::Sums)?;
        let analyses = self.analyzer.main_form_sweep()?;
        let mut audits = self.analyzer.gauss_sum_audit();
        audits.extend(self.moment_audit(&sums));
        audits.extend(self.rank_census(&analyses));
        audits.extend(self.analyzer.g_upsilon_audit());
        audits.push(self.twisted_sum_audit(&sums));
        audits.push(self.square_class_audit(&analyses));
        audits.push(self.method_agreement_audit(&sums, &analyses));
        let report = self.report_from_sweep(Method::Sums, &sums);
        audits.extend(report.audits);
        audits.extend(self.bound_audit(&sums));
        Ok(audits)
    }
}

fn first(a: &[String], b: &[String]) -> Vec<String> {
    a.iter().chain(b).take(4).cloned().collect()
}

/// One report standing for several: the first report's counts, every audit
/// of every report prefixed by its method, and the agreement check.
pub fn consensus(reports: &[SpectrumReport]) -> SpectrumReport {
    let mut audits: Vec<Audit> = reports
        .iter()
        .flat_map(|r| {
            r.audits.iter().map(move |a| Audit {
                name: format!("{}: {}", r.method, a.name),
                ..a.clone()
            })
        })
        .collect();
    audits.push(agreement_audit(reports));
    SpectrumReport {
        params: reports[0].params,
        method: Method::All,
        counts: reports[0].counts.clone(),
        audits,
    }
}

/// Counts and audits from several reports agree count-for-count.
pub fn agreement_audit(reports: &[SpectrumReport]) -> Audit {
    let vectors: Vec<(Method, [u64; 6])> = reports.iter().map(|r| (r.method, r.count_vector())).collect();
    let agree = vectors.windows(2).all(|w| w[0].1 == w[1].1);
    Audit::check(
        "methods agree count-for-count",
        agree,
        vectors
            .iter()
            .map(|(m, v)| format!("{m}: {v:?}"))
            .collect::<Vec<_>>()
            .join("; "),
        "identical counts",
    )
}

#[derive(Serialize, Deserialize)]
struct ClassCount {
    u: String,
    v: String,
    count: u64,
}

#[derive(Serialize, Deserialize)]
struct ReportDoc {
    params: SeqParams,
    method: Method,
    counts: BTreeMap<CorrTag, ClassCount>,
    audits: Vec<Audit>,
}

#[derive(Serialize, Deserialize)]
struct CsvRow {
    p: u64,
    m: u32,
    e: u32,
    method: Method,
    class: CorrTag,
    u: String,
    v: String,
    count: u64,
}

fn parse_rational(s: &str) -> Result<BigRational, SpectrumError> {
    BigRational::from_str(s).map_err(|e| SpectrumError::Parse(format!("bad rational {s:?}: {e}")))
}

fn check_value(params: &SeqParams, tag: CorrTag, u: &str, v: &str) -> Result<(), SpectrumError> {
    let value = QuadValue::new(params.p, parse_rational(u)?, parse_rational(v)?);
    if value != tag.value(params) {
        return Err(SpectrumError::Parse(format!(
            "{tag} carries value {value}, expected {}",
            tag.value(params)
        )));
    }
    Ok(())
}

impl SpectrumReport {
    pub fn to_json(&self) -> String {
        let doc = ReportDoc {
            params: self.params,
            method: self.method,
            counts: self
                .counts
                .iter()
                .map(|(&tag, &count)| {
                    let value = tag.value(&self.params);
                    (
                        tag,
                        ClassCount {
                            u: value.u().to_string(),
                            v: value.v().to_string(),
                            count,
                        },
                    )
                })
                .collect(),
            audits: self.audits.clone(),
        };
        serde_json::to_string_pretty(&doc).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, SpectrumError> {
        let doc: ReportDoc = serde_json::from_str(text).map_err(|e| SpectrumError::Parse(e.to_string()))?;
        let params = validate_params(doc.params.p, doc.params.m, doc.params.e)?;
        if params != doc.params {
            return Err(SpectrumError::Parse("derived parameters are inconsistent".into()));
        }
        let mut counts = BTreeMap::new();
        for (tag, cc) in doc.counts {
            check_value(&params, tag, &cc.u, &cc.v)?;
            counts.insert(tag, cc.count);
        }
        Ok(SpectrumReport {
            params,
            method: doc.method,
            counts,
            audits: doc.audits,
        })
    }

    /// One row per class. Audits are not part of the CSV form.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        for (&tag, &count) in &self.counts {
            let value = tag.value(&self.params);
            w.serialize(CsvRow {
                p: self.params.p,
                m: self.params.m,
                e: self.params.e,
                method: self.method,
                class: tag,
                u: value.u().to_string(),
                v: value.v().to_string(),
                count,
            })
            .expect("in-memory CSV write");
        }
        String::from_utf8(w.into_inner().expect("flush to Vec")).expect("CSV is UTF-8")
    }

    pub fn from_csv(text: &str) -> Result<Self, SpectrumError> {
        let mut r = csv::Reader::from_reader(text.as_bytes());
        let mut head: Option<(SeqParams, Method)> = None;
        let mut counts = BTreeMap::new();
        for row in r.deserialize::<CsvRow>() {
            let row = row.map_err(|e| SpectrumError::Parse(e.to_string()))?;
            let params = validate_params(row.p, row.m, row.e)?;
            match head {
                None => head = Some((params, row.method)),
                Some(h) if h != (params, row.method) => {
                    return Err(SpectrumError::Parse("rows disagree on parameters or method".into()))
                }
                Some(_) => {}
            }
            check_value(&params, row.class, &row.u, &row.v)?;
            if counts.insert(row.class, row.count).is_some() {
                return Err(SpectrumError::Parse(format!("duplicate row for {}", row.class)));
            }
        }
        let (params, method) = head.ok_or_else(|| SpectrumError::Parse("no rows".into()))?;
        Ok(SpectrumReport {
            params,
            method,
            counts,
            audits: Vec::new(),
        })
    }

    /// Plain-text rendering.
    pub fn to_text(&self) -> String {
        let pr = &self.params;
        let mut out = format!(
            "p={} m={} e={} n={} d={} method={}\n",
            pr.p, pr.m, pr.e, pr.n, pr.d, self.method
        );
        for (&tag, &count) in &self.counts {
            out.push_str(&format!("{:<11} {:>12}  {}\n", tag.as_str(), count, tag.value(pr)));
        }
        for a in &self.audits {
            out.push_str(&format!(
                "[{}] {}: observed {}, expected {}\n",
                if a.pass { "pass" } else { "FAIL" },
                a.name,
                a.observed,
                a.expected
            ));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ffield::FieldOptions;
    use num_traits::One;

    fn inst(p: u64, m: u32, e: u32) -> Instance {
        Instance::build(p, m, e, &FieldOptions::default()).unwrap()
    }

    #[test]
    fn class_values() {
        let params = validate_params(5, 1, 1).unwrap();
        let half = BigRational::new(BigInt::from(3), BigInt::from(2));
        let five_halves = BigRational::new(BigInt::from(5), BigInt::from(2));
        assert_eq!(
            CorrTag::HalfPlus.value(&params),
            QuadValue::new(5, half.clone(), five_halves.clone())
        );
        assert_eq!(CorrTag::HalfMinus.value(&params), QuadValue::new(5, half, -five_halves));
        assert_eq!(CorrTag::ENeg.value(&params), QuadValue::integer(5, -11));
        assert_eq!(CorrTag::PlusPm.value(&params), QuadValue::integer(5, 4));
        assert_eq!(CorrTag::MinusPm.value(&params), QuadValue::integer(5, -6));
        let params = validate_params(5, 3, 1).unwrap();
        let table = ClassTable::new(&params);
        assert_eq!(table.classify(&CycInt::from_int(5, -251)), Ok(CorrTag::ENeg));
        assert_eq!(table.classify(&CycInt::from_int(5, -1)), Ok(CorrTag::MinusOne));
    }

    #[test]
    fn excluded_values_are_flagged() {
        let params = validate_params(5, 1, 1).unwrap();
        let table = ClassTable::new(&params);
        // (-1 + √5)/2·5 - 1
        let v = QuadValue::new(
            5,
            BigRational::new(BigInt::from(-7), BigInt::from(2)),
            BigRational::new(BigInt::from(5), BigInt::from(2)),
        );
        assert!(matches!(table.classify_quad(&v), Err(Unclassified::Excluded(..))));
        // (1+5)/2·5 - 1 = 14
        assert!(matches!(
            table.classify_quad(&QuadValue::integer(5, 14)),
            Err(Unclassified::Excluded(..))
        ));
        assert!(matches!(
            table.classify_quad(&QuadValue::integer(5, 0)),
            Err(Unclassified::Unknown(_))
        ));
        assert_eq!(
            table.classify(&crate::cyclotomic::omega_pow(5, 1).unwrap()),
            Err(Unclassified::NotQuadratic)
        );
        let _ = BigRational::one();
    }

    #[test]
    fn closed_forms() {
        let t = closed_form_table(&validate_params(5, 1, 1).unwrap()).unwrap();
        assert_eq!(t.count_vector(), [6, 6, 6, 3, 3, 0]);
        let t = closed_form_table(&validate_params(13, 1, 1).unwrap()).unwrap();
        assert_eq!(t.count(CorrTag::MinusPm), 42);
        assert_eq!(t.count_vector(), [70, 42, 42, 7, 7, 0]);
        let t = closed_form_table(&validate_params(5, 3, 1).unwrap()).unwrap();
        assert_eq!(t.count_vector(), [5796, 2646, 3906, 1575, 1575, 126]);
        let t = closed_form_table(&validate_params(5, 3, 3).unwrap()).unwrap();
        assert_eq!(t.count(CorrTag::HalfPlus), 63);
        assert_eq!(t.count(CorrTag::ENeg), 0);
        assert!(t.all_pass());
        let f = rank_census_forms(&validate_params(5, 3, 1).unwrap()).unwrap();
        assert_eq!((f.ne, f.n2e, f.n0_plus, f.ne_plus), (3150, 126, 6552, 1575));
        let f = rank_census_forms(&validate_params(5, 1, 1).unwrap()).unwrap();
        assert_eq!((f.n0, f.ne, f.n2e), (18, 6, 0));
    }

    #[test]
    fn three_methods_5_1_1() {
        let inst = inst(5, 1, 1);
        let sp = Spectrum::new(&inst);
        let reports: Vec<SpectrumReport> = Method::COMPUTED.iter().map(|&m| sp.full_spectrum(m)).collect();
        for r in &reports {
            assert_eq!(r.count_vector(), [6, 6, 6, 3, 3, 0], "{}", r.to_text());
            assert!(r.all_pass(), "{}", r.to_text());
        }
        assert!(agreement_audit(&reports).pass);
        for tau in 0..24 {
            assert_eq!(
                sp.correlation_via_sums(tau).unwrap(),
                inst.cross_correlation_direct(tau).unwrap()
            );
        }
        assert!(sp.correlation_via_sums(24).is_err());
    }

    #[test]
    fn odd_shifts_have_negative_second_sum() {
        let inst = inst(5, 1, 1);
        let sp = Spectrum::new(&inst);
        let sums = sp.sweep(Method::Sums).unwrap();
        for v in sums.iter().filter(|v| v.tau % 2 == 1) {
            assert_eq!(v.e2, Some(QuadValue::integer(5, -5)));
        }
    }

    #[test]
    fn verify_all_5_1_1() {
        let inst = inst(5, 1, 1);
        let audits = Spectrum::new(&inst).verify_all().unwrap();
        for a in &audits {
            assert!(a.pass, "{a:?}");
        }
    }

    #[test]
    fn negated_sign_is_caught() {
        let inst = inst(5, 1, 1);
        let sp = Spectrum::with_sign(&inst, SignConvention::Negated);
        let analyses = sp.analyzer().main_form_sweep().unwrap();
        let census = sp.rank_census(&analyses);
        assert!(census.iter().any(|a| !a.pass));
        assert!(!sp.full_spectrum(Method::RankFast).all_pass());
    }

    #[test]
    fn moments_5_1_1() {
        let inst = inst(5, 1, 1);
        let sp = Spectrum::new(&inst);
        let audits = sp.moment_audit(&sp.sweep(Method::RankFast).unwrap());
        assert_eq!(audits.len(), 8);
        assert!(audits.iter().all(|a| a.pass), "{audits:?}");
        let sum_e = audits.iter().find(|a| a.name.starts_with("sum E(-1,c) =")).unwrap();
        assert_eq!(sum_e.observed, "25");
        let c3 = audits.iter().find(|a| a.name.starts_with("sum C(-1,c)^3")).unwrap();
        assert_eq!(c3.observed, "2500");
        assert!(!sp.moment_audit(&sp.sweep(Method::Direct).unwrap()).iter().all(|a| a.pass));
    }

    #[test]
    fn report_round_trips() {
        let inst = inst(5, 1, 1);
        let r = Spectrum::new(&inst).full_spectrum(Method::Sums);
        assert_eq!(SpectrumReport::from_json(&r.to_json()).unwrap(), r);
        let csv = r.to_csv();
        assert_eq!(csv.lines().count(), 7);
        assert!(csv.starts_with("p,m,e,method,class,u,v,count\n"));
        let back = SpectrumReport::from_csv(&csv).unwrap();
        assert_eq!(back.counts, r.counts);
        assert_eq!(back.method, Method::Sums);
        let tampered = csv.replace("HALF_PLUS,3/2", "HALF_PLUS,5/2");
        assert!(SpectrumReport::from_csv(&tampered).is_err());
    }

    #[test]
    fn bound_and_float() {
        let inst = inst(5, 1, 1);
        let sp = Spectrum::new(&inst);
        let v = sp.sweep(Method::RankFast).unwrap();
        assert!(sp.bound_audit(&v).unwrap().pass);
        assert!(sp.float_audit(&v, 53).pass);
        assert!(sp.float_audit(&v, 96).pass);
    }
}
