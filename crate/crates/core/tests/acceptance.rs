//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

use std::collections::BTreeMap;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use corrspec::audit::{all_pass, Audit};
use corrspec::qform::{ExpSumMethod, QFormAnalysis};
use corrspec::spectrum::{agreement_audit, closed_form_table, ShiftValue, FLOAT_TOLERANCE};
use corrspec::{CorrTag, FieldElem, FieldOptions, Instance, Method, QuadValue, Spectrum, SpectrumReport};
use num_bigint::BigInt;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SETS: [(u64, u32, u32); 4] = [(5, 1, 1), (13, 1, 1), (5, 3, 1), (5, 3, 3)];
const RANDOM_PAIRS: usize = 500;
const FLOAT_BITS: u32 = 53;

/// Counts in MINUS_ONE, PLUS_PM, MINUS_PM, HALF_PLUS, HALF_MINUS, E_NEG order.
fn frozen_counts(set: (u64, u32, u32)) -> [u64; 6] {
    match set {
        (5, 1, 1) => [6, 6, 6, 3, 3, 0],
        (13, 1, 1) => [70, 42, 42, 7, 7, 0],
        (5, 3, 1) => [5796, 2646, 3906, 1575, 1575, 126],
        (5, 3, 3) => [7686, 3906, 3906, 63, 63, 0],
        _ => unreachable!(),
    }
}

struct Run {
    set: (u64, u32, u32),
    inst: Instance,
    reports: BTreeMap<Method, SpectrumReport>,
    timings: BTreeMap<Method, Duration>,
    sums: Vec<ShiftValue>,
    analyses: Vec<QFormAnalysis>,
}

impl Run {
    fn new(set: (u64, u32, u32)) -> Run {
        let (p, m, e) = set;
        let inst = Instance::build(p, m, e, &FieldOptions::default()).expect("instance builds");
        let mut reports = BTreeMap::new();
        let mut timings = BTreeMap::new();
        let mut sums = Vec::new();
        {
            let sp = Spectrum::new(&inst);
            for method in Method::COMPUTED {
                let start = Instant::now();
                let values = sp.sweep(method).expect("sweep");
                let report = sp.report_from_sweep(method, &values);
                timings.insert(method, start.elapsed());
                reports.insert(method, report);
                if method == Method::Sums {
                    sums = values;
                }
            }
        }
        let analyses = Spectrum::new(&inst).analyzer().main_form_sweep().expect("analyses");
        Run {
            set,
            inst,
            reports,
            timings,
            sums,
            analyses,
        }
    }

    fn spectrum(&self) -> Spectrum<'_> {
        Spectrum::new(&self.inst)
    }

    fn label(&self) -> String {
        format!("{:?}", self.set)
    }
}

struct Line {
    pass: bool,
    detail: String,
}

fn failed(audits: &[Audit]) -> Vec<String> {
    audits
        .iter()
        .filter(|a| !a.pass)
        .map(|a| format!("{}: observed {} expected {}", a.name, a.observed, a.expected))
        .collect()
}

fn line_from(label: &str, audits: &[Audit]) -> (bool, String) {
    let bad = failed(audits);
    if bad.is_empty() {
        (true, format!("{label}: {} checks", audits.len()))
    } else {
        (false, format!("{label}: {}", bad.join("; ")))
    }
}

fn combine(parts: Vec<(bool, String)>) -> Line {
    Line {
        pass: parts.iter().all(|(p, _)| *p),
        detail: parts.into_iter().map(|(_, d)| d).collect::<Vec<_>>().join(" | "),
    }
}

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn criterion1() -> Line {
    let start = Instant::now();
    let inst = Instance::build(5, 1, 1, &FieldOptions::default()).unwrap();
    let sp = Spectrum::new(&inst);
    let values = sp.sweep(Method::Direct).unwrap();
    let elapsed = start.elapsed();
    let mut observed: BTreeMap<String, u64> = BTreeMap::new();
    for v in &values {
        *observed.entry(v.corr.to_string()).or_default() += 1;
    }
    // -1: 6, 4: 6, -6: 6, (1+√5)/2·5-1: 3, (1-√5)/2·5-1: 3; -11 never occurs.
    let expected: BTreeMap<String, u64> = [
        (QuadValue::integer(5, -1), 6),
        (QuadValue::integer(5, 4), 6),
        (QuadValue::integer(5, -6), 6),
        (QuadValue::new(5, rat(3, 2), rat(5, 2)), 3),
        (QuadValue::new(5, rat(3, 2), rat(-5, 2)), 3),
    ]
    .into_iter()
    .map(|(v, c)| (v.to_string(), c))
    .collect();
    let report = sp.report_from_sweep(Method::Direct, &values);
    let pass = observed == expected
        && report.count(CorrTag::ENeg) == 0
        && all_pass(&report.audits)
        && elapsed < Duration::from_secs(1);
    Line {
        pass,
        detail: format!("values {observed:?}; {:.3}s (limit 1s)", elapsed.as_secs_f64()),
    }
}

fn criterion2(run: &Run) -> Line {
    let want = frozen_counts(run.set);
    let limits = [
        (Method::Direct, Duration::from_secs(300)),
        (Method::Sums, Duration::from_secs(300)),
        (Method::RankFast, Duration::from_secs(10)),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (method, limit) in limits {
        let r = &run.reports[&method];
        let t = run.timings[&method];
        let ok = r.count_vector() == want && r.total() == 15624 && all_pass(&r.audits) && t <= limit;
        pass &= ok;
        parts.push(format!(
            "{method} {:?} {:.2}s (limit {}s)",
            r.count_vector(),
            t.as_secs_f64(),
            limit.as_secs()
        ));
    }
    Line {
        pass,
        detail: parts.join("; "),
    }
}

fn criterion3(runs: &[&Run]) -> Line {
    let mut pass = true;
    let mut total = Duration::ZERO;
    let mut parts = Vec::new();
    for run in runs {
        let reports: Vec<SpectrumReport> = run.reports.values().cloned().collect();
        let closed = closed_form_table(run.inst.params()).unwrap();
        let ok = agreement_audit(&reports).pass
            && reports.iter().all(|r| r.count_vector() == frozen_counts(run.set) && all_pass(&r.audits))
            && closed.count_vector() == frozen_counts(run.set);
        pass &= ok;
        total += run.timings.values().sum::<Duration>();
        parts.push(format!("{} {:?}", run.label(), closed.count_vector()));
    }
    pass &= total < Duration::from_secs(60);
    parts.push(format!("{:.2}s combined (limit 60s)", total.as_secs_f64()));
    Line {
        pass,
        detail: parts.join("; "),
    }
}

fn criterion10(run: &Run) -> (bool, String) {
    let sp = run.spectrum();
    let an = sp.analyzer();
    let f = run.inst.field();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed ^ run.set.0 ^ ((run.set.1 as u64) << 8) ^ ((run.set.2 as u64) << 16));
    let mut bad = Vec::new();
    let mut done = 0;
    while done < RANDOM_PAIRS {
        let a = FieldElem::from_index(rng.gen_range(0..f.size()));
        let b = FieldElem::from_index(rng.gen_range(0..f.size()));
        if a.is_zero() && b.is_zero() {
            continue;
        }
        done += 1;
        let direct = an.exp_sum(a, b, ExpSumMethod::Direct).ok();
        let ranked = an.exp_sum(a, b, ExpSumMethod::RankSign).ok();
        let analysis = an.analyze(a, b).unwrap();
        if direct.is_none() || direct != ranked || analysis.gram_rank != analysis.rank {
            bad.push((a.index(), b.index()));
        }
    }
    let float = sp.float_audit(&run.sums, FLOAT_BITS);
    let ok = bad.is_empty() && float.pass;
    (
        ok,
        format!(
            "{}: {} pairs, {} mismatches; {} (tol {FLOAT_TOLERANCE:e})",
            run.label(),
            RANDOM_PAIRS,
            bad.len(),
            float.observed
        ),
    )
}

fn main() -> ExitCode {
    let mut lines: Vec<(u32, &str, Line)> = Vec::new();
    lines.push((1, "exact spectrum (5,1,1) by direct summation", criterion1()));

    let runs: Vec<Run> = SETS.into_iter().map(Run::new).collect();
    let by_set = |s: (u64, u32, u32)| runs.iter().find(|r| r.set == s).unwrap();

    lines.push((2, "three methods on (5,3,1) within time limits", criterion2(by_set((5, 3, 1)))));
    lines.push((
        3,
        "three-way agreement on (13,1,1) and (5,3,3)",
        criterion3(&[by_set((13, 1, 1)), by_set((5, 3, 3))]),
    ));
    lines.push((
        4,
        "moment sums with c = 0 boundary terms",
        combine(runs.iter().map(|r| line_from(&r.label(), &r.spectrum().moment_audit(&r.sums))).collect()),
    ));
    lines.push((
        5,
        "rank and rank/sign censuses",
        combine(runs.iter().map(|r| line_from(&r.label(), &r.spectrum().rank_census(&r.analyses))).collect()),
    ));
    lines.push((
        6,
        "E(-α^d, cα) = η(c)p^m for every c ≠ 0",
        combine(runs.iter().map(|r| line_from(&r.label(), &[r.spectrum().twisted_sum_audit(&r.sums)])).collect()),
    ));
    lines.push((7, "g_υ root census", {
        let mut parts: Vec<(bool, String)> = runs
            .iter()
            .map(|r| line_from(&r.label(), &r.spectrum().analyzer().g_upsilon_audit()))
            .collect();
        for (set, want) in [((5, 1, 1), 5u64), ((5, 3, 3), 125)] {
            let c = by_set(set).spectrum().analyzer().g_upsilon_census();
            parts.push((c.single_root == want, format!("{set:?} single roots {} (want {want})", c.single_root)));
        }
        combine(parts)
    }));
    lines.push((8, "rank n-e forces a square c; excluded values absent", {
        combine(
            runs.iter()
                .map(|r| {
                    let mut audits = vec![r.spectrum().square_class_audit(&r.analyses)];
                    for rep in r.reports.values() {
                        audits.extend(rep.audits.iter().filter(|a| a.name.contains("excluded")).cloned());
                    }
                    line_from(&r.label(), &audits)
                })
                .collect(),
        )
    }));
    lines.push((9, "max |C_d| <= 2√(p^n)+1 for (5,1,1), (5,3,1)", {
        combine(
            [(5, 1, 1), (5, 3, 1)]
                .into_iter()
                .map(|s| {
                    let r = by_set(s);
                    let a = r.spectrum().bound_audit(&r.sums).expect("bound applies for p = 5, e = 1");
                    (a.pass, format!("{}: max {} {}", r.label(), a.observed, a.expected))
                })
                .collect(),
        )
    }));
    lines.push((
        10,
        "random-pair oracle equivalence and float agreement",
        combine(runs.iter().map(criterion10).collect()),
    ));

    let mut all = true;
    for (n, name, line) in &lines {
        all &= line.pass;
        println!(
            "criterion {n:>2} {} {name} :: {}",
            if line.pass { "PASS" } else { "FAIL" },
            line.detail
        );
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
