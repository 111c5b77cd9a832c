//! Acceptance gate. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::time::{Duration, Instant};

use eraprobe::analytics::{frequency_tables, kruskal_wallis, polyfit2};
use eraprobe::classification::{parse_judge_output, ClassificationRecord, Lexicon, Method};
use eraprobe::corpus::{segment_book, Book};
use eraprobe::embedding::{
    association_bias, bias_table, build_vocab, cooccurrence, train_glove, Comparison,
    EmbeddingModel, GloveParams, WordLists, WordVectors,
};
use eraprobe::entities::{
    eep_overlap, run_overlap, EntitySet, EntitySource, Extractor, HeuristicExtractor, RoundingMode,
};
use eraprobe::exec::Execution;
use eraprobe::probing::{builtin_catalogs, find_rep, Demographic, Era, Label, ModelRef};
use eraprobe::tokenize::{Tokenizer, WordTokenizer};
use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = fn() -> Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(start: Instant, limit: Duration) -> Result<(), String> {
    let took = start.elapsed();
    ensure(took < limit, || format!("took {took:?}, limit {limit:?}"))
}

fn entity_overlap_worked_example() -> Result<String, String> {
    let start = Instant::now();
    let x = HeuristicExtractor::default();
    let subset = x
        .extract(
            "John and Mary moved to New York.",
            EntitySource::CorpusSubset,
        )
        .map_err(|e| e.to_string())?;
    let runs = [
        "John drove to Chicago in his Ford.",
        "IBM hired John in Los Angeles.",
        "John married Mary in Boston.",
    ];
    let mut pct = Vec::new();
    for r in runs {
        let set = x
            .extract(r, EntitySource::ModelResponse)
            .map_err(|e| e.to_string())?;
        pct.push(run_overlap(&set, &subset));
    }
    let rounded = eep_overlap(&pct, RoundingMode::WholePercent).map_err(|e| e.to_string())?;
    let exact = eep_overlap(&pct, RoundingMode::Exact).map_err(|e| e.to_string())?;
    ensure((rounded - 44.33).abs() <= 0.01, || {
        format!("whole-percent {rounded}")
    })?;
    ensure((exact - 44.44).abs() <= 0.01, || format!("exact {exact}"))?;

    // Same numbers through the CLI with the mock model.
    let out = tempfile::tempdir().map_err(|e| e.to_string())?;
    let code = common::run_stage_with(out.path(), "validate", &[], &["--model", "toy-1950s"]);
    ensure(code == 0, || format!("validate exited {code}"))?;
    let run = fs::read_dir(out.path())
        .map_err(|e| e.to_string())?
        .next()
        .ok_or("no run dir")?
        .map_err(|e| e.to_string())?
        .path();
    let report: serde_json::Value = serde_json::from_str(
        &fs::read_to_string(run.join("validate/overlap_toy-1950s.json"))
            .map_err(|e| e.to_string())?,
    )
    .map_err(|e| e.to_string())?;
    let cli = report["final"].as_f64().ok_or("no final score")?;
    ensure((cli - 44.33).abs() <= 0.01, || format!("cli {cli}"))?;
    within(start, Duration::from_secs(1))?;
    Ok(format!(
        "whole-percent {rounded:.2}, exact {exact:.2}, cli {cli:.2}"
    ))
}

fn run_overlap_oracle() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let pool: Vec<String> = (0..12).map(|i| format!("e{i}")).collect();
    let pick = |rng: &mut ChaCha8Rng| -> Vec<String> {
        let k = rng.gen_range(0..8);
        (0..k).map(|_| pool.choose(rng).unwrap().clone()).collect()
    };
    for case in 0..1000 {
        let resp = pick(&mut rng);
        let sub = pick(&mut rng);
        let rs = EntitySet::from_strings(EntitySource::ModelResponse, &resp);
        let ss = EntitySet::from_strings(EntitySource::CorpusSubset, &sub);
        let uniq: BTreeSet<&String> = resp.iter().collect();
        let mut hits = 0usize;
        for r in &uniq {
            if sub.iter().any(|s| s == *r) {
                hits += 1;
            }
        }
        let want = if uniq.is_empty() {
            0.0
        } else {
            100.0 * hits as f64 / uniq.len() as f64
        };
        let got = run_overlap(&rs, &ss);
        ensure(got == want, || format!("case {case}: {got} != {want}"))?;
    }
    Ok("1000/1000 pairs".into())
}

/// Kruskal-Wallis H from scratch: O(n²) mid-ranks, rank sums, tie factor.
fn kw_oracle(groups: &[Vec<f64>]) -> f64 {
    let all: Vec<f64> = groups.iter().flatten().copied().collect();
    let n = all.len() as f64;
    let rank = |v: f64| {
        let less = all.iter().filter(|&&x| x < v).count() as f64;
        let eq = all.iter().filter(|&&x| x == v).count() as f64;
        less + (eq + 1.0) / 2.0
    };
    let mut h = 0.0;
    for g in groups {
        let r: f64 = g.iter().map(|&v| rank(v)).sum();
        h += r * r / g.len() as f64;
    }
    h = 12.0 / (n * (n + 1.0)) * h - 3.0 * (n + 1.0);
    let mut counts: BTreeMap<u64, f64> = BTreeMap::new();
    for v in &all {
        *counts.entry(v.to_bits()).or_default() += 1.0;
    }
    let t: f64 = counts.values().map(|t| t * t * t - t).sum();
    h / (1.0 - t / (n * n * n - n))
}

fn kruskal_wallis_checks() -> Result<String, String> {
    let r = kruskal_wallis(&[
        vec![1.0, 2.0, 3.0],
        vec![4.0, 5.0, 6.0],
        vec![7.0, 8.0, 9.0],
    ])
    .map_err(|e| e.to_string())?;
    ensure((r.h_statistic - 7.2).abs() <= 1e-9, || {
        format!("H {}", r.h_statistic)
    })?;
    ensure((r.p_value - (-3.6f64).exp()).abs() <= 1e-9, || {
        format!("p {}", r.p_value)
    })?;
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    let mut done = 0;
    while done < 200 {
        let k = rng.gen_range(2..5);
        let groups: Vec<Vec<f64>> = (0..k)
            .map(|_| {
                (0..rng.gen_range(1..6))
                    .map(|_| f64::from(rng.gen_range(0..4u8)) * 2.0)
                    .collect()
            })
            .collect();
        let first = groups[0][0];
        if groups.iter().flatten().all(|&v| v == first) {
            continue;
        }
        let got = kruskal_wallis(&groups)
            .map_err(|e| e.to_string())?
            .h_statistic;
        let want = kw_oracle(&groups);
        worst = worst.max((got - want).abs());
        ensure((got - want).abs() < 1e-9, || {
            format!("{groups:?}: {got} vs {want}")
        })?;
        done += 1;
    }
    Ok(format!(
        "H {:.12}, p {:.3e}, 200 tied cases max |dH| {worst:.1e}",
        r.h_statistic, r.p_value
    ))
}

fn five_word_fixture() -> (Vec<&'static str>, GloveParams) {
    let text = "king queen man woman child king man queen woman child man king woman queen";
    let params = GloveParams {
        dim: 4,
        iters: 10,
        lr: 0.05,
        x_max: 2.0,
        ..GloveParams::default()
    };
    (text.split(' ').collect(), params)
}

fn glove_gradient() -> Result<String, String> {
    let start = Instant::now();
    let (toks, params) = five_word_fixture();
    let vocab = build_vocab(&toks, 1).map_err(|e| e.to_string())?;
    let cooc = cooccurrence(&toks, &vocab, 3).map_err(|e| e.to_string())?;
    let entries = cooc.sorted_entries();
    let model = EmbeddingModel::init(vocab.len(), params, &mut ChaCha8Rng::seed_from_u64(3));
    let g = model.gradients(&entries);
    let h = 1e-6;
    let mut worst = 0.0f64;
    type Field = fn(&mut EmbeddingModel) -> &mut Vec<f64>;
    let groups: [(&str, &[f64], Field); 4] = [
        ("w", &g.w, |m| &mut m.w),
        ("wc", &g.wc, |m| &mut m.wc),
        ("b", &g.b, |m| &mut m.b),
        ("bc", &g.bc, |m| &mut m.bc),
    ];
    for (name, analytic, field) in groups {
        for (k, &a) in analytic.iter().enumerate() {
            let mut plus = model.clone();
            field(&mut plus)[k] += h;
            let mut minus = model.clone();
            field(&mut minus)[k] -= h;
            let numeric = (plus.loss(&entries) - minus.loss(&entries)) / (2.0 * h);
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-3);
            worst = worst.max(rel);
            ensure(rel < 1e-5, || {
                format!("{name}[{k}] analytic {a} numeric {numeric}")
            })?;
        }
    }
    let trained = train_glove(&cooc, params).map_err(|e| e.to_string())?;
    ensure(trained.loss_trace.len() == 11, || {
        format!("trace {:?}", trained.loss_trace)
    })?;
    ensure(trained.loss_trace.windows(2).all(|w| w[1] < w[0]), || {
        format!("trace {:?}", trained.loss_trace)
    })?;
    within(start, Duration::from_secs(5))?;
    Ok(format!(
        "max rel err {worst:.1e}, loss {:.4} -> {:.4}",
        trained.loss_trace[0], trained.loss_trace[10]
    ))
}

/// Two blocks of text: one pairing "nurse" with female words, one pairing
/// "soldier" with male words.
fn nurse_corpus() -> Vec<String> {
    let female = [
        "the nurse said she would bring her kit",
        "a woman asked the nurse about her day",
        "the nurse told her sister she was tired",
        "she thanked the nurse and the woman smiled",
        "herself a nurse she knew every female patient",
    ];
    let male = [
        "the soldier said he would bring his kit",
        "a man asked the soldier about his day",
        "the soldier told his brother he was tired",
        "he thanked the soldier and the man smiled",
        "himself a soldier he knew every male recruit",
    ];
    let block = |lines: &[&str]| {
        (0..20)
            .map(|i| lines[i % lines.len()])
            .collect::<Vec<_>>()
            .join(". ")
    };
    vec![block(&female), block(&male)]
}

fn association_properties() -> Result<String, String> {
    let (toks, base) = five_word_fixture();
    let vocab = build_vocab(&toks, 1).map_err(|e| e.to_string())?;
    let cooc = cooccurrence(&toks, &vocab, 3).map_err(|e| e.to_string())?;
    let a = vec!["queen".to_string(), "woman".to_string()];
    let b = vec!["man".to_string(), "child".to_string()];
    let mut worst = 0.0f64;
    for seed in 0..100 {
        let model = train_glove(&cooc, GloveParams { seed, ..base }).map_err(|e| e.to_string())?;
        let v = WordVectors::from_model(&model, &vocab);
        let ab = association_bias(&v, "king", &a, &b).ok_or("missing words")?;
        let ba = association_bias(&v, "king", &b, &a).ok_or("missing words")?;
        let aa = association_bias(&v, "king", &a, &a).ok_or("missing words")?;
        worst = worst.max((ab + ba).abs()).max(aa.abs());
        ensure((ab + ba).abs() <= 1e-12 && aa.abs() <= 1e-12, || {
            format!("seed {seed}: {ab} {ba} {aa}")
        })?;
    }
    let params = GloveParams {
        dim: 16,
        iters: 100,
        seed: 5,
        ..GloveParams::default()
    };
    let t = bias_table(
        &nurse_corpus(),
        &["nurse".to_string()],
        &WordLists::builtin(),
        &Comparison::defaults(),
        &[5, 10, 15],
        1,
        params,
        Execution::default(),
    )
    .map_err(|e| e.to_string())?;
    let rows = t.rows();
    let wm = rows
        .iter()
        .find(|r| r.comparison == "W vs M")
        .ok_or("no W vs M row")?;
    ensure(
        wm.values.len() == 3 && wm.values.iter().all(|v| v.is_some_and(|x| x < 0.0)),
        || format!("{:?}", wm.values),
    )?;
    Ok(format!(
        "100 models max err {worst:.1e}; nurse W vs M {:?}",
        wm.values
            .iter()
            .map(|v| format!("{:.3}", v.unwrap()))
            .collect::<Vec<_>>()
    ))
}

fn na_propagation() -> Result<String, String> {
    let roles: Vec<String> = ["nurse", "top_student", "ceo"].map(String::from).to_vec();
    let t = bias_table(
        &nurse_corpus(),
        &roles,
        &WordLists::builtin(),
        &Comparison::defaults(),
        &[5, 10, 15],
        1,
        GloveParams {
            dim: 8,
            iters: 10,
            ..GloveParams::default()
        },
        Execution::default(),
    )
    .map_err(|e| e.to_string())?;
    let mut na = 0;
    for r in t.rows() {
        // The corpus has no non-binary words, so NB comparisons are N/A too.
        let absent = r.role != "nurse" || r.comparison.starts_with("NB");
        ensure(r.values.iter().all(|v| v.is_none() == absent), || {
            format!("{r:?}")
        })?;
        na += r.values.iter().filter(|v| v.is_none()).count();
    }
    let csv = t.to_csv();
    ensure(
        csv.lines()
            .any(|l| l.starts_with("ceo,") && l.ends_with(",NA")),
        || "csv lacks NA cells".into(),
    )?;
    ensure(na == 2 * 3 * 3 + 2 * 3, || format!("{na} N/A cells"))?;
    Ok(format!(
        "{na} N/A cells: top_student, ceo, and the missing non-binary group"
    ))
}

fn judge_fixtures() -> Result<String, String> {
    let text = include_str!("../../core/tests/fixtures/judge_outputs.tsv");
    let (reps, _) = builtin_catalogs();
    let mut n = 0;
    let mut seen = BTreeSet::new();
    let mut martian = false;
    for line in text
        .lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
    {
        let cols: Vec<&str> = line.splitn(4, '\t').collect();
        let demo: Demographic = cols[0].parse().map_err(|e| format!("{e}"))?;
        let rep =
            find_rep(&reps, demo, cols[1]).ok_or_else(|| format!("no prompt for {}", cols[1]))?;
        let expected: Label = cols[2].parse().map_err(|e| format!("{e}"))?;
        let output = cols[3].replace("\\n", "\n");
        let got = parse_judge_output(&output, rep, Lexicon::builtin()).label;
        ensure(got == expected, || format!("{line}: got {got}"))?;
        seen.insert(demo);
        martian |= output.contains("Martian") && expected == Label::Uncategorized;
        n += 1;
    }
    ensure(n == 40, || format!("{n} fixtures"))?;
    ensure(seen.len() == 4, || format!("demographics {seen:?}"))?;
    ensure(martian, || "no Martian case".into())?;
    Ok("40/40 fixtures, 4 demographics".into())
}

fn frequency_contract() -> Result<String, String> {
    let (reps, _) = builtin_catalogs();
    let model = ModelRef::new("m-1950s", "mock://x", Some(Era::Decade(1950)));
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut cells = 0;
    for batch in 0..500 {
        let mut records = Vec::new();
        for rep in &reps {
            let subs = rep.demographic.subcategories();
            for i in 0..50 {
                let k = rng.gen_range(0..=subs.len());
                let label = if k == subs.len() {
                    Label::Uncategorized
                } else {
                    Label::Sub(subs[k])
                };
                records.push(ClassificationRecord {
                    model: model.name.clone(),
                    era: Some("1950s".into()),
                    demographic: rep.demographic,
                    role: rep.role.clone(),
                    sample_index: i,
                    label,
                    method: Method::Judge,
                    raw_judge_output: String::new(),
                    diagnostic: None,
                });
            }
        }
        records.shuffle(&mut rng);
        let (tables, warnings) = frequency_tables(&records, std::slice::from_ref(&model), 50);
        ensure(warnings.is_empty(), || {
            format!("batch {batch}: {warnings:?}")
        })?;
        ensure(tables.len() == reps.len(), || {
            format!("batch {batch}: {} tables", tables.len())
        })?;
        for t in &tables {
            for row in t.rows.values() {
                let mut sum = row.uncategorized_percent();
                let mut all = vec![sum];
                for &s in &t.subcategories {
                    all.push(row.percent(s));
                    sum += row.percent(s);
                }
                ensure(
                    all.iter().all(|p| p.fract() == 0.0 && p % 2.0 == 0.0),
                    || format!("batch {batch}: {all:?}"),
                )?;
                ensure(sum == 100.0, || format!("batch {batch}: sum {sum}"))?;
                cells += 1;
            }
        }
    }
    Ok(format!("500 batches, {cells} rows"))
}

fn segmentation() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let words = [
        "the",
        "house",
        "river",
        "Mary",
        "walked",
        "slowly",
        "and",
        "it",
        "rained",
        "\"yes\"",
        "don't",
        "well-known",
    ];
    let mut segments = 0;
    let (mut lo, mut hi) = (usize::MAX, 0);
    for b in 0..100 {
        let mut text = String::new();
        let n_sent = rng.gen_range(100..1200);
        for _ in 0..n_sent {
            let len = rng.gen_range(1..120);
            let sent: Vec<&str> = (0..len).map(|_| *words.choose(&mut rng).unwrap()).collect();
            let end = [".", "!", "?"].choose(&mut rng).unwrap();
            let sep = if rng.gen_bool(0.1) { "\n\n" } else { " " };
            text.push_str(&sent.join(" "));
            text.push_str(end);
            text.push_str(sep);
        }
        let book = Book {
            title: format!("b{b}"),
            content: text,
            year: 1950,
            authors: vec![],
        };
        let segs = segment_book(&book, 8000, &WordTokenizer).map_err(|e| e.to_string())?;
        let stream: Vec<&str> = WordTokenizer
            .tokenize(&book.content)
            .iter()
            .map(|t| t.text(&book.content))
            .collect();
        let joined: Vec<&str> = segs
            .iter()
            .flat_map(|s| s.tokens.iter().map(String::as_str))
            .collect();
        ensure(joined == stream, || {
            format!("book {b}: token stream differs")
        })?;
        for s in &segs {
            let rebuilt: Vec<&str> = s.spans.iter().map(|r| &s.text[r.clone()]).collect();
            ensure(
                rebuilt == s.tokens.iter().map(String::as_str).collect::<Vec<_>>(),
                || format!("book {b} seg {}: spans", s.index),
            )?;
        }
        for s in &segs[..segs.len() - 1] {
            lo = lo.min(s.token_count);
            hi = hi.max(s.token_count);
            ensure((4000..=8400).contains(&s.token_count), || {
                format!("book {b} seg {}: {} tokens", s.index, s.token_count)
            })?;
        }
        segments += segs.len();
    }
    Ok(format!(
        "100 books, {segments} segments, non-final sizes {lo}..={hi}"
    ))
}

fn end_to_end() -> Result<String, String> {
    let start = Instant::now();
    let a = tempfile::tempdir().map_err(|e| e.to_string())?;
    let b = tempfile::tempdir().map_err(|e| e.to_string())?;
    let run_a = common::run_pipeline(a.path(), &[])?;
    let run_b = common::run_pipeline(b.path(), &[])?;
    let (da, db) = (common::digest_tree(&run_a), common::digest_tree(&run_b));
    ensure(da == db, || "two runs differ".into())?;
    common::check_golden(&run_a)?;
    within(start, Duration::from_secs(60))?;
    Ok(format!(
        "{} files identical across runs and to golden",
        da.len()
    ))
}

fn normal_equations(points: &[(f64, f64)]) -> DVector<f64> {
    let x = DMatrix::from_fn(points.len(), 3, |i, j| points[i].0.powi(j as i32));
    let y = DVector::from_iterator(points.len(), points.iter().map(|p| p.1));
    let xt = x.transpose();
    (&xt * &x).lu().solve(&(&xt * y)).expect("singular design")
}

fn polyfit() -> Result<String, String> {
    let pts: Vec<(f64, f64)> = (0..7).map(|i| (f64::from(i), f64::from(i * i))).collect();
    let f = polyfit2(&pts).map_err(|e| e.to_string())?;
    ensure(
        (f.a2 - 1.0).abs() < 1e-9 && f.a1.abs() < 1e-9 && f.a0.abs() < 1e-9,
        || format!("{f:?}"),
    )?;
    ensure(f.residual_norm < 1e-12, || {
        format!("residual {}", f.residual_norm)
    })?;
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let (c2, c1, c0) = (
            rng.gen_range(-3.0..3.0),
            rng.gen_range(-10.0..10.0),
            rng.gen_range(0.0..50.0),
        );
        let pts: Vec<(f64, f64)> = (0..7)
            .map(|i| {
                let x = f64::from(i);
                (x, c2 * x * x + c1 * x + c0 + rng.gen_range(-5.0..5.0))
            })
            .collect();
        let f = polyfit2(&pts).map_err(|e| e.to_string())?;
        let o = normal_equations(&pts);
        let d = (f.a0 - o[0])
            .abs()
            .max((f.a1 - o[1]).abs())
            .max((f.a2 - o[2]).abs());
        worst = worst.max(d);
        ensure(d < 1e-9, || format!("{pts:?}: {f:?} vs {o:?}"))?;
    }
    Ok(format!(
        "exact residual {:.1e}; 200 noisy series max diff {worst:.1e}",
        f.residual_norm
    ))
}

fn main() {
    let checks: [(&str, Check); 11] = [
        (
            "entity overlap worked example",
            entity_overlap_worked_example,
        ),
        ("run_overlap vs brute-force oracle", run_overlap_oracle),
        (
            "Kruskal-Wallis reference and tie oracle",
            kruskal_wallis_checks,
        ),
        ("GloVe gradient check and loss descent", glove_gradient),
        (
            "association bias antisymmetry and nurse corpus",
            association_properties,
        ),
        ("N/A propagation for absent roles", na_propagation),
        ("judge-output parser fixtures", judge_fixtures),
        ("frequency-table contract", frequency_contract),
        ("segmentation", segmentation),
        ("end-to-end determinism vs golden", end_to_end),
        ("polyfit2 exact and noisy", polyfit),
    ];
    let mut failed = 0;
    for (name, check) in checks {
        let start = Instant::now();
        let result = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        let ms = start.elapsed().as_millis();
        match result {
            Ok(detail) => println!("PASS {name} ({detail}) [{ms} ms]"),
            Err(why) => {
                failed += 1;
                println!("FAIL {name}: {why} [{ms} ms]");
            }
        }
    }
    println!("{} passed, {failed} failed", 11 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
