use std::fmt::Write as _;
use std::path::Path;

use eraprobe::analytics::{analyze, fmt_num, render_reports, AnalysisBundle, Variant};
use eraprobe::classification::read_classifications;
use eraprobe::embedding::BiasTable;
use eraprobe::entities::OverlapReport;
use serde::de::DeserializeOwned;

use super::{
    write_json, write_text, Context, ANALYZE_DIR, CLASSIFICATIONS_FILE, CLASSIFY_DIR, GLOVE_DIR,
    PREPARE_DIR, VALIDATE_DIR,
};
use crate::error::{self, CliError, Kind};
use crate::Outcome;

pub const BUNDLE_FILE: &str = "bundle.json";

pub fn run(ctx: &Context) -> Result<Outcome, CliError> {
    const STAGE: &str = "analyze";
    let path = ctx.run_dir().join(CLASSIFY_DIR).join(CLASSIFICATIONS_FILE);
    ctx.require(STAGE, &path, "classify")?;
    let records =
        read_classifications(&path).map_err(|e| CliError::new(Kind::Io, STAGE, e.to_string()))?;
    let models = ctx.models(STAGE)?;
    let bundle = analyze(&records, &models, ctx.cfg.m, ctx.exec);
    let dir = ctx.stage_dir(STAGE, ANALYZE_DIR)?;
    let mut written =
        render_reports(&bundle, &dir).map_err(|e| CliError::new(Kind::Io, STAGE, e.to_string()))?;
    written.push(write_json(STAGE, &dir.join(BUNDLE_FILE), &bundle)?);
    let mut summary = vec![format!("{} frequency tables", bundle.tables.len())];
    summary.extend(bundle.warnings.iter().map(|w| format!("warning: {w}")));
    Ok(ctx.outcome(written, summary))
}

fn read_json<T: DeserializeOwned>(stage: &'static str, path: &Path) -> Result<Option<T>, CliError> {
    if !path.exists() {
        return Ok(None);
    }
    let text = std::fs::read_to_string(path).map_err(|e| error::io(stage, path, e))?;
    serde_json::from_str(&text)
        .map(Some)
        .map_err(|e| CliError::new(Kind::Validation, stage, format!("{}: {e}", path.display())))
}

fn sorted_files(dir: &Path, prefix: &str, ext: &str) -> Vec<std::path::PathBuf> {
    let mut v: Vec<_> = std::fs::read_dir(dir)
        .into_iter()
        .flatten()
        .flatten()
        .map(|e| e.path())
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.starts_with(prefix) && n.ends_with(ext))
        })
        .collect();
    v.sort();
    v
}

const NOT_RUN: &str = "_Stage not run._\n";

fn corpus_section(s: &mut String, stats: Option<serde_json::Value>) {
    s.push_str("## Corpus\n\n");
    let Some(stats) = stats else {
        s.push_str(NOT_RUN);
        return;
    };
    s.push_str(
        "| decade | books | segments | tokens | reference overlap % |\n|---|---|---|---|---|\n",
    );
    if let Some(decades) = stats["decades"].as_object() {
        for (d, v) in decades {
            let overlap = v["reference_overlap_pct"]
                .as_f64()
                .map_or_else(|| "-".into(), |x| format!("{x:.2}"));
            let _ = writeln!(
                s,
                "| {d} | {} | {} | {} | {overlap} |",
                v["books"], v["segments"], v["tokens"]
            );
        }
    }
}

fn overlap_section(s: &mut String, reports: &[OverlapReport]) {
    s.push_str("\n## Entity overlap\n\n");
    if reports.is_empty() {
        s.push_str(NOT_RUN);
        return;
    }
    s.push_str("| model | rounding | prompts | overlap % |\n|---|---|---|---|\n");
    for r in reports {
        let rounding = serde_json::to_value(r.rounding)
            .ok()
            .and_then(|v| v.as_str().map(String::from))
            .unwrap_or_default();
        let _ = writeln!(
            s,
            "| {} | {rounding} | {} | {:.2} |",
            r.model,
            r.eeps.len(),
            r.final_score
        );
    }
}

fn analysis_section(s: &mut String, bundle: Option<AnalysisBundle>) {
    s.push_str("\n## Response bias\n\n");
    let Some(b) = bundle else {
        s.push_str(NOT_RUN);
        return;
    };
    s.push_str("Significant subcategories (Kruskal-Wallis, p < 0.05) per fine-tuned table:\n\n");
    s.push_str("| table | significant | p |\n|---|---|---|\n");
    for t in b.tables.iter().filter(|t| t.variant == Variant::FineTuned) {
        let stem = t.stem();
        let Some(sig) = b.significance.get(&stem) else {
            continue;
        };
        let hits: Vec<String> = sig
            .iter()
            .filter(|(_, r)| r.significant)
            .map(|(k, _)| k.to_string())
            .collect();
        let ps: Vec<String> = sig
            .iter()
            .filter(|(_, r)| r.significant)
            .map(|(_, r)| format!("{:.4}", r.p_value))
            .collect();
        let hits = if hits.is_empty() {
            "-".to_string()
        } else {
            hits.join(", ")
        };
        let ps = if ps.is_empty() {
            "-".to_string()
        } else {
            ps.join(", ")
        };
        let _ = writeln!(s, "| {stem} | {hits} | {ps} |");
    }
    s.push_str(
        "\nDispersion (mean population std-dev of percentages across decade and role cells):\n\n",
    );
    s.push_str("| family | demographic | dispersion |\n|---|---|---|\n");
    for d in &b.dispersion {
        for (demo, v) in &d.values {
            let _ = writeln!(s, "| {} | {demo} | {:.3} |", d.family, v);
        }
    }
    s.push_str("\nMean fine-tuned minus pre-trained percentage:\n\n");
    if b.deltas.is_empty() {
        s.push_str("_No pre-trained model in this run._\n");
    } else {
        s.push_str("| family | subcategory | delta |\n|---|---|---|\n");
        for (fam, d) in &b.deltas {
            for (sub, v) in d {
                let _ = writeln!(
                    s,
                    "| {fam} | {sub} | {} |",
                    fmt_num((v * 1000.0).round() / 1000.0)
                );
            }
        }
    }
    if !b.warnings.is_empty() {
        s.push_str("\nWarnings:\n\n");
        for w in &b.warnings {
            let _ = writeln!(s, "- {w}");
        }
    }
}

fn glove_section(s: &mut String, tables: &[(String, BiasTable)]) {
    s.push_str("\n## Embedding baseline\n\n");
    if tables.is_empty() {
        s.push_str(NOT_RUN);
        return;
    }
    for (name, t) in tables {
        let _ = writeln!(
            s,
            "{name}: vocabulary of {} words. Negative values lean toward the first group.\n",
            t.vocab_size
        );
        s.push_str("| role | comparison |");
        for w in &t.windows {
            let _ = write!(s, " window {w} |");
        }
        s.push_str(" sign flip |\n|---|---|");
        s.push_str(&"---|".repeat(t.windows.len() + 1));
        s.push('\n');
        for r in t.rows() {
            let _ = write!(s, "| {} | {} |", r.role, r.comparison);
            for v in &r.values {
                match v {
                    Some(x) => {
                        let _ = write!(s, " {x:.3} |");
                    }
                    None => s.push_str(" N/A |"),
                }
            }
            let _ = writeln!(s, " {} |", if r.sign_flip { "yes" } else { "no" });
        }
        s.push('\n');
    }
}

pub fn report(ctx: &Context) -> Result<Outcome, CliError> {
    const STAGE: &str = "report";
    let run = ctx.run_dir();
    let stats = read_json(STAGE, &run.join(PREPARE_DIR).join("corpus_stats.json"))?;
    let overlaps = sorted_files(&run.join(VALIDATE_DIR), "overlap_", ".json")
        .iter()
        .map(|p| read_json::<OverlapReport>(STAGE, p))
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .flatten()
        .collect::<Vec<_>>();
    let bundle = read_json(STAGE, &run.join(ANALYZE_DIR).join(BUNDLE_FILE))?;
    let glove = sorted_files(&run.join(GLOVE_DIR), "table_", ".json")
        .iter()
        .map(|p| {
            let name = p
                .file_stem()
                .and_then(|n| n.to_str())
                .unwrap_or("")
                .trim_start_matches("table_")
                .to_string();
            read_json::<BiasTable>(STAGE, p).map(|t| t.map(|t| (name, t)))
        })
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .flatten()
        .collect::<Vec<_>>();

    let mut s = format!("# Run {}\n\n", ctx.cfg.run_id);
    let _ = writeln!(
        s,
        "Seed {}, {} samples per role prompt, {} runs per entity prompt.\n",
        ctx.cfg.seed, ctx.cfg.m, ctx.cfg.n
    );
    corpus_section(&mut s, stats);
    overlap_section(&mut s, &overlaps);
    analysis_section(&mut s, bundle);
    glove_section(&mut s, &glove);
    let out = write_text(STAGE, &run.join("report.md"), &s)?;
    Ok(ctx.outcome(vec![out], Vec::new()))
}
