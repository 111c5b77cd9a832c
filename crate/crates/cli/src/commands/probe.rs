use std::collections::BTreeMap;

use eraprobe::classification::{
    classify_records, export_audit_sample, write_classifications, AuditItem, ClassificationRecord,
    Classifier,
};
use eraprobe::probing::{builtin_catalogs, read_records, Prober, ResponseRecord, ResponseStore};

use super::{write_json, Context, CLASSIFICATIONS_FILE, CLASSIFY_DIR, PROBE_DIR, RESPONSES_FILE};
use crate::config::ClassifyMethod;
use crate::error::{self, CliError, Kind};
use crate::Outcome;

pub fn run(ctx: &Context) -> Result<Outcome, CliError> {
    const STAGE: &str = "probe";
    let models = ctx.models(STAGE)?;
    let (reps, _) = builtin_catalogs();
    let dir = ctx.stage_dir(STAGE, PROBE_DIR)?;
    let store =
        ResponseStore::open(&dir.join(RESPONSES_FILE)).map_err(|e| error::from_probe(STAGE, e))?;
    let transport = ctx.transport(STAGE)?;
    let mut prober = Prober::new(&transport).with_store(&store);
    prober.retry = ctx.retry();
    prober.exec = ctx.exec;
    prober.parallelism = ctx.cfg.parallelism;

    let report = prober
        .run_campaign(&models, &reps, ctx.cfg.m)
        .map_err(|e| error::from_probe(STAGE, e))?;
    let written = vec![
        store.path().to_path_buf(),
        write_json(STAGE, &dir.join("campaign.json"), &report)?,
    ];
    if let Some(f) = report.failures.first() {
        return Err(CliError::new(
            Kind::Transport,
            STAGE,
            format!(
                "{} of {} cells incomplete; first: {} {}: {}",
                report.failures.len(),
                report.cells,
                f.model,
                f.prompt_id,
                f.error
            ),
        ));
    }
    let summary = vec![format!(
        "{} cells, {} responses ({} new, {} reused)",
        report.cells, report.responses, report.requested, report.reused
    )];
    Ok(ctx.outcome(written, summary))
}

fn order_key(r: &ResponseRecord) -> (String, String, u32) {
    (r.model.clone(), r.prompt_id.clone(), r.sample_index)
}

pub fn classify(ctx: &Context) -> Result<Outcome, CliError> {
    const STAGE: &str = "classify";
    let store_path = ctx.run_dir().join(PROBE_DIR).join(RESPONSES_FILE);
    ctx.require(STAGE, &store_path, "probe")?;
    let mut records = read_records(&store_path).map_err(|e| error::from_probe(STAGE, e))?;
    // Concurrent probing appends in completion order.
    records.sort_by_key(order_key);
    records.dedup_by_key(|r| order_key(r));
    let (reps, _) = builtin_catalogs();
    let by_id: BTreeMap<String, String> = reps.iter().map(|r| (r.id(), r.prompt())).collect();
    records.retain(|r| by_id.contains_key(&r.prompt_id));

    let transport = ctx.transport(STAGE)?;
    let judge_model;
    let classifier = match ctx.cfg.method {
        ClassifyMethod::Rules => Classifier::Rules,
        ClassifyMethod::Judge => {
            judge_model = ctx.judge(STAGE)?;
            Classifier::Judge {
                transport: &transport,
                model: &judge_model,
                retry: ctx.retry(),
            }
        }
    };
    let classified = classify_records(&records, &reps, &classifier, ctx.exec, ctx.cfg.parallelism);
    let failed: Vec<&ClassificationRecord> = classified
        .iter()
        .filter(|c| {
            c.diagnostic
                .as_deref()
                .is_some_and(|d| d.starts_with("judge error"))
        })
        .collect();
    if let Some(f) = failed.first() {
        return Err(CliError::new(
            Kind::Transport,
            STAGE,
            format!(
                "{} judge calls failed; first: {}",
                failed.len(),
                f.diagnostic.as_deref().unwrap_or("")
            ),
        ));
    }

    let dir = ctx.stage_dir(STAGE, CLASSIFY_DIR)?;
    let out = dir.join(CLASSIFICATIONS_FILE);
    write_classifications(&out, &classified)
        .map_err(|e| CliError::new(Kind::Io, STAGE, e.to_string()))?;

    let items: Vec<AuditItem> = records
        .iter()
        .zip(&classified)
        .map(|(r, c)| AuditItem {
            id: format!("{}/{}/{}", r.model, r.prompt_id, r.sample_index),
            rep: by_id.get(&r.prompt_id).cloned().unwrap_or_default(),
            response: r.response_text.clone(),
            label: c.label,
        })
        .collect();
    let audit = dir.join("audit_sample.csv");
    let k = ctx.cfg.audit_size.min(items.len());
    export_audit_sample(&items, k, ctx.cfg.seed, &audit)
        .map_err(|e| CliError::new(Kind::Io, STAGE, e.to_string()))?;

    let uncategorized = classified
        .iter()
        .filter(|c| c.label == eraprobe::probing::Label::Uncategorized)
        .count();
    let summary = vec![format!(
        "{} responses classified, {uncategorized} uncategorized",
        classified.len()
    )];
    Ok(ctx.outcome(vec![out, audit], summary))
}
