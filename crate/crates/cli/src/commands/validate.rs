use eraprobe::entities::{
    extract_subset_entities, EntityError, EntitySet, EntitySource, Extractor, HeuristicExtractor,
    OverlapReport, RemoteExtractor,
};
use eraprobe::probing::{builtin_catalogs, Era, Prober, ResponseStore, SampleMode};

use super::{write_json, Context, RESPONSES_FILE, VALIDATE_DIR};
use crate::config::ExtractorChoice;
use crate::error::{self, CliError, Kind};
use crate::Outcome;

const STAGE: &str = "validate";

fn extractor(ctx: &Context) -> Result<Box<dyn Extractor>, CliError> {
    Ok(match &ctx.cfg.extractor {
        ExtractorChoice::Heuristic => Box::new(HeuristicExtractor::default()),
        ExtractorChoice::Remote { url, max_in_flight } => Box::new(
            RemoteExtractor::new(
                url,
                *max_in_flight,
                std::time::Duration::from_secs(ctx.cfg.timeout_secs),
            )
            .map_err(|e| error::from_entities(STAGE, e))?,
        ),
    })
}

pub fn run(ctx: &Context, only: Option<&str>) -> Result<Outcome, CliError> {
    let cfg = &ctx.cfg;
    let models: Vec<_> = ctx
        .models(STAGE)?
        .into_iter()
        .filter(|m| only.is_none_or(|n| n == m.name))
        .filter(|m| matches!(m.era, Some(Era::Decade(_))))
        .collect();
    if models.is_empty() {
        return Err(CliError::new(
            Kind::Validation,
            STAGE,
            "no fine-tuned model selected",
        ));
    }
    let (corpus, _) = ctx.clean_corpus(STAGE)?;
    let extractor = extractor(ctx)?;
    let dir = ctx.stage_dir(STAGE, VALIDATE_DIR)?;
    let store =
        ResponseStore::open(&dir.join(RESPONSES_FILE)).map_err(|e| error::from_probe(STAGE, e))?;
    let transport = ctx.transport(STAGE)?;
    let mut prober = Prober::new(&transport).with_store(&store);
    prober.retry = ctx.retry();
    prober.exec = ctx.exec;
    prober.parallelism = cfg.parallelism;
    let (_, eeps) = builtin_catalogs();

    let mut written = Vec::new();
    let mut summary = Vec::new();
    for model in &models {
        let Some(Era::Decade(decade)) = model.era else {
            unreachable!("filtered above")
        };
        let subset = corpus.subset(decade).ok_or_else(|| {
            CliError::new(
                Kind::Validation,
                STAGE,
                format!(
                    "model {} targets {decade}s but the corpus has no such subset",
                    model.name
                ),
            )
        })?;
        let subset_entities = extract_subset_entities(subset, extractor.as_ref(), ctx.exec)
            .map_err(|e| error::from_entities(STAGE, e))?;

        let mut runs = Vec::new();
        for eep in &eeps {
            let batch = prober
                .sample_completions(
                    model,
                    &eep.prompt_id(),
                    &eep.prompt(),
                    cfg.n,
                    SampleMode::Eep,
                )
                .map_err(|e| error::from_probe(STAGE, e))?;
            let sets = ctx
                .exec
                .map(&batch.responses, |r| {
                    match extractor.extract(r, EntitySource::ModelResponse) {
                        Err(EntityError::EmptyText) => {
                            Ok(EntitySet::new(EntitySource::ModelResponse))
                        }
                        other => other,
                    }
                })
                .into_iter()
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| error::from_entities(STAGE, e))?;
            runs.push((eep.id, sets));
        }
        let report = OverlapReport::compute(&model.name, &subset_entities, &runs, cfg.rounding)
            .map_err(|e| error::from_entities(STAGE, e))?;
        summary.push(format!(
            "{}: entity overlap {:.2}%",
            model.name, report.final_score
        ));
        written.push(write_json(
            STAGE,
            &dir.join(format!("overlap_{}.json", model.name)),
            &report,
        )?);
    }
    Ok(ctx.outcome(written, summary))
}
