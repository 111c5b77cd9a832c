use eraprobe::embedding::{
    bias_table_with_vectors, Comparison, EmbeddingError, GloveParams, WordLists,
};

use super::{write_json, write_text, Context, GLOVE_DIR};
use crate::error::{self, CliError, Kind};
use crate::Outcome;

const STAGE: &str = "glove";

fn embed_err(e: EmbeddingError) -> CliError {
    CliError::new(Kind::Validation, STAGE, e.to_string())
}

pub fn run(ctx: &Context, windows: &[usize]) -> Result<Outcome, CliError> {
    let g = &ctx.cfg.glove;
    let windows = if windows.is_empty() {
        g.windows.clone()
    } else {
        windows.to_vec()
    };
    if g.roles.is_empty() {
        return Err(CliError::new(
            Kind::Validation,
            STAGE,
            "[glove] roles is empty",
        ));
    }
    let lists = match &g.wordlists {
        Some(p) => {
            WordLists::parse(&std::fs::read_to_string(p).map_err(|e| error::io(STAGE, p, e))?)
                .map_err(embed_err)?
        }
        None => WordLists::builtin(),
    };
    let (corpus, _) = ctx.clean_corpus(STAGE)?;
    let subset = corpus.subset(g.decade).ok_or_else(|| {
        CliError::new(
            Kind::Validation,
            STAGE,
            format!("corpus has no {}s subset", g.decade),
        )
    })?;
    let docs: Vec<String> = subset.books.iter().map(|b| b.content.clone()).collect();
    let params = GloveParams {
        dim: g.dim,
        iters: g.iters,
        lr: g.lr,
        x_max: g.x_max,
        alpha: g.alpha,
        seed: ctx.cfg.seed,
    };
    let (table, vectors) = bias_table_with_vectors(
        &docs,
        &g.roles,
        &lists,
        &Comparison::defaults(),
        &windows,
        g.min_count,
        params,
        ctx.exec,
    )
    .map_err(embed_err)?;

    let dir = ctx.stage_dir(STAGE, GLOVE_DIR)?;
    let label = subset.label();
    let mut written = vec![
        write_text(
            STAGE,
            &dir.join(format!("bias_{label}.csv")),
            &table.to_csv(),
        )?,
        write_json(STAGE, &dir.join(format!("table_{label}.json")), &table)?,
    ];
    for (w, v) in windows.iter().zip(&vectors) {
        written.push(write_text(
            STAGE,
            &dir.join(format!("vectors_{label}_w{w}.txt")),
            &v.dump(),
        )?);
    }
    let na = table.cells.iter().filter(|c| c.value.is_none()).count();
    let flips = table.rows().iter().filter(|r| r.sign_flip).count();
    let summary = vec![format!(
        "{} cells ({na} N/A), {flips} sign flips across windows",
        table.cells.len()
    )];
    Ok(ctx.outcome(written, summary))
}
