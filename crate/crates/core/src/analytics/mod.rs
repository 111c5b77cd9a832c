//! Bias statistics over classified responses.

mod fit;
mod kw;
mod report;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classification::ClassificationRecord;
use crate::exec::Execution;
use crate::probing::{Demographic, Era, Label, ModelRef, Subcategory};

pub use fit::{decade_index, polyfit2, TrendFit};
pub use kw::{kruskal_wallis, midranks, KwResult, ALPHA};
pub use report::{fmt_num, render_reports, svg_line_plot, SvgSeries, CURVE_SAMPLES};

#[derive(Debug, Error)]
pub enum AnalyticsError {
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("axis mismatch: {0}")]
    AxisMismatch(String),
    #[error("cannot write {path}: {message}")]
    Write { path: String, message: String },
}

pub type Result<T> = std::result::Result<T, AnalyticsError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    FineTuned,
    Pretrained,
}

impl Variant {
    pub fn as_str(self) -> &'static str {
        match self {
            Variant::FineTuned => "ft",
            Variant::Pretrained => "pt",
        }
    }
}

/// Label counts for one era of one (model family, demographic, role) axis.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrequencyRow {
    pub counts: BTreeMap<Subcategory, u32>,
    pub uncategorized: u32,
    pub total: u32,
}

impl FrequencyRow {
    pub fn add(&mut self, label: Label) {
        match label {
            Label::Sub(s) => *self.counts.entry(s).or_insert(0) += 1,
            Label::Uncategorized => self.uncategorized += 1,
        }
        self.total += 1;
    }

    /// `100 * count / total`; zero for an empty row.
    pub fn percent(&self, sub: Subcategory) -> f64 {
        pct(self.counts.get(&sub).copied().unwrap_or(0), self.total)
    }

    pub fn uncategorized_percent(&self) -> f64 {
        pct(self.uncategorized, self.total)
    }
}

fn pct(count: u32, total: u32) -> f64 {
    if total == 0 {
        0.0
    } else {
        100.0 * f64::from(count) / f64::from(total)
    }
}

/// Per-era subcategory percentages for one role prompt.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyTable {
    pub family: String,
    pub variant: Variant,
    pub demographic: Demographic,
    pub role: String,
    /// Column order.
    pub subcategories: Vec<Subcategory>,
    /// Expected responses per era.
    pub m: u32,
    pub rows: BTreeMap<Era, FrequencyRow>,
}

impl FrequencyTable {
    pub fn new(
        family: &str,
        variant: Variant,
        demographic: Demographic,
        role: &str,
        m: u32,
    ) -> Self {
        Self {
            family: family.to_string(),
            variant,
            demographic,
            role: role.to_string(),
            subcategories: demographic.subcategories().to_vec(),
            m,
            rows: BTreeMap::new(),
        }
    }

    /// File-name friendly identifier.
    pub fn stem(&self) -> String {
        format!(
            "{}_{}_{}_{}",
            self.family,
            self.variant.as_str(),
            self.demographic,
            self.role
        )
    }

    /// Rows for fine-tuned decades only, ascending.
    pub fn decade_rows(&self) -> impl Iterator<Item = (u16, &FrequencyRow)> {
        self.rows.iter().filter_map(|(e, r)| match e {
            Era::Decade(d) => Some((*d, r)),
            Era::Pretrained => None,
        })
    }

    /// (decade index, percent) points for a subcategory.
    pub fn series(&self, sub: Subcategory) -> Vec<(f64, f64)> {
        self.decade_rows()
            .map(|(d, r)| (decade_index(d), r.percent(sub)))
            .collect()
    }
}

/// Groups classifications into frequency tables keyed by model family,
/// variant, demographic and role. Rows whose size differs from `m` produce
/// a warning; their percentages use the actual count.
pub fn frequency_tables(
    records: &[ClassificationRecord],
    models: &[ModelRef],
    m: u32,
) -> (Vec<FrequencyTable>, Vec<String>) {
    let family: BTreeMap<&str, &str> = models
        .iter()
        .map(|mr| (mr.name.as_str(), mr.family.as_str()))
        .collect();
    let mut tables: BTreeMap<(String, Variant, Demographic, String), FrequencyTable> =
        BTreeMap::new();
    let mut warnings = Vec::new();
    for r in records {
        let era = match r.era.as_deref().map(str::parse::<Era>) {
            Some(Ok(e)) => e,
            _ => {
                warnings.push(format!(
                    "record for model {} has no valid era; skipped",
                    r.model
                ));
                continue;
            }
        };
        let variant = match era {
            Era::Pretrained => Variant::Pretrained,
            Era::Decade(_) => Variant::FineTuned,
        };
        let fam = family
            .get(r.model.as_str())
            .copied()
            .unwrap_or(r.model.as_str());
        tables
            .entry((fam.to_string(), variant, r.demographic, r.role.clone()))
            .or_insert_with(|| FrequencyTable::new(fam, variant, r.demographic, &r.role, m))
            .rows
            .entry(era)
            .or_default()
            .add(r.label);
    }
    let tables: Vec<FrequencyTable> = tables.into_values().collect();
    for t in &tables {
        for (era, row) in &t.rows {
            if row.total != m {
                warnings.push(format!(
                    "{} {}: {} responses, expected {m}",
                    t.stem(),
                    era,
                    row.total
                ));
            }
        }
    }
    (tables, warnings)
}

/// Tests each subcategory's per-decade percentages against the pooled
/// per-decade percentages of all other subcategories.
pub fn subcategory_significance(table: &FrequencyTable) -> Result<BTreeMap<Subcategory, KwResult>> {
    let decades = table.decade_rows().count();
    if decades < 2 {
        return Err(AnalyticsError::Precondition(format!(
            "{}: significance needs at least 2 decades, got {decades}",
            table.stem()
        )));
    }
    if table.subcategories.len() < 2 {
        return Err(AnalyticsError::Precondition(format!(
            "{}: significance needs at least 2 subcategories",
            table.stem()
        )));
    }
    let mut out = BTreeMap::new();
    for &sub in &table.subcategories {
        let own: Vec<f64> = table.decade_rows().map(|(_, r)| r.percent(sub)).collect();
        let others: Vec<f64> = table
            .subcategories
            .iter()
            .filter(|&&o| o != sub)
            .flat_map(|&o| table.decade_rows().map(move |(_, r)| r.percent(o)))
            .collect();
        out.insert(sub, kruskal_wallis(&[own, others])?);
    }
    Ok(out)
}

pub const DISPERSION_DEFINITION: &str =
    "population std-dev of each subcategory's percentage across (decade, role) cells, averaged over subcategories";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DispersionProfile {
    pub family: String,
    pub definition: String,
    pub values: BTreeMap<Demographic, f64>,
}

fn population_std(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt()
}

/// Dispersion per demographic over the fine-tuned tables of one family.
pub fn dispersion_profile(family: &str, tables: &[FrequencyTable]) -> DispersionProfile {
    let mut values = BTreeMap::new();
    for d in Demographic::ALL {
        let ts: Vec<&FrequencyTable> = tables
            .iter()
            .filter(|t| t.family == family && t.variant == Variant::FineTuned && t.demographic == d)
            .collect();
        if ts.is_empty() {
            continue;
        }
        let subs = d.subcategories();
        let total: f64 = subs
            .iter()
            .map(|&s| {
                let cells: Vec<f64> = ts
                    .iter()
                    .flat_map(|t| t.decade_rows().map(move |(_, r)| r.percent(s)))
                    .collect();
                population_std(&cells)
            })
            .sum();
        values.insert(d, total / subs.len() as f64);
    }
    DispersionProfile {
        family: family.to_string(),
        definition: DISPERSION_DEFINITION.to_string(),
        values,
    }
}

/// Mean over roles and decades of (fine-tuned % − pre-trained %) per
/// subcategory. Every fine-tuned (demographic, role) axis needs a
/// pre-trained counterpart and vice versa.
pub fn pretrained_delta(
    ft: &[FrequencyTable],
    pt: &[FrequencyTable],
) -> Result<BTreeMap<Subcategory, f64>> {
    let key = |t: &FrequencyTable| (t.family.clone(), t.demographic, t.role.clone());
    let pt_by: BTreeMap<_, &FrequencyTable> = pt.iter().map(|t| (key(t), t)).collect();
    let ft_keys: BTreeSet<_> = ft.iter().map(key).collect();
    let pt_keys: BTreeSet<_> = pt_by.keys().cloned().collect();
    if ft_keys != pt_keys {
        let missing: Vec<String> = ft_keys
            .symmetric_difference(&pt_keys)
            .map(|(f, d, r)| format!("{f}/{d}/{r}"))
            .collect();
        return Err(AnalyticsError::AxisMismatch(missing.join(", ")));
    }
    let mut sums: BTreeMap<Subcategory, (f64, usize)> = BTreeMap::new();
    for t in ft {
        let p = pt_by[&key(t)];
        let prow = p
            .rows
            .values()
            .next()
            .ok_or_else(|| AnalyticsError::AxisMismatch(format!("{} has no rows", p.stem())))?;
        for (_, row) in t.decade_rows() {
            for &s in &t.subcategories {
                let e = sums.entry(s).or_insert((0.0, 0));
                e.0 += row.percent(s) - prow.percent(s);
                e.1 += 1;
            }
        }
    }
    Ok(sums
        .into_iter()
        .map(|(s, (sum, n))| (s, if n == 0 { 0.0 } else { sum / n as f64 }))
        .collect())
}

/// Quadratic trend of one subcategory in one table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trend {
    pub subcategory: Subcategory,
    pub series: Vec<(f64, f64)>,
    pub fit: Option<TrendFit>,
}

/// Everything the report renderer needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisBundle {
    pub tables: Vec<FrequencyTable>,
    /// Keyed by table stem.
    pub significance: BTreeMap<String, BTreeMap<Subcategory, KwResult>>,
    pub dispersion: Vec<DispersionProfile>,
    /// Keyed by table stem.
    pub trends: BTreeMap<String, Vec<Trend>>,
    /// Family -> subcategory -> delta.
    pub deltas: BTreeMap<String, BTreeMap<Subcategory, f64>>,
    pub warnings: Vec<String>,
}

/// Runs every statistic. Tables with too few decades for a test or fit
/// are reported in `warnings` instead of failing the whole analysis.
pub fn analyze(
    records: &[ClassificationRecord],
    models: &[ModelRef],
    m: u32,
    exec: Execution,
) -> AnalysisBundle {
    let (tables, mut warnings) = frequency_tables(records, models, m);
    let ft: Vec<&FrequencyTable> = tables
        .iter()
        .filter(|t| t.variant == Variant::FineTuned)
        .collect();

    let sig = exec.map(&ft, |t| (t.stem(), subcategory_significance(t)));
    let mut significance = BTreeMap::new();
    for (stem, r) in sig {
        match r {
            Ok(v) => {
                significance.insert(stem, v);
            }
            Err(e) => warnings.push(e.to_string()),
        }
    }

    let trends: BTreeMap<String, Vec<Trend>> = exec
        .map(&ft, |t| {
            let v = t
                .subcategories
                .iter()
                .map(|&s| {
                    let series = t.series(s);
                    Trend {
                        subcategory: s,
                        fit: polyfit2(&series).ok(),
                        series,
                    }
                })
                .collect();
            (t.stem(), v)
        })
        .into_iter()
        .collect();

    let families: BTreeSet<&str> = tables.iter().map(|t| t.family.as_str()).collect();
    let dispersion = families
        .iter()
        .filter(|f| ft.iter().any(|t| t.family == **f))
        .map(|f| dispersion_profile(f, &tables))
        .collect();

    let mut deltas = BTreeMap::new();
    for f in &families {
        let fts: Vec<FrequencyTable> = ft
            .iter()
            .filter(|t| t.family == *f)
            .map(|t| (*t).clone())
            .collect();
        let pts: Vec<FrequencyTable> = tables
            .iter()
            .filter(|t| t.family == *f && t.variant == Variant::Pretrained)
            .cloned()
            .collect();
        if fts.is_empty() || pts.is_empty() {
            continue;
        }
        match pretrained_delta(&fts, &pts) {
            Ok(d) => {
                deltas.insert(f.to_string(), d);
            }
            Err(e) => warnings.push(format!("{f}: {e}")),
        }
    }

    AnalysisBundle {
        tables,
        significance,
        dispersion,
        trends,
        deltas,
        warnings,
    }
}
