//! INI run configuration with command-line overrides.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use ini::Ini;
use sha2::{Digest, Sha256};

use eraprobe::entities::RoundingMode;
use eraprobe::probing::CATALOG_VERSION;

use crate::error::{CliError, Kind};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClassifyMethod {
    Judge,
    Rules,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExtractorChoice {
    Heuristic,
    Remote { url: String, max_in_flight: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct GloveSettings {
    pub decade: u16,
    pub roles: Vec<String>,
    pub windows: Vec<usize>,
    pub dim: usize,
    pub iters: usize,
    pub lr: f64,
    pub min_count: u64,
    pub x_max: f64,
    pub alpha: f64,
    pub wordlists: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    /// Samples per role prompt.
    pub m: u32,
    /// Runs per entity-elicitation prompt.
    pub n: u32,
    pub parallelism: usize,
    pub method: ClassifyMethod,
    pub rounding: RoundingMode,
    pub max_retries: u32,
    pub retry_base_ms: u64,
    pub timeout_secs: u64,
    pub audit_size: usize,

    pub manifest: PathBuf,
    pub corpus_root: PathBuf,
    pub reference_titles: Option<PathBuf>,
    pub start_markers: Vec<String>,
    pub end_markers: Vec<String>,
    pub target_tokens: usize,
    pub split_fraction: f64,

    pub profiles: Vec<PathBuf>,
    pub judge: Option<PathBuf>,
    pub extractor: ExtractorChoice,
    pub glove: GloveSettings,

    pub out_dir: PathBuf,
    pub mock: bool,
    /// Content hash of the configuration and prompt catalog.
    pub run_id: String,
}

/// Flag-level overrides applied on top of the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub parallelism: Option<usize>,
    pub mock: bool,
    /// `section.key=value` assignments.
    pub set: Vec<String>,
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::new(Kind::Validation, "config", msg)
}

struct Reader<'a> {
    ini: &'a Ini,
    base: &'a Path,
}

impl Reader<'_> {
    fn raw(&self, section: &str, key: &str) -> Option<String> {
        self.ini
            .section(Some(section))
            .and_then(|s| s.get(key))
            .map(|v| v.trim().to_string())
            .filter(|v| !v.is_empty())
    }

    fn parse<T: FromStr>(&self, section: &str, key: &str, default: T) -> Result<T, CliError> {
        match self.raw(section, key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| invalid(format!("[{section}] {key} = {v:?} is not a valid value"))),
        }
    }

    fn path(&self, section: &str, key: &str) -> Option<PathBuf> {
        self.raw(section, key).map(|v| self.base.join(v))
    }

    fn list(&self, section: &str, key: &str, sep: char) -> Vec<String> {
        self.raw(section, key)
            .map(|v| {
                v.split(sep)
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(String::from)
                    .collect()
            })
            .unwrap_or_default()
    }
}

fn apply_set(ini: &mut Ini, assignment: &str) -> Result<(), CliError> {
    let (lhs, value) = assignment
        .split_once('=')
        .ok_or_else(|| invalid(format!("--set {assignment:?}: expected section.key=value")))?;
    let (section, key) = lhs
        .trim()
        .split_once('.')
        .ok_or_else(|| invalid(format!("--set {assignment:?}: expected section.key=value")))?;
    ini.with_section(Some(section)).set(key, value.trim());
    Ok(())
}

fn run_id(text: &str, ov: &Overrides) -> String {
    let mut h = Sha256::new();
    h.update(text.as_bytes());
    let mut set = ov.set.clone();
    set.sort();
    for s in &set {
        h.update(b"\n--set ");
        h.update(s.as_bytes());
    }
    if let Some(seed) = ov.seed {
        h.update(format!("\n--seed {seed}").as_bytes());
    }
    if ov.mock {
        h.update(b"\n--mock");
    }
    h.update(b"\n");
    h.update(CATALOG_VERSION.as_bytes());
    hex::encode(h.finalize())[..12].to_string()
}

impl RunConfig {
    pub fn load(path: &Path, ov: &Overrides) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| invalid(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_str_at(&text, path.parent().unwrap_or(Path::new(".")), ov)
    }

    /// Parses config text; relative paths resolve against `base`.
    pub fn from_str_at(text: &str, base: &Path, ov: &Overrides) -> Result<Self, CliError> {
        let mut ini =
            Ini::load_from_str(text).map_err(|e| invalid(format!("config syntax: {e}")))?;
        for s in &ov.set {
            apply_set(&mut ini, s)?;
        }
        let r = Reader { ini: &ini, base };

        let manifest = r
            .path("corpus", "manifest")
            .ok_or_else(|| invalid("[corpus] manifest is required"))?;
        let corpus_root = r
            .path("corpus", "root")
            .unwrap_or_else(|| manifest.parent().map(Path::to_path_buf).unwrap_or_default());

        let method = match r.raw("run", "method").as_deref() {
            None | Some("judge") => ClassifyMethod::Judge,
            Some("rules") => ClassifyMethod::Rules,
            Some(o) => {
                return Err(invalid(format!(
                    "[run] method = {o:?}; expected judge or rules"
                )))
            }
        };
        let rounding = match r.raw("run", "rounding").as_deref() {
            None | Some("whole_percent") => RoundingMode::WholePercent,
            Some("exact") => RoundingMode::Exact,
            Some(o) => {
                return Err(invalid(format!(
                    "[run] rounding = {o:?}; expected whole_percent or exact"
                )))
            }
        };
        let extractor = match r.raw("entities", "extractor").as_deref() {
            None | Some("heuristic") => ExtractorChoice::Heuristic,
            Some("remote") => ExtractorChoice::Remote {
                url: r.raw("entities", "url").ok_or_else(|| {
                    invalid("[entities] url is required for the remote extractor")
                })?,
                max_in_flight: r.parse("entities", "max_in_flight", 4)?,
            },
            Some(o) => {
                return Err(invalid(format!(
                    "[entities] extractor = {o:?}; expected heuristic or remote"
                )))
            }
        };

        let windows = r
            .list("glove", "windows", ',')
            .iter()
            .map(|w| {
                w.parse()
                    .map_err(|_| invalid(format!("[glove] windows: bad value {w:?}")))
            })
            .collect::<Result<Vec<usize>, _>>()?;
        let glove = GloveSettings {
            decade: r.parse("glove", "decade", 1950)?,
            roles: r.list("glove", "roles", ','),
            windows: if windows.is_empty() {
                vec![5, 10, 15]
            } else {
                windows
            },
            dim: r.parse("glove", "dim", 100)?,
            iters: r.parse("glove", "iters", 50)?,
            lr: r.parse("glove", "lr", 0.05)?,
            min_count: r.parse("glove", "min_count", 5)?,
            x_max: r.parse("glove", "x_max", 100.0)?,
            alpha: r.parse("glove", "alpha", 0.75)?,
            wordlists: r.path("glove", "wordlists"),
        };

        let cfg = RunConfig {
            seed: ov.seed.map_or_else(|| r.parse("run", "seed", 0), Ok)?,
            m: r.parse("run", "m", 50)?,
            n: r.parse("run", "n", 100)?,
            parallelism: ov
                .parallelism
                .map_or_else(|| r.parse("run", "parallelism", 4), Ok)?,
            method,
            rounding,
            max_retries: r.parse("run", "max_retries", 4)?,
            retry_base_ms: r.parse("run", "retry_base_ms", 500)?,
            timeout_secs: r.parse("run", "timeout_secs", 120)?,
            audit_size: r.parse("run", "audit_size", 20)?,
            manifest,
            corpus_root,
            reference_titles: r.path("corpus", "reference_titles"),
            start_markers: r.list("corpus", "start_markers", '|'),
            end_markers: r.list("corpus", "end_markers", '|'),
            target_tokens: r.parse(
                "corpus",
                "target_tokens",
                eraprobe::corpus::DEFAULT_TARGET_TOKENS,
            )?,
            split_fraction: r.parse(
                "corpus",
                "split_fraction",
                eraprobe::corpus::DEFAULT_SPLIT_FRACTION,
            )?,
            profiles: r
                .list("models", "profiles", ',')
                .iter()
                .map(|p| base.join(p))
                .collect(),
            judge: r.path("models", "judge"),
            extractor,
            glove,
            out_dir: ov
                .out
                .clone()
                .unwrap_or_else(|| r.path("output", "dir").unwrap_or_else(|| base.join("out"))),
            mock: ov.mock,
            run_id: run_id(text, ov),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), CliError> {
        if self.m == 0 || self.n == 0 {
            return Err(invalid("[run] m and n must be at least 1"));
        }
        if self.parallelism == 0 {
            return Err(invalid("parallelism must be at least 1"));
        }
        let mut required: Vec<(&str, &Path)> = vec![("[corpus] manifest", &self.manifest)];
        if let Some(p) = &self.reference_titles {
            required.push(("[corpus] reference_titles", p));
        }
        for p in &self.profiles {
            required.push(("[models] profiles", p));
        }
        if let Some(p) = &self.judge {
            required.push(("[models] judge", p));
        }
        if let Some(p) = &self.glove.wordlists {
            required.push(("[glove] wordlists", p));
        }
        for (what, p) in required {
            if !p.exists() {
                return Err(invalid(format!("{what}: {} does not exist", p.display())));
            }
        }
        Ok(())
    }

    pub fn run_dir(&self) -> PathBuf {
        self.out_dir.join(&self.run_id)
    }

    pub fn execution(&self) -> eraprobe::Execution {
        if self.parallelism == 1 {
            eraprobe::Execution::Sequential
        } else {
            eraprobe::Execution::default()
        }
    }
}
