use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::ProbeError;

/// Which training era a model represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Era {
    /// Fine-tuned on books from the decade starting at this year.
    Decade(u16),
    Pretrained,
}

impl fmt::Display for Era {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Era::Decade(y) => write!(f, "{y}s"),
            Era::Pretrained => f.write_str("pretrained"),
        }
    }
}

impl FromStr for Era {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let t = s.trim().to_ascii_lowercase();
        if t == "pretrained" || t == "pt" {
            return Ok(Era::Pretrained);
        }
        let digits = t.strip_suffix('s').unwrap_or(&t);
        match digits.parse::<u16>() {
            Ok(y) if y % 10 == 0 => Ok(Era::Decade(y)),
            _ => Err(format!(
                "invalid era {s:?}; expected e.g. 1950s or pretrained"
            )),
        }
    }
}

impl Serialize for Era {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Era {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?
            .parse()
            .map_err(serde::de::Error::custom)
    }
}

pub const DEFAULT_MAX_TOKENS_REP: u32 = 100;
pub const DEFAULT_MAX_TOKENS_EEP: u32 = 1000;
pub const DEFAULT_RATE_LIMIT: f64 = 2.0;

/// A chat-completion endpoint plus its sampling settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelRef {
    pub name: String,
    /// Full chat-completions URL, or `mock://` for the in-process mock.
    pub url: String,
    /// Model identifier sent in the payload.
    pub model: String,
    pub era: Option<Era>,
    /// Groups fine-tuned and pre-trained variants of one base model.
    pub family: String,
    pub temperature: f64,
    pub top_p: f64,
    pub max_tokens_rep: u32,
    pub max_tokens_eep: u32,
    /// Requests per second; 0 disables limiting.
    pub rate_limit: f64,
    #[serde(skip)]
    pub api_key: Option<String>,
}

impl ModelRef {
    /// A model with open-endpoint defaults (temperature 1, top-p 1).
    pub fn new(name: &str, url: &str, era: Option<Era>) -> Self {
        Self {
            name: name.to_string(),
            url: url.to_string(),
            model: name.to_string(),
            era,
            family: name.to_string(),
            temperature: 1.0,
            top_p: 1.0,
            max_tokens_rep: DEFAULT_MAX_TOKENS_REP,
            max_tokens_eep: DEFAULT_MAX_TOKENS_EEP,
            rate_limit: DEFAULT_RATE_LIMIT,
            api_key: None,
        }
    }

    pub fn validate(&self) -> Result<(), ProbeError> {
        let bad = |msg: String| {
            Err(ProbeError::Config(format!(
                "profile {:?}: {msg}",
                self.name
            )))
        };
        if self.name.trim().is_empty() {
            return bad("empty name".into());
        }
        if !(self.temperature >= 0.0 && self.temperature.is_finite()) {
            return bad(format!("temperature {} must be >= 0", self.temperature));
        }
        if self.max_tokens_rep == 0 || self.max_tokens_eep == 0 {
            return bad("max_tokens must be > 0".into());
        }
        if !(self.top_p > 0.0 && self.top_p <= 1.0) {
            return bad(format!("top_p {} must be in (0, 1]", self.top_p));
        }
        if !(self.rate_limit >= 0.0 && self.rate_limit.is_finite()) {
            return bad(format!("rate_limit {} must be >= 0", self.rate_limit));
        }
        Ok(())
    }

    pub fn is_mock(&self) -> bool {
        self.url.starts_with("mock://")
    }

    /// Parses a `key=value` profile. Blank lines and `#` comments are
    /// ignored; unknown keys are rejected.
    pub fn from_profile_str(text: &str) -> Result<Self, ProbeError> {
        let mut kv = BTreeMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                ProbeError::Config(format!("profile line {}: expected key=value", lineno + 1))
            })?;
            kv.insert(k.trim().to_string(), v.trim().to_string());
        }
        let take = |kv: &mut BTreeMap<String, String>, k: &str| kv.remove(k);
        let name = take(&mut kv, "name")
            .ok_or_else(|| ProbeError::Config("profile missing `name`".into()))?;
        let url = take(&mut kv, "url")
            .ok_or_else(|| ProbeError::Config(format!("profile {name:?} missing `url`")))?;
        let era = take(&mut kv, "era")
            .filter(|s| !s.is_empty())
            .map(|s| s.parse::<Era>())
            .transpose()
            .map_err(ProbeError::Config)?;
        let mut m = ModelRef::new(&name, &url, era);
        if let Some(v) = take(&mut kv, "model") {
            m.model = v;
        }
        if let Some(v) = take(&mut kv, "family") {
            m.family = v;
        }
        fn num<T: FromStr>(
            kv: &mut BTreeMap<String, String>,
            k: &str,
            slot: &mut T,
        ) -> Result<(), ProbeError> {
            if let Some(v) = kv.remove(k) {
                *slot = v.parse().map_err(|_| {
                    ProbeError::Config(format!("profile key {k}: bad number {v:?}"))
                })?;
            }
            Ok(())
        }
        num(&mut kv, "temperature", &mut m.temperature)?;
        num(&mut kv, "top_p", &mut m.top_p)?;
        num(&mut kv, "max_tokens_rep", &mut m.max_tokens_rep)?;
        num(&mut kv, "max_tokens_eep", &mut m.max_tokens_eep)?;
        num(&mut kv, "rate_limit", &mut m.rate_limit)?;
        if let Some(k) = kv.keys().next() {
            return Err(ProbeError::Config(format!(
                "profile {name:?}: unknown key {k:?}"
            )));
        }
        m.validate()?;
        Ok(m)
    }

    /// Loads a profile file and picks up its API key from the environment.
    pub fn load_profile(path: &Path) -> Result<Self, ProbeError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            ProbeError::Config(format!("cannot read profile {}: {e}", path.display()))
        })?;
        let mut m = Self::from_profile_str(&text)?;
        m.api_key = std::env::var(api_key_var(&m.name)).ok();
        Ok(m)
    }
}

/// Environment variable holding the API key for a profile.
pub fn api_key_var(profile: &str) -> String {
    let suffix: String = profile
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() {
                c.to_ascii_uppercase()
            } else {
                '_'
            }
        })
        .collect();
    format!("ERAPROBE_API_KEY_{suffix}")
}
