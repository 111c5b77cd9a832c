use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Validation,
    MissingStage,
    Io,
    Transport,
}

impl Kind {
    fn as_str(self) -> &'static str {
        match self {
            Kind::Validation => "validation",
            Kind::MissingStage => "missing_stage",
            Kind::Io => "io",
            Kind::Transport => "transport",
        }
    }
}

/// A failed command. Displays as one `key=value` line for stderr.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliError {
    pub kind: Kind,
    pub stage: &'static str,
    pub message: String,
}

impl CliError {
    pub fn new(kind: Kind, stage: &'static str, message: impl Into<String>) -> Self {
        Self {
            kind,
            stage,
            message: message.into(),
        }
    }

    /// 2 for transport failures, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self.kind {
            Kind::Transport => 2,
            _ => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let msg = self.message.replace(['\n', '\r'], " ");
        write!(
            f,
            "error kind={} stage={} msg={msg:?}",
            self.kind.as_str(),
            self.stage
        )
    }
}

impl std::error::Error for CliError {}

pub fn io(stage: &'static str, path: &std::path::Path, e: impl fmt::Display) -> CliError {
    CliError::new(Kind::Io, stage, format!("{}: {e}", path.display()))
}

pub fn from_corpus(stage: &'static str, e: eraprobe::corpus::CorpusError) -> CliError {
    use eraprobe::corpus::CorpusError as E;
    let kind = match e {
        E::Load { .. } | E::Write { .. } => Kind::Io,
        _ => Kind::Validation,
    };
    CliError::new(kind, stage, e.to_string())
}

pub fn from_probe(stage: &'static str, e: eraprobe::probing::ProbeError) -> CliError {
    use eraprobe::probing::ProbeError as E;
    let kind = match e {
        E::Config(_) => Kind::Validation,
        E::Store(_) => Kind::Io,
        E::Transport(_) | E::Batch { .. } => Kind::Transport,
    };
    CliError::new(kind, stage, e.to_string())
}

pub fn from_entities(stage: &'static str, e: eraprobe::entities::EntityError) -> CliError {
    use eraprobe::entities::EntityError as E;
    let kind = match e {
        E::Transport(_) | E::Rejected { .. } | E::Decode(_) => Kind::Transport,
        _ => Kind::Validation,
    };
    CliError::new(kind, stage, e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_format_and_codes() {
        let e = CliError::new(
            Kind::MissingStage,
            "analyze",
            "no classifications;\nrun classify",
        );
        assert_eq!(
            e.to_string(),
            r#"error kind=missing_stage stage=analyze msg="no classifications; run classify""#
        );
        assert_eq!(e.exit_code(), 1);
        assert_eq!(CliError::new(Kind::Transport, "probe", "x").exit_code(), 2);
    }
}
