use crate::hardware::Datatype;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("missing required field `{0}`")]
    MissingField(String),

    #[error("invalid dimension `{field}`: {reason}")]
    InvalidDimension { field: String, reason: String },

    #[error("invalid value for `{field}`: {reason}")]
    InvalidValue { field: String, reason: String },

    #[error("unknown {kind} preset `{name}` (known: {})", known.join(", "))]
    UnknownPreset {
        kind: PresetKind,
        name: String,
        known: Vec<String>,
    },

    #[error("hardware does not support {0} computation")]
    UnsupportedDatatype(Datatype),

    #[error("unknown offload link `{0}`")]
    UnknownLink(String),

    #[error("malformed document: {0}")]
    Parse(String),

    #[error("variant `{variant}`: {source}")]
    Variant {
        variant: String,
        #[source]
        source: Box<Error>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PresetKind {
    Model,
    Hardware,
}

impl std::fmt::Display for PresetKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            PresetKind::Model => "model",
            PresetKind::Hardware => "hardware",
        })
    }
}

impl Error {
    /// Stable machine-readable error name, used in API error bodies.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::MissingField(_) => "MissingField",
            Error::InvalidDimension { .. } => "InvalidDimension",
            Error::InvalidValue { .. } => "InvalidValue",
            Error::UnknownPreset { .. } => "UnknownPreset",
            Error::UnsupportedDatatype(_) => "UnsupportedDatatype",
            Error::UnknownLink(_) => "UnknownLink",
            Error::Parse(_) => "Parse",
            Error::Variant { source, .. } => source.kind(),
        }
    }

    /// The offending key, when the error can be pinned to one.
    pub fn field(&self) -> Option<String> {
        match self {
            Error::MissingField(f) => Some(f.clone()),
            Error::InvalidDimension { field, .. } | Error::InvalidValue { field, .. } => {
                Some(field.clone())
            }
            Error::UnknownPreset { kind, .. } => Some(kind.to_string()),
            Error::UnknownLink(_) => Some("offload".to_string()),
            Error::UnsupportedDatatype(_) | Error::Parse(_) => None,
            Error::Variant { source, .. } => source.field(),
        }
    }

    pub fn is_unknown_preset(&self) -> bool {
        match self {
            Error::UnknownPreset { .. } => true,
            Error::Variant { source, .. } => source.is_unknown_preset(),
            _ => false,
        }
    }

    /// Known preset ids, for an unknown-preset error.
    pub fn candidates(&self) -> Option<&[String]> {
        match self {
            Error::UnknownPreset { known, .. } => Some(known),
            Error::Variant { source, .. } => source.candidates(),
            _ => None,
        }
    }

    pub(crate) fn invalid_dim(field: &str, reason: impl Into<String>) -> Self {
        Error::InvalidDimension {
            field: field.to_string(),
            reason: reason.into(),
        }
    }

    pub(crate) fn invalid_value(field: &str, reason: impl Into<String>) -> Self {
        Error::InvalidValue {
            field: field.to_string(),
            reason: reason.into(),
        }
    }
}
