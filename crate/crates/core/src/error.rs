use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid topology: {0}")]
    InvalidTopology(String),

    #[error("{what} {id} out of range (limit {limit})")]
    OutOfRange {
        what: &'static str,
        id: usize,
        limit: usize,
    },

    #[error("invalid multi-device: {0}")]
    InvalidMultiDevice(String),

    #[error("empty path between distinct processors {src} and {dst}")]
    EmptyPath { src: usize, dst: usize },

    #[error("unsupported load width {0} bits")]
    UnsupportedWidth(u32),

    #[error("thread count {threads} outside 1..={max}")]
    InvalidThreads { threads: u32, max: u32 },

    #[error("pair class {0} is not an exchange transfer")]
    NotExchangePair(&'static str),

    #[error("empty destination set")]
    EmptyDestination,

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("tile {tile} needs {needed} bytes of buffers, only {usable} usable")]
    CapacityExceeded {
        tile: usize,
        needed: u64,
        usable: u64,
    },

    #[error("{op} message of {bytes} bytes exceeds limit of {max} bytes for {participants} participants")]
    MessageTooLarge {
        op: &'static str,
        bytes: u64,
        max: u64,
        participants: usize,
    },

    #[error("collective has no participants")]
    NoParticipants,

    #[error("invalid collective: {0}")]
    InvalidCollective(String),

    #[error("unknown experiment `{0}`")]
    UnknownExperiment(String),

    #[error("empty scenario: {0}")]
    EmptyScenario(String),

    #[error("axis `{axis}` is not applicable to experiment `{id}`")]
    InapplicableAxis { axis: String, id: String },

    #[error("unsupported precision/unit combination: {0}")]
    UnsupportedCombo(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("config: {0}")]
    Config(String),

    #[error("golden data: {0}")]
    Golden(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
