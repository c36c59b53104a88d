use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("unknown configuration key `{0}`")]
    UnknownKey(String),
    #[error("invalid value `{value}` for `{key}`")]
    BadValue { key: String, value: String },
    #[error("step {t} out of range 0..={max}")]
    StepOutOfRange { t: usize, max: usize },
    #[error("trace {gue_id}: {reason}")]
    Trace { gue_id: usize, reason: String },
    #[error("path loss undefined for 3D distance {0} m (minimum 1 m)")]
    PathLossDomain(f64),
    #[error("could not place {agents} agents {d_th} m apart after {attempts} attempts")]
    Placement { agents: usize, d_th: f64, attempts: usize },
    #[error("agent {agent} chose {action:?}, which its mask forbids")]
    IllegalAction { agent: usize, action: crate::env::Action },
    #[error("expected {expected} actions, got {got}")]
    ActionCount { expected: usize, got: usize },
    #[error("episode already finished at t = {0}")]
    EpisodeOver(usize),
    #[error("feature dimension mismatch: network expects {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("action mask has no legal action")]
    EmptyMask,
    #[error("loss became non-finite ({loss}) at gradient step {step}")]
    NonFiniteLoss { loss: f64, step: u64 },
    #[error("user {0} has no closed service window")]
    NoClosedWindow(usize),
    #[error("replay buffer holds {have} experiences, batch needs {need}")]
    BufferTooSmall { have: usize, need: usize },
}
