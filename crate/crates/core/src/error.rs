use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("case has no swing bus")]
    MissingSwing,

    #[error("multiple swing buses: {0:?}")]
    MultipleSwing(Vec<usize>),

    #[error("{what} refers to unknown bus {bus}")]
    DanglingReference { what: String, bus: usize },

    #[error("duplicate bus id {0}")]
    DuplicateBus(usize),

    #[error("bus {0}: specified voltage magnitude must be positive")]
    NonPositiveVoltage(usize),

    #[error("invalid case data: {0}")]
    InvalidCase(String),

    #[error("germ solve did not converge after {} iterations (residuals {residuals:?})", residuals.len())]
    GermDivergence { residuals: Vec<f64> },

    #[error("recursion matrix is singular; the germ is degenerate")]
    SingularSystem,

    #[error("degenerate germ at bus {0}: W[0] = 0")]
    DegenerateGerm(usize),

    #[error("infeasible channel: delta = {0} < 0")]
    InfeasibleChannel(f64),

    #[error("virtual impedance undefined for zero injection")]
    ZeroInjection,

    #[error("stage {stage} does not converge at its start s = {s_start}; last valid s = {last_valid_s}")]
    NonConvergentStage {
        stage: usize,
        s_start: f64,
        last_valid_s: f64,
    },

    #[error("bus {bus} switched {count} times; reactive-limit switching is oscillating")]
    OscillatingSwitch { bus: usize, count: usize },

    #[error("no collapse in range [{s_lo}, {s_hi}]")]
    NoCollapseInRange { s_lo: f64, s_hi: f64 },

    #[error("Newton solve diverged at s = {s} after {iterations} iterations (mismatch {mismatch:e})")]
    OracleDivergence {
        s: f64,
        iterations: usize,
        mismatch: f64,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
