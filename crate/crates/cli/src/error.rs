use std::fmt;

/// Process exit status for each failure class.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitKind {
    /// Bad flags, unreadable or malformed inputs, values outside the domain.
    Input = 1,
    /// Anything else: failed writes, service crashes, bugs.
    Internal = 2,
}

#[derive(Debug)]
pub struct CliError {
    pub kind: ExitKind,
    pub error: anyhow::Error,
}

impl CliError {
    pub fn input(error: impl Into<anyhow::Error>) -> Self {
        Self {
            kind: ExitKind::Input,
            error: error.into(),
        }
    }

    pub fn internal(error: impl Into<anyhow::Error>) -> Self {
        Self {
            kind: ExitKind::Internal,
            error: error.into(),
        }
    }

    pub fn code(&self) -> i32 {
        self.kind as i32
    }

    pub fn label(&self) -> &'static str {
        match self.kind {
            ExitKind::Input => "input_error",
            ExitKind::Internal => "internal_error",
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#}", self.error)
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Attaches an exit class to fallible calls.
pub trait Classify<T> {
    fn input(self) -> CliResult<T>;
    fn internal(self) -> CliResult<T>;
    fn input_ctx(self, ctx: impl fmt::Display) -> CliResult<T>;
    fn internal_ctx(self, ctx: impl fmt::Display) -> CliResult<T>;
}

impl<T, E> Classify<T> for Result<T, E>
where
    E: Into<anyhow::Error>,
{
    fn input(self) -> CliResult<T> {
        self.map_err(CliError::input)
    }

    fn internal(self) -> CliResult<T> {
        self.map_err(CliError::internal)
    }

    fn input_ctx(self, ctx: impl fmt::Display) -> CliResult<T> {
        self.map_err(|e| CliError::input(e.into().context(ctx.to_string())))
    }

    fn internal_ctx(self, ctx: impl fmt::Display) -> CliResult<T> {
        self.map_err(|e| CliError::internal(e.into().context(ctx.to_string())))
    }
}

/// Input error from a message.
pub fn bad_input(msg: impl fmt::Display) -> CliError {
    CliError::input(anyhow::anyhow!("{msg}"))
}
