use std::fmt;

pub const EXIT_USAGE: u8 = 2;
pub const EXIT_ANALYSIS: u8 = 3;
pub const EXIT_TRAINING: u8 = 4;

/// An error together with the process exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#}", self.error)
    }
}

pub type Outcome<T = ()> = Result<T, Failure>;

pub trait ExitCode<T> {
    fn usage(self) -> Outcome<T>;
    fn analysis(self) -> Outcome<T>;
    fn training(self) -> Outcome<T>;
}

impl<T, E: Into<anyhow::Error>> ExitCode<T> for Result<T, E> {
    fn usage(self) -> Outcome<T> {
        self.map_err(|e| Failure {
            code: EXIT_USAGE,
            error: e.into(),
        })
    }

    fn analysis(self) -> Outcome<T> {
        self.map_err(|e| Failure {
            code: EXIT_ANALYSIS,
            error: e.into(),
        })
    }

    fn training(self) -> Outcome<T> {
        self.map_err(|e| Failure {
            code: EXIT_TRAINING,
            error: e.into(),
        })
    }
}
