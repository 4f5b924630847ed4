use std::path::PathBuf;

use scherk_core::Error as CoreError;

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error("{module}: {err}")]
    Numeric { module: &'static str, err: CoreError },
    #[error("{}: {err}", path.display())]
    Io { path: PathBuf, err: std::io::Error },
}

impl RunError {
    /// 2 for configuration problems, 3 for everything that failed at run time.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            _ => 3,
        }
    }
}

pub(crate) trait Module<T> {
    fn module(self, name: &'static str) -> Result<T, RunError>;
}

impl<T> Module<T> for Result<T, CoreError> {
    fn module(self, name: &'static str) -> Result<T, RunError> {
        self.map_err(|err| RunError::Numeric { module: name, err })
    }
}

pub(crate) fn io_err(path: &std::path::Path) -> impl FnOnce(std::io::Error) -> RunError + '_ {
    move |err| RunError::Io { path: path.to_path_buf(), err }
}
