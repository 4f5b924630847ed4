//! Configuration, file formats and the mode driver behind the `sclab`
//! binary.

pub mod config;
pub mod error;
pub mod export;
pub mod run;

pub use config::{Cli, FileConfig, Format, Mode, Params, RunConfig};
pub use error::RunError;
pub use run::{run, RunOutput};

/// Parse, run and report; returns the process exit code.
pub fn main_with(cli: &Cli) -> i32 {
    let cfg = match RunConfig::from_cli(cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("sclab: {e}");
            return e.exit_code();
        }
    };
    match run(&cfg) {
        Ok(out) => {
            for line in &out.summary {
                println!("{line}");
            }
            for f in &out.files {
                println!("wrote {}", f.display());
            }
            match out.failure {
                Some(e) => {
                    eprintln!("sclab: {e}");
                    e.exit_code()
                }
                None => 0,
            }
        }
        Err(e) => {
            eprintln!("sclab: {e}");
            e.exit_code()
        }
    }
}
