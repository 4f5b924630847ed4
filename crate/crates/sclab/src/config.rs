use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::error::RunError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Solve,
    Verify,
    Periods,
    Mesh,
    Plot,
    Chm,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Solve => "solve",
            Mode::Verify => "verify",
            Mode::Periods => "periods",
            Mode::Mesh => "mesh",
            Mode::Plot => "plot",
            Mode::Chm => "chm",
        }
    }

    fn default_tol(self) -> f64 {
        match self {
            Mode::Solve => 1e-8,
            Mode::Verify => 1e-6,
            Mode::Periods | Mode::Mesh | Mode::Plot | Mode::Chm => 1e-12,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Obj,
    Ply,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Obj => "obj",
            Format::Ply => "ply",
        }
    }
}

/// Command line. Every option except the mode can also come from the JSON
/// config; flags win.
#[derive(Debug, Parser)]
#[command(name = "sclab", version, about = "Doubly periodic Scherk-Costa surfaces: periods, family, meshes")]
pub struct Cli {
    #[arg(value_enum)]
    pub mode: Mode,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, allow_negative_numbers = true)]
    pub alpha: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub x: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub y: Option<f64>,
    #[arg(long)]
    pub resolution: Option<usize>,
    #[arg(long)]
    pub end_cutoff: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, allow_negative_numbers = true)]
    pub tol: Option<f64>,
    /// Continuation steps.
    #[arg(long)]
    pub steps: Option<usize>,
    /// Arclength budget of the continuation.
    #[arg(long)]
    pub s_max: Option<f64>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Copies of the fundamental piece, horizontal and vertical: `n2,n3`.
    #[arg(long, value_parser = parse_copies)]
    pub copies: Option<(usize, usize)>,
    /// Samples per curve in verify and plot.
    #[arg(long)]
    pub samples: Option<usize>,
    /// Run the triangle-pair intersection scan on the exported mesh.
    #[arg(long)]
    pub scan: bool,
}

fn parse_copies(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s.split_once(',').ok_or("expected n2,n3")?;
    let a = a.trim().parse().map_err(|e| format!("{e}"))?;
    let b = b.trim().parse().map_err(|e| format!("{e}"))?;
    Ok((a, b))
}

/// The JSON config file.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub alpha: Option<f64>,
    pub x: Option<f64>,
    pub y: Option<f64>,
    pub tol: Option<f64>,
    pub steps: Option<usize>,
    pub s_max: Option<f64>,
    pub resolution: Option<usize>,
    pub end_cutoff: Option<f64>,
    pub copies: Option<[usize; 2]>,
    pub format: Option<Format>,
    pub samples: Option<usize>,
    pub grid: Option<[usize; 2]>,
    pub scan: Option<bool>,
    pub normalize: Option<bool>,
    pub out: Option<PathBuf>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, RunError> {
        let text = std::fs::read_to_string(path).map_err(|e| RunError::Config(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| RunError::Config(format!("{}: {e}", path.display())))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Params {
    pub alpha: f64,
    pub x: f64,
    pub y: f64,
}

/// Validated configuration of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub mode: Mode,
    pub params: Option<Params>,
    pub tol: f64,
    pub steps: usize,
    pub s_max: f64,
    pub resolution: usize,
    pub end_cutoff: f64,
    pub copies: (usize, usize),
    pub format: Format,
    pub samples: usize,
    /// `(alpha, y)` points of the residual grid in plot mode.
    pub grid: (usize, usize),
    pub scan: bool,
    /// Divide mesh coordinates by the vertical period.
    pub normalize: bool,
    pub out: PathBuf,
}

impl RunConfig {
    /// Defaults for `mode` with nothing overridden.
    pub fn new(mode: Mode) -> Self {
        RunConfig {
            mode,
            params: None,
            tol: mode.default_tol(),
            steps: 12,
            s_max: 0.6,
            resolution: 32,
            end_cutoff: 1e-2,
            copies: (1, 1),
            format: Format::Obj,
            samples: 100,
            grid: (8, 8),
            scan: false,
            normalize: true,
            out: PathBuf::from("."),
        }
    }

    /// Merge the config file (if any) and the flags, then validate.
    pub fn from_cli(cli: &Cli) -> Result<Self, RunError> {
        let file = match &cli.config {
            Some(p) => FileConfig::load(p)?,
            None => FileConfig::default(),
        };
        let mut c = RunConfig::new(cli.mode);
        let alpha = cli.alpha.or(file.alpha);
        let x = cli.x.or(file.x);
        let y = cli.y.or(file.y);
        c.params = match (alpha, x, y) {
            (None, None, None) => None,
            (Some(alpha), Some(x), Some(y)) => Some(Params { alpha, x, y }),
            _ => return Err(RunError::Config("alpha, x and y must be given together".into())),
        };
        macro_rules! pick {
            ($field:ident) => {
                if let Some(v) = cli.$field.or(file.$field) {
                    c.$field = v;
                }
            };
        }
        pick!(tol);
        pick!(steps);
        pick!(s_max);
        pick!(resolution);
        pick!(end_cutoff);
        pick!(format);
        pick!(samples);
        if let Some(v) = cli.copies.or(file.copies.map(|[a, b]| (a, b))) {
            c.copies = v;
        }
        if let Some([a, b]) = file.grid {
            c.grid = (a, b);
        }
        c.scan = cli.scan || file.scan.unwrap_or(false);
        if let Some(v) = file.normalize {
            c.normalize = v;
        }
        if let Some(v) = cli.out.clone().or(file.out) {
            c.out = v;
        }
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), RunError> {
        let bad = |m: &str| Err(RunError::Config(m.into()));
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return bad("tol must be positive");
        }
        if !(self.end_cutoff > 0.0 && self.end_cutoff.is_finite()) {
            return bad("end_cutoff must be positive");
        }
        if !(self.s_max > 0.0 && self.s_max.is_finite()) {
            return bad("s_max must be positive");
        }
        if self.steps == 0 {
            return bad("steps must be positive");
        }
        if self.resolution < 8 {
            return bad("resolution must be at least 8");
        }
        if self.copies.0 == 0 || self.copies.1 == 0 {
            return bad("copies must be positive");
        }
        if self.samples < 2 || self.grid.0 < 2 || self.grid.1 < 2 {
            return bad("samples and grid sizes must be at least 2");
        }
        if let Some(p) = self.params {
            if ![p.alpha, p.x, p.y].iter().all(|v| v.is_finite()) {
                return bad("parameters must be finite");
            }
            // mesh, periods and verify need a genuine surface; solve treats
            // (x, y) as a Newton seed
            if self.mode != Mode::Solve {
                scherk_core::riemann_core::SurfaceParams::new(p.alpha, p.x, p.y).map_err(|e| RunError::Config(e.to_string()))?;
            }
        }
        Ok(())
    }
}
