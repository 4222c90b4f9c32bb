//! `gsc`: simulate scenes, summarise samples, extract feature maps and render
//! false-colour composites.

mod commands;
mod config;
mod manifest;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::SharedArgs;

#[derive(Debug, Parser)]
#[command(
    name = "gsc",
    version,
    about = "Statistical complexity features for SAR intensity images"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Render a synthetic scene into one raster per channel.
    Simulate {
        /// Scene description (TOML); the default is the three-class phantom.
        #[arg(long, value_name = "FILE")]
        phantom: Option<PathBuf>,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        shared: SharedArgs,
    },
    /// Fit and measure a rectangular sample of every band.
    Summarize {
        /// Raster header.
        input: PathBuf,
        /// Sample rectangle `x,y,width,height`; the whole raster when omitted.
        #[arg(long, value_parser = commands::parse_rect)]
        rect: Option<gsc_core::simulate::Rect>,
        /// Only summarise this band (0-based).
        #[arg(long)]
        band: Option<usize>,
        /// Also write the report to this file, with a manifest beside it.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        shared: SharedArgs,
    },
    /// Sliding-window feature maps for every band of the inputs.
    Features {
        /// Raster headers.
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        shared: SharedArgs,
    },
    /// Equalize three rasters and write them as the R, G and B planes of a PPM.
    Render {
        /// Headers for the HH, HV and VV rasters, in that order.
        #[arg(num_args = 3, required = true)]
        inputs: Vec<PathBuf>,
        /// Band to take from each raster.
        #[arg(long, default_value_t = 0)]
        band: usize,
        /// Output PPM path.
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        shared: SharedArgs,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Usage,
    Data,
    Numerical,
}

#[derive(Debug)]
pub struct CliError {
    pub kind: ErrorKind,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            kind: ErrorKind::Usage,
            message: message.into(),
        }
    }

    pub fn data(message: impl Into<String>) -> Self {
        Self {
            kind: ErrorKind::Data,
            message: message.into(),
        }
    }

    pub fn numerical(message: impl Into<String>) -> Self {
        Self {
            kind: ErrorKind::Numerical,
            message: message.into(),
        }
    }

    fn exit_code(&self) -> u8 {
        match self.kind {
            ErrorKind::Usage => 2,
            ErrorKind::Data => 3,
            ErrorKind::Numerical => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<gsc_core::Error> for CliError {
    fn from(e: gsc_core::Error) -> Self {
        let kind = if e.is_numerical() {
            ErrorKind::Numerical
        } else if matches!(e, gsc_core::Error::InvalidParameter(_)) {
            ErrorKind::Usage
        } else {
            ErrorKind::Data
        };
        Self {
            kind,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::data(e.to_string())
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate {
            phantom,
            out,
            shared,
        } => commands::simulate(&shared.resolve()?, phantom.as_deref(), &out),
        Command::Summarize {
            input,
            rect,
            band,
            out,
            shared,
        } => commands::summarize(&shared.resolve()?, &input, rect, band, out.as_deref()),
        Command::Features {
            inputs,
            out,
            shared,
        } => commands::features(&shared.resolve()?, &inputs, &out),
        Command::Render {
            inputs,
            band,
            out,
            shared,
        } => commands::render(&shared.resolve()?, &inputs, band, &out),
    }
}

fn main() -> ExitCode {
    // clap exits with status 2 on usage errors
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("gsc: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
