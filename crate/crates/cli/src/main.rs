//! `selfaffine`: dimension reports, covers, samples, renders and condition
//! checks for iterated function systems of affine maps.
//!
//! Exit codes: 0 success or pass, 1 usage error or unsupported input,
//! 2 condition fails, 3 condition inconclusive, 4 resource budget exceeded.

mod commands;
mod input;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use selfaffine::Error;

#[derive(Debug, Parser)]
#[command(name = "selfaffine", version, about = "Self-affine IFS toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Similarity, affinity and box-counting dimensions with the inequality chain.
    Dims(DimsArgs),
    /// Rasterize a chaos-game cloud, optionally with cover ellipses, to a P6 pixmap.
    Render(RenderArgs),
    /// Write the cylinder-ellipse cover for Z(delta), or balls covering it.
    Cover(CoverArgs),
    /// Sample the attractor and write points and box counts.
    Points(PointsArgs),
    /// Run the open set condition or Hueter-Lalley checker.
    Check(CheckArgs),
    /// Show a carpet selection with its closed-form dimensions.
    Carpet(CarpetArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct InputArgs {
    /// IFS JSON file: {"d": 2, "maps": [{"A": [[..], [..]], "a": [..]}, ..]}
    #[arg(long, conflicts_with = "carpet", required_unless_present = "carpet")]
    pub ifs: Option<String>,
    /// Carpet JSON file: {"p": 2, "q": 3, "cells": [[j, i], ..]}
    #[arg(long)]
    pub carpet: Option<String>,
}

#[derive(Debug, Args, Serialize)]
pub struct DimsArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub input: InputArgs,
    /// Word lengths n for the affinity dimension s_n, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "1,2,4")]
    pub depth: Vec<usize>,
    /// Chaos-game points for the box-count estimate.
    #[arg(long, default_value_t = 100_000)]
    pub points: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Dyadic exponents j0..j1 for delta = 2^-j.
    #[arg(long, default_value = "3..8", value_parser = input::parse_scales)]
    #[serde(serialize_with = "input::serialize_scales")]
    pub scales: (u32, u32),
    /// Bisection tolerance for s_n.
    #[arg(long, default_value_t = selfaffine::dimension::DEFAULT_ZERO_TOL)]
    pub tol: f64,
    /// Write the pressure curve of the deepest n as CSV.
    #[arg(long)]
    pub out: Option<String>,
    /// Print the report as JSON.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct RenderArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub input: InputArgs,
    #[arg(long, default_value_t = 100_000)]
    pub points: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 512)]
    pub width: usize,
    #[arg(long, default_value_t = 512)]
    pub height: usize,
    /// Overlay the cylinder ellipses of Z(delta).
    #[arg(long)]
    pub cover_delta: Option<f64>,
    /// Output pixmap path.
    #[arg(long)]
    pub out: String,
}

#[derive(Debug, Args, Serialize)]
pub struct CoverArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub input: InputArgs,
    /// Stopping-set scale delta in (0, 1].
    #[arg(long, default_value_t = 0.1)]
    pub delta: f64,
    /// Replace every ellipse by balls of this radius.
    #[arg(long)]
    pub ball_radius: Option<f64>,
    /// CSV path; stdout when omitted.
    #[arg(long)]
    pub out: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum GeneratorArg {
    Chaos,
    Deterministic,
    Randomized,
}

#[derive(Debug, Args, Serialize)]
pub struct PointsArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub input: InputArgs,
    #[arg(long, value_enum, default_value_t = GeneratorArg::Chaos)]
    pub generator: GeneratorArg,
    /// Number of chaos-game points.
    #[arg(long, default_value_t = 100_000)]
    pub points: usize,
    /// Word length for the deterministic and randomized generators.
    #[arg(long, default_value_t = 8)]
    pub depth: usize,
    /// Translation noise for the randomized generator.
    #[arg(long, default_value_t = 0.01)]
    pub sigma: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "3..8", value_parser = input::parse_scales)]
    #[serde(serialize_with = "input::serialize_scales")]
    pub scales: (u32, u32),
    /// Points CSV path; only the box-count table is printed when omitted.
    #[arg(long)]
    pub out: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConditionArg {
    /// Open set condition on the rectangle given by --rect.
    Osc,
    /// Hueter-Lalley hypotheses.
    HueterLalley,
}

#[derive(Debug, Args, Serialize)]
pub struct CheckArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub input: InputArgs,
    #[arg(long, value_enum)]
    pub condition: ConditionArg,
    /// Candidate open rectangle x0,y0,x1,y1 for the open set condition.
    #[arg(long, default_value = "0,0,1,1", value_parser = input::parse_rect)]
    #[serde(serialize_with = "input::serialize_rect")]
    pub rect: [f64; 4],
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct CarpetArgs {
    /// Carpet JSON file.
    #[arg(long)]
    pub carpet: String,
    /// Word length for the affinity dimension.
    #[arg(long, default_value_t = 4)]
    pub depth: usize,
    #[arg(long, default_value_t = selfaffine::dimension::DEFAULT_ZERO_TOL)]
    pub tol: f64,
}

/// Failures that map to specific exit codes.
#[derive(Debug)]
pub enum Outcome {
    Success,
    ConditionFail,
    Inconclusive,
}

fn exit_code_for(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(Error::BudgetExceeded { .. } | Error::DepthCapReached { .. }) => 4,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match &cli.command {
        Command::Dims(a) => commands::dims(a),
        Command::Render(a) => commands::render(a),
        Command::Cover(a) => commands::cover(a),
        Command::Points(a) => commands::points(a),
        Command::Check(a) => commands::check(a),
        Command::Carpet(a) => commands::carpet(a),
    };
    match result {
        Ok(Outcome::Success) => ExitCode::SUCCESS,
        Ok(Outcome::ConditionFail) => ExitCode::from(2),
        Ok(Outcome::Inconclusive) => ExitCode::from(3),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
