use std::fmt::Write as _;
use std::fs::File;
use std::io::{self, BufWriter, Write};

use anyhow::{bail, Context};
use serde::Serialize;

use selfaffine::carpets::{carpet_box_dimension, carpet_hausdorff_dimension, carpet_to_ifs, describe};
use selfaffine::conditions::{check_hueter_lalley, check_osc_rectangle, ConditionReport, Rect, Verdict};
use selfaffine::covers::{ball_cover_from_ellipse, stopping_cover};
use selfaffine::dimension::{affinity_dimension_with_limits, pressure_grid, similarity_dimension, PressureCurve};
use selfaffine::estimators::{
    box_count, boxdim_estimate, chaos_game, deterministic_points, dyadic_scales, randomized_attractor,
    BoxCountSeries, BoxDimFit, PointCloud, DEFAULT_BURN_IN,
};
use selfaffine::export::{write_balls_csv, write_box_counts_csv, write_cover_csv, write_points_csv, write_pressure_csv};
use selfaffine::render::{render as rasterize, RenderOptions};
use selfaffine::{Ifs, Limits};

use crate::input::{load, load_carpet};
use crate::{CarpetArgs, CheckArgs, ConditionArg, CoverArgs, DimsArgs, GeneratorArg, Outcome, PointsArgs, RenderArgs};

const PRESSURE_GRID_POINTS: usize = 101;
/// Allowance for sampling noise when the empirical box slope enters the chain.
const EMPIRICAL_SLACK: f64 = 0.05;

fn config_line<T: Serialize>(command: &str, args: &T) -> String {
    let json = serde_json::to_string(args).expect("arguments serialize");
    format!("# {command} {json}")
}

fn create(path: &str) -> anyhow::Result<BufWriter<File>> {
    let f = File::create(path).with_context(|| format!("cannot write {path}"))?;
    Ok(BufWriter::new(f))
}

fn finish(mut w: impl Write, path: &str) -> anyhow::Result<()> {
    w.flush().with_context(|| format!("cannot write {path}"))
}

fn check_points(n: usize) -> anyhow::Result<()> {
    if n == 0 {
        bail!("--points must be at least 1");
    }
    Ok(())
}

/// Box counts over `2^-j0 ..= 2^-j1`, warning on stderr when the finest
/// scale has more than half as many occupied cells as points.
fn box_estimate(cloud: &PointCloud, scales: (u32, u32)) -> anyhow::Result<(BoxCountSeries, BoxDimFit)> {
    let series = box_count(cloud, &dyadic_scales(scales.0, scales.1))?;
    let finest = *series.counts.last().expect("at least three scales");
    if finest as f64 > 0.5 * series.n_points as f64 {
        eprintln!(
            "warning: {finest} occupied boxes at delta = 2^-{} from {} points; the finest scales are undersampled",
            scales.1, series.n_points
        );
    }
    let fit = boxdim_estimate(&series)?;
    Ok((series, fit))
}

#[derive(Serialize)]
struct CarpetValues {
    hausdorff: f64,
    box_dimension: f64,
}

#[derive(Serialize)]
struct ChainLink {
    lower: String,
    upper: String,
    lower_value: f64,
    upper_value: f64,
    slack: f64,
    holds: bool,
}

#[derive(Serialize)]
struct DimsReport {
    source: String,
    maps: usize,
    dim: usize,
    similarity_of_norms: f64,
    affinity: Vec<PressureCurve>,
    box_fit: BoxDimFit,
    box_counts: BoxCountSeries,
    carpet: Option<CarpetValues>,
    chain: Vec<ChainLink>,
}

fn link(lower: &str, lv: f64, upper: &str, uv: f64, slack: f64) -> ChainLink {
    ChainLink {
        lower: lower.to_string(),
        upper: upper.to_string(),
        lower_value: lv,
        upper_value: uv,
        slack,
        holds: lv <= uv + slack,
    }
}

pub fn dims(args: &DimsArgs) -> anyhow::Result<Outcome> {
    check_points(args.points)?;
    if args.depth.is_empty() || args.depth.contains(&0) {
        bail!("--depth needs positive word lengths");
    }
    let loaded = load(&args.input)?;
    let ifs = &loaded.ifs;
    let limits = Limits::default();
    let similarity = similarity_dimension(&ifs.ratios())?;
    let mut curves = Vec::new();
    for &n in &args.depth {
        curves.push(affinity_dimension_with_limits(ifs, n, args.tol, &limits)?);
    }
    let cloud = chaos_game(ifs, args.points, args.seed, DEFAULT_BURN_IN)?;
    let (series, fit) = box_estimate(&cloud, args.scales)?;
    let carpet = loaded.carpet.as_ref().map(|c| CarpetValues {
        hausdorff: carpet_hausdorff_dimension(c),
        box_dimension: carpet_box_dimension(c),
    });

    let deepest = curves.iter().max_by_key(|c| c.depth).expect("non-empty");
    let s_n = deepest.zero;
    let label = format!("affinity s_{}", deepest.depth);
    let mut chain = Vec::new();
    if let Some(c) = &carpet {
        chain.push(link("hausdorff", c.hausdorff, "box (closed form)", c.box_dimension, 1e-12));
        chain.push(link("box (closed form)", c.box_dimension, &label, s_n, 1e-9));
    }
    chain.push(link("box (empirical)", fit.slope, &label, s_n, EMPIRICAL_SLACK));
    chain.push(link(&label, s_n, "similarity of norms", similarity, 1e-9));

    if let Some(path) = &args.out {
        let grid = pressure_grid(ifs, deepest.depth, PRESSURE_GRID_POINTS, &limits)?;
        let curve = PressureCurve {
            samples: grid,
            ..deepest.clone()
        };
        let mut w = create(path)?;
        write_pressure_csv(&mut w, &curve)?;
        finish(w, path)?;
    }

    let report = DimsReport {
        source: loaded.source.clone(),
        maps: ifs.len(),
        dim: ifs.dim(),
        similarity_of_norms: similarity,
        affinity: curves,
        box_fit: fit,
        box_counts: series,
        carpet,
        chain,
    };
    if args.json {
        #[derive(Serialize)]
        struct Wrapped<'a> {
            config: &'a DimsArgs,
            report: &'a DimsReport,
        }
        println!(
            "{}",
            serde_json::to_string_pretty(&Wrapped { config: args, report: &report })?
        );
    } else {
        print!("{}", dims_text(args, &report));
    }
    Ok(Outcome::Success)
}

fn dims_text(args: &DimsArgs, r: &DimsReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{}", config_line("dims", args));
    let _ = writeln!(out, "input: {} ({} maps, d = {})", r.source, r.maps, r.dim);
    let _ = writeln!(out, "similarity dimension of norms: {:.6}", r.similarity_of_norms);
    for c in &r.affinity {
        let mut flags = String::new();
        if c.clamped {
            flags.push_str(" [clamped at 2d]");
        }
        if c.above_ambient {
            flags.push_str(" [above ambient dimension]");
        }
        let _ = writeln!(out, "affinity dimension s_{} = {:.6}{flags}", c.depth, c.zero);
    }
    let _ = writeln!(
        out,
        "box-count estimate: {:.6} (intercept {:.4}, max residual {:.4}, {} points, delta 2^-{}..2^-{})",
        r.box_fit.slope, r.box_fit.intercept, r.box_fit.max_residual, r.box_counts.n_points, args.scales.0, args.scales.1
    );
    if let Some(c) = &r.carpet {
        let _ = writeln!(out, "carpet hausdorff dimension: {:.6}", c.hausdorff);
        let _ = writeln!(out, "carpet box dimension: {:.6}", c.box_dimension);
    }
    let _ = writeln!(out, "inequality chain:");
    for l in &r.chain {
        let _ = writeln!(
            out,
            "  {} {:.6} <= {} {:.6}: {}{}",
            l.lower,
            l.lower_value,
            l.upper,
            l.upper_value,
            if l.holds { "holds" } else { "VIOLATED" },
            if l.slack > 1e-6 { format!(" (slack {})", l.slack) } else { String::new() }
        );
    }
    out
}

pub fn render(args: &RenderArgs) -> anyhow::Result<Outcome> {
    check_points(args.points)?;
    let loaded = load(&args.input)?;
    let cloud = chaos_game(&loaded.ifs, args.points, args.seed, DEFAULT_BURN_IN)?;
    let overlays = match args.cover_delta {
        Some(delta) => stopping_cover(&loaded.ifs, delta)?.1,
        None => Vec::new(),
    };
    let opts = RenderOptions {
        width: args.width,
        height: args.height,
        ..RenderOptions::default()
    };
    let (raster, _) = rasterize(&cloud, &overlays, &opts)?;
    let mut w = create(&args.out)?;
    raster.write_ppm(&mut w)?;
    finish(w, &args.out)?;
    println!("{}", config_line("render", args));
    println!(
        "wrote {}x{} pixmap with {} points and {} ellipses to {}",
        args.width,
        args.height,
        cloud.len(),
        overlays.len(),
        args.out
    );
    Ok(Outcome::Success)
}

fn write_to(path: Option<&str>, f: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> anyhow::Result<()> {
    match path {
        Some(p) => {
            let mut w = create(p)?;
            f(&mut w).with_context(|| format!("cannot write {p}"))?;
            finish(w, p)
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            f(&mut lock)?;
            Ok(lock.flush()?)
        }
    }
}

pub fn cover(args: &CoverArgs) -> anyhow::Result<Outcome> {
    let loaded = load(&args.input)?;
    let (set, ellipses) = stopping_cover(&loaded.ifs, args.delta)?;
    let summary = match args.ball_radius {
        None => {
            write_to(args.out.as_deref(), |w| write_cover_csv(w, &ellipses))?;
            format!("{} ellipses", ellipses.len())
        }
        Some(r) => {
            let mut centers = Vec::new();
            for e in &ellipses {
                centers.extend(ball_cover_from_ellipse(e, r)?);
            }
            write_to(args.out.as_deref(), |w| write_balls_csv(w, &centers, r))?;
            format!("{} balls of radius {r} from {} ellipses", centers.len(), ellipses.len())
        }
    };
    if args.out.is_some() {
        println!("{}", config_line("cover", args));
        println!(
            "Z({}) has {} words (longest {}); wrote {summary}",
            args.delta,
            set.len(),
            set.max_word_len()
        );
    }
    Ok(Outcome::Success)
}

fn sample(ifs: &Ifs, args: &PointsArgs) -> anyhow::Result<PointCloud> {
    Ok(match args.generator {
        GeneratorArg::Chaos => {
            check_points(args.points)?;
            chaos_game(ifs, args.points, args.seed, DEFAULT_BURN_IN)?
        }
        GeneratorArg::Deterministic => deterministic_points(ifs, args.depth)?,
        GeneratorArg::Randomized => randomized_attractor(ifs, args.depth, args.sigma, args.seed)?,
    })
}

pub fn points(args: &PointsArgs) -> anyhow::Result<Outcome> {
    let loaded = load(&args.input)?;
    let cloud = sample(&loaded.ifs, args)?;
    if let Some(path) = &args.out {
        let mut w = create(path)?;
        write_points_csv(&mut w, &cloud)?;
        finish(w, path)?;
    }
    println!("{}", config_line("points", args));
    println!("{} points from {}", cloud.len(), loaded.source);
    let (series, fit) = box_estimate(&cloud, args.scales)?;
    write_to(None, |w| write_box_counts_csv(w, &series, Some(&fit)))?;
    Ok(Outcome::Success)
}

fn outcome(report: &ConditionReport) -> Outcome {
    match report.verdict {
        Verdict::Pass => Outcome::Success,
        Verdict::Fail => Outcome::ConditionFail,
        Verdict::Inconclusive => Outcome::Inconclusive,
    }
}

pub fn check(args: &CheckArgs) -> anyhow::Result<Outcome> {
    let loaded = load(&args.input)?;
    let report = match args.condition {
        ConditionArg::Osc => {
            let [x0, y0, x1, y1] = args.rect;
            check_osc_rectangle(&loaded.ifs, &Rect::new(x0, y0, x1, y1)?)?
        }
        ConditionArg::HueterLalley => check_hueter_lalley(&loaded.ifs)?,
    };
    if args.json {
        #[derive(Serialize)]
        struct Wrapped<'a> {
            config: &'a CheckArgs,
            report: &'a ConditionReport,
        }
        println!(
            "{}",
            serde_json::to_string_pretty(&Wrapped { config: args, report: &report })?
        );
    } else {
        println!("{}", config_line("check", args));
        print!("{}", report.to_text());
    }
    Ok(outcome(&report))
}

pub fn carpet(args: &CarpetArgs) -> anyhow::Result<Outcome> {
    let spec = load_carpet(&args.carpet)?;
    let ifs = carpet_to_ifs(&spec);
    let h = carpet_hausdorff_dimension(&spec);
    let b = carpet_box_dimension(&spec);
    let curve = affinity_dimension_with_limits(&ifs, args.depth, args.tol, &Limits::default())?;
    println!("{}", config_line("carpet", args));
    print!("{}", describe(&spec));
    println!("hausdorff dimension: {h:.6}");
    println!("box dimension: {b:.6}");
    println!("affinity dimension s_{}: {:.6}", args.depth, curve.zero);
    let holds = h <= b + 1e-12 && b <= curve.zero + 1e-9;
    println!(
        "chain hausdorff <= box <= affinity: {}",
        if holds { "holds" } else { "VIOLATED" }
    );
    if b + 1e-9 < curve.zero {
        println!("gap: affinity exceeds box by {:.6}", curve.zero - b);
    }
    Ok(Outcome::Success)
}
