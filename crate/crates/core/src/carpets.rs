//! Bedford–McMullen carpets and generalized grid carpets.
//!
//! A carpet splits the unit square into `p` columns and `q` rows and keeps a
//! set of cells; each kept cell `(j, i)` contributes the map
//! `x ↦ diag(1/p, 1/q) x + (j/p, i/q)`. Specs are canonicalized to `q ≥ p`
//! so columns are the coarse direction.
//!
//! With `N` cells, `c` non-empty columns and `t_j` cells in column `j`:
//!
//! - box dimension: `log c / log p + log(N/c) / log q`
//! - Hausdorff dimension: `log_p Σ_j t_j^{log p / log q}`

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ifs::{parse_error, planar_map, Ifs};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CarpetSpec {
    p: usize,
    q: usize,
    /// `(column j, row i)`, sorted.
    cells: BTreeSet<(usize, usize)>,
    transposed: bool,
}

impl CarpetSpec {
    /// Validates and canonicalizes; when `q < p` the grid is transposed
    /// (`p ↔ q`, `j ↔ i`) and [`CarpetSpec::transposed`] reports it.
    pub fn new(p: usize, q: usize, cells: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        if p < 2 || q < 2 {
            return Err(Error::invalid(format!(
                "carpet grid needs p >= 2 and q >= 2, got p = {p}, q = {q}"
            )));
        }
        let cells: BTreeSet<(usize, usize)> = cells.into_iter().collect();
        if cells.is_empty() {
            return Err(Error::invalid("carpet needs at least one selected cell"));
        }
        if let Some(&(j, i)) = cells.iter().find(|&&(j, i)| j >= p || i >= q) {
            return Err(Error::invalid(format!(
                "cell ({j}, {i}) is outside the {p}x{q} grid"
            )));
        }
        if q >= p {
            return Ok(CarpetSpec {
                p,
                q,
                cells,
                transposed: false,
            });
        }
        Ok(CarpetSpec {
            p: q,
            q: p,
            cells: cells.into_iter().map(|(j, i)| (i, j)).collect(),
            transposed: true,
        })
    }

    pub fn columns(&self) -> usize {
        self.p
    }

    pub fn rows(&self) -> usize {
        self.q
    }

    pub fn cells(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.cells.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn transposed(&self) -> bool {
        self.transposed
    }

    /// Number of selected cells in each column.
    pub fn column_counts(&self) -> Vec<usize> {
        let mut t = vec![0; self.p];
        for &(j, _) in &self.cells {
            t[j] += 1;
        }
        t
    }

    pub fn occupied_columns(&self) -> usize {
        self.column_counts().iter().filter(|&&t| t > 0).count()
    }

    /// The selection as text, top row first: `#` kept, `.` dropped.
    pub fn ascii(&self) -> String {
        let mut out = String::new();
        for i in (0..self.q).rev() {
            for j in 0..self.p {
                out.push(if self.cells.contains(&(j, i)) { '#' } else { '.' });
            }
            out.push('\n');
        }
        out
    }

    /// `{"p": int, "q": int, "cells": [[j, i], ...]}`.
    pub fn from_json(text: &str) -> Result<Self> {
        let rec: CarpetRecord = serde_json::from_str(text).map_err(|e| parse_error(text, e))?;
        CarpetSpec::new(rec.p, rec.q, rec.cells.into_iter().map(|[j, i]| (j, i)))
    }

    pub fn to_json(&self) -> String {
        let rec = CarpetRecord {
            p: self.p,
            q: self.q,
            cells: self.cells.iter().map(|&(j, i)| [j, i]).collect(),
        };
        serde_json::to_string(&rec).expect("carpet serializes")
    }
}

#[derive(Debug, Deserialize, Serialize)]
struct CarpetRecord {
    p: usize,
    q: usize,
    cells: Vec<[usize; 2]>,
}

/// One map `diag(1/p, 1/q)` translated to each selected cell's corner.
pub fn carpet_to_ifs(spec: &CarpetSpec) -> Ifs {
    let (p, q) = (spec.p as f64, spec.q as f64);
    let a = [[1.0 / p, 0.0], [0.0, 1.0 / q]];
    let maps = spec
        .cells
        .iter()
        .map(|&(j, i)| planar_map(a, [j as f64 / p, i as f64 / q]))
        .collect();
    Ifs::new(maps).expect("carpet cells are non-empty")
}

pub fn carpet_box_dimension(spec: &CarpetSpec) -> f64 {
    let n = spec.len() as f64;
    let c = spec.occupied_columns() as f64;
    let (p, q) = (spec.p as f64, spec.q as f64);
    c.ln() / p.ln() + (n / c).ln() / q.ln()
}

pub fn carpet_hausdorff_dimension(spec: &CarpetSpec) -> f64 {
    let (p, q) = (spec.p as f64, spec.q as f64);
    let theta = p.ln() / q.ln();
    let sum: f64 = spec
        .column_counts()
        .iter()
        .filter(|&&t| t > 0)
        .map(|&t| (t as f64).powf(theta))
        .sum();
    sum.ln() / p.ln()
}

/// A grid of arbitrary column widths and row heights with selected cells.
#[derive(Clone, Debug, PartialEq)]
pub struct GridSpec {
    widths: Vec<f64>,
    heights: Vec<f64>,
    cells: BTreeSet<(usize, usize)>,
}

const PARTITION_TOL: f64 = 1e-12;

fn check_partition(name: &str, parts: &[f64]) -> Result<()> {
    if parts.len() < 2 {
        return Err(Error::invalid(format!("{name} need at least two entries")));
    }
    if let Some(bad) = parts.iter().find(|w| w.is_nan() || **w <= 0.0) {
        return Err(Error::invalid(format!("{name} must be positive, found {bad}")));
    }
    let total: f64 = parts.iter().sum();
    if (total - 1.0).abs() > PARTITION_TOL {
        return Err(Error::invalid(format!("{name} sum to {total}, expected 1")));
    }
    Ok(())
}

impl GridSpec {
    pub fn new(
        widths: Vec<f64>,
        heights: Vec<f64>,
        cells: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self> {
        check_partition("column widths", &widths)?;
        check_partition("row heights", &heights)?;
        let cells: BTreeSet<(usize, usize)> = cells.into_iter().collect();
        if cells.is_empty() {
            return Err(Error::invalid("grid needs at least one selected cell"));
        }
        if let Some(&(j, i)) = cells
            .iter()
            .find(|&&(j, i)| j >= widths.len() || i >= heights.len())
        {
            return Err(Error::invalid(format!("cell ({j}, {i}) is outside the grid")));
        }
        Ok(GridSpec {
            widths,
            heights,
            cells,
        })
    }

    /// Equal widths `1/p` and heights `1/q`.
    pub fn uniform(spec: &CarpetSpec) -> Self {
        GridSpec {
            widths: vec![1.0 / spec.p as f64; spec.p],
            heights: vec![1.0 / spec.q as f64; spec.q],
            cells: spec.cells.clone(),
        }
    }
}

fn prefix_sums(parts: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    parts
        .iter()
        .map(|w| {
            let start = acc;
            acc += w;
            start
        })
        .collect()
}

/// One map `diag(width_j, height_i)` per selected cell, translated to the
/// cell's lower-left corner.
pub fn grid_to_ifs(spec: &GridSpec) -> Ifs {
    let xs = prefix_sums(&spec.widths);
    let ys = prefix_sums(&spec.heights);
    let maps = spec
        .cells
        .iter()
        .map(|&(j, i)| {
            planar_map(
                [[spec.widths[j], 0.0], [0.0, spec.heights[i]]],
                [xs[j], ys[i]],
            )
        })
        .collect();
    Ifs::new(maps).expect("grid cells are non-empty")
}

/// Multi-line summary used by the CLI reports.
pub fn describe(spec: &CarpetSpec) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "carpet {}x{} (columns x rows), {} cells{}",
        spec.p,
        spec.q,
        spec.len(),
        if spec.transposed { ", transposed to q >= p" } else { "" }
    );
    out.push_str(&spec.ascii());
    out
}
