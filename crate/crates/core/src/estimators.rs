//! Attractor samplers and the box-counting dimension estimator.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::ifs::{Ifs, Limits};
use crate::linalg::{SmallMatrix, SmallVector, MAX_DIM};
use crate::rng::SampleStream;

pub const DEFAULT_BURN_IN: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Generator {
    ChaosGame,
    Deterministic,
    Randomized,
    External,
}

/// Points in ℝ^d stored row-major in one flat buffer.
#[derive(Clone, Debug, PartialEq)]
pub struct PointCloud {
    dim: usize,
    coords: Vec<f64>,
    pub seed: Option<u64>,
    pub generator: Generator,
}

impl PointCloud {
    /// Wraps externally produced points.
    pub fn from_points<P: AsRef<[f64]>>(dim: usize, points: &[P]) -> Result<Self> {
        let mut coords = Vec::with_capacity(dim * points.len());
        for (i, p) in points.iter().enumerate() {
            let p = p.as_ref();
            if p.len() != dim {
                return Err(Error::invalid(format!(
                    "point {i} has {} coordinates, expected {dim}",
                    p.len()
                )));
            }
            coords.extend_from_slice(p);
        }
        Ok(PointCloud {
            dim,
            coords,
            seed: None,
            generator: Generator::External,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks_exact(self.dim)
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn translated(&self, shift: &[f64]) -> Self {
        let mut out = self.clone();
        for p in out.coords.chunks_exact_mut(self.dim) {
            for (x, s) in p.iter_mut().zip(shift) {
                *x += s;
            }
        }
        out
    }

    /// Per-coordinate `(min, max)`.
    pub fn bounds(&self) -> Vec<(f64, f64)> {
        let mut b = vec![(f64::INFINITY, f64::NEG_INFINITY); self.dim];
        for p in self.points() {
            for (bj, &x) in b.iter_mut().zip(p) {
                bj.0 = bj.0.min(x);
                bj.1 = bj.1.max(x);
            }
        }
        b
    }
}

/// Random iteration from `x₀ = 0`: each step applies a uniformly chosen map;
/// the first `burn_in` iterates are discarded.
pub fn chaos_game(ifs: &Ifs, n_points: usize, seed: u64, burn_in: usize) -> Result<PointCloud> {
    ifs.ensure_valid()?;
    if n_points == 0 {
        return Err(Error::invalid("n_points must be at least 1"));
    }
    let d = ifs.dim();
    let k = ifs.len();
    let maps = ifs.maps();
    let mut stream = SampleStream::new(seed);
    let mut x = SmallVector::zeros(d);
    for _ in 0..burn_in {
        x = maps[stream.index(k)].apply(&x);
    }
    let mut coords = Vec::with_capacity(n_points * d);
    for _ in 0..n_points {
        x = maps[stream.index(k)].apply(&x);
        coords.extend_from_slice(x.as_slice());
    }
    Ok(PointCloud {
        dim: d,
        coords,
        seed: Some(seed),
        generator: Generator::ChaosGame,
    })
}

/// `{f_w(0) : |w| = depth}` in lexicographic word order.
pub fn deterministic_points(ifs: &Ifs, depth: usize) -> Result<PointCloud> {
    deterministic_points_with_limits(ifs, depth, &Limits::default())
}

pub fn deterministic_points_with_limits(ifs: &Ifs, depth: usize, limits: &Limits) -> Result<PointCloud> {
    level_points(ifs, depth, None, limits).map(|coords| PointCloud {
        dim: ifs.dim(),
        coords,
        seed: None,
        generator: Generator::Deterministic,
    })
}

/// Level-`depth` points where every map application in the word tree gets
/// its own translation error, uniform on `[−σ, σ]^d`. With `σ = 0` this is
/// exactly [`deterministic_points`].
pub fn randomized_attractor(ifs: &Ifs, depth: usize, sigma: f64, seed: u64) -> Result<PointCloud> {
    randomized_attractor_with_limits(ifs, depth, sigma, seed, &Limits::default())
}

pub fn randomized_attractor_with_limits(
    ifs: &Ifs,
    depth: usize,
    sigma: f64,
    seed: u64,
    limits: &Limits,
) -> Result<PointCloud> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::invalid(format!("sigma must be finite and >= 0, got {sigma}")));
    }
    let noise = (sigma > 0.0).then(|| (sigma, SampleStream::new(seed)));
    level_points(ifs, depth, noise, limits).map(|coords| PointCloud {
        dim: ifs.dim(),
        coords,
        seed: Some(seed),
        generator: Generator::Randomized,
    })
}

/// Depth-first walk over the word tree carrying `(A_u, t_u)` for the prefix
/// `u`; a child `u·i` gets `A_u A_i` and `A_u (a_i + ε) + t_u`.
fn level_points(
    ifs: &Ifs,
    depth: usize,
    mut noise: Option<(f64, SampleStream)>,
    limits: &Limits,
) -> Result<Vec<f64>> {
    ifs.ensure_valid()?;
    let words = limits.check_enumeration(ifs.len(), depth)?;
    let d = ifs.dim();
    if depth == 0 {
        return Ok(vec![0.0; d]);
    }
    let maps = ifs.maps();
    let k = maps.len();
    let mut coords = Vec::with_capacity(words as usize * d);
    let mut linear: Vec<SmallMatrix> = vec![SmallMatrix::identity(d); depth + 1];
    let mut shift: Vec<SmallVector> = vec![SmallVector::zeros(d); depth + 1];
    let mut idx = vec![0usize; depth + 1];
    let mut level = 1;
    loop {
        let m = &maps[idx[level]];
        let mut a = *m.translation();
        if let Some((sigma, stream)) = noise.as_mut() {
            for x in a.as_mut_slice() {
                *x += stream.symmetric(*sigma);
            }
        }
        shift[level] = linear[level - 1].mul_vec(&a) + shift[level - 1];
        if level < depth {
            linear[level] = &linear[level - 1] * m.linear();
            level += 1;
            idx[level] = 0;
            continue;
        }
        coords.extend_from_slice(shift[level].as_slice());
        loop {
            idx[level] += 1;
            if idx[level] < k {
                break;
            }
            level -= 1;
            if level == 0 {
                return Ok(coords);
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoxCountSeries {
    /// Descending cell sizes δ.
    pub scales: Vec<f64>,
    /// Occupied cells `N(δ)`.
    pub counts: Vec<u64>,
    pub n_points: usize,
}

/// `δ = 2^{−j}` for `j` in `first..=last`.
pub fn dyadic_scales(first: u32, last: u32) -> Vec<f64> {
    (first..=last).map(|j| 0.5f64.powi(j as i32)).collect()
}

fn occupied_cells(cloud: &PointCloud, delta: f64) -> u64 {
    let d = cloud.dim;
    let mut keys: Vec<[i64; MAX_DIM]> = cloud
        .points()
        .map(|p| {
            let mut key = [0i64; MAX_DIM];
            for (k, x) in key.iter_mut().zip(p) {
                *k = (x / delta).floor() as i64;
            }
            key
        })
        .collect();
    keys.par_sort_unstable();
    keys.dedup();
    debug_assert!(d <= MAX_DIM);
    keys.len() as u64
}

/// Number of half-open grid cells `Π [m_j δ, (m_j+1) δ)` (anchored at the
/// origin) that contain at least one point, for every δ.
pub fn box_count(cloud: &PointCloud, scales: &[f64]) -> Result<BoxCountSeries> {
    if cloud.is_empty() {
        return Err(Error::invalid("box counting needs a non-empty point cloud"));
    }
    if cloud.dim > MAX_DIM {
        return Err(Error::UnsupportedDimension(cloud.dim));
    }
    if let Some(bad) = scales.iter().find(|s| !(**s > 0.0 && **s <= 1.0)) {
        return Err(Error::invalid(format!("scale {bad} is outside (0, 1]")));
    }
    if scales.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::invalid("scales must be strictly descending"));
    }
    let counts = scales
        .par_iter()
        .map(|&delta| occupied_cells(cloud, delta))
        .collect();
    Ok(BoxCountSeries {
        scales: scales.to_vec(),
        counts,
        n_points: cloud.len(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BoxDimFit {
    /// Least-squares slope of `log N(δ)` against `log(1/δ)`.
    pub slope: f64,
    pub intercept: f64,
    /// Largest absolute residual of the fit.
    pub max_residual: f64,
}

pub fn boxdim_estimate(series: &BoxCountSeries) -> Result<BoxDimFit> {
    if series.scales.len() < 3 || series.scales.len() != series.counts.len() {
        return Err(Error::invalid(format!(
            "box-dimension fit needs at least 3 scales, got {}",
            series.scales.len()
        )));
    }
    let xs: Vec<f64> = series.scales.iter().map(|d| (1.0 / d).ln()).collect();
    let ys: Vec<f64> = series.counts.iter().map(|&c| (c as f64).ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let max_residual = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - (intercept + slope * x)).abs())
        .fold(0.0, f64::max);
    Ok(BoxDimFit {
        slope,
        intercept,
        max_residual,
    })
}
