//! Similarity dimension, the singular value function, finite-depth pressure
//! and the affinity (singular) dimension.
//!
//! For a word `w` of length `n` the pressure sum is
//! `Σ_{|w|=n} φ^s(A_w)`, and `P_n(s) = (1/n) log` of it. `P_n` is strictly
//! decreasing in `s` for contractions, so its zero is bracketed on `[0, 2d]`
//! and found by bisection.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::ifs::{Ifs, Limits};
use crate::linalg::{singular_values, singular_values_2x2, SmallMatrix, MAX_DIM};

/// Residual at which the similarity-dimension solver stops.
pub const SIMILARITY_TOL: f64 = 1e-12;
/// Default bisection width for the pressure zero.
pub const DEFAULT_ZERO_TOL: f64 = 1e-10;
/// Word spectra up to this many words are kept in memory between pressure
/// evaluations; larger enumerations are streamed on every evaluation.
pub const SPECTRUM_CACHE_WORDS: u64 = 1 << 22;

const EVAL_CHUNK: usize = 1 << 16;

/// Unique `s ≥ 0` with `Σ λ_i^s = 1`.
pub fn similarity_dimension(ratios: &[f64]) -> Result<f64> {
    if ratios.is_empty() {
        return Err(Error::invalid("need at least one contraction ratio"));
    }
    if let Some(bad) = ratios.iter().find(|r| !(**r > 0.0 && **r < 1.0)) {
        return Err(Error::invalid(format!(
            "contraction ratio {bad} is outside (0, 1)"
        )));
    }
    if ratios.len() == 1 {
        return Ok(0.0);
    }
    let excess = |s: f64| ratios.iter().map(|r| r.powf(s)).sum::<f64>() - 1.0;

    let mut lo = 0.0;
    let mut hi = 1.0;
    while excess(hi) >= 0.0 {
        lo = hi;
        hi *= 2.0;
    }
    let mut best = (f64::INFINITY, lo);
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let f = excess(mid);
        if f.abs() < best.0 {
            best = (f.abs(), mid);
        }
        if f == 0.0 {
            break;
        }
        if f > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(best.1)
}

/// `log φ^s` from log singular values sorted descending.
///
/// For `s < d`: `Σ_{j<l} log α_j + (s − l) log α_{l}` with `l = ⌊s⌋`
/// (zero-based); for `s ≥ d` the continuation `(s/d) Σ log α_j`.
#[inline]
pub fn log_svf_from_logs(log_sv: &[f64], s: f64) -> f64 {
    let d = log_sv.len();
    if s >= d as f64 {
        return s / d as f64 * log_sv.iter().sum::<f64>();
    }
    let l = s.floor() as usize;
    let frac = s - l as f64;
    let mut acc: f64 = log_sv[..l].iter().sum();
    if frac > 0.0 {
        acc += frac * log_sv[l];
    }
    acc
}

/// The singular value function `φ^s(M)`.
pub fn svf(m: &SmallMatrix, s: f64) -> Result<f64> {
    if s.is_nan() || s < 0.0 {
        return Err(Error::invalid(format!("svf order must be >= 0, got {s}")));
    }
    if s == 0.0 {
        return Ok(1.0);
    }
    let sv = singular_values(m)?;
    if sv.smallest() <= 0.0 {
        return Err(Error::invalid("svf of a non-invertible matrix"));
    }
    let mut logs = [0.0; MAX_DIM];
    for (dst, &a) in logs.iter_mut().zip(sv.values()) {
        *dst = a.ln();
    }
    Ok(log_svf_from_logs(&logs[..m.dim()], s).exp())
}

/// Log-domain accumulator: running max plus a compensated (Neumaier) sum of
/// `exp(x − max)`.
#[derive(Clone, Copy, Debug)]
struct LogSum {
    max: f64,
    sum: f64,
    comp: f64,
}

impl LogSum {
    fn new() -> Self {
        LogSum {
            max: f64::NEG_INFINITY,
            sum: 0.0,
            comp: 0.0,
        }
    }

    #[inline]
    fn add_term(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.comp += (self.sum - t) + value;
        } else {
            self.comp += (value - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    fn rescale(&mut self, new_max: f64) {
        if self.max > f64::NEG_INFINITY {
            let f = (self.max - new_max).exp();
            self.sum *= f;
            self.comp *= f;
        }
        self.max = new_max;
    }

    #[inline]
    fn push(&mut self, x: f64) {
        if x > self.max {
            self.rescale(x);
        }
        self.add_term((x - self.max).exp());
    }

    fn merge(&mut self, other: &LogSum) {
        if other.max == f64::NEG_INFINITY {
            return;
        }
        if other.max > self.max {
            self.rescale(other.max);
        }
        let f = (other.max - self.max).exp();
        self.add_term(other.sum * f);
        self.add_term(other.comp * f);
    }

    fn value(&self) -> f64 {
        if self.max == f64::NEG_INFINITY {
            return f64::NEG_INFINITY;
        }
        self.max + (self.sum + self.comp).ln()
    }
}

/// Writes `log α_j(m)` into `out[..d]`, given `log |det m|` computed
/// independently. The smallest value is taken from the determinant so that
/// `Σ log α_j = log |det m|` holds exactly; evaluating `det` on a long,
/// badly conditioned product loses digits to cancellation.
#[inline]
fn log_singular_values_into(m: &SmallMatrix, log_det: f64, out: &mut [f64]) {
    let d = m.dim();
    if d == 2 {
        let (s1, _) = singular_values_2x2(m);
        out[0] = s1.ln();
    } else {
        let sv = singular_values(m).expect("finite products");
        for (dst, &a) in out.iter_mut().zip(&sv.values()[..d - 1]) {
            *dst = a.ln();
        }
    }
    let rest: f64 = out[..d - 1].iter().sum();
    out[d - 1] = (log_det - rest).min(out[d - 2]);
}

/// Visits every product `A_{w₀} ⋯ A_{w_{n−1}}` with `w₀ = first`, in
/// lexicographic order, reusing the parent product at each level. The
/// callback also receives `log |det|` of the product, accumulated from the
/// factors.
fn visit_products(
    maps: &[SmallMatrix],
    log_dets: &[f64],
    first: usize,
    n: usize,
    mut f: impl FnMut(&SmallMatrix, f64),
) {
    let k = maps.len();
    let mut prods = vec![maps[first]; n];
    let mut dets = vec![log_dets[first]; n];
    if n == 1 {
        f(&prods[0], dets[0]);
        return;
    }
    let mut idx = vec![0usize; n];
    let mut level = 1;
    loop {
        prods[level] = prods[level - 1] * maps[idx[level]];
        dets[level] = dets[level - 1] + log_dets[idx[level]];
        if level + 1 < n {
            level += 1;
            idx[level] = 0;
            continue;
        }
        f(&prods[level], dets[level]);
        // advance to the next sibling, climbing when a level is exhausted
        loop {
            idx[level] += 1;
            if idx[level] < k {
                break;
            }
            level -= 1;
            if level == 0 {
                return;
            }
        }
    }
}

fn log_dets(maps: &[SmallMatrix]) -> Vec<f64> {
    maps.iter().map(|m| m.det().abs().ln()).collect()
}

fn linear_parts(ifs: &Ifs) -> Vec<SmallMatrix> {
    ifs.maps().iter().map(|m| *m.linear()).collect()
}

/// Log singular values of every word product of a fixed length, kept in
/// memory so the pressure can be evaluated at many `s` cheaply.
#[derive(Clone, Debug)]
pub struct WordSpectrum {
    dim: usize,
    depth: usize,
    log_sv: Vec<f64>,
}

impl WordSpectrum {
    pub fn new(ifs: &Ifs, n: usize, limits: &Limits) -> Result<Self> {
        check_depth(ifs, n, limits)?;
        let maps = linear_parts(ifs);
        let dets = log_dets(&maps);
        let d = ifs.dim();
        let branches: Vec<Vec<f64>> = (0..ifs.len())
            .into_par_iter()
            .map(|first| {
                let mut out = Vec::new();
                let mut buf = [0.0; MAX_DIM];
                visit_products(&maps, &dets, first, n, |p, ld| {
                    log_singular_values_into(p, ld, &mut buf[..d]);
                    out.extend_from_slice(&buf[..d]);
                });
                out
            })
            .collect();
        Ok(WordSpectrum {
            dim: d,
            depth: n,
            log_sv: branches.concat(),
        })
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn word_count(&self) -> usize {
        self.log_sv.len() / self.dim
    }

    /// `log Σ_{|w|=n} φ^s(A_w)`.
    pub fn log_sum(&self, s: f64) -> f64 {
        let d = self.dim;
        let partial: Vec<LogSum> = self
            .log_sv
            .par_chunks(EVAL_CHUNK * d)
            .map(|chunk| {
                let mut acc = LogSum::new();
                for w in chunk.chunks_exact(d) {
                    acc.push(log_svf_from_logs(w, s));
                }
                acc
            })
            .collect();
        let mut total = LogSum::new();
        for p in &partial {
            total.merge(p);
        }
        total.value()
    }

    pub fn pressure(&self, s: f64) -> f64 {
        self.log_sum(s) / self.depth as f64
    }
}

fn check_depth(ifs: &Ifs, n: usize, limits: &Limits) -> Result<u64> {
    ifs.ensure_valid()?;
    if n == 0 {
        return Err(Error::invalid("pressure depth must be at least 1"));
    }
    limits.check_enumeration(ifs.len(), n)
}

/// Streaming `log Σ_{|w|=n} φ^s(A_w)`; nothing is retained between calls.
pub fn log_phi_sum(ifs: &Ifs, s: f64, n: usize, limits: &Limits) -> Result<f64> {
    check_depth(ifs, n, limits)?;
    if s.is_nan() || s < 0.0 {
        return Err(Error::invalid(format!("s must be >= 0, got {s}")));
    }
    let maps = linear_parts(ifs);
    let dets = log_dets(&maps);
    let d = ifs.dim();
    let partial: Vec<LogSum> = (0..ifs.len())
        .into_par_iter()
        .map(|first| {
            let mut acc = LogSum::new();
            let mut buf = [0.0; MAX_DIM];
            visit_products(&maps, &dets, first, n, |p, ld| {
                log_singular_values_into(p, ld, &mut buf[..d]);
                acc.push(log_svf_from_logs(&buf[..d], s));
            });
            acc
        })
        .collect();
    let mut total = LogSum::new();
    for p in &partial {
        total.merge(p);
    }
    Ok(total.value())
}

/// `P_n(s) = (1/n) log Σ_{|w|=n} φ^s(A_w)` with default limits.
pub fn pressure_approx(ifs: &Ifs, s: f64, n: usize) -> Result<f64> {
    pressure_approx_with_limits(ifs, s, n, &Limits::default())
}

pub fn pressure_approx_with_limits(ifs: &Ifs, s: f64, n: usize, limits: &Limits) -> Result<f64> {
    Ok(log_phi_sum(ifs, s, n, limits)? / n as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PressureCurve {
    pub depth: usize,
    /// `(s, P_n(s))`, sorted by `s`.
    pub samples: Vec<(f64, f64)>,
    /// `s_n`, the zero of `P_n`.
    pub zero: f64,
    /// `P_n(2d) > 0`: the zero was not bracketed and `zero` is clamped to `2d`.
    pub clamped: bool,
    /// The zero lies above the ambient dimension, where `φ^s` is the
    /// determinant continuation.
    pub above_ambient: bool,
}

enum PressureSource<'a> {
    Cached(WordSpectrum),
    Streaming(&'a Ifs, Limits),
}

impl PressureSource<'_> {
    fn eval(&self, n: usize, s: f64) -> Result<f64> {
        match self {
            PressureSource::Cached(spec) => Ok(spec.pressure(s)),
            PressureSource::Streaming(ifs, limits) => {
                pressure_approx_with_limits(ifs, s, n, limits)
            }
        }
    }
}

/// The zero `s_n` of `P_n` on `[0, 2d]` with default limits.
pub fn affinity_dimension(ifs: &Ifs, n: usize, tol: f64) -> Result<PressureCurve> {
    affinity_dimension_with_limits(ifs, n, tol, &Limits::default())
}

pub fn affinity_dimension_with_limits(
    ifs: &Ifs,
    n: usize,
    tol: f64,
    limits: &Limits,
) -> Result<PressureCurve> {
    if tol.is_nan() || tol < 1e-12 {
        return Err(Error::invalid(format!(
            "bisection tolerance must be >= 1e-12, got {tol}"
        )));
    }
    let words = check_depth(ifs, n, limits)?;
    let source = if words <= SPECTRUM_CACHE_WORDS {
        PressureSource::Cached(WordSpectrum::new(ifs, n, limits)?)
    } else {
        PressureSource::Streaming(ifs, *limits)
    };
    let d = ifs.dim() as f64;
    let mut samples = Vec::new();
    let mut eval = |s: f64| -> Result<f64> {
        let p = source.eval(n, s)?;
        samples.push((s, p));
        Ok(p)
    };

    let (mut lo, mut hi) = (0.0, 2.0 * d);
    let p_lo = eval(lo)?;
    let p_hi = eval(hi)?;
    let (zero, clamped) = if p_lo <= 0.0 {
        // only a single map gives P_n(0) = log 1 = 0
        (0.0, false)
    } else if p_hi > 0.0 {
        (hi, true)
    } else {
        while hi - lo > tol {
            let mid = 0.5 * (lo + hi);
            if eval(mid)? > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        (0.5 * (lo + hi), false)
    };
    eval(zero)?;
    samples.sort_by(|a, b| a.0.total_cmp(&b.0));
    samples.dedup_by(|a, b| a.0 == b.0);
    Ok(PressureCurve {
        depth: n,
        samples,
        zero,
        clamped,
        above_ambient: zero > d,
    })
}

/// `P_n` on an evenly spaced grid over `[0, 2d]`, for export and plotting.
pub fn pressure_grid(ifs: &Ifs, n: usize, points: usize, limits: &Limits) -> Result<Vec<(f64, f64)>> {
    let spec = WordSpectrum::new(ifs, n, limits)?;
    let top = 2.0 * ifs.dim() as f64;
    let steps = points.max(2) - 1;
    Ok((0..=steps)
        .map(|j| {
            let s = top * j as f64 / steps as f64;
            (s, spec.pressure(s))
        })
        .collect())
}
