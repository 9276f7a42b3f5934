//! Covering machinery: stopping sets `Z(δ)`, the cylinder ellipses
//! `f_w(B(0,R))`, and covers of a planar ellipse by equal balls.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::ifs::{bounding_radius, compose, Ifs, Limits, Word};
use crate::linalg::{left_singular_axes, SmallMatrix, SmallVector};

/// Prefix-free, complete set of words `w` with `λ_w < δ ≤ λ_{w⁻}`, where
/// `w⁻` drops the last letter and `λ_w` is the product of the map ratios.
#[derive(Clone, Debug, PartialEq)]
pub struct StoppingSet {
    pub delta: f64,
    pub words: Vec<Word>,
}

impl StoppingSet {
    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn max_word_len(&self) -> usize {
        self.words.iter().map(Word::len).max().unwrap_or(0)
    }
}

/// `Z(δ)` with the default word-length cap.
pub fn stopping_set(ifs: &Ifs, delta: f64) -> Result<StoppingSet> {
    stopping_set_with_limits(ifs, delta, &Limits::default())
}

/// Depth-first expansion that descends while the running ratio product is
/// still `≥ δ`. Products are tracked as sums of logs.
pub fn stopping_set_with_limits(ifs: &Ifs, delta: f64, limits: &Limits) -> Result<StoppingSet> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::invalid(format!("delta must lie in (0, 1), got {delta}")));
    }
    ifs.ensure_valid()?;
    let log_ratios: Vec<f64> = ifs.ratios().iter().map(|r| r.ln()).collect();
    let log_delta = delta.ln();
    let cap = limits.max_word_len;

    let branches: Vec<Result<Vec<Word>>> = (0..ifs.len())
        .into_par_iter()
        .map(|first| {
            let mut out = Vec::new();
            let mut prefix = vec![first];
            expand(&log_ratios, log_delta, cap, &mut prefix, log_ratios[first], &mut out)?;
            Ok(out)
        })
        .collect();
    let mut words = Vec::new();
    for b in branches {
        words.extend(b?);
    }
    Ok(StoppingSet { delta, words })
}

fn expand(
    log_ratios: &[f64],
    log_delta: f64,
    cap: usize,
    prefix: &mut Vec<usize>,
    log_prod: f64,
    out: &mut Vec<Word>,
) -> Result<()> {
    if log_prod < log_delta {
        out.push(Word::from(prefix.as_slice()));
        return Ok(());
    }
    if prefix.len() >= cap {
        return Err(Error::DepthCapReached { cap });
    }
    for (i, lr) in log_ratios.iter().enumerate() {
        prefix.push(i);
        expand(log_ratios, log_delta, cap, prefix, log_prod + lr, out)?;
        prefix.pop();
    }
    Ok(())
}

/// Ellipsoid `{center + Σ t_j semi_j axis_j : Σ t_j² ≤ 1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct Ellipse {
    pub center: SmallVector,
    /// Columns are orthonormal semi-axis directions, major first.
    pub axes: SmallMatrix,
    /// Sorted descending.
    pub semi_lengths: Vec<f64>,
}

impl Ellipse {
    pub fn ball(center: SmallVector, radius: f64) -> Self {
        let d = center.dim();
        Ellipse {
            center,
            axes: SmallMatrix::identity(d),
            semi_lengths: vec![radius; d],
        }
    }

    pub fn dim(&self) -> usize {
        self.center.dim()
    }

    pub fn major(&self) -> f64 {
        self.semi_lengths[0]
    }

    /// Angle of the major axis against the first coordinate axis (d = 2).
    pub fn angle(&self) -> f64 {
        self.axes.get(1, 0).atan2(self.axes.get(0, 0))
    }

    /// Coordinates of `p − center` in the axis frame.
    pub fn local(&self, p: &SmallVector) -> SmallVector {
        self.axes.transpose().mul_vec(&(*p - self.center))
    }

    pub fn from_local(&self, q: &SmallVector) -> SmallVector {
        self.axes.mul_vec(q) + self.center
    }

    /// `Σ (x_j / semi_j)²`; at most 1 inside the ellipse.
    pub fn gauge(&self, p: &SmallVector) -> f64 {
        let q = self.local(p);
        q.as_slice()
            .iter()
            .zip(&self.semi_lengths)
            .map(|(x, a)| (x / a) * (x / a))
            .sum()
    }

    /// Membership in the ellipse whose semi-axes are enlarged by `pad`.
    pub fn contains_padded(&self, p: &SmallVector, pad: f64) -> bool {
        let q = self.local(p);
        q.as_slice()
            .iter()
            .zip(&self.semi_lengths)
            .map(|(x, a)| (x / (a + pad)) * (x / (a + pad)))
            .sum::<f64>()
            <= 1.0
    }

    pub fn contains(&self, p: &SmallVector) -> bool {
        self.gauge(p) <= 1.0
    }
}

/// One ellipse `f_w(B(0,R))` per word: center `f_w(0)`, axes the left
/// singular vectors of `A_w`, semi-lengths `R·α_j(A_w)`.
///
/// Working in the original coordinates is the same as rescaling the system
/// to `R = 1` and mapping the unit-radius ellipses back.
pub fn cylinder_cover(ifs: &Ifs, words: &[Word], radius: f64) -> Result<Vec<Ellipse>> {
    let min_radius = bounding_radius(ifs)?;
    if radius.is_nan() || radius < min_radius * (1.0 - 1e-12) {
        return Err(Error::invalid(format!(
            "cover radius {radius} is below the bounding radius {min_radius}"
        )));
    }
    words
        .iter()
        .map(|w| {
            let f = compose(ifs, w)?;
            let (sv, axes) = left_singular_axes(f.linear())?;
            Ok(Ellipse {
                center: *f.translation(),
                axes,
                semi_lengths: sv.values().iter().map(|a| radius * a).collect(),
            })
        })
        .collect()
}

/// `Z(δ)` together with its cylinder ellipses at the bounding radius.
pub fn stopping_cover(ifs: &Ifs, delta: f64) -> Result<(StoppingSet, Vec<Ellipse>)> {
    let z = stopping_set(ifs, delta)?;
    let radius = bounding_radius(ifs)?;
    let cover = cylinder_cover(ifs, &z.words, radius)?;
    Ok((z, cover))
}

/// Centers of radius-`r` balls covering a planar ellipse.
///
/// Construction (in the ellipse frame, `x` along the major axis): sweep
/// `x` from `−α₁` to `α₁` in strips. A strip `[x₀, x₀ + w]` only meets the
/// ellipse where `|y| ≤ H`, `H` being the half-height at the strip point
/// closest to the minor axis, so a vertical stack of `m` balls centered at
/// `x₀ + w/2`, `y_k = −H + (2k+1)H/m` covers it whenever
/// `(w/2)² + (H/m)² ≤ r²`. Each strip takes the stack size maximizing
/// width per ball, with the widest admissible `w` for that size.
/// When `r ≥ α₁` the single center suffices.
pub fn ball_cover_from_ellipse(e: &Ellipse, r: f64) -> Result<Vec<SmallVector>> {
    if e.dim() != 2 {
        return Err(Error::UnsupportedDimension(e.dim()));
    }
    if r.is_nan() || r <= 0.0 {
        return Err(Error::invalid(format!("ball radius must be positive, got {r}")));
    }
    let (a1, a2) = (e.semi_lengths[0], e.semi_lengths[1]);
    if r >= a1 {
        return Ok(vec![e.center]);
    }
    let half_height = |x: f64| a2 * (1.0 - (x / a1) * (x / a1)).max(0.0).sqrt();
    let strip_height = |x0: f64, x1: f64| {
        if x0 <= 0.0 && x1 >= 0.0 {
            a2
        } else {
            half_height(x0.abs().min(x1.abs()))
        }
    };
    let max_stack = (2.0 * a2 / r).ceil() as usize + 2;

    let mut centers = Vec::new();
    let mut x0 = -a1;
    loop {
        let remaining = a1 - x0;
        let mut best: Option<(f64, f64, usize)> = None; // (w per ball, w, m)
        for m in 1..=max_stack {
            let fits = |w: f64| {
                let h = strip_height(x0, x0 + w) / m as f64;
                (0.5 * w) * (0.5 * w) + h * h <= r * r
            };
            let w = if fits(remaining) {
                remaining
            } else {
                let (mut lo, mut hi) = (0.0, remaining);
                for _ in 0..80 {
                    let mid = 0.5 * (lo + hi);
                    if fits(mid) {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                lo
            };
            if w <= 0.0 {
                continue;
            }
            let eff = w / m as f64;
            if best.is_none_or(|(b, _, _)| eff > b) {
                best = Some((eff, w, m));
            }
        }
        let (_, w, m) = best.expect("a tall enough stack always fits");
        let h = strip_height(x0, x0 + w);
        let xc = x0 + 0.5 * w;
        for k in 0..m {
            let yc = -h + (2 * k + 1) as f64 * h / m as f64;
            let local = SmallVector::from_slice(&[xc, yc]).expect("planar");
            centers.push(e.from_local(&local));
        }
        if w >= remaining {
            break;
        }
        x0 += w;
    }
    Ok(centers)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dimension::similarity_dimension;
    use crate::ifs::{planar_map, sierpinski};
    use crate::linalg::operator_norm;

    fn v2(x: f64, y: f64) -> SmallVector {
        SmallVector::from_slice(&[x, y]).unwrap()
    }

    fn w(v: &[usize]) -> Word {
        Word::from(v)
    }

    fn diag_system(ratios: &[f64]) -> Ifs {
        Ifs::new(
            ratios
                .iter()
                .map(|&r| planar_map([[r, 0.0], [0.0, r]], [0.0, 0.0]))
                .collect(),
        )
        .unwrap()
    }

    /// All words up to `max_len` satisfying the defining inequalities.
    fn brute_force(ratios: &[f64], delta: f64, max_len: usize) -> Vec<Word> {
        let k = ratios.len();
        let mut found = Vec::new();
        for len in 1..=max_len {
            for code in 0..k.pow(len as u32) {
                let mut digits = vec![0; len];
                let mut c = code;
                for pos in (0..len).rev() {
                    digits[pos] = c % k;
                    c /= k;
                }
                let full: f64 = digits.iter().map(|&i| ratios[i]).product();
                let parent: f64 = digits[..len - 1].iter().map(|&i| ratios[i]).product();
                if full < delta && delta <= parent {
                    found.push(Word::from(digits));
                }
            }
        }
        found.sort();
        found
    }

    #[test]
    fn uniform_ratios_give_uniform_depth() {
        let z = stopping_set(&diag_system(&[0.5, 0.5]), 0.3).unwrap();
        assert_eq!(z.words, vec![w(&[0, 0]), w(&[0, 1]), w(&[1, 0]), w(&[1, 1])]);
    }

    #[test]
    fn mixed_ratios_match_enumeration() {
        let z = stopping_set(&diag_system(&[0.5, 0.25]), 0.3).unwrap();
        assert_eq!(z.words, vec![w(&[0, 0]), w(&[0, 1]), w(&[1])]);
        assert_eq!(z.words, brute_force(&[0.5, 0.25], 0.3, 4));
    }

    #[test]
    fn delta_near_one_gives_single_letters() {
        let z = stopping_set(&sierpinski(), 0.999).unwrap();
        assert_eq!(z.words, vec![w(&[0]), w(&[1]), w(&[2])]);
    }

    #[test]
    fn rejects_bad_delta_and_hits_cap() {
        let s = sierpinski();
        assert!(stopping_set(&s, 0.0).is_err());
        assert!(stopping_set(&s, 1.0).is_err());
        let tight = Limits {
            max_word_len: 3,
            enumeration_budget: 1000,
        };
        assert!(matches!(
            stopping_set_with_limits(&s, 0.01, &tight),
            Err(Error::DepthCapReached { cap: 3 })
        ));
    }

    #[test]
    fn identity_and_count_bound() {
        let ratios = [0.5, 0.3, 0.2, 0.45];
        let ifs = diag_system(&ratios);
        let s = similarity_dimension(&ratios).unwrap();
        let min = 0.2f64;
        for delta in [0.5, 0.3, 0.1, 0.03] {
            let z = stopping_set(&ifs, delta).unwrap();
            let total: f64 = z
                .words
                .iter()
                .map(|w| w.indices().iter().map(|&i| ratios[i]).product::<f64>().powf(s))
                .sum();
            assert!((total - 1.0).abs() < 1e-10);
            assert!((z.len() as f64) <= min.powf(-s) * delta.powf(-s) + 0.5);
            assert_eq!(z.words, brute_force(&ratios, delta, z.max_word_len()));
        }
    }

    #[test]
    fn prefix_free_and_complete() {
        let ratios = [0.6, 0.25, 0.4];
        let z = stopping_set(&diag_system(&ratios), 0.05).unwrap();
        let max_len = z.max_word_len();
        for code in 0..3usize.pow(max_len as u32) {
            let mut digits = vec![0; max_len];
            let mut c = code;
            for pos in (0..max_len).rev() {
                digits[pos] = c % 3;
                c /= 3;
            }
            let long = Word::from(digits);
            let hits = z.words.iter().filter(|p| p.is_prefix_of(&long)).count();
            assert_eq!(hits, 1, "word {long}");
        }
    }

    #[test]
    fn empty_word_cover_is_the_ball() {
        let s = sierpinski();
        let e = cylinder_cover(&s, &[Word::empty()], 1.0).unwrap();
        assert_eq!(e.len(), 1);
        assert_eq!(e[0].semi_lengths, vec![1.0, 1.0]);
        assert_eq!(e[0].center, v2(0.0, 0.0));
        assert!(cylinder_cover(&s, &[], 1.0).unwrap().is_empty());
        assert!(cylinder_cover(&s, &[Word::empty()], 0.5).is_err());
    }

    #[test]
    fn diagonal_map_ellipse() {
        let ifs = Ifs::new(vec![planar_map([[0.5, 0.0], [0.0, 0.25]], [0.0, 0.0])]).unwrap();
        let e = cylinder_cover(&ifs, &[w(&[0])], 1.0).unwrap();
        assert_eq!(e[0].semi_lengths, vec![0.5, 0.25]);
        assert!(e[0].angle().abs() < 1e-15 || (e[0].angle().abs() - std::f64::consts::PI).abs() < 1e-15);
        assert_eq!(e[0].center, v2(0.0, 0.0));
    }

    #[test]
    fn ellipse_axes_follow_the_image() {
        let ifs = Ifs::new(vec![planar_map([[0.3, 0.2], [0.1, 0.4]], [0.2, -0.1])]).unwrap();
        let r = bounding_radius(&ifs).unwrap();
        let e = &cylinder_cover(&ifs, &[w(&[0])], r).unwrap()[0];
        // boundary of f(B(0,R)) has gauge exactly 1
        let f = &ifs.maps()[0];
        for j in 0..32 {
            let t = j as f64 * std::f64::consts::TAU / 32.0;
            let p = f.apply(&v2(r * t.cos(), r * t.sin()));
            assert!((e.gauge(&p) - 1.0).abs() < 1e-10);
        }
        assert!(e.major() <= r * operator_norm(f.linear()).unwrap() + 1e-15);
    }

    #[test]
    fn stopping_cover_major_axes_below_delta() {
        let s = sierpinski();
        for delta in [0.3, 0.1] {
            let (_, cover) = stopping_cover(&s, delta).unwrap();
            assert!(cover.iter().all(|e| e.major() <= delta));
        }
    }

    fn sample_ellipse(e: &Ellipse, n: usize) -> Vec<SmallVector> {
        // interior points on a sunflower spiral plus the boundary
        let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
        let mut pts = Vec::new();
        for i in 0..n / 2 {
            let rho = ((i as f64 + 0.5) / (n / 2) as f64).sqrt();
            let t = i as f64 * golden;
            pts.push(e.from_local(&v2(
                e.semi_lengths[0] * rho * t.cos(),
                e.semi_lengths[1] * rho * t.sin(),
            )));
        }
        for i in 0..n - n / 2 {
            let t = i as f64 * std::f64::consts::TAU / (n - n / 2) as f64;
            pts.push(e.from_local(&v2(
                e.semi_lengths[0] * t.cos(),
                e.semi_lengths[1] * t.sin(),
            )));
        }
        pts
    }

    fn covered(centers: &[SmallVector], p: &SmallVector, r: f64) -> bool {
        centers.iter().any(|c| (*p - *c).norm() <= r + 1e-12)
    }

    fn tilted(a1: f64, a2: f64, angle: f64, cx: f64, cy: f64) -> Ellipse {
        Ellipse {
            center: v2(cx, cy),
            axes: SmallMatrix::rotation(angle),
            semi_lengths: vec![a1, a2],
        }
    }

    #[test]
    fn ball_cover_examples() {
        let circle = tilted(0.2, 0.2, 0.0, 0.3, 0.1);
        assert_eq!(ball_cover_from_ellipse(&circle, 0.2).unwrap(), vec![v2(0.3, 0.1)]);

        let e = tilted(0.4, 0.1, 0.7, -0.2, 0.5);
        assert_eq!(ball_cover_from_ellipse(&e, 0.5).unwrap().len(), 1);

        let centers = ball_cover_from_ellipse(&e, 0.1).unwrap();
        assert_eq!(centers.len(), 9);
        for p in sample_ellipse(&e, 500) {
            assert!(covered(&centers, &p, 0.1));
        }
    }

    #[test]
    fn ball_cover_errors() {
        let e = tilted(0.4, 0.1, 0.0, 0.0, 0.0);
        assert!(ball_cover_from_ellipse(&e, 0.0).is_err());
        assert!(ball_cover_from_ellipse(&e, -1.0).is_err());
        let e3 = Ellipse::ball(SmallVector::zeros(3), 1.0);
        assert!(matches!(
            ball_cover_from_ellipse(&e3, 0.5),
            Err(Error::UnsupportedDimension(3))
        ));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn ball_cover_covers(
                a1 in 0.05f64..1.0,
                ratio in 0.02f64..1.0,
                r_frac in 0.05f64..1.2,
                angle in 0.0f64..6.3,
            ) {
                let a2 = a1 * ratio;
                let r = a1 * r_frac;
                let e = tilted(a1, a2, angle, 0.1, -0.2);
                let centers = ball_cover_from_ellipse(&e, r).unwrap();
                for p in sample_ellipse(&e, 500) {
                    prop_assert!(covered(&centers, &p, r));
                }
                // never worse than a square grid over the bounding box
                let grid = ((2.0 * a1) / (r * 2f64.sqrt())).ceil() * ((2.0 * a2) / (r * 2f64.sqrt())).ceil();
                prop_assert!(centers.len() as f64 <= grid.max(1.0) + 2.0);
            }
        }
    }
}
