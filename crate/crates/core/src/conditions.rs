//! Checkers for sufficient conditions in the plane.
//!
//! * Open set condition for one candidate open rectangle `V`: every image
//!   `f_i(V)` must stay inside `V` and distinct images must have disjoint
//!   interiors. A failure only says this `V` does not work.
//! * Hueter–Lalley hypotheses as formalized here: the shape bound
//!   `α₁(A_i)² < α₂(A_i)`, strict positivity of every `A_i` (the closed
//!   first quadrant goes into the open one), and pairwise disjoint image
//!   cones. The separation of the ellipses is not quantified and not
//!   checked.
//!
//! Margins are signed so that positive means "satisfied with room to
//! spare". Values within [`TIE_TOL`] of the threshold are ties.

use std::fmt;
use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ifs::{AffineMap, Ifs};
use crate::linalg::{singular_values, SmallVector};

/// Margins within this distance of zero are treated as ties.
pub const TIE_TOL: f64 = 1e-12;
/// OSC violations no larger than this are reported as inconclusive.
pub const INCONCLUSIVE_BAND: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "FAIL",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Finding {
    /// Which sub-check produced this finding.
    pub check: &'static str,
    /// One map index, or a pair for pairwise checks.
    pub maps: Vec<usize>,
    pub margin: f64,
    /// Interior overlap depth for pairwise disjointness checks.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub penetration: Option<f64>,
    pub status: Verdict,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConditionReport {
    pub condition: String,
    pub verdict: Verdict,
    pub findings: Vec<Finding>,
    /// Index into `findings` of the deciding finding: the first failure,
    /// else the first inconclusive one, else the tightest pass.
    pub witness: usize,
    pub note: String,
}

impl ConditionReport {
    fn assemble(condition: String, findings: Vec<Finding>, note: String) -> Self {
        let pick = |v: Verdict| findings.iter().position(|f| f.status == v);
        let (verdict, witness) = if let Some(i) = pick(Verdict::Fail) {
            (Verdict::Fail, i)
        } else if let Some(i) = pick(Verdict::Inconclusive) {
            (Verdict::Inconclusive, i)
        } else {
            let tightest = findings
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.margin.total_cmp(&b.1.margin))
                .map(|(i, _)| i)
                .unwrap_or(0);
            (Verdict::Pass, tightest)
        };
        ConditionReport {
            condition,
            verdict,
            findings,
            witness,
            note,
        }
    }

    pub fn witness(&self) -> Option<&Finding> {
        self.findings.get(self.witness)
    }

    /// Findings of one sub-check.
    pub fn findings_for<'a>(&'a self, check: &'a str) -> impl Iterator<Item = &'a Finding> + 'a {
        self.findings.iter().filter(move |f| f.check == check)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{}: {}", self.condition, self.verdict);
        if let Some(w) = self.witness() {
            let _ = writeln!(out, "  witness: {} maps {:?}, margin {}", w.check, w.maps, w.margin);
        }
        for f in &self.findings {
            let _ = write!(out, "  [{}] {} maps {:?}: margin {}", f.status, f.check, f.maps, f.margin);
            if let Some(p) = f.penetration {
                let _ = write!(out, ", penetration {p}");
            }
            if !f.detail.is_empty() {
                let _ = write!(out, " ({})", f.detail);
            }
            out.push('\n');
        }
        let _ = writeln!(out, "  note: {}", self.note);
        out
    }
}

/// Axis-aligned open rectangle `(x0, x1) × (y0, y1)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Result<Self> {
        let finite = [x0, y0, x1, y1].iter().all(|v| v.is_finite());
        if !finite || x1 <= x0 || y1 <= y0 {
            return Err(Error::invalid(format!(
                "degenerate rectangle ({x0}, {y0}, {x1}, {y1})"
            )));
        }
        Ok(Rect { x0, y0, x1, y1 })
    }

    pub fn unit() -> Self {
        Rect {
            x0: 0.0,
            y0: 0.0,
            x1: 1.0,
            y1: 1.0,
        }
    }

    pub fn corners(&self) -> [[f64; 2]; 4] {
        [
            [self.x0, self.y0],
            [self.x1, self.y0],
            [self.x1, self.y1],
            [self.x0, self.y1],
        ]
    }

    /// Smallest distance from `p` to the boundary, negative outside.
    fn slack(&self, p: [f64; 2]) -> f64 {
        (p[0] - self.x0)
            .min(self.x1 - p[0])
            .min(p[1] - self.y0)
            .min(self.y1 - p[1])
    }
}

/// Vertices of `f(rect)`, in order around the parallelogram.
pub fn image_parallelogram(f: &AffineMap, rect: &Rect) -> [[f64; 2]; 4] {
    rect.corners().map(|c| {
        let v = f.apply(&SmallVector::from_slice(&c).expect("planar"));
        [v[0], v[1]]
    })
}

/// Separating-axis comparison of two convex polygons over the edge normals
/// of both. Returns the largest projected gap: positive when some axis
/// separates them, zero when they only touch, and minus the smallest
/// overlap depth when their interiors intersect.
pub fn sat_gap(a: &[[f64; 2]], b: &[[f64; 2]]) -> f64 {
    let mut best = f64::NEG_INFINITY;
    for poly in [a, b] {
        for e in 0..poly.len() {
            let (p, q) = (poly[e], poly[(e + 1) % poly.len()]);
            let (nx, ny) = (q[1] - p[1], p[0] - q[0]);
            let len = nx.hypot(ny);
            if len == 0.0 {
                continue;
            }
            let project = |pts: &[[f64; 2]]| {
                pts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                    let t = (v[0] * nx + v[1] * ny) / len;
                    (lo.min(t), hi.max(t))
                })
            };
            let (a_lo, a_hi) = project(a);
            let (b_lo, b_hi) = project(b);
            best = best.max((b_lo - a_hi).max(a_lo - b_hi));
        }
    }
    best
}

fn require_planar(ifs: &Ifs) -> Result<()> {
    if ifs.dim() != 2 {
        return Err(Error::UnsupportedDimension(ifs.dim()));
    }
    Ok(())
}

/// Status for a quantity that must be `≥ 0` (touching allowed), with a
/// grey zone below.
fn closed_status(value: f64) -> Verdict {
    if value >= -TIE_TOL {
        Verdict::Pass
    } else if value >= -INCONCLUSIVE_BAND {
        Verdict::Inconclusive
    } else {
        Verdict::Fail
    }
}

/// Status for a quantity that must be strictly positive.
fn strict_status(value: f64) -> Verdict {
    if value > TIE_TOL {
        Verdict::Pass
    } else if value < -TIE_TOL {
        Verdict::Fail
    } else {
        Verdict::Inconclusive
    }
}

/// Open set condition for the candidate `V = rect`.
pub fn check_osc_rectangle(ifs: &Ifs, rect: &Rect) -> Result<ConditionReport> {
    require_planar(ifs)?;
    let images: Vec<[[f64; 2]; 4]> = ifs
        .maps()
        .iter()
        .map(|f| image_parallelogram(f, rect))
        .collect();

    let mut findings = Vec::new();
    for (i, img) in images.iter().enumerate() {
        let margin = img.iter().map(|&v| rect.slack(v)).fold(f64::INFINITY, f64::min);
        findings.push(Finding {
            check: "containment",
            maps: vec![i],
            margin,
            penetration: None,
            status: closed_status(margin),
            detail: "f_i(V) inside V; smallest vertex distance to the boundary".into(),
        });
    }
    for i in 0..images.len() {
        for j in (i + 1)..images.len() {
            let gap = sat_gap(&images[i], &images[j]);
            let penetration = (-gap).max(0.0);
            findings.push(Finding {
                check: "disjointness",
                maps: vec![i, j],
                margin: gap.max(0.0),
                penetration: Some(penetration),
                status: closed_status(-penetration),
                detail: if gap >= 0.0 {
                    "interiors separated".into()
                } else {
                    "interiors overlap".into()
                },
            });
        }
    }
    let condition = format!(
        "open set condition on V = ({}, {}) x ({}, {})",
        rect.x0, rect.x1, rect.y0, rect.y1
    );
    let note = "verdict concerns this candidate V only; a failure does not show that no open set works"
        .to_string();
    Ok(ConditionReport::assemble(condition, findings, note))
}

/// Angle interval `[lo, hi]` of the cone spanned by the columns of `A`,
/// taking the arc shorter than π.
fn cone_interval(f: &AffineMap) -> (f64, f64) {
    let a = f.linear();
    let t1 = a.get(1, 0).atan2(a.get(0, 0));
    let t2 = a.get(1, 1).atan2(a.get(0, 1));
    let (mut lo, mut hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
    if hi - lo > std::f64::consts::PI {
        (lo, hi) = (hi, lo + std::f64::consts::TAU);
    }
    (lo, hi)
}

/// Angular gap between two arcs on the circle; negative is overlap depth.
fn arc_gap(a: (f64, f64), b: (f64, f64)) -> f64 {
    [-std::f64::consts::TAU, 0.0, std::f64::consts::TAU]
        .iter()
        .map(|t| (b.0 + t - a.1).max(a.0 - (b.1 + t)))
        .fold(f64::INFINITY, f64::min)
}

/// Hueter–Lalley hypotheses as formalized in the module docs.
pub fn check_hueter_lalley(ifs: &Ifs) -> Result<ConditionReport> {
    require_planar(ifs)?;
    let mut findings = Vec::new();
    for (i, f) in ifs.maps().iter().enumerate() {
        let sv = singular_values(f.linear())?;
        let (a1, a2) = (sv.values()[0], sv.values()[1]);
        let margin = a2 - a1 * a1;
        findings.push(Finding {
            check: "shape",
            maps: vec![i],
            margin,
            penetration: None,
            status: strict_status(margin),
            detail: format!("alpha1^2 = {}, alpha2 = {}", a1 * a1, a2),
        });
    }
    for (i, f) in ifs.maps().iter().enumerate() {
        let a = f.linear();
        let mut worst = (f64::INFINITY, 0, 0);
        for r in 0..2 {
            for c in 0..2 {
                if a.get(r, c) < worst.0 {
                    worst = (a.get(r, c), r, c);
                }
            }
        }
        findings.push(Finding {
            check: "cone",
            maps: vec![i],
            margin: worst.0,
            penetration: None,
            status: strict_status(worst.0),
            detail: format!("smallest entry A[{}][{}]", worst.1, worst.2),
        });
    }
    let arcs: Vec<(f64, f64)> = ifs.maps().iter().map(cone_interval).collect();
    for i in 0..arcs.len() {
        for j in (i + 1)..arcs.len() {
            let gap = arc_gap(arcs[i], arcs[j]);
            findings.push(Finding {
                check: "cone_disjointness",
                maps: vec![i, j],
                margin: gap,
                penetration: None,
                status: strict_status(gap),
                detail: format!(
                    "image cones [{:.6}, {:.6}] and [{:.6}, {:.6}] rad",
                    arcs[i].0, arcs[i].1, arcs[j].0, arcs[j].1
                ),
            });
        }
    }
    let note = "hypotheses as formalized: ellipse separation is not checked and no dimension \
                conclusion is claimed"
        .to_string();
    Ok(ConditionReport::assemble(
        "Hueter-Lalley hypotheses-as-formalized".to_string(),
        findings,
        note,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::carpets::{carpet_to_ifs, CarpetSpec};
    use crate::ifs::{planar_map, sierpinski};
    use crate::linalg::SmallMatrix;

    #[test]
    fn sierpinski_on_unit_square_overlaps() {
        // the top image (0.25, 0.75) x (√3/4, √3/4 + 0.5) dips into (0, 0.5)²
        let r = check_osc_rectangle(&sierpinski(), &Rect::unit()).unwrap();
        assert_eq!(r.verdict, Verdict::Fail, "{}", r.to_text());
        let w = r.witness().unwrap();
        assert_eq!(w.maps, vec![0, 2]);
        let depth = 0.5 - 0.25 * 3f64.sqrt();
        assert!((w.penetration.unwrap() - depth).abs() < 1e-15);
        assert!(r.to_text().contains("this candidate V only"));
    }

    #[test]
    fn sierpinski_passes_on_triangle_bounding_box() {
        let h = 0.5 * 3f64.sqrt();
        let r = check_osc_rectangle(&sierpinski(), &Rect::new(0.0, 0.0, 1.0, h).unwrap()).unwrap();
        assert_eq!(r.verdict, Verdict::Pass, "{}", r.to_text());
        assert!(r.findings_for("containment").all(|f| f.margin >= -1e-15));
        assert!(r.findings_for("disjointness").all(|f| f.penetration.unwrap() <= 1e-15));
    }

    #[test]
    fn identical_maps_fail_disjointness() {
        let m = planar_map([[0.5, 0.0], [0.0, 0.5]], [0.25, 0.25]);
        let ifs = Ifs::new(vec![m, m]).unwrap();
        let r = check_osc_rectangle(&ifs, &Rect::unit()).unwrap();
        assert_eq!(r.verdict, Verdict::Fail);
        let w = r.witness().unwrap();
        assert_eq!(w.check, "disjointness");
        assert_eq!(w.maps, vec![0, 1]);
        assert_eq!(w.margin, 0.0);
        assert!((w.penetration.unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn carpets_pass_on_unit_square() {
        let spec = CarpetSpec::new(3, 4, [(0, 0), (1, 1), (2, 3), (2, 2), (0, 3)]).unwrap();
        let r = check_osc_rectangle(&carpet_to_ifs(&spec), &Rect::unit()).unwrap();
        assert_eq!(r.verdict, Verdict::Pass, "{}", r.to_text());
    }

    #[test]
    fn escaping_image_fails_containment() {
        let ifs = Ifs::new(vec![planar_map([[0.5, 0.0], [0.0, 0.5]], [0.7, 0.0])]).unwrap();
        let r = check_osc_rectangle(&ifs, &Rect::unit()).unwrap();
        assert_eq!(r.verdict, Verdict::Fail);
        assert_eq!(r.witness().unwrap().check, "containment");
        assert!((r.witness().unwrap().margin + 0.2).abs() < 1e-15);
    }

    #[test]
    fn tiny_violation_is_inconclusive() {
        let ifs = Ifs::new(vec![planar_map([[0.5, 0.0], [0.0, 0.5]], [0.5 + 1e-10, 0.0])]).unwrap();
        let r = check_osc_rectangle(&ifs, &Rect::unit()).unwrap();
        assert_eq!(r.verdict, Verdict::Inconclusive);
    }

    #[test]
    fn osc_translation_invariant() {
        let s = sierpinski();
        let shift = [0.37, -1.25];
        let moved = Ifs::new(
            s.maps()
                .iter()
                .map(|m| {
                    // conjugate by x ↦ x + shift: a' = a + shift − A shift
                    let t = *m.translation()
                        + SmallVector::from_slice(&shift).unwrap()
                        - m.linear().mul_vec(&SmallVector::from_slice(&shift).unwrap());
                    AffineMap::new(*m.linear(), t).unwrap()
                })
                .collect(),
        )
        .unwrap();
        let a = check_osc_rectangle(&s, &Rect::unit()).unwrap();
        let b = check_osc_rectangle(&moved, &Rect::new(0.37, -1.25, 1.37, -0.25).unwrap()).unwrap();
        assert_eq!(a.verdict, b.verdict);
        for (x, y) in a.findings.iter().zip(&b.findings) {
            assert!((x.margin - y.margin).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_non_planar_and_bad_rect() {
        let m3 = AffineMap::new(SmallMatrix::diag(&[0.5; 3]).unwrap(), SmallVector::zeros(3)).unwrap();
        let ifs = Ifs::new(vec![m3]).unwrap();
        assert!(matches!(
            check_osc_rectangle(&ifs, &Rect::unit()),
            Err(Error::UnsupportedDimension(3))
        ));
        assert!(matches!(check_hueter_lalley(&ifs), Err(Error::UnsupportedDimension(3))));
        assert!(Rect::new(0.0, 0.0, 0.0, 1.0).is_err());
        assert!(Rect::new(0.0, 0.0, f64::NAN, 1.0).is_err());
    }

    #[test]
    fn diagonal_maps_fail_cone_disjointness() {
        let d = [[0.4, 0.0], [0.0, 0.3]];
        let ifs = Ifs::new(vec![planar_map(d, [0.0, 0.0]), planar_map(d, [0.5, 0.5])]).unwrap();
        let r = check_hueter_lalley(&ifs).unwrap();
        assert_eq!(r.verdict, Verdict::Fail);
        assert!(r.findings_for("shape").all(|f| f.status == Verdict::Pass));
        let c: Vec<_> = r.findings_for("cone_disjointness").collect();
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].status, Verdict::Fail);
        assert!((c[0].margin + std::f64::consts::FRAC_PI_2).abs() < 1e-15);
    }

    #[test]
    fn negative_entry_fails_cone_containment() {
        let ifs = Ifs::new(vec![planar_map([[0.3, -0.05], [0.05, 0.2]], [0.0, 0.0])]).unwrap();
        let r = check_hueter_lalley(&ifs).unwrap();
        let cone: Vec<_> = r.findings_for("cone").collect();
        assert_eq!(cone[0].status, Verdict::Fail);
        assert_eq!(cone[0].margin, -0.05);
        assert!(cone[0].detail.contains("A[0][1]"));
        assert_eq!(r.verdict, Verdict::Fail);
    }

    #[test]
    fn spec_pair_overlaps() {
        // cones [9.46°, 75.96°] and [56.31°, 85.43°] overlap
        let ifs = Ifs::new(vec![
            planar_map([[0.30, 0.05], [0.05, 0.20]], [0.0, 0.0]),
            planar_map([[0.20, 0.02], [0.30, 0.25]], [0.5, 0.5]),
        ])
        .unwrap();
        let r = check_hueter_lalley(&ifs).unwrap();
        let c: Vec<_> = r.findings_for("cone_disjointness").collect();
        assert_eq!(c[0].status, Verdict::Fail);
        assert!(r.findings_for("cone").all(|f| f.status == Verdict::Pass));
        // α₂ − α₁² < 0 for the second map
        let shape: Vec<_> = r.findings_for("shape").map(|f| f.status).collect();
        assert_eq!(shape, vec![Verdict::Pass, Verdict::Fail]);
        let cones: Vec<_> = ifs.maps().iter().map(|m| cols(m.linear())).collect();
        assert!(sampled_cone_overlap(cones[0], cones[1], 10_000));
    }

    #[test]
    fn separated_cones_pass() {
        // one map squeezes the quadrant near the x axis, the other near y
        let ifs = Ifs::new(vec![
            planar_map([[0.16, 0.12], [0.016, 0.08]], [0.0, 0.0]),
            planar_map([[0.08, 0.016], [0.12, 0.16]], [0.5, 0.5]),
        ])
        .unwrap();
        let r = check_hueter_lalley(&ifs).unwrap();
        assert_eq!(r.verdict, Verdict::Pass, "{}", r.to_text());
        let json = r.to_json();
        assert!(json.contains("\"verdict\": \"pass\""));
        assert!(r.to_text().contains("Hueter-Lalley hypotheses-as-formalized: pass"));
    }

    fn cols(a: &SmallMatrix) -> [[f64; 2]; 2] {
        [[a.get(0, 0), a.get(1, 0)], [a.get(0, 1), a.get(1, 1)]]
    }

    fn cross(u: [f64; 2], v: [f64; 2]) -> f64 {
        u[0] * v[1] - u[1] * v[0]
    }

    /// Whether direction `u` lies strictly inside the cone spanned by `c`.
    fn in_open_cone(c: [[f64; 2]; 2], u: [f64; 2]) -> bool {
        let orient = cross(c[0], c[1]).signum();
        orient * cross(c[0], u) > 0.0 && orient * cross(u, c[1]) > 0.0
    }

    /// Whether some of `n` evenly spaced directions lies in both open cones.
    fn sampled_cone_overlap(a: [[f64; 2]; 2], b: [[f64; 2]; 2], n: usize) -> bool {
        (0..n).any(|k| {
            let t = std::f64::consts::TAU * (k as f64 + 0.5) / n as f64;
            let u = [t.cos(), t.sin()];
            in_open_cone(a, u) && in_open_cone(b, u)
        })
    }

    proptest::proptest! {
        #[test]
        fn cone_verdict_matches_direction_sampling(
            e in proptest::collection::vec(0.001f64..0.3, 8),
        ) {
            let a = [[e[0], e[1]], [e[2], e[3]]];
            let b = [[e[4], e[5]], [e[6], e[7]]];
            let ifs = Ifs::new(vec![planar_map(a, [0.0, 0.0]), planar_map(b, [0.5, 0.5])]).unwrap();
            let r = check_hueter_lalley(&ifs).unwrap();
            let f = r.findings_for("cone_disjointness").next().unwrap();
            // the grid step is TAU / 10⁴; skip ties the grid cannot resolve
            proptest::prop_assume!(f.margin.abs() > 2e-3);
            let sampled = sampled_cone_overlap(cols(ifs.maps()[0].linear()), cols(ifs.maps()[1].linear()), 10_000);
            proptest::prop_assert_eq!(f.status == Verdict::Fail, sampled);
        }
    }

    #[test]
    fn arc_gap_wraps() {
        assert!((arc_gap((0.1, 0.2), (0.3, 0.4)) - 0.1).abs() < 1e-15);
        assert!(arc_gap((0.1, 0.3), (0.2, 0.4)) < 0.0);
        // arcs either side of ±π
        let a = (3.0, 3.1);
        let b = (-3.1 + std::f64::consts::TAU, -3.0 + std::f64::consts::TAU);
        assert!(arc_gap(a, b) > 0.0);
    }
}
