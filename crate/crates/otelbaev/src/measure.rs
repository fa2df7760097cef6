//! Non-negative Radon measures on the line with finite atomic part and
//! compactly supported piecewise-constant density.
//!
//! Every interval-mass query on this class is exact: the cumulative function
//! is piecewise linear with jumps at atom positions, so masses are finite sums
//! of `value * overlap_length` terms plus atom masses. Endpoint inclusion is
//! controlled per query through [`IntervalSpec`].

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A point mass `mass * delta_{position}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    #[serde(rename = "x")]
    pub position: f64,
    pub mass: f64,
}

/// A constant-density stretch: density `value` per unit length on `[left, right)`.
///
/// The half-open convention is internal bookkeeping only; single points carry
/// no density mass, so queries are unaffected.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensitySegment {
    #[serde(rename = "from")]
    pub left: f64,
    #[serde(rename = "to")]
    pub right: f64,
    pub value: f64,
}

/// A finite non-negative measure: sorted distinct atoms plus sorted disjoint
/// positive-density segments. Immutable after construction; queries are pure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Measure {
    atoms: Vec<Atom>,
    density: Vec<DensitySegment>,
}

/// Interval with per-endpoint open/closed control.
///
/// `lo = hi` with both endpoints closed denotes the single point `{lo}`;
/// any other degenerate combination is the empty set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntervalSpec {
    pub lo: f64,
    pub hi: f64,
    pub lo_closed: bool,
    pub hi_closed: bool,
}

impl IntervalSpec {
    pub fn closed(lo: f64, hi: f64) -> Self {
        IntervalSpec { lo, hi, lo_closed: true, hi_closed: true }
    }

    /// `[lo, hi)`
    pub fn half_open(lo: f64, hi: f64) -> Self {
        IntervalSpec { lo, hi, lo_closed: true, hi_closed: false }
    }

    /// `(lo, hi]`
    pub fn open_closed(lo: f64, hi: f64) -> Self {
        IntervalSpec { lo, hi, lo_closed: false, hi_closed: true }
    }

    pub fn open(lo: f64, hi: f64) -> Self {
        IntervalSpec { lo, hi, lo_closed: false, hi_closed: false }
    }

    /// Window of width `d` centered at `x`.
    pub fn centered(x: f64, d: f64) -> Self {
        IntervalSpec::closed(x - d / 2.0, x + d / 2.0)
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum BuildError {
    #[error("atom at {position} has non-positive mass {mass}")]
    NonPositiveMass { position: f64, mass: f64 },
    #[error("density segment [{left}, {right}] has negative value {value}")]
    NegativeDensity { left: f64, right: f64, value: f64 },
    #[error("density segment [{left}, {right}] is not an interval")]
    BadSegment { left: f64, right: f64 },
    #[error("non-finite coordinate or weight: {0}")]
    NonFinite(f64),
}

/// Builds a normalized [`Measure`] from raw atom and density lists.
///
/// Atoms sharing a position are merged by mass addition. Density segments may
/// be given unsorted and overlapping; overlaps add their values. Zero-value
/// stretches are dropped and adjacent stretches of equal value are fused, so
/// equal measures have identical representations.
pub fn build_measure(
    atoms: &[(f64, f64)],
    density: &[(f64, f64, f64)],
) -> Result<Measure, BuildError> {
    for &(p, m) in atoms {
        if !p.is_finite() {
            return Err(BuildError::NonFinite(p));
        }
        if !m.is_finite() {
            return Err(BuildError::NonFinite(m));
        }
        if m <= 0.0 {
            return Err(BuildError::NonPositiveMass { position: p, mass: m });
        }
    }
    for &(l, r, v) in density {
        if !l.is_finite() || !r.is_finite() || !v.is_finite() {
            return Err(BuildError::NonFinite(if !l.is_finite() {
                l
            } else if !r.is_finite() {
                r
            } else {
                v
            }));
        }
        if v < 0.0 {
            return Err(BuildError::NegativeDensity { left: l, right: r, value: v });
        }
        if l > r {
            return Err(BuildError::BadSegment { left: l, right: r });
        }
    }

    let mut sorted: Vec<Atom> = atoms
        .iter()
        .map(|&(position, mass)| Atom { position, mass })
        .collect();
    sorted.sort_by(|a, b| a.position.total_cmp(&b.position));
    let mut merged: Vec<Atom> = Vec::with_capacity(sorted.len());
    for a in sorted {
        match merged.last_mut() {
            Some(last) if last.position == a.position => last.mass += a.mass,
            _ => merged.push(a),
        }
    }

    // Sweep the segment endpoints, accumulating the density value active on
    // each elementary interval; overlapping inputs add up.
    let mut events: Vec<(f64, f64)> = Vec::with_capacity(2 * density.len());
    for &(l, r, v) in density {
        if v > 0.0 && l < r {
            events.push((l, v));
            events.push((r, -v));
        }
    }
    events.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut segments: Vec<DensitySegment> = Vec::new();
    let mut active = 0.0;
    let mut i = 0;
    while i < events.len() {
        let x = events[i].0;
        let mut delta = 0.0;
        while i < events.len() && events[i].0 == x {
            delta += events[i].1;
            i += 1;
        }
        let next = events.get(i).map(|e| e.0);
        active += delta;
        if let Some(nx) = next {
            let value = if active.abs() < 1e-15 { 0.0 } else { active };
            if value > 0.0 && nx > x {
                match segments.last_mut() {
                    Some(last) if last.right == x && last.value == value => last.right = nx,
                    _ => segments.push(DensitySegment { left: x, right: nx, value }),
                }
            }
        }
    }

    Ok(Measure { atoms: merged, density: segments })
}

impl Measure {
    /// The zero measure.
    pub fn zero() -> Self {
        Measure { atoms: Vec::new(), density: Vec::new() }
    }

    pub fn is_zero(&self) -> bool {
        self.atoms.is_empty() && self.density.is_empty()
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn density(&self) -> &[DensitySegment] {
        &self.density
    }

    /// Total mass of the line.
    pub fn total_mass(&self) -> f64 {
        let atoms: f64 = self.atoms.iter().map(|a| a.mass).sum();
        let dens: f64 = self
            .density
            .iter()
            .map(|s| s.value * (s.right - s.left))
            .sum();
        atoms + dens
    }

    /// Exact mass of an interval. Atoms at an endpoint count iff that endpoint
    /// is closed; the density part is insensitive to endpoint flags.
    pub fn mass(&self, iv: IntervalSpec) -> f64 {
        if iv.lo > iv.hi || (iv.lo == iv.hi && !(iv.lo_closed && iv.hi_closed)) {
            return 0.0;
        }
        let mut total = 0.0;
        for a in &self.atoms {
            let p = a.position;
            let inside = (p > iv.lo && p < iv.hi)
                || (p == iv.lo && iv.lo_closed)
                || (p == iv.hi && iv.hi_closed);
            if inside {
                total += a.mass;
            }
        }
        for s in &self.density {
            let lo = s.left.max(iv.lo);
            let hi = s.right.min(iv.hi);
            if hi > lo {
                total += s.value * (hi - lo);
            }
        }
        total
    }

    /// Density value at a point, with segments read as `[left, right)`.
    pub fn density_at(&self, x: f64) -> f64 {
        for s in &self.density {
            if x >= s.left && x < s.right {
                return s.value;
            }
            if s.left > x {
                break;
            }
        }
        0.0
    }

    /// Smallest closed interval containing the support, or `None` for the
    /// zero measure.
    pub fn support_hull(&self) -> Option<(f64, f64)> {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for a in &self.atoms {
            lo = lo.min(a.position);
            hi = hi.max(a.position);
        }
        for s in &self.density {
            lo = lo.min(s.left);
            hi = hi.max(s.right);
        }
        if lo.is_finite() {
            Some((lo, hi))
        } else {
            None
        }
    }

    /// All structural points: atom positions and density segment endpoints,
    /// sorted, deduplicated.
    pub fn structural_points(&self) -> Vec<f64> {
        let mut pts: Vec<f64> =
            Vec::with_capacity(self.atoms.len() + 2 * self.density.len());
        pts.extend(self.atoms.iter().map(|a| a.position));
        for s in &self.density {
            pts.push(s.left);
            pts.push(s.right);
        }
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts
    }

    /// Distance from `x` to the support (0 if inside a segment or at an atom).
    pub fn distance_to_support(&self, x: f64) -> f64 {
        let mut best = f64::INFINITY;
        for a in &self.atoms {
            best = best.min((a.position - x).abs());
        }
        for s in &self.density {
            if x >= s.left && x <= s.right {
                return 0.0;
            }
            best = best.min((s.left - x).abs().min((s.right - x).abs()));
        }
        best
    }

    /// sup over x of the unit-window mass `mu([x, x+1])`.
    ///
    /// The window mass as a function of its left endpoint is piecewise linear
    /// and upper semicontinuous (atoms enter on closed windows), so the
    /// supremum is attained at a window aligned with a structural point.
    pub fn brinck_constant(&self) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        let mut candidates = Vec::new();
        for p in self.structural_points() {
            candidates.push(p);
            candidates.push(p - 1.0);
        }
        let mut best: f64 = 0.0;
        for x in candidates {
            best = best.max(self.mass(IntervalSpec::closed(x, x + 1.0)));
        }
        best
    }

    /// Whether `mu((x-a, x+a)) -> 0` as `x -> +-inf`. Compact support makes
    /// this hold for every measure of this class; exposed so reports can
    /// record the discreteness hypothesis explicitly.
    pub fn tail_decay_check(&self, _a: f64) -> bool {
        true
    }

    /// Mirror image `x -> -x`.
    pub fn reflected(&self) -> Measure {
        let atoms: Vec<(f64, f64)> =
            self.atoms.iter().map(|a| (-a.position, a.mass)).collect();
        let density: Vec<(f64, f64, f64)> = self
            .density
            .iter()
            .map(|s| (-s.right, -s.left, s.value))
            .collect();
        build_measure(&atoms, &density).expect("reflection preserves validity")
    }

    /// Translation by `dx`.
    pub fn translated(&self, dx: f64) -> Measure {
        let atoms: Vec<(f64, f64)> =
            self.atoms.iter().map(|a| (a.position + dx, a.mass)).collect();
        let density: Vec<(f64, f64, f64)> = self
            .density
            .iter()
            .map(|s| (s.left + dx, s.right + dx, s.value))
            .collect();
        build_measure(&atoms, &density).expect("translation preserves validity")
    }

    /// Parabolic dilation `mu_s([a,b]) := s * mu([s a, s b])` for `s > 0`.
    pub fn dilated(&self, s: f64) -> Measure {
        assert!(s > 0.0 && s.is_finite());
        let atoms: Vec<(f64, f64)> =
            self.atoms.iter().map(|a| (a.position / s, a.mass * s)).collect();
        let density: Vec<(f64, f64, f64)> = self
            .density
            .iter()
            .map(|seg| (seg.left / s, seg.right / s, seg.value * s * s))
            .collect();
        build_measure(&atoms, &density).expect("dilation preserves validity")
    }

    /// Positive scalar multiple `c * mu`.
    pub fn scaled(&self, c: f64) -> Measure {
        assert!(c > 0.0 && c.is_finite());
        let atoms: Vec<(f64, f64)> =
            self.atoms.iter().map(|a| (a.position, a.mass * c)).collect();
        let density: Vec<(f64, f64, f64)> = self
            .density
            .iter()
            .map(|s| (s.left, s.right, s.value * c))
            .collect();
        build_measure(&atoms, &density).expect("scaling preserves validity")
    }

    /// Sum of two measures.
    pub fn sum(&self, other: &Measure) -> Measure {
        let mut atoms: Vec<(f64, f64)> =
            self.atoms.iter().map(|a| (a.position, a.mass)).collect();
        atoms.extend(other.atoms.iter().map(|a| (a.position, a.mass)));
        let mut density: Vec<(f64, f64, f64)> = self
            .density
            .iter()
            .map(|s| (s.left, s.right, s.value))
            .collect();
        density.extend(other.density.iter().map(|s| (s.left, s.right, s.value)));
        build_measure(&atoms, &density).expect("sum preserves validity")
    }

    /// Restriction to `[lo, hi)` plus explicit endpoint atom masses.
    ///
    /// `lo_atom`/`hi_atom` give the mass placed at `lo`/`hi` in the result,
    /// overriding whatever the restriction would carry there. Used by the
    /// interval decomposition, which splits boundary atoms between neighbors.
    pub fn restricted_with_boundary(
        &self,
        lo: f64,
        hi: f64,
        lo_atom: f64,
        hi_atom: f64,
    ) -> Measure {
        let mut atoms: Vec<(f64, f64)> = self
            .atoms
            .iter()
            .filter(|a| a.position > lo && a.position < hi)
            .map(|a| (a.position, a.mass))
            .collect();
        if lo_atom > 0.0 {
            atoms.push((lo, lo_atom));
        }
        if hi_atom > 0.0 {
            atoms.push((hi, hi_atom));
        }
        let density: Vec<(f64, f64, f64)> = self
            .density
            .iter()
            .filter_map(|s| {
                let l = s.left.max(lo);
                let r = s.right.min(hi);
                if r > l {
                    Some((l, r, s.value))
                } else {
                    None
                }
            })
            .collect();
        build_measure(&atoms, &density).expect("restriction preserves validity")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("measure serializes")
    }

    pub fn from_json(s: &str) -> Result<Measure, serde_json::Error> {
        let raw: Measure = serde_json::from_str(s)?;
        // Re-normalize: hand-written JSON may be unsorted or overlapping.
        let atoms: Vec<(f64, f64)> =
            raw.atoms.iter().map(|a| (a.position, a.mass)).collect();
        let density: Vec<(f64, f64, f64)> = raw
            .density
            .iter()
            .map(|s| (s.left, s.right, s.value))
            .collect();
        build_measure(&atoms, &density).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn delta_pair() -> Measure {
        build_measure(&[(-1.0, 1.0), (1.0, 1.0)], &[]).unwrap()
    }

    #[test]
    fn build_two_atoms() {
        let m = delta_pair();
        assert_eq!(m.atoms().len(), 2);
        assert_eq!(m.total_mass(), 2.0);
    }

    #[test]
    fn build_zero() {
        let m = build_measure(&[], &[]).unwrap();
        assert!(m.is_zero());
        assert_eq!(m.total_mass(), 0.0);
    }

    #[test]
    fn atoms_at_same_position_merge() {
        let m = build_measure(&[(0.0, 0.5), (0.0, 0.5)], &[]).unwrap();
        assert_eq!(m.atoms().len(), 1);
        assert_eq!(m.atoms()[0].mass, 1.0);
    }

    #[test]
    fn overlapping_density_adds() {
        let m = build_measure(&[], &[(0.0, 2.0, 1.0), (1.0, 3.0, 0.5)]).unwrap();
        assert_eq!(m.density_at(0.5), 1.0);
        assert_eq!(m.density_at(1.5), 1.5);
        assert_eq!(m.density_at(2.5), 0.5);
        assert!((m.total_mass() - 3.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(
            build_measure(&[(0.0, -1.0)], &[]),
            Err(BuildError::NonPositiveMass { .. })
        ));
        assert!(matches!(
            build_measure(&[], &[(0.0, 1.0, -0.5)]),
            Err(BuildError::NegativeDensity { .. })
        ));
        assert!(matches!(
            build_measure(&[(f64::NAN, 1.0)], &[]),
            Err(BuildError::NonFinite(_))
        ));
    }

    #[test]
    fn mass_examples() {
        let m = delta_pair();
        assert_eq!(m.mass(IntervalSpec::closed(-1.0, 1.0)), 2.0);
        let tau = 1.5;
        assert_eq!(m.mass(IntervalSpec::closed(-tau / 2.0, tau / 2.0)), 0.0);

        let u = build_measure(&[], &[(0.0, 10.0, 1.0)]).unwrap();
        assert_eq!(u.mass(IntervalSpec::half_open(2.0, 5.0)), 3.0);
    }

    #[test]
    fn endpoint_semantics() {
        let m = build_measure(&[(3.0, 0.7)], &[]).unwrap();
        assert_eq!(m.mass(IntervalSpec::closed(3.0, 3.0)), 0.7);
        assert_eq!(m.mass(IntervalSpec::half_open(3.0, 3.0)), 0.0);
        assert_eq!(m.mass(IntervalSpec::half_open(2.0, 3.0)), 0.0);
        assert_eq!(m.mass(IntervalSpec::open_closed(2.0, 3.0)), 0.7);
    }

    #[test]
    fn support_hull_examples() {
        let m = build_measure(&[(0.0, 1.0), (3.0, 1.0)], &[]).unwrap();
        assert_eq!(m.support_hull(), Some((0.0, 3.0)));
        let d = build_measure(&[], &[(-2.0, -1.0, 1.0), (4.0, 5.0, 1.0)]).unwrap();
        assert_eq!(d.support_hull(), Some((-2.0, 5.0)));
        assert_eq!(Measure::zero().support_hull(), None);
    }

    #[test]
    fn brinck_examples() {
        // Atoms 2 apart never share a unit window.
        assert_eq!(delta_pair().brinck_constant(), 1.0);
        let u = build_measure(&[], &[(0.0, 4.0, 0.3)]).unwrap();
        assert!((u.brinck_constant() - 0.3).abs() < 1e-15);
        assert_eq!(Measure::zero().brinck_constant(), 0.0);
    }

    #[test]
    fn tail_decay_is_automatic() {
        assert!(Measure::zero().tail_decay_check(1.0));
        assert!(delta_pair().tail_decay_check(0.5));
    }

    #[test]
    fn json_schema_shape() {
        let m = build_measure(&[(-1.0, 1.0)], &[(0.0, 2.0, 0.25)]).unwrap();
        let s = m.to_json();
        assert!(s.contains("\"atoms\""));
        assert!(s.contains("\"x\":-1.0"));
        assert!(s.contains("\"from\":0.0"));
        let back = Measure::from_json(&s).unwrap();
        assert_eq!(m, back);
    }

    fn arb_measure() -> impl Strategy<Value = Measure> {
        let atoms = prop::collection::vec(
            ((-50.0..50.0f64), (0.01..5.0f64)),
            0..6,
        );
        let segs = prop::collection::vec(
            ((-50.0..50.0f64), (0.01..8.0f64), (0.0..3.0f64)),
            0..4,
        );
        (atoms, segs).prop_map(|(a, s)| {
            let segs: Vec<(f64, f64, f64)> =
                s.into_iter().map(|(l, w, v)| (l, l + w, v)).collect();
            build_measure(&a, &segs).unwrap()
        })
    }

    proptest! {
        #[test]
        fn mass_additive_on_adjacent_intervals(
            m in arb_measure(),
            a in -60.0..60.0f64,
            w1 in 0.0..20.0f64,
            w2 in 0.0..20.0f64,
        ) {
            let b = a + w1;
            let c = b + w2;
            let left = m.mass(IntervalSpec::half_open(a, b));
            let right = m.mass(IntervalSpec::half_open(b, c));
            let whole = m.mass(IntervalSpec::half_open(a, c));
            prop_assert!((left + right - whole).abs() <= 1e-12 * (1.0 + whole));
        }

        #[test]
        fn mass_monotone_under_inclusion(
            m in arb_measure(),
            a in -60.0..60.0f64,
            w in 0.0..20.0f64,
            pad in 0.0..10.0f64,
        ) {
            let inner = m.mass(IntervalSpec::closed(a, a + w));
            let outer = m.mass(IntervalSpec::closed(a - pad, a + w + pad));
            prop_assert!(inner <= outer + 1e-12 * (1.0 + outer));
        }

        #[test]
        fn brinck_scales_linearly(m in arb_measure(), c in 0.1..10.0f64) {
            prop_assume!(!m.is_zero());
            let b = m.brinck_constant();
            let bc = m.scaled(c).brinck_constant();
            prop_assert!((bc - c * b).abs() <= 1e-12 * (1.0 + bc));
        }

        #[test]
        fn json_roundtrip_is_bit_faithful(m in arb_measure()) {
            let back = Measure::from_json(&m.to_json()).unwrap();
            prop_assert_eq!(m, back);
        }
    }
}
