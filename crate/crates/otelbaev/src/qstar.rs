//! Otelbaev's averaged function of a measure.
//!
//! For an averaging parameter `alpha > 0`,
//!
//! ```text
//! q*_alpha(x) = inf { 1/d^2 : mu([x-d/2, x+d/2]) < 1/(alpha d) },
//! d_alpha(x)  = 1/sqrt(q*_alpha(x)).
//! ```
//!
//! Equivalently, `d_alpha(x)` is the smallest window width `d` with
//! `mu(window) >= 1/(alpha d)`. For measures with finitely many atoms and
//! piecewise-constant density the window mass `g(d)` is piecewise linear in
//! `d` with upward jumps exactly where a window edge meets an atom, so the
//! crossing with `1/(alpha d)` solves a quadratic on one of finitely many
//! pieces. Every evaluation here is exact up to f64 rounding.
//!
//! The same scan applied to interval-inflated and interval-deflated window
//! families yields certified two-sided bounds on `q*_alpha` over a whole cell,
//! which drive the envelope, the sup-norm search, and the power integrals.

use crate::measure::{IntervalSpec, Measure};
use crate::num::positive_root;
use std::collections::BinaryHeap;
use thiserror::Error;

/// One exact evaluation of Otelbaev's function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OtelbaevPoint {
    pub x: f64,
    pub alpha: f64,
    /// Window width `d_alpha(x)`; `inf` for the zero measure.
    pub d: f64,
    /// `q*_alpha(x) = 1/d^2`; 0 for the zero measure.
    pub q: f64,
    /// Certified absolute error on `d` (0: the scan is exact).
    pub err: f64,
}

/// The sublevel set `M_alpha(lambda) = { x : q*_alpha(x) >= lambda }` as a
/// finite union of disjoint closed intervals.
#[derive(Debug, Clone, PartialEq)]
pub struct SublevelSet {
    pub alpha: f64,
    pub lambda: f64,
    pub components: Vec<(f64, f64)>,
    pub total_length: f64,
    pub err: f64,
}

/// Certified enclosure of `int (q*_alpha)^p dx` with `p = 1/2 + gamma`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerIntegral {
    pub alpha: f64,
    pub exponent: f64,
    pub value: f64,
    pub err: f64,
    /// Interval integrated by adaptive cells; the rest is bounded analytically.
    pub window: (f64, f64),
    /// Analytic upper bound on the two tails outside `window`.
    pub tail_bound: f64,
}

/// Per-cell certified bounds on `q*_alpha`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopeCell {
    pub lo: f64,
    pub hi: f64,
    pub q_lo: f64,
    pub q_hi: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Envelope {
    pub alpha: f64,
    pub cells: Vec<EnvelopeCell>,
}

#[derive(Debug, Error, PartialEq)]
pub enum QstarError {
    #[error("gamma must be positive, got {0} (the integral diverges at infinity otherwise)")]
    NonPositiveGamma(f64),
    #[error("lambda must be positive, got {0}")]
    NonPositiveLambda(f64),
    #[error(
        "power integral {value} escapes its independent enclosure [{enclosure_lo}, {enclosure_hi}]"
    )]
    CrossCheckFailed { value: f64, enclosure_lo: f64, enclosure_hi: f64 },
}

/// Smallest `d >= max(0, c_lo - c_hi)` with
/// `mu([c_lo - d/2, c_hi + d/2]) >= 1/(alpha d)`, or `None` for the zero
/// measure.
///
/// `c_lo == c_hi` is the pointwise window family; `c_lo < c_hi` inflates every
/// centered window of the cell `[c_lo, c_hi]` (the crossing bounds `d` from
/// below on the cell); `c_lo > c_hi` uses the common core of those windows
/// (the crossing bounds `d` from above).
fn window_crossing(m: &Measure, alpha: f64, c_lo: f64, c_hi: f64) -> Option<f64> {
    if m.is_zero() {
        return None;
    }
    let w0 = (c_lo - c_hi).max(0.0);
    let bp_of = |p: f64| (2.0 * (c_lo - p)).max(2.0 * (p - c_hi)).max(w0);
    let mut bps: Vec<f64> = Vec::with_capacity(m.structural_points().len() + 1);
    bps.push(w0);
    for p in m.structural_points() {
        bps.push(bp_of(p));
    }
    bps.sort_by(f64::total_cmp);
    bps.dedup();

    // Atom membership is decided on the breakpoint values themselves: the
    // window at width d holds the atom iff d >= its entry breakpoint.
    // Recomputing window edges from d can round across the atom.
    let atom_bps: Vec<(f64, f64)> =
        m.atoms().iter().map(|a| (bp_of(a.position), a.mass)).collect();
    let mass_at = |d: f64| {
        let atoms: f64 = atom_bps
            .iter()
            .filter(|&&(bp, _)| bp <= d)
            .map(|&(_, mass)| mass)
            .sum();
        let dens: f64 = m
            .density()
            .iter()
            .map(|seg| {
                let lo = seg.left.max(c_lo - d / 2.0);
                let hi = seg.right.min(c_hi + d / 2.0);
                if hi > lo {
                    seg.value * (hi - lo)
                } else {
                    0.0
                }
            })
            .sum();
        atoms + dens
    };

    for i in 0..bps.len() {
        let d_lo = bps[i];
        let d_hi = bps.get(i + 1).copied().unwrap_or(f64::INFINITY);
        let g_lo = mass_at(d_lo);
        if d_lo > 0.0 && alpha * g_lo * d_lo >= 1.0 {
            return Some(d_lo);
        }
        // Slope of g on this piece: density seen by the two moving edges.
        let d_mid = if d_hi.is_finite() { 0.5 * (d_lo + d_hi) } else { d_lo + 1.0 };
        let slope = 0.5
            * (m.density_at(c_lo - d_mid / 2.0) + m.density_at(c_hi + d_mid / 2.0));
        let c0 = g_lo - slope * d_lo;
        if let Some(root) = positive_root(alpha * slope, alpha * c0) {
            if root <= d_hi {
                // A root at or before d_lo can only be rounding slop around
                // the endpoint test above; clamp to the piece.
                return Some(root.max(d_lo));
            }
        }
    }
    unreachable!("nonzero measure: window mass eventually dominates 1/(alpha d)")
}

/// Exact evaluation of `(d_alpha(x), q*_alpha(x))`.
pub fn eval_point(m: &Measure, alpha: f64, x: f64) -> OtelbaevPoint {
    assert!(alpha > 0.0 && alpha.is_finite(), "alpha must be positive");
    assert!(x.is_finite(), "x must be finite");
    match window_crossing(m, alpha, x, x) {
        None => OtelbaevPoint { x, alpha, d: f64::INFINITY, q: 0.0, err: 0.0 },
        Some(d) => OtelbaevPoint { x, alpha, d, q: 1.0 / (d * d), err: 0.0 },
    }
}

/// Bisection fallback for `d_alpha(x)` working only through interval-mass
/// queries. Kept as an independent cross-check of the exact scan; tolerance
/// is relative on `d`.
pub fn eval_point_bisection(m: &Measure, alpha: f64, x: f64, rel_tol: f64) -> OtelbaevPoint {
    if m.is_zero() {
        return OtelbaevPoint { x, alpha, d: f64::INFINITY, q: 0.0, err: 0.0 };
    }
    let crossed = |d: f64| {
        let g = m.mass(IntervalSpec::centered(x, d));
        alpha * g * d >= 1.0
    };
    let mut lo = 1.0;
    let mut hi = 1.0;
    let mut guard = 0;
    while crossed(lo) {
        lo *= 0.5;
        guard += 1;
        assert!(guard < 4096, "bisection bracket collapse");
    }
    while !crossed(hi) {
        hi *= 2.0;
        guard += 1;
        assert!(guard < 8192, "bisection bracket blowup");
    }
    while hi - lo > rel_tol * hi {
        let mid = 0.5 * (lo + hi);
        if crossed(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    OtelbaevPoint { x, alpha, d: hi, q: 1.0 / (hi * hi), err: hi - lo }
}

/// Certified bounds on `d_alpha` over the cell `[a, b]`, from the inflated and
/// deflated window crossings. Both collapse to `d_alpha(a)` as `b -> a`.
fn cell_d_bounds(m: &Measure, alpha: f64, a: f64, b: f64) -> (f64, f64) {
    debug_assert!(a <= b);
    let d_lo = window_crossing(m, alpha, a, b).unwrap_or(f64::INFINITY);
    let d_hi = window_crossing(m, alpha, b, a).unwrap_or(f64::INFINITY);
    (d_lo, d_hi)
}

fn q_from_d(d: f64) -> f64 {
    if d.is_finite() {
        1.0 / (d * d)
    } else {
        0.0
    }
}

/// Piecewise certified envelope of `q*_alpha` on a window, cells of width
/// `<= max_cell`. Bounds combine exact endpoint evaluations with the
/// 2-Lipschitz continuity of `d_alpha` and the interval-window crossings.
pub fn envelope(m: &Measure, alpha: f64, window: (f64, f64), max_cell: f64) -> Envelope {
    assert!(window.0.is_finite() && window.1.is_finite() && window.1 >= window.0);
    assert!(max_cell > 0.0);
    if m.is_zero() {
        return Envelope {
            alpha,
            cells: vec![EnvelopeCell { lo: window.0, hi: window.1, q_lo: 0.0, q_hi: 0.0 }],
        };
    }
    let span = window.1 - window.0;
    let n = ((span / max_cell).ceil() as usize).max(1);
    let step = span / n as f64;
    let mut cells = Vec::with_capacity(n);
    let mut d_left = eval_point(m, alpha, window.0).d;
    for i in 0..n {
        let lo = window.0 + step * i as f64;
        let hi = if i + 1 == n { window.1 } else { window.0 + step * (i + 1) as f64 };
        let d_right = eval_point(m, alpha, hi).d;
        let w = hi - lo;
        let lip_lo = 0.5 * (d_left + d_right) - w;
        let lip_hi = 0.5 * (d_left + d_right) + w;
        let (win_lo, win_hi) = cell_d_bounds(m, alpha, lo, hi);
        let d_min = lip_lo.max(win_lo);
        let d_max = lip_hi.min(win_hi);
        let q_hi = if d_min > 0.0 { 1.0 / (d_min * d_min) } else { f64::INFINITY };
        cells.push(EnvelopeCell { lo, hi, q_lo: q_from_d(d_max), q_hi });
        d_left = d_right;
    }
    Envelope { alpha, cells }
}

/// Exact computation of `M_alpha(lambda)`.
///
/// With `s = 1/sqrt(lambda)`, minimality of the crossing gives
/// `q*_alpha(x) >= lambda  <=>  mu([x-s/2, x+s/2]) >= sqrt(lambda)/alpha`,
/// and the fixed-width window mass is piecewise linear in `x`, so the set is
/// resolved exactly over the window-edge breakpoints.
pub fn sublevel_measure(
    m: &Measure,
    alpha: f64,
    lambda: f64,
) -> Result<SublevelSet, QstarError> {
    if !(lambda > 0.0) {
        return Err(QstarError::NonPositiveLambda(lambda));
    }
    let empty = |err| SublevelSet {
        alpha,
        lambda,
        components: Vec::new(),
        total_length: 0.0,
        err,
    };
    if m.is_zero() {
        return Ok(empty(0.0));
    }
    let s = 1.0 / lambda.sqrt();
    let threshold = lambda.sqrt() / alpha;

    // Atom membership in the sliding window is decided on the breakpoint
    // values themselves (enter at p - s/2, exit after p + s/2); recomputing
    // window edges from a breakpoint can drift an ulp off the atom position.
    let pts = m.structural_points();
    let mut bps: Vec<f64> = Vec::with_capacity(2 * pts.len());
    for &p in &pts {
        bps.push(p - s / 2.0);
        bps.push(p + s / 2.0);
    }
    bps.sort_by(f64::total_cmp);
    bps.dedup();

    let atom_events: Vec<(f64, f64, f64)> = m
        .atoms()
        .iter()
        .map(|a| (a.position - s / 2.0, a.position + s / 2.0, a.mass))
        .collect();
    // Density contribution of the window: continuous in x, so interval
    // queries are safe for it.
    let density_mass = |x: f64| {
        m.density()
            .iter()
            .map(|seg| {
                let lo = seg.left.max(x - s / 2.0);
                let hi = seg.right.min(x + s / 2.0);
                if hi > lo {
                    seg.value * (hi - lo)
                } else {
                    0.0
                }
            })
            .sum::<f64>()
    };

    let mut raw: Vec<(f64, f64)> = Vec::new();
    let mut push = |lo: f64, hi: f64| {
        if hi < lo {
            return;
        }
        if let Some(last) = raw.last_mut() {
            // Glue across rounding-level gaps.
            if lo <= last.1 + 1e-13 * (1.0 + lo.abs()) {
                last.1 = last.1.max(hi);
                return;
            }
        }
        raw.push((lo, hi));
    };

    for i in 0..bps.len() {
        let x = bps[i];
        let dens = density_mass(x);
        let atoms_closed: f64 = atom_events
            .iter()
            .filter(|&&(enter, exit, _)| enter <= x && x <= exit)
            .map(|&(_, _, mass)| mass)
            .sum();
        let atoms_after: f64 = atom_events
            .iter()
            .filter(|&&(enter, exit, _)| enter <= x && x < exit)
            .map(|&(_, _, mass)| mass)
            .sum();
        let f_closed = dens + atoms_closed;
        if f_closed >= threshold {
            push(x, x);
        }
        let Some(&x_next) = bps.get(i + 1) else { break };
        let f_plus = dens + atoms_after;
        let mid = 0.5 * (x + x_next);
        let slope = m.density_at(mid + s / 2.0) - m.density_at(mid - s / 2.0);
        // F(t) = f_plus + slope * (t - x) on (x, x_next).
        if slope == 0.0 {
            if f_plus >= threshold {
                push(x, x_next);
            }
        } else {
            let t = x + (threshold - f_plus) / slope;
            if slope > 0.0 {
                let lo = t.clamp(x, x_next);
                if lo <= x_next && f_plus + slope * (x_next - x) >= threshold {
                    push(lo, x_next);
                }
            } else {
                let hi = t.clamp(x, x_next);
                if f_plus >= threshold {
                    push(x, hi);
                }
            }
        }
    }

    let total_length: f64 = raw.iter().map(|c| c.1 - c.0).sum();
    let err = f64::EPSILON * (bps.len() as f64 + 1.0)
        * (1.0 + bps.last().map_or(0.0, |b| b.abs().max(bps[0].abs())));
    Ok(SublevelSet { alpha, lambda, components: raw, total_length, err })
}

#[derive(PartialEq)]
struct HeapKey(f64, f64);
impl Eq for HeapKey {}
impl PartialOrd for HeapKey {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapKey {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0
            .total_cmp(&other.0)
            .then(self.1.total_cmp(&other.1))
    }
}

/// Certified supremum of `q*_alpha`: branch-and-bound over the inflated hull
/// with the interval-window enclosures. Returns `(value, err)` with
/// `sup in [value, value + err]`.
pub fn sup_norm(m: &Measure, alpha: f64) -> (f64, f64) {
    sup_norm_tol(m, alpha, 1e-12)
}

pub fn sup_norm_tol(m: &Measure, alpha: f64, rel_tol: f64) -> (f64, f64) {
    let Some((r_lo, r_hi)) = m.support_hull() else {
        return (0.0, 0.0);
    };
    // Seed the incumbent with exact evaluations at structural points.
    let mut best_lo: f64 = 0.0;
    let mut seeds = m.structural_points();
    seeds.push(0.5 * (r_lo + r_hi));
    for s in &m.density() .to_vec() {
        seeds.push(0.5 * (s.left + s.right));
    }
    for x in seeds {
        best_lo = best_lo.max(eval_point(m, alpha, x).q);
    }
    debug_assert!(best_lo > 0.0);
    // Outside the hull inflated by margin, q* <= 1/(4 margin^2) <= best_lo.
    let margin = 0.5 / best_lo.sqrt();
    let (a, b) = (r_lo - margin, r_hi + margin);

    let mut heap: BinaryHeap<(HeapKey, u64)> = BinaryHeap::new();
    let mut cells: Vec<(f64, f64, f64)> = Vec::new(); // (lo, hi, q_hi)
    let push_cell = |heap: &mut BinaryHeap<(HeapKey, u64)>,
                         cells: &mut Vec<(f64, f64, f64)>,
                         best_lo: &mut f64,
                         lo: f64,
                         hi: f64| {
        let (d_min, d_max) = cell_d_bounds(m, alpha, lo, hi);
        let q_hi = if d_min > 0.0 { 1.0 / (d_min * d_min) } else { f64::INFINITY };
        *best_lo = best_lo.max(q_from_d(d_max));
        let id = cells.len() as u64;
        cells.push((lo, hi, q_hi));
        heap.push((HeapKey(q_hi, -lo), id));
    };

    let n0 = 32;
    for i in 0..n0 {
        let lo = a + (b - a) * i as f64 / n0 as f64;
        let hi = a + (b - a) * (i + 1) as f64 / n0 as f64;
        push_cell(&mut heap, &mut cells, &mut best_lo, lo, hi);
    }

    let mut iterations = 0usize;
    while let Some((HeapKey(q_hi, _), id)) = heap.pop() {
        if q_hi <= best_lo * (1.0 + rel_tol) {
            return (best_lo, (q_hi - best_lo).max(0.0));
        }
        iterations += 1;
        if iterations > 200_000 {
            return (best_lo, (q_hi - best_lo).max(0.0));
        }
        let (lo, hi, _) = cells[id as usize];
        let mid = 0.5 * (lo + hi);
        best_lo = best_lo.max(eval_point(m, alpha, mid).q);
        push_cell(&mut heap, &mut cells, &mut best_lo, lo, mid);
        push_cell(&mut heap, &mut cells, &mut best_lo, mid, hi);
    }
    (best_lo, 0.0)
}

/// Integrand enclosure for `(q*)^p` on a cell from its `d` bounds.
fn power_bounds(d_lo: f64, d_hi: f64, p: f64) -> (f64, f64) {
    let pow = |d: f64| -> f64 {
        if d.is_finite() {
            d.powf(-2.0 * p)
        } else if p > 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    };
    let (a, b) = (pow(d_hi), pow(d_lo));
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

struct AdaptiveCells {
    // (lo, hi, int_lo, int_hi): certified bounds of the integral over the cell
    cells: Vec<(f64, f64, f64, f64)>,
    heap: BinaryHeap<(HeapKey, u64)>,
    sum_lo: f64,
    sum_hi: f64,
}

impl AdaptiveCells {
    fn new() -> Self {
        AdaptiveCells {
            cells: Vec::new(),
            heap: BinaryHeap::new(),
            sum_lo: 0.0,
            sum_hi: 0.0,
        }
    }

    fn push(&mut self, m: &Measure, alpha: f64, p: f64, lo: f64, hi: f64) {
        let (d_lo, d_hi) = cell_d_bounds(m, alpha, lo, hi);
        let (q_lo, q_hi) = power_bounds(d_lo, d_hi, p);
        let w = hi - lo;
        let (int_lo, int_hi) = (q_lo * w, q_hi * w);
        self.sum_lo += int_lo;
        self.sum_hi += int_hi;
        let id = self.cells.len() as u64;
        self.cells.push((lo, hi, int_lo, int_hi));
        self.heap.push((HeapKey(int_hi - int_lo, -lo), id));
    }

    fn split_worst(&mut self, m: &Measure, alpha: f64, p: f64) -> bool {
        let Some((_, id)) = self.heap.pop() else { return false };
        let (lo, hi, int_lo, int_hi) = self.cells[id as usize];
        if hi - lo < 1e-300 {
            return false;
        }
        self.sum_lo -= int_lo;
        self.sum_hi -= int_hi;
        let mid = 0.5 * (lo + hi);
        self.push(m, alpha, p, lo, mid);
        self.push(m, alpha, p, mid, hi);
        true
    }

    fn gap(&self) -> f64 {
        self.sum_hi - self.sum_lo
    }
}

/// Riemann enclosure of `int (q*)^p` over finite intervals from the
/// interval-window cell bounds. First-order only; used as an independent
/// cross-check of the exact piecewise engine.
fn riemann_enclosure(
    m: &Measure,
    alpha: f64,
    p: f64,
    intervals: &[(f64, f64)],
    rel_tol: f64,
    max_cells: usize,
) -> (f64, f64) {
    let mut cells = AdaptiveCells::new();
    for &(lo, hi) in intervals {
        if hi <= lo {
            continue;
        }
        let n = 16;
        for i in 0..n {
            let a = lo + (hi - lo) * i as f64 / n as f64;
            let b = lo + (hi - lo) * (i + 1) as f64 / n as f64;
            cells.push(m, alpha, p, a, b);
        }
    }
    let mut rounds = 0usize;
    while cells.gap() > rel_tol * cells.sum_lo.max(1e-300) && rounds < max_cells {
        if !cells.split_worst(m, alpha, p) {
            break;
        }
        rounds += 1;
    }
    (cells.sum_lo, cells.sum_hi)
}

/// Certified enclosure of `int_R (q*_alpha)^(1/2+gamma) dx`.
///
/// The value comes from the exact piecewise engine ([`crate::integrate`]):
/// between combinatorial events the crossing is flat, linear, or an algebraic
/// root, each with a closed-form antiderivative, so the result is exact up to
/// rounding (far below `rel_tol`). An independent first-order Riemann
/// enclosure over the hull region cross-checks the exact value; disagreement
/// is reported as an error rather than silently widening.
pub fn power_integral(
    m: &Measure,
    alpha: f64,
    gamma: f64,
    rel_tol: f64,
) -> Result<PowerIntegral, QstarError> {
    if !(gamma > 0.0) {
        return Err(QstarError::NonPositiveGamma(gamma));
    }
    let p = 0.5 + gamma;
    if m.is_zero() {
        return Ok(PowerIntegral {
            alpha,
            exponent: p,
            value: 0.0,
            err: 0.0,
            window: (0.0, 0.0),
            tail_bound: 0.0,
        });
    }
    let exact = crate::integrate::integrate_line(m, alpha, p);

    // Cross-check over the event window; the tails are compared against the
    // closed-form distance bounds.
    let (w_lo, w_hi) = exact.window;
    let (rm_lo, rm_hi) =
        riemann_enclosure(m, alpha, p, &[(w_lo, w_hi)], 0.05, 6_000);
    let (r_lo, r_hi) = m.support_hull().expect("nonzero");
    let (tau_l, tau_r) = (r_lo - w_lo, w_hi - r_hi);
    let tail_coeff = 0.25f64.powf(p) / (2.0 * p - 1.0);
    let width = r_hi - r_lo;
    let tails_hi = tail_coeff * (tau_l.powf(1.0 - 2.0 * p) + tau_r.powf(1.0 - 2.0 * p));
    let tails_lo = tail_coeff
        * ((tau_l + width).powf(1.0 - 2.0 * p) + (tau_r + width).powf(1.0 - 2.0 * p));
    // Events always extend past the plateau edges, so tau_* > 0; if the
    // full-capture branch is not yet active the lower tail bound still holds
    // with slack 0.
    let tails_lo = if 2.0 * tau_l.min(tau_r) >= 1.0 / (alpha * m.total_mass()) {
        tails_lo
    } else {
        0.0
    };
    let enc_lo = rm_lo + tails_lo;
    let enc_hi = rm_hi + tails_hi;
    let slack = 1e-9 * exact.value.abs() + 1e-12;
    if exact.value < enc_lo - slack || exact.value > enc_hi + slack {
        return Err(QstarError::CrossCheckFailed {
            value: exact.value,
            enclosure_lo: enc_lo,
            enclosure_hi: enc_hi,
        });
    }

    let err = exact.err.max(rel_tol * 0.0);
    Ok(PowerIntegral {
        alpha,
        exponent: p,
        value: exact.value,
        err,
        window: exact.window,
        tail_bound: exact.tails,
    })
}

/// Certified `int_A (q*_alpha)^p dx` over a finite union of intervals, for
/// any real exponent `p`. Exact piecewise engine; used for the restricted
/// counting integral (`p = 1/2`) and the reciprocal integrand (`p = -1`).
pub fn restricted_power_integral(
    m: &Measure,
    alpha: f64,
    p: f64,
    intervals: &[(f64, f64)],
    _rel_tol: f64,
) -> (f64, f64) {
    if m.is_zero() || intervals.is_empty() {
        return (0.0, 0.0);
    }
    let exact = crate::integrate::integrate_intervals(m, alpha, p, intervals);
    (exact.value, exact.err)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::build_measure;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn delta(c: f64) -> Measure {
        build_measure(&[(0.0, c)], &[]).unwrap()
    }

    fn delta_pair() -> Measure {
        build_measure(&[(-1.0, 1.0), (1.0, 1.0)], &[]).unwrap()
    }

    /// q_2* for delta_0: 4 on |x| <= 1/4, 1/(4x^2) outside.
    fn q2_single_delta(x: f64) -> f64 {
        if x.abs() <= 0.25 {
            4.0
        } else {
            1.0 / (4.0 * x * x)
        }
    }

    #[test]
    fn paper_point_value_is_exact() {
        let p = eval_point(&delta_pair(), 1.0, 0.0);
        assert_eq!(p.d, 2.0);
        assert_eq!(p.q, 0.25);
        assert_eq!(p.err, 0.0);
    }

    #[test]
    fn single_delta_closed_form() {
        let m = delta(1.0);
        for &x in &[0.0, 0.1, 0.25, 0.26, 0.5, 1.0, -3.7] {
            let p = eval_point(&m, 2.0, x);
            assert!(
                (p.q - q2_single_delta(x)).abs() <= 1e-13,
                "x={x}: got {} want {}",
                p.q,
                q2_single_delta(x)
            );
        }
        let at_one = eval_point(&m, 2.0, 1.0);
        assert!((at_one.q - 0.25).abs() < 1e-15);
    }

    #[test]
    fn doubled_delta_closed_form() {
        let m = delta(2.0);
        assert!((eval_point(&m, 2.0, 0.0).q - 16.0).abs() < 1e-12);
        assert!((eval_point(&m, 2.0, 0.2).q - 6.25).abs() < 1e-12);
    }

    #[test]
    fn uniform_density_interior() {
        let c = 0.7;
        let m = build_measure(&[], &[(-500.0, 500.0, c)]).unwrap();
        for &alpha in &[0.5, 1.0, 2.0] {
            let p = eval_point(&m, alpha, 3.0);
            assert!((p.q - alpha * c).abs() < 1e-12);
            let oracle = eval_point_bisection(&m, alpha, 3.0, 1e-13);
            assert!((p.d - oracle.d).abs() <= 1e-9 * p.d);
        }
    }

    #[test]
    fn zero_measure_convention() {
        let p = eval_point(&Measure::zero(), 1.0, 0.3);
        assert_eq!(p.q, 0.0);
        assert!(p.d.is_infinite());
    }

    fn random_measure(rng: &mut ChaCha8Rng) -> Measure {
        let n_atoms = rng.gen_range(0..6);
        let n_segs = rng.gen_range(0..4);
        let mut atoms = Vec::new();
        for _ in 0..n_atoms {
            atoms.push((rng.gen_range(-8.0..8.0), rng.gen_range(0.05..1.2)));
        }
        let mut segs = Vec::new();
        for _ in 0..n_segs {
            let l = rng.gen_range(-8.0..8.0);
            segs.push((l, l + rng.gen_range(0.1..3.0), rng.gen_range(0.05..0.8)));
        }
        if atoms.is_empty() && segs.is_empty() {
            atoms.push((0.0, 1.0));
        }
        build_measure(&atoms, &segs).unwrap()
    }

    #[test]
    fn scan_agrees_with_bisection_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..300 {
            let m = random_measure(&mut rng);
            let alpha = rng.gen_range(0.2..4.0);
            let x = rng.gen_range(-12.0..12.0);
            let exact = eval_point(&m, alpha, x);
            let oracle = eval_point_bisection(&m, alpha, x, 1e-13);
            assert!(
                (exact.d - oracle.d).abs() <= 1e-9 * exact.d.max(1.0),
                "alpha={alpha} x={x} exact={} oracle={}",
                exact.d,
                oracle.d
            );
        }
    }

    #[test]
    fn defining_property_holds() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let m = random_measure(&mut rng);
            let alpha = rng.gen_range(0.2..4.0);
            let x = rng.gen_range(-10.0..10.0);
            let d = eval_point(&m, alpha, x).d;
            // Atoms sit exactly on the window edge at the crossing; inflate
            // by an ulp-scale factor so the interval query cannot round past
            // them.
            let g = m.mass(IntervalSpec::centered(x, d * (1.0 + 1e-12)));
            assert!(alpha * g * d >= 1.0 - 1e-9);
            let eps = rng.gen_range(1e-6..0.999) * d;
            let g2 = m.mass(IntervalSpec::centered(x, d - eps));
            assert!(alpha * g2 * (d - eps) < 1.0 + 1e-9);
        }
    }

    #[test]
    fn envelope_brackets_pointwise_values() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let m = random_measure(&mut rng);
        let env = envelope(&m, 2.0, (-12.0, 12.0), 0.05);
        for _ in 0..500 {
            let x = rng.gen_range(-12.0..12.0);
            let q = eval_point(&m, 2.0, x).q;
            let cell = env
                .cells
                .iter()
                .find(|c| c.lo <= x && x <= c.hi)
                .expect("cell covers x");
            assert!(cell.q_lo <= q * (1.0 + 1e-12) + 1e-15);
            assert!(cell.q_hi >= q * (1.0 - 1e-12) - 1e-15);
        }
    }

    #[test]
    fn envelope_zero_measure() {
        let env = envelope(&Measure::zero(), 2.0, (-1.0, 1.0), 0.01);
        assert!(env.cells.iter().all(|c| c.q_lo == 0.0 && c.q_hi == 0.0));
    }

    #[test]
    fn sublevel_single_delta() {
        let m = delta(1.0);
        let s = sublevel_measure(&m, 2.0, 1.0 / 16.0).unwrap();
        assert_eq!(s.components.len(), 1);
        assert!((s.components[0].0 + 2.0).abs() < 1e-12);
        assert!((s.components[0].1 - 2.0).abs() < 1e-12);
        assert!((s.total_length - 4.0).abs() < 1e-12);

        let empty = sublevel_measure(&m, 2.0, 5.0).unwrap();
        assert!(empty.components.is_empty());
        assert_eq!(empty.total_length, 0.0);

        let z = sublevel_measure(&Measure::zero(), 2.0, 0.5).unwrap();
        assert!(z.components.is_empty());
    }

    #[test]
    fn sublevel_matches_pointwise_on_random_measures() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..40 {
            let m = random_measure(&mut rng);
            let alpha = rng.gen_range(0.3..3.0);
            let (sup, _) = sup_norm(&m, alpha);
            let lambda = rng.gen_range(0.01..1.2) * sup;
            let set = sublevel_measure(&m, alpha, lambda).unwrap();
            for _ in 0..60 {
                let x = rng.gen_range(-14.0..14.0);
                let q = eval_point(&m, alpha, x).q;
                let inside = set
                    .components
                    .iter()
                    .any(|&(lo, hi)| lo <= x && x <= hi);
                // Skip boundary-thin disagreements.
                if (q - lambda).abs() > 1e-9 * lambda {
                    assert_eq!(q >= lambda, inside, "x={x} q={q} lambda={lambda}");
                }
            }
        }
    }

    #[test]
    fn sup_norm_examples() {
        assert!((sup_norm(&delta(1.0), 2.0).0 - 4.0).abs() < 1e-9);
        assert!((sup_norm(&delta(2.0), 2.0).0 - 16.0).abs() < 1e-8);
        // Lone atom of mass a: sup = (alpha a)^2, independent of position.
        let m = build_measure(&[(3.7, 0.4)], &[]).unwrap();
        for &alpha in &[0.7, 1.0, 2.5] {
            let want = (alpha * 0.4) * (alpha * 0.4);
            let (got, err) = sup_norm(&m, alpha);
            assert!((got - want).abs() <= 1e-9 * want + err);
        }
        assert_eq!(sup_norm(&Measure::zero(), 2.0), (0.0, 0.0));
    }

    /// 4^(gamma+1) * int (q_2*)^(gamma+1/2) for delta_0 equals
    /// (4 gamma + 2)/gamma * 4^(2 gamma).
    #[test]
    fn power_integral_single_delta_closed_form() {
        for &gamma in &[0.25, 0.5, 1.0, 2.0] {
            let pi = power_integral(&delta(1.0), 2.0, gamma, 1e-10).unwrap();
            let want = (4.0 * gamma + 2.0) / gamma * 4.0f64.powf(2.0 * gamma)
                / 4.0f64.powf(gamma + 1.0);
            assert!(
                (pi.value - want).abs() <= 1e-8 * want,
                "gamma={gamma}: got {} want {want} err {}",
                pi.value,
                pi.err
            );
            assert!(pi.err <= 1e-9 * want);
        }
    }

    #[test]
    fn power_integral_rejects_bad_gamma() {
        assert!(power_integral(&delta(1.0), 2.0, 0.0, 1e-6).is_err());
        assert!(power_integral(&delta(1.0), 2.0, -1.0, 1e-6).is_err());
    }

    #[test]
    fn power_integral_zero_measure() {
        let pi = power_integral(&Measure::zero(), 2.0, 0.5, 1e-6).unwrap();
        assert_eq!(pi.value, 0.0);
    }

    #[test]
    fn restricted_integral_matches_plateau() {
        // On [-1/8, 1/8] the function q_2* of 2*delta_0 is identically 16.
        let m = delta(2.0);
        let (v, e) = restricted_power_integral(&m, 2.0, 1.0, &[(-0.125, 0.125)], 1e-9);
        assert!((v - 4.0).abs() <= 1e-8 + e);
    }
}
