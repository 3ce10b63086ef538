//! Closed-form bounds and comparators for the coded D2D cache.
//!
//! Everything here is a pure evaluation: the cut-set lower bound on the
//! delivery rate, the achievable-over-optimal gap bound, throughput upper
//! bounds with and without spatial reuse, the rate of the equivalent
//! base-station scheme, and a lower-convex-envelope utility. Arithmetic
//! stays in exact rationals wherever the inputs are rational; square
//! roots fall back to f64.

use num_traits::{Signed, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::Frac;

pub fn frac_to_f64(x: Frac) -> f64 {
    *x.numer() as f64 / *x.denom() as f64
}

// ---------------------------------------------------------------------------
// Cut-set lower bound
// ---------------------------------------------------------------------------

/// Which branch of the cut-set bound attained the maximum.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CutsetBranch {
    /// `s - (s / floor(m/s)) * M`, maximized over `s in 1..=min(m, n)`.
    SegmentCut { s: usize },
    /// `(n / (n-1)) * (1 - M/m)`.
    FractionalCut,
}

#[derive(Clone, Copy, Debug)]
pub struct CutsetBound {
    pub value: Frac,
    pub branch: CutsetBranch,
    /// The s that maximizes the segment branch, whichever branch wins.
    pub best_segment_s: usize,
    /// Set when n = 1: the fractional branch is undefined there and only
    /// the segment branch was evaluated.
    pub single_node: bool,
}

/// Lower bound on any achievable delivery rate:
/// `max( max_s (s - (s / floor(m/s)) M), (n/(n-1)) (1 - M/m) )`.
pub fn cutset_lower_bound(n: usize, m: usize, mem: Frac) -> Result<CutsetBound> {
    if n == 0 || m == 0 {
        return Err(Error::Parameter("n and m must be positive".into()));
    }
    if mem <= Frac::zero() || mem > Frac::from_integer(m as i64) {
        return Err(Error::Parameter(format!(
            "cache size M={mem} must satisfy 0 < M <= m={m}"
        )));
    }
    let mut best = None;
    for s in 1..=m.min(n) {
        let whole_files = (m / s) as i64; // floor(m / s)
        let value = Frac::from_integer(s as i64) - Frac::new(s as i64, whole_files) * mem;
        if best.is_none_or(|(v, _)| value > v) {
            best = Some((value, s));
        }
    }
    let (seg_value, seg_s) = best.expect("s range is non-empty");
    let mut bound = CutsetBound {
        value: seg_value.max(Frac::zero()),
        branch: CutsetBranch::SegmentCut { s: seg_s },
        best_segment_s: seg_s,
        single_node: n == 1,
    };
    if n >= 2 {
        let frac_value = Frac::new(n as i64, (n - 1) as i64)
            * (Frac::from_integer(1) - mem / Frac::from_integer(m as i64));
        if frac_value > bound.value {
            bound.value = frac_value;
            bound.branch = CutsetBranch::FractionalCut;
        }
    }
    Ok(bound)
}

// ---------------------------------------------------------------------------
// Gap between achievable and optimal
// ---------------------------------------------------------------------------

/// Upper bound on achievable-rate / optimal-rate (and equally on optimal
/// throughput / achieved throughput) in the integer-t regime:
/// `1 / ( M (1-A) (1 - (1-A) M / A) )` with `A = sqrt(1 - 1/(M+1))`.
///
/// Decreases from about 5.83 at `M = 1` toward 4 as `M` grows.
pub fn gap_upper_bound(mem: f64) -> Result<f64> {
    if mem.is_nan() || mem < 1.0 {
        return Err(Error::Parameter(format!(
            "gap bound requires M >= 1 (got {mem})"
        )));
    }
    let a = (1.0 - 1.0 / (mem + 1.0)).sqrt();
    let denom = mem * (1.0 - a) * (1.0 - (1.0 - a) * mem / a);
    if denom <= 0.0 {
        debug_assert!(false, "gap bound denominator not positive at M={mem}");
        return Err(Error::Range(format!(
            "gap bound inapplicable at M={mem}: denominator {denom} <= 0"
        )));
    }
    Ok(1.0 / denom)
}

// ---------------------------------------------------------------------------
// Throughput bounds
// ---------------------------------------------------------------------------

/// A throughput upper bound, or an explicit statement that the bound is
/// vacuous (its denominator vanished, so it says nothing).
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ThroughputBound {
    Vacuous,
    Finite(f64),
}

/// Throughput upper bound with spatial reuse at transmission range `r`:
/// `C_r * ceil(64 / delta^2) / max_s (s - (s / floor(m/s)) M)` with `s`
/// ranging over `1..=min(m, ceil(pi r^2 n))`.
///
/// `library_within_range` is the caller's assertion that every node can
/// reach a full copy of the library within radius `r` (for squarelet
/// clustering: `g_c * M >= m`); the bound does not apply without it.
pub fn throughput_upper_bound_reuse(
    n: usize,
    m: usize,
    mem: Frac,
    r: f64,
    delta: f64,
    c_r: f64,
    library_within_range: bool,
) -> Result<ThroughputBound> {
    if !library_within_range {
        return Err(Error::Parameter(
            "reuse throughput bound requires the whole library cached within radius r \
             of any node; caller must assert it"
                .into(),
        ));
    }
    if delta <= 0.0 {
        return Err(Error::Parameter("delta must be positive".into()));
    }
    if r.is_nan() || r <= 0.0 || r >= 2f64.sqrt() {
        return Err(Error::Parameter(format!(
            "reuse regime requires 0 < r < sqrt(2) (got r={r})"
        )));
    }
    if c_r <= 0.0 {
        return Err(Error::Parameter("C_r must be positive".into()));
    }
    let s_cap = m.min((std::f64::consts::PI * r * r * n as f64).ceil() as usize);
    let mut best = Frac::zero();
    for s in 1..=s_cap.max(1) {
        let whole_files = (m / s) as i64;
        let v = Frac::from_integer(s as i64) - Frac::new(s as i64, whole_files) * mem;
        if v > best {
            best = v;
        }
    }
    if best <= Frac::zero() {
        return Ok(ThroughputBound::Vacuous);
    }
    let reuse_slots = (64.0 / (delta * delta)).ceil() as i64;
    let exact = Frac::from_integer(reuse_slots) / best;
    Ok(ThroughputBound::Finite(c_r * frac_to_f64(exact)))
}

/// Throughput upper bound when a single link serves the whole network:
/// the link rate divided by the cut-set rate lower bound.
pub fn no_reuse_throughput_bound(n: usize, m: usize, mem: Frac, c: f64) -> Result<ThroughputBound> {
    if c <= 0.0 {
        return Err(Error::Parameter("link rate must be positive".into()));
    }
    let lower = cutset_lower_bound(n, m, mem)?;
    if lower.value <= Frac::zero() {
        return Ok(ThroughputBound::Vacuous);
    }
    Ok(ThroughputBound::Finite(
        c * frac_to_f64(lower.value.recip()),
    ))
}

// ---------------------------------------------------------------------------
// Base-station comparator
// ---------------------------------------------------------------------------

/// Delivery rate of the coded caching scheme when a base station holding
/// every file serves the same users: `n (1 - M/m) / (1 + M n / m)`.
pub fn base_station_rate(n: usize, m: usize, mem: Frac) -> Result<Frac> {
    if n == 0 || m == 0 {
        return Err(Error::Parameter("n and m must be positive".into()));
    }
    if mem < Frac::zero() || mem > Frac::from_integer(m as i64) {
        return Err(Error::Parameter(format!(
            "cache size M={mem} must satisfy 0 <= M <= m={m}"
        )));
    }
    let n_frac = Frac::from_integer(n as i64);
    let m_frac = Frac::from_integer(m as i64);
    Ok(n_frac * (Frac::from_integer(1) - mem / m_frac)
        / (Frac::from_integer(1) + mem * n_frac / m_frac))
}

// ---------------------------------------------------------------------------
// Lower convex envelope
// ---------------------------------------------------------------------------

/// Piecewise-linear lower convex envelope of a point set, evaluable on the
/// x-range spanned by the inputs.
#[derive(Clone, Debug)]
pub struct Envelope {
    vertices: Vec<(Frac, Frac)>,
}

/// Builds the lower convex hull of the given points. Needs at least two
/// distinct x values; for duplicate x only the lowest y participates.
pub fn convex_lower_envelope(points: &[(Frac, Frac)]) -> Result<Envelope> {
    let mut pts = points.to_vec();
    pts.sort();
    pts.dedup_by(|b, a| a.0 == b.0); // sorted, so `a` keeps the smaller y
    if pts.len() < 2 {
        return Err(Error::Parameter(
            "envelope needs at least two points with distinct x".into(),
        ));
    }
    // monotone chain, lower hull
    let mut hull: Vec<(Frac, Frac)> = Vec::new();
    for p in pts {
        while hull.len() >= 2 {
            let a = hull[hull.len() - 2];
            let b = hull[hull.len() - 1];
            let cross = (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0);
            if cross <= Frac::zero() {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    Ok(Envelope { vertices: hull })
}

impl Envelope {
    pub fn vertices(&self) -> &[(Frac, Frac)] {
        &self.vertices
    }

    pub fn x_min(&self) -> Frac {
        self.vertices[0].0
    }

    pub fn x_max(&self) -> Frac {
        self.vertices[self.vertices.len() - 1].0
    }

    /// Evaluates the envelope at `x`, which must lie inside the input
    /// x-range.
    pub fn eval(&self, x: Frac) -> Result<Frac> {
        if x < self.x_min() || x > self.x_max() {
            return Err(Error::Range(format!(
                "x={x} outside envelope domain [{}, {}]",
                self.x_min(),
                self.x_max()
            )));
        }
        let i = self
            .vertices
            .windows(2)
            .position(|w| x <= w[1].0)
            .expect("x within range");
        let (x0, y0) = self.vertices[i];
        let (x1, y1) = self.vertices[i + 1];
        if x == x0 {
            return Ok(y0);
        }
        Ok(y0 + (y1 - y0) * (x - x0) / (x1 - x0))
    }
}

// ---------------------------------------------------------------------------
// Report
// ---------------------------------------------------------------------------

/// One evaluation point: achievable rate against the cut-set lower bound,
/// the measured gap, the analytic gap bound, and the base-station
/// comparator.
#[derive(Clone, Debug, Serialize)]
pub struct BoundReport {
    pub n: usize,
    pub m: usize,
    pub mem: f64,
    pub achievable_rate: f64,
    pub lower_bound: f64,
    /// achievable / lower; absent when the lower bound is zero.
    pub gap_ratio: Option<f64>,
    /// Analytic gap bound; absent outside its regime (needs integer t and
    /// M >= 1).
    pub gap_bound: Option<f64>,
    pub base_station_rate: f64,
}

impl BoundReport {
    pub const CSV_HEADER: &'static str =
        "n,m,M,achievable_rate,lower_bound,gap_ratio,gap_bound,base_station_rate";

    pub fn to_csv_row(&self) -> String {
        let opt = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x}"));
        format!(
            "{},{},{},{},{},{},{},{}",
            self.n,
            self.m,
            self.mem,
            self.achievable_rate,
            self.lower_bound,
            opt(self.gap_ratio),
            opt(self.gap_bound),
            self.base_station_rate
        )
    }
}

/// Evaluates every bound at one `(n, m, M)` point.
pub fn bound_report(n: usize, m: usize, mem: Frac) -> Result<BoundReport> {
    let achievable = crate::cache::achievable_rate(n, m, mem)?;
    let lower = cutset_lower_bound(n, m, mem)?;
    let t = mem * Frac::from_integer(n as i64) / Frac::from_integer(m as i64);
    let gap_bound = if t.is_integer() && mem >= Frac::from_integer(1) {
        Some(gap_upper_bound(frac_to_f64(mem))?)
    } else {
        None
    };
    let gap_ratio = if lower.value.is_positive() {
        Some(frac_to_f64(achievable / lower.value))
    } else {
        None
    };
    Ok(BoundReport {
        n,
        m,
        mem: frac_to_f64(mem),
        achievable_rate: frac_to_f64(achievable),
        lower_bound: frac_to_f64(lower.value),
        gap_ratio,
        gap_bound,
        base_station_rate: frac_to_f64(base_station_rate(n, m, mem)?),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frac(n: i64, d: i64) -> Frac {
        Frac::new(n, d)
    }

    /// Longhand re-derivation of the cut-set maximum, used as an oracle.
    fn cutset_oracle(n: usize, m: usize, mem: Frac) -> Frac {
        let mut best = Frac::zero();
        for s in 1..=m.min(n) {
            let v = Frac::from_integer(s as i64) - Frac::new(s as i64, (m / s) as i64) * mem;
            best = best.max(v);
        }
        if n >= 2 {
            let v = Frac::new(n as i64, n as i64 - 1)
                * (Frac::from_integer(1) - mem / Frac::from_integer(m as i64));
            best = best.max(v);
        }
        best
    }

    #[test]
    fn cutset_three_users_two_files_cached() {
        let b = cutset_lower_bound(3, 3, frac(2, 1)).unwrap();
        assert_eq!(b.value, frac(1, 2));
        assert_eq!(b.branch, CutsetBranch::FractionalCut);
        assert_eq!(b.value, cutset_oracle(3, 3, frac(2, 1)));
    }

    #[test]
    fn cutset_full_caching_is_zero() {
        for (n, m) in [(2, 2), (3, 3), (5, 4)] {
            let b = cutset_lower_bound(n, m, Frac::from_integer(m as i64)).unwrap();
            assert_eq!(b.value, Frac::zero(), "n={n}, m={m}");
        }
    }

    #[test]
    fn cutset_single_file_cached() {
        let b = cutset_lower_bound(3, 3, frac(1, 1)).unwrap();
        assert_eq!(b.value, frac(1, 1));
        assert_eq!(b.branch, CutsetBranch::FractionalCut);
        assert_eq!(b.value, cutset_oracle(3, 3, frac(1, 1)));
    }

    #[test]
    fn cutset_segment_branch_can_win() {
        // s = 2 yields 2 - 2/floor(4/2) = 1, beating (5/4)(1 - 1/4)
        let b = cutset_lower_bound(5, 4, frac(1, 1)).unwrap();
        assert_eq!(b.value, frac(1, 1));
        assert_eq!(b.value, cutset_oracle(5, 4, frac(1, 1)));
        assert_eq!(b.branch, CutsetBranch::SegmentCut { s: 2 });
    }

    #[test]
    fn cutset_single_node_warns() {
        let b = cutset_lower_bound(1, 1, frac(1, 2)).unwrap();
        assert!(b.single_node);
        assert_eq!(b.value, frac(1, 2)); // s = 1 branch only
    }

    /// Algebraically rearranged form of the gap bound, as a second route:
    /// `A / ( M (1-A) (A - (1-A) M) )`.
    fn gap_oracle(mem: f64) -> f64 {
        let a = (1.0 - 1.0 / (mem + 1.0)).sqrt();
        a / (mem * (1.0 - a) * (a - (1.0 - a) * mem))
    }

    #[test]
    fn gap_bound_constants() {
        let g1 = gap_upper_bound(1.0).unwrap();
        assert!((g1 - 5.8284).abs() < 1e-3, "gap(1) = {g1}");
        assert!((g1 - gap_oracle(1.0)).abs() < 1e-9);

        let g2 = gap_upper_bound(2.0).unwrap();
        assert!((g2 - 4.9495).abs() < 1e-3, "gap(2) = {g2}");
        assert!((g2 - gap_oracle(2.0)).abs() < 1e-9);

        let big = gap_upper_bound(1e6).unwrap();
        assert!((big - 4.0).abs() < 1e-2, "gap(1e6) = {big}");
    }

    #[test]
    fn gap_bound_monotone_toward_four() {
        let mut prev = f64::INFINITY;
        for mem in [1.0, 2.0, 3.0, 5.0, 10.0, 100.0, 1e4, 1e6] {
            let g = gap_upper_bound(mem).unwrap();
            assert!(g < prev, "gap not decreasing at M={mem}");
            assert!(g > 4.0, "gap dipped below its limit at M={mem}");
            prev = g;
        }
    }

    #[test]
    fn gap_bound_rejects_small_cache() {
        assert!(gap_upper_bound(0.5).is_err());
    }

    #[test]
    fn reuse_throughput_bound_examples() {
        let r = 2f64.sqrt() - 1e-9;
        let b = throughput_upper_bound_reuse(3, 3, frac(2, 1), r, 1.0, 1.0, true).unwrap();
        assert_eq!(b, ThroughputBound::Finite(192.0));

        let vac = throughput_upper_bound_reuse(3, 3, frac(3, 1), r, 1.0, 1.0, true).unwrap();
        assert_eq!(vac, ThroughputBound::Vacuous);

        // independent evaluation: ceil(64/0.25) = 256 over the best of
        // s - (s/floor(10/s)) for s in 1..=min(10, ceil(pi*0.09*100))
        let mut best = 0.0f64;
        for s in 1..=10u32 {
            let v = s as f64 - s as f64 / (10 / s) as f64;
            best = best.max(v);
        }
        let expected = 256.0 / best;
        match throughput_upper_bound_reuse(100, 10, frac(1, 1), 0.3, 0.5, 1.0, true).unwrap() {
            ThroughputBound::Finite(v) => assert!((v - expected).abs() < 1e-9, "{v}"),
            other => panic!("unexpected {other:?}"),
        }
        assert!((expected - 102.4).abs() < 1e-9);
    }

    #[test]
    fn reuse_throughput_bound_requires_assertion_and_regime() {
        let err = throughput_upper_bound_reuse(3, 3, frac(2, 1), 1.0, 1.0, 1.0, false);
        assert!(err.is_err());
        assert!(throughput_upper_bound_reuse(3, 3, frac(2, 1), 1.5, 1.0, 1.0, true).is_err());
        assert!(throughput_upper_bound_reuse(3, 3, frac(2, 1), 1.0, 0.0, 1.0, true).is_err());
    }

    #[test]
    fn no_reuse_throughput_bound_examples() {
        assert_eq!(
            no_reuse_throughput_bound(3, 3, frac(2, 1), 1.0).unwrap(),
            ThroughputBound::Finite(2.0)
        );
        assert_eq!(
            no_reuse_throughput_bound(3, 3, frac(3, 1), 1.0).unwrap(),
            ThroughputBound::Vacuous
        );
        assert_eq!(
            no_reuse_throughput_bound(3, 3, frac(1, 1), 2.0).unwrap(),
            ThroughputBound::Finite(2.0)
        );
    }

    #[test]
    fn base_station_rate_examples() {
        assert_eq!(base_station_rate(3, 3, frac(2, 1)).unwrap(), frac(1, 3));
        assert_eq!(base_station_rate(4, 4, frac(4, 1)).unwrap(), Frac::zero());
        let d2d = crate::cache::achievable_rate(3, 3, frac(2, 1)).unwrap();
        let bs = base_station_rate(3, 3, frac(2, 1)).unwrap();
        assert_eq!(d2d / bs, frac(3, 2));
    }

    #[test]
    fn base_station_never_beats_served_network() {
        // a server with every file needs no more transmissions than the
        // peer-to-peer scheme; a violation would be an implementation bug
        for n in 1..=6usize {
            for m in 1..=6usize {
                for mem in 1..=m {
                    let mem = Frac::from_integer(mem as i64);
                    if mem * Frac::from_integer(n as i64) < Frac::from_integer(m as i64) {
                        continue;
                    }
                    let d2d = crate::cache::achievable_rate(n, m, mem).unwrap();
                    let bs = base_station_rate(n, m, mem).unwrap();
                    assert!(bs <= d2d, "n={n} m={m} M={mem}: bs={bs} > d2d={d2d}");
                }
            }
        }
    }

    /// Brute-force envelope value at x: the minimum over every pair of
    /// points whose x-range covers x of the line through the pair.
    fn envelope_oracle(points: &[(Frac, Frac)], x: Frac) -> Frac {
        let mut best: Option<Frac> = None;
        for (i, &(x0, y0)) in points.iter().enumerate() {
            if x0 == x && best.is_none_or(|b| y0 < b) {
                best = Some(y0);
            }
            for &(x1, y1) in &points[i + 1..] {
                let (lo, hi) = if x0 < x1 { (x0, x1) } else { (x1, x0) };
                if lo <= x && x <= hi && lo != hi {
                    let y = y0 + (y1 - y0) * (x - x0) / (x1 - x0);
                    if best.is_none_or(|b| y < b) {
                        best = Some(y);
                    }
                }
            }
        }
        best.expect("x covered by some pair")
    }

    #[test]
    fn envelope_examples() {
        let pts = [
            (frac(1, 1), frac(2, 1)),
            (frac(2, 1), frac(1, 2)),
            (frac(3, 1), frac(0, 1)),
        ];
        let env = convex_lower_envelope(&pts).unwrap();
        assert_eq!(env.vertices().len(), 3); // already convex
        assert_eq!(env.eval(frac(3, 2)).unwrap(), frac(5, 4));
        assert_eq!(
            env.eval(frac(3, 2)).unwrap(),
            envelope_oracle(&pts, frac(3, 2))
        );

        let collinear = [
            (frac(0, 1), frac(0, 1)),
            (frac(1, 1), frac(1, 1)),
            (frac(2, 1), frac(2, 1)),
        ];
        let env = convex_lower_envelope(&collinear).unwrap();
        assert_eq!(env.eval(frac(1, 1)).unwrap(), frac(1, 1));

        let bump = [
            (frac(0, 1), frac(2, 1)),
            (frac(1, 1), frac(3, 1)),
            (frac(2, 1), frac(0, 1)),
        ];
        let env = convex_lower_envelope(&bump).unwrap();
        assert_eq!(env.vertices().len(), 2, "interior vertex must drop out");
        assert_eq!(env.eval(frac(1, 1)).unwrap(), frac(1, 1));
        assert_eq!(
            env.eval(frac(1, 1)).unwrap(),
            envelope_oracle(&bump, frac(1, 1))
        );
    }

    #[test]
    fn envelope_range_and_arity_errors() {
        let pts = [(frac(0, 1), frac(0, 1)), (frac(1, 1), frac(1, 1))];
        let env = convex_lower_envelope(&pts).unwrap();
        assert!(matches!(env.eval(frac(3, 1)), Err(Error::Range(_))));
        assert!(convex_lower_envelope(&pts[..1]).is_err());
    }

    #[test]
    fn envelope_matches_achievable_rate_interpolation() {
        // independent route to the memory-sharing rate: hull through the
        // integer-t operating points, evaluated at fractional M
        for (n, m) in [(3usize, 3usize), (4, 2), (5, 5), (6, 4)] {
            let points: Vec<(Frac, Frac)> = (1..=n)
                .map(|t| {
                    (
                        Frac::new((t * m) as i64, n as i64),
                        Frac::new((n - t) as i64, t as i64),
                    )
                })
                .collect();
            let env = convex_lower_envelope(&points).unwrap();
            for num in 1..=4 * m {
                let mem = Frac::new(num as i64, 4);
                if mem * Frac::from_integer(n as i64) < Frac::from_integer(m as i64)
                    || mem > Frac::from_integer(m as i64)
                {
                    continue;
                }
                let direct = crate::cache::achievable_rate(n, m, mem).unwrap();
                let via_env = env.eval(mem).unwrap();
                assert_eq!(direct, via_env, "n={n} m={m} M={mem}");
            }
        }
    }

    #[test]
    fn report_fields_consistent() {
        let rep = bound_report(3, 3, frac(2, 1)).unwrap();
        assert_eq!(rep.achievable_rate, 0.5);
        assert_eq!(rep.lower_bound, 0.5);
        assert_eq!(rep.gap_ratio, Some(1.0));
        assert!(rep.gap_bound.unwrap() > 4.0);
        assert!((rep.base_station_rate - 1.0 / 3.0).abs() < 1e-12);
        let row = rep.to_csv_row();
        assert!(row.starts_with("3,3,2,0.5,0.5,1,"));
    }
}
