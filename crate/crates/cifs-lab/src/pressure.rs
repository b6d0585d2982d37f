//! Pressure sums over truncated word spaces, series divergence probes, and
//! Bowen-root dimension estimates.
//!
//! The finite pressure sum is `psi^n(t) = sum over words w of length n of
//! (sup over X of |phi_w'|)^t`. Sums run in enumeration order with
//! compensated accumulation, split across first letters for parallelism, and
//! merged in letter order so results are independent of thread count.

use rayon::prelude::*;

use crate::cifs::{generator_derivative_range, word_space_size, SystemConfig};
use crate::error::{Error, Result};
use crate::geometry::TauParam;
use crate::lattice::enumerate_indices;
use crate::sum::Compensated;

/// Cap on `|I|^length` for pressure evaluations; the per-word sup norms are
/// cached (8 bytes each) so bisection reuses them.
pub const PRESSURE_WORD_CAP: u128 = 1 << 26;

/// Admissible exponent window for pressure sums.
pub const T_MAX: f64 = 4.0;

fn check_t(t: f64) -> Result<()> {
    if !(0.0..=T_MAX).contains(&t) || !t.is_finite() {
        return Err(Error::domain(format!("exponent t={t} outside [0, {T_MAX}]")));
    }
    Ok(())
}

/// Per-word sup norms of a truncated word space, in enumeration order.
/// Building the cache costs one pass; every `psi` evaluation afterwards is a
/// single powf-and-sum sweep.
pub struct WordSupCache {
    tau: TauParam,
    truncation_bound: f64,
    word_length: u32,
    sups: Vec<f64>,
    group_size: usize,
}

impl WordSupCache {
    pub fn build(tau: TauParam, truncation_bound: f64, word_length: u32) -> Result<WordSupCache> {
        if word_length == 0 {
            return Err(Error::domain("word_length must be >= 1"));
        }
        let set = enumerate_indices(tau, truncation_bound)?;
        let total = word_space_size(set.len(), word_length, PRESSURE_WORD_CAP)? as usize;
        let group_size = total / set.len();
        let mut sups = vec![0.0_f64; total];
        if word_length == 1 {
            for (slot, &b) in sups.iter_mut().zip(set.points()) {
                *slot = generator_derivative_range(b).max;
            }
        } else {
            // one contiguous block per first letter; fill blocks in parallel
            let set_ref = &set;
            sups.par_chunks_mut(group_size)
                .enumerate()
                .for_each(|(first, block)| {
                    let mut k = 0;
                    for_each_word_with_first(set_ref, word_length as usize, first as u32, |map| {
                        block[k] = crate::cifs::derivative_range(map)
                            .expect("poles of admissible words stay outside X")
                            .max;
                        k += 1;
                    });
                    debug_assert_eq!(k, block.len());
                });
        }
        Ok(WordSupCache {
            tau,
            truncation_bound,
            word_length,
            sups,
            group_size,
        })
    }

    pub fn word_count(&self) -> usize {
        self.sups.len()
    }

    /// `psi(t)`: compensated sum of `sup^t` over fixed-size chunks, merged
    /// in enumeration order regardless of thread count.
    pub fn value(&self, t: f64) -> Result<f64> {
        check_t(t)?;
        let partials: Vec<Compensated> = self
            .sups
            .par_chunks(self.group_size.max(1024))
            .map(|block| {
                let mut acc = Compensated::new();
                for &s in block {
                    acc.add(s.powf(t));
                }
                acc
            })
            .collect();
        let mut total = Compensated::new();
        for p in partials {
            total.merge(p);
        }
        Ok(total.value())
    }

    pub fn sample(&self, t: f64) -> Result<PressureSample> {
        Ok(PressureSample {
            tau: self.tau,
            t,
            truncation_bound: self.truncation_bound,
            word_length: self.word_length,
            value: self.value(t)?,
        })
    }
}

/// Odometer over words with a fixed first letter (helper for parallel block
/// fills); visits composed matrices in enumeration order.
fn for_each_word_with_first<F>(
    set: &crate::lattice::IndexSet,
    length: usize,
    first: u32,
    mut visit: F,
) where
    F: FnMut(&crate::cifs::MoebiusMap),
{
    let head = crate::cifs::generator(set.tau(), set.get(first as usize));
    if length == 1 {
        visit(&head);
        return;
    }
    let tail_len = length - 1;
    let gens: Vec<crate::cifs::MoebiusMap> = set
        .indices()
        .iter()
        .map(|&i| crate::cifs::generator(set.tau(), i))
        .collect();
    let n = gens.len();
    let mut digits = vec![0u32; tail_len];
    let mut prefix = vec![head; tail_len + 1];
    loop {
        for k in 0..tail_len {
            prefix[k + 1] = prefix[k].after(&gens[digits[k] as usize]);
        }
        visit(&prefix[tail_len]);
        let mut pos = tail_len;
        loop {
            if pos == 0 {
                return;
            }
            pos -= 1;
            digits[pos] += 1;
            if (digits[pos] as usize) < n {
                break;
            }
            digits[pos] = 0;
        }
    }
}

/// One evaluation of the finite pressure sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PressureSample {
    pub tau: TauParam,
    pub t: f64,
    pub truncation_bound: f64,
    pub word_length: u32,
    pub value: f64,
}

/// `psi^n(t)` over the truncation `|b| <= truncation_bound`.
pub fn psi(tau: TauParam, t: f64, truncation_bound: f64, word_length: u32) -> Result<PressureSample> {
    check_t(t)?;
    WordSupCache::build(tau, truncation_bound, word_length)?.sample(t)
}

/// Verdict of a partial-sum divergence probe.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThetaVerdict {
    Converges,
    Diverges,
    Indeterminate,
}

/// Partial sums of `sum |b|-truncated sup^t` along a growing bound grid, with
/// a tail-behavior verdict.
#[derive(Debug, Clone)]
pub struct ThetaProbe {
    pub t: f64,
    pub verdict: ThetaVerdict,
    /// `(bound, partial sum)` per grid entry.
    pub partial_sums: Vec<(f64, f64)>,
    /// Fitted log-log slope of increments against bound, when enough
    /// positive increments exist.
    pub increment_slope: Option<f64>,
}

/// Increment slope at or below which the tail is judged summable.
pub const THETA_SLOPE_CONVERGE: f64 = -0.5;
/// Increment slope above which the tail is judged non-decaying.
pub const THETA_SLOPE_FLAT: f64 = -0.05;
/// Growth over the last doubling of the bound that signals divergence.
pub const THETA_DOUBLING_TOL: f64 = 1e-3;

/// Probes the one-letter series `sum over all b of sup^t` by walking partial
/// sums along `bound_grid`.
///
/// Heuristic verdict: fit the log-log slope of partial-sum increments over
/// the last (up to five) grid steps. Slope at most [`THETA_SLOPE_CONVERGE`]
/// reads as geometric decay (converges); slope above [`THETA_SLOPE_FLAT`]
/// with visible growth over the last doubling reads as divergence; anything
/// between, or too little evidence, is indeterminate.
pub fn theta_probe(tau: TauParam, t: f64, bound_grid: &[f64]) -> Result<ThetaProbe> {
    check_t(t)?;
    if bound_grid.len() < 2 {
        return Err(Error::domain("bound grid needs at least two entries"));
    }
    for pair in bound_grid.windows(2) {
        if !(pair[0] < pair[1]) {
            return Err(Error::domain("bound grid must be strictly increasing"));
        }
    }
    if !(bound_grid[0] > 0.0) {
        return Err(Error::domain("bound grid must be positive"));
    }
    let top = *bound_grid.last().unwrap();
    let set = enumerate_indices(tau, top)?;
    // points are sorted by modulus, so each partial sum is a prefix sum
    let mut partial_sums = Vec::with_capacity(bound_grid.len());
    let mut acc = Compensated::new();
    let mut next = 0usize;
    for &bound in bound_grid {
        let bound_sq = bound * bound;
        while next < set.len() {
            let b = set.point(next);
            if !crate::lattice::le_banded(b.norm_sqr(), bound_sq) {
                break;
            }
            acc.add(generator_derivative_range(b).max.powf(t));
            next += 1;
        }
        partial_sums.push((bound, acc.value()));
    }

    let (verdict, increment_slope) = classify_tail(&partial_sums);
    Ok(ThetaProbe {
        t,
        verdict,
        partial_sums,
        increment_slope,
    })
}

fn classify_tail(partial_sums: &[(f64, f64)]) -> (ThetaVerdict, Option<f64>) {
    // increments between consecutive grid bounds, placed at the geometric
    // midpoint of the interval
    let mut pts: Vec<(f64, f64)> = Vec::new();
    for pair in partial_sums.windows(2) {
        let delta = pair[1].1 - pair[0].1;
        if delta > 0.0 {
            pts.push(((pair[0].0 * pair[1].0).sqrt().ln(), delta.ln()));
        }
    }
    let tail = if pts.len() > 5 {
        &pts[pts.len() - 5..]
    } else {
        &pts[..]
    };
    let slope = if tail.len() >= 2 {
        let n = tail.len() as f64;
        let mx = tail.iter().map(|p| p.0).sum::<f64>() / n;
        let my = tail.iter().map(|p| p.1).sum::<f64>() / n;
        let sxx: f64 = tail.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
        let sxy: f64 = tail.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        (sxx > 0.0).then(|| sxy / sxx)
    } else {
        None
    };

    if let Some(s) = slope {
        if s <= THETA_SLOPE_CONVERGE {
            return (ThetaVerdict::Converges, slope);
        }
        if s <= THETA_SLOPE_FLAT {
            return (ThetaVerdict::Indeterminate, slope);
        }
    }
    // no decay visible: check growth over the last doubling of the bound
    let (last_bound, last_sum) = *partial_sums.last().unwrap();
    let half = partial_sums
        .iter()
        .rev()
        .find(|(b, _)| *b <= last_bound / 2.0);
    match half {
        Some(&(_, half_sum)) if last_sum - half_sum > THETA_DOUBLING_TOL => {
            (ThetaVerdict::Diverges, slope)
        }
        Some(_) => (ThetaVerdict::Indeterminate, slope),
        None => (ThetaVerdict::Indeterminate, slope),
    }
}

/// Converged Bowen-root estimate: the `t` where the finite pressure sum
/// crosses 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DimensionEstimate {
    pub tau: TauParam,
    pub truncation_bound: f64,
    pub word_length: u32,
    /// Root of `psi^n(t) = 1`.
    pub h: f64,
    /// Final bisection bracket around the root.
    pub bracket: (f64, f64),
    /// `|psi(h) - 1|` at the returned root.
    pub residual: f64,
}

/// Bisects `psi^n(t) = 1` on `[1, 2]`. The sum is strictly decreasing in
/// `t`, so `psi(1) > 1 > psi(2)` brackets a unique root.
pub fn bowen_root(
    tau: TauParam,
    truncation_bound: f64,
    word_length: u32,
    tol: f64,
) -> Result<DimensionEstimate> {
    if !(tol > 0.0) || !tol.is_finite() {
        return Err(Error::domain("tolerance must be positive"));
    }
    let cache = WordSupCache::build(tau, truncation_bound, word_length)?;
    bowen_root_cached(&cache, tol)
}

/// Same as [`bowen_root`], reusing an existing sup-norm cache.
pub fn bowen_root_cached(cache: &WordSupCache, tol: f64) -> Result<DimensionEstimate> {
    let (mut lo, mut hi) = (1.0_f64, 2.0_f64);
    let psi_lo = cache.value(lo)?;
    let psi_hi = cache.value(hi)?;
    if !(psi_lo > 1.0 && psi_hi < 1.0) {
        return Err(Error::NoBracket {
            t_lo: lo,
            t_hi: hi,
            psi_lo,
            psi_hi,
        });
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break; // bracket is one ulp wide; no further progress possible
        }
        let val = cache.value(mid)?;
        let residual = (val - 1.0).abs();
        if residual <= tol {
            return Ok(DimensionEstimate {
                tau: cache.tau,
                truncation_bound: cache.truncation_bound,
                word_length: cache.word_length,
                h: mid,
                bracket: (lo, hi),
                residual,
            });
        }
        if val > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::estimation(format!(
        "bisection stalled before reaching residual {tol}"
    )))
}

/// Two-sided submultiplicativity slack of the pressure sums.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubmultiplicativityReport {
    pub t: f64,
    pub psi_m: f64,
    pub psi_n: f64,
    pub psi_m_plus_n: f64,
    /// Empirical distortion bound used for the lower inequality.
    pub k_hat: f64,
    /// `psi_m * psi_n - psi_{m+n}`; nonnegative up to rounding.
    pub upper_slack: f64,
    /// `psi_{m+n} - k_hat^{-2t} psi_m psi_n`; nonnegative up to rounding.
    pub lower_slack: f64,
}

impl SubmultiplicativityReport {
    /// Rounding slack allowed on both inequalities, relative to the products.
    pub const REL_TOL: f64 = 1e-9;

    pub fn upper_ok(&self) -> bool {
        self.upper_slack >= -Self::REL_TOL * self.psi_m * self.psi_n
    }

    pub fn lower_ok(&self) -> bool {
        self.lower_slack >= -Self::REL_TOL * self.psi_m * self.psi_n
    }
}

/// Checks `psi^{m+n} <= psi^m psi^n` and the distortion-compensated reverse
/// inequality `k_hat^{-2t} psi^m psi^n <= psi^{m+n}`, with `k_hat` measured
/// by an exhaustive-or-sampled distortion audit at length `max(m, n)`.
pub fn submultiplicativity_audit(
    tau: TauParam,
    t: f64,
    truncation_bound: f64,
    m: u32,
    n: u32,
) -> Result<SubmultiplicativityReport> {
    check_t(t)?;
    if m == 0 || n == 0 {
        return Err(Error::domain("word lengths must be >= 1"));
    }
    let psi_m = psi(tau, t, truncation_bound, m)?.value;
    let psi_n = psi(tau, t, truncation_bound, n)?.value;
    let psi_m_plus_n = psi(tau, t, truncation_bound, m + n)?.value;
    let config = SystemConfig::new(tau, truncation_bound, m.max(n))?;
    let k_hat = crate::cifs::distortion_audit(&config, m.max(n), 0x5eed)?.k_hat;
    let product = psi_m * psi_n;
    Ok(SubmultiplicativityReport {
        t,
        psi_m,
        psi_n,
        psi_m_plus_n,
        k_hat,
        upper_slack: product - psi_m_plus_n,
        lower_slack: psi_m_plus_n - k_hat.powf(-2.0 * t) * product,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tau_i() -> TauParam {
        TauParam::new(0.0, 1.0).unwrap()
    }

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    /// Closed-form length-1 sup norms for tau = i, truncation {m, n <= 2}.
    fn four_term_sups() -> Vec<f64> {
        // b in {1+i, 1+2i, 2+i, 2+2i}
        [(1.0, 1.0), (1.0, 2.0), (2.0, 1.0), (2.0, 2.0)]
            .iter()
            .map(|&(m, n)| {
                let dist = ((m + 0.5) * (m + 0.5) + n * n as f64).sqrt();
                1.0 / ((dist - 0.5) * (dist - 0.5))
            })
            .collect()
    }

    #[test]
    fn psi_matches_four_term_oracle() {
        // truncation bound 2.9 keeps exactly {m, n <= 2} for tau = i
        let sample = psi(tau_i(), 2.0, 2.9, 1).unwrap();
        let oracle: f64 = four_term_sups().iter().map(|s| s * s).sum();
        assert_close(sample.value, oracle, 1e-12);
        assert_close(sample.value, 0.4718, 5e-4);
        assert_eq!(sample.word_length, 1);
    }

    #[test]
    fn psi_level_two_matches_direct_enumeration() {
        use crate::cifs::{compose, derivative_range, Word};
        use crate::lattice::enumerate_indices;
        let set = enumerate_indices(tau_i(), 5.0).unwrap();
        let t = 1.3;
        let mut oracle = 0.0;
        for &i in set.indices() {
            for &j in set.indices() {
                let word = Word::new(tau_i(), vec![i, j]).unwrap();
                oracle += derivative_range(&compose(&word)).unwrap().max.powf(t);
            }
        }
        let sample = psi(tau_i(), t, 5.0, 2).unwrap();
        assert!(
            (sample.value - oracle).abs() <= 1e-11 * oracle,
            "{} vs {}",
            sample.value,
            oracle
        );
    }

    #[test]
    fn psi_is_order_independent() {
        // compensated, chunked sum vs the same terms in reversed order
        let cache = WordSupCache::build(tau_i(), 30.0, 1).unwrap();
        let value = cache.value(1.1).unwrap();
        let mut terms: Vec<f64> = crate::lattice::enumerate_indices(tau_i(), 30.0)
            .unwrap()
            .points()
            .iter()
            .map(|&b| generator_derivative_range(b).max.powf(1.1))
            .collect();
        terms.reverse();
        let reversed: f64 = terms.iter().sum();
        assert!((value - reversed).abs() <= 1e-12 * value.max(1.0));
    }

    #[test]
    fn psi_decreases_in_t() {
        let cache = WordSupCache::build(tau_i(), 10.0, 2).unwrap();
        let mut prev = f64::INFINITY;
        for t in [0.0, 0.5, 1.0, 1.5, 2.0] {
            let val = cache.value(t).unwrap();
            assert!(val < prev);
            prev = val;
        }
    }

    #[test]
    fn psi_rejects_bad_exponent_and_huge_word_spaces() {
        assert!(matches!(psi(tau_i(), -0.1, 5.0, 1), Err(Error::Domain(_))));
        assert!(matches!(psi(tau_i(), 4.1, 5.0, 1), Err(Error::Domain(_))));
        assert!(matches!(
            psi(tau_i(), 1.0, 200.0, 4),
            Err(Error::Resource { .. })
        ));
    }

    #[test]
    fn theta_probe_verdicts() {
        let grid = [16.0, 32.0, 64.0, 128.0, 256.0, 512.0];
        let diverge = theta_probe(tau_i(), 1.0, &grid).unwrap();
        assert_eq!(diverge.verdict, ThetaVerdict::Diverges);
        let diverge0 = theta_probe(tau_i(), 0.0, &grid).unwrap();
        assert_eq!(diverge0.verdict, ThetaVerdict::Diverges);
        let converge = theta_probe(tau_i(), 1.5, &grid).unwrap();
        assert_eq!(converge.verdict, ThetaVerdict::Converges);
        assert!(converge.increment_slope.unwrap() < -0.5);
        // partial sums must agree with single-shot evaluations at each bound
        for &(bound, sum) in &diverge.partial_sums {
            let direct = psi(tau_i(), 1.0, bound, 1).unwrap().value;
            assert!((sum - direct).abs() <= 1e-12 * direct);
        }
    }

    #[test]
    fn theta_probe_near_threshold_is_indeterminate() {
        let grid = [16.0, 32.0, 64.0, 128.0, 256.0, 512.0];
        let probe = theta_probe(tau_i(), 1.1, &grid).unwrap();
        assert_eq!(probe.verdict, ThetaVerdict::Indeterminate);
    }

    #[test]
    fn theta_probe_with_no_new_terms_is_indeterminate() {
        // both bounds trap the same single index; no tail evidence
        let probe = theta_probe(tau_i(), 1.5, &[2.0, 2.2]).unwrap();
        assert_eq!(probe.verdict, ThetaVerdict::Indeterminate);
        assert_eq!(probe.partial_sums[0].1, probe.partial_sums[1].1);
    }

    #[test]
    fn bowen_root_four_term_truncation() {
        let est = bowen_root(tau_i(), 2.9, 1, 1e-9).unwrap();
        assert!(est.residual <= 1e-9);
        assert!(est.h > 1.0 && est.h < 2.0);
        // independent oracle: bisect the closed-form four-term sum
        let sups = four_term_sups();
        let f = |t: f64| sups.iter().map(|s| s.powf(t)).sum::<f64>() - 1.0;
        let (mut lo, mut hi) = (1.0, 2.0);
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if f(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert_close(est.h, lo, 1e-9);
        assert_close(est.h, 1.1631, 1e-3);
    }

    #[test]
    fn bowen_root_grows_with_truncation() {
        let small = bowen_root(tau_i(), 5.0, 2, 1e-9).unwrap();
        let large = bowen_root(tau_i(), 10.0, 2, 1e-9).unwrap();
        assert!(large.h >= small.h - 1e-9);
        // larger alphabets make larger sums, hence larger roots
        assert!(large.h > small.h);
    }

    #[test]
    fn bowen_root_needs_bracket() {
        // tau = 3i with only one index: psi(1) < 1 already
        let tau = TauParam::new(0.0, 3.0).unwrap();
        let err = bowen_root(tau, 3.5, 1, 1e-9).unwrap_err();
        assert!(matches!(err, Error::NoBracket { .. }));
    }

    #[test]
    fn submultiplicativity_brackets_hold() {
        for &t in &[0.0, 1.2] {
            let report = submultiplicativity_audit(tau_i(), t, 5.0, 1, 1).unwrap();
            assert!(report.upper_ok(), "upper slack {}", report.upper_slack);
            assert!(report.lower_ok(), "lower slack {}", report.lower_slack);
        }
        // t = 0 counts words: psi^{m+n} = psi^m psi^n exactly
        let count = submultiplicativity_audit(tau_i(), 0.0, 5.0, 1, 2).unwrap();
        assert!(count.upper_slack.abs() <= 1e-9 * count.psi_m * count.psi_n);
    }
}
