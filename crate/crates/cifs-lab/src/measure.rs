//! Cylinder measures: normalized `|phi_w'(0)|^h` weights over truncated word
//! spaces, with rigorous lower/upper brackets for ball masses, packing
//! constants, index-set constructions around a ball, and mass-to-radius
//! scans.
//!
//! Words of a fixed level are stored as one flat table in enumeration order
//! (first letter slowest), so the words sharing a first letter form one
//! contiguous block. Ball queries prune whole blocks against the level-1
//! image disk with a conservative margin and stream only boundary blocks.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::cifs::{
    derivative_at_zero, derivative_range, generator, image_disk, word_space_size, MoebiusMap, Word,
};
use crate::error::{Error, Result};
use crate::geometry::{spectral_data, Disk, TauParam};
use crate::lattice::{enumerate_indices, lt_banded, IndexSet, LatticeIndex};
use crate::sum::Compensated;

/// Cap on `|I|^level` for measure tables (48 bytes per word).
pub const MEASURE_WORD_CAP: u128 = 1 << 25;

/// Geometric margin for whole-block pruning in ball queries. Blocks farther
/// outside or deeper inside the ball than this margin bypass the per-word
/// predicates; the margin dwarfs disk-arithmetic rounding, so pruned and
/// streamed classifications agree.
pub const PRUNE_MARGIN: f64 = 1e-6;

#[derive(Debug, Clone, Copy)]
struct WordData {
    low: f64,
    mid: f64,
    high: f64,
    cx: f64,
    cy: f64,
    radius: f64,
}

/// Normalized cylinder weights of every word of one level, with their exact
/// image disks.
///
/// `mid` weights are `|phi_w'(0)|^h / Z` and sum to 1; `low`/`high` replace
/// the derivative at 0 by its inf/sup over `X`, bracketing the weight any
/// conformal density of exponent `h` can give the cylinder.
pub struct CylinderMeasure {
    set: IndexSet,
    h: f64,
    level: u32,
    words: Vec<WordData>,
    /// Words per first-letter block: `set.len()^(level-1)`.
    stride: usize,
    group_low: Vec<f64>,
    group_mid: Vec<f64>,
    group_high: Vec<f64>,
    level1_disks: Vec<Disk>,
    total_low: f64,
    total_high: f64,
}

impl CylinderMeasure {
    pub fn tau(&self) -> TauParam {
        self.set.tau()
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn index_set(&self) -> &IndexSet {
        &self.set
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// Letters of word `i` as positions into the index set.
    pub fn word_positions(&self, i: usize) -> Vec<u32> {
        let n = self.set.len();
        let mut digits = vec![0u32; self.level as usize];
        let mut rest = i;
        for k in (0..self.level as usize).rev() {
            digits[k] = (rest % n) as u32;
            rest /= n;
        }
        digits
    }

    pub fn word(&self, i: usize) -> Word {
        let letters = self
            .word_positions(i)
            .iter()
            .map(|&p| self.set.get(p as usize))
            .collect();
        Word::new(self.set.tau(), letters).expect("level >= 1")
    }

    pub fn weight_low(&self, i: usize) -> f64 {
        self.words[i].low
    }

    pub fn weight_mid(&self, i: usize) -> f64 {
        self.words[i].mid
    }

    pub fn weight_high(&self, i: usize) -> f64 {
        self.words[i].high
    }

    /// Exact image disk `phi_w(X)` of word `i`.
    pub fn image(&self, i: usize) -> Disk {
        Disk {
            center: Complex64::new(self.words[i].cx, self.words[i].cy),
            radius: self.words[i].radius,
        }
    }

    /// Sum of `mid` weights over the block of words starting with the letter
    /// at position `g`.
    pub fn group_mid(&self, g: usize) -> f64 {
        self.group_mid[g]
    }

    pub fn group_low(&self, g: usize) -> f64 {
        self.group_low[g]
    }

    pub fn group_high(&self, g: usize) -> f64 {
        self.group_high[g]
    }

    /// Level-1 image disk of the letter at position `g`; contains every image
    /// disk in that block.
    pub fn level1_disk(&self, g: usize) -> Disk {
        self.level1_disks[g]
    }
}

/// Builds the cylinder measure of the given level over the truncation
/// `|b| <= truncation_bound`.
pub fn build_measure(
    tau: TauParam,
    h: f64,
    truncation_bound: f64,
    level: u32,
) -> Result<CylinderMeasure> {
    if !(h > 0.0 && h <= 2.0) || !h.is_finite() {
        return Err(Error::domain(format!("exponent h={h} outside (0, 2]")));
    }
    if level == 0 {
        return Err(Error::domain("level must be >= 1"));
    }
    let set = enumerate_indices(tau, truncation_bound)?;
    let total = word_space_size(set.len(), level, MEASURE_WORD_CAP)? as usize;
    let stride = total / set.len();
    let gens: Vec<MoebiusMap> = set
        .indices()
        .iter()
        .map(|&i| generator(tau, i))
        .collect();
    let level1_disks: Vec<Disk> = gens
        .iter()
        .map(|g| image_disk(g).expect("generator poles lie outside X"))
        .collect();

    let mut words = vec![
        WordData {
            low: 0.0,
            mid: 0.0,
            high: 0.0,
            cx: 0.0,
            cy: 0.0,
            radius: 0.0,
        };
        total
    ];
    let n = set.len();
    let level_us = level as usize;
    words
        .par_chunks_mut(stride)
        .enumerate()
        .for_each(|(first, block)| {
            // odometer over the level-1 tail digits with prefix caching
            let mut digits = vec![0usize; level_us - 1];
            let mut prefix = vec![gens[first]; level_us];
            let mut slot = 0;
            loop {
                for k in 0..level_us - 1 {
                    prefix[k + 1] = prefix[k].after(&gens[digits[k]]);
                }
                let map = &prefix[level_us - 1];
                let range = derivative_range(map).expect("admissible word");
                let img = image_disk(map).expect("admissible word");
                block[slot] = WordData {
                    low: range.min,
                    mid: derivative_at_zero(map),
                    high: range.max,
                    cx: img.center.re,
                    cy: img.center.im,
                    radius: img.radius,
                };
                slot += 1;
                let mut pos = level_us - 1;
                loop {
                    if pos == 0 {
                        debug_assert_eq!(slot, block.len());
                        return;
                    }
                    pos -= 1;
                    digits[pos] += 1;
                    if digits[pos] < n {
                        break;
                    }
                    digits[pos] = 0;
                }
            }
        });

    // raise to the exponent and normalize by the mid total
    words.par_iter_mut().for_each(|w| {
        w.low = w.low.powf(h);
        w.mid = w.mid.powf(h);
        w.high = w.high.powf(h);
    });
    let partials: Vec<Compensated> = words
        .par_chunks(stride)
        .map(|block| {
            let mut acc = Compensated::new();
            for w in block {
                acc.add(w.mid);
            }
            acc
        })
        .collect();
    let mut z = Compensated::new();
    for p in partials {
        z.merge(p);
    }
    let z = z.value();
    if !(z > 0.0) || !z.is_finite() {
        return Err(Error::estimation(format!(
            "degenerate normalization constant {z}"
        )));
    }
    words.par_iter_mut().for_each(|w| {
        w.low /= z;
        w.mid /= z;
        w.high /= z;
    });

    let mut group_low = Vec::with_capacity(n);
    let mut group_mid = Vec::with_capacity(n);
    let mut group_high = Vec::with_capacity(n);
    let mut total_low = Compensated::new();
    let mut total_high = Compensated::new();
    for block in words.chunks(stride) {
        let mut lo = Compensated::new();
        let mut mi = Compensated::new();
        let mut hi = Compensated::new();
        for w in block {
            lo.add(w.low);
            mi.add(w.mid);
            hi.add(w.high);
        }
        group_low.push(lo.value());
        group_mid.push(mi.value());
        group_high.push(hi.value());
        total_low.merge(lo);
        total_high.merge(hi);
    }

    Ok(CylinderMeasure {
        set,
        h,
        level,
        words,
        stride,
        group_low,
        group_mid,
        group_high,
        level1_disks,
        total_low: total_low.value(),
        total_high: total_high.value(),
    })
}

/// Two-sided bracket for the mass a conformal density of the measure's
/// exponent can assign to a ball.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BallMassEstimate {
    /// Guaranteed floor: max of the contained cylinders' low weights and the
    /// complement bound `1 - sum of high weights outside`.
    pub lower: f64,
    /// Guaranteed ceiling: min of the intersecting cylinders' high weights
    /// and `1 - sum of low weights of disjoint cylinders`.
    pub upper: f64,
    pub contained_words: u64,
    pub intersecting_words: u64,
}

/// Bracket for the ball's mass, pruning whole first-letter blocks against
/// their level-1 disks.
pub fn ball_mass(measure: &CylinderMeasure, ball: &Disk) -> BallMassEstimate {
    scan_ball(measure, ball, true)
}

/// Same predicates without block pruning; every word is tested. Reference
/// implementation for audits of the pruned path.
pub fn ball_mass_reference(measure: &CylinderMeasure, ball: &Disk) -> BallMassEstimate {
    scan_ball(measure, ball, false)
}

fn scan_ball(measure: &CylinderMeasure, ball: &Disk, prune: bool) -> BallMassEstimate {
    let mut contained_low = Compensated::new();
    let mut contained_high = Compensated::new();
    let mut intersect_low = Compensated::new();
    let mut intersect_high = Compensated::new();
    let mut contained_words = 0u64;
    let mut intersecting_words = 0u64;

    let stride = measure.stride;
    for g in 0..measure.set.len() {
        if prune {
            let disk = measure.level1_disks[g];
            let dist = (disk.center - ball.center).norm();
            if dist - disk.radius - ball.radius > PRUNE_MARGIN {
                continue; // block fully outside the ball
            }
            if dist + disk.radius <= ball.radius - PRUNE_MARGIN {
                // block fully inside the ball
                contained_low.add(measure.group_low[g]);
                contained_high.add(measure.group_high[g]);
                intersect_low.add(measure.group_low[g]);
                intersect_high.add(measure.group_high[g]);
                contained_words += stride as u64;
                intersecting_words += stride as u64;
                continue;
            }
        }
        for w in &measure.words[g * stride..(g + 1) * stride] {
            let img = Disk {
                center: Complex64::new(w.cx, w.cy),
                radius: w.radius,
            };
            if ball.intersects_disk(&img) {
                intersect_low.add(w.low);
                intersect_high.add(w.high);
                intersecting_words += 1;
                if ball.contains_disk(&img) {
                    contained_low.add(w.low);
                    contained_high.add(w.high);
                    contained_words += 1;
                }
            }
        }
    }

    let lower = contained_low
        .value()
        .max(1.0 - (measure.total_high - contained_high.value()))
        .max(0.0);
    let upper = intersect_high
        .value()
        .min(1.0 - (measure.total_low - intersect_low.value()));
    BallMassEstimate {
        lower,
        upper,
        contained_words,
        intersecting_words,
    }
}

/// The derived radii, thresholds, and mass-floor constants of the packing
/// argument, computed from the lattice spectral data, a distortion bound
/// `k`, the exponent `h`, and the quarter-disk growth constants `q <= c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PackingConstants {
    /// Lens-count floor coefficient `1 / (32 lambda2)`.
    pub q_prime: f64,
    /// Radius threshold `34 sqrt(lambda2)` above which the lens floor holds.
    pub c_prime: f64,
    /// Base radius `min(1/8, k/c)`.
    pub r0: f64,
    /// Scan ceiling `r0^2`.
    pub xi: f64,
    /// Scan floor multiplier (the distortion bound itself).
    pub gamma: f64,
    /// `max(c_prime, 2)`.
    pub r_big0: f64,
    /// `min(q_prime / 4, (r_big0 + 1)^-2)`.
    pub l_prime: f64,
    /// Final mass-floor constant.
    pub l: f64,
}

pub fn packing_constants(
    tau: TauParam,
    k: f64,
    h: f64,
    q: f64,
    c: f64,
) -> Result<PackingConstants> {
    if !(k >= 1.0) || !k.is_finite() {
        return Err(Error::domain("distortion bound k must be >= 1"));
    }
    if !(h > 0.0 && h <= 2.0) {
        return Err(Error::domain("exponent h must lie in (0, 2]"));
    }
    if !(q > 0.0 && c > 0.0) || !q.is_finite() || !c.is_finite() {
        return Err(Error::domain("growth constants must be positive"));
    }
    let lambda2 = spectral_data(tau).lambda2;
    let q_prime = 1.0 / (32.0 * lambda2);
    // side condition: (R - 2 sqrt(2 lambda2))^2 / (16 lambda2) - R^2 /
    // (32 lambda2) stays positive for all R >= c_prime. The larger root of
    // the quadratic is (2 + sqrt(2)) * 2 sqrt(2 lambda2) < 34 sqrt(lambda2),
    // so the default always works; bump defensively if it ever does not.
    let s = 2.0 * (2.0 * lambda2).sqrt();
    let mut c_prime = 34.0 * lambda2.sqrt();
    let side = |r: f64| (r - s) * (r - s) / (16.0 * lambda2) - r * r / (32.0 * lambda2);
    while c_prime <= s * (2.0 + std::f64::consts::SQRT_2) || side(c_prime) <= 0.0 {
        c_prime *= 1.05;
    }
    let r0 = (1.0 / 8.0_f64).min(k / c);
    let xi = r0 * r0;
    let gamma = k;
    let r_big0 = c_prime.max(2.0);
    let l_prime = (q_prime / 4.0).min((r_big0 + 1.0).powi(-2));
    let n_tau = spectral_data(tau).n_tau;
    let l = (l_prime * (8.0 * k).powf(-h))
        .min(q * k.powf(2.0 - 3.0 * h) * n_tau.powf(-2.0 * h) * (2.0_f64).powf(2.0 - 2.0 * h));
    let out = PackingConstants {
        q_prime,
        c_prime,
        r0,
        xi,
        gamma,
        r_big0,
        l_prime,
        l,
    };
    debug_assert!(out.l > 0.0 && out.l.is_finite());
    Ok(out)
}

/// Index sets of the near-field construction around a ball `B(x, r)` with
/// `0 < r < |x|`: all letters whose `B(a + 1/2, 1/2)` sits inside the
/// inverted ball `B(w, r_cap)`, and the near subset with `|a| < |w|`.
#[derive(Debug, Clone)]
pub struct Case1Sets {
    /// Center of the inverted ball.
    pub w: Complex64,
    /// Radius of the inverted ball.
    pub r_cap: f64,
    /// Letters with `B(a + 1/2, 1/2)` inside `B(w, r_cap)`; equivalently,
    /// letters whose image disk sits inside `B(x, r)`.
    pub members: Vec<LatticeIndex>,
    /// Members with `|a| < |w|`.
    pub near: Vec<LatticeIndex>,
}

pub fn index_set_case1(tau: TauParam, x: Complex64, r: f64) -> Result<Case1Sets> {
    if !(r > 0.0) || !r.is_finite() || !x.is_finite() {
        return Err(Error::domain("need a finite ball with positive radius"));
    }
    if !(r < x.norm()) {
        return Err(Error::domain("ball must exclude the origin: r < |x|"));
    }
    let inverted = crate::geometry::invert_disk(&Disk::new(x, r)?)?;
    let (w, r_cap) = (inverted.center, inverted.radius);
    let reach = w.norm() + r_cap;
    let v = tau.v();
    let estimate = (reach * reach * std::f64::consts::FRAC_PI_4 / v) as u128;
    if estimate > 20_000_000 {
        return Err(Error::Resource {
            what: "case-1 index window",
            size: estimate,
            cap: 20_000_000,
        });
    }
    let mut members = Vec::new();
    let mut near = Vec::new();
    let w_norm_sq = w.norm_sqr();
    let half = Complex64::new(0.5, 0.0);
    let mut n = 1u32;
    while (n as f64) * v <= reach + 1.0 {
        let mut m = 1u32;
        let mut hit_any = false;
        while (m as f64) <= reach + 1.0 {
            let idx = LatticeIndex::new(m, n)?;
            let a = idx.point(tau);
            // unit disk around a + 1/2 inside B(w, r_cap)
            if (a + half - w).norm() + 0.5 <= r_cap + crate::geometry::CONTAINS_TOL {
                members.push(idx);
                hit_any = true;
                if lt_banded(a.norm_sqr(), w_norm_sq) {
                    near.push(idx);
                }
            } else if hit_any {
                break; // left the disk along this row
            }
            m += 1;
        }
        n += 1;
    }
    members.sort_by(|p, q2| {
        let a = p.point(tau);
        let b = q2.point(tau);
        (a.norm_sqr(), p.m(), p.n())
            .partial_cmp(&(b.norm_sqr(), q2.m(), q2.n()))
            .unwrap()
    });
    near.sort_by(|p, q2| {
        let a = p.point(tau);
        let b = q2.point(tau);
        (a.norm_sqr(), p.m(), p.n())
            .partial_cmp(&(b.norm_sqr(), q2.m(), q2.n()))
            .unwrap()
    });
    Ok(Case1Sets {
        w,
        r_cap,
        members,
        near,
    })
}

/// Far-field annulus letters `k / r_bar < |a| <= n_tau k / r_bar`: exactly
/// the letters counted by the annulus counter at radius `k / r_bar`.
pub fn index_set_case3(tau: TauParam, r_bar: f64, k: f64) -> Result<Vec<LatticeIndex>> {
    if !(r_bar > 0.0) || !r_bar.is_finite() {
        return Err(Error::domain("r_bar must be positive"));
    }
    if !(k >= 1.0) || !k.is_finite() {
        return Err(Error::domain("k must be >= 1"));
    }
    let inner = k / r_bar;
    let outer = spectral_data(tau).n_tau * inner;
    let v = tau.v();
    let estimate = (outer * outer * std::f64::consts::FRAC_PI_4 / v) as u128;
    if estimate > 50_000_000 {
        return Err(Error::Resource {
            what: "case-3 annulus window",
            size: estimate,
            cap: 50_000_000,
        });
    }
    let inner_sq = inner * inner;
    let outer_sq = outer * outer;
    let mut members = Vec::new();
    let mut n = 1u32;
    while (n as f64) * v <= outer {
        let mut m = 1u32;
        while (m as f64) <= outer {
            let idx = LatticeIndex::new(m, n)?;
            let norm_sq = idx.point(tau).norm_sqr();
            if norm_sq > outer_sq && !crate::lattice::le_banded(norm_sq, outer_sq) {
                break;
            }
            if !crate::lattice::le_banded(norm_sq, inner_sq) {
                members.push(idx);
            }
            m += 1;
        }
        n += 1;
    }
    members.sort_by(|p, q2| {
        let a = p.point(tau);
        let b = q2.point(tau);
        (a.norm_sqr(), p.m(), p.n())
            .partial_cmp(&(b.norm_sqr(), q2.m(), q2.n()))
            .unwrap()
    });
    Ok(members)
}

/// One scanned ball of the mass-floor scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanSample {
    pub index: LatticeIndex,
    pub radius: f64,
    /// 1: `r <= |x|/2`; 2: `|x|/2 < r <= 2|x|`; 3: `r > 2|x|`.
    pub case_id: u8,
    pub lower: f64,
    /// `lower / r^h`.
    pub ratio: f64,
}

/// Per-case summary of the scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CaseScan {
    pub case_id: u8,
    pub scanned: u64,
    pub min_ratio: Option<f64>,
    /// Ball attaining the minimum ratio.
    pub witness: Option<(LatticeIndex, f64)>,
}

#[derive(Debug, Clone)]
pub struct ScanReport {
    pub cases: [CaseScan; 3],
    pub samples: Vec<ScanSample>,
    /// Indices whose scan window `[gamma * diam, xi]` is empty.
    pub skipped: Vec<LatticeIndex>,
}

/// Scans balls `B(1/b, r)` for each sampled letter `b`, with `r` running
/// geometrically over `[gamma * diam phi_b(X), xi]`, and records the ratio
/// `lower mass / r^h` per packing case. Every scanned ball contains the whole
/// cylinder `phi_b(X)` (its radius exceeds the image diameter), so positive
/// floors are the expected outcome whenever `b` lies in the measure's
/// truncation.
pub fn ball_mass_floor_scan(
    measure: &CylinderMeasure,
    constants: &PackingConstants,
    b_sample: &[LatticeIndex],
    radii_per_b: usize,
) -> Result<ScanReport> {
    if b_sample.is_empty() {
        return Err(Error::domain("b_sample must be nonempty"));
    }
    if radii_per_b == 0 {
        return Err(Error::domain("radii_per_b must be >= 1"));
    }
    let tau = measure.tau();
    let h = measure.h();
    let mut samples = Vec::new();
    let mut skipped = Vec::new();

    let per_b: Vec<std::result::Result<Vec<ScanSample>, LatticeIndex>> = b_sample
        .par_iter()
        .map(|&idx| {
            let b = idx.point(tau);
            let diam = image_disk(&generator(tau, idx))
                .expect("generator poles lie outside X")
                .diameter();
            let r_lo = constants.gamma * diam;
            let r_hi = constants.xi;
            if r_lo > r_hi {
                return Err(idx);
            }
            let x = 1.0 / b;
            let x_norm = x.norm();
            let mut out = Vec::with_capacity(radii_per_b);
            for j in 0..radii_per_b {
                let frac = if radii_per_b == 1 {
                    0.0
                } else {
                    j as f64 / (radii_per_b - 1) as f64
                };
                let r = r_lo * (r_hi / r_lo).powf(frac);
                let case_id = if r <= 0.5 * x_norm {
                    1
                } else if r <= 2.0 * x_norm {
                    2
                } else {
                    3
                };
                let est = ball_mass(measure, &Disk::new(x, r).expect("positive radius"));
                out.push(ScanSample {
                    index: idx,
                    radius: r,
                    case_id,
                    lower: est.lower,
                    ratio: est.lower / r.powf(h),
                });
            }
            Ok(out)
        })
        .collect();

    for entry in per_b {
        match entry {
            Ok(mut v) => samples.append(&mut v),
            Err(idx) => skipped.push(idx),
        }
    }

    let mut cases = [1u8, 2, 3].map(|case_id| CaseScan {
        case_id,
        scanned: 0,
        min_ratio: None,
        witness: None,
    });
    for s in &samples {
        let slot = &mut cases[(s.case_id - 1) as usize];
        slot.scanned += 1;
        if slot.min_ratio.map_or(true, |m| s.ratio < m) {
            slot.min_ratio = Some(s.ratio);
            slot.witness = Some((s.index, s.radius));
        }
    }
    Ok(ScanReport {
        cases,
        samples,
        skipped,
    })
}

/// Log-log fit of ball-mass floors against radius at one center.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CenterFit {
    pub center: Complex64,
    pub slope: f64,
    /// Root-mean-square residual of the fit in log space.
    pub rms: f64,
    pub points: u32,
}

#[derive(Debug, Clone)]
pub struct ScalingFit {
    /// Mean slope over centers that admitted a fit; the empirical scaling
    /// exponent of the measure.
    pub exponent: f64,
    pub per_center: Vec<CenterFit>,
    /// Centers with fewer than three positive mass floors on the grid.
    pub skipped: Vec<Complex64>,
}

/// Fits `log lower-mass ~ exponent * log r` per center over a radius grid
/// spanning at least two decades, then averages the slopes.
pub fn scaling_exponent_fit(
    measure: &CylinderMeasure,
    centers: &[Complex64],
    r_grid: &[f64],
) -> Result<ScalingFit> {
    if centers.is_empty() {
        return Err(Error::domain("centers must be nonempty"));
    }
    if r_grid.len() < 3 {
        return Err(Error::domain("radius grid needs at least three entries"));
    }
    for pair in r_grid.windows(2) {
        if !(pair[0] < pair[1]) {
            return Err(Error::domain("radius grid must be strictly increasing"));
        }
    }
    if !(r_grid[0] > 0.0) {
        return Err(Error::domain("radius grid must be positive"));
    }
    if r_grid[r_grid.len() - 1] / r_grid[0] < 100.0 {
        return Err(Error::domain("radius grid must span at least two decades"));
    }

    let fits: Vec<std::result::Result<CenterFit, Complex64>> = centers
        .par_iter()
        .map(|&center| {
            let mut pts = Vec::new();
            for &r in r_grid {
                let est = ball_mass(measure, &Disk::new(center, r).expect("positive radius"));
                if est.lower > 0.0 {
                    pts.push((r.ln(), est.lower.ln()));
                }
            }
            if pts.len() < 3 {
                return Err(center);
            }
            let n = pts.len() as f64;
            let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
            let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
            let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
            let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
            let slope = sxy / sxx;
            let intercept = my - slope * mx;
            let rms = (pts
                .iter()
                .map(|p| {
                    let e = p.1 - (slope * p.0 + intercept);
                    e * e
                })
                .sum::<f64>()
                / n)
                .sqrt();
            Ok(CenterFit {
                center,
                slope,
                rms,
                points: pts.len() as u32,
            })
        })
        .collect();

    let mut per_center = Vec::new();
    let mut skipped = Vec::new();
    for f in fits {
        match f {
            Ok(fit) => per_center.push(fit),
            Err(center) => skipped.push(center),
        }
    }
    if per_center.is_empty() {
        return Err(Error::estimation(
            "no center admitted a scaling fit: all mass floors vanish",
        ));
    }
    let exponent = per_center.iter().map(|f| f.slope).sum::<f64>() / per_center.len() as f64;
    Ok(ScalingFit {
        exponent,
        per_center,
        skipped,
    })
}
