//! The continued fraction system: Moebius generators `z -> 1/(z + b)` over
//! the index lattice, acting on the seed disk `X = B(1/2, 1/2)`.
//!
//! Maps are normalized 2x2 complex matrices. Composition is the matrix
//! product in word order (leftmost letter applied last), renormalized after
//! every multiply so coefficients never drift toward overflow or underflow.
//! Image disks and derivative ranges are closed form, not sampled.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::{invert_disk, Disk, TauParam};
use crate::lattice::{enumerate_indices, IndexSet, LatticeIndex};

/// Seed domain `X = B(1/2, 1/2)`.
pub fn domain_x() -> Disk {
    Disk {
        center: Complex64::new(0.5, 0.0),
        radius: 0.5,
    }
}

/// Extension domain `V = B(1/2, 3/4)`, a fixed neighborhood of `X` on which
/// every generator still acts injectively.
pub fn domain_v() -> Disk {
    Disk {
        center: Complex64::new(0.5, 0.0),
        radius: 0.75,
    }
}

/// Cap on enumerated word spaces (`|I|^length`) for exhaustive operations.
pub const WORD_SPACE_CAP: u128 = 1 << 26;

/// Moebius map `z -> (a z + b) / (c z + d)`, stored with the largest
/// coefficient modulus normalized to 1 and `ad - bc != 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MoebiusMap {
    pub a: Complex64,
    pub b: Complex64,
    pub c: Complex64,
    pub d: Complex64,
}

impl MoebiusMap {
    pub fn new(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Result<MoebiusMap> {
        let map = MoebiusMap { a, b, c, d }.normalized();
        if map.det().norm() == 0.0 || !map.det().is_finite() {
            return Err(Error::domain("Moebius map must have nonzero determinant"));
        }
        Ok(map)
    }

    pub fn identity() -> MoebiusMap {
        MoebiusMap {
            a: Complex64::new(1.0, 0.0),
            b: Complex64::new(0.0, 0.0),
            c: Complex64::new(0.0, 0.0),
            d: Complex64::new(1.0, 0.0),
        }
    }

    fn normalized(self) -> MoebiusMap {
        let scale = self
            .a
            .norm()
            .max(self.b.norm())
            .max(self.c.norm())
            .max(self.d.norm());
        MoebiusMap {
            a: self.a / scale,
            b: self.b / scale,
            c: self.c / scale,
            d: self.d / scale,
        }
    }

    pub fn det(&self) -> Complex64 {
        self.a * self.d - self.b * self.c
    }

    pub fn apply(&self, z: Complex64) -> Complex64 {
        (self.a * z + self.b) / (self.c * z + self.d)
    }

    /// Pole `-d/c`; `None` for affine maps.
    pub fn pole(&self) -> Option<Complex64> {
        if self.c.norm() == 0.0 {
            None
        } else {
            Some(-self.d / self.c)
        }
    }

    /// `self` after `other`: the matrix product `self * other`, renormalized.
    pub fn after(&self, other: &MoebiusMap) -> MoebiusMap {
        MoebiusMap {
            a: self.a * other.a + self.b * other.c,
            b: self.a * other.b + self.b * other.d,
            c: self.c * other.a + self.d * other.c,
            d: self.c * other.b + self.d * other.d,
        }
        .normalized()
    }
}

/// Generator `phi_b(z) = 1 / (z + b)` for `b = m + n tau`, as the normalized
/// matrix `(0, 1; 1, b) / |b|`.
pub fn generator(tau: TauParam, index: LatticeIndex) -> MoebiusMap {
    let b = index.point(tau);
    MoebiusMap {
        a: Complex64::new(0.0, 0.0),
        b: Complex64::new(1.0, 0.0),
        c: Complex64::new(1.0, 0.0),
        d: b,
    }
    .normalized()
}

/// Nonempty finite word over the index lattice; leftmost letter is the
/// outermost map.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Word {
    tau_u_bits: u64,
    tau_v_bits: u64,
    letters: Vec<LatticeIndex>,
}

impl Word {
    pub fn new(tau: TauParam, letters: Vec<LatticeIndex>) -> Result<Word> {
        if letters.is_empty() {
            return Err(Error::domain("words must be nonempty"));
        }
        Ok(Word {
            tau_u_bits: tau.u().to_bits(),
            tau_v_bits: tau.v().to_bits(),
            letters,
        })
    }

    pub fn tau(&self) -> TauParam {
        TauParam::new(f64::from_bits(self.tau_u_bits), f64::from_bits(self.tau_v_bits))
            .expect("validated at construction")
    }

    pub fn letters(&self) -> &[LatticeIndex] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Matrix of `phi_w = phi_{w_1} o ... o phi_{w_n}`: the product of generator
/// matrices in word order, renormalized after each step.
pub fn compose(word: &Word) -> MoebiusMap {
    let tau = word.tau();
    let mut map = generator(tau, word.letters()[0]);
    for &letter in &word.letters()[1..] {
        map = map.after(&generator(tau, letter));
    }
    map
}

/// Exact image `phi(X)` of the seed disk, via one affine step, one inversion,
/// one affine step. Needs the pole strictly outside the closed `X`.
pub fn image_disk(map: &MoebiusMap) -> Result<Disk> {
    image_of_disk(map, &domain_x())
}

/// Exact image of an arbitrary disk under the map; same decomposition as
/// [`image_disk`].
pub fn image_of_disk(map: &MoebiusMap, disk: &Disk) -> Result<Disk> {
    if map.c.norm() == 0.0 {
        let scale = map.a / map.d;
        return Disk::new(
            disk.center * scale + map.b / map.d,
            disk.radius * scale.norm(),
        );
    }
    let pole = -map.d / map.c;
    if !((pole - disk.center).norm() > disk.radius) {
        return Err(Error::domain(format!(
            "pole {pole} lies inside the disk around {}",
            disk.center
        )));
    }
    // phi(z) = a/c + ((bc - ad)/c) * 1/(cz + d)
    let shifted = Disk {
        center: map.c * disk.center + map.d,
        radius: map.c.norm() * disk.radius,
    };
    let inverted = invert_disk(&shifted)?;
    let k = (map.b * map.c - map.a * map.d) / map.c;
    Disk::new(inverted.center * k + map.a / map.c, inverted.radius * k.norm())
}

/// Exact `(min, max)` of `|phi'|` over the closed seed disk.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivativeRange {
    pub min: f64,
    pub max: f64,
}

impl DerivativeRange {
    pub fn ratio(&self) -> f64 {
        self.max / self.min
    }
}

/// `|phi'(z)| = |det| / |cz + d|^2` is monotone in the distance to the pole,
/// so the extrema over `X` sit at the nearest and farthest boundary points:
/// `max = |det| / (|c|^2 (dist - 1/2)^2)`, `min = |det| / (|c|^2 (dist +
/// 1/2)^2)` with `dist = |pole - 1/2|`. Needs the pole strictly outside the
/// closed `X`.
pub fn derivative_range(map: &MoebiusMap) -> Result<DerivativeRange> {
    let det = map.det().norm();
    if map.c.norm() == 0.0 {
        let value = det / map.d.norm_sqr();
        return Ok(DerivativeRange {
            min: value,
            max: value,
        });
    }
    let x = domain_x();
    let dist = (-map.d / map.c - x.center).norm();
    if !(dist > x.radius) {
        return Err(Error::domain(
            "derivative range needs the pole strictly outside X",
        ));
    }
    let scale = det / map.c.norm_sqr();
    Ok(DerivativeRange {
        min: scale / ((dist + x.radius) * (dist + x.radius)),
        max: scale / ((dist - x.radius) * (dist - x.radius)),
    })
}

/// `|phi'(0)| = |det| / |d|^2`; the mid weight of cylinder measures.
pub fn derivative_at_zero(map: &MoebiusMap) -> f64 {
    map.det().norm() / map.d.norm_sqr()
}

/// Closed-form derivative range of a single generator with lattice point `b`:
/// `|phi_b'(z)| = 1 / |z + b|^2`.
pub fn generator_derivative_range(b: Complex64) -> DerivativeRange {
    let dist = (b + Complex64::new(0.5, 0.0)).norm();
    DerivativeRange {
        min: 1.0 / ((dist + 0.5) * (dist + 0.5)),
        max: 1.0 / ((dist - 0.5) * (dist - 0.5)),
    }
}

/// Finite-word approximation `phi_w(0)` to the coded limit point, with a
/// radius that bounds the distance to the limit of any infinite extension:
/// both live in `phi_w(X)`, so the image diameter is a guaranteed bound (and
/// decays like the product of generator sup norms).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CodingPoint {
    pub point: Complex64,
    pub error_radius: f64,
}

pub fn coding_point(word: &Word) -> Result<CodingPoint> {
    let map = compose(word);
    let image = image_disk(&map)?;
    Ok(CodingPoint {
        point: map.apply(Complex64::new(0.0, 0.0)),
        error_radius: image.diameter(),
    })
}

/// Truncated system: the lattice parameter, its index set `|b| <= bound`, and
/// the word-length ceiling for exhaustive enumerations.
#[derive(Debug, Clone)]
pub struct SystemConfig {
    set: IndexSet,
    max_word_length: u32,
}

impl SystemConfig {
    pub fn new(tau: TauParam, truncation_bound: f64, max_word_length: u32) -> Result<SystemConfig> {
        if max_word_length == 0 {
            return Err(Error::domain("max_word_length must be >= 1"));
        }
        Ok(SystemConfig {
            set: enumerate_indices(tau, truncation_bound)?,
            max_word_length,
        })
    }

    pub fn tau(&self) -> TauParam {
        self.set.tau()
    }

    pub fn truncation_bound(&self) -> f64 {
        self.set.bound()
    }

    pub fn max_word_length(&self) -> u32 {
        self.max_word_length
    }

    pub fn index_set(&self) -> &IndexSet {
        &self.set
    }

    pub fn domain_x(&self) -> Disk {
        domain_x()
    }

    pub fn domain_v(&self) -> Disk {
        domain_v()
    }
}

/// Visits every word of exact `length` over the set, in odometer order (first
/// letter slowest), passing the letter positions and the composed matrix.
/// Prefix matrices are cached so each word costs one multiply.
pub(crate) fn for_each_word<F>(set: &IndexSet, length: usize, mut visit: F)
where
    F: FnMut(&[u32], &MoebiusMap),
{
    assert!(length >= 1);
    let gens: Vec<MoebiusMap> = set
        .indices()
        .iter()
        .map(|&i| generator(set.tau(), i))
        .collect();
    let n = gens.len();
    let mut digits = vec![0u32; length];
    // prefix[k] = product of the first k letters
    let mut prefix = vec![MoebiusMap::identity(); length + 1];
    loop {
        for k in 0..length {
            prefix[k + 1] = prefix[k].after(&gens[digits[k] as usize]);
        }
        visit(&digits, &prefix[length]);
        // odometer increment from the last digit; recompute only the suffix
        let mut pos = length;
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
        // prefix[0..=pos] still valid; the next loop iteration rebuilds the
        // tail. Avoid redundant work by truncating the rebuild start.
        // (The rebuild above recomputes from 0; cheap enough for length <= 3,
        // but keep the suffix trick for longer words.)
        let _ = pos;
    }
}

/// Checked size of the word space `|I|^length`.
pub(crate) fn word_space_size(set_len: usize, length: u32, cap: u128) -> Result<u64> {
    let mut size: u128 = 1;
    for _ in 0..length {
        size = size.saturating_mul(set_len as u128);
        if size > cap {
            return Err(Error::Resource {
                what: "word space",
                size,
                cap,
            });
        }
    }
    Ok(size as u64)
}

/// Coding points of every word of exact `word_length` over the truncation.
pub fn sample_limit_set(config: &SystemConfig, word_length: u32) -> Result<Vec<Complex64>> {
    word_space_size(config.index_set().len(), word_length, WORD_SPACE_CAP)?;
    let mut points = Vec::new();
    for_each_word(config.index_set(), word_length as usize, |_, map| {
        points.push(map.apply(Complex64::new(0.0, 0.0)));
    });
    Ok(points)
}

/// Coding points of at most `budget` words of exact `word_length`: every
/// word when the space fits the budget, otherwise every `k`-th word of the
/// enumeration order, `k = ceil(total / budget)`. The output is a
/// deterministic function of the arguments; word spaces beyond `2^128` are
/// rejected.
pub fn sample_limit_set_budgeted(
    config: &SystemConfig,
    word_length: u32,
    budget: u64,
) -> Result<Vec<Complex64>> {
    if budget == 0 {
        return Err(Error::domain("budget must be >= 1"));
    }
    if word_length == 0 {
        return Err(Error::domain("word_length must be >= 1"));
    }
    let set = config.index_set();
    let n = set.len() as u128;
    let total = n
        .checked_pow(word_length)
        .ok_or(Error::Resource {
            what: "word space",
            size: u128::MAX,
            cap: u128::MAX,
        })?;
    if total <= budget as u128 {
        return sample_limit_set(config, word_length);
    }
    let stride = total.div_ceil(budget as u128);
    let tau = set.tau();
    let mut points = Vec::with_capacity(budget as usize);
    let mut w = 0u128;
    while w < total {
        // Big-endian base-n digits, matching the exhaustive visit order.
        let mut map = MoebiusMap::identity();
        let mut rem = w;
        let mut place = total / n;
        for _ in 0..word_length {
            let digit = (rem / place) as usize;
            rem %= place;
            place = (place / n).max(1);
            map = map.after(&generator(tau, set.get(digit)));
        }
        points.push(map.apply(Complex64::new(0.0, 0.0)));
        w += stride;
    }
    Ok(points)
}

/// Open-set-condition audit: pairwise overlap of the level-1 image disks.
#[derive(Debug, Clone)]
pub struct OscReport {
    /// Pairs of indices whose open image disks overlap by more than the
    /// tolerance, with the overlap depth.
    pub violations: Vec<(LatticeIndex, LatticeIndex, f64)>,
    pub pairs_checked: u64,
}

/// Overlap slack: disks closer than the radius sum minus this tolerance are
/// violations.
pub const OSC_TOL: f64 = 1e-12;

pub fn osc_audit(config: &SystemConfig) -> Result<OscReport> {
    let set = config.index_set();
    let disks: Vec<Disk> = set
        .indices()
        .iter()
        .map(|&i| image_disk(&generator(set.tau(), i)))
        .collect::<Result<_>>()?;
    let mut violations = Vec::new();
    let mut pairs_checked = 0;
    for i in 0..disks.len() {
        for j in (i + 1)..disks.len() {
            pairs_checked += 1;
            let gap = (disks[i].center - disks[j].center).norm()
                - (disks[i].radius + disks[j].radius);
            if gap < -OSC_TOL {
                violations.push((set.get(i), set.get(j), -gap));
            }
        }
    }
    Ok(OscReport {
        violations,
        pairs_checked,
    })
}

/// Empirical distortion data over sampled words.
#[derive(Debug, Clone)]
pub struct DistortionReport {
    /// Max over sampled words of `sup |phi'| / inf |phi'|` on `X`; at least 1.
    pub k_hat: f64,
    /// Max generator sup norm; strictly below 1 on the admissible lattice.
    pub contraction_hat: f64,
    pub words_sampled: u64,
    /// Letters of the word attaining `k_hat`.
    pub witness: Vec<LatticeIndex>,
}

/// Exhaustive up to [`WORD_SPACE_CAP`] words per length, seeded random
/// sampling beyond that.
pub fn distortion_audit(
    config: &SystemConfig,
    word_length: u32,
    seed: u64,
) -> Result<DistortionReport> {
    if word_length == 0 {
        return Err(Error::domain("distortion audit needs word_length >= 1"));
    }
    let set = config.index_set();
    let tau = set.tau();
    let mut k_hat = 1.0_f64;
    let mut witness: Vec<LatticeIndex> = Vec::new();
    let mut contraction_hat = 0.0_f64;
    let mut words_sampled = 0u64;

    for &idx in set.indices() {
        let range = generator_derivative_range(idx.point(tau));
        contraction_hat = contraction_hat.max(range.max);
        if range.ratio() > k_hat {
            k_hat = range.ratio();
            witness = vec![idx];
        }
        words_sampled += 1;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for length in 2..=word_length {
        let exhaustive = word_space_size(set.len(), length, 1 << 20).is_ok();
        if exhaustive {
            for_each_word(set, length as usize, |digits, map| {
                words_sampled += 1;
                if let Ok(range) = derivative_range(map) {
                    if range.ratio() > k_hat {
                        k_hat = range.ratio();
                        witness = digits.iter().map(|&d| set.get(d as usize)).collect();
                    }
                }
            });
        } else {
            const RANDOM_WORDS: u32 = 4000;
            for _ in 0..RANDOM_WORDS {
                let letters: Vec<LatticeIndex> = (0..length)
                    .map(|_| set.get(rng.gen_range(0..set.len())))
                    .collect();
                let word = Word::new(tau, letters.clone())?;
                words_sampled += 1;
                let range = derivative_range(&compose(&word))?;
                if range.ratio() > k_hat {
                    k_hat = range.ratio();
                    witness = letters;
                }
            }
        }
    }
    Ok(DistortionReport {
        k_hat,
        contraction_hat,
        words_sampled,
        witness,
    })
}
