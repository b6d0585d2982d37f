//! Acceptance suite: one test per headline guarantee of the laboratory.
//! Every test recomputes its expected values from an independent in-test
//! oracle (closed forms, brute-force enumeration, or a hand-rolled
//! bisection) before comparing against the library, and finishes by printing
//! a single PASS line. Run with `--nocapture` to see the ledger.

use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use cifs_lab::cifs::{
    compose, distortion_audit, generator_derivative_range, osc_audit, SystemConfig, Word,
};
use cifs_lab::geometry::{
    case1_probe_ball, invert_disk, preimage_probe_ball, spectral_data, Disk, TauParam,
};
use cifs_lab::lattice::{
    count_annulus, count_lens, count_quarter_disk, enumerate_indices, fit_growth_constants,
};
use cifs_lab::measure::{
    ball_mass, ball_mass_floor_scan, build_measure, packing_constants, scaling_exponent_fit,
};
use cifs_lab::pressure::{bowen_root, psi, theta_probe, ThetaVerdict};

fn tau(u: f64, v: f64) -> TauParam {
    TauParam::new(u, v).unwrap()
}

fn tau_i() -> TauParam {
    tau(0.0, 1.0)
}

/// The four lattice parameters exercised by the multi-tau criteria.
fn tau_panel() -> [TauParam; 4] {
    [tau(0.0, 1.0), tau(1.0, 1.0), tau(0.0, 2.0), tau(0.5, 1.5)]
}

fn brute_quarter_disk(r: f64) -> u64 {
    let cap = r.ceil() as i64 + 1;
    let mut count = 0;
    for m in 1..=cap {
        for n in 1..=cap {
            if ((m * m + n * n) as f64) <= r * r * (1.0 + 1e-9) {
                count += 1;
            }
        }
    }
    count
}

#[test]
fn criterion_01_quarter_disk_count_bounds() {
    let started = Instant::now();
    for r in 6i64..=300 {
        let count = count_quarter_disk(r as f64) as i64;
        assert!(
            2 * count >= r * r - 7 * r + 7,
            "lower bound fails at R = {r}: count = {count}"
        );
        assert!(count <= r * r, "upper bound fails at R = {r}: count = {count}");
    }
    // spot values against the brute-force oracle
    assert_eq!(brute_quarter_disk(6.0), 22);
    assert_eq!(brute_quarter_disk(10.0), 69);
    assert_eq!(count_quarter_disk(6.0), 22);
    assert_eq!(count_quarter_disk(10.0), 69);
    let elapsed = started.elapsed().as_secs_f64();
    assert!(elapsed < 5.0, "quarter-disk audit took {elapsed:.1}s");
    println!(
        "criterion 01 PASS: (R^2-7R+7)/2 <= N(R) <= R^2 for all R in [6, 300] ({elapsed:.2}s)"
    );
}

#[test]
fn criterion_02_annulus_growth_floor() {
    let started = Instant::now();
    for tau in tau_panel() {
        let grid: Vec<f64> = (0..24).map(|k| 8.0 * 62.5f64.powf(k as f64 / 23.0)).collect();
        let growth = fit_growth_constants(tau, &grid).unwrap();
        assert!(growth.q_hat > 0.0, "no positive growth floor for tau = {tau:?}");
        assert!(growth.c_hat < 500.0);

        // strict floor on every audited radius past the stabilization point;
        // fresh counts, not the estimator's cached samples
        let mut audited = 0;
        for &r in grid.iter().filter(|&&r| r >= growth.c_hat) {
            let count = count_annulus(tau, r).unwrap();
            assert!(
                count as f64 > growth.q_hat * r * r,
                "annulus count {count} at r = {r:.1} under the floor for tau = {tau:?}"
            );
            audited += 1;
        }
        assert!(audited >= 16, "only {audited} audited radii for tau = {tau:?}");

        // density oracle: the index cone has solid angle arg(tau), lattice
        // cell area v, so counts approach arg(tau) (N^2 - 1) r^2 / (2 v)
        let spectral = spectral_data(tau);
        let n = spectral.n_tau;
        let expected = tau.as_complex().arg() * (n * n - 1.0) / (2.0 * tau.v());
        assert!(
            growth.q_hat > 0.5 * expected && growth.q_hat < 1.05 * expected,
            "fitted floor {} far from the density oracle {expected} for tau = {tau:?}",
            growth.q_hat
        );
    }
    let elapsed = started.elapsed().as_secs_f64();
    assert!(elapsed < 60.0, "annulus audit took {elapsed:.1}s");
    println!(
        "criterion 02 PASS: annulus counts stay above the fitted q r^2 floor on every \
         audited radius up to 500, and the floor matches the lattice density oracle \
         ({elapsed:.2}s)"
    );
}

#[test]
fn criterion_03_lens_count_floor() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for tau in tau_panel() {
        let spectral = spectral_data(tau);
        let r_min = 34.0 * spectral.lambda2.sqrt();
        let t = tau.as_complex();
        let mut trials = 0;
        while trials < 100 {
            // lattice cone sample: w = m + n tau
            let m = rng.gen_range(1..=160) as f64;
            let n = rng.gen_range(1..=160) as f64;
            let w = Complex64::new(m, 0.0) + n * t;
            if w.norm() <= r_min * 1.02 {
                continue;
            }
            let r_prime = rng.gen_range(r_min..w.norm() * 0.98);
            let count = count_lens(tau, w, r_prime).unwrap();
            let floor = r_prime * r_prime / (32.0 * spectral.lambda2);
            assert!(
                count as f64 > floor,
                "lens count {count} at |w| = {:.1}, r' = {r_prime:.1} under {floor:.1} \
                 for tau = {tau:?}",
                w.norm()
            );
            trials += 1;
        }
    }
    println!(
        "criterion 03 PASS: lens counts beat r'^2/(32 lambda2) in 100 seeded trials \
         per lattice parameter"
    );
}

#[test]
fn criterion_04_disk_inversion_closed_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut max_rim = 0.0f64;
    let mut max_involution = 0.0f64;
    for _ in 0..10_000 {
        let center = Complex64::from_polar(
            rng.gen_range(0.2..5.0),
            rng.gen_range(0.0..std::f64::consts::TAU),
        );
        let radius = center.norm() * rng.gen_range(0.05..0.95);
        let disk = Disk::new(center, radius).unwrap();
        let image = invert_disk(&disk).unwrap();

        // oracle: the true image circle of z -> 1/z
        let denom = center.norm_sqr() - radius * radius;
        let oracle_center = center.conj() / denom;
        let oracle_radius = radius / denom;
        assert!((image.center - oracle_center).norm() <= 1e-12 * oracle_radius);
        assert!((image.radius - oracle_radius).abs() <= 1e-12 * oracle_radius);

        for k in 0..8 {
            let z = disk.boundary_point(2.0 * std::f64::consts::PI * k as f64 / 8.0);
            let err = ((z.inv() - image.center).norm() - image.radius).abs() / image.radius;
            max_rim = max_rim.max(err);
        }
        let back = invert_disk(&image).unwrap();
        let err = ((back.center - disk.center).norm() + (back.radius - disk.radius).abs())
            / disk.radius;
        max_involution = max_involution.max(err);
    }
    assert!(max_rim <= 1e-10, "rim error {max_rim:.2e}");
    assert!(max_involution <= 1e-9, "involution error {max_involution:.2e}");
    println!(
        "criterion 04 PASS: 10^4 random disk inversions match the closed form \
         (rim {max_rim:.1e}, round-trip {max_involution:.1e})"
    );
}

#[test]
fn criterion_05_probe_ball_inclusions() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut preimage_checks = 0u64;
    let mut case1_checks = 0u64;
    while preimage_checks < 10_000 || case1_checks < 10_000 {
        let tau = tau(rng.gen_range(0.0..3.0), rng.gen_range(1.0..4.0));
        let spectral = spectral_data(tau);

        let target = Complex64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
        let radius = rng.gen_range(0.01..1.0);
        let probe = preimage_probe_ball(tau, target, radius).unwrap();
        for k in 0..8 {
            let z = probe.boundary_point(2.0 * std::f64::consts::PI * k as f64 / 8.0);
            assert!(
                (spectral.apply_e(z) - target).norm() <= radius + 1e-12,
                "probe ball escapes its target at tau = {tau:?}"
            );
            preimage_checks += 1;
        }

        let w = Complex64::from_polar(
            rng.gen_range(1.0..40.0),
            rng.gen_range(0.0..std::f64::consts::TAU),
        );
        let r_bar = w.norm() * rng.gen_range(0.05..0.9);
        let probe = case1_probe_ball(tau, w, r_bar, rng.gen_range(2.0..4.0)).unwrap();
        for k in 0..8 {
            let z = probe.boundary_point(2.0 * std::f64::consts::PI * k as f64 / 8.0);
            let y = spectral.apply_e(z);
            assert!(
                y.norm() <= w.norm() + 1e-12 && (y - w).norm() <= r_bar + 1e-12,
                "near-origin probe ball escapes the lens at tau = {tau:?}"
            );
            case1_checks += 1;
        }
    }
    println!(
        "criterion 05 PASS: {preimage_checks} + {case1_checks} probe-ball containment \
         checks, zero violations at 1e-12"
    );
}

#[test]
fn criterion_06_cifs_axioms_on_truncations() {
    for tau in tau_panel() {
        let config = SystemConfig::new(tau, 20.0, 1).unwrap();
        let osc = osc_audit(&config).unwrap();
        assert!(
            osc.violations.is_empty(),
            "open image disks overlap for tau = {tau:?}: {:?}",
            osc.violations
        );
        let sup = config
            .index_set()
            .points()
            .iter()
            .map(|&b| generator_derivative_range(b).max)
            .fold(0.0f64, f64::max);
        assert!(sup < 1.0, "a generator fails to contract for tau = {tau:?}");
    }

    // distortion at tau = i against the closed-form extremal oracle
    let config = SystemConfig::new(tau_i(), 20.0, 1).unwrap();
    let report = distortion_audit(&config, 1, 0).unwrap();
    assert!(report.k_hat.is_finite());
    let oracle = config
        .index_set()
        .points()
        .iter()
        .map(|&b| {
            let range = generator_derivative_range(b);
            range.max / range.min
        })
        .fold(1.0f64, f64::max);
    assert!(
        (report.k_hat - oracle).abs() <= 1e-9 * oracle,
        "distortion search {} disagrees with the closed form {oracle}",
        report.k_hat
    );
    // extremal single-letter distortion at tau = i, attained at b = 1 + i
    assert!((oracle - 3.124_381).abs() <= 1e-4);
    println!(
        "criterion 06 PASS: OSC clean, all generators contract, distortion matches the \
         closed-form extremum {oracle:.6} at tau = i"
    );
}

#[test]
fn criterion_07_pressure_sum_properties() {
    let tau = tau_i();

    // monotone nonincreasing in t on a 20-point grid
    let mut previous = f64::INFINITY;
    for k in 0..20 {
        let t = 1.0 + 2.0 * k as f64 / 19.0;
        let value = psi(tau, t, 10.0, 1).unwrap().value;
        assert!(value <= previous, "partition sum rose at t = {t}");
        previous = value;
    }

    // submultiplicativity psi^2 <= (psi^1)^2 on truncations up to 200 indices
    for bound in [6.0, 10.0, 16.0] {
        let set = enumerate_indices(tau, bound).unwrap();
        assert!(set.len() <= 200, "truncation {bound} exceeds 200 indices");
        for t in [1.1, 1.5, 2.0] {
            let one = psi(tau, t, bound, 1).unwrap().value;
            let two = psi(tau, t, bound, 2).unwrap().value;
            assert!(
                two <= one * one * (1.0 + 1e-9),
                "psi^2 = {two} exceeds (psi^1)^2 = {} at t = {t}, bound {bound}",
                one * one
            );
        }
    }

    // t = 1 diverges with the truncation, t = 1.5 converges
    let mut previous = 0.0;
    for bound in [8.0, 16.0, 32.0, 64.0] {
        let value = psi(tau, 1.0, bound, 1).unwrap().value;
        assert!(value > previous, "t = 1 partial sums stalled at bound {bound}");
        previous = value;
    }
    let grid = [16.0, 32.0, 64.0, 128.0, 256.0, 512.0];
    assert_eq!(theta_probe(tau, 1.0, &grid).unwrap().verdict, ThetaVerdict::Diverges);
    assert_eq!(theta_probe(tau, 1.5, &grid).unwrap().verdict, ThetaVerdict::Converges);
    println!(
        "criterion 07 PASS: partition sums decrease in t, stay submultiplicative, \
         diverge at t = 1 and converge at t = 1.5"
    );
}

/// Single-letter sup of `|phi_b'|` over `X`: the nearest point of `X + b` to
/// the origin lies at distance `|b + 1/2| - 1/2`.
fn single_letter_sup(b: Complex64) -> f64 {
    let near = (b + Complex64::new(0.5, 0.0)).norm() - 0.5;
    1.0 / (near * near)
}

#[test]
fn criterion_08_dimension_estimates() {
    // four-term oracle: the 2x2 truncation at tau = i
    let tau = tau_i();
    let set = enumerate_indices(tau, 2.9).unwrap();
    assert_eq!(set.len(), 4);
    let sups: Vec<f64> = set.points().iter().map(|&b| single_letter_sup(b)).collect();
    let sum_at = |t: f64| sups.iter().map(|s| s.powf(t)).sum::<f64>();
    let (mut lo, mut hi) = (1.0f64, 2.0f64);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if sum_at(mid) > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let oracle = 0.5 * (lo + hi);
    assert!((oracle - 1.16).abs() <= 0.01, "four-term oracle drifted: {oracle}");

    let estimate = bowen_root(tau, 2.9, 1, 1e-10).unwrap();
    assert!(estimate.residual <= 1e-9);
    assert!((estimate.h - oracle).abs() <= 1e-8);

    // roots grow with the truncation and stay inside (1, 2)
    let mut previous = 0.0;
    for bound in [2.9, 6.0, 10.0, 15.0] {
        let root = bowen_root(tau, bound, 1, 1e-10).unwrap();
        assert!(root.residual <= 1e-9);
        assert!(root.h > previous, "root failed to grow at bound {bound}");
        assert!(root.h > 1.0 && root.h < 2.0);
        previous = root.h;
    }
    for length in [2u32, 3] {
        let root = bowen_root(tau, 15.0, length, 1e-10).unwrap();
        assert!(root.residual <= 1e-9);
        assert!(root.h > 1.0 && root.h < 2.0);
    }
    println!(
        "criterion 08 PASS: four-term root {oracle:.4} reproduced, residuals <= 1e-9, \
         roots monotone in truncation and inside (1, 2) at word lengths 1-3"
    );
}

#[test]
fn criterion_09_measure_suite() {
    let started = Instant::now();
    let tau = tau_i();
    let bound = 51.25;
    let set = enumerate_indices(tau, bound).unwrap();
    assert!(set.len() >= 2000, "only {} indices at bound {bound}", set.len());

    let h = bowen_root(tau, bound, 2, 1e-9).unwrap().h;
    let fine = build_measure(tau, h, bound, 2).unwrap();

    // normalization
    let total: f64 = (0..fine.len()).map(|i| fine.weight_mid(i)).sum();
    assert!((total - 1.0).abs() <= 1e-9, "weights sum to {total}");

    // refinement ratios against the single-letter measure, for every parent
    let coarse = build_measure(tau, h, bound, 1).unwrap();
    let k_hat = distortion_audit(&SystemConfig::new(tau, bound, 1).unwrap(), 1, 0)
        .unwrap()
        .k_hat;
    let (ratio_lo, ratio_hi) = (k_hat.powf(-2.0 * h), k_hat.powf(2.0 * h));
    for parent in 0..set.len() {
        let ratio = fine.group_mid(parent) / coarse.weight_mid(parent);
        assert!(
            ratio >= ratio_lo && ratio <= ratio_hi,
            "refinement ratio {ratio} escapes [{ratio_lo}, {ratio_hi}] at parent {parent}"
        );
    }

    // ball-mass floors never regress as the level is refined
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let balls: Vec<Disk> = (0..50)
        .map(|_| {
            let center = Complex64::new(rng.gen_range(0.1..0.9), rng.gen_range(-0.4..0.4));
            Disk::new(center, rng.gen_range(0.02..0.3)).unwrap()
        })
        .collect();
    let mut previous = vec![0.0f64; balls.len()];
    for level in 1..=3 {
        let measure = build_measure(tau, 1.35, 15.0, level).unwrap();
        for (ball, prev) in balls.iter().zip(previous.iter_mut()) {
            let lower = ball_mass(&measure, ball).lower;
            assert!(
                lower >= *prev - 1e-12,
                "floor regressed at level {level}: {lower} < {prev}"
            );
            *prev = lower;
        }
    }

    // local scaling exponent of the mass floors tracks h
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let centers: Vec<Complex64> = (0..40)
        .map(|_| {
            let letters: Vec<_> = (0..3).map(|_| set.get(rng.gen_range(0..64))).collect();
            compose(&Word::new(tau, letters).unwrap()).apply(Complex64::new(0.0, 0.0))
        })
        .collect();
    let grid: Vec<f64> = (0..12)
        .map(|k| 0.002 * 100.0f64.powf(k as f64 / 11.0))
        .collect();
    let fit = scaling_exponent_fit(&fine, &centers, &grid).unwrap();
    assert!(
        (fit.exponent - h).abs() <= 0.15,
        "scaling exponent {} vs dimension {h}",
        fit.exponent
    );

    let elapsed = started.elapsed().as_secs_f64();
    assert!(elapsed < 300.0, "measure suite took {elapsed:.0}s");
    println!(
        "criterion 09 PASS: weights normalized, refinement bounded by distortion, floors \
         monotone in level, scaling exponent {:.3} within 0.15 of h = {h:.3} ({elapsed:.0}s)",
        fit.exponent
    );
}

#[test]
fn criterion_10_ball_mass_floor_scan() {
    let tau = tau(0.0, 3.0);
    let bound = 135.0;
    let spectral = spectral_data(tau);

    // empirical constants: distortion, growth, dimension
    let config = SystemConfig::new(tau, bound, 2).unwrap();
    let k_hat = distortion_audit(&config, 2, 99).unwrap().k_hat;
    let grid: Vec<f64> = (1..=20).map(|i| 10.0 * i as f64).collect();
    let growth = fit_growth_constants(tau, &grid).unwrap();
    let c_upper = growth
        .samples
        .iter()
        .map(|&(r, n)| n as f64 / (r * r))
        .fold(0.0f64, f64::max);
    let h = bowen_root(tau, bound, 2, 1e-9).unwrap().h;
    let constants = packing_constants(tau, k_hat, h, growth.q_hat, c_upper).unwrap();

    // closed-form reproduction of the derived constants
    assert_eq!(constants.q_prime, 1.0 / (32.0 * spectral.lambda2));
    assert_eq!(constants.c_prime, 34.0 * spectral.lambda2.sqrt());
    assert_eq!(constants.gamma, k_hat);
    assert_eq!(constants.xi, constants.r0 * constants.r0);
    assert!(constants.l > 0.0 && constants.l_prime > 0.0);

    // stratified centers across the truncation
    let set = enumerate_indices(tau, bound).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut by_band: Vec<Vec<usize>> = vec![Vec::new(); 4];
    for i in 0..set.len() {
        let norm = set.point(i).norm();
        let band = if norm < 12.0 {
            continue;
        } else if norm < 40.0 {
            0
        } else if norm < 90.0 {
            1
        } else if norm <= 128.0 {
            2
        } else {
            3
        };
        by_band[band].push(i);
    }
    let mut b_sample = Vec::new();
    for pool in &by_band {
        for _ in 0..12.min(pool.len()) {
            b_sample.push(set.get(pool[rng.gen_range(0..pool.len())]));
        }
    }
    b_sample.sort();
    b_sample.dedup();

    // headline scan at level 2 plus the level-1 baseline for cases 2 and 3
    let mut case_minima = [[0.0f64; 3]; 2];
    for (slot, level) in [1u32, 2].into_iter().enumerate() {
        let measure = build_measure(tau, h, bound, level).unwrap();
        let report = ball_mass_floor_scan(&measure, &constants, &b_sample, 8).unwrap();
        for sample in &report.samples {
            assert!(
                sample.ratio > 0.0,
                "nonpositive floor at {:?}, r = {} (level {level})",
                sample.index,
                sample.radius
            );
        }
        for case in &report.cases {
            assert!(case.scanned > 0, "case {} empty at level {level}", case.case_id);
            case_minima[slot][case.case_id as usize - 1] = case.min_ratio.unwrap();
        }
    }
    for case_id in [2usize, 3] {
        let (one, two) = (case_minima[0][case_id - 1], case_minima[1][case_id - 1]);
        assert!(
            (two / one - 1.0).abs() <= 0.2,
            "case {case_id} minimum drifted {one} -> {two} between levels 1 and 2"
        );
    }

    // case-1 minima compared between levels 2 and 4 at a truncation small
    // enough to refine twice; the scan windows there hold only case-1 radii
    let near_bound = 17.0;
    let near_set = enumerate_indices(tau, near_bound).unwrap();
    let near_sample: Vec<_> = (0..near_set.len())
        .filter(|&i| near_set.point(i).norm() >= 11.0)
        .map(|i| near_set.get(i))
        .collect();
    let mut near_minima = [0.0f64; 2];
    for (slot, level) in [2u32, 4].into_iter().enumerate() {
        let measure = build_measure(tau, h, near_bound, level).unwrap();
        let report = ball_mass_floor_scan(&measure, &constants, &near_sample, 8).unwrap();
        for sample in &report.samples {
            assert!(sample.ratio > 0.0);
        }
        let case1 = &report.cases[0];
        assert!(case1.scanned > 0);
        near_minima[slot] = case1.min_ratio.unwrap();
    }
    assert!(
        (near_minima[1] / near_minima[0] - 1.0).abs() <= 0.2,
        "case 1 minimum drifted {} -> {} between levels 2 and 4",
        near_minima[0],
        near_minima[1]
    );

    println!(
        "criterion 10 PASS: all scanned floors positive; per-case minima \
         [{:.3}, {:.3}, {:.3}] at level 2, stable within 20% under level doubling \
         (case 1: {:.3} -> {:.3} at levels 2 -> 4)",
        case_minima[1][0], case_minima[1][1], case_minima[1][2], near_minima[0], near_minima[1]
    );
}
