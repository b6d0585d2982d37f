//! Exact planar geometry underneath the continued fraction system.
//!
//! The three pillars:
//!
//! * inversion `z -> 1/z` maps a disk avoiding the origin onto another disk,
//!   in closed form (no sampling, no fitting);
//! * the lattice shear `E = [[1, u], [0, v]]` attached to a parameter
//!   `tau = u + iv` has explicit eigendata for `F = E^T E`, which controls how
//!   balls distort under the change of coordinates;
//! * two probe-ball constructions produce round balls guaranteed to land
//!   inside a target ball (or a lens) after applying `E`.
//!
//! Points of the plane are `Complex64` throughout; a matrix acts on the pair
//! `(re, im)`.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Slack for closed containment and intersection tests on disks.
pub const CONTAINS_TOL: f64 = 1e-12;

/// Closed disk `|z - center| <= radius`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Disk {
    pub center: Complex64,
    pub radius: f64,
}

impl Disk {
    /// Requires a finite center and a finite radius `>= 0`.
    pub fn new(center: Complex64, radius: f64) -> Result<Disk> {
        if !center.re.is_finite() || !center.im.is_finite() {
            return Err(Error::domain("disk center must be finite"));
        }
        if !radius.is_finite() || radius < 0.0 {
            return Err(Error::domain(format!(
                "disk radius must be finite and nonnegative, got {radius}"
            )));
        }
        Ok(Disk { center, radius })
    }

    pub fn diameter(&self) -> f64 {
        2.0 * self.radius
    }

    /// Closed membership with [`CONTAINS_TOL`] slack.
    pub fn contains_point(&self, z: Complex64) -> bool {
        (z - self.center).norm() <= self.radius + CONTAINS_TOL
    }

    /// Closed containment of `inner`: `|dc| + r_in <= r_out + tol`.
    pub fn contains_disk(&self, inner: &Disk) -> bool {
        (inner.center - self.center).norm() + inner.radius <= self.radius + CONTAINS_TOL
    }

    /// Closed intersection: `|dc| <= r + r' + tol`.
    pub fn intersects_disk(&self, other: &Disk) -> bool {
        (other.center - self.center).norm() <= self.radius + other.radius + CONTAINS_TOL
    }

    /// Point of the boundary circle at angle `theta`.
    pub fn boundary_point(&self, theta: f64) -> Complex64 {
        self.center + Complex64::from_polar(self.radius, theta)
    }
}

/// Closed containment test used by every module; delegates to
/// [`Disk::contains_disk`].
pub fn disk_contains(outer: &Disk, inner: &Disk) -> bool {
    outer.contains_disk(inner)
}

/// Lattice parameter `tau = u + iv` restricted to `u >= 0`, `v >= 1`.
///
/// The restriction guarantees `|m + n tau| >= |1 + tau| > 1` for all indices
/// `m, n >= 1`, so every generator is a uniform contraction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TauParam {
    u: f64,
    v: f64,
}

impl TauParam {
    pub fn new(u: f64, v: f64) -> Result<TauParam> {
        if !u.is_finite() || !v.is_finite() || u < 0.0 || v < 1.0 {
            return Err(Error::domain(format!(
                "tau = {u} + {v}i is outside the admissible set (u >= 0, v >= 1)"
            )));
        }
        Ok(TauParam { u, v })
    }

    pub fn u(&self) -> f64 {
        self.u
    }

    pub fn v(&self) -> f64 {
        self.v
    }

    pub fn as_complex(&self) -> Complex64 {
        Complex64::new(self.u, self.v)
    }

    /// The lattice point `m + n tau` as a point of the plane.
    pub fn lattice_point(&self, m: u32, n: u32) -> Complex64 {
        let (m, n) = (f64::from(m), f64::from(n));
        Complex64::new(m + n * self.u, n * self.v)
    }

    /// Modulus of the smallest lattice element `1 + tau`.
    pub fn min_modulus(&self) -> f64 {
        self.lattice_point(1, 1).norm()
    }
}

/// Eigendata of `F = E^T E` for the shear `E = [[1, u], [0, v]]`.
///
/// Invariants kept by construction: `lambda1 <= lambda2`,
/// `lambda1 * lambda2 = v^2`, `v_matrix` orthogonal with
/// `F = V diag(lambda) V^T`, and `n_tau = sqrt(2 lambda2 / lambda1) + 1 > 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralData {
    tau: TauParam,
    pub lambda1: f64,
    pub lambda2: f64,
    /// Orthogonal eigenvector matrix, columns ordered like the eigenvalues.
    /// Identity when `u = 0` (in particular at the umbilic `tau = i`).
    pub v_matrix: [[f64; 2]; 2],
    pub n_tau: f64,
}

/// Closed-form eigendata of `F_tau`; the characteristic roots of
/// `lambda^2 - (1 + |tau|^2) lambda + v^2`.
pub fn spectral_data(tau: TauParam) -> SpectralData {
    let (u, v) = (tau.u(), tau.v());
    let trace = 1.0 + u * u + v * v;
    // trace^2 - 4 v^2 factors as ((v-1)^2 + u^2) ((v+1)^2 + u^2); the product
    // form avoids cancellation for tau near i.
    let disc = ((v - 1.0) * (v - 1.0) + u * u) * ((v + 1.0) * (v + 1.0) + u * u);
    let lambda2 = 0.5 * (trace + disc.sqrt());
    let lambda1 = (v * v) / lambda2;
    let v_matrix = if u == 0.0 {
        // F is already diagonal (diag(1, v^2) with 1 <= v^2).
        [[1.0, 0.0], [0.0, 1.0]]
    } else {
        // Eigenvector for lambda is (u, lambda - 1); the two are orthogonal.
        let col = |lambda: f64| {
            let norm = (u * u + (lambda - 1.0) * (lambda - 1.0)).sqrt();
            [u / norm, (lambda - 1.0) / norm]
        };
        let c1 = col(lambda1);
        let c2 = col(lambda2);
        [[c1[0], c2[0]], [c1[1], c2[1]]]
    };
    let n_tau = (2.0 * lambda2 / lambda1).sqrt() + 1.0;
    SpectralData {
        tau,
        lambda1,
        lambda2,
        v_matrix,
        n_tau,
    }
}

impl SpectralData {
    pub fn tau(&self) -> TauParam {
        self.tau
    }

    pub fn e_matrix(&self) -> [[f64; 2]; 2] {
        [[1.0, self.tau.u()], [0.0, self.tau.v()]]
    }

    pub fn f_matrix(&self) -> [[f64; 2]; 2] {
        let (u, v) = (self.tau.u(), self.tau.v());
        [[1.0, u], [u, u * u + v * v]]
    }

    /// `E (x, y)`.
    pub fn apply_e(&self, p: Complex64) -> Complex64 {
        let (u, v) = (self.tau.u(), self.tau.v());
        Complex64::new(p.re + u * p.im, v * p.im)
    }

    /// `E^{-1} (x, y)`; `E` is invertible since `v >= 1`.
    pub fn apply_e_inv(&self, p: Complex64) -> Complex64 {
        let (u, v) = (self.tau.u(), self.tau.v());
        Complex64::new(p.re - (u / v) * p.im, p.im / v)
    }
}

/// Image of a disk under `z -> 1/z`, in closed form.
///
/// For `B(x, r)` with `0` strictly outside the closed disk (`|x| > r`), the
/// image is the disk with center `conj(x) / (|x|^2 - r^2)` and radius
/// `r / (|x|^2 - r^2)`. Boundary maps onto boundary.
pub fn invert_disk(disk: &Disk) -> Result<Disk> {
    let x = disk.center;
    let r = disk.radius;
    let denom = x.norm_sqr() - r * r;
    if !(denom > 0.0) {
        return Err(Error::domain(format!(
            "inversion needs |center| > radius, got |{x}| = {} vs {r}",
            x.norm()
        )));
    }
    Disk::new(x.conj() / denom, r / denom)
}

/// Round ball whose `E`-image is guaranteed inside `B(x_tilde, r_tilde)`.
///
/// Returns `B(E^{-1} x_tilde, r_tilde / sqrt(lambda2))`; since
/// `|E y|^2 <= lambda2 |y|^2`, every point of the returned open ball lands in
/// the open target after applying `E`.
pub fn preimage_probe_ball(tau: TauParam, x_tilde: Complex64, r_tilde: f64) -> Result<Disk> {
    if !(r_tilde > 0.0) || !r_tilde.is_finite() {
        return Err(Error::domain(format!(
            "probe target radius must be positive and finite, got {r_tilde}"
        )));
    }
    let spec = spectral_data(tau);
    Disk::new(spec.apply_e_inv(x_tilde), r_tilde / spec.lambda2.sqrt())
}

/// Round ball whose `E`-image sits inside the lens
/// `B(0, |w|) intersect B(w, r_bar)`.
///
/// For `|w| > r_bar > 0` and a margin factor `m_factor >= 2`, the ball is
/// centered at `E^{-1}(w - (r_bar / (m_factor |w|)) w)` with radius
/// `r_bar / (sqrt(lambda2) m_factor)`: pulling the center toward the origin
/// by `r_bar / m_factor` leaves room on both sides of the lens.
pub fn case1_probe_ball(tau: TauParam, w: Complex64, r_bar: f64, m_factor: f64) -> Result<Disk> {
    let w_norm = w.norm();
    if !(r_bar > 0.0) || !(w_norm > r_bar) {
        return Err(Error::domain(format!(
            "lens probe needs |w| > r_bar > 0, got |w| = {w_norm}, r_bar = {r_bar}"
        )));
    }
    if !(m_factor >= 2.0) {
        return Err(Error::domain(format!(
            "lens probe margin factor must be >= 2, got {m_factor}"
        )));
    }
    let spec = spectral_data(tau);
    let pulled = w - w * (r_bar / (m_factor * w_norm));
    Disk::new(
        spec.apply_e_inv(pulled),
        r_bar / (spec.lambda2.sqrt() * m_factor),
    )
}
