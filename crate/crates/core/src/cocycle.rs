//! Tangent cocycle numerics: QR-accumulated products, finite-time Lyapunov
//! exponents and finite-window estimates of the Oseledets directions.
//!
//! Products of Jacobians are never formed explicitly. A window product
//! `A = M_w ... M_1` is carried as `Q * T` with `Q` orthogonal and
//! `T = tau * [[1, c], [0, d]]`, where `tau` and `|d|` live in log space. The
//! right singular vectors of `A` are those of the well-scaled `[[1, c], [0, d]]`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{qr, sym_eigenvalues, sym_major_eigenvector, Mat2, Vec2};
use crate::maps::{Direction, MapDescriptor, TorusPoint};

pub const DEFAULT_WINDOW: usize = 40;

/// Backward steps used to align the QR frame before exponents are accumulated.
pub const FTLE_WARMUP: usize = 32;

/// Singular-value ratio below which a window product counts as degenerate.
pub const MIN_SINGULAR_RATIO: f64 = 1.0 + 1e-6;

/// Minimum growth of the log singular gap between the half and the full
/// window. Polynomially growing (parabolic) cocycles add about `ln 4`.
pub const MIN_GAP_INCREMENT: f64 = 2.079_441_541_679_835_8; // ln 8

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LyapunovEstimate {
    pub lambda_u: f64,
    pub lambda_s: f64,
    /// Number of steps of `f^N` in the window.
    pub n: usize,
    /// Largest disagreement between the first- and second-half estimates.
    pub residual: f64,
    /// The `N` of the iterate the exponents belong to.
    pub iterate: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DirectionPair {
    /// Stable direction estimate.
    pub e: Vec2,
    /// Unstable direction estimate.
    pub f: Vec2,
    pub cos_angle: f64,
}

impl DirectionPair {
    pub fn new(e: Vec2, f: Vec2) -> Self {
        let e = e.normalized();
        let f = f.normalized();
        Self {
            e,
            f,
            cos_angle: e.dot(f).abs().min(1.0),
        }
    }

    pub fn swapped(&self) -> Self {
        Self::new(self.f, self.e)
    }
}

/// Singular structure of a finite window product.
#[derive(Debug, Clone, Copy)]
pub struct WindowSplit {
    /// Most contracted right singular direction.
    pub contracted: Vec2,
    /// `ln(s1 / s2)` over the full window.
    pub log_gap: f64,
    /// `ln(s1 / s2)` over the first half of the window.
    pub half_log_gap: f64,
    pub window: usize,
}

impl WindowSplit {
    pub fn is_degenerate(&self) -> bool {
        self.log_gap < MIN_SINGULAR_RATIO.ln()
            || self.log_gap - self.half_log_gap < MIN_GAP_INCREMENT
    }

    pub fn check(self) -> Result<Self> {
        if self.is_degenerate() {
            Err(Error::DegenerateSplitting {
                window: self.window,
            })
        } else {
            Ok(self)
        }
    }
}

/// Normalised upper-triangular factor `[[1, c], [0, sign * exp(log_d)]]`.
#[derive(Debug, Clone, Copy)]
struct NormalizedTriangle {
    c: f64,
    log_d: f64,
    sign_d: f64,
}

impl NormalizedTriangle {
    const IDENTITY: Self = Self {
        c: 0.0,
        log_d: 0.0,
        sign_d: 1.0,
    };

    fn d(&self) -> f64 {
        self.sign_d * self.log_d.exp()
    }

    /// Left-multiply by `[[r11, r12], [0, r22]]` and renormalise.
    fn push(&mut self, r11: f64, r12: f64, r22: f64) {
        self.c += r12 / r11 * self.d();
        self.log_d += (r22 / r11).abs().ln();
        if r22 < 0.0 {
            self.sign_d = -self.sign_d;
        }
    }

    /// `(ln(s1/s2), most contracted right singular vector)`.
    fn singular(&self) -> (f64, Vec2) {
        let d = self.d();
        let (p, q, r) = (1.0, self.c, self.c * self.c + d * d);
        let (l1, _) = sym_eigenvalues(p, q, r);
        let major = sym_major_eigenvector(p, q, r);
        (l1.ln() - self.log_d, major.perp())
    }
}

/// Most contracted right singular direction of `M_w ... M_1` for the
/// matrices yielded in application order `M_1, M_2, ...`.
pub fn contracted_direction<I>(mats: I) -> Result<WindowSplit>
where
    I: IntoIterator<Item = Mat2>,
    I::IntoIter: ExactSizeIterator,
{
    let mats = mats.into_iter();
    let window = mats.len();
    if window < 2 {
        return Err(Error::InvalidArgument(format!(
            "window must be at least 2, got {window}"
        )));
    }
    let half = window / 2;
    let mut frame = Mat2::IDENTITY;
    let mut tri = NormalizedTriangle::IDENTITY;
    let mut half_log_gap = 0.0;
    for (k, m) in mats.enumerate() {
        let step = qr(&(m * frame));
        frame = step.q;
        tri.push(step.r11, step.r12, step.r22);
        if k + 1 == half {
            half_log_gap = tri.singular().0;
        }
    }
    let (log_gap, contracted) = tri.singular();
    Ok(WindowSplit {
        contracted,
        log_gap,
        half_log_gap,
        window,
    })
}

/// Finite-window estimates of the stable and unstable directions at `p`.
pub fn oseledets_directions(
    map: &MapDescriptor,
    p: TorusPoint,
    window: usize,
) -> Result<DirectionPair> {
    map.validate()?;
    let forward = jacobians_along(map, p, window, Direction::Forward);
    let backward = jacobians_along(map, p, window, Direction::Backward);
    let e = contracted_direction(forward)?.check()?.contracted;
    let f = contracted_direction(backward)?.check()?.contracted;
    Ok(DirectionPair::new(e, f))
}

fn jacobians_along(
    map: &MapDescriptor,
    p: TorusPoint,
    n: usize,
    direction: Direction,
) -> Vec<Mat2> {
    let mut q = p;
    (0..n)
        .map(|_| {
            let (next, j) = map.step_unchecked(q, direction);
            q = next;
            j
        })
        .collect()
}

/// Unit vector at `p` aligned with the expanding direction by pushing a fixed
/// vector forward along `steps` points of the backward orbit.
fn aligned_vector(map: &MapDescriptor, p: TorusPoint, steps: usize) -> Vec2 {
    let back = jacobians_along(map, p, steps, Direction::Backward);
    let mut v = Vec2::new(0.6, 0.8);
    for b in back.iter().rev() {
        if let Some(fwd) = b.inverse() {
            v = fwd.apply(v).normalized();
        }
    }
    v
}

/// Raw half-window sums of the QR log scale factors.
#[derive(Debug, Clone, Copy, Default)]
pub struct ExponentSums {
    /// `[half][0]` sums `ln R11`, `[half][1]` sums `ln |R22|`.
    sums: [[f64; 2]; 2],
    lengths: [usize; 2],
    iterate: u32,
}

impl ExponentSums {
    pub fn merge(mut self, other: &ExponentSums) -> Self {
        for h in 0..2 {
            self.sums[h][0] += other.sums[h][0];
            self.sums[h][1] += other.sums[h][1];
            self.lengths[h] += other.lengths[h];
        }
        self.iterate = other.iterate;
        self
    }

    pub fn estimate(&self) -> LyapunovEstimate {
        let total = (self.lengths[0] + self.lengths[1]) as f64;
        let mut lambda_u = (self.sums[0][0] + self.sums[1][0]) / total;
        let mut lambda_s = (self.sums[0][1] + self.sums[1][1]) / total;
        let first = self.lengths[0] as f64;
        let second = self.lengths[1] as f64;
        let residual = (self.sums[0][0] / first - self.sums[1][0] / second)
            .abs()
            .max((self.sums[0][1] / first - self.sums[1][1] / second).abs());
        if lambda_u < lambda_s {
            std::mem::swap(&mut lambda_u, &mut lambda_s);
        }
        LyapunovEstimate {
            lambda_u,
            lambda_s,
            n: self.lengths[0] + self.lengths[1],
            residual,
            iterate: self.iterate,
        }
    }
}

/// Finite-time Lyapunov exponents of `f^N` from `p` over `n` steps.
///
/// The QR frame starts aligned with the backward-orbit expanding direction, so
/// no transient enters the averages.
pub fn ftle(map: &MapDescriptor, p: TorusPoint, n: usize) -> Result<LyapunovEstimate> {
    ftle_sums(map, p, n).map(|s| s.estimate())
}

pub fn ftle_sums(map: &MapDescriptor, p: TorusPoint, n: usize) -> Result<ExponentSums> {
    map.validate()?;
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "ftle needs at least 2 steps, got {n}"
        )));
    }
    let u = aligned_vector(map, p, FTLE_WARMUP);
    let mut frame = Mat2::from_columns(u, u.perp());
    let half = n / 2;
    let mut sums = [[0.0f64; 2]; 2];
    let mut q = p;
    for k in 0..n {
        let (next, j) = map.step_unchecked(q, Direction::Forward);
        let step = qr(&(j * frame));
        frame = step.q;
        let slot = usize::from(k >= half);
        sums[slot][0] += step.r11.ln();
        sums[slot][1] += step.r22.abs().ln();
        q = next;
    }
    Ok(ExponentSums {
        sums,
        lengths: [half, n - half],
        iterate: map.iterate,
    })
}

/// `ln ||d f^{±N} u_k||` along the orbit, where `u_k` is the normalised
/// transport of `v`.
///
/// This is plain forward transport: along a contracting direction rounding
/// errors grow like the expansion rate, so long windows drift toward the
/// unstable direction. [`Orbit::stable_log_norms`] avoids this.
pub fn step_log_norms(
    map: &MapDescriptor,
    p: TorusPoint,
    v: Vec2,
    n: usize,
    direction: Direction,
) -> Result<Vec<f64>> {
    map.validate()?;
    let mut u = v.normalized();
    let mut q = p;
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let (next, j) = map.step_unchecked(q, direction);
        let w = j.apply(u);
        let norm = w.norm();
        out.push(norm.ln());
        u = w.scale(1.0 / norm);
        q = next;
    }
    Ok(out)
}

/// `ln |det d f^{±N}|` at the first `n` orbit points.
pub fn log_det_sequence(
    map: &MapDescriptor,
    p: TorusPoint,
    n: usize,
    direction: Direction,
) -> Result<Vec<f64>> {
    map.validate()?;
    Ok(jacobians_along(map, p, n, direction)
        .iter()
        .map(|j| j.det().abs().ln())
        .collect())
}

/// Stored orbit segment with the forward Jacobians of `f^N` at every point.
///
/// Points before the origin come from iterating the exact inverse, points
/// after it from iterating the map; each half is a pseudo-orbit accurate to
/// rounding per step. The Jacobian of `f^{-N}` at point `i` is taken as the
/// inverse of the forward Jacobian at `i - 1`.
#[derive(Debug, Clone)]
pub struct Orbit {
    pub points: Vec<TorusPoint>,
    pub jacobians: Vec<Mat2>,
    pub inverse_jacobians: Vec<Mat2>,
    /// Index of the base point.
    pub origin: usize,
}

impl Orbit {
    /// Orbit of `p` from `f^{-before}(p)` to `f^{after}(p)` inclusive.
    pub fn around(map: &MapDescriptor, p: TorusPoint, before: usize, after: usize) -> Result<Self> {
        map.validate()?;
        let mut points = Vec::with_capacity(before + after + 1);
        let mut q = p;
        for _ in 0..before {
            q = map.step_unchecked(q, Direction::Backward).0;
            points.push(q);
        }
        points.reverse();
        points.push(p);
        let mut q = p;
        for _ in 0..after {
            q = map.step_unchecked(q, Direction::Forward).0;
            points.push(q);
        }
        let jacobians: Vec<Mat2> = points
            .iter()
            .map(|&q| map.step_unchecked(q, Direction::Forward).1)
            .collect();
        let inverse_jacobians = jacobians
            .iter()
            .map(|j| {
                j.inverse().ok_or_else(|| {
                    Error::NonInvertibleParameters("singular Jacobian along orbit".into())
                })
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            points,
            jacobians,
            inverse_jacobians,
            origin: before,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Stable direction at index `i` from the forward window `[i, i + window)`.
    pub fn stable_split(&self, i: usize, window: usize) -> Result<WindowSplit> {
        if i + window > self.len() {
            return Err(Error::PreconditionNotMet("forward window leaves the orbit"));
        }
        contracted_direction(self.jacobians[i..i + window].iter().copied())
    }

    /// Unstable direction at index `i` from the backward window reaching `i - window`.
    pub fn unstable_split(&self, i: usize, window: usize) -> Result<WindowSplit> {
        if window > i {
            return Err(Error::PreconditionNotMet(
                "backward window leaves the orbit",
            ));
        }
        contracted_direction(self.inverse_jacobians[i - window..i].iter().rev().copied())
    }

    /// Direction pairs at every index whose windows fit; `None` marks either
    /// a missing window or a degenerate splitting.
    pub fn directions(&self, window: usize) -> Vec<Option<DirectionPair>> {
        (0..self.len())
            .map(|i| {
                let e = self
                    .stable_split(i, window)
                    .and_then(WindowSplit::check)
                    .ok()?;
                let f = self
                    .unstable_split(i, window)
                    .and_then(WindowSplit::check)
                    .ok()?;
                Some(DirectionPair::new(e.contracted, f.contracted))
            })
            .collect()
    }

    /// `ln ||d f|_{E_i}||` for each index, using the local stable estimate.
    pub fn stable_log_norms(&self, dirs: &[Option<DirectionPair>]) -> Vec<Option<f64>> {
        dirs.iter()
            .zip(&self.jacobians)
            .map(|(d, j)| d.map(|d| j.apply(d.e).norm().ln()))
            .collect()
    }

    /// `ln ||d f^{-1}|_{F_i}||` for each index (undefined at index 0).
    pub fn unstable_log_norms(&self, dirs: &[Option<DirectionPair>]) -> Vec<Option<f64>> {
        dirs.iter()
            .enumerate()
            .map(|(i, d)| {
                let d = (*d)?;
                let inv = self.inverse_jacobians.get(i.checked_sub(1)?)?;
                Some(inv.apply(d.f).norm().ln())
            })
            .collect()
    }

    /// `ln |det d f|` at each index.
    pub fn log_dets(&self) -> Vec<f64> {
        self.jacobians.iter().map(|j| j.det().abs().ln()).collect()
    }
}

/// Orbit segment of length `n` from `p` with per-step cocycle data.
#[derive(Debug, Clone)]
pub struct CocycleTrace {
    pub base: TorusPoint,
    pub n: usize,
    /// `ln ||d f|_{E}||` along the locally estimated stable directions.
    pub log_norm_e: Vec<f64>,
    /// `ln R11` of the per-step QR factorisation (growth of the tracked vector).
    pub log_norm_frame: Vec<f64>,
    /// Orthonormal frames after each step; column 0 is the tracked vector.
    pub frames: Vec<Mat2>,
}

impl CocycleTrace {
    /// Runs the cocycle for `n` steps from `p` tracking `v`; stable directions
    /// are estimated with forward windows of length `window`.
    pub fn compute(
        map: &MapDescriptor,
        p: TorusPoint,
        v: Vec2,
        n: usize,
        window: usize,
    ) -> Result<Self> {
        let orbit = Orbit::around(map, p, 0, n + window)?;
        let v = v.normalized();
        let mut frame = Mat2::from_columns(v, v.perp());
        let mut log_norm_frame = Vec::with_capacity(n);
        let mut frames = Vec::with_capacity(n);
        let mut log_norm_e = Vec::with_capacity(n);
        for i in 0..n {
            let j = orbit.jacobians[i];
            let step = qr(&(j * frame));
            frame = step.q;
            log_norm_frame.push(step.r11.ln());
            frames.push(frame);
            let e = orbit.stable_split(i, window)?.check()?.contracted;
            log_norm_e.push(j.apply(e).norm().ln());
        }
        Ok(Self {
            base: p,
            n,
            log_norm_e,
            log_norm_frame,
            frames,
        })
    }
}
