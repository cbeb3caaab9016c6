//! Constant schedule for CP-hyperbolic sets and finite-horizon membership.
//!
//! Given `t in (19/20, 1)` and the derivative bounds `alpha`, `beta` of `f^N`,
//! the schedule is
//!
//! ```text
//! delta_t = t * max(-ln alpha, ln beta)
//! s       in (3/(4t), (5t - 4)/t)             (midpoint when not given)
//! sigma   = exp(-s delta_t)        rho   = sigma^2
//! sigma~1 = alpha                  sigma~2 = 1/beta
//! rho~1   = rho~2 = alpha/beta     eta   = 1 - (1/sigma - sigma)^2 / (2 beta^2)
//! ```
//!
//! Membership in the sets `Delta_1 .. Delta_5` is certified for `n = 1..=H`
//! only. All products are compared as sums of logarithms with an absolute
//! slack of [`COMPARISON_SLACK`].

use serde::{Deserialize, Serialize};

use crate::cocycle::{DirectionPair, LyapunovEstimate, Orbit, DEFAULT_WINDOW};
use crate::error::{Error, Result};
use crate::maps::{MapBounds, MapDescriptor, TorusPoint};

/// Threshold on `t`: the admissible `s`-interval is empty for `t <= 19/20`.
pub const T_MIN: f64 = 19.0 / 20.0;

/// Absolute slack on log-scale comparisons.
pub const COMPARISON_SLACK: f64 = 1e-9;

/// Largest accepted half-window residual for [`check_hypothesis`].
pub const CONVERGENCE_LIMIT: f64 = 1e-3;

pub const DEFAULT_HORIZON: usize = 64;

/// Exponent gap required relative to `R(f)`.
pub const HYPOTHESIS_RATIO: f64 = 19.0 / 20.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchedulerInput {
    pub t: f64,
    /// `None` selects the midpoint of the admissible interval.
    pub s: Option<f64>,
    pub bounds: MapBounds,
    pub iterate: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CPConstants {
    pub sigma: f64,
    pub sigma_t1: f64,
    pub sigma_t2: f64,
    pub rho: f64,
    pub rho_t1: f64,
    pub rho_t2: f64,
    pub eta: f64,
    pub delta_t: f64,
    /// The resolved `s`.
    pub s: f64,
    /// `ln(sigma~_i rho~_i / (sigma rho)) - ln(sigma)` for `i = 1, 2`; both positive.
    pub side_margins: [f64; 2],
    pub provenance: SchedulerInput,
}

impl CPConstants {
    /// `(t - s t) / (1 - s t)`, the density every Pliss argument guarantees.
    pub fn pliss_lower_bound(&self) -> f64 {
        let t = self.provenance.t;
        (t - self.s * t) / (1.0 - self.s * t)
    }

    pub fn beta(&self) -> f64 {
        self.provenance.bounds.beta
    }
}

/// Open interval `(3/(4t), (5t - 4)/t)` of admissible `s`.
pub fn s_interval(t: f64) -> (f64, f64) {
    (3.0 / (4.0 * t), (5.0 * t - 4.0) / t)
}

/// `1 - (1/sigma - sigma)^2 / (2 beta^2)`.
pub fn angle_bound(sigma: f64, beta: f64) -> f64 {
    let gap = 1.0 / sigma - sigma;
    1.0 - gap * gap / (2.0 * beta * beta)
}

pub fn schedule_constants(input: &SchedulerInput) -> Result<CPConstants> {
    let t = input.t;
    if !(t > T_MIN) {
        return Err(Error::TTooSmall(t));
    }
    if t >= 1.0 {
        return Err(Error::TTooLarge(t));
    }
    let MapBounds { alpha, beta, .. } = input.bounds;
    let log_alpha = alpha.ln();
    let log_beta = beta.ln();
    let spread = (-log_alpha).max(log_beta);
    if !(alpha > 0.0 && alpha <= 1.0 && beta >= 1.0 && spread > 0.0 && spread.is_finite()) {
        return Err(Error::InvalidBounds { alpha, beta });
    }
    let (lo, hi) = s_interval(t);
    let s = match input.s {
        None => 0.5 * (lo + hi),
        Some(s) if s > lo && s < hi => s,
        Some(s) => return Err(Error::SOutOfRange { s, lo, hi }),
    };
    let delta_t = t * spread;
    let log_sigma = -s * delta_t;
    let sigma = log_sigma.exp();
    let rho = (2.0 * log_sigma).exp();
    let sigma_t1 = alpha;
    let sigma_t2 = 1.0 / beta;
    let rho_t = alpha / beta;
    let log_rho_t = log_alpha - log_beta;

    // ln(sigma~ rho~) - ln(sigma rho) - ln(sigma) = ln sigma~ + ln rho~ + 4 s delta_t
    let side_margins = [
        log_alpha + log_rho_t - 4.0 * log_sigma,
        -log_beta + log_rho_t - 4.0 * log_sigma,
    ];
    if let Some(index) = side_margins.iter().position(|m| !(*m > 0.0)) {
        return Err(Error::SideConditionViolated {
            index: index + 1,
            margin: side_margins[index],
        });
    }
    let eta = angle_bound(sigma, beta);
    if !(eta > 0.0 && eta < 1.0) {
        return Err(Error::DegenerateAngleBound(eta));
    }
    Ok(CPConstants {
        sigma,
        sigma_t1,
        sigma_t2,
        rho,
        rho_t1: rho_t,
        rho_t2: rho_t,
        eta,
        delta_t,
        s,
        side_margins,
        provenance: *input,
    })
}

/// Whether `min(lambda_u, -lambda_s) > (19/20) R(f)`, exponents taken per
/// step of the base map.
pub fn check_hypothesis(lambda: &LyapunovEstimate, bounds: &MapBounds) -> Result<bool> {
    if !(lambda.residual < CONVERGENCE_LIMIT) {
        return Err(Error::NotConverged {
            residual: lambda.residual,
            limit: CONVERGENCE_LIMIT,
        });
    }
    let per_step = lambda.lambda_u.min(-lambda.lambda_s) / f64::from(lambda.iterate.max(1));
    Ok(per_step > HYPOTHESIS_RATIO * bounds.r_estimate)
}

/// Finite-horizon flags for the conditions CP1..CP5.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeltaFlags {
    pub d1: bool,
    pub d2: bool,
    pub d3: bool,
    pub d4: bool,
    pub d5: bool,
    pub horizon: usize,
}

impl DeltaFlags {
    pub fn none(horizon: usize) -> Self {
        Self {
            d1: false,
            d2: false,
            d3: false,
            d4: false,
            d5: false,
            horizon,
        }
    }

    pub fn as_array(&self) -> [bool; 5] {
        [self.d1, self.d2, self.d3, self.d4, self.d5]
    }

    pub fn all(&self) -> bool {
        self.as_array().iter().all(|b| *b)
    }
}

/// Per-index log cocycle data along an orbit.
///
/// `stable[i] = ln ||d f|_{E_i}||`, `unstable[i] = ln ||d f^{-1}|_{F_i}||`,
/// `log_det[i] = ln |det d f|` at point `i`.
#[derive(Debug, Clone)]
pub struct OrbitCocycle {
    pub stable: Vec<Option<f64>>,
    pub unstable: Vec<Option<f64>>,
    pub log_det: Vec<f64>,
    pub cos_angle: Vec<Option<f64>>,
}

impl OrbitCocycle {
    pub fn new(orbit: &Orbit, dirs: &[Option<DirectionPair>]) -> Self {
        Self {
            stable: orbit.stable_log_norms(dirs),
            unstable: orbit.unstable_log_norms(dirs),
            log_det: orbit.log_dets(),
            cos_angle: dirs.iter().map(|d| d.map(|d| d.cos_angle)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.log_det.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_det.is_empty()
    }

    /// Flags at index `k`. Conditions whose horizon leaves the orbit are false.
    pub fn flags(&self, k: usize, consts: &CPConstants, horizon: usize) -> DeltaFlags {
        let ln = f64::ln;
        let forward = |term: &dyn Fn(usize) -> Option<f64>, lower: f64, upper: f64| {
            if k + horizon > self.len() {
                return false;
            }
            within_bounds((k..k + horizon).map(term), lower, upper)
        };
        let backward = |term: &dyn Fn(usize) -> Option<f64>, lower: f64, upper: f64| {
            if horizon > k {
                return false;
            }
            within_bounds((0..horizon).map(|j| term(k - j)), lower, upper)
        };

        let d1 = forward(&|i| self.stable[i], ln(consts.sigma_t1), ln(consts.sigma));
        let d2 = forward(
            &|i| Some(2.0 * self.stable[i]? - self.log_det[i]),
            ln(consts.rho_t1),
            ln(consts.rho),
        );
        let d3 = backward(&|i| self.unstable[i], ln(consts.sigma_t2), ln(consts.sigma));
        // det d f^{-1} at point i is 1 / det d f at point i - 1
        let d4 = backward(
            &|i| Some(2.0 * self.unstable[i]? + self.log_det[i - 1]),
            ln(consts.rho_t2),
            ln(consts.rho),
        );
        let d5 = self.cos_angle[k].is_some_and(|c| c <= consts.eta + COMPARISON_SLACK);
        DeltaFlags {
            d1,
            d2,
            d3,
            d4,
            d5,
            horizon,
        }
    }
}

/// Whether every partial sum of the first `n` terms lies in
/// `[n lower - slack, n upper + slack]`.
fn within_bounds(terms: impl Iterator<Item = Option<f64>>, lower: f64, upper: f64) -> bool {
    let mut sum = 0.0;
    for (j, term) in terms.enumerate() {
        let Some(a) = term else {
            return false;
        };
        sum += a;
        let n = (j + 1) as f64;
        if sum < n * lower - COMPARISON_SLACK || sum > n * upper + COMPARISON_SLACK {
            return false;
        }
    }
    true
}

/// Flags for CP1..CP5 at `p` with the directions `dirs`, certified up to `horizon`.
///
/// The invariant bundles along the orbit of `p` are re-estimated at every
/// orbit point; forward transport of `E` is numerically unstable over long
/// horizons.
pub fn check_membership(
    map: &MapDescriptor,
    p: TorusPoint,
    dirs: &DirectionPair,
    consts: &CPConstants,
    horizon: usize,
) -> Result<DeltaFlags> {
    check_membership_with_window(map, p, dirs, consts, horizon, DEFAULT_WINDOW)
}

pub fn check_membership_with_window(
    map: &MapDescriptor,
    p: TorusPoint,
    dirs: &DirectionPair,
    consts: &CPConstants,
    horizon: usize,
    window: usize,
) -> Result<DeltaFlags> {
    if horizon == 0 {
        return Err(Error::InvalidArgument("horizon must be positive".into()));
    }
    let pad = horizon + window + 1;
    let orbit = Orbit::around(map, p, pad, pad)?;
    let mut along = orbit.directions(window);
    along[orbit.origin] = Some(*dirs);
    let cocycle = OrbitCocycle::new(&orbit, &along);
    Ok(cocycle.flags(orbit.origin, consts, horizon))
}

/// Checks `|cos(E, F)| <= 1 - (1/sigma - sigma)^2 / (2 beta^2)` at a point
/// `x` with `x in Delta_1` and `f(x) in Delta_3`.
pub fn angle_bound_check(
    consts: &CPConstants,
    flags_pair: (&DeltaFlags, &DeltaFlags),
    dirs: &DirectionPair,
) -> Result<bool> {
    let (at_x, at_fx) = flags_pair;
    if !(at_x.d1 && at_fx.d3) {
        return Err(Error::PreconditionNotMet(
            "angle bound needs x in Delta_1 and f(x) in Delta_3",
        ));
    }
    Ok(dirs.cos_angle <= angle_bound(consts.sigma, consts.beta()) + COMPARISON_SLACK)
}
