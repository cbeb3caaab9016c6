//! Torus diffeomorphism families with closed-form Jacobians and inverses.
//!
//! A [`MapDescriptor`] stands for the iterate `f^N` of one of the built-in
//! families. Jacobians of `f^N` are chain-rule products accumulated along the
//! orbit of the individual factors; nothing is expanded symbolically.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
pub use crate::linalg::{Mat2, Vec2};

/// Point of the flat torus `R^2 / Z^2`, coordinates in `[0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TorusPoint {
    pub x: f64,
    pub y: f64,
}

impl TorusPoint {
    pub fn new(x: f64, y: f64) -> Self {
        Self {
            x: reduce(x),
            y: reduce(y),
        }
    }

    /// Euclidean distance minimised over the integer translates of `other`.
    pub fn distance(&self, other: &TorusPoint) -> f64 {
        wrap_delta(self.x - other.x).hypot(wrap_delta(self.y - other.y))
    }
}

/// Floor-based reduction into `[0, 1)`.
#[inline]
pub fn reduce(v: f64) -> f64 {
    let r = v - v.floor();
    // v slightly below an integer can round up to exactly 1.0
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

/// Signed coordinate difference folded into `[-1/2, 1/2]`.
#[inline]
fn wrap_delta(d: f64) -> f64 {
    d - d.round()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Forward,
    Backward,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family")]
pub enum MapFamily {
    /// `(x, y) -> (2x + y, x + y)`
    ArnoldCat,
    /// The cat map followed by the shear `(x, y) -> (x + eps sin(2πy)/(2π), y)`.
    PerturbedCat { epsilon: f64 },
    /// Chirikov standard map in the torus normalisation.
    StandardMap { k: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MapDescriptor {
    #[serde(flatten)]
    pub family: MapFamily,
    /// The descriptor represents `f^iterate`.
    pub iterate: u32,
}

const CAT: Mat2 = Mat2::new(2.0, 1.0, 1.0, 1.0);
const CAT_INV: Mat2 = Mat2::new(1.0, -1.0, -1.0, 2.0);

impl MapDescriptor {
    pub fn new(family: MapFamily, iterate: u32) -> Result<Self> {
        let map = Self { family, iterate };
        map.validate()?;
        Ok(map)
    }

    pub fn cat() -> Self {
        Self {
            family: MapFamily::ArnoldCat,
            iterate: 1,
        }
    }

    pub fn perturbed_cat(epsilon: f64) -> Result<Self> {
        Self::new(MapFamily::PerturbedCat { epsilon }, 1)
    }

    pub fn standard(k: f64) -> Result<Self> {
        Self::new(MapFamily::StandardMap { k }, 1)
    }

    pub fn with_iterate(mut self, iterate: u32) -> Result<Self> {
        self.iterate = iterate;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.iterate == 0 {
            return Err(Error::NonInvertibleParameters(
                "iterate power must be positive".into(),
            ));
        }
        match self.family {
            MapFamily::ArnoldCat => Ok(()),
            MapFamily::PerturbedCat { epsilon } => {
                if epsilon.is_finite() && epsilon.abs() < 1.0 {
                    Ok(())
                } else {
                    Err(Error::NonInvertibleParameters(format!(
                        "perturbed cat needs |epsilon| < 1, got {epsilon}"
                    )))
                }
            }
            MapFamily::StandardMap { k } => {
                if k.is_finite() {
                    Ok(())
                } else {
                    Err(Error::NonInvertibleParameters(format!(
                        "standard map parameter must be finite, got {k}"
                    )))
                }
            }
        }
    }

    /// Short human-readable name, e.g. `cat`, `pcat(eps=0.05)^2`.
    pub fn label(&self) -> String {
        let base = match self.family {
            MapFamily::ArnoldCat => "cat".to_string(),
            MapFamily::PerturbedCat { epsilon } => format!("pcat(eps={epsilon})"),
            MapFamily::StandardMap { k } => format!("std(K={k})"),
        };
        if self.iterate == 1 {
            base
        } else {
            format!("{base}^{}", self.iterate)
        }
    }

    /// One application of the base map `f` (or its inverse) with the Jacobian at `p`.
    fn base_step(&self, p: TorusPoint, direction: Direction) -> (TorusPoint, Mat2) {
        match (self.family, direction) {
            (MapFamily::ArnoldCat, Direction::Forward) => (cat(p), CAT),
            (MapFamily::ArnoldCat, Direction::Backward) => (cat_inv(p), CAT_INV),
            (MapFamily::PerturbedCat { epsilon }, Direction::Forward) => {
                let q = cat(p);
                let (r, shear) = perturb(q, epsilon);
                (r, shear * CAT)
            }
            (MapFamily::PerturbedCat { epsilon }, Direction::Backward) => {
                let (q, shear_inv) = perturb(p, -epsilon);
                (cat_inv(q), CAT_INV * shear_inv)
            }
            (MapFamily::StandardMap { k }, Direction::Forward) => {
                let kick = k / TAU * (TAU * p.x).sin();
                let g = k * (TAU * p.x).cos();
                let y = p.y + kick;
                (TorusPoint::new(p.x + y, y), Mat2::new(1.0 + g, 1.0, g, 1.0))
            }
            (MapFamily::StandardMap { k }, Direction::Backward) => {
                let x = reduce(p.x - p.y);
                let g = k * (TAU * x).cos();
                let y = p.y - k / TAU * (TAU * x).sin();
                (TorusPoint::new(x, y), Mat2::new(1.0, -1.0, -g, 1.0 + g))
            }
        }
    }

    /// Image of `p` under `f^{±N}` together with the Jacobian of `f^{±N}` at `p`.
    pub fn step(&self, p: TorusPoint, direction: Direction) -> Result<(TorusPoint, Mat2)> {
        self.validate()?;
        Ok(self.step_unchecked(p, direction))
    }

    pub(crate) fn step_unchecked(&self, p: TorusPoint, direction: Direction) -> (TorusPoint, Mat2) {
        let (mut q, mut jac) = self.base_step(p, direction);
        for _ in 1..self.iterate {
            let (next, j) = self.base_step(q, direction);
            jac = j * jac;
            q = next;
        }
        (q, jac)
    }

    pub fn apply(&self, p: TorusPoint, direction: Direction) -> Result<TorusPoint> {
        self.step(p, direction).map(|(q, _)| q)
    }

    pub fn jacobian(&self, p: TorusPoint, direction: Direction) -> Result<Mat2> {
        self.step(p, direction).map(|(_, j)| j)
    }

    /// Grid estimate of `alpha_N`, `beta_N` and `R(f)`.
    ///
    /// The grid is `{ (i/g, j/g) }`, so refining `g` by an integer factor only
    /// adds points and can never lower `beta`.
    pub fn estimate_bounds(&self, grid_density: usize) -> Result<MapBounds> {
        self.validate()?;
        if grid_density < 2 {
            return Err(Error::InvalidArgument(format!(
                "grid density must be at least 2, got {grid_density}"
            )));
        }
        let g = grid_density as f64;
        let mut fwd_max = 0.0f64;
        let mut bwd_max = 0.0f64;
        for i in 0..grid_density {
            for j in 0..grid_density {
                let p = TorusPoint::new(i as f64 / g, j as f64 / g);
                let (_, jf) = self.step_unchecked(p, Direction::Forward);
                let (_, jb) = self.step_unchecked(p, Direction::Backward);
                fwd_max = fwd_max.max(jf.spectral_norm());
                bwd_max = bwd_max.max(jb.spectral_norm());
            }
        }
        let beta = fwd_max.max(1.0);
        let alpha = (1.0 / bwd_max).min(1.0);
        let n = self.iterate as f64;
        Ok(MapBounds {
            alpha,
            beta,
            r_estimate: (-alpha.ln()).max(beta.ln()) / n,
            grid_density,
        })
    }
}

/// Global derivative bounds of `f^N`, estimated on a uniform grid.
///
/// `beta` is a lower bound for the true supremum of `||df^N||` and `alpha`
/// an upper bound for the true `inf ||df^{-N}||^{-1}`; both are exact for
/// families with a constant Jacobian.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MapBounds {
    pub alpha: f64,
    pub beta: f64,
    pub r_estimate: f64,
    pub grid_density: usize,
}

#[inline]
fn cat(p: TorusPoint) -> TorusPoint {
    TorusPoint::new(2.0 * p.x + p.y, p.x + p.y)
}

#[inline]
fn cat_inv(p: TorusPoint) -> TorusPoint {
    TorusPoint::new(p.x - p.y, 2.0 * p.y - p.x)
}

/// `(x, y) -> (x + eps sin(2πy)/(2π), y)` and its Jacobian.
#[inline]
fn perturb(p: TorusPoint, eps: f64) -> (TorusPoint, Mat2) {
    let q = TorusPoint::new(p.x + eps / TAU * (TAU * p.y).sin(), p.y);
    (q, Mat2::new(1.0, eps * (TAU * p.y).cos(), 0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    const GOLDEN_SQ: f64 = 2.618_033_988_749_895;

    fn all_maps() -> Vec<MapDescriptor> {
        vec![
            MapDescriptor::cat(),
            MapDescriptor::cat().with_iterate(3).unwrap(),
            MapDescriptor::perturbed_cat(0.3).unwrap(),
            MapDescriptor::perturbed_cat(-0.9)
                .unwrap()
                .with_iterate(2)
                .unwrap(),
            MapDescriptor::standard(1.5).unwrap(),
            MapDescriptor::standard(0.0).unwrap(),
        ]
    }

    fn sample_points() -> Vec<TorusPoint> {
        (0..40)
            .map(|i| {
                let t = i as f64;
                TorusPoint::new(
                    (t * 0.618_034 + 0.1).fract(),
                    (t * 0.414_214 + 0.37).fract(),
                )
            })
            .collect()
    }

    #[test]
    fn cat_fixed_point_and_hand_value() {
        let cat = MapDescriptor::cat();
        assert_eq!(
            cat.apply(TorusPoint::new(0.0, 0.0), Direction::Forward)
                .unwrap(),
            TorusPoint::new(0.0, 0.0)
        );
        let q = cat
            .apply(TorusPoint::new(0.25, 0.5), Direction::Forward)
            .unwrap();
        assert_eq!(q.x, 0.0);
        assert_eq!(q.y, 0.75);
    }

    #[test]
    fn forward_then_backward_is_identity() {
        for map in all_maps() {
            for p in sample_points() {
                let q = map.apply(p, Direction::Forward).unwrap();
                let back = map.apply(q, Direction::Backward).unwrap();
                assert!(back.distance(&p) < 1e-10, "{} at {:?}", map.label(), p);
            }
        }
    }

    #[test]
    fn reduction_stays_in_unit_interval() {
        for v in [-1e-17, -0.0, -3.25, 1.0, 7.999_999_999_999_999, 0.5] {
            let r = reduce(v);
            assert!((0.0..1.0).contains(&r), "{v} -> {r}");
        }
    }

    #[test]
    fn cat_jacobians() {
        let p = TorusPoint::new(0.3, 0.9);
        let j1 = MapDescriptor::cat()
            .jacobian(p, Direction::Forward)
            .unwrap();
        assert_eq!(j1, Mat2::new(2.0, 1.0, 1.0, 1.0));
        let j2 = MapDescriptor::cat()
            .with_iterate(2)
            .unwrap()
            .jacobian(p, Direction::Forward)
            .unwrap();
        assert_eq!(j2, Mat2::new(5.0, 3.0, 3.0, 2.0));
        let j0 = MapDescriptor::perturbed_cat(0.0)
            .unwrap()
            .jacobian(p, Direction::Forward)
            .unwrap();
        assert_eq!(j0, Mat2::new(2.0, 1.0, 1.0, 1.0));
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let h = 1e-6;
        for map in all_maps() {
            for p in sample_points().into_iter().take(10) {
                for dir in [Direction::Forward, Direction::Backward] {
                    let jac = map.jacobian(p, dir).unwrap();
                    let f = |x: f64, y: f64| {
                        let q = map.apply(TorusPoint::new(x, y), dir).unwrap();
                        Vec2::new(q.x, q.y)
                    };
                    let diff = |a: Vec2, b: Vec2| {
                        let d = a - b;
                        Vec2::new(d.x - d.x.round(), d.y - d.y.round()).scale(0.5 / h)
                    };
                    let dx = diff(f(p.x + h, p.y), f(p.x - h, p.y));
                    let dy = diff(f(p.x, p.y + h), f(p.x, p.y - h));
                    let fd = Mat2::from_columns(dx, dy);
                    let scale = jac.spectral_norm().max(1.0);
                    assert!(
                        fd.max_abs_diff(&jac) < 1e-6 * scale * scale,
                        "{} {:?} {:?}: {:?} vs {:?}",
                        map.label(),
                        dir,
                        p,
                        fd,
                        jac
                    );
                }
            }
        }
    }

    #[test]
    fn determinants_are_one() {
        for map in all_maps() {
            for p in sample_points() {
                let det = map.jacobian(p, Direction::Forward).unwrap().det();
                assert!((det.abs() - 1.0).abs() < 1e-10, "{}: {det}", map.label());
            }
        }
    }

    #[test]
    fn backward_jacobian_inverts_forward_at_matched_point() {
        for map in all_maps() {
            for p in sample_points() {
                let (q, jb) = map.step(p, Direction::Backward).unwrap();
                let jf = map.jacobian(q, Direction::Forward).unwrap();
                assert!((jb * jf).max_abs_diff(&Mat2::IDENTITY) < 1e-8);
            }
        }
    }

    #[test]
    fn perturbed_cat_rejects_large_epsilon() {
        assert!(matches!(
            MapDescriptor::perturbed_cat(1.0),
            Err(Error::NonInvertibleParameters(_))
        ));
        let bad = MapDescriptor {
            family: MapFamily::PerturbedCat { epsilon: -1.5 },
            iterate: 1,
        };
        assert!(matches!(
            bad.apply(TorusPoint::new(0.1, 0.1), Direction::Forward),
            Err(Error::NonInvertibleParameters(_))
        ));
    }

    #[test]
    fn bounds_for_constant_jacobians() {
        let b = MapDescriptor::cat().estimate_bounds(64).unwrap();
        assert!((b.beta - GOLDEN_SQ).abs() < 1e-10);
        assert!((b.alpha - 1.0 / GOLDEN_SQ).abs() < 1e-10);
        assert!((b.alpha - 0.381_966_011_3).abs() < 1e-10);
        assert!((b.r_estimate - GOLDEN_SQ.ln()).abs() < 1e-12);

        let b2 = MapDescriptor::cat()
            .with_iterate(2)
            .unwrap()
            .estimate_bounds(64)
            .unwrap();
        assert!((b2.beta - 6.854_101_966_2).abs() < 1e-9);
        assert!((b2.r_estimate - GOLDEN_SQ.ln()).abs() < 1e-12);

        let s = MapDescriptor::standard(0.0)
            .unwrap()
            .estimate_bounds(64)
            .unwrap();
        assert!((s.beta - 1.618_033_988_7).abs() < 1e-9);
    }

    #[test]
    fn bounds_invariants_and_refinement() {
        for map in all_maps() {
            let coarse = map.estimate_bounds(16).unwrap();
            let fine = map.estimate_bounds(32).unwrap();
            assert!(coarse.alpha <= 1.0 && coarse.beta >= 1.0);
            assert!(coarse.beta <= fine.beta, "{}", map.label());
            assert!(coarse.alpha >= fine.alpha, "{}", map.label());
            let cap = (-fine.alpha.ln()).max(fine.beta.ln()) / map.iterate as f64;
            assert!(fine.r_estimate <= cap + 1e-15);
        }
        assert!(MapDescriptor::cat().estimate_bounds(1).is_err());
    }

    #[test]
    fn toroidal_distance_wraps() {
        let a = TorusPoint::new(0.05, 0.05);
        let b = TorusPoint::new(0.95, 0.95);
        assert!((a.distance(&b) - 0.02f64.sqrt() * 1.0).abs() < 1e-12);
    }
}
