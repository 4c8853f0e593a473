//! Order unit spaces `(V, V₊, v)`: order-unit norm, gauge functions and
//! Thompson's metric, each with a closed form and a membership-only bisection.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::cone::ConeSpec;
use crate::error::{Error, Result};
use crate::linalg::Vector;
use crate::report::{ReportBuilder, Tracker, VerificationReport};

/// Interior margin, relative to the order-unit norm of the tested point.
pub const INTERIOR_MARGIN: f64 = 1e-9;

/// Iterations used by every bisection routine.
pub const BISECTION_STEPS: usize = 80;

#[derive(Clone, Debug, PartialEq)]
pub struct OrderUnitSpace {
    cone: ConeSpec,
    unit: Vector,
}

impl OrderUnitSpace {
    pub fn new(cone: ConeSpec, unit: Vector) -> Result<Self> {
        cone.validate()?;
        if unit.len() != cone.dim() {
            return Err(Error::DimensionMismatch { expected: cone.dim(), actual: unit.len() });
        }
        if !unit.is_finite() {
            return Err(Error::NonFinite);
        }
        // interior relative to the canonical unit, scaled by the size of `unit`
        let canon = cone.canonical_unit();
        let (lo, hi) = cone.ratio_bounds(&unit, &canon)?;
        if !(lo > INTERIOR_MARGIN * hi.abs().max(lo.abs())) {
            return Err(Error::UnitNotInterior);
        }
        Ok(Self { cone, unit })
    }

    /// The space with its canonical order unit.
    pub fn standard(cone: ConeSpec) -> Result<Self> {
        let unit = cone.canonical_unit();
        Self::new(cone, unit)
    }

    pub fn cone(&self) -> &ConeSpec {
        &self.cone
    }

    pub fn unit(&self) -> &Vector {
        &self.unit
    }

    pub fn dim(&self) -> usize {
        self.unit.len()
    }

    pub fn has_canonical_unit(&self) -> bool {
        self.unit == self.cone.canonical_unit()
    }

    /// Same cone, different order unit (used for the local norms `‖·‖_x`).
    pub fn with_unit(&self, unit: &Vector) -> Result<Self> {
        if !self.is_interior(unit) {
            return Err(Error::NotInterior);
        }
        Ok(Self { cone: self.cone.clone(), unit: unit.clone() })
    }

    fn check(&self, x: &Vector) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), actual: x.len() });
        }
        if !x.is_finite() {
            return Err(Error::NonFinite);
        }
        Ok(())
    }

    /// `(lower, upper)` spectral bounds of `x` relative to the unit.
    pub fn spectral_bounds(&self, x: &Vector) -> Result<(f64, f64)> {
        self.check(x)?;
        self.cone.ratio_bounds(x, &self.unit)
    }

    /// `inf { λ ≥ 0 : −λv ≤ x ≤ λv }`.
    pub fn order_unit_norm(&self, x: &Vector) -> Result<f64> {
        let (lo, hi) = self.spectral_bounds(x)?;
        Ok(hi.max(-lo).max(0.0))
    }

    /// Same quantity from the membership oracle only.
    pub fn order_unit_norm_bisection(&self, x: &Vector) -> Result<f64> {
        self.check(x)?;
        if x.max_abs() == 0.0 {
            return Ok(0.0);
        }
        let ok = |lam: f64| -> Result<bool> {
            Ok(self.cone.contains(&self.unit.scale(lam).axpy(-1.0, x), 0.0)?
                && self.cone.contains(&self.unit.scale(lam).axpy(1.0, x), 0.0)?)
        };
        let mut hi = 1.0;
        while !ok(hi)? {
            hi *= 2.0;
        }
        let mut lo = 0.0;
        while hi > f64::MIN_POSITIVE && ok(0.5 * hi)? {
            hi *= 0.5;
        }
        if hi > f64::MIN_POSITIVE {
            lo = 0.5 * hi;
        }
        for _ in 0..BISECTION_STEPS {
            let mid = 0.5 * (lo + hi);
            if ok(mid)? {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(hi)
    }

    /// Interior test: `x ≥ δv` with `δ > INTERIOR_MARGIN · ‖x‖_v`.
    pub fn is_interior(&self, x: &Vector) -> bool {
        match self.spectral_bounds(x) {
            Ok((lo, hi)) => lo > INTERIOR_MARGIN * hi.max(-lo).max(0.0) && lo > 0.0,
            Err(_) => false,
        }
    }

    pub fn require_interior(&self, x: &Vector) -> Result<()> {
        self.check(x)?;
        if self.is_interior(x) {
            Ok(())
        } else {
            Err(Error::NotInterior)
        }
    }

    /// `x ≤ y` up to `slack · scale`, with `scale = max(‖x‖_v, ‖y‖_v, 1)`.
    pub fn leq(&self, x: &Vector, y: &Vector, slack: f64) -> Result<bool> {
        Ok(self.order_violation(x, y)? <= slack)
    }

    /// How far `y − x` is from the closed cone, measured in units of `v` and
    /// relative to `max(‖x‖_v, ‖y‖_v, 1)`. Zero when `x ≤ y`.
    pub fn order_violation(&self, x: &Vector, y: &Vector) -> Result<f64> {
        let scale = self.order_unit_norm(x)?.max(self.order_unit_norm(y)?).max(1.0);
        let (lo, _) = self.spectral_bounds(&(y - x))?;
        Ok((-lo).max(0.0) / scale)
    }

    /// Gauge `M(x, y) = inf { μ > 0 : x ≤ μy }`.
    pub fn max_gauge(&self, x: &Vector, y: &Vector) -> Result<f64> {
        self.require_interior(x)?;
        self.require_interior(y)?;
        self.cone.upper_ratio(x, y)
    }

    /// Gauge `m(x, y) = sup { λ > 0 : λy ≤ x }`.
    pub fn min_gauge(&self, x: &Vector, y: &Vector) -> Result<f64> {
        self.require_interior(x)?;
        self.require_interior(y)?;
        self.cone.lower_ratio(x, y)
    }

    /// `M(x, y)` by bisection on the membership oracle.
    pub fn max_gauge_bisection(&self, x: &Vector, y: &Vector) -> Result<f64> {
        self.require_interior(x)?;
        self.require_interior(y)?;
        let ok = |mu: f64| self.cone.contains(&y.scale(mu).axpy(-1.0, x), 0.0);
        let mut hi = self.order_unit_norm(x)? / self.spectral_bounds(y)?.0;
        while !ok(hi)? {
            hi *= 2.0;
        }
        let mut lo = 0.5 * hi;
        while ok(lo)? {
            hi = lo;
            lo *= 0.5;
        }
        for _ in 0..BISECTION_STEPS {
            let mid = 0.5 * (lo + hi);
            if ok(mid)? {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(hi)
    }

    /// `m(x, y)` by bisection on the membership oracle.
    pub fn min_gauge_bisection(&self, x: &Vector, y: &Vector) -> Result<f64> {
        self.require_interior(x)?;
        self.require_interior(y)?;
        let ok = |lam: f64| self.cone.contains(&x.axpy(-lam, y), 0.0);
        let mut lo = self.spectral_bounds(x)?.0 / self.order_unit_norm(y)?;
        while !ok(lo)? {
            lo *= 0.5;
        }
        let mut hi = 2.0 * lo;
        while ok(hi)? {
            lo = hi;
            hi *= 2.0;
        }
        for _ in 0..BISECTION_STEPS {
            let mid = 0.5 * (lo + hi);
            if ok(mid)? {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(lo)
    }

    /// `d_T(x, y) = log max { M(x,y), M(y,x) }`.
    pub fn thompson_distance(&self, x: &Vector, y: &Vector) -> Result<f64> {
        let a = self.max_gauge(x, y)?;
        let b = self.max_gauge(y, x)?;
        Ok(a.max(b).ln().max(0.0))
    }

    pub fn sampler(&self, seed: u64) -> Sampler<'_> {
        Sampler { space: self, rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    /// Deterministic interior point with `d_T(v, x) ≤ radius`.
    pub fn sample_interior(&self, seed: u64, radius: f64) -> Vector {
        self.sampler(seed).interior(radius)
    }
}

/// Sampled identities of the gauges and Thompson's metric on `space`:
/// reciprocity `m(y,x)M(x,y) = 1`, the four `M/m(αx ± βy, x)` formulas,
/// closed form against bisection, the metric axioms and
/// `M(x,z) ≤ M(x,y)M(y,z)`, scale invariance, and the comparisons
/// `d_T ≤ λ‖x−y‖_v` (for `x, y ≥ λ⁻¹v`) and `‖x−y‖_v ≤ λd_T` (for
/// `x, y ≤ λv`), with the smallest admissible `λ` per pair.
pub fn verify_kernel(space: &OrderUnitSpace, trials: usize, seed: u64) -> VerificationReport {
    let mut report = ReportBuilder::new("kernel", seed);
    let mut reciprocity = Tracker::new("reciprocity", 1e-10);
    let mut affine = Tracker::new("affine_gauges", 1e-9);
    let mut bisection = Tracker::new("gauge_bisection", 1e-9);
    let mut identity = Tracker::new("metric_identity", 1e-12);
    let mut symmetry = Tracker::new("metric_symmetry", 0.0);
    let mut triangle = Tracker::new("metric_triangle", 1e-10);
    let mut submult = Tracker::new("gauge_submultiplicative", 1e-10);
    let mut scale = Tracker::new("scale_invariance", 1e-12);
    let mut dt_norm = Tracker::new("dt_below_norm", 1e-10);
    let mut norm_dt = Tracker::new("norm_below_dt", 1e-10);

    let v = space.unit();
    let mut smp = space.sampler(seed);
    for _ in 0..trials.max(1) {
        let x = smp.scaled_interior(1.0, 0.5, 2.0);
        let y = smp.scaled_interior(1.0, 0.5, 2.0);
        let z = smp.scaled_interior(1.0, 0.5, 2.0);
        let alpha = smp.uniform(0.1, 3.0);
        let beta = smp.uniform(0.0, 3.0);
        let frac = smp.uniform(0.0, 1.0);

        reciprocity.record_result((|| Ok::<_, Error>(space.min_gauge(&y, &x)? * space.max_gauge(&x, &y)? - 1.0))());

        affine.record_result((|| {
            let big_yx = space.max_gauge(&y, &x)?;
            let small_yx = space.min_gauge(&y, &x)?;
            let gamma = frac * alpha * space.min_gauge(&x, &y)?;
            let plus = x.scale(alpha).axpy(beta, &y);
            let minus = x.scale(alpha).axpy(-gamma, &y);
            let rel = |got: f64, want: f64| (got - want).abs() / want.abs().max(1.0);
            Ok::<_, Error>(
                rel(space.max_gauge(&plus, &x)?, alpha + beta * big_yx)
                    .max(rel(space.min_gauge(&plus, &x)?, alpha + beta * small_yx))
                    .max(rel(space.min_gauge(&minus, &x)?, alpha - gamma * big_yx))
                    .max(rel(space.max_gauge(&minus, &x)?, alpha - gamma * small_yx)),
            )
        })());

        bisection.record_result((|| {
            let big = space.max_gauge(&x, &y)?;
            let small = space.min_gauge(&x, &y)?;
            Ok::<_, Error>(
                ((space.max_gauge_bisection(&x, &y)? - big) / big)
                    .abs()
                    .max(((space.min_gauge_bisection(&x, &y)? - small) / small).abs()),
            )
        })());

        let d = |a: &Vector, b: &Vector| space.thompson_distance(a, b);
        identity.record_result(d(&x, &x));
        symmetry.record_result((|| Ok::<_, Error>(d(&x, &y)? - d(&y, &x)?))());
        triangle.record_result((|| Ok::<_, Error>((d(&x, &z)? - d(&x, &y)? - d(&y, &z)?).max(0.0)))());
        submult.record_result((|| {
            let lhs = space.max_gauge(&x, &z)?;
            let rhs = space.max_gauge(&x, &y)? * space.max_gauge(&y, &z)?;
            Ok::<_, Error>(((lhs - rhs) / rhs).max(0.0))
        })());
        for s in [0.1, 7.0] {
            scale.record_result((|| Ok::<_, Error>(d(&x.scale(s), &y.scale(s))? - d(&x, &y)?))());
        }

        dt_norm.record_result((|| {
            let lambda = 1.0 / space.min_gauge(&x, v)?.min(space.min_gauge(&y, v)?);
            Ok::<_, Error>((d(&x, &y)? - lambda * space.order_unit_norm(&(&x - &y))?).max(0.0))
        })());
        norm_dt.record_result((|| {
            let lambda = space.max_gauge(&x, v)?.max(space.max_gauge(&y, v)?);
            Ok::<_, Error>((space.order_unit_norm(&(&x - &y))? - lambda * d(&x, &y)?).max(0.0))
        })());
    }
    report.add_all([reciprocity, affine, bisection, identity, symmetry, triangle, submult, scale, dt_norm, norm_dt]);
    report.finish()
}

/// Seeded point generator tied to one space.
pub struct Sampler<'a> {
    space: &'a OrderUnitSpace,
    rng: ChaCha8Rng,
}

impl<'a> Sampler<'a> {
    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        self.rng.gen_range(lo..hi)
    }

    /// Standard Gaussian ambient vector.
    pub fn gaussian(&mut self) -> Vector {
        let n = self.space.dim();
        Vector::new((0..n).map(|_| self.rng.sample(StandardNormal)).collect())
    }

    /// Random direction with `‖u‖_v = 1`.
    pub fn direction(&mut self) -> Vector {
        loop {
            let g = self.gaussian();
            let r = self.space.order_unit_norm(&g).expect("dimension matches");
            if r > 1e-12 {
                return g.scale(1.0 / r);
            }
        }
    }

    /// Point of the order-unit ball: `‖u‖_v ≤ radius`.
    pub fn ball(&mut self, radius: f64) -> Vector {
        let t = self.uniform(0.0, 1.0);
        self.direction().scale(radius * t)
    }

    /// `x = v + u` with `‖u‖_v ≤ 1 − e^{−radius}`, hence `d_T(v, x) ≤ radius`.
    pub fn interior(&mut self, radius: f64) -> Vector {
        let v = self.space.unit().clone();
        if !(radius > 0.0) {
            return v;
        }
        let s = 1.0 - (-radius).exp();
        let mut u = self.ball(s);
        loop {
            let plus = &v + &u;
            let minus = &v - &u;
            if self.space.is_interior(&plus) && self.space.is_interior(&minus) {
                return plus;
            }
            u = u.scale(0.5);
        }
    }

    /// Interior point times a random positive scale in `[lo, hi]`.
    pub fn scaled_interior(&mut self, radius: f64, lo: f64, hi: f64) -> Vector {
        let x = self.interior(radius);
        let s = self.uniform(lo, hi);
        x.scale(s)
    }

    /// Random element of the closed cone: a scaled interior point pushed toward
    /// the boundary by subtracting part of its smallest spectral component.
    pub fn positive(&mut self, radius: f64) -> Vector {
        let x = self.interior(radius);
        let (lo, _) = self.space.spectral_bounds(&x).expect("dimension matches");
        let t = self.uniform(0.0, 1.0);
        x.axpy(-t * lo, self.space.unit())
    }
}
