//! Gauge maps: bijections of open cones evaluated as black boxes with exact
//! forward and inverse evaluation.
//!
//! The prototype gauge-reversing map is Jordan inversion `x ↦ x⁻¹`; wrapping it
//! in cone automorphisms gives reversing maps that no longer fix the unit.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cone::{smat, svec, ConeSpec};
use crate::error::{Error, Result};
use crate::jordan::{builtin_product, ProductTensor};
use crate::linalg::{Lu, Matrix, Vector};
use crate::report::{ReportBuilder, Tracker, VerificationReport};
use crate::space::OrderUnitSpace;

/// Scalars used for the homogeneity checks.
pub const HOMOGENEITY_SCALES: [f64; 3] = [0.5, 2.0, 7.0];

/// Radius (in Thompson distance from the unit) of the sampled points.
pub const SAMPLE_RADIUS: f64 = 1.0;

/// An invertible matrix together with its inverse.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearMap {
    matrix: Matrix,
    inverse: Matrix,
}

impl LinearMap {
    pub fn new(matrix: Matrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::InvalidArgument("linear map must be square".into()));
        }
        if !matrix.is_finite() {
            return Err(Error::NonFinite);
        }
        let inverse = Lu::factor(&matrix)?.inverse();
        Ok(Self { matrix, inverse })
    }

    pub fn identity(n: usize) -> Self {
        Self { matrix: Matrix::identity(n), inverse: Matrix::identity(n) }
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn inverse(&self) -> &Matrix {
        &self.inverse
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }
}

/// Inversion `x ↦ U(x)⁻¹x` for a product tensor; the map is an involution.
#[derive(Clone, Debug, PartialEq)]
pub struct Inversion {
    cone: Option<ConeSpec>,
    product: ProductTensor,
}

impl Inversion {
    pub fn product(&self) -> &ProductTensor {
        &self.product
    }

    pub fn cone(&self) -> Option<&ConeSpec> {
        self.cone.as_ref()
    }

    fn eval(&self, x: &Vector) -> Result<Vector> {
        if let Some(cone) = &self.cone {
            let lo = cone.min_spectral_value(x)?;
            if !(lo > 1e-14 * x.max_abs()) {
                return Err(Error::NotInterior);
            }
        }
        let lu = Lu::factor(&self.product.quad_rep(x)).map_err(|_| Error::NotInvertible)?;
        Ok(lu.solve(x)?)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum GaugeMapSpec {
    /// Jordan inversion of the builtin algebra on a cone (canonical unit).
    Inversion(Inversion),
    /// `x ↦ post · inner(pre · x)`.
    LinearConjugate { pre: LinearMap, inner: Box<GaugeMapSpec>, post: LinearMap },
    /// Applied left to right: the first map acts first.
    Compose(Vec<GaugeMapSpec>),
    /// Inversion of a reconstructed product.
    Recovered(Inversion),
    Identity { n: usize },
    Linear(LinearMap),
    /// Componentwise `x ↦ x^p`, defined on positive coordinates.
    Power { n: usize, exponent: f64 },
}

impl GaugeMapSpec {
    pub fn inversion(cone: ConeSpec) -> Result<Self> {
        let product = builtin_product(&cone)?;
        Ok(Self::Inversion(Inversion { cone: Some(cone), product }))
    }

    pub fn recovered(product: ProductTensor) -> Self {
        Self::Recovered(Inversion { cone: None, product })
    }

    pub fn conjugate(pre: Matrix, inner: GaugeMapSpec, post: Matrix) -> Result<Self> {
        let (pre, post) = (LinearMap::new(pre)?, LinearMap::new(post)?);
        if let Some(n) = inner.dim() {
            for m in [&pre, &post] {
                if m.dim() != n {
                    return Err(Error::DimensionMismatch { expected: n, actual: m.dim() });
                }
            }
        }
        Ok(Self::LinearConjugate { pre, inner: Box::new(inner), post })
    }

    /// Post-composes with a linear map: `x ↦ post · inner(x)`.
    pub fn then_linear(inner: GaugeMapSpec, post: Matrix) -> Result<Self> {
        let n = post.rows();
        Self::conjugate(Matrix::identity(n), inner, post)
    }

    pub fn compose(maps: Vec<GaugeMapSpec>) -> Result<Self> {
        if maps.is_empty() {
            return Err(Error::InvalidArgument("compose needs at least one map".into()));
        }
        Ok(Self::Compose(maps))
    }

    pub fn linear(matrix: Matrix) -> Result<Self> {
        Ok(Self::Linear(LinearMap::new(matrix)?))
    }

    pub fn power(n: usize, exponent: f64) -> Result<Self> {
        if !exponent.is_finite() || exponent == 0.0 {
            return Err(Error::InvalidArgument("power exponent must be finite and nonzero".into()));
        }
        Ok(Self::Power { n, exponent })
    }

    /// Ambient dimension, when the map fixes one.
    pub fn dim(&self) -> Option<usize> {
        match self {
            Self::Inversion(inv) | Self::Recovered(inv) => Some(inv.product.dim()),
            Self::LinearConjugate { pre, .. } => Some(pre.dim()),
            Self::Compose(maps) => maps.iter().find_map(|m| m.dim()),
            Self::Identity { n } | Self::Power { n, .. } => Some(*n),
            Self::Linear(l) => Some(l.dim()),
        }
    }

    fn check_input(&self, x: &Vector) -> Result<()> {
        if let Some(n) = self.dim() {
            if x.len() != n {
                return Err(Error::DimensionMismatch { expected: n, actual: x.len() });
            }
        }
        if !x.is_finite() {
            return Err(Error::NonFinite);
        }
        Ok(())
    }

    pub fn apply(&self, x: &Vector) -> Result<Vector> {
        self.check_input(x)?;
        let y = match self {
            Self::Inversion(inv) | Self::Recovered(inv) => inv.eval(x)?,
            Self::LinearConjugate { pre, inner, post } => post.matrix.mul_vec(&inner.apply(&pre.matrix.mul_vec(x))?),
            Self::Compose(maps) => {
                let mut y = x.clone();
                for m in maps {
                    y = m.apply(&y)?;
                }
                y
            }
            Self::Identity { .. } => x.clone(),
            Self::Linear(l) => l.matrix.mul_vec(x),
            Self::Power { exponent, .. } => power(x, *exponent)?,
        };
        finite(y)
    }

    pub fn apply_inverse(&self, y: &Vector) -> Result<Vector> {
        self.check_input(y)?;
        let x = match self {
            Self::Inversion(inv) | Self::Recovered(inv) => inv.eval(y)?,
            Self::LinearConjugate { pre, inner, post } => {
                pre.inverse.mul_vec(&inner.apply_inverse(&post.inverse.mul_vec(y))?)
            }
            Self::Compose(maps) => {
                let mut x = y.clone();
                for m in maps.iter().rev() {
                    x = m.apply_inverse(&x)?;
                }
                x
            }
            Self::Identity { .. } => y.clone(),
            Self::Linear(l) => l.inverse.mul_vec(y),
            Self::Power { exponent, .. } => power(y, 1.0 / exponent)?,
        };
        finite(x)
    }
}

fn power(x: &Vector, p: f64) -> Result<Vector> {
    if x.iter().any(|&c| c <= 0.0) {
        return Err(Error::NotInterior);
    }
    Ok(x.map(|c| c.powf(p)))
}

fn finite(x: Vector) -> Result<Vector> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(Error::NonFinite)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
enum Wire {
    Inversion { cone: ConeSpec },
    Conjugate { pre: Matrix, inner: Box<Wire>, post: Matrix },
    Compose { maps: Vec<Wire> },
    Recovered { product: ProductTensor },
    Identity { n: usize },
    Linear { matrix: Matrix },
    Power { n: usize, exponent: f64 },
}

impl TryFrom<Wire> for GaugeMapSpec {
    type Error = Error;

    fn try_from(w: Wire) -> Result<Self> {
        match w {
            Wire::Inversion { cone } => Self::inversion(cone),
            Wire::Conjugate { pre, inner, post } => Self::conjugate(pre, (*inner).try_into()?, post),
            Wire::Compose { maps } => Self::compose(maps.into_iter().map(Self::try_from).collect::<Result<_>>()?),
            Wire::Recovered { product } => Ok(Self::recovered(product)),
            Wire::Identity { n } => Ok(Self::Identity { n }),
            Wire::Linear { matrix } => Self::linear(matrix),
            Wire::Power { n, exponent } => Self::power(n, exponent),
        }
    }
}

impl From<&GaugeMapSpec> for Wire {
    fn from(m: &GaugeMapSpec) -> Self {
        match m {
            GaugeMapSpec::Inversion(inv) => match &inv.cone {
                Some(cone) => Wire::Inversion { cone: cone.clone() },
                None => Wire::Recovered { product: inv.product.clone() },
            },
            GaugeMapSpec::LinearConjugate { pre, inner, post } => Wire::Conjugate {
                pre: pre.matrix.clone(),
                inner: Box::new(inner.as_ref().into()),
                post: post.matrix.clone(),
            },
            GaugeMapSpec::Compose(maps) => Wire::Compose { maps: maps.iter().map(Wire::from).collect() },
            GaugeMapSpec::Recovered(inv) => Wire::Recovered { product: inv.product.clone() },
            GaugeMapSpec::Identity { n } => Wire::Identity { n: *n },
            GaugeMapSpec::Linear(l) => Wire::Linear { matrix: l.matrix.clone() },
            GaugeMapSpec::Power { n, exponent } => Wire::Power { n: *n, exponent: *exponent },
        }
    }
}

impl Serialize for GaugeMapSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        Wire::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for GaugeMapSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        Wire::deserialize(d)?.try_into().map_err(serde::de::Error::custom)
    }
}

/// `(Ax)_i = d_i · x_{perm[i]}`.
pub fn orthant_automorphism(perm: &[usize], diag: &[f64]) -> Result<Matrix> {
    let n = perm.len();
    let mut seen = vec![false; n];
    for &p in perm {
        if p >= n || std::mem::replace(&mut seen[p], true) {
            return Err(Error::InvalidArgument("not a permutation".into()));
        }
    }
    if diag.len() != n || diag.iter().any(|&d| !(d > 0.0)) {
        return Err(Error::InvalidArgument("diagonal must be positive with one entry per coordinate".into()));
    }
    let mut a = Matrix::zeros(n, n);
    for i in 0..n {
        a[(i, perm[i])] = diag[i];
    }
    Ok(a)
}

/// Matrix of `X ↦ GᵀXG` acting on svec coordinates.
pub fn psd_congruence(g: &Matrix) -> Matrix {
    let d = g.rows();
    let n = d * (d + 1) / 2;
    let cols: Vec<Vector> = (0..n)
        .map(|k| {
            let x = smat(&Vector::basis(n, k), d);
            svec(&g.transpose().matmul(&x).matmul(g))
        })
        .collect();
    Matrix::from_columns(&cols)
}

/// Lorentz boost with the given rapidity along the unit direction `axis`.
pub fn lorentz_boost(rapidity: f64, axis: &Vector) -> Result<Matrix> {
    let norm = axis.norm();
    if !(norm > 0.0) || !rapidity.is_finite() {
        return Err(Error::InvalidArgument("boost needs a nonzero axis and finite rapidity".into()));
    }
    let w = axis.scale(1.0 / norm);
    let n = w.len() + 1;
    let (ch, sh) = (rapidity.cosh(), rapidity.sinh());
    let mut a = Matrix::identity(n);
    a[(0, 0)] = ch;
    for i in 1..n {
        a[(0, i)] = sh * w[i - 1];
        a[(i, 0)] = sh * w[i - 1];
        for j in 1..n {
            a[(i, j)] += (ch - 1.0) * w[i - 1] * w[j - 1];
        }
    }
    Ok(a)
}

pub fn block_diagonal(blocks: &[Matrix]) -> Matrix {
    let n = blocks.iter().map(Matrix::rows).sum();
    let mut a = Matrix::zeros(n, n);
    let mut offset = 0;
    for b in blocks {
        a.set_block(offset, b);
        offset += b.rows();
    }
    a
}

/// A pseudo-random automorphism of the cone that moves the canonical unit.
pub fn random_automorphism(cone: &ConeSpec, seed: u64) -> Result<Matrix> {
    cone.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_automorphism_with(cone, &mut rng)
}

fn random_automorphism_with(cone: &ConeSpec, rng: &mut ChaCha8Rng) -> Result<Matrix> {
    match cone {
        ConeSpec::Orthant { n } => {
            let mut perm: Vec<usize> = (0..*n).collect();
            perm.shuffle(rng);
            let diag: Vec<f64> = (0..*n).map(|_| rng.gen_range(0.5..2.0)).collect();
            orthant_automorphism(&perm, &diag)
        }
        ConeSpec::Lorentz { n } => {
            let axis = Vector::new((1..*n).map(|_| rng.gen_range(-1.0..1.0)).collect());
            let axis = if axis.norm() > 1e-3 { axis } else { Vector::basis(n - 1, 0) };
            let scale = rng.gen_range(0.5..2.0);
            Ok(lorentz_boost(rng.gen_range(0.3..0.8), &axis)?.scale(scale))
        }
        ConeSpec::Psd { d } => {
            let mut g = Matrix::identity(*d);
            for i in 0..*d {
                for j in 0..*d {
                    g[(i, j)] += rng.gen_range(-0.3..0.3);
                }
            }
            Lu::factor(&g)?;
            Ok(psd_congruence(&g))
        }
        ConeSpec::DirectSum { parts } => {
            let blocks: Vec<Matrix> = parts.iter().map(|p| random_automorphism_with(p, rng)).collect::<Result<_>>()?;
            Ok(block_diagonal(&blocks))
        }
    }
}

/// Inversion wrapped as `x ↦ B·(A x)⁻¹` with random automorphisms `A`, `B`.
pub fn conjugated_inversion(cone: &ConeSpec, seed: u64) -> Result<GaugeMapSpec> {
    let pre = random_automorphism(cone, seed)?;
    let post = random_automorphism(cone, seed.wrapping_add(1))?;
    GaugeMapSpec::conjugate(pre, GaugeMapSpec::inversion(cone.clone())?, post)
}

/// Worst closure violation of `A p` and `A⁻¹ p` over sampled positive `p`.
pub fn automorphism_violation(space: &OrderUnitSpace, a: &LinearMap, trials: usize, seed: u64) -> f64 {
    let mut smp = space.sampler(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let p = smp.positive(SAMPLE_RADIUS);
        for img in [a.matrix.mul_vec(&p), a.inverse.mul_vec(&p)] {
            let scale = space.order_unit_norm(&img).unwrap_or(f64::INFINITY).max(1e-300);
            let lo = space.spectral_bounds(&img).map(|b| b.0).unwrap_or(f64::NEG_INFINITY);
            worst = worst.max((-lo).max(0.0) / scale);
        }
    }
    worst
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Direction {
    Reversing,
    Preserving,
}

/// Checks on sampled interior points that `map` is a gauge-reversing
/// bijection `src → dst`: (a) `M(Φx,Φy) = M(y,x)`, (b) `Φ(λx) = λ⁻¹Φ(x)`,
/// (c) `x ≤ y ⇒ Φy ≤ Φx`, (d) Thompson isometry, (e) convexity, and
/// (f) `‖Φx−Φy‖_w ≤ λ²‖x−y‖_v` for `x, y ≥ λ⁻¹v` with `w = Φ(v)`; plus the
/// round trip `Φ⁻¹Φ = id`.
pub fn verify_gauge_reversing(
    map: &GaugeMapSpec,
    src: &OrderUnitSpace,
    dst: &OrderUnitSpace,
    trials: usize,
    seed: u64,
    tol: f64,
) -> VerificationReport {
    verify_gauge_map(map, src, dst, trials, seed, tol, Direction::Reversing)
}

/// Mirror of [`verify_gauge_reversing`] for gauge-preserving maps:
/// `M(Φx,Φy) = M(x,y)`, degree one homogeneity, order preservation, Thompson
/// isometry, affinity, and `‖Φx−Φy‖_w ≤ ‖x−y‖_v` with `w = Φ(v)`.
pub fn verify_gauge_preserving(
    map: &GaugeMapSpec,
    src: &OrderUnitSpace,
    dst: &OrderUnitSpace,
    trials: usize,
    seed: u64,
    tol: f64,
) -> VerificationReport {
    verify_gauge_map(map, src, dst, trials, seed, tol, Direction::Preserving)
}

fn verify_gauge_map(
    map: &GaugeMapSpec,
    src: &OrderUnitSpace,
    dst: &OrderUnitSpace,
    trials: usize,
    seed: u64,
    tol: f64,
    dir: Direction,
) -> VerificationReport {
    let reversing = dir == Direction::Reversing;
    let suite = if reversing { "gauge_reversing" } else { "gauge_preserving" };
    let mut report = ReportBuilder::new(suite, seed);
    let mut round_trip = Tracker::new("round_trip", tol);
    let mut gauge = Tracker::new("gauge_identity", tol);
    let mut homogeneity = Tracker::new("homogeneity", tol);
    let mut order = Tracker::new(if reversing { "order_reversal" } else { "order_preservation" }, tol);
    let mut isometry = Tracker::new("thompson_isometry", tol);
    let mut shape = Tracker::new(if reversing { "convexity" } else { "affinity" }, tol);
    let mut lipschitz = Tracker::new("lipschitz", tol);

    let degree = if reversing { -1 } else { 1 };
    // Samples satisfy x ≥ λ⁻¹v for this λ.
    let lambda = SAMPLE_RADIUS.exp();
    let lip_factor = if reversing { lambda * lambda } else { 1.0 };
    let local = map.apply(src.unit()).and_then(|w| dst.with_unit(&w));

    let mut smp = src.sampler(seed);
    for _ in 0..trials.max(1) {
        let x = smp.interior(SAMPLE_RADIUS);
        let y = smp.interior(SAMPLE_RADIUS);
        let p = smp.positive(SAMPLE_RADIUS);
        let t = smp.uniform(0.0, 1.0);

        let images = map.apply(&x).and_then(|fx| Ok((map.apply(&y)?, fx)));
        let (fy, fx) = match images {
            Ok(v) => v,
            Err(_) => {
                for tr in [&mut round_trip, &mut gauge, &mut homogeneity, &mut order, &mut isometry, &mut shape, &mut lipschitz] {
                    tr.record(f64::INFINITY);
                }
                continue;
            }
        };
        let nfx = dst.order_unit_norm(&fx).unwrap_or(f64::INFINITY).max(f64::MIN_POSITIVE);

        round_trip.record_result(map.apply_inverse(&fx).and_then(|back| {
            Ok(src.order_unit_norm(&(&back - &x))? / src.order_unit_norm(&x)?)
        }));

        gauge.record_result((|| {
            let lhs = dst.max_gauge(&fx, &fy)?;
            let rhs = if reversing { src.max_gauge(&y, &x)? } else { src.max_gauge(&x, &y)? };
            Ok::<_, Error>((lhs - rhs).abs() / rhs)
        })());

        for s in HOMOGENEITY_SCALES {
            homogeneity.record_result(map.apply(&x.scale(s)).and_then(|f| {
                let expected = fx.scale(s.powi(degree));
                Ok(dst.order_unit_norm(&(&f - &expected))? / (nfx * s.powi(degree)))
            }));
        }

        order.record_result((|| {
            let fxp = map.apply(&(&x + &p))?;
            if reversing {
                dst.order_violation(&fxp, &fx)
            } else {
                dst.order_violation(&fx, &fxp)
            }
        })());

        isometry.record_result((|| {
            Ok::<_, Error>((dst.thompson_distance(&fx, &fy)? - src.thompson_distance(&x, &y)?).abs())
        })());

        shape.record_result((|| {
            let mid = map.apply(&x.scale(1.0 - t).axpy(t, &y))?;
            let chord = fx.scale(1.0 - t).axpy(t, &fy);
            if reversing {
                dst.order_violation(&mid, &chord)
            } else {
                Ok(dst.order_unit_norm(&(&mid - &chord))? / nfx.max(1.0))
            }
        })());

        lipschitz.record_result(local.as_ref().map_err(Clone::clone).and_then(|w_space| {
            let lhs = w_space.order_unit_norm(&(&fx - &fy))?;
            let rhs = lip_factor * src.order_unit_norm(&(&x - &y))?;
            Ok((lhs - rhs).max(0.0))
        }));
    }
    report.add_all([round_trip, gauge, homogeneity, order, isometry, shape, lipschitz]);
    report.finish()
}

/// Residual above which a map is declared not linear.
pub const LINEARIZATION_LIMIT: f64 = 1e-6;

/// Recovers the matrix of a gauge-preserving map from its values at `v` and
/// `v + t·b_j`, then confirms `Lx = Φ(x)` on sampled interior points.
pub fn linearize_gauge_preserving(map: &GaugeMapSpec, space: &OrderUnitSpace, seed: u64) -> Result<Matrix> {
    let n = space.dim();
    let v = space.unit();
    let fv = map.apply(v)?;
    let mut cols = Vec::with_capacity(n);
    for j in 0..n {
        let b = Vector::basis(n, j);
        let t = halving_step(space, v, &b)?;
        let f = map.apply(&v.axpy(t, &b))?;
        cols.push((&f - &fv).scale(1.0 / t));
    }
    let l = Matrix::from_columns(&cols);
    let mut smp = space.sampler(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let x = smp.interior(SAMPLE_RADIUS);
        let fx = map.apply(&x)?;
        let scale = fx.max_abs().max(1e-300);
        worst = worst.max((&l.mul_vec(&x) - &fx).max_abs() / scale);
    }
    if worst > LINEARIZATION_LIMIT {
        return Err(Error::NotLinearizable { residual: worst });
    }
    Ok(l)
}

/// Largest `t = 2⁻ᵏ ≤ 1` with `x ± t·w` interior, keeping a factor-two buffer
/// (`x ± 2t·w` interior too) so that probes stay away from the boundary.
pub fn halving_step(space: &OrderUnitSpace, x: &Vector, w: &Vector) -> Result<f64> {
    let mut t = 1.0;
    for _ in 0..200 {
        if space.is_interior(&x.axpy(2.0 * t, w)) && space.is_interior(&x.axpy(-2.0 * t, w)) {
            return Ok(t);
        }
        t *= 0.5;
    }
    Err(Error::NotInterior)
}
