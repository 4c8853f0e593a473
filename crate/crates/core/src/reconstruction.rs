//! Recovering a Jordan algebra from a gauge-reversing map.
//!
//! Derivatives come from Hua's identity, never from finite differences:
//! `DΦ(x)(u) = Φ(x + Φ⁻¹(Φ(u) − Φ(x))) − Φ(x)` whenever `2u ≤ x`. Normalizing
//! `DΦ(x)` gives the symmetry `S_x = −[DΦ(x)]⁻¹ ∘ Φ` and the inversion
//! `j = S_v`; the quadratic representation is read off `j` through
//! `P(x)y = j(j(x) − j(x + j(y))) − x`, extended to all of `V` as a quadratic
//! polynomial, and polarized into the product `a ∘ b = P(a, b)v`.

use crate::error::{Error, Result};
use crate::jordan::{check_jb_norm_conditions, check_qj_axioms, AlgebraHandle, ProductTensor};
use crate::linalg::{Lu, Matrix, Vector};
use crate::maps::{halving_step, GaugeMapSpec, HOMOGENEITY_SCALES, SAMPLE_RADIUS};
use crate::report::{ReportBuilder, Tracker, VerificationReport};
use crate::space::OrderUnitSpace;

/// Largest accepted relative residual of `D·x = −Φ(x)`.
pub const ASSEMBLY_TOLERANCE: f64 = 1e-7;
/// Largest accepted disagreement between independent routes to `P(x)`.
pub const CROSS_CHECK_TOLERANCE: f64 = 1e-7;
/// Largest accepted unit-law residual of an extracted product.
pub const UNIT_LAW_TOLERANCE: f64 = 1e-8;
/// Truncation order of the geometric series check.
pub const SERIES_TERMS: usize = 40;

/// The matrix of `DΦ(x)`.
#[derive(Clone, Debug, PartialEq)]
pub struct DerivativeAtPoint {
    pub point: Vector,
    pub matrix: Matrix,
}

impl DerivativeAtPoint {
    pub fn apply(&self, y: &Vector) -> Vector {
        self.matrix.mul_vec(y)
    }
}

/// Exact directional derivative of `map` at `x` in the direction `u`, for
/// `x, u` interior with `2u ≤ x`.
pub fn hua_directional_derivative(map: &GaugeMapSpec, space: &OrderUnitSpace, x: &Vector, u: &Vector) -> Result<Vector> {
    space.require_interior(x)?;
    space.require_interior(u)?;
    let fx = map.apply(x)?;
    hua_with_image(map, space, x, &fx, u)
}

fn hua_with_image(map: &GaugeMapSpec, space: &OrderUnitSpace, x: &Vector, fx: &Vector, u: &Vector) -> Result<Vector> {
    let gap = x.axpy(-2.0, u);
    let (lo, _) = space.spectral_bounds(&gap)?;
    if lo < -1e-12 * space.order_unit_norm(x)? {
        return Err(Error::Domain("2u ≤ x is violated".into()));
    }
    let diff = &map.apply(u)? - fx;
    if !space.is_interior(&diff) {
        return Err(Error::Domain("Φ(u) − Φ(x) is not interior".into()));
    }
    let y = map.apply_inverse(&diff)?;
    Ok(&map.apply(&(x + &y))? - fx)
}

/// Assembles `DΦ(x)` column by column; returns the matrix together with
/// `Φ(x)` and the relative residual of `D·x = −Φ(x)`.
fn assemble_unchecked(map: &GaugeMapSpec, space: &OrderUnitSpace, x: &Vector) -> Result<(Matrix, Vector, f64)> {
    space.require_interior(x)?;
    let n = space.dim();
    let fx = map.apply(x)?;
    let u0 = x.scale(0.25);
    let base = hua_with_image(map, space, x, &fx, &u0)?;
    let mut cols = Vec::with_capacity(n);
    for j in 0..n {
        let w = Vector::basis(n, j);
        let t = halving_step(space, x, &w)?;
        let uj = x.axpy(t, &w).scale(0.25);
        let dj = hua_with_image(map, space, x, &fx, &uj)?;
        cols.push((&dj - &base).scale(4.0 / t));
    }
    let d = Matrix::from_columns(&cols);
    let residual = space.order_unit_norm(&(&d.mul_vec(x) + &fx))? / space.order_unit_norm(&fx)?.max(f64::MIN_POSITIVE);
    Ok((d, fx, residual))
}

/// `DΦ(x)` as a matrix; fails when `D·x = −Φ(x)` is off by more than
/// [`ASSEMBLY_TOLERANCE`] (relative), which rules out maps that are not
/// homogeneous of degree −1.
pub fn assemble_derivative(map: &GaugeMapSpec, space: &OrderUnitSpace, x: &Vector) -> Result<DerivativeAtPoint> {
    let (matrix, _, residual) = assemble_unchecked(map, space, x)?;
    if !(residual <= ASSEMBLY_TOLERANCE) {
        return Err(Error::AssemblyFailure { residual });
    }
    Ok(DerivativeAtPoint { point: x.clone(), matrix })
}

/// `S_x = −[DΦ(x)]⁻¹ ∘ Φ`, the symmetry of the cone at `x`.
pub fn symmetry_at(map: &GaugeMapSpec, space: &OrderUnitSpace, x: &Vector) -> Result<GaugeMapSpec> {
    let d = assemble_derivative(map, space, x)?;
    let post = Lu::factor(&d.matrix)?.inverse().scale(-1.0);
    GaugeMapSpec::then_linear(map.clone(), post)
}

/// The inversion `j = S_v`.
pub fn inversion_j(map: &GaugeMapSpec, space: &OrderUnitSpace) -> Result<GaugeMapSpec> {
    symmetry_at(map, space, space.unit())
}

/// `P(x)` for interior `x`, via `P(x)y = j(j(x) − j(x + j(y))) − x` on the
/// spanning set `{v, v + s·b_j}`, cross-checked against `[−Dj(x)]⁻¹`.
pub fn quad_rep_interior(j: &GaugeMapSpec, space: &OrderUnitSpace, x: &Vector) -> Result<Matrix> {
    let p = quad_rep_from_j(j, space, x)?;
    let d = assemble_derivative(j, space, x)?;
    let other = Lu::factor(&d.matrix.scale(-1.0))?.inverse();
    let deviation = p.max_abs_diff(&other) / p.max_abs().max(f64::MIN_POSITIVE);
    if !(deviation <= CROSS_CHECK_TOLERANCE) {
        return Err(Error::PipelineInconsistency { deviation });
    }
    Ok(p)
}

fn quad_rep_from_j(j: &GaugeMapSpec, space: &OrderUnitSpace, x: &Vector) -> Result<Matrix> {
    space.require_interior(x)?;
    let n = space.dim();
    let v = space.unit();
    let jx = j.apply(x)?;
    let apply_p = |y: &Vector| -> Result<Vector> {
        let inner = &jx - &j.apply(&(x + &j.apply(y)?))?;
        Ok(&j.apply(&inner)? - x)
    };
    let pv = apply_p(v)?;
    let mut cols = Vec::with_capacity(n);
    for k in 0..n {
        let w = Vector::basis(n, k);
        let s = halving_step(space, v, &w)?;
        let pk = apply_p(&v.axpy(s, &w))?;
        cols.push((&pk - &pv).scale(1.0 / s));
    }
    Ok(Matrix::from_columns(&cols))
}

/// `P(x)` for arbitrary `x`: with `μ = ‖x‖_v + 1`, `a = x + μv`, `b = μv`,
/// `P(x) = 2P(a) + 2P(b) − P(a + b)`. The result is recomputed with `2μ` and
/// must agree.
pub fn quad_rep_full(j: &GaugeMapSpec, space: &OrderUnitSpace, x: &Vector) -> Result<Matrix> {
    let mu = space.order_unit_norm(x)? + 1.0;
    let p1 = shifted_quad_rep(j, space, x, mu)?;
    let p2 = shifted_quad_rep(j, space, x, 2.0 * mu)?;
    let deviation = p1.max_abs_diff(&p2) / p1.max_abs().max(1.0);
    if !(deviation <= CROSS_CHECK_TOLERANCE) {
        return Err(Error::PipelineInconsistency { deviation });
    }
    Ok(p1)
}

fn shifted_quad_rep(j: &GaugeMapSpec, space: &OrderUnitSpace, x: &Vector, mu: f64) -> Result<Matrix> {
    let b = space.unit().scale(mu);
    let a = x + &b;
    let pa = quad_rep_interior(j, space, &a)?;
    let pab = quad_rep_interior(j, space, &(&a + &b))?;
    // P(μv) = μ² P(v) = μ² Id.
    let pb = Matrix::identity(space.dim()).scale(mu * mu);
    Ok(pa.scale(2.0).axpy(2.0, &pb).axpy(-1.0, &pab))
}

/// The quadratic representation as a polynomial: `P(b_i, b_j)` are computed
/// once through [`quad_rep_full`] and `P(x) = Σ x_i x_j P(b_i, b_j)`.
#[derive(Clone, Debug)]
pub struct QuadraticRep {
    space: OrderUnitSpace,
    n: usize,
    /// `P(b_i, b_j)` for `i ≤ j`, row-major upper triangle.
    bilinear: Vec<Matrix>,
}

impl QuadraticRep {
    pub fn new(j: &GaugeMapSpec, space: &OrderUnitSpace) -> Result<Self> {
        let n = space.dim();
        let diag: Vec<Matrix> = (0..n).map(|i| quad_rep_full(j, space, &Vector::basis(n, i))).collect::<Result<_>>()?;
        let mut bilinear = Vec::with_capacity(n * (n + 1) / 2);
        for i in 0..n {
            for k in i..n {
                if i == k {
                    bilinear.push(diag[i].clone());
                } else {
                    let sum = quad_rep_full(j, space, &(&Vector::basis(n, i) + &Vector::basis(n, k)))?;
                    bilinear.push(sum.axpy(-1.0, &diag[i]).axpy(-1.0, &diag[k]).scale(0.5));
                }
            }
        }
        Ok(Self { space: space.clone(), n, bilinear })
    }

    pub fn space(&self) -> &OrderUnitSpace {
        &self.space
    }

    fn index(&self, i: usize, k: usize) -> usize {
        let (i, k) = if i <= k { (i, k) } else { (k, i) };
        i * self.n - i * i.saturating_sub(1) / 2 - i + k
    }

    /// `P(b_i, b_j)`.
    pub fn basis_bilinear(&self, i: usize, k: usize) -> &Matrix {
        &self.bilinear[self.index(i, k)]
    }

    /// `P(x, z) = ½(P(x+z) − P(x) − P(z))`.
    pub fn bilinear(&self, x: &Vector, z: &Vector) -> Matrix {
        let mut out = Matrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for k in 0..self.n {
                let c = x[i] * z[k];
                if c != 0.0 {
                    out = out.axpy(c, self.basis_bilinear(i, k));
                }
            }
        }
        out
    }

    pub fn eval(&self, x: &Vector) -> Matrix {
        self.bilinear(x, x)
    }

    /// `x² = P(x)v`.
    pub fn square(&self, x: &Vector) -> Vector {
        self.eval(x).mul_vec(self.space.unit())
    }

    /// `x ∘ z = P(x, z)v`.
    pub fn product(&self, x: &Vector, z: &Vector) -> Vector {
        self.bilinear(x, z).mul_vec(self.space.unit())
    }

    /// The structure tensor of `∘`, with unit `v`.
    pub fn product_tensor(&self) -> Result<ProductTensor> {
        let v = self.space.unit();
        let n = self.n;
        let table: Vec<Vec<Vec<f64>>> = (0..n)
            .map(|i| (0..n).map(|k| self.basis_bilinear(i, k).mul_vec(v).coords).collect())
            .collect();
        ProductTensor::from_table(v.clone(), &table)
    }
}

/// Extracts the Jordan product `b_i ∘ b_j = P(b_i, b_j)v` from the inversion.
pub fn extract_product(j: &GaugeMapSpec, space: &OrderUnitSpace) -> Result<ProductTensor> {
    Ok(reconstruct_from_j(j.clone(), space)?.product)
}

/// Everything the pipeline recovers from a gauge-reversing map.
#[derive(Clone, Debug)]
pub struct Reconstruction {
    pub j: GaugeMapSpec,
    pub quadratic: QuadraticRep,
    pub product: ProductTensor,
}

/// Runs the whole pipeline: `j = S_v`, then `P`, then the product.
pub fn reconstruct(map: &GaugeMapSpec, space: &OrderUnitSpace) -> Result<Reconstruction> {
    reconstruct_from_j(inversion_j(map, space)?, space)
}

fn reconstruct_from_j(j: GaugeMapSpec, space: &OrderUnitSpace) -> Result<Reconstruction> {
    let quadratic = QuadraticRep::new(&j, space)?;
    let product = quadratic.product_tensor()?;
    let residual = product.unit_law_residual();
    if !(residual <= UNIT_LAW_TOLERANCE) {
        return Err(Error::ExtractionFailure { residual });
    }
    Ok(Reconstruction { j, quadratic, product })
}

/// Largest entrywise deviation between two product tensors.
pub fn cross_validate(recovered: &ProductTensor, truth: &ProductTensor) -> Result<f64> {
    if recovered.dim() != truth.dim() {
        return Err(Error::DimensionMismatch { expected: truth.dim(), actual: recovered.dim() });
    }
    if (recovered.unit() - truth.unit()).max_abs() > 1e-9 {
        return Err(Error::InvalidArgument("product tensors have different units".into()));
    }
    Ok(recovered.max_deviation(truth))
}

fn all_fail(trackers: &mut [&mut Tracker]) {
    for t in trackers.iter_mut() {
        t.record(f64::INFINITY);
    }
}

/// Evaluates the identities of the construction on sampled points:
///
/// - of the map itself: round trip, degree −1 homogeneity, Euler's relation
///   `DΦ(x)x = −Φ(x)`, agreement of the Hua derivative with the assembled
///   matrix, Hua's identity, positivity of `−DΦ(x)`, the first order bound
///   `‖Φ(x+y) − Φ(x) − DΦ(x)y‖_{Φ(x)} ≤ ‖y‖²_x` for positive `y` (and its
///   finite-difference form), and the `11λ³`, `6λ³`, `18λ³` continuity bounds
///   measured in `‖·‖_w` with `w = Φ(v)`;
/// - of the recovered inversion and quadratic representation: `j(v) = v`,
///   `j² = id`, `S_xS_yS_x = S_{S_x(y)}`, `P(x) = [−Dj(x)]⁻¹`, the polynomial
///   extension, `P(v) = Id`, `(P(x) − P(y))j(x+y) = x − y`, `P(x,y)j(x) = y`,
///   `P(x)P(y)P(x) = P(P(x)y)`, `j(v−h) = Σh^k`,
///   `v − x² = 2j(j(v−x) + j(v+x))`, `0 ≤ x² ≤ v`, `‖P(x)v‖ = ‖x‖²` and
///   positivity of `P(x)`;
/// - and the quadratic Jordan and JB norm axioms of the extracted product.
///
/// Pipeline errors are recorded as failing trials.
pub fn verify_reconstruction(
    map: &GaugeMapSpec,
    space: &OrderUnitSpace,
    trials: usize,
    seed: u64,
    tol: f64,
) -> VerificationReport {
    let trials = trials.max(1);
    let mut report = ReportBuilder::new("reconstruction", seed);
    let norm = |x: &Vector| space.order_unit_norm(x);
    let v = space.unit();
    let lambda = SAMPLE_RADIUS.exp();

    // Properties of the map.
    let mut round_trip = Tracker::new("round_trip", tol);
    let mut homogeneity = Tracker::new("homogeneity", tol);
    let mut euler = Tracker::new("derivative_euler", tol);
    let mut hua_derivative = Tracker::new("hua_derivative", tol);
    let mut hua = Tracker::new("hua", tol);
    let mut d_positive = Tracker::new("derivative_positive", tol);
    let mut first_order = Tracker::new("derivative_bound", tol);
    let mut finite_diff = Tracker::new("finite_difference", tol);
    let mut jdiff = Tracker::new("jdiff_bound", tol);
    let mut djcont = Tracker::new("djcont_bound", tol);
    let mut djcont_pos = Tracker::new("djcont_positive_bound", tol);

    let w_space = map.apply(v).and_then(|w| space.with_unit(&w));
    let mut smp = space.sampler(seed);
    for _ in 0..trials {
        let x = smp.interior(SAMPLE_RADIUS);
        let y = smp.interior(SAMPLE_RADIUS);
        let z = smp.interior(SAMPLE_RADIUS);
        let p = smp.positive(SAMPLE_RADIUS);
        let ball = smp.ball(1.0);
        let s = smp.uniform(0.2, 0.95);
        let r = smp.uniform(0.05, 0.5);

        round_trip.record_result((|| {
            let back = map.apply_inverse(&map.apply(&x)?)?;
            Ok::<_, Error>(norm(&(&back - &x))? / norm(&x)?)
        })());

        let (d, fx, residual) = match assemble_unchecked(map, space, &x) {
            Ok(t) => t,
            Err(_) => {
                all_fail(&mut [
                    &mut homogeneity, &mut euler, &mut hua_derivative, &mut hua, &mut d_positive,
                    &mut first_order, &mut finite_diff, &mut jdiff, &mut djcont, &mut djcont_pos,
                ]);
                continue;
            }
        };
        euler.record(residual);
        let nfx = norm(&fx).unwrap_or(f64::INFINITY);

        for l in HOMOGENEITY_SCALES {
            homogeneity.record_result(map.apply(&x.scale(l)).and_then(|f| Ok(norm(&(&f.scale(l) - &fx))? / nfx)));
        }

        hua_derivative.record_result((|| {
            let u = z.scale(s * space.min_gauge(&x, &z)? / 2.0);
            let exact = hua_with_image(map, space, &x, &fx, &u)?;
            Ok::<_, Error>(norm(&(&exact - &d.mul_vec(&u)))? / nfx)
        })());

        hua.record_result((|| {
            let fy = map.apply(&y)?;
            let lhs = &fx - &map.apply(&(&x + &y))?;
            let rhs = d.mul_vec(&map.apply_inverse(&(&fx + &fy))?).scale(-1.0);
            Ok::<_, Error>(norm(&(&lhs - &rhs))? / (1.0 + nfx))
        })());

        d_positive.record_result((|| {
            let img = d.mul_vec(&p).scale(-1.0);
            let (lo, _) = space.spectral_bounds(&img)?;
            Ok::<_, Error>((-lo).max(0.0) / norm(&p)?.max(f64::MIN_POSITIVE) / nfx.max(1.0))
        })());

        // ‖·‖_x and ‖·‖_{Φ(x)}.
        let local = space.with_unit(&x).and_then(|sx| Ok((sx, space.with_unit(&fx)?)));
        let q = match &local {
            Ok((sx, _)) => sx.order_unit_norm(&p).map(|np| p.scale(r / np.max(f64::MIN_POSITIVE))),
            Err(e) => Err(e.clone()),
        };
        first_order.record_result((|| {
            let (sx, sfx) = local.as_ref().map_err(Clone::clone)?;
            let q = q.clone()?;
            let rem = &(&map.apply(&(&x + &q))? - &fx) - &d.mul_vec(&q);
            let nq = sx.order_unit_norm(&q)?;
            Ok::<_, Error>((sfx.order_unit_norm(&rem)? - nq * nq).max(0.0))
        })());
        for mu in [1e-2, 1e-3] {
            finite_diff.record_result((|| {
                let (sx, sfx) = local.as_ref().map_err(Clone::clone)?;
                let q = q.clone()?;
                let quotient = (&map.apply(&x.axpy(mu, &q))? - &fx).scale(1.0 / mu);
                let nq = sx.order_unit_norm(&q)?;
                Ok::<_, Error>((sfx.order_unit_norm(&(&quotient - &d.mul_vec(&q)))? - mu * nq * nq).max(0.0))
            })());
        }

        // x, y ≥ λ⁻¹v for the continuity bounds.
        let lam3 = lambda.powi(3);
        jdiff.record_result((|| {
            let ws = w_space.as_ref().map_err(Clone::clone)?;
            let dz = &y - &x;
            let rem = &(&map.apply(&y)? - &fx) - &d.mul_vec(&dz);
            let nz = norm(&dz)?;
            Ok::<_, Error>((ws.order_unit_norm(&rem)? - 11.0 * lam3 * nz * nz).max(0.0))
        })());
        let dy = assemble_unchecked(map, space, &y).map(|t| t.0);
        djcont.record_result((|| {
            let ws = w_space.as_ref().map_err(Clone::clone)?;
            let diff = d.axpy(-1.0, dy.as_ref().map_err(Clone::clone)?);
            let nxy = norm(&(&x - &y))?;
            let lhs = ws.order_unit_norm(&diff.mul_vec(&ball))?;
            Ok::<_, Error>((lhs - 18.0 * lam3 * nxy * norm(&ball)?).max(0.0))
        })());
        djcont_pos.record_result((|| {
            let ws = w_space.as_ref().map_err(Clone::clone)?;
            let diff = d.axpy(-1.0, dy.as_ref().map_err(Clone::clone)?);
            let nxy = norm(&(&x - &y))?;
            let lhs = ws.order_unit_norm(&diff.mul_vec(&p))?;
            Ok::<_, Error>((lhs - 6.0 * lam3 * nxy * norm(&p)?).max(0.0))
        })());
    }
    report.add_all([
        round_trip, homogeneity, euler, hua_derivative, hua, d_positive, first_order, finite_diff, jdiff, djcont,
        djcont_pos,
    ]);

    // Properties of the recovered structure.
    let names = [
        "j_unit", "j_involution", "symmetry_conjugation", "quad_rep_paths", "quadratic_extension", "quad_unit",
        "fundamental", "cancellation", "qj3", "geometric_series", "jvx", "squares_positive", "squares_below_unit",
        "quad_norm", "quad_positive",
    ];
    let rec = match reconstruct(map, space) {
        Ok(rec) => rec,
        Err(_) => {
            for name in names {
                report.add_failure(name, tol);
            }
            report.add_failure("algebra", tol);
            return report.finish();
        }
    };
    let j = &rec.j;
    let quad = &rec.quadratic;
    let prod = &rec.product;
    let mut t: Vec<Tracker> = names.iter().map(|n| Tracker::new(*n, tol)).collect();
    let [j_unit, j_inv, sss, paths, extension, quad_unit, fundamental, canc, qj3, series, jvx, sq_pos, sq_below, qnorm, qpos] =
        &mut t[..]
    else {
        unreachable!()
    };

    j_unit.record_result(j.apply(v).and_then(|jv| norm(&(&jv - v))));
    quad_unit.record(quad.eval(v).max_abs_diff(&Matrix::identity(space.dim())));

    let mut smp = space.sampler(seed ^ 0x9e37_79b9_7f4a_7c15);
    let sym_pairs = trials.min(5);
    let expensive = trials.min(20);
    for trial in 0..trials {
        let x = smp.interior(SAMPLE_RADIUS);
        let y = smp.interior(SAMPLE_RADIUS);
        let bx = smp.ball(1.0);
        let by = smp.ball(1.0);
        let pos = smp.positive(SAMPLE_RADIUS);
        let dir = smp.direction();
        let jx_ball = smp.ball(0.9);
        let nbx = norm(&bx).unwrap_or(f64::INFINITY);
        let nby = norm(&by).unwrap_or(f64::INFINITY);

        j_inv.record_result((|| Ok::<_, Error>(norm(&(&j.apply(&j.apply(&x)?)? - &x))? / norm(&x)?))());

        if trial < sym_pairs {
            let probes: Vec<Vector> = (0..4).map(|_| smp.interior(SAMPLE_RADIUS)).collect();
            let res = (|| {
                let sx = symmetry_at(map, space, &x)?;
                let sy = symmetry_at(map, space, &y)?;
                let sxy = symmetry_at(map, space, &sx.apply(&y)?)?;
                let mut worst: f64 = 0.0;
                for z in &probes {
                    let a = sx.apply(&sy.apply(&sx.apply(z)?)?)?;
                    let b = sxy.apply(z)?;
                    worst = worst.max(norm(&(&a - &b))? / (1.0 + norm(&b)?));
                }
                Ok::<_, Error>(worst)
            })();
            sss.record_result(res);
        }
        if trial < expensive {
            paths.record_result((|| {
                let d = assemble_derivative(j, space, &x)?;
                let other = Lu::factor(&d.matrix.scale(-1.0))?.inverse();
                let p = quad.eval(&x);
                Ok::<_, Error>(p.max_abs_diff(&other) / p.max_abs().max(1.0))
            })());
        }
        if trial < trials.min(5) {
            extension.record_result(
                quad_rep_full(j, space, &bx).map(|p| p.max_abs_diff(&quad.eval(&bx)) / (1.0 + nbx).powi(2)),
            );
        }

        let px = quad.eval(&x);
        let py = quad.eval(&y);
        fundamental.record_result((|| {
            let lhs = px.axpy(-1.0, &py).mul_vec(&j.apply(&(&x + &y))?);
            Ok::<_, Error>(norm(&(&lhs - &(&x - &y)))? / (1.0 + norm(&x)? + norm(&y)?))
        })());
        canc.record_result((|| {
            let lhs = quad.bilinear(&x, &by).mul_vec(&j.apply(&x)?);
            Ok::<_, Error>(norm(&(&lhs - &by))? / (1.0 + nby))
        })());

        let pbx = quad.eval(&bx);
        let pby = quad.eval(&by);
        let left = pbx.matmul(&pby).matmul(&pbx);
        let right = quad.eval(&pbx.mul_vec(&by));
        qj3.record(left.max_abs_diff(&right) / ((1.0 + nbx).powi(4) * (1.0 + nby).powi(2)));

        series.record_result((|| {
            let h = dir.scale(0.5);
            let nh = norm(&h)?;
            let mut sum = v.clone();
            let mut power = v.clone();
            for _ in 0..SERIES_TERMS {
                power = prod.product(&h, &power);
                sum = &sum + &power;
            }
            let tail = nh.powi(SERIES_TERMS as i32 + 1) / (1.0 - nh);
            Ok::<_, Error>((norm(&(&j.apply(&(v - &h))? - &sum))? - tail).max(0.0))
        })());
        jvx.record_result((|| {
            let x = &jx_ball;
            let sq = quad.square(x);
            let rhs = j.apply(&(&j.apply(&(v - x))? + &j.apply(&(v + x))?))?.scale(2.0);
            norm(&(&(v - &sq) - &rhs))
        })());

        // −v ≤ bx ≤ v since bx lies in the unit ball.
        let sq = quad.square(&bx);
        sq_pos.record_result(space.spectral_bounds(&sq).map(|(lo, _)| (-lo).max(0.0)));
        sq_below.record_result(space.spectral_bounds(&(v - &sq)).map(|(lo, _)| (-lo).max(0.0)));
        qnorm.record_result(norm(&pbx.mul_vec(v)).map(|n| (n - nbx * nbx).abs()));
        qpos.record_result((|| {
            let img = pbx.mul_vec(&pos);
            let (lo, _) = space.spectral_bounds(&img)?;
            Ok::<_, Error>((-lo).max(0.0) / norm(&pos)?.max(f64::MIN_POSITIVE))
        })());
    }
    report.add_all(t);

    match AlgebraHandle::new(space.clone(), prod.clone()) {
        Ok(alg) => {
            report.merge("algebra", check_qj_axioms(&alg, trials, seed, tol));
            report.merge("algebra", check_jb_norm_conditions(&alg, trials, seed, tol));
        }
        Err(_) => report.add_failure("algebra", tol),
    }
    report.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cone::{svec, ConeSpec};
    use crate::jordan::builtin_product;
    use crate::maps::conjugated_inversion;
    use approx::assert_relative_eq;

    fn v(c: &[f64]) -> Vector {
        Vector::new(c.to_vec())
    }

    fn setup(cone: ConeSpec) -> (GaugeMapSpec, OrderUnitSpace) {
        (GaugeMapSpec::inversion(cone.clone()).unwrap(), OrderUnitSpace::standard(cone).unwrap())
    }

    #[test]
    fn scalar_hua_derivative() {
        let (m, s) = setup(ConeSpec::orthant(1));
        let d = hua_directional_derivative(&m, &s, &v(&[2.0]), &v(&[0.5])).unwrap();
        assert_relative_eq!(d[0], -0.125, max_relative = 1e-15);
        let x = v(&[2.0]);
        let d = hua_directional_derivative(&m, &s, &x, &x.scale(0.25)).unwrap();
        assert_relative_eq!(d[0], -0.125, max_relative = 1e-15);
    }

    #[test]
    fn orthant_hua_derivative() {
        let (m, s) = setup(ConeSpec::orthant(2));
        let d = hua_directional_derivative(&m, &s, &v(&[2.0, 2.0]), &v(&[0.5, 0.25])).unwrap();
        assert!((&d - &v(&[-0.125, -0.0625])).max_abs() < 1e-15);
    }

    #[test]
    fn hua_derivative_domain() {
        let (m, s) = setup(ConeSpec::orthant(2));
        let e = hua_directional_derivative(&m, &s, &v(&[1.0, 1.0]), &v(&[0.6, 0.1]));
        assert!(matches!(e, Err(Error::Domain(_))));
    }

    #[test]
    fn derivative_at_unit_is_minus_identity() {
        let (m, s) = setup(ConeSpec::lorentz(4));
        let d = assemble_derivative(&m, &s, s.unit()).unwrap();
        assert!(d.matrix.max_abs_diff(&Matrix::identity(4).scale(-1.0)) < 1e-12);
        let (m, s) = setup(ConeSpec::orthant(1));
        let d = assemble_derivative(&m, &s, &v(&[3.0])).unwrap();
        assert_relative_eq!(d.matrix[(0, 0)], -1.0 / 9.0, max_relative = 1e-12);
    }

    #[test]
    fn psd_derivative_is_minus_inverse_quad_rep() {
        let (m, s) = setup(ConeSpec::psd(2));
        let x = svec(&Matrix::from_diag(&[2.0, 1.0]));
        let d = assemble_derivative(&m, &s, &x).unwrap();
        let e11 = svec(&Matrix::from_diag(&[1.0, 0.0]));
        assert!((&d.apply(&e11) - &e11.scale(-0.25)).max_abs() < 1e-12);
    }

    #[test]
    fn power_map_fails_assembly() {
        let s = OrderUnitSpace::standard(ConeSpec::orthant(2)).unwrap();
        let m = GaugeMapSpec::power(2, -3.0).unwrap();
        assert!(matches!(assemble_derivative(&m, &s, &v(&[1.0, 2.0])), Err(Error::AssemblyFailure { .. })));
    }

    #[test]
    fn symmetry_examples() {
        let (m, s) = setup(ConeSpec::orthant(1));
        let s2 = symmetry_at(&m, &s, &v(&[2.0])).unwrap();
        assert_relative_eq!(s2.apply(&v(&[2.0])).unwrap()[0], 2.0, max_relative = 1e-12);
        assert_relative_eq!(s2.apply(&v(&[8.0])).unwrap()[0], 0.5, max_relative = 1e-12);
        let j = inversion_j(&m, &s).unwrap();
        assert_relative_eq!(j.apply(&v(&[4.0])).unwrap()[0], 0.25, max_relative = 1e-12);
    }

    #[test]
    fn normalization_removes_conjugation() {
        let cone = ConeSpec::orthant(3);
        let s = OrderUnitSpace::standard(cone.clone()).unwrap();
        let m = conjugated_inversion(&cone, 5).unwrap();
        let j = inversion_j(&m, &s).unwrap();
        let mut smp = s.sampler(2);
        for _ in 0..50 {
            let x = smp.interior(1.0);
            let want = x.map(|c| 1.0 / c);
            assert!((&j.apply(&x).unwrap() - &want).max_abs() < 1e-10);
            assert!((&j.apply(&j.apply(&x).unwrap()).unwrap() - &x).max_abs() < 1e-10);
        }
    }

    #[test]
    fn quad_rep_examples() {
        let (m, s) = setup(ConeSpec::orthant(2));
        let j = inversion_j(&m, &s).unwrap();
        assert!(quad_rep_interior(&j, &s, s.unit()).unwrap().max_abs_diff(&Matrix::identity(2)) < 1e-12);
        let p = quad_rep_interior(&j, &s, &v(&[2.0, 3.0])).unwrap();
        assert!(p.max_abs_diff(&Matrix::from_diag(&[4.0, 9.0])) < 1e-11);
        assert!(quad_rep_full(&j, &s, &v(&[0.0, 0.0])).unwrap().max_abs() < 1e-11);
        assert!(quad_rep_full(&j, &s, &v(&[-1.0, -1.0])).unwrap().max_abs_diff(&Matrix::identity(2)) < 1e-11);
        let p = quad_rep_full(&j, &s, &v(&[1.0, -2.0])).unwrap();
        assert!(p.max_abs_diff(&Matrix::from_diag(&[1.0, 4.0])) < 1e-10);
        let (m, s) = setup(ConeSpec::orthant(1));
        let j = inversion_j(&m, &s).unwrap();
        assert_relative_eq!(quad_rep_interior(&j, &s, &v(&[2.0])).unwrap()[(0, 0)], 4.0, max_relative = 1e-12);
    }

    #[test]
    fn parallelogram_law() {
        let (m, s) = setup(ConeSpec::lorentz(3));
        let j = inversion_j(&m, &s).unwrap();
        let mut smp = s.sampler(3);
        let (x, y) = (smp.ball(1.0), smp.ball(1.0));
        let p = |z: &Vector| quad_rep_full(&j, &s, z).unwrap();
        let lhs = p(&(&x + &y)).axpy(1.0, &p(&(&x - &y)));
        let rhs = p(&x).scale(2.0).axpy(2.0, &p(&y));
        assert!(lhs.max_abs_diff(&rhs) < 1e-8);
    }

    #[test]
    fn extracted_products_match_builtins() {
        for cone in [ConeSpec::orthant(3), ConeSpec::psd(2), ConeSpec::lorentz(4)] {
            let (m, s) = setup(cone.clone());
            let j = inversion_j(&m, &s).unwrap();
            let t = extract_product(&j, &s).unwrap();
            let dev = cross_validate(&t, &builtin_product(&cone).unwrap()).unwrap();
            assert!(dev < 1e-8, "{cone:?}: {dev}");
        }
    }

    #[test]
    fn cross_validate_examples() {
        let orth = builtin_product(&ConeSpec::orthant(3)).unwrap();
        assert_eq!(cross_validate(&orth, &orth).unwrap(), 0.0);
        let spin = builtin_product(&ConeSpec::lorentz(3)).unwrap();
        assert!(cross_validate(&orth, &spin).is_err());
        let spin_on_ones = ProductTensor::from_table(orth.unit().clone(), &spin.to_nested()).unwrap();
        assert!(cross_validate(&orth, &spin_on_ones).unwrap() > 0.1);
    }

    #[test]
    fn reconstruction_suite_passes_for_orthant_inversion() {
        let (m, s) = setup(ConeSpec::orthant(4));
        let r = verify_reconstruction(&m, &s, 30, 7, 1e-8);
        assert!(r.pass(), "{}", r.to_text());
    }

    #[test]
    fn reconstruction_suite_rejects_inverse_cube() {
        let s = OrderUnitSpace::standard(ConeSpec::orthant(3)).unwrap();
        let m = GaugeMapSpec::power(3, -3.0).unwrap();
        let r = verify_reconstruction(&m, &s, 10, 7, 1e-3);
        assert!(!r.property("homogeneity").unwrap().pass);
        assert!(!r.property("hua").unwrap().pass, "{}", r.to_text());
    }
}
