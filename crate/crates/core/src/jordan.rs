//! Jordan products as dense structure tensors, the builtin Euclidean Jordan
//! algebras of each cone family, and sampled checkers for the quadratic Jordan
//! axioms and the JB norm conditions.

use serde::{Deserialize, Serialize};

use crate::cone::{smat, svec, ConeSpec};
use crate::error::{Error, Result};
use crate::linalg::{Lu, Matrix, Vector};
use crate::report::{ReportBuilder, Tracker, VerificationReport};
use crate::space::OrderUnitSpace;

/// Largest supported ambient dimension (the table is stored densely).
pub const MAX_DIM: usize = 64;

/// Structure tensor of a commutative bilinear product with unit.
///
/// `table[(i*n + j)*n + k]` is coordinate `k` of `b_i ∘ b_j`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProductTensor {
    n: usize,
    unit: Vector,
    table: Vec<f64>,
}

impl ProductTensor {
    /// Builds the tensor from a bilinear map evaluated on basis pairs; the
    /// result is symmetrized.
    pub fn from_bilinear(unit: Vector, f: impl Fn(&Vector, &Vector) -> Vector) -> Result<Self> {
        let n = unit.len();
        if n == 0 || n > MAX_DIM {
            return Err(Error::InvalidArgument(format!("product dimension {n} outside 1..={MAX_DIM}")));
        }
        let basis: Vec<Vector> = (0..n).map(|i| Vector::basis(n, i)).collect();
        let mut table = vec![0.0; n * n * n];
        for i in 0..n {
            for j in i..n {
                let a = f(&basis[i], &basis[j]);
                let b = if i == j { a.clone() } else { f(&basis[j], &basis[i]) };
                for k in 0..n {
                    let s = 0.5 * (a[k] + b[k]);
                    table[(i * n + j) * n + k] = s;
                    table[(j * n + i) * n + k] = s;
                }
            }
        }
        Ok(Self { n, unit, table })
    }

    /// Builds from raw entries `table[i][j][k]`, symmetrizing in `(i, j)`.
    pub fn from_table(unit: Vector, table: &[Vec<Vec<f64>>]) -> Result<Self> {
        let n = unit.len();
        let shape_ok = table.len() == n && table.iter().all(|r| r.len() == n && r.iter().all(|c| c.len() == n));
        if !shape_ok {
            return Err(Error::InvalidArgument("product table must be n×n×n".into()));
        }
        if n == 0 || n > MAX_DIM {
            return Err(Error::InvalidArgument(format!("product dimension {n} outside 1..={MAX_DIM}")));
        }
        let mut flat = vec![0.0; n * n * n];
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let s = 0.5 * (table[i][j][k] + table[j][i][k]);
                    if !s.is_finite() {
                        return Err(Error::NonFinite);
                    }
                    flat[(i * n + j) * n + k] = s;
                }
            }
        }
        Ok(Self { n, unit, table: flat })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn unit(&self) -> &Vector {
        &self.unit
    }

    pub fn entry(&self, i: usize, j: usize, k: usize) -> f64 {
        self.table[(i * self.n + j) * self.n + k]
    }

    /// Sets `b_i∘b_j` and `b_j∘b_i` coordinate `k`.
    pub fn set_entry(&mut self, i: usize, j: usize, k: usize, value: f64) {
        let n = self.n;
        self.table[(i * n + j) * n + k] = value;
        self.table[(j * n + i) * n + k] = value;
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { n: self.n, unit: self.unit.clone(), table: self.table.iter().map(|t| t * s).collect() }
    }

    pub fn to_nested(&self) -> Vec<Vec<Vec<f64>>> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| (0..self.n).map(|k| self.entry(i, j, k)).collect()).collect())
            .collect()
    }

    /// Largest entrywise deviation between two tensors.
    pub fn max_deviation(&self, other: &ProductTensor) -> f64 {
        self.table.iter().zip(&other.table).fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn product(&self, x: &Vector, y: &Vector) -> Vector {
        let n = self.n;
        let mut out = vec![0.0; n];
        for i in 0..n {
            if x[i] == 0.0 {
                continue;
            }
            for j in 0..n {
                let w = x[i] * y[j];
                if w == 0.0 {
                    continue;
                }
                let row = &self.table[(i * n + j) * n..(i * n + j + 1) * n];
                for (o, t) in out.iter_mut().zip(row) {
                    *o += w * t;
                }
            }
        }
        Vector::new(out)
    }

    pub fn square(&self, x: &Vector) -> Vector {
        self.product(x, x)
    }

    /// `x^k` by repeated multiplication, `x^0 = e`.
    pub fn power(&self, x: &Vector, k: usize) -> Vector {
        let mut p = self.unit.clone();
        for _ in 0..k {
            p = self.product(x, &p);
        }
        p
    }

    /// Matrix of `y ↦ x∘y`.
    pub fn lin_rep(&self, x: &Vector) -> Matrix {
        let n = self.n;
        let mut t = Matrix::zeros(n, n);
        for i in 0..n {
            if x[i] == 0.0 {
                continue;
            }
            for j in 0..n {
                for k in 0..n {
                    t[(k, j)] += x[i] * self.table[(i * n + j) * n + k];
                }
            }
        }
        t
    }

    /// `U(x) = 2T(x)² − T(x²)`.
    pub fn quad_rep(&self, x: &Vector) -> Matrix {
        let t = self.lin_rep(x);
        let t2 = self.lin_rep(&self.square(x));
        t.matmul(&t).scale(2.0).axpy(-1.0, &t2)
    }

    /// `U(x, z) = ½(U(x+z) − U(x) − U(z))`.
    pub fn quad_rep_bilinear(&self, x: &Vector, z: &Vector) -> Matrix {
        let sum = self.quad_rep(&(x + z));
        sum.axpy(-1.0, &self.quad_rep(x)).axpy(-1.0, &self.quad_rep(z)).scale(0.5)
    }

    /// Largest deviation of `e∘b_i` from `b_i`.
    pub fn unit_law_residual(&self) -> f64 {
        let t = self.lin_rep(&self.unit);
        t.max_abs_diff(&Matrix::identity(self.n))
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProductTensorWire {
    n: usize,
    unit: Vec<f64>,
    table: Vec<Vec<Vec<f64>>>,
}

impl Serialize for ProductTensor {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ProductTensorWire { n: self.n, unit: self.unit.coords.clone(), table: self.to_nested() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for ProductTensor {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let w = ProductTensorWire::deserialize(d)?;
        if w.unit.len() != w.n {
            return Err(serde::de::Error::custom("unit length differs from n"));
        }
        ProductTensor::from_table(Vector::new(w.unit), &w.table).map_err(serde::de::Error::custom)
    }
}

/// The standard Jordan product on a cone with its canonical unit.
pub fn builtin_product(cone: &ConeSpec) -> Result<ProductTensor> {
    cone.validate()?;
    let unit = cone.canonical_unit();
    match cone {
        ConeSpec::Orthant { .. } => {
            ProductTensor::from_bilinear(unit, |x, y| Vector::new(x.iter().zip(y.iter()).map(|(a, b)| a * b).collect()))
        }
        ConeSpec::Lorentz { .. } => ProductTensor::from_bilinear(unit, spin_product),
        ConeSpec::Psd { d } => {
            let d = *d;
            ProductTensor::from_bilinear(unit, move |x, y| {
                let (a, b) = (smat(x, d), smat(y, d));
                svec(&a.matmul(&b).axpy(1.0, &b.matmul(&a)).scale(0.5))
            })
        }
        ConeSpec::DirectSum { parts } => {
            let blocks: Vec<ProductTensor> = parts.iter().map(builtin_product).collect::<Result<_>>()?;
            ProductTensor::from_bilinear(unit, |x, y| {
                let mut offset = 0;
                let mut out = Vec::with_capacity(x.len());
                for b in &blocks {
                    let m = b.dim();
                    out.extend(b.product(&x.slice(offset, m), &y.slice(offset, m)).coords);
                    offset += m;
                }
                Vector::new(out)
            })
        }
    }
}

/// `(x∘y)₀ = ⟨x, y⟩`, `(x∘y)‾ = x₀ȳ + y₀x̄`.
fn spin_product(x: &Vector, y: &Vector) -> Vector {
    let mut out = vec![x.dot(y)];
    out.extend((1..x.len()).map(|i| x[0] * y[i] + y[0] * x[i]));
    Vector::new(out)
}

/// An order unit space together with a Jordan product whose unit is the
/// space's order unit.
#[derive(Clone, Debug, PartialEq)]
pub struct AlgebraHandle {
    space: OrderUnitSpace,
    product: ProductTensor,
}

impl AlgebraHandle {
    pub fn new(space: OrderUnitSpace, product: ProductTensor) -> Result<Self> {
        if product.dim() != space.dim() {
            return Err(Error::DimensionMismatch { expected: space.dim(), actual: product.dim() });
        }
        Ok(Self { space, product })
    }

    /// Componentwise, spin-factor, symmetrized matrix product, or blockwise.
    pub fn builtin(space: &OrderUnitSpace) -> Result<Self> {
        if !space.has_canonical_unit() {
            return Err(Error::Unsupported("builtin algebras require the canonical order unit".into()));
        }
        Self::new(space.clone(), builtin_product(space.cone())?)
    }

    pub fn space(&self) -> &OrderUnitSpace {
        &self.space
    }

    pub fn product_tensor(&self) -> &ProductTensor {
        &self.product
    }

    pub fn unit(&self) -> &Vector {
        self.space.unit()
    }

    pub fn product(&self, x: &Vector, y: &Vector) -> Vector {
        self.product.product(x, y)
    }

    pub fn square(&self, x: &Vector) -> Vector {
        self.product.square(x)
    }

    pub fn lin_rep(&self, x: &Vector) -> Matrix {
        self.product.lin_rep(x)
    }

    pub fn quad_rep(&self, x: &Vector) -> Matrix {
        self.product.quad_rep(x)
    }

    /// `x⁻¹ = U(x)⁻¹ x`.
    pub fn inverse(&self, x: &Vector) -> Result<Vector> {
        let lu = Lu::factor(&self.quad_rep(x)).map_err(|_| Error::NotInvertible)?;
        Ok(lu.solve(x)?)
    }
}

fn degree_scale(parts: &[(f64, i32)]) -> f64 {
    parts.iter().map(|(n, k)| (1.0 + n).powi(*k)).product()
}

/// Samples `x, y, z` from the unit ball of `‖·‖_v` and reports residuals of
/// QJ1 `U(e) = Id`, QJ2 `U(x)U(y,z)x = U(U(x)y, x)z`,
/// QJ3 `U(U(x)y) = U(x)U(y)U(x)`, together with the unit law, `U(x)e = x²`,
/// the Jordan identity and the commutation of `T(x)` with `T(x²)`.
/// Residuals are divided by `(1+‖·‖)^degree` in each argument.
pub fn check_qj_axioms(alg: &AlgebraHandle, trials: usize, seed: u64, tol: f64) -> VerificationReport {
    let space = alg.space();
    let p = &alg.product;
    let n = space.dim();
    let norm = |x: &Vector| space.order_unit_norm(x).unwrap_or(f64::INFINITY);
    let mut report = ReportBuilder::new("qj_axioms", seed);

    let mut qj1 = Tracker::new("qj1", tol);
    qj1.record(p.quad_rep(space.unit()).max_abs_diff(&Matrix::identity(n)));
    let mut unit_law = Tracker::new("unit_law", tol);
    unit_law.record(p.lin_rep(space.unit()).max_abs_diff(&Matrix::identity(n)));

    let mut qj2 = Tracker::new("qj2", tol);
    let mut qj3 = Tracker::new("qj3", tol);
    let mut power = Tracker::new("power_associativity", tol);
    let mut jordan = Tracker::new("jordan_identity", tol);
    let mut commute = Tracker::new("multiplication_commute", tol);

    let mut smp = space.sampler(seed);
    for _ in 0..trials.max(1) {
        let (x, y, z) = (smp.ball(1.0), smp.ball(1.0), smp.ball(1.0));
        let (nx, ny, nz) = (norm(&x), norm(&y), norm(&z));
        let ux = p.quad_rep(&x);
        let uxy = ux.mul_vec(&y);

        let lhs = ux.mul_vec(&p.quad_rep_bilinear(&y, &z).mul_vec(&x));
        let rhs = p.quad_rep_bilinear(&uxy, &x).mul_vec(&z);
        qj2.record(norm(&(&lhs - &rhs)) / degree_scale(&[(nx, 3), (ny, 1), (nz, 1)]));

        let left = p.quad_rep(&uxy);
        let right = ux.matmul(&p.quad_rep(&y)).matmul(&ux);
        qj3.record(left.max_abs_diff(&right) / degree_scale(&[(nx, 4), (ny, 2)]));

        let x2 = p.square(&x);
        power.record(norm(&(&ux.mul_vec(space.unit()) - &x2)) / degree_scale(&[(nx, 2)]));

        let a = p.product(&x, &p.product(&y, &x2));
        let b = p.product(&p.product(&x, &y), &x2);
        jordan.record(norm(&(&a - &b)) / degree_scale(&[(nx, 3), (ny, 1)]));

        let tx = p.lin_rep(&x);
        let tx2 = p.lin_rep(&x2);
        commute.record(tx.matmul(&tx2).max_abs_diff(&tx2.matmul(&tx)) / degree_scale(&[(nx, 3)]));
    }
    report.add_all([qj1, qj2, qj3, unit_law, power, jordan, commute]);
    report.finish()
}

/// NC1 `‖x∘y‖ ≤ ‖x‖‖y‖`, NC2 `‖x²‖ = ‖x‖²`, NC3 `‖x²‖ ≤ ‖x²+y²‖` in the
/// order-unit norm, plus `‖U(x)v‖ = ‖x‖²`, positivity of `U(x)` on sampled
/// positive `y`, and positivity of squares.
pub fn check_jb_norm_conditions(alg: &AlgebraHandle, trials: usize, seed: u64, tol: f64) -> VerificationReport {
    let space = alg.space();
    let p = &alg.product;
    let norm = |x: &Vector| space.order_unit_norm(x).unwrap_or(f64::INFINITY);
    let below = |x: &Vector| space.spectral_bounds(x).map(|(lo, _)| (-lo).max(0.0)).unwrap_or(f64::INFINITY);
    let mut report = ReportBuilder::new("jb_norm", seed);
    let mut nc1 = Tracker::new("nc1", tol);
    let mut nc2 = Tracker::new("nc2", tol);
    let mut nc3 = Tracker::new("nc3", tol);
    let mut unorm = Tracker::new("quad_norm", tol);
    let mut upos = Tracker::new("quad_positive", tol);
    let mut sqpos = Tracker::new("squares_positive", tol);

    let mut smp = space.sampler(seed);
    for _ in 0..trials.max(1) {
        let (x, y) = (smp.ball(1.0), smp.ball(1.0));
        let (nx, ny) = (norm(&x), norm(&y));
        let x2 = p.square(&x);
        let y2 = p.square(&y);
        nc1.record((norm(&p.product(&x, &y)) - nx * ny).max(0.0));
        nc2.record(norm(&x2) - nx * nx);
        nc3.record((norm(&x2) - norm(&(&x2 + &y2))).max(0.0));
        let ux = p.quad_rep(&x);
        unorm.record(norm(&ux.mul_vec(space.unit())) - nx * nx);
        let q = smp.positive(1.0);
        upos.record(below(&ux.mul_vec(&q)) / norm(&q).max(1e-300));
        sqpos.record(below(&x2));
    }
    report.add_all([nc1, nc2, nc3, unorm, upos, sqpos]);
    report.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn alg(cone: ConeSpec) -> AlgebraHandle {
        AlgebraHandle::builtin(&OrderUnitSpace::standard(cone).unwrap()).unwrap()
    }

    fn v(c: &[f64]) -> Vector {
        Vector::new(c.to_vec())
    }

    #[test]
    fn orthant_product_is_componentwise() {
        let a = alg(ConeSpec::orthant(2));
        assert_eq!(a.product(&v(&[2.0, 1.0]), &v(&[1.0, 3.0])), v(&[2.0, 3.0]));
    }

    #[test]
    fn lorentz_unit_law() {
        let a = alg(ConeSpec::lorentz(3));
        let x = v(&[2.0, 1.0, 0.0]);
        assert_eq!(a.product(a.unit(), &x), x);
    }

    #[test]
    fn psd_orthogonal_idempotents_multiply_to_zero() {
        let a = alg(ConeSpec::psd(2));
        let e11 = svec(&Matrix::from_diag(&[1.0, 0.0]));
        let e22 = svec(&Matrix::from_diag(&[0.0, 1.0]));
        assert!(a.product(&e11, &e22).max_abs() < 1e-15);
    }

    #[test]
    fn lin_rep_examples() {
        let a = alg(ConeSpec::orthant(2));
        assert_eq!(a.lin_rep(&v(&[2.0, 3.0])), Matrix::from_diag(&[2.0, 3.0]));
        assert_eq!(a.lin_rep(a.unit()), Matrix::identity(2));
        let l = alg(ConeSpec::lorentz(3));
        let t = l.lin_rep(&v(&[0.0, 1.0, 0.0]));
        assert_eq!(t.mul_vec(&v(&[1.0, 0.0, 0.0])), v(&[0.0, 1.0, 0.0]));
    }

    #[test]
    fn quad_rep_examples() {
        let a = alg(ConeSpec::orthant(2));
        assert_eq!(a.quad_rep(a.unit()), Matrix::identity(2));
        assert_eq!(a.quad_rep(&v(&[2.0, 3.0])), Matrix::from_diag(&[4.0, 9.0]));
        // U(x)y = xyx for matrices
        let p = alg(ConeSpec::psd(2));
        let x = svec(&Matrix::from_diag(&[2.0, 1.0]));
        let off = svec(&Matrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]));
        let got = p.quad_rep(&x).mul_vec(&off);
        assert!((&got - &off.scale(2.0)).max_abs() < 1e-14);
    }

    #[test]
    fn inverse_examples() {
        let a = alg(ConeSpec::orthant(2));
        assert_eq!(a.inverse(a.unit()).unwrap(), *a.unit());
        let inv = a.inverse(&v(&[2.0, 4.0])).unwrap();
        assert!((&inv - &v(&[0.5, 0.25])).max_abs() < 1e-15);
        let l = alg(ConeSpec::lorentz(3));
        let x = v(&[2.0, 1.0, 0.0]);
        let inv = l.inverse(&x).unwrap();
        assert!((&inv - &v(&[2.0 / 3.0, -1.0 / 3.0, 0.0])).max_abs() < 1e-15);
        assert!((&l.product(&x, &inv) - l.unit()).max_abs() < 1e-9);
    }

    #[test]
    fn singular_element_not_invertible() {
        let a = alg(ConeSpec::lorentz(3));
        assert_eq!(a.inverse(&v(&[1.0, 1.0, 0.0])), Err(Error::NotInvertible));
    }

    #[test]
    fn builtin_requires_canonical_unit() {
        let s = OrderUnitSpace::new(ConeSpec::orthant(2), v(&[1.0, 2.0])).unwrap();
        assert!(matches!(AlgebraHandle::builtin(&s), Err(Error::Unsupported(_))));
    }

    #[test]
    fn qj_axioms_hold_for_builtins() {
        let r = check_qj_axioms(&alg(ConeSpec::orthant(4)), 100, 1, 1e-10);
        assert!(r.pass(), "{}", r.to_text());
        let r = check_qj_axioms(&alg(ConeSpec::psd(3)), 100, 2, 1e-8);
        assert!(r.pass(), "{}", r.to_text());
        let r = check_qj_axioms(&alg(ConeSpec::lorentz(5)), 100, 3, 1e-10);
        assert!(r.pass(), "{}", r.to_text());
        let sum = ConeSpec::direct_sum(vec![ConeSpec::orthant(2), ConeSpec::lorentz(3), ConeSpec::psd(2)]);
        let r = check_qj_axioms(&alg(sum), 50, 4, 1e-10);
        assert!(r.pass(), "{}", r.to_text());
    }

    #[test]
    fn perturbed_product_breaks_qj3() {
        let base = alg(ConeSpec::orthant(4));
        let mut t = base.product_tensor().clone();
        t.set_entry(1, 2, 3, t.entry(1, 2, 3) + 0.1);
        let bad = AlgebraHandle::new(base.space().clone(), t).unwrap();
        let r = check_qj_axioms(&bad, 100, 5, 1e-3);
        let qj3 = r.property("qj3").unwrap();
        assert!(!qj3.pass && qj3.max_residual > 1e-3, "{}", r.to_text());
    }

    #[test]
    fn jb_norm_conditions_hold_for_builtins() {
        let r = check_jb_norm_conditions(&alg(ConeSpec::lorentz(5)), 100, 1, 1e-9);
        assert!(r.pass(), "{}", r.to_text());
        let r = check_jb_norm_conditions(&alg(ConeSpec::psd(3)), 100, 1, 1e-9);
        assert!(r.pass(), "{}", r.to_text());
    }

    #[test]
    fn unit_square_has_unit_norm() {
        let a = alg(ConeSpec::psd(2));
        let s = a.space();
        assert_relative_eq!(s.order_unit_norm(&a.square(a.unit())).unwrap(), 1.0, max_relative = 1e-15);
    }

    #[test]
    fn doubled_product_breaks_nc2() {
        let base = alg(ConeSpec::orthant(3));
        let bad = AlgebraHandle::new(base.space().clone(), base.product_tensor().scaled(2.0)).unwrap();
        let r = check_jb_norm_conditions(&bad, 50, 1, 1e-6);
        assert!(!r.property("nc2").unwrap().pass);
    }

    #[test]
    fn tensor_json_roundtrip() {
        let t = builtin_product(&ConeSpec::lorentz(3)).unwrap();
        let s = serde_json::to_string(&t).unwrap();
        assert!(s.starts_with("{\"n\":3,\"unit\":[1.0,0.0,0.0],\"table\":[[["));
        let back: ProductTensor = serde_json::from_str(&s).unwrap();
        assert_eq!(back, t);
        assert!(serde_json::from_str::<ProductTensor>(r#"{"n":1,"unit":[1.0],"table":[[[1.0]]],"x":1}"#).is_err());
    }
}
