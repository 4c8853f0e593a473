//! Closed proper cones with closed-form spectral bounds.
//!
//! Every supported cone is the cone of squares of a Euclidean Jordan algebra,
//! so membership and the gauge functions reduce to extreme "relative
//! eigenvalues": for `y` interior,
//!
//! ```text
//! upper_ratio(x, y) = inf { μ : μy − x ∈ K }
//! lower_ratio(x, y) = sup { λ : x − λy ∈ K }
//! ```
//!
//! Orthant: coordinate ratios. Lorentz: roots of the quadratic
//! `(μy₀ − x₀)² − ‖μȳ − x̄‖²`. PSD: generalized eigenvalues of the pencil.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{generalized_sym_eigenvalues, sym_eig, Matrix, Vector};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ConeSpec {
    /// Nonnegative orthant of `R^n`.
    Orthant { n: usize },
    /// `x₀ ≥ ‖(x₁, …, x_{n−1})‖`.
    Lorentz { n: usize },
    /// Positive semidefinite `d×d` matrices, ambient dimension `d(d+1)/2`.
    Psd { d: usize },
    #[serde(rename = "sum")]
    DirectSum { parts: Vec<ConeSpec> },
}

impl ConeSpec {
    pub fn orthant(n: usize) -> Self {
        ConeSpec::Orthant { n }
    }

    pub fn lorentz(n: usize) -> Self {
        ConeSpec::Lorentz { n }
    }

    pub fn psd(d: usize) -> Self {
        ConeSpec::Psd { d }
    }

    pub fn direct_sum(parts: Vec<ConeSpec>) -> Self {
        ConeSpec::DirectSum { parts }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ConeSpec::Orthant { n } if *n >= 1 => Ok(()),
            ConeSpec::Lorentz { n } if *n >= 2 => Ok(()),
            ConeSpec::Psd { d } if *d >= 1 => Ok(()),
            ConeSpec::DirectSum { parts } if !parts.is_empty() => parts.iter().try_for_each(ConeSpec::validate),
            other => Err(Error::InvalidCone(format!("{other:?}"))),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            ConeSpec::Orthant { n } | ConeSpec::Lorentz { n } => *n,
            ConeSpec::Psd { d } => d * (d + 1) / 2,
            ConeSpec::DirectSum { parts } => parts.iter().map(ConeSpec::dim).sum(),
        }
    }

    /// All-ones, `(1,0,…,0)`, vectorized identity, or the concatenation thereof.
    pub fn canonical_unit(&self) -> Vector {
        match self {
            ConeSpec::Orthant { n } => Vector::new(vec![1.0; *n]),
            ConeSpec::Lorentz { n } => Vector::basis(*n, 0),
            ConeSpec::Psd { d } => svec(&Matrix::identity(*d)),
            ConeSpec::DirectSum { parts } => {
                let units: Vec<Vector> = parts.iter().map(ConeSpec::canonical_unit).collect();
                Vector::concat(&units)
            }
        }
    }

    fn check_dim(&self, x: &Vector) -> Result<()> {
        let n = self.dim();
        if x.len() != n {
            return Err(Error::DimensionMismatch { expected: n, actual: x.len() });
        }
        Ok(())
    }

    /// Splits an ambient vector into the blocks of a direct sum.
    pub fn split<'a>(&'a self, x: &'a Vector) -> impl Iterator<Item = (&'a ConeSpec, Vector)> + 'a {
        let parts: &[ConeSpec] = match self {
            ConeSpec::DirectSum { parts } => parts,
            _ => std::slice::from_ref(self),
        };
        let mut offset = 0;
        parts.iter().map(move |p| {
            let block = x.slice(offset, p.dim());
            offset += p.dim();
            (p, block)
        })
    }

    /// Smallest spectral value of `x` relative to the canonical unit.
    pub fn min_spectral_value(&self, x: &Vector) -> Result<f64> {
        self.check_dim(x)?;
        if !x.is_finite() {
            return Err(Error::NonFinite);
        }
        Ok(match self {
            ConeSpec::Orthant { .. } => x.iter().copied().fold(f64::INFINITY, f64::min),
            ConeSpec::Lorentz { .. } => x[0] - spatial_norm(x),
            ConeSpec::Psd { d } => sym_eig(&smat(x, *d))?.values[0],
            ConeSpec::DirectSum { .. } => {
                let mut m = f64::INFINITY;
                for (part, block) in self.split(x) {
                    m = m.min(part.min_spectral_value(&block)?);
                }
                m
            }
        })
    }

    /// Membership with slack: every defining inequality must hold with at least
    /// `margin` to spare. `margin > 0` tests the interior, `0` the closed cone,
    /// and `margin < 0` tolerates small violations.
    pub fn contains(&self, x: &Vector, margin: f64) -> Result<bool> {
        Ok(self.min_spectral_value(x)? >= margin)
    }

    /// `inf { μ : μy − x ∈ K }` for `y` interior.
    pub fn upper_ratio(&self, x: &Vector, y: &Vector) -> Result<f64> {
        Ok(self.ratio_bounds(x, y)?.1)
    }

    /// `sup { λ : x − λy ∈ K }` for `y` interior.
    pub fn lower_ratio(&self, x: &Vector, y: &Vector) -> Result<f64> {
        Ok(self.ratio_bounds(x, y)?.0)
    }

    /// `(lower_ratio, upper_ratio)` in one pass.
    pub fn ratio_bounds(&self, x: &Vector, y: &Vector) -> Result<(f64, f64)> {
        self.check_dim(x)?;
        self.check_dim(y)?;
        if !x.is_finite() || !y.is_finite() {
            return Err(Error::NonFinite);
        }
        match self {
            ConeSpec::Orthant { .. } => {
                let mut lo = f64::INFINITY;
                let mut hi = f64::NEG_INFINITY;
                for (a, b) in x.iter().zip(y.iter()) {
                    if !(*b > 0.0) {
                        return Err(Error::NotInterior);
                    }
                    let r = a / b;
                    lo = lo.min(r);
                    hi = hi.max(r);
                }
                Ok((lo, hi))
            }
            ConeSpec::Lorentz { .. } => lorentz_ratio_bounds(x, y),
            ConeSpec::Psd { d } => {
                let vals = generalized_sym_eigenvalues(&smat(x, *d), &smat(y, *d))
                    .map_err(|_| Error::NotInterior)?;
                Ok((vals[0], vals[vals.len() - 1]))
            }
            ConeSpec::DirectSum { .. } => {
                let mut lo = f64::INFINITY;
                let mut hi = f64::NEG_INFINITY;
                let ys: Vec<Vector> = self.split(y).map(|(_, b)| b).collect();
                for ((part, xb), yb) in self.split(x).zip(&ys) {
                    let (l, h) = part.ratio_bounds(&xb, yb)?;
                    lo = lo.min(l);
                    hi = hi.max(h);
                }
                Ok((lo, hi))
            }
        }
    }
}

fn spatial_norm(x: &Vector) -> f64 {
    x.as_slice()[1..].iter().map(|c| c * c).sum::<f64>().sqrt()
}

/// Roots of `a μ² − 2bμ + c` where `a = y₀² − ‖ȳ‖²`, `b = x₀y₀ − ⟨x̄,ȳ⟩`,
/// `c = x₀² − ‖x̄‖²`. The discriminant is nonnegative for interior `y`.
fn lorentz_ratio_bounds(x: &Vector, y: &Vector) -> Result<(f64, f64)> {
    let yn = spatial_norm(y);
    if !(y[0] - yn > 0.0) {
        return Err(Error::NotInterior);
    }
    let xn = spatial_norm(x);
    let a = (y[0] - yn) * (y[0] + yn);
    let c = (x[0] - xn) * (x[0] + xn);
    let cross: f64 = x.as_slice()[1..].iter().zip(&y.as_slice()[1..]).map(|(p, q)| p * q).sum();
    let b = x[0] * y[0] - cross;
    // b² − ac expanded as a sum of 2x2 minors, exact zero when x ∥ y
    let (xs, ys) = (x.as_slice(), y.as_slice());
    let mut boost_part = 0.0;
    let mut rotation_part = 0.0;
    for i in 1..xs.len() {
        let t = xs[0] * ys[i] - xs[i] * ys[0];
        boost_part += t * t;
        for j in (i + 1)..xs.len() {
            let r = xs[i] * ys[j] - xs[j] * ys[i];
            rotation_part += r * r;
        }
    }
    let disc = (boost_part - rotation_part).max(0.0).sqrt();
    let (lo, hi) = if b >= 0.0 {
        let hi = (b + disc) / a;
        let lo = if b + disc == 0.0 { 0.0 } else { c / (b + disc) };
        (lo, hi)
    } else {
        let lo = (b - disc) / a;
        (lo, c / (b - disc))
    };
    Ok((lo, hi))
}

/// Isometric vectorization of a symmetric matrix: upper triangle, row by row,
/// off-diagonal entries scaled by √2.
pub fn svec(a: &Matrix) -> Vector {
    let d = a.rows();
    let mut out = Vec::with_capacity(d * (d + 1) / 2);
    for i in 0..d {
        for j in i..d {
            if i == j {
                out.push(a[(i, i)]);
            } else {
                out.push(std::f64::consts::SQRT_2 * 0.5 * (a[(i, j)] + a[(j, i)]));
            }
        }
    }
    Vector::new(out)
}

/// Inverse of [`svec`].
pub fn smat(x: &Vector, d: usize) -> Matrix {
    let mut a = Matrix::zeros(d, d);
    let mut k = 0;
    for i in 0..d {
        for j in i..d {
            if i == j {
                a[(i, i)] = x[k];
            } else {
                let v = x[k] / std::f64::consts::SQRT_2;
                a[(i, j)] = v;
                a[(j, i)] = v;
            }
            k += 1;
        }
    }
    a
}

/// Index of entry `(i, j)`, `i ≤ j`, in the [`svec`] layout.
pub fn svec_index(d: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    // rows 0..i hold d, d-1, ..., d-i+1 entries
    i * d - i * i.saturating_sub(1) / 2 + (j - i)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn svec_roundtrip_and_isometry() {
        let a = Matrix::from_rows(&[vec![2.0, 0.5, -1.0], vec![0.5, 1.0, 3.0], vec![-1.0, 3.0, 4.0]]);
        let v = svec(&a);
        assert_eq!(v.len(), 6);
        assert!(smat(&v, 3).max_abs_diff(&a) < 1e-15);
        let trace_inner: f64 = (0..3).flat_map(|i| (0..3).map(move |j| (i, j))).map(|(i, j)| a[(i, j)] * a[(i, j)]).sum();
        assert!((v.dot(&v) - trace_inner).abs() < 1e-12);
    }

    #[test]
    fn svec_index_matches_layout() {
        for d in 1..6 {
            let mut k = 0;
            for i in 0..d {
                for j in i..d {
                    assert_eq!(svec_index(d, i, j), k, "d={d} i={i} j={j}");
                    assert_eq!(svec_index(d, j, i), k);
                    k += 1;
                }
            }
        }
    }

    #[test]
    fn orthant_membership() {
        let c = ConeSpec::orthant(2);
        assert!(c.contains(&Vector::new(vec![1.0, 2.0]), 0.0).unwrap());
        assert!(!c.contains(&Vector::new(vec![1.0, -2.0]), 0.0).unwrap());
    }

    #[test]
    fn lorentz_boundary_is_not_interior() {
        let c = ConeSpec::lorentz(3);
        let x = Vector::new(vec![1.0, 1.0, 0.0]);
        assert!(!c.contains(&x, 1e-9).unwrap());
        assert!(c.contains(&x, 0.0).unwrap());
    }

    #[test]
    fn psd_indefinite_rejected() {
        let c = ConeSpec::psd(2);
        let x = svec(&Matrix::from_diag(&[2.0, -1.0]));
        assert!(!c.contains(&x, 0.0).unwrap());
    }

    #[test]
    fn dimension_mismatch_is_error() {
        let c = ConeSpec::orthant(3);
        assert!(matches!(
            c.contains(&Vector::zeros(2), 0.0),
            Err(Error::DimensionMismatch { expected: 3, actual: 2 })
        ));
    }

    #[test]
    fn direct_sum_dimension_and_unit() {
        let c = ConeSpec::direct_sum(vec![ConeSpec::orthant(2), ConeSpec::lorentz(3), ConeSpec::psd(2)]);
        assert_eq!(c.dim(), 2 + 3 + 3);
        let e = c.canonical_unit();
        assert_eq!(e.as_slice(), &[1.0, 1.0, 1.0, 0.0, 0.0, 1.0, 0.0, 1.0]);
        assert!(c.contains(&e, 0.5).unwrap());
    }

    #[test]
    fn lorentz_ratios_match_spin_eigenvalues() {
        let c = ConeSpec::lorentz(3);
        let (lo, hi) = c.ratio_bounds(&Vector::new(vec![2.0, 1.0, 0.0]), &c.canonical_unit()).unwrap();
        assert!((lo - 1.0).abs() < 1e-15 && (hi - 3.0).abs() < 1e-15);
        let (lo, hi) = c.ratio_bounds(&Vector::new(vec![-1.0, 0.0, 2.0]), &c.canonical_unit()).unwrap();
        assert!((lo + 3.0).abs() < 1e-15 && (hi - 1.0).abs() < 1e-15);
    }

    #[test]
    fn cone_json_shape() {
        let c = ConeSpec::direct_sum(vec![ConeSpec::orthant(2), ConeSpec::psd(3)]);
        let s = serde_json::to_string(&c).unwrap();
        assert_eq!(s, r#"{"kind":"sum","parts":[{"kind":"orthant","n":2},{"kind":"psd","d":3}]}"#);
        let back: ConeSpec = serde_json::from_str(&s).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn invalid_cones_rejected() {
        assert!(ConeSpec::lorentz(1).validate().is_err());
        assert!(ConeSpec::orthant(0).validate().is_err());
        assert!(ConeSpec::direct_sum(vec![]).validate().is_err());
    }
}
