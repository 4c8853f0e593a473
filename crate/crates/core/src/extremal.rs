//! Pure states, extremal vectors, and the state/gauge correspondence.
//!
//! A pure state `ψ` is paired with the extremal vector `p ∝ U(v)ψ`, scaled so
//! that `M(p, v) = 1`; with `j` the inversion at `v` this pairing satisfies
//! `M(p, g) = ψ(j(g))` for every interior `g`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::cone::{svec, ConeSpec};
use crate::error::{Error, Result};
use crate::jordan::builtin_product;
use crate::linalg::{Lu, Matrix, Vector};
use crate::maps::{GaugeMapSpec, SAMPLE_RADIUS};
use crate::reconstruction::inversion_j;
use crate::report::{ReportBuilder, Tracker, VerificationReport};
use crate::space::OrderUnitSpace;

/// Sampled directions standing in for a continuum of extreme rays.
pub const EXTREMAL_DIRECTIONS: usize = 64;
/// Membership slack used when projecting onto an order interval.
pub const INTERVAL_SLACK: f64 = 1e-13;

/// Parameter that generated a pure state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StateLabel {
    Coordinate { index: usize },
    Spin { omega: Vec<f64> },
    RankOne { u: Vec<f64> },
    /// State of one summand of a direct sum, placed at `offset`.
    Block { part: usize, offset: usize, inner: Box<StateLabel> },
    /// Recovered from an extremal vector rather than generated.
    Derived,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PureState {
    pub covector: Vector,
    pub label: StateLabel,
}

impl PureState {
    pub fn eval(&self, x: &Vector) -> f64 {
        self.covector.dot(x)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtremalVector {
    pub p: Vector,
    pub label: StateLabel,
}

/// Pure states normalized to `ψ(v) = 1`. Orthants give their coordinate
/// functionals (at most `count`); Lorentz and PSD cones give `count` sampled
/// directions; direct sums give the states of each summand.
pub fn pure_states(space: &OrderUnitSpace, count: usize, seed: u64) -> Result<Vec<PureState>> {
    if count == 0 {
        return Err(Error::InvalidArgument("count must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    states_for(space.cone(), space.unit(), count, &mut rng)
}

fn states_for(cone: &ConeSpec, unit: &Vector, count: usize, rng: &mut ChaCha8Rng) -> Result<Vec<PureState>> {
    let n = cone.dim();
    let raw: Vec<(Vector, StateLabel)> = match cone {
        ConeSpec::Orthant { .. } => {
            (0..n.min(count)).map(|i| (Vector::basis(n, i), StateLabel::Coordinate { index: i })).collect()
        }
        ConeSpec::Lorentz { .. } => (0..count)
            .map(|_| {
                let omega = unit_gaussian(rng, n - 1);
                let mut c = vec![1.0];
                c.extend_from_slice(&omega);
                (Vector::new(c), StateLabel::Spin { omega })
            })
            .collect(),
        ConeSpec::Psd { d } => (0..count)
            .map(|_| {
                let u = unit_gaussian(rng, *d);
                let outer = Matrix::from_rows(
                    &u.iter().map(|a| u.iter().map(|b| a * b).collect()).collect::<Vec<_>>(),
                );
                (svec(&outer), StateLabel::RankOne { u })
            })
            .collect(),
        ConeSpec::DirectSum { parts } => {
            let mut out = Vec::new();
            let mut offset = 0;
            for (k, part) in parts.iter().enumerate() {
                let m = part.dim();
                for s in states_for(part, &unit.slice(offset, m), count, rng)? {
                    let mut c = vec![0.0; n];
                    c[offset..offset + m].copy_from_slice(s.covector.as_slice());
                    out.push(PureState {
                        covector: Vector::new(c),
                        label: StateLabel::Block { part: k, offset, inner: Box::new(s.label) },
                    });
                }
                offset += m;
            }
            return Ok(out);
        }
    };
    raw.into_iter()
        .map(|(c, label)| {
            let at_unit = c.dot(unit);
            if !(at_unit > 0.0) {
                return Err(Error::UnitNotInterior);
            }
            Ok(PureState { covector: c.scale(1.0 / at_unit), label })
        })
        .collect()
}

fn unit_gaussian(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    loop {
        let g: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let r = g.iter().map(|c| c * c).sum::<f64>().sqrt();
        if r > 1e-8 {
            return g.into_iter().map(|c| c / r).collect();
        }
    }
}

/// The extremal vector `p ∝ U(v)ψ` with `M(p, v) = 1`.
pub fn extremal_for_state(space: &OrderUnitSpace, psi: &PureState) -> Result<ExtremalVector> {
    if psi.covector.len() != space.dim() {
        return Err(Error::DimensionMismatch { expected: space.dim(), actual: psi.covector.len() });
    }
    let u = builtin_product(space.cone())?.quad_rep(space.unit());
    let p = normalize_extremal(space, &u.mul_vec(&psi.covector))?;
    Ok(ExtremalVector { p, label: psi.label.clone() })
}

/// Inverse of [`extremal_for_state`]: `ψ ∝ U(v)⁻¹p` with `ψ(v) = 1`.
pub fn state_for_extremal(space: &OrderUnitSpace, p: &ExtremalVector) -> Result<PureState> {
    let u = builtin_product(space.cone())?.quad_rep(space.unit());
    let c = Lu::factor(&u)?.solve(&p.p)?;
    let at_unit = c.dot(space.unit());
    if !(at_unit > 0.0) {
        return Err(Error::Domain("extremal vector pairs with no state".into()));
    }
    Ok(PureState { covector: c.scale(1.0 / at_unit), label: p.label.clone() })
}

/// Scales a boundary direction to `M(p, v) = 1`, rejecting anything that is
/// not on an extreme ray up to rounding. A one-dimensional cone is itself a
/// single ray.
fn normalize_extremal(space: &OrderUnitSpace, d: &Vector) -> Result<Vector> {
    let (lo, hi) = space.spectral_bounds(d)?;
    if !(hi > 0.0) || (space.dim() > 1 && lo.abs() > 1e-9 * hi) {
        return Err(Error::Domain("direction is not on the boundary of the cone".into()));
    }
    Ok(d.scale(1.0 / hi))
}

/// `|M(p, g) − ψ(j(g))| ≤ tol·(1 + |ψ(j(g))|)` for every generated pair and
/// sampled interior `g`, where `j` is the inversion recovered from `map`.
pub fn check_state_gauge_identity(
    map: &GaugeMapSpec,
    space: &OrderUnitSpace,
    trials: usize,
    seed: u64,
    tol: f64,
) -> VerificationReport {
    let mut report = ReportBuilder::new("state_gauge_identity", seed);
    let mut state_norm = Tracker::new("state_normalization", tol);
    let mut extremal_norm = Tracker::new("extremal_normalization", tol);
    let mut identity = Tracker::new("mp_psi", tol);

    let pairs = match generated_pairs(space, EXTREMAL_DIRECTIONS, seed) {
        Ok(p) => p,
        Err(_) => {
            for name in ["state_normalization", "extremal_normalization", "mp_psi"] {
                report.add_failure(name, tol);
            }
            return report.finish();
        }
    };
    for (psi, p) in &pairs {
        state_norm.record(psi.eval(space.unit()) - 1.0);
        extremal_norm.record_result(space.cone().upper_ratio(&p.p, space.unit()).map(|m| m - 1.0));
    }

    match inversion_j(map, space) {
        Ok(j) => {
            let mut smp = space.sampler(seed.wrapping_add(1));
            for _ in 0..trials.max(1) {
                let g = smp.scaled_interior(SAMPLE_RADIUS, 0.5, 2.0);
                let jg = match j.apply(&g) {
                    Ok(v) => v,
                    Err(_) => {
                        identity.record(f64::INFINITY);
                        continue;
                    }
                };
                for (psi, p) in &pairs {
                    let rhs = psi.eval(&jg);
                    identity.record_result(
                        space.cone().upper_ratio(&p.p, &g).map(|lhs| (lhs - rhs).abs() / (1.0 + rhs.abs())),
                    );
                }
            }
            report.add_all([state_norm, extremal_norm, identity]);
        }
        Err(_) => {
            report.add_all([state_norm, extremal_norm]);
            report.add_failure("mp_psi", tol);
        }
    }
    report.finish()
}

fn generated_pairs(space: &OrderUnitSpace, count: usize, seed: u64) -> Result<Vec<(PureState, ExtremalVector)>> {
    pure_states(space, count, seed)?
        .into_iter()
        .map(|psi| {
            let p = extremal_for_state(space, &psi)?;
            Ok((psi, p))
        })
        .collect()
}

/// Spot checks of `g = sup { m(g,p)·p }` at sampled pure states `ρ`:
/// - `sampled_inequality`: `m(g,p)·ρ(p) ≤ ρ(g) + tol` over sampled extremals;
/// - `maximizer_equality`: the maximizer `p* ∝ U(g)ρ` attains `ρ(g)`;
/// - `maximizer_via_map`: the same value with `m(g,p*) = 1/ψ*(j(g))`, where
///   `ψ*` is the state paired with `p*` and `j` comes from `map`.
pub fn check_strong_atomicity(
    space: &OrderUnitSpace,
    map: &GaugeMapSpec,
    g: &Vector,
    trials: usize,
    seed: u64,
    tol: f64,
) -> VerificationReport {
    let mut report = ReportBuilder::new("strong_atomicity", seed);
    let names = ["sampled_inequality", "maximizer_equality", "maximizer_via_map"];
    let setup = (|| {
        space.require_interior(g)?;
        let states = pure_states(space, trials.max(1), seed)?;
        let extremals = generated_pairs(space, EXTREMAL_DIRECTIONS, seed.wrapping_add(1))?;
        let ug = builtin_product(space.cone())?.quad_rep(g);
        Ok::<_, Error>((states, extremals, ug))
    })();
    let (states, extremals, ug) = match setup {
        Ok(s) => s,
        Err(_) => {
            for name in names {
                report.add_failure(name, tol);
            }
            return report.finish();
        }
    };
    let jg = inversion_j(map, space).and_then(|j| j.apply(g));

    let mut inequality = Tracker::new(names[0], tol);
    let mut equality = Tracker::new(names[1], tol);
    let mut via_map = Tracker::new(names[2], tol);
    for rho in &states {
        let target = rho.eval(g);
        let scale = target.abs().max(1.0);
        for (_, p) in &extremals {
            inequality.record_result(
                space.cone().upper_ratio(&p.p, g).map(|mg| (rho.eval(&p.p) / mg - target).max(0.0)),
            );
        }
        let star = normalize_extremal(space, &ug.mul_vec(&rho.covector))
            .map(|p| ExtremalVector { p, label: StateLabel::Derived });
        equality.record_result(star.clone().and_then(|p| {
            let mg = space.cone().upper_ratio(&p.p, g)?;
            Ok((rho.eval(&p.p) / mg - target).abs() / scale)
        }));
        via_map.record_result(star.and_then(|p| {
            let psi = state_for_extremal(space, &p)?;
            let jg = jg.as_ref().map_err(Clone::clone)?;
            Ok((rho.eval(&p.p) / psi.eval(jg) - target).abs() / scale)
        }));
    }
    report.add_all([inequality, equality, via_map]);
    report.finish()
}

/// Samples the order interval `[x, x + p]` and measures the distance of each
/// sample from the segment `{x + t·p}`. The interval has empty interior, so
/// each sample starts at `x + t·p + η` for random `t` and noise `η` and is
/// pulled back along `η` by bisection on membership.
pub fn check_order_interval_segment(
    space: &OrderUnitSpace,
    x: &Vector,
    p: &ExtremalVector,
    trials: usize,
    seed: u64,
    tol: f64,
) -> Result<VerificationReport> {
    space.require_interior(x)?;
    space.spectral_bounds(&p.p)?;
    let top = x + &p.p;
    let slack = INTERVAL_SLACK * space.order_unit_norm(&top)?.max(1.0);
    let member = |z: &Vector| -> Result<bool> {
        Ok(space.spectral_bounds(&(z - x))?.0 >= -slack && space.spectral_bounds(&(&top - z))?.0 >= -slack)
    };
    let pp = p.p.dot(&p.p);
    if !(pp > 0.0) {
        return Err(Error::InvalidArgument("extremal vector is zero".into()));
    }

    let mut report = ReportBuilder::new("order_interval_segment", seed);
    let mut deviation = Tracker::new("segment_deviation", tol);
    let mut fit = Tracker::new("fit_range", tol);
    let mut smp = space.sampler(seed);
    for _ in 0..trials.max(1) {
        let t = smp.uniform(0.0, 1.0);
        let noise = smp.direction().scale(0.1);
        let base = x.axpy(t, &p.p);
        if !member(&base)? {
            return Err(Error::Starvation(format!("segment point at t = {t} rejected")));
        }
        let z = if member(&base.axpy(1.0, &noise))? {
            base.axpy(1.0, &noise)
        } else {
            let (mut lo, mut hi) = (0.0, 1.0);
            for _ in 0..64 {
                let mid = 0.5 * (lo + hi);
                if member(&base.axpy(mid, &noise))? {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            base.axpy(lo, &noise)
        };
        let d = &z - x;
        let t_fit = d.dot(&p.p) / pp;
        deviation.record(space.order_unit_norm(&d.axpy(-t_fit, &p.p))?);
        fit.record((-t_fit).max(t_fit - 1.0).max(0.0));
    }
    report.add_all([deviation, fit]);
    Ok(report.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn v(c: &[f64]) -> Vector {
        Vector::new(c.to_vec())
    }

    fn labelled(space: &OrderUnitSpace, covector: Vector) -> PureState {
        let c = covector.scale(1.0 / covector.dot(space.unit()));
        PureState { covector: c, label: StateLabel::Derived }
    }

    #[test]
    fn orthant_states_are_coordinates() {
        let s = OrderUnitSpace::standard(ConeSpec::orthant(3)).unwrap();
        let states = pure_states(&s, 10, 1).unwrap();
        assert_eq!(states.len(), 3);
        for (i, psi) in states.iter().enumerate() {
            assert_eq!(psi.covector, Vector::basis(3, i));
            assert_eq!(psi.label, StateLabel::Coordinate { index: i });
        }
        let p = extremal_for_state(&s, &states[1]).unwrap();
        assert_eq!(p.p, v(&[0.0, 1.0, 0.0]));
    }

    #[test]
    fn orthant_extremal_with_noncanonical_unit() {
        let s = OrderUnitSpace::new(ConeSpec::orthant(2), v(&[2.0, 4.0])).unwrap();
        let states = pure_states(&s, 2, 1).unwrap();
        assert_relative_eq!(states[1].covector[1], 0.25);
        let p = extremal_for_state(&s, &states[1]).unwrap();
        assert_relative_eq!(p.p[1], 4.0, epsilon = 1e-14);
        assert_relative_eq!(s.cone().upper_ratio(&p.p, s.unit()).unwrap(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn psd_state_reads_diagonal() {
        let s = OrderUnitSpace::standard(ConeSpec::psd(2)).unwrap();
        let psi = labelled(&s, svec(&Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 0.0]])));
        let a = svec(&Matrix::from_diag(&[3.0, 7.0]));
        assert_relative_eq!(psi.eval(&a), 3.0);
        let p = extremal_for_state(&s, &psi).unwrap();
        assert!(p.p.axpy(-1.0, &psi.covector).max_abs() < 1e-15);
    }

    #[test]
    fn lorentz_extremal_is_half_null_vector() {
        let s = OrderUnitSpace::standard(ConeSpec::lorentz(3)).unwrap();
        let psi = labelled(&s, v(&[1.0, 1.0, 0.0]));
        let p = extremal_for_state(&s, &psi).unwrap();
        assert!(p.p.axpy(-1.0, &v(&[0.5, 0.5, 0.0])).max_abs() < 1e-15);
        assert_relative_eq!(s.cone().upper_ratio(&p.p, s.unit()).unwrap(), 1.0);
    }

    #[test]
    fn generated_states_are_normalized_and_positive() {
        for cone in [
            ConeSpec::orthant(4),
            ConeSpec::lorentz(4),
            ConeSpec::psd(3),
            ConeSpec::direct_sum(vec![ConeSpec::lorentz(3), ConeSpec::psd(2)]),
        ] {
            let base = OrderUnitSpace::standard(cone).unwrap();
            let s = base.with_unit(&base.sample_interior(3, 0.8)).unwrap();
            let mut smp = s.sampler(9);
            for psi in pure_states(&s, 16, 2).unwrap() {
                assert!((psi.eval(s.unit()) - 1.0).abs() < 1e-12);
                for _ in 0..5 {
                    assert!(psi.eval(&smp.positive(1.0)) >= -1e-12);
                }
                let p = extremal_for_state(&s, &psi).unwrap();
                let m = s.cone().upper_ratio(&p.p, s.unit()).unwrap();
                assert!((m - 1.0).abs() < 1e-10);
                let back = state_for_extremal(&s, &p).unwrap();
                assert!(back.covector.axpy(-1.0, &psi.covector).max_abs() < 1e-10);
            }
        }
    }

    #[test]
    fn state_gauge_examples() {
        let s = OrderUnitSpace::standard(ConeSpec::psd(2)).unwrap();
        let g = svec(&Matrix::from_diag(&[2.0, 1.0]));
        let p = svec(&Matrix::from_diag(&[1.0, 0.0]));
        assert_relative_eq!(s.cone().upper_ratio(&p, &g).unwrap(), 0.5, epsilon = 1e-14);

        let s = OrderUnitSpace::standard(ConeSpec::orthant(2)).unwrap();
        let g = v(&[2.0, 5.0]);
        assert_relative_eq!(s.cone().upper_ratio(&v(&[0.0, 1.0]), &g).unwrap(), 0.2);
    }

    #[test]
    fn state_gauge_identity_holds_for_inversions() {
        for cone in [ConeSpec::orthant(3), ConeSpec::lorentz(4), ConeSpec::psd(2)] {
            let s = OrderUnitSpace::standard(cone.clone()).unwrap();
            let map = GaugeMapSpec::inversion(cone).unwrap();
            let r = check_state_gauge_identity(&map, &s, 20, 5, 1e-8);
            assert!(r.pass(), "{}", r.to_text());
        }
    }

    #[test]
    fn atomicity_examples() {
        let s = OrderUnitSpace::standard(ConeSpec::orthant(2)).unwrap();
        let map = GaugeMapSpec::inversion(ConeSpec::orthant(2)).unwrap();
        let r = check_strong_atomicity(&s, &map, &v(&[2.0, 5.0]), 10, 1, 1e-9);
        assert!(r.pass(), "{}", r.to_text());

        let s = OrderUnitSpace::standard(ConeSpec::psd(2)).unwrap();
        let map = GaugeMapSpec::inversion(ConeSpec::psd(2)).unwrap();
        let g = svec(&Matrix::from_diag(&[2.0, 1.0]));
        let r = check_strong_atomicity(&s, &map, &g, 30, 1, 1e-9);
        assert!(r.pass(), "{}", r.to_text());
    }

    #[test]
    fn order_interval_is_a_segment() {
        let s = OrderUnitSpace::standard(ConeSpec::orthant(2)).unwrap();
        let p = ExtremalVector { p: v(&[1.0, 0.0]), label: StateLabel::Coordinate { index: 0 } };
        let r = check_order_interval_segment(&s, &v(&[1.0, 1.0]), &p, 100, 3, 1e-8).unwrap();
        assert!(r.pass(), "{}", r.to_text());

        let s = OrderUnitSpace::standard(ConeSpec::psd(2)).unwrap();
        let p = ExtremalVector { p: svec(&Matrix::from_diag(&[1.0, 0.0])), label: StateLabel::Derived };
        let r = check_order_interval_segment(&s, s.unit(), &p, 100, 3, 1e-8).unwrap();
        assert!(r.pass(), "{}", r.to_text());
    }

    #[test]
    fn interval_needs_interior_base() {
        let s = OrderUnitSpace::standard(ConeSpec::orthant(2)).unwrap();
        let p = ExtremalVector { p: v(&[1.0, 0.0]), label: StateLabel::Derived };
        assert_eq!(
            check_order_interval_segment(&s, &v(&[0.0, 1.0]), &p, 5, 1, 1e-8).unwrap_err(),
            Error::NotInterior
        );
    }

    #[test]
    fn labels_serialize_with_kind() {
        let l = StateLabel::Block { part: 1, offset: 3, inner: Box::new(StateLabel::Coordinate { index: 0 }) };
        let json = serde_json::to_string(&l).unwrap();
        assert!(json.contains("\"kind\":\"block\""));
        assert_eq!(serde_json::from_str::<StateLabel>(&json).unwrap(), l);
    }
}
