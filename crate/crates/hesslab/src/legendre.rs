//! Legendre transformation (gradient map), dual norms, and verification that
//! a candidate map is an isometry of Hessian metrics.

use crate::error::Result;
use crate::norms::{invert_gradient, NormSpec, Point};
use nalgebra::DMatrix;

/// A differentiable map of the punctured space, with a Jacobian that defaults
/// to central differences (step `1e-6 |y|`) when no analytic form exists.
pub trait PointMap {
    fn apply(&self, y: &Point) -> Result<Point>;

    fn jacobian(&self, y: &Point) -> Result<DMatrix<f64>> {
        let n = y.dim();
        let h = 1e-6 * y.euclidean_norm();
        let mut jac = DMatrix::zeros(n, n);
        for j in 0..n {
            let mut xp = y.coords().clone();
            let mut xm = y.coords().clone();
            xp[j] += h;
            xm[j] -= h;
            let fp = self.apply(&Point::from_vector(xp)?)?;
            let fm = self.apply(&Point::from_vector(xm)?)?;
            for i in 0..n {
                jac[(i, j)] = (fp.as_slice()[i] - fm.as_slice()[i]) / (2.0 * h);
            }
        }
        Ok(jac)
    }
}

/// A sampled evaluation of a map: source, image, and differential.
#[derive(Debug, Clone)]
pub struct MapSample {
    pub source: Point,
    pub image: Point,
    pub jacobian: DMatrix<f64>,
}

pub fn sample_map(map: &dyn PointMap, y: &Point) -> Result<MapSample> {
    Ok(MapSample {
        source: y.clone(),
        image: map.apply(y)?,
        jacobian: map.jacobian(y)?,
    })
}

/// An invertible linear map.
pub struct LinearMap(pub DMatrix<f64>);

impl PointMap for LinearMap {
    fn apply(&self, y: &Point) -> Result<Point> {
        Point::from_vector(&self.0 * y.coords())
    }

    fn jacobian(&self, _y: &Point) -> Result<DMatrix<f64>> {
        Ok(self.0.clone())
    }
}

/// The gradient map of a norm's energy; its differential is the Hessian
/// metric itself.
pub struct LegendreMap(pub NormSpec);

impl PointMap for LegendreMap {
    fn apply(&self, y: &Point) -> Result<Point> {
        legendre_map(&self.0, y)
    }

    fn jacobian(&self, y: &Point) -> Result<DMatrix<f64>> {
        let j = self.0.jet3(y)?;
        Ok(DMatrix::from_row_slice(j.n, j.n, &j.h))
    }
}

/// A map given by a closure; Jacobian by the default finite differences.
pub struct NumericMap<F: Fn(&Point) -> Result<Point>>(pub F);

impl<F: Fn(&Point) -> Result<Point>> PointMap for NumericMap<F> {
    fn apply(&self, y: &Point) -> Result<Point> {
        (self.0)(y)
    }
}

/// The Legendre transformation `y -> grad E(y)`.
pub fn legendre_map(spec: &NormSpec, y: &Point) -> Result<Point> {
    let j = spec.jet3(y)?;
    Point::new(j.g)
}

/// The inverse Legendre transformation (damped Newton solve of `grad E = p`).
pub fn legendre_map_inverse(spec: &NormSpec, p: &Point) -> Result<Point> {
    invert_gradient(spec, p)
}

/// The dual norm: its energy is the pushforward of `E` under the gradient map.
pub fn dual_norm(spec: &NormSpec) -> NormSpec {
    // double duals collapse by the involution property
    if let NormSpec::Dual { base } = spec {
        return (**base).clone();
    }
    if let NormSpec::Euclidean { a } = spec {
        if let Some(inv) = a.clone().try_inverse() {
            return NormSpec::Euclidean { a: inv };
        }
    }
    NormSpec::Dual { base: Box::new(spec.clone()) }
}

/// Residual report of a Hessian-isometry check.
#[derive(Debug, Clone)]
pub struct IsometryReport {
    /// per-sample relative residuals `|J^T g_B(map y) J - g_A(y)| / |g_A(y)|`
    pub residuals: Vec<f64>,
    pub max_residual: f64,
}

/// Verify that `map` pulls the Hessian metric of `spec_b` back to that of
/// `spec_a` on the given samples.
pub fn verify_hessian_isometry(
    map: &dyn PointMap,
    spec_a: &NormSpec,
    spec_b: &NormSpec,
    samples: &[Point],
) -> Result<IsometryReport> {
    let mut residuals = Vec::with_capacity(samples.len());
    let mut max_residual: f64 = 0.0;
    for y in samples {
        let ja = spec_a.jet3(y)?;
        let n = ja.n;
        let ga = DMatrix::from_row_slice(n, n, &ja.h);
        let image = map.apply(y)?;
        let jb = spec_b.jet3(&image)?;
        let gb = DMatrix::from_row_slice(n, n, &jb.h);
        let jac = map.jacobian(y)?;
        let pullback = jac.transpose() * gb * &jac;
        let resid = (&pullback - &ga).abs().max() / (ga.abs().max() + 1e-300);
        max_residual = max_residual.max(resid);
        residuals.push(resid);
    }
    Ok(IsometryReport { residuals, max_residual })
}

/// Search the samples for a pair witnessing nonlinearity of the map:
/// returns the largest `|Phi(y1 + y2) - Phi(y1) - Phi(y2)|` relative to the
/// image scale.
pub fn nonlinearity_witness(map: &dyn PointMap, samples: &[Point]) -> Result<f64> {
    let mut best: f64 = 0.0;
    for (idx, y1) in samples.iter().enumerate() {
        for y2 in samples.iter().skip(idx + 1) {
            let sum = Point::from_vector(y1.coords() + y2.coords());
            let Ok(sum) = sum else { continue };
            let (a, b, c) = (map.apply(&sum)?, map.apply(y1)?, map.apply(y2)?);
            let gap = (a.coords() - b.coords() - c.coords()).norm();
            let scale = a.euclidean_norm().max(1e-300);
            best = best.max(gap / scale);
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;
    use crate::norms::{Period, ProfileFunction};

    fn pt(c: &[f64]) -> Point {
        Point::new(c.to_vec()).unwrap()
    }

    fn sample_randers() -> NormSpec {
        NormSpec::Randers {
            alpha: DMatrix::identity(3, 3),
            beta: DVector::from_vec(vec![0.3, 0.0, 0.1]),
        }
    }

    fn sample_points() -> Vec<Point> {
        let mut pts = Vec::new();
        for i in 0..20 {
            let a = 0.3 + 0.11 * i as f64;
            pts.push(pt(&[a.cos(), a.sin(), 0.4 * (2.0 * a).sin() + 0.2]));
        }
        pts
    }

    #[test]
    fn euclidean_legendre_maps() {
        let y = pt(&[0.4, -0.7, 1.1]);
        let id = NormSpec::euclidean_identity(3);
        assert_eq!(legendre_map(&id, &y).unwrap(), y);
        let a = DMatrix::from_row_slice(3, 3, &[2.0, 0.3, 0.0, 0.3, 1.5, 0.1, 0.0, 0.1, 1.0]);
        let spec = NormSpec::Euclidean { a: a.clone() };
        let img = legendre_map(&spec, &y).unwrap();
        assert!((img.coords() - &a * y.coords()).norm() < 1e-14);
        // dual of Euclidean(A) is Euclidean(A^{-1})
        let dual = dual_norm(&spec);
        let NormSpec::Euclidean { a: ainv } = &dual else { panic!() };
        assert!((ainv * &a - DMatrix::identity(3, 3)).abs().max() < 1e-12);
    }

    #[test]
    fn involution_on_randers() {
        let spec = sample_randers();
        let dual = dual_norm(&spec);
        for y in sample_points() {
            let p = legendre_map(&spec, &y).unwrap();
            let back = legendre_map(&dual, &p).unwrap();
            assert!(
                (back.coords() - y.coords()).norm() < 1e-8 * y.euclidean_norm(),
                "involution failed at {:?}",
                y.as_slice()
            );
        }
    }

    #[test]
    fn legendre_jacobian_is_the_metric() {
        let spec = sample_randers();
        let map = LegendreMap(spec.clone());
        let y = pt(&[0.6, 0.8, -0.2]);
        let analytic = map.jacobian(&y).unwrap();
        // default finite-difference Jacobian of the same map
        struct Fd(NormSpec);
        impl PointMap for Fd {
            fn apply(&self, y: &Point) -> Result<Point> {
                legendre_map(&self.0, y)
            }
        }
        let fd = Fd(spec).jacobian(&y).unwrap();
        let rel = (&analytic - &fd).abs().max() / analytic.abs().max();
        assert!(rel < 1e-9, "jacobian mismatch {rel}");
    }

    #[test]
    fn dual_hessian_is_inverse_metric() {
        let spec = sample_randers();
        let dual = dual_norm(&spec);
        let mut worst: f64 = 0.0;
        for y in sample_points() {
            let g = spec.jet3(&y).unwrap();
            let g = DMatrix::from_row_slice(3, 3, &g.h);
            let p = legendre_map(&spec, &y).unwrap();
            let gd = dual.jet3(&p).unwrap();
            let gd = DMatrix::from_row_slice(3, 3, &gd.h);
            let rel = (gd * g - DMatrix::identity(3, 3)).abs().max();
            worst = worst.max(rel);
        }
        assert!(worst < 1e-8, "worst inverse-metric residual {worst}");
    }

    #[test]
    fn isometry_verification_examples() {
        let id = NormSpec::euclidean_identity(3);
        let samples = sample_points();
        // identity map on identical specs
        let rep = verify_hessian_isometry(&LinearMap(DMatrix::identity(3, 3)), &id, &id, &samples)
            .unwrap();
        assert!(rep.max_residual <= 1e-12);
        // doubling map pulls back g to 4g: residual |4g - g|/|g| = 3
        let rep = verify_hessian_isometry(
            &LinearMap(DMatrix::identity(3, 3) * 2.0),
            &id,
            &id,
            &samples,
        )
        .unwrap();
        assert!((rep.max_residual - 3.0).abs() < 1e-12);
        // the Legendre map is an isometry onto the dual norm
        let spec = sample_randers();
        let rep = verify_hessian_isometry(
            &LegendreMap(spec.clone()),
            &spec,
            &dual_norm(&spec),
            &samples,
        )
        .unwrap();
        assert!(rep.max_residual <= 1e-8, "residual {}", rep.max_residual);
    }

    #[test]
    fn nonlinearity_of_non_euclidean_legendre() {
        let spec = sample_randers();
        let samples = sample_points();
        let w = nonlinearity_witness(&LegendreMap(spec), &samples).unwrap();
        assert!(w > 1e-4, "expected a nonlinearity witness, got {w}");
        let lin = LinearMap(DMatrix::from_row_slice(3, 3, &[
            1.0, 0.2, 0.0, 0.0, 1.1, 0.0, 0.3, 0.0, 0.9,
        ]));
        assert!(nonlinearity_witness(&lin, &samples).unwrap() < 1e-12);
    }

    #[test]
    fn profile_norm_legendre_isometry() {
        let spec = NormSpec::Profile {
            k: 1,
            n: 3,
            f: ProfileFunction::TrigPoly {
                cos: vec![1.0, 0.0, 0.2, 0.0, 0.05],
                sin: vec![],
                period: Period::TwoPi,
            },
            theta_range: None,
        };
        let samples: Vec<Point> = (1..15)
            .map(|i| {
                let th = std::f64::consts::PI * i as f64 / 15.0;
                pt(&[th.cos(), th.sin() * 0.6, th.sin() * 0.8])
            })
            .collect();
        let rep = verify_hessian_isometry(
            &LegendreMap(spec.clone()),
            &spec,
            &dual_norm(&spec),
            &samples,
        )
        .unwrap();
        assert!(rep.max_residual <= 1e-8, "residual {}", rep.max_residual);
    }
}
