//! Spherical-coordinate calculus for block-rotation invariant norms.
//!
//! For a norm invariant under `SO(k) x SO(n-k)` the energy takes the form
//! `E = r^2 f(theta)` with `theta` the angle between the two coordinate
//! blocks.  Everything here works in the three-dimensional chart
//! `(r, theta, phi)` (first block axis, angle, rotation angle of the second
//! block); higher dimensions restrict to this chart exactly.

use crate::error::{Error, Result};
use crate::jet::Jet1;
use crate::norms::{Point, ProfileFunction};
use nalgebra::DMatrix;
use std::f64::consts::PI;

/// Spherical coordinates adapted to the split `k | n-k`:
/// `x = (r cos(theta) xi1, r sin(theta) xi2)` with unit vectors `xi1, xi2`.
#[derive(Debug, Clone)]
pub struct SphericalPoint {
    pub r: f64,
    pub theta: f64,
    /// unit vector in the first block (length k); for k = 1 this is `[+-1]`
    pub xi1: Vec<f64>,
    /// unit vector in the second block (length n - k)
    pub xi2: Vec<f64>,
}

impl SphericalPoint {
    pub fn new(r: f64, theta: f64, xi1: Vec<f64>, xi2: Vec<f64>) -> Result<Self> {
        if r <= 0.0 {
            return Err(Error::Domain(format!("r = {r} must be positive")));
        }
        let k = xi1.len();
        let upper = if k == 1 { PI } else { PI / 2.0 };
        if !(0.0 < theta && theta < upper) {
            return Err(Error::Domain(format!(
                "theta = {theta} outside (0, {upper})"
            )));
        }
        for xi in [&xi1, &xi2] {
            let norm2: f64 = xi.iter().map(|c| c * c).sum();
            if (norm2 - 1.0).abs() > 1e-10 {
                return Err(Error::Domain("sphere factors must be unit vectors".into()));
            }
        }
        Ok(SphericalPoint { r, theta, xi1, xi2 })
    }

    pub fn to_cartesian(&self) -> Result<Point> {
        let (c, s) = (self.theta.cos(), self.theta.sin());
        let mut coords = Vec::with_capacity(self.xi1.len() + self.xi2.len());
        coords.extend(self.xi1.iter().map(|x| self.r * c * x));
        coords.extend(self.xi2.iter().map(|x| self.r * s * x));
        Point::new(coords)
    }
}

/// The chart `(r, theta, phi) -> (r cos theta, r sin theta cos phi,
/// r sin theta sin phi)` used throughout the n = 3, k = 1 computations.
pub fn chart3_to_cartesian(r: f64, theta: f64, phi: f64) -> Result<Point> {
    Point::new(vec![
        r * theta.cos(),
        r * theta.sin() * phi.cos(),
        r * theta.sin() * phi.sin(),
    ])
}

/// Jacobian `d(x1,x2,x3)/d(r,theta,phi)` of [`chart3_to_cartesian`].
pub fn chart3_jacobian(r: f64, theta: f64, phi: f64) -> DMatrix<f64> {
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    DMatrix::from_row_slice(3, 3, &[
        ct, -r * st, 0.0,
        st * cp, r * ct * cp, -r * st * sp,
        st * sp, r * ct * sp, r * st * cp,
    ])
}

/// Components of the Hessian metric in the `(r, theta, phi)` chart.
#[derive(Debug, Clone, PartialEq)]
pub struct SphericalMetric3 {
    pub r: f64,
    pub theta: f64,
    pub g_rr: f64,
    pub g_rt: f64,
    pub g_tt: f64,
    pub g_pp: f64,
}

impl SphericalMetric3 {
    pub fn matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(3, 3, &[
            self.g_rr, self.g_rt, 0.0,
            self.g_rt, self.g_tt, 0.0,
            0.0, 0.0, self.g_pp,
        ])
    }

    pub fn is_positive_definite(&self) -> bool {
        self.g_rr > 0.0 && self.g_rr * self.g_tt - self.g_rt * self.g_rt > 0.0 && self.g_pp > 0.0
    }

    /// The `theta theta` entry of the inverse metric (the `(r, theta)` block
    /// is 2x2, the `phi` direction splits off).
    pub fn g_tt_inv(&self) -> f64 {
        self.g_rr / (self.g_rr * self.g_tt - self.g_rt * self.g_rt)
    }
}

fn check_chart_domain(r: f64, theta: f64) -> Result<()> {
    if r <= 0.0 {
        return Err(Error::Domain(format!("r = {r} must be positive")));
    }
    if !(0.0 < theta && theta < PI) {
        return Err(Error::Domain(format!("theta = {theta} outside (0, pi)")));
    }
    Ok(())
}

/// Hessian metric of `E = r^2 f(theta)` in the `(r, theta, phi)` chart:
/// `g_rr = 2f`, `g_rtheta = r f'`, `g_thetatheta = r^2 (2f + f'')`,
/// `g_phiphi = r^2 (2 sin^2(theta) f + sin(theta)cos(theta) f')`.
pub fn spherical_metric(f: &ProfileFunction, r: f64, theta: f64) -> Result<SphericalMetric3> {
    check_chart_domain(r, theta)?;
    let [f0, f1, f2, _] = f.derivs3(theta)?;
    let (st, ct) = theta.sin_cos();
    Ok(SphericalMetric3 {
        r,
        theta,
        g_rr: 2.0 * f0,
        g_rt: r * f1,
        g_tt: r * r * (2.0 * f0 + f2),
        g_pp: r * r * (2.0 * st * st * f0 + st * ct * f1),
    })
}

/// The two independent Cartan components in the `(r, theta, phi)` chart:
/// `C_ttt = 2 r^2 f' + r^2 f''' / 2` and
/// `C_tpp = -r^2 cos(2 theta) f' / 2 + r^2 sin(2 theta) f'' / 4`.
/// All components with an `r` index vanish, as does `C_ttp`.
pub fn spherical_cartan(f: &ProfileFunction, r: f64, theta: f64) -> Result<(f64, f64)> {
    check_chart_domain(r, theta)?;
    let [_, f1, f2, f3] = f.derivs3(theta)?;
    let c_ttt = 2.0 * r * r * f1 + 0.5 * r * r * f3;
    let c_tpp = -0.5 * r * r * (2.0 * theta).cos() * f1 + 0.25 * r * r * (2.0 * theta).sin() * f2;
    Ok((c_ttt, c_tpp))
}

/// The reduced curvature component `R_tppt = C_ttt g^tt C_tpp` used as the
/// flatness detector: it vanishes on an interval exactly when
/// `C_ttt * C_tpp` does.
pub fn curvature_component(f: &ProfileFunction, r: f64, theta: f64) -> Result<f64> {
    let (c_ttt, c_tpp) = spherical_cartan(f, r, theta)?;
    let g = spherical_metric(f, r, theta)?;
    Ok(c_ttt * g.g_tt_inv() * c_tpp)
}

/// The full ambient curvature component `R_(theta phi phi theta)` in this
/// chart, `C_tpp^2 g^pp - C_ttt g^tt C_tpp`; it matches the chart transform
/// of the Cartesian curvature tensor.
pub fn curvature_component_full(f: &ProfileFunction, r: f64, theta: f64) -> Result<f64> {
    let (c_ttt, c_tpp) = spherical_cartan(f, r, theta)?;
    let g = spherical_metric(f, r, theta)?;
    Ok(c_tpp * c_tpp / g.g_pp - c_ttt * g.g_tt_inv() * c_tpp)
}

/// Genericity value `-cos(t) sin(t) f'' + (cos^2(t) - sin^2(t)) f'`; a nonzero
/// value marks an orbit where the norm is not locally Euclidean.
pub fn genericity_condition(f: &ProfileFunction, t: f64) -> Result<f64> {
    let [_, f1, f2, _] = f.derivs3(t)?;
    let (s, c) = t.sin_cos();
    Ok(-c * s * f2 + (c * c - s * s) * f1)
}

/// The profile `f = c1 + c2 cos(2 theta)` of a Euclidean norm, together with
/// the quadratic-form matrix `Q` with `E = y^T Q y`, i.e.
/// `E = (c1+c2) x1^2 + (c1-c2)(x2^2 + x3^2)`.
pub fn euclidean_profile(c1: f64, c2: f64) -> Result<(ProfileFunction, DMatrix<f64>)> {
    if c1 <= c2.abs() {
        return Err(Error::ConvexityLost(format!(
            "need c1 > |c2| for positivity, got c1 = {c1}, c2 = {c2}"
        )));
    }
    let f = ProfileFunction::double_angle(c1, c2, 0.0);
    let q = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
        c1 + c2,
        c1 - c2,
        c1 - c2,
    ]));
    Ok((f, q))
}

/// Validity report of a profile: the maximal open theta-intervals on which
/// the spherical metric is positive definite.
#[derive(Debug, Clone)]
pub struct ValidityReport {
    pub intervals: Vec<(f64, f64)>,
}

impl ValidityReport {
    pub fn contains(&self, theta: f64) -> bool {
        self.intervals.iter().any(|(lo, hi)| *lo < theta && theta < *hi)
    }
}

/// The profile `f = c1 + c2 cos(2 theta) + c3 sin(2 theta)`: the general
/// solution of the flatness equation.  Its Hessian metric is flat on every
/// cone where it is positive definite; for `c3 != 0` positive definiteness
/// fails somewhere on `(0, pi)`.
pub fn rem0040_profile(c1: f64, c2: f64, c3: f64) -> Result<(ProfileFunction, ValidityReport)> {
    if c1 <= 0.0 {
        return Err(Error::InvalidSpec(format!("need c1 > 0, got {c1}")));
    }
    let f = ProfileFunction::double_angle(c1, c2, c3);
    let report = validity_intervals(&f, 4000)?;
    Ok((f, report))
}

/// Scan `(0, pi)` for positive definiteness of the spherical metric and
/// refine the interval endpoints by bisection.
pub fn validity_intervals(f: &ProfileFunction, grid: usize) -> Result<ValidityReport> {
    // smallest of the three positivity conditions, normalized to r = 1
    let cond = |theta: f64| -> Result<f64> {
        let g = spherical_metric(f, 1.0, theta)?;
        let det2 = g.g_rr * g.g_tt - g.g_rt * g.g_rt;
        Ok(g.g_rr.min(det2).min(g.g_pp))
    };
    let eps = 1e-9;
    let ts: Vec<f64> = (0..=grid)
        .map(|i| eps + (PI - 2.0 * eps) * i as f64 / grid as f64)
        .collect();
    let vals: Vec<f64> = ts.iter().map(|t| cond(*t)).collect::<Result<_>>()?;
    let refine = |mut lo: f64, mut hi: f64| -> Result<f64> {
        let mut flo = cond(lo)?;
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            let fm = cond(mid)?;
            if (fm > 0.0) == (flo > 0.0) {
                lo = mid;
                flo = fm;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    };
    let mut intervals = Vec::new();
    let mut start: Option<f64> = if vals[0] > 0.0 { Some(0.0) } else { None };
    for i in 1..ts.len() {
        let was = vals[i - 1] > 0.0;
        let is = vals[i] > 0.0;
        if !was && is {
            start = Some(refine(ts[i - 1], ts[i])?);
        } else if was && !is {
            let lo = start.take().unwrap_or(0.0);
            intervals.push((lo, refine(ts[i - 1], ts[i])?));
        }
    }
    if let Some(lo) = start {
        intervals.push((lo, PI));
    }
    Ok(ValidityReport { intervals })
}

/// One row of the spherical grid report.
#[derive(Debug, Clone)]
pub struct GridRow {
    pub theta: f64,
    pub g_rr: f64,
    pub g_rt: f64,
    pub g_tt: f64,
    pub g_pp: f64,
    pub c_ttt: f64,
    pub c_tpp: f64,
    pub r_tppt: f64,
    pub genericity: f64,
}

/// Evaluate the grid report at `r = 1` on the given angles.
pub fn grid_report(f: &ProfileFunction, thetas: &[f64]) -> Result<Vec<GridRow>> {
    thetas
        .iter()
        .map(|&theta| {
            let g = spherical_metric(f, 1.0, theta)?;
            let (c_ttt, c_tpp) = spherical_cartan(f, 1.0, theta)?;
            Ok(GridRow {
                theta,
                g_rr: g.g_rr,
                g_rt: g.g_rt,
                g_tt: g.g_tt,
                g_pp: g.g_pp,
                c_ttt,
                c_tpp,
                r_tppt: curvature_component(f, 1.0, theta)?,
                genericity: genericity_condition(f, theta)?,
            })
        })
        .collect()
}

pub fn grid_csv(rows: &[GridRow]) -> String {
    let mut s = String::from("theta,g_rr,g_rtheta,g_thetatheta,g_phiphi,C_ttt,C_tpp,R_tppt,genericity\n");
    for row in rows {
        s.push_str(&format!(
            "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}\n",
            row.theta,
            row.g_rr,
            row.g_rt,
            row.g_tt,
            row.g_pp,
            row.c_ttt,
            row.c_tpp,
            row.r_tppt,
            row.genericity
        ));
    }
    s
}

/// Derivative in theta of `C_tpp` computed by jet arithmetic; the closed-form
/// identity `d/dtheta C_tpp = sin(2 theta) C_ttt / 2` at fixed `r` is a test
/// target.
pub fn cartan_tpp_theta_derivative(f: &ProfileFunction, r: f64, theta: f64) -> Result<f64> {
    check_chart_domain(r, theta)?;
    let fj = f.jet(theta)?;
    let f1 = fj.shift();
    let f2 = f1.shift();
    let two_theta = Jet1::var(theta).scale(2.0);
    let c_tpp = two_theta
        .cos()
        .mul(f1)
        .scale(-0.5)
        .add(two_theta.sin().mul(f2).scale(0.25))
        .scale(r * r);
    Ok(c_tpp.d1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::norms::{NormSpec, Period};
    use crate::tensors;

    fn wavy() -> ProfileFunction {
        ProfileFunction::TrigPoly {
            cos: vec![1.0, 0.0, 0.0, 0.0, 0.1],
            sin: vec![],
            period: Period::TwoPi,
        }
    }

    #[test]
    fn constant_profile_metric_is_round() {
        let f = ProfileFunction::constant(0.7);
        let g = spherical_metric(&f, 2.0, 1.1).unwrap();
        assert!((g.g_rr - 1.4).abs() < 1e-15);
        assert!(g.g_rt.abs() < 1e-15);
        assert!((g.g_tt - 4.0 * 1.4).abs() < 1e-14);
        assert!((g.g_pp - 4.0 * 1.4 * 1.1f64.sin().powi(2)).abs() < 1e-14);
    }

    #[test]
    fn flat_profile_matches_cartesian_quadratic() {
        let (c1, c2) = (1.0, 0.3);
        let (f, q) = euclidean_profile(c1, c2).unwrap();
        let spec = NormSpec::Euclidean { a: 2.0 * &q };
        for i in 1..10 {
            let theta = PI * i as f64 / 10.0;
            let (r, phi) = (1.3, 0.8);
            let g_sph = spherical_metric(&f, r, theta).unwrap().matrix();
            let jac = chart3_jacobian(r, theta, phi);
            let y = chart3_to_cartesian(r, theta, phi).unwrap();
            let g_cart = tensors::fundamental_tensor(&spec, &y).unwrap().g;
            let transported = jac.transpose() * g_cart * &jac;
            assert!(
                (&transported - &g_sph).abs().max() < 1e-12,
                "chart mismatch at theta = {theta}"
            );
        }
        assert!(matches!(euclidean_profile(0.3, 0.5), Err(Error::ConvexityLost(_))));
    }

    #[test]
    fn flat_profile_solves_its_ode() {
        // 2 cos(2 theta) f' = sin(2 theta) f''
        let (f, _) = euclidean_profile(1.0, 0.3).unwrap();
        for i in 1..500 {
            let theta = PI * i as f64 / 500.0;
            let [_, f1, f2, _] = f.derivs3(theta).unwrap();
            let resid = 2.0 * (2.0 * theta).cos() * f1 - (2.0 * theta).sin() * f2;
            assert!(resid.abs() < 1e-13, "ODE residual {resid} at {theta}");
        }
    }

    #[test]
    fn chart_change_consistency_metric_and_cartan() {
        let f = wavy();
        let spec = NormSpec::Profile { k: 1, n: 3, f: f.clone(), theta_range: None };
        for i in 0..200 {
            let theta = 0.05 + (PI - 0.1) * (i as f64 + 0.5) / 200.0;
            let r = 0.5 + 1.7 * ((i * 37 % 100) as f64 / 100.0);
            let phi = 2.0 * PI * ((i * 13 % 100) as f64 / 100.0);
            let jac = chart3_jacobian(r, theta, phi);
            let y = chart3_to_cartesian(r, theta, phi).unwrap();

            let g_sph = spherical_metric(&f, r, theta).unwrap().matrix();
            let g_cart = tensors::fundamental_tensor(&spec, &y).unwrap().g;
            let transported = jac.transpose() * &g_cart * &jac;
            let rel = (&transported - &g_sph).abs().max() / g_sph.abs().max();
            assert!(rel < 1e-9, "metric chart mismatch {rel} at theta {theta}");

            // Cartan: transform the Cartesian tensor by three Jacobian factors
            let c_cart = tensors::cartan_tensor(&spec, &y).unwrap();
            let comp = |a: usize, b: usize, c: usize| -> f64 {
                let mut acc = 0.0;
                for i in 0..3 {
                    for j in 0..3 {
                        for k in 0..3 {
                            acc += c_cart.get(i, j, k) * jac[(i, a)] * jac[(j, b)] * jac[(k, c)];
                        }
                    }
                }
                acc
            };
            let (c_ttt, c_tpp) = spherical_cartan(&f, r, theta).unwrap();
            let scale = c_ttt.abs().max(c_tpp.abs()).max(1e-12);
            assert!((comp(1, 1, 1) - c_ttt).abs() / scale < 1e-9, "C_ttt at {theta}");
            assert!((comp(1, 2, 2) - c_tpp).abs() / scale < 1e-9, "C_tpp at {theta}");
            // components the closed forms say vanish
            assert!(comp(0, 1, 1).abs() / scale < 1e-9, "C_rtt at {theta}");
            assert!(comp(0, 2, 2).abs() / scale < 1e-9, "C_rpp at {theta}");
            assert!(comp(1, 1, 2).abs() / scale < 1e-9, "C_ttp at {theta}");
        }
    }

    #[test]
    fn full_curvature_component_matches_tensor_chart_change() {
        let f = wavy();
        let spec = NormSpec::Profile { k: 1, n: 3, f: f.clone(), theta_range: None };
        for i in 0..20 {
            let theta = 0.2 + (PI - 0.4) * i as f64 / 20.0;
            let (r, phi) = (1.1, 0.6);
            let jac = chart3_jacobian(r, theta, phi);
            let y = chart3_to_cartesian(r, theta, phi).unwrap();
            let r_cart = tensors::curvature_tensor(&spec, &y).unwrap();
            let mut transported = 0.0;
            for i in 0..3 {
                for j in 0..3 {
                    for k in 0..3 {
                        for l in 0..3 {
                            // indices (theta, phi, phi, theta)
                            transported += r_cart.get(i, j, k, l)
                                * jac[(i, 1)]
                                * jac[(j, 2)]
                                * jac[(k, 2)]
                                * jac[(l, 1)];
                        }
                    }
                }
            }
            let full = curvature_component_full(&f, r, theta).unwrap();
            let scale = full.abs().max(1e-12);
            assert!(
                (transported - full).abs() / scale < 1e-8,
                "curvature chart mismatch at theta {theta}: {transported} vs {full}"
            );
        }
    }

    #[test]
    fn reduced_component_flatness_detection() {
        // flat family: reduced component vanishes identically
        let (f, _) = euclidean_profile(1.0, 0.3).unwrap();
        for i in 1..100 {
            let theta = PI * i as f64 / 100.0;
            assert!(curvature_component(&f, 1.0, theta).unwrap().abs() < 1e-13);
        }
        // wavy profile: nonzero at a generic angle, and equivalent to the
        // Cartan-product criterion pointwise
        let f = wavy();
        assert!(curvature_component(&f, 1.0, 0.7).unwrap().abs() > 1e-4);
        for i in 1..100 {
            let theta = PI * i as f64 / 100.0;
            let rc = curvature_component(&f, 1.0, theta).unwrap();
            let (c_ttt, c_tpp) = spherical_cartan(&f, 1.0, theta).unwrap();
            assert_eq!(rc == 0.0, c_ttt * c_tpp == 0.0);
            assert!((rc.abs() < 1e-10) == ((c_ttt * c_tpp).abs() < 1e-10 * 10.0)
                || (c_ttt * c_tpp).abs() < 1e-8);
        }
    }

    #[test]
    fn cartan_derivative_identity() {
        let f = wavy();
        for i in 1..50 {
            let theta = PI * i as f64 / 50.0;
            let d = cartan_tpp_theta_derivative(&f, 1.0, theta).unwrap();
            let (c_ttt, _) = spherical_cartan(&f, 1.0, theta).unwrap();
            let expected = 0.5 * (2.0 * theta).sin() * c_ttt;
            assert!((d - expected).abs() < 1e-10 * (1.0 + expected.abs()));
        }
    }

    #[test]
    fn genericity_examples() {
        let (flat, _) = euclidean_profile(1.0, 0.3).unwrap();
        for i in 1..20 {
            let t = PI * i as f64 / 20.0;
            assert!(genericity_condition(&flat, t).unwrap().abs() < 1e-13);
        }
        let f = wavy();
        // symmetric profile: f'(pi/2) = 0 kills both terms
        assert!(genericity_condition(&f, PI / 2.0).unwrap().abs() < 1e-13);
        assert!(genericity_condition(&f, PI / 8.0).unwrap().abs() > 1e-3);
    }

    #[test]
    fn rem0040_validity_and_flatness() {
        // c3 = 0 and c1 > |c2|: valid on all of (0, pi)
        let (_, report) = rem0040_profile(1.0, 0.2, 0.0).unwrap();
        assert_eq!(report.intervals.len(), 1);
        assert!(report.intervals[0].0 < 1e-6 && report.intervals[0].1 > PI - 1e-6);

        let (c1, c2, c3) = (1.0, 0.2, 0.1);
        let (f, report) = rem0040_profile(c1, c2, c3).unwrap();
        // g_pp has the closed form 2 r^2 sin(theta) [(c1-c2) sin(theta) + c3 cos(theta)]
        for i in 1..40 {
            let theta = PI * i as f64 / 40.0;
            let g = spherical_metric(&f, 1.3, theta).unwrap();
            let expected =
                2.0 * 1.3 * 1.3 * theta.sin() * ((c1 - c2) * theta.sin() + c3 * theta.cos());
            assert!((g.g_pp - expected).abs() < 1e-12);
        }
        // the sign change of g_pp sits at the root of (c1-c2) sin + c3 cos
        let root = (-c3 / (c1 - c2)).atan() + PI;
        assert!(!report.contains(root + 1e-3) || !report.contains(root - 1e-3));
        let boundary = report
            .intervals
            .iter()
            .flat_map(|(lo, hi)| [*lo, *hi])
            .fold(f64::INFINITY, |best, e| {
                if (e - root).abs() < (best - root).abs() { e } else { best }
            });
        assert!(
            (boundary - root).abs() < 1e-9,
            "validity endpoint {boundary} vs g_pp root {root}"
        );
        // curvature vanishes on the valid cones
        for (lo, hi) in &report.intervals {
            for j in 1..50 {
                let theta = lo + (hi - lo) * j as f64 / 50.0;
                if theta <= *lo || theta >= *hi {
                    continue;
                }
                assert!(curvature_component(&f, 1.0, theta).unwrap().abs() < 1e-9);
            }
        }
    }

    #[test]
    fn grid_report_shape() {
        let f = wavy();
        let thetas: Vec<f64> = (1..=10).map(|i| PI * i as f64 / 11.0).collect();
        let rows = grid_report(&f, &thetas).unwrap();
        assert_eq!(rows.len(), 10);
        let csv = grid_csv(&rows);
        assert_eq!(csv.lines().count(), 11);
        assert!(csv.starts_with("theta,"));
    }
}
