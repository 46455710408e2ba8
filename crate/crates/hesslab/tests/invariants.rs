//! Property-based invariants: homogeneity and Euler identities of the jets,
//! tensor symmetries, Legendre involution, and the algebraic identities of
//! the branch quadratic.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

use hesslab::isometry::{branch_quadratic, discriminant_closed_form, linear_theta};
use hesslab::legendre::{legendre_map, legendre_map_inverse};
use hesslab::norms::{NormSpec, Period, Point, ProfileFunction};
use hesslab::tensors::{cartan_tensor, curvature_tensor, fundamental_tensor};

fn randers(ax: f64, az: f64, mix: f64, b1: f64, b2: f64) -> NormSpec {
    let alpha = DMatrix::from_row_slice(
        3,
        3,
        &[ax, mix, 0.0, mix, 1.0, 0.0, 0.0, 0.0, az],
    );
    let beta = DVector::from_vec(vec![b1, b2, 0.1]);
    NormSpec::Randers { alpha, beta }
}

fn wavy(c: f64) -> ProfileFunction {
    ProfileFunction::TrigPoly {
        cos: vec![1.0, 0.0, 0.0, 0.0, c],
        sin: vec![],
        period: Period::TwoPi,
    }
}

prop_compose! {
    fn randers_spec()(
        ax in 0.8f64..1.6,
        az in 0.8f64..1.6,
        mix in -0.2f64..0.2,
        b1 in -0.25f64..0.25,
        b2 in -0.25f64..0.25,
    ) -> NormSpec {
        randers(ax, az, mix, b1, b2)
    }
}

prop_compose! {
    fn nonzero_point()(
        x in -2.0f64..2.0,
        y in -2.0f64..2.0,
        z in -2.0f64..2.0,
    ) -> Option<Point> {
        let v = DVector::from_vec(vec![x, y, z]);
        if v.norm() < 0.3 { None } else { Some(Point::from_vector(v).unwrap()) }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn energy_is_two_homogeneous(spec in randers_spec(), p in nonzero_point(), lam in 0.2f64..4.0) {
        let Some(y) = p else { return Ok(()) };
        let e1 = spec.eval_e(&y).unwrap();
        let e2 = spec.eval_e(&y.scaled(lam).unwrap()).unwrap();
        prop_assert!((e2 - lam * lam * e1).abs() <= 1e-10 * lam * lam * e1.abs());
    }

    #[test]
    fn euler_identities_hold(spec in randers_spec(), p in nonzero_point()) {
        let Some(y) = p else { return Ok(()) };
        let j = spec.jet3(&y).unwrap();
        let x = y.as_slice();
        let n = y.dim();
        // grad E . y = 2E
        let gdoty: f64 = (0..n).map(|i| j.g[i] * x[i]).sum();
        prop_assert!((gdoty - 2.0 * j.v).abs() < 1e-9 * (1.0 + j.v.abs()));
        // hess E . y = grad E
        for i in 0..n {
            let hy: f64 = (0..n).map(|k| j.hess(i, k) * x[k]).sum();
            prop_assert!((hy - j.g[i]).abs() < 1e-9 * (1.0 + j.g[i].abs()));
        }
        // the Cartan tensor annihilates the radial direction
        let c = cartan_tensor(&spec, &y).unwrap();
        prop_assert!(c.contract_max(x) < 1e-9 * (1.0 + c.max_abs()));
    }

    #[test]
    fn tensor_symmetries(spec in randers_spec(), p in nonzero_point()) {
        let Some(y) = p else { return Ok(()) };
        let g = fundamental_tensor(&spec, &y).unwrap();
        prop_assert!((g.g.clone() - g.g.transpose()).abs().max() < 1e-12);
        let c = cartan_tensor(&spec, &y).unwrap();
        let n = y.dim();
        for i in 0..n {
            for jj in 0..n {
                for k in 0..n {
                    let v = c.get(i, jj, k);
                    prop_assert!((v - c.get(jj, i, k)).abs() < 1e-12 * (1.0 + v.abs()));
                    prop_assert!((v - c.get(i, k, jj)).abs() < 1e-12 * (1.0 + v.abs()));
                }
            }
        }
        let r = curvature_tensor(&spec, &y).unwrap();
        prop_assert!(r.symmetry_residual() < 1e-9);
        prop_assert!(r.bianchi_residual() < 1e-9);
    }

    #[test]
    fn legendre_transform_is_involutive(spec in randers_spec(), p in nonzero_point()) {
        let Some(y) = p else { return Ok(()) };
        let img = legendre_map(&spec, &y).unwrap();
        let back = legendre_map_inverse(&spec, &img).unwrap();
        prop_assert!((back.coords() - y.coords()).norm() < 1e-9 * y.euclidean_norm());
    }

    #[test]
    fn branch_quadratic_identities(
        c in 0.02f64..0.08,
        t in 0.15f64..1.45,
        theta in 0.15f64..1.45,
    ) {
        prop_assume!((t - PI / 2.0).abs() > 0.05 && (theta - PI / 2.0).abs() > 0.05);
        let f = wavy(c);
        let Ok(b) = branch_quadratic(&f, t, theta) else { return Ok(()) };
        let scale = b.a.abs().max(b.b.abs()).max(b.c.abs()).max(1.0);
        // both roots satisfy the quadratic
        prop_assert!(b.residual(b.roots.0).abs() < 1e-9 * scale);
        prop_assert!(b.residual(b.roots.1).abs() < 1e-9 * scale);
        // Vieta: product and sum of the roots
        prop_assert!((b.roots.0 * b.roots.1 - b.c / b.a).abs() < 1e-8 * (1.0 + (b.c / b.a).abs()));
        prop_assert!((b.roots.0 + b.roots.1 + b.b / b.a).abs() < 1e-8 * (1.0 + (b.b / b.a).abs()));
        // the displayed discriminant equals its closed form
        let closed = discriminant_closed_form(&f, t, theta).unwrap();
        prop_assert!((b.discriminant - closed).abs() < 1e-9 * scale * scale);
        prop_assert!(b.discriminant >= -1e-18 * scale * scale);
        // the linear-branch root is always cos(theta)sin(theta)/(cos t sin t)
        let lin = (theta.cos() * theta.sin()) / (t.cos() * t.sin());
        let hit = (b.roots.0 - lin).abs().min((b.roots.1 - lin).abs());
        prop_assert!(hit < 1e-8 * (1.0 + lin.abs()));
    }

    #[test]
    fn linear_angle_map_satisfies_tan_relation(
        a in 0.5f64..2.0,
        b in 0.5f64..2.0,
        t in 0.1f64..1.45,
    ) {
        prop_assume!((t - PI / 2.0).abs() > 0.05);
        let theta = linear_theta(a, b, t);
        prop_assert!((theta.tan() - (b / a) * t.tan()).abs() < 1e-9 * (1.0 + t.tan().abs()));
    }
}
