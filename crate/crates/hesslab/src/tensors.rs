//! Tensors of the Hessian metric: fundamental tensor `g = hess E`, Cartan
//! tensor `C = (1/2) d^3 E`, and the Riemann curvature, which for a Hessian
//! metric generated by a 2-homogeneous potential reduces to a quadratic
//! expression in the Cartan tensor.  A finite-difference Riemann oracle built
//! from Christoffel symbols provides independent cross-validation.
//!
//! Sign convention: `R_{ijkl} = g(R(e_i, e_j) e_k, e_l)` with
//! `R(X,Y) = [nabla_X, nabla_Y] - nabla_{[X,Y]}`, so for the round sphere the
//! sectional curvature `R(u,v,v,u) / (g(u,u)g(v,v) - g(u,v)^2)` is positive.

use crate::error::{Error, Result};
use crate::norms::{NormSpec, Point};
use nalgebra::{DMatrix, DVector};

/// The Hessian metric at a point.
#[derive(Debug, Clone)]
pub struct FundamentalTensor {
    pub g: DMatrix<f64>,
    pub point: Point,
}

/// The Cartan tensor at a point (totally symmetric, annihilated by the
/// position vector in any slot).
#[derive(Debug, Clone)]
pub struct CartanTensorValue {
    pub n: usize,
    /// dense n^3 storage, index (i*n + j)*n + k
    pub c: Vec<f64>,
    pub point: Point,
}

impl CartanTensorValue {
    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.c[(i * self.n + j) * self.n + k]
    }

    pub fn max_abs(&self) -> f64 {
        self.c.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Max absolute entry of the contraction with a vector in the first slot.
    pub fn contract_max(&self, y: &[f64]) -> f64 {
        let n = self.n;
        let mut worst: f64 = 0.0;
        for j in 0..n {
            for k in 0..n {
                let s: f64 = (0..n).map(|i| self.get(i, j, k) * y[i]).sum();
                worst = worst.max(s.abs());
            }
        }
        worst
    }
}

/// The Riemann tensor (fully covariant) at a point.
#[derive(Debug, Clone)]
pub struct CurvatureTensor {
    pub n: usize,
    /// dense n^4 storage, index ((i*n + j)*n + k)*n + l
    pub r: Vec<f64>,
    pub point: Point,
}

impl CurvatureTensor {
    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        self.r[((i * self.n + j) * self.n + k) * self.n + l]
    }

    pub fn max_abs(&self) -> f64 {
        self.r.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Worst violation of the algebraic symmetries
    /// `R_ijkl = -R_jikl = -R_ijlk = R_klij`, relative to the tensor scale.
    pub fn symmetry_residual(&self) -> f64 {
        let n = self.n;
        let scale = self.max_abs() + 1e-300;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let v = self.get(i, j, k, l);
                        worst = worst.max((v + self.get(j, i, k, l)).abs());
                        worst = worst.max((v + self.get(i, j, l, k)).abs());
                        worst = worst.max((v - self.get(k, l, i, j)).abs());
                    }
                }
            }
        }
        worst / scale
    }

    /// Worst violation of the first Bianchi identity, relative to scale.
    pub fn bianchi_residual(&self) -> f64 {
        let n = self.n;
        let scale = self.max_abs() + 1e-300;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let s = self.get(i, j, k, l) + self.get(i, k, l, j) + self.get(i, l, j, k);
                        worst = worst.max(s.abs());
                    }
                }
            }
        }
        worst / scale
    }

    /// Max relative difference against another curvature tensor.
    pub fn relative_difference(&self, other: &CurvatureTensor) -> f64 {
        let scale = self.max_abs().max(other.max_abs()) + 1e-300;
        self.r
            .iter()
            .zip(&other.r)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
            / scale
    }
}

/// The Hessian metric `g = hess E` at `y`, with positive-definiteness checked.
pub fn fundamental_tensor(spec: &NormSpec, y: &Point) -> Result<FundamentalTensor> {
    let j = spec.jet3(y)?;
    let g = DMatrix::from_row_slice(j.n, j.n, &j.h);
    if g.clone().cholesky().is_none() {
        return Err(Error::NotPositiveDefinite(format!(
            "Hessian metric at {:?} (strong convexity fails)",
            y.as_slice()
        )));
    }
    Ok(FundamentalTensor { g, point: y.clone() })
}

/// The Cartan tensor `C = (1/4) d^3 F^2 = (1/2) d^3 E` at `y`.
pub fn cartan_tensor(spec: &NormSpec, y: &Point) -> Result<CartanTensorValue> {
    let j = spec.jet3(y)?;
    Ok(CartanTensorValue {
        n: j.n,
        c: j.t.iter().map(|v| 0.5 * v).collect(),
        point: y.clone(),
    })
}

/// Riemann curvature of the Hessian metric from the Cartan tensor:
/// `R_{ijkl} = C_{jls} g^{sr} C_{ikr} - C_{ils} g^{sr} C_{jkr}`.
pub fn curvature_tensor(spec: &NormSpec, y: &Point) -> Result<CurvatureTensor> {
    let c = cartan_tensor(spec, y)?;
    let g = fundamental_tensor(spec, y)?;
    let n = c.n;
    let ginv = g
        .g
        .clone()
        .cholesky()
        .ok_or_else(|| Error::NotPositiveDefinite("metric in curvature".into()))?
        .inverse();
    // b[(i,j,r)] = sum_s C_ijs g^{sr}
    let mut b = vec![0.0; n * n * n];
    for i in 0..n {
        for j in 0..n {
            for r in 0..n {
                let mut s_acc = 0.0;
                for s in 0..n {
                    s_acc += c.get(i, j, s) * ginv[(s, r)];
                }
                b[(i * n + j) * n + r] = s_acc;
            }
        }
    }
    let bg = |i: usize, j: usize, r: usize| b[(i * n + j) * n + r];
    let mut out = vec![0.0; n * n * n * n];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let mut acc = 0.0;
                    for r in 0..n {
                        acc += bg(j, l, r) * c.get(i, k, r) - bg(i, l, r) * c.get(j, k, r);
                    }
                    out[((i * n + j) * n + k) * n + l] = acc;
                }
            }
        }
    }
    Ok(CurvatureTensor { n, r: out, point: y.clone() })
}

fn metric_at(spec: &NormSpec, x: &DVector<f64>) -> Result<DMatrix<f64>> {
    let j = spec.jet3(&Point::from_vector(x.clone())?)?;
    Ok(DMatrix::from_row_slice(j.n, j.n, &j.h))
}

/// Christoffel symbols of the second kind at `x`, with metric derivatives by
/// Richardson-extrapolated central differences of the exact Hessian.
fn christoffel(spec: &NormSpec, x: &DVector<f64>, h: f64) -> Result<Vec<DMatrix<f64>>> {
    let n = x.len();
    let g = metric_at(spec, x)?;
    let ginv = g
        .cholesky()
        .ok_or_else(|| Error::NotPositiveDefinite("metric in Christoffel stencil".into()))?
        .inverse();
    // dg[m] = partial_m g
    let mut dg = Vec::with_capacity(n);
    for m in 0..n {
        let diff = |step: f64| -> Result<DMatrix<f64>> {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[m] += step;
            xm[m] -= step;
            Ok((metric_at(spec, &xp)? - metric_at(spec, &xm)?) / (2.0 * step))
        };
        let d_h = diff(h)?;
        let d_h2 = diff(h / 2.0)?;
        dg.push((d_h2 * 4.0 - d_h) / 3.0);
    }
    // Gamma^l_ij = (1/2) g^{lk} (d_i g_jk + d_j g_ik - d_k g_ij)
    let mut gamma: Vec<DMatrix<f64>> = (0..n).map(|_| DMatrix::zeros(n, n)).collect();
    for i in 0..n {
        for j in 0..n {
            for l in 0..n {
                let mut acc = 0.0;
                for k in 0..n {
                    acc += ginv[(l, k)] * (dg[i][(j, k)] + dg[j][(i, k)] - dg[k][(i, j)]);
                }
                gamma[l][(i, j)] = 0.5 * acc;
            }
        }
    }
    Ok(gamma)
}

/// Finite-difference Riemann tensor (cross-validation oracle): Christoffel
/// symbols by central differences, then the coordinate curvature formula
/// `R^l_{kij} = d_i Gamma^l_{jk} - d_j Gamma^l_{ik} + Gamma^l_{is}Gamma^s_{jk}
///  - Gamma^l_{js}Gamma^s_{ik}`, lowered with `g`.
pub fn fd_riemann_oracle(spec: &NormSpec, y: &Point, h: f64) -> Result<CurvatureTensor> {
    let n = y.dim();
    let x = y.coords().clone();
    let g = metric_at(spec, &x)?;
    let gamma0 = christoffel(spec, &x, h)?;
    // outer derivative of Gamma with a wider, Richardson-extrapolated stencil
    let big_h = 10.0 * h;
    let mut dgamma = Vec::with_capacity(n);
    for m in 0..n {
        let diff = |step: f64| -> Result<Vec<DMatrix<f64>>> {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[m] += step;
            xm[m] -= step;
            let gp = christoffel(spec, &xp, h)?;
            let gm = christoffel(spec, &xm, h)?;
            Ok(gp
                .into_iter()
                .zip(gm)
                .map(|(a, b)| (a - b) / (2.0 * step))
                .collect())
        };
        let d1 = diff(big_h)?;
        let d2 = diff(big_h / 2.0)?;
        dgamma.push(
            d1.into_iter()
                .zip(d2)
                .map(|(a, b)| (b * 4.0 - a) / 3.0)
                .collect::<Vec<_>>(),
        );
    }
    let mut out = vec![0.0; n * n * n * n];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l_up in 0..n {
                    let mut r_up = dgamma[i][l_up][(j, k)] - dgamma[j][l_up][(i, k)];
                    for s in 0..n {
                        r_up += gamma0[l_up][(i, s)] * gamma0[s][(j, k)]
                            - gamma0[l_up][(j, s)] * gamma0[s][(i, k)];
                    }
                    for l in 0..n {
                        out[((i * n + j) * n + k) * n + l] += g[(l, l_up)] * r_up;
                    }
                }
            }
        }
    }
    Ok(CurvatureTensor { n, r: out, point: y.clone() })
}

/// Default oracle step: `1e-4 * |y|`.
pub fn fd_default_step(y: &Point) -> f64 {
    1e-4 * y.euclidean_norm()
}

/// Sectional curvature of the plane spanned by `u, v` at `y`.
pub fn sectional_curvature(spec: &NormSpec, y: &Point, u: &[f64], v: &[f64]) -> Result<f64> {
    let n = y.dim();
    if u.len() != n || v.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: u.len().min(v.len()) });
    }
    let r = curvature_tensor(spec, y)?;
    let g = fundamental_tensor(spec, y)?.g;
    let quad = |a: &[f64], b: &[f64]| -> f64 {
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                acc += g[(i, j)] * a[i] * b[j];
            }
        }
        acc
    };
    let (guu, gvv, guv) = (quad(u, u), quad(v, v), quad(u, v));
    let denom = guu * gvv - guv * guv;
    if denom < 1e-12 * guu * gvv {
        return Err(Error::DegeneratePlane);
    }
    let mut num = 0.0;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    num += r.get(i, j, k, l) * u[i] * v[j] * v[k] * u[l];
                }
            }
        }
    }
    Ok(num / denom)
}

/// Sectional curvature of the indicatrix (as a hypersurface with the induced
/// metric) for a plane tangent to it at `y`, via the cone relation
/// `K_ind = 1 + F(y)^2 * K_ambient`.
pub fn indicatrix_sectional(spec: &NormSpec, y: &Point, u: &[f64], v: &[f64]) -> Result<f64> {
    let k_amb = sectional_curvature(spec, y, u, v)?;
    let e = spec.eval_e(y)?;
    Ok(1.0 + 2.0 * e * k_amb)
}

/// Residual of the cone decomposition `g = (dF)^2 + F^2 g|_{S_F}`: decompose
/// each pair of basis vectors into radial and indicatrix-tangent parts and
/// compare both sides; returns the max mismatch relative to the metric scale.
pub fn cone_decomposition_residual(spec: &NormSpec, y: &Point) -> Result<f64> {
    let j = spec.jet3(y)?;
    let n = j.n;
    let f = (2.0 * j.v).sqrt();
    let x = y.as_slice();
    // dF = grad E / F
    let df: Vec<f64> = j.g.iter().map(|gi| gi / f).collect();
    let gmat = |a: &[f64], b: &[f64]| -> f64 {
        let mut acc = 0.0;
        for i in 0..n {
            for k in 0..n {
                acc += j.hess(i, k) * a[i] * b[k];
            }
        }
        acc
    };
    let scale = j.h.iter().fold(0.0f64, |m, v| m.max(v.abs())) + 1e-300;
    let mut worst: f64 = 0.0;
    let mut basis = Vec::with_capacity(n);
    for i in 0..n {
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        // tangential part: subtract the radial component measured by dF
        let alpha: f64 = (0..n).map(|k| df[k] * e[k]).sum::<f64>() / f;
        let tangent: Vec<f64> = (0..n).map(|k| e[k] - alpha * x[k]).collect();
        basis.push((e, tangent));
    }
    for (ei, ti) in &basis {
        for (ek, tk) in &basis {
            let dfi: f64 = (0..n).map(|m| df[m] * ei[m]).sum();
            let dfk: f64 = (0..n).map(|m| df[m] * ek[m]).sum();
            let lhs = gmat(ei, ek);
            let rhs = dfi * dfk + gmat(ti, tk);
            worst = worst.max((lhs - rhs).abs());
        }
    }
    Ok(worst / scale)
}

/// Residual of the radial-geodesic property: the Christoffel contraction
/// `Gamma(y)(y, y)` should vanish (rays are geodesics).  Uses the
/// finite-difference Christoffels so the check is independent of the
/// Cartan-tensor identity it reflects.
pub fn radial_geodesic_residual(spec: &NormSpec, y: &Point, h: f64) -> Result<f64> {
    let n = y.dim();
    let gamma = christoffel(spec, y.coords(), h)?;
    let x = y.as_slice();
    let mut worst: f64 = 0.0;
    let mut gscale: f64 = 0.0;
    for l in 0..n {
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                acc += gamma[l][(i, j)] * x[i] * x[j];
                gscale = gscale.max(gamma[l][(i, j)].abs());
            }
        }
        worst = worst.max(acc.abs());
    }
    let y2 = y.coords().norm_squared();
    Ok(worst / (gscale * y2 + 1e-300))
}

/// CSV dump of a symmetric matrix tensor: rows `i,j,value`.
pub fn matrix_csv(g: &DMatrix<f64>) -> String {
    let mut s = String::from("i,j,value\n");
    for i in 0..g.nrows() {
        for j in 0..g.ncols() {
            s.push_str(&format!("{i},{j},{:.17e}\n", g[(i, j)]));
        }
    }
    s
}

/// CSV dump of the Cartan tensor: rows `i,j,k,value`.
pub fn cartan_csv(c: &CartanTensorValue) -> String {
    let n = c.n;
    let mut s = String::from("i,j,k,value\n");
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                s.push_str(&format!("{i},{j},{k},{:.17e}\n", c.get(i, j, k)));
            }
        }
    }
    s
}

/// CSV dump of the curvature tensor: rows `i,j,k,l,value`.
pub fn curvature_csv(r: &CurvatureTensor) -> String {
    let n = r.n;
    let mut s = String::from("i,j,k,l,value\n");
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    s.push_str(&format!("{i},{j},{k},{l},{:.17e}\n", r.get(i, j, k, l)));
                }
            }
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::norms::{Period, ProfileFunction};

    fn pt(c: &[f64]) -> Point {
        Point::new(c.to_vec()).unwrap()
    }

    fn sample_randers() -> NormSpec {
        NormSpec::Randers {
            alpha: DMatrix::identity(3, 3),
            beta: DVector::from_vec(vec![0.3, 0.1, 0.0]),
        }
    }

    fn wavy_profile() -> NormSpec {
        NormSpec::Profile {
            k: 1,
            n: 3,
            f: ProfileFunction::TrigPoly {
                cos: vec![1.0, 0.0, 0.0, 0.0, 0.1],
                sin: vec![],
                period: Period::TwoPi,
            },
            theta_range: None,
        }
    }

    #[test]
    fn euclidean_tensors_are_trivial() {
        let a = DMatrix::from_row_slice(3, 3, &[2.0, 0.3, 0.0, 0.3, 1.5, 0.1, 0.0, 0.1, 1.0]);
        let spec = NormSpec::Euclidean { a: a.clone() };
        let y = pt(&[0.2, 1.0, -0.7]);
        let g = fundamental_tensor(&spec, &y).unwrap();
        assert!((&g.g - &a).abs().max() < 1e-14);
        assert!(cartan_tensor(&spec, &y).unwrap().max_abs() == 0.0);
        assert!(curvature_tensor(&spec, &y).unwrap().max_abs() == 0.0);
        let r = fd_riemann_oracle(&spec, &y, fd_default_step(&y)).unwrap();
        assert!(r.max_abs() < 1e-8);
    }

    #[test]
    fn metric_reproduces_norm_square() {
        let spec = sample_randers();
        let y = pt(&[0.6, 0.8, 0.0]);
        let g = fundamental_tensor(&spec, &y).unwrap().g;
        let gyy = (y.coords().transpose() * &g * y.coords())[(0, 0)];
        let f2 = 2.0 * spec.eval_e(&y).unwrap();
        assert!((gyy - f2).abs() < 1e-12 * f2);
    }

    #[test]
    fn cartan_annihilates_position() {
        for spec in [sample_randers(), wavy_profile()] {
            let y = pt(&[0.5, -0.7, 0.9]);
            let c = cartan_tensor(&spec, &y).unwrap();
            assert!(c.contract_max(y.as_slice()) <= 1e-10 * (c.max_abs() + 1e-300));
        }
    }

    #[test]
    fn curvature_matches_fd_oracle() {
        for spec in [sample_randers(), wavy_profile()] {
            for y in [pt(&[0.6, 0.8, 0.3]), pt(&[-0.4, 1.1, 0.5])] {
                let r = curvature_tensor(&spec, &y).unwrap();
                let r_fd = fd_riemann_oracle(&spec, &y, fd_default_step(&y)).unwrap();
                let diff = r.relative_difference(&r_fd);
                assert!(diff < 1e-4, "relative difference {diff} for {spec:?}");
                assert!(r.symmetry_residual() < 1e-9);
                assert!(r.bianchi_residual() < 1e-9);
            }
        }
    }

    #[test]
    fn two_dimensional_norms_are_flat() {
        let spec = NormSpec::Randers {
            alpha: DMatrix::from_row_slice(2, 2, &[1.3, 0.2, 0.2, 0.9]),
            beta: DVector::from_vec(vec![0.2, -0.3]),
        };
        for y in [pt(&[1.0, 0.2]), pt(&[-0.4, 0.8]), pt(&[0.3, -1.1])] {
            let r = curvature_tensor(&spec, &y).unwrap();
            let scale = cartan_tensor(&spec, &y).unwrap().max_abs().powi(2) + 1e-300;
            assert!(r.max_abs() < 1e-9 * scale, "2-D curvature {}", r.max_abs());
        }
    }

    #[test]
    fn flat_profile_family_is_flat() {
        let spec = NormSpec::Profile {
            k: 1,
            n: 3,
            f: ProfileFunction::double_angle(1.0, 0.3, 0.0),
            theta_range: None,
        };
        let y = pt(&[0.5, 0.6, 0.4]);
        let r = curvature_tensor(&spec, &y).unwrap();
        assert!(r.max_abs() < 1e-12);
        let r_fd = fd_riemann_oracle(&spec, &y, fd_default_step(&y)).unwrap();
        assert!(r_fd.max_abs() < 1e-6);
    }

    #[test]
    fn sectional_curvature_examples() {
        let spec = NormSpec::euclidean_identity(3);
        let y = pt(&[0.3, 0.5, 0.8]);
        let k = sectional_curvature(&spec, &y, &[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]).unwrap();
        assert_eq!(k, 0.0);
        // degenerate plane rejected
        assert!(matches!(
            sectional_curvature(&spec, &y, &[1.0, 0.0, 0.0], &[1.0, 1e-9, 0.0]),
            Err(Error::DegeneratePlane)
        ));
        // flat ambient: indicatrix (the round sphere here) has curvature 1
        let u = [0.0, 0.8, -0.5];
        let v = [0.5, 0.0, 0.3];
        let k_ind = indicatrix_sectional(&spec, &pt(&[0.6, 0.0, 0.8]), &u, &v).unwrap();
        assert!((k_ind - 1.0).abs() < 1e-12);
        // non-Euclidean profile: ambient curvature nonzero at a generic point
        let spec = wavy_profile();
        let y = pt(&[0.9, 0.4, 0.2]);
        let k = sectional_curvature(&spec, &y, &[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]).unwrap();
        assert!(k.abs() > 1e-6, "expected nonzero sectional curvature, got {k}");
    }

    #[test]
    fn cone_decomposition_residuals() {
        assert!(
            cone_decomposition_residual(&NormSpec::euclidean_identity(3), &pt(&[0.3, 0.4, 1.0]))
                .unwrap()
                < 1e-12
        );
        assert!(cone_decomposition_residual(&sample_randers(), &pt(&[0.7, -0.2, 0.5])).unwrap() < 1e-9);
        assert!(cone_decomposition_residual(&wavy_profile(), &pt(&[0.7, 0.2, 0.5])).unwrap() < 1e-9);
    }

    #[test]
    fn rays_are_geodesics() {
        for spec in [sample_randers(), wavy_profile()] {
            let y = pt(&[0.8, 0.5, -0.3]);
            let res = radial_geodesic_residual(&spec, &y, fd_default_step(&y)).unwrap();
            assert!(res < 1e-8, "radial residual {res}");
        }
    }

    #[test]
    fn csv_dumps_have_expected_shape() {
        let spec = sample_randers();
        let y = pt(&[0.6, 0.8, 0.1]);
        let g = fundamental_tensor(&spec, &y).unwrap();
        assert_eq!(matrix_csv(&g.g).lines().count(), 1 + 9);
        let c = cartan_tensor(&spec, &y).unwrap();
        assert_eq!(cartan_csv(&c).lines().count(), 1 + 27);
        let r = curvature_tensor(&spec, &y).unwrap();
        assert_eq!(curvature_csv(&r).lines().count(), 1 + 81);
    }
}
