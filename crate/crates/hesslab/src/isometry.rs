//! Classification engine for orbit-preserving Hessian isometries of
//! block-rotation invariant norms.
//!
//! An orbit-preserving isometry is presented in spherical coordinates by an
//! angle map `theta(t)`, a radial scaling, and fixed orthogonal rotations of
//! the two sphere factors.  The angle map satisfies a quadratic equation in
//! `dtheta/dt` whose two roots are the linear branch and the Legendre branch;
//! the classifier fits sampled angle data against the two branches.

use crate::error::{Error, Result};
use crate::jet::Jet1;
use crate::norms::{legendre_image_jets, HermiteTable, ProfileFunction};
use crate::profile::{genericity_condition, SphericalPoint};
use nalgebra::{DMatrix, DVector};
use std::f64::consts::PI;

/// A candidate orbit-preserving Hessian isometry.
#[derive(Debug, Clone)]
pub enum IsometryModel {
    /// linear map; `params = (a, b)` when the map is `diag(a, b, ..., b)`
    Linear {
        matrix: DMatrix<f64>,
        params: Option<(f64, f64)>,
    },
    /// Legendre transform of `base` followed by `diag(a, b, ..., b)`
    Legendre {
        base: crate::norms::NormSpec,
        a: f64,
        b: f64,
    },
    /// different models on disjoint parameter bands
    Glued(Vec<((f64, f64), IsometryModel)>),
    Numeric(NumericModel),
}

/// Sampled presentation of an orbit-preserving map: the angle map, the radial
/// scaling factors, the image profile when known, and the sphere-factor
/// rotations.
#[derive(Debug, Clone)]
pub struct NumericModel {
    pub ts: Vec<f64>,
    pub thetas: Vec<f64>,
    pub dthetas: Vec<f64>,
    /// image radius divided by source radius at each sample
    pub rho_hats: Vec<f64>,
    pub h: Option<ProfileFunction>,
    pub block1: Option<DMatrix<f64>>,
    pub block2: Option<DMatrix<f64>>,
}

impl NumericModel {
    pub fn check_monotone(&self) -> Result<()> {
        for (i, d) in self.dthetas.iter().enumerate() {
            if d.abs() < 1e-12 {
                return Err(Error::Indeterminate(format!(
                    "dtheta/dt vanishes at sample {} (t = {})",
                    i, self.ts[i]
                )));
            }
        }
        Ok(())
    }
}

/// Angle map of the axis-aligned linear example `diag(a, b, ..., b)`:
/// `theta = arccos(a cos t / sqrt(a^2 cos^2 t + b^2 sin^2 t))`, computed via
/// `atan2` so that a negative `a` is handled without sign branches.
pub fn linear_theta(a: f64, b: f64, t: f64) -> f64 {
    (b * t.sin()).atan2(a * t.cos())
}

/// Order-4 jet in `t` of [`linear_theta`].
pub fn linear_theta_jet(a: f64, b: f64, t: f64) -> Result<Jet1> {
    let tj = Jet1::var(t);
    tj.sin().scale(b).atan2(tj.cos().scale(a))
}

/// Angle map of the Legendre example: the angle of
/// `diag(a, b, ..., b) grad E` on the unit ray at angle `t`.
pub fn legendre_theta(f: &ProfileFunction, a: f64, b: f64, t: f64) -> Result<f64> {
    Ok(legendre_image_jets(f, a, b, t)?.0.v)
}

/// Order-3 jet in `t` of [`legendre_theta`] (the top coefficient is NaN).
pub fn legendre_theta_jet(f: &ProfileFunction, a: f64, b: f64, t: f64) -> Result<Jet1> {
    Ok(legendre_image_jets(f, a, b, t)?.0)
}

/// The unique root `t'` of `-sin(t) f'(t) + 2 cos(t) f(t) = 0` in `(0, pi)`,
/// where the radial component of the gradient on the unit ray vanishes.
pub fn find_t_prime(f: &ProfileFunction) -> Result<f64> {
    let radial = |t: f64| -> Result<f64> {
        let [f0, f1, _, _] = f.derivs3(t)?;
        Ok(-t.sin() * f1 + 2.0 * t.cos() * f0)
    };
    let grid = 512;
    let eps = 1e-9;
    let mut lo = eps;
    let mut flo = radial(lo)?;
    let mut bracket = None;
    for i in 1..=grid {
        let hi = eps + (PI - 2.0 * eps) * i as f64 / grid as f64;
        let fhi = radial(hi)?;
        if flo == 0.0 {
            return Ok(lo);
        }
        if flo * fhi < 0.0 {
            bracket = Some((lo, hi, flo));
            break;
        }
        lo = hi;
        flo = fhi;
    }
    let (mut lo, mut hi, mut flo) = bracket.ok_or_else(|| {
        Error::BracketFailed("radial gradient component has no sign change in (0, pi)".into())
    })?;
    while hi - lo > 1e-13 {
        let mid = 0.5 * (lo + hi);
        let fm = radial(mid)?;
        if (fm > 0.0) == (flo > 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// The quadratic `A s^2 + B s + C = 0` satisfied by `s = dtheta/dt` for any
/// orbit-preserving Hessian isometry, evaluated at `(t, theta)`.
#[derive(Debug, Clone)]
pub struct BranchODEs {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    /// (linear-branch root, Legendre-branch root)
    pub roots: (f64, f64),
    pub discriminant: f64,
}

impl BranchODEs {
    pub fn residual(&self, s: f64) -> f64 {
        self.a * s * s + self.b * s + self.c
    }
}

pub fn branch_quadratic(f: &ProfileFunction, t: f64, theta: f64) -> Result<BranchODEs> {
    let [f0, f1, f2, _] = f.derivs3(t)?;
    let (sn, cs) = t.sin_cos();
    let (sq, cq) = theta.sin_cos();
    if f0 <= 0.0 {
        return Err(Error::Domain(format!("profile non-positive at t = {t}")));
    }
    if (cs * sn).abs() < 1e-12 || (cq * sq).abs() < 1e-12 {
        return Err(Error::Domain(format!(
            "branch quadratic is singular at t = {t}, theta = {theta}"
        )));
    }
    // tangential and (negated) radial gradient factors on the unit ray
    let p_plus = cs * f1 + 2.0 * sn * f0;
    let p_minus = sn * f1 - 2.0 * cs * f0;
    let a = cs * sn * p_plus * p_minus / (2.0 * f0 * f0 * cq * cq * sq * sq);
    let b = (cs * sn * f2 / f0 - cs * sn * f1 * f1 / (f0 * f0)
        + (cs * cs - sn * sn) * f1 / f0
        + 4.0 * cs * sn)
        / (cq * sq);
    let c = -f2 / f0 + f1 * f1 / (2.0 * f0 * f0) - 2.0;
    let s_linear = cq * sq / (cs * sn);
    let s_legendre = if p_plus.abs() * p_minus.abs() < 1e-14 * f0 * f0 {
        return Err(Error::Domain(format!(
            "Legendre-branch root is singular at t = {t} (gradient factor vanishes)"
        )));
    } else {
        (-2.0 * f0 * f2 + f1 * f1 - 4.0 * f0 * f0) * cq * sq / (p_plus * p_minus)
    };
    Ok(BranchODEs {
        a,
        b,
        c,
        roots: (s_linear, s_legendre),
        discriminant: b * b - 4.0 * a * c,
    })
}

/// Closed form of the discriminant of [`branch_quadratic`]: the square of the
/// genericity value divided by `f cos(theta) sin(theta)`.
pub fn discriminant_closed_form(f: &ProfileFunction, t: f64, theta: f64) -> Result<f64> {
    let [f0, f1, f2, _] = f.derivs3(t)?;
    let (sn, cs) = t.sin_cos();
    let root = (cs * sn * f2 + (sn * sn - cs * cs) * f1) / (f0 * theta.cos() * theta.sin());
    Ok(root * root)
}

/// Right-hand side of the linear-branch ODE `dtheta/dt`.
pub fn ode_linear_rhs(t: f64, theta: f64) -> f64 {
    theta.sin() * theta.cos() / (t.sin() * t.cos())
}

/// Right-hand side of the Legendre-branch ODE `dtheta/dt`.
pub fn ode_legendre_rhs(f: &ProfileFunction, t: f64, theta: f64) -> Result<f64> {
    let [f0, f1, f2, _] = f.derivs3(t)?;
    let (sn, cs) = t.sin_cos();
    let denom = (cs * f1 + 2.0 * sn * f0) * (-sn * f1 + 2.0 * cs * f0);
    if denom.abs() < 1e-14 * f0 * f0 {
        return Err(Error::Domain(format!(
            "Legendre ODE singular at t = {t} (gradient factor vanishes)"
        )));
    }
    Ok((2.0 * f0 * f2 - f1 * f1 + 4.0 * f0 * f0) * theta.sin() * theta.cos() / denom)
}

// Cash-Karp embedded Runge-Kutta step for a 2-state system.
fn rk_step(
    rhs: &dyn Fn(f64, [f64; 2]) -> Result<[f64; 2]>,
    x: f64,
    y: [f64; 2],
    h: f64,
) -> Result<([f64; 2], f64)> {
    const A: [f64; 5] = [0.2, 0.3, 0.6, 1.0, 0.875];
    const B: [[f64; 5]; 5] = [
        [0.2, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0],
        [0.3, -0.9, 1.2, 0.0, 0.0],
        [-11.0 / 54.0, 2.5, -70.0 / 27.0, 35.0 / 27.0, 0.0],
        [
            1631.0 / 55296.0,
            175.0 / 512.0,
            575.0 / 13824.0,
            44275.0 / 110592.0,
            253.0 / 4096.0,
        ],
    ];
    const C: [f64; 6] = [37.0 / 378.0, 0.0, 250.0 / 621.0, 125.0 / 594.0, 0.0, 512.0 / 1771.0];
    const DC: [f64; 6] = [
        37.0 / 378.0 - 2825.0 / 27648.0,
        0.0,
        250.0 / 621.0 - 18575.0 / 48384.0,
        125.0 / 594.0 - 13525.0 / 55296.0,
        -277.0 / 14336.0,
        512.0 / 1771.0 - 0.25,
    ];
    let mut k = [[0.0; 2]; 6];
    k[0] = rhs(x, y)?;
    for i in 0..5 {
        let mut yi = y;
        for j in 0..=i {
            yi[0] += h * B[i][j] * k[j][0];
            yi[1] += h * B[i][j] * k[j][1];
        }
        k[i + 1] = rhs(x + A[i] * h, yi)?;
    }
    let mut out = y;
    let mut diff = [0.0f64; 2];
    for (i, ki) in k.iter().enumerate() {
        out[0] += h * C[i] * ki[0];
        out[1] += h * C[i] * ki[1];
        diff[0] += h * DC[i] * ki[0];
        diff[1] += h * DC[i] * ki[1];
    }
    Ok((out, diff[0].abs().max(diff[1].abs())))
}

// Adaptive integration of a 2-state system from x0 to x1 (either direction).
fn rk_integrate(
    rhs: &dyn Fn(f64, [f64; 2]) -> Result<[f64; 2]>,
    x0: f64,
    y0: [f64; 2],
    x1: f64,
    tol: f64,
) -> Result<[f64; 2]> {
    let span = x1 - x0;
    if span == 0.0 {
        return Ok(y0);
    }
    let mut x = x0;
    let mut y = y0;
    let mut h = span / 16.0;
    let mut steps = 0usize;
    // terminate once the remaining distance is below an ulp of the abscissa
    let done_tol = (f64::EPSILON * 8.0) * x1.abs().max(1.0);
    while (x1 - x) * span.signum() > done_tol {
        if (x1 - x).abs() < h.abs() {
            h = x1 - x;
        }
        let (y_new, err) = rk_step(rhs, x, y, h)?;
        // error per unit step, so the global error stays ~ tol * |span|
        let budget = tol * h.abs();
        if err < budget {
            x += h;
            y = y_new;
            h *= (budget / err.max(1e-300)).powf(0.2).min(4.0);
        } else {
            h *= (budget / err).powf(0.25).max(0.1);
        }
        steps += 1;
        if steps > 2_000_000 {
            return Err(Error::Integration(format!(
                "step budget exhausted near x = {x} (h = {h:.3e}, target {x1})"
            )));
        }
    }
    Ok(y)
}

/// Integrate the image profile `h(theta)` along an orbit of the angle map.
///
/// `theta_map(t)` returns `(theta, dtheta/dt)`.  The logarithmic derivative
/// of `h` along the orbit follows from the energy identity
/// `f(t) = rho_hat(t)^2 h(theta(t))` together with the tangential component
/// of the isometry equation; it reduces to the quadrature
/// `d ln h / d theta = G(t, theta)` with
/// `G = (2 sin^2 t + sin t cos t f'/f) / (sin theta cos theta) - 2 tan theta`.
/// The result is returned as a dense cubic Hermite table over `theta` with
/// exact knot derivatives.
pub fn solve_h(
    f: &ProfileFunction,
    theta_map: &dyn Fn(f64) -> Result<(f64, f64)>,
    band: (f64, f64),
    t0: f64,
    h0: f64,
) -> Result<ProfileFunction> {
    if h0 <= 0.0 {
        return Err(Error::NonPositiveH(h0));
    }
    if !(band.0 < t0 && t0 < band.1) {
        return Err(Error::Domain(format!("t0 = {t0} outside band {band:?}")));
    }
    let g_fun = |t: f64, theta: f64| -> Result<f64> {
        let [f0, f1, _, _] = f.derivs3(t)?;
        let (sn, cs) = t.sin_cos();
        let (sq, cq) = theta.sin_cos();
        if (sq * cq).abs() < 1e-12 {
            return Err(Error::Integration(format!(
                "image angle hits pi/2 inside the band (theta = {theta})"
            )));
        }
        Ok((2.0 * sn * sn + cs * sn * f1 / f0) / (sq * cq) - 2.0 * sq / cq)
    };
    // total derivative of G along the orbit, for exact knot second derivatives
    let g_theta_deriv = |t: f64, theta: f64, dtheta: f64| -> Result<f64> {
        let [f0, f1, f2, _] = f.derivs3(t)?;
        let (sn, cs) = t.sin_cos();
        let (sq, cq) = theta.sin_cos();
        let u = 2.0 * sn * sn + cs * sn * f1 / f0;
        let du = 4.0 * sn * cs
            + (cs * cs - sn * sn) * f1 / f0
            + cs * sn * (f2 / f0 - (f1 / f0) * (f1 / f0));
        let dg_dtheta = -u * (2.0 * theta).cos() / (sq * cq * sq * cq) - 2.0 / (cq * cq);
        Ok(dg_dtheta + du / (sq * cq) / dtheta)
    };
    // state in the theta variable: y = [t, ln h]
    let rhs = |theta: f64, y: [f64; 2]| -> Result<[f64; 2]> {
        let (_, dtheta) = theta_map(y[0])?;
        if dtheta.abs() < 1e-12 {
            return Err(Error::Integration(format!(
                "dtheta/dt vanishes at t = {}",
                y[0]
            )));
        }
        Ok([1.0 / dtheta, g_fun(y[0], theta)?])
    };
    let (theta_a, _) = theta_map(band.0)?;
    let (theta_b, _) = theta_map(band.1)?;
    let (theta0, _) = theta_map(t0)?;
    let (theta_lo, theta_hi) = (theta_a.min(theta_b), theta_a.max(theta_b));
    if theta_hi - theta_lo < 1e-6 {
        return Err(Error::Integration("image angle band is degenerate".into()));
    }
    let tol = 1e-10;
    // march to the low end of the image band, then sweep upward knot by knot
    let mut state = rk_integrate(&rhs, theta0, [t0, h0.ln()], theta_lo, tol)?;
    let knots = ((theta_hi - theta_lo) / 1e-3).ceil() as usize + 1;
    let dt = (theta_hi - theta_lo) / knots as f64;
    let mut values = Vec::with_capacity(knots + 1);
    let mut derivs = Vec::with_capacity(knots + 1);
    let mut second = Vec::with_capacity(knots + 1);
    let mut theta = theta_lo;
    for i in 0..=knots {
        let h = state[1].exp();
        if !h.is_finite() || h <= 0.0 {
            return Err(Error::NonPositiveH(h));
        }
        let g = g_fun(state[0], theta)?;
        let (_, dtheta) = theta_map(state[0])?;
        values.push(h);
        derivs.push(h * g);
        second.push(h * (g * g + g_theta_deriv(state[0], theta, dtheta)?));
        if i < knots {
            let next = theta_lo + dt * (i + 1) as f64;
            state = rk_integrate(&rhs, theta, state, next, tol)?;
            theta = next;
        }
    }
    Ok(ProfileFunction::Tabulated(HermiteTable {
        t0: theta_lo,
        dt,
        values,
        derivs,
        second: Some(second),
    }))
}

/// One sample of an angle map: parameter, image angle, and its derivative.
#[derive(Debug, Clone, Copy)]
pub struct ThetaSample {
    pub t: f64,
    pub theta: f64,
    pub dtheta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Linear,
    Legendre,
}

#[derive(Debug, Clone)]
pub enum Classification {
    Linear { a: f64, b: f64 },
    Legendre { a: f64, b: f64 },
    Glued { segments: Vec<(f64, f64, Branch)> },
    Indeterminate,
}

fn median(xs: &mut Vec<f64>) -> f64 {
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let m = xs.len();
    if m % 2 == 1 {
        xs[m / 2]
    } else {
        0.5 * (xs[m / 2 - 1] + xs[m / 2])
    }
}

// Ratio a/b of the linear example reproducing (t, theta): tan(theta) = (b/a) tan(t).
fn linear_ratio(t: f64, theta: f64) -> f64 {
    t.tan() / theta.tan()
}

// Ratio a/b of the Legendre example reproducing (t, theta).
fn legendre_ratio(f: &ProfileFunction, t: f64, theta: f64) -> Result<f64> {
    let [f0, f1, _, _] = f.derivs3(t)?;
    let n = 2.0 * f0 * t.cos() - f1 * t.sin();
    let q = 2.0 * f0 * t.sin() + f1 * t.cos();
    Ok(q / (n * theta.tan()))
}

/// Fit sampled angle data against the two root branches of the quadratic.
///
/// Returns `Linear`/`Legendre` with the parameter pair normalised to `b = 1`
/// (the angle map only determines the ratio `a/b`), `Glued` when the winning
/// branch changes along the band, and `Indeterminate` when neither branch
/// fits cleanly.  Samples too close to `pi/2`, to `t'`, or to a zero of the
/// genericity value are skipped.
pub fn classify(
    f: &ProfileFunction,
    samples: &[ThetaSample],
    band: (f64, f64),
    accept: f64,
    reject: f64,
) -> Result<Classification> {
    let t_prime = find_t_prime(f).unwrap_or(PI / 2.0);
    let f_scale = f.eval(PI / 2.0)?.abs().max(1e-6);
    let mut usable: Vec<(ThetaSample, Branch, f64)> = Vec::new();
    let mut generic_seen = false;
    let mut n_in_band = 0usize;
    for s in samples {
        if s.t <= band.0 || s.t >= band.1 {
            continue;
        }
        n_in_band += 1;
        if (s.t - PI / 2.0).abs() < 0.02
            || (s.t - t_prime).abs() < 0.02
            || (s.theta - PI / 2.0).abs() < 0.02
        {
            continue;
        }
        if genericity_condition(f, s.t)?.abs() < 1e-8 * f_scale {
            continue;
        }
        generic_seen = true;
        let q = match branch_quadratic(f, s.t, s.theta) {
            Ok(q) => q,
            Err(Error::Domain(_)) => continue,
            Err(e) => return Err(e),
        };
        let r1 = (s.dtheta - q.roots.0).abs() / (1.0 + q.roots.0.abs());
        let r2 = (s.dtheta - q.roots.1).abs() / (1.0 + q.roots.1.abs());
        let (winner, win, lose) = if r1 <= r2 {
            (Branch::Linear, r1, r2)
        } else {
            (Branch::Legendre, r2, r1)
        };
        if win < accept && lose > reject {
            usable.push((*s, winner, win));
        }
    }
    if n_in_band < 8 {
        return Err(Error::InsufficientSamples {
            need: 8,
            got: n_in_band,
        });
    }
    if !generic_seen {
        return Err(Error::Indeterminate(
            "genericity value vanishes on the whole band; use the flat-regime classifier".into(),
        ));
    }
    if usable.len() < 8 {
        return Ok(Classification::Indeterminate);
    }
    let runs: Vec<(f64, f64, Branch)> = {
        let mut runs = Vec::new();
        let mut start = usable[0].0.t;
        let mut prev = usable[0].0.t;
        let mut branch = usable[0].1;
        for (s, w, _) in usable.iter().skip(1) {
            if *w != branch {
                runs.push((start, prev, branch));
                start = s.t;
                branch = *w;
            }
            prev = s.t;
        }
        runs.push((start, prev, branch));
        runs
    };
    if runs.len() > 1 {
        return Ok(Classification::Glued { segments: runs });
    }
    match runs[0].2 {
        Branch::Linear => {
            let mut ratios: Vec<f64> = usable
                .iter()
                .map(|(s, _, _)| linear_ratio(s.t, s.theta))
                .collect();
            Ok(Classification::Linear {
                a: median(&mut ratios),
                b: 1.0,
            })
        }
        Branch::Legendre => {
            let mut ratios = Vec::with_capacity(usable.len());
            for (s, _, _) in &usable {
                ratios.push(legendre_ratio(f, s.t, s.theta)?);
            }
            Ok(Classification::Legendre {
                a: median(&mut ratios),
                b: 1.0,
            })
        }
    }
}

/// Classifier for the flat regime, where the genericity value vanishes
/// identically on the band, the two branches merge, and the norm must be
/// Euclidean there.  Verifies the `f = c1 + c2 cos(2t)` fit and the merged
/// ODE, then recovers the axis-aligned linear model (ratio normalised to
/// `b = 1`).
pub fn classify_flat(
    f: &ProfileFunction,
    samples: &[ThetaSample],
    band: (f64, f64),
) -> Result<IsometryModel> {
    // least-squares fit of f to c1 + c2 cos(2t) on a dense band grid
    let m = 200;
    let mut a = DMatrix::zeros(m, 2);
    let mut rhs = DVector::zeros(m);
    for i in 0..m {
        let t = band.0 + (band.1 - band.0) * (i as f64 + 0.5) / m as f64;
        a[(i, 0)] = 1.0;
        a[(i, 1)] = (2.0 * t).cos();
        rhs[i] = f.eval(t)?;
    }
    let coef = a
        .clone()
        .svd(true, true)
        .solve(&rhs, 1e-14)
        .map_err(|e| Error::FitFailure(e.to_string()))?;
    let resid = (&a * &coef - &rhs).abs().max();
    let scale = rhs.abs().max().max(1e-6);
    if resid > 1e-8 * scale {
        return Err(Error::FitFailure(format!(
            "profile is not of the Euclidean form on the band (fit residual {resid:.3e})"
        )));
    }
    // the merged double root is the linear-branch ODE
    let mut ratios = Vec::new();
    for s in samples {
        if s.t <= band.0 || s.t >= band.1 {
            continue;
        }
        if (s.t - PI / 2.0).abs() < 0.02 || (s.theta - PI / 2.0).abs() < 0.02 {
            continue;
        }
        let rhs_val = ode_linear_rhs(s.t, s.theta);
        if (s.dtheta - rhs_val).abs() > 1e-6 * (1.0 + rhs_val.abs()) {
            return Err(Error::FitFailure(format!(
                "angle samples do not satisfy the merged ODE at t = {}",
                s.t
            )));
        }
        ratios.push(linear_ratio(s.t, s.theta));
    }
    if ratios.len() < 8 {
        return Err(Error::InsufficientSamples {
            need: 8,
            got: ratios.len(),
        });
    }
    let ratio = median(&mut ratios);
    let mut matrix = DMatrix::identity(3, 3);
    matrix[(0, 0)] = ratio;
    Ok(IsometryModel::Linear {
        matrix,
        params: Some((ratio, 1.0)),
    })
}

/// One sample of a full orbit-preserving map in spherical presentation.
#[derive(Debug, Clone)]
pub struct PolarMapSample {
    pub source: SphericalPoint,
    pub image: SphericalPoint,
}

// Orthogonal Procrustes fit: the orthogonal A minimising sum |A x_i - y_i|^2.
fn procrustes(xs: &[&[f64]], ys: &[&[f64]], dim: usize) -> DMatrix<f64> {
    let mut m: DMatrix<f64> = DMatrix::zeros(dim, dim);
    for (x, y) in xs.iter().zip(ys) {
        for i in 0..dim {
            for j in 0..dim {
                m[(i, j)] += y[i] * x[j];
            }
        }
    }
    let svd = m.svd(true, true);
    svd.u.unwrap() * svd.v_t.unwrap()
}

fn apply_mat(a: &DMatrix<f64>, x: &[f64]) -> Vec<f64> {
    (a * DVector::from_column_slice(x)).iter().copied().collect()
}

fn max_vec_err(a: &DMatrix<f64>, xs: &[&[f64]], ys: &[&[f64]]) -> f64 {
    xs.iter()
        .zip(ys)
        .map(|(x, y)| {
            apply_mat(a, x)
                .iter()
                .zip(y.iter())
                .map(|(p, q)| (p - q).abs())
                .fold(0.0, f64::max)
        })
        .fold(0.0, f64::max)
}

/// Split a sampled orbit-preserving map into a fixed orthogonal block action
/// on the sphere factors and a residual map of the `(r, t)` half-plane.
///
/// For `n = 2k` the block action may also swap the two factors; this is
/// detected and returned as an anti-diagonal block matrix, with the residual
/// map acting on the reflected parameter `pi/2 - t`.
pub fn decompose(samples: &[PolarMapSample], k: usize, n: usize) -> Result<(IsometryModel, NumericModel)> {
    if samples.len() < 3 {
        return Err(Error::InsufficientSamples {
            need: 3,
            got: samples.len(),
        });
    }
    let xs1: Vec<&[f64]> = samples.iter().map(|s| s.source.xi1.as_slice()).collect();
    let xs2: Vec<&[f64]> = samples.iter().map(|s| s.source.xi2.as_slice()).collect();
    let ys1: Vec<&[f64]> = samples.iter().map(|s| s.image.xi1.as_slice()).collect();
    let ys2: Vec<&[f64]> = samples.iter().map(|s| s.image.xi2.as_slice()).collect();
    let tol = 1e-8;

    let a1 = procrustes(&xs1, &ys1, k);
    let a2 = procrustes(&xs2, &ys2, n - k);
    let direct_err = max_vec_err(&a1, &xs1, &ys1).max(max_vec_err(&a2, &xs2, &ys2));

    let (block1, block2, swapped) = if direct_err < tol {
        (a1, a2, false)
    } else if n == 2 * k {
        // the factors may be exchanged: xi2 -> xi1', xi1 -> xi2'
        let b1 = procrustes(&xs2, &ys1, k);
        let b2 = procrustes(&xs1, &ys2, k);
        let swap_err = max_vec_err(&b1, &xs2, &ys1).max(max_vec_err(&b2, &xs1, &ys2));
        if swap_err < tol {
            (b1, b2, true)
        } else {
            return Err(Error::NotOrbitPreserving(format!(
                "no fixed block action fits (direct residual {direct_err:.3e}, swap residual {swap_err:.3e})"
            )));
        }
    } else {
        return Err(Error::NotOrbitPreserving(format!(
            "no fixed block action fits (residual {direct_err:.3e})"
        )));
    };

    // assemble the full orthogonal matrix
    let mut matrix = DMatrix::zeros(n, n);
    if swapped {
        matrix.view_mut((0, k), (k, k)).copy_from(&block1);
        matrix.view_mut((k, 0), (n - k, k)).copy_from(&block2);
    } else {
        matrix.view_mut((0, 0), (k, k)).copy_from(&block1);
        matrix.view_mut((k, k), (n - k, n - k)).copy_from(&block2);
    }

    // the residual map must send (r, t) to (rho, theta) independently of xi
    let mut rows: Vec<(f64, f64, f64)> = samples
        .iter()
        .map(|s| {
            let t_eff = if swapped { PI / 2.0 - s.source.theta } else { s.source.theta };
            (t_eff, s.image.theta, s.image.r / s.source.r)
        })
        .collect();
    rows.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut ts = Vec::new();
    let mut thetas = Vec::new();
    let mut rho_hats = Vec::new();
    for (t, theta, rho) in rows {
        if let Some(&last_t) = ts.last() {
            if (t - last_t as f64).abs() < 1e-10 {
                let lt = *thetas.last().unwrap();
                let lr: f64 = *rho_hats.last().unwrap();
                if (theta - lt as f64).abs() > tol || (rho - lr).abs() > tol {
                    return Err(Error::NotOrbitPreserving(format!(
                        "image (rho, theta) depends on the sphere coordinates at t = {t}"
                    )));
                }
                continue;
            }
        }
        ts.push(t);
        thetas.push(theta);
        rho_hats.push(rho);
    }
    // central-difference angle derivatives on the (irregular) t grid
    let m = ts.len();
    let mut dthetas = vec![0.0; m];
    for i in 0..m {
        let (i0, i1) = if i == 0 {
            (0, 1.min(m - 1))
        } else if i == m - 1 {
            (m - 2, m - 1)
        } else {
            (i - 1, i + 1)
        };
        if i1 > i0 {
            dthetas[i] = (thetas[i1] - thetas[i0]) / (ts[i1] - ts[i0]);
        }
    }
    let numeric = NumericModel {
        ts,
        thetas,
        dthetas,
        rho_hats,
        h: None,
        block1: Some(block1),
        block2: Some(block2),
    };
    Ok((
        IsometryModel::Linear {
            matrix,
            params: None,
        },
        numeric,
    ))
}
