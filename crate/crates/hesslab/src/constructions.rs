//! Example constructions: the glued piecewise Hessian isometry (identity on
//! one deformation cone, Legendre transform elsewhere), and generalised polar
//! coordinates for two-dimensional norms, where the indicatrix arclength is a
//! complete isometry invariant.

use crate::error::{Error, Result};
use crate::legendre::{legendre_map, PointMap};
use crate::norms::{split_angle, Bump, NormSpec, Point, ProfileFunction};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// A pair of norms `(F1, F2)` that agree away from two deformation cones,
/// together with a piecewise isometry between them: the identity on the cone
/// over `u1`, the Legendre (gradient) map of `F1` everywhere else.  Both
/// pieces agree on the round band separating the supports, where the norm is
/// Euclidean and the gradient map is the identity, so the glued map is smooth.
#[derive(Debug, Clone)]
pub struct GluedNorm {
    /// the deformed source norm `F1` (round profile plus two bumps)
    pub f1: NormSpec,
    /// the image norm `F2`: the Legendre image of `F1` over `u2`, `F1` elsewhere
    pub f2: NormSpec,
    pub u1: (f64, f64),
    pub u2: (f64, f64),
    /// bump amplitudes actually used (input values may be auto-reduced)
    pub eps1: f64,
    pub eps2: f64,
}

/// The glued map itself.
pub struct GluedMap {
    f1: NormSpec,
    u1: (f64, f64),
}

impl PointMap for GluedMap {
    fn apply(&self, y: &Point) -> Result<Point> {
        let (_, t) = split_angle(y.as_slice(), 1);
        if self.u1.0 <= t && t <= self.u1.1 {
            Ok(y.clone())
        } else {
            legendre_map(&self.f1, y)
        }
    }
}

impl GluedNorm {
    pub fn map(&self) -> GluedMap {
        GluedMap {
            f1: self.f1.clone(),
            u1: self.u1,
        }
    }

    fn profile(spec: &NormSpec) -> &ProfileFunction {
        match spec {
            NormSpec::Profile { f, .. } => f,
            _ => unreachable!("glued norms are built from profile specs"),
        }
    }

    pub fn f1_profile(&self) -> &ProfileFunction {
        Self::profile(&self.f1)
    }

    pub fn f2_profile(&self) -> &ProfileFunction {
        Self::profile(&self.f2)
    }
}

fn bumped_round(u: (f64, f64), eps: f64, other: (f64, f64), eps_other: f64) -> ProfileFunction {
    let mut bumps = Vec::new();
    if eps != 0.0 {
        bumps.push(Bump {
            lo: u.0,
            hi: u.1,
            eps,
        });
    }
    if eps_other != 0.0 {
        bumps.push(Bump {
            lo: other.0,
            hi: other.1,
            eps: eps_other,
        });
    }
    ProfileFunction::Bumped {
        base: Box::new(ProfileFunction::constant(0.5)),
        bumps,
    }
}

// strong convexity of the profile norm on a dense angle grid, away from the
// chart poles
fn profile_convex(spec: &NormSpec) -> Result<bool> {
    let mut samples = Vec::new();
    for i in 0..400 {
        let t = 1e-3 + (PI - 2e-3) * (i as f64 + 0.5) / 400.0;
        samples.push(crate::profile::chart3_to_cartesian(1.0, t, 0.3)?);
    }
    let report = crate::norms::check_strong_convexity(spec, &samples)?;
    Ok(report.is_strongly_convex())
}

/// Build the glued example: a round norm deformed by bumps supported in the
/// disjoint cone intervals `u1` and `u2`, the second deformation replaced by
/// its Legendre image, and the piecewise identity/Legendre map between them.
/// Amplitudes are halved until both norms are strongly convex.
pub fn build_glued(u1: (f64, f64), u2: (f64, f64), eps1: f64, eps2: f64) -> Result<GluedNorm> {
    let sep = 0.05;
    let mut ivs = [u1, u2];
    ivs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let ok = ivs.iter().all(|(lo, hi)| *lo >= sep && *hi <= PI - sep && lo < hi)
        && ivs[0].1 + sep <= ivs[1].0;
    if !ok {
        return Err(Error::OverlappingSupports);
    }
    let mut eps1 = eps1;
    let mut eps2 = eps2;
    for attempt in 0..20 {
        let f1 = bumped_round(u1, eps1, u2, eps2);
        let spec1 = NormSpec::Profile {
            k: 1,
            n: 3,
            f: f1.clone(),
            theta_range: None,
        };
        if !profile_convex(&spec1)? {
            eps1 *= 0.5;
            eps2 *= 0.5;
            continue;
        }
        // F2: the Legendre image of F1 over u2 (the image band equals u2,
        // because the profile is round, hence the gradient map is the
        // identity, at and beyond the support boundary), F1 elsewhere
        let dual_piece = ProfileFunction::LegendreImage {
            base: Box::new(f1.clone()),
            a: 1.0,
            b: 1.0,
        };
        let f2 = ProfileFunction::Piecewise {
            pieces: vec![
                (0.0, u2.0, f1.clone()),
                (u2.0, u2.1, dual_piece),
                (u2.1, PI, f1.clone()),
            ],
        };
        let spec2 = NormSpec::Profile {
            k: 1,
            n: 3,
            f: f2,
            theta_range: None,
        };
        if !profile_convex(&spec2)? {
            eps1 *= 0.5;
            eps2 *= 0.5;
            continue;
        }
        if attempt > 0 && (eps1 == 0.0 && eps2 == 0.0) {
            break;
        }
        return Ok(GluedNorm {
            f1: spec1,
            f2: spec2,
            u1,
            u2,
            eps1,
            eps2,
        });
    }
    Err(Error::ConvexityLost(
        "no strongly convex amplitude found for the glued deformations".into(),
    ))
}

/// Maximal jump of the profile value and first three derivatives across the
/// given angle, measured on a boundary-straddling stencil.
pub fn boundary_jump(f: &ProfileFunction, t: f64) -> Result<f64> {
    let h = 1e-7;
    let inner = f.derivs3(t - h)?;
    let outer = f.derivs3(t + h)?;
    let mut jump = 0.0f64;
    for i in 0..4 {
        // allow for the O(h) drift of the smooth one-sided values
        let drift = h * (1.0 + inner[i].abs().max(outer[i].abs()));
        jump = jump.max(((inner[i] - outer[i]).abs() - drift).max(0.0));
    }
    Ok(jump)
}

/// JSON form of the glued construction.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GluedJson {
    pub kind: String,
    pub u1: [f64; 2],
    pub u2: [f64; 2],
    pub eps1: f64,
    pub eps2: f64,
}

impl GluedNorm {
    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&GluedJson {
            kind: "glued".into(),
            u1: [self.u1.0, self.u1.1],
            u2: [self.u2.0, self.u2.1],
            eps1: self.eps1,
            eps2: self.eps2,
        })?)
    }

    pub fn from_json_str(s: &str) -> Result<GluedNorm> {
        let j: GluedJson = serde_json::from_str(s)?;
        if j.kind != "glued" {
            return Err(Error::InvalidSpec(format!(
                "expected kind \"glued\", got \"{}\"",
                j.kind
            )));
        }
        build_glued((j.u1[0], j.u1[1]), (j.u2[0], j.u2[1]), j.eps1, j.eps2)
    }
}

// 10-point Gauss-Legendre nodes and weights on [-1, 1]
const GL_NODES: [f64; 10] = [
    -0.9739065285171717,
    -0.8650633666889845,
    -0.6794095682990244,
    -0.4333953941292472,
    -0.1488743389816312,
    0.1488743389816312,
    0.4333953941292472,
    0.6794095682990244,
    0.8650633666889845,
    0.9739065285171717,
];
const GL_WEIGHTS: [f64; 10] = [
    0.0666713443086881,
    0.1494513491505806,
    0.2190863625159820,
    0.2692667193099963,
    0.2955242247147529,
    0.2955242247147529,
    0.2692667193099963,
    0.2190863625159820,
    0.1494513491505806,
    0.0666713443086881,
];

fn gauss(f: &dyn Fn(f64) -> Result<f64>, lo: f64, hi: f64) -> Result<f64> {
    let mid = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let mut acc = 0.0;
    for (x, w) in GL_NODES.iter().zip(GL_WEIGHTS.iter()) {
        acc += w * f(mid + half * x)?;
    }
    Ok(acc * half)
}

// g-speed of the indicatrix parameterisation y(phi) = u(phi) / F(u(phi)),
// u = (cos phi, sin phi), using that the Hessian metric is 0-homogeneous.
fn indicatrix_speed(spec: &NormSpec, phi: f64) -> Result<f64> {
    let u = Point::new(vec![phi.cos(), phi.sin()])?;
    let jet = spec.jet3(&u)?;
    let e = jet.v;
    if e <= 0.0 {
        return Err(Error::ConvexityLost(format!(
            "energy non-positive at phi = {phi}"
        )));
    }
    let f = (2.0 * e).sqrt();
    let grad = DVector::from_vec(vec![jet.g[0], jet.g[1]]);
    let udot = DVector::from_vec(vec![-phi.sin(), phi.cos()]);
    // dF/dphi along u(phi)
    let fdot = grad.dot(&udot) / f;
    let ydot = &udot / f - u.coords() * (fdot / (f * f));
    let g = DMatrix::from_fn(2, 2, |i, j| jet.hess(i, j));
    let speed2 = (ydot.transpose() * g * &ydot)[(0, 0)];
    if speed2 <= 0.0 {
        return Err(Error::ConvexityLost(format!(
            "indicatrix speed non-positive at phi = {phi}"
        )));
    }
    Ok(speed2.sqrt())
}

/// Generalised polar coordinates of a two-dimensional norm: the cumulative
/// g-arclength of the indicatrix as a function of the Euclidean ray angle.
/// In these coordinates the Hessian metric is `dF^2 + F^2 d(theta)^2`, so the
/// total arclength is a complete isometry invariant.
#[derive(Debug, Clone)]
pub struct PolarChart2D {
    pub spec: NormSpec,
    pub arclength: f64,
    /// panel boundaries (uniform in the ray angle phi)
    pub phis: Vec<f64>,
    /// cumulative arclength at each panel boundary
    pub cumulative: Vec<f64>,
}

/// Build the polar chart: composite Gauss quadrature of the indicatrix speed,
/// refined until two successive panelings agree to `tol`.
pub fn polar_chart_2d(spec: &NormSpec, tol: f64) -> Result<PolarChart2D> {
    if spec.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: spec.dim(),
        });
    }
    let speed = |phi: f64| indicatrix_speed(spec, phi);
    let total = |panels: usize| -> Result<f64> {
        let mut acc = 0.0;
        for i in 0..panels {
            let lo = 2.0 * PI * i as f64 / panels as f64;
            let hi = 2.0 * PI * (i + 1) as f64 / panels as f64;
            acc += gauss(&speed, lo, hi)?;
        }
        Ok(acc)
    };
    let mut panels = 64;
    let mut prev = total(panels)?;
    let mut stable = None;
    while panels <= 4096 {
        panels *= 2;
        let next = total(panels)?;
        if (next - prev).abs() < tol {
            stable = Some((next, panels));
            break;
        }
        prev = next;
    }
    let (arclength, panels) = stable.ok_or_else(|| {
        Error::QuadratureFailure(format!(
            "indicatrix arclength did not stabilise to {tol} (last gap {:.3e})",
            prev
        ))
    })?;
    // cumulative table on the final paneling
    let mut phis = Vec::with_capacity(panels + 1);
    let mut cumulative = Vec::with_capacity(panels + 1);
    let mut acc = 0.0;
    phis.push(0.0);
    cumulative.push(0.0);
    for i in 0..panels {
        let lo = 2.0 * PI * i as f64 / panels as f64;
        let hi = 2.0 * PI * (i + 1) as f64 / panels as f64;
        acc += gauss(&speed, lo, hi)?;
        phis.push(hi);
        cumulative.push(acc);
    }
    Ok(PolarChart2D {
        spec: spec.clone(),
        arclength,
        phis,
        cumulative,
    })
}

impl PolarChart2D {
    /// Cumulative arclength at ray angle `phi` (wrapped into `[0, 2 pi)`).
    pub fn arclength_at(&self, phi: f64) -> Result<f64> {
        let two_pi = 2.0 * PI;
        let wraps = (phi / two_pi).floor();
        let phi_w = phi - wraps * two_pi;
        let panels = self.phis.len() - 1;
        let idx = ((phi_w / two_pi * panels as f64).floor() as usize).min(panels - 1);
        let partial = gauss(&|x| indicatrix_speed(&self.spec, x), self.phis[idx], phi_w)?;
        Ok(self.cumulative[idx] + partial + wraps * self.arclength)
    }

    /// Invert the cumulative arclength: the ray angle at arclength `s`.
    pub fn angle_at(&self, s: f64) -> Result<f64> {
        let wraps = (s / self.arclength).floor();
        let s_w = s - wraps * self.arclength;
        let panels = self.phis.len() - 1;
        // bracket by the cumulative table, then Newton with the exact speed
        let idx = match self
            .cumulative
            .binary_search_by(|c| c.partial_cmp(&s_w).unwrap())
        {
            Ok(i) => i.min(panels - 1),
            Err(i) => i.saturating_sub(1).min(panels - 1),
        };
        let (mut lo, mut hi) = (self.phis[idx], self.phis[idx + 1]);
        let mut phi = 0.5 * (lo + hi);
        for _ in 0..100 {
            let err = self.arclength_at(phi)? - s_w;
            if err.abs() < 1e-14 * self.arclength {
                break;
            }
            if err > 0.0 {
                hi = phi;
            } else {
                lo = phi;
            }
            let step = err / indicatrix_speed(&self.spec, phi)?;
            let next = phi - step;
            phi = if next > lo && next < hi {
                next
            } else {
                0.5 * (lo + hi)
            };
        }
        Ok(phi + wraps * 2.0 * PI)
    }

    /// The point at ray angle `phi` on the scaled indicatrix `F = r`.
    pub fn point_at(&self, r: f64, phi: f64) -> Result<Point> {
        let u = Point::new(vec![phi.cos(), phi.sin()])?;
        let f = self.spec.eval_f(&u)?;
        u.scaled(r / f)
    }
}

/// The arclength-matching isometry between two 2-D norms of equal indicatrix
/// length: a point at norm-radius `r` and arclength position `s` (measured
/// from the ray angle 0) maps to the point of norm B with the same `(r, s)`.
pub struct TwoDIsometry {
    pub chart_a: PolarChart2D,
    pub chart_b: PolarChart2D,
}

impl PointMap for TwoDIsometry {
    fn apply(&self, y: &Point) -> Result<Point> {
        let c = y.as_slice();
        let phi = c[1].atan2(c[0]);
        let r = self.chart_a.spec.eval_f(y)?;
        let s = self.chart_a.arclength_at(phi)?;
        let psi = self.chart_b.angle_at(s)?;
        self.chart_b.point_at(r, psi)
    }
}

/// Build the 2-D isometry, or report the arclength obstruction.
pub fn two_d_isometry(spec_a: &NormSpec, spec_b: &NormSpec) -> Result<TwoDIsometry> {
    let chart_a = polar_chart_2d(spec_a, 1e-10)?;
    let chart_b = polar_chart_2d(spec_b, 1e-10)?;
    if (chart_a.arclength - chart_b.arclength).abs() > 1e-8 {
        return Err(Error::LengthMismatch(chart_a.arclength, chart_b.arclength));
    }
    Ok(TwoDIsometry { chart_a, chart_b })
}
