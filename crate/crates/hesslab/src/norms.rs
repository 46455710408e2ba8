//! Norm models and the exact order-3 derivative engine.
//!
//! A norm is described by a [`NormSpec`]; every tensor computation in the
//! crate consumes the order-3 jet of its energy `E = F^2 / 2` produced by
//! [`NormSpec::jet3`].  Derivatives are closed-form (Euclidean), jet-propagated
//! through the defining formula (Randers, Expression, Profile) or obtained by
//! Newton inversion of the gradient map (Dual); finite differences appear only
//! in test oracles.

use crate::error::{Error, Result};
use crate::jet::{parametric_derivs, Jet1, Jet3};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

/// A point of `R^n` away from the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    coords: DVector<f64>,
}

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        Point::from_vector(DVector::from_vec(coords))
    }

    pub fn from_vector(coords: DVector<f64>) -> Result<Self> {
        if coords.len() < 2 {
            return Err(Error::DimensionMismatch { expected: 2, got: coords.len() });
        }
        if coords.iter().all(|c| *c == 0.0) {
            return Err(Error::ZeroPoint);
        }
        Ok(Point { coords })
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &DVector<f64> {
        &self.coords
    }

    pub fn as_slice(&self) -> &[f64] {
        self.coords.as_slice()
    }

    pub fn euclidean_norm(&self) -> f64 {
        self.coords.norm()
    }

    pub fn scaled(&self, lambda: f64) -> Result<Point> {
        Point::from_vector(&self.coords * lambda)
    }
}

/// Period class of a profile function: `2pi` for a split index k = 1,
/// `pi` for k > 1 (only even harmonics survive the extra reflection symmetry).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Period {
    #[serde(rename = "2pi")]
    TwoPi,
    #[serde(rename = "pi")]
    Pi,
}

/// A compactly supported smooth deformation `eps * exp(1 - 1/(1 - u^2))`
/// with `u` the affine parameter of the interval `(lo, hi)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Bump {
    pub lo: f64,
    pub hi: f64,
    pub eps: f64,
}

impl Bump {
    pub fn jet(&self, t: f64) -> Jet1 {
        let u = Jet1::var(t)
            .scale(2.0 / (self.hi - self.lo))
            .add_scalar(-(self.hi + self.lo) / (self.hi - self.lo));
        if u.v.abs() >= 1.0 - 1e-12 {
            return Jet1::constant(0.0);
        }
        let one_minus = u.mul(u).scale(-1.0).add_scalar(1.0);
        let inner = one_minus
            .recip()
            .expect("1 - u^2 > 0 inside support")
            .scale(-1.0)
            .add_scalar(1.0);
        inner.exp().scale(self.eps)
    }
}

/// Uniform-grid cubic Hermite table on `[t0, t0 + dt*(m-1)]`; stores value and
/// first derivative at the knots.  Derivative orders 2 and 3 come from the
/// interpolating cubic (order 3 piecewise constant); order 4 is reported as 0.
///
/// When exact second derivatives are available at the knots (`second`),
/// interpolation upgrades to the quintic Hermite polynomial, which avoids the
/// `eps / dt^2` rounding amplification a cubic suffers in its implied second
/// derivative and yields smooth orders 2-4.
#[derive(Debug, Clone, PartialEq)]
pub struct HermiteTable {
    pub t0: f64,
    pub dt: f64,
    pub values: Vec<f64>,
    pub derivs: Vec<f64>,
    pub second: Option<Vec<f64>>,
}

impl HermiteTable {
    pub fn t_max(&self) -> f64 {
        self.t0 + self.dt * (self.values.len() - 1) as f64
    }

    pub fn jet(&self, t: f64) -> Result<Jet1> {
        let m = self.values.len();
        if m < 2 {
            return Err(Error::InvalidSpec("Hermite table needs >= 2 knots".into()));
        }
        let eps = 1e-12 * self.dt.abs().max(1.0);
        if t < self.t0 - eps || t > self.t_max() + eps {
            return Err(Error::Domain(format!(
                "t = {t} outside tabulated range [{}, {}]",
                self.t0,
                self.t_max()
            )));
        }
        let cell = (((t - self.t0) / self.dt).floor() as isize).clamp(0, m as isize - 2) as usize;
        let h = self.dt;
        let s = (t - self.t0 - cell as f64 * h) / h;
        let (p0, p1) = (self.values[cell], self.values[cell + 1]);
        let (m0, m1) = (self.derivs[cell] * h, self.derivs[cell + 1] * h);
        // polynomial coefficients in the scaled variable s
        let coef: [f64; 6] = if let Some(second) = &self.second {
            let (a0, a1) = (second[cell] * h * h, second[cell + 1] * h * h);
            [
                p0,
                m0,
                0.5 * a0,
                -10.0 * p0 - 6.0 * m0 - 1.5 * a0 + 10.0 * p1 - 4.0 * m1 + 0.5 * a1,
                15.0 * p0 + 8.0 * m0 + 1.5 * a0 - 15.0 * p1 + 7.0 * m1 - a1,
                -6.0 * p0 - 3.0 * m0 - 0.5 * a0 + 6.0 * p1 - 3.0 * m1 + 0.5 * a1,
            ]
        } else {
            [
                p0,
                m0,
                -3.0 * p0 + 3.0 * p1 - 2.0 * m0 - m1,
                2.0 * p0 - 2.0 * p1 + m0 + m1,
                0.0,
                0.0,
            ]
        };
        let horner = |c: &[f64]| -> f64 { c.iter().rev().fold(0.0, |acc, ci| acc * s + ci) };
        let d1c: Vec<f64> = (1..6).map(|i| coef[i] * i as f64).collect();
        let d2c: Vec<f64> = (1..5).map(|i| d1c[i] * i as f64).collect();
        let d3c: Vec<f64> = (1..4).map(|i| d2c[i] * i as f64).collect();
        let d4c: Vec<f64> = (1..3).map(|i| d3c[i] * i as f64).collect();
        Ok(Jet1 {
            v: horner(&coef),
            d1: horner(&d1c) / h,
            d2: horner(&d2c) / (h * h),
            d3: horner(&d3c) / (h * h * h),
            d4: horner(&d4c) / (h * h * h * h),
        })
    }
}

/// A scalar profile together with derivative evaluators.
///
/// `TrigPoly` is the serializable base representation.  `LinearImage` and
/// `LegendreImage` are the profiles of a norm pushed forward by an
/// axis-diagonal linear map `diag(a, b, .., b)` or by that map composed with
/// the gradient map of the energy; both are evaluated exactly by jet
/// arithmetic (the Legendre image loses the fourth derivative order, which is
/// reported as NaN).  `Bumped` adds compactly supported deformations,
/// `Tabulated` interpolates an ODE solution, `Piecewise` glues segments.
#[derive(Debug, Clone, PartialEq)]
pub enum ProfileFunction {
    TrigPoly {
        /// coefficient of cos(m t) at index m (index 0 is the constant term)
        cos: Vec<f64>,
        /// coefficient of sin(m t) at index m (index 0 ignored)
        sin: Vec<f64>,
        period: Period,
    },
    LinearImage {
        base: Box<ProfileFunction>,
        a: f64,
        b: f64,
    },
    LegendreImage {
        base: Box<ProfileFunction>,
        a: f64,
        b: f64,
    },
    Bumped {
        base: Box<ProfileFunction>,
        bumps: Vec<Bump>,
    },
    Tabulated(HermiteTable),
    Piecewise {
        /// (lo, hi, segment); sorted, non-overlapping, dispatch by t
        pieces: Vec<(f64, f64, ProfileFunction)>,
    },
}

impl ProfileFunction {
    pub fn constant(c: f64) -> Self {
        ProfileFunction::TrigPoly { cos: vec![c], sin: vec![], period: Period::Pi }
    }

    /// `c0 + c1 cos(2t) + c2 sin(2t)`.
    pub fn double_angle(c0: f64, c1: f64, c2: f64) -> Self {
        ProfileFunction::TrigPoly {
            cos: vec![c0, 0.0, c1],
            sin: vec![0.0, 0.0, c2],
            period: Period::TwoPi,
        }
    }

    /// Order-4 jet of the profile at `t`.
    pub fn jet(&self, t: f64) -> Result<Jet1> {
        match self {
            ProfileFunction::TrigPoly { cos, sin, .. } => {
                let mut j = Jet1::constant(0.0);
                for (m, c) in cos.iter().enumerate() {
                    if *c != 0.0 {
                        j = j.add(Jet1::var(t).scale(m as f64).cos().scale(*c));
                    }
                }
                for (m, c) in sin.iter().enumerate() {
                    if *c != 0.0 {
                        j = j.add(Jet1::var(t).scale(m as f64).sin().scale(*c));
                    }
                }
                Ok(j)
            }
            ProfileFunction::LinearImage { base, a, b } => {
                let th = Jet1::var(t);
                let (c, s) = (th.cos(), th.sin());
                let tj = s.scale(1.0 / b).atan2(c.scale(1.0 / a))?;
                let fj = tj.compose(base.jet(tj.v)?.derivs());
                let scale2 = c.mul(c).scale(1.0 / (a * a)).add(s.mul(s).scale(1.0 / (b * b)));
                Ok(scale2.mul(fj))
            }
            ProfileFunction::LegendreImage { base, a, b } => {
                let tt = invert_legendre_theta(base, *a, *b, t)?;
                let (theta_jet, p_jet) = legendre_image_jets(base, *a, *b, tt)?;
                let d = parametric_derivs(p_jet, theta_jet)?;
                let mut j = Jet1::from_derivs(d);
                // one derivative order is consumed by the parametric chain rule
                j.d4 = f64::NAN;
                Ok(j)
            }
            ProfileFunction::Bumped { base, bumps } => {
                let mut j = base.jet(t)?;
                for bump in bumps {
                    j = j.add(bump.jet(t));
                }
                Ok(j)
            }
            ProfileFunction::Tabulated(table) => table.jet(t),
            ProfileFunction::Piecewise { pieces } => {
                for (lo, hi, f) in pieces {
                    if t >= *lo && t <= *hi {
                        return f.jet(t);
                    }
                }
                Err(Error::Domain(format!("t = {t} not covered by any piece")))
            }
        }
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        Ok(self.jet(t)?.v)
    }

    /// Value and first three derivatives, the contract used by tensor code.
    pub fn derivs3(&self, t: f64) -> Result<[f64; 4]> {
        let j = self.jet(t)?;
        Ok([j.v, j.d1, j.d2, j.d3])
    }

    /// Check positivity, evenness and the declared period on a sample grid,
    /// with derivative evaluators cross-checked against finite differences.
    pub fn check(&self, samples: usize) -> Result<()> {
        let period = match self {
            ProfileFunction::TrigPoly { period, .. } => Some(*period),
            _ => None,
        };
        for i in 0..samples {
            let t = 1e-3 + (std::f64::consts::PI - 2e-3) * i as f64 / (samples - 1).max(1) as f64;
            let j = match self.jet(t) {
                Ok(j) => j,
                Err(_) => continue,
            };
            if j.v <= 0.0 {
                return Err(Error::InvalidSpec(format!("profile non-positive at t = {t}")));
            }
            if let Some(p) = period {
                let f_neg = self.eval(-t)?;
                if (f_neg - j.v).abs() > 1e-9 * j.v.abs().max(1.0) {
                    return Err(Error::InvalidSpec(format!("profile not even at t = {t}")));
                }
                let shift = match p {
                    Period::Pi => std::f64::consts::PI,
                    Period::TwoPi => 2.0 * std::f64::consts::PI,
                };
                let f_shift = self.eval(t + shift)?;
                if (f_shift - j.v).abs() > 1e-9 * j.v.abs().max(1.0) {
                    return Err(Error::InvalidSpec(format!(
                        "profile not periodic with declared period at t = {t}"
                    )));
                }
            }
            let h = 1e-4;
            let fd1 = (self.eval(t + h)? - self.eval(t - h)?) / (2.0 * h);
            if (fd1 - j.d1).abs() > 1e-6 * (1.0 + j.d1.abs()) {
                return Err(Error::InvalidSpec(format!(
                    "derivative evaluator inconsistent at t = {t}: {} vs FD {}",
                    j.d1, fd1
                )));
            }
        }
        Ok(())
    }
}

/// Jets in `t` of the image angle `theta(t)` and image profile value `p(t)`
/// under the map `y -> diag(a, b, b) grad E(y)` applied to the unit ray at
/// angle `t` of the profile-`f` norm (split index k = 1).
pub(crate) fn legendre_image_jets(
    f: &ProfileFunction,
    a: f64,
    b: f64,
    t: f64,
) -> Result<(Jet1, Jet1)> {
    let fj = f.jet(t)?;
    let fpj = fj.shift();
    let th = Jet1::var(t);
    let (c, s) = (th.cos(), th.sin());
    // gradient of E on the unit ray: radial component n, tangential component q
    let n = fj.scale(2.0).mul(c).sub(fpj.mul(s));
    let q = fj.scale(2.0).mul(s).add(fpj.mul(c));
    let z2 = n.mul(n).scale(a * a).add(q.mul(q).scale(b * b));
    // b q > 0 on (0, pi), so the image angle lands in (0, pi); atan2 stays
    // regular at the endpoints and at the radial-gradient zero where n = 0
    let theta = q.scale(b).atan2(n.scale(a))?;
    let p = fj.div(z2)?;
    Ok((theta, p))
}

/// Image angle of the Legendre-example map at parameter `t` in `(0, pi)`.
pub(crate) fn legendre_image_theta(
    f: &ProfileFunction,
    a: f64,
    b: f64,
    t: f64,
) -> Result<f64> {
    Ok(legendre_image_jets(f, a, b, t)?.0.v)
}

/// Solve `theta(t) = target` for the Legendre-example angle map, which is
/// strictly monotone on `(0, pi)` with the sign of `a`.
fn invert_legendre_theta(f: &ProfileFunction, a: f64, b: f64, target: f64) -> Result<f64> {
    let pi = std::f64::consts::PI;
    if !(0.0..=pi).contains(&target) {
        return Err(Error::Domain(format!("image angle {target} outside (0, pi)")));
    }
    let grid = 128;
    let eval = |t: f64| -> Result<f64> { legendre_image_theta(f, a, b, t) };
    let mut lo = pi * 1e-9;
    let mut hi = pi * (1.0 - 1e-9);
    let (mut flo, mut fhi) = (eval(lo)? - target, eval(hi)? - target);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo * fhi > 0.0 {
        return Err(Error::BracketFailed(format!(
            "image angle {target} not attained on (0, pi)"
        )));
    }
    // refine the bracket on a coarse grid, then bisect with Newton polish
    let mut prev_t = lo;
    let mut prev_v = flo;
    for i in 1..=grid {
        let t = lo + (hi - lo) * i as f64 / grid as f64;
        let v = eval(t)? - target;
        if prev_v * v <= 0.0 {
            lo = prev_t;
            flo = prev_v;
            hi = t;
            fhi = v;
            break;
        }
        prev_t = t;
        prev_v = v;
    }
    let _ = fhi;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let (theta_jet, _) = legendre_image_jets(f, a, b, mid)?;
        let v = theta_jet.v - target;
        // Newton step when it stays inside the bracket
        if theta_jet.d1 != 0.0 {
            let tn = mid - v / theta_jet.d1;
            if tn > lo && tn < hi {
                let vn = eval(tn)? - target;
                if vn.abs() < 1e-15 {
                    return Ok(tn);
                }
                if vn * flo <= 0.0 {
                    hi = tn;
                } else {
                    lo = tn;
                    flo = vn;
                }
            }
        }
        if v * flo <= 0.0 {
            hi = mid;
        } else {
            lo = mid;
            flo = v;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Expression tree for the `Expression` norm variant: a positively
/// 2-homogeneous energy built from +, -, *, /, pow, sqrt over x1..xn.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(usize),
    Add(Vec<Expr>),
    Neg(Box<Expr>),
    Mul(Vec<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, f64),
    Sqrt(Box<Expr>),
}

impl Expr {
    pub fn jet3(&self, x: &[f64]) -> Result<Jet3> {
        let n = x.len();
        match self {
            Expr::Const(c) => Ok(Jet3::constant(n, *c)),
            Expr::Var(i) => Ok(Jet3::var(n, *i, x[*i])),
            Expr::Add(terms) => {
                let mut acc = Jet3::constant(n, 0.0);
                for t in terms {
                    acc = acc.add(&t.jet3(x)?);
                }
                Ok(acc)
            }
            Expr::Neg(e) => Ok(e.jet3(x)?.scale(-1.0)),
            Expr::Mul(factors) => {
                let mut acc = Jet3::constant(n, 1.0);
                for f in factors {
                    acc = acc.mul(&f.jet3(x)?);
                }
                Ok(acc)
            }
            Expr::Div(a, b) => a.jet3(x)?.div(&b.jet3(x)?),
            Expr::Pow(e, p) => e.jet3(x)?.powf(*p),
            Expr::Sqrt(e) => e.jet3(x)?.sqrt(),
        }
    }

    /// Parse the prefix s-expression grammar over +, -, *, /, pow, sqrt, x1..xn.
    pub fn parse(src: &str, n: usize) -> Result<Expr> {
        let tokens = tokenize(src)?;
        let mut pos = 0;
        let e = parse_tokens(&tokens, &mut pos, n)?;
        if pos != tokens.len() {
            return Err(Error::Parse(format!("trailing tokens after expression: {:?}", &tokens[pos..])));
        }
        Ok(e)
    }
}

fn tokenize(src: &str) -> Result<Vec<String>> {
    let mut tokens = Vec::new();
    let mut cur = String::new();
    for ch in src.chars() {
        match ch {
            '(' | ')' => {
                if !cur.is_empty() {
                    tokens.push(std::mem::take(&mut cur));
                }
                tokens.push(ch.to_string());
            }
            c if c.is_whitespace() => {
                if !cur.is_empty() {
                    tokens.push(std::mem::take(&mut cur));
                }
            }
            c => cur.push(c),
        }
    }
    if !cur.is_empty() {
        tokens.push(cur);
    }
    if tokens.is_empty() {
        return Err(Error::Parse("empty expression".into()));
    }
    Ok(tokens)
}

fn parse_tokens(tokens: &[String], pos: &mut usize, n: usize) -> Result<Expr> {
    let tok = tokens
        .get(*pos)
        .ok_or_else(|| Error::Parse("unexpected end of expression".into()))?;
    *pos += 1;
    if tok == ")" {
        return Err(Error::Parse("unexpected ')'".into()));
    }
    if tok != "(" {
        return parse_atom(tok, n);
    }
    let op = tokens
        .get(*pos)
        .ok_or_else(|| Error::Parse("missing operator after '('".into()))?
        .clone();
    *pos += 1;
    let mut args = Vec::new();
    while tokens.get(*pos).map(String::as_str) != Some(")") {
        if *pos >= tokens.len() {
            return Err(Error::Parse("missing ')'".into()));
        }
        args.push(parse_tokens(tokens, pos, n)?);
    }
    *pos += 1; // consume ')'
    let arity = |k: usize| -> Result<()> {
        if args.len() == k {
            Ok(())
        } else {
            Err(Error::Parse(format!("operator {op} expects {k} arguments, got {}", args.len())))
        }
    };
    match op.as_str() {
        "+" => {
            if args.is_empty() {
                return Err(Error::Parse("+ needs arguments".into()));
            }
            Ok(Expr::Add(args))
        }
        "*" => {
            if args.is_empty() {
                return Err(Error::Parse("* needs arguments".into()));
            }
            Ok(Expr::Mul(args))
        }
        "-" => match args.len() {
            1 => Ok(Expr::Neg(Box::new(args.pop_unchecked()))),
            2 => {
                let b = args.pop_unchecked();
                let a = args.pop_unchecked();
                Ok(Expr::Add(vec![a, Expr::Neg(Box::new(b))]))
            }
            k => Err(Error::Parse(format!("- expects 1 or 2 arguments, got {k}"))),
        },
        "/" => {
            arity(2)?;
            let b = args.pop_unchecked();
            let a = args.pop_unchecked();
            Ok(Expr::Div(Box::new(a), Box::new(b)))
        }
        "pow" => {
            arity(2)?;
            let b = args.pop_unchecked();
            let a = args.pop_unchecked();
            match b {
                Expr::Const(p) => Ok(Expr::Pow(Box::new(a), p)),
                _ => Err(Error::Parse("pow exponent must be a constant".into())),
            }
        }
        "sqrt" => {
            arity(1)?;
            Ok(Expr::Sqrt(Box::new(args.pop_unchecked())))
        }
        other => Err(Error::Parse(format!("unknown operator '{other}'"))),
    }
}

trait PopUnchecked<T> {
    fn pop_unchecked(&mut self) -> T;
}

impl<T> PopUnchecked<T> for Vec<T> {
    fn pop_unchecked(&mut self) -> T {
        self.pop().expect("arity checked")
    }
}

fn parse_atom(tok: &str, n: usize) -> Result<Expr> {
    if let Some(idx) = tok.strip_prefix('x') {
        if let Ok(i) = idx.parse::<usize>() {
            if i >= 1 && i <= n {
                return Ok(Expr::Var(i - 1));
            }
            return Err(Error::Parse(format!("variable {tok} out of range 1..={n}")));
        }
    }
    tok.parse::<f64>()
        .map(Expr::Const)
        .map_err(|_| Error::Parse(format!("unrecognized token '{tok}'")))
}

/// Tagged description of a Minkowski norm via its energy `E = F^2 / 2`.
#[derive(Debug, Clone, PartialEq)]
pub enum NormSpec {
    /// E(y) = y^T A y / 2 with A symmetric positive definite.
    Euclidean { a: DMatrix<f64> },
    /// F(y) = sqrt(y^T alpha y) + beta . y with |beta|_alpha < 1.
    Randers { alpha: DMatrix<f64>, beta: DVector<f64> },
    /// Block-rotation invariant norm E = r^2 f(theta) for a split k | n-k.
    /// `theta_range` optionally restricts the validity cone to a theta band.
    Profile {
        k: usize,
        n: usize,
        f: ProfileFunction,
        theta_range: Option<(f64, f64)>,
    },
    /// Energy given by a positively 2-homogeneous expression tree.
    Expression { n: usize, expr: Expr },
    /// Dual norm: the pushforward of the base energy under its gradient map.
    Dual { base: Box<NormSpec> },
}

impl NormSpec {
    pub fn dim(&self) -> usize {
        match self {
            NormSpec::Euclidean { a } => a.nrows(),
            NormSpec::Randers { alpha, .. } => alpha.nrows(),
            NormSpec::Profile { n, .. } => *n,
            NormSpec::Expression { n, .. } => *n,
            NormSpec::Dual { base } => base.dim(),
        }
    }

    pub fn euclidean_identity(n: usize) -> Self {
        NormSpec::Euclidean { a: DMatrix::identity(n, n) }
    }

    /// Structural validation (shapes, positivity of declared data).
    pub fn validate(&self) -> Result<()> {
        match self {
            NormSpec::Euclidean { a } => {
                check_spd(a, "Euclidean matrix")?;
            }
            NormSpec::Randers { alpha, beta } => {
                check_spd(alpha, "Randers alpha")?;
                if beta.len() != alpha.nrows() {
                    return Err(Error::DimensionMismatch {
                        expected: alpha.nrows(),
                        got: beta.len(),
                    });
                }
                let alpha_inv = alpha
                    .clone()
                    .try_inverse()
                    .ok_or_else(|| Error::InvalidSpec("alpha not invertible".into()))?;
                let beta_norm = (beta.transpose() * alpha_inv * beta)[(0, 0)].sqrt();
                if beta_norm >= 1.0 {
                    return Err(Error::InvalidSpec(format!(
                        "|beta|_alpha = {beta_norm} must be < 1"
                    )));
                }
            }
            NormSpec::Profile { k, n, f, theta_range } => {
                if *n < 3 || *k < 1 || 2 * *k > *n {
                    return Err(Error::InvalidSpec(format!(
                        "need 1 <= k <= n/2 and n >= 3, got k = {k}, n = {n}"
                    )));
                }
                if let Some((lo, hi)) = theta_range {
                    if !(lo < hi) {
                        return Err(Error::InvalidSpec("empty theta range".into()));
                    }
                }
                f.check(50)?;
            }
            NormSpec::Expression { n, .. } => {
                if *n < 2 {
                    return Err(Error::DimensionMismatch { expected: 2, got: *n });
                }
            }
            NormSpec::Dual { base } => base.validate()?,
        }
        Ok(())
    }

    /// Energy `E(y) = F(y)^2 / 2`.
    pub fn eval_e(&self, y: &Point) -> Result<f64> {
        self.check_dim(y)?;
        match self {
            NormSpec::Euclidean { a } => Ok(0.5 * (y.coords().transpose() * a * y.coords())[(0, 0)]),
            NormSpec::Randers { alpha, beta } => {
                let q = (y.coords().transpose() * alpha * y.coords())[(0, 0)];
                let f = q.sqrt() + beta.dot(y.coords());
                Ok(0.5 * f * f)
            }
            NormSpec::Profile { k, f, .. } => {
                let (r2, theta) = split_angle(y.as_slice(), *k);
                self.check_theta(theta)?;
                Ok(r2 * f.eval(theta)?)
            }
            NormSpec::Expression { expr, .. } => Ok(expr.jet3(y.as_slice())?.v),
            NormSpec::Dual { base } => {
                let y_src = invert_gradient(base, y)?;
                base.eval_e(&y_src)
            }
        }
    }

    /// Norm value `F(y) = sqrt(2 E(y))`.
    pub fn eval_f(&self, y: &Point) -> Result<f64> {
        let e = self.eval_e(y)?;
        if e <= 0.0 {
            return Err(Error::NonSmoothPoint(format!("E = {e} not positive")));
        }
        Ok((2.0 * e).sqrt())
    }

    /// Order-3 jet of the energy at `y`.
    pub fn jet3(&self, y: &Point) -> Result<Jet3> {
        self.check_dim(y)?;
        let n = self.dim();
        match self {
            NormSpec::Euclidean { a } => {
                let mut j = Jet3::constant(n, self.eval_e(y)?);
                let grad = a * y.coords();
                j.g = grad.as_slice().to_vec();
                j.h = a.as_slice().to_vec(); // symmetric, layout immaterial
                Ok(j)
            }
            NormSpec::Randers { alpha, beta } => {
                let x: Vec<Jet3> = (0..n).map(|i| Jet3::var(n, i, y.as_slice()[i])).collect();
                let mut q = Jet3::constant(n, 0.0);
                for i in 0..n {
                    for j in 0..n {
                        let c = alpha[(i, j)];
                        if c != 0.0 {
                            q = q.add(&x[i].mul(&x[j]).scale(c));
                        }
                    }
                }
                let mut b = Jet3::constant(n, 0.0);
                for i in 0..n {
                    if beta[i] != 0.0 {
                        b = b.add(&x[i].scale(beta[i]));
                    }
                }
                let f = q.sqrt()?.add(&b);
                Ok(f.mul(&f).scale(0.5))
            }
            NormSpec::Profile { k, f, .. } => {
                let x: Vec<Jet3> = (0..n).map(|i| Jet3::var(n, i, y.as_slice()[i])).collect();
                let mut u = Jet3::constant(n, 0.0);
                for xi in x.iter().take(*k) {
                    u = u.add(&xi.mul(xi));
                }
                let mut v = Jet3::constant(n, 0.0);
                for xi in x.iter().skip(*k) {
                    v = v.add(&xi.mul(xi));
                }
                let r2 = u.add(&v);
                let w = if *k == 1 {
                    x[0].mul(&r2.powf(-0.5)?)
                } else {
                    u.sqrt()
                        .map_err(|_| {
                            Error::NonSmoothPoint(
                                "point on the second coordinate block axis".into(),
                            )
                        })?
                        .mul(&r2.powf(-0.5)?)
                };
                let theta = w.acos().map_err(|_| {
                    Error::NonSmoothPoint("point on a coordinate block axis (theta chart degenerate)".into())
                })?;
                self.check_theta(theta.v)?;
                let fj = f.jet(theta.v)?;
                Ok(r2.mul(&theta.compose([fj.v, fj.d1, fj.d2, fj.d3])))
            }
            NormSpec::Expression { expr, .. } => expr.jet3(y.as_slice()),
            NormSpec::Dual { base } => {
                let y_src = invert_gradient(base, y)?;
                let j = base.jet3(&y_src)?;
                dual_jet(&j, &y_src)
            }
        }
    }

    fn check_dim(&self, y: &Point) -> Result<()> {
        if y.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: y.dim() });
        }
        Ok(())
    }

    fn check_theta(&self, theta: f64) -> Result<()> {
        if let NormSpec::Profile { theta_range: Some((lo, hi)), .. } = self {
            if theta < *lo || theta > *hi {
                return Err(Error::OutOfCone(format!(
                    "theta = {theta} outside validity band ({lo}, {hi})"
                )));
            }
        }
        Ok(())
    }
}

fn check_spd(a: &DMatrix<f64>, what: &str) -> Result<()> {
    if a.nrows() != a.ncols() {
        return Err(Error::InvalidSpec(format!("{what} not square")));
    }
    let asym = (a - a.transpose()).abs().max();
    if asym > 1e-12 * a.abs().max().max(1.0) {
        return Err(Error::InvalidSpec(format!("{what} not symmetric")));
    }
    if a.clone().cholesky().is_none() {
        return Err(Error::NotPositiveDefinite(what.into()));
    }
    Ok(())
}

/// `(r^2, theta)` of a point under the split `k | n-k`.
pub fn split_angle(x: &[f64], k: usize) -> (f64, f64) {
    let u: f64 = x[..k].iter().map(|c| c * c).sum();
    let v: f64 = x[k..].iter().map(|c| c * c).sum();
    let theta = if k == 1 {
        v.sqrt().atan2(x[0])
    } else {
        v.sqrt().atan2(u.sqrt())
    };
    (u + v, theta)
}

/// Jet of the dual energy at `p = grad E(y)`, from the jet of `E` at `y`:
/// the gradient of the dual is `y`, its Hessian is the inverse of `hess E`,
/// and its third tensor is `-G T G G` with `G = (hess E)^{-1}`.
fn dual_jet(j: &Jet3, y_src: &Point) -> Result<Jet3> {
    let n = j.n;
    let g = DMatrix::from_row_slice(n, n, &j.h);
    let ginv = g
        .clone()
        .cholesky()
        .ok_or_else(|| Error::NotPositiveDefinite("Hessian at preimage".into()))?
        .inverse();
    let mut out = Jet3::constant(n, j.v);
    out.g = y_src.as_slice().to_vec();
    out.h = ginv.as_slice().to_vec(); // symmetric, layout immaterial
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                let mut s = 0.0;
                for i in 0..n {
                    for jj in 0..n {
                        for m in 0..n {
                            s += ginv[(a, i)] * ginv[(b, jj)] * ginv[(c, m)] * j.third(i, jj, m);
                        }
                    }
                }
                out.t[(a * n + b) * n + c] = -s;
            }
        }
    }
    Ok(out)
}

/// Solve `grad E(y) = p` by damped Newton (at most 50 iterations).
pub(crate) fn invert_gradient(spec: &NormSpec, p: &Point) -> Result<Point> {
    let n = spec.dim();
    let pv = p.coords().clone();
    let pnorm = pv.norm();
    // start from the rescaled target direction; the gradient map is a global
    // diffeomorphism on the cone, so radial starts converge in practice
    let mut y = pv.clone() / pnorm.max(1e-300);
    let scale0 = spec.eval_f(&Point::from_vector(y.clone())?)?;
    y /= scale0.max(1e-300);
    y *= pnorm.sqrt().max(1e-300);
    let resid = |yv: &DVector<f64>| -> Result<(DVector<f64>, Jet3)> {
        let pt = Point::from_vector(yv.clone())?;
        let j = spec.jet3(&pt)?;
        let grad = DVector::from_column_slice(&j.g);
        Ok((grad - &pv, j))
    };
    let (mut r, mut j) = resid(&y)?;
    for _ in 0..50 {
        if r.norm() <= 1e-13 * pnorm {
            return Point::from_vector(y);
        }
        let g = DMatrix::from_row_slice(n, n, &j.h);
        let step = g
            .cholesky()
            .ok_or_else(|| Error::NotPositiveDefinite("Hessian in Newton solve".into()))?
            .solve(&r);
        let mut lambda = 1.0;
        loop {
            let y_try = &y - &step * lambda;
            match resid(&y_try) {
                Ok((r_try, j_try)) if r_try.norm() < r.norm() => {
                    y = y_try;
                    r = r_try;
                    j = j_try;
                    break;
                }
                _ => {
                    lambda *= 0.5;
                    if lambda < 1e-8 {
                        return Err(Error::NewtonFailed(
                            "damping underflow inverting the gradient map".into(),
                        ));
                    }
                }
            }
        }
    }
    if r.norm() <= 1e-10 * pnorm {
        return Point::from_vector(y);
    }
    Err(Error::NewtonFailed(format!(
        "gradient inversion residual {} after 50 iterations",
        r.norm()
    )))
}

/// Strong-convexity scan report.
#[derive(Debug, Clone)]
pub struct ConvexityReport {
    pub min_eigenvalue: f64,
    /// points where the Hessian failed to be positive definite, with the
    /// offending eigenvalue
    pub failures: Vec<(Point, f64)>,
}

impl ConvexityReport {
    pub fn is_strongly_convex(&self) -> bool {
        self.failures.is_empty() && self.min_eigenvalue > 0.0
    }
}

/// Minimum Hessian eigenvalue over the samples, with failing points listed.
pub fn check_strong_convexity(spec: &NormSpec, samples: &[Point]) -> Result<ConvexityReport> {
    if samples.is_empty() {
        return Err(Error::InvalidSpec("empty sample list".into()));
    }
    let mut min_eig = f64::INFINITY;
    let mut failures = Vec::new();
    for pt in samples {
        let j = spec.jet3(pt)?;
        let n = j.n;
        let g = DMatrix::from_row_slice(n, n, &j.h);
        let eig = g.symmetric_eigenvalues();
        let lo = eig.iter().cloned().fold(f64::INFINITY, f64::min);
        min_eig = min_eig.min(lo);
        if lo <= 0.0 {
            failures.push((pt.clone(), lo));
        }
    }
    Ok(ConvexityReport { min_eigenvalue: min_eig, failures })
}

// ---------------------------------------------------------------------------
// JSON interface
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum SpecJson {
    Euclidean {
        matrix: Vec<Vec<f64>>,
    },
    Randers {
        alpha: Vec<Vec<f64>>,
        beta: Vec<f64>,
    },
    Profile {
        k: usize,
        n: usize,
        f: ProfileJson,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        theta_range: Option<[f64; 2]>,
    },
    Expression {
        n: usize,
        expr: String,
    },
    Dual {
        base: Box<SpecJson>,
    },
}

#[derive(Serialize, Deserialize)]
struct ProfileJson {
    cos: Vec<f64>,
    #[serde(default)]
    sin: Vec<f64>,
    period: Period,
}

fn matrix_from_rows(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let n = rows.len();
    let mut m = DMatrix::zeros(n, n);
    for (i, row) in rows.iter().enumerate() {
        if row.len() != n {
            return Err(Error::InvalidSpec(format!(
                "matrix row {i} has length {} (expected {n})",
                row.len()
            )));
        }
        for (j, v) in row.iter().enumerate() {
            m[(i, j)] = *v;
        }
    }
    Ok(m)
}

fn matrix_to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

impl NormSpec {
    pub fn from_json_str(s: &str) -> Result<Self> {
        let dto: SpecJson = serde_json::from_str(s)?;
        NormSpec::from_dto(dto)
    }

    pub fn from_json_file(path: &std::path::Path) -> Result<Self> {
        let s = std::fs::read_to_string(path)?;
        NormSpec::from_json_str(&s)
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_dto()?)?)
    }

    fn from_dto(dto: SpecJson) -> Result<Self> {
        let spec = match dto {
            SpecJson::Euclidean { matrix } => NormSpec::Euclidean { a: matrix_from_rows(&matrix)? },
            SpecJson::Randers { alpha, beta } => NormSpec::Randers {
                alpha: matrix_from_rows(&alpha)?,
                beta: DVector::from_vec(beta),
            },
            SpecJson::Profile { k, n, f, theta_range } => NormSpec::Profile {
                k,
                n,
                f: ProfileFunction::TrigPoly { cos: f.cos, sin: f.sin, period: f.period },
                theta_range: theta_range.map(|r| (r[0], r[1])),
            },
            SpecJson::Expression { n, expr } => {
                NormSpec::Expression { n, expr: Expr::parse(&expr, n)? }
            }
            SpecJson::Dual { base } => NormSpec::Dual { base: Box::new(NormSpec::from_dto(*base)?) },
        };
        spec.validate()?;
        Ok(spec)
    }

    fn to_dto(&self) -> Result<SpecJson> {
        Ok(match self {
            NormSpec::Euclidean { a } => SpecJson::Euclidean { matrix: matrix_to_rows(a) },
            NormSpec::Randers { alpha, beta } => SpecJson::Randers {
                alpha: matrix_to_rows(alpha),
                beta: beta.as_slice().to_vec(),
            },
            NormSpec::Profile { k, n, f, theta_range } => {
                let ProfileFunction::TrigPoly { cos, sin, period } = f else {
                    return Err(Error::InvalidSpec(
                        "only trigonometric-polynomial profiles serialize to JSON".into(),
                    ));
                };
                SpecJson::Profile {
                    k: *k,
                    n: *n,
                    f: ProfileJson { cos: cos.clone(), sin: sin.clone(), period: *period },
                    theta_range: theta_range.map(|(lo, hi)| [lo, hi]),
                }
            }
            NormSpec::Expression { .. } => {
                return Err(Error::InvalidSpec(
                    "expression specs round-trip through their source string; keep the original file".into(),
                ))
            }
            NormSpec::Dual { base } => SpecJson::Dual { base: Box::new(base.to_dto()?) },
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn pt(c: &[f64]) -> Point {
        Point::new(c.to_vec()).unwrap()
    }

    fn identity_euclidean(n: usize) -> NormSpec {
        NormSpec::euclidean_identity(n)
    }

    fn sample_randers() -> NormSpec {
        NormSpec::Randers {
            alpha: DMatrix::identity(3, 3),
            beta: DVector::from_vec(vec![0.3, 0.0, 0.0]),
        }
    }

    fn euler_residuals(spec: &NormSpec, y: &Point) -> (f64, f64, f64) {
        let j = spec.jet3(y).unwrap();
        let n = j.n;
        let x = y.as_slice();
        let scale = j.v.abs().max(1e-30);
        let r1 = {
            let dot: f64 = (0..n).map(|i| j.g[i] * x[i]).sum();
            (dot - 2.0 * j.v).abs() / scale
        };
        let mut r2: f64 = 0.0;
        for i in 0..n {
            let hy: f64 = (0..n).map(|k| j.hess(i, k) * x[k]).sum();
            r2 = r2.max((hy - j.g[i]).abs());
        }
        let gscale = j.g.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-30);
        let mut r3: f64 = 0.0;
        let tscale = j
            .h
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()))
            .max(1e-30);
        for i in 0..n {
            for k in 0..n {
                let ty: f64 = (0..n).map(|l| j.third(i, k, l) * x[l]).sum();
                r3 = r3.max(ty.abs());
            }
        }
        (r1, r2 / gscale, r3 / tscale)
    }

    #[test]
    fn eval_examples() {
        assert_eq!(identity_euclidean(3).eval_e(&pt(&[1.0, 0.0, 0.0])).unwrap(), 0.5);
        let f = ProfileFunction::double_angle(0.7, 0.2, 0.0);
        let spec = NormSpec::Profile { k: 1, n: 3, f, theta_range: None };
        let e = spec.eval_e(&pt(&[1.0, 0.0, 0.0])).unwrap();
        assert!((e - 0.9).abs() < 1e-14); // f(0) = c1 + c2
        let e = sample_randers().eval_e(&pt(&[1.0, 0.0, 0.0])).unwrap();
        assert!((e - 0.845).abs() < 1e-14); // F = 1.3
    }

    #[test]
    fn homogeneity_all_variants() {
        let profile = NormSpec::Profile {
            k: 1,
            n: 3,
            f: ProfileFunction::TrigPoly {
                cos: vec![1.0, 0.0, 0.0, 0.0, 0.1],
                sin: vec![],
                period: Period::TwoPi,
            },
            theta_range: None,
        };
        let expr = NormSpec::Expression {
            n: 3,
            expr: Expr::parse(
                "(+ (* 0.5 (+ (* x1 x1) (* x2 x2) (* x3 x3))) (* 0.05 (sqrt (+ (pow x1 4) (pow x2 4) (pow x3 4)))))",
                3,
            )
            .unwrap(),
        };
        let dual = NormSpec::Dual { base: Box::new(sample_randers()) };
        for spec in [identity_euclidean(3), sample_randers(), profile, expr, dual] {
            let y = pt(&[0.6, -0.8, 0.5]);
            let e1 = spec.eval_e(&y).unwrap();
            for lam in [0.1, 0.37, 2.0, 9.5] {
                let e2 = spec.eval_e(&y.scaled(lam).unwrap()).unwrap();
                assert!(
                    (e2 - lam * lam * e1).abs() <= 1e-10 * lam * lam * e1,
                    "homogeneity for {spec:?} at lambda {lam}"
                );
            }
            let (r1, r2, r3) = euler_residuals(&spec, &y);
            assert!(r1 < 1e-9 && r2 < 1e-9 && r3 < 1e-9, "Euler residuals {r1} {r2} {r3}");
        }
    }

    #[test]
    fn euclidean_jet_is_quadratic() {
        let a = DMatrix::from_row_slice(3, 3, &[2.0, 0.3, 0.0, 0.3, 1.5, 0.1, 0.0, 0.1, 1.0]);
        let spec = NormSpec::Euclidean { a: a.clone() };
        let j = spec.jet3(&pt(&[0.4, 1.0, -0.3])).unwrap();
        for i in 0..3 {
            for k in 0..3 {
                assert!((j.hess(i, k) - a[(i, k)]).abs() < 1e-15);
                for l in 0..3 {
                    assert_eq!(j.third(i, k, l), 0.0);
                }
            }
        }
    }

    #[test]
    fn randers_jet_matches_finite_differences() {
        let spec = sample_randers();
        let y = pt(&[0.6, 0.8, 0.0]);
        let j = spec.jet3(&y).unwrap();
        let h = 1e-5;
        // Richardson-extrapolated central differences of eval_e
        let d1 = |i: usize| {
            let e = |s: f64| {
                let mut c = y.as_slice().to_vec();
                c[i] += s;
                spec.eval_e(&pt(&c)).unwrap()
            };
            let a = (e(h) - e(-h)) / (2.0 * h);
            let b = (e(h / 2.0) - e(-h / 2.0)) / h;
            (4.0 * b - a) / 3.0
        };
        for i in 0..3 {
            assert!((j.g[i] - d1(i)).abs() < 1e-6 * (1.0 + j.g[i].abs()), "grad {i}");
        }
    }

    #[test]
    fn profile_jet_matches_finite_differences() {
        let f = ProfileFunction::TrigPoly {
            cos: vec![1.0, 0.0, 0.0, 0.0, 0.1],
            sin: vec![],
            period: Period::TwoPi,
        };
        let spec = NormSpec::Profile { k: 1, n: 3, f, theta_range: None };
        let y = pt(&[0.5, 0.7, -0.4]);
        let j = spec.jet3(&y).unwrap();
        let h = 1e-5;
        for i in 0..3 {
            let e = |s: f64| {
                let mut c = y.as_slice().to_vec();
                c[i] += s;
                spec.eval_e(&pt(&c)).unwrap()
            };
            let fd = (e(h) - e(-h)) / (2.0 * h);
            assert!((j.g[i] - fd).abs() < 1e-8, "grad {i}: {} vs {}", j.g[i], fd);
        }
        // Hessian against FD of the jet gradient
        for i in 0..3 {
            let gk = |s: f64, k: usize| {
                let mut c = y.as_slice().to_vec();
                c[i] += s;
                spec.jet3(&pt(&c)).unwrap().g[k]
            };
            for k in 0..3 {
                let fd = (gk(1e-5, k) - gk(-1e-5, k)) / 2e-5;
                assert!((j.hess(i, k) - fd).abs() < 1e-6, "hess {i}{k}");
            }
        }
    }

    #[test]
    fn profile_axis_point_is_rejected_for_jets() {
        let spec = NormSpec::Profile {
            k: 1,
            n: 3,
            f: ProfileFunction::constant(0.5),
            theta_range: None,
        };
        assert!(matches!(
            spec.jet3(&pt(&[1.0, 0.0, 0.0])),
            Err(Error::NonSmoothPoint(_))
        ));
        // but the plain evaluation works there
        assert!((spec.eval_e(&pt(&[1.0, 0.0, 0.0])).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn profile_k2_split_angle() {
        let spec = NormSpec::Profile {
            k: 2,
            n: 4,
            f: ProfileFunction::TrigPoly {
                cos: vec![1.0, 0.0, 0.2],
                sin: vec![],
                period: Period::Pi,
            },
            theta_range: None,
        };
        let y = pt(&[0.3, 0.4, 0.0, 0.5]);
        let (r2, theta) = split_angle(y.as_slice(), 2);
        assert!((r2 - 0.5).abs() < 1e-15);
        let e = spec.eval_e(&y).unwrap();
        assert!((e - r2 * (1.0 + 0.2 * (2.0 * theta).cos())).abs() < 1e-14);
        let (er1, er2, er3) = {
            let spec = spec.clone();
            let j = spec.jet3(&y).unwrap();
            let _ = j;
            super::tests::euler_residuals(&spec, &y)
        };
        assert!(er1 < 1e-10 && er2 < 1e-10 && er3 < 1e-10);
    }

    #[test]
    fn convexity_scan_flags_bad_profile() {
        // profile with a sin(2t) term: positive-definiteness fails somewhere
        let bad = NormSpec::Profile {
            k: 1,
            n: 3,
            f: ProfileFunction::double_angle(1.0, 0.2, 0.4),
            theta_range: None,
        };
        let samples: Vec<Point> = (1..40)
            .map(|i| {
                let th = PI * i as f64 / 40.0;
                pt(&[th.cos(), th.sin() * 0.8, th.sin() * 0.6])
            })
            .collect();
        let report = check_strong_convexity(&bad, &samples).unwrap();
        assert!(!report.is_strongly_convex());

        let good = sample_randers();
        let report = check_strong_convexity(&good, &samples).unwrap();
        assert!(report.is_strongly_convex());
        let spherical = identity_euclidean(3);
        let report = check_strong_convexity(&spherical, &samples).unwrap();
        assert!((report.min_eigenvalue - 1.0).abs() < 1e-12);
    }

    #[test]
    fn expression_parse_and_jet() {
        let expr = Expr::parse("(/ (pow (+ (* x1 x1) (* x2 x2)) 2) (+ (* x1 x1) (* x2 x2)))", 2)
            .unwrap();
        let spec = NormSpec::Expression { n: 2, expr };
        let y = pt(&[0.8, -0.4]);
        let e = spec.eval_e(&y).unwrap();
        assert!((e - (0.8f64 * 0.8 + 0.16)).abs() < 1e-14);
        assert!(Expr::parse("(pow x1 x2)", 2).is_err());
        assert!(Expr::parse("(+ x1 x3)", 2).is_err());
        assert!(Expr::parse("(* x1", 2).is_err());
    }

    #[test]
    fn linear_image_profile_matches_direct_pushforward() {
        let f = ProfileFunction::TrigPoly {
            cos: vec![1.0, 0.0, 0.0, 0.0, 0.1],
            sin: vec![],
            period: Period::TwoPi,
        };
        let (a, b) = (1.4, 0.8);
        let h = ProfileFunction::LinearImage { base: Box::new(f.clone()), a, b };
        for i in 1..16 {
            let theta = PI * i as f64 / 16.0;
            // direct evaluation of E1(Phi^{-1} z) on the unit ray of angle theta
            let (x1, x2) = (theta.cos() / a, theta.sin() / b);
            let r2 = x1 * x1 + x2 * x2;
            let t = x2.atan2(x1);
            let expected = r2 * f.eval(t).unwrap();
            let got = h.eval(theta).unwrap();
            assert!((got - expected).abs() < 1e-13, "theta {theta}");
            // derivative consistency via finite differences
            let j = h.jet(theta).unwrap();
            let step = 1e-5;
            let fd = (h.eval(theta + step).unwrap() - h.eval(theta - step).unwrap()) / (2.0 * step);
            assert!((j.d1 - fd).abs() < 1e-8);
        }
    }

    #[test]
    fn legendre_image_of_round_profile_is_identity() {
        let f = ProfileFunction::constant(0.5);
        let h = ProfileFunction::LegendreImage { base: Box::new(f), a: 1.0, b: 1.0 };
        for i in 1..10 {
            let theta = PI * i as f64 / 10.0;
            let j = h.jet(theta).unwrap();
            assert!((j.v - 0.5).abs() < 1e-12, "value at {theta}");
            assert!(j.d1.abs() < 1e-10 && j.d2.abs() < 1e-8 && j.d3.abs() < 1e-6);
        }
    }

    #[test]
    fn legendre_image_jets_match_finite_differences() {
        let f = ProfileFunction::TrigPoly {
            cos: vec![1.0, 0.0, 0.2, 0.0, 0.05],
            sin: vec![],
            period: Period::TwoPi,
        };
        let h = ProfileFunction::LegendreImage { base: Box::new(f), a: -1.2, b: 0.9 };
        for theta in [0.6, 1.3, 2.0, 2.8] {
            let j = h.jet(theta).unwrap();
            let step = 1e-4;
            let e = |t: f64| h.eval(t).unwrap();
            let fd1 = (e(theta + step) - e(theta - step)) / (2.0 * step);
            let fd2 = (e(theta + step) - 2.0 * e(theta) + e(theta - step)) / (step * step);
            let s3 = 2e-3; // wider step: third differences amplify rounding noise
            let fd3 = (e(theta + 2.0 * s3) - 2.0 * e(theta + s3) + 2.0 * e(theta - s3)
                - e(theta - 2.0 * s3))
                / (2.0 * s3 * s3 * s3);
            assert!((j.d1 - fd1).abs() < 1e-7, "d1 at {theta}: {} vs {fd1}", j.d1);
            assert!((j.d2 - fd2).abs() < 1e-5, "d2 at {theta}: {} vs {fd2}", j.d2);
            assert!((j.d3 - fd3).abs() < 1e-3, "d3 at {theta}: {} vs {fd3}", j.d3);
            assert!(j.d4.is_nan());
        }
    }

    #[test]
    fn dual_energy_involution_on_randers() {
        let spec = sample_randers();
        let dual = NormSpec::Dual { base: Box::new(spec.clone()) };
        let bidual = NormSpec::Dual { base: Box::new(dual.clone()) };
        let y = pt(&[0.3, -0.9, 0.5]);
        let e = spec.eval_e(&y).unwrap();
        let e2 = bidual.eval_e(&y).unwrap();
        assert!((e - e2).abs() < 1e-10 * e);
    }

    #[test]
    fn bump_is_smooth_and_supported() {
        let bump = Bump { lo: 1.0, hi: 2.0, eps: 0.1 };
        assert_eq!(bump.jet(0.5).v, 0.0);
        assert_eq!(bump.jet(2.5).v, 0.0);
        let j = bump.jet(1.5);
        assert!((j.v - 0.1).abs() < 1e-15); // peak value eps
        assert!(j.d1.abs() < 1e-12); // critical at center
        // near-boundary values decay to zero smoothly
        assert!(bump.jet(1.01).v < 1e-9);
    }

    #[test]
    fn tabulated_hermite_reproduces_cubic() {
        // exact for cubic data
        let f = |t: f64| 0.3 * t * t * t - t * t + 2.0;
        let fp = |t: f64| 0.9 * t * t - 2.0 * t;
        let m = 11;
        let (t0, dt) = (0.0, 0.1);
        let table = HermiteTable {
            t0,
            dt,
            values: (0..m).map(|i| f(t0 + dt * i as f64)).collect(),
            derivs: (0..m).map(|i| fp(t0 + dt * i as f64)).collect(),
            second: None,
        };
        let j = table.jet(0.537).unwrap();
        assert!((j.v - f(0.537)).abs() < 1e-13);
        assert!((j.d1 - fp(0.537)).abs() < 1e-12);
        assert!((j.d2 - (1.8 * 0.537 - 2.0)).abs() < 1e-10);
    }

    #[test]
    fn json_round_trip() {
        let src = r#"{"kind":"profile","k":1,"n":3,"f":{"cos":[1.0,0.0,0.2],"sin":[],"period":"2pi"}}"#;
        let spec = NormSpec::from_json_str(src).unwrap();
        let s = spec.to_json_string().unwrap();
        let spec2 = NormSpec::from_json_str(&s).unwrap();
        assert_eq!(spec, spec2);

        let src = r#"{"kind":"euclidean","matrix":[[2.0,0.0],[0.0,1.0]]}"#;
        let spec = NormSpec::from_json_str(src).unwrap();
        assert!((spec.eval_e(&pt(&[1.0, 1.0])).unwrap() - 1.5).abs() < 1e-15);

        let src = r#"{"kind":"expression","n":2,"expr":"(* 0.5 (+ (* x1 x1) (* x2 x2)))"}"#;
        let spec = NormSpec::from_json_str(src).unwrap();
        assert!((spec.eval_e(&pt(&[3.0, 4.0])).unwrap() - 12.5).abs() < 1e-12);

        // malformed input surfaces as an error, not a panic
        assert!(NormSpec::from_json_str(r#"{"kind":"euclidean","matrix":[[1.0,0.0]]}"#).is_err());
    }
}
