//! Taylor jet arithmetic.
//!
//! `Jet3` carries value, gradient, Hessian and third-derivative tensor of a
//! scalar function of `n` variables at a point, propagated exactly through
//! arithmetic and elementary functions.  All derivative storage is dense and
//! fully symmetric; dimensions here are tiny (n <= 6), so the cubic cost of
//! products is irrelevant.
//!
//! `Jet1` is a one-dimensional order-4 jet (value plus four derivatives in a
//! single parameter), used for curve and profile calculus.  Order 4 is needed
//! because a profile obtained as the image of another one under a gradient map
//! loses one derivative order in the parametric chain rule.

use crate::error::{Error, Result};

/// Order-3 jet of a scalar function of `n` variables.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet3 {
    pub n: usize,
    /// value
    pub v: f64,
    /// gradient, length n
    pub g: Vec<f64>,
    /// Hessian, row-major n*n, symmetric
    pub h: Vec<f64>,
    /// third derivatives, n*n*n, fully symmetric
    pub t: Vec<f64>,
}

impl Jet3 {
    pub fn constant(n: usize, v: f64) -> Self {
        Jet3 {
            n,
            v,
            g: vec![0.0; n],
            h: vec![0.0; n * n],
            t: vec![0.0; n * n * n],
        }
    }

    /// Jet of the coordinate function `x_i` at a point with `x_i = v`.
    pub fn var(n: usize, i: usize, v: f64) -> Self {
        let mut j = Jet3::constant(n, v);
        j.g[i] = 1.0;
        j
    }

    #[inline]
    pub fn hess(&self, i: usize, j: usize) -> f64 {
        self.h[i * self.n + j]
    }

    #[inline]
    pub fn third(&self, i: usize, j: usize, k: usize) -> f64 {
        self.t[(i * self.n + j) * self.n + k]
    }

    pub fn add(&self, o: &Jet3) -> Jet3 {
        let mut r = self.clone();
        r.v += o.v;
        for (a, b) in r.g.iter_mut().zip(&o.g) {
            *a += b;
        }
        for (a, b) in r.h.iter_mut().zip(&o.h) {
            *a += b;
        }
        for (a, b) in r.t.iter_mut().zip(&o.t) {
            *a += b;
        }
        r
    }

    pub fn sub(&self, o: &Jet3) -> Jet3 {
        self.add(&o.scale(-1.0))
    }

    pub fn scale(&self, c: f64) -> Jet3 {
        let mut r = self.clone();
        r.v *= c;
        for a in r.g.iter_mut() {
            *a *= c;
        }
        for a in r.h.iter_mut() {
            *a *= c;
        }
        for a in r.t.iter_mut() {
            *a *= c;
        }
        r
    }

    pub fn add_scalar(&self, c: f64) -> Jet3 {
        let mut r = self.clone();
        r.v += c;
        r
    }

    /// Product via the Leibniz rule up to third order.
    pub fn mul(&self, o: &Jet3) -> Jet3 {
        let n = self.n;
        let mut r = Jet3::constant(n, self.v * o.v);
        for i in 0..n {
            r.g[i] = self.g[i] * o.v + self.v * o.g[i];
        }
        for i in 0..n {
            for j in 0..n {
                r.h[i * n + j] = self.hess(i, j) * o.v
                    + self.g[i] * o.g[j]
                    + self.g[j] * o.g[i]
                    + self.v * o.hess(i, j);
            }
        }
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    r.t[(i * n + j) * n + k] = self.third(i, j, k) * o.v
                        + self.hess(i, j) * o.g[k]
                        + self.hess(i, k) * o.g[j]
                        + self.hess(j, k) * o.g[i]
                        + self.g[i] * o.hess(j, k)
                        + self.g[j] * o.hess(i, k)
                        + self.g[k] * o.hess(i, j)
                        + self.v * o.third(i, j, k);
                }
            }
        }
        r
    }

    /// Composition with a scalar function given by its derivatives
    /// `phi = [phi(v), phi'(v), phi''(v), phi'''(v)]` at `v = self.v`.
    pub fn compose(&self, phi: [f64; 4]) -> Jet3 {
        let n = self.n;
        let [p0, p1, p2, p3] = phi;
        let mut r = Jet3::constant(n, p0);
        for i in 0..n {
            r.g[i] = p1 * self.g[i];
        }
        for i in 0..n {
            for j in 0..n {
                r.h[i * n + j] = p2 * self.g[i] * self.g[j] + p1 * self.hess(i, j);
            }
        }
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    r.t[(i * n + j) * n + k] = p3 * self.g[i] * self.g[j] * self.g[k]
                        + p2 * (self.hess(i, j) * self.g[k]
                            + self.hess(i, k) * self.g[j]
                            + self.hess(j, k) * self.g[i])
                        + p1 * self.third(i, j, k);
                }
            }
        }
        r
    }

    pub fn recip(&self) -> Result<Jet3> {
        let x = self.v;
        if x == 0.0 {
            return Err(Error::Domain("division by zero".into()));
        }
        let ix = 1.0 / x;
        Ok(self.compose([ix, -ix * ix, 2.0 * ix * ix * ix, -6.0 * ix * ix * ix * ix]))
    }

    pub fn div(&self, o: &Jet3) -> Result<Jet3> {
        Ok(self.mul(&o.recip()?))
    }

    pub fn sqrt(&self) -> Result<Jet3> {
        let x = self.v;
        if x <= 0.0 {
            return Err(Error::Domain(format!("sqrt of non-positive value {x}")));
        }
        let s = x.sqrt();
        Ok(self.compose([s, 0.5 / s, -0.25 / (x * s), 0.375 / (x * x * s)]))
    }

    pub fn acos(&self) -> Result<Jet3> {
        let x = self.v;
        let u = 1.0 - x * x;
        if u <= 0.0 {
            return Err(Error::Domain(format!("acos derivative singular at {x}")));
        }
        let s = u.sqrt();
        Ok(self.compose([
            x.acos(),
            -1.0 / s,
            -x / (u * s),
            -(1.0 + 2.0 * x * x) / (u * u * s),
        ]))
    }

    /// Real power.  Non-integer exponents require a positive base.
    pub fn powf(&self, p: f64) -> Result<Jet3> {
        let x = self.v;
        if p == p.round() && (-10.0..=10.0).contains(&p) {
            return self.powi(p as i32);
        }
        if x <= 0.0 {
            return Err(Error::Domain(format!(
                "pow with non-integer exponent {p} at non-positive base {x}"
            )));
        }
        Ok(self.compose([
            x.powf(p),
            p * x.powf(p - 1.0),
            p * (p - 1.0) * x.powf(p - 2.0),
            p * (p - 1.0) * (p - 2.0) * x.powf(p - 3.0),
        ]))
    }

    pub fn powi(&self, p: i32) -> Result<Jet3> {
        match p {
            0 => Ok(Jet3::constant(self.n, 1.0)),
            1 => Ok(self.clone()),
            _ if p > 1 => {
                let mut r = self.clone();
                for _ in 1..p {
                    r = r.mul(self);
                }
                Ok(r)
            }
            _ => self.powi(-p)?.recip(),
        }
    }
}

/// One-dimensional order-4 jet: value and four derivatives in a parameter.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Jet1 {
    pub v: f64,
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
    pub d4: f64,
}

impl Jet1 {
    pub fn constant(v: f64) -> Self {
        Jet1 { v, ..Default::default() }
    }

    /// Jet of the parameter itself.
    pub fn var(v: f64) -> Self {
        Jet1 { v, d1: 1.0, ..Default::default() }
    }

    pub fn from_derivs(d: [f64; 5]) -> Self {
        Jet1 { v: d[0], d1: d[1], d2: d[2], d3: d[3], d4: d[4] }
    }

    pub fn derivs(&self) -> [f64; 5] {
        [self.v, self.d1, self.d2, self.d3, self.d4]
    }

    /// Drop the value and shift derivatives down one order: the jet of the
    /// derivative function, valid to order 3 (top coefficient is unknown).
    pub fn shift(self) -> Jet1 {
        Jet1 { v: self.d1, d1: self.d2, d2: self.d3, d3: self.d4, d4: 0.0 }
    }

    pub fn add(self, o: Jet1) -> Jet1 {
        Jet1 {
            v: self.v + o.v,
            d1: self.d1 + o.d1,
            d2: self.d2 + o.d2,
            d3: self.d3 + o.d3,
            d4: self.d4 + o.d4,
        }
    }

    pub fn sub(self, o: Jet1) -> Jet1 {
        self.add(o.scale(-1.0))
    }

    pub fn scale(self, c: f64) -> Jet1 {
        Jet1 {
            v: c * self.v,
            d1: c * self.d1,
            d2: c * self.d2,
            d3: c * self.d3,
            d4: c * self.d4,
        }
    }

    pub fn add_scalar(self, c: f64) -> Jet1 {
        Jet1 { v: self.v + c, ..self }
    }

    pub fn mul(self, o: Jet1) -> Jet1 {
        let a = self.derivs();
        let b = o.derivs();
        Jet1 {
            v: a[0] * b[0],
            d1: a[1] * b[0] + a[0] * b[1],
            d2: a[2] * b[0] + 2.0 * a[1] * b[1] + a[0] * b[2],
            d3: a[3] * b[0] + 3.0 * a[2] * b[1] + 3.0 * a[1] * b[2] + a[0] * b[3],
            d4: a[4] * b[0] + 4.0 * a[3] * b[1] + 6.0 * a[2] * b[2] + 4.0 * a[1] * b[3]
                + a[0] * b[4],
        }
    }

    /// Composition `phi(self)` with `phi = [value, phi', .., phi'''']` at `self.v`
    /// (Faa di Bruno to order 4).
    pub fn compose(self, phi: [f64; 5]) -> Jet1 {
        let [p0, p1, p2, p3, p4] = phi;
        let (u1, u2, u3, u4) = (self.d1, self.d2, self.d3, self.d4);
        Jet1 {
            v: p0,
            d1: p1 * u1,
            d2: p2 * u1 * u1 + p1 * u2,
            d3: p3 * u1 * u1 * u1 + 3.0 * p2 * u1 * u2 + p1 * u3,
            d4: p4 * u1 * u1 * u1 * u1
                + 6.0 * p3 * u1 * u1 * u2
                + p2 * (4.0 * u1 * u3 + 3.0 * u2 * u2)
                + p1 * u4,
        }
    }

    pub fn recip(self) -> Result<Jet1> {
        let x = self.v;
        if x == 0.0 {
            return Err(Error::Domain("division by zero".into()));
        }
        let ix = 1.0 / x;
        let ix2 = ix * ix;
        Ok(self.compose([ix, -ix2, 2.0 * ix2 * ix, -6.0 * ix2 * ix2, 24.0 * ix2 * ix2 * ix]))
    }

    pub fn div(self, o: Jet1) -> Result<Jet1> {
        Ok(self.mul(o.recip()?))
    }

    pub fn sqrt(self) -> Result<Jet1> {
        let x = self.v;
        if x <= 0.0 {
            return Err(Error::Domain(format!("sqrt of non-positive value {x}")));
        }
        let s = x.sqrt();
        Ok(self.compose([
            s,
            0.5 / s,
            -0.25 / (x * s),
            0.375 / (x * x * s),
            -0.9375 / (x * x * x * s),
        ]))
    }

    pub fn sin(self) -> Jet1 {
        let (s, c) = self.v.sin_cos();
        self.compose([s, c, -s, -c, s])
    }

    pub fn cos(self) -> Jet1 {
        let (s, c) = self.v.sin_cos();
        self.compose([c, -s, -c, s, c])
    }

    pub fn exp(self) -> Jet1 {
        let e = self.v.exp();
        self.compose([e, e, e, e, e])
    }

    pub fn acos(self) -> Result<Jet1> {
        let x = self.v;
        let u = 1.0 - x * x;
        if u <= 0.0 {
            return Err(Error::Domain(format!("acos derivative singular at {x}")));
        }
        let s = u.sqrt();
        // derivatives of -(1-x^2)^{-1/2}
        Ok(self.compose([
            x.acos(),
            -1.0 / s,
            -x / (u * s),
            -(1.0 + 2.0 * x * x) / (u * u * s),
            -3.0 * x * (3.0 + 2.0 * x * x) / (u * u * u * s),
        ]))
    }

    pub fn atan2(self, x: Jet1) -> Result<Jet1> {
        // d/dt atan2(y, x) = (y' x - x' y) / (x^2 + y^2); the jets of y' and x'
        // come from shifting, valid to order 3, which is all the quotient needs.
        let y = self;
        let q = x.mul(x).add(y.mul(y));
        if q.v == 0.0 {
            return Err(Error::Domain("atan2 at the origin".into()));
        }
        let r = y.shift().mul(x).sub(x.shift().mul(y)).div(q)?;
        Ok(Jet1 { v: y.v.atan2(x.v), d1: r.v, d2: r.d1, d3: r.d2, d4: r.d3 })
    }
}

/// Derivatives of `y(theta)` to order 4 from parametric jets `p(t) = y(theta(t))`
/// and `theta(t)`, both order-4 in `t`.  Requires `theta' != 0`.  Implemented by
/// repeated division of shifted jets: `y' o theta = p'/theta'` and so on; each
/// shift loses one valid order, which is exactly why the inputs carry order 4.
pub fn parametric_derivs(p: Jet1, th: Jet1) -> Result<[f64; 5]> {
    if th.d1 == 0.0 {
        return Err(Error::Domain("parametric chart with vanishing theta'".into()));
    }
    let tp = th.shift();
    let q = p.shift().div(tp)?; // y'  (valid to order 3)
    let r = q.shift().div(tp)?; // y'' (valid to order 2)
    let s = r.shift().div(tp)?; // y'''(valid to order 1)
    let w = s.shift().div(tp)?; // y''''(value only)
    Ok([p.v, q.v, r.v, s.v, w.v])
}
