//! Scalar rings for exact forward-mode differentiation.
//!
//! Every pointwise quantity in this crate (structure matrices, chart
//! functions, form coefficients) is evaluated over a generic scalar ring
//! `S`. Instantiating `S = f64` gives plain values; instantiating
//! `S = Jet<f64>` gives values plus first derivatives; nesting jets gives
//! higher orders. Complex arithmetic lives in [`Cx<S>`] so that complex
//! coefficient functions differentiate through the same machinery.
//!
//! The nesting depth actually reachable at runtime is bounded by the
//! operator compositions used (at most three: e.g. the radial part of
//! `d` applied to a field built from `d dbar |z|^2`). The dispatch layer
//! in [`crate::field`] instantiates depths 0..=3 and panics beyond.

use arrayvec::ArrayVec;

/// Maximum number of real coordinates (ambient dimension 2n or a chart
/// parameter dimension). Six covers n <= 3.
pub const MAX_DIM: usize = 6;

/// Arithmetic + elementary functions over a differentiable scalar ring.
pub trait Scalar: Clone + Send + Sync + std::fmt::Debug + 'static {
    fn from_f64(v: f64) -> Self;
    /// The underlying point value (all derivative parts dropped).
    fn value(&self) -> f64;
    /// Max absolute value over all stored components; zero only for the
    /// exact zero element. Used for conservative pruning.
    fn abs_bound(&self) -> f64;

    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn neg(&self) -> Self;
    fn recip(&self) -> Self;
    fn scale(&self, k: f64) -> Self;

    fn exp(&self) -> Self;
    fn ln(&self) -> Self;
    fn sqrt(&self) -> Self;
    fn sin(&self) -> Self;
    fn cos(&self) -> Self;
    fn atan2(y: &Self, x: &Self) -> Self;

    fn zero() -> Self {
        Self::from_f64(0.0)
    }
    fn one() -> Self {
        Self::from_f64(1.0)
    }
    fn div(&self, o: &Self) -> Self {
        self.mul(&o.recip())
    }
    fn powi(&self, k: i32) -> Self {
        match k {
            0 => Self::one(),
            _ if k < 0 => self.recip().powi(-k),
            _ => {
                // exponentiation by squaring keeps jet ops low
                let mut base = self.clone();
                let mut acc: Option<Self> = None;
                let mut e = k as u32;
                loop {
                    if e & 1 == 1 {
                        acc = Some(match acc {
                            None => base.clone(),
                            Some(a) => a.mul(&base),
                        });
                    }
                    e >>= 1;
                    if e == 0 {
                        break;
                    }
                    base = base.mul(&base);
                }
                acc.unwrap()
            }
        }
    }
}

impl Scalar for f64 {
    #[inline]
    fn from_f64(v: f64) -> Self {
        v
    }
    #[inline]
    fn value(&self) -> f64 {
        *self
    }
    #[inline]
    fn abs_bound(&self) -> f64 {
        self.abs()
    }
    #[inline]
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    #[inline]
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    #[inline]
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    #[inline]
    fn neg(&self) -> Self {
        -self
    }
    #[inline]
    fn recip(&self) -> Self {
        1.0 / self
    }
    #[inline]
    fn scale(&self, k: f64) -> Self {
        self * k
    }
    #[inline]
    fn exp(&self) -> Self {
        f64::exp(*self)
    }
    #[inline]
    fn ln(&self) -> Self {
        f64::ln(*self)
    }
    #[inline]
    fn sqrt(&self) -> Self {
        f64::sqrt(*self)
    }
    #[inline]
    fn sin(&self) -> Self {
        f64::sin(*self)
    }
    #[inline]
    fn cos(&self) -> Self {
        f64::cos(*self)
    }
    #[inline]
    fn atan2(y: &Self, x: &Self) -> Self {
        f64::atan2(*y, *x)
    }
}

/// First-order jet over `S`: value plus gradient.
///
/// An empty gradient denotes a constant (zero gradient of any length);
/// this lets `from_f64` work without knowing the seeding dimension.
#[derive(Clone, Debug)]
pub struct Jet<S: Scalar> {
    pub v: S,
    pub g: ArrayVec<S, MAX_DIM>,
}

impl<S: Scalar> Jet<S> {
    pub fn constant(v: S) -> Self {
        Jet {
            v,
            g: ArrayVec::new(),
        }
    }

    /// A jet seeded as the `i`-th of `dim` independent variables.
    pub fn variable(v: S, i: usize, dim: usize) -> Self {
        assert!(dim <= MAX_DIM && i < dim);
        let mut g = ArrayVec::new();
        for k in 0..dim {
            g.push(if k == i { S::one() } else { S::zero() });
        }
        Jet { v, g }
    }

    /// Partial derivative `i`; zero if this jet is a constant.
    pub fn d(&self, i: usize) -> S {
        self.g.get(i).cloned().unwrap_or_else(S::zero)
    }

    fn zip<F: Fn(&S, &S) -> S>(&self, o: &Self, f: F) -> ArrayVec<S, MAX_DIM> {
        let n = self.g.len().max(o.g.len());
        debug_assert!(
            self.g.is_empty() || o.g.is_empty() || self.g.len() == o.g.len(),
            "jet dimension mismatch"
        );
        let z = S::zero();
        (0..n)
            .map(|i| f(self.g.get(i).unwrap_or(&z), o.g.get(i).unwrap_or(&z)))
            .collect()
    }

    fn map<F: Fn(&S) -> S>(&self, f: F) -> ArrayVec<S, MAX_DIM> {
        self.g.iter().map(f).collect()
    }

    /// Chain rule for a univariate function: value f(v), derivative fp(v).
    fn lift(&self, fv: S, fp: S) -> Self {
        Jet {
            g: self.map(|gi| gi.mul(&fp)),
            v: fv,
        }
    }
}

impl<S: Scalar> Scalar for Jet<S> {
    fn from_f64(v: f64) -> Self {
        Jet::constant(S::from_f64(v))
    }
    fn value(&self) -> f64 {
        self.v.value()
    }
    fn abs_bound(&self) -> f64 {
        let mut m = self.v.abs_bound();
        for gi in &self.g {
            m = m.max(gi.abs_bound());
        }
        m
    }
    fn add(&self, o: &Self) -> Self {
        Jet {
            v: self.v.add(&o.v),
            g: self.zip(o, |a, b| a.add(b)),
        }
    }
    fn sub(&self, o: &Self) -> Self {
        Jet {
            v: self.v.sub(&o.v),
            g: self.zip(o, |a, b| a.sub(b)),
        }
    }
    fn mul(&self, o: &Self) -> Self {
        Jet {
            v: self.v.mul(&o.v),
            g: self.zip(o, |a, b| a.mul(&o.v).add(&b.mul(&self.v))),
        }
    }
    fn neg(&self) -> Self {
        Jet {
            v: self.v.neg(),
            g: self.map(|a| a.neg()),
        }
    }
    fn recip(&self) -> Self {
        let iv = self.v.recip();
        let d = iv.mul(&iv).neg(); // -1/v^2
        self.lift(iv, d)
    }
    fn scale(&self, k: f64) -> Self {
        Jet {
            v: self.v.scale(k),
            g: self.map(|a| a.scale(k)),
        }
    }
    fn exp(&self) -> Self {
        let e = self.v.exp();
        self.lift(e.clone(), e)
    }
    fn ln(&self) -> Self {
        self.lift(self.v.ln(), self.v.recip())
    }
    fn sqrt(&self) -> Self {
        let s = self.v.sqrt();
        let d = s.recip().scale(0.5);
        self.lift(s, d)
    }
    fn sin(&self) -> Self {
        self.lift(self.v.sin(), self.v.cos())
    }
    fn cos(&self) -> Self {
        self.lift(self.v.cos(), self.v.sin().neg())
    }
    fn atan2(y: &Self, x: &Self) -> Self {
        // d atan2(y,x) = (x dy - y dx) / (x^2 + y^2)
        let den = x.v.mul(&x.v).add(&y.v.mul(&y.v)).recip();
        Jet {
            v: S::atan2(&y.v, &x.v),
            g: y.zip(x, |dy, dx| x.v.mul(dy).sub(&y.v.mul(dx)).mul(&den)),
        }
    }
}

/// Complex numbers over a scalar ring.
#[derive(Clone, Debug)]
pub struct Cx<S: Scalar> {
    pub re: S,
    pub im: S,
}

impl<S: Scalar + Copy> Copy for Cx<S> {}

pub type C64 = Cx<f64>;

impl C64 {
    pub const ZERO: C64 = Cx { re: 0.0, im: 0.0 };
    pub const ONE: C64 = Cx { re: 1.0, im: 0.0 };
    pub const I: C64 = Cx { re: 0.0, im: 1.0 };

    pub fn abs(&self) -> f64 {
        self.re.hypot(self.im)
    }
}

impl<S: Scalar> Cx<S> {
    pub fn new(re: S, im: S) -> Self {
        Cx { re, im }
    }
    pub fn real(re: S) -> Self {
        Cx { re, im: S::zero() }
    }
    pub fn from_c64(c: &C64) -> Self {
        Cx {
            re: S::from_f64(c.re),
            im: S::from_f64(c.im),
        }
    }
    pub fn zero() -> Self {
        Cx::real(S::zero())
    }
    pub fn one() -> Self {
        Cx::real(S::one())
    }
    pub fn i() -> Self {
        Cx::new(S::zero(), S::one())
    }

    pub fn value(&self) -> C64 {
        Cx {
            re: self.re.value(),
            im: self.im.value(),
        }
    }
    pub fn abs_bound(&self) -> f64 {
        self.re.abs_bound().max(self.im.abs_bound())
    }

    pub fn conj(&self) -> Self {
        Cx {
            re: self.re.clone(),
            im: self.im.neg(),
        }
    }
    pub fn neg(&self) -> Self {
        Cx {
            re: self.re.neg(),
            im: self.im.neg(),
        }
    }
    pub fn add(&self, o: &Self) -> Self {
        Cx {
            re: self.re.add(&o.re),
            im: self.im.add(&o.im),
        }
    }
    pub fn sub(&self, o: &Self) -> Self {
        Cx {
            re: self.re.sub(&o.re),
            im: self.im.sub(&o.im),
        }
    }
    pub fn mul(&self, o: &Self) -> Self {
        Cx {
            re: self.re.mul(&o.re).sub(&self.im.mul(&o.im)),
            im: self.re.mul(&o.im).add(&self.im.mul(&o.re)),
        }
    }
    pub fn mul_s(&self, s: &S) -> Self {
        Cx {
            re: self.re.mul(s),
            im: self.im.mul(s),
        }
    }
    pub fn scale(&self, k: f64) -> Self {
        Cx {
            re: self.re.scale(k),
            im: self.im.scale(k),
        }
    }
    pub fn mul_c64(&self, c: &C64) -> Self {
        Cx {
            re: self.re.scale(c.re).sub(&self.im.scale(c.im)),
            im: self.re.scale(c.im).add(&self.im.scale(c.re)),
        }
    }
    pub fn mul_i(&self) -> Self {
        Cx {
            re: self.im.neg(),
            im: self.re.clone(),
        }
    }
    pub fn norm_sqr(&self) -> S {
        self.re.mul(&self.re).add(&self.im.mul(&self.im))
    }
    pub fn recip(&self) -> Self {
        let d = self.norm_sqr().recip();
        Cx {
            re: self.re.mul(&d),
            im: self.im.neg().mul(&d),
        }
    }
    pub fn div(&self, o: &Self) -> Self {
        self.mul(&o.recip())
    }
    pub fn exp(&self) -> Self {
        let r = self.re.exp();
        Cx {
            re: r.mul(&self.im.cos()),
            im: r.mul(&self.im.sin()),
        }
    }
    pub fn ln(&self) -> Self {
        Cx {
            re: self.norm_sqr().ln().scale(0.5),
            im: S::atan2(&self.im, &self.re),
        }
    }
    pub fn powi(&self, k: i32) -> Self {
        match k {
            0 => Cx::one(),
            _ if k < 0 => self.recip().powi(-k),
            _ => {
                let mut base = self.clone();
                let mut acc: Option<Self> = None;
                let mut e = k as u32;
                loop {
                    if e & 1 == 1 {
                        acc = Some(match acc {
                            None => base.clone(),
                            Some(a) => a.mul(&base),
                        });
                    }
                    e >>= 1;
                    if e == 0 {
                        break;
                    }
                    base = base.mul(&base);
                }
                acc.unwrap()
            }
        }
    }
}

impl std::fmt::Display for C64 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.im >= 0.0 {
            write!(f, "{}+{}i", self.re, self.im)
        } else {
            write!(f, "{}{}i", self.re, self.im)
        }
    }
}

impl PartialEq for C64 {
    fn eq(&self, other: &Self) -> bool {
        self.re == other.re && self.im == other.im
    }
}

pub type J1 = Jet<f64>;
pub type J2 = Jet<J1>;
pub type J3 = Jet<J2>;
pub type J4 = Jet<J3>;

/// Seed `x` as jet variables one level up from `S`.
pub fn seed<S: Scalar>(x: &[S]) -> Vec<Jet<S>> {
    let dim = x.len();
    x.iter()
        .enumerate()
        .map(|(i, xi)| Jet::variable(xi.clone(), i, dim))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f<S: Scalar>(x: &[S]) -> S {
        // f(x,y) = exp(x*y) + sin(x) / (1 + y^2)
        let xy = x[0].mul(&x[1]);
        let den = S::one().add(&x[1].mul(&x[1]));
        xy.exp().add(&x[0].sin().mul(&den.recip()))
    }

    #[test]
    fn first_derivatives_match_closed_form() {
        let (x, y) = (0.7, -0.3);
        let j = seed(&[x, y]);
        let r = f(&j);
        let fx = y * (x * y).exp() + x.cos() / (1.0 + y * y);
        let fy = x * (x * y).exp() - x.sin() * 2.0 * y / (1.0 + y * y).powi(2);
        assert!((r.v - ((x * y).exp() + x.sin() / (1.0 + y * y))).abs() < 1e-14);
        assert!((r.d(0) - fx).abs() < 1e-13);
        assert!((r.d(1) - fy).abs() < 1e-13);
    }

    #[test]
    fn second_derivatives_symmetric_and_match_fd() {
        let (x, y) = (0.4, 0.9);
        let outer = seed(&[x, y]);
        let inner: Vec<J2> = seed(&outer);
        let r = f(&inner);
        let hxy = r.d(0).d(1);
        let hyx = r.d(1).d(0);
        assert!((hxy - hyx).abs() < 1e-12);
        let h = 1e-5;
        let fd = (f(&[x + h, y + h]) - f(&[x + h, y - h]) - f(&[x - h, y + h])
            + f(&[x - h, y - h]))
            / (4.0 * h * h);
        assert!((hxy - fd).abs() < 1e-5, "hxy={hxy} fd={fd}");
    }

    #[test]
    fn third_order_nesting_works() {
        // g(t) = exp(2t), g'''(0) = 8
        let t0: J3 = {
            let a: J1 = Jet::variable(0.0, 0, 1);
            let b: J2 = Jet::variable(a, 0, 1);
            Jet::variable(b, 0, 1)
        };
        let g = t0.scale(2.0).exp();
        let d3 = g.d(0).d(0).d(0);
        assert!((d3 - 8.0).abs() < 1e-12);
    }

    #[test]
    fn complex_exp_ln_roundtrip_with_derivatives() {
        let x = seed(&[0.3, 0.2]);
        let z = Cx::new(x[0].clone(), x[1].clone());
        let w = z.exp().ln();
        assert!((w.re.v - 0.3).abs() < 1e-14);
        assert!((w.im.v - 0.2).abs() < 1e-14);
        assert!((w.re.d(0) - 1.0).abs() < 1e-12);
        assert!((w.re.d(1) - 0.0).abs() < 1e-12);
        assert!((w.im.d(1) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn powi_matches_repeated_mul() {
        let z = Cx::new(0.8f64, -0.4);
        let a = z.powi(5);
        let mut b = Cx::one();
        for _ in 0..5 {
            b = b.mul(&z);
        }
        assert!((a.re - b.re).abs() < 1e-14 && (a.im - b.im).abs() < 1e-14);
        let w = z.powi(-3);
        let c = z.powi(3).recip();
        assert!((w.re - c.re).abs() < 1e-14);
    }
}
