//! Closed-form symbol factors and multivariate polynomials.

use std::collections::BTreeMap;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Multi-index exponent; the second slot is unused in 1D.
pub type MultiIndex = [usize; 2];

/// Sparse polynomial in one or two variables with complex coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    dim: usize,
    terms: BTreeMap<MultiIndex, C64>,
}

impl Polynomial {
    pub fn new(dim: usize, terms: impl IntoIterator<Item = (MultiIndex, C64)>) -> Result<Self> {
        if !(1..=2).contains(&dim) {
            return Err(Error::InvalidInput(format!("polynomial dimension must be 1 or 2, got {dim}")));
        }
        let mut map = BTreeMap::new();
        for (alpha, c) in terms {
            if dim == 1 && alpha[1] != 0 {
                return Err(Error::InvalidInput(format!("1D polynomial has exponent {alpha:?}")));
            }
            if !(c.re.is_finite() && c.im.is_finite()) {
                return Err(Error::InvalidInput("non-finite polynomial coefficient".into()));
            }
            *map.entry(alpha).or_insert(C64::new(0.0, 0.0)) += c;
        }
        map.retain(|_, c| *c != C64::new(0.0, 0.0));
        Ok(Self { dim, terms: map })
    }

    pub fn constant(dim: usize, c: C64) -> Self {
        Self::new(dim, [([0, 0], c)]).expect("valid constant polynomial")
    }

    /// Univariate polynomial in `x_axis` from ascending coefficients.
    pub fn univariate(dim: usize, axis: usize, coeffs: &[f64]) -> Result<Self> {
        Self::new(
            dim,
            coeffs.iter().enumerate().map(|(k, c)| {
                let mut alpha = [0, 0];
                alpha[axis] = k;
                (alpha, C64::new(*c, 0.0))
            }),
        )
    }

    /// Product over axes of probabilists' Hermite polynomials `He_{n_k}((x_k - c_k) / w)`,
    /// expanded in the centered variable `z = x - c`.
    pub fn hermite_centered(degrees: &[usize], width: f64) -> Result<Self> {
        let dim = degrees.len();
        let mut p = Self::constant(dim, C64::new(1.0, 0.0));
        for (axis, &n) in degrees.iter().enumerate() {
            let h = hermite_coeffs(n);
            let scaled: Vec<f64> = h.iter().enumerate().map(|(k, c)| c / width.powi(k as i32)).collect();
            p = p.mul(&Self::univariate(dim, axis, &scaled)?);
        }
        Ok(p)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, &C64)> {
        self.terms.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Highest total degree; zero for the zero polynomial.
    pub fn degree(&self) -> usize {
        self.terms.keys().map(|a| a[0] + a[1]).max().unwrap_or(0)
    }

    /// Some coefficient of total degree `m` is nonzero.
    pub fn has_leading_degree(&self, m: usize) -> bool {
        self.terms.keys().any(|a| a[0] + a[1] == m)
    }

    /// Largest exponent on any single axis.
    pub fn max_axis_degree(&self) -> usize {
        self.terms.keys().map(|a| a[0].max(a[1])).max().unwrap_or(0)
    }

    pub fn eval(&self, x: &[f64]) -> C64 {
        let mut s = C64::new(0.0, 0.0);
        for (alpha, c) in &self.terms {
            let mut m = 1.0;
            for (a, &e) in alpha.iter().enumerate().take(self.dim) {
                m *= x[a].powi(e as i32);
            }
            s += c * m;
        }
        s
    }

    pub fn conj(&self) -> Self {
        Self { dim: self.dim, terms: self.terms.iter().map(|(a, c)| (*a, c.conj())).collect() }
    }

    pub fn scale(&self, k: C64) -> Self {
        Self::new(self.dim, self.terms.iter().map(|(a, c)| (*a, c * k))).expect("finite scaling")
    }

    pub fn mul(&self, other: &Polynomial) -> Self {
        let mut out = Vec::with_capacity(self.terms.len() * other.terms.len());
        for (a, ca) in &self.terms {
            for (b, cb) in &other.terms {
                out.push(([a[0] + b[0], a[1] + b[1]], ca * cb));
            }
        }
        Self::new(self.dim.max(other.dim), out).expect("product of valid polynomials")
    }

    /// The polynomial `z -> p(z + shift)`.
    pub fn shift(&self, shift: &[f64]) -> Self {
        let mut out = Vec::new();
        for (alpha, c) in &self.terms {
            // (z + s)^e = sum_k C(e, k) z^k s^(e - k), taken per axis.
            let per_axis: Vec<Vec<(usize, f64)>> = (0..2)
                .map(|a| {
                    let e = alpha[a];
                    let s = if a < self.dim { shift[a] } else { 0.0 };
                    (0..=e).map(|k| (k, binomial(e, k) * s.powi((e - k) as i32))).collect()
                })
                .collect();
            for (k0, w0) in &per_axis[0] {
                for (k1, w1) in &per_axis[1] {
                    out.push(([*k0, *k1], c * (w0 * w1)));
                }
            }
        }
        Self::new(self.dim, out).expect("shift of valid polynomial")
    }
}

/// Ascending coefficients of the probabilists' Hermite polynomial `He_n`.
pub fn hermite_coeffs(n: usize) -> Vec<f64> {
    let mut prev = vec![1.0];
    if n == 0 {
        return prev;
    }
    let mut cur = vec![0.0, 1.0];
    for k in 1..n {
        // He_{k+1} = x He_k - k He_{k-1}
        let mut next = vec![0.0; k + 2];
        for (i, c) in cur.iter().enumerate() {
            next[i + 1] += c;
        }
        for (i, c) in prev.iter().enumerate() {
            next[i] -= k as f64 * c;
        }
        prev = cur;
        cur = next;
    }
    cur
}

pub fn hermite_eval(n: usize, x: f64) -> f64 {
    let (mut prev, mut cur) = (1.0, x);
    if n == 0 {
        return 1.0;
    }
    for k in 1..n {
        let next = x * cur - k as f64 * prev;
        prev = cur;
        cur = next;
    }
    cur
}

pub(crate) fn binomial(n: usize, k: usize) -> f64 {
    let mut r = 1.0;
    for i in 0..k {
        r = r * (n - i) as f64 / (i + 1) as f64;
    }
    r
}

fn double_factorial_odd(k: usize) -> f64 {
    // (k - 1)!! for even k; (-1)!! = 1.
    let mut r = 1.0;
    let mut j = 1;
    while j < k {
        r *= j as f64;
        j += 2;
    }
    r
}

/// `\int z^m e^{-A z^2} e^{i tau z} dz` without the factor `sqrt(pi/A) e^{-tau^2/(4A)}`.
pub(crate) fn gauss_moment_poly(m: usize, a: f64, tau: f64) -> C64 {
    let b = C64::new(0.0, tau / (2.0 * a));
    let mut s = C64::new(0.0, 0.0);
    let mut k = 0;
    while k <= m {
        s += b.powi((m - k) as i32) * (binomial(m, k) * double_factorial_odd(k) * (2.0 * a).powf(-(k as f64) / 2.0));
        k += 2;
    }
    s
}

/// [`PairTransform::poly_part`] expanded once into a polynomial in `tau`.
#[derive(Debug, Clone)]
pub(crate) struct TauPoly {
    dim: usize,
    n: usize,
    /// Coefficient of `tau_1^a tau_2^b` at `a + n b`.
    coeffs: Vec<C64>,
}

impl TauPoly {
    pub(crate) fn new(rate: f64, q: &Polynomial, dim: usize) -> Self {
        let n = q.max_axis_degree() + 1;
        let mut coeffs = vec![C64::new(0.0, 0.0); if dim == 1 { n } else { n * n }];
        let b = C64::new(0.0, 1.0 / (2.0 * rate));
        let axis = |m: usize| {
            let mut c = vec![C64::new(0.0, 0.0); m + 1];
            let mut k = 0;
            while k <= m {
                c[m - k] += b.powi((m - k) as i32)
                    * (binomial(m, k) * double_factorial_odd(k) * (2.0 * rate).powf(-(k as f64) / 2.0));
                k += 2;
            }
            c
        };
        for (alpha, c) in q.terms() {
            let p0 = axis(alpha[0]);
            let p1 = if dim == 2 { axis(alpha[1]) } else { vec![C64::new(1.0, 0.0)] };
            for (e1, v1) in p1.iter().enumerate() {
                for (e0, v0) in p0.iter().enumerate() {
                    coeffs[e0 + n * e1] += c * v0 * v1;
                }
            }
        }
        Self { dim, n, coeffs }
    }

    pub(crate) fn eval(&self, tau: &[f64]) -> C64 {
        let horner = |row: &[C64], t: f64| row.iter().rev().fold(C64::new(0.0, 0.0), |acc, c| acc * t + c);
        if self.dim == 1 {
            return horner(&self.coeffs, tau[0]);
        }
        self.coeffs.chunks(self.n).rev().fold(C64::new(0.0, 0.0), |acc, row| acc * tau[1] + horner(row, tau[0]))
    }
}

/// Analytic symbol factor in the `x` or `y` variable.
#[derive(Debug, Clone, PartialEq)]
pub enum AnalyticTerm {
    /// `scale * prod_k He_{n_k}((x_k - c_k)/w) * exp(-|x - c|^2 / (2 w^2))`.
    GaussHermite {
        degree: Vec<usize>,
        width: f64,
        center: Vec<f64>,
        scale: C64,
    },
    /// `poly(x) * exp(-|x|^2 / (2 w^2))`; a plain polynomial when `width` is `None`.
    PolyGauss {
        poly: Polynomial,
        width: Option<f64>,
    },
    /// Indicator of the closed box `[lo, hi]`.
    Indicator {
        lo: Vec<f64>,
        hi: Vec<f64>,
    },
    Constant {
        value: C64,
    },
}

impl AnalyticTerm {
    pub fn gaussian(dim: usize, width: f64) -> Self {
        AnalyticTerm::GaussHermite { degree: vec![0; dim], width, center: vec![0.0; dim], scale: C64::new(1.0, 0.0) }
    }

    pub fn constant(value: f64) -> Self {
        AnalyticTerm::Constant { value: C64::new(value, 0.0) }
    }

    /// Checks parameters; returns the dimension (`None` for constants).
    pub fn validate(&self) -> Result<Option<usize>> {
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        match self {
            AnalyticTerm::GaussHermite { degree, width, center, scale } => {
                if degree.len() != center.len() || !(1..=2).contains(&center.len()) {
                    return Err(Error::InvalidInput("gauss_hermite degree and center must have dim entries".into()));
                }
                if !(width.is_finite() && *width > 0.0)
                    || !finite(center)
                    || !scale.re.is_finite()
                    || !scale.im.is_finite()
                {
                    return Err(Error::InvalidInput("gauss_hermite needs finite center/scale and width > 0".into()));
                }
                Ok(Some(center.len()))
            }
            AnalyticTerm::PolyGauss { poly, width } => {
                if let Some(w) = width {
                    if !(w.is_finite() && *w > 0.0) {
                        return Err(Error::InvalidInput("poly_gauss width must be positive".into()));
                    }
                }
                Ok(Some(poly.dim()))
            }
            AnalyticTerm::Indicator { lo, hi } => {
                if lo.len() != hi.len() || !(1..=2).contains(&lo.len()) || !finite(lo) || !finite(hi) {
                    return Err(Error::InvalidInput("indicator needs finite lo/hi of equal dim".into()));
                }
                if lo.iter().zip(hi).any(|(l, h)| l > h) {
                    return Err(Error::InvalidInput("indicator needs lo <= hi".into()));
                }
                Ok(Some(lo.len()))
            }
            AnalyticTerm::Constant { value } => {
                if !(value.re.is_finite() && value.im.is_finite()) {
                    return Err(Error::InvalidInput("non-finite constant".into()));
                }
                Ok(None)
            }
        }
    }

    pub fn eval(&self, x: &[f64]) -> C64 {
        match self {
            AnalyticTerm::GaussHermite { degree, width, center, scale } => {
                let mut h = 1.0;
                let mut r2 = 0.0;
                for a in 0..center.len() {
                    let z = (x[a] - center[a]) / width;
                    h *= hermite_eval(degree[a], z);
                    r2 += z * z;
                }
                scale * (h * (-0.5 * r2).exp())
            }
            AnalyticTerm::PolyGauss { poly, width } => {
                let p = poly.eval(x);
                match width {
                    Some(w) => {
                        let r2: f64 = x[..poly.dim()].iter().map(|v| v * v).sum();
                        p * (-r2 / (2.0 * w * w)).exp()
                    }
                    None => p,
                }
            }
            AnalyticTerm::Indicator { lo, hi } => {
                let inside = (0..lo.len()).all(|a| x[a] >= lo[a] && x[a] <= hi[a]);
                C64::new(if inside { 1.0 } else { 0.0 }, 0.0)
            }
            AnalyticTerm::Constant { value } => *value,
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            AnalyticTerm::GaussHermite { scale, .. } => *scale == C64::new(0.0, 0.0),
            AnalyticTerm::PolyGauss { poly, .. } => poly.is_zero(),
            AnalyticTerm::Indicator { .. } => false,
            AnalyticTerm::Constant { value } => *value == C64::new(0.0, 0.0),
        }
    }

    /// Decay rate of the Gaussian envelope, if square integrable.
    pub fn gaussian_width(&self) -> Option<f64> {
        match self {
            AnalyticTerm::GaussHermite { width, .. } => Some(*width),
            AnalyticTerm::PolyGauss { width, .. } => *width,
            _ => None,
        }
    }

    /// Representation used by the closed-form pair transforms.
    pub(crate) fn shape(&self, dim: usize) -> Shape {
        match self {
            AnalyticTerm::GaussHermite { degree, width, center, scale } => Shape::Gauss {
                poly: Polynomial::hermite_centered(degree, *width).expect("validated").scale(*scale),
                rate: 1.0 / (2.0 * width * width),
                center: to_point(center),
            },
            AnalyticTerm::PolyGauss { poly, width } => {
                Shape::Gauss { poly: poly.clone(), rate: width.map_or(0.0, |w| 1.0 / (2.0 * w * w)), center: [0.0; 2] }
            }
            AnalyticTerm::Indicator { lo, hi } => {
                Shape::Boxed { lo: to_point(lo), hi: to_point(hi), scale: C64::new(1.0, 0.0) }
            }
            AnalyticTerm::Constant { value } => {
                Shape::Gauss { poly: Polynomial::constant(dim, *value), rate: 0.0, center: [0.0; 2] }
            }
        }
    }
}

fn to_point(v: &[f64]) -> [f64; 2] {
    let mut p = [0.0; 2];
    p[..v.len()].copy_from_slice(v);
    p
}

/// `poly(x - center) * exp(-rate |x - center|^2)` or `scale * 1_[lo, hi]`.
#[derive(Debug, Clone)]
pub(crate) enum Shape {
    Gauss { poly: Polynomial, rate: f64, center: [f64; 2] },
    Boxed { lo: [f64; 2], hi: [f64; 2], scale: C64 },
}

/// `tau -> \int conj(a(x)) b(x) e^{i x.tau} dx` in closed form.
#[derive(Debug, Clone)]
pub(crate) enum PairTransform {
    /// `e^{i C.tau} (pi/A)^{d/2} e^{-|tau|^2/(4A)} sum_m q_m prod_k J(m_k, A, tau_k)`.
    Gauss { rate: f64, center: [f64; 2], q: Polynomial },
    /// `scale * prod_k \int_lo^hi e^{i x tau} dx`.
    Boxed { lo: [f64; 2], hi: [f64; 2], scale: C64 },
}

impl PairTransform {
    pub(crate) fn of(a: &Shape, b: &Shape, dim: usize) -> Option<PairTransform> {
        match (a, b) {
            (Shape::Gauss { poly: p1, rate: a1, center: c1 }, Shape::Gauss { poly: p2, rate: a2, center: c2 }) => {
                let rate = a1 + a2;
                if rate <= 0.0 {
                    return None;
                }
                let mut center = [0.0; 2];
                let mut d = 0.0;
                for k in 0..dim {
                    center[k] = (a1 * c1[k] + a2 * c2[k]) / rate;
                    d += a1 * a2 * (c1[k] - c2[k]).powi(2) / rate;
                }
                let s1: Vec<f64> = (0..dim).map(|k| center[k] - c1[k]).collect();
                let s2: Vec<f64> = (0..dim).map(|k| center[k] - c2[k]).collect();
                let q = p1.conj().shift(&s1).mul(&p2.shift(&s2)).scale(C64::new((-d).exp(), 0.0));
                Some(PairTransform::Gauss { rate, center, q })
            }
            (Shape::Boxed { lo: l1, hi: h1, scale: s1 }, Shape::Boxed { lo: l2, hi: h2, scale: s2 }) => {
                let mut lo = [0.0; 2];
                let mut hi = [0.0; 2];
                for k in 0..dim {
                    lo[k] = l1[k].max(l2[k]);
                    hi[k] = h1[k].min(h2[k]).max(lo[k]);
                }
                Some(PairTransform::Boxed { lo, hi, scale: s1.conj() * s2 })
            }
            (Shape::Boxed { lo, hi, scale }, Shape::Gauss { poly, rate, .. }) if *rate == 0.0 && poly.degree() == 0 => {
                let c = poly.eval(&[0.0, 0.0]);
                Some(PairTransform::Boxed { lo: *lo, hi: *hi, scale: scale.conj() * c })
            }
            (Shape::Gauss { poly, rate, .. }, Shape::Boxed { lo, hi, scale }) if *rate == 0.0 && poly.degree() == 0 => {
                let c = poly.eval(&[0.0, 0.0]).conj();
                Some(PairTransform::Boxed { lo: *lo, hi: *hi, scale: c * scale })
            }
            _ => None,
        }
    }

    /// Envelope factor `e^{i C.tau} (pi/A)^{d/2} e^{-|tau|^2/(4A)}`.
    pub(crate) fn envelope(rate: f64, center: &[f64; 2], tau: &[f64], dim: usize) -> C64 {
        let mut phase = 0.0;
        let mut t2 = 0.0;
        for k in 0..dim {
            phase += center[k] * tau[k];
            t2 += tau[k] * tau[k];
        }
        let mag = (std::f64::consts::PI / rate).powf(dim as f64 / 2.0) * (-t2 / (4.0 * rate)).exp();
        C64::from_polar(mag, phase)
    }

    /// The polynomial part `sum_m q_m prod_k J(m_k, A, tau_k)`.
    pub(crate) fn poly_part(rate: f64, q: &Polynomial, tau: &[f64], dim: usize) -> C64 {
        let maxdeg = q.max_axis_degree();
        let mut table = [[C64::new(0.0, 0.0); 16], [C64::new(0.0, 0.0); 16]];
        let use_table = maxdeg < 16;
        if use_table {
            for k in 0..dim {
                for (m, slot) in table[k].iter_mut().enumerate().take(maxdeg + 1) {
                    *slot = gauss_moment_poly(m, rate, tau[k]);
                }
            }
        }
        let mut s = C64::new(0.0, 0.0);
        for (alpha, c) in q.terms() {
            let mut term = *c;
            for k in 0..dim {
                term *= if use_table { table[k][alpha[k]] } else { gauss_moment_poly(alpha[k], rate, tau[k]) };
            }
            s += term;
        }
        s
    }

    pub(crate) fn eval(&self, tau: &[f64], dim: usize) -> C64 {
        match self {
            PairTransform::Gauss { rate, center, q } => {
                Self::envelope(*rate, center, tau, dim) * Self::poly_part(*rate, q, tau, dim)
            }
            PairTransform::Boxed { lo, hi, scale } => {
                let mut v = *scale;
                for k in 0..dim {
                    v *= box_transform(lo[k], hi[k], tau[k]);
                }
                v
            }
        }
    }
}

/// `\int_lo^hi e^{i x tau} dx`.
fn box_transform(lo: f64, hi: f64, tau: f64) -> C64 {
    let len = hi - lo;
    if (tau * len).abs() < 1e-8 {
        let mid = 0.5 * (lo + hi);
        return C64::from_polar(len, mid * tau);
    }
    let mid = 0.5 * (lo + hi);
    // e^{i mid tau} * 2 sin(tau len / 2) / tau
    C64::from_polar(2.0 * (0.5 * tau * len).sin() / tau, mid * tau)
}
