//! Truncated q-expansions with fractional leading exponent.
//!
//! All exponents at level N are integers in units of 1/D with the fixed
//! session denominator D = 24N. That covers eta factors `eta(d tau)`
//! (denominator 24, d | N) and the unit leads `N B2(a/N)/2` (denominator
//! dividing 12N) without any rational-exponent normalisation. A series
//! stores coefficients on the arithmetic progression
//! `lead, lead + stride, lead + 2*stride, ...` (units of 1/D) and a
//! truncation bound `prec`: coefficients at exponents `< prec` are exact,
//! everything above is unknown. Arithmetic never claims precision beyond
//! the minimum surviving truncation order.
//!
//! Coefficients come in three kinds — exact rational, exact cyclotomic of
//! the series level, and binary64 complex. Mixed-kind arithmetic promotes
//! exact to complex, never the reverse.

use num::{BigInt, BigRational, One, Zero};
use num_complex::Complex64;
use serde_json::{json, Value};

use crate::cyclotomic::{rational_to_f64, CycElt};
use crate::error::{Error, Result};

/// Sentinel precision for exact polynomials (constants, monomials).
pub const PREC_EXACT: i64 = i64::MAX / 4;

/// Expansion denominator used at a given level.
pub fn expdenom(level: u32) -> i64 {
    24 * level as i64
}

fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

fn prec_shift(p: i64, l: i64) -> i64 {
    if p >= PREC_EXACT {
        PREC_EXACT
    } else {
        (p + l).min(PREC_EXACT)
    }
}

/// Internal coefficient-ring interface shared by the three kinds.
trait SeriesCoeff: Clone {
    fn c_zero(level: u32) -> Self;
    fn c_is_zero(&self) -> bool;
    fn c_add(&self, o: &Self) -> Self;
    fn c_sub(&self, o: &Self) -> Self;
    fn c_neg(&self) -> Self;
    fn c_mul(&self, o: &Self) -> Self;
    fn c_inv(&self) -> Result<Self>;
    fn c_scale_exp(&self, e: i64, d: i64) -> Self; // multiply by the rational e/d
    fn c_embed(&self) -> Complex64;
}

impl SeriesCoeff for BigRational {
    fn c_zero(_: u32) -> Self {
        BigRational::zero()
    }
    fn c_is_zero(&self) -> bool {
        self.is_zero()
    }
    fn c_add(&self, o: &Self) -> Self {
        self + o
    }
    fn c_sub(&self, o: &Self) -> Self {
        self - o
    }
    fn c_neg(&self) -> Self {
        -self
    }
    fn c_mul(&self, o: &Self) -> Self {
        self * o
    }
    fn c_inv(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(Error::DivisionByZero("rational series leading coefficient"));
        }
        Ok(BigRational::one() / self)
    }
    fn c_scale_exp(&self, e: i64, d: i64) -> Self {
        self * BigRational::new(BigInt::from(e), BigInt::from(d))
    }
    fn c_embed(&self) -> Complex64 {
        Complex64::new(rational_to_f64(self), 0.0)
    }
}

impl SeriesCoeff for CycElt {
    fn c_zero(level: u32) -> Self {
        CycElt::zero(level)
    }
    fn c_is_zero(&self) -> bool {
        self.is_zero()
    }
    fn c_add(&self, o: &Self) -> Self {
        self.add(o).expect("level-checked by QExp")
    }
    fn c_sub(&self, o: &Self) -> Self {
        self.sub(o).expect("level-checked by QExp")
    }
    fn c_neg(&self) -> Self {
        self.neg()
    }
    fn c_mul(&self, o: &Self) -> Self {
        self.mul(o).expect("level-checked by QExp")
    }
    fn c_inv(&self) -> Result<Self> {
        self.inv()
    }
    fn c_scale_exp(&self, e: i64, d: i64) -> Self {
        self.scale(&BigRational::new(BigInt::from(e), BigInt::from(d)))
    }
    fn c_embed(&self) -> Complex64 {
        self.embed()
    }
}

impl SeriesCoeff for Complex64 {
    fn c_zero(_: u32) -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn c_is_zero(&self) -> bool {
        self.re == 0.0 && self.im == 0.0
    }
    fn c_add(&self, o: &Self) -> Self {
        self + o
    }
    fn c_sub(&self, o: &Self) -> Self {
        self - o
    }
    fn c_neg(&self) -> Self {
        -self
    }
    fn c_mul(&self, o: &Self) -> Self {
        self * o
    }
    fn c_inv(&self) -> Result<Self> {
        if self.c_is_zero() {
            return Err(Error::DivisionByZero("complex series leading coefficient"));
        }
        Ok(Complex64::new(1.0, 0.0) / self)
    }
    fn c_scale_exp(&self, e: i64, d: i64) -> Self {
        self * (e as f64 / d as f64)
    }
    fn c_embed(&self) -> Complex64 {
        *self
    }
}

/// Coefficient payload; the kind is fixed at construction.
#[derive(Clone, Debug, PartialEq)]
pub enum Coeffs {
    Rational(Vec<BigRational>),
    Cyclotomic(Vec<CycElt>),
    Complex(Vec<Complex64>),
}

/// Kind tag, in promotion order (exact kinds promote towards `Complex`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum CoeffKind {
    Rational,
    Cyclotomic,
    Complex,
}

/// A truncated q-expansion at a fixed level.
#[derive(Clone)]
pub struct QExp {
    level: u32,
    expdenom: i64,
    lead: i64,
    stride: i64,
    prec: i64,
    coeffs: Coeffs,
}

impl std::fmt::Debug for QExp {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "QExp(N={}, D={}, lead={}, stride={}, prec={}, {} coeffs, kind={:?})",
            self.level,
            self.expdenom,
            self.lead,
            self.stride,
            if self.prec >= PREC_EXACT {
                -1
            } else {
                self.prec
            },
            self.len(),
            self.kind()
        )
    }
}

impl QExp {
    // ----- constructors -----

    pub fn zero(level: u32) -> Self {
        QExp {
            level,
            expdenom: expdenom(level),
            lead: 0,
            stride: expdenom(level),
            prec: PREC_EXACT,
            coeffs: Coeffs::Rational(Vec::new()),
        }
    }

    /// c * q^(e/D) with exact precision.
    pub fn monomial_rat(level: u32, c: BigRational, e: i64) -> Self {
        let mut s = QExp {
            level,
            expdenom: expdenom(level),
            lead: e,
            stride: expdenom(level),
            prec: PREC_EXACT,
            coeffs: Coeffs::Rational(vec![c]),
        };
        s.normalize();
        s
    }

    pub fn constant_rat(level: u32, c: BigRational) -> Self {
        Self::monomial_rat(level, c, 0)
    }

    pub fn one(level: u32) -> Self {
        Self::constant_rat(level, BigRational::one())
    }

    pub fn from_rational_coeffs(
        level: u32,
        lead: i64,
        stride: i64,
        coeffs: Vec<BigRational>,
        prec: i64,
    ) -> Self {
        assert!(stride > 0);
        let mut s = QExp {
            level,
            expdenom: expdenom(level),
            lead,
            stride,
            prec,
            coeffs: Coeffs::Rational(coeffs),
        };
        s.normalize();
        s
    }

    pub fn from_cyclotomic_coeffs(
        level: u32,
        lead: i64,
        stride: i64,
        coeffs: Vec<CycElt>,
        prec: i64,
    ) -> Self {
        assert!(stride > 0);
        let mut s = QExp {
            level,
            expdenom: expdenom(level),
            lead,
            stride,
            prec,
            coeffs: Coeffs::Cyclotomic(coeffs),
        };
        s.normalize();
        s
    }

    pub fn from_complex_coeffs(
        level: u32,
        lead: i64,
        stride: i64,
        coeffs: Vec<Complex64>,
        prec: i64,
    ) -> Self {
        assert!(stride > 0);
        let mut s = QExp {
            level,
            expdenom: expdenom(level),
            lead,
            stride,
            prec,
            coeffs: Coeffs::Complex(coeffs),
        };
        s.normalize();
        s
    }

    /// eta(d tau) = q^(d/24) prod_{n>=1} (1 - q^(dn)), truncated to `order`
    /// stored coefficients, via Euler's pentagonal number theorem.
    pub fn eta(d: u32, level: u32, order: usize) -> Result<Self> {
        let dd = expdenom(level);
        let lead = d as i64 * dd / 24;
        if d == 0 || (d as i64 * dd) % 24 != 0 {
            return Err(Error::InvalidInput(format!(
                "eta({d} tau): exponent {d}/24 not representable in 1/{dd} units"
            )));
        }
        let stride = d as i64 * dd;
        let mut coeffs = vec![BigRational::zero(); order];
        if order > 0 {
            coeffs[0] = BigRational::one();
        }
        let mut k: i64 = 1;
        loop {
            let g1 = k * (3 * k - 1) / 2;
            let g2 = k * (3 * k + 1) / 2;
            if g1 as usize >= order && g2 as usize >= order {
                break;
            }
            let sign = if k % 2 == 0 {
                BigRational::one()
            } else {
                -BigRational::one()
            };
            for g in [g1, g2] {
                if (g as usize) < order {
                    coeffs[g as usize] = sign.clone();
                }
            }
            k += 1;
        }
        Ok(QExp {
            level,
            expdenom: dd,
            lead,
            stride,
            prec: lead + order as i64 * stride,
            coeffs: Coeffs::Rational(coeffs),
        })
    }

    // ----- accessors -----

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn expdenom(&self) -> i64 {
        self.expdenom
    }

    /// Leading exponent in 1/D units. Meaningless for the zero series.
    pub fn lead(&self) -> i64 {
        self.lead
    }

    pub fn stride(&self) -> i64 {
        self.stride
    }

    pub fn prec(&self) -> i64 {
        self.prec
    }

    pub fn kind(&self) -> CoeffKind {
        match &self.coeffs {
            Coeffs::Rational(_) => CoeffKind::Rational,
            Coeffs::Cyclotomic(_) => CoeffKind::Cyclotomic,
            Coeffs::Complex(_) => CoeffKind::Complex,
        }
    }

    pub fn coeffs(&self) -> &Coeffs {
        &self.coeffs
    }

    pub fn len(&self) -> usize {
        match &self.coeffs {
            Coeffs::Rational(v) => v.len(),
            Coeffs::Cyclotomic(v) => v.len(),
            Coeffs::Complex(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_zero(&self) -> bool {
        match &self.coeffs {
            Coeffs::Rational(v) => v.iter().all(|c| c.is_zero()),
            Coeffs::Cyclotomic(v) => v.iter().all(|c| c.is_zero()),
            Coeffs::Complex(v) => v.iter().all(|c| c.re == 0.0 && c.im == 0.0),
        }
    }

    /// Embedded coefficient at exponent `e` (1/D units); 0 for gaps.
    /// `None` when `e >= prec` (unknown territory).
    pub fn coeff_embed(&self, e: i64) -> Option<Complex64> {
        if e >= self.prec {
            return None;
        }
        if self.is_empty() || e < self.lead || (e - self.lead) % self.stride != 0 {
            return Some(Complex64::new(0.0, 0.0));
        }
        let i = ((e - self.lead) / self.stride) as usize;
        if i >= self.len() {
            return Some(Complex64::new(0.0, 0.0));
        }
        Some(match &self.coeffs {
            Coeffs::Rational(v) => v[i].c_embed(),
            Coeffs::Cyclotomic(v) => v[i].c_embed(),
            Coeffs::Complex(v) => v[i],
        })
    }

    /// Exact rational coefficient at exponent `e`; `None` for non-rational
    /// kinds or unknown territory.
    pub fn coeff_rational(&self, e: i64) -> Option<BigRational> {
        if e >= self.prec {
            return None;
        }
        match &self.coeffs {
            Coeffs::Rational(v) => {
                if self.is_empty() || e < self.lead || (e - self.lead) % self.stride != 0 {
                    return Some(BigRational::zero());
                }
                let i = ((e - self.lead) / self.stride) as usize;
                Some(v.get(i).cloned().unwrap_or_else(BigRational::zero))
            }
            _ => None,
        }
    }

    /// Leading coefficient, embedded. `None` for the zero series.
    pub fn leading_embed(&self) -> Option<Complex64> {
        if self.is_zero() {
            None
        } else {
            self.coeff_embed(self.lead)
        }
    }

    pub fn max_abs_embed(&self) -> f64 {
        let mut m = 0.0f64;
        for i in 0..self.len() {
            let e = self.lead + i as i64 * self.stride;
            if let Some(c) = self.coeff_embed(e) {
                m = m.max(c.norm());
            }
        }
        m
    }

    fn normalize(&mut self) {
        // Strip exactly-zero leading coefficients.
        let lead_zeros = match &self.coeffs {
            Coeffs::Rational(v) => v.iter().take_while(|c| c.is_zero()).count(),
            Coeffs::Cyclotomic(v) => v.iter().take_while(|c| c.is_zero()).count(),
            Coeffs::Complex(v) => v.iter().take_while(|c| c.re == 0.0 && c.im == 0.0).count(),
        };
        if lead_zeros > 0 {
            self.lead += lead_zeros as i64 * self.stride;
            match &mut self.coeffs {
                Coeffs::Rational(v) => {
                    v.drain(..lead_zeros);
                }
                Coeffs::Cyclotomic(v) => {
                    v.drain(..lead_zeros);
                }
                Coeffs::Complex(v) => {
                    v.drain(..lead_zeros);
                }
            }
        }
        // Drop stored coefficients at exponents >= prec.
        if self.prec < PREC_EXACT && !self.is_empty() {
            let keep = if self.prec <= self.lead {
                0
            } else {
                (((self.prec - 1 - self.lead) / self.stride) + 1).max(0) as usize
            };
            if keep < self.len() {
                match &mut self.coeffs {
                    Coeffs::Rational(v) => v.truncate(keep),
                    Coeffs::Cyclotomic(v) => v.truncate(keep),
                    Coeffs::Complex(v) => v.truncate(keep),
                }
            }
        }
    }

    // ----- kind promotion -----

    pub fn promote(&self, kind: CoeffKind) -> QExp {
        let mut out = self.clone();
        out.coeffs = match (&self.coeffs, kind) {
            (Coeffs::Rational(v), CoeffKind::Cyclotomic) => Coeffs::Cyclotomic(
                v.iter()
                    .map(|c| CycElt::from_rational(self.level, c.clone()))
                    .collect(),
            ),
            (Coeffs::Rational(v), CoeffKind::Complex) => {
                Coeffs::Complex(v.iter().map(|c| c.c_embed()).collect())
            }
            (Coeffs::Cyclotomic(v), CoeffKind::Complex) => {
                Coeffs::Complex(v.iter().map(|c| c.embed()).collect())
            }
            _ => self.coeffs.clone(),
        };
        out
    }

    fn common_kind(&self, other: &QExp) -> CoeffKind {
        self.kind().max(other.kind())
    }

    fn check_level(&self, other: &QExp) -> Result<()> {
        if self.level != other.level {
            return Err(Error::LevelMismatch {
                left: self.level,
                right: other.level,
            });
        }
        Ok(())
    }

    // ----- arithmetic -----

    pub fn add(&self, other: &QExp) -> Result<QExp> {
        self.check_level(other)?;
        let kind = self.common_kind(other);
        let a = self.promote(kind);
        let b = other.promote(kind);
        Ok(match (&a.coeffs, &b.coeffs) {
            (Coeffs::Rational(x), Coeffs::Rational(y)) => {
                let (lead, stride, prec, c) = add_kernel(&a, x, &b, y, false);
                QExp::from_rational_coeffs(a.level, lead, stride, c, prec)
            }
            (Coeffs::Cyclotomic(x), Coeffs::Cyclotomic(y)) => {
                let (lead, stride, prec, c) = add_kernel(&a, x, &b, y, false);
                QExp::from_cyclotomic_coeffs(a.level, lead, stride, c, prec)
            }
            (Coeffs::Complex(x), Coeffs::Complex(y)) => {
                let (lead, stride, prec, c) = add_kernel(&a, x, &b, y, false);
                QExp::from_complex_coeffs(a.level, lead, stride, c, prec)
            }
            _ => unreachable!("promoted to common kind"),
        })
    }

    pub fn sub(&self, other: &QExp) -> Result<QExp> {
        self.check_level(other)?;
        let kind = self.common_kind(other);
        let a = self.promote(kind);
        let b = other.promote(kind);
        Ok(match (&a.coeffs, &b.coeffs) {
            (Coeffs::Rational(x), Coeffs::Rational(y)) => {
                let (lead, stride, prec, c) = add_kernel(&a, x, &b, y, true);
                QExp::from_rational_coeffs(a.level, lead, stride, c, prec)
            }
            (Coeffs::Cyclotomic(x), Coeffs::Cyclotomic(y)) => {
                let (lead, stride, prec, c) = add_kernel(&a, x, &b, y, true);
                QExp::from_cyclotomic_coeffs(a.level, lead, stride, c, prec)
            }
            (Coeffs::Complex(x), Coeffs::Complex(y)) => {
                let (lead, stride, prec, c) = add_kernel(&a, x, &b, y, true);
                QExp::from_complex_coeffs(a.level, lead, stride, c, prec)
            }
            _ => unreachable!(),
        })
    }

    pub fn neg(&self) -> QExp {
        let mut out = self.clone();
        out.coeffs = match &self.coeffs {
            Coeffs::Rational(v) => Coeffs::Rational(v.iter().map(|c| -c).collect()),
            Coeffs::Cyclotomic(v) => Coeffs::Cyclotomic(v.iter().map(|c| c.neg()).collect()),
            Coeffs::Complex(v) => Coeffs::Complex(v.iter().map(|c| -c).collect()),
        };
        out
    }

    pub fn mul(&self, other: &QExp) -> Result<QExp> {
        self.check_level(other)?;
        let kind = self.common_kind(other);
        let a = self.promote(kind);
        let b = other.promote(kind);
        Ok(match (&a.coeffs, &b.coeffs) {
            (Coeffs::Rational(x), Coeffs::Rational(y)) => {
                let (lead, stride, prec, c) = mul_kernel(&a, x, &b, y);
                QExp::from_rational_coeffs(a.level, lead, stride, c, prec)
            }
            (Coeffs::Cyclotomic(x), Coeffs::Cyclotomic(y)) => {
                let (lead, stride, prec, c) = mul_kernel(&a, x, &b, y);
                QExp::from_cyclotomic_coeffs(a.level, lead, stride, c, prec)
            }
            (Coeffs::Complex(x), Coeffs::Complex(y)) => {
                let (lead, stride, prec, c) = mul_kernel(&a, x, &b, y);
                QExp::from_complex_coeffs(a.level, lead, stride, c, prec)
            }
            _ => unreachable!(),
        })
    }

    pub fn div(&self, other: &QExp) -> Result<QExp> {
        self.check_level(other)?;
        if other.is_zero() {
            return Err(Error::DivisionByZero("division by zero series"));
        }
        let kind = self.common_kind(other);
        let a = self.promote(kind);
        let b = other.promote(kind);
        Ok(match (&a.coeffs, &b.coeffs) {
            (Coeffs::Rational(x), Coeffs::Rational(y)) => {
                let (lead, stride, prec, c) = div_kernel(&a, x, &b, y)?;
                QExp::from_rational_coeffs(a.level, lead, stride, c, prec)
            }
            (Coeffs::Cyclotomic(x), Coeffs::Cyclotomic(y)) => {
                let (lead, stride, prec, c) = div_kernel(&a, x, &b, y)?;
                QExp::from_cyclotomic_coeffs(a.level, lead, stride, c, prec)
            }
            (Coeffs::Complex(x), Coeffs::Complex(y)) => {
                let (lead, stride, prec, c) = div_kernel(&a, x, &b, y)?;
                QExp::from_complex_coeffs(a.level, lead, stride, c, prec)
            }
            _ => unreachable!(),
        })
    }

    pub fn powi(&self, e: i64) -> Result<QExp> {
        if e == 0 {
            return Ok(QExp::one(self.level));
        }
        let base = if e < 0 {
            QExp::one(self.level).div(self)?
        } else {
            self.clone()
        };
        let mut exp = e.unsigned_abs();
        let mut result = QExp::one(self.level);
        let mut pw = base;
        while exp > 0 {
            if exp & 1 == 1 {
                result = result.mul(&pw)?;
            }
            exp >>= 1;
            if exp > 0 {
                pw = pw.mul(&pw)?;
            }
        }
        Ok(result)
    }

    /// Term-wise q d/dq: the coefficient at exponent e is multiplied by e/D.
    pub fn qdq(&self) -> QExp {
        let d = self.expdenom;
        let mut out = self.clone();
        let lead = self.lead;
        let stride = self.stride;
        out.coeffs = match &self.coeffs {
            Coeffs::Rational(v) => Coeffs::Rational(
                v.iter()
                    .enumerate()
                    .map(|(i, c)| c.c_scale_exp(lead + i as i64 * stride, d))
                    .collect(),
            ),
            Coeffs::Cyclotomic(v) => Coeffs::Cyclotomic(
                v.iter()
                    .enumerate()
                    .map(|(i, c)| c.c_scale_exp(lead + i as i64 * stride, d))
                    .collect(),
            ),
            Coeffs::Complex(v) => Coeffs::Complex(
                v.iter()
                    .enumerate()
                    .map(|(i, c)| c.c_scale_exp(lead + i as i64 * stride, d))
                    .collect(),
            ),
        };
        out.normalize();
        out
    }

    /// q d/dq log f = qdq(f) / f. The constant term equals lead/D.
    pub fn dlog(&self) -> Result<QExp> {
        self.qdq().div(self)
    }

    /// Multiply by q^(e/D).
    pub fn shift(&self, e: i64) -> QExp {
        let mut out = self.clone();
        out.lead += e;
        out.prec = prec_shift(out.prec, e);
        out
    }

    pub fn truncate_prec(&self, prec: i64) -> QExp {
        let mut out = self.clone();
        out.prec = out.prec.min(prec);
        out.normalize();
        out
    }

    /// Evaluate at tau = c/N + i t (t > 0): q^(e/D) has phase
    /// exp(2 pi i c e / (N D)) and modulus exp(-2 pi t e / D).
    /// Returns the value and a geometric bound on the truncation tail.
    pub fn eval_vertical(&self, c: i64, t: f64) -> Result<(Complex64, f64)> {
        if t <= 0.0 {
            return Err(Error::InvalidInput(format!("eval requires t > 0, got {t}")));
        }
        let nd = self.level as i64 * self.expdenom;
        let mut acc = Complex64::new(0.0, 0.0);
        let mut max_abs = 0.0f64;
        let two_pi = 2.0 * std::f64::consts::PI;
        for i in 0..self.len() {
            let e = self.lead + i as i64 * self.stride;
            let co = self.coeff_embed(e).unwrap_or_default();
            if co.re == 0.0 && co.im == 0.0 {
                continue;
            }
            max_abs = max_abs.max(co.norm());
            let phase = two_pi * ((c * e).rem_euclid(nd) as f64) / nd as f64;
            let modulus = (-two_pi * t * e as f64 / self.expdenom as f64).exp();
            acc += co * Complex64::from_polar(modulus, phase);
        }
        let tail = if self.prec >= PREC_EXACT {
            0.0
        } else {
            let r_step = (-two_pi * t * self.stride as f64 / self.expdenom as f64).exp();
            let r_first = (-two_pi * t * self.prec as f64 / self.expdenom as f64).exp();
            max_abs.max(1.0) * r_first / (1.0 - r_step)
        };
        Ok((acc, tail))
    }

    /// Evaluate at a general point of the upper half-plane.
    pub fn eval_tau(&self, tau: Complex64) -> Result<(Complex64, f64)> {
        if tau.im <= 0.0 {
            return Err(Error::InvalidInput("eval_tau requires Im tau > 0".into()));
        }
        let two_pi_i = Complex64::new(0.0, 2.0 * std::f64::consts::PI);
        let mut acc = Complex64::new(0.0, 0.0);
        let mut max_abs = 0.0f64;
        for i in 0..self.len() {
            let e = self.lead + i as i64 * self.stride;
            let co = self.coeff_embed(e).unwrap_or_default();
            if co.re == 0.0 && co.im == 0.0 {
                continue;
            }
            max_abs = max_abs.max(co.norm());
            let w = (two_pi_i * tau * (e as f64 / self.expdenom as f64)).exp();
            acc += co * w;
        }
        let tail = if self.prec >= PREC_EXACT {
            0.0
        } else {
            let r_step = (-2.0 * std::f64::consts::PI * tau.im * self.stride as f64
                / self.expdenom as f64)
                .exp();
            let r_first = (-2.0 * std::f64::consts::PI * tau.im * self.prec as f64
                / self.expdenom as f64)
                .exp();
            max_abs.max(1.0) * r_first / (1.0 - r_step)
        };
        Ok((acc, tail))
    }

    // ----- JSON -----

    /// Schema: `{level, expdenom, lead, stride, prec?, kind, coeffs}` with
    /// rationals as "p/q" strings, cyclotomic coefficients as arrays of
    /// rational strings, complex ones as [re, im].
    pub fn to_json(&self) -> Value {
        let coeffs: Vec<Value> = match &self.coeffs {
            Coeffs::Rational(v) => v.iter().map(|c| json!(c.to_string())).collect(),
            Coeffs::Cyclotomic(v) => v
                .iter()
                .map(|c| Value::Array(c.coeffs().iter().map(|r| json!(r.to_string())).collect()))
                .collect(),
            Coeffs::Complex(v) => v.iter().map(|c| json!([c.re, c.im])).collect(),
        };
        let kind = match self.kind() {
            CoeffKind::Rational => "rational",
            CoeffKind::Cyclotomic => "cyclotomic",
            CoeffKind::Complex => "complex",
        };
        let mut obj = json!({
            "level": self.level,
            "expdenom": self.expdenom,
            "lead": self.lead,
            "stride": self.stride,
            "kind": kind,
            "coeffs": coeffs,
        });
        if self.prec < PREC_EXACT {
            obj["prec"] = json!(self.prec);
        }
        obj
    }

    pub fn from_json(v: &Value) -> Result<QExp> {
        let bad = |m: &str| Error::InvalidInput(format!("QExp JSON: {m}"));
        let obj = v.as_object().ok_or_else(|| bad("not an object"))?;
        let level = obj
            .get("level")
            .and_then(Value::as_u64)
            .ok_or_else(|| bad("missing level"))? as u32;
        let dd = expdenom(level);
        if let Some(e) = obj.get("expdenom").and_then(Value::as_i64) {
            if e != dd {
                return Err(bad(&format!("expdenom {e} != 24*level = {dd}")));
            }
        }
        let lead = obj
            .get("lead")
            .and_then(Value::as_i64)
            .ok_or_else(|| bad("missing lead"))?;
        // absent stride means densely stored coefficients in 1/D steps
        let stride = obj.get("stride").and_then(Value::as_i64).unwrap_or(1);
        if stride <= 0 {
            return Err(bad("stride must be positive"));
        }
        let kind = obj
            .get("kind")
            .and_then(Value::as_str)
            .ok_or_else(|| bad("missing kind"))?;
        let raw = obj
            .get("coeffs")
            .and_then(Value::as_array)
            .ok_or_else(|| bad("missing coeffs"))?;
        let prec = obj
            .get("prec")
            .and_then(Value::as_i64)
            .unwrap_or(lead + raw.len() as i64 * stride);
        let parse_rat = |s: &Value| -> Result<BigRational> {
            let st = s
                .as_str()
                .ok_or_else(|| bad("rational coefficient must be a string"))?;
            st.parse::<BigRational>()
                .map_err(|e| bad(&format!("bad rational '{st}': {e}")))
        };
        let series = match kind {
            "rational" => {
                let coeffs = raw.iter().map(parse_rat).collect::<Result<Vec<_>>>()?;
                QExp::from_rational_coeffs(level, lead, stride, coeffs, prec)
            }
            "cyclotomic" => {
                let coeffs = raw
                    .iter()
                    .map(|row| {
                        let arr = row
                            .as_array()
                            .ok_or_else(|| bad("cyclotomic coefficient must be an array"))?;
                        let rs = arr.iter().map(parse_rat).collect::<Result<Vec<_>>>()?;
                        Ok(CycElt::from_coeffs(level, rs))
                    })
                    .collect::<Result<Vec<_>>>()?;
                QExp::from_cyclotomic_coeffs(level, lead, stride, coeffs, prec)
            }
            "complex" => {
                let coeffs = raw
                    .iter()
                    .map(|row| {
                        let arr = row
                            .as_array()
                            .filter(|a| a.len() == 2)
                            .ok_or_else(|| bad("complex coefficient must be [re, im]"))?;
                        Ok(Complex64::new(
                            arr[0].as_f64().ok_or_else(|| bad("re not a number"))?,
                            arr[1].as_f64().ok_or_else(|| bad("im not a number"))?,
                        ))
                    })
                    .collect::<Result<Vec<_>>>()?;
                QExp::from_complex_coeffs(level, lead, stride, coeffs, prec)
            }
            other => return Err(bad(&format!("unknown kind '{other}'"))),
        };
        Ok(series)
    }
}

/// Semantic equality on the common refinement, up to the minimum precision.
impl PartialEq for QExp {
    fn eq(&self, other: &Self) -> bool {
        if self.level != other.level {
            return false;
        }
        let prec = self.prec.min(other.prec);
        let (lo, s) = if self.is_zero() && other.is_zero() {
            return true;
        } else if self.is_zero() {
            (other.lead, other.stride)
        } else if other.is_zero() {
            (self.lead, self.stride)
        } else {
            (
                self.lead.min(other.lead),
                gcd(
                    gcd(self.stride, other.stride),
                    (self.lead - other.lead).abs(),
                ),
            )
        };
        let s = if s == 0 { self.stride } else { s };
        let mut e = lo;
        while e < prec.min(lo + 4 * PREC_EXACT / 8) {
            let a = self.coeff_embed(e);
            let b = other.coeff_embed(e);
            match (a, b) {
                (Some(x), Some(y)) => {
                    if x != y {
                        return false;
                    }
                }
                _ => break,
            }
            // Also compare exactly when both sides are exact kinds.
            if let (Some(x), Some(y)) = (self.coeff_rational(e), other.coeff_rational(e)) {
                if x != y {
                    return false;
                }
            }
            let hi_self = self.lead + self.len() as i64 * self.stride;
            let hi_other = other.lead + other.len() as i64 * other.stride;
            if e > hi_self.max(hi_other) {
                break;
            }
            e += s;
        }
        true
    }
}

fn add_kernel<T: SeriesCoeff>(
    a: &QExp,
    av: &[T],
    b: &QExp,
    bv: &[T],
    subtract: bool,
) -> (i64, i64, i64, Vec<T>) {
    let prec = a.prec.min(b.prec);
    if av.is_empty() || bv.is_empty() {
        if av.is_empty() && bv.is_empty() {
            return (0, a.stride, prec, Vec::new());
        }
        if av.is_empty() {
            let out: Vec<T> = if subtract {
                bv.iter().map(|c| c.c_neg()).collect()
            } else {
                bv.to_vec()
            };
            return (b.lead, b.stride, prec, out);
        }
        return (a.lead, a.stride, prec, av.to_vec());
    }
    let mut s = gcd(a.stride, b.stride);
    s = gcd(s, (a.lead - b.lead).abs());
    if s == 0 {
        s = a.stride;
    }
    let lead = a.lead.min(b.lead);
    let hi_a = a.lead + av.len() as i64 * a.stride;
    let hi_b = b.lead + bv.len() as i64 * b.stride;
    let hi = hi_a.max(hi_b).min(prec.max(lead));
    let len = if hi <= lead {
        0
    } else {
        ((hi - lead + s - 1) / s) as usize
    };
    let mut out = vec![T::c_zero(a.level); len];
    for (i, c) in av.iter().enumerate() {
        let e = a.lead + i as i64 * a.stride;
        if e >= lead && e < hi {
            let idx = ((e - lead) / s) as usize;
            out[idx] = out[idx].c_add(c);
        }
    }
    for (i, c) in bv.iter().enumerate() {
        let e = b.lead + i as i64 * b.stride;
        if e >= lead && e < hi {
            let idx = ((e - lead) / s) as usize;
            out[idx] = if subtract {
                out[idx].c_sub(c)
            } else {
                out[idx].c_add(c)
            };
        }
    }
    (lead, s, prec, out)
}

fn mul_kernel<T: SeriesCoeff>(a: &QExp, av: &[T], b: &QExp, bv: &[T]) -> (i64, i64, i64, Vec<T>) {
    if av.is_empty() || bv.is_empty() {
        // One factor is (known to be) zero: zero series with combined precision.
        let la = if av.is_empty() {
            a.prec.min(PREC_EXACT)
        } else {
            a.lead
        };
        let lb = if bv.is_empty() {
            b.prec.min(PREC_EXACT)
        } else {
            b.lead
        };
        let prec = prec_shift(a.prec, lb).min(prec_shift(b.prec, la));
        return (0, a.stride, prec, Vec::new());
    }
    let s = gcd(a.stride, b.stride);
    let lead = a.lead + b.lead;
    let prec = prec_shift(a.prec, b.lead).min(prec_shift(b.prec, a.lead));
    let hi_full = lead + (av.len() as i64 - 1) * a.stride + (bv.len() as i64 - 1) * b.stride + s;
    let hi = hi_full.min(if prec >= PREC_EXACT { hi_full } else { prec });
    let len = if hi <= lead {
        0
    } else {
        ((hi - lead + s - 1) / s) as usize
    };
    let mut out = vec![T::c_zero(a.level); len];
    for (i, ca) in av.iter().enumerate() {
        if ca.c_is_zero() {
            continue;
        }
        let ea = a.lead + i as i64 * a.stride;
        if ea + b.lead >= hi {
            break;
        }
        for (j, cb) in bv.iter().enumerate() {
            let e = ea + b.lead + j as i64 * b.stride;
            if e >= hi {
                break;
            }
            if cb.c_is_zero() {
                continue;
            }
            let idx = ((e - lead) / s) as usize;
            out[idx] = out[idx].c_add(&ca.c_mul(cb));
        }
    }
    (lead, s, prec, out)
}

#[allow(clippy::type_complexity)]
fn div_kernel<T: SeriesCoeff>(
    a: &QExp,
    av: &[T],
    b: &QExp,
    bv: &[T],
) -> Result<(i64, i64, i64, Vec<T>)> {
    if bv.is_empty() || bv[0].c_is_zero() {
        return Err(Error::DivisionByZero(
            "division by series with zero leading coefficient",
        ));
    }
    let lead = if av.is_empty() { 0 } else { a.lead - b.lead };
    let prec = if av.is_empty() {
        prec_shift(a.prec, -b.lead).min(prec_shift(b.prec, a.prec.min(PREC_EXACT) - 2 * b.lead))
    } else {
        prec_shift(a.prec, -b.lead).min(prec_shift(b.prec, a.lead - 2 * b.lead))
    };
    if av.is_empty() {
        return Ok((0, a.stride, prec, Vec::new()));
    }
    let s = gcd(a.stride, b.stride);
    // Resample both operands onto the common lattice.
    let resample = |v: &[T], l0: i64, st: i64, base: i64, len: usize| -> Vec<T> {
        let mut out = vec![T::c_zero(a.level); len];
        for (i, c) in v.iter().enumerate() {
            let e = l0 + i as i64 * st;
            let idx = (e - base) / s;
            if idx >= 0 && (idx as usize) < len {
                out[idx as usize] = c.clone();
            }
        }
        out
    };
    let out_hi = if prec >= PREC_EXACT {
        a.lead + (av.len() as i64) * a.stride - b.lead
    } else {
        prec
    };
    let out_len = if out_hi <= lead {
        0
    } else {
        ((out_hi - lead + s - 1) / s) as usize
    };
    let num_len = out_len;
    let den_len = out_len;
    let num = resample(av, a.lead, a.stride, a.lead, num_len);
    let den = resample(bv, b.lead, b.stride, b.lead, den_len);
    let binv = den[0].c_inv()?;
    let mut out = vec![T::c_zero(a.level); out_len];
    for i in 0..out_len {
        let mut acc = num[i].clone();
        for j in 0..i {
            if !out[j].c_is_zero() && i - j < den.len() && !den[i - j].c_is_zero() {
                acc = acc.c_sub(&out[j].c_mul(&den[i - j]));
            }
        }
        out[i] = acc.c_mul(&binv);
    }
    Ok((lead, s, prec, out))
}

/// Integer coefficients of a product of eta factors prod_i eta(d_i tau),
/// as plain q-power coefficients `c[0..order]` (`c[k]` multiplies q^k).
/// The total lead sum(d_i)/24 must be a nonnegative integer.
pub fn eta_product_integer(ds: &[u32], order: usize) -> Vec<i64> {
    let lead_num: u32 = ds.iter().sum();
    assert!(
        lead_num.is_multiple_of(24),
        "eta product lead {}/24 not integral",
        lead_num
    );
    let lead = (lead_num / 24) as usize;
    let mut acc = vec![0i64; order];
    if lead < order {
        acc[lead] = 1;
    }
    for &d in ds {
        // multiply by prod (1 - q^(d n)) via pentagonal numbers
        let mut next = acc.clone();
        let mut k: i64 = 1;
        loop {
            let g1 = d as i64 * k * (3 * k - 1) / 2;
            let g2 = d as i64 * k * (3 * k + 1) / 2;
            if g1 as usize >= order && g2 as usize >= order {
                break;
            }
            let sign = if k % 2 == 0 { 1 } else { -1 };
            for g in [g1, g2] {
                let g = g as usize;
                if g < order {
                    for i in 0..order - g {
                        next[i + g] += sign * acc[i];
                    }
                }
            }
            k += 1;
        }
        acc = next;
    }
    acc
}
