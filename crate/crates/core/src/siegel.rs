//! Siegel units g_a at level N: exact q-expansions, the two analytic
//! expansions of log g_a near a cusp, and factorisation of modular
//! functions into unit products.
//!
//! g_a(tau) = q^{N B2(a/N)/2} prod_{n≡a (N)} (1-q^n) prod_{n≡-a (N)} (1-q^n),
//! with B2(x) = {x}^2 - {x} + 1/6. Indices a ≡ 0 (mod N) are rejected at
//! construction; the theorem hypotheses exclude them.

use std::collections::BTreeMap;

use num::{BigInt, BigRational, One, ToPrimitive, Zero};
use num_complex::Complex64;

use crate::cyclotomic::rational_to_f64;
use crate::error::{Error, Result};
use crate::qseries::{expdenom, Coeffs, QExp};
use crate::quad::Kahan;

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Exact periodic Bernoulli value B2({x}) = {x}^2 - {x} + 1/6.
pub fn bernoulli_b2(x: &BigRational) -> BigRational {
    let frac = x - x.floor();
    &frac * &frac - &frac + BigRational::new(BigInt::one(), BigInt::from(6))
}

/// Exact leading exponent N B2(a/N) / 2 of g_a.
pub fn siegel_lead(a: i64, level: u32) -> BigRational {
    let n = BigRational::from(BigInt::from(level));
    let x = BigRational::new(BigInt::from(a), BigInt::from(level));
    n * bernoulli_b2(&x) / BigRational::from(BigInt::from(2))
}

/// The same lead in integer 1/D units (D = 24N): 12a^2 - 12aN + 2N^2 for
/// the reduced representative 0 <= a < N.
pub fn siegel_lead_units(a: i64, level: u32) -> i64 {
    let n = level as i64;
    let a0 = a.rem_euclid(n);
    let units = 12 * a0 * a0 - 12 * a0 * n + 2 * n * n;
    debug_assert_eq!(
        BigRational::from(BigInt::from(units)),
        siegel_lead(a, level) * BigRational::from(BigInt::from(expdenom(level))),
    );
    units
}

fn check_unit_index(a: i64, level: u32) -> Result<i64> {
    let r = a.rem_euclid(level as i64);
    if r == 0 {
        Err(Error::IndexDivisibleByLevel { index: a, level })
    } else {
        Ok(r)
    }
}

/// Exact q-expansion of g_a to `order` stored coefficients (integer
/// coefficients; both congruence classes are multiplied in, so the product
/// is squared when a ≡ -a mod N).
pub fn siegel_qexp(a: i64, level: u32, order: usize) -> Result<QExp> {
    let a0 = check_unit_index(a, level)?;
    let n = level as i64;
    let mut coeffs = vec![BigRational::zero(); order];
    if order > 0 {
        coeffs[0] = BigRational::one();
    }
    for r in [a0, n - a0] {
        let mut m = r as usize;
        while m < order {
            // in-place multiply by (1 - q^m)
            for i in (m..order).rev() {
                let delta = coeffs[i - m].clone();
                if !delta.is_zero() {
                    let v = &coeffs[i] - delta;
                    coeffs[i] = v;
                }
            }
            m += n as usize;
        }
    }
    let d = expdenom(level);
    let lead = siegel_lead_units(a0, level);
    Ok(QExp::from_rational_coeffs(
        level,
        lead,
        d,
        coeffs,
        lead + order as i64 * d,
    ))
}

/// Tail of sum_{k>K} k r^k (linear-coefficient geometric envelope).
fn poly1_tail(r: f64, k: i64) -> f64 {
    let rk = r.powi(k as i32 + 1);
    rk * ((k as f64 + 1.0) * (1.0 - r) + r) / (1.0 - r).powi(2)
}

const TERM_BUDGET: i64 = 500_000;

/// log g_a(c/N + i t) by the expansion in powers of exp(-2 pi t):
/// pi i c B2(a/N) - pi t N B2(a/N)
/// minus sum_{m, n>=1, n≡a} zeta^{acm}/m exp(-2 pi m n t)
/// minus sum_{m, n>=1, n≡-a} zeta^{-acm}/m exp(-2 pi m n t).
/// Returns the value and the truncation tail; errors when the term budget
/// cannot reach `tol` (the caller must switch expansions).
pub fn siegel_log_large_t(
    a: i64,
    c: i64,
    level: u32,
    t: f64,
    tol: f64,
) -> Result<(Complex64, f64)> {
    let a0 = check_unit_index(a, level)?;
    if t <= 0.0 {
        return Err(Error::InvalidInput("t must be positive".into()));
    }
    let n = level as i64;
    let rate = TWO_PI * t;
    let kmax = (((1.0 / tol).ln().max(0.0) + 14.0) / rate).ceil() as i64 + 2;
    if kmax > TERM_BUDGET {
        return Err(Error::TailBudget {
            requested: tol,
            achieved: (-rate * TERM_BUDGET as f64).exp(),
        });
    }
    let b2 = rational_to_f64(&bernoulli_b2(&BigRational::new(
        BigInt::from(a0),
        BigInt::from(level),
    )));
    let mut re = Kahan::default();
    let mut im = Kahan::default();
    let r = (-rate).exp();
    // double sum sieved by k = m n, both congruence classes
    for (class, sign) in [(a0, 1i64), (n - a0, -1i64)] {
        let mut nn = class;
        while nn <= kmax {
            let mut m = 1i64;
            while m * nn <= kmax {
                let phase = TWO_PI * ((sign * a0 * c * m).rem_euclid(n)) as f64 / n as f64;
                let w = r.powi((m * nn) as i32) / m as f64;
                re.add(-w * phase.cos());
                im.add(-w * phase.sin());
                m += 1;
            }
            nn += n;
        }
    }
    let pi = std::f64::consts::PI;
    let value = Complex64::new(
        -pi * t * level as f64 * b2 + re.value(),
        pi * c as f64 * b2 + im.value(),
    );
    // |coefficient of r^k| <= 2 d(k) <= 2k
    let tail = 2.0 * poly1_tail(r, kmax);
    Ok((value, tail))
}

/// log g_a(c/N + i t) by the dual expansion in powers of exp(-2 pi/(N^2 t)):
/// C(a, c) + pi i c B2(ac/N) - pi B2(ac/N)/(N t)
/// minus sum_{m, n>=1, n≡ac} zeta^{-am}/m exp(-2 pi m n/(N^2 t))
/// minus sum_{m, n>=1, n≡-ac} zeta^{am}/m exp(-2 pi m n/(N^2 t)),
/// where the purely imaginary constant C(a, c) comes from the Klein-form /
/// eta-multiplier bookkeeping of the involution w -> (cw - c^2 - 1)/(w - c):
/// with f1 = {ac/N}, Q = floor(ac/N), a2 = -a(c^2+1)/N, M = floor(a2),
/// f2 = {a2}, it is C = pi i (f2 (f1 - 1) + Q (1 - a2) + M (1 + f1) - 1/2).
/// The branch so fixed agrees with the continuation of the large-t
/// expansion modulo 2 pi i (tested on a grid over N, a, c).
pub fn siegel_log_small_t(
    a: i64,
    c: i64,
    level: u32,
    t: f64,
    tol: f64,
) -> Result<(Complex64, f64)> {
    let a0 = check_unit_index(a, level)?;
    if t <= 0.0 {
        return Err(Error::InvalidInput("t must be positive".into()));
    }
    let n = level as i64;
    let nf = level as f64;
    let rate = TWO_PI / (nf * nf * t);
    let kmax = (((1.0 / tol).ln().max(0.0) + 14.0) / rate).ceil() as i64 + 2;
    if kmax > TERM_BUDGET {
        return Err(Error::TailBudget {
            requested: tol,
            achieved: (-rate * TERM_BUDGET as f64).exp(),
        });
    }
    let ac = a0 * c;
    let b2_ac = rational_to_f64(&bernoulli_b2(&BigRational::new(
        BigInt::from(ac),
        BigInt::from(level),
    )));
    let mut re = Kahan::default();
    let mut im = Kahan::default();
    let r = (-rate).exp();
    let ac0 = ac.rem_euclid(n);
    for (class, sign) in [(ac0, -1i64), ((n - ac0) % n, 1i64)] {
        // class 0 means n ≡ 0 (mod N): the smallest member is N itself
        let mut nn = if class == 0 { n } else { class };
        while nn <= kmax {
            let mut m = 1i64;
            while m * nn <= kmax {
                let phase = TWO_PI * ((sign * a0 * m).rem_euclid(n)) as f64 / n as f64;
                let w = r.powi((m * nn) as i32) / m as f64;
                re.add(-w * phase.cos());
                im.add(-w * phase.sin());
                m += 1;
            }
            nn += n;
        }
    }
    let pi = std::f64::consts::PI;
    // exact prefactor phase; all terms are rationals with denominator N^2
    let two = BigRational::from(BigInt::from(2));
    let a2 = BigRational::new(BigInt::from(-a0 * (c * c + 1)), BigInt::from(n));
    let m_fl = a2.floor();
    let f2 = &a2 - &m_fl;
    let q_fl = BigRational::from(BigInt::from(ac)) / BigRational::from(BigInt::from(n));
    let q_fl = q_fl.floor();
    let f1 = BigRational::new(BigInt::from(ac), BigInt::from(n)) - &q_fl;
    let one = BigRational::from(BigInt::from(1));
    let half = BigRational::new(BigInt::from(1), BigInt::from(2));
    let mut x_phase = &f2 * (&f1 - &one) + &q_fl * (&one - &a2) + &m_fl * (&one + &f1) - half;
    // reduce mod 2 to keep the embedding well-conditioned
    x_phase = &x_phase - (&x_phase / &two).floor() * &two;
    let const_im = pi * rational_to_f64(&x_phase) + pi * c as f64 * b2_ac;
    let value = Complex64::new(-pi * b2_ac / (nf * t) + re.value(), const_im + im.value());
    let tail = 2.0 * poly1_tail(r, kmax);
    Ok((value, tail))
}

/// Path between cusps: from c/N up to i·infinity, or c/N to d/N.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CuspPath {
    pub level: u32,
    pub from: i64,
    /// `None` means the path ends at i·infinity.
    pub to: Option<i64>,
}

/// A formal product scalar * prod g_a^{n_a} with indices normalised to
/// 1 <= a <= floor(N/2) (g_a = g_{-a}).
#[derive(Clone, Debug, PartialEq)]
pub struct UnitProduct {
    level: u32,
    exponents: BTreeMap<i64, i64>,
    scalar: Complex64,
    scalar_unit_modulus: bool,
}

impl UnitProduct {
    pub fn new(level: u32, pairs: &[(i64, i64)], scalar: Complex64) -> Result<UnitProduct> {
        let n = level as i64;
        let mut exponents: BTreeMap<i64, i64> = BTreeMap::new();
        for &(a, e) in pairs {
            let a0 = check_unit_index(a, level)?;
            let idx = a0.min(n - a0);
            if e != 0 {
                *exponents.entry(idx).or_insert(0) += e;
            }
        }
        exponents.retain(|_, e| *e != 0);
        let scalar_unit_modulus = (scalar.norm() - 1.0).abs() < 1e-12;
        Ok(UnitProduct {
            level,
            exponents,
            scalar,
            scalar_unit_modulus,
        })
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn exponents(&self) -> &BTreeMap<i64, i64> {
        &self.exponents
    }

    pub fn scalar(&self) -> Complex64 {
        self.scalar
    }

    pub fn scalar_unit_modulus(&self) -> bool {
        self.scalar_unit_modulus
    }

    /// Exact expansion of the unit part (scalar omitted).
    pub fn qexp_unit(&self, order: usize) -> Result<QExp> {
        let mut acc = QExp::one(self.level);
        for (&a, &e) in &self.exponents {
            // generous order so that negative powers keep enough terms
            let g = siegel_qexp(a, self.level, order + 4)?;
            acc = acc.mul(&g.powi(e)?)?;
        }
        let d = expdenom(self.level);
        Ok(acc.truncate_prec(acc.lead() + order as i64 * d))
    }

    /// Expansion including the scalar prefactor (complex kind unless the
    /// scalar is exactly rational).
    pub fn qexp(&self, order: usize) -> Result<QExp> {
        let unit = self.qexp_unit(order)?;
        if self.scalar.im == 0.0 && (self.scalar.re - self.scalar.re.round()).abs() < 1e-15 {
            let k = BigRational::from(BigInt::from(self.scalar.re.round() as i64));
            return unit.mul(&QExp::constant_rat(self.level, k));
        }
        let scalar = QExp::from_complex_coeffs(
            self.level,
            0,
            expdenom(self.level),
            vec![self.scalar],
            crate::qseries::PREC_EXACT,
        );
        unit.mul(&scalar)
    }

    /// Grammar: `a1:n1,a2:n2,...[@scalar]`; the scalar accepts rational or
    /// decimal literals like "-1", "i", "-i", "2.5", "1/2", "0.5-0.25i".
    pub fn parse(level: u32, spec: &str) -> Result<UnitProduct> {
        let (body, scalar) = match spec.split_once('@') {
            Some((b, s)) => (b, parse_complex_literal(s)?),
            None => (spec, Complex64::new(1.0, 0.0)),
        };
        let mut pairs = Vec::new();
        for part in body.split(',') {
            let part = part.trim();
            if part.is_empty() {
                continue;
            }
            let (a, e) = part.split_once(':').ok_or_else(|| {
                Error::InvalidInput(format!("unit spec term '{part}' is not a:n"))
            })?;
            let a: i64 = a
                .trim()
                .parse()
                .map_err(|_| Error::InvalidInput(format!("bad index '{a}'")))?;
            let e: i64 = e
                .trim()
                .parse()
                .map_err(|_| Error::InvalidInput(format!("bad exponent '{e}'")))?;
            pairs.push((a, e));
        }
        if pairs.is_empty() {
            return Err(Error::InvalidInput("empty unit spec".into()));
        }
        UnitProduct::new(level, &pairs, scalar)
    }
}

/// Parse a complex literal: decimal or rational real part, optional
/// imaginary part ending in 'i'.
pub fn parse_complex_literal(s: &str) -> Result<Complex64> {
    let s = s.trim().replace(' ', "");
    if s.is_empty() {
        return Err(Error::InvalidInput("empty complex literal".into()));
    }
    let parse_real = |txt: &str| -> Result<f64> {
        if let Some((p, q)) = txt.split_once('/') {
            let p: f64 = p
                .parse()
                .map_err(|_| Error::InvalidInput(format!("bad rational '{txt}'")))?;
            let q: f64 = q
                .parse()
                .map_err(|_| Error::InvalidInput(format!("bad rational '{txt}'")))?;
            return Ok(p / q);
        }
        txt.parse()
            .map_err(|_| Error::InvalidInput(format!("bad number '{txt}'")))
    };
    if let Some(body) = s.strip_suffix('i') {
        // forms: "i", "-i", "+i", "<im>i", "<re>+<im>i", "<re>-<im>i"
        let (re_part, im_part) = split_re_im(body);
        let re = if re_part.is_empty() {
            0.0
        } else {
            parse_real(re_part)?
        };
        let im = match im_part {
            "" | "+" => 1.0,
            "-" => -1.0,
            other => parse_real(other)?,
        };
        Ok(Complex64::new(re, im))
    } else {
        Ok(Complex64::new(parse_real(&s)?, 0.0))
    }
}

/// Split "re±im" at the last sign that is not an exponent sign or leading.
fn split_re_im(body: &str) -> (&str, &str) {
    let bytes = body.as_bytes();
    for i in (1..bytes.len()).rev() {
        let c = bytes[i] as char;
        if (c == '+' || c == '-') && !matches!(bytes[i - 1] as char, 'e' | 'E') {
            return (&body[..i], &body[i..]);
        }
    }
    ("", body)
}

/// Sum of divisors of k lying in the classes ±a mod N (classes counted
/// separately, so a ≡ -a contributes twice) — the k-th coefficient of
/// -q d/dq log g_a.
fn sigma_class(k: i64, a: i64, level: u32) -> i64 {
    let n = level as i64;
    let a0 = a.rem_euclid(n);
    let mut s = 0;
    for r in [a0, n - a0] {
        let mut d = r;
        while d <= k {
            if k % d == 0 {
                s += d;
            }
            d += n;
        }
    }
    s
}

/// Recover integer exponents n_a with q dlog f = sum_a n_a q dlog g_a by
/// solving the linear system on the first floor(N/2)+20 coefficients and
/// verifying on every remaining stored coefficient. The scalar is the ratio
/// of leading coefficients. Failure to verify is a clean
/// [`Error::NotUnitProduct`], not a panic.
pub fn unit_factorization(f: &QExp, level: u32) -> Result<UnitProduct> {
    let n = level as i64;
    let d = expdenom(level);
    let num_units = (n / 2) as usize;
    let k_solve = num_units + 20;
    // enough coefficients for the solve plus a genuine verification margin
    let k_required = k_solve.max(2 * num_units + 8);

    let dl = f.dlog()?;
    // coefficients actually known: bounded by the truncation order and by
    // what is physically stored (exact polynomials carry a sentinel prec)
    let stored_hi = dl.lead() + dl.len() as i64 * dl.stride();
    let avail = ((dl.prec() - d) / d).min(stored_hi / d).max(0);
    if avail < k_required as i64 {
        return Err(Error::InsufficientPrecision(format!(
            "factorisation at level {level} needs {k_required} dlog coefficients, have {avail}"
        )));
    }
    let kmax = avail as usize;

    let mut sigma = vec![vec![0i64; kmax + 1]; num_units + 1];
    for (a, row) in sigma.iter_mut().enumerate().skip(1) {
        for (k, v) in row.iter_mut().enumerate().skip(1) {
            *v = sigma_class(k as i64, a as i64, level);
        }
    }

    // Exact route when the dlog coefficients are rational; float route
    // (solve then round) otherwise.
    let exact_rhs: Option<Vec<BigRational>> = match dl.coeffs() {
        Coeffs::Rational(_) => Some(
            (1..=kmax)
                .map(|k| dl.coeff_rational(k as i64 * d).unwrap())
                .collect(),
        ),
        _ => None,
    };

    let exponents: Vec<i64> = if let Some(rhs) = &exact_rhs {
        let sol = solve_exact(&sigma, rhs, num_units, k_solve)?;
        let mut ints = Vec::with_capacity(num_units);
        for v in &sol {
            if !v.denom().is_one() {
                return Err(Error::NotUnitProduct(format!("non-integer exponent {v}")));
            }
            ints.push(
                v.numer()
                    .to_i64()
                    .ok_or_else(|| Error::NotUnitProduct("exponent overflow".into()))?,
            );
        }
        // exact verification on all remaining stored coefficients
        for (k, target) in rhs.iter().enumerate() {
            let k = k + 1;
            let mut acc = BigRational::zero();
            for (a, &e) in ints.iter().enumerate() {
                if e != 0 {
                    acc -= BigRational::from(BigInt::from(e * sigma[a + 1][k]));
                }
            }
            if &acc != target {
                return Err(Error::NotUnitProduct(format!(
                    "dlog coefficient {k} mismatch: expected {target}, unit combination gives {acc}"
                )));
            }
        }
        ints
    } else {
        let rhs: Vec<f64> = (1..=kmax)
            .map(|k| dl.coeff_embed(k as i64 * d).map(|c| c.re).unwrap_or(0.0))
            .collect();
        let rhs_im_max = (1..=kmax)
            .map(|k| {
                dl.coeff_embed(k as i64 * d)
                    .map(|c| c.im.abs())
                    .unwrap_or(0.0)
            })
            .fold(0.0f64, f64::max);
        let scale = rhs.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        if rhs_im_max > 1e-8 * scale {
            return Err(Error::NotUnitProduct(
                "dlog has non-real coefficients".into(),
            ));
        }
        let sol = solve_least_squares(&sigma, &rhs, num_units, k_solve)?;
        let ints: Vec<i64> = sol.iter().map(|v| v.round() as i64).collect();
        for (i, (&x, &xi)) in sol.iter().zip(&ints).enumerate() {
            if (x - xi as f64).abs() > 1e-6 {
                return Err(Error::NotUnitProduct(format!(
                    "exponent {i} = {x} is not an integer"
                )));
            }
        }
        for (k, target) in rhs.iter().enumerate() {
            let k = k + 1;
            let acc: f64 = ints
                .iter()
                .enumerate()
                .map(|(a, &e)| -(e * sigma[a + 1][k]) as f64)
                .sum();
            if (acc - target).abs() > 1e-7 * scale.max(1.0) {
                return Err(Error::NotUnitProduct(format!(
                    "dlog coefficient {k} mismatch ({acc} vs {target})"
                )));
            }
        }
        ints
    };

    // lead bookkeeping: lead(f) must equal sum n_a lead(g_a)
    let lead_sum: i64 = exponents
        .iter()
        .enumerate()
        .map(|(a, &e)| e * siegel_lead_units(a as i64 + 1, level))
        .sum();
    if lead_sum != f.lead() {
        return Err(Error::NotUnitProduct(format!(
            "leading exponent {} does not match unit combination {}",
            f.lead(),
            lead_sum
        )));
    }

    let scalar = f
        .leading_embed()
        .ok_or(Error::DivisionByZero("factorisation of zero series"))?;
    let pairs: Vec<(i64, i64)> = exponents
        .iter()
        .enumerate()
        .filter(|(_, &e)| e != 0)
        .map(|(a, &e)| (a as i64 + 1, e))
        .collect();
    UnitProduct::new(level, &pairs, scalar)
}

#[allow(clippy::needless_range_loop)] // two rows of the same matrix are in play
fn solve_exact(
    sigma: &[Vec<i64>],
    rhs: &[BigRational],
    unknowns: usize,
    rows: usize,
) -> Result<Vec<BigRational>> {
    let mut m: Vec<Vec<BigRational>> = (1..=rows)
        .map(|k| {
            let mut row: Vec<BigRational> = (1..=unknowns)
                .map(|a| BigRational::from(BigInt::from(-sigma[a][k])))
                .collect();
            row.push(rhs[k - 1].clone());
            row
        })
        .collect();
    let mut r = 0;
    for col in 0..unknowns {
        let Some(p) = (r..rows).find(|&i| !m[i][col].is_zero()) else {
            return Err(Error::NotUnitProduct(format!(
                "rank-deficient system (free column {col})"
            )));
        };
        m.swap(r, p);
        let inv = BigRational::one() / m[r][col].clone();
        for v in m[r][col..].iter_mut() {
            *v *= &inv;
        }
        for i in 0..rows {
            if i != r && !m[i][col].is_zero() {
                let f = m[i][col].clone();
                for j in col..=unknowns {
                    let delta = &f * &m[r][j];
                    m[i][j] -= delta;
                }
            }
        }
        r += 1;
    }
    // consistency of the remaining rows
    for row in m.iter().skip(r) {
        if !row[unknowns].is_zero() {
            return Err(Error::NotUnitProduct("inconsistent linear system".into()));
        }
    }
    Ok((0..unknowns).map(|i| m[i][unknowns].clone()).collect())
}

#[allow(clippy::needless_range_loop)]
fn solve_least_squares(
    sigma: &[Vec<i64>],
    rhs: &[f64],
    unknowns: usize,
    rows: usize,
) -> Result<Vec<f64>> {
    // normal equations A^T A x = A^T b with A[k][a] = -sigma[a+1][k+1]
    let mut ata = vec![vec![0.0f64; unknowns]; unknowns];
    let mut atb = vec![0.0f64; unknowns];
    for k in 0..rows {
        for i in 0..unknowns {
            let aki = -(sigma[i + 1][k + 1] as f64);
            atb[i] += aki * rhs[k];
            for j in 0..unknowns {
                ata[i][j] += aki * -(sigma[j + 1][k + 1] as f64);
            }
        }
    }
    // Gauss with partial pivoting
    for col in 0..unknowns {
        let p = (col..unknowns)
            .max_by(|&i, &j| ata[i][col].abs().partial_cmp(&ata[j][col].abs()).unwrap())
            .unwrap();
        if ata[p][col].abs() < 1e-9 {
            return Err(Error::NotUnitProduct("singular normal equations".into()));
        }
        ata.swap(col, p);
        atb.swap(col, p);
        for i in 0..unknowns {
            if i != col {
                let f = ata[i][col] / ata[col][col];
                for j in col..unknowns {
                    ata[i][j] -= f * ata[col][j];
                }
                atb[i] -= f * atb[col];
            }
        }
    }
    Ok((0..unknowns).map(|i| atb[i] / ata[i][i]).collect())
}
