//! The weight-1 series e_{a,b}, their modular partners et_{a,b}, and the
//! weight-2 combinations used on the L-value side.
//!
//! e_{a,b}(tau) = (1/2)((1+z^a)/(1-z^a) + (1+z^b)/(1-z^b))
//!              + sum_{m,n>=1} (z^{am+bn} - z^{-(am+bn)}) q^{mn},
//! with z = zeta_N, coefficients exact in Q(zeta_N). The companion series
//! et_{a,b} = sum_{m≡a,n≡b} q^{mn} - sum_{m≡-a,n≡-b} q^{mn} has integer
//! coefficients; the transformation
//! (1/(N^2 tau)) e_{a,b}(-1/(N^2 tau)) = et_{a,b}(tau) is verified
//! numerically by [`lemma2_residual`].

use num::{BigRational, One};
use num_complex::Complex64;

use crate::cyclotomic::{half_cot, CycElt};
use crate::error::{Error, Result};
use crate::qseries::{expdenom, QExp};
use crate::regulator::{NumericResult, WorkStats};

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

fn check_index(x: i64, level: u32) -> Result<i64> {
    let r = x.rem_euclid(level as i64);
    if r == 0 {
        Err(Error::IndexDivisibleByLevel { index: x, level })
    } else {
        Ok(r)
    }
}

/// Weight-1 series with exact cyclotomic data: the constant term and the
/// q-expansion are kept separately.
#[derive(Clone, Debug, PartialEq)]
pub struct EisSeries {
    level: u32,
    a: i64,
    b: i64,
    constant: CycElt,
    coeffs: QExp,
}

impl EisSeries {
    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn indices(&self) -> (i64, i64) {
        (self.a, self.b)
    }

    pub fn constant(&self) -> &CycElt {
        &self.constant
    }

    /// The q >= 1 part as a cyclotomic-coefficient expansion.
    pub fn coeffs(&self) -> &QExp {
        &self.coeffs
    }

    /// Constant plus series.
    pub fn full_qexp(&self) -> QExp {
        let c = QExp::from_cyclotomic_coeffs(
            self.level,
            0,
            expdenom(self.level),
            vec![self.constant.clone()],
            crate::qseries::PREC_EXACT,
        );
        c.add(&self.coeffs).expect("same level")
    }
}

/// Exact e_{a,b} truncated at q^order.
pub fn eisenstein_qexp(a: i64, b: i64, level: u32, order: usize) -> Result<EisSeries> {
    let a0 = check_index(a, level)?;
    let b0 = check_index(b, level)?;
    let n = level as i64;
    let constant = half_cot(a0, level)?
        .add(&half_cot(b0, level)?)?
        .scale(&BigRational::new(num::BigInt::one(), num::BigInt::from(2)));
    let mut acc: Vec<CycElt> = vec![CycElt::zero(level); order];
    let mut m = 1i64;
    while (m as usize) <= order {
        let mut nn = 1i64;
        while (m * nn) as usize <= order {
            let e = (a0 * m + b0 * nn).rem_euclid(n);
            let k = (m * nn) as usize - 1;
            acc[k] = acc[k]
                .add(&CycElt::zeta(level, e))?
                .sub(&CycElt::zeta(level, -e))?;
            nn += 1;
        }
        m += 1;
    }
    let d = expdenom(level);
    let coeffs = QExp::from_cyclotomic_coeffs(level, d, d, acc, (order as i64 + 1) * d);
    Ok(EisSeries {
        level,
        a: a0,
        b: b0,
        constant,
        coeffs,
    })
}

/// Embedded coefficients of e_{a,b}: index 0 is the constant term, index k
/// the q^k coefficient (purely imaginary: 2 i sin(2 pi (am+bn)/N) summed
/// over mn = k).
pub fn eisenstein_embedded(a: i64, b: i64, level: u32, order: usize) -> Result<Vec<Complex64>> {
    let a0 = check_index(a, level)?;
    let b0 = check_index(b, level)?;
    let n = level as i64;
    let sin_tab: Vec<f64> = (0..n)
        .map(|r| {
            if r == 0 {
                0.0
            } else {
                (TWO_PI * r as f64 / level as f64).sin()
            }
        })
        .collect();
    let cot = |x: i64| 1.0 / (std::f64::consts::PI * x as f64 / level as f64).tan();
    let mut out = vec![Complex64::new(0.0, 0.0); order + 1];
    out[0] = Complex64::new(0.0, 0.5 * (cot(a0) + cot(b0)));
    let mut m = 1i64;
    while (m as usize) <= order {
        let mut nn = 1i64;
        while (m * nn) as usize <= order {
            let e = (a0 * m + b0 * nn).rem_euclid(n) as usize;
            out[(m * nn) as usize].im += 2.0 * sin_tab[e];
            nn += 1;
        }
        m += 1;
    }
    Ok(out)
}

/// Integer coefficients of et_{a,b} up to q^order (index k is the q^k
/// coefficient; index 0 unused).
pub fn etilde_integer(a: i64, b: i64, level: u32, order: usize) -> Result<Vec<i64>> {
    let a0 = check_index(a, level)?;
    let b0 = check_index(b, level)?;
    let n = level as i64;
    let mut out = vec![0i64; order + 1];
    for (ma, nb, sgn) in [(a0, b0, 1i64), (n - a0, n - b0, -1i64)] {
        let mut m = ma;
        while (m as usize) <= order {
            let mut nn = nb;
            while (m * nn) as usize <= order {
                out[(m * nn) as usize] += sgn;
                nn += n;
            }
            m += n;
        }
    }
    Ok(out)
}

/// et_{a,b} as an integer-coefficient expansion.
pub fn eisenstein_tilde_qexp(a: i64, b: i64, level: u32, order: usize) -> Result<QExp> {
    let ints = etilde_integer(a, b, level, order)?;
    let d = expdenom(level);
    let coeffs: Vec<BigRational> = ints[1..]
        .iter()
        .map(|&v| BigRational::from(num::BigInt::from(v)))
        .collect();
    Ok(QExp::from_rational_coeffs(
        level,
        d,
        d,
        coeffs,
        (order as i64 + 1) * d,
    ))
}

/// |(1/(N^2 tau)) e_{a,b}(-1/(N^2 tau)) - et_{a,b}(tau)| at a point of the
/// upper half-plane, with the truncation tails reported in the error bound.
pub fn lemma2_residual(a: i64, b: i64, level: u32, tau: Complex64) -> Result<NumericResult<f64>> {
    if tau.im <= 0.0 {
        return Err(Error::InvalidInput(
            "lemma2_residual needs Im tau > 0".into(),
        ));
    }
    let n2 = (level as f64) * (level as f64);
    let tau_flip = -1.0 / (n2 * tau);
    let q1 = (Complex64::new(0.0, TWO_PI) * tau_flip).exp();
    let q2 = (Complex64::new(0.0, TWO_PI) * tau).exp();
    let r = q1.norm().max(q2.norm());
    if r >= 1.0 {
        return Err(Error::InvalidInput(
            "|q| >= 1; point too close to the real axis".into(),
        ));
    }
    // order such that the k * r^k envelope is negligible against 1e-11 targets
    let needed = ((33.0f64 + 10.0) / -r.ln()).ceil() as i64;
    if needed > 400_000 {
        return Err(Error::TailBudget {
            requested: 1e-11,
            achieved: r.powi(400_000),
        });
    }
    let order = needed.max(64) as usize;
    let e = eisenstein_embedded(a, b, level, order)?;
    let t = etilde_integer(a, b, level, order)?;
    let mut lhs = Complex64::new(0.0, 0.0);
    let mut q1k = Complex64::new(1.0, 0.0);
    for ck in &e {
        lhs += ck * q1k;
        q1k *= q1;
    }
    lhs /= n2 * tau;
    let mut rhs = Complex64::new(0.0, 0.0);
    let mut q2k = q2;
    for &tk in &t[1..] {
        if tk != 0 {
            rhs += Complex64::new(tk as f64, 0.0) * q2k;
        }
        q2k *= q2;
    }
    let m = order as i32;
    let tail = |x: f64| -> f64 {
        2.0 * x.powi(m + 1) * ((m as f64 + 1.0) * (1.0 - x) + x) / (1.0 - x).powi(2)
    };
    let err = tail(q1.norm()) / (n2 * tau.norm()) + tail(q2.norm());
    let work = WorkStats {
        terms: 2 * order as u64,
        nodes: 0,
    };
    Ok(NumericResult::new((lhs - rhs).norm(), err, work))
}

/// One term lambda * f_{a,b;c} of a weight-2 combination.
#[derive(Clone, Debug)]
pub struct ComboTerm {
    pub a: i64,
    pub b: i64,
    pub c: i64,
    pub lambda: Complex64,
    /// Exact coupling when the coefficient is rational.
    pub lambda_rat: Option<BigRational>,
}

impl ComboTerm {
    pub fn new(a: i64, b: i64, c: i64, lambda: Complex64) -> Self {
        let lambda_rat = if lambda.im == 0.0 && lambda.re == lambda.re.round() {
            Some(BigRational::from(num::BigInt::from(lambda.re as i64)))
        } else {
            None
        };
        ComboTerm {
            a,
            b,
            c,
            lambda,
            lambda_rat,
        }
    }

    pub fn new_rational(a: i64, b: i64, c: i64, lambda: BigRational) -> Self {
        let f = crate::cyclotomic::rational_to_f64(&lambda);
        ComboTerm {
            a,
            b,
            c,
            lambda: Complex64::new(f, 0.0),
            lambda_rat: Some(lambda),
        }
    }
}

/// Sum of lambda f_{a,b;c} with f_{a,b;c} = e_{a,bc} e_{b,-ac} - e_{a,-bc} e_{b,ac}.
#[derive(Clone, Debug)]
pub struct WeightTwoCombo {
    level: u32,
    terms: Vec<ComboTerm>,
    /// Embedded coefficients: index k is the q^k coefficient, index 0 the
    /// constant term f(i·infinity).
    coeffs: Vec<Complex64>,
    constant: Complex64,
    /// Exact constant when every coupling is rational.
    constant_exact: Option<CycElt>,
}

impl WeightTwoCombo {
    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn terms(&self) -> &[ComboTerm] {
        &self.terms
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// The exact constant term f(i∞) = sum lambda (h_b h_{bc} - h_a h_{ac})/2.
    pub fn constant(&self) -> Complex64 {
        self.constant
    }

    pub fn constant_exact(&self) -> Option<&CycElt> {
        self.constant_exact.as_ref()
    }

    /// Embedded coefficients including the constant at index 0.
    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// The combined expansion as a complex-kind series.
    pub fn qexp(&self) -> QExp {
        let d = expdenom(self.level);
        QExp::from_complex_coeffs(
            self.level,
            0,
            d,
            self.coeffs.clone(),
            self.coeffs.len() as i64 * d,
        )
    }
}

fn check_admissible(a: i64, b: i64, c: i64, level: u32) -> Result<()> {
    let n = level as i64;
    if (a * c).rem_euclid(n) == 0 || (b * c).rem_euclid(n) == 0 {
        return Err(Error::Inadmissible { a, b, c, level });
    }
    Ok(())
}

/// Exact constant term of f_{a,b;c}: (h_b h_{bc} - h_a h_{ac}) / 2.
pub fn combo_term_constant(a: i64, b: i64, c: i64, level: u32) -> Result<CycElt> {
    check_admissible(a, b, c, level)?;
    let h = |x: i64| half_cot(x, level);
    let pos = h(b)?.mul(&h(b * c)?)?;
    let neg = h(a)?.mul(&h(a * c)?)?;
    Ok(pos
        .sub(&neg)?
        .scale(&BigRational::new(num::BigInt::one(), num::BigInt::from(2))))
}

/// Build the combination from embedded weight-1 series (the numeric path
/// used by the L-value machinery). The constant term is computed exactly
/// and carried alongside.
pub fn weight2_combo(terms: &[ComboTerm], level: u32, order: usize) -> Result<WeightTwoCombo> {
    let mut coeffs = vec![Complex64::new(0.0, 0.0); order + 1];
    let mut constant = Complex64::new(0.0, 0.0);
    let mut constant_exact = Some(CycElt::zero(level));
    for t in terms {
        check_admissible(t.a, t.b, t.c, level)?;
        let e1 = eisenstein_embedded(t.a, t.b * t.c, level, order)?;
        let e2 = eisenstein_embedded(t.b, -t.a * t.c, level, order)?;
        let e3 = eisenstein_embedded(t.a, -t.b * t.c, level, order)?;
        let e4 = eisenstein_embedded(t.b, t.a * t.c, level, order)?;
        for k in 0..=order {
            let mut acc = Complex64::new(0.0, 0.0);
            for i in 0..=k {
                acc += e1[i] * e2[k - i] - e3[i] * e4[k - i];
            }
            coeffs[k] += t.lambda * acc;
        }
        let c_exact = combo_term_constant(t.a, t.b, t.c, level)?;
        constant += t.lambda * c_exact.embed();
        constant_exact = match (constant_exact, &t.lambda_rat) {
            (Some(acc), Some(lr)) => Some(acc.add(&c_exact.scale(lr))?),
            _ => None,
        };
    }
    // invariant: embedded constant coefficient matches the exact constant
    debug_assert!((coeffs[0] - constant).norm() <= 1e-12 * (1.0 + constant.norm()));
    Ok(WeightTwoCombo {
        level,
        terms: terms.to_vec(),
        coeffs,
        constant,
        constant_exact,
    })
}

/// Exact cyclotomic build of the same combination (slow; used by the
/// symmetry tests). Requires rational couplings.
pub fn weight2_combo_exact(terms: &[ComboTerm], level: u32, order: usize) -> Result<QExp> {
    let mut acc = QExp::zero(level).truncate_prec((order as i64 + 1) * expdenom(level));
    for t in terms {
        check_admissible(t.a, t.b, t.c, level)?;
        let lr = t
            .lambda_rat
            .clone()
            .ok_or_else(|| Error::InvalidInput("exact combo needs rational couplings".into()))?;
        let e1 = eisenstein_qexp(t.a, t.b * t.c, level, order)?.full_qexp();
        let e2 = eisenstein_qexp(t.b, -t.a * t.c, level, order)?.full_qexp();
        let e3 = eisenstein_qexp(t.a, -t.b * t.c, level, order)?.full_qexp();
        let e4 = eisenstein_qexp(t.b, t.a * t.c, level, order)?.full_qexp();
        let f = e1.mul(&e2)?.sub(&e3.mul(&e4)?)?;
        acc = acc.add(&f.mul(&QExp::constant_rat(level, lr))?)?;
    }
    Ok(acc)
}

/// Embedded coefficients (index k for q^k) of the companion combination
/// gt = sum lambda (et_{a,bc} et_{b,-ac} - et_{a,-bc} et_{b,ac}).
pub fn tilde_combo_embedded(
    terms: &[ComboTerm],
    level: u32,
    order: usize,
) -> Result<Vec<Complex64>> {
    let mut out = vec![Complex64::new(0.0, 0.0); order + 1];
    for t in terms {
        check_admissible(t.a, t.b, t.c, level)?;
        let t1 = etilde_integer(t.a, t.b * t.c, level, order)?;
        let t2 = etilde_integer(t.b, -t.a * t.c, level, order)?;
        let t3 = etilde_integer(t.a, -t.b * t.c, level, order)?;
        let t4 = etilde_integer(t.b, t.a * t.c, level, order)?;
        // integer convolution; the series have no constant term
        for i in 1..=order {
            if t1[i] == 0 && t3[i] == 0 {
                continue;
            }
            for j in 1..=(order - i) {
                let v = t1[i] * t2[j] - t3[i] * t4[j];
                if v != 0 {
                    out[i + j] += t.lambda * v as f64;
                }
            }
        }
    }
    Ok(out)
}

/// Combo grammar "a,b,c:lambda;a,b,c:lambda;..." with lambda a rational or
/// decimal literal.
pub fn parse_combo_spec(spec: &str) -> Result<Vec<ComboTerm>> {
    let mut terms = Vec::new();
    for chunk in spec.split(';') {
        let chunk = chunk.trim();
        if chunk.is_empty() {
            continue;
        }
        let (idx, lam) = chunk.split_once(':').ok_or_else(|| {
            Error::InvalidInput(format!("combo term '{chunk}' is not a,b,c:lambda"))
        })?;
        let parts: Vec<&str> = idx.split(',').map(str::trim).collect();
        if parts.len() != 3 {
            return Err(Error::InvalidInput(format!(
                "combo term '{chunk}' needs three indices"
            )));
        }
        let nums: Vec<i64> = parts
            .iter()
            .map(|p| {
                p.parse()
                    .map_err(|_| Error::InvalidInput(format!("bad index '{p}'")))
            })
            .collect::<Result<_>>()?;
        let lam = lam.trim();
        let term = if let Ok(r) = lam.parse::<BigRational>() {
            ComboTerm::new_rational(nums[0], nums[1], nums[2], r)
        } else {
            let v: f64 = lam
                .parse()
                .map_err(|_| Error::InvalidInput(format!("bad coupling '{lam}'")))?;
            ComboTerm::new(nums[0], nums[1], nums[2], Complex64::new(v, 0.0))
        };
        terms.push(term);
    }
    if terms.is_empty() {
        return Err(Error::InvalidInput("empty combo spec".into()));
    }
    Ok(terms)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn symmetry_in_a_b_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..6 {
            let n = *[5u32, 12, 15].get(rng.gen_range(0..3)).unwrap();
            let a = rng.gen_range(1..n as i64);
            let b = rng.gen_range(1..n as i64);
            let e_ab = eisenstein_qexp(a, b, n, 25).unwrap();
            let e_ba = eisenstein_qexp(b, a, n, 25).unwrap();
            assert_eq!(e_ab.constant(), e_ba.constant());
            assert_eq!(e_ab.coeffs(), e_ba.coeffs());
            // e_{-a,-b} = -e_{a,b}
            let e_neg = eisenstein_qexp(-a, -b, n, 25).unwrap();
            assert_eq!(e_neg.full_qexp(), e_ab.full_qexp().neg());
        }
    }

    #[test]
    fn q1_coefficient_is_single_pair() {
        let (a, b, n) = (3i64, 5i64, 15u32);
        let e = eisenstein_qexp(a, b, n, 5).unwrap();
        let d = expdenom(n);
        let expect = CycElt::zeta(n, a + b)
            .sub(&CycElt::zeta(n, -(a + b)))
            .unwrap();
        let got = e.coeffs().coeff_embed(d).unwrap();
        assert!((got - expect.embed()).norm() < 1e-14);
        // exact comparison through the full series
        let full = e.full_qexp();
        let got_exact = full.coeff_embed(d).unwrap();
        assert!((got_exact - expect.embed()).norm() < 1e-14);
    }

    #[test]
    fn rejects_zero_indices() {
        assert!(eisenstein_qexp(0, 3, 15, 5).is_err());
        assert!(eisenstein_qexp(3, 15, 15, 5).is_err());
        assert!(etilde_integer(15, 2, 15, 5).is_err());
    }

    #[test]
    fn etilde_sign_symmetry_and_first_coefficient() {
        let (a, b, n) = (7i64, 12i64, 15u32);
        let t = etilde_integer(a, b, n, 200).unwrap();
        let tn = etilde_integer(-a, -b, n, 200).unwrap();
        for k in 1..=200 {
            assert_eq!(t[k], -tn[k], "k={k}");
        }
        // q^1 coefficient: only (m,n) = (1,1)
        let ind = |x: i64, r: i64| i64::from(x.rem_euclid(n as i64) == r.rem_euclid(n as i64));
        assert_eq!(t[1], ind(1, a) * ind(1, b) - ind(1, -a) * ind(1, -b));
    }

    #[test]
    fn etilde_against_divisor_oracle() {
        // brute-force divisor enumeration oracle, k <= 500, (a,b) = (7,12), N = 15
        let (a, b, n) = (7i64, 12i64, 15u32);
        let t = etilde_integer(a, b, n, 500).unwrap();
        for k in 1..=500i64 {
            let mut acc = 0i64;
            for m in 1..=k {
                if k % m == 0 {
                    let nn = k / m;
                    if m.rem_euclid(15) == a && nn.rem_euclid(15) == b {
                        acc += 1;
                    }
                    if m.rem_euclid(15) == 15 - a && nn.rem_euclid(15) == 15 - b {
                        acc -= 1;
                    }
                }
            }
            assert_eq!(t[k as usize], acc, "k={k}");
        }
    }

    #[test]
    fn embedded_matches_exact() {
        let (a, b, n) = (4i64, 11i64, 15u32);
        let emb = eisenstein_embedded(a, b, n, 40).unwrap();
        let exact = eisenstein_qexp(a, b, n, 40).unwrap();
        assert!((emb[0] - exact.constant().embed()).norm() < 1e-12);
        let d = expdenom(n);
        for k in 1..=40i64 {
            let c = exact.coeffs().coeff_embed(k * d).unwrap();
            assert!((emb[k as usize] - c).norm() < 1e-12, "k={k}");
        }
    }

    #[test]
    fn lemma2_residual_point_checks() {
        // tau = i, N = 5, (a,b) = (1,2)
        let r = lemma2_residual(1, 2, 5, Complex64::new(0.0, 1.0)).unwrap();
        assert!(r.value < 1e-9, "residual {} (err {})", r.value, r.errbound);
        // tau = 0.3 + 0.7i, N = 15, (a,b) = (7,4)
        let r2 = lemma2_residual(7, 4, 15, Complex64::new(0.3, 0.7)).unwrap();
        assert!(
            r2.value < 1e-9,
            "residual {} (err {})",
            r2.value,
            r2.errbound
        );
        // (a,b) vs (-a,-b): both sides negate, residuals equal
        let r3 = lemma2_residual(-7, -4, 15, Complex64::new(0.3, 0.7)).unwrap();
        assert!((r2.value - r3.value).abs() < 1e-12);
    }

    #[test]
    fn combo_symmetries_exact() {
        let n = 15u32;
        // f_{a,a;c} = 0 identically
        let f_aa = weight2_combo_exact(&[ComboTerm::new(7, 7, 3, Complex64::new(1.0, 0.0))], n, 18)
            .unwrap();
        assert!(f_aa.is_zero());
        // f_{b,a;c} = -f_{a,b;c} coefficient-wise
        let f_ab = weight2_combo_exact(&[ComboTerm::new(7, 4, 3, Complex64::new(1.0, 0.0))], n, 18)
            .unwrap();
        let f_ba = weight2_combo_exact(&[ComboTerm::new(4, 7, 3, Complex64::new(1.0, 0.0))], n, 18)
            .unwrap();
        assert_eq!(f_ab, f_ba.neg());
        // constant of f_{a,-a;c} vanishes
        let c = combo_term_constant(7, -7, 3, n).unwrap();
        assert!(c.is_zero());
    }

    #[test]
    fn combo_embedded_matches_exact() {
        let n = 15u32;
        let terms = [ComboTerm::new(7, 4, 3, Complex64::new(1.0, 0.0))];
        let num = weight2_combo(&terms, n, 25).unwrap();
        let exact = weight2_combo_exact(&terms, n, 25).unwrap();
        let d = expdenom(n);
        for k in 0..=25i64 {
            let e = exact.coeff_embed(k * d).unwrap();
            let got = num.coeffs()[k as usize];
            assert!(
                (e - got).norm() < 1e-10 * (1.0 + e.norm()),
                "k={k}: {e} vs {got}"
            );
        }
        assert!((num.constant() - exact.coeff_embed(0).unwrap()).norm() < 1e-10);
        // constants are real for this family
        assert!(num.constant().im.abs() < 1e-12);
    }

    #[test]
    fn combo_admissibility() {
        // N=15, a=5, c=3: ac = 15 ≡ 0
        let r = weight2_combo(&[ComboTerm::new(5, 4, 3, Complex64::new(1.0, 0.0))], 15, 10);
        assert!(matches!(r, Err(Error::Inadmissible { .. })));
    }

    #[test]
    fn combo_constants_against_cot_formula() {
        // f(i∞) = -1/2 (cot(pi b/N) cot(pi bc/N) - cot(pi a/N) cot(pi ac/N))
        let (a, b, c, n) = (7i64, 4i64, 3i64, 15u32);
        let got = combo_term_constant(a, b, c, n).unwrap().embed();
        let pi = std::f64::consts::PI;
        let cot = |x: i64| 1.0 / (pi * (x.rem_euclid(n as i64)) as f64 / n as f64).tan();
        let expect = -0.5 * (cot(b) * cot(b * c) - cot(a) * cot(a * c));
        assert!(
            (got.re - expect).abs() < 1e-12 && got.im.abs() < 1e-13,
            "{got} vs {expect}"
        );
    }

    #[test]
    fn parse_combo_specs() {
        let terms = parse_combo_spec("7,4,-3:2;7,1,-3:-2;2,4,-3:-2;2,1,-3:2").unwrap();
        assert_eq!(terms.len(), 4);
        assert_eq!(terms[0].a, 7);
        assert_eq!(terms[1].lambda.re, -2.0);
        assert!(terms[0].lambda_rat.is_some());
        let dec = parse_combo_spec("1,2,1:0.5").unwrap();
        assert!((dec[0].lambda.re - 0.5).abs() < 1e-15);
        assert!(parse_combo_spec("1,2:3").is_err());
        assert!(parse_combo_spec("").is_err());
    }
}
