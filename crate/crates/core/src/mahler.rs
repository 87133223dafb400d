//! Logarithmic Mahler measures by Jensen-formula quadrature.
//!
//! m(P) = average of log|P| over the unit torus. For two variables Jensen's
//! formula reduces each x-slice to log|top coefficient| plus log+ of the
//! y-roots, so the integrand needs per-node root-finding only. The k-family
//! m(k + x + 1/x + y + 1/y) has an explicit quadratic slice and gets its
//! own fast path.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::quad::{gl_adaptive, gl_panels, Kahan};
use crate::regulator::{NumericResult, WorkStats};
use crate::special::clausen2;

const PI: f64 = std::f64::consts::PI;
const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// A Laurent polynomial in two variables with complex coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct LaurentPoly2 {
    terms: BTreeMap<(i32, i32), Complex64>,
}

impl LaurentPoly2 {
    pub fn new(terms: &[((i32, i32), Complex64)]) -> Result<LaurentPoly2> {
        let mut map = BTreeMap::new();
        for &((i, j), c) in terms {
            if i.abs() > 16 || j.abs() > 16 {
                return Err(Error::InvalidInput(format!(
                    "monomial degree ({i},{j}) out of the supported |deg| <= 16 box"
                )));
            }
            if c != Complex64::new(0.0, 0.0) {
                *map.entry((i, j)).or_insert(Complex64::new(0.0, 0.0)) += c;
            }
        }
        map.retain(|_, c| *c != Complex64::new(0.0, 0.0));
        if map.is_empty() {
            return Err(Error::InvalidInput(
                "zero polynomial has no Mahler measure".into(),
            ));
        }
        Ok(LaurentPoly2 { terms: map })
    }

    pub fn terms(&self) -> &BTreeMap<(i32, i32), Complex64> {
        &self.terms
    }

    /// The classical family k + x + 1/x + y + 1/y.
    pub fn family(k: Complex64) -> LaurentPoly2 {
        LaurentPoly2::new(&[
            ((0, 0), k),
            ((1, 0), Complex64::new(1.0, 0.0)),
            ((-1, 0), Complex64::new(1.0, 0.0)),
            ((0, 1), Complex64::new(1.0, 0.0)),
            ((0, -1), Complex64::new(1.0, 0.0)),
        ])
        .expect("nonzero by construction")
    }

    pub fn swap_variables(&self) -> LaurentPoly2 {
        let terms: Vec<_> = self.terms.iter().map(|(&(i, j), &c)| ((j, i), c)).collect();
        LaurentPoly2::new(&terms).expect("nonzero")
    }

    pub fn invert_x(&self) -> LaurentPoly2 {
        let terms: Vec<_> = self
            .terms
            .iter()
            .map(|(&(i, j), &c)| ((-i, j), c))
            .collect();
        LaurentPoly2::new(&terms).expect("nonzero")
    }

    pub fn scale(&self, c: Complex64) -> Result<LaurentPoly2> {
        let terms: Vec<_> = self.terms.iter().map(|(&ij, &v)| (ij, v * c)).collect();
        LaurentPoly2::new(&terms)
    }

    /// JSON schema: {"terms": [{"i": .., "j": .., "re": .., "im": ..}, ..]}.
    pub fn to_json(&self) -> Value {
        let terms: Vec<Value> = self
            .terms
            .iter()
            .map(|(&(i, j), c)| json!({"i": i, "j": j, "re": c.re, "im": c.im}))
            .collect();
        json!({ "terms": terms })
    }

    pub fn from_json(v: &Value) -> Result<LaurentPoly2> {
        let bad = |m: &str| Error::InvalidInput(format!("LaurentPoly2 JSON: {m}"));
        let arr = v
            .get("terms")
            .and_then(Value::as_array)
            .ok_or_else(|| bad("missing terms array"))?;
        let mut terms = Vec::new();
        for t in arr {
            let i = t
                .get("i")
                .and_then(Value::as_i64)
                .ok_or_else(|| bad("missing i"))? as i32;
            let j = t
                .get("j")
                .and_then(Value::as_i64)
                .ok_or_else(|| bad("missing j"))? as i32;
            let re = t.get("re").and_then(Value::as_f64).unwrap_or(0.0);
            let im = t.get("im").and_then(Value::as_f64).unwrap_or(0.0);
            terms.push(((i, j), Complex64::new(re, im)));
        }
        LaurentPoly2::new(&terms)
    }
}

/// Simultaneous (Durand–Kerner) root iteration for a complex polynomial
/// given by ascending coefficients. Trailing zero coefficients contribute
/// roots at the origin.
pub fn polynomial_roots(coeffs: &[Complex64]) -> Vec<Complex64> {
    let mut cs: Vec<Complex64> = coeffs.to_vec();
    while cs.last().map(|c| c.norm() == 0.0).unwrap_or(false) {
        cs.pop();
    }
    if cs.len() <= 1 {
        return Vec::new();
    }
    let mut zeros_at_origin = 0usize;
    while cs.first().map(|c| c.norm() == 0.0).unwrap_or(false) {
        cs.remove(0);
        zeros_at_origin += 1;
    }
    let n = cs.len() - 1;
    let lead = cs[n];
    let monic: Vec<Complex64> = cs.iter().map(|c| c / lead).collect();
    let radius = 1.0
        + monic
            .iter()
            .take(n)
            .map(|c| c.norm())
            .fold(0.0f64, f64::max);
    let mut roots: Vec<Complex64> = (0..n)
        .map(|k| Complex64::from_polar(radius.min(4.0), TWO_PI * k as f64 / n as f64 + 0.41))
        .collect();
    for _ in 0..300 {
        let mut max_step = 0.0f64;
        for i in 0..n {
            let mut p = Complex64::new(0.0, 0.0);
            for c in monic.iter().rev() {
                p = p * roots[i] + c;
            }
            let mut denom = Complex64::new(1.0, 0.0);
            for j in 0..n {
                if j != i {
                    denom *= roots[i] - roots[j];
                }
            }
            if denom.norm() < 1e-280 {
                denom = Complex64::new(1e-280, 0.0);
            }
            let step = p / denom;
            roots[i] -= step;
            max_step = max_step.max(step.norm());
        }
        if max_step < 1e-14 * radius {
            break;
        }
    }
    roots.extend(std::iter::repeat_n(
        Complex64::new(0.0, 0.0),
        zeros_at_origin,
    ));
    roots
}

/// One-variable Mahler measure of a Laurent polynomial in x by Jensen:
/// log|lead| + sum log+ |roots|.
fn mahler_1var(coeffs: &BTreeMap<i32, Complex64>) -> f64 {
    if coeffs.is_empty() {
        return 0.0;
    }
    let lo = *coeffs.keys().next().unwrap();
    let hi = *coeffs.keys().last().unwrap();
    let cs: Vec<Complex64> = (lo..=hi)
        .map(|i| coeffs.get(&i).copied().unwrap_or(Complex64::new(0.0, 0.0)))
        .collect();
    let lead = cs.last().unwrap();
    let mut m = lead.norm().ln();
    for r in polynomial_roots(&cs) {
        let a = r.norm();
        if a > 1.0 {
            m += a.ln();
        }
    }
    m
}

/// m(k + x + 1/x + y + 1/y): the y-roots of each x-slice satisfy
/// y^2 + (k + 2 cos t) y + 1 = 0 with product 1, so the integrand is
/// log of the larger root modulus. Panels split where |k + 2 cos t| = 2
/// (root coalescence on the unit circle).
pub fn mahler_family(k: Complex64, tol: f64) -> Result<NumericResult<f64>> {
    if k.norm() < 1e-12 {
        return Err(Error::InvalidInput(
            "k = 0 is outside the family domain".into(),
        ));
    }
    // breakpoints: |k + 2c|^2 = 4 with c = cos t
    let mut breaks = Vec::new();
    if k.im.abs() <= 2.0 {
        let root = (4.0 - k.im * k.im).sqrt();
        for c in [(-k.re + root) / 2.0, (-k.re - root) / 2.0] {
            if (-1.0..=1.0).contains(&c) {
                breaks.push(c.acos());
            }
        }
    }
    breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
    breaks.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    let integrand = |t: f64| -> Result<f64> {
        let a = k + 2.0 * t.cos();
        let disc = (a * a - 4.0).sqrt();
        let y1 = (-a + disc) / 2.0;
        let y2 = (-a - disc) / 2.0;
        let big = y1.norm().max(y2.norm()).max(1.0);
        Ok(big.ln())
    };
    let out = gl_adaptive(integrand, 0.0, PI, &breaks, tol.min(1e-9) * PI / 50.0, 42)?;
    let value = out.value / PI;
    let err = out.step_err / PI + 1e-14 * (1.0 + value.abs());
    if err > tol.max(1e-12) * (1.0 + value.abs()) {
        return Err(Error::ToleranceNotMet {
            requested: tol,
            achieved: err,
        });
    }
    Ok(NumericResult::new(value, err, out.work))
}

/// m(P) for a general 2-variable Laurent polynomial:
/// m(top y-coefficient as a polynomial in x) plus the Jensen integral of
/// log+ |y-roots| over the x-circle, roots per node by simultaneous
/// iteration.
pub fn mahler_2var(p: &LaurentPoly2, tol: f64) -> Result<NumericResult<f64>> {
    let jmin = p.terms.keys().map(|&(_, j)| j).min().unwrap();
    let jmax = p.terms.keys().map(|&(_, j)| j).max().unwrap();

    // top y-coefficient as a 1-variable Laurent polynomial in x
    let mut top: BTreeMap<i32, Complex64> = BTreeMap::new();
    for (&(i, j), &c) in &p.terms {
        if j == jmax {
            top.insert(i, c);
        }
    }

    if jmin == jmax {
        // no y dependence beyond a monomial factor
        let m = mahler_1var(&top);
        return Ok(NumericResult::new(
            m,
            1e-12 * (1.0 + m.abs()),
            WorkStats::default(),
        ));
    }

    // breakpoints where the top coefficient vanishes on |x| = 1
    let lo = *top.keys().next().unwrap();
    let hi = *top.keys().last().unwrap();
    let top_coeffs: Vec<Complex64> = (lo..=hi)
        .map(|i| top.get(&i).copied().unwrap_or(Complex64::new(0.0, 0.0)))
        .collect();
    let mut breaks = Vec::new();
    if top_coeffs.len() > 1 {
        for r in polynomial_roots(&top_coeffs) {
            if (r.norm() - 1.0).abs() < 1e-6 {
                let t = r.arg().rem_euclid(TWO_PI);
                breaks.push(t);
            }
        }
    }
    breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
    breaks.dedup_by(|a, b| (*a - *b).abs() < 1e-9);

    let integrand = |t: f64| -> Result<f64> {
        let x = Complex64::from_polar(1.0, t);
        let mut ys = vec![Complex64::new(0.0, 0.0); (jmax - jmin + 1) as usize];
        for (&(i, j), &c) in &p.terms {
            ys[(j - jmin) as usize] += c * x.powi(i);
        }
        let mut acc = 0.0;
        for r in polynomial_roots(&ys) {
            let a = r.norm();
            if a > 1.0 {
                acc += a.ln();
            }
        }
        Ok(acc)
    };
    let out = gl_adaptive(
        integrand,
        0.0,
        TWO_PI,
        &breaks,
        tol.min(1e-8) * TWO_PI / 50.0,
        38,
    )?;
    let m_top = mahler_1var(&top);
    let value = m_top + out.value / TWO_PI;
    let err = out.step_err / TWO_PI + 1e-13 * (1.0 + value.abs());
    if err > tol.max(1e-11) * (1.0 + value.abs()) {
        return Err(Error::ToleranceNotMet {
            requested: tol,
            achieved: err,
        });
    }
    Ok(NumericResult::new(value, err, out.work))
}

/// The three-variable check m((1+x)(1+y) − z). The z-average is
/// log+ |(1+x)(1+y)|, so
///   m = (1/4 pi^2) int int max(0, g(s) + g(t)) ds dt,
/// with g(t) = log|2 cos(t/2)|. The inner integral is integrated as
/// panels on [0, phi*(s)] where the integrand crosses zero; the crossing
/// phi* = 2 arccos(e^{-g(s)}/2) is known analytically, so every panel sees
/// a smooth integrand. Coarse-versus-fine panel depths give the
/// self-convergence estimate.
pub fn mahler_3var_boyd(tol: f64) -> Result<NumericResult<f64>> {
    let coarse = boyd_outer(20, 24)?;
    let fine = boyd_outer(26, 32)?;
    let err = (fine.0 - coarse.0).abs() + 1e-13;
    if err > tol.max(1e-11) {
        return Err(Error::ToleranceNotMet {
            requested: tol,
            achieved: err,
        });
    }
    let mut work = fine.1;
    work.absorb(coarse.1);
    Ok(NumericResult::new(fine.0, err, work))
}

fn boyd_outer(depth: usize, order: usize) -> Result<(f64, WorkStats)> {
    // outer integrand: I(s) = g(s) phi*(s) + Cl2(pi - phi*(s)) on [0, s_c],
    // where s_c = 2 arccos(1/4) is where the inner support shrinks to zero.
    let s_c = 2.0 * (0.25f64).acos();
    let out = gl_panels(
        |s: f64| {
            let g = (2.0 * (s / 2.0).cos()).ln();
            let arg = (-g).exp() / 2.0;
            if arg >= 1.0 {
                return Ok(0.0);
            }
            let phi = 2.0 * arg.acos();
            Ok(g * phi + clausen2(PI - phi))
        },
        0.0,
        s_c,
        &[],
        &[s_c],
        depth,
        order,
    )?;
    Ok((out.value / (PI * PI), out.work))
}

/// Raw tensor-grid estimate of the same double integral (midpoint rule on
/// max(0, g + g)); slow-converging, used as an independent cross-check and
/// for the axis-swap symmetry diagnostic.
pub fn mahler_3var_boyd_grid(n: usize, swap_axes: bool) -> f64 {
    let h = TWO_PI / n as f64;
    let g = |t: f64| {
        let c = 2.0 * (t / 2.0).cos();
        c.abs().max(1e-300).ln()
    };
    let mut acc = Kahan::default();
    for i in 0..n {
        let s = -PI + h * (i as f64 + 0.5);
        for j in 0..n {
            let t = -PI + h * (j as f64 + 0.5);
            // IEEE addition commutes, so the swapped evaluation must agree
            // bit-for-bit; keeping both spellings makes that an actual check.
            #[allow(clippy::if_same_then_else)]
            let v = if swap_axes { g(t) + g(s) } else { g(s) + g(t) };
            if v > 0.0 {
                acc.add(v);
            }
        }
    }
    acc.value() * h * h / (4.0 * PI * PI)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roots_of_simple_polynomials() {
        // x^2 - 1
        let roots = polynomial_roots(&[
            Complex64::new(-1.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(1.0, 0.0),
        ]);
        let mut mods: Vec<f64> = roots.iter().map(|r| r.norm()).collect();
        mods.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((mods[0] - 1.0).abs() < 1e-12 && (mods[1] - 1.0).abs() < 1e-12);
        // x^3 with trailing zeros: triple root at origin plus none else
        let roots = polynomial_roots(&[
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(2.0, 0.0),
        ]);
        assert_eq!(roots.len(), 3);
        assert!(roots.iter().all(|r| r.norm() < 1e-12));
    }

    #[test]
    fn family_even_in_k() {
        for &k in &[Complex64::new(1.3, 0.0), Complex64::new(0.0, 2.0)] {
            let a = mahler_family(k, 1e-8).unwrap();
            let b = mahler_family(-k, 1e-8).unwrap();
            assert!((a.value - b.value).abs() <= 2.0 * (a.errbound + b.errbound) + 1e-11);
        }
    }

    #[test]
    fn family_large_k_asymptotic() {
        // m(k) = log k - 2/k^2 + O(1/k^4) for large real k: the gap to
        // log k is below 1e-3 in magnitude and matches the -2/k^2 term.
        let m = mahler_family(Complex64::new(100.0, 0.0), 1e-9).unwrap();
        let gap = m.value - 100.0f64.ln();
        assert!(gap.abs() < 1e-3, "gap {gap}");
        assert!((gap + 2.0e-4).abs() < 1e-6, "gap {gap} vs -2/k^2");
    }

    #[test]
    fn family_rejects_zero() {
        assert!(mahler_family(Complex64::new(0.0, 0.0), 1e-8).is_err());
    }

    #[test]
    fn two_var_monomial_and_constant_root() {
        // m(2x) = log 2
        let p = LaurentPoly2::new(&[((1, 0), Complex64::new(2.0, 0.0))]).unwrap();
        let m = mahler_2var(&p, 1e-9).unwrap();
        assert!((m.value - 2.0f64.ln()).abs() < 1e-10);
        // m(y - 2) = log 2
        let p = LaurentPoly2::new(&[
            ((0, 1), Complex64::new(1.0, 0.0)),
            ((0, 0), Complex64::new(-2.0, 0.0)),
        ])
        .unwrap();
        let m = mahler_2var(&p, 1e-9).unwrap();
        assert!((m.value - 2.0f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn two_var_matches_family_fast_path() {
        for &k in &[
            Complex64::new(1.0, 0.0),
            Complex64::new(2.0, 0.0),
            Complex64::new(0.0, 1.0),
            Complex64::new(0.0, 2.0),
        ] {
            let a = mahler_family(k, 1e-7).unwrap();
            let b = mahler_2var(&LaurentPoly2::family(k), 1e-6).unwrap();
            assert!(
                (a.value - b.value).abs() <= a.errbound + b.errbound + 1e-7,
                "k={k}: {} vs {}",
                a.value,
                b.value
            );
        }
    }

    #[test]
    fn scaling_law() {
        let p = LaurentPoly2::family(Complex64::new(1.0, 0.0));
        for &c in &[Complex64::new(2.0, 0.0), Complex64::new(1.0, 1.0)] {
            let m0 = mahler_2var(&p, 1e-7).unwrap();
            let m1 = mahler_2var(&p.scale(c).unwrap(), 1e-7).unwrap();
            assert!(
                (m1.value - m0.value - c.norm().ln()).abs() <= m0.errbound + m1.errbound + 1e-8,
                "c={c}"
            );
        }
    }

    #[test]
    fn variable_symmetries() {
        let p = LaurentPoly2::new(&[
            ((0, 0), Complex64::new(2.5, 0.0)),
            ((1, 0), Complex64::new(1.0, 0.0)),
            ((-1, 1), Complex64::new(1.0, 0.0)),
            ((0, 1), Complex64::new(-1.0, 0.5)),
        ])
        .unwrap();
        let m = mahler_2var(&p, 1e-6).unwrap();
        let ms = mahler_2var(&p.swap_variables(), 1e-6).unwrap();
        let mi = mahler_2var(&p.invert_x(), 1e-6).unwrap();
        assert!((m.value - ms.value).abs() <= m.errbound + ms.errbound + 1e-7);
        assert!((m.value - mi.value).abs() <= m.errbound + mi.errbound + 1e-7);
    }

    #[test]
    fn boyd_grid_symmetry_and_consistency() {
        let a = mahler_3var_boyd_grid(1200, false);
        let b = mahler_3var_boyd_grid(1200, true);
        assert_eq!(a, b, "axis swap must not change the tensor sum");
        let refined = mahler_3var_boyd(1e-8).unwrap();
        assert!(
            (a - refined.value).abs() < 5e-3,
            "grid {} vs refined {}",
            a,
            refined.value
        );
    }

    #[test]
    fn boyd_richardson_consistency() {
        let coarse = boyd_outer(16, 16).unwrap().0;
        let fine = mahler_3var_boyd(1e-9).unwrap();
        assert!((coarse - fine.value).abs() < 1e-7);
        assert!(fine.errbound < 1e-9);
    }

    #[test]
    fn laurent_json_roundtrip() {
        let p = LaurentPoly2::new(&[
            ((1, -2), Complex64::new(0.5, -1.5)),
            ((0, 3), Complex64::new(2.0, 0.0)),
        ])
        .unwrap();
        let q = LaurentPoly2::from_json(&p.to_json()).unwrap();
        assert_eq!(p, q);
        assert!(LaurentPoly2::from_json(&json!({"terms": []})).is_err());
    }
}
