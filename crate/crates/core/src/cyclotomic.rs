//! Exact arithmetic in the cyclotomic field Q(zeta_N).
//!
//! Elements are stored in the canonical basis of `Q[x]/(Phi_N(x))`, i.e. as
//! rational coefficient vectors of length phi(N) reduced modulo the N-th
//! cyclotomic polynomial. Equality is therefore coefficient-wise, and all
//! ring operations are exact. The only lossy operation is [`CycElt::embed`],
//! which maps into binary64 complex arithmetic.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num::{BigInt, BigRational, One, Signed, Zero};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Euler's totient.
pub fn euler_phi(n: u32) -> u32 {
    let mut n = n;
    let mut result = n;
    let mut p = 2;
    while p * p <= n {
        if n.is_multiple_of(p) {
            while n.is_multiple_of(p) {
                n /= p;
            }
            result -= result / p;
        }
        p += 1;
    }
    if n > 1 {
        result -= result / n;
    }
    result
}

/// Divisors of `n` in increasing order.
pub fn divisors(n: u32) -> Vec<u32> {
    let mut ds: Vec<u32> = (1..=n).filter(|d| n.is_multiple_of(*d)).collect();
    ds.sort_unstable();
    ds
}

/// Coefficients of the N-th cyclotomic polynomial Phi_N, ascending, monic.
///
/// Computed by dividing x^N − 1 by the product of Phi_d over proper divisors
/// d of N; the division is exact over the integers.
pub fn cyclotomic_polynomial(n: u32) -> Vec<BigInt> {
    assert!(n >= 1, "cyclotomic polynomial needs N >= 1");
    let mut cache: HashMap<u32, Vec<BigInt>> = HashMap::new();
    cyclotomic_rec(n, &mut cache)
}

fn cyclotomic_rec(n: u32, cache: &mut HashMap<u32, Vec<BigInt>>) -> Vec<BigInt> {
    if let Some(p) = cache.get(&n) {
        return p.clone();
    }
    // x^n - 1
    let mut num = vec![BigInt::zero(); n as usize + 1];
    num[0] = BigInt::from(-1);
    num[n as usize] = BigInt::one();
    let mut den = vec![BigInt::one()];
    for d in divisors(n) {
        if d < n {
            let pd = cyclotomic_rec(d, cache);
            den = int_poly_mul(&den, &pd);
        }
    }
    let q = int_poly_div_exact(&num, &den);
    cache.insert(n, q.clone());
    q
}

fn int_poly_mul(a: &[BigInt], b: &[BigInt]) -> Vec<BigInt> {
    let mut out = vec![BigInt::zero(); a.len() + b.len() - 1];
    for (i, ai) in a.iter().enumerate() {
        if ai.is_zero() {
            continue;
        }
        for (j, bj) in b.iter().enumerate() {
            if !bj.is_zero() {
                out[i + j] += ai * bj;
            }
        }
    }
    out
}

/// Exact division of integer polynomials (remainder must vanish).
fn int_poly_div_exact(num: &[BigInt], den: &[BigInt]) -> Vec<BigInt> {
    let mut rem: Vec<BigInt> = num.to_vec();
    let dd = den.len() - 1;
    let lead = den[dd].clone();
    assert!(!lead.is_zero());
    let nd = rem.len() - 1;
    assert!(nd >= dd);
    let mut quot = vec![BigInt::zero(); nd - dd + 1];
    for k in (0..=(nd - dd)).rev() {
        let c = &rem[k + dd] / &lead;
        if !c.is_zero() {
            for (j, dj) in den.iter().enumerate() {
                let delta = &c * dj;
                rem[k + j] -= delta;
            }
        }
        quot[k] = c;
    }
    assert!(
        rem.iter().all(|c| c.is_zero()),
        "non-exact polynomial division"
    );
    quot
}

/// Per-level tables shared by all `CycElt` values of that level.
struct LevelTables {
    phi: usize,
    /// Phi_N as rationals, ascending, monic.
    modulus: Vec<BigRational>,
    /// Reduced representation of zeta^j for j in 0..N.
    zeta_rows: Vec<Vec<BigRational>>,
    /// Complex embeddings of the basis elements x^j, j < phi(N).
    basis_embed: Vec<Complex64>,
}

fn tables(level: u32) -> Arc<LevelTables> {
    static CACHE: OnceLock<Mutex<HashMap<u32, Arc<LevelTables>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().unwrap();
    if let Some(t) = guard.get(&level) {
        return Arc::clone(t);
    }
    let phi_poly = cyclotomic_polynomial(level);
    let phi = phi_poly.len() - 1;
    let modulus: Vec<BigRational> = phi_poly
        .iter()
        .map(|c| BigRational::from(c.clone()))
        .collect();

    // zeta_rows[j] = x^j mod Phi_N, built by repeated multiplication by x.
    let mut zeta_rows = Vec::with_capacity(level as usize);
    let mut row = vec![BigRational::zero(); phi];
    row[0] = BigRational::one();
    zeta_rows.push(row.clone());
    for _ in 1..level {
        // multiply by x
        let mut next = vec![BigRational::zero(); phi + 1];
        for (i, c) in row.iter().enumerate() {
            next[i + 1] = c.clone();
        }
        reduce_in_place(&mut next, &modulus, phi);
        next.truncate(phi);
        row = next;
        zeta_rows.push(row.clone());
    }

    let tau = 2.0 * std::f64::consts::PI / level as f64;
    let basis_embed = (0..phi)
        .map(|j| Complex64::from_polar(1.0, tau * j as f64))
        .collect();

    let t = Arc::new(LevelTables {
        phi,
        modulus,
        zeta_rows,
        basis_embed,
    });
    guard.insert(level, Arc::clone(&t));
    t
}

fn reduce_in_place(coeffs: &mut Vec<BigRational>, modulus: &[BigRational], phi: usize) {
    while coeffs.len() > phi {
        let top = coeffs.len() - 1;
        let c = coeffs[top].clone();
        if !c.is_zero() {
            let shift = top - phi;
            for (j, mj) in modulus.iter().enumerate().take(phi) {
                let delta = &c * mj;
                coeffs[shift + j] -= delta;
            }
        }
        coeffs.truncate(top);
    }
    while coeffs.len() < phi {
        coeffs.push(BigRational::zero());
    }
}

/// Exact element of Q(zeta_N) in the canonical power basis mod Phi_N.
#[derive(Clone, PartialEq, Eq)]
pub struct CycElt {
    level: u32,
    coeffs: Vec<BigRational>,
}

impl std::fmt::Debug for CycElt {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "CycElt(N={}, [", self.level)?;
        for (i, c) in self.coeffs.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{}", c)?;
        }
        write!(f, "])")
    }
}

impl CycElt {
    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn coeffs(&self) -> &[BigRational] {
        &self.coeffs
    }

    pub fn from_coeffs(level: u32, coeffs: Vec<BigRational>) -> Self {
        let t = tables(level);
        let mut c = coeffs;
        reduce_in_place(&mut c, &t.modulus, t.phi);
        CycElt { level, coeffs: c }
    }

    pub fn zero(level: u32) -> Self {
        let t = tables(level);
        CycElt {
            level,
            coeffs: vec![BigRational::zero(); t.phi],
        }
    }

    pub fn one(level: u32) -> Self {
        Self::from_rational(level, BigRational::one())
    }

    pub fn from_rational(level: u32, r: BigRational) -> Self {
        let t = tables(level);
        let mut coeffs = vec![BigRational::zero(); t.phi];
        coeffs[0] = r;
        CycElt { level, coeffs }
    }

    pub fn from_integer(level: u32, k: i64) -> Self {
        Self::from_rational(level, BigRational::from(BigInt::from(k)))
    }

    /// zeta_N^e for any integer exponent (reduced mod N).
    pub fn zeta(level: u32, exp: i64) -> Self {
        let t = tables(level);
        let e = exp.rem_euclid(level as i64) as usize;
        CycElt {
            level,
            coeffs: t.zeta_rows[e].clone(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    /// Some(r) when the element lies in Q.
    pub fn as_rational(&self) -> Option<BigRational> {
        if self.coeffs[1..].iter().all(|c| c.is_zero()) {
            Some(self.coeffs[0].clone())
        } else {
            None
        }
    }

    fn check_level(&self, other: &CycElt) -> Result<()> {
        if self.level != other.level {
            return Err(Error::LevelMismatch {
                left: self.level,
                right: other.level,
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &CycElt) -> Result<CycElt> {
        self.check_level(other)?;
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a + b)
            .collect();
        Ok(CycElt {
            level: self.level,
            coeffs,
        })
    }

    pub fn sub(&self, other: &CycElt) -> Result<CycElt> {
        self.check_level(other)?;
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a - b)
            .collect();
        Ok(CycElt {
            level: self.level,
            coeffs,
        })
    }

    pub fn neg(&self) -> CycElt {
        CycElt {
            level: self.level,
            coeffs: self.coeffs.iter().map(|c| -c).collect(),
        }
    }

    pub fn mul(&self, other: &CycElt) -> Result<CycElt> {
        self.check_level(other)?;
        let t = tables(self.level);
        let mut conv = vec![BigRational::zero(); 2 * t.phi];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                if !b.is_zero() {
                    conv[i + j] += a * b;
                }
            }
        }
        reduce_in_place(&mut conv, &t.modulus, t.phi);
        conv.truncate(t.phi);
        Ok(CycElt {
            level: self.level,
            coeffs: conv,
        })
    }

    pub fn scale(&self, r: &BigRational) -> CycElt {
        CycElt {
            level: self.level,
            coeffs: self.coeffs.iter().map(|c| c * r).collect(),
        }
    }

    /// Multiplicative inverse via the extended Euclidean algorithm against
    /// Phi_N; Phi_N is irreducible over Q, so every nonzero element inverts.
    pub fn inv(&self) -> Result<CycElt> {
        if self.is_zero() {
            return Err(Error::DivisionByZero("cyclotomic inverse of zero"));
        }
        let t = tables(self.level);
        let (g, s) = poly_half_xgcd(&self.coeffs, &t.modulus);
        // g is a nonzero constant (gcd of an element with an irreducible modulus).
        debug_assert!(g.len() == 1 && !g[0].is_zero());
        let ginv = BigRational::one() / g[0].clone();
        let mut coeffs: Vec<BigRational> = s.iter().map(|c| c * &ginv).collect();
        reduce_in_place(&mut coeffs, &t.modulus, t.phi);
        coeffs.truncate(t.phi);
        Ok(CycElt {
            level: self.level,
            coeffs,
        })
    }

    pub fn powi(&self, e: i64) -> Result<CycElt> {
        if e == 0 {
            return Ok(CycElt::one(self.level));
        }
        let base = if e < 0 { self.inv()? } else { self.clone() };
        let mut exp = e.unsigned_abs();
        let mut result = CycElt::one(self.level);
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

    /// Complex embedding zeta_N -> exp(2 pi i / N) in binary64.
    pub fn embed(&self) -> Complex64 {
        let t = tables(self.level);
        let mut acc = Complex64::new(0.0, 0.0);
        for (c, b) in self.coeffs.iter().zip(&t.basis_embed) {
            if !c.is_zero() {
                acc += b * rational_to_f64(c);
            }
        }
        acc
    }
}

/// Robust BigRational -> f64 (handles magnitudes beyond i64).
pub fn rational_to_f64(r: &BigRational) -> f64 {
    use num::ToPrimitive;
    if let Some(v) = r.to_f64() {
        if v.is_finite() {
            return v;
        }
    }
    // Fall back to scaling by powers of two.
    let num = r.numer();
    let den = r.denom();
    let shift = (num.bits() as i64 - den.bits() as i64) - 52;
    if shift > 0 {
        let scaled = num >> shift as u64;
        let a = scaled.to_f64().unwrap_or(f64::MAX);
        let b = den.to_f64().unwrap_or(1.0);
        (a / b) * 2f64.powi(shift as i32)
    } else {
        let scaled = den >> (-shift) as u64;
        let a = num.to_f64().unwrap_or(f64::MAX);
        let b = scaled.to_f64().unwrap_or(1.0);
        (a / b) * 2f64.powi(shift as i32)
    }
}

/// Half-extended gcd over Q[x]: returns (g, s) with s*a ≡ g (mod m).
fn poly_half_xgcd(a: &[BigRational], m: &[BigRational]) -> (Vec<BigRational>, Vec<BigRational>) {
    let trim = |v: &mut Vec<BigRational>| {
        while v.len() > 1 && v.last().map(|c| c.is_zero()).unwrap_or(false) {
            v.pop();
        }
    };
    let mut r0: Vec<BigRational> = m.to_vec();
    let mut r1: Vec<BigRational> = a.to_vec();
    trim(&mut r0);
    trim(&mut r1);
    let mut s0: Vec<BigRational> = vec![BigRational::zero()];
    let mut s1: Vec<BigRational> = vec![BigRational::one()];
    while !(r1.len() == 1 && r1[0].is_zero()) {
        let (q, rem) = rat_poly_div_rem(&r0, &r1);
        let qs1 = rat_poly_mul(&q, &s1);
        let mut s2 = rat_poly_sub(&s0, &qs1);
        trim(&mut s2);
        r0 = r1;
        r1 = rem;
        trim(&mut r1);
        s0 = s1;
        s1 = s2;
    }
    (r0, s0)
}

fn rat_poly_mul(a: &[BigRational], b: &[BigRational]) -> Vec<BigRational> {
    let mut out = vec![BigRational::zero(); a.len() + b.len() - 1];
    for (i, ai) in a.iter().enumerate() {
        if ai.is_zero() {
            continue;
        }
        for (j, bj) in b.iter().enumerate() {
            if !bj.is_zero() {
                out[i + j] += ai * bj;
            }
        }
    }
    out
}

fn rat_poly_sub(a: &[BigRational], b: &[BigRational]) -> Vec<BigRational> {
    let n = a.len().max(b.len());
    let mut out = vec![BigRational::zero(); n];
    for (i, c) in a.iter().enumerate() {
        out[i] += c;
    }
    for (i, c) in b.iter().enumerate() {
        out[i] -= c;
    }
    out
}

fn rat_poly_div_rem(
    num: &[BigRational],
    den: &[BigRational],
) -> (Vec<BigRational>, Vec<BigRational>) {
    let dd = den.len() - 1;
    let lead = den[dd].clone();
    assert!(!lead.is_zero());
    let mut rem: Vec<BigRational> = num.to_vec();
    if num.len() <= dd {
        return (vec![BigRational::zero()], rem);
    }
    let nd = num.len() - 1;
    let mut quot = vec![BigRational::zero(); nd - dd + 1];
    for k in (0..=(nd - dd)).rev() {
        let c = &rem[k + dd] / &lead;
        if !c.is_zero() {
            for (j, dj) in den.iter().enumerate() {
                let delta = &c * dj;
                rem[k + j] -= delta;
            }
        }
        quot[k] = c;
    }
    rem.truncate(dd.max(1));
    (quot, rem)
}

/// The exact element (1 + zeta^a) / (1 − zeta^a); its embedding equals
/// i·cot(pi a / N). Errors when a ≡ 0 (mod N), where the denominator vanishes.
pub fn half_cot(a: i64, level: u32) -> Result<CycElt> {
    if a.rem_euclid(level as i64) == 0 {
        return Err(Error::IndexDivisibleByLevel { index: a, level });
    }
    let z = CycElt::zeta(level, a);
    let one = CycElt::one(level);
    let num = one.add(&z)?;
    let den = one.sub(&z)?;
    num.mul(&den.inv()?)
}

/// Largest absolute value among numerators/denominators; used by tests to
/// keep an eye on coefficient growth.
pub fn coeff_height(x: &CycElt) -> BigInt {
    let mut h = BigInt::one();
    for c in x.coeffs() {
        if c.numer().abs() > h {
            h = c.numer().abs();
        }
        if c.denom().abs() > h {
            h = c.denom().abs();
        }
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn big(v: i64) -> BigInt {
        BigInt::from(v)
    }

    #[test]
    fn phi_1_is_x_minus_1() {
        assert_eq!(cyclotomic_polynomial(1), vec![big(-1), big(1)]);
    }

    #[test]
    fn phi_4_is_x2_plus_1() {
        assert_eq!(cyclotomic_polynomial(4), vec![big(1), big(0), big(1)]);
    }

    #[test]
    fn phi_15_degree_and_product() {
        let p15 = cyclotomic_polynomial(15);
        assert_eq!(p15.len() - 1, 8);
        // Phi_1 * Phi_3 * Phi_5 * Phi_15 = x^15 - 1 exactly.
        let prod = [1u32, 3, 5, 15]
            .iter()
            .map(|&d| cyclotomic_polynomial(d))
            .reduce(|a, b| int_poly_mul(&a, &b))
            .unwrap();
        let mut expect = vec![big(0); 16];
        expect[0] = big(-1);
        expect[15] = big(1);
        assert_eq!(prod, expect);
    }

    #[test]
    fn phi_reconstruction_up_to_60() {
        for n in 1..=60u32 {
            let prod = divisors(n)
                .iter()
                .map(|&d| cyclotomic_polynomial(d))
                .reduce(|a, b| int_poly_mul(&a, &b))
                .unwrap();
            let mut expect = vec![big(0); n as usize + 1];
            expect[0] = big(-1);
            expect[n as usize] = big(1);
            assert_eq!(prod, expect, "product of Phi_d != x^{}-1", n);
        }
    }

    #[test]
    fn zeta6_times_zeta6_5_is_one() {
        let a = CycElt::zeta(6, 1);
        let b = CycElt::zeta(6, 5);
        assert_eq!(a.mul(&b).unwrap(), CycElt::one(6));
    }

    #[test]
    fn sum_of_nontrivial_fifth_roots_is_minus_one() {
        let mut s = CycElt::zero(5);
        for e in 1..5 {
            s = s.add(&CycElt::zeta(5, e)).unwrap();
        }
        assert_eq!(s, CycElt::from_integer(5, -1));
    }

    #[test]
    fn inverse_identity_level_7() {
        let x = CycElt::one(7).sub(&CycElt::zeta(7, 1)).unwrap();
        let prod = x.mul(&x.inv().unwrap()).unwrap();
        assert_eq!(prod, CycElt::one(7));
    }

    #[test]
    fn half_cot_pole_and_symmetries() {
        assert!(half_cot(0, 9).is_err());
        assert!(half_cot(18, 9).is_err());
        // N even, a = N/2: zeta^a = -1 so the element is 0.
        let h = half_cot(6, 12).unwrap();
        assert!(h.is_zero());
        // half_cot(a) + half_cot(-a) = 0 exactly.
        for n in [5u32, 8, 15] {
            for a in 1..n as i64 {
                let lhs = half_cot(a, n)
                    .unwrap()
                    .add(&half_cot(-a, n).unwrap())
                    .unwrap();
                assert!(lhs.is_zero(), "a={} N={}", a, n);
            }
        }
    }

    #[test]
    fn half_cot_embedding_matches_cot() {
        let h = half_cot(1, 15).unwrap().embed();
        let expect = 1.0 / (std::f64::consts::PI / 15.0).tan();
        assert!((h.re).abs() < 1e-13);
        assert!((h.im - expect).abs() < 1e-11 * expect.abs());
    }

    #[test]
    fn embed_basics() {
        assert!((CycElt::one(9).embed() - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        assert!((CycElt::zeta(4, 1).embed() - Complex64::new(0.0, 1.0)).norm() < 1e-15);
    }

    fn random_elt(rng: &mut ChaCha8Rng, level: u32) -> CycElt {
        let phi = euler_phi(level) as usize;
        let coeffs = (0..phi)
            .map(|_| BigRational::new(big(rng.gen_range(-6..=6)), big(rng.gen_range(1..=4))))
            .collect();
        CycElt::from_coeffs(level, coeffs)
    }

    #[test]
    fn ring_axioms_randomized() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for &level in &[5u32, 12, 15, 40] {
            for _ in 0..20 {
                let x = random_elt(&mut rng, level);
                let y = random_elt(&mut rng, level);
                let z = random_elt(&mut rng, level);
                let xy_z = x.mul(&y).unwrap().mul(&z).unwrap();
                let x_yz = x.mul(&y.mul(&z).unwrap()).unwrap();
                assert_eq!(xy_z, x_yz, "associativity level {}", level);
                let lhs = x.mul(&y.add(&z).unwrap()).unwrap();
                let rhs = x.mul(&y).unwrap().add(&x.mul(&z).unwrap()).unwrap();
                assert_eq!(lhs, rhs, "distributivity level {}", level);
            }
        }
    }

    #[test]
    fn embed_is_ring_homomorphism_numerically() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for &level in &[7u32, 15, 24] {
            for _ in 0..20 {
                let x = random_elt(&mut rng, level);
                let y = random_elt(&mut rng, level);
                let lhs = x.mul(&y).unwrap().embed();
                let rhs = x.embed() * y.embed();
                let scale = 1.0 + lhs.norm().max(rhs.norm());
                assert!((lhs - rhs).norm() < 1e-12 * scale, "level {}", level);
            }
        }
    }

    #[test]
    fn inverse_roundtrip_randomized() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for &level in &[8u32, 15] {
            for _ in 0..10 {
                let x = random_elt(&mut rng, level);
                if x.is_zero() {
                    continue;
                }
                assert_eq!(x.mul(&x.inv().unwrap()).unwrap(), CycElt::one(level));
            }
        }
    }

    #[test]
    fn powi_matches_repeated_mul() {
        let x = CycElt::zeta(15, 2).add(&CycElt::one(15)).unwrap();
        let mut acc = CycElt::one(15);
        for _ in 0..5 {
            acc = acc.mul(&x).unwrap();
        }
        assert_eq!(x.powi(5).unwrap(), acc);
        assert_eq!(x.powi(-3).unwrap(), x.powi(3).unwrap().inv().unwrap());
    }
}
