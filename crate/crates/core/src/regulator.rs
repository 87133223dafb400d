//! Numerical integration of the closed 1-form
//! eta(g,h) = log|g| d arg h − log|h| d arg g
//! along the vertical geodesic tau = c/N + i t, t in (0, infinity).
//!
//! Both log|g_a| and d arg g_a / dt have two expansions: one in powers of
//! exp(−2 pi t) (fast for t above 1/N) and one in powers of
//! exp(−2 pi/(N^2 t)) (fast below). Each is sieved over k = m n into
//! per-cusp coefficient tables, so a quadrature node costs one geometric
//! sum per table. The integrand decays double-exponentially in s = ln t on
//! both ends, which the exp-substituted trapezoid engine exploits.

use std::collections::BTreeMap;

use num::{BigInt, BigRational};

use crate::cyclotomic::rational_to_f64;
use crate::error::{Error, Result};
use crate::quad::{exp_trapezoid, Kahan};
use crate::siegel::{bernoulli_b2, CuspPath, UnitProduct};

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;
const PI: f64 = std::f64::consts::PI;

/// Work counters attached to every quadrature result.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct WorkStats {
    /// Series terms summed across all integrand evaluations.
    pub terms: u64,
    /// Quadrature nodes used.
    pub nodes: u64,
}

impl WorkStats {
    pub fn absorb(&mut self, other: WorkStats) {
        self.terms += other.terms;
        self.nodes += other.nodes;
    }
}

/// A numeric value with an explicit error bound and work statistics.
///
/// The bound sums truncation tails and the quadrature error estimate;
/// downstream comparisons must use it rather than assume exactness.
#[derive(Clone, Copy, Debug)]
pub struct NumericResult<T = f64> {
    pub value: T,
    pub errbound: f64,
    pub work: WorkStats,
}

impl<T> NumericResult<T> {
    pub fn new(value: T, errbound: f64, work: WorkStats) -> Self {
        NumericResult {
            value,
            errbound,
            work,
        }
    }
}

fn b2_of(num: i64, level: u32) -> f64 {
    rational_to_f64(&bernoulli_b2(&BigRational::new(
        BigInt::from(num),
        BigInt::from(level),
    )))
}

fn check_pair_admissible(a: i64, b: i64, c: i64, level: u32) -> Result<()> {
    let n = level as i64;
    if (a * c).rem_euclid(n) == 0 || (b * c).rem_euclid(n) == 0 {
        return Err(Error::Inadmissible { a, b, c, level });
    }
    Ok(())
}

/// Sieved coefficient tables for one formal unit product at one cusp.
#[derive(Clone)]
struct SideTables {
    /// coefficient of t in log|X| (large-t regime): −pi N sum n_a B2(a/N)
    log_linear: f64,
    /// large-t log series: log|X| = log_linear·t + sum_k logl[k] r^k
    logl: Vec<f64>,
    /// large-t d arg series: d arg X/dt = 2 pi sum_k argl[k] r^k
    argl: Vec<f64>,
    /// coefficient of 1/t in log|X| (small-t regime): −(pi/N) sum n_a B2(ac/N)
    log_pole: f64,
    /// small-t log series coefficients (in rho = exp(−2 pi/(N^2 t)))
    logs: Vec<f64>,
    /// small-t d arg series: d arg X/dt = (2 pi/(N^2 t^2)) sum_k args[k] rho^k
    args: Vec<f64>,
    max_log: f64,
    max_arg: f64,
}

fn build_side(exps: &BTreeMap<i64, i64>, c: i64, level: u32, kmax: usize) -> SideTables {
    let n = level as i64;
    let nf = level as f64;
    let mut logl = vec![0.0f64; kmax + 1];
    let mut argl = vec![0.0f64; kmax + 1];
    let mut logs = vec![0.0f64; kmax + 1];
    let mut args = vec![0.0f64; kmax + 1];
    let mut log_linear = 0.0;
    let mut log_pole = 0.0;
    for (&a, &e) in exps {
        let w = e as f64;
        let a0 = a.rem_euclid(n);
        log_linear += -PI * nf * b2_of(a0, level) * w;
        log_pole += -(PI / nf) * b2_of(a0 * c, level) * w;
        let cos_ac: Vec<f64> = (0..n)
            .map(|m| (TWO_PI * ((a0 * c * m).rem_euclid(n)) as f64 / nf).cos())
            .collect();
        let sin_ac: Vec<f64> = (0..n)
            .map(|m| (TWO_PI * ((a0 * c * m).rem_euclid(n)) as f64 / nf).sin())
            .collect();
        let cos_a: Vec<f64> = (0..n)
            .map(|m| (TWO_PI * ((a0 * m).rem_euclid(n)) as f64 / nf).cos())
            .collect();
        let sin_a: Vec<f64> = (0..n)
            .map(|m| (TWO_PI * ((a0 * m).rem_euclid(n)) as f64 / nf).sin())
            .collect();
        // large-t regime: classes n ≡ ±a, phases in (ac)·m
        for (class, sgn) in [(a0, 1.0f64), (n - a0, -1.0f64)] {
            let mut nn = class;
            while nn > 0 && nn as usize <= kmax {
                let mut m = 1i64;
                while (m * nn) as usize <= kmax {
                    let k = (m * nn) as usize;
                    let ph = (m.rem_euclid(n)) as usize;
                    logl[k] += -w * cos_ac[ph] / m as f64;
                    argl[k] += w * sgn * (nn as f64) * sin_ac[ph];
                    m += 1;
                }
                nn += n;
            }
        }
        // small-t regime: classes n ≡ ±ac, phases in a·m
        let ac0 = (a0 * c).rem_euclid(n);
        for (class, sgn) in [(ac0, 1.0f64), ((n - ac0) % n, -1.0f64)] {
            let mut nn = if class == 0 { n } else { class };
            while nn as usize <= kmax {
                let mut m = 1i64;
                while (m * nn) as usize <= kmax {
                    let k = (m * nn) as usize;
                    let ph = (m.rem_euclid(n)) as usize;
                    logs[k] += -w * cos_a[ph] / m as f64;
                    args[k] += w * sgn * (nn as f64) * sin_a[ph];
                    m += 1;
                }
                nn += n;
            }
        }
    }
    let max_abs = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let max_log = max_abs(&logl).max(max_abs(&logs));
    let max_arg = max_abs(&argl).max(max_abs(&args));
    SideTables {
        log_linear,
        logl,
        argl,
        log_pole,
        logs,
        args,
        max_log,
        max_arg,
    }
}

/// Geometric series sum (coefficients from index 1) with a quadratic
/// envelope tail bound.
fn table_sum(coeffs: &[f64], ratio: f64, max_coef: f64, terms: &mut u64) -> (f64, f64) {
    let mut acc = Kahan::default();
    let mut rk = 1.0;
    let mut kstop = coeffs.len() as i32 - 1;
    for (k, &c) in coeffs.iter().enumerate().skip(1) {
        rk *= ratio;
        if c != 0.0 {
            acc.add(c * rk);
        }
        *terms += 1;
        if rk * max_coef.max(1.0) * (k as f64) * (k as f64) < 1e-22 {
            kstop = k as i32;
            break;
        }
    }
    let x = ratio;
    let k1 = kstop as f64 + 1.0;
    let tail = max_coef.max(1.0)
        * x.powi(kstop + 1)
        * (k1 * k1 + 2.0 * k1 / (1.0 - x) + 2.0 / ((1.0 - x) * (1.0 - x)))
        / (1.0 - x);
    (acc.value(), tail)
}

/// The eta(U, V) density kernel along tau = c/N + i t for two formal unit
/// products, with the expansion switch at t* (default 1/N).
pub struct EtaKernel {
    level: u32,
    u: SideTables,
    v: SideTables,
    t_switch: f64,
}

impl EtaKernel {
    pub fn new(
        level: u32,
        u_exps: &BTreeMap<i64, i64>,
        v_exps: &BTreeMap<i64, i64>,
        c: i64,
        tol: f64,
    ) -> Result<EtaKernel> {
        for &a in u_exps.keys() {
            for &b in v_exps.keys() {
                check_pair_admissible(a, b, c, level)?;
            }
        }
        let nf = level as f64;
        let kmax = ((nf * ((1.0 / tol).ln().max(0.0) + 20.0) / TWO_PI).ceil() as usize
            + 2 * level as usize)
            .max(96);
        Ok(EtaKernel {
            level,
            u: build_side(u_exps, c, level, kmax),
            v: build_side(v_exps, c, level, kmax),
            t_switch: 1.0 / nf,
        })
    }

    /// Override the expansion switchover (an implementation artifact;
    /// results must not depend on it).
    pub fn with_switch(mut self, t_switch: f64) -> Self {
        self.t_switch = t_switch;
        self
    }

    /// Density of eta(U, V) with respect to dt at height t, plus a bound
    /// on the series truncation error.
    pub fn eval(&self, t: f64, terms: &mut u64) -> (f64, f64) {
        let nf = self.level as f64;
        if t >= self.t_switch {
            let r = (-TWO_PI * t).exp();
            let (lu, elu) = table_sum(&self.u.logl, r, self.u.max_log, terms);
            let (lv, elv) = table_sum(&self.v.logl, r, self.v.max_log, terms);
            let (au, eau) = table_sum(&self.u.argl, r, self.u.max_arg, terms);
            let (av, eav) = table_sum(&self.v.argl, r, self.v.max_arg, terms);
            let log_u = self.u.log_linear * t + lu;
            let log_v = self.v.log_linear * t + lv;
            let darg_u = TWO_PI * au;
            let darg_v = TWO_PI * av;
            let value = log_u * darg_v - log_v * darg_u;
            let err = log_u.abs() * TWO_PI * eav
                + darg_v.abs() * elu
                + log_v.abs() * TWO_PI * eau
                + darg_u.abs() * elv
                + TWO_PI * (elu * eav + elv * eau);
            (value, err)
        } else {
            let rho = (-TWO_PI / (nf * nf * t)).exp();
            let (lu, elu) = table_sum(&self.u.logs, rho, self.u.max_log, terms);
            let (lv, elv) = table_sum(&self.v.logs, rho, self.v.max_log, terms);
            let (au, eau) = table_sum(&self.u.args, rho, self.u.max_arg, terms);
            let (av, eav) = table_sum(&self.v.args, rho, self.v.max_arg, terms);
            let log_u = self.u.log_pole / t + lu;
            let log_v = self.v.log_pole / t + lv;
            let darg = TWO_PI / (nf * nf * t * t);
            let darg_u = darg * au;
            let darg_v = darg * av;
            let value = log_u * darg_v - log_v * darg_u;
            let err = log_u.abs() * darg * eav
                + darg_v.abs() * elu
                + log_v.abs() * darg * eau
                + darg_u.abs() * elv
                + darg * (elu * eav + elv * eau);
            (value, err)
        }
    }
}

fn single_exponent(a: i64) -> BTreeMap<i64, i64> {
    [(a, 1i64)].into_iter().collect()
}

/// Density of eta(g_a, g_b) along tau = c/N + i t with respect to dt.
pub fn eta_integrand(a: i64, b: i64, c: i64, level: u32, t: f64, tol: f64) -> Result<f64> {
    if t <= 0.0 {
        return Err(Error::InvalidInput("t must be positive".into()));
    }
    let kernel = EtaKernel::new(level, &single_exponent(a), &single_exponent(b), c, tol)?;
    let mut terms = 0u64;
    let (value, err) = kernel.eval(t, &mut terms);
    if err > tol.max(1e-13) {
        return Err(Error::TailBudget {
            requested: tol,
            achieved: err,
        });
    }
    Ok(value)
}

fn integrate_kernel(kernel: &EtaKernel, level: u32, tol: f64) -> Result<NumericResult<f64>> {
    let nf = level as f64;
    let t_max = ((1.0 / tol).ln() + 16.0) / TWO_PI + 1.5;
    let t_min = TWO_PI / (nf * nf * ((1.0 / tol).ln() + 55.0));
    let mut terms = 0u64;
    let out = exp_trapezoid(
        |t| {
            let (v, e) = kernel.eval(t, &mut terms);
            Ok((v, e))
        },
        t_min.ln(),
        t_max.ln(),
        tol / 4.0,
    )?;
    let mut dummy = 0u64;
    let (edge_lo, _) = kernel.eval(t_min, &mut dummy);
    let (edge_hi, _) = kernel.eval(t_max, &mut dummy);
    let window = edge_lo.abs() * t_min + edge_hi.abs() * t_max;
    let err = out.step_err + out.tail_err + window;
    let mut work = out.work;
    work.terms = terms;
    Ok(NumericResult::new(out.value, err, work))
}

/// int over t in (0, infinity) of the eta(g_a, g_b) density along
/// tau = c/N + i t — the path from the cusp c/N up to i·infinity.
pub fn regulator_pair(a: i64, b: i64, c: i64, level: u32, tol: f64) -> Result<NumericResult<f64>> {
    check_pair_admissible(a, b, c, level)?;
    let kernel = EtaKernel::new(level, &single_exponent(a), &single_exponent(b), c, tol)?;
    integrate_kernel(&kernel, level, tol)
}

/// Continuous change of arg X along the path c/N -> i·infinity, for the
/// unit part of X (scalars are constants and drop out of d arg).
///
/// Within each expansion regime the argument is a regime constant plus an
/// exponentially small series, so the total swing equals
/// sigma_small(t*) − sigma_large(t*) evaluated at the switch height; no
/// branch constants enter.
fn delta_arg(exps: &BTreeMap<i64, i64>, c: i64, level: u32, tol: f64) -> f64 {
    let n = level as i64;
    let nf = level as f64;
    let t_star = 1.0 / nf;
    let kmax = ((nf * ((1.0 / tol).ln() + 16.0) / TWO_PI).ceil() as i64).max(96);
    let mut total = 0.0;
    for (&a, &e) in exps {
        let a0 = a.rem_euclid(n);
        let r = (-TWO_PI * t_star).exp();
        let mut sigma_large = Kahan::default();
        for (class, sgn) in [(a0, -1.0f64), (n - a0, 1.0f64)] {
            let mut nn = class;
            while nn > 0 && nn <= kmax {
                let mut m = 1i64;
                while m * nn <= kmax {
                    let ph = TWO_PI * ((a0 * c * m).rem_euclid(n)) as f64 / nf;
                    sigma_large.add(sgn * ph.sin() / m as f64 * r.powi((m * nn) as i32));
                    m += 1;
                }
                nn += n;
            }
        }
        let ac0 = (a0 * c).rem_euclid(n);
        let rho = (-TWO_PI / (nf * nf * t_star)).exp();
        let mut sigma_small = Kahan::default();
        for (class, sgn) in [(ac0, 1.0f64), ((n - ac0) % n, -1.0f64)] {
            let mut nn = if class == 0 { n } else { class };
            while nn <= kmax {
                let mut m = 1i64;
                while m * nn <= kmax {
                    let ph = TWO_PI * ((a0 * m).rem_euclid(n)) as f64 / nf;
                    sigma_small.add(sgn * ph.sin() / m as f64 * rho.powi((m * nn) as i32));
                    m += 1;
                }
                nn += n;
            }
        }
        total += e as f64 * (sigma_small.value() - sigma_large.value());
    }
    total
}

/// Regulator integral of eta(U, V) over a cusp path, by bi-additivity of
/// the form in the unit exponents. Cusp-to-cusp paths are the difference
/// of two cusp-to-infinity integrals. Scalar prefactors contribute only
/// through log|scalar| times the argument swing of the other unit; for
/// unit-modulus scalars that term vanishes.
pub fn regulator_units(
    u: &UnitProduct,
    v: &UnitProduct,
    path: &CuspPath,
    tol: f64,
) -> Result<NumericResult<f64>> {
    if u.level() != v.level() || u.level() != path.level {
        return Err(Error::LevelMismatch {
            left: u.level(),
            right: v.level().min(path.level),
        });
    }
    let level = u.level();
    let mut cusps = vec![(path.from, 1.0f64)];
    if let Some(d) = path.to {
        cusps.push((d, -1.0));
    }
    for &(c, _) in &cusps {
        for &a in u.exponents().keys() {
            for &b in v.exponents().keys() {
                if check_pair_admissible(a, b, c, level).is_err() {
                    return Err(Error::InvalidInput(format!(
                        "inadmissible pair (a={a}, b={b}) at cusp {c}/{level}"
                    )));
                }
            }
        }
    }
    let mut value = Kahan::default();
    let mut err = 0.0;
    let mut work = WorkStats::default();
    let per_piece_tol = tol / (2.0 * cusps.len() as f64);
    for &(c, orient) in &cusps {
        let kernel = EtaKernel::new(level, u.exponents(), v.exponents(), c, per_piece_tol)?;
        let piece = integrate_kernel(&kernel, level, per_piece_tol)?;
        value.add(orient * piece.value);
        err += piece.errbound;
        work.absorb(piece.work);

        if !u.scalar_unit_modulus() {
            let log_su = u.scalar().norm().ln();
            value.add(orient * log_su * delta_arg(v.exponents(), c, level, per_piece_tol));
        }
        if !v.scalar_unit_modulus() {
            let log_sv = v.scalar().norm().ln();
            value.add(-orient * log_sv * delta_arg(u.exponents(), c, level, per_piece_tol));
        }
    }
    Ok(NumericResult::new(value.value(), err, work))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn integrand_vanishes_on_diagonal() {
        let v = eta_integrand(7, 7, 3, 15, 0.4, 1e-10).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn integrand_regime_agreement_at_switch() {
        // large-t and small-t evaluations at t = 1/N (N=15, a=7, b=4, c=3)
        let t = 1.0 / 15.0;
        let base = EtaKernel::new(15, &single_exponent(7), &single_exponent(4), 3, 1e-12).unwrap();
        let mut terms = 0u64;
        let hi = base.clone_with_switch(t * 0.5).eval(t, &mut terms);
        let lo = base.clone_with_switch(t * 2.0).eval(t, &mut terms);
        assert!(
            (hi.0 - lo.0).abs() < 1e-8,
            "regimes disagree: {} vs {} (tails {} {})",
            hi.0,
            lo.0,
            hi.1,
            lo.1
        );
    }

    impl EtaKernel {
        fn clone_with_switch(&self, t: f64) -> EtaKernel {
            EtaKernel {
                level: self.level,
                u: self.u.clone(),
                v: self.v.clone(),
                t_switch: t,
            }
        }
    }

    #[test]
    fn integrand_decays_on_both_ends() {
        for &t in &[3.2f64, 4.0] {
            let v = eta_integrand(7, 4, 3, 15, t, 1e-13).unwrap();
            assert!(v.abs() < 1e-12, "t={t}: {v}");
        }
        for &t in &[0.0012f64, 0.0008] {
            let v = eta_integrand(7, 4, 3, 15, t, 1e-13).unwrap();
            assert!(v.abs() < 1e-12, "t={t}: {v}");
        }
    }

    #[test]
    fn integrand_checks_admissibility() {
        assert!(matches!(
            eta_integrand(5, 4, 3, 15, 0.5, 1e-9),
            Err(Error::Inadmissible { .. })
        ));
    }

    #[test]
    fn pair_antisymmetry() {
        let ab = regulator_pair(7, 4, 3, 15, 1e-8).unwrap();
        let ba = regulator_pair(4, 7, 3, 15, 1e-8).unwrap();
        assert!(
            (ab.value + ba.value).abs() <= 2.0 * (ab.errbound + ba.errbound) + 1e-12,
            "{} vs {}",
            ab.value,
            ba.value
        );
        let aa = regulator_pair(7, 7, 3, 15, 1e-8).unwrap();
        assert_eq!(aa.value, 0.0);
    }

    #[test]
    fn pair_bi_additivity() {
        // eta(g_7 g_2, g_4) integral = eta(g_7, g_4) + eta(g_2, g_4) integrals
        let level = 15u32;
        let tol = 1e-8;
        let u2: BTreeMap<i64, i64> = [(7i64, 1i64), (2, 1)].into_iter().collect();
        let kernel = EtaKernel::new(level, &u2, &single_exponent(4), 3, tol).unwrap();
        let combined = integrate_kernel(&kernel, level, tol).unwrap();
        let p1 = regulator_pair(7, 4, 3, level, tol).unwrap();
        let p2 = regulator_pair(2, 4, 3, level, tol).unwrap();
        let diff = (combined.value - p1.value - p2.value).abs();
        assert!(
            diff <= combined.errbound + p1.errbound + p2.errbound + 1e-12,
            "diff {diff}"
        );
    }

    #[test]
    fn pair_switchover_independence() {
        // t* = 1/N vs t* = 2/N: the split is an implementation artifact
        let level = 15u32;
        let tol = 1e-9;
        let k1 = EtaKernel::new(level, &single_exponent(7), &single_exponent(4), 3, tol).unwrap();
        let k2 = EtaKernel::new(level, &single_exponent(7), &single_exponent(4), 3, tol)
            .unwrap()
            .with_switch(2.0 / level as f64);
        let r1 = integrate_kernel(&k1, level, tol).unwrap();
        let r2 = integrate_kernel(&k2, level, tol).unwrap();
        assert!(
            (r1.value - r2.value).abs() <= r1.errbound + r2.errbound + 1e-12,
            "{} vs {}",
            r1.value,
            r2.value
        );
    }

    #[test]
    fn units_diagonal_is_zero() {
        let u = UnitProduct::new(15, &[(7, 1), (2, -1)], Complex64::new(1.0, 0.0)).unwrap();
        let path = CuspPath {
            level: 15,
            from: -3,
            to: Some(3),
        };
        let r = regulator_units(&u, &u, &path, 1e-8).unwrap();
        assert!(r.value.abs() <= r.errbound + 1e-12);
    }

    #[test]
    fn units_scalar_modulus_one_is_inert() {
        let u = UnitProduct::new(15, &[(7, 1), (2, -1)], Complex64::new(1.0, 0.0)).unwrap();
        let v1 = UnitProduct::new(15, &[(4, 1), (1, -1)], Complex64::new(1.0, 0.0)).unwrap();
        let v2 = UnitProduct::new(15, &[(4, 1), (1, -1)], Complex64::new(0.0, -1.0)).unwrap();
        let path = CuspPath {
            level: 15,
            from: -3,
            to: Some(3),
        };
        let r1 = regulator_units(&u, &v1, &path, 1e-8).unwrap();
        let r2 = regulator_units(&u, &v2, &path, 1e-8).unwrap();
        assert!((r1.value - r2.value).abs() <= r1.errbound + r2.errbound + 1e-13);
    }

    #[test]
    fn units_report_offending_cusp() {
        // a = 5 at N = 15 with c = 3: 5*3 ≡ 0
        let u = UnitProduct::new(15, &[(5, 1)], Complex64::new(1.0, 0.0)).unwrap();
        let v = UnitProduct::new(15, &[(4, 1)], Complex64::new(1.0, 0.0)).unwrap();
        let path = CuspPath {
            level: 15,
            from: 3,
            to: None,
        };
        match regulator_units(&u, &v, &path, 1e-8) {
            Err(Error::InvalidInput(msg)) => assert!(msg.contains("cusp 3")),
            other => panic!("expected inadmissible-pair report, got {other:?}"),
        }
    }
}
