//! Monic integer polynomials, exact Sturm sequences and certified real roots.

use std::fmt;

use num::{BigInt, BigRational, Signed, Zero};

use crate::error::{Error, Result};

/// Monic integer polynomial, coefficients stored low degree first.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct IntPolynomial {
    coeffs: Vec<i64>,
}

impl IntPolynomial {
    /// Builds a monic polynomial of degree at least 2.
    pub fn new(coeffs: Vec<i64>) -> Result<Self> {
        if coeffs.len() < 3 {
            return Err(Error::Argument(format!(
                "polynomial degree must be >= 2, got coefficient list of length {}",
                coeffs.len()
            )));
        }
        if *coeffs.last().unwrap() != 1 {
            return Err(Error::Argument("polynomial must be monic".into()));
        }
        Ok(Self { coeffs })
    }

    pub fn coeffs(&self) -> &[i64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Constant term is +1 or -1.
    pub fn is_unimodular(&self) -> bool {
        self.coeffs[0].abs() == 1
    }

    /// Exact evaluation at an integer.
    pub fn eval_int(&self, x: i64) -> i128 {
        self.coeffs
            .iter()
            .rev()
            .fold(0i128, |acc, &c| acc * x as i128 + c as i128)
    }

    pub fn eval_f64(&self, x: f64) -> f64 {
        self.coeffs
            .iter()
            .rev()
            .fold(0.0, |acc, &c| acc * x + c as f64)
    }

    fn eval_with_derivative(&self, x: f64) -> (f64, f64) {
        let mut p = 0.0;
        let mut dp = 0.0;
        for &c in self.coeffs.iter().rev() {
            dp = dp * x + p;
            p = p * x + c as f64;
        }
        (p, dp)
    }

    /// Cauchy bound on the modulus of every root.
    pub fn root_bound(&self) -> f64 {
        1.0 + self.coeffs[..self.degree()]
            .iter()
            .map(|c| c.abs() as f64)
            .fold(0.0, f64::max)
    }

    pub fn sturm(&self) -> SturmChain {
        SturmChain::new(&self.coeffs)
    }
}

impl fmt::Display for IntPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (k, &c) in self.coeffs.iter().enumerate().rev() {
            if c == 0 {
                continue;
            }
            let sign = if c < 0 {
                "-"
            } else if first {
                ""
            } else {
                "+"
            };
            let mag = c.unsigned_abs();
            let body = match (k, mag) {
                (0, m) => format!("{m}"),
                (1, 1) => "x".to_string(),
                (1, m) => format!("{m}x"),
                (k, 1) => format!("x^{k}"),
                (k, m) => format!("{m}x^{k}"),
            };
            write!(f, "{sign}{body}")?;
            first = false;
        }
        Ok(())
    }
}

type RatPoly = Vec<BigRational>;

fn trim(p: &mut RatPoly) {
    while p.len() > 1 && p.last().is_some_and(|c| c.is_zero()) {
        p.pop();
    }
}

fn derivative(p: &RatPoly) -> RatPoly {
    let mut out: RatPoly = p
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, c)| c * BigRational::from_integer(BigInt::from(k)))
        .collect();
    if out.is_empty() {
        out.push(BigRational::zero());
    }
    out
}

fn remainder(num: &RatPoly, den: &RatPoly) -> RatPoly {
    let mut r = num.clone();
    let dl = den.len();
    let lead = den.last().unwrap().clone();
    while r.len() >= dl && !(r.len() == 1 && r[0].is_zero()) {
        let shift = r.len() - dl;
        let factor = r.last().unwrap() / &lead;
        for (i, c) in den.iter().enumerate() {
            r[shift + i] -= &factor * c;
        }
        r.pop();
        trim(&mut r);
        if r.len() < dl {
            break;
        }
    }
    if r.is_empty() {
        r.push(BigRational::zero());
    }
    r
}

fn is_zero_poly(p: &RatPoly) -> bool {
    p.iter().all(|c| c.is_zero())
}

/// Sturm sequence of a polynomial, computed over the rationals.
#[derive(Clone, Debug)]
pub struct SturmChain {
    chain: Vec<RatPoly>,
}

impl SturmChain {
    fn new(coeffs: &[i64]) -> Self {
        let p0: RatPoly = coeffs
            .iter()
            .map(|&c| BigRational::from_integer(BigInt::from(c)))
            .collect();
        let p1 = derivative(&p0);
        let mut chain = vec![p0, p1];
        loop {
            let n = chain.len();
            if is_zero_poly(&chain[n - 1]) || chain[n - 1].len() == 1 {
                break;
            }
            let r = remainder(&chain[n - 2], &chain[n - 1]);
            if is_zero_poly(&r) {
                break;
            }
            chain.push(r.into_iter().map(|c| -c).collect());
        }
        if is_zero_poly(chain.last().unwrap()) {
            chain.pop();
        }
        Self { chain }
    }

    /// Degree of the last element: positive iff the polynomial has a repeated factor.
    pub fn gcd_degree(&self) -> usize {
        self.chain.last().map(|p| p.len() - 1).unwrap_or(0)
    }

    fn changes(signs: impl Iterator<Item = i8>) -> usize {
        let mut last = 0i8;
        let mut count = 0;
        for s in signs.filter(|&s| s != 0) {
            if last != 0 && s != last {
                count += 1;
            }
            last = s;
        }
        count
    }

    fn sign_changes_at(&self, x: &BigRational) -> usize {
        Self::changes(self.chain.iter().map(|p| {
            let v = p
                .iter()
                .rev()
                .fold(BigRational::zero(), |acc, c| acc * x + c);
            if v.is_positive() {
                1
            } else if v.is_negative() {
                -1
            } else {
                0
            }
        }))
    }

    fn sign_changes_at_infinity(&self, positive: bool) -> usize {
        Self::changes(self.chain.iter().map(|p| {
            let lead = p.last().unwrap();
            let mut s: i8 = if lead.is_positive() { 1 } else { -1 };
            if !positive && (p.len() - 1) % 2 == 1 {
                s = -s;
            }
            s
        }))
    }

    /// Number of distinct real roots in the half-open interval (a, b].
    pub fn count_in(&self, a: &BigRational, b: &BigRational) -> usize {
        self.sign_changes_at(a)
            .saturating_sub(self.sign_changes_at(b))
    }

    /// Number of distinct real roots in (a, +inf).
    pub fn count_above(&self, a: &BigRational) -> usize {
        self.sign_changes_at(a)
            .saturating_sub(self.sign_changes_at_infinity(true))
    }

    /// Number of distinct real roots.
    pub fn count_real(&self) -> usize {
        self.sign_changes_at_infinity(false)
            .saturating_sub(self.sign_changes_at_infinity(true))
    }

    pub fn count_in_f64(&self, a: f64, b: f64) -> usize {
        self.count_in(&rat(a), &rat(b))
    }
}

/// Exact rational value of a finite double.
pub fn rat(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite value")
}

fn exact_sign(p: &IntPolynomial, x: f64) -> i8 {
    let xr = rat(x);
    let v = p
        .coeffs()
        .iter()
        .rev()
        .fold(BigRational::zero(), |acc, &c| {
            acc * &xr + BigRational::from_integer(BigInt::from(c))
        });
    if v.is_positive() {
        1
    } else if v.is_negative() {
        -1
    } else {
        0
    }
}

const ISOLATION_BUDGET: usize = 200;
const POLISH_TOL: f64 = 1e-12;

/// All real roots of `p`, ascending, each within `tol` of a true root.
///
/// Roots are counted with an exact Sturm chain, isolated by bisection with
/// exact sign evaluation, then polished by safeguarded Newton steps.
pub fn real_roots(p: &IntPolynomial, tol: f64) -> Result<Vec<f64>> {
    if !(tol > 0.0 && tol <= 1e-6) {
        return Err(Error::Argument(format!(
            "root tolerance must lie in (0, 1e-6], got {tol}"
        )));
    }
    let chain = p.sturm();
    let total = chain.count_real();
    if total == 0 {
        return Ok(Vec::new());
    }
    let bound = p.root_bound();
    let mut isolated = Vec::with_capacity(total);
    // (lo, hi] intervals with their root counts
    let mut stack = vec![(-bound, bound, total, 0usize)];
    while let Some((lo, hi, count, depth)) = stack.pop() {
        if count == 0 {
            continue;
        }
        if count == 1 {
            isolated.push((lo, hi));
            continue;
        }
        if depth > ISOLATION_BUDGET {
            return Err(Error::Numeric(format!(
                "root isolation did not separate {count} roots in ({lo}, {hi}]"
            )));
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return Err(Error::Numeric(format!(
                "roots closer than double resolution near {mid}"
            )));
        }
        let left = chain.count_in_f64(lo, mid);
        stack.push((mid, hi, count - left, depth + 1));
        stack.push((lo, mid, left, depth + 1));
    }
    let mut roots = isolated
        .into_iter()
        .map(|(lo, hi)| refine_root(p, lo, hi, tol))
        .collect::<Result<Vec<_>>>()?;
    roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(roots)
}

fn refine_root(p: &IntPolynomial, mut lo: f64, mut hi: f64, tol: f64) -> Result<f64> {
    // the single root lies in (lo, hi]
    if exact_sign(p, hi) == 0 {
        return Ok(hi);
    }
    let s_hi = exact_sign(p, hi);
    let target = tol.min(POLISH_TOL.max(f64::EPSILON * hi.abs().max(lo.abs())));
    let mut steps = 0;
    while hi - lo > target {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let s = exact_sign(p, mid);
        if s == 0 {
            return Ok(mid);
        }
        if s == s_hi {
            hi = mid;
        } else {
            lo = mid;
        }
        steps += 1;
        if steps > ISOLATION_BUDGET {
            return Err(Error::Numeric(format!(
                "bisection budget exhausted on ({lo}, {hi}]"
            )));
        }
    }
    // Newton polish, kept inside the bracket
    let mut x = 0.5 * (lo + hi);
    for _ in 0..8 {
        let (v, dv) = p.eval_with_derivative(x);
        if dv == 0.0 {
            break;
        }
        let next = x - v / dv;
        if !(next >= lo && next <= hi) {
            break;
        }
        if (next - x).abs() <= f64::EPSILON * x.abs() {
            x = next;
            break;
        }
        x = next;
    }
    if hi - lo > tol {
        return Err(Error::Numeric(format!(
            "root bracket ({lo}, {hi}] wider than tolerance {tol}"
        )));
    }
    Ok(x)
}

/// Leverrier–Faddeev characteristic polynomial (monic, low degree first) in exact integers.
pub fn characteristic_coeffs(entries: &[i64], d: usize) -> Result<Vec<i64>> {
    let a: Vec<i128> = entries.iter().map(|&v| v as i128).collect();
    let mut coeffs = vec![0i128; d + 1];
    coeffs[d] = 1;
    let mut m = vec![0i128; d * d];
    let overflow = || Error::Numeric("characteristic polynomial overflowed i128".into());
    for k in 1..=d {
        // M_k = A M_{k-1} + c_{d-k+1} I
        let mut next = vec![0i128; d * d];
        for i in 0..d {
            for j in 0..d {
                let mut acc = 0i128;
                for l in 0..d {
                    acc = acc
                        .checked_add(
                            a[i * d + l]
                                .checked_mul(m[l * d + j])
                                .ok_or_else(overflow)?,
                        )
                        .ok_or_else(overflow)?;
                }
                next[i * d + j] = acc;
            }
            next[i * d + i] += coeffs[d - k + 1];
        }
        m = next;
        let mut tr = 0i128;
        for i in 0..d {
            for l in 0..d {
                tr = tr
                    .checked_add(
                        a[i * d + l]
                            .checked_mul(m[l * d + i])
                            .ok_or_else(overflow)?,
                    )
                    .ok_or_else(overflow)?;
            }
        }
        if tr % k as i128 != 0 {
            return Err(Error::Numeric("non-integral Leverrier coefficient".into()));
        }
        coeffs[d - k] = -tr / k as i128;
    }
    coeffs
        .into_iter()
        .map(|c| {
            i64::try_from(c)
                .map_err(|_| Error::Numeric("characteristic coefficient exceeds i64".into()))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poly(c: &[i64]) -> IntPolynomial {
        IntPolynomial::new(c.to_vec()).unwrap()
    }

    // Independent oracle: plain f64 bisection on sign changes over a fine scan.
    fn scan_roots(p: &IntPolynomial, lo: f64, hi: f64) -> Vec<f64> {
        let steps = 200_000;
        let h = (hi - lo) / steps as f64;
        let mut out = Vec::new();
        for i in 0..steps {
            let (mut a, mut b) = (lo + i as f64 * h, lo + (i + 1) as f64 * h);
            let (fa, fb) = (p.eval_f64(a), p.eval_f64(b));
            if fa == 0.0 {
                out.push(a);
                continue;
            }
            if fa * fb < 0.0 {
                for _ in 0..100 {
                    let m = 0.5 * (a + b);
                    if p.eval_f64(m) * p.eval_f64(a) <= 0.0 {
                        b = m;
                    } else {
                        a = m;
                    }
                }
                out.push(0.5 * (a + b));
            }
        }
        out
    }

    #[test]
    fn cubic_roots_match_scan_and_squares_identity() {
        let p = poly(&[-1, 6, -5, 1]);
        let roots = real_roots(&p, 1e-10).unwrap();
        let oracle = scan_roots(&p, -1.0, 5.0);
        assert_eq!(roots.len(), 3);
        for (r, o) in roots.iter().zip(&oracle) {
            assert!((r - o).abs() < 1e-10);
        }
        for (r, e) in roots.iter().zip([0.1980623, 1.5549581, 3.2469796]) {
            assert!((r - e).abs() < 1e-7, "{r} vs {e}");
        }
        // roots are squares of the roots of x^3 - x^2 - 2x + 1
        let q = poly(&[1, -2, -1, 1]);
        let mut sq: Vec<f64> = real_roots(&q, 1e-10)
            .unwrap()
            .iter()
            .map(|r| r * r)
            .collect();
        sq.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (r, s) in roots.iter().zip(&sq) {
            assert!((r - s).abs() < 1e-10);
        }
    }

    #[test]
    fn quadratic_closed_form() {
        let roots = real_roots(&poly(&[1, -3, 1]), 1e-9).unwrap();
        let s5 = 5f64.sqrt();
        assert!((roots[0] - (3.0 - s5) / 2.0).abs() < 1e-12);
        assert!((roots[1] - (3.0 + s5) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn no_real_roots() {
        assert!(real_roots(&poly(&[1, 0, 1]), 1e-9).unwrap().is_empty());
    }

    #[test]
    fn tolerance_is_validated() {
        assert!(matches!(
            real_roots(&poly(&[1, -3, 1]), 1e-3),
            Err(Error::Argument(_))
        ));
    }

    #[test]
    fn sturm_detects_repeated_roots() {
        // (x-1)^2 (x-2)
        let p = poly(&[-2, 5, -4, 1]);
        let chain = p.sturm();
        assert_eq!(chain.count_real(), 2);
        assert!(chain.gcd_degree() > 0);
        assert_eq!(poly(&[-1, 6, -5, 1]).sturm().gcd_degree(), 0);
    }

    #[test]
    fn leverrier_matches_companion() {
        let c = characteristic_coeffs(&[0, 0, 1, 1, -6, 5, 5, -29, 19], 3).unwrap();
        assert_eq!(c, vec![-1, 26, -13, 1]);
    }

    #[test]
    fn display() {
        assert_eq!(poly(&[-1, 6, -5, 1]).to_string(), "x^3-5x^2+6x-1");
    }
}
