//! Admissible integer matrices: polynomial search, companion matrices, exact
//! powers and the eigen-splitting `E^s ⊕ E^c ⊕ E^u`.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use num::{BigInt, BigRational};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::poly::{characteristic_coeffs, real_roots, IntPolynomial};

/// Square integer matrix with determinant ±1, stored row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ToralMatrix {
    d: usize,
    entries: Vec<i64>,
}

impl ToralMatrix {
    pub fn new(rows: &[Vec<i64>]) -> Result<Self> {
        let d = rows.len();
        if d < 2 || rows.iter().any(|r| r.len() != d) {
            return Err(Error::Argument(format!(
                "matrix must be square with dimension >= 2, got {d} rows"
            )));
        }
        let m = Self {
            d,
            entries: rows.concat(),
        };
        let det = m.determinant();
        if det.abs() != 1 {
            return Err(Error::Argument(format!(
                "matrix is not unimodular (det = {det})"
            )));
        }
        Ok(m)
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn entries(&self) -> &[i64] {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> i64 {
        self.entries[i * self.d + j]
    }

    pub fn rows(&self) -> Vec<Vec<i64>> {
        self.entries.chunks(self.d).map(|r| r.to_vec()).collect()
    }

    pub fn trace(&self) -> i64 {
        (0..self.d).map(|i| self.get(i, i)).sum()
    }

    /// Exact determinant (fraction-free Bareiss elimination).
    pub fn determinant(&self) -> i128 {
        determinant_i128(&self.entries, self.d)
    }

    pub fn characteristic_polynomial(&self) -> Result<IntPolynomial> {
        IntPolynomial::new(characteristic_coeffs(&self.entries, self.d)?)
    }

    /// Exact integer inverse via the adjugate.
    pub fn inverse(&self) -> ToralMatrix {
        let d = self.d;
        let det = self.determinant();
        let mut inv = vec![0i64; d * d];
        for i in 0..d {
            for j in 0..d {
                let minor: Vec<i64> = (0..d)
                    .filter(|&r| r != j)
                    .flat_map(|r| (0..d).filter(|&c| c != i).map(move |c| (r, c)))
                    .map(|(r, c)| self.get(r, c))
                    .collect();
                let cof = determinant_i128(&minor, d - 1);
                let sign = if (i + j) % 2 == 0 { 1 } else { -1 };
                inv[i * d + j] = (sign * cof * det) as i64;
            }
        }
        ToralMatrix { d, entries: inv }
    }

    pub fn to_dmatrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_iterator(self.d, self.d, self.entries.iter().map(|&v| v as f64))
    }

    /// Operator 2-norm of the real matrix.
    pub fn norm2(&self) -> f64 {
        self.to_dmatrix().singular_values().max()
    }

    fn checked_mul(&self, other: &ToralMatrix) -> Result<ToralMatrix> {
        let d = self.d;
        let mut out = vec![0i64; d * d];
        for i in 0..d {
            for j in 0..d {
                let mut acc: i64 = 0;
                for l in 0..d {
                    acc = self
                        .get(i, l)
                        .checked_mul(other.get(l, j))
                        .and_then(|p| acc.checked_add(p))
                        .ok_or_else(|| {
                            Error::Numeric(format!("integer overflow in matrix entry ({i}, {j})"))
                        })?;
                }
                out[i * d + j] = acc;
            }
        }
        Ok(ToralMatrix { d, entries: out })
    }
}

impl fmt::Display for ToralMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<String> = self
            .rows()
            .iter()
            .map(|r| {
                let v: Vec<String> = r.iter().map(|x| x.to_string()).collect();
                format!("[{}]", v.join(","))
            })
            .collect();
        write!(f, "[{}]", rows.join(","))
    }
}

pub(crate) fn determinant_i128(entries: &[i64], d: usize) -> i128 {
    if d == 0 {
        return 1;
    }
    let mut m: Vec<i128> = entries.iter().map(|&v| v as i128).collect();
    let mut sign = 1i128;
    let mut prev = 1i128;
    for k in 0..d - 1 {
        if m[k * d + k] == 0 {
            match (k + 1..d).find(|&r| m[r * d + k] != 0) {
                Some(r) => {
                    for c in 0..d {
                        m.swap(k * d + c, r * d + c);
                    }
                    sign = -sign;
                }
                None => return 0,
            }
        }
        for i in k + 1..d {
            for j in k + 1..d {
                m[i * d + j] = (m[i * d + j] * m[k * d + k] - m[i * d + k] * m[k * d + j]) / prev;
            }
        }
        prev = m[k * d + k];
    }
    sign * m[(d - 1) * d + (d - 1)]
}

/// Companion matrix: ones on the superdiagonal, last row `[-c_0, ..., -c_{d-1}]`.
pub fn companion_matrix(p: &IntPolynomial) -> Result<ToralMatrix> {
    if !p.is_unimodular() {
        return Err(Error::Argument(format!(
            "constant term of {p} is {}, expected +1 or -1",
            p.coeffs()[0]
        )));
    }
    let d = p.degree();
    let mut entries = vec![0i64; d * d];
    for i in 0..d - 1 {
        entries[i * d + i + 1] = 1;
    }
    for j in 0..d {
        entries[(d - 1) * d + j] = -p.coeffs()[j];
    }
    Ok(ToralMatrix { d, entries })
}

pub const MAX_POWER: u32 = 16;

/// Exact `A^k` with overflow checking.
pub fn matrix_power(a: &ToralMatrix, k: u32) -> Result<ToralMatrix> {
    if k == 0 || k > MAX_POWER {
        return Err(Error::Argument(format!(
            "power must lie in 1..={MAX_POWER}, got {k}"
        )));
    }
    let mut result = a.clone();
    for _ in 1..k {
        result = result.checked_mul(a)?;
    }
    Ok(result)
}

pub const MAX_SEARCH_DEGREE: usize = 6;
pub const MAX_SEARCH_BOUND: i64 = 50;

/// Every admissible characteristic polynomial of degree `d` with coefficients
/// bounded by `coeff_bound`, sorted lexicographically by coefficient list.
///
/// Admissible: monic, constant term ±1, all roots real, positive, simple and
/// irrational, exactly one root in (0, 1), no root equal to 1.
pub fn search_admissible_polynomials(d: usize, coeff_bound: i64) -> Result<Vec<IntPolynomial>> {
    if !(2..=MAX_SEARCH_DEGREE).contains(&d) {
        return Err(Error::Argument(format!(
            "search degree must lie in 2..={MAX_SEARCH_DEGREE}, got {d}"
        )));
    }
    if !(1..=MAX_SEARCH_BOUND).contains(&coeff_bound) {
        return Err(Error::Argument(format!(
            "coefficient bound must lie in 1..={MAX_SEARCH_BOUND}, got {coeff_bound}"
        )));
    }
    // All roots positive forces alternating signs: c_k has sign (-1)^(d-k)
    // and c_0 = (-1)^d, so only magnitudes of c_1..c_{d-1} are enumerated.
    let free = d - 1;
    let total = (coeff_bound as u64).pow(free as u32);
    let sign = |k: usize| if (d - k) % 2 == 0 { 1i64 } else { -1 };
    let mut found: Vec<IntPolynomial> = (0..total)
        .into_par_iter()
        .filter_map(|mut idx| {
            let mut coeffs = vec![0i64; d + 1];
            coeffs[0] = sign(0);
            coeffs[d] = 1;
            for (k, c) in coeffs.iter_mut().enumerate().take(d).skip(1) {
                *c = sign(k) * (1 + (idx % coeff_bound as u64) as i64);
                idx /= coeff_bound as u64;
            }
            passes_cheap_filters(&coeffs, d).then_some(coeffs)
        })
        .filter_map(|coeffs| {
            let p = IntPolynomial::new(coeffs).ok()?;
            is_admissible(&p).then_some(p)
        })
        .collect();
    found.sort();
    Ok(found)
}

fn binomial(n: usize, k: usize) -> i128 {
    (0..k).fold(1i128, |acc, i| acc * (n - i) as i128 / (i + 1) as i128)
}

/// Necessary conditions checked in integers before the exact Sturm test.
fn passes_cheap_filters(coeffs: &[i64], d: usize) -> bool {
    // p(1) = prod(1 - r_i) has sign (-1)^(d-1) with one root below 1
    let p1: i128 = coeffs.iter().map(|&c| c as i128).sum();
    let want = if (d - 1) % 2 == 0 { 1 } else { -1 };
    if p1 == 0 || p1.signum() != want {
        return false;
    }
    // Newton's inequalities on the elementary symmetric functions e_k = |c_{d-k}|
    let e = |k: usize| coeffs[d - k].abs() as i128;
    (1..d).all(|k| {
        e(k) * e(k) * binomial(d, k - 1) * binomial(d, k + 1)
            > e(k - 1) * e(k + 1) * binomial(d, k) * binomial(d, k)
    })
}

/// Exact admissibility test via Sturm counts.
pub fn is_admissible(p: &IntPolynomial) -> bool {
    admissibility_violation(p).is_none()
}

fn admissibility_violation(p: &IntPolynomial) -> Option<String> {
    let d = p.degree();
    if !p.is_unimodular() {
        return Some("constant term is not +1 or -1".into());
    }
    // Monic integer polynomial with unit constant term: the only possible
    // rational roots are +1 and -1.
    if p.eval_int(1) == 0 || p.eval_int(-1) == 0 {
        return Some("eigenvalue of modulus one (rational root ±1)".into());
    }
    let chain = p.sturm();
    if chain.gcd_degree() > 0 {
        return Some("repeated eigenvalue".into());
    }
    if chain.count_real() < d {
        return Some("complex eigenvalue".into());
    }
    let zero = BigRational::from_integer(BigInt::from(0));
    if chain.count_above(&zero) < d {
        return Some("negative eigenvalue".into());
    }
    let one = BigRational::from_integer(BigInt::from(1));
    let inside = chain.count_in(&zero, &one);
    if inside != 1 {
        return Some(format!(
            "{inside} eigenvalues inside the unit circle, expected exactly one"
        ));
    }
    None
}

const MAX_CONDITION: f64 = 1e6;
const SPECTRAL_TOL: f64 = 1e-9;
const PROJECTION_TOL: f64 = 1e-10;

/// Eigen-splitting of an admissible matrix.
///
/// Index 0 is the stable eigenvalue, index 1 the center one, the rest are
/// strongly unstable. Eigenvectors are unit columns of `v`.
#[derive(Clone, Debug)]
pub struct SpectralData {
    eigenvalues: Vec<f64>,
    v: DMatrix<f64>,
    v_inv: DMatrix<f64>,
    projections: Vec<DMatrix<f64>>,
    projection_norms: Vec<f64>,
    entropy_exact: f64,
    condition: f64,
}

impl SpectralData {
    /// Builds spectral data from eigenvalues and (not necessarily unit)
    /// eigenvectors, validating every invariant.
    pub fn from_eigen(mut pairs: Vec<(f64, Vec<f64>)>) -> Result<Self> {
        let d = pairs.len();
        if d < 2 || pairs.iter().any(|(_, v)| v.len() != d) {
            return Err(Error::Argument(
                "eigen pairs must form a square system".into(),
            ));
        }
        pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let eigenvalues: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        if eigenvalues.iter().any(|&l| !(l > 0.0)) {
            return Err(Error::Admissibility("negative eigenvalue".into()));
        }
        if eigenvalues.windows(2).any(|w| w[1] - w[0] < SPECTRAL_TOL) {
            return Err(Error::Admissibility("repeated eigenvalue".into()));
        }
        if eigenvalues.iter().any(|&l| (l - 1.0).abs() < SPECTRAL_TOL) {
            return Err(Error::Admissibility("eigenvalue of modulus one".into()));
        }
        let inside = eigenvalues.iter().filter(|&&l| l < 1.0).count();
        if inside != 1 {
            return Err(Error::Admissibility(format!(
                "{inside} eigenvalues inside the unit circle, expected exactly one"
            )));
        }
        let product: f64 = eigenvalues.iter().product();
        if (product - 1.0).abs() > SPECTRAL_TOL {
            return Err(Error::Admissibility(format!(
                "eigenvalue product {product} is not 1"
            )));
        }
        let mut v = DMatrix::zeros(d, d);
        for (j, (_, vec)) in pairs.iter().enumerate() {
            let norm = vec.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm == 0.0 {
                return Err(Error::Argument("zero eigenvector".into()));
            }
            for i in 0..d {
                v[(i, j)] = vec[i] / norm;
            }
        }
        let sv = v.singular_values();
        let condition = sv.max() / sv.min();
        if !(condition < MAX_CONDITION) {
            return Err(Error::Numeric(format!(
                "eigenvector matrix condition number {condition:e} exceeds {MAX_CONDITION:e}"
            )));
        }
        let v_inv = v
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Numeric("eigenvector matrix is singular".into()))?;
        let projections: Vec<DMatrix<f64>> = (0..d).map(|i| v.column(i) * v_inv.row(i)).collect();
        let sum: DMatrix<f64> = projections.iter().fold(DMatrix::zeros(d, d), |a, p| a + p);
        if (sum - DMatrix::<f64>::identity(d, d)).amax() > PROJECTION_TOL {
            return Err(Error::Numeric(
                "projections do not resolve the identity".into(),
            ));
        }
        let projection_norms = projections
            .iter()
            .map(|p| p.singular_values().max())
            .collect();
        let entropy_exact = eigenvalues
            .iter()
            .filter(|&&l| l > 1.0)
            .map(|l| l.ln())
            .sum();
        Ok(Self {
            eigenvalues,
            v,
            v_inv,
            projections,
            projection_norms,
            entropy_exact,
            condition,
        })
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn lambda_s(&self) -> f64 {
        self.eigenvalues[STABLE]
    }

    pub fn lambda_c(&self) -> f64 {
        self.eigenvalues[CENTER]
    }

    /// Strongly unstable eigenvalues (empty in dimension two).
    pub fn lambda_u(&self) -> &[f64] {
        &self.eigenvalues[CENTER + 1..]
    }

    pub fn eigenvector(&self, i: usize) -> Vec<f64> {
        self.v.column(i).iter().copied().collect()
    }

    pub fn center_direction(&self) -> Vec<f64> {
        self.eigenvector(CENTER)
    }

    /// Eigenvector matrix (unit columns).
    pub fn eigenbasis(&self) -> &DMatrix<f64> {
        &self.v
    }

    pub fn eigenbasis_inverse(&self) -> &DMatrix<f64> {
        &self.v_inv
    }

    pub fn projection(&self, i: usize) -> &DMatrix<f64> {
        &self.projections[i]
    }

    pub fn projection_norms(&self) -> &[f64] {
        &self.projection_norms
    }

    pub fn entropy_exact(&self) -> f64 {
        self.entropy_exact
    }

    pub fn condition_number(&self) -> f64 {
        self.condition
    }

    /// Coordinates of `u` in the eigenbasis.
    pub fn eigen_coords(&self, u: &[f64]) -> Vec<f64> {
        (&self.v_inv * DVector::from_column_slice(u))
            .iter()
            .copied()
            .collect()
    }
}

pub const STABLE: usize = 0;
pub const CENTER: usize = 1;

/// Eigendata of an admissible unimodular matrix.
pub fn spectral_data(a: &ToralMatrix, tol: f64) -> Result<SpectralData> {
    let p = a.characteristic_polynomial()?;
    if let Some(why) = admissibility_violation(&p) {
        return Err(Error::Admissibility(why));
    }
    let roots = real_roots(&p, tol)?;
    let m = a.to_dmatrix();
    let d = a.dim();
    let pairs = roots
        .iter()
        .map(|&lambda| {
            let shifted = &m - DMatrix::<f64>::identity(d, d) * lambda;
            let svd = shifted.svd(false, true);
            let v_t = svd.v_t.expect("right singular vectors requested");
            let (idx, _) = svd
                .singular_values
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                .unwrap();
            let mut vec: Vec<f64> = v_t.row(idx).iter().copied().collect();
            // sign convention: the largest component is positive
            let big = vec
                .iter()
                .copied()
                .max_by(|a, b| a.abs().partial_cmp(&b.abs()).unwrap())
                .unwrap();
            if big < 0.0 {
                vec.iter_mut().for_each(|x| *x = -*x);
            }
            (lambda, vec)
        })
        .collect();
    let s = SpectralData::from_eigen(pairs)?;
    // sanity: residuals of the eigenpairs
    for i in 0..d {
        let v = s.v.column(i);
        let r = (&m * v - v * s.eigenvalues[i]).norm();
        if r > SPECTRAL_TOL {
            return Err(Error::Numeric(format!(
                "eigenpair {i} residual {r:e} exceeds {SPECTRAL_TOL:e}"
            )));
        }
    }
    Ok(s)
}

/// The default system `(companion(x^3 - 5x^2 + 6x - 1))^2`.
pub fn canonical_matrix() -> ToralMatrix {
    let p = IntPolynomial::new(vec![-1, 6, -5, 1]).expect("valid polynomial");
    let c = companion_matrix(&p).expect("unimodular");
    matrix_power(&c, 2).expect("small power")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poly(c: &[i64]) -> IntPolynomial {
        IntPolynomial::new(c.to_vec()).unwrap()
    }

    #[test]
    fn companion_examples() {
        let c = companion_matrix(&poly(&[-1, 6, -5, 1])).unwrap();
        assert_eq!(c.rows(), vec![vec![0, 1, 0], vec![0, 0, 1], vec![1, -6, 5]]);
        assert_eq!(c.determinant(), 1);
        let c2 = companion_matrix(&poly(&[1, -3, 1])).unwrap();
        assert_eq!(c2.rows(), vec![vec![0, 1], vec![-1, 3]]);
        // x^3 + 1 builds fine, spectral_data rejects it later
        let c3 = companion_matrix(&poly(&[1, 0, 0, 1])).unwrap();
        assert!(matches!(
            spectral_data(&c3, 1e-9),
            Err(Error::Admissibility(_))
        ));
        assert!(matches!(
            companion_matrix(&poly(&[2, 0, 1])),
            Err(Error::Argument(_))
        ));
    }

    #[test]
    fn power_examples() {
        let c = companion_matrix(&poly(&[-1, 6, -5, 1])).unwrap();
        assert_eq!(matrix_power(&c, 1).unwrap(), c);
        let b = matrix_power(&c, 2).unwrap();
        assert_eq!(
            b.rows(),
            vec![vec![0, 0, 1], vec![1, -6, 5], vec![5, -29, 19]]
        );
        assert_eq!(b.trace(), 13);
        assert_eq!(b.determinant(), 1);
        assert!(matches!(matrix_power(&c, 0), Err(Error::Argument(_))));
    }

    #[test]
    fn power_overflow_names_entry() {
        let big = ToralMatrix::new(&[vec![1, 3_000_000_000], vec![0, 1]]).unwrap();
        let sq = ToralMatrix::new(&[vec![3_000_000_000, 1], vec![-1, 0]]).unwrap();
        assert!(matrix_power(&big, 2).is_ok());
        match matrix_power(&sq, 4) {
            Err(Error::Numeric(msg)) => assert!(msg.contains("entry")),
            other => panic!("expected overflow, got {other:?}"),
        }
    }

    #[test]
    fn inverse_is_exact() {
        let b = canonical_matrix();
        let inv = b.inverse();
        assert_eq!(
            b.checked_mul(&inv).unwrap().rows(),
            vec![vec![1, 0, 0], vec![0, 1, 0], vec![0, 0, 1]]
        );
    }

    #[test]
    fn non_unimodular_rejected() {
        assert!(ToralMatrix::new(&[vec![2, 0], vec![0, 2]]).is_err());
    }

    #[test]
    fn canonical_spectrum() {
        let s = spectral_data(&canonical_matrix(), 1e-10).unwrap();
        // squares of the roots of x^3 - 5x^2 + 6x - 1
        let base = real_roots(&poly(&[-1, 6, -5, 1]), 1e-10).unwrap();
        for (l, r) in s.eigenvalues().iter().zip(&base) {
            assert!((l - r * r).abs() < 1e-9);
        }
        assert!((s.lambda_s() - 0.0392287).abs() < 1e-6);
        assert!((s.lambda_c() - 2.4178948).abs() < 1e-6);
        assert!((s.lambda_u()[0] - 10.5428765).abs() < 1e-6);
        assert!((s.entropy_exact() + s.lambda_s().ln()).abs() < 1e-9);
        assert!((s.entropy_exact() - 3.23841).abs() < 1e-4);
    }

    #[test]
    fn companion_spectrum() {
        let c = companion_matrix(&poly(&[-1, 6, -5, 1])).unwrap();
        let s = spectral_data(&c, 1e-10).unwrap();
        assert!((s.lambda_c() - 1.5549581).abs() < 1e-7);
        assert!((s.lambda_u()[0] - 3.2469796).abs() < 1e-7);
        assert!(s.lambda_u()[0] > 3.0);
    }

    #[test]
    fn golden_matrix_rejected_negative() {
        let a = ToralMatrix::new(&[vec![0, 1], vec![1, 1]]).unwrap();
        match spectral_data(&a, 1e-9) {
            Err(Error::Admissibility(msg)) => assert!(msg.contains("negative")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn search_small_cases() {
        let found = search_admissible_polynomials(3, 8).unwrap();
        assert!(found.iter().any(|p| p.coeffs() == [-1, 6, -5, 1]));
        let quad = search_admissible_polynomials(2, 3).unwrap();
        assert!(quad.iter().any(|p| p.coeffs() == [1, -3, 1]));
        assert!(search_admissible_polynomials(3, 1).unwrap().is_empty());
        assert!(search_admissible_polynomials(1, 3).is_err());
        assert!(search_admissible_polynomials(7, 3).is_err());
    }

    // Independent oracle: brute force over all coefficient vectors with a
    // floating root scan, no sign-pattern pruning.
    #[test]
    fn search_matches_brute_force_cubic() {
        let bound = 6i64;
        let mut expected = Vec::new();
        for c0 in [-1i64, 1] {
            for c1 in -bound..=bound {
                for c2 in -bound..=bound {
                    let p = poly(&[c0, c1, c2, 1]);
                    let steps = 40_000;
                    let (lo, hi) = (-20.0, 20.0);
                    let h = (hi - lo) / steps as f64;
                    let mut roots = Vec::new();
                    for i in 0..steps {
                        let a = lo + i as f64 * h;
                        if p.eval_f64(a) * p.eval_f64(a + h) < 0.0 {
                            roots.push(a + 0.5 * h);
                        }
                    }
                    let ok = roots.len() == 3
                        && roots.iter().all(|&r| r > 0.0 && (r - 1.0).abs() > 1e-3)
                        && roots.iter().filter(|&&r| r < 1.0).count() == 1;
                    if ok {
                        expected.push(p);
                    }
                }
            }
        }
        expected.sort();
        assert_eq!(search_admissible_polynomials(3, bound).unwrap(), expected);
    }

    #[test]
    fn every_search_result_has_spectral_data() {
        for d in 2..=4 {
            for p in search_admissible_polynomials(d, 6).unwrap() {
                let c = companion_matrix(&p).unwrap();
                let s = spectral_data(&c, 1e-10).unwrap_or_else(|e| panic!("{p}: {e}"));
                assert_eq!(c.characteristic_polynomial().unwrap(), p);
                assert!(s.eigenvalues().iter().map(|l| l.ln()).sum::<f64>().abs() < 1e-9);
            }
        }
    }

    #[test]
    fn projections_resolve_identity() {
        let s = spectral_data(&canonical_matrix(), 1e-10).unwrap();
        let d = s.dim();
        for i in 0..d {
            for j in 0..d {
                let prod = s.projection(i) * s.projection(j);
                let expect = if i == j {
                    s.projection(i).clone()
                } else {
                    DMatrix::zeros(d, d)
                };
                assert!((prod - expect).amax() < 1e-10);
            }
        }
    }
}
