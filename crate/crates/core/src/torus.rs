//! Points of the torus `T^d = R^d / Z^d`, the flat metric and the linear
//! action of an integer matrix in floating, dyadic-lattice and exact
//! rational arithmetic.

use std::collections::{BTreeSet, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::spectral::{determinant_i128, SpectralData, ToralMatrix};

/// RNG for sample `index` of a run seeded with `seed`: independent streams,
/// so results do not depend on how work is split across threads.
pub fn indexed_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// A uniform point of `T^d`.
pub fn uniform_point(rng: &mut ChaCha8Rng, d: usize) -> TorusPoint {
    TorusPoint::new((0..d).map(|_| rng.random::<f64>()).collect())
}

/// Reduce a real number into `[0, 1)`.
#[inline]
pub fn reduce_coord(x: f64) -> f64 {
    // branches for the common ranges perform the same subtraction as the
    // general formula, without a call to `floor`
    let r = if (0.0..1.0).contains(&x) {
        return x;
    } else if (-1.0..0.0).contains(&x) {
        x + 1.0
    } else if (1.0..2.0).contains(&x) {
        x - 1.0
    } else {
        x - x.floor()
    };
    // x slightly below an integer can round up to exactly 1.0
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

/// Representative of `delta` modulo 1 in `(-1/2, 1/2]`; ties go to `+1/2`.
#[inline]
pub fn wrap_coord(delta: f64) -> f64 {
    if delta > 0.5 {
        if delta <= 1.5 {
            delta - 1.0
        } else {
            delta - (delta - 0.5).ceil()
        }
    } else if delta <= -0.5 {
        if delta > -1.5 {
            delta + 1.0
        } else {
            delta - (delta - 0.5).ceil()
        }
    } else {
        delta
    }
}

/// A point of the torus with every coordinate in `[0, 1)`.
#[derive(Clone, Debug, PartialEq)]
pub struct TorusPoint(Vec<f64>);

impl TorusPoint {
    /// Reduces arbitrary real coordinates.
    pub fn new(coords: Vec<f64>) -> Self {
        Self(coords.into_iter().map(reduce_coord).collect())
    }

    pub fn origin(d: usize) -> Self {
        Self(vec![0.0; d])
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn to_lift(&self) -> Lift {
        Lift(self.0.clone())
    }

    /// Moves along a real direction and reduces.
    pub fn translate(&self, dir: &[f64], t: f64) -> TorusPoint {
        TorusPoint::new(self.0.iter().zip(dir).map(|(x, v)| x + t * v).collect())
    }

    /// Nearest dyadic lattice point (exact for coordinates with at most 64 fractional bits).
    pub fn to_lattice(&self) -> LatticePoint {
        LatticePoint(self.0.iter().map(|&x| (x * LATTICE_SCALE) as u64).collect())
    }
}

/// A representative of a torus point in `R^d`.
#[derive(Clone, Debug, PartialEq)]
pub struct Lift(pub Vec<f64>);

impl Lift {
    pub fn reduce(&self) -> TorusPoint {
        TorusPoint::new(self.0.clone())
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }
}

/// The lift of `x` closest to `base`: each coordinate in `(base_i - 1/2, base_i + 1/2]`.
pub fn nearest_lift(x: &TorusPoint, base: &Lift) -> Lift {
    Lift(
        x.0.iter()
            .zip(&base.0)
            .map(|(&xi, &bi)| xi - (xi - bi - 0.5).ceil())
            .collect(),
    )
}

/// Shortest displacement from `b` to `a` on the torus.
pub fn lift_difference(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| wrap_coord(x - y)).collect()
}

/// Flat toral distance.
pub fn distance(a: &TorusPoint, b: &TorusPoint) -> f64 {
    coord_distance(&a.0, &b.0)
}

#[inline]
pub fn coord_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = (x - y).abs();
            let d = d - d.floor();
            let d = d.min(1.0 - d);
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

const LATTICE_SCALE: f64 = 18_446_744_073_709_551_616.0; // 2^64

/// Point of the dyadic lattice `2^-64 Z^d / Z^d`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LatticePoint(pub Vec<u64>);

impl LatticePoint {
    pub fn to_torus(&self) -> TorusPoint {
        TorusPoint(self.0.iter().map(|&c| lattice_to_unit(c)).collect())
    }
}

/// Top 53 bits of a lattice coordinate as a double in `[0, 1)`.
#[inline]
pub fn lattice_to_unit(c: u64) -> f64 {
    (c >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Point of the rational lattice `(1/den) Z^d / Z^d`, numerators in `[0, den)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RationalPoint {
    pub num: Vec<i64>,
    pub den: i64,
}

impl RationalPoint {
    pub fn to_torus(&self) -> TorusPoint {
        TorusPoint::new(
            self.num
                .iter()
                .map(|&n| n as f64 / self.den as f64)
                .collect(),
        )
    }

    pub fn is_origin(&self) -> bool {
        self.num.iter().all(|&n| n == 0)
    }
}

/// Action of an integer matrix `x -> A x mod 1`.
pub trait LinearAction: Sized {
    fn apply(&self, a: &ToralMatrix) -> Self;
}

impl LinearAction for TorusPoint {
    fn apply(&self, a: &ToralMatrix) -> Self {
        let mut out = vec![0.0; self.dim()];
        apply_linear_into(a, &self.0, &mut out);
        TorusPoint(out)
    }
}

impl LinearAction for LatticePoint {
    fn apply(&self, a: &ToralMatrix) -> Self {
        let mut out = vec![0u64; self.0.len()];
        apply_lattice_into(a, &self.0, &mut out);
        LatticePoint(out)
    }
}

impl LinearAction for RationalPoint {
    fn apply(&self, a: &ToralMatrix) -> Self {
        let d = self.num.len();
        let den = self.den as i128;
        let num = (0..d)
            .map(|i| {
                let s: i128 = (0..d)
                    .map(|j| a.get(i, j) as i128 * self.num[j] as i128)
                    .sum();
                s.rem_euclid(den) as i64
            })
            .collect();
        RationalPoint { num, den: self.den }
    }
}

/// `A x mod 1` in any of the supported arithmetics.
pub fn apply_linear<P: LinearAction>(a: &ToralMatrix, x: &P) -> P {
    x.apply(a)
}

/// Floating linear step on raw coordinates.
#[inline]
pub fn apply_linear_into(a: &ToralMatrix, x: &[f64], out: &mut [f64]) {
    let d = x.len();
    let e = a.entries();
    for i in 0..d {
        let row = &e[i * d..(i + 1) * d];
        let s: f64 = row.iter().zip(x).map(|(&aij, &xj)| aij as f64 * xj).sum();
        out[i] = reduce_coord(s);
    }
}

/// Exact lattice step: integer multiply with wraparound modulo `2^64`.
#[inline]
pub fn apply_lattice_into(a: &ToralMatrix, x: &[u64], out: &mut [u64]) {
    let d = x.len();
    let e = a.entries();
    for i in 0..d {
        let row = &e[i * d..(i + 1) * d];
        out[i] = row.iter().zip(x).fold(0u64, |acc, (&aij, &xj)| {
            acc.wrapping_add((aij as u64).wrapping_mul(xj))
        });
    }
}

/// A self-map of the torus acting on raw coordinates.
pub trait ToralMap: Sync {
    fn dim(&self) -> usize;

    fn step(&self, x: &[f64], out: &mut [f64]);

    /// The integer matrix when the map is linear; statistics then use exact
    /// lattice orbits.
    fn as_linear(&self) -> Option<&ToralMatrix> {
        None
    }
}

impl ToralMap for ToralMatrix {
    fn dim(&self) -> usize {
        ToralMatrix::dim(self)
    }

    fn step(&self, x: &[f64], out: &mut [f64]) {
        apply_linear_into(self, x, out)
    }

    fn as_linear(&self) -> Option<&ToralMatrix> {
        Some(self)
    }
}

/// The rotation `x -> x + alpha mod 1`, an isometry.
#[derive(Clone, Debug)]
pub struct Translation {
    pub alpha: Vec<f64>,
}

impl ToralMap for Translation {
    fn dim(&self) -> usize {
        self.alpha.len()
    }

    fn step(&self, x: &[f64], out: &mut [f64]) {
        for ((o, xi), a) in out.iter_mut().zip(x).zip(&self.alpha) {
            *o = reduce_coord(xi + a);
        }
    }
}

/// A fixed point of `f_A` in exact and floating form.
#[derive(Clone, Debug, PartialEq)]
pub struct FixedPoint {
    pub exact: RationalPoint,
    pub point: TorusPoint,
}

const MAX_FIXED_POINTS: i128 = 1_000_000;

/// All fixed points of `f_A`, sorted lexicographically, origin first.
///
/// The solutions of `(A - I) x ∈ Z^d` form the group `(A - I)^{-1} Z^d / Z^d`
/// of order `|det(A - I)|`; it is generated by the columns of
/// `adj(A - I) / det(A - I)` and enumerated by closure under addition.
pub fn fixed_points(a: &ToralMatrix) -> Result<Vec<FixedPoint>> {
    let d = a.dim();
    let mut m: Vec<i64> = a.entries().to_vec();
    for i in 0..d {
        m[i * d + i] -= 1;
    }
    let det = determinant_i128(&m, d);
    if det == 0 {
        return Err(Error::Degeneracy(
            "det(A - I) = 0, fixed points are not isolated".into(),
        ));
    }
    let order = det.abs();
    if order > MAX_FIXED_POINTS {
        return Err(Error::Argument(format!(
            "|det(A - I)| = {order} exceeds the enumeration limit {MAX_FIXED_POINTS}"
        )));
    }
    let den = order as i64;
    // generators: columns of adj(M) * sign(det) reduced mod |det|
    let generators: Vec<Vec<i64>> = (0..d)
        .map(|col| {
            (0..d)
                .map(|row| {
                    let minor: Vec<i64> = (0..d)
                        .filter(|&r| r != col)
                        .flat_map(|r| (0..d).filter(|&c| c != row).map(move |c| (r, c)))
                        .map(|(r, c)| m[r * d + c])
                        .collect();
                    let sign = if (row + col) % 2 == 0 { 1 } else { -1 };
                    let cof = sign * determinant_i128(&minor, d - 1) * det.signum();
                    cof.rem_euclid(order) as i64
                })
                .collect()
        })
        .collect();
    let mut seen = BTreeSet::new();
    let mut queue = VecDeque::new();
    seen.insert(vec![0i64; d]);
    queue.push_back(vec![0i64; d]);
    while let Some(p) = queue.pop_front() {
        for g in &generators {
            let next: Vec<i64> = p.iter().zip(g).map(|(x, y)| (x + y) % den).collect();
            if seen.insert(next.clone()) {
                queue.push_back(next);
            }
        }
    }
    if seen.len() as i128 != order {
        return Err(Error::Numeric(format!(
            "enumerated {} fixed points, expected |det(A - I)| = {order}",
            seen.len()
        )));
    }
    let points: Vec<FixedPoint> = seen
        .into_iter()
        .map(|num| {
            let exact = RationalPoint { num, den };
            FixedPoint {
                point: exact.to_torus(),
                exact,
            }
        })
        .collect();
    for fp in &points {
        if fp.exact.apply(a) != fp.exact {
            return Err(Error::Numeric("enumerated point is not fixed".into()));
        }
        let image = fp.point.apply(a);
        if distance(&image, &fp.point) > 1e-12 {
            return Err(Error::Numeric(format!(
                "fixed point {:?} moves by {:e} in floating arithmetic",
                fp.point.coords(),
                distance(&image, &fp.point)
            )));
        }
    }
    Ok(points)
}

/// Index of the default deformed fixed point: the nonzero fixed point with the
/// smallest positive first coordinate (lexicographic tie-break).
pub fn default_q_index(points: &[FixedPoint]) -> Option<usize> {
    points
        .iter()
        .enumerate()
        .filter(|(_, p)| p.exact.num[0] > 0)
        .min_by(|(_, a), (_, b)| a.exact.num.cmp(&b.exact.num))
        .map(|(i, _)| i)
        .or_else(|| points.iter().position(|p| !p.exact.is_origin()))
}

/// Topological entropy of the linear automorphism: sum of `ln λ` over `λ > 1`.
pub fn linear_entropy(s: &SpectralData) -> f64 {
    s.eigenvalues()
        .iter()
        .filter(|&&l| l > 1.0)
        .map(|l| l.ln())
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::IntPolynomial;
    use crate::spectral::{canonical_matrix, companion_matrix, spectral_data};
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn fast_paths_match_general_formulas(x in -3.0f64..3.0) {
            let w = x - (x - 0.5).ceil();
            prop_assert_eq!(wrap_coord(x).to_bits(), w.to_bits());
            let r = x - x.floor();
            let r = if r >= 1.0 { 0.0 } else { r };
            prop_assert_eq!(reduce_coord(x).to_bits(), r.to_bits());
        }
    }

    #[test]
    fn nearest_lift_examples() {
        let x = TorusPoint::new(vec![0.9, 0.0, 0.0]);
        let l = nearest_lift(&x, &Lift(vec![0.1, 0.0, 0.0]));
        assert!((l.0[0] + 0.1).abs() < 1e-15);
        assert_eq!(&l.0[1..], &[0.0, 0.0]);
        let b = Lift(vec![0.3, 0.7, 0.2]);
        assert_eq!(nearest_lift(&b.reduce(), &b), b);
        let a = TorusPoint::new(vec![0.95; 3]);
        let c = TorusPoint::new(vec![0.05; 3]);
        assert!((distance(&a, &c) - 3f64.sqrt() * 0.1).abs() < 1e-12);
    }

    #[test]
    fn ties_resolve_upward() {
        assert_eq!(wrap_coord(0.5), 0.5);
        assert_eq!(wrap_coord(-0.5), 0.5);
        let l = nearest_lift(&TorusPoint::new(vec![0.75, 0.0]), &Lift(vec![0.25, 0.0]));
        assert_eq!(l.0[0], 0.75);
    }

    #[test]
    fn canonical_fixed_points() {
        let b = canonical_matrix();
        let fps = fixed_points(&b).unwrap();
        assert_eq!(fps.len(), 13);
        let mut m = b.entries().to_vec();
        for i in 0..3 {
            m[i * 3 + i] -= 1;
        }
        assert_eq!(determinant_i128(&m, 3).abs(), 13);
        for fp in &fps {
            assert_eq!(fp.exact.den, 13);
            assert!(distance(&fp.point.apply(&b), &fp.point) < 1e-12);
        }
        // cyclic: some nonzero point generates all 13
        let g = &fps[default_q_index(&fps).unwrap()].exact;
        let mut multiples = BTreeSet::new();
        for k in 0..13 {
            multiples.insert(g.num.iter().map(|n| n * k % 13).collect::<Vec<_>>());
        }
        assert_eq!(multiples.len(), 13);
    }

    #[test]
    fn companion_has_only_origin() {
        let c = companion_matrix(&IntPolynomial::new(vec![-1, 6, -5, 1]).unwrap()).unwrap();
        let fps = fixed_points(&c).unwrap();
        assert_eq!(fps.len(), 1);
        assert!(fps[0].exact.is_origin());
    }

    // Brute-force oracle: scan the (1/D) lattice directly.
    #[test]
    fn fixed_points_match_lattice_scan() {
        let b = canonical_matrix();
        let mut scan = Vec::new();
        for i in 0..13 {
            for j in 0..13 {
                for k in 0..13 {
                    let p = RationalPoint {
                        num: vec![i, j, k],
                        den: 13,
                    };
                    if p.apply(&b) == p {
                        scan.push(p);
                    }
                }
            }
        }
        let fps: Vec<RationalPoint> = fixed_points(&b)
            .unwrap()
            .into_iter()
            .map(|f| f.exact)
            .collect();
        assert_eq!(fps, scan);
    }

    #[test]
    fn degenerate_fixed_points() {
        let shear = ToralMatrix::new(&[vec![1, 1], vec![0, 1]]).unwrap();
        assert!(matches!(fixed_points(&shear), Err(Error::Degeneracy(_))));
    }

    #[test]
    fn origin_fixed() {
        let b = canonical_matrix();
        assert_eq!(TorusPoint::origin(3).apply(&b), TorusPoint::origin(3));
    }

    #[test]
    fn lattice_round_trip_is_exact() {
        let b = canonical_matrix();
        let inv = b.inverse();
        let start = LatticePoint(vec![0x1234_5678_9abc_def1, 0xdead_beef_0000_0001, 42]);
        let mut x = start.clone();
        for _ in 0..1_000_000 {
            x = x.apply(&b);
        }
        assert_ne!(x, start);
        for _ in 0..1_000_000 {
            x = x.apply(&inv);
        }
        assert_eq!(x, start);
    }

    #[test]
    fn lattice_and_float_agree_on_dyadic_start() {
        let b = canonical_matrix();
        let mut f = TorusPoint::new(vec![3.0 / 1024.0, 517.0 / 1024.0, 1001.0 / 1024.0]);
        let mut l = f.to_lattice();
        for _ in 0..1000 {
            f = f.apply(&b);
            l = l.apply(&b);
            assert!(distance(&f, &l.to_torus()) < 1e-12);
        }
    }

    #[test]
    fn entropy_two_formulas() {
        let s = spectral_data(&canonical_matrix(), 1e-10).unwrap();
        assert!((linear_entropy(&s) - 3.23841).abs() < 1e-4);
        assert!((linear_entropy(&s) + s.lambda_s().ln()).abs() < 1e-9);
        let c = companion_matrix(&IntPolynomial::new(vec![-1, 6, -5, 1]).unwrap()).unwrap();
        let sc = spectral_data(&c, 1e-10).unwrap();
        assert!((linear_entropy(&sc) - 5.048917f64.ln()).abs() < 1e-5);
    }

    proptest! {
        #[test]
        fn reduce_inverts_nearest_lift(
            x in proptest::collection::vec(0.0f64..1.0, 3),
            base in proptest::collection::vec(-3.0f64..3.0, 3),
        ) {
            let p = TorusPoint::new(x);
            let l = nearest_lift(&p, &Lift(base.clone()));
            prop_assert!(distance(&l.reduce(), &p) < 1e-15);
            for (li, bi) in l.0.iter().zip(&base) {
                prop_assert!(*li - bi > -0.5 - 1e-12 && *li - bi <= 0.5 + 1e-12);
            }
        }

        #[test]
        fn distance_is_a_bounded_metric(
            a in proptest::collection::vec(0.0f64..1.0, 3),
            b in proptest::collection::vec(0.0f64..1.0, 3),
            c in proptest::collection::vec(0.0f64..1.0, 3),
        ) {
            let (a, b, c) = (TorusPoint::new(a), TorusPoint::new(b), TorusPoint::new(c));
            prop_assert!(distance(&a, &b) <= 3f64.sqrt() / 2.0 + 1e-15);
            prop_assert!((distance(&a, &b) - distance(&b, &a)).abs() < 1e-15);
            prop_assert!(distance(&a, &c) <= distance(&a, &b) + distance(&b, &c) + 1e-12);
            let m = canonical_matrix();
            prop_assert!(distance(&a.apply(&m), &b.apply(&m)) <= m.norm2() * distance(&a, &b) + 1e-9);
        }
    }
}
