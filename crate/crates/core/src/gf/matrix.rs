//! Dense row-major matrices over a [`Field`].

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::field::{Elem, Field};
use crate::error::{Error, Result};

#[derive(Clone, PartialEq, Eq)]
pub struct Matrix {
    field: Field,
    rows: usize,
    cols: usize,
    data: Vec<Elem>,
}

impl Matrix {
    pub fn zeros(field: &Field, rows: usize, cols: usize) -> Self {
        Matrix { field: field.clone(), rows, cols, data: vec![0; rows * cols] }
    }

    pub fn identity(field: &Field, n: usize) -> Self {
        let mut m = Self::zeros(field, n, n);
        for i in 0..n {
            m.data[i * n + i] = 1;
        }
        m
    }

    pub fn from_rows(field: &Field, rows: &[Vec<Elem>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Dimension("ragged rows".into()));
        }
        if let Some(&bad) = rows.iter().flatten().find(|&&x| !field.contains(x)) {
            return Err(Error::Dimension(format!("{bad} is not an element of {field}")));
        }
        Ok(Matrix { field: field.clone(), rows: rows.len(), cols, data: rows.concat() })
    }

    /// `n × k` with row `i` equal to `(1, xᵢ, …, xᵢ^{k−1})`.
    pub fn vandermonde(field: &Field, k: usize, evals: &[Elem]) -> Result<Self> {
        if evals.len() as u64 > field.order() {
            return Err(Error::Dimension(format!("{} rows exceed field order {}", evals.len(), field.order())));
        }
        let mut seen = evals.to_vec();
        seen.sort_unstable();
        if seen.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::DuplicateEvals);
        }
        let rows: Vec<Vec<Elem>> = evals.iter().map(|&x| (0..k as u64).map(|e| field.pow(x, e)).collect()).collect();
        Self::from_rows(field, &rows)
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> Elem {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Elem) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[Elem] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<Elem>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn select_rows(&self, idx: &[usize]) -> Self {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Matrix { field: self.field.clone(), rows: idx.len(), cols: self.cols, data }
    }

    pub fn push_row(&mut self, row: &[Elem]) -> Result<()> {
        if self.rows > 0 && row.len() != self.cols {
            return Err(Error::Dimension(format!("row of length {} into {} columns", row.len(), self.cols)));
        }
        self.cols = row.len();
        self.data.extend_from_slice(row);
        self.rows += 1;
        Ok(())
    }

    pub fn vstack(parts: &[&Matrix]) -> Result<Self> {
        let first = parts.first().ok_or_else(|| Error::Dimension("nothing to stack".into()))?;
        let mut out = Matrix::zeros(&first.field, 0, first.cols);
        for m in parts {
            if m.cols != first.cols {
                return Err(Error::Dimension("column mismatch in vstack".into()));
            }
            out.data.extend_from_slice(&m.data);
            out.rows += m.rows;
        }
        Ok(out)
    }

    pub fn transpose(&self) -> Self {
        let mut t = Matrix::zeros(&self.field, self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    pub fn mul(&self, other: &Matrix) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::Dimension(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let f = &self.field;
        let mut out = Matrix::zeros(f, self.rows, other.cols);
        for i in 0..self.rows {
            for l in 0..self.cols {
                let a = self.get(i, l);
                if a == 0 {
                    continue;
                }
                for j in 0..other.cols {
                    let v = f.add(out.get(i, j), f.mul(a, other.get(l, j)));
                    out.set(i, j, v);
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, x: &[Elem]) -> Result<Vec<Elem>> {
        if x.len() != self.cols {
            return Err(Error::Dimension(format!("vector of length {} for {} columns", x.len(), self.cols)));
        }
        Ok((0..self.rows).map(|i| self.field.dot(self.row(i), x)).collect())
    }

    /// Reduced row echelon form in place; returns the pivot columns.
    fn rref(&mut self) -> Vec<usize> {
        let f = self.field.clone();
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..self.cols {
            if r == self.rows {
                break;
            }
            let Some(p) = (r..self.rows).find(|&i| self.get(i, c) != 0) else {
                continue;
            };
            self.swap_rows(p, r);
            let inv = f.inv(self.get(r, c)).expect("pivot is nonzero");
            for j in 0..self.cols {
                let v = f.mul(self.get(r, j), inv);
                self.set(r, j, v);
            }
            for i in 0..self.rows {
                let factor = self.get(i, c);
                if i == r || factor == 0 {
                    continue;
                }
                for j in 0..self.cols {
                    let v = f.sub(self.get(i, j), f.mul(factor, self.get(r, j)));
                    self.set(i, j, v);
                }
            }
            pivots.push(c);
            r += 1;
        }
        pivots
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a != b {
            for j in 0..self.cols {
                self.data.swap(a * self.cols + j, b * self.cols + j);
            }
        }
    }

    pub fn rank(&self) -> usize {
        self.clone().rref().len()
    }

    /// Indices of a maximal set of linearly independent rows, chosen greedily
    /// from the top.
    pub fn independent_rows(&self) -> Vec<usize> {
        self.transpose().rref()
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Determinant by elimination (square matrices only).
    pub fn det(&self) -> Result<Elem> {
        if !self.is_square() {
            return Err(Error::Dimension("determinant of a non-square matrix".into()));
        }
        let f = self.field.clone();
        let mut m = self.clone();
        let n = self.rows;
        let mut det = 1;
        for c in 0..n {
            let Some(p) = (c..n).find(|&i| m.get(i, c) != 0) else {
                return Ok(0);
            };
            if p != c {
                m.swap_rows(p, c);
                det = f.neg(det);
            }
            let pivot = m.get(c, c);
            det = f.mul(det, pivot);
            let inv = f.inv(pivot).expect("nonzero");
            for i in c + 1..n {
                let factor = f.mul(m.get(i, c), inv);
                if factor == 0 {
                    continue;
                }
                for j in c..n {
                    let v = f.sub(m.get(i, j), f.mul(factor, m.get(c, j)));
                    m.set(i, j, v);
                }
            }
        }
        Ok(det)
    }

    pub fn invert(&self) -> Result<Self> {
        if !self.is_square() {
            return Err(Error::Dimension("inverse of a non-square matrix".into()));
        }
        let n = self.rows;
        let mut aug = Matrix::zeros(&self.field, n, 2 * n);
        for i in 0..n {
            for j in 0..n {
                aug.set(i, j, self.get(i, j));
            }
            aug.set(i, n + i, 1);
        }
        let pivots = aug.rref();
        if pivots.len() < n || pivots[n - 1] >= n {
            return Err(Error::Singular);
        }
        let mut inv = Matrix::zeros(&self.field, n, n);
        for i in 0..n {
            for j in 0..n {
                inv.set(i, j, aug.get(i, n + j));
            }
        }
        Ok(inv)
    }

    /// The unique `x` with `A·x = b`.
    pub fn solve(&self, b: &[Elem]) -> Result<Vec<Elem>> {
        if b.len() != self.rows {
            return Err(Error::Dimension(format!("right-hand side of length {} for {} rows", b.len(), self.rows)));
        }
        self.invert()?.mul_vec(b)
    }

    /// Every `k × k` row-submatrix is nonsingular (`k` = column count).
    pub fn is_mds(&self) -> bool {
        let k = self.cols;
        if self.rows < k {
            return false;
        }
        crate::flowgraph::adversary::k_subsets(self.rows, k)
            .iter()
            .all(|rows| self.select_rows(rows).det().is_ok_and(|d| d != 0))
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{:?}", self.field, self.to_rows())
    }
}

#[derive(Serialize, Deserialize)]
struct MatrixRepr {
    q: u64,
    poly: u32,
    rows: Vec<Vec<Elem>>,
}

impl Serialize for Matrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        MatrixRepr { q: self.field.order(), poly: self.field.poly(), rows: self.to_rows() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Matrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let r = MatrixRepr::deserialize(d)?;
        let f = Field::from_parts(r.q, r.poly).map_err(D::Error::custom)?;
        Matrix::from_rows(&f, &r.rows).map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flowgraph::adversary::k_subsets;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn gf5() -> Field {
        Field::prime(5).unwrap()
    }

    fn random_matrix(f: &Field, rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Matrix {
        let data: Vec<Vec<Elem>> = (0..rows).map(|_| (0..cols).map(|_| f.random(rng)).collect()).collect();
        Matrix::from_rows(f, &data).unwrap()
    }

    /// Leibniz expansion, independent of elimination.
    fn leibniz(m: &Matrix) -> Elem {
        let f = m.field();
        let n = m.rows();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut total = 0;
        loop {
            let inversions = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).filter(|&(i, j)| perm[i] > perm[j]).count();
            let mut term = 1;
            for (i, &p) in perm.iter().enumerate() {
                term = f.mul(term, m.get(i, p));
            }
            total = if inversions % 2 == 0 { f.add(total, term) } else { f.sub(total, term) };
            // next permutation
            let Some(i) = (0..n.saturating_sub(1)).rev().find(|&i| perm[i] < perm[i + 1]) else {
                return total;
            };
            let j = (i + 1..n).rev().find(|&j| perm[j] > perm[i]).unwrap();
            perm.swap(i, j);
            perm[i + 1..].reverse();
        }
    }

    #[test]
    fn vandermonde_gf5_all_minors() {
        let f = gf5();
        let v = Matrix::vandermonde(&f, 2, &[0, 1, 2, 3]).unwrap();
        for rows in k_subsets(4, 2) {
            assert_ne!(leibniz(&v.select_rows(&rows)), 0);
        }
        assert!(v.is_mds());
    }

    #[test]
    fn vandermonde_errors_and_k1() {
        let f = gf5();
        assert!(matches!(Matrix::vandermonde(&f, 2, &[1, 1]), Err(Error::DuplicateEvals)));
        assert!(Matrix::vandermonde(&f, 2, &[0, 1, 2, 3, 4, 0]).is_err());
        let ones = Matrix::vandermonde(&f, 1, &[0, 1, 2, 3, 4]).unwrap();
        assert_eq!(ones.rank(), 1);
        assert!((0..5).all(|i| ones.get(i, 0) == 1));
    }

    #[test]
    fn binary_h_matrix_any_three_rows_independent() {
        let f = Field::binary(1).unwrap();
        let h = Matrix::from_rows(&f, &[vec![1, 0, 0], vec![0, 1, 0], vec![0, 0, 1], vec![1, 1, 1]]).unwrap();
        assert!(h.is_mds());
    }

    #[test]
    fn intro_generator_is_mds() {
        let f = gf5();
        let g1 = Matrix::from_rows(&f, &[vec![1, 0], vec![0, 1], vec![1, 1], vec![2, 1]]).unwrap();
        assert!(g1.is_mds());
        let rep = Matrix::from_rows(&f, &[vec![1, 0], vec![1, 2], vec![1, 2]]).unwrap();
        assert!(!rep.is_mds());
    }

    #[test]
    fn gf256_vandermonde_mds() {
        let f = Field::binary(8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut evals: Vec<Elem> = Vec::new();
        while evals.len() < 8 {
            let x = f.random(&mut rng);
            if !evals.contains(&x) {
                evals.push(x);
            }
        }
        let v = Matrix::vandermonde(&f, 4, &evals).unwrap();
        for rows in k_subsets(8, 4) {
            assert_ne!(leibniz(&v.select_rows(&rows)), 0);
        }
        assert!(v.is_mds());
    }

    #[test]
    fn identity_rank_and_singular() {
        let f = Field::binary(4).unwrap();
        assert_eq!(Matrix::identity(&f, 5).rank(), 5);
        let s = Matrix::from_rows(&f, &[vec![1, 2], vec![2, 4]]).unwrap();
        assert!(matches!(s.invert(), Err(Error::Singular)));
        assert_eq!(s.rank(), 1);
    }

    #[test]
    fn independent_rows_greedy() {
        let f = gf5();
        let m = Matrix::from_rows(&f, &[vec![1, 1], vec![2, 2], vec![0, 0], vec![0, 3], vec![1, 0]]).unwrap();
        assert_eq!(m.independent_rows(), vec![0, 3]);
    }

    #[test]
    fn json_shape() {
        let f = gf5();
        let m = Matrix::from_rows(&f, &[vec![1, 2], vec![3, 4]]).unwrap();
        let s = serde_json::to_string(&m).unwrap();
        assert_eq!(s, r#"{"q":5,"poly":0,"rows":[[1,2],[3,4]]}"#);
        assert_eq!(serde_json::from_str::<Matrix>(&s).unwrap(), m);
        assert!(serde_json::from_str::<Matrix>(r#"{"q":5,"poly":0,"rows":[[7]]}"#).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn det_matches_leibniz(seed in any::<u64>(), n in 1usize..5, which in 0usize..3) {
            let f = [gf5(), Field::binary(3).unwrap(), Field::prime(65537).unwrap()][which].clone();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = random_matrix(&f, n, n, &mut rng);
            prop_assert_eq!(m.det().unwrap(), leibniz(&m));
            prop_assert_eq!(m.rank() == n, leibniz(&m) != 0);
        }

        #[test]
        fn invert_and_solve_round_trip(seed in any::<u64>(), n in 1usize..7) {
            let f = Field::binary(8).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = random_matrix(&f, n, n, &mut rng);
            prop_assume!(a.rank() == n);
            let inv = a.invert().unwrap();
            prop_assert_eq!(inv.mul(&a).unwrap(), Matrix::identity(&f, n));
            prop_assert_eq!(inv.invert().unwrap(), a.clone());
            let x: Vec<Elem> = (0..n).map(|_| f.random(&mut rng)).collect();
            prop_assert_eq!(a.solve(&a.mul_vec(&x).unwrap()).unwrap(), x);
        }

        #[test]
        fn rank_invariant_under_permutation_and_scaling(seed in any::<u64>(), rows in 1usize..6, cols in 1usize..6) {
            let f = Field::prime(7).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = random_matrix(&f, rows, cols, &mut rng);
            let mut idx: Vec<usize> = (0..rows).collect();
            use rand::seq::SliceRandom;
            idx.shuffle(&mut rng);
            let mut p = m.select_rows(&idx);
            for i in 0..rows {
                let s = rng.gen_range(1..7);
                for j in 0..cols {
                    let v = f.mul(p.get(i, j), s);
                    p.set(i, j, v);
                }
            }
            prop_assert_eq!(p.rank(), m.rank());
            prop_assert!(m.rank() <= rows.min(cols));
        }
    }
}
