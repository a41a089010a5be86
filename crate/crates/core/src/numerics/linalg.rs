use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Lower-triangular factor `L` with `L Lᵀ = A`.
#[derive(Debug, Clone, PartialEq)]
pub struct Cholesky {
    l: DMatrix<f64>,
    log_det: f64,
}

/// Factor a symmetric positive definite matrix.
///
/// Fails with [`Error::NotPositiveDefinite`] carrying the index of the first
/// non-positive pivot, which the MCMC treats as a rejected proposal.
pub fn cholesky(a: &DMatrix<f64>) -> Result<Cholesky> {
    if !a.is_square() {
        return Err(Error::invalid(format!(
            "cholesky needs a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    let n = a.nrows();
    let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    for j in 0..n {
        for i in 0..j {
            if (a[(i, j)] - a[(j, i)]).abs() > 1e-10 * scale {
                return Err(Error::invalid(format!("matrix is not symmetric at ({i}, {j})")));
            }
        }
    }

    let mut l = DMatrix::<f64>::zeros(n, n);
    let mut col = vec![0.0; n];
    for j in 0..n {
        // Left-looking: column j of L from the lower part of column j of A.
        col[j..].copy_from_slice(&a.as_slice()[j * n + j..(j + 1) * n]);
        let data = l.as_slice();
        for k in 0..j {
            let lk = &data[k * n..(k + 1) * n];
            let ljk = lk[j];
            if ljk != 0.0 {
                for (c, v) in col[j..].iter_mut().zip(&lk[j..]) {
                    *c -= ljk * v;
                }
            }
        }
        let pivot = col[j];
        if !(pivot > 0.0) || !pivot.is_finite() {
            return Err(Error::NotPositiveDefinite { pivot: j });
        }
        let d = pivot.sqrt();
        let dst = &mut l.as_mut_slice()[j * n..(j + 1) * n];
        dst[j] = d;
        for i in j + 1..n {
            dst[i] = col[i] / d;
        }
    }
    let log_det = 2.0 * (0..n).map(|i| l[(i, i)].ln()).sum::<f64>();
    Ok(Cholesky { l, log_det })
}

impl Cholesky {
    #[inline]
    fn col(&self, j: usize) -> &[f64] {
        let n = self.l.nrows();
        &self.l.as_slice()[j * n..(j + 1) * n]
    }

    /// Build from an explicit lower factor, e.g. for a known diagonal.
    pub fn from_lower(l: DMatrix<f64>) -> Result<Self> {
        if !l.is_square() {
            return Err(Error::invalid("lower factor must be square"));
        }
        let n = l.nrows();
        for i in 0..n {
            if !(l[(i, i)] > 0.0) {
                return Err(Error::NotPositiveDefinite { pivot: i });
            }
            for j in i + 1..n {
                if l[(i, j)] != 0.0 {
                    return Err(Error::invalid("factor is not lower triangular"));
                }
            }
        }
        let log_det = 2.0 * (0..n).map(|i| l[(i, i)].ln()).sum::<f64>();
        Ok(Self { l, log_det })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            l: DMatrix::identity(n, n),
            log_det: 0.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.l.nrows()
    }

    pub fn lower(&self) -> &DMatrix<f64> {
        &self.l
    }

    /// log det A.
    pub fn log_det(&self) -> f64 {
        self.log_det
    }

    /// Reconstruct `L Lᵀ`.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        &self.l * self.l.transpose()
    }

    /// Overwrite `b` with `L⁻¹ b`.
    pub fn solve_lower_in_place(&self, b: &mut [f64]) {
        let n = self.dim();
        debug_assert_eq!(b.len(), n);
        for j in 0..n {
            let col = self.col(j);
            let xj = b[j] / col[j];
            b[j] = xj;
            if xj != 0.0 {
                for (bi, lij) in b[j + 1..].iter_mut().zip(&col[j + 1..]) {
                    *bi -= xj * lij;
                }
            }
        }
    }

    /// Overwrite `b` with `L⁻ᵀ b`.
    pub fn solve_upper_in_place(&self, b: &mut [f64]) {
        let n = self.dim();
        debug_assert_eq!(b.len(), n);
        for j in (0..n).rev() {
            let col = self.col(j);
            let dot: f64 = col[j + 1..].iter().zip(&b[j + 1..]).map(|(l, x)| l * x).sum();
            b[j] = (b[j] - dot) / col[j];
        }
    }

    /// `A⁻¹ b`.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        self.check_len(b.len())?;
        let mut x = b.to_vec();
        self.solve_lower_in_place(&mut x);
        self.solve_upper_in_place(&mut x);
        Ok(x)
    }

    /// `‖L⁻¹ x‖²`, i.e. the quadratic form `xᵀ A⁻¹ x`.
    pub fn quad_form_inv(&self, x: &[f64]) -> Result<f64> {
        self.check_len(x.len())?;
        let mut v = x.to_vec();
        self.solve_lower_in_place(&mut v);
        Ok(v.iter().map(|t| t * t).sum())
    }

    /// `L z`.
    pub fn mul_lower(&self, z: &[f64]) -> Result<Vec<f64>> {
        self.check_len(z.len())?;
        let n = self.dim();
        let mut out = vec![0.0; n];
        for (j, &zj) in z.iter().enumerate() {
            if zj == 0.0 {
                continue;
            }
            let col = self.col(j);
            for (o, lij) in out[j..].iter_mut().zip(&col[j..]) {
                *o += lij * zj;
            }
        }
        Ok(out)
    }

    /// Explicit `A⁻¹` as `L⁻ᵀ L⁻¹`.
    pub fn inverse(&self) -> DMatrix<f64> {
        let n = self.dim();
        // Columns of L⁻¹ (lower triangular); column j has zeros above row j.
        let mut linv = DMatrix::<f64>::zeros(n, n);
        let mut e = vec![0.0; n];
        for j in 0..n {
            e.iter_mut().for_each(|v| *v = 0.0);
            e[j] = 1.0;
            // Forward solve restricted to rows >= j.
            for k in j..n {
                let col = self.col(k);
                let xk = e[k] / col[k];
                e[k] = xk;
                if xk != 0.0 {
                    for (ei, lik) in e[k + 1..].iter_mut().zip(&col[k + 1..]) {
                        *ei -= xk * lik;
                    }
                }
            }
            linv.as_mut_slice()[j * n + j..(j + 1) * n].copy_from_slice(&e[j..]);
        }
        // (L⁻ᵀ L⁻¹)_{ij} = Σ_k Linv[k, i] Linv[k, j], k >= max(i, j).
        let mut inv = DMatrix::<f64>::zeros(n, n);
        for j in 0..n {
            let cj = &linv.as_slice()[j * n..(j + 1) * n];
            for i in j..n {
                let ci = &linv.as_slice()[i * n..(i + 1) * n];
                let v: f64 = ci[i..].iter().zip(&cj[i..]).map(|(a, b)| a * b).sum();
                inv[(i, j)] = v;
                inv[(j, i)] = v;
            }
        }
        inv
    }

    pub fn inverse_times(&self, b: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(DVector::from_vec(self.solve(b.as_slice())?))
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.dim() {
            return Err(Error::invalid(format!(
                "dimension mismatch: factor is {}, vector is {len}",
                self.dim()
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::RngStream;
    use crate::numerics::standard_normal;
    use proptest::prelude::*;

    fn random_spd(n: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = RngStream::new(seed);
        let b = DMatrix::from_fn(n, n, |_, _| standard_normal(&mut rng));
        b.transpose() * &b + DMatrix::identity(n, n)
    }

    fn max_abs(m: &DMatrix<f64>) -> f64 {
        m.iter().fold(0.0f64, |a, v| a.max(v.abs()))
    }

    #[test]
    fn identity_factor() {
        let c = cholesky(&DMatrix::identity(3, 3)).unwrap();
        assert_eq!(c.lower(), &DMatrix::<f64>::identity(3, 3));
        assert_eq!(c.log_det(), 0.0);
    }

    #[test]
    fn two_by_two_by_hand() {
        let a = DMatrix::from_row_slice(2, 2, &[4.0, 2.0, 2.0, 3.0]);
        let c = cholesky(&a).unwrap();
        let l = c.lower();
        assert!((l[(0, 0)] - 2.0).abs() < 1e-15);
        assert_eq!(l[(0, 1)], 0.0);
        assert!((l[(1, 0)] - 1.0).abs() < 1e-15);
        assert!((l[(1, 1)] - 2f64.sqrt()).abs() < 1e-15);
        assert!((c.log_det() - 8f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn reports_failing_pivot() {
        let a = DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 0.0, 0.0, 1.0, 2.0, 0.0, 2.0, 1.0]);
        match cholesky(&a) {
            Err(Error::NotPositiveDefinite { pivot }) => assert_eq!(pivot, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_asymmetric_input() {
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 0.0, 2.0]);
        assert!(matches!(cholesky(&a), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn inverse_and_solve_agree_with_nalgebra() {
        let a = random_spd(7, 11);
        let c = cholesky(&a).unwrap();
        let direct = a.clone().try_inverse().unwrap();
        assert!(max_abs(&(c.inverse() - &direct)) < 1e-10);
        let b: Vec<f64> = (0..7).map(|i| i as f64 - 3.0).collect();
        let x = c.solve(&b).unwrap();
        let expected = &direct * DVector::from_vec(b.clone());
        for (u, v) in x.iter().zip(expected.iter()) {
            assert!((u - v).abs() < 1e-10);
        }
        let q = c.quad_form_inv(&b).unwrap();
        let bv = DVector::from_vec(b);
        assert!((q - bv.dot(&(&direct * &bv))).abs() < 1e-9);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn round_trip_bound(n in 1usize..=50, seed in any::<u64>()) {
            let a = random_spd(n, seed);
            let c = cholesky(&a).unwrap();
            let err = max_abs(&(c.reconstruct() - &a));
            prop_assert!(err <= 1e-8 * max_abs(&a));
            for i in 0..n {
                prop_assert!(c.lower()[(i, i)] > 0.0);
            }
        }
    }
}
