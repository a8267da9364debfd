//! Distance operators and (re-)normalization.
//!
//! Raw data uses the averaged-by-dimension squared difference
//! `||a - b||^2 / k`. Once data has been unit-vector-normalized the division
//! by `k` is dropped and the plain squared norm is used instead. Callers pick
//! the semantics explicitly with [`NormMode`].

use alloc::vec::Vec;
use core::ops::Deref;

use crate::error::{Error, Result};

/// Semantics of the normalized squared difference.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormMode {
    /// `||a - b||^2 / k`, for raw (unnormalized) data.
    AveragedByK,
    /// `||a - b||^2`, for unit-vector-normalized data.
    UnitNorm,
}

/// Tolerance on `| ||v|| - 1 |` used when asserting unit norm.
pub const UNIT_NORM_TOL: f64 = 1e-9;

/// A dense, finite, non-empty real vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Vector(Vec<f64>);

impl Vector {
    pub fn new(elements: Vec<f64>) -> Result<Self> {
        if elements.is_empty() {
            return Err(Error::Empty("vector"));
        }
        if let Some(i) = elements.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Vector(elements))
    }

    pub fn zeros(k: usize) -> Self {
        assert!(k > 0, "vector dimension must be positive");
        Vector(alloc::vec![0.0; k])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn norm(&self) -> f64 {
        norm(&self.0)
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&x| x == 0.0)
    }

    /// Wraps values produced by this crate's own arithmetic on finite inputs.
    pub(crate) fn from_vec_unchecked(elements: Vec<f64>) -> Self {
        debug_assert!(!elements.is_empty());
        Vector(elements)
    }
}

impl Deref for Vector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl AsRef<[f64]> for Vector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for Vector {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Vector::new(v)
    }
}

/// Row-major `n x k` matrix of instances.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetMatrix {
    n: usize,
    k: usize,
    data: Vec<f64>,
}

impl DatasetMatrix {
    pub fn new(n: usize, k: usize, data: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::Empty("dataset rows"));
        }
        if k == 0 {
            return Err(Error::Empty("dataset dimension"));
        }
        if data.len() != n * k {
            return Err(Error::DimensionMismatch { expected: n * k, found: data.len() });
        }
        if let Some(i) = data.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite(i).at_row(i / k));
        }
        Ok(DatasetMatrix { n, k, data })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let first = rows.first().ok_or(Error::Empty("dataset rows"))?;
        let k = first.as_ref().len();
        let mut data = Vec::with_capacity(rows.len() * k);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != k {
                return Err(Error::DimensionMismatch { expected: k, found: r.len() }.at_row(i));
            }
            data.extend_from_slice(r);
        }
        DatasetMatrix::new(rows.len(), k, data)
    }

    pub(crate) fn from_parts_unchecked(n: usize, k: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), n * k);
        DatasetMatrix { n, k, data }
    }

    pub fn n_rows(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.k
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.k..(i + 1) * self.k]
    }

    pub fn rows(&self) -> core::slice::ChunksExact<'_, f64> {
        self.data.chunks_exact(self.k)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.data
    }

    /// Stacks the rows of several matrices of equal dimension.
    pub fn concat(parts: &[&DatasetMatrix]) -> Result<Self> {
        let first = parts.first().ok_or(Error::Empty("dataset parts"))?;
        let k = first.k;
        let mut data = Vec::new();
        let mut n = 0;
        for p in parts {
            if p.k != k {
                return Err(Error::DimensionMismatch { expected: k, found: p.k });
            }
            data.extend_from_slice(&p.data);
            n += p.n;
        }
        Ok(DatasetMatrix { n, k, data })
    }

    /// Selects a subset of rows by index.
    pub fn select(&self, idx: &[usize]) -> Result<Self> {
        if idx.is_empty() {
            return Err(Error::Empty("row selection"));
        }
        let mut data = Vec::with_capacity(idx.len() * self.k);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Ok(DatasetMatrix { n: idx.len(), k: self.k, data })
    }

    /// Unit-vector-normalizes every row.
    pub fn unit_normalized(&self) -> Result<Self> {
        let mut data = self.data.clone();
        for (i, row) in data.chunks_exact_mut(self.k).enumerate() {
            let nrm = norm(row);
            if nrm == 0.0 {
                return Err(Error::ZeroNorm.at_row(i));
            }
            row.iter_mut().for_each(|x| *x /= nrm);
        }
        Ok(DatasetMatrix { n: self.n, k: self.k, data })
    }

    /// Re-normalizes every row against `m`.
    pub fn renormalized(&self, m: &[f64]) -> Result<Self> {
        check_dim(self.k, m.len())?;
        let mut data = Vec::with_capacity(self.data.len());
        for (i, row) in self.rows().enumerate() {
            let shifted = renormalize_slice(row, m).map_err(|e| e.at_row(i))?;
            data.extend_from_slice(&shifted);
        }
        Ok(DatasetMatrix { n: self.n, k: self.k, data })
    }

    /// Per-dimension mean of the rows.
    pub fn mean(&self) -> Vector {
        let mut acc = alloc::vec![0.0; self.k];
        for row in self.rows() {
            for (a, x) in acc.iter_mut().zip(row) {
                *a += x;
            }
        }
        let inv = 1.0 / self.n as f64;
        acc.iter_mut().for_each(|a| *a *= inv);
        Vector::from_vec_unchecked(acc)
    }

    /// Returns the first row whose norm deviates from 1 by more than `tol`.
    pub fn check_unit_rows(&self, tol: f64) -> Result<()> {
        for (i, row) in self.rows().enumerate() {
            let nrm = norm(row);
            if (nrm - 1.0).abs() > tol {
                return Err(Error::NormViolation { row: i, norm: nrm });
            }
        }
        Ok(())
    }
}

fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        Err(Error::DimensionMismatch { expected, found })
    } else {
        Ok(())
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub(crate) fn norm(a: &[f64]) -> f64 {
    let s = dot(a, a);
    if s.is_finite() && s >= f64::MIN_POSITIVE {
        return libm::sqrt(s);
    }
    // Squares overflowed or underflowed: rescale by the largest magnitude.
    let big = a.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if big == 0.0 || !big.is_finite() {
        return big;
    }
    big * libm::sqrt(a.iter().map(|x| (x / big) * (x / big)).sum::<f64>())
}

/// `||a - b||^2` without dimension checks.
#[inline]
pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = x - y;
            d * d
        })
        .sum()
}

/// Normalized squared difference `d^2(a - b)`.
pub fn nsd(a: &[f64], b: &[f64], mode: NormMode) -> Result<f64> {
    check_dim(a.len(), b.len())?;
    let s = sq_dist(a, b);
    Ok(match mode {
        NormMode::AveragedByK => s / a.len() as f64,
        NormMode::UnitNorm => s,
    })
}

/// Divides `f` by its l2 norm.
pub fn unit_normalize(f: &[f64]) -> Result<Vector> {
    if f.is_empty() {
        return Err(Error::Empty("vector"));
    }
    let nrm = norm(f);
    if nrm == 0.0 {
        return Err(Error::ZeroNorm);
    }
    if !nrm.is_finite() {
        return Err(Error::NonFinite(f.iter().position(|x| !x.is_finite()).unwrap_or(0)));
    }
    Ok(Vector::from_vec_unchecked(f.iter().map(|x| x / nrm).collect()))
}

fn renormalize_slice(f: &[f64], m: &[f64]) -> Result<Vec<f64>> {
    let mut shifted: Vec<f64> = f.iter().zip(m).map(|(a, b)| a - b).collect();
    let nrm = norm(&shifted);
    if nrm == 0.0 {
        return Err(Error::DegenerateRenormalization);
    }
    shifted.iter_mut().for_each(|x| *x /= nrm);
    Ok(shifted)
}

/// Translates `f` by `-m` and unit-normalizes the result.
pub fn renormalize(f: &[f64], m: &[f64]) -> Result<Vector> {
    check_dim(f.len(), m.len())?;
    if f.is_empty() {
        return Err(Error::Empty("vector"));
    }
    renormalize_slice(f, m).map(Vector::from_vec_unchecked)
}

/// Multiplies `f` by a positive scalar.
pub fn scale_perturb(f: &[f64], s: f64) -> Result<Vector> {
    if !(s > 0.0 && s.is_finite()) {
        return Err(Error::invalid("s", "scale must be positive and finite"));
    }
    Vector::new(f.iter().map(|x| x * s).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn nsd_examples() {
        assert_eq!(nsd(&[1.0, 1.0, 1.0, 1.0], &[0.0; 4], NormMode::AveragedByK).unwrap(), 1.0);
        assert_eq!(nsd(&[1.0, 0.0], &[0.0, 1.0], NormMode::UnitNorm).unwrap(), 2.0);
        let a = [0.3, -1.2, 7.0];
        assert_eq!(nsd(&a, &a, NormMode::AveragedByK).unwrap(), 0.0);
        assert_eq!(nsd(&a, &a, NormMode::UnitNorm).unwrap(), 0.0);
        assert!(matches!(
            nsd(&[1.0], &[1.0, 2.0], NormMode::UnitNorm),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn unit_normalize_examples() {
        let u = unit_normalize(&[3.0, 4.0]).unwrap();
        assert!((u[0] - 0.6).abs() < 1e-15 && (u[1] - 0.8).abs() < 1e-15);
        let again = unit_normalize(&u).unwrap();
        assert!(again.iter().zip(u.iter()).all(|(a, b)| (a - b).abs() < 1e-15));
        assert_eq!(unit_normalize(&[0.0, 0.0]), Err(Error::ZeroNorm));
    }

    #[test]
    fn extreme_magnitudes_normalize() {
        for scale in [1e-200, 6e179, f64::MAX / 8.0] {
            let u = unit_normalize(&[3.0 * scale, 4.0 * scale]).unwrap();
            assert!((u[0] - 0.6).abs() < 1e-15 && (u[1] - 0.8).abs() < 1e-15, "{scale}: {u:?}");
        }
    }

    #[test]
    fn renormalize_examples() {
        assert_eq!(renormalize(&[0.0, 1.0], &[0.0, 0.0]).unwrap().as_slice(), &[0.0, 1.0]);
        assert_eq!(renormalize(&[0.0, 1.0], &[0.0, -1.0]).unwrap().as_slice(), &[0.0, 1.0]);
        assert_eq!(renormalize(&[0.5, 1.0], &[0.5, 1.0]), Err(Error::DegenerateRenormalization));
    }

    #[test]
    fn scale_perturb_examples() {
        assert_eq!(scale_perturb(&[3.0, 4.0], 2.0).unwrap().as_slice(), &[6.0, 8.0]);
        assert_eq!(unit_normalize(&[6.0, 8.0]).unwrap(), unit_normalize(&[3.0, 4.0]).unwrap());
        assert_eq!(scale_perturb(&[3.0, 4.0], 1.0).unwrap().as_slice(), &[3.0, 4.0]);
        assert!(scale_perturb(&[3.0, 4.0], 0.0).is_err());
        assert!(scale_perturb(&[3.0, 4.0], -1.0).is_err());
    }

    #[test]
    fn right_triangle_is_exact_for_orthogonal_legs() {
        // (mu_c - mu_p) is orthogonal to (mu_p - c) by construction.
        let mu_p = [1.0, 2.0, -1.0, 0.5];
        let c = [1.0, 2.0, 3.0, 0.5];
        let mu_c = [4.0, 2.0, -1.0, -1.5];
        for mode in [NormMode::AveragedByK, NormMode::UnitNorm] {
            let hyp = nsd(&mu_c, &c, mode).unwrap();
            let legs = nsd(&mu_p, &c, mode).unwrap() + nsd(&mu_c, &mu_p, mode).unwrap();
            assert_eq!(hyp, legs);
        }
    }

    #[test]
    fn dataset_validation() {
        assert!(DatasetMatrix::new(2, 2, vec![1.0, 0.0, 0.0]).is_err());
        assert!(DatasetMatrix::new(1, 2, vec![1.0, f64::NAN]).is_err());
        let d = DatasetMatrix::from_rows(&[[2.0, 0.0], [0.0, 1.0]]).unwrap();
        assert!(matches!(d.check_unit_rows(1e-6), Err(Error::NormViolation { row: 0, .. })));
        d.unit_normalized().unwrap().check_unit_rows(1e-12).unwrap();
        assert_eq!(d.mean().as_slice(), &[1.0, 0.5]);
    }
}
