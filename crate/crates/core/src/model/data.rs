use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::Coordinates;

/// Response, covariates and locations for `n` sites.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    y: Vec<f64>,
    /// Row-major `n × p`.
    x: Vec<f64>,
    p: usize,
    coords: Coordinates,
    names: Option<Vec<String>>,
}

/// Column means and standard deviations removed by [`Dataset::standardized`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub y_mean: f64,
    pub y_sd: f64,
    pub x_mean: Vec<f64>,
    pub x_sd: Vec<f64>,
}

impl Dataset {
    pub fn new(
        y: Vec<f64>,
        x_row_major: Vec<f64>,
        p: usize,
        coords: Coordinates,
        names: Option<Vec<String>>,
    ) -> Result<Self> {
        let n = y.len();
        if n == 0 || p == 0 {
            return Err(Error::invalid("dataset needs at least one row and one covariate"));
        }
        if x_row_major.len() != n * p {
            return Err(Error::invalid(format!(
                "covariate matrix has {} entries, expected {n}×{p}",
                x_row_major.len()
            )));
        }
        if n < p {
            return Err(Error::invalid(format!("need n >= p, got n = {n}, p = {p}")));
        }
        if coords.len() != n {
            return Err(Error::invalid(format!(
                "{} coordinates for {n} observations",
                coords.len()
            )));
        }
        if let Some(names) = &names {
            if names.len() != n {
                return Err(Error::invalid("one name per location required"));
            }
        }
        if y.iter().chain(&x_row_major).any(|v| !v.is_finite()) {
            return Err(Error::invalid("response and covariates must be finite"));
        }
        for c in coords.iter() {
            c.validate()?;
        }
        Ok(Self {
            y,
            x: x_row_major,
            p,
            coords,
            names,
        })
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn x_row(&self, i: usize) -> &[f64] {
        &self.x[i * self.p..(i + 1) * self.p]
    }

    pub fn x_row_major(&self) -> &[f64] {
        &self.x
    }

    pub fn coords(&self) -> &Coordinates {
        &self.coords
    }

    pub fn names(&self) -> Option<&[String]> {
        self.names.as_deref()
    }

    /// Centre and scale `y` and every covariate column to mean 0, sample SD 1.
    pub fn standardized(&self) -> Result<(Dataset, Standardization)> {
        let n = self.n();
        if n < 2 {
            return Err(Error::InsufficientData("standardization needs n >= 2".into()));
        }
        let (y_mean, y_sd) = mean_sd(self.y.iter().copied(), n);
        if !(y_sd > 0.0) {
            return Err(Error::invalid("response is constant; cannot standardize"));
        }
        let mut x_mean = Vec::with_capacity(self.p);
        let mut x_sd = Vec::with_capacity(self.p);
        for j in 0..self.p {
            let (m, s) = mean_sd((0..n).map(|i| self.x[i * self.p + j]), n);
            if !(s > 0.0) {
                return Err(Error::invalid(format!("covariate x{} is constant", j + 1)));
            }
            x_mean.push(m);
            x_sd.push(s);
        }
        let y = self.y.iter().map(|v| (v - y_mean) / y_sd).collect();
        let x = self
            .x
            .iter()
            .enumerate()
            .map(|(k, v)| {
                let j = k % self.p;
                (v - x_mean[j]) / x_sd[j]
            })
            .collect();
        let data = Dataset {
            y,
            x,
            p: self.p,
            coords: self.coords.clone(),
            names: self.names.clone(),
        };
        Ok((
            data,
            Standardization {
                y_mean,
                y_sd,
                x_mean,
                x_sd,
            },
        ))
    }
}

impl Standardization {
    /// Coefficient `j` on the original scale of `y` and `x_j`.
    pub fn coefficient_to_raw(&self, j: usize, beta: f64) -> f64 {
        beta * self.y_sd / self.x_sd[j]
    }
}

fn mean_sd(values: impl Iterator<Item = f64> + Clone, n: usize) -> (f64, f64) {
    let mean = values.clone().sum::<f64>() / n as f64;
    let ss: f64 = values.map(|v| (v - mean).powi(2)).sum();
    (mean, (ss / (n as f64 - 1.0)).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::LonLat;

    fn coords(n: usize) -> Coordinates {
        Coordinates::new((0..n).map(|i| LonLat::new(i as f64, 0.0)).collect()).unwrap()
    }

    #[test]
    fn validates_shapes() {
        assert!(Dataset::new(vec![1.0, 2.0], vec![1.0; 4], 2, coords(2), None).is_ok());
        assert!(Dataset::new(vec![1.0, 2.0], vec![1.0; 3], 2, coords(2), None).is_err());
        assert!(Dataset::new(vec![1.0], vec![1.0; 2], 2, coords(1), None).is_err());
        assert!(Dataset::new(vec![1.0, 2.0], vec![1.0; 2], 1, coords(3), None).is_err());
        assert!(Dataset::new(vec![1.0, f64::NAN], vec![1.0; 2], 1, coords(2), None).is_err());
    }

    #[test]
    fn standardization_gives_unit_scale() {
        let y = vec![1.0, 2.0, 4.0, 8.0];
        let x = vec![1.0, 10.0, 2.0, 20.0, 3.0, 35.0, 4.0, 41.0];
        let d = Dataset::new(y, x, 2, coords(4), None).unwrap();
        let (s, stats) = d.standardized().unwrap();
        let (m, sd) = mean_sd(s.y().iter().copied(), 4);
        assert!(m.abs() < 1e-12 && (sd - 1.0).abs() < 1e-12);
        for j in 0..2 {
            let (m, sd) = mean_sd((0..4).map(|i| s.x_row(i)[j]), 4);
            assert!(m.abs() < 1e-12 && (sd - 1.0).abs() < 1e-12);
        }
        assert!((stats.x_mean[0] - 2.5).abs() < 1e-12);
    }
}
