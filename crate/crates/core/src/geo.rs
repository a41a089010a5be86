//! Great-circle distances between point locations.

use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Equatorial radius in metres used by the `geosphere` routines.
pub const DEFAULT_RADIUS: f64 = 6_378_137.0;

/// Default maximum entry of a normalized distance matrix.
pub const DEFAULT_CAP: f64 = 10.0;

// Beyond this |cos(angle)| the law of cosines loses too many digits.
const COSINE_CUTOFF: f64 = 1.0 - 1e-6;

/// A point on the sphere in decimal degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LonLat {
    pub lon: f64,
    pub lat: f64,
}

impl LonLat {
    pub fn new(lon: f64, lat: f64) -> Self {
        Self { lon, lat }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.lon.is_finite() || !self.lat.is_finite() {
            return Err(Error::invalid(format!("non-finite coordinate {self:?}")));
        }
        if !(-180.0..=180.0).contains(&self.lon) {
            return Err(Error::invalid(format!("longitude {} out of range", self.lon)));
        }
        if !(-90.0..=90.0).contains(&self.lat) {
            return Err(Error::invalid(format!("latitude {} out of range", self.lat)));
        }
        Ok(())
    }
}

/// One coordinate pair per location.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Coordinates(pub Vec<LonLat>);

impl Coordinates {
    pub fn new(points: Vec<LonLat>) -> Result<Self> {
        for p in &points {
            p.validate()?;
        }
        Ok(Self(points))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &LonLat> {
        self.0.iter()
    }
}

/// Central angle in radians via the spherical law of cosines, switching to the
/// haversine form when the two points are nearly identical or antipodal.
fn central_angle(a: &LonLat, b: &LonLat) -> f64 {
    let (phi1, phi2) = (a.lat.to_radians(), b.lat.to_radians());
    let dlambda = (b.lon - a.lon).to_radians();
    let cos_angle = phi1.sin() * phi2.sin() + phi1.cos() * phi2.cos() * dlambda.cos();
    if cos_angle.abs() < COSINE_CUTOFF {
        return cos_angle.acos();
    }
    let dphi = phi2 - phi1;
    let h = (dphi / 2.0).sin().powi(2) + phi1.cos() * phi2.cos() * (dlambda / 2.0).sin().powi(2);
    let h = h.clamp(0.0, 1.0);
    2.0 * h.sqrt().atan2((1.0 - h).sqrt())
}

/// Distance along the great circle through `a` and `b`, in the unit of `radius`.
pub fn great_circle_distance(a: &LonLat, b: &LonLat, radius: f64) -> Result<f64> {
    a.validate()?;
    b.validate()?;
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::invalid(format!("radius must be positive, got {radius}")));
    }
    Ok(radius * central_angle(a, b))
}

/// Symmetric matrix of pairwise distances with zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    values: DMatrix<f64>,
}

impl DistanceMatrix {
    pub fn from_matrix(values: DMatrix<f64>) -> Result<Self> {
        if !values.is_square() {
            return Err(Error::invalid("distance matrix must be square"));
        }
        let n = values.nrows();
        for i in 0..n {
            if values[(i, i)] != 0.0 {
                return Err(Error::invalid("distance matrix must have zero diagonal"));
            }
            for j in 0..i {
                let d = values[(i, j)];
                if !d.is_finite() || d < 0.0 || d != values[(j, i)] {
                    return Err(Error::invalid(format!(
                        "distance matrix entry ({i}, {j}) is invalid or asymmetric"
                    )));
                }
            }
        }
        Ok(Self { values })
    }

    /// Raw pairwise great-circle distances in the unit of `radius`.
    pub fn raw(coords: &Coordinates, radius: f64) -> Result<Self> {
        let n = coords.len();
        let mut values = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..i {
                let d = great_circle_distance(&coords.0[i], &coords.0[j], radius)?;
                values[(i, j)] = d;
                values[(j, i)] = d;
            }
        }
        Ok(Self { values })
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[(i, j)]
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// Rescale so that the largest entry equals `cap`.
    pub fn normalized(&self, cap: f64) -> Result<Self> {
        if !(cap > 0.0 && cap.is_finite()) {
            return Err(Error::invalid(format!("cap must be positive, got {cap}")));
        }
        let max = self.max();
        if max <= 0.0 {
            return Err(Error::DegenerateGeometry(
                "all locations coincide; normalization is undefined".into(),
            ));
        }
        let scale = cap / max;
        let mut values = self.values.map(|d| d * scale);
        // Pin the maximum exactly to the cap regardless of rounding.
        for d in values.iter_mut() {
            if *d > cap {
                *d = cap;
            }
        }
        for (d, raw) in values.iter_mut().zip(self.values.iter()) {
            if *raw == max {
                *d = cap;
            }
        }
        Ok(Self { values })
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = std::io::BufWriter::new(file);
        let n = self.n();
        for i in 0..n {
            let row: Vec<String> = (0..n).map(|j| format!("{}", self.get(i, j))).collect();
            writeln!(out, "{}", row.join(",")).map_err(|e| Error::io(path, e))?;
        }
        out.flush().map_err(|e| Error::io(path, e))
    }
}

/// Pairwise great-circle distances rescaled so the largest equals `cap`.
pub fn build_distance_matrix(coords: &Coordinates, cap: f64) -> Result<DistanceMatrix> {
    if coords.len() < 2 {
        return Err(Error::invalid("need at least two locations"));
    }
    DistanceMatrix::raw(coords, DEFAULT_RADIUS)?.normalized(cap)
}
