//! Synthetic data for the null, random-cluster and regional-cluster
//! scenarios, and the replicate-study driver.

use std::io::Read;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::assess::{
    assess_fit, rand_index, replicate_metrics, CoverageMode, ReplicateInputs, ReplicateMetrics,
};
use crate::chain::run_chain;
use crate::error::{Error, Result};
use crate::geo::{build_distance_matrix, Coordinates, DistanceMatrix, LonLat};
use crate::model::{kernel_matrix, Dataset, ModelConfig, Scheme};
use crate::numerics::{cholesky, standard_normal, Cholesky, RngStream};
use crate::posterior::{dahl_select, summarize_clusters, SummaryMode};

/// Number of covariates in every generated design.
pub const P: usize = 6;

/// Single coefficient vectors of the null scenario, by setting.
pub const NULL_BETAS: [[f64; P]; 3] = [
    [1.0, 0.0, 1.0, 0.0, 0.5, 2.0],
    [2.0, 0.0, 1.0, 0.0, 4.0, 2.0],
    [9.0, 0.0, -4.0, 0.0, 2.0, 5.0],
];

/// Three cluster coefficient vectors per setting for the clustered scenarios.
pub const CLUSTER_BETAS: [[[f64; P]; 3]; 3] = [
    [
        [1.0, 0.0, 1.0, 0.0, 0.5, 2.0],
        [1.0, 0.7, 0.3, 2.0, 0.0, 3.0],
        [2.0, 1.0, 0.8, 1.0, 0.0, 1.0],
    ],
    [
        [2.0, 0.0, 1.0, 0.0, 4.0, 2.0],
        [1.0, 0.0, 3.0, 2.0, 0.0, 3.0],
        [4.0, 1.0, 0.0, 3.0, 0.0, 1.0],
    ],
    [
        [9.0, 0.0, -4.0, 0.0, 2.0, 5.0],
        [1.0, 7.0, 3.0, 6.0, 0.0, -1.0],
        [2.0, 0.0, 6.0, 1.0, 7.0, 0.0],
    ],
];

/// Cluster sizes of the random-cluster scenario on 159 locations.
pub const RANDOM_CLUSTER_SIZES: [usize; 3] = [51, 49, 59];

const BUNDLED_CENTROIDS: &str = include_str!("../data/georgia_synthetic_centroids.csv");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    Null,
    RandomClusters,
    RegionalClusters,
}

impl Scenario {
    pub fn name(&self) -> &'static str {
        match self {
            Scenario::Null => "null",
            Scenario::RandomClusters => "random-clusters",
            Scenario::RegionalClusters => "regional-clusters",
        }
    }
}

fn default_phi_true() -> f64 {
    4.0
}
fn default_cap() -> f64 {
    crate::geo::DEFAULT_CAP
}
fn one() -> f64 {
    1.0
}
fn default_replicates() -> usize {
    10
}

/// Everything needed to generate a family of synthetic datasets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub scenario: Scenario,
    pub setting: u8,
    /// Range of the exponential kernel generating `w`.
    #[serde(default = "default_phi_true")]
    pub phi_true: f64,
    #[serde(default = "default_cap")]
    pub distance_cap: f64,
    /// Zero switches the spatial effect off.
    #[serde(default = "one")]
    pub gp_variance: f64,
    /// Zero switches the observation noise off.
    #[serde(default = "one")]
    pub noise_variance: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    /// CSV with `lon` and `lat` columns; the bundled centroids when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coordinates: Option<PathBuf>,
    #[serde(default)]
    pub summary_mode: SummaryMode,
    #[serde(default)]
    pub coverage: CoverageMode,
}

impl ScenarioSpec {
    pub fn new(scenario: Scenario, setting: u8) -> Self {
        Self {
            scenario,
            setting,
            phi_true: default_phi_true(),
            distance_cap: default_cap(),
            gp_variance: 1.0,
            noise_variance: 1.0,
            seed: 0,
            replicates: default_replicates(),
            coordinates: None,
            summary_mode: SummaryMode::default(),
            coverage: CoverageMode::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=3).contains(&self.setting) {
            return Err(Error::invalid(format!(
                "setting must be 1, 2 or 3, got {}",
                self.setting
            )));
        }
        if !(self.phi_true > 0.0 && self.phi_true.is_finite()) {
            return Err(Error::invalid("phi_true must be positive"));
        }
        if !(self.distance_cap > 0.0 && self.distance_cap.is_finite()) {
            return Err(Error::invalid("distance_cap must be positive"));
        }
        if !(self.gp_variance >= 0.0 && self.noise_variance >= 0.0) {
            return Err(Error::invalid("variances must be non-negative"));
        }
        Ok(())
    }

    /// The distinct true coefficient vectors, indexed by zero-based cluster.
    pub fn true_betas(&self) -> Result<Vec<[f64; P]>> {
        self.validate()?;
        let s = self.setting as usize - 1;
        Ok(match self.scenario {
            Scenario::Null => vec![NULL_BETAS[s]],
            _ => CLUSTER_BETAS[s].to_vec(),
        })
    }

    pub fn coordinates(&self) -> Result<Coordinates> {
        match &self.coordinates {
            Some(path) => read_coordinates_csv(path),
            None => bundled_centroids(),
        }
    }

    pub fn label(&self) -> String {
        format!("{} s{}", self.scenario.name(), self.setting)
    }
}

/// The 159 bundled synthetic centroids.
pub fn bundled_centroids() -> Result<Coordinates> {
    parse_coordinates_csv(BUNDLED_CENTROIDS.as_bytes())
}

pub fn read_coordinates_csv(path: &Path) -> Result<Coordinates> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_coordinates_csv(file)
}

/// Reads `lon` and `lat` columns; other columns are ignored.
pub fn parse_coordinates_csv<R: Read>(reader: R) -> Result<Coordinates> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| Error::Ingestion { row: 0, column: String::new(), message: e.to_string() })?
        .clone();
    let find = |name: &str| {
        headers.iter().position(|h| h == name).ok_or_else(|| Error::Ingestion {
            row: 0,
            column: name.into(),
            message: "missing column".into(),
        })
    };
    let (ilon, ilat) = (find("lon")?, find("lat")?);
    let mut points = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let row = k + 1;
        let rec = rec.map_err(|e| Error::Ingestion { row, column: String::new(), message: e.to_string() })?;
        let cell = |i: usize, name: &str| -> Result<f64> {
            rec.get(i).unwrap_or("").parse::<f64>().map_err(|_| Error::Ingestion {
                row,
                column: name.into(),
                message: format!("not a number: {:?}", rec.get(i).unwrap_or("")),
            })
        };
        let point = LonLat::new(cell(ilon, "lon")?, cell(ilat, "lat")?);
        point.validate().map_err(|e| Error::Ingestion {
            row,
            column: "lon/lat".into(),
            message: e.to_string(),
        })?;
        points.push(point);
    }
    if points.is_empty() {
        return Err(Error::Ingestion { row: 0, column: String::new(), message: "no rows".into() });
    }
    Coordinates::new(points)
}

/// Cluster sizes for `n` locations in the proportions 51 : 49 : 59.
pub fn random_cluster_sizes(n: usize) -> Result<[usize; 3]> {
    if n < 3 {
        return Err(Error::invalid("three clusters need at least three locations"));
    }
    let total: usize = RANDOM_CLUSTER_SIZES.iter().sum();
    let a = (n * RANDOM_CLUSTER_SIZES[0] + total / 2) / total;
    let b = (n * RANDOM_CLUSTER_SIZES[1] + total / 2) / total;
    let sizes = [a.max(1), b.max(1), n - a.max(1) - b.max(1)];
    if sizes[2] == 0 {
        return Err(Error::invalid("too few locations for three clusters"));
    }
    Ok(sizes)
}

/// One-based labels from a seeded permutation of the locations.
pub fn random_partition<R: rand::Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Vec<u32>> {
    let sizes = random_cluster_sizes(n)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut z = vec![0u32; n];
    let mut start = 0;
    for (c, &size) in sizes.iter().enumerate() {
        for &i in &order[start..start + size] {
            z[i] = c as u32 + 1;
        }
        start += size;
    }
    Ok(z)
}

/// Three latitude bands, south to north, with sizes as equal as possible.
/// Ties are broken by longitude then by row order.
pub fn regional_partition(coords: &Coordinates) -> Result<Vec<u32>> {
    let n = coords.len();
    if n < 3 {
        return Err(Error::invalid("three regions need at least three locations"));
    }
    let pts = &coords.0;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        pts[a]
            .lat
            .total_cmp(&pts[b].lat)
            .then(pts[a].lon.total_cmp(&pts[b].lon))
            .then(a.cmp(&b))
    });
    let mut z = vec![0u32; n];
    for (rank, &i) in order.iter().enumerate() {
        z[i] = (rank * 3 / n) as u32 + 1;
    }
    Ok(z)
}

/// The parts of a scenario fixed across replicates: locations, true labels,
/// coefficient vectors and the factor of the generating covariance.
#[derive(Debug, Clone)]
pub struct SimulationDesign {
    pub spec: ScenarioSpec,
    pub coords: Coordinates,
    pub distances: Arc<DistanceMatrix>,
    /// One-based true labels.
    pub z_true: Vec<u32>,
    pub betas: Vec<[f64; P]>,
    gp_chol: Option<Cholesky>,
}

/// One synthetic dataset with its generating values.
#[derive(Debug, Clone)]
pub struct GeneratedData {
    pub dataset: Dataset,
    /// Row-major `n × p` true coefficients per location.
    pub beta_true: Vec<f64>,
    pub z_true: Vec<u32>,
    pub w: Vec<f64>,
}

impl SimulationDesign {
    /// Random-cluster labels are drawn from `rng`; nothing else is random.
    pub fn new<R: rand::Rng + ?Sized>(spec: &ScenarioSpec, rng: &mut R) -> Result<Self> {
        let coords = spec.coordinates()?;
        Self::with_coordinates(spec, coords, rng)
    }

    pub fn with_coordinates<R: rand::Rng + ?Sized>(
        spec: &ScenarioSpec,
        coords: Coordinates,
        rng: &mut R,
    ) -> Result<Self> {
        let betas = spec.true_betas()?;
        let n = coords.len();
        if n < P {
            return Err(Error::invalid(format!("need at least {P} locations, got {n}")));
        }
        let distances = Arc::new(build_distance_matrix(&coords, spec.distance_cap)?);
        let z_true = match spec.scenario {
            Scenario::Null => vec![1; n],
            Scenario::RandomClusters => random_partition(n, rng)?,
            Scenario::RegionalClusters => regional_partition(&coords)?,
        };
        let gp_chol = if spec.gp_variance > 0.0 {
            let h = kernel_matrix(&distances, Scheme::Exponential, spec.phi_true)?;
            Some(cholesky(&(h * spec.gp_variance))?)
        } else {
            None
        };
        Ok(Self {
            spec: spec.clone(),
            coords,
            distances,
            z_true,
            betas,
            gp_chol,
        })
    }

    pub fn n(&self) -> usize {
        self.coords.len()
    }

    pub fn beta_true(&self) -> Vec<f64> {
        self.z_true
            .iter()
            .flat_map(|&c| self.betas[c as usize - 1])
            .collect()
    }

    /// `w ~ MVN(0, σ²_w exp(−d/φ*))`, zero when the spatial effect is off.
    pub fn sample_w<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let n = self.n();
        match &self.gp_chol {
            Some(chol) => {
                let z: Vec<f64> = (0..n).map(|_| standard_normal(rng)).collect();
                chol.mul_lower(&z).expect("dimension fixed by construction")
            }
            None => vec![0.0; n],
        }
    }

    /// `y = Xβ + w + ε` with `X` entries i.i.d. standard normal.
    pub fn generate<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> Result<GeneratedData> {
        let n = self.n();
        let x: Vec<f64> = (0..n * P).map(|_| standard_normal(rng)).collect();
        let w = self.sample_w(rng);
        let sd = self.spec.noise_variance.sqrt();
        let beta_true = self.beta_true();
        let y: Vec<f64> = (0..n)
            .map(|i| {
                let xb: f64 = x[i * P..(i + 1) * P]
                    .iter()
                    .zip(&beta_true[i * P..(i + 1) * P])
                    .map(|(a, b)| a * b)
                    .sum();
                let eps = if sd > 0.0 { sd * standard_normal(rng) } else { 0.0 };
                xb + w[i] + eps
            })
            .collect();
        let dataset = Dataset::new(y, x, P, self.coords.clone(), None)?;
        Ok(GeneratedData {
            dataset,
            beta_true,
            z_true: self.z_true.clone(),
            w,
        })
    }
}

/// Builds the design from `rng` and then draws one dataset from it.
pub fn generate_dataset(spec: &ScenarioSpec, rng: &mut RngStream) -> Result<GeneratedData> {
    let design = SimulationDesign::new(spec, rng)?;
    design.generate(rng)
}

/// Per-replicate results kept for the study directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateOutcome {
    pub index: usize,
    pub k: usize,
    pub rand_index: f64,
    pub lpml: f64,
    pub p_d: f64,
    pub phi_acceptance: Option<f64>,
    pub wall_clock_secs: f64,
    /// One-based estimated labels.
    pub partition: Vec<u32>,
    /// Row-major `n × p`.
    pub estimates: Vec<f64>,
    pub hpd: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateFailure {
    pub index: usize,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    pub spec: ScenarioSpec,
    pub fit: ModelConfig,
    pub metrics: ReplicateMetrics,
    pub outcomes: Vec<ReplicateOutcome>,
    pub failures: Vec<ReplicateFailure>,
    pub z_true: Vec<u32>,
    pub wall_clock_secs: f64,
}

impl StudyReport {
    pub fn render_table(&self) -> String {
        let mut out = format!(
            "{} replicates ({} failed), n = {}, chain {}/{}/{}, scheme {}\n",
            self.spec.replicates,
            self.failures.len(),
            self.z_true.len(),
            self.fit.n_iter,
            self.fit.thin,
            self.fit.burn_in,
            self.fit.scheme
        );
        out.push_str(&self.metrics.render_table(&self.spec.label()));
        out
    }
}

/// Fits one generated dataset and extracts the quantities the study needs.
pub fn fit_replicate(
    index: usize,
    generated: &GeneratedData,
    fit: &ModelConfig,
    mode: SummaryMode,
    rng: RngStream,
) -> Result<ReplicateOutcome> {
    let data = &generated.dataset;
    let draws = run_chain(fit, data, rng)?;
    let dahl = dahl_select(&draws)?;
    let summary = summarize_clusters(&draws, &dahl, mode)?;
    let (estimates, hpd) = summary.location_estimates(&dahl);
    let report = assess_fit(&draws, data, &dahl, &summary)?;
    let d = &draws.diagnostics;
    Ok(ReplicateOutcome {
        index,
        k: dahl.k,
        rand_index: rand_index(&dahl.partition, &generated.z_true)?,
        lpml: report.lpml,
        p_d: report.p_d,
        phi_acceptance: (d.phi_proposed > 0).then(|| d.phi_accepted as f64 / d.phi_proposed as f64),
        wall_clock_secs: d.wall_clock_secs,
        partition: dahl.partition,
        estimates,
        hpd,
    })
}

/// Generates and fits `spec.replicates` datasets in parallel.
///
/// The design (random-cluster labels) comes from `master.split(0)`; replicate
/// `r` generates from `master.split(r + 1).split(0)` and fits with
/// `.split(1)`. A failed replicate is recorded and dropped; the study fails if
/// more than 10% of replicates fail or fewer than two succeed.
pub fn run_replicate_study(
    spec: &ScenarioSpec,
    fit: &ModelConfig,
    master: &RngStream,
) -> Result<StudyReport> {
    let started = Instant::now();
    spec.validate()?;
    fit.validate()?;
    let r = spec.replicates;
    if r < 2 {
        return Err(Error::InsufficientData(format!(
            "a replicate study needs R >= 2 for the standard deviation, got {r}"
        )));
    }
    let design = SimulationDesign::new(spec, &mut master.split(0))?;
    let results: Vec<Result<ReplicateOutcome>> = (0..r)
        .into_par_iter()
        .map(|k| {
            let stream = master.split(k as u64 + 1);
            let generated = design.generate(&mut stream.split(0))?;
            fit_replicate(k, &generated, fit, spec.summary_mode, stream.split(1))
        })
        .collect();
    let mut outcomes = Vec::with_capacity(r);
    let mut failures = Vec::new();
    for (index, res) in results.into_iter().enumerate() {
        match res {
            Ok(o) => outcomes.push(o),
            Err(e) => failures.push(ReplicateFailure { index, error: e.to_string() }),
        }
    }
    if failures.len() * 10 > r || outcomes.len() < 2 {
        return Err(Error::NumericalDegeneracy(format!(
            "{} of {r} replicates failed; first: replicate {}: {}",
            failures.len(),
            failures[0].index,
            failures[0].error
        )));
    }
    let inputs = ReplicateInputs {
        n: design.n(),
        p: P,
        estimates: outcomes.iter().map(|o| o.estimates.clone()).collect(),
        hpds: outcomes.iter().map(|o| o.hpd.clone()).collect(),
        truths: design.beta_true(),
        partitions: outcomes.iter().map(|o| o.partition.clone()).collect(),
        true_partition: design.z_true.clone(),
    };
    let metrics = replicate_metrics(&inputs, spec.coverage)?;
    Ok(StudyReport {
        spec: spec.clone(),
        fit: fit.clone(),
        metrics,
        outcomes,
        failures,
        z_true: design.z_true,
        wall_clock_secs: started.elapsed().as_secs_f64(),
    })
}
