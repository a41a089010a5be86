//! Least-squares clustering over posterior draws and per-cluster coefficient
//! summaries.

use serde::{Deserialize, Serialize};

use crate::chain::PosteriorDraws;
use crate::error::{Error, Result};
use crate::numerics::hpd_interval;

pub const HPD_LEVEL: f64 = 0.95;

/// `B(i, j) = 1(z_i = z_j)`, row-major `n × n`.
pub fn membership_matrix(z: &[u32]) -> Vec<u8> {
    let n = z.len();
    let mut b = vec![0u8; n * n];
    for i in 0..n {
        for j in 0..n {
            b[i * n + j] = u8::from(z[i] == z[j]);
        }
    }
    b
}

/// Output of least-squares clustering.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DahlResult {
    pub n: usize,
    /// Row-major `n × n` posterior co-clustering probabilities.
    pub coclustering: Vec<f64>,
    /// Zero-based index of the selected draw.
    pub selected: usize,
    /// Squared distance of every draw's membership matrix to the average.
    pub distances: Vec<f64>,
    /// Labels `1..=k`, numbered by decreasing cluster size.
    pub partition: Vec<u32>,
    pub k: usize,
}

impl DahlResult {
    pub fn coclustering_at(&self, i: usize, j: usize) -> f64 {
        self.coclustering[i * self.n + j]
    }

    /// Locations in final cluster `c` (one-based).
    pub fn members(&self, c: u32) -> Vec<usize> {
        (0..self.n).filter(|&i| self.partition[i] == c).collect()
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &c in &self.partition {
            sizes[c as usize - 1] += 1;
        }
        sizes
    }
}

/// Relabel a partition to `1..=k` by decreasing size, ties broken by first
/// appearance.
pub fn relabel_by_size(z: &[u32]) -> (Vec<u32>, usize) {
    let mut first_seen: Vec<(u32, usize, usize)> = Vec::new(); // (label, first index, size)
    for (i, &c) in z.iter().enumerate() {
        match first_seen.iter_mut().find(|e| e.0 == c) {
            Some(e) => e.2 += 1,
            None => first_seen.push((c, i, 1)),
        }
    }
    first_seen.sort_by(|a, b| b.2.cmp(&a.2).then(a.1.cmp(&b.1)));
    let k = first_seen.len();
    let relabeled = z
        .iter()
        .map(|c| first_seen.iter().position(|e| e.0 == *c).unwrap() as u32 + 1)
        .collect();
    (relabeled, k)
}

/// Least-squares clustering over an arbitrary set of partitions.
pub fn dahl_select_partitions(partitions: &[&[u32]]) -> Result<DahlResult> {
    let first = partitions
        .first()
        .ok_or_else(|| Error::InsufficientData("least-squares clustering needs a draw".into()))?;
    let n = first.len();
    if partitions.iter().any(|z| z.len() != n) {
        return Err(Error::invalid("partitions have different lengths"));
    }
    let mut counts = vec![0u32; n * n];
    for z in partitions {
        for i in 0..n {
            let zi = z[i];
            let row = &mut counts[i * n..(i + 1) * n];
            for (j, c) in row.iter_mut().enumerate() {
                *c += u32::from(zi == z[j]);
            }
        }
    }
    let total = partitions.len() as f64;
    let bbar: Vec<f64> = counts.iter().map(|&c| c as f64 / total).collect();

    let distances: Vec<f64> = partitions
        .iter()
        .map(|z| {
            let mut d = 0.0;
            for i in 0..n {
                let row = &bbar[i * n..(i + 1) * n];
                for (j, b) in row.iter().enumerate() {
                    let diff = if z[i] == z[j] { 1.0 - b } else { *b };
                    d += diff * diff;
                }
            }
            d
        })
        .collect();
    let mut selected = 0;
    for (c, &d) in distances.iter().enumerate() {
        if d < distances[selected] {
            selected = c;
        }
    }
    let (partition, k) = relabel_by_size(partitions[selected]);
    Ok(DahlResult {
        n,
        coclustering: bbar,
        selected,
        distances,
        partition,
        k,
    })
}

pub fn dahl_select(draws: &PosteriorDraws) -> Result<DahlResult> {
    let parts: Vec<&[u32]> = (0..draws.len()).map(|t| draws.labels(t)).collect();
    dahl_select_partitions(&parts)
}

/// How per-cluster coefficient samples are gathered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SummaryMode {
    /// Every draw contributes, for each member location, the coefficients of
    /// the cluster that location belongs to in that draw.
    #[default]
    Pooled,
    /// Only draws in which all members share one label contribute that
    /// label's coefficients.
    Matched,
    /// The coefficient rows of the selected draw alone (degenerate intervals).
    SelectedDraw,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterSummary {
    pub mode: SummaryMode,
    pub k: usize,
    pub p: usize,
    pub sizes: Vec<usize>,
    /// `k × p` posterior means.
    pub means: Vec<Vec<f64>>,
    /// `k × p` 95% HPD intervals.
    pub hpd: Vec<Vec<(f64, f64)>>,
    /// Samples pooled per cluster.
    pub samples: Vec<usize>,
}

pub fn summarize_clusters(
    draws: &PosteriorDraws,
    dahl: &DahlResult,
    mode: SummaryMode,
) -> Result<ClusterSummary> {
    if dahl.n != draws.n || dahl.selected >= draws.len() {
        return Err(Error::invalid("clustering result does not match the draws"));
    }
    let p = draws.p;
    let mut means = Vec::with_capacity(dahl.k);
    let mut hpd = Vec::with_capacity(dahl.k);
    let mut samples = Vec::with_capacity(dahl.k);
    for c in 1..=dahl.k as u32 {
        let members = dahl.members(c);
        let mut pooled: Vec<Vec<f64>> = vec![Vec::new(); p];
        match mode {
            SummaryMode::Pooled => {
                for t in 0..draws.len() {
                    for &i in &members {
                        for (j, v) in draws.location_beta(t, i).iter().enumerate() {
                            pooled[j].push(*v);
                        }
                    }
                }
            }
            SummaryMode::Matched => {
                for t in 0..draws.len() {
                    let labels = draws.labels(t);
                    let label = labels[members[0]];
                    if members.iter().all(|&i| labels[i] == label) {
                        for (j, v) in draws.beta_row(t, label as usize).iter().enumerate() {
                            pooled[j].push(*v);
                        }
                    }
                }
            }
            SummaryMode::SelectedDraw => {
                for (j, v) in draws.location_beta(dahl.selected, members[0]).iter().enumerate() {
                    pooled[j].push(*v);
                }
            }
        }
        if pooled[0].is_empty() {
            return Err(Error::InsufficientData(format!(
                "no coefficient samples for cluster {c}"
            )));
        }
        let mut mean_c = Vec::with_capacity(p);
        let mut hpd_c = Vec::with_capacity(p);
        for xs in &pooled {
            let mean = xs.iter().sum::<f64>() / xs.len() as f64;
            mean_c.push(mean);
            hpd_c.push(match mode {
                SummaryMode::SelectedDraw => (xs[0], xs[0]),
                _ => hpd_interval(xs, HPD_LEVEL).map_err(|e| match e {
                    Error::InsufficientData(m) => {
                        Error::InsufficientData(format!("cluster {c}: {m}"))
                    }
                    other => other,
                })?,
            });
        }
        samples.push(pooled[0].len());
        means.push(mean_c);
        hpd.push(hpd_c);
    }
    Ok(ClusterSummary {
        mode,
        k: dahl.k,
        p,
        sizes: dahl.sizes(),
        means,
        hpd,
        samples,
    })
}

impl ClusterSummary {
    /// Per-location coefficient estimates and intervals taken from each
    /// location's final cluster, row-major `n × p`.
    pub fn location_estimates(&self, dahl: &DahlResult) -> (Vec<f64>, Vec<(f64, f64)>) {
        let mut est = Vec::with_capacity(dahl.n * self.p);
        let mut ints = Vec::with_capacity(dahl.n * self.p);
        for &c in &dahl.partition {
            let c = c as usize - 1;
            est.extend_from_slice(&self.means[c]);
            ints.extend_from_slice(&self.hpd[c]);
        }
        (est, ints)
    }

    /// Text table: one row per cluster, estimate and HPD per coefficient.
    pub fn render_table(&self, names: &[String]) -> String {
        let mut out = String::new();
        out.push_str(&format!("{:<10}{:>6}", "cluster", "size"));
        for name in names {
            out.push_str(&format!("  {:>30}", name));
        }
        out.push('\n');
        for c in 0..self.k {
            out.push_str(&format!("{:<10}{:>6}", c + 1, self.sizes[c]));
            for j in 0..self.p {
                let (lo, hi) = self.hpd[c][j];
                let cell = format!("{:.3} ({:.3}, {:.3})", self.means[c][j], lo, hi);
                out.push_str(&format!("  {:>30}", cell));
            }
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn membership_examples() {
        assert_eq!(membership_matrix(&[1, 1, 2]), vec![1, 1, 0, 1, 1, 0, 0, 0, 1]);
        assert!(membership_matrix(&[4, 4, 4]).iter().all(|&b| b == 1));
        let id = membership_matrix(&[1, 2, 3]);
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(id[i * 3 + j], u8::from(i == j));
            }
        }
    }

    #[test]
    fn single_draw_is_selected() {
        let z = [3u32, 3, 7, 1];
        let r = dahl_select_partitions(&[&z]).unwrap();
        assert_eq!(r.selected, 0);
        assert_eq!(r.partition, vec![1, 1, 2, 3]);
        assert_eq!(r.k, 3);
    }

    #[test]
    fn identical_draws_tie_to_earliest() {
        let z = [0u32, 0, 1];
        let r = dahl_select_partitions(&[&z, &z, &z]).unwrap();
        assert_eq!(r.selected, 0);
        assert!(r.distances.iter().all(|&d| d == 0.0));
    }

    #[test]
    fn relabel_orders_by_size_then_first_seen() {
        let (z, k) = relabel_by_size(&[5, 2, 2, 9, 5, 2]);
        assert_eq!(z, vec![2, 1, 1, 3, 2, 1]);
        assert_eq!(k, 3);
    }

    #[test]
    fn empty_input_is_an_error() {
        assert!(dahl_select_partitions(&[]).is_err());
    }
}
