//! Deterministic checks of the small exact routines against brute-force
//! oracles written independently here.

use std::f64::consts::PI;

use geodpm::assess::{compute_cpo_lpml, rand_index};
use geodpm::chain::LogLikMatrix;
use geodpm::geo::{build_distance_matrix, great_circle_distance, Coordinates, LonLat, DEFAULT_RADIUS};
use geodpm::numerics::{hpd_interval, RngStream};
use geodpm::posterior::{dahl_select_partitions, membership_matrix};
use rand::Rng;

use super::Check;

const TOL: f64 = 1e-8;

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1.0)
}

/// Haversine distance in the form usually printed in textbooks.
pub fn haversine(a: LonLat, b: LonLat, r: f64) -> f64 {
    let (p1, p2) = (a.lat.to_radians(), b.lat.to_radians());
    let dp = p2 - p1;
    let dl = (b.lon - a.lon).to_radians();
    let h = (dp / 2.0).sin().powi(2) + p1.cos() * p2.cos() * (dl / 2.0).sin().powi(2);
    2.0 * r * h.sqrt().asin()
}

/// Rand index from the contingency table, exact in integers.
fn rand_index_table(z1: &[u32], z2: &[u32]) -> f64 {
    let n = z1.len() as i64;
    let mut table = std::collections::HashMap::new();
    let mut rows = std::collections::HashMap::new();
    let mut cols = std::collections::HashMap::new();
    for (a, b) in z1.iter().zip(z2) {
        *table.entry((a, b)).or_insert(0i64) += 1;
        *rows.entry(a).or_insert(0i64) += 1;
        *cols.entry(b).or_insert(0i64) += 1;
    }
    let sq = |m: &dyn Fn() -> Vec<i64>| m().iter().map(|v| v * v).sum::<i64>();
    let nij = sq(&|| table.values().cloned().collect());
    let ai = sq(&|| rows.values().cloned().collect());
    let bj = sq(&|| cols.values().cloned().collect());
    let pairs = n * (n - 1) / 2;
    // agreements = pairs + Σn_ij² − (Σa_i² + Σb_j²)/2
    (2 * pairs + 2 * nij - ai - bj) as f64 / (2 * pairs) as f64
}

pub fn rand_index_checks() -> Vec<Check> {
    let mut out = vec![
        Check::new("RI identical", rand_index(&[1, 1, 2, 3], &[5, 5, 6, 7]).unwrap() == 1.0, "1"),
        Check::new("RI (1,1,1) vs (1,2,3)", rand_index(&[1, 1, 1], &[1, 2, 3]).unwrap() == 0.0, "0"),
        Check::new(
            "RI (1,1,2) vs (1,2,2)",
            close(rand_index(&[1, 1, 2], &[1, 2, 2]).unwrap(), 1.0 / 3.0, 1e-15),
            "1/3",
        ),
        Check::new("RI length mismatch", rand_index(&[1, 2], &[1, 2, 3]).is_err(), "error"),
    ];
    let mut rng = RngStream::new(31);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let n = rng.random_range(2..40);
        let z1: Vec<u32> = (0..n).map(|_| rng.random_range(0..4)).collect();
        let z2: Vec<u32> = (0..n).map(|_| rng.random_range(0..5)).collect();
        worst = worst.max((rand_index(&z1, &z2).unwrap() - rand_index_table(&z1, &z2)).abs());
    }
    out.push(Check::new("RI vs contingency table", worst <= 1e-12, format!("max error {worst:.1e}")));
    out
}

pub fn membership_checks() -> Vec<Check> {
    let b = membership_matrix(&[1, 1, 2]);
    let ones = membership_matrix(&[4; 5]);
    let ident = membership_matrix(&[0, 1, 2, 3]);
    vec![
        Check::new("membership (1,1,2)", b == vec![1, 1, 0, 1, 1, 0, 0, 0, 1], format!("{b:?}")),
        Check::new("membership all equal", ones.iter().all(|&v| v == 1), "all ones"),
        Check::new(
            "membership all distinct",
            (0..4).all(|i| (0..4).all(|j| ident[i * 4 + j] == u8::from(i == j))),
            "identity",
        ),
    ]
}

/// Squared Frobenius distances to the average membership matrix, by brute force.
fn dahl_oracle(parts: &[Vec<u32>]) -> (Vec<f64>, usize) {
    let n = parts[0].len();
    let t = parts.len() as f64;
    let same = |z: &Vec<u32>, i: usize, j: usize| if z[i] == z[j] { 1.0 } else { 0.0 };
    let avg = |i: usize, j: usize| parts.iter().map(|z| same(z, i, j)).sum::<f64>() / t;
    let d: Vec<f64> = parts
        .iter()
        .map(|z| {
            let mut s = 0.0;
            for i in 0..n {
                for j in 0..n {
                    s += (same(z, i, j) - avg(i, j)).powi(2);
                }
            }
            s
        })
        .collect();
    let mut best = 0;
    for (k, v) in d.iter().enumerate() {
        if *v < d[best] {
            best = k;
        }
    }
    (d, best)
}

pub fn dahl_checks() -> Vec<Check> {
    let mut out = Vec::new();
    let single = dahl_select_partitions(&[&[0, 0, 1, 2]]).unwrap();
    out.push(Check::new(
        "Dahl single draw",
        single.selected == 0 && single.distances[0] == 0.0 && single.partition == vec![1, 1, 2, 3],
        format!("{:?}", single.partition),
    ));
    let same = dahl_select_partitions(&[&[3, 3, 1], &[3, 3, 1], &[3, 3, 1]]).unwrap();
    out.push(Check::new(
        "Dahl shared partition",
        same.selected == 0 && same.distances.iter().all(|&d| d == 0.0),
        "distance 0, first draw",
    ));
    let parts = vec![vec![0, 0, 1, 1], vec![0, 0, 0, 1], vec![0, 1, 1, 1]];
    let refs: Vec<&[u32]> = parts.iter().map(|p| p.as_slice()).collect();
    let r = dahl_select_partitions(&refs).unwrap();
    let (d, best) = dahl_oracle(&parts);
    let worst = r.distances.iter().zip(&d).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    out.push(Check::new(
        "Dahl 3 draws over 4 items",
        worst <= TOL && r.selected == best,
        format!("distances {:?}, selected {}", r.distances, r.selected),
    ));
    let mut rng = RngStream::new(8);
    let mut ok = true;
    for _ in 0..50 {
        let parts: Vec<Vec<u32>> = (0..rng.random_range(1..12))
            .map(|_| (0..7).map(|_| rng.random_range(0..3)).collect())
            .collect();
        let refs: Vec<&[u32]> = parts.iter().map(|p| p.as_slice()).collect();
        let r = dahl_select_partitions(&refs).unwrap();
        let (d, best) = dahl_oracle(&parts);
        ok &= r.selected == best && r.distances.iter().zip(&d).all(|(a, b)| (a - b).abs() <= TOL);
    }
    out.push(Check::new("Dahl random draws", ok, "50 random draw sets"));
    out
}

pub fn cpo_checks() -> Vec<Check> {
    let mut out = Vec::new();
    let c = compute_cpo_lpml(&LogLikMatrix::from_rows(2, vec![-1.5, -0.5, -1.5, -0.5]).unwrap()).unwrap();
    out.push(Check::new(
        "CPO constant loglik",
        close(c.cpo[0], (-1.5f64).exp(), 1e-15) && close(c.lpml, -2.0, 1e-15),
        format!("LPML {}", c.lpml),
    ));
    let c = compute_cpo_lpml(&LogLikMatrix::from_rows(1, vec![-1.0, -3.0]).unwrap()).unwrap();
    let want = 2.0 / (1f64.exp() + 3f64.exp());
    out.push(Check::new("CPO two draws", close(c.cpo[0], want, 1e-15), format!("{} vs {want}", c.cpo[0])));
    let rows = vec![-0.3, -1.1, -2.4, -0.9, -0.2, -3.0, -1.7, -0.6, -0.8, -0.4, -1.3, -2.2];
    let c = compute_cpo_lpml(&LogLikMatrix::from_rows(3, rows.clone()).unwrap()).unwrap();
    let (t, n) = (rows.len() / 3, 3);
    let mut lpml = 0.0;
    let mut worst: f64 = 0.0;
    for i in 0..n {
        let mut s = 0.0;
        for k in 0..t {
            s += (-rows[k * n + i]).exp();
        }
        let cpo = t as f64 / s;
        worst = worst.max((cpo - c.cpo[i]).abs());
        lpml += cpo.ln();
    }
    out.push(Check::new(
        "CPO naive loop",
        worst <= 1e-12 && (lpml - c.lpml).abs() <= 1e-12,
        format!("max error {worst:.1e}"),
    ));
    out
}

/// Narrowest interval between two order statistics holding at least
/// `⌈level·m⌉ + 1` samples, found by scanning every pair.
fn hpd_oracle(samples: &[f64], level: f64) -> (f64, f64) {
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let m = s.len();
    let k = ((level * m as f64).ceil() as usize).min(m - 1);
    let mut best = (0, m - 1);
    for i in 0..m {
        for j in i..m {
            if j - i >= k && s[j] - s[i] < s[best.1] - s[best.0] {
                best = (i, j);
            }
        }
    }
    (s[best.0], s[best.1])
}

pub fn hpd_checks() -> Vec<Check> {
    let mut out = Vec::new();
    let xs: Vec<f64> = (1..=100).map(f64::from).collect();
    let h = hpd_interval(&xs, 0.95).unwrap();
    out.push(Check::new("HPD 1..100", h == (1.0, 96.0), format!("{h:?}")));
    let h = hpd_interval(&[2.5; 30], 0.95).unwrap();
    out.push(Check::new("HPD constant", h == (2.5, 2.5), format!("{h:?}")));
    let sym: Vec<f64> = (-50..=50).map(|i| f64::from(i).powi(3)).collect();
    let (lo, hi) = hpd_interval(&sym, 0.95).unwrap();
    out.push(Check::new("HPD symmetric", lo == -hi, format!("({lo}, {hi})")));
    let mut rng = RngStream::new(12);
    let mut ok = true;
    for _ in 0..40 {
        let m = rng.random_range(20..200);
        let xs: Vec<f64> = (0..m).map(|_| rng.random::<f64>().powi(3)).collect();
        ok &= hpd_interval(&xs, 0.9).unwrap() == hpd_oracle(&xs, 0.9);
    }
    out.push(Check::new("HPD exhaustive scan", ok, "40 random sample sets"));
    out
}

pub fn distance_checks() -> Vec<Check> {
    let r = DEFAULT_RADIUS;
    let o = LonLat::new(0.0, 0.0);
    let mut out = vec![
        Check::new("GCD identical points", great_circle_distance(&o, &o, r).unwrap() == 0.0, "0"),
        Check::new(
            "GCD quarter meridian",
            close(great_circle_distance(&o, &LonLat::new(0.0, 90.0), r).unwrap(), PI * r / 2.0, 1e-12),
            "πR/2",
        ),
    ];
    let eq = great_circle_distance(&o, &LonLat::new(90.0, 0.0), r).unwrap();
    out.push(Check::new(
        "GCD quarter equator",
        close(eq, PI * r / 2.0, 1e-12) && close(eq, haversine(o, LonLat::new(90.0, 0.0), r), 1e-6),
        format!("{eq}"),
    ));
    let two = build_distance_matrix(&Coordinates::new(vec![o, LonLat::new(3.0, 4.0)]).unwrap(), 10.0).unwrap();
    out.push(Check::new("distance cap two points", two.get(0, 1) == 10.0 && two.get(1, 0) == 10.0, "10"));
    let line = Coordinates::new((0..3).map(|k| LonLat::new(k as f64, 0.0)).collect()).unwrap();
    let m = build_distance_matrix(&line, 10.0).unwrap();
    let want = [[0.0, 5.0, 10.0], [5.0, 0.0, 5.0], [10.0, 5.0, 0.0]];
    let ok = (0..3).all(|i| (0..3).all(|j| (m.get(i, j) - want[i][j]).abs() <= TOL));
    out.push(Check::new("distance collinear equator", ok, "5·[[0,1,2],[1,0,1],[2,1,0]]"));
    let mut rng = RngStream::new(4);
    let pts: Vec<LonLat> = (0..25)
        .map(|_| LonLat::new(rng.random_range(-85.6..-80.8), rng.random_range(30.4..35.0)))
        .collect();
    let m = build_distance_matrix(&Coordinates::new(pts.clone()).unwrap(), 10.0).unwrap();
    let raw: Vec<f64> = pts.iter().flat_map(|a| pts.iter().map(|b| haversine(*a, *b, r))).collect();
    let max = raw.iter().cloned().fold(0.0, f64::max);
    let worst = (0..25)
        .flat_map(|i| (0..25).map(move |j| (i, j)))
        .map(|(i, j)| (m.get(i, j) - 10.0 * raw[i * 25 + j] / max).abs())
        .fold(0.0, f64::max);
    out.push(Check::new("distance matrix vs haversine", worst <= TOL, format!("max error {worst:.1e}")));
    out
}

pub fn all() -> Vec<Check> {
    let mut out = rand_index_checks();
    out.extend(membership_checks());
    out.extend(dahl_checks());
    out.extend(cpo_checks());
    out.extend(hpd_checks());
    out.extend(distance_checks());
    out
}
