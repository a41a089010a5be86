use geodpm::chain::run_chain;
use geodpm::geo::{Coordinates, LonLat};
use geodpm::model::{Dataset, ModelConfig, Scheme};
use geodpm::numerics::{standard_normal, RngStream};
use rand::Rng;

fn main() {
    let n = 159;
    let p = 6;
    let mut rng = RngStream::new(1);
    let coords = Coordinates::new(
        (0..n)
            .map(|_| LonLat::new(-85.6 + 4.8 * rng.random::<f64>(), 30.4 + 4.6 * rng.random::<f64>()))
            .collect(),
    )
    .unwrap();
    let x: Vec<f64> = (0..n * p).map(|_| standard_normal(&mut rng)).collect();
    let y: Vec<f64> = (0..n).map(|i| 9.0 * x[i * p] - 4.0 * x[i * p + 2] + standard_normal(&mut rng)).collect();
    let data = Dataset::new(y, x, p, coords, None).unwrap();
    for scheme in [Scheme::Unity, Scheme::Exponential, Scheme::Gaussian] {
        let cfg = ModelConfig { scheme, n_iter: 1000, thin: 5, burn_in: 50, ..ModelConfig::default() };
        let t = std::time::Instant::now();
        let d = run_chain(&cfg, &data, RngStream::new(2)).unwrap();
        println!("{scheme}: {:.2}s per 1000 sweeps, acc {}/{}, phi mean {:.3}", t.elapsed().as_secs_f64(), d.diagnostics.phi_accepted, d.diagnostics.phi_proposed, d.phi.iter().sum::<f64>()/d.len() as f64);
    }
}
