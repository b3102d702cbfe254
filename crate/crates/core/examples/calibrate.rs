//! Grid search over the dummy generator's slope bounds and noise mean,
//! reporting the share of tracts whose Poor x Young V falls below the pooled
//! table's V, averaged over several seeds.
//!
//! cargo run --release -p swapsim-core --example calibrate

use swapsim_core::synthgen::{combined_vs_tract_v_share, generate_dummy, DummyConfig};

fn main() -> swapsim_core::Result<()> {
    let seeds = 0..16u64;
    println!("slope_low,slope_high,noise_mean,mean_share,min_share,max_share");
    for &(low, high) in &[
        (0.0, 2.0),
        (0.5, 1.5),
        (1.0, 3.0),
        (2.0, 3.0),
        (2.0, 4.0),
        (3.0, 5.0),
    ] {
        for &lambda in &[1.0, 5.0, 20.0] {
            let shares: Vec<f64> = seeds
                .clone()
                .map(|seed| {
                    let cfg = DummyConfig {
                        slope_low: low,
                        slope_high: high,
                        noise_mean: lambda,
                        seed,
                        ..DummyConfig::default()
                    };
                    combined_vs_tract_v_share(&generate_dummy(&cfg)?)
                })
                .collect::<swapsim_core::Result<_>>()?;
            let mean = shares.iter().sum::<f64>() / shares.len() as f64;
            let min = shares.iter().cloned().fold(f64::INFINITY, f64::min);
            let max = shares.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            println!("{low},{high},{lambda},{mean:.3},{min:.2},{max:.2}");
        }
    }
    Ok(())
}
