//! AWGN at a target SNR and the surrogate's SNR and channel response.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use urcsc::phy::{awgn_channel, Channel, CodecBackend, Surrogate};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let x: Vec<f64> = (0..100_000).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect();
    for snr in [0.0, 10.0, 20.0] {
        let y = awgn_channel(&x, snr, 42)?;
        let noise = x.iter().zip(&y).map(|(a, b)| (b - a).powi(2)).sum::<f64>() / x.len() as f64;
        println!("target {snr:>4.1} dB  measured {:>7.4} dB", -10.0 * noise.log10());
    }

    let s = Surrogate::shipped();
    println!("\ndepth  acc@20dB  acc@5dB  acc@20dB Rayleigh  latency_ms");
    for d in 1..=12 {
        println!(
            "{d:>5}  {:>8.4}  {:>7.4}  {:>17.4}  {:>10.4}",
            s.accuracy_at(d, 20.0, Channel::Awgn)?,
            s.accuracy_at(d, 5.0, Channel::Awgn)?,
            s.accuracy_at(d, 20.0, Channel::Rayleigh)?,
            s.latency_at(d)?
        );
    }
    Ok(())
}
