//! Synthetic test input.

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

/// Pink (1/f) noise at about half of full scale peak, from Paul Kellett's
/// refined filter over uniform white noise. Deterministic for a given seed.
pub fn pink_noise(len: usize, seed: u64) -> Vec<i16> {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut b = [0.0f64; 7];
    (0..len)
        .map(|_| {
            let white: f64 = rng.random_range(-1.0..1.0);
            b[0] = 0.99886 * b[0] + white * 0.0555179;
            b[1] = 0.99332 * b[1] + white * 0.0750759;
            b[2] = 0.96900 * b[2] + white * 0.1538520;
            b[3] = 0.86650 * b[3] + white * 0.3104856;
            b[4] = 0.55000 * b[4] + white * 0.5329522;
            b[5] = -0.7616 * b[5] - white * 0.0168980;
            let pink = b[..6].iter().sum::<f64>() + b[6] + white * 0.5362;
            b[6] = white * 0.115926;
            (pink * 0.11 * 16384.0).round().clamp(-32768.0, 32767.0) as i16
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_bounded() {
        let a = pink_noise(10_000, 42);
        assert_eq!(a, pink_noise(10_000, 42));
        assert_ne!(a, pink_noise(10_000, 43));
        let rms = (a.iter().map(|&x| (x as f64).powi(2)).sum::<f64>() / a.len() as f64).sqrt();
        assert!(rms > 1000.0 && rms < 20_000.0, "{rms}");
    }
}
