//! Shared workloads for the criterion benchmarks.

use fermat_core::{generate_two_moon, LabeledDataset, TwoMoonModel, TwoMoonVariant};

/// Model (iii) two-moon sample with `n` points in `R^500`.
pub fn noisy_pad(n: usize, seed: u64) -> LabeledDataset {
    generate_two_moon(&TwoMoonModel {
        variant: TwoMoonVariant::NoisyPad,
        n0: n - n / 2,
        n1: n / 2,
        seed,
    })
    .expect("valid model")
}

/// Model (i) sphere sample with `n` points in `R^3`.
pub fn sphere(n: usize, seed: u64) -> LabeledDataset {
    generate_two_moon(&TwoMoonModel {
        variant: TwoMoonVariant::Sphere,
        n0: n - n / 2,
        n1: n / 2,
        seed,
    })
    .expect("valid model")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sizes_and_dimensions() {
        let d = noisy_pad(11, 0);
        assert_eq!(d.cloud().len(), 11);
        assert_eq!(d.cloud().dim(), 500);
        assert_eq!(sphere(8, 0).cloud().dim(), 3);
    }
}
