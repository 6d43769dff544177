mod common;

use common::pearson;
use stackdec_core::dataset::{gen_features, Features, SYNTHETIC_D};
use stackdec_core::{Scenario, ScenarioSpec};

/// xorshift64* with Box-Muller normals; unrelated to the library generator.
struct XorShift(u64);

impl XorShift {
    fn uniform(&mut self) -> f64 {
        self.0 ^= self.0 >> 12;
        self.0 ^= self.0 << 25;
        self.0 ^= self.0 >> 27;
        let r = self.0.wrapping_mul(0x2545_F491_4F6C_DD1D);
        ((r >> 11) as f64 + 0.5) / (1u64 << 53) as f64
    }

    fn normal(&mut self) -> f64 {
        let (u, v) = (self.uniform(), self.uniform());
        (-2.0 * u.ln()).sqrt() * (2.0 * std::f64::consts::PI * v).cos()
    }
}

fn phi(z: f64) -> f64 {
    0.5 * (1.0 + erf(z / std::f64::consts::SQRT_2))
}

/// Abramowitz-Stegun 7.1.26; accurate to about 1.5e-7, plenty for a
/// correlation estimate.
fn erf(x: f64) -> f64 {
    let t = 1.0 / (1.0 + 0.327_591_1 * x.abs());
    let y = 1.0
        - (((((1.061_405_429 * t - 1.453_152_027) * t) + 1.421_413_741) * t - 0.284_496_736) * t + 0.254_829_592)
            * t
            * (-x * x).exp();
    y.copysign(x)
}

/// One-factor construction `Z_j = sqrt(rho) W_0 + sqrt(1 - rho) W_j`.
fn monte_carlo_features(n: usize, rho: f64, seed: u64) -> Features {
    let mut g = XorShift(seed);
    let mut x = Vec::with_capacity(n * SYNTHETIC_D);
    for _ in 0..n {
        let w0 = g.normal();
        for _ in 0..SYNTHETIC_D {
            let z = rho.sqrt() * w0 + (1.0 - rho).sqrt() * g.normal();
            x.push(6.0 * (phi(z) - 0.5));
        }
    }
    Features { n, d: SYNTHETIC_D, x }
}

fn mean_offdiag_correlation(f: &Features) -> f64 {
    let cols: Vec<Vec<f64>> = (0..f.d).map(|j| f.column(j)).collect();
    let mut acc = 0.0;
    let mut count = 0;
    for i in 0..f.d {
        for j in i + 1..f.d {
            acc += pearson(&cols[i], &cols[j]);
            count += 1;
        }
    }
    acc / count as f64
}

#[test]
fn marginals_are_uniform_on_minus_three_three() {
    let f = gen_features(&ScenarioSpec::new(Scenario::One, 10_000, 17)).unwrap();
    for j in 0..SYNTHETIC_D {
        let mut col = f.column(j);
        col.sort_by(f64::total_cmp);
        let n = col.len() as f64;
        let ks = col
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let cdf = (x + 3.0) / 6.0;
                (cdf - i as f64 / n).abs().max(((i + 1) as f64 / n - cdf).abs())
            })
            .fold(0.0, f64::max);
        assert!(ks < 0.02, "feature {j}: KS {ks}");
        assert!(col[0] >= -3.0 && col[col.len() - 1] <= 3.0);
    }
}

#[test]
fn pairwise_correlation_matches_closed_form_and_independent_sampler() {
    let rho = 0.5;
    // Pearson correlation of Phi-transformed equicorrelated normals.
    let closed = 6.0 / std::f64::consts::PI * (rho / 2.0f64).asin();
    let ours = gen_features(&ScenarioSpec::new(Scenario::Two, 20_000, 3)).unwrap();
    let theirs = monte_carlo_features(20_000, rho, 0x9E37_79B9_7F4A_7C15);
    let (a, b) = (mean_offdiag_correlation(&ours), mean_offdiag_correlation(&theirs));
    assert!((a - closed).abs() < 0.01, "library {a} vs closed form {closed}");
    assert!((b - closed).abs() < 0.01, "oracle {b} vs closed form {closed}");
    assert!((a - b).abs() < 0.01);
}

#[test]
fn independent_features_when_rho_is_zero() {
    let mut spec = ScenarioSpec::new(Scenario::Three, 20_000, 8);
    spec.rho = 0.0;
    let f = gen_features(&spec).unwrap();
    assert!(mean_offdiag_correlation(&f).abs() < 0.01);
}
