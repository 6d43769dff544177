//! Samples of (features, prediction) and the synthetic benchmark generator.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::effects::EffectIndex;
use crate::error::{Error, Result};
use crate::linalg::cholesky;
use crate::math::{cos, exp, fabs, norm_cdf, norm_pdf, pow, sin, sqrt, tanh};
use crate::rng::{chacha, streams};

/// Feature count of the synthetic scenarios.
pub const SYNTHETIC_D: usize = 10;

/// `n` rows of `d` features plus the black-box prediction for each row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleSet {
    n: usize,
    d: usize,
    /// Row-major `n x d`.
    x: Vec<f64>,
    f: Vec<f64>,
    feature_names: Vec<String>,
    prediction_name: String,
}

impl SampleSet {
    /// `x` is row-major `n x d`; names default to `x1..xd` and `pred`.
    pub fn new(d: usize, x: Vec<f64>, f: Vec<f64>) -> Result<Self> {
        let names = (1..=d).map(|j| format!("x{j}")).collect();
        Self::with_names(d, x, f, names, "pred".into())
    }

    pub fn with_names(
        d: usize,
        x: Vec<f64>,
        f: Vec<f64>,
        feature_names: Vec<String>,
        prediction_name: String,
    ) -> Result<Self> {
        if d == 0 {
            return Err(Error::invalid("at least one feature required"));
        }
        let n = f.len();
        if n == 0 {
            return Err(Error::invalid("at least one sample required"));
        }
        if x.len() != n * d {
            return Err(Error::DimensionMismatch {
                context: "feature matrix",
                expected: n * d,
                got: x.len(),
            });
        }
        if feature_names.len() != d {
            return Err(Error::DimensionMismatch {
                context: "feature names",
                expected: d,
                got: feature_names.len(),
            });
        }
        for (i, v) in x.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite(format!(
                    "feature value at row {}, column {}",
                    i / d + 1,
                    i % d + 1
                )));
            }
        }
        if let Some(i) = f.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("prediction value at row {}", i + 1)));
        }
        for (j, name) in feature_names.iter().enumerate() {
            if feature_names[..j].contains(name) || *name == prediction_name {
                return Err(Error::invalid(format!("duplicate column name {name:?}")));
            }
        }
        Ok(SampleSet {
            n,
            d,
            x,
            f,
            feature_names,
            prediction_name,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn features(&self) -> &[f64] {
        &self.x
    }

    pub fn predictions(&self) -> &[f64] {
        &self.f
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.x[i * self.d..(i + 1) * self.d]
    }

    /// Column `j` (0-based).
    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n).map(|i| self.x[i * self.d + j]).collect()
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn prediction_name(&self) -> &str {
        &self.prediction_name
    }

    /// Same features, new prediction values.
    pub fn with_predictions(&self, f: Vec<f64>) -> Result<Self> {
        Self::with_names(
            self.d,
            self.x.clone(),
            f,
            self.feature_names.clone(),
            self.prediction_name.clone(),
        )
    }
}

/// Per-column affine map applied by [`standardize`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub location: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardization {
    /// Maps a standardized value of column `j` back to original units.
    pub fn invert(&self, j: usize, z: f64) -> f64 {
        self.location[j] + self.scale[j] * z
    }
}

/// Centers every feature column and scales it to unit sample standard
/// deviation (divisor `n - 1`). Predictions are left alone.
pub fn standardize(samples: &SampleSet) -> Result<(SampleSet, Standardization)> {
    let (n, d) = (samples.n, samples.d);
    if n < 2 {
        return Err(Error::invalid("standardization needs at least two rows"));
    }
    let mut location = vec![0.0; d];
    let mut scale = vec![0.0; d];
    for j in 0..d {
        let col = samples.column(j);
        let m = col.iter().sum::<f64>() / n as f64;
        let ss: f64 = col.iter().map(|v| (v - m) * (v - m)).sum();
        let sd = sqrt(ss / (n - 1) as f64);
        if !(sd > 0.0) {
            return Err(Error::invalid(format!(
                "column {} is constant and cannot be standardized",
                samples.feature_names[j]
            )));
        }
        location[j] = m;
        scale[j] = sd;
    }
    let x = samples
        .x
        .iter()
        .enumerate()
        .map(|(i, v)| (v - location[i % d]) / scale[i % d])
        .collect();
    let out = SampleSet { x, ..samples.clone() };
    Ok((out, Standardization { location, scale }))
}

/// Row-major `n x d` feature matrix without predictions.
#[derive(Clone, Debug, PartialEq)]
pub struct Features {
    pub n: usize,
    pub d: usize,
    pub x: Vec<f64>,
}

impl Features {
    pub fn row(&self, i: usize) -> &[f64] {
        &self.x[i * self.d..(i + 1) * self.d]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n).map(|i| self.x[i * self.d + j]).collect()
    }
}

/// One of the three synthetic function sets.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Scenario {
    One,
    Two,
    Three,
}

impl Scenario {
    pub const ALL: [Scenario; 3] = [Scenario::One, Scenario::Two, Scenario::Three];

    pub fn id(self) -> u8 {
        match self {
            Scenario::One => 1,
            Scenario::Two => 2,
            Scenario::Three => 3,
        }
    }

    /// The six low-order terms with closed forms, in canonical order.
    pub fn low_order_terms() -> Vec<EffectIndex> {
        [&[1][..], &[2], &[3], &[1, 2], &[1, 3], &[2, 3]]
            .iter()
            .map(|t| EffectIndex::new(t.to_vec()).expect("static index"))
            .collect()
    }

    /// Low-order terms plus the ten-way term.
    pub fn terms() -> Vec<EffectIndex> {
        let mut t = Self::low_order_terms();
        t.push(EffectIndex::full(SYNTHETIC_D));
        t
    }
}

impl TryFrom<u8> for Scenario {
    type Error = Error;

    fn try_from(v: u8) -> Result<Self> {
        match v {
            1 => Ok(Scenario::One),
            2 => Ok(Scenario::Two),
            3 => Ok(Scenario::Three),
            _ => Err(Error::invalid(format!("scenario must be 1, 2 or 3, got {v}"))),
        }
    }
}

impl From<Scenario> for u8 {
    fn from(s: Scenario) -> u8 {
        s.id()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub scenario: Scenario,
    pub n: usize,
    pub seed: u64,
    /// Equicorrelation of the latent Gaussian.
    pub rho: f64,
}

impl ScenarioSpec {
    pub fn new(scenario: Scenario, n: usize, seed: u64) -> Self {
        ScenarioSpec {
            scenario,
            n,
            seed,
            rho: 0.5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::invalid("scenario sample size must be at least 2"));
        }
        if !(0.0..1.0).contains(&self.rho) {
            return Err(Error::invalid(format!(
                "equicorrelation must lie in [0, 1), got {}",
                self.rho
            )));
        }
        Ok(())
    }
}

/// Draws `Z ~ N(0, Sigma)` with unit variances and equicorrelation `rho`
/// and maps each coordinate to `6 * (Phi(Z) - 0.5)`, a Uniform(-3, 3)
/// marginal under a Gaussian copula.
pub fn gen_features(spec: &ScenarioSpec) -> Result<Features> {
    spec.validate()?;
    let d = SYNTHETIC_D;
    let mut sigma = vec![spec.rho; d * d];
    for j in 0..d {
        sigma[j * d + j] = 1.0;
    }
    let l = cholesky(&sigma, d)?;
    let mut rng = chacha(spec.seed, streams::FEATURES);
    let mut x = Vec::with_capacity(spec.n * d);
    let mut w = [0.0f64; SYNTHETIC_D];
    for _ in 0..spec.n {
        for wj in w.iter_mut() {
            *wj = rng.sample(StandardNormal);
        }
        for i in 0..d {
            let z: f64 = (0..=i).map(|k| l[i * d + k] * w[k]).sum();
            x.push(6.0 * (norm_cdf(z) - 0.5));
        }
    }
    Ok(Features { n: spec.n, d, x })
}

/// `(alpha / sigma) (x / sigma)^(alpha - 1) exp(-(x / sigma)^alpha)`.
///
/// This is the Weibull density; the synthetic scenario labels it a
/// distribution function but defines it by this formula, which is what
/// scenario 2 uses.
pub fn weibull_formula(x: f64, shape: f64, scale: f64) -> f64 {
    let t = x / scale;
    (shape / scale) * pow(t, shape - 1.0) * exp(-pow(t, shape))
}

/// The shared ten-way term `2 ((prod |x_j| / 1000)^(1/8) - 0.5)`.
pub fn ten_way_term(x: &[f64]) -> f64 {
    let prod: f64 = x.iter().map(|v| fabs(*v)).product();
    2.0 * (pow(prod / 1000.0, 0.125) - 0.5)
}

/// Closed-form effect `theta` of `scenario` at the values `x` of the
/// features in `theta` (in index order).
pub fn scenario_effect(scenario: Scenario, theta: &EffectIndex, x: &[f64]) -> Result<f64> {
    if x.len() != theta.level() {
        return Err(Error::DimensionMismatch {
            context: "scenario effect arguments",
            expected: theta.level(),
            got: x.len(),
        });
    }
    if *theta == EffectIndex::full(SYNTHETIC_D) {
        return Ok(ten_way_term(x));
    }
    let v = match (scenario, theta.indices()) {
        (Scenario::One, [1]) => cos(2.0 * x[0]),
        (Scenario::One, [2]) => tanh(0.5 * x[0]),
        (Scenario::One, [3]) => norm_pdf(x[0] - 1.5) + norm_pdf(x[0] + 1.5),
        (Scenario::One, [1, 2]) => sin(1.5 * (x[0] * x[0] - x[1] * x[1])) + norm_pdf(0.5 * x[0] * x[1]),
        (Scenario::One, [1, 3]) => cos(x[0] + x[1]) + sin(x[0] * x[1]),
        (Scenario::One, [2, 3]) => {
            let (a, b) = (x[0] - 1.0, x[1] + 1.0);
            0.5 * sin(a * a + b * b)
        }

        (Scenario::Two, [1]) => -3.0 * cos(3.0 * x[0] - 2.0) * x[0],
        (Scenario::Two, [2]) => {
            if x[0] >= 0.0 {
                weibull_formula(x[0], 3.0, 1.0)
            } else {
                weibull_formula(-x[0], 0.5, 1.0)
            }
        }
        (Scenario::Two, [3]) => x[0] * x[0],
        (Scenario::Two, [1, 2]) => {
            sin(0.75 * x[0] * x[1]) + 0.25 * sqrt(x[0] * x[0] + x[1] * x[1]) + 0.25 * cos((x[0] - PI) * (x[1] + PI))
        }
        (Scenario::Two, [1, 3]) => sin(x[0] * x[0] + x[1] * x[1]),
        (Scenario::Two, [2, 3]) => sin(x[0] + x[1]),

        (Scenario::Three, [1]) => cos(2.0 * x[0]),
        (Scenario::Three, [2]) => tanh(x[0]),
        (Scenario::Three, [3]) => -x[0] * x[0] * x[0],
        (Scenario::Three, [1, 2]) => -cos(1.5 * x[0] - 0.75 * x[1]),
        (Scenario::Three, [1, 3]) => cos((x[0] - PI) * (x[1] + PI)),
        (Scenario::Three, [2, 3]) => {
            4.0 * (norm_pdf(x[0]) / norm_pdf(0.0) - 0.5) * (norm_cdf(x[1]) - 0.5) + sin(x[0] + x[1])
        }
        _ => {
            return Err(Error::UnknownEffect(format!(
                "{theta} is not a term of scenario {}",
                scenario.id()
            )))
        }
    };
    Ok(v)
}

/// Evaluates effect `theta` of `scenario` on a full ten-feature row.
pub fn scenario_effect_row(scenario: Scenario, theta: &EffectIndex, row: &[f64]) -> Result<f64> {
    let args: Vec<f64> = theta.indices().iter().map(|&j| row[j - 1]).collect();
    scenario_effect(scenario, theta, &args)
}

/// Raw synthetic prediction: sum of the three main effects, the three
/// two-way interactions and the ten-way term, row by row.
pub fn assemble_prediction(scenario: Scenario, features: &Features) -> Result<SampleSet> {
    if features.d != SYNTHETIC_D {
        return Err(Error::DimensionMismatch {
            context: "synthetic features",
            expected: SYNTHETIC_D,
            got: features.d,
        });
    }
    let terms = Scenario::terms();
    let mut f = Vec::with_capacity(features.n);
    for i in 0..features.n {
        let row = features.row(i);
        let mut acc = 0.0;
        for t in &terms {
            acc += scenario_effect_row(scenario, t, row)?;
        }
        f.push(acc);
    }
    SampleSet::new(SYNTHETIC_D, features.x.clone(), f)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(v: &[usize]) -> EffectIndex {
        EffectIndex::new(v.to_vec()).unwrap()
    }

    #[test]
    fn closed_form_effect_values() {
        assert_eq!(scenario_effect(Scenario::One, &e(&[1]), &[0.0]).unwrap(), 1.0);
        assert_eq!(scenario_effect(Scenario::Three, &e(&[3]), &[1.0]).unwrap(), -1.0);
    }

    #[test]
    fn ten_way_fixed_point() {
        // prod |x_j| = 1000 with ten factors of 1000^(1/10).
        let x = [pow(1000.0, 0.1); 10];
        assert!((ten_way_term(&x) - 1.0).abs() < 1e-12);
        let mut y = x;
        y[3] = -y[3];
        y[7] = -y[7];
        assert!((ten_way_term(&y) - 1.0).abs() < 1e-12);
        assert_eq!(ten_way_term(&[0.0; 10]), -1.0);
    }

    #[test]
    fn weibull_formula_branches() {
        // shape 3, scale 1 at x = 1: 3 * exp(-1)
        let v = scenario_effect(Scenario::Two, &e(&[2]), &[1.0]).unwrap();
        assert!((v - 3.0 * exp(-1.0)).abs() < 1e-15);
        // shape 0.5 on the negative side at x = -1: 0.5 * exp(-1)
        let v = scenario_effect(Scenario::Two, &e(&[2]), &[-1.0]).unwrap();
        assert!((v - 0.5 * exp(-1.0)).abs() < 1e-15);
        assert_eq!(scenario_effect(Scenario::Two, &e(&[2]), &[0.0]).unwrap(), 0.0);
    }

    #[test]
    fn unknown_terms_are_rejected() {
        assert!(scenario_effect(Scenario::One, &e(&[4]), &[0.0]).is_err());
        assert!(scenario_effect(Scenario::One, &e(&[1, 2, 3]), &[0.0; 3]).is_err());
        assert!(scenario_effect(Scenario::One, &e(&[1]), &[0.0, 1.0]).is_err());
    }

    #[test]
    fn zero_row_prediction_matches_hand_evaluation() {
        // Hand evaluation at the origin:
        //   scenario 1: 1 + 0 + 2 phi(1.5) + (0 + phi(0)) + (1 + 0) + 0.5 sin(2) - 1
        //   scenario 2: 0 + 0 + 0 + (0 + 0 + 0.25 cos(-pi^2)) + 0 + 0 - 1
        //   scenario 3: 1 + 0 - 0 - 1 + cos(-pi^2) + 4 (1 - 0.5)(0) + 0 - 1
        let phi = |x: f64| exp(-0.5 * x * x) / sqrt(2.0 * PI);
        let expected = [
            1.0 + 2.0 * phi(1.5) + phi(0.0) + 1.0 + 0.5 * sin(2.0) - 1.0,
            0.25 * cos(-PI * PI) - 1.0,
            1.0 - 1.0 + cos(-PI * PI) - 1.0,
        ];
        let feats = Features {
            n: 1,
            d: 10,
            x: vec![0.0; 10],
        };
        for (s, want) in Scenario::ALL.iter().zip(expected) {
            let got = assemble_prediction(*s, &feats).unwrap();
            assert_eq!(got.n(), 1);
            assert!((got.predictions()[0] - want).abs() < 1e-14, "{s:?}");
        }
    }

    #[test]
    fn only_ten_way_term_sees_trailing_features() {
        let spec = ScenarioSpec::new(Scenario::Two, 20, 3);
        let feats = gen_features(&spec).unwrap();
        let mut moved = feats.clone();
        for i in 0..moved.n {
            for j in 3..10 {
                moved.x[i * 10 + j] *= -0.5;
            }
        }
        let a = assemble_prediction(Scenario::Two, &feats).unwrap();
        let b = assemble_prediction(Scenario::Two, &moved).unwrap();
        for i in 0..feats.n {
            let da = a.predictions()[i] - ten_way_term(feats.row(i));
            let db = b.predictions()[i] - ten_way_term(moved.row(i));
            assert!((da - db).abs() < 1e-12);
        }
    }

    #[test]
    fn assembled_prediction_is_sum_of_effects() {
        for s in Scenario::ALL {
            let feats = gen_features(&ScenarioSpec::new(s, 200, 11)).unwrap();
            let samples = assemble_prediction(s, &feats).unwrap();
            for i in 0..feats.n {
                let sum: f64 = Scenario::terms()
                    .iter()
                    .map(|t| scenario_effect_row(s, t, feats.row(i)).unwrap())
                    .sum();
                assert!((samples.predictions()[i] - sum).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn features_are_reproducible_and_bounded() {
        let spec = ScenarioSpec::new(Scenario::One, 500, 99);
        let a = gen_features(&spec).unwrap();
        let b = gen_features(&spec).unwrap();
        assert_eq!(a, b);
        assert!(a.x.iter().all(|v| *v > -3.0 && *v < 3.0));
        let c = gen_features(&ScenarioSpec { seed: 100, ..spec }).unwrap();
        assert_ne!(a.x, c.x);
    }

    #[test]
    fn scenario_spec_validation() {
        let mut spec = ScenarioSpec::new(Scenario::One, 1, 0);
        assert!(spec.validate().is_err());
        spec.n = 10;
        spec.rho = 1.0;
        assert!(spec.validate().is_err());
        assert!(Scenario::try_from(4).is_err());
    }

    #[test]
    fn standardize_conventions() {
        let s = SampleSet::new(1, vec![0.0, 2.0], vec![5.0, 7.0]).unwrap();
        let (z, rec) = standardize(&s).unwrap();
        let h = core::f64::consts::FRAC_1_SQRT_2;
        assert!((z.features()[0] + h).abs() < 1e-15);
        assert!((z.features()[1] - h).abs() < 1e-15);
        assert_eq!(z.predictions(), s.predictions());
        assert!((rec.invert(0, z.features()[1]) - 2.0).abs() < 1e-15);

        let twice = standardize(&z).unwrap().0;
        for (a, b) in twice.features().iter().zip(z.features()) {
            assert!((a - b).abs() < 1e-12);
        }

        let c = SampleSet::new(2, vec![1.0, 3.0, 1.0, 4.0], vec![0.0, 0.0]).unwrap();
        let err = standardize(&c).unwrap_err();
        assert!(format!("{err}").contains("x1"));
    }

    #[test]
    fn sample_set_validation() {
        assert!(SampleSet::new(0, vec![], vec![1.0]).is_err());
        assert!(SampleSet::new(2, vec![1.0], vec![1.0]).is_err());
        assert!(matches!(
            SampleSet::new(1, vec![f64::NAN], vec![1.0]),
            Err(Error::NonFinite(_))
        ));
        assert!(SampleSet::with_names(2, vec![1.0, 2.0], vec![1.0], vec!["a".into(), "a".into()], "p".into()).is_err());
    }
}
