use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::chart::ChartPoint;
use crate::error::Result;
use crate::geometry::Quadrature;
use crate::report::{CheckBuilder, CheckReport, Sample};

/// Seeded sample points on the slit tangent bundle.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    points: Vec<ChartPoint>,
    seed: u64,
}

/// Region the points are drawn from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleBox {
    /// `x` is uniform in `[-half_width, half_width]ⁿ`.
    pub half_width: f64,
    /// `|y|` is uniform in this range, the direction uniform on the sphere.
    pub radius: (f64, f64),
}

impl Default for SampleBox {
    fn default() -> Self {
        Self {
            half_width: 0.9,
            radius: (0.5, 2.0),
        }
    }
}

impl SampleSet {
    pub fn random(dim: usize, count: usize, seed: u64) -> Self {
        Self::random_in(dim, count, seed, SampleBox::default())
    }

    pub fn random_in(dim: usize, count: usize, seed: u64, region: SampleBox) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let points = (0..count)
            .map(|_| {
                let x: Vec<f64> = (0..dim)
                    .map(|_| rng.gen_range(-region.half_width..=region.half_width))
                    .collect();
                // rejection sampling in the cube gives a uniform direction
                let dir = loop {
                    let v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..=1.0)).collect();
                    let r = v.iter().map(|c| c * c).sum::<f64>().sqrt();
                    if (0.1..=1.0).contains(&r) {
                        break v.into_iter().map(|c| c / r).collect::<Vec<_>>();
                    }
                };
                let radius = rng.gen_range(region.radius.0..=region.radius.1);
                let y = dir.into_iter().map(|c| c * radius).collect();
                ChartPoint::new(x, y).expect("sampled point is valid")
            })
            .collect();
        Self { points, seed }
    }

    pub fn from_points(points: Vec<ChartPoint>) -> Self {
        Self { points, seed: 0 }
    }

    pub fn points(&self) -> &[ChartPoint] {
        &self.points
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Settings shared by every sampled computation.
#[derive(Debug, Clone)]
pub struct Settings {
    /// Jet order `K`.
    pub order: usize,
    pub quadrature: Quadrature,
    /// Test hook: adds a constant to one side of every identity.
    #[doc(hidden)]
    pub perturbation: Option<Perturbation>,
}

impl Settings {
    pub fn new(order: usize) -> Self {
        Self {
            order,
            quadrature: Quadrature::default(),
            perturbation: None,
        }
    }
}

#[doc(hidden)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Perturbation {
    Left(f64),
    Right(f64),
}

/// How a check turns residuals into a verdict.
#[derive(Debug, Clone, Copy)]
pub(crate) enum Band {
    Binary(f64),
    Classify,
}

pub(crate) const PASS_TOLERANCE: f64 = 1e-7;
pub(crate) const FAIL_THRESHOLD: f64 = 1e-3;

impl Band {
    pub(crate) fn builder(self, name: &str) -> CheckBuilder {
        match self {
            Band::Binary(tol) => CheckBuilder::new(name, tol),
            Band::Classify => CheckBuilder::with_band(name, PASS_TOLERANCE, FAIL_THRESHOLD),
        }
    }
}

/// Evaluates `f` at every point in parallel, keeping point order.
pub(crate) fn per_point<T: Send>(
    samples: &SampleSet,
    f: impl Fn(&ChartPoint) -> Result<T> + Sync,
) -> Vec<std::result::Result<T, String>> {
    samples
        .points()
        .par_iter()
        .map(|p| f(p).map_err(|e| e.to_string()))
        .collect()
}

/// Records several named per-point samples into one report each. The
/// closure returns the samples in the order of `names`.
pub(crate) fn sampled_reports(
    samples: &SampleSet,
    checks: &[(&str, Band, bool)],
    f: impl Fn(&ChartPoint) -> Result<Vec<Sample>> + Sync,
) -> Vec<CheckReport> {
    let started = Instant::now();
    let results = per_point(samples, f);
    let elapsed = started.elapsed().as_secs_f64();
    checks
        .iter()
        .enumerate()
        .map(|(c, &(name, band, finding))| {
            let mut b = band.builder(name);
            if finding {
                b = b.finding();
            }
            for (p, r) in samples.points().iter().zip(&results) {
                b.record_result(p, r.as_ref().map(|s| s[c].clone()).map_err(Clone::clone));
            }
            let mut report = b.finish();
            report.runtime_seconds = elapsed;
            report
        })
        .collect()
}
