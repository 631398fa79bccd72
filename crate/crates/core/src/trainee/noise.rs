use rand::Rng;
use rand_distr::StandardNormal;

use crate::geom::Point3;

/// Three independent Ornstein–Uhlenbeck processes sampled on a fixed step.
/// Started from the stationary distribution, so every sample has SD `sd`.
#[derive(Clone, Debug, PartialEq)]
pub struct OuNoise3 {
    sd: f64,
    decay: f64,
    innovation: f64,
    state: Point3,
}

impl OuNoise3 {
    pub fn new<R: Rng + ?Sized>(sd: f64, tau_ms: f64, step_ms: f64, rng: &mut R) -> Self {
        let decay = libm::exp(-step_ms / tau_ms);
        let innovation = sd * libm::sqrt(1.0 - decay * decay);
        let state = gaussian3(rng) * sd;
        Self { sd, decay, innovation, state }
    }

    pub fn sd(&self) -> f64 {
        self.sd
    }

    /// Lag-one autocorrelation of the sampled sequence.
    pub fn decay(&self) -> f64 {
        self.decay
    }

    pub fn current(&self) -> Point3 {
        self.state
    }

    pub fn sample<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Point3 {
        self.state = self.state * self.decay + gaussian3(rng) * self.innovation;
        self.state
    }
}

pub(crate) fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

pub(crate) fn gaussian3<R: Rng + ?Sized>(rng: &mut R) -> Point3 {
    Point3::new(gaussian(rng), gaussian(rng), gaussian(rng))
}
