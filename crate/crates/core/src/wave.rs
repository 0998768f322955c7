//! Incident plane waves and absorption coefficients.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::geom::Vec2;
use crate::scalar::Real;

/// One incident-wave configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveSpec<T> {
    /// Wavenumber, 1/m.
    pub k: T,
    /// Amplitude, m.
    pub amplitude: T,
    /// Direction angle of propagation, rad.
    pub angle: T,
    /// Absorption coefficient on the coastline `G1`.
    pub alpha_coast: Complex<T>,
    /// Absorption coefficient on the obstacle boundary `G5`.
    pub alpha_obstacle: Complex<T>,
    /// Weight in the multi-wave objective.
    pub weight: T,
}

impl<T: Real> WaveSpec<T> {
    /// Unit-weight wave with the same `alpha` on coast and obstacle.
    pub fn new(k: T, amplitude: T, angle: T, alpha: Complex<T>) -> Self {
        Self {
            k,
            amplitude,
            angle,
            alpha_coast: alpha,
            alpha_obstacle: alpha,
            weight: T::one(),
        }
    }

    pub fn with_weight(mut self, w: T) -> Self {
        self.weight = w;
        self
    }

    pub fn direction(&self) -> Vec2<T> {
        Vec2::new(self.angle.cos(), self.angle.sin())
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.k > T::zero()) || !self.k.is_finite() {
            return Err(Error::InvalidParameter(format!("wavenumber must be positive, got {}", self.k)));
        }
        // zero amplitude is allowed: it gives the trivial zero field
        if !(self.amplitude >= T::zero()) || !self.amplitude.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "amplitude must be non-negative, got {}",
                self.amplitude
            )));
        }
        if !(self.weight >= T::zero()) || !self.weight.is_finite() {
            return Err(Error::InvalidParameter(format!("weight must be non-negative, got {}", self.weight)));
        }
        let finite = |z: Complex<T>| z.re.is_finite() && z.im.is_finite();
        if !self.angle.is_finite() || !finite(self.alpha_coast) || !finite(self.alpha_obstacle) {
            return Err(Error::InvalidParameter("non-finite wave parameter".into()));
        }
        Ok(())
    }
}

/// `A exp(i k x.d)`.
pub fn incident_field<T: Real>(spec: &WaveSpec<T>, x: Vec2<T>) -> Complex<T> {
    let phase = spec.k * x.dot(spec.direction());
    Complex::new(phase.cos(), phase.sin()) * spec.amplitude
}

/// `i k d u_inc(x)`.
pub fn incident_gradient<T: Real>(spec: &WaveSpec<T>, x: Vec2<T>) -> [Complex<T>; 2] {
    let d = spec.direction();
    let iku = incident_field(spec, x) * Complex::new(T::zero(), spec.k);
    [iku * d.x, iku * d.y]
}

/// Absorption coefficient from reflection coefficient `K`, phase `beta` and
/// incidence angle `gamma`.
pub fn berkhoff_alpha<T: Real>(reflection: T, beta: T, gamma: T) -> Result<Complex<T>> {
    let one = T::one();
    let two = T::lit(2.0);
    let den = one + reflection * reflection + two * reflection * beta.cos();
    if den.abs() <= T::epsilon() * T::lit(16.0) {
        return Err(Error::InvalidParameter(format!(
            "absorption coefficient undefined for K = {reflection}, beta = {beta}"
        )));
    }
    let re = two * reflection * beta.sin() * gamma.cos() / den;
    let im = (one - reflection * reflection) * gamma.cos() / den;
    Ok(Complex::new(re, im))
}

/// Normal-incidence special case: `alpha = i (1 - K) / (1 + K)`.
pub fn isaacson_alpha<T: Real>(reflection: T) -> Complex<T> {
    Complex::new(T::zero(), (T::one() - reflection) / (T::one() + reflection))
}
