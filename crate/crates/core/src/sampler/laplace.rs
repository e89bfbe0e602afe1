use rand::Rng;

/// Laplace distribution with density `exp(-|x - location| / scale) / (2 scale)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaplaceDist {
    pub location: f64,
    pub scale: f64,
}

impl LaplaceDist {
    pub fn new(location: f64, scale: f64) -> Self {
        assert!(scale > 0.0, "Laplace scale must be positive");
        Self { location, scale }
    }

    pub fn ln_pdf(&self, x: f64) -> f64 {
        -(x - self.location).abs() / self.scale - (2.0 * self.scale).ln()
    }

    pub fn pdf(&self, x: f64) -> f64 {
        self.ln_pdf(x).exp()
    }

    /// Inverse-CDF draw from one uniform.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random::<f64>() - 0.5;
        // 1 - 2|u| lies in (0, 1]; the endpoint u = -0.5 maps to ln(0) and is
        // nudged to the smallest positive double.
        let tail = (1.0 - 2.0 * u.abs()).max(f64::MIN_POSITIVE);
        self.location - self.scale * u.signum() * tail.ln()
    }
}
