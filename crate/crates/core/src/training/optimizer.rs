/// RMSProp: `s ← ρ·s + (1−ρ)·g²`, `θ ← θ − lr·g/√(s+ε)`.
///
/// Keeps one accumulator per scalar parameter; callers hand in the slice of
/// accumulators that belongs to the parameter slice being updated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RmsProp {
    pub learning_rate: f64,
    pub decay: f64,
    pub epsilon: f64,
}

impl RmsProp {
    pub fn new(learning_rate: f64, decay: f64, epsilon: f64) -> Self {
        Self {
            learning_rate,
            decay,
            epsilon,
        }
    }

    /// Descends along `grad` (a loss gradient).
    pub fn step(&self, params: &mut [f64], accum: &mut [f64], grad: &[f64]) {
        debug_assert!(params.len() == accum.len() && params.len() == grad.len());
        for ((p, s), &g) in params.iter_mut().zip(accum.iter_mut()).zip(grad) {
            *s = self.decay * *s + (1.0 - self.decay) * g * g;
            *p -= self.learning_rate * g / (*s + self.epsilon).sqrt();
        }
    }
}
