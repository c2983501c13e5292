//! Triple scores over diagonal Gaussians and their analytic gradients.
//!
//! Both scores follow the "higher is more plausible" convention.
//!
//! Expected likelihood (proportional form, constants dropped):
//!
//! ```text
//! f = -Σᵢ μᵢ² / Cᵢ - Σᵢ ln Cᵢ,   μ = μ_h - μ_r - μ_t,   C = C_h + C_r + C_t
//! ```
//!
//! KL divergence between the entity-pair Gaussian `N(μ_h - μ_t, C_h + C_t)`
//! and the relation Gaussian `N(μ_r, C_r)`, negated:
//!
//! ```text
//! E = ½ [ Σ Cₑ/Cᵣ + Σ (μᵣ - μₑ)²/Cᵣ - Σ ln(Cₑ/Cᵣ) - d ],   score = -E
//! ```

use super::GaussianParams;

/// Gradient of a score with respect to one Gaussian.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamGradient {
    pub mean: Vec<f64>,
    pub cov: Vec<f64>,
}

impl ParamGradient {
    fn zeros(dim: usize) -> Self {
        Self {
            mean: vec![0.0; dim],
            cov: vec![0.0; dim],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TripleGradient {
    pub head: ParamGradient,
    pub relation: ParamGradient,
    pub tail: ParamGradient,
}

impl TripleGradient {
    fn zeros(dim: usize) -> Self {
        Self {
            head: ParamGradient::zeros(dim),
            relation: ParamGradient::zeros(dim),
            tail: ParamGradient::zeros(dim),
        }
    }
}

pub fn expected_likelihood(h: &GaussianParams, r: &GaussianParams, t: &GaussianParams) -> f64 {
    let mut f = 0.0;
    for i in 0..h.dim() {
        let mu = h.mean[i] - r.mean[i] - t.mean[i];
        let c = h.cov[i] + r.cov[i] + t.cov[i];
        f -= mu * mu / c + c.ln();
    }
    f
}

/// KL(entity pair ‖ relation); always ≥ 0.
pub fn kl_energy(h: &GaussianParams, r: &GaussianParams, t: &GaussianParams) -> f64 {
    let mut e = 0.0;
    for i in 0..h.dim() {
        let mu_e = h.mean[i] - t.mean[i];
        let c_e = h.cov[i] + t.cov[i];
        let c_r = r.cov[i];
        let diff = r.mean[i] - mu_e;
        let ratio = c_e / c_r;
        e += ratio + diff * diff / c_r - ratio.ln() - 1.0;
    }
    0.5 * e
}

pub fn kl_score(h: &GaussianParams, r: &GaussianParams, t: &GaussianParams) -> f64 {
    -kl_energy(h, r, t)
}

pub fn expected_likelihood_gradient(
    h: &GaussianParams,
    r: &GaussianParams,
    t: &GaussianParams,
) -> TripleGradient {
    let d = h.dim();
    let mut g = TripleGradient::zeros(d);
    for i in 0..d {
        let mu = h.mean[i] - r.mean[i] - t.mean[i];
        let c = h.cov[i] + r.cov[i] + t.cov[i];
        let dm = 2.0 * mu / c;
        g.head.mean[i] = -dm;
        g.relation.mean[i] = dm;
        g.tail.mean[i] = dm;
        let dc = mu * mu / (c * c) - 1.0 / c;
        g.head.cov[i] = dc;
        g.relation.cov[i] = dc;
        g.tail.cov[i] = dc;
    }
    g
}

/// Gradient of the KL score (that is, of `-E`).
pub fn kl_gradient(h: &GaussianParams, r: &GaussianParams, t: &GaussianParams) -> TripleGradient {
    let d = h.dim();
    let mut g = TripleGradient::zeros(d);
    for i in 0..d {
        let mu_e = h.mean[i] - t.mean[i];
        let c_e = h.cov[i] + t.cov[i];
        let c_r = r.cov[i];
        let diff = r.mean[i] - mu_e;
        // dE/dμ_r = diff / C_r, dE/dμ_h = -diff / C_r, dE/dμ_t = diff / C_r
        let dm = diff / c_r;
        g.relation.mean[i] = -dm;
        g.head.mean[i] = dm;
        g.tail.mean[i] = -dm;
        // dE/dC_h = dE/dC_t = ½ (1/C_r - 1/C_e)
        let dce = 0.5 * (1.0 / c_r - 1.0 / c_e);
        g.head.cov[i] = -dce;
        g.tail.cov[i] = -dce;
        // dE/dC_r = ½ (1/C_r - C_e/C_r² - diff²/C_r²)
        g.relation.cov[i] = -0.5 * (1.0 / c_r - (c_e + diff * diff) / (c_r * c_r));
    }
    g
}
