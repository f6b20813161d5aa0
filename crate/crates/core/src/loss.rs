//! Estimation losses of Lévy channels.
//!
//! The Lévy loss of an input `x` against a reconstruction `x̂ = (r₀, z ↦ r_z)`
//! is
//!
//! ```text
//! ℓ_L(x, x̂) = σ² ℓ_G(φ'(x), r₀) + ∫ ℓ_P(e^{φ'(x) z}, r_z) ν(dz)
//! ```
//!
//! It collapses to the squared error on the Gaussian channel and to the
//! Poisson loss on the Poisson channel. Evaluated at the reconstruction that
//! is optimal for a point mass at `y`, it equals the Bregman divergence
//! `d_φ(x, y)` ([`representative_loss`]).

use crate::channel::{exp_theta_z, integrate_over_support, ChannelModel, JumpMeasure};
use crate::error::{Error, Result};
use crate::quad::{sum_series, QuadResult};

/// `½ (x - x̂)²`.
pub fn gauss_loss(x: f64, x_hat: f64) -> f64 {
    let d = x - x_hat;
    0.5 * d * d
}

/// `x ln(x / x̂) - x + x̂`, with `0 ln 0 = 0` and `ℓ_P(x, 0) = ∞` for `x > 0`.
pub fn poisson_loss(x: f64, x_hat: f64) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(Error::domain("x", x, "[0, inf)"));
    }
    if !(x_hat >= 0.0) {
        return Err(Error::domain("x_hat", x_hat, "[0, inf)"));
    }
    Ok(poisson_loss_ln(x.ln(), x_hat.ln()))
}

/// `ℓ_P(e^{ln_a}, e^{ln_b})`, accurate when `a ≈ b`.
pub(crate) fn poisson_loss_ln(ln_a: f64, ln_b: f64) -> f64 {
    if ln_a == f64::NEG_INFINITY {
        return ln_b.exp();
    }
    if ln_b == f64::NEG_INFINITY {
        return f64::INFINITY;
    }
    // ℓ_P(a, b) = b g(d) with d = ln(a/b) and g(d) = d e^d - e^d + 1 ≥ 0
    let d = ln_a - ln_b;
    if d > 1.0 {
        let a = ln_a.exp();
        return a * (d - 1.0) + ln_b.exp();
    }
    let g = if d.abs() < 0.1 {
        // g(d) = Σ_{n≥2} (n-1) dⁿ / n!
        let mut term = d * d / 2.0;
        let mut sum = term;
        let mut n = 2.0;
        while n < 30.0 {
            term *= d / (n + 1.0);
            let next = term * n;
            sum += next;
            if next.abs() <= 1e-17 * sum {
                break;
            }
            n += 1.0;
        }
        sum
    } else {
        d.exp() * (d - 1.0) + 1.0
    };
    ln_b.exp() * g.max(0.0)
}

/// A reconstruction `x̂ = (r₀, z ↦ r_z)` where the jump part is a mixture of
/// exponentials, `r_z = Σ_j w_j e^{θ_j z}`. Posterior means of `e^{φ'(X)z}`
/// under a finite-support prior have exactly this form.
#[derive(Debug, Clone, PartialEq)]
pub struct Reconstruction {
    r0: f64,
    components: Vec<(f64, f64)>,
}

impl Reconstruction {
    /// `components` are `(weight, θ)` pairs with nonnegative weights; `θ` may
    /// be `-∞`, contributing nothing for positive jumps.
    pub fn mixture(r0: f64, components: Vec<(f64, f64)>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidArgument("reconstruction needs a component".into()));
        }
        for &(w, t) in &components {
            if !(w >= 0.0 && w.is_finite()) {
                return Err(Error::InvalidArgument(format!("component weight {w} is invalid")));
            }
            if t.is_nan() || t == f64::INFINITY {
                return Err(Error::InvalidArgument(format!("component exponent {t} is invalid")));
            }
        }
        Ok(Reconstruction { r0, components })
    }

    pub fn r0(&self) -> f64 {
        self.r0
    }

    pub fn components(&self) -> &[(f64, f64)] {
        &self.components
    }

    /// `ln r_z` via log-sum-exp.
    pub fn ln_rate(&self, z: f64) -> f64 {
        let mut max = f64::NEG_INFINITY;
        let mut terms = Vec::with_capacity(self.components.len());
        for &(w, t) in &self.components {
            if w > 0.0 {
                let l = w.ln() + if t == f64::NEG_INFINITY { exp_theta_z(t, z).ln() } else { t * z };
                terms.push(l);
                max = max.max(l);
            }
        }
        if max.is_infinite() {
            return max;
        }
        max + terms.iter().map(|l| (l - max).exp()).sum::<f64>().ln()
    }

    /// `r_z`.
    pub fn rate(&self, z: f64) -> f64 {
        self.ln_rate(z).exp()
    }

    fn has_positive_rate(&self) -> bool {
        self.components
            .iter()
            .any(|&(w, t)| w > 0.0 && t > f64::NEG_INFINITY)
    }
}

/// `X̂^{δ_y}`: `r₀ = φ'(y)` and `r_z = e^{φ'(y) z}`.
pub fn point_mass_reconstruction(ch: &ChannelModel, y: f64) -> Result<Reconstruction> {
    let theta = ch.link(y)?;
    Reconstruction::mixture(theta, vec![(1.0, theta)])
}

/// `ℓ_L(x, x̂)`. The continuous part compares on the natural-parameter
/// scale, `σ² ℓ_G(φ'(x), r₀)`; the jump part is integrated (or summed) to
/// absolute tolerance `tol`.
///
/// The θ scale is a choice: it is what makes `r₀ = E[φ'(X) | Y]` optimal.
/// Comparing `x` with `r₀` directly agrees whenever `φ'` is the identity,
/// which covers every built-in channel with `σ ≠ 0`.
pub fn levy_loss(ch: &ChannelModel, x: f64, recon: &Reconstruction, tol: f64) -> Result<QuadResult> {
    let theta = ch.link(x)?;
    let triple = ch.triple();
    let sigma = triple.volatility;
    let continuous = if sigma > 0.0 {
        if !theta.is_finite() || !recon.r0.is_finite() {
            return Ok(QuadResult::exact(f64::INFINITY));
        }
        sigma * sigma * gauss_loss(theta, recon.r0)
    } else {
        0.0
    };

    if triple.jumps.is_zero() {
        return Ok(QuadResult::exact(continuous));
    }
    if !recon.has_positive_rate() {
        // r_z ≡ 0: finite only if the input never jumps either
        if theta > f64::NEG_INFINITY {
            return Ok(QuadResult::exact(f64::INFINITY));
        }
        return Ok(QuadResult::exact(continuous));
    }

    let scaled_term = |z: f64, ln_w: f64| -> Result<f64> {
        let ln_a = if theta == f64::NEG_INFINITY {
            if z < 0.0 {
                return Err(Error::domain("jump size", z, "(0, inf) for a boundary input"));
            }
            f64::NEG_INFINITY
        } else {
            theta * z
        };
        Ok(poisson_loss_ln(ln_a + ln_w, recon.ln_rate(z) + ln_w))
    };
    let term = |z: f64| scaled_term(z, 0.0);

    let jumps = match &triple.jumps {
        JumpMeasure::Zero => QuadResult::exact(0.0),
        JumpMeasure::Atoms(atoms) => {
            let mut s = 0.0;
            for &(z, m) in atoms {
                s += m * term(z)?;
            }
            QuadResult::exact(s)
        }
        JumpMeasure::Lattice(lattice) => {
            let (alpha, beta, rho) = lattice_envelope(theta, recon, lattice.ratio)?;
            let bound = lattice.bound;
            sum_series(
                1,
                |k| -> Result<f64> { Ok((lattice.weight)(k) * term(k as f64)?) },
                |k| {
                    let k = k as f64;
                    bound * rho.powf(k) * ((alpha + beta * k) / (1.0 - rho) + beta * rho / (1.0 - rho).powi(2))
                },
                tol,
            )?
        }
        JumpMeasure::Density(d) => {
            let w = d.density.clone();
            integrate_over_support(
                &d.support,
                |z: f64| -> Result<f64> {
                    let wz = w(z);
                    if wz == 0.0 {
                        return Ok(0.0);
                    }
                    // w ℓ_P(a, b) = ℓ_P(w a, w b) keeps e^{θz} from overflowing
                    scaled_term(z, wz.ln())
                },
                tol,
            )?
        }
    };
    Ok(QuadResult {
        value: continuous + jumps.value,
        ..jumps
    })
}

/// Linear-times-geometric envelope `(α + βk) ρ^k / ratio^k` of
/// `ℓ_P(e^{θk}, r_k)`, with `ρ = ratio · max(1, e^θ, e^{θ_j})`.
fn lattice_envelope(theta: f64, recon: &Reconstruction, ratio: f64) -> Result<(f64, f64, f64)> {
    let mut ln_m: f64 = 0.0;
    if theta.is_finite() {
        ln_m = ln_m.max(theta);
    }
    let mut total_w = 0.0;
    let mut best = (0.0, 0.0); // (weight, θ) of the heaviest component with finite θ
    for &(w, t) in &recon.components {
        if w > 0.0 {
            total_w += w;
            if t.is_finite() {
                ln_m = ln_m.max(t);
                if w > best.0 {
                    best = (w, t);
                }
            }
        }
    }
    let rho = ratio * ln_m.exp();
    if !(rho < 1.0) {
        return Err(Error::Divergent(format!(
            "jump series of the loss does not converge (envelope ratio {rho})"
        )));
    }
    // |ln b_k| ≤ A_b + k B_b, |ln a_k| ≤ k |θ|; ℓ_P(a, b) ≤ a |ln a - ln b| + a + b
    let a_b = total_w.ln().abs().max(best.0.ln().abs());
    let b_b = ln_m.max(best.1.abs());
    let theta_abs = if theta.is_finite() { theta.abs() } else { 0.0 };
    let alpha = a_b + 1.0 + total_w;
    let beta = theta_abs + b_b;
    Ok((alpha, beta, rho))
}

/// `d_φ(x₁, x₂) = φ(x₁) - φ(x₂) - φ'(x₂)(x₁ - x₂)`, the representative loss.
/// `x₂` must lie in the interior of the input domain.
pub fn representative_loss(ch: &ChannelModel, x1: f64, x2: f64) -> Result<f64> {
    ch.check_input(x1)?;
    if !ch.input_domain().contains_interior(x2) {
        return Err(Error::domain("x2", x2, format!("interior of {}", ch.input_domain())));
    }
    let d = ch.dual(x1)? - ch.dual(x2)? - ch.link(x2)? * (x1 - x2);
    Ok(d.max(0.0))
}

/// `(x, d_φ(x_ref, x))` for each `x` in `grid`.
pub fn bregman_curve(ch: &ChannelModel, x_ref: f64, grid: &[f64]) -> Result<Vec<(f64, f64)>> {
    grid.iter()
        .map(|&x| Ok((x, representative_loss(ch, x_ref, x)?)))
        .collect()
}
