//! Mutual information, relative entropy between output marginals, and their
//! SNR-derivative and SNR-integral forms.

use rayon::prelude::*;
use serde::Serialize;

use crate::channel::ChannelModel;
use crate::error::{Error, Result};
use crate::posterior::{expected_levy_loss, expected_mismatch_excess, DiscretePrior};
use crate::quad::{
    integrate_over_output, integrate_snr, integrate_snr_to_infinity, ChannelAtSnr, ImproperIntegral,
    ObservationModel, QuadResult,
};

fn log_sum_exp(weights: &[f64], lnf: &[f64]) -> f64 {
    let mut max = f64::NEG_INFINITY;
    for (p, l) in weights.iter().zip(lnf) {
        if *p > 0.0 {
            max = max.max(p.ln() + l);
        }
    }
    if !max.is_finite() {
        return max;
    }
    let s: f64 = weights
        .iter()
        .zip(lnf)
        .filter(|(p, _)| **p > 0.0)
        .map(|(p, l)| (p.ln() + l - max).exp())
        .sum();
    max + s.ln()
}

/// `I(X; Y)` for `X ~ prior` through an arbitrary observation model.
pub fn mutual_information_model<M: ObservationModel + ?Sized>(
    model: &M,
    prior: &DiscretePrior,
    tol: f64,
) -> Result<QuadResult> {
    if prior.is_point_mass() {
        return Ok(QuadResult::exact(0.0));
    }
    let p = prior.weights();
    integrate_over_output(model, prior.atoms(), tol, |_y: f64, lnf: &[f64]| -> f64 {
        let ln_mix = log_sum_exp(p, lnf);
        if ln_mix == f64::NEG_INFINITY {
            return 0.0;
        }
        p.iter()
            .zip(lnf)
            .filter(|(_, l)| **l > f64::NEG_INFINITY)
            .map(|(pi, l)| pi * l.exp() * (l - ln_mix))
            .sum()
    })
}

/// `I(X; Y_γ) = Σ p_i D(f(·|x_i) ‖ f_P)`. Exactly 0 at `γ = 0`.
pub fn mutual_information(ch: &ChannelModel, prior: &DiscretePrior, gamma: f64, tol: f64) -> Result<QuadResult> {
    prior.validate_for(ch)?;
    if !(gamma >= 0.0) {
        return Err(Error::domain("gamma", gamma, "[0, inf)"));
    }
    if gamma == 0.0 {
        return Ok(QuadResult::exact(0.0));
    }
    mutual_information_model(&ChannelAtSnr { channel: ch, gamma }, prior, tol)
}

/// `D(P_Y ‖ Q_Y)` between the output marginals of an observation model.
pub fn output_relative_entropy_model<M: ObservationModel + ?Sized>(
    model: &M,
    p: &DiscretePrior,
    q: &DiscretePrior,
    tol: f64,
) -> Result<QuadResult> {
    if p == q {
        return Ok(QuadResult::exact(0.0));
    }
    let mut atoms: Vec<f64> = p.atoms().iter().chain(q.atoms()).cloned().collect();
    atoms.sort_by(f64::total_cmp);
    atoms.dedup();
    let pw: Vec<f64> = atoms.iter().map(|&x| p.weight_of(x).unwrap_or(0.0)).collect();
    let qw: Vec<f64> = atoms.iter().map(|&x| q.weight_of(x).unwrap_or(0.0)).collect();
    integrate_over_output(model, &atoms, tol, |y: f64, lnf: &[f64]| -> Result<f64> {
        let lp = log_sum_exp(&pw, lnf);
        if lp == f64::NEG_INFINITY {
            return Ok(0.0);
        }
        let lq = log_sum_exp(&qw, lnf);
        if lq == f64::NEG_INFINITY {
            return Err(Error::AbsoluteContinuity(format!(
                "output y = {y} has positive density under P but not under Q"
            )));
        }
        Ok(lp.exp() * (lp - lq))
    })
}

/// `D(P_{Y_γ} ‖ Q_{Y_γ})`. Exactly 0 at `γ = 0`.
pub fn output_relative_entropy(
    ch: &ChannelModel,
    p: &DiscretePrior,
    q: &DiscretePrior,
    gamma: f64,
    tol: f64,
) -> Result<QuadResult> {
    p.validate_for(ch)?;
    q.validate_for(ch)?;
    if !(gamma >= 0.0) {
        return Err(Error::domain("gamma", gamma, "[0, inf)"));
    }
    if gamma == 0.0 {
        return Ok(QuadResult::exact(0.0));
    }
    output_relative_entropy_model(&ChannelAtSnr { channel: ch, gamma }, p, q, tol)
}

/// Step of the central differences in γ: `max(10⁻³, 10⁻³ γ)`.
pub fn finite_difference_step(gamma: f64) -> f64 {
    (1e-3 * gamma).max(1e-3)
}

/// `d/dγ F` by a central difference with step `h` and one Richardson step,
/// `(4 D(h/2) - D(h)) / 3`. `f` is asked for absolute accuracy `tol h / 6`,
/// so the propagated quadrature error `3 ε / h` stays below `tol / 2`; the
/// reported error adds the extrapolation residual `|D(h/2) - D(h)| / 3`.
pub fn richardson_derivative<F>(mut f: F, gamma: f64, tol: f64) -> Result<QuadResult>
where
    F: FnMut(f64, f64) -> Result<QuadResult>,
{
    let h = finite_difference_step(gamma);
    if gamma < h {
        return Err(Error::StepUnderflow { gamma, h });
    }
    let ftol = tol * h / 6.0;
    let plus = f(gamma + h, ftol)?;
    let minus = f(gamma - h, ftol)?;
    let plus2 = f(gamma + h / 2.0, ftol)?;
    let minus2 = f(gamma - h / 2.0, ftol)?;
    let d1 = (plus.value - minus.value) / (2.0 * h);
    let d2 = (plus2.value - minus2.value) / h;
    let value = (4.0 * d2 - d1) / 3.0;
    let eps = [plus, minus, plus2, minus2]
        .iter()
        .map(|r| r.error_estimate)
        .fold(0.0, f64::max);
    let error_estimate = 3.0 * eps / h + (d2 - d1).abs() / 3.0;
    Ok(QuadResult {
        value,
        error_estimate,
        evaluations: plus.evaluations + minus.evaluations + plus2.evaluations + minus2.evaluations,
        converged: error_estimate <= tol,
    })
}

/// `∂I(X; Y_γ)/∂γ` by finite differences of [`mutual_information`].
pub fn mi_derivative(ch: &ChannelModel, prior: &DiscretePrior, gamma: f64, tol: f64) -> Result<QuadResult> {
    if prior.is_point_mass() {
        prior.validate_for(ch)?;
        return Ok(QuadResult::exact(0.0));
    }
    richardson_derivative(|g, t| mutual_information(ch, prior, g, t), gamma, tol)
}

/// `∂D(P_{Y_γ} ‖ Q_{Y_γ})/∂γ` by finite differences.
pub fn relent_derivative(
    ch: &ChannelModel,
    p: &DiscretePrior,
    q: &DiscretePrior,
    gamma: f64,
    tol: f64,
) -> Result<QuadResult> {
    richardson_derivative(|g, t| output_relative_entropy(ch, p, q, g, t), gamma, tol)
}

/// `∫₀^γ [E_P ℓ_L(X, X̂^Q_α) - E_P ℓ_L(X, X̂^P_α)] dα`, the cost of mismatch
/// accumulated up to SNR `γ`.
pub fn mismatch_cost(ch: &ChannelModel, p: &DiscretePrior, q: &DiscretePrior, gamma: f64, tol: f64) -> Result<QuadResult> {
    if !(gamma >= 0.0) {
        return Err(Error::domain("gamma", gamma, "[0, inf)"));
    }
    if p == q {
        p.validate_for(ch)?;
        return Ok(QuadResult::exact(0.0));
    }
    let inner = tol / (4.0 * gamma.max(1.0));
    integrate_snr(|a: f64| expected_mismatch_excess(ch, p, q, a, inner), 0.0, gamma, tol / 2.0)
}

/// `H(X) = ∫₀^∞ E ℓ_L(X, X̂^P_γ) dγ`.
pub fn entropy_via_loss_integral(ch: &ChannelModel, prior: &DiscretePrior, tol: f64) -> Result<ImproperIntegral> {
    prior.validate_for(ch)?;
    if prior.is_point_mass() {
        return Ok(ImproperIntegral {
            result: QuadResult::exact(0.0),
            gamma_max: 0.0,
            tail: 0.0,
            decay_rate: f64::INFINITY,
        });
    }
    integrate_snr_to_infinity(|a: f64, t: f64| expected_levy_loss(ch, prior, prior, a, t), tol)
}

/// `D(P ‖ Q) = ∫₀^∞ [E_P ℓ_L(X, X̂^Q_γ) - E_P ℓ_L(X, X̂^P_γ)] dγ`. Every atom
/// of `P` must be an atom of `Q`; otherwise the integral diverges and
/// [`Error::AbsoluteContinuity`] is returned up front.
pub fn relative_entropy_via_loss_integral(
    ch: &ChannelModel,
    p: &DiscretePrior,
    q: &DiscretePrior,
    tol: f64,
) -> Result<ImproperIntegral> {
    p.validate_for(ch)?;
    q.validate_for(ch)?;
    if !p.is_dominated_by(q) {
        return Err(Error::AbsoluteContinuity(
            "P has an atom that Q does not; D(P‖Q) is infinite".into(),
        ));
    }
    relative_entropy_integral_unchecked(ch, p, q, tol)
}

/// As [`relative_entropy_via_loss_integral`] without the atom-wise check;
/// a divergent integral is then detected from the non-decaying integrand.
pub fn relative_entropy_integral_unchecked(
    ch: &ChannelModel,
    p: &DiscretePrior,
    q: &DiscretePrior,
    tol: f64,
) -> Result<ImproperIntegral> {
    if p == q {
        return Ok(ImproperIntegral {
            result: QuadResult::exact(0.0),
            gamma_max: 0.0,
            tail: 0.0,
            decay_rate: f64::INFINITY,
        });
    }
    integrate_snr_to_infinity(|a: f64, t: f64| expected_mismatch_excess(ch, p, q, a, t), tol)
}

/// A functional sampled on an SNR grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InfoCurve {
    pub gammas: Vec<f64>,
    pub values: Vec<f64>,
    pub error_estimates: Vec<f64>,
}

impl InfoCurve {
    fn collect(gammas: &[f64], results: Vec<QuadResult>) -> Self {
        InfoCurve {
            gammas: gammas.to_vec(),
            values: results.iter().map(|r| r.value).collect(),
            error_estimates: results.iter().map(|r| r.error_estimate).collect(),
        }
    }

    /// True if every step up is at least `-(e_i + e_{i+1})`.
    pub fn is_nondecreasing(&self) -> bool {
        self.values
            .windows(2)
            .zip(self.error_estimates.windows(2))
            .all(|(v, e)| v[1] - v[0] >= -(e[0] + e[1]))
    }
}

fn check_grid(gammas: &[f64]) -> Result<()> {
    if gammas.windows(2).any(|w| !(w[1] > w[0])) || gammas.iter().any(|g| !(*g >= 0.0)) {
        return Err(Error::InvalidArgument("SNR grid must be nonnegative and strictly increasing".into()));
    }
    Ok(())
}

/// `γ ↦ I(X; Y_γ)` on a grid, evaluated in parallel.
pub fn mi_curve(ch: &ChannelModel, prior: &DiscretePrior, gammas: &[f64], tol: f64) -> Result<InfoCurve> {
    check_grid(gammas)?;
    let results = gammas
        .par_iter()
        .map(|&g| mutual_information(ch, prior, g, tol))
        .collect::<Result<Vec<_>>>()?;
    Ok(InfoCurve::collect(gammas, results))
}

/// `γ ↦ D(P_{Y_γ} ‖ Q_{Y_γ})` on a grid, evaluated in parallel.
pub fn relent_curve(
    ch: &ChannelModel,
    p: &DiscretePrior,
    q: &DiscretePrior,
    gammas: &[f64],
    tol: f64,
) -> Result<InfoCurve> {
    check_grid(gammas)?;
    let results = gammas
        .par_iter()
        .map(|&g| output_relative_entropy(ch, p, q, g, tol))
        .collect::<Result<Vec<_>>>()?;
    Ok(InfoCurve::collect(gammas, results))
}
