//! Each information–estimation identity as a falsifiable numerical check.
//!
//! A check computes both sides independently, sums the error estimates of
//! every numerical step into an error budget, and passes when
//! `|lhs - rhs| ≤ error_budget + slack · tol`.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{ChannelModel, GammaAmplified, LevyTriple};
use crate::error::{Error, Result};
use crate::info::{
    mi_derivative, mismatch_cost, mutual_information_model, output_relative_entropy,
    output_relative_entropy_model, relative_entropy_via_loss_integral, relent_derivative,
    entropy_via_loss_integral,
};
use crate::loss::{levy_loss, point_mass_reconstruction, representative_loss};
use crate::posterior::{expected_levy_loss, pythagorean_decomposition, regularity_check, DiscretePrior};
use crate::quad::{expectation_over_output, QuadResult};

/// Default multiplier of `tol` added to every error budget.
pub const DEFAULT_SLACK: f64 = 10.0;
/// Relative precision demanded of the Esscher tilt identity.
pub const ESSCHER_TOL: f64 = 1e-10;
/// Absolute precision demanded of Fenchel duality.
pub const FENCHEL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum IdentityId {
    Immle,
    Dmle,
    Entropy,
    Relent,
    BregmanCollapse,
    BregmanSnrDeriv,
    GammaAmpInvariance,
    Esscher,
    Pythagorean,
    Fenchel,
    CondMean,
}

impl fmt::Display for IdentityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            IdentityId::Immle => "IMMLE",
            IdentityId::Dmle => "DMLE",
            IdentityId::Entropy => "ENTROPY",
            IdentityId::Relent => "RELENT",
            IdentityId::BregmanCollapse => "BREGMAN_COLLAPSE",
            IdentityId::BregmanSnrDeriv => "BREGMAN_SNR_DERIV",
            IdentityId::GammaAmpInvariance => "GAMMA_AMP_INVARIANCE",
            IdentityId::Esscher => "ESSCHER",
            IdentityId::Pythagorean => "PYTHAGOREAN",
            IdentityId::Fenchel => "FENCHEL",
            IdentityId::CondMean => "COND_MEAN",
        };
        f.write_str(s)
    }
}

/// The four shipped channels, by name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BuiltinChannel {
    Gaussian,
    Poisson,
    Gamma,
    #[serde(alias = "nb", alias = "negative_binomial")]
    NegativeBinomial,
}

impl BuiltinChannel {
    pub fn model(self) -> ChannelModel {
        match self {
            BuiltinChannel::Gaussian => ChannelModel::gaussian(),
            BuiltinChannel::Poisson => ChannelModel::poisson(),
            BuiltinChannel::Gamma => ChannelModel::gamma(),
            BuiltinChannel::NegativeBinomial => ChannelModel::negative_binomial(),
        }
    }
}

/// Atoms and weights as written in a configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriorSpec {
    pub atoms: Vec<f64>,
    pub weights: Vec<f64>,
}

impl PriorSpec {
    pub fn new(atoms: &[f64], weights: &[f64]) -> Self {
        PriorSpec {
            atoms: atoms.to_vec(),
            weights: weights.to_vec(),
        }
    }

    pub fn build(&self) -> Result<DiscretePrior> {
        DiscretePrior::new(self.atoms.clone(), self.weights.clone())
    }
}

/// A deliberate corruption, used to show that a check can fail.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Mutation {
    #[default]
    None,
    /// Loss side computed with `σ = 0`.
    DropVolatility,
    /// Loss side computed with `ν` multiplied by `factor`.
    ScaleJumps { factor: f64 },
    /// Information side multiplied by `factor`.
    ScaleLhs { factor: f64 },
    /// Loss side multiplied by `factor`.
    ScaleRhs { factor: f64 },
}

impl Mutation {
    fn is_none(&self) -> bool {
        matches!(self, Mutation::None)
    }

    fn loss_channel(&self, ch: &ChannelModel) -> Result<ChannelModel> {
        let t = ch.triple();
        Ok(match *self {
            Mutation::DropVolatility => ch.with_triple(LevyTriple::new(t.drift, 0.0, t.jumps.clone())?),
            Mutation::ScaleJumps { factor } => {
                ch.with_triple(LevyTriple::new(t.drift, t.volatility, t.jumps.scaled(factor))?)
            }
            _ => ch.clone(),
        })
    }
}

/// One configured identity check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "check", rename_all = "snake_case", deny_unknown_fields)]
pub enum Check {
    Immle {
        channel: BuiltinChannel,
        prior: PriorSpec,
        gamma: f64,
        #[serde(default, skip_serializing_if = "Mutation::is_none")]
        mutation: Mutation,
    },
    Dmle {
        channel: BuiltinChannel,
        p: PriorSpec,
        q: PriorSpec,
        gamma: f64,
    },
    Entropy {
        channel: BuiltinChannel,
        prior: PriorSpec,
    },
    Relent {
        channel: BuiltinChannel,
        p: PriorSpec,
        q: PriorSpec,
    },
    Bregman {
        channel: BuiltinChannel,
        x1: f64,
        x2: f64,
        gamma: f64,
    },
    GammaAmpInvariance {
        shape: f64,
        prior: PriorSpec,
        p: PriorSpec,
        q: PriorSpec,
        amplifications: Vec<f64>,
    },
    Esscher {
        channel: BuiltinChannel,
        x: f64,
        gamma: f64,
        outputs: Vec<f64>,
    },
    Fenchel {
        channel: BuiltinChannel,
        inputs: Vec<f64>,
    },
    CondMean {
        channel: BuiltinChannel,
        x: f64,
        gamma: f64,
    },
    Pythagorean {
        channel: BuiltinChannel,
        p: PriorSpec,
        q: PriorSpec,
        gamma: f64,
        jump_size: f64,
    },
}

impl Check {
    /// Checks what can be checked without numerics: priors, domains, SNRs.
    pub fn validate(&self) -> Result<()> {
        let snr = |g: f64| {
            if g > 0.0 && g.is_finite() {
                Ok(())
            } else {
                Err(Error::domain("gamma", g, "(0, inf)"))
            }
        };
        match self {
            Check::Immle { channel, prior, gamma, .. } => {
                snr(*gamma)?;
                prior.build()?.validate_for(&channel.model())
            }
            Check::Dmle { channel, p, q, gamma } => {
                snr(*gamma)?;
                validate_pair(&channel.model(), p, q)
            }
            Check::Entropy { channel, prior } => prior.build()?.validate_for(&channel.model()),
            Check::Relent { channel, p, q } => validate_pair(&channel.model(), p, q),
            Check::Bregman { channel, x1, x2, gamma } => {
                snr(*gamma)?;
                representative_loss(&channel.model(), *x1, *x2).map(|_| ())
            }
            Check::GammaAmpInvariance {
                shape,
                prior,
                p,
                q,
                amplifications,
            } => {
                let gamma = ChannelModel::gamma();
                prior.build()?.validate_for(&gamma)?;
                validate_pair(&gamma, p, q)?;
                if amplifications.is_empty() {
                    return Err(Error::InvalidArgument("amplification grid is empty".into()));
                }
                amplifications
                    .iter()
                    .try_for_each(|&a| GammaAmplified::new(*shape, a).map(|_| ()))
            }
            Check::Esscher { channel, x, gamma, outputs } => {
                snr(*gamma)?;
                let ch = channel.model();
                ch.check_input(*x)?;
                outputs.iter().try_for_each(|&y| ch.check_output(y))
            }
            Check::Fenchel { channel, inputs } => {
                let ch = channel.model();
                inputs.iter().try_for_each(|&x| ch.check_input(x))
            }
            Check::CondMean { channel, x, gamma } => {
                snr(*gamma)?;
                channel.model().check_input(*x)
            }
            Check::Pythagorean {
                channel, p, q, gamma, ..
            } => {
                snr(*gamma)?;
                validate_pair(&channel.model(), p, q)
            }
        }
    }
}

fn validate_pair(ch: &ChannelModel, p: &PriorSpec, q: &PriorSpec) -> Result<()> {
    let (p, q) = (p.build()?, q.build()?);
    p.validate_for(ch)?;
    q.validate_for(ch)?;
    if !p.is_dominated_by(&q) {
        return Err(Error::AbsoluteContinuity("every atom of P must be an atom of Q".into()));
    }
    Ok(())
}

/// Outcome of one identity check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityReport {
    pub identity_id: IdentityId,
    pub lhs: f64,
    pub rhs: f64,
    pub abs_gap: f64,
    pub error_budget: f64,
    pub passed: bool,
    pub tol: f64,
    pub slack: f64,
    /// The check as configured.
    pub config: Check,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl IdentityReport {
    fn new(id: IdentityId, lhs: f64, rhs: f64, error_budget: f64, tol: f64, slack: f64, config: &Check) -> Self {
        let abs_gap = (lhs - rhs).abs();
        IdentityReport {
            identity_id: id,
            lhs,
            rhs,
            abs_gap,
            error_budget,
            passed: abs_gap <= error_budget + slack * tol,
            tol,
            slack,
            config: config.clone(),
            note: None,
        }
    }

    fn from_results(id: IdentityId, lhs: QuadResult, rhs: QuadResult, s: &Settings, config: &Check) -> Self {
        Self::new(
            id,
            lhs.value,
            rhs.value,
            lhs.error_estimate + rhs.error_estimate,
            s.tol,
            s.slack,
            config,
        )
    }

    fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

/// Global tolerance and slack of a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    pub tol: f64,
    #[serde(default = "default_slack")]
    pub slack: f64,
}

fn default_slack() -> f64 {
    DEFAULT_SLACK
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            tol: 1e-6,
            slack: DEFAULT_SLACK,
        }
    }
}

/// `∂I/∂γ` against the matched expected Lévy loss.
pub fn check_immle(ch: &ChannelModel, prior: &DiscretePrior, gamma: f64, s: &Settings, mutation: Mutation, config: &Check) -> Result<IdentityReport> {
    regularity_check(ch, prior, s.tol)?;
    let lhs = mi_derivative(ch, prior, gamma, s.tol)?;
    let loss_ch = mutation.loss_channel(ch)?;
    let rhs = expected_levy_loss(&loss_ch, prior, prior, gamma, s.tol)?;
    let (lhs, rhs) = match mutation {
        Mutation::ScaleLhs { factor } => (lhs.scale(factor), rhs),
        Mutation::ScaleRhs { factor } => (lhs, rhs.scale(factor)),
        _ => (lhs, rhs),
    };
    let r = IdentityReport::from_results(IdentityId::Immle, lhs, rhs, s, config);
    Ok(if mutation.is_none() { r } else { r.with_note("mutated") })
}

/// `D(P_{Y_γ} ‖ Q_{Y_γ})` against the cost of mismatch integrated over `[0, γ]`.
pub fn check_dmle(ch: &ChannelModel, p: &DiscretePrior, q: &DiscretePrior, gamma: f64, s: &Settings, config: &Check) -> Result<IdentityReport> {
    let lhs = output_relative_entropy(ch, p, q, gamma, s.tol)?;
    let rhs = mismatch_cost(ch, p, q, gamma, s.tol)?;
    Ok(IdentityReport::from_results(IdentityId::Dmle, lhs, rhs, s, config)
        .with_note("finiteness verified for the expected-loss form only"))
}

/// `∫₀^∞ E ℓ_L dγ` against `H(X)`.
pub fn check_entropy(ch: &ChannelModel, prior: &DiscretePrior, s: &Settings, config: &Check) -> Result<IdentityReport> {
    let lhs = entropy_via_loss_integral(ch, prior, s.tol)?;
    let r = IdentityReport::from_results(IdentityId::Entropy, lhs.result, QuadResult::exact(prior.entropy()), s, config);
    Ok(r.with_note(tail_note(&lhs)))
}

/// `∫₀^∞ (mismatched - matched) dγ` against `D(P ‖ Q)`.
pub fn check_relent(ch: &ChannelModel, p: &DiscretePrior, q: &DiscretePrior, s: &Settings, config: &Check) -> Result<IdentityReport> {
    let lhs = relative_entropy_via_loss_integral(ch, p, q, s.tol)?;
    let rhs = QuadResult::exact(p.relative_entropy(q)?);
    Ok(IdentityReport::from_results(IdentityId::Relent, lhs.result, rhs, s, config).with_note(tail_note(&lhs)))
}

fn tail_note(r: &crate::quad::ImproperIntegral) -> String {
    format!(
        "gamma_max = {}, fitted decay rate = {:e}, tail = {:e}",
        r.gamma_max, r.decay_rate, r.tail
    )
}

/// Both forms of the representative loss against `d_φ(x₁, x₂)`: the
/// ν-integral of the Lévy loss, and `∂/∂γ D` between point-mass outputs.
pub fn check_bregman(ch: &ChannelModel, x1: f64, x2: f64, gamma: f64, s: &Settings, config: &Check) -> Result<Vec<IdentityReport>> {
    let closed = QuadResult::exact(representative_loss(ch, x1, x2)?);
    let collapse = levy_loss(ch, x1, &point_mass_reconstruction(ch, x2)?, s.tol)?;
    let (p1, p2) = (DiscretePrior::point_mass(x1), DiscretePrior::point_mass(x2));
    let deriv = relent_derivative(ch, &p1, &p2, gamma, s.tol)?;
    Ok(vec![
        IdentityReport::from_results(IdentityId::BregmanCollapse, collapse, closed, s, config),
        IdentityReport::from_results(IdentityId::BregmanSnrDeriv, deriv, closed, s, config),
    ])
}

/// Spread of `I(X; Y_a)` and `D(P_{Y_a} ‖ Q_{Y_a})` over the amplification
/// grid under `Y_a | X ~ Γ(k, aX/k)`; both should be constant in `a`.
pub fn check_gamma_amp_invariance(
    shape: f64,
    prior: &DiscretePrior,
    p: &DiscretePrior,
    q: &DiscretePrior,
    amplifications: &[f64],
    s: &Settings,
    config: &Check,
) -> Result<Vec<IdentityReport>> {
    let qtol = s.tol / 10.0;
    let mut mi = Vec::new();
    let mut d = Vec::new();
    for &a in amplifications {
        let model = GammaAmplified::new(shape, a)?;
        mi.push(mutual_information_model(&model, prior, qtol)?);
        d.push(output_relative_entropy_model(&model, p, q, qtol)?);
    }
    let spread = |v: &[QuadResult], what: &str| -> IdentityReport {
        let hi = v.iter().max_by(|a, b| a.value.total_cmp(&b.value)).unwrap();
        let lo = v.iter().min_by(|a, b| a.value.total_cmp(&b.value)).unwrap();
        IdentityReport::new(
            IdentityId::GammaAmpInvariance,
            hi.value - lo.value,
            0.0,
            hi.error_estimate + lo.error_estimate,
            s.tol,
            s.slack,
            config,
        )
        .with_note(format!("spread of {what} over a = {amplifications:?}"))
    };
    let mut reports = vec![spread(&mi, "I(X;Y_a)"), spread(&d, "D(P_Y_a||Q_Y_a)")];
    reports.push(check_gamma_density_relation(shape, prior, amplifications, s, config)?);
    Ok(reports)
}

/// `a ∂p_a(y)/∂a = -∂(y p_a(y))/∂y` for the output density `p_a` of the
/// amplified Gamma channel, by central differences on a grid of outputs.
pub fn check_gamma_density_relation(
    shape: f64,
    prior: &DiscretePrior,
    amplifications: &[f64],
    s: &Settings,
    config: &Check,
) -> Result<IdentityReport> {
    let density = |a: f64, y: f64| -> Result<f64> {
        let m = GammaAmplified::new(shape, a)?;
        let mut f = 0.0;
        for (&x, &p) in prior.atoms().iter().zip(prior.weights()) {
            f += p * m.density(x, y)?;
        }
        Ok(f)
    };
    let mut worst: f64 = 0.0;
    let mut budget: f64 = 0.0;
    let mut lhs_at_worst = 0.0;
    let mut rhs_at_worst = 0.0;
    for &a in amplifications {
        let mean = prior.atoms().iter().zip(prior.weights()).map(|(x, p)| p * a * x).sum::<f64>();
        for j in 1..=16 {
            let y = mean * j as f64 / 8.0;
            let ha = 1e-4 * a;
            let hy = 1e-4 * y;
            let d = |f: &dyn Fn(f64) -> Result<f64>, t: f64, h: f64| -> Result<(f64, f64)> {
                let d1 = (f(t + h)? - f(t - h)?) / (2.0 * h);
                let d2 = (f(t + h / 2.0)? - f(t - h / 2.0)?) / h;
                Ok(((4.0 * d2 - d1) / 3.0, (d2 - d1).abs()))
            };
            let (da, ea) = d(&|b| density(b, y), a, ha)?;
            let (dy, ey) = d(&|t| Ok(t * density(a, t)?), y, hy)?;
            let l = a * da;
            let r = -dy;
            let scale = l.abs().max(r.abs()).max(f64::MIN_POSITIVE);
            // rounding of the differences plus the Richardson residuals
            let err = a * ea + ey + 1e-10 * scale;
            if (l - r).abs() - err > worst - budget {
                worst = (l - r).abs();
                budget = err;
                lhs_at_worst = l;
                rhs_at_worst = r;
            }
        }
    }
    let _ = worst;
    Ok(IdentityReport::new(
        IdentityId::GammaAmpInvariance,
        lhs_at_worst,
        rhs_at_worst,
        budget,
        s.tol,
        s.slack,
        config,
    )
    .with_note("density relation a dp/da = -d(y p)/dy at the worst grid point"))
}

/// Esscher tilt: `f(y|x, γ)` against `e^{θy - γκ(θ)} p₀^γ(y)`; reports the
/// largest relative error over the output grid and passes at [`ESSCHER_TOL`].
pub fn check_esscher(ch: &ChannelModel, x: f64, gamma: f64, outputs: &[f64], config: &Check) -> Result<IdentityReport> {
    let mut worst: f64 = 0.0;
    for &y in outputs {
        let direct = ch.cond_law(x, gamma, y)?;
        let tilted = ch.tilted_base_law(x, gamma, y)?;
        let scale = direct.abs().max(tilted.abs());
        if scale > 0.0 {
            worst = worst.max((direct - tilted).abs() / scale);
        }
    }
    Ok(IdentityReport::new(IdentityId::Esscher, worst, 0.0, ESSCHER_TOL, ESSCHER_TOL, 0.0, config)
        .with_note("largest relative error over the output grid"))
}

/// Fenchel duality `κ(φ'(x)) + φ(x) = x φ'(x)`; largest absolute residual.
pub fn check_fenchel(ch: &ChannelModel, inputs: &[f64], config: &Check) -> Result<IdentityReport> {
    let mut worst: f64 = 0.0;
    for &x in inputs {
        let theta = ch.link(x)?;
        if !theta.is_finite() {
            continue;
        }
        let r = ch.cumulant(theta)? + ch.dual(x)? - x * theta;
        worst = worst.max(r.abs());
    }
    Ok(IdentityReport::new(IdentityId::Fenchel, worst, 0.0, FENCHEL_TOL, FENCHEL_TOL, 0.0, config)
        .with_note("largest absolute residual over the input grid"))
}

/// Conditional mean `E[Y|x] = γx` and variance `γ κ''(θ)` by quadrature.
pub fn check_cond_mean(ch: &ChannelModel, x: f64, gamma: f64, s: &Settings, config: &Check) -> Result<Vec<IdentityReport>> {
    let pm = DiscretePrior::point_mass(x);
    let mean = expectation_over_output(ch, gamma, &pm, |y| y, s.tol)?;
    let m = gamma * x;
    let var = expectation_over_output(ch, gamma, &pm, |y| (y - m) * (y - m), s.tol)?;
    let want_var = ch.conditional_variance(x, gamma)?;
    Ok(vec![
        IdentityReport::from_results(IdentityId::CondMean, mean, QuadResult::exact(m), s, config).with_note("mean"),
        IdentityReport::from_results(IdentityId::CondMean, var, QuadResult::exact(want_var), s, config).with_note("variance"),
    ])
}

/// The two Pythagorean decompositions of the mismatch excess.
pub fn check_pythagorean(
    ch: &ChannelModel,
    p: &DiscretePrior,
    q: &DiscretePrior,
    gamma: f64,
    jump_size: f64,
    s: &Settings,
    config: &Check,
) -> Result<Vec<IdentityReport>> {
    let r = pythagorean_decomposition(ch, p, q, gamma, jump_size, s.tol)?;
    let mut out = Vec::new();
    if let Some((l, rr)) = r.gaussian {
        out.push(IdentityReport::from_results(IdentityId::Pythagorean, l, rr, s, config).with_note("squared error on phi'(X)"));
    }
    let (l, rr) = r.poisson;
    out.push(
        IdentityReport::from_results(IdentityId::Pythagorean, l, rr, s, config)
            .with_note(format!("Poisson loss on exp(phi'(X) z), z = {jump_size}")),
    );
    Ok(out)
}

/// Runs one configured check.
pub fn run_check(check: &Check, s: &Settings) -> Result<Vec<IdentityReport>> {
    check.validate()?;
    match check {
        Check::Immle { channel, prior, gamma, mutation } => {
            Ok(vec![check_immle(&channel.model(), &prior.build()?, *gamma, s, *mutation, check)?])
        }
        Check::Dmle { channel, p, q, gamma } => {
            Ok(vec![check_dmle(&channel.model(), &p.build()?, &q.build()?, *gamma, s, check)?])
        }
        Check::Entropy { channel, prior } => Ok(vec![check_entropy(&channel.model(), &prior.build()?, s, check)?]),
        Check::Relent { channel, p, q } => Ok(vec![check_relent(&channel.model(), &p.build()?, &q.build()?, s, check)?]),
        Check::Bregman { channel, x1, x2, gamma } => check_bregman(&channel.model(), *x1, *x2, *gamma, s, check),
        Check::GammaAmpInvariance {
            shape,
            prior,
            p,
            q,
            amplifications,
        } => check_gamma_amp_invariance(*shape, &prior.build()?, &p.build()?, &q.build()?, amplifications, s, check),
        Check::Esscher { channel, x, gamma, outputs } => Ok(vec![check_esscher(&channel.model(), *x, *gamma, outputs, check)?]),
        Check::Fenchel { channel, inputs } => Ok(vec![check_fenchel(&channel.model(), inputs, check)?]),
        Check::CondMean { channel, x, gamma } => check_cond_mean(&channel.model(), *x, *gamma, s, check),
        Check::Pythagorean {
            channel,
            p,
            q,
            gamma,
            jump_size,
        } => check_pythagorean(&channel.model(), &p.build()?, &q.build()?, *gamma, *jump_size, s, check),
    }
}

/// Runs every check concurrently; reports are sorted by identity and then
/// by the configuration, so the output does not depend on scheduling. The
/// first error in that order is returned.
pub fn run_suite(checks: &[Check], s: &Settings) -> Result<Vec<IdentityReport>> {
    for c in checks {
        c.validate()?;
    }
    let results: Vec<Result<Vec<IdentityReport>>> = checks.par_iter().map(|c| run_check(c, s)).collect();
    let mut reports = Vec::new();
    for r in results {
        reports.extend(r?);
    }
    reports.sort_by_cached_key(|r| (r.identity_id, format!("{:?}", r.config), r.note.clone()));
    Ok(reports)
}

/// The default battery: every identity on every channel it applies to.
pub fn default_suite() -> Vec<Check> {
    use BuiltinChannel::*;
    let half = [0.5, 0.5];
    let binary = |c: BuiltinChannel| if c == Gaussian { vec![-1.0, 1.0] } else { vec![1.0, 2.0] };
    let mut v = Vec::new();
    for c in [Gaussian, Poisson, Gamma, NegativeBinomial] {
        let atoms = binary(c);
        let p = PriorSpec::new(&atoms, &half);
        let q = PriorSpec::new(&atoms, &[0.8, 0.2]);
        for gamma in [0.5, 1.0, 2.0] {
            v.push(Check::Immle {
                channel: c,
                prior: p.clone(),
                gamma,
                mutation: Mutation::None,
            });
        }
        for gamma in [0.5, 2.0] {
            v.push(Check::Dmle {
                channel: c,
                p: p.clone(),
                q: q.clone(),
                gamma,
            });
        }
        let (x1, x2) = if c == Gaussian { (-0.5, 1.5) } else if c == NegativeBinomial { (1.0, 2.0) } else { (2.0, 1.0) };
        v.push(Check::Bregman { channel: c, x1, x2, gamma: 1.0 });
        v.push(Check::Pythagorean {
            channel: c,
            p: p.clone(),
            q: q.clone(),
            gamma: 1.0,
            jump_size: 1.0,
        });
        let x = atoms[1];
        v.push(Check::CondMean { channel: c, x, gamma: 1.5 });
        v.push(Check::Esscher {
            channel: c,
            x,
            gamma: 2.0,
            outputs: if matches!(c, Poisson | NegativeBinomial) {
                (0..12).map(f64::from).collect()
            } else {
                (1..12).map(|i| 0.5 * f64::from(i)).collect()
            },
        });
        v.push(Check::Fenchel {
            channel: c,
            inputs: (1..=20).map(|i| 0.25 * f64::from(i)).collect(),
        });
    }
    v.push(Check::Entropy {
        channel: Gaussian,
        prior: PriorSpec::new(&[-1.0, 1.0], &half),
    });
    v.push(Check::Entropy {
        channel: Poisson,
        prior: PriorSpec::new(&[1.0, 2.0], &half),
    });
    v.push(Check::Entropy {
        channel: Poisson,
        prior: PriorSpec::new(&[0.0, 3.0], &half),
    });
    for c in [Poisson, Gamma] {
        v.push(Check::Relent {
            channel: c,
            p: PriorSpec::new(&[1.0, 2.0], &half),
            q: PriorSpec::new(&[1.0, 2.0], &[0.9, 0.1]),
        });
    }
    for shape in [1.0, 2.0] {
        v.push(Check::GammaAmpInvariance {
            shape,
            prior: PriorSpec::new(&[1.0, 2.0], &half),
            p: PriorSpec::new(&[1.0, 2.0], &half),
            q: PriorSpec::new(&[1.0, 2.0], &[0.9, 0.1]),
            amplifications: vec![0.5, 1.0, 2.0, 4.0],
        });
    }
    v
}
