//! Finite-support priors, posteriors, the optimal reconstruction, and
//! matched/mismatched expected Lévy losses.

use serde::Serialize;

use crate::channel::{exp_theta_z, ChannelModel, JumpMeasure};
use crate::error::{Error, Result};
use crate::loss::{gauss_loss, levy_loss, poisson_loss_ln, Reconstruction};
use crate::quad::{integrate_over_output, sum_series, ChannelAtSnr, QuadResult};

/// Tolerance on `Σ p_i = 1`.
pub const WEIGHT_SUM_TOL: f64 = 1e-12;

/// A law with finitely many atoms; point masses are the one-atom case.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscretePrior {
    atoms: Vec<f64>,
    weights: Vec<f64>,
}

impl DiscretePrior {
    /// Atoms are sorted on construction; weights must be positive and sum to
    /// one within [`WEIGHT_SUM_TOL`].
    pub fn new(atoms: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidPrior("no atoms".into()));
        }
        if atoms.len() != weights.len() {
            return Err(Error::InvalidPrior(format!(
                "{} atoms but {} weights",
                atoms.len(),
                weights.len()
            )));
        }
        if let Some(a) = atoms.iter().find(|a| !a.is_finite()) {
            return Err(Error::InvalidPrior(format!("atom {a} is not finite")));
        }
        if let Some(p) = weights.iter().find(|p| !(**p > 0.0 && p.is_finite())) {
            return Err(Error::InvalidPrior(format!("weight {p} is not positive")));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::InvalidPrior(format!("weights sum to {total}, not 1")));
        }
        let mut pairs: Vec<(f64, f64)> = atoms.into_iter().zip(weights).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        if pairs.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::InvalidPrior("atoms are not distinct".into()));
        }
        let (atoms, weights) = pairs.into_iter().unzip();
        Ok(DiscretePrior { atoms, weights })
    }

    pub fn point_mass(x: f64) -> Self {
        DiscretePrior {
            atoms: vec![x],
            weights: vec![1.0],
        }
    }

    pub fn uniform(atoms: Vec<f64>) -> Result<Self> {
        let n = atoms.len();
        DiscretePrior::new(atoms, vec![1.0 / n as f64; n])
    }

    pub fn atoms(&self) -> &[f64] {
        &self.atoms
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn is_point_mass(&self) -> bool {
        self.atoms.len() == 1
    }

    /// Every atom must lie in the channel's input domain.
    pub fn validate_for(&self, ch: &ChannelModel) -> Result<()> {
        self.atoms.iter().try_for_each(|&x| ch.check_input(x))
    }

    /// `-Σ p ln p`.
    pub fn entropy(&self) -> f64 {
        -self.weights.iter().map(|p| p * p.ln()).sum::<f64>()
    }

    /// `Σ p ln(p / q)`; every atom of `self` must be an atom of `q`.
    pub fn relative_entropy(&self, q: &DiscretePrior) -> Result<f64> {
        let mut d = 0.0;
        for (x, p) in self.atoms.iter().zip(&self.weights) {
            let qi = q.weight_of(*x).ok_or_else(|| {
                Error::AbsoluteContinuity(format!("atom {x} of P is not an atom of Q"))
            })?;
            d += p * (p / qi).ln();
        }
        Ok(d)
    }

    /// Weight of atom `x`, if present.
    pub fn weight_of(&self, x: f64) -> Option<f64> {
        self.atoms
            .binary_search_by(|a| a.total_cmp(&x))
            .ok()
            .map(|i| self.weights[i])
    }

    /// True if every atom of `self` is an atom of `q`.
    pub fn is_dominated_by(&self, q: &DiscretePrior) -> bool {
        self.atoms.iter().all(|&x| q.weight_of(x).is_some())
    }
}

/// Posterior weights over the atoms of a prior.
#[derive(Debug, Clone, PartialEq)]
pub struct Posterior {
    pub weights: Vec<f64>,
    /// Posterior mass of atoms dropped because their weight underflowed.
    pub mass_deficit: f64,
}

/// Bayes' rule in log space: `w_i ∝ p_i f(y | x_i)` given `ln f(y | x_i)`.
pub(crate) fn posterior_from_ln_likelihoods(prior_weights: &[f64], lnf: &[f64], y: f64) -> Result<Posterior> {
    let logs: Vec<f64> = prior_weights.iter().zip(lnf).map(|(p, l)| p.ln() + l).collect();
    let max = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return Err(Error::ZeroLikelihood { y });
    }
    let mut weights: Vec<f64> = logs.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = weights.iter().sum();
    let mut mass_deficit = 0.0;
    for (w, l) in weights.iter_mut().zip(&logs) {
        *w /= total;
        if *w == 0.0 && l.is_finite() {
            // below f64 range relative to the leading atom
            mass_deficit += ((l - max).exp() / total).max(f64::MIN_POSITIVE);
        }
    }
    Ok(Posterior { weights, mass_deficit })
}

/// `P(X = x_i | Y_γ = y)`.
pub fn posterior(ch: &ChannelModel, prior: &DiscretePrior, gamma: f64, y: f64) -> Result<Posterior> {
    if !(gamma > 0.0) {
        return Err(Error::domain("gamma", gamma, "(0, inf)"));
    }
    ch.check_output(y)?;
    let lnf = prior
        .atoms
        .iter()
        .map(|&x| ch.ln_cond_law(x, gamma, y))
        .collect::<Result<Vec<_>>>()?;
    posterior_from_ln_likelihoods(&prior.weights, &lnf, y)
}

/// `r₀ = Σ w_i φ'(x_i)`, `r_z = Σ w_i e^{φ'(x_i) z}` for posterior weights `w`.
pub(crate) fn reconstruction_from_weights(thetas: &[f64], weights: &[f64]) -> Result<Reconstruction> {
    let mut r0 = 0.0;
    let mut components = Vec::with_capacity(thetas.len());
    for (&t, &w) in thetas.iter().zip(weights) {
        if w > 0.0 {
            r0 += w * t;
            components.push((w, t));
        }
    }
    Reconstruction::mixture(r0, components)
}

/// The minimum-mean-loss reconstruction `E[φ'(X) | y]`, `E[e^{φ'(X) z} | y]`.
pub fn optimal_reconstruction(ch: &ChannelModel, prior: &DiscretePrior, gamma: f64, y: f64) -> Result<Reconstruction> {
    let post = posterior(ch, prior, gamma, y)?;
    reconstruction_from_weights(&links(ch, prior.atoms())?, &post.weights)
}

fn links(ch: &ChannelModel, atoms: &[f64]) -> Result<Vec<f64>> {
    atoms.iter().map(|&x| ch.link(x)).collect()
}

/// The atoms of `P` and `Q` merged, with each prior's weights laid over the
/// merged list (0 where a prior has no atom).
struct Merged {
    atoms: Vec<f64>,
    p: Vec<f64>,
    q: Vec<f64>,
}

impl Merged {
    fn new(p: &DiscretePrior, q: &DiscretePrior) -> Self {
        let mut atoms: Vec<f64> = p.atoms.iter().chain(&q.atoms).cloned().collect();
        atoms.sort_by(f64::total_cmp);
        atoms.dedup();
        let lay = |prior: &DiscretePrior| atoms.iter().map(|&x| prior.weight_of(x).unwrap_or(0.0)).collect();
        let (pw, qw) = (lay(p), lay(q));
        Merged { atoms, p: pw, q: qw }
    }

    /// Posterior under the weights `w` (zero-weight atoms get zero mass).
    fn posterior(w: &[f64], lnf: &[f64], y: f64) -> Result<Vec<f64>> {
        let (idx, ww, ll): (Vec<usize>, Vec<f64>, Vec<f64>) = w
            .iter()
            .zip(lnf)
            .enumerate()
            .filter(|(_, (w, _))| **w > 0.0)
            .fold((vec![], vec![], vec![]), |mut acc, (i, (w, l))| {
                acc.0.push(i);
                acc.1.push(*w);
                acc.2.push(*l);
                acc
            });
        let post = posterior_from_ln_likelihoods(&ww, &ll, y)?;
        let mut full = vec![0.0; w.len()];
        for (i, v) in idx.into_iter().zip(post.weights) {
            full[i] = v;
        }
        Ok(full)
    }
}

/// `E_P ℓ_L(X, X̂^Q_γ)`: the expected loss when `X ~ P` but the decoder is
/// Bayes-optimal for `Q`. `Q = P` gives the matched (minimum) loss.
pub fn expected_levy_loss(
    ch: &ChannelModel,
    p: &DiscretePrior,
    q: &DiscretePrior,
    gamma: f64,
    tol: f64,
) -> Result<QuadResult> {
    expected_loss_difference(ch, p, q, None, gamma, tol)
}

/// `E_P ℓ_L(X, X̂^Q_γ) - E_P ℓ_L(X, X̂^P_γ) ≥ 0`, the excess loss due to
/// mismatch, computed in a single pass over the output.
pub fn expected_mismatch_excess(
    ch: &ChannelModel,
    p: &DiscretePrior,
    q: &DiscretePrior,
    gamma: f64,
    tol: f64,
) -> Result<QuadResult> {
    expected_loss_difference(ch, p, q, Some(p), gamma, tol)
}

/// `E_P [ℓ_L(X, X̂^Q) - ℓ_L(X, X̂^R)]`, or just the first term without `R`.
fn expected_loss_difference(
    ch: &ChannelModel,
    p: &DiscretePrior,
    q: &DiscretePrior,
    r: Option<&DiscretePrior>,
    gamma: f64,
    tol: f64,
) -> Result<QuadResult> {
    if !(gamma >= 0.0) {
        return Err(Error::domain("gamma", gamma, "[0, inf)"));
    }
    p.validate_for(ch)?;
    q.validate_for(ch)?;
    let merged = Merged::new(p, q);
    let thetas = links(ch, &merged.atoms)?;
    let inner_tol = tol / 4.0;
    let r_weights = r.map(|r| merged.atoms.iter().map(|&x| r.weight_of(x).unwrap_or(0.0)).collect::<Vec<_>>());

    // Σ_i p_i f_i [ℓ(x_i, X̂^Q) - ℓ(x_i, X̂^R)] at one output value
    let pointwise = |y: f64, joint: &[f64], post_q: &[f64], post_r: Option<&[f64]>| -> Result<(f64, f64)> {
        let rq = reconstruction_from_weights(&thetas, post_q)?;
        let rr = post_r.map(|w| reconstruction_from_weights(&thetas, w)).transpose()?;
        let mut value = 0.0;
        let mut err = 0.0;
        for (i, &m) in joint.iter().enumerate() {
            if m == 0.0 {
                continue;
            }
            let x = merged.atoms[i];
            let lq = levy_loss(ch, x, &rq, inner_tol)?;
            if !lq.value.is_finite() {
                return Err(Error::InfiniteLoss(format!(
                    "decoder assigns zero jump rate at y = {y} while input {x} has positive mass"
                )));
            }
            value += m * lq.value;
            err += m * lq.error_estimate;
            if let Some(rr) = &rr {
                let lr = levy_loss(ch, x, rr, inner_tol)?;
                value -= m * lr.value;
                err += m * lr.error_estimate;
            }
        }
        Ok((value, err))
    };

    if gamma == 0.0 {
        // the output carries no information: posteriors are the priors
        let r_w = r_weights.as_deref();
        let (v, e) = pointwise(0.0, &merged.p, &merged.q, r_w)?;
        return Ok(QuadResult {
            value: v,
            error_estimate: e,
            evaluations: 1,
            converged: e <= tol,
        });
    }

    let model = ChannelAtSnr { channel: ch, gamma };
    integrate_over_output(&model, &merged.atoms, tol, |y: f64, lnf: &[f64]| -> Result<(f64, f64)> {
        let joint: Vec<f64> = merged.p.iter().zip(lnf).map(|(p, l)| p * l.exp()).collect();
        if joint.iter().all(|&m| m == 0.0) {
            return Ok((0.0, 0.0));
        }
        let post_q = match Merged::posterior(&merged.q, lnf, y) {
            Ok(w) => w,
            Err(Error::ZeroLikelihood { .. }) => {
                return Err(Error::InfiniteLoss(format!(
                    "output y = {y} is possible under P but impossible under Q"
                )))
            }
            Err(e) => return Err(e),
        };
        let post_r = r_weights.as_ref().map(|w| Merged::posterior(w, lnf, y)).transpose()?;
        pointwise(y, &joint, &post_q, post_r.as_deref())
    })
}

/// The two input-regularity integrals for a finite-support prior.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegularityReport {
    /// `E (φ'(X))²`, present when the channel has a Gaussian part.
    pub gaussian_moment: Option<QuadResult>,
    /// `E ∫ φ'(X) z e^{φ'(X) z} ν(dz)`.
    pub jump_moment: QuadResult,
}

/// Evaluates the input-regularity integrals; a non-convergent integral is
/// reported as [`Error::Divergent`].
pub fn regularity_check(ch: &ChannelModel, prior: &DiscretePrior, tol: f64) -> Result<RegularityReport> {
    prior.validate_for(ch)?;
    let thetas = links(ch, prior.atoms())?;
    let triple = ch.triple();
    let gaussian_moment = if triple.volatility > 0.0 {
        let m: f64 = thetas.iter().zip(prior.weights()).map(|(t, p)| p * t * t).sum();
        if !m.is_finite() {
            return Err(Error::Divergent("E φ'(X)² is infinite".into()));
        }
        Some(QuadResult::exact(m))
    } else {
        None
    };
    let as_divergent = |e: Error| match e {
        Error::NonConvergence { .. } => Error::Divergent(format!("regularity integral: {e}")),
        e => e,
    };
    let mut jump_moment = QuadResult::exact(0.0);
    for (&t, &p) in thetas.iter().zip(prior.weights()) {
        if t == f64::NEG_INFINITY {
            // (ln x) x^z → 0 as x → 0 for z > 0
            continue;
        }
        let f = |z: f64| t * z * exp_theta_z(t, z);
        let part = match &triple.jumps {
            JumpMeasure::Zero => QuadResult::exact(0.0),
            JumpMeasure::Atoms(atoms) => QuadResult::exact(atoms.iter().map(|&(z, m)| m * f(z)).sum()),
            JumpMeasure::Lattice(l) => {
                let rho = l.ratio * t.exp().max(1.0);
                if !(rho < 1.0) {
                    return Err(Error::Divergent("jump moment series diverges".into()));
                }
                let (b, ta) = (l.bound, t.abs());
                sum_series(
                    1,
                    |k| (l.weight)(k) * f(k as f64),
                    |k| {
                        let k = k as f64;
                        b * ta * rho.powf(k) * (k / (1.0 - rho) + rho / (1.0 - rho).powi(2))
                    },
                    tol,
                )
                .map_err(as_divergent)?
            }
            JumpMeasure::Density(d) => {
                let w = d.density.clone();
                crate::channel::integrate_over_support(
                    &d.support,
                    |z: f64| {
                        let wz = w(z);
                        if wz == 0.0 {
                            0.0
                        } else {
                            t * z * (t * z + wz.ln()).exp()
                        }
                    },
                    tol,
                ).map_err(as_divergent)?
            }
        };
        if !part.converged {
            return Err(Error::Divergent("regularity integral did not converge".into()));
        }
        jump_moment = jump_moment.add(part.scale(p));
    }
    Ok(RegularityReport {
        gaussian_moment,
        jump_moment,
    })
}

/// Both sides of the two Pythagorean decompositions at SNR `γ`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PythagoreanReport {
    /// `E_P ℓ_G(A, Ê_Q) - E_P ℓ_G(A, Ê_P)` and `E_P ℓ_G(Ê_P, Ê_Q)`, with
    /// `A = φ'(X)`; absent when some atom has `φ'(x) = -∞`.
    pub gaussian: Option<(QuadResult, QuadResult)>,
    /// The same for `ℓ_P` with `B = e^{φ'(X) z}` at the given jump size.
    pub poisson: (QuadResult, QuadResult),
    pub jump_size: f64,
}

/// Evaluates both Pythagorean decompositions by quadrature over the output.
pub fn pythagorean_decomposition(
    ch: &ChannelModel,
    p: &DiscretePrior,
    q: &DiscretePrior,
    gamma: f64,
    jump_size: f64,
    tol: f64,
) -> Result<PythagoreanReport> {
    if !(gamma > 0.0) {
        return Err(Error::domain("gamma", gamma, "(0, inf)"));
    }
    if !p.is_dominated_by(q) {
        return Err(Error::AbsoluteContinuity("every atom of P must be an atom of Q".into()));
    }
    let merged = Merged::new(p, q);
    let thetas = links(ch, &merged.atoms)?;
    let model = ChannelAtSnr { channel: ch, gamma };
    let z = jump_size;
    let side = |which: usize, loss: &dyn Fn(f64, f64) -> f64, a: &dyn Fn(f64) -> f64| -> Result<QuadResult> {
        integrate_over_output(&model, &merged.atoms, tol, |y: f64, lnf: &[f64]| -> Result<f64> {
            let joint: Vec<f64> = merged.p.iter().zip(lnf).map(|(p, l)| p * l.exp()).collect();
            if joint.iter().all(|&m| m == 0.0) {
                return Ok(0.0);
            }
            let wp = Merged::posterior(&merged.p, lnf, y)?;
            let wq = Merged::posterior(&merged.q, lnf, y)?;
            let mean = |w: &[f64]| thetas.iter().zip(w).filter(|(_, w)| **w > 0.0).map(|(t, w)| w * a(*t)).sum::<f64>();
            let (ep, eq) = (mean(&wp), mean(&wq));
            Ok(match which {
                0 => joint.iter().zip(&thetas).filter(|(m, _)| **m > 0.0).map(|(m, t)| m * (loss(a(*t), eq) - loss(a(*t), ep))).sum(),
                _ => joint.iter().sum::<f64>() * loss(ep, eq),
            })
        })
    };
    let gl = |u: f64, v: f64| gauss_loss(u, v);
    let pl = |u: f64, v: f64| poisson_loss_ln(u.ln(), v.ln());
    let ident = |t: f64| t;
    let tilt = |t: f64| exp_theta_z(t, z);
    let gaussian = if thetas.iter().all(|t| t.is_finite()) {
        Some((side(0, &gl, &ident)?, side(1, &gl, &ident)?))
    } else {
        None
    };
    let poisson = (side(0, &pl, &tilt)?, side(1, &pl, &tilt)?);
    Ok(PythagoreanReport {
        gaussian,
        poisson,
        jump_size,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::loss::{point_mass_reconstruction, representative_loss};
    use approx::assert_abs_diff_eq;

    fn binary(a: f64, b: f64, pa: f64) -> DiscretePrior {
        DiscretePrior::new(vec![a, b], vec![pa, 1.0 - pa]).unwrap()
    }

    #[test]
    fn prior_validation() {
        assert!(DiscretePrior::new(vec![], vec![]).is_err());
        assert!(DiscretePrior::new(vec![1.0], vec![0.5]).is_err());
        assert!(DiscretePrior::new(vec![1.0, 1.0], vec![0.5, 0.5]).is_err());
        assert!(DiscretePrior::new(vec![1.0, 2.0], vec![1.0, 0.0]).is_err());
        assert!(DiscretePrior::new(vec![1.0, 2.0], vec![0.5]).is_err());
        let p = DiscretePrior::new(vec![2.0, 1.0], vec![0.3, 0.7]).unwrap();
        assert_eq!(p.atoms(), &[1.0, 2.0]);
        assert_eq!(p.weights(), &[0.7, 0.3]);
        assert!(DiscretePrior::point_mass(0.0).validate_for(&ChannelModel::gamma()).is_err());
    }

    #[test]
    fn prior_entropy_and_kl() {
        let p = binary(1.0, 2.0, 0.5);
        let q = binary(1.0, 2.0, 0.9);
        assert_abs_diff_eq!(p.entropy(), std::f64::consts::LN_2, epsilon = 1e-15);
        assert_abs_diff_eq!(p.relative_entropy(&q).unwrap(), 0.510_825_623_765_990_7, epsilon = 1e-14);
        assert!(p.relative_entropy(&DiscretePrior::point_mass(1.0)).is_err());
    }

    #[test]
    fn posterior_examples() {
        let ch = ChannelModel::poisson();
        let w = posterior(&ch, &binary(1.0, 2.0, 0.5), 1.0, 0.0).unwrap();
        let e1 = (-1.0f64).exp();
        let e2 = (-2.0f64).exp();
        assert_abs_diff_eq!(w.weights[0], e1 / (e1 + e2), epsilon = 1e-15);
        assert_abs_diff_eq!(w.weights[0], 0.731_059, epsilon = 1e-6);

        let g = posterior(&ChannelModel::gaussian(), &binary(-1.0, 1.0, 0.5), 3.0, 0.0).unwrap();
        assert_eq!(g.weights, vec![0.5, 0.5]);
        let one = posterior(&ChannelModel::gamma(), &DiscretePrior::point_mass(2.0), 1.0, 0.3).unwrap();
        assert_eq!(one.weights, vec![1.0]);
    }

    #[test]
    fn posterior_zero_likelihood() {
        let err = posterior(&ChannelModel::poisson(), &DiscretePrior::point_mass(0.0), 1.0, 1.0).unwrap_err();
        assert!(matches!(err, Error::ZeroLikelihood { .. }));
    }

    #[test]
    fn posterior_survives_high_snr() {
        let w = posterior(&ChannelModel::gaussian(), &binary(-1.0, 1.0, 0.5), 1e4, 1e4).unwrap();
        assert_eq!(w.weights[1], 1.0);
        assert_eq!(w.weights[0], 0.0);
        assert!(w.mass_deficit > 0.0 && w.mass_deficit < 1e-300);
    }

    #[test]
    fn optimal_reconstruction_examples() {
        let ch = ChannelModel::poisson();
        let r = optimal_reconstruction(&ch, &binary(1.0, 2.0, 0.5), 1.0, 0.0).unwrap();
        assert_abs_diff_eq!(r.rate(1.0), 1.268_941, epsilon = 1e-6);
        let g = optimal_reconstruction(&ChannelModel::gaussian(), &binary(-1.0, 1.0, 0.5), 1.0, 0.0).unwrap();
        assert_eq!(g.r0(), 0.0);
        let gm = ChannelModel::gamma();
        let a = optimal_reconstruction(&gm, &DiscretePrior::point_mass(2.0), 1.0, 0.7).unwrap();
        assert_eq!(a, point_mass_reconstruction(&gm, 2.0).unwrap());
    }

    #[test]
    fn matched_point_mass_loss_is_zero() {
        for ch in ChannelModel::builtin() {
            let p = DiscretePrior::point_mass(1.5);
            let l = expected_levy_loss(&ch, &p, &p, 1.0, 1e-8).unwrap();
            assert_abs_diff_eq!(l.value, 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn mismatched_point_masses_give_bregman() {
        for ch in ChannelModel::builtin() {
            let (x1, x2) = (1.0, 2.0);
            let d = representative_loss(&ch, x1, x2).unwrap();
            for gamma in [0.5, 3.0] {
                let l = expected_levy_loss(&ch, &DiscretePrior::point_mass(x1), &DiscretePrior::point_mass(x2), gamma, 1e-8)
                    .unwrap();
                assert_abs_diff_eq!(l.value, d, epsilon = 1e-7);
            }
        }
    }

    #[test]
    fn gaussian_small_snr_loss_is_half_variance() {
        let p = binary(-1.0, 1.0, 0.5);
        let l = expected_levy_loss(&ChannelModel::gaussian(), &p, &p, 1e-3, 1e-9).unwrap();
        assert!((l.value - 0.5).abs() < 0.01);
    }

    #[test]
    fn mismatch_excess_is_nonnegative() {
        for ch in ChannelModel::builtin() {
            let atoms = if ch.name() == "gaussian" { (-1.0, 1.0) } else { (1.0, 2.0) };
            let p = binary(atoms.0, atoms.1, 0.5);
            let q = binary(atoms.0, atoms.1, 0.8);
            let e = expected_mismatch_excess(&ch, &p, &q, 1.0, 1e-8).unwrap();
            assert!(e.value > 0.0, "{}: {}", ch.name(), e.value);
            let matched = expected_levy_loss(&ch, &p, &p, 1.0, 1e-8).unwrap();
            let mismatched = expected_levy_loss(&ch, &p, &q, 1.0, 1e-8).unwrap();
            assert_abs_diff_eq!(mismatched.value - matched.value, e.value, epsilon = 1e-6);
        }
    }

    #[test]
    fn zero_snr_loss_uses_priors() {
        let ch = ChannelModel::gaussian();
        let p = binary(-1.0, 1.0, 0.5);
        let l = expected_levy_loss(&ch, &p, &p, 0.0, 1e-10).unwrap();
        assert_abs_diff_eq!(l.value, 0.5, epsilon = 1e-15);
    }

    #[test]
    fn infinite_loss_when_decoder_rules_out_input() {
        let ch = ChannelModel::poisson();
        let p = DiscretePrior::point_mass(1.0);
        let q = DiscretePrior::point_mass(0.0);
        let err = expected_levy_loss(&ch, &p, &q, 1.0, 1e-8).unwrap_err();
        assert!(matches!(err, Error::InfiniteLoss(_)), "{err:?}");
    }

    #[test]
    fn regularity_examples() {
        let g = regularity_check(&ChannelModel::gaussian(), &binary(-1.0, 1.0, 0.5), 1e-10).unwrap();
        assert_eq!(g.gaussian_moment.unwrap().value, 1.0);
        assert_eq!(g.jump_moment.value, 0.0);
        let p = regularity_check(&ChannelModel::poisson(), &DiscretePrior::point_mass(0.0), 1e-10).unwrap();
        assert_eq!(p.jump_moment.value, 0.0);
        assert!(p.gaussian_moment.is_none());
        let gm = regularity_check(&ChannelModel::gamma(), &DiscretePrior::point_mass(2.0), 1e-10).unwrap();
        assert_abs_diff_eq!(gm.jump_moment.value, 1.0, epsilon = 1e-9);
        let nb = regularity_check(&ChannelModel::negative_binomial(), &binary(1.0, 2.0, 0.5), 1e-12).unwrap();
        assert!(nb.jump_moment.value.is_finite());
    }

    #[test]
    fn pythagorean_identities_hold() {
        for ch in ChannelModel::builtin() {
            let atoms = if ch.name() == "gaussian" { (-1.0, 1.0) } else { (1.0, 2.0) };
            let p = binary(atoms.0, atoms.1, 0.5);
            let q = binary(atoms.0, atoms.1, 0.8);
            let r = pythagorean_decomposition(&ch, &p, &q, 1.0, 1.0, 1e-10).unwrap();
            let (l, rr) = r.gaussian.unwrap();
            assert_abs_diff_eq!(l.value, rr.value, epsilon = l.error_estimate + rr.error_estimate + 1e-12);
            let (l, rr) = r.poisson;
            assert_abs_diff_eq!(l.value, rr.value, epsilon = l.error_estimate + rr.error_estimate + 1e-12);
            assert!(rr.value > 0.0);
        }
    }
}
