//! Expectations over the output of a channel driven by a finite mixture of
//! inputs. Every `∫ · f(y|x) dy` and `Σ_y · f(y|x)` in the library goes
//! through [`integrate_over_output`].

use statrs::function::gamma::ln_gamma;

use super::{IntegrandValue, Quadrature, QuadResult, DEFAULT_BUDGET};
use crate::channel::{ChannelModel, Family, GammaAmplified, OutputKind};
use crate::error::{Error, Result};
use crate::posterior::DiscretePrior;

/// How the output space is traversed for a given set of input atoms.
#[derive(Debug, Clone, PartialEq)]
pub enum OutputPlan {
    /// Integrate in `y` over `[breakpoints[0], breakpoints[last]]`.
    Continuous { breakpoints: Vec<f64> },
    /// Integrate in `u = ln y`; used for positive outputs whose density may
    /// be singular at 0.
    LogContinuous { breakpoints: Vec<f64> },
    /// Sum over `y = 0, 1, 2, ...`, never stopping before `min_last`.
    Counts { min_last: u64 },
}

/// An input-indexed family of output laws that can be integrated over.
pub trait ObservationModel: Sync {
    /// `ln f(y | x)`, `-∞` outside the support.
    fn ln_likelihood(&self, x: f64, y: f64) -> Result<f64>;

    /// Integration plan covering the outputs of all `atoms` up to a
    /// probability mass well below `tol`.
    fn output_plan(&self, atoms: &[f64], tol: f64) -> Result<OutputPlan>;

    /// `ln f(e^u | x) + u`, the log-density of `u = ln Y`. Used by
    /// [`OutputPlan::LogContinuous`]; override when `e^u` may leave the
    /// range of `f64`.
    fn ln_likelihood_log_output(&self, x: f64, u: f64) -> Result<f64> {
        Ok(self.ln_likelihood(x, u.exp())? + u)
    }
}

/// `ln` of the Gamma(shape `k`, scale `s`) density of `ln Y` at `u`.
fn gamma_ln_density_of_log(k: f64, s: f64, u: f64) -> f64 {
    k * (u - s.ln()) - (u - s.ln()).exp() - ln_gamma(k)
}

/// Mass allowed outside a plan's range, relative to the requested tolerance.
const TRUNCATION: f64 = 1e-3;

/// A channel frozen at one SNR.
#[derive(Debug, Clone, Copy)]
pub struct ChannelAtSnr<'a> {
    pub channel: &'a ChannelModel,
    pub gamma: f64,
}

impl ObservationModel for ChannelAtSnr<'_> {
    fn ln_likelihood(&self, x: f64, y: f64) -> Result<f64> {
        self.channel.ln_cond_law(x, self.gamma, y)
    }

    fn ln_likelihood_log_output(&self, x: f64, u: f64) -> Result<f64> {
        if let Family::Gamma = self.channel.family() {
            self.channel.check_input(x)?;
            return Ok(gamma_ln_density_of_log(self.gamma, x, u));
        }
        Ok(self.ln_likelihood(x, u.exp())? + u)
    }

    fn output_plan(&self, atoms: &[f64], tol: f64) -> Result<OutputPlan> {
        let ch = self.channel;
        let gamma = self.gamma;
        if !(gamma > 0.0) {
            return Err(Error::domain("gamma", gamma, "(0, inf)"));
        }
        for &x in atoms {
            ch.check_input(x)?;
        }
        match (ch.family(), ch.output_kind()) {
            (_, OutputKind::Counts) => {
                let max_mean = atoms.iter().fold(0.0f64, |m, &x| m.max(gamma * x));
                Ok(OutputPlan::Counts {
                    min_last: max_mean.ceil() as u64,
                })
            }
            (Family::Gamma, _) => Ok(gamma_log_plan(gamma, atoms, 1.0, tol)),
            (_, OutputKind::Continuous(support)) => {
                // mean ± 12 standard deviations around every atom
                let mut pts = Vec::new();
                let mut lo = f64::INFINITY;
                let mut hi = f64::NEG_INFINITY;
                for &x in atoms {
                    let m = gamma * x;
                    let sd = ch.conditional_variance(x, gamma)?.sqrt();
                    lo = lo.min(m - 12.0 * sd);
                    hi = hi.max(m + 12.0 * sd);
                    pts.push(m);
                }
                lo = lo.max(support.lo);
                hi = hi.min(support.hi);
                pts.retain(|p| *p > lo && *p < hi);
                pts.push(lo);
                pts.push(hi);
                pts.sort_by(f64::total_cmp);
                pts.dedup();
                Ok(OutputPlan::Continuous { breakpoints: pts })
            }
        }
    }
}

/// Log-space plan for gamma-distributed outputs with shape `shape` and scales
/// `scale_factor * x` for each atom `x`.
fn gamma_log_plan(shape: f64, atoms: &[f64], scale_factor: f64, tol: f64) -> OutputPlan {
    let scales: Vec<f64> = atoms.iter().map(|&x| scale_factor * x).collect();
    let s_min = scales.iter().cloned().fold(f64::INFINITY, f64::min);
    let s_max = scales.iter().cloned().fold(0.0, f64::max);
    let eps = (tol * TRUNCATION).min(1e-12) * 1e-3;
    // P(Y < y₀) ≤ (y₀/s)^k / Γ(k+1), so ln(y₀/s) = (ln ε + ln Γ(k+1)) / k
    let u_lo = s_min.ln() + (eps.ln() + ln_gamma(shape + 1.0)) / shape;
    // exponential upper tail
    let u_hi = (s_max * (shape + 12.0 * shape.sqrt() + 45.0)).ln();
    let mut pts = vec![u_lo, u_hi];
    for s in &scales {
        for c in [shape * s, *s] {
            let u = c.ln();
            if u > u_lo && u < u_hi {
                pts.push(u);
            }
        }
    }
    // for small shapes the lower range is very wide; breakpoints at
    // geometrically growing distances keep the rule from stepping over the
    // O(1)-wide shoulder of e^{-y/s}
    let first = pts.iter().cloned().filter(|&u| u > u_lo).fold(u_hi, f64::min);
    let mut d = 1.0;
    while first - d > u_lo {
        pts.push(first - d);
        d *= 2.0;
    }
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    OutputPlan::LogContinuous { breakpoints: pts }
}

impl ObservationModel for GammaAmplified {
    fn ln_likelihood(&self, x: f64, y: f64) -> Result<f64> {
        self.ln_density(x, y)
    }

    fn ln_likelihood_log_output(&self, x: f64, u: f64) -> Result<f64> {
        if !(x > 0.0) {
            return Err(Error::domain("x", x, "(0, inf)"));
        }
        Ok(gamma_ln_density_of_log(self.shape, self.scale(x), u))
    }

    fn output_plan(&self, atoms: &[f64], tol: f64) -> Result<OutputPlan> {
        for &x in atoms {
            if !(x > 0.0) {
                return Err(Error::domain("x", x, "(0, inf)"));
            }
        }
        Ok(gamma_log_plan(
            self.shape,
            atoms,
            self.amplification / self.shape,
            tol,
        ))
    }
}

/// Integrates `g(y, ln f(y|x₁), ..., ln f(y|xₙ))` over the output space.
///
/// `g` returns the integrand itself (the caller multiplies by whatever
/// likelihoods it needs), so one pass can serve several atoms at once. `g`
/// must be positively homogeneous of degree one in the likelihoods
/// (`f ↦ c f` scales it by `c`): on log-space plans the Jacobian is folded
/// into the `ln f` it receives, and `y = e^u` may underflow to 0.
pub fn integrate_over_output<M, G, V>(
    model: &M,
    atoms: &[f64],
    tol: f64,
    mut g: G,
) -> Result<QuadResult>
where
    M: ObservationModel + ?Sized,
    G: FnMut(f64, &[f64]) -> V,
    V: IntegrandValue,
{
    if atoms.is_empty() {
        return Err(Error::InvalidPrior("no atoms".into()));
    }
    let mut lnf = vec![0.0; atoms.len()];
    let fill = |y: f64, lnf: &mut [f64]| -> Result<()> {
        for (slot, &x) in lnf.iter_mut().zip(atoms) {
            *slot = model.ln_likelihood(x, y)?;
        }
        Ok(())
    };
    match model.output_plan(atoms, tol)? {
        OutputPlan::Continuous { breakpoints } => Quadrature::new(tol).breakpoints(
            |y: f64| -> Result<(f64, f64)> {
                fill(y, &mut lnf)?;
                g(y, &lnf).into_parts()
            },
            &breakpoints,
        ),
        OutputPlan::LogContinuous { breakpoints } => Quadrature::new(tol).breakpoints(
            |u: f64| -> Result<(f64, f64)> {
                for (slot, &x) in lnf.iter_mut().zip(atoms) {
                    *slot = model.ln_likelihood_log_output(x, u)?;
                }
                g(u.exp(), &lnf).into_parts()
            },
            &breakpoints,
        ),
        OutputPlan::Counts { min_last } => {
            let eps = tol * TRUNCATION;
            // even compensated, 1 - Σp cannot resolve below a few ulps of 1
            let eps_mass = eps.max(64.0 * f64::EPSILON);
            let mut mass = vec![(0.0, 0.0); atoms.len()];
            let mut prev = vec![f64::INFINITY; atoms.len()];
            let mut sum = 0.0;
            let mut comp = 0.0;
            let mut inner = 0.0;
            // largest |integrand| / (largest likelihood) seen, to size the tail
            let mut ratio: f64 = 0.0;
            let max_terms = 8 * DEFAULT_BUDGET as u64 + min_last;
            let mut y = 0u64;
            loop {
                let yf = y as f64;
                fill(yf, &mut lnf)?;
                let (t, e) = g(yf, &lnf).into_parts()?;
                if !t.is_finite() {
                    return Err(Error::Divergent(format!("summand is not finite at y = {y}")));
                }
                let s = sum + t;
                if sum.abs() >= t.abs() {
                    comp += (sum - s) + t;
                } else {
                    comp += (t - s) + sum;
                }
                sum = s;
                inner += e.abs();
                let mut fmax: f64 = 0.0;
                // geometric estimate of Σ_{j>y} p(j), valid while every pmf decays
                let mut geometric = Some(0.0);
                for (((m, c), l), q) in mass.iter_mut().zip(&lnf).zip(prev.iter_mut()) {
                    let p = l.exp();
                    let s = *m + p;
                    *c += if m.abs() >= p { (*m - s) + p } else { (p - s) + *m };
                    *m = s;
                    fmax = fmax.max(p);
                    geometric = geometric.and_then(|acc| {
                        if p == 0.0 {
                            Some(acc)
                        } else if p < *q && p <= eps {
                            let rho = p / *q;
                            Some(acc + p * rho / (1.0 - rho))
                        } else {
                            None
                        }
                    });
                    *q = p;
                }
                if fmax > 0.0 {
                    ratio = ratio.max(t.abs() / fmax);
                }
                let mut missing = mass.iter().fold(0.0f64, |a, (m, c)| a.max(1.0 - m - c)).max(0.0);
                // Σp carries the rounding of every pmf value, so past the
                // bulk the decay rate bounds the remainder more sharply.
                if let Some(gm) = geometric.filter(|&gm| gm <= eps_mass) {
                    missing = missing.min(gm);
                }
                y += 1;
                if y > min_last && missing <= eps_mass && t.abs() <= eps {
                    let tail = missing * ratio.max(1.0);
                    return Ok(QuadResult {
                        value: sum + comp,
                        error_estimate: tail + inner + 4.0 * f64::EPSILON * sum.abs(),
                        evaluations: y as usize,
                        converged: tail + inner <= tol,
                    });
                }
                if y >= max_terms {
                    return Err(Error::NonConvergence {
                        value: sum + comp,
                        error_estimate: missing * ratio.max(1.0) + inner,
                        tol,
                        evaluations: y as usize,
                    });
                }
            }
        }
    }
}

/// `∫ g(y) f_mix(y) dy` (or the sum for count outputs), where `f_mix` is the
/// output law of `channel` at SNR `gamma` under the input mixture `weight`.
pub fn expectation_over_output<G, V>(
    channel: &ChannelModel,
    gamma: f64,
    weight: &DiscretePrior,
    mut g: G,
    tol: f64,
) -> Result<QuadResult>
where
    G: FnMut(f64) -> V,
    V: IntegrandValue,
{
    let model = ChannelAtSnr { channel, gamma };
    let probs = weight.weights();
    integrate_over_output(&model, weight.atoms(), tol, |y, lnf| -> Result<(f64, f64)> {
        let density: f64 = probs.iter().zip(lnf).map(|(p, l)| p * l.exp()).sum();
        if density == 0.0 {
            return Ok((0.0, 0.0));
        }
        let (v, e) = g(y).into_parts()?;
        Ok((v * density, e * density))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn point(x: f64) -> DiscretePrior {
        DiscretePrior::point_mass(x)
    }

    #[test]
    fn normalization_all_channels() {
        for ch in ChannelModel::builtin() {
            for gamma in [0.2, 1.0, 7.0] {
                let prior = DiscretePrior::new(vec![0.5, 2.0], vec![0.3, 0.7]).unwrap();
                let r = expectation_over_output(&ch, gamma, &prior, |_| 1.0, 1e-10).unwrap();
                assert_abs_diff_eq!(r.value, 1.0, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn conditional_mean_all_channels() {
        for ch in ChannelModel::builtin() {
            for gamma in [0.5, 1.0, 3.0] {
                let x = 1.7;
                let r = expectation_over_output(&ch, gamma, &point(x), |y| y, 1e-10).unwrap();
                assert_abs_diff_eq!(r.value, gamma * x, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn conditional_variance_all_channels() {
        for ch in ChannelModel::builtin() {
            for gamma in [0.5, 2.0] {
                let x = 1.3;
                let m = gamma * x;
                let r = expectation_over_output(&ch, gamma, &point(x), |y| (y - m) * (y - m), 1e-10)
                    .unwrap();
                let var = ch.conditional_variance(x, gamma).unwrap();
                assert_abs_diff_eq!(r.value, var, epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn standard_normal_second_moment() {
        let r = expectation_over_output(&ChannelModel::gaussian(), 1.0, &point(0.0), |y| y * y, 1e-12)
            .unwrap();
        assert_abs_diff_eq!(r.value, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn gamma_small_shape_is_normalized() {
        let ch = ChannelModel::gamma();
        for gamma in [1e-3, 0.05, 0.5] {
            let r = expectation_over_output(&ch, gamma, &point(2.0), |_| 1.0, 1e-10).unwrap();
            assert_abs_diff_eq!(r.value, 1.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn zero_input_counts() {
        let ch = ChannelModel::poisson();
        let prior = DiscretePrior::new(vec![0.0, 3.0], vec![0.5, 0.5]).unwrap();
        let r = expectation_over_output(&ch, 2.0, &prior, |y| y, 1e-10).unwrap();
        assert_abs_diff_eq!(r.value, 0.5 * 6.0, epsilon = 1e-9);
    }

    #[test]
    fn amplified_gamma_mean() {
        let m = GammaAmplified::new(2.0, 3.0).unwrap();
        let r = integrate_over_output(&m, &[1.5], 1e-10, |y, lnf| y * lnf[0].exp()).unwrap();
        assert_abs_diff_eq!(r.value, 4.5, epsilon = 1e-9);
    }
}
