//! Monte Carlo oracle for the quadrature-based quantities.
//!
//! Draws are split into fixed chunks of [`CHUNK`] samples; chunk `c` uses
//! the ChaCha8 stream `c` under the caller's seed. Chunks run in parallel and
//! their moments are merged in chunk order, so an estimate depends only on
//! `(seed, n, inputs)` and never on the thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Poisson};
use rayon::prelude::*;
use serde::Serialize;

use crate::channel::{ChannelModel, Family};
use crate::error::{Error, Result};
use crate::loss::levy_loss;
use crate::posterior::{optimal_reconstruction, posterior, DiscretePrior};

/// Samples per RNG stream.
pub const CHUNK: usize = 4096;
/// Recorded in every estimate.
pub const GENERATOR: &str = "ChaCha8";

/// Tolerance of the per-sample loss quadrature; far below any MC error.
const SAMPLE_LOSS_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub value: f64,
    /// Sample standard deviation over `√n`.
    pub std_error: f64,
    pub n: usize,
    pub seed: u64,
    pub generator: &'static str,
}

impl McEstimate {
    /// `|value - reference|` in units of the standard error. Zero when both
    /// the error and the gap vanish.
    pub fn z_score(&self, reference: f64) -> f64 {
        let gap = (self.value - reference).abs();
        if gap == 0.0 {
            0.0
        } else {
            gap / self.std_error
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: usize,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, v: f64) {
        self.n += 1;
        let d = v - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (v - self.mean);
    }

    // Chan et al. pairwise update
    fn merge(self, o: Moments) -> Moments {
        if self.n == 0 {
            return o;
        }
        if o.n == 0 {
            return self;
        }
        let n = self.n + o.n;
        let d = o.mean - self.mean;
        Moments {
            n,
            mean: self.mean + d * o.n as f64 / n as f64,
            m2: self.m2 + o.m2 + d * d * (self.n as f64 * o.n as f64) / n as f64,
        }
    }
}

fn stream(seed: u64, chunk: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk as u64);
    rng
}

fn chunks(n: usize) -> impl IndexedParallelIterator<Item = (usize, usize)> {
    (0..n.div_ceil(CHUNK))
        .into_par_iter()
        .map(move |c| (c, CHUNK.min(n - c * CHUNK)))
}

/// Averages `draw` over `n` samples. `draw` sees one RNG per chunk.
fn estimate<F>(seed: u64, n: usize, draw: F) -> Result<McEstimate>
where
    F: Fn(&mut ChaCha8Rng) -> Result<f64> + Sync,
{
    if n < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 samples, got {n}")));
    }
    let parts = chunks(n)
        .map(|(c, len)| {
            let mut rng = stream(seed, c);
            let mut m = Moments::default();
            for _ in 0..len {
                m.push(draw(&mut rng)?);
            }
            Ok(m)
        })
        .collect::<Result<Vec<_>>>()?;
    let m = parts.into_iter().fold(Moments::default(), Moments::merge);
    let var = m.m2 / (m.n - 1) as f64;
    Ok(McEstimate {
        value: m.mean,
        std_error: (var / m.n as f64).sqrt(),
        n: m.n,
        seed,
        generator: GENERATOR,
    })
}

fn check(ch: &ChannelModel, x: f64, gamma: f64) -> Result<()> {
    ch.check_input(x)?;
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::domain("gamma", gamma, "(0, inf)"));
    }
    if matches!(ch.family(), Family::Generic(_)) {
        return Err(Error::InvalidArgument(format!("no sampler for channel '{}'", ch.name())));
    }
    Ok(())
}

/// One draw from `f_γ(· | x)`; inputs are assumed checked.
fn draw_one<R: Rng + ?Sized>(ch: &ChannelModel, x: f64, gamma: f64, rng: &mut R) -> f64 {
    match ch.family() {
        Family::Gaussian => {
            let z: f64 = rng.sample(rand_distr::StandardNormal);
            gamma * x + gamma.sqrt() * z
        }
        Family::Poisson => poisson(gamma * x, rng),
        Family::Gamma => {
            let y = Gamma::new(gamma, x).expect("checked shape and scale").sample(rng);
            // very small shapes can underflow to 0, which is outside the support
            y.max(f64::MIN_POSITIVE)
        }
        Family::NegativeBinomial => {
            if x == 0.0 {
                return 0.0;
            }
            let lambda = Gamma::new(gamma, x).expect("checked shape and scale").sample(rng);
            poisson(lambda, rng)
        }
        Family::Generic(_) => unreachable!("rejected by check"),
    }
}

fn poisson<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> f64 {
    if mean <= 0.0 {
        0.0
    } else {
        Poisson::new(mean).expect("positive finite mean").sample(rng)
    }
}

fn draw_atom<R: Rng + ?Sized>(prior: &DiscretePrior, rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, w) in prior.weights().iter().enumerate() {
        acc += w;
        if u < acc {
            return i;
        }
    }
    prior.len() - 1
}

/// `n` i.i.d. draws from `f_γ(· | x)`.
pub fn sample_output(ch: &ChannelModel, x: f64, gamma: f64, seed: u64, n: usize) -> Result<Vec<f64>> {
    check(ch, x, gamma)?;
    let out: Vec<Vec<f64>> = chunks(n)
        .map(|(c, len)| {
            let mut rng = stream(seed, c);
            (0..len).map(|_| draw_one(ch, x, gamma, &mut rng)).collect()
        })
        .collect();
    Ok(out.concat())
}

/// `E_P ℓ_L(X, X̂^Q_γ(Y))` with `X ~ P`, `Y ~ f_γ(· | X)`, and the decoder
/// Bayes-optimal for `Q`.
pub fn mc_expected_loss(
    ch: &ChannelModel,
    p: &DiscretePrior,
    q: &DiscretePrior,
    gamma: f64,
    seed: u64,
    n: usize,
) -> Result<McEstimate> {
    p.validate_for(ch)?;
    q.validate_for(ch)?;
    check(ch, p.atoms()[0], gamma)?;
    estimate(seed, n, |rng| {
        let x = p.atoms()[draw_atom(p, rng)];
        let y = draw_one(ch, x, gamma, rng);
        let recon = optimal_reconstruction(ch, q, gamma, y).map_err(|e| match e {
            Error::ZeroLikelihood { .. } => Error::InfiniteLoss(format!("Q assigns zero likelihood to y = {y}")),
            e => e,
        })?;
        let l = levy_loss(ch, x, &recon, SAMPLE_LOSS_TOL)?.value;
        if l.is_finite() {
            Ok(l)
        } else {
            Err(Error::InfiniteLoss(format!("loss at x = {x}, y = {y}")))
        }
    })
}

/// `E ln(f_γ(Y | X) / f_P(Y))`.
pub fn mc_mutual_information(ch: &ChannelModel, prior: &DiscretePrior, gamma: f64, seed: u64, n: usize) -> Result<McEstimate> {
    prior.validate_for(ch)?;
    check(ch, prior.atoms()[0], gamma)?;
    let ln_w: Vec<f64> = prior.weights().iter().map(|w| w.ln()).collect();
    estimate(seed, n, |rng| {
        let i = draw_atom(prior, rng);
        let y = draw_one(ch, prior.atoms()[i], gamma, rng);
        let lnf = prior
            .atoms()
            .iter()
            .map(|&x| ch.ln_cond_law(x, gamma, y))
            .collect::<Result<Vec<_>>>()?;
        let terms: Vec<f64> = ln_w.iter().zip(&lnf).map(|(a, b)| a + b).collect();
        let max = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let ln_mix = max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln();
        Ok(lnf[i] - ln_mix)
    })
}

/// Mean posterior mass on atom `index` when `X` is that atom.
pub fn mc_posterior_concentration(
    ch: &ChannelModel,
    prior: &DiscretePrior,
    index: usize,
    gamma: f64,
    seed: u64,
    n: usize,
) -> Result<McEstimate> {
    prior.validate_for(ch)?;
    let x = *prior
        .atoms()
        .get(index)
        .ok_or_else(|| Error::InvalidArgument(format!("atom index {index} out of range")))?;
    check(ch, x, gamma)?;
    estimate(seed, n, |rng| {
        let y = draw_one(ch, x, gamma, rng);
        Ok(posterior(ch, prior, gamma, y)?.weights[index])
    })
}
