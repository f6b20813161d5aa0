//! Scalar Lévy channels.
//!
//! A channel is an exponential family obtained by Esscher-tilting the
//! no-input output law `P₀^γ`, whose cumulant transform is `γ κ(θ)`. The
//! input `x` is the mean parameter at unit SNR, `x = κ'(θ)`, and the natural
//! parameter is recovered through the Fenchel–Legendre dual `θ = φ'(x)`.
//! Conditional on `x`, the output at SNR `γ` has mean `γ x` and variance
//! `γ κ''(θ)`.

use std::fmt;
use std::sync::Arc;

use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::quad::{integrate_interval, integrate_semi_infinite, QuadResult};

pub type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A real interval with open or closed ends. Infinite ends are always open.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    pub lo_closed: bool,
    pub hi_closed: bool,
}

impl Interval {
    pub const REAL_LINE: Interval = Interval::open(f64::NEG_INFINITY, f64::INFINITY);

    pub const fn open(lo: f64, hi: f64) -> Self {
        Interval {
            lo,
            hi,
            lo_closed: false,
            hi_closed: false,
        }
    }

    pub const fn closed_open(lo: f64, hi: f64) -> Self {
        Interval {
            lo,
            hi,
            lo_closed: true,
            hi_closed: false,
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        let above = if self.lo_closed { x >= self.lo } else { x > self.lo };
        let below = if self.hi_closed { x <= self.hi } else { x < self.hi };
        above && below
    }

    pub fn contains_interior(&self, x: f64) -> bool {
        x > self.lo && x < self.hi
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let l = if self.lo_closed { '[' } else { '(' };
        let r = if self.hi_closed { ']' } else { ')' };
        write!(f, "{l}{}, {}{r}", self.lo, self.hi)
    }
}

/// Jump measure with a density `w(z)` on an open interval not containing 0.
#[derive(Clone)]
pub struct JumpDensity {
    pub support: Interval,
    pub density: RealFn,
    /// Human-readable form of `w`, used in channel descriptions.
    pub formula: String,
}

/// Jump measure on the positive integers, `ν({k}) = weight(k)`, with the
/// envelope `weight(k) ≤ bound · ratio^k` and `ratio < 1`.
#[derive(Clone)]
pub struct LatticeJumps {
    pub weight: Arc<dyn Fn(u64) -> f64 + Send + Sync>,
    pub ratio: f64,
    pub bound: f64,
    pub formula: String,
}

#[derive(Clone)]
pub enum JumpMeasure {
    Zero,
    Density(JumpDensity),
    /// Finitely many atoms `(z_k, m_k)`.
    Atoms(Vec<(f64, f64)>),
    Lattice(LatticeJumps),
}

impl JumpMeasure {
    /// The same measure multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> JumpMeasure {
        match self {
            JumpMeasure::Zero => JumpMeasure::Zero,
            JumpMeasure::Density(d) => {
                let inner = d.density.clone();
                JumpMeasure::Density(JumpDensity {
                    support: d.support,
                    density: Arc::new(move |z| factor * inner(z)),
                    formula: format!("{factor} * ({})", d.formula),
                })
            }
            JumpMeasure::Atoms(a) => {
                JumpMeasure::Atoms(a.iter().map(|&(z, m)| (z, factor * m)).collect())
            }
            JumpMeasure::Lattice(l) => {
                let inner = l.weight.clone();
                JumpMeasure::Lattice(LatticeJumps {
                    weight: Arc::new(move |k| factor * inner(k)),
                    ratio: l.ratio,
                    bound: factor.abs() * l.bound,
                    formula: format!("{factor} * ({})", l.formula),
                })
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, JumpMeasure::Zero)
    }
}

impl fmt::Debug for JumpMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            JumpMeasure::Zero => write!(f, "Zero"),
            JumpMeasure::Density(d) => write!(f, "Density({} on {})", d.formula, d.support),
            JumpMeasure::Atoms(a) => write!(f, "Atoms({a:?})"),
            JumpMeasure::Lattice(l) => write!(f, "Lattice({} for k >= 1)", l.formula),
        }
    }
}

impl fmt::Display for JumpMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            JumpMeasure::Zero => write!(f, "0"),
            JumpMeasure::Density(d) => write!(f, "{} dz on z in {}", d.formula, d.support),
            JumpMeasure::Atoms(a) => {
                let parts: Vec<String> = a.iter().map(|(z, m)| format!("{m}*delta_{z}")).collect();
                write!(f, "{}", parts.join(" + "))
            }
            JumpMeasure::Lattice(l) => write!(f, "nu(k) = {}, k = 1, 2, ...", l.formula),
        }
    }
}

/// Lévy characteristics `(a, σ, ν)`.
#[derive(Clone, Debug)]
pub struct LevyTriple {
    pub drift: f64,
    pub volatility: f64,
    pub jumps: JumpMeasure,
}

impl LevyTriple {
    pub fn new(drift: f64, volatility: f64, jumps: JumpMeasure) -> Result<Self> {
        if !(volatility >= 0.0) {
            return Err(Error::domain("volatility", volatility, "[0, inf)"));
        }
        if let JumpMeasure::Density(d) = &jumps {
            if d.support.contains(0.0) {
                return Err(Error::InvalidArgument(format!(
                    "jump density support {} must exclude 0",
                    d.support
                )));
            }
        }
        if let JumpMeasure::Lattice(l) = &jumps {
            if !(l.ratio > 0.0 && l.ratio < 1.0) {
                return Err(Error::InvalidArgument(format!(
                    "lattice envelope ratio must lie in (0, 1), got {}",
                    l.ratio
                )));
            }
        }
        Ok(LevyTriple {
            drift,
            volatility,
            jumps,
        })
    }

    /// `∫ min(1, z²) ν(dz)`, which must be finite for a Lévy measure.
    pub fn levy_integrability(&self, tol: f64) -> Result<QuadResult> {
        match &self.jumps {
            JumpMeasure::Zero => Ok(QuadResult::exact(0.0)),
            JumpMeasure::Atoms(a) => Ok(QuadResult::exact(
                a.iter().map(|&(z, m)| (z * z).min(1.0) * m).sum(),
            )),
            JumpMeasure::Lattice(l) => crate::quad::sum_series(
                1,
                |k| (l.weight)(k),
                |k| l.bound * l.ratio.powf(k as f64) / (1.0 - l.ratio),
                tol,
            ),
            JumpMeasure::Density(d) => {
                let w = d.density.clone();
                integrate_over_support(&d.support, move |z| (z * z).min(1.0) * w(z), tol / 4.0)
            }
        }
    }
}

/// `∫ f` over a jump-density support, split at `±1` and with semi-infinite
/// rules on unbounded pieces.
pub(crate) fn integrate_over_support<F, V>(support: &Interval, f: F, tol: f64) -> Result<QuadResult>
where
    F: Fn(f64) -> V,
    V: crate::quad::IntegrandValue,
{
    let mut total = QuadResult::exact(0.0);
    let mut pieces: Vec<(f64, f64)> = Vec::new();
    let mut cuts = vec![support.lo];
    for c in [-1.0, 1.0] {
        if c > support.lo && c < support.hi {
            cuts.push(c);
        }
    }
    cuts.push(support.hi);
    for w in cuts.windows(2) {
        pieces.push((w[0], w[1]));
    }
    let share = tol / pieces.len() as f64;
    for (lo, hi) in pieces {
        let part = match (lo.is_finite(), hi.is_finite()) {
            (true, true) => integrate_interval(&f, lo, hi, share)?,
            (true, false) => integrate_semi_infinite(&f, lo, share)?,
            (false, true) => integrate_semi_infinite(|t: f64| f(-t), -hi, share)?,
            (false, false) => {
                return Err(Error::InvalidArgument(
                    "jump density support must exclude 0".into(),
                ))
            }
        };
        total = total.add(part);
    }
    Ok(total)
}

/// Whether outputs are real-valued or counts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OutputKind {
    Continuous(Interval),
    Counts,
}

/// User-supplied ingredients of a channel with no closed forms built in.
#[derive(Clone)]
pub struct GenericFamily {
    pub cumulant: RealFn,
    /// `κ'`; central differences of `cumulant` are used when absent.
    pub cumulant_derivative: Option<RealFn>,
    /// `ln p₀^γ(y)`, the log density or log pmf of the no-input output law.
    pub base_log_law: Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>,
}

#[derive(Clone)]
pub enum Family {
    Gaussian,
    Poisson,
    Gamma,
    NegativeBinomial,
    Generic(GenericFamily),
}

impl fmt::Debug for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::Gaussian => write!(f, "Gaussian"),
            Family::Poisson => write!(f, "Poisson"),
            Family::Gamma => write!(f, "Gamma"),
            Family::NegativeBinomial => write!(f, "NegativeBinomial"),
            Family::Generic(_) => write!(f, "Generic"),
        }
    }
}

/// A scalar Lévy channel. Immutable once built.
#[derive(Clone, Debug)]
pub struct ChannelModel {
    name: String,
    family: Family,
    triple: LevyTriple,
    theta_domain: Interval,
    input_domain: Interval,
    output_kind: OutputKind,
}

const LN_2: f64 = std::f64::consts::LN_2;

impl ChannelModel {
    /// `Y | X ~ N(γX, γ)`; `κ(θ) = θ²/2`, triple `(0, 1, 0)`.
    pub fn gaussian() -> Self {
        ChannelModel {
            name: "gaussian".into(),
            family: Family::Gaussian,
            triple: LevyTriple {
                drift: 0.0,
                volatility: 1.0,
                jumps: JumpMeasure::Zero,
            },
            theta_domain: Interval::REAL_LINE,
            input_domain: Interval::REAL_LINE,
            output_kind: OutputKind::Continuous(Interval::REAL_LINE),
        }
    }

    /// `Y | X ~ Poisson(γX)`; `κ(θ) = e^θ - 1`, triple `(1, 0, δ₁)`.
    /// Zero input is allowed.
    pub fn poisson() -> Self {
        ChannelModel {
            name: "poisson".into(),
            family: Family::Poisson,
            triple: LevyTriple {
                drift: 1.0,
                volatility: 0.0,
                jumps: JumpMeasure::Atoms(vec![(1.0, 1.0)]),
            },
            theta_domain: Interval::REAL_LINE,
            input_domain: Interval::closed_open(0.0, f64::INFINITY),
            output_kind: OutputKind::Counts,
        }
    }

    /// `Y | X ~ Γ(shape γ, scale X)`; `κ(θ) = -ln(1 - θ)` on `θ < 1`,
    /// triple `(1 - e⁻¹, 0, z⁻¹e⁻ᶻ dz)` on `z > 0`.
    pub fn gamma() -> Self {
        ChannelModel {
            name: "gamma".into(),
            family: Family::Gamma,
            triple: LevyTriple {
                drift: 1.0 - (-1.0f64).exp(),
                volatility: 0.0,
                jumps: JumpMeasure::Density(JumpDensity {
                    support: Interval::open(0.0, f64::INFINITY),
                    density: Arc::new(|z: f64| (-z).exp() / z),
                    formula: "z^-1 e^-z".into(),
                }),
            },
            theta_domain: Interval::open(f64::NEG_INFINITY, 1.0),
            input_domain: Interval::open(0.0, f64::INFINITY),
            output_kind: OutputKind::Continuous(Interval::open(0.0, f64::INFINITY)),
        }
    }

    /// `Y | X ~ NB(γ, X/(1+X))`; `κ(θ) = ln(½ / (1 - ½e^θ))` on `e^θ < 2`,
    /// triple `(½, 0, ν(k) = 1/(k 2^k))`.
    pub fn negative_binomial() -> Self {
        ChannelModel {
            name: "negative-binomial".into(),
            family: Family::NegativeBinomial,
            triple: LevyTriple {
                drift: 0.5,
                volatility: 0.0,
                jumps: JumpMeasure::Lattice(LatticeJumps {
                    weight: Arc::new(|k: u64| 0.5f64.powf(k as f64) / k as f64),
                    ratio: 0.5,
                    bound: 1.0,
                    formula: "1/(k 2^k)".into(),
                }),
            },
            theta_domain: Interval::open(f64::NEG_INFINITY, LN_2),
            input_domain: Interval::closed_open(0.0, f64::INFINITY),
            output_kind: OutputKind::Counts,
        }
    }

    /// A channel from a user-supplied cumulant. `φ` and `φ'` are obtained by
    /// inverting `κ'` numerically. `theta_domain` must contain 0.
    pub fn generic(
        name: impl Into<String>,
        family: GenericFamily,
        triple: LevyTriple,
        theta_domain: Interval,
        input_domain: Interval,
        output_kind: OutputKind,
    ) -> Result<Self> {
        if !theta_domain.contains_interior(0.0) {
            return Err(Error::InvalidArgument(format!(
                "theta domain {theta_domain} must contain 0 in its interior"
            )));
        }
        let k0 = (family.cumulant)(0.0);
        if k0.abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "cumulant must vanish at 0, got {k0}"
            )));
        }
        Ok(ChannelModel {
            name: name.into(),
            family: Family::Generic(family),
            triple,
            theta_domain,
            input_domain,
            output_kind,
        })
    }

    /// Looks up one of the four built-in channels by name.
    pub fn by_name(name: &str) -> Option<Self> {
        match name {
            "gaussian" => Some(Self::gaussian()),
            "poisson" => Some(Self::poisson()),
            "gamma" => Some(Self::gamma()),
            "negative-binomial" | "nb" => Some(Self::negative_binomial()),
            _ => None,
        }
    }

    pub fn builtin() -> [ChannelModel; 4] {
        [
            Self::gaussian(),
            Self::poisson(),
            Self::gamma(),
            Self::negative_binomial(),
        ]
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn triple(&self) -> &LevyTriple {
        &self.triple
    }

    pub fn theta_domain(&self) -> Interval {
        self.theta_domain
    }

    pub fn input_domain(&self) -> Interval {
        self.input_domain
    }

    pub fn output_kind(&self) -> OutputKind {
        self.output_kind
    }

    /// Same output laws, different Lévy characteristics. The loss functions
    /// read `σ` and `ν` from the triple, so this is how a corrupted loss is
    /// produced for mutation testing.
    pub fn with_triple(&self, triple: LevyTriple) -> Self {
        ChannelModel {
            triple,
            ..self.clone()
        }
    }

    fn check_theta(&self, theta: f64) -> Result<()> {
        if self.theta_domain.contains(theta) {
            Ok(())
        } else {
            Err(Error::domain("theta", theta, self.theta_domain.to_string()))
        }
    }

    pub fn check_input(&self, x: f64) -> Result<()> {
        if self.input_domain.contains(x) {
            Ok(())
        } else {
            Err(Error::domain("x", x, self.input_domain.to_string()))
        }
    }

    fn check_gamma(gamma: f64) -> Result<()> {
        if gamma > 0.0 && gamma.is_finite() {
            Ok(())
        } else {
            Err(Error::domain("gamma", gamma, "(0, inf)"))
        }
    }

    /// `κ(θ)`.
    pub fn cumulant(&self, theta: f64) -> Result<f64> {
        self.check_theta(theta)?;
        Ok(match &self.family {
            Family::Gaussian => 0.5 * theta * theta,
            Family::Poisson => theta.exp_m1(),
            Family::Gamma => -(-theta).ln_1p(),
            Family::NegativeBinomial => -LN_2 - (-0.5 * theta.exp()).ln_1p(),
            Family::Generic(g) => (g.cumulant)(theta),
        })
    }

    /// `κ'(θ)`, the unit-SNR conditional mean.
    pub fn cumulant_derivative(&self, theta: f64) -> Result<f64> {
        self.check_theta(theta)?;
        Ok(match &self.family {
            Family::Gaussian => theta,
            Family::Poisson => theta.exp(),
            Family::Gamma => 1.0 / (1.0 - theta),
            Family::NegativeBinomial => {
                let p = 0.5 * theta.exp();
                p / (1.0 - p)
            }
            Family::Generic(g) => match &g.cumulant_derivative {
                Some(d) => d(theta),
                None => self.numeric_derivative(&*g.cumulant, theta),
            },
        })
    }

    /// `κ''(θ)`, the unit-SNR conditional variance.
    pub fn cumulant_second_derivative(&self, theta: f64) -> Result<f64> {
        self.check_theta(theta)?;
        Ok(match &self.family {
            Family::Gaussian => 1.0,
            Family::Poisson => theta.exp(),
            Family::Gamma => (1.0 - theta).powi(-2),
            Family::NegativeBinomial => {
                let x = self.cumulant_derivative(theta)?;
                x * (1.0 + x)
            }
            Family::Generic(g) => {
                let d = |t: f64| match &g.cumulant_derivative {
                    Some(d) => d(t),
                    None => self.numeric_derivative(&*g.cumulant, t),
                };
                self.numeric_derivative(&d, theta)
            }
        })
    }

    fn numeric_derivative(&self, f: &dyn Fn(f64) -> f64, t: f64) -> f64 {
        let mut h = 1e-5 * t.abs().max(1.0);
        // Stay inside the open theta domain.
        let room = (t - self.theta_domain.lo).min(self.theta_domain.hi - t);
        if room.is_finite() {
            h = h.min(0.25 * room);
        }
        let d1 = (f(t + h) - f(t - h)) / (2.0 * h);
        let d2 = (f(t + h / 2.0) - f(t - h / 2.0)) / h;
        (4.0 * d2 - d1) / 3.0
    }

    /// The no-input point `κ'(0)`, where `φ` attains its minimum 0.
    pub fn no_input_point(&self) -> f64 {
        self.cumulant_derivative(0.0).expect("0 lies in every theta domain")
    }

    /// `θ = φ'(x)`. Returns `-∞` at a closed lower boundary of the input
    /// domain where `κ'` only reaches `x` in the limit (zero input for the
    /// Poisson and negative binomial channels).
    pub fn link(&self, x: f64) -> Result<f64> {
        self.check_input(x)?;
        Ok(match &self.family {
            Family::Gaussian => x,
            Family::Poisson => x.ln(),
            Family::Gamma => 1.0 - 1.0 / x,
            Family::NegativeBinomial => LN_2 + x.ln() - x.ln_1p(),
            Family::Generic(_) => {
                if x == self.input_domain.lo && self.input_domain.lo_closed {
                    f64::NEG_INFINITY
                } else {
                    self.invert_cumulant_derivative(x)?
                }
            }
        })
    }

    /// `φ(x) = sup_θ {θx - κ(θ)}`.
    pub fn dual(&self, x: f64) -> Result<f64> {
        self.check_input(x)?;
        Ok(match &self.family {
            Family::Gaussian => 0.5 * x * x,
            Family::Poisson => {
                if x == 0.0 {
                    1.0
                } else {
                    x * x.ln() - x + 1.0
                }
            }
            Family::Gamma => x - 1.0 - x.ln(),
            Family::NegativeBinomial => {
                let xlnx = if x == 0.0 { 0.0 } else { x * x.ln() };
                xlnx - (1.0 + x) * x.ln_1p() + (x + 1.0) * LN_2
            }
            Family::Generic(g) => {
                let theta = self.link(x)?;
                if theta == f64::NEG_INFINITY {
                    if x != 0.0 {
                        return Err(Error::domain("x", x, "interior of the input domain"));
                    }
                    // φ(0) = sup_θ {-κ(θ)} = -lim_{θ→-∞} κ(θ)
                    -(g.cumulant)(self.theta_domain.lo.max(-700.0))
                } else {
                    theta * x - (g.cumulant)(theta)
                }
            }
        })
    }

    fn invert_cumulant_derivative(&self, x: f64) -> Result<f64> {
        let d = |t: f64| self.cumulant_derivative(t);
        let dom = self.theta_domain;
        let toward = |from: f64, bound: f64, step: f64| -> f64 {
            if bound.is_finite() {
                0.5 * (from + bound)
            } else {
                from + step
            }
        };
        let mut lo = 0.0;
        let mut hi = 0.0;
        let mut step = 1.0;
        let mut iters = 0;
        while d(hi)? < x {
            hi = toward(hi, dom.hi, step);
            step *= 2.0;
            iters += 1;
            if iters > 200 {
                return Err(Error::domain("x", x, "range of the cumulant derivative"));
            }
        }
        step = 1.0;
        iters = 0;
        while d(lo)? > x {
            lo = toward(lo, dom.lo, -step);
            step *= 2.0;
            iters += 1;
            if iters > 200 {
                return Err(Error::domain("x", x, "range of the cumulant derivative"));
            }
        }
        for _ in 0..400 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if d(mid)? < x {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-15 * hi.abs().max(1.0) {
                break;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// `e^{φ'(x) z}`, the jump-size reweighting of input `x`.
    pub fn tilt_factor(&self, x: f64, z: f64) -> Result<f64> {
        let theta = self.link(x)?;
        Ok(exp_theta_z(theta, z))
    }

    /// `ln f_γ(y | x)`; `-∞` outside the support of the conditional law.
    pub fn ln_cond_law(&self, x: f64, gamma: f64, y: f64) -> Result<f64> {
        self.check_input(x)?;
        Self::check_gamma(gamma)?;
        self.check_output(y)?;
        Ok(match &self.family {
            Family::Gaussian => {
                let d = y - gamma * x;
                -0.5 * d * d / gamma - 0.5 * (2.0 * std::f64::consts::PI * gamma).ln()
            }
            Family::Poisson => {
                if x == 0.0 {
                    if y == 0.0 {
                        0.0
                    } else {
                        f64::NEG_INFINITY
                    }
                } else {
                    let m = gamma * x;
                    y * m.ln() - m - ln_gamma(y + 1.0)
                }
            }
            Family::Gamma => {
                (gamma - 1.0) * y.ln() - y / x - gamma * x.ln() - ln_gamma(gamma)
            }
            Family::NegativeBinomial => {
                if x == 0.0 {
                    if y == 0.0 {
                        0.0
                    } else {
                        f64::NEG_INFINITY
                    }
                } else {
                    let ln1px = x.ln_1p();
                    ln_gamma(y + gamma) - ln_gamma(y + 1.0) - ln_gamma(gamma) - gamma * ln1px
                        + y * (x.ln() - ln1px)
                }
            }
            Family::Generic(g) => {
                let theta = self.link(x)?;
                let base = (g.base_log_law)(gamma, y);
                if theta == f64::NEG_INFINITY {
                    // Limit of the tilt at the boundary of the mean range.
                    if y == self.output_floor() {
                        0.0
                    } else {
                        f64::NEG_INFINITY
                    }
                } else {
                    theta * y - gamma * (g.cumulant)(theta) + base
                }
            }
        })
    }

    fn output_floor(&self) -> f64 {
        match self.output_kind {
            OutputKind::Counts => 0.0,
            OutputKind::Continuous(i) => i.lo,
        }
    }

    /// `f_γ(y | x)`: density for continuous outputs, pmf for counts.
    pub fn cond_law(&self, x: f64, gamma: f64, y: f64) -> Result<f64> {
        Ok(self.ln_cond_law(x, gamma, y)?.exp())
    }

    /// `p₀^γ(y)`, the output law with no input (`x = κ'(0)`).
    pub fn base_law(&self, gamma: f64, y: f64) -> Result<f64> {
        match &self.family {
            Family::Generic(g) => {
                Self::check_gamma(gamma)?;
                self.check_output(y)?;
                Ok((g.base_log_law)(gamma, y).exp())
            }
            _ => self.cond_law(self.no_input_point(), gamma, y),
        }
    }

    /// Esscher tilt `exp(θy - γκ(θ)) p₀^γ(y)` with `θ = φ'(x)`. Agrees with
    /// [`cond_law`](Self::cond_law), which is evaluated in closed form.
    pub fn tilted_base_law(&self, x: f64, gamma: f64, y: f64) -> Result<f64> {
        let theta = self.link(x)?;
        let base = self.base_law(gamma, y)?;
        if theta == f64::NEG_INFINITY {
            // e^{θy - γκ(θ)} → 1{y = 0} · e^{-γκ(-∞)} and the base law at 0
            // cancels against e^{-γκ(-∞)}.
            return Ok(if y == self.output_floor() { 1.0 } else { 0.0 });
        }
        Ok((theta * y - gamma * self.cumulant(theta)?).exp() * base)
    }

    pub fn check_output(&self, y: f64) -> Result<()> {
        let ok = match self.output_kind {
            OutputKind::Counts => y >= 0.0 && y.fract() == 0.0 && y.is_finite(),
            OutputKind::Continuous(i) => i.contains(y),
        };
        if ok {
            Ok(())
        } else {
            let domain = match self.output_kind {
                OutputKind::Counts => "{0, 1, 2, ...}".to_string(),
                OutputKind::Continuous(i) => i.to_string(),
            };
            Err(Error::domain("y", y, domain))
        }
    }

    /// `E[Y | x] = γx`.
    pub fn conditional_mean(&self, x: f64, gamma: f64) -> Result<f64> {
        self.check_input(x)?;
        Ok(gamma * x)
    }

    /// `Var[Y | x] = γ κ''(φ'(x))`.
    pub fn conditional_variance(&self, x: f64, gamma: f64) -> Result<f64> {
        let theta = self.link(x)?;
        if theta == f64::NEG_INFINITY {
            return Ok(0.0);
        }
        Ok(gamma * self.cumulant_second_derivative(theta)?)
    }

    /// Human-readable summary of the channel's symbols and domains.
    pub fn describe(&self) -> String {
        let (kappa, phi, link) = match &self.family {
            Family::Gaussian => ("theta^2 / 2", "x^2 / 2", "theta = x"),
            Family::Poisson => ("e^theta - 1", "x ln x - x + 1", "theta = ln x"),
            Family::Gamma => ("-ln(1 - theta)", "x - 1 - ln x", "theta = 1 - 1/x"),
            Family::NegativeBinomial => (
                "ln((1/2) / (1 - e^theta / 2))",
                "x ln x - (1+x) ln(1+x) + x ln 2 + ln 2",
                "theta = ln(2x / (1+x))",
            ),
            Family::Generic(_) => ("user supplied", "numerical conjugate", "numerical inverse of kappa'"),
        };
        let law = match &self.family {
            Family::Gaussian => "Y | X ~ N(gamma X, gamma)",
            Family::Poisson => "Y | X ~ Poisson(gamma X)",
            Family::Gamma => "Y | X ~ Gamma(shape gamma, scale X)",
            Family::NegativeBinomial => "Y | X ~ NB(gamma, X / (1 + X))",
            Family::Generic(_) => "Esscher tilt of the supplied base law",
        };
        let output = match self.output_kind {
            OutputKind::Counts => "{0, 1, 2, ...}".to_string(),
            OutputKind::Continuous(i) => i.to_string(),
        };
        format!(
            "channel: {}\n\
             conditional law: {law}\n\
             kappa(theta) = {kappa}\n\
             phi(x) = {phi}\n\
             link: {link}\n\
             theta domain: {}\n\
             input domain: {}\n\
             output support: {output}\n\
             no-input point: x = {}\n\
             levy triple: a = {}, sigma = {}, nu(dz) = {}\n",
            self.name,
            self.theta_domain,
            self.input_domain,
            self.no_input_point(),
            self.triple.drift,
            self.triple.volatility,
            self.triple.jumps,
        )
    }
}

/// `e^{θz}` with `θ = -∞` mapped to the limits 0 (z > 0) and ∞ (z < 0).
pub(crate) fn exp_theta_z(theta: f64, z: f64) -> f64 {
    if theta == f64::NEG_INFINITY {
        if z > 0.0 {
            0.0
        } else if z < 0.0 {
            f64::INFINITY
        } else {
            1.0
        }
    } else {
        (theta * z).exp()
    }
}

/// The alternative Gamma model `Y | X ~ Γ(k, aX/k)`, indexed by an input
/// amplification `a` instead of an SNR. Not a Lévy channel in `a`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaAmplified {
    pub shape: f64,
    pub amplification: f64,
}

impl GammaAmplified {
    pub fn new(shape: f64, amplification: f64) -> Result<Self> {
        if !(shape > 0.0 && shape.is_finite()) {
            return Err(Error::domain("k", shape, "(0, inf)"));
        }
        if !(amplification > 0.0 && amplification.is_finite()) {
            return Err(Error::domain("a", amplification, "(0, inf)"));
        }
        Ok(GammaAmplified {
            shape,
            amplification,
        })
    }

    pub fn scale(&self, x: f64) -> f64 {
        self.amplification * x / self.shape
    }

    pub fn ln_density(&self, x: f64, y: f64) -> Result<f64> {
        if !(x > 0.0) {
            return Err(Error::domain("x", x, "(0, inf)"));
        }
        if !(y > 0.0) {
            return Err(Error::domain("y", y, "(0, inf)"));
        }
        let k = self.shape;
        let s = self.scale(x);
        Ok((k - 1.0) * y.ln() - y / s - k * s.ln() - ln_gamma(k))
    }

    pub fn density(&self, x: f64, y: f64) -> Result<f64> {
        Ok(self.ln_density(x, y)?.exp())
    }

    /// `E[Y | x] = a x`.
    pub fn mean(&self, x: f64) -> f64 {
        self.amplification * x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn interior_grid(ch: &ChannelModel) -> Vec<f64> {
        match ch.family() {
            Family::Gaussian => vec![-3.0, -1.0, -0.2, 0.0, 0.5, 2.0, 4.0],
            _ => vec![0.05, 0.3, 1.0, 1.7, 3.0, 10.0],
        }
    }

    #[test]
    fn cumulant_examples() {
        assert_eq!(ChannelModel::gaussian().cumulant(0.0).unwrap(), 0.0);
        assert_abs_diff_eq!(
            ChannelModel::gamma().cumulant(0.5).unwrap(),
            std::f64::consts::LN_2,
            epsilon = 1e-15
        );
        assert_eq!(ChannelModel::negative_binomial().cumulant(0.0).unwrap(), 0.0);
        for ch in ChannelModel::builtin() {
            assert_eq!(ch.cumulant(0.0).unwrap(), 0.0, "{}", ch.name());
        }
    }

    #[test]
    fn cumulant_domain_errors() {
        assert!(matches!(
            ChannelModel::gamma().cumulant(1.0),
            Err(Error::Domain { .. })
        ));
        assert!(ChannelModel::gamma().cumulant(1.5).is_err());
        // e^θ = 2 is the boundary of the NB domain
        assert!(ChannelModel::negative_binomial().cumulant(LN_2).is_err());
        assert!(ChannelModel::negative_binomial().cumulant(LN_2 - 1e-9).is_ok());
    }

    #[test]
    fn dual_and_link_examples() {
        let g = ChannelModel::gamma();
        assert_eq!(g.dual(1.0).unwrap(), 0.0);
        assert_eq!(g.link(1.0).unwrap(), 0.0);
        assert_abs_diff_eq!(g.dual(2.0).unwrap(), 1.0 - LN_2, epsilon = 1e-15);
        assert_abs_diff_eq!(g.link(2.0).unwrap(), 0.5, epsilon = 1e-15);

        let nb = ChannelModel::negative_binomial();
        assert_abs_diff_eq!(nb.dual(1.0).unwrap(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(nb.link(1.0).unwrap(), 0.0, epsilon = 1e-15);

        let p = ChannelModel::poisson();
        let e = std::f64::consts::E;
        assert_abs_diff_eq!(p.dual(e).unwrap(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.link(e).unwrap(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn dual_domain_errors() {
        assert!(ChannelModel::gamma().dual(0.0).is_err());
        assert!(ChannelModel::gamma().link(-1.0).is_err());
        assert!(ChannelModel::poisson().dual(-0.1).is_err());
        assert!(ChannelModel::negative_binomial().link(-2.0).is_err());
        // zero input is allowed for Poisson and NB
        assert_eq!(ChannelModel::poisson().dual(0.0).unwrap(), 1.0);
        assert_eq!(ChannelModel::poisson().link(0.0).unwrap(), f64::NEG_INFINITY);
        assert_abs_diff_eq!(ChannelModel::negative_binomial().dual(0.0).unwrap(), LN_2, epsilon = 1e-15);
    }

    #[test]
    fn fenchel_duality_and_link_bijection() {
        for ch in ChannelModel::builtin() {
            for x in interior_grid(&ch) {
                let theta = ch.link(x).unwrap();
                let lhs = ch.cumulant(theta).unwrap() + ch.dual(x).unwrap();
                assert_abs_diff_eq!(lhs, x * theta, epsilon = 1e-12 * (1.0 + (x * theta).abs()));
                assert_relative_eq!(ch.cumulant_derivative(theta).unwrap(), x, max_relative = 1e-12);
                assert!(ch.dual(x).unwrap() >= 0.0);
            }
        }
    }

    #[test]
    fn no_input_point_minimizes_dual() {
        for ch in ChannelModel::builtin() {
            let x0 = ch.no_input_point();
            assert_abs_diff_eq!(ch.dual(x0).unwrap(), 0.0, epsilon = 1e-15);
            assert_abs_diff_eq!(ch.link(x0).unwrap(), 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn cumulant_strictly_convex() {
        for ch in ChannelModel::builtin() {
            let dom = ch.theta_domain();
            let hi = if dom.hi.is_finite() { dom.hi - 0.05 } else { 2.0 };
            for i in 0..=40 {
                let t = -3.0 + (hi + 3.0) * i as f64 / 40.0;
                let h = 1e-3;
                let second = (ch.cumulant(t + h).unwrap() - 2.0 * ch.cumulant(t).unwrap()
                    + ch.cumulant(t - h).unwrap())
                    / (h * h);
                assert!(second > 0.0, "{} at theta = {t}", ch.name());
            }
        }
    }

    #[test]
    fn cond_law_examples() {
        let p = ChannelModel::poisson();
        assert_abs_diff_eq!(p.cond_law(1.0, 1.0, 0.0).unwrap(), (-1.0f64).exp(), epsilon = 1e-15);
        let g = ChannelModel::gaussian();
        assert_abs_diff_eq!(
            g.cond_law(0.0, 1.0, 0.0).unwrap(),
            1.0 / (2.0 * std::f64::consts::PI).sqrt(),
            epsilon = 1e-15
        );
        let nb = ChannelModel::negative_binomial();
        for k in 0..20 {
            assert_relative_eq!(
                nb.cond_law(1.0, 1.0, k as f64).unwrap(),
                0.5f64.powi(k + 1),
                max_relative = 1e-13
            );
        }
    }

    #[test]
    fn base_law_examples() {
        assert_relative_eq!(
            ChannelModel::gamma().base_law(1.0, 1.0).unwrap(),
            (-1.0f64).exp(),
            max_relative = 1e-14
        );
        assert_relative_eq!(
            ChannelModel::gaussian().base_law(2.0, 0.0).unwrap(),
            1.0 / (4.0 * std::f64::consts::PI).sqrt(),
            max_relative = 1e-14
        );
        assert_relative_eq!(
            ChannelModel::poisson().base_law(1.0, 1.0).unwrap(),
            (-1.0f64).exp(),
            max_relative = 1e-14
        );
    }

    #[test]
    fn gamma_density_bounded_away_from_zero_for_small_shape() {
        let g = ChannelModel::gamma();
        let v = g.cond_law(1.0, 0.3, 1e-12).unwrap();
        assert!(v.is_finite() && v > 1e6);
        assert!(g.cond_law(1.0, 0.3, 0.0).is_err());
    }

    #[test]
    fn esscher_tilt_matches_closed_form() {
        for ch in ChannelModel::builtin() {
            let ys: Vec<f64> = match ch.output_kind() {
                OutputKind::Counts => (0..30).map(f64::from).collect(),
                OutputKind::Continuous(i) if i.lo == 0.0 => vec![0.01, 0.3, 1.0, 2.5, 7.0, 15.0],
                OutputKind::Continuous(_) => vec![-4.0, -1.0, 0.0, 0.7, 3.0, 6.0],
            };
            for x in interior_grid(&ch) {
                for gamma in [0.3, 1.0, 2.0, 5.5] {
                    for &y in &ys {
                        let direct = ch.cond_law(x, gamma, y).unwrap();
                        let tilted = ch.tilted_base_law(x, gamma, y).unwrap();
                        assert_relative_eq!(direct, tilted, max_relative = 1e-10);
                    }
                }
            }
        }
    }

    #[test]
    fn zero_input_tilt_limit() {
        for ch in [ChannelModel::poisson(), ChannelModel::negative_binomial()] {
            assert_eq!(ch.cond_law(0.0, 2.0, 0.0).unwrap(), 1.0);
            assert_eq!(ch.tilted_base_law(0.0, 2.0, 0.0).unwrap(), 1.0);
            assert_eq!(ch.cond_law(0.0, 2.0, 3.0).unwrap(), 0.0);
            assert_eq!(ch.tilted_base_law(0.0, 2.0, 3.0).unwrap(), 0.0);
        }
    }

    #[test]
    fn output_domain_errors() {
        assert!(ChannelModel::poisson().cond_law(1.0, 1.0, 1.5).is_err());
        assert!(ChannelModel::poisson().cond_law(1.0, 1.0, -1.0).is_err());
        assert!(ChannelModel::gamma().cond_law(1.0, 1.0, -1.0).is_err());
        assert!(ChannelModel::gaussian().cond_law(1.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn shipped_triples_are_levy_measures() {
        let g = ChannelModel::gamma().triple().levy_integrability(1e-10).unwrap();
        // ∫_0^1 z e^{-z} dz + ∫_1^∞ e^{-z}/z dz = (1 - 2/e) + E₁(1)
        let e1_of_1 = 0.219_383_934_395_520_3;
        assert_abs_diff_eq!(g.value, 1.0 - 2.0 / std::f64::consts::E + e1_of_1, epsilon = 1e-10);
        let nb = ChannelModel::negative_binomial()
            .triple()
            .levy_integrability(1e-12)
            .unwrap();
        assert_abs_diff_eq!(nb.value, LN_2, epsilon = 1e-12);
        let p = ChannelModel::poisson().triple().levy_integrability(1e-12).unwrap();
        assert_eq!(p.value, 1.0);
        assert_eq!(ChannelModel::gaussian().triple().volatility, 1.0);
    }

    #[test]
    fn triple_rejects_bad_inputs() {
        assert!(LevyTriple::new(0.0, -1.0, JumpMeasure::Zero).is_err());
        let bad = JumpMeasure::Density(JumpDensity {
            support: Interval::open(-1.0, 1.0),
            density: Arc::new(|_| 1.0),
            formula: "1".into(),
        });
        assert!(LevyTriple::new(0.0, 0.0, bad).is_err());
    }

    #[test]
    fn conditional_moments() {
        let nb = ChannelModel::negative_binomial();
        assert_abs_diff_eq!(nb.conditional_variance(2.0, 3.0).unwrap(), 3.0 * 2.0 * 3.0, epsilon = 1e-12);
        let g = ChannelModel::gamma();
        assert_abs_diff_eq!(g.conditional_variance(2.0, 3.0).unwrap(), 12.0, epsilon = 1e-12);
        let p = ChannelModel::poisson();
        assert_eq!(p.conditional_variance(0.0, 3.0).unwrap(), 0.0);
        assert_abs_diff_eq!(p.conditional_variance(1.5, 2.0).unwrap(), 3.0, epsilon = 1e-12);
    }

    fn generic_poisson() -> ChannelModel {
        ChannelModel::generic(
            "generic-poisson",
            GenericFamily {
                cumulant: Arc::new(|t: f64| t.exp_m1()),
                cumulant_derivative: None,
                base_log_law: Arc::new(|g: f64, y: f64| y * g.ln() - g - ln_gamma(y + 1.0)),
            },
            ChannelModel::poisson().triple().clone(),
            Interval::REAL_LINE,
            Interval::closed_open(0.0, f64::INFINITY),
            OutputKind::Counts,
        )
        .unwrap()
    }

    #[test]
    fn generic_channel_inverts_numerically() {
        let gp = generic_poisson();
        let p = ChannelModel::poisson();
        for x in [0.1, 0.5, 1.0, 2.0, 7.0] {
            assert_relative_eq!(gp.link(x).unwrap(), p.link(x).unwrap(), max_relative = 1e-9, epsilon = 1e-10);
            assert_abs_diff_eq!(gp.dual(x).unwrap(), p.dual(x).unwrap(), epsilon = 1e-9);
            for y in [0.0, 1.0, 4.0] {
                assert_relative_eq!(
                    gp.cond_law(x, 1.3, y).unwrap(),
                    p.cond_law(x, 1.3, y).unwrap(),
                    max_relative = 1e-8
                );
            }
        }
        assert_eq!(gp.cond_law(0.0, 1.0, 0.0).unwrap(), 1.0);
    }

    #[test]
    fn generic_channel_with_bounded_theta_domain() {
        // gamma cumulant supplied generically; theta < 1
        let gg = ChannelModel::generic(
            "generic-gamma",
            GenericFamily {
                cumulant: Arc::new(|t: f64| -(-t).ln_1p()),
                cumulant_derivative: Some(Arc::new(|t: f64| 1.0 / (1.0 - t))),
                base_log_law: Arc::new(|g: f64, y: f64| (g - 1.0) * y.ln() - y - ln_gamma(g)),
            },
            ChannelModel::gamma().triple().clone(),
            Interval::open(f64::NEG_INFINITY, 1.0),
            Interval::open(0.0, f64::INFINITY),
            OutputKind::Continuous(Interval::open(0.0, f64::INFINITY)),
        )
        .unwrap();
        for x in [0.2, 1.0, 2.0, 50.0] {
            assert_abs_diff_eq!(gg.link(x).unwrap(), 1.0 - 1.0 / x, epsilon = 1e-12);
        }
    }

    #[test]
    fn generic_requires_normalized_cumulant() {
        let r = ChannelModel::generic(
            "bad",
            GenericFamily {
                cumulant: Arc::new(|t: f64| t.exp()),
                cumulant_derivative: None,
                base_log_law: Arc::new(|_, _| 0.0),
            },
            ChannelModel::poisson().triple().clone(),
            Interval::REAL_LINE,
            Interval::closed_open(0.0, f64::INFINITY),
            OutputKind::Counts,
        );
        assert!(r.is_err());
    }

    #[test]
    fn gamma_amplified_examples() {
        let m = GammaAmplified::new(1.0, 1.0).unwrap();
        for y in [0.1, 1.0, 3.0] {
            assert_relative_eq!(m.density(1.0, y).unwrap(), (-y).exp(), max_relative = 1e-14);
        }
        let m2 = GammaAmplified::new(2.0, 1.0).unwrap();
        assert_eq!(m2.mean(1.0), 1.0);
        let m3 = GammaAmplified::new(3.0, 2.5).unwrap();
        assert_abs_diff_eq!(m3.mean(1.2), 3.0, epsilon = 1e-15);
        assert!(GammaAmplified::new(0.0, 1.0).is_err());
        assert!(GammaAmplified::new(1.0, -1.0).is_err());
    }

    #[test]
    fn describe_mentions_triple() {
        assert!(ChannelModel::gaussian().describe().contains("sigma = 1"));
        assert!(ChannelModel::gamma().describe().contains("z^-1 e^-z"));
        assert!(ChannelModel::negative_binomial().describe().contains("1/(k 2^k)"));
    }
}
