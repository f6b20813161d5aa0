//! Numerical integration and summation with explicit error estimates.
//!
//! Every routine returns a [`QuadResult`]; a bare number never leaves this
//! module. Integrals use a globally adaptive 21-point Gauss–Kronrod rule,
//! which is open (the endpoints are never evaluated), so integrable endpoint
//! singularities are tolerated. Integrands may themselves be the output of a
//! numerical procedure: returning a [`QuadResult`] (or `Result<QuadResult>`)
//! from the integrand folds the inner error estimates into the outer one.

mod output;

pub use output::{expectation_over_output, integrate_over_output, ChannelAtSnr, ObservationModel, OutputPlan};

use crate::error::{Error, Result};

/// Default evaluation budget for one one-dimensional integral.
pub const DEFAULT_BUDGET: usize = 1 << 15;

/// Result of a numerical integration or summation.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct QuadResult {
    pub value: f64,
    pub error_estimate: f64,
    pub evaluations: usize,
    /// `false` when `error_estimate` exceeds the tolerance that was requested.
    pub converged: bool,
}

impl QuadResult {
    pub fn exact(value: f64) -> Self {
        QuadResult {
            value,
            error_estimate: 0.0,
            evaluations: 0,
            converged: true,
        }
    }

    /// Sum of two independent estimates; errors add.
    #[allow(clippy::should_implement_trait)]
    pub fn add(self, other: QuadResult) -> Self {
        QuadResult {
            value: self.value + other.value,
            error_estimate: self.error_estimate + other.error_estimate,
            evaluations: self.evaluations + other.evaluations,
            converged: self.converged && other.converged,
        }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn sub(self, other: QuadResult) -> Self {
        self.add(other.scale(-1.0))
    }

    pub fn scale(self, c: f64) -> Self {
        QuadResult {
            value: c * self.value,
            error_estimate: c.abs() * self.error_estimate,
            ..self
        }
    }
}

/// Anything an integrand may return: a plain value, a fallible value, or a
/// nested numerical result whose error estimate must be propagated.
pub trait IntegrandValue {
    /// `(value, error estimate of the value)`.
    fn into_parts(self) -> Result<(f64, f64)>;
}

impl IntegrandValue for f64 {
    fn into_parts(self) -> Result<(f64, f64)> {
        Ok((self, 0.0))
    }
}

impl IntegrandValue for QuadResult {
    fn into_parts(self) -> Result<(f64, f64)> {
        Ok((self.value, self.error_estimate))
    }
}

impl IntegrandValue for (f64, f64) {
    fn into_parts(self) -> Result<(f64, f64)> {
        Ok(self)
    }
}

impl<V: IntegrandValue> IntegrandValue for Result<V> {
    fn into_parts(self) -> Result<(f64, f64)> {
        self.and_then(IntegrandValue::into_parts)
    }
}

// 21-point Kronrod extension of the 10-point Gauss rule (QUADPACK qk21),
// digits kept as published.
#[allow(clippy::excessive_precision)]
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689,
    0.973_906_528_517_171_720_077_964_012_084,
    0.930_157_491_355_708_226_001_207_180_060,
    0.865_063_366_688_984_510_732_096_688_423,
    0.780_817_726_586_416_897_063_717_578_345,
    0.679_409_568_299_024_406_234_327_365_115,
    0.562_757_134_668_604_683_339_000_099_273,
    0.433_395_394_129_247_190_799_265_943_166,
    0.294_392_862_701_460_198_131_126_603_104,
    0.148_874_338_981_631_210_884_826_001_130,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062,
    0.032_558_162_307_964_727_478_818_972_459,
    0.054_755_896_574_351_996_031_381_300_245,
    0.075_039_674_810_919_952_767_043_140_916,
    0.093_125_454_583_697_605_535_065_465_083,
    0.109_387_158_802_297_641_899_210_590_326,
    0.123_491_976_262_065_851_077_208_794_161,
    0.134_709_217_311_473_325_928_054_001_772,
    0.142_775_938_577_060_080_797_094_273_139,
    0.147_739_104_901_338_491_374_841_515_972,
    0.149_445_554_002_916_905_664_936_468_390,
];

// Gauss weights for XGK[1], XGK[3], ..., XGK[9].
#[allow(clippy::excessive_precision)]
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893,
    0.149_451_349_150_580_593_145_776_339_658,
    0.219_086_362_515_982_043_995_534_934_228,
    0.269_266_719_309_996_355_091_226_921_569,
    0.295_524_224_714_752_870_173_892_994_651,
];

const RULE_POINTS: usize = 21;

#[derive(Debug, Clone, Copy)]
struct Segment {
    lo: f64,
    hi: f64,
    value: f64,
    error: f64,
    inner_error: f64,
}

fn gauss_kronrod<F, V>(f: &mut F, lo: f64, hi: f64) -> Result<Segment>
where
    F: FnMut(f64) -> V,
    V: IntegrandValue,
{
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let mut eval = |x: f64| -> Result<(f64, f64)> {
        let (v, e) = f(x).into_parts()?;
        if !v.is_finite() {
            return Err(Error::Divergent(format!("integrand is not finite at {x}")));
        }
        Ok((v, e.abs()))
    };

    let (fc, ec) = eval(center)?;
    let mut kronrod = WGK[10] * fc;
    let mut gauss = 0.0;
    let mut abs_k = WGK[10] * fc.abs();
    let mut inner = WGK[10] * ec;
    let mut values = [0.0; RULE_POINTS];
    values[20] = fc;
    for j in 0..10 {
        let dx = half * XGK[j];
        let (f1, e1) = eval(center - dx)?;
        let (f2, e2) = eval(center + dx)?;
        values[2 * j] = f1;
        values[2 * j + 1] = f2;
        kronrod += WGK[j] * (f1 + f2);
        abs_k += WGK[j] * (f1.abs() + f2.abs());
        inner += WGK[j] * (e1 + e2);
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * kronrod;
    let mut asc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        asc += WGK[j] * ((values[2 * j] - mean).abs() + (values[2 * j + 1] - mean).abs());
    }
    let scale = half.abs();
    let result = kronrod * half;
    let res_abs = abs_k * scale;
    let res_asc = asc * scale;
    let mut err = ((kronrod - gauss) * half).abs();
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * (200.0 * err / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    Ok(Segment {
        lo,
        hi,
        value: result,
        error: err,
        inner_error: inner * scale,
    })
}

/// Adaptive integrator configuration: absolute tolerance and evaluation budget.
#[derive(Debug, Clone, Copy)]
pub struct Quadrature {
    pub tol: f64,
    pub budget: usize,
}

impl Quadrature {
    pub fn new(tol: f64) -> Self {
        Quadrature {
            tol,
            budget: DEFAULT_BUDGET,
        }
    }

    pub fn with_budget(mut self, budget: usize) -> Self {
        self.budget = budget;
        self
    }

    /// Integrates over `[points[0], points[last]]`, starting from the given
    /// breakpoints and bisecting the worst segment until the summed error
    /// estimate falls below the tolerance.
    pub fn breakpoints<F, V>(&self, mut f: F, points: &[f64]) -> Result<QuadResult>
    where
        F: FnMut(f64) -> V,
        V: IntegrandValue,
    {
        if !(self.tol > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "tolerance must be positive, got {}",
                self.tol
            )));
        }
        if points.len() < 2 {
            return Err(Error::InvalidArgument(
                "need at least two integration limits".into(),
            ));
        }
        if points.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "integration limits must be finite: {points:?}"
            )));
        }
        if points.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidArgument(format!(
                "integration limits must be nondecreasing: {points:?}"
            )));
        }

        let mut segments = Vec::new();
        let mut evaluations = 0;
        for w in points.windows(2) {
            if w[1] > w[0] {
                segments.push(gauss_kronrod(&mut f, w[0], w[1])?);
                evaluations += RULE_POINTS;
            }
        }
        if segments.is_empty() {
            return Ok(QuadResult::exact(0.0));
        }

        loop {
            let (value, error, inner) = totals(&segments);
            let total_error = error + inner;
            if total_error <= self.tol {
                return Ok(QuadResult {
                    value,
                    error_estimate: total_error,
                    evaluations,
                    converged: true,
                });
            }
            // Bisect the segment with the largest error that can still be split.
            let worst = segments
                .iter()
                .enumerate()
                .filter(|(_, s)| splittable(s))
                .max_by(|a, b| a.1.error.total_cmp(&b.1.error))
                .map(|(i, _)| i);
            let stalled = match worst {
                None => true,
                Some(i) => segments[i].error <= 0.05 * self.tol / segments.len() as f64,
            };
            if stalled || evaluations + 2 * RULE_POINTS > self.budget {
                return Err(Error::NonConvergence {
                    value,
                    error_estimate: total_error,
                    tol: self.tol,
                    evaluations,
                });
            }
            let s = segments.swap_remove(worst.unwrap_or(0));
            let mid = 0.5 * (s.lo + s.hi);
            segments.push(gauss_kronrod(&mut f, s.lo, mid)?);
            segments.push(gauss_kronrod(&mut f, mid, s.hi)?);
            evaluations += 2 * RULE_POINTS;
        }
    }

    pub fn interval<F, V>(&self, f: F, lo: f64, hi: f64) -> Result<QuadResult>
    where
        F: FnMut(f64) -> V,
        V: IntegrandValue,
    {
        if !(lo < hi) {
            return Err(Error::InvalidArgument(format!(
                "integration interval must satisfy lo < hi, got [{lo}, {hi}]"
            )));
        }
        self.breakpoints(f, &[lo, hi])
    }

    /// Integrates over `[lo, ∞)` through the substitution `x = lo + (1 - t) / t`.
    pub fn semi_infinite<F, V>(&self, mut f: F, lo: f64) -> Result<QuadResult>
    where
        F: FnMut(f64) -> V,
        V: IntegrandValue,
    {
        let mapped = move |t: f64| -> Result<(f64, f64)> {
            let x = lo + (1.0 - t) / t;
            if !x.is_finite() {
                return Ok((0.0, 0.0));
            }
            let (v, e) = f(x).into_parts()?;
            let jac = 1.0 / (t * t);
            Ok((v * jac, e * jac))
        };
        self.breakpoints(mapped, &[0.0, 1.0])
    }
}

fn splittable(s: &Segment) -> bool {
    let mid = 0.5 * (s.lo + s.hi);
    let width = s.hi - s.lo;
    mid > s.lo && mid < s.hi && width > 1e3 * f64::EPSILON * s.lo.abs().max(s.hi.abs()).max(1e-300)
}

fn totals(segments: &[Segment]) -> (f64, f64, f64) {
    let mut value = 0.0;
    let mut comp = 0.0;
    let mut error = 0.0;
    let mut inner = 0.0;
    for s in segments {
        // Neumaier summation keeps the total stable across many segments.
        let t = value + s.value;
        if value.abs() >= s.value.abs() {
            comp += (value - t) + s.value;
        } else {
            comp += (s.value - t) + value;
        }
        value = t;
        error += s.error;
        inner += s.inner_error;
    }
    (value + comp, error, inner)
}

/// `∫_lo^hi f` to absolute tolerance `tol`.
pub fn integrate_interval<F, V>(f: F, lo: f64, hi: f64, tol: f64) -> Result<QuadResult>
where
    F: FnMut(f64) -> V,
    V: IntegrandValue,
{
    Quadrature::new(tol).interval(f, lo, hi)
}

/// `∫_lo^∞ f` to absolute tolerance `tol`.
pub fn integrate_semi_infinite<F, V>(f: F, lo: f64, tol: f64) -> Result<QuadResult>
where
    F: FnMut(f64) -> V,
    V: IntegrandValue,
{
    Quadrature::new(tol).semi_infinite(f, lo)
}

/// Sums `term(k)` for `k = first, first + 1, ...` until `tail_bound(k)`, a
/// bound on the remainder `Σ_{j ≥ k} |term(j)|`, drops below `tol / 10`.
pub fn sum_series<T, B, V>(first: u64, mut term: T, tail_bound: B, tol: f64) -> Result<QuadResult>
where
    T: FnMut(u64) -> V,
    B: Fn(u64) -> f64,
    V: IntegrandValue,
{
    let mut sum = 0.0;
    let mut comp = 0.0;
    let mut inner = 0.0;
    let mut k = first;
    let max_terms = DEFAULT_BUDGET as u64;
    loop {
        let (t, e) = term(k).into_parts()?;
        if !t.is_finite() {
            return Err(Error::Divergent(format!("series term {k} is not finite")));
        }
        let s = sum + t;
        if sum.abs() >= t.abs() {
            comp += (sum - s) + t;
        } else {
            comp += (t - s) + sum;
        }
        sum = s;
        inner += e.abs();
        k += 1;
        let tail = tail_bound(k);
        if tail < tol / 10.0 {
            let error_estimate = tail + inner;
            return Ok(QuadResult {
                value: sum + comp,
                error_estimate,
                evaluations: (k - first) as usize,
                converged: error_estimate <= tol,
            });
        }
        if k - first >= max_terms {
            return Err(Error::NonConvergence {
                value: sum + comp,
                error_estimate: tail + inner,
                tol,
                evaluations: (k - first) as usize,
            });
        }
    }
}

/// Breakpoints `lo, lo + w/2^(n-1), ..., lo + w/2, hi` that resolve the
/// small-SNR end of an SNR-axis integral.
fn log_spaced_grid(lo: f64, hi: f64, levels: u32) -> Vec<f64> {
    let width = hi - lo;
    let mut pts = vec![lo];
    for j in (0..levels).rev() {
        pts.push(lo + width / f64::from(1u32 << j) / 2.0);
    }
    pts.push(hi);
    pts.dedup();
    pts
}

/// SNR-axis integral `∫_lo^hi h(α) dα`, composite adaptive rule on a
/// log-spaced initial grid. The integrand may return nested numerical
/// results whose errors are propagated.
pub fn integrate_snr<F, V>(h: F, lo: f64, hi: f64, tol: f64) -> Result<QuadResult>
where
    F: FnMut(f64) -> V,
    V: IntegrandValue,
{
    if hi == lo {
        return Ok(QuadResult::exact(0.0));
    }
    if !(lo < hi) || lo < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "SNR interval must satisfy 0 <= lo < hi, got [{lo}, {hi}]"
        )));
    }
    Quadrature::new(tol).breakpoints(h, &log_spaced_grid(lo, hi, 3))
}

/// Where [`integrate_snr_to_infinity`] first truncates the SNR axis.
pub const SNR_START: f64 = 16.0;
/// Largest truncation point tried before declaring the integral divergent.
pub const SNR_LIMIT: f64 = 16384.0;
const TAIL_SAMPLES: usize = 9;

/// `∫₀^∞ h(α) dα` with an exponential tail model.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct ImproperIntegral {
    /// Total including the extrapolated tail; the error estimate includes
    /// the fit uncertainty.
    pub result: QuadResult,
    /// Upper limit of the quadrature part.
    pub gamma_max: f64,
    /// `∫_{γ_max}^∞ c e^{-ρα} dα` from the fit.
    pub tail: f64,
    /// Fitted decay rate `ρ`.
    pub decay_rate: f64,
}

/// Improper SNR integral. `h(α, inner_tol)` receives the absolute accuracy
/// it should evaluate to, sized so that its errors integrated over the
/// current piece stay within that piece's share of `tol`. The axis is truncated at `γ_max`, starting from
/// [`SNR_START`] and doubling; each time, `c e^{-ρα}` is fitted by least
/// squares to `ln h` sampled on `[γ_max/2, γ_max]`. Stops once the fitted
/// tail is below `tol / 4`. An integrand that has not started to decay by
/// [`SNR_LIMIT`] (or is flat over a window past 256) is reported as
/// [`Error::Divergent`].
pub fn integrate_snr_to_infinity<F, V>(mut h: F, tol: f64) -> Result<ImproperIntegral>
where
    F: FnMut(f64, f64) -> V,
    V: IntegrandValue,
{
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    let mut gamma_max = SNR_START;
    let first_tol = tol / 4.0;
    let mut total = integrate_snr(|a: f64| h(a, first_tol / (4.0 * gamma_max)), 0.0, gamma_max, first_tol)?;
    let mut piece_tol = tol / 8.0;
    loop {
        let mut xs = Vec::with_capacity(TAIL_SAMPLES);
        let mut ys = Vec::with_capacity(TAIL_SAMPLES);
        let mut largest: f64 = 0.0;
        for j in 0..TAIL_SAMPLES {
            let b = 0.5 * gamma_max * (1.0 + j as f64 / (TAIL_SAMPLES - 1) as f64);
            let (v, _) = h(b, tol * 1e-3 / gamma_max).into_parts()?;
            largest = largest.max(v.abs());
            if v > 0.0 {
                xs.push(b);
                ys.push(v.ln());
            }
        }
        total.evaluations += TAIL_SAMPLES;
        // negligible integrand: nothing left to extrapolate
        if largest * gamma_max <= tol * 1e-3 {
            return Ok(ImproperIntegral {
                result: QuadResult {
                    error_estimate: total.error_estimate + largest * gamma_max,
                    ..total
                },
                gamma_max,
                tail: 0.0,
                decay_rate: f64::INFINITY,
            });
        }
        if xs.len() >= 3 {
            let (ln_c, rho, rms) = fit_exponential(&xs, &ys);
            if rho > 0.0 {
                let tail = (ln_c - rho * gamma_max).exp() / rho;
                if tail.is_finite() && tail <= tol / 4.0 {
                    let tail_err = tail * (0.5 + rms);
                    let result = QuadResult {
                        value: total.value + tail,
                        error_estimate: total.error_estimate + tail_err,
                        converged: total.converged && total.error_estimate + tail_err <= tol,
                        ..total
                    };
                    return Ok(ImproperIntegral {
                        result,
                        gamma_max,
                        tail,
                        decay_rate: rho,
                    });
                }
            }
            let flat = rho * 0.5 * gamma_max < 0.05;
            if flat && gamma_max >= 256.0 {
                return Err(Error::Divergent(format!(
                    "integrand does not decay: fitted rate {rho:e} over [{}, {gamma_max}]",
                    0.5 * gamma_max
                )));
            }
        }
        if gamma_max >= SNR_LIMIT {
            return Err(Error::Divergent(format!(
                "integrand has not decayed below tolerance by gamma = {gamma_max}"
            )));
        }
        let next = 2.0 * gamma_max;
        let inner = piece_tol / (4.0 * gamma_max);
        total = total.add(integrate_snr(|a: f64| h(a, inner), gamma_max, next, piece_tol)?);
        piece_tol *= 0.5;
        gamma_max = next;
    }
}

/// Least-squares fit of `y = ln c - ρ x`; returns `(ln c, ρ, rms residual)`.
fn fit_exponential(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    (intercept, -slope, (rss / n).sqrt())
}
