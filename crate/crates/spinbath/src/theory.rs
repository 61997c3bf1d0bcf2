//! Closed-form and semi-analytical oracles for the central-spin dynamics:
//! bath dispersion, the three envelope laws, the Gaussian average of the
//! oscillating observable, the long-time effective single-spin dynamics with
//! Gaussian random fields, and envelope extraction from sampled series.
//!
//! Envelope sign convention: the printed laws decay with time, so the
//! exponents are negative, `[1 + (2t/tau1)^2]^(-1/4)` and
//! `[1 + (b^2 t / delta)^2]^(-1/2)`; both follow from carrying out the
//! Gaussian averages analytically.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::exec;
use crate::observables::TimeSeries;
use crate::quadrature::GaussHermite;

/// Derived analytic quantities feeding the envelope laws.
#[derive(Clone, Copy, Debug)]
pub struct TheoryParams {
    /// Variance of the collective bath field: `b^2 = sum_k J_k^2`.
    pub b2: f64,
    /// Central field energy.
    pub delta: f64,
    /// Crossover time of the static-bath envelope: `tau1 = delta / b^2`.
    pub tau1: f64,
    /// Bath timescale `tau2 = 1 / h_x` when a transverse bath field exists.
    pub tau2: Option<f64>,
}

impl TheoryParams {
    pub fn new(delta: f64, b2: f64) -> Result<Self> {
        if !(b2 > 0.0) {
            return Err(Error::InvalidArgument("b2 must be > 0".into()));
        }
        Ok(Self { b2, delta, tau1: delta / b2, tau2: None })
    }

    pub fn with_bath_field(mut self, hx: f64) -> Self {
        self.tau2 = if hx > 0.0 { Some(1.0 / hx) } else { None };
        self
    }
}

/// The three closed-form envelope laws.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EnvelopeLaw {
    /// Static bath: quartic-root power law.
    StaticQuarter,
    /// Dynamic (slow) bath: square-root power law ending in `1/t`.
    DynamicHalf,
    /// Two-spin mean field: Gaussian decay to the plateau 1/3.
    HeisenbergMF,
}

impl EnvelopeLaw {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "static-quarter" => Ok(Self::StaticQuarter),
            "dynamic-half" => Ok(Self::DynamicHalf),
            "heisenberg-mf" => Ok(Self::HeisenbergMF),
            other => Err(Error::InvalidArgument(format!(
                "unknown envelope law `{other}` \
                 (expected static-quarter, dynamic-half or heisenberg-mf)"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::StaticQuarter => "static-quarter",
            Self::DynamicHalf => "dynamic-half",
            Self::HeisenbergMF => "heisenberg-mf",
        }
    }
}

/// An envelope law bound to its parameters and initial amplitude.
#[derive(Clone, Copy, Debug)]
pub struct Envelope {
    pub law: EnvelopeLaw,
    pub params: TheoryParams,
    pub sigma0: f64,
}

impl Envelope {
    pub fn eval(&self, t: f64) -> f64 {
        match self.law {
            EnvelopeLaw::StaticQuarter => envelope_static(t, &self.params, self.sigma0),
            EnvelopeLaw::DynamicHalf => envelope_dynamic(t, &self.params, self.sigma0),
            EnvelopeLaw::HeisenbergMF => self.sigma0 * envelope_heisenberg(t, self.params.b2),
        }
    }
}

/// `b^2 = sum_k J_k^2`, the variance of the collective bath field over a
/// random bath state.
pub fn bath_dispersion(couplings: &[f64]) -> Result<f64> {
    if couplings.is_empty() {
        return Err(Error::InvalidArgument(
            "bath dispersion of an empty coupling list".into(),
        ));
    }
    Ok(couplings.iter().map(|j| j * j).sum())
}

/// Static-bath envelope `sigma0 * [1 + (2t/tau1)^2]^(-1/4)`: Gaussian at
/// short times, `1/sqrt(2t/tau1)` at long times.
pub fn envelope_static(t: f64, p: &TheoryParams, sigma0: f64) -> f64 {
    let u = 2.0 * t / p.tau1;
    sigma0 * (1.0 + u * u).powf(-0.25)
}

/// Dynamic-bath envelope `sigma0 * [1 + (b^2 t / delta)^2]^(-1/2)`: the
/// oscillations decay as `1/t` once the bath field fluctuates.
pub fn envelope_dynamic(t: f64, p: &TheoryParams, sigma0: f64) -> f64 {
    let u = p.b2 * t / p.delta;
    sigma0 * (1.0 + u * u).powf(-0.5)
}

/// Two-spin mean-field envelope `(1/3) [1 - 2 (b^2 t^2 - 1) exp(-b^2 t^2 / 2)]`:
/// Gaussian decay through a minimum, then a plateau at 1/3 instead of zero.
pub fn envelope_heisenberg(t: f64, b2: f64) -> f64 {
    let u = b2 * t * t;
    (1.0 - 2.0 * (u - 1.0) * (-0.5 * u).exp()) / 3.0
}

/// Expected oscillating signal of the static-bath model, evaluated both by
/// the analytic Gaussian integral
/// `sigma0 * Re[ exp(-2 i delta t) (1 + 2 i b^2 t / delta)^(-1/2) ]`
/// and by Gauss-Hermite quadrature over the collective field; the two must
/// agree within 1e-9 on every call. Valid in the fast-precession regime
/// `delta >> b` (documented, not enforced).
pub fn sigma_z_closed_form(t: f64, p: &TheoryParams, sigma0: f64) -> Result<f64> {
    if t < 0.0 {
        return Err(Error::InvalidArgument("t must be >= 0".into()));
    }
    let analytic = sigma_z_analytic(t, p, sigma0);
    let quad = sigma_z_quadrature(t, p, sigma0)?;
    let diff = (analytic - quad).abs();
    if diff > 1e-9 * sigma0.abs().max(1.0) {
        return Err(Error::Convergence(format!(
            "quadrature/closed-form cross-check failed at t={t}: {analytic} vs {quad}"
        )));
    }
    Ok(analytic)
}

/// The analytic branch alone (no quadrature); used for bulk evaluation such
/// as theory overlay columns.
pub fn sigma_z_analytic(t: f64, p: &TheoryParams, sigma0: f64) -> f64 {
    use num_complex::Complex64 as C64;
    let z = C64::new(1.0, 2.0 * p.b2 * t / p.delta);
    let prefactor = z.sqrt().inv();
    let osc = C64::from_polar(1.0, -2.0 * p.delta * t);
    sigma0 * (osc * prefactor).re
}

/// Gauss-Hermite evaluation of the Gaussian average, doubling the node count
/// until two successive estimates differ by less than 1e-10.
fn sigma_z_quadrature(t: f64, p: &TheoryParams, sigma0: f64) -> Result<f64> {
    let b = p.b2.sqrt();
    // substitute B = sqrt(2) b x to absorb the Gaussian weight
    let f = |x: f64| {
        let big_b = std::f64::consts::SQRT_2 * b * x;
        (2.0 * p.delta * t + big_b * big_b * t / p.delta).cos()
    };
    let mut n = 64usize;
    let inv_sqrt_pi = 1.0 / std::f64::consts::PI.sqrt();
    let mut prev = GaussHermite::cached(n)?.integrate(f) * inv_sqrt_pi;
    let cap = 1 << 14;
    while n < cap {
        n *= 2;
        let cur = GaussHermite::cached(n)?.integrate(f) * inv_sqrt_pi;
        if (cur - prev).abs() < 1e-10 {
            return Ok(sigma0 * cur);
        }
        prev = cur;
    }
    Err(Error::Convergence(format!(
        "Gauss-Hermite quadrature did not converge within {cap} nodes at t={t}"
    )))
}

/// Monte-Carlo estimate of the effective long-time single-spin signal: the
/// evolution operator acquires the phase `t*delta + t*(B_y^2+B_z^2)/(4*delta)`
/// about the x axis, with `(B_y, B_z)` i.i.d. Gaussian of variance `b^2`.
/// Deterministic per seed; the sample range is partitioned into fixed blocks
/// so parallel and serial execution agree bit for bit.
pub fn magnus_effective_sigma_z(
    t: f64,
    p: &TheoryParams,
    sigma0: f64,
    n_samples: usize,
    seed: u64,
) -> Result<f64> {
    let (mean, _) = magnus_effective_sigma_z_with_stderr(t, p, sigma0, n_samples, seed)?;
    Ok(mean)
}

/// As [`magnus_effective_sigma_z`], also returning the Monte-Carlo standard
/// error of the estimate.
pub fn magnus_effective_sigma_z_with_stderr(
    t: f64,
    p: &TheoryParams,
    sigma0: f64,
    n_samples: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    if n_samples < 1000 {
        return Err(Error::InvalidArgument(
            "Monte-Carlo estimate needs at least 1000 samples".into(),
        ));
    }
    const BLOCK: usize = 4096;
    let b = p.b2.sqrt();
    let n_blocks = n_samples.div_ceil(BLOCK);
    #[derive(Clone, Copy, Default)]
    struct Moments(f64, f64);
    impl std::ops::AddAssign for Moments {
        fn add_assign(&mut self, rhs: Self) {
            self.0 += rhs.0;
            self.1 += rhs.1;
        }
    }
    let partials: Vec<Moments> = exec::map_indexed(n_blocks, |blk| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(blk as u64 + 1);
        let normal = StandardNormal;
        let lo = blk * BLOCK;
        let hi = (lo + BLOCK).min(n_samples);
        let mut m = Moments::default();
        for _ in lo..hi {
            let by: f64 = normal.sample(&mut rng);
            let bz: f64 = normal.sample(&mut rng);
            let (by, bz) = (b * by, b * bz);
            let phase = t * p.delta + t * (by * by + bz * bz) / (4.0 * p.delta);
            let v = (2.0 * phase).cos();
            m.0 += v;
            m.1 += v * v;
        }
        m
    });
    let mut total = Moments::default();
    for m in partials {
        total += m;
    }
    let n = n_samples as f64;
    let mean = total.0 / n;
    let var = (total.1 / n - mean * mean).max(0.0);
    Ok((sigma0 * mean, sigma0.abs() * (var / n).sqrt()))
}

/// Local maxima of `|values|` with three-point quadratic refinement of both
/// the peak height and its location. Needs at least ten samples per
/// oscillation period to be meaningful, and errors when fewer than three
/// peaks exist.
pub fn extract_envelope(series: &TimeSeries) -> Result<TimeSeries> {
    let times = series.times();
    let values = series.values();
    let n = values.len();
    let mut peak_times = Vec::new();
    let mut peak_values = Vec::new();
    let mut i = 1;
    while i + 1 < n {
        let (ym, y0, yp) = (values[i - 1].abs(), values[i].abs(), values[i + 1].abs());
        if y0 >= ym && y0 > yp {
            let denom = ym - 2.0 * y0 + yp;
            let (dt_peak, height) = if denom < -1e-300 {
                let shift = 0.5 * (ym - yp) / denom;
                let h = y0 - 0.25 * (ym - yp) * shift;
                (shift, h)
            } else {
                (0.0, y0)
            };
            let spacing = 0.5 * (times[i + 1] - times[i - 1]);
            let t_peak = times[i] + dt_peak * spacing;
            if peak_times.last().map_or(true, |&last| t_peak > last) {
                peak_times.push(t_peak);
                peak_values.push(height);
            }
            i += 2;
        } else {
            i += 1;
        }
    }
    if peak_times.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "envelope extraction found only {} peaks (need at least 3)",
            peak_times.len()
        )));
    }
    TimeSeries::new(
        peak_times,
        peak_values,
        format!("{}_envelope", series.label()),
    )
}

/// Linear interpolation of a series at time `t` (clamped to the endpoints).
pub fn interpolate(series: &TimeSeries, t: f64) -> f64 {
    let times = series.times();
    let values = series.values();
    if t <= times[0] {
        return values[0];
    }
    if t >= *times.last().unwrap() {
        return *values.last().unwrap();
    }
    let idx = times.partition_point(|&x| x < t);
    let (t0, t1) = (times[idx - 1], times[idx]);
    let w = (t - t0) / (t1 - t0);
    values[idx - 1] * (1.0 - w) + values[idx] * w
}

/// Least-squares fit of `c/t` to a series over its full range; returns
/// `(c, relative_residual)` with the residual measured as
/// `||c/t - y||_2 / ||y||_2`.
pub fn fit_inverse_time(times: &[f64], values: &[f64]) -> Result<(f64, f64)> {
    if times.len() != values.len() || times.len() < 2 {
        return Err(Error::InvalidArgument(
            "inverse-time fit needs at least two samples".into(),
        ));
    }
    if times.iter().any(|&t| t <= 0.0) {
        return Err(Error::InvalidArgument(
            "inverse-time fit needs strictly positive times".into(),
        ));
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for (&t, &y) in times.iter().zip(values.iter()) {
        num += y / t;
        den += 1.0 / (t * t);
    }
    let c = num / den;
    let mut res = 0.0;
    let mut norm = 0.0;
    for (&t, &y) in times.iter().zip(values.iter()) {
        res += (c / t - y) * (c / t - y);
        norm += y * y;
    }
    Ok((c, (res / norm.max(1e-300)).sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> TheoryParams {
        TheoryParams::new(4.0, 0.073034125).unwrap()
    }

    #[test]
    fn dispersion_basics() {
        assert_eq!(bath_dispersion(&[0.0, 0.0]).unwrap(), 0.0);
        assert_eq!(bath_dispersion(&[0.3]).unwrap(), 0.09);
        assert!(bath_dispersion(&[]).is_err());
        let b2 = bath_dispersion(&crate::models::PAPER_COUPLINGS).unwrap();
        assert!((b2 / 0.0736 - 1.0).abs() < 0.01);
    }

    #[test]
    fn tau1_is_exact_ratio() {
        let p = params();
        assert_eq!(p.tau1, p.delta / p.b2);
    }

    #[test]
    fn envelope_static_limits() {
        let p = params();
        assert_eq!(envelope_static(0.0, &p, 0.894), 0.894);
        // long-time asymptote: sigma0 / sqrt(2t/tau1)
        let t = 400.0 * p.tau1;
        let want = 0.894 / (2.0 * t / p.tau1).sqrt();
        assert!((envelope_static(t, &p, 0.894) / want - 1.0).abs() < 1e-5);
    }

    #[test]
    fn envelope_dynamic_limits() {
        let p = params();
        assert_eq!(envelope_dynamic(0.0, &p, 0.894), 0.894);
        let t = 500.0 * p.delta / p.b2;
        let want = 0.894 * p.delta / (p.b2 * t);
        assert!((envelope_dynamic(t, &p, 0.894) / want - 1.0).abs() < 1e-5);
    }

    #[test]
    fn envelope_laws_strictly_decreasing() {
        let p = params();
        let mut prev_s = f64::INFINITY;
        let mut prev_d = f64::INFINITY;
        for i in 1..2000 {
            let t = i as f64 * 0.7;
            let s = envelope_static(t, &p, 1.0);
            let d = envelope_dynamic(t, &p, 1.0);
            assert!(s < prev_s);
            assert!(d < prev_d);
            prev_s = s;
            prev_d = d;
        }
    }

    #[test]
    fn heisenberg_envelope_shape() {
        let b2 = 0.073034125;
        assert!((envelope_heisenberg(0.0, b2) - 1.0).abs() < 1e-15);
        // limit value 1/3
        assert!((envelope_heisenberg(1e6, b2) - 1.0 / 3.0).abs() < 1e-12);
        // fine-grid scan oracle for the minimum; analytic location is
        // b^2 t^2 = 3
        let mut best_t = 0.0;
        let mut best_v = f64::INFINITY;
        let mut t = 0.0;
        while t < 30.0 {
            let v = envelope_heisenberg(t, b2);
            if v < best_v {
                best_v = v;
                best_t = t;
            }
            t += 1e-4;
        }
        let t_analytic = (3.0 / b2).sqrt();
        let v_analytic = envelope_heisenberg(t_analytic, b2);
        assert!((best_t - t_analytic).abs() < 1e-3);
        assert!((best_v - v_analytic).abs() < 1e-9);
        // value in (0, 1], monotone above the stationary point
        let mut prev = best_v;
        let mut t = t_analytic;
        while t < 80.0 {
            t += 0.05;
            let v = envelope_heisenberg(t, b2);
            assert!(v > 0.0 && v <= 1.0);
            assert!(v >= prev);
            prev = v;
        }
    }

    #[test]
    fn closed_form_free_spin_limit() {
        // b^2 -> 0: undamped precession at 2*delta
        let p = TheoryParams::new(4.0, 1e-12).unwrap();
        for &t in &[0.0, 0.3, 1.7] {
            let v = sigma_z_closed_form(t, &p, 0.9).unwrap();
            assert!((v - 0.9 * (2.0 * 4.0 * t).cos()).abs() < 1e-8);
        }
    }

    #[test]
    fn closed_form_at_zero_time() {
        let p = params();
        assert!((sigma_z_closed_form(0.0, &p, 0.894).unwrap() - 0.894).abs() < 1e-12);
    }

    #[test]
    fn closed_form_bounded_by_static_envelope() {
        let p = params();
        for i in 0..200 {
            let t = i as f64 * 1.1;
            let v = sigma_z_analytic(t, &p, 0.894);
            let env = envelope_static(t, &p, 0.894);
            assert!(v.abs() <= env + 1e-12, "t={t}: |{v}| > {env}");
        }
    }

    #[test]
    fn magnus_trivial_limits() {
        let p = params();
        let v = magnus_effective_sigma_z(0.0, &p, 0.894, 2000, 1).unwrap();
        assert_eq!(v, 0.894);
        let p0 = TheoryParams::new(4.0, 1e-300).unwrap();
        let t = 0.77;
        let v = magnus_effective_sigma_z(t, &p0, 0.894, 2000, 1).unwrap();
        assert!((v - 0.894 * (2.0 * (t * 4.0)).cos()).abs() < 1e-10);
    }

    #[test]
    fn magnus_deterministic_and_thread_invariant() {
        let p = params();
        let a = magnus_effective_sigma_z(12.0, &p, 0.894, 50_000, 7).unwrap();
        let b = magnus_effective_sigma_z(12.0, &p, 0.894, 50_000, 7).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn magnus_rejects_tiny_sample_counts() {
        let p = params();
        assert!(magnus_effective_sigma_z(1.0, &p, 1.0, 10, 1).is_err());
    }

    #[test]
    fn envelope_extraction_of_pure_cosine() {
        // ~100 samples per period keeps the quadratic-refinement bias
        // below 1e-6
        let omega = 3.0;
        let dt = 2.0 * std::f64::consts::PI / omega / 100.0;
        let n = 2000;
        let times: Vec<f64> = (0..n).map(|i| i as f64 * dt).collect();
        let values: Vec<f64> = times.iter().map(|t| 0.7 * (omega * t).cos()).collect();
        let series = TimeSeries::new(times, values, "cos").unwrap();
        let env = extract_envelope(&series).unwrap();
        assert!(env.len() >= 3);
        for &v in env.values() {
            assert!((v - 0.7).abs() < 1e-6 * 0.7, "peak {v}");
        }
    }

    #[test]
    fn envelope_extraction_of_damped_cosine() {
        let dt = 2.0 * std::f64::consts::PI / 20.0 / 40.0;
        let n = 4000;
        let times: Vec<f64> = (0..n).map(|i| i as f64 * dt).collect();
        let values: Vec<f64> = times.iter().map(|t| (-t).exp() * (20.0 * t).cos()).collect();
        let series = TimeSeries::new(times, values, "damped").unwrap();
        let env = extract_envelope(&series).unwrap();
        for (&t, &v) in env.times().iter().zip(env.values()) {
            let want = (-t).exp();
            assert!((v / want - 1.0).abs() < 5e-3, "t={t}: {v} vs {want}");
        }
    }

    #[test]
    fn envelope_extraction_needs_three_peaks() {
        let times: Vec<f64> = (0..50).map(|i| i as f64 * 0.01).collect();
        let values: Vec<f64> = times.iter().map(|t| (1.0 * t).cos()).collect();
        let series = TimeSeries::new(times, values, "short").unwrap();
        assert!(extract_envelope(&series).is_err());
    }

    #[test]
    fn inverse_time_fit_recovers_exact_law() {
        let times: Vec<f64> = (10..200).map(|i| i as f64).collect();
        let values: Vec<f64> = times.iter().map(|t| 3.2 / t).collect();
        let (c, res) = fit_inverse_time(&times, &values).unwrap();
        assert!((c - 3.2).abs() < 1e-12);
        assert!(res < 1e-12);
    }
}
