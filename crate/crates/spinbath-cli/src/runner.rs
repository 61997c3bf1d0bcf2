//! Scenario execution: propagate, measure, write CSV series and a JSON
//! summary.
//!
//! Every emitted reduced density matrix passes the full validity checks
//! (Hermiticity, unit trace, positive semidefiniteness); a violation aborts
//! the run with a diagnostic. All numeric output is deterministic under
//! fixed seeds, including across thread counts.

use anyhow::{anyhow, bail, Context, Result};
use serde::Serialize;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use spinbath::dense::{pauli_matrix, CMatrix};
use spinbath::hilbert::{Pauli, StateVector};
use spinbath::models::{compile, suggested_dt, CompiledModel, ModelSpec};
use spinbath::observables::{
    quadratic_entropy, reduced_density_matrix, to_coupled_basis, total_z_magnetization,
    TimeSeries,
};
use spinbath::propagators::{
    evolve_polynomial_sampled, Method, PropagatorConfig, StaticIsingPropagator,
};
use spinbath::theory::{
    bath_dispersion, envelope_dynamic, envelope_heisenberg, envelope_static, extract_envelope,
    sigma_z_analytic, TheoryParams,
};

use crate::config::{load_scenarios, Initial, Observable, Scenario};
use crate::csvio::CsvTable;

#[derive(Debug, Serialize)]
pub struct RunSummary {
    pub scenario: String,
    pub jobs: Vec<JobSummary>,
}

#[derive(Debug, Serialize)]
pub struct JobSummary {
    pub prefix: String,
    pub family: String,
    pub method: String,
    pub bath_seed: u64,
    pub n_samples: usize,
    pub dt: f64,
    pub t_max: f64,
    pub theory: TheorySummary,
    pub wall_time_s: f64,
    pub files: BTreeMap<String, String>,
    pub metrics: Metrics,
}

#[derive(Debug, Serialize)]
pub struct TheorySummary {
    pub b2: f64,
    pub tau1: Option<f64>,
    pub tau2: Option<f64>,
}

#[derive(Debug, Default, Serialize)]
pub struct Metrics {
    /// Largest change of the state norm between consecutive samples.
    pub max_norm_drift_per_call: f64,
    /// Largest deviation of the state norm from one over the whole run.
    pub max_norm_deviation: f64,
    /// Relative drift of <sigma_x> (single-spin families).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma_x_drift: Option<f64>,
    /// Largest drift of any bath <sigma_k^z> (static-Ising family).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bath_z_drift: Option<f64>,
    /// Drift of the total z magnetization (two-spin family).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub total_z_drift: Option<f64>,
    /// Extracted envelope vs the family's closed-form law.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub envelope_deviation: Option<f64>,
    /// Mean quadratic entropy over the final fifth of the run.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub entropy_plateau: Option<f64>,
    /// Envelope amplitude (relative to the initial amplitude) at the first
    /// time the entropy reaches 98% of its plateau.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residual_amplitude_fraction: Option<f64>,
}

/// Run every job of a scenario file and write its outputs under `out_dir`.
pub fn run_scenario_file(
    config: &Path,
    out_dir: &Path,
    seed_override: Option<u64>,
) -> Result<RunSummary> {
    let scenarios = load_scenarios(config, seed_override)?;
    let summary = run_scenarios(&scenarios, out_dir)?;
    let name = scenarios
        .first()
        .map(|s| base_prefix(&s.prefix))
        .unwrap_or_else(|| "scenario".to_string());
    let path = out_dir.join(format!("{name}_summary.json"));
    std::fs::write(&path, serde_json::to_vec_pretty(&summary)?)
        .with_context(|| format!("cannot write {path:?}"))?;
    Ok(summary)
}

fn base_prefix(prefix: &str) -> String {
    match prefix.find("_hx") {
        Some(idx) => prefix[..idx].to_string(),
        None => prefix.to_string(),
    }
}

/// Run jobs (concurrently when more than one) and collect their summaries.
pub fn run_scenarios(scenarios: &[Scenario], out_dir: &Path) -> Result<RunSummary> {
    let jobs: Vec<Result<JobSummary>> = run_jobs(scenarios, out_dir);
    let mut collected = Vec::new();
    for j in jobs {
        collected.push(j?);
    }
    Ok(RunSummary {
        scenario: scenarios
            .first()
            .map(|s| base_prefix(&s.prefix))
            .unwrap_or_default(),
        jobs: collected,
    })
}

#[cfg(feature = "parallel")]
fn run_jobs(scenarios: &[Scenario], out_dir: &Path) -> Vec<Result<JobSummary>> {
    use rayon::prelude::*;
    scenarios
        .par_iter()
        .map(|s| run_job(s, out_dir))
        .collect()
}

#[cfg(not(feature = "parallel"))]
fn run_jobs(scenarios: &[Scenario], out_dir: &Path) -> Vec<Result<JobSummary>> {
    scenarios.iter().map(|s| run_job(s, out_dir)).collect()
}

/// Per-sample measurement context.
struct Measurer {
    observables: Vec<Observable>,
    n_central: usize,
    sigma1z: CMatrix,
    sigma2z: CMatrix,
    corr: [CMatrix; 3],
    bath_stride: usize,
    n_bath: usize,
}

struct SampleRow {
    values: Vec<f64>,
    norm: f64,
    bloch_x: Option<f64>,
    total_z: Option<f64>,
    bath_z: Option<Vec<f64>>,
}

impl Measurer {
    fn new(scenario: &Scenario, n_samples: usize) -> Self {
        let id2 = CMatrix::identity(2);
        let m = |p: Pauli| pauli_matrix(p);
        Self {
            observables: scenario.observables.clone(),
            n_central: scenario.model.n_central(),
            sigma1z: id2.kron(&m(Pauli::Z)),
            sigma2z: m(Pauli::Z).kron(&id2),
            corr: [
                m(Pauli::X).kron(&m(Pauli::X)),
                m(Pauli::Y).kron(&m(Pauli::Y)),
                m(Pauli::Z).kron(&m(Pauli::Z)),
            ],
            bath_stride: (n_samples / 128).max(1),
            n_bath: scenario.model.n_bath(),
        }
    }

    /// Number of output columns past the time column.
    fn width(&self) -> usize {
        self.observables
            .iter()
            .map(|o| if *o == Observable::RhoCoupled { 6 } else { 1 })
            .sum()
    }

    fn measure(&self, j: usize, state: &StateVector, watch_conservation: bool) -> Result<SampleRow> {
        let rho = reduced_density_matrix(state)
            .map_err(|e| anyhow!("density matrix invariant violated at sample {j}: {e}"))?;
        let mut values = Vec::with_capacity(self.width());
        let mut bloch_x = None;
        if self.n_central == 1 {
            let b = spinbath::observables::bloch_vector(&rho)
                .map_err(|e| anyhow!("sample {j}: {e}"))?;
            bloch_x = Some(b[0]);
            for obs in &self.observables {
                match obs {
                    Observable::SigmaX => values.push(b[0]),
                    Observable::SigmaY => values.push(b[1]),
                    Observable::SigmaZ => values.push(b[2]),
                    Observable::Entropy => values.push(quadratic_entropy(&rho)),
                    other => bail!("observable {} with one central spin", other.name()),
                }
            }
        } else {
            let coupled = if self
                .observables
                .iter()
                .any(|o| *o == Observable::RhoCoupled)
            {
                Some(to_coupled_basis(&rho).map_err(|e| anyhow!("sample {j}: {e}"))?)
            } else {
                None
            };
            for obs in &self.observables {
                match obs {
                    Observable::Sigma1Z => values.push(rho.expectation(&self.sigma1z).re),
                    Observable::Sigma2Z => values.push(rho.expectation(&self.sigma2z).re),
                    Observable::Entropy => values.push(quadratic_entropy(&rho)),
                    Observable::CorrXX => values.push(rho.expectation(&self.corr[0]).re),
                    Observable::CorrYY => values.push(rho.expectation(&self.corr[1]).re),
                    Observable::CorrZZ => values.push(rho.expectation(&self.corr[2]).re),
                    Observable::RhoCoupled => {
                        let c = coupled.as_ref().unwrap();
                        values.push(c.entries()[0].re); // singlet weight
                        values.push(c.entries()[5].re); // |1,-1>
                        values.push(c.entries()[10].re); // |1,0>
                        values.push(c.entries()[15].re); // |1,+1>
                        values.push(c.entries()[2].norm()); // <s0|rho|1,0>
                        let mut other = 0.0f64;
                        for a in 0..4 {
                            for b in (a + 1)..4 {
                                if (a, b) == (0, 2) {
                                    continue;
                                }
                                other = other.max(c.entries()[a * 4 + b].norm());
                            }
                        }
                        values.push(other);
                    }
                    other => bail!("observable {} with two central spins", other.name()),
                }
            }
        }
        let total_z = if watch_conservation && self.n_central == 2 {
            Some(total_z_magnetization(state))
        } else {
            None
        };
        let bath_z = if watch_conservation && j % self.bath_stride == 0 {
            let mut vs = Vec::with_capacity(self.n_bath);
            for k in 0..self.n_bath {
                vs.push(
                    spinbath::observables::bath_spin_z(state, k)
                        .map_err(|e| anyhow!("sample {j}: {e}"))?,
                );
            }
            Some(vs)
        } else {
            None
        };
        Ok(SampleRow { values, norm: state.norm(), bloch_x, total_z, bath_z })
    }
}

fn build_initial_state(scenario: &Scenario) -> Result<StateVector> {
    let central = match &scenario.initial {
        Initial::Bloch(r) => StateVector::from_bloch(*r)?,
        Initial::Label(bits) => StateVector::basis_state(2, 0, bits)?,
    };
    Ok(StateVector::random_bath_product(
        &central,
        scenario.model.n_bath(),
        scenario.bath_seed,
    )?)
}

fn run_job(scenario: &Scenario, out_dir: &Path) -> Result<JobSummary> {
    let start = Instant::now();
    let model = compile(&scenario.model)?;
    let s0 = build_initial_state(scenario)?;

    let dt_rule = suggested_dt(&model);
    let n_samples = scenario
        .n_samples
        .unwrap_or_else(|| (scenario.t_max / dt_rule).ceil() as usize + 1)
        .max(2);
    let dt = scenario.t_max / (n_samples - 1) as f64;

    let measurer = Measurer::new(scenario, n_samples);
    let watch = true;
    let method = match &scenario.model {
        ModelSpec::StaticIsing { .. } => Method::ExactStaticIsing,
        _ => Method::Polynomial,
    };

    let rows: Vec<SampleRow> = match method {
        Method::ExactStaticIsing => {
            let propagator = StaticIsingPropagator::new(&scenario.model)?;
            static_rows(&propagator, &s0, dt, n_samples, &measurer, watch)?
        }
        _ => {
            let cfg = PropagatorConfig { tolerance: scenario.tolerance, dt };
            let mut rows: Vec<SampleRow> = Vec::with_capacity(n_samples);
            evolve_polynomial_sampled(&model, &s0, n_samples - 1, &cfg, |j, state| {
                let row = measurer
                    .measure(j, state, watch)
                    .map_err(|e| spinbath::Error::InvalidArgument(format!("{e:#}")))?;
                rows.push(row);
                Ok(())
            })?;
            rows
        }
    };

    // assemble outputs
    let b2 = bath_dispersion(scenario.model.couplings()).unwrap_or(0.0);
    let theory_params = match &scenario.model {
        ModelSpec::StaticIsing { delta, .. }
        | ModelSpec::TransverseBath { delta, .. }
        | ModelSpec::BathExchange { delta, .. } => {
            if b2 > 0.0 {
                Some(TheoryParams::new(*delta, b2)?)
            } else {
                None
            }
        }
        ModelSpec::TwoSpinHeisenberg { .. } => None,
    };
    let tau2 = match &scenario.model {
        ModelSpec::TransverseBath { hx, .. } if *hx > 0.0 => Some(1.0 / hx),
        _ => None,
    };

    let times: Vec<f64> = (0..n_samples).map(|j| j as f64 * dt).collect();
    let mut files = BTreeMap::new();
    let mut col = 0usize;
    for obs in &scenario.observables {
        let width = if *obs == Observable::RhoCoupled { 6 } else { 1 };
        let path = out_dir.join(format!("{}_{}.csv", scenario.prefix, obs.name()));
        let mut table = make_table(scenario, obs, n_samples, dt, &model);
        for (j, row) in rows.iter().enumerate() {
            let mut out = Vec::with_capacity(1 + width + 2);
            out.push(times[j]);
            out.extend_from_slice(&row.values[col..col + width]);
            if scenario.theory_overlay {
                push_theory_columns(scenario, obs, &theory_params, times[j], &rows, col, &mut out);
            }
            table.push_row(out);
        }
        table.write_to(&path)?;
        files.insert(obs.name().to_string(), path.to_string_lossy().into_owned());
        col += width;
    }

    let metrics = compute_metrics(scenario, &measurer, &rows, &times, &theory_params, b2)?;

    Ok(JobSummary {
        prefix: scenario.prefix.clone(),
        family: scenario.model.family_name().to_string(),
        method: method.to_string(),
        bath_seed: scenario.bath_seed,
        n_samples,
        dt,
        t_max: scenario.t_max,
        theory: TheorySummary {
            b2,
            tau1: theory_params.map(|p| p.tau1),
            tau2,
        },
        wall_time_s: start.elapsed().as_secs_f64(),
        files,
        metrics,
    })
}

#[cfg(feature = "parallel")]
fn static_rows(
    propagator: &StaticIsingPropagator,
    s0: &StateVector,
    dt: f64,
    n_samples: usize,
    measurer: &Measurer,
    watch: bool,
) -> Result<Vec<SampleRow>> {
    use rayon::prelude::*;
    (0..n_samples)
        .into_par_iter()
        .map(|j| -> Result<SampleRow> {
            let state = propagator.evolve(s0, j as f64 * dt)?;
            measurer.measure(j, &state, watch)
        })
        .collect()
}

#[cfg(not(feature = "parallel"))]
fn static_rows(
    propagator: &StaticIsingPropagator,
    s0: &StateVector,
    dt: f64,
    n_samples: usize,
    measurer: &Measurer,
    watch: bool,
) -> Result<Vec<SampleRow>> {
    (0..n_samples)
        .map(|j| -> Result<SampleRow> {
            let state = propagator.evolve(s0, j as f64 * dt)?;
            measurer.measure(j, &state, watch)
        })
        .collect()
}

fn make_table(
    scenario: &Scenario,
    obs: &Observable,
    n_samples: usize,
    dt: f64,
    model: &CompiledModel,
) -> CsvTable {
    let mut columns = vec!["time".to_string()];
    if *obs == Observable::RhoCoupled {
        for c in ["p_singlet", "p_t_minus", "p_t_zero", "p_t_plus", "st0_abs", "offdiag_other"] {
            columns.push(c.to_string());
        }
    } else {
        columns.push(obs.name().to_string());
    }
    if scenario.theory_overlay {
        match (&scenario.model, obs) {
            (ModelSpec::StaticIsing { .. }, Observable::SigmaZ) => {
                columns.push("theory_envelope".into());
                columns.push("theory_sigma_z".into());
            }
            (ModelSpec::TransverseBath { .. }, Observable::SigmaZ) => {
                columns.push("theory_envelope".into());
            }
            (ModelSpec::TwoSpinHeisenberg { .. }, Observable::Sigma1Z) => {
                columns.push("theory_envelope".into());
            }
            _ => {}
        }
    }
    let mut t = CsvTable::new(columns);
    t.comment(format!("scenario: {}", scenario.prefix));
    t.comment(format!("family: {}", scenario.model.family_name()));
    t.comment(format!("model: {:?}", scenario.model));
    t.comment(format!("initial: {:?}", scenario.initial));
    t.comment(format!("bath_seed: {}", scenario.bath_seed));
    t.comment(format!(
        "t_max: {} n_samples: {} dt: {:.16e}",
        scenario.t_max, n_samples, dt
    ));
    t.comment(format!("tolerance: {:.3e}", scenario.tolerance));
    t.comment(format!(
        "spectral_bound: {:.16e} identity_shift: {:.16e}",
        model.spectral_bound(),
        model.identity_shift()
    ));
    t
}

fn push_theory_columns(
    scenario: &Scenario,
    obs: &Observable,
    params: &Option<TheoryParams>,
    t: f64,
    rows: &[SampleRow],
    col: usize,
    out: &mut Vec<f64>,
) {
    let sigma0 = rows[0].values[col];
    match (&scenario.model, obs) {
        (ModelSpec::StaticIsing { .. }, Observable::SigmaZ) => {
            if let Some(p) = params {
                out.push(envelope_static(t, p, sigma0));
                out.push(sigma_z_analytic(t, p, sigma0));
            }
        }
        (ModelSpec::TransverseBath { .. }, Observable::SigmaZ) => {
            if let Some(p) = params {
                out.push(envelope_dynamic(t, p, sigma0));
            }
        }
        (ModelSpec::TwoSpinHeisenberg { couplings, .. }, Observable::Sigma1Z) => {
            let b2: f64 = couplings.iter().map(|j| j * j).sum();
            out.push(sigma0 * envelope_heisenberg(t, b2));
        }
        _ => {}
    }
}

fn compute_metrics(
    scenario: &Scenario,
    measurer: &Measurer,
    rows: &[SampleRow],
    times: &[f64],
    theory_params: &Option<TheoryParams>,
    b2: f64,
) -> Result<Metrics> {
    let mut m = Metrics::default();
    for w in rows.windows(2) {
        m.max_norm_drift_per_call = m.max_norm_drift_per_call.max((w[1].norm - w[0].norm).abs());
    }
    for r in rows {
        m.max_norm_deviation = m.max_norm_deviation.max((r.norm - 1.0).abs());
    }
    if measurer.n_central == 1 {
        let x0 = rows[0].bloch_x.unwrap_or(0.0);
        if x0.abs() > 1e-12 {
            let drift = rows
                .iter()
                .filter_map(|r| r.bloch_x)
                .fold(0.0f64, |acc, x| acc.max((x - x0).abs()));
            m.sigma_x_drift = Some(drift / x0.abs());
        }
    }
    if matches!(scenario.model, ModelSpec::StaticIsing { .. }) {
        let reference = rows[0].bath_z.as_ref();
        if let Some(reference) = reference {
            let mut worst = 0.0f64;
            for r in rows.iter().filter_map(|r| r.bath_z.as_ref()) {
                for (a, b) in r.iter().zip(reference.iter()) {
                    worst = worst.max((a - b).abs());
                }
            }
            m.bath_z_drift = Some(worst);
        }
    }
    if measurer.n_central == 2 {
        let z0 = rows[0].total_z;
        if let Some(z0) = z0 {
            let drift = rows
                .iter()
                .filter_map(|r| r.total_z)
                .fold(0.0f64, |acc, z| acc.max((z - z0).abs()));
            m.total_z_drift = Some(drift);
        }
    }

    // entropy plateau and residual oscillation amplitude
    let entropy_col = column_offset(measurer, Observable::Entropy);
    let signal_obs = if measurer.n_central == 1 {
        Observable::SigmaZ
    } else {
        Observable::Sigma1Z
    };
    let signal_col = column_offset(measurer, signal_obs);
    if let (Some(se), Some(sc)) = (entropy_col, signal_col) {
        let n = rows.len();
        let tail = (n as f64 * 0.8) as usize;
        let plateau =
            rows[tail..].iter().map(|r| r.values[se]).sum::<f64>() / (n - tail) as f64;
        m.entropy_plateau = Some(plateau);
        let crossing = rows
            .iter()
            .position(|r| r.values[se] >= 0.98 * plateau)
            .unwrap_or(n - 1);
        let series = TimeSeries::new(
            times.to_vec(),
            rows.iter().map(|r| r.values[sc]).collect(),
            signal_obs.name(),
        )?;
        if let Ok(envelope) = extract_envelope(&series) {
            let t_cross = times[crossing];
            let sigma0 = rows[0].values[sc];
            if sigma0.abs() > 1e-12 {
                let at_cross = envelope
                    .times()
                    .iter()
                    .zip(envelope.values())
                    .find(|(t, _)| **t >= t_cross)
                    .map(|(_, v)| *v)
                    .unwrap_or(*envelope.values().last().unwrap());
                m.residual_amplitude_fraction = Some(at_cross / sigma0.abs());
            }
            // envelope deviation vs the family law
            let sigma0_abs = sigma0.abs();
            let law = |t: f64| -> Option<f64> {
                match &scenario.model {
                    ModelSpec::StaticIsing { .. } => {
                        theory_params.map(|p| envelope_static(t, &p, sigma0_abs))
                    }
                    ModelSpec::TransverseBath { .. } => {
                        theory_params.map(|p| envelope_dynamic(t, &p, sigma0_abs))
                    }
                    ModelSpec::TwoSpinHeisenberg { .. } => {
                        Some(sigma0_abs * envelope_heisenberg(t, b2))
                    }
                    ModelSpec::BathExchange { .. } => None,
                }
            };
            // deviation on the scale of the plotted signal; a single bath
            // realization carries ~2^(-N/2) noise, which a decaying local
            // denominator would amplify without bound
            let mut worst = 0.0f64;
            let mut any = false;
            for (&t, &v) in envelope.times().iter().zip(envelope.values()) {
                if let Some(l) = law(t) {
                    any = true;
                    worst = worst.max((v - l).abs() / sigma0_abs);
                }
            }
            if any {
                m.envelope_deviation = Some(worst);
            }
        }
    }
    Ok(m)
}

fn column_offset(measurer: &Measurer, target: Observable) -> Option<usize> {
    let mut col = 0usize;
    for obs in &measurer.observables {
        if *obs == target {
            return Some(col);
        }
        col += if *obs == Observable::RhoCoupled { 6 } else { 1 };
    }
    None
}

/// Convenience used by tests: run a scenario file and return the summary
/// without printing.
pub fn run_file(config: &Path, out_dir: &Path) -> Result<RunSummary> {
    run_scenario_file(config, out_dir, None)
}

/// Output path of one observable CSV for a given scenario prefix.
pub fn csv_path(out_dir: &Path, prefix: &str, observable: &str) -> PathBuf {
    out_dir.join(format!("{prefix}_{observable}.csv"))
}
