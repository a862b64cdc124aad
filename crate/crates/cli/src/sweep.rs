//! The `(D, δ, λ)` pattern sweep.

use rayon::prelude::*;
use steklov_patterns::certificate::{aligned_setup, build_w0, check_membership, subdomain_spectra, SubdomainSpectra};
use steklov_patterns::dynamics::{classify, default_dt, settle, stability_spectrum, EvolveOptions};
use steklov_patterns::steklov::steklov_spectrum;
use steklov_patterns::DomainSpec;

use crate::config::{Family, RunConfig, SweepStart};
use crate::output::{fmt_f64, fmt_opt};
use crate::random_field;

pub const SWEEP_HEADER: [&str; 15] = [
    "r",
    "D",
    "delta",
    "lambda",
    "start",
    "mu1",
    "mu1_left",
    "mu1_right",
    "energy_w0",
    "epsilon0",
    "margin",
    "classification",
    "sigma_max",
    "residual",
    "reason",
];

/// One grid point. Missing values are written as `nan` and explained in `reason`.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub r: f64,
    pub diameter: f64,
    pub delta: f64,
    pub lambda: f64,
    /// `w0` or `random:<seed>`.
    pub start: String,
    pub mu1: Option<f64>,
    pub mu1_left: Option<f64>,
    pub mu1_right: Option<f64>,
    pub energy_w0: Option<f64>,
    pub epsilon0: Option<f64>,
    pub margin: Option<f64>,
    pub classification: Option<String>,
    pub sigma_max: Option<f64>,
    /// Stationarity defect of the classified state.
    pub residual: Option<f64>,
    pub reason: String,
}

impl SweepRow {
    pub fn record(&self) -> Vec<String> {
        vec![
            fmt_f64(self.r),
            fmt_f64(self.diameter),
            fmt_f64(self.delta),
            fmt_f64(self.lambda),
            self.start.clone(),
            fmt_opt(self.mu1),
            fmt_opt(self.mu1_left),
            fmt_opt(self.mu1_right),
            fmt_opt(self.energy_w0),
            fmt_opt(self.epsilon0),
            fmt_opt(self.margin),
            self.classification.clone().unwrap_or_else(|| "nan".to_string()),
            fmt_opt(self.sigma_max),
            fmt_opt(self.residual),
            self.reason.clone(),
        ]
    }
}

fn note(reasons: &mut Vec<String>, what: &str, err: impl std::fmt::Display) {
    reasons.push(format!("{what}: {err}"));
}

struct Cell {
    r: f64,
    diameter: f64,
    delta: f64,
}

/// Runs the sweep; rows come back in `(r, D, δ, λ, start)` order whatever
/// the completion order of the workers.
pub fn sweep(config: &RunConfig) -> Vec<SweepRow> {
    let s = &config.sweep;
    let mut cells: Vec<Cell> = Vec::new();
    for &d in &s.diameters {
        let r = match s.family {
            Family::Stadium => s.radius,
            Family::Disk => 0.5 * d,
        };
        for &f in &s.delta_fractions {
            cells.push(Cell { r, diameter: d, delta: f * d });
        }
    }
    let starts: Vec<Option<u64>> = match s.start {
        SweepStart::W0 => vec![None],
        SweepStart::Random { count } => (0..count).map(|i| Some(config.seed.wrapping_add(i))).collect(),
    };
    let mut rows: Vec<SweepRow> = cells.par_iter().flat_map_iter(|cell| run_cell(config, cell, &starts)).collect();
    rows.sort_by(|a, b| {
        a.r.total_cmp(&b.r)
            .then(a.diameter.total_cmp(&b.diameter))
            .then(a.delta.total_cmp(&b.delta))
            .then(a.lambda.total_cmp(&b.lambda))
    });
    rows
}

fn run_cell(config: &RunConfig, cell: &Cell, starts: &[Option<u64>]) -> Vec<SweepRow> {
    let spec = match config.sweep.family {
        Family::Stadium => DomainSpec::stadium(cell.r, cell.diameter),
        Family::Disk => DomainSpec::disk(cell.r),
    };
    let mut base_reasons = Vec::new();
    let setup = match aligned_setup(&spec, cell.delta, config.h) {
        Ok(s) => Some(s),
        Err(e) => {
            note(&mut base_reasons, "mesh", e);
            None
        }
    };
    let mut mu1 = None;
    let mut spectra: Option<SubdomainSpectra<f64>> = None;
    if let Some((polygon, _, ops, _)) = &setup {
        match steklov_spectrum(ops, 2) {
            Ok(sp) => mu1 = Some(sp.mu1()),
            Err(e) => note(&mut base_reasons, "steklov", e),
        }
        match subdomain_spectra(polygon, cell.delta, config.h) {
            Ok(sp) => spectra = Some(sp),
            Err(e) => note(&mut base_reasons, "subdomains", e),
        }
    }
    let w0 = setup.as_ref().map(|(_, mesh, _, _)| build_w0(mesh, cell.delta).into_inner());
    let jobs: Vec<(f64, Option<u64>)> =
        config.sweep.lambdas.iter().flat_map(|&l| starts.iter().map(move |&s| (l, s))).collect();
    jobs.par_iter()
        .map(|&(lambda, seed)| {
            let mut reasons = base_reasons.clone();
            let mut row = SweepRow {
                r: cell.r,
                diameter: cell.diameter,
                delta: cell.delta,
                lambda,
                start: seed.map_or_else(|| "w0".to_string(), |s| format!("random:{s}")),
                mu1,
                mu1_left: spectra.as_ref().map(|s| s.mu_left),
                mu1_right: spectra.as_ref().map(|s| s.mu_right),
                energy_w0: None,
                epsilon0: None,
                margin: None,
                classification: None,
                sigma_max: None,
                residual: None,
                reason: String::new(),
            };
            if let (Some((_, _, ops, labels)), Some(w0)) = (&setup, &w0) {
                match &spectra {
                    Some(sp) => match check_membership(ops, labels, w0, lambda, sp) {
                        Ok(m) => {
                            row.energy_w0 = Some(m.energy);
                            row.epsilon0 = Some(m.epsilon0);
                            row.margin = Some(m.margin);
                        }
                        Err(e) => note(&mut reasons, "membership", e),
                    },
                    None => row.energy_w0 = steklov_patterns::assembly::energy(w0, lambda, ops).ok(),
                }
                let u0 = match seed {
                    None => w0.clone(),
                    Some(s) => random_field(ops.n(), s),
                };
                let opts = EvolveOptions {
                    dt: config.dt.unwrap_or_else(|| default_dt(lambda)),
                    tol: config.tol,
                    max_steps: config.max_steps,
                };
                match settle(&u0, lambda, opts, config.newton_tol, ops) {
                    Ok(eq) => match stability_spectrum(&eq.u, lambda, ops) {
                        Ok(rep) => {
                            row.classification = Some(classify(&rep).to_string());
                            row.sigma_max = Some(rep.sigma_max);
                            row.residual = Some(eq.residual);
                        }
                        Err(e) => note(&mut reasons, "stability", e),
                    },
                    Err(e) => note(&mut reasons, "equilibrium", e),
                }
            }
            row.reason = reasons.join("; ");
            row
        })
        .collect()
}
