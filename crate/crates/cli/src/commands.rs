//! One function per subcommand; each writes its artifacts into `out`.

use std::fmt::Write as _;

use serde_json::json;
use steklov_patterns::assembly::{assemble, energy};
use steklov_patterns::certificate::{build_w0, computed_mode_search, recipe_bound_mode, Verdict};
use steklov_patterns::dynamics::{
    classify, evolve_adaptive, settle, stability_spectrum, EvolveOptions, EvolveResult,
};
use steklov_patterns::geometry::measure;
use steklov_patterns::meshing::{export_mesh, mesh_domain, mesh_quality};
use steklov_patterns::steklov::{spectrum_from_map, trace_probe, DtnMap, TraceFamily};
use steklov_patterns::{BoundCertificate, DiscreteOperators, Mesh};

use crate::config::{CertificateMode, Family, InitialField, RunConfig};
use crate::output::{fmt_f64, fmt_opt, write_csv, write_json, Outputs};
use crate::sweep::{sweep, SWEEP_HEADER};
use crate::vtk::export_vtk;
use crate::{random_field, CliError};

fn discretize(config: &RunConfig) -> Result<(Mesh, DiscreteOperators), CliError> {
    let (_, mesh) = mesh_domain(&config.domain.to_spec(), config.h)?;
    let ops = assemble(&mesh)?;
    Ok((mesh, ops))
}

fn initial_field(config: &RunConfig, mesh: &Mesh) -> Vec<f64> {
    match config.initial {
        InitialField::W0 { delta } => build_w0(mesh, delta).into_inner(),
        InitialField::Random => random_field(mesh.n_vertices(), config.seed),
        InitialField::Constant { value } => vec![value; mesh.n_vertices()],
    }
}

fn flow_options(config: &RunConfig) -> EvolveOptions<f64> {
    EvolveOptions { dt: config.dt_or_default(), tol: config.tol, max_steps: config.max_steps }
}

pub fn mesh(config: &RunConfig, out: &mut Outputs) -> Result<String, CliError> {
    let (polygon, mesh) = mesh_domain(&config.domain.to_spec(), config.h)?;
    export_mesh(&mesh, &out.path("mesh.node"), &out.path("mesh.ele"))?;
    export_vtk(&mesh, &[], &out.path("mesh.vtk"))?;
    let q = mesh_quality(&mesh);
    let g = measure(&polygon)?;
    write_json(
        &out.path("mesh.json"),
        &json!({
            "vertices": mesh.n_vertices(),
            "triangles": mesh.triangles().len(),
            "boundary_vertices": mesh.boundary_vertices().len(),
            "min_angle_degrees": q.min_angle,
            "edge_ratio": q.edge_ratio,
            "longest_edge": q.h,
            "area": mesh.area(),
            "perimeter": mesh.perimeter(),
            "polygon_inradius": g.inradius,
            "polygon_diameter": g.diameter,
        }),
    )?;
    Ok(format!(
        "{} vertices, {} triangles, min angle {:.2} deg",
        mesh.n_vertices(),
        mesh.triangles().len(),
        q.min_angle
    ))
}

pub fn steklov(config: &RunConfig, out: &mut Outputs) -> Result<String, CliError> {
    let (mesh, ops) = discretize(config)?;
    let map = DtnMap::new(&ops)?;
    let spec = spectrum_from_map(&map, &ops, config.k)?;
    let header: Vec<String> = (0..config.k).map(|j| format!("mu_{j}")).collect();
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let row: Vec<String> = spec.eigenvalues.iter().map(|&m| fmt_f64(m)).collect();
    write_csv(&out.path("steklov.csv"), &header_refs, &[row])?;
    let modes: Vec<Vec<f64>> =
        (1..config.k).map(|j| map.harmonic_extension(&spec.vector(j))).collect::<Result<_, _>>()?;
    let names: Vec<String> = (1..config.k).map(|j| format!("mode_{j}")).collect();
    let fields: Vec<(&str, &[f64])> = names.iter().map(String::as_str).zip(modes.iter().map(Vec::as_slice)).collect();
    export_vtk(&mesh, &fields, &out.path("steklov_modes.vtk"))?;
    write_json(
        &out.path("steklov.json"),
        &json!({
            "eigenvalues": spec.eigenvalues,
            "residuals": spec.residuals,
            "mu0_healthy": spec.mu0_healthy,
            "vertices": mesh.n_vertices(),
            "boundary_vertices": spec.boundary_index.len(),
        }),
    )?;
    let listed: Vec<String> = spec.eigenvalues.iter().map(|m| format!("{m:.6}")).collect();
    Ok(format!("mu = {}", listed.join(", ")))
}

pub fn trace(config: &RunConfig, out: &mut Outputs) -> Result<String, CliError> {
    let t = &config.trace_probe;
    let family = match t.family {
        Family::Stadium => TraceFamily::Stadium { radius: t.radius },
        Family::Disk => TraceFamily::Disk,
    };
    let resolutions = if t.resolutions.is_empty() { vec![config.h, 0.5 * config.h] } else { t.resolutions.clone() };
    let mut rows = Vec::new();
    let mut tables = Vec::new();
    for &h in &resolutions {
        let reports = trace_probe(family, &t.diameters, h)?;
        for r in &reports {
            rows.push(vec![
                fmt_f64(h),
                fmt_f64(r.diameter),
                fmt_f64(r.inradius),
                fmt_f64(r.mu1),
                fmt_f64(r.mu1_d),
                fmt_f64(r.mu1_d2_over_r),
                fmt_f64(r.c_emp),
                r.n_vertices.to_string(),
                r.n_boundary.to_string(),
            ]);
        }
        tables.push(reports);
    }
    write_csv(
        &out.path("trace_probe.csv"),
        &["h", "D", "inradius", "mu1", "mu1_D", "mu1_D2_over_r", "c_emp", "vertices", "boundary_vertices"],
        &rows,
    )?;
    let (first, last) = (&tables[0], &tables[tables.len() - 1]);
    let spread: Vec<f64> = first.iter().zip(last).map(|(a, b)| (a.mu1 - b.mu1).abs() / b.mu1).collect();
    let finest: Vec<f64> = last.iter().map(|r| r.mu1).collect();
    let monotone = finest.windows(2).all(|w| w[1] < w[0]);
    write_json(
        &out.path("trace_probe.json"),
        &json!({ "relative_spread": spread, "mu1_decreasing_in_D": monotone, "resolutions": resolutions }),
    )?;
    let worst = spread.iter().fold(0.0f64, |m, &x| m.max(x));
    Ok(format!("largest resolution spread {:.3}%, mu1 decreasing in D: {monotone}", 100.0 * worst))
}

/// `0.9·min(μ₁·D)` over the configured stadium sweep.
pub fn calibrate_c(config: &RunConfig) -> Result<f64, CliError> {
    let t = &config.trace_probe;
    let reports = trace_probe(TraceFamily::Stadium { radius: t.radius }, &t.diameters, config.h)?;
    Ok(0.9 * reports.iter().map(|r| r.mu1_d).fold(f64::INFINITY, f64::min))
}

fn verdict_name(v: Verdict) -> &'static str {
    match v {
        Verdict::Closes => "closes",
        Verdict::FailsDiscriminant => "fails_discriminant",
    }
}

pub fn bound_text(cert: &BoundCertificate) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "bound-mode certificate");
    let _ = writeln!(s, "  r = {}, d = {}, c = {}", cert.r, cert.d, cert.c);
    let _ = writeln!(s, "  lambda = c/(2d) = {}", cert.lambda);
    let _ = writeln!(s, "  Dirichlet energy of w0:  int |grad w0|^2 <= 4r/delta");
    let _ = writeln!(s, "  side measure:            H1(S_j) >= 2d");
    let _ = writeln!(s, "  strip measure:           H1(Sigma_delta) <= 2 delta + 4r");
    let _ = writeln!(s, "  discriminant (cd + 2cr)^2 - 256crd = {}", cert.discriminant);
    match cert.window {
        Some((lo, hi)) => {
            let _ = writeln!(s, "  delta window = ({lo:.6}, {hi:.6})");
        }
        None => {
            let _ = writeln!(s, "  delta window = empty");
        }
    }
    let _ = writeln!(s, "  delta* = {:.6}, D = 2d + 2 delta* = {:.6}", cert.delta_star, cert.diameter);
    let _ = writeln!(s, "  verdict = {}", verdict_name(cert.verdict));
    let _ = writeln!(s, "  sufficient inequality c/4 >= 4r/delta + (c/4d)(delta + 2r):");
    let _ = writeln!(s, "    margin at delta* = {:.6e}", cert.margin_sufficient);
    match cert.window_sufficient {
        Some((lo, hi)) => {
            let _ = writeln!(s, "    holds for delta in [{lo:.6}, {hi:.6}]");
        }
        None => {
            let _ = writeln!(s, "    holds for no delta");
        }
    }
    s
}

fn window_json(w: Option<(f64, f64)>) -> serde_json::Value {
    w.map_or(serde_json::Value::Null, |(a, b)| json!([a, b]))
}

pub fn certificate(config: &RunConfig, out: &mut Outputs) -> Result<String, CliError> {
    let c = &config.certificate;
    match c.mode {
        CertificateMode::Bound => {
            let (value, calibrated) = match c.c {
                Some(v) => (v, false),
                None => (calibrate_c(config)?, true),
            };
            let cert = recipe_bound_mode(c.r, c.d, value)?;
            let text = bound_text(&cert);
            std::fs::write(out.path("certificate.txt"), &text)?;
            write_json(
                &out.path("certificate.json"),
                &json!({
                    "r": cert.r, "d": cert.d, "c": cert.c, "c_calibrated": calibrated,
                    "lambda": cert.lambda, "discriminant": cert.discriminant,
                    "window": window_json(cert.window), "delta_star": cert.delta_star,
                    "diameter": cert.diameter, "verdict": verdict_name(cert.verdict),
                    "discriminant_sufficient": cert.discriminant_sufficient, "window_sufficient": window_json(cert.window_sufficient),
                    "margin_sufficient": cert.margin_sufficient,
                }),
            )?;
            Ok(text)
        }
        CertificateMode::Computed => {
            let result = computed_mode_search(&config.domain.to_spec(), &c.deltas, &c.lambdas, config.h)?;
            let rows: Vec<Vec<String>> = result
                .table
                .iter()
                .map(|p| {
                    let r = p.report.as_ref();
                    vec![
                        fmt_f64(p.delta),
                        fmt_f64(p.lambda),
                        fmt_opt(p.mu_left),
                        fmt_opt(p.mu_right),
                        fmt_opt(r.map(|r| r.energy)),
                        fmt_opt(r.map(|r| r.epsilon0)),
                        fmt_opt(r.map(|r| r.threshold)),
                        fmt_opt(r.map(|r| r.threshold_lambda_free)),
                        fmt_opt(r.map(|r| r.margin)),
                        r.map_or("nan".into(), |r| r.member.to_string()),
                        p.error.clone().unwrap_or_default(),
                    ]
                })
                .collect();
            write_csv(
                &out.path("certificate_search.csv"),
                &[
                    "delta",
                    "lambda",
                    "mu1_left",
                    "mu1_right",
                    "energy_w0",
                    "epsilon0",
                    "threshold",
                    "threshold_lambda_free",
                    "margin",
                    "member",
                    "reason",
                ],
                &rows,
            )?;
            let mut text = String::from("computed-mode certificate search\n");
            let _ = writeln!(text, "  grid points = {}", result.table.len());
            match result.best_point() {
                Some(p) => {
                    let r = p.report.as_ref().expect("best point has a report");
                    let _ = writeln!(text, "  best delta = {}, lambda = {}", p.delta, p.lambda);
                    let _ = writeln!(text, "  E(w0) = {:.6e}, epsilon0 = {:.6e}", r.energy, r.epsilon0);
                    let _ = writeln!(text, "  threshold = {:.6e} (lambda-free form {:.6e})", r.threshold, r.threshold_lambda_free);
                    let _ = writeln!(text, "  margin = {:.6e}, member = {}", r.margin, r.member);
                }
                None => {
                    let _ = writeln!(text, "  no grid point produced a report");
                }
            }
            std::fs::write(out.path("certificate.txt"), &text)?;
            Ok(text)
        }
    }
}

fn write_trace(out: &mut Outputs, trace: &[f64]) -> Result<(), CliError> {
    let rows: Vec<Vec<String>> = trace.iter().enumerate().map(|(k, &e)| vec![k.to_string(), fmt_f64(e)]).collect();
    write_csv(&out.path("energy.csv"), &["step", "energy"], &rows)
}

pub fn evolve(config: &RunConfig, out: &mut Outputs) -> Result<String, CliError> {
    let (mesh, ops) = discretize(config)?;
    let u0 = initial_field(config, &mesh);
    let opts = flow_options(config);
    let result = match config.snapshot_stride {
        None => evolve_adaptive(&u0, config.lambda, opts, &ops)?,
        Some(stride) => {
            let mut u = u0.clone();
            let mut dt = opts.dt;
            let mut trace = vec![energy(&u, config.lambda, &ops)?];
            let mut steps = 0;
            let mut last: Option<EvolveResult<f64>> = None;
            while steps < opts.max_steps {
                let chunk = stride.min(opts.max_steps - steps);
                let r = evolve_adaptive(&u, config.lambda, EvolveOptions { dt, max_steps: chunk, ..opts }, &ops)?;
                steps += r.steps;
                trace.extend_from_slice(&r.energy_trace[1..]);
                export_vtk(&mesh, &[("u", &r.u)], &out.path(&format!("snapshot_{steps:06}.vtk")))?;
                u = r.u.clone();
                dt = r.dt;
                let done = r.converged || r.steps == 0;
                last = Some(r);
                if done {
                    break;
                }
            }
            let r = last.expect("at least one chunk runs");
            EvolveResult { u, steps, residual: r.residual, energy_trace: trace, converged: r.converged, dt }
        }
    };
    write_trace(out, &result.energy_trace)?;
    export_vtk(&mesh, &[("u0", &u0), ("u", &result.u)], &out.path("evolve.vtk"))?;
    let final_energy = *result.energy_trace.last().expect("trace holds the initial energy");
    write_json(
        &out.path("evolve.json"),
        &json!({
            "steps": result.steps, "converged": result.converged, "residual": result.residual,
            "dt": result.dt, "energy": final_energy,
        }),
    )?;
    Ok(format!(
        "{} steps, converged = {}, residual {:.3e}, energy {:.6}",
        result.steps, result.converged, result.residual, final_energy
    ))
}

pub fn stationary(config: &RunConfig, out: &mut Outputs, with_stability: bool) -> Result<String, CliError> {
    let (mesh, ops) = discretize(config)?;
    let u0 = initial_field(config, &mesh);
    let eq = settle(&u0, config.lambda, flow_options(config), config.newton_tol, &ops)?;
    write_trace(out, &eq.energy_trace)?;
    let mut summary = json!({
        "residual": eq.residual, "flow_steps": eq.flow_steps, "relax_steps": eq.relax_steps,
        "newton_iterations": eq.newton_iterations, "energy": energy(&eq.u, config.lambda, &ops)?,
    });
    if !with_stability {
        export_vtk(&mesh, &[("u0", &u0), ("u", &eq.u)], &out.path("stationary.vtk"))?;
        write_json(&out.path("stationary.json"), &summary)?;
        return Ok(format!("residual {:.3e} after {} Newton iterations", eq.residual, eq.newton_iterations));
    }
    let rep = stability_spectrum(&eq.u, config.lambda, &ops)?;
    let class = classify(&rep);
    export_vtk(&mesh, &[("u", &eq.u), ("top_mode", &rep.eigenvector)], &out.path("stability.vtk"))?;
    let extra = json!({
        "sigma_max": rep.sigma_max, "eps_stab": rep.eps_stab, "eigen_residual": rep.residual,
        "is_constant": rep.is_constant, "classification": class.to_string(),
        "method": format!("{:?}", rep.method),
    });
    if let (Some(a), Some(b)) = (summary.as_object_mut(), extra.as_object()) {
        a.extend(b.clone());
    }
    write_json(&out.path("stability.json"), &summary)?;
    Ok(format!("{class}: sigma_max = {:.6e}", rep.sigma_max))
}

pub fn run_sweep(config: &RunConfig, out: &mut Outputs) -> Result<String, CliError> {
    let rows = sweep(config);
    let records: Vec<Vec<String>> = rows.iter().map(|r| r.record()).collect();
    write_csv(&out.path("sweep.csv"), &SWEEP_HEADER, &records)?;
    let patterns = rows.iter().filter(|r| r.classification.as_deref() == Some("pattern")).count();
    let failed = rows.iter().filter(|r| r.classification.is_none()).count();
    Ok(format!("{} rows, {patterns} patterns, {failed} without classification", rows.len()))
}
