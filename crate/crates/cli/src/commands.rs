//! Subcommand implementations.

use crate::config::{Scenario, VectorExpr};
use crate::output::{fmt, write_csv, write_json};
use fibrel::cell::{annulus_energy, fit_log_limit};
use fibrel::expr::Expr;
use fibrel::fine::{
    assign_composite, build_layout, gap_rel, korn_ratio, layout_manifest, recovery_energy,
    solve_fine,
};
use fibrel::limit::{limit_energy, solve_flexion_limit, solve_limit, solve_stiff_limit, LimitOptions, LimitState};
use fibrel::material::{
    classify_regime, fiber_lame_for, flexion_young, EffectiveCoefficients, LameCoefficients,
    Regime, RegimeTag, ScalingFamily,
};
use fibrel::report::{ConvergenceRow, EnergyReport};
use fibrel::{Error, Result};
use serde::Serialize;
use std::path::Path;

/// Which solver `solve` dispatches to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum SolveTarget {
    Limit,
    Stiff,
    Flexion,
    Fine,
}

fn scaling_family(scn: &Scenario) -> Result<ScalingFamily<f64>> {
    let gamma = scn.fiber.gamma;
    if gamma <= 0.0 {
        // a rule with −ε²ln r → 0 classifies as the conjectural γ = 0 case
        return Ok(ScalingFamily::new(
            |eps: f64| (-1.0 / (eps * eps * eps)).exp(),
            |_| LameCoefficients::new(1.0, 1.0).expect("unit material"),
        ));
    }
    let (lo, mo) = (scn.fiber.lambda_o, scn.fiber.mu_o);
    let (l1, m1) = (scn.fiber.lambda_1, scn.fiber.mu_1);
    Ok(ScalingFamily::new(
        move |eps: f64| (-1.0 / (gamma * eps * eps)).exp(),
        move |eps: f64| {
            let r = (-1.0 / (gamma * eps * eps)).exp();
            if m1 > 0.0 {
                fiber_lame_for(RegimeTag::Flexion, eps, r, (l1, m1)).expect("flexion scaling")
            } else if mo > 0.0 || lo > 0.0 {
                fiber_lame_for(RegimeTag::Critical, eps, r, (lo, mo)).expect("critical scaling")
            } else {
                LameCoefficients::new(1.0, 1.0).expect("unit material")
            }
        },
    ))
}

fn classification_samples() -> Vec<f64> {
    vec![0.5, 0.25, 0.125, 0.0625]
}

fn regime_name(tag: RegimeTag) -> &'static str {
    match tag {
        RegimeTag::Critical => "Critical",
        RegimeTag::Soft => "Soft",
        RegimeTag::StiffGammaInfinite => "StiffGammaInfinite",
        RegimeTag::Flexion => "Flexion",
        RegimeTag::GammaZeroConjectural => "GammaZeroConjectural",
        RegimeTag::Unsupported => "Unsupported",
    }
}

pub fn cmd_coefficients(scn: &Scenario, out: &Path) -> Result<()> {
    let base = scn.base()?;
    let mut coeffs =
        EffectiveCoefficients::critical(&base, scn.fiber.gamma, scn.fiber.lambda_o, scn.fiber.mu_o)?;
    if scn.fiber.mu_1 > 0.0 {
        coeffs.e_1 = flexion_young(scn.fiber.lambda_1, scn.fiber.mu_1)?;
    }
    let family = scaling_family(scn)?;
    let regime = classify_regime(&family, &classification_samples())?;
    write_json(&out.join("coefficients.json"), &coeffs)?;
    println!("regime: {}", regime_name(regime.tag()));
    println!("wrote {}", out.join("coefficients.json").display());
    Ok(())
}

pub fn cmd_cell_verify(scn: &Scenario, out: &Path) -> Result<()> {
    let base = scn.base()?;
    let cv = &scn.cell_verify;
    if cv.radii.len() < 2 {
        return Err(Error::Config(
            "cell_verify.radii needs at least two points to fit a limit".into(),
        ));
    }
    let kappa = base.kappa();
    let diag_plane = 2.0 * std::f64::consts::PI * base.mu * (1.0 + kappa) / kappa;
    let diag_log = 2.0 * std::f64::consts::PI * base.mu;
    let mut rows = Vec::new();
    let mut max_diag_err: f64 = 0.0;
    for m in 1..=3usize {
        for l in 1..=3usize {
            let mut values = Vec::new();
            for &r_outer in &cv.radii {
                values.push(annulus_energy(m, l, r_outer, &base, cv.n_r, cv.n_theta)?);
            }
            let (fitted, _) = fit_log_limit(&cv.radii, &values)?;
            let exact = if m == l {
                if m == 3 { diag_log } else { diag_plane }
            } else {
                0.0
            };
            let rel_error = if m == l {
                ((fitted - exact) / exact).abs()
            } else {
                fitted.abs() / diag_plane
            };
            if m == l {
                max_diag_err = max_diag_err.max(rel_error);
            }
            for (i, &r_outer) in cv.radii.iter().enumerate() {
                rows.push(vec![
                    m.to_string(),
                    l.to_string(),
                    fmt(r_outer),
                    fmt(values[i]),
                    fmt(fitted),
                    fmt(exact),
                    fmt(rel_error),
                ]);
            }
        }
    }
    write_csv(
        &out.join("cell_verify.csv"),
        &["m", "l", "R", "value", "fitted_limit", "exact_limit", "rel_error"],
        &rows,
    )?;
    println!("max diagonal rel_error: {max_diag_err:.3e}");
    println!("wrote {}", out.join("cell_verify.csv").display());
    Ok(())
}

fn refuse_conjectural(scn: &Scenario, allow: bool) -> Result<()> {
    if scn.fiber.gamma == 0.0 && !allow {
        return Err(Error::Conjectural(
            "gamma = 0: the limit functional is conjectural; pass --allow-conjectural to proceed"
                .into(),
        ));
    }
    Ok(())
}

struct ParsedLoad {
    f: VectorExpr,
    weight: Option<Expr>,
    profile: Option<Expr>,
}

fn parse_load(scn: &Scenario) -> Result<ParsedLoad> {
    Ok(ParsedLoad {
        f: VectorExpr::parse(&scn.load.f)?,
        weight: scn.load.weight.as_deref().map(Expr::parse).transpose()?,
        profile: scn.load.e_o_profile.as_deref().map(Expr::parse).transpose()?,
    })
}

fn write_fields(path: &Path, grid: &fibrel::grid::StructuredGrid, state: &LimitState) -> Result<()> {
    let mut rows = Vec::with_capacity(grid.n_nodes());
    for node in 0..grid.n_nodes() {
        let x = grid.node_coords(node);
        let u = state.u[node];
        rows.push(vec![
            fmt(x[0]),
            fmt(x[1]),
            fmt(x[2]),
            fmt(u[0]),
            fmt(u[1]),
            fmt(u[2]),
            fmt(state.v3[node]),
        ]);
    }
    write_csv(path, &["x", "y", "z", "u1", "u2", "u3", "v3"], &rows)
}

pub fn cmd_solve(scn: &Scenario, which: SolveTarget, out: &Path, allow_conjectural: bool) -> Result<()> {
    let base = scn.base()?;
    let grid = scn.grid()?;
    let load = parse_load(scn)?;
    let f_closure = |x: [f64; 3]| load.f.eval(x);
    let weight_closure = load.weight.as_ref().map(|w| {
        move |x1: f64, x2: f64| w.eval([x1, x2, 0.0])
    });
    let profile_closure = load.profile.as_ref().map(|p| move |x3: f64| p.eval([0.0, 0.0, x3]));
    let mut opts = LimitOptions::default();
    let wc = weight_closure;
    let pc = profile_closure;
    if let Some(w) = wc.as_ref() {
        opts.weight = Some(w);
    }
    if let Some(p) = pc.as_ref() {
        opts.e_o_profile = Some(p);
    }

    let (state, energy, info) = match which {
        SolveTarget::Limit => {
            refuse_conjectural(scn, allow_conjectural)?;
            solve_limit(&grid, &base, scn.fiber.gamma, scn.e_o()?, &f_closure, &opts)?
        }
        SolveTarget::Stiff => solve_stiff_limit(&grid, &base, scn.e_o()?, &f_closure, &opts)?,
        SolveTarget::Flexion => {
            let e_1 = flexion_young(scn.fiber.lambda_1, scn.fiber.mu_1)?;
            solve_flexion_limit(&grid, &base, e_1, scn.fiber.gamma, &f_closure, &opts)?
        }
        SolveTarget::Fine => {
            refuse_conjectural(scn, allow_conjectural)?;
            let eps = *scn
                .sweep
                .epsilons
                .first()
                .ok_or_else(|| Error::Config("sweep.epsilons is empty".into()))?;
            let r = scn.radius_for(eps)?;
            let layout = build_layout(scn.geometry.omega, eps, r)?;
            let assignment = assign_composite(&grid, &layout)?;
            if assignment.resolution_warning {
                eprintln!(
                    "warning: fiber radius spans only {:.2} elements",
                    assignment.elements_per_radius
                );
            }
            let fiber = fiber_lame_for(
                RegimeTag::Critical,
                eps,
                r,
                (scn.fiber.lambda_o, scn.fiber.mu_o),
            )?;
            let sol = solve_fine(&grid, &layout, &assignment, &base, &fiber, &f_closure)?;
            write_json(&out.join("layout.json"), &layout_manifest(&layout, &assignment))?;
            let state = LimitState {
                v3: sol.u.iter().map(|u| u[2]).collect(),
                u: sol.u,
                flexion: None,
            };
            let breakdown = fibrel::report::EnergyBreakdown {
                elastic: sol.f_eps,
                coupling: 0.0,
                fiber: 0.0,
            };
            (state, breakdown, sol.info)
        }
    };
    write_json(&out.join("energy_report.json"), &EnergyReport::new(energy, info))?;
    write_fields(&out.join("fields.csv"), &grid, &state)?;
    println!("energy_total: {}", fmt(energy.total()));
    println!("wrote {}", out.join("energy_report.json").display());
    Ok(())
}

#[derive(Serialize)]
struct CompareSummary {
    name: String,
    seed: u64,
    f_limit: f64,
    rows: Vec<ConvergenceRow>,
    recovery_gaps: Vec<f64>,
    gap_decreasing: bool,
    recovery_decreasing: Option<bool>,
    verdict: String,
    complete: bool,
}

pub fn cmd_compare(scn: &Scenario, out: &Path, allow_conjectural: bool) -> Result<()> {
    refuse_conjectural(scn, allow_conjectural)?;
    if scn.sweep.epsilons.len() < 2 {
        return Err(Error::Config("compare needs at least two sweep epsilons".into()));
    }
    let base = scn.base()?;
    let grid = scn.grid()?;
    let load = parse_load(scn)?;
    let f_closure = |x: [f64; 3]| load.f.eval(x);
    let opts = LimitOptions::default();
    let e_o = scn.e_o()?;

    let (_, limit_breakdown, _) =
        solve_limit(&grid, &base, scn.fiber.gamma, e_o, &f_closure, &opts)?;
    let f_limit = limit_breakdown.total();

    // optional smooth recovery pair and its limit energy
    let recovery_pair = scn
        .recovery
        .as_ref()
        .map(|rec| -> Result<(VectorExpr, VectorExpr, VectorExpr, f64)> {
            let u = VectorExpr::parse(&rec.u)?;
            let v = VectorExpr::parse(&rec.v)?;
            let dv3 = v.d3();
            let mut state = LimitState::zeros(grid.n_nodes());
            for node in 0..grid.n_nodes() {
                let x = grid.node_coords(node);
                state.u[node] = u.eval(x);
                state.v3[node] = v.eval(x)[2];
            }
            let e = limit_energy(&state, &grid, &base, scn.fiber.gamma, e_o, &opts)?;
            Ok((u, v, dv3, e.total()))
        })
        .transpose()?;

    let mut rows: Vec<ConvergenceRow> = Vec::new();
    let mut recovery_gaps: Vec<f64> = Vec::new();
    let mut failure: Option<Error> = None;

    for &eps in &scn.sweep.epsilons {
        let step = (|| -> Result<()> {
            let r = scn.radius_for(eps)?;
            let layout = build_layout(scn.geometry.omega, eps, r)?;
            let assignment = assign_composite(&grid, &layout)?;
            let fiber = fiber_lame_for(
                RegimeTag::Critical,
                eps,
                r,
                (scn.fiber.lambda_o, scn.fiber.mu_o),
            )?;
            let sol = solve_fine(&grid, &layout, &assignment, &base, &fiber, &f_closure)?;
            let korn = korn_ratio(&sol.u, &grid, &layout, &assignment)?;
            rows.push(ConvergenceRow {
                epsilon: eps,
                f_eps: sol.f_eps,
                f_limit,
                gap_rel: gap_rel(sol.f_eps, f_limit),
                korn_ratio: korn,
            });
            if let Some((u, v, dv3, pair_limit)) = &recovery_pair {
                let uf = |x: [f64; 3]| u.eval(x);
                let vf = |x: [f64; 3]| v.eval(x);
                let df = |x: [f64; 3]| dv3.eval(x);
                let rec_e = recovery_energy(
                    &uf, &vf, &df, &grid, &layout, &assignment, &base, &fiber,
                )?;
                recovery_gaps.push((rec_e - pair_limit).abs());
            }
            Ok(())
        })();
        if let Err(e) = step {
            failure = Some(e);
            break;
        }
    }

    let gap_decreasing =
        rows.windows(2).all(|w| w[1].gap_rel <= w[0].gap_rel) && rows.len() >= 2;
    let recovery_decreasing = if recovery_pair.is_some() && recovery_gaps.len() >= 2 {
        Some(recovery_gaps.windows(2).all(|w| w[1] <= w[0]))
    } else {
        None
    };
    let complete = failure.is_none();
    let verdict = if !complete {
        "INCOMPLETE".to_string()
    } else if gap_decreasing && recovery_decreasing.unwrap_or(true) {
        "PASS".to_string()
    } else {
        "FAIL".to_string()
    };

    let mut csv_rows: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                fmt(r.epsilon),
                fmt(r.f_eps),
                fmt(r.f_limit),
                fmt(r.gap_rel),
                fmt(r.korn_ratio),
            ]
        })
        .collect();
    if !complete {
        csv_rows.push(vec!["incomplete".into(), String::new(), String::new(), String::new(), String::new()]);
    }
    write_csv(
        &out.join("convergence.csv"),
        &["epsilon", "F_eps", "F_limit", "gap_rel", "korn_ratio"],
        &csv_rows,
    )?;
    write_json(
        &out.join("summary.json"),
        &CompareSummary {
            name: scn.name.clone(),
            seed: scn.seed,
            f_limit,
            rows,
            recovery_gaps,
            gap_decreasing,
            recovery_decreasing,
            verdict: verdict.clone(),
            complete,
        },
    )?;
    println!("verdict: {verdict}");
    println!("wrote {}", out.join("convergence.csv").display());
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(())
}

#[derive(Serialize)]
struct RegimeReport {
    tag: String,
    gamma: Option<f64>,
    lambda_o: Option<f64>,
    mu_o: Option<f64>,
    lambda_1: Option<f64>,
    mu_1: Option<f64>,
}

pub fn cmd_regimes(scn: &Scenario, out: &Path) -> Result<()> {
    let family = scaling_family(scn)?;
    let regime = classify_regime(&family, &classification_samples())?;
    let report = match regime {
        Regime::Critical { gamma, lambda_o, mu_o } => RegimeReport {
            tag: "Critical".into(),
            gamma: Some(gamma),
            lambda_o: Some(lambda_o),
            mu_o: Some(mu_o),
            lambda_1: None,
            mu_1: None,
        },
        Regime::Soft { gamma } => RegimeReport {
            tag: "Soft".into(),
            gamma: Some(gamma),
            lambda_o: Some(0.0),
            mu_o: Some(0.0),
            lambda_1: None,
            mu_1: None,
        },
        Regime::StiffGammaInfinite { lambda_o, mu_o } => RegimeReport {
            tag: "StiffGammaInfinite".into(),
            gamma: None,
            lambda_o: Some(lambda_o),
            mu_o: Some(mu_o),
            lambda_1: None,
            mu_1: None,
        },
        Regime::Flexion { gamma, lambda_1, mu_1 } => RegimeReport {
            tag: "Flexion".into(),
            gamma,
            lambda_o: None,
            mu_o: None,
            lambda_1: Some(lambda_1),
            mu_1: Some(mu_1),
        },
        Regime::GammaZeroConjectural => RegimeReport {
            tag: "GammaZeroConjectural".into(),
            gamma: Some(0.0),
            lambda_o: None,
            mu_o: None,
            lambda_1: None,
            mu_1: None,
        },
        Regime::Unsupported => RegimeReport {
            tag: "Unsupported".into(),
            gamma: None,
            lambda_o: None,
            mu_o: None,
            lambda_1: None,
            mu_1: None,
        },
    };
    write_json(&out.join("regimes.json"), &report)?;
    println!("regime: {}", report.tag);
    println!("wrote {}", out.join("regimes.json").display());
    Ok(())
}
