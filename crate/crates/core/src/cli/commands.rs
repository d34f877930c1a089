//! The subcommands. Each turns a resolved [`RunConfig`] into a [`Report`]
//! and a [`Status`].

use serde_json::{json, Map, Value};

use super::config::{parse_values, RunConfig};
use super::output::{Cell, Plot, Report, Series, Table};
use crate::analysis::{
    agmon_decay_rate_within, count_growth, fit_expansion, lambda1_quadrature, scan_alpha_gamma, solve_sector_converged,
    AlphaScan, ScanEntry,
};
use crate::assembly::{assemble_stargraph_graded, AssembledPencil, Parity, SectorProblem};
use crate::eigensolver::{dense_solve, solve_lowest, Enclosure, DENSE_LIMIT};
use crate::interval::{d_e1_d_gamma, e1_interval, e2_interval, phi_of_gamma, solve_m, IntervalProblem};
use crate::star::{verify_counting, StarGraph};
use crate::Result;

/// Slack for comparisons against analytic bounds.
const BOUND_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub enum Status {
    Ok,
    NotConverged(String),
    Violation(String),
}

pub fn run_command(cfg: &RunConfig) -> Result<(Report, Status)> {
    match cfg.command() {
        "interval" => cmd_interval(cfg),
        "sector" => cmd_sector(cfg),
        "scan" => cmd_scan(cfg),
        "fit" => cmd_fit(cfg),
        "count" => cmd_count(cfg),
        "stargraph" => cmd_stargraph(cfg),
        "certify" => cmd_certify(cfg),
        other => Err(crate::Error::config(format!("unknown command '{other}'"))),
    }
}

fn enclosure_cells(e: &Enclosure) -> [Cell; 3] {
    match e.bounds() {
        Some((lo, hi)) => [Cell::F(lo), Cell::F(hi), Cell::F(e.epsilon())],
        None => [Cell::Empty, Cell::Empty, Cell::F(e.epsilon())],
    }
}

fn mesh_cells(e: &ScanEntry) -> [Cell; 5] {
    let last = e.levels.last().expect("at least one level");
    [
        Cell::U(e.levels.len()),
        Cell::U(last.n_r),
        Cell::U(last.n_theta),
        Cell::F(last.r_max),
        Cell::U(last.dofs),
    ]
}

const MESH_COLUMNS: [&str; 5] = ["levels", "n_r", "n_theta", "r_max", "dofs"];

fn with_mesh(cols: &[&'static str]) -> Vec<&'static str> {
    cols.iter().chain(MESH_COLUMNS.iter()).copied().collect()
}

fn pencil_files(pencil: &AssembledPencil) -> Result<Vec<(String, Vec<u8>)>> {
    let (mut k, mut m) = (Vec::new(), Vec::new());
    pencil.k.write_triplets(&mut k)?;
    pencil.m.write_triplets(&mut m)?;
    Ok(vec![("pencil_K.txt".into(), k), ("pencil_M.txt".into(), m)])
}

fn heatmap(pencil: &AssembledPencil, x: &[f64]) -> Vec<Vec<f64>> {
    // rows: angular nodes, columns: radial nodes
    let vals = pencil.nodal_values(x);
    let nt = vals.first().map_or(0, Vec::len);
    (0..nt).map(|t| vals.iter().map(|row| row[t]).collect()).collect()
}

pub fn cmd_interval(cfg: &RunConfig) -> Result<(Report, Status)> {
    let gammas = match &cfg.gammas {
        Some(s) => parse_values(s)?,
        None => vec![cfg.gamma.unwrap_or(1.0)],
    };
    let ls = match &cfg.scan_l {
        Some(s) => parse_values(s)?,
        None => vec![cfg.half_length.unwrap_or(1.0)],
    };
    let mut table = Table::new(
        "interval",
        &["L", "gamma", "m", "E1", "E2", "dE1_dgamma", "phi", "asymptotic_gap", "gap_ratio"],
    );
    let mut e1_curve = Vec::new();
    let mut e2_curve = Vec::new();
    for &l in &ls {
        for &g in &gammas {
            if g < 0.0 {
                return Err(crate::Error::config(format!("gamma must be non-negative, got {g}")));
            }
            let p = IntervalProblem::new(l, g)?;
            let e1 = e1_interval(p)?;
            let e2 = e2_interval(p)?;
            let positive = g > 0.0;
            let m = if positive { solve_m(g * l)? } else { 0.0 };
            let gl = g * l;
            let gap = e1 + g * g + 4.0 * g * g * (-2.0 * gl).exp();
            let x = if ls.len() > 1 { l } else { g };
            e1_curve.push((x, e1));
            e2_curve.push((x, e2));
            table.push(vec![
                Cell::F(l),
                Cell::F(g),
                Cell::F(m),
                Cell::F(e1),
                Cell::F(e2),
                if positive { Cell::F(d_e1_d_gamma(p)?) } else { Cell::Empty },
                if positive { Cell::F(phi_of_gamma(g)?) } else { Cell::Empty },
                Cell::F(gap),
                if positive { Cell::F(gap / (g * g * gl * (-4.0 * gl).exp())) } else { Cell::Empty },
            ]);
        }
    }
    let mut report = Report { tables: vec![table], ..Default::default() };
    if ls.len() > 1 && gammas.len() == 1 || gammas.len() > 1 && ls.len() == 1 {
        let x_label = if ls.len() > 1 { "half-length L" } else { "γ" };
        report.plots.push((
            "interval".into(),
            Plot {
                title: "Interval Robin eigenvalues".into(),
                x_label: x_label.into(),
                y_label: "E".into(),
                log_x: false,
                series: vec![
                    Series { label: "E1".into(), points: e1_curve },
                    Series { label: "E2".into(), points: e2_curve },
                ],
            },
        ));
    }
    Ok((report, Status::Ok))
}

pub fn cmd_sector(cfg: &RunConfig) -> Result<(Report, Status)> {
    let p = SectorProblem::new(cfg.alpha.unwrap(), cfg.gamma.unwrap_or(1.0), cfg.parity()?)?;
    let k = cfg.k.unwrap_or(1);
    let policy = cfg.mesh_policy()?;
    let study = solve_sector_converged(&p, k, &policy)?;
    let entry = &study.entry;
    let threshold = p.threshold();

    let mut table = Table::new(
        "sector",
        &with_mesh(&[
            "mode", "eigenvalue", "discrete", "lower", "upper", "epsilon", "residual", "solver_converged", "exact",
        ]),
    );
    for (j, res) in study.results.iter().enumerate() {
        let exact = (j == 0 && p.parity != Parity::Odd).then(|| p.ground_energy());
        let mut row = vec![Cell::U(j + 1), Cell::F(entry.eigenvalues[j]), Cell::F(res.value)];
        row.extend(enclosure_cells(&res.enclosure));
        row.extend([Cell::F(res.residual), Cell::B(res.converged), exact.into()]);
        row.extend(mesh_cells(entry));
        table.push(row);
    }
    let mut levels = Table::new(
        "sector_levels",
        &["level", "n_r", "n_theta", "grading", "r_max", "dofs", "mode", "discrete", "extrapolated"],
    );
    for (i, l) in entry.levels.iter().enumerate() {
        for j in 0..l.eigenvalues.len() {
            levels.push(vec![
                Cell::U(i),
                Cell::U(l.n_r),
                Cell::U(l.n_theta),
                Cell::F(l.grading),
                Cell::F(l.r_max),
                Cell::U(l.dofs),
                Cell::U(j + 1),
                Cell::F(l.eigenvalues[j]),
                l.extrapolated.as_ref().map(|e| e[j]).into(),
            ]);
        }
    }

    let mut summary = Map::new();
    summary.insert("count_below_threshold".into(), json!(entry.count));
    summary.insert("threshold".into(), json!(threshold));
    summary.insert("converged".into(), json!(entry.converged));
    summary.insert("lower_bound".into(), json!(study.pencil.lower_bound));
    if entry.eigenvalues[0] < threshold {
        let [lo, hi] = cfg.decay_window.unwrap_or([0.4, 0.7]);
        let r_max = *study.pencil.layout.r_nodes.last().unwrap();
        let r_ref = policy.r_max_for(&p, 1).min(r_max);
        let agmon = match agmon_decay_rate_within(&study.results[0], &study.pencil, (lo, hi), r_ref) {
            Ok(fit) => json!({
                "rate": fit.rate,
                "expected": (threshold - entry.eigenvalues[0]).sqrt(),
                "window": [fit.window.0, fit.window.1],
                "reference_radius": r_ref,
                "goodness": fit.goodness,
                "shrunk": fit.shrunk,
            }),
            Err(e) => json!({ "error": e.to_string() }),
        };
        summary.insert("agmon".into(), agmon);
    }
    let mut metadata = Map::new();
    metadata.insert("count_grid".into(), serde_json::to_value(entry.count_grid)?);
    metadata.insert("levels".into(), serde_json::to_value(&entry.levels)?);

    let mut report = Report { tables: vec![table, levels], summary, metadata, ..Default::default() };
    report.heatmaps.push(("sector_mode1".into(), heatmap(&study.pencil, &study.results[0].vector)));
    if cfg.dump_pencil == Some(true) {
        report.files = pencil_files(&study.pencil)?;
    }

    let below = study
        .results
        .iter()
        .filter(|r| r.value < study.pencil.lower_bound - BOUND_SLACK)
        .count();
    let status = if below > 0 {
        Status::Violation(format!("{below} discrete eigenvalues below the analytic bound {}", study.pencil.lower_bound))
    } else if !entry.converged {
        Status::NotConverged(format!("refinement did not converge within {} levels", entry.levels.len()))
    } else {
        Status::Ok
    };
    Ok((report, status))
}

fn scan_table(name: &str, scan: &AlphaScan) -> Table {
    let mut t = Table::new(
        name,
        &with_mesh(&[
            "alpha", "mode", "eigenvalue", "discrete", "lower", "upper", "epsilon", "residual", "uncertainty", "count",
            "converged",
        ]),
    );
    for e in &scan.entries {
        for j in 0..scan.k {
            let mut row = vec![Cell::F(e.alpha), Cell::U(j + 1), Cell::F(e.eigenvalues[j]), Cell::F(e.discrete[j])];
            row.extend(enclosure_cells(&e.enclosures[j]));
            row.extend([
                Cell::F(e.residuals[j]),
                Cell::F(e.uncertainty(j)),
                Cell::U(e.count),
                Cell::B(e.converged),
            ]);
            row.extend(mesh_cells(e));
            t.push(row);
        }
    }
    t
}

fn scan_plot(scan: &AlphaScan, gamma: f64, log_x: bool) -> Plot {
    let threshold = -gamma * gamma;
    let mut series: Vec<Series> = (1..=scan.k)
        .map(|n| Series {
            label: format!("E{n}"),
            points: scan
                .alphas
                .iter()
                .zip(scan.curve(n))
                .filter(|(_, e)| *e < threshold)
                .map(|(&a, e)| (a, e))
                .collect(),
        })
        .collect();
    series.push(Series {
        label: "-γ²/sin²α".into(),
        points: scan.alphas.iter().map(|&a| (a, -(gamma / a.sin()).powi(2))).collect(),
    });
    Plot {
        title: "Sector eigenvalues".into(),
        x_label: "half-opening α".into(),
        y_label: "E".into(),
        log_x,
        series,
    }
}

fn scan_summary(scan: &AlphaScan) -> Map<String, Value> {
    let mut s = Map::new();
    s.insert("all_converged".into(), json!(scan.all_converged()));
    s.insert("counts".into(), json!(scan.counts()));
    s.insert("monotonicity_violations".into(), json!(scan.monotonicity_violations()));
    s.insert("small_angle_constant".into(), json!(scan.small_angle_constant()));
    s
}

fn run_scan(cfg: &RunConfig) -> Result<AlphaScan> {
    let alphas = parse_values(cfg.alphas.as_deref().unwrap_or_default())?;
    scan_alpha_gamma(&alphas, cfg.gamma.unwrap_or(1.0), cfg.k.unwrap_or(1), &cfg.mesh_policy()?)
}

fn scan_status(scan: &AlphaScan, check_monotone: bool) -> Status {
    if !scan.all_converged() {
        let bad: Vec<f64> = scan.entries.iter().filter(|e| !e.converged).map(|e| e.alpha).collect();
        return Status::NotConverged(format!("no convergence at α = {bad:?}"));
    }
    let v = scan.monotonicity_violations();
    if check_monotone && !v.is_empty() {
        return Status::Violation(format!("eigenvalues not increasing in α at (pair, mode) {v:?}"));
    }
    Status::Ok
}

pub fn cmd_scan(cfg: &RunConfig) -> Result<(Report, Status)> {
    let scan = run_scan(cfg)?;
    let report = Report {
        tables: vec![scan_table("scan", &scan)],
        summary: scan_summary(&scan),
        plots: vec![("scan".into(), scan_plot(&scan, cfg.gamma.unwrap_or(1.0), cfg.log_alpha.unwrap_or(true)))],
        ..Default::default()
    };
    let status = scan_status(&scan, true);
    Ok((report, status))
}

pub fn cmd_fit(cfg: &RunConfig) -> Result<(Report, Status)> {
    let scan = run_scan(cfg)?;
    let n = cfg.n.unwrap_or(1);
    let fit = fit_expansion(&scan, n, cfg.order.unwrap_or(2))?;
    let s = (2 * n - 1) as f64;
    let mut coef = Table::new("fit_coefficients", &["j", "power", "coefficient", "reference", "difference"]);
    let lambda1 = lambda1_quadrature(n)?;
    for (j, &c) in fit.coefficients.iter().enumerate() {
        let reference = match j {
            0 => Some(-1.0 / (s * s)),
            1 => Some(lambda1),
            _ => None,
        };
        coef.push(vec![
            Cell::U(j),
            Cell::U(2 * j),
            Cell::F(c),
            reference.into(),
            reference.map(|r| c - r).into(),
        ]);
    }
    let mut summary = scan_summary(&scan);
    summary.insert("n".into(), json!(n));
    summary.insert("condition".into(), json!(fit.condition));
    summary.insert("residual_norm".into(), json!(fit.residual_norm));
    summary.insert("lambda1_quadrature".into(), json!(lambda1));
    let data: Vec<(f64, f64)> = scan.entries.iter().map(|e| (e.alpha, e.alpha * e.alpha * e.eigenvalues[n - 1])).collect();
    let model: Vec<(f64, f64)> = data
        .iter()
        .map(|&(a, _)| (a, fit.coefficients.iter().rev().fold(0.0, |acc, c| acc * a * a + c)))
        .collect();
    let plot = Plot {
        title: format!("Small-angle expansion, n = {n}"),
        x_label: "α".into(),
        y_label: "α² E_n".into(),
        log_x: cfg.log_alpha.unwrap_or(false),
        series: vec![
            Series { label: "computed".into(), points: data },
            Series { label: "fit".into(), points: model },
        ],
    };
    let report = Report {
        tables: vec![scan_table("fit_scan", &scan), coef],
        summary,
        plots: vec![("fit".into(), plot)],
        ..Default::default()
    };
    Ok((report, scan_status(&scan, false)))
}

pub fn cmd_count(cfg: &RunConfig) -> Result<(Report, Status)> {
    let scan = run_scan(cfg)?;
    let growth = count_growth(&scan);
    let mut t = Table::new(
        "count",
        &[
            "alpha",
            "count",
            "lower_estimate",
            "alpha_times_count",
            "E1",
            "lower",
            "upper",
            "epsilon",
            "count_n_r",
            "count_n_theta",
            "count_r_max",
        ],
    );
    for (e, &(a, n, est)) in scan.entries.iter().zip(&growth.table) {
        let mut row = vec![Cell::F(a), Cell::U(n), Cell::I(est), Cell::F(a * n as f64), Cell::F(e.eigenvalues[0])];
        row.extend(enclosure_cells(&e.enclosures[0]));
        row.extend([Cell::U(e.count_grid.n_r), Cell::U(e.count_grid.n_theta), Cell::F(e.count_grid.r_max)]);
        t.push(row);
    }
    let mut summary = scan_summary(&scan);
    summary.insert("kappa_hat".into(), json!(growth.kappa_hat));
    summary.insert("monotone".into(), json!(growth.monotone));
    summary.insert("constant".into(), json!(growth.constant));
    let plot = Plot {
        title: "Eigenvalues below the threshold".into(),
        x_label: "half-opening α".into(),
        y_label: "N(α)".into(),
        log_x: cfg.log_alpha.unwrap_or(true),
        series: vec![
            Series { label: "N(α)".into(), points: growth.table.iter().map(|&(a, n, _)| (a, n as f64)).collect() },
            Series {
                label: "lower estimate".into(),
                points: growth.table.iter().map(|&(a, _, e)| (a, e as f64)).collect(),
            },
        ],
    };
    let status = if !growth.monotone {
        Status::Violation("counts increase with α".into())
    } else {
        scan_status(&scan, false)
    };
    let report = Report { tables: vec![t], summary, plots: vec![("count".into(), plot)], ..Default::default() };
    Ok((report, status))
}

pub fn cmd_stargraph(cfg: &RunConfig) -> Result<(Report, Status)> {
    let star = StarGraph::new(cfg.angles.clone().unwrap_or_default(), cfg.gamma.unwrap_or(1.0))?;
    let policy = cfg.star_policy()?;
    let rep = verify_counting(&star, &policy)?;
    let mut eig = Table::new(
        "stargraph",
        &["index", "eigenvalue", "lower", "upper", "epsilon", "residual", "converged", "n_r", "n_theta", "r_max", "ray_grading"],
    );
    for (i, e) in rep.direct_eigenvalues.iter().enumerate() {
        let mut row = vec![Cell::U(i + 1), Cell::F(e.value)];
        row.extend(enclosure_cells(&e.enclosure));
        row.extend([
            Cell::F(e.residual),
            Cell::B(e.converged),
            Cell::U(rep.grid.n_r),
            Cell::U(rep.grid.n_theta),
            Cell::F(rep.grid.r_max),
            Cell::F(rep.ray_grading),
        ]);
        eig.push(row);
    }
    let mut sectors = Table::new("stargraph_sectors", &["half_gap", "count", "n_r", "n_theta", "r_max"]);
    for s in &rep.sector_counts {
        sectors.push(vec![
            Cell::F(s.half_gap),
            Cell::U(s.count),
            s.grid.map_or(Cell::Empty, |g| Cell::U(g.n_r)),
            s.grid.map_or(Cell::Empty, |g| Cell::U(g.n_theta)),
            s.grid.map(|g| g.r_max).into(),
        ]);
    }
    let mut summary = Map::new();
    summary.insert("direct_count".into(), json!(rep.direct_count));
    summary.insert("bound".into(), json!(rep.bound));
    summary.insert("holds".into(), json!(rep.holds()));
    summary.insert("threshold".into(), json!(rep.threshold));
    summary.insert("lower_bound".into(), json!(rep.lower_bound));
    let mut metadata = Map::new();
    metadata.insert("grid".into(), serde_json::to_value(rep.grid)?);
    metadata.insert("angles".into(), json!(star.angles));
    let mut report = Report { tables: vec![eig, sectors], summary, metadata, ..Default::default() };
    if cfg.dump_pencil == Some(true) {
        let pencil = assemble_stargraph_graded(&star.angles, star.gamma, &policy.grid(star.gamma)?, policy.ray_grading)?;
        report.files = pencil_files(&pencil)?;
    }
    let status = match rep.check() {
        Err(e) => Status::Violation(e.to_string()),
        Ok(()) if rep.direct_eigenvalues.iter().any(|e| !e.converged) => {
            Status::NotConverged("direct solve did not converge".into())
        }
        Ok(()) => Status::Ok,
    };
    Ok((report, status))
}

pub fn cmd_certify(cfg: &RunConfig) -> Result<(Report, Status)> {
    let p = SectorProblem::new(cfg.alpha.unwrap(), cfg.gamma.unwrap_or(1.0), cfg.parity()?)?;
    let k = cfg.k.unwrap_or(1);
    let policy = cfg.mesh_policy()?;
    let grid = policy.base_grid(&p, k)?;
    let pencil = crate::assembly::assemble_sector(&p, &grid)?;
    let results = solve_lowest(&pencil, k, &policy.solver)?;
    let dense = if pencil.dim() <= DENSE_LIMIT { Some(dense_solve(&pencil)?) } else { None };
    let mut t = Table::new(
        "certify",
        &["mode", "value", "lower", "upper", "epsilon", "residual", "converged", "dense_nearest", "contains_dense", "dofs"],
    );
    let mut missed = Vec::new();
    for (j, r) in results.iter().enumerate() {
        let nearest = dense.as_ref().map(|d| {
            d.iter().copied().min_by(|a, b| (a - r.value).abs().total_cmp(&(b - r.value).abs())).unwrap()
        });
        let contains = match (nearest, r.enclosure.bounds()) {
            (Some(_), Some((lo, hi))) => {
                let slack = 1e-12 * (r.value.abs() + 1.0);
                let hit = dense.as_ref().unwrap().iter().any(|&d| lo - slack <= d && d <= hi + slack);
                if !hit {
                    missed.push(j + 1);
                }
                Cell::B(hit)
            }
            _ => Cell::Empty,
        };
        let mut row = vec![Cell::U(j + 1), Cell::F(r.value)];
        row.extend(enclosure_cells(&r.enclosure));
        row.extend([Cell::F(r.residual), Cell::B(r.converged), nearest.into(), contains, Cell::U(pencil.dim())]);
        t.push(row);
    }
    let mut metadata = Map::new();
    metadata.insert("grid".into(), serde_json::to_value(grid.spec())?);
    metadata.insert("lower_bound".into(), json!(pencil.lower_bound));
    let mut report = Report { tables: vec![t], metadata, ..Default::default() };
    if cfg.dump_pencil == Some(true) {
        report.files = pencil_files(&pencil)?;
    }
    let status = if !missed.is_empty() {
        Status::Violation(format!("certified enclosures of modes {missed:?} contain no dense eigenvalue"))
    } else if results.iter().any(|r| !r.converged) {
        Status::NotConverged("solver did not reach the tolerance".into())
    } else {
        Status::Ok
    };
    Ok((report, status))
}
