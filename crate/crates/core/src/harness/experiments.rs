//! One function per experiment, each turning a [`RunConfig`] into tables.

use std::f64::consts::{FRAC_1_PI, FRAC_2_PI};

use num_complex::Complex64;

use super::config::{Experiment, RunConfig};
use super::output::{col, Cell, Table};
use super::HarnessError;
use crate::asymptotics::{classify_compensation_exact, parse_exact, Compensation, CriticalCoupling};
use crate::collectivity::{b_curve_with, CollectivityCurve};
use crate::ep::{accumulation_scan_with, analytic_lambda_c, find_eps_with, resultant_oracle, ExceptionalPoint, RESULTANT_MAX_N};
use crate::model::{Angle, ModelSpec};
use crate::par::Execution;
use crate::phase_loop::{loop_ep, omega_comparison, TwoLevel};
use crate::trajectory::{order_parameter, sweep_with, TrajectoryBundle};

pub fn run(cfg: &RunConfig, exec: Execution) -> Result<Vec<Table>, HarnessError> {
    match cfg.experiment {
        Experiment::Fig1 => run_fig1(cfg, exec),
        Experiment::Fig2 => run_fig2(cfg, exec),
        Experiment::Fig3 => run_fig3(cfg, exec),
        Experiment::Fig4 => run_fig4(cfg, exec),
        Experiment::Sweep => run_sweep(cfg, exec),
        Experiment::Eps => run_eps(cfg, exec),
        Experiment::Bcurve => run_bcurve(cfg, exec),
        Experiment::Order => run_order(cfg, exec),
        Experiment::Loop => run_loop(cfg),
        Experiment::Classify => run_classify(cfg, exec),
    }
}

fn with_refs(t: Table) -> Table {
    t.meta("lambda_c_picket", format!("1/pi = {FRAC_1_PI}"))
        .meta("lambda_c_compensated_r1_t4", format!("2/pi = {FRAC_2_PI}"))
}

fn n_of(spec: &ModelSpec) -> usize {
    spec.n()
}

fn spectrum_columns() -> Vec<super::output::Column> {
    vec![
        col("path", "index"),
        col("epsilon", "spacing"),
        col("lambda", "1"),
        col("re_e", "spacing"),
        col("im_e", "spacing"),
    ]
}

fn path_tables(prefix: &str, spec: &ModelSpec, b: &TrajectoryBundle, positive_half: bool) -> Result<Vec<Table>, HarnessError> {
    let model = spec.build()?;
    let eps = model.epsilons();
    let make = |name: String, keep: &dyn Fn(usize) -> bool| {
        let mut t = with_refs(Table::new(name, spectrum_columns()))
            .meta("model", spec.label())
            .meta("phi_degrees", b.phi.degrees())
            .meta("broad_path", b.broad_index)
            .meta("refinements", b.refinements);
        for (k, path) in b.paths.iter().enumerate().filter(|&(k, _)| keep(k)) {
            for (&l, z) in b.lambda_grid.iter().zip(path) {
                t.push(vec![k.into(), eps[k].into(), l.into(), z.re.into(), z.im.into()]);
            }
        }
        t
    };
    let mut out = vec![make(format!("{prefix}_paths"), &|_| true)];
    if positive_half {
        out.push(make(format!("{prefix}_paths_positive"), &|k| eps[k] >= 0.0).meta("subset", "paths with epsilon >= 0"));
    }
    let mut turning = with_refs(Table::new(
        format!("{prefix}_turning"),
        vec![col("path", "index"), col("lambda", "1"), col("re_e", "spacing"), col("im_e", "spacing")],
    ))
    .meta("model", spec.label());
    for (k, tps) in b.turning_points.iter().enumerate() {
        for tp in tps {
            turning.push(vec![k.into(), tp.lambda.into(), tp.energy.re.into(), tp.energy.im.into()]);
        }
    }
    out.push(turning);
    Ok(out)
}

fn ep_columns(with_system: bool) -> Vec<super::output::Column> {
    let mut c = Vec::new();
    if with_system {
        c.push(col("system", ""));
    }
    c.extend([
        col("n", "states"),
        col("kind", ""),
        col("pair_id", "index"),
        col("member", "index"),
        col("re_lambda", "1"),
        col("im_lambda", "1"),
        col("re_e", "spacing"),
        col("im_e", "spacing"),
        col("residual", "1"),
        col("edge", "bool"),
    ]);
    c
}

fn push_eps(t: &mut Table, system: Option<&str>, n: usize, eps: &[ExceptionalPoint]) {
    for p in eps {
        for (m, (l, e)) in p.members().into_iter().enumerate() {
            let mut row: Vec<Cell> = system.map(|s| vec![s.into()]).unwrap_or_default();
            row.extend([
                n.into(),
                "ep".into(),
                p.pair_id.into(),
                m.into(),
                l.re.into(),
                l.im.into(),
                e.re.into(),
                e.im.into(),
                p.residual.into(),
                p.edge.into(),
            ]);
            t.push(row);
        }
    }
}

fn push_lambda_c(t: &mut Table, system: Option<&str>, lambda_c: f64) {
    let mut row: Vec<Cell> = system.map(|s| vec![s.into()]).unwrap_or_default();
    row.extend([
        Cell::Empty,
        "lambda_c".into(),
        Cell::Empty,
        Cell::Empty,
        lambda_c.into(),
        0.0.into(),
        Cell::Empty,
        Cell::Empty,
        Cell::Empty,
        Cell::Empty,
    ]);
    t.push(row);
}

pub fn run_fig1(cfg: &RunConfig, exec: Execution) -> Result<Vec<Table>, HarnessError> {
    let grid = cfg.grid_values()?;
    let mut out = Vec::new();
    for spec in &cfg.systems {
        let n = n_of(spec);
        let model = spec.build()?;
        let bundle = sweep_with(&model, cfg.phi_angle(), &grid, exec)?;
        let prefix = format!("fig1_n{n}");
        out.extend(path_tables(&prefix, spec, &bundle, true)?);
        let eps = find_eps_with(&model, exec)?;
        let mut t = with_refs(Table::new(
            format!("{prefix}_crossings"),
            vec![
                col("pair_id", "index"),
                col("re_lambda", "1"),
                col("im_lambda", "1"),
                col("re_e", "spacing"),
                col("im_e", "spacing"),
                col("edge", "bool"),
            ],
        ))
        .meta("model", spec.label())
        .meta("subset", "EP energies with Re E >= 0 and Im E <= 0");
        for p in &eps {
            for (l, e) in p.members() {
                if e.re >= 0.0 && e.im <= 0.0 {
                    t.push(vec![p.pair_id.into(), l.re.into(), l.im.into(), e.re.into(), e.im.into(), p.edge.into()]);
                }
            }
        }
        out.push(t);
    }
    Ok(out)
}

pub fn run_fig2(cfg: &RunConfig, exec: Execution) -> Result<Vec<Table>, HarnessError> {
    let family = &cfg.systems[0];
    let ladder: Vec<usize> = cfg.systems.iter().map(n_of).collect();
    let report = accumulation_scan_with(&ladder, family, exec)?;
    let lambda_c = report.lambda_c.unwrap_or(FRAC_1_PI);
    let mut eps = with_refs(Table::new("fig2_eps", ep_columns(false))).meta("family", family.label());
    for (n, set) in ladder.iter().zip(&report.ep_sets) {
        push_eps(&mut eps, None, *n, set);
    }
    push_lambda_c(&mut eps, None, lambda_c);
    let mut dist = with_refs(Table::new(
        "fig2_distances",
        vec![col("n", "states"), col("min_distance", "1"), col("median_distance", "1"), col("edge_classes", "count")],
    ))
    .meta("distance", "|Lambda_EP - lambda_c| over non-edge classes")
    .meta("lambda_c_estimate", report.lambda_c_estimate);
    for (i, (n, set)) in ladder.iter().zip(&report.ep_sets).enumerate() {
        let d = report.distances.as_ref().map(|d| d[i]);
        dist.push(vec![
            (*n).into(),
            d.map(|d| d.min).into(),
            d.map(|d| d.median).into(),
            set.iter().filter(|p| p.edge).count().into(),
        ]);
    }
    Ok(vec![eps, dist])
}

fn b_tables(prefix: &str, curves: &[(ModelSpec, CollectivityCurve)]) -> Vec<Table> {
    let mut b = with_refs(Table::new(
        format!("{prefix}_b"),
        vec![col("system", ""), col("n", "states"), col("lambda", "1"), col("b", "1")],
    ));
    let mut peaks = with_refs(Table::new(
        format!("{prefix}_peaks"),
        vec![
            col("system", ""),
            col("n", "states"),
            col("peak_lambda", "1"),
            col("peak_b", "1"),
            col("grid_max_lambda", "1"),
            col("grid_max_b", "1"),
            col("relative_prominence", "1"),
            col("lambda_c_reference", "1"),
            col("skipped_points", "count"),
        ],
    ))
    .meta("peak_rule", "interior maximum with relative topographic prominence >= 0.5");
    for (spec, c) in curves {
        let label = spec.label();
        for (&l, &v) in c.lambda_grid.iter().zip(&c.b_values) {
            b.push(vec![label.clone().into(), spec.n().into(), l.into(), v.into()]);
        }
        peaks.push(vec![
            label.into(),
            spec.n().into(),
            c.peak.map(|p| p.lambda).into(),
            c.peak.map(|p| p.value).into(),
            c.grid_max.map(|p| p.lambda).into(),
            c.grid_max.map(|p| p.value).into(),
            c.relative_prominence.into(),
            analytic_lambda_c(spec).into(),
            c.skipped.len().into(),
        ]);
    }
    vec![b, peaks]
}

fn curves(cfg: &RunConfig, exec: Execution) -> Result<Vec<(ModelSpec, CollectivityCurve)>, HarnessError> {
    let grid = cfg.grid_values()?;
    cfg.systems
        .iter()
        .map(|spec| Ok((spec.clone(), b_curve_with(&spec.build()?, cfg.phi_angle(), &grid, exec)?)))
        .collect()
}

pub fn run_fig3(cfg: &RunConfig, exec: Execution) -> Result<Vec<Table>, HarnessError> {
    let mut t = b_tables("fig3", &curves(cfg, exec)?);
    for x in &mut t {
        x.metadata.push(("phi_degrees".into(), cfg.phi.to_string()));
    }
    Ok(t)
}

pub fn run_fig4(cfg: &RunConfig, exec: Execution) -> Result<Vec<Table>, HarnessError> {
    let mut t = with_refs(Table::new("fig4_eps", ep_columns(true)))
        .meta("axes", "Re Lambda, Im Lambda shared by both systems");
    for (spec, system) in cfg.systems.iter().zip(["ideal", "perturbed"]) {
        let eps = find_eps_with(&spec.build()?, exec)?;
        t = t.meta(format!("{system}_model"), spec.label());
        push_eps(&mut t, Some(system), spec.n(), &eps);
    }
    push_lambda_c(&mut t, Some("reference"), FRAC_1_PI);
    Ok(vec![t])
}

pub fn run_sweep(cfg: &RunConfig, exec: Execution) -> Result<Vec<Table>, HarnessError> {
    let spec = &cfg.systems[0];
    let grid = cfg.grid_values()?;
    let bundle = sweep_with(&spec.build()?, cfg.phi_angle(), &grid, exec)?;
    path_tables("sweep", spec, &bundle, false)
}

pub fn run_eps(cfg: &RunConfig, exec: Execution) -> Result<Vec<Table>, HarnessError> {
    let spec = &cfg.systems[0];
    let model = spec.build()?;
    let eps = find_eps_with(&model, exec)?;
    let mut t = with_refs(Table::new("eps", ep_columns(false))).meta("model", spec.label());
    push_eps(&mut t, None, spec.n(), &eps);
    if let Some(lc) = analytic_lambda_c(spec) {
        push_lambda_c(&mut t, None, lc);
    }
    let mut out = vec![t];
    if model.n() <= RESULTANT_MAX_N {
        let mut r = Table::new("eps_resultant", vec![col("re_lambda", "1"), col("im_lambda", "1")])
            .meta("model", spec.label())
            .meta("method", "exact resultant of P and dP/dE");
        for l in resultant_oracle(&model)? {
            r.push(vec![l.re.into(), l.im.into()]);
        }
        out.push(r);
    }
    Ok(out)
}

pub fn run_bcurve(cfg: &RunConfig, exec: Execution) -> Result<Vec<Table>, HarnessError> {
    Ok(b_tables("bcurve", &curves(cfg, exec)?))
}

pub fn run_order(cfg: &RunConfig, exec: Execution) -> Result<Vec<Table>, HarnessError> {
    let spec = &cfg.systems[0];
    let grid = cfg.grid_values()?;
    let bundle = sweep_with(&spec.build()?, cfg.phi_angle(), &grid, exec)?;
    let curve = order_parameter(&bundle)?;
    let mut t = with_refs(Table::new(
        "order",
        vec![col("lambda", "1"), col("gamma0_over_n", "spacing"), col("derivative", "spacing")],
    ))
    .meta("model", spec.label())
    .meta("broad_path", bundle.broad_index);
    for i in 0..curve.lambda_grid.len() {
        t.push(vec![curve.lambda_grid[i].into(), curve.gamma0_over_n[i].into(), curve.derivative[i].into()]);
    }
    Ok(vec![t])
}

pub fn run_loop(cfg: &RunConfig) -> Result<Vec<Table>, HarnessError> {
    let lc = cfg.looping.as_ref().ok_or_else(|| HarnessError::Config("loop parameters missing".into()))?;
    let model = TwoLevel {
        eps1: lc.eps1,
        eps2: lc.eps2,
        omega: Angle::from_degrees(lc.omega),
    };
    let r = loop_ep(Complex64::new(lc.center_re, lc.center_im), lc.radius, lc.windings, lc.samples, model)?;
    let mut contour = Table::new(
        "loop_contour",
        vec![
            col("sample", "index"),
            col("re_lambda", "1"),
            col("im_lambda", "1"),
            col("re_e1", "spacing"),
            col("im_e1", "spacing"),
            col("re_theta", "rad"),
            col("im_theta", "rad"),
        ],
    )
    .meta("orientation", "counterclockwise from center + radius");
    for (k, s) in r.contour.iter().enumerate() {
        contour.push(vec![
            k.into(),
            s.lambda.re.into(),
            s.lambda.im.into(),
            s.energy1.re.into(),
            s.energy1.im.into(),
            s.theta.re.into(),
            s.theta.im.into(),
        ]);
    }
    let mut summary = Table::new(
        "loop_summary",
        vec![
            col("windings", "count"),
            col("samples_per_winding", "count"),
            col("psi1_to", ""),
            col("psi2_to", ""),
            col("min_step_overlap", "1"),
            col("max_deviation", "1"),
        ],
    );
    let image = |i: usize| format!("{}psi{}", if r.signs[i] < 0 { "-" } else { "+" }, r.permutation[i] + 1);
    summary.push(vec![
        r.windings.into(),
        r.samples.into(),
        image(0).into(),
        image(1).into(),
        r.min_step_overlap.into(),
        r.max_deviation.into(),
    ]);
    let oc = omega_comparison(lc.eps1, lc.eps2, lc.lambda_max, Angle::from_degrees(lc.delta))?;
    let mut omega = Table::new(
        "omega_comparison",
        vec![
            col("omega", "deg"),
            col("re_tan_theta_raw", "1"),
            col("im_tan_theta_raw", "1"),
            col("re_tan_theta_asymptotic", "1"),
            col("im_tan_theta_asymptotic", "1"),
            col("tan_omega", "1"),
            col("minus_cot_omega", "1"),
            col("re_theta", "rad"),
            col("im_theta", "rad"),
        ],
    )
    .meta("lambda_max", oc.lambda_max)
    .meta("theta_difference", format!("{} + {}i", oc.theta_difference.re, oc.theta_difference.im));
    for b in [oc.above, oc.below] {
        omega.push(vec![
            b.omega.degrees().into(),
            b.tan_theta_raw.re.into(),
            b.tan_theta_raw.im.into(),
            b.tan_theta_asymptotic.re.into(),
            b.tan_theta_asymptotic.im.into(),
            b.tan_omega.into(),
            b.minus_cot_omega.into(),
            b.theta.re.into(),
            b.theta.im.into(),
        ]);
    }
    Ok(vec![contour, summary, omega])
}

pub fn run_classify(cfg: &RunConfig, exec: Execution) -> Result<Vec<Table>, HarnessError> {
    let grid = cfg.grid_values()?;
    let mut t = with_refs(Table::new(
        "classify",
        vec![
            col("r", "1"),
            col("t", "1"),
            col("class", ""),
            col("exponent", "1"),
            col("predicted_lambda_c", ""),
            col("predicted_lambda_c_value", "1"),
            col("n", "states"),
            col("measured_peak_lambda", "1"),
            col("measured_peak_b", "1"),
        ],
    ))
    .meta("measured", format!("interior B peak on the configured grid, phi = {}", cfg.phi));
    for ([rs, ts], spec) in cfg.pairs.iter().zip(&cfg.systems) {
        let (rq, tq) = (parse_exact(rs)?, parse_exact(ts)?);
        let class = classify_compensation_exact(&rq, &tq).map_err(|e| HarnessError::Config(e.to_string()))?;
        let t_ = num_traits::ToPrimitive::to_f64(&tq).unwrap_or(f64::NAN);
        let curve = b_curve_with(&spec.build()?, cfg.phi_angle(), &grid, exec)?;
        let (name, predicted) = match (class.class, class.predicted_lambda_c) {
            (Compensation::Overcompensated, _) => ("overcompensated", Some(0.0)),
            (Compensation::Compensated, _) => ("compensated", Some(t_ / (2.0 * std::f64::consts::PI))),
            (Compensation::Undercompensated, _) => ("undercompensated", None),
        };
        let kind = match class.predicted_lambda_c {
            CriticalCoupling::Zero => "zero",
            CriticalCoupling::Finite => "finite",
            CriticalCoupling::Infinite => "infinite",
        };
        t.push(vec![
            rs.as_str().into(),
            ts.as_str().into(),
            name.into(),
            class.exponent.into(),
            kind.into(),
            predicted.into(),
            spec.n().into(),
            curve.peak.map(|p| p.lambda).into(),
            curve.peak.map(|p| p.value).into(),
        ]);
    }
    Ok(vec![t])
}
