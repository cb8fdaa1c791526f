//! One function per subcommand; each returns a [`Report`] and leaves the
//! writing to [`crate::output`].

use std::path::Path;

use fracising::ed::{entropy_peak_gc, lowest_states, scan_field, SpinChainSpec};
use fracising::expfit::{fit_exponentials, ExpSumApproximation, FitConfig};
use fracising::kernel::build_kernel;
use fracising::mpo::{build_dense_expsum_hamiltonian, build_dense_hamiltonian, build_mpo, contract_mpo_dense, DENSE_LIMIT};
use fracising::quadratic::{
    default_k_grid, dispersion, entropy_field, evolve_perturbation, finite_gap, geometric, meanfield_energy,
    BdgMomentumModel, BdgRealSpaceModel, BlackmanHarrisWindow, Boundary, DriveProtocol, EntropyField,
};
use fracising::scaling::{
    default_levels, extract_front, fit_dispersion_z, fit_front_exponent, fit_gap_scaling, fit_pseudocritical_drift,
    DataSource, FrontDataset, GapDataset, GapPoint,
};
use fracising::{CouplingKernel, ScalingFit};

use crate::config::{BoundaryKind, FitKind, Method, Settings};
use crate::output::{Cell, Json, Report, Table};
use crate::{par_map, CliError};

/// Small-k window for dispersion slopes.
const SLOPE_WINDOW: (f64, f64) = (1e-5, 1e-3);
const SLOPE_POINTS: usize = 32;
/// Lengths in a default size sweep.
const SWEEP_SIZES: usize = 12;
const SWEEP_MIN: usize = 20;

pub fn dispatch(name: &str, s: &Settings, threads: usize) -> Result<Report, CliError> {
    match name {
        "kernel" => kernel(s),
        "expfit" => expfit(s),
        "mpo-check" => mpo_check(s),
        "dispersion" => dispersion_cmd(s),
        "gap-scan" => gap_scan(s, threads),
        "lightcone" => lightcone(s),
        "scaling-fit" => scaling_fit(s),
        "pipeline" => pipeline(s, threads),
        other => Err(CliError::Usage(format!("unknown subcommand `{other}`"))),
    }
}

fn need<T: Clone>(v: &Option<T>, key: &str) -> Result<T, CliError> {
    v.clone().ok_or_else(|| CliError::Usage(format!("missing `{key}`")))
}

fn coupling_kernel(s: &Settings) -> Result<CouplingKernel, CliError> {
    let k = build_kernel(s.order()?, need(&s.j0, "j0")?, need(&s.range, "range")?)?;
    Ok(if need(&s.kac, "kac")? { k.kac_normalized()? } else { k })
}

fn fit(s: &Settings, kernel: &CouplingKernel) -> Result<ExpSumApproximation, CliError> {
    let cfg = FitConfig {
        tolerance: need(&s.tol, "tol")?,
        max_terms: need(&s.max_terms, "max-terms")?,
        range: s.range,
        ..FitConfig::default()
    };
    Ok(fit_exponentials(kernel, &cfg)?)
}

fn boundary(s: &Settings) -> Boundary {
    match s.boundary {
        Some(BoundaryKind::Antiperiodic) => Boundary::Antiperiodic,
        _ => Boundary::Open,
    }
}

pub fn fit_json(f: &ScalingFit) -> Json {
    let est = f
        .estimates
        .iter()
        .map(|e| (e.name.to_string(), Json::obj([("value", Json::Num(e.value)), ("stderr", Json::Num(e.stderr))])))
        .collect();
    let cov = (0..f.covariance.nrows())
        .map(|i| Json::nums(&(0..f.covariance.ncols()).map(|j| f.covariance[(i, j)]).collect::<Vec<_>>()))
        .collect();
    Json::obj([
        ("model", Json::str(format!("{:?}", f.model))),
        ("estimates", Json::Obj(est)),
        ("covariance", Json::Arr(cov)),
        ("residual_norm", Json::Num(f.residual_norm)),
        ("points", Json::Int(f.points as i64)),
        ("systematic", Json::Num(f.systematic)),
        ("companions", Json::Arr(f.companions.iter().map(fit_json).collect())),
    ])
}

fn estimates_table(name: &str, f: &ScalingFit) -> Table {
    let mut t = Table::new(name, vec!["parameter", "value", "stderr"]);
    for e in &f.estimates {
        t.push(vec![e.name.into(), e.value.into(), e.stderr.into()]);
    }
    t.push(vec!["systematic".into(), f.systematic.into(), f64::NAN.into()]);
    t
}

/// A failed optional analysis becomes a diagnostic rather than an error.
fn attempt(r: Result<ScalingFit, fracising::Error>) -> Json {
    match r {
        Ok(f) => fit_json(&f),
        Err(e) => Json::obj([("error", Json::str(e.code())), ("message", Json::str(e.to_string()))]),
    }
}

fn kernel(s: &Settings) -> Result<Report, CliError> {
    let k = coupling_kernel(s)?;
    let mut t = Table::new("kernel", vec!["r", "J"]);
    for r in 1..=k.max_range {
        t.push(vec![r.into(), k.get(r).into()]);
    }
    Ok(Report::new(vec![t])
        .diagnostic("critical_field", Json::Num(s.critical_field()?))
        .diagnostic("absolute_tail_sum", Json::Num(k.absolute_tail_sum()))
        .diagnostic("nearest_neighbour", Json::Bool(k.is_nearest_neighbor())))
}

fn expfit(s: &Settings) -> Result<Report, CliError> {
    let k = coupling_kernel(s)?;
    let a = fit(s, &k)?;
    let mut t = Table::new("expfit", vec!["index", "a", "b"]);
    for (i, term) in a.terms.iter().enumerate() {
        t.push(vec![(i + 1).into(), term.a.into(), term.b.into()]);
    }
    let escalation = a
        .escalation
        .iter()
        .map(|e| Json::obj([("terms", Json::Int(e.terms as i64)), ("sup_error", Json::Num(e.sup_error))]))
        .collect();
    Ok(Report::new(vec![t])
        .output("term_count", Json::Int(a.terms.len() as i64))
        .output("sup_error", Json::Num(a.sup_error))
        .output("fitted_range", Json::Int(a.fitted_range as i64))
        .diagnostic("iterations_used", Json::Int(a.iterations_used as i64))
        .diagnostic("seed_strategy", Json::str(format!("{:?}", a.seed_strategy)))
        .diagnostic("escalation", Json::Arr(escalation)))
}

fn mpo_check(s: &Settings) -> Result<Report, CliError> {
    let k = coupling_kernel(s)?;
    let a = fit(s, &k)?;
    let g = need(&s.g, "g")?;
    let top = need(&s.length, "L")?;
    if !(2..=DENSE_LIMIT).contains(&top) {
        return Err(CliError::Usage(format!("mpo-check needs 2 <= L <= {DENSE_LIMIT}")));
    }
    let mut t = Table::new("mpo-check", vec!["L", "bond_dim", "dev_expsum", "dev_true", "bound", "within_bound"]);
    let mut all = true;
    for l in 2..=top {
        let mpo = build_mpo(&a, g, l)?;
        let dense = contract_mpo_dense(&mpo)?;
        let dev_sum = dense.max_abs_diff(&build_dense_expsum_hamiltonian(&a, g, l)?);
        let dev_true = dense.max_abs_diff(&build_dense_hamiltonian(&k, g, l)?);
        let bound = a.sup_error * (l * (l - 1) / 2) as f64;
        all &= dev_true <= bound;
        let ok = if dev_true <= bound { "true" } else { "false" };
        t.push(vec![l.into(), mpo.max_bond_dim().into(), dev_sum.into(), dev_true.into(), bound.into(), ok.into()]);
    }
    Ok(Report::new(vec![t])
        .output("within_bound", Json::Bool(all))
        .diagnostic("term_count", Json::Int(a.terms.len() as i64))
        .diagnostic("sup_error", Json::Num(a.sup_error)))
}

fn slope_samples(s: &Settings, exact: bool) -> Result<Vec<(f64, f64)>, CliError> {
    let (order, j0, g) = (s.order()?, need(&s.j0, "j0")?, need(&s.g, "g")?);
    let m = BdgMomentumModel::with_grid(order, j0, g, Vec::new());
    geometric(SLOPE_WINDOW.0, SLOPE_WINDOW.1, SLOPE_POINTS)
        .into_iter()
        .map(|k| {
            let e = if exact { dispersion(&m, k)?.energy } else { meanfield_energy(order, j0, g, k)? };
            Ok((k, e))
        })
        .collect()
}

fn dispersion_cmd(s: &Settings) -> Result<Report, CliError> {
    let (order, j0, g) = (s.order()?, need(&s.j0, "j0")?, need(&s.g, "g")?);
    let m = BdgMomentumModel::with_grid(order, j0, g, default_k_grid());
    let mut t = Table::new("dispersion", vec!["k", "xi", "delta", "E", "E_meanfield"]);
    for p in m.spectrum()? {
        t.push(vec![p.k.into(), p.xi.into(), p.delta.into(), p.energy.into(), meanfield_energy(order, j0, g, p.k)?.into()]);
    }
    let exact = slope_samples(s, true).and_then(|x| Ok(fit_dispersion_z(&x)?));
    let mf = slope_samples(s, false).and_then(|x| Ok(fit_dispersion_z(&x)?));
    let to_json = |r: Result<ScalingFit, CliError>| match r {
        Ok(f) => fit_json(&f),
        Err(e) => Json::obj([("error", Json::str(e.code()))]),
    };
    Ok(Report::new(vec![t])
        .diagnostic("slope_window", Json::nums(&[SLOPE_WINDOW.0, SLOPE_WINDOW.1]))
        .diagnostic("z_bdg", to_json(exact))
        .diagnostic("z_meanfield", to_json(mf)))
}

/// Explicit list, or geometric sizes from 20 to L-max (ED: 8, 10, 12).
fn lengths(s: &Settings) -> Result<Vec<usize>, CliError> {
    if let Some(list) = &s.lengths {
        return Ok(list.clone());
    }
    if s.method == Some(Method::Ed) {
        return Ok(vec![8, 10, 12]);
    }
    let top = need(&s.length_max, "L-max")?;
    if top < SWEEP_MIN {
        return Err(CliError::Usage(format!("L-max must be at least {SWEEP_MIN}")));
    }
    let mut v: Vec<usize> =
        geometric(SWEEP_MIN as f64, top as f64, SWEEP_SIZES).into_iter().map(|x| x.round() as usize).collect();
    v.dedup();
    Ok(v)
}

struct Sweep {
    table: Table,
    gap_fit: Option<Result<ScalingFit, fracising::Error>>,
    peaks: Vec<(usize, Json)>,
}

fn sweep(s: &Settings, threads: usize) -> Result<Sweep, CliError> {
    let order = s.order()?;
    let j0 = need(&s.j0, "j0")?;
    let sizes = lengths(s)?;
    let fields = match &s.g_grid {
        Some(grid) => grid.clone(),
        None => vec![need(&s.g, "g")?],
    };
    let method = s.method.unwrap_or(Method::Quadratic);
    let pin = need(&s.pin, "pin").unwrap_or(fracising::ed::DEFAULT_PIN);
    let bc = boundary(s);
    let per_length = par_map(&sizes, threads, |&l| -> Result<Vec<(f64, f64, f64)>, CliError> {
        match method {
            Method::Quadratic => fields
                .iter()
                .map(|&g| Ok((g, finite_gap(&BdgRealSpaceModel::with_boundary(order, j0, g, l, bc)?)?, f64::NAN)))
                .collect(),
            Method::Ed => {
                let spec = SpinChainSpec::new(&build_kernel(order, j0, l)?, fields[0], l)?;
                if fields.len() == 1 {
                    let r = lowest_states(&spec, 2)?;
                    return Ok(vec![(fields[0], r.gap(), f64::NAN)]);
                }
                Ok(scan_field(&spec, &fields, pin)?.iter().map(|p| (p.g, p.gap, p.half_entropy)).collect())
            }
        }
    });
    let mut table = match method {
        Method::Quadratic => Table::new("gap-scan", vec!["L", "g", "gap"]),
        Method::Ed => Table::new("gap-scan", vec!["L", "g", "gap", "half_entropy"]),
    };
    let mut peaks = Vec::new();
    let mut points = Vec::new();
    for (&l, rows) in sizes.iter().zip(per_length) {
        let rows = rows?;
        for &(g, gap, ent) in &rows {
            let mut row: Vec<Cell> = vec![l.into(), g.into(), gap.into()];
            if method == Method::Ed {
                row.push(ent.into());
            }
            table.push(row);
        }
        if fields.len() == 1 {
            points.push(GapPoint { length: l, g: fields[0], gap: rows[0].1, sigma: None });
        } else if method == Method::Ed {
            let g: Vec<f64> = rows.iter().map(|r| r.0).collect();
            let e: Vec<f64> = rows.iter().map(|r| r.2).collect();
            let j = match entropy_peak_gc(&g, &e) {
                Ok(p) => Json::obj([("position", Json::Num(p.position)), ("uncertainty", Json::Num(p.uncertainty))]),
                Err(e) => Json::obj([("error", Json::str(e.code()))]),
            };
            peaks.push((l, j));
        }
    }
    let source = if method == Method::Ed { DataSource::Ed } else { DataSource::Quadratic };
    let gap_fit = (fields.len() == 1).then(|| GapDataset::new(points, source).and_then(|d| fit_gap_scaling(&d)));
    Ok(Sweep { table, gap_fit, peaks })
}

fn gap_scan(s: &Settings, threads: usize) -> Result<Report, CliError> {
    let sw = sweep(s, threads)?;
    let mut r = Report::new(vec![sw.table]);
    if let Some(f) = sw.gap_fit {
        r = r.diagnostic("gap_fit", attempt(f));
    }
    if !sw.peaks.is_empty() {
        r = r.diagnostic("entropy_peaks", Json::Obj(sw.peaks.into_iter().map(|(l, j)| (format!("L={l}"), j)).collect()));
    }
    Ok(r)
}

fn light_cone_field(s: &Settings) -> Result<EntropyField, CliError> {
    let l = need(&s.length, "L")?;
    let model = BdgRealSpaceModel::with_boundary(s.order()?, need(&s.j0, "j0")?, need(&s.g, "g")?, l, boundary(s))?;
    let protocol = DriveProtocol {
        window: BlackmanHarrisWindow::new(need(&s.tau, "tau")?)?,
        lambda0: need(&s.lambda0, "lambda0")?,
        site: need(&s.site, "site")?,
        dt: need(&s.dt, "dt")?,
        t_max: need(&s.t_max, "t-max")?,
        ..DriveProtocol::defaults_for(&model)
    };
    Ok(entropy_field(&evolve_perturbation(&model, &protocol)?)?)
}

fn front_of(s: &Settings, field: &EntropyField) -> Result<FrontDataset, fracising::Error> {
    let levels = s.levels.clone().unwrap_or_else(|| default_levels(field));
    extract_front(field, &levels, 1e-10)
}

fn lightcone(s: &Settings) -> Result<Report, CliError> {
    let field = light_cone_field(s)?;
    let base = field.baseline().to_vec();
    let mut t = Table::new("lightcone", vec!["t", "bond", "S", "dS"]);
    for (time, row) in field.times.iter().zip(&field.values) {
        for (b, (v, b0)) in row.iter().zip(&base).enumerate() {
            t.push(vec![(*time).into(), b.into(), (*v).into(), (v - b0).into()]);
        }
    }
    let mut tables = vec![t];
    let (front_fit, discarded) = match front_of(s, &field) {
        Ok(front) => {
            let mut ft = Table::new("front", vec!["level", "t", "d"]);
            for (level, pts) in front.levels.iter().zip(&front.crossings) {
                for &(time, d) in pts {
                    ft.push(vec![(*level).into(), time.into(), d.into()]);
                }
            }
            tables.push(ft);
            (attempt(fit_front_exponent(&front)), front.discarded)
        }
        Err(e) => (Json::obj([("error", Json::str(e.code())), ("message", Json::str(e.to_string()))]), Vec::new()),
    };
    Ok(Report::new(tables)
        .diagnostic("source_site", Json::Int(field.source_site as i64))
        .diagnostic("front_fit", front_fit)
        .diagnostic("discarded", Json::Arr(discarded.into_iter().map(|d| Json::Int(d as i64)).collect())))
}

fn read_columns(path: &Path, wanted: &[&str]) -> Result<Vec<Vec<f64>>, CliError> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let header = rdr.headers().map_err(|e| CliError::Io(e.to_string()))?.clone();
    let idx: Vec<Option<usize>> = wanted.iter().map(|w| header.iter().position(|h| h == *w)).collect();
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| CliError::Io(e.to_string()))?;
        let row = idx
            .iter()
            .map(|i| match i {
                Some(i) => rec[*i].trim().parse::<f64>().map_err(|e| CliError::Usage(format!("bad number `{}`: {e}", &rec[*i]))),
                None => Ok(f64::NAN),
            })
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    for (w, i) in wanted.iter().zip(&idx).take(2) {
        if i.is_none() {
            return Err(CliError::Usage(format!("{}: missing column `{w}`", path.display())));
        }
    }
    Ok(rows)
}

fn scaling_fit(s: &Settings) -> Result<Report, CliError> {
    let input = need(&s.input, "input")?;
    let fit = match s.model.unwrap_or(FitKind::Gap) {
        FitKind::Gap => {
            let rows = read_columns(&input, &["L", "gap", "g", "sigma"])?;
            let points = rows
                .iter()
                .map(|r| GapPoint {
                    length: r[0] as usize,
                    gap: r[1],
                    g: if r[2].is_nan() { 0.0 } else { r[2] },
                    sigma: (!r[3].is_nan()).then_some(r[3]),
                })
                .collect();
            fit_gap_scaling(&GapDataset::new(points, DataSource::Synthetic)?)?
        }
        FitKind::Drift => {
            let rows = read_columns(&input, &["L", "g_c", "sigma"])?;
            let series: Vec<(f64, f64)> = rows.iter().map(|r| (r[0], r[1])).collect();
            let sigma: Vec<f64> = rows.iter().map(|r| r[2]).collect();
            let sigma = sigma.iter().all(|x| !x.is_nan()).then_some(sigma);
            fit_pseudocritical_drift(&series, sigma.as_deref())?
        }
    };
    Ok(Report::new(vec![estimates_table("scaling-fit", &fit)]).diagnostic("fit", fit_json(&fit)))
}

fn pipeline(s: &Settings, threads: usize) -> Result<Report, CliError> {
    let kernel = coupling_kernel(s)?;
    let gc = s.critical_field()?;
    // finite-range kernels (even q) have nothing to compress
    let expfit = match fit(s, &kernel) {
        Ok(a) => Json::obj([("terms", Json::Int(a.terms.len() as i64)), ("sup_error", Json::Num(a.sup_error))]),
        Err(CliError::Numerical(e @ fracising::Error::DegenerateKernel)) => Json::obj([("skipped", Json::str(e.code()))]),
        Err(e) => return Err(e),
    };
    let z_disp = fit_dispersion_z(&slope_samples(s, false)?)?;
    let z_bdg = fit_dispersion_z(&slope_samples(s, true)?)?;
    let sweep_settings = Settings { g_grid: None, method: Some(Method::Quadratic), ..s.clone() };
    let sw = sweep(&sweep_settings, threads)?;
    let gap_fit = sw.gap_fit.expect("single field sweep")?;
    let field = light_cone_field(s)?;
    let front_fit = fit_front_exponent(&front_of(s, &field)?)?;
    let mut t = Table::new("pipeline", vec!["q", "g_c", "z_gap", "z_front", "z_dispersion"]);
    t.push(vec![
        s.order()?.value().into(),
        gc.into(),
        gap_fit.value("z").into(),
        front_fit.value("z").into(),
        z_disp.value("z").into(),
    ]);
    Ok(Report::new(vec![t, sw.table])
        .diagnostic("expfit", expfit)
        .diagnostic("gap_fit", fit_json(&gap_fit))
        .diagnostic("front_fit", fit_json(&front_fit))
        .diagnostic("dispersion_fit_meanfield", fit_json(&z_disp))
        .diagnostic("dispersion_fit_bdg", fit_json(&z_bdg)))
}
