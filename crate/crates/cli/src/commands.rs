use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use clap::ValueEnum;
use serde_json::Value;
use toepexp::block::{
    assemble_block_nonsym, assemble_block_tridiag, expm_block_nonsym_with, expm_block_tridiag_with, BlockOptions,
    Quadrature, Stabilization,
};
use toepexp::expm::{
    anti_tridiag_dense, approx_error_bound, band_error_bound, band_truncation_error, expm_anti_tridiag,
    expm_toeplitz_bessel, select_bandwidth,
};
use toepexp::heat::{
    crank_nicolson_1d, heat1d_propagator, heat1d_solve_with, heat2d_factors, heat2d_solve_with, propagator_norm,
    sine_errors, FactorSource, HeatConfig, Initial, Trajectory,
};
use toepexp::matrices::io::{format_complex, read_matrix_csv, to_json, write_matrix_csv, StoredMatrix};
use toepexp::matrices::{BandMatrix, DenseMatrix, TridiagSpec};
use toepexp::spectral::{expm_dense_small, expm_tridiag_exact};
use toepexp::{c64, C64};

use crate::bench::{self, BenchRow};
use crate::report::{create, Format, RunReport, Table};
use crate::{Cli, CliError, Command, Emit, ExpmMode, Factors, Family, GlobalOpts, HeatArgs, Profile, TridiagArgs};

type Result<T> = std::result::Result<T, CliError>;

const DEFAULT_TOL: f64 = 1e-12;

pub(crate) fn dispatch(cli: &Cli) -> Result<RunReport> {
    let g = &cli.global;
    match &cli.command {
        Command::Expm { tri, mode, band, compare, check_positivity } => {
            expm(g, tri, *mode, *band, *compare, *check_positivity)
        }
        Command::Anti { a, b, n, compare, identity_check } => anti(g, *a, *b, *n, *compare, *identity_check),
        Command::Block { m, nmat, z, a, c, n, t1, t2, compare } => {
            let (m, nmat) = match (m, nmat) {
                (Some(m), Some(nm)) => (read_matrix(m)?, read_matrix(nm)?),
                _ => bench::demo_blocks(),
            };
            let coupling = match (z, a, c) {
                (_, Some(a), Some(c)) => Coupling::Pair(*a, *c),
                (z, _, _) => Coupling::Symmetric(z.unwrap_or(c64(1.0, 0.0))),
            };
            block(g, &m, &nmat, coupling, *n, *t1, *t2, *compare)
        }
        Command::Bench { family, sizes, trials, a, b, c, a_sweep, materialize, memory_cap_mb, block_size } => {
            let plan = BenchPlan {
                family: *family,
                sizes,
                trials: *trials,
                coeffs: (*a, *b, *c),
                a_sweep: a_sweep.as_deref(),
                materialize: *materialize,
                memory_cap: memory_cap_mb * (1 << 20),
                block_size: *block_size,
            };
            run_bench(g, &plan)
        }
        Command::Heat(args) => heat(g, args),
        Command::Bandselect { tri, max_d, measure } => bandselect(g, tri, *max_d, *measure),
    }
}

fn name<T: ValueEnum>(v: T) -> String {
    v.to_possible_value().map(|p| p.get_name().to_string()).unwrap_or_default()
}

fn read_matrix(path: &Path) -> Result<DenseMatrix> {
    let f = File::open(path).map_err(|e| CliError::Usage(format!("cannot open {}: {e}", path.display())))?;
    Ok(read_matrix_csv(f)?)
}

fn write_matrix(g: &GlobalOpts, m: &StoredMatrix, report: &mut RunReport) -> Result<()> {
    let Some(path) = &g.out else { return Ok(()) };
    let f = create(path)?;
    match g.format {
        Format::Csv => write_matrix_csv(&m.to_dense(), BufWriter::new(f))?,
        Format::Json => std::fs::write(path, to_json(m)?).map_err(CliError::io)?,
    }
    report.outputs.push(path.display().to_string());
    Ok(())
}

fn write_table(g: &GlobalOpts, t: &Table, report: &mut RunReport) -> Result<()> {
    let Some(path) = &g.out else { return Ok(()) };
    t.write(BufWriter::new(create(path)?), g.format)?;
    report.outputs.push(path.display().to_string());
    Ok(())
}

fn tridiag_params(report: &mut RunReport, a: C64, b: C64, c: C64, n: usize) {
    report.param("a", format_complex(a)).param("b", format_complex(b)).param("c", format_complex(c)).param("n", n);
}

fn negative_entries(m: &DenseMatrix) -> usize {
    m.as_array().iter().filter(|z| z.re < 0.0).count()
}

fn expm(
    g: &GlobalOpts,
    tri: &TridiagArgs,
    mode: ExpmMode,
    band: Option<usize>,
    compare: Option<ExpmMode>,
    check_positivity: bool,
) -> Result<RunReport> {
    let spec = TridiagSpec::new(tri.a, tri.b, tri.c, tri.n)?;
    let mut report = RunReport::new("expm", g.seed);
    tridiag_params(&mut report, tri.a, tri.b, tri.c, tri.n);
    report.param("mode", name(mode));
    let d = match (band, g.tol) {
        (Some(d), _) => Some(d),
        (None, Some(tol)) if mode == ExpmMode::Bessel => {
            report.param("tol", tol);
            Some(select_bandwidth(&spec, tol).selected_d)
        }
        _ => None,
    };
    if let Some(d) = d {
        if d >= spec.n {
            return Err(CliError::Usage(format!("--band {d} must be below n = {}", spec.n)));
        }
        report.param("band", d);
        report.metric("band_bound", band_error_bound(&spec, d)?);
    }

    // a·c = 0 has no Bessel representation; its exact closed form is cheap
    let mode = if mode == ExpmMode::Bessel && spec.coupling().is_none() {
        report.metric("route", "closed_form");
        ExpmMode::Exact
    } else {
        mode
    };
    let stored = match (mode, d) {
        (ExpmMode::Bessel, Some(d)) => StoredMatrix::Band(expm_toeplitz_bessel(&spec)?.materialize_band(d)?),
        (_, Some(d)) => StoredMatrix::Band(BandMatrix::from_dense(&build(&spec, mode)?, d)?),
        (_, None) => StoredMatrix::Dense(build(&spec, mode)?),
    };
    let dense = stored.to_dense();
    if !dense.is_finite() {
        return Err(CliError::Numeric("result has non-finite entries".into()));
    }
    report.metric("norm_inf", dense.norm_inf());
    if let Some(z) = spec.coupling() {
        report.metric("approx_bound", approx_error_bound(spec.b, z, spec.n));
    }
    if let Some(other) = compare {
        report.param("compare", name(other));
        let reference = build(&spec, other)?;
        report.metric("error", dense.diff_norm_inf(&reference)?);
    }
    if check_positivity {
        let k = negative_entries(&dense);
        eprintln!("negative_entries: {k}");
        report.metric("negative_entries", k);
        report.metric("negative_fraction", k as f64 / (spec.n * spec.n) as f64);
    }
    write_matrix(g, &stored, &mut report)?;
    Ok(report)
}

fn build(spec: &TridiagSpec, mode: ExpmMode) -> Result<DenseMatrix> {
    Ok(match mode {
        ExpmMode::Bessel if spec.coupling().is_some() => expm_toeplitz_bessel(spec)?.materialize_dense(),
        ExpmMode::Bessel | ExpmMode::Exact => expm_tridiag_exact(spec)?,
        ExpmMode::DenseOracle => expm_dense_small(&spec.to_dense())?,
    })
}

fn anti(g: &GlobalOpts, a: C64, b: C64, n: usize, compare: bool, identity_check: bool) -> Result<RunReport> {
    let mut report = RunReport::new("anti", g.seed);
    report.param("a", format_complex(a)).param("b", format_complex(b)).param("n", n);
    let e = expm_anti_tridiag(a, b, n)?;
    report.metric("norm_inf", e.norm_inf());
    if compare {
        let oracle = expm_dense_small(&anti_tridiag_dense(a, b, n))?;
        report.metric("error", e.diff_norm_inf(&oracle)?);
    }
    if identity_check {
        let inv = expm_anti_tridiag(-a, -b, n)?;
        report.metric("identity_error", e.matmul(&inv)?.diff_norm_inf(&DenseMatrix::identity(n))?);
    }
    write_matrix(g, &StoredMatrix::Dense(e), &mut report)?;
    Ok(report)
}

enum Coupling {
    Symmetric(C64),
    Pair(C64, C64),
}

#[allow(clippy::too_many_arguments)]
fn block(
    g: &GlobalOpts,
    m: &DenseMatrix,
    nmat: &DenseMatrix,
    coupling: Coupling,
    n: usize,
    t1: Option<usize>,
    t2: Option<usize>,
    compare: bool,
) -> Result<RunReport> {
    let mut report = RunReport::new("block", g.seed);
    let tol = g.tol.unwrap_or(DEFAULT_TOL);
    let opts = BlockOptions {
        quadrature: t1.map_or(Quadrature::Adaptive { tol, max: 4096 }, Quadrature::Fixed),
        stabilization: t2.map_or(Stabilization::Adaptive { tol }, Stabilization::Fixed),
    };
    report.param("block_size", m.rows()).param("n", n);
    let (rep, q) = match coupling {
        Coupling::Symmetric(z) => {
            report.param("z", format_complex(z));
            (expm_block_tridiag_with(m, nmat, z, n, &opts)?, compare.then(|| assemble_block_tridiag(m, nmat, z, n)))
        }
        Coupling::Pair(a, c) => {
            report.param("a", format_complex(a)).param("c", format_complex(c));
            (expm_block_nonsym_with(m, nmat, a, c, n, &opts)?, compare.then(|| assemble_block_nonsym(m, nmat, a, c, n)))
        }
    };
    report.metric("t1", rep.t1).metric("t2", rep.t2);
    let e = rep.materialize();
    report.metric("norm_inf", e.norm_inf());
    if let Some(q) = q {
        report.metric("error", e.diff_norm_inf(&expm_dense_small(&q?)?)?);
    }
    write_matrix(g, &StoredMatrix::Dense(e), &mut report)?;
    Ok(report)
}

struct BenchPlan<'a> {
    family: Family,
    sizes: &'a [usize],
    trials: usize,
    coeffs: (C64, C64, C64),
    a_sweep: Option<&'a [f64]>,
    materialize: bench::Materialize,
    memory_cap: u64,
    block_size: Option<usize>,
}

fn run_bench(g: &GlobalOpts, plan: &BenchPlan) -> Result<RunReport> {
    let mut report = RunReport::new("bench", g.seed);
    report
        .param("family", name(plan.family))
        .param("sizes", plan.sizes.to_vec())
        .param("trials", plan.trials)
        .param("materialize", name(plan.materialize));
    if plan.sizes.is_empty() || plan.sizes.windows(2).any(|w| w[0] > w[1]) {
        return Err(CliError::Usage("--sizes must be a non-empty ascending list".into()));
    }
    if plan.trials == 0 {
        if let Some(path) = &g.out {
            create(path)?;
            report.outputs.push(path.display().to_string());
        }
        report.metric("rows", 0);
        return Ok(report);
    }
    let tol = g.tol.unwrap_or(DEFAULT_TOL);
    let blocks = match plan.block_size {
        Some(m) => bench::random_blocks(m, g.seed),
        None => bench::demo_blocks(),
    };
    let order = |n: usize| match plan.family {
        Family::Tridiag => n,
        Family::Block => n * blocks.0.rows(),
    };
    let mut warned = false;
    for &n in plan.sizes {
        let need = bench::oracle_bytes(order(n));
        if need > plan.memory_cap {
            eprintln!("warning: dense oracle at n = {} needs about {} MiB", order(n), need >> 20);
            warned = true;
        }
    }
    report.metric("memory_warning", warned);

    let mut rows: Vec<(Option<f64>, BenchRow)> = Vec::new();
    for &n in plan.sizes {
        match (plan.family, plan.a_sweep) {
            (Family::Tridiag, Some(sweep)) => {
                for &a in sweep {
                    let spec = TridiagSpec::new(c64(a, 0.0), c64(0.0, 0.0), c64(-a, 0.0), n)?;
                    rows.push((Some(a), bench::bench_tridiag(&spec, plan.materialize, tol, plan.trials)?));
                }
            }
            (Family::Tridiag, None) => {
                let (a, b, c) = plan.coeffs;
                let spec = TridiagSpec::new(a, b, c, n)?;
                rows.push((None, bench::bench_tridiag(&spec, plan.materialize, tol, plan.trials)?));
            }
            (Family::Block, _) => rows.push((None, bench::bench_block(&blocks.0, &blocks.1, n, plan.trials)?)),
        }
    }
    let sweep = plan.a_sweep.is_some() && plan.family == Family::Tridiag;
    let mut table = Table::new(if sweep { &["a", "n", "t_method", "t_oracle", "ratio"] } else { &["n", "t_method", "t_oracle", "ratio"] });
    for (a, r) in &rows {
        let mut row = vec![r.n as f64, r.t_method, r.t_oracle, r.ratio()];
        if let Some(a) = a {
            row.insert(0, *a);
        }
        table.push(row);
    }
    let ratios: Vec<f64> = rows.iter().map(|(_, r)| r.ratio()).collect();
    report.metric("rows", rows.len());
    report.metric("min_ratio", ratios.iter().copied().fold(f64::INFINITY, f64::min));
    report.metric("max_ratio", ratios.iter().copied().fold(0.0, f64::max));
    write_table(g, &table, &mut report)?;
    Ok(report)
}

fn heat_config(args: &HeatArgs) -> Result<HeatConfig> {
    if let Some(path) = &args.config {
        return Ok(HeatConfig::load(path)?);
    }
    let mut cfg = match args.dims {
        1 => HeatConfig::new_1d(args.jx, args.steps),
        2 => HeatConfig::new_2d(args.jx, args.jy.unwrap_or(args.jx), args.steps),
        d => return Err(CliError::Usage(format!("--dims must be 1 or 2, got {d}"))),
    };
    cfg = match (args.dt, args.mu) {
        (Some(dt), _) => cfg.with_dt(dt),
        (None, mu) => cfg.with_mu(mu.unwrap_or(1.0)),
    };
    cfg = cfg.with_diffusivity(args.diffusivity);
    if let Some(d) = args.band {
        cfg = cfg.with_band(d);
    }
    if let Some(d) = args.band_y {
        cfg = cfg.with_band_y(d);
    }
    if args.initial == Profile::Spike {
        let y = (args.dims == 2).then(|| args.spike_y.unwrap_or(0.5));
        cfg = cfg.with_initial(Initial::Spike { x: args.spike_x, y });
    }
    cfg.validate()?;
    Ok(cfg)
}

fn errors_or_nan(cfg: &HeatConfig, traj: &Trajectory) -> Vec<f64> {
    sine_errors(cfg, traj).unwrap_or_else(|_| vec![f64::NAN; traj.times.len()])
}

fn max_finite(v: &[f64]) -> Value {
    let m = v.iter().copied().filter(|x| x.is_finite()).fold(f64::NEG_INFINITY, f64::max);
    if m.is_finite() {
        m.into()
    } else {
        Value::Null
    }
}

fn min_entry(traj: &Trajectory) -> f64 {
    traj.diagnostics.iter().map(|s| s.min).fold(f64::INFINITY, f64::min)
}

fn heat(g: &GlobalOpts, args: &HeatArgs) -> Result<RunReport> {
    let cfg = heat_config(args)?;
    let source = match args.factors {
        Factors::Bessel => FactorSource::Bessel,
        Factors::Exact => FactorSource::Exact,
    };
    let mut report = RunReport::new("heat", g.seed);
    report
        .param("config", serde_json::to_value(&cfg).map_err(CliError::io)?)
        .param("emit", name(args.emit))
        .param("factors", name(args.factors));
    report.metric("dt", cfg.time_step()).metric("dx", cfg.dx()).metric("mu_x", cfg.mu_x());

    let solve = |src| if cfg.dims == 1 { heat1d_solve_with(&cfg, src) } else { heat2d_solve_with(&cfg, src) };
    if cfg.dims == 1 {
        let gm = heat1d_propagator(&cfg, source)?;
        report.metric("band", gm.bandwidth()).metric("propagator_norm", propagator_norm(&gm));
    } else {
        let (k, gm) = heat2d_factors(&cfg, source)?;
        report
            .metric("mu_y", cfg.mu_y())
            .metric("band", gm.bandwidth())
            .metric("band_y", k.bandwidth())
            .metric("propagator_norm", propagator_norm(&k) * propagator_norm(&gm));
    }
    let traj = solve(source)?;
    let errors = errors_or_nan(&cfg, &traj);
    report
        .metric("max_error", max_finite(&errors[1..]))
        .metric("final_error", max_finite(&errors[errors.len() - 1..]))
        .metric("min_entry", min_entry(&traj));

    let steps = 1..traj.times.len();
    match args.emit {
        Emit::Trajectory => {
            if let Some(path) = &g.out {
                let f = BufWriter::new(create(path)?);
                match g.format {
                    Format::Csv => traj.write_csv(f)?,
                    Format::Json => std::fs::write(path, traj.to_json()?).map_err(CliError::io)?,
                }
                report.outputs.push(path.display().to_string());
            }
        }
        Emit::Errors => {
            let mut t = Table::new(&["step", "t", "error", "min", "norm"]);
            for k in steps {
                let s = traj.diagnostics[k];
                t.push(vec![k as f64, traj.times[k], errors[k], s.min, s.norm_inf]);
            }
            write_table(g, &t, &mut report)?;
        }
        Emit::Comparison if cfg.dims == 1 => {
            let cn = crank_nicolson_1d(&cfg)?;
            let cn_errors = errors_or_nan(&cfg, &cn);
            report.metric("cn_max_error", max_finite(&cn_errors[1..])).metric("cn_min_entry", min_entry(&cn));
            let mut t = Table::new(&["step", "t", "error", "error_cn", "min", "min_cn"]);
            for k in steps {
                t.push(vec![
                    k as f64,
                    traj.times[k],
                    errors[k],
                    cn_errors[k],
                    traj.diagnostics[k].min,
                    cn.diagnostics[k].min,
                ]);
            }
            write_table(g, &t, &mut report)?;
        }
        Emit::Comparison => {
            let other_source = match source {
                FactorSource::Bessel => FactorSource::Exact,
                FactorSource::Exact => FactorSource::Bessel,
            };
            let other = solve(other_source)?;
            let other_errors = errors_or_nan(&cfg, &other);
            report.metric("max_difference", traj.max_difference(&other));
            let mut t = Table::new(&["step", "t", "error", "error_other", "difference"]);
            for k in steps {
                let gap = traj.states[k].iter().zip(&other.states[k]).fold(0.0f64, |m, (p, q)| m.max((p - q).abs()));
                t.push(vec![k as f64, traj.times[k], errors[k], other_errors[k], gap]);
            }
            write_table(g, &t, &mut report)?;
        }
    }
    Ok(report)
}

fn bandselect(g: &GlobalOpts, tri: &TridiagArgs, max_d: Option<usize>, measure: bool) -> Result<RunReport> {
    let spec = TridiagSpec::new(tri.a, tri.b, tri.c, tri.n)?;
    let tol = g.tol.unwrap_or(DEFAULT_TOL);
    let mut report = RunReport::new("bandselect", g.seed);
    tridiag_params(&mut report, tri.a, tri.b, tri.c, tri.n);
    report.param("tol", tol);
    let budget = select_bandwidth(&spec, tol);
    report
        .metric("selected_d", budget.selected_d)
        .metric("approx_bound", budget.approx_bound)
        .metric("band_bound", budget.band_bound)
        .metric("satisfiable", budget.satisfiable);
    let last = max_d.unwrap_or(budget.selected_d).min(spec.n - 1);
    let rep = if measure { Some(expm_toeplitz_bessel(&spec)?) } else { None };
    let mut t = Table::new(if measure { &["d", "bound", "measured"] } else { &["d", "bound"] });
    for d in 0..=last {
        let mut row = vec![d as f64, band_error_bound(&spec, d)?];
        if let Some(rep) = &rep {
            row.push(band_truncation_error(rep, d));
        }
        t.push(row);
    }
    write_table(g, &t, &mut report)?;
    Ok(report)
}
