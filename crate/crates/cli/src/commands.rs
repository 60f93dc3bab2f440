use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use levycal::calib::{calibrate, CalibProblem, DataSource, Mode};
use levycal::charfn::ecf;
use levycal::io::{load_increments, save_increments, write_ecf, write_gamma_curve, write_nu_grid};
use levycal::market::{ingest_prices, pairwise_alpha, TRADING_DAY_DT};
use levycal::simulate::{sample_stable_increments, sample_truncated_normal, RngState};
use levycal::{Error, FormSpec, FunctionalForm};
use serde_json::json;

use crate::config::RunConfig;
use crate::{Command, Paths};

/// Rows of the spectral plot CSV.
const PLOT_ANGLES: usize = 360;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Numerical(String),
    Core(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Core(Error::Io(e))
    }
}

impl CliError {
    /// Category label and exit code.
    pub fn category(&self) -> (&'static str, u8) {
        match self {
            CliError::Usage(_) => ("usage", 1),
            CliError::Numerical(_) => ("numerical", 3),
            CliError::Core(e) => match e {
                Error::Config(_) | Error::Domain(_) => ("usage", 1),
                Error::DivergentDensity { .. } | Error::Envelope { .. } => ("numerical", 3),
                Error::Data(_) | Error::Io(_) | Error::Csv(_) | Error::Json(_) => ("data", 2),
            },
        }
    }

    pub fn message(&self) -> String {
        match self {
            CliError::Usage(m) | CliError::Numerical(m) => m.clone(),
            CliError::Core(e) => e.to_string(),
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

struct Resolved {
    config: RunConfig,
    input: Option<PathBuf>,
    output: Option<PathBuf>,
}

impl Resolved {
    fn new(paths: Paths) -> Result<Self> {
        let config = RunConfig::load(paths.config.as_deref())?;
        let input = paths.input.or_else(|| config.input.clone());
        let output = paths.output.or_else(|| config.output.clone());
        Ok(Resolved { config, input, output })
    }

    fn input(&self) -> Result<&Path> {
        self.input.as_deref().ok_or_else(|| CliError::Usage("no input given (use --input or `input` in the config)".into()))
    }

    fn output(&self) -> Result<&Path> {
        self.output.as_deref().ok_or_else(|| CliError::Usage("no output given (use --output or `output` in the config)".into()))
    }

    fn output_dir(&self) -> Result<&Path> {
        let dir = self.output()?;
        std::fs::create_dir_all(dir)
            .map_err(|e| Error::Data(format!("cannot create output directory {}: {e}", dir.display())))?;
        Ok(dir)
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let file = File::create(path).map_err(|e| Error::Data(format!("cannot write {}: {e}", path.display())))?;
    Ok(BufWriter::new(file))
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut out = create(path)?;
    serde_json::to_writer_pretty(&mut out, value).map_err(Error::from)?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::SimulateStable { paths } => simulate_stable(Resolved::new(paths)?),
        Command::SimulateLevy { paths } => simulate_levy(Resolved::new(paths)?),
        Command::Ecf { paths, extent, grid } => ecf_grid(Resolved::new(paths)?, extent, grid),
        Command::Calibrate { paths, grid } => calibrate_cmd(Resolved::new(paths)?, grid),
        Command::Stocks { paths } => stocks(Resolved::new(paths)?),
        Command::Eval { form, output, angles, extent, grid } => eval(&form, &output, angles, extent, grid),
    }
}

fn simulate_stable(r: Resolved) -> Result<()> {
    let s = &r.config.simulation;
    let gamma = s.gamma;
    let series = sample_stable_increments(|t| gamma.at(t), s.alpha, s.dt, s.n, s.n_dirs, &RngState::new(s.seed))?;
    save_increments(&series, r.output()?)?;
    log::info!("wrote {} increments to {}", series.len(), r.output()?.display());
    Ok(())
}

fn simulate_levy(r: Resolved) -> Result<()> {
    let s = &r.config.simulation;
    let sample = sample_truncated_normal(s.dt, s.n, &RngState::new(s.seed))?;
    save_increments(&sample.series, r.output()?)?;
    log::info!("wrote {} increments to {}", sample.series.len(), r.output()?.display());
    Ok(())
}

fn square_grid(extent: f64, n: usize) -> Result<Vec<[f64; 2]>> {
    if n < 2 || !(extent > 0.0 && extent.is_finite()) {
        return Err(CliError::Usage(format!("grid needs at least 2 points and a positive extent, got {n} and {extent}")));
    }
    let h = 2.0 * extent / (n - 1) as f64;
    Ok((0..n).flat_map(|j| (0..n).map(move |i| [-extent + i as f64 * h, -extent + j as f64 * h])).collect())
}

fn ecf_grid(r: Resolved, extent: f64, grid: usize) -> Result<()> {
    let series = load_increments(r.input()?)?;
    let est = ecf(&series, &square_grid(extent, grid)?);
    let mut out = create(r.output()?)?;
    write_ecf(&est, &mut out)?;
    Ok(())
}

fn calibrate_cmd(r: Resolved, grid: usize) -> Result<()> {
    let c = &r.config;
    let series = load_increments(r.input()?)?;
    let dir = r.output_dir()?;
    let mut problem = CalibProblem::new(c.mode, c.form.clone(), DataSource::Increments(series));
    problem.quadrature = c.quadrature.clone();
    problem.collocation = c.collocation.clone();
    problem.init_seed = c.init_seed;
    problem.alpha_init = c.alpha_init;
    let result = calibrate(&problem, &c.optimizer)?;
    if !result.final_loss.is_finite() {
        return Err(CliError::Numerical(format!("final loss is {}", result.final_loss)));
    }
    for w in &result.diagnostics.warnings {
        log::warn!("{w}");
    }
    write_json(&dir.join("result.json"), &result)?;
    write_json(&dir.join("form.json"), &result.form)?;
    result.trace.write_csv(create(&dir.join("trace.csv"))?)?;
    match c.mode {
        Mode::Stable => write_gamma_curve(&result.gamma_curve(PLOT_ANGLES), create(&dir.join("gamma.csv"))?)?,
        Mode::Levy => write_nu_grid(&result.nu_grid(c.quadrature.extent, grid), create(&dir.join("nu.csv"))?)?,
    }
    match result.alpha_hat {
        Some(a) => println!("alpha_hat {a}  loss {:e}", result.final_loss),
        None => println!("loss {:e}", result.final_loss),
    }
    Ok(())
}

fn stocks(r: Resolved) -> Result<()> {
    let table = ingest_prices(r.input()?)?;
    let dir = r.output_dir()?;
    let config = r.config.pairwise();
    let matrix = pairwise_alpha(&table, &config)?;
    matrix.write_csv(create(&dir.join("alpha_matrix.csv"))?)?;
    matrix.write_pairs_csv(create(&dir.join("pairs.csv"))?)?;
    for p in &matrix.pairs {
        if let Some(res) = &p.result {
            let name = format!("gamma_{}_{}.csv", table.tickers[p.i], table.tickers[p.j]);
            write_gamma_curve(&res.gamma_curve(PLOT_ANGLES), create(&dir.join(name))?)?;
        }
    }
    let meta = json!({
        "dt": TRADING_DAY_DT,
        "dt_unit": "trading day",
        "returns": "log returns, demeaned per ticker over the full sample",
        "return_scale": config.return_scale,
        "observations": table.len().saturating_sub(1),
        "tickers": table.tickers,
        "config": config,
    });
    write_json(&dir.join("metadata.json"), &meta)?;
    let failed = matrix.pairs.iter().filter(|p| p.alpha_hat.is_none()).count();
    if failed > 0 {
        log::warn!("{failed} of {} pairs failed; see pairs.csv", matrix.pairs.len());
    }
    Ok(())
}

fn eval(form_path: &Path, output: &Path, angles: usize, extent: f64, grid: usize) -> Result<()> {
    let text = std::fs::read_to_string(form_path)
        .map_err(|e| Error::Data(format!("cannot read {}: {e}", form_path.display())))?;
    let spec = FormSpec::from_json(&text)?;
    let out = create(output)?;
    match spec.form.input_dim() {
        1 => {
            if angles == 0 {
                return Err(CliError::Usage("--angles must be positive".into()));
            }
            let curve: Vec<(f64, f64)> = (0..angles)
                .map(|k| {
                    let t = 2.0 * std::f64::consts::PI * k as f64 / angles as f64;
                    (t, spec.eval(&[t]))
                })
                .collect();
            write_gamma_curve(&curve, out)?;
        }
        _ => {
            let rows: Vec<(f64, f64, f64)> =
                square_grid(extent, grid)?.into_iter().map(|x| (x[0], x[1], spec.eval(&x))).collect();
            write_nu_grid(&rows, out)?;
        }
    }
    Ok(())
}
