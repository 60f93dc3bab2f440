//! Price tables, log returns and pairwise stable-index estimates.

use std::io::{Read, Write};
use std::path::Path;

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calib::{calibrate, CalibProblem, CalibResult, CollocationSpec, DataSource, FormConfig, Mode, QuadratureSpec};
use crate::charfn::IncrementSeries;
use crate::error::{Error, Result};
use crate::optimizer::OptimizerOptions;

/// Trading-day time step of market increments.
pub const TRADING_DAY_DT: f64 = 1.0;

/// Daily log returns are multiplied by this before calibration (percent
/// returns), so that the characteristic function decays on the unit scale
/// the collocation scan expects. The stable index is scale invariant.
pub const DEFAULT_RETURN_SCALE: f64 = 100.0;

/// Aligned price columns, one per ticker.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceTable {
    pub dates: Vec<NaiveDate>,
    pub tickers: Vec<String>,
    /// `prices[t][k]`: price of ticker `t` on `dates[k]`.
    pub prices: Vec<Vec<f64>>,
}

/// Reads a `date,TICKER1,...` CSV with ISO-8601 dates.
pub fn ingest_prices<P: AsRef<Path>>(path: P) -> Result<PriceTable> {
    let file = std::fs::File::open(path.as_ref())
        .map_err(|e| Error::data(format!("cannot open {}: {e}", path.as_ref().display())))?;
    PriceTable::from_reader(file)
}

impl PriceTable {
    pub fn from_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().flexible(true).trim(csv::Trim::All).from_reader(reader);
        let header = rdr.headers()?.clone();
        if header.len() < 2 || !header[0].eq_ignore_ascii_case("date") {
            return Err(Error::data("price CSV header must be date,<ticker>,..."));
        }
        let tickers: Vec<String> = header.iter().skip(1).map(str::to_owned).collect();
        if let Some(t) = tickers.iter().find(|t| t.is_empty()) {
            return Err(Error::data(format!("empty ticker name in header: {t:?}")));
        }
        let mut dates = Vec::new();
        let mut prices = vec![Vec::new(); tickers.len()];
        for (k, rec) in rdr.records().enumerate() {
            let rec = rec?;
            // Line 1 is the header.
            let row = k + 2;
            if rec.len() != header.len() {
                return Err(Error::data(format!(
                    "row {row}: expected {} fields, found {}",
                    header.len(),
                    rec.len()
                )));
            }
            let date = NaiveDate::parse_from_str(&rec[0], "%Y-%m-%d")
                .map_err(|e| Error::data(format!("row {row}, column date: cannot parse {:?}: {e}", &rec[0])))?;
            if let Some(&last) = dates.last() {
                if date <= last {
                    return Err(Error::data(format!("row {row}, column date: {date} does not follow {last}")));
                }
            }
            dates.push(date);
            for (t, field) in rec.iter().skip(1).enumerate() {
                let col = &tickers[t];
                if field.is_empty() {
                    return Err(Error::data(format!("row {row}, column {col}: missing value")));
                }
                let p: f64 = field
                    .parse()
                    .map_err(|_| Error::data(format!("row {row}, column {col}: cannot parse {field:?}")))?;
                if !(p > 0.0 && p.is_finite()) {
                    return Err(Error::data(format!("row {row}, column {col}: price {p} is not positive")));
                }
                prices[t].push(p);
            }
        }
        if dates.len() < 2 {
            return Err(Error::data("need at least two dated rows to form a return"));
        }
        Ok(PriceTable { dates, tickers, prices })
    }

    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    /// `ln(P_k / P_{k-1})` minus its sample mean, per ticker.
    pub fn demeaned_returns(&self) -> Vec<Vec<f64>> {
        self.prices.iter().map(|p| demeaned_log_returns(p)).collect()
    }

    /// Scaled demeaned returns of tickers `i` and `j` as one 2D series.
    pub fn pair_series(&self, i: usize, j: usize, scale: f64) -> Result<IncrementSeries> {
        if i >= self.tickers.len() || j >= self.tickers.len() || i == j {
            return Err(Error::config(format!("invalid ticker pair ({i}, {j})")));
        }
        let (a, b) = (demeaned_log_returns(&self.prices[i]), demeaned_log_returns(&self.prices[j]));
        IncrementSeries::new(TRADING_DAY_DT, a.iter().zip(&b).map(|(x, y)| [scale * x, scale * y]).collect())
    }
}

pub fn demeaned_log_returns(prices: &[f64]) -> Vec<f64> {
    let r: Vec<f64> = prices.windows(2).map(|w| (w[1] / w[0]).ln()).collect();
    let mean = r.iter().sum::<f64>() / r.len().max(1) as f64;
    r.into_iter().map(|x| x - mean).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PairwiseConfig {
    pub form: FormConfig,
    pub quadrature: QuadratureSpec,
    pub collocation: CollocationSpec,
    pub optimizer: OptimizerOptions,
    pub return_scale: f64,
    pub init_seed: u64,
    pub alpha_init: f64,
}

impl Default for PairwiseConfig {
    fn default() -> Self {
        PairwiseConfig {
            form: FormConfig::nn(5),
            quadrature: QuadratureSpec::default(),
            collocation: CollocationSpec::default(),
            optimizer: OptimizerOptions::default(),
            return_scale: DEFAULT_RETURN_SCALE,
            init_seed: 0,
            alpha_init: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairStatus {
    Converged,
    NotConverged,
    Failed,
}

#[derive(Debug, Clone, Serialize)]
pub struct PairOutcome {
    pub i: usize,
    pub j: usize,
    pub status: PairStatus,
    pub alpha_hat: Option<f64>,
    pub error: Option<String>,
    #[serde(skip)]
    pub result: Option<CalibResult>,
}

/// Symmetric matrix of pairwise index estimates with an empty diagonal.
#[derive(Debug, Clone)]
pub struct AlphaMatrix {
    pub tickers: Vec<String>,
    pub pairs: Vec<PairOutcome>,
}

impl AlphaMatrix {
    /// Estimate for tickers `i` and `j`; `None` on the diagonal or on failure.
    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        self.pairs.iter().find(|p| p.i == a && p.j == b).and_then(|p| p.alpha_hat)
    }

    pub fn status(&self, i: usize, j: usize) -> Option<PairStatus> {
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        self.pairs.iter().find(|p| p.i == a && p.j == b).map(|p| p.status)
    }

    /// Matrix CSV: header `,T1,...`; diagonal empty, failed cells `nan`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        let mut header = vec![String::new()];
        header.extend(self.tickers.iter().cloned());
        wtr.write_record(&header)?;
        let n = self.tickers.len();
        for i in 0..n {
            let mut row = vec![self.tickers[i].clone()];
            for j in 0..n {
                row.push(if i == j {
                    String::new()
                } else {
                    self.get(i, j).map_or_else(|| "nan".to_owned(), |a| a.to_string())
                });
            }
            wtr.write_record(&row)?;
        }
        wtr.flush()?;
        Ok(())
    }

    /// One row per pair: `ticker_a,ticker_b,alpha,status,error`.
    pub fn write_pairs_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        wtr.write_record(["ticker_a", "ticker_b", "alpha", "status", "error"])?;
        for p in &self.pairs {
            let status = match p.status {
                PairStatus::Converged => "converged",
                PairStatus::NotConverged => "not_converged",
                PairStatus::Failed => "failed",
            };
            wtr.write_record([
                self.tickers[p.i].as_str(),
                self.tickers[p.j].as_str(),
                &p.alpha_hat.map_or_else(String::new, |a| a.to_string()),
                status,
                p.error.as_deref().unwrap_or(""),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Stable-mode calibration of every unordered ticker pair. Pairs run in
/// parallel; results are ordered by `(i, j)`. A failing pair is recorded and
/// does not stop the others.
pub fn pairwise_alpha(table: &PriceTable, config: &PairwiseConfig) -> Result<AlphaMatrix> {
    let n = table.tickers.len();
    if n < 2 {
        return Err(Error::config("pairwise analysis needs at least two tickers"));
    }
    if !(config.return_scale > 0.0 && config.return_scale.is_finite()) {
        return Err(Error::config(format!("return scale must be positive, got {}", config.return_scale)));
    }
    config.optimizer.validate()?;
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let outcomes = pairs
        .par_iter()
        .map(|&(i, j)| {
            let run = || -> Result<CalibResult> {
                let series = table.pair_series(i, j, config.return_scale)?;
                let mut problem = CalibProblem::new(Mode::Stable, config.form.clone(), DataSource::Increments(series));
                problem.quadrature = config.quadrature.clone();
                problem.collocation = config.collocation.clone();
                problem.init_seed = config.init_seed;
                problem.alpha_init = config.alpha_init;
                calibrate(&problem, &config.optimizer)
            };
            match run() {
                Ok(r) => PairOutcome {
                    i,
                    j,
                    status: if r.diagnostics.converged { PairStatus::Converged } else { PairStatus::NotConverged },
                    alpha_hat: r.alpha_hat,
                    error: None,
                    result: Some(r),
                },
                Err(e) => {
                    log::warn!("pair ({}, {}) failed: {e}", table.tickers[i], table.tickers[j]);
                    PairOutcome { i, j, status: PairStatus::Failed, alpha_hat: None, error: Some(e.to_string()), result: None }
                }
            }
        })
        .collect();
    Ok(AlphaMatrix { tickers: table.tickers.clone(), pairs: outcomes })
}
