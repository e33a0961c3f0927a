//! Spectrum scans driven by a [`ScanConfig`].

use rayon::prelude::*;
use serde_json::json;
use tpa_core::analytics::{averaged_n2_max, averaged_shift, averaged_width, n2, LineshapeParams};
use tpa_core::averaging::{averaged_population, oracle_average, perturbative_average};
use tpa_core::{DistributionKind, NormalizedParams, TpaError};

use crate::config::{Observable, Point, ScanConfig};
use crate::output::{Cell, Table};

/// Value of one scan point, plus the oracle diagnostics when relevant.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Evaluation {
    pub value: f64,
    pub n_max: Option<usize>,
    pub residual: Option<f64>,
}

impl Evaluation {
    fn plain(value: f64) -> Self {
        Evaluation { value, n_max: None, residual: None }
    }
}

pub fn evaluate(config: &ScanConfig, point: &Point) -> Result<Evaluation, TpaError> {
    let p: NormalizedParams = point.normalized_with(config.dist)?;
    let quad = &config.quadrature;
    let gaussian = p.dist.kind == DistributionKind::Gaussian;
    let value = match config.observable {
        Observable::N2 if gaussian => perturbative_average(&p, quad, None)?,
        Observable::N2 => n2(&LineshapeParams::from_normalized(&p)?, p.delta),
        Observable::N2N3 => averaged_population(&p, quad)?,
        Observable::OracleAvg => {
            let avg = oracle_average(&p, quad, &config.oracle)?;
            return Ok(Evaluation { value: avg.value, n_max: Some(avg.n_max), residual: Some(avg.worst_residual) });
        }
        Observable::Width => averaged_width(&p, quad)?,
        Observable::Stark => averaged_shift(&p, quad)?,
        Observable::N2Max => averaged_n2_max(&p, quad)?,
    };
    Ok(Evaluation::plain(value))
}

/// Evaluate every point of the sweep on the current rayon pool; rows come
/// back in axis order regardless of scheduling.
pub fn run_scan(config: &ScanConfig) -> Result<Table, TpaError> {
    config.validate().map_err(|e| TpaError::InvalidParameter(e.0))?;
    let axis = config.sweep.values();
    let results: Vec<Evaluation> =
        axis.par_iter().map(|&v| evaluate(config, &config.point(v))).collect::<Result<_, _>>()?;

    let oracle = config.observable == Observable::OracleAvg;
    let mut columns = vec![config.sweep.axis.name().to_string(), config.observable.name().to_string()];
    if oracle {
        columns.push("n_max".into());
    }
    let rows = axis
        .iter()
        .zip(&results)
        .map(|(&x, r)| {
            let mut row = vec![Cell::Float(x), Cell::Float(r.value)];
            if let Some(n) = r.n_max {
                row.push(Cell::Count(n));
            }
            row
        })
        .collect();
    let mut metadata = json!({
        "tool": "tpa scan",
        "version": tpa_core::VERSION,
        "config": config,
        "units": "frequencies in units of gamma",
    });
    if oracle {
        let worst = results.iter().filter_map(|r| r.residual).fold(0.0, f64::max);
        metadata["worst_residual"] = json!(worst);
    }
    Ok(Table { metadata, columns, rows })
}
