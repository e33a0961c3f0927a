//! Datasets behind the line-strength, width and Stark-shift figures.

use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;
use tpa_core::analytics::{averaged_n2_max, averaged_shift, averaged_width};
use tpa_core::averaging::QuadratureSpec;
use tpa_core::{DistributionKind, NormalizedParams, TpaError, VelocityDistribution};

use crate::output::{Cell, Table};

pub const FIG2_A_VALUES: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];
pub const FIG3_A_VALUES: [f64; 2] = [0.5, 1.0];

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FigureOptions {
    /// Overrides the default A values of figures 2 and 3.
    pub a_values: Option<Vec<f64>>,
    pub gamma_v_max: f64,
    pub points: usize,
    /// Δ/γ and μ used where the observable needs them; widths and Stark
    /// ratios do not depend on them at leading order.
    pub delta_big: f64,
    pub mu: f64,
    pub quadrature: QuadratureSpec,
}

impl Default for FigureOptions {
    fn default() -> Self {
        FigureOptions {
            a_values: None,
            gamma_v_max: 20.0,
            points: 101,
            delta_big: 1000.0,
            mu: 2f64.sqrt(),
            quadrature: QuadratureSpec::default(),
        }
    }
}

impl FigureOptions {
    fn grid(&self) -> Result<Vec<f64>, TpaError> {
        if self.points < 2 || !(self.gamma_v_max > 0.0 && self.gamma_v_max.is_finite()) {
            return Err(TpaError::InvalidParameter(
                "figure grid needs points >= 2 and gamma_v_max > 0".into(),
            ));
        }
        let n = self.points;
        Ok((0..n).map(|k| self.gamma_v_max * k as f64 / (n - 1) as f64).collect())
    }

    fn params(&self, a: f64, gv: f64, kind: DistributionKind) -> Result<NormalizedParams, TpaError> {
        let dist = VelocityDistribution::broadened(kind, gv)?;
        NormalizedParams::new(self.delta_big, 1.0, a, self.mu, 0.0, dist)
    }
}

fn a_label(a: f64) -> String {
    format!("A={a}")
}

/// One column per (label, closure over γ̃ᵥ); rows in grid order.
fn tabulate<F>(fig: u8, opts: &FigureOptions, columns: Vec<(String, F)>) -> Result<Table, TpaError>
where
    F: Fn(f64) -> Result<f64, TpaError> + Sync,
{
    let grid = opts.grid()?;
    let values: Vec<Vec<f64>> = grid
        .par_iter()
        .map(|&gv| columns.iter().map(|(_, f)| f(gv)).collect::<Result<Vec<_>, _>>())
        .collect::<Result<_, _>>()?;
    let mut names = vec!["gamma_v_tilde".to_string()];
    names.extend(columns.iter().map(|(n, _)| n.clone()));
    let rows = grid
        .iter()
        .zip(values)
        .map(|(&gv, vals)| std::iter::once(Cell::Float(gv)).chain(vals.into_iter().map(Cell::Float)).collect())
        .collect();
    let metadata = json!({
        "tool": "tpa figure",
        "version": tpa_core::VERSION,
        "figure": fig,
        "options": opts,
        "units": "frequencies in units of gamma",
    });
    Ok(Table { metadata, columns: names, rows })
}

type Column<'a> = (String, Box<dyn Fn(f64) -> Result<f64, TpaError> + Sync + 'a>);

pub fn run_figure(fig: u8, opts: &FigureOptions) -> Result<Table, TpaError> {
    let quad = opts.quadrature;
    let lor = DistributionKind::Lorentzian;
    let gauss = DistributionKind::Gaussian;
    let columns: Vec<Column> = match fig {
        2 => {
            // N₂ᵐᵃˣ normalized by its homogeneous standing-wave value.
            let norm = averaged_n2_max(&opts.params(1.0, 0.0, lor)?, &quad)?;
            let a_values = opts.a_values.clone().unwrap_or_else(|| FIG2_A_VALUES.to_vec());
            a_values
                .into_iter()
                .map(|a| -> Column {
                    (
                        a_label(a),
                        Box::new(move |gv| Ok(averaged_n2_max(&opts.params(a, gv, lor)?, &quad)? / norm)),
                    )
                })
                .collect()
        }
        3 => {
            let a_values = opts.a_values.clone().unwrap_or_else(|| FIG3_A_VALUES.to_vec());
            a_values
                .into_iter()
                .map(|a| -> Column {
                    (a_label(a), Box::new(move |gv| Ok(averaged_width(&opts.params(a, gv, lor)?, &quad)? / 2.0)))
                })
                .collect()
        }
        4 => [("lorentzian", lor), ("gaussian", gauss)]
            .into_iter()
            .map(|(name, kind)| -> Column {
                (
                    name.to_string(),
                    Box::new(move |gv| Ok(averaged_width(&opts.params(1.0, gv, kind)?, &quad)? / 2.0)),
                )
            })
            .collect(),
        5 => [("lorentzian", lor), ("gaussian", gauss)]
            .into_iter()
            .map(|(name, kind)| -> Column {
                (
                    name.to_string(),
                    Box::new(move |gv| {
                        let sw = averaged_shift(&opts.params(1.0, gv, kind)?, &quad)?;
                        let tw = averaged_shift(&opts.params(0.0, gv, kind)?, &quad)?;
                        Ok(sw / tw)
                    }),
                )
            })
            .collect(),
        _ => return Err(TpaError::InvalidParameter(format!("unknown figure {fig}; expected 2, 3, 4 or 5"))),
    };
    if fig == 5 && (opts.mu - 1.0).abs() < 1e-12 {
        return Err(TpaError::InvalidParameter("the Stark ratio is undefined at mu = 1".into()));
    }
    tabulate(fig, opts, columns)
}
