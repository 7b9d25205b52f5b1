//! The preset fractal families.

use super::{AffineMap, IteratedFunctionSystem, Point, SawtoothParams};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Octagasket contraction ratio `1 - sqrt(2)/2`, the unique ratio for which
/// consecutive vertex-anchored octagon copies meet along a full edge.
pub const OCTAGASKET_RATIO: f64 = 1.0 - std::f64::consts::FRAC_1_SQRT_2;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "snake_case")]
pub enum Preset {
    IntervalSquare,
    IntervalRectangle { width: f64, height: f64 },
    Sawtooth { epsilon: f64, height: f64 },
    SgTriangle { epsilon: f64 },
    SierpinskiCarpet,
    Carpet1216,
    Carpet1316,
    Octagasket,
}

impl Preset {
    pub fn name(&self) -> &'static str {
        match self {
            Preset::IntervalSquare => "interval_square",
            Preset::IntervalRectangle { .. } => "interval_rectangle",
            Preset::Sawtooth { .. } => "sawtooth",
            Preset::SgTriangle { .. } => "sg_triangle",
            Preset::SierpinskiCarpet => "sierpinski_carpet",
            Preset::Carpet1216 => "carpet_12_16",
            Preset::Carpet1316 => "carpet_13_16",
            Preset::Octagasket => "octagasket",
        }
    }
}

/// Resolves a preset name plus optional parameters as used by the CLI.
pub fn parse_preset(name: &str, epsilon: Option<f64>, height: Option<f64>, width: Option<f64>) -> Result<Preset> {
    match name {
        "interval_square" => Ok(Preset::IntervalSquare),
        "interval_rectangle" => Ok(Preset::IntervalRectangle {
            width: width.unwrap_or(1.0),
            height: height.unwrap_or(1.0),
        }),
        "sawtooth" => Ok(Preset::Sawtooth {
            epsilon: epsilon.ok_or_else(|| Error::invalid("sawtooth requires --epsilon"))?,
            height: height.ok_or_else(|| Error::invalid("sawtooth requires --height"))?,
        }),
        "sg" | "sg_triangle" => Ok(Preset::SgTriangle { epsilon: epsilon.unwrap_or(0.0) }),
        "sc" | "sierpinski_carpet" => Ok(Preset::SierpinskiCarpet),
        "carpet_12_16" => Ok(Preset::Carpet1216),
        "carpet_13_16" => Ok(Preset::Carpet1316),
        "octagasket" => Ok(Preset::Octagasket),
        other => Err(Error::invalid(format!("unknown preset `{other}`"))),
    }
}

/// Returns the IFS and the base polygon `Omega_0` of a preset.
pub fn make_preset(preset: &Preset) -> Result<(IteratedFunctionSystem, Vec<Point>)> {
    match preset {
        Preset::IntervalSquare => interval_rectangle(1.0, 1.0, "interval_square"),
        Preset::IntervalRectangle { width, height } => {
            if !(*width > 0.0) || !(*height > 0.0) {
                return Err(Error::invalid("rectangle dimensions must be positive"));
            }
            interval_rectangle(*width, *height, "interval_rectangle")
        }
        Preset::Sawtooth { epsilon, height } => {
            let p = SawtoothParams::new(*epsilon, *height)?;
            let maps = vec![
                AffineMap::scale_translate(0.5, [0.0, 0.0])?,
                AffineMap::scale_translate(0.5, [0.5, 0.0])?,
            ];
            let base = vec![[-p.epsilon, 0.0], [1.0 + p.epsilon, 0.0], [0.5, p.height]];
            Ok((IteratedFunctionSystem::new(maps, "sawtooth")?, base))
        }
        Preset::SgTriangle { epsilon } => {
            if *epsilon < 0.0 {
                return Err(Error::invalid("sg_triangle epsilon must be nonnegative"));
            }
            let q = [[0.0, 0.0], [1.0, 0.0], [0.5, 3f64.sqrt() / 2.0]];
            let c = [0.5, 3f64.sqrt() / 6.0];
            let maps = q
                .iter()
                .map(|qi| AffineMap::scale_translate(0.5, [qi[0] / 2.0, qi[1] / 2.0]))
                .collect::<Result<Vec<_>>>()?;
            let base = q
                .iter()
                .map(|qi| {
                    [
                        c[0] + (1.0 + epsilon) * (qi[0] - c[0]),
                        c[1] + (1.0 + epsilon) * (qi[1] - c[1]),
                    ]
                })
                .collect();
            Ok((IteratedFunctionSystem::new(maps, "sg_triangle")?, base))
        }
        Preset::SierpinskiCarpet => grid_carpet(3, &[[1, 1]], "sierpinski_carpet"),
        Preset::Carpet1216 => grid_carpet(4, &[[1, 1], [2, 1], [1, 2], [2, 2]], "carpet_12_16"),
        // The paper removes "all but 3 of the inner squares"; the removed
        // inner positions are fixed here as (1,1), (2,1), (1,2) so results
        // are reproducible.
        Preset::Carpet1316 => grid_carpet(4, &[[1, 1], [2, 1], [1, 2]], "carpet_13_16"),
        Preset::Octagasket => {
            let q: Vec<Point> = (0..8)
                .map(|k| {
                    let a = (2 * k + 1) as f64 * PI / 8.0;
                    [a.cos(), a.sin()]
                })
                .collect();
            let rho = OCTAGASKET_RATIO;
            let maps = q
                .iter()
                .map(|qi| AffineMap::scale_translate(rho, [(1.0 - rho) * qi[0], (1.0 - rho) * qi[1]]))
                .collect::<Result<Vec<_>>>()?;
            Ok((IteratedFunctionSystem::new(maps, "octagasket")?, q))
        }
    }
}

fn interval_rectangle(a: f64, b: f64, name: &str) -> Result<(IteratedFunctionSystem, Vec<Point>)> {
    let maps = vec![
        AffineMap::scale_translate(0.5, [0.0, 0.0])?,
        AffineMap::scale_translate(0.5, [a / 2.0, 0.0])?,
    ];
    let base = vec![[0.0, 0.0], [a, 0.0], [a, b], [0.0, b]];
    Ok((IteratedFunctionSystem::new(maps, name)?, base))
}

/// Carpet IFS over a `j x j` grid of ratio-`1/j` maps, omitting `removed`
/// grid positions. Map order is row-major over kept positions.
fn grid_carpet(j: usize, removed: &[[usize; 2]], name: &str) -> Result<(IteratedFunctionSystem, Vec<Point>)> {
    let mut maps = Vec::new();
    for gy in 0..j {
        for gx in 0..j {
            if removed.contains(&[gx, gy]) {
                continue;
            }
            maps.push(AffineMap::scale_translate(
                1.0 / j as f64,
                [gx as f64 / j as f64, gy as f64 / j as f64],
            )?);
        }
    }
    let base = vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
    Ok((IteratedFunctionSystem::new(maps, name)?, base))
}
