use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use thermoreg_core::scoring::{hourly_scores, rolling_qualification, Score};

use crate::config::config_error;
use crate::output::RunDir;

/// The columns of a 2-second log that scoring needs; others are ignored.
#[derive(Debug, Deserialize)]
struct Sample {
    target: f64,
    measured: f64,
    regulation: f64,
    reserve: f64,
}

#[derive(Debug, Serialize)]
struct ScoreRow {
    hour: usize,
    delay: Option<f64>,
    accuracy: Option<f64>,
    precision: Option<f64>,
    composite: Option<f64>,
    rolling: Option<f64>,
    qualified: Option<bool>,
    operational: Option<bool>,
}

#[derive(Debug, Serialize)]
struct ScoreSummary {
    hours: usize,
    scored_hours: usize,
    final_rolling: Option<f64>,
    min_rolling: Option<f64>,
}

pub fn cmd_score(input: &Path, dir: &RunDir) -> Result<()> {
    let mut rd = csv::Reader::from_path(input).map_err(|e| config_error(format!("{}: {e}", input.display())))?;
    let samples: Vec<Sample> = rd.deserialize().collect::<Result<_, _>>().with_context(|| format!("reading {}", input.display()))?;
    let col = |f: fn(&Sample) -> f64| samples.iter().map(f).collect::<Vec<f64>>();
    let scores: Vec<Option<Score>> = hourly_scores(&col(|s| s.target), &col(|s| s.measured), &col(|s| s.regulation), &col(|s| s.reserve));
    let rolling = rolling_qualification(&scores.iter().map(|s| s.map(|s| s.composite)).collect::<Vec<_>>());
    let rows: Vec<ScoreRow> = scores
        .iter()
        .enumerate()
        .map(|(hour, s)| {
            let r = rolling.iter().find(|p| p.hour == hour);
            ScoreRow {
                hour,
                delay: s.map(|s| s.delay),
                accuracy: s.map(|s| s.accuracy),
                precision: s.map(|s| s.precision),
                composite: s.map(|s| s.composite),
                rolling: r.map(|p| p.average),
                qualified: r.map(|p| p.qualified),
                operational: r.map(|p| p.operational),
            }
        })
        .collect();
    dir.csv("scores.csv", &rows)?;
    dir.toml(
        "summary.toml",
        &ScoreSummary {
            hours: rows.len(),
            scored_hours: rolling.len(),
            final_rolling: rolling.last().map(|p| p.average),
            min_rolling: rolling.iter().map(|p| p.average).reduce(f64::min),
        },
    )
}
