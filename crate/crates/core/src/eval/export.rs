use std::fs;
use std::path::Path;

use super::importance::ImportanceVector;
use crate::error::{Result, UdrlError};
use crate::udrl::TrainingLog;

/// Width of the trailing moving average applied to training curves.
pub const SMOOTHING_WINDOW: usize = 20;

/// Trailing moving average; early entries average over what is available.
pub fn smoothed(values: &[f64], window: usize) -> Vec<f64> {
    let window = window.max(1);
    (0..values.len())
        .map(|i| {
            let slice = &values[(i + 1).saturating_sub(window)..=i];
            slice.iter().sum::<f64>() / slice.len() as f64
        })
        .collect()
}

fn per_episode_mean(logs: &[TrainingLog]) -> Vec<f64> {
    let n = logs.iter().map(TrainingLog::len).max().unwrap_or(0);
    (0..n)
        .map(|i| {
            let values: Vec<f64> = logs.iter().filter_map(|l| l.records.get(i)).map(|r| r.total_return).collect();
            values.iter().sum::<f64>() / values.len() as f64
        })
        .collect()
}

/// Writes one row per episode with, for each labelled group of seed logs, the
/// across-seed mean return and its smoothed curve.
pub fn export_training_csv(groups: &[(&str, &[TrainingLog])], path: &Path) -> Result<()> {
    let columns: Vec<(Vec<f64>, Vec<f64>)> = groups
        .iter()
        .map(|(_, logs)| {
            let mean = per_episode_mean(logs);
            let smooth = smoothed(&mean, SMOOTHING_WINDOW);
            (mean, smooth)
        })
        .collect();
    let mut w = csv::Writer::from_path(path).map_err(|e| UdrlError::csv(path, e))?;
    let mut header = vec!["episode".to_string()];
    for (label, _) in groups {
        header.push(format!("{label}_mean"));
        header.push(format!("{label}_smoothed"));
    }
    w.write_record(&header).map_err(|e| UdrlError::csv(path, e))?;
    let n_rows = columns.iter().map(|(m, _)| m.len()).max().unwrap_or(0);
    for i in 0..n_rows {
        let mut row = vec![i.to_string()];
        for (mean, smooth) in &columns {
            let cell = |v: Option<&f64>| v.map(f64::to_string).unwrap_or_default();
            row.push(cell(mean.get(i)));
            row.push(cell(smooth.get(i)));
        }
        w.write_record(&row).map_err(|e| UdrlError::csv(path, e))?;
    }
    w.flush().map_err(|e| UdrlError::io(path, e))
}

/// Long format: `episode,seed,return,smoothed_return`, seeds in the given order.
pub fn export_seed_csv(logs: &[TrainingLog], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| UdrlError::csv(path, e))?;
    w.write_record(["episode", "seed", "return", "smoothed_return"])
        .map_err(|e| UdrlError::csv(path, e))?;
    for log in logs {
        let returns = log.returns();
        let smooth = smoothed(&returns, SMOOTHING_WINDOW);
        for (i, (r, s)) in returns.iter().zip(&smooth).enumerate() {
            w.write_record([i.to_string(), log.seed.to_string(), r.to_string(), s.to_string()])
                .map_err(|e| UdrlError::csv(path, e))?;
        }
    }
    w.flush().map_err(|e| UdrlError::io(path, e))
}

/// `index value` per line, ordered by feature index.
pub fn export_importance_dat(vec: &ImportanceVector, path: &Path) -> Result<()> {
    let body: String = vec.scores.iter().enumerate().map(|(i, v)| format!("{i} {v}\n")).collect();
    fs::write(path, body).map_err(|e| UdrlError::io(path, e))
}

pub fn parse_importance_dat(path: &Path) -> Result<Vec<f64>> {
    let text = fs::read_to_string(path).map_err(|e| UdrlError::io(path, e))?;
    let parse_err = |line: usize, message: String| UdrlError::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut scores = Vec::new();
    for (n, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let mut parts = line.split_whitespace();
        let (Some(idx), Some(value), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(parse_err(n + 1, "expected `index value`".into()));
        };
        let idx: usize = idx.parse().map_err(|_| parse_err(n + 1, format!("bad index {idx:?}")))?;
        if idx != scores.len() {
            return Err(parse_err(n + 1, format!("expected index {}, found {idx}", scores.len())));
        }
        let value: f64 = value.parse().map_err(|_| parse_err(n + 1, format!("bad value {value:?}")))?;
        scores.push(value);
    }
    Ok(scores)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::ImportanceKind;
    use crate::udrl::EpisodeRecord;

    fn log(seed: u64, returns: &[f64]) -> TrainingLog {
        TrainingLog {
            seed,
            records: returns
                .iter()
                .enumerate()
                .map(|(i, &r)| EpisodeRecord {
                    episode: i,
                    total_return: r,
                    length: 1,
                    command: None,
                    epsilon: 1.0,
                    wall_time_s: i as f64,
                })
                .collect(),
        }
    }

    #[test]
    fn step_function_smoothing() {
        let values: Vec<f64> = (0..40).map(|i| if i < 10 { 0.0 } else { 200.0 }).collect();
        let s = smoothed(&values, 20);
        assert_eq!(s[29], 200.0);
        assert_eq!(s[28], 190.0);
        assert_eq!(s[0], 0.0);
    }

    #[test]
    fn constant_logs_give_constant_columns() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("train.csv");
        let logs: Vec<TrainingLog> = (1..=5).map(|s| log(s, &[100.0; 30])).collect();
        export_training_csv(&[("rf", &logs)], &path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("episode,rf_mean,rf_smoothed"));
        let rows: Vec<&str> = lines.collect();
        assert_eq!(rows.len(), 30);
        assert!(rows.iter().enumerate().all(|(i, r)| *r == format!("{i},100,100")));
    }

    #[test]
    fn seed_csv_is_long_format() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("seeds.csv");
        export_seed_csv(&[log(3, &[1.0, 3.0]), log(4, &[2.0])], &path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert_eq!(text, "episode,seed,return,smoothed_return\n0,3,1,1\n1,3,3,2\n0,4,2,2\n");
    }

    #[test]
    fn importance_dat_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("imp.dat");
        let v = ImportanceVector {
            scores: vec![0.5, 0.3, 0.2],
            kind: ImportanceKind::GlobalMdi,
        };
        export_importance_dat(&v, &path).unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "0 0.5\n1 0.3\n2 0.2\n");
        assert_eq!(parse_importance_dat(&path).unwrap(), v.scores);
    }

    #[test]
    fn malformed_dat_reports_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.dat");
        fs::write(&path, "0 0.5\n2 0.5\n").unwrap();
        assert!(matches!(parse_importance_dat(&path), Err(UdrlError::Parse { line: 2, .. })));
    }
}
