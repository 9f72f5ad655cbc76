//! Per-strategy timing summaries across experiments.

use std::fmt::Write as _;

use crate::regret::RegretRecord;

/// Mean seconds per acquisition optimization, one column per benchmark and
/// one row per strategy. Strategies with no data anywhere are omitted.
#[derive(Debug, Clone)]
pub struct TimingTable {
    pub benchmarks: Vec<String>,
    pub strategies: Vec<String>,
    /// `means[row][col]`; `None` when that benchmark has no such strategy.
    pub means: Vec<Vec<Option<f64>>>,
}

/// Aggregate mean optimization times from one or more experiments' records.
pub fn timing_table(inputs: &[(String, Vec<RegretRecord>)]) -> TimingTable {
    // Union of start counts across inputs, ascending.
    let mut counts: Vec<usize> = Vec::new();
    for (_, records) in inputs {
        for r in records {
            for p in &r.per_n {
                if !counts.contains(&p.n) {
                    counts.push(p.n);
                }
            }
        }
    }
    counts.sort_unstable();

    let mut strategies = vec!["direct".to_string()];
    strategies.extend(counts.iter().map(|n| format!("local({n})")));
    let benchmarks: Vec<String> = inputs.iter().map(|(b, _)| b.clone()).collect();

    let mut means: Vec<Vec<Option<f64>>> = vec![vec![None; benchmarks.len()]; strategies.len()];
    for (col, (_, records)) in inputs.iter().enumerate() {
        if !records.is_empty() {
            let g: f64 =
                records.iter().map(|r| r.time_global_s).sum::<f64>() / records.len() as f64;
            means[0][col] = Some(g);
        }
        for (row, &n) in counts.iter().enumerate() {
            let times: Vec<f64> = records
                .iter()
                .flat_map(|r| r.per_n.iter().filter(|p| p.n == n).map(|p| p.time_s))
                .collect();
            if !times.is_empty() {
                means[row + 1][col] = Some(times.iter().sum::<f64>() / times.len() as f64);
            }
        }
    }

    // Drop strategies that have no data in any column.
    let keep: Vec<usize> = (0..strategies.len())
        .filter(|&row| means[row].iter().any(Option::is_some))
        .collect();
    TimingTable {
        benchmarks,
        strategies: keep.iter().map(|&r| strategies[r].clone()).collect(),
        means: keep.iter().map(|&r| means[r].clone()).collect(),
    }
}

impl TimingTable {
    /// CSV with header `strategy,<benchmark...>`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("strategy");
        for b in &self.benchmarks {
            let _ = write!(s, ",{b}");
        }
        s.push('\n');
        for (row, name) in self.strategies.iter().enumerate() {
            let _ = write!(s, "{name}");
            for cell in &self.means[row] {
                match cell {
                    Some(v) => {
                        let _ = write!(s, ",{v:.6}");
                    }
                    None => s.push(','),
                }
            }
            s.push('\n');
        }
        s
    }

    /// Aligned text table (seconds).
    pub fn to_text(&self) -> String {
        let name_w = self
            .strategies
            .iter()
            .map(|s| s.len())
            .max()
            .unwrap_or(8)
            .max("strategy".len());
        let col_w = self
            .benchmarks
            .iter()
            .map(|b| b.len())
            .max()
            .unwrap_or(10)
            .max(10);
        let mut s = format!("{:<name_w$}", "strategy");
        for b in &self.benchmarks {
            let _ = write!(s, "  {b:>col_w$}");
        }
        s.push('\n');
        for (row, name) in self.strategies.iter().enumerate() {
            let _ = write!(s, "{name:<name_w$}");
            for cell in &self.means[row] {
                match cell {
                    Some(v) => {
                        let _ = write!(s, "  {:>col_w$.3}", v);
                    }
                    None => {
                        let _ = write!(s, "  {:>col_w$}", "-");
                    }
                }
            }
            s.push('\n');
        }
        s
    }
}
