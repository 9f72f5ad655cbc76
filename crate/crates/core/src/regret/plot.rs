//! Static SVG plots of experiment records.
//!
//! Two panels per benchmark: the global optimizer's incumbent-best curve,
//! and the per-N regret-difference curves (raw series at reduced opacity
//! with their moving averages on top). The SVG is written directly with
//! fixed-precision coordinates, so identical records give identical bytes.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::regret::{moving_average, RegretRecord};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 50.0;

const PALETTE: [&str; 6] = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"];

/// Per-round aggregates underlying the two panels.
struct Curves {
    rounds: Vec<usize>,
    best_global: Vec<f64>,
    raw: Vec<Vec<f64>>, // one series per start count
    ma: Vec<Vec<f64>>,
}

fn aggregate(records: &[RegretRecord], start_counts: &[usize], window: usize) -> Curves {
    let max_round = records.iter().map(|r| r.round).max().unwrap_or(0);
    let n_rep: Vec<usize> = {
        let mut reps: Vec<usize> = records.iter().map(|r| r.repeat).collect();
        reps.sort_unstable();
        reps.dedup();
        reps
    };
    // Per-repeat running minimum of f_global, then mean across repeats.
    let mut best_global = Vec::with_capacity(max_round);
    let mut raw = vec![Vec::with_capacity(max_round); start_counts.len()];
    let mut running: std::collections::HashMap<usize, f64> =
        n_rep.iter().map(|&r| (r, f64::INFINITY)).collect();
    for round in 1..=max_round {
        let mut best_sum = 0.0;
        let mut best_cnt = 0usize;
        let mut diff_sum = vec![0.0; start_counts.len()];
        let mut diff_cnt = vec![0usize; start_counts.len()];
        for r in records.iter().filter(|r| r.round == round) {
            let e = running.get_mut(&r.repeat).unwrap();
            *e = e.min(r.f_global);
            best_sum += *e;
            best_cnt += 1;
            for (i, p) in r.per_n.iter().enumerate() {
                diff_sum[i] += p.regret_diff;
                diff_cnt[i] += 1;
            }
        }
        if best_cnt > 0 {
            best_global.push(best_sum / best_cnt as f64);
            for i in 0..start_counts.len() {
                raw[i].push(if diff_cnt[i] > 0 {
                    diff_sum[i] / diff_cnt[i] as f64
                } else {
                    f64::NAN
                });
            }
        }
    }
    let ma = raw.iter().map(|s| moving_average(s, window)).collect();
    Curves {
        rounds: (1..=best_global.len()).collect(),
        best_global,
        raw,
        ma,
    }
}

/// The CSV behind the plots, header `round,best_global,rd_raw_{N...},rd_ma_{N...}`.
pub fn plot_curves_csv(records: &[RegretRecord], start_counts: &[usize], window: usize) -> String {
    let c = aggregate(records, start_counts, window);
    let mut s = String::from("round,best_global");
    for n in start_counts {
        let _ = write!(s, ",rd_raw_{n}");
    }
    for n in start_counts {
        let _ = write!(s, ",rd_ma_{n}");
    }
    s.push('\n');
    for (i, round) in c.rounds.iter().enumerate() {
        let _ = write!(s, "{round},{}", c.best_global[i]);
        for series in &c.raw {
            let _ = write!(s, ",{}", series[i]);
        }
        for series in &c.ma {
            let _ = write!(s, ",{}", series[i]);
        }
        s.push('\n');
    }
    s
}

struct Frame {
    x_min: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
}

impl Frame {
    fn from_series(rounds: &[usize], series: &[&[f64]]) -> Frame {
        let x_min = 1.0;
        let x_max = rounds.len().max(2) as f64;
        let mut y_min = f64::INFINITY;
        let mut y_max = f64::NEG_INFINITY;
        for s in series {
            for &v in *s {
                if v.is_finite() {
                    y_min = y_min.min(v);
                    y_max = y_max.max(v);
                }
            }
        }
        if !y_min.is_finite() {
            y_min = 0.0;
            y_max = 1.0;
        }
        if y_max - y_min < 1e-12 {
            y_max = y_min + 1.0;
        }
        let pad = 0.05 * (y_max - y_min);
        Frame {
            x_min,
            x_max,
            y_min: y_min - pad,
            y_max: y_max + pad,
        }
    }

    fn px(&self, x: f64) -> f64 {
        MARGIN_L + (x - self.x_min) / (self.x_max - self.x_min) * (WIDTH - MARGIN_L - MARGIN_R)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - MARGIN_B
            - (y - self.y_min) / (self.y_max - self.y_min) * (HEIGHT - MARGIN_T - MARGIN_B)
    }
}

fn polyline(frame: &Frame, ys: &[f64], color: &str, opacity: f64, width: f64) -> String {
    let mut pts = String::new();
    for (i, &y) in ys.iter().enumerate() {
        if y.is_finite() {
            let _ = write!(pts, "{:.2},{:.2} ", frame.px((i + 1) as f64), frame.py(y));
        }
    }
    format!(
        "<polyline fill=\"none\" stroke=\"{color}\" stroke-opacity=\"{opacity:.2}\" \
         stroke-width=\"{width:.1}\" points=\"{}\"/>\n",
        pts.trim_end()
    )
}

fn svg_open(title: &str) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n\
         <rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n\
         <text x=\"{:.1}\" y=\"24\" font-family=\"sans-serif\" font-size=\"15\" \
         text-anchor=\"middle\">{title}</text>\n",
        WIDTH / 2.0
    )
}

fn axes(frame: &Frame, x_label: &str, y_label: &str) -> String {
    let mut s = String::new();
    let x0 = MARGIN_L;
    let x1 = WIDTH - MARGIN_R;
    let y0 = HEIGHT - MARGIN_B;
    let y1 = MARGIN_T;
    let _ = write!(
        s,
        "<rect x=\"{x0:.1}\" y=\"{y1:.1}\" width=\"{:.1}\" height=\"{:.1}\" fill=\"none\" \
         stroke=\"#333333\" stroke-width=\"1\"/>\n",
        x1 - x0,
        y0 - y1
    );
    // Corner tick labels carry the data range.
    let _ = write!(
        s,
        "<text x=\"{x0:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"11\">{:.4}</text>\n",
        y0 + 16.0,
        frame.x_min
    );
    let _ = write!(
        s,
        "<text x=\"{x1:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"11\" \
         text-anchor=\"end\">{:.4}</text>\n",
        y0 + 16.0,
        frame.x_max
    );
    let _ = write!(
        s,
        "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"11\" \
         text-anchor=\"end\">{:.4}</text>\n",
        x0 - 6.0,
        y0,
        frame.y_min
    );
    let _ = write!(
        s,
        "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"11\" \
         text-anchor=\"end\">{:.4}</text>\n",
        x0 - 6.0,
        y1 + 10.0,
        frame.y_max
    );
    let _ = write!(
        s,
        "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"12\" \
         text-anchor=\"middle\">{x_label}</text>\n",
        (x0 + x1) / 2.0,
        HEIGHT - 12.0
    );
    let _ = write!(
        s,
        "<text x=\"16\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"12\" \
         transform=\"rotate(-90 16 {:.1})\" text-anchor=\"middle\">{y_label}</text>\n",
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0
    );
    s
}

fn legend(entries: &[(String, &str)]) -> String {
    let mut s = String::new();
    for (i, (label, color)) in entries.iter().enumerate() {
        let y = MARGIN_T + 16.0 + 16.0 * i as f64;
        let x = WIDTH - MARGIN_R - 130.0;
        let _ = write!(
            s,
            "<line x1=\"{x:.1}\" y1=\"{y:.1}\" x2=\"{:.1}\" y2=\"{y:.1}\" stroke=\"{color}\" \
             stroke-width=\"2\"/>\n<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" \
             font-size=\"11\">{label}</text>\n",
            x + 22.0,
            x + 28.0,
            y + 4.0
        );
    }
    s
}

/// Write the two panels plus the underlying CSV into `out_dir`; returns the
/// paths written.
pub fn emit_plots(
    records: &[RegretRecord],
    start_counts: &[usize],
    window: usize,
    benchmark: &str,
    out_dir: &Path,
) -> Result<Vec<PathBuf>> {
    if records.is_empty() {
        return Err(Error::Config("no records to plot".into()));
    }
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir.display().to_string(), e))?;
    let c = aggregate(records, start_counts, window);

    // Upper panel: incumbent best of the global optimizer.
    let frame = Frame::from_series(&c.rounds, &[&c.best_global]);
    let mut svg = svg_open(&format!("{benchmark}: global optimizer"));
    svg.push_str(&axes(&frame, "round", "best f so far"));
    svg.push_str(&polyline(&frame, &c.best_global, PALETTE[0], 1.0, 2.0));
    svg.push_str("</svg>\n");
    let min_path = out_dir.join(format!("{benchmark}_min.svg"));
    fs::write(&min_path, svg).map_err(|e| Error::io(min_path.display().to_string(), e))?;

    // Lower panel: regret differences per start count.
    let all: Vec<&[f64]> = c.raw.iter().chain(c.ma.iter()).map(|v| v.as_slice()).collect();
    let frame = Frame::from_series(&c.rounds, &all);
    let mut svg = svg_open(&format!("{benchmark}: regret differences"));
    svg.push_str(&axes(&frame, "round", "|f(x_g) - f(x_m)|"));
    for (i, _) in start_counts.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        svg.push_str(&polyline(&frame, &c.raw[i], color, 0.3, 1.0));
    }
    for (i, _) in start_counts.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        svg.push_str(&polyline(&frame, &c.ma[i], color, 1.0, 2.0));
    }
    let entries: Vec<(String, &str)> = start_counts
        .iter()
        .enumerate()
        .map(|(i, n)| (format!("N = {n}"), PALETTE[i % PALETTE.len()]))
        .collect();
    svg.push_str(&legend(&entries));
    svg.push_str("</svg>\n");
    let diff_path = out_dir.join(format!("{benchmark}_diff.svg"));
    fs::write(&diff_path, svg).map_err(|e| Error::io(diff_path.display().to_string(), e))?;

    let csv = plot_curves_csv(records, start_counts, window);
    let csv_path = out_dir.join(format!("{benchmark}_curves.csv"));
    fs::write(&csv_path, csv).map_err(|e| Error::io(csv_path.display().to_string(), e))?;

    Ok(vec![min_path, diff_path, csv_path])
}
