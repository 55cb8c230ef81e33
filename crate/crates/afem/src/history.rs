//! Per-level records of an adaptive run and their CSV form.

use std::io::Write;
use std::time::Instant;

/// Wall-clock seconds spent in each phase of one level.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Timings {
    pub assemble_a: f64,
    pub assemble_f: f64,
    pub solve: f64,
    pub estimate: f64,
    pub mark: f64,
    pub refine: f64,
}

impl Timings {
    pub fn sum(&self) -> f64 {
        self.assemble_a + self.assemble_f + self.solve + self.estimate + self.mark + self.refine
    }
}

/// Adds the elapsed time of `f` to `slot`.
pub fn timed<R>(slot: &mut f64, f: impl FnOnce() -> R) -> R {
    let start = Instant::now();
    let r = f();
    *slot += start.elapsed().as_secs_f64();
    r
}

#[derive(Debug, Clone, PartialEq)]
pub struct Level {
    pub level: usize,
    pub n_dofs: usize,
    pub n_elements: usize,
    /// `(Σ η²)^{1/2}`.
    pub estimator: f64,
    pub h1_error: Option<f64>,
    pub dual_estimator: Option<f64>,
    /// Product of primal and dual estimators.
    pub goal_estimate: Option<f64>,
    /// Energy norms of the linearization updates, in order.
    pub inner_updates: Vec<f64>,
    pub timings: Timings,
    /// Cumulative time up to and including this level.
    pub total: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConvergenceHistory {
    pub levels: Vec<Level>,
}

pub const CSV_HEADER: [&str; 12] = [
    "level",
    "nDofs",
    "estimator",
    "H1Error",
    "goalEstimate",
    "tAssembleA",
    "tAssembleF",
    "tSolve",
    "tEstimate",
    "tMark",
    "tRefine",
    "tTotal",
];

fn optional(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

impl ConvergenceHistory {
    pub fn push(&mut self, level: Level) {
        self.levels.push(level);
    }

    pub fn last(&self) -> Option<&Level> {
        self.levels.last()
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> csv::Result<()> {
        let mut out = csv::Writer::from_writer(writer);
        out.write_record(CSV_HEADER)?;
        for l in &self.levels {
            let t = &l.timings;
            out.write_record([
                l.level.to_string(),
                l.n_dofs.to_string(),
                l.estimator.to_string(),
                optional(l.h1_error),
                optional(l.goal_estimate),
                t.assemble_a.to_string(),
                t.assemble_f.to_string(),
                t.solve.to_string(),
                t.estimate.to_string(),
                t.mark.to_string(),
                t.refine.to_string(),
                l.total.to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }

    /// Levels whose DOF count lies within the last decade of the run.
    pub fn last_decade(&self) -> &[Level] {
        let Some(last) = self.levels.last() else {
            return &[];
        };
        let cutoff = last.n_dofs as f64 / 10.0;
        let start = self.levels.iter().position(|l| l.n_dofs as f64 >= cutoff).unwrap_or(0);
        &self.levels[start..]
    }

    /// Least-squares slope of `log y` against `log nDofs` over the last
    /// decade; levels where `y` is missing or not positive are skipped.
    pub fn slope(&self, y: impl Fn(&Level) -> Option<f64>) -> Option<f64> {
        let points: Vec<(f64, f64)> = self
            .last_decade()
            .iter()
            .filter_map(|l| y(l).filter(|v| *v > 0.0).map(|v| (l.n_dofs as f64, v)))
            .collect();
        loglog_slope(&points)
    }
}

/// Least-squares slope of `log y` over `log x`.
pub fn loglog_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let logs: Vec<(f64, f64)> = points.iter().map(|(x, y)| (x.ln(), y.ln())).collect();
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// `y` at `nDofs = x`, linearly interpolated in log-log coordinates between
/// consecutive levels.
pub fn loglog_interpolate(levels: &[Level], y: impl Fn(&Level) -> f64, x: f64) -> Option<f64> {
    levels.windows(2).find_map(|w| {
        let (x0, x1) = (w[0].n_dofs as f64, w[1].n_dofs as f64);
        (x0 <= x && x <= x1).then(|| {
            let s = if x1 > x0 { (x.ln() - x0.ln()) / (x1.ln() - x0.ln()) } else { 0.0 };
            (y(&w[0]).ln() * (1.0 - s) + y(&w[1]).ln() * s).exp()
        })
    })
}
