//! Aggregation and CSV tables: boxplots, mean ± 2σ spreads, paired greedy
//! reductions, and the run manifest embedded in every output.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{run_shots, BackendKind, EngineError, PbcProgram, SampleConfig};
use crate::gadget::AdaptiveCliffordCircuit;
use crate::greedy::{GreedyConfig, GreedyMode};

pub const TOOL_NAME: &str = "pbc";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

pub const BOXPLOT_SCHEMA: &str = "pbc-boxplot/1";
pub const SPREAD_SCHEMA: &str = "pbc-spread/1";
pub const REDUCTION_SCHEMA: &str = "pbc-reduction/1";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatsError {
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("expected schema {expected}, found {found:?}")]
    Schema { expected: &'static str, found: Option<String> },
}

fn parse_err(line: usize, reason: impl Into<String>) -> StatsError {
    StatsError::Parse { line, reason: reason.into() }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub seed: u64,
    pub backend: BackendKind,
    pub greedy: GreedyConfig,
    pub source: String,
    pub shots: usize,
}

impl RunManifest {
    pub fn new(source: impl Into<String>, cfg: &SampleConfig) -> Self {
        Self {
            tool: TOOL_NAME.into(),
            version: TOOL_VERSION.into(),
            seed: cfg.seed,
            backend: cfg.backend,
            greedy: cfg.greedy,
            source: source.into(),
            shots: cfg.shots,
        }
    }

    /// Single-line JSON used as a `# manifest:` comment in CSV outputs.
    pub fn comment_line(&self) -> String {
        format!("# manifest: {}", serde_json::to_string(self).expect("manifest serializes"))
    }

    pub fn from_comment_line(line: &str) -> Option<Self> {
        serde_json::from_str(line.strip_prefix("# manifest: ")?).ok()
    }
}

/// Program output: the manifest followed by one program per shot.
#[derive(Debug, Serialize)]
pub struct ProgramDocument<'a> {
    pub manifest: &'a RunManifest,
    pub programs: &'a [PbcProgram],
}

pub fn program_document(manifest: &RunManifest, programs: &[PbcProgram]) -> String {
    serde_json::to_string_pretty(&ProgramDocument { manifest, programs }).expect("document serializes")
}

/// Quantile with linear interpolation between order statistics.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty());
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxplotSummary {
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub whisker_low: f64,
    pub whisker_high: f64,
    pub outliers: Vec<f64>,
    pub mean: f64,
    pub max: f64,
    pub count: usize,
}

impl BoxplotSummary {
    /// `None` for empty input. NaNs are not allowed.
    pub fn new(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(|a, b| a.partial_cmp(b).expect("no NaN"));
        let (q1, median, q3) = (quantile(&v, 0.25), quantile(&v, 0.5), quantile(&v, 0.75));
        let iqr = q3 - q1;
        let (lo_fence, hi_fence) = (q1 - 1.5 * iqr, q3 + 1.5 * iqr);
        let inside = v.iter().copied().filter(|x| *x >= lo_fence && *x <= hi_fence);
        let whisker_low = inside.clone().fold(f64::INFINITY, f64::min);
        let whisker_high = inside.fold(f64::NEG_INFINITY, f64::max);
        let outliers = v.iter().copied().filter(|x| *x < lo_fence || *x > hi_fence).collect();
        Some(Self {
            q1,
            median,
            q3,
            whisker_low,
            whisker_high,
            outliers,
            mean: v.iter().sum::<f64>() / v.len() as f64,
            max: *v.last().unwrap(),
            count: v.len(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxplotRow {
    pub t: usize,
    pub summary: BoxplotSummary,
}

fn fmt(x: f64) -> String {
    format!("{x:.6}")
}

fn schema_and_body<'a>(
    text: &'a str,
    expected: &'static str,
    header: &str,
) -> Result<Vec<(usize, &'a str)>, StatsError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let first = lines.next().map(|(_, l)| l);
    if first != Some(&format!("# schema: {expected}")[..]) {
        return Err(StatsError::Schema { expected, found: first.map(str::to_string) });
    }
    let mut body = lines.filter(|(_, l)| !l.starts_with('#') && !l.trim().is_empty());
    match body.next() {
        Some((_, h)) if h == header => {}
        Some((n, _)) => return Err(parse_err(n, "unexpected header")),
        None => return Err(parse_err(1, "missing header")),
    }
    Ok(body.collect())
}

fn num<T: std::str::FromStr>(s: &str, line: usize) -> Result<T, StatsError> {
    s.parse().map_err(|_| parse_err(line, format!("bad number {s:?}")))
}

pub const BOXPLOT_HEADER: &str = "t,count,q1,median,q3,whisker_low,whisker_high,mean,max,outliers";

pub fn boxplot_csv(rows: &[BoxplotRow], manifest: Option<&RunManifest>) -> String {
    let mut s = format!("# schema: {BOXPLOT_SCHEMA}\n");
    if let Some(m) = manifest {
        s.push_str(&m.comment_line());
        s.push('\n');
    }
    s.push_str(BOXPLOT_HEADER);
    s.push('\n');
    for r in rows {
        let b = &r.summary;
        let outliers: Vec<String> = b.outliers.iter().map(|x| fmt(*x)).collect();
        s.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            r.t,
            b.count,
            fmt(b.q1),
            fmt(b.median),
            fmt(b.q3),
            fmt(b.whisker_low),
            fmt(b.whisker_high),
            fmt(b.mean),
            fmt(b.max),
            outliers.join(";")
        ));
    }
    s
}

pub fn parse_boxplot_csv(text: &str) -> Result<Vec<BoxplotRow>, StatsError> {
    schema_and_body(text, BOXPLOT_SCHEMA, BOXPLOT_HEADER)?
        .into_iter()
        .map(|(n, l)| {
            let f: Vec<&str> = l.split(',').collect();
            if f.len() != 10 {
                return Err(parse_err(n, "expected 10 fields"));
            }
            let outliers = if f[9].is_empty() {
                Vec::new()
            } else {
                f[9].split(';').map(|x| num(x, n)).collect::<Result<_, _>>()?
            };
            Ok(BoxplotRow {
                t: num(f[0], n)?,
                summary: BoxplotSummary {
                    count: num(f[1], n)?,
                    q1: num(f[2], n)?,
                    median: num(f[3], n)?,
                    q3: num(f[4], n)?,
                    whisker_low: num(f[5], n)?,
                    whisker_high: num(f[6], n)?,
                    mean: num(f[7], n)?,
                    max: num(f[8], n)?,
                    outliers,
                },
            })
        })
        .collect()
}

/// Mean with a ±2σ band (sample standard deviation).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spread {
    pub t: usize,
    pub go: usize,
    pub count: usize,
    pub mean: f64,
    pub std: f64,
}

impl Spread {
    pub fn new(t: usize, go: usize, values: &[f64]) -> Self {
        let n = values.len();
        let mean = if n == 0 { 0.0 } else { values.iter().sum::<f64>() / n as f64 };
        let std = if n < 2 {
            0.0
        } else {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        };
        Self { t, go, count: n, mean, std }
    }

    pub fn lower(&self) -> f64 {
        self.mean - 2.0 * self.std
    }

    pub fn upper(&self) -> f64 {
        self.mean + 2.0 * self.std
    }
}

pub const SPREAD_HEADER: &str = "t,go,count,mean,std,mean_minus_2sd,mean_plus_2sd";

pub fn spread_csv(rows: &[Spread], manifest: Option<&RunManifest>) -> String {
    let mut s = format!("# schema: {SPREAD_SCHEMA}\n");
    if let Some(m) = manifest {
        s.push_str(&m.comment_line());
        s.push('\n');
    }
    s.push_str(SPREAD_HEADER);
    s.push('\n');
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.t,
            r.go,
            r.count,
            fmt(r.mean),
            fmt(r.std),
            fmt(r.lower()),
            fmt(r.upper())
        ));
    }
    s
}

pub fn parse_spread_csv(text: &str) -> Result<Vec<Spread>, StatsError> {
    schema_and_body(text, SPREAD_SCHEMA, SPREAD_HEADER)?
        .into_iter()
        .map(|(n, l)| {
            let f: Vec<&str> = l.split(',').collect();
            if f.len() != 7 {
                return Err(parse_err(n, "expected 7 fields"));
            }
            Ok(Spread {
                t: num(f[0], n)?,
                go: num(f[1], n)?,
                count: num(f[2], n)?,
                mean: num(f[3], n)?,
                std: num(f[4], n)?,
            })
        })
        .collect()
}

/// One circuit's mean weights: the no-greedy original and one entry per order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReductionRow {
    pub circuit: String,
    pub original: f64,
    pub weights: Vec<f64>,
}

impl ReductionRow {
    /// Percent reduction of order index `k` relative to the original.
    pub fn delta_pct(&self, k: usize) -> f64 {
        if self.original == 0.0 {
            0.0
        } else {
            100.0 * (self.original - self.weights[k]) / self.original
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReductionTable {
    pub orders: Vec<usize>,
    pub rows: Vec<ReductionRow>,
}

impl ReductionTable {
    pub fn header(&self) -> String {
        let mut h = vec!["circuit".to_string(), "original".to_string()];
        h.extend(self.orders.iter().map(|g| format!("go{g}")));
        h.extend(self.orders.iter().map(|g| format!("delta_go{g}_pct")));
        h.join(",")
    }

    pub fn mean_delta_pct(&self, k: usize) -> f64 {
        self.rows.iter().map(|r| r.delta_pct(k)).sum::<f64>() / self.rows.len().max(1) as f64
    }

    pub fn to_csv(&self, manifest: Option<&RunManifest>) -> String {
        let mut s = format!("# schema: {REDUCTION_SCHEMA}\n");
        if let Some(m) = manifest {
            s.push_str(&m.comment_line());
            s.push('\n');
        }
        s.push_str(&self.header());
        s.push('\n');
        for r in &self.rows {
            let mut f = vec![r.circuit.clone(), fmt(r.original)];
            f.extend(r.weights.iter().map(|w| fmt(*w)));
            f.extend((0..self.orders.len()).map(|k| format!("{:.2}", r.delta_pct(k))));
            s.push_str(&f.join(","));
            s.push('\n');
        }
        s
    }

    /// Parses a table, checking each stored percentage against its recomputation.
    pub fn parse_csv(text: &str) -> Result<Self, StatsError> {
        let mut lines = text.lines().enumerate().filter(|(i, l)| *i == 0 || !l.starts_with('#'));
        let (_, first) = lines.next().unwrap_or((0, ""));
        if first != format!("# schema: {REDUCTION_SCHEMA}") {
            return Err(StatsError::Schema {
                expected: REDUCTION_SCHEMA,
                found: Some(first.to_string()),
            });
        }
        let (hn, header) = lines.next().ok_or_else(|| parse_err(1, "missing header"))?;
        let cols: Vec<&str> = header.split(',').collect();
        if cols.len() < 2 || cols[0] != "circuit" || cols[1] != "original" || !(cols.len() - 2).is_multiple_of(2) {
            return Err(parse_err(hn + 1, "bad header"));
        }
        let k = (cols.len() - 2) / 2;
        let orders = cols[2..2 + k]
            .iter()
            .map(|c| c.strip_prefix("go").and_then(|g| g.parse().ok()))
            .collect::<Option<Vec<usize>>>()
            .ok_or_else(|| parse_err(hn + 1, "bad order column"))?;
        let mut table = ReductionTable { orders, rows: Vec::new() };
        if table.header() != header {
            return Err(parse_err(hn + 1, "bad header"));
        }
        for (i, l) in lines {
            let n = i + 1;
            let f: Vec<&str> = l.split(',').collect();
            if f.len() != cols.len() {
                return Err(parse_err(n, "wrong field count"));
            }
            let row = ReductionRow {
                circuit: f[0].to_string(),
                original: num(f[1], n)?,
                weights: f[2..2 + k].iter().map(|x| num(x, n)).collect::<Result<_, _>>()?,
            };
            for j in 0..k {
                let stored: f64 = num(f[2 + k + j], n)?;
                if (stored - row.delta_pct(j)).abs() > 0.01 {
                    return Err(parse_err(n, format!("delta column {j} disagrees with recomputation")));
                }
            }
            table.rows.push(row);
        }
        Ok(table)
    }
}

/// Per-shot average weights of a batch of shots.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightRun {
    pub avg_weight: Vec<f64>,
    pub avg_weight_original: Vec<f64>,
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

impl WeightRun {
    /// Shots without quantum measurements carry no weight and are skipped.
    pub fn from_programs(programs: &[PbcProgram]) -> Self {
        let used = programs.iter().filter(|p| p.stats.r > 0);
        Self {
            avg_weight: used.clone().map(|p| p.stats.avg_weight).collect(),
            avg_weight_original: used.map(|p| p.stats.avg_weight_original).collect(),
        }
    }

    pub fn mean(&self) -> f64 {
        mean(&self.avg_weight)
    }

    pub fn mean_original(&self) -> f64 {
        mean(&self.avg_weight_original)
    }
}

pub fn weight_run(
    ac: &AdaptiveCliffordCircuit,
    cfg: &SampleConfig,
) -> Result<WeightRun, EngineError> {
    Ok(WeightRun::from_programs(&run_shots(ac, None, cfg)?))
}

/// Paired reduction row: every order runs on the same seed and outcome path.
/// The greedy mode comes from `base` (structured when it is off).
pub fn reduction_row(
    name: &str,
    ac: &AdaptiveCliffordCircuit,
    base: &SampleConfig,
    orders: &[usize],
) -> Result<ReductionRow, EngineError> {
    let mut cfg = *base;
    cfg.greedy = GreedyConfig::off();
    let original = weight_run(ac, &cfg)?.mean();
    let mode = match base.greedy.mode {
        GreedyMode::Off => GreedyMode::Structured,
        m => m,
    };
    let mut weights = Vec::with_capacity(orders.len());
    for &go in orders {
        cfg.greedy = GreedyConfig { mode, go, ..base.greedy };
        weights.push(weight_run(ac, &cfg)?.mean());
    }
    Ok(ReductionRow { circuit: name.to_string(), original, weights })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn boxplot_quartiles_and_outliers() {
        let v = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 100.0];
        let b = BoxplotSummary::new(&v).unwrap();
        assert_eq!((b.q1, b.median, b.q3), (3.0, 5.0, 7.0));
        assert_eq!(b.outliers, vec![100.0]);
        assert_eq!((b.whisker_low, b.whisker_high), (1.0, 8.0));
        assert_eq!(b.max, 100.0);
        assert!(BoxplotSummary::new(&[]).is_none());
    }

    #[test]
    fn quantile_interpolates() {
        assert_eq!(quantile(&[0.0, 10.0], 0.25), 2.5);
        assert_eq!(quantile(&[4.0], 0.75), 4.0);
    }

    #[test]
    fn spread_uses_sample_std() {
        let s = Spread::new(4, 1, &[2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0]);
        assert_eq!(s.mean, 5.0);
        assert!((s.std - (32.0f64 / 7.0).sqrt()).abs() < 1e-12);
        assert!((s.upper() - s.lower() - 4.0 * s.std).abs() < 1e-12);
    }

    #[test]
    fn reduction_round_trip_and_check() {
        let t = ReductionTable {
            orders: vec![0, 1, 2],
            rows: vec![ReductionRow { circuit: "c0".into(), original: 8.0, weights: vec![7.5, 6.0, 5.0] }],
        };
        let csv = t.to_csv(None);
        assert!(csv.contains("c0,8.000000,7.500000,6.000000,5.000000,6.25,25.00,37.50"));
        assert_eq!(ReductionTable::parse_csv(&csv).unwrap(), t);
        let bad = csv.replace("37.50", "30.00");
        assert!(ReductionTable::parse_csv(&bad).is_err());
    }

    #[test]
    fn manifest_comment_round_trip() {
        let m = RunManifest::new("x.circ", &SampleConfig::default());
        assert_eq!(RunManifest::from_comment_line(&m.comment_line()), Some(m));
    }
}
