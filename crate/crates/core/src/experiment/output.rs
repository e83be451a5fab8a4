use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::config::ExperimentConfig;
use super::run::{run_oracle, run_replications, Model, Oracle, Replication, Row, EVAL_STREAM};
use crate::error::{Error, Result};

/// 17 significant digits: parses back to the identical `f64`.
pub fn fmt_num(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_num).unwrap_or_default()
}

fn parse_num(s: &str) -> Result<f64> {
    s.parse().map_err(|_| Error::Parse(format!("not a number: `{s}`")))
}

fn parse_opt(s: &str) -> Result<Option<f64>> {
    if s.is_empty() {
        Ok(None)
    } else {
        parse_num(s).map(Some)
    }
}

/// How the parameter vector appears in the long CSV.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ThetaLayout {
    /// One `theta_i` column per coordinate.
    Full(usize),
    /// `theta_norm` and the space-separated per-state argmax `greedy`.
    Tabular { n_actions: usize },
}

impl ThetaLayout {
    pub fn for_model(model: &Model, dim: usize) -> Self {
        match model {
            Model::Tabular(m) => ThetaLayout::Tabular {
                n_actions: m.n_actions(),
            },
            _ => ThetaLayout::Full(dim),
        }
    }

    fn headers(self) -> Vec<String> {
        match self {
            ThetaLayout::Full(k) => (0..k).map(|i| format!("theta_{i}")).collect(),
            ThetaLayout::Tabular { .. } => vec!["theta_norm".into(), "greedy".into()],
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ThetaColumns {
    Full(Vec<f64>),
    Tabular { norm: f64, greedy: Vec<usize> },
}

impl ThetaColumns {
    pub fn from_theta(theta: &[f64], layout: ThetaLayout) -> Self {
        match layout {
            ThetaLayout::Full(_) => ThetaColumns::Full(theta.to_vec()),
            ThetaLayout::Tabular { n_actions } => ThetaColumns::Tabular {
                norm: theta.iter().map(|t| t * t).sum::<f64>().sqrt(),
                greedy: theta
                    .chunks(n_actions)
                    .map(|row| (0..row.len()).fold(0, |best, a| if row[a] > row[best] { a } else { best }))
                    .collect(),
            },
        }
    }

    fn fields(&self) -> Vec<String> {
        match self {
            ThetaColumns::Full(v) => v.iter().map(|t| fmt_num(*t)).collect(),
            ThetaColumns::Tabular { norm, greedy } => vec![
                fmt_num(*norm),
                greedy.iter().map(|a| a.to_string()).collect::<Vec<_>>().join(" "),
            ],
        }
    }

    /// Scalar summaries averaged in the summary CSV.
    fn scalars(&self) -> Vec<f64> {
        match self {
            ThetaColumns::Full(v) => v.clone(),
            ThetaColumns::Tabular { norm, .. } => vec![*norm],
        }
    }
}

/// One line of the long CSV.
#[derive(Clone, Debug, PartialEq)]
pub struct LongRecord {
    pub experiment: String,
    pub algorithm: String,
    pub replication: u64,
    pub iteration: u64,
    pub samples: u64,
    pub j_hat: f64,
    pub r_hat: Option<f64>,
    pub t_hat: Option<f64>,
    pub theta: ThetaColumns,
    pub j_eval: Option<f64>,
}

impl LongRecord {
    pub fn from_row(config: &ExperimentConfig, replication: u64, row: &Row, layout: ThetaLayout) -> Self {
        LongRecord {
            experiment: config.name.clone(),
            algorithm: config.algorithm.name().to_string(),
            replication,
            iteration: row.iteration,
            samples: row.samples,
            j_hat: row.j_hat,
            r_hat: row.r_hat,
            t_hat: row.t_hat,
            theta: ThetaColumns::from_theta(&row.theta, layout),
            j_eval: row.j_eval,
        }
    }
}

const LONG_PREFIX: [&str; 8] = [
    "experiment",
    "algorithm",
    "replication",
    "iteration",
    "samples",
    "J_hat",
    "R_hat",
    "T_hat",
];

pub fn long_header(layout: ThetaLayout) -> Vec<String> {
    LONG_PREFIX
        .iter()
        .map(|s| s.to_string())
        .chain(layout.headers())
        .chain(std::iter::once("J_eval".to_string()))
        .collect()
}

pub fn write_long_csv(path: &Path, layout: ThetaLayout, records: &[LongRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(long_header(layout))?;
    for r in records {
        let mut fields = vec![
            r.experiment.clone(),
            r.algorithm.clone(),
            r.replication.to_string(),
            r.iteration.to_string(),
            r.samples.to_string(),
            fmt_num(r.j_hat),
            fmt_opt(r.r_hat),
            fmt_opt(r.t_hat),
        ];
        fields.extend(r.theta.fields());
        fields.push(fmt_opt(r.j_eval));
        w.write_record(&fields)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_long_csv(path: &Path) -> Result<(ThetaLayout, Vec<LongRecord>)> {
    let mut rd = csv::Reader::from_path(path)?;
    let header: Vec<String> = rd.headers()?.iter().map(str::to_string).collect();
    if header.len() < LONG_PREFIX.len() + 2 || header[..LONG_PREFIX.len()] != LONG_PREFIX || header.last().map(String::as_str) != Some("J_eval") {
        return Err(Error::Parse(format!("{}: not a long-format results file", path.display())));
    }
    let theta_cols = &header[LONG_PREFIX.len()..header.len() - 1];
    let tabular = theta_cols == ["theta_norm", "greedy"];
    let mut n_actions = 0;
    let mut records = Vec::new();
    for rec in rd.records() {
        let rec = rec?;
        let f: Vec<&str> = rec.iter().collect();
        let int = |s: &str| s.parse::<u64>().map_err(|_| Error::Parse(format!("not an integer: `{s}`")));
        let theta_fields = &f[LONG_PREFIX.len()..f.len() - 1];
        let theta = if tabular {
            let greedy = theta_fields[1]
                .split_whitespace()
                .map(|a| a.parse::<usize>().map_err(|_| Error::Parse(format!("bad action `{a}`"))))
                .collect::<Result<Vec<_>>>()?;
            n_actions = n_actions.max(greedy.iter().max().map_or(0, |a| a + 1));
            ThetaColumns::Tabular {
                norm: parse_num(theta_fields[0])?,
                greedy,
            }
        } else {
            ThetaColumns::Full(theta_fields.iter().map(|s| parse_num(s)).collect::<Result<_>>()?)
        };
        records.push(LongRecord {
            experiment: f[0].to_string(),
            algorithm: f[1].to_string(),
            replication: int(f[2])?,
            iteration: int(f[3])?,
            samples: int(f[4])?,
            j_hat: parse_num(f[5])?,
            r_hat: parse_opt(f[6])?,
            t_hat: parse_opt(f[7])?,
            theta,
            j_eval: parse_opt(f[f.len() - 1])?,
        });
    }
    let layout = if tabular {
        ThetaLayout::Tabular { n_actions }
    } else {
        ThetaLayout::Full(theta_cols.len())
    };
    Ok((layout, records))
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let std = if xs.len() > 1 {
        (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    (mean, std)
}

/// Cross-replication statistics at one sample checkpoint.
#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub samples: u64,
    pub replications: usize,
    pub j_hat: (f64, f64),
    pub j_eval: Option<(f64, f64)>,
    pub theta: Vec<(f64, f64)>,
}

/// At each checkpoint `budget * k / checkpoints`, every replication
/// contributes its latest record taken at or before that sample count. The
/// last checkpoint also covers records past the budget, since a batch in
/// progress is allowed to finish.
pub fn summarize(budget: u64, checkpoints: u64, records: &[LongRecord]) -> Vec<SummaryRow> {
    let mut by_rep: Vec<Vec<&LongRecord>> = Vec::new();
    for r in records {
        match by_rep.last_mut() {
            Some(v) if v[0].replication == r.replication => v.push(r),
            _ => by_rep.push(vec![r]),
        }
    }
    let mut out = Vec::new();
    for k in 0..=checkpoints {
        let mut point = (budget as u128 * k as u128 / checkpoints as u128) as u64;
        if k == checkpoints {
            point = records.iter().map(|r| r.samples).fold(point, u64::max);
        }
        let latest: Vec<&LongRecord> = by_rep
            .iter()
            .filter_map(|rows| {
                let idx = rows.partition_point(|r| r.samples <= point);
                idx.checked_sub(1).map(|i| rows[i])
            })
            .collect();
        if latest.is_empty() {
            continue;
        }
        let j_hat = mean_std(&latest.iter().map(|r| r.j_hat).collect::<Vec<_>>());
        let evals: Vec<f64> = by_rep
            .iter()
            .filter_map(|rows| {
                let idx = rows.partition_point(|r| r.samples <= point);
                rows[..idx].iter().rev().find_map(|r| r.j_eval)
            })
            .collect();
        let j_eval = (!evals.is_empty()).then(|| mean_std(&evals));
        let scalars: Vec<Vec<f64>> = latest.iter().map(|r| r.theta.scalars()).collect();
        let theta = (0..scalars[0].len())
            .map(|i| mean_std(&scalars.iter().map(|s| s[i]).collect::<Vec<_>>()))
            .collect();
        out.push(SummaryRow {
            samples: point,
            replications: latest.len(),
            j_hat,
            j_eval,
            theta,
        });
    }
    out
}

pub fn write_summary_csv(path: &Path, layout: ThetaLayout, rows: &[SummaryRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header: Vec<String> = ["samples", "replications", "J_hat_mean", "J_hat_std", "J_eval_mean", "J_eval_std"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let names = match layout {
        ThetaLayout::Full(k) => (0..k).map(|i| format!("theta_{i}")).collect(),
        ThetaLayout::Tabular { .. } => vec!["theta_norm".to_string()],
    };
    for n in &names {
        header.push(format!("{n}_mean"));
        header.push(format!("{n}_std"));
    }
    w.write_record(&header)?;
    for r in rows {
        let mut fields = vec![
            r.samples.to_string(),
            r.replications.to_string(),
            fmt_num(r.j_hat.0),
            fmt_num(r.j_hat.1),
            fmt_opt(r.j_eval.map(|e| e.0)),
            fmt_opt(r.j_eval.map(|e| e.1)),
        ];
        for (m, s) in &r.theta {
            fields.push(fmt_num(*m));
            fields.push(fmt_num(*s));
        }
        w.write_record(&fields)?;
    }
    w.flush()?;
    Ok(())
}

/// Key/value lines describing an oracle result.
pub fn oracle_lines(oracle: &Oracle) -> Vec<(String, String)> {
    match oracle {
        Oracle::ValueIteration(v) => vec![
            ("J_star".into(), fmt_num(v.j_star)),
            ("iterations".into(), v.iterations.to_string()),
            ("residual".into(), fmt_num(v.residual)),
        ],
        Oracle::Grid(g) => {
            let best = g.best();
            vec![
                ("theta_best".into(), fmt_num(g.theta_best)),
                ("J_best".into(), fmt_num(best.mean)),
                ("J_best_std_error".into(), fmt_num(best.std_error)),
                ("grid_points".into(), g.points.len().to_string()),
            ]
        }
        Oracle::Inventory {
            theta_star,
            cost_star,
            lipschitz,
            bound,
        } => {
            let mut v = vec![
                ("theta_star".into(), fmt_num(*theta_star)),
                ("cost_star".into(), fmt_num(*cost_star)),
                ("lipschitz".into(), fmt_num(*lipschitz)),
            ];
            if let Some(b) = bound {
                v.push(("approx_renewal_bound".into(), fmt_num(*b)));
            }
            v
        }
        Oracle::Quadratic { optimum } => vec![("theta_star".into(), fmt_num(*optimum))],
    }
}

/// Writes the oracle's table, if it has one, to `path`.
pub fn write_oracle_table(path: &Path, oracle: &Oracle) -> Result<bool> {
    let mut w = match oracle {
        Oracle::ValueIteration(_) | Oracle::Grid(_) => csv::Writer::from_path(path)?,
        _ => return Ok(false),
    };
    match oracle {
        Oracle::ValueIteration(v) => {
            w.write_record(["state", "value", "greedy_action"])?;
            for (s, (val, a)) in v.v.iter().zip(&v.greedy_policy).enumerate() {
                w.write_record([s.to_string(), fmt_num(*val), a.to_string()])?;
            }
        }
        Oracle::Grid(g) => {
            w.write_record(["theta", "J_mean", "J_std_error"])?;
            for p in &g.points {
                w.write_record([fmt_num(p.theta), fmt_num(p.mean), fmt_num(p.std_error)])?;
            }
        }
        _ => unreachable!(),
    }
    w.flush()?;
    Ok(true)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Complete,
    /// Some replications hit the cycle-length limit twice.
    Partial,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentReport {
    pub name: String,
    pub dir: PathBuf,
    pub status: Status,
    pub failed_replications: Vec<u64>,
    pub files: Vec<PathBuf>,
    pub oracle: Option<Oracle>,
    pub replications: Vec<Replication>,
}

fn manifest(config: &ExperimentConfig, status: Status, failed: &[(u64, String)], files: &[PathBuf], extra: &[(String, String)]) -> String {
    let mut m = String::new();
    let _ = writeln!(m, "tool = renewal-rl {}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(m, "experiment = {}", config.name);
    let _ = writeln!(m, "algorithm = {}", config.algorithm);
    let _ = writeln!(m, "status = {}", if status == Status::Complete { "complete" } else { "partial" });
    let _ = writeln!(m, "master_seed = {}", config.seed);
    let _ = writeln!(m, "replications = {}", config.replications);
    let _ = writeln!(m, "rng = ChaCha8 seeded from master_seed; learning stream = replication index");
    let _ = writeln!(m, "evaluation_stream = replication index + {EVAL_STREAM}");
    for (k, v) in extra {
        let _ = writeln!(m, "{k} = {v}");
    }
    for (rep, err) in failed {
        let _ = writeln!(m, "failed_replication = {rep}: {err}");
    }
    for f in files {
        let _ = writeln!(m, "file = {}", f.file_name().and_then(|n| n.to_str()).unwrap_or_default());
    }
    let _ = writeln!(m, "\n[{}]", config.name);
    for (k, v) in &config.raw {
        let shown = match k.as_str() {
            "seed" => config.seed.to_string(),
            "workers" => config.workers.to_string(),
            _ => v.clone(),
        };
        let _ = writeln!(m, "{k} = {shown}");
    }
    if !config.raw.contains_key("seed") {
        let _ = writeln!(m, "seed = {}", config.seed);
    }
    m
}

/// Runs one configured experiment and writes its artifacts under
/// `out_root/<output>`: `long.csv`, `summary.csv` and `manifest.txt` for
/// learners, `oracle.csv` and `manifest.txt` for oracles.
///
/// Replications that fail on cycle truncation are left out of the CSVs and
/// listed in the manifest, and the report status is [`Status::Partial`].
pub fn run_experiment(config: &ExperimentConfig, out_root: &Path) -> Result<ExperimentReport> {
    config.validate()?;
    let dir = out_root.join(&config.output);
    fs::create_dir_all(&dir)?;

    if !config.algorithm.is_learner() {
        let oracle = run_oracle(config)?;
        let mut files = Vec::new();
        let table = dir.join("oracle.csv");
        if write_oracle_table(&table, &oracle)? {
            files.push(table);
        }
        let man = dir.join("manifest.txt");
        files.push(man.clone());
        fs::write(&man, manifest(config, Status::Complete, &[], &files, &oracle_lines(&oracle)))?;
        return Ok(ExperimentReport {
            name: config.name.clone(),
            dir,
            status: Status::Complete,
            failed_replications: Vec::new(),
            files,
            oracle: Some(oracle),
            replications: Vec::new(),
        });
    }

    let (model, policy0, reps) = run_replications(config)?;
    let layout = ThetaLayout::for_model(&model, policy0.dim());
    let records: Vec<LongRecord> = reps
        .iter()
        .flat_map(|rep| rep.rows.iter().map(move |row| LongRecord::from_row(config, rep.index, row, layout)))
        .collect();
    let failed: Vec<(u64, String)> = reps
        .iter()
        .filter_map(|r| r.error.clone().map(|e| (r.index, e)))
        .collect();
    let status = if failed.is_empty() { Status::Complete } else { Status::Partial };

    let long = dir.join("long.csv");
    write_long_csv(&long, layout, &records)?;
    let summary = dir.join("summary.csv");
    write_summary_csv(&summary, layout, &summarize(config.budget, config.checkpoints, &records))?;
    let man = dir.join("manifest.txt");
    let files = vec![long, summary, man.clone()];
    fs::write(&man, manifest(config, status, &failed, &files, &[]))?;
    Ok(ExperimentReport {
        name: config.name.clone(),
        dir,
        status,
        failed_replications: failed.iter().map(|(i, _)| *i).collect(),
        files,
        oracle: None,
        replications: reps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(rep: u64, samples: u64, j: f64, eval: Option<f64>) -> LongRecord {
        LongRecord {
            experiment: "x".into(),
            algorithm: "rmc_sp".into(),
            replication: rep,
            iteration: samples / 10,
            samples,
            j_hat: j,
            r_hat: Some(j),
            t_hat: Some(1.0),
            theta: ThetaColumns::Full(vec![j]),
            j_eval: eval,
        }
    }

    #[test]
    fn numbers_round_trip_exactly() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, f64::MIN_POSITIVE, -0.0] {
            assert_eq!(parse_num(&fmt_num(x)).unwrap().to_bits(), x.to_bits());
        }
    }

    #[test]
    fn tabular_theta_summary() {
        let c = ThetaColumns::from_theta(&[3.0, 4.0, 0.0, 0.0, -1.0, 2.0], ThetaLayout::Tabular { n_actions: 2 });
        assert_eq!(
            c,
            ThetaColumns::Tabular {
                norm: 30.0f64.sqrt(),
                greedy: vec![1, 0, 1]
            }
        );
    }

    #[test]
    fn long_csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("long.csv");
        let records = vec![rec(0, 10, 0.1, None), rec(0, 20, 1.0 / 3.0, Some(-7.25)), rec(1, 15, 2.0, None)];
        write_long_csv(&path, ThetaLayout::Full(1), &records).unwrap();
        let (layout, back) = read_long_csv(&path).unwrap();
        assert_eq!(layout, ThetaLayout::Full(1));
        assert_eq!(back, records);

        let tab = vec![LongRecord {
            theta: ThetaColumns::Tabular {
                norm: 1.5,
                greedy: vec![2, 0, 1],
            },
            ..rec(3, 5, 0.5, Some(0.25))
        }];
        write_long_csv(&path, ThetaLayout::Tabular { n_actions: 3 }, &tab).unwrap();
        assert_eq!(read_long_csv(&path).unwrap().1, tab);
    }

    #[test]
    fn header_only_when_empty() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("long.csv");
        write_long_csv(&path, ThetaLayout::Full(1), &[]).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 1);
        assert!(summarize(0, 10, &[]).is_empty());
    }

    #[test]
    fn checkpoints_use_latest_record_per_replication() {
        let records = vec![
            rec(0, 10, 1.0, Some(5.0)),
            rec(0, 20, 3.0, None),
            rec(1, 15, 2.0, Some(7.0)),
            rec(1, 40, 6.0, Some(9.0)),
        ];
        let s = summarize(40, 4, &records);
        let at: Vec<u64> = s.iter().map(|r| r.samples).collect();
        assert_eq!(at, vec![10, 20, 30, 40]);
        assert_eq!(s[0].replications, 1);
        assert_eq!(s[0].j_hat, (1.0, 0.0));
        assert_eq!(s[1].j_hat.0, 2.5);
        assert_eq!(s[1].j_eval.unwrap().0, 6.0);
        assert_eq!(s[3].j_hat.0, 4.5);
        assert_eq!(s[3].j_eval.unwrap().0, 7.0);
        assert_eq!(s[3].theta[0].0, 4.5);
    }
}
