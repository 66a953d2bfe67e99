//! Suite evaluation and report documents.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::config::{AgentConfig, Planner};
use crate::harness::episode::{run_episode, EpisodeResult};
use crate::harness::metrics::{compute_metrics, EpisodeRow, MetricsReport};
use crate::scene::Scene;

pub const WORKERS_ENV: &str = "SAFENAV_WORKERS";

/// Worker count from `SAFENAV_WORKERS`, else the machine's parallelism.
pub fn worker_count() -> Result<usize> {
    match std::env::var(WORKERS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(Error::Config(format!("{WORKERS_ENV} must be a positive integer, got `{v}`"))),
        },
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

/// Runs `f` over `items` on `workers` threads, preserving input order.
pub fn parallel_map<T: Sync, R: Send>(
    items: &[T],
    workers: usize,
    f: impl Fn(&T) -> Result<R> + Sync + Send,
) -> Result<Vec<R>> {
    use rayon::prelude::*;
    if workers <= 1 || items.len() <= 1 {
        return items.iter().map(f).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    pool.install(|| items.par_iter().map(f).collect())
}

/// Clean-pass and injector-pass episodes of one configuration, sorted by
/// scene id.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub clean: Vec<EpisodeResult>,
    pub dynamic: Vec<EpisodeResult>,
}

impl Evaluation {
    pub fn metrics(&self) -> Result<MetricsReport> {
        compute_metrics(&self.clean, &self.dynamic)
    }

    pub fn rows(&self) -> Vec<EpisodeRow> {
        self.clean
            .iter()
            .enumerate()
            .map(|(i, r)| EpisodeRow::new(r, self.dynamic.get(i)))
            .collect()
    }
}

fn sorted(scenes: &[Scene]) -> Vec<&Scene> {
    let mut v: Vec<&Scene> = scenes.iter().collect();
    v.sort_by(|a, b| a.id().cmp(b.id()));
    v
}

/// Runs every scene without injection, then again with `config.dynamic_p`
/// when it is positive.
pub fn evaluate(scenes: &[Scene], config: &AgentConfig, seed: u64, workers: usize) -> Result<Evaluation> {
    config.validate()?;
    if scenes.is_empty() {
        return Err(Error::Config("no scenes to evaluate".into()));
    }
    let scenes = sorted(scenes);
    let clean_cfg = AgentConfig {
        dynamic_p: 0.0,
        ..config.clone()
    };
    let clean = parallel_map(&scenes, workers, |s| run_episode(s, &clean_cfg, seed))?;
    let dynamic = if config.dynamic_p > 0.0 {
        parallel_map(&scenes, workers, |s| run_episode(s, config, seed))?
    } else {
        Vec::new()
    };
    Ok(Evaluation { clean, dynamic })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub seed: u64,
    pub scenes: usize,
    pub agent: AgentConfig,
    pub fingerprint: String,
}

/// Report for one configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config: RunConfig,
    pub aggregate: MetricsReport,
    pub episodes: Vec<EpisodeRow>,
}

pub fn run_report(scenes: &[Scene], config: &AgentConfig, seed: u64, workers: usize) -> Result<RunReport> {
    RunReport::new(&evaluate(scenes, config, seed, workers)?, config, seed)
}

impl RunReport {
    pub fn new(eval: &Evaluation, config: &AgentConfig, seed: u64) -> Result<Self> {
        Ok(RunReport {
            config: RunConfig {
                seed,
                scenes: eval.clean.len(),
                agent: config.clone(),
                fingerprint: config.fingerprint(),
            },
            aggregate: eval.metrics()?,
            episodes: eval.rows(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareRow {
    pub label: String,
    pub planner: String,
    pub mask: bool,
    pub reselect: bool,
    pub metrics: MetricsReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareEpisode {
    pub label: String,
    #[serde(flatten)]
    pub row: EpisodeRow,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareConfig {
    pub seed: u64,
    pub scenes: usize,
    pub base: AgentConfig,
}

/// Mask × re-selection matrix plus the JPS row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub config: CompareConfig,
    pub aggregate: Vec<CompareRow>,
    pub episodes: Vec<CompareEpisode>,
}

/// Variants evaluated by [`compare`], in report order.
pub fn compare_variants(base: &AgentConfig) -> Vec<(String, AgentConfig)> {
    let on = |b: bool| if b { "on" } else { "off" };
    let mut out = Vec::new();
    for mask in [false, true] {
        for reselect in [false, true] {
            let mut c = base.clone();
            c.mask = mask;
            c.reselect = reselect;
            if c.planner == Planner::Jps {
                c.planner = Planner::Oracle;
            }
            out.push((format!("mask={} reselect={}", on(mask), on(reselect)), c));
        }
    }
    let jps = AgentConfig {
        planner: Planner::Jps,
        mask: false,
        reselect: false,
        ..base.clone()
    };
    out.push(("jps".to_string(), jps));
    out
}

pub fn compare(scenes: &[Scene], base: &AgentConfig, seed: u64, workers: usize) -> Result<CompareReport> {
    let mut aggregate = Vec::new();
    let mut episodes = Vec::new();
    for (label, config) in compare_variants(base) {
        let started = std::time::Instant::now();
        let eval = evaluate(scenes, &config, seed, workers)?;
        // Timing is informational only and never enters a report.
        eprintln!("{label}: {:.2}s", started.elapsed().as_secs_f64());
        aggregate.push(CompareRow {
            label: label.clone(),
            planner: match config.planner {
                Planner::Oracle => "oracle",
                Planner::Linear(_) => "linear",
                Planner::Jps => "jps",
            }
            .to_string(),
            mask: config.mask,
            reselect: config.reselect,
            metrics: eval.metrics()?,
        });
        episodes.extend(eval.rows().into_iter().map(|row| CompareEpisode {
            label: label.clone(),
            row,
        }));
    }
    Ok(CompareReport {
        config: CompareConfig {
            seed,
            scenes: scenes.len(),
            base: base.clone(),
        },
        aggregate,
        episodes,
    })
}

pub fn to_json<T: Serialize>(report: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(report)? + "\n")
}

const METRIC_HEADER: &str = "episodes,tl,ne,ne_euclidean,osr,sr,spl,wc,nc,dc_sr,p_o";

fn metric_fields(m: &MetricsReport) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{},{},{}",
        m.episodes,
        m.tl,
        m.ne,
        m.ne_euclidean,
        m.osr,
        m.sr,
        m.spl,
        m.wc,
        m.nc,
        m.dc_sr.map(|v| v.to_string()).unwrap_or_default(),
        m.p_o
    )
}

const EPISODE_HEADER: &str = "scene_id,success,oracle_hit,termination,steps,rounds,tl,ne,ne_euclidean,shortest,spl,nc,wc,p_o,navigation_collisions,waypoint_collisions,dynamic_collisions,dynamic_success";

fn episode_fields(r: &EpisodeRow) -> String {
    let termination = serde_json::to_value(r.termination)
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .unwrap_or_default();
    format!(
        "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
        r.scene_id,
        r.success,
        r.oracle_hit,
        termination,
        r.steps,
        r.rounds,
        r.tl,
        r.ne,
        r.ne_euclidean,
        r.shortest,
        r.spl,
        r.nc,
        r.wc,
        r.p_o,
        r.navigation_collisions,
        r.waypoint_collisions,
        r.dynamic_collisions,
        r.dynamic_success.map(|b| b.to_string()).unwrap_or_default()
    )
}

/// Aggregate line followed by one line per episode.
pub fn run_csv(report: &RunReport) -> String {
    let mut out = format!("# aggregate\n{METRIC_HEADER}\n{}\n# episodes\n{EPISODE_HEADER}\n", metric_fields(&report.aggregate));
    for row in &report.episodes {
        out.push_str(&episode_fields(row));
        out.push('\n');
    }
    out
}

pub fn compare_csv(report: &CompareReport) -> String {
    let mut out = format!("# aggregate\nlabel,{METRIC_HEADER}\n");
    for row in &report.aggregate {
        out.push_str(&format!("{},{}\n", row.label, metric_fields(&row.metrics)));
    }
    out.push_str(&format!("# episodes\nlabel,{EPISODE_HEADER}\n"));
    for e in &report.episodes {
        out.push_str(&format!("{},{}\n", e.label, episode_fields(&e.row)));
    }
    out
}

/// Fixed-width table of a comparison, rates in percent.
pub fn compare_table(report: &CompareReport) -> String {
    let pct = |v: f64| format!("{:.1}", 100.0 * v);
    let mut out = format!(
        "{:<26} {:>6} {:>6} {:>6} {:>6} {:>6} {:>6} {:>6} {:>7} {:>6}\n",
        "variant", "TL", "NE", "OSR", "SR", "SPL", "W-C", "N-C", "D-C SR", "p_o"
    );
    for row in &report.aggregate {
        let m = &row.metrics;
        out.push_str(&format!(
            "{:<26} {:>6.2} {:>6.2} {:>6} {:>6} {:>6} {:>6} {:>6} {:>7} {:>6}\n",
            row.label,
            m.tl,
            m.ne,
            pct(m.osr),
            pct(m.sr),
            pct(m.spl),
            pct(m.wc),
            pct(m.nc),
            m.dc_sr.map(pct).unwrap_or_else(|| "-".into()),
            pct(m.p_o)
        ));
    }
    out
}
