use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::PathBuf;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use sqlhint_core::analysis::{segment_report, sessions, summarize, Profile, SegmentReport, SegmentRules, SessionSummary};
use sqlhint_core::mdp::dist_to_solution;
use sqlhint_core::store::read_events;

use crate::config::Config;
use crate::engine::Engine;

#[derive(Debug, Parser)]
#[command(name = "sqlhint", version, about = "Data-driven hints for SQL exercises")]
pub struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Store directory; overrides the configuration.
    #[arg(long, global = true)]
    pub store: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Add historical attempts from a JSON Lines file.
    Ingest {
        file: PathBuf,
        /// Regrade every attempt instead of trusting its stored score.
        #[arg(long)]
        rescore: bool,
    },
    /// Build the graph for an exercise and print its size.
    Build { exercise: String },
    /// Print the next-step hint for a query.
    Hint {
        exercise: String,
        #[arg(long)]
        query: String,
    },
    /// Run the HTTP service.
    Serve {
        #[arg(long)]
        addr: Option<String>,
    },
    /// Compute solving metrics from an event log.
    Analyze {
        events: PathBuf,
        /// JSON object mapping users to survey answers; enables the segment table.
        #[arg(long)]
        profiles: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
        /// Leave out sessions longer than this many seconds.
        #[arg(long)]
        max_secs: Option<f64>,
    },
    /// Write the exercise graph in Graphviz format.
    ExportDot {
        exercise: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

impl Cli {
    pub fn load_config(&self) -> anyhow::Result<Config> {
        let mut config = match &self.config {
            Some(p) => Config::load(p)?,
            None => Config::default(),
        };
        if let Some(s) = &self.store {
            config.store = s.clone();
        }
        Ok(config)
    }
}

#[derive(Serialize)]
struct SessionRow<'a> {
    user: &'a str,
    exercise_id: &'a str,
    submitted: bool,
    t_solving: f64,
    hints_employed: usize,
    n_branches: u64,
    points: usize,
    beta_all: Option<f64>,
    beta_pre_first_hint: Option<f64>,
    beta_post_first_hint: Option<f64>,
    beta_after_hint_avg: Option<f64>,
    delta_beta: Option<f64>,
}

#[derive(Serialize)]
struct SegmentRow {
    segment: String,
    sessions: usize,
    mean_t_solving: Option<f64>,
    mean_n_branches: Option<f64>,
    mean_beta_pre_fh: Option<f64>,
    mean_beta_aha: Option<f64>,
    mean_delta_beta: Option<f64>,
    p_aha_below_pre: Option<f64>,
}

/// Runs every verb except `serve`, writing results to `out`.
pub fn run(cli: &Cli, out: &mut dyn Write) -> anyhow::Result<()> {
    let config = cli.load_config()?;
    match &cli.command {
        Command::Serve { .. } => bail!("serve is handled by the binary"),
        Command::Ingest { file, rescore } => {
            let mut engine = Engine::open(config)?;
            let r = engine.store_mut().ingest_attempts(file, *rescore)?;
            writeln!(out, "accepted {} duplicates {} rejected {}", r.accepted, r.duplicates, r.rejected.len())?;
            for x in &r.rejected {
                writeln!(out, "line {}: {}", x.line, serde_json::to_string(&x.reason)?)?;
            }
        }
        Command::Build { exercise } => {
            let mut engine = Engine::open(config)?;
            let g = engine.graph(exercise)?;
            let dist = dist_to_solution(&g);
            writeln!(out, "states {}", g.len())?;
            writeln!(out, "branches {}", g.branch_count())?;
            writeln!(out, "passing finals {}", g.passing_finals().count())?;
            writeln!(out, "unreachable {}", dist.iter().filter(|d| d.is_none()).count())?;
            writeln!(out, "skipped attempts {}", g.skipped.len())?;
            if let Some(r) = &g.report {
                writeln!(out, "value iteration {} sweeps, max delta {:.3e}, converged {}", r.iterations, r.max_delta, r.converged)?;
            }
        }
        Command::Hint { exercise, query } => {
            let mut engine = Engine::open(config)?;
            let h = engine.suggest(exercise, query)?;
            writeln!(out, "{}", h.sql_text)?;
        }
        Command::Analyze {
            events,
            profiles,
            format,
            max_secs,
        } => {
            let mut engine = Engine::open(config)?;
            let log = read_events(events)?;
            let mut summaries = Vec::new();
            for s in sessions(&log) {
                let g = engine.graph(&s[0].exercise_id)?;
                summaries.extend(summarize(&s, &g));
            }
            let report = match profiles {
                Some(p) => {
                    let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                    let profiles: BTreeMap<String, Profile> = serde_json::from_str(&text)?;
                    let rules = SegmentRules {
                        max_solving_secs: *max_secs,
                        ..SegmentRules::default()
                    };
                    Some(segment_report(&summaries, &profiles, &rules))
                }
                None => None,
            };
            write_analysis(out, *format, &summaries, report.as_ref())?;
        }
        Command::ExportDot { exercise, out: path } => {
            let mut engine = Engine::open(config)?;
            let dot = engine.graph_dot(exercise)?;
            match path {
                Some(p) => fs::write(p, dot).with_context(|| format!("writing {}", p.display()))?,
                None => out.write_all(dot.as_bytes())?,
            }
        }
    }
    Ok(())
}

fn write_analysis(out: &mut dyn Write, format: Format, summaries: &[SessionSummary], report: Option<&SegmentReport>) -> anyhow::Result<()> {
    let rows: Vec<SessionRow> = summaries
        .iter()
        .map(|s| SessionRow {
            user: &s.user,
            exercise_id: &s.exercise_id,
            submitted: s.submitted,
            t_solving: s.t_solving,
            hints_employed: s.hints_employed,
            n_branches: s.n_branches,
            points: s.points.len(),
            beta_all: s.betas.beta_all,
            beta_pre_first_hint: s.betas.beta_pre_first_hint,
            beta_post_first_hint: s.betas.beta_post_first_hint,
            beta_after_hint_avg: s.betas.beta_after_hint_avg,
            delta_beta: s.betas.delta_beta,
        })
        .collect();
    match format {
        Format::Json => {
            let v = serde_json::json!({ "sessions": rows, "segments": report });
            writeln!(out, "{}", serde_json::to_string_pretty(&v)?)?;
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            for r in &rows {
                w.serialize(r)?;
            }
            out.write_all(&w.into_inner()?)?;
            if let Some(report) = report {
                writeln!(out)?;
                let mut w = csv::Writer::from_writer(Vec::new());
                for r in &report.rows {
                    w.serialize(SegmentRow {
                        segment: format!("{:?}", r.segment),
                        sessions: r.sessions,
                        mean_t_solving: r.mean_t_solving,
                        mean_n_branches: r.mean_n_branches,
                        mean_beta_pre_fh: r.mean_beta_pre_fh,
                        mean_beta_aha: r.mean_beta_aha,
                        mean_delta_beta: r.mean_delta_beta,
                        p_aha_below_pre: r.p_aha_below_pre,
                    })?;
                }
                out.write_all(&w.into_inner()?)?;
                writeln!(
                    out,
                    "# missing profiles: {}; unsegmented: {}; outliers excluded: {}",
                    report.missing_profile.len(),
                    report.unsegmented,
                    report.excluded_outliers
                )?;
            }
        }
    }
    Ok(())
}
