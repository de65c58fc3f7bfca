use std::collections::HashMap;
use std::path::PathBuf;

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

use ctxed_prompt::{
    generate_all, prompt_hash, render_prompt, sample_shots, score_responses, HttpClient, LlmClient, ResponseCache,
    ShotConfig, ShotMode, StubClient, Template, TemplateKind,
};

use super::{create_out, load, write_json, write_jsonl};
use crate::config::resolve;
use crate::error::{CliError, CliResult};
use crate::manifest::Recorder;
use crate::Common;

pub const PROMPTS_FILE: &str = "prompts.jsonl";
pub const RESPONSES_FILE: &str = "responses.jsonl";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum TemplateChoice {
    /// Zero-shot when both the shot percentage and minimum count are 0, else few-shot.
    #[default]
    Auto,
    Few,
    Zero,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BuildConfig {
    pub shot_percent: f64,
    pub min_count: usize,
    pub temperature: f64,
    pub seed: u64,
    pub mode: ShotMode,
    pub template: TemplateChoice,
}

impl Default for BuildConfig {
    fn default() -> Self {
        let s = ShotConfig::default();
        BuildConfig {
            shot_percent: s.shot_percent,
            min_count: s.min_count,
            temperature: s.temperature,
            seed: s.seed,
            mode: s.mode,
            template: TemplateChoice::Auto,
        }
    }
}

impl BuildConfig {
    fn shots(&self) -> ShotConfig {
        ShotConfig {
            shot_percent: self.shot_percent,
            min_count: self.min_count,
            temperature: self.temperature,
            seed: self.seed,
            mode: self.mode,
        }
    }

    fn kind(&self) -> TemplateKind {
        match self.template {
            TemplateChoice::Few => TemplateKind::Few,
            TemplateChoice::Zero => TemplateKind::Zero,
            TemplateChoice::Auto if self.shots().is_zero_shot() => TemplateKind::Zero,
            TemplateChoice::Auto => TemplateKind::Few,
        }
    }
}

#[derive(Debug, Args)]
pub struct BuildArgs {
    #[command(flatten)]
    pub common: Common,
    /// Corpus the exemplars are drawn from.
    #[arg(long)]
    pub train: PathBuf,
    /// Sentences to build prompts for.
    #[arg(long)]
    pub corpus: PathBuf,
    /// Fraction of each type's mentions used as exemplars.
    #[arg(long)]
    pub shots: Option<f64>,
    #[arg(long)]
    pub min_count: Option<usize>,
    #[arg(long)]
    pub temperature: Option<f64>,
    #[arg(long, value_enum)]
    pub template: Option<TemplateChoice>,
    /// Replace the built-in template text.
    #[arg(long)]
    pub template_file: Option<PathBuf>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct PromptRow {
    pub id: String,
    pub prompt_sha256: String,
    pub temperature: f64,
    pub prompt: String,
}

#[derive(Serialize)]
struct ShotRow<'a> {
    sentence_id: &'a str,
    start: usize,
    end: usize,
    #[serde(rename = "type")]
    type_name: &'a str,
}

pub fn build(args: BuildArgs, argv: &[String]) -> CliResult<()> {
    let mut overrides = args.common.overrides(true);
    if let Some(v) = args.shots {
        overrides.push(format!("shot_percent={v}"));
    }
    if let Some(v) = args.min_count {
        overrides.push(format!("min_count={v}"));
    }
    if let Some(v) = args.temperature {
        overrides.push(format!("temperature={v}"));
    }
    if let Some(t) = args.template {
        overrides.push(format!("template={}", serde_json::to_value(t)?.as_str().unwrap_or_default()));
    }
    let cfg: BuildConfig = resolve(&BuildConfig::default(), args.common.config.as_deref(), &overrides)?;
    let out = &args.common.out;
    let mut rec = Recorder::new("prompt-build", argv, &cfg, Some(cfg.seed))?;
    let train = load(&args.train, "train", &mut rec)?;
    let corpus = load(&args.corpus, "prompt", &mut rec)?;
    let kind = cfg.kind();
    let template = match &args.template_file {
        Some(p) => {
            rec.input(p);
            Template::from_file(kind, p)?
        }
        None => Template::builtin(kind),
    };
    let shot_cfg = cfg.shots();
    shot_cfg.validate()?;
    let shots = match kind {
        TemplateKind::Few => sample_shots(&train, &shot_cfg)?,
        TemplateKind::Zero => Vec::new(),
    };
    create_out(out)?;

    let rows = corpus
        .sentences()
        .iter()
        .map(|s| {
            let prompt = render_prompt(&template, s, &shots)?;
            Ok(PromptRow {
                id: s.id.clone(),
                prompt_sha256: prompt_hash(&prompt),
                temperature: cfg.temperature,
                prompt,
            })
        })
        .collect::<CliResult<Vec<_>>>()?;
    write_jsonl(out, PROMPTS_FILE, &rows, &mut rec)?;
    let shot_rows: Vec<ShotRow> = shots
        .iter()
        .map(|e| ShotRow {
            sentence_id: &e.sentence.id,
            start: e.mention.start,
            end: e.mention.end,
            type_name: &e.mention.type_name,
        })
        .collect();
    write_jsonl(out, "shots.jsonl", &shot_rows, &mut rec)?;
    println!("{} prompts, {} exemplars", rows.len(), shots.len());
    rec.write(out)?;
    Ok(())
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[command(flatten)]
    pub common: Common,
    /// `prompts.jsonl` written by `prompt-build`.
    #[arg(long)]
    pub prompts: PathBuf,
    /// Gold corpus the prompts were built from.
    #[arg(long)]
    pub corpus: PathBuf,
    /// Replay recorded responses (JSONL of prompt_sha256/response) instead of calling a model.
    #[arg(long, conflicts_with = "live", required_unless_present = "live")]
    pub responses: Option<PathBuf>,
    /// Query the endpoint configured through CTXED_LLM_BASE_URL, CTXED_LLM_MODEL and CTXED_LLM_API_KEY.
    #[arg(long)]
    pub live: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScoreConfig {
    /// Requests in flight at once.
    pub parallelism: usize,
}

impl Default for ScoreConfig {
    fn default() -> Self {
        ScoreConfig { parallelism: 1 }
    }
}

pub fn score(args: ScoreArgs, argv: &[String]) -> CliResult<()> {
    let cfg: ScoreConfig = resolve(&ScoreConfig::default(), args.common.config.as_deref(), &args.common.overrides(false))?;
    if cfg.parallelism == 0 {
        return Err(CliError::validation("parallelism must be at least 1"));
    }
    let out = &args.common.out;
    let mut rec = Recorder::new("prompt-score", argv, &cfg, args.common.seed)?;
    rec.input(&args.prompts);
    let rows: Vec<PromptRow> = std::fs::read_to_string(&args.prompts)?
        .lines()
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, l)| {
            serde_json::from_str(l)
                .map_err(|e| CliError::validation(format!("{}:{}: {e}", args.prompts.display(), i + 1)))
        })
        .collect::<CliResult<_>>()?;
    let corpus = load(&args.corpus, "gold", &mut rec)?;
    let by_id: HashMap<&str, &PromptRow> = rows.iter().map(|r| (r.id.as_str(), r)).collect();
    let aligned = corpus
        .sentences()
        .iter()
        .map(|s| {
            by_id
                .get(s.id.as_str())
                .copied()
                .ok_or_else(|| CliError::validation(format!("no prompt for sentence {}", s.id)))
        })
        .collect::<CliResult<Vec<_>>>()?;
    let temperature = aligned.first().map_or(0.0, |r| r.temperature);
    if aligned.iter().any(|r| r.temperature != temperature) {
        return Err(CliError::validation("prompts disagree on temperature"));
    }

    let client: Box<dyn LlmClient> = match &args.responses {
        Some(p) => {
            rec.input(p);
            Box::new(StubClient::from_fixture(p)?)
        }
        None => Box::new(HttpClient::from_env().map_err(|e| CliError::validation(e.to_string()))?),
    };
    create_out(out)?;
    let cache_path = out.join(RESPONSES_FILE);
    let mut cache = ResponseCache::open(&cache_path)?;
    let prompts: Vec<String> = aligned.iter().map(|r| r.prompt.clone()).collect();
    let results = generate_all(client.as_ref(), &prompts, temperature, &mut cache, cfg.parallelism);
    let mut responses = Vec::with_capacity(results.len());
    for (r, row) in results.into_iter().zip(&aligned) {
        responses.push(r.map_err(|e| CliError::Runtime(format!("sentence {}: {e}", row.id)))?);
    }
    rec.output(&cache_path);

    let (outcomes, scored) = score_responses(&responses, &corpus);
    let parsed: Vec<serde_json::Value> = corpus
        .sentences()
        .iter()
        .zip(&outcomes)
        .map(|(s, o)| serde_json::json!({"id": s.id, "entries": o.entries, "rejected": o.rejected, "diagnostic": o.diagnostic}))
        .collect();
    write_jsonl(out, "parsed.jsonl", &parsed, &mut rec)?;
    write_json(out, "report.json", &scored.report, &mut rec)?;
    print!("{}", scored.report.to_table());
    println!("rejected entries: {}, unparseable responses: {}", scored.rejected, scored.unparsed);
    rec.write(out)?;
    Ok(())
}
