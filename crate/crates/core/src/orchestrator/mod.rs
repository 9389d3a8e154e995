//! The full pipeline for one instance: elicit knowledge, render charts, run
//! the analyst rounds, the parallel reviewers and the synthesizer. Also the
//! single-turn comparator baselines.

mod config;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use thiserror::Error;

pub use config::{RetryPolicy, RunConfig};

use crate::chart::{self, ChartArtifact, ChartError};
use crate::gateway::{
    run_tool_loop, CallContext, ChatRequest, Gateway, GatewayError, Message, ToolBox, ToolSpec,
    TurnOutcome,
};
use crate::model::{
    answers_agree, validate_instance, Answer, DebateTranscript, DomainKnowledge, EvidenceReport,
    Modality, Resolution, ReviewerRecord, RunStatus, SharedLedger, SynthesizerVerdict, TaskInstance,
    ToolCall,
};
use crate::parse::{self, ParseError};
use crate::prompts::{self, ComparatorMode, PromptError, PromptLibrary};
use crate::tools;

pub const DEBATE_METHOD: &str = "tsdebate";

#[derive(Debug, Error)]
pub enum RunError {
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("invalid config: {0}")]
    Config(String),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error(transparent)]
    Chart(#[from] ChartError),
    #[error("no usable analyst evidence in round {0}")]
    NoUsableEvidence(u32),
    #[error("no usable reviewers: {0}")]
    NoUsableReviewers(String),
    #[error("synthesis unparseable: {0}")]
    SynthesisUnparseable(String),
}

/// A completed agent turn: the parsed record or the final parse failure.
struct AgentOutput<T> {
    parsed: Result<T, (String, ParseError)>,
    tool_log: Vec<ToolCall>,
}

struct AgentTurn {
    agent: String,
    system: String,
    user: String,
    images: Vec<String>,
    tools: Option<Vec<ToolSpec>>,
    budget: u32,
    max_tokens: u32,
}

/// Per-instance state shared by the agents of one run.
pub struct InstanceRun<'a> {
    pub instance: &'a TaskInstance,
    pub ledger: SharedLedger,
    pub capture_dir: Option<PathBuf>,
    pub charts: [ChartArtifact; 2],
    started: Instant,
}

impl<'a> InstanceRun<'a> {
    fn ctx(&self) -> CallContext<'_> {
        CallContext {
            ledger: &self.ledger,
            capture_dir: self.capture_dir.as_deref(),
        }
    }

    fn images(&self) -> Vec<String> {
        self.charts.iter().map(ChartArtifact::data_url).collect()
    }
}

/// Transcript plus the chart images it references.
#[derive(Debug, Clone)]
pub struct InstanceOutcome {
    pub transcript: DebateTranscript,
    pub charts: Vec<ChartArtifact>,
}

pub struct Orchestrator {
    pub gateway: Gateway,
    pub prompts: PromptLibrary,
    pub config: RunConfig,
}

impl Orchestrator {
    pub fn new(gateway: Gateway, prompts: PromptLibrary, config: RunConfig) -> Self {
        Self {
            gateway,
            prompts,
            config,
        }
    }

    /// Validates inputs and renders the charts shared by every stage.
    pub fn prepare<'a>(&self, instance: &'a TaskInstance, capture_dir: Option<&Path>) -> Result<InstanceRun<'a>, RunError> {
        self.config.validate().map_err(RunError::Config)?;
        let problems = validate_instance(instance);
        if !problems.is_empty() {
            return Err(RunError::InvalidInstance(problems.join("; ")));
        }
        Ok(InstanceRun {
            instance,
            ledger: SharedLedger::new(self.config.rates),
            capture_dir: capture_dir.map(Path::to_path_buf),
            charts: chart::render_pair(&instance.series)?,
            started: Instant::now(),
        })
    }

    fn request(&self, run: &InstanceRun<'_>, turn: &AgentTurn) -> ChatRequest {
        let user = if turn.images.is_empty() {
            Message::user(turn.user.clone())
        } else {
            Message::user_with_images(turn.user.clone(), &turn.images)
        };
        let mut req = ChatRequest::new(
            &self.config.model,
            &turn.agent,
            &run.instance.id,
            vec![Message::system(turn.system.clone()), user],
        );
        req.temperature = self.config.temperature;
        req.seed = self.config.seed;
        req.max_tokens = turn.max_tokens;
        req
    }

    /// Runs one agent turn with at most one repair turn when parsing fails.
    fn run_agent<T>(
        &self,
        run: &InstanceRun<'_>,
        turn: AgentTurn,
        parse: impl Fn(&str) -> Result<T, ParseError>,
    ) -> Result<AgentOutput<T>, GatewayError> {
        let series = &run.instance.series;
        let handler = |name: &str, args: &serde_json::Value| tools::dispatch(series, name, args);
        let toolbox = turn.tools.clone().map(|specs| ToolBox {
            specs,
            handler: &handler,
            native: self.config.native_tools,
        });
        let first: TurnOutcome = run_tool_loop(&self.gateway, run.ctx(), self.request(run, &turn), toolbox.as_ref(), turn.budget)?;
        let mut tool_log = first.tool_log;
        let err = match parse(&first.text) {
            Ok(v) => return Ok(AgentOutput { parsed: Ok(v), tool_log }),
            Err(e) => e,
        };
        let executed = tool_log.iter().filter(|c| c.executed).count() as u32;
        let mut messages = first.messages;
        messages.push(Message::user(prompts::format_repair(err.required(), &err.to_string())));
        let mut req = self.request(run, &turn);
        req.messages = messages;
        req.turn = first.turns;
        let second = run_tool_loop(
            &self.gateway,
            run.ctx(),
            req,
            toolbox.as_ref(),
            turn.budget.saturating_sub(executed),
        )?;
        let offset = tool_log.len() as u32;
        tool_log.extend(second.tool_log.into_iter().map(|mut c| {
            c.sequence += offset;
            c
        }));
        let parsed = parse(&second.text).map_err(|e| (second.text.clone(), e));
        Ok(AgentOutput { parsed, tool_log })
    }

    pub fn elicit(&self, run: &InstanceRun<'_>) -> Result<DomainKnowledge, RunError> {
        let p = self
            .prompts
            .render_elicitation(&run.instance.query, run.instance.context_text())?;
        let turn = AgentTurn {
            agent: "elicitor".into(),
            system: p.system,
            user: p.user,
            images: Vec::new(),
            tools: None,
            budget: 0,
            max_tokens: self.config.judge_max_tokens,
        };
        let out = self.run_agent(run, turn, |raw| Ok(parse::parse_knowledge(raw)))?;
        Ok(out.parsed.map_err(|(_, e)| RunError::SynthesisUnparseable(e.to_string()))?)
    }

    fn analyst_turn(
        &self,
        run: &InstanceRun<'_>,
        modality: Modality,
        round: u32,
        knowledge: &str,
        prior: Option<&BTreeMap<Modality, EvidenceReport>>,
    ) -> Result<(EvidenceReport, Vec<ToolCall>), RunError> {
        let task = prompts::analyst_task(run.instance, modality);
        let p = self
            .prompts
            .render_analyst(modality, round, &task, knowledge, prior, self.config.analyst_budget)?;
        // Round 1 is modality-isolated; later rounds only add prior evidence text.
        let turn = AgentTurn {
            agent: format!("analyst.{modality}.r{round}"),
            system: p.system,
            user: p.user,
            images: if modality == Modality::Visual { run.images() } else { Vec::new() },
            tools: (modality == Modality::Numerical).then(tools::lookup_specs),
            budget: if modality == Modality::Numerical { self.config.analyst_budget } else { 0 },
            max_tokens: self.config.analyst_max_tokens,
        };
        let report = match self.run_agent(run, turn, |raw| parse::parse_evidence(raw, modality, round)) {
            Ok(AgentOutput { parsed: Ok(r), tool_log }) => return Ok((r, tool_log)),
            Ok(AgentOutput { parsed: Err((raw, e)), tool_log }) => {
                return Ok((EvidenceReport::unusable(modality, round, &raw, &format!("unparseable after repair: {e}")), tool_log))
            }
            Err(e) => EvidenceReport::unusable(modality, round, "", &e.to_string()),
        };
        Ok((report, Vec::new()))
    }

    /// All analyst rounds. Analysts of one round run concurrently and read
    /// only the previous round's snapshot.
    pub fn run_debate(
        &self,
        run: &InstanceRun<'_>,
        knowledge: &str,
        rounds: &mut Vec<BTreeMap<Modality, EvidenceReport>>,
        tool_log: &mut Vec<ToolCall>,
    ) -> Result<(), RunError> {
        for round in 1..=self.config.rounds {
            let prior = rounds.last();
            let results: Vec<Result<(EvidenceReport, Vec<ToolCall>), RunError>> = std::thread::scope(|s| {
                let handles: Vec<_> = Modality::ALL
                    .iter()
                    .map(|m| s.spawn(move || self.analyst_turn(run, *m, round, knowledge, prior)))
                    .collect();
                handles.into_iter().map(|h| h.join().expect("analyst thread panicked")).collect()
            });
            let mut reports = BTreeMap::new();
            for r in results {
                let (report, log) = r?;
                tool_log.extend(log);
                reports.insert(report.modality, report);
            }
            let usable = reports.values().any(|r| r.usable);
            rounds.push(reports);
            if !usable {
                return Err(RunError::NoUsableEvidence(round));
            }
        }
        Ok(())
    }

    fn reviewer_turn(
        &self,
        run: &InstanceRun<'_>,
        id: usize,
        knowledge: &str,
        final_round: &BTreeMap<Modality, EvidenceReport>,
    ) -> Result<(ReviewerRecord, Vec<ToolCall>), RunError> {
        let task = prompts::judge_task(run.instance, "CALIBRATED ANSWER");
        let p = self.prompts.render_reviewer(
            &task,
            knowledge,
            final_round,
            self.config.rounds,
            self.config.reviewer_budget,
        )?;
        let turn = AgentTurn {
            agent: format!("reviewer.{id}"),
            system: p.system,
            user: p.user,
            images: run.images(),
            tools: Some(tools::judge_specs()),
            budget: self.config.reviewer_budget,
            max_tokens: self.config.judge_max_tokens,
        };
        Ok(match self.run_agent(run, turn, |raw| parse::parse_reviewer(raw, id, run.instance)) {
            Ok(AgentOutput { parsed: Ok(r), tool_log }) => (r, tool_log),
            Ok(AgentOutput { parsed: Err((raw, e)), tool_log }) => (
                parse::unusable_reviewer(id, &raw, &format!("unparseable after repair: {e}")),
                tool_log,
            ),
            Err(e) => (parse::unusable_reviewer(id, "", &e.to_string()), Vec::new()),
        })
    }

    /// J concurrent reviewers over the final round. Unusable records keep
    /// their slot; all J unusable is an error.
    pub fn run_reviewers(
        &self,
        run: &InstanceRun<'_>,
        knowledge: &str,
        final_round: &BTreeMap<Modality, EvidenceReport>,
        records: &mut Vec<ReviewerRecord>,
        tool_log: &mut Vec<ToolCall>,
    ) -> Result<(), RunError> {
        if !final_round.values().any(|r| r.usable) {
            return Err(RunError::NoUsableEvidence(self.config.rounds));
        }
        let results: Vec<_> = std::thread::scope(|s| {
            let handles: Vec<_> = (0..self.config.reviewers as usize)
                .map(|j| s.spawn(move || self.reviewer_turn(run, j, knowledge, final_round)))
                .collect();
            handles.into_iter().map(|h| h.join().expect("reviewer thread panicked")).collect()
        });
        for r in results {
            let (record, log) = r?;
            tool_log.extend(log);
            records.push(record);
        }
        if !records.iter().any(|r| r.usable) {
            let reasons: Vec<String> = records.iter().flat_map(|r| r.flags.iter().cloned()).collect();
            return Err(RunError::NoUsableReviewers(reasons.join("; ")));
        }
        Ok(())
    }

    /// One tool-equipped synthesizer turn over the usable reviewer records.
    pub fn run_synthesizer(
        &self,
        run: &InstanceRun<'_>,
        knowledge: &str,
        records: &[ReviewerRecord],
        tool_log: &mut Vec<ToolCall>,
    ) -> Result<SynthesizerVerdict, RunError> {
        let usable: Vec<&ReviewerRecord> = records.iter().filter(|r| r.usable).collect();
        if usable.is_empty() {
            return Err(RunError::NoUsableReviewers("no reviewer records".into()));
        }
        let task = prompts::judge_task(run.instance, "FINAL ANSWER");
        let p = self
            .prompts
            .render_synthesizer(&task, knowledge, &usable, self.config.reviewer_budget)?;
        let turn = AgentTurn {
            agent: "synthesizer".into(),
            system: p.system,
            user: p.user,
            images: run.images(),
            tools: Some(tools::judge_specs()),
            budget: self.config.reviewer_budget,
            max_tokens: self.config.judge_max_tokens,
        };
        let out = self.run_agent(run, turn, |raw| parse::parse_synthesizer(raw, run.instance, &usable))?;
        tool_log.extend(out.tool_log);
        let mut verdict = out.parsed.map_err(|(_, e)| RunError::SynthesisUnparseable(e.to_string()))?;
        if verdict.resolution == Resolution::ApproachError
            && usable.iter().any(|r| answers_agree(&r.calibrated_answer, &verdict.final_answer))
        {
            verdict
                .flags
                .push("APPROACH_ERROR declared but the final answer repeats a reviewer answer".into());
        }
        Ok(verdict)
    }

    /// The whole pipeline. Always returns a transcript; a failed stage is
    /// recorded with everything completed before it.
    pub fn run_instance(&self, instance: &TaskInstance, capture_dir: Option<&Path>) -> InstanceOutcome {
        let mut t = DebateTranscript {
            instance_id: instance.id.clone(),
            method: DEBATE_METHOD.to_string(),
            status: RunStatus::Completed,
            knowledge: None,
            charts: Vec::new(),
            rounds: Vec::new(),
            reviewer_records: Vec::new(),
            synthesizer: None,
            final_answer: None,
            final_answer_raw: None,
            tool_log: Vec::new(),
            cost: crate::model::CostLedger::new(self.config.rates),
            config: self.config.clone(),
            flags: Vec::new(),
        };
        let run = match self.prepare(instance, capture_dir) {
            Ok(r) => r,
            Err(e) => {
                t.status = failed("prepare", &e);
                return InstanceOutcome { transcript: t, charts: Vec::new() };
            }
        };
        t.charts = run.charts.iter().map(|c| c.to_ref(&instance.id)).collect();
        if let Err((stage, e)) = self.pipeline(&run, &mut t) {
            t.status = failed(stage, &e);
        }
        let mut cost = run.ledger.snapshot();
        cost.wall_time_s = self.gateway.elapsed(run.started);
        t.cost = cost;
        InstanceOutcome {
            transcript: t,
            charts: run.charts.to_vec(),
        }
    }

    fn pipeline(&self, run: &InstanceRun<'_>, t: &mut DebateTranscript) -> Result<(), (&'static str, RunError)> {
        let knowledge = self.elicit(run).map_err(|e| ("elicit", e))?;
        let k = knowledge.raw_text.trim().to_string();
        t.knowledge = Some(knowledge);
        self.run_debate(run, &k, &mut t.rounds, &mut t.tool_log)
            .map_err(|e| ("debate", e))?;
        let final_round = t.rounds.last().cloned().unwrap_or_default();
        self.run_reviewers(run, &k, &final_round, &mut t.reviewer_records, &mut t.tool_log)
            .map_err(|e| ("reviewers", e))?;
        let verdict = self
            .run_synthesizer(run, &k, &t.reviewer_records, &mut t.tool_log)
            .map_err(|e| ("synthesizer", e))?;
        t.final_answer = Some(verdict.final_answer.clone());
        t.final_answer_raw = Some(verdict.final_answer_raw.clone());
        t.synthesizer = Some(verdict);
        Ok(())
    }

    /// Single-turn baseline. An unmapped answer leaves `final_answer` empty
    /// and is flagged.
    pub fn run_comparator(
        &self,
        instance: &TaskInstance,
        mode: ComparatorMode,
        multimodal: bool,
        capture_dir: Option<&Path>,
    ) -> InstanceOutcome {
        let method = comparator_method(mode, multimodal);
        let mut t = DebateTranscript {
            instance_id: instance.id.clone(),
            method: method.to_string(),
            status: RunStatus::Completed,
            knowledge: None,
            charts: Vec::new(),
            rounds: Vec::new(),
            reviewer_records: Vec::new(),
            synthesizer: None,
            final_answer: None,
            final_answer_raw: None,
            tool_log: Vec::new(),
            cost: crate::model::CostLedger::new(self.config.rates),
            config: self.config.clone(),
            flags: Vec::new(),
        };
        let run = match self.prepare(instance, capture_dir) {
            Ok(r) => r,
            Err(e) => {
                t.status = failed("prepare", &e);
                return InstanceOutcome { transcript: t, charts: Vec::new() };
            }
        };
        let p = prompts::comparator_prompt(instance, mode, multimodal);
        let turn = AgentTurn {
            agent: format!("comparator.{method}"),
            system: p.system,
            user: p.user,
            images: if multimodal { run.images() } else { Vec::new() },
            tools: None,
            budget: 0,
            max_tokens: self.config.judge_max_tokens,
        };
        let req = self.request(&run, &turn);
        match run_tool_loop(&self.gateway, run.ctx(), req, None, 0) {
            Ok(out) => {
                let line = last_answer_line(&out.text);
                match parse::extract_answer(&line, instance) {
                    Ok(a) => t.final_answer = Some(a),
                    Err(e) => t.flags.push(e.to_string()),
                }
                t.final_answer_raw = Some(line);
            }
            Err(e) => t.status = failed("comparator", &RunError::Gateway(e)),
        }
        if multimodal {
            t.charts = run.charts.iter().map(|c| c.to_ref(&instance.id)).collect();
        }
        let mut cost = run.ledger.snapshot();
        cost.wall_time_s = self.gateway.elapsed(run.started);
        t.cost = cost;
        InstanceOutcome {
            transcript: t,
            charts: if multimodal { run.charts.to_vec() } else { Vec::new() },
        }
    }
}

pub fn comparator_method(mode: ComparatorMode, multimodal: bool) -> &'static str {
    match (mode, multimodal) {
        (ComparatorMode::ZeroShot, false) => "zero_shot",
        (ComparatorMode::Cot, false) => "cot",
        (ComparatorMode::ZeroShot, true) => "zero_shot_mm",
        (ComparatorMode::Cot, true) => "cot_mm",
    }
}

fn failed(stage: &str, e: &RunError) -> RunStatus {
    RunStatus::Failed {
        stage: stage.to_string(),
        error: e.to_string(),
    }
}

/// The `FINAL ANSWER:` line if present, else the last non-empty line.
fn last_answer_line(text: &str) -> String {
    let lines: Vec<&str> = text.lines().map(str::trim).filter(|l| !l.is_empty()).collect();
    lines
        .iter()
        .rev()
        .find(|l| l.to_ascii_uppercase().contains("ANSWER"))
        .or(lines.last())
        .map(|l| l.to_string())
        .unwrap_or_default()
}

/// Final answer of a transcript, if the run produced one.
pub fn final_answer(t: &DebateTranscript) -> Option<&Answer> {
    t.final_answer.as_ref()
}
