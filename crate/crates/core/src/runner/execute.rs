use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::config::{hex, DatasetSource, ExtractorConfig, JobConfig, RunConfig};
use super::tables::write_tables;
use crate::axes::{
    eval_disentanglement, eval_informativeness, eval_invariance, eval_p_equivariance, eval_r_equivariance, Axis, AxisReport,
    EvalSettings, LabeledEmbeddings,
};
use crate::data::{
    embed_dataset, engine_tag, export_transformed_media, file_stem_for, materialize_pairs, read_embeddings, write_embeddings,
    write_param_log, Dataset, PairedEmbeddingSet,
};
use crate::error::{Error, Result};
use crate::extractors::{align, external_embeddings, FactorExtractor, FeatureExtractor};
use crate::fixtures::{synthetic_audio_dataset, synthetic_factor_dataset, synthetic_image_dataset};

pub const DEFAULT_OUTPUT_DIR: &str = "repeval-out";
pub const SUMMARY_FILE: &str = "summary.json";
pub const REPORTS_DIR: &str = "reports";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunOptions {
    pub force: bool,
    /// Worker threads; each job still trains single-threaded.
    pub jobs: usize,
    pub output_dir: Option<PathBuf>,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            force: false,
            jobs: 1,
            output_dir: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JobStatus {
    Completed,
    Skipped,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobRecord {
    pub name: String,
    pub axis: Axis,
    pub status: JobStatus,
    /// Report path relative to the output directory.
    pub report: Option<String>,
    pub wall_clock_s: f64,
    pub job_hash: String,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub engine: String,
    pub config_hash: String,
    pub output_dir: PathBuf,
    pub jobs: Vec<JobRecord>,
}

impl RunSummary {
    pub fn failed(&self) -> usize {
        self.jobs.iter().filter(|j| j.status == JobStatus::Failed).count()
    }

    pub fn count(&self, status: JobStatus) -> usize {
        self.jobs.iter().filter(|j| j.status == status).count()
    }
}

pub fn job_name(index: usize, job: &JobConfig) -> String {
    let what = job
        .fv
        .iter()
        .chain(job.transform.iter())
        .cloned()
        .collect::<Vec<_>>()
        .join("-");
    file_stem_for(&format!("{index:02}-{}-{}-{}-{what}", job.axis, job.dataset, job.extractor))
}

/// Hash of everything that can change a job's numbers.
pub fn job_hash(cfg: &RunConfig, job: &JobConfig) -> String {
    let doc = json!({
        "engine": engine_tag(),
        "seed": cfg.seed,
        "training": cfg.training,
        "job": job,
        "dataset": cfg.datasets.get(&job.dataset),
        "extractor": cfg.extractors.get(&job.extractor),
        "transform": job.transform.as_ref().and_then(|t| cfg.transforms.get(t)),
    });
    hex(doc.to_string().as_bytes())
}

pub fn build_dataset(source: &DatasetSource) -> Result<Dataset> {
    match source {
        DatasetSource::Manifest { path } => Dataset::load(path),
        DatasetSource::SyntheticImages { n, size, seed } => synthetic_image_dataset(*n, *size, *seed),
        DatasetSource::SyntheticAudio {
            n,
            duration_s,
            sample_rate,
            seed,
        } => synthetic_audio_dataset(*n, *duration_s, *sample_rate, *seed),
        DatasetSource::SyntheticFactors { n, n_factors, seed } => synthetic_factor_dataset(*n, *n_factors, *seed),
    }
}

/// `None` for external extractors, which cannot embed new media.
pub fn build_extractor(cfg: &ExtractorConfig) -> Result<Option<Box<dyn FeatureExtractor>>> {
    match cfg {
        ExtractorConfig::Toy(t) => t.build().map(Some),
        ExtractorConfig::Factor {
            layout,
            n_factors,
            dim,
            seed,
        } => Ok(Some(Box::new(FactorExtractor::new(layout.clone(), *n_factors, *dim, *seed)?))),
        ExtractorConfig::External { .. } => Ok(None),
    }
}

struct Context<'a> {
    cfg: &'a RunConfig,
    datasets: BTreeMap<String, Dataset>,
    extractors: BTreeMap<String, Option<Box<dyn FeatureExtractor>>>,
    out: PathBuf,
}

impl Context<'_> {
    fn settings(&self) -> EvalSettings {
        EvalSettings {
            adam: self.cfg.training.clone(),
            seed: self.cfg.seed,
        }
    }

    fn live(&self, job: &JobConfig) -> Result<&dyn FeatureExtractor> {
        self.extractors[&job.extractor]
            .as_deref()
            .ok_or_else(|| Error::Config(format!("extractor `{}` cannot embed media", job.extractor)))
    }

    fn pairs(&self, job: &JobConfig, dir: &Path) -> Result<PairedEmbeddingSet> {
        let dataset = &self.datasets[&job.dataset];
        let tname = job.transform.as_deref().expect("validated");
        let spec = self.cfg.transforms[tname].to_spec();
        if let ExtractorConfig::External { clean, pairs } = &self.cfg.extractors[&job.extractor] {
            let p = &pairs[tname];
            return external_embeddings(&dataset.records(), clean, &p.transformed, &p.params);
        }
        let extractor = self.live(job)?;
        let pairs = materialize_pairs(dataset, &spec, extractor)?;
        write_embeddings(&pairs.z_clean, &dir.join("clean.emb"))?;
        write_embeddings(&pairs.z_transformed, &dir.join("transformed.emb"))?;
        write_param_log(&pairs, &dir.join("params.jsonl"))?;
        if job.export_media {
            export_transformed_media(dataset, &spec, &dir.join("media"))?;
        }
        Ok(pairs)
    }

    fn labeled(&self, job: &JobConfig) -> Result<LabeledEmbeddings> {
        let dataset = &self.datasets[&job.dataset];
        let store = match &self.cfg.extractors[&job.extractor] {
            ExtractorConfig::External { clean, .. } => align(&read_embeddings(clean)?, &dataset.ids(), "clean store")?,
            _ => embed_dataset(dataset, self.live(job)?)?,
        };
        LabeledEmbeddings::from_dataset(dataset, store, job.fv.as_deref().expect("validated"))
    }

    fn run_job(&self, name: &str, job: &JobConfig) -> Result<AxisReport> {
        let dir = self.out.join("jobs").join(name);
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        let settings = self.settings();
        let spec = job.transform.as_ref().map(|t| self.cfg.transforms[t].to_spec());
        let mut report = match job.axis {
            Axis::Informativeness => eval_informativeness(&self.labeled(job)?, job.probe, &settings)?.0,
            Axis::PEquivariance => {
                let pairs = self.pairs(job, &dir)?;
                with_failures(eval_p_equivariance(&pairs, job.probe, &settings)?, &pairs)
            }
            Axis::REquivariance => {
                let pairs = self.pairs(job, &dir)?;
                with_failures(eval_r_equivariance(&pairs, &settings)?, &pairs)
            }
            Axis::Invariance => {
                let spec = spec.as_ref().expect("validated");
                eval_invariance(&self.datasets[&job.dataset], spec, self.live(job)?, job.grid_points)?
            }
            Axis::Disentanglement => {
                let (_, probe) = eval_informativeness(&self.labeled(job)?, job.probe, &settings)?;
                let spec = spec.as_ref().expect("validated");
                eval_disentanglement(&probe, &self.datasets[&job.dataset], spec, self.live(job)?)?
            }
        };
        if let Some(spec) = &spec {
            report.transform = Some(spec.kind.name());
            if report.fv.is_none() {
                report.fv = Some(spec.fv_target.clone());
            }
        }
        report.config = json!({
            "axis": report.config,
            "job": job,
            "seed": self.cfg.seed,
            "training": self.cfg.training,
            "dataset": self.cfg.datasets[&job.dataset],
            "extractor": self.cfg.extractors[&job.extractor],
            "transform": job.transform.as_ref().map(|t| &self.cfg.transforms[t]),
        });
        report.validate()?;
        Ok(report)
    }
}

fn with_failures(mut report: AxisReport, pairs: &PairedEmbeddingSet) -> AxisReport {
    for (id, reason) in &pairs.failures {
        report.notes.push(format!("sample {id} skipped: {reason}"));
    }
    report
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn report_json(report: &AxisReport) -> String {
    serde_json::to_string_pretty(report).expect("report serializes") + "\n"
}

/// Runs every job, skipping those whose report already exists with the same
/// job hash, then writes the summary and tables.
pub fn cmd_run(cfg: &RunConfig, opts: &RunOptions) -> Result<RunSummary> {
    cfg.validate()?;
    let out = opts
        .output_dir
        .clone()
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR));
    let reports_dir = out.join(REPORTS_DIR);
    fs::create_dir_all(&reports_dir).map_err(|e| Error::io(&reports_dir, e))?;

    let names: Vec<String> = cfg.jobs.iter().enumerate().map(|(i, j)| job_name(i, j)).collect();
    let hashes: Vec<String> = cfg.jobs.iter().map(|j| job_hash(cfg, j)).collect();
    let done = |i: usize| -> bool {
        let stored = fs::read_to_string(reports_dir.join(format!("{}.hash", names[i])));
        !opts.force && reports_dir.join(format!("{}.json", names[i])).exists() && stored.ok().as_deref() == Some(&hashes[i])
    };
    let pending: Vec<usize> = (0..cfg.jobs.len()).filter(|&i| !done(i)).collect();

    let mut ctx = Context {
        cfg,
        datasets: BTreeMap::new(),
        extractors: BTreeMap::new(),
        out: out.clone(),
    };
    for &i in &pending {
        let job = &cfg.jobs[i];
        if !ctx.datasets.contains_key(&job.dataset) {
            ctx.datasets
                .insert(job.dataset.clone(), build_dataset(&cfg.datasets[&job.dataset])?);
        }
        if !ctx.extractors.contains_key(&job.extractor) {
            ctx.extractors
                .insert(job.extractor.clone(), build_extractor(&cfg.extractors[&job.extractor])?);
        }
    }

    let results: Mutex<BTreeMap<usize, (Result<AxisReport>, f64)>> = Mutex::new(BTreeMap::new());
    let next = AtomicUsize::new(0);
    let workers = opts.jobs.clamp(1, pending.len().max(1));
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let k = next.fetch_add(1, Ordering::SeqCst);
                let Some(&i) = pending.get(k) else { break };
                let start = Instant::now();
                let r = ctx.run_job(&names[i], &cfg.jobs[i]);
                results.lock().unwrap().insert(i, (r, start.elapsed().as_secs_f64()));
            });
        }
    });
    let mut results = results.into_inner().unwrap();

    let mut records = Vec::with_capacity(cfg.jobs.len());
    for (i, job) in cfg.jobs.iter().enumerate() {
        let rel = format!("{REPORTS_DIR}/{}.json", names[i]);
        let mut record = JobRecord {
            name: names[i].clone(),
            axis: job.axis,
            status: JobStatus::Skipped,
            report: Some(rel.clone()),
            wall_clock_s: 0.0,
            job_hash: hashes[i].clone(),
            error: None,
        };
        if let Some((result, secs)) = results.remove(&i) {
            record.wall_clock_s = secs;
            match result {
                Ok(report) => {
                    write_file(&out.join(&rel), report_json(&report).as_bytes())?;
                    write_file(&reports_dir.join(format!("{}.hash", names[i])), hashes[i].as_bytes())?;
                    record.status = JobStatus::Completed;
                }
                Err(e) => {
                    record.status = JobStatus::Failed;
                    record.report = None;
                    record.error = Some(e.to_string());
                }
            }
        }
        records.push(record);
    }

    let summary = RunSummary {
        engine: engine_tag(),
        config_hash: cfg.hash(),
        output_dir: out.clone(),
        jobs: records,
    };
    let text = serde_json::to_string_pretty(&summary).expect("summary serializes") + "\n";
    write_file(&out.join(SUMMARY_FILE), text.as_bytes())?;

    let reports: Vec<(String, AxisReport)> = summary
        .jobs
        .iter()
        .filter(|j| j.status != JobStatus::Failed)
        .map(|j| {
            Ok((
                j.name.clone(),
                load_report(&out.join(j.report.as_ref().expect("has report")))?,
            ))
        })
        .collect::<Result<_>>()?;
    if !reports.is_empty() {
        write_tables(&out, &reports)?;
    }
    Ok(summary)
}

pub fn load_report(path: &Path) -> Result<AxisReport> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    if let Some(v) = value.get("schema_version").and_then(|v| v.as_u64()) {
        if v != crate::axes::SCHEMA_VERSION as u64 {
            return Err(Error::Version(format!("{}: report schema {v}", path.display())));
        }
    }
    let report: AxisReport = serde_json::from_value(value).map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    report.validate()?;
    Ok(report)
}
