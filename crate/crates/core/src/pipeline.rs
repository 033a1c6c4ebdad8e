//! End-to-end evaluation: load, validate, individual FSS, eligibility, both
//! scaling modes, rankings and divergence statistics.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::aggregation::{
    build_rankings, compute_scaling_factors, university_fss, AggregateError, ScalingFactorTable, ScalingMode,
    UniversityScore,
};
use crate::eligibility::{apply_eligibility_filters, EligibilityReport, EligibilityThresholds};
use crate::fss::{compute_citation_baselines, compute_productivity, CitationBaselineTable, FssError, IndividualProductivity};
use crate::ingest::{load_baselines, load_dataset, IngestConfig, IngestError};
use crate::model::{validate_dataset, Dataset, Researcher, Violation, Window};
use crate::stats::{
    paired_t_test, r_prime, rank_shift_stats, spearman_rho, PairedTest, RPrimeResult, ShiftSign, ShiftStats,
    SpearmanResult, StatsError,
};

pub const SCHEMA_VERSION: u32 = 1;

/// p-value below which a university counts as significantly different.
pub const SIGNIFICANCE_LEVEL: f64 = 0.10;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("load stage: {0}")]
    Load(IngestError),
    #[error("validate stage: {} violation(s): {}", .0.len(), summarize(.0))]
    Validation(Vec<Violation>),
    #[error("fss stage: {0}")]
    Fss(#[from] FssError),
    #[error("aggregation stage: {0}")]
    Aggregate(#[from] AggregateError),
    #[error("statistics stage ({uda_id}): {source}")]
    Stats { uda_id: String, source: StatsError },
    #[error("ranks input: {0}")]
    RanksInput(String),
    #[error("ranks input ({uda_id}): {source}")]
    InvalidRanks { uda_id: String, source: StatsError },
}

fn summarize(v: &[Violation]) -> String {
    let mut s: Vec<String> = v.iter().take(5).map(ToString::to_string).collect();
    if v.len() > 5 {
        s.push(format!("... and {} more", v.len() - 5));
    }
    s.join("; ")
}

impl PipelineError {
    /// 1 for validation failures, 2 for I/O or parse failures, 3 for broken
    /// internal invariants.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Validation(_) => 1,
            PipelineError::Load(e) if e.is_validation() => 1,
            PipelineError::InvalidRanks { .. } => 1,
            PipelineError::Load(_) | PipelineError::RanksInput(_) => 2,
            PipelineError::Fss(_) | PipelineError::Aggregate(_) | PipelineError::Stats { .. } => 3,
        }
    }
}

impl From<IngestError> for PipelineError {
    fn from(e: IngestError) -> Self {
        match e {
            IngestError::Validation(v) => PipelineError::Validation(v),
            other => PipelineError::Load(other),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportSource {
    Pipeline,
    Ranks,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EligibilitySummary {
    pub retained_sds: usize,
    pub excluded_sds_by_productivity: usize,
    pub excluded_sds_by_gender_count: usize,
    pub retained_pairs: usize,
    pub excluded_pairs: usize,
    pub researchers_ranked: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMetadata {
    pub source: ReportSource,
    pub config_fingerprint: String,
    pub dataset_fingerprint: Option<String>,
    pub seed: Option<u64>,
    pub window: Option<Window>,
    pub thresholds: Option<EligibilityThresholds>,
    pub eligibility: Option<EligibilitySummary>,
    /// Publications whose categories had no baseline cell.
    pub unresolved_baselines: usize,
    /// Publications dated before the window, left unattributed.
    pub rejected_outside_window: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniversityComparison {
    pub university_id: String,
    pub fss_pooled: Option<f64>,
    pub rank_pooled: usize,
    pub fss_by_gender: Option<f64>,
    pub rank_by_gender: usize,
    /// `rank_pooled - rank_by_gender`; positive means the university moves up
    /// once gender is accounted for.
    pub shift: i64,
    pub sign: ShiftSign,
    pub n_researchers: Option<usize>,
    pub test: Option<PairedTest>,
}

impl UniversityComparison {
    pub fn abs_shift(&self) -> u64 {
        self.shift.unsigned_abs()
    }

    pub fn stars(&self) -> &str {
        self.test.as_ref().map_or("", |t| t.stars.as_str())
    }
}

/// One UDA: both rankings (as the rank/value column pairs of each row, rows in
/// pooled-rank order) and the statistics comparing them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UdaReport {
    pub uda_id: String,
    pub universities: Vec<UniversityComparison>,
    pub shifts: ShiftStats,
    pub spearman: Option<SpearmanResult>,
    pub r_prime: Option<RPrimeResult>,
    /// Universities whose paired t-test has p < 0.10; absent without
    /// researcher-level data.
    pub n_significant: Option<usize>,
}

impl UdaReport {
    pub fn ranks(&self, mode: ScalingMode) -> Vec<usize> {
        self.universities
            .iter()
            .map(|u| match mode {
                ScalingMode::Pooled => u.rank_pooled,
                ScalingMode::ByGender => u.rank_by_gender,
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub metadata: ReportMetadata,
    pub udas: Vec<UdaReport>,
}

/// Intermediate products of one evaluation, for callers that need more than
/// the report.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub eligibility: EligibilityReport,
    pub pooled_factors: ScalingFactorTable,
    pub by_gender_factors: ScalingFactorTable,
    pub scores: Vec<UniversityScore>,
    pub report: RunReport,
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn dataset_fingerprint(d: &Dataset) -> String {
    let json = serde_json::to_vec(&d.canonicalized()).expect("dataset serializes");
    sha256_hex(&json)
}

#[derive(Serialize)]
struct FingerprintedConfig<'a> {
    window: Window,
    thresholds: &'a EligibilityThresholds,
    baselines: Option<Vec<(i32, &'a str, f64)>>,
}

fn config_fingerprint(window: Window, thresholds: &EligibilityThresholds, baselines: Option<&CitationBaselineTable>) -> String {
    let cfg = FingerprintedConfig { window, thresholds, baselines: baselines.map(|b| b.iter().collect()) };
    sha256_hex(&serde_json::to_vec(&cfg).expect("config serializes"))
}

/// Loads the configured files and evaluates them.
pub fn run_pipeline(cfg: &IngestConfig) -> Result<Analysis, PipelineError> {
    let dataset = load_dataset(cfg)?;
    let external = if cfg.use_external_baselines {
        let path = cfg.baselines.as_deref().expect("checked by IngestConfig::check");
        Some(load_baselines(path)?)
    } else {
        None
    };
    analyze_dataset(&dataset, external.as_ref(), &cfg.thresholds)
}

/// Evaluates an in-memory dataset. Baselines are computed from its
/// publications unless `external` is given.
pub fn analyze_dataset(
    d: &Dataset,
    external: Option<&CitationBaselineTable>,
    thresholds: &EligibilityThresholds,
) -> Result<Analysis, PipelineError> {
    let violations = validate_dataset(d);
    if !violations.is_empty() {
        return Err(PipelineError::Validation(violations));
    }
    let computed;
    let baselines = match external {
        Some(b) => b,
        None => {
            computed = compute_citation_baselines(&d.publications);
            &computed
        }
    };
    let productivity = compute_productivity(d, baselines)?;
    let mut analysis = analyze_productivity(d, &productivity.records, thresholds)?;
    let meta = &mut analysis.report.metadata;
    meta.config_fingerprint = config_fingerprint(d.window, thresholds, external);
    meta.unresolved_baselines = productivity.unresolved_baselines.len();
    meta.rejected_outside_window = productivity.rejected_outside_window.len();
    Ok(analysis)
}

/// Everything downstream of individual FSS. Useful when productivity values
/// are supplied or adjusted by the caller.
pub fn analyze_productivity(
    d: &Dataset,
    productivity: &BTreeMap<String, IndividualProductivity>,
    thresholds: &EligibilityThresholds,
) -> Result<Analysis, PipelineError> {
    let eligibility = apply_eligibility_filters(d, productivity, thresholds);

    let in_retained_sds: Vec<&Researcher> =
        d.researchers.iter().filter(|r| eligibility.retained_sds.contains(&r.sds_id)).collect();
    let pooled_factors = compute_scaling_factors(productivity, in_retained_sds.iter().copied(), ScalingMode::Pooled)?;
    let by_gender_factors =
        compute_scaling_factors(productivity, in_retained_sds.iter().copied(), ScalingMode::ByGender)?;

    let mut members: BTreeMap<(&str, &str), Vec<(&Researcher, &IndividualProductivity)>> = BTreeMap::new();
    for (u, uda) in eligibility.retained_pairs() {
        members.insert((u, uda), Vec::new());
    }
    for r in &in_retained_sds {
        if let Some(list) = members.get_mut(&(r.university_id.as_str(), r.uda_id.as_str())) {
            let p = productivity
                .get(&r.researcher_id)
                .ok_or_else(|| AggregateError::MissingProductivity(r.researcher_id.clone()))?;
            list.push((r, p));
        }
    }

    let mut scores = Vec::new();
    for ((u, uda), list) in &members {
        scores.push(university_fss(u, uda, list, &pooled_factors)?);
        scores.push(university_fss(u, uda, list, &by_gender_factors)?);
    }

    let mut uda_ids: Vec<&str> = members.keys().map(|(_, uda)| *uda).collect();
    uda_ids.sort_unstable();
    uda_ids.dedup();

    let mut udas = Vec::new();
    for uda in uda_ids {
        udas.push(compare_uda(uda, &scores)?);
    }

    let researchers_ranked = members.values().map(Vec::len).sum();
    let report = RunReport {
        schema_version: SCHEMA_VERSION,
        metadata: ReportMetadata {
            source: ReportSource::Pipeline,
            config_fingerprint: config_fingerprint(d.window, thresholds, None),
            dataset_fingerprint: Some(dataset_fingerprint(d)),
            seed: None,
            window: Some(d.window),
            thresholds: Some(*thresholds),
            eligibility: Some(EligibilitySummary {
                retained_sds: eligibility.retained_sds.len(),
                excluded_sds_by_productivity: eligibility.excluded_sds_by_productivity.len(),
                excluded_sds_by_gender_count: eligibility.excluded_sds_by_gender_count.len(),
                retained_pairs: eligibility.retained_pairs().count(),
                excluded_pairs: eligibility.excluded_university_uda_pairs.len(),
                researchers_ranked,
            }),
            unresolved_baselines: 0,
            rejected_outside_window: 0,
        },
        udas,
    };
    Ok(Analysis { eligibility, pooled_factors, by_gender_factors, scores, report })
}

fn compare_uda(uda: &str, scores: &[UniversityScore]) -> Result<UdaReport, PipelineError> {
    let stats_err = |source| PipelineError::Stats { uda_id: uda.to_string(), source };
    let pooled = build_rankings(scores, uda, ScalingMode::Pooled);
    let gendered = build_rankings(scores, uda, ScalingMode::ByGender);
    let by_key: BTreeMap<(&str, ScalingMode), &UniversityScore> = scores
        .iter()
        .filter(|s| s.uda_id == uda)
        .map(|s| ((s.university_id.as_str(), s.mode), s))
        .collect();

    let mut universities = Vec::with_capacity(pooled.entries.len());
    for entry in &pooled.entries {
        let u = entry.university_id.as_str();
        let rank_by_gender = gendered.rank_of(u).expect("both modes score the same universities");
        let first = by_key[&(u, ScalingMode::Pooled)];
        let second = by_key[&(u, ScalingMode::ByGender)];
        let test = if first.n_researchers >= 2 {
            let a: Vec<f64> = first.scaled.values().copied().collect();
            let b: Vec<f64> = second.scaled.values().copied().collect();
            Some(paired_t_test(&a, &b).map_err(stats_err)?)
        } else {
            None
        };
        let shift = entry.rank as i64 - rank_by_gender as i64;
        universities.push(UniversityComparison {
            university_id: u.to_string(),
            fss_pooled: Some(first.fss_u),
            rank_pooled: entry.rank,
            fss_by_gender: Some(second.fss_u),
            rank_by_gender,
            shift,
            sign: ShiftSign::of(shift),
            n_researchers: Some(first.n_researchers),
            test,
        });
    }
    let n_significant =
        universities.iter().filter(|u| u.test.as_ref().is_some_and(|t| t.p_value < SIGNIFICANCE_LEVEL)).count();
    let mut report = rank_statistics(uda, universities)?;
    report.n_significant = Some(n_significant);
    Ok(report)
}

fn rank_statistics(uda: &str, universities: Vec<UniversityComparison>) -> Result<UdaReport, PipelineError> {
    let stats_err = |source| PipelineError::Stats { uda_id: uda.to_string(), source };
    let a: Vec<usize> = universities.iter().map(|u| u.rank_pooled).collect();
    let b: Vec<usize> = universities.iter().map(|u| u.rank_by_gender).collect();
    let shifts = rank_shift_stats(&a, &b).map_err(stats_err)?;
    let (spearman, r_prime) = if a.len() >= 2 {
        (Some(spearman_rho(&a, &b).map_err(stats_err)?), Some(r_prime(&a, &b).map_err(stats_err)?))
    } else {
        (None, None)
    };
    Ok(UdaReport { uda_id: uda.to_string(), universities, shifts, spearman, r_prime, n_significant: None })
}

/// One row of a ranks-only input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankRow {
    pub uda_id: String,
    pub university_id: String,
    pub rank_pooled: usize,
    pub rank_by_gender: usize,
    pub fss_pooled: Option<f64>,
    pub fss_by_gender: Option<f64>,
}

/// Reads `[uda_id,]university_id,rank_pooled,rank_by_gender[,fss_pooled,fss_by_gender]`.
/// Without a `uda_id` column every row belongs to UDA `ALL`.
pub fn load_rank_rows(path: &Path) -> Result<Vec<RankRow>, PipelineError> {
    #[derive(Deserialize)]
    struct Raw {
        uda_id: Option<String>,
        university_id: String,
        rank_pooled: usize,
        rank_by_gender: usize,
        fss_pooled: Option<f64>,
        fss_by_gender: Option<f64>,
    }
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| PipelineError::RanksInput(format!("{}: {e}", path.display())))?;
    reader
        .deserialize::<Raw>()
        .map(|row| {
            let r = row.map_err(|e| PipelineError::RanksInput(format!("{}: {e}", path.display())))?;
            Ok(RankRow {
                uda_id: r.uda_id.filter(|s| !s.is_empty()).unwrap_or_else(|| "ALL".to_string()),
                university_id: r.university_id,
                rank_pooled: r.rank_pooled,
                rank_by_gender: r.rank_by_gender,
                fss_pooled: r.fss_pooled,
                fss_by_gender: r.fss_by_gender,
            })
        })
        .collect()
}

/// Builds a report straight from two rank columns per UDA, for rankings whose
/// underlying researcher data is unavailable. No paired t-tests are possible.
pub fn compare_rankings(rows: &[RankRow]) -> Result<RunReport, PipelineError> {
    let mut grouped: BTreeMap<&str, Vec<&RankRow>> = BTreeMap::new();
    for r in rows {
        grouped.entry(r.uda_id.as_str()).or_default().push(r);
    }
    let mut udas = Vec::new();
    for (uda, mut list) in grouped {
        list.sort_by(|a, b| (a.rank_pooled, &a.university_id).cmp(&(b.rank_pooled, &b.university_id)));
        let universities = list
            .into_iter()
            .map(|r| {
                let shift = r.rank_pooled as i64 - r.rank_by_gender as i64;
                UniversityComparison {
                    university_id: r.university_id.clone(),
                    fss_pooled: r.fss_pooled,
                    rank_pooled: r.rank_pooled,
                    fss_by_gender: r.fss_by_gender,
                    rank_by_gender: r.rank_by_gender,
                    shift,
                    sign: ShiftSign::of(shift),
                    n_researchers: None,
                    test: None,
                }
            })
            .collect();
        let report = rank_statistics(uda, universities).map_err(|e| match e {
            PipelineError::Stats { uda_id, source } => PipelineError::InvalidRanks { uda_id, source },
            other => other,
        })?;
        udas.push(report);
    }
    let canonical = serde_json::to_vec(&udas.iter().map(|u| (&u.uda_id, u.ranks(ScalingMode::Pooled), u.ranks(ScalingMode::ByGender))).collect::<Vec<_>>())
        .expect("ranks serialize");
    Ok(RunReport {
        schema_version: SCHEMA_VERSION,
        metadata: ReportMetadata {
            source: ReportSource::Ranks,
            config_fingerprint: sha256_hex(&canonical),
            dataset_fingerprint: None,
            seed: None,
            window: None,
            thresholds: None,
            eligibility: None,
            unresolved_baselines: 0,
            rejected_outside_window: 0,
        },
        udas,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{generate_dataset, SynthConfig};

    fn loose() -> EligibilityThresholds {
        EligibilityThresholds { min_productive_share: 0.5, min_per_gender: 5, min_professors: 5 }
    }

    #[test]
    fn synthetic_run_produces_consistent_report() {
        let d = generate_dataset(&SynthConfig::small(11)).unwrap();
        let a = analyze_dataset(&d, None, &loose()).unwrap();
        assert!(!a.report.udas.is_empty());
        for uda in &a.report.udas {
            let n = uda.universities.len();
            let mut pooled = uda.ranks(ScalingMode::Pooled);
            let mut gendered = uda.ranks(ScalingMode::ByGender);
            pooled.sort_unstable();
            gendered.sort_unstable();
            assert_eq!(pooled, (1..=n).collect::<Vec<_>>());
            assert_eq!(gendered, (1..=n).collect::<Vec<_>>());
            for u in &uda.universities {
                let t = u.test.as_ref().unwrap();
                let diff = u.fss_pooled.unwrap() - u.fss_by_gender.unwrap();
                assert!((t.mean_difference - diff).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn invalid_dataset_stops_at_validation() {
        let mut d = generate_dataset(&SynthConfig::small(2)).unwrap();
        d.researchers[0].years_active = 0.0;
        let err = analyze_dataset(&d, None, &loose()).unwrap_err();
        assert_eq!(err.exit_code(), 1);
        assert!(err.to_string().starts_with("validate stage"));
        assert!(err.to_string().contains(&d.researchers[0].researcher_id));
    }

    #[test]
    fn ranks_only_five_universities() {
        let rows: Vec<RankRow> = [(1, 2), (2, 3), (3, 4), (4, 1), (5, 5)]
            .iter()
            .enumerate()
            .map(|(i, (a, b))| RankRow {
                uda_id: "T4".into(),
                university_id: format!("ID{}", i + 1),
                rank_pooled: *a,
                rank_by_gender: *b,
                fss_pooled: None,
                fss_by_gender: None,
            })
            .collect();
        let r = compare_rankings(&rows).unwrap();
        let u = &r.udas[0];
        assert_eq!(u.r_prime.as_ref().unwrap().r_prime, 50.0);
        assert_eq!(u.n_significant, None);
        let abs: Vec<u64> = u.universities.iter().map(UniversityComparison::abs_shift).collect();
        assert_eq!(abs, vec![1, 1, 1, 3, 0]);
    }

    #[test]
    fn ranks_only_rejects_bad_permutation() {
        let row = |u: &str, a, b| RankRow {
            uda_id: "X".into(),
            university_id: u.into(),
            rank_pooled: a,
            rank_by_gender: b,
            fss_pooled: None,
            fss_by_gender: None,
        };
        let err = compare_rankings(&[row("A", 1, 1), row("B", 2, 1)]).unwrap_err();
        assert!(matches!(err, PipelineError::InvalidRanks { .. }));
        assert_eq!(err.exit_code(), 1);
    }
}
