//! Institutional productivity and per-UDA rankings.
//!
//! Each researcher's FSS is divided by a scaling factor, the mean FSS of the
//! productive researchers in the same SDS (pooled mode) or the same SDS and
//! gender (by-gender mode). A university's score in a UDA is the mean of the
//! scaled values over all of its staff there, unproductive members included.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fss::IndividualProductivity;
use crate::model::{Gender, Researcher};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AggregateError {
    #[error("no productivity record for researcher {0}")]
    MissingProductivity(String),
    #[error("no {mode} scaling factor for productive researcher {researcher_id} (sds {sds_id})")]
    MissingScalingFactor { researcher_id: String, sds_id: String, mode: ScalingMode },
    #[error("researcher {researcher_id} does not belong to ({university_id}, {uda_id})")]
    ForeignMember { researcher_id: String, university_id: String, uda_id: String },
    #[error("university {university_id} has no staff in {uda_id}")]
    NoMembers { university_id: String, uda_id: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalingMode {
    Pooled,
    ByGender,
}

impl ScalingMode {
    pub fn label(self) -> &'static str {
        match self {
            ScalingMode::Pooled => "pooled",
            ScalingMode::ByGender => "by_gender",
        }
    }

    fn key(self, sds_id: &str, gender: Gender) -> (String, Option<Gender>) {
        match self {
            ScalingMode::Pooled => (sds_id.to_string(), None),
            ScalingMode::ByGender => (sds_id.to_string(), Some(gender)),
        }
    }
}

impl std::fmt::Display for ScalingMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingFactorTable {
    pub mode: ScalingMode,
    factors: BTreeMap<(String, Option<Gender>), f64>,
}

impl ScalingFactorTable {
    pub fn get(&self, sds_id: &str, gender: Gender) -> Option<f64> {
        self.factors.get(&self.mode.key(sds_id, gender)).copied()
    }

    pub fn len(&self) -> usize {
        self.factors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, Option<Gender>, f64)> {
        self.factors.iter().map(|((s, g), v)| (s.as_str(), *g, *v))
    }
}

/// Mean FSS of productive researchers per SDS (or SDS × gender). Cells with
/// no productive researcher are left out. Sums run in ascending researcher id
/// order.
pub fn compute_scaling_factors<'a, I>(
    productivity: &BTreeMap<String, IndividualProductivity>,
    researchers: I,
    mode: ScalingMode,
) -> Result<ScalingFactorTable, AggregateError>
where
    I: IntoIterator<Item = &'a Researcher>,
{
    let mut ordered: Vec<&Researcher> = researchers.into_iter().collect();
    ordered.sort_by(|a, b| a.researcher_id.cmp(&b.researcher_id));

    let mut acc: BTreeMap<(String, Option<Gender>), (f64, usize)> = BTreeMap::new();
    for r in ordered {
        let p = productivity
            .get(&r.researcher_id)
            .ok_or_else(|| AggregateError::MissingProductivity(r.researcher_id.clone()))?;
        if !p.is_productive {
            continue;
        }
        let cell = acc.entry(mode.key(&r.sds_id, r.gender)).or_insert((0.0, 0));
        cell.0 += p.fss;
        cell.1 += 1;
    }
    // A productive cell whose members all have fss == 0 (uncited output) has
    // no usable factor; it is dropped and its members scale to zero.
    let factors = acc
        .into_iter()
        .map(|(k, (sum, n))| (k, sum / n as f64))
        .filter(|(_, v)| *v > 0.0)
        .collect();
    Ok(ScalingFactorTable { mode, factors })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniversityScore {
    pub university_id: String,
    pub uda_id: String,
    pub mode: ScalingMode,
    pub fss_u: f64,
    pub n_researchers: usize,
    /// researcher_id → FSS / scaling factor (0 for unproductive members).
    pub scaled: BTreeMap<String, f64>,
}

pub fn university_fss(
    university_id: &str,
    uda_id: &str,
    members: &[(&Researcher, &IndividualProductivity)],
    factors: &ScalingFactorTable,
) -> Result<UniversityScore, AggregateError> {
    if members.is_empty() {
        return Err(AggregateError::NoMembers {
            university_id: university_id.to_string(),
            uda_id: uda_id.to_string(),
        });
    }
    let mut scaled = BTreeMap::new();
    for (r, p) in members {
        if r.university_id != university_id || r.uda_id != uda_id {
            return Err(AggregateError::ForeignMember {
                researcher_id: r.researcher_id.clone(),
                university_id: university_id.to_string(),
                uda_id: uda_id.to_string(),
            });
        }
        let value = if p.is_productive && p.fss > 0.0 {
            let factor = factors.get(&r.sds_id, r.gender).ok_or_else(|| {
                AggregateError::MissingScalingFactor {
                    researcher_id: r.researcher_id.clone(),
                    sds_id: r.sds_id.clone(),
                    mode: factors.mode,
                }
            })?;
            p.fss / factor
        } else {
            0.0
        };
        scaled.insert(r.researcher_id.clone(), value);
    }
    // BTreeMap iteration gives ascending researcher id order.
    let sum: f64 = scaled.values().sum();
    Ok(UniversityScore {
        university_id: university_id.to_string(),
        uda_id: uda_id.to_string(),
        mode: factors.mode,
        fss_u: sum / scaled.len() as f64,
        n_researchers: scaled.len(),
        scaled,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingEntry {
    pub rank: usize,
    pub university_id: String,
    pub fss_u: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingList {
    pub uda_id: String,
    pub mode: ScalingMode,
    pub entries: Vec<RankingEntry>,
}

impl RankingList {
    pub fn rank_of(&self, university_id: &str) -> Option<usize> {
        self.entries.iter().find(|e| e.university_id == university_id).map(|e| e.rank)
    }
}

/// Orders scores for `uda_id` / `mode` by descending `fss_u`, ties broken by
/// ascending university id. Scores for other UDAs or modes are ignored.
pub fn build_rankings(scores: &[UniversityScore], uda_id: &str, mode: ScalingMode) -> RankingList {
    let mut selected: Vec<&UniversityScore> =
        scores.iter().filter(|s| s.uda_id == uda_id && s.mode == mode).collect();
    selected.sort_by(|a, b| match b.fss_u.total_cmp(&a.fss_u) {
        Ordering::Equal => a.university_id.cmp(&b.university_id),
        other => other,
    });
    RankingList {
        uda_id: uda_id.to_string(),
        mode,
        entries: selected
            .into_iter()
            .enumerate()
            .map(|(i, s)| RankingEntry { rank: i + 1, university_id: s.university_id.clone(), fss_u: s.fss_u })
            .collect(),
    }
}
