//! Population filters applied before aggregation.
//!
//! Filters run in sequence: SDS productivity share, then per-gender head
//! count (only for SDSs that passed the first filter), then the minimum number
//! of professors a university needs in a UDA, counted over retained SDSs only.
//! Gender counts are national, across all universities.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::fss::IndividualProductivity;
use crate::model::{Dataset, Gender, Researcher};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EligibilityThresholds {
    /// Minimum share of SDS members with at least one publication (inclusive).
    pub min_productive_share: f64,
    /// Minimum national head count of each gender in an SDS (inclusive).
    pub min_per_gender: usize,
    /// Minimum professors a university needs in a UDA to be ranked (inclusive).
    pub min_professors: usize,
}

impl Default for EligibilityThresholds {
    fn default() -> Self {
        EligibilityThresholds { min_productive_share: 0.5, min_per_gender: 30, min_professors: 10 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SdsOutcome {
    Retained,
    ExcludedByProductivity,
    ExcludedByGenderCount,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SdsDecision {
    pub sds_id: String,
    pub members: usize,
    pub productive: usize,
    pub female: usize,
    pub male: usize,
    pub outcome: SdsOutcome,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairDecision {
    pub university_id: String,
    pub uda_id: String,
    /// Professors of this university in retained SDSs of the UDA.
    pub professors: usize,
    pub retained: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EligibilityReport {
    pub retained_sds: BTreeSet<String>,
    pub excluded_sds_by_productivity: BTreeSet<String>,
    pub excluded_sds_by_gender_count: BTreeSet<String>,
    pub excluded_university_uda_pairs: BTreeSet<(String, String)>,
    pub sds_decisions: Vec<SdsDecision>,
    pub pair_decisions: Vec<PairDecision>,
}

impl EligibilityReport {
    pub fn is_retained(&self, r: &Researcher) -> bool {
        self.retained_sds.contains(&r.sds_id)
            && self.pair_decisions.binary_search_by(|p| {
                (p.university_id.as_str(), p.uda_id.as_str())
                    .cmp(&(r.university_id.as_str(), r.uda_id.as_str()))
            })
            .map(|i| self.pair_decisions[i].retained)
            .unwrap_or(false)
    }

    /// Retained (university, UDA) pairs in ascending order.
    pub fn retained_pairs(&self) -> impl Iterator<Item = (&str, &str)> {
        self.pair_decisions
            .iter()
            .filter(|p| p.retained)
            .map(|p| (p.university_id.as_str(), p.uda_id.as_str()))
    }
}

#[derive(Default)]
struct Tally {
    members: usize,
    productive: usize,
    female: usize,
    male: usize,
}

pub fn apply_eligibility_filters(
    d: &Dataset,
    productivity: &BTreeMap<String, IndividualProductivity>,
    thresholds: &EligibilityThresholds,
) -> EligibilityReport {
    let mut tallies: BTreeMap<&str, Tally> = BTreeMap::new();
    for r in &d.researchers {
        let t = tallies.entry(r.sds_id.as_str()).or_default();
        t.members += 1;
        if productivity.get(&r.researcher_id).is_some_and(|p| p.is_productive) {
            t.productive += 1;
        }
        match r.gender {
            Gender::Female => t.female += 1,
            Gender::Male => t.male += 1,
        }
    }

    let mut report = EligibilityReport::default();
    for (sds, t) in &tallies {
        let share_ok = t.productive as f64 >= thresholds.min_productive_share * t.members as f64;
        let gender_ok = t.female >= thresholds.min_per_gender && t.male >= thresholds.min_per_gender;
        let outcome = if !share_ok {
            report.excluded_sds_by_productivity.insert(sds.to_string());
            SdsOutcome::ExcludedByProductivity
        } else if !gender_ok {
            report.excluded_sds_by_gender_count.insert(sds.to_string());
            SdsOutcome::ExcludedByGenderCount
        } else {
            report.retained_sds.insert(sds.to_string());
            SdsOutcome::Retained
        };
        report.sds_decisions.push(SdsDecision {
            sds_id: sds.to_string(),
            members: t.members,
            productive: t.productive,
            female: t.female,
            male: t.male,
            outcome,
        });
    }

    let mut pairs: BTreeMap<(&str, &str), usize> = BTreeMap::new();
    for r in d.researchers.iter().filter(|r| report.retained_sds.contains(&r.sds_id)) {
        *pairs.entry((r.university_id.as_str(), r.uda_id.as_str())).or_default() += 1;
    }
    for ((u, uda), professors) in pairs {
        let retained = professors >= thresholds.min_professors;
        if !retained {
            report.excluded_university_uda_pairs.insert((u.to_string(), uda.to_string()));
        }
        report.pair_decisions.push(PairDecision {
            university_id: u.to_string(),
            uda_id: uda.to_string(),
            professors,
            retained,
        });
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::tests::researcher;
    use crate::model::{FieldTaxonomy, WeightingScheme, Window};
    use proptest::prelude::*;

    /// `female`/`male` members of `sds` at `univ`; the first `productive`
    /// researchers get a publication.
    fn population(spec: &[(&str, &str, usize, usize, usize)]) -> (Dataset, BTreeMap<String, IndividualProductivity>) {
        let mut researchers = Vec::new();
        let mut prod = BTreeMap::new();
        let mut taxonomy = FieldTaxonomy::default();
        let mut next = 0;
        for (sds, univ, female, male, productive) in spec {
            taxonomy.insert(sds, "UDA1", WeightingScheme::Uniform);
            for i in 0..female + male {
                let id = format!("R{next:05}");
                next += 1;
                let g = if i < *female { Gender::Female } else { Gender::Male };
                researchers.push(researcher(&id, g, univ, sds));
                let mut p = IndividualProductivity::unproductive(&id);
                if i < *productive {
                    p.n_publications = 1;
                    p.is_productive = true;
                }
                prod.insert(id, p);
            }
        }
        let d = Dataset {
            researchers,
            publications: vec![],
            authorships: vec![],
            taxonomy,
            window: Window::new(2006, 2010),
        };
        (d, prod)
    }

    #[test]
    fn productivity_boundary() {
        let (d, p) = population(&[("S1", "U1", 50, 50, 49), ("S2", "U1", 50, 50, 50)]);
        let r = apply_eligibility_filters(&d, &p, &EligibilityThresholds::default());
        assert!(r.excluded_sds_by_productivity.contains("S1"));
        assert!(r.retained_sds.contains("S2"));
    }

    #[test]
    fn too_few_women() {
        let (d, p) = population(&[("S1", "U1", 29, 200, 229)]);
        let r = apply_eligibility_filters(&d, &p, &EligibilityThresholds::default());
        assert_eq!(r.excluded_sds_by_gender_count, BTreeSet::from(["S1".to_string()]));
        assert!(r.retained_sds.is_empty());
        assert_eq!(r.sds_decisions[0].female, 29);
    }

    #[test]
    fn inclusive_thresholds_and_pair_filter() {
        // 60 members, exactly 30 productive, exactly 30 per gender.
        let (mut d, p) = population(&[("S1", "U1", 30, 30, 30)]);
        // Spread: 10 at U2, 9 at U3, the rest at U1.
        for (i, r) in d.researchers.iter_mut().enumerate() {
            r.university_id = match i {
                0..=9 => "U2".into(),
                10..=18 => "U3".into(),
                _ => "U1".into(),
            };
        }
        let r = apply_eligibility_filters(&d, &p, &EligibilityThresholds::default());
        assert!(r.retained_sds.contains("S1"));
        let pairs: Vec<(&str, usize, bool)> = r
            .pair_decisions
            .iter()
            .map(|x| (x.university_id.as_str(), x.professors, x.retained))
            .collect();
        assert_eq!(pairs, vec![("U1", 41, true), ("U2", 10, true), ("U3", 9, false)]);
        assert!(r.excluded_university_uda_pairs.contains(&("U3".to_string(), "UDA1".to_string())));
        assert!(r.is_retained(&d.researchers[0]));
        assert!(!r.is_retained(&d.researchers[12]));
    }

    #[test]
    fn pair_counts_only_retained_sds() {
        // U1 has 6 in a retained SDS and 6 in an excluded one: below 10.
        let (d, p) = population(&[("S1", "U1", 3, 3, 6), ("S2", "U1", 3, 3, 0)]);
        let t = EligibilityThresholds { min_productive_share: 0.5, min_per_gender: 3, min_professors: 10 };
        let r = apply_eligibility_filters(&d, &p, &t);
        assert_eq!(r.retained_sds, BTreeSet::from(["S1".to_string()]));
        assert_eq!(r.pair_decisions[0].professors, 6);
        assert!(!r.pair_decisions[0].retained);
    }

    #[test]
    fn empty_dataset_yields_empty_report() {
        let (d, p) = population(&[]);
        assert_eq!(apply_eligibility_filters(&d, &p, &EligibilityThresholds::default()), EligibilityReport::default());
    }

    proptest! {
        #[test]
        fn sds_sets_partition_input(
            spec in proptest::collection::vec((0usize..40, 0usize..40, 0usize..80), 1..6)
        ) {
            let names: Vec<String> = (0..spec.len()).map(|i| format!("S{i}")).collect();
            let rows: Vec<(&str, &str, usize, usize, usize)> = spec
                .iter()
                .zip(&names)
                .filter(|((f, m, _), _)| f + m > 0)
                .map(|((f, m, p), n)| (n.as_str(), "U1", *f, *m, (*p).min(f + m)))
                .collect();
            let (d, p) = population(&rows);
            let r = apply_eligibility_filters(&d, &p, &EligibilityThresholds::default());
            let all: BTreeSet<String> = d.researchers.iter().map(|x| x.sds_id.clone()).collect();
            let union: BTreeSet<String> = r.retained_sds.iter()
                .chain(&r.excluded_sds_by_productivity)
                .chain(&r.excluded_sds_by_gender_count)
                .cloned()
                .collect();
            prop_assert_eq!(union, all.clone());
            prop_assert_eq!(
                r.retained_sds.len() + r.excluded_sds_by_productivity.len() + r.excluded_sds_by_gender_count.len(),
                all.len()
            );
        }

        #[test]
        fn adding_productive_minority_member_never_excludes(
            female in 0usize..40, male in 0usize..40, productive in 0usize..80,
        ) {
            prop_assume!(female + male > 0);
            let productive = productive.min(female + male);
            let t = EligibilityThresholds { min_productive_share: 0.5, min_per_gender: 20, min_professors: 1 };
            let (d, p) = population(&[("S1", "U1", female, male, productive)]);
            let before = apply_eligibility_filters(&d, &p, &t);
            let (mut d2, mut p2) = (d.clone(), p.clone());
            let minority = if female <= male { Gender::Female } else { Gender::Male };
            d2.researchers.push(researcher("RX", minority, "U1", "S1"));
            p2.insert("RX".into(), IndividualProductivity {
                researcher_id: "RX".into(), fss: 0.3, n_publications: 1, is_productive: true,
            });
            let after = apply_eligibility_filters(&d2, &p2, &t);
            if before.retained_sds.contains("S1") {
                prop_assert!(after.retained_sds.contains("S1"));
            }
        }
    }
}
