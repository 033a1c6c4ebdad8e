//! Individual productivity: citation baselines, byline fractions and FSS.
//!
//! For a researcher with wage `w`, `t` years active and attributed publications
//! `i = 1..N`:
//!
//! ```text
//! FSS = (1/w) * (1/t) * sum_i (c_i / cbar_i) * f_i
//! ```
//!
//! where `c_i` is the citation count, `cbar_i` the mean citations of cited
//! publications sharing the year and subject category, and `f_i` the
//! researcher's byline fraction.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Authorship, Dataset, FieldTaxonomy, Publication, Researcher, WeightingScheme, Window};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FssError {
    #[error("byline position {position} outside 1..={n_authors}")]
    PositionOutOfRange { position: u32, n_authors: u32 },
    #[error("researcher {researcher_id}: {reason}")]
    InvalidResearcher { researcher_id: String, reason: String },
    #[error("publication {pub_id} (year {year}) lies outside the evaluation window")]
    PublicationOutsideWindow { pub_id: String, year: i32 },
    #[error("authorship of {pub_id} belongs to {found}, not {expected}")]
    AuthorshipMismatch { pub_id: String, expected: String, found: String },
    #[error("baseline cell ({year}, {category}) must be positive, got {value}")]
    NonPositiveBaseline { year: i32, category: String, value: f64 },
}

/// Share of credit for one byline position. Implement this to plug in custom
/// weights; the built-in schemes are [`WeightingScheme::Uniform`] and
/// [`WeightingScheme::Harmonic`].
pub trait BylineWeighting {
    /// Called only with `1 <= position <= n_authors`. Fractions over a full
    /// byline must sum to one.
    fn weight(&self, position: u32, n_authors: u32) -> f64;
}

impl BylineWeighting for WeightingScheme {
    fn weight(&self, position: u32, n_authors: u32) -> f64 {
        match self {
            WeightingScheme::Uniform => 1.0 / f64::from(n_authors),
            WeightingScheme::Harmonic => {
                let harmonic: f64 = (1..=n_authors).map(|k| 1.0 / f64::from(k)).sum();
                (1.0 / f64::from(position)) / harmonic
            }
        }
    }
}

pub fn fractional_contribution<W: BylineWeighting + ?Sized>(
    position: u32,
    n_authors: u32,
    scheme: &W,
) -> Result<f64, FssError> {
    if position == 0 || position > n_authors {
        return Err(FssError::PositionOutOfRange { position, n_authors });
    }
    Ok(scheme.weight(position, n_authors))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaselineProvenance {
    Computed,
    External,
}

/// `(year, subject_category) -> cbar`. Cells without any cited publication are
/// absent rather than zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CitationBaselineTable {
    pub provenance: BaselineProvenance,
    cells: BTreeMap<i32, BTreeMap<String, f64>>,
}

impl CitationBaselineTable {
    pub fn external<I>(rows: I) -> Result<Self, FssError>
    where
        I: IntoIterator<Item = (i32, String, f64)>,
    {
        let mut cells: BTreeMap<i32, BTreeMap<String, f64>> = BTreeMap::new();
        for (year, category, value) in rows {
            if !(value > 0.0) || !value.is_finite() {
                return Err(FssError::NonPositiveBaseline { year, category, value });
            }
            cells.entry(year).or_default().insert(category, value);
        }
        Ok(CitationBaselineTable { provenance: BaselineProvenance::External, cells })
    }

    pub fn get(&self, year: i32, category: &str) -> Option<f64> {
        self.cells.get(&year)?.get(category).copied()
    }

    pub fn len(&self) -> usize {
        self.cells.values().map(BTreeMap::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (i32, &str, f64)> {
        self.cells
            .iter()
            .flat_map(|(y, row)| row.iter().map(move |(c, v)| (*y, c.as_str(), *v)))
    }

    /// Baseline used for one publication: the mean over its distinct
    /// categories that have a cell. `None` when no category has one.
    pub fn for_publication(&self, p: &Publication) -> Option<f64> {
        let categories: BTreeSet<&str> = p.subject_categories.iter().map(String::as_str).collect();
        let (sum, count) = categories
            .into_iter()
            .filter_map(|c| self.get(p.year, c))
            .fold((0.0, 0u32), |(s, n), v| (s + v, n + 1));
        (count > 0).then(|| sum / f64::from(count))
    }
}

/// Mean citations of cited publications per `(year, category)` cell. A
/// publication listing several categories feeds each of them once.
pub fn compute_citation_baselines(pubs: &[Publication]) -> CitationBaselineTable {
    let mut acc: BTreeMap<i32, BTreeMap<&str, (u64, u64)>> = BTreeMap::new();
    for p in pubs.iter().filter(|p| p.citations > 0) {
        let categories: BTreeSet<&str> = p.subject_categories.iter().map(String::as_str).collect();
        let row = acc.entry(p.year).or_default();
        for c in categories {
            let cell = row.entry(c).or_insert((0, 0));
            cell.0 += u64::from(p.citations);
            cell.1 += 1;
        }
    }
    let cells = acc
        .into_iter()
        .map(|(year, row)| {
            let row = row
                .into_iter()
                .map(|(c, (sum, n))| (c.to_string(), sum as f64 / n as f64))
                .collect();
            (year, row)
        })
        .collect();
    CitationBaselineTable { provenance: BaselineProvenance::Computed, cells }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndividualProductivity {
    pub researcher_id: String,
    pub fss: f64,
    pub n_publications: usize,
    pub is_productive: bool,
}

impl IndividualProductivity {
    pub fn unproductive(researcher_id: &str) -> Self {
        IndividualProductivity {
            researcher_id: researcher_id.to_string(),
            fss: 0.0,
            n_publications: 0,
            is_productive: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FssOutcome {
    pub productivity: IndividualProductivity,
    /// Publications that contributed zero because none of their categories has
    /// a baseline cell.
    pub unresolved_baselines: Vec<String>,
}

pub fn individual_fss(
    r: &Researcher,
    attributed: &[(&Publication, &Authorship)],
    baselines: &CitationBaselineTable,
    taxonomy: &FieldTaxonomy,
    window: Window,
) -> Result<FssOutcome, FssError> {
    if !(r.wage > 0.0) {
        return Err(FssError::InvalidResearcher {
            researcher_id: r.researcher_id.clone(),
            reason: format!("wage must be > 0, got {}", r.wage),
        });
    }
    if !(r.years_active > 0.0) {
        return Err(FssError::InvalidResearcher {
            researcher_id: r.researcher_id.clone(),
            reason: format!("years_active must be > 0, got {}", r.years_active),
        });
    }
    let scheme = taxonomy.scheme_of(&r.sds_id);

    let mut ordered: Vec<&(&Publication, &Authorship)> = attributed.iter().collect();
    ordered.sort_by(|a, b| a.0.pub_id.cmp(&b.0.pub_id));

    let mut sum = 0.0;
    let mut unresolved = Vec::new();
    for (p, a) in ordered {
        if a.researcher_id != r.researcher_id {
            return Err(FssError::AuthorshipMismatch {
                pub_id: p.pub_id.clone(),
                expected: r.researcher_id.clone(),
                found: a.researcher_id.clone(),
            });
        }
        if !window.contains(p.year) {
            return Err(FssError::PublicationOutsideWindow { pub_id: p.pub_id.clone(), year: p.year });
        }
        let fraction = fractional_contribution(a.byline_position, p.n_authors, &scheme)?;
        if p.citations == 0 {
            continue;
        }
        match baselines.for_publication(p) {
            Some(cbar) => sum += f64::from(p.citations) / cbar * fraction,
            None => unresolved.push(p.pub_id.clone()),
        }
    }

    let n = attributed.len();
    Ok(FssOutcome {
        productivity: IndividualProductivity {
            researcher_id: r.researcher_id.clone(),
            fss: sum / (r.wage * r.years_active),
            n_publications: n,
            is_productive: n >= 1,
        },
        unresolved_baselines: unresolved,
    })
}

/// In-window publications per researcher, plus the ids of publications that
/// were not attributed because they predate the window.
#[derive(Debug, Clone)]
pub struct Attribution<'a> {
    pub by_researcher: BTreeMap<&'a str, Vec<(&'a Publication, &'a Authorship)>>,
    pub rejected_outside_window: BTreeSet<String>,
}

/// Joins authorships to publications. Assumes a validated dataset; authorships
/// whose publication is missing are skipped.
pub fn attribute_publications(d: &Dataset) -> Attribution<'_> {
    let pubs: BTreeMap<&str, &Publication> =
        d.publications.iter().map(|p| (p.pub_id.as_str(), p)).collect();
    let mut by_researcher: BTreeMap<&str, Vec<(&Publication, &Authorship)>> = BTreeMap::new();
    let mut rejected = BTreeSet::new();
    for a in &d.authorships {
        let Some(p) = pubs.get(a.pub_id.as_str()) else { continue };
        if d.window.contains(p.year) {
            by_researcher.entry(a.researcher_id.as_str()).or_default().push((p, a));
        } else {
            rejected.insert(p.pub_id.clone());
        }
    }
    Attribution { by_researcher, rejected_outside_window: rejected }
}

/// Productivity of every researcher in the dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductivitySet {
    pub records: BTreeMap<String, IndividualProductivity>,
    pub unresolved_baselines: BTreeSet<String>,
    pub rejected_outside_window: BTreeSet<String>,
}

pub fn compute_productivity(
    d: &Dataset,
    baselines: &CitationBaselineTable,
) -> Result<ProductivitySet, FssError> {
    let attribution = attribute_publications(d);
    let mut records = BTreeMap::new();
    let mut unresolved = BTreeSet::new();
    for r in &d.researchers {
        let attributed = attribution
            .by_researcher
            .get(r.researcher_id.as_str())
            .map(Vec::as_slice)
            .unwrap_or(&[]);
        let outcome = individual_fss(r, attributed, baselines, &d.taxonomy, d.window)?;
        unresolved.extend(outcome.unresolved_baselines);
        records.insert(r.researcher_id.clone(), outcome.productivity);
    }
    Ok(ProductivitySet {
        records,
        unresolved_baselines: unresolved,
        rejected_outside_window: attribution.rejected_outside_window,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{AcademicRank, Gender};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn publication(id: &str, year: i32, cats: &[&str], citations: u32, n_authors: u32) -> Publication {
        Publication {
            pub_id: id.into(),
            year,
            subject_categories: cats.iter().map(|c| c.to_string()).collect(),
            citations,
            n_authors,
        }
    }

    fn authorship(pub_id: &str, rid: &str, pos: u32) -> Authorship {
        Authorship { pub_id: pub_id.into(), researcher_id: rid.into(), byline_position: pos }
    }

    fn researcher(wage: f64, years: f64) -> Researcher {
        Researcher {
            researcher_id: "R1".into(),
            gender: Gender::Female,
            university_id: "U1".into(),
            sds_id: "S1".into(),
            uda_id: "A".into(),
            academic_rank: AcademicRank::Associate,
            years_active: years,
            wage,
        }
    }

    fn baseline(cells: &[(i32, &str, f64)]) -> CitationBaselineTable {
        CitationBaselineTable::external(cells.iter().map(|(y, c, v)| (*y, c.to_string(), *v))).unwrap()
    }

    #[test]
    fn uniform_fraction_ignores_position() {
        let f = fractional_contribution(2, 4, &WeightingScheme::Uniform).unwrap();
        assert_abs_diff_eq!(f, 0.25, epsilon = 1e-12);
    }

    #[test]
    fn sole_author_gets_full_credit() {
        for s in [WeightingScheme::Uniform, WeightingScheme::Harmonic] {
            assert_eq!(fractional_contribution(1, 1, &s).unwrap(), 1.0);
        }
    }

    #[test]
    fn harmonic_first_of_three() {
        let f = fractional_contribution(1, 3, &WeightingScheme::Harmonic).unwrap();
        assert_abs_diff_eq!(f, 6.0 / 11.0, epsilon = 1e-12);
        assert_abs_diff_eq!(f, 0.545_454_545_454_545_4, epsilon = 1e-12);
    }

    #[test]
    fn position_out_of_range() {
        assert_eq!(
            fractional_contribution(5, 4, &WeightingScheme::Uniform),
            Err(FssError::PositionOutOfRange { position: 5, n_authors: 4 })
        );
        assert!(fractional_contribution(0, 4, &WeightingScheme::Harmonic).is_err());
    }

    #[test]
    fn baseline_excludes_uncited() {
        let pubs = vec![
            publication("P1", 2008, &["C"], 0, 1),
            publication("P2", 2008, &["C"], 4, 1),
            publication("P3", 2008, &["C"], 8, 1),
            publication("P4", 2009, &["C"], 3, 1),
            publication("P5", 2007, &["D"], 0, 1),
            publication("P6", 2007, &["D"], 0, 1),
        ];
        let t = compute_citation_baselines(&pubs);
        assert_eq!(t.get(2008, "C"), Some(6.0));
        assert_eq!(t.get(2009, "C"), Some(3.0));
        assert_eq!(t.get(2007, "D"), None);
        assert_eq!(t.len(), 2);
        assert_eq!(t.provenance, BaselineProvenance::Computed);
    }

    #[test]
    fn multi_category_publication_feeds_every_cell() {
        let pubs = vec![publication("P1", 2008, &["C", "D"], 4, 1), publication("P2", 2008, &["D"], 8, 1)];
        let t = compute_citation_baselines(&pubs);
        assert_eq!(t.get(2008, "C"), Some(4.0));
        assert_eq!(t.get(2008, "D"), Some(6.0));
        // resolved baseline is the mean over the publication's categories
        assert_eq!(t.for_publication(&pubs[0]), Some(5.0));
    }

    #[test]
    fn zero_publications_is_unproductive() {
        let out = individual_fss(
            &researcher(1.0, 5.0),
            &[],
            &baseline(&[]),
            &FieldTaxonomy::default(),
            Window::new(2006, 2010),
        )
        .unwrap();
        assert_eq!(out.productivity.fss, 0.0);
        assert!(!out.productivity.is_productive);
        assert_eq!(out.productivity.n_publications, 0);
    }

    #[test]
    fn hand_evaluated_fss() {
        let b = baseline(&[(2008, "C", 5.0)]);
        let p1 = publication("P1", 2008, &["C"], 10, 2);
        let a1 = authorship("P1", "R1", 1);
        let w = Window::new(2006, 2010);
        let tax = FieldTaxonomy::default();
        let out = individual_fss(&researcher(1.0, 5.0), &[(&p1, &a1)], &b, &tax, w).unwrap();
        assert_abs_diff_eq!(out.productivity.fss, 0.2, epsilon = 1e-12);

        let p2 = publication("P2", 2009, &["C"], 0, 3);
        let a2 = authorship("P2", "R1", 3);
        let out = individual_fss(&researcher(2.0, 5.0), &[(&p1, &a1), (&p2, &a2)], &b, &tax, w).unwrap();
        assert_abs_diff_eq!(out.productivity.fss, 0.1, epsilon = 1e-12);
        assert_eq!(out.productivity.n_publications, 2);
        assert!(out.productivity.is_productive);
    }

    #[test]
    fn missing_baseline_contributes_zero_with_diagnostic() {
        let p = publication("P1", 2008, &["X"], 7, 1);
        let a = authorship("P1", "R1", 1);
        let out = individual_fss(
            &researcher(1.0, 1.0),
            &[(&p, &a)],
            &baseline(&[(2008, "C", 5.0)]),
            &FieldTaxonomy::default(),
            Window::new(2006, 2010),
        )
        .unwrap();
        assert_eq!(out.productivity.fss, 0.0);
        assert_eq!(out.unresolved_baselines, vec!["P1".to_string()]);
    }

    #[test]
    fn rejects_bad_inputs() {
        let w = Window::new(2006, 2010);
        let tax = FieldTaxonomy::default();
        let b = baseline(&[]);
        assert!(matches!(
            individual_fss(&researcher(0.0, 5.0), &[], &b, &tax, w),
            Err(FssError::InvalidResearcher { .. })
        ));
        assert!(matches!(
            individual_fss(&researcher(1.0, 0.0), &[], &b, &tax, w),
            Err(FssError::InvalidResearcher { .. })
        ));
        let p = publication("P1", 2004, &["C"], 1, 1);
        let a = authorship("P1", "R1", 1);
        assert!(matches!(
            individual_fss(&researcher(1.0, 5.0), &[(&p, &a)], &b, &tax, w),
            Err(FssError::PublicationOutsideWindow { .. })
        ));
        assert!(CitationBaselineTable::external([(2008, "C".to_string(), 0.0)]).is_err());
    }

    proptest! {
        #[test]
        fn fractions_sum_to_one(n in 1u32..200) {
            for s in [WeightingScheme::Uniform, WeightingScheme::Harmonic] {
                let total: f64 = (1..=n).map(|k| fractional_contribution(k, n, &s).unwrap()).sum();
                prop_assert!((total - 1.0).abs() < 1e-12);
                let in_range = (1..=n)
                    .map(|k| fractional_contribution(k, n, &s).unwrap())
                    .all(|f| f > 0.0 && f <= 1.0);
                prop_assert!(in_range);
            }
        }

        #[test]
        fn wage_and_time_scale_inversely(
            cites in proptest::collection::vec(0u32..50, 1..8),
            k in 0.1f64..20.0,
        ) {
            let b = baseline(&[(2008, "C", 3.7)]);
            let pubs: Vec<Publication> = cites
                .iter()
                .enumerate()
                .map(|(i, c)| publication(&format!("P{i}"), 2008, &["C"], *c, 3))
                .collect();
            let auths: Vec<Authorship> =
                pubs.iter().map(|p| authorship(&p.pub_id, "R1", 2)).collect();
            let attributed: Vec<_> = pubs.iter().zip(&auths).collect();
            let w = Window::new(2006, 2010);
            let tax = FieldTaxonomy::default();
            let base = individual_fss(&researcher(1.5, 4.0), &attributed, &b, &tax, w).unwrap();
            let wage = individual_fss(&researcher(1.5 * k, 4.0), &attributed, &b, &tax, w).unwrap();
            let time = individual_fss(&researcher(1.5, 4.0 * k.min(1.25)), &attributed, &b, &tax, w).unwrap();
            let tol = 1e-12 * base.productivity.fss.max(1.0);
            prop_assert!((wage.productivity.fss * k - base.productivity.fss).abs() < tol);
            prop_assert!((time.productivity.fss * k.min(1.25) - base.productivity.fss).abs() < tol);
        }

        #[test]
        fn duplicating_a_cell_keeps_its_baseline(cites in proptest::collection::vec(0u32..100, 1..20)) {
            let pubs: Vec<Publication> = cites
                .iter()
                .enumerate()
                .map(|(i, c)| publication(&format!("P{i}"), 2008, &["C"], *c, 1))
                .collect();
            let doubled: Vec<Publication> = pubs.iter().chain(pubs.iter()).cloned().collect();
            let once = compute_citation_baselines(&pubs);
            let twice = compute_citation_baselines(&doubled);
            prop_assert_eq!(once.get(2008, "C"), twice.get(2008, "C"));
        }

        #[test]
        fn uncited_publication_changes_count_not_fss(cites in proptest::collection::vec(1u32..50, 1..6)) {
            let b = baseline(&[(2008, "C", 4.0)]);
            let mut pubs: Vec<Publication> = cites
                .iter()
                .enumerate()
                .map(|(i, c)| publication(&format!("P{i}"), 2008, &["C"], *c, 2))
                .collect();
            let auths_for = |ps: &[Publication]| -> Vec<Authorship> {
                ps.iter().map(|p| authorship(&p.pub_id, "R1", 1)).collect()
            };
            let w = Window::new(2006, 2010);
            let tax = FieldTaxonomy::default();
            let a1 = auths_for(&pubs);
            let with: Vec<_> = pubs.iter().zip(&a1).collect();
            let before = individual_fss(&researcher(1.0, 5.0), &with, &b, &tax, w).unwrap().productivity;
            pubs.push(publication("PZ", 2009, &["C"], 0, 4));
            let a2 = auths_for(&pubs);
            let with: Vec<_> = pubs.iter().zip(&a2).collect();
            let after = individual_fss(&researcher(1.0, 5.0), &with, &b, &tax, w).unwrap().productivity;
            prop_assert_eq!(before.fss, after.fss);
            prop_assert_eq!(before.n_publications + 1, after.n_publications);
        }
    }
}
