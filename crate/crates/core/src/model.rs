//! Domain records and dataset-level validation.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Gender {
    #[serde(rename = "F")]
    Female,
    #[serde(rename = "M")]
    Male,
}

impl Gender {
    pub const ALL: [Gender; 2] = [Gender::Female, Gender::Male];

    pub fn code(self) -> &'static str {
        match self {
            Gender::Female => "F",
            Gender::Male => "M",
        }
    }
}

impl fmt::Display for Gender {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for Gender {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "F" => Ok(Gender::Female),
            "M" => Ok(Gender::Male),
            other => Err(format!("expected F or M, got {other:?}")),
        }
    }
}

/// Academic rank label. The three standard ranks are named; anything else is
/// carried verbatim so wage tables can price custom ranks.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "String", from = "String")]
pub enum AcademicRank {
    Assistant,
    Associate,
    Full,
    Other(String),
}

impl AcademicRank {
    pub fn label(&self) -> &str {
        match self {
            AcademicRank::Assistant => "assistant",
            AcademicRank::Associate => "associate",
            AcademicRank::Full => "full",
            AcademicRank::Other(s) => s,
        }
    }
}

impl From<String> for AcademicRank {
    fn from(s: String) -> Self {
        match s.as_str() {
            "assistant" => AcademicRank::Assistant,
            "associate" => AcademicRank::Associate,
            "full" => AcademicRank::Full,
            _ => AcademicRank::Other(s),
        }
    }
}

impl From<AcademicRank> for String {
    fn from(r: AcademicRank) -> Self {
        r.label().to_string()
    }
}

impl fmt::Display for AcademicRank {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// How co-author credit is split along a byline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightingScheme {
    /// `1 / n_authors` for every position.
    #[default]
    Uniform,
    /// Position `k` receives `(1/k) / H(n)`, with `H(n)` the n-th harmonic number.
    Harmonic,
}

impl WeightingScheme {
    pub fn label(self) -> &'static str {
        match self {
            WeightingScheme::Uniform => "uniform",
            WeightingScheme::Harmonic => "harmonic",
        }
    }
}

impl FromStr for WeightingScheme {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "uniform" => Ok(WeightingScheme::Uniform),
            "harmonic" => Ok(WeightingScheme::Harmonic),
            other => Err(format!("expected uniform or harmonic, got {other:?}")),
        }
    }
}

/// Inclusive range of calendar years under evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub start: i32,
    pub end: i32,
}

impl Window {
    pub fn new(start: i32, end: i32) -> Self {
        Window { start, end }
    }

    /// Number of calendar years covered, as the upper bound for `years_active`.
    pub fn len_years(&self) -> f64 {
        f64::from(self.end - self.start + 1)
    }

    pub fn contains(&self, year: i32) -> bool {
        (self.start..=self.end).contains(&year)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Researcher {
    pub researcher_id: String,
    pub gender: Gender,
    pub university_id: String,
    pub sds_id: String,
    pub uda_id: String,
    pub academic_rank: AcademicRank,
    /// Years of service inside the window (`t`).
    pub years_active: f64,
    /// Average yearly wage (`w`).
    pub wage: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Publication {
    pub pub_id: String,
    pub year: i32,
    pub subject_categories: Vec<String>,
    pub citations: u32,
    pub n_authors: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Authorship {
    pub pub_id: String,
    pub researcher_id: String,
    pub byline_position: u32,
}

/// SDS → UDA grouping plus the byline weighting each SDS uses.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FieldTaxonomy {
    pub sds_to_uda: BTreeMap<String, String>,
    pub schemes: BTreeMap<String, WeightingScheme>,
}

impl FieldTaxonomy {
    pub fn insert(&mut self, sds_id: &str, uda_id: &str, scheme: WeightingScheme) {
        self.sds_to_uda.insert(sds_id.to_string(), uda_id.to_string());
        self.schemes.insert(sds_id.to_string(), scheme);
    }

    pub fn uda_of(&self, sds_id: &str) -> Option<&str> {
        self.sds_to_uda.get(sds_id).map(String::as_str)
    }

    pub fn scheme_of(&self, sds_id: &str) -> WeightingScheme {
        self.schemes.get(sds_id).copied().unwrap_or_default()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub researchers: Vec<Researcher>,
    pub publications: Vec<Publication>,
    pub authorships: Vec<Authorship>,
    pub taxonomy: FieldTaxonomy,
    pub window: Window,
}

impl Dataset {
    /// Returns a copy with every record list in ascending id order, the form
    /// used for fingerprints and serialization.
    pub fn canonicalized(&self) -> Dataset {
        let mut d = self.clone();
        d.researchers.sort_by(|a, b| a.researcher_id.cmp(&b.researcher_id));
        d.publications.sort_by(|a, b| a.pub_id.cmp(&b.pub_id));
        d.authorships.sort_by(|a, b| {
            (&a.pub_id, a.byline_position, &a.researcher_id).cmp(&(
                &b.pub_id,
                b.byline_position,
                &b.researcher_id,
            ))
        });
        d
    }
}

/// Which invariant a [`Violation`] breaks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    InvalidWindow,
    EmptyId,
    DuplicateId,
    DanglingReference,
    DuplicateAuthorship,
    YearsActiveNotPositive,
    YearsActiveExceedsWindow,
    WageNotPositive,
    SdsNotInTaxonomy,
    UdaMismatch,
    NoSubjectCategories,
    NoAuthors,
    YearAfterWindow,
    PositionOutOfRange,
}

impl Rule {
    pub fn describe(self) -> &'static str {
        match self {
            Rule::InvalidWindow => "window start must not exceed end",
            Rule::EmptyId => "ids must be non-empty",
            Rule::DuplicateId => "ids must be unique",
            Rule::DanglingReference => "referenced id must exist",
            Rule::DuplicateAuthorship => "(pub_id, researcher_id) must be unique",
            Rule::YearsActiveNotPositive => "years_active must be > 0",
            Rule::YearsActiveExceedsWindow => "years_active must not exceed the window length",
            Rule::WageNotPositive => "wage must be > 0",
            Rule::SdsNotInTaxonomy => "sds_id must appear in the taxonomy",
            Rule::UdaMismatch => "uda_id must match the taxonomy entry for the sds_id",
            Rule::NoSubjectCategories => "subject_categories must be non-empty",
            Rule::NoAuthors => "n_authors must be >= 1",
            Rule::YearAfterWindow => "publication year must not be after the window end",
            Rule::PositionOutOfRange => "byline_position must lie in 1..=n_authors",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    /// e.g. `researcher R1` or `authorship P3/R7`.
    pub record: String,
    pub field: String,
    pub rule: Rule,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} [{}]: {}", self.record, self.field, self.rule.describe())
    }
}

fn violation(record: String, field: &str, rule: Rule) -> Violation {
    Violation { record, field: field.to_string(), rule }
}

/// Checks every record invariant and cross-reference. An empty result means the
/// dataset is well formed.
pub fn validate_dataset(d: &Dataset) -> Vec<Violation> {
    let mut out = Vec::new();
    let window_len = d.window.len_years();

    if d.window.start > d.window.end {
        out.push(violation("window".into(), "start", Rule::InvalidWindow));
    }

    let mut researcher_ids = HashSet::new();
    for r in &d.researchers {
        let rec = format!("researcher {}", r.researcher_id);
        if r.researcher_id.is_empty() {
            out.push(violation(rec.clone(), "researcher_id", Rule::EmptyId));
        }
        if !researcher_ids.insert(r.researcher_id.as_str()) {
            out.push(violation(rec.clone(), "researcher_id", Rule::DuplicateId));
        }
        if !(r.years_active > 0.0) {
            out.push(violation(rec.clone(), "years_active", Rule::YearsActiveNotPositive));
        } else if r.years_active > window_len {
            out.push(violation(rec.clone(), "years_active", Rule::YearsActiveExceedsWindow));
        }
        if !(r.wage > 0.0) || !r.wage.is_finite() {
            out.push(violation(rec.clone(), "wage", Rule::WageNotPositive));
        }
        match d.taxonomy.uda_of(&r.sds_id) {
            None => out.push(violation(rec, "sds_id", Rule::SdsNotInTaxonomy)),
            Some(uda) if uda != r.uda_id => out.push(violation(rec, "uda_id", Rule::UdaMismatch)),
            Some(_) => {}
        }
    }

    let mut pubs: HashMap<&str, &Publication> = HashMap::new();
    for p in &d.publications {
        let rec = format!("publication {}", p.pub_id);
        if p.pub_id.is_empty() {
            out.push(violation(rec.clone(), "pub_id", Rule::EmptyId));
        }
        if pubs.insert(p.pub_id.as_str(), p).is_some() {
            out.push(violation(rec.clone(), "pub_id", Rule::DuplicateId));
        }
        if p.subject_categories.is_empty() || p.subject_categories.iter().any(String::is_empty) {
            out.push(violation(rec.clone(), "subject_categories", Rule::NoSubjectCategories));
        }
        if p.n_authors == 0 {
            out.push(violation(rec.clone(), "n_authors", Rule::NoAuthors));
        }
        if p.year > d.window.end {
            out.push(violation(rec, "year", Rule::YearAfterWindow));
        }
    }

    let mut seen_pairs = BTreeSet::new();
    for a in &d.authorships {
        let rec = format!("authorship {}/{}", a.pub_id, a.researcher_id);
        match pubs.get(a.pub_id.as_str()) {
            None => out.push(violation(rec.clone(), "pub_id", Rule::DanglingReference)),
            Some(p) => {
                if a.byline_position == 0 || a.byline_position > p.n_authors {
                    out.push(violation(rec.clone(), "byline_position", Rule::PositionOutOfRange));
                }
            }
        }
        if !researcher_ids.contains(a.researcher_id.as_str()) {
            out.push(violation(rec.clone(), "researcher_id", Rule::DanglingReference));
        }
        if !seen_pairs.insert((a.pub_id.as_str(), a.researcher_id.as_str())) {
            out.push(violation(rec, "researcher_id", Rule::DuplicateAuthorship));
        }
    }

    out
}
