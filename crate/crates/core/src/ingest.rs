//! CSV inputs and outputs.
//!
//! | file            | columns                                                                      |
//! |-----------------|------------------------------------------------------------------------------|
//! | researchers.csv | researcher_id,gender(F/M),university_id,sds_id,uda_id,academic_rank,years_active |
//! | publications.csv| pub_id,year,subject_categories(`;`-separated),citations,n_authors            |
//! | authorships.csv | pub_id,researcher_id,byline_position                                         |
//! | taxonomy.csv    | sds_id,uda_id,weighting_scheme(uniform/harmonic)                             |
//! | wages.csv       | academic_rank,yearly_wage (optional; every rank defaults to 1.0)             |
//! | baselines.csv   | year,subject_category,c_bar (optional)                                       |
//!
//! Columns are matched by header name. Ids are case-sensitive.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::File;
use std::io;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eligibility::EligibilityThresholds;
use crate::fss::{CitationBaselineTable, FssError};
use crate::model::{
    validate_dataset, AcademicRank, Authorship, Dataset, FieldTaxonomy, Gender, Publication, Researcher,
    Violation, WeightingScheme, Window,
};

pub const RESEARCHERS_FILE: &str = "researchers.csv";
pub const PUBLICATIONS_FILE: &str = "publications.csv";
pub const AUTHORSHIPS_FILE: &str = "authorships.csv";
pub const TAXONOMY_FILE: &str = "taxonomy.csv";
pub const WAGES_FILE: &str = "wages.csv";
pub const BASELINES_FILE: &str = "baselines.csv";

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: missing column {column:?}")]
    MissingColumn { path: PathBuf, column: &'static str },
    #[error("{path}:{line}: column {column:?}: {message}")]
    MalformedRow { path: PathBuf, line: u64, column: String, message: String },
    #[error("{path}:{line}: duplicate id {id:?}")]
    DuplicateId { path: PathBuf, line: u64, id: String },
    #[error("{path}:{line}: {column} {id:?} does not exist")]
    DanglingReference { path: PathBuf, line: u64, column: &'static str, id: String },
    #[error("researcher {researcher_id}: no wage for rank {rank:?}")]
    MissingWageForRank { researcher_id: String, rank: String },
    #[error("rank {rank:?} has more than one wage ({first} and {second})")]
    InconsistentWage { rank: String, first: f64, second: f64 },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("dataset has {} violation(s); first: {}", .0.len(), .0.first().map(ToString::to_string).unwrap_or_default())]
    Validation(Vec<Violation>),
    #[error(transparent)]
    Baseline(#[from] FssError),
}

impl IngestError {
    /// True for integrity problems in otherwise readable data.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            IngestError::DuplicateId { .. }
                | IngestError::DanglingReference { .. }
                | IngestError::MissingWageForRank { .. }
                | IngestError::Validation(_)
        )
    }
}

/// Where to read inputs from and how to evaluate them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestConfig {
    pub researchers: PathBuf,
    pub publications: PathBuf,
    pub authorships: PathBuf,
    pub taxonomy: PathBuf,
    #[serde(default)]
    pub wages: Option<PathBuf>,
    #[serde(default)]
    pub baselines: Option<PathBuf>,
    pub window: Window,
    /// Per-SDS weighting schemes that take precedence over taxonomy.csv.
    #[serde(default)]
    pub scheme_overrides: BTreeMap<String, WeightingScheme>,
    #[serde(default)]
    pub thresholds: EligibilityThresholds,
    /// Normalize against baselines.csv instead of baselines computed from the
    /// publications file.
    #[serde(default)]
    pub use_external_baselines: bool,
}

impl IngestConfig {
    /// Standard file names inside `dir`; wages.csv and baselines.csv are
    /// picked up when present.
    pub fn from_dir(dir: &Path, window: Window) -> Self {
        let optional = |name: &str| {
            let p = dir.join(name);
            p.exists().then_some(p)
        };
        IngestConfig {
            researchers: dir.join(RESEARCHERS_FILE),
            publications: dir.join(PUBLICATIONS_FILE),
            authorships: dir.join(AUTHORSHIPS_FILE),
            taxonomy: dir.join(TAXONOMY_FILE),
            wages: optional(WAGES_FILE),
            baselines: optional(BASELINES_FILE),
            window,
            scheme_overrides: BTreeMap::new(),
            thresholds: EligibilityThresholds::default(),
            use_external_baselines: false,
        }
    }

    pub fn check(&self) -> Result<(), IngestError> {
        if self.window.start > self.window.end {
            return Err(IngestError::InvalidConfig(format!(
                "window start {} is after end {}",
                self.window.start, self.window.end
            )));
        }
        let t = &self.thresholds;
        if !(0.0..=1.0).contains(&t.min_productive_share) {
            return Err(IngestError::InvalidConfig(format!(
                "min_productive_share must lie in [0, 1], got {}",
                t.min_productive_share
            )));
        }
        let mut required = vec![&self.researchers, &self.publications, &self.authorships, &self.taxonomy];
        required.extend(self.wages.as_ref());
        if self.use_external_baselines {
            match &self.baselines {
                Some(b) => required.push(b),
                None => {
                    return Err(IngestError::InvalidConfig(
                        "use_external_baselines is set but no baselines file is configured".into(),
                    ))
                }
            }
        }
        for p in required {
            if !p.is_file() {
                return Err(IngestError::InvalidConfig(format!("{} does not exist", p.display())));
            }
        }
        Ok(())
    }
}

struct Table {
    path: PathBuf,
    columns: HashMap<String, usize>,
    reader: csv::Reader<File>,
}

struct Row<'a> {
    path: &'a Path,
    line: u64,
    columns: &'a HashMap<String, usize>,
    record: &'a csv::StringRecord,
}

impl Row<'_> {
    fn malformed(&self, column: &str, message: impl Into<String>) -> IngestError {
        IngestError::MalformedRow {
            path: self.path.to_path_buf(),
            line: self.line,
            column: column.to_string(),
            message: message.into(),
        }
    }

    fn text(&self, column: &str) -> Result<&str, IngestError> {
        let idx = self.columns[column];
        self.record
            .get(idx)
            .map(str::trim)
            .ok_or_else(|| self.malformed(column, "missing field"))
    }

    fn id(&self, column: &str) -> Result<String, IngestError> {
        let s = self.text(column)?;
        if s.is_empty() {
            return Err(self.malformed(column, "empty value"));
        }
        Ok(s.to_string())
    }

    fn parse<T: FromStr>(&self, column: &str) -> Result<T, IngestError>
    where
        T::Err: std::fmt::Display,
    {
        let s = self.text(column)?;
        s.parse::<T>().map_err(|e| self.malformed(column, format!("{s:?}: {e}")))
    }

    fn finite(&self, column: &str) -> Result<f64, IngestError> {
        let v: f64 = self.parse(column)?;
        if !v.is_finite() {
            return Err(self.malformed(column, "value must be finite"));
        }
        Ok(v)
    }
}

impl Table {
    fn open(path: &Path, required: &[&'static str]) -> Result<Self, IngestError> {
        let file = File::open(path).map_err(|source| IngestError::Io { path: path.to_path_buf(), source })?;
        let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
        let headers = reader.headers().map_err(|e| csv_error(path, e))?.clone();
        let columns: HashMap<String, usize> =
            headers.iter().enumerate().map(|(i, h)| (h.trim().to_string(), i)).collect();
        for c in required {
            if !columns.contains_key(*c) {
                return Err(IngestError::MissingColumn { path: path.to_path_buf(), column: c });
            }
        }
        Ok(Table { path: path.to_path_buf(), columns, reader })
    }

    fn for_each(mut self, mut f: impl FnMut(&Row<'_>) -> Result<(), IngestError>) -> Result<(), IngestError> {
        let mut record = csv::StringRecord::new();
        loop {
            match self.reader.read_record(&mut record) {
                Ok(false) => return Ok(()),
                Ok(true) => {
                    let line = record.position().map(|p| p.line()).unwrap_or(0);
                    f(&Row { path: &self.path, line, columns: &self.columns, record: &record })?;
                }
                Err(e) => return Err(csv_error(&self.path, e)),
            }
        }
    }
}

fn csv_error(path: &Path, e: csv::Error) -> IngestError {
    let line = e.position().map(|p| p.line()).unwrap_or(0);
    match e.into_kind() {
        csv::ErrorKind::Io(source) => IngestError::Io { path: path.to_path_buf(), source },
        kind => IngestError::MalformedRow {
            path: path.to_path_buf(),
            line,
            column: String::new(),
            message: format!("{kind:?}"),
        },
    }
}

pub fn load_taxonomy(
    path: &Path,
    overrides: &BTreeMap<String, WeightingScheme>,
) -> Result<FieldTaxonomy, IngestError> {
    let mut taxonomy = FieldTaxonomy::default();
    let mut seen = HashSet::new();
    Table::open(path, &["sds_id", "uda_id", "weighting_scheme"])?.for_each(|row| {
        let sds = row.id("sds_id")?;
        if !seen.insert(sds.clone()) {
            return Err(IngestError::DuplicateId { path: path.to_path_buf(), line: row.line, id: sds });
        }
        let uda = row.id("uda_id")?;
        let scheme: WeightingScheme = row.parse("weighting_scheme")?;
        taxonomy.insert(&sds, &uda, scheme);
        Ok(())
    })?;
    for (sds, scheme) in overrides {
        taxonomy.schemes.insert(sds.clone(), *scheme);
    }
    Ok(taxonomy)
}

pub fn load_wages(path: &Path) -> Result<BTreeMap<AcademicRank, f64>, IngestError> {
    let mut wages = BTreeMap::new();
    Table::open(path, &["academic_rank", "yearly_wage"])?.for_each(|row| {
        let rank = AcademicRank::from(row.id("academic_rank")?);
        let wage = row.finite("yearly_wage")?;
        if wage <= 0.0 {
            return Err(row.malformed("yearly_wage", "wage must be > 0"));
        }
        if wages.insert(rank.clone(), wage).is_some() {
            return Err(IngestError::DuplicateId {
                path: path.to_path_buf(),
                line: row.line,
                id: rank.label().to_string(),
            });
        }
        Ok(())
    })?;
    Ok(wages)
}

pub fn load_baselines(path: &Path) -> Result<CitationBaselineTable, IngestError> {
    let mut rows = Vec::new();
    let mut seen = HashSet::new();
    Table::open(path, &["year", "subject_category", "c_bar"])?.for_each(|row| {
        let year: i32 = row.parse("year")?;
        let category = row.id("subject_category")?;
        let c_bar = row.finite("c_bar")?;
        if c_bar <= 0.0 {
            return Err(row.malformed("c_bar", "baseline must be > 0"));
        }
        if !seen.insert((year, category.clone())) {
            return Err(IngestError::DuplicateId {
                path: path.to_path_buf(),
                line: row.line,
                id: format!("{year}/{category}"),
            });
        }
        rows.push((year, category, c_bar));
        Ok(())
    })?;
    Ok(CitationBaselineTable::external(rows)?)
}

/// Reads and validates every input file. The returned dataset has no
/// [`Violation`]s.
pub fn load_dataset(cfg: &IngestConfig) -> Result<Dataset, IngestError> {
    cfg.check()?;
    let taxonomy = load_taxonomy(&cfg.taxonomy, &cfg.scheme_overrides)?;
    let wages = cfg.wages.as_deref().map(load_wages).transpose()?;

    let mut researchers = Vec::new();
    let mut researcher_ids = HashSet::new();
    Table::open(
        &cfg.researchers,
        &["researcher_id", "gender", "university_id", "sds_id", "uda_id", "academic_rank", "years_active"],
    )?
    .for_each(|row| {
        let id = row.id("researcher_id")?;
        if !researcher_ids.insert(id.clone()) {
            return Err(IngestError::DuplicateId { path: cfg.researchers.clone(), line: row.line, id });
        }
        let academic_rank = AcademicRank::from(row.id("academic_rank")?);
        let wage = match &wages {
            None => 1.0,
            Some(table) => *table.get(&academic_rank).ok_or_else(|| IngestError::MissingWageForRank {
                researcher_id: id.clone(),
                rank: academic_rank.label().to_string(),
            })?,
        };
        let sds_id = row.id("sds_id")?;
        if taxonomy.uda_of(&sds_id).is_none() {
            return Err(IngestError::DanglingReference {
                path: cfg.researchers.clone(),
                line: row.line,
                column: "sds_id",
                id: sds_id,
            });
        }
        researchers.push(Researcher {
            researcher_id: id,
            gender: row.parse::<Gender>("gender")?,
            university_id: row.id("university_id")?,
            sds_id,
            uda_id: row.id("uda_id")?,
            academic_rank,
            years_active: row.finite("years_active")?,
            wage,
        });
        Ok(())
    })?;

    let mut publications = Vec::new();
    let mut pub_ids = HashSet::new();
    Table::open(&cfg.publications, &["pub_id", "year", "subject_categories", "citations", "n_authors"])?
        .for_each(|row| {
            let id = row.id("pub_id")?;
            if !pub_ids.insert(id.clone()) {
                return Err(IngestError::DuplicateId { path: cfg.publications.clone(), line: row.line, id });
            }
            let subject_categories: Vec<String> = row
                .text("subject_categories")?
                .split(';')
                .map(str::trim)
                .filter(|c| !c.is_empty())
                .map(String::from)
                .collect();
            if subject_categories.is_empty() {
                return Err(row.malformed("subject_categories", "at least one category is required"));
            }
            publications.push(Publication {
                pub_id: id,
                year: row.parse("year")?,
                subject_categories,
                citations: row.parse("citations")?,
                n_authors: row.parse("n_authors")?,
            });
            Ok(())
        })?;

    let mut authorships = Vec::new();
    Table::open(&cfg.authorships, &["pub_id", "researcher_id", "byline_position"])?.for_each(|row| {
        let pub_id = row.id("pub_id")?;
        if !pub_ids.contains(&pub_id) {
            return Err(IngestError::DanglingReference {
                path: cfg.authorships.clone(),
                line: row.line,
                column: "pub_id",
                id: pub_id,
            });
        }
        let researcher_id = row.id("researcher_id")?;
        if !researcher_ids.contains(&researcher_id) {
            return Err(IngestError::DanglingReference {
                path: cfg.authorships.clone(),
                line: row.line,
                column: "researcher_id",
                id: researcher_id,
            });
        }
        authorships.push(Authorship { pub_id, researcher_id, byline_position: row.parse("byline_position")? });
        Ok(())
    })?;

    let dataset = Dataset { researchers, publications, authorships, taxonomy, window: cfg.window };
    let violations = validate_dataset(&dataset);
    if !violations.is_empty() {
        return Err(IngestError::Validation(violations));
    }
    Ok(dataset)
}

fn writer(path: &Path) -> Result<csv::Writer<File>, IngestError> {
    let file = File::create(path).map_err(|source| IngestError::Io { path: path.to_path_buf(), source })?;
    Ok(csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(file))
}

fn write_rows<I, R>(path: &Path, header: &[&str], rows: I) -> Result<(), IngestError>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator,
    R::Item: AsRef<[u8]>,
{
    let err = |e: csv::Error| csv_error(path, e);
    let mut w = writer(path)?;
    w.write_record(header).map_err(err)?;
    for r in rows {
        w.write_record(r).map_err(err)?;
    }
    w.flush().map_err(|source| IngestError::Io { path: path.to_path_buf(), source })
}

/// Writes the dataset as the CSV file set read by [`load_dataset`], records in
/// ascending id order. Wages go to wages.csv and must be uniform per rank.
pub fn write_dataset(d: &Dataset, dir: &Path) -> Result<(), IngestError> {
    std::fs::create_dir_all(dir).map_err(|source| IngestError::Io { path: dir.to_path_buf(), source })?;
    let d = d.canonicalized();

    let mut wages: BTreeMap<&AcademicRank, f64> = BTreeMap::new();
    for r in &d.researchers {
        if let Some(&w) = wages.get(&r.academic_rank) {
            if w != r.wage {
                return Err(IngestError::InconsistentWage {
                    rank: r.academic_rank.label().to_string(),
                    first: w,
                    second: r.wage,
                });
            }
        }
        wages.insert(&r.academic_rank, r.wage);
    }

    write_rows(
        &dir.join(RESEARCHERS_FILE),
        &["researcher_id", "gender", "university_id", "sds_id", "uda_id", "academic_rank", "years_active"],
        d.researchers.iter().map(|r| {
            [
                r.researcher_id.clone(),
                r.gender.code().to_string(),
                r.university_id.clone(),
                r.sds_id.clone(),
                r.uda_id.clone(),
                r.academic_rank.label().to_string(),
                r.years_active.to_string(),
            ]
        }),
    )?;
    write_rows(
        &dir.join(PUBLICATIONS_FILE),
        &["pub_id", "year", "subject_categories", "citations", "n_authors"],
        d.publications.iter().map(|p| {
            [
                p.pub_id.clone(),
                p.year.to_string(),
                p.subject_categories.join(";"),
                p.citations.to_string(),
                p.n_authors.to_string(),
            ]
        }),
    )?;
    write_rows(
        &dir.join(AUTHORSHIPS_FILE),
        &["pub_id", "researcher_id", "byline_position"],
        d.authorships
            .iter()
            .map(|a| [a.pub_id.clone(), a.researcher_id.clone(), a.byline_position.to_string()]),
    )?;
    write_rows(
        &dir.join(TAXONOMY_FILE),
        &["sds_id", "uda_id", "weighting_scheme"],
        d.taxonomy.sds_to_uda.iter().map(|(sds, uda)| {
            [sds.clone(), uda.clone(), d.taxonomy.scheme_of(sds).label().to_string()]
        }),
    )?;
    write_rows(
        &dir.join(WAGES_FILE),
        &["academic_rank", "yearly_wage"],
        wages.iter().map(|(rank, w)| [rank.label().to_string(), w.to_string()]),
    )
}

pub fn write_baselines(table: &CitationBaselineTable, path: &Path) -> Result<(), IngestError> {
    write_rows(
        path,
        &["year", "subject_category", "c_bar"],
        table.iter().map(|(y, c, v)| [y.to_string(), c.to_string(), v.to_string()]),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Rule;
    use std::fs;

    const WINDOW: Window = Window { start: 2006, end: 2010 };

    fn write(dir: &Path, name: &str, body: &str) {
        fs::write(dir.join(name), body).unwrap();
    }

    fn fixture() -> tempfile::TempDir {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path();
        write(p, TAXONOMY_FILE, "sds_id,uda_id,weighting_scheme\nS1,A,uniform\nS2,A,harmonic\n");
        write(
            p,
            RESEARCHERS_FILE,
            "researcher_id,gender,university_id,sds_id,uda_id,academic_rank,years_active\n\
             R1,F,U1,S1,A,full,5\nR2,M,U1,S2,A,associate,4.5\nR3,F,U2,S1,A,assistant,2\n",
        );
        write(
            p,
            PUBLICATIONS_FILE,
            "pub_id,year,subject_categories,citations,n_authors\nP1,2008,C1;C2,4,2\nP2,2009,C1,0,1\n",
        );
        write(p, AUTHORSHIPS_FILE, "pub_id,researcher_id,byline_position\nP1,R1,1\nP1,R2,2\nP2,R3,1\n");
        write(p, WAGES_FILE, "academic_rank,yearly_wage\nassistant,30000\nassociate,45000\nfull,60000\n");
        dir
    }

    #[test]
    fn loads_three_researchers() {
        let dir = fixture();
        let d = load_dataset(&IngestConfig::from_dir(dir.path(), WINDOW)).unwrap();
        assert_eq!(d.researchers.len(), 3);
        assert_eq!(d.researchers[1].wage, 45000.0);
        assert_eq!(d.researchers[1].years_active, 4.5);
        assert_eq!(d.publications[0].subject_categories, vec!["C1", "C2"]);
        assert_eq!(d.taxonomy.scheme_of("S2"), WeightingScheme::Harmonic);
    }

    #[test]
    fn wages_default_to_one() {
        let dir = fixture();
        fs::remove_file(dir.path().join(WAGES_FILE)).unwrap();
        let d = load_dataset(&IngestConfig::from_dir(dir.path(), WINDOW)).unwrap();
        assert!(d.researchers.iter().all(|r| r.wage == 1.0));
    }

    #[test]
    fn negative_citations_are_malformed() {
        let dir = fixture();
        write(
            dir.path(),
            PUBLICATIONS_FILE,
            "pub_id,year,subject_categories,citations,n_authors\nP1,2008,C1,4,2\nP2,2009,C1,-1,1\n",
        );
        match load_dataset(&IngestConfig::from_dir(dir.path(), WINDOW)) {
            Err(IngestError::MalformedRow { line, column, .. }) => {
                assert_eq!(line, 3);
                assert_eq!(column, "citations");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_wage_for_rank() {
        let dir = fixture();
        write(dir.path(), WAGES_FILE, "academic_rank,yearly_wage\nassistant,30000\nfull,60000\n");
        match load_dataset(&IngestConfig::from_dir(dir.path(), WINDOW)) {
            Err(e @ IngestError::MissingWageForRank { .. }) => {
                assert!(e.is_validation());
                assert!(e.to_string().contains("R2"));
                assert!(e.to_string().contains("associate"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn duplicate_and_dangling_ids() {
        let dir = fixture();
        write(dir.path(), AUTHORSHIPS_FILE, "pub_id,researcher_id,byline_position\nP9,R1,1\n");
        assert!(matches!(
            load_dataset(&IngestConfig::from_dir(dir.path(), WINDOW)),
            Err(IngestError::DanglingReference { column: "pub_id", ref id, .. }) if id == "P9"
        ));

        let dir = fixture();
        write(
            dir.path(),
            RESEARCHERS_FILE,
            "researcher_id,gender,university_id,sds_id,uda_id,academic_rank,years_active\n\
             R1,F,U1,S1,A,full,5\nR1,M,U1,S2,A,associate,4\n",
        );
        assert!(matches!(
            load_dataset(&IngestConfig::from_dir(dir.path(), WINDOW)),
            Err(IngestError::DuplicateId { line: 3, .. })
        ));
    }

    #[test]
    fn invariant_breaches_surface_as_violations() {
        let dir = fixture();
        write(dir.path(), AUTHORSHIPS_FILE, "pub_id,researcher_id,byline_position\nP1,R1,3\n");
        match load_dataset(&IngestConfig::from_dir(dir.path(), WINDOW)) {
            Err(IngestError::Validation(v)) => assert_eq!(v[0].rule, Rule::PositionOutOfRange),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn bad_gender_and_missing_column() {
        let dir = fixture();
        write(
            dir.path(),
            RESEARCHERS_FILE,
            "researcher_id,gender,university_id,sds_id,uda_id,academic_rank,years_active\nR1,X,U1,S1,A,full,5\n",
        );
        assert!(matches!(
            load_dataset(&IngestConfig::from_dir(dir.path(), WINDOW)),
            Err(IngestError::MalformedRow { ref column, .. }) if column == "gender"
        ));
        write(dir.path(), RESEARCHERS_FILE, "researcher_id,gender\nR1,F\n");
        assert!(matches!(
            load_dataset(&IngestConfig::from_dir(dir.path(), WINDOW)),
            Err(IngestError::MissingColumn { column: "university_id", .. })
        ));
    }

    #[test]
    fn config_checks() {
        let dir = fixture();
        let mut cfg = IngestConfig::from_dir(dir.path(), Window::new(2010, 2006));
        assert!(matches!(cfg.check(), Err(IngestError::InvalidConfig(_))));
        cfg.window = WINDOW;
        cfg.use_external_baselines = true;
        assert!(matches!(cfg.check(), Err(IngestError::InvalidConfig(_))));
    }

    #[test]
    fn baselines_file() {
        let dir = fixture();
        let path = dir.path().join(BASELINES_FILE);
        write(dir.path(), BASELINES_FILE, "year,subject_category,c_bar\n2008,C1,2.5\n2008,C2,4\n");
        let t = load_baselines(&path).unwrap();
        assert_eq!(t.get(2008, "C2"), Some(4.0));
        write_baselines(&t, &path).unwrap();
        assert_eq!(load_baselines(&path).unwrap(), t);
        write(dir.path(), BASELINES_FILE, "year,subject_category,c_bar\n2008,C1,0\n");
        assert!(matches!(load_baselines(&path), Err(IngestError::MalformedRow { .. })));
    }

    #[test]
    fn write_then_reload() {
        let dir = fixture();
        let cfg = IngestConfig::from_dir(dir.path(), WINDOW);
        let d = load_dataset(&cfg).unwrap();
        let out = tempfile::tempdir().unwrap();
        write_dataset(&d, out.path()).unwrap();
        let again = load_dataset(&IngestConfig::from_dir(out.path(), WINDOW)).unwrap();
        assert_eq!(again.canonicalized(), d.canonicalized());
    }
}
