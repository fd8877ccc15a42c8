//! Publication record model, corpus loading, and filtered immutable views.
//!
//! A [`Corpus`] is loaded once and never mutated; every downstream
//! computation works on a [`CorpusView`], which borrows the corpus and keeps
//! only the indices of records that satisfy a [`SubsetFilter`].

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::Deserialize;
use thiserror::Error;

use crate::{Error, Result};

/// Document type as carried by the source index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DocType {
    Article,
    Review,
    Letter,
    Other,
}

impl DocType {
    pub const ALL: [DocType; 4] = [
        DocType::Article,
        DocType::Review,
        DocType::Letter,
        DocType::Other,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            DocType::Article => "Article",
            DocType::Review => "Review",
            DocType::Letter => "Letter",
            DocType::Other => "Other",
        }
    }
}

impl fmt::Display for DocType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DocType {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "article" => Ok(DocType::Article),
            "review" => Ok(DocType::Review),
            "letter" => Ok(DocType::Letter),
            "other" => Ok(DocType::Other),
            _ => Err(format!(
                "invalid doctype {s:?}; expected Article, Review, Letter, or Other"
            )),
        }
    }
}

/// One indexed document: identity, publication year, document type, citation
/// count at the retrieval date, and the country and subject-category codes
/// attached to it. Country and category lists are kept sorted and
/// deduplicated so they behave as sets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PublicationRecord {
    pub id: String,
    pub year: i32,
    pub doctype: DocType,
    pub citations: u64,
    countries: Vec<String>,
    categories: Vec<String>,
}

impl PublicationRecord {
    pub fn new(
        id: impl Into<String>,
        year: i32,
        doctype: DocType,
        citations: u64,
        countries: impl IntoIterator<Item = String>,
        categories: impl IntoIterator<Item = String>,
    ) -> Self {
        Self {
            id: id.into(),
            year,
            doctype,
            citations,
            countries: normalize_codes(countries),
            categories: normalize_codes(categories),
        }
    }

    pub fn countries(&self) -> &[String] {
        &self.countries
    }

    pub fn categories(&self) -> &[String] {
        &self.categories
    }

    /// Number of distinct byline countries (the fractional-counting divisor).
    pub fn country_count(&self) -> usize {
        self.countries.len()
    }

    pub fn has_country(&self, code: &str) -> bool {
        self.countries
            .binary_search_by(|c| c.as_str().cmp(code))
            .is_ok()
    }

    pub fn has_category(&self, code: &str) -> bool {
        self.categories
            .binary_search_by(|c| c.as_str().cmp(code))
            .is_ok()
    }

    /// Count of byline countries that fall inside `codes`.
    pub fn countries_in(&self, codes: &BTreeSet<String>) -> usize {
        self.countries
            .iter()
            .filter(|c| codes.contains(c.as_str()))
            .count()
    }
}

fn normalize_codes(codes: impl IntoIterator<Item = String>) -> Vec<String> {
    let mut v: Vec<String> = codes.into_iter().filter(|c| !c.is_empty()).collect();
    v.sort();
    v.dedup();
    v
}

/// A named set of country codes: a single country or a configured bloc.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entity {
    pub label: String,
    pub codes: BTreeSet<String>,
}

impl Entity {
    pub fn country(code: impl Into<String>) -> Self {
        let code = code.into();
        Self {
            label: code.clone(),
            codes: BTreeSet::from([code]),
        }
    }

    pub fn bloc(label: impl Into<String>, codes: impl IntoIterator<Item = String>) -> Self {
        Self {
            label: label.into(),
            codes: codes.into_iter().collect(),
        }
    }

    /// True when the record byline intersects this entity's code set.
    pub fn matches(&self, record: &PublicationRecord) -> bool {
        record.countries().iter().any(|c| self.codes.contains(c))
    }
}

/// Errors produced while reading corpus or bloc-mapping files.
#[derive(Debug, Error)]
pub enum LoadError {
    #[error("io error reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },

    #[error("missing field: {0}")]
    MissingField(&'static str),

    #[error("row {row}: missing field: {field}")]
    MissingValue { row: usize, field: &'static str },

    #[error("row {row}: invalid {field}: {value:?}")]
    InvalidValue {
        row: usize,
        field: &'static str,
        value: String,
    },

    #[error("row {row}: duplicate id {id:?}")]
    DuplicateId { row: usize, id: String },

    #[error("row {row}: malformed record: {message}")]
    Malformed { row: usize, message: String },
}

/// On-disk corpus encodings accepted by [`load_corpus`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorpusFormat {
    /// Delimited text with a header row (id,year,doctype,citations,countries,categories).
    Delimited,
    /// One self-describing JSON object per line with the same field names.
    RecordPerLine,
}

/// An immutable snapshot of publication records.
#[derive(Debug, Clone)]
pub struct Corpus {
    records: Vec<PublicationRecord>,
    retrieval_date: NaiveDate,
    label: String,
}

impl Corpus {
    /// Builds a corpus, rejecting duplicate record ids. When no retrieval
    /// date is given it defaults to January 1 two years after the latest
    /// publication year, mirroring the usual gap between publication and
    /// citation retrieval.
    pub fn from_records(
        records: Vec<PublicationRecord>,
        retrieval_date: Option<NaiveDate>,
        label: impl Into<String>,
    ) -> std::result::Result<Self, LoadError> {
        let mut seen: HashSet<&str> = HashSet::with_capacity(records.len());
        for (i, r) in records.iter().enumerate() {
            if !seen.insert(r.id.as_str()) {
                return Err(LoadError::DuplicateId {
                    row: i + 1,
                    id: r.id.clone(),
                });
            }
        }
        drop(seen);
        let retrieval_date = retrieval_date.unwrap_or_else(|| default_retrieval_date(&records));
        Ok(Self {
            records,
            retrieval_date,
            label: label.into(),
        })
    }

    pub fn records(&self) -> &[PublicationRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn retrieval_date(&self) -> NaiveDate {
        self.retrieval_date
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Distinct publication years present, ascending.
    pub fn years(&self) -> BTreeSet<i32> {
        self.records.iter().map(|r| r.year).collect()
    }

    /// View over the whole corpus.
    pub fn view(&self) -> CorpusView<'_> {
        CorpusView {
            corpus: self,
            indices: (0..self.records.len() as u32).collect(),
        }
    }
}

fn default_retrieval_date(records: &[PublicationRecord]) -> NaiveDate {
    let max_year = records.iter().map(|r| r.year).max().unwrap_or(1968);
    NaiveDate::from_ymd_opt(max_year + 2, 1, 1).expect("valid retrieval date")
}

/// Pure predicate tree over record attributes.
#[derive(Debug, Clone, PartialEq)]
pub enum SubsetFilter {
    All,
    YearIn(BTreeSet<i32>),
    DoctypeIn(BTreeSet<DocType>),
    CountryAny(BTreeSet<String>),
    CategoryAny(BTreeSet<String>),
    And(Vec<SubsetFilter>),
    Or(Vec<SubsetFilter>),
    Not(Box<SubsetFilter>),
}

impl SubsetFilter {
    pub fn years(years: impl IntoIterator<Item = i32>) -> Self {
        SubsetFilter::YearIn(years.into_iter().collect())
    }

    pub fn doctypes(types: impl IntoIterator<Item = DocType>) -> Self {
        SubsetFilter::DoctypeIn(types.into_iter().collect())
    }

    pub fn countries(codes: impl IntoIterator<Item = String>) -> Self {
        SubsetFilter::CountryAny(codes.into_iter().collect())
    }

    pub fn categories(codes: impl IntoIterator<Item = String>) -> Self {
        SubsetFilter::CategoryAny(codes.into_iter().collect())
    }

    /// The default analysis set: articles, reviews, and letters.
    pub fn default_doctypes() -> Self {
        SubsetFilter::doctypes([DocType::Article, DocType::Review, DocType::Letter])
    }

    pub fn and(self, other: SubsetFilter) -> Self {
        match (self, other) {
            (SubsetFilter::All, o) => o,
            (s, SubsetFilter::All) => s,
            (SubsetFilter::And(mut v), o) => {
                v.push(o);
                SubsetFilter::And(v)
            }
            (s, o) => SubsetFilter::And(vec![s, o]),
        }
    }

    pub fn or(self, other: SubsetFilter) -> Self {
        match (self, other) {
            (SubsetFilter::Or(mut v), o) => {
                v.push(o);
                SubsetFilter::Or(v)
            }
            (s, o) => SubsetFilter::Or(vec![s, o]),
        }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(self) -> Self {
        SubsetFilter::Not(Box::new(self))
    }

    pub fn matches(&self, record: &PublicationRecord) -> bool {
        match self {
            SubsetFilter::All => true,
            SubsetFilter::YearIn(years) => years.contains(&record.year),
            SubsetFilter::DoctypeIn(types) => types.contains(&record.doctype),
            SubsetFilter::CountryAny(codes) => record.countries().iter().any(|c| codes.contains(c)),
            SubsetFilter::CategoryAny(codes) => {
                record.categories().iter().any(|c| codes.contains(c))
            }
            SubsetFilter::And(fs) => fs.iter().all(|f| f.matches(record)),
            SubsetFilter::Or(fs) => fs.iter().any(|f| f.matches(record)),
            SubsetFilter::Not(f) => !f.matches(record),
        }
    }
}

/// A filtered, immutable window onto a corpus. Holds indices, never copies
/// records.
#[derive(Debug, Clone)]
pub struct CorpusView<'a> {
    corpus: &'a Corpus,
    indices: Vec<u32>,
}

impl<'a> CorpusView<'a> {
    pub(crate) fn from_parts(corpus: &'a Corpus, mut indices: Vec<u32>) -> Self {
        indices.sort_unstable();
        Self { corpus, indices }
    }

    pub fn corpus(&self) -> &'a Corpus {
        self.corpus
    }

    /// Number of records satisfying the filter.
    pub fn n(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Corpus indices of the member records, ascending.
    pub fn indices(&self) -> &[u32] {
        &self.indices
    }

    pub fn record(&self, corpus_index: u32) -> &'a PublicationRecord {
        &self.corpus.records()[corpus_index as usize]
    }

    pub fn records(&self) -> impl Iterator<Item = &'a PublicationRecord> + '_ {
        self.indices
            .iter()
            .map(|&i| &self.corpus.records()[i as usize])
    }

    pub fn citations(&self) -> impl Iterator<Item = u64> + '_ {
        self.records().map(|r| r.citations)
    }

    /// Member ids as a set, for membership comparisons in tests.
    pub fn id_set(&self) -> BTreeSet<&'a str> {
        self.records().map(|r| r.id.as_str()).collect()
    }

    /// Applies a further filter to this view.
    pub fn refine(&self, f: &SubsetFilter) -> CorpusView<'a> {
        CorpusView {
            corpus: self.corpus,
            indices: self
                .indices
                .iter()
                .copied()
                .filter(|&i| f.matches(&self.corpus.records()[i as usize]))
                .collect(),
        }
    }
}

/// Selects the records of `corpus` satisfying `filter`.
pub fn filter<'a>(corpus: &'a Corpus, filter: &SubsetFilter) -> CorpusView<'a> {
    CorpusView {
        corpus,
        indices: corpus
            .records()
            .iter()
            .enumerate()
            .filter(|(_, r)| filter.matches(r))
            .map(|(i, _)| i as u32)
            .collect(),
    }
}

const FIELDS: [&str; 6] = [
    "id",
    "year",
    "doctype",
    "citations",
    "countries",
    "categories",
];

/// Loads a corpus from disk. Row order is preserved; duplicate ids, missing
/// fields, and non-integer citation counts are rejected with the offending
/// row number.
pub fn load_corpus(
    path: impl AsRef<Path>,
    format: CorpusFormat,
) -> std::result::Result<Corpus, LoadError> {
    load_corpus_with(path, format, None, None)
}

/// [`load_corpus`] with an explicit retrieval date and provenance label.
pub fn load_corpus_with(
    path: impl AsRef<Path>,
    format: CorpusFormat,
    retrieval_date: Option<NaiveDate>,
    label: Option<String>,
) -> std::result::Result<Corpus, LoadError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| LoadError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let label = label.unwrap_or_else(|| path.display().to_string());
    let records = match format {
        CorpusFormat::Delimited => read_delimited(BufReader::new(file))?,
        CorpusFormat::RecordPerLine => read_record_per_line(BufReader::new(file))?,
    };
    Corpus::from_records(records, retrieval_date, label)
}

fn read_delimited(reader: impl Read) -> std::result::Result<Vec<PublicationRecord>, LoadError> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| LoadError::Malformed {
            row: 1,
            message: e.to_string(),
        })?
        .clone();
    let mut column = [usize::MAX; 6];
    for (fi, field) in FIELDS.iter().enumerate() {
        match headers.iter().position(|h| h.trim() == *field) {
            Some(ci) => column[fi] = ci,
            None => return Err(LoadError::MissingField(FIELDS[fi])),
        }
    }

    let mut records = Vec::new();
    for (row_idx, row) in rdr.records().enumerate() {
        let row_no = row_idx + 1;
        let row = row.map_err(|e| LoadError::Malformed {
            row: row_no,
            message: e.to_string(),
        })?;
        let get = |fi: usize| -> std::result::Result<&str, LoadError> {
            row.get(column[fi]).ok_or(LoadError::MissingValue {
                row: row_no,
                field: FIELDS[fi],
            })
        };
        let id = get(0)?.to_string();
        if id.is_empty() {
            return Err(LoadError::MissingValue {
                row: row_no,
                field: "id",
            });
        }
        let year = parse_field(get(1)?, row_no, "year")?;
        let doctype: DocType = get(2)?.parse().map_err(|_| LoadError::InvalidValue {
            row: row_no,
            field: "doctype",
            value: get(2).unwrap_or_default().to_string(),
        })?;
        let citations: u64 = parse_field(get(3)?, row_no, "citations")?;
        let countries = split_codes(get(4)?);
        let categories = split_codes(get(5)?);
        records.push(PublicationRecord::new(
            id, year, doctype, citations, countries, categories,
        ));
    }
    Ok(records)
}

fn parse_field<T: FromStr>(
    raw: &str,
    row: usize,
    field: &'static str,
) -> std::result::Result<T, LoadError> {
    let raw = raw.trim();
    if raw.is_empty() {
        return Err(LoadError::MissingValue { row, field });
    }
    raw.parse().map_err(|_| LoadError::InvalidValue {
        row,
        field,
        value: raw.to_string(),
    })
}

fn split_codes(raw: &str) -> Vec<String> {
    raw.split('|')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_string)
        .collect()
}

#[derive(Deserialize)]
struct RawLine {
    id: Option<String>,
    year: Option<i32>,
    doctype: Option<String>,
    citations: Option<serde_json::Value>,
    countries: Option<Vec<String>>,
    categories: Option<Vec<String>>,
}

fn read_record_per_line(
    reader: impl BufRead,
) -> std::result::Result<Vec<PublicationRecord>, LoadError> {
    let mut records = Vec::new();
    for (row_idx, line) in reader.lines().enumerate() {
        let row_no = row_idx + 1;
        let line = line.map_err(|e| LoadError::Malformed {
            row: row_no,
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawLine = serde_json::from_str(&line).map_err(|e| LoadError::Malformed {
            row: row_no,
            message: e.to_string(),
        })?;
        let missing = |field: &'static str| LoadError::MissingValue { row: row_no, field };
        let id = raw.id.ok_or_else(|| missing("id"))?;
        let year = raw.year.ok_or_else(|| missing("year"))?;
        let doctype: DocType = raw
            .doctype
            .ok_or_else(|| missing("doctype"))?
            .parse()
            .map_err(|e: String| LoadError::InvalidValue {
                row: row_no,
                field: "doctype",
                value: e,
            })?;
        let citations_value = raw.citations.ok_or_else(|| missing("citations"))?;
        let citations = citations_value
            .as_u64()
            .ok_or_else(|| LoadError::InvalidValue {
                row: row_no,
                field: "citations",
                value: citations_value.to_string(),
            })?;
        let countries = raw.countries.ok_or_else(|| missing("countries"))?;
        let categories = raw.categories.ok_or_else(|| missing("categories"))?;
        records.push(PublicationRecord::new(
            id, year, doctype, citations, countries, categories,
        ));
    }
    Ok(records)
}

/// Serializes a corpus in either input encoding; loading the output yields a
/// record-identical corpus.
pub fn write_corpus(
    corpus: &Corpus,
    path: impl AsRef<Path>,
    format: CorpusFormat,
) -> std::result::Result<(), LoadError> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|source| LoadError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut w = BufWriter::new(file);
    write_corpus_to(corpus, &mut w, format).map_err(|source| LoadError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Writer-based form of [`write_corpus`], used for byte-level determinism
/// checks.
pub fn write_corpus_to(
    corpus: &Corpus,
    out: &mut impl Write,
    format: CorpusFormat,
) -> io::Result<()> {
    match format {
        CorpusFormat::Delimited => {
            out.write_all(b"id,year,doctype,citations,countries,categories\n")?;
            for r in corpus.records() {
                writeln!(
                    out,
                    "{},{},{},{},{},{}",
                    csv_escape(&r.id),
                    r.year,
                    r.doctype,
                    r.citations,
                    csv_escape(&r.countries().join("|")),
                    csv_escape(&r.categories().join("|")),
                )?;
            }
        }
        CorpusFormat::RecordPerLine => {
            for r in corpus.records() {
                let line = serde_json::json!({
                    "id": r.id,
                    "year": r.year,
                    "doctype": r.doctype.as_str(),
                    "citations": r.citations,
                    "countries": r.countries(),
                    "categories": r.categories(),
                });
                writeln!(out, "{line}")?;
            }
        }
    }
    Ok(())
}

fn csv_escape(raw: &str) -> String {
    if raw.contains([',', '"', '\n']) {
        format!("\"{}\"", raw.replace('"', "\"\""))
    } else {
        raw.to_string()
    }
}

/// Data-quality counts gathered by [`validate_corpus`]; reporting only,
/// nothing is rejected.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationReport {
    pub records: usize,
    pub empty_countries: usize,
    pub empty_categories: usize,
    pub doctype_other: usize,
    pub notes: Vec<String>,
}

pub fn validate_corpus(corpus: &Corpus) -> ValidationReport {
    let mut report = ValidationReport {
        records: corpus.len(),
        empty_countries: 0,
        empty_categories: 0,
        doctype_other: 0,
        notes: Vec::new(),
    };
    for r in corpus.records() {
        if r.countries().is_empty() {
            report.empty_countries += 1;
        }
        if r.categories().is_empty() {
            report.empty_categories += 1;
        }
        if r.doctype == DocType::Other {
            report.doctype_other += 1;
        }
    }
    if report.doctype_other > 0 {
        report.notes.push(format!(
            "{} records have doctype Other; default analyses cover Article, Review, and Letter only",
            report.doctype_other
        ));
    }
    if report.empty_countries > 0 {
        report.notes.push(format!(
            "{} records have no byline country and contribute to totals but to no entity",
            report.empty_countries
        ));
    }
    report
}

/// Citation summary over a view.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryStats {
    pub n: usize,
    pub min: u64,
    pub max: u64,
    pub mean: f64,
    pub median: f64,
    pub histogram: BTreeMap<u64, u64>,
}

pub fn corpus_stats(view: &CorpusView<'_>) -> Result<SummaryStats> {
    if view.is_empty() {
        return Err(Error::EmptySubset);
    }
    let mut histogram: BTreeMap<u64, u64> = BTreeMap::new();
    let mut total: u128 = 0;
    for c in view.citations() {
        *histogram.entry(c).or_insert(0) += 1;
        total += u128::from(c);
    }
    let n = view.n();
    let min = *histogram.keys().next().expect("nonempty");
    let max = *histogram.keys().next_back().expect("nonempty");
    let mean = total as f64 / n as f64;
    let median = histogram_median(&histogram, n);
    Ok(SummaryStats {
        n,
        min,
        max,
        mean,
        median,
        histogram,
    })
}

fn histogram_median(histogram: &BTreeMap<u64, u64>, n: usize) -> f64 {
    let value_at = |target: u64| -> u64 {
        let mut cum = 0u64;
        for (&value, &count) in histogram {
            cum += count;
            if cum >= target {
                return value;
            }
        }
        unreachable!("target within histogram mass")
    };
    let n = n as u64;
    if n % 2 == 1 {
        value_at(n / 2 + 1) as f64
    } else {
        (value_at(n / 2) as f64 + value_at(n / 2 + 1) as f64) / 2.0
    }
}

/// Country-to-bloc assignments loaded from a two-column mapping file.
///
/// The mapping is a relation: a country may appear in several blocs (a
/// member state belongs to a continental bloc and to any wider grouping
/// that includes it), one row per (country, bloc) pair.
#[derive(Debug, Clone, Default)]
pub struct BlocMap {
    by_bloc: BTreeMap<String, BTreeSet<String>>,
}

impl BlocMap {
    pub fn new(pairs: impl IntoIterator<Item = (String, String)>) -> Self {
        let mut by_bloc: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        for (country, bloc) in pairs {
            by_bloc.entry(bloc).or_default().insert(country);
        }
        Self { by_bloc }
    }

    /// Reads a delimited file with header `country_code,bloc_code`.
    pub fn load(path: impl AsRef<Path>) -> std::result::Result<Self, LoadError> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|source| LoadError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let mut rdr = csv::ReaderBuilder::new().from_reader(BufReader::new(file));
        let headers = rdr
            .headers()
            .map_err(|e| LoadError::Malformed {
                row: 1,
                message: e.to_string(),
            })?
            .clone();
        let country_col = headers
            .iter()
            .position(|h| h.trim() == "country_code")
            .ok_or(LoadError::MissingField("country_code"))?;
        let bloc_col = headers
            .iter()
            .position(|h| h.trim() == "bloc_code")
            .ok_or(LoadError::MissingField("bloc_code"))?;
        let mut pairs = Vec::new();
        for (row_idx, row) in rdr.records().enumerate() {
            let row_no = row_idx + 1;
            let row = row.map_err(|e| LoadError::Malformed {
                row: row_no,
                message: e.to_string(),
            })?;
            let country = row
                .get(country_col)
                .ok_or(LoadError::MissingValue {
                    row: row_no,
                    field: "country_code",
                })?
                .trim()
                .to_string();
            let bloc = row
                .get(bloc_col)
                .ok_or(LoadError::MissingValue {
                    row: row_no,
                    field: "bloc_code",
                })?
                .trim()
                .to_string();
            if country.is_empty() || bloc.is_empty() {
                return Err(LoadError::MissingValue {
                    row: row_no,
                    field: if country.is_empty() {
                        "country_code"
                    } else {
                        "bloc_code"
                    },
                });
            }
            pairs.push((country, bloc));
        }
        Ok(Self::new(pairs))
    }

    pub fn blocs_of(&self, country: &str) -> Vec<&str> {
        self.by_bloc
            .iter()
            .filter(|(_, codes)| codes.contains(country))
            .map(|(bloc, _)| bloc.as_str())
            .collect()
    }

    /// One entity per bloc, in bloc label order.
    pub fn entities(&self) -> Vec<Entity> {
        self.by_bloc
            .iter()
            .map(|(label, codes)| Entity {
                label: label.clone(),
                codes: codes.clone(),
            })
            .collect()
    }

    pub fn entity(&self, bloc: &str) -> Option<Entity> {
        self.by_bloc.get(bloc).map(|codes| Entity {
            label: bloc.to_string(),
            codes: codes.clone(),
        })
    }
}
