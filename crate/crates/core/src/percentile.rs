//! Exact top-k% citation thresholds, percentile-rank assignment, and
//! citation-window analysis.
//!
//! Thresholds are computed from an exact integer histogram of citation
//! counts, so the result depends only on the multiset of counts and is
//! identical for any worker partitioning. Ranks at the cutoff follow the
//! inclusive rule: every record with at least the cutoff count is a member
//! of the top class, which can inflate the class beyond its nominal size.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::corpus::{Corpus, CorpusView, SubsetFilter};
use crate::{Error, Result};

/// Exact percentage in (0, 100), kept as a reduced fraction so nominal ranks
/// never suffer binary rounding (0.1% of 10^6 must be exactly 1,000).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct KPercent {
    num: u64,
    den: u64,
}

impl KPercent {
    pub const ONE: KPercent = KPercent { num: 1, den: 1 };

    pub fn new(num: u64, den: u64) -> Result<Self> {
        if den == 0 || num == 0 || num >= 100 * den {
            return Err(Error::InvalidK(format!("{num}/{den}")));
        }
        let g = gcd(num, den);
        Ok(Self {
            num: num / g,
            den: den / g,
        })
    }

    pub fn as_f64(&self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// ceil(n * k / 100), computed in integer arithmetic.
    pub fn nominal_rank(&self, n: usize) -> usize {
        let num = n as u128 * self.num as u128;
        let den = 100u128 * self.den as u128;
        (num.div_ceil(den)) as usize
    }

    /// n * k / 100 without rounding (exact when the quotient is
    /// representable).
    pub fn expected_of(&self, n: f64) -> f64 {
        n * self.num as f64 / (100.0 * self.den as f64)
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

impl FromStr for KPercent {
    type Err = Error;

    /// Parses a decimal percentage ("1", "0.5", "10.25") exactly.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::InvalidK(s.to_string());
        let (int_part, frac_part) = match s.split_once('.') {
            Some((i, f)) => (i, f),
            None => (s, ""),
        };
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(bad());
        }
        if !int_part.chars().all(|c| c.is_ascii_digit())
            || !frac_part.chars().all(|c| c.is_ascii_digit())
            || frac_part.len() > 9
        {
            return Err(bad());
        }
        let int: u64 = if int_part.is_empty() {
            0
        } else {
            int_part.parse().map_err(|_| bad())?
        };
        let den = 10u64.pow(frac_part.len() as u32);
        let frac: u64 = if frac_part.is_empty() {
            0
        } else {
            frac_part.parse().map_err(|_| bad())?
        };
        KPercent::new(int * den + frac, den)
    }
}

impl fmt::Display for KPercent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}", self.as_f64())
        }
    }
}

/// The top-k% membership rule for one reference set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Threshold {
    pub k: KPercent,
    /// Size of the reference set the cutoff was computed against.
    pub reference_n: usize,
    /// ceil(reference_n * k / 100): the intended class size.
    pub nominal_rank: usize,
    /// Citations of the record at the nominal rank in descending order.
    pub citation_cutoff: u64,
    /// Records at or above the cutoff; >= nominal_rank when ties straddle
    /// the boundary.
    pub actual_size: usize,
}

impl Threshold {
    pub fn is_tie_inflated(&self) -> bool {
        self.actual_size > self.nominal_rank
    }
}

/// Exact citation histogram of a view, merged deterministically across
/// workers.
pub fn citation_histogram(view: &CorpusView<'_>) -> BTreeMap<u64, u64> {
    let records = view.corpus().records();
    view.indices()
        .par_iter()
        .fold(BTreeMap::new, |mut acc: BTreeMap<u64, u64>, &i| {
            *acc.entry(records[i as usize].citations).or_insert(0) += 1;
            acc
        })
        .reduce(BTreeMap::new, merge_histograms)
}

fn merge_histograms(mut a: BTreeMap<u64, u64>, b: BTreeMap<u64, u64>) -> BTreeMap<u64, u64> {
    for (value, count) in b {
        *a.entry(value).or_insert(0) += count;
    }
    a
}

/// Computes the top-k% threshold of a view: nominal rank, citation cutoff,
/// and tie-inflated actual size.
pub fn top_class_threshold(view: &CorpusView<'_>, k: KPercent) -> Result<Threshold> {
    if view.is_empty() {
        return Err(Error::EmptySubset);
    }
    let histogram = citation_histogram(view);
    Ok(threshold_from_histogram(&histogram, view.n(), k))
}

/// Threshold from a pre-merged histogram; exposed so partitioned pipelines
/// can merge partial histograms first.
pub fn threshold_from_histogram(
    histogram: &BTreeMap<u64, u64>,
    n: usize,
    k: KPercent,
) -> Threshold {
    let nominal_rank = k.nominal_rank(n);
    let mut cum = 0u64;
    let mut citation_cutoff = 0u64;
    let mut actual_size = 0u64;
    for (&value, &count) in histogram.iter().rev() {
        cum += count;
        if cum >= nominal_rank as u64 {
            citation_cutoff = value;
            actual_size = cum;
            break;
        }
    }
    Threshold {
        k,
        reference_n: n,
        nominal_rank,
        citation_cutoff,
        actual_size: actual_size as usize,
    }
}

/// Membership of a top class within a view: exactly the records with
/// citations at or above the cutoff.
#[derive(Debug, Clone)]
pub struct TopClass {
    pub threshold: Threshold,
    member_indices: Vec<u32>,
    in_class: Vec<bool>,
}

impl TopClass {
    pub fn len(&self) -> usize {
        self.member_indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.member_indices.is_empty()
    }

    /// Corpus indices of members, ascending.
    pub fn member_indices(&self) -> &[u32] {
        &self.member_indices
    }

    pub fn contains(&self, corpus_index: u32) -> bool {
        self.in_class
            .get(corpus_index as usize)
            .copied()
            .unwrap_or(false)
    }

    pub fn member_ids<'a>(&self, corpus: &'a Corpus) -> Vec<&'a str> {
        self.member_indices
            .iter()
            .map(|&i| corpus.records()[i as usize].id.as_str())
            .collect()
    }
}

/// Selects the records of `view` belonging to the class defined by
/// `threshold`.
pub fn top_class(view: &CorpusView<'_>, threshold: &Threshold) -> TopClass {
    let records = view.corpus().records();
    let mut in_class = vec![false; records.len()];
    let mut member_indices = Vec::with_capacity(threshold.actual_size.min(view.n()));
    for &i in view.indices() {
        if records[i as usize].citations >= threshold.citation_cutoff {
            in_class[i as usize] = true;
            member_indices.push(i);
        }
    }
    TopClass {
        threshold: *threshold,
        member_indices,
        in_class,
    }
}

/// Tie-handling rule mapping citation counts to percentile ranks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum PercentileScheme {
    /// rank = 100 * (count strictly below) / n; ties share the group
    /// minimum. Emits [0, 100).
    #[default]
    StrictBelow,
    /// rank = 100 * (below + tie_size / 2) / n, the mid-rank of the tie
    /// group. Emits (0, 100) and averages exactly 50 over any view.
    MidFraction,
    /// Ties share the mean of their positional percentiles 100 * pos / (n+1).
    /// Emits (0, 100).
    FractionalTies,
}

impl PercentileScheme {
    pub fn as_str(&self) -> &'static str {
        match self {
            PercentileScheme::StrictBelow => "strict-below",
            PercentileScheme::MidFraction => "mid",
            PercentileScheme::FractionalTies => "fractional-ties",
        }
    }
}

impl fmt::Display for PercentileScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PercentileScheme {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "strict-below" => Ok(PercentileScheme::StrictBelow),
            "mid" => Ok(PercentileScheme::MidFraction),
            "fractional-ties" => Ok(PercentileScheme::FractionalTies),
            _ => Err(format!(
                "invalid scheme {s:?}; expected strict-below, mid, or fractional-ties"
            )),
        }
    }
}

/// Percentile ranks for every record of one reference view.
///
/// Alongside the real-valued rank, each entry carries the exact integer
/// floor of its rank (0..=99), computed in integer arithmetic so that
/// class-based sums are reproducible.
#[derive(Debug, Clone)]
pub struct RankAssignment {
    scheme: PercentileScheme,
    reference_n: usize,
    indices: Vec<u32>,
    ranks: Vec<f64>,
    floor_classes: Vec<u8>,
}

impl RankAssignment {
    pub fn scheme(&self) -> PercentileScheme {
        self.scheme
    }

    /// Size of the reference view the ranks were computed against.
    pub fn reference_n(&self) -> usize {
        self.reference_n
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Corpus indices covered by this assignment, ascending.
    pub fn indices(&self) -> &[u32] {
        &self.indices
    }

    pub fn ranks(&self) -> &[f64] {
        &self.ranks
    }

    /// Exact integer floor of each rank, parallel to [`Self::indices`].
    pub fn floor_classes(&self) -> &[u8] {
        &self.floor_classes
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, f64)> + '_ {
        self.indices.iter().copied().zip(self.ranks.iter().copied())
    }

    pub fn rank_of(&self, corpus_index: u32) -> Option<f64> {
        self.indices
            .binary_search(&corpus_index)
            .ok()
            .map(|pos| self.ranks[pos])
    }

    /// Restricts the assignment to the given corpus indices (sorted
    /// ascending); entries outside the assignment are ignored.
    pub fn restrict(&self, subset: &[u32]) -> RankAssignment {
        let mut indices = Vec::new();
        let mut ranks = Vec::new();
        let mut floor_classes = Vec::new();
        let mut pos = 0usize;
        for &target in subset {
            while pos < self.indices.len() && self.indices[pos] < target {
                pos += 1;
            }
            if pos < self.indices.len() && self.indices[pos] == target {
                indices.push(target);
                ranks.push(self.ranks[pos]);
                floor_classes.push(self.floor_classes[pos]);
            }
        }
        RankAssignment {
            scheme: self.scheme,
            reference_n: self.reference_n,
            indices,
            ranks,
            floor_classes,
        }
    }

    /// Merges disjoint assignments (used when ranks are computed per
    /// category); entries are re-sorted by corpus index.
    pub fn merge(parts: Vec<RankAssignment>) -> RankAssignment {
        let scheme = parts.first().map(|p| p.scheme).unwrap_or_default();
        let reference_n = parts.iter().map(|p| p.reference_n).sum();
        let mut entries: Vec<(u32, f64, u8)> = parts
            .into_iter()
            .flat_map(|p| {
                p.indices
                    .into_iter()
                    .zip(p.ranks)
                    .zip(p.floor_classes)
                    .map(|((i, r), f)| (i, r, f))
            })
            .collect();
        entries.sort_by_key(|&(i, _, _)| i);
        let mut indices = Vec::with_capacity(entries.len());
        let mut ranks = Vec::with_capacity(entries.len());
        let mut floor_classes = Vec::with_capacity(entries.len());
        for (i, r, f) in entries {
            indices.push(i);
            ranks.push(r);
            floor_classes.push(f);
        }
        RankAssignment {
            scheme,
            reference_n,
            indices,
            ranks,
            floor_classes,
        }
    }
}

/// Assigns a percentile rank to every record of the view under the given
/// scheme. Ties receive equal ranks.
pub fn percentile_ranks(view: &CorpusView<'_>, scheme: PercentileScheme) -> Result<RankAssignment> {
    if view.is_empty() {
        return Err(Error::EmptySubset);
    }
    let n = view.n() as u64;
    let histogram = citation_histogram(view);

    // Per distinct citation value: (f64 rank, exact floor class).
    let mut rank_of_value: BTreeMap<u64, (f64, u8)> = BTreeMap::new();
    let mut below = 0u64;
    for (&value, &count) in &histogram {
        let (rank, floor) = match scheme {
            PercentileScheme::StrictBelow => {
                let rank = 100.0 * below as f64 / n as f64;
                let floor = (100u128 * below as u128) / n as u128;
                (rank, floor)
            }
            PercentileScheme::MidFraction => {
                let rank = 100.0 * (below as f64 + count as f64 / 2.0) / n as f64;
                let floor = (100u128 * (2 * below as u128 + count as u128)) / (2 * n as u128);
                (rank, floor)
            }
            PercentileScheme::FractionalTies => {
                // Mean of positional percentiles 100 * pos / (n + 1) over the
                // tie group at positions below+1 ..= below+count.
                let rank = 100.0 * (below as f64 + (count as f64 + 1.0) / 2.0) / (n as f64 + 1.0);
                let floor =
                    (100u128 * (2 * below as u128 + count as u128 + 1)) / (2 * (n as u128 + 1));
                (rank, floor)
            }
        };
        rank_of_value.insert(value, (rank, floor as u8));
        below += count;
    }

    let records = view.corpus().records();
    let mut ranks = Vec::with_capacity(view.n());
    let mut floor_classes = Vec::with_capacity(view.n());
    for &i in view.indices() {
        let (rank, floor) = rank_of_value[&records[i as usize].citations];
        ranks.push(rank);
        floor_classes.push(floor);
    }
    Ok(RankAssignment {
        scheme,
        reference_n: view.n(),
        indices: view.indices().to_vec(),
        ranks,
        floor_classes,
    })
}

/// Top-k% threshold of one publication year together with its citation
/// window.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowThreshold {
    pub year: i32,
    /// Whole years between publication and retrieval.
    pub window_years: i32,
    pub threshold: Threshold,
}

/// Per-year thresholds for a citation-window series. Each year is ranked
/// against its own distribution; the window length is the retrieval year
/// minus the publication year.
pub fn window_thresholds(
    corpus: &Corpus,
    years: &[i32],
    k: KPercent,
) -> Result<Vec<WindowThreshold>> {
    use chrono::Datelike;
    let retrieval_year = corpus.retrieval_date().year();
    let mut out = Vec::with_capacity(years.len());
    for &year in years {
        let view = crate::corpus::filter(corpus, &SubsetFilter::years([year]));
        if view.is_empty() {
            return Err(Error::EmptyYear(year));
        }
        let threshold = top_class_threshold(&view, k)?;
        out.push(WindowThreshold {
            year,
            window_years: retrieval_year - year,
            threshold,
        });
    }
    Ok(out)
}

/// Product-moment correlation of two equal-length series.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::LengthMismatch(xs.len(), ys.len()));
    }
    if xs.len() < 3 {
        return Err(Error::TooFewPoints {
            min: 3,
            got: xs.len(),
        });
    }
    let n = xs.len() as f64;
    let mean_x = xs.iter().sum::<f64>() / n;
    let mean_y = ys.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        let dx = x - mean_x;
        let dy = y - mean_y;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::ZeroVariance);
    }
    Ok(sxy / (sxx.sqrt() * syy.sqrt()))
}
