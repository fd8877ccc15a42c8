//! Headline indicators over top-k% classes: observed and expected
//! participation (P/PP-top-k%), the integrated impact indicator (I3, %I3),
//! and the mean-based baselines they are contrasted with (RC/MNCS and
//! refined percentile scores).
//!
//! Country credits are accumulated as exact rationals so fractional counting
//! adds up to whole-record totals regardless of summation order or worker
//! partitioning.

use std::collections::BTreeMap;

use num_rational::Ratio;
use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde::Serialize;

use crate::corpus::{Corpus, CorpusView, Entity, PublicationRecord};
use crate::percentile::{KPercent, PercentileScheme, RankAssignment, TopClass};
use crate::{Error, Result};

/// How byline countries are credited for one record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CountingMethod {
    /// Every listed country receives a full credit of 1.
    #[default]
    WholeNumber,
    /// Every listed country receives 1 / (number of listed countries).
    FractionalByCountry,
}

impl std::str::FromStr for CountingMethod {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "whole" => Ok(CountingMethod::WholeNumber),
            "fractional" => Ok(CountingMethod::FractionalByCountry),
            _ => Err(format!(
                "invalid counting method {s:?}; expected whole or fractional"
            )),
        }
    }
}

impl std::fmt::Display for CountingMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            CountingMethod::WholeNumber => "whole",
            CountingMethod::FractionalByCountry => "fractional",
        })
    }
}

/// Exact sum of unit fractions: each contribution is `units / denom`.
///
/// Internally a map denominator -> unit count, so merging partial sums from
/// any worker partitioning is exact and order-independent.
#[derive(Debug, Clone, Default)]
pub struct Credit {
    units: BTreeMap<u32, u64>,
}

impl Credit {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn add(&mut self, units: u64, denom: u32) {
        if units > 0 {
            debug_assert!(denom > 0);
            *self.units.entry(denom).or_insert(0) += units;
        }
    }

    pub fn merge(mut self, other: Credit) -> Credit {
        for (denom, units) in other.units {
            *self.units.entry(denom).or_insert(0) += units;
        }
        self
    }

    /// Exact rational value.
    pub fn to_ratio(&self) -> Ratio<u128> {
        self.units
            .iter()
            .map(|(&denom, &units)| Ratio::new(units as u128, denom as u128))
            .fold(Ratio::new(0, 1), |acc, r| acc + r)
    }

    pub fn as_f64(&self) -> f64 {
        self.to_ratio().to_f64().unwrap_or(f64::NAN)
    }

    pub fn is_zero(&self) -> bool {
        self.units.values().all(|&u| u == 0)
    }

    pub fn is_integer(&self) -> bool {
        self.to_ratio().is_integer()
    }
}

impl PartialEq for Credit {
    fn eq(&self, other: &Self) -> bool {
        self.to_ratio() == other.to_ratio()
    }
}

/// Per-country credit weights for a single record. Whole-number counting
/// gives every listed country 1; fractional counting divides the single
/// record credit evenly. Empty bylines yield an empty mapping.
pub fn country_attribution(
    record: &PublicationRecord,
    method: CountingMethod,
) -> BTreeMap<String, Ratio<u64>> {
    let divisor = match method {
        CountingMethod::WholeNumber => 1,
        CountingMethod::FractionalByCountry => record.country_count() as u64,
    };
    record
        .countries()
        .iter()
        .map(|c| (c.clone(), Ratio::new(1, divisor.max(1))))
        .collect()
}

/// Credit of `entity` on one record: 1 for participation under whole-number
/// counting, the summed share of its member countries under fractional
/// counting.
pub fn entity_record_credit(
    record: &PublicationRecord,
    entity: &Entity,
    method: CountingMethod,
) -> Option<(u64, u32)> {
    let hits = record.countries_in(&entity.codes) as u64;
    if hits == 0 {
        return None;
    }
    match method {
        CountingMethod::WholeNumber => Some((1, 1)),
        CountingMethod::FractionalByCountry => Some((hits, record.country_count() as u32)),
    }
}

fn credit_over_indices(
    corpus: &Corpus,
    indices: &[u32],
    entity: &Entity,
    method: CountingMethod,
) -> Credit {
    let records = corpus.records();
    indices
        .par_iter()
        .fold(Credit::zero, |mut acc, &i| {
            if let Some((units, denom)) = entity_record_credit(&records[i as usize], entity, method)
            {
                acc.add(units, denom);
            }
            acc
        })
        .reduce(Credit::zero, Credit::merge)
}

/// Total credit of `entity` over all records of the view (the entity's n).
pub fn entity_n(view: &CorpusView<'_>, entity: &Entity, method: CountingMethod) -> Credit {
    credit_over_indices(view.corpus(), view.indices(), entity, method)
}

/// Observed participation of `entity` in a top class: the credit sum over
/// records of the view that belong to the class.
pub fn p_topk(
    view: &CorpusView<'_>,
    class: &TopClass,
    entity: &Entity,
    method: CountingMethod,
) -> Credit {
    let records = view.corpus().records();
    let view_indices = view.indices();
    class
        .member_indices()
        .par_iter()
        .fold(Credit::zero, |mut acc, &i| {
            if view_indices.binary_search(&i).is_ok() {
                if let Some((units, denom)) =
                    entity_record_credit(&records[i as usize], entity, method)
                {
                    acc.add(units, denom);
                }
            }
            acc
        })
        .reduce(Credit::zero, Credit::merge)
}

/// Expected top-k% count for a subset of size n: n * k / 100, unrounded.
pub fn expected_topk(n: f64, k: KPercent) -> f64 {
    k.expected_of(n)
}

/// Ratio of observed to expected top-k% counts.
pub fn pp_topk(observed: f64, expected: f64) -> Result<f64> {
    if expected <= 0.0 {
        return Err(Error::NonPositiveExpected);
    }
    Ok(observed / expected)
}

/// PP-top-k% of an entity against a view and its top class. An entity with
/// no credited records reports 0 rather than a division error.
pub fn entity_pp(
    view: &CorpusView<'_>,
    class: &TopClass,
    entity: &Entity,
    k: KPercent,
    method: CountingMethod,
) -> f64 {
    let n = entity_n(view, entity, method).as_f64();
    if n == 0.0 {
        return 0.0;
    }
    let observed = p_topk(view, class, entity, method).as_f64();
    observed / expected_topk(n, k)
}

/// Percentile-rank class model for I3.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum I3Classes {
    /// 100 classes valued by the integer floor of the rank (default); the
    /// sum is an exact integer, independent of summation order.
    #[default]
    Hundred,
    /// Two classes, top versus rest: records with rank >= boundary
    /// contribute 1, others 0, so I3 equals the top-class frequency.
    TopVsRest { boundary: f64 },
    /// Ascending lower bin edges; a record contributes the lower edge of the
    /// bin its rank falls in, 0 below the first edge.
    Bins(Vec<f64>),
}

/// I3 over a rank assignment: the sum over percentile classes of class value
/// times class frequency. An empty assignment yields 0.
pub fn i3(ranks: &RankAssignment, classes: &I3Classes) -> f64 {
    match classes {
        I3Classes::Hundred => {
            let total: u64 = ranks
                .floor_classes()
                .par_iter()
                .map(|&c| u64::from(c))
                .sum();
            total as f64
        }
        I3Classes::TopVsRest { boundary } => {
            ranks.ranks().iter().filter(|&&r| r >= *boundary).count() as f64
        }
        I3Classes::Bins(edges) => ranks
            .ranks()
            .iter()
            .map(|&r| {
                edges
                    .iter()
                    .rev()
                    .find(|&&e| r >= e)
                    .copied()
                    .unwrap_or(0.0)
            })
            .sum(),
    }
}

/// A subset's I3 as a percentage of the reference set's I3.
pub fn pct_i3(i3_subset: f64, i3_reference: f64) -> Result<f64> {
    if i3_reference <= 0.0 {
        return Err(Error::ZeroReferenceI3);
    }
    Ok(100.0 * i3_subset / i3_reference)
}

/// Stratification for relative citation scores.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RcStratification {
    Category,
    #[default]
    CategoryYear,
    CategoryYearDoctype,
}

/// Citations of one record relative to the mean of one stratum it belongs
/// to. Records carrying several categories produce one score per category.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RcScore {
    pub record_index: u32,
    pub id: String,
    pub stratum: String,
    pub rc: f64,
}

fn stratum_key(record: &PublicationRecord, category: &str, strat: RcStratification) -> String {
    match strat {
        RcStratification::Category => category.to_string(),
        RcStratification::CategoryYear => format!("{category}/{}", record.year),
        RcStratification::CategoryYearDoctype => {
            format!("{category}/{}/{}", record.year, record.doctype)
        }
    }
}

/// Per-record relative citation scores against stratum mean citations.
/// Records without categories are skipped; a stratum whose mean citation
/// count is zero is an error.
pub fn rc_scores(view: &CorpusView<'_>, strat: RcStratification) -> Result<Vec<RcScore>> {
    let mut sums: BTreeMap<String, (u128, u64)> = BTreeMap::new();
    for r in view.records() {
        for cat in r.categories() {
            let key = stratum_key(r, cat, strat);
            let e = sums.entry(key).or_insert((0, 0));
            e.0 += u128::from(r.citations);
            e.1 += 1;
        }
    }
    for (key, (total, count)) in &sums {
        if *total == 0 && *count > 0 {
            return Err(Error::ZeroMeanStratum(key.clone()));
        }
    }
    let means: BTreeMap<&str, f64> = sums
        .iter()
        .map(|(k, (total, count))| (k.as_str(), *total as f64 / *count as f64))
        .collect();

    let mut scores = Vec::new();
    for (&index, record) in view.indices().iter().zip(view.records()) {
        for cat in record.categories() {
            let key = stratum_key(record, cat, strat);
            let mean = means[key.as_str()];
            scores.push(RcScore {
                record_index: index,
                id: record.id.clone(),
                stratum: key,
                rc: record.citations as f64 / mean,
            });
        }
    }
    Ok(scores)
}

/// Mean of the given RC values.
pub fn mncs(scores: &[RcScore]) -> Result<f64> {
    if scores.is_empty() {
        return Err(Error::EmptySubset);
    }
    Ok(scores.iter().map(|s| s.rc).sum::<f64>() / scores.len() as f64)
}

/// Record-level RC: a record in several categories receives the mean of its
/// per-category scores.
pub fn record_level_rc(scores: &[RcScore]) -> BTreeMap<u32, f64> {
    let mut acc: BTreeMap<u32, (f64, u32)> = BTreeMap::new();
    for s in scores {
        let e = acc.entry(s.record_index).or_insert((0.0, 0));
        e.0 += s.rc;
        e.1 += 1;
    }
    acc.into_iter()
        .map(|(i, (sum, count))| (i, sum / f64::from(count)))
        .collect()
}

/// Percentile ranks divided by the mean rank of each record's broad
/// category.
#[derive(Debug, Clone)]
pub struct RefinedScores {
    indices: Vec<u32>,
    scores: Vec<f64>,
    category_means: BTreeMap<String, f64>,
}

impl RefinedScores {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[u32] {
        &self.indices
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, f64)> + '_ {
        self.indices
            .iter()
            .copied()
            .zip(self.scores.iter().copied())
    }

    pub fn score_of(&self, corpus_index: u32) -> Option<f64> {
        self.indices
            .binary_search(&corpus_index)
            .ok()
            .map(|pos| self.scores[pos])
    }

    pub fn category_mean(&self, category: &str) -> Option<f64> {
        self.category_means.get(category).copied()
    }
}

/// Refined score per record: rank / (mean rank of the record's broad
/// category). Every ranked record must map to exactly one broad category
/// with a positive mean rank. Within a category the refinement preserves
/// rank order.
pub fn esi_refined_ranks(
    ranks: &RankAssignment,
    corpus: &Corpus,
    category_of: impl Fn(&PublicationRecord) -> Option<String>,
) -> Result<RefinedScores> {
    let records = corpus.records();
    let mut categories: Vec<String> = Vec::with_capacity(ranks.len());
    let mut sums: BTreeMap<String, (f64, u64)> = BTreeMap::new();
    for (index, rank) in ranks.iter() {
        let record = &records[index as usize];
        let cat =
            category_of(record).ok_or_else(|| Error::BroadCategoryUnmapped(record.id.clone()))?;
        let e = sums.entry(cat.clone()).or_insert((0.0, 0));
        e.0 += rank;
        e.1 += 1;
        categories.push(cat);
    }
    let mut category_means: BTreeMap<String, f64> = BTreeMap::new();
    for (cat, (sum, count)) in sums {
        let mean = sum / count as f64;
        if mean <= 0.0 {
            return Err(Error::ZeroMeanRank(cat));
        }
        category_means.insert(cat, mean);
    }
    let mut indices = Vec::with_capacity(ranks.len());
    let mut scores = Vec::with_capacity(ranks.len());
    for ((index, rank), cat) in ranks.iter().zip(&categories) {
        indices.push(index);
        scores.push(rank / category_means[cat]);
    }
    Ok(RefinedScores {
        indices,
        scores,
        category_means,
    })
}

/// Maps each record to exactly one broad category: through the optional
/// category-to-broad mapping when given, otherwise the record's single
/// category. Records resolving to zero or several broad categories are
/// rejected.
pub fn single_broad_category(
    record: &PublicationRecord,
    map: Option<&BTreeMap<String, String>>,
) -> Option<String> {
    let mut broad: Option<&str> = None;
    for cat in record.categories() {
        let mapped = match map {
            Some(m) => m.get(cat).map(String::as_str)?,
            None => cat.as_str(),
        };
        match broad {
            None => broad = Some(mapped),
            Some(b) if b == mapped => {}
            Some(_) => return None,
        }
    }
    broad.map(str::to_string)
}

/// Top class selected by refined score instead of raw citations: ceiling
/// rank, ties included.
#[derive(Debug, Clone)]
pub struct RefinedTopClass {
    pub k: KPercent,
    pub reference_n: usize,
    pub nominal_rank: usize,
    pub score_cutoff: f64,
    member_indices: Vec<u32>,
}

impl RefinedTopClass {
    pub fn len(&self) -> usize {
        self.member_indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.member_indices.is_empty()
    }

    pub fn member_indices(&self) -> &[u32] {
        &self.member_indices
    }

    pub fn contains(&self, corpus_index: u32) -> bool {
        self.member_indices.binary_search(&corpus_index).is_ok()
    }
}

pub fn refined_top_class(scores: &RefinedScores, k: KPercent) -> Result<RefinedTopClass> {
    if scores.is_empty() {
        return Err(Error::EmptySubset);
    }
    let nominal_rank = k.nominal_rank(scores.len());
    let mut sorted: Vec<f64> = scores.scores().to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let score_cutoff = sorted[nominal_rank - 1];
    let member_indices: Vec<u32> = scores
        .iter()
        .filter(|&(_, s)| s >= score_cutoff)
        .map(|(i, _)| i)
        .collect();
    Ok(RefinedTopClass {
        k,
        reference_n: scores.len(),
        nominal_rank,
        score_cutoff,
        member_indices,
    })
}

/// PP-top-k% where membership comes from refined scores. An entity with no
/// credited records reports 0.
pub fn refined_pp_topk(
    view: &CorpusView<'_>,
    scores: &RefinedScores,
    entity: &Entity,
    k: KPercent,
    method: CountingMethod,
) -> Result<f64> {
    let class = refined_top_class(scores, k)?;
    let n = entity_n(view, entity, method).as_f64();
    if n == 0.0 {
        return Ok(0.0);
    }
    let records = view.corpus().records();
    let mut observed = Credit::zero();
    for &i in class.member_indices() {
        if view.indices().binary_search(&i).is_ok() {
            if let Some((units, denom)) = entity_record_credit(&records[i as usize], entity, method)
            {
                observed.add(units, denom);
            }
        }
    }
    Ok(observed.as_f64() / expected_topk(n, k))
}

/// Percentile ranks computed within each broad category separately and
/// merged into one assignment; the reference view is partitioned by
/// category.
pub fn per_category_ranks(
    view: &CorpusView<'_>,
    scheme: PercentileScheme,
    category_of: impl Fn(&PublicationRecord) -> Option<String>,
) -> Result<RankAssignment> {
    let mut groups: BTreeMap<String, Vec<u32>> = BTreeMap::new();
    for (&index, record) in view.indices().iter().zip(view.records()) {
        let cat =
            category_of(record).ok_or_else(|| Error::BroadCategoryUnmapped(record.id.clone()))?;
        groups.entry(cat).or_default().push(index);
    }
    let corpus = view.corpus();
    let mut parts = Vec::with_capacity(groups.len());
    for indices in groups.into_values() {
        let sub = CorpusView::from_parts(corpus, indices);
        parts.push(crate::percentile::percentile_ranks(&sub, scheme)?);
    }
    Ok(RankAssignment::merge(parts))
}

/// Per-subset indicator bundle, one row of an output table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IndicatorReport {
    pub label: String,
    pub n: f64,
    pub p_topk: f64,
    pub expected: f64,
    pub pp_topk: f64,
    pub i3: f64,
    pub pct_i3: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mncs: Option<f64>,
}

/// Corpus indices of view records credited to the entity.
pub fn entity_subset_indices(view: &CorpusView<'_>, entity: &Entity) -> Vec<u32> {
    view.indices()
        .iter()
        .zip(view.records())
        .filter(|(_, r)| entity.matches(r))
        .map(|(&i, _)| i)
        .collect()
}

/// Builds the indicator row of one entity against a reference view, its top
/// class, and its rank assignment.
#[allow(clippy::too_many_arguments)]
pub fn entity_report(
    view: &CorpusView<'_>,
    class: &TopClass,
    ranks: &RankAssignment,
    reference_i3: f64,
    entity: &Entity,
    k: KPercent,
    method: CountingMethod,
    record_rc: Option<&BTreeMap<u32, f64>>,
) -> IndicatorReport {
    let n = entity_n(view, entity, method).as_f64();
    let observed = p_topk(view, class, entity, method).as_f64();
    let expected = expected_topk(n, k);
    let pp = if n == 0.0 { 0.0 } else { observed / expected };

    let subset = entity_subset_indices(view, entity);
    let subset_i3 = i3(&ranks.restrict(&subset), &I3Classes::Hundred);
    let share_i3 = if reference_i3 > 0.0 {
        100.0 * subset_i3 / reference_i3
    } else {
        0.0
    };
    let mncs = record_rc.and_then(|rc| {
        let values: Vec<f64> = subset.iter().filter_map(|i| rc.get(i)).copied().collect();
        if values.is_empty() {
            None
        } else {
            Some(values.iter().sum::<f64>() / values.len() as f64)
        }
    });
    IndicatorReport {
        label: entity.label.clone(),
        n,
        p_topk: observed,
        expected,
        pp_topk: pp,
        i3: subset_i3,
        pct_i3: share_i3,
        mncs,
    }
}

/// The reference-set row itself: n is the view size, the observed count is
/// the tie-inflated class size.
pub fn reference_report(
    view: &CorpusView<'_>,
    class: &TopClass,
    reference_i3: f64,
    k: KPercent,
    record_rc: Option<&BTreeMap<u32, f64>>,
) -> IndicatorReport {
    let n = view.n() as f64;
    let observed = class.len() as f64;
    let expected = expected_topk(n, k);
    let mncs = record_rc.and_then(|rc| {
        if rc.is_empty() {
            None
        } else {
            Some(rc.values().sum::<f64>() / rc.len() as f64)
        }
    });
    IndicatorReport {
        label: "World".to_string(),
        n,
        p_topk: observed,
        expected,
        pp_topk: if expected > 0.0 {
            observed / expected
        } else {
            0.0
        },
        i3: reference_i3,
        pct_i3: 100.0,
        mncs,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{filter, DocType, SubsetFilter};
    use crate::percentile::{percentile_ranks, top_class, top_class_threshold};
    use approx::assert_abs_diff_eq;

    fn rec(id: &str, citations: u64, countries: &[&str], categories: &[&str]) -> PublicationRecord {
        PublicationRecord::new(
            id,
            2019,
            DocType::Article,
            citations,
            countries.iter().map(|s| s.to_string()).collect::<Vec<_>>(),
            categories.iter().map(|s| s.to_string()).collect::<Vec<_>>(),
        )
    }

    fn corpus(records: Vec<PublicationRecord>) -> Corpus {
        Corpus::from_records(records, None, "test").unwrap()
    }

    #[test]
    fn attribution_examples() {
        let single = rec("a", 0, &["US"], &[]);
        for m in [
            CountingMethod::WholeNumber,
            CountingMethod::FractionalByCountry,
        ] {
            let credits = country_attribution(&single, m);
            assert_eq!(credits["US"], Ratio::new(1, 1));
        }

        let dual = rec("b", 0, &["US", "CN"], &[]);
        let whole = country_attribution(&dual, CountingMethod::WholeNumber);
        assert_eq!(whole["US"], Ratio::new(1, 1));
        assert_eq!(whole["CN"], Ratio::new(1, 1));
        let frac = country_attribution(&dual, CountingMethod::FractionalByCountry);
        assert_eq!(frac["US"], Ratio::new(1, 2));
        assert_eq!(frac["CN"], Ratio::new(1, 2));

        let none = rec("c", 0, &[], &[]);
        assert!(country_attribution(&none, CountingMethod::WholeNumber).is_empty());
    }

    #[test]
    fn fractional_credits_sum_to_one_per_record() {
        let r = rec("a", 0, &["US", "CN", "DE"], &[]);
        let credits = country_attribution(&r, CountingMethod::FractionalByCountry);
        let total: Ratio<u64> = credits.values().sum();
        assert_eq!(total, Ratio::new(1, 1));
    }

    #[test]
    fn credit_accumulator_is_exact() {
        let mut c = Credit::zero();
        for _ in 0..3 {
            c.add(1, 3);
        }
        assert!(c.is_integer());
        assert_eq!(c.as_f64(), 1.0);

        let mut a = Credit::zero();
        a.add(1, 2);
        let mut b = Credit::zero();
        b.add(1, 2);
        assert_eq!(a.clone().merge(b).to_ratio(), Ratio::new(1, 1));
    }

    #[test]
    fn p_topk_members_and_absent_entity() {
        let c = corpus(vec![
            rec("a", 40, &["US"], &[]),
            rec("b", 38, &["US", "CN"], &[]),
            rec("c", 37, &["CN"], &[]),
            rec("d", 0, &[], &[]),
        ]);
        let view = c.view();
        let t = top_class_threshold(&view, KPercent::new(50, 1).unwrap()).unwrap();
        assert_eq!(t.citation_cutoff, 38);
        let class = top_class(&view, &t);

        let us = p_topk(
            &view,
            &class,
            &Entity::country("US"),
            CountingMethod::WholeNumber,
        );
        assert_eq!(us.as_f64(), 2.0);
        let cn_frac = p_topk(
            &view,
            &class,
            &Entity::country("CN"),
            CountingMethod::FractionalByCountry,
        );
        assert_eq!(cn_frac.to_ratio(), Ratio::new(1, 2));
        let absent = p_topk(
            &view,
            &class,
            &Entity::country("XX"),
            CountingMethod::WholeNumber,
        );
        assert!(absent.is_zero());
    }

    #[test]
    fn expected_and_pp_examples() {
        let k = KPercent::ONE;
        assert_abs_diff_eq!(expected_topk(492_448.0, k), 4_924.48, epsilon = 1e-9);
        assert_eq!(expected_topk(0.0, k), 0.0);
        assert_abs_diff_eq!(expected_topk(504_695.0, k), 5_046.95, epsilon = 1e-9);

        let pp = pp_topk(7_959.0, 4_924.48).unwrap();
        assert_eq!(format!("{pp:.2}"), "1.62");
        let pp = pp_topk(8_422.0, 5_046.95).unwrap();
        assert_eq!(format!("{pp:.2}"), "1.67");
        let pp = pp_topk(20_413.0, expected_topk(2_041_287.0, k)).unwrap();
        assert_eq!(format!("{pp:.2}"), "1.00");
        assert_eq!(pp_topk(0.0, 5.0).unwrap(), 0.0);
        assert!(pp_topk(1.0, 0.0).is_err());
    }

    #[test]
    fn i3_direct_sum() {
        let c = corpus(vec![
            rec("a", 1, &[], &[]),
            rec("b", 2, &[], &[]),
            rec("c", 3, &[], &[]),
            rec("d", 4, &[], &[]),
        ]);
        let ranks = percentile_ranks(&c.view(), PercentileScheme::StrictBelow).unwrap();
        assert_eq!(ranks.ranks(), [0.0, 25.0, 50.0, 75.0]);
        assert_eq!(i3(&ranks, &I3Classes::Hundred), 150.0);
        assert_eq!(i3(&ranks.restrict(&[]), &I3Classes::Hundred), 0.0);
        // two classes: top 25% versus rest
        assert_eq!(i3(&ranks, &I3Classes::TopVsRest { boundary: 75.0 }), 1.0);
        // bins at 0 and 50: two records below 50 contribute 0, two contribute 50
        assert_eq!(i3(&ranks, &I3Classes::Bins(vec![0.0, 50.0])), 100.0);
    }

    #[test]
    fn pct_i3_table_values() {
        let virology_us = pct_i3(444_624.0, 1_486_371.0).unwrap();
        assert_eq!(format!("{virology_us:.2}"), "29.91");
        let virology_cn = pct_i3(183_984.0, 1_486_371.0).unwrap();
        assert_eq!(format!("{virology_cn:.2}"), "12.38");
        assert_eq!(pct_i3(5.0, 5.0).unwrap(), 100.0);
        assert!(pct_i3(1.0, 0.0).is_err());
    }

    #[test]
    fn rc_examples() {
        let c = corpus(vec![
            rec("a", 0, &[], &["X"]),
            rec("b", 2, &[], &["X"]),
            rec("c", 4, &[], &["X"]),
        ]);
        let scores = rc_scores(&c.view(), RcStratification::Category).unwrap();
        let rcs: Vec<f64> = scores.iter().map(|s| s.rc).collect();
        assert_eq!(rcs, [0.0, 1.0, 2.0]);
        assert_eq!(mncs(&scores).unwrap(), 1.0);

        // one record in two strata with means 10 and 1: RC 0.5 versus 5.0
        let c = corpus(vec![
            rec("h1", 15, &[], &["H"]),
            rec("h2", 5, &[], &["H", "L"]),
            rec("l1", 0, &[], &["L"]),
            rec("l2", 0, &[], &["L"]),
            rec("l3", 0, &[], &["L"]),
            rec("l4", 0, &[], &["L"]),
        ]);
        let scores = rc_scores(&c.view(), RcStratification::Category).unwrap();
        let h2: Vec<&RcScore> = scores.iter().filter(|s| s.id == "h2").collect();
        assert_eq!(h2.len(), 2);
        let by_stratum: BTreeMap<&str, f64> =
            h2.iter().map(|s| (s.stratum.as_str(), s.rc)).collect();
        assert_eq!(by_stratum["H"], 0.5);
        assert_eq!(by_stratum["L"], 5.0);
        let record = record_level_rc(&scores);
        assert_eq!(record[&1], 2.75); // mean of the two per-category scores
    }

    #[test]
    fn rc_zero_mean_stratum() {
        let c = corpus(vec![rec("a", 0, &[], &["Z"]), rec("b", 0, &[], &["Z"])]);
        let err = rc_scores(&c.view(), RcStratification::Category).unwrap_err();
        assert_eq!(err.to_string(), "stratum Z has zero mean citations");
        let err = rc_scores(&c.view(), RcStratification::CategoryYear).unwrap_err();
        assert_eq!(err.to_string(), "stratum Z/2019 has zero mean citations");
    }

    #[test]
    fn mncs_examples() {
        let single = vec![RcScore {
            record_index: 0,
            id: "a".to_string(),
            stratum: "X".to_string(),
            rc: 3.7,
        }];
        assert_eq!(mncs(&single).unwrap(), 3.7);
        assert!(mncs(&[]).is_err());
    }

    #[test]
    fn refined_single_category() {
        let c = corpus(vec![
            rec("a", 1, &[], &["X"]),
            rec("b", 2, &[], &["X"]),
            rec("c", 3, &[], &["X"]),
            rec("d", 4, &[], &["X"]),
        ]);
        let ranks = percentile_ranks(&c.view(), PercentileScheme::StrictBelow).unwrap();
        let refined = esi_refined_ranks(&ranks, &c, |r| r.categories().first().cloned()).unwrap();
        let expected = [0.0, 25.0 / 37.5, 50.0 / 37.5, 75.0 / 37.5];
        for (got, want) in refined.scores().iter().zip(expected) {
            assert_abs_diff_eq!(got, &want, epsilon = 1e-12);
        }
        assert_eq!(refined.category_mean("X"), Some(37.5));
    }

    #[test]
    fn refined_preserves_order_within_category() {
        let c = corpus(vec![
            rec("a", 5, &[], &["X"]),
            rec("b", 9, &[], &["X"]),
            rec("c", 1, &[], &["Y"]),
            rec("d", 30, &[], &["Y"]),
        ]);
        let ranks = percentile_ranks(&c.view(), PercentileScheme::StrictBelow).unwrap();
        let refined = esi_refined_ranks(&ranks, &c, |r| r.categories().first().cloned()).unwrap();
        assert!(refined.score_of(0).unwrap() < refined.score_of(1).unwrap());
        assert!(refined.score_of(2).unwrap() < refined.score_of(3).unwrap());
    }

    #[test]
    fn refined_selection_can_differ_from_raw() {
        // two categories with different rank means: the raw top record and
        // the refined top record disagree
        let mut records = Vec::new();
        for i in 0..20u64 {
            records.push(rec(&format!("h{i}"), 100 - i, &[], &["H"]));
        }
        for i in 0..20u64 {
            records.push(rec(&format!("l{i}"), 20 - i, &[], &["L"]));
        }
        let c = corpus(records);
        let view = c.view();
        let k = KPercent::ONE;

        let t = top_class_threshold(&view, k).unwrap();
        let raw = top_class(&view, &t);
        assert_eq!(raw.member_ids(&c), ["h0"]);

        let ranks = percentile_ranks(&view, PercentileScheme::StrictBelow).unwrap();
        let refined = esi_refined_ranks(&ranks, &c, |r| r.categories().first().cloned()).unwrap();
        let refined_class = refined_top_class(&refined, k).unwrap();
        let refined_ids: Vec<&str> = refined_class
            .member_indices()
            .iter()
            .map(|&i| c.records()[i as usize].id.as_str())
            .collect();
        assert_eq!(refined_ids, ["l0"]);
    }

    #[test]
    fn refined_pp_matches_raw_for_single_category() {
        let mut records = Vec::new();
        for i in 0..50u64 {
            let country = if i % 3 == 0 { "US" } else { "CN" };
            records.push(rec(&format!("r{i}"), i * i % 37, &[country], &["X"]));
        }
        let c = corpus(records);
        let view = c.view();
        let k = KPercent::new(10, 1).unwrap();
        let t = top_class_threshold(&view, k).unwrap();
        let class = top_class(&view, &t);
        let ranks = percentile_ranks(&view, PercentileScheme::StrictBelow).unwrap();
        let refined = esi_refined_ranks(&ranks, &c, |r| r.categories().first().cloned()).unwrap();
        for code in ["US", "CN", "XX"] {
            let entity = Entity::country(code);
            let raw = entity_pp(&view, &class, &entity, k, CountingMethod::WholeNumber);
            let refined_pp =
                refined_pp_topk(&view, &refined, &entity, k, CountingMethod::WholeNumber).unwrap();
            assert_abs_diff_eq!(raw, refined_pp, epsilon = 1e-12);
        }
    }

    #[test]
    fn zero_mean_rank_category_is_rejected() {
        // all records of one category tie at the bottom: strict-below ranks
        // are all zero and the category mean rank degenerates
        let c = corpus(vec![
            rec("a", 0, &[], &["Z"]),
            rec("b", 0, &[], &["Z"]),
            rec("c", 9, &[], &["Y"]),
        ]);
        let ranks = percentile_ranks(&c.view(), PercentileScheme::StrictBelow).unwrap();
        let err = esi_refined_ranks(&ranks, &c, |r| r.categories().first().cloned()).unwrap_err();
        assert_eq!(err.to_string(), "broad category Z has zero mean rank");
    }

    #[test]
    fn unmapped_broad_category_is_rejected() {
        let c = corpus(vec![rec("a", 1, &[], &[])]);
        let ranks = percentile_ranks(&c.view(), PercentileScheme::StrictBelow).unwrap();
        let err = esi_refined_ranks(&ranks, &c, |r| r.categories().first().cloned()).unwrap_err();
        assert!(err.to_string().contains("not mapped"));

        let multi = corpus(vec![rec("m", 1, &[], &["A", "B"])]);
        assert_eq!(single_broad_category(&multi.records()[0], None), None);
        let map: BTreeMap<String, String> = [
            ("A".to_string(), "broad".to_string()),
            ("B".to_string(), "broad".to_string()),
        ]
        .into();
        assert_eq!(
            single_broad_category(&multi.records()[0], Some(&map)),
            Some("broad".to_string())
        );
    }

    #[test]
    fn entity_report_bundle() {
        let c = corpus(vec![
            rec("a", 40, &["US"], &["X"]),
            rec("b", 30, &["CN"], &["X"]),
            rec("c", 2, &["US"], &["X"]),
            rec("d", 1, &["CN"], &["X"]),
        ]);
        let view = filter(&c, &SubsetFilter::All);
        let k = KPercent::new(25, 1).unwrap();
        let t = top_class_threshold(&view, k).unwrap();
        let class = top_class(&view, &t);
        let ranks = percentile_ranks(&view, PercentileScheme::StrictBelow).unwrap();
        let ref_i3 = i3(&ranks, &I3Classes::Hundred);
        let report = entity_report(
            &view,
            &class,
            &ranks,
            ref_i3,
            &Entity::country("US"),
            k,
            CountingMethod::WholeNumber,
            None,
        );
        assert_eq!(report.n, 2.0);
        assert_eq!(report.p_topk, 1.0);
        assert_eq!(report.expected, 0.5);
        assert_eq!(report.pp_topk, 2.0);

        let world = reference_report(&view, &class, ref_i3, k, None);
        assert_eq!(world.n, 4.0);
        assert_eq!(world.p_topk, 1.0);
        assert_eq!(world.pct_i3, 100.0);
    }
}
