//! Subset comparison engines: per-category entity comparisons, collaboration
//! classes over configured blocs, and multi-year trend series.
//!
//! Every category row is its own reference set: the top-k% cutoff is
//! computed within the category, so a full category always has PP = 1.00
//! against itself.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::corpus::{filter, Corpus, CorpusView, Entity, SubsetFilter};
use crate::indicators::{entity_n, entity_record_credit, expected_topk, p_topk, CountingMethod};
use crate::percentile::{top_class, top_class_threshold, KPercent, TopClass};
use crate::stats::{z_two_proportions, ZTestResult};
use crate::{Error, Result};

/// One row of a two-entity category comparison.
#[derive(Debug, Clone, Serialize)]
pub struct ComparisonRow {
    pub category: String,
    pub n_total: usize,
    pub n_entity1: f64,
    pub n_entity2: f64,
    pub p_top_1: f64,
    pub p_top_2: f64,
    pub pp_1: f64,
    pub pp_2: f64,
    /// Pooled two-proportion z on whole-number membership counts; None when
    /// the pooled proportion degenerates.
    pub z: Option<f64>,
    pub significant_05: bool,
    /// Records credited to both entities (internationally co-authored).
    pub overlap: usize,
}

/// Comparison of two entities across categories, with an unfiltered world
/// row appended.
#[derive(Debug, Clone, Serialize)]
pub struct ComparisonTable {
    pub entity1: String,
    pub entity2: String,
    pub k: f64,
    pub rows: Vec<ComparisonRow>,
    pub footnotes: Vec<String>,
}

/// Compares two entities inside each listed category and in the whole
/// corpus. The reference set of every row is the category view itself;
/// z statistics always use whole-number membership counts.
pub fn category_comparison(
    corpus: &Corpus,
    categories: &[String],
    entities: (&Entity, &Entity),
    k: KPercent,
    method: CountingMethod,
    base_filter: &SubsetFilter,
) -> Result<ComparisonTable> {
    let base = filter(corpus, base_filter);
    let mut rows = Vec::with_capacity(categories.len() + 1);
    let mut footnotes = Vec::new();
    for category in categories {
        let view = base.refine(&SubsetFilter::categories([category.clone()]));
        if view.is_empty() {
            return Err(Error::EmptyCategory(category.clone()));
        }
        rows.push(comparison_row(
            category,
            &view,
            entities,
            k,
            method,
            &mut footnotes,
        )?);
    }
    rows.push(comparison_row(
        "world",
        &base,
        entities,
        k,
        method,
        &mut footnotes,
    )?);
    Ok(ComparisonTable {
        entity1: entities.0.label.clone(),
        entity2: entities.1.label.clone(),
        k: k.as_f64(),
        rows,
        footnotes,
    })
}

fn comparison_row(
    category: &str,
    view: &CorpusView<'_>,
    entities: (&Entity, &Entity),
    k: KPercent,
    method: CountingMethod,
    footnotes: &mut Vec<String>,
) -> Result<ComparisonRow> {
    let threshold = top_class_threshold(view, k)?;
    let class = top_class(view, &threshold);
    let (e1, e2) = entities;

    let n1 = entity_n(view, e1, method).as_f64();
    let n2 = entity_n(view, e2, method).as_f64();
    let p1 = p_topk(view, &class, e1, method).as_f64();
    let p2 = p_topk(view, &class, e2, method).as_f64();
    let pp = |p: f64, n: f64| {
        if n > 0.0 {
            p / expected_topk(n, k)
        } else {
            0.0
        }
    };

    // z always compares whole-number membership counts
    let (x1, m1) = whole_counts(view, &class, e1);
    let (x2, m2) = whole_counts(view, &class, e2);
    let z = match z_two_proportions(x1, m1, x2, m2) {
        Ok(r) => Some(r),
        Err(Error::DegeneratePooledProportion | Error::EmptySample) => {
            footnotes.push(format!(
                "{category}: z not computable (degenerate proportions)"
            ));
            None
        }
        Err(e) => return Err(e),
    };

    let overlap = view
        .records()
        .filter(|r| e1.matches(r) && e2.matches(r))
        .count();
    if overlap > 0 {
        footnotes.push(format!(
            "{category}: {overlap} records are co-authored between {} and {}; sets overlap",
            e1.label, e2.label
        ));
    }
    if threshold.is_tie_inflated() {
        footnotes.push(format!(
            "{category}: ties at {} citations inflate the top class to {} (nominal {})",
            threshold.citation_cutoff, threshold.actual_size, threshold.nominal_rank
        ));
    }

    Ok(ComparisonRow {
        category: category.to_string(),
        n_total: view.n(),
        n_entity1: n1,
        n_entity2: n2,
        p_top_1: p1,
        p_top_2: p2,
        pp_1: pp(p1, n1),
        pp_2: pp(p2, n2),
        significant_05: z.as_ref().map(|r| r.significant_05).unwrap_or(false),
        z: z.map(|r| r.z),
        overlap,
    })
}

fn whole_counts(view: &CorpusView<'_>, class: &TopClass, entity: &Entity) -> (u64, u64) {
    let mut n = 0u64;
    let mut x = 0u64;
    for (&i, record) in view.indices().iter().zip(view.records()) {
        if entity.matches(record) {
            n += 1;
            if class.contains(i) {
                x += 1;
            }
        }
    }
    (x, n)
}

/// Pairwise z between two entities inside one category view, on
/// whole-number counts. Exposed for direct significance queries.
pub fn category_z(
    corpus: &Corpus,
    category: &str,
    entities: (&Entity, &Entity),
    k: KPercent,
    base_filter: &SubsetFilter,
) -> Result<ZTestResult> {
    let view =
        filter(corpus, base_filter).refine(&SubsetFilter::categories([category.to_string()]));
    if view.is_empty() {
        return Err(Error::EmptyCategory(category.to_string()));
    }
    let threshold = top_class_threshold(&view, k)?;
    let class = top_class(&view, &threshold);
    let (x1, n1) = whole_counts(&view, &class, entities.0);
    let (x2, n2) = whole_counts(&view, &class, entities.1);
    Ok(z_two_proportions(x1, n1, x2, n2)?
        .with_labels(entities.0.label.clone(), entities.1.label.clone()))
}

/// One collaboration class: the records whose bylines intersect exactly this
/// set of configured blocs.
#[derive(Debug, Clone, Serialize)]
pub struct CollaborationClass {
    /// Participating bloc labels, in configured order; empty for "none".
    pub blocs: Vec<String>,
    pub label: String,
    pub n: usize,
    pub p_top: usize,
    pub pp: f64,
}

/// Partitions a view by which configured blocs each record's countries
/// intersect and reports PP-top-k% per class against the full view's
/// expected rate. Classes are record-level and exhaustive: every record
/// falls in exactly one class, including "none".
pub fn collaboration_classes(
    view: &CorpusView<'_>,
    blocs: &[Entity],
    class: &TopClass,
    k: KPercent,
) -> Result<Vec<CollaborationClass>> {
    for (i, a) in blocs.iter().enumerate() {
        for b in &blocs[i + 1..] {
            if a.codes.intersection(&b.codes).next().is_some() {
                return Err(Error::OverlappingBlocs(a.label.clone(), b.label.clone()));
            }
        }
    }

    // class key: bitmask over configured blocs
    let mut sizes: BTreeMap<u32, (usize, usize)> = BTreeMap::new();
    for (&i, record) in view.indices().iter().zip(view.records()) {
        let mut mask = 0u32;
        for (b, bloc) in blocs.iter().enumerate() {
            if bloc.matches(record) {
                mask |= 1 << b;
            }
        }
        let e = sizes.entry(mask).or_insert((0, 0));
        e.0 += 1;
        if class.contains(i) {
            e.1 += 1;
        }
    }

    let mut out = Vec::with_capacity(sizes.len());
    let mut keys: Vec<u32> = sizes.keys().copied().collect();
    keys.sort_by_key(|m| (m.count_ones(), *m));
    for mask in keys {
        let (n, p_top) = sizes[&mask];
        let labels: Vec<String> = blocs
            .iter()
            .enumerate()
            .filter(|(b, _)| mask & (1 << b) != 0)
            .map(|(_, bloc)| bloc.label.clone())
            .collect();
        let label = if labels.is_empty() {
            "none".to_string()
        } else {
            labels.join("+")
        };
        let expected = expected_topk(n as f64, k);
        out.push(CollaborationClass {
            blocs: labels,
            label,
            n,
            p_top,
            pp: if expected > 0.0 {
                p_top as f64 / expected
            } else {
                0.0
            },
        });
    }
    Ok(out)
}

/// Assigns a single record to its collaboration class over configured
/// blocs: the labels of every bloc its countries intersect.
pub fn collaboration_label(record: &crate::corpus::PublicationRecord, blocs: &[Entity]) -> String {
    let labels: Vec<&str> = blocs
        .iter()
        .filter(|b| b.matches(record))
        .map(|b| b.label.as_str())
        .collect();
    if labels.is_empty() {
        "none".to_string()
    } else {
        labels.join("+")
    }
}

/// One trend point: a year's PP-top-k% against that year's own threshold.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrendPoint {
    pub year: i32,
    pub n: f64,
    pub p_top: f64,
    pub pp: f64,
}

/// PP-top-k% of an entity per year, each year ranked against its own
/// corpus.
pub fn national_trend(
    corpora: &BTreeMap<i32, Corpus>,
    entity: &Entity,
    k: KPercent,
    method: CountingMethod,
    base_filter: &SubsetFilter,
) -> Result<Vec<TrendPoint>> {
    let mut out = Vec::with_capacity(corpora.len());
    for (&year, corpus) in corpora {
        let view = filter(corpus, base_filter);
        if view.is_empty() {
            return Err(Error::EmptyYear(year));
        }
        let threshold = top_class_threshold(&view, k)?;
        let class = top_class(&view, &threshold);
        let n = entity_n(&view, entity, method).as_f64();
        let p = p_topk(&view, &class, entity, method).as_f64();
        let pp = if n > 0.0 {
            p / expected_topk(n, k)
        } else {
            0.0
        };
        out.push(TrendPoint {
            year,
            n,
            p_top: p,
            pp,
        });
    }
    Ok(out)
}

/// Whole-record credit presence, used to keep trend/collab row counts
/// consistent with entity credits.
pub fn entity_participates(
    record: &crate::corpus::PublicationRecord,
    entity: &Entity,
    method: CountingMethod,
) -> bool {
    entity_record_credit(record, entity, method).is_some()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{DocType, PublicationRecord};
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

    /// category fixture: `n_total` records, entity sizes and top-class
    /// participation counts as given; top class = `top_n` records with 50
    /// citations, everything else 0.
    fn category_block(
        records: &mut Vec<PublicationRecord>,
        category: &str,
        n_total: usize,
        top_n: usize,
        e1: (&str, usize, usize),
        e2: (&str, usize, usize),
    ) {
        let (c1, n1, p1) = e1;
        let (c2, n2, p2) = e2;
        assert!(p1 + p2 <= top_n && n1 + n2 <= n_total);
        let mut push = |country: Option<&str>, citations: u64| {
            let id = format!("{category}-{}", records.len());
            let countries: Vec<&str> = country.into_iter().collect();
            records.push(rec(&id, citations, &countries, &[category]));
        };
        for i in 0..n_total {
            let citations = if i < top_n { 50 } else { 0 };
            let country = if i < p1 {
                Some(c1)
            } else if i < p1 + p2 {
                Some(c2)
            } else if i < top_n {
                None
            } else if i < top_n + (n1 - p1) {
                Some(c1)
            } else if i < top_n + (n1 - p1) + (n2 - p2) {
                Some(c2)
            } else {
                None
            };
            push(country, citations);
        }
    }

    #[test]
    fn comparison_row_reference_set_locality() {
        let mut records = Vec::new();
        // two categories with very different cutoffs would arise from
        // different citation levels; here sizes shape the nominal rank
        category_block(&mut records, "A", 400, 4, ("CN", 100, 2), ("US", 100, 1));
        category_block(&mut records, "B", 200, 2, ("CN", 50, 1), ("US", 50, 1));
        let corpus = Corpus::from_records(records, None, "t").unwrap();
        let cn = Entity::country("CN");
        let us = Entity::country("US");
        let table = category_comparison(
            &corpus,
            &["A".to_string(), "B".to_string()],
            (&cn, &us),
            KPercent::ONE,
            CountingMethod::WholeNumber,
            &SubsetFilter::All,
        )
        .unwrap();
        assert_eq!(table.rows.len(), 3);
        let a = &table.rows[0];
        assert_eq!(a.n_total, 400);
        assert_eq!(a.p_top_1, 2.0);
        assert_eq!(a.pp_1, 2.0); // 2 / (100/100)
        assert_eq!(a.pp_2, 1.0);
        let world = &table.rows[2];
        assert_eq!(world.category, "world");
        assert_eq!(world.n_total, 600);
    }

    #[test]
    fn missing_category_is_an_error() {
        let corpus = Corpus::from_records(vec![rec("a", 1, &[], &["A"])], None, "t").unwrap();
        let cn = Entity::country("CN");
        let us = Entity::country("US");
        let err = category_comparison(
            &corpus,
            &["NOPE".to_string()],
            (&cn, &us),
            KPercent::ONE,
            CountingMethod::WholeNumber,
            &SubsetFilter::All,
        )
        .unwrap_err();
        assert_eq!(err.to_string(), "empty category: NOPE");
    }

    #[test]
    fn degenerate_z_is_flagged_not_fatal() {
        let mut records = Vec::new();
        // both entities outside the top class: pooled top proportion is 0
        category_block(&mut records, "A", 300, 3, ("CN", 50, 0), ("US", 50, 0));
        let corpus = Corpus::from_records(records, None, "t").unwrap();
        let cn = Entity::country("CN");
        let us = Entity::country("US");
        let table = category_comparison(
            &corpus,
            &["A".to_string()],
            (&cn, &us),
            KPercent::ONE,
            CountingMethod::WholeNumber,
            &SubsetFilter::All,
        )
        .unwrap();
        assert_eq!(table.rows[0].z, None);
        assert_eq!(table.rows[0].pp_1, 0.0);
        assert!(table.footnotes.iter().any(|f| f.contains("not computable")));
    }

    #[test]
    fn overlap_is_reported() {
        let mut records = vec![
            rec("x", 60, &["CN", "US"], &["A"]),
            rec("y", 55, &["CN"], &["A"]),
            rec("z", 52, &["US"], &["A"]),
        ];
        for i in 0..297 {
            records.push(rec(&format!("f{i}"), 0, &[], &["A"]));
        }
        let corpus = Corpus::from_records(records, None, "t").unwrap();
        let cn = Entity::country("CN");
        let us = Entity::country("US");
        let table = category_comparison(
            &corpus,
            &["A".to_string()],
            (&cn, &us),
            KPercent::ONE,
            CountingMethod::WholeNumber,
            &SubsetFilter::All,
        )
        .unwrap();
        assert_eq!(table.rows[0].overlap, 1);
        assert!(table.footnotes.iter().any(|f| f.contains("co-authored")));
    }

    #[test]
    fn collaboration_partition() {
        let records = vec![
            rec("a", 90, &["US", "CN"], &[]),
            rec("b", 10, &["US"], &[]),
            rec("c", 10, &["CN"], &[]),
            rec("d", 5, &["BR"], &[]),
            rec("e", 0, &[], &[]),
        ];
        let corpus = Corpus::from_records(records, None, "t").unwrap();
        let view = corpus.view();
        let k = KPercent::new(20, 1).unwrap();
        let t = top_class_threshold(&view, k).unwrap();
        let class = top_class(&view, &t);
        let blocs = vec![Entity::country("US"), Entity::country("CN")];
        let classes = collaboration_classes(&view, &blocs, &class, k).unwrap();

        let total: usize = classes.iter().map(|c| c.n).sum();
        assert_eq!(total, view.n());
        let labels: Vec<&str> = classes.iter().map(|c| c.label.as_str()).collect();
        assert_eq!(labels, ["none", "US", "CN", "US+CN"]);
        let bilateral = classes.iter().find(|c| c.label == "US+CN").unwrap();
        assert_eq!(bilateral.n, 1);
        assert_eq!(bilateral.p_top, 1);

        let record = rec("x", 0, &["BR"], &[]);
        assert_eq!(collaboration_label(&record, &blocs), "none");
        let record = rec("y", 0, &["US", "CN"], &[]);
        assert_eq!(collaboration_label(&record, &blocs), "US+CN");
    }

    #[test]
    fn overlapping_blocs_rejected() {
        let corpus = Corpus::from_records(vec![rec("a", 1, &["US"], &[])], None, "t").unwrap();
        let view = corpus.view();
        let k = KPercent::ONE;
        let t = top_class_threshold(&view, k).unwrap();
        let class = top_class(&view, &t);
        let blocs = vec![
            Entity::bloc("X", ["US".to_string()]),
            Entity::bloc("Y", ["US".to_string(), "CN".to_string()]),
        ];
        let err = collaboration_classes(&view, &blocs, &class, k).unwrap_err();
        assert!(err.to_string().contains("overlapping bloc"));
    }

    #[test]
    fn trend_single_year_matches_pipeline() {
        let mut records = Vec::new();
        category_block(&mut records, "A", 500, 5, ("CN", 100, 3), ("US", 100, 1));
        let corpus = Corpus::from_records(records, None, "t").unwrap();
        let mut corpora = BTreeMap::new();
        corpora.insert(2019, corpus);
        let cn = Entity::country("CN");
        let trend = national_trend(
            &corpora,
            &cn,
            KPercent::ONE,
            CountingMethod::WholeNumber,
            &SubsetFilter::All,
        )
        .unwrap();
        assert_eq!(trend.len(), 1);
        assert_eq!(trend[0].year, 2019);
        assert_abs_diff_eq!(trend[0].pp, 3.0, epsilon = 1e-12);

        let absent = Entity::country("XX");
        let trend = national_trend(
            &corpora,
            &absent,
            KPercent::ONE,
            CountingMethod::WholeNumber,
            &SubsetFilter::All,
        )
        .unwrap();
        assert_eq!(trend[0].pp, 0.0);
        assert_eq!(trend[0].n, 0.0);
    }
}
