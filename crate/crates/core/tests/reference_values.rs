//! End-to-end regression against the frozen reference corpora: entity
//! totals, thresholds, memberships, indicator rows, category comparisons,
//! and the citation-window series.

use std::sync::LazyLock;

use topcite_core::corpus::{
    filter, load_corpus, validate_corpus, write_corpus, Corpus, CorpusFormat, Entity, SubsetFilter,
};
use topcite_core::decompose::category_comparison;
use topcite_core::fixtures;
use topcite_core::indicators::{
    entity_n, entity_report, i3, p_topk, reference_report, CountingMethod, I3Classes,
};
use topcite_core::percentile::{
    pearson, percentile_ranks, top_class, top_class_threshold, window_thresholds, KPercent,
    PercentileScheme,
};

static WORLD: LazyLock<Corpus> = LazyLock::new(fixtures::world_2019);

fn world_entities() -> Vec<Entity> {
    vec![
        Entity::country("CN"),
        Entity::country("US"),
        Entity::country("EU27"),
        fixtures::world_bloc_map().entity("EUUK").unwrap(),
    ]
}

#[test]
fn world_corpus_scale_and_filters() {
    let corpus = &*WORLD;
    assert_eq!(corpus.len(), fixtures::WORLD_N as usize);

    let usa = filter(
        corpus,
        &SubsetFilter::countries(["US".to_string()]).and(SubsetFilter::years([2019])),
    );
    assert_eq!(usa.n(), fixtures::USA.n as usize);

    let china = filter(corpus, &SubsetFilter::countries(["CN".to_string()]));
    assert_eq!(china.n(), fixtures::CHINA.n as usize);

    let eu_uk = filter(
        corpus,
        &SubsetFilter::countries(["EU27".to_string(), "UK".to_string()]),
    );
    assert_eq!(eu_uk.n(), fixtures::EU_PLUS_UK.n as usize);

    let report = validate_corpus(corpus);
    assert_eq!(report.doctype_other, 0);
    assert!(report.empty_countries > 0); // rest-of-world block has no bylines
}

#[test]
fn world_threshold_and_memberships() {
    let corpus = &*WORLD;
    let view = corpus.view();
    let t = top_class_threshold(&view, KPercent::ONE).unwrap();
    assert_eq!(t.nominal_rank, fixtures::WORLD_TOP as usize);
    assert_eq!(t.citation_cutoff, fixtures::WORLD_CUTOFF);
    assert_eq!(t.actual_size, fixtures::WORLD_TOP as usize);
    assert!(!t.is_tie_inflated());

    let class = top_class(&view, &t);
    for entity in world_entities() {
        let counts = match entity.label.as_str() {
            "CN" => fixtures::CHINA,
            "US" => fixtures::USA,
            "EU27" => fixtures::EU27,
            _ => fixtures::EU_PLUS_UK,
        };
        let observed = p_topk(&view, &class, &entity, CountingMethod::WholeNumber);
        assert_eq!(observed.as_f64(), counts.p_top as f64, "{}", entity.label);
    }
}

#[test]
fn world_indicator_rows_reproduce_reference_pp() {
    let corpus = &*WORLD;
    let view = corpus.view();
    let k = KPercent::ONE;
    let t = top_class_threshold(&view, k).unwrap();
    let class = top_class(&view, &t);
    let ranks = percentile_ranks(&view, PercentileScheme::StrictBelow).unwrap();
    let reference_i3 = i3(&ranks, &I3Classes::Hundred);

    for entity in world_entities() {
        let counts = match entity.label.as_str() {
            "CN" => fixtures::CHINA,
            "US" => fixtures::USA,
            "EU27" => fixtures::EU27,
            _ => fixtures::EU_PLUS_UK,
        };
        let row = entity_report(
            &view,
            &class,
            &ranks,
            reference_i3,
            &entity,
            k,
            CountingMethod::WholeNumber,
            None,
        );
        assert_eq!(row.n, counts.n as f64);
        assert_eq!(row.p_topk, counts.p_top as f64);
        assert_eq!(
            format!("{:.2}", row.pp_topk),
            counts.pp_2dp,
            "{}",
            entity.label
        );
    }

    let world_row = reference_report(&view, &class, reference_i3, k, None);
    assert_eq!(world_row.n, fixtures::WORLD_N as f64);
    assert_eq!(world_row.p_topk, fixtures::WORLD_TOP as f64);
    assert_eq!(format!("{:.2}", world_row.pp_topk), "1.00");
}

#[test]
fn world_corpus_roundtrips_through_disk() {
    let corpus = &*WORLD;
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("world.csv");
    write_corpus(corpus, &path, CorpusFormat::Delimited).unwrap();
    let reloaded = load_corpus(&path, CorpusFormat::Delimited).unwrap();
    assert_eq!(reloaded.len(), fixtures::WORLD_N as usize);
    assert_eq!(reloaded.records()[0], corpus.records()[0]);
    assert_eq!(
        reloaded.records()[corpus.len() - 1],
        corpus.records()[corpus.len() - 1]
    );
    let view = reloaded.view();
    let t = top_class_threshold(&view, KPercent::ONE).unwrap();
    assert_eq!(t.citation_cutoff, fixtures::WORLD_CUTOFF);
}

#[test]
fn category_comparison_reproduces_reference_rows() {
    let corpus = fixtures::categories_2019();
    let cn = Entity::country("CN");
    let us = Entity::country("US");
    let categories: Vec<String> = fixtures::CATEGORY_ROWS
        .iter()
        .map(|r| r.category.to_string())
        .collect();
    let table = category_comparison(
        &corpus,
        &categories,
        (&cn, &us),
        KPercent::ONE,
        CountingMethod::WholeNumber,
        &SubsetFilter::All,
    )
    .unwrap();

    assert_eq!(table.rows.len(), 5); // four categories plus world
    for (row, reference) in table.rows.iter().zip(fixtures::CATEGORY_ROWS) {
        assert_eq!(row.category, reference.category);
        assert_eq!(row.n_total, reference.n_total as usize);
        assert_eq!(row.n_entity1, reference.n_cn as f64);
        assert_eq!(row.n_entity2, reference.n_us as f64);
        assert_eq!(row.p_top_1, reference.p_cn as f64);
        assert_eq!(row.p_top_2, reference.p_us as f64);
        assert_eq!(format!("{:.2}", row.pp_1), reference.pp_cn_2dp);
        assert_eq!(format!("{:.2}", row.pp_2), reference.pp_us_2dp);
        let z = row.z.expect("z computable on reference rows");
        assert!(
            (z - reference.z_reference).abs() <= reference.z_tolerance,
            "{}: z={z} reference={}",
            reference.category,
            reference.z_reference
        );
        assert_eq!(row.significant_05, reference.significant_05);
    }
    let world = table.rows.last().unwrap();
    assert_eq!(world.category, "world");
    assert_eq!(world.n_total, corpus.len());
}

#[test]
fn single_year_trend_reproduces_reference_pp() {
    let mut corpora = std::collections::BTreeMap::new();
    corpora.insert(2019, fixtures::world_2019());
    for (entity, pp_2dp) in [
        (Entity::country("CN"), "1.67"),
        (Entity::country("US"), "1.62"),
    ] {
        let series = topcite_core::decompose::national_trend(
            &corpora,
            &entity,
            KPercent::ONE,
            CountingMethod::WholeNumber,
            &SubsetFilter::All,
        )
        .unwrap();
        assert_eq!(series.len(), 1);
        assert_eq!(series[0].year, 2019);
        assert_eq!(format!("{:.2}", series[0].pp), pp_2dp, "{}", entity.label);
    }
}

#[test]
fn comparison_world_row_equals_unfiltered_pipeline() {
    let corpus = fixtures::categories_2019();
    let cn = Entity::country("CN");
    let us = Entity::country("US");
    let table = category_comparison(
        &corpus,
        &["VIR".to_string()],
        (&cn, &us),
        KPercent::ONE,
        CountingMethod::WholeNumber,
        &SubsetFilter::All,
    )
    .unwrap();
    let world = table.rows.last().unwrap();

    // recompute the unfiltered pipeline directly
    let view = corpus.view();
    let t = top_class_threshold(&view, KPercent::ONE).unwrap();
    let class = top_class(&view, &t);
    assert_eq!(world.n_total, view.n());
    for (entity, n_col, p_col, pp_col) in [
        (&cn, world.n_entity1, world.p_top_1, world.pp_1),
        (&us, world.n_entity2, world.p_top_2, world.pp_2),
    ] {
        let n = entity_n(&view, entity, CountingMethod::WholeNumber).as_f64();
        let p = p_topk(&view, &class, entity, CountingMethod::WholeNumber).as_f64();
        assert_eq!(n_col, n);
        assert_eq!(p_col, p);
        assert_eq!(pp_col, p / (n / 100.0));
    }
}

#[test]
fn virology_china_subset_size() {
    let corpus = fixtures::categories_2019();
    let view = filter(
        &corpus,
        &SubsetFilter::categories(["VIR".to_string()])
            .and(SubsetFilter::countries(["CN".to_string()])),
    );
    assert_eq!(view.n(), 1_387);
    let entity_view = entity_n(
        &filter(&corpus, &SubsetFilter::categories(["VIR".to_string()])),
        &Entity::country("CN"),
        CountingMethod::WholeNumber,
    );
    assert_eq!(entity_view.as_f64(), 1_387.0);
}

#[test]
fn window_series_cutoffs_and_correlation() {
    let corpus = fixtures::window_series();
    let years: Vec<i32> = fixtures::WINDOW_CUTOFFS.iter().map(|&(y, _)| y).collect();
    let out = window_thresholds(&corpus, &years, KPercent::ONE).unwrap();
    let mut windows = Vec::new();
    let mut cutoffs = Vec::new();
    for (w, &(year, cutoff)) in out.iter().zip(fixtures::WINDOW_CUTOFFS.iter()) {
        assert_eq!(w.year, year);
        assert_eq!(w.threshold.citation_cutoff, cutoff);
        assert_eq!(w.window_years, 2021 - year);
        windows.push(w.window_years as f64);
        cutoffs.push(w.threshold.citation_cutoff as f64);
    }
    let r = pearson(&windows, &cutoffs).unwrap();
    assert!(r > 0.99);
    assert!((r - 0.9988).abs() < 5e-4);
}
