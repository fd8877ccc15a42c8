//! Deterministic reference corpora with frozen indicator values.
//!
//! These builders reconstruct, record by record, scenarios whose headline
//! numbers are known in advance (entity totals, top-class memberships,
//! per-category counts, per-year cutoffs). The regression suites assert the
//! full pipeline against the frozen values; the builders also serve as demo
//! inputs for the CLI.

use crate::corpus::{BlocMap, Corpus, DocType, PublicationRecord};

/// Frozen totals of the world-scale 2019 scenario: records carrying the
/// entity's code, and how many of them sit in the world top-1% class.
#[derive(Debug, Clone, Copy)]
pub struct EntityCounts {
    pub label: &'static str,
    pub n: u64,
    pub p_top: u64,
    /// PP-top-1% at two decimals.
    pub pp_2dp: &'static str,
}

pub const WORLD_N: u64 = 2_041_287;
pub const WORLD_TOP: u64 = 20_413;
pub const WORLD_CUTOFF: u64 = 38;

pub const CHINA: EntityCounts = EntityCounts {
    label: "CN",
    n: 504_695,
    p_top: 8_422,
    pp_2dp: "1.67",
};
pub const USA: EntityCounts = EntityCounts {
    label: "US",
    n: 492_448,
    p_top: 7_959,
    pp_2dp: "1.62",
};
pub const EU27: EntityCounts = EntityCounts {
    label: "EU27",
    n: 536_932,
    p_top: 6_074,
    pp_2dp: "1.13",
};
pub const EU_PLUS_UK: EntityCounts = EntityCounts {
    label: "EUUK",
    n: 639_217,
    p_top: 7_337,
    pp_2dp: "1.15",
};

/// Builds the world-scale 2019 corpus: 2,041,287 records whose entity totals
/// and top-class memberships equal the frozen counts above. The top class is
/// exactly 20,413 records (no tie inflation); the record at descending rank
/// 20,413 has 38 citations.
///
/// Codes: CN, US, EU27, UK; internationally co-authored top records carry
/// {CN, US}; rest-of-world records have empty bylines.
pub fn world_2019() -> Corpus {
    // top-class composition: entity memberships overlap through CN+US
    // co-authorships, singles make up the difference
    let cn_us_top =
        (CHINA.p_top + USA.p_top + EU27.p_top + (EU_PLUS_UK.p_top - EU27.p_top)) - WORLD_TOP; // 3,305
    let cn_top = CHINA.p_top - cn_us_top;
    let us_top = USA.p_top - cn_us_top;
    let eu_top = EU27.p_top;
    let uk_top = EU_PLUS_UK.p_top - EU27.p_top;

    let uk_n = EU_PLUS_UK.n - EU27.n;
    let cn_rest = CHINA.n - CHINA.p_top;
    let us_rest = USA.n - USA.p_top;
    let eu_rest = EU27.n - EU27.p_top;
    let uk_rest = uk_n - uk_top;
    let row_rest = WORLD_N - WORLD_TOP - cn_rest - us_rest - eu_rest - uk_rest;

    let mut records = Vec::with_capacity(WORLD_N as usize);
    let mut top_emitted = 0u64;
    let mut serial = 0u64;

    let mut emit_top = |records: &mut Vec<PublicationRecord>, countries: &[&str], count: u64| {
        for _ in 0..count {
            top_emitted += 1;
            // the final top record sits exactly at the cutoff
            let citations = if top_emitted == WORLD_TOP {
                WORLD_CUTOFF
            } else {
                WORLD_CUTOFF + 1
            };
            records.push(PublicationRecord::new(
                format!("w{serial:07}"),
                2019,
                DocType::Article,
                citations,
                countries.iter().map(|s| s.to_string()).collect::<Vec<_>>(),
                Vec::new(),
            ));
            serial += 1;
        }
    };
    emit_top(&mut records, &["CN", "US"], cn_us_top);
    emit_top(&mut records, &["CN"], cn_top);
    emit_top(&mut records, &["US"], us_top);
    emit_top(&mut records, &["EU27"], eu_top);
    emit_top(&mut records, &["UK"], uk_top);

    let mut emit_rest = |records: &mut Vec<PublicationRecord>, countries: &[&str], count: u64| {
        for i in 0..count {
            let doctype = match i % 3 {
                0 => DocType::Article,
                1 => DocType::Review,
                _ => DocType::Letter,
            };
            records.push(PublicationRecord::new(
                format!("w{serial:07}"),
                2019,
                doctype,
                i % WORLD_CUTOFF, // anything strictly below the cutoff
                countries.iter().map(|s| s.to_string()).collect::<Vec<_>>(),
                Vec::new(),
            ));
            serial += 1;
        }
    };
    emit_rest(&mut records, &["CN"], cn_rest);
    emit_rest(&mut records, &["US"], us_rest);
    emit_rest(&mut records, &["EU27"], eu_rest);
    emit_rest(&mut records, &["UK"], uk_rest);
    emit_rest(&mut records, &[], row_rest);

    Corpus::from_records(records, None, "world-2019").expect("fixture ids are unique")
}

/// Bloc mapping matching [`world_2019`]: the wide grouping EUUK contains the
/// EU27 and UK codes.
pub fn world_bloc_map() -> BlocMap {
    BlocMap::new([
        ("EU27".to_string(), "EUUK".to_string()),
        ("UK".to_string(), "EUUK".to_string()),
    ])
}

/// Frozen per-category comparison counts between CN and US for the
/// category-scale 2019 scenario, with the recomputed pooled z.
#[derive(Debug, Clone, Copy)]
pub struct CategoryCounts {
    pub category: &'static str,
    pub n_total: u64,
    pub n_cn: u64,
    pub n_us: u64,
    pub p_cn: u64,
    pub p_us: u64,
    /// Reference z value the pooled test is expected to approximate.
    pub z_reference: f64,
    /// Tolerance on the z regression.
    pub z_tolerance: f64,
    pub significant_05: bool,
    pub pp_cn_2dp: &'static str,
    pub pp_us_2dp: &'static str,
}

pub const CATEGORY_ROWS: [CategoryCounts; 4] = [
    CategoryCounts {
        category: "VIR",
        n_total: 6_625,
        n_cn: 1_387,
        n_us: 2_480,
        p_cn: 13,
        p_us: 41,
        z_reference: -1.805,
        z_tolerance: 0.05,
        significant_05: false,
        pp_cn_2dp: "0.94",
        pp_us_2dp: "1.65",
    },
    CategoryCounts {
        category: "ENG_BM",
        n_total: 13_365,
        n_cn: 2_952,
        n_us: 3_923,
        p_cn: 54,
        p_us: 61,
        z_reference: 0.878,
        z_tolerance: 0.005,
        significant_05: false,
        pp_cn_2dp: "1.83",
        pp_us_2dp: "1.55",
    },
    CategoryCounts {
        category: "ENG_MU",
        n_total: 69_576,
        n_cn: 27_393,
        n_us: 8_440,
        p_cn: 416,
        p_us: 126,
        z_reference: 0.197,
        z_tolerance: 0.05,
        significant_05: false,
        pp_cn_2dp: "1.52",
        pp_us_2dp: "1.49",
    },
    CategoryCounts {
        category: "BUS_FIN",
        n_total: 6_048,
        n_cn: 961,
        n_us: 2_157,
        p_cn: 15,
        p_us: 16,
        z_reference: 2.133,
        z_tolerance: 0.05,
        significant_05: true,
        pp_cn_2dp: "1.56",
        pp_us_2dp: "0.74",
    },
];

/// Builds the category-scale 2019 corpus: one block per category whose CN/US
/// totals and top-class memberships equal [`CATEGORY_ROWS`]. Top-class
/// records have 50 citations, the rest 0; fillers carry the XX code.
pub fn categories_2019() -> Corpus {
    let mut records = Vec::new();
    for row in CATEGORY_ROWS {
        let top_n = row.n_total.div_ceil(100); // k = 1%
        assert!(row.p_cn + row.p_us <= top_n);
        let mut serial = 0u64;
        let mut emit =
            |records: &mut Vec<PublicationRecord>, country: &str, citations: u64, count: u64| {
                for _ in 0..count {
                    records.push(PublicationRecord::new(
                        format!("{}-{serial:05}", row.category),
                        2019,
                        DocType::Article,
                        citations,
                        vec![country.to_string()],
                        vec![row.category.to_string()],
                    ));
                    serial += 1;
                }
            };
        emit(&mut records, "CN", 50, row.p_cn);
        emit(&mut records, "US", 50, row.p_us);
        emit(&mut records, "XX", 50, top_n - row.p_cn - row.p_us);
        emit(&mut records, "CN", 0, row.n_cn - row.p_cn);
        emit(&mut records, "US", 0, row.n_us - row.p_us);
        emit(
            &mut records,
            "XX",
            0,
            row.n_total - row.n_cn - row.n_us - (top_n - row.p_cn - row.p_us),
        );
    }
    Corpus::from_records(records, None, "categories-2019").expect("fixture ids are unique")
}

/// Per-year top-1% citation cutoffs of the window-series scenario, oldest
/// first. Retrieval defaults to 2021, so window lengths run 6 down to 2.
pub const WINDOW_CUTOFFS: [(i32, u64); 5] =
    [(2015, 140), (2016, 115), (2017, 93), (2018, 67), (2019, 38)];

/// Builds a five-year corpus whose per-year top-1% cutoffs equal
/// [`WINDOW_CUTOFFS`]: each year holds 100 records with a single maximum at
/// the target cutoff.
pub fn window_series() -> Corpus {
    let mut records = Vec::new();
    for (year, cutoff) in WINDOW_CUTOFFS {
        for j in 0..100u64 {
            let citations = if j == 0 { cutoff } else { j % cutoff };
            records.push(PublicationRecord::new(
                format!("y{year}-{j:03}"),
                year,
                DocType::Article,
                citations,
                Vec::new(),
                Vec::new(),
            ));
        }
    }
    Corpus::from_records(records, None, "window-series").expect("fixture ids are unique")
}
