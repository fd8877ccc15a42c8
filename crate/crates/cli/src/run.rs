//! Dispatches a parsed plan onto the library pipelines and renders output
//! tables. Data problems exit 1, usage problems exit 2.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use thiserror::Error;

use topcite_core::corpus::{
    filter, load_corpus_with, validate_corpus, write_corpus, BlocMap, Corpus, CorpusFormat,
    CorpusView, DocType, Entity, SubsetFilter,
};
use topcite_core::decompose::{category_comparison, collaboration_classes, national_trend};
use topcite_core::indicators::{
    entity_pp, entity_report, esi_refined_ranks, i3, per_category_ranks, rc_scores,
    record_level_rc, reference_report, refined_pp_topk, refined_top_class, single_broad_category,
    CountingMethod, I3Classes, RcStratification,
};
use topcite_core::percentile::{
    pearson, percentile_ranks, top_class, top_class_threshold, window_thresholds, Threshold,
};
use topcite_core::synth::{divergence_report, generate, SynthSpec};

use crate::plan::{
    CollabArgs, Command, CommandPlan, CompareArgs, IndicatorsArgs, IngestArgs, InputOpts,
    RefineArgs, SimulateArgs, ThresholdArgs, TrendArgs,
};
use crate::table::{render_tables, Cell, OutputTable};

/// CLI failures carrying their process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Data(_) => 1,
        }
    }
}

impl From<topcite_core::Error> for CliError {
    fn from(e: topcite_core::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<topcite_core::corpus::LoadError> for CliError {
    fn from(e: topcite_core::corpus::LoadError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

/// Runs the plan, writing tables to `out` unless the plan routes them to a
/// file.
pub fn execute(plan: &CommandPlan, out: &mut dyn Write) -> Result<(), CliError> {
    match &plan.command {
        Command::Ingest(args) => run_ingest(args, out),
        Command::Threshold(args) => run_threshold(args, out),
        Command::Indicators(args) => run_indicators(args, out),
        Command::Compare(args) => run_compare(args, out),
        Command::Trend(args) => run_trend(args, out),
        Command::Collab(args) => run_collab(args, out),
        Command::Refine(args) => run_refine(args, out),
        Command::Simulate(args) => run_simulate(args, out),
    }
}

fn corpus_format_for(path: &Path) -> CorpusFormat {
    match path.extension().and_then(|e| e.to_str()) {
        Some("jsonl") | Some("ndjson") => CorpusFormat::RecordPerLine,
        _ => CorpusFormat::Delimited,
    }
}

fn parse_doctypes(raw: &[String]) -> Result<SubsetFilter, CliError> {
    let mut types = Vec::with_capacity(raw.len());
    for s in raw {
        let dt: DocType = s.parse().map_err(|e: String| CliError::Usage(e))?;
        types.push(dt);
    }
    Ok(SubsetFilter::doctypes(types))
}

fn load_input(opts: &InputOpts) -> Result<(Corpus, SubsetFilter), CliError> {
    let retrieval = match &opts.retrieval_date {
        Some(raw) => Some(
            raw.parse::<NaiveDate>()
                .map_err(|_| CliError::Usage(format!("invalid retrieval date {raw:?}")))?,
        ),
        None => None,
    };
    let corpus = load_corpus_with(&opts.input, corpus_format_for(&opts.input), retrieval, None)?;
    let doctype_filter = parse_doctypes(&opts.doctypes)?;
    Ok((corpus, doctype_filter))
}

fn load_bloc_map(path: Option<&PathBuf>) -> Result<Option<BlocMap>, CliError> {
    Ok(match path {
        Some(p) => Some(BlocMap::load(p)?),
        None => None,
    })
}

/// A label resolves to a bloc entity when the mapping file defines it,
/// otherwise to a single country code.
fn resolve_entities(labels: &[String], blocs: Option<&BlocMap>) -> Vec<Entity> {
    labels
        .iter()
        .map(|label| {
            blocs
                .and_then(|m| m.entity(label))
                .unwrap_or_else(|| Entity::country(label.clone()))
        })
        .collect()
}

fn emit(rendered: String, output: Option<&PathBuf>, out: &mut dyn Write) -> Result<(), CliError> {
    match output {
        Some(path) => fs::write(path, rendered)?,
        None => out.write_all(rendered.as_bytes())?,
    }
    Ok(())
}

fn nonempty_view<'a>(corpus: &'a Corpus, base: &SubsetFilter) -> Result<CorpusView<'a>, CliError> {
    let view = filter(corpus, base);
    if view.is_empty() {
        return Err(CliError::Data("empty subset".to_string()));
    }
    Ok(view)
}

fn threshold_footnote(t: &Threshold) -> String {
    let mut note = format!(
        "k={}%: citation cutoff {}, nominal rank {}, class size {}",
        t.k, t.citation_cutoff, t.nominal_rank, t.actual_size
    );
    if t.is_tie_inflated() {
        note.push_str(" (tie-inflated)");
    }
    note
}

fn run_ingest(args: &IngestArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let (corpus, _) = load_input(&args.input)?;
    let report = validate_corpus(&corpus);
    let mut table = OutputTable::new("validation", &["metric", "value"]);
    table.push_row(vec![
        Cell::text("records"),
        Cell::Int(report.records as i64),
    ]);
    table.push_row(vec![
        Cell::text("empty_countries"),
        Cell::Int(report.empty_countries as i64),
    ]);
    table.push_row(vec![
        Cell::text("empty_categories"),
        Cell::Int(report.empty_categories as i64),
    ]);
    table.push_row(vec![
        Cell::text("doctype_other"),
        Cell::Int(report.doctype_other as i64),
    ]);
    for note in &report.notes {
        table.push_footnote(note.clone());
    }
    if let Some(path) = &args.normalized {
        write_corpus(&corpus, path, corpus_format_for(path))?;
        table.push_footnote(format!("normalized corpus written to {}", path.display()));
    }
    emit(
        render_tables(&[table], args.output.format),
        args.output.output.as_ref(),
        out,
    )
}

fn run_threshold(args: &ThresholdArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let (corpus, doctype_filter) = load_input(&args.input)?;
    // windows are computed per publication year over the analysis set
    let analysis = Corpus::from_records(
        filter(&corpus, &doctype_filter)
            .records()
            .cloned()
            .collect(),
        Some(corpus.retrieval_date()),
        corpus.label().to_string(),
    )
    .map_err(topcite_core::Error::from)?;
    if analysis.is_empty() {
        return Err(CliError::Data("empty subset".to_string()));
    }
    let years: Vec<i32> = match &args.years {
        Some(years) => years.clone(),
        None => analysis.years().into_iter().collect(),
    };
    let windows = window_thresholds(&analysis, &years, args.k)?;

    let mut table = OutputTable::new(
        "thresholds",
        &[
            "year",
            "window_years",
            "n",
            "nominal_rank",
            "citation_cutoff",
            "actual_size",
        ],
    );
    for w in &windows {
        table.push_row(vec![
            Cell::Int(w.year.into()),
            Cell::Int(w.window_years.into()),
            Cell::Int(w.threshold.reference_n as i64),
            Cell::Int(w.threshold.nominal_rank as i64),
            Cell::Int(w.threshold.citation_cutoff as i64),
            Cell::Int(w.threshold.actual_size as i64),
        ]);
    }
    if windows.len() >= 3 {
        let xs: Vec<f64> = windows.iter().map(|w| w.window_years as f64).collect();
        let ys: Vec<f64> = windows
            .iter()
            .map(|w| w.threshold.citation_cutoff as f64)
            .collect();
        if let Ok(r) = pearson(&xs, &ys) {
            table.push_footnote(format!("pearson(window_years, citation_cutoff) = {r:.4}"));
        }
    }
    emit(
        render_tables(&[table], args.output.format),
        args.output.output.as_ref(),
        out,
    )
}

fn run_indicators(args: &IndicatorsArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let (corpus, doctype_filter) = load_input(&args.input)?;
    let blocs = load_bloc_map(args.blocs.as_ref())?;
    let entities = resolve_entities(&args.entities, blocs.as_ref());
    let view = nonempty_view(&corpus, &doctype_filter)?;

    let threshold = top_class_threshold(&view, args.k)?;
    let class = top_class(&view, &threshold);
    let ranks = percentile_ranks(&view, args.scheme)?;
    let reference_i3 = i3(&ranks, &I3Classes::Hundred);
    let record_rc = if args.mncs {
        Some(record_level_rc(&rc_scores(
            &view,
            RcStratification::CategoryYear,
        )?))
    } else {
        None
    };

    let mut columns = vec!["entity", "n", "p_top", "expected", "pp", "i3", "pct_i3"];
    if args.mncs {
        columns.push("mncs");
    }
    let mut table = OutputTable::new("indicators", &columns);
    let mut push_report = |report: topcite_core::indicators::IndicatorReport| {
        let mut row = vec![
            Cell::text(report.label),
            Cell::count(report.n, 2),
            Cell::count(report.p_topk, 2),
            Cell::rounded(report.expected, 2),
            Cell::rounded(report.pp_topk, 2),
            Cell::count(report.i3, 2),
            Cell::rounded(report.pct_i3, 2),
        ];
        if args.mncs {
            row.push(match report.mncs {
                Some(v) => Cell::rounded(v, 2),
                None => Cell::Empty,
            });
        }
        table.push_row(row);
    };
    for entity in &entities {
        push_report(entity_report(
            &view,
            &class,
            &ranks,
            reference_i3,
            entity,
            args.k,
            args.counting,
            record_rc.as_ref(),
        ));
    }
    push_report(reference_report(
        &view,
        &class,
        reference_i3,
        args.k,
        record_rc.as_ref(),
    ));
    table.push_footnote(threshold_footnote(&threshold));
    if args.counting == CountingMethod::FractionalByCountry {
        table.push_footnote(
            "fractional counting: n and p_top are summed country shares".to_string(),
        );
    }
    emit(
        render_tables(&[table], args.output.format),
        args.output.output.as_ref(),
        out,
    )
}

fn run_compare(args: &CompareArgs, out: &mut dyn Write) -> Result<(), CliError> {
    if args.entities.len() != 2 {
        return Err(CliError::Usage(format!(
            "compare needs exactly two entities, got {}",
            args.entities.len()
        )));
    }
    let (corpus, doctype_filter) = load_input(&args.input)?;
    let blocs = load_bloc_map(args.blocs.as_ref())?;
    let entities = resolve_entities(&args.entities, blocs.as_ref());
    let comparison = category_comparison(
        &corpus,
        &args.categories,
        (&entities[0], &entities[1]),
        args.k,
        args.counting,
        &doctype_filter,
    )?;

    let (e1, e2) = (&comparison.entity1, &comparison.entity2);
    let columns = [
        "category".to_string(),
        "n_total".to_string(),
        format!("n_{e1}"),
        format!("n_{e2}"),
        format!("p_top_{e1}"),
        format!("p_top_{e2}"),
        format!("pp_{e1}"),
        format!("pp_{e2}"),
        "z".to_string(),
        "significant_05".to_string(),
    ];
    let column_refs: Vec<&str> = columns.iter().map(String::as_str).collect();
    let mut table = OutputTable::new("comparison", &column_refs);
    for row in &comparison.rows {
        table.push_row(vec![
            Cell::text(row.category.clone()),
            Cell::Int(row.n_total as i64),
            Cell::count(row.n_entity1, 2),
            Cell::count(row.n_entity2, 2),
            Cell::count(row.p_top_1, 2),
            Cell::count(row.p_top_2, 2),
            Cell::rounded(row.pp_1, 2),
            Cell::rounded(row.pp_2, 2),
            match row.z {
                Some(z) => Cell::rounded(z, 3),
                None => Cell::Empty,
            },
            Cell::Bool(row.significant_05),
        ]);
    }
    for note in &comparison.footnotes {
        table.push_footnote(note.clone());
    }
    emit(
        render_tables(&[table], args.output.format),
        args.output.output.as_ref(),
        out,
    )
}

fn run_trend(args: &TrendArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let doctype_filter = parse_doctypes(&args.doctypes)?;
    let mut corpora: BTreeMap<i32, Corpus> = BTreeMap::new();
    for spec in &args.input {
        let (year_raw, path) = spec.split_once('=').ok_or_else(|| {
            CliError::Usage(format!("trend inputs must be year=PATH, got {spec:?}"))
        })?;
        let year: i32 = year_raw
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("invalid year in {spec:?}")))?;
        if corpora.contains_key(&year) {
            return Err(CliError::Usage(format!("duplicate year {year}")));
        }
        let path = PathBuf::from(path);
        let corpus = load_corpus_with(&path, corpus_format_for(&path), None, None)?;
        corpora.insert(year, corpus);
    }
    let blocs = load_bloc_map(args.blocs.as_ref())?;
    let entities = resolve_entities(&args.entities, blocs.as_ref());

    let mut table = OutputTable::new("trend", &["year", "entity", "n", "p_top", "pp"]);
    let mut series = Vec::new();
    for entity in &entities {
        let points = national_trend(&corpora, entity, args.k, args.counting, &doctype_filter)?;
        series.push((entity.label.clone(), points));
    }
    let years: Vec<i32> = corpora.keys().copied().collect();
    for (row_index, year) in years.iter().enumerate() {
        for (label, points) in &series {
            let point = &points[row_index];
            table.push_row(vec![
                Cell::Int((*year).into()),
                Cell::text(label.clone()),
                Cell::count(point.n, 2),
                Cell::count(point.p_top, 2),
                Cell::rounded(point.pp, 2),
            ]);
        }
    }
    emit(
        render_tables(&[table], args.output.format),
        args.output.output.as_ref(),
        out,
    )
}

fn run_collab(args: &CollabArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let (corpus, doctype_filter) = load_input(&args.input)?;
    let blocs = BlocMap::load(&args.blocs)?;
    let poles = blocs.entities();
    if poles.is_empty() {
        return Err(CliError::Usage(
            "bloc mapping file defines no blocs".to_string(),
        ));
    }
    let view = nonempty_view(&corpus, &doctype_filter)?;
    let threshold = top_class_threshold(&view, args.k)?;
    let class = top_class(&view, &threshold);
    let classes = collaboration_classes(&view, &poles, &class, args.k)?;

    let mut table = OutputTable::new("collaboration", &["class", "n", "p_top", "pp"]);
    for c in &classes {
        table.push_row(vec![
            Cell::text(c.label.clone()),
            Cell::Int(c.n as i64),
            Cell::Int(c.p_top as i64),
            Cell::rounded(c.pp, 2),
        ]);
    }
    table.push_footnote(threshold_footnote(&threshold));
    emit(
        render_tables(&[table], args.output.format),
        args.output.output.as_ref(),
        out,
    )
}

fn load_broad_map(path: &Path) -> Result<BTreeMap<String, String>, CliError> {
    let mut rdr = csv::ReaderBuilder::new()
        .from_path(path)
        .map_err(|e| CliError::Data(e.to_string()))?;
    let headers = rdr
        .headers()
        .map_err(|e| CliError::Data(e.to_string()))?
        .clone();
    let cat_col = headers
        .iter()
        .position(|h| h.trim() == "category")
        .ok_or_else(|| CliError::Data("missing field: category".to_string()))?;
    let broad_col = headers
        .iter()
        .position(|h| h.trim() == "broad")
        .ok_or_else(|| CliError::Data("missing field: broad".to_string()))?;
    let mut map = BTreeMap::new();
    for row in rdr.records() {
        let row = row.map_err(|e| CliError::Data(e.to_string()))?;
        let cat = row.get(cat_col).unwrap_or_default().trim().to_string();
        let broad = row.get(broad_col).unwrap_or_default().trim().to_string();
        if !cat.is_empty() && !broad.is_empty() {
            map.insert(cat, broad);
        }
    }
    Ok(map)
}

fn run_refine(args: &RefineArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let (corpus, doctype_filter) = load_input(&args.input)?;
    let blocs = load_bloc_map(args.blocs.as_ref())?;
    let entities = resolve_entities(&args.entities, blocs.as_ref());
    let broad_map = match &args.broad_map {
        Some(path) => Some(load_broad_map(path)?),
        None => None,
    };
    let view = nonempty_view(&corpus, &doctype_filter)?;

    let threshold = top_class_threshold(&view, args.k)?;
    let class = top_class(&view, &threshold);
    let category_of =
        |r: &topcite_core::corpus::PublicationRecord| single_broad_category(r, broad_map.as_ref());
    let ranks = per_category_ranks(&view, args.scheme, category_of)?;
    let refined_scores = esi_refined_ranks(&ranks, &corpus, category_of)?;
    let refined = refined_top_class(&refined_scores, args.k)?;

    let mut table = OutputTable::new("refined", &["entity", "n", "pp_raw", "pp_refined"]);
    for entity in &entities {
        let n = topcite_core::indicators::entity_n(&view, entity, args.counting).as_f64();
        let pp_raw = entity_pp(&view, &class, entity, args.k, args.counting);
        let pp_refined = refined_pp_topk(&view, &refined_scores, entity, args.k, args.counting)?;
        table.push_row(vec![
            Cell::text(entity.label.clone()),
            Cell::count(n, 2),
            Cell::rounded(pp_raw, 2),
            Cell::rounded(pp_refined, 2),
        ]);
    }
    table.push_footnote(threshold_footnote(&threshold));
    table.push_footnote(format!(
        "refined class: {} records at score cutoff (nominal {})",
        refined.len(),
        refined.nominal_rank
    ));
    emit(
        render_tables(&[table], args.output.format),
        args.output.output.as_ref(),
        out,
    )
}

fn run_simulate(args: &SimulateArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let mut spec = SynthSpec::load(&args.spec)?;
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    let corpus = generate(&spec)?;
    if let Some(path) = &args.output {
        write_corpus(&corpus, path, corpus_format_for(path))?;
    }
    let report = divergence_report(&corpus, &spec, args.k)?;

    let mut fields = OutputTable::new(
        "fields",
        &[
            "category",
            "n",
            "raw_top",
            "refined_top",
            "raw_share_pct",
            "refined_share_pct",
            "composition_gap_pct",
        ],
    );
    for f in &report.fields {
        fields.push_row(vec![
            Cell::text(f.category.clone()),
            Cell::Int(f.n as i64),
            Cell::Int(f.raw_top as i64),
            Cell::Int(f.refined_top as i64),
            Cell::rounded(f.raw_share_pct, 2),
            Cell::rounded(f.refined_share_pct, 2),
            Cell::rounded(f.composition_gap_pct, 2),
        ]);
    }
    fields.push_footnote(format!(
        "raw class {} records (citation cutoff {}), refined class {} records",
        report.raw_class_size, report.raw_cutoff_citations, report.refined_class_size
    ));
    fields.push_footnote(format!(
        "selections identical: {}",
        report.selections_identical
    ));

    let mut countries = OutputTable::new("countries", &["country", "n", "pp_raw", "pp_refined"]);
    for c in &report.countries {
        countries.push_row(vec![
            Cell::text(c.code.clone()),
            Cell::count(c.n, 2),
            Cell::rounded(c.pp_raw, 2),
            Cell::rounded(c.pp_refined, 2),
        ]);
    }
    if let Some(path) = &args.output {
        countries.push_footnote(format!(
            "generated corpus ({} records) written to {}",
            corpus.len(),
            path.display()
        ));
    }
    emit(
        render_tables(&[fields, countries], args.format),
        args.report.as_ref(),
        out,
    )
}
