//! Argument parsing: every subcommand maps onto one analysis pipeline, with
//! defaults matching the headline configuration (k = 1, whole-number
//! counting, strict-below ranks, articles/reviews/letters).

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use topcite_core::indicators::CountingMethod;
use topcite_core::percentile::{KPercent, PercentileScheme};

/// Percentile-rank citation indicators over publication corpora.
#[derive(Debug, Parser)]
#[command(name = "topcite", version, about)]
pub struct CommandPlan {
    #[command(subcommand)]
    pub command: Command,
}

impl CommandPlan {
    /// Parses a full argv list (program name first); usage problems surface
    /// as a clap error, which the binary turns into exit code 2.
    pub fn parse_args<I, T>(argv: I) -> Result<Self, clap::Error>
    where
        I: IntoIterator<Item = T>,
        T: Into<std::ffi::OsString> + Clone,
    {
        Self::try_parse_from(argv)
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate a corpus file and optionally write it back normalized
    Ingest(IngestArgs),
    /// Per-year top-k% thresholds with citation-window lengths
    Threshold(ThresholdArgs),
    /// P-top-k%, PP-top-k%, I3 and %I3 per entity, with a world row
    Indicators(IndicatorsArgs),
    /// Two-entity comparison across subject categories
    Compare(CompareArgs),
    /// Per-year PP-top-k% series over one corpus per year
    Trend(TrendArgs),
    /// PP-top-k% of collaboration classes over configured blocs
    Collab(CollabArgs),
    /// Refined (per-category normalized) versus raw top-k% participation
    Refine(RefineArgs),
    /// Generate a synthetic corpus and report its normalization divergence
    Simulate(SimulateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Csv,
    Json,
}

fn parse_k(raw: &str) -> Result<KPercent, String> {
    raw.parse::<KPercent>().map_err(|e| e.to_string())
}

fn parse_scheme(raw: &str) -> Result<PercentileScheme, String> {
    raw.parse()
}

fn parse_counting(raw: &str) -> Result<CountingMethod, String> {
    raw.parse()
}

/// Options shared by every command that reads one corpus.
#[derive(Debug, Args)]
pub struct InputOpts {
    /// Corpus file; .jsonl/.ndjson selects the record-per-line format,
    /// anything else the delimited format
    #[arg(long)]
    pub input: PathBuf,

    /// Document types kept in the analysis set
    #[arg(long, value_delimiter = ',', default_values_t = [
        "article".to_string(), "review".to_string(), "letter".to_string()
    ])]
    pub doctypes: Vec<String>,

    /// Retrieval date (YYYY-MM-DD); defaults to January 1 two years after
    /// the latest publication year
    #[arg(long)]
    pub retrieval_date: Option<String>,
}

/// Options shared by every command that emits a table.
#[derive(Debug, Args)]
pub struct OutputOpts {
    /// Table format: csv rounds for presentation, json keeps full precision
    #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
    pub format: OutputFormat,

    /// Write the table here instead of standard output
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[command(flatten)]
    pub input: InputOpts,
    #[command(flatten)]
    pub output: OutputOpts,

    /// Write the normalized corpus to this path (format by extension)
    #[arg(long)]
    pub normalized: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ThresholdArgs {
    #[command(flatten)]
    pub input: InputOpts,
    #[command(flatten)]
    pub output: OutputOpts,

    /// Top share in percent, exact decimal
    #[arg(long, default_value = "1", value_parser = parse_k)]
    pub k: KPercent,

    /// Publication years to analyze; defaults to every year present
    #[arg(long, value_delimiter = ',')]
    pub years: Option<Vec<i32>>,
}

#[derive(Debug, Args)]
pub struct IndicatorsArgs {
    #[command(flatten)]
    pub input: InputOpts,
    #[command(flatten)]
    pub output: OutputOpts,

    /// Country codes or bloc labels to report on
    #[arg(long, value_delimiter = ',', required = true)]
    pub entities: Vec<String>,

    /// Bloc mapping file (country_code,bloc_code) defining bloc entities
    #[arg(long)]
    pub blocs: Option<PathBuf>,

    #[arg(long, default_value = "1", value_parser = parse_k)]
    pub k: KPercent,

    /// whole or fractional country credit
    #[arg(long, default_value = "whole", value_parser = parse_counting)]
    pub counting: CountingMethod,

    /// Percentile tie rule for I3 ranks
    #[arg(long, default_value = "strict-below", value_parser = parse_scheme)]
    pub scheme: PercentileScheme,

    /// Add an MNCS column (category+year stratification)
    #[arg(long)]
    pub mncs: bool,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub input: InputOpts,
    #[command(flatten)]
    pub output: OutputOpts,

    /// Subject categories, one comparison row each
    #[arg(long, value_delimiter = ',', required = true)]
    pub categories: Vec<String>,

    /// Exactly two country codes or bloc labels
    #[arg(long, value_delimiter = ',', required = true)]
    pub entities: Vec<String>,

    #[arg(long)]
    pub blocs: Option<PathBuf>,

    #[arg(long, default_value = "1", value_parser = parse_k)]
    pub k: KPercent,

    #[arg(long, default_value = "whole", value_parser = parse_counting)]
    pub counting: CountingMethod,
}

#[derive(Debug, Args)]
pub struct TrendArgs {
    /// Year-tagged corpus files, repeatable: --input 2019=path/to/2019.csv
    #[arg(long, required = true)]
    pub input: Vec<String>,

    #[arg(long, value_delimiter = ',', default_values_t = [
        "article".to_string(), "review".to_string(), "letter".to_string()
    ])]
    pub doctypes: Vec<String>,

    #[command(flatten)]
    pub output: OutputOpts,

    #[arg(long, value_delimiter = ',', required = true)]
    pub entities: Vec<String>,

    #[arg(long)]
    pub blocs: Option<PathBuf>,

    #[arg(long, default_value = "1", value_parser = parse_k)]
    pub k: KPercent,

    #[arg(long, default_value = "whole", value_parser = parse_counting)]
    pub counting: CountingMethod,
}

#[derive(Debug, Args)]
pub struct CollabArgs {
    #[command(flatten)]
    pub input: InputOpts,
    #[command(flatten)]
    pub output: OutputOpts,

    /// Bloc mapping file; every bloc in it becomes a collaboration pole
    #[arg(long, required = true)]
    pub blocs: PathBuf,

    #[arg(long, default_value = "1", value_parser = parse_k)]
    pub k: KPercent,
}

#[derive(Debug, Args)]
pub struct RefineArgs {
    #[command(flatten)]
    pub input: InputOpts,
    #[command(flatten)]
    pub output: OutputOpts,

    #[arg(long, value_delimiter = ',', required = true)]
    pub entities: Vec<String>,

    #[arg(long)]
    pub blocs: Option<PathBuf>,

    /// Category-to-broad-category mapping file (category,broad); defaults
    /// to each record's own single category
    #[arg(long)]
    pub broad_map: Option<PathBuf>,

    #[arg(long, default_value = "1", value_parser = parse_k)]
    pub k: KPercent,

    #[arg(long, default_value = "whole", value_parser = parse_counting)]
    pub counting: CountingMethod,

    #[arg(long, default_value = "strict-below", value_parser = parse_scheme)]
    pub scheme: PercentileScheme,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Generation spec (TOML)
    #[arg(long)]
    pub spec: PathBuf,

    /// Overrides the seed in the spec file
    #[arg(long)]
    pub seed: Option<u64>,

    /// Write the generated corpus here (format by extension); without it
    /// only the divergence report is emitted
    #[arg(long)]
    pub output: Option<PathBuf>,

    #[arg(long, default_value = "1", value_parser = parse_k)]
    pub k: KPercent,

    #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
    pub format: OutputFormat,

    /// Write the divergence report here instead of standard output
    #[arg(long)]
    pub report: Option<PathBuf>,
}
