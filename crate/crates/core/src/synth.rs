//! Seeded synthetic corpus generation: right-skewed, field-heterogeneous,
//! collaboration-aware citation data for property tests and for
//! demonstrating normalization bias at desk scale.
//!
//! Generation is a pure function of the spec and its seed. Records are
//! produced in fixed-size blocks, each driven by its own RNG stream derived
//! from the seed and the block index, so output is byte-identical for any
//! worker count.

use std::collections::BTreeMap;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, DocType, Entity, PublicationRecord};
use crate::indicators::{
    entity_pp, esi_refined_ranks, per_category_ranks, refined_pp_topk, refined_top_class,
    CountingMethod,
};
use crate::percentile::{top_class, top_class_threshold, KPercent, PercentileScheme};
use crate::{Error, Result};

const BLOCK_SIZE: usize = 1 << 16;

/// One synthetic field: its size and discretized-lognormal citation law.
#[derive(Debug, Clone, Deserialize, Serialize)]
pub struct FieldProfile {
    pub category: String,
    pub records: usize,
    pub mu: f64,
    pub sigma: f64,
    /// Probability that a record is a hard zero regardless of the law.
    #[serde(default)]
    pub zero_inflation: f64,
}

/// One synthetic country: its share of each field's output and an additive
/// shift on the field's mu.
#[derive(Debug, Clone, Deserialize, Serialize)]
pub struct CountryProfile {
    pub code: String,
    #[serde(default)]
    pub quality_shift: f64,
    /// Field category -> share of that field's records; per field the
    /// configured shares must sum to at most 1, the remainder going to the
    /// rest-of-world code.
    #[serde(default)]
    pub shares: BTreeMap<String, f64>,
}

/// International co-authorship model: a record is bilateral with the given
/// probability (trilateral with the second), and collaborative records get
/// an additive mu boost per extra country.
#[derive(Debug, Clone, Default, Deserialize, Serialize)]
pub struct Collaboration {
    #[serde(default)]
    pub probability: f64,
    #[serde(default)]
    pub boost: f64,
    #[serde(default)]
    pub tripartite_probability: f64,
}

/// Complete generation spec; readable from a TOML key-value file.
#[derive(Debug, Clone, Deserialize, Serialize)]
pub struct SynthSpec {
    #[serde(default = "default_label")]
    pub label: String,
    pub seed: u64,
    pub years: Vec<i32>,
    #[serde(rename = "field")]
    pub fields: Vec<FieldProfile>,
    #[serde(rename = "country", default)]
    pub countries: Vec<CountryProfile>,
    #[serde(default)]
    pub collaboration: Collaboration,
    #[serde(default = "default_rest_code")]
    pub rest_code: String,
}

fn default_label() -> String {
    "synthetic".to_string()
}

fn default_rest_code() -> String {
    "ROW".to_string()
}

impl SynthSpec {
    pub fn from_toml_str(raw: &str) -> Result<Self> {
        let spec: SynthSpec =
            toml::from_str(raw).map_err(|e| Error::InvalidSynthSpec(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let raw = std::fs::read_to_string(path.as_ref())
            .map_err(|e| Error::InvalidSynthSpec(e.to_string()))?;
        Self::from_toml_str(&raw)
    }

    pub fn validate(&self) -> Result<()> {
        let invalid = |msg: String| Err(Error::InvalidSynthSpec(msg));
        if self.years.is_empty() {
            return invalid("years must be nonempty".to_string());
        }
        if self.fields.is_empty() {
            return invalid("at least one field is required".to_string());
        }
        let mut categories = std::collections::HashSet::new();
        for f in &self.fields {
            if !categories.insert(&f.category) {
                return invalid(format!("duplicate field category {:?}", f.category));
            }
            if f.records == 0 {
                return invalid(format!("field {:?} must have records >= 1", f.category));
            }
            if f.sigma <= 0.0 || !f.sigma.is_finite() {
                return invalid(format!("field {:?} needs sigma > 0", f.category));
            }
            if !(0.0..1.0).contains(&f.zero_inflation) {
                return invalid(format!(
                    "field {:?} zero_inflation must lie in [0, 1)",
                    f.category
                ));
            }
        }
        let mut codes = std::collections::HashSet::new();
        for c in &self.countries {
            if c.code == self.rest_code {
                return invalid(format!(
                    "country code {:?} collides with the rest-of-world code",
                    c.code
                ));
            }
            if !codes.insert(&c.code) {
                return invalid(format!("duplicate country code {:?}", c.code));
            }
            for (cat, share) in &c.shares {
                if !categories.contains(cat) {
                    return invalid(format!(
                        "country {:?} declares a share for unknown field {cat:?}",
                        c.code
                    ));
                }
                if !(0.0..=1.0).contains(share) {
                    return invalid(format!(
                        "country {:?} share for {cat:?} must lie in [0, 1]",
                        c.code
                    ));
                }
            }
        }
        for f in &self.fields {
            let total: f64 = self
                .countries
                .iter()
                .filter_map(|c| c.shares.get(&f.category))
                .sum();
            if total > 1.0 + 1e-12 {
                return invalid(format!(
                    "shares for field {:?} sum to {total}, above 1",
                    f.category
                ));
            }
        }
        let collab = &self.collaboration;
        for p in [collab.probability, collab.tripartite_probability] {
            if !(0.0..=1.0).contains(&p) {
                return invalid(format!("collaboration probability {p} out of [0, 1]"));
            }
        }
        if collab.probability + collab.tripartite_probability > 1.0 + 1e-12 {
            return invalid("collaboration probabilities sum above 1".to_string());
        }
        Ok(())
    }

    pub fn total_records(&self) -> usize {
        self.fields.iter().map(|f| f.records).sum()
    }
}

struct FieldPlan<'a> {
    field: &'a FieldProfile,
    /// (country index, share) pairs in spec order, positive shares only.
    weights: Vec<(usize, f64)>,
    rest_share: f64,
}

struct Block {
    field_index: usize,
    offset_in_field: usize,
    len: usize,
    stream: u64,
}

/// Generates a corpus from the spec: one record per planned slot, citations
/// drawn from the record's field law shifted by country quality and
/// collaboration terms. Deterministic in (spec, seed).
pub fn generate(spec: &SynthSpec) -> Result<Corpus> {
    spec.validate()?;
    let plans: Vec<FieldPlan> = spec
        .fields
        .iter()
        .map(|field| {
            let weights: Vec<(usize, f64)> = spec
                .countries
                .iter()
                .enumerate()
                .filter_map(|(i, c)| {
                    let share = c.shares.get(&field.category).copied().unwrap_or(0.0);
                    (share > 0.0).then_some((i, share))
                })
                .collect();
            let rest_share = (1.0 - weights.iter().map(|&(_, w)| w).sum::<f64>()).max(0.0);
            FieldPlan {
                field,
                weights,
                rest_share,
            }
        })
        .collect();

    let mut blocks = Vec::new();
    let mut stream = 0u64;
    for (field_index, plan) in plans.iter().enumerate() {
        let mut offset = 0usize;
        while offset < plan.field.records {
            let len = BLOCK_SIZE.min(plan.field.records - offset);
            blocks.push(Block {
                field_index,
                offset_in_field: offset,
                len,
                stream,
            });
            offset += len;
            stream += 1;
        }
    }

    let generated: Vec<Vec<PublicationRecord>> = blocks
        .par_iter()
        .map(|block| generate_block(spec, &plans[block.field_index], block))
        .collect();

    let mut records = Vec::with_capacity(spec.total_records());
    for chunk in generated {
        records.extend(chunk);
    }
    Ok(Corpus::from_records(records, None, spec.label.clone()).expect("generated ids are unique"))
}

fn generate_block(spec: &SynthSpec, plan: &FieldPlan, block: &Block) -> Vec<PublicationRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(block.stream + 1);
    let field = plan.field;
    let collab = &spec.collaboration;

    let mut out = Vec::with_capacity(block.len);
    for i in 0..block.len {
        let serial = block.offset_in_field + i;
        let id = format!("{}-{serial:07}", field.category);
        let year = spec.years[rng.random_range(0..spec.years.len())];

        let class_draw: f64 = rng.random();
        let wanted = if class_draw < collab.tripartite_probability {
            3
        } else if class_draw < collab.tripartite_probability + collab.probability {
            2
        } else {
            1
        };
        let picks = pick_countries(&mut rng, plan, wanted);

        let (countries, shift): (Vec<String>, f64) = if picks.is_empty() {
            (vec![spec.rest_code.clone()], 0.0)
        } else {
            let shift = picks
                .iter()
                .map(|&c| spec.countries[c].quality_shift)
                .sum::<f64>()
                / picks.len() as f64;
            (
                picks
                    .iter()
                    .map(|&c| spec.countries[c].code.clone())
                    .collect(),
                shift,
            )
        };
        let extra = (countries.len().saturating_sub(1)) as f64 * collab.boost;
        let mu = field.mu + shift + extra;

        let citations = if field.zero_inflation > 0.0 && rng.random::<f64>() < field.zero_inflation
        {
            0
        } else {
            let law = LogNormal::new(mu, field.sigma).expect("sigma validated positive");
            law.sample(&mut rng).floor().max(0.0) as u64
        };

        out.push(PublicationRecord::new(
            id,
            year,
            DocType::Article,
            citations,
            countries,
            vec![field.category.clone()],
        ));
    }
    out
}

/// Weighted sampling of distinct configured countries; a miss lands on the
/// rest-of-world remainder. Collaborative draws degrade gracefully when too
/// few configured countries have positive share.
fn pick_countries(rng: &mut ChaCha8Rng, plan: &FieldPlan, wanted: usize) -> Vec<usize> {
    if wanted <= 1 {
        let u: f64 = rng.random();
        let mut cum = 0.0;
        for &(country, share) in &plan.weights {
            cum += share;
            if u < cum {
                return vec![country];
            }
        }
        return Vec::new(); // rest of world
    }
    // collaborative record: sample without replacement among configured
    // countries, renormalizing at each step
    let mut available: Vec<(usize, f64)> = plan.weights.clone();
    let mut picks = Vec::with_capacity(wanted);
    while picks.len() < wanted && !available.is_empty() {
        let total: f64 = available.iter().map(|&(_, w)| w).sum();
        if total <= 0.0 {
            break;
        }
        let u: f64 = rng.random::<f64>() * total;
        let mut cum = 0.0;
        let mut chosen = available.len() - 1;
        for (pos, &(_, w)) in available.iter().enumerate() {
            cum += w;
            if u < cum {
                chosen = pos;
                break;
            }
        }
        picks.push(available.remove(chosen).0);
    }
    if picks.len() < 2 {
        // could not form a collaboration; fall back to a unilateral record
        picks.truncate(1);
        if picks.is_empty() && plan.rest_share >= 1.0 {
            return Vec::new();
        }
    }
    picks.sort_unstable();
    picks
}

/// Raw versus refined top-class composition of one field.
#[derive(Debug, Clone, Serialize)]
pub struct FieldDivergence {
    pub category: String,
    pub n: usize,
    pub raw_top: usize,
    pub refined_top: usize,
    pub raw_share_pct: f64,
    pub refined_share_pct: f64,
    /// raw share minus refined share, percentage points.
    pub composition_gap_pct: f64,
}

/// Raw versus refined participation of one country.
#[derive(Debug, Clone, Serialize)]
pub struct CountryDivergence {
    pub code: String,
    pub n: f64,
    pub pp_raw: f64,
    pub pp_refined: f64,
}

/// Output of [`normalization_divergence_experiment`].
#[derive(Debug, Clone, Serialize)]
pub struct DivergenceReport {
    pub k: f64,
    pub raw_class_size: usize,
    pub refined_class_size: usize,
    pub raw_cutoff_citations: u64,
    pub fields: Vec<FieldDivergence>,
    pub countries: Vec<CountryDivergence>,
    /// True when raw and refined selections contain the same records.
    pub selections_identical: bool,
}

/// Generates the spec's corpus and contrasts the raw citation top-k% class
/// with the refined selection that normalizes percentile ranks per field.
///
/// Refined scores use mid-fraction ranks computed within each field, whose
/// mean is exactly 50 regardless of tie structure, so the refined class
/// draws from each field in proportion to its size.
pub fn normalization_divergence_experiment(
    spec: &SynthSpec,
    k: KPercent,
) -> Result<DivergenceReport> {
    let corpus = generate(spec)?;
    divergence_report(&corpus, spec, k)
}

/// The comparison step of the experiment on an already generated corpus.
pub fn divergence_report(
    corpus: &Corpus,
    spec: &SynthSpec,
    k: KPercent,
) -> Result<DivergenceReport> {
    let view = corpus.view();
    let threshold = top_class_threshold(&view, k)?;
    let raw = top_class(&view, &threshold);

    let ranks = per_category_ranks(&view, PercentileScheme::MidFraction, |r| {
        r.categories().first().cloned()
    })?;
    let refined_scores = esi_refined_ranks(&ranks, corpus, |r| r.categories().first().cloned())?;
    let refined = refined_top_class(&refined_scores, k)?;

    let mut fields = Vec::with_capacity(spec.fields.len());
    for field in &spec.fields {
        let raw_top = raw
            .member_indices()
            .iter()
            .filter(|&&i| corpus.records()[i as usize].has_category(&field.category))
            .count();
        let refined_top = refined
            .member_indices()
            .iter()
            .filter(|&&i| corpus.records()[i as usize].has_category(&field.category))
            .count();
        let raw_share = 100.0 * raw_top as f64 / raw.len() as f64;
        let refined_share = 100.0 * refined_top as f64 / refined.len() as f64;
        fields.push(FieldDivergence {
            category: field.category.clone(),
            n: field.records,
            raw_top,
            refined_top,
            raw_share_pct: raw_share,
            refined_share_pct: refined_share,
            composition_gap_pct: raw_share - refined_share,
        });
    }

    let mut countries = Vec::new();
    let mut codes: Vec<&str> = spec.countries.iter().map(|c| c.code.as_str()).collect();
    codes.push(spec.rest_code.as_str());
    for code in codes {
        let entity = Entity::country(code);
        let n = crate::indicators::entity_n(&view, &entity, CountingMethod::WholeNumber);
        countries.push(CountryDivergence {
            code: code.to_string(),
            n: n.as_f64(),
            pp_raw: entity_pp(&view, &raw, &entity, k, CountingMethod::WholeNumber),
            pp_refined: refined_pp_topk(
                &view,
                &refined_scores,
                &entity,
                k,
                CountingMethod::WholeNumber,
            )?,
        });
    }

    let selections_identical = raw.member_indices() == refined.member_indices();
    Ok(DivergenceReport {
        k: k.as_f64(),
        raw_class_size: raw.len(),
        refined_class_size: refined.len(),
        raw_cutoff_citations: threshold.citation_cutoff,
        fields,
        countries,
        selections_identical,
    })
}
