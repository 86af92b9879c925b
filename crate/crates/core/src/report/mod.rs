//! Descriptive outputs: the per-label sentiment frequency table,
//! cumulative distribution data, ranked term frequencies, model comparison
//! tables, and deterministic SVG charts, all emitted as CSV + JSON.

use std::collections::BTreeMap;
use std::fmt;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

use crate::annotate::{AnnotatedComment, SentimentLabel};
use crate::features::VectorizerKind;
use crate::models::ModelFamily;
use crate::preprocess::StopwordList;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("cannot report on an empty corpus")]
    EmptyInput,
    #[error("top_n must be at least 1")]
    InvalidTopN,
    #[error("table {table:?} is present but empty")]
    EmptyTable { table: String },
    #[error("failed to write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// A percentage held in exact hundredths (basis points of the whole), so
/// printed tables never accumulate float drift. Displays as `34.04`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Deserialize)]
#[serde(from = "f64")]
pub struct Percent(i64);

impl Percent {
    pub fn from_hundredths(hundredths: i64) -> Self {
        Percent(hundredths)
    }

    /// `100 · count / total`, rounded half-up to two decimals.
    pub fn of(count: usize, total: usize) -> Self {
        let numerator = count as u128 * 10_000;
        let total = total as u128;
        let quotient = numerator / total;
        let remainder = numerator % total;
        let rounded = if 2 * remainder >= total {
            quotient + 1
        } else {
            quotient
        };
        Percent(rounded as i64)
    }

    pub fn hundredths(self) -> i64 {
        self.0
    }

    pub fn value(self) -> f64 {
        self.0 as f64 / 100.0
    }
}

impl fmt::Display for Percent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{:02}", self.0 / 100, self.0 % 100)
    }
}

impl Serialize for Percent {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_f64(self.value())
    }
}

impl From<f64> for Percent {
    fn from(value: f64) -> Self {
        Percent((value * 100.0).round() as i64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyRow {
    pub label: SentimentLabel,
    pub count: usize,
    pub percentage: Percent,
}

/// Counts and percentages for all seven labels (zero counts included),
/// in ascending sentiment order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyTable {
    pub rows: Vec<FrequencyRow>,
    pub total: usize,
}

impl FrequencyTable {
    /// Builds the table from per-label counts; labels absent from the map
    /// count zero. Errors when everything is zero.
    pub fn from_counts(counts: &BTreeMap<SentimentLabel, usize>) -> Result<Self, ReportError> {
        let total: usize = counts.values().sum();
        if total == 0 {
            return Err(ReportError::EmptyInput);
        }
        let rows = SentimentLabel::ALL
            .into_iter()
            .map(|label| {
                let count = counts.get(&label).copied().unwrap_or(0);
                FrequencyRow {
                    label,
                    count,
                    percentage: Percent::of(count, total),
                }
            })
            .collect();
        Ok(FrequencyTable { rows, total })
    }
}

/// Tallies annotated comments into a [`FrequencyTable`].
pub fn frequency_report(annotated: &[AnnotatedComment]) -> Result<FrequencyTable, ReportError> {
    if annotated.is_empty() {
        return Err(ReportError::EmptyInput);
    }
    let mut counts = BTreeMap::new();
    for a in annotated {
        *counts.entry(a.label).or_insert(0) += 1;
    }
    FrequencyTable::from_counts(&counts)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CumulativeRow {
    pub label: SentimentLabel,
    pub percentage: Percent,
    pub cumulative: Percent,
}

/// Nonzero labels ordered by descending count (ties in ascending sentiment
/// order), with a running percentage sum that ends at 100.00 up to
/// rounding drift (±0.05).
pub fn cumulative_distribution(table: &FrequencyTable) -> Vec<CumulativeRow> {
    let mut rows: Vec<&FrequencyRow> = table.rows.iter().filter(|r| r.count > 0).collect();
    rows.sort_by(|a, b| b.count.cmp(&a.count).then(a.label.cmp(&b.label)));
    let mut running = 0;
    rows.into_iter()
        .map(|row| {
            running += row.percentage.hundredths();
            CumulativeRow {
                label: row.label,
                percentage: row.percentage,
                cumulative: Percent::from_hundredths(running),
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermCount {
    pub term: String,
    pub count: usize,
}

/// Terms ranked by descending count, ties lexicographic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermFrequency {
    pub entries: Vec<TermCount>,
}

/// Counts tokens across all annotated comments, drops stop words, and
/// keeps the `top_n` most frequent (full list if fewer).
pub fn term_frequencies(
    annotated: &[AnnotatedComment],
    top_n: usize,
    stopwords: &StopwordList,
) -> Result<TermFrequency, ReportError> {
    if top_n == 0 {
        return Err(ReportError::InvalidTopN);
    }
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for a in annotated {
        for token in a.tokens.tokens() {
            if !stopwords.contains(token) {
                *counts.entry(token).or_insert(0) += 1;
            }
        }
    }
    let mut entries: Vec<TermCount> = counts
        .into_iter()
        .map(|(term, count)| TermCount {
            term: term.to_string(),
            count,
        })
        .collect();
    entries.sort_by(|a, b| b.count.cmp(&a.count).then(a.term.cmp(&b.term)));
    entries.truncate(top_n);
    Ok(TermFrequency { entries })
}

/// One evaluated (vectorizer, model) configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelComparisonRow {
    pub vectorizer: VectorizerKind,
    pub family: ModelFamily,
    /// Human-readable key hyperparameter, e.g. "5 neighbors".
    pub parameter: String,
    pub accuracy: f64,
    pub f1_weighted: f64,
    pub precision_weighted: f64,
    pub recall_weighted: f64,
}

/// One cross-validated configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvRow {
    pub vectorizer: VectorizerKind,
    pub family: ModelFamily,
    pub parameter: String,
    pub k: usize,
    pub mean_score: f64,
    pub fold_scores: Vec<f64>,
}

/// Everything [`render_reports`] emits. Optional tables are skipped when
/// `None`; a `Some` but empty table is an error rather than a silent
/// empty file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportTables {
    pub frequency: FrequencyTable,
    pub terms: TermFrequency,
    pub top_n: usize,
    pub model_comparison: Option<Vec<ModelComparisonRow>>,
    pub cv: Option<Vec<CvRow>>,
}

/// Quotes a CSV field only when it needs it.
fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), ReportError> {
    std::fs::write(path, contents).map_err(|source| ReportError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn to_pretty_json<T: Serialize>(value: &T) -> String {
    let mut out = serde_json::to_string_pretty(value).expect("report tables serialize");
    out.push('\n');
    out
}

/// Writes every table as CSV + JSON and the two SVG charts under
/// `out_dir` (charts in `out_dir/charts/`). Output is a deterministic,
/// byte-identical function of the input.
pub fn render_reports(tables: &ReportTables, out_dir: &Path) -> Result<(), ReportError> {
    let charts_dir = out_dir.join("charts");
    std::fs::create_dir_all(&charts_dir).map_err(|source| ReportError::Io {
        path: charts_dir.clone(),
        source,
    })?;

    let cumulative = cumulative_distribution(&tables.frequency);

    // Sentiment frequency: 7 label rows plus a totals row.
    let mut csv = String::from("label,count,percentage\n");
    for row in &tables.frequency.rows {
        let _ = writeln!(csv, "{},{},{}", row.label, row.count, row.percentage);
    }
    let total_pct = Percent::from_hundredths(
        tables
            .frequency
            .rows
            .iter()
            .map(|r| r.percentage.hundredths())
            .sum(),
    );
    let _ = writeln!(csv, "Total,{},{}", tables.frequency.total, total_pct);
    write_file(&out_dir.join("sentiment_frequency.csv"), &csv)?;
    write_file(
        &out_dir.join("sentiment_frequency.json"),
        &to_pretty_json(&tables.frequency),
    )?;

    let mut csv = String::from("label,percentage,cumulative\n");
    for row in &cumulative {
        let _ = writeln!(csv, "{},{},{}", row.label, row.percentage, row.cumulative);
    }
    write_file(&out_dir.join("cumulative.csv"), &csv)?;
    write_file(&out_dir.join("cumulative.json"), &to_pretty_json(&cumulative))?;

    let mut csv = String::from("term,count\n");
    for entry in &tables.terms.entries {
        let _ = writeln!(csv, "{},{}", csv_field(&entry.term), entry.count);
    }
    let stem = format!("terms_top{}", tables.top_n);
    write_file(&out_dir.join(format!("{stem}.csv")), &csv)?;
    write_file(
        &out_dir.join(format!("{stem}.json")),
        &to_pretty_json(&tables.terms),
    )?;

    if let Some(rows) = &tables.model_comparison {
        if rows.is_empty() {
            return Err(ReportError::EmptyTable {
                table: "model_comparison".to_string(),
            });
        }
        let mut csv = String::from(
            "vectorizer,family,parameter,accuracy,f1_weighted,precision_weighted,recall_weighted\n",
        );
        for row in rows {
            let _ = writeln!(
                csv,
                "{},{},{},{:.4},{:.4},{:.4},{:.4}",
                row.vectorizer,
                row.family,
                csv_field(&row.parameter),
                row.accuracy,
                row.f1_weighted,
                row.precision_weighted,
                row.recall_weighted
            );
        }
        write_file(&out_dir.join("model_comparison.csv"), &csv)?;
        write_file(&out_dir.join("model_comparison.json"), &to_pretty_json(rows))?;
    }

    if let Some(rows) = &tables.cv {
        if rows.is_empty() {
            return Err(ReportError::EmptyTable {
                table: "cv".to_string(),
            });
        }
        let mut csv = String::from("vectorizer,family,parameter,k,mean_score,fold_scores\n");
        for row in rows {
            let folds = row
                .fold_scores
                .iter()
                .map(|s| format!("{s:.4}"))
                .collect::<Vec<_>>()
                .join(";");
            let _ = writeln!(
                csv,
                "{},{},{},{},{:.4},{}",
                row.vectorizer,
                row.family,
                csv_field(&row.parameter),
                row.k,
                row.mean_score,
                folds
            );
        }
        write_file(&out_dir.join("cv.csv"), &csv)?;
        write_file(&out_dir.join("cv.json"), &to_pretty_json(rows))?;
    }

    write_file(
        &charts_dir.join("sentiment_stacked.svg"),
        &stacked_chart_svg(&cumulative),
    )?;
    write_file(
        &charts_dir.join("cumulative_bars.svg"),
        &cumulative_bars_svg(&cumulative),
    )?;
    Ok(())
}

/// Fixed per-label chart palette (diverging red–gray–blue).
fn label_color(label: SentimentLabel) -> &'static str {
    match label {
        SentimentLabel::StronglyNegative => "#b2182b",
        SentimentLabel::Negative => "#d6604d",
        SentimentLabel::WeaklyNegative => "#f4a582",
        SentimentLabel::Neutral => "#9a9a9a",
        SentimentLabel::WeaklyPositive => "#92c5de",
        SentimentLabel::Positive => "#4393c3",
        SentimentLabel::StronglyPositive => "#2166ac",
    }
}

const CHART_FONT: &str = "font-family=\"Helvetica, Arial, sans-serif\"";

fn svg_header(width: u32, height: u32, title: &str) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {width} {height}\" \
         width=\"{width}\" height=\"{height}\">\n\
         <rect width=\"{width}\" height=\"{height}\" fill=\"#ffffff\"/>\n\
         <text x=\"{}\" y=\"22\" {CHART_FONT} font-size=\"16\" text-anchor=\"middle\" \
         fill=\"#222222\">{title}</text>\n",
        width / 2
    )
}

/// Vertical per-label percentage bars (descending) with the cumulative
/// share drawn as an overlaid line.
fn stacked_chart_svg(cumulative: &[CumulativeRow]) -> String {
    let (width, height) = (840u32, 420u32);
    let (left, right, top, bottom) = (60.0, 30.0, 40.0, 80.0);
    let plot_w = width as f64 - left - right;
    let plot_h = height as f64 - top - bottom;
    let y_of = |pct: f64| top + plot_h * (1.0 - pct / 100.0);

    let mut svg = svg_header(width, height, "Sentiment distribution and cumulative share");
    // Y gridlines and tick labels at 0/25/50/75/100.
    for tick in [0, 25, 50, 75, 100] {
        let y = y_of(tick as f64);
        let _ = writeln!(
            svg,
            "<line x1=\"{left}\" y1=\"{y:.1}\" x2=\"{:.1}\" y2=\"{y:.1}\" \
             stroke=\"#dddddd\" stroke-width=\"1\"/>\n\
             <text x=\"{:.1}\" y=\"{:.1}\" {CHART_FONT} font-size=\"11\" \
             text-anchor=\"end\" fill=\"#555555\">{tick}%</text>",
            left + plot_w,
            left - 8.0,
            y + 4.0
        );
    }

    let n = cumulative.len().max(1) as f64;
    let slot = plot_w / n;
    let bar_w = slot * 0.6;
    let mut line_points = Vec::new();
    for (i, row) in cumulative.iter().enumerate() {
        let x_center = left + slot * (i as f64 + 0.5);
        let x = x_center - bar_w / 2.0;
        let y = y_of(row.percentage.value());
        let bar_h = top + plot_h - y;
        let _ = writeln!(
            svg,
            "<rect x=\"{x:.1}\" y=\"{y:.1}\" width=\"{bar_w:.1}\" height=\"{bar_h:.1}\" \
             fill=\"{}\"/>\n\
             <text x=\"{x_center:.1}\" y=\"{:.1}\" {CHART_FONT} font-size=\"11\" \
             text-anchor=\"middle\" fill=\"#333333\">{}</text>\n\
             <text x=\"{x_center:.1}\" y=\"{:.1}\" {CHART_FONT} font-size=\"11\" \
             text-anchor=\"end\" fill=\"#333333\" \
             transform=\"rotate(-30 {x_center:.1} {:.1})\">{}</text>",
            label_color(row.label),
            y - 6.0,
            row.percentage,
            top + plot_h + 16.0,
            top + plot_h + 16.0,
            row.label
        );
        line_points.push((x_center, y_of(row.cumulative.value())));
    }
    let path: Vec<String> = line_points
        .iter()
        .map(|&(x, y)| format!("{x:.1},{y:.1}"))
        .collect();
    let _ = writeln!(
        svg,
        "<polyline points=\"{}\" fill=\"none\" stroke=\"#333333\" stroke-width=\"2\"/>",
        path.join(" ")
    );
    for ((x, y), row) in line_points.iter().zip(cumulative) {
        let _ = writeln!(
            svg,
            "<circle cx=\"{x:.1}\" cy=\"{y:.1}\" r=\"3.5\" fill=\"#333333\"/>\n\
             <text x=\"{x:.1}\" y=\"{:.1}\" {CHART_FONT} font-size=\"10\" \
             text-anchor=\"middle\" fill=\"#111111\">{}</text>",
            y - 8.0,
            row.cumulative
        );
    }
    let _ = writeln!(
        svg,
        "<line x1=\"{left}\" y1=\"{:.1}\" x2=\"{:.1}\" y2=\"{:.1}\" \
         stroke=\"#555555\" stroke-width=\"1\"/>\n</svg>",
        top + plot_h,
        left + plot_w,
        top + plot_h
    );
    svg
}

/// Horizontal bars of the running cumulative share, one per label.
fn cumulative_bars_svg(cumulative: &[CumulativeRow]) -> String {
    let width = 840u32;
    let row_h = 44.0;
    let top = 46.0;
    let height = (top + cumulative.len() as f64 * row_h + 24.0).ceil() as u32;
    let (label_w, right) = (170.0, 80.0);
    let plot_w = width as f64 - label_w - right;

    let mut svg = svg_header(width, height, "Cumulative sentiment share");
    for tick in [0, 25, 50, 75, 100] {
        let x = label_w + plot_w * tick as f64 / 100.0;
        let _ = writeln!(
            svg,
            "<line x1=\"{x:.1}\" y1=\"{top}\" x2=\"{x:.1}\" y2=\"{:.1}\" \
             stroke=\"#dddddd\" stroke-width=\"1\"/>\n\
             <text x=\"{x:.1}\" y=\"{:.1}\" {CHART_FONT} font-size=\"10\" \
             text-anchor=\"middle\" fill=\"#555555\">{tick}%</text>",
            top + cumulative.len() as f64 * row_h,
            top + cumulative.len() as f64 * row_h + 14.0
        );
    }
    for (i, row) in cumulative.iter().enumerate() {
        let y = top + i as f64 * row_h + 8.0;
        let bar_h = row_h - 16.0;
        let bar_len = plot_w * row.cumulative.value() / 100.0;
        let _ = writeln!(
            svg,
            "<text x=\"{:.1}\" y=\"{:.1}\" {CHART_FONT} font-size=\"12\" \
             text-anchor=\"end\" fill=\"#333333\">{}</text>\n\
             <rect x=\"{label_w}\" y=\"{y:.1}\" width=\"{bar_len:.1}\" height=\"{bar_h:.1}\" \
             fill=\"{}\"/>\n\
             <text x=\"{:.1}\" y=\"{:.1}\" {CHART_FONT} font-size=\"11\" \
             fill=\"#111111\">{}%</text>",
            label_w - 10.0,
            y + bar_h / 2.0 + 4.0,
            row.label,
            label_color(row.label),
            label_w + bar_len + 6.0,
            y + bar_h / 2.0 + 4.0,
            row.cumulative
        );
    }
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annotate::{annotate_corpus, Lexicon};
    use crate::ingest::sample_comment;
    use crate::preprocess::LemmaRules;
    use proptest::prelude::*;

    fn table_from(counts: &[(SentimentLabel, usize)]) -> FrequencyTable {
        let map: BTreeMap<SentimentLabel, usize> = counts.iter().copied().collect();
        FrequencyTable::from_counts(&map).unwrap()
    }

    /// The seven-label survey-scale example: 30,463 comments.
    fn survey_scale_table() -> FrequencyTable {
        use SentimentLabel::*;
        table_from(&[
            (Neutral, 10370),
            (WeaklyPositive, 9884),
            (Positive, 2929),
            (StronglyPositive, 747),
            (WeaklyNegative, 4894),
            (Negative, 1343),
            (StronglyNegative, 296),
        ])
    }

    #[test]
    fn survey_scale_percentages_round_half_up_to_known_values() {
        use SentimentLabel::*;
        let table = survey_scale_table();
        assert_eq!(table.total, 30463);
        let pct = |label| {
            table
                .rows
                .iter()
                .find(|r| r.label == label)
                .unwrap()
                .percentage
                .to_string()
        };
        assert_eq!(pct(Neutral), "34.04");
        assert_eq!(pct(WeaklyPositive), "32.45");
        assert_eq!(pct(Positive), "9.61");
        assert_eq!(pct(StronglyPositive), "2.45");
        assert_eq!(pct(WeaklyNegative), "16.07");
        assert_eq!(pct(Negative), "4.41");
        assert_eq!(pct(StronglyNegative), "0.97");
        let sum: i64 = table.rows.iter().map(|r| r.percentage.hundredths()).sum();
        assert_eq!(sum, 10_000, "these counts round to exactly 100.00");
    }

    #[test]
    fn percent_rounds_half_up() {
        // 3/800 = 0.375% rounds up to 0.38, not banker's 0.38/0.37.
        assert_eq!(Percent::of(3, 800).to_string(), "0.38");
        assert_eq!(Percent::of(1, 3).to_string(), "33.33");
        assert_eq!(Percent::of(2, 3).to_string(), "66.67");
        assert_eq!(Percent::of(1, 8).to_string(), "12.50");
        assert_eq!(Percent::of(0, 5).to_string(), "0.00");
        assert_eq!(Percent::of(5, 5).to_string(), "100.00");
    }

    #[test]
    fn single_label_corpus_is_all_one_class() {
        let table = table_from(&[(SentimentLabel::Neutral, 1)]);
        for row in &table.rows {
            let expected = if row.label == SentimentLabel::Neutral {
                "100.00"
            } else {
                "0.00"
            };
            assert_eq!(row.percentage.to_string(), expected, "{}", row.label);
        }
        let cumulative = cumulative_distribution(&table);
        assert_eq!(cumulative.len(), 1);
        assert_eq!(cumulative[0].cumulative.to_string(), "100.00");
    }

    #[test]
    fn two_comment_split_is_fifty_fifty() {
        let table = table_from(&[
            (SentimentLabel::Positive, 1),
            (SentimentLabel::Negative, 1),
        ]);
        let nonzero: Vec<&FrequencyRow> =
            table.rows.iter().filter(|r| r.count > 0).collect();
        assert_eq!(nonzero.len(), 2);
        for row in nonzero {
            assert_eq!(row.percentage.to_string(), "50.00");
        }
    }

    #[test]
    fn cumulative_ordering_and_top_two_share() {
        use SentimentLabel::*;
        let cumulative = cumulative_distribution(&survey_scale_table());
        assert_eq!(cumulative[0].label, Neutral);
        assert_eq!(cumulative[1].label, WeaklyPositive);
        assert_eq!(cumulative[1].cumulative.to_string(), "66.49");
        assert_eq!(cumulative.last().unwrap().cumulative.to_string(), "100.00");
        for pair in cumulative.windows(2) {
            assert!(pair[0].percentage >= pair[1].percentage, "descending");
            assert!(pair[0].cumulative <= pair[1].cumulative, "running sum");
        }
    }

    #[test]
    fn uniform_four_label_cumulative_steps_by_quarters() {
        use SentimentLabel::*;
        let table = table_from(&[
            (Neutral, 5),
            (Positive, 5),
            (Negative, 5),
            (WeaklyPositive, 5),
        ]);
        let cumulative = cumulative_distribution(&table);
        let values: Vec<String> = cumulative
            .iter()
            .map(|r| r.cumulative.to_string())
            .collect();
        assert_eq!(values, ["25.00", "50.00", "75.00", "100.00"]);
        // Equal counts: ties resolve in ascending sentiment order.
        assert_eq!(cumulative[0].label, Negative);
        assert_eq!(cumulative[3].label, Positive);
    }

    #[test]
    fn frequency_report_counts_real_annotations() {
        let comments = vec![
            sample_comment("c1", "this is excellent and wonderful"),
            sample_comment("c2", "mediocre qqq zzz"),
            sample_comment("c3", "totally unrelated words qqq"),
        ];
        let annotated = annotate_corpus(
            &comments,
            Lexicon::builtin(),
            &StopwordList::builtin(),
            &LemmaRules::builtin(),
        );
        let table = frequency_report(&annotated).unwrap();
        assert_eq!(table.total, 3);
        let total_counts: usize = table.rows.iter().map(|r| r.count).sum();
        assert_eq!(total_counts, 3);
        assert!(frequency_report(&[]).is_err());
    }

    fn annotated_fixture() -> Vec<AnnotatedComment> {
        let comments = vec![
            sample_comment("c1", "vaccine vaccine dose works"),
            sample_comment("c2", "vaccine dose arrived"),
        ];
        annotate_corpus(
            &comments,
            Lexicon::builtin(),
            &StopwordList::builtin(),
            &LemmaRules::builtin(),
        )
    }

    #[test]
    fn term_frequencies_rank_count_then_lexicographic() {
        let annotated = annotated_fixture();
        let terms = term_frequencies(&annotated, 10, &StopwordList::builtin()).unwrap();
        assert_eq!(terms.entries[0].term, "vaccine");
        assert_eq!(terms.entries[0].count, 3);
        assert_eq!(terms.entries[1].term, "dose");
        assert_eq!(terms.entries[1].count, 2);
        // Singleton terms tie on count and order alphabetically.
        let singles: Vec<&str> = terms.entries[2..]
            .iter()
            .map(|t| t.term.as_str())
            .collect();
        let mut sorted = singles.clone();
        sorted.sort_unstable();
        assert_eq!(singles, sorted);

        let top_one = term_frequencies(&annotated, 1, &StopwordList::builtin()).unwrap();
        assert_eq!(top_one.entries.len(), 1);
        assert_eq!(top_one.entries[0].term, "vaccine");

        let huge = term_frequencies(&annotated, 10_000, &StopwordList::builtin()).unwrap();
        assert_eq!(huge.entries.len(), terms.entries.len(), "full list");
    }

    #[test]
    fn term_frequencies_respect_the_given_stopword_list() {
        let annotated = annotated_fixture();
        let custom = StopwordList::from_words(["vaccine"]);
        let terms = term_frequencies(&annotated, 10, &custom).unwrap();
        assert!(terms.entries.iter().all(|t| t.term != "vaccine"));
        assert!(matches!(
            term_frequencies(&annotated, 0, &custom),
            Err(ReportError::InvalidTopN)
        ));
    }

    fn sample_tables() -> ReportTables {
        ReportTables {
            frequency: survey_scale_table(),
            terms: TermFrequency {
                entries: vec![
                    TermCount {
                        term: "vaccine".to_string(),
                        count: 40,
                    },
                    TermCount {
                        term: "dose".to_string(),
                        count: 22,
                    },
                ],
            },
            top_n: 25,
            model_comparison: Some(vec![ModelComparisonRow {
                vectorizer: VectorizerKind::Tfidf,
                family: ModelFamily::LinearSvm,
                parameter: "Linear".to_string(),
                accuracy: 0.8377,
                f1_weighted: 0.831,
                precision_weighted: 0.8402,
                recall_weighted: 0.8377,
            }]),
            cv: Some(vec![CvRow {
                vectorizer: VectorizerKind::Count,
                family: ModelFamily::SgdClassifier,
                parameter: "Linear".to_string(),
                k: 5,
                mean_score: 0.849,
                fold_scores: vec![0.84, 0.85, 0.86, 0.85, 0.845],
            }]),
        }
    }

    #[test]
    fn render_writes_every_expected_file() {
        let dir = tempfile::tempdir().unwrap();
        render_reports(&sample_tables(), dir.path()).unwrap();
        for name in [
            "sentiment_frequency.csv",
            "sentiment_frequency.json",
            "cumulative.csv",
            "cumulative.json",
            "terms_top25.csv",
            "terms_top25.json",
            "model_comparison.csv",
            "model_comparison.json",
            "cv.csv",
            "cv.json",
            "charts/sentiment_stacked.svg",
            "charts/cumulative_bars.svg",
        ] {
            assert!(dir.path().join(name).is_file(), "{name} missing");
        }

        let freq = std::fs::read_to_string(dir.path().join("sentiment_frequency.csv")).unwrap();
        let lines: Vec<&str> = freq.lines().collect();
        assert_eq!(lines.len(), 9, "header + 7 labels + total");
        assert_eq!(lines[0], "label,count,percentage");
        assert_eq!(lines[8], "Total,30463,100.00");
        assert!(lines.contains(&"Neutral,10370,34.04"));

        let comparison =
            std::fs::read_to_string(dir.path().join("model_comparison.csv")).unwrap();
        assert!(comparison.starts_with(
            "vectorizer,family,parameter,accuracy,f1_weighted,precision_weighted,recall_weighted\n"
        ));
        assert!(comparison.contains("tfidf,LinearSVM,Linear,0.8377,0.8310,0.8402,0.8377"));

        let cumulative = std::fs::read_to_string(dir.path().join("cumulative.csv")).unwrap();
        assert!(cumulative.contains("WeaklyPositive,32.45,66.49"));

        let json: serde_json::Value = serde_json::from_str(
            &std::fs::read_to_string(dir.path().join("sentiment_frequency.json")).unwrap(),
        )
        .unwrap();
        assert_eq!(json["total"], 30463);
        let rows = json["rows"].as_array().unwrap();
        assert_eq!(rows.len(), 7);
        assert!(rows
            .iter()
            .any(|r| r["label"] == "Neutral" && r["percentage"] == 34.04));
    }

    #[test]
    fn rendering_twice_is_byte_identical() {
        let tables = sample_tables();
        let dir_a = tempfile::tempdir().unwrap();
        let dir_b = tempfile::tempdir().unwrap();
        render_reports(&tables, dir_a.path()).unwrap();
        render_reports(&tables, dir_b.path()).unwrap();
        for name in [
            "sentiment_frequency.csv",
            "cumulative.json",
            "charts/sentiment_stacked.svg",
            "charts/cumulative_bars.svg",
        ] {
            assert_eq!(
                std::fs::read(dir_a.path().join(name)).unwrap(),
                std::fs::read(dir_b.path().join(name)).unwrap(),
                "{name} differs"
            );
        }
    }

    #[test]
    fn present_but_empty_tables_error() {
        let dir = tempfile::tempdir().unwrap();
        let mut tables = sample_tables();
        tables.model_comparison = Some(vec![]);
        assert!(matches!(
            render_reports(&tables, dir.path()),
            Err(ReportError::EmptyTable { .. })
        ));

        let dir = tempfile::tempdir().unwrap();
        let mut tables = sample_tables();
        tables.cv = Some(vec![]);
        assert!(matches!(
            render_reports(&tables, dir.path()),
            Err(ReportError::EmptyTable { .. })
        ));

        // Omitted tables are skipped without error.
        let dir = tempfile::tempdir().unwrap();
        let mut tables = sample_tables();
        tables.model_comparison = None;
        tables.cv = None;
        render_reports(&tables, dir.path()).unwrap();
        assert!(!dir.path().join("model_comparison.csv").exists());
        assert!(!dir.path().join("cv.csv").exists());
    }

    #[test]
    fn unwritable_target_reports_the_path() {
        let dir = tempfile::tempdir().unwrap();
        let blocked = dir.path().join("blocked");
        std::fs::write(&blocked, "file, not dir").unwrap();
        let err = render_reports(&sample_tables(), &blocked).unwrap_err();
        assert!(matches!(err, ReportError::Io { .. }), "{err}");
    }

    proptest! {
        #[test]
        fn frequency_tables_conserve_counts_and_percentages(
            counts in proptest::collection::vec(0usize..5000, 7)
        ) {
            let total: usize = counts.iter().sum();
            prop_assume!(total > 0);
            let map: BTreeMap<SentimentLabel, usize> = SentimentLabel::ALL
                .into_iter()
                .zip(counts.iter().copied())
                .collect();
            let table = FrequencyTable::from_counts(&map).unwrap();
            prop_assert_eq!(table.rows.len(), 7);
            prop_assert_eq!(table.rows.iter().map(|r| r.count).sum::<usize>(), total);
            let pct_sum: i64 = table.rows.iter().map(|r| r.percentage.hundredths()).sum();
            prop_assert!((pct_sum - 10_000).abs() <= 5, "sum {pct_sum}");

            let cumulative = cumulative_distribution(&table);
            prop_assert_eq!(
                cumulative.len(),
                table.rows.iter().filter(|r| r.count > 0).count()
            );
            if let Some(last) = cumulative.last() {
                prop_assert!((last.cumulative.hundredths() - 10_000).abs() <= 5);
            }
            for pair in cumulative.windows(2) {
                prop_assert!(pair[0].percentage >= pair[1].percentage);
            }
        }

        #[test]
        fn term_rankings_are_strictly_ordered_and_stopword_free(
            words in proptest::collection::vec("[a-d]{1,3}", 1..40),
            top_n in 1usize..20
        ) {
            let comments = vec![sample_comment("c1", &words.join(" "))];
            let annotated = annotate_corpus(
                &comments,
                Lexicon::builtin(),
                &StopwordList::builtin(),
                &LemmaRules::builtin(),
            );
            let sw = StopwordList::builtin();
            let terms = term_frequencies(&annotated, top_n, &sw).unwrap();
            prop_assert!(terms.entries.len() <= top_n);
            for t in &terms.entries {
                prop_assert!(t.count > 0);
                prop_assert!(!sw.contains(&t.term));
            }
            for pair in terms.entries.windows(2) {
                let ordered = pair[0].count > pair[1].count
                    || (pair[0].count == pair[1].count && pair[0].term < pair[1].term);
                prop_assert!(ordered, "{:?} then {:?}", pair[0], pair[1]);
            }
        }
    }
}
