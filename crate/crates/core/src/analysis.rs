//! Decile grouping, attribute correlations, label rankings and cross-run
//! consistency matrices over score tables.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use log::info;
use serde::{Deserialize, Serialize};

use crate::attributes::{AttributeVector, ATTRIBUTE_NAMES};
use crate::error::{Error, Result};
use crate::metrics::spearman;
use crate::scores::ScoreMap;

pub const GROUP_COUNT: usize = 10;
pub const DEFAULT_MIN_LABEL_COUNT: usize = 5;
pub const GROUP_CSV_HEADER: [&str; 4] = ["group_index", "mean_score", "attribute", "mean_value"];

/// A named per-image value, possibly missing for some images.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub values: BTreeMap<String, f64>,
}

impl Column {
    pub fn new(name: impl Into<String>, values: BTreeMap<String, f64>) -> Self {
        Self {
            name: name.into(),
            values,
        }
    }
}

/// One column per attribute; undefined hues are left out.
pub fn attribute_columns(rows: &[(String, AttributeVector)]) -> Vec<Column> {
    ATTRIBUTE_NAMES
        .iter()
        .map(|&name| {
            let values = rows
                .iter()
                .filter_map(|(id, a)| a.get(name).map(|v| (id.clone(), v)))
                .collect();
            Column::new(name, values)
        })
        .collect()
}

/// Reads an `image_id,<col>,<col>…` CSV. Empty cells and `n/a` are missing.
pub fn read_columns_csv<R: Read>(input: R) -> Result<Vec<Column>> {
    let mut r = csv::Reader::from_reader(input);
    let headers = r.headers()?.clone();
    if headers.len() < 2 {
        return Err(Error::format(0, "column CSV needs an id column and at least one value column"));
    }
    let mut columns: Vec<Column> = headers
        .iter()
        .skip(1)
        .map(|h| Column::new(h, BTreeMap::new()))
        .collect();
    for rec in r.records() {
        let rec = rec?;
        let offset = rec.position().map_or(0, |p| p.byte());
        let id = rec.get(0).unwrap_or_default();
        for (col, raw) in columns.iter_mut().zip(rec.iter().skip(1)) {
            let raw = raw.trim();
            if raw.is_empty() || raw.eq_ignore_ascii_case("n/a") {
                continue;
            }
            let v: f64 = raw
                .parse()
                .map_err(|_| Error::format(offset, format!("{}: {raw:?} for {id} is not a number", col.name)))?;
            col.values.insert(id.to_owned(), v);
        }
    }
    Ok(columns)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Group {
    /// 1-based, lowest scores first.
    pub index: usize,
    pub ids: Vec<String>,
    pub mean_score: f64,
    /// Mean over the members that have a value; `None` if none do.
    pub attribute_means: BTreeMap<String, Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub groups: Vec<Group>,
}

fn mean(values: impl IntoIterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.into_iter().fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// Ids sorted by `(score, id)`.
fn sorted_ids(scores: &ScoreMap) -> Vec<(&String, f64)> {
    let mut ids: Vec<(&String, f64)> = scores.iter().map(|(k, &v)| (k, v)).collect();
    ids.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.cmp(b.0)));
    ids
}

/// Ten groups of nearly equal size by ascending score; the first
/// `N mod 10` groups hold one extra image.
pub fn group_by_decile(scores: &ScoreMap, columns: &[Column]) -> Result<GroupSummary> {
    if scores.len() < GROUP_COUNT {
        return Err(Error::Usage(format!(
            "decile grouping needs at least {GROUP_COUNT} scored images, got {}",
            scores.len()
        )));
    }
    let ids = sorted_ids(scores);
    let (base, extra) = (ids.len() / GROUP_COUNT, ids.len() % GROUP_COUNT);
    let mut groups = Vec::with_capacity(GROUP_COUNT);
    let mut start = 0;
    for g in 0..GROUP_COUNT {
        let size = base + usize::from(g < extra);
        let members = &ids[start..start + size];
        start += size;
        let attribute_means = columns
            .iter()
            .map(|c| {
                let m = mean(members.iter().filter_map(|(id, _)| c.values.get(*id).copied()));
                (c.name.clone(), m)
            })
            .collect();
        groups.push(Group {
            index: g + 1,
            ids: members.iter().map(|(id, _)| (*id).clone()).collect(),
            mean_score: mean(members.iter().map(|m| m.1)).expect("groups are non-empty"),
            attribute_means,
        });
    }
    Ok(GroupSummary { groups })
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_owned(), |v| v.to_string())
}

pub fn write_group_csv<W: Write>(out: W, summary: &GroupSummary) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(GROUP_CSV_HEADER)?;
    for g in &summary.groups {
        for (attr, m) in &g.attribute_means {
            w.write_record([g.index.to_string(), g.mean_score.to_string(), attr.clone(), fmt_opt(*m)])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Correlation strength label by |ρ|.
pub fn strength_band(rho: f64) -> &'static str {
    match rho.abs() {
        r if r >= 0.3 => "moderate",
        r if r >= 0.15 => "weak",
        r if r >= 0.08 => "very weak",
        _ => "negligible",
    }
}

/// Published full-scale correlations of each pixel attribute with machine
/// memorability. Informational only; desk-scale runs are not expected to
/// reproduce them.
pub fn reference_rho(attribute: &str) -> Option<f64> {
    match attribute {
        "value" => Some(-0.40),
        "contrast" => Some(-0.33),
        "hue" => Some(-0.15),
        "saturation" => Some(0.16),
        "entropy" => Some(0.10),
        "colorfulness" => Some(0.04),
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Correlation {
    pub column: String,
    /// `None` when either side is constant over the shared ids.
    pub rho: Option<f64>,
    pub n: usize,
    /// Scored images without a value in this column.
    pub dropped: usize,
    pub band: Option<String>,
    pub reference_rho: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub note: String,
    pub correlations: Vec<Correlation>,
}

/// Spearman ρ between the scores and each column over their shared ids.
pub fn correlate(scores: &ScoreMap, columns: &[Column]) -> Result<CorrelationReport> {
    let mut correlations = Vec::with_capacity(columns.len());
    for col in columns {
        let (xs, ys): (Vec<f64>, Vec<f64>) = scores
            .iter()
            .filter_map(|(id, &s)| col.values.get(id).map(|&v| (s, v)))
            .unzip();
        if xs.is_empty() {
            return Err(Error::Usage(format!("column {} shares no ids with the scores", col.name)));
        }
        let dropped = scores.len() - xs.len();
        if dropped > 0 {
            info!("{}: {dropped} scored images have no value and were dropped", col.name);
        }
        let rho = spearman(&xs, &ys)?;
        correlations.push(Correlation {
            column: col.name.clone(),
            rho,
            n: xs.len(),
            dropped,
            band: rho.map(|r| strength_band(r).to_owned()),
            reference_rho: reference_rho(&col.name),
        });
    }
    Ok(CorrelationReport {
        note: "bands: |rho| >= 0.3 moderate, 0.15-0.3 weak, 0.08-0.15 very weak; \
               reference_rho values are published full-scale results, not expectations"
            .to_owned(),
        correlations,
    })
}

pub fn write_correlation_csv<W: Write>(out: W, report: &CorrelationReport) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["column", "rho", "n", "dropped", "band"])?;
    for c in &report.correlations {
        w.write_record([
            c.column.clone(),
            fmt_opt(c.rho),
            c.n.to_string(),
            c.dropped.to_string(),
            c.band.clone().unwrap_or_else(|| "n/a".into()),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelStat {
    pub label: String,
    pub mean_score: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelRanking {
    /// Highest mean first; ties by label.
    pub labels: Vec<LabelStat>,
    pub k: usize,
    pub min_count: usize,
}

impl LabelRanking {
    pub fn top(&self) -> &[LabelStat] {
        &self.labels[..self.k.min(self.labels.len())]
    }

    pub fn bottom(&self) -> &[LabelStat] {
        &self.labels[self.labels.len().saturating_sub(self.k)..]
    }
}

/// Mean score per label over labelled scored ids, dropping labels seen
/// fewer than `min_count` times.
pub fn rank_labels(
    scores: &ScoreMap,
    labels: &BTreeMap<String, String>,
    k: usize,
    min_count: usize,
) -> Result<LabelRanking> {
    let mut sums: BTreeMap<&str, (f64, usize)> = BTreeMap::new();
    for (id, &s) in scores {
        if let Some(label) = labels.get(id) {
            let e = sums.entry(label).or_default();
            e.0 += s;
            e.1 += 1;
        }
    }
    if sums.is_empty() {
        return Err(Error::Usage("no scored image carries a label".into()));
    }
    let mut stats: Vec<LabelStat> = sums
        .into_iter()
        .filter(|(_, (_, n))| *n >= min_count)
        .map(|(label, (sum, count))| LabelStat {
            label: label.to_owned(),
            mean_score: sum / count as f64,
            count,
        })
        .collect();
    stats.sort_by(|a, b| b.mean_score.total_cmp(&a.mean_score).then_with(|| a.label.cmp(&b.label)));
    Ok(LabelRanking {
        labels: stats,
        k,
        min_count,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyMatrix {
    pub runs: Vec<String>,
    /// `values[i][j]`, `None` where a table is constant on the shared ids.
    pub values: Vec<Vec<Option<f64>>>,
    pub shared: Vec<Vec<usize>>,
}

/// Pairwise Spearman ρ over the ids each pair of tables shares.
pub fn consistency_matrix(tables: &[(String, ScoreMap)]) -> Result<ConsistencyMatrix> {
    if tables.len() < 2 {
        return Err(Error::Usage(format!(
            "a consistency matrix needs at least 2 score tables, got {}",
            tables.len()
        )));
    }
    let k = tables.len();
    let mut values = vec![vec![None; k]; k];
    let mut shared = vec![vec![0; k]; k];
    for i in 0..k {
        values[i][i] = Some(1.0);
        shared[i][i] = tables[i].1.len();
        for j in i + 1..k {
            let (xs, ys): (Vec<f64>, Vec<f64>) = tables[i]
                .1
                .iter()
                .filter_map(|(id, &x)| tables[j].1.get(id).map(|&y| (x, y)))
                .unzip();
            if xs.len() < 3 {
                return Err(Error::Usage(format!(
                    "{} and {} share {} ids, at least 3 needed",
                    tables[i].0,
                    tables[j].0,
                    xs.len()
                )));
            }
            let rho = spearman(&xs, &ys)?;
            values[i][j] = rho;
            values[j][i] = rho;
            shared[i][j] = xs.len();
            shared[j][i] = xs.len();
        }
    }
    Ok(ConsistencyMatrix {
        runs: tables.iter().map(|t| t.0.clone()).collect(),
        values,
        shared,
    })
}

pub fn write_matrix_csv<W: Write>(out: W, matrix: &ConsistencyMatrix) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["run".to_owned()];
    header.extend(matrix.runs.iter().cloned());
    w.write_record(&header)?;
    for (run, row) in matrix.runs.iter().zip(&matrix.values) {
        let mut rec = vec![run.clone()];
        rec.extend(row.iter().map(|v| fmt_opt(*v)));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed;
    use rand::seq::SliceRandom;
    use rand::Rng;

    fn map(pairs: &[(&str, f64)]) -> ScoreMap {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    fn random_scores(n: usize, seed_value: u64) -> ScoreMap {
        let mut rng = seed::rng(seed_value);
        (0..n)
            .map(|i| (format!("id{i:03}"), f64::from(rng.gen_range(0..10u8)) / 10.0))
            .collect()
    }

    #[test]
    fn twenty_distinct_scores() {
        let scores: ScoreMap = (0..20).map(|i| (format!("x{i:02}"), (19 - i) as f64)).collect();
        let s = group_by_decile(&scores, &[]).unwrap();
        assert_eq!(s.groups.len(), 10);
        for (g, group) in s.groups.iter().enumerate() {
            assert_eq!(group.ids.len(), 2);
            assert_eq!(group.mean_score, 2.0 * g as f64 + 0.5);
        }
    }

    #[test]
    fn equal_scores_split_by_id() {
        let scores: ScoreMap = (0..10).rev().map(|i| (format!("x{i}"), 0.5)).collect();
        let s = group_by_decile(&scores, &[]).unwrap();
        for (g, group) in s.groups.iter().enumerate() {
            assert_eq!(group.ids, vec![format!("x{g}")]);
            assert_eq!(group.mean_score, 0.5);
        }
    }

    #[test]
    fn too_few_for_deciles() {
        assert!(matches!(group_by_decile(&random_scores(9, 0), &[]), Err(Error::Usage(_))));
    }

    #[test]
    fn deciles_match_brute_force() {
        for (n, seed_value) in [(100, 1), (57, 2), (10, 3), (103, 4)] {
            let scores = random_scores(n, seed_value);
            let mut rng = seed::rng(seed_value + 100);
            let attr: BTreeMap<String, f64> = scores.keys().map(|k| (k.clone(), rng.gen())).collect();
            let col = Column::new("a", attr.clone());
            let s = group_by_decile(&scores, &[col]).unwrap();

            // oracle: bubble sort by (score, id), then deal out sizes
            let mut items: Vec<(String, f64)> = scores.clone().into_iter().collect();
            for i in 0..items.len() {
                for j in 0..items.len() - 1 - i {
                    let (a, b) = (&items[j], &items[j + 1]);
                    if a.1 > b.1 || (a.1 == b.1 && a.0 > b.0) {
                        items.swap(j, j + 1);
                    }
                }
            }
            let mut at = 0;
            for (g, group) in s.groups.iter().enumerate() {
                let size = n / 10 + if g < n % 10 { 1 } else { 0 };
                let chunk = &items[at..at + size];
                at += size;
                let ids: Vec<String> = chunk.iter().map(|c| c.0.clone()).collect();
                assert_eq!(group.ids, ids);
                let ms = chunk.iter().map(|c| c.1).sum::<f64>() / size as f64;
                assert!((group.mean_score - ms).abs() < 1e-12);
                let ma = chunk.iter().map(|c| attr[&c.0]).sum::<f64>() / size as f64;
                assert!((group.attribute_means["a"].unwrap() - ma).abs() < 1e-12);
            }
            assert_eq!(at, n);
            for w in s.groups.windows(2) {
                assert!(w[0].mean_score <= w[1].mean_score);
            }
        }
    }

    #[test]
    fn grouping_ignores_input_order() {
        let scores = random_scores(40, 5);
        let mut pairs: Vec<(String, f64)> = scores.clone().into_iter().collect();
        pairs.shuffle(&mut seed::rng(6));
        let reordered: ScoreMap = pairs.into_iter().collect();
        assert_eq!(group_by_decile(&scores, &[]).unwrap(), group_by_decile(&reordered, &[]).unwrap());
    }

    #[test]
    fn correlate_with_self_and_negation() {
        let scores = map(&[("a", 0.1), ("b", 0.5), ("c", 0.3), ("d", 0.9)]);
        let neg: BTreeMap<String, f64> = scores.iter().map(|(k, v)| (k.clone(), -v)).collect();
        let report = correlate(&scores, &[Column::new("self", scores.clone()), Column::new("neg", neg)]).unwrap();
        assert_eq!(report.correlations[0].rho, Some(1.0));
        assert_eq!(report.correlations[1].rho, Some(-1.0));
        assert_eq!(report.correlations[0].band.as_deref(), Some("moderate"));
    }

    #[test]
    fn correlate_drops_missing_values() {
        let scores = map(&[("a", 0.1), ("b", 0.5), ("c", 0.3), ("d", 0.9), ("e", 0.2)]);
        let col = Column::new("x", BTreeMap::from([("a".into(), 3.0), ("b".into(), 1.0), ("d".into(), 2.0)]));
        let report = correlate(&scores, std::slice::from_ref(&col)).unwrap();
        let direct = spearman(&[0.1, 0.5, 0.9], &[3.0, 1.0, 2.0]).unwrap();
        assert_eq!(report.correlations[0].rho, direct);
        assert_eq!((report.correlations[0].n, report.correlations[0].dropped), (3, 2));

        let mut more = scores.clone();
        more.insert("zz".into(), 0.7);
        assert_eq!(correlate(&more, &[col]).unwrap().correlations[0].rho, direct);
    }

    #[test]
    fn correlate_disjoint_is_usage_error() {
        let scores = map(&[("a", 0.1), ("b", 0.5), ("c", 0.3)]);
        let col = Column::new("x", BTreeMap::from([("q".into(), 1.0)]));
        assert!(matches!(correlate(&scores, &[col]), Err(Error::Usage(_))));
    }

    #[test]
    fn bands() {
        assert_eq!(strength_band(-0.40), "moderate");
        assert_eq!(strength_band(0.16), "weak");
        assert_eq!(strength_band(-0.13), "very weak");
        assert_eq!(strength_band(0.04), "negligible");
    }

    #[test]
    fn label_ranking_basic() {
        let scores = map(&[("x", 1.0), ("y", 0.0)]);
        let labels = BTreeMap::from([("x".into(), "B".into()), ("y".into(), "A".into())]);
        let r = rank_labels(&scores, &labels, 1, 1).unwrap();
        let order: Vec<&str> = r.labels.iter().map(|l| l.label.as_str()).collect();
        assert_eq!(order, ["B", "A"]);
        assert_eq!(r.top()[0].label, "B");
        assert_eq!(r.bottom()[0].label, "A");
        assert!(rank_labels(&scores, &BTreeMap::new(), 1, 1).is_err());
        assert!(rank_labels(&scores, &labels, 1, DEFAULT_MIN_LABEL_COUNT).unwrap().labels.is_empty());
    }

    #[test]
    fn label_ranking_matches_brute_force() {
        let scores = random_scores(200, 7);
        let mut rng = seed::rng(8);
        let mut labels = BTreeMap::new();
        for k in scores.keys() {
            if rng.gen_bool(0.9) {
                labels.insert(k.clone(), format!("L{}", rng.gen_range(0..12)));
            }
        }
        let r = rank_labels(&scores, &labels, 3, 5).unwrap();
        for stat in &r.labels {
            let members: Vec<f64> = labels
                .iter()
                .filter(|(_, l)| **l == stat.label)
                .map(|(id, _)| scores[id])
                .collect();
            assert_eq!(stat.count, members.len());
            assert!((stat.mean_score - members.iter().sum::<f64>() / members.len() as f64).abs() < 1e-12);
        }
        for w in r.labels.windows(2) {
            assert!(w[0].mean_score > w[1].mean_score || (w[0].mean_score == w[1].mean_score && w[0].label < w[1].label));
        }
        assert!(r.labels.iter().all(|l| l.count >= 5));
    }

    #[test]
    fn matrix_self_and_reversal() {
        let t = random_scores(30, 9);
        let rev: ScoreMap = t.iter().map(|(k, v)| (k.clone(), 1.0 - v)).collect();
        let m = consistency_matrix(&[("a".into(), t.clone()), ("b".into(), t.clone()), ("r".into(), rev)]).unwrap();
        assert_eq!(m.values[0][1], Some(1.0));
        assert_eq!(m.values[0][2], Some(-1.0));
        for i in 0..3 {
            assert_eq!(m.values[i][i], Some(1.0));
            for j in 0..3 {
                assert_eq!(m.values[i][j], m.values[j][i]);
            }
        }
    }

    #[test]
    fn matrix_matches_pairwise_calls() {
        let tables: Vec<(String, ScoreMap)> = (0..3).map(|i| (format!("t{i}"), random_scores(25 + i, 20 + i as u64))).collect();
        let m = consistency_matrix(&tables).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                if i == j {
                    continue;
                }
                let (xs, ys): (Vec<f64>, Vec<f64>) = tables[i]
                    .1
                    .iter()
                    .filter_map(|(k, x)| tables[j].1.get(k).map(|y| (*x, *y)))
                    .unzip();
                assert_eq!(m.values[i][j], spearman(&xs, &ys).unwrap());
            }
        }
    }

    #[test]
    fn matrix_errors() {
        let t = random_scores(5, 1);
        assert!(consistency_matrix(&[("a".into(), t.clone())]).is_err());
        let other = map(&[("zzz", 1.0), ("yyy", 0.0), ("xxx", 0.5)]);
        assert!(matches!(
            consistency_matrix(&[("a".into(), t), ("b".into(), other)]),
            Err(Error::Usage(_))
        ));
    }

    #[test]
    fn csv_outputs() {
        let scores = random_scores(10, 1);
        let col = Column::new("value", scores.clone());
        let s = group_by_decile(&scores, &[col]).unwrap();
        let mut buf = Vec::new();
        write_group_csv(&mut buf, &s).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("group_index,mean_score,attribute,mean_value\n1,"));
        assert_eq!(text.lines().count(), 11);

        let columns = read_columns_csv("image_id,hue,value\na,n/a,0.5\nb,10,\n".as_bytes()).unwrap();
        assert_eq!(columns[0].values, BTreeMap::from([("b".into(), 10.0)]));
        assert_eq!(columns[1].values, BTreeMap::from([("a".into(), 0.5)]));
        assert!(matches!(
            read_columns_csv("image_id,x\na,zz\n".as_bytes()),
            Err(Error::Format { .. })
        ));
    }
}
