//! Text, CSV and JSON renderings of a [`RunReport`].

use std::fmt::Write as _;
use std::str::FromStr;

use thiserror::Error;

use crate::pipeline::{RunReport, UdaReport};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReportError {
    #[error("unsupported report format `{0}` (expected text, csv, summary-csv or json)")]
    UnsupportedFormat(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Text,
    /// Per-university table at full precision.
    Csv,
    /// Per-UDA summary table at full precision.
    SummaryCsv,
    Json,
}

impl FromStr for ReportFormat {
    type Err = ReportError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "text" | "txt" => Ok(ReportFormat::Text),
            "csv" => Ok(ReportFormat::Csv),
            "summary-csv" | "summary_csv" => Ok(ReportFormat::SummaryCsv),
            "json" => Ok(ReportFormat::Json),
            _ => Err(ReportError::UnsupportedFormat(s.to_string())),
        }
    }
}

pub fn render_report(r: &RunReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Text => render_text(r),
        ReportFormat::Csv => render_csv(r),
        ReportFormat::SummaryCsv => render_summary_csv(r),
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(r).expect("report serializes");
            s.push('\n');
            s
        }
    }
}

fn opt3(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.3}"))
}

fn opt_full<T: ToString>(v: Option<T>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

const LEGEND: &str = "*** p < 0.01; ** p < 0.05; * p < 0.10 (paired t-test, pooled vs gender-stratified scaling)";

fn render_uda_table(out: &mut String, uda: &UdaReport) {
    let w = uda.universities.iter().map(|u| u.university_id.len()).max().unwrap_or(0).max(10);
    let _ = writeln!(out, "UDA {}", uda.uda_id);
    let _ = writeln!(
        out,
        "{:<w$}  {:>10} {:>5}  {:>10} {:>5}  {:>4}  {:>9}  {:<5}",
        "University", "FSS_U^1", "Rank", "FSS_U^2", "Rank", "Sign", "Rank diff", "Sig."
    );
    for u in &uda.universities {
        let _ = writeln!(
            out,
            "{:<w$}  {:>10} {:>5}  {:>10} {:>5}  {:>4}  {:>9}  {:<5}",
            u.university_id,
            opt3(u.fss_pooled),
            u.rank_pooled,
            opt3(u.fss_by_gender),
            u.rank_by_gender,
            u.sign.symbol(),
            u.abs_shift(),
            u.stars(),
        );
    }
    let s = &uda.shifts;
    let _ = writeln!(
        out,
        "N° of observations: {}; Sum of differences: {}; Max of difference: {}; Mean of differences: {:.3}",
        uda.universities.len(),
        s.sum_shift,
        s.max_shift,
        s.mean_shift
    );
    if uda.n_significant.is_some() {
        let _ = writeln!(out, "{LEGEND}");
    }
    out.push('\n');
}

fn render_text(r: &RunReport) -> String {
    let mut out = render_text_untrimmed(r).lines().map(str::trim_end).collect::<Vec<_>>().join("\n");
    out.push('\n');
    out
}

fn render_text_untrimmed(r: &RunReport) -> String {
    let mut out = String::new();
    let m = &r.metadata;
    let _ = writeln!(out, "University rankings: pooled (1) vs gender-stratified (2) field scaling");
    if let Some(w) = m.window {
        let _ = writeln!(out, "Window: {}-{}", w.start, w.end);
    }
    if let Some(seed) = m.seed {
        let _ = writeln!(out, "Seed: {seed}");
    }
    if let Some(e) = &m.eligibility {
        let _ = writeln!(
            out,
            "SDS retained: {} (excluded: {} low productivity, {} gender count); university-UDA pairs: {} ranked, {} excluded; researchers ranked: {}",
            e.retained_sds,
            e.excluded_sds_by_productivity,
            e.excluded_sds_by_gender_count,
            e.retained_pairs,
            e.excluded_pairs,
            e.researchers_ranked
        );
    }
    if m.unresolved_baselines > 0 || m.rejected_outside_window > 0 {
        let _ = writeln!(
            out,
            "Publications without baseline: {}; publications before window: {}",
            m.unresolved_baselines, m.rejected_outside_window
        );
    }
    let _ = writeln!(out, "Config fingerprint: {}", m.config_fingerprint);
    if let Some(fp) = &m.dataset_fingerprint {
        let _ = writeln!(out, "Dataset fingerprint: {fp}");
    }
    out.push('\n');

    for uda in &r.udas {
        render_uda_table(&mut out, uda);
    }

    let w = r.udas.iter().map(|u| u.uda_id.len()).max().unwrap_or(0).max(3);
    let _ = writeln!(out, "Summary");
    let _ = writeln!(
        out,
        "{:<w$}  {:>16}  {:>14}  {:>9}  {:>13}  {:>12}  {:>7}",
        "UDA", "Universities", "Shifting", "Max shift", "Average shift", "Spearman rho", "R' (%)"
    );
    for uda in &r.udas {
        let n = uda.universities.len();
        let universities = match uda.n_significant {
            Some(k) => format!("{n} ({k})"),
            None => n.to_string(),
        };
        let s = &uda.shifts;
        let shifting = format!("{} ({:.1}%)", s.n_shifted, s.percent_shifted);
        let rho = uda.spearman.as_ref().map_or_else(|| "-".to_string(), |sp| format!("{:.3}{}", sp.rho, sp.stars));
        let rp = uda.r_prime.as_ref().map_or_else(|| "-".to_string(), |x| format!("{:.2}", x.r_prime));
        let _ = writeln!(
            out,
            "{:<w$}  {:>16}  {:>14}  {:>9}  {:>13.3}  {:>12}  {:>7}",
            uda.uda_id, universities, shifting, s.max_shift, s.mean_shift, rho, rp
        );
    }
    let _ = writeln!(out, "Universities: count (significant at p < 0.10). Spearman stars: *** p < 0.01; ** p < 0.05; * p < 0.10");
    out
}

fn render_csv(r: &RunReport) -> String {
    let mut out = String::from(
        "uda_id,university_id,fss_u_pooled,rank_pooled,fss_u_by_gender,rank_by_gender,sign,rank_shift,abs_rank_shift,n_researchers,mean_difference,t_statistic,df,p_value,stars\n",
    );
    for uda in &r.udas {
        for u in &uda.universities {
            let t = u.test.as_ref();
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                uda.uda_id,
                u.university_id,
                opt_full(u.fss_pooled),
                u.rank_pooled,
                opt_full(u.fss_by_gender),
                u.rank_by_gender,
                u.sign.symbol(),
                u.shift,
                u.abs_shift(),
                opt_full(u.n_researchers),
                opt_full(t.map(|t| t.mean_difference)),
                opt_full(t.map(|t| t.t_statistic)),
                opt_full(t.map(|t| t.degrees_of_freedom)),
                opt_full(t.map(|t| t.p_value)),
                u.stars(),
            );
        }
    }
    out
}

fn render_summary_csv(r: &RunReport) -> String {
    let mut out = String::from(
        "uda_id,n_universities,n_significant,n_shifted,percent_shifted,max_shift,sum_shift,mean_shift,spearman_rho,spearman_p,spearman_stars,r_prime,sum_abs_diff,max_sum\n",
    );
    for uda in &r.udas {
        let s = &uda.shifts;
        let sp = uda.spearman.as_ref();
        let rp = uda.r_prime.as_ref();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            uda.uda_id,
            uda.universities.len(),
            opt_full(uda.n_significant),
            s.n_shifted,
            s.percent_shifted,
            s.max_shift,
            s.sum_shift,
            s.mean_shift,
            opt_full(sp.map(|x| x.rho)),
            opt_full(sp.map(|x| x.p_value)),
            sp.map_or("", |x| x.stars.as_str()),
            opt_full(rp.map(|x| x.r_prime)),
            opt_full(rp.map(|x| x.sum_abs_diff)),
            opt_full(rp.map(|x| x.max_sum)),
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::{compare_rankings, RankRow};

    fn five_universities() -> RunReport {
        let rows: Vec<RankRow> = [(1, 2, 0.9, 0.8), (2, 3, 0.8, 0.7), (3, 4, 0.7, 0.6), (4, 1, 0.6, 1.0), (5, 5, 0.5, 0.5)]
            .iter()
            .enumerate()
            .map(|(i, &(a, b, x, y))| RankRow {
                uda_id: "T4".into(),
                university_id: format!("ID{}", i + 1),
                rank_pooled: a,
                rank_by_gender: b,
                fss_pooled: Some(x),
                fss_by_gender: Some(y),
            })
            .collect();
        compare_rankings(&rows).unwrap()
    }

    #[test]
    fn format_parsing() {
        assert_eq!("JSON".parse::<ReportFormat>().unwrap(), ReportFormat::Json);
        assert_eq!(
            "xml".parse::<ReportFormat>().unwrap_err(),
            ReportError::UnsupportedFormat("xml".into())
        );
    }

    #[test]
    fn text_has_footer_and_summary() {
        let t = render_report(&five_universities(), ReportFormat::Text);
        assert!(t.contains("N° of observations: 5; Sum of differences: 6; Max of difference: 3; Mean of differences: 1.200"));
        assert!(t.contains("4 (80.0%)"));
        assert!(t.contains("50.00"));
        assert!(t.contains("0.900"));
    }

    #[test]
    fn csv_rows_and_json_roundtrip() {
        let r = five_universities();
        let csv = render_report(&r, ReportFormat::Csv);
        assert_eq!(csv.lines().count(), 6);
        assert!(csv.contains("T4,ID4,0.6,4,1,1,+,3,3,,,,,,"));
        let summary = render_report(&r, ReportFormat::SummaryCsv);
        assert!(summary.lines().nth(1).unwrap().ends_with(",50,6,12"));
        let back: RunReport = serde_json::from_str(&render_report(&r, ReportFormat::Json)).unwrap();
        assert_eq!(back, r);
    }
}
