use super::{ExperimentResult, PairedReport};
use serde::{Deserialize, Serialize};
use std::fmt::Write;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(format!("unknown format {s:?}; expected csv or json")),
        }
    }
}

pub const CSV_HEADER: &str = "decoder,channel,point,trials,errors,bit_errors,ber,fer,fer_ci_lo,fer_ci_hi,\
avg_nr_all,avg_nr_cond,avg_ne,avg_iters,avg_xors,seconds";

const PAIRED_HEADER: &str = "decoder_a,decoder_b,point,trials,errors_a,errors_b,only_a,only_b,fer_a,fer_b,\
delta,delta_ci_lo,delta_ci_hi,p_value";

/// One CSV row per point, or pretty JSON of the whole result.
pub fn emit(res: &ExperimentResult, format: Format) -> String {
    match format {
        Format::Json => serde_json::to_string_pretty(res).expect("result serializes"),
        Format::Csv => {
            let mut out = String::from(CSV_HEADER);
            out.push('\n');
            for p in &res.points {
                writeln!(
                    out,
                    "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                    res.decoder,
                    res.channel,
                    p.point,
                    p.trials,
                    p.errors,
                    p.bit_errors,
                    p.ber,
                    p.fer,
                    p.fer_ci_lo,
                    p.fer_ci_hi,
                    p.avg_nr_all,
                    p.avg_nr_cond,
                    p.avg_ne,
                    p.avg_iters,
                    p.avg_xors,
                    p.seconds
                )
                .unwrap();
            }
            out
        }
    }
}

pub fn emit_paired(rep: &PairedReport, format: Format) -> String {
    match format {
        Format::Json => serde_json::to_string_pretty(rep).expect("report serializes"),
        Format::Csv => {
            let mut out = String::from(PAIRED_HEADER);
            out.push('\n');
            for p in &rep.points {
                writeln!(
                    out,
                    "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                    rep.decoder_a,
                    rep.decoder_b,
                    p.point,
                    p.trials,
                    p.errors_a,
                    p.errors_b,
                    p.only_a,
                    p.only_b,
                    p.fer_a,
                    p.fer_b,
                    p.delta,
                    p.delta_ci_lo,
                    p.delta_ci_hi,
                    p.p_value
                )
                .unwrap();
            }
            out
        }
    }
}
