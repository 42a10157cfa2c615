use std::fmt::Write as _;

use crate::integrator::{Trace, TraceRecord};
use crate::linalg::norm;

/// Bumped whenever the trace columns change.
pub const CSV_SCHEMA_VERSION: u32 = 1;

/// Trace header for relative degree `r` and `m` channels.
///
/// `y_j` and `yd{i}_j` are the output and its derivatives, `err_j` and
/// `errd{i}_j` the tracking error and its derivatives.
pub fn csv_header(r: usize, m: usize) -> String {
    let mut cols = vec!["t".to_string(), "remaining_time".to_string()];
    for i in 0..r {
        for j in 1..=m {
            cols.push(if i == 0 {
                format!("y_{j}")
            } else {
                format!("yd{i}_{j}")
            });
        }
    }
    for i in 0..r {
        for j in 1..=m {
            cols.push(if i == 0 {
                format!("err_{j}")
            } else {
                format!("errd{i}_{j}")
            });
        }
    }
    cols.extend((1..=r).map(|k| format!("e_{k}norm")));
    cols.extend((1..=r).map(|k| format!("alpha_{k}")));
    cols.extend((1..=m).map(|j| format!("u_{j}")));
    cols.push("funnel_boundary".into());
    cols.push("margin".into());
    cols.join(",")
}

fn push_row(out: &mut String, rec: &TraceRecord) {
    let mut fields: Vec<f64> = vec![rec.time.elapsed, rec.time.remaining];
    fields.extend_from_slice(&rec.state);
    for e in &rec.errors {
        fields.extend_from_slice(e);
    }
    fields.extend(rec.cascade.levels.iter().map(|e| norm(e)));
    fields.extend_from_slice(&rec.cascade.gains);
    fields.extend_from_slice(rec.input());
    fields.push(rec.funnel_boundary());
    fields.push(rec.margin());
    for (i, v) in fields.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        let _ = write!(out, "{v:e}");
    }
    out.push('\n');
}

/// The whole trace as CSV text, header first.
pub fn trace_csv(trace: &Trace) -> String {
    let mut out = csv_header(trace.r, trace.m);
    out.push('\n');
    for rec in &trace.records {
        push_row(&mut out, rec);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cw_header() {
        assert_eq!(
            csv_header(2, 3),
            "t,remaining_time,y_1,y_2,y_3,yd1_1,yd1_2,yd1_3,err_1,err_2,err_3,errd1_1,errd1_2,errd1_3,\
             e_1norm,e_2norm,alpha_1,alpha_2,u_1,u_2,u_3,funnel_boundary,margin"
        );
    }

    #[test]
    fn scalar_header() {
        assert_eq!(
            csv_header(1, 1),
            "t,remaining_time,y_1,err_1,e_1norm,alpha_1,u_1,funnel_boundary,margin"
        );
    }
}
