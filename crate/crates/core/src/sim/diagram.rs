use std::fmt::Write as _;

use crate::model::Cycle;

use super::trace::{Trace, UopRecord};

pub const LEGEND: &str =
    "legend: d dispatch  . waiting  1-9 executing stage k  e executing (no unit)  = completed  R retire  X squash";

fn glyph(r: &UopRecord, cycle: Cycle) -> char {
    let end = r.retire_cycle.or(r.squash_cycle);
    if cycle < r.dispatch_cycle || end.is_some_and(|e| cycle > e) {
        return ' ';
    }
    if r.squash_cycle == Some(cycle) {
        return 'X';
    }
    if r.retire_cycle == Some(cycle) {
        return 'R';
    }
    match (r.issue_cycle, r.complete_cycle) {
        (_, Some(done)) if cycle >= done => '=',
        (Some(issue), _) if cycle >= issue => {
            if r.stages.is_empty() {
                return 'e';
            }
            let mut offset = cycle - issue;
            for (k, &lat) in r.stages.iter().enumerate() {
                if offset < Cycle::from(lat) {
                    return char::from_digit((k as u32 + 1).min(9), 10).unwrap_or('9');
                }
                offset -= Cycle::from(lat);
            }
            '='
        }
        _ if cycle == r.dispatch_cycle => 'd',
        _ => '.',
    }
}

const LABEL_WIDTH: usize = 17;

fn label(r: &UopRecord) -> String {
    format!("{:>5} {:<10}{}|", r.seq, r.op.to_string(), if r.transient { '*' } else { ' ' })
}

/// One row per µop, one column per cycle, paged every `width` cycles.
/// Transient µops are starred.
pub fn render_diagram(trace: &Trace, width: usize) -> String {
    let width = width.max(1);
    let last = trace.total_cycles;
    let mut out = String::new();
    let mut page_start: Cycle = 0;
    loop {
        let page_end = (page_start + width as Cycle).min(last + 1);
        let pad = " ".repeat(LABEL_WIDTH);
        let ruler: String = (page_start..page_end).map(|c| char::from_digit((c % 10) as u32, 10).unwrap()).collect();
        let _ = writeln!(out, "{pad}|{ruler}  cycles {page_start}..{}", page_end.saturating_sub(1));
        for r in &trace.records {
            let cells: String = (page_start..page_end).map(|c| glyph(r, c)).collect();
            let _ = writeln!(out, "{}{}", label(r), cells.trim_end());
        }
        page_start = page_end;
        if page_start > last {
            break;
        }
        out.push('\n');
    }
    out.push_str(LEGEND);
    out.push('\n');
    out
}
