//! Human-readable summaries regenerated from stored JSON results.

use std::fmt::Write as _;

use crate::experiment::ResultRecord;

pub fn render(records: &[ResultRecord]) -> String {
    let mut out = String::new();
    for (idx, r) in records.iter().enumerate() {
        let _ = writeln!(
            out,
            "record {idx}: kind={} version={} {}",
            r.config.kind.name(),
            r.version,
            if r.passed_all() { "PASS" } else { "FAIL" },
        );
        if !r.swept.is_empty() {
            let swept: Vec<String> = r
                .swept
                .iter()
                .map(|(k, v)| format!("{k}={v:.6}"))
                .collect();
            let _ = writeln!(out, "  swept: {}", swept.join(", "));
        }
        for (name, value) in &r.metrics {
            let _ = writeln!(out, "  {name:<34} {value:+.12e}");
        }
        for c in &r.checks {
            let _ = writeln!(
                out,
                "  [{}] {:<32} {:+.6e} <= {:+.6e}",
                if c.passed { "ok" } else { "FAIL" },
                c.name,
                c.value,
                c.tolerance
            );
        }
        if r.wall_time_ms > 0.0 {
            let _ = writeln!(out, "  wall time: {:.1} ms", r.wall_time_ms);
        }
    }
    out
}
