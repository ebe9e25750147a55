//! Acceptance suite: one line per criterion, nonzero exit if any fails.

use std::process::ExitCode;
use std::time::Duration;

use gasket_bvp::verify::{run, Group, GroupReport, VerifyConfig};

struct Criterion {
    label: &'static str,
    group: Group,
    limit: Option<Duration>,
}

const CRITERIA: [Criterion; 8] = [
    Criterion { label: "1 ratio identities", group: Group::Ratios, limit: Some(Duration::from_secs(1)) },
    Criterion { label: "2 golden values at x = 1", group: Group::Golden, limit: None },
    Criterion { label: "3 oracle equivalence", group: Group::Oracle, limit: Some(Duration::from_secs(60)) },
    Criterion { label: "4 energy consistency", group: Group::Energies, limit: None },
    Criterion { label: "5 DtN and Gauss-Green", group: Group::Dtn, limit: None },
    Criterion { label: "6 extension", group: Group::Extension, limit: None },
    Criterion { label: "7 Hausdorff dimension", group: Group::Hausdorff, limit: None },
    Criterion { label: "8 Green's function", group: Group::Green, limit: Some(Duration::from_secs(120)) },
];

fn summary(c: &Criterion, r: &GroupReport) -> (bool, String) {
    let in_time = c.limit.is_none_or(|l| r.seconds < l.as_secs_f64());
    let failed: Vec<&str> = r.checks.iter().filter(|k| !k.passed).map(|k| k.name.as_str()).collect();
    let mut note = format!("{:.2} s", r.seconds);
    if let Some(l) = c.limit {
        note.push_str(&format!(" (limit {} s)", l.as_secs()));
    }
    if !failed.is_empty() {
        note.push_str(&format!("; failing: {}", failed.join(", ")));
    }
    (r.passed && in_time, note)
}

fn main() -> ExitCode {
    let cfg = VerifyConfig::default();
    let mut all = true;
    for c in &CRITERIA {
        let (ok, note) = match run(c.group, &cfg) {
            Ok(r) => {
                if std::env::var_os("ACCEPTANCE_VERBOSE").is_some() {
                    eprint!("{r}");
                }
                summary(c, &r)
            }
            Err(e) => (false, format!("error: {e}")),
        };
        all &= ok;
        println!("{} criterion {:<28} {note}", if ok { "PASS" } else { "FAIL" }, c.label);
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
