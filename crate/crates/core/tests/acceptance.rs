//! Acceptance suite: one line per criterion, nonzero exit if any fails.

use gblab::config::RunConfig;
use gblab::report::Check;
use gblab::suites::{criterion, CRITERIA};
use std::process::ExitCode;
use std::time::{Duration, Instant};

fn budget(id: u8) -> Option<Duration> {
    match id {
        1 => Some(Duration::from_secs(5)),
        2 | 10 => Some(Duration::from_secs(30)),
        7 | 9 => Some(Duration::from_secs(60)),
        _ => None,
    }
}

fn worst(checks: &[Check]) -> String {
    let failing: Vec<String> = checks
        .iter()
        .filter(|c| !c.pass)
        .map(|c| {
            let v = c.computed.map(|x| format!("{x:e}")).unwrap_or_else(|| "n/a".into());
            let note = c.note.as_deref().map(|n| format!(" [{n}]")).unwrap_or_default();
            format!("{}={v}{note}", c.name)
        })
        .collect();
    if failing.is_empty() {
        format!("{} checks", checks.len())
    } else {
        format!("failing: {}", failing.join("; "))
    }
}

fn main() -> ExitCode {
    let cfg = RunConfig::default();
    let mut all = true;
    for (id, title) in CRITERIA {
        let t = Instant::now();
        let checks = criterion(id, &cfg);
        let elapsed = t.elapsed();
        let checks_ok = !checks.is_empty() && checks.iter().all(|c| c.pass);
        let time_ok = budget(id).is_none_or(|b| elapsed <= b);
        let ok = checks_ok && time_ok;
        all &= ok;
        let limit = budget(id).map(|b| format!(" / budget {} s", b.as_secs())).unwrap_or_default();
        let over = if time_ok { String::new() } else { " [over budget]".into() };
        println!(
            "criterion {id:>2} {title}: {} ({}, {:.2} s{limit}){over}",
            if ok { "PASS" } else { "FAIL" },
            worst(&checks),
            elapsed.as_secs_f64()
        );
    }
    println!("acceptance: {}", if all { "PASS" } else { "FAIL" });
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
