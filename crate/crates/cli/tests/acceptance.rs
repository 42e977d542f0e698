//! One PASS/FAIL line per acceptance criterion. Exits non-zero when the set
//! of failing rows differs from `KNOWN_FAILURES`, so a fix or a regression
//! both show up.

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use treepat_core::selftest::{run_criterion, SelftestConfig};

/// The reference mean for `paper:fig7` cannot hold: it exceeds the share of
/// degree-3 nodes with a degree-5 neighbour. Kept failing on purpose.
const KNOWN_FAILURES: &[(u32, &str)] = &[(2, "fig7 μ")];

const LIMITS: &[(u32, Duration)] = &[(1, Duration::from_secs(60)), (4, Duration::from_secs(300))];

fn main() -> ExitCode {
    let cfg = SelftestConfig { threads: Some(4), ..SelftestConfig::default() };
    let mut failing: Vec<(u32, String)> = Vec::new();
    for id in 1..=9 {
        let start = Instant::now();
        let c = run_criterion(id, &cfg).expect("criterion exists");
        let took = start.elapsed();
        let mut notes: Vec<String> = c.failures().map(|r| format!("{}: expected {}, computed {}", r.item, r.expected, r.computed)).collect();
        failing.extend(c.failures().map(|r| (id, r.item.clone())));
        let mut passed = c.passed;
        if let Some((_, limit)) = LIMITS.iter().find(|(i, _)| *i == id) {
            if took > *limit {
                passed = false;
                notes.push(format!("took {took:.1?}, limit {limit:?}"));
                failing.push((id, "runtime".into()));
            }
        }
        println!("{} {:>2} {} ({took:.1?})", if passed { "PASS" } else { "FAIL" }, id, c.title);
        for n in notes {
            println!("         {n}");
        }
    }

    let run = || {
        let out = Command::new(env!("CARGO_BIN_EXE_treepat")).args(["selftest", "--format", "json"]).output().expect("binary runs");
        out.stdout
    };
    let (a, b) = (run(), run());
    let same = !a.is_empty() && a == b;
    println!("{} 10 selftest JSON is byte-identical across runs ({} bytes)", if same { "PASS" } else { "FAIL" }, a.len());
    if !same {
        failing.push((10, "determinism".into()));
    }

    let known: Vec<(u32, String)> = KNOWN_FAILURES.iter().map(|&(i, s)| (i, s.to_string())).collect();
    if failing == known {
        println!("failing rows match the known list: {known:?}");
        ExitCode::SUCCESS
    } else {
        println!("unexpected failing rows: {failing:?}, known: {known:?}");
        ExitCode::FAILURE
    }
}
