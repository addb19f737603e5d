//! Runs every shipped preset at full size, then reruns each one on one
//! and on three workers. Prints one line per criterion and exits non-zero
//! if any fails.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use genealab_cli::{run, Kind, Overrides};
use genealab_verify::Check;

struct Criterion {
    number: usize,
    title: &'static str,
    preset: &'static str,
    kind: Kind,
}

const CRITERIA: [Criterion; 9] = [
    Criterion {
        number: 1,
        title: "moment duality, N = 500, 1e5 replicates per side",
        preset: "moment-duality",
        kind: Kind::DualityCheck,
    },
    Criterion {
        number: 2,
        title: "equilibrium pair distance and Laplace transforms",
        preset: "equilibrium",
        kind: Kind::Equilibrium,
    },
    Criterion {
        number: 3,
        title: "Feynman-Kac duality, K = 200, and exact chains for K <= 5",
        preset: "fk-duality",
        kind: Kind::FkDuality,
    },
    Criterion {
        number: 4,
        title: "conditioned duality over 200 mass paths",
        preset: "conditioned-duality",
        kind: Kind::ConditionedDuality,
    },
    Criterion {
        number: 5,
        title: "strong duality from two families at distance 10",
        preset: "strong-duality",
        kind: Kind::StrongDuality,
    },
    Criterion {
        number: 6,
        title: "Girsanov reweighting, N = 500, 1e5 paths",
        preset: "girsanov",
        kind: Kind::GirsanovCheck,
    },
    Criterion {
        number: 7,
        title: "concatenation laws on 1000 random instances",
        preset: "semigroup",
        kind: Kind::InfdivCheck,
    },
    Criterion {
        number: 8,
        title: "Levy-Khintchine identities and Poisson split",
        preset: "levy-khintchine",
        kind: Kind::InfdivCheck,
    },
    Criterion {
        number: 9,
        title: "round trips, fixtures and the two-site dual",
        preset: "diagnostics",
        kind: Kind::Diagnostics,
    },
];

/// Every preset with the replicate count used for the worker comparison.
const DETERMINISM: [(&str, Kind, Option<usize>); 10] = [
    ("moment-duality", Kind::DualityCheck, Some(500)),
    ("equilibrium", Kind::Equilibrium, Some(20)),
    ("fk-duality", Kind::FkDuality, Some(500)),
    ("conditioned-duality", Kind::ConditionedDuality, Some(3)),
    ("strong-duality", Kind::StrongDuality, Some(500)),
    ("girsanov", Kind::GirsanovCheck, Some(500)),
    ("semigroup", Kind::InfdivCheck, None),
    ("levy-khintchine", Kind::InfdivCheck, Some(5000)),
    ("diagnostics", Kind::Diagnostics, Some(5000)),
    ("pure-aging", Kind::Simulate, None),
];

fn preset(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join(format!("../../presets/{name}.toml"))
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

fn main() {
    let tmp = tempfile::tempdir().expect("temporary directory");
    let mut lines = Vec::new();

    for c in &CRITERIA {
        let clock = Instant::now();
        let overrides = Overrides {
            out: Some(tmp.path().join(c.preset)),
            ..Overrides::default()
        };
        let line = match run(c.kind, &preset(c.preset), &overrides) {
            Ok(r) => {
                for check in &r.report.checks {
                    println!("    [{}] {}", c.number, check.summary());
                }
                let failed = r
                    .report
                    .checks
                    .iter()
                    .filter(|k| !k.verdict().passed())
                    .map(Check::name);
                let failed: Vec<&str> = failed.collect();
                let mut line = format!(
                    "criterion {} ({}): {} ({} checks, {:.1} s)",
                    c.number,
                    c.title,
                    verdict(r.report.passed()),
                    r.report.checks.len(),
                    clock.elapsed().as_secs_f64()
                );
                if !failed.is_empty() {
                    line.push_str(&format!("; failed: {}", failed.join("; ")));
                }
                line
            }
            Err(e) => format!(
                "criterion {} ({}): FAIL (error[{}]: {e})",
                c.number,
                c.title,
                e.code()
            ),
        };
        println!("{line}");
        lines.push(line);
    }

    let clock = Instant::now();
    let mut differing = Vec::new();
    for (name, kind, reps) in DETERMINISM {
        let mut reports = Vec::new();
        for workers in [1, 3] {
            let out = tmp.path().join(format!("determinism/{name}-{workers}"));
            let overrides = Overrides {
                reps,
                out: Some(out.clone()),
                workers: Some(workers),
                ..Overrides::default()
            };
            reports.push(match run(kind, &preset(name), &overrides) {
                Ok(_) => fs::read(out.join("report.json")).ok(),
                Err(e) => {
                    println!(
                        "    [10] {name} on {workers} workers: error[{}]: {e}",
                        e.code()
                    );
                    None
                }
            });
        }
        let same = reports[0].is_some() && reports[0] == reports[1];
        println!(
            "    [10] {name}: reports on 1 and 3 workers {}",
            if same { "identical" } else { "differ" }
        );
        if !same {
            differing.push(name);
        }
    }
    let mut line = format!(
        "criterion 10 (byte-identical reports on 1 and 3 workers, {} presets): {} ({:.1} s)",
        DETERMINISM.len(),
        verdict(differing.is_empty()),
        clock.elapsed().as_secs_f64()
    );
    if !differing.is_empty() {
        line.push_str(&format!("; differing: {}", differing.join(", ")));
    }
    println!("{line}");
    lines.push(line);

    println!();
    println!("acceptance summary");
    for line in &lines {
        println!("{line}");
    }
    let failures = lines.iter().filter(|l| l.contains("): FAIL")).count();
    println!(
        "{} of {} criteria passed",
        lines.len() - failures,
        lines.len()
    );
    if failures > 0 {
        std::process::exit(1);
    }
}
