//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails. Seeds, case counts and time limits are pinned
//! below so runs are reproducible.

use std::process::ExitCode;
use std::time::{Duration, Instant};

/// `Err` with a message unless `cond` holds.
macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        let held: bool = $cond;
        if !held {
            return Err(format!($($msg)+));
        }
    };
}

mod chain;
mod contracts;
mod encoding;
mod generated;
mod world;

pub const SEED: u64 = 0x0115_E011;

pub type Outcome = Result<String, String>;

struct Criterion {
    id: u8,
    title: &'static str,
    limit: Option<Duration>,
    run: fn() -> Outcome,
}

const fn secs(s: u64) -> Option<Duration> {
    Some(Duration::from_secs(s))
}

const CRITERIA: [Criterion; 10] = [
    Criterion { id: 1, title: "gas: log vs persistent storage", limit: secs(1), run: chain::gas_ratio },
    Criterion { id: 2, title: "token conservation", limit: secs(30), run: contracts::conservation },
    Criterion { id: 3, title: "transformation yield bound", limit: None, run: contracts::yield_bound },
    Criterion { id: 4, title: "chain integrity under byte flips", limit: secs(10), run: chain::integrity },
    Criterion { id: 5, title: "authorization matrix", limit: None, run: contracts::authorization },
    Criterion { id: 6, title: "olive-oil end to end", limit: secs(5), run: contracts::end_to_end },
    Criterion { id: 7, title: "parameter encoding fuzz", limit: None, run: encoding::params_fuzz },
    Criterion { id: 8, title: "generator determinism and coverage", limit: None, run: generated::determinism },
    Criterion { id: 9, title: "form schema vs engine", limit: None, run: generated::schema_agreement },
    Criterion { id: 10, title: "document store", limit: None, run: encoding::docstore },
];

fn main() -> ExitCode {
    let only: Vec<u8> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for c in CRITERIA.iter().filter(|c| only.is_empty() || only.contains(&c.id)) {
        let start = Instant::now();
        let result = std::panic::catch_unwind(c.run).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let elapsed = start.elapsed();
        let result = match (result, c.limit) {
            (Ok(_), Some(limit)) if elapsed > limit => Err(format!("took {elapsed:.2?}, limit {limit:?}")),
            (r, _) => r,
        };
        let (verdict, detail) = match &result {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("criterion {:>2} {verdict} [{elapsed:>8.2?}] {}: {detail}", c.id, c.title);
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
