//! Generate a seeded corpus of random programs and cross-check a few of
//! them against the naive-evaluation oracle — the same machinery the test
//! suites use.
//!
//! ```bash
//! cargo run --example gen_corpus [seed] [count] [out_dir]
//! ```

use carapace::corpus::{gen_corpus, is_recursive, CorpusLimits};
use carapace::engine::{evaluate_naive_oracle, evaluate_program, EvalOptions};

fn main() {
    let mut args = std::env::args().skip(1);
    let seed: u64 = args.next().map_or(1, |s| s.parse().expect("seed"));
    let count: usize = args.next().map_or(10, |s| s.parse().expect("count"));
    let out_dir = args.next();

    let bundles = gen_corpus(seed, count, CorpusLimits::default());
    let recursive = bundles.iter().filter(|b| is_recursive(b)).count();
    println!("generated {count} bundles from seed {seed} ({recursive} recursive)");

    for bundle in &bundles {
        let p = bundle.to_program().expect("bundle parses");
        let semi = evaluate_program(&p, &EvalOptions::interpreted()).unwrap();
        let naive = evaluate_naive_oracle(&p).unwrap();
        let agree = semi.canonical_idb() == naive.canonical_idb();
        let tuples: usize = semi.relation_counts().iter().map(|(_, n)| n).sum();
        println!(
            "  {}: {} rules, {} derived tuples, oracle {}",
            bundle.name,
            p.rules.len(),
            tuples,
            if agree { "agrees" } else { "DISAGREES" }
        );
        assert!(agree);
        if let Some(dir) = &out_dir {
            let dir = std::path::Path::new(dir).join(&bundle.name);
            bundle.write_to_dir(&dir).expect("writable output dir");
        }
    }
    if let Some(dir) = out_dir {
        println!("bundles written under {dir}/");
    }
}
