//! Runs every acceptance criterion and prints one line per criterion.

use toda::acceptance::{run_all, IDS};

fn main() {
    let outcomes = run_all();
    assert_eq!(outcomes.len(), IDS.len());
    for o in &outcomes {
        println!("{o}");
    }
    let failed: Vec<_> = outcomes.iter().filter(|o| !o.pass).map(|o| o.id).collect();
    println!("acceptance: {} of {} criteria passed", outcomes.len() - failed.len(), outcomes.len());
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
