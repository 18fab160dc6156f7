//! Automatic labels from a category tree, and PU supervision from a few positives.
//!
//! `cargo run --example annotate`

use termrel::annotation::{build_pu_labels, DomainHierarchy, LevelConfig};
use termrel::data::{CategoryTree, TermRecord};

fn main() -> termrel::Result<()> {
    let mut tree = CategoryTree::new();
    for (parent, child) in [
        ("computer science", "artificial intelligence"),
        ("computer science", "programming languages"),
        ("artificial intelligence", "machine learning"),
        ("artificial intelligence", "knowledge representation"),
        ("machine learning", "deep learning"),
        ("programming languages", "compilers"),
    ] {
        tree.add_edge(parent, child)?;
    }
    let terms = [
        ("neural network", "deep learning"),
        ("support vector machine", "machine learning"),
        ("ontology", "knowledge representation"),
        ("register allocation", "compilers"),
        ("photosynthesis", "botany"),
    ];
    let mut records: Vec<TermRecord> = terms
        .iter()
        .enumerate()
        .map(|(i, (s, cat))| TermRecord::core(i, s, &format!("{s} is a topic"), &[cat]))
        .collect();
    records.push(TermRecord::fringe(terms.len(), "transformer"));

    let config = [
        LevelConfig {
            name: "cs".into(),
            root: "computer science".into(),
            depth: 3,
        },
        LevelConfig {
            name: "ai".into(),
            root: "artificial intelligence".into(),
            depth: 2,
        },
    ];
    let hierarchy = DomainHierarchy::resolve(&config, &tree)?;
    let labels = hierarchy.label(&records)?;
    println!("{:<24} cs    ai", "term");
    for r in &records {
        let show = |l| match labels.get(l, r.id) {
            Some(true) => "yes  ",
            Some(false) => "no   ",
            None => "-    ",
        };
        println!("{:<24} {} {}", r.surface, show(0), show(1));
    }

    // A narrower target known only through one positive.
    let pu = build_pu_labels(&labels, &records, &["neural network"])?;
    let names = |ids: &std::collections::BTreeSet<usize>| -> Vec<String> {
        ids.iter().map(|&i| records[i].surface.clone()).collect()
    };
    println!("\nPU target level {}", pu.target_level);
    println!("  positives:          {:?}", names(&pu.positives));
    println!("  reliable negatives: {:?}", names(&pu.reliable_negatives));
    println!("  unlabeled:          {:?}", names(&pu.unlabeled));
    Ok(())
}
