//! Index a handful of core terms and link core and fringe terms into a graph.
//!
//! `cargo run --example build_graph`

use termrel::data::TermRecord;
use termrel::graph::CoreFringeGraph;
use termrel::index::CoreIndex;

fn main() -> termrel::Result<()> {
    let cores = [
        ("machine learning", "machine learning studies algorithms that learn from data such as neural network models and decision tree models"),
        ("neural network", "a neural network is a model of connected units trained by gradient descent in machine learning"),
        ("gradient descent", "gradient descent is an optimization method that follows the negative gradient of a loss"),
        ("decision tree", "a decision tree splits data by features and is a classic machine learning model"),
        ("compiler", "a compiler translates source code into machine code through parsing and optimization passes"),
        ("parsing", "parsing analyzes a string of symbols according to a formal grammar as a compiler front end"),
    ];
    let fringe = ["deep neural network", "stochastic gradient descent", "grammar", "loss"];
    let mut records: Vec<TermRecord> = cores
        .iter()
        .enumerate()
        .map(|(i, (s, d))| TermRecord::core(i, s, d, &[]))
        .collect();
    records.extend(fringe.iter().enumerate().map(|(i, s)| TermRecord::fringe(cores.len() + i, s)));

    let index = CoreIndex::build(&records)?;
    println!("BM25 hits for `gradient descent`:");
    for (id, score) in index.search("gradient descent", false, 3)? {
        println!("  {:<20} {score:.3}", records[id].surface);
    }

    let graph = CoreFringeGraph::build(&records, &index, 2)?;
    println!("\nlinks into each term (k = 2):");
    for r in &records {
        let links: Vec<&str> = graph.in_links(r.id).iter().map(|&c| records[c].surface.as_str()).collect();
        println!("  {:<28} <- {}", r.surface, links.join(", "));
    }

    let adj = graph.normalize();
    let (a, b) = (1, 6);
    println!(
        "\nnormalized weight {} ~ {}: {:.3}",
        records[a].surface,
        records[b].surface,
        adj.get(a, b)
    );
    Ok(())
}
