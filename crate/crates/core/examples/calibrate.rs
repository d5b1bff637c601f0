//! Searches integer transistor costs that reproduce the published totals of
//! both 4x4 multipliers (376 and 320) for the generated cell censuses.

use amlab::builder::{build_conventional, build_proposed, FirstRowStyle};
use amlab::power::{calibrate_transistor_costs, DEFAULT_TRANSISTORS};

fn main() {
    let conv = build_conventional(4, FirstRowStyle::FaWithZeroCin).unwrap().cell_stats();
    let prop = build_proposed(4).unwrap().cell_stats();
    println!("conventional census: {conv:?}");
    println!("proposed census:     {prop:?}");
    let found = calibrate_transistor_costs(conv, prop, 376, 320, 2..=24);
    for c in &found {
        println!("feasible: AND2={} HA={} FA={}", c.and2, c.ha, c.fa);
    }
    let chosen = found.iter().find(|c| c.fa == 16);
    match chosen {
        Some(c) => {
            println!("chosen (16-T full adder): AND2={} HA={} FA={}", c.and2, c.ha, c.fa);
            assert_eq!(*c, DEFAULT_TRANSISTORS, "shipped defaults drifted from the search");
        }
        None => {
            eprintln!("no feasible assignment with FA=16");
            std::process::exit(1);
        }
    }
}
