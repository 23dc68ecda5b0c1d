//! Writes the bundled atrium scene and its two measurements.
//!
//! ```text
//! cargo run -p matid-core --example atrium -- crates/cli/fixtures
//! ```

use std::path::PathBuf;

use matid::csvio::CsvDoc;
use matid::demo;
use matid::identify::measurements_to_csv;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| ".".into()));
    let atrium = demo::atrium()?;
    atrium.scene.save(dir.join("demo.json"))?;
    let doc = CsvDoc::default().meta("f_ghz", demo::FREQUENCY_GHZ);
    std::fs::write(dir.join("m.csv"), measurements_to_csv(doc, &atrium.measurements()))?;
    for (id, t) in [&atrium.trajectory_1, &atrium.trajectory_2] {
        let angles: Vec<String> = t.hops.iter().map(|h| format!("{:.2}", h.theta_i.to_degrees())).collect();
        println!("{id}: {} at {} deg", t.facet_ids().join(" -> "), angles.join(", "));
    }
    Ok(())
}
