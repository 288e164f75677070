//! Config file in, CSV + JSON envelope + SVG out, as the binary does it.

use fidgap::cli::{self, demos, ModelConfig, RunOptions};

fn main() -> fidgap::Result<()> {
    let dir = std::env::temp_dir().join("fidgap-example");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("davies-2q.json");
    std::fs::write(&path, demos::davies_2q()?.to_json())?;

    let config = ModelConfig::load(&path)?;
    let opts = RunOptions { seed: 1, ..Default::default() };
    let checks = cli::validate(&config, &opts)?;
    print!("{}", cli::output::check_table(&checks));

    let run = cli::fidelity(&config, &opts)?;
    std::fs::write(dir.join("davies-2q.csv"), &run.csv)?;
    std::fs::write(dir.join("davies-2q.result.json"), run.envelope.to_json())?;
    std::fs::write(dir.join("davies-2q.svg"), &run.svg)?;
    println!("config sha256 {}", run.envelope.config_sha256);
    println!("half-life {:?}", run.envelope.half_life);
    println!("wrote results to {}", dir.display());

    let again = cli::fidelity(&config, &opts)?;
    println!("byte-identical rerun: {}", again.csv == run.csv);
    Ok(())
}
