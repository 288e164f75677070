//! Gap and half-life across coupling strengths.

use fidgap::cli::{self, demos, RunOptions};

fn main() -> fidgap::Result<()> {
    let config = demos::davies_1q()?;
    let values = [0.25, 0.5, 1.0, 2.0, 4.0];
    let opts = RunOptions { jobs: Some(4), ..Default::default() };
    let (rows, _) = cli::sweep(&config, "dynamics.rate_family.g", &values, &opts)?;
    print!("{}", cli::commands::sweep_csv(&rows)?);
    Ok(())
}
