//! Fidelity curve of the depolarizing demo, where the decay bound is attained,
//! and of the two-qubit Davies demo, where it is strict.

use fidgap::cli::demos;
use fidgap::fidelity::{run_curve, TimeGrid};

fn main() -> fidgap::Result<()> {
    for config in [demos::depolarizing()?, demos::davies_2q()?] {
        let model = config.build()?;
        let report = model.spectral_report()?;
        let rate = model.decay_rate(&report);
        println!("rate {:?}", rate);
        let times = TimeGrid::default_for_rate(rate.map(|r| r.0)).times(false)?;
        let curve = run_curve(&model, &times)?;
        println!("{:>10} {:>10} {:>10} {:>10} {:>10}", "t", "direct", "schwarz", "gap", "tracial");
        for k in (0..times.len()).step_by(25) {
            let cell = |v: &Option<Vec<f64>>| v.as_ref().map_or("-".to_string(), |v| format!("{:.6}", v[k]));
            println!(
                "{:>10.4} {:>10.6} {:>10.6} {:>10} {:>10}",
                curve.times[k],
                curve.f_direct[k],
                curve.bound_schwarz[k],
                cell(&curve.bound_gap),
                cell(&curve.bound_tracial)
            );
        }
        for check in curve.checks() {
            println!("  {:<20} {:.2e} {}", check.name, check.residual, if check.pass { "ok" } else { "FAIL" });
        }
    }
    Ok(())
}
