//! CSV, SVG and JSON result files.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dynamics::DetailedBalanceReport;
use crate::error::Result;
use crate::fidelity::{Check, FidelityCurve};
use crate::spectral::SpectralReport;

use super::config::ModelConfig;

pub const CSV_COLUMNS: [&str; 7] = [
    "t",
    "f_direct",
    "f_correlation",
    "bound_schwarz",
    "bound_gap",
    "bound_tracial",
    "floor",
];

/// Shortest decimal that round-trips to the same double.
fn num(x: f64) -> String {
    format!("{x}")
}

fn opt(values: &Option<Vec<f64>>, k: usize) -> String {
    values.as_ref().map(|v| num(v[k])).unwrap_or_default()
}

pub fn curve_csv(curve: &FidelityCurve) -> Result<String> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(CSV_COLUMNS)?;
    for k in 0..curve.times.len() {
        writer.write_record([
            num(curve.times[k]),
            num(curve.f_direct[k]),
            num(curve.f_correlation[k]),
            num(curve.bound_schwarz[k]),
            opt(&curve.bound_gap, k),
            opt(&curve.bound_tracial, k),
            num(curve.floor),
        ])?;
    }
    let bytes = writer.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Line chart of the fidelity and its bounds against time.
pub fn curve_svg(curve: &FidelityCurve) -> String {
    const W: f64 = 720.0;
    const H: f64 = 440.0;
    const LEFT: f64 = 60.0;
    const RIGHT: f64 = 170.0;
    const TOP: f64 = 20.0;
    const BOTTOM: f64 = 50.0;
    let t_max = curve.times.last().copied().unwrap_or(1.0).max(f64::MIN_POSITIVE);
    let y_max = curve
        .bound_schwarz
        .iter()
        .chain(curve.bound_gap.iter().flatten())
        .chain(curve.f_direct.iter())
        .fold(1.0f64, |m, &v| m.max(v));
    let px = |t: f64| LEFT + (W - LEFT - RIGHT) * t / t_max;
    let py = |f: f64| TOP + (H - TOP - BOTTOM) * (1.0 - f / y_max);

    let mut out = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\" font-family=\"sans-serif\" font-size=\"12\">\n"
    );
    out.push_str(&format!("<rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>\n"));
    let (x0, x1, y0, y1) = (px(0.0), px(t_max), py(0.0), py(y_max));
    out.push_str(&format!(
        "<path d=\"M{x0:.2} {y1:.2} L{x0:.2} {y0:.2} L{x1:.2} {y0:.2}\" stroke=\"black\" fill=\"none\"/>\n"
    ));
    for k in 0..=4 {
        let f = y_max * k as f64 / 4.0;
        let t = t_max * k as f64 / 4.0;
        out.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">{f:.2}</text>\n",
            x0 - 6.0,
            py(f) + 4.0
        ));
        out.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{t:.3}</text>\n",
            px(t),
            y0 + 18.0
        ));
    }
    out.push_str(&format!(
        "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">t</text>\n",
        (x0 + x1) / 2.0,
        H - 10.0
    ));

    let floor = vec![curve.floor; curve.times.len()];
    let series: Vec<(&str, &str, &[f64], &str)> = [
        Some(("f_direct", "#1f77b4", curve.f_direct.as_slice(), "")),
        Some(("bound_schwarz", "#ff7f0e", curve.bound_schwarz.as_slice(), "6 3")),
        curve.bound_gap.as_deref().map(|v| ("bound_gap", "#2ca02c", v, "2 3")),
        curve.bound_tracial.as_deref().map(|v| ("bound_tracial", "#d62728", v, "8 2 2 2")),
        Some(("floor", "#7f7f7f", floor.as_slice(), "1 4")),
    ]
    .into_iter()
    .flatten()
    .collect();
    for (k, (name, color, values, dash)) in series.iter().enumerate() {
        let points: Vec<String> = curve
            .times
            .iter()
            .zip(values.iter())
            .map(|(&t, &f)| format!("{:.2},{:.2}", px(t), py(f)))
            .collect();
        let dash_attr = if dash.is_empty() {
            String::new()
        } else {
            format!(" stroke-dasharray=\"{dash}\"")
        };
        out.push_str(&format!(
            "<polyline points=\"{}\" stroke=\"{color}\" stroke-width=\"1.5\" fill=\"none\"{dash_attr}/>\n",
            points.join(" ")
        ));
        let ly = TOP + 16.0 + 18.0 * k as f64;
        out.push_str(&format!(
            "<line x1=\"{:.2}\" y1=\"{ly:.2}\" x2=\"{:.2}\" y2=\"{ly:.2}\" stroke=\"{color}\" stroke-width=\"1.5\"{dash_attr}/>\n",
            W - RIGHT + 15.0,
            W - RIGHT + 45.0
        ));
        out.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{:.2}\">{name}</text>\n",
            W - RIGHT + 52.0,
            ly + 4.0
        ));
    }
    out.push_str("</svg>\n");
    out
}

/// Everything a run produced, with enough context to reproduce it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultEnvelope {
    pub version: String,
    pub seed: u64,
    pub config_sha256: String,
    pub config: ModelConfig,
    pub spectral: Option<SpectralReport>,
    pub detailed_balance: Option<DetailedBalanceReport>,
    pub curve: Option<FidelityCurve>,
    pub decay_fit: Option<f64>,
    pub half_life: Option<f64>,
    pub checks: Vec<Check>,
    pub warnings: Vec<String>,
}

impl ResultEnvelope {
    pub fn new(config: &ModelConfig, seed: u64) -> Self {
        Self {
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            config_sha256: config_hash(config),
            config: config.clone(),
            spectral: None,
            detailed_balance: None,
            curve: None,
            decay_fit: None,
            half_life: None,
            checks: Vec::new(),
            warnings: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn first_failure(&self) -> Option<&Check> {
        self.checks.iter().find(|c| !c.pass)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("envelope serializes") + "\n"
    }
}

/// SHA-256 of the compact JSON form of the config.
pub fn config_hash(config: &ModelConfig) -> String {
    let text = serde_json::to_string(config).expect("config serializes");
    hex::encode(Sha256::digest(text.as_bytes()))
}

/// Fixed-width residual table.
pub fn check_table(checks: &[Check]) -> String {
    let width = checks.iter().map(|c| c.name.len()).max().unwrap_or(5).max(5);
    let mut out = format!("{:<width$}  {:>12}  {:>10}  result\n", "check", "residual", "tol");
    for c in checks {
        out.push_str(&format!(
            "{:<width$}  {:>12.3e}  {:>10.1e}  {}\n",
            c.name,
            c.residual,
            c.tol,
            if c.pass { "pass" } else { "FAIL" }
        ));
    }
    out
}
