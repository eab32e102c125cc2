use serde_json::{json, Value};

use super::config::{ExperimentConfig, Format};
use super::CliError;
use crate::lacunary::{enumerate_stream, ModulusSequence};
use crate::measures::{
    all_eta_words, dirichlet_check, dirichlet_rows_to_csv, dirichlet_rows_to_json, parse_eta,
    select_subsequence, theta_of_eta, wiener_average, wiener_average_mc, wiener_rows_to_csv,
    wiener_rows_to_json, Mode,
};
use crate::modone::Angle;
use crate::scalar::{Hp, Scalar};
use crate::spectral::{scan_rows_to_csv, scan_rows_to_json, spectrum_scan, ScanOptions};

/// Rendered output plus the reason the run should exit non-zero, if any.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub text: String,
    pub failure: Option<String>,
}

impl Report {
    fn ok(text: String) -> Self {
        Report {
            text,
            failure: None,
        }
    }
}

macro_rules! with_scalar {
    ($cfg:expr, $f:ident) => {
        match $cfg.precision {
            24 => $f::<f32>($cfg),
            53 => $f::<f64>($cfg),
            128 => $f::<Hp<128>>($cfg),
            256 => $f::<Hp<256>>($cfg),
            512 => $f::<Hp<512>>($cfg),
            p => Err(CliError::Config(format!("unsupported precision {p}"))),
        }
    };
}

fn json_text(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values always serialise");
    s.push('\n');
    s
}

fn moduli(cfg: &ExperimentConfig) -> Result<ModulusSequence, CliError> {
    Ok(ModulusSequence::new(cfg.family()?)?)
}

pub fn cmd_gen(cfg: &ExperimentConfig) -> Result<Report, CliError> {
    let m = moduli(cfg)?;
    let n = cfg.n.ok_or_else(|| CliError::Config("missing n".into()))?;
    let values = enumerate_stream(&m, n)?;
    let text = match cfg.format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["n", "s_n"]).map_err(csv_err)?;
            for (i, s) in values.iter().enumerate() {
                w.write_record([(i + 1).to_string(), s.to_string()])
                    .map_err(csv_err)?;
            }
            String::from_utf8(w.into_inner().map_err(|e| CliError::Io(e.into_error()))?)
                .expect("CSV output is UTF-8")
        }
        Format::Json => json_text(&Value::Array(
            values
                .iter()
                .enumerate()
                .map(|(i, s)| json!({"n": i + 1, "s_n": s.to_string()}))
                .collect(),
        )),
    };
    Ok(Report::ok(text))
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::Io(std::io::Error::other(e))
}

fn scan_angles(cfg: &ExperimentConfig, m: &ModulusSequence) -> Result<Vec<Angle>, CliError> {
    let mut angles = Vec::new();
    for a in &cfg.angles {
        angles.push(a.parse::<Angle>()?);
    }
    if let Some(q) = cfg.grid {
        for i in 0..q {
            angles.push(Angle::rational(i, q)?);
        }
    }
    if cfg.eta_all {
        let k = cfg.require_k()?;
        if k > 20 {
            return Err(CliError::Config(
                "eta_all enumerates 2^K words; K must be <= 20".into(),
            ));
        }
        let sel = select_subsequence(m, cfg.mode.unwrap_or(Mode::Prop5), k, cfg.window)?;
        for w in all_eta_words(k) {
            angles.push(theta_of_eta(m, &w, &sel)?.theta);
        }
    }
    if angles.is_empty() {
        return Err(CliError::Config(
            "no angles: give angles, grid or eta_all".into(),
        ));
    }
    Ok(angles)
}

fn scan_with<T: Scalar>(cfg: &ExperimentConfig) -> Result<Report, CliError> {
    let m = moduli(cfg)?;
    let angles = scan_angles(cfg, &m)?;
    let options = ScanOptions {
        averages: cfg.big_n.clone(),
        check_blocks: cfg.check_blocks,
    };
    let rows = spectrum_scan::<T>(&m, &angles, &cfg.policy(), &options);
    let text = match cfg.format {
        Format::Csv => scan_rows_to_csv(&rows),
        Format::Json => json_text(&scan_rows_to_json(&rows)),
    };
    let mismatches = rows
        .iter()
        .filter(|r| r.blocks_match == Some(false))
        .count();
    let failed: Vec<String> = rows
        .iter()
        .filter_map(|r| r.error().map(|e| format!("{}: {e}", r.angle.repr())))
        .collect();
    let failure = if mismatches > 0 {
        Some(format!(
            "{mismatches} row(s) where block and direct sums differ"
        ))
    } else if !failed.is_empty() {
        Some(format!(
            "{} row(s) failed; first: {}",
            failed.len(),
            failed[0]
        ))
    } else {
        None
    };
    Ok(Report { text, failure })
}

pub fn cmd_scan(cfg: &ExperimentConfig) -> Result<Report, CliError> {
    with_scalar!(cfg, scan_with)
}

fn measure_with<T: Scalar>(cfg: &ExperimentConfig) -> Result<Report, CliError> {
    let m = moduli(cfg)?;
    let k = cfg.require_k()?;
    if cfg.big_n.is_empty() {
        return Err(CliError::Config("missing N".into()));
    }
    let sel = select_subsequence(&m, cfg.mode.unwrap_or(Mode::Prop5), k, cfg.window)?;
    let mut rows = Vec::new();
    for &n in &cfg.big_n {
        rows.push(wiener_average::<T>(&m, &sel, n, k)?);
        if let (Some(samples), Some(seed)) = (cfg.samples, cfg.seed) {
            rows.push(wiener_average_mc::<T>(&m, &sel, n, k, samples, seed)?);
        }
    }
    let text = match cfg.format {
        Format::Csv => wiener_rows_to_csv(&rows),
        Format::Json => json_text(&json!({
            "selection": sel,
            "rows": wiener_rows_to_json(&rows),
        })),
    };
    Ok(Report::ok(text))
}

pub fn cmd_measure(cfg: &ExperimentConfig) -> Result<Report, CliError> {
    with_scalar!(cfg, measure_with)
}

fn dirichlet_with<T: Scalar>(cfg: &ExperimentConfig) -> Result<Report, CliError> {
    let m = moduli(cfg)?;
    let k = cfg.require_k()?;
    let eta = match &cfg.eta {
        Some(s) => parse_eta(s)?,
        None => vec![true; k],
    };
    if eta.len() > k {
        return Err(CliError::Config(format!(
            "eta has {} bits but K = {k}",
            eta.len()
        )));
    }
    let nmax = cfg.nmax.unwrap_or(k);
    let sel = select_subsequence(&m, cfg.mode.unwrap_or(Mode::Thm6), k, cfg.window)?;
    let point = theta_of_eta(&m, &eta, &sel)?;
    let rows = dirichlet_check::<T>(&m, &point, nmax, &cfg.policy())?;
    let text = match cfg.format {
        Format::Csv => dirichlet_rows_to_csv(&rows),
        Format::Json => json_text(&json!({
            "selection": sel,
            "theta": point.theta.repr(),
            "rows": dirichlet_rows_to_json(&rows),
        })),
    };
    let broken: Vec<usize> = rows
        .iter()
        .filter(|r| !r.bound_holds())
        .map(|r| r.n)
        .collect();
    let failure =
        (!broken.is_empty()).then(|| format!("tail or lower bound violated at n = {broken:?}"));
    Ok(Report { text, failure })
}

pub fn cmd_dirichlet(cfg: &ExperimentConfig) -> Result<Report, CliError> {
    with_scalar!(cfg, dirichlet_with)
}
