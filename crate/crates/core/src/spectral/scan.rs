use rayon::prelude::*;
use serde_json::{json, Value};

use super::{
    block_average, block_average_exact, direct_average, limit_l, CesaroEstimate, LimitPolicy,
    SpectralValue,
};
use crate::error::{Error, Result};
use crate::lacunary::ModulusSequence;
use crate::modone::Angle;
use crate::scalar::Scalar;

pub const SCAN_CSV_HEADER: &str =
    "theta,repr,L,classification,truncation_k,tail_bound,avg_re,avg_im,avg_err,N";

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ScanOptions {
    /// Values of `N` for which the direct average is tabulated; each adds
    /// one row per angle. Empty means limit values only.
    pub averages: Vec<u64>,
    /// Recompute every average by the block decomposition and compare.
    pub check_blocks: bool,
}

#[derive(Clone, Debug)]
pub struct ScanRow<T> {
    pub angle: Angle,
    pub spectral: Result<SpectralValue<T>>,
    pub n: Option<u64>,
    pub average: Option<Result<CesaroEstimate<T>>>,
    pub blocks_match: Option<bool>,
}

impl<T> ScanRow<T> {
    pub fn error(&self) -> Option<&Error> {
        self.spectral
            .as_ref()
            .err()
            .or_else(|| self.average.as_ref().and_then(|a| a.as_ref().err()))
    }
}

fn blocks_agree<T: Scalar>(
    m: &ModulusSequence,
    theta: &Angle,
    direct: &CesaroEstimate<T>,
) -> Result<bool> {
    if theta.is_rational() {
        let exact = block_average_exact(m, theta, direct.n)?;
        return Ok(direct.exact.as_ref() == Some(&exact));
    }
    let block = block_average::<T>(m, theta, direct.n)?;
    let diff = (direct.average.re.clone() - block.average.re)
        .abs()
        .to_f64()
        + (direct.average.im.clone() - block.average.im)
            .abs()
            .to_f64();
    Ok(diff <= direct.err + block.err)
}

/// One row per angle (or per angle and `N`), in input order. Angles are
/// evaluated in parallel; a failing angle yields a row carrying the error.
pub fn spectrum_scan<T: Scalar>(
    m: &ModulusSequence,
    angles: &[Angle],
    policy: &LimitPolicy,
    options: &ScanOptions,
) -> Vec<ScanRow<T>> {
    let per_angle: Vec<Vec<ScanRow<T>>> = angles
        .par_iter()
        .map(|theta| {
            let spectral = limit_l::<T>(m, theta, policy);
            if options.averages.is_empty() {
                return vec![ScanRow {
                    angle: theta.clone(),
                    spectral,
                    n: None,
                    average: None,
                    blocks_match: None,
                }];
            }
            options
                .averages
                .iter()
                .map(|&n| {
                    let average = direct_average::<T>(m, theta, n);
                    let blocks_match = match (&average, options.check_blocks) {
                        (Ok(d), true) => Some(blocks_agree(m, theta, d).unwrap_or(false)),
                        _ => None,
                    };
                    ScanRow {
                        angle: theta.clone(),
                        spectral: spectral.clone(),
                        n: Some(n),
                        average: Some(average),
                        blocks_match,
                    }
                })
                .collect()
        })
        .collect();
    per_angle.into_iter().flatten().collect()
}

pub(crate) fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else if x.is_infinite() {
        if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{x:.16e}")
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// CSV with [`SCAN_CSV_HEADER`], plus a trailing `blocks_match` column when
/// any row was checked. Failed cells are left empty.
pub fn scan_rows_to_csv<T: Scalar>(rows: &[ScanRow<T>]) -> String {
    let checked = rows.iter().any(|r| r.blocks_match.is_some());
    let mut out = String::from(SCAN_CSV_HEADER);
    if checked {
        out.push_str(",blocks_match");
    }
    out.push('\n');
    for row in rows {
        let mut cells = vec![
            fmt_num(row.angle.to_rational().to_f64()),
            csv_field(&row.angle.repr()),
        ];
        match &row.spectral {
            Ok(v) => cells.extend([
                fmt_num(v.value.to_f64()),
                v.classification.as_str().to_string(),
                v.truncation_k.to_string(),
                fmt_num(v.tail_bound),
            ]),
            Err(_) => cells.extend(std::iter::repeat_n(String::new(), 4)),
        }
        match &row.average {
            Some(Ok(a)) => cells.extend([
                fmt_num(a.average.re.to_f64()),
                fmt_num(a.average.im.to_f64()),
                fmt_num(a.err),
            ]),
            _ => cells.extend(std::iter::repeat_n(String::new(), 3)),
        }
        cells.push(row.n.map(|n| n.to_string()).unwrap_or_default());
        if checked {
            cells.push(row.blocks_match.map(|b| b.to_string()).unwrap_or_default());
        }
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// The same table as a JSON array, with an `error` field on failed rows.
pub fn scan_rows_to_json<T: Scalar>(rows: &[ScanRow<T>]) -> Value {
    let num = |x: f64| Value::String(fmt_num(x));
    Value::Array(
        rows.iter()
            .map(|row| {
                let mut obj = json!({
                    "theta": num(row.angle.to_rational().to_f64()),
                    "repr": row.angle.repr(),
                    "N": row.n,
                });
                let map = obj.as_object_mut().unwrap();
                if let Ok(v) = &row.spectral {
                    map.insert("L".into(), num(v.value.to_f64()));
                    map.insert("classification".into(), json!(v.classification.as_str()));
                    map.insert("truncation_k".into(), json!(v.truncation_k));
                    map.insert("tail_bound".into(), num(v.tail_bound));
                }
                if let Some(Ok(a)) = &row.average {
                    map.insert("avg_re".into(), num(a.average.re.to_f64()));
                    map.insert("avg_im".into(), num(a.average.im.to_f64()));
                    map.insert("avg_err".into(), num(a.err));
                }
                if let Some(b) = row.blocks_match {
                    map.insert("blocks_match".into(), json!(b));
                }
                if let Some(e) = row.error() {
                    map.insert("error".into(), json!(e.to_string()));
                }
                obj
            })
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lacunary::ModulusFamily;
    use crate::spectral::Classification;

    #[test]
    fn single_zero_angle() {
        let g = ModulusSequence::new(ModulusFamily::Geometric { base: 3 }).unwrap();
        let rows = spectrum_scan::<f64>(
            &g,
            &[Angle::zero()],
            &LimitPolicy::default(),
            &ScanOptions::default(),
        );
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].spectral.as_ref().unwrap().value, 1.0);
    }

    #[test]
    fn grid_27_has_three_nonzero_rows() {
        let g = ModulusSequence::new(ModulusFamily::Geometric { base: 3 }).unwrap();
        let angles: Vec<Angle> = (0..27).map(|i| Angle::rational(i, 27).unwrap()).collect();
        let rows = spectrum_scan::<f64>(
            &g,
            &angles,
            &LimitPolicy::default(),
            &ScanOptions::default(),
        );
        let nonzero: Vec<String> = rows
            .iter()
            .filter(|r| r.spectral.as_ref().unwrap().value != 0.0)
            .map(|r| r.angle.repr())
            .collect();
        assert_eq!(nonzero, vec!["0", "1/3", "2/3"]);
        for r in &rows {
            let v = r.spectral.as_ref().unwrap();
            if v.value == 0.0 {
                assert_eq!(v.classification, Classification::ZeroExact);
            }
        }
    }

    #[test]
    fn errors_are_captured_per_row() {
        let e = ModulusSequence::new(ModulusFamily::Explicit {
            values: vec![3u32.into(), 10u32.into()],
        })
        .unwrap();
        let angles = [Angle::rational(1, 5).unwrap(), Angle::zero()];
        let options = ScanOptions {
            averages: vec![4, 100],
            check_blocks: true,
        };
        let rows = spectrum_scan::<f64>(&e, &angles, &LimitPolicy::default(), &options);
        assert_eq!(rows.len(), 4);
        assert_eq!(rows[0].blocks_match, Some(true));
        assert!(rows[1].error().is_some());
        let csv = scan_rows_to_csv(&rows);
        assert!(csv.starts_with(SCAN_CSV_HEADER));
        assert_eq!(csv.lines().count(), 5);
        assert!(scan_rows_to_json(&rows)[1].get("error").is_some());
    }
}
