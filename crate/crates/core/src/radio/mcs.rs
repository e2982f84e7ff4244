//! CQI to MCS mapping table.

use std::io::Read;
use std::path::Path;

use serde::Deserialize;

use crate::{Error, Real, Result};

const DEFAULT_TABLE: &str = include_str!("mcs_table.csv");

/// One non-outage CQI row.
#[derive(Debug, Clone, PartialEq)]
pub struct McsRow<T> {
    pub cqi: u8,
    pub modulation: String,
    pub code_rate: String,
    /// bit/s/Hz
    pub spectral_efficiency: T,
    /// Lower SINR threshold of the row, dB.
    pub sinr_db: T,
}

/// Ordered CQI rows. CQI 0 (outage) is implicit: everything below the first
/// row's threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct McsTable<T> {
    rows: Vec<McsRow<T>>,
}

#[derive(Debug, Deserialize)]
struct CsvRow {
    cqi: u8,
    modulation: String,
    code_rate: Option<String>,
    spectral_efficiency: Option<f64>,
    sinr_db: Option<f64>,
}

impl<T: Real> McsTable<T> {
    pub fn new(rows: Vec<McsRow<T>>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidArgument("MCS table has no rows".into()));
        }
        for w in rows.windows(2) {
            if w[1].sinr_db <= w[0].sinr_db {
                return Err(Error::InvalidArgument(format!(
                    "SINR thresholds not strictly increasing at CQI {}",
                    w[1].cqi
                )));
            }
            if w[1].spectral_efficiency <= w[0].spectral_efficiency {
                return Err(Error::InvalidArgument(format!(
                    "spectral efficiencies not strictly increasing at CQI {}",
                    w[1].cqi
                )));
            }
        }
        if rows[0].spectral_efficiency <= T::zero() {
            return Err(Error::InvalidArgument("spectral efficiency must be positive".into()));
        }
        Ok(Self { rows })
    }

    /// Reads a table with columns `cqi,modulation,code_rate,spectral_efficiency,sinr_db`.
    /// A CQI 0 row, if present, must be the outage row and carries no values.
    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let mut rows = Vec::new();
        for rec in rdr.deserialize::<CsvRow>() {
            let rec = rec?;
            match (rec.cqi, rec.spectral_efficiency, rec.sinr_db) {
                (0, None, None) => continue,
                (0, _, _) => {
                    return Err(Error::InvalidArgument(
                        "CQI 0 is the outage row and carries no threshold or efficiency".into(),
                    ))
                }
                (cqi, Some(eff), Some(sinr)) => rows.push(McsRow {
                    cqi,
                    modulation: rec.modulation,
                    code_rate: rec.code_rate.unwrap_or_default(),
                    spectral_efficiency: T::of(eff),
                    sinr_db: T::of(sinr),
                }),
                (cqi, _, _) => {
                    return Err(Error::InvalidArgument(format!(
                        "CQI {cqi} is missing its efficiency or SINR threshold"
                    )))
                }
            }
        }
        Self::new(rows)
    }

    pub fn from_csv_path<P: AsRef<Path>>(path: P) -> Result<Self> {
        Self::from_csv_reader(std::fs::File::open(path)?)
    }

    pub fn rows(&self) -> &[McsRow<T>] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

impl<T: Real> Default for McsTable<T> {
    fn default() -> Self {
        Self::from_csv_reader(DEFAULT_TABLE.as_bytes()).expect("embedded MCS table is valid")
    }
}
