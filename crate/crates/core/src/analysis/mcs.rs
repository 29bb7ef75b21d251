use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const BUILTIN_MCS: &str = include_str!("../../presets/mcs.csv");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phy {
    /// 802.11n
    Ht,
    /// 802.11ac
    Vht,
}

impl fmt::Display for Phy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Phy::Ht => "ht",
            Phy::Vht => "vht",
        })
    }
}

impl FromStr for Phy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ht" => Ok(Phy::Ht),
            "vht" => Ok(Phy::Vht),
            other => Err(Error::Domain(format!("unknown PHY '{other}' (expected ht or vht)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McsRow {
    pub phy: Phy,
    pub mcs_index: u32,
    pub modulation: String,
    pub coding_rate: String,
    pub bandwidth_mhz: u32,
    pub guard_interval_ns: u32,
    pub phy_rate_bps: f64,
    pub min_snr_db: f64,
}

/// Single-stream rate rows grouped by PHY and channel width.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McsTable {
    pub version: String,
    rows: Vec<McsRow>,
}

impl McsTable {
    /// Parses the CSV form. A leading `# version: X` comment sets the version;
    /// other `#` lines are ignored.
    pub fn parse(text: &str) -> Result<Self> {
        let version = text
            .lines()
            .take_while(|l| l.starts_with('#'))
            .find_map(|l| l.trim_start_matches('#').trim().strip_prefix("version:"))
            .map(|v| v.trim().to_string())
            .unwrap_or_else(|| "unversioned".into());
        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let mut rows = Vec::new();
        for (i, rec) in rdr.deserialize::<McsRow>().enumerate() {
            let row = rec.map_err(|e| Error::Preset(format!("MCS table row {}: {e}", i + 1)))?;
            if !(row.phy_rate_bps.is_finite() && row.phy_rate_bps > 0.0 && row.min_snr_db.is_finite()) {
                return Err(Error::Preset(format!(
                    "MCS table row {}: rate and threshold must be finite",
                    i + 1
                )));
            }
            rows.push(row);
        }
        Self::new(version, rows)
    }

    pub fn new(version: String, mut rows: Vec<McsRow>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::Preset("MCS table is empty".into()));
        }
        rows.sort_by_key(|a| (a.phy, a.bandwidth_mhz, a.mcs_index));
        for w in rows.windows(2) {
            let (a, b) = (&w[0], &w[1]);
            if (a.phy, a.bandwidth_mhz) != (b.phy, b.bandwidth_mhz) {
                continue;
            }
            if a.mcs_index == b.mcs_index {
                return Err(Error::Preset(format!(
                    "duplicate {} {} MHz MCS {}",
                    a.phy, a.bandwidth_mhz, a.mcs_index
                )));
            }
            if b.phy_rate_bps <= a.phy_rate_bps || b.min_snr_db <= a.min_snr_db {
                return Err(Error::Preset(format!(
                    "{} {} MHz: MCS {} must have a higher rate and threshold than MCS {}",
                    a.phy, a.bandwidth_mhz, b.mcs_index, a.mcs_index
                )));
            }
        }
        Ok(McsTable { version, rows })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|e| match e {
            Error::Preset(m) => Error::Preset(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn builtin() -> Self {
        Self::parse(BUILTIN_MCS).expect("shipped MCS table is valid")
    }

    pub fn rows(&self) -> &[McsRow] {
        &self.rows
    }

    /// Rows of one PHY and channel width, in increasing rate.
    pub fn class(&self, phy: Phy, bandwidth_mhz: u32) -> Result<McsClass<'_>> {
        let start = self
            .rows
            .partition_point(|r| (r.phy, r.bandwidth_mhz) < (phy, bandwidth_mhz));
        let end = self
            .rows
            .partition_point(|r| (r.phy, r.bandwidth_mhz) <= (phy, bandwidth_mhz));
        if start == end {
            return Err(Error::Preset(format!(
                "MCS table has no {phy} rows for {bandwidth_mhz} MHz"
            )));
        }
        Ok(McsClass {
            rows: &self.rows[start..end],
        })
    }
}

/// Rows sharing one PHY and channel width.
#[derive(Debug, Clone, Copy)]
pub struct McsClass<'a> {
    rows: &'a [McsRow],
}

impl<'a> McsClass<'a> {
    pub fn rows(&self) -> &'a [McsRow] {
        self.rows
    }

    pub fn top_rate_bps(&self) -> f64 {
        self.rows[self.rows.len() - 1].phy_rate_bps
    }

    /// Highest row whose threshold the effective SNR meets.
    pub fn select(&self, esnr_db: f64) -> Option<&'a McsRow> {
        let n = self.rows.partition_point(|r| r.min_snr_db <= esnr_db);
        n.checked_sub(1).map(|i| &self.rows[i])
    }
}

/// PHY rate for `n_streams` streams all at the MCS the effective SNR allows;
/// zero when the link is below the lowest threshold.
pub fn map_rate(esnr_db: f64, class: McsClass<'_>, n_streams: usize) -> f64 {
    class.select(esnr_db).map_or(0.0, |r| r.phy_rate_bps * n_streams as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_tops() {
        let t = McsTable::builtin();
        assert_eq!(t.version, "1");
        assert_eq!(t.class(Phy::Vht, 40).unwrap().top_rate_bps(), 200e6);
        assert_eq!(t.class(Phy::Vht, 20).unwrap().top_rate_bps(), 86.7e6);
        assert_eq!(t.class(Phy::Ht, 40).unwrap().top_rate_bps(), 150e6);
        assert_eq!(t.class(Phy::Ht, 20).unwrap().top_rate_bps(), 72.2e6);
        assert!(t.class(Phy::Ht, 80).is_err());
    }

    #[test]
    fn rate_mapping() {
        let t = McsTable::builtin();
        let c = t.class(Phy::Vht, 40).unwrap();
        assert_eq!(map_rate(-5.0, c, 1), 0.0);
        assert_eq!(map_rate(100.0, c, 1), 200e6);
        assert_eq!(map_rate(2.0, c, 1), 15e6);
        let one = map_rate(19.0, c, 1);
        assert_eq!(one, 120e6);
        assert_eq!(map_rate(19.0, c, 2), 2.0 * one);
    }

    #[test]
    fn rejects_non_monotone_rows() {
        let text = "phy,mcs_index,modulation,coding_rate,bandwidth_mhz,guard_interval_ns,phy_rate_bps,min_snr_db\n\
                    ht,0,BPSK,1/2,20,400,7200000,5\n\
                    ht,1,QPSK,1/2,20,400,14400000,2\n";
        assert!(McsTable::parse(text).is_err());
        assert!(McsTable::parse("phy,mcs_index\n").is_err());
        assert!(McsTable::parse("garbage\n\"unterminated").is_err());
    }
}
