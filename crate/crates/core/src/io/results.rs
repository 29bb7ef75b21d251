use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Version of this crate, recorded in every result file.
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

const MAGIC: &str = "surfmimo results";

/// A row type of some result file.
pub trait ResultRow: Serialize + DeserializeOwned {
    const KIND: &'static str;
    const COLUMNS: &'static [&'static str];
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Metadata {
    pub kind: String,
    pub tool_version: String,
    pub config_hash: String,
    pub seed: u64,
    /// Run-specific facts such as the band or summary figures.
    pub extra: BTreeMap<String, String>,
}

impl Metadata {
    pub fn new<R: ResultRow>(config_hash: String, seed: u64) -> Self {
        Metadata {
            kind: R::KIND.into(),
            tool_version: TOOL_VERSION.into(),
            config_hash,
            seed,
            extra: BTreeMap::new(),
        }
    }

    pub fn with(mut self, key: &str, value: impl ToString) -> Self {
        self.extra.insert(key.into(), value.to_string());
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultSet<R> {
    pub metadata: Metadata,
    pub rows: Vec<R>,
}

/// SHA-256 over the JSON form of every input that affects a run.
pub fn config_hash<T: Serialize + ?Sized>(inputs: &T) -> String {
    let bytes = serde_json::to_vec(inputs).expect("inputs serialize to JSON");
    Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn valid_meta_text(s: &str) -> bool {
    !s.contains(['\n', '\r'])
}

impl<R: ResultRow> ResultSet<R> {
    pub fn new(metadata: Metadata, rows: Vec<R>) -> Self {
        ResultSet { metadata, rows }
    }

    /// Writes the comment header, the column header and every row.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        let m = &self.metadata;
        let fields = [
            ("kind", m.kind.as_str()),
            ("tool_version", m.tool_version.as_str()),
            ("config_hash", m.config_hash.as_str()),
        ];
        let ctx = |e: std::io::Error| Error::format("result file", e);
        writeln!(w, "# {MAGIC}").map_err(ctx)?;
        for (k, v) in fields {
            writeln!(w, "# {k}: {v}").map_err(ctx)?;
        }
        writeln!(w, "# seed: {}", m.seed).map_err(ctx)?;
        for (k, v) in &m.extra {
            if !valid_meta_text(k) || !valid_meta_text(v) || k.contains(':') || k.trim() != k || k.is_empty() {
                return Err(Error::format("result metadata", format!("unwritable entry '{k}'")));
            }
            writeln!(w, "# {k}: {v}").map_err(ctx)?;
        }
        let mut out = csv::WriterBuilder::new().has_headers(false).from_writer(w);
        out.write_record(R::COLUMNS)
            .map_err(|e| Error::format("result file", e))?;
        for r in &self.rows {
            out.serialize(r).map_err(|e| Error::format("result row", e))?;
        }
        out.flush().map_err(ctx)?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_to(&mut buf)?;
        Ok(String::from_utf8(buf).expect("CSV output is UTF-8"))
    }

    /// Writes the set to `path`.
    pub fn write(&self, path: &Path) -> Result<()> {
        let text = self.to_csv_string()?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&bytes).map_err(|e| match e {
            Error::Format { context, message } => Error::Format {
                context: format!("{}: {context}", path.display()),
                message,
            },
            other => other,
        })
    }

    /// Parses a result file of this row type.
    pub fn parse(bytes: &[u8]) -> Result<Self> {
        let text = std::str::from_utf8(bytes).map_err(|e| Error::format("result file", e))?;
        let mut lines = text.split_inclusive('\n');
        let mut header_len = 0;
        let mut meta = BTreeMap::new();
        let mut seen_magic = false;
        for line in lines.by_ref() {
            let Some(body) = line.strip_prefix('#') else { break };
            header_len += line.len();
            let body = body.trim();
            if !seen_magic {
                if body != MAGIC {
                    return Err(Error::format("result file", "missing header line"));
                }
                seen_magic = true;
                continue;
            }
            let (k, v) = body
                .split_once(':')
                .ok_or_else(|| Error::format("result metadata", format!("malformed line '{body}'")))?;
            if meta.insert(k.trim().to_string(), v.trim().to_string()).is_some() {
                return Err(Error::format(
                    "result metadata",
                    format!("duplicate key '{}'", k.trim()),
                ));
            }
        }
        if !seen_magic {
            return Err(Error::format("result file", "missing header line"));
        }
        let mut take = |k: &str| {
            meta.remove(k)
                .ok_or_else(|| Error::format("result metadata", format!("missing '{k}'")))
        };
        let kind = take("kind")?;
        if kind != R::KIND {
            return Err(Error::format(
                "result file",
                format!("holds '{kind}' rows, expected '{}'", R::KIND),
            ));
        }
        let tool_version = take("tool_version")?;
        let config_hash = take("config_hash")?;
        let seed = take("seed")?
            .parse()
            .map_err(|e| Error::format("result metadata", format!("seed: {e}")))?;
        let metadata = Metadata {
            kind,
            tool_version,
            config_hash,
            seed,
            extra: meta,
        };

        let mut rdr = csv::ReaderBuilder::new().from_reader(&text.as_bytes()[header_len..]);
        let headers = rdr.headers().map_err(|e| Error::format("result columns", e))?;
        if headers.iter().ne(R::COLUMNS.iter().copied()) {
            return Err(Error::format(
                "result columns",
                format!("expected {}", R::COLUMNS.join(",")),
            ));
        }
        let rows = rdr
            .deserialize()
            .enumerate()
            .map(|(i, r)| r.map_err(|e| Error::format(format!("result row {}", i + 1), e)))
            .collect::<Result<Vec<R>>>()?;
        Ok(ResultSet { metadata, rows })
    }
}
