//! On-disk expansion cache.
//!
//! An entry is a text file: a five-line header followed by one
//! `exponent decimal` line per nonzero coefficient.
//!
//! ```text
//! qlimits-cache 1
//! key -1*[4:2,8:2,32:6,64:-4]
//! valuation -1
//! precision 10000
//! digest <sha256 of the body>
//! -1 -1
//! 3 2
//! ```

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use num_bigint::BigInt;
use qlimits_core::QSeries;
use sha2::{Digest, Sha256};

pub const FORMAT_VERSION: u32 = 1;
pub const ENV_VAR: &str = "QLIMITS_CACHE_DIR";
pub const DEFAULT_DIR: &str = ".qlimits-cache";

/// What a lookup found.
#[derive(Clone, Debug, PartialEq)]
pub enum Lookup {
    Hit(QSeries),
    /// Stored at lower precision than requested.
    TooShort(i64),
    Missing,
    Corrupt(String),
}

#[derive(Clone, Debug)]
pub struct Cache {
    dir: PathBuf,
}

fn body(series: &QSeries) -> String {
    let mut out = String::new();
    for (e, c) in series.terms() {
        out.push_str(&format!("{e} {c}\n"));
    }
    out
}

fn digest(body: &str) -> String {
    hex::encode(Sha256::digest(body.as_bytes()))
}

impl Cache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Cache { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// File holding `key`.
    pub fn path_for(&self, key: &str) -> PathBuf {
        let h = digest(key);
        self.dir.join(format!("{}.qs", &h[..32]))
    }

    /// Writes through a temporary file renamed into place.
    pub fn store(&self, key: &str, series: &QSeries) -> io::Result<PathBuf> {
        fs::create_dir_all(&self.dir)?;
        let body = body(series);
        let mut tmp = tempfile::NamedTempFile::new_in(&self.dir)?;
        write!(
            tmp,
            "qlimits-cache {FORMAT_VERSION}\nkey {key}\nvaluation {}\nprecision {}\ndigest {}\n{body}",
            series.valuation(),
            series.precision(),
            digest(&body)
        )?;
        tmp.flush()?;
        let path = self.path_for(key);
        tmp.persist(&path).map_err(|e| e.error)?;
        Ok(path)
    }

    /// Serves any stored entry of precision at least `precision`, truncated.
    pub fn load(&self, key: &str, precision: i64) -> Lookup {
        let text = match fs::read_to_string(self.path_for(key)) {
            Ok(t) => t,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Lookup::Missing,
            Err(e) => return Lookup::Corrupt(e.to_string()),
        };
        match parse(&text, key) {
            Ok(s) if s.precision() >= precision => Lookup::Hit(s.truncate(precision)),
            Ok(s) => Lookup::TooShort(s.precision()),
            Err(msg) => Lookup::Corrupt(msg),
        }
    }

    /// Loads or computes and stores. Problems with the cache are reported
    /// on stderr and never fatal.
    pub fn get_or_compute(
        &self,
        key: &str,
        precision: i64,
        compute: impl FnOnce(i64) -> QSeries,
    ) -> QSeries {
        match self.load(key, precision) {
            Lookup::Hit(s) => return s,
            Lookup::Corrupt(msg) => {
                eprintln!(
                    "warning: cache entry {} is corrupt ({msg}); recomputing",
                    self.path_for(key).display()
                );
            }
            Lookup::TooShort(_) | Lookup::Missing => {}
        }
        let s = compute(precision);
        if let Err(e) = self.store(key, &s) {
            eprintln!("warning: could not write cache in {}: {e}", self.dir.display());
        }
        s
    }
}

fn header<'a>(lines: &mut impl Iterator<Item = &'a str>, name: &str) -> Result<&'a str, String> {
    let line = lines.next().ok_or(format!("missing {name}"))?;
    line.strip_prefix(name)
        .and_then(|r| r.strip_prefix(' '))
        .ok_or(format!("bad {name} line"))
}

fn parse(text: &str, key: &str) -> Result<QSeries, String> {
    let mut lines = text.split_inclusive('\n');
    let mut field = |name: &str| header(&mut lines.by_ref().map(|l| l.trim_end_matches('\n')), name);
    let version = field("qlimits-cache")?;
    if version != FORMAT_VERSION.to_string() {
        return Err(format!("format version {version}"));
    }
    if field("key")? != key {
        return Err("key mismatch".into());
    }
    let valuation: i64 = field("valuation")?.parse().map_err(|_| "bad valuation")?;
    let precision: i64 = field("precision")?.parse().map_err(|_| "bad precision")?;
    let expected = field("digest")?.to_string();
    let body: String = lines.collect();
    if digest(&body) != expected {
        return Err("digest mismatch".into());
    }
    if precision < valuation {
        return Err("precision below valuation".into());
    }
    let mut coeffs = vec![BigInt::ZERO; (precision - valuation) as usize];
    for line in body.lines() {
        let (e, c) = line.split_once(' ').ok_or("bad coefficient line")?;
        let e: i64 = e.parse().map_err(|_| "bad exponent")?;
        let c: BigInt = c.parse().map_err(|_| "bad coefficient")?;
        if e < valuation || e >= precision {
            return Err(format!("exponent {e} out of range"));
        }
        coeffs[(e - valuation) as usize] = c;
    }
    Ok(QSeries::new(valuation, coeffs))
}
