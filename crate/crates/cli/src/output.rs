//! Ephemeris CSV and report writers.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use zeipel::propagator::Ephemeris;

use crate::error::CliError;

pub const EPHEMERIS_HEADER: &str = "t,a,e,i,raan,argp,M,x,y,z,vx,vy,vz,L,G,H,l,g,h";

/// One `{:.16e}` field per column; Delaunay columns are `nan` where the
/// state is singular.
pub fn ephemeris_csv(eph: &Ephemeris) -> String {
    let mut out = String::with_capacity(eph.len() * 19 * 24);
    out.push_str(EPHEMERIS_HEADER);
    out.push('\n');
    for s in eph.samples() {
        let d = s.delaunay.map_or([f64::NAN; 6], |d| d.to_array());
        let row = std::iter::once(s.t)
            .chain(s.kep.to_array())
            .chain(s.cart.to_array())
            .chain(d);
        let mut first = true;
        for v in row {
            if !first {
                out.push(',');
            }
            first = false;
            let _ = write!(out, "{v:.16e}");
        }
        out.push('\n');
    }
    out
}

pub fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, CliError> {
    fs::create_dir_all(dir).map_err(|source| CliError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|source| CliError::Io {
        path: path.clone(),
        source,
    })?;
    Ok(path)
}

/// Plain `key value` lines followed by whitespace-separated tables.
#[derive(Debug, Default)]
pub struct Report {
    text: String,
}

impl Report {
    pub fn value(&mut self, key: &str, v: f64) {
        let _ = writeln!(self.text, "{key:<28} {v:.6e}");
    }

    pub fn table(&mut self, title: &str, header: &[&str], rows: &[Vec<f64>]) {
        let _ = writeln!(self.text, "\n# {title}");
        let _ = writeln!(self.text, "{}", header.join(" "));
        for r in rows {
            let cells: Vec<String> = r.iter().map(|v| format!("{v:.6e}")).collect();
            let _ = writeln!(self.text, "{}", cells.join(" "));
        }
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }
}
