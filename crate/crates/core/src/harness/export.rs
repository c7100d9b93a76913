//! Artifact assembly. Files are built in memory and written only once a
//! run has succeeded, so a failed run leaves no partial output.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::Result;
use crate::mesh::TraceRow;

pub const TRACE_HEADER: [&str; 6] = ["iter", "energy", "|S|", "V", "grad_norm", "h_estimate"];

#[derive(Debug, Default, Clone, PartialEq)]
pub struct Artifacts {
    files: Vec<(String, Vec<u8>)>,
}

impl Artifacts {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, name: &str, bytes: Vec<u8>) {
        self.files.push((name.to_string(), bytes));
    }

    pub fn add_text(&mut self, name: &str, text: String) {
        self.add(name, text.into_bytes());
    }

    pub fn add_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        self.add(name, bytes);
        Ok(())
    }

    /// Adds a CSV file from a header and rows of already formatted fields.
    pub fn add_csv<I, R, F>(&mut self, name: &str, header: &[&str], rows: I) -> Result<()>
    where
        I: IntoIterator<Item = R>,
        R: IntoIterator<Item = F>,
        F: AsRef<[u8]>,
    {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header)?;
        for r in rows {
            w.write_record(r)?;
        }
        let bytes = w.into_inner().map_err(|e| std::io::Error::other(e.to_string()))?;
        self.add(name, bytes);
        Ok(())
    }

    pub fn add_trace(&mut self, name: &str, trace: &[TraceRow]) -> Result<()> {
        self.add_csv(
            name,
            &TRACE_HEADER,
            trace.iter().map(|r| {
                [
                    r.iter.to_string(),
                    num(r.energy),
                    num(r.free_area),
                    num(r.volume),
                    num(r.grad_norm),
                    num(r.h_estimate),
                ]
            }),
        )
    }

    pub fn names(&self) -> Vec<&str> {
        self.files.iter().map(|(n, _)| n.as_str()).collect()
    }

    pub fn get(&self, name: &str) -> Option<&[u8]> {
        self.files.iter().find(|(n, _)| n == name).map(|(_, b)| b.as_slice())
    }

    /// Writes every file into `dir`, creating it if needed. On failure the
    /// files written so far are removed again.
    pub fn commit(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        for (name, bytes) in &self.files {
            let path = dir.join(name);
            if let Err(e) = fs::write(&path, bytes) {
                for p in &written {
                    let _ = fs::remove_file(p);
                }
                let _ = fs::remove_file(&path);
                return Err(e.into());
            }
            written.push(path);
        }
        Ok(written)
    }
}

/// Shortest round-trip formatting of a float.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trace_csv_has_fixed_header() {
        let mut a = Artifacts::new();
        let row = TraceRow {
            iter: 3,
            energy: 1.5,
            free_area: 2.0,
            volume: 1.0,
            grad_norm: 1e-7,
            h_estimate: -0.25,
            step: 1.0,
        };
        a.add_trace("trace.csv", &[row]).unwrap();
        let text = String::from_utf8(a.get("trace.csv").unwrap().to_vec()).unwrap();
        assert_eq!(text, "iter,energy,|S|,V,grad_norm,h_estimate\n3,1.5,2.0,1.0,1e-7,-0.25\n");
    }

    #[test]
    fn csv_fields_are_quoted_when_needed() {
        let mut a = Artifacts::new();
        a.add_csv("x.csv", &["name", "value"], [["a,b", "1"], ["say \"hi\"", "2"]]).unwrap();
        let text = String::from_utf8(a.get("x.csv").unwrap().to_vec()).unwrap();
        assert_eq!(text, "name,value\n\"a,b\",1\n\"say \"\"hi\"\"\",2\n");
    }

    #[test]
    fn commit_writes_all_files() {
        let dir = tempfile::tempdir().unwrap();
        let mut a = Artifacts::new();
        a.add_text("a.txt", "one".into());
        a.add_json("b.json", &serde_json::json!({"k": 1})).unwrap();
        let out = dir.path().join("nested");
        a.commit(&out).unwrap();
        assert_eq!(fs::read_to_string(out.join("a.txt")).unwrap(), "one");
        assert!(fs::read_to_string(out.join("b.json")).unwrap().contains("\"k\": 1"));
    }
}
