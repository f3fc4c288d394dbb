//! Run archive: text checkpoints, a content manifest (no timestamps), and a
//! separate `run-<command>.json` holding wall-clock times.
//!
//! Checkpoint format, one item per line:
//!
//! ```text
//! dualpath-checkpoint v1
//! model dualpath
//! seed 42
//! config_hash <hex>
//! layer intuition.enc 29 4
//! w <fan_out * fan_in row-major values>
//! b <fan_out values>
//! ...
//! end
//! ```
//!
//! Values use the shortest representation that parses back to the same
//! `f64`, so a save/load round trip is exact.

use std::fmt::Write as _;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::models::{DeliberationPath, DirectMlp, DualPathModel, IntuitionPath, N_STATES};
use crate::nnkit::DenseLayer;

use super::ReportError;

pub const CHECKPOINT_MAGIC: &str = "dualpath-checkpoint v1";

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub model: String,
    pub seed: u64,
    pub config_hash: String,
    pub layers: Vec<(String, DenseLayer)>,
}

fn join(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

fn bad(line: usize, message: impl Into<String>) -> ReportError {
    ReportError::Checkpoint {
        line,
        message: message.into(),
    }
}

impl Checkpoint {
    pub fn from_dualpath(m: &DualPathModel, seed: u64, config_hash: &str) -> Self {
        let mut layers = vec![
            ("intuition.enc".to_string(), m.intuition.enc.clone()),
            ("intuition.out".to_string(), m.intuition.out.clone()),
            ("deliberation.enc".to_string(), m.deliberation.enc.clone()),
        ];
        for (k, c) in m.deliberation.candidates.iter().enumerate() {
            layers.push((format!("deliberation.state{}", k + 1), c.clone()));
        }
        layers.push(("deliberation.gate".into(), m.deliberation.gate.clone()));
        layers.push(("deliberation.out".into(), m.deliberation.out.clone()));
        Checkpoint {
            model: "dualpath".into(),
            seed,
            config_hash: config_hash.into(),
            layers,
        }
    }

    pub fn from_direct(m: &DirectMlp, seed: u64, config_hash: &str) -> Self {
        Checkpoint {
            model: "direct".into(),
            seed,
            config_hash: config_hash.into(),
            layers: vec![
                ("direct.hidden".into(), m.hidden.clone()),
                ("direct.out".into(), m.out.clone()),
            ],
        }
    }

    fn take(&self, name: &str, like: &DenseLayer) -> Result<DenseLayer, ReportError> {
        let layer = self
            .layers
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, l)| l.clone())
            .ok_or_else(|| bad(0, format!("missing layer {name}")))?;
        if (layer.fan_in, layer.fan_out) != (like.fan_in, like.fan_out) {
            return Err(bad(
                0,
                format!(
                    "layer {name} is {}x{}, expected {}x{}",
                    layer.fan_in, layer.fan_out, like.fan_in, like.fan_out
                ),
            ));
        }
        Ok(layer)
    }

    pub fn to_dualpath(&self) -> Result<DualPathModel, ReportError> {
        if self.model != "dualpath" {
            return Err(bad(2, format!("expected a dualpath checkpoint, found {}", self.model)));
        }
        let shape = DualPathModel::build(0);
        let candidates = (0..N_STATES)
            .map(|k| self.take(&format!("deliberation.state{}", k + 1), &shape.deliberation.candidates[k]))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(DualPathModel {
            intuition: IntuitionPath {
                enc: self.take("intuition.enc", &shape.intuition.enc)?,
                out: self.take("intuition.out", &shape.intuition.out)?,
            },
            deliberation: DeliberationPath {
                enc: self.take("deliberation.enc", &shape.deliberation.enc)?,
                candidates,
                gate: self.take("deliberation.gate", &shape.deliberation.gate)?,
                out: self.take("deliberation.out", &shape.deliberation.out)?,
            },
        })
    }

    pub fn to_direct(&self) -> Result<DirectMlp, ReportError> {
        if self.model != "direct" {
            return Err(bad(2, format!("expected a direct checkpoint, found {}", self.model)));
        }
        let shape = DirectMlp::build(0);
        Ok(DirectMlp {
            hidden: self.take("direct.hidden", &shape.hidden)?,
            out: self.take("direct.out", &shape.out)?,
        })
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{CHECKPOINT_MAGIC}");
        let _ = writeln!(s, "model {}", self.model);
        let _ = writeln!(s, "seed {}", self.seed);
        let _ = writeln!(s, "config_hash {}", self.config_hash);
        for (name, l) in &self.layers {
            let _ = writeln!(s, "layer {name} {} {}", l.fan_in, l.fan_out);
            let _ = writeln!(s, "w {}", join(&l.weights));
            let _ = writeln!(s, "b {}", join(&l.biases));
        }
        s.push_str("end\n");
        s
    }

    pub fn from_text(text: &str) -> Result<Self, ReportError> {
        let lines: Vec<&str> = text.lines().collect();
        let field = |i: usize, key: &str| -> Result<&str, ReportError> {
            lines
                .get(i)
                .and_then(|l| l.strip_prefix(key))
                .and_then(|l| l.strip_prefix(' '))
                .ok_or_else(|| bad(i + 1, format!("expected `{key} ...`")))
        };
        if lines.first() != Some(&CHECKPOINT_MAGIC) {
            return Err(bad(1, format!("expected header `{CHECKPOINT_MAGIC}`")));
        }
        let model = field(1, "model")?.to_string();
        let seed = field(2, "seed")?
            .parse()
            .map_err(|_| bad(3, "seed is not an integer"))?;
        let config_hash = field(3, "config_hash")?.to_string();
        let parse_vals = |i: usize, key: &str, n: usize| -> Result<Vec<f64>, ReportError> {
            let vals = field(i, key)?
                .split_whitespace()
                .map(|v| v.parse::<f64>().map_err(|_| bad(i + 1, format!("bad number {v:?}"))))
                .collect::<Result<Vec<_>, _>>()?;
            if vals.len() != n {
                return Err(bad(i + 1, format!("expected {n} values, got {}", vals.len())));
            }
            Ok(vals)
        };
        let mut layers = Vec::new();
        let mut i = 4;
        loop {
            match lines.get(i) {
                Some(&"end") => break,
                None => return Err(bad(i + 1, "unexpected end of file")),
                _ => {}
            }
            let parts: Vec<&str> = field(i, "layer")?.split_whitespace().collect();
            let (name, fan_in, fan_out) = match parts.as_slice() {
                [n, a, b] => (
                    n.to_string(),
                    a.parse::<usize>().map_err(|_| bad(i + 1, "bad fan_in"))?,
                    b.parse::<usize>().map_err(|_| bad(i + 1, "bad fan_out"))?,
                ),
                _ => return Err(bad(i + 1, "expected `layer <name> <fan_in> <fan_out>`")),
            };
            let weights = parse_vals(i + 1, "w", fan_in * fan_out)?;
            let biases = parse_vals(i + 2, "b", fan_out)?;
            let layer = DenseLayer::from_parts(fan_in, fan_out, weights, biases)
                .map_err(|e| bad(i + 1, e.to_string()))?;
            layers.push((name, layer));
            i += 3;
        }
        Ok(Checkpoint {
            model,
            seed,
            config_hash,
            layers,
        })
    }

    pub fn save(&self, path: &Path) -> Result<(), ReportError> {
        std::fs::write(path, self.to_text()).map_err(|e| ReportError::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self, ReportError> {
        let text = std::fs::read_to_string(path).map_err(|e| ReportError::io(path, e))?;
        Self::from_text(&text)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub file: String,
    pub sha256: String,
}

/// Content listing of one command's outputs; contains no timestamps, so it is
/// itself reproducible.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub config_hash: String,
    pub validation: String,
    pub files: Vec<ManifestEntry>,
}

impl Manifest {
    /// Hashes `files` (relative to `dir`), sorted by name.
    pub fn build(
        dir: &Path,
        command: &str,
        config_hash: &str,
        validation: &str,
        files: &[String],
    ) -> Result<Self, ReportError> {
        let mut names = files.to_vec();
        names.sort();
        names.dedup();
        let files = names
            .into_iter()
            .map(|file| {
                let path = dir.join(&file);
                let bytes = std::fs::read(&path).map_err(|e| ReportError::io(&path, e))?;
                Ok(ManifestEntry {
                    file,
                    sha256: hex::encode(Sha256::digest(&bytes)),
                })
            })
            .collect::<Result<Vec<_>, ReportError>>()?;
        Ok(Manifest {
            command: command.into(),
            config_hash: config_hash.into(),
            validation: validation.into(),
            files,
        })
    }

    pub fn file_name(command: &str) -> String {
        format!("manifest-{command}.json")
    }
}

/// Wall-clock bookkeeping, kept out of the manifest.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunTimes {
    pub command: String,
    pub config_hash: String,
    pub started_unix: u64,
    pub finished_unix: u64,
}

impl RunTimes {
    pub fn file_name(command: &str) -> String {
        format!("run-{command}.json")
    }
}

pub fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nnkit::Parameters;

    #[test]
    fn dualpath_checkpoint_round_trip_is_exact() {
        let m = DualPathModel::build(17);
        let ck = Checkpoint::from_dualpath(&m, 17, "abc");
        let text = ck.to_text();
        assert!(text.starts_with(CHECKPOINT_MAGIC));
        let back = Checkpoint::from_text(&text).unwrap();
        assert_eq!(back, ck);
        let m2 = back.to_dualpath().unwrap();
        assert_eq!(m2, m);
        assert_eq!(m2.parameter_count(), 635);
        assert!(back.to_direct().is_err());
    }

    #[test]
    fn direct_checkpoint_round_trip_is_exact() {
        let m = DirectMlp::build(2);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.ckpt");
        Checkpoint::from_direct(&m, 2, "h").save(&path).unwrap();
        assert_eq!(Checkpoint::load(&path).unwrap().to_direct().unwrap(), m);
    }

    #[test]
    fn corrupt_checkpoints_name_the_line() {
        let text = Checkpoint::from_direct(&DirectMlp::build(1), 1, "h").to_text();
        let truncated: String = text.lines().take(6).map(|l| format!("{l}\n")).collect();
        match Checkpoint::from_text(&truncated) {
            Err(ReportError::Checkpoint { line, .. }) => assert_eq!(line, 7),
            other => panic!("{other:?}"),
        }
        let short_w = text.replacen("w ", "w 1 ", 1);
        assert!(Checkpoint::from_text(&short_w).is_err());
        assert!(Checkpoint::from_text("nope").is_err());
    }

    #[test]
    fn manifest_is_sorted_and_content_addressed() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("b.csv"), "2").unwrap();
        std::fs::write(dir.path().join("a.csv"), "1").unwrap();
        let m = Manifest::build(dir.path(), "cv", "h", "ok", &["b.csv".into(), "a.csv".into()]).unwrap();
        assert_eq!(m.files[0].file, "a.csv");
        assert_eq!(
            m.files[0].sha256,
            "6b86b273ff34fce19d6b804eff5a3f5747ada4eaa22f1d49c01e52ddb7875b4b"
        );
    }
}
