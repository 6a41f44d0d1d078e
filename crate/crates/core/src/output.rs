//! Network documents (JSON) and Graphviz DOT rendering.
//!
//! A network document looks like:
//!
//! ```json
//! {
//!   "score_spec": { "kind": "bde", "ess": 1.0 },
//!   "total_score": -1234.5,
//!   "ordering": [2, 0, 1],
//!   "parents": [[2], [0, 2], []],
//!   "names": ["A", "B", "C"]
//! }
//! ```

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optimizer::{Network, Ordering};
use crate::scoring::ScoreSpec;
use crate::varset::VarSet;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkDoc {
    pub score_spec: ScoreSpec,
    pub total_score: f64,
    pub ordering: Vec<usize>,
    pub parents: Vec<Vec<usize>>,
    #[serde(default)]
    pub names: Vec<String>,
}

impl NetworkDoc {
    pub fn new(
        spec: ScoreSpec,
        total_score: f64,
        ordering: &Ordering,
        network: &Network,
        names: &[String],
    ) -> Self {
        NetworkDoc {
            score_spec: spec,
            total_score,
            ordering: ordering.as_slice().to_vec(),
            parents: network
                .parent_sets()
                .iter()
                .map(|p| p.iter().collect())
                .collect(),
            names: names.to_vec(),
        }
    }

    pub fn network(&self) -> Result<Network> {
        Network::new(
            self.parents
                .iter()
                .map(|p| p.iter().copied().collect::<VarSet>())
                .collect(),
        )
    }

    pub fn ordering(&self) -> Result<Ordering> {
        Ordering::new(self.ordering.clone())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("network documents serialize")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Data(format!("network document: {e}")))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

/// `V0 .. V(n-1)`.
pub fn default_names(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("V{i}")).collect()
}

/// Variable names from a file: whitespace- or comma-separated, a leading `#`
/// allowed.
pub fn parse_names(text: &str, n: usize) -> Result<Vec<String>> {
    let line = text
        .lines()
        .map(str::trim)
        .find(|l| !l.is_empty())
        .unwrap_or("");
    let line = line.strip_prefix('#').unwrap_or(line);
    let names: Vec<String> = if line.contains(',') {
        line.split(',').map(|s| s.trim().to_string()).collect()
    } else {
        line.split_whitespace().map(str::to_string).collect()
    };
    if names.len() != n {
        return Err(Error::Data(format!(
            "{} names given for {n} variables",
            names.len()
        )));
    }
    Ok(names)
}

fn quote(name: &str) -> String {
    format!("\"{}\"", name.replace('\\', "\\\\").replace('"', "\\\""))
}

/// Graphviz digraph with one node per variable and an edge per arc.
pub fn to_dot(network: &Network, names: &[String]) -> String {
    let names = if names.len() == network.n() {
        names.to_vec()
    } else {
        default_names(network.n())
    };
    let mut out = String::from("digraph bn {\n");
    for name in &names {
        let _ = writeln!(out, "  {};", quote(name));
    }
    for (u, v) in network.arcs() {
        let _ = writeln!(out, "  {} -> {};", quote(&names[u]), quote(&names[v]));
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn net() -> Network {
        Network::new(vec![
            [2].into_iter().collect(),
            [0, 2].into_iter().collect(),
            VarSet::EMPTY,
        ])
        .unwrap()
    }

    #[test]
    fn json_round_trip() {
        let ord = Ordering::new(vec![2, 0, 1]).unwrap();
        let doc = NetworkDoc::new(ScoreSpec::bic(), -12.5, &ord, &net(), &default_names(3));
        let text = doc.to_json();
        assert!(text.contains("\"kind\": \"bic\""));
        let back = NetworkDoc::from_json(&text).unwrap();
        assert_eq!(back, doc);
        assert_eq!(back.network().unwrap(), net());
        assert_eq!(back.ordering().unwrap(), ord);
    }

    #[test]
    fn dot_lists_arcs() {
        let dot = to_dot(&net(), &[]);
        assert!(dot.starts_with("digraph bn {"));
        assert!(dot.contains("\"V2\" -> \"V0\";"));
        assert!(dot.contains("\"V0\" -> \"V1\";"));
        assert_eq!(dot.matches("->").count(), 3);
        let named = to_dot(&net(), &["a".into(), "b\"x".into(), "c".into()]);
        assert!(named.contains("\"c\" -> \"b\\\"x\";"));
    }

    #[test]
    fn names_file() {
        assert_eq!(parse_names("# a, b ,c\n", 3).unwrap(), vec!["a", "b", "c"]);
        assert_eq!(parse_names("x y\n", 2).unwrap(), vec!["x", "y"]);
        assert!(parse_names("x y\n", 3).is_err());
    }
}
