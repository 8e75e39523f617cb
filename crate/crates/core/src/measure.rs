//! Cylinder measures on either side of the boundary identification, and
//! their JSON form.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::graph::{Dart, ReducedWord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    /// Cylinders of non-backtracking dart paths in the covering tree.
    Tree,
    /// Cylinders of reduced words in the free group.
    #[serde(rename = "freegroup")]
    FreeGroup,
}

/// Masses of every cylinder up to a fixed depth.
///
/// Keys are dart ids (tree side) or signed generator indices (free-group
/// side); the empty key is the whole boundary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "MeasureJson", try_from = "MeasureJson")]
pub struct CylinderMeasure {
    pub side: Side,
    pub depth: usize,
    pub edge_length: f64,
    pub delta: f64,
    pub masses: BTreeMap<Vec<i64>, f64>,
}

impl CylinderMeasure {
    pub fn mass(&self, key: &[i64]) -> Option<f64> {
        self.masses.get(key).copied()
    }

    pub fn tree_mass(&self, path: &[Dart]) -> Option<f64> {
        debug_assert_eq!(self.side, Side::Tree);
        self.mass(&path_key(path))
    }

    pub fn word_mass(&self, word: &ReducedWord) -> Option<f64> {
        debug_assert_eq!(self.side, Side::FreeGroup);
        self.mass(&word.to_signed())
    }

    /// Entries at exactly `level`, in key order.
    pub fn level(&self, level: usize) -> impl Iterator<Item = (&Vec<i64>, f64)> {
        self.masses
            .iter()
            .filter(move |(k, _)| k.len() == level)
            .map(|(k, &m)| (k, m))
    }

    /// Largest `|mass(P) - sum of masses of one-step extensions of P|`.
    pub fn additivity_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (key, &mass) in &self.masses {
            if key.len() >= self.depth {
                continue;
            }
            let children: f64 = self
                .masses
                .range(key.clone()..)
                .take_while(|(k, _)| k.starts_with(key))
                .filter(|(k, _)| k.len() == key.len() + 1)
                .map(|(_, &m)| m)
                .sum();
            worst = worst.max((mass - children).abs());
        }
        worst
    }

    pub fn min_mass(&self) -> f64 {
        self.masses.values().copied().fold(f64::INFINITY, f64::min)
    }

    /// Largest per-cylinder difference against another measure over the
    /// same keys; `None` if the key sets differ.
    pub fn max_difference(&self, other: &CylinderMeasure) -> Option<f64> {
        if self.masses.len() != other.masses.len() {
            return None;
        }
        let mut worst: f64 = 0.0;
        for ((ka, ma), (kb, mb)) in self.masses.iter().zip(&other.masses) {
            if ka != kb {
                return None;
            }
            worst = worst.max((ma - mb).abs());
        }
        Some(worst)
    }
}

pub fn path_key(path: &[Dart]) -> Vec<i64> {
    path.iter().map(|d| d.0 as i64).collect()
}

/// Normalizes leaf masses to a probability vector and fills in every
/// shorter cylinder as the sum of the leaves below it.
pub(crate) fn close_under_prefixes(leaves: &BTreeMap<Vec<i64>, f64>) -> BTreeMap<Vec<i64>, f64> {
    let total: f64 = leaves.values().sum();
    let mut masses = BTreeMap::new();
    for (key, &m) in leaves {
        let m = m / total;
        for n in 0..key.len() {
            *masses.entry(key[..n].to_vec()).or_insert(0.0) += m;
        }
        masses.insert(key.clone(), m);
    }
    masses
}

/// A measure on free-group cylinders, pulled back from the covering tree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PulledBackMeasure(pub CylinderMeasure);

impl PulledBackMeasure {
    pub fn depth(&self) -> usize {
        self.0.depth
    }

    /// `nu(cyl(w))`, or `None` when `w` is deeper than the measure.
    pub fn mass(&self, w: &ReducedWord) -> Option<f64> {
        self.0.word_mass(w)
    }

    pub fn as_cylinder_measure(&self) -> &CylinderMeasure {
        &self.0
    }
}

#[derive(Serialize, Deserialize)]
struct EntryJson {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    path: Option<Vec<i64>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    word: Option<Vec<i64>>,
    mass: f64,
}

#[derive(Serialize, Deserialize)]
struct MeasureJson {
    side: Side,
    depth: usize,
    #[serde(rename = "L")]
    edge_length: f64,
    delta: f64,
    entries: Vec<EntryJson>,
}

impl From<CylinderMeasure> for MeasureJson {
    fn from(m: CylinderMeasure) -> Self {
        let entries = m
            .masses
            .into_iter()
            .map(|(key, mass)| match m.side {
                Side::Tree => EntryJson {
                    path: Some(key),
                    word: None,
                    mass,
                },
                Side::FreeGroup => EntryJson {
                    path: None,
                    word: Some(key),
                    mass,
                },
            })
            .collect();
        MeasureJson {
            side: m.side,
            depth: m.depth,
            edge_length: m.edge_length,
            delta: m.delta,
            entries,
        }
    }
}

impl TryFrom<MeasureJson> for CylinderMeasure {
    type Error = String;

    fn try_from(j: MeasureJson) -> Result<Self, Self::Error> {
        let mut masses = BTreeMap::new();
        for e in j.entries {
            let key = match (j.side, e.path, e.word) {
                (Side::Tree, Some(p), None) => p,
                (Side::FreeGroup, None, Some(w)) => w,
                _ => return Err("entry key does not match measure side".into()),
            };
            if masses.insert(key, e.mass).is_some() {
                return Err("duplicate cylinder entry".into());
            }
        }
        Ok(CylinderMeasure {
            side: j.side,
            depth: j.depth,
            edge_length: j.edge_length,
            delta: j.delta,
            masses,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> CylinderMeasure {
        let mut masses = BTreeMap::new();
        masses.insert(vec![], 1.0);
        masses.insert(vec![1], 0.25);
        masses.insert(vec![-1], 0.75);
        CylinderMeasure {
            side: Side::FreeGroup,
            depth: 1,
            edge_length: 1.0,
            delta: 0.5,
            masses,
        }
    }

    #[test]
    fn json_schema_shape() {
        let json = serde_json::to_value(sample()).unwrap();
        assert_eq!(json["side"], "freegroup");
        assert_eq!(json["L"], 1.0);
        let entries = json["entries"].as_array().unwrap();
        assert_eq!(entries[0]["word"], serde_json::json!([]));
        assert_eq!(entries[1]["word"], serde_json::json!([-1]));
        assert!(entries[1].get("path").is_none());
        let back: CylinderMeasure = serde_json::from_value(json).unwrap();
        assert_eq!(back, sample());
    }

    #[test]
    fn mismatched_entry_rejected() {
        let text =
            r#"{"side":"tree","depth":0,"L":1.0,"delta":1.0,"entries":[{"word":[],"mass":1.0}]}"#;
        assert!(serde_json::from_str::<CylinderMeasure>(text).is_err());
    }

    #[test]
    fn additivity_defect_detects_mismatch() {
        let mut m = sample();
        assert_eq!(m.additivity_defect(), 0.0);
        m.masses.insert(vec![1], 0.5);
        assert!((m.additivity_defect() - 0.25).abs() < 1e-15);
    }
}
