//! Finite sets of integer points in `Z^m` with a canonical order.

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// An integer point of `Z^m`.
pub type Point = Vec<i64>;

/// A finite set of distinct points of `Z^m`, stored in lexicographic order
/// so that two sets are equal exactly when their representations are.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LatticeSet {
    dimension: usize,
    points: Vec<Point>,
}

impl LatticeSet {
    /// Builds a set from arbitrary points. Duplicates collapse.
    pub fn new(dimension: usize, mut points: Vec<Point>) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::InvalidParameter("lattice dimension must be positive".into()));
        }
        if let Some(bad) = points.iter().find(|p| p.len() != dimension) {
            return Err(Error::DimensionMismatch { expected: dimension, found: bad.len() });
        }
        points.sort_unstable();
        points.dedup();
        Ok(Self { dimension, points })
    }

    /// One-dimensional set from plain integers.
    pub fn from_integers<I: IntoIterator<Item = i64>>(values: I) -> Self {
        let mut points: Vec<Point> = values.into_iter().map(|v| vec![v]).collect();
        points.sort_unstable();
        points.dedup();
        Self { dimension: 1, points }
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Point> {
        self.points.iter()
    }

    pub fn index_of(&self, point: &[i64]) -> Option<usize> {
        self.points.binary_search_by(|p| p.as_slice().cmp(point)).ok()
    }

    pub fn contains(&self, point: &[i64]) -> bool {
        self.index_of(point).is_some()
    }

    /// Coordinates of a one-dimensional set, in increasing order.
    pub fn scalars(&self) -> Result<Vec<i64>> {
        if self.dimension != 1 {
            return Err(Error::DimensionMismatch { expected: 1, found: self.dimension });
        }
        Ok(self.points.iter().map(|p| p[0]).collect())
    }

    /// Largest absolute value of any coordinate (0 for the empty set).
    pub fn max_abs_coordinate(&self) -> u64 {
        self.points
            .iter()
            .flat_map(|p| p.iter())
            .map(|c| c.unsigned_abs())
            .max()
            .unwrap_or(0)
    }

    /// Per-coordinate `(min, max)` over the set, or `None` when empty.
    pub fn bounding_box(&self) -> Option<Vec<(i64, i64)>> {
        let first = self.points.first()?;
        let mut bounds: Vec<(i64, i64)> = first.iter().map(|&c| (c, c)).collect();
        for p in &self.points[1..] {
            for (b, &c) in bounds.iter_mut().zip(p) {
                b.0 = b.0.min(c);
                b.1 = b.1.max(c);
            }
        }
        Some(bounds)
    }

    /// Hex SHA-256 of the canonical JSON rendering.
    pub fn content_hash(&self) -> String {
        let text = serde_json::to_string(self).expect("lattice sets always serialize");
        let digest = Sha256::digest(text.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

impl Serialize for LatticeSet {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.points.serialize(s)
    }
}

impl<'de> Deserialize<'de> for LatticeSet {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let points = Vec::<Point>::deserialize(d)?;
        let dimension = points.first().map_or(1, Vec::len);
        LatticeSet::new(dimension, points).map_err(serde::de::Error::custom)
    }
}
