//! Shared data model: items, feature matrices, labels, layouts and interactions.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use indexmap::IndexMap;
use nalgebra::DMatrix;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Opaque, non-empty item identifier.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct ItemId(String);

impl ItemId {
    pub fn new(id: impl Into<String>) -> Result<Self> {
        let id = id.into();
        if id.is_empty() {
            return Err(Error::InvalidDataset("empty item id".into()));
        }
        Ok(ItemId(id))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl std::borrow::Borrow<str> for ItemId {
    fn borrow(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for ItemId {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        ItemId::new(s)
    }
}

impl From<ItemId> for String {
    fn from(id: ItemId) -> String {
        id.0
    }
}

impl fmt::Display for ItemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Explicit seed threaded through every randomized operation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RngSeed(pub u64);

impl RngSeed {
    pub fn rng(self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.0)
    }

    /// Derives an independent child seed from `parts` (splitmix64 finalizer per part).
    pub fn mix(self, parts: &[u64]) -> RngSeed {
        let mut h = splitmix64(self.0);
        for &p in parts {
            h = splitmix64(h ^ splitmix64(p.wrapping_add(0x9E37_79B9_7F4A_7C15)));
        }
        RngSeed(h)
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Frozen base embeddings, one row per item.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    ids: Vec<ItemId>,
    data: DMatrix<f64>,
    index: HashMap<ItemId, usize>,
}

impl FeatureMatrix {
    /// Requires n ≥ 3, d ≥ 2, unique ids and finite entries.
    pub fn new(ids: Vec<ItemId>, data: DMatrix<f64>) -> Result<Self> {
        if ids.len() != data.nrows() {
            return Err(Error::DimensionMismatch {
                expected: ids.len(),
                found: data.nrows(),
            });
        }
        if ids.len() < 3 {
            return Err(Error::InvalidDataset(format!(
                "need at least 3 items, got {}",
                ids.len()
            )));
        }
        if data.ncols() < 2 {
            return Err(Error::InvalidDataset(format!(
                "need at least 2 features, got {}",
                data.ncols()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            let row = pos % data.nrows();
            return Err(Error::InvalidDataset(format!(
                "non-finite feature value for item {:?}",
                ids[row].as_str()
            )));
        }
        let mut index = HashMap::with_capacity(ids.len());
        for (i, id) in ids.iter().enumerate() {
            if index.insert(id.clone(), i).is_some() {
                return Err(Error::InvalidDataset(format!("duplicate id {:?}", id.as_str())));
            }
        }
        Ok(FeatureMatrix { ids, data, index })
    }

    pub fn n(&self) -> usize {
        self.data.nrows()
    }

    pub fn d(&self) -> usize {
        self.data.ncols()
    }

    pub fn ids(&self) -> &[ItemId] {
        &self.ids
    }

    pub fn data(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    /// Same ids, new data (used for transformed embeddings).
    pub fn with_data(&self, data: DMatrix<f64>) -> Result<Self> {
        FeatureMatrix::new(self.ids.clone(), data)
    }
}

/// Ground-truth class label per item, in insertion order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LabelMap(IndexMap<ItemId, String>);

impl LabelMap {
    pub fn new() -> Self {
        LabelMap(IndexMap::new())
    }

    pub fn from_pairs<I, S, L>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, L)>,
        S: Into<String>,
        L: Into<String>,
    {
        let mut map = IndexMap::new();
        for (id, label) in pairs {
            let id = ItemId::new(id)?;
            if map.contains_key(&id) {
                return Err(Error::InvalidDataset(format!(
                    "duplicate label for id {:?}",
                    id.as_str()
                )));
            }
            map.insert(id, label.into());
        }
        Ok(LabelMap(map))
    }

    pub(crate) fn insert(&mut self, id: ItemId, label: String) -> Option<String> {
        self.0.insert(id, label)
    }

    pub fn get(&self, id: &ItemId) -> Option<&str> {
        self.0.get(id).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&ItemId, &str)> {
        self.0.iter().map(|(k, v)| (k, v.as_str()))
    }

    /// Distinct labels in sorted order.
    pub fn classes(&self) -> Vec<String> {
        self.0
            .values()
            .cloned()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    }

    /// Members of each class (sorted class order), members in insertion order.
    pub fn members(&self) -> Vec<(String, Vec<ItemId>)> {
        self.classes()
            .into_iter()
            .map(|c| {
                let ids = self
                    .0
                    .iter()
                    .filter(|(_, l)| **l == c)
                    .map(|(id, _)| id.clone())
                    .collect();
                (c, ids)
            })
            .collect()
    }

    /// Class index (into `classes()`) for each id, in the order given.
    pub fn class_indices(&self, ids: &[ItemId]) -> Result<Vec<usize>> {
        let classes = self.classes();
        ids.iter()
            .map(|id| {
                let label = self
                    .get(id)
                    .ok_or_else(|| Error::MissingLabel(id.as_str().to_owned()))?;
                Ok(classes.binary_search_by(|c| c.as_str().cmp(label)).unwrap())
            })
            .collect()
    }
}

/// 2D projected coordinates, one row per item.
#[derive(Debug, Clone, PartialEq)]
pub struct Layout2D {
    ids: Vec<ItemId>,
    coords: DMatrix<f64>,
}

impl Layout2D {
    pub fn new(ids: Vec<ItemId>, coords: DMatrix<f64>) -> Result<Self> {
        if coords.ncols() != 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                found: coords.ncols(),
            });
        }
        if coords.nrows() != ids.len() {
            return Err(Error::DimensionMismatch {
                expected: ids.len(),
                found: coords.nrows(),
            });
        }
        if coords.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidDataset("non-finite layout coordinate".into()));
        }
        Ok(Layout2D { ids, coords })
    }

    pub fn from_points(ids: Vec<ItemId>, points: &[[f64; 2]]) -> Result<Self> {
        let coords = DMatrix::from_fn(points.len(), 2, |i, j| points[i][j]);
        Layout2D::new(ids, coords)
    }

    pub fn ids(&self) -> &[ItemId] {
        &self.ids
    }

    pub fn coords(&self) -> &DMatrix<f64> {
        &self.coords
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn point(&self, i: usize) -> [f64; 2] {
        [self.coords[(i, 0)], self.coords[(i, 1)]]
    }

    pub fn points(&self) -> impl Iterator<Item = (&ItemId, [f64; 2])> + '_ {
        self.ids.iter().enumerate().map(|(i, id)| (id, self.point(i)))
    }
}

/// Which feedback-incorporation method an interaction asks for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    WmdsInverse,
    MdsInverse,
    Triplet,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::WmdsInverse, Method::MdsInverse, Method::Triplet];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::WmdsInverse => "wmds_inverse",
            Method::MdsInverse => "mds_inverse",
            Method::Triplet => "triplet",
        }
    }

    pub(crate) fn index(self) -> u64 {
        match self {
            Method::WmdsInverse => 0,
            Method::MdsInverse => 1,
            Method::Triplet => 2,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "wmds_inverse" => Ok(Method::WmdsInverse),
            "mds_inverse" => Ok(Method::MdsInverse),
            "triplet" => Ok(Method::Triplet),
            other => Err(Error::InvalidConfig(format!(
                "unknown method {other:?} (expected wmds_inverse, mds_inverse or triplet)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MovedPoint {
    pub id: String,
    pub x: f64,
    pub y: f64,
}

/// The set of user-moved points with their target 2D coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteractionSpec {
    pub method: Method,
    pub moved: Vec<MovedPoint>,
}

/// An interaction checked against a dataset: dataset row indices plus an m×2 coordinate block.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedInteraction {
    pub method: Method,
    pub ids: Vec<ItemId>,
    pub indices: Vec<usize>,
    pub coords: DMatrix<f64>,
}

impl InteractionSpec {
    pub fn new(method: Method, moved: Vec<MovedPoint>) -> Self {
        InteractionSpec { method, moved }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("interaction serializes")
    }

    /// Checks every invariant against `features`, collecting one diagnostic per offending point.
    pub fn resolve(&self, features: &FeatureMatrix) -> Result<ResolvedInteraction> {
        let mut problems = Vec::new();
        if self.moved.len() < 2 {
            problems.push(format!(
                "need at least 2 moved points, got {}",
                self.moved.len()
            ));
        }
        let mut seen = HashMap::new();
        let mut indices = Vec::with_capacity(self.moved.len());
        for (pos, p) in self.moved.iter().enumerate() {
            if let Some(first) = seen.insert(p.id.as_str(), pos) {
                problems.push(format!(
                    "moved[{pos}]: duplicate id {:?} (first at moved[{first}])",
                    p.id
                ));
            }
            match features.index_of(&p.id) {
                Some(i) => indices.push(i),
                None => problems.push(format!("moved[{pos}]: unknown id {:?}", p.id)),
            }
            if !p.x.is_finite() || !p.y.is_finite() {
                problems.push(format!("moved[{pos}]: non-finite coordinate for {:?}", p.id));
            }
        }
        if !problems.is_empty() {
            return Err(Error::InvalidInteraction(problems));
        }
        let coords = DMatrix::from_fn(self.moved.len(), 2, |i, j| {
            if j == 0 {
                self.moved[i].x
            } else {
                self.moved[i].y
            }
        });
        Ok(ResolvedInteraction {
            method: self.method,
            ids: indices.iter().map(|&i| features.ids()[i].clone()).collect(),
            indices,
            coords,
        })
    }
}

impl ResolvedInteraction {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Returns coordinates inside the unit square: left as-is when already inside,
    /// otherwise rescaled with [`crate::geometry::normalize_coords`].
    pub fn unit_coords(&self) -> Result<DMatrix<f64>> {
        let inside = self.coords.iter().all(|v| (0.0..=1.0).contains(v));
        if inside {
            Ok(self.coords.clone())
        } else {
            crate::geometry::normalize_coords(&self.coords)
        }
    }
}
