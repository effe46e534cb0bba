//! Addressing on the (k+1)-regular tree, finite regions, growth steps and
//! spin configurations.
//!
//! A vertex is addressed by its path from a fixed root. The root has `k + 1`
//! children (indices `0..=k`); every other vertex has `k` children (indices
//! `0..k`) plus its parent, so every vertex has degree `k + 1`.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Spin = u32;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TreeAddress(Vec<usize>);

impl TreeAddress {
    pub fn root() -> Self {
        Self(Vec::new())
    }

    pub fn new(path: Vec<usize>) -> Self {
        Self(path)
    }

    pub fn path(&self) -> &[usize] {
        &self.0
    }

    pub fn depth(&self) -> usize {
        self.0.len()
    }

    pub fn is_root(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_valid(&self, k: usize) -> bool {
        match self.0.split_first() {
            None => true,
            Some((&first, rest)) => first <= k && rest.iter().all(|&i| i < k),
        }
    }

    pub fn validate(&self, k: usize) -> Result<()> {
        if k == 0 || !self.is_valid(k) {
            return Err(Error::InvalidAddress {
                path: self.0.clone(),
                k,
            });
        }
        Ok(())
    }

    pub fn parent(&self) -> Option<TreeAddress> {
        let (_, init) = self.0.split_last()?;
        Some(Self(init.to_vec()))
    }

    pub fn child(&self, index: usize) -> TreeAddress {
        let mut path = self.0.clone();
        path.push(index);
        Self(path)
    }

    pub fn children(&self, k: usize) -> impl Iterator<Item = TreeAddress> + '_ {
        let count = if self.is_root() { k + 1 } else { k };
        (0..count).map(move |i| self.child(i))
    }

    /// All `k + 1` neighbours: parent first (if any), then children.
    pub fn neighbors(&self, k: usize) -> Vec<TreeAddress> {
        self.parent().into_iter().chain(self.children(k)).collect()
    }

    pub fn is_adjacent(&self, other: &TreeAddress) -> bool {
        let (a, b) = (&self.0, &other.0);
        (a.len() + 1 == b.len() && b.starts_with(a)) || (b.len() + 1 == a.len() && a.starts_with(b))
    }
}

impl fmt::Display for TreeAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("root");
        }
        for (i, step) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{step}")?;
        }
        Ok(())
    }
}

/// Inverse of `Display`: `"root"` (or empty) or comma-separated indices.
impl FromStr for TreeAddress {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() || s == "root" {
            return Ok(Self::root());
        }
        s.split(',')
            .map(|part| {
                part.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::Parse(format!("bad vertex path {s:?}")))
            })
            .collect::<Result<Vec<_>>>()
            .map(Self)
    }
}

/// Finite vertex set on the tree with branching `k`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RegionLiteral", into = "RegionLiteral")]
pub struct TreeRegion {
    k: usize,
    vertices: BTreeSet<TreeAddress>,
}

#[derive(Serialize, Deserialize)]
struct RegionLiteral {
    k: usize,
    vertices: Vec<TreeAddress>,
}

impl TryFrom<RegionLiteral> for TreeRegion {
    type Error = Error;

    fn try_from(lit: RegionLiteral) -> Result<Self> {
        Self::new(lit.k, lit.vertices)
    }
}

impl From<TreeRegion> for RegionLiteral {
    fn from(region: TreeRegion) -> Self {
        RegionLiteral {
            k: region.k,
            vertices: region.vertices.into_iter().collect(),
        }
    }
}

impl TreeRegion {
    pub fn new(k: usize, vertices: impl IntoIterator<Item = TreeAddress>) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidParameter {
                name: "k",
                reason: "branching must be at least 1".into(),
            });
        }
        let mut set = BTreeSet::new();
        for v in vertices {
            v.validate(k)?;
            if !set.insert(v.clone()) {
                return Err(Error::DuplicateVertex(v.path().to_vec()));
            }
        }
        Ok(Self { k, vertices: set })
    }

    pub fn empty(k: usize) -> Result<Self> {
        Self::new(k, [])
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn contains(&self, v: &TreeAddress) -> bool {
        self.vertices.contains(v)
    }

    /// Vertices in ascending lexicographic order of their paths.
    pub fn vertices(&self) -> impl Iterator<Item = &TreeAddress> {
        self.vertices.iter()
    }

    pub fn with_vertex(&self, v: TreeAddress) -> Result<TreeRegion> {
        v.validate(self.k)?;
        if self.contains(&v) {
            return Err(Error::DuplicateVertex(v.path().to_vec()));
        }
        let mut vertices = self.vertices.clone();
        vertices.insert(v);
        Ok(Self {
            k: self.k,
            vertices,
        })
    }

    /// The first `count` vertices in vertex order.
    pub fn restrict_to(&self, count: usize) -> TreeRegion {
        Self {
            k: self.k,
            vertices: self.vertices.iter().take(count).cloned().collect(),
        }
    }

    pub fn is_connected(&self) -> bool {
        let Some(start) = self.vertices.iter().next() else {
            return true;
        };
        let mut seen = BTreeSet::from([start.clone()]);
        let mut queue = VecDeque::from([start.clone()]);
        while let Some(x) = queue.pop_front() {
            for y in x.neighbors(self.k) {
                if self.contains(&y) && seen.insert(y.clone()) {
                    queue.push_back(y);
                }
            }
        }
        seen.len() == self.len()
    }
}

/// Which vertex set the boundary-field term of a region is summed over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryConvention {
    /// Vertices outside the region adjacent to it.
    #[default]
    Outer,
    /// Vertices of the region with at least one neighbour outside it.
    Inner,
}

pub fn boundary(region: &TreeRegion, convention: BoundaryConvention) -> BTreeSet<TreeAddress> {
    match convention {
        BoundaryConvention::Outer => outer_boundary(region),
        BoundaryConvention::Inner => inner_boundary(region),
    }
}

/// Closed form for the number of vertices within distance `r` of the root.
pub fn ball_size(k: usize, r: usize) -> usize {
    if k == 1 {
        1 + 2 * r
    } else {
        1 + (k + 1) * (k.pow(r as u32) - 1) / (k - 1)
    }
}

pub fn build_ball(k: usize, r: usize) -> Result<TreeRegion> {
    if k == 0 {
        return Err(Error::InvalidParameter {
            name: "k",
            reason: "branching must be at least 1".into(),
        });
    }
    let mut vertices = BTreeSet::from([TreeAddress::root()]);
    let mut frontier = vec![TreeAddress::root()];
    for _ in 0..r {
        frontier = frontier
            .iter()
            .flat_map(|x| x.children(k).collect::<Vec<_>>())
            .collect();
        vertices.extend(frontier.iter().cloned());
    }
    Ok(TreeRegion { k, vertices })
}

/// `{ y not in region : y adjacent to some x in region }`.
pub fn outer_boundary(region: &TreeRegion) -> BTreeSet<TreeAddress> {
    region
        .vertices()
        .flat_map(|x| x.neighbors(region.k))
        .filter(|y| !region.contains(y))
        .collect()
}

/// Region vertices having a neighbour outside the region.
pub fn inner_boundary(region: &TreeRegion) -> BTreeSet<TreeAddress> {
    region
        .vertices()
        .filter(|x| x.neighbors(region.k).iter().any(|y| !region.contains(y)))
        .cloned()
        .collect()
}

/// Every non-empty connected subset of `region` with at most `max_size`
/// vertices, ordered by size and then by vertex list.
pub fn connected_subregions(region: &TreeRegion, max_size: usize) -> Vec<TreeRegion> {
    let mut layer: BTreeSet<BTreeSet<TreeAddress>> = if max_size == 0 {
        BTreeSet::new()
    } else {
        region
            .vertices()
            .map(|v| BTreeSet::from([v.clone()]))
            .collect()
    };
    let mut out = Vec::new();
    while !layer.is_empty() {
        let mut next = BTreeSet::new();
        for set in &layer {
            if set.len() < max_size {
                for x in set {
                    for y in x.neighbors(region.k) {
                        if region.contains(&y) && !set.contains(&y) {
                            let mut grown = set.clone();
                            grown.insert(y);
                            next.insert(grown);
                        }
                    }
                }
            }
        }
        out.extend(layer.into_iter().map(|vertices| TreeRegion {
            k: region.k,
            vertices,
        }));
        layer = next;
    }
    out
}

/// One-vertex extension `Λ -> Λ ∪ {v}`, anchored at a neighbour `u ∈ Λ` of `v`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GrowthStep {
    base: TreeRegion,
    added: TreeAddress,
    anchor: TreeAddress,
}

impl GrowthStep {
    pub fn base(&self) -> &TreeRegion {
        &self.base
    }

    pub fn added(&self) -> &TreeAddress {
        &self.added
    }

    pub fn anchor(&self) -> &TreeAddress {
        &self.anchor
    }

    /// `Λ ∪ {v}`.
    pub fn extended(&self) -> TreeRegion {
        self.base
            .with_vertex(self.added.clone())
            .expect("step invariant: v not in base")
    }

    pub fn validate(&self) -> Result<()> {
        self.added.validate(self.base.k)?;
        if self.base.contains(&self.added) {
            return Err(Error::DuplicateVertex(self.added.path().to_vec()));
        }
        if !self.base.contains(&self.anchor) || !self.anchor.is_adjacent(&self.added) {
            return Err(Error::Structural(format!(
                "anchor {} is not a base-region neighbour of {}",
                self.anchor, self.added
            )));
        }
        Ok(())
    }
}

/// Builds the step for adding `v` to `base`. When `v` has several neighbours
/// in `base` (only possible for a disconnected base), the lexicographically
/// smallest one is the anchor.
pub fn growth_step(base: &TreeRegion, v: TreeAddress) -> Result<GrowthStep> {
    v.validate(base.k)?;
    if base.contains(&v) {
        return Err(Error::DuplicateVertex(v.path().to_vec()));
    }
    let anchor = v
        .neighbors(base.k)
        .into_iter()
        .filter(|y| base.contains(y))
        .min()
        .ok_or_else(|| Error::DetachedVertex(v.path().to_vec()))?;
    Ok(GrowthStep {
        base: base.clone(),
        added: v,
        anchor,
    })
}

/// Spin assignment to every vertex of a finite region.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "ConfigurationLiteral", into = "ConfigurationLiteral")]
pub struct SpinConfiguration {
    k: usize,
    spins: BTreeMap<TreeAddress, Spin>,
}

#[derive(Serialize, Deserialize)]
struct ConfigurationLiteral {
    k: usize,
    spins: Vec<SiteSpin>,
}

#[derive(Serialize, Deserialize)]
struct SiteSpin {
    vertex: TreeAddress,
    spin: Spin,
}

impl TryFrom<ConfigurationLiteral> for SpinConfiguration {
    type Error = Error;

    fn try_from(lit: ConfigurationLiteral) -> Result<Self> {
        let mut config = SpinConfiguration::empty(lit.k)?;
        for site in lit.spins {
            config = config.extend(site.vertex, site.spin)?;
        }
        Ok(config)
    }
}

impl From<SpinConfiguration> for ConfigurationLiteral {
    fn from(config: SpinConfiguration) -> Self {
        ConfigurationLiteral {
            k: config.k,
            spins: config
                .spins
                .into_iter()
                .map(|(vertex, spin)| SiteSpin { vertex, spin })
                .collect(),
        }
    }
}

impl SpinConfiguration {
    pub fn empty(k: usize) -> Result<Self> {
        TreeRegion::empty(k)?;
        Ok(Self {
            k,
            spins: BTreeMap::new(),
        })
    }

    /// Assigns `spins[i]` to the `i`-th vertex of `region` in vertex order.
    pub fn on_region(region: &TreeRegion, spins: &[Spin]) -> Result<Self> {
        if spins.len() != region.len() {
            return Err(Error::Structural(format!(
                "{} spins for a region of {} vertices",
                spins.len(),
                region.len()
            )));
        }
        Ok(Self {
            k: region.k,
            spins: region
                .vertices()
                .cloned()
                .zip(spins.iter().copied())
                .collect(),
        })
    }

    /// Places `spins` on the first `spins.len()` vertices of a breadth-first
    /// walk from the root (a connected region). Handy when only the spin
    /// multiset matters.
    pub fn breadth_first(k: usize, spins: &[Spin]) -> Result<Self> {
        let mut config = Self::empty(k)?;
        let mut queue = VecDeque::from([TreeAddress::root()]);
        for &s in spins {
            let x = queue.pop_front().expect("tree is infinite");
            queue.extend(x.children(k));
            config = config.extend(x, s)?;
        }
        Ok(config)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.spins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spins.is_empty()
    }

    pub fn region(&self) -> TreeRegion {
        TreeRegion {
            k: self.k,
            vertices: self.spins.keys().cloned().collect(),
        }
    }

    pub fn spin(&self, v: &TreeAddress) -> Option<Spin> {
        self.spins.get(v).copied()
    }

    /// Spins in vertex order.
    pub fn spins(&self) -> impl Iterator<Item = Spin> + '_ {
        self.spins.values().copied()
    }

    pub fn sites(&self) -> impl Iterator<Item = (&TreeAddress, Spin)> {
        self.spins.iter().map(|(v, &s)| (v, s))
    }

    /// `σ_Λ ∨ s` at `v`.
    pub fn extend(&self, v: TreeAddress, s: Spin) -> Result<SpinConfiguration> {
        v.validate(self.k)?;
        if self.spins.contains_key(&v) {
            return Err(Error::DuplicateVertex(v.path().to_vec()));
        }
        let mut spins = self.spins.clone();
        spins.insert(v, s);
        Ok(Self { k: self.k, spins })
    }

    /// Restriction to the vertices of `region` that carry a spin here.
    pub fn restrict(&self, region: &TreeRegion) -> SpinConfiguration {
        Self {
            k: self.k,
            spins: self
                .spins
                .iter()
                .filter(|(v, _)| region.contains(v))
                .map(|(v, &s)| (v.clone(), s))
                .collect(),
        }
    }
}

/// Every configuration on `region` with spins in `0..q`, in odometer order
/// (last vertex varies fastest).
pub fn configurations(
    region: &TreeRegion,
    q: Spin,
) -> impl Iterator<Item = SpinConfiguration> + '_ {
    let n = region.len();
    let total = (q as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    let mut digits = vec![0 as Spin; n];
    let mut emitted: u128 = 0;
    std::iter::from_fn(move || {
        if q == 0 && n > 0 || emitted >= total {
            return None;
        }
        let config = SpinConfiguration::on_region(region, &digits).expect("length matches");
        emitted += 1;
        for d in digits.iter_mut().rev() {
            *d += 1;
            if *d < q {
                break;
            }
            *d = 0;
        }
        Some(config)
    })
}
