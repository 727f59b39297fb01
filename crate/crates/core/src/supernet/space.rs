//! Declarative search spaces and their parameter accounting.

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numcore::Rng;
use crate::tdnnf::{CandidateSpec, ContextSpec, Geometry, LayerChoice};

/// The four per-layer choices a space can search over.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AxisKind {
    ContextLeft,
    ContextRight,
    BottleneckDim,
    Skip,
}

impl AxisKind {
    pub const ALL: [AxisKind; 4] = [
        AxisKind::ContextLeft,
        AxisKind::ContextRight,
        AxisKind::BottleneckDim,
        AxisKind::Skip,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AxisKind::ContextLeft => "left",
            AxisKind::ContextRight => "right",
            AxisKind::BottleneckDim => "dim",
            AxisKind::Skip => "skip",
        }
    }
}

/// One value per axis.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AxisSet<T> {
    pub left: T,
    pub right: T,
    pub dim: T,
    pub skip: T,
}

impl<T> AxisSet<T> {
    pub fn get(&self, kind: AxisKind) -> &T {
        match kind {
            AxisKind::ContextLeft => &self.left,
            AxisKind::ContextRight => &self.right,
            AxisKind::BottleneckDim => &self.dim,
            AxisKind::Skip => &self.skip,
        }
    }

    pub fn get_mut(&mut self, kind: AxisKind) -> &mut T {
        match kind {
            AxisKind::ContextLeft => &mut self.left,
            AxisKind::ContextRight => &mut self.right,
            AxisKind::BottleneckDim => &mut self.dim,
            AxisKind::Skip => &mut self.skip,
        }
    }

    pub fn from_fn(mut f: impl FnMut(AxisKind) -> T) -> Self {
        AxisSet {
            left: f(AxisKind::ContextLeft),
            right: f(AxisKind::ContextRight),
            dim: f(AxisKind::BottleneckDim),
            skip: f(AxisKind::Skip),
        }
    }

    pub fn map<U>(&self, mut f: impl FnMut(AxisKind, &T) -> U) -> AxisSet<U> {
        AxisSet::from_fn(|k| f(k, self.get(k)))
    }

    pub fn iter(&self) -> impl Iterator<Item = (AxisKind, &T)> {
        AxisKind::ALL.into_iter().map(move |k| (k, self.get(k)))
    }
}

/// Candidate menus of one layer. Every menu is non-empty and sorted
/// ascending; an axis with a single entry is fixed, not searched.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerSpace {
    pub left: Vec<usize>,
    pub right: Vec<usize>,
    pub dims: Vec<usize>,
    pub skip: Vec<bool>,
}

impl LayerSpace {
    pub fn fixed(choice: &LayerChoice) -> Self {
        LayerSpace {
            left: vec![choice.left],
            right: vec![choice.right],
            dims: vec![choice.dim],
            skip: vec![choice.skip],
        }
    }

    pub fn axis_len(&self, kind: AxisKind) -> usize {
        match kind {
            AxisKind::ContextLeft => self.left.len(),
            AxisKind::ContextRight => self.right.len(),
            AxisKind::BottleneckDim => self.dims.len(),
            AxisKind::Skip => self.skip.len(),
        }
    }

    pub fn is_searched(&self, kind: AxisKind) -> bool {
        self.axis_len(kind) >= 2
    }

    pub fn searched_axes(&self) -> Vec<AxisKind> {
        AxisKind::ALL
            .into_iter()
            .filter(|&k| self.is_searched(k))
            .collect()
    }

    /// Number of candidates of this layer (product of the menu sizes).
    pub fn size(&self) -> u64 {
        AxisKind::ALL
            .iter()
            .map(|&k| self.axis_len(k) as u64)
            .product()
    }

    pub fn max_left(&self) -> usize {
        *self.left.last().expect("validated menu")
    }

    pub fn max_right(&self) -> usize {
        *self.right.last().expect("validated menu")
    }

    pub fn max_dim(&self) -> usize {
        *self.dims.last().expect("validated menu")
    }

    /// Every left offset any candidate uses, ascending.
    pub fn left_union(&self) -> Vec<isize> {
        let mut o: Vec<isize> = self.left.iter().map(|&c| -(c as isize)).collect();
        o.push(0);
        o.sort_unstable();
        o.dedup();
        o
    }

    /// Every right offset any candidate uses, ascending.
    pub fn right_union(&self) -> Vec<isize> {
        let mut o: Vec<isize> = self.right.iter().map(|&d| d as isize).collect();
        o.push(0);
        o.sort_unstable();
        o.dedup();
        o
    }

    /// Choice at per-axis indices `idx`.
    pub fn choice(&self, idx: &AxisSet<usize>) -> LayerChoice {
        LayerChoice {
            left: self.left[idx.left],
            right: self.right[idx.right],
            dim: self.dims[idx.dim],
            skip: self.skip[idx.skip],
        }
    }

    /// Per-axis indices of `choice`, if it belongs to this layer's menus.
    pub fn indices_of(&self, choice: &LayerChoice) -> Option<AxisSet<usize>> {
        Some(AxisSet {
            left: self.left.iter().position(|&v| v == choice.left)?,
            right: self.right.iter().position(|&v| v == choice.right)?,
            dim: self.dims.iter().position(|&v| v == choice.dim)?,
            skip: self.skip.iter().position(|&v| v == choice.skip)?,
        })
    }
}

fn check_menu<T: PartialOrd + Copy + std::fmt::Debug>(
    layer: usize,
    name: &str,
    menu: &[T],
) -> Result<()> {
    if menu.is_empty() {
        return Err(Error::InvalidSpace(format!("layer {layer}: empty {name} menu")));
    }
    if menu.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidSpace(format!(
            "layer {layer}: {name} menu {menu:?} must be strictly ascending"
        )));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchSpace {
    pub geometry: Geometry,
    pub layers: Vec<LayerSpace>,
}

impl SearchSpace {
    /// The same menus at every layer.
    pub fn uniform(geometry: Geometry, layers: usize, menu: LayerSpace) -> Self {
        SearchSpace {
            geometry,
            layers: vec![menu; layers],
        }
    }

    /// The space containing exactly `spec`.
    pub fn single(spec: &CandidateSpec) -> Self {
        SearchSpace {
            geometry: spec.geometry,
            layers: spec.layers.iter().map(LayerSpace::fixed).collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let g = &self.geometry;
        if self.layers.is_empty() {
            return Err(Error::InvalidSpace("no layers".into()));
        }
        if g.input_dim == 0 || g.hidden_dim == 0 || g.classes < 2 {
            return Err(Error::InvalidSpace(format!(
                "degenerate geometry: input {}, hidden {}, classes {}",
                g.input_dim, g.hidden_dim, g.classes
            )));
        }
        for (l, ls) in self.layers.iter().enumerate() {
            check_menu(l, "left", &ls.left)?;
            check_menu(l, "right", &ls.right)?;
            check_menu(l, "dims", &ls.dims)?;
            check_menu(l, "skip", &ls.skip)?;
            if ls.dims[0] == 0 {
                return Err(Error::InvalidSpace(format!("layer {l}: bottleneck 0")));
            }
            if ls.skip.contains(&true) && g.layer_input_dim(l) != g.hidden_dim {
                return Err(Error::InvalidSpace(format!(
                    "layer {l}: skip needs equal widths, got {} -> {}",
                    g.layer_input_dim(l),
                    g.hidden_dim
                )));
            }
        }
        Ok(())
    }

    /// Exact number of candidate architectures.
    pub fn size(&self) -> BigUint {
        self.layers
            .iter()
            .fold(BigUint::from(1u32), |acc, l| acc * BigUint::from(l.size()))
    }

    /// `size()` if it fits in a `u64`.
    pub fn size_u64(&self) -> Option<u64> {
        u64::try_from(self.size()).ok()
    }

    /// True when at least one axis of one layer has two or more entries.
    pub fn is_searched(&self) -> bool {
        self.layers.iter().any(|l| !l.searched_axes().is_empty())
    }

    /// Candidate at mixed-radix `index`: layer 0 is the most significant
    /// digit, and within a layer the axes run left, right, dim, skip.
    pub fn candidate(&self, index: u64) -> Result<CandidateSpec> {
        if self.size_u64().map_or(true, |s| index >= s) {
            return Err(Error::InvalidCandidate(format!(
                "index {index} outside a space of {}",
                self.size()
            )));
        }
        let mut rest = index;
        let mut layers = vec![LayerChoice { left: 0, right: 0, dim: 1, skip: false }; self.layers.len()];
        for (l, ls) in self.layers.iter().enumerate().rev() {
            let mut idx = AxisSet::<usize>::default();
            for &k in AxisKind::ALL.iter().rev() {
                let n = ls.axis_len(k) as u64;
                *idx.get_mut(k) = (rest % n) as usize;
                rest /= n;
            }
            layers[l] = ls.choice(&idx);
        }
        Ok(CandidateSpec {
            geometry: self.geometry,
            layers,
        })
    }

    /// Inverse of [`candidate`](Self::candidate).
    pub fn index_of(&self, spec: &CandidateSpec) -> Option<u64> {
        if spec.geometry != self.geometry || spec.layers.len() != self.layers.len() {
            return None;
        }
        let mut index: u64 = 0;
        for (ls, c) in self.layers.iter().zip(&spec.layers) {
            let idx = ls.indices_of(c)?;
            for k in AxisKind::ALL {
                index = index
                    .checked_mul(ls.axis_len(k) as u64)?
                    .checked_add(*idx.get(k) as u64)?;
            }
        }
        Some(index)
    }

    pub fn contains(&self, spec: &CandidateSpec) -> bool {
        spec.geometry == self.geometry
            && spec.layers.len() == self.layers.len()
            && self
                .layers
                .iter()
                .zip(&spec.layers)
                .all(|(ls, c)| ls.indices_of(c).is_some())
    }

    /// Uniform draw over the space: one independent uniform index per
    /// searched axis.
    pub fn sample_uniform(&self, rng: &mut Rng) -> CandidateSpec {
        let layers = self
            .layers
            .iter()
            .map(|ls| {
                let idx = AxisSet::from_fn(|k| {
                    let n = ls.axis_len(k);
                    if n >= 2 {
                        rng.below(n)
                    } else {
                        0
                    }
                });
                ls.choice(&idx)
            })
            .collect();
        CandidateSpec {
            geometry: self.geometry,
            layers,
        }
    }

    /// Per-candidate parameter counts `C` along every axis of layer `l`.
    ///
    /// Axes are costed independently with the other axes at their largest
    /// setting: a left candidate counts its tap blocks of the linear factor
    /// at the widest bottleneck, a right candidate its tap blocks of the
    /// affine factor, a bottleneck candidate both factors (at the widest
    /// context) plus the bias. Skip connections are free.
    pub fn costs(&self, l: usize) -> AxisSet<Vec<f64>> {
        let ls = &self.layers[l];
        let d_in = self.geometry.layer_input_dim(l) as f64;
        let h = self.geometry.hidden_dim as f64;
        let n_max = ls.max_dim() as f64;
        let taps = |v: usize| if v == 0 { 1.0 } else { 2.0 };
        let taps_l = taps(ls.max_left());
        let taps_r = taps(ls.max_right());
        AxisSet {
            left: ls.left.iter().map(|&c| taps(c) * d_in * n_max).collect(),
            right: ls.right.iter().map(|&d| taps(d) * n_max * h).collect(),
            dim: ls
                .dims
                .iter()
                .map(|&n| taps_l * d_in * n as f64 + taps_r * n as f64 * h + h)
                .collect(),
            skip: vec![0.0; ls.skip.len()],
        }
    }
}

/// Parameter count of layer `layer` when it takes `choice`: both factors
/// at the taps actually connected, plus the bias.
pub fn candidate_param_count(space: &SearchSpace, layer: usize, choice: &LayerChoice) -> Result<usize> {
    let ls = space.layers.get(layer).ok_or_else(|| {
        Error::InvalidCandidate(format!("layer {layer} outside a {}-layer space", space.layers.len()))
    })?;
    if choice.dim == 0 || !ls.dims.contains(&choice.dim) {
        return Err(Error::InvalidCandidate(format!(
            "layer {layer}: bottleneck {} not in menu {:?}",
            choice.dim, ls.dims
        )));
    }
    if ls.indices_of(choice).is_none() {
        return Err(Error::InvalidCandidate(format!(
            "layer {layer}: {choice:?} not in the layer's menus"
        )));
    }
    let ctx = ContextSpec::new(choice.left, choice.right);
    let g = &space.geometry;
    Ok(ctx.left_offsets().len() * g.layer_input_dim(layer) * choice.dim
        + ctx.right_offsets().len() * choice.dim * g.hidden_dim
        + g.hidden_dim)
}
