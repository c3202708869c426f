use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;

use super::{flow, HamiltonianField};
use crate::error::{check_dim, Error, Result};
use crate::genfun::{psi_apply, psi_inverse_apply, GeneratingFunction};
use crate::geom::{distance, HaltonSampler, LiouvilleFlow, SupportBox};

/// Fallible point map on `R^{2n}`.
pub type PointMap = Arc<dyn Fn(&[f64]) -> Result<Vec<f64>> + Send + Sync>;

/// Upper bound on the iterate count of [`SymplecticMapRep::power`].
pub const DEFAULT_ITERATE_BUDGET: u64 = 100_000;

#[derive(Clone)]
pub enum MapKind {
    Identity,
    ClosedForm { forward: PointMap, inverse: PointMap },
    /// Flow of `field` from `t0` to `t1`.
    Flow { field: HamiltonianField, t0: f64, t1: f64, steps: usize },
    GenFun(Arc<GeneratingFunction>),
    /// Maps applied in order: the first element acts first.
    Chain(Vec<SymplecticMapRep>),
    Liouville { flow: LiouvilleFlow, t: f64 },
    Inverse(Box<SymplecticMapRep>),
    Power(Box<SymplecticMapRep>, u64),
}

/// A (conformally) symplectic map of `R^{2n}` with forward and inverse
/// evaluation.
#[derive(Clone)]
pub struct SymplecticMapRep {
    kind: MapKind,
    dim: usize,
    support: Option<SupportBox>,
    label: String,
}

impl fmt::Debug for SymplecticMapRep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SymplecticMapRep")
            .field("label", &self.label)
            .field("dim", &self.dim)
            .field("support", &self.support)
            .finish()
    }
}

impl SymplecticMapRep {
    pub fn identity(dim: usize) -> Self {
        Self {
            kind: MapKind::Identity,
            dim,
            support: None,
            label: "id".into(),
        }
    }

    pub fn closed_form<F, G>(dim: usize, support: Option<SupportBox>, label: impl Into<String>, forward: F, inverse: G) -> Self
    where
        F: Fn(&[f64]) -> Result<Vec<f64>> + Send + Sync + 'static,
        G: Fn(&[f64]) -> Result<Vec<f64>> + Send + Sync + 'static,
    {
        Self {
            kind: MapKind::ClosedForm {
                forward: Arc::new(forward),
                inverse: Arc::new(inverse),
            },
            dim,
            support,
            label: label.into(),
        }
    }

    pub fn flow(field: HamiltonianField, t0: f64, t1: f64, steps: usize) -> Self {
        let label = format!("flow[{}]({t0}->{t1})", field.label());
        Self {
            dim: field.dim(),
            support: Some(field.support().clone()),
            kind: MapKind::Flow { field, t0, t1, steps },
            label,
        }
    }

    /// Time-one map of `field` over its declared time interval.
    pub fn time_one(field: HamiltonianField, steps: usize) -> Self {
        let (t0, t1) = field.time_interval();
        Self::flow(field, t0, t1, steps)
    }

    pub fn genfun(s: Arc<GeneratingFunction>) -> Self {
        Self {
            dim: 2 * s.n(),
            support: Some(s.support().clone()),
            label: "psi".into(),
            kind: MapKind::GenFun(s),
        }
    }

    pub fn liouville(flow: LiouvilleFlow, t: f64) -> Self {
        Self {
            dim: flow.dim(),
            support: None,
            label: format!("mu({t})"),
            kind: MapKind::Liouville { flow, t },
        }
    }

    /// Composition applying `maps[0]` first.
    pub fn chain(maps: Vec<SymplecticMapRep>) -> Result<Self> {
        let dim = maps
            .first()
            .map(|m| m.dim)
            .ok_or_else(|| Error::InvalidArgument("empty chain".into()))?;
        for m in &maps {
            check_dim(dim, m.dim)?;
        }
        let mut support: Option<SupportBox> = None;
        let mut global = false;
        for m in &maps {
            match (&m.support, &mut support) {
                (None, _) if !m.is_identity() => global = true,
                (Some(s), Some(acc)) => *acc = acc.union(s),
                (Some(s), None) => support = Some(s.clone()),
                _ => {}
            }
        }
        let label = maps.iter().map(|m| m.label.as_str()).collect::<Vec<_>>().join(" ; ");
        Ok(Self {
            kind: MapKind::Chain(maps),
            dim,
            support: if global { None } else { support },
            label,
        })
    }

    /// `other ∘ self`.
    pub fn then(&self, other: &SymplecticMapRep) -> Result<Self> {
        Self::chain(vec![self.clone(), other.clone()])
    }

    pub fn inverse(&self) -> Self {
        Self {
            kind: MapKind::Inverse(Box::new(self.clone())),
            dim: self.dim,
            support: self.support.clone(),
            label: format!("({})^-1", self.label),
        }
    }

    pub fn power(&self, k: u64, budget: u64) -> Result<Self> {
        if k > budget {
            return Err(Error::IterateBudget { requested: k, budget });
        }
        Ok(Self {
            kind: MapKind::Power(Box::new(self.clone()), k),
            dim: self.dim,
            support: self.support.clone(),
            label: format!("({})^{k}", self.label),
        })
    }

    /// Replaces the declared support, e.g. with a tighter known bound.
    pub fn with_support(mut self, support: Option<SupportBox>) -> Self {
        self.support = support;
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn kind(&self) -> &MapKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Box outside which the map is the identity; `None` for maps that are
    /// not compactly supported.
    pub fn support(&self) -> Option<&SupportBox> {
        self.support.as_ref()
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn is_identity(&self) -> bool {
        matches!(self.kind, MapKind::Identity)
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim, x.len())?;
        match &self.kind {
            MapKind::Identity => Ok(x.to_vec()),
            MapKind::ClosedForm { forward, .. } => forward(x),
            MapKind::Flow { field, t0, t1, steps } => flow(field, *t0, *t1, x, *steps),
            MapKind::GenFun(s) => psi_apply(s, x),
            MapKind::Chain(maps) => {
                let mut y = x.to_vec();
                for m in maps {
                    y = m.apply(&y)?;
                }
                Ok(y)
            }
            MapKind::Liouville { flow, t } => Ok(flow.apply(*t, x)),
            MapKind::Inverse(m) => m.inverse_apply(x),
            MapKind::Power(m, k) => {
                let mut y = x.to_vec();
                for _ in 0..*k {
                    y = m.apply(&y)?;
                }
                Ok(y)
            }
        }
    }

    pub fn inverse_apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim, x.len())?;
        match &self.kind {
            MapKind::Identity => Ok(x.to_vec()),
            MapKind::ClosedForm { inverse, .. } => inverse(x),
            MapKind::Flow { field, t0, t1, steps } => flow(field, *t1, *t0, x, *steps),
            MapKind::GenFun(s) => psi_inverse_apply(s, x),
            MapKind::Chain(maps) => {
                let mut y = x.to_vec();
                for m in maps.iter().rev() {
                    y = m.inverse_apply(&y)?;
                }
                Ok(y)
            }
            MapKind::Liouville { flow, t } => Ok(flow.apply(-*t, x)),
            MapKind::Inverse(m) => m.apply(x),
            MapKind::Power(m, k) => {
                let mut y = x.to_vec();
                for _ in 0..*k {
                    y = m.inverse_apply(&y)?;
                }
                Ok(y)
            }
        }
    }
}

/// Central-difference Jacobian `J[i][j] = ∂f_i/∂x_j`.
pub fn jacobian(map: &SymplecticMapRep, x: &[f64], h: f64) -> Result<Vec<Vec<f64>>> {
    let d = map.dim();
    check_dim(d, x.len())?;
    let mut jac = vec![vec![0.0; d]; d];
    let mut y = x.to_vec();
    for j in 0..d {
        y[j] = x[j] + h;
        let fp = map.apply(&y)?;
        y[j] = x[j] - h;
        let fm = map.apply(&y)?;
        y[j] = x[j];
        for i in 0..d {
            jac[i][j] = (fp[i] - fm[i]) / (2.0 * h);
        }
    }
    Ok(jac)
}

/// `max |JᵀΩJ − c·Ω|` over entries, with `J` the finite-difference Jacobian at
/// `x` and `c` the expected conformal factor (1 for symplectic maps).
pub fn symplectic_defect(map: &SymplecticMapRep, x: &[f64], h: f64, factor: f64) -> Result<f64> {
    let d = map.dim();
    let n = d / 2;
    let jac = jacobian(map, x, h)?;
    let mut worst = 0.0f64;
    for a in 0..d {
        for b in 0..d {
            // ω(J e_a, J e_b) = Σ_i (J_{i,a} J_{n+i,b} − J_{n+i,a} J_{i,b})
            let pulled: f64 = (0..n)
                .map(|i| jac[i][a] * jac[n + i][b] - jac[n + i][a] * jac[i][b])
                .sum();
            let canonical = if a < n && b == a + n {
                1.0
            } else if a >= n && b + n == a {
                -1.0
            } else {
                0.0
            };
            worst = worst.max((pulled - factor * canonical).abs());
        }
    }
    Ok(worst)
}

/// Sup-distance estimate `max_x |f(x) − g(x)|` over `count` quasi-random
/// points of `region`, deterministic given `seed`.
pub fn c0_distance(
    f: &SymplecticMapRep,
    g: &SymplecticMapRep,
    region: &SupportBox,
    count: usize,
    seed: u64,
) -> Result<f64> {
    check_dim(f.dim(), g.dim())?;
    check_dim(f.dim(), region.dim())?;
    let pts = HaltonSampler::new(f.dim(), seed).points_in_box(&region.lower(), &region.upper(), count);
    let gaps: Vec<Result<f64>> = pts
        .par_iter()
        .map(|x| Ok(distance(&f.apply(x)?, &g.apply(x)?)))
        .collect();
    let mut worst = 0.0f64;
    for g in gaps {
        worst = worst.max(g?);
    }
    Ok(worst)
}

/// Working region for comparing maps: the union of their declared supports.
pub fn common_region(maps: &[&SymplecticMapRep]) -> Result<SupportBox> {
    maps.iter()
        .filter_map(|m| m.support().cloned())
        .reduce(|a, b| a.union(&b))
        .ok_or_else(|| Error::Support("no compactly supported map to bound the comparison region".into()))
}

/// Time-sampled family of maps `t ↦ φ^t`.
#[derive(Debug, Clone)]
pub struct IsotopyTrace {
    times: Vec<f64>,
    maps: Vec<SymplecticMapRep>,
    support: SupportBox,
}

impl IsotopyTrace {
    pub fn new(times: Vec<f64>, maps: Vec<SymplecticMapRep>, support: SupportBox) -> Result<Self> {
        if times.len() != maps.len() || times.len() < 2 {
            return Err(Error::InvalidArgument("trace needs at least two times, one map per time".into()));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument("trace times must increase".into()));
        }
        for m in &maps {
            check_dim(support.dim(), m.dim())?;
        }
        Ok(Self { times, maps, support })
    }

    /// Samples `family` at `steps + 1` uniform times on `[t0, t1]`.
    pub fn sample<F>(t0: f64, t1: f64, steps: usize, support: SupportBox, family: F) -> Result<Self>
    where
        F: Fn(f64) -> Result<SymplecticMapRep>,
    {
        let times: Vec<f64> = (0..=steps).map(|k| t0 + (t1 - t0) * k as f64 / steps as f64).collect();
        let maps = times.iter().map(|&t| family(t)).collect::<Result<Vec<_>>>()?;
        Self::new(times, maps, support)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn maps(&self) -> &[SymplecticMapRep] {
        &self.maps
    }

    pub fn support(&self) -> &SupportBox {
        &self.support
    }

    pub fn dim(&self) -> usize {
        self.support.dim()
    }

    /// Largest displacement of the first map over `count` sample points.
    pub fn initial_identity_defect(&self, count: usize, seed: u64) -> Result<f64> {
        c0_distance(&self.maps[0], &SymplecticMapRep::identity(self.dim()), &self.support, count, seed)
    }
}
