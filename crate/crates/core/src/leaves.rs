//! Joint densities over `(X, Y)` attached to tree leaves.
//!
//! Three families are provided: class-factorized `p(X_1)...p(X_m)p(Y)`,
//! uniform-on-the-cell times `p(Y)`, and a small LearnSPN-style circuit for
//! leaves with enough rows. Every density marginalizes a variable by dropping
//! its factor.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, StudentsT};

use crate::circuit::{Circuit, CircuitBuilder, NodeId, SumWeights};
use crate::data::{Dataset, FeatureKind};
use crate::error::{Error, Result};
use crate::forest::{Cell, Side};

pub const DEFAULT_ALPHA: f64 = 0.01;
pub const DEFAULT_SIGMA_FLOOR: f64 = 1e-3;

/// Univariate component of a factorized density.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Factor {
    Gaussian {
        #[serde(with = "crate::textfloat")]
        mean: f64,
        #[serde(with = "crate::textfloat")]
        std: f64,
    },
    Categorical {
        #[serde(with = "crate::textfloat::vec")]
        probs: Vec<f64>,
    },
    /// Variable outside the density's scope; contributes `log 1`.
    Constant,
}

impl Factor {
    pub fn log_density(&self, v: f64) -> f64 {
        match self {
            Factor::Gaussian { mean, std } => {
                let z = (v - mean) / std;
                -0.5 * (2.0 * PI).ln() - std.ln() - 0.5 * z * z
            }
            Factor::Categorical { probs } => probs
                .get(v as usize)
                .filter(|_| v >= 0.0)
                .map_or(f64::NEG_INFINITY, |p| p.ln()),
            Factor::Constant => 0.0,
        }
    }
}

/// One coordinate of a uniform leaf: a closed interval or a category set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum UniformSide {
    Interval {
        #[serde(with = "crate::textfloat")]
        lo: f64,
        #[serde(with = "crate::textfloat")]
        hi: f64,
    },
    Categories { allowed: Vec<bool> },
}

impl UniformSide {
    fn log_density(&self, v: f64) -> f64 {
        match self {
            UniformSide::Interval { lo, hi } => {
                if *lo <= v && v <= *hi {
                    -(hi - lo).ln()
                } else {
                    f64::NEG_INFINITY
                }
            }
            UniformSide::Categories { allowed } => {
                if allowed.get(v as usize).copied().unwrap_or(false) && v >= 0.0 {
                    -(allowed.iter().filter(|&&a| a).count() as f64).ln()
                } else {
                    f64::NEG_INFINITY
                }
            }
        }
    }

    fn measure(&self) -> f64 {
        match self {
            UniformSide::Interval { lo, hi } => hi - lo,
            UniformSide::Categories { allowed } => allowed.iter().filter(|&&a| a).count() as f64,
        }
    }
}

fn class_log(class: &[f64], y: Option<f64>) -> f64 {
    match y {
        None => 0.0,
        Some(y) => class
            .get(y as usize)
            .filter(|_| y >= 0.0)
            .map_or(f64::NEG_INFINITY, |p| p.ln()),
    }
}

/// Joint density over the features `0..m` and the class (variable `m`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum LeafDensity {
    ClassFactorized {
        factors: Vec<Factor>,
        #[serde(with = "crate::textfloat::vec")]
        class: Vec<f64>,
    },
    UniformCell {
        sides: Vec<UniformSide>,
        #[serde(with = "crate::textfloat::vec")]
        class: Vec<f64>,
    },
    /// A single variable; `var == m` is the class.
    Univariate { var: usize, factor: Factor },
    LearnSpn { circuit: Box<Circuit> },
}

impl LeafDensity {
    /// Log-density of the observed part of `ev` (length `m + 1`).
    pub fn log_marginal(&self, ev: &[Option<f64>]) -> f64 {
        let m = ev.len() - 1;
        match self {
            LeafDensity::ClassFactorized { factors, class } => {
                let mut acc = class_log(class, ev[m]);
                for (f, v) in factors.iter().zip(ev) {
                    if let Some(v) = v {
                        acc += f.log_density(*v);
                    }
                }
                acc
            }
            LeafDensity::UniformCell { sides, class } => {
                let mut acc = class_log(class, ev[m]);
                for (s, v) in sides.iter().zip(ev) {
                    if let Some(v) = v {
                        acc += s.log_density(*v);
                    }
                }
                acc
            }
            LeafDensity::Univariate { var, factor } => ev[*var].map_or(0.0, |v| factor.log_density(v)),
            LeafDensity::LearnSpn { circuit } => circuit.marginal(ev),
        }
    }

    /// `log p(observed features, Y = y)` for each `y < k`; the class slot of
    /// `ev` is ignored.
    pub fn log_marginal_by_class(&self, ev: &[Option<f64>], k: usize) -> Vec<f64> {
        let m = ev.len() - 1;
        let feature_part = |factors: &dyn Fn(usize, f64) -> f64| -> f64 {
            ev[..m]
                .iter()
                .enumerate()
                .filter_map(|(i, v)| v.map(|v| factors(i, v)))
                .sum()
        };
        match self {
            LeafDensity::ClassFactorized { factors, class } => {
                let x = feature_part(&|i, v| factors[i].log_density(v));
                (0..k).map(|y| x + class[y].ln()).collect()
            }
            LeafDensity::UniformCell { sides, class } => {
                let x = feature_part(&|i, v| sides[i].log_density(v));
                (0..k).map(|y| x + class[y].ln()).collect()
            }
            LeafDensity::Univariate { var, factor } if *var == m => {
                (0..k).map(|y| factor.log_density(y as f64)).collect()
            }
            LeafDensity::Univariate { var, factor } => {
                vec![ev[*var].map_or(0.0, |v| factor.log_density(v)); k]
            }
            LeafDensity::LearnSpn { circuit } => {
                let mut ev = ev.to_vec();
                (0..k)
                    .map(|y| {
                        ev[m] = Some(y as f64);
                        circuit.marginal(&ev)
                    })
                    .collect()
            }
        }
    }

    /// Variables the density depends on.
    pub fn scope(&self, n_features: usize) -> Vec<usize> {
        match self {
            LeafDensity::ClassFactorized { factors, .. } => factors
                .iter()
                .enumerate()
                .filter(|(_, f)| !matches!(f, Factor::Constant))
                .map(|(i, _)| i)
                .chain(std::iter::once(n_features))
                .collect(),
            LeafDensity::UniformCell { .. } => (0..=n_features).collect(),
            LeafDensity::Univariate { var, .. } => vec![*var],
            LeafDensity::LearnSpn { circuit } => {
                let mut s = circuit.scopes().swap_remove(circuit.root());
                s.sort_unstable();
                s
            }
        }
    }

    /// Class distribution, for densities where `X` and `Y` factorize.
    pub fn class_probs(&self) -> Option<&[f64]> {
        match self {
            LeafDensity::ClassFactorized { class, .. } | LeafDensity::UniformCell { class, .. } => Some(class),
            _ => None,
        }
    }

    /// Same density with the factors of features pinned to a single category
    /// by `cell` removed. Inside the cell the value is unchanged; used when
    /// path indicators take over the cell constraint.
    pub fn without_pinned_factors(&self, cell: &Cell) -> LeafDensity {
        match self {
            LeafDensity::ClassFactorized { factors, class } => LeafDensity::ClassFactorized {
                factors: factors
                    .iter()
                    .zip(&cell.sides)
                    .map(|(f, side)| match side {
                        Side::Categories { allowed } if allowed.iter().filter(|&&a| a).count() == 1 => {
                            Factor::Constant
                        }
                        _ => f.clone(),
                    })
                    .collect(),
                class: class.clone(),
            },
            other => other.clone(),
        }
    }
}

fn ml_class(data: &Dataset, rows: &[usize]) -> Vec<f64> {
    let mut counts = vec![0usize; data.n_classes()];
    for &r in rows {
        counts[data.label(r)] += 1;
    }
    crate::util::normalize_counts(&counts)
}

fn gaussian_factor(vals: impl Iterator<Item = f64>, sigma_floor: f64) -> Factor {
    let vals: Vec<f64> = vals.collect();
    let n = vals.len() as f64;
    let mean = vals.iter().sum::<f64>() / n;
    let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    Factor::Gaussian {
        mean,
        std: var.sqrt().max(sigma_floor),
    }
}

fn categorical_factor(vals: impl Iterator<Item = f64>, allowed: &[bool], alpha: f64) -> Factor {
    let mut counts = vec![0usize; allowed.len()];
    let mut n = 0usize;
    for v in vals {
        counts[v as usize] += 1;
        n += 1;
    }
    let n_allowed = allowed.iter().filter(|&&a| a).count() as f64;
    let denom = n as f64 + alpha * n_allowed;
    let probs = counts
        .iter()
        .zip(allowed)
        .map(|(&c, &a)| if a { (c as f64 + alpha) / denom } else { 0.0 })
        .collect();
    Factor::Categorical { probs }
}

fn feature_factor(data: &Dataset, rows: &[usize], f: usize, cell: &Cell, alpha: f64, sigma_floor: f64) -> Factor {
    let vals = rows.iter().map(|&r| data.value(r, f));
    match (&cell.sides[f], data.schema().feature_kind(f)) {
        (_, FeatureKind::Continuous) => gaussian_factor(vals, sigma_floor),
        (Side::Categories { allowed }, FeatureKind::Categorical(_)) => categorical_factor(vals, allowed, alpha),
        (Side::Interval { .. }, FeatureKind::Categorical(k)) => categorical_factor(vals, &vec![true; k], alpha),
    }
}

/// Fully factorized leaf: Gaussians for continuous features, Laplace-smoothed
/// categoricals restricted to the cell, and the unsmoothed class fractions.
pub fn fit_class_factorized(
    data: &Dataset,
    rows: &[usize],
    cell: &Cell,
    alpha: f64,
    sigma_floor: f64,
) -> Result<LeafDensity> {
    if rows.is_empty() {
        return Err(Error::EmptyLeaf);
    }
    let factors = (0..data.n_features())
        .map(|f| feature_factor(data, rows, f, cell, alpha, sigma_floor))
        .collect();
    Ok(LeafDensity::ClassFactorized {
        factors,
        class: ml_class(data, rows),
    })
}

/// Uniform density on a bounded cell times the class fractions `counts / n`.
pub fn fit_uniform(cell: &Cell, class_counts: &[usize]) -> Result<LeafDensity> {
    let sides: Vec<UniformSide> = cell
        .sides
        .iter()
        .enumerate()
        .map(|(f, s)| match s {
            Side::Interval { lo, hi } => {
                if !lo.is_finite() || !hi.is_finite() {
                    Err(Error::UnboundedCell { feature: f })
                } else {
                    Ok(UniformSide::Interval { lo: *lo, hi: *hi })
                }
            }
            Side::Categories { allowed } => Ok(UniformSide::Categories {
                allowed: allowed.clone(),
            }),
        })
        .collect::<Result<_>>()?;
    if sides.iter().any(|s| !(s.measure() > 0.0)) {
        return Err(Error::ZeroVolume);
    }
    let total: usize = class_counts.iter().sum();
    if total == 0 {
        return Err(Error::EmptyLeaf);
    }
    Ok(LeafDensity::UniformCell {
        sides,
        class: crate::util::normalize_counts(class_counts),
    })
}

/// Density that is constant (`log 1`) over the features, times the class
/// fractions. Not normalized over `X`; only meaningful for comparing classes.
pub fn constant_leaf(n_features: usize, class_counts: &[usize]) -> LeafDensity {
    LeafDensity::ClassFactorized {
        factors: vec![Factor::Constant; n_features],
        class: crate::util::normalize_counts(class_counts),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LearnSpnParams {
    /// Leaves with at most this many rows stay fully factorized.
    pub min_instances: usize,
    /// Variables whose independence test has a p-value below this are
    /// treated as dependent.
    #[serde(with = "crate::textfloat")]
    pub p_value: f64,
    #[serde(with = "crate::textfloat")]
    pub alpha: f64,
    #[serde(with = "crate::textfloat")]
    pub sigma_floor: f64,
    pub kmeans_iters: usize,
}

impl Default for LearnSpnParams {
    fn default() -> Self {
        LearnSpnParams {
            min_instances: 30,
            p_value: 0.001,
            alpha: DEFAULT_ALPHA,
            sigma_floor: DEFAULT_SIGMA_FLOOR,
            kmeans_iters: 20,
        }
    }
}

struct SpnLearner<'a> {
    data: &'a Dataset,
    cell: &'a Cell,
    params: &'a LearnSpnParams,
    builder: CircuitBuilder,
}

impl SpnLearner<'_> {
    fn m(&self) -> usize {
        self.data.n_features()
    }

    fn value(&self, row: usize, var: usize) -> f64 {
        if var == self.m() {
            self.data.label(row) as f64
        } else {
            self.data.value(row, var)
        }
    }

    /// Cardinality for categorical variables (class included), `None` for
    /// continuous ones.
    fn cardinality(&self, var: usize) -> Option<usize> {
        if var == self.m() {
            Some(self.data.n_classes())
        } else {
            self.data.schema().feature_kind(var).cardinality()
        }
    }

    fn univariate(&mut self, rows: &[usize], var: usize) -> NodeId {
        let factor = if var == self.m() {
            Factor::Categorical {
                probs: ml_class(self.data, rows),
            }
        } else {
            feature_factor(self.data, rows, var, self.cell, self.params.alpha, self.params.sigma_floor)
        };
        self.builder.leaf(LeafDensity::Univariate { var, factor })
    }

    fn factorized(&mut self, rows: &[usize], vars: &[usize]) -> NodeId {
        let children: Vec<NodeId> = vars.iter().map(|&v| self.univariate(rows, v)).collect();
        if children.len() == 1 {
            children[0]
        } else {
            self.builder.product(children)
        }
    }

    fn p_value(&self, rows: &[usize], a: usize, b: usize) -> f64 {
        match (self.cardinality(a), self.cardinality(b)) {
            (Some(ka), Some(kb)) => {
                let xa: Vec<usize> = rows.iter().map(|&r| self.value(r, a) as usize).collect();
                let xb: Vec<usize> = rows.iter().map(|&r| self.value(r, b) as usize).collect();
                g_test(&xa, ka, &xb, kb)
            }
            _ => {
                let xa: Vec<f64> = rows.iter().map(|&r| self.value(r, a)).collect();
                let xb: Vec<f64> = rows.iter().map(|&r| self.value(r, b)).collect();
                correlation_test(&xa, &xb)
            }
        }
    }

    /// Connected components of the pairwise-dependence graph.
    fn components(&self, rows: &[usize], vars: &[usize]) -> Vec<Vec<usize>> {
        let mut unassigned: Vec<usize> = vars.to_vec();
        let mut comps = Vec::new();
        while !unassigned.is_empty() {
            let mut comp = vec![unassigned.remove(0)];
            let mut i = 0;
            while i < comp.len() {
                let v = comp[i];
                let mut j = 0;
                while j < unassigned.len() {
                    if self.p_value(rows, v, unassigned[j]) < self.params.p_value {
                        comp.push(unassigned.remove(j));
                    } else {
                        j += 1;
                    }
                }
                i += 1;
            }
            comp.sort_unstable();
            comps.push(comp);
        }
        comps
    }

    /// Mixed distance: Hamming over categorical variables plus absolute
    /// difference over continuous ones.
    fn mixed_distance(&self, a: usize, b: usize, vars: &[usize]) -> f64 {
        vars.iter()
            .map(|&v| {
                let (x, y) = (self.value(a, v), self.value(b, v));
                match self.cardinality(v) {
                    Some(_) => f64::from(u8::from(x != y)),
                    None => (x - y).abs(),
                }
            })
            .sum()
    }

    fn embed(&self, row: usize, vars: &[usize]) -> Vec<f64> {
        let mut out = Vec::new();
        for &v in vars {
            let x = self.value(row, v);
            match self.cardinality(v) {
                Some(k) => out.extend((0..k).map(|c| f64::from(u8::from(x as usize == c)))),
                None => out.push(x),
            }
        }
        out
    }

    /// 2-means on the one-hot embedding, seeded by the farthest pair of rows.
    /// Returns `None` when the rows cannot be separated.
    fn two_means(&self, rows: &[usize], vars: &[usize]) -> Option<(Vec<usize>, Vec<usize>)> {
        let mut best = (0.0, 0, 0);
        for i in 0..rows.len() {
            for j in i + 1..rows.len() {
                let d = self.mixed_distance(rows[i], rows[j], vars);
                if d > best.0 {
                    best = (d, i, j);
                }
            }
        }
        if best.0 == 0.0 {
            return None;
        }
        let points: Vec<Vec<f64>> = rows.iter().map(|&r| self.embed(r, vars)).collect();
        let mut centers = [points[best.1].clone(), points[best.2].clone()];
        let sq = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>();
        let mut assign = vec![0usize; rows.len()];
        for iter in 0..self.params.kmeans_iters {
            let next: Vec<usize> = points
                .iter()
                .map(|p| usize::from(sq(p, &centers[1]) < sq(p, &centers[0])))
                .collect();
            if iter > 0 && next == assign {
                break;
            }
            assign = next;
            for (c, center) in centers.iter_mut().enumerate() {
                let members: Vec<&Vec<f64>> = points.iter().zip(&assign).filter(|(_, &a)| a == c).map(|(p, _)| p).collect();
                if members.is_empty() {
                    continue;
                }
                for (d, x) in center.iter_mut().enumerate() {
                    *x = members.iter().map(|p| p[d]).sum::<f64>() / members.len() as f64;
                }
            }
        }
        let a: Vec<usize> = rows.iter().zip(&assign).filter(|(_, &c)| c == 0).map(|(&r, _)| r).collect();
        let b: Vec<usize> = rows.iter().zip(&assign).filter(|(_, &c)| c == 1).map(|(&r, _)| r).collect();
        if a.is_empty() || b.is_empty() {
            None
        } else {
            Some((a, b))
        }
    }

    fn learn(&mut self, rows: &[usize], vars: &[usize]) -> NodeId {
        if vars.len() == 1 {
            return self.univariate(rows, vars[0]);
        }
        if rows.len() <= self.params.min_instances {
            return self.factorized(rows, vars);
        }
        let comps = self.components(rows, vars);
        if comps.len() > 1 {
            let children = comps.iter().map(|c| self.learn(rows, c)).collect();
            return self.builder.product(children);
        }
        match self.two_means(rows, vars) {
            Some((a, b)) => {
                let weights = SumWeights::Counts(vec![a.len() as u64, b.len() as u64]);
                let ca = self.learn(&a, vars);
                let cb = self.learn(&b, vars);
                self.builder.sum(vec![ca, cb], weights)
            }
            None => self.factorized(rows, vars),
        }
    }
}

/// Likelihood-ratio (G) test of independence between two categorical
/// samples. Returns the p-value.
pub fn g_test(xa: &[usize], ka: usize, xb: &[usize], kb: usize) -> f64 {
    let n = xa.len() as f64;
    let mut table = vec![vec![0.0f64; kb]; ka];
    for (&a, &b) in xa.iter().zip(xb) {
        table[a][b] += 1.0;
    }
    let rows: Vec<f64> = table.iter().map(|r| r.iter().sum()).collect();
    let cols: Vec<f64> = (0..kb).map(|j| table.iter().map(|r| r[j]).sum()).collect();
    let r_used = rows.iter().filter(|&&x| x > 0.0).count();
    let c_used = cols.iter().filter(|&&x| x > 0.0).count();
    if r_used < 2 || c_used < 2 {
        return 1.0;
    }
    let mut g = 0.0;
    for i in 0..ka {
        for j in 0..kb {
            let o = table[i][j];
            if o > 0.0 {
                let e = rows[i] * cols[j] / n;
                g += o * (o / e).ln();
            }
        }
    }
    g *= 2.0;
    let df = ((r_used - 1) * (c_used - 1)) as f64;
    let dist = ChiSquared::new(df).expect("df >= 1");
    dist.sf(g.max(0.0))
}

/// Two-sided test of zero Pearson correlation. Returns the p-value.
pub fn correlation_test(xa: &[f64], xb: &[f64]) -> f64 {
    let n = xa.len();
    if n < 3 {
        return 1.0;
    }
    let nf = n as f64;
    let ma = xa.iter().sum::<f64>() / nf;
    let mb = xb.iter().sum::<f64>() / nf;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (a, b) in xa.iter().zip(xb) {
        sab += (a - ma) * (b - mb);
        saa += (a - ma) * (a - ma);
        sbb += (b - mb) * (b - mb);
    }
    if saa <= 0.0 || sbb <= 0.0 {
        return 1.0;
    }
    let r = (sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0);
    if r.abs() >= 1.0 - 1e-15 {
        return 0.0;
    }
    let df = nf - 2.0;
    let t = r * (df / (1.0 - r * r)).sqrt();
    let dist = StudentsT::new(0.0, 1.0, df).expect("df >= 1");
    2.0 * dist.sf(t.abs())
}

/// LearnSPN-style leaf: small leaves fall back to the class-factorized model;
/// larger ones alternate independence-based variable splits (products) and
/// 2-means row clustering (sums). The class is an ordinary variable.
pub fn fit_learnspn_lite(data: &Dataset, rows: &[usize], cell: &Cell, params: &LearnSpnParams) -> Result<LeafDensity> {
    if rows.is_empty() {
        return Err(Error::EmptyLeaf);
    }
    if rows.len() <= params.min_instances {
        return fit_class_factorized(data, rows, cell, params.alpha, params.sigma_floor);
    }
    let mut learner = SpnLearner {
        data,
        cell,
        params,
        builder: CircuitBuilder::new(),
    };
    let vars: Vec<usize> = (0..=data.n_features()).collect();
    learner.learn(rows, &vars);
    let circuit = learner.builder.build(data.n_features())?;
    Ok(LeafDensity::LearnSpn {
        circuit: Box::new(circuit),
    })
}

/// Leaf estimator selected for a conversion.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum LeafModel {
    Factorized {
        #[serde(with = "crate::textfloat")]
        alpha: f64,
        #[serde(with = "crate::textfloat")]
        sigma_floor: f64,
    },
    /// Uniform on the leaf cell, clipped to `bounds` (per-feature `(min, max)`
    /// of the training data; `None` for categorical features).
    Uniform { bounds: Vec<Option<(f64, f64)>> },
    LearnSpn(LearnSpnParams),
    /// Constant over the features; the class fractions only.
    Constant,
}

impl Default for LeafModel {
    fn default() -> Self {
        LeafModel::Factorized {
            alpha: DEFAULT_ALPHA,
            sigma_floor: DEFAULT_SIGMA_FLOOR,
        }
    }
}

impl LeafModel {
    /// Uniform leaves clipped to the bounding box of `data`.
    pub fn uniform_for(data: &Dataset) -> Self {
        let bounds = data
            .bounding_box()
            .into_iter()
            .enumerate()
            .map(|(f, b)| if data.schema().feature_kind(f).is_categorical() { None } else { b })
            .collect();
        LeafModel::Uniform { bounds }
    }

    pub fn name(&self) -> &'static str {
        match self {
            LeafModel::Factorized { .. } => "factorized",
            LeafModel::Uniform { .. } => "uniform",
            LeafModel::LearnSpn(_) => "learnspn",
            LeafModel::Constant => "constant",
        }
    }

    /// Whether every fitted leaf has the form `p(X) p(Y)` with ML `p(Y)`.
    pub fn is_class_factorized(&self) -> bool {
        !matches!(self, LeafModel::LearnSpn(_))
    }

    pub fn fit(&self, data: &Dataset, rows: &[usize], cell: &Cell) -> Result<LeafDensity> {
        match self {
            LeafModel::Factorized { alpha, sigma_floor } => fit_class_factorized(data, rows, cell, *alpha, *sigma_floor),
            LeafModel::Uniform { bounds } => {
                if rows.is_empty() {
                    return Err(Error::EmptyLeaf);
                }
                let clipped = clip_cell(cell, bounds);
                let mut counts = vec![0usize; data.n_classes()];
                for &r in rows {
                    counts[data.label(r)] += 1;
                }
                fit_uniform(&clipped, &counts)
            }
            LeafModel::LearnSpn(p) => fit_learnspn_lite(data, rows, cell, p),
            LeafModel::Constant => {
                if rows.is_empty() {
                    return Err(Error::EmptyLeaf);
                }
                let mut counts = vec![0usize; data.n_classes()];
                for &r in rows {
                    counts[data.label(r)] += 1;
                }
                Ok(constant_leaf(data.n_features(), &counts))
            }
        }
    }
}

/// Intersects the continuous sides of `cell` with closed `bounds`.
pub fn clip_cell(cell: &Cell, bounds: &[Option<(f64, f64)>]) -> Cell {
    Cell {
        sides: cell
            .sides
            .iter()
            .zip(bounds)
            .map(|(s, b)| match (s, b) {
                (Side::Interval { lo, hi }, Some((bmin, bmax))) => Side::Interval {
                    lo: lo.max(*bmin),
                    hi: hi.min(*bmax),
                },
                _ => s.clone(),
            })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Schema;
    use crate::forest::SplitRule;
    use approx::assert_abs_diff_eq;
    use std::sync::Arc;

    fn mixed(rows: &[(f64, f64)], labels: &[usize]) -> Dataset {
        let schema = Arc::new(Schema::from_kinds(&[FeatureKind::Categorical(2), FeatureKind::Continuous], 2).unwrap());
        let rows: Vec<Vec<f64>> = rows.iter().map(|&(a, b)| vec![a, b]).collect();
        Dataset::from_rows(schema, &rows, labels.to_vec()).unwrap()
    }

    fn root_cell() -> Cell {
        Cell::root(&[FeatureKind::Categorical(2), FeatureKind::Continuous])
    }

    #[test]
    fn class_factorized_ml_class_fractions() {
        let rows: Vec<(f64, f64)> = (0..40).map(|i| (1.0, 0.1 + i as f64 * 0.001)).collect();
        let labels: Vec<usize> = (0..40).map(|i| usize::from(i >= 10)).collect();
        let d = mixed(&rows, &labels);
        let all: Vec<usize> = (0..40).collect();
        let leaf = fit_class_factorized(&d, &all, &root_cell(), DEFAULT_ALPHA, DEFAULT_SIGMA_FLOOR).unwrap();
        assert_eq!(leaf.class_probs().unwrap(), &[0.25, 0.75]);
        let m = leaf.log_marginal(&[None, None, Some(1.0)]);
        assert_abs_diff_eq!(m, 0.75f64.ln(), epsilon = 1e-15);
    }

    #[test]
    fn single_row_gets_sigma_floor() {
        let d = mixed(&[(0.0, 2.0)], &[0]);
        let leaf = fit_class_factorized(&d, &[0], &root_cell(), DEFAULT_ALPHA, DEFAULT_SIGMA_FLOOR).unwrap();
        match leaf {
            LeafDensity::ClassFactorized { factors, .. } => {
                assert_eq!(factors[1], Factor::Gaussian { mean: 2.0, std: 1e-3 });
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn laplace_on_cell_categories() {
        let d = mixed(&[(0.0, 0.0); 4], &[0, 0, 1, 1]);
        let leaf = fit_class_factorized(&d, &[0, 1, 2, 3], &root_cell(), 0.01, 1e-3).unwrap();
        match leaf {
            LeafDensity::ClassFactorized { factors, .. } => match &factors[0] {
                Factor::Categorical { probs } => {
                    assert_abs_diff_eq!(probs[0], 4.01 / 4.02, epsilon = 1e-15);
                    assert_abs_diff_eq!(probs[1], 0.01 / 4.02, epsilon = 1e-15);
                }
                other => panic!("{other:?}"),
            },
            _ => unreachable!(),
        }
        // a cell pinned to category 0 gives it probability one
        let pinned = root_cell().split(&SplitRule::Subset { feature: 0, left: vec![0] }).0;
        let leaf = fit_class_factorized(&d, &[0, 1, 2, 3], &pinned, 0.01, 1e-3).unwrap();
        assert_eq!(leaf.log_marginal(&[Some(0.0), None, None]), 0.0);
        assert_eq!(leaf.log_marginal(&[Some(1.0), None, None]), f64::NEG_INFINITY);
    }

    #[test]
    fn empty_rows_error() {
        let d = mixed(&[(0.0, 0.0)], &[0]);
        assert!(matches!(
            fit_class_factorized(&d, &[], &root_cell(), 0.01, 1e-3),
            Err(Error::EmptyLeaf)
        ));
        assert!(matches!(
            fit_learnspn_lite(&d, &[], &root_cell(), &LearnSpnParams::default()),
            Err(Error::EmptyLeaf)
        ));
    }

    fn box_cell(sides: &[(f64, f64)]) -> Cell {
        Cell {
            sides: sides.iter().map(|&(lo, hi)| Side::Interval { lo, hi }).collect(),
        }
    }

    #[test]
    fn uniform_unit_square() {
        let leaf = fit_uniform(&box_cell(&[(0.0, 1.0), (0.0, 1.0)]), &[1, 1]).unwrap();
        assert_abs_diff_eq!(leaf.log_marginal(&[Some(0.3), Some(0.9), Some(1.0)]), 0.5f64.ln(), epsilon = 1e-15);
        assert_eq!(leaf.log_marginal(&[Some(1.3), Some(0.9), Some(1.0)]), f64::NEG_INFINITY);
        let leaf = fit_uniform(&box_cell(&[(0.0, 2.0), (0.0, 1.0)]), &[1, 0]).unwrap();
        assert_abs_diff_eq!(leaf.log_marginal(&[Some(1.0), Some(0.5), None]), 0.5f64.ln(), epsilon = 1e-15);
        let leaf = fit_uniform(&box_cell(&[(0.0, 2.0)]), &[1, 0]).unwrap();
        assert_abs_diff_eq!(leaf.log_marginal(&[Some(1.0), None]), 0.5f64.ln(), epsilon = 1e-15);
        assert_eq!(leaf.log_marginal(&[None, None]), 0.0);
    }

    #[test]
    fn uniform_rejects_bad_cells() {
        assert!(matches!(
            fit_uniform(&Cell::root(&[FeatureKind::Continuous]), &[1, 1]),
            Err(Error::UnboundedCell { feature: 0 })
        ));
        assert!(matches!(fit_uniform(&box_cell(&[(1.0, 1.0)]), &[1, 1]), Err(Error::ZeroVolume)));
    }

    #[test]
    fn learnspn_small_leaf_is_factorized() {
        let rows: Vec<(f64, f64)> = (0..10).map(|i| ((i % 2) as f64, i as f64 * 0.3)).collect();
        let labels: Vec<usize> = (0..10).map(|i| i % 3 % 2).collect();
        let d = mixed(&rows, &labels);
        let idx: Vec<usize> = (0..10).collect();
        let a = fit_learnspn_lite(&d, &idx, &root_cell(), &LearnSpnParams::default()).unwrap();
        let b = fit_class_factorized(&d, &idx, &root_cell(), DEFAULT_ALPHA, DEFAULT_SIGMA_FLOOR).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn g_test_detects_dependence() {
        let xs: Vec<usize> = (0..200).map(|i| i % 2).collect();
        assert!(g_test(&xs, 2, &xs, 2) < 1e-10);
        let ys: Vec<usize> = (0..200).map(|i| (i / 2) % 2).collect();
        assert!(g_test(&xs, 2, &ys, 2) > 0.5);
        assert_eq!(g_test(&xs, 2, &vec![0; 200], 2), 1.0);
    }

    #[test]
    fn correlation_test_extremes() {
        let a: Vec<f64> = (0..50).map(f64::from).collect();
        assert_eq!(correlation_test(&a, &a), 0.0);
        assert_eq!(correlation_test(&a, &vec![1.0; 50]), 1.0);
    }

    #[test]
    fn pinned_factor_removal_keeps_values_inside_cell() {
        let d = mixed(&[(0.0, 0.2), (0.0, 0.4)], &[1, 1]);
        let cell = root_cell().split(&SplitRule::Subset { feature: 0, left: vec![0] }).0;
        let leaf = fit_class_factorized(&d, &[0, 1], &cell, 0.01, 1e-3).unwrap();
        let pulled = leaf.without_pinned_factors(&cell);
        let ev = [Some(0.0), Some(0.3), Some(1.0)];
        assert_eq!(leaf.log_marginal(&ev), pulled.log_marginal(&ev));
        assert_eq!(pulled.scope(2), vec![1, 2]);
    }
}
