//! Channel-aware combined constellations and nearest-point decoding.
//!
//! A [`CombinationTable`] holds everything about the `M = Π_k n_k` input
//! combinations that does not depend on the channel: the level index of
//! every node, the transmitted symbols and the target function value. A
//! [`CombinedConstellation`] pairs a table with the receive points
//! `a_r·sqrt(P_t)·Σ_k c_k·x_{k,q_k}` for one channel estimate, where `c_k`
//! is `|ĥ_k|` under Type I and `ĥ_k` under Type II.

use std::cmp::Ordering;
use std::sync::Arc;

use num_complex::Complex64;

use crate::airlink::{PolicyKind, ReceivedSample, TransmitPolicy};
use crate::constellation::ModulationAlphabet;
use crate::error::{Error, Result};

/// Largest combined constellation built by default.
pub const DEFAULT_MAX_POINTS: usize = 1 << 20;

/// Two function values are equal iff `|a − b| ≤ 1e-9·max(1, |a|)`.
pub fn same_value(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FunctionKind {
    Sum,
    Product,
    Max,
    SumOfSquares,
}

impl FunctionKind {
    pub fn name(self) -> &'static str {
        match self {
            FunctionKind::Sum => "sum",
            FunctionKind::Product => "product",
            FunctionKind::Max => "max",
            FunctionKind::SumOfSquares => "sum_of_squares",
        }
    }

    pub const ALL: [FunctionKind; 4] = [
        FunctionKind::Sum,
        FunctionKind::Product,
        FunctionKind::Max,
        FunctionKind::SumOfSquares,
    ];
}

/// Target function `f` with per-node weights `g_k` and admissible inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionSpec {
    kind: FunctionKind,
    weights: Vec<f64>,
    input_levels: Vec<Vec<f64>>,
}

impl FunctionSpec {
    pub fn new(kind: FunctionKind, weights: Vec<f64>, input_levels: Vec<Vec<f64>>) -> Result<Self> {
        if weights.is_empty() || weights.len() != input_levels.len() {
            return Err(Error::Config(format!(
                "function needs one weight and one level set per node, got {} and {}",
                weights.len(),
                input_levels.len()
            )));
        }
        if input_levels.iter().any(Vec::is_empty) {
            return Err(Error::Config("every node needs at least one input level".into()));
        }
        if weights
            .iter()
            .chain(input_levels.iter().flatten())
            .any(|v| !v.is_finite())
        {
            return Err(Error::Config("weights and levels must be finite".into()));
        }
        Ok(FunctionSpec {
            kind,
            weights,
            input_levels,
        })
    }

    /// Unit weights and the same level set at every node.
    pub fn symmetric(kind: FunctionKind, k: usize, levels: Vec<f64>) -> Result<Self> {
        Self::new(kind, vec![1.0; k], vec![levels; k])
    }

    /// Weights `g_k = k/K` (1-based `k`) and the same level set everywhere.
    pub fn ramp_weighted(kind: FunctionKind, k: usize, levels: Vec<f64>) -> Result<Self> {
        let weights = (1..=k).map(|i| i as f64 / k as f64).collect();
        Self::new(kind, weights, vec![levels; k])
    }

    pub fn kind(&self) -> FunctionKind {
        self.kind
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn input_levels(&self) -> &[Vec<f64>] {
        &self.input_levels
    }

    pub fn n_nodes(&self) -> usize {
        self.weights.len()
    }

    /// Number of input combinations, `Π_k |levels_k|`.
    pub fn n_combinations(&self) -> u128 {
        self.input_levels.iter().map(|l| l.len() as u128).product()
    }

    /// Smallest and largest value of `f` over every input combination.
    pub fn range(&self, cap: usize) -> Result<(f64, f64)> {
        let m = self.n_combinations();
        if m > cap as u128 {
            return Err(Error::TooManyPoints { m, cap });
        }
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let mut values = vec![0.0; self.n_nodes()];
        for_each_combo(&self.radices(), |combo| {
            for (k, &q) in combo.iter().enumerate() {
                values[k] = self.input_levels[k][q];
            }
            let f = eval_function(self, &values);
            lo = lo.min(f);
            hi = hi.max(f);
        });
        Ok((lo, hi))
    }

    fn radices(&self) -> Vec<usize> {
        self.input_levels.iter().map(Vec::len).collect()
    }
}

/// Evaluates `f` at one input vector.
pub fn eval_function(spec: &FunctionSpec, values: &[f64]) -> f64 {
    let weighted = spec.weights.iter().zip(values);
    match spec.kind {
        FunctionKind::Sum => weighted.map(|(g, v)| g * v).sum(),
        FunctionKind::Product => weighted.map(|(g, v)| g * v).product(),
        FunctionKind::Max => weighted.map(|(g, v)| g * v).fold(f64::NEG_INFINITY, f64::max),
        FunctionKind::SumOfSquares => weighted.map(|(g, v)| g * v * v).sum(),
    }
}

/// Visits every combination in mixed-radix order, node 0 most significant.
fn for_each_combo(radices: &[usize], mut visit: impl FnMut(&[usize])) {
    if radices.contains(&0) {
        return;
    }
    let mut combo = vec![0usize; radices.len()];
    loop {
        visit(&combo);
        let mut k = radices.len();
        loop {
            if k == 0 {
                return;
            }
            k -= 1;
            combo[k] += 1;
            if combo[k] < radices[k] {
                break;
            }
            combo[k] = 0;
        }
    }
}

/// Channel-independent part of a combined constellation.
#[derive(Debug, Clone)]
pub struct CombinationTable {
    n_nodes: usize,
    combos: Vec<usize>,
    f_values: Vec<f64>,
    groups: Vec<u32>,
    symbols: Vec<Vec<Complex64>>,
}

impl CombinationTable {
    /// Every combination of input levels, with node `k`'s level `q` sent as
    /// `alphabets[k].encode(q)`.
    pub fn new(alphabets: &[ModulationAlphabet], spec: &FunctionSpec, cap: usize) -> Result<Self> {
        let k = spec.n_nodes();
        if alphabets.len() != k {
            return Err(Error::InvalidInput(format!(
                "{} alphabets for {k} nodes",
                alphabets.len()
            )));
        }
        let m = spec.n_combinations();
        if m > cap as u128 {
            return Err(Error::TooManyPoints { m, cap });
        }
        let mut symbols = Vec::with_capacity(k);
        for (node, (alphabet, levels)) in alphabets.iter().zip(spec.input_levels()).enumerate() {
            if levels.len() > alphabet.order() {
                return Err(Error::Config(format!(
                    "node {node} has {} input levels but the alphabet has {} points",
                    levels.len(),
                    alphabet.order()
                )));
            }
            symbols.push(alphabet.points()[..levels.len()].to_vec());
        }
        let m = m as usize;
        let mut combos = Vec::with_capacity(m * k);
        let mut f_values = Vec::with_capacity(m);
        let mut values = vec![0.0; k];
        for_each_combo(&spec.radices(), |combo| {
            for (node, &q) in combo.iter().enumerate() {
                values[node] = spec.input_levels()[node][q];
            }
            combos.extend_from_slice(combo);
            f_values.push(eval_function(spec, &values));
        });
        Self::assemble(k, combos, f_values, symbols)
    }

    /// Table from explicit entries; `combos` is row-major with `n_nodes`
    /// columns. Symbols are left empty, so only [`CombinedConstellation::from_points`]
    /// can use such a table.
    pub fn from_entries(n_nodes: usize, combos: Vec<usize>, f_values: Vec<f64>) -> Result<Self> {
        if combos.len() != n_nodes * f_values.len() {
            return Err(Error::InvalidInput("combo table shape mismatch".into()));
        }
        Self::assemble(n_nodes, combos, f_values, vec![Vec::new(); n_nodes])
    }

    fn assemble(n_nodes: usize, combos: Vec<usize>, f_values: Vec<f64>, symbols: Vec<Vec<Complex64>>) -> Result<Self> {
        let mut order: Vec<usize> = (0..f_values.len()).collect();
        order.sort_by(|&a, &b| f_values[a].total_cmp(&f_values[b]));
        let mut groups = vec![0u32; f_values.len()];
        let mut group = 0u32;
        for w in 0..order.len() {
            if w > 0 && !same_value(f_values[order[w - 1]], f_values[order[w]]) {
                group += 1;
            }
            groups[order[w]] = group;
        }
        Ok(CombinationTable {
            n_nodes,
            combos,
            f_values,
            groups,
            symbols,
        })
    }

    pub fn len(&self) -> usize {
        self.f_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.f_values.is_empty()
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn combo(&self, m: usize) -> &[usize] {
        &self.combos[m * self.n_nodes..(m + 1) * self.n_nodes]
    }

    pub fn f_value(&self, m: usize) -> f64 {
        self.f_values[m]
    }

    pub fn f_values(&self) -> &[f64] {
        &self.f_values
    }

    /// Number of distinct function values `W`.
    pub fn n_distinct(&self) -> usize {
        self.groups.iter().max().map_or(0, |&g| g as usize + 1)
    }

    /// Symbol node `k` transmits for input level `q`.
    pub fn symbol(&self, node: usize, level: usize) -> Complex64 {
        self.symbols[node][level]
    }

    /// Receive points for per-node effective gains `coeffs` (`c_k`):
    /// `(Σ_k c_k·x_{k,q_k})·(a_r·sqrt(P_t))`, summed in node order.
    pub fn points(&self, coeffs: &[Complex64], p_t_mw: f64, a_r: f64) -> Vec<Complex64> {
        let scale = a_r * p_t_mw.sqrt();
        (0..self.len())
            .map(|m| {
                let mut acc = Complex64::new(0.0, 0.0);
                for (node, &q) in self.combo(m).iter().enumerate() {
                    acc += coeffs[node] * self.symbols[node][q];
                }
                acc * scale
            })
            .collect()
    }
}

/// Per-node constellation weights `c_k` from antenna-summed estimates.
pub fn effective_coeffs(policy: PolicyKind, h_hat: &[Complex64]) -> Vec<Complex64> {
    match policy {
        PolicyKind::TypeI => h_hat.iter().map(|h| Complex64::new(h.norm(), 0.0)).collect(),
        PolicyKind::TypeII => h_hat.to_vec(),
    }
}

/// All `M` receive points of one CP, labeled by combination and `f` value.
#[derive(Debug, Clone)]
pub struct CombinedConstellation {
    table: Arc<CombinationTable>,
    points: Vec<Complex64>,
    d_e: f64,
    a_r: f64,
}

impl CombinedConstellation {
    pub fn new(table: Arc<CombinationTable>, h_hat: &[Complex64], policy: &TransmitPolicy, a_r: f64) -> Result<Self> {
        if h_hat.len() != table.n_nodes() {
            return Err(Error::InvalidInput(format!(
                "{} channel estimates for {} nodes",
                h_hat.len(),
                table.n_nodes()
            )));
        }
        let coeffs = effective_coeffs(policy.kind, h_hat);
        let points = table.points(&coeffs, policy.p_t_mw, a_r);
        Self::from_points(table, points, a_r)
    }

    pub fn from_points(table: Arc<CombinationTable>, points: Vec<Complex64>, a_r: f64) -> Result<Self> {
        if points.len() != table.len() {
            return Err(Error::InvalidInput("one point per table entry".into()));
        }
        let d_e = sweep_min_distance(&points, &table.groups);
        Ok(CombinedConstellation {
            table,
            points,
            d_e,
            a_r,
        })
    }

    pub fn table(&self) -> &Arc<CombinationTable> {
        &self.table
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn point(&self, m: usize) -> Complex64 {
        self.points[m]
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn combo(&self, m: usize) -> &[usize] {
        self.table.combo(m)
    }

    pub fn f_value(&self, m: usize) -> f64 {
        self.table.f_value(m)
    }

    pub fn d_e(&self) -> f64 {
        self.d_e
    }

    pub fn a_r(&self) -> f64 {
        self.a_r
    }
}

/// Builds the combined constellation for one CP.
pub fn enumerate_combined(
    alphabets: &[ModulationAlphabet],
    h_hat: &[Complex64],
    policy: &TransmitPolicy,
    spec: &FunctionSpec,
    a_r: f64,
    cap: usize,
) -> Result<CombinedConstellation> {
    let table = Arc::new(CombinationTable::new(alphabets, spec, cap)?);
    CombinedConstellation::new(table, h_hat, policy, a_r)
}

/// Smallest distance between two points whose function values differ;
/// `+∞` when every entry has the same value.
pub fn min_distance(cc: &CombinedConstellation) -> f64 {
    cc.d_e
}

/// Sort-and-sweep closest pair restricted to pairs in different groups.
fn sweep_min_distance(points: &[Complex64], groups: &[u32]) -> f64 {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| points[a].re.total_cmp(&points[b].re));
    let mut best = f64::INFINITY;
    for i in 0..order.len() {
        let pi = points[order[i]];
        let gi = groups[order[i]];
        for j in (0..i).rev() {
            let pj = points[order[j]];
            if pi.re - pj.re >= best {
                break;
            }
            if groups[order[j]] != gi {
                let d = (pi - pj).norm();
                if d < best {
                    best = d;
                }
            }
        }
    }
    best
}

/// Receiver gain decision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Amplification {
    pub a_r: f64,
    /// Set when the required gain is above the hardware limit `A_RM`.
    pub exceeds_limit: bool,
}

/// `1` when `d_e ≥ d_r`, otherwise `d_r/d_e`.
pub fn amplification_factor(d_e: f64, d_r: f64, a_rm: f64) -> Result<Amplification> {
    if !(d_e > 0.0) {
        return Err(Error::NonpositiveDistance(d_e));
    }
    let a_r = if d_e >= d_r { 1.0 } else { d_r / d_e };
    Ok(Amplification {
        a_r,
        exceeds_limit: a_r > a_rm,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decoded {
    pub f_value: f64,
    pub index: usize,
}

/// Nearest receive point by linear scan; ties go to the lowest index.
pub fn decode(cc: &CombinedConstellation, r: &ReceivedSample) -> Result<Decoded> {
    check_gain(cc, r)?;
    if cc.is_empty() {
        return Err(Error::InvalidInput("empty constellation".into()));
    }
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (m, p) in cc.points.iter().enumerate() {
        let d = (r.value - p).norm_sqr();
        if d < best_d {
            best_d = d;
            best = m;
        }
    }
    Ok(Decoded {
        f_value: cc.f_value(best),
        index: best,
    })
}

fn check_gain(cc: &CombinedConstellation, r: &ReceivedSample) -> Result<()> {
    if r.a_r != cc.a_r {
        return Err(Error::AmplificationMismatch {
            sample: r.a_r,
            constellation: cc.a_r,
        });
    }
    Ok(())
}

/// Points sorted by real part, for nearest-point search that only visits
/// the vertical strip around the query.
#[derive(Debug, Clone)]
pub struct SortedIndex {
    order: Vec<usize>,
    re: Vec<f64>,
}

impl SortedIndex {
    pub fn new(cc: &CombinedConstellation) -> Self {
        let mut order: Vec<usize> = (0..cc.len()).collect();
        order.sort_by(|&a, &b| cc.points[a].re.total_cmp(&cc.points[b].re).then(a.cmp(&b)));
        let re = order.iter().map(|&m| cc.points[m].re).collect();
        SortedIndex { order, re }
    }

    /// Same result as [`decode`], including the tie-break.
    pub fn decode(&self, cc: &CombinedConstellation, r: &ReceivedSample) -> Result<Decoded> {
        check_gain(cc, r)?;
        if cc.is_empty() {
            return Err(Error::InvalidInput("empty constellation".into()));
        }
        let x = r.value.re;
        let start = self.re.partition_point(|&v| v < x);
        let mut best = (f64::INFINITY, usize::MAX);
        let consider = |best: &mut (f64, usize), m: usize| {
            let d = (r.value - cc.points[m]).norm_sqr();
            if d.total_cmp(&best.0).then(m.cmp(&best.1)) == Ordering::Less {
                *best = (d, m);
            }
        };
        for pos in start..self.order.len() {
            let dx = self.re[pos] - x;
            if dx * dx > best.0 {
                break;
            }
            consider(&mut best, self.order[pos]);
        }
        for pos in (0..start).rev() {
            let dx = x - self.re[pos];
            if dx * dx > best.0 {
                break;
            }
            consider(&mut best, self.order[pos]);
        }
        Ok(Decoded {
            f_value: cc.f_value(best.1),
            index: best.1,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::airlink::{amplify, superpose, transmit_coeff};
    use crate::channel::{standard_complex_normal, CVector};
    use crate::constellation::ConstellationSpec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn alphabet(q1: usize, q2: usize, q: usize) -> ModulationAlphabet {
        ModulationAlphabet::from_spec(&ConstellationSpec::new(1.0, 1.0, q1, q2, PI / 3.0, q).unwrap()).unwrap()
    }

    fn levels(q: usize) -> Vec<f64> {
        (1..=q).map(|v| v as f64).collect()
    }

    #[test]
    fn function_values() {
        let s = FunctionSpec::symmetric(FunctionKind::Sum, 3, levels(4)).unwrap();
        assert_eq!(eval_function(&s, &[1.0, 2.0, 3.0]), 6.0);
        let p = FunctionSpec::ramp_weighted(FunctionKind::Product, 4, levels(4)).unwrap();
        assert!((eval_function(&p, &[1.0; 4]) - 3.0 / 32.0).abs() < 1e-15);
        let m = FunctionSpec::symmetric(FunctionKind::Max, 3, levels(4)).unwrap();
        assert_eq!(eval_function(&m, &[4.0, 2.0, 4.0]), 4.0);
        let q = FunctionSpec::symmetric(FunctionKind::SumOfSquares, 2, levels(4)).unwrap();
        assert_eq!(eval_function(&q, &[2.0, 3.0]), 13.0);
    }

    #[test]
    fn function_spec_validation() {
        assert!(FunctionSpec::new(FunctionKind::Sum, vec![1.0], vec![]).is_err());
        assert!(FunctionSpec::new(FunctionKind::Sum, vec![1.0], vec![vec![]]).is_err());
        assert!(FunctionSpec::new(FunctionKind::Sum, vec![], vec![]).is_err());
    }

    #[test]
    fn range_matches_brute_force() {
        for kind in FunctionKind::ALL {
            let spec = FunctionSpec::ramp_weighted(kind, 3, vec![0.0, 1.0, 2.0, 5.0]).unwrap();
            let (lo, hi) = spec.range(DEFAULT_MAX_POINTS).unwrap();
            let (mut blo, mut bhi) = (f64::INFINITY, f64::NEG_INFINITY);
            for a in 0..4 {
                for b in 0..4 {
                    for c in 0..4 {
                        let l = &spec.input_levels()[0];
                        let f = eval_function(&spec, &[l[a], l[b], l[c]]);
                        blo = blo.min(f);
                        bhi = bhi.max(f);
                    }
                }
            }
            assert_eq!((lo, hi), (blo, bhi));
        }
        let spec = FunctionSpec::symmetric(FunctionKind::Sum, 21, levels(4)).unwrap();
        assert!(matches!(
            spec.range(DEFAULT_MAX_POINTS),
            Err(Error::TooManyPoints { .. })
        ));
    }

    #[test]
    fn single_node_constellation() {
        let a = alphabet(2, 2, 2);
        let spec = FunctionSpec::symmetric(FunctionKind::Sum, 1, levels(2)).unwrap();
        let policy = TransmitPolicy::new(PolicyKind::TypeII, 4.0).unwrap();
        let h = Complex64::new(0.3, -0.4);
        let cc = enumerate_combined(std::slice::from_ref(&a), &[h], &policy, &spec, 3.0, DEFAULT_MAX_POINTS).unwrap();
        assert_eq!(cc.len(), 2);
        for m in 0..2 {
            let want = h * a.points()[m] * (3.0 * 2.0);
            assert!((cc.point(m) - want).norm() < 1e-15);
        }
    }

    #[test]
    fn sixty_four_points_for_three_nodes() {
        let a = alphabet(2, 2, 4);
        let spec = FunctionSpec::symmetric(FunctionKind::Sum, 3, levels(4)).unwrap();
        let policy = TransmitPolicy::new(PolicyKind::TypeII, 100.0).unwrap();
        let h = [
            Complex64::new(0.3, 0.1),
            Complex64::new(-0.5, 0.7),
            Complex64::new(0.2, -0.9),
        ];
        let cc = enumerate_combined(&vec![a; 3], &h, &policy, &spec, 1.0, DEFAULT_MAX_POINTS).unwrap();
        assert_eq!(cc.len(), 64);
        assert_eq!(cc.table().n_distinct(), 10);
        let mut seen: Vec<&[usize]> = (0..64).map(|m| cc.combo(m)).collect();
        seen.sort();
        seen.dedup();
        assert_eq!(seen.len(), 64);
        assert_eq!(cc.combo(1), &[0, 0, 1]);
        assert!(cc.d_e() > 0.0);
    }

    #[test]
    fn cap_enforced() {
        let a = alphabet(2, 2, 4);
        let spec = FunctionSpec::symmetric(FunctionKind::Sum, 3, levels(4)).unwrap();
        assert!(matches!(
            CombinationTable::new(&vec![a; 3], &spec, 63),
            Err(Error::TooManyPoints { m: 64, cap: 63 })
        ));
    }

    #[test]
    fn too_many_levels_for_alphabet() {
        let a = alphabet(2, 2, 2);
        let spec = FunctionSpec::symmetric(FunctionKind::Sum, 1, levels(3)).unwrap();
        assert!(CombinationTable::new(&[a], &spec, 100).is_err());
    }

    #[test]
    fn distance_examples() {
        let t = Arc::new(CombinationTable::from_entries(1, vec![0, 1], vec![1.0, 1.0]).unwrap());
        let cc = CombinedConstellation::from_points(t, vec![Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)], 1.0)
            .unwrap();
        assert_eq!(min_distance(&cc), f64::INFINITY);

        let t = Arc::new(CombinationTable::from_entries(1, vec![0, 1], vec![0.0, 1.0]).unwrap());
        let cc = CombinedConstellation::from_points(t, vec![Complex64::new(0.0, 0.0), Complex64::new(3.0, 4.0)], 1.0)
            .unwrap();
        assert_eq!(min_distance(&cc), 5.0);
    }

    #[test]
    fn amplification_cases() {
        assert_eq!(amplification_factor(2.0, 1.0, 10.0).unwrap().a_r, 1.0);
        let a = amplification_factor(0.5, 1.0, 10.0).unwrap();
        assert_eq!(a.a_r, 2.0);
        assert!(!a.exceeds_limit);
        let a = amplification_factor(0.1, 1.0, 5.0).unwrap();
        assert!((a.a_r - 10.0).abs() < 1e-12);
        assert!(a.exceeds_limit);
        assert!(matches!(
            amplification_factor(0.0, 1.0, 5.0),
            Err(Error::NonpositiveDistance(_))
        ));
    }

    #[test]
    fn decode_on_point_and_mismatch() {
        let a = alphabet(2, 2, 4);
        let spec = FunctionSpec::symmetric(FunctionKind::Sum, 2, levels(4)).unwrap();
        let policy = TransmitPolicy::new(PolicyKind::TypeI, 1.0).unwrap();
        let h = [Complex64::new(0.3, 0.1), Complex64::new(-0.5, 0.7)];
        let cc = enumerate_combined(&vec![a; 2], &h, &policy, &spec, 2.0, 100).unwrap();
        for m in 0..cc.len() {
            let r = ReceivedSample {
                value: cc.point(m),
                a_r: 2.0,
            };
            let d = decode(&cc, &r).unwrap();
            assert!(same_value(d.f_value, cc.f_value(m)));
        }
        let r = ReceivedSample {
            value: cc.point(0),
            a_r: 1.0,
        };
        assert!(matches!(decode(&cc, &r), Err(Error::AmplificationMismatch { .. })));
    }

    #[test]
    fn ties_go_to_lowest_index() {
        let t = Arc::new(CombinationTable::from_entries(1, vec![0, 1, 2], vec![0.0, 1.0, 2.0]).unwrap());
        let pts = vec![
            Complex64::new(1.0, 0.0),
            Complex64::new(-1.0, 0.0),
            Complex64::new(1.0, 0.0),
        ];
        let cc = CombinedConstellation::from_points(t, pts, 1.0).unwrap();
        let r = ReceivedSample {
            value: Complex64::new(0.0, 0.0),
            a_r: 1.0,
        };
        assert_eq!(decode(&cc, &r).unwrap().index, 0);
        assert_eq!(SortedIndex::new(&cc).decode(&cc, &r).unwrap().index, 0);
    }

    #[test]
    fn sorted_index_matches_linear_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a = alphabet(2, 2, 4);
        let spec = FunctionSpec::symmetric(FunctionKind::Sum, 3, levels(4)).unwrap();
        let policy = TransmitPolicy::new(PolicyKind::TypeII, 1.0).unwrap();
        let h: Vec<Complex64> = (0..3).map(|_| standard_complex_normal(&mut rng)).collect();
        let cc = enumerate_combined(&vec![a; 3], &h, &policy, &spec, 1.0, 100).unwrap();
        let idx = SortedIndex::new(&cc);
        for _ in 0..10_000 {
            let r = ReceivedSample {
                value: standard_complex_normal(&mut rng) * 1.5,
                a_r: 1.0,
            };
            assert_eq!(decode(&cc, &r).unwrap(), idx.decode(&cc, &r).unwrap());
        }
    }

    #[test]
    fn asymmetric_weights_separate_permutations() {
        let a = alphabet(2, 2, 4);
        let spec = FunctionSpec::ramp_weighted(FunctionKind::Sum, 2, levels(4)).unwrap();
        let policy = TransmitPolicy::new(PolicyKind::TypeII, 1.0).unwrap();
        let h = [Complex64::new(0.8, 0.3), Complex64::new(-0.2, 0.6)];
        let cc = enumerate_combined(&vec![a; 2], &h, &policy, &spec, 1.0, 100).unwrap();
        // (1, 2) and (2, 1): same multiset, f = 0.5 + 2 vs 1 + 1.
        let m12 = 1;
        let m21 = 4;
        assert_eq!(cc.combo(m12), &[0, 1]);
        assert_eq!(cc.combo(m21), &[1, 0]);
        for m in [m12, m21] {
            let r = ReceivedSample {
                value: cc.point(m),
                a_r: 1.0,
            };
            assert!(same_value(decode(&cc, &r).unwrap().f_value, cc.f_value(m)));
        }
        assert!(!same_value(cc.f_value(m12), cc.f_value(m21)));
    }

    #[test]
    fn noiseless_exact_decoding_all_kinds() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let a = alphabet(2, 2, 4);
        for kind in FunctionKind::ALL {
            for spec in [
                FunctionSpec::symmetric(kind, 3, levels(4)).unwrap(),
                FunctionSpec::ramp_weighted(kind, 3, levels(4)).unwrap(),
            ] {
                for pk in [PolicyKind::TypeI, PolicyKind::TypeII] {
                    let policy = TransmitPolicy::new(pk, 100.0).unwrap();
                    let h: Vec<CVector> = (0..3)
                        .map(|_| CVector::from_fn(2, |_, _| standard_complex_normal(&mut rng)))
                        .collect();
                    let sums: Vec<Complex64> = h.iter().map(|v| v.sum()).collect();
                    let table = Arc::new(CombinationTable::new(&vec![a.clone(); 3], &spec, 100).unwrap());
                    let cc = CombinedConstellation::new(table.clone(), &sums, &policy, 1.0).unwrap();
                    let b: Vec<Complex64> = sums.iter().map(|s| transmit_coeff(&policy, *s).unwrap()).collect();
                    for m in 0..cc.len() {
                        let x: Vec<Complex64> = cc
                            .combo(m)
                            .iter()
                            .enumerate()
                            .map(|(k, &q)| table.symbol(k, q))
                            .collect();
                        let r = superpose(&b, &x, &h, 0.0, &mut rng).unwrap();
                        let d = decode(&cc, &amplify(r, 1.0).unwrap()).unwrap();
                        assert!((d.f_value - cc.f_value(m)).abs() <= 1e-9, "{kind:?} {pk:?} m={m}");
                    }
                }
            }
        }
    }

    #[test]
    fn sweep_matches_pairwise_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..200 {
            let n = rng.random_range(2..80);
            let pts: Vec<Complex64> = (0..n).map(|_| standard_complex_normal(&mut rng)).collect();
            let groups: Vec<u32> = (0..n).map(|_| rng.random_range(0..4)).collect();
            let mut want = f64::INFINITY;
            for i in 0..n {
                for j in 0..n {
                    if i != j && groups[i] != groups[j] {
                        want = want.min((pts[i] - pts[j]).norm());
                    }
                }
            }
            assert_eq!(sweep_min_distance(&pts, &groups), want);
        }
    }
}
