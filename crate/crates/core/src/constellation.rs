//! Parametric transmit constellation.
//!
//! The transmit grid is the lattice `a1·q1 + a2·q2·e^{iθ}` for
//! `q1 ∈ 1..=Q1`, `q2 ∈ 1..=Q2`. It is shifted towards the origin, scaled to
//! unit total energy, and the first `Q` points (lexicographic in `(q1, q2)`)
//! form the modulation alphabet shared by every node.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Parameters of the transmit grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstellationSpec {
    a1: f64,
    a2: f64,
    q1: usize,
    q2: usize,
    theta: f64,
    q: usize,
    center_odd_symmetric: bool,
}

impl ConstellationSpec {
    /// Validates and builds a spec. Rejects nonpositive spacings, empty
    /// grids, `Q1·Q2 < Q` and angles with `sin θ = 0`.
    pub fn new(a1: f64, a2: f64, q1: usize, q2: usize, theta: f64, q: usize) -> Result<Self> {
        if !(a1 > 0.0 && a1.is_finite()) || !(a2 > 0.0 && a2.is_finite()) {
            return Err(Error::InvalidSpec(format!(
                "spacings must be positive, got a1={a1}, a2={a2}"
            )));
        }
        if q1 == 0 || q2 == 0 || q == 0 {
            return Err(Error::InvalidSpec(format!(
                "grid dimensions and order must be positive, got Q1={q1}, Q2={q2}, Q={q}"
            )));
        }
        if q1 * q2 < q {
            return Err(Error::QTooLarge { q, grid: q1 * q2 });
        }
        if !theta.is_finite() || theta.sin().abs() < 1e-12 {
            return Err(Error::InvalidSpec(format!(
                "axis angle {theta} collapses the grid onto a line"
            )));
        }
        Ok(ConstellationSpec {
            a1,
            a2,
            q1,
            q2,
            theta,
            q,
            center_odd_symmetric: false,
        })
    }

    /// Use the `(Q + 1)/2` offset for odd grids too, which zero-centers them.
    pub fn with_center_odd_symmetric(mut self, on: bool) -> Self {
        self.center_odd_symmetric = on;
        self
    }

    pub fn a1(&self) -> f64 {
        self.a1
    }
    pub fn a2(&self) -> f64 {
        self.a2
    }
    pub fn q1(&self) -> usize {
        self.q1
    }
    pub fn q2(&self) -> usize {
        self.q2
    }
    pub fn theta(&self) -> f64 {
        self.theta
    }
    pub fn q(&self) -> usize {
        self.q
    }
    pub fn center_odd_symmetric(&self) -> bool {
        self.center_odd_symmetric
    }

    fn axis(&self) -> Complex64 {
        Complex64::from_polar(1.0, self.theta)
    }
}

/// How the `Q` alphabet points were chosen from the normalized grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SelectionRule {
    /// First `Q` points in lexicographic `(q1, q2)` order.
    LexicographicPrefix,
}

/// The normalized grid and the `Q` points nodes actually transmit.
#[derive(Debug, Clone, PartialEq)]
pub struct ModulationAlphabet {
    points: Vec<Complex64>,
    full_grid: Vec<Complex64>,
    spec: ConstellationSpec,
    rule: SelectionRule,
}

impl ModulationAlphabet {
    /// Runs the full build → center → normalize → select chain.
    pub fn from_spec(spec: &ConstellationSpec) -> Result<Self> {
        let grid = build_grid(spec);
        let centered = center_grid(&grid, spec);
        let normalized = normalize(&centered)?;
        select_alphabet(&normalized, spec)
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn full_grid(&self) -> &[Complex64] {
        &self.full_grid
    }

    pub fn spec(&self) -> &ConstellationSpec {
        &self.spec
    }

    pub fn rule(&self) -> SelectionRule {
        self.rule
    }

    pub fn order(&self) -> usize {
        self.points.len()
    }

    /// Maps a quantization level to its transmit symbol.
    pub fn encode(&self, level: usize) -> Result<Complex64> {
        self.points.get(level).copied().ok_or(Error::LevelOutOfRange {
            level,
            q: self.points.len(),
        })
    }
}

/// Lattice points `a1·q1 + a2·q2·e^{iθ}`, ordered by `(q1, q2)`.
pub fn build_grid(spec: &ConstellationSpec) -> Vec<Complex64> {
    let axis = spec.axis();
    let mut grid = Vec::with_capacity(spec.q1 * spec.q2);
    for q1 in 1..=spec.q1 {
        for q2 in 1..=spec.q2 {
            grid.push(spec.a1 * q1 as f64 + spec.a2 * q2 as f64 * axis);
        }
    }
    grid
}

/// Shifts the grid. Odd-by-odd grids subtract `a·Q/2` per axis, every other
/// shape subtracts `a·(Q + 1)/2`; only the latter is zero-mean. The odd
/// branch leaves a half-spacing offset unless `center_odd_symmetric` is set.
pub fn center_grid(grid: &[Complex64], spec: &ConstellationSpec) -> Vec<Complex64> {
    let both_odd = spec.q1 % 2 == 1 && spec.q2 % 2 == 1;
    let (h1, h2) = if both_odd && !spec.center_odd_symmetric {
        (spec.q1 as f64 / 2.0, spec.q2 as f64 / 2.0)
    } else {
        ((spec.q1 as f64 + 1.0) / 2.0, (spec.q2 as f64 + 1.0) / 2.0)
    };
    let offset = spec.a1 * h1 + spec.a2 * h2 * spec.axis();
    grid.iter().map(|&x| x - offset).collect()
}

/// Scales the point vector to unit Euclidean norm.
pub fn normalize(grid: &[Complex64]) -> Result<Vec<Complex64>> {
    let norm = grid.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    if grid.is_empty() || !(norm >= 1e-15) {
        return Err(Error::AllZeroGrid);
    }
    Ok(grid.iter().map(|&x| x / norm).collect())
}

/// Takes the lexicographic prefix of length `spec.q()` from a normalized grid.
pub fn select_alphabet(full_grid: &[Complex64], spec: &ConstellationSpec) -> Result<ModulationAlphabet> {
    if spec.q > full_grid.len() {
        return Err(Error::QTooLarge {
            q: spec.q,
            grid: full_grid.len(),
        });
    }
    Ok(ModulationAlphabet {
        points: full_grid[..spec.q].to_vec(),
        full_grid: full_grid.to_vec(),
        spec: spec.clone(),
        rule: SelectionRule::LexicographicPrefix,
    })
}

/// Uniform quantizer onto `Q` levels; values outside the range clamp.
pub fn quantize(value: f64, range_min: f64, range_max: f64, q: usize) -> Result<usize> {
    if !(range_min < range_max) || q == 0 {
        return Err(Error::InvalidInput(format!(
            "quantizer needs range_min < range_max and Q > 0, got [{range_min}, {range_max}], Q={q}"
        )));
    }
    let scaled = ((value - range_min) / (range_max - range_min) * q as f64).floor();
    Ok(if scaled.is_nan() || scaled < 0.0 {
        0
    } else {
        (scaled as usize).min(q - 1)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn close(a: Complex64, b: Complex64) -> bool {
        (a - b).norm() < 1e-12
    }

    #[test]
    fn single_point_grid() {
        let spec = ConstellationSpec::new(1.0, 1.0, 1, 1, PI / 3.0, 1).unwrap();
        let g = build_grid(&spec);
        assert_eq!(g.len(), 1);
        assert!(close(g[0], 1.0 + Complex64::from_polar(1.0, PI / 3.0)));
    }

    #[test]
    fn two_by_two_grid_order() {
        let spec = ConstellationSpec::new(1.0, 1.0, 2, 2, PI / 3.0, 4).unwrap();
        let e = Complex64::from_polar(1.0, PI / 3.0);
        let g = build_grid(&spec);
        let want = [1.0 + e, 1.0 + 2.0 * e, 2.0 + e, 2.0 + 2.0 * e];
        for (a, b) in g.iter().zip(want) {
            assert!(close(*a, b));
        }
    }

    #[test]
    fn three_by_one_grid() {
        let spec = ConstellationSpec::new(2.0, 1.0, 3, 1, PI / 2.0, 3).unwrap();
        let g = build_grid(&spec);
        for (a, b) in g.iter().zip([c(2.0, 1.0), c(4.0, 1.0), c(6.0, 1.0)]) {
            assert!(close(*a, b));
        }
    }

    #[test]
    fn centering_even_grid() {
        let spec = ConstellationSpec::new(1.0, 1.0, 2, 2, PI / 3.0, 4).unwrap();
        let e = Complex64::from_polar(1.0, PI / 3.0);
        let centered = center_grid(&build_grid(&spec), &spec);
        let want = [-0.5 - 0.5 * e, -0.5 + 0.5 * e, 0.5 - 0.5 * e, 0.5 + 0.5 * e];
        for (a, b) in centered.iter().zip(want) {
            assert!(close(*a, b));
        }
        let mean: Complex64 = centered.iter().sum::<Complex64>() / 4.0;
        assert!(mean.norm() < 1e-12);
    }

    #[test]
    fn centering_odd_grid_keeps_half_offset() {
        let spec = ConstellationSpec::new(1.0, 1.0, 3, 3, PI / 3.0, 9).unwrap();
        let e = Complex64::from_polar(1.0, PI / 3.0);
        let centered = center_grid(&build_grid(&spec), &spec);
        // Real-axis coordinate: remove the θ-axis component.
        let mut a1_coords: Vec<f64> = centered
            .iter()
            .map(|x| {
                let along_theta = x.im / e.im;
                x.re - along_theta * e.re
            })
            .collect();
        a1_coords.sort_by(f64::total_cmp);
        a1_coords.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
        assert_eq!(a1_coords.len(), 3);
        for (a, b) in a1_coords.iter().zip([-0.5, 0.5, 1.5]) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }

        let sym = spec.clone().with_center_odd_symmetric(true);
        let centered = center_grid(&build_grid(&sym), &sym);
        let mean: Complex64 = centered.iter().sum::<Complex64>() / 9.0;
        assert!(mean.norm() < 1e-12);
    }

    #[test]
    fn normalize_examples() {
        assert_eq!(normalize(&[c(1.0, 0.0)]).unwrap(), vec![c(1.0, 0.0)]);
        let n = normalize(&[c(3.0, 0.0), c(0.0, 4.0)]).unwrap();
        assert!(close(n[0], c(0.6, 0.0)) && close(n[1], c(0.0, 0.8)));

        let spec = ConstellationSpec::new(1.0, 1.0, 2, 2, PI / 3.0, 4).unwrap();
        let centered = center_grid(&build_grid(&spec), &spec);
        let n = normalize(&centered).unwrap();
        for (a, b) in n.iter().zip(&centered) {
            assert!(close(*a, *b / 2f64.sqrt()));
        }
        assert!(matches!(normalize(&[c(0.0, 0.0)]), Err(Error::AllZeroGrid)));
        assert!(matches!(normalize(&[]), Err(Error::AllZeroGrid)));
    }

    #[test]
    fn selection_prefix() {
        let spec = ConstellationSpec::new(1.0, 1.0, 3, 3, PI / 3.0, 8).unwrap();
        let alpha = ModulationAlphabet::from_spec(&spec).unwrap();
        assert_eq!(alpha.points(), &alpha.full_grid()[..8]);
        // The dropped point is (q1, q2) = (3, 3), the last in lexicographic order.
        let full = ConstellationSpec::new(1.0, 1.0, 3, 3, PI / 3.0, 9).unwrap();
        let all = ModulationAlphabet::from_spec(&full).unwrap();
        assert!(!alpha.points().contains(&all.points()[8]));

        let spec = ConstellationSpec::new(1.0, 1.0, 2, 2, PI / 3.0, 2).unwrap();
        let alpha = ModulationAlphabet::from_spec(&spec).unwrap();
        let grid = normalize(&center_grid(&build_grid(&spec), &spec)).unwrap();
        assert_eq!(alpha.points(), &[grid[0], grid[1]]);

        let four = ConstellationSpec::new(1.0, 1.0, 2, 2, PI / 3.0, 4).unwrap();
        let alpha = ModulationAlphabet::from_spec(&four).unwrap();
        assert_eq!(alpha.points(), alpha.full_grid());
    }

    #[test]
    fn q_too_large_rejected() {
        assert!(matches!(
            ConstellationSpec::new(1.0, 1.0, 2, 2, 1.0, 5),
            Err(Error::QTooLarge { q: 5, grid: 4 })
        ));
        let spec = ConstellationSpec::new(1.0, 1.0, 2, 2, 1.0, 4).unwrap();
        let grid = normalize(&build_grid(&spec)).unwrap();
        assert!(select_alphabet(&grid[..3], &spec).is_err());
    }

    #[test]
    fn degenerate_specs_rejected() {
        assert!(ConstellationSpec::new(0.0, 1.0, 2, 2, 1.0, 4).is_err());
        assert!(ConstellationSpec::new(1.0, -1.0, 2, 2, 1.0, 4).is_err());
        assert!(ConstellationSpec::new(1.0, 1.0, 2, 2, 0.0, 4).is_err());
        assert!(ConstellationSpec::new(1.0, 1.0, 2, 2, PI, 4).is_err());
    }

    #[test]
    fn encode_levels() {
        let spec = ConstellationSpec::new(1.0, 1.0, 2, 2, PI / 3.0, 4).unwrap();
        let alpha = ModulationAlphabet::from_spec(&spec).unwrap();
        assert_eq!(alpha.encode(0).unwrap(), alpha.points()[0]);
        for i in 0..4 {
            for j in 0..4 {
                if i != j {
                    assert_ne!(alpha.encode(i).unwrap(), alpha.encode(j).unwrap());
                }
            }
        }
        assert!(matches!(
            alpha.encode(4),
            Err(Error::LevelOutOfRange { level: 4, q: 4 })
        ));
        // Two distinct axes: the four points are not collinear.
        let p = alpha.points();
        let cross = ((p[1] - p[0]).conj() * (p[2] - p[0])).im;
        assert!(cross.abs() > 1e-6);
    }

    #[test]
    fn quantizer() {
        assert_eq!(quantize(0.0, 0.0, 8.0, 8).unwrap(), 0);
        assert_eq!(quantize(8.0, 0.0, 8.0, 8).unwrap(), 7);
        assert_eq!(quantize(3.2, 0.0, 8.0, 8).unwrap(), 3);
        assert_eq!(quantize(-5.0, 0.0, 8.0, 8).unwrap(), 0);
        assert_eq!(quantize(1e9, 0.0, 8.0, 8).unwrap(), 7);
        assert!(quantize(1.0, 2.0, 2.0, 8).is_err());
    }

    fn spec_strategy() -> impl Strategy<Value = ConstellationSpec> {
        (
            0.1f64..5.0,
            0.1f64..5.0,
            1usize..6,
            1usize..6,
            0.05f64..3.09,
            any::<bool>(),
        )
            .prop_flat_map(|(a1, a2, q1, q2, theta, sym)| {
                (1..=q1 * q2).prop_map(move |q| {
                    ConstellationSpec::new(a1, a2, q1, q2, theta, q)
                        .unwrap()
                        .with_center_odd_symmetric(sym)
                })
            })
    }

    proptest! {
        #[test]
        fn grid_is_unit_energy_and_distinct(spec in spec_strategy()) {
            let grid = build_grid(&spec);
            prop_assert_eq!(grid.len(), spec.q1() * spec.q2());
            let alpha = ModulationAlphabet::from_spec(&spec);
            // Symmetric centering of a 1x1 grid puts its only point at the origin.
            if grid.len() == 1 && spec.center_odd_symmetric() {
                prop_assert!(alpha.is_err());
                return Ok(());
            }
            let alpha = alpha.unwrap();
            let energy: f64 = alpha.full_grid().iter().map(|x| x.norm_sqr()).sum();
            prop_assert!((energy - 1.0).abs() < 1e-12);
            for i in 0..grid.len() {
                for j in 0..i {
                    prop_assert!((grid[i] - grid[j]).norm() > 1e-9);
                }
            }
            prop_assert_eq!(alpha.clone(), ModulationAlphabet::from_spec(&spec).unwrap());
        }

        #[test]
        fn even_grids_are_zero_mean(
            a1 in 0.1f64..5.0, a2 in 0.1f64..5.0,
            h1 in 1usize..4, h2 in 1usize..4, theta in 0.05f64..3.09,
        ) {
            let spec = ConstellationSpec::new(a1, a2, 2 * h1, 2 * h2, theta, 1).unwrap();
            let centered = center_grid(&build_grid(&spec), &spec);
            let mean: Complex64 = centered.iter().sum::<Complex64>() / centered.len() as f64;
            prop_assert!(mean.norm() < 1e-12);
        }
    }
}
