//! Cell-free processing: fully centralized aggregation (FCP) and local
//! decoding with a centralized, optionally channel-weighted vote (LPCV).

use num_complex::Complex64;

use crate::airlink::ReceivedSample;
use crate::demod::{decode, same_value, CombinedConstellation};
use crate::error::{Error, Result};

/// A square area with CPs at the centers of a `√C × √C` partition.
#[derive(Debug, Clone, PartialEq)]
pub struct CellFreeLayout {
    pub area_m: f64,
    pub cp_positions: Vec<(f64, f64)>,
    pub antennas_per_cp: usize,
}

impl CellFreeLayout {
    /// Places `n_cps` CPs on a grid over a square of side `area_m` centered at
    /// the origin and splits `total_antennas` evenly among them.
    pub fn square_grid(area_m: f64, n_cps: usize, total_antennas: usize) -> Result<Self> {
        let side = (n_cps as f64).sqrt().round() as usize;
        if n_cps == 0 || side * side != n_cps {
            return Err(Error::Config(format!(
                "number of CPs must be a perfect square, got {n_cps}"
            )));
        }
        if !total_antennas.is_multiple_of(n_cps) {
            return Err(Error::Config(format!(
                "{total_antennas} antennas cannot be split evenly over {n_cps} CPs"
            )));
        }
        if !(area_m >= 0.0 && area_m.is_finite()) {
            return Err(Error::Config(format!("invalid area side {area_m}")));
        }
        let cell = area_m / side as f64;
        let origin = -area_m / 2.0;
        let mut cp_positions = Vec::with_capacity(n_cps);
        for row in 0..side {
            for col in 0..side {
                cp_positions.push((origin + (col as f64 + 0.5) * cell, origin + (row as f64 + 0.5) * cell));
            }
        }
        Ok(CellFreeLayout {
            area_m,
            cp_positions,
            antennas_per_cp: total_antennas / n_cps,
        })
    }

    pub fn n_cps(&self) -> usize {
        self.cp_positions.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Processing {
    Fcp,
    Lpcv(VoteWeighting),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VoteWeighting {
    Uniform,
    ChannelAware,
}

impl VoteWeighting {
    pub fn name(self) -> &'static str {
        match self {
            VoteWeighting::Uniform => "uniform",
            VoteWeighting::ChannelAware => "channel_aware",
        }
    }
}

/// `a_r·Σ_c r_c` over the raw per-CP signals.
pub fn fcp_aggregate(per_cp_signals: &[Complex64], a_r: f64) -> Result<ReceivedSample> {
    crate::airlink::amplify(per_cp_signals.iter().sum(), a_r)
}

/// Local decode at one CP against its own constellation and gain.
pub fn lpcv_local_decode(signal: &ReceivedSample, cc_c: &CombinedConstellation) -> Result<f64> {
    Ok(decode(cc_c, signal)?.f_value)
}

/// Channel-quality score `|Σ_k ĥ_k|² / (1 + max_k |ĥ_k|² − min_k |ĥ_k|²)`
/// from the antenna-summed estimates at one CP.
pub fn weight_sc(h_hat: &[Complex64]) -> f64 {
    if h_hat.is_empty() {
        return 0.0;
    }
    let total = h_hat.iter().sum::<Complex64>().norm_sqr();
    let (lo, hi) = h_hat
        .iter()
        .map(|h| h.norm_sqr())
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), p| (lo.min(p), hi.max(p)));
    total / (1.0 + hi - lo)
}

/// Vote weights `ω_c`: all ones, or `S_c / Σ_j S_j`.
pub fn vote_weights(scores: &[f64], weighting: VoteWeighting) -> Vec<f64> {
    match weighting {
        VoteWeighting::Uniform => vec![1.0; scores.len()],
        VoteWeighting::ChannelAware => {
            let total: f64 = scores.iter().sum();
            if total > 0.0 {
                scores.iter().map(|s| s / total).collect()
            } else {
                vec![1.0 / scores.len() as f64; scores.len()]
            }
        }
    }
}

/// Weighted plurality over `(f̂_c, S_c)` votes. Ties go to the smallest value.
pub fn weighted_vote(votes: &[(f64, f64)], weighting: VoteWeighting) -> Result<f64> {
    if votes.is_empty() {
        return Err(Error::NoVotes);
    }
    let scores: Vec<f64> = votes.iter().map(|v| v.1).collect();
    let weights = vote_weights(&scores, weighting);
    let mut tally: Vec<(f64, f64)> = Vec::new();
    for (&(f, _), w) in votes.iter().zip(weights) {
        match tally.iter_mut().find(|(v, _)| same_value(*v, f)) {
            Some(slot) => {
                slot.0 = slot.0.min(f);
                slot.1 += w;
            }
            None => tally.push((f, w)),
        }
    }
    tally.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut best = tally[0];
    for &cand in &tally[1..] {
        if cand.1 > best.1 {
            best = cand;
        }
    }
    Ok(best.0)
}

/// Complex values sent over the fronthaul per trial.
pub fn fronthaul_per_trial(processing: Processing, n_cps: usize, n_nodes: usize, antennas_per_cp: usize) -> usize {
    match processing {
        Processing::Fcp => n_cps * (n_nodes * antennas_per_cp + 1),
        Processing::Lpcv(VoteWeighting::Uniform) => n_cps,
        Processing::Lpcv(VoteWeighting::ChannelAware) => 2 * n_cps,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn grid_layouts() {
        let l = CellFreeLayout::square_grid(1000.0, 4, 144).unwrap();
        assert_eq!(l.antennas_per_cp, 36);
        let mut pos = l.cp_positions.clone();
        pos.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(
            pos,
            vec![(-250.0, -250.0), (-250.0, 250.0), (250.0, -250.0), (250.0, 250.0)]
        );

        let l = CellFreeLayout::square_grid(1000.0, 1, 144).unwrap();
        assert_eq!(l.cp_positions, vec![(0.0, 0.0)]);
        assert_eq!(CellFreeLayout::square_grid(1000.0, 36, 144).unwrap().antennas_per_cp, 4);

        assert!(CellFreeLayout::square_grid(1000.0, 3, 144).is_err());
        assert!(CellFreeLayout::square_grid(1000.0, 25, 144).is_err());
    }

    #[test]
    fn aggregate() {
        let r = fcp_aggregate(&[c(1.0, 2.0)], 3.0).unwrap();
        assert_eq!(r.value, c(3.0, 6.0));
        let r = fcp_aggregate(&[c(1.0, 2.0), c(-0.5, 1.0)], 1.0).unwrap();
        assert_eq!(r.value, c(0.5, 3.0));
    }

    #[test]
    fn score_examples() {
        assert_eq!(weight_sc(&[c(1.0, 0.0)]), 1.0);
        assert_eq!(weight_sc(&[c(1.0, 0.0), c(0.0, 0.0)]), 0.5);
        let h = [c(0.3, 0.4), c(-1.0, 0.2), c(0.5, 0.5)];
        let rot = Complex64::from_polar(1.0, 0.77);
        let hr: Vec<Complex64> = h.iter().map(|v| v * rot).collect();
        assert!((weight_sc(&h) - weight_sc(&hr)).abs() < 1e-12);
    }

    #[test]
    fn vote_examples() {
        let v = [(2.0, 1.0), (2.0, 1.0), (3.0, 1.0)];
        assert_eq!(weighted_vote(&v, VoteWeighting::Uniform).unwrap(), 2.0);
        let v = [(2.0, 0.7), (3.0, 0.3)];
        assert_eq!(weighted_vote(&v, VoteWeighting::ChannelAware).unwrap(), 2.0);
        let v = [(2.0, 0.3), (3.0, 0.7)];
        assert_eq!(weighted_vote(&v, VoteWeighting::ChannelAware).unwrap(), 3.0);
        assert_eq!(weighted_vote(&[(5.5, 0.1)], VoteWeighting::Uniform).unwrap(), 5.5);
        assert!(matches!(
            weighted_vote(&[], VoteWeighting::Uniform),
            Err(Error::NoVotes)
        ));
        // Tie goes to the smaller value.
        let v = [(3.0, 1.0), (2.0, 1.0)];
        assert_eq!(weighted_vote(&v, VoteWeighting::Uniform).unwrap(), 2.0);
    }

    #[test]
    fn fronthaul_counts() {
        assert_eq!(fronthaul_per_trial(Processing::Fcp, 4, 4, 36), 4 * (4 * 36 + 1));
        assert_eq!(
            fronthaul_per_trial(Processing::Lpcv(VoteWeighting::Uniform), 16, 4, 9),
            16
        );
        assert_eq!(
            fronthaul_per_trial(Processing::Lpcv(VoteWeighting::ChannelAware), 16, 4, 9),
            32
        );
    }

    proptest! {
        #[test]
        fn weights_form_probability_vector(scores in proptest::collection::vec(0.0f64..1e3, 1..40)) {
            prop_assume!(scores.iter().sum::<f64>() > 0.0);
            let w = vote_weights(&scores, VoteWeighting::ChannelAware);
            prop_assert!(w.iter().all(|&x| x >= 0.0));
            prop_assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn argmax_invariant_to_score_scaling(
            votes in proptest::collection::vec((0u8..5, 0.01f64..10.0), 1..20),
            scale in 0.001f64..1000.0,
        ) {
            let a: Vec<(f64, f64)> = votes.iter().map(|&(f, s)| (f as f64, s)).collect();
            let b: Vec<(f64, f64)> = votes.iter().map(|&(f, s)| (f as f64, s * scale)).collect();
            // Scaling can shift exact ties by an ulp; require a clear margin.
            let pa = weighted_vote(&a, VoteWeighting::ChannelAware).unwrap();
            let pb = weighted_vote(&b, VoteWeighting::ChannelAware).unwrap();
            let mut tally = [0.0f64; 5];
            for &(f, s) in &a { tally[f as usize] += s; }
            let mut sorted = tally;
            sorted.sort_by(|x, y| y.total_cmp(x));
            if sorted[0] - sorted[1] > 1e-9 * sorted[0] {
                prop_assert_eq!(pa, pb);
            }
        }

        #[test]
        fn equal_scores_match_uniform(fs in proptest::collection::vec(0u8..4, 1..30), s in 0.01f64..10.0) {
            let votes: Vec<(f64, f64)> = fs.iter().map(|&f| (f as f64, s)).collect();
            prop_assert_eq!(
                weighted_vote(&votes, VoteWeighting::ChannelAware).unwrap(),
                weighted_vote(&votes, VoteWeighting::Uniform).unwrap()
            );
        }
    }
}
