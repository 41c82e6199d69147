//! Normalized Distance-based Performance Measure.
//!
//! For a system ranking versus a reference judgment, over all unordered
//! website pairs the reference orders strictly:
//!
//! * `C⁻` — the system orders the pair the other way round (contradiction,
//!   weight 1);
//! * `Cᵘ` — the system ties the pair (a compatible but missed prediction,
//!   weight 0.5, so contradicting costs exactly twice as much as not
//!   predicting);
//! * `Cⁱ` — the number of reference strict pairs (the normalizer).
//!
//! `NDPM = (C⁻ + 0.5·Cᵘ) / Cⁱ`, always in [0, 1]. Total agreement scores 0;
//! contradicting every reference preference scores 1. Pairs the reference is
//! indifferent about are not scored at all: the measure never punishes the
//! system for ordering items the reference ties.
//!
//! Note `Cⁱ` counts reference strict pairs — not "pairs ranked in the same
//! order" — since that is the only reading under which both boundary cases
//! (perfect 0, total contradiction 1) and the [0, 1] bounds come out right.

use std::cmp::Ordering;
use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::simrank::Ranking;
use crate::{Error, Result};

/// A reference ordering of websites for one evaluation item. Equal ranks
/// denote ties; smaller rank is better.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreferenceJudgment {
    pub item_id: String,
    pub reference_order: Vec<(String, u32)>,
}

impl PreferenceJudgment {
    fn validate(&self) -> Result<()> {
        if self.reference_order.len() < 2 {
            return Err(Error::InvalidParameter(format!(
                "judgment {}: needs at least two websites",
                self.item_id
            )));
        }
        let mut seen = std::collections::HashSet::new();
        for (website, _) in &self.reference_order {
            if !seen.insert(website.as_str()) {
                return Err(Error::InvalidParameter(format!(
                    "judgment {}: duplicate website {website}",
                    self.item_id
                )));
            }
        }
        Ok(())
    }

    /// Restriction to a subset of websites.
    fn project(&self, keep: &dyn Fn(&str) -> bool) -> PreferenceJudgment {
        PreferenceJudgment {
            item_id: self.item_id.clone(),
            reference_order: self
                .reference_order
                .iter()
                .filter(|(w, _)| keep(w))
                .cloned()
                .collect(),
        }
    }
}

/// Pair counts and the final score.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NdpmResult {
    /// C⁻: reference strict, system reversed.
    pub contradicted: usize,
    /// Cᵘ: reference strict, system tied (missed prediction).
    pub compatible: usize,
    /// Cⁱ: reference strict pairs.
    pub reference_pairs: usize,
    pub score: f64,
}

/// How the system ranking relates two websites: entries earlier in the list
/// are preferred, equal scores are ties.
fn system_preference(positions: &HashMap<&str, (usize, f64)>, a: &str, b: &str) -> Ordering {
    let (pos_a, score_a) = positions[a];
    let (pos_b, score_b) = positions[b];
    if score_a == score_b {
        Ordering::Equal
    } else {
        pos_a.cmp(&pos_b)
    }
}

/// Computes NDPM. The system ranking and the reference must cover the same
/// website set; a reference with no strict pair leaves the measure undefined.
pub fn ndpm(system: &Ranking, reference: &PreferenceJudgment) -> Result<NdpmResult> {
    reference.validate()?;
    let positions: HashMap<&str, (usize, f64)> = system
        .entries
        .iter()
        .enumerate()
        .map(|(i, e)| (e.website.as_str(), (i, e.score)))
        .collect();
    if positions.len() != reference.reference_order.len()
        || reference
            .reference_order
            .iter()
            .any(|(w, _)| !positions.contains_key(w.as_str()))
    {
        let sys: Vec<&str> = system.websites().collect();
        let refs: Vec<&str> = reference
            .reference_order
            .iter()
            .map(|(w, _)| w.as_str())
            .collect();
        return Err(Error::WebsiteSetMismatch(format!(
            "system {sys:?} vs reference {refs:?}"
        )));
    }

    let mut contradicted = 0usize;
    let mut compatible = 0usize;
    let mut reference_pairs = 0usize;
    let order = &reference.reference_order;
    for i in 0..order.len() {
        for j in i + 1..order.len() {
            let (ref a, rank_a) = order[i];
            let (ref b, rank_b) = order[j];
            let ref_pref = rank_a.cmp(&rank_b);
            if ref_pref == Ordering::Equal {
                continue; // reference indifference is never scored
            }
            reference_pairs += 1;
            match system_preference(&positions, a, b) {
                Ordering::Equal => compatible += 1,
                sys_pref if sys_pref != ref_pref => contradicted += 1,
                _ => {}
            }
        }
    }
    if reference_pairs == 0 {
        return Err(Error::UndefinedNdpm);
    }
    let score = (contradicted as f64 + 0.5 * compatible as f64) / reference_pairs as f64;
    Ok(NdpmResult {
        contradicted,
        compatible,
        reference_pairs,
        score,
    })
}

/// NDPM over the websites common to system and reference — the projection the
/// sweep harness applies before scoring (price rankings may omit no-data
/// websites). Returns None when the measure is undefined on the common set.
pub fn ndpm_on_common(system: &Ranking, reference: &PreferenceJudgment) -> Option<NdpmResult> {
    let sys_sites: std::collections::HashSet<&str> = system.websites().collect();
    let projected_ref = reference.project(&|w| sys_sites.contains(w));
    let ref_sites: std::collections::HashSet<&str> = projected_ref
        .reference_order
        .iter()
        .map(|(w, _)| w.as_str())
        .collect();
    let projected_sys = Ranking {
        criterion: system.criterion.clone(),
        entries: system
            .entries
            .iter()
            .filter(|e| ref_sites.contains(e.website.as_str()))
            .cloned()
            .collect(),
        no_data: Vec::new(),
    };
    ndpm(&projected_sys, &projected_ref).ok()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simrank::RankEntry;
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ranking(order: &[(&str, f64)]) -> Ranking {
        Ranking {
            criterion: "test".into(),
            entries: order
                .iter()
                .map(|(w, s)| RankEntry {
                    website: w.to_string(),
                    score: *s,
                })
                .collect(),
            no_data: Vec::new(),
        }
    }

    fn judgment(order: &[(&str, u32)]) -> PreferenceJudgment {
        PreferenceJudgment {
            item_id: "q".into(),
            reference_order: order.iter().map(|(w, r)| (w.to_string(), *r)).collect(),
        }
    }

    #[test]
    fn total_agreement_scores_zero() {
        let sys = ranking(&[("a", 3.0), ("b", 2.0), ("c", 1.0)]);
        let r = ndpm(&sys, &judgment(&[("a", 1), ("b", 2), ("c", 3)])).unwrap();
        assert_eq!(r.score, 0.0);
        assert_eq!(r.reference_pairs, 3);
    }

    #[test]
    fn total_reversal_scores_one() {
        let sys = ranking(&[("c", 3.0), ("b", 2.0), ("a", 1.0)]);
        let r = ndpm(&sys, &judgment(&[("a", 1), ("b", 2), ("c", 3)])).unwrap();
        assert_eq!(r.score, 1.0);
        assert_eq!(r.contradicted, 3);
    }

    #[test]
    fn one_swapped_pair_scores_one_third() {
        // reference a>b>c, system a>c>b: only the (b,c) pair contradicts
        let sys = ranking(&[("a", 3.0), ("c", 2.0), ("b", 1.0)]);
        let r = ndpm(&sys, &judgment(&[("a", 1), ("b", 2), ("c", 3)])).unwrap();
        assert_eq!(r.reference_pairs, 3);
        assert_eq!(r.contradicted, 1);
        assert_eq!(r.compatible, 0);
        assert!((r.score - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn system_tie_on_reference_tie_costs_nothing() {
        let sys = ranking(&[("a", 2.0), ("b", 1.0), ("c", 1.0)]);
        let r = ndpm(&sys, &judgment(&[("a", 1), ("b", 2), ("c", 2)])).unwrap();
        assert_eq!(r.compatible, 0);
        assert_eq!(r.score, 0.0);
    }

    #[test]
    fn system_strict_on_reference_tie_costs_nothing() {
        // reference: a>b, a>c, a>d, b>c, b>d strict; c=d tied — a fully
        // strict system is never punished for breaking the reference tie
        let sys = ranking(&[("a", 4.0), ("b", 3.0), ("c", 2.0), ("d", 1.0)]);
        let r = ndpm(&sys, &judgment(&[("a", 1), ("b", 2), ("c", 3), ("d", 3)])).unwrap();
        assert_eq!(r.reference_pairs, 5);
        assert_eq!(r.compatible, 0);
        assert_eq!(r.contradicted, 0);
        assert_eq!(r.score, 0.0);
    }

    #[test]
    fn contradiction_costs_twice_a_missed_prediction() {
        let reference = judgment(&[("a", 1), ("b", 2)]);
        let tied = ndpm(&ranking(&[("a", 1.0), ("b", 1.0)]), &reference).unwrap();
        let reversed = ndpm(&ranking(&[("b", 2.0), ("a", 1.0)]), &reference).unwrap();
        assert_eq!(tied.score, 0.5);
        assert_eq!(tied.compatible, 1);
        assert_eq!(reversed.score, 1.0);
        assert!(tied.score < reversed.score);
        assert_eq!(reversed.score, 2.0 * tied.score);
    }

    #[test]
    fn all_tied_reference_is_undefined() {
        let sys = ranking(&[("a", 2.0), ("b", 1.0)]);
        assert!(matches!(
            ndpm(&sys, &judgment(&[("a", 1), ("b", 1)])),
            Err(Error::UndefinedNdpm)
        ));
    }

    #[test]
    fn website_set_mismatch_errors() {
        let sys = ranking(&[("a", 2.0), ("b", 1.0)]);
        assert!(matches!(
            ndpm(&sys, &judgment(&[("a", 1), ("z", 2)])),
            Err(Error::WebsiteSetMismatch(_))
        ));
    }

    #[test]
    fn projection_scores_common_subset() {
        // system omits d (no data); projection drops it from the reference
        let sys = ranking(&[("a", 3.0), ("b", 2.0), ("c", 1.0)]);
        let full = judgment(&[("a", 1), ("b", 2), ("c", 3), ("d", 4)]);
        let r = ndpm_on_common(&sys, &full).unwrap();
        assert_eq!(r.reference_pairs, 3);
        assert_eq!(r.score, 0.0);
    }

    #[test]
    fn reversal_duality_without_ties() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let sites = ["a", "b", "c", "d", "e", "f"];
        for _ in 0..200 {
            let mut order: Vec<&str> = sites.to_vec();
            order.shuffle(&mut rng);
            let sys: Vec<(&str, f64)> = order
                .iter()
                .enumerate()
                .map(|(i, w)| (*w, (10 - i) as f64))
                .collect();
            let rev: Vec<(&str, f64)> = order
                .iter()
                .rev()
                .enumerate()
                .map(|(i, w)| (*w, (10 - i) as f64))
                .collect();
            let mut ref_order: Vec<&str> = sites.to_vec();
            ref_order.shuffle(&mut rng);
            let reference = judgment(
                &ref_order
                    .iter()
                    .enumerate()
                    .map(|(i, w)| (*w, (i + 1) as u32))
                    .collect::<Vec<_>>(),
            );
            let fwd = ndpm(&ranking(&sys), &reference).unwrap().score;
            let bwd = ndpm(&ranking(&rev), &reference).unwrap().score;
            assert!(
                (fwd + bwd - 1.0).abs() < 1e-12,
                "duality broke: {fwd} + {bwd}"
            );
        }
    }

    #[test]
    fn bounds_hold_with_random_ties() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let sites = ["a", "b", "c", "d", "e"];
        let mut evaluated = 0;
        for _ in 0..500 {
            let sys: Vec<(&str, f64)> = sites
                .iter()
                .map(|w| (*w, rng.random_range(0..3) as f64))
                .collect();
            let mut sorted = sys.clone();
            sorted.sort_by(|a, b| b.1.total_cmp(&a.1));
            let reference = judgment(
                &sites
                    .iter()
                    .map(|w| (*w, rng.random_range(1..4) as u32))
                    .collect::<Vec<_>>(),
            );
            match ndpm(&ranking(&sorted), &reference) {
                Ok(r) => {
                    evaluated += 1;
                    assert!((0.0..=1.0).contains(&r.score), "score {}", r.score);
                }
                Err(Error::UndefinedNdpm) => {}
                Err(e) => panic!("unexpected error: {e}"),
            }
        }
        assert!(evaluated > 100);
    }
}
