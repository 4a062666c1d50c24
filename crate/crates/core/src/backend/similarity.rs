//! Deterministic text similarity (token Jaccard) and semantic label
//! matching, with an optional LLM-judge mode behind the same interface.

use std::collections::BTreeSet;

use crate::backend::{BackendRequest, Purpose, Reasoner};
use crate::scm::graph::NodeMatcher;

pub fn tokens(text: &str) -> BTreeSet<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_ascii_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(|t| t.to_string())
        .collect()
}

/// Jaccard overlap of lower-cased alphanumeric token sets. Symmetric,
/// bounded in [0,1]; two empty token sets score 0.
pub fn similarity(a: &str, b: &str) -> f64 {
    let ta = tokens(a);
    let tb = tokens(b);
    let union = ta.union(&tb).count();
    if union == 0 {
        return 0.0;
    }
    let inter = ta.intersection(&tb).count();
    inter as f64 / union as f64
}

/// Best-scoring existing label with similarity >= threshold, if any.
/// Ties keep the earliest label.
pub fn semantic_match(candidate: &str, existing: &[&str], threshold: f64) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, label) in existing.iter().enumerate() {
        let score = similarity(candidate, label);
        if score >= threshold && best.map(|(_, s)| score > s).unwrap_or(true) {
            best = Some((i, score));
        }
    }
    best.map(|(i, _)| i)
}

/// LLM-judge variant: one yes/no query per pair. Backend errors fall back
/// to the deterministic scorer.
pub fn semantic_match_judged(
    candidate: &str,
    existing: &[&str],
    backend: &dyn Reasoner,
    threshold: f64,
) -> Option<usize> {
    for (i, label) in existing.iter().enumerate() {
        let prompt = format!(
            "Do these two short descriptions of a reasoning step mean the same thing?\n\
             candidate = {candidate}\nexisting = {label}\nAnswer yes or no."
        );
        match backend.complete(&BackendRequest::user(Purpose::Match, prompt)) {
            Ok(answer) => {
                if answer.trim().to_lowercase().starts_with("yes") {
                    return Some(i);
                }
            }
            Err(_) => return semantic_match(candidate, existing, threshold),
        }
    }
    None
}

/// Similarity-threshold matcher used during graph consolidation: reports
/// every existing label scoring at or above the threshold.
#[derive(Debug, Clone)]
pub struct JaccardMatcher {
    pub threshold: f64,
}

impl Default for JaccardMatcher {
    fn default() -> Self {
        JaccardMatcher { threshold: 0.5 }
    }
}

impl NodeMatcher for JaccardMatcher {
    fn hits(&self, candidate: &str, existing: &[&str]) -> Vec<usize> {
        existing
            .iter()
            .enumerate()
            .filter(|(_, label)| similarity(candidate, label) >= self.threshold)
            .map(|(i, _)| i)
            .collect()
    }
}

/// Matcher that asks the backend per pair and falls back to Jaccard when
/// the backend fails.
pub struct JudgeMatcher<B> {
    pub backend: B,
    pub fallback_threshold: f64,
}

impl<B: Reasoner> NodeMatcher for JudgeMatcher<B> {
    fn hits(&self, candidate: &str, existing: &[&str]) -> Vec<usize> {
        semantic_match_judged(candidate, existing, &self.backend, self.fallback_threshold)
            .into_iter()
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_and_disjoint() {
        assert_eq!(similarity("last target 40", "last target 40"), 1.0);
        assert_eq!(similarity("a b", "c d"), 0.0);
    }

    #[test]
    fn jaccard_by_hand() {
        // tokens {a,b,c} vs {b,c,d}: intersection 2, union 4
        assert_eq!(similarity("a b c", "b c d"), 0.5);
    }

    #[test]
    fn empty_texts_score_zero() {
        assert_eq!(similarity("", ""), 0.0);
        assert_eq!(similarity("a", ""), 0.0);
    }

    #[test]
    fn match_normalizes_hyphens() {
        let existing = ["expects-undercut"];
        assert_eq!(semantic_match("expects undercut", &existing, 0.5), Some(0));
    }

    #[test]
    fn no_match_cases() {
        assert_eq!(semantic_match("weather", &["expects-undercut"], 0.5), None);
        assert_eq!(semantic_match("anything", &[], 0.5), None);
    }

    #[test]
    fn judge_mode_with_scripted_backend() {
        use crate::backend::ScriptedBackend;
        let yes = ScriptedBackend::from_rules_text("match :: existing = expects-undercut :: yes\nmatch ::  :: no\n").unwrap();
        assert_eq!(
            semantic_match_judged("anything", &["other", "expects-undercut"], &yes, 0.5),
            Some(1)
        );
        let broken = ScriptedBackend::from_rules_text("act ::  :: x\n").unwrap();
        // falls back to the deterministic scorer
        assert_eq!(
            semantic_match_judged("expects undercut", &["expects-undercut"], &broken, 0.5),
            Some(0)
        );
    }
}
