use serde::{Deserialize, Serialize};

use crate::dataset::{Category, LabelVector};

/// The four per-category probabilities of one text.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreVector {
    pub harassment: f64,
    pub indirect: f64,
    pub sexual: f64,
    pub physical: f64,
}

impl ScoreVector {
    pub fn new(harassment: f64, indirect: f64, sexual: f64, physical: f64) -> Self {
        Self {
            harassment,
            indirect,
            sexual,
            physical,
        }
    }

    /// Scores in head order (harassment, indirect, sexual, physical).
    pub fn from_array(a: [f64; 4]) -> Self {
        Self::new(a[0], a[1], a[2], a[3])
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.harassment, self.indirect, self.sexual, self.physical]
    }

    pub fn get(&self, c: Category) -> f64 {
        self.as_array()[c.index()]
    }
}

pub const DEFAULT_THRESHOLD: f64 = 0.33;

/// Ties between type scores go to the earlier entry.
pub const TYPE_PRIORITY: [Category; 3] = [Category::Sexual, Category::Indirect, Category::Physical];

/// Threshold gate followed by an exclusive type choice. Below the threshold
/// every label is zero; otherwise harassment is set together with the single
/// highest-scoring type.
pub fn decide(scores: &ScoreVector, threshold: f64) -> LabelVector {
    let mut labels = LabelVector::default();
    if scores.harassment < threshold {
        return labels;
    }
    labels.harassment = true;
    let mut best = TYPE_PRIORITY[0];
    for &c in &TYPE_PRIORITY[1..] {
        if scores.get(c) > scores.get(best) {
            best = c;
        }
    }
    labels.set(best, true);
    labels
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gate_closed() {
        let l = decide(&ScoreVector::new(0.20, 0.9, 0.9, 0.9), 0.33);
        assert_eq!(l, LabelVector::default());
    }

    #[test]
    fn sexual_wins_argmax() {
        let l = decide(&ScoreVector::new(0.50, 0.10, 0.30, 0.20), 0.33);
        assert_eq!(l, LabelVector::new(true, false, true, false));
    }

    #[test]
    fn threshold_is_inclusive() {
        let l = decide(&ScoreVector::new(0.33, 0.1, 0.2, 0.7), 0.33);
        assert_eq!(l, LabelVector::new(true, false, false, true));
    }

    #[test]
    fn ties_follow_priority() {
        let t = 0.33;
        assert!(decide(&ScoreVector::new(0.9, 0.4, 0.4, 0.4), t).sexual);
        assert!(decide(&ScoreVector::new(0.9, 0.4, 0.1, 0.4), t).indirect);
        assert!(decide(&ScoreVector::new(0.9, 0.1, 0.4, 0.4), t).sexual);
        assert!(decide(&ScoreVector::new(0.9, 0.1, 0.1, 0.4), t).physical);
    }

    #[test]
    fn raising_harassment_never_closes_the_gate() {
        let mut s = ScoreVector::new(0.0, 0.2, 0.5, 0.1);
        let mut opened = false;
        for i in 0..=100 {
            s.harassment = i as f64 / 100.0;
            let l = decide(&s, 0.33);
            if opened {
                assert!(l.harassment);
            }
            opened |= l.harassment;
        }
        assert!(opened);
    }
}
