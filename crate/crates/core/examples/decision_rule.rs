//! Turns score vectors into label vectors with the 0.33 threshold.

use harassnet::model::DEFAULT_THRESHOLD;
use harassnet::{decide, ScoreVector};

fn main() {
    let cases = [
        ("not harassment", ScoreVector::new(0.20, 0.9, 0.1, 0.1)),
        ("clear sexual", ScoreVector::new(0.80, 0.1, 0.7, 0.2)),
        ("physical wins", ScoreVector::new(0.50, 0.3, 0.2, 0.6)),
        ("three-way tie", ScoreVector::new(0.40, 0.5, 0.5, 0.5)),
        ("indirect vs physical tie", ScoreVector::new(0.40, 0.5, 0.1, 0.5)),
        ("exactly at threshold", ScoreVector::new(0.33, 0.1, 0.1, 0.2)),
    ];
    for (name, s) in cases {
        let l = decide(&s, DEFAULT_THRESHOLD);
        let [h, i, x, p] = l.as_array().map(u8::from);
        println!("{name:<26} -> harassment {h} indirect {i} sexual {x} physical {p}");
    }
}
