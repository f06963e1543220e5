//! ROC AUC and F1 on a hand-sized example.

use harassnet::training::{auc, Confusion};

fn main() -> harassnet::Result<()> {
    let scores = [0.9, 0.8, 0.8, 0.6, 0.4, 0.3, 0.2, 0.1];
    let labels = [true, true, false, true, false, false, true, false];
    let a = auc(&scores, &labels)?;
    println!("auc {:.4} (degenerate: {})", a.value, a.degenerate);

    for threshold in [0.25, 0.33, 0.5, 0.85] {
        let pred: Vec<bool> = scores.iter().map(|&s| s >= threshold).collect();
        let c = Confusion::count(&pred, &labels)?;
        println!(
            "threshold {threshold:.2}: tp {} fp {} fn {}  f1 {:.4}",
            c.tp,
            c.fp,
            c.fn_,
            c.f1()
        );
    }
    Ok(())
}
