//! Scores a few hypotheses against a sorted reference with every metric.
//!
//! cargo run --example metrics

use critique_rl::metrics::{
    exact_match, inverse_levenshtein_reward, mean_rouge_reward, rouge_l, rouge_n, word_levenshtein,
};

fn words(s: &str) -> Vec<String> {
    s.split_whitespace().map(str::to_owned).collect()
}

fn main() {
    let reference = words("apple banana cherry date elder");
    for hyp in [
        "apple banana cherry date elder",
        "apple cherry banana date elder",
        "apple banana date elder",
        "apple banana banana cherry date elder",
        "elder date cherry banana apple",
    ] {
        let h = words(hyp);
        println!("{hyp}");
        println!(
            "  exact {}  lev {}  inv-lev {:.3}  R1 {:.3}  R2 {:.3}  RL {:.3}  mean-rouge {:.3}",
            exact_match(&h, &reference),
            word_levenshtein(&h, &reference),
            inverse_levenshtein_reward(&h, &reference),
            rouge_n(&reference, &h, 1).f1,
            rouge_n(&reference, &h, 2).f1,
            rouge_l(&reference, &h).f1,
            mean_rouge_reward(&h, &[&reference]).expect("one reference"),
        );
    }
}
