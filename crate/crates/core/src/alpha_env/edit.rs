use rand::Rng;

use super::{rank_position, Critique, CritiqueKind, EnvError, Lexicon, TaskInstance};
use crate::metrics::word_levenshtein;

/// A fully specified corruption of a word list.
///
/// Indices refer to the list the distortion is applied to; `Reorder::to` and
/// `Repeat::to` index the list after the word has been taken out / at insertion.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Distortion {
    Reorder { from: usize, to: usize },
    Replace { index: usize, imposter: String },
    Add { index: usize, word: String },
    Repeat { index: usize, to: usize },
    Remove { index: usize },
    Nothing,
}

/// Applies `distortion` to `list`, returning the corrupted list and the
/// critique describing it. Fails if indices are out of range or the
/// distortion would leave the list unchanged.
pub fn apply_distortion(
    list: &[String],
    distortion: &Distortion,
) -> Result<(Vec<String>, Critique), EnvError> {
    let mut out = list.to_vec();
    let n = list.len();
    let critique = match distortion {
        Distortion::Nothing => return Ok((out, Critique::Nothing)),
        Distortion::Reorder { from, to } => {
            if *from >= n || *to >= n || from == to {
                return Err(EnvError::ImpossibleDistortion(CritiqueKind::Reorder));
            }
            let w = out.remove(*from);
            out.insert(*to, w.clone());
            Critique::Reorder(w)
        }
        Distortion::Replace { index, imposter } => {
            if *index >= n || list.contains(imposter) {
                return Err(EnvError::ImpossibleDistortion(CritiqueKind::Replace));
            }
            let original = std::mem::replace(&mut out[*index], imposter.clone());
            Critique::Replace {
                original,
                imposter: imposter.clone(),
            }
        }
        Distortion::Add { index, word } => {
            if *index > n || list.contains(word) {
                return Err(EnvError::ImpossibleDistortion(CritiqueKind::Add));
            }
            out.insert(*index, word.clone());
            Critique::Add(word.clone())
        }
        Distortion::Repeat { index, to } => {
            if *index >= n || *to <= *index || *to > n {
                return Err(EnvError::ImpossibleDistortion(CritiqueKind::Repeat));
            }
            let w = list[*index].clone();
            out.insert(*to, w.clone());
            Critique::Repeat(w)
        }
        Distortion::Remove { index } => {
            if *index >= n {
                return Err(EnvError::ImpossibleDistortion(CritiqueKind::Remove));
            }
            Critique::Remove(out.remove(*index))
        }
    };
    if out == list {
        return Err(EnvError::ImpossibleDistortion(critique.kind()));
    }
    Ok((out, critique))
}

/// Samples and applies one distortion of `kind` to an arbitrary list.
///
/// `x` is the original unsorted input: imposters for REPLACE and ADD are drawn
/// from the lexicon outside `x`, and REPLACE only overwrites words of `x`.
pub fn distort_list<R: Rng + ?Sized>(
    list: &[String],
    x: &[String],
    kind: CritiqueKind,
    lexicon: &Lexicon,
    rng: &mut R,
) -> Result<(Vec<String>, Critique), EnvError> {
    let n = list.len();
    let impossible = || EnvError::ImpossibleDistortion(kind);
    let distortion = match kind {
        CritiqueKind::Nothing => Distortion::Nothing,
        CritiqueKind::Reorder => {
            // A word can only be moved somewhere distinct if the list holds two
            // different words.
            if n < 2 || list.iter().all(|w| *w == list[0]) {
                return Err(impossible());
            }
            loop {
                let from = rng.random_range(0..n);
                let mut to = rng.random_range(0..n - 1);
                if to >= from {
                    to += 1;
                }
                let d = Distortion::Reorder { from, to };
                if let Ok(done) = apply_distortion(list, &d) {
                    return Ok(done);
                }
            }
        }
        CritiqueKind::Replace => {
            let candidates: Vec<usize> = (0..n).filter(|&i| x.contains(&list[i])).collect();
            if candidates.is_empty() {
                return Err(impossible());
            }
            let index = candidates[rng.random_range(0..candidates.len())];
            let imposter = lexicon
                .sample_outside(&[x, list], rng)
                .ok_or_else(impossible)?;
            Distortion::Replace { index, imposter }
        }
        CritiqueKind::Add => {
            let word = lexicon
                .sample_outside(&[x, list], rng)
                .ok_or_else(impossible)?;
            Distortion::Add {
                index: rng.random_range(0..=n),
                word,
            }
        }
        CritiqueKind::Repeat => {
            if n == 0 {
                return Err(impossible());
            }
            let index = rng.random_range(0..n);
            Distortion::Repeat {
                index,
                to: rng.random_range(index + 1..=n),
            }
        }
        CritiqueKind::Remove => {
            if n == 0 {
                return Err(impossible());
            }
            Distortion::Remove {
                index: rng.random_range(0..n),
            }
        }
    };
    apply_distortion(list, &distortion)
}

/// Applies exactly one distortion of `kind` to the instance's sorted `y`.
pub fn distort<R: Rng + ?Sized>(
    instance: &TaskInstance,
    kind: CritiqueKind,
    lexicon: &Lexicon,
    rng: &mut R,
) -> Result<(Vec<String>, Critique), EnvError> {
    distort_list(&instance.y, &instance.x, kind, lexicon, rng)
}

fn insert_ranked(list: &mut Vec<String>, word: &str) {
    let at = rank_position(list, word);
    list.insert(at, word.to_owned());
}

/// The repair a perfectly comprehending refiner makes given `critique`.
///
/// Critiques naming words that are absent where the edit needs them are no-ops.
pub fn apply_corrective_edit(y_hat: &[String], x: &[String], critique: &Critique) -> Vec<String> {
    let mut out = y_hat.to_vec();
    let first = |list: &[String], w: &str| list.iter().position(|v| v == w);
    match critique {
        Critique::Nothing => {}
        Critique::Remove(a) => {
            if x.contains(a) {
                insert_ranked(&mut out, a);
            }
        }
        Critique::Reorder(a) => {
            if let Some(i) = first(&out, a) {
                let w = out.remove(i);
                insert_ranked(&mut out, &w);
            }
        }
        Critique::Replace { original, imposter } => {
            if x.contains(original) {
                if let Some(i) = first(&out, imposter) {
                    out.remove(i);
                    insert_ranked(&mut out, original);
                }
            }
        }
        Critique::Repeat(a) => {
            if let Some(i) = first(&out, a) {
                let mut k = 0;
                out.retain(|w| {
                    let keep = w != a || k == i;
                    k += 1;
                    keep
                });
            }
        }
        Critique::Add(a) => out.retain(|w| w != a),
    }
    out
}

/// Every true critique of `y_hat` whose corrective edit changes it, paired
/// with the edited list. Missing words come from `x`; foreign words are those
/// of `y_hat` outside `x`.
fn truthful_edits(x: &[String], y_hat: &[String]) -> Vec<(Critique, Vec<String>)> {
    let count = |list: &[String], w: &String| list.iter().filter(|v| *v == w).count();
    let mut present: Vec<&String> = y_hat.iter().collect();
    present.sort();
    present.dedup();
    let mut missing: Vec<&String> = x.iter().filter(|w| count(x, w) > count(y_hat, w)).collect();
    missing.sort();
    missing.dedup();
    let foreign: Vec<&String> = present.iter().copied().filter(|w| !x.contains(w)).collect();

    let mut out = Vec::new();
    let mut push = |c: Critique| {
        let edited = apply_corrective_edit(y_hat, x, &c);
        if edited != y_hat {
            out.push((c, edited));
        }
    };
    for m in &missing {
        push(Critique::Remove((*m).clone()));
        for f in &foreign {
            push(Critique::Replace {
                original: (*m).clone(),
                imposter: (*f).clone(),
            });
        }
    }
    for f in &foreign {
        push(Critique::Add((*f).clone()));
    }
    for w in &present {
        if count(y_hat, w) > 1 {
            push(Critique::Repeat((*w).clone()));
        }
        push(Critique::Reorder((*w).clone()));
    }
    out
}

fn solvable_within(x: &[String], list: &[String], y: &[String], rounds: usize) -> bool {
    list == y
        || (rounds > 0
            && truthful_edits(x, list)
                .iter()
                .any(|(_, next)| solvable_within(x, next, y, rounds - 1)))
}

/// How far ahead the oracle searches for a shortest repair sequence.
const ORACLE_LOOKAHEAD: usize = 3;

/// The gold critique: a true statement about `y_hat` whose corrective edit
/// starts a shortest sequence of such edits reaching `y` (searched up to
/// three rounds), so stacked errors are undone one per round. Among equally
/// short repairs, and beyond the search horizon, the edit leaving the smallest
/// word-level edit distance to `y` wins; remaining ties go to kind order
/// REMOVE < ADD < REPEAT < REPLACE < REORDER, then alphabetical slot order.
pub fn oracle_critique(x: &[String], y_hat: &[String], y: &[String]) -> Critique {
    if y_hat == y {
        return Critique::Nothing;
    }
    let scored: Vec<(usize, Critique, Vec<String>)> = truthful_edits(x, y_hat)
        .into_iter()
        .map(|(c, edited)| (word_levenshtein(&edited, y), c, edited))
        .collect();
    let best = |pool: Vec<&(usize, Critique, Vec<String>)>| {
        pool.into_iter()
            .min_by(|(da, ca, _), (db, cb, _)| {
                da.cmp(db)
                    .then(ca.kind().oracle_rank().cmp(&cb.kind().oracle_rank()))
                    .then(ca.slot_a().cmp(&cb.slot_a()))
                    .then(ca.slot_b().cmp(&cb.slot_b()))
            })
            .map(|(_, c, _)| c.clone())
    };
    for rest in 0..ORACLE_LOOKAHEAD {
        let pool: Vec<_> = scored
            .iter()
            .filter(|(_, _, edited)| solvable_within(x, edited, y, rest))
            .collect();
        if let Some(c) = best(pool) {
            return c;
        }
    }
    best(scored.iter().collect()).unwrap_or(Critique::Nothing)
}

#[cfg(test)]
mod tests {
    use super::super::words;
    use super::*;
    use crate::metrics::inverse_levenshtein_reward;
    use crate::rng;

    /// Independent check that a critique states something true.
    fn is_truthful(x: &[String], y_hat: &[String], critique: &Critique) -> bool {
        let count = |list: &[String], w: &str| list.iter().filter(|v| *v == w).count();
        match critique {
            Critique::Nothing => false,
            Critique::Remove(a) => count(x, a) > count(y_hat, a),
            Critique::Add(a) => count(x, a) == 0 && count(y_hat, a) > 0,
            Critique::Repeat(a) => count(y_hat, a) > 1,
            Critique::Reorder(a) => count(y_hat, a) > 0,
            Critique::Replace { original, imposter } => {
                count(x, original) > count(y_hat, original) && count(x, imposter) == 0 && count(y_hat, imposter) > 0
            }
        }
    }

    fn example() -> (Vec<String>, Vec<String>) {
        (words("mug greek book house"), words("book greek house mug"))
    }

    #[test]
    fn distortions_from_examples() {
        let (_, y) = example();
        let (yh, c) = apply_distortion(&y, &Distortion::Reorder { from: 1, to: 2 }).unwrap();
        assert_eq!(yh, words("book house greek mug"));
        assert_eq!(c, Critique::Reorder("greek".into()));

        let (yh, c) = apply_distortion(&y, &Distortion::Remove { index: 2 }).unwrap();
        assert_eq!(yh, words("book greek mug"));
        assert_eq!(c, Critique::Remove("house".into()));

        let (yh, c) = apply_distortion(
            &y,
            &Distortion::Replace {
                index: 3,
                imposter: "mud".into(),
            },
        )
        .unwrap();
        assert_eq!(yh, words("book greek house mud"));
        assert_eq!(
            c,
            Critique::Replace {
                original: "mug".into(),
                imposter: "mud".into()
            }
        );

        let (yh, c) = apply_distortion(&y, &Distortion::Nothing).unwrap();
        assert_eq!(yh, y);
        assert_eq!(c, Critique::Nothing);

        let (yh, c) = apply_distortion(
            &y,
            &Distortion::Add {
                index: 1,
                word: "hair".into(),
            },
        )
        .unwrap();
        assert_eq!(yh, words("book hair greek house mug"));
        assert_eq!(c, Critique::Add("hair".into()));
    }

    #[test]
    fn impossible_distortions_rejected() {
        let one = words("solo");
        let lex = Lexicon::bundled();
        let mut r = rng::stream(1, &[]);
        assert!(distort_list(&one, &one, CritiqueKind::Reorder, &lex, &mut r).is_err());
        assert!(apply_distortion(&one, &Distortion::Reorder { from: 0, to: 0 }).is_err());
        assert!(apply_distortion(&one, &Distortion::Repeat { index: 0, to: 0 }).is_err());
    }

    #[test]
    fn corrective_edits() {
        let (x, y) = example();
        assert_eq!(
            apply_corrective_edit(&words("book greek mug"), &x, &Critique::Remove("house".into())),
            y
        );
        assert_eq!(
            apply_corrective_edit(
                &words("book house greek mug"),
                &x,
                &Critique::Reorder("greek".into())
            ),
            y
        );
        assert_eq!(apply_corrective_edit(&y, &x, &Critique::Nothing), y);
        assert_eq!(
            apply_corrective_edit(
                &words("book greek house house mug"),
                &x,
                &Critique::Repeat("house".into())
            ),
            y
        );
        assert_eq!(
            apply_corrective_edit(
                &words("book hair greek house mug"),
                &x,
                &Critique::Add("hair".into())
            ),
            y
        );
        // absent words leave the list alone
        assert_eq!(
            apply_corrective_edit(&y, &x, &Critique::Reorder("zebra".into())),
            y
        );
        assert_eq!(
            apply_corrective_edit(&y, &x, &Critique::Remove("zebra".into())),
            y
        );
    }

    #[test]
    fn oracle_examples() {
        let (x, y) = example();
        assert_eq!(oracle_critique(&x, &y, &y), Critique::Nothing);
        assert_eq!(
            oracle_critique(&x, &words("book greek mug"), &y),
            Critique::Remove("house".into())
        );
        assert_eq!(
            oracle_critique(&x, &words("book greek hair house mug"), &y),
            Critique::Add("hair".into())
        );
    }

    #[test]
    fn oracle_prefers_full_repairs_over_half_fixes() {
        // "burrs" was replaced by "reimagine", and "calorized" moved and repeated.
        let x = words("became plenaries calorized nonvocals burrs fluked");
        let y = words("became burrs calorized fluked nonvocals plenaries");
        let y_hat = words("became reimagine fluked nonvocals calorized plenaries calorized");
        let mut cur = y_hat.clone();
        for _ in 0..3 {
            let c = oracle_critique(&x, &cur, &y);
            assert!(is_truthful(&x, &cur, &c), "{c:?} on {cur:?}");
            cur = apply_corrective_edit(&cur, &x, &c);
        }
        assert_eq!(cur, y);
        // Inserting "burrs" alone would leave the imposter behind.
        assert_ne!(oracle_critique(&x, &y_hat, &y), Critique::Remove("burrs".into()));
    }

    #[test]
    fn oracle_never_claims_a_present_word_is_missing() {
        let lex = Lexicon::bundled();
        for seed in 0..2000u64 {
            let mut r = rng::stream(seed, &[9]);
            let inst = crate::alpha_env::sample_instance(&lex, (3, 12), &mut r).unwrap();
            let mut yh = inst.y.clone();
            for _ in 0..3 {
                let kind = CritiqueKind::CORRUPTING[r.random_range(0..5)];
                if let Ok((next, _)) = distort_list(&yh, &inst.x, kind, &lex, &mut r) {
                    yh = next;
                }
            }
            let c = oracle_critique(&inst.x, &yh, &inst.y);
            if yh == inst.y {
                assert_eq!(c, Critique::Nothing);
                continue;
            }
            assert!(is_truthful(&inst.x, &yh, &c), "{c:?} on {yh:?}");
            assert_ne!(apply_corrective_edit(&yh, &inst.x, &c), yh);
            // Repeated gold repairs always converge.
            let mut cur = yh;
            for _ in 0..6 {
                cur = apply_corrective_edit(&cur, &inst.x, &oracle_critique(&inst.x, &cur, &inst.y));
            }
            assert_eq!(cur, inst.y, "seed {seed}");
        }
    }

    #[test]
    fn round_trip_each_kind() {
        let lex = Lexicon::bundled();
        for seed in 0..500u64 {
            let mut r = rng::stream(seed, &[]);
            let inst = crate::alpha_env::sample_instance(&lex, (3, 12), &mut r).unwrap();
            for kind in CritiqueKind::ALL {
                let (yh, c) = distort(&inst, kind, &lex, &mut r).unwrap();
                assert_eq!(yh == inst.y, kind == CritiqueKind::Nothing);
                assert_eq!(apply_corrective_edit(&yh, &inst.x, &c), inst.y, "{kind} {c:?}");
                let bound = 1.0 - 2.0 / yh.len().max(inst.y.len()) as f64;
                assert!(inverse_levenshtein_reward(&yh, &inst.y) >= bound - 1e-12);
            }
        }
    }
}
