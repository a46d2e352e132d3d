//! Few-shot prompt construction for the LLM backend.

use serde::{Deserialize, Serialize};

use super::DIRECT_REFINE_CRITIQUE;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RefineExemplar {
    pub x: Vec<String>,
    pub y_hat: Vec<String>,
    pub critique: String,
    pub y: Vec<String>,
}

/// In-context examples: `(x, y)` pairs for PREDICT and `(x, y_hat, c, y)`
/// tuples for REFINE.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptExemplars {
    pub predict: Vec<(Vec<String>, Vec<String>)>,
    pub refine: Vec<RefineExemplar>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptTask {
    /// `{unsorted_list} ||| {initial_answer}` blocks.
    Alphabetization,
    /// `Goal: ... / Steps: ...` blocks for free-text plans.
    Generic,
}

pub fn format_words<S: AsRef<str>>(words: &[S]) -> String {
    words
        .iter()
        .map(AsRef::as_ref)
        .collect::<Vec<_>>()
        .join(" ")
}

fn ws(s: &str) -> Vec<String> {
    s.split_whitespace().map(str::to_owned).collect()
}

impl PromptExemplars {
    pub fn empty() -> Self {
        Self {
            predict: Vec::new(),
            refine: Vec::new(),
        }
    }

    /// Three PREDICT and six REFINE examples, one REFINE example per critique
    /// template.
    pub fn alphabetization_default() -> Self {
        let predict = [
            "mug greek book house",
            "violet anchor meadow crisp lantern",
            "quarry bamboo tundra elbow saddle orchid",
        ]
        .iter()
        .map(|s| {
            let x = ws(s);
            let mut y = x.clone();
            y.sort();
            (x, y)
        })
        .collect();
        let ex = |x: &str, y_hat: &str, critique: &str| {
            let x = ws(x);
            let mut y = x.clone();
            y.sort();
            RefineExemplar {
                x,
                y_hat: ws(y_hat),
                critique: critique.to_owned(),
                y,
            }
        };
        let refine = vec![
            ex(
                "mug greek book house",
                "book house greek mug",
                "The word greek is placed in an incorrect position.",
            ),
            ex(
                "pillow canyon harbor velvet",
                "canyon harbor pillow violin",
                "The word velvet is replaced with violin",
            ),
            ex(
                "tiger apron lemon",
                "apron lemon oyster tiger",
                "The word oyster is not in the original list",
            ),
            ex(
                "frost ember cobalt dune",
                "cobalt dune ember frost frost",
                "The word frost is repeated",
            ),
            ex(
                "walnut bishop glacier marble kettle",
                "bishop glacier kettle walnut",
                "The word marble is missing",
            ),
            ex(
                "rover sketch nectar ivory",
                "ivory nectar rover sketch",
                "The list is correctly sorted.",
            ),
        ];
        Self { predict, refine }
    }
}

fn refine_block(task: PromptTask, x: &str, y_hat: &str, critique: &str) -> String {
    match task {
        PromptTask::Alphabetization => {
            format!("{x} ||| {y_hat}\nFeedback: {critique}\nEdit:")
        }
        PromptTask::Generic => format!("Goal: {x}\nSteps: {y_hat}\nFeedback: {critique}\nEdit:"),
    }
}

/// REFINE prompt: exemplar blocks separated by blank lines, then the query
/// block ending at `Edit:`. `critique = None` builds the Direct-Refinement
/// prompt with the fixed critique.
pub fn build_refine_prompt<S: AsRef<str>>(
    exemplars: &PromptExemplars,
    x: &[S],
    y_hat: &[S],
    critique: Option<&str>,
    task: PromptTask,
) -> String {
    let critique = critique.unwrap_or(DIRECT_REFINE_CRITIQUE);
    let mut blocks: Vec<String> = exemplars
        .refine
        .iter()
        .map(|e| {
            let head = refine_block(task, &format_words(&e.x), &format_words(&e.y_hat), &e.critique);
            format!("{head} {}", format_words(&e.y))
        })
        .collect();
    blocks.push(refine_block(
        task,
        &format_words(x),
        &format_words(y_hat),
        critique,
    ));
    blocks.join("\n\n")
}

/// PREDICT prompt: `{x} ||| {y}` lines, then the query ending at `|||`.
pub fn build_predict_prompt<S: AsRef<str>>(exemplars: &PromptExemplars, x: &[S]) -> String {
    let mut lines: Vec<String> = exemplars
        .predict
        .iter()
        .map(|(ex, ey)| format!("{} ||| {}", format_words(ex), format_words(ey)))
        .collect();
    lines.push(format!("{} |||", format_words(x)));
    lines.join("\n")
}
