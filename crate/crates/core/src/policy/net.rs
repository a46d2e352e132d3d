//! Parameters, forward pass and hand-derived backward pass.
//!
//! ```text
//! e_i = W[h1(w_i)] + W[h2(w_i)] + S[seg_i] + P[pos_i] + F f_i
//! c_i = tanh(L e_{i-1} + M e_i + R e_{i+1} + G mean(e) + b)
//! g   = [mean_i c_i ; max_i c_i]
//! template logits z = T g + t,   value = v.g + v0
//! slot_a logits a_t(i) = A_t . c_i over x and y_hat positions
//! slot_b logits b(j)   = B . c_j  over y_hat positions
//! ```

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::features::{featurize, StateInput, NUM_FEATURES};
use crate::rng::Rng;

pub const NUM_TEMPLATES: usize = 6;
const NUM_SEGMENTS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PolicyConfig {
    pub embed_dim: usize,
    pub hidden: usize,
    pub vocab_size: usize,
    pub hash_seeds: [u64; 2],
    pub max_positions: usize,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        Self {
            embed_dim: 32,
            hidden: 64,
            vocab_size: 4096,
            hash_seeds: [0x9e37, 0x7f4a],
            max_positions: 32,
        }
    }
}

impl PolicyConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.embed_dim == 0 || self.hidden == 0 || self.vocab_size == 0 || self.max_positions == 0
        {
            return Err("policy dimensions must be positive".into());
        }
        if self.hash_seeds[0] == self.hash_seeds[1] {
            return Err("the two hash seeds must differ".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Tensor {
    fn zeros(name: &str, rows: usize, cols: usize) -> Self {
        Self {
            name: name.to_owned(),
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    fn uniform(name: &str, rows: usize, cols: usize, scale: f64, rng: &mut Rng) -> Self {
        let mut t = Self::zeros(name, rows, cols);
        for v in &mut t.data {
            *v = scale * (2.0 * rng.random::<f64>() - 1.0);
        }
        t
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }
}

// Tensor slots.
pub(crate) const WORD: usize = 0;
pub(crate) const SEG: usize = 1;
pub(crate) const POS: usize = 2;
pub(crate) const FEAT: usize = 3;
pub(crate) const CTX_L: usize = 4;
pub(crate) const CTX_M: usize = 5;
pub(crate) const CTX_R: usize = 6;
pub(crate) const CTX_G: usize = 7;
pub(crate) const CTX_B: usize = 8;
pub(crate) const TMPL_W: usize = 9;
pub(crate) const TMPL_B: usize = 10;
pub(crate) const PTR_A: usize = 11;
pub(crate) const PTR_B: usize = 12;
pub(crate) const VAL_W: usize = 13;
pub(crate) const VAL_B: usize = 14;
pub(crate) const NUM_TENSORS: usize = 15;

/// All trainable tensors plus the shape configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyParams {
    pub config: PolicyConfig,
    pub tensors: Vec<Tensor>,
}

fn shapes(c: &PolicyConfig) -> [(&'static str, usize, usize); NUM_TENSORS] {
    let (d, h) = (c.embed_dim, c.hidden);
    [
        ("word_embedding", c.vocab_size, d),
        ("segment_embedding", NUM_SEGMENTS, d),
        ("position_embedding", c.max_positions, d),
        ("feature_projection", d, NUM_FEATURES),
        ("context_left", h, d),
        ("context_mid", h, d),
        ("context_right", h, d),
        ("context_global", h, d),
        ("context_bias", 1, h),
        ("template_weight", NUM_TEMPLATES, 2 * h),
        ("template_bias", 1, NUM_TEMPLATES),
        ("pointer_a", NUM_TEMPLATES, h),
        ("pointer_b", 1, h),
        ("value_weight", 1, 2 * h),
        ("value_bias", 1, 1),
    ]
}

impl PolicyParams {
    /// Random initialization; the value head starts at zero.
    pub fn init(config: PolicyConfig, rng: &mut Rng) -> Self {
        let d = config.embed_dim as f64;
        let h = config.hidden as f64;
        let tensors = shapes(&config)
            .iter()
            .enumerate()
            .map(|(slot, &(name, r, c))| match slot {
                WORD | SEG | POS => Tensor::uniform(name, r, c, 0.1, rng),
                FEAT => Tensor::uniform(name, r, c, 0.5, rng),
                CTX_L | CTX_M | CTX_R | CTX_G => Tensor::uniform(name, r, c, (1.5 / d).sqrt(), rng),
                TMPL_W => Tensor::uniform(name, r, c, (1.0 / (2.0 * h)).sqrt(), rng),
                PTR_A | PTR_B => Tensor::uniform(name, r, c, (1.0 / h).sqrt(), rng),
                _ => Tensor::zeros(name, r, c),
            })
            .collect();
        Self { config, tensors }
    }

    /// Zero tensors with this model's shapes (a gradient buffer).
    pub fn zeros_like(&self) -> Self {
        Self {
            config: self.config,
            tensors: self
                .tensors
                .iter()
                .map(|t| Tensor::zeros(&t.name, t.rows, t.cols))
                .collect(),
        }
    }

    pub fn num_parameters(&self) -> usize {
        self.tensors.iter().map(|t| t.data.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors.iter().all(|t| t.data.iter().all(|v| v.is_finite()))
    }

    /// Checks tensor count and shapes against the config.
    pub fn validate(&self) -> Result<(), String> {
        self.config.validate()?;
        let want = shapes(&self.config);
        if self.tensors.len() != want.len() {
            return Err(format!("expected {} tensors, found {}", want.len(), self.tensors.len()));
        }
        for (t, &(name, r, c)) in self.tensors.iter().zip(want.iter()) {
            if t.name != name || t.rows != r || t.cols != c || t.data.len() != r * c {
                return Err(format!("tensor {} has wrong shape", t.name));
            }
        }
        if !self.is_finite() {
            return Err("non-finite parameter".into());
        }
        Ok(())
    }

    pub fn fill_zero(&mut self) {
        for t in &mut self.tensors {
            t.data.fill(0.0);
        }
    }

    pub fn scale(&mut self, s: f64) {
        for t in &mut self.tensors {
            t.data.iter_mut().for_each(|v| *v *= s);
        }
    }

    pub fn add_assign(&mut self, other: &Self) {
        for (a, b) in self.tensors.iter_mut().zip(&other.tensors) {
            a.data.iter_mut().zip(&b.data).for_each(|(x, y)| *x += y);
        }
    }

    pub fn l2_norm(&self) -> f64 {
        self.tensors
            .iter()
            .flat_map(|t| t.data.iter())
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt()
    }

    pub fn featurize(&self, x: &[String], y_hat: &[String]) -> StateInput {
        featurize(x, y_hat, self.config.vocab_size, self.config.hash_seeds)
    }
}

/// Forward activations for one state; the cache the backward pass needs.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedState {
    pub input: StateInput,
    /// Input embeddings, `len x d`.
    pub embeddings: Vec<Vec<f64>>,
    pub embed_mean: Vec<f64>,
    /// Contextual vectors, `len x h`.
    pub context: Vec<Vec<f64>>,
    /// `[mean ; max]` over positions, `2h`.
    pub pooled: Vec<f64>,
    pub(crate) argmax: Vec<usize>,
    pub template_logits: [f64; NUM_TEMPLATES],
    /// `slot_a_logits[t][i]`, with the separator entry unused.
    pub slot_a_logits: Vec<Vec<f64>>,
    /// Indexed by sequence position; only `y_hat` entries are meaningful.
    pub slot_b_logits: Vec<f64>,
    pub value: f64,
}

impl EncodedState {
    pub fn len(&self) -> usize {
        self.input.len()
    }

    pub fn is_empty(&self) -> bool {
        self.input.is_empty()
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    y.iter_mut().zip(x).for_each(|(yi, xi)| *yi += a * xi);
}

/// `out += W v` for `W` of shape `rows x cols`.
fn matvec_add(w: &Tensor, v: &[f64], out: &mut [f64]) {
    for (r, o) in out.iter_mut().enumerate() {
        *o += dot(w.row(r), v);
    }
}

/// `out += W^T u`.
fn matvec_t_add(w: &Tensor, u: &[f64], out: &mut [f64]) {
    for (r, &ur) in u.iter().enumerate() {
        if ur != 0.0 {
            axpy(out, ur, w.row(r));
        }
    }
}

/// `G += u v^T`.
fn outer_add(g: &mut Tensor, u: &[f64], v: &[f64]) {
    for (r, &ur) in u.iter().enumerate() {
        if ur != 0.0 {
            axpy(g.row_mut(r), ur, v);
        }
    }
}

pub fn encode_input(params: &PolicyParams, input: StateInput) -> EncodedState {
    let cfg = &params.config;
    let (d, h) = (cfg.embed_dim, cfg.hidden);
    let t = &params.tensors;
    let n = input.len();

    let mut embeddings = vec![vec![0.0; d]; n];
    for (tok, e) in input.tokens.iter().zip(embeddings.iter_mut()) {
        if let Some(ids) = tok.ids {
            for id in ids {
                axpy(e, 1.0, t[WORD].row(id));
            }
        }
        axpy(e, 1.0, t[SEG].row(tok.segment));
        axpy(e, 1.0, t[POS].row(tok.position.min(cfg.max_positions - 1)));
        matvec_add(&t[FEAT], &tok.features, e);
    }
    let mut embed_mean = vec![0.0; d];
    for e in &embeddings {
        axpy(&mut embed_mean, 1.0 / n as f64, e);
    }

    let mut global = t[CTX_B].data.clone();
    matvec_add(&t[CTX_G], &embed_mean, &mut global);
    let mut context = vec![global; n];
    for (i, e) in embeddings.iter().enumerate() {
        matvec_add(&t[CTX_M], e, &mut context[i]);
        if i + 1 < n {
            matvec_add(&t[CTX_L], e, &mut context[i + 1]);
        }
        if i > 0 {
            matvec_add(&t[CTX_R], e, &mut context[i - 1]);
        }
    }
    for c in &mut context {
        c.iter_mut().for_each(|v| *v = v.tanh());
    }

    let mut pooled = vec![0.0; 2 * h];
    let mut argmax = vec![0usize; h];
    for k in 0..h {
        let mut best = f64::NEG_INFINITY;
        let mut sum = 0.0;
        for (i, c) in context.iter().enumerate() {
            sum += c[k];
            if c[k] > best {
                best = c[k];
                argmax[k] = i;
            }
        }
        pooled[k] = sum / n as f64;
        pooled[h + k] = best;
    }

    let mut template_logits = [0.0; NUM_TEMPLATES];
    for (k, z) in template_logits.iter_mut().enumerate() {
        *z = dot(t[TMPL_W].row(k), &pooled) + t[TMPL_B].data[k];
    }
    let slot_a_logits = (0..NUM_TEMPLATES)
        .map(|k| context.iter().map(|c| dot(t[PTR_A].row(k), c)).collect())
        .collect();
    let slot_b_logits = context.iter().map(|c| dot(&t[PTR_B].data, c)).collect();
    let value = dot(&t[VAL_W].data, &pooled) + t[VAL_B].data[0];

    EncodedState {
        input,
        embeddings,
        embed_mean,
        context,
        pooled,
        argmax,
        template_logits,
        slot_a_logits,
        slot_b_logits,
        value,
    }
}

/// Encodes `[x | ||| | y_hat]`. Requires a non-empty `x`.
pub fn encode(x: &[String], y_hat: &[String], params: &PolicyParams) -> EncodedState {
    assert!(!x.is_empty(), "encode requires a non-empty input list");
    encode_input(params, params.featurize(x, y_hat))
}

/// Gradients of some scalar objective with respect to the head outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct HeadGrads {
    pub template: [f64; NUM_TEMPLATES],
    /// `(template, d/d slot_a logits by position)`.
    pub slot_a: Option<(usize, Vec<f64>)>,
    /// By sequence position.
    pub slot_b: Option<Vec<f64>>,
    pub value: f64,
}

impl HeadGrads {
    pub fn zero() -> Self {
        Self {
            template: [0.0; NUM_TEMPLATES],
            slot_a: None,
            slot_b: None,
            value: 0.0,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.template.iter().all(|v| *v == 0.0)
            && self.slot_a.is_none()
            && self.slot_b.is_none()
            && self.value == 0.0
    }
}

/// Accumulates the parameter gradient of the objective into `grads`.
pub fn backward(params: &PolicyParams, state: &EncodedState, head: &HeadGrads, grads: &mut PolicyParams) {
    if head.is_zero() {
        return;
    }
    let cfg = &params.config;
    let (d, h) = (cfg.embed_dim, cfg.hidden);
    let t = &params.tensors;
    let g = &mut grads.tensors;
    let n = state.len();

    // heads -> pooled
    let mut d_pooled = vec![0.0; 2 * h];
    for (k, &dz) in head.template.iter().enumerate() {
        if dz != 0.0 {
            axpy(&mut d_pooled, dz, t[TMPL_W].row(k));
            axpy(g[TMPL_W].row_mut(k), dz, &state.pooled);
            g[TMPL_B].data[k] += dz;
        }
    }
    if head.value != 0.0 {
        axpy(&mut d_pooled, head.value, &t[VAL_W].data);
        axpy(&mut g[VAL_W].data, head.value, &state.pooled);
        g[VAL_B].data[0] += head.value;
    }

    // pooled and pointers -> context
    let mut d_ctx = vec![vec![0.0; h]; n];
    for dc in &mut d_ctx {
        axpy(dc, 1.0 / n as f64, &d_pooled[..h]);
    }
    for k in 0..h {
        d_ctx[state.argmax[k]][k] += d_pooled[h + k];
    }
    if let Some((tmpl, da)) = &head.slot_a {
        for (i, &v) in da.iter().enumerate() {
            if v != 0.0 {
                axpy(&mut d_ctx[i], v, t[PTR_A].row(*tmpl));
                axpy(g[PTR_A].row_mut(*tmpl), v, &state.context[i]);
            }
        }
    }
    if let Some(db) = &head.slot_b {
        for (i, &v) in db.iter().enumerate() {
            if v != 0.0 {
                axpy(&mut d_ctx[i], v, &t[PTR_B].data);
                axpy(&mut g[PTR_B].data, v, &state.context[i]);
            }
        }
    }

    // context -> pre-activation
    let d_pre: Vec<Vec<f64>> = d_ctx
        .iter()
        .zip(&state.context)
        .map(|(dc, c)| dc.iter().zip(c).map(|(a, ci)| a * (1.0 - ci * ci)).collect())
        .collect();
    let mut d_pre_sum = vec![0.0; h];
    for dp in &d_pre {
        axpy(&mut d_pre_sum, 1.0, dp);
    }
    axpy(&mut g[CTX_B].data, 1.0, &d_pre_sum);
    outer_add(&mut g[CTX_G], &d_pre_sum, &state.embed_mean);

    // pre-activation -> embeddings
    let mut d_mean = vec![0.0; d];
    matvec_t_add(&t[CTX_G], &d_pre_sum, &mut d_mean);
    for i in 0..n {
        let e = &state.embeddings[i];
        let mut de = vec![0.0; d];
        axpy(&mut de, 1.0 / n as f64, &d_mean);
        outer_add(&mut g[CTX_M], &d_pre[i], e);
        matvec_t_add(&t[CTX_M], &d_pre[i], &mut de);
        if i + 1 < n {
            outer_add(&mut g[CTX_L], &d_pre[i + 1], e);
            matvec_t_add(&t[CTX_L], &d_pre[i + 1], &mut de);
        }
        if i > 0 {
            outer_add(&mut g[CTX_R], &d_pre[i - 1], e);
            matvec_t_add(&t[CTX_R], &d_pre[i - 1], &mut de);
        }

        let tok = &state.input.tokens[i];
        if let Some(ids) = tok.ids {
            for id in ids {
                axpy(g[WORD].row_mut(id), 1.0, &de);
            }
        }
        axpy(g[SEG].row_mut(tok.segment), 1.0, &de);
        axpy(g[POS].row_mut(tok.position.min(cfg.max_positions - 1)), 1.0, &de);
        outer_add(&mut g[FEAT], &de, &tok.features);
    }
}
