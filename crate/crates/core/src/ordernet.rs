//! Set-to-sequence policy for axis ordering, trained with actor-critic
//! REINFORCE.
//!
//! Each coordinate is embedded by two recurrent encoders (one over its
//! values, one over the matching cluster-center channel). A recurrent
//! decoder emits one coordinate per step through an attention module whose
//! output scores are masked at already-selected coordinates, so every decode
//! is a permutation. The critic summarizes the same embeddings with a
//! glimpse and predicts the reward as a variance-reducing baseline.

use std::path::{Path, PathBuf};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::axis_order::AxisOrder;
use crate::dataset::{compute_cluster_centers, encode_coordinates, CoordinateEncoding, DataSet};
use crate::distnet::DistNet;
use crate::error::{Error, Result};
use crate::nn::gru::{gru_step_tape, register_gru, GruOnTape, GruScratch, GruWeights};
use crate::nn::store::{AdamConfig, ParameterStore};
use crate::nn::tape::{softmax_masked, Tape, ValueId};
use crate::nn::tensor::Tensor;
use crate::separation::{DistanceOracle, Objective, ObjectiveEval};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrderNetConfig {
    /// Hidden size of each channel encoder; embeddings are twice this.
    pub encoder_hidden: usize,
    pub decoder_hidden: usize,
    pub attention_width: usize,
    pub critic_hidden: usize,
    pub glimpse_iterations: usize,
}

impl Default for OrderNetConfig {
    fn default() -> Self {
        OrderNetConfig {
            encoder_hidden: 32,
            decoder_hidden: 64,
            attention_width: 64,
            critic_hidden: 64,
            glimpse_iterations: 1,
        }
    }
}

impl OrderNetConfig {
    pub fn embedding_size(&self) -> usize {
        2 * self.encoder_hidden
    }
}

pub struct ActorParams {
    config: OrderNetConfig,
    store: ParameterStore,
}

pub struct CriticParams {
    config: OrderNetConfig,
    store: ParameterStore,
}

impl ActorParams {
    pub fn init(config: OrderNetConfig, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut store = ParameterStore::new();
        let embed = config.embedding_size();
        register_gru(&mut store, "enc_value", 1, config.encoder_hidden, &mut rng);
        register_gru(&mut store, "enc_center", 1, config.encoder_hidden, &mut rng);
        register_gru(&mut store, "decoder", embed, config.decoder_hidden, &mut rng);
        store.insert(
            "attention.align_w",
            Tensor::init_matrix(
                &mut rng,
                config.attention_width,
                embed + config.decoder_hidden,
            ),
        );
        store.insert(
            "attention.align_v",
            Tensor::init_vector(&mut rng, config.attention_width),
        );
        store.insert(
            "attention.output_w",
            Tensor::init_matrix(&mut rng, config.attention_width, 2 * embed),
        );
        store.insert(
            "attention.output_v",
            Tensor::init_vector(&mut rng, config.attention_width),
        );
        store.insert("start_token", Tensor::init_vector(&mut rng, embed));
        ActorParams { config, store }
    }

    pub fn config(&self) -> &OrderNetConfig {
        &self.config
    }

    pub fn store(&self) -> &ParameterStore {
        &self.store
    }

    pub fn store_mut(&mut self) -> &mut ParameterStore {
        &mut self.store
    }

    pub fn from_parts(config: OrderNetConfig, store: ParameterStore) -> Self {
        ActorParams { config, store }
    }

    /// One embedding per coordinate: the concatenated final hidden states of
    /// the value-channel and center-channel encoders run over the m points.
    pub fn embed_coordinates(&self, enc: &CoordinateEncoding) -> Vec<Vec<f64>> {
        embed_with(&self.store, enc)
    }
}

impl CriticParams {
    pub fn init(config: OrderNetConfig, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut store = ParameterStore::new();
        let embed = config.embedding_size();
        register_gru(&mut store, "enc_value", 1, config.encoder_hidden, &mut rng);
        register_gru(&mut store, "enc_center", 1, config.encoder_hidden, &mut rng);
        store.insert(
            "glimpse.w",
            Tensor::init_matrix(&mut rng, config.attention_width, 2 * embed),
        );
        store.insert(
            "glimpse.v",
            Tensor::init_vector(&mut rng, config.attention_width),
        );
        store.insert(
            "head.fc1_w",
            Tensor::init_matrix(&mut rng, config.critic_hidden, embed),
        );
        store.insert("head.fc1_b", Tensor::zeros(&[config.critic_hidden]));
        store.insert(
            "head.fc2_w",
            Tensor::init_matrix(&mut rng, 1, config.critic_hidden),
        );
        store.insert("head.fc2_b", Tensor::zeros(&[1]));
        CriticParams { config, store }
    }

    pub fn config(&self) -> &OrderNetConfig {
        &self.config
    }

    pub fn store(&self) -> &ParameterStore {
        &self.store
    }

    pub fn store_mut(&mut self) -> &mut ParameterStore {
        &mut self.store
    }

    pub fn from_parts(config: OrderNetConfig, store: ParameterStore) -> Self {
        CriticParams { config, store }
    }

    pub fn embed_coordinates(&self, enc: &CoordinateEncoding) -> Vec<Vec<f64>> {
        embed_with(&self.store, enc)
    }
}

fn embed_with(store: &ParameterStore, enc: &CoordinateEncoding) -> Vec<Vec<f64>> {
    let value_enc = GruWeights::from_store(store, "enc_value");
    let center_enc = GruWeights::from_store(store, "enc_center");
    enc.tokens
        .iter()
        .map(|coordinate| {
            let values: Vec<[f64; 1]> = coordinate.iter().map(|t| [t[0]]).collect();
            let centers: Vec<[f64; 1]> = coordinate.iter().map(|t| [t[1]]).collect();
            let mut e = value_enc.encode_sequence(values.iter().map(|x| x.as_slice()));
            e.extend(center_enc.encode_sequence(centers.iter().map(|x| x.as_slice())));
            e
        })
        .collect()
}

/// Everything the attention module produced at one decode step.
#[derive(Clone, Debug)]
pub struct AttentionTrace {
    /// Pre-softmax alignment scores, one per coordinate.
    pub scores: Vec<f64>,
    /// Softmax of the scores (no mask at this stage).
    pub alignment: Vec<f64>,
    /// Alignment-weighted sum of the embeddings.
    pub context: Vec<f64>,
    /// Output scores; exactly negative infinity at masked coordinates.
    pub output_scores: Vec<f64>,
    /// Masked softmax of the output scores.
    pub probabilities: Vec<f64>,
}

/// One attention step over the plain evaluation path. `mask[i] = true`
/// means coordinate i is still selectable.
pub fn attention_step(
    actor: &ActorParams,
    embeddings: &[Vec<f64>],
    hidden: &[f64],
    mask: &[bool],
) -> Result<AttentionTrace> {
    if mask.iter().all(|&m| !m) {
        return Err(Error::InvalidState(
            "attention step with every coordinate masked".into(),
        ));
    }
    let align_w = actor.store.tensor("attention.align_w");
    let align_v = actor.store.tensor("attention.align_v");
    let output_w = actor.store.tensor("attention.output_w");
    let output_v = actor.store.tensor("attention.output_v");

    let scores: Vec<f64> = embeddings
        .iter()
        .map(|e| scored_pair(align_w, align_v, e, hidden))
        .collect();
    let alignment = softmax_masked(&scores, None)?;
    let dim = embeddings[0].len();
    let mut context = vec![0.0; dim];
    for (weight, e) in alignment.iter().zip(embeddings) {
        for (c, v) in context.iter_mut().zip(e) {
            *c += weight * v;
        }
    }
    let output_scores: Vec<f64> = embeddings
        .iter()
        .zip(mask)
        .map(|(e, &enabled)| {
            if enabled {
                scored_pair(output_w, output_v, e, &context)
            } else {
                f64::NEG_INFINITY
            }
        })
        .collect();
    let finite: Vec<f64> = output_scores
        .iter()
        .map(|&s| if s == f64::NEG_INFINITY { 0.0 } else { s })
        .collect();
    let probabilities = softmax_masked(&finite, Some(mask))?;
    Ok(AttentionTrace {
        scores,
        alignment,
        context,
        output_scores,
        probabilities,
    })
}

/// `v . tanh(W [a; b])`
fn scored_pair(w: &Tensor, v: &Tensor, a: &[f64], b: &[f64]) -> f64 {
    let mut total = 0.0;
    for (i, &vi) in v.data().iter().enumerate() {
        let row = w.row(i);
        let (ra, rb) = row.split_at(a.len());
        let mut acc = 0.0;
        for (x, y) in ra.iter().zip(a) {
            acc += x * y;
        }
        for (x, y) in rb.iter().zip(b) {
            acc += x * y;
        }
        total += vi * acc.tanh();
    }
    total
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DecodeMode {
    Greedy,
    Sample,
}

/// A decoded ordering with its per-step log-probabilities. The reward and
/// baseline are filled in by the trainer.
#[derive(Clone, Debug)]
pub struct Rollout {
    pub ordering: AxisOrder,
    pub step_log_probs: Vec<f64>,
    pub reward: f64,
    pub baseline: f64,
}

impl Rollout {
    pub fn total_log_prob(&self) -> f64 {
        self.step_log_probs.iter().sum()
    }
}

/// Selection bookkeeping shared by both decode paths.
struct DecodeState {
    mask: Vec<bool>,
    selected: Vec<usize>,
}

impl DecodeState {
    fn new(n: usize) -> Self {
        DecodeState {
            mask: vec![true; n],
            selected: Vec::with_capacity(n),
        }
    }

    fn take(&mut self, coordinate: usize) {
        debug_assert!(self.mask[coordinate], "coordinate selected twice");
        self.mask[coordinate] = false;
        self.selected.push(coordinate);
    }
}

fn select_from(probs: &[f64], mode: DecodeMode, rng: &mut ChaCha8Rng) -> usize {
    match mode {
        DecodeMode::Greedy => {
            // Strict comparison keeps the lowest index on ties.
            let mut best = 0usize;
            let mut best_p = f64::NEG_INFINITY;
            for (i, &p) in probs.iter().enumerate() {
                if p > best_p {
                    best = i;
                    best_p = p;
                }
            }
            best
        }
        DecodeMode::Sample => {
            // Inverse CDF over the probability map in index order.
            let u: f64 = rng.random_range(0.0..1.0);
            let mut cum = 0.0;
            let mut last_positive = 0usize;
            for (i, &p) in probs.iter().enumerate() {
                if p <= 0.0 {
                    continue;
                }
                last_positive = i;
                cum += p;
                if u < cum {
                    return i;
                }
            }
            last_positive
        }
    }
}

/// Decodes a full ordering with the plain evaluation path.
pub fn decode(
    actor: &ActorParams,
    enc: &CoordinateEncoding,
    mode: DecodeMode,
    rng: &mut ChaCha8Rng,
) -> Result<Rollout> {
    let embeddings = actor.embed_coordinates(enc);
    decode_embedded(actor, &embeddings, mode, rng)
}

/// Decode over precomputed embeddings; lets callers run several decodes
/// without re-running the encoders.
pub fn decode_embedded(
    actor: &ActorParams,
    embeddings: &[Vec<f64>],
    mode: DecodeMode,
    rng: &mut ChaCha8Rng,
) -> Result<Rollout> {
    let n = embeddings.len();
    if n == 0 {
        return Err(Error::invalid_argument("nothing to decode"));
    }
    let decoder = GruWeights::from_store(&actor.store, "decoder");
    let mut scratch = GruScratch::for_cell(&decoder);
    let mut hidden = vec![0.0; actor.config.decoder_hidden];
    let mut next_hidden = vec![0.0; actor.config.decoder_hidden];
    let mut input: Vec<f64> = actor.store.tensor("start_token").data().to_vec();
    let mut state = DecodeState::new(n);
    let mut step_log_probs = Vec::with_capacity(n);
    for _ in 0..n {
        decoder.step_with_scratch(&input, &hidden, &mut next_hidden, &mut scratch);
        std::mem::swap(&mut hidden, &mut next_hidden);
        let trace = attention_step(actor, embeddings, &hidden, &state.mask)?;
        let choice = select_from(&trace.probabilities, mode, rng);
        step_log_probs.push(trace.probabilities[choice].ln());
        state.take(choice);
        input.clear();
        input.extend_from_slice(&embeddings[choice]);
    }
    Ok(Rollout {
        ordering: AxisOrder::new(state.selected)?,
        step_log_probs,
        reward: 0.0,
        baseline: 0.0,
    })
}

/// Log-probability of producing `order` when teacher-forced, recomputed on
/// the differentiable tape.
pub fn log_prob_of(actor: &ActorParams, enc: &CoordinateEncoding, order: &AxisOrder) -> Result<f64> {
    let mut tape = Tape::new();
    let on_tape = ActorOnTape::register(&mut tape, actor);
    let embeddings = on_tape.embed(&mut tape, enc);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let (_, log_prob) = on_tape.decode(
        &mut tape,
        actor,
        &embeddings,
        DecodeMode::Greedy,
        &mut rng,
        Some(order),
    )?;
    Ok(tape.scalar(log_prob))
}

/// Glimpse aggregation: softmax-weighted sum of the embeddings, scored
/// against a state vector.
pub fn glimpse(critic: &CriticParams, embeddings: &[Vec<f64>], state: &[f64]) -> Vec<f64> {
    let w = critic.store.tensor("glimpse.w");
    let v = critic.store.tensor("glimpse.v");
    let scores: Vec<f64> = embeddings
        .iter()
        .map(|e| scored_pair(w, v, e, state))
        .collect();
    let weights = softmax_masked(&scores, None).expect("non-empty embedding set");
    let dim = embeddings[0].len();
    let mut out = vec![0.0; dim];
    for (weight, e) in weights.iter().zip(embeddings) {
        for (o, x) in out.iter_mut().zip(e) {
            *o += weight * x;
        }
    }
    out
}

/// Critic forward pass: embed, mean-pool, glimpse, two dense layers.
pub fn critic_baseline(critic: &CriticParams, enc: &CoordinateEncoding) -> Result<f64> {
    let embeddings = critic.embed_coordinates(enc);
    if embeddings.is_empty() {
        return Err(Error::invalid_argument("nothing to embed"));
    }
    let dim = embeddings[0].len();
    let mut state = vec![0.0; dim];
    for e in &embeddings {
        for (p, x) in state.iter_mut().zip(e) {
            *p += x / embeddings.len() as f64;
        }
    }
    for _ in 0..critic.config.glimpse_iterations.max(1) {
        state = glimpse(critic, &embeddings, &state);
    }
    let fc1_w = critic.store.tensor("head.fc1_w");
    let fc1_b = critic.store.tensor("head.fc1_b");
    let fc2_w = critic.store.tensor("head.fc2_w");
    let fc2_b = critic.store.tensor("head.fc2_b");
    let mut hidden = vec![0.0; fc1_w.rows()];
    for (i, h) in hidden.iter_mut().enumerate() {
        let mut acc = fc1_b.data()[i];
        for (w, x) in fc1_w.row(i).iter().zip(&state) {
            acc += w * x;
        }
        *h = acc.tanh();
    }
    let mut out = fc2_b.data()[0];
    for (w, x) in fc2_w.row(0).iter().zip(&hidden) {
        out += w * x;
    }
    Ok(out)
}

/// Reward of an ordering: the negated objective, so lower is better under
/// the minimized losses.
pub fn reward(
    data: &DataSet,
    order: &AxisOrder,
    objective: Objective,
    oracle: &DistanceOracle,
) -> Result<f64> {
    let eval = ObjectiveEval {
        data,
        objective,
        oracle: match oracle {
            DistanceOracle::Exact { contour_samples } => DistanceOracle::Exact {
                contour_samples: *contour_samples,
            },
            DistanceOracle::Net(net) => DistanceOracle::Net(net),
        },
    };
    Ok(-eval.value(order)?)
}

/// Mean advantage-weighted log-probability; baselines enter as constants.
pub fn actor_loss(rollouts: &[Rollout]) -> f64 {
    rollouts
        .iter()
        .map(|r| (r.reward - r.baseline) * r.total_log_prob())
        .sum::<f64>()
        / rollouts.len() as f64
}

/// Mean squared error between baselines and rewards.
pub fn critic_loss(rollouts: &[Rollout]) -> f64 {
    rollouts
        .iter()
        .map(|r| (r.baseline - r.reward) * (r.baseline - r.reward))
        .sum::<f64>()
        / rollouts.len() as f64
}

// ---------------------------------------------------------------------------
// Tape-recorded forward passes for training.
// ---------------------------------------------------------------------------

pub struct ActorOnTape {
    enc_value: GruOnTape,
    enc_center: GruOnTape,
    decoder: GruOnTape,
    align_w: ValueId,
    align_v: ValueId,
    output_w: ValueId,
    output_v: ValueId,
    start_token: ValueId,
    encoder_hidden: usize,
    decoder_hidden: usize,
}

impl ActorOnTape {
    pub fn register(tape: &mut Tape, actor: &ActorParams) -> Self {
        ActorOnTape {
            enc_value: GruOnTape::register(tape, &actor.store, "enc_value"),
            enc_center: GruOnTape::register(tape, &actor.store, "enc_center"),
            decoder: GruOnTape::register(tape, &actor.store, "decoder"),
            align_w: tape.param("attention.align_w", &actor.store),
            align_v: tape.param("attention.align_v", &actor.store),
            output_w: tape.param("attention.output_w", &actor.store),
            output_v: tape.param("attention.output_v", &actor.store),
            start_token: tape.param("start_token", &actor.store),
            encoder_hidden: actor.config.encoder_hidden,
            decoder_hidden: actor.config.decoder_hidden,
        }
    }

    pub fn embed(&self, tape: &mut Tape, enc: &CoordinateEncoding) -> Vec<ValueId> {
        enc.tokens
            .iter()
            .map(|coordinate| {
                let mut value_h = tape.constant(Tensor::zeros(&[self.encoder_hidden]));
                let mut center_h = tape.constant(Tensor::zeros(&[self.encoder_hidden]));
                for token in coordinate {
                    let xv = tape.constant(Tensor::vector(vec![token[0]]));
                    value_h = gru_step_tape(tape, &self.enc_value, xv, value_h);
                    let xc = tape.constant(Tensor::vector(vec![token[1]]));
                    center_h = gru_step_tape(tape, &self.enc_center, xc, center_h);
                }
                tape.concat(value_h, center_h)
            })
            .collect()
    }

    fn attention_probs(
        &self,
        tape: &mut Tape,
        embeddings: &[ValueId],
        hidden: ValueId,
        mask: &[bool],
    ) -> Result<ValueId> {
        let mut scores = Vec::with_capacity(embeddings.len());
        for &e in embeddings {
            let joined = tape.concat(e, hidden);
            let z = tape.matmul(self.align_w, joined);
            let t = tape.tanh(z);
            scores.push(tape.dot(self.align_v, t));
        }
        let stacked = tape.stack(&scores);
        let alignment = tape.softmax(stacked, None)?;
        let context = tape.lincomb(alignment, embeddings);
        let mut output_scores = Vec::with_capacity(embeddings.len());
        for (i, &e) in embeddings.iter().enumerate() {
            if mask[i] {
                let joined = tape.concat(e, context);
                let z = tape.matmul(self.output_w, joined);
                let t = tape.tanh(z);
                output_scores.push(tape.dot(self.output_v, t));
            } else {
                // Placeholder; the masked softmax zeroes it and no gradient flows.
                output_scores.push(tape.scalar_constant(0.0));
            }
        }
        let stacked = tape.stack(&output_scores);
        tape.softmax(stacked, Some(mask))
    }

    /// Decodes on the tape. With `forced`, follows the given ordering
    /// (teacher forcing); otherwise selects greedily or by sampling.
    /// Returns the ordering and the summed log-probability node.
    pub fn decode(
        &self,
        tape: &mut Tape,
        _actor: &ActorParams,
        embeddings: &[ValueId],
        mode: DecodeMode,
        rng: &mut ChaCha8Rng,
        forced: Option<&AxisOrder>,
    ) -> Result<(AxisOrder, ValueId)> {
        let n = embeddings.len();
        if let Some(f) = forced {
            if f.len() != n {
                return Err(Error::invalid_argument(
                    "forced ordering length does not match coordinate count",
                ));
            }
        }
        let mut hidden = tape.constant(Tensor::zeros(&[self.decoder_hidden]));
        let mut input = self.start_token;
        let mut state = DecodeState::new(n);
        let mut log_probs = Vec::with_capacity(n);
        for step in 0..n {
            hidden = gru_step_tape(tape, &self.decoder, input, hidden);
            let probs = self.attention_probs(tape, embeddings, hidden, &state.mask)?;
            let choice = match forced {
                Some(f) => f.coordinate_at(step),
                None => select_from(tape.value(probs).data(), mode, rng),
            };
            let picked = tape.pick(probs, choice);
            log_probs.push(tape.ln(picked));
            state.take(choice);
            input = embeddings[choice];
        }
        let stacked = tape.stack(&log_probs);
        let total = tape.sum(stacked);
        Ok((AxisOrder::new(state.selected)?, total))
    }
}

pub struct CriticOnTape {
    enc_value: GruOnTape,
    enc_center: GruOnTape,
    glimpse_w: ValueId,
    glimpse_v: ValueId,
    fc1_w: ValueId,
    fc1_b: ValueId,
    fc2_w: ValueId,
    fc2_b: ValueId,
}

impl CriticOnTape {
    pub fn register(tape: &mut Tape, critic: &CriticParams) -> Self {
        CriticOnTape {
            enc_value: GruOnTape::register(tape, &critic.store, "enc_value"),
            enc_center: GruOnTape::register(tape, &critic.store, "enc_center"),
            glimpse_w: tape.param("glimpse.w", &critic.store),
            glimpse_v: tape.param("glimpse.v", &critic.store),
            fc1_w: tape.param("head.fc1_w", &critic.store),
            fc1_b: tape.param("head.fc1_b", &critic.store),
            fc2_w: tape.param("head.fc2_w", &critic.store),
            fc2_b: tape.param("head.fc2_b", &critic.store),
        }
    }

    pub fn baseline(
        &self,
        tape: &mut Tape,
        critic: &CriticParams,
        enc: &CoordinateEncoding,
    ) -> Result<ValueId> {
        let hidden_size = critic.config.encoder_hidden;
        let embeddings: Vec<ValueId> = enc
            .tokens
            .iter()
            .map(|coordinate| {
                let mut value_h = tape.constant(Tensor::zeros(&[hidden_size]));
                let mut center_h = tape.constant(Tensor::zeros(&[hidden_size]));
                for token in coordinate {
                    let xv = tape.constant(Tensor::vector(vec![token[0]]));
                    value_h = gru_step_tape(tape, &self.enc_value, xv, value_h);
                    let xc = tape.constant(Tensor::vector(vec![token[1]]));
                    center_h = gru_step_tape(tape, &self.enc_center, xc, center_h);
                }
                tape.concat(value_h, center_h)
            })
            .collect();
        let mut state = tape.mean_vecs(&embeddings);
        for _ in 0..critic.config.glimpse_iterations.max(1) {
            let mut scores = Vec::with_capacity(embeddings.len());
            for &e in &embeddings {
                let joined = tape.concat(e, state);
                let z = tape.matmul(self.glimpse_w, joined);
                let t = tape.tanh(z);
                scores.push(tape.dot(self.glimpse_v, t));
            }
            let stacked = tape.stack(&scores);
            let weights = tape.softmax(stacked, None)?;
            state = tape.lincomb(weights, &embeddings);
        }
        let z1 = tape.matmul(self.fc1_w, state);
        let z1b = tape.add(z1, self.fc1_b);
        let h = tape.tanh(z1b);
        let z2 = tape.matmul(self.fc2_w, h);
        let z2b = tape.add(z2, self.fc2_b);
        Ok(tape.pick(z2b, 0))
    }
}

// ---------------------------------------------------------------------------
// Training.
// ---------------------------------------------------------------------------

/// How the trainer obtains pairwise glyph distances for the reward.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OracleChoice {
    Exact { contour_samples: usize },
    Net,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OrderTrainConfig {
    pub net: OrderNetConfig,
    /// Passes over the training set collection.
    pub epochs: usize,
    pub batch: usize,
    pub lr: f64,
    pub objective: Objective,
    pub oracle: OracleChoice,
    pub seed: u64,
    /// Global gradient-norm clip applied to both networks.
    pub grad_clip: f64,
    pub checkpoint_every: Option<usize>,
    pub checkpoint_dir: Option<PathBuf>,
}

impl Default for OrderTrainConfig {
    fn default() -> Self {
        OrderTrainConfig {
            net: OrderNetConfig::default(),
            epochs: 1,
            batch: 64,
            lr: 1e-3,
            objective: Objective::Sc,
            oracle: OracleChoice::Exact { contour_samples: 40 },
            seed: 1,
            grad_clip: 2.0,
            checkpoint_every: None,
            checkpoint_dir: None,
        }
    }
}

/// One line of the training log.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StepLog {
    pub step: usize,
    pub mean_reward: f64,
    pub actor_loss: f64,
    pub critic_loss: f64,
}

struct PreparedSet {
    data: DataSet,
    encoding: CoordinateEncoding,
}

fn prepare(sets: &[DataSet]) -> Result<Vec<PreparedSet>> {
    sets.iter()
        .map(|raw| {
            let data = raw.normalize();
            let centers = compute_cluster_centers(&data);
            let encoding = encode_coordinates(&data, &centers)?;
            Ok(PreparedSet { data, encoding })
        })
        .collect()
}

/// Actor-critic REINFORCE over a collection of training sets.
///
/// Per batch: sample one rollout per set, score it, ask the critic for a
/// baseline, and take one Adam step on each network. Decoding is
/// single-threaded so a fixed seed reproduces the run bit for bit; only the
/// pure reward evaluations fan out across threads.
pub fn train(
    sets: &[DataSet],
    cfg: &OrderTrainConfig,
    distnet: Option<&DistNet>,
) -> Result<(ActorParams, CriticParams, Vec<StepLog>)> {
    if sets.is_empty() {
        return Err(Error::invalid_argument("no training sets"));
    }
    let oracle = match (&cfg.oracle, distnet) {
        (OracleChoice::Exact { contour_samples }, _) => DistanceOracle::Exact {
            contour_samples: *contour_samples,
        },
        (OracleChoice::Net, Some(net)) => DistanceOracle::Net(net),
        (OracleChoice::Net, None) => {
            return Err(Error::invalid_argument(
                "net oracle requested without a distance network",
            ))
        }
    };
    let prepared = prepare(sets)?;
    let mut actor = ActorParams::init(cfg.net.clone(), cfg.seed);
    let mut critic = CriticParams::init(cfg.net.clone(), cfg.seed.wrapping_add(1));
    let adam = AdamConfig::with_lr(cfg.lr);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(2));
    let mut log = Vec::new();
    let mut order: Vec<usize> = (0..prepared.len()).collect();
    let mut step = 0usize;
    for _ in 0..cfg.epochs {
        for i in (1..order.len()).rev() {
            let j = rng.random_range(0..=i);
            order.swap(i, j);
        }
        for chunk in order.chunks(cfg.batch.max(1)) {
            let mut actor_tape = Tape::new();
            let actor_nodes = ActorOnTape::register(&mut actor_tape, &actor);
            let mut critic_tape = Tape::new();
            let critic_nodes = CriticOnTape::register(&mut critic_tape, &critic);

            let mut log_prob_ids = Vec::with_capacity(chunk.len());
            let mut baseline_ids = Vec::with_capacity(chunk.len());
            let mut orderings = Vec::with_capacity(chunk.len());
            for &idx in chunk {
                let set = &prepared[idx];
                let embeddings = actor_nodes.embed(&mut actor_tape, &set.encoding);
                let (ordering, log_prob) = actor_nodes.decode(
                    &mut actor_tape,
                    &actor,
                    &embeddings,
                    DecodeMode::Sample,
                    &mut rng,
                    None,
                )?;
                log_prob_ids.push(log_prob);
                orderings.push(ordering);
                baseline_ids.push(critic_nodes.baseline(&mut critic_tape, &critic, &set.encoding)?);
            }
            let rewards: Vec<f64> = chunk
                .par_iter()
                .zip(orderings.par_iter())
                .map(|(&idx, ordering)| reward(&prepared[idx].data, ordering, cfg.objective, &oracle))
                .collect::<Result<_>>()?;

            let batch_len = chunk.len() as f64;
            let advantages: Vec<f64> = rewards
                .iter()
                .zip(&baseline_ids)
                .map(|(r, b)| r - critic_tape.scalar(*b))
                .collect();

            let adv = actor_tape.constant(Tensor::vector(
                advantages.iter().map(|a| a / batch_len).collect(),
            ));
            let log_prob_vec = actor_tape.stack(&log_prob_ids);
            let actor_loss_id = actor_tape.dot(adv, log_prob_vec);
            let actor_loss_value = actor_tape.scalar(actor_loss_id);
            let grads = actor_tape.backward(actor_loss_id);
            actor_tape.accumulate_param_grads(&grads, &mut actor.store);
            actor.store.clip_grad_norm(cfg.grad_clip);
            actor.store.adam_step(&adam);

            let targets = critic_tape.constant(Tensor::vector(rewards.clone()));
            let baselines = critic_tape.stack(&baseline_ids);
            let diff = critic_tape.sub(baselines, targets);
            let sq = critic_tape.mul(diff, diff);
            let total = critic_tape.sum(sq);
            let critic_loss_id = critic_tape.scale(total, 1.0 / batch_len);
            let critic_loss_value = critic_tape.scalar(critic_loss_id);
            let grads = critic_tape.backward(critic_loss_id);
            critic_tape.accumulate_param_grads(&grads, &mut critic.store);
            critic.store.clip_grad_norm(cfg.grad_clip);
            critic.store.adam_step(&adam);

            step += 1;
            log.push(StepLog {
                step,
                mean_reward: rewards.iter().sum::<f64>() / batch_len,
                actor_loss: actor_loss_value,
                critic_loss: critic_loss_value,
            });
            if let (Some(every), Some(dir)) = (cfg.checkpoint_every, &cfg.checkpoint_dir) {
                if every > 0 && step % every == 0 {
                    std::fs::create_dir_all(dir)?;
                    save_checkpoint(
                        &dir.join(format!("checkpoint_{step:06}.json")),
                        &actor,
                        &critic,
                    )?;
                }
            }
        }
    }
    Ok((actor, critic, log))
}

/// Best-of-k inference: one greedy decode plus `samples - 1` stochastic
/// decodes, returning the ordering with the highest objective value.
pub fn infer(
    actor: &ActorParams,
    eval: &ObjectiveEval,
    samples: usize,
    seed: u64,
) -> Result<(AxisOrder, f64)> {
    if samples == 0 {
        return Err(Error::invalid_argument("need at least one decode"));
    }
    let data = eval.data;
    if !data.is_unit_range() {
        return Err(Error::invalid_argument(
            "inference expects a normalized dataset",
        ));
    }
    let centers = compute_cluster_centers(data);
    let encoding = encode_coordinates(data, &centers)?;
    let embeddings = actor.embed_coordinates(&encoding);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(AxisOrder, f64)> = None;
    let mut seen: Vec<AxisOrder> = Vec::new();
    for k in 0..samples {
        let mode = if k == 0 {
            DecodeMode::Greedy
        } else {
            DecodeMode::Sample
        };
        let rollout = decode_embedded(actor, &embeddings, mode, &mut rng)?;
        if seen.contains(&rollout.ordering) {
            continue;
        }
        let value = eval.value(&rollout.ordering)?;
        seen.push(rollout.ordering.clone());
        let better = match &best {
            Some((_, v)) => value > *v,
            None => true,
        };
        if better {
            best = Some((rollout.ordering, value));
        }
    }
    Ok(best.expect("at least one decode"))
}

const CHECKPOINT_KIND: &str = "ordering-checkpoint";

fn merged_store(actor: &ActorParams, critic: &CriticParams) -> ParameterStore {
    let mut merged = ParameterStore::new();
    for name in actor.store.names() {
        merged.insert(format!("actor.{name}"), actor.store.tensor(name).clone());
    }
    for name in critic.store.names() {
        merged.insert(format!("critic.{name}"), critic.store.tensor(name).clone());
    }
    merged
}

/// Writes actor and critic into one model document with prefixed tensor names.
pub fn save_checkpoint(path: &Path, actor: &ActorParams, critic: &CriticParams) -> Result<()> {
    let hyper = serde_json::json!({ "kind": CHECKPOINT_KIND, "config": actor.config });
    merged_store(actor, critic).save(path, hyper)
}

pub fn load_checkpoint(path: &Path) -> Result<(ActorParams, CriticParams)> {
    let (merged, hyper) = ParameterStore::load(path)?;
    if hyper["kind"] != CHECKPOINT_KIND {
        return Err(Error::ModelFormat(format!(
            "expected a {CHECKPOINT_KIND} model, found kind {}",
            hyper["kind"]
        )));
    }
    let config: OrderNetConfig = serde_json::from_value(hyper["config"].clone())?;
    let mut actor_store = ParameterStore::new();
    let mut critic_store = ParameterStore::new();
    for name in merged.names() {
        if let Some(rest) = name.strip_prefix("actor.") {
            actor_store.insert(rest, merged.tensor(name).clone());
        } else if let Some(rest) = name.strip_prefix("critic.") {
            critic_store.insert(rest, merged.tensor(name).clone());
        } else {
            return Err(Error::ModelFormat(format!(
                "unexpected tensor {name} in checkpoint"
            )));
        }
    }
    Ok((
        ActorParams {
            config: config.clone(),
            store: actor_store,
        },
        CriticParams {
            config,
            store: critic_store,
        },
    ))
}

/// Serialized actor+critic pair, used by the determinism checks.
pub fn checkpoint_json(actor: &ActorParams, critic: &CriticParams) -> String {
    merged_store(actor, critic)
        .to_json_string(serde_json::json!({ "kind": CHECKPOINT_KIND, "config": actor.config }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{synth_dataset, SynthConfig};
    use crate::nn::gradcheck::max_relative_error;

    fn tiny_config() -> OrderNetConfig {
        OrderNetConfig {
            encoder_hidden: 4,
            decoder_hidden: 6,
            attention_width: 5,
            critic_hidden: 5,
            glimpse_iterations: 1,
        }
    }

    fn encoding_for(seed: u64, m: usize, n: usize) -> CoordinateEncoding {
        let d = synth_dataset(&SynthConfig::new(m, n, 2, seed))
            .unwrap()
            .normalize();
        let centers = compute_cluster_centers(&d);
        encode_coordinates(&d, &centers).unwrap()
    }

    #[test]
    fn embedding_handles_single_point_sequences() {
        let actor = ActorParams::init(tiny_config(), 1);
        let enc = CoordinateEncoding {
            tokens: vec![vec![[0.3, 0.4]], vec![[0.9, 0.2]]],
        };
        let e = actor.embed_coordinates(&enc);
        assert_eq!(e.len(), 2);
        assert_eq!(e[0].len(), tiny_config().embedding_size());
    }

    #[test]
    fn identical_columns_embed_identically() {
        let actor = ActorParams::init(tiny_config(), 2);
        let column = vec![[0.1, 0.5], [0.8, 0.5], [0.4, 0.5]];
        let enc = CoordinateEncoding {
            tokens: vec![column.clone(), column],
        };
        let e = actor.embed_coordinates(&enc);
        assert_eq!(e[0], e[1]);
    }

    #[test]
    fn zero_weights_embed_to_zero() {
        let mut actor = ActorParams::init(tiny_config(), 3);
        for prefix in ["enc_value", "enc_center"] {
            for gate in ["update", "reset", "candidate"] {
                actor
                    .store_mut()
                    .tensor_mut(&format!("{prefix}.{gate}"))
                    .fill(0.0);
            }
        }
        let enc = encoding_for(4, 4, 3);
        for e in actor.embed_coordinates(&enc) {
            assert!(e.iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn attention_single_unmasked_coordinate_wins() {
        let actor = ActorParams::init(tiny_config(), 5);
        let enc = encoding_for(6, 4, 4);
        let e = actor.embed_coordinates(&enc);
        let hidden = vec![0.1; tiny_config().decoder_hidden];
        let mask = [false, false, true, false];
        let trace = attention_step(&actor, &e, &hidden, &mask).unwrap();
        assert_eq!(trace.probabilities[2], 1.0);
        for (i, &p) in trace.probabilities.iter().enumerate() {
            if i != 2 {
                assert_eq!(p, 0.0);
                assert_eq!(trace.output_scores[i], f64::NEG_INFINITY);
            }
        }
    }

    #[test]
    fn attention_zero_weights_give_uniform_probabilities() {
        let mut actor = ActorParams::init(tiny_config(), 6);
        for name in [
            "attention.align_w",
            "attention.align_v",
            "attention.output_w",
            "attention.output_v",
        ] {
            actor.store_mut().tensor_mut(name).fill(0.0);
        }
        let enc = encoding_for(7, 4, 5);
        let e = actor.embed_coordinates(&enc);
        let hidden = vec![0.0; tiny_config().decoder_hidden];
        let mask = [true, true, false, true, true];
        let trace = attention_step(&actor, &e, &hidden, &mask).unwrap();
        for (i, &p) in trace.probabilities.iter().enumerate() {
            if mask[i] {
                assert!((p - 0.25).abs() < 1e-12);
            } else {
                assert_eq!(p, 0.0);
            }
        }
    }

    #[test]
    fn attention_all_masked_is_invalid_state() {
        let actor = ActorParams::init(tiny_config(), 7);
        let enc = encoding_for(8, 3, 3);
        let e = actor.embed_coordinates(&enc);
        let hidden = vec![0.0; tiny_config().decoder_hidden];
        assert!(matches!(
            attention_step(&actor, &e, &hidden, &[false, false, false]),
            Err(Error::InvalidState(_))
        ));
    }

    #[test]
    fn attention_matches_scalar_reimplementation() {
        let actor = ActorParams::init(tiny_config(), 8);
        let enc = encoding_for(9, 5, 4);
        let e = actor.embed_coordinates(&enc);
        let hidden: Vec<f64> = (0..tiny_config().decoder_hidden)
            .map(|i| (i as f64 * 0.13).sin())
            .collect();
        let mask = [true, false, true, true];
        let trace = attention_step(&actor, &e, &hidden, &mask).unwrap();

        let store = actor.store();
        let dotrow = |w: &Tensor, v: &Tensor, a: &[f64], b: &[f64]| -> f64 {
            (0..v.len())
                .map(|i| {
                    let row = w.row(i);
                    let mut acc = 0.0;
                    for (j, &x) in a.iter().enumerate() {
                        acc += row[j] * x;
                    }
                    for (j, &x) in b.iter().enumerate() {
                        acc += row[a.len() + j] * x;
                    }
                    v.data()[i] * acc.tanh()
                })
                .sum()
        };
        let scores: Vec<f64> = e
            .iter()
            .map(|ei| {
                dotrow(
                    store.tensor("attention.align_w"),
                    store.tensor("attention.align_v"),
                    ei,
                    &hidden,
                )
            })
            .collect();
        let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
        let total: f64 = exps.iter().sum();
        let alignment: Vec<f64> = exps.iter().map(|x| x / total).collect();
        let mut context = vec![0.0; e[0].len()];
        for (a, ei) in alignment.iter().zip(&e) {
            for (c, v) in context.iter_mut().zip(ei) {
                *c += a * v;
            }
        }
        let mut out_scores = vec![0.0; 4];
        for i in 0..4 {
            if mask[i] {
                out_scores[i] = dotrow(
                    store.tensor("attention.output_w"),
                    store.tensor("attention.output_v"),
                    &e[i],
                    &context,
                );
            }
        }
        let max = (0..4)
            .filter(|&i| mask[i])
            .map(|i| out_scores[i])
            .fold(f64::NEG_INFINITY, f64::max);
        let mut probs = vec![0.0; 4];
        let mut total = 0.0;
        for i in 0..4 {
            if mask[i] {
                probs[i] = (out_scores[i] - max).exp();
                total += probs[i];
            }
        }
        for p in &mut probs {
            *p /= total;
        }
        for i in 0..4 {
            assert!((trace.probabilities[i] - probs[i]).abs() < 1e-12);
            assert!((trace.alignment[i] - alignment[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn decode_single_coordinate() {
        let actor = ActorParams::init(tiny_config(), 9);
        let enc = CoordinateEncoding {
            tokens: vec![vec![[0.2, 0.3], [0.4, 0.3]]],
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let rollout = decode(&actor, &enc, DecodeMode::Greedy, &mut rng).unwrap();
        assert_eq!(rollout.ordering.as_slice(), &[0]);
        assert_eq!(rollout.step_log_probs, vec![0.0]);
    }

    #[test]
    fn greedy_decode_is_deterministic() {
        let actor = ActorParams::init(tiny_config(), 10);
        let enc = encoding_for(11, 6, 5);
        let mut rng1 = ChaCha8Rng::seed_from_u64(1);
        let mut rng2 = ChaCha8Rng::seed_from_u64(999);
        let a = decode(&actor, &enc, DecodeMode::Greedy, &mut rng1).unwrap();
        let b = decode(&actor, &enc, DecodeMode::Greedy, &mut rng2).unwrap();
        assert_eq!(a.ordering, b.ordering);
        assert_eq!(a.step_log_probs, b.step_log_probs);
    }

    #[test]
    fn sampled_first_choices_match_probability_map() {
        // Frequencies of the first selected coordinate over many decodes
        // must match the first-step probability map within 3 sigma.
        let actor = ActorParams::init(tiny_config(), 12);
        let enc = encoding_for(13, 4, 3);
        let embeddings = actor.embed_coordinates(&enc);
        let decoder = GruWeights::from_store(actor.store(), "decoder");
        let mut hidden = vec![0.0; tiny_config().decoder_hidden];
        let mut next = hidden.clone();
        decoder.step_into(actor.store().tensor("start_token").data(), &hidden, &mut next);
        std::mem::swap(&mut hidden, &mut next);
        let trace = attention_step(&actor, &embeddings, &hidden, &[true, true, true]).unwrap();

        let draws = 10_000usize;
        let mut counts = [0usize; 3];
        let mut rng = ChaCha8Rng::seed_from_u64(4242);
        for _ in 0..draws {
            let rollout =
                decode_embedded(&actor, &embeddings, DecodeMode::Sample, &mut rng).unwrap();
            counts[rollout.ordering.coordinate_at(0)] += 1;
        }
        for i in 0..3 {
            let expected = draws as f64 * trace.probabilities[i];
            let sigma = (draws as f64 * trace.probabilities[i] * (1.0 - trace.probabilities[i]))
                .sqrt()
                .max(1.0);
            let got = counts[i] as f64;
            assert!(
                (got - expected).abs() <= 3.0 * sigma,
                "coordinate {i}: {got} vs {expected} (sigma {sigma})"
            );
        }
    }

    #[test]
    fn decodes_are_valid_permutations() {
        let actor = ActorParams::init(tiny_config(), 14);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in 2..8 {
            let enc = encoding_for(n as u64, 4, n);
            for _ in 0..20 {
                let rollout = decode(&actor, &enc, DecodeMode::Sample, &mut rng).unwrap();
                let mut seen = vec![false; n];
                for c in rollout.ordering.iter() {
                    assert!(!seen[c]);
                    seen[c] = true;
                }
                assert!(seen.iter().all(|&s| s));
            }
        }
    }

    #[test]
    fn teacher_forced_log_prob_matches_decode() {
        let actor = ActorParams::init(tiny_config(), 15);
        let enc = encoding_for(16, 5, 6);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let rollout = decode(&actor, &enc, DecodeMode::Sample, &mut rng).unwrap();
        let reconstructed = log_prob_of(&actor, &enc, &rollout.ordering).unwrap();
        assert!(
            (reconstructed - rollout.total_log_prob()).abs() < 1e-9,
            "{reconstructed} vs {}",
            rollout.total_log_prob()
        );
    }

    #[test]
    fn tape_decode_matches_eval_path() {
        let actor = ActorParams::init(tiny_config(), 17);
        let enc = encoding_for(18, 4, 5);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let eval_rollout = decode(&actor, &enc, DecodeMode::Greedy, &mut rng).unwrap();

        let mut tape = Tape::new();
        let nodes = ActorOnTape::register(&mut tape, &actor);
        let embeddings = nodes.embed(&mut tape, &enc);
        let mut rng2 = ChaCha8Rng::seed_from_u64(3);
        let (ordering, log_prob) = nodes
            .decode(&mut tape, &actor, &embeddings, DecodeMode::Greedy, &mut rng2, None)
            .unwrap();
        assert_eq!(ordering, eval_rollout.ordering);
        assert!((tape.scalar(log_prob) - eval_rollout.total_log_prob()).abs() < 1e-12);
    }

    #[test]
    fn glimpse_of_single_embedding_returns_it() {
        let critic = CriticParams::init(tiny_config(), 19);
        let e = vec![vec![0.5, -0.25, 0.75, 0.1, 0.0, 0.9, -0.4, 0.2]];
        let out = glimpse(&critic, &e, &vec![0.0; 8]);
        assert_eq!(out, e[0]);
    }

    #[test]
    fn glimpse_zero_weights_is_unweighted_mean() {
        let mut critic = CriticParams::init(tiny_config(), 20);
        critic.store_mut().tensor_mut("glimpse.w").fill(0.0);
        critic.store_mut().tensor_mut("glimpse.v").fill(0.0);
        let e = vec![vec![1.0; 8], vec![3.0; 8]];
        let out = glimpse(&critic, &e, &vec![0.0; 8]);
        for v in out {
            assert!((v - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn glimpse_matches_scalar_oracle() {
        let critic = CriticParams::init(tiny_config(), 21);
        let enc = encoding_for(22, 4, 3);
        let e = critic.embed_coordinates(&enc);
        let state: Vec<f64> = (0..e[0].len()).map(|i| 0.05 * i as f64).collect();
        let got = glimpse(&critic, &e, &state);
        let w = critic.store().tensor("glimpse.w");
        let v = critic.store().tensor("glimpse.v");
        let scores: Vec<f64> = e
            .iter()
            .map(|ei| {
                (0..v.len())
                    .map(|i| {
                        let row = w.row(i);
                        let mut acc = 0.0;
                        for (j, &x) in ei.iter().enumerate() {
                            acc += row[j] * x;
                        }
                        for (j, &x) in state.iter().enumerate() {
                            acc += row[ei.len() + j] * x;
                        }
                        v.data()[i] * acc.tanh()
                    })
                    .sum()
            })
            .collect();
        let weights = softmax_masked(&scores, None).unwrap();
        for d in 0..e[0].len() {
            let expect: f64 = weights.iter().zip(&e).map(|(p, ei)| p * ei[d]).sum();
            assert!((got[d] - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn critic_zero_head_weights_give_zero() {
        let mut critic = CriticParams::init(tiny_config(), 23);
        for name in ["head.fc1_w", "head.fc1_b", "head.fc2_w", "head.fc2_b"] {
            critic.store_mut().tensor_mut(name).fill(0.0);
        }
        let enc = encoding_for(24, 4, 4);
        assert_eq!(critic_baseline(&critic, &enc).unwrap(), 0.0);
    }

    #[test]
    fn critic_is_deterministic_and_matches_tape() {
        let critic = CriticParams::init(tiny_config(), 25);
        let enc = encoding_for(26, 5, 4);
        let a = critic_baseline(&critic, &enc).unwrap();
        let b = critic_baseline(&critic, &enc).unwrap();
        assert_eq!(a, b);
        let mut tape = Tape::new();
        let nodes = CriticOnTape::register(&mut tape, &critic);
        let id = nodes.baseline(&mut tape, &critic, &enc).unwrap();
        assert!((tape.scalar(id) - a).abs() < 1e-12);
    }

    #[test]
    fn reward_examples() {
        // Two tight clusters far apart: silhouette 1, reward -1.
        let d = DataSet::new(
            vec![
                vec![0.1, 0.1, 0.1, 0.9],
                vec![0.1, 0.1, 0.1, 0.9],
                vec![0.9, 0.9, 0.9, 0.1],
                vec![0.9, 0.9, 0.9, 0.1],
            ],
            vec![1, 1, 2, 2],
        )
        .unwrap();
        let oracle = DistanceOracle::Exact { contour_samples: 24 };
        let r = reward(&d, &AxisOrder::identity(4), Objective::Sc, &oracle).unwrap();
        assert_eq!(r, -1.0);

        let identical = DataSet::new(vec![vec![0.3, 0.6], vec![0.3, 0.6]], vec![1, 2]).unwrap();
        let r = reward(&identical, &AxisOrder::identity(2), Objective::Sc, &oracle).unwrap();
        assert_eq!(r, 0.0);
    }

    #[test]
    fn loss_closed_forms() {
        let rollout = |reward: f64, baseline: f64, log_prob: f64| Rollout {
            ordering: AxisOrder::identity(2),
            step_log_probs: vec![log_prob],
            reward,
            baseline,
        };
        // Zero advantage: actor loss is exactly zero.
        let batch = vec![rollout(-0.4, -0.4, -1.3), rollout(-0.2, -0.2, -0.7)];
        assert_eq!(actor_loss(&batch), 0.0);
        // Direct substitution.
        let batch = vec![rollout(-0.5, 0.0, -2.0)];
        assert!((actor_loss(&batch) - 1.0).abs() < 1e-15);
        assert!((critic_loss(&batch) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn teacher_forced_gradients_match_finite_differences() {
        let mut actor = ActorParams::init(tiny_config(), 27);
        let enc = encoding_for(28, 3, 4);
        let forced = AxisOrder::new(vec![2, 0, 3, 1]).unwrap();
        let config = actor.config().clone();
        let worst = max_relative_error(
            actor.store_mut(),
            |s| {
                let probe = ActorParams {
                    config: config.clone(),
                    store: s.clone(),
                };
                let mut tape = Tape::new();
                let nodes = ActorOnTape::register(&mut tape, &probe);
                let embeddings = nodes.embed(&mut tape, &enc);
                let mut rng = ChaCha8Rng::seed_from_u64(0);
                let (_, logp) = nodes
                    .decode(
                        &mut tape,
                        &probe,
                        &embeddings,
                        DecodeMode::Greedy,
                        &mut rng,
                        Some(&forced),
                    )
                    .unwrap();
                (tape, logp)
            },
            1e-4,
        );
        assert!(worst <= 1e-3, "max relative error {worst}");
    }

    #[test]
    fn critic_gradients_match_finite_differences() {
        let mut critic = CriticParams::init(tiny_config(), 29);
        let enc = encoding_for(30, 3, 4);
        let config = critic.config().clone();
        let worst = max_relative_error(
            critic.store_mut(),
            |s| {
                let probe = CriticParams {
                    config: config.clone(),
                    store: s.clone(),
                };
                let mut tape = Tape::new();
                let nodes = CriticOnTape::register(&mut tape, &probe);
                let b = nodes.baseline(&mut tape, &probe, &enc).unwrap();
                // Square it so the loss is curved through the head.
                let sq = tape.mul(b, b);
                (tape, sq)
            },
            1e-4,
        );
        assert!(worst <= 1e-3, "max relative error {worst}");
    }

    fn tiny_train_config(epochs: usize) -> OrderTrainConfig {
        OrderTrainConfig {
            net: tiny_config(),
            epochs,
            batch: 3,
            lr: 1e-3,
            objective: Objective::Sc,
            oracle: OracleChoice::Exact { contour_samples: 16 },
            seed: 5,
            grad_clip: 2.0,
            checkpoint_every: None,
            checkpoint_dir: None,
        }
    }

    fn tiny_sets(count: usize) -> Vec<DataSet> {
        (0..count)
            .map(|s| synth_dataset(&SynthConfig::new(4, 4, 2, 100 + s as u64)).unwrap())
            .collect()
    }

    #[test]
    fn zero_epochs_returns_initialization() {
        let sets = tiny_sets(4);
        let cfg = tiny_train_config(0);
        let (actor, critic, log) = train(&sets, &cfg, None).unwrap();
        assert!(log.is_empty());
        let fresh_actor = ActorParams::init(cfg.net.clone(), cfg.seed);
        let fresh_critic = CriticParams::init(cfg.net.clone(), cfg.seed.wrapping_add(1));
        assert_eq!(
            checkpoint_json(&actor, &critic),
            checkpoint_json(&fresh_actor, &fresh_critic)
        );
    }

    #[test]
    fn training_is_bit_reproducible() {
        let sets = tiny_sets(6);
        let cfg = tiny_train_config(2);
        let (a1, c1, l1) = train(&sets, &cfg, None).unwrap();
        let (a2, c2, l2) = train(&sets, &cfg, None).unwrap();
        assert_eq!(checkpoint_json(&a1, &c1), checkpoint_json(&a2, &c2));
        assert_eq!(
            serde_json::to_string(&l1).unwrap(),
            serde_json::to_string(&l2).unwrap()
        );
    }

    #[test]
    fn checkpoint_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ckpt.json");
        let actor = ActorParams::init(tiny_config(), 31);
        let critic = CriticParams::init(tiny_config(), 32);
        save_checkpoint(&path, &actor, &critic).unwrap();
        let (a, c) = load_checkpoint(&path).unwrap();
        assert_eq!(checkpoint_json(&a, &c), checkpoint_json(&actor, &critic));
    }

    #[test]
    fn infer_best_of_k_dominates_greedy() {
        let actor = ActorParams::init(tiny_config(), 33);
        let d = synth_dataset(&SynthConfig::new(4, 4, 2, 200))
            .unwrap()
            .normalize();
        let eval = ObjectiveEval {
            data: &d,
            objective: Objective::Sc,
            oracle: DistanceOracle::Exact { contour_samples: 16 },
        };
        let (_, greedy_value) = infer(&actor, &eval, 1, 9).unwrap();
        let (_, best_value) = infer(&actor, &eval, 8, 9).unwrap();
        assert!(best_value >= greedy_value);
    }
}
