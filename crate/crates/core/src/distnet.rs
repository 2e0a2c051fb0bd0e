//! Learned approximation of the contour shape distance.
//!
//! A shared recurrent encoder consumes each contour's 2-D sample sequence;
//! the two final hidden states are concatenated and pushed through two
//! fully-connected layers and a sigmoid. Predictions are symmetrized by
//! averaging both argument orders, which shares the encoder passes.

use std::path::Path;
use std::time::Instant;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::axis_order::AxisOrder;
use crate::error::{Error, Result};
use crate::geometry::{
    build_polygon, glyph_descriptor, sample_contour, shape_context, shape_distance,
    ContourSamples, StarGlyph,
};
use crate::nn::gru::{gru_step_tape, register_gru, GruOnTape, GruWeights};
use crate::nn::store::{AdamConfig, ParameterStore};
use crate::nn::tape::{sigmoid, Tape, ValueId};
use crate::nn::tensor::Tensor;
use crate::separation::DistanceMatrix;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistNetConfig {
    pub encoder_hidden: usize,
    pub fc_hidden: usize,
    /// Contour sample count the network consumes.
    pub contour_samples: usize,
    /// Feed polygon corner points instead of uniform contour samples.
    pub corner_input: bool,
}

impl Default for DistNetConfig {
    fn default() -> Self {
        DistNetConfig {
            encoder_hidden: 12,
            fc_hidden: 32,
            contour_samples: 40,
            corner_input: false,
        }
    }
}

pub struct DistNet {
    config: DistNetConfig,
    store: ParameterStore,
}

const KIND: &str = "distance-net";

impl DistNet {
    pub fn init(config: DistNetConfig, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut store = ParameterStore::new();
        register_gru(&mut store, "encoder", 2, config.encoder_hidden, &mut rng);
        store.insert(
            "head.fc1_w",
            Tensor::init_matrix(&mut rng, config.fc_hidden, 2 * config.encoder_hidden),
        );
        store.insert("head.fc1_b", Tensor::zeros(&[config.fc_hidden]));
        store.insert(
            "head.fc2_w",
            Tensor::init_matrix(&mut rng, 1, config.fc_hidden),
        );
        store.insert("head.fc2_b", Tensor::zeros(&[1]));
        DistNet { config, store }
    }

    pub fn config(&self) -> &DistNetConfig {
        &self.config
    }

    pub fn store(&self) -> &ParameterStore {
        &self.store
    }

    pub fn store_mut(&mut self) -> &mut ParameterStore {
        &mut self.store
    }

    /// Final encoder hidden state for one contour.
    pub fn encode(&self, samples: &ContourSamples) -> Vec<f64> {
        let weights = GruWeights::from_store(&self.store, "encoder");
        weights.encode_sequence(samples.points().iter().map(|p| p.as_slice()))
    }

    /// Head on two encodings (one argument order).
    fn head(&self, first: &[f64], second: &[f64]) -> f64 {
        let fc1_w = self.store.tensor("head.fc1_w");
        let fc1_b = self.store.tensor("head.fc1_b");
        let fc2_w = self.store.tensor("head.fc2_w");
        let fc2_b = self.store.tensor("head.fc2_b");
        let mut hidden = vec![0.0; fc1_w.rows()];
        for (i, h) in hidden.iter_mut().enumerate() {
            let row = fc1_w.row(i);
            let (ra, rb) = row.split_at(first.len());
            let mut acc = fc1_b.data()[i];
            for (w, v) in ra.iter().zip(first) {
                acc += w * v;
            }
            for (w, v) in rb.iter().zip(second) {
                acc += w * v;
            }
            *h = acc.tanh();
        }
        let mut out = fc2_b.data()[0];
        for (w, v) in fc2_w.row(0).iter().zip(&hidden) {
            out += w * v;
        }
        sigmoid(out)
    }

    /// Accepts sequences of the configured length, or an exact integer
    /// multiple of it (strided down to the configured length, which keeps
    /// arc-length uniformity and the start sample).
    fn adapt<'a>(&self, samples: &'a ContourSamples) -> Result<Vec<&'a [f64]>> {
        let want = self.config.contour_samples;
        let have = samples.len();
        if self.config.corner_input {
            // Corner mode consumes whatever vertex count arrives.
            return Ok(samples.points().iter().map(|p| p.as_slice()).collect());
        }
        if have == want {
            return Ok(samples.points().iter().map(|p| p.as_slice()).collect());
        }
        if have > want && have % want == 0 {
            let stride = have / want;
            return Ok(samples
                .points()
                .iter()
                .step_by(stride)
                .map(|p| p.as_slice())
                .collect());
        }
        Err(Error::invalid_argument(format!(
            "network expects {want} contour samples, got {have}"
        )))
    }

    /// Symmetrized prediction: the mean of both argument orders. The shared
    /// encoder runs once per contour.
    pub fn predict(&self, a: &ContourSamples, b: &ContourSamples) -> Result<f64> {
        if a.len() != b.len() {
            return Err(Error::invalid_argument(format!(
                "contour lengths differ: {} vs {}",
                a.len(),
                b.len()
            )));
        }
        let weights = GruWeights::from_store(&self.store, "encoder");
        let ea = weights.encode_sequence(self.adapt(a)?.into_iter());
        let eb = weights.encode_sequence(self.adapt(b)?.into_iter());
        Ok(0.5 * (self.head(&ea, &eb) + self.head(&eb, &ea)))
    }

    /// Pairwise predicted distances; each contour is encoded once.
    pub fn distance_matrix(&self, contours: &[ContourSamples]) -> Result<DistanceMatrix> {
        let weights = GruWeights::from_store(&self.store, "encoder");
        let encodings: Vec<Vec<f64>> = contours
            .iter()
            .map(|c| Ok(weights.encode_sequence(self.adapt(c)?.into_iter())))
            .collect::<Result<_>>()?;
        DistanceMatrix::from_upper(contours.len(), |i, j| {
            0.5 * (self.head(&encodings[i], &encodings[j]) + self.head(&encodings[j], &encodings[i]))
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let hyper = serde_json::json!({ "kind": KIND, "config": self.config });
        self.store.save(path, hyper)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let (store, hyper) = ParameterStore::load(path)?;
        if hyper["kind"] != KIND {
            return Err(Error::ModelFormat(format!(
                "expected a {KIND} model, found kind {}",
                hyper["kind"]
            )));
        }
        let config: DistNetConfig = serde_json::from_value(hyper["config"].clone())?;
        Ok(DistNet { config, store })
    }

    pub fn to_json_string(&self) -> String {
        self.store
            .to_json_string(serde_json::json!({ "kind": KIND, "config": self.config }))
    }
}

/// One training example: two contours and their exact distance.
#[derive(Clone, Debug)]
pub struct ShapePair {
    pub samples_a: ContourSamples,
    pub samples_b: ContourSamples,
    pub target: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistNetTrainConfig {
    pub pairs: usize,
    /// Inclusive range of glyph dimensions to draw from.
    pub dims: (usize, usize),
    pub contour_samples: usize,
    pub epochs: usize,
    pub batch: usize,
    pub lr: f64,
    pub seed: u64,
    /// Extra pairs generated for the held-out evaluation.
    pub holdout: usize,
    pub encoder_hidden: usize,
    pub fc_hidden: usize,
    pub corner_input: bool,
}

impl Default for DistNetTrainConfig {
    fn default() -> Self {
        DistNetTrainConfig {
            pairs: 5000,
            dims: (8, 12),
            contour_samples: 40,
            epochs: 20,
            batch: 32,
            lr: 3e-3,
            seed: 1,
            holdout: 500,
            encoder_hidden: 12,
            fc_hidden: 32,
            corner_input: false,
        }
    }
}

/// Random glyph pairs (values uniform in `[0, 1]`, dimension uniform in
/// `dims`) labeled with the exact contour distance.
pub fn generate_pairs(
    count: usize,
    dims: (usize, usize),
    contour_samples: usize,
    corner_input: bool,
    seed: u64,
) -> Result<Vec<ShapePair>> {
    if dims.0 < 2 || dims.0 > dims.1 {
        return Err(Error::invalid_argument("bad dimension range"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut specs = Vec::with_capacity(count);
    for _ in 0..count {
        let n = rng.random_range(dims.0..=dims.1);
        let a: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
        let b: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
        specs.push((a, b));
    }
    specs
        .into_par_iter()
        .map(|(a, b)| {
            let n = a.len();
            let ga = StarGlyph::new(a, AxisOrder::identity(n))?;
            let gb = StarGlyph::new(b, AxisOrder::identity(n))?;
            let target = shape_distance(
                &glyph_descriptor(&ga, contour_samples)?,
                &glyph_descriptor(&gb, contour_samples)?,
            )?;
            let take = |g: &StarGlyph| -> Result<ContourSamples> {
                let polygon = build_polygon(g);
                if corner_input {
                    Ok(ContourSamples::from_points(polygon.vertices().to_vec()))
                } else {
                    sample_contour(&polygon, contour_samples)
                }
            };
            Ok(ShapePair {
                samples_a: take(&ga)?,
                samples_b: take(&gb)?,
                target,
            })
        })
        .collect()
}

/// Per-epoch training MSE plus the final held-out MSE.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DistNetReport {
    pub epoch_mse: Vec<f64>,
    pub holdout_mse: f64,
}

/// Trains on freshly generated pairs and reports the held-out MSE.
pub fn distnet_train(cfg: &DistNetTrainConfig) -> Result<(DistNet, DistNetReport)> {
    if cfg.pairs == 0 {
        return Err(Error::invalid_argument("no training pairs configured"));
    }
    let train = generate_pairs(
        cfg.pairs,
        cfg.dims,
        cfg.contour_samples,
        cfg.corner_input,
        cfg.seed,
    )?;
    let holdout = generate_pairs(
        cfg.holdout.max(1),
        cfg.dims,
        cfg.contour_samples,
        cfg.corner_input,
        cfg.seed.wrapping_add(0x9e3779b9),
    )?;
    let mut net = DistNet::init(
        DistNetConfig {
            encoder_hidden: cfg.encoder_hidden,
            fc_hidden: cfg.fc_hidden,
            contour_samples: cfg.contour_samples,
            corner_input: cfg.corner_input,
        },
        cfg.seed,
    );
    let report = train_on_pairs(&mut net, &train, &holdout, cfg)?;
    Ok((net, report))
}

/// Trains an already initialized network in place on the given pairs.
pub fn train_on_pairs(
    net: &mut DistNet,
    train: &[ShapePair],
    holdout: &[ShapePair],
    cfg: &DistNetTrainConfig,
) -> Result<DistNetReport> {
    if train.is_empty() {
        return Err(Error::invalid_argument("empty training pair set"));
    }
    let adam = AdamConfig::with_lr(cfg.lr);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(1));
    let mut epoch_mse = Vec::with_capacity(cfg.epochs);
    for _ in 0..cfg.epochs {
        shuffle(&mut order, &mut rng);
        let mut epoch_total = 0.0;
        for chunk in order.chunks(cfg.batch.max(1)) {
            let mut tape = Tape::new();
            let on_tape = DistNetOnTape::register(&mut tape, net);
            let mut losses = Vec::with_capacity(chunk.len());
            for &idx in chunk {
                let pair = &train[idx];
                let pred = on_tape.predict_tape(&mut tape, net, pair)?;
                let target = tape.scalar_constant(pair.target);
                let diff = tape.sub(pred, target);
                losses.push(tape.mul(diff, diff));
            }
            let stacked = tape.stack(&losses);
            let total = tape.sum(stacked);
            let loss = tape.scale(total, 1.0 / chunk.len() as f64);
            epoch_total += tape.scalar(loss) * chunk.len() as f64;
            let grads = tape.backward(loss);
            tape.accumulate_param_grads(&grads, &mut net.store);
            net.store.adam_step(&adam);
        }
        epoch_mse.push(epoch_total / train.len() as f64);
    }
    let holdout_mse = eval_mse(net, holdout)?;
    Ok(DistNetReport {
        epoch_mse,
        holdout_mse,
    })
}

/// Mean squared error of the symmetrized prediction over a pair set.
pub fn eval_mse(net: &DistNet, pairs: &[ShapePair]) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::invalid_argument("empty evaluation pair set"));
    }
    let mut total = 0.0;
    for pair in pairs {
        let pred = net.predict(&pair.samples_a, &pair.samples_b)?;
        total += (pred - pair.target) * (pred - pair.target);
    }
    Ok(total / pairs.len() as f64)
}

struct DistNetOnTape {
    encoder: GruOnTape,
    fc1_w: ValueId,
    fc1_b: ValueId,
    fc2_w: ValueId,
    fc2_b: ValueId,
}

impl DistNetOnTape {
    fn register(tape: &mut Tape, net: &DistNet) -> Self {
        DistNetOnTape {
            encoder: GruOnTape::register(tape, &net.store, "encoder"),
            fc1_w: tape.param("head.fc1_w", &net.store),
            fc1_b: tape.param("head.fc1_b", &net.store),
            fc2_w: tape.param("head.fc2_w", &net.store),
            fc2_b: tape.param("head.fc2_b", &net.store),
        }
    }

    fn encode_tape(&self, tape: &mut Tape, net: &DistNet, samples: &ContourSamples) -> Result<ValueId> {
        let inputs = net.adapt(samples)?;
        let mut hidden = tape.constant(Tensor::zeros(&[net.config.encoder_hidden]));
        for point in inputs {
            let x = tape.constant(Tensor::vector(point.to_vec()));
            hidden = gru_step_tape(tape, &self.encoder, x, hidden);
        }
        Ok(hidden)
    }

    fn head_tape(&self, tape: &mut Tape, first: ValueId, second: ValueId) -> ValueId {
        let joined = tape.concat(first, second);
        let z1 = tape.matmul(self.fc1_w, joined);
        let z1b = tape.add(z1, self.fc1_b);
        let h = tape.tanh(z1b);
        let z2 = tape.matmul(self.fc2_w, h);
        let z2b = tape.add(z2, self.fc2_b);
        let s = tape.sigmoid(z2b);
        tape.pick(s, 0)
    }

    fn predict_tape(&self, tape: &mut Tape, net: &DistNet, pair: &ShapePair) -> Result<ValueId> {
        let ea = self.encode_tape(tape, net, &pair.samples_a)?;
        let eb = self.encode_tape(tape, net, &pair.samples_b)?;
        let ab = self.head_tape(tape, ea, eb);
        let ba = self.head_tape(tape, eb, ea);
        let total = tape.add(ab, ba);
        Ok(tape.scale(total, 0.5))
    }
}

fn shuffle(order: &mut [usize], rng: &mut ChaCha8Rng) {
    for i in (1..order.len()).rev() {
        let j = rng.random_range(0..=i);
        order.swap(i, j);
    }
}

/// Wall-clock comparison of the learned and exact paths on the same pairs.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpeedReport {
    pub net_ms_per_pair: f64,
    pub exact_ms_per_pair: f64,
    pub speedup: f64,
}

pub fn speed_check(net: &DistNet, pairs: &[ShapePair]) -> Result<SpeedReport> {
    if pairs.is_empty() {
        return Err(Error::invalid_argument("timing requires at least one pair"));
    }
    let start = Instant::now();
    let mut sink = 0.0;
    for pair in pairs {
        sink += net.predict(&pair.samples_a, &pair.samples_b)?;
    }
    let net_ms = start.elapsed().as_secs_f64() * 1e3 / pairs.len() as f64;

    let start = Instant::now();
    for pair in pairs {
        let da = shape_context(&pair.samples_a)?;
        let db = shape_context(&pair.samples_b)?;
        sink += shape_distance(&da, &db)?;
    }
    let exact_ms = start.elapsed().as_secs_f64() * 1e3 / pairs.len() as f64;
    std::hint::black_box(sink);
    Ok(SpeedReport {
        net_ms_per_pair: net_ms,
        exact_ms_per_pair: exact_ms,
        speedup: exact_ms / net_ms,
    })
}
