use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::RngCore;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::rbm::Rbm;
use super::DbnError;
use crate::data::TrafficState;

/// Standard deviation of the Gaussian weight initialization.
pub const INIT_STD: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DbnConfig {
    /// input width followed by hidden layer widths
    pub layer_sizes: Vec<usize>,
    pub unsup_epochs: usize,
    pub unsup_lr: f64,
    /// supervised mini-batch gradient steps
    pub sup_iters: usize,
    pub sup_lr: f64,
    pub batch_size: usize,
    pub seed: u64,
    pub n_classes: usize,
}

impl Default for DbnConfig {
    fn default() -> Self {
        Self {
            layer_sizes: vec![23, 300, 300, 300],
            unsup_epochs: 30,
            unsup_lr: 2.0,
            sup_iters: 200,
            sup_lr: 0.1,
            batch_size: 100,
            seed: 0,
            n_classes: TrafficState::COUNT,
        }
    }
}

impl DbnConfig {
    pub fn validate(&self) -> Result<(), DbnError> {
        let bad = |msg: &str| Err(DbnError::InvalidConfig(msg.to_string()));
        if self.layer_sizes.len() < 2 {
            return bad("layer_sizes needs an input width and at least one hidden layer");
        }
        if self.layer_sizes.contains(&0) {
            return bad("layer sizes must be >= 1");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be >= 1");
        }
        if self.n_classes == 0 || self.n_classes > TrafficState::COUNT {
            return bad("n_classes must be between 1 and 3");
        }
        if !(self.unsup_lr.is_finite() && self.unsup_lr > 0.0) || !(self.sup_lr.is_finite() && self.sup_lr > 0.0) {
            return bad("learning rates must be positive");
        }
        Ok(())
    }

    pub fn input_width(&self) -> usize {
        self.layer_sizes[0]
    }
}

/// Stacked RBMs with a softmax classification layer on top.
#[derive(Debug, Clone, PartialEq)]
pub struct Dbn {
    pub rbms: Vec<Rbm>,
    /// top hidden width x classes
    pub head_weights: Array2<f64>,
    pub head_bias: Array1<f64>,
    /// training configuration, when the model came out of `fine_tune`
    pub config: Option<DbnConfig>,
}

/// Gradient of the classification loss. RBM visible biases do not enter
/// the feed-forward pass and have no entry here.
#[derive(Debug, Clone, PartialEq)]
pub struct DbnGradient {
    pub layer_weights: Vec<Array2<f64>>,
    pub layer_bias: Vec<Array1<f64>>,
    pub head_weights: Array2<f64>,
    pub head_bias: Array1<f64>,
}

fn softmax_rows(mut logits: Array2<f64>) -> Array2<f64> {
    for mut row in logits.rows_mut() {
        let max = row.fold(f64::NEG_INFINITY, |m, &x| m.max(x));
        row.mapv_inplace(|x| (x - max).exp());
        let total = row.sum();
        row /= total;
    }
    logits
}

fn check_unit_interval(data: ArrayView2<f64>) -> Result<(), DbnError> {
    for ((row, col), &x) in data.indexed_iter() {
        if !(0.0..=1.0).contains(&x) {
            return Err(DbnError::ValueOutOfRange { row, col, value: x });
        }
    }
    Ok(())
}

/// Freshly initialized RBM stack for `cfg.layer_sizes`.
pub fn init_rbms<R: RngCore + ?Sized>(cfg: &DbnConfig, rng: &mut R) -> Vec<Rbm> {
    cfg.layer_sizes.windows(2).map(|w| Rbm::random(w[0], w[1], INIT_STD, rng)).collect()
}

fn shuffled<R: RngCore + ?Sized>(n: usize, rng: &mut R) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    order
}

/// Greedy layer-wise CD-1 training. Each RBM sees the mean-field hidden
/// probabilities of the one below. Labels are not used.
pub fn pretrain<R: RngCore + ?Sized>(cfg: &DbnConfig, data: ArrayView2<f64>, rng: &mut R) -> Result<Vec<Rbm>, DbnError> {
    cfg.validate()?;
    if data.ncols() != cfg.input_width() {
        return Err(DbnError::ArityMismatch { expected: cfg.input_width(), got: data.ncols() });
    }
    check_unit_interval(data)?;
    let mut rbms = init_rbms(cfg, rng);
    if data.nrows() == 0 {
        return if cfg.unsup_epochs == 0 { Ok(rbms) } else { Err(DbnError::EmptyTrainingSet) };
    }

    let mut layer_input = data.to_owned();
    let n = layer_input.nrows();
    let batch = cfg.batch_size.min(n);
    for rbm in rbms.iter_mut() {
        for _ in 0..cfg.unsup_epochs {
            let order = shuffled(n, rng);
            for chunk in order.chunks(batch) {
                let mb = layer_input.select(Axis(0), chunk);
                let direction = rbm.cd1_direction(mb.view(), rng)?;
                rbm.apply(cfg.unsup_lr, &direction);
            }
        }
        if !rbm.is_finite() {
            return Err(DbnError::Diverged("pretraining produced non-finite weights".into()));
        }
        layer_input = rbm.hidden_probs(layer_input.view());
    }
    Ok(rbms)
}

impl Dbn {
    /// Attach a Gaussian-initialized softmax head to pretrained RBMs.
    pub fn with_head<R: RngCore + ?Sized>(rbms: Vec<Rbm>, n_classes: usize, rng: &mut R) -> Self {
        let top = rbms.last().map_or(0, Rbm::hidden);
        let normal = Normal::new(0.0, INIT_STD).expect("valid standard deviation");
        let head_weights = Array2::from_shape_simple_fn((top, n_classes), || normal.sample(rng));
        Self { rbms, head_weights, head_bias: Array1::zeros(n_classes), config: None }
    }

    /// Untrained network: fresh RBM stack plus head, from one RNG.
    pub fn init<R: RngCore + ?Sized>(cfg: &DbnConfig, rng: &mut R) -> Result<Self, DbnError> {
        cfg.validate()?;
        let rbms = init_rbms(cfg, rng);
        Ok(Self::with_head(rbms, cfg.n_classes, rng))
    }

    pub fn input_width(&self) -> usize {
        self.rbms.first().map_or(self.head_weights.nrows(), Rbm::visible)
    }

    pub fn n_classes(&self) -> usize {
        self.head_bias.len()
    }

    pub fn layer_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![self.input_width()];
        sizes.extend(self.rbms.iter().map(Rbm::hidden));
        sizes
    }

    fn check_arity(&self, got: usize) -> Result<(), DbnError> {
        if got != self.input_width() {
            return Err(DbnError::ArityMismatch { expected: self.input_width(), got });
        }
        Ok(())
    }

    /// Mean-field activations of every layer, input first.
    fn activations(&self, x: ArrayView2<f64>) -> Vec<Array2<f64>> {
        let mut acts = Vec::with_capacity(self.rbms.len() + 1);
        acts.push(x.to_owned());
        for rbm in &self.rbms {
            let next = rbm.hidden_probs(acts.last().expect("non-empty").view());
            acts.push(next);
        }
        acts
    }

    fn head(&self, top: ArrayView2<f64>) -> Array2<f64> {
        softmax_rows(top.dot(&self.head_weights) + &self.head_bias)
    }

    /// Class probabilities for a batch of inputs (B x input -> B x classes).
    pub fn forward_batch(&self, x: ArrayView2<f64>) -> Result<Array2<f64>, DbnError> {
        self.check_arity(x.ncols())?;
        let mut act = x.to_owned();
        for rbm in &self.rbms {
            act = rbm.hidden_probs(act.view());
        }
        Ok(self.head(act.view()))
    }

    pub fn forward(&self, x: ArrayView1<f64>) -> Result<Array1<f64>, DbnError> {
        let out = self.forward_batch(x.insert_axis(Axis(0)))?;
        Ok(out.row(0).to_owned())
    }

    /// Most probable state; ties go to the more congested state.
    pub fn predict(&self, x: ArrayView1<f64>) -> Result<TrafficState, DbnError> {
        let p = self.forward(x)?;
        Ok(argmax_state(p.as_slice().expect("contiguous")))
    }

    pub fn predict_batch(&self, x: ArrayView2<f64>) -> Result<Vec<TrafficState>, DbnError> {
        let p = self.forward_batch(x)?;
        Ok(p.rows().into_iter().map(|r| argmax_state(&r.to_vec())).collect())
    }

    fn check_labels(&self, labels: &[usize]) -> Result<(), DbnError> {
        if let Some(&bad) = labels.iter().find(|&&y| y >= self.n_classes()) {
            return Err(DbnError::InvalidLabel(bad));
        }
        Ok(())
    }

    /// Mean cross-entropy of the labels under the current model.
    pub fn loss(&self, x: ArrayView2<f64>, labels: &[usize]) -> Result<f64, DbnError> {
        self.check_arity(x.ncols())?;
        self.check_labels(labels)?;
        let p = self.forward_batch(x)?;
        let total: f64 = labels.iter().enumerate().map(|(r, &y)| -p[[r, y]].ln()).sum();
        Ok(total / labels.len() as f64)
    }

    /// Mean cross-entropy and its gradient by backpropagation.
    pub fn loss_and_gradient(&self, x: ArrayView2<f64>, labels: &[usize]) -> Result<(f64, DbnGradient), DbnError> {
        self.check_arity(x.ncols())?;
        self.check_labels(labels)?;
        if labels.len() != x.nrows() {
            return Err(DbnError::DimensionMismatch { expected: x.nrows(), got: labels.len() });
        }
        if labels.is_empty() {
            return Err(DbnError::EmptyTrainingSet);
        }
        let n = labels.len() as f64;
        let acts = self.activations(x);
        let top = acts.last().expect("non-empty");
        let probs = self.head(top.view());
        let loss = labels.iter().enumerate().map(|(r, &y)| -probs[[r, y]].ln()).sum::<f64>() / n;

        let mut delta = probs;
        for (r, &y) in labels.iter().enumerate() {
            delta[[r, y]] -= 1.0;
        }
        delta /= n;
        let head_weights = top.t().dot(&delta);
        let head_bias = delta.sum_axis(Axis(0));

        let mut delta = delta.dot(&self.head_weights.t()) * top.mapv(|a| a * (1.0 - a));
        let layers = self.rbms.len();
        let mut layer_weights = vec![Array2::zeros((0, 0)); layers];
        let mut layer_bias = vec![Array1::zeros(0); layers];
        for l in (0..layers).rev() {
            layer_weights[l] = acts[l].t().dot(&delta);
            layer_bias[l] = delta.sum_axis(Axis(0));
            if l > 0 {
                delta = delta.dot(&self.rbms[l].weights.t()) * acts[l].mapv(|a| a * (1.0 - a));
            }
        }
        Ok((loss, DbnGradient { layer_weights, layer_bias, head_weights, head_bias }))
    }

    fn descend(&mut self, lr: f64, grad: &DbnGradient) {
        for (rbm, (w, b)) in self.rbms.iter_mut().zip(grad.layer_weights.iter().zip(&grad.layer_bias)) {
            rbm.weights.scaled_add(-lr, w);
            rbm.hidden_bias.scaled_add(-lr, b);
        }
        self.head_weights.scaled_add(-lr, &grad.head_weights);
        self.head_bias.scaled_add(-lr, &grad.head_bias);
    }

    pub fn is_finite(&self) -> bool {
        self.rbms.iter().all(Rbm::is_finite) && self.head_weights.iter().chain(&self.head_bias).all(|x| x.is_finite())
    }
}

fn argmax_state(p: &[f64]) -> TrafficState {
    let mut padded = [f64::NEG_INFINITY; TrafficState::COUNT];
    padded[..p.len()].copy_from_slice(p);
    TrafficState::argmax(&padded)
}

/// Supervised backpropagation over every layer, starting from `dbn`.
/// Runs `cfg.sup_iters` mini-batch steps; the data order is reshuffled
/// whenever a pass is exhausted.
pub fn fine_tune<R: RngCore + ?Sized>(
    dbn: &Dbn,
    x: ArrayView2<f64>,
    labels: &[usize],
    cfg: &DbnConfig,
    rng: &mut R,
) -> Result<Dbn, DbnError> {
    cfg.validate()?;
    dbn.check_arity(x.ncols())?;
    dbn.check_labels(labels)?;
    if labels.len() != x.nrows() {
        return Err(DbnError::DimensionMismatch { expected: x.nrows(), got: labels.len() });
    }
    if labels.is_empty() {
        return Err(DbnError::EmptyTrainingSet);
    }
    let mut model = dbn.clone();
    let n = labels.len();
    let batch = cfg.batch_size.min(n);
    let mut order = shuffled(n, rng);
    let mut cursor = 0;
    for _ in 0..cfg.sup_iters {
        if cursor + batch > n {
            order = shuffled(n, rng);
            cursor = 0;
        }
        let idx = &order[cursor..cursor + batch];
        cursor += batch;
        let xb = x.select(Axis(0), idx);
        let yb: Vec<usize> = idx.iter().map(|&i| labels[i]).collect();
        let (_, grad) = model.loss_and_gradient(xb.view(), &yb)?;
        model.descend(cfg.sup_lr, &grad);
    }
    model.config = Some(cfg.clone());
    if !model.is_finite() {
        return Err(DbnError::Diverged("fine-tuning produced non-finite weights".into()));
    }
    Ok(model)
}

/// Pretrain then fine-tune, all randomness drawn from `rng`.
pub fn train<R: RngCore + ?Sized>(cfg: &DbnConfig, x: ArrayView2<f64>, labels: &[usize], rng: &mut R) -> Result<Dbn, DbnError> {
    let rbms = pretrain(cfg, x, rng)?;
    let dbn = Dbn::with_head(rbms, cfg.n_classes, rng);
    fine_tune(&dbn, x, labels, cfg, rng)
}
