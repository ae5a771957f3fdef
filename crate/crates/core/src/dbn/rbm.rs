//! Restricted Boltzmann machine with binary hidden units.
//!
//! Energy of a joint configuration:
//!
//! ```text
//! E(v, h) = -sum_ij w_ij v_i h_j - sum_i b_i v_i - sum_j a_j h_j
//! ```
//!
//! `b` is the visible bias and `a` the hidden bias. Both conditionals are
//! factorial: `p(h_j = 1 | v) = sigmoid(sum_i w_ij v_i + a_j)` and
//! `p(v_i = 1 | h) = sigmoid(sum_j w_ij h_j + b_i)`.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::{Rng, RngCore};
use rand_distr::{Distribution, Normal};

use super::DbnError;

/// Largest `V + H` for which the exact routines will enumerate states.
pub const MAX_ENUMERATED_UNITS: usize = 20;

/// Logistic function. The two branches keep the exponent non-positive so
/// neither overflows for any finite input.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn log_sum_exp(xs: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = xs.clone().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + xs.map(|x| (x - max).exp()).sum::<f64>().ln()
}

fn bits(index: usize, len: usize) -> Array1<f64> {
    Array1::from_iter((0..len).map(|k| ((index >> k) & 1) as f64))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rbm {
    /// V x H
    pub weights: Array2<f64>,
    /// length V
    pub visible_bias: Array1<f64>,
    /// length H
    pub hidden_bias: Array1<f64>,
}

/// A direction in RBM parameter space (gradient or update).
#[derive(Debug, Clone, PartialEq)]
pub struct RbmGradient {
    pub weights: Array2<f64>,
    pub visible_bias: Array1<f64>,
    pub hidden_bias: Array1<f64>,
}

impl RbmGradient {
    pub fn zeros(visible: usize, hidden: usize) -> Self {
        Self {
            weights: Array2::zeros((visible, hidden)),
            visible_bias: Array1::zeros(visible),
            hidden_bias: Array1::zeros(hidden),
        }
    }

    /// Weights row-major, then visible bias, then hidden bias.
    pub fn flatten(&self) -> Vec<f64> {
        self.weights.iter().chain(self.visible_bias.iter()).chain(self.hidden_bias.iter()).copied().collect()
    }

    pub fn add_scaled(&mut self, alpha: f64, other: &RbmGradient) {
        self.weights.scaled_add(alpha, &other.weights);
        self.visible_bias.scaled_add(alpha, &other.visible_bias);
        self.hidden_bias.scaled_add(alpha, &other.hidden_bias);
    }

    pub fn cosine(&self, other: &RbmGradient) -> f64 {
        let (a, b) = (self.flatten(), other.flatten());
        let dot: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
        let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
        let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
        dot / (na * nb)
    }
}

impl Rbm {
    pub fn zeros(visible: usize, hidden: usize) -> Self {
        Self {
            weights: Array2::zeros((visible, hidden)),
            visible_bias: Array1::zeros(visible),
            hidden_bias: Array1::zeros(hidden),
        }
    }

    /// Gaussian weights with standard deviation `std`, zero biases.
    pub fn random<R: RngCore + ?Sized>(visible: usize, hidden: usize, std: f64, rng: &mut R) -> Self {
        let normal = Normal::new(0.0, std).expect("valid standard deviation");
        let weights = Array2::from_shape_simple_fn((visible, hidden), || normal.sample(rng));
        Self { weights, ..Self::zeros(visible, hidden) }
    }

    pub fn visible(&self) -> usize {
        self.weights.nrows()
    }

    pub fn hidden(&self) -> usize {
        self.weights.ncols()
    }

    fn check_visible(&self, len: usize) -> Result<(), DbnError> {
        if len != self.visible() {
            return Err(DbnError::DimensionMismatch { expected: self.visible(), got: len });
        }
        Ok(())
    }

    fn check_hidden(&self, len: usize) -> Result<(), DbnError> {
        if len != self.hidden() {
            return Err(DbnError::DimensionMismatch { expected: self.hidden(), got: len });
        }
        Ok(())
    }

    pub fn energy(&self, v: ArrayView1<f64>, h: ArrayView1<f64>) -> Result<f64, DbnError> {
        self.check_visible(v.len())?;
        self.check_hidden(h.len())?;
        Ok(-v.dot(&self.weights.dot(&h)) - self.visible_bias.dot(&v) - self.hidden_bias.dot(&h))
    }

    pub fn prob_h_given_v(&self, v: ArrayView1<f64>) -> Result<Array1<f64>, DbnError> {
        self.check_visible(v.len())?;
        Ok((v.dot(&self.weights) + &self.hidden_bias).mapv_into(sigmoid))
    }

    pub fn prob_v_given_h(&self, h: ArrayView1<f64>) -> Result<Array1<f64>, DbnError> {
        self.check_hidden(h.len())?;
        Ok((self.weights.dot(&h) + &self.visible_bias).mapv_into(sigmoid))
    }

    /// Row-wise hidden probabilities for a batch (B x V -> B x H).
    pub fn hidden_probs(&self, batch: ArrayView2<f64>) -> Array2<f64> {
        (batch.dot(&self.weights) + &self.hidden_bias).mapv_into(sigmoid)
    }

    /// Row-wise visible probabilities for a batch (B x H -> B x V).
    pub fn visible_probs(&self, hidden: ArrayView2<f64>) -> Array2<f64> {
        (hidden.dot(&self.weights.t()) + &self.visible_bias).mapv_into(sigmoid)
    }

    fn check_enumerable(&self) -> Result<(), DbnError> {
        let units = self.visible() + self.hidden();
        if units > MAX_ENUMERATED_UNITS {
            return Err(DbnError::TooLargeToEnumerate { units });
        }
        Ok(())
    }

    /// `-E(u, h)` for every hidden configuration of one visible vector,
    /// indexed by the hidden bit pattern.
    fn neg_energies(&self, u: ArrayView1<f64>) -> Vec<f64> {
        let field = u.dot(&self.weights) + &self.hidden_bias;
        let visible_term = self.visible_bias.dot(&u);
        let h_units = self.hidden();
        (0..1usize << h_units)
            .map(|hb| visible_term + (0..h_units).filter(|j| hb >> j & 1 == 1).map(|j| field[j]).sum::<f64>())
            .collect()
    }

    /// `log sum_u sum_h exp(-E(u, h))` by exhaustive enumeration.
    pub fn exact_log_partition(&self) -> Result<f64, DbnError> {
        self.check_enumerable()?;
        let v_units = self.visible();
        let per_visible: Vec<f64> =
            (0..1usize << v_units).map(|vb| log_sum_exp(self.neg_energies(bits(vb, v_units).view()).into_iter())).collect();
        Ok(log_sum_exp(per_visible.into_iter()))
    }

    /// `log p(v)` by exhaustive enumeration of all joint states.
    pub fn exact_log_prob_v(&self, v: ArrayView1<f64>) -> Result<f64, DbnError> {
        self.check_visible(v.len())?;
        let log_z = self.exact_log_partition()?;
        Ok(log_sum_exp(self.neg_energies(v).into_iter()) - log_z)
    }

    pub fn exact_prob_v(&self, v: ArrayView1<f64>) -> Result<f64, DbnError> {
        Ok(self.exact_log_prob_v(v)?.exp())
    }

    /// Gradient of the mean log-likelihood of `data` with respect to every
    /// parameter: data-driven correlations minus model correlations, the
    /// latter computed by enumerating all joint states.
    pub fn exact_loglik_grad(&self, data: ArrayView2<f64>) -> Result<RbmGradient, DbnError> {
        self.check_enumerable()?;
        self.check_visible(data.ncols())?;
        if data.nrows() == 0 {
            return Err(DbnError::EmptyBatch);
        }
        let (v_units, h_units) = (self.visible(), self.hidden());

        // data phase, hidden units at their conditional expectation
        let n = data.nrows() as f64;
        let ph = self.hidden_probs(data);
        let mut grad = RbmGradient {
            weights: data.t().dot(&ph) / n,
            visible_bias: data.sum_axis(Axis(0)) / n,
            hidden_bias: ph.sum_axis(Axis(0)) / n,
        };

        // model phase over all (u, h)
        let log_z = self.exact_log_partition()?;
        for ub in 0..1usize << v_units {
            let u = bits(ub, v_units);
            // mass of u and sum over h of p(u, h) h_j
            let mut mass = 0.0;
            let mut hidden_mass = Array1::<f64>::zeros(h_units);
            for (hb, neg_e) in self.neg_energies(u.view()).into_iter().enumerate() {
                let p = (neg_e - log_z).exp();
                mass += p;
                for j in (0..h_units).filter(|j| hb >> j & 1 == 1) {
                    hidden_mass[j] += p;
                }
            }
            for i in (0..v_units).filter(|&i| u[i] == 1.0) {
                grad.weights.row_mut(i).scaled_add(-1.0, &hidden_mass);
            }
            grad.visible_bias.scaled_add(-mass, &u);
            grad.hidden_bias.scaled_add(-1.0, &hidden_mass);
        }
        Ok(grad)
    }

    /// CD-1 update direction for one mini-batch (before the learning rate).
    ///
    /// Positive statistics pair the data with its hidden probabilities. A
    /// binary hidden sample drives the reconstruction, which is kept at its
    /// visible probabilities; negative statistics pair the reconstruction with
    /// its hidden probabilities.
    pub fn cd1_direction<R: RngCore + ?Sized>(&self, batch: ArrayView2<f64>, rng: &mut R) -> Result<RbmGradient, DbnError> {
        if batch.nrows() == 0 {
            return Err(DbnError::EmptyBatch);
        }
        self.check_visible(batch.ncols())?;
        let n = batch.nrows() as f64;

        let ph0 = self.hidden_probs(batch);
        let h0 = ph0.mapv(|p| if rng.random::<f64>() < p { 1.0 } else { 0.0 });
        let v1 = self.visible_probs(h0.view());
        let ph1 = self.hidden_probs(v1.view());

        let mut weights = batch.t().dot(&ph0);
        weights -= &v1.t().dot(&ph1);
        weights /= n;
        Ok(RbmGradient {
            weights,
            visible_bias: (&batch - &v1).sum_axis(Axis(0)) / n,
            hidden_bias: (&ph0 - &ph1).sum_axis(Axis(0)) / n,
        })
    }

    /// Apply `lr * direction` in place.
    pub fn apply(&mut self, lr: f64, direction: &RbmGradient) {
        self.weights.scaled_add(lr, &direction.weights);
        self.visible_bias.scaled_add(lr, &direction.visible_bias);
        self.hidden_bias.scaled_add(lr, &direction.hidden_bias);
    }

    pub fn is_finite(&self) -> bool {
        self.weights.iter().chain(&self.visible_bias).chain(&self.hidden_bias).all(|x| x.is_finite())
    }
}

/// One contrastive-divergence step; returns the updated machine.
pub fn cd1_step<R: RngCore + ?Sized>(rbm: &Rbm, batch: ArrayView2<f64>, lr: f64, rng: &mut R) -> Result<Rbm, DbnError> {
    let direction = rbm.cd1_direction(batch, rng)?;
    let mut next = rbm.clone();
    next.apply(lr, &direction);
    Ok(next)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeededRng;
    use ndarray::array;

    /// Always yields zero, so every uniform draw is 0.0 and a hidden unit
    /// with non-zero probability samples as 1.
    struct ZeroRng;

    impl RngCore for ZeroRng {
        fn next_u32(&mut self) -> u32 {
            0
        }
        fn next_u64(&mut self) -> u64 {
            0
        }
        fn fill_bytes(&mut self, dst: &mut [u8]) {
            dst.fill(0)
        }
    }

    #[test]
    fn sigmoid_values() {
        assert_eq!(sigmoid(0.0), 0.5);
        let tiny = sigmoid(-1000.0);
        assert!(tiny.is_finite() && tiny.abs() <= 1e-300);
        assert_eq!(sigmoid(1000.0), 1.0);
        assert!((sigmoid(1.0) - 0.7310585786).abs() < 1e-9);
        assert!(!sigmoid(-1e6).is_nan() && !sigmoid(1e6).is_nan());
    }

    #[test]
    fn energy_cases() {
        let mut rng = SeededRng::new(1);
        let rbm = Rbm::random(3, 2, 1.0, &mut rng);
        assert_eq!(rbm.energy(array![0.0, 0.0, 0.0].view(), array![0.0, 0.0].view()).unwrap(), 0.0);
        let one = Rbm { weights: array![[1.0]], ..Rbm::zeros(1, 1) };
        assert_eq!(one.energy(array![1.0].view(), array![1.0].view()).unwrap(), -1.0);
        assert!(matches!(
            rbm.energy(array![1.0].view(), array![0.0, 0.0].view()),
            Err(DbnError::DimensionMismatch { expected: 3, got: 1 })
        ));
    }

    #[test]
    fn conditionals_at_zero_weights() {
        let mut rbm = Rbm::zeros(2, 3);
        let p = rbm.prob_h_given_v(array![1.0, 0.0].view()).unwrap();
        assert!(p.iter().all(|&x| x == 0.5));
        rbm.hidden_bias[1] = 1.0;
        let p = rbm.prob_h_given_v(array![1.0, 1.0].view()).unwrap();
        assert!((p[1] - 0.7310585786).abs() < 1e-9);
        assert!(rbm.prob_v_given_h(array![1.0].view()).is_err());
    }

    #[test]
    fn uniform_at_zero_parameters() {
        let rbm = Rbm::zeros(3, 2);
        for vb in 0..8 {
            let p = rbm.exact_prob_v(bits(vb, 3).view()).unwrap();
            assert!((p - 0.125).abs() < 1e-15);
        }
        assert!(matches!(Rbm::zeros(12, 9).exact_log_partition(), Err(DbnError::TooLargeToEnumerate { units: 21 })));
    }

    #[test]
    fn zero_parameter_gradient_for_one_vector() {
        let rbm = Rbm::zeros(3, 2);
        let v = array![[1.0, 0.0, 1.0]];
        let g = rbm.exact_loglik_grad(v.view()).unwrap();
        for i in 0..3 {
            for j in 0..2 {
                let want = v[[0, i]] * 0.5 - 0.25;
                assert!((g.weights[[i, j]] - want).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn zero_parameter_gradient_for_uniform_data() {
        let rbm = Rbm::zeros(3, 2);
        let data = Array2::from_shape_fn((8, 3), |(r, c)| ((r >> c) & 1) as f64);
        let g = rbm.exact_loglik_grad(data.view()).unwrap();
        assert!(g.flatten().iter().all(|x| x.abs() < 1e-15));
    }

    #[test]
    fn zero_learning_rate_is_identity() {
        let mut rng = SeededRng::new(3);
        let rbm = Rbm::random(4, 3, 0.5, &mut rng);
        let batch = array![[1.0, 0.0, 0.5, 0.25], [0.0, 1.0, 1.0, 0.0]];
        let next = cd1_step(&rbm, batch.view(), 0.0, &mut rng).unwrap();
        assert_eq!(next, rbm);
        assert!(matches!(cd1_step(&rbm, Array2::zeros((0, 4)).view(), 0.1, &mut rng), Err(DbnError::EmptyBatch)));
    }

    #[test]
    fn matched_phases_cancel() {
        // Zero weights: the reconstruction is sigmoid(b) whatever the hidden
        // sample, and hidden probabilities do not depend on the visible layer.
        let mut rbm = Rbm::zeros(2, 2);
        rbm.visible_bias = array![0.3, -0.7];
        let recon = rbm.visible_bias.mapv(sigmoid);
        let batch = recon.clone().insert_axis(Axis(0));
        let d = rbm.cd1_direction(batch.view(), &mut SeededRng::new(9)).unwrap();
        assert!(d.flatten().iter().all(|&x| x == 0.0));
    }

    // Two visible units, one hidden, weights (0.5, -0.5), zero biases, batch
    // {(1, 0), (0, 1)}, hidden sample forced to 1 for both rows. By hand:
    //   ph0 = (s(0.5), s(-0.5)), v1 = (s(0.5), s(-0.5)) for both rows,
    //   ph1 = s(0.5 s(0.5) - 0.5 s(-0.5)) = 0.5305766310176361
    //   dW_i = (s(+-0.5) - 2 s(+-0.5) ph1) / 2
    //   db_i = 1/2 - s(+-0.5), da = 1/2 - ph1
    // evaluated in double precision outside this crate.
    #[test]
    fn cd1_golden_update() {
        let rbm = Rbm { weights: array![[0.5], [-0.5]], ..Rbm::zeros(2, 1) };
        let batch = array![[1.0, 0.0], [0.0, 1.0]];
        let next = cd1_step(&rbm, batch.view(), 1.0, &mut ZeroRng).unwrap();
        let expected_w = [0.5 - 0.019032709293643646, -0.5 - 0.011543921723992434];
        let expected_b = [0.5 - 0.6224593312018546, 0.5 - 0.3775406687981454];
        let expected_a = 0.5 - 0.5305766310176361;
        for i in 0..2 {
            assert!((next.weights[[i, 0]] - expected_w[i]).abs() < 1e-12, "{}", next.weights);
            assert!((next.visible_bias[i] - expected_b[i]).abs() < 1e-12);
        }
        assert!((next.hidden_bias[0] - expected_a).abs() < 1e-12);
    }
}
