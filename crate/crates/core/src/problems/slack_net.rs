use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, Result};
use crate::geometry::{Block, FeasibleSet};
use crate::linalg::Jacobian;
use crate::oracle::{Problem, SampleToken};
use crate::scalar::Scalar;

use super::{sign0, ProblemKind, ProblemRecipe};

/// Labeled points.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T> {
    pub inputs: Vec<Vec<T>>,
    pub labels: Vec<usize>,
}

impl<T> Dataset<T> {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlackNetOptions {
    /// Input width, hidden widths, number of classes.
    pub widths: Vec<usize>,
    /// Per-layer `ℓ₁` radius `rᵢ`.
    pub radius: f64,
    pub train_size: usize,
    pub test_size: usize,
    pub batch_size: usize,
    pub dataset_seed: u64,
    pub init_seed: u64,
    /// Standard deviation of each blob around its class center.
    pub spread: f64,
}

impl Default for SlackNetOptions {
    fn default() -> Self {
        Self {
            widths: vec![2, 8, 2],
            radius: 1.0,
            train_size: 256,
            test_size: 128,
            batch_size: 32,
            dataset_seed: 0,
            init_seed: 1,
            spread: 1.0,
        }
    }
}

/// ReLU network with mean absolute-deviation loss against one-hot labels,
/// written with one slack per layer:
/// `min loss(x)  s.t. ‖xᵢ‖₁ + sᵢ - rᵢ = 0,  x ∈ [-1,1]ⁿ, s ≥ 0`.
///
/// Parameters are laid out layer by layer (weights row-major, then biases),
/// followed by the `L` slacks. The ReLU derivative at 0 and `sign(0)` are
/// both taken as 0.
#[derive(Debug, Clone)]
pub struct SlackL1Net<T: Scalar> {
    widths: Vec<usize>,
    /// `(offset, length)` of each layer's parameters.
    layers: Vec<(usize, usize)>,
    n_params: usize,
    radius: T,
    train: Dataset<T>,
    test: Dataset<T>,
    batch_size: usize,
    set: FeasibleSet<T>,
}

impl<T: Scalar> SlackL1Net<T> {
    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn num_weights(&self) -> usize {
        self.n_params
    }

    pub fn train_set(&self) -> &Dataset<T> {
        &self.train
    }

    pub fn test_set(&self) -> &Dataset<T> {
        &self.test
    }

    pub fn batch_size(&self) -> usize {
        self.batch_size
    }

    /// Minibatch steps per pass over the training set.
    pub fn steps_per_epoch(&self) -> usize {
        self.train.len().div_ceil(self.batch_size)
    }

    /// Pre-activations of every layer for one input.
    fn forward(&self, x: &[T], input: &[T]) -> Vec<Vec<T>> {
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut h: Vec<T> = input.to_vec();
        for (l, &(off, _)) in self.layers.iter().enumerate() {
            let (fan_in, fan_out) = (self.widths[l], self.widths[l + 1]);
            let w = &x[off..off + fan_in * fan_out];
            let b = &x[off + fan_in * fan_out..off + fan_in * fan_out + fan_out];
            let z: Vec<T> = (0..fan_out)
                .map(|o| {
                    w[o * fan_in..(o + 1) * fan_in]
                        .iter()
                        .zip(&h)
                        .map(|(&a, &v)| a * v)
                        .sum::<T>()
                        + b[o]
                })
                .collect();
            h = z.iter().map(|&v| v.max(T::zero())).collect();
            pre.push(z);
        }
        pre
    }

    fn sample_loss(&self, x: &[T], input: &[T], label: usize) -> T {
        let pre = self.forward(x, input);
        let out = pre.last().expect("at least one layer");
        out.iter()
            .enumerate()
            .map(|(c, &z)| (z - one_hot(c, label)).abs())
            .sum()
    }

    fn loss_over(&self, x: &[T], data: &Dataset<T>, idx: impl Iterator<Item = usize>) -> T {
        let mut total = T::zero();
        let mut count = 0usize;
        for i in idx {
            total = total + self.sample_loss(x, &data.inputs[i], data.labels[i]);
            count += 1;
        }
        total / T::from_usize(count.max(1)).unwrap()
    }

    /// Subgradient selection of the mean loss over `idx`; slack entries are zero.
    fn loss_subgradient(&self, x: &[T], idx: &[usize]) -> Vec<T> {
        let mut grad = vec![T::zero(); x.len()];
        let inv = T::one() / T::from_usize(idx.len().max(1)).unwrap();
        for &i in idx {
            let input = &self.train.inputs[i];
            let pre = self.forward(x, input);
            let last = pre.len() - 1;
            let mut delta: Vec<T> = pre[last]
                .iter()
                .enumerate()
                .map(|(c, &z)| sign0(z - one_hot(c, self.train.labels[i])) * inv)
                .collect();
            for l in (0..=last).rev() {
                let (off, _) = self.layers[l];
                let (fan_in, fan_out) = (self.widths[l], self.widths[l + 1]);
                let h_prev: Vec<T> = if l == 0 {
                    input.clone()
                } else {
                    pre[l - 1].iter().map(|&v| v.max(T::zero())).collect()
                };
                for o in 0..fan_out {
                    for j in 0..fan_in {
                        grad[off + o * fan_in + j] = grad[off + o * fan_in + j] + delta[o] * h_prev[j];
                    }
                    let bi = off + fan_in * fan_out + o;
                    grad[bi] = grad[bi] + delta[o];
                }
                if l > 0 {
                    delta = (0..fan_in)
                        .map(|j| {
                            if pre[l - 1][j] > T::zero() {
                                (0..fan_out).map(|o| x[off + o * fan_in + j] * delta[o]).sum()
                            } else {
                                T::zero()
                            }
                        })
                        .collect();
                }
            }
        }
        grad
    }

    /// Mean loss on the training set.
    pub fn train_loss(&self, x: &[T]) -> T {
        self.loss_over(x, &self.train, 0..self.train.len())
    }

    /// Fraction of held-out points whose largest output is the true class.
    pub fn test_accuracy(&self, x: &[T]) -> f64 {
        if self.test.is_empty() {
            return 0.0;
        }
        let hits = (0..self.test.len())
            .filter(|&i| {
                let pre = self.forward(x, &self.test.inputs[i]);
                let out = pre.last().expect("at least one layer");
                let mut best = 0;
                for c in 1..out.len() {
                    if out[c] > out[best] {
                        best = c;
                    }
                }
                best == self.test.labels[i]
            })
            .count();
        hits as f64 / self.test.len() as f64
    }
}

fn one_hot<T: Scalar>(c: usize, label: usize) -> T {
    if c == label {
        T::one()
    } else {
        T::zero()
    }
}

impl<T: Scalar> Problem<T> for SlackL1Net<T> {
    fn dim(&self) -> usize {
        self.n_params + self.layers.len()
    }

    fn num_constraints(&self) -> usize {
        self.layers.len()
    }

    fn feasible_set(&self) -> &FeasibleSet<T> {
        &self.set
    }

    fn objective(&self, x: &[T]) -> T {
        self.train_loss(x)
    }

    fn objective_subgradient(&self, x: &[T]) -> Vec<T> {
        let all: Vec<usize> = (0..self.train.len()).collect();
        self.loss_subgradient(x, &all)
    }

    /// Minibatch of `batch_size` training points drawn with replacement.
    fn sampled_objective_subgradient(&self, x: &[T], token: SampleToken) -> Vec<T> {
        let mut rng = token.rng();
        let idx: Vec<usize> = (0..self.batch_size)
            .map(|_| rng.random_range(0..self.train.len()))
            .collect();
        self.loss_subgradient(x, &idx)
    }

    fn constraints(&self, x: &[T]) -> Vec<T> {
        self.layers
            .iter()
            .enumerate()
            .map(|(l, &(off, len))| {
                x[off..off + len].iter().map(|v| v.abs()).sum::<T>() + x[self.n_params + l] - self.radius
            })
            .collect()
    }

    fn constraint_jacobian(&self, x: &[T]) -> Jacobian<T> {
        let mut j = Jacobian::zeros(self.dim(), self.layers.len());
        for (l, &(off, len)) in self.layers.iter().enumerate() {
            for (i, &xi) in x.iter().enumerate().skip(off).take(len) {
                j.set(i, l, sign0(xi));
            }
            j.set(self.n_params + l, l, T::one());
        }
        j
    }
}

fn blobs(rng: &mut ChaCha8Rng, size: usize, dim: usize, classes: usize, spread: f64) -> Dataset<f64> {
    let centers: Vec<Vec<f64>> = (0..classes)
        .map(|k| {
            let angle = 2.0 * std::f64::consts::PI * k as f64 / classes as f64;
            (0..dim)
                .map(|d| match d {
                    0 => 1.5 * angle.cos(),
                    1 => 1.5 * angle.sin(),
                    _ => 0.0,
                })
                .collect()
        })
        .collect();
    let mut inputs = Vec::with_capacity(size);
    let mut labels = Vec::with_capacity(size);
    for i in 0..size {
        let k = i % classes;
        let noise: Vec<f64> = (0..dim)
            .map(|_| rng.sample::<f64, _>(StandardNormal) * spread)
            .collect();
        inputs.push(centers[k].iter().zip(noise).map(|(c, e)| c + e).collect());
        labels.push(k);
    }
    Dataset { inputs, labels }
}

fn cast_data<T: Scalar>(d: Dataset<f64>) -> Dataset<T> {
    Dataset {
        inputs: d
            .inputs
            .into_iter()
            .map(|v| v.into_iter().map(T::lit).collect())
            .collect(),
        labels: d.labels,
    }
}

/// Default-sized instance: 256 training and 128 held-out points from
/// Gaussian blobs, minibatches of 32.
pub fn make_slack_l1_net<T: Scalar>(
    widths: &[usize],
    radius: T,
    dataset_seed: u64,
) -> Result<ProblemRecipe<T, SlackL1Net<T>>> {
    make_slack_l1_net_with(&SlackNetOptions {
        widths: widths.to_vec(),
        radius: radius.as_f64(),
        dataset_seed,
        init_seed: dataset_seed.wrapping_add(1),
        ..SlackNetOptions::default()
    })
}

/// Instance with weights initialized uniformly in `±1/√fan_in`, zero biases
/// and zero slacks.
pub fn make_slack_l1_net_with<T: Scalar>(opts: &SlackNetOptions) -> Result<ProblemRecipe<T, SlackL1Net<T>>> {
    let w = &opts.widths;
    if w.len() < 2 || w.contains(&0) || w[w.len() - 1] < 2 {
        return Err(invalid(
            "slack_l1_net needs at least two positive widths and >= 2 classes",
        ));
    }
    if !(opts.radius > 0.0) || opts.train_size == 0 || opts.batch_size == 0 || !(opts.spread > 0.0) {
        return Err(invalid(
            "slack_l1_net needs radius > 0, train_size >= 1, batch_size >= 1, spread > 0",
        ));
    }
    let mut layers = Vec::with_capacity(w.len() - 1);
    let mut off = 0;
    for l in 0..w.len() - 1 {
        let len = w[l] * w[l + 1] + w[l + 1];
        layers.push((off, len));
        off += len;
    }
    let n_params = off;
    let n_layers = layers.len();
    let classes = w[w.len() - 1];

    let mut data_rng = ChaCha8Rng::seed_from_u64(opts.dataset_seed);
    let train = cast_data(blobs(&mut data_rng, opts.train_size, w[0], classes, opts.spread));
    let test = cast_data(blobs(&mut data_rng, opts.test_size, w[0], classes, opts.spread));

    let mut init_rng = ChaCha8Rng::seed_from_u64(opts.init_seed);
    let mut x0 = vec![T::zero(); n_params + n_layers];
    for (l, &(off, _)) in layers.iter().enumerate() {
        let bound = 1.0 / (w[l] as f64).sqrt();
        for v in &mut x0[off..off + w[l] * w[l + 1]] {
            *v = T::lit(init_rng.random_range(-bound..=bound));
        }
    }

    let set = FeasibleSet::product(vec![
        Block {
            dim: n_params,
            set: FeasibleSet::cube(n_params, -T::one(), T::one())?,
        },
        Block {
            dim: n_layers,
            set: FeasibleSet::nonnegative_orthant(),
        },
    ])?;
    Ok(ProblemRecipe {
        kind: ProblemKind::SlackL1Net,
        seed: opts.dataset_seed,
        problem: SlackL1Net {
            widths: w.clone(),
            layers,
            n_params,
            radius: T::lit(opts.radius),
            train,
            test,
            batch_size: opts.batch_size,
            set,
        },
        initial_point: x0,
        oracle: None,
    })
}
