use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{CoocMatrix, EmbeddingError, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GloveParams {
    pub dim: usize,
    pub iters: usize,
    pub lr: f64,
    pub x_max: f64,
    pub alpha: f64,
    pub seed: u64,
}

impl Default for GloveParams {
    fn default() -> Self {
        Self {
            dim: 100,
            iters: 50,
            lr: 0.05,
            x_max: 100.0,
            alpha: 0.75,
            seed: 0,
        }
    }
}

/// `(x / x_max)^alpha`, capped at 1.
pub fn glove_weight(x: f64, x_max: f64, alpha: f64) -> f64 {
    if x >= x_max {
        1.0
    } else {
        (x / x_max).powf(alpha)
    }
}

/// Row-major parameter blocks: `w` and `wc` are `V x dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingModel {
    pub dim: usize,
    pub vocab_size: usize,
    pub w: Vec<f64>,
    pub wc: Vec<f64>,
    pub b: Vec<f64>,
    pub bc: Vec<f64>,
    pub params: GloveParams,
    /// Loss before training followed by the loss after each pass.
    pub loss_trace: Vec<f64>,
}

/// Full-batch gradient of the loss, same layout as the model.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub w: Vec<f64>,
    pub wc: Vec<f64>,
    pub b: Vec<f64>,
    pub bc: Vec<f64>,
}

impl EmbeddingModel {
    /// Seeded uniform initialisation in `[-0.5/dim, 0.5/dim]`.
    pub fn init(vocab_size: usize, params: GloveParams, rng: &mut ChaCha8Rng) -> Self {
        let r = 0.5 / params.dim as f64;
        let mut draw = |n: usize| -> Vec<f64> { (0..n).map(|_| rng.gen_range(-r..=r)).collect() };
        let w = draw(vocab_size * params.dim);
        let wc = draw(vocab_size * params.dim);
        let b = draw(vocab_size);
        let bc = draw(vocab_size);
        Self {
            dim: params.dim,
            vocab_size,
            w,
            wc,
            b,
            bc,
            params,
            loss_trace: Vec::new(),
        }
    }

    fn residual(&self, i: usize, j: usize, x: f64) -> f64 {
        let d = self.dim;
        let dot: f64 = self.w[i * d..(i + 1) * d]
            .iter()
            .zip(&self.wc[j * d..(j + 1) * d])
            .map(|(a, b)| a * b)
            .sum();
        dot + self.b[i] + self.bc[j] - x.ln()
    }

    /// `J = sum f(X_ij) (w_i . wc_j + b_i + bc_j - ln X_ij)^2`.
    pub fn loss(&self, entries: &[(u32, u32, f64)]) -> f64 {
        let p = &self.params;
        entries
            .iter()
            .map(|&(i, j, x)| {
                glove_weight(x, p.x_max, p.alpha) * self.residual(i as usize, j as usize, x).powi(2)
            })
            .sum()
    }

    pub fn gradients(&self, entries: &[(u32, u32, f64)]) -> Gradients {
        let (d, p) = (self.dim, &self.params);
        let mut g = Gradients {
            w: vec![0.0; self.w.len()],
            wc: vec![0.0; self.wc.len()],
            b: vec![0.0; self.b.len()],
            bc: vec![0.0; self.bc.len()],
        };
        for &(i, j, x) in entries {
            let (i, j) = (i as usize, j as usize);
            let s = 2.0 * glove_weight(x, p.x_max, p.alpha) * self.residual(i, j, x);
            for k in 0..d {
                g.w[i * d + k] += s * self.wc[j * d + k];
                g.wc[j * d + k] += s * self.w[i * d + k];
            }
            g.b[i] += s;
            g.bc[j] += s;
        }
        g
    }

    /// Word vector `w_i + wc_i`.
    pub fn combined(&self, i: usize) -> Vec<f64> {
        let d = self.dim;
        (0..d)
            .map(|k| self.w[i * d + k] + self.wc[i * d + k])
            .collect()
    }
}

/// AdaGrad over the nonzero entries, one seeded shuffled pass per iteration.
pub fn train_glove(cooc: &CoocMatrix, params: GloveParams) -> Result<EmbeddingModel> {
    if params.dim == 0 {
        return Err(EmbeddingError::InvalidParam(
            "dim must be at least 1".into(),
        ));
    }
    if !(params.lr > 0.0 && params.x_max > 0.0 && params.alpha > 0.0) {
        return Err(EmbeddingError::InvalidParam(
            "lr, x_max and alpha must be positive".into(),
        ));
    }
    let entries = cooc.sorted_entries();
    if entries.is_empty() {
        return Err(EmbeddingError::EmptyCooccurrence);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut m = EmbeddingModel::init(cooc.vocab_size, params, &mut rng);
    let d = m.dim;
    let mut gsq_w = vec![1.0f64; m.w.len()];
    let mut gsq_wc = vec![1.0f64; m.wc.len()];
    let mut gsq_b = vec![1.0f64; m.b.len()];
    let mut gsq_bc = vec![1.0f64; m.bc.len()];

    let check = |iteration: usize, loss: f64| {
        if loss.is_finite() {
            Ok(loss)
        } else {
            Err(EmbeddingError::NonFinite { iteration, loss })
        }
    };
    m.loss_trace.push(check(0, m.loss(&entries))?);

    let mut order: Vec<usize> = (0..entries.len()).collect();
    let mut gw = vec![0.0; d];
    let mut gwc = vec![0.0; d];
    for it in 1..=params.iters {
        order.shuffle(&mut rng);
        for &e in &order {
            let (i, j, x) = entries[e];
            let (i, j) = (i as usize, j as usize);
            let s = 2.0 * glove_weight(x, params.x_max, params.alpha) * m.residual(i, j, x);
            for k in 0..d {
                gw[k] = s * m.wc[j * d + k];
                gwc[k] = s * m.w[i * d + k];
            }
            for k in 0..d {
                let (a, c) = (i * d + k, j * d + k);
                m.w[a] -= params.lr * gw[k] / gsq_w[a].sqrt();
                m.wc[c] -= params.lr * gwc[k] / gsq_wc[c].sqrt();
                gsq_w[a] += gw[k] * gw[k];
                gsq_wc[c] += gwc[k] * gwc[k];
            }
            m.b[i] -= params.lr * s / gsq_b[i].sqrt();
            m.bc[j] -= params.lr * s / gsq_bc[j].sqrt();
            gsq_b[i] += s * s;
            gsq_bc[j] += s * s;
        }
        let loss = m.loss(&entries);
        m.loss_trace.push(check(it, loss)?);
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weighting() {
        assert_eq!(glove_weight(100.0, 100.0, 0.75), 1.0);
        assert_eq!(glove_weight(500.0, 100.0, 0.75), 1.0);
        assert!((glove_weight(50.0, 100.0, 0.75) - 0.5f64.powf(0.75)).abs() < 1e-15);
        assert!((glove_weight(50.0, 100.0, 0.75) - 0.5946).abs() < 1e-4);
    }

    fn single_pair() -> CoocMatrix {
        let mut c = CoocMatrix::new(1, 2);
        c.add(0, 1, std::f64::consts::E);
        c
    }

    #[test]
    fn single_entry_converges() {
        let p = GloveParams {
            dim: 2,
            iters: 3000,
            lr: 0.5,
            ..GloveParams::default()
        };
        let m = train_glove(&single_pair(), p).unwrap();
        let (first, last) = (m.loss_trace[0], *m.loss_trace.last().unwrap());
        assert!(last < 1e-4 * first, "{first} -> {last}");
    }

    #[test]
    fn same_seed_bit_identical() {
        let p = GloveParams {
            dim: 4,
            iters: 5,
            ..GloveParams::default()
        };
        let a = train_glove(&single_pair(), p).unwrap();
        let b = train_glove(&single_pair(), p).unwrap();
        assert_eq!(a, b);
        let c = train_glove(&single_pair(), GloveParams { seed: 1, ..p }).unwrap();
        assert_ne!(a.w, c.w);
    }

    #[test]
    fn invalid_inputs() {
        let p = GloveParams::default();
        assert!(matches!(
            train_glove(&CoocMatrix::new(5, 3), p),
            Err(EmbeddingError::EmptyCooccurrence)
        ));
        assert!(train_glove(&single_pair(), GloveParams { dim: 0, ..p }).is_err());
    }

    #[test]
    fn divergence_reported() {
        let p = GloveParams {
            dim: 2,
            iters: 50,
            lr: 1e300,
            ..GloveParams::default()
        };
        let mut c = single_pair();
        c.add(1, 0, 1e-300);
        assert!(matches!(
            train_glove(&c, p),
            Err(EmbeddingError::NonFinite { .. })
        ));
    }
}
