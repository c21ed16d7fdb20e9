use super::{KanNetwork, NetworkCache};
use crate::optim::{Adam, AdamConfig};
use crate::par::Exec;
use crate::{Error, Result};

const CHUNK: usize = 64;

/// Root-mean-square error of `net` over a data set.
pub fn rmse(net: &KanNetwork, inputs: &[Vec<f64>], targets: &[Vec<f64>]) -> Result<f64> {
    if inputs.is_empty() || inputs.len() != targets.len() {
        return Err(Error::EmptyData);
    }
    let mut sse = 0.0;
    let mut n = 0usize;
    for (x, t) in inputs.iter().zip(targets) {
        let y = net.forward(x)?;
        sse += y.iter().zip(t).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
        n += t.len();
    }
    Ok((sse / n as f64).sqrt())
}

/// Mean squared error over all outputs and its parameter gradient.
pub fn mse_gradient(net: &KanNetwork, inputs: &[Vec<f64>], targets: &[Vec<f64>], exec: Exec) -> Result<(f64, KanNetwork)> {
    if inputs.is_empty() || inputs.len() != targets.len() {
        return Err(Error::EmptyData);
    }
    let idx: Vec<usize> = (0..inputs.len()).collect();
    let scale = 1.0 / (inputs.len() * net.n_out()) as f64;
    let parts = exec.map_chunks(&idx, CHUNK, |chunk| -> Result<(f64, KanNetwork)> {
        let mut grads = net.zeros_like();
        let mut cache = NetworkCache::default();
        let mut loss = 0.0;
        let mut g = vec![0.0; net.n_out()];
        for &i in chunk {
            net.forward_cached(&inputs[i], &mut cache)?;
            for ((gq, y), t) in g.iter_mut().zip(cache.output()).zip(&targets[i]) {
                let r = y - t;
                loss += scale * r * r;
                *gq = 2.0 * scale * r;
            }
            net.backward(&mut cache, &g, &mut grads, None);
        }
        Ok((loss, grads))
    });
    let mut iter = parts.into_iter();
    let (mut loss, mut grads) = iter.next().ok_or(Error::EmptyData)??;
    for p in iter {
        let (l, g) = p?;
        loss += l;
        crate::optim::Parameters::accumulate(&mut grads, &g);
    }
    Ok((loss, grads))
}

/// Full-batch Adam on the mean squared error. Returns the loss before each
/// step.
pub fn fit_mse(
    net: &mut KanNetwork,
    inputs: &[Vec<f64>],
    targets: &[Vec<f64>],
    steps: usize,
    adam: AdamConfig,
    exec: Exec,
) -> Result<Vec<f64>> {
    let mut opt = Adam::new(adam);
    let mut losses = Vec::with_capacity(steps);
    for _ in 0..steps {
        let (loss, grads) = mse_gradient(net, inputs, targets, exec)?;
        opt.step(net, &grads);
        losses.push(loss);
    }
    Ok(losses)
}
