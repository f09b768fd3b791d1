//! Multinomial logistic regression. Layout: `weight` (dim × classes) then `bias` (classes).

use super::{log_sum_exp, softmax_in_place, Batch};

pub(super) fn logits(w: &[f64], x: &[f64], dim: usize, classes: usize) -> Vec<f64> {
    let (weight, bias) = w.split_at(dim * classes);
    let mut z = bias.to_vec();
    for (j, &xj) in x.iter().enumerate() {
        let row = &weight[j * classes..(j + 1) * classes];
        for (zc, &wjc) in z.iter_mut().zip(row) {
            *zc += xj * wjc;
        }
    }
    z
}

pub(super) fn loss_grad(w: &[f64], batch: &Batch, dim: usize, classes: usize) -> (f64, Vec<f64>) {
    let mut grad = vec![0.0; w.len()];
    let mut loss = 0.0;
    let scale = 1.0 / batch.len() as f64;
    for (x, &y) in batch.rows().zip(batch.labels()) {
        let mut z = logits(w, x, dim, classes);
        loss += log_sum_exp(&z) - z[y];
        softmax_in_place(&mut z);
        z[y] -= 1.0;
        let (gw, gb) = grad.split_at_mut(dim * classes);
        for (j, &xj) in x.iter().enumerate() {
            for (g, &dz) in gw[j * classes..(j + 1) * classes].iter_mut().zip(&z) {
                *g += scale * xj * dz;
            }
        }
        for (g, &dz) in gb.iter_mut().zip(&z) {
            *g += scale * dz;
        }
    }
    (loss * scale, grad)
}
