//! One hidden tanh layer with a softmax output.
//!
//! Layout: `hidden.weight` (dim × hidden), `hidden.bias` (hidden),
//! `output.weight` (hidden × classes), `output.bias` (classes).

use super::{log_sum_exp, softmax_in_place, Batch};

struct Views<'a> {
    w1: &'a [f64],
    b1: &'a [f64],
    w2: &'a [f64],
    b2: &'a [f64],
}

fn split(w: &[f64], dim: usize, hidden: usize, classes: usize) -> Views<'_> {
    let (w1, rest) = w.split_at(dim * hidden);
    let (b1, rest) = rest.split_at(hidden);
    let (w2, b2) = rest.split_at(hidden * classes);
    Views { w1, b1, w2, b2 }
}

/// Returns (hidden activations, output logits).
pub(super) fn forward(w: &[f64], x: &[f64], dim: usize, hidden: usize, classes: usize) -> (Vec<f64>, Vec<f64>) {
    let p = split(w, dim, hidden, classes);
    let mut h = p.b1.to_vec();
    for (j, &xj) in x.iter().enumerate() {
        for (hk, &wjk) in h.iter_mut().zip(&p.w1[j * hidden..(j + 1) * hidden]) {
            *hk += xj * wjk;
        }
    }
    for hk in &mut h {
        *hk = hk.tanh();
    }
    let mut z = p.b2.to_vec();
    for (k, &hk) in h.iter().enumerate() {
        for (zc, &wkc) in z.iter_mut().zip(&p.w2[k * classes..(k + 1) * classes]) {
            *zc += hk * wkc;
        }
    }
    (h, z)
}

pub(super) fn loss_grad(w: &[f64], batch: &Batch, dim: usize, hidden: usize, classes: usize) -> (f64, Vec<f64>) {
    let p = split(w, dim, hidden, classes);
    let mut grad = vec![0.0; w.len()];
    let scale = 1.0 / batch.len() as f64;
    let mut loss = 0.0;
    let mut dh = vec![0.0; hidden];
    for (x, &y) in batch.rows().zip(batch.labels()) {
        let (h, mut z) = forward(w, x, dim, hidden, classes);
        loss += log_sum_exp(&z) - z[y];
        softmax_in_place(&mut z);
        z[y] -= 1.0;

        let (g_w1, rest) = grad.split_at_mut(dim * hidden);
        let (g_b1, rest) = rest.split_at_mut(hidden);
        let (g_w2, g_b2) = rest.split_at_mut(hidden * classes);

        for (k, &hk) in h.iter().enumerate() {
            let w2_row = &p.w2[k * classes..(k + 1) * classes];
            let mut back = 0.0;
            for ((g, &dz), &wkc) in g_w2[k * classes..(k + 1) * classes].iter_mut().zip(&z).zip(w2_row) {
                *g += scale * hk * dz;
                back += wkc * dz;
            }
            dh[k] = back * (1.0 - hk * hk);
        }
        for (g, &dz) in g_b2.iter_mut().zip(&z) {
            *g += scale * dz;
        }
        for (j, &xj) in x.iter().enumerate() {
            for (g, &da) in g_w1[j * hidden..(j + 1) * hidden].iter_mut().zip(&dh) {
                *g += scale * xj * da;
            }
        }
        for (g, &da) in g_b1.iter_mut().zip(&dh) {
            *g += scale * da;
        }
    }
    (loss * scale, grad)
}
