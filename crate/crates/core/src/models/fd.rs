//! Central finite differences, used as an independent gradient oracle.

use super::{Batch, Objective, ParameterVector};
use crate::error::Result;
use crate::numeric::Vector;

/// `(f(w + h e_i) - f(w - h e_i)) / 2h` for every coordinate `i`.
pub fn finite_diff<F>(f: F, w: &Vector, h: f64) -> Vector
where
    F: Fn(&Vector) -> f64,
{
    assert!(h > 0.0, "step must be positive");
    let mut probe = w.clone();
    (0..w.len())
        .map(|i| {
            let orig = probe[i];
            probe[i] = orig + h;
            let up = f(&probe);
            probe[i] = orig - h;
            let down = f(&probe);
            probe[i] = orig;
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Finite-difference gradient of a model's batch loss.
pub fn finite_diff_grad<O: Objective + ?Sized>(
    model: &O,
    params: &ParameterVector,
    batch: &Batch,
    h: f64,
) -> Result<ParameterVector> {
    // Surface shape errors before probing.
    model.loss(params, batch)?;
    let layout = params.layout().to_vec();
    let grad = finite_diff(
        |w| {
            let p = ParameterVector::new(layout.clone(), w.clone()).expect("layout preserved");
            model.loss(&p, batch).expect("validated above")
        },
        params.values(),
        h,
    );
    ParameterVector::new(layout, grad)
}
