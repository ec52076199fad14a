//! Central finite-difference gradient checks in wide precision.
//!
//! Only forward evaluations are used for the numeric side, so the check is
//! independent of the backward kernels it validates.

use crate::error::Result;
use crate::param::ParamSet;
use crate::tape::{Tape, Var};

#[derive(Clone, Debug)]
pub struct GradCheck {
    /// Per parameter: `||analytic - numeric|| / max(||analytic|| + ||numeric||, 1e-12)`.
    pub relative_errors: Vec<(String, f64)>,
}

impl GradCheck {
    pub fn max_relative_error(&self) -> f64 {
        self.relative_errors.iter().map(|(_, e)| *e).fold(0.0, f64::max)
    }
}

/// Compares tape gradients of the scalar `f(params)` against central
/// differences with step `h`.
pub fn check<F>(params: &ParamSet<f64>, h: f64, f: F) -> Result<GradCheck>
where
    F: for<'t> Fn(&'t Tape<f64>, &[Var<'t, f64>]) -> Result<Var<'t, f64>>,
{
    let tape = Tape::new();
    let bound = params.bind(&tape);
    let loss = f(&tape, &bound)?;
    let grads = tape.backward(loss)?;

    let eval = |ps: &ParamSet<f64>| -> Result<f64> {
        let tape = Tape::new();
        let bound = ps.bind(&tape);
        Ok(f(&tape, &bound)?.item())
    };

    let mut work = params.clone();
    let mut relative_errors = Vec::with_capacity(params.len());
    for (i, &v) in bound.iter().enumerate() {
        let analytic = grads.get_or_zeros(v);
        let mut diff2 = 0.0;
        let mut norm_a = 0.0;
        let mut norm_n = 0.0;
        for j in 0..params.value(i).len() {
            let orig = params.value(i).data()[j];
            work.get_mut(i).value.data_mut()[j] = orig + h;
            let plus = eval(&work)?;
            work.get_mut(i).value.data_mut()[j] = orig - h;
            let minus = eval(&work)?;
            work.get_mut(i).value.data_mut()[j] = orig;
            let numeric = (plus - minus) / (2.0 * h);
            let a = analytic.data()[j];
            diff2 += (a - numeric).powi(2);
            norm_a += a * a;
            norm_n += numeric * numeric;
        }
        let rel = diff2.sqrt() / (norm_a.sqrt() + norm_n.sqrt()).max(1e-12);
        relative_errors.push((params.get(i).name.clone(), rel));
    }
    Ok(GradCheck { relative_errors })
}
