//! Central-difference gradient oracle.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;

use super::tensor::Tensor;

/// One loss evaluation: the scalar loss, optionally analytic gradients for
/// every parameter, and the ReLU sign pattern of the forward pass.
pub struct EvalOutput {
    pub loss: f64,
    pub grads: Option<BTreeMap<String, Tensor>>,
    pub relu_signs: Vec<bool>,
}

#[derive(Clone, Copy, Debug)]
pub struct GradcheckReport {
    pub max_rel_err: f64,
    pub checked: usize,
    /// Coordinates excluded because the +-h perturbation flipped a ReLU,
    /// where the central difference does not estimate the subgradient.
    pub skipped: usize,
}

/// Compare analytic gradients against (L(x+h) - L(x-h)) / 2h on a random
/// sample of parameter coordinates (all of them when there are fewer than
/// `max_coords`). Relative error uses max(|analytic|, |numeric|, 1e-8) as
/// the denominator.
pub fn gradcheck<F>(
    params: &BTreeMap<String, Tensor>,
    mut eval: F,
    h: f64,
    max_coords: usize,
    rng: &mut ChaCha8Rng,
) -> GradcheckReport
where
    F: FnMut(&BTreeMap<String, Tensor>, bool) -> EvalOutput,
{
    let base = eval(params, true);
    let analytic = base
        .grads
        .expect("gradcheck: eval must return gradients when requested");

    let mut coords: Vec<(String, usize)> = params
        .iter()
        .flat_map(|(name, t)| (0..t.len()).map(move |i| (name.clone(), i)))
        .collect();
    if coords.len() > max_coords {
        let (sampled, _) = coords.partial_shuffle(rng, max_coords);
        coords = sampled.to_vec();
    }

    let mut work = params.clone();
    let mut max_rel_err = 0.0f64;
    let mut checked = 0usize;
    let mut skipped = 0usize;

    for (name, idx) in coords {
        let original = work[&name].data()[idx];
        work.get_mut(&name).unwrap().data_mut()[idx] = original + h;
        let plus = eval(&work, false);
        work.get_mut(&name).unwrap().data_mut()[idx] = original - h;
        let minus = eval(&work, false);
        work.get_mut(&name).unwrap().data_mut()[idx] = original;

        if plus.relu_signs != minus.relu_signs {
            skipped += 1;
            continue;
        }
        let numeric = (plus.loss - minus.loss) / (2.0 * h);
        let a = analytic[&name].data()[idx];
        let denom = a.abs().max(numeric.abs()).max(1e-8);
        let rel = (a - numeric).abs() / denom;
        if rel > max_rel_err {
            max_rel_err = rel;
        }
        checked += 1;
    }

    GradcheckReport {
        max_rel_err,
        checked,
        skipped,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Tape;
    use crate::seed::derive_rng;

    // loss = sum(relu(x))^2 exercises both the analytic path and the
    // kink detector.
    fn eval_quadratic_relu(params: &BTreeMap<String, Tensor>, want_grads: bool) -> EvalOutput {
        let mut tape = Tape::new();
        let x = tape.leaf(params["x"].clone());
        let r = tape.relu(x);
        let s = tape.sum(r);
        let s2 = tape.mul(s, s);
        let loss = tape.sum(s2);
        let relu_signs = tape.relu_signature();
        let grads = want_grads.then(|| {
            let g = tape.backward(loss);
            let mut map = BTreeMap::new();
            map.insert("x".to_string(), g.get_or_zeros(x, params["x"].shape()));
            map
        });
        EvalOutput {
            loss: tape.value(loss).item(),
            grads,
            relu_signs,
        }
    }

    #[test]
    fn matches_smooth_region() {
        let mut params = BTreeMap::new();
        params.insert("x".to_string(), Tensor::vector(vec![1.0, 2.0, -3.0]));
        let mut rng = derive_rng(0, &[]);
        let report = gradcheck(&params, eval_quadratic_relu, 1e-5, 100, &mut rng);
        assert!(report.max_rel_err < 1e-7, "err {}", report.max_rel_err);
        assert_eq!(report.checked, 3);
        assert_eq!(report.skipped, 0);
    }

    #[test]
    fn skips_kink_coordinates() {
        let mut params = BTreeMap::new();
        // 5e-6 < h = 1e-5, so perturbing this coordinate crosses zero.
        params.insert("x".to_string(), Tensor::vector(vec![5e-6, 2.0]));
        let mut rng = derive_rng(0, &[]);
        let report = gradcheck(&params, eval_quadratic_relu, 1e-5, 100, &mut rng);
        assert_eq!(report.skipped, 1);
        assert_eq!(report.checked, 1);
        assert!(report.max_rel_err < 1e-7);
    }
}
