use super::lstm::{backward, forward_tape, Tape};
use super::params::{LstmParams, Tensor};
use super::train::sample_weight;

/// Central-difference step used by [`gradient_check`].
pub const DEFAULT_STEP: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq)]
pub struct TensorError {
    pub tensor: Tensor,
    pub checked: usize,
    pub max_relative_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub per_tensor: Vec<TensorError>,
    pub max_relative_error: f64,
    pub tolerance: f64,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.max_relative_error < self.tolerance
    }
}

/// `|a - n| / max(|a|, |n|, 1e-6)`; the floor keeps tiny gradients from
/// inflating the ratio.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    let scale = analytic.abs().max(numeric.abs()).max(1e-6);
    (analytic - numeric).abs() / scale
}

fn sample_loss(params: &LstmParams, matrix: &[[f64; 10]], label: bool, w: f64, tape: &mut Tape) -> f64 {
    let s = forward_tape(params, matrix, tape);
    let e = s - f64::from(u8::from(label));
    sample_weight(label, w) * e * e
}

/// Analytic gradient of the single-sample weighted loss.
pub fn analytic_gradient(params: &LstmParams, matrix: &[[f64; 10]], label: bool, malicious_weight: f64) -> Vec<f64> {
    let mut tape = Tape::default();
    let s = forward_tape(params, matrix, &mut tape);
    let e = s - f64::from(u8::from(label));
    let mut grad = vec![0.0; params.len()];
    backward(params, &mut tape, 2.0 * sample_weight(label, malicious_weight) * e, &mut grad);
    grad
}

/// Compares backpropagated gradients with central differences at step `h`
/// for every parameter of every tensor.
pub fn gradient_check_with_step(
    params: &LstmParams,
    matrix: &[[f64; 10]],
    label: bool,
    malicious_weight: f64,
    tolerance: f64,
    h: f64,
) -> GradCheckReport {
    let analytic = analytic_gradient(params, matrix, label, malicious_weight);
    let mut probe = params.clone();
    let mut tape = Tape::default();
    let mut per_tensor = Vec::with_capacity(Tensor::ALL.len());
    for tensor in Tensor::ALL {
        let range = params.range(tensor);
        let mut worst: f64 = 0.0;
        for k in range.clone() {
            let orig = probe.as_slice()[k];
            probe.as_mut_slice()[k] = orig + h;
            let up = sample_loss(&probe, matrix, label, malicious_weight, &mut tape);
            probe.as_mut_slice()[k] = orig - h;
            let down = sample_loss(&probe, matrix, label, malicious_weight, &mut tape);
            probe.as_mut_slice()[k] = orig;
            let numeric = (up - down) / (2.0 * h);
            worst = worst.max(relative_error(analytic[k], numeric));
        }
        per_tensor.push(TensorError {
            tensor,
            checked: range.len(),
            max_relative_error: worst,
        });
    }
    let max_relative_error = per_tensor.iter().map(|t| t.max_relative_error).fold(0.0, f64::max);
    GradCheckReport {
        per_tensor,
        max_relative_error,
        tolerance,
    }
}

pub fn gradient_check(
    params: &LstmParams,
    matrix: &[[f64; 10]],
    label: bool,
    malicious_weight: f64,
    tolerance: f64,
) -> GradCheckReport {
    gradient_check_with_step(params, matrix, label, malicious_weight, tolerance, DEFAULT_STEP)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn draw(seed: u64, hidden: usize) -> (LstmParams, Vec<[f64; 10]>, bool) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let params = LstmParams::init(10, hidden, seed);
        let matrix = (0..5)
            .map(|_| std::array::from_fn(|_| rng.gen_range(0.05..0.95)))
            .collect();
        (params, matrix, rng.gen())
    }

    #[test]
    fn small_model_passes_and_covers_every_tensor() {
        let (p, m, y) = draw(7, 6);
        let report = gradient_check(&p, &m, y, 6.0, 1e-4);
        assert!(report.passed(), "{report:?}");
        assert_eq!(report.per_tensor.len(), Tensor::ALL.len());
        assert!(report.per_tensor.iter().all(|t| t.checked > 0));
    }

    #[test]
    fn corrupted_gradient_is_detected() {
        let (p, m, _) = draw(1, 3);
        let mut g = analytic_gradient(&p, &m, true, 6.0);
        let r = p.range(Tensor::Uf);
        g[r.start] += 1.0;
        let mut probe = p.clone();
        let mut tape = Tape::default();
        let k = r.start;
        let orig = probe.as_slice()[k];
        probe.as_mut_slice()[k] = orig + 1e-5;
        let up = sample_loss(&probe, &m, true, 6.0, &mut tape);
        probe.as_mut_slice()[k] = orig - 1e-5;
        let down = sample_loss(&probe, &m, true, 6.0, &mut tape);
        assert!(relative_error(g[k], (up - down) / 2e-5) > 1e-2);
    }

    #[test]
    fn relative_error_floor() {
        assert_eq!(relative_error(0.0, 0.0), 0.0);
        assert_eq!(relative_error(1e-9, 0.0), 1e-3);
        assert_eq!(relative_error(2.0, 1.0), 0.5);
    }
}
