use super::Loss;

/// Largest relative error between the analytic derivatives of `loss` and
/// central differences: the gradient against differences of the value, the
/// Hessian against differences of the gradient. The denominator is
/// `max(1, |analytic|)`.
pub fn finite_difference_check<L: Loss + ?Sized>(loss: &L, theta: &[f64], x: &[f64], h: f64, step: f64) -> f64 {
    assert!(step > 0.0, "step must be positive");
    let d = loss.dim();
    let analytic = loss.eval(theta, x, h);
    let rel = |approx: f64, exact: f64| (approx - exact).abs() / exact.abs().max(1.0);

    let mut worst = 0.0_f64;
    let mut probe = theta.to_vec();
    for i in 0..d {
        probe[i] = theta[i] + step;
        let up = loss.value(&probe, x, h);
        let mut grad_up = vec![0.0; d];
        loss.add_gradient(&probe, x, h, 1.0, &mut grad_up);

        probe[i] = theta[i] - step;
        let down = loss.value(&probe, x, h);
        let mut grad_down = vec![0.0; d];
        loss.add_gradient(&probe, x, h, 1.0, &mut grad_down);
        probe[i] = theta[i];

        worst = worst.max(rel((up - down) / (2.0 * step), analytic.gradient[i]));
        for j in 0..d {
            let approx = (grad_up[j] - grad_down[j]) / (2.0 * step);
            worst = worst.max(rel(approx, analytic.hessian[(j, i)]));
        }
    }
    worst
}
