//! Central finite-difference gradient verification.
//!
//! For every entry of every trainable parameter this compares the
//! reverse-mode gradient against `(f(θ+ε) − f(θ−ε)) / 2ε`. The loss
//! closure must be deterministic (dropout off). Forks of the parameter
//! set share storage, so each probe copies only the tensor it perturbs;
//! probes fan out over the data-parallel map.

use crate::par::maybe_par_map;

use super::{ParameterSet, Tensor};

/// Largest relative error seen per parameter, plus the overall verdict.
#[derive(Clone, Debug)]
pub struct GradCheckReport {
    /// (parameter name, max relative error over its entries)
    pub per_param: Vec<(String, f64)>,
    pub max_rel_err: f64,
    pub worst_param: String,
    pub tolerance: f64,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.max_rel_err < self.tolerance
    }

    /// Parameters whose error exceeds the tolerance.
    pub fn failures(&self) -> Vec<&(String, f64)> {
        self.per_param
            .iter()
            .filter(|(_, e)| *e >= self.tolerance)
            .collect()
    }
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-6)
}

/// Runs the check. `value_fn` evaluates the loss for arbitrary parameter
/// values; `analytic` supplies the reverse-mode gradients (name → tensor)
/// for the unperturbed parameters. Frozen parameters are skipped.
pub fn grad_check<V>(
    value_fn: V,
    analytic: &[(String, Tensor)],
    params: &ParameterSet,
    eps: f64,
    tolerance: f64,
) -> GradCheckReport
where
    V: Fn(&ParameterSet) -> f64 + Sync,
{
    let analytic_of = |name: &str| -> Option<&Tensor> {
        analytic.iter().find(|(n, _)| n == name).map(|(_, t)| t)
    };
    let mut per_param = Vec::new();
    for (name, p) in params.iter() {
        if !p.trainable {
            continue;
        }
        let n = p.value.len();
        let grad = analytic_of(name);
        let entries: Vec<usize> = (0..n).collect();
        let errs = maybe_par_map(&entries, |&i| {
            let mut fork = params.fork_values();
            let orig = fork.value(name).data()[i];
            fork.value_mut(name).data_mut()[i] = orig + eps;
            let up = value_fn(&fork);
            fork.value_mut(name).data_mut()[i] = orig - eps;
            let down = value_fn(&fork);
            let fd = (up - down) / (2.0 * eps);
            let ad = grad.map_or(0.0, |g| g.data()[i]);
            rel_err(ad, fd)
        });
        let max = errs.iter().cloned().fold(0.0, f64::max);
        per_param.push((name.to_string(), max));
    }
    let (worst_param, max_rel_err) = per_param
        .iter()
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(n, e)| (n.clone(), *e))
        .unwrap_or_else(|| (String::new(), 0.0));
    GradCheckReport {
        per_param,
        max_rel_err,
        worst_param,
        tolerance,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::Graph;

    /// ‖θ‖² has gradient 2θ exactly; both routes agree to machine noise.
    #[test]
    fn quadratic_loss_rel_err_tiny() {
        let mut ps = ParameterSet::new();
        ps.insert(
            "theta",
            Tensor::row_vector(vec![0.5, -1.25, 2.0, 0.125]),
            true,
        );
        ps.insert("frozen", Tensor::row_vector(vec![3.0]), false);

        let value_fn = |p: &ParameterSet| -> f64 {
            p.value("theta").data().iter().map(|x| x * x).sum()
        };

        let mut g = Graph::new();
        let theta = g.param(&ps, "theta");
        let sq = g.mul(theta, theta);
        let loss = g.sum(sq);
        let grads = g.backward(loss);
        let analytic: Vec<(String, Tensor)> = grads
            .param_grads(&g)
            .map(|(n, t)| (n.to_string(), t.clone()))
            .collect();

        let report = grad_check(value_fn, &analytic, &ps, 1e-5, 1e-3);
        assert!(report.passed());
        assert!(report.max_rel_err < 1e-9, "err {}", report.max_rel_err);
        // frozen parameter excluded
        assert!(report.per_param.iter().all(|(n, _)| n != "frozen"));
    }

    #[test]
    fn detects_wrong_gradient() {
        let mut ps = ParameterSet::new();
        ps.insert("theta", Tensor::row_vector(vec![1.0, 2.0]), true);
        let value_fn = |p: &ParameterSet| -> f64 {
            p.value("theta").data().iter().map(|x| x * x).sum()
        };
        // deliberately wrong analytic gradient (3θ instead of 2θ)
        let analytic = vec![(
            "theta".to_string(),
            Tensor::row_vector(vec![3.0, 6.0]),
        )];
        let report = grad_check(value_fn, &analytic, &ps, 1e-5, 1e-3);
        assert!(!report.passed());
        assert!(!report.failures().is_empty());
    }
}
