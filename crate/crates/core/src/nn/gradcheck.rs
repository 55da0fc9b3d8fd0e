use crate::error::{Error, Result};
use crate::params::ParamSet;

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    /// Parameter name and flat index where the worst disagreement occurred.
    pub worst: Option<(String, usize)>,
    pub checked: usize,
}

/// Compares `analytic` against central differences of `loss` around `params`.
///
/// Relative error per element is `|a - n| / max(|a|, |n|, 1e-8)`; the report
/// carries the maximum over all elements of all parameters.
pub fn grad_check<F>(
    loss: F,
    params: &ParamSet,
    analytic: &ParamSet,
    step: f64,
) -> Result<GradCheckReport>
where
    F: Fn(&ParamSet) -> Result<f64>,
{
    if !(step > 0.0) {
        return Err(Error::Domain(format!("finite-difference step must be > 0, got {step}")));
    }
    let eval = |p: &ParamSet| -> Result<f64> {
        let l = loss(p)?;
        if !l.is_finite() {
            return Err(Error::Domain(format!("loss is not finite ({l})")));
        }
        Ok(l)
    };
    eval(params)?;

    let mut probe = params.clone();
    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        worst: None,
        checked: 0,
    };
    for (name, tensor) in params.iter() {
        let grad = analytic.require(name)?;
        if grad.shape() != tensor.shape() {
            return Err(Error::dim("grad_check", tensor.shape(), grad.shape()));
        }
        for idx in 0..tensor.len() {
            let orig = tensor.data()[idx];
            set_value(&mut probe, name, idx, orig + step);
            let plus = eval(&probe)?;
            set_value(&mut probe, name, idx, orig - step);
            let minus = eval(&probe)?;
            set_value(&mut probe, name, idx, orig);

            let numeric = (plus - minus) / (2.0 * step);
            let a = grad.data()[idx];
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-8);
            report.checked += 1;
            if rel > report.max_rel_error || report.worst.is_none() {
                report.max_rel_error = rel;
                report.worst = Some((name.to_string(), idx));
            }
        }
    }
    Ok(report)
}

fn set_value(set: &mut ParamSet, name: &str, idx: usize, value: f64) {
    if let Some(t) = set.get_mut(name) {
        t.data_mut()[idx] = value;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::test_util::{random, rng};
    use crate::tensor::Tensor;

    fn single(name: &str, t: Tensor) -> ParamSet {
        let mut s = ParamSet::new();
        s.insert(name, t);
        s
    }

    #[test]
    fn quadratic_is_nearly_exact() {
        let theta = random(&mut rng(1), &[4, 3], 2.0);
        let params = single("theta", theta.clone());
        let analytic = single("theta", theta.scale(2.0));
        let loss = |p: &ParamSet| Ok(p.get("theta").unwrap().data().iter().map(|v| v * v).sum());
        let r = grad_check(loss, &params, &analytic, 1e-5).unwrap();
        assert!(r.max_rel_error < 1e-8, "{r:?}");
        assert_eq!(r.checked, 12);
    }

    #[test]
    fn linear_is_exact_for_any_step() {
        let loss = |p: &ParamSet| Ok(p.get("theta").unwrap().data().iter().sum());
        let analytic = single("theta", Tensor::filled(&[5], 1.0));
        let random_theta = single("theta", random(&mut rng(2), &[5], 3.0));
        for step in [1e-3, 0.5, 10.0] {
            let r = grad_check(loss, &random_theta, &analytic, step).unwrap();
            assert!(r.max_rel_error < 1e-10, "step {step}: {r:?}");
        }
        // Dyadic values keep tiny steps free of rounding in the sum.
        let dyadic = single("theta", Tensor::vector(vec![0.5, -1.25, 2.0, 0.125, -3.0]));
        for step in [2f64.powi(-20), 2f64.powi(-4), 64.0] {
            let r = grad_check(loss, &dyadic, &analytic, step).unwrap();
            assert!(r.max_rel_error < 1e-10, "step {step}: {r:?}");
        }
    }

    #[test]
    fn wrong_gradient_is_detected() {
        let params = single("theta", Tensor::vector(vec![1.0, -2.0]));
        let analytic = single("theta", Tensor::vector(vec![2.0, 4.0]));
        let loss = |p: &ParamSet| Ok(p.get("theta").unwrap().data().iter().map(|v| v * v).sum());
        let r = grad_check(loss, &params, &analytic, 1e-5).unwrap();
        assert!(r.max_rel_error > 1.0);
        assert_eq!(r.worst, Some(("theta".to_string(), 1)));
    }

    #[test]
    fn non_finite_loss_is_domain_error() {
        let params = single("theta", Tensor::vector(vec![1.0]));
        let analytic = params.clone();
        let loss = |_: &ParamSet| Ok(f64::NAN);
        assert!(matches!(
            grad_check(loss, &params, &analytic, 1e-5),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn non_positive_step_rejected() {
        let params = single("theta", Tensor::vector(vec![1.0]));
        let loss = |_: &ParamSet| Ok(0.0);
        assert!(grad_check(loss, &params, &params, 0.0).is_err());
    }
}
