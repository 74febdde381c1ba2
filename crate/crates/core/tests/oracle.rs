mod common;

use bsreg::corrections::a_beta_alpha;
use bsreg::cumulants::AlphaConstants;
use bsreg::model::ParamVector;
use bsreg::specfun::RngStream;
use common::{a_beta_alpha_oracle, oracle_configurations as configurations, uniform_design};
use nalgebra::DVector;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

#[test]
fn closed_form_matches_summation() {
    for (c, (n, p, q, alpha)) in configurations().into_iter().enumerate() {
        let mut rng = RngStream::new(77, c as u64);
        let x = uniform_design(n, p, &mut rng);
        let theta = ParamVector::new(DVector::from_element(p, 1.0), alpha).unwrap();
        let oracle = a_beta_alpha_oracle(&theta, &x, q);
        let closed = a_beta_alpha(&AlphaConstants::new(alpha).unwrap(), n, q, p).unwrap();
        assert!(rel(closed[0], oracle.a1) < 1e-8, "A1 at {:?}: {} vs {}", (n, p, q, alpha), closed[0], oracle.a1);
        assert!(rel(closed[1], oracle.a2) < 1e-8, "A2 at {:?}: {} vs {}", (n, p, q, alpha), closed[1], oracle.a2);
    }
}

#[test]
fn worked_term_value() {
    for &(n, p, q, alpha) in &[(25, 3, 2, 0.5), (40, 7, 1, 2.0), (15, 5, 2, 0.25), (25, 5, 5, 1.0)] {
        let mut rng = RngStream::new(5, n as u64);
        let x = uniform_design(n, p, &mut rng);
        let theta = ParamVector::new(DVector::from_element(p, 0.0), alpha).unwrap();
        let c = AlphaConstants::new(alpha).unwrap();
        let (nf, pf, qf) = (n as f64, p as f64, q as f64);
        let expected = 48.0 * c.s3 * (2.0 + alpha * alpha) * (pf - qf) * qf / (nf * alpha * c.a1 * c.a1);
        let got = a_beta_alpha_oracle(&theta, &x, q).worked_term;
        if q == p {
            assert!(got.abs() < 1e-12, "{got}");
        } else {
            assert!(rel(got, expected) < 1e-10, "{got} vs {expected}");
        }
    }
}

#[test]
fn closed_form_ignores_the_design() {
    let c = AlphaConstants::new(0.7).unwrap();
    let a = a_beta_alpha(&c, 30, 2, 5).unwrap();
    for seed in 0..2 {
        let x = uniform_design(30, 5, &mut RngStream::new(seed, 0));
        let theta = ParamVector::new(DVector::zeros(5), 0.7).unwrap();
        let o = a_beta_alpha_oracle(&theta, &x, 2);
        assert!(rel(a[0], o.a1) < 1e-8 && rel(a[1], o.a2) < 1e-8);
    }
}
