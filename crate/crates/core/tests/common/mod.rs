//! Shared helpers for the integration tests, including the literal
//! summation form of the shape-estimation coefficients.

#![allow(dead_code)]

use bsreg::cumulants::{CumulantSet, Group};
use bsreg::model::ParamVector;
use bsreg::specfun::RngStream;
use nalgebra::DMatrix;

/// 20 configurations drawn from n ∈ {15, 25, 40}, p ∈ {3, 5, 7},
/// q ∈ {1, 2, p}, alpha ∈ {0.25, 0.5, 1, 2}.
pub fn oracle_configurations() -> Vec<(usize, usize, usize, f64)> {
    let mut rng = RngStream::new(20_240_611, 0);
    let pick = |rng: &mut RngStream, k: usize| (rng.next_u64() % k as u64) as usize;
    (0..20)
        .map(|_| {
            let n = [15, 25, 40][pick(&mut rng, 3)];
            let p = [3, 5, 7][pick(&mut rng, 3)];
            let q = [1, 2, p][pick(&mut rng, 3)];
            let alpha = [0.25, 0.5, 1.0, 2.0][pick(&mut rng, 4)];
            (n, p, q, alpha)
        })
        .collect()
}

/// Intercept plus `U(0,1)` covariates.
pub fn uniform_design(n: usize, p: usize, rng: &mut RngStream) -> DMatrix<f64> {
    DMatrix::from_fn(n, p, |_, j| if j == 0 { 1.0 } else { rng.uniform() })
}

/// The coefficients `A1βα`, `A2βα` by direct summation over all `beta`
/// indices, plus the single term
/// `-6 Σ (κ_{ijα} + 2κ_{i,jα}) κ_{α,s,t} a_ij a_αα m_st` on its own.
pub struct OracleValue {
    pub a1: f64,
    pub a2: f64,
    pub worked_term: f64,
}

pub fn a_beta_alpha_oracle(theta: &ParamVector, x: &DMatrix<f64>, q: usize) -> OracleValue {
    let p = x.ncols();
    let cs = CumulantSet::new(theta.alpha, x).unwrap();
    let b = |i: &[usize]| Group::beta(i);
    let al = |k: usize| Group::alpha(k);
    let mx = |i: &[usize], k: usize| Group::mixed(i, k);
    let k = |g: &[Group]| cs.kappa(g).unwrap();

    // Block-diagonal information and its pieces.
    let kb = DMatrix::from_fn(p, p, |r, s| k(&[b(&[r]), b(&[s])]));
    let kb_inv = kb.clone().try_inverse().unwrap();
    let mut ab = DMatrix::zeros(p, p);
    if q < p {
        let k22 = kb.view((q, q), (p - q, p - q)).into_owned();
        ab.view_mut((q, q), (p - q, p - q)).copy_from(&k22.try_inverse().unwrap());
    }
    let m = &kb_inv - &ab;
    let a = &ab;
    let aaa = 1.0 / k(&[al(1), al(1)]);

    let mut a1 = 0.0;
    let mut worked = 0.0;
    // Two-index sums.
    for i in 0..p {
        for j in 0..p {
            // 3 Σ (κ_ααk + 2κ_α,αk)(κ_rαα + 2κ_rα,α) a_αα² m_kr
            let t3 = (k(&[mx(&[i], 2)]) + 2.0 * k(&[al(1), mx(&[i], 1)]))
                * (k(&[mx(&[j], 2)]) + 2.0 * k(&[mx(&[j], 1), al(1)]))
                * aaa * aaa * m[(i, j)];
            // -6 Σ (κ_ααα + 2κ_α,αα) κ_α,s,t a_αα² m_st
            let t6 = (k(&[al(3)]) + 2.0 * k(&[al(1), al(2)]))
                * k(&[al(1), b(&[i]), b(&[j])])
                * aaa * aaa * m[(i, j)];
            // 6 Σ (κ_i,αα - κ_i,α,α)(κ_rαα + 2κ_rα,α) a_αα² m_ir
            let t9 = (k(&[b(&[i]), al(2)]) - k(&[b(&[i]), al(1), al(1)]))
                * (k(&[mx(&[j], 2)]) + 2.0 * k(&[mx(&[j], 1), al(1)]))
                * aaa * aaa * m[(i, j)];
            // -6 Σ (κ_i,j,α,α + κ_i,j,αα) a_αα m_ij
            let t10 = (k(&[b(&[i]), b(&[j]), al(1), al(1)]) + k(&[b(&[i]), b(&[j]), al(2)]))
                * aaa * m[(i, j)];
            a1 += 3.0 * t3 - 6.0 * t6 + 6.0 * t9 - 6.0 * t10;
        }
    }
    let mut a2 = 0.0;
    // Four-index sums.
    for i in 0..p {
        for j in 0..p {
            for r in 0..p {
                for s in 0..p {
                    // 3 Σ (κ_ααk + 2κ_α,αk)(κ_rst + 2κ_rs,t) a_αα a_st m_kr
                    // with (k, r, s, t) = (i, j, r, s)
                    let t1 = (k(&[mx(&[i], 2)]) + 2.0 * k(&[al(1), mx(&[i], 1)]))
                        * (k(&[b(&[j, r, s])]) + 2.0 * k(&[b(&[j, r]), b(&[s])]))
                        * aaa * a[(r, s)] * m[(i, j)];
                    // 3 Σ (κ_ijk + 2κ_i,jk)(κ_rαα + 2κ_rα,α) a_ij a_αα m_kr
                    // with (i, j, k, r) = (i, j, r, s)
                    let t2 = (k(&[b(&[i, j, r])]) + 2.0 * k(&[b(&[i]), b(&[j, r])]))
                        * (k(&[mx(&[s], 2)]) + 2.0 * k(&[mx(&[s], 1), al(1)]))
                        * a[(i, j)] * aaa * m[(r, s)];
                    // -6 Σ (κ_ααk + 2κ_α,αk) κ_r,s,t a_αα a_kr m_st
                    // with (k, r, s, t) = (i, j, r, s)
                    let t4 = (k(&[mx(&[i], 2)]) + 2.0 * k(&[al(1), mx(&[i], 1)]))
                        * k(&[b(&[j]), b(&[r]), b(&[s])])
                        * aaa * a[(i, j)] * m[(r, s)];
                    // -6 Σ (κ_ijα + 2κ_i,jα) κ_α,s,t a_ij a_αα m_st
                    // with (i, j, s, t) = (i, j, r, s)
                    let t5 = (k(&[mx(&[i, j], 1)]) + 2.0 * k(&[b(&[i]), mx(&[j], 1)]))
                        * k(&[al(1), b(&[r]), b(&[s])])
                        * a[(i, j)] * aaa * m[(r, s)];
                    // 6 Σ (κ_i,αk - κ_i,α,k)(κ_rαt + 2κ_rα,t) a_αα a_kt m_ir
                    // with (i, k, r, t) = (i, j, r, s)
                    let t7 = (k(&[b(&[i]), mx(&[j], 1)]) - k(&[b(&[i]), al(1), b(&[j])]))
                        * (k(&[mx(&[r, s], 1)]) + 2.0 * k(&[mx(&[r], 1), b(&[s])]))
                        * aaa * a[(j, s)] * m[(i, r)];
                    // 6 Σ (κ_i,jα - κ_i,j,α)(κ_rsα + 2κ_rs,α) a_js a_αα m_ir
                    // with (i, j, r, s) = (i, j, r, s)
                    let t8 = (k(&[b(&[i]), mx(&[j], 1)]) - k(&[b(&[i]), b(&[j]), al(1)]))
                        * (k(&[mx(&[r, s], 1)]) + 2.0 * k(&[b(&[r, s]), al(1)]))
                        * a[(j, s)] * aaa * m[(i, r)];
                    a1 += 3.0 * t1 + 3.0 * t2 - 6.0 * t4 - 6.0 * t5 + 6.0 * t7 + 6.0 * t8;
                    worked += -6.0 * t5;

                    // A2βα
                    // -3 Σ κ_i,j,α κ_α,s,t a_αα m_ij m_st
                    let u1 = k(&[b(&[i]), b(&[j]), al(1)]) * k(&[al(1), b(&[r]), b(&[s])])
                        * aaa * m[(i, j)] * m[(r, s)];
                    // 6 Σ (κ_ααk + 2κ_α,αk) κ_r,s,t a_αα m_kr m_st
                    // with (k, r, s, t) = (i, j, r, s)
                    let u2 = (k(&[mx(&[i], 2)]) + 2.0 * k(&[al(1), mx(&[i], 1)]))
                        * k(&[b(&[j]), b(&[r]), b(&[s])])
                        * aaa * m[(i, j)] * m[(r, s)];
                    // -6 Σ κ_i,j,α κ_r,s,α a_αα m_ir m_js
                    let u3 = k(&[b(&[i]), b(&[j]), al(1)]) * k(&[b(&[r]), b(&[s]), al(1)])
                        * aaa * m[(i, r)] * m[(j, s)];
                    a2 += -3.0 * u1 + 6.0 * u2 - 6.0 * u3;
                }
            }
        }
    }
    OracleValue { a1, a2, worked_term: worked }
}
