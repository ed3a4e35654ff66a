//! Linear solves on the killed generator: the Green operator applied to one,
//! the principal Dirichlet eigenvalue, and the Faber–Krahn ratio.

use serde::{Deserialize, Serialize};

use super::generator::DiscreteGenerator;
use crate::error::{Error, Result};
use crate::stats::compensated_sum;

/// Relative residual reached by the conjugate-gradient solves.
pub const CG_TOLERANCE: f64 = 1e-13;
/// Relative eigen-residual reached by inverse iteration.
pub const EIGEN_TOLERANCE: f64 = 1e-10;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    compensated_sum(a.iter().zip(b).map(|(x, y)| x * y))
}

/// Solve `K x = b` by conjugate gradients, warm-started from `x`.
/// Returns the iteration count.
pub fn solve_stiffness(gen: &DiscreteGenerator, b: &[f64], x: &mut [f64], tol: f64) -> Result<usize> {
    let n = gen.len();
    let max_iter = 20 * n + 100;
    let bnorm = dot(b, b).sqrt();
    if bnorm == 0.0 {
        x.fill(0.0);
        return Ok(0);
    }
    let mut r = vec![0.0; n];
    gen.apply_stiffness(x, &mut r);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    let mut p = r.clone();
    let mut kp = vec![0.0; n];
    let mut rr = dot(&r, &r);
    for it in 0..max_iter {
        if rr.sqrt() <= tol * bnorm {
            return Ok(it);
        }
        gen.apply_stiffness(&p, &mut kp);
        let pkp = dot(&p, &kp);
        if !(pkp > 0.0) {
            return Err(Error::LinearSolver(format!("stiffness matrix not positive definite (pKp = {pkp})")));
        }
        let a = rr / pkp;
        for i in 0..n {
            x[i] += a * p[i];
            r[i] -= a * kp[i];
        }
        let rr_new = dot(&r, &r);
        let beta = rr_new / rr;
        rr = rr_new;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
    }
    Err(Error::LinearSolver(format!(
        "conjugate gradients stalled at relative residual {:.3e} after {max_iter} iterations",
        rr.sqrt() / bnorm
    )))
}

/// `G_U 1`, the solution of `(−L_U) G = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GreenSolution {
    pub values: Vec<f64>,
    pub sup: f64,
    pub argmax: usize,
}

pub fn green_one(gen: &DiscreteGenerator) -> Result<GreenSolution> {
    let b = gen.masses().to_vec();
    let mut x = vec![0.0; gen.len()];
    solve_stiffness(gen, &b, &mut x, CG_TOLERANCE)?;
    let (argmax, sup) = x
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, v)| if v > acc.1 { (i, v) } else { acc });
    Ok(GreenSolution { values: x, sup, argmax })
}

/// Principal Dirichlet eigenpair of `−L_U`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrincipalEigen {
    /// Rayleigh quotient of the final iterate; it approaches `λ₁` from above.
    pub lambda1: f64,
    /// Eigenvector normalized in the `M`-weighted norm, positive.
    pub vector: Vec<f64>,
    /// `‖K φ − λ M φ‖_{M⁻¹} / λ`.
    pub residual: f64,
    pub iterations: usize,
}

/// Inverse iteration `φ ← K⁻¹ M φ` with conjugate-gradient inner solves.
pub fn lambda1(gen: &DiscreteGenerator) -> Result<PrincipalEigen> {
    let n = gen.len();
    let m = gen.masses();
    let mnorm = |f: &[f64]| compensated_sum(f.iter().zip(m).map(|(x, w)| x * x * w)).sqrt();
    let mut phi = vec![1.0; n];
    let s = mnorm(&phi);
    phi.iter_mut().for_each(|x| *x /= s);
    let mut psi = phi.clone();
    let mut kphi = vec![0.0; n];
    let mut lambda = f64::NAN;
    for it in 1..=1000 {
        let b: Vec<f64> = phi.iter().zip(m).map(|(x, w)| x * w).collect();
        solve_stiffness(gen, &b, &mut psi, CG_TOLERANCE)?;
        let s = mnorm(&psi);
        if !(s > 0.0 && s.is_finite()) {
            return Err(Error::Eigensolver("inverse iteration produced a zero vector".into()));
        }
        phi.iter_mut().zip(&psi).for_each(|(p, q)| *p = q / s);
        gen.apply_stiffness(&phi, &mut kphi);
        lambda = dot(&phi, &kphi);
        let res = compensated_sum(
            kphi.iter()
                .zip(&phi)
                .zip(m)
                .map(|((k, p), w)| (k - lambda * w * p).powi(2) / w),
        )
        .sqrt()
            / lambda;
        psi.iter_mut().for_each(|x| *x /= s);
        if res < EIGEN_TOLERANCE {
            if phi.iter().sum::<f64>() < 0.0 {
                phi.iter_mut().for_each(|x| *x = -*x);
            }
            return Ok(PrincipalEigen {
                lambda1: lambda,
                vector: phi,
                residual: res,
                iterations: it,
            });
        }
    }
    Err(Error::Eigensolver(format!(
        "inverse iteration did not converge (last Rayleigh quotient {lambda})"
    )))
}

/// `λ₁(U)` together with the Faber–Krahn ratio `λ₁ M(U) log(2 + 1/M(U))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FaberKrahn {
    pub lambda1: f64,
    pub mass: f64,
    pub ratio: f64,
}

pub fn lambda1_and_faber_krahn(gen: &DiscreteGenerator) -> Result<FaberKrahn> {
    let lambda1 = lambda1(gen)?.lambda1;
    let mass = gen.total_mass();
    Ok(FaberKrahn {
        lambda1,
        mass,
        ratio: lambda1 * mass * (2.0 + 1.0 / mass).ln(),
    })
}

/// `‖G_U 1‖_∞` with the discrete inequality `λ₁⁻¹ ≤ ‖G_U 1‖_∞` and the
/// constant `C = ‖G_U 1‖_∞ / (M(U) (log 3R + log(2 + 1/M(U))))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GreenReport {
    pub sup: f64,
    pub lambda1: f64,
    pub mass: f64,
    pub inequality_holds: bool,
    pub constant: f64,
}

pub fn green_operator_sup(gen: &DiscreteGenerator, radius: f64) -> Result<GreenReport> {
    let green = green_one(gen)?;
    let lambda1 = lambda1(gen)?.lambda1;
    let mass = gen.total_mass();
    Ok(GreenReport {
        sup: green.sup,
        lambda1,
        mass,
        inequality_holds: 1.0 / lambda1 <= green.sup * (1.0 + 1e-9),
        constant: green.sup / (mass * ((3.0 * radius).ln() + (2.0 + 1.0 / mass).ln())),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Geometry, Point};
    use crate::heat_kernel::assemble_generator;
    use crate::liouville_measure::MeasureGrid;

    #[test]
    fn green_of_a_square_matches_dense_solve() {
        let m = MeasureGrid::from_masses(
            Geometry::centered(1.0, 12).unwrap(),
            0.5,
            (0..144).map(|k| 0.01 + 0.02 * ((k as f64) * 1.3).cos().abs()).collect(),
            None,
        );
        let gen = assemble_generator(&m, Point::ORIGIN, 0.7).unwrap();
        let g = green_one(&gen).unwrap();
        let a = gen.dense_symmetric();
        let sq: Vec<f64> = gen.masses().iter().map(|w| w.sqrt()).collect();
        let rhs = nalgebra::DVector::from_iterator(gen.len(), sq.iter().copied());
        let y = a.lu().solve(&rhs).unwrap();
        for v in 0..gen.len() {
            assert!((y[v] / sq[v] - g.values[v]).abs() < 1e-9 * g.sup);
        }
        assert!(g.values.iter().all(|&x| x > 0.0));
    }

    #[test]
    fn principal_eigenvalue_matches_dense() {
        let m = MeasureGrid::from_masses(
            Geometry::centered(1.0, 14).unwrap(),
            0.5,
            (0..196).map(|k| 0.005 + 0.02 * ((k as f64) * 0.9).sin().abs()).collect(),
            None,
        );
        let gen = assemble_generator(&m, Point::ORIGIN, 0.8).unwrap();
        let dense = gen.dense_symmetric().symmetric_eigenvalues();
        let min = dense.iter().copied().fold(f64::INFINITY, f64::min);
        let p = lambda1(&gen).unwrap();
        assert!((p.lambda1 - min).abs() < 1e-8 * min);
        assert!(p.vector.iter().all(|&x| x > 0.0));
        let r = green_operator_sup(&gen, 0.8).unwrap();
        assert!(r.inequality_holds);
    }
}
