//! Spectral evaluation of the killed heat kernel `p_t^U(x, y)`, a density
//! with respect to `M`.
//!
//! Small domains use a full dense eigenbasis. Large domains use Lanczos on
//! the symmetric form `A = M^{−1/2} K M^{−1/2}` started at a vertex, which
//! gives `e^{−tA} e_x` and hence a whole kernel row
//! `p_t(x, y) = (e^{−tA})_{xy} / √(m_x m_y)`.

use serde::{Deserialize, Serialize};

use super::generator::DiscreteGenerator;
use crate::error::{Error, Result};

/// Largest domain handled by the dense eigensolver.
pub const DENSE_LIMIT: usize = 2500;
/// Default relative tolerance of Krylov evaluations.
pub const KRYLOV_TOLERANCE: f64 = 1e-10;
/// Truncated expansions are refused when the tail bound exceeds this
/// fraction of the value.
pub const TRUNCATION_LIMIT: f64 = 1e-3;
const MIN_STEPS: usize = 20;

/// Eigenpairs of `−L_U`, ascending, orthonormal in the `M`-weighted inner
/// product.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Eigenbasis {
    pub values: Vec<f64>,
    /// `vectors[k][v] = φ_k(v)`.
    pub vectors: Vec<Vec<f64>>,
    pub masses: Vec<f64>,
    /// Number of vertices; modes beyond `values.len()` were discarded.
    pub dimension: usize,
}

/// One kernel value with the bound on the discarded modes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelValue {
    pub value: f64,
    pub truncation: f64,
}

impl Eigenbasis {
    /// All eigenpairs from a dense symmetric eigensolve.
    pub fn dense(gen: &DiscreteGenerator) -> Result<Self> {
        let n = gen.len();
        if n > DENSE_LIMIT {
            return Err(Error::Eigensolver(format!(
                "{n} vertices exceed the dense limit {DENSE_LIMIT}; use Krylov rows"
            )));
        }
        let eig = gen.dense_symmetric().symmetric_eigen();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let masses = gen.masses().to_vec();
        let values: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        if values[0] <= 0.0 || values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Eigensolver(format!("non-positive eigenvalue {}", values[0])));
        }
        let vectors = order
            .iter()
            .map(|&k| {
                let col = eig.eigenvectors.column(k);
                let sign = if col.sum() < 0.0 && k == order[0] { -1.0 } else { 1.0 };
                (0..n).map(|v| sign * col[v] / masses[v].sqrt()).collect()
            })
            .collect();
        Ok(Self {
            values,
            vectors,
            masses,
            dimension: n,
        })
    }

    /// Keep the lowest `k` modes.
    pub fn truncate(&mut self, k: usize) {
        self.values.truncate(k);
        self.vectors.truncate(k);
    }

    pub fn is_complete(&self) -> bool {
        self.values.len() == self.dimension
    }

    /// `p_t(x, y) = Σ_k e^{−λ_k t} φ_k(x) φ_k(y)`.
    ///
    /// The discarded modes contribute at most `e^{−λ_K t} / √(m_x m_y)`
    /// where `λ_K` is the largest kept eigenvalue.
    pub fn kernel(&self, t: f64, x: usize, y: usize) -> Result<KernelValue> {
        check_time(t)?;
        let value = self
            .values
            .iter()
            .zip(&self.vectors)
            .map(|(l, phi)| (-l * t).exp() * phi[x] * phi[y])
            .sum::<f64>();
        let truncation = if self.is_complete() {
            0.0
        } else {
            let last = self.values.last().copied().unwrap_or(0.0);
            (-last * t).exp() / (self.masses[x] * self.masses[y]).sqrt()
        };
        if truncation > TRUNCATION_LIMIT * value.abs() {
            return Err(Error::Eigensolver(format!(
                "{} modes insufficient at t = {t}: truncation bound {truncation:.3e} vs value {value:.3e}",
                self.values.len()
            )));
        }
        Ok(KernelValue { value, truncation })
    }

    /// `p_t(x, ·)` over all vertices.
    pub fn row(&self, t: f64, x: usize) -> Result<Vec<f64>> {
        check_time(t)?;
        let mut out = vec![0.0; self.dimension];
        for (l, phi) in self.values.iter().zip(&self.vectors) {
            let c = (-l * t).exp() * phi[x];
            for (o, p) in out.iter_mut().zip(phi) {
                *o += c * p;
            }
        }
        Ok(out)
    }
}

/// `p_t^U(x, y)` from an eigenbasis.
pub fn hk_spectral(basis: &Eigenbasis, t: f64, x: usize, y: usize) -> Result<KernelValue> {
    basis.kernel(t, x, y)
}

fn check_time(t: f64) -> Result<()> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::Domain {
            quantity: "t",
            value: t,
            expected: "t > 0".into(),
        });
    }
    Ok(())
}

/// Implicit QL on a symmetric tridiagonal matrix. On return `d` holds the
/// eigenvalues and each row of `z` (initially the matching rows of the
/// identity) holds that component of every eigenvector.
fn tridiagonal_eigen(d: &mut [f64], off: &[f64], z: &mut [Vec<f64>]) -> Result<()> {
    let n = d.len();
    let mut e = vec![0.0; n];
    e[..n - 1].copy_from_slice(&off[..n - 1]);
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                return Err(Error::Eigensolver("tridiagonal QL did not converge".into()));
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut deflated = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                for row in z.iter_mut() {
                    let f = row[i + 1];
                    row[i + 1] = s * row[i] + c * f;
                    row[i] = c * row[i] - s * f;
                }
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

fn identity_rows(n: usize, rows: &[usize]) -> Vec<Vec<f64>> {
    rows.iter()
        .map(|&r| {
            let mut v = vec![0.0; n];
            v[r] = 1.0;
            v
        })
        .collect()
}

struct Lanczos<'a> {
    gen: &'a DiscreteGenerator,
    alpha: Vec<f64>,
    beta: Vec<f64>,
    basis: Vec<Vec<f64>>,
    keep_basis: bool,
    prev: Vec<f64>,
    cur: Vec<f64>,
    work: Vec<f64>,
    exhausted: bool,
}

impl<'a> Lanczos<'a> {
    fn new(gen: &'a DiscreteGenerator, x: usize, keep_basis: bool) -> Self {
        let n = gen.len();
        let mut cur = vec![0.0; n];
        cur[x] = 1.0;
        Self {
            gen,
            alpha: Vec::new(),
            beta: Vec::new(),
            basis: Vec::new(),
            keep_basis,
            prev: vec![0.0; n],
            cur,
            work: vec![0.0; n],
            exhausted: false,
        }
    }

    fn steps(&self) -> usize {
        self.alpha.len()
    }

    fn step(&mut self) {
        self.gen.apply_symmetric(&self.cur, &mut self.work);
        let b_prev = self.beta.last().copied().unwrap_or(0.0);
        for (w, p) in self.work.iter_mut().zip(&self.prev) {
            *w -= b_prev * p;
        }
        let a: f64 = self.work.iter().zip(&self.cur).map(|(w, q)| w * q).sum();
        for (w, q) in self.work.iter_mut().zip(&self.cur) {
            *w -= a * q;
        }
        let b = self.work.iter().map(|w| w * w).sum::<f64>().sqrt();
        self.alpha.push(a);
        self.beta.push(b);
        let next: Vec<f64> = if b > 1e-14 {
            self.work.iter().map(|w| w / b).collect()
        } else {
            self.exhausted = true;
            vec![0.0; self.cur.len()]
        };
        let done = std::mem::replace(&mut self.cur, next);
        if self.keep_basis {
            self.basis.push(done.clone());
        }
        self.prev = done;
    }

    /// Eigenvalues of `T_m` and the requested rows of its eigenvectors.
    fn ritz(&self, rows: &[usize]) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
        let m = self.steps();
        let mut d = self.alpha.clone();
        let mut z = identity_rows(m, rows);
        tridiagonal_eigen(&mut d, &self.beta, &mut z)?;
        Ok((d, z))
    }
}

fn max_steps(gen: &DiscreteGenerator) -> usize {
    gen.len().min(4000)
}

/// On-diagonal values `p_t(x, x)` for several `t` with error estimates.
///
/// The Lanczos estimate `e₁ᵀ e^{−t T_m} e₁` is the Gauss quadrature of the
/// spectral measure of `e_x`; it increases monotonically to the true value,
/// and iteration stops once two successive checkpoints agree to `tol`
/// relative.
pub fn diagonal(gen: &DiscreteGenerator, x: usize, ts: &[f64], tol: f64) -> Result<Vec<KernelValue>> {
    ts.iter().try_for_each(|&t| check_time(t))?;
    let mut lz = Lanczos::new(gen, x, false);
    let mx = gen.masses()[x];
    let mut prev: Option<Vec<f64>> = None;
    let mut stable = 0;
    loop {
        for _ in 0..8 {
            if lz.exhausted || lz.steps() >= max_steps(gen) {
                break;
            }
            lz.step();
        }
        let (theta, z) = lz.ritz(&[0])?;
        let est: Vec<f64> = ts
            .iter()
            .map(|&t| theta.iter().zip(&z[0]).map(|(l, s)| (-l * t).exp() * s * s).sum::<f64>())
            .collect();
        if let Some(p) = &prev {
            let ok = est.iter().zip(p).all(|(a, b)| (a - b).abs() <= tol * a.abs());
            stable = if ok { stable + 1 } else { 0 };
            if stable >= 2 || lz.exhausted {
                return Ok(est
                    .iter()
                    .zip(p)
                    .map(|(a, b)| KernelValue {
                        value: a / mx,
                        truncation: (a - b).abs().max(tol * a.abs()) / mx,
                    })
                    .collect());
            }
        }
        if lz.steps() >= max_steps(gen) {
            return Err(Error::Eigensolver(format!(
                "Lanczos diagonal did not converge in {} steps",
                lz.steps()
            )));
        }
        prev = Some(est);
    }
}

/// A full kernel row `p_t(x, ·)` from Lanczos.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelRow {
    pub t: f64,
    pub source: usize,
    pub values: Vec<f64>,
    /// Estimated Euclidean error of `e^{−tA} e_x`; the error of `p_t(x, y)`
    /// is at most this divided by `√(m_x m_y)`.
    pub error: f64,
    pub steps: usize,
}

impl KernelRow {
    pub fn value_error(&self, masses: &[f64], y: usize) -> f64 {
        self.error / (masses[self.source] * masses[y]).sqrt()
    }
}

/// Kernel rows `p_t(x, ·)` for every `t` in `ts` from one Lanczos run.
///
/// Convergence uses the residual estimate `β_m |e_mᵀ e^{−t T_m} e₁|`
/// relative to `‖e^{−t T_m} e₁‖`.
pub fn kernel_rows(gen: &DiscreteGenerator, x: usize, ts: &[f64], tol: f64) -> Result<Vec<KernelRow>> {
    ts.iter().try_for_each(|&t| check_time(t))?;
    let mut lz = Lanczos::new(gen, x, true);
    loop {
        for _ in 0..10 {
            if lz.exhausted || lz.steps() >= max_steps(gen) {
                break;
            }
            lz.step();
        }
        let m = lz.steps();
        let (theta, z) = lz.ritz(&[0, m - 1])?;
        let beta = *lz.beta.last().expect("at least one step");
        let (errs, norms): (Vec<f64>, Vec<f64>) = ts
            .iter()
            .map(|&t| {
                let last: f64 = theta
                    .iter()
                    .zip(z[0].iter().zip(&z[1]))
                    .map(|(l, (s0, sm))| (-l * t).exp() * s0 * sm)
                    .sum();
                let norm = theta
                    .iter()
                    .zip(&z[0])
                    .map(|(l, s0)| (-2.0 * l * t).exp() * s0 * s0)
                    .sum::<f64>()
                    .sqrt();
                (if lz.exhausted { 0.0 } else { beta * last.abs() }, norm)
            })
            .unzip();
        if lz.exhausted || (m >= MIN_STEPS && errs.iter().zip(&norms).all(|(e, n)| *e <= tol * n)) {
            return assemble_rows(gen, &lz, x, ts, &errs);
        }
        if m >= max_steps(gen) {
            return Err(Error::Eigensolver(format!(
                "Lanczos row did not converge in {m} steps (error estimate {:.3e})",
                errs.iter().copied().fold(0.0, f64::max)
            )));
        }
    }
}

fn assemble_rows(gen: &DiscreteGenerator, lz: &Lanczos<'_>, x: usize, ts: &[f64], errs: &[f64]) -> Result<Vec<KernelRow>> {
    let m = lz.steps();
    let all: Vec<usize> = (0..m).collect();
    let (theta, z) = lz.ritz(&all)?;
    let masses = gen.masses();
    let sx = masses[x].sqrt();
    ts.iter()
        .zip(errs)
        .map(|(&t, &error)| {
            let w: Vec<f64> = theta.iter().zip(&z[0]).map(|(l, s0)| (-l * t).exp() * s0).collect();
            let coeff: Vec<f64> = z.iter().map(|row| row.iter().zip(&w).map(|(a, b)| a * b).sum()).collect();
            let mut v = vec![0.0; gen.len()];
            for (c, q) in coeff.iter().zip(&lz.basis) {
                for (vi, qi) in v.iter_mut().zip(q) {
                    *vi += c * qi;
                }
            }
            let values = v.iter().zip(masses).map(|(vi, my)| vi / (sx * my.sqrt())).collect();
            Ok(KernelRow {
                t,
                source: x,
                values,
                error,
                steps: m,
            })
        })
        .collect()
}

/// `|Σ_z p_t(x, z) p_t(z, y) m_z − p_{2t}(x, y)|` from Krylov rows.
pub fn chapman_kolmogorov_residual(gen: &DiscreteGenerator, x: usize, y: usize, t: f64, tol: f64) -> Result<f64> {
    let rx = kernel_rows(gen, x, &[t, 2.0 * t], tol)?;
    let ry = kernel_rows(gen, y, &[t], tol)?;
    let conv: f64 = rx[0]
        .values
        .iter()
        .zip(&ry[0].values)
        .zip(gen.masses())
        .map(|((a, b), m)| a * b * m)
        .sum();
    Ok((conv - rx[1].values[y]).abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Geometry, Point};
    use crate::heat_kernel::assemble_generator;
    use crate::liouville_measure::MeasureGrid;

    fn rough_generator() -> DiscreteGenerator {
        let g = Geometry::centered(1.0, 24).unwrap();
        let m = MeasureGrid::from_masses(
            g,
            0.5,
            (0..g.len()).map(|k| g.cell_area() * (0.3 + ((k as f64) * 0.61).sin().powi(2))).collect(),
            None,
        );
        assemble_generator(&m, Point::ORIGIN, 0.85).unwrap()
    }

    #[test]
    fn tridiagonal_matches_dense() {
        let d = vec![2.0, 1.0, 3.0, 0.5, 4.0];
        let off = vec![0.3, -0.7, 1.1, 0.2];
        let mut dense = nalgebra::DMatrix::zeros(5, 5);
        for i in 0..5 {
            dense[(i, i)] = d[i];
            if i < 4 {
                dense[(i, i + 1)] = off[i];
                dense[(i + 1, i)] = off[i];
            }
        }
        let mut ev = d.clone();
        let mut z = identity_rows(5, &[0, 1, 2, 3, 4]);
        tridiagonal_eigen(&mut ev, &off, &mut z).unwrap();
        for k in 0..5 {
            let v = nalgebra::DVector::from_iterator(5, (0..5).map(|r| z[r][k]));
            assert!((&dense * &v - &v * ev[k]).norm() < 1e-12);
        }
    }

    #[test]
    fn krylov_agrees_with_dense_basis() {
        let gen = rough_generator();
        let basis = Eigenbasis::dense(&gen).unwrap();
        let x = gen.vertex_at(Point::new(0.05, 0.02)).unwrap();
        let ts = [0.01, 0.1, 0.4];
        let rows = kernel_rows(&gen, x, &ts, 1e-11).unwrap();
        let diag = diagonal(&gen, x, &ts, 1e-11).unwrap();
        for (k, &t) in ts.iter().enumerate() {
            let exact = basis.row(t, x).unwrap();
            let scale = exact[x];
            for y in 0..gen.len() {
                assert!((rows[k].values[y] - exact[y]).abs() < 1e-8 * scale);
            }
            assert!((diag[k].value - scale).abs() < 1e-8 * scale);
        }
    }

    #[test]
    fn spectral_kernel_is_symmetric_and_a_semigroup() {
        let gen = rough_generator();
        let basis = Eigenbasis::dense(&gen).unwrap();
        let (x, y) = (10, gen.len() / 2);
        let pxy = hk_spectral(&basis, 0.05, x, y).unwrap().value;
        let pyx = hk_spectral(&basis, 0.05, y, x).unwrap().value;
        assert!((pxy - pyx).abs() <= 1e-12 * pxy.abs());
        let rx = basis.row(0.05, x).unwrap();
        let ry = basis.row(0.05, y).unwrap();
        let conv: f64 = rx.iter().zip(&ry).zip(gen.masses()).map(|((a, b), m)| a * b * m).sum();
        let p2 = hk_spectral(&basis, 0.1, x, y).unwrap().value;
        assert!((conv - p2).abs() < 1e-10 * p2);
        let total: f64 = rx.iter().zip(gen.masses()).map(|(p, m)| p * m).sum();
        assert!(total <= 1.0 && rx.iter().all(|&p| p > -1e-12));
    }

    #[test]
    fn truncated_basis_reports_or_refuses() {
        let gen = rough_generator();
        let mut basis = Eigenbasis::dense(&gen).unwrap();
        basis.truncate(40);
        assert!(hk_spectral(&basis, 1e-4, 0, 0).is_err());
        let v = hk_spectral(&basis, 0.5, 0, 0).unwrap();
        assert!(v.truncation > 0.0);
    }
}
