//! Projection fitting: find A (2×K), B (K×2), C (a×2) minimizing
//!
//! ‖F̄ᵀ − B·Z‖²_F + ‖Ȳᵀ − C·Z‖²_F,   Z = A·F̄ᵀ
//!
//! so instances land in a 2D space that linearly reconstructs both their
//! features and the algorithms' performance. The analytic path solves the
//! equivalent reduced-rank regression exactly; the numeric path runs
//! multi-start quasi-Newton descent on the same objective.

use nalgebra::DMatrix;
use rand::Rng;
use thiserror::Error;

use crate::streams;

#[derive(Debug, Clone, Copy)]
pub struct PilotConfig {
    /// Number of random restarts on the numeric path.
    pub ntry: usize,
    /// Use the numeric path instead of the analytic solution.
    pub phi_num: bool,
}

impl Default for PilotConfig {
    fn default() -> Self {
        PilotConfig {
            ntry: 30,
            phi_num: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PilotResult {
    /// Projection matrix, 2 rows of K entries.
    pub a: Vec<Vec<f64>>,
    /// Feature reconstruction, K rows of 2.
    pub b: Vec<Vec<f64>>,
    /// Performance reconstruction, `a` rows of 2.
    pub c: Vec<Vec<f64>>,
    /// Instance coordinates, one `[z1, z2]` per row of F̄.
    pub z: Vec<[f64; 2]>,
    pub objective: f64,
    /// Final objective of every numeric restart (empty on the analytic path).
    pub restart_objectives: Vec<f64>,
}

#[derive(Debug, Error, PartialEq)]
pub enum PilotError {
    #[error("feature matrix has rank < 2; no 2D projection is identifiable")]
    IllConditioned,
}

struct Problem {
    ft: DMatrix<f64>, // K×n
    yt: DMatrix<f64>, // a×n
    f: DMatrix<f64>,  // n×K
    k: usize,
    a_rows: usize,
}

impl Problem {
    fn objective(&self, a: &DMatrix<f64>, b: &DMatrix<f64>, c: &DMatrix<f64>) -> f64 {
        let z = a * &self.f.transpose();
        let r1 = &self.ft - b * &z;
        let r2 = &self.yt - c * &z;
        r1.norm_squared() + r2.norm_squared()
    }

    fn dims(&self) -> (usize, usize) {
        (self.k, self.a_rows)
    }

    fn unpack(&self, theta: &[f64]) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
        let (k, ar) = self.dims();
        let a = DMatrix::from_row_slice(2, k, &theta[..2 * k]);
        let b = DMatrix::from_row_slice(k, 2, &theta[2 * k..4 * k]);
        let c = DMatrix::from_row_slice(ar, 2, &theta[4 * k..4 * k + 2 * ar]);
        (a, b, c)
    }

    fn objective_grad(&self, theta: &[f64]) -> (f64, Vec<f64>) {
        let (a, b, c) = self.unpack(theta);
        let z = &a * &self.f.transpose(); // 2×n
        let r1 = &self.ft - &b * &z; // K×n
        let r2 = &self.yt - &c * &z; // a×n
        let obj = r1.norm_squared() + r2.norm_squared();
        let ga = (b.transpose() * &r1 + c.transpose() * &r2) * &self.f * -2.0; // 2×K
        let gb = &r1 * z.transpose() * -2.0; // K×2
        let gc = &r2 * z.transpose() * -2.0; // a×2
        let mut grad = Vec::with_capacity(theta.len());
        grad.extend(ga.row_iter().flat_map(|r| r.iter().cloned().collect::<Vec<_>>()));
        grad.extend(gb.row_iter().flat_map(|r| r.iter().cloned().collect::<Vec<_>>()));
        grad.extend(gc.row_iter().flat_map(|r| r.iter().cloned().collect::<Vec<_>>()));
        (obj, grad)
    }
}

fn to_dmatrix(rows: &[Vec<f64>]) -> DMatrix<f64> {
    let n = rows.len();
    let m = if n > 0 { rows[0].len() } else { 0 };
    DMatrix::from_fn(n, m, |i, j| rows[i][j])
}

fn rows_of(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().cloned().collect()).collect()
}

/// Fit the projection. `fbar` is n×K standardized features, `ybar` n×a
/// standardized performance. Deterministic in `(fbar, ybar, cfg, seed)`.
pub fn pilot(
    fbar: &[Vec<f64>],
    ybar: &[Vec<f64>],
    cfg: &PilotConfig,
    seed: u64,
) -> Result<PilotResult, PilotError> {
    let f = to_dmatrix(fbar);
    let y = to_dmatrix(ybar);
    let k = f.ncols();
    let a_rows = y.ncols();
    let problem = Problem {
        ft: f.transpose(),
        yt: y.transpose(),
        f: f.clone(),
        k,
        a_rows,
    };

    // Rank gate applies to both paths: a rank-deficient F̄ cannot span a
    // 2D coordinate system.
    let svd_f = f.clone().svd(false, false);
    let s = &svd_f.singular_values;
    if s.len() < 2 || s[1] <= 1e-10 * s[0].max(1e-300) {
        return Err(PilotError::IllConditioned);
    }

    let (a, b, c, restart_objectives) = if cfg.phi_num {
        numeric_fit(&problem, cfg.ntry, seed)
    } else {
        analytic_fit(&problem, &f, &y)?
    };

    let z_mat = &a * &f.transpose();
    let z = (0..f.nrows()).map(|i| [z_mat[(0, i)], z_mat[(1, i)]]).collect();
    let objective = problem.objective(&a, &b, &c);
    Ok(PilotResult {
        a: rows_of(&a),
        b: rows_of(&b),
        c: rows_of(&c),
        z,
        objective,
        restart_objectives,
    })
}

type Fit = (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>, Vec<f64>);

/// Reduced-rank regression of [F̄ | Ȳ]ᵀ on F̄ᵀ: take the unconstrained
/// least-squares map, keep its top-2 left singular directions, then
/// re-solve B and C by least squares given the resulting Z.
fn analytic_fit(problem: &Problem, f: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<Fit, PilotError> {
    let n = f.nrows();
    let k = f.ncols();
    let d_stack = {
        let mut d = DMatrix::zeros(n, k + y.ncols());
        d.view_mut((0, 0), (n, k)).copy_from(f);
        d.view_mut((0, k), (n, y.ncols())).copy_from(y);
        d
    };
    let pinv_f = f
        .clone()
        .svd(true, true)
        .pseudo_inverse(1e-12)
        .map_err(|_| PilotError::IllConditioned)?; // K×n
    let m_ols = d_stack.transpose() * pinv_f.transpose(); // (K+a)×K
    let h = &m_ols * f.transpose(); // (K+a)×n
    let svd_h = h.svd(true, false);
    let u = svd_h.u.as_ref().ok_or(PilotError::IllConditioned)?;
    if svd_h.singular_values.len() < 2
        || svd_h.singular_values[1] <= 1e-12 * svd_h.singular_values[0].max(1e-300)
    {
        return Err(PilotError::IllConditioned);
    }
    let u2 = u.columns(0, 2).into_owned(); // (K+a)×2
    let a = u2.transpose() * &m_ols; // 2×K
    let z = &a * f.transpose(); // 2×n
    let zzt = &z * z.transpose();
    let zzt_inv = zzt.try_inverse().ok_or(PilotError::IllConditioned)?;
    let g = d_stack.transpose() * z.transpose() * zzt_inv; // (K+a)×2
    let b = g.rows(0, k).into_owned();
    let c = g.rows(k, problem.a_rows).into_owned();
    Ok((a, b, c, Vec::new()))
}

fn numeric_fit(problem: &Problem, ntry: usize, seed: u64) -> Fit {
    let (k, ar) = problem.dims();
    let dim = 4 * k + 2 * ar;
    let scale = 1.0 / (k as f64).sqrt();
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut restart_objectives = Vec::with_capacity(ntry);
    for r in 0..ntry {
        let mut rng = streams::stream(seed, streams::TAG_PILOT, r as u64);
        let x0: Vec<f64> = (0..dim).map(|_| normal(&mut rng) * scale).collect();
        let (x, obj) = lbfgs(|t| problem.objective_grad(t), x0);
        restart_objectives.push(obj);
        if best.as_ref().map_or(true, |(bo, _)| obj < *bo) {
            best = Some((obj, x));
        }
    }
    let (_, x) = best.unwrap();
    let (a, b, c) = problem.unpack(&x);
    (a, b, c, restart_objectives)
}

fn normal(rng: &mut impl Rng) -> f64 {
    let u1: f64 = rng.gen_range(1e-12f64..1.0);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Limited-memory BFGS with Armijo backtracking.
fn lbfgs(f: impl Fn(&[f64]) -> (f64, Vec<f64>), mut x: Vec<f64>) -> (Vec<f64>, f64) {
    const MEMORY: usize = 8;
    const MAX_ITER: usize = 2000;
    let (mut fx, mut g) = f(&x);
    let mut history: std::collections::VecDeque<(Vec<f64>, Vec<f64>, f64)> = Default::default();
    for _ in 0..MAX_ITER {
        let g_inf = g.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
        if g_inf < 1e-8 * fx.abs().max(1.0) {
            break;
        }
        // Two-loop recursion for the search direction.
        let mut d: Vec<f64> = g.iter().map(|&v| -v).collect();
        let mut alphas = Vec::with_capacity(history.len());
        for (s, yv, rho) in history.iter().rev() {
            let alpha = rho * dot(s, &d);
            for (di, yi) in d.iter_mut().zip(yv) {
                *di -= alpha * yi;
            }
            alphas.push(alpha);
        }
        if let Some((s, yv, _)) = history.back() {
            let gamma = dot(s, yv) / dot(yv, yv).max(1e-300);
            for di in d.iter_mut() {
                *di *= gamma;
            }
        }
        for ((s, yv, rho), alpha) in history.iter().zip(alphas.into_iter().rev()) {
            let beta = rho * dot(yv, &d);
            for (di, si) in d.iter_mut().zip(s) {
                *di += (alpha - beta) * si;
            }
        }
        let mut slope = dot(&g, &d);
        if slope >= 0.0 {
            d = g.iter().map(|&v| -v).collect();
            slope = -dot(&g, &g);
            history.clear();
        }
        // Backtracking line search.
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..50 {
            let xt: Vec<f64> = x.iter().zip(&d).map(|(xi, di)| xi + t * di).collect();
            let (ft, gt) = f(&xt);
            if ft <= fx + 1e-4 * t * slope {
                accepted = Some((xt, ft, gt));
                break;
            }
            t *= 0.5;
        }
        let Some((xt, ft, gt)) = accepted else { break };
        let s: Vec<f64> = xt.iter().zip(&x).map(|(a, b)| a - b).collect();
        let yv: Vec<f64> = gt.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &yv);
        if sy > 1e-10 {
            if history.len() == MEMORY {
                history.pop_front();
            }
            history.push_back((s, yv, 1.0 / sy));
        }
        x = xt;
        fx = ft;
        g = gt;
    }
    (x, fx)
}

fn dot(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| a * b).sum()
}

/// Scaled max-norm of the finite-difference gradient at (A, B, C): the
/// first-order stationarity residual a correct fit must drive below 1e-5.
pub fn stationarity_residual(
    fbar: &[Vec<f64>],
    ybar: &[Vec<f64>],
    a: &[Vec<f64>],
    b: &[Vec<f64>],
    c: &[Vec<f64>],
) -> f64 {
    let f = to_dmatrix(fbar);
    let problem = Problem {
        ft: f.transpose(),
        yt: to_dmatrix(ybar).transpose(),
        f,
        k: a[0].len(),
        a_rows: c.len(),
    };
    let mut theta: Vec<f64> = Vec::new();
    for m in [a, b, c] {
        for row in m {
            theta.extend(row);
        }
    }
    let (a0, b0, c0) = problem.unpack(&theta);
    let obj = problem.objective(&a0, &b0, &c0);
    let scale = obj.abs().max(1.0);
    let mut worst = 0.0f64;
    for i in 0..theta.len() {
        let h = 1e-6 * theta[i].abs().max(1.0);
        let mut plus = theta.clone();
        plus[i] += h;
        let mut minus = theta.clone();
        minus[i] -= h;
        let (ap, bp, cp) = problem.unpack(&plus);
        let (am, bm, cm) = problem.unpack(&minus);
        let fd = (problem.objective(&ap, &bp, &cp) - problem.objective(&am, &bm, &cm)) / (2.0 * h);
        worst = worst.max(fd.abs() / scale);
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_standardized(n: usize, m: usize, tag_index: u64) -> Vec<Vec<f64>> {
        let mut rng = crate::streams::stream(77, crate::streams::TAG_SYNTHETIC, tag_index);
        let mut rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..m).map(|_| rng.gen_range(-2.0f64..2.0)).collect())
            .collect();
        // Column z-score so the inputs look like pipeline output.
        for j in 0..m {
            let col: Vec<f64> = rows.iter().map(|r| r[j]).collect();
            let mean = col.iter().sum::<f64>() / n as f64;
            let sd = (col.iter().map(|&x| (x - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0)).sqrt();
            for r in rows.iter_mut() {
                r[j] = (r[j] - mean) / sd;
            }
        }
        rows
    }

    #[test]
    fn rank_two_data_is_reconstructed_exactly() {
        let f = random_standardized(40, 2, 0);
        let y = f.clone();
        let r = pilot(&f, &y, &PilotConfig::default(), 1).unwrap();
        assert!(r.objective < 1e-18, "objective {}", r.objective);
        let rn = pilot(&f, &y, &PilotConfig { phi_num: true, ntry: 5 }, 1).unwrap();
        assert!(rn.objective < 1e-9, "numeric objective {}", rn.objective);
        assert_eq!(rn.restart_objectives.len(), 5);
    }

    #[test]
    fn duplicated_instances_get_identical_coordinates() {
        let mut f = random_standardized(30, 4, 1);
        let mut y = random_standardized(30, 2, 2);
        f.push(f[7].clone());
        y.push(y[7].clone());
        let r = pilot(&f, &y, &PilotConfig::default(), 3).unwrap();
        let last = r.z.len() - 1;
        assert!((r.z[7][0] - r.z[last][0]).abs() < 1e-12);
        assert!((r.z[7][1] - r.z[last][1]).abs() < 1e-12);
    }

    #[test]
    fn analytic_beats_or_ties_numeric() {
        let f = random_standardized(50, 5, 3);
        let y = random_standardized(50, 2, 4);
        let analytic = pilot(&f, &y, &PilotConfig::default(), 7).unwrap();
        let numeric = pilot(&f, &y, &PilotConfig { phi_num: true, ntry: 30 }, 7).unwrap();
        assert!(
            analytic.objective <= numeric.objective + 1e-6,
            "analytic {} vs numeric {}",
            analytic.objective,
            numeric.objective
        );
        for r in [&analytic, &numeric] {
            let resid = stationarity_residual(&f, &y, &r.a, &r.b, &r.c);
            assert!(resid < 1e-5, "stationarity residual {resid}");
        }
    }

    #[test]
    fn objective_matches_direct_recomputation() {
        let f = random_standardized(25, 4, 5);
        let y = random_standardized(25, 3, 6);
        let r = pilot(&f, &y, &PilotConfig::default(), 2).unwrap();
        // Independent elementwise recomputation.
        let k = 4;
        let mut direct = 0.0;
        for (i, frow) in f.iter().enumerate() {
            for j in 0..k {
                let rec: f64 = r.b[j][0] * r.z[i][0] + r.b[j][1] * r.z[i][1];
                direct += (frow[j] - rec).powi(2);
            }
            for (aj, yrow) in y[i].iter().enumerate() {
                let rec: f64 = r.c[aj][0] * r.z[i][0] + r.c[aj][1] * r.z[i][1];
                direct += (yrow - rec).powi(2);
            }
        }
        assert!((direct - r.objective).abs() < 1e-9, "direct {direct} vs {}", r.objective);
    }

    #[test]
    fn rank_deficient_features_are_rejected() {
        // All feature columns multiples of one vector.
        let base: Vec<f64> = (0..20).map(|i| (i as f64 * 0.37).sin()).collect();
        let f: Vec<Vec<f64>> = base.iter().map(|&v| vec![v, 2.0 * v, -v]).collect();
        let y = random_standardized(20, 2, 7);
        assert_eq!(pilot(&f, &y, &PilotConfig::default(), 1).unwrap_err(), PilotError::IllConditioned);
        assert_eq!(
            pilot(&f, &y, &PilotConfig { phi_num: true, ntry: 2 }, 1).unwrap_err(),
            PilotError::IllConditioned
        );
    }

    #[test]
    fn analytic_gradient_matches_finite_differences() {
        let f = random_standardized(12, 3, 8);
        let y = random_standardized(12, 2, 9);
        let problem = Problem {
            ft: to_dmatrix(&f).transpose(),
            yt: to_dmatrix(&y).transpose(),
            f: to_dmatrix(&f),
            k: 3,
            a_rows: 2,
        };
        let mut rng = crate::streams::stream(5, crate::streams::TAG_SYNTHETIC, 13);
        let dim = 4 * 3 + 2 * 2;
        let theta: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0f64..1.0)).collect();
        let (_, grad) = problem.objective_grad(&theta);
        for i in 0..dim {
            let h = 1e-6;
            let mut plus = theta.clone();
            plus[i] += h;
            let mut minus = theta.clone();
            minus[i] -= h;
            let (ap, bp, cp) = problem.unpack(&plus);
            let (am, bm, cm) = problem.unpack(&minus);
            let fd = (problem.objective(&ap, &bp, &cp) - problem.objective(&am, &bm, &cm)) / (2.0 * h);
            assert!(
                (fd - grad[i]).abs() < 1e-4 * fd.abs().max(1.0),
                "component {i}: fd {fd} vs analytic {}",
                grad[i]
            );
        }
    }

    #[test]
    fn fit_is_deterministic() {
        let f = random_standardized(30, 4, 10);
        let y = random_standardized(30, 2, 11);
        let cfg = PilotConfig { phi_num: true, ntry: 6 };
        let r1 = pilot(&f, &y, &cfg, 5).unwrap();
        let r2 = pilot(&f, &y, &cfg, 5).unwrap();
        assert_eq!(r1.objective, r2.objective);
        assert_eq!(r1.z, r2.z);
    }
}
