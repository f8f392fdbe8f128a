//! Independent reference implementations used by the integration and
//! acceptance tests. Nothing here calls into the projection, prox or solver code
//! under test.

#![allow(dead_code)]

use gsmtl::model::{self, LatentModel, MultiTaskDataset, ProblemKind, Task};
use gsmtl::GroupStructure;
use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gauss(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

pub fn gauss_vec(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Array1<f64> {
    Array1::from_shape_fn(n, |_| scale * gauss(rng))
}

pub fn gauss_mat(rng: &mut ChaCha8Rng, r: usize, c: usize, scale: f64) -> Array2<f64> {
    Array2::from_shape_fn((r, c), |_| scale * gauss(rng))
}

pub fn linf(a: &Array1<f64>, b: &Array1<f64>) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn fro(m: &Array2<f64>) -> f64 {
    m.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Random groups covering `0..n`. With `overlapping` every group draws a random
/// subset and uncovered coordinates are appended to random groups; otherwise a
/// random partition.
pub fn random_groups(rng: &mut ChaCha8Rng, n: usize, max_groups: usize, overlapping: bool) -> GroupStructure {
    let g = rng.random_range(1..=max_groups.min(n));
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); g];
    if overlapping {
        for grp in groups.iter_mut() {
            for i in 0..n {
                if rng.random_bool(0.5) {
                    grp.push(i);
                }
            }
        }
        for i in 0..n {
            if !groups.iter().any(|grp| grp.contains(&i)) {
                let j = rng.random_range(0..g);
                groups[j].push(i);
            }
        }
        for grp in groups.iter_mut() {
            if grp.is_empty() {
                grp.push(rng.random_range(0..n));
            }
        }
    } else {
        let mut perm: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            perm.swap(i, rng.random_range(0..=i));
        }
        // first g coordinates seed the groups so none is empty
        for (i, &c) in perm.iter().enumerate() {
            let j = if i < g { i } else { rng.random_range(0..g) };
            groups[j].push(c);
        }
    }
    GroupStructure::new(groups, n).unwrap()
}

/// Random overlapping groups guaranteed to have at least one shared coordinate.
pub fn random_overlapping_groups(rng: &mut ChaCha8Rng, n: usize, max_groups: usize) -> GroupStructure {
    loop {
        let g = random_groups(rng, n, max_groups, true);
        if g.is_overlapping() {
            return g;
        }
    }
}

fn l2(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

/// Prox of `t ||.||_G` by accelerated proximal gradient on the lifted problem
/// `min_w sum_G ||w_G|| + ||sum_G w_G - x||^2 / (2t)`, whose minimizers give
/// `prox(x) = sum_G w_G`. Uses adaptive restart and stops on a tiny gradient map.
pub fn prox_oracle(x: &Array1<f64>, groups: &GroupStructure, t: f64) -> Array1<f64> {
    let n = x.len();
    let gs = groups.groups();
    let max_count = (0..n)
        .map(|i| gs.iter().filter(|g| g.contains(&i)).count())
        .max()
        .unwrap() as f64;
    let step = t / max_count;
    // flattened latent copies: slot j belongs to coordinate idx[j], group spans[g]
    let idx: Vec<usize> = gs.iter().flatten().copied().collect();
    let mut spans = Vec::with_capacity(gs.len());
    let mut start = 0;
    for g in gs {
        spans.push(start..start + g.len());
        start += g.len();
    }
    let m = idx.len();
    let assemble = |w: &[f64], u: &mut [f64]| {
        u.fill(0.0);
        for (&i, &v) in idx.iter().zip(w) {
            u[i] += v;
        }
    };
    let mut u = vec![0.0; n];
    let mut value = |w: &[f64]| {
        assemble(w, &mut u);
        let fit: f64 = u.iter().zip(x.iter()).map(|(a, b)| (a - b) * (a - b)).sum();
        spans.iter().map(|r| l2(&w[r.clone()])).sum::<f64>() + fit / (2.0 * t)
    };
    let mut w = vec![0.0; m];
    let mut y = w.clone();
    let mut next = vec![0.0; m];
    let mut r = vec![0.0; n];
    let mut theta = 1.0f64;
    let mut last = value(&w);
    for _ in 0..2_000_000 {
        assemble(&y, &mut r);
        for (ri, xi) in r.iter_mut().zip(x.iter()) {
            *ri = (*ri - xi) / t;
        }
        let mut moved = 0.0f64;
        for span in &spans {
            for j in span.clone() {
                next[j] = y[j] - step * r[idx[j]];
            }
            let nz = l2(&next[span.clone()]);
            let shrink = if nz <= step { 0.0 } else { 1.0 - step / nz };
            for j in span.clone() {
                next[j] *= shrink;
                moved = moved.max((next[j] - w[j]).abs());
            }
        }
        let v = value(&next);
        let theta_next = 0.5 * (1.0 + (1.0 + 4.0 * theta * theta).sqrt());
        if v > last {
            // restart momentum
            theta = 1.0;
            y.copy_from_slice(&w);
            continue;
        }
        let coef = (theta - 1.0) / theta_next;
        for j in 0..m {
            y[j] = next[j] + coef * (next[j] - w[j]);
        }
        std::mem::swap(&mut w, &mut next);
        theta = theta_next;
        last = v;
        if moved < 1e-15 {
            break;
        }
    }
    let mut out = vec![0.0; n];
    assemble(&w, &mut out);
    Array1::from_vec(out)
}

/// Euclidean projection onto `{ v : ||v_G|| <= t for all G }` by projected
/// gradient ascent on the concave dual over the group multipliers `eta >= 0`:
/// `D(eta) = sum_i x_i^2 a_i / (2 (1 + a_i)) - t^2/2 sum_G eta_G`,
/// `a_i = sum_{G contains i} eta_G`, with primal point `v_i = x_i / (1 + a_i)`.
pub fn projection_qp_oracle(x: &Array1<f64>, groups: &GroupStructure, t: f64) -> Array1<f64> {
    let gs = groups.groups();
    let n = x.len();
    let primal = |eta: &[f64]| {
        let mut a = vec![0.0; n];
        for (g, &e) in gs.iter().zip(eta) {
            for &i in g {
                a[i] += e;
            }
        }
        Array1::from_shape_fn(n, |i| x[i] / (1.0 + a[i]))
    };
    let dual = |eta: &[f64]| {
        let mut a = vec![0.0; n];
        for (g, &e) in gs.iter().zip(eta) {
            for &i in g {
                a[i] += e;
            }
        }
        (0..n).map(|i| 0.5 * x[i] * x[i] * a[i] / (1.0 + a[i])).sum::<f64>()
            - 0.5 * t * t * eta.iter().sum::<f64>()
    };
    let grad = |eta: &[f64]| {
        let v = primal(eta);
        gs.iter()
            .map(|g| 0.5 * (g.iter().map(|&i| v[i] * v[i]).sum::<f64>() - t * t))
            .collect::<Vec<f64>>()
    };
    let mut eta = vec![0.0; gs.len()];
    let mut d = dual(&eta);
    let mut step = 1.0;
    for _ in 0..1_000_000 {
        let gr = grad(&eta);
        let mut accepted = false;
        let mut cand = eta.clone();
        for _ in 0..100 {
            cand = eta.iter().zip(&gr).map(|(e, g)| (e + step * g).max(0.0)).collect();
            let dc = dual(&cand);
            let lin: f64 = cand.iter().zip(&eta).zip(&gr).map(|((c, e), g)| g * (c - e)).sum();
            let sq: f64 = cand.iter().zip(&eta).map(|(c, e)| (c - e) * (c - e)).sum();
            if dc >= d + lin - sq / (2.0 * step) - 1e-18 {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        let moved = cand.iter().zip(&eta).map(|(c, e)| (c - e).abs()).fold(0.0, f64::max);
        if !accepted || moved < 1e-16 {
            eta = cand;
            break;
        }
        eta = cand;
        d = dual(&eta);
        step *= 2.0;
    }
    // function values stop resolving progress near the optimum; finish with the
    // fixed step 1/L, L = (number of groups) * ||x||^2 bounding the dual curvature
    let lip = gs.len() as f64 * x.dot(x) + 1e-300;
    for _ in 0..1_000_000 {
        let gr = grad(&eta);
        let next: Vec<f64> = eta.iter().zip(&gr).map(|(e, g)| (e + g / lip).max(0.0)).collect();
        let moved = next.iter().zip(&eta).map(|(c, e)| (c - e).abs()).fold(0.0, f64::max);
        eta = next;
        if moved <= 1e-17 * (1.0 + eta.iter().fold(0.0f64, |m, e| m.max(*e))) {
            break;
        }
    }
    primal(&eta)
}

/// Lasso `min_b ||y - A b||^2 + mu ||b||_1` by cyclic coordinate descent.
pub fn lasso_cd(a: &Array2<f64>, y: &Array1<f64>, mu: f64, sweeps: usize) -> Array1<f64> {
    let p = a.ncols();
    let mut b = Array1::<f64>::zeros(p);
    let mut r = y.clone();
    let col_sq: Vec<f64> = (0..p).map(|j| a.column(j).dot(&a.column(j))).collect();
    for _ in 0..sweeps {
        let mut moved = 0.0f64;
        for j in 0..p {
            if col_sq[j] == 0.0 {
                continue;
            }
            let old = b[j];
            let rho = a.column(j).dot(&r) + col_sq[j] * old;
            // minimizer of col_sq b^2 - 2 rho b + mu |b|
            let new = if rho > mu / 2.0 {
                (rho - mu / 2.0) / col_sq[j]
            } else if rho < -mu / 2.0 {
                (rho + mu / 2.0) / col_sq[j]
            } else {
                0.0
            };
            if new != old {
                r.scaled_add(old - new, &a.column(j));
                b[j] = new;
                moved = moved.max((new - old).abs());
            }
        }
        if moved < 1e-14 {
            break;
        }
    }
    b
}

/// Dense Gaussian elimination with partial pivoting.
pub fn solve_dense(mut a: Array2<f64>, mut b: Array1<f64>) -> Array1<f64> {
    let n = b.len();
    for c in 0..n {
        let piv = (c..n).max_by(|&i, &j| a[[i, c]].abs().total_cmp(&a[[j, c]].abs())).unwrap();
        if piv != c {
            for k in 0..n {
                a.swap([c, k], [piv, k]);
            }
            b.swap(c, piv);
        }
        for r in c + 1..n {
            let f = a[[r, c]] / a[[c, c]];
            if f != 0.0 {
                for k in c..n {
                    a[[r, k]] -= f * a[[c, k]];
                }
                b[r] -= f * b[c];
            }
        }
    }
    let mut x = Array1::zeros(n);
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|k| a[[r, k]] * x[k]).sum();
        x[r] = (b[r] - s) / a[[r, r]];
    }
    x
}

/// Ridge `min_w ||X w - y||^2 + reg ||w||^2` by the normal equations.
pub fn ridge(x: &Array2<f64>, y: &Array1<f64>, reg: f64) -> Array1<f64> {
    let mut g = x.t().dot(x);
    for i in 0..g.nrows() {
        g[[i, i]] += reg;
    }
    solve_dense(g, x.t().dot(y))
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, descending.
pub fn jacobi_eigenvalues(mut a: Array2<f64>) -> Vec<f64> {
    let n = a.nrows();
    for _ in 0..200 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[[i, j]] * a[[i, j]])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[[p, q]].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[[q, q]] - a[[p, p]]) / (2.0 * a[[p, q]]);
                let tt = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let tt = if theta == 0.0 { 1.0 } else { tt };
                let c = 1.0 / (tt * tt + 1.0).sqrt();
                let s = tt * c;
                for k in 0..n {
                    let akp = a[[k, p]];
                    let akq = a[[k, q]];
                    a[[k, p]] = c * akp - s * akq;
                    a[[k, q]] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[[p, k]];
                    let aqk = a[[q, k]];
                    a[[p, k]] = c * apk - s * aqk;
                    a[[q, k]] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| a[[i, i]]).collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    ev
}

/// Singular values of `w` (descending) from the eigenvalues of `w' w`.
pub fn singular_values(w: &Array2<f64>) -> Vec<f64> {
    let gram = if w.nrows() >= w.ncols() { w.t().dot(w) } else { w.dot(&w.t()) };
    jacobi_eigenvalues(gram).into_iter().map(|e| e.max(0.0).sqrt()).collect()
}

/// Objective of the model evaluated term by term with scalar loops.
pub fn smooth_value(l: &Array2<f64>, s: &Array2<f64>, data: &MultiTaskDataset, lambda: f64) -> f64 {
    let w = l.dot(s);
    let mut total = 0.0;
    for (t, task) in data.tasks().iter().enumerate() {
        for (row, &y) in task.x.rows().into_iter().zip(task.y.iter()) {
            let z: f64 = row.iter().zip(w.column(t)).map(|(a, b)| a * b).sum();
            total += match data.kind() {
                ProblemKind::Regression => (z - y) * (z - y),
                ProblemKind::BinaryClassification => (1.0 + (-y * z).exp()).ln(),
            };
        }
    }
    total + lambda * l.iter().map(|v| v * v).sum::<f64>()
}

/// Central finite-difference gradient of `f` at `m` with step `1e-6 (1 + |m_ij|)`.
pub fn fd_gradient(m: &Array2<f64>, f: impl Fn(&Array2<f64>) -> f64) -> Array2<f64> {
    let mut g = Array2::zeros(m.raw_dim());
    for idx in ndarray::indices(m.raw_dim()) {
        let h = 1e-6 * (1.0 + m[idx].abs());
        let mut p = m.clone();
        p[idx] += h;
        let mut q = m.clone();
        q[idx] -= h;
        g[idx] = (f(&p) - f(&q)) / (2.0 * h);
    }
    g
}

/// A random multi-task dataset with Gaussian features.
pub fn random_dataset(rng: &mut ChaCha8Rng, n_tasks: usize, d: usize, n: usize, kind: ProblemKind) -> MultiTaskDataset {
    let tasks = (0..n_tasks)
        .map(|_| {
            let x = gauss_mat(rng, n, d, 1.0);
            let w = gauss_vec(rng, d, 1.0);
            let clean = x.dot(&w);
            let y = match kind {
                ProblemKind::Regression => clean.mapv(|v| v + 0.1 * gauss(rng)),
                ProblemKind::BinaryClassification => clean.mapv(|v| if v + 0.5 * gauss(rng) >= 0.0 { 1.0 } else { -1.0 }),
            };
            Task { x, y }
        })
        .collect();
    MultiTaskDataset::new(tasks, kind).unwrap()
}

pub fn random_model(rng: &mut ChaCha8Rng, d: usize, k: usize, t: usize, scale: f64) -> LatentModel {
    LatentModel::new(gauss_mat(rng, d, k, scale), gauss_mat(rng, k, t, scale)).unwrap()
}

/// Data loss via the library's public scalar loss, used to cross-check `smooth_value`.
pub fn library_loss(model: &LatentModel, data: &MultiTaskDataset) -> f64 {
    model::data_loss(model, data).unwrap()
}
