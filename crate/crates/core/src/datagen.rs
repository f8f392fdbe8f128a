//! Seeded synthetic generators, k-means task grouping and per-task splits.

use ndarray::{Array1, Array2};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::groups::GroupStructure;
use crate::model::{LatentModel, MultiTaskDataset, ProblemKind, Task};

/// A generated dataset together with the task groups and model it was planted from.
#[derive(Debug, Clone)]
pub struct Generated {
    pub data: MultiTaskDataset,
    pub groups: GroupStructure,
    pub truth: LatentModel,
}

/// Feature-cluster regression generator with a planted group-sparse latent model.
///
/// Features: `g` cluster centers are drawn from `U(0,1)^m`; features are split
/// into `g` contiguous blocks (adjacent blocks share `feature_overlap` features)
/// and coordinate `i` of every sample is drawn from `N(center_k[i], sigma)` for a
/// block `k` containing `i`, picked uniformly per sample when `i` lies in several.
///
/// Labels: tasks are split into `g` contiguous groups; latent row `r` is active
/// only on task group `r mod g`, and `y = x' L* s*_t + N(0, label_noise)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Synthetic1Config {
    pub m: usize,
    pub g: usize,
    pub n_tasks: usize,
    pub n_per_task: usize,
    pub sigma: f64,
    pub label_noise: f64,
    pub k_true: usize,
    pub feature_overlap: usize,
    pub seed: u64,
}

impl Default for Synthetic1Config {
    fn default() -> Self {
        Self {
            m: 20,
            g: 3,
            n_tasks: 10,
            n_per_task: 20,
            sigma: 1.0,
            label_noise: 1.0,
            k_true: 3,
            feature_overlap: 0,
            seed: 0,
        }
    }
}

impl Synthetic1Config {
    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("m", self.m),
            ("g", self.g),
            ("n_tasks", self.n_tasks),
            ("n_per_task", self.n_per_task),
            ("k_true", self.k_true),
        ];
        for (name, v) in counts {
            if v == 0 {
                return Err(Error::InvalidParameter(format!("{name} must be >= 1")));
            }
        }
        if self.g > self.m || self.g > self.n_tasks {
            return Err(Error::InvalidParameter(format!(
                "g = {} must not exceed m = {} or the task count {}",
                self.g, self.m, self.n_tasks
            )));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::InvalidParameter("sigma must be >= 0".into()));
        }
        if !(self.label_noise >= 0.0 && self.label_noise.is_finite()) {
            return Err(Error::InvalidParameter("label_noise must be >= 0".into()));
        }
        Ok(())
    }

    /// Feature blocks over `0..m`.
    pub fn feature_groups(&self) -> Result<GroupStructure> {
        let base = GroupStructure::contiguous(self.m, self.g)?;
        if self.feature_overlap == 0 {
            return Ok(base);
        }
        let blocks = base
            .groups()
            .iter()
            .map(|b| {
                let end = (b[b.len() - 1] + 1 + self.feature_overlap).min(self.m);
                (b[0]..end).collect()
            })
            .collect();
        GroupStructure::new(blocks, self.m)
    }
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

pub fn gen_synthetic1(cfg: &Synthetic1Config) -> Result<Generated> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let feature_groups = cfg.feature_groups()?;
    let centers = Array2::from_shape_fn((cfg.g, cfg.m), |_| rng.random::<f64>());
    // groups containing each feature
    let mut owners = vec![Vec::new(); cfg.m];
    for (k, block) in feature_groups.groups().iter().enumerate() {
        for &i in block {
            owners[i].push(k);
        }
    }

    let task_groups = GroupStructure::contiguous(cfg.n_tasks, cfg.g)?;
    let membership = task_groups.membership().expect("contiguous groups are disjoint");
    let l_true = Array2::from_shape_fn((cfg.m, cfg.k_true), |_| normal(&mut rng));
    let mut s_true = Array2::zeros((cfg.k_true, cfg.n_tasks));
    for r in 0..cfg.k_true {
        for t in 0..cfg.n_tasks {
            if membership[t] == r % cfg.g {
                s_true[[r, t]] = normal(&mut rng);
            }
        }
    }
    let truth = LatentModel::new(l_true, s_true)?;
    let w = truth.weights();

    let noise = Normal::new(0.0, cfg.label_noise.max(0.0))
        .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let mut tasks = Vec::with_capacity(cfg.n_tasks);
    for t in 0..cfg.n_tasks {
        let mut x = Array2::zeros((cfg.n_per_task, cfg.m));
        for mut row in x.rows_mut() {
            for (i, v) in row.iter_mut().enumerate() {
                let k = match owners[i].as_slice() {
                    [only] => *only,
                    many => many[rng.random_range(0..many.len())],
                };
                *v = centers[[k, i]] + cfg.sigma * normal(&mut rng);
            }
        }
        let clean = x.dot(&w.column(t));
        let y = clean.mapv(|v| {
            if cfg.label_noise > 0.0 {
                v + noise.sample(&mut rng)
            } else {
                v
            }
        });
        tasks.push(Task { x, y });
    }
    Ok(Generated {
        data: MultiTaskDataset::new(tasks, ProblemKind::Regression)?,
        groups: task_groups,
        truth,
    })
}

/// Two task groups (the first `ceil(T/2)` tasks, then the rest) sharing two
/// orthogonal unit weight directions scaled by `margin`. Features are standard
/// normal and labels are `sign(margin * w_group' x + N(0, 1))`, with `sign(0) = +1`.
pub fn gen_two_group_classification(
    n_tasks: usize,
    d: usize,
    n_per_task: usize,
    margin: f64,
    seed: u64,
) -> Result<Generated> {
    if n_tasks < 2 {
        return Err(Error::InvalidParameter("two-group generator needs at least 2 tasks".into()));
    }
    if d < 2 || n_per_task == 0 {
        return Err(Error::InvalidParameter(
            "two-group generator needs d >= 2 and at least one sample per task".into(),
        ));
    }
    if !(margin >= 0.0 && margin.is_finite()) {
        return Err(Error::InvalidParameter("margin must be >= 0".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut a = Array1::from_shape_fn(d, |_| normal(&mut rng));
    a /= a.dot(&a).sqrt();
    let mut b = Array1::from_shape_fn(d, |_| normal(&mut rng));
    let proj = b.dot(&a);
    b.scaled_add(-proj, &a);
    b /= b.dot(&b).sqrt();

    let first = n_tasks.div_ceil(2);
    let groups = GroupStructure::new(
        vec![(0..first).collect(), (first..n_tasks).collect()],
        n_tasks,
    )?;
    let mut l = Array2::zeros((d, 2));
    l.column_mut(0).assign(&a);
    l.column_mut(1).assign(&b);
    let s = Array2::from_shape_fn((2, n_tasks), |(r, t)| {
        if (t < first) == (r == 0) {
            margin
        } else {
            0.0
        }
    });
    let truth = LatentModel::new(l, s)?;
    let w = truth.weights();

    let mut tasks = Vec::with_capacity(n_tasks);
    for t in 0..n_tasks {
        let x = Array2::from_shape_fn((n_per_task, d), |_| normal(&mut rng));
        let score = x.dot(&w.column(t));
        let y = score.mapv(|v| if v + normal(&mut rng) >= 0.0 { 1.0 } else { -1.0 });
        tasks.push(Task { x, y });
    }
    Ok(Generated {
        data: MultiTaskDataset::new(tasks, ProblemKind::BinaryClassification)?,
        groups,
        truth,
    })
}

// ---------------------------------------------------------------------------
// k-means grouping

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KMeansConfig {
    pub g: usize,
    pub max_iter: usize,
    pub restarts: usize,
    pub seed: u64,
}

impl KMeansConfig {
    pub fn new(g: usize, seed: u64) -> Self {
        Self {
            g,
            max_iter: 100,
            restarts: 10,
            seed,
        }
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Lloyd's algorithm from k-means++ seeding. Returns the assignment and the
/// within-cluster sum of squares.
fn lloyd(points: &[Vec<f64>], g: usize, max_iter: usize, rng: &mut ChaCha8Rng) -> (Vec<usize>, f64) {
    let n = points.len();
    let mut centers: Vec<Vec<f64>> = Vec::with_capacity(g);
    centers.push(points[rng.random_range(0..n)].clone());
    while centers.len() < g {
        let d2: Vec<f64> = points
            .iter()
            .map(|p| centers.iter().map(|c| sq_dist(p, c)).fold(f64::INFINITY, f64::min))
            .collect();
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                if target < w {
                    chosen = i;
                    break;
                }
                target -= w;
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        centers.push(points[pick].clone());
    }

    let mut assign = vec![usize::MAX; n];
    for _ in 0..max_iter {
        let mut changed = false;
        for (i, p) in points.iter().enumerate() {
            let best = (0..g)
                .min_by(|&a, &b| sq_dist(p, &centers[a]).total_cmp(&sq_dist(p, &centers[b])))
                .unwrap();
            if assign[i] != best {
                assign[i] = best;
                changed = true;
            }
        }
        // refill empty clusters with the point farthest from its center
        for c in 0..g {
            if !assign.contains(&c) {
                let far = (0..n)
                    .filter(|&i| assign.iter().filter(|&&a| a == assign[i]).count() > 1)
                    .max_by(|&a, &b| {
                        sq_dist(&points[a], &centers[assign[a]])
                            .total_cmp(&sq_dist(&points[b], &centers[assign[b]]))
                    });
                if let Some(i) = far {
                    assign[i] = c;
                    changed = true;
                }
            }
        }
        for (c, center) in centers.iter_mut().enumerate() {
            let members: Vec<&Vec<f64>> = points
                .iter()
                .zip(&assign)
                .filter(|(_, &a)| a == c)
                .map(|(p, _)| p)
                .collect();
            if members.is_empty() {
                continue;
            }
            for (j, v) in center.iter_mut().enumerate() {
                *v = members.iter().map(|p| p[j]).sum::<f64>() / members.len() as f64;
            }
        }
        if !changed {
            break;
        }
    }
    let wcss = points
        .iter()
        .zip(&assign)
        .map(|(p, &a)| sq_dist(p, &centers[a]))
        .sum();
    (assign, wcss)
}

/// Clusters tasks by their mean feature vectors into `cfg.g` disjoint groups.
///
/// Groups are ordered by their smallest task index.
pub fn kmeans_groups(data: &MultiTaskDataset, cfg: &KMeansConfig) -> Result<GroupStructure> {
    let t = data.n_tasks();
    if cfg.g == 0 || cfg.g > t {
        return Err(Error::InvalidParameter(format!(
            "k-means group count g = {} must satisfy 1 <= g <= T = {t}",
            cfg.g
        )));
    }
    let points: Vec<Vec<f64>> = data
        .tasks()
        .iter()
        .map(|task| {
            task.x
                .mean_axis(ndarray::Axis(0))
                .expect("tasks are non-empty")
                .to_vec()
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut best: Option<(Vec<usize>, f64)> = None;
    for _ in 0..cfg.restarts.max(1) {
        let (assign, wcss) = lloyd(&points, cfg.g, cfg.max_iter.max(1), &mut rng);
        if best.as_ref().is_none_or(|(_, b)| wcss < *b) {
            best = Some((assign, wcss));
        }
    }
    let (assign, _) = best.expect("at least one restart");
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); cfg.g];
    for (i, &a) in assign.iter().enumerate() {
        groups[a].push(i);
    }
    groups.retain(|g| !g.is_empty());
    groups.sort_by_key(|g| g[0]);
    GroupStructure::new(groups, t)
}

// ---------------------------------------------------------------------------
// splits

/// Per-task train/validation/test partition of a dataset.
#[derive(Debug, Clone)]
pub struct Split {
    pub train: MultiTaskDataset,
    pub val: MultiTaskDataset,
    pub test: MultiTaskDataset,
    /// Row indices of each part, per task.
    pub indices: [Vec<Vec<usize>>; 3],
}

/// Shuffles each task's rows and assigns `floor(r_train n)` rows to train,
/// `floor(r_val n)` to validation and the remainder to test.
pub fn split_dataset(data: &MultiTaskDataset, ratios: (f64, f64, f64), seed: u64) -> Result<Split> {
    let (rt, rv, rs) = ratios;
    if [rt, rv, rs].iter().any(|r| !(*r >= 0.0)) || (rt + rv + rs - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidParameter(format!(
            "split ratios must be non-negative and sum to 1, got ({rt}, {rv}, {rs})"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut parts: [Vec<Vec<usize>>; 3] = Default::default();
    for (t, task) in data.tasks().iter().enumerate() {
        let n = task.n_samples();
        if n < 5 {
            return Err(Error::InvalidData(format!(
                "task {} has {n} samples; at least 5 are needed to split",
                t + 1
            )));
        }
        let mut idx: Vec<usize> = (0..n).collect();
        idx.shuffle(&mut rng);
        let n_train = (rt * n as f64 + 1e-9).floor() as usize;
        let n_val = (rv * n as f64 + 1e-9).floor() as usize;
        parts[0].push(idx[..n_train].to_vec());
        parts[1].push(idx[n_train..n_train + n_val].to_vec());
        parts[2].push(idx[n_train + n_val..].to_vec());
    }
    Ok(Split {
        train: data.select_rows(&parts[0])?,
        val: data.select_rows(&parts[1])?,
        test: data.select_rows(&parts[2])?,
        indices: parts,
    })
}

/// The standard 60/20/20 split.
pub fn split_default(data: &MultiTaskDataset, seed: u64) -> Result<Split> {
    split_dataset(data, (0.6, 0.2, 0.2), seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn synthetic1_shapes_and_determinism() {
        let cfg = Synthetic1Config::default();
        let a = gen_synthetic1(&cfg).unwrap();
        assert_eq!(a.data.n_tasks(), 10);
        assert!(a.data.tasks().iter().all(|t| t.x.dim() == (20, 20)));
        let b = gen_synthetic1(&cfg).unwrap();
        assert_eq!(a.data, b.data);
        let c = gen_synthetic1(&Synthetic1Config { seed: 1, ..cfg }).unwrap();
        assert_ne!(a.data, c.data);
    }

    #[test]
    fn planted_support_is_group_structured() {
        let g = gen_synthetic1(&Synthetic1Config { k_true: 6, ..Default::default() }).unwrap();
        let member = g.groups.membership().unwrap();
        for r in 0..6 {
            for t in 0..10 {
                if member[t] != r % 3 {
                    assert_eq!(g.truth.s()[[r, t]], 0.0);
                }
            }
        }
    }

    #[test]
    fn overlapping_feature_blocks() {
        let cfg = Synthetic1Config { feature_overlap: 2, ..Default::default() };
        let fg = cfg.feature_groups().unwrap();
        assert!(fg.is_overlapping());
        assert!(gen_synthetic1(&cfg).is_ok());
    }

    #[test]
    fn two_group_labels_and_groups() {
        let g = gen_two_group_classification(29, 9, 40, 5.0, 3).unwrap();
        assert_eq!(g.groups.groups()[0].len(), 15);
        assert_eq!(g.groups.groups()[1].len(), 14);
        assert!(!g.groups.is_overlapping());
        assert!(g
            .data
            .tasks()
            .iter()
            .all(|t| t.y.iter().all(|&y| y == 1.0 || y == -1.0)));
        assert!(gen_two_group_classification(1, 9, 40, 5.0, 3).is_err());
    }

    #[test]
    fn split_sizes() {
        let cfg = Synthetic1Config { n_per_task: 10, ..Default::default() };
        let data = gen_synthetic1(&cfg).unwrap().data;
        let s = split_default(&data, 1).unwrap();
        assert!(s.train.tasks().iter().all(|t| t.n_samples() == 6));
        assert!(s.val.tasks().iter().all(|t| t.n_samples() == 2));
        assert!(s.test.tasks().iter().all(|t| t.n_samples() == 2));

        let cfg = Synthetic1Config { n_per_task: 7, ..Default::default() };
        let data = gen_synthetic1(&cfg).unwrap().data;
        let s = split_default(&data, 1).unwrap();
        assert_eq!(s.train.task(0).n_samples(), 4);
        assert_eq!(s.val.task(0).n_samples(), 1);
        assert_eq!(s.test.task(0).n_samples(), 2);
    }

    #[test]
    fn split_partitions_indices() {
        let data = gen_synthetic1(&Synthetic1Config::default()).unwrap().data;
        let s = split_default(&data, 9).unwrap();
        for t in 0..data.n_tasks() {
            let mut all: Vec<usize> = s.indices.iter().flat_map(|p| p[t].clone()).collect();
            all.sort_unstable();
            assert_eq!(all, (0..20).collect::<Vec<_>>());
        }
    }

    #[test]
    fn split_rejects_small_tasks() {
        let cfg = Synthetic1Config { n_per_task: 4, ..Default::default() };
        let data = gen_synthetic1(&cfg).unwrap().data;
        let err = split_default(&data, 0).unwrap_err().to_string();
        assert!(err.contains("task 1"), "{err}");
    }

    #[test]
    fn kmeans_single_group_and_bounds() {
        let data = gen_synthetic1(&Synthetic1Config::default()).unwrap().data;
        let g = kmeans_groups(&data, &KMeansConfig::new(1, 0)).unwrap();
        assert_eq!(g.groups(), &[(0..10).collect::<Vec<_>>()]);
        assert!(kmeans_groups(&data, &KMeansConfig::new(11, 0)).is_err());
        let a = kmeans_groups(&data, &KMeansConfig::new(3, 5)).unwrap();
        let b = kmeans_groups(&data, &KMeansConfig::new(3, 5)).unwrap();
        assert_eq!(a, b);
        assert!(!a.is_overlapping());
        assert_eq!(a.len(), 3);
    }
}
