//! Frozen-embedding evaluation: a logistic-regression probe over random
//! splits, k-means clustering scored by NMI/ARI, and membership similarity
//! statistics.

use std::collections::BTreeMap;

use argmin::core::{CostFunction, Executor, Gradient, State};
use argmin::solver::linesearch::MoreThuenteLineSearch;
use argmin::solver::quasinewton::LBFGS;
use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ops::{cosine, log_sum_exp, softmax};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitRatios {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl Default for SplitRatios {
    fn default() -> Self {
        Self {
            train: 0.1,
            val: 0.1,
            test: 0.8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifyConfig {
    pub splits: usize,
    pub ratios: SplitRatios,
    pub seed: u64,
    /// Candidate L2 strengths; the one with best validation accuracy is kept.
    pub l2_grid: Vec<f64>,
    pub max_retries: usize,
    pub max_iters: u64,
}

impl Default for ClassifyConfig {
    fn default() -> Self {
        Self {
            splits: 20,
            ratios: SplitRatios::default(),
            seed: 0,
            l2_grid: vec![1e-4, 1e-3, 1e-2, 1e-1, 1.0],
            max_retries: 1000,
            max_iters: 200,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassifyReport {
    /// Test accuracy in percent.
    pub accuracy_mean: f64,
    /// Population standard deviation over splits.
    pub accuracy_std: f64,
    pub accuracies: Vec<f64>,
    pub selected_l2: Vec<f64>,
    pub splits: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

fn split_sizes(n: usize, ratios: &SplitRatios) -> Result<(usize, usize)> {
    let total = ratios.train + ratios.val + ratios.test;
    if [ratios.train, ratios.val, ratios.test].iter().any(|r| !(*r >= 0.0)) || total <= 0.0 {
        return Err(Error::Config("split ratios must be non-negative".into()));
    }
    let train = ((n as f64 * ratios.train / total).round() as usize).max(1);
    let val = ((n as f64 * ratios.val / total).round() as usize).max(usize::from(ratios.val > 0.0));
    if train + val >= n {
        return Err(Error::Config(format!("{n} samples are too few for the requested split")));
    }
    Ok((train, val))
}

/// Uniform random split whose training part contains every class present in
/// `labels`; redrawn up to `max_retries` times.
pub fn random_split<R: Rng + ?Sized>(
    labels: &[usize],
    ratios: &SplitRatios,
    max_retries: usize,
    rng: &mut R,
) -> Result<Split> {
    let n = labels.len();
    let (n_train, n_val) = split_sizes(n, ratios)?;
    let classes: std::collections::BTreeSet<usize> = labels.iter().copied().collect();
    let mut order: Vec<usize> = (0..n).collect();
    for _ in 0..max_retries.max(1) {
        order.shuffle(rng);
        let train = &order[..n_train];
        let seen: std::collections::BTreeSet<usize> = train.iter().map(|&i| labels[i]).collect();
        if seen.len() == classes.len() {
            return Ok(Split {
                train: train.to_vec(),
                val: order[n_train..n_train + n_val].to_vec(),
                test: order[n_train + n_val..].to_vec(),
            });
        }
    }
    Err(Error::SplitExhausted(max_retries))
}

/// Multinomial logistic regression on column-standardized inputs; the bias is
/// not penalized.
#[derive(Debug, Clone)]
pub struct LogisticRegression {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
    mean: Array1<f64>,
    scale: Array1<f64>,
}

struct SoftmaxProblem<'a> {
    x: ArrayView2<'a, f64>,
    y: &'a [usize],
    classes: usize,
    l2: f64,
}

impl SoftmaxProblem<'_> {
    fn unpack(&self, p: &[f64]) -> (Array2<f64>, Array1<f64>) {
        let d = self.x.ncols();
        let c = self.classes;
        let w = Array2::from_shape_vec((d, c), p[..d * c].to_vec()).expect("sized");
        let b = Array1::from(p[d * c..].to_vec());
        (w, b)
    }

    fn eval(&self, p: &[f64]) -> (f64, Vec<f64>) {
        let (w, b) = self.unpack(p);
        let n = self.x.nrows() as f64;
        let mut scores = self.x.dot(&w);
        scores += &b;
        let mut loss = 0.0;
        for (i, mut row) in scores.axis_iter_mut(Axis(0)).enumerate() {
            let lse = log_sum_exp(row.iter().copied());
            loss += lse - row[self.y[i]];
            row.mapv_inplace(|s| (s - lse).exp());
            row[self.y[i]] -= 1.0;
        }
        loss /= n;
        scores /= n;
        let mut gw = self.x.t().dot(&scores);
        gw.scaled_add(self.l2, &w);
        loss += 0.5 * self.l2 * w.iter().map(|v| v * v).sum::<f64>();
        let gb = scores.sum_axis(Axis(0));
        let mut grad = gw.into_raw_vec_and_offset().0;
        grad.extend(gb.iter());
        (loss, grad)
    }
}

impl CostFunction for SoftmaxProblem<'_> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, p: &Self::Param) -> std::result::Result<f64, argmin::core::Error> {
        Ok(self.eval(p).0)
    }
}

impl Gradient for SoftmaxProblem<'_> {
    type Param = Vec<f64>;
    type Gradient = Vec<f64>;

    fn gradient(&self, p: &Self::Param) -> std::result::Result<Vec<f64>, argmin::core::Error> {
        Ok(self.eval(p).1)
    }
}

impl LogisticRegression {
    /// L-BFGS from a zero start, so fitting is deterministic.
    pub fn fit(
        x: ArrayView2<'_, f64>,
        y: &[usize],
        classes: usize,
        l2: f64,
        max_iters: u64,
    ) -> Result<Self> {
        if x.nrows() != y.len() {
            return Err(Error::LengthMismatch {
                what: "labels",
                expected: x.nrows(),
                actual: y.len(),
            });
        }
        let mean = x.mean_axis(Axis(0)).unwrap_or_else(|| Array1::zeros(x.ncols()));
        let scale = x.std_axis(Axis(0), 0.0).mapv(|s| if s > 1e-12 { s } else { 1.0 });
        let xs = (&x - &mean) / &scale;
        let problem = SoftmaxProblem {
            x: xs.view(),
            y,
            classes,
            l2,
        };
        let d = x.ncols();
        let init = vec![0.0; d * classes + classes];
        let (_, g0) = problem.eval(&init);
        let best = if g0.iter().all(|g| g.abs() < 1e-12) {
            init
        } else {
            let solver = LBFGS::new(MoreThuenteLineSearch::new(), 10)
                .with_tolerance_grad(1e-9)
                .map_err(|e| Error::Optimizer(e.to_string()))?
                .with_tolerance_cost(1e-14)
                .map_err(|e| Error::Optimizer(e.to_string()))?;
            let res = Executor::new(problem, solver)
                .configure(|s| s.param(init).max_iters(max_iters))
                .run()
                .map_err(|e| Error::Optimizer(e.to_string()))?;
            res.state()
                .get_best_param()
                .cloned()
                .ok_or_else(|| Error::Optimizer("no iterate produced".into()))?
        };
        let problem = SoftmaxProblem {
            x: xs.view(),
            y,
            classes,
            l2,
        };
        let (weights, bias) = problem.unpack(&best);
        Ok(Self {
            weights,
            bias,
            mean,
            scale,
        })
    }

    /// Arg-max class; ties go to the lowest class index.
    pub fn predict(&self, x: ArrayView2<'_, f64>) -> Vec<usize> {
        let xs = (&x - &self.mean) / &self.scale;
        let mut scores = xs.dot(&self.weights);
        scores += &self.bias;
        scores
            .axis_iter(Axis(0))
            .map(|row| {
                let mut best = 0;
                for (c, &s) in row.iter().enumerate() {
                    if s > row[best] {
                        best = c;
                    }
                }
                best
            })
            .collect()
    }
}

fn rows(z: ArrayView2<'_, f64>, idx: &[usize]) -> Array2<f64> {
    z.select(Axis(0), idx)
}

fn accuracy(pred: &[usize], truth: &[usize]) -> f64 {
    if truth.is_empty() {
        return 0.0;
    }
    let hits = pred.iter().zip(truth).filter(|(a, b)| a == b).count();
    100.0 * hits as f64 / truth.len() as f64
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Linear-probe accuracy over `config.splits` random splits. Each split draws
/// from its own RNG stream derived from `(seed, split index)`.
pub fn classify(z: ArrayView2<'_, f64>, labels: &[usize], config: &ClassifyConfig) -> Result<ClassifyReport> {
    if z.nrows() != labels.len() {
        return Err(Error::LengthMismatch {
            what: "labels",
            expected: z.nrows(),
            actual: labels.len(),
        });
    }
    if config.l2_grid.is_empty() || config.splits == 0 {
        return Err(Error::Config("classify needs at least one split and one L2 value".into()));
    }
    if z.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("embeddings"));
    }
    let classes = labels.iter().max().map_or(0, |m| m + 1);
    let mut accuracies = Vec::with_capacity(config.splits);
    let mut selected_l2 = Vec::with_capacity(config.splits);
    for s in 0..config.splits {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(s as u64);
        let split = random_split(labels, &config.ratios, config.max_retries, &mut rng)?;
        let x_train = rows(z, &split.train);
        let y_train: Vec<usize> = split.train.iter().map(|&i| labels[i]).collect();
        let y_val: Vec<usize> = split.val.iter().map(|&i| labels[i]).collect();
        let x_val = rows(z, &split.val);

        let mut best: Option<(f64, f64, LogisticRegression)> = None;
        for &l2 in &config.l2_grid {
            let model = LogisticRegression::fit(x_train.view(), &y_train, classes, l2, config.max_iters)?;
            let val_acc = accuracy(&model.predict(x_val.view()), &y_val);
            if best.as_ref().is_none_or(|(acc, _, _)| val_acc > *acc) {
                best = Some((val_acc, l2, model));
            }
        }
        let (_, l2, model) = best.expect("non-empty grid");
        let y_test: Vec<usize> = split.test.iter().map(|&i| labels[i]).collect();
        accuracies.push(accuracy(&model.predict(rows(z, &split.test).view()), &y_test));
        selected_l2.push(l2);
    }
    let (accuracy_mean, accuracy_std) = mean_std(&accuracies);
    Ok(ClassifyReport {
        accuracy_mean,
        accuracy_std,
        accuracies,
        selected_l2,
        splits: config.splits,
    })
}

#[derive(Debug, Clone)]
pub struct KMeansResult {
    pub assignments: Vec<usize>,
    pub centers: Array2<f64>,
    pub inertia: f64,
}

fn sq_dist(a: ndarray::ArrayView1<'_, f64>, b: ndarray::ArrayView1<'_, f64>) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn plus_plus_seeds<R: Rng + ?Sized>(z: ArrayView2<'_, f64>, k: usize, rng: &mut R) -> Vec<usize> {
    let n = z.nrows();
    let mut seeds = vec![rng.random_range(0..n)];
    let mut d2: Vec<f64> = (0..n).map(|i| sq_dist(z.row(i), z.row(seeds[0]))).collect();
    while seeds.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut pick = n - 1;
            for (i, &d) in d2.iter().enumerate() {
                if target < d {
                    pick = i;
                    break;
                }
                target -= d;
            }
            pick
        } else {
            rng.random_range(0..n)
        };
        seeds.push(next);
        for (i, d) in d2.iter_mut().enumerate() {
            *d = d.min(sq_dist(z.row(i), z.row(next)));
        }
    }
    seeds
}

/// One k-means++ seeding followed by Lloyd iterations. `None` when a cluster
/// ends up empty.
pub fn kmeans_once<R: Rng + ?Sized>(
    z: ArrayView2<'_, f64>,
    k: usize,
    max_iters: usize,
    rng: &mut R,
) -> Option<KMeansResult> {
    let (n, d) = z.dim();
    let seeds = plus_plus_seeds(z, k, rng);
    let mut centers = rows(z, &seeds);
    let mut assignments = vec![usize::MAX; n];
    for _ in 0..max_iters.max(1) {
        let mut changed = false;
        for i in 0..n {
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for c in 0..k {
                let dist = sq_dist(z.row(i), centers.row(c));
                if dist < best_d {
                    best_d = dist;
                    best = c;
                }
            }
            if assignments[i] != best {
                assignments[i] = best;
                changed = true;
            }
        }
        let mut sums = Array2::<f64>::zeros((k, d));
        let mut counts = vec![0usize; k];
        for (i, &c) in assignments.iter().enumerate() {
            sums.row_mut(c).scaled_add(1.0, &z.row(i));
            counts[c] += 1;
        }
        if counts.contains(&0) {
            return None;
        }
        for c in 0..k {
            sums.row_mut(c).mapv_inplace(|v| v / counts[c] as f64);
        }
        centers = sums;
        if !changed {
            break;
        }
    }
    let inertia = assignments
        .iter()
        .enumerate()
        .map(|(i, &c)| sq_dist(z.row(i), centers.row(c)))
        .sum();
    Some(KMeansResult {
        assignments,
        centers,
        inertia,
    })
}

/// k-means that reseeds from scratch whenever a cluster empties.
pub fn kmeans<R: Rng + ?Sized>(
    z: ArrayView2<'_, f64>,
    k: usize,
    max_iters: usize,
    max_reseeds: usize,
    rng: &mut R,
) -> Result<KMeansResult> {
    if k == 0 || k > z.nrows() {
        return Err(Error::Config(format!("k = {k} is invalid for {} points", z.nrows())));
    }
    for _ in 0..max_reseeds.max(1) {
        if let Some(res) = kmeans_once(z, k, max_iters, rng) {
            return Ok(res);
        }
    }
    Err(Error::EmptyCluster(max_reseeds))
}

fn contingency(a: &[usize], b: &[usize]) -> (Vec<Vec<f64>>, Vec<f64>, Vec<f64>) {
    let index = |xs: &[usize]| -> (Vec<usize>, usize) {
        let mut map = BTreeMap::new();
        let ids = xs
            .iter()
            .map(|x| {
                let next = map.len();
                *map.entry(*x).or_insert(next)
            })
            .collect();
        (ids, map.len())
    };
    let (ia, ka) = index(a);
    let (ib, kb) = index(b);
    let mut table = vec![vec![0.0; kb]; ka];
    for (x, y) in ia.into_iter().zip(ib) {
        table[x][y] += 1.0;
    }
    let rows: Vec<f64> = table.iter().map(|r| r.iter().sum()).collect();
    let cols: Vec<f64> = (0..kb).map(|j| table.iter().map(|r| r[j]).sum()).collect();
    (table, rows, cols)
}

fn entropy(counts: &[f64], n: f64) -> f64 {
    counts
        .iter()
        .filter(|&&c| c > 0.0)
        .map(|&c| {
            let p = c / n;
            -p * p.ln()
        })
        .sum()
}

/// NMI with arithmetic-mean normalization. `None` when both labelings have a
/// single group (0/0).
pub fn nmi(a: &[usize], b: &[usize]) -> Option<f64> {
    assert_eq!(a.len(), b.len(), "labelings must have equal length");
    let n = a.len() as f64;
    if a.is_empty() {
        return None;
    }
    let (table, rows, cols) = contingency(a, b);
    let (ha, hb) = (entropy(&rows, n), entropy(&cols, n));
    let denom = 0.5 * (ha + hb);
    if denom <= 0.0 {
        return None;
    }
    let mut mi = 0.0;
    for (i, row) in table.iter().enumerate() {
        for (j, &c) in row.iter().enumerate() {
            if c > 0.0 {
                mi += c / n * (c * n / (rows[i] * cols[j])).ln();
            }
        }
    }
    Some((mi / denom).clamp(0.0, 1.0))
}

fn comb2(x: f64) -> f64 {
    x * (x - 1.0) / 2.0
}

/// Adjusted Rand index. Identical trivial partitions (where the expected
/// index equals its maximum) score 1.
pub fn ari(a: &[usize], b: &[usize]) -> f64 {
    assert_eq!(a.len(), b.len(), "labelings must have equal length");
    let n = a.len() as f64;
    let (table, rows, cols) = contingency(a, b);
    let index: f64 = table.iter().flatten().map(|&c| comb2(c)).sum();
    let sa: f64 = rows.iter().map(|&c| comb2(c)).sum();
    let sb: f64 = cols.iter().map(|&c| comb2(c)).sum();
    let total = comb2(n);
    if total == 0.0 {
        return 1.0;
    }
    let expected = sa * sb / total;
    let max = 0.5 * (sa + sb);
    if (max - expected).abs() < 1e-12 {
        return 1.0;
    }
    (index - expected) / (max - expected)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusterConfig {
    /// Number of clusters; `None` uses the number of distinct labels.
    pub k: Option<usize>,
    pub runs: usize,
    pub seed: u64,
    pub max_iters: usize,
    pub max_reseeds: usize,
    /// Score the 0/0 NMI case as 1 instead of leaving it undefined.
    pub degenerate_nmi_is_one: bool,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        Self {
            k: None,
            runs: 5,
            seed: 0,
            max_iters: 300,
            max_reseeds: 100,
            degenerate_nmi_is_one: false,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ClusterReport {
    /// `None` when every run was degenerate and the convention flag is off.
    pub nmi_mean: Option<f64>,
    pub ari_mean: f64,
    pub nmi: Vec<Option<f64>>,
    pub ari: Vec<f64>,
    pub degenerate_runs: usize,
    pub k: usize,
    pub runs: usize,
}

pub fn cluster(z: ArrayView2<'_, f64>, labels: &[usize], config: &ClusterConfig) -> Result<ClusterReport> {
    if z.nrows() != labels.len() {
        return Err(Error::LengthMismatch {
            what: "labels",
            expected: z.nrows(),
            actual: labels.len(),
        });
    }
    if config.runs == 0 {
        return Err(Error::Config("cluster needs at least one run".into()));
    }
    let k = config
        .k
        .unwrap_or_else(|| labels.iter().collect::<std::collections::BTreeSet<_>>().len());
    let mut nmis = Vec::with_capacity(config.runs);
    let mut aris = Vec::with_capacity(config.runs);
    let mut degenerate_runs = 0;
    for run in 0..config.runs {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(run as u64);
        let res = kmeans(z, k, config.max_iters, config.max_reseeds, &mut rng)?;
        let score = nmi(&res.assignments, labels);
        if score.is_none() {
            degenerate_runs += 1;
        }
        nmis.push(score.or(config.degenerate_nmi_is_one.then_some(1.0)));
        aris.push(ari(&res.assignments, labels));
    }
    let defined: Vec<f64> = nmis.iter().flatten().copied().collect();
    let nmi_mean = (!defined.is_empty()).then(|| defined.iter().sum::<f64>() / defined.len() as f64);
    Ok(ClusterReport {
        nmi_mean,
        ari_mean: aris.iter().sum::<f64>() / aris.len() as f64,
        nmi: nmis,
        ari: aris,
        degenerate_runs,
        k,
        runs: config.runs,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimilarityStats {
    pub mean: f64,
    pub variance: f64,
    pub entropy: f64,
    /// Nodes that contributed to the entropy average.
    pub entropy_nodes: usize,
}

/// Cosine statistics over node–hyperedge membership pairs of a stacked
/// `(N+M) × D` matrix. Entropy uses a softmax over each node's incident
/// similarities and skips nodes without memberships.
pub fn similarity_stats(
    z: ArrayView2<'_, f64>,
    num_nodes: usize,
    memberships: &[(usize, usize)],
) -> Result<SimilarityStats> {
    if memberships.is_empty() {
        return Err(Error::EmptyMemberships);
    }
    let mut per_node: Vec<Vec<f64>> = vec![Vec::new(); num_nodes];
    let mut sims = Vec::with_capacity(memberships.len());
    for &(v, e) in memberships {
        let row = num_nodes + e;
        if v >= num_nodes || row >= z.nrows() {
            return Err(Error::Dimension(format!(
                "membership ({v}, {e}) outside a {}-row embedding with {num_nodes} nodes",
                z.nrows()
            )));
        }
        let s = cosine(z.row(v), z.row(row));
        sims.push(s);
        per_node[v].push(s);
    }
    let (mean, std) = mean_std(&sims);
    let mut entropy = 0.0;
    let mut entropy_nodes = 0;
    for s in per_node.iter().filter(|s| !s.is_empty()) {
        entropy += softmax(s)
            .into_iter()
            .filter(|&p| p > 0.0)
            .map(|p| -p * p.ln())
            .sum::<f64>();
        entropy_nodes += 1;
    }
    Ok(SimilarityStats {
        mean,
        variance: std * std,
        entropy: if entropy_nodes > 0 { entropy / entropy_nodes as f64 } else { 0.0 },
        entropy_nodes,
    })
}

/// Similarity statistics of the raw inputs: node features against hyperedge
/// member means.
pub fn raw_similarity_stats(hg: &crate::Hypergraph) -> Result<SimilarityStats> {
    let ctx = crate::augmentation::AugmentationContext::new(hg)?;
    let stacked = ndarray::concatenate(Axis(0), &[ctx.features.view(), ctx.raw.view()])
        .map_err(|e| Error::Dimension(e.to_string()))?;
    similarity_stats(stacked.view(), hg.num_nodes(), &hg.memberships())
}
