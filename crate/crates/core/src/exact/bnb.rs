//! Depth-first branch-and-bound over early/tardy decisions.
//!
//! A label vector is feasible iff, at every time point `t` among the due
//! dates and deadlines, the jobs whose sorting key is at most `t` fit before
//! `t`. Every job contributes its duration from its deadline onwards no
//! matter what; an early job additionally occupies the window between its due
//! date and its deadline. So the search tracks, per time point, the slack left
//! after the unavoidable load, and an early decision consumes slack over a
//! contiguous range of time points. A partial assignment is extendable iff its
//! slack is non-negative everywhere (the remaining jobs can all go tardy).
//!
//! The remaining gain is bounded by a Lagrangian relaxation of the slack
//! constraints. Multipliers carry over from node to node and take a couple of
//! subgradient steps at each one.

use std::time::{Duration, Instant};

use super::{SolveResult, SolveStatus};
use crate::error::{Error, Result};
use crate::problem::{cmp_key, labels_feasible, Instance, Label, LabelVector};
use crate::scheduler::{edf_feasible, schedule_from_labels};

const CLOCK_CHECK_INTERVAL: u64 = 1024;
const LAGRANGE_STEPS: usize = 2;
const STEP_SCALE: f64 = 1.0;

/// Order in which jobs are branched on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BranchOrder {
    /// Deadline ascending, ties by id.
    Deadline,
    /// Weight/duration ratio descending, ties by id.
    #[default]
    Ratio,
}

#[derive(Debug, Clone)]
pub struct SolveOptions {
    pub time_limit: Duration,
    /// Stop after this many nodes; `None` for no node budget.
    pub node_limit: Option<u64>,
    /// Propagate pairwise dominance implications.
    pub dominance: bool,
    pub branch_order: BranchOrder,
    /// Count nodes that contradict a dominance implication (slow; tests only).
    pub audit_dominance: bool,
}

impl SolveOptions {
    pub fn with_time_limit(time_limit: Duration) -> Self {
        Self {
            time_limit,
            ..Self::default()
        }
    }
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            time_limit: Duration::from_secs(300),
            node_limit: None,
            dominance: true,
            branch_order: BranchOrder::default(),
            audit_dominance: false,
        }
    }
}

/// Pairs `(i, j)` where `j` dominates `i`: `w_j > w_i`, `p_j <= p_i`,
/// `d_j >= d_i` and `dd_j <= dd_i`. In every optimal schedule, `i` early
/// implies `j` early and `j` tardy implies `i` tardy.
pub fn dominance_pairs(instance: &Instance) -> Vec<(usize, usize)> {
    let jobs = instance.jobs();
    let mut pairs = Vec::new();
    for a in jobs {
        for b in jobs {
            if b.weight > a.weight
                && b.duration <= a.duration
                && b.due_date >= a.due_date
                && b.deadline <= a.deadline
            {
                pairs.push((a.id, b.id));
            }
        }
    }
    pairs
}

/// Solves to optimality within `time_limit` using default options.
pub fn solve_exact(instance: &Instance, time_limit: Duration) -> Result<SolveResult> {
    solve_with(instance, &SolveOptions::with_time_limit(time_limit))
}

pub fn solve_with(instance: &Instance, options: &SolveOptions) -> Result<SolveResult> {
    if options.time_limit.is_zero() {
        return Err(Error::Parameter("time limit must be positive".into()));
    }
    let start = Instant::now();
    if !edf_feasible(instance, &[], 0.0) {
        return Ok(SolveResult::infeasible(start.elapsed()));
    }
    let mut search = Search::new(instance, options, start);
    search.run();
    let status = if search.stopped {
        SolveStatus::Timeout
    } else {
        SolveStatus::Optimal
    };
    let labels = LabelVector::from_early_mask(&search.best_early);
    if !labels_feasible(instance, &labels)? {
        return Err(Error::Internal("exact solver returned infeasible labels".into()));
    }
    Ok(SolveResult {
        status,
        objective: labels.early_weight(instance),
        labels: Some(labels),
        nodes_explored: search.nodes,
        elapsed: start.elapsed(),
        dominance_violations: search.violations,
    })
}

struct Search<'a> {
    instance: &'a Instance,
    options: &'a SolveOptions,
    start: Instant,

    /// Sorted distinct due dates and deadlines.
    points: Vec<f64>,
    /// Index of each job's due date / deadline in `points`.
    lo: Vec<usize>,
    hi: Vec<usize>,
    slack: Vec<f64>,
    tolerance: f64,

    branch_order: Vec<usize>,
    /// Lagrange multipliers per time point, kept across nodes as a warm start.
    multipliers: Vec<f64>,
    prefix: Vec<f64>,
    usage: Vec<f64>,

    implies_early: Vec<Vec<usize>>,
    implies_tardy: Vec<Vec<usize>>,
    pairs: Vec<(usize, usize)>,

    assigned: Vec<Option<Label>>,
    trail: Vec<usize>,
    committed: f64,

    best_value: f64,
    best_early: Vec<bool>,

    nodes: u64,
    violations: u64,
    stopped: bool,
}

impl<'a> Search<'a> {
    fn new(instance: &'a Instance, options: &'a SolveOptions, start: Instant) -> Self {
        let n = instance.len();
        let jobs = instance.jobs();

        let mut points: Vec<f64> = jobs
            .iter()
            .flat_map(|j| [j.due_date, j.deadline])
            .collect();
        points.sort_by(f64::total_cmp);
        points.dedup();
        let index_of = |t: f64| points.partition_point(|&x| x < t);
        let lo: Vec<usize> = jobs.iter().map(|j| index_of(j.due_date)).collect();
        let hi: Vec<usize> = jobs.iter().map(|j| index_of(j.deadline)).collect();

        // Unavoidable load: each job from its deadline onwards.
        let mut by_deadline: Vec<usize> = (0..n).collect();
        by_deadline.sort_by(|&a, &b| cmp_key((jobs[a].deadline, a), (jobs[b].deadline, b)));
        let mut slack = Vec::with_capacity(points.len());
        let mut load = 0.0;
        let mut next = 0;
        for (k, &t) in points.iter().enumerate() {
            while next < n && hi[by_deadline[next]] <= k {
                load += jobs[by_deadline[next]].duration;
                next += 1;
            }
            slack.push(t - load);
        }
        let scale = points.last().copied().unwrap_or(1.0).abs().max(1.0);

        let mut by_ratio: Vec<usize> = (0..n).collect();
        let ratio = |id: usize| jobs[id].weight / jobs[id].duration;
        by_ratio.sort_by(|&a, &b| ratio(b).total_cmp(&ratio(a)).then(a.cmp(&b)));

        let branch_order = match options.branch_order {
            BranchOrder::Ratio => by_ratio.clone(),
            BranchOrder::Deadline => by_deadline.clone(),
        };

        let pairs = if options.dominance || options.audit_dominance {
            dominance_pairs(instance)
        } else {
            Vec::new()
        };
        let mut implies_early = vec![Vec::new(); n];
        let mut implies_tardy = vec![Vec::new(); n];
        if options.dominance {
            for &(i, j) in &pairs {
                implies_early[i].push(j);
                implies_tardy[j].push(i);
            }
        }

        let slack_len = points.len();
        Self {
            instance,
            options,
            start,
            points,
            lo,
            hi,
            slack,
            tolerance: 1e-9 * scale,
            branch_order,
            multipliers: vec![0.0; slack_len],
            prefix: vec![0.0; slack_len + 1],
            usage: vec![0.0; slack_len + 1],
            implies_early,
            implies_tardy,
            pairs,
            assigned: vec![None; n],
            trail: Vec::with_capacity(n),
            committed: 0.0,
            best_value: f64::NEG_INFINITY,
            best_early: vec![false; n],
            nodes: 0,
            violations: 0,
            stopped: false,
        }
    }

    fn run(&mut self) {
        self.seed_incumbent();
        // A job whose window is empty costs nothing when early.
        let free: Vec<usize> = (0..self.instance.len())
            .filter(|&id| self.lo[id] == self.hi[id])
            .collect();
        for id in free {
            if self.assigned[id].is_none() && !self.assign(id, Label::Early) {
                // Only possible through a dominance chain; leave it to the search.
                self.undo_to(0);
                break;
            }
        }
        self.dfs(0);
    }

    fn seed_incumbent(&mut self) {
        let n = self.instance.len();
        let all_tardy = LabelVector::all(n, Label::Tardy);
        if let Ok(schedule) = schedule_from_labels(self.instance, &all_tardy) {
            let early: Vec<bool> = (0..n)
                .map(|id| schedule.completion_time(id) <= self.instance.job(id).due_date)
                .collect();
            let labels = LabelVector::from_early_mask(&early);
            if labels_feasible(self.instance, &labels).unwrap_or(false) {
                self.best_value = labels.early_weight(self.instance);
                self.best_early = early;
                return;
            }
        }
        self.best_value = 0.0;
    }

    fn out_of_budget(&mut self) -> bool {
        if self.stopped {
            return true;
        }
        if let Some(limit) = self.options.node_limit {
            if self.nodes >= limit {
                self.stopped = true;
            }
        }
        if self.nodes % CLOCK_CHECK_INTERVAL == 0 && self.start.elapsed() >= self.options.time_limit {
            self.stopped = true;
        }
        self.stopped
    }

    fn dfs(&mut self, depth: usize) {
        self.nodes += 1;
        if self.out_of_budget() {
            return;
        }
        if self.options.audit_dominance {
            self.audit();
        }
        if self.committed > self.best_value + self.tolerance * 1e-3 {
            self.try_incumbent();
        }

        let mut depth = depth;
        while depth < self.branch_order.len() && self.assigned[self.branch_order[depth]].is_some() {
            depth += 1;
        }
        if depth == self.branch_order.len() {
            return;
        }
        let margin = 1e-12 * self.best_value.abs().max(1.0);
        let target = self.best_value + margin - self.committed;
        if self.lagrangian_bound(target) <= target {
            return;
        }

        let job = self.branch_order[depth];
        for label in [Label::Early, Label::Tardy] {
            let mark = self.trail.len();
            if self.assign(job, label) {
                self.dfs(depth + 1);
            }
            self.undo_to(mark);
            if self.stopped {
                return;
            }
        }
    }

    fn try_incumbent(&mut self) {
        let early: Vec<bool> = self
            .assigned
            .iter()
            .map(|a| *a == Some(Label::Early))
            .collect();
        let labels = LabelVector::from_early_mask(&early);
        let value = labels.early_weight(self.instance);
        if value > self.best_value && labels_feasible(self.instance, &labels).unwrap_or(false) {
            self.best_value = value;
            self.best_early = early;
        }
    }

    /// Assigns `label` to `job` and propagates implications. Returns false on
    /// a conflict or a slack violation; the caller undoes via the trail.
    fn assign(&mut self, job: usize, label: Label) -> bool {
        let mut queue = vec![(job, label)];
        while let Some((id, label)) = queue.pop() {
            match self.assigned[id] {
                Some(existing) if existing == label => continue,
                Some(_) => return false,
                None => {}
            }
            self.assigned[id] = Some(label);
            self.trail.push(id);
            let weight = self.instance.job(id).weight;
            match label {
                Label::Early => {
                    self.committed += weight;
                    let p = self.instance.job(id).duration;
                    let mut ok = true;
                    for s in &mut self.slack[self.lo[id]..self.hi[id]] {
                        *s -= p;
                        ok &= *s >= -self.tolerance;
                    }
                    if !ok {
                        return false;
                    }
                    queue.extend(self.implies_early[id].iter().map(|&j| (j, Label::Early)));
                }
                Label::Tardy => {
                    queue.extend(self.implies_tardy[id].iter().map(|&i| (i, Label::Tardy)));
                }
            }
        }
        true
    }

    fn undo_to(&mut self, mark: usize) {
        while self.trail.len() > mark {
            let id = self.trail.pop().expect("trail above mark");
            let job = self.instance.job(id);
            if self.assigned[id] == Some(Label::Early) {
                self.committed -= job.weight;
                for s in &mut self.slack[self.lo[id]..self.hi[id]] {
                    *s += job.duration;
                }
            }
            self.assigned[id] = None;
        }
    }

    /// Lagrangian bound `sum_k l_k s_k + sum_j max(0, w_j - p_j L_j)` over the
    /// undecided jobs, where `L_j` sums the multipliers over the job's window.
    /// Valid for any non-negative multipliers; a few subgradient steps move
    /// them towards the dual optimum. Stops early once below `target`.
    fn lagrangian_bound(&mut self, target: f64) -> f64 {
        let m = self.points.len();
        let mut best = f64::INFINITY;
        for _ in 0..LAGRANGE_STEPS {
            self.prefix[0] = 0.0;
            for k in 0..m {
                self.prefix[k + 1] = self.prefix[k] + self.multipliers[k];
            }
            let mut value: f64 = self
                .multipliers
                .iter()
                .zip(&self.slack)
                .map(|(l, s)| l * s.max(0.0))
                .sum();
            self.usage.iter_mut().for_each(|u| *u = 0.0);
            for id in 0..self.instance.len() {
                if self.assigned[id].is_some() {
                    continue;
                }
                let job = self.instance.job(id);
                let price = self.prefix[self.hi[id]] - self.prefix[self.lo[id]];
                let reduced = job.weight - job.duration * price;
                if reduced > 0.0 {
                    value += reduced;
                    self.usage[self.lo[id]] += job.duration;
                    self.usage[self.hi[id]] -= job.duration;
                }
            }
            if value < best {
                best = value;
            }
            if best <= target {
                break;
            }
            // subgradient g_k = s_k - usage_k
            let mut running = 0.0;
            let mut norm = 0.0;
            for k in 0..m {
                running += self.usage[k];
                let g = self.slack[k].max(0.0) - running;
                self.usage[k] = g;
                if !(self.multipliers[k] == 0.0 && g > 0.0) {
                    norm += g * g;
                }
            }
            if norm <= 0.0 {
                break;
            }
            let step = STEP_SCALE * (value - target.max(0.0)) / norm;
            for k in 0..m {
                self.multipliers[k] = (self.multipliers[k] - step * self.usage[k]).max(0.0);
            }
        }
        best
    }

    fn audit(&mut self) {
        for &(i, j) in &self.pairs {
            if self.assigned[i] == Some(Label::Early) && self.assigned[j] == Some(Label::Tardy) {
                self.violations += 1;
            }
        }
    }
}
