use std::collections::VecDeque;
use std::fmt::Write as _;

use super::state::OccupancyState;
use crate::graph::Vertex;

/// Waiting time of one task under FCFS service at its server.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaskWait {
    pub arrival: f64,
    pub wait: f64,
}

/// Occupancy counts restricted to a fixed subset of servers.
#[derive(Debug, Clone, PartialEq)]
pub struct WatchedCounts {
    pub size: usize,
    /// `counts[j][i-1]` = number of watched servers with at least `i` tasks.
    pub counts: Vec<Vec<u64>>,
}

/// Sampled occupancy trajectory of one run.
///
/// Samples are taken at `j * grid` for every grid point below the horizon
/// and at the horizon itself. The state recorded at time `s` is the state
/// after all events up to `s`. Besides the point samples, the exact
/// integral of every `Q_i` over each interval between consecutive samples
/// is kept, so time averages carry no discretization error.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub n_servers: usize,
    pub lambda: f64,
    pub times: Vec<f64>,
    /// `counts[j][i-1] = Q_i` at `times[j]`, trailing zeros trimmed.
    pub counts: Vec<Vec<u64>>,
    /// Cumulative counters at each sample.
    pub arrivals: Vec<u64>,
    pub departures: Vec<u64>,
    pub discards: Vec<u64>,
    /// `areas[j][i-1]` = integral of `Q_i` over `[times[j], times[j+1]]`.
    pub areas: Vec<Vec<f64>>,
    pub initial_tasks: u64,
    pub watched: Option<WatchedCounts>,
    /// Completed FCFS waits, present when wait recording was requested.
    pub waits: Option<Vec<TaskWait>>,
}

impl Trace {
    pub fn n_samples(&self) -> usize {
        self.times.len()
    }

    /// Highest level with a nonzero count in any sample.
    pub fn max_level(&self) -> usize {
        self.counts.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// `Q_i` at sample `j` (`i ≥ 1`).
    pub fn q_count(&self, j: usize, i: usize) -> u64 {
        self.counts[j].get(i - 1).copied().unwrap_or(0)
    }

    /// `q_i = Q_i / N` at sample `j`.
    pub fn q(&self, j: usize, i: usize) -> f64 {
        self.q_count(j, i) as f64 / self.n_servers as f64
    }

    /// Tasks in system at sample `j`.
    pub fn in_system(&self, j: usize) -> u64 {
        self.counts[j].iter().sum()
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().expect("trace has at least one sample")
    }

    /// Column names of [`Trace::to_csv`] for a given number of levels.
    pub fn csv_header(levels: usize) -> String {
        let mut h = String::from("t");
        for i in 1..=levels {
            write!(h, ",q{i}").unwrap();
        }
        h.push_str(",arrivals,departures,discards");
        h
    }

    /// Writes `t, q1..qK, arrivals, departures, discards`, one row per sample,
    /// with `K` the highest level ever occupied (at least 1).
    pub fn to_csv(&self) -> String {
        let levels = self.max_level().max(1);
        let mut out = Self::csv_header(levels);
        out.push('\n');
        for j in 0..self.n_samples() {
            self.write_row(&mut out, j, levels);
            out.push('\n');
        }
        out
    }

    pub(crate) fn write_row(&self, out: &mut String, j: usize, levels: usize) {
        write!(out, "{}", self.times[j]).unwrap();
        for i in 1..=levels {
            write!(out, ",{}", self.q(j, i)).unwrap();
        }
        write!(out, ",{},{},{}", self.arrivals[j], self.departures[j], self.discards[j]).unwrap();
    }
}

/// Collects a [`Trace`] while the engine runs.
pub(crate) struct Recorder {
    grid: f64,
    horizon: f64,
    next_index: u64,
    done: bool,
    area: Vec<f64>,
    last_change: Vec<f64>,
    pub(crate) arrivals: u64,
    pub(crate) departures: u64,
    pub(crate) discards: u64,
    watch_mask: Option<Vec<bool>>,
    watched_at_least: Vec<u64>,
    fcfs: Option<Vec<VecDeque<f64>>>,
    trace: Trace,
}

impl Recorder {
    pub(crate) fn new(
        state: &OccupancyState,
        lambda: f64,
        grid: f64,
        horizon: f64,
        watch: Option<&[Vertex]>,
        record_waits: bool,
    ) -> Self {
        let n = state.n_servers();
        let watch_mask = watch.map(|w| {
            let mut m = vec![false; n];
            for &v in w {
                m[v as usize] = true;
            }
            m
        });
        let mut watched_at_least = Vec::new();
        if let Some(m) = &watch_mask {
            for (k, &x) in state.queue_lengths().iter().enumerate() {
                if m[k] {
                    if watched_at_least.len() < x as usize {
                        watched_at_least.resize(x as usize, 0);
                    }
                    for c in &mut watched_at_least[..x as usize] {
                        *c += 1;
                    }
                }
            }
        }
        // Initial tasks carry arrival time 0 in FCFS order.
        let fcfs = record_waits.then(|| {
            state
                .queue_lengths()
                .iter()
                .map(|&x| std::iter::repeat_n(0.0, x as usize).collect())
                .collect()
        });
        let trace = Trace {
            n_servers: n,
            lambda,
            times: Vec::new(),
            counts: Vec::new(),
            arrivals: Vec::new(),
            departures: Vec::new(),
            discards: Vec::new(),
            areas: Vec::new(),
            initial_tasks: state.total_tasks(),
            watched: watch_mask.as_ref().map(|m| WatchedCounts {
                size: m.iter().filter(|&&b| b).count(),
                counts: Vec::new(),
            }),
            waits: record_waits.then(Vec::new),
        };
        let mut rec = Self {
            grid,
            horizon,
            next_index: 0,
            done: false,
            area: Vec::new(),
            last_change: Vec::new(),
            arrivals: 0,
            departures: 0,
            discards: 0,
            watch_mask,
            watched_at_least,
            fcfs,
            trace,
        };
        rec.advance(0.0, state);
        rec
    }

    fn next_sample_time(&self) -> f64 {
        let s = self.next_index as f64 * self.grid;
        // grid points within rounding distance of the horizon merge into it
        if s >= self.horizon * (1.0 - 1e-12) {
            self.horizon
        } else {
            s
        }
    }

    /// Records every sample at or before `t` using the current state and
    /// returns how many were taken.
    pub(crate) fn advance(&mut self, t: f64, state: &OccupancyState) -> usize {
        let mut taken = 0;
        while !self.done {
            let s = self.next_sample_time();
            if s > t {
                break;
            }
            self.sample(s, state);
            taken += 1;
            if s == self.horizon {
                self.done = true;
            }
            self.next_index += 1;
        }
        taken
    }

    fn sample(&mut self, s: f64, state: &OccupancyState) {
        let levels = self.area.len().max(state.q_counts().len());
        self.ensure_levels(levels, s);
        for i in 0..levels {
            self.area[i] += state.q_count(i + 1) as f64 * (s - self.last_change[i]);
            self.last_change[i] = s;
        }
        if !self.trace.times.is_empty() {
            let mut a = std::mem::take(&mut self.area);
            while a.last() == Some(&0.0) {
                a.pop();
            }
            self.trace.areas.push(a);
            self.area = vec![0.0; levels];
        }
        self.trace.times.push(s);
        self.trace.counts.push(state.q_counts());
        self.trace.arrivals.push(self.arrivals);
        self.trace.departures.push(self.departures);
        self.trace.discards.push(self.discards);
        if let Some(w) = &mut self.trace.watched {
            let mut c = self.watched_at_least.clone();
            while c.last() == Some(&0) {
                c.pop();
            }
            w.counts.push(c);
        }
    }

    fn ensure_levels(&mut self, levels: usize, t: f64) {
        if self.area.len() < levels {
            self.area.resize(levels, 0.0);
            self.last_change.resize(levels, t);
        }
    }

    /// Accumulates the area of `Q_level` up to `t`; call before it changes.
    fn touch(&mut self, level: usize, state: &OccupancyState, t: f64) {
        self.ensure_levels(level, t);
        let i = level - 1;
        self.area[i] += state.q_count(level) as f64 * (t - self.last_change[i]);
        self.last_change[i] = t;
    }

    /// Applies an accepted arrival at `server` to `state`.
    pub(crate) fn arrive(&mut self, state: &mut OccupancyState, server: Vertex, t: f64) {
        let level = state.level_after_add(server);
        self.touch(level, state, t);
        if let Some(m) = &self.watch_mask {
            if m[server as usize] {
                if self.watched_at_least.len() < level {
                    self.watched_at_least.resize(level, 0);
                }
                self.watched_at_least[level - 1] += 1;
            }
        }
        if let Some(queues) = &mut self.fcfs {
            let q = &mut queues[server as usize];
            if q.is_empty() {
                self.trace.waits.as_mut().unwrap().push(TaskWait { arrival: t, wait: 0.0 });
            }
            q.push_back(t);
        }
        state.add_task(server);
        self.arrivals += 1;
    }

    pub(crate) fn discard(&mut self) {
        self.arrivals += 1;
        self.discards += 1;
    }

    /// Applies a service completion at `server` to `state`.
    pub(crate) fn depart(&mut self, state: &mut OccupancyState, server: Vertex, t: f64) {
        let level = state.level_before_remove(server);
        self.touch(level, state, t);
        if let Some(m) = &self.watch_mask {
            if m[server as usize] {
                self.watched_at_least[level - 1] -= 1;
            }
        }
        if let Some(queues) = &mut self.fcfs {
            let q = &mut queues[server as usize];
            q.pop_front();
            if let Some(&a) = q.front() {
                self.trace.waits.as_mut().unwrap().push(TaskWait { arrival: a, wait: t - a });
            }
        }
        state.remove_task(server);
        self.departures += 1;
    }

    pub(crate) fn finish(mut self, state: &OccupancyState) -> Trace {
        self.advance(self.horizon, state);
        self.trace
    }
}
