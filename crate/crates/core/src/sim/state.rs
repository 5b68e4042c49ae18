use crate::fenwick::Fenwick;
use crate::graph::Vertex;

/// Per-server buffer capacity (tasks including the one in service).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Buffer {
    Finite(u32),
    Infinite,
}

impl Buffer {
    pub fn admits(&self, queue_len: u32) -> bool {
        match *self {
            Buffer::Finite(b) => queue_len < b,
            Buffer::Infinite => true,
        }
    }
}

impl std::str::FromStr for Buffer {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "inf" | "infinite" => Ok(Buffer::Infinite),
            _ => match s.parse::<u32>() {
                Ok(b) if b >= 1 => Ok(Buffer::Finite(b)),
                _ => Err(format!("buffer must be a positive integer or 'inf', got '{s}'")),
            },
        }
    }
}

/// Queue lengths `X_k` together with the occupancy counts
/// `Q_i = #{k : X_k ≥ i}` and, per level, the set of servers at exactly
/// that level (for ordered-server queries).
///
/// The nondecreasing server order used by rank queries breaks ties by
/// server id.
#[derive(Debug, Clone)]
pub struct OccupancyState {
    x: Vec<u32>,
    /// `at_least[i] = Q_i`, with `at_least[0] = N`.
    at_least: Vec<u64>,
    levels: Vec<Fenwick>,
    total: u64,
    buffer: Buffer,
}

impl OccupancyState {
    pub fn new(n_servers: usize, buffer: Buffer) -> Self {
        Self {
            x: vec![0; n_servers],
            at_least: vec![n_servers as u64],
            levels: vec![Fenwick::ones(n_servers)],
            total: 0,
            buffer,
        }
    }

    /// Starts from given queue lengths; fails if one exceeds the buffer.
    pub fn from_queue_lengths(x: &[u32], buffer: Buffer) -> Result<Self, String> {
        if let Buffer::Finite(b) = buffer {
            if let Some((k, &v)) = x.iter().enumerate().find(|(_, &v)| v > b) {
                return Err(format!("server {k} starts with {v} tasks above buffer {b}"));
            }
        }
        let mut s = Self::new(x.len(), buffer);
        for (k, &v) in x.iter().enumerate() {
            for _ in 0..v {
                s.add_task(k as Vertex);
            }
        }
        Ok(s)
    }

    pub fn n_servers(&self) -> usize {
        self.x.len()
    }

    pub fn buffer(&self) -> Buffer {
        self.buffer
    }

    pub fn queue_len(&self, server: Vertex) -> u32 {
        self.x[server as usize]
    }

    pub fn queue_lengths(&self) -> &[u32] {
        &self.x
    }

    /// `Q_i`; `q_count(0)` is `N`.
    pub fn q_count(&self, i: usize) -> u64 {
        self.at_least.get(i).copied().unwrap_or(0)
    }

    /// `Q_1, Q_2, …` up to the highest nonempty level.
    pub fn q_counts(&self) -> Vec<u64> {
        let mut v: Vec<u64> = self.at_least[1..].to_vec();
        while v.last() == Some(&0) {
            v.pop();
        }
        v
    }

    /// Number of busy servers, `Q_1`.
    pub fn busy(&self) -> u64 {
        self.q_count(1)
    }

    pub fn total_tasks(&self) -> u64 {
        self.total
    }

    /// Servers with exactly `level` tasks.
    pub fn count_at_level(&self, level: usize) -> u64 {
        self.q_count(level) - self.q_count(level + 1)
    }

    /// Lowest queue length present.
    pub fn min_level(&self) -> usize {
        (0..self.at_least.len()).find(|&l| self.count_at_level(l) > 0).unwrap_or(0)
    }

    /// `j`-th (1-based) smallest server id among those at `level`.
    pub fn server_at_level(&self, level: usize, j: u64) -> Vertex {
        debug_assert!(j >= 1 && j <= self.count_at_level(level));
        self.levels[level].find_kth(j as i64) as Vertex
    }

    /// Server at position `k` (1-based) of the nondecreasing order with
    /// ties broken by id.
    pub fn server_at_rank(&self, mut k: u64) -> Vertex {
        debug_assert!(k >= 1 && k <= self.n_servers() as u64);
        let mut level = 0;
        loop {
            let c = self.count_at_level(level);
            if k <= c {
                return self.server_at_level(level, k);
            }
            k -= c;
            level += 1;
        }
    }

    /// Earliest position a server at `level` can take in a nondecreasing
    /// order: all strictly shorter queues first.
    pub fn earliest_rank_of_level(&self, level: u32) -> u64 {
        self.n_servers() as u64 - self.q_count(level as usize) + 1
    }

    /// Position of `server` in the order with ties broken by id.
    pub fn rank_by_id(&self, server: Vertex) -> u64 {
        let level = self.x[server as usize] as usize;
        let before = self.levels[level].prefix(server as usize) as u64;
        self.n_servers() as u64 - self.q_count(level) + before + 1
    }

    /// Index `i` of the `Q_i` that an arrival at `server` increments.
    pub fn level_after_add(&self, server: Vertex) -> usize {
        self.x[server as usize] as usize + 1
    }

    /// Index `i` of the `Q_i` that a departure from `server` decrements.
    pub fn level_before_remove(&self, server: Vertex) -> usize {
        self.x[server as usize] as usize
    }

    pub fn add_task(&mut self, server: Vertex) {
        let s = server as usize;
        let from = self.x[s] as usize;
        debug_assert!(self.buffer.admits(self.x[s]));
        let to = from + 1;
        if to == self.at_least.len() {
            self.at_least.push(0);
            self.levels.push(Fenwick::new(self.x.len()));
        }
        self.levels[from].add(s, -1);
        self.levels[to].add(s, 1);
        self.at_least[to] += 1;
        self.x[s] += 1;
        self.total += 1;
    }

    pub fn remove_task(&mut self, server: Vertex) {
        let s = server as usize;
        let from = self.x[s] as usize;
        assert!(from >= 1, "departure from empty server {server}");
        self.levels[from].add(s, -1);
        self.levels[from - 1].add(s, 1);
        self.at_least[from] -= 1;
        self.x[s] -= 1;
        self.total -= 1;
    }

    /// Full recount of the derived counts against the queue lengths.
    pub fn check_consistency(&self) -> Result<(), String> {
        let n = self.x.len();
        let max = self.x.iter().copied().max().unwrap_or(0) as usize;
        if self.at_least[0] != n as u64 {
            return Err("Q_0 != N".into());
        }
        for i in 1..self.at_least.len().max(max + 1) {
            let direct = self.x.iter().filter(|&&v| v as usize >= i).count() as u64;
            if direct != self.q_count(i) {
                return Err(format!("Q_{i} = {} but recount gives {direct}", self.q_count(i)));
            }
            if self.q_count(i) > self.q_count(i - 1) {
                return Err(format!("Q_{i} exceeds Q_{}", i - 1));
            }
        }
        for (l, f) in self.levels.iter().enumerate() {
            let direct = self.x.iter().filter(|&&v| v as usize == l).count() as i64;
            if f.prefix(n) != direct {
                return Err(format!("level set {l} holds {} servers, expected {direct}", f.prefix(n)));
            }
        }
        let total: u64 = self.x.iter().map(|&v| v as u64).sum();
        if total != self.total {
            return Err("task total out of sync".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_follow_queue_lengths() {
        let s = OccupancyState::from_queue_lengths(&[2, 0, 1, 0], Buffer::Infinite).unwrap();
        assert_eq!(s.q_counts(), vec![2, 1]);
        assert_eq!(s.busy(), 2);
        assert_eq!(s.total_tasks(), 3);
        s.check_consistency().unwrap();
        // order by (len, id): 1, 3, 2, 0
        let order: Vec<u32> = (1..=4).map(|k| s.server_at_rank(k)).collect();
        assert_eq!(order, vec![1, 3, 2, 0]);
        for (pos, &srv) in order.iter().enumerate() {
            assert_eq!(s.rank_by_id(srv), pos as u64 + 1);
        }
        assert_eq!(s.earliest_rank_of_level(0), 1);
        assert_eq!(s.earliest_rank_of_level(1), 3);
        assert_eq!(s.earliest_rank_of_level(2), 4);
        assert_eq!(s.min_level(), 0);
    }

    #[test]
    fn add_remove_roundtrip() {
        let mut s = OccupancyState::new(5, Buffer::Finite(3));
        s.add_task(4);
        s.add_task(4);
        s.add_task(1);
        s.remove_task(4);
        s.check_consistency().unwrap();
        assert_eq!(s.queue_lengths(), &[0, 1, 0, 0, 1]);
        assert_eq!(s.q_counts(), vec![2]);
        assert!(OccupancyState::from_queue_lengths(&[4], Buffer::Finite(3)).is_err());
    }

    #[test]
    fn buffer_parsing() {
        assert_eq!("inf".parse::<Buffer>().unwrap(), Buffer::Infinite);
        assert_eq!("3".parse::<Buffer>().unwrap(), Buffer::Finite(3));
        assert!("0".parse::<Buffer>().is_err());
    }
}
