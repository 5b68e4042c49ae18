/// Binary indexed tree over `0..len` with non-negative counts.
#[derive(Debug, Clone)]
pub(crate) struct Fenwick {
    tree: Vec<i64>,
    top: usize,
}

impl Fenwick {
    pub(crate) fn new(len: usize) -> Self {
        let top = if len == 0 { 0 } else { 1 << (usize::BITS - 1 - len.leading_zeros()) };
        Self { tree: vec![0; len + 1], top }
    }

    /// All positions set to one.
    pub(crate) fn ones(len: usize) -> Self {
        let mut f = Self::new(len);
        for i in 1..=len {
            f.tree[i] += 1;
            let parent = i + (i & i.wrapping_neg());
            if parent <= len {
                f.tree[parent] += f.tree[i];
            }
        }
        f
    }

    pub(crate) fn add(&mut self, index: usize, delta: i64) {
        let mut i = index + 1;
        while i < self.tree.len() {
            self.tree[i] += delta;
            i += i & i.wrapping_neg();
        }
    }

    /// Sum over `0..end`.
    pub(crate) fn prefix(&self, end: usize) -> i64 {
        let mut i = end;
        let mut s = 0;
        while i > 0 {
            s += self.tree[i];
            i -= i & i.wrapping_neg();
        }
        s
    }

    /// Smallest index whose inclusive prefix sum reaches `k` (1-based rank).
    pub(crate) fn find_kth(&self, mut k: i64) -> usize {
        debug_assert!(k >= 1);
        let mut pos = 0;
        let mut step = self.top;
        while step > 0 {
            let next = pos + step;
            if next < self.tree.len() && self.tree[next] < k {
                pos = next;
                k -= self.tree[next];
            }
            step >>= 1;
        }
        pos
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kth_matches_linear_scan() {
        let mut f = Fenwick::new(13);
        let mut present = vec![false; 13];
        for i in [0usize, 3, 4, 7, 12] {
            f.add(i, 1);
            present[i] = true;
        }
        let ids: Vec<usize> = (0..13).filter(|&i| present[i]).collect();
        for (k, &id) in ids.iter().enumerate() {
            assert_eq!(f.find_kth(k as i64 + 1), id);
        }
        assert_eq!(f.prefix(5), 3);
        f.add(3, -1);
        assert_eq!(f.find_kth(2), 4);
    }

    #[test]
    fn ones_is_all_present() {
        let f = Fenwick::ones(10);
        for k in 1..=10 {
            assert_eq!(f.find_kth(k), k as usize - 1);
        }
        assert_eq!(f.prefix(10), 10);
    }
}
