use super::Episode;

/// Episode memory that keeps the highest-return episodes.
///
/// When full, pushing evicts the lowest-return episode; among equal returns
/// the oldest goes first.
#[derive(Clone, Debug, PartialEq)]
pub struct ReplayBuffer {
    capacity: usize,
    /// `(insertion order, episode)`
    entries: Vec<(u64, Episode)>,
    next_id: u64,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        ReplayBuffer {
            capacity: capacity.max(1),
            entries: Vec::new(),
            next_id: 0,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Episodes in insertion order (after evictions).
    pub fn episodes(&self) -> impl Iterator<Item = &Episode> {
        self.entries.iter().map(|(_, e)| e)
    }

    pub fn push(&mut self, episode: Episode) -> Option<Episode> {
        self.entries.push((self.next_id, episode));
        self.next_id += 1;
        if self.entries.len() <= self.capacity {
            return None;
        }
        let worst = self
            .entries
            .iter()
            .enumerate()
            .min_by(|(_, (ia, a)), (_, (ib, b))| a.total_return.total_cmp(&b.total_return).then(ia.cmp(ib)))
            .map(|(pos, _)| pos)
            .expect("buffer is non-empty");
        Some(self.entries.remove(worst).1)
    }

    /// Up to `k` episodes with the highest returns, best first; equal returns
    /// favour the more recent episode.
    pub fn best(&self, k: usize) -> Vec<&Episode> {
        let mut ranked: Vec<&(u64, Episode)> = self.entries.iter().collect();
        ranked.sort_by(|(ia, a), (ib, b)| b.total_return.total_cmp(&a.total_return).then(ib.cmp(ia)));
        ranked.into_iter().take(k).map(|(_, e)| e).collect()
    }
}
