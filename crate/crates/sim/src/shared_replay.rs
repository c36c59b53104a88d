//! Replay buffer shared between concurrent actors and the single learner.

use std::sync::Mutex;

use rand::Rng;
use uabs_core::learn::{Experience, ReplayBuffer};

/// Insertions are atomic per call; sampling copies the drawn records out so
/// the lock is not held during a gradient step.
#[derive(Debug)]
pub struct SharedReplay {
    inner: Mutex<ReplayBuffer>,
}

impl SharedReplay {
    pub fn new(capacity: usize) -> Self {
        Self { inner: Mutex::new(ReplayBuffer::new(capacity)) }
    }

    fn lock(&self) -> std::sync::MutexGuard<'_, ReplayBuffer> {
        // a panicking writer cannot leave a torn record behind: pushes are
        // single assignments, so the data is still usable
        self.inner.lock().unwrap_or_else(|p| p.into_inner())
    }

    pub fn push(&self, e: Experience) {
        self.lock().push(e);
    }

    /// Inserts a batch under one lock acquisition.
    pub fn extend(&self, batch: impl IntoIterator<Item = Experience>) {
        let mut buf = self.lock();
        for e in batch {
            buf.push(e);
        }
    }

    pub fn len(&self) -> usize {
        self.lock().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn sample<R: Rng + ?Sized>(&self, batch: usize, rng: &mut R) -> Vec<Experience> {
        self.lock().sample(batch, rng).into_iter().cloned().collect()
    }

    pub fn snapshot(&self) -> Vec<Experience> {
        self.lock().iter().cloned().collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use uabs_core::safety::ActionMask;
    use uabs_core::Action;

    fn exp(writer: usize, i: usize) -> Experience {
        Experience {
            obs: vec![writer as f64, i as f64],
            action: Action::ALL[i % 4],
            reward: (writer * 1000 + i) as f64,
            next_obs: vec![writer as f64, i as f64 + 1.0],
            next_mask: ActionMask::ALL,
            terminal: false,
        }
    }

    #[test]
    fn concurrent_insertions_are_neither_lost_nor_torn() {
        let buf = SharedReplay::new(10_000);
        std::thread::scope(|s| {
            for w in 0..4 {
                let buf = &buf;
                s.spawn(move || {
                    for i in 0..500 {
                        buf.push(exp(w, i));
                    }
                });
            }
        });
        let all = buf.snapshot();
        assert_eq!(all.len(), 2000);
        for w in 0..4 {
            let mine: Vec<usize> = all.iter().filter(|e| e.obs[0] == w as f64).map(|e| e.obs[1] as usize).collect();
            // per-writer order is preserved
            assert_eq!(mine, (0..500).collect::<Vec<_>>());
        }
        for e in &all {
            let (w, i) = (e.obs[0] as usize, e.obs[1] as usize);
            assert_eq!(*e, exp(w, i));
        }
    }
}
