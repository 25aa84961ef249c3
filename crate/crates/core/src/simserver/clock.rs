use std::cmp::Ordering;
use std::collections::BinaryHeap;

struct Pending<E> {
    at: f64,
    seq: u64,
    event: E,
}

impl<E> PartialEq for Pending<E> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl<E> Eq for Pending<E> {}

impl<E> PartialOrd for Pending<E> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<E> Ord for Pending<E> {
    // reversed: BinaryHeap is a max-heap and we want the earliest event
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .at
            .total_cmp(&self.at)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

/// Discrete-event clock. Events fire in (time, insertion order); `now` only
/// moves forward.
pub struct VirtualClock<E> {
    now: f64,
    seq: u64,
    pending: BinaryHeap<Pending<E>>,
}

impl<E> Default for VirtualClock<E> {
    fn default() -> Self {
        Self::new()
    }
}

impl<E> VirtualClock<E> {
    pub fn new() -> Self {
        Self {
            now: 0.0,
            seq: 0,
            pending: BinaryHeap::new(),
        }
    }

    pub fn now(&self) -> f64 {
        self.now
    }

    pub fn len(&self) -> usize {
        self.pending.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pending.is_empty()
    }

    /// Schedules `event` at `at`, clamped to the present.
    pub fn schedule_at(&mut self, at: f64, event: E) {
        let at = if at.is_nan() { self.now } else { at.max(self.now) };
        self.pending.push(Pending {
            at,
            seq: self.seq,
            event,
        });
        self.seq += 1;
    }

    pub fn schedule_in(&mut self, delay: f64, event: E) {
        self.schedule_at(self.now + delay, event);
    }

    pub fn peek_time(&self) -> Option<f64> {
        self.pending.peek().map(|p| p.at)
    }

    /// Fires the next event, advancing `now` to its time.
    pub fn pop(&mut self) -> Option<(f64, E)> {
        let next = self.pending.pop()?;
        self.now = next.at;
        Some((next.at, next.event))
    }

    /// Moves the clock forward without firing anything. Never moves it back.
    pub fn advance_to(&mut self, at: f64) {
        if at > self.now {
            self.now = at;
        }
    }
}
