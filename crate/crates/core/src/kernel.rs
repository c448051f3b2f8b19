//! Deterministic discrete-event kernel.
//!
//! Events are ordered by `(due, seq)` where `seq` is the insertion counter,
//! so events sharing a due time dispatch in FIFO order. The kernel knows
//! nothing about the models driving it; callers supply a handler that
//! receives each event and may schedule follow-ups.

use std::cmp::{Ordering, Reverse};
use std::collections::hash_map::DefaultHasher;
use std::collections::BinaryHeap;
use std::hash::{Hash, Hasher};

use crate::error::KernelError;
use crate::time::{SimDuration, SimTime};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Event<P> {
    pub due: SimTime,
    pub seq: u64,
    pub payload: P,
}

struct Entry<P>(Event<P>);

impl<P> PartialEq for Entry<P> {
    fn eq(&self, other: &Self) -> bool {
        self.0.due == other.0.due && self.0.seq == other.0.seq
    }
}

impl<P> Eq for Entry<P> {}

impl<P> PartialOrd for Entry<P> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<P> Ord for Entry<P> {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.0.due, self.0.seq).cmp(&(other.0.due, other.0.seq))
    }
}

/// One dispatched event as recorded in the trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TraceEntry {
    pub due: SimTime,
    pub seq: u64,
    pub payload_hash: u64,
}

pub struct Kernel<P> {
    now: SimTime,
    next_seq: u64,
    dispatched: u64,
    queue: BinaryHeap<Reverse<Entry<P>>>,
    trace: Option<Vec<TraceEntry>>,
}

impl<P> Default for Kernel<P> {
    fn default() -> Self {
        Self::new()
    }
}

impl<P> Kernel<P> {
    pub fn new() -> Self {
        Kernel {
            now: SimTime::ZERO,
            next_seq: 0,
            dispatched: 0,
            queue: BinaryHeap::new(),
            trace: None,
        }
    }

    pub fn now(&self) -> SimTime {
        self.now
    }

    pub fn pending(&self) -> usize {
        self.queue.len()
    }

    /// Total events dispatched over the kernel's lifetime.
    pub fn dispatched(&self) -> u64 {
        self.dispatched
    }

    /// Schedules `payload` at absolute time `due`. Returns the sequence number.
    pub fn schedule(&mut self, due: SimTime, payload: P) -> Result<u64, KernelError> {
        if due < self.now {
            return Err(KernelError::ScheduledInPast { due, now: self.now });
        }
        let seq = self.next_seq;
        self.next_seq += 1;
        self.queue.push(Reverse(Entry(Event { due, seq, payload })));
        Ok(seq)
    }

    pub fn schedule_in(&mut self, delay: SimDuration, payload: P) -> Result<u64, KernelError> {
        self.schedule(self.now + delay, payload)
    }

    /// Dispatches every event due at or before `t_end`, then parks the
    /// clock at `t_end`. Returns the number of events dispatched by this call.
    pub fn run_until<F>(&mut self, t_end: SimTime, mut handler: F) -> Result<u64, KernelError>
    where
        P: Hash,
        F: FnMut(&mut Kernel<P>, Event<P>) -> Result<(), KernelError>,
    {
        if t_end < self.now {
            return Err(KernelError::ScheduledInPast {
                due: t_end,
                now: self.now,
            });
        }
        let mut count = 0;
        while let Some(Reverse(head)) = self.queue.peek() {
            if head.0.due > t_end {
                break;
            }
            let Reverse(Entry(event)) = self.queue.pop().expect("peeked");
            debug_assert!(event.due >= self.now);
            self.now = event.due;
            if let Some(trace) = self.trace.as_mut() {
                let mut h = DefaultHasher::new();
                event.payload.hash(&mut h);
                trace.push(TraceEntry {
                    due: event.due,
                    seq: event.seq,
                    payload_hash: h.finish(),
                });
            }
            self.dispatched += 1;
            count += 1;
            handler(self, event)?;
        }
        self.now = t_end;
        Ok(count)
    }

    /// Runs until the queue drains. The clock stops at the last dispatch.
    pub fn run_to_completion<F>(&mut self, mut handler: F) -> Result<u64, KernelError>
    where
        P: Hash,
        F: FnMut(&mut Kernel<P>, Event<P>) -> Result<(), KernelError>,
    {
        let mut total = 0;
        while let Some(Reverse(head)) = self.queue.peek() {
            let due = head.0.due;
            total += self.run_until(due, &mut handler)?;
        }
        Ok(total)
    }

    pub fn enable_trace(&mut self) {
        self.trace.get_or_insert_with(Vec::new);
    }

    pub fn trace(&self) -> Option<&[TraceEntry]> {
        self.trace.as_deref()
    }

    pub fn take_trace(&mut self) -> Option<Vec<TraceEntry>> {
        self.trace.take()
    }
}
