//! Deterministic discrete-event kernel.
//!
//! Time is an integer count of picoseconds. Events are ordered by
//! `(time, sequence)` where `sequence` is the insertion counter, so two
//! events at the same instant always dequeue in the order they were
//! scheduled. Every component of the simulator drives its activity through
//! one [`Engine`] instance.

use std::cmp::{Ordering, Reverse};
use std::collections::hash_map::DefaultHasher;
use std::collections::{BinaryHeap, HashSet};
use std::fmt;
use std::hash::Hasher;
use std::ops::{Add, Sub};

use thiserror::Error;

/// Simulation time in picoseconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Picos(pub u64);

impl Picos {
    pub const ZERO: Picos = Picos(0);
    pub const PER_SECOND: u64 = 1_000_000_000_000;

    /// Nearest picosecond to `seconds`. Negative inputs clamp to zero.
    pub fn from_secs(seconds: f64) -> Self {
        if seconds <= 0.0 {
            Picos(0)
        } else {
            Picos((seconds * Self::PER_SECOND as f64).round() as u64)
        }
    }

    pub fn as_secs(self) -> f64 {
        self.0 as f64 / Self::PER_SECOND as f64
    }

    pub fn saturating_sub(self, other: Picos) -> Picos {
        Picos(self.0.saturating_sub(other.0))
    }
}

impl Add for Picos {
    type Output = Picos;
    fn add(self, rhs: Picos) -> Picos {
        Picos(self.0 + rhs.0)
    }
}

impl Sub for Picos {
    type Output = Picos;
    fn sub(self, rhs: Picos) -> Picos {
        Picos(self.0 - rhs.0)
    }
}

impl fmt::Display for Picos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ps", self.0)
    }
}

/// Identifies the component an event is addressed to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub u32);

/// Returned by [`Engine::schedule`]; pass to [`Engine::cancel`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct EventHandle(u64);

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EngineError {
    #[error("cannot schedule event at {time} before current time {now}")]
    ScheduleInPast { time: Picos, now: Picos },
    #[error("run_until target {t_end} is before current time {now}")]
    RunBackwards { t_end: Picos, now: Picos },
}

/// A dequeued event.
#[derive(Debug, Clone)]
pub struct Event<P> {
    pub time: Picos,
    pub seq: u64,
    pub target: NodeId,
    pub payload: P,
}

struct Entry<P> {
    time: Picos,
    seq: u64,
    target: NodeId,
    payload: P,
}

impl<P> PartialEq for Entry<P> {
    fn eq(&self, other: &Self) -> bool {
        self.time == other.time && self.seq == other.seq
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
        (self.time, self.seq).cmp(&(other.time, other.seq))
    }
}

/// Min-queue of events keyed by `(time, sequence)`.
///
/// Cancellation is lazy: cancelled sequences are skipped when they reach
/// the head of the queue.
pub struct EventQueue<P> {
    heap: BinaryHeap<Reverse<Entry<P>>>,
    next_seq: u64,
    cancelled: HashSet<u64>,
}

impl<P> Default for EventQueue<P> {
    fn default() -> Self {
        Self::new()
    }
}

impl<P> EventQueue<P> {
    pub fn new() -> Self {
        Self {
            heap: BinaryHeap::new(),
            next_seq: 0,
            cancelled: HashSet::new(),
        }
    }

    pub fn push(&mut self, time: Picos, target: NodeId, payload: P) -> EventHandle {
        let seq = self.next_seq;
        self.next_seq += 1;
        self.heap.push(Reverse(Entry {
            time,
            seq,
            target,
            payload,
        }));
        EventHandle(seq)
    }

    /// Returns false if the handle was already cancelled or never issued.
    pub fn cancel(&mut self, handle: EventHandle) -> bool {
        if handle.0 >= self.next_seq {
            return false;
        }
        // An already-dequeued handle cannot be distinguished cheaply from a
        // pending one; inserting it is harmless because its seq never recurs.
        self.cancelled.insert(handle.0)
    }

    fn skip_cancelled(&mut self) {
        while let Some(Reverse(head)) = self.heap.peek() {
            if self.cancelled.remove(&head.seq) {
                self.heap.pop();
            } else {
                break;
            }
        }
    }

    pub fn peek_time(&mut self) -> Option<Picos> {
        self.skip_cancelled();
        self.heap.peek().map(|Reverse(e)| e.time)
    }

    pub fn pop(&mut self) -> Option<Event<P>> {
        self.skip_cancelled();
        self.heap.pop().map(|Reverse(e)| Event {
            time: e.time,
            seq: e.seq,
            target: e.target,
            payload: e.payload,
        })
    }

    pub fn is_empty(&mut self) -> bool {
        self.peek_time().is_none()
    }

    /// Number of entries still held, including cancelled ones not yet skipped.
    pub fn raw_len(&self) -> usize {
        self.heap.len()
    }
}

/// Clock state of one simulation instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimClock {
    pub now: Picos,
    pub rng_seed: u64,
}

/// Single-threaded event kernel with a running hash of the processed trace.
pub struct Engine<P> {
    queue: EventQueue<P>,
    clock: SimClock,
    processed: u64,
    trace: DefaultHasher,
}

impl<P> Engine<P> {
    pub fn new(rng_seed: u64) -> Self {
        Self {
            queue: EventQueue::new(),
            clock: SimClock {
                now: Picos::ZERO,
                rng_seed,
            },
            processed: 0,
            trace: DefaultHasher::new(),
        }
    }

    pub fn now(&self) -> Picos {
        self.clock.now
    }

    pub fn clock(&self) -> SimClock {
        self.clock
    }

    pub fn seed(&self) -> u64 {
        self.clock.rng_seed
    }

    pub fn processed(&self) -> u64 {
        self.processed
    }

    /// Hash over `(time, seq, target)` of every event processed so far.
    pub fn trace_hash(&self) -> u64 {
        self.trace.finish()
    }

    pub fn schedule(
        &mut self,
        time: Picos,
        target: NodeId,
        payload: P,
    ) -> Result<EventHandle, EngineError> {
        if time < self.clock.now {
            return Err(EngineError::ScheduleInPast {
                time,
                now: self.clock.now,
            });
        }
        Ok(self.queue.push(time, target, payload))
    }

    pub fn schedule_after(&mut self, delay: Picos, target: NodeId, payload: P) -> EventHandle {
        self.queue.push(self.clock.now + delay, target, payload)
    }

    pub fn cancel(&mut self, handle: EventHandle) -> bool {
        self.queue.cancel(handle)
    }

    pub fn next_time(&mut self) -> Option<Picos> {
        self.queue.peek_time()
    }

    pub fn has_pending(&mut self) -> bool {
        !self.queue.is_empty()
    }

    /// Dequeues the next event if its time is `<= t_end`, advancing the clock.
    pub fn pop_until(&mut self, t_end: Picos) -> Option<Event<P>> {
        match self.queue.peek_time() {
            Some(t) if t <= t_end => {}
            _ => return None,
        }
        let ev = self.queue.pop()?;
        self.clock.now = ev.time;
        self.processed += 1;
        self.trace.write_u64(ev.time.0);
        self.trace.write_u64(ev.seq);
        self.trace.write_u32(ev.target.0);
        Some(ev)
    }

    /// Processes every event with time `<= t_end` through `handler`, which
    /// may schedule further events. Returns the number processed.
    ///
    /// Afterwards the clock sits at `t_end` if events remain beyond it, and
    /// at the last processed event time otherwise.
    pub fn run_until<F>(&mut self, t_end: Picos, mut handler: F) -> Result<u64, EngineError>
    where
        F: FnMut(&mut Engine<P>, Event<P>),
    {
        if t_end < self.clock.now {
            return Err(EngineError::RunBackwards {
                t_end,
                now: self.clock.now,
            });
        }
        let mut count = 0;
        while let Some(ev) = self.pop_until(t_end) {
            handler(self, ev);
            count += 1;
        }
        if self.queue.peek_time().is_some() {
            self.clock.now = t_end;
        }
        Ok(count)
    }
}
