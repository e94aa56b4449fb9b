//! Bounded per-radar packet queues between producer threads and the single
//! pipeline consumer.
//!
//! The consumer pops packets in global timestamp order: it waits until every
//! still-running stream has a packet queued (or a grace period elapses), then
//! takes the earliest head. Producers only hold the lock to enqueue.

use std::collections::VecDeque;
use std::sync::{Condvar, Mutex};
use std::time::{Duration, Instant};

use crate::codec::FramePacket;

/// What a producer does when its queue is full.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OverflowPolicy {
    /// Discard the oldest queued packet (counted). Used for live and paced feeds.
    DropOldest,
    /// Wait for the consumer. Used for as-fast-as-possible replay, where
    /// dropping would make output depend on thread scheduling.
    Block,
}

#[derive(Debug, Default)]
struct Lane {
    buf: VecDeque<FramePacket>,
    closed: bool,
    dropped: u64,
    max_depth: usize,
}

#[derive(Debug)]
struct State {
    lanes: Vec<Lane>,
}

/// Queue snapshot counters.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct IngressCounters {
    pub dropped: Vec<u64>,
    pub max_depth: Vec<usize>,
}

impl IngressCounters {
    pub fn total_dropped(&self) -> u64 {
        self.dropped.iter().sum()
    }

    pub fn max_depth(&self) -> usize {
        self.max_depth.iter().copied().max().unwrap_or(0)
    }
}

/// What [`IngressHub::pop`] produced.
#[derive(Debug, PartialEq)]
pub enum Popped {
    Packet(usize, FramePacket),
    /// Nothing arrived within the grace period; all queues are empty.
    Idle,
    /// Every lane is closed and drained.
    Finished,
}

#[derive(Debug)]
pub struct IngressHub {
    state: Mutex<State>,
    changed: Condvar,
    capacity: usize,
    policy: OverflowPolicy,
}

impl IngressHub {
    pub fn new(lanes: usize, capacity: usize, policy: OverflowPolicy) -> Self {
        assert!(capacity > 0, "queue capacity must be >= 1");
        Self {
            state: Mutex::new(State {
                lanes: (0..lanes).map(|_| Lane::default()).collect(),
            }),
            changed: Condvar::new(),
            capacity,
            policy,
        }
    }

    pub fn lanes(&self) -> usize {
        self.state.lock().expect("ingress lock").lanes.len()
    }

    pub fn push(&self, lane: usize, packet: FramePacket) {
        let mut st = self.state.lock().expect("ingress lock");
        loop {
            let l = &mut st.lanes[lane];
            if l.buf.len() < self.capacity {
                break;
            }
            match self.policy {
                OverflowPolicy::DropOldest => {
                    l.buf.pop_front();
                    l.dropped += 1;
                    break;
                }
                OverflowPolicy::Block => st = self.changed.wait(st).expect("ingress lock"),
            }
        }
        let l = &mut st.lanes[lane];
        l.buf.push_back(packet);
        l.max_depth = l.max_depth.max(l.buf.len());
        self.changed.notify_all();
    }

    /// Mark a producer as finished.
    pub fn close(&self, lane: usize) {
        let mut st = self.state.lock().expect("ingress lock");
        st.lanes[lane].closed = true;
        self.changed.notify_all();
    }

    pub fn counters(&self) -> IngressCounters {
        let st = self.state.lock().expect("ingress lock");
        IngressCounters {
            dropped: st.lanes.iter().map(|l| l.dropped).collect(),
            max_depth: st.lanes.iter().map(|l| l.max_depth).collect(),
        }
    }

    /// Earliest queued packet across lanes, once every open lane has a head
    /// or `grace` has passed.
    pub fn pop(&self, grace: Duration) -> Popped {
        let deadline = Instant::now() + grace;
        let mut st = self.state.lock().expect("ingress lock");
        loop {
            let all_ready = st.lanes.iter().all(|l| l.closed || !l.buf.is_empty());
            let any_queued = st.lanes.iter().any(|l| !l.buf.is_empty());
            let now = Instant::now();
            if all_ready || (any_queued && now >= deadline) {
                let pick = st
                    .lanes
                    .iter()
                    .enumerate()
                    .filter_map(|(i, l)| l.buf.front().map(|p| (p.timestamp_us, i)))
                    .min();
                return match pick {
                    Some((_, i)) => {
                        let p = st.lanes[i].buf.pop_front().expect("head exists");
                        self.changed.notify_all();
                        Popped::Packet(i, p)
                    }
                    None => Popped::Finished,
                };
            }
            if now >= deadline {
                return Popped::Idle;
            }
            st = self
                .changed
                .wait_timeout(st, deadline - now)
                .expect("ingress lock")
                .0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    fn pkt(radar_id: u32, ts: u64) -> FramePacket {
        FramePacket {
            radar_id,
            seq: ts as u32,
            timestamp_us: ts,
            points: Vec::new(),
        }
    }

    #[test]
    fn pops_in_timestamp_order() {
        let hub = IngressHub::new(2, 4, OverflowPolicy::Block);
        hub.push(0, pkt(1, 30));
        hub.push(1, pkt(2, 10));
        hub.push(0, pkt(1, 50));
        hub.close(1);
        let mut got = Vec::new();
        while let Popped::Packet(_, p) = hub.pop(Duration::from_millis(10)) {
            got.push(p.timestamp_us);
        }
        assert_eq!(got, vec![10, 30, 50]);
        hub.close(0);
        assert_eq!(hub.pop(Duration::from_millis(10)), Popped::Finished);
    }

    #[test]
    fn drop_oldest_bounds_depth() {
        let hub = IngressHub::new(1, 3, OverflowPolicy::DropOldest);
        for t in 0..10 {
            hub.push(0, pkt(1, t));
        }
        let c = hub.counters();
        assert_eq!(c.dropped, vec![7]);
        assert_eq!(c.max_depth, vec![3]);
        assert_eq!(hub.pop(Duration::ZERO), Popped::Packet(0, pkt(1, 7)));
    }

    #[test]
    fn waits_for_slow_lane_then_gives_up() {
        let hub = IngressHub::new(2, 3, OverflowPolicy::DropOldest);
        hub.push(0, pkt(1, 100));
        let start = Instant::now();
        assert_eq!(
            hub.pop(Duration::from_millis(30)),
            Popped::Packet(0, pkt(1, 100))
        );
        assert!(start.elapsed() >= Duration::from_millis(30));
        assert_eq!(hub.pop(Duration::from_millis(5)), Popped::Idle);
    }

    #[test]
    fn blocking_producers_deliver_everything_in_order() {
        let hub = Arc::new(IngressHub::new(3, 2, OverflowPolicy::Block));
        let producers: Vec<_> = (0..3)
            .map(|lane| {
                let hub = Arc::clone(&hub);
                std::thread::spawn(move || {
                    for k in 0..200u64 {
                        hub.push(lane, pkt(lane as u32, k * 50 + lane as u64 * 7));
                    }
                    hub.close(lane);
                })
            })
            .collect();
        let mut got = Vec::new();
        while let Popped::Packet(_, p) = hub.pop(Duration::from_secs(5)) {
            got.push(p.timestamp_us);
        }
        for p in producers {
            p.join().unwrap();
        }
        assert_eq!(got.len(), 600);
        assert!(got.windows(2).all(|w| w[0] <= w[1]));
        assert!(hub.counters().max_depth() <= 2);
    }
}
