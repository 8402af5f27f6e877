use std::cmp::Ordering;
use std::collections::BinaryHeap;

/// Discrete events scheduled on slot boundaries. Declaration order is the
/// tie-break order at equal times.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SimEventKind {
    SlotBoundary,
    Reacquire,
    RescanTimer,
    BlockageStart,
    BlockageEnd,
    Custom(u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimEvent {
    pub slot: u64,
    pub kind: SimEventKind,
    seq: u64,
}

impl SimEvent {
    pub fn sequence(&self) -> u64 {
        self.seq
    }
}

impl Ord for SimEvent {
    fn cmp(&self, other: &Self) -> Ordering {
        // reversed: BinaryHeap is a max-heap
        (other.slot, other.kind, other.seq).cmp(&(self.slot, self.kind, self.seq))
    }
}

impl PartialOrd for SimEvent {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Time-ordered event queue: by slot, then kind, then insertion order.
#[derive(Debug, Default)]
pub struct EventQueue {
    heap: BinaryHeap<SimEvent>,
    next_seq: u64,
    last_popped: Option<u64>,
}

impl EventQueue {
    pub fn new() -> Self {
        Self::default()
    }

    /// Schedule an event. Events in the past of the last popped one are
    /// clamped to that slot so the clock stays monotone.
    pub fn push(&mut self, slot: u64, kind: SimEventKind) {
        let slot = self.last_popped.map_or(slot, |l| slot.max(l));
        self.heap.push(SimEvent {
            slot,
            kind,
            seq: self.next_seq,
        });
        self.next_seq += 1;
    }

    /// Pop the next event due at or before `slot`.
    pub fn pop_due(&mut self, slot: u64) -> Option<SimEvent> {
        if self.heap.peek()?.slot > slot {
            return None;
        }
        let e = self.heap.pop()?;
        self.last_popped = Some(e.slot);
        Some(e)
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }
}
