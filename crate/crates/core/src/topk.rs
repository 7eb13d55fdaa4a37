//! Space-Saving top-k sketch over a Stream-Summary.
//!
//! Counters live in buckets that share a count. Buckets form a doubly
//! linked list in ascending count order, and each bucket keeps its counters
//! in a doubly linked list ordered by arrival. Incrementing a counter moves
//! it to the neighbouring bucket (creating one if needed) in O(1); eviction
//! takes the oldest counter of the minimum bucket.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const NIL: usize = usize::MAX;

#[derive(Debug, Clone)]
struct Counter {
    element: String,
    count: u64,
    error: u64,
    bucket: usize,
    prev: usize,
    next: usize,
}

#[derive(Debug, Clone)]
struct Bucket {
    count: u64,
    head: usize,
    tail: usize,
    prev: usize,
    next: usize,
}

#[derive(Debug, Clone)]
pub struct TopKSketch {
    capacity: usize,
    counters: Vec<Counter>,
    index: HashMap<String, usize>,
    buckets: Vec<Bucket>,
    free_buckets: Vec<usize>,
    min_bucket: usize,
    stream_len: u64,
    evicted: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopKEntry {
    pub element: String,
    pub count: u64,
    pub error: u64,
    /// `count - error` beats the next counter outside the reported list.
    pub guaranteed: bool,
}

impl TopKSketch {
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::InvalidCapacity);
        }
        Ok(TopKSketch {
            capacity,
            counters: Vec::with_capacity(capacity.min(1 << 16)),
            index: HashMap::new(),
            buckets: Vec::new(),
            free_buckets: Vec::new(),
            min_bucket: NIL,
            stream_len: 0,
            evicted: false,
        })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Number of monitored elements.
    pub fn len(&self) -> usize {
        self.counters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counters.is_empty()
    }

    pub fn stream_len(&self) -> u64 {
        self.stream_len
    }

    /// Whether any element has been replaced since construction.
    pub fn has_evicted(&self) -> bool {
        self.evicted
    }

    /// Current `(count, error)` estimate for `element`, if monitored.
    pub fn estimate(&self, element: &str) -> Option<(u64, u64)> {
        self.index
            .get(element)
            .map(|&i| (self.counters[i].count, self.counters[i].error))
    }

    /// All monitored `(element, count, error)` triples, unordered.
    pub fn iter(&self) -> impl Iterator<Item = (&str, u64, u64)> {
        self.counters.iter().map(|c| (c.element.as_str(), c.count, c.error))
    }

    pub fn offer(&mut self, element: &str) {
        debug_assert!(!element.is_empty());
        self.stream_len += 1;
        if let Some(&ci) = self.index.get(element) {
            self.increment(ci);
            return;
        }
        if self.counters.len() < self.capacity {
            let ci = self.counters.len();
            self.counters.push(Counter {
                element: element.to_owned(),
                count: 1,
                error: 0,
                bucket: NIL,
                prev: NIL,
                next: NIL,
            });
            self.index.insert(element.to_owned(), ci);
            let b = if self.min_bucket != NIL && self.buckets[self.min_bucket].count == 1 {
                self.min_bucket
            } else {
                self.new_bucket(1, NIL, self.min_bucket)
            };
            self.push_back(b, ci);
            return;
        }

        // Replace the oldest counter in the minimum bucket.
        self.evicted = true;
        let ci = self.buckets[self.min_bucket].head;
        let victim = &mut self.counters[ci];
        let old = std::mem::replace(&mut victim.element, element.to_owned());
        victim.error = victim.count;
        self.index.remove(&old);
        self.index.insert(element.to_owned(), ci);
        self.increment(ci);
    }

    fn new_bucket(&mut self, count: u64, prev: usize, next: usize) -> usize {
        let bucket = Bucket {
            count,
            head: NIL,
            tail: NIL,
            prev,
            next,
        };
        let b = match self.free_buckets.pop() {
            Some(b) => {
                self.buckets[b] = bucket;
                b
            }
            None => {
                self.buckets.push(bucket);
                self.buckets.len() - 1
            }
        };
        if prev == NIL {
            self.min_bucket = b;
        } else {
            self.buckets[prev].next = b;
        }
        if next != NIL {
            self.buckets[next].prev = b;
        }
        b
    }

    fn push_back(&mut self, b: usize, ci: usize) {
        let tail = self.buckets[b].tail;
        let c = &mut self.counters[ci];
        c.bucket = b;
        c.prev = tail;
        c.next = NIL;
        if tail == NIL {
            self.buckets[b].head = ci;
        } else {
            self.counters[tail].next = ci;
        }
        self.buckets[b].tail = ci;
    }

    /// Unlink `ci` from its bucket, freeing the bucket if it empties.
    fn detach(&mut self, ci: usize) {
        let Counter {
            bucket: b, prev, next, ..
        } = self.counters[ci];
        if prev == NIL {
            self.buckets[b].head = next;
        } else {
            self.counters[prev].next = next;
        }
        if next == NIL {
            self.buckets[b].tail = prev;
        } else {
            self.counters[next].prev = prev;
        }
        if self.buckets[b].head == NIL {
            let Bucket { prev: bp, next: bn, .. } = self.buckets[b];
            if bp == NIL {
                self.min_bucket = bn;
            } else {
                self.buckets[bp].next = bn;
            }
            if bn != NIL {
                self.buckets[bn].prev = bp;
            }
            self.free_buckets.push(b);
        }
    }

    fn increment(&mut self, ci: usize) {
        let b = self.counters[ci].bucket;
        let new_count = self.counters[ci].count + 1;
        self.counters[ci].count = new_count;
        let next = self.buckets[b].next;
        let sole = self.buckets[b].head == ci && self.buckets[b].tail == ci;
        if sole && (next == NIL || self.buckets[next].count != new_count) {
            // Reuse the bucket in place; ordering is unchanged.
            self.buckets[b].count = new_count;
            return;
        }
        let target = if next != NIL && self.buckets[next].count == new_count {
            next
        } else {
            self.new_bucket(new_count, b, next)
        };
        self.detach(ci);
        self.push_back(target, ci);
    }

    /// Counters in ascending bucket order, oldest first within a bucket.
    fn walk(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.counters.len());
        let mut b = self.min_bucket;
        while b != NIL {
            let mut c = self.buckets[b].head;
            while c != NIL {
                out.push(c);
                c = self.counters[c].next;
            }
            b = self.buckets[b].next;
        }
        out
    }

    /// The `k` highest counters, by count descending then element ascending.
    pub fn query_topk(&self, k: usize) -> Vec<TopKEntry> {
        let mut all: Vec<&Counter> = self.counters.iter().collect();
        all.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.element.cmp(&b.element)));
        let threshold = all.get(k).map(|c| c.count);
        all.iter()
            .take(k)
            .map(|c| TopKEntry {
                element: c.element.clone(),
                count: c.count,
                error: c.error,
                guaranteed: match threshold {
                    _ if !self.evicted => true,
                    Some(t) => c.count - c.error > t,
                    None => false,
                },
            })
            .collect()
    }

    #[cfg(test)]
    fn check_structure(&self) {
        let walked = self.walk();
        assert_eq!(walked.len(), self.counters.len());
        let mut last = 0;
        let mut b = self.min_bucket;
        while b != NIL {
            assert!(self.buckets[b].count > last, "buckets not strictly ascending");
            last = self.buckets[b].count;
            let mut c = self.buckets[b].head;
            while c != NIL {
                assert_eq!(self.counters[c].count, last);
                assert_eq!(self.counters[c].bucket, b);
                c = self.counters[c].next;
            }
            b = self.buckets[b].next;
        }
    }
}

impl TopKSketch {
    /// Minimum monitored count, or 0 when empty.
    pub fn min_count(&self) -> u64 {
        if self.min_bucket == NIL {
            0
        } else {
            self.buckets[self.min_bucket].count
        }
    }

    /// Elements in eviction order (next victim first).
    pub fn eviction_order(&self) -> Vec<&str> {
        self.walk()
            .into_iter()
            .map(|c| self.counters[c].element.as_str())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::BTreeMap;

    fn run(m: usize, stream: &[&str]) -> TopKSketch {
        let mut s = TopKSketch::new(m).unwrap();
        for e in stream {
            s.offer(e);
            s.check_structure();
        }
        s
    }

    #[test]
    fn new_sketch_is_empty() {
        let s = TopKSketch::new(10).unwrap();
        assert_eq!((s.len(), s.capacity()), (0, 10));
        assert!(matches!(TopKSketch::new(0), Err(Error::InvalidCapacity)));
    }

    #[test]
    fn capacity_one_keeps_one() {
        let s = run(1, &["x", "y", "z", "x", "w"]);
        assert_eq!(s.len(), 1);
    }

    #[test]
    fn no_eviction_trace() {
        let s = run(2, &["a", "a", "b"]);
        assert_eq!(s.estimate("a"), Some((2, 0)));
        assert_eq!(s.estimate("b"), Some((1, 0)));
    }

    #[test]
    fn eviction_trace() {
        let s = run(2, &["a", "a", "b", "c"]);
        assert_eq!(s.estimate("a"), Some((2, 0)));
        assert_eq!(s.estimate("c"), Some((2, 1)));
        assert_eq!(s.estimate("b"), None);
    }

    #[test]
    fn single_counter_trace() {
        let s = run(1, &["a", "b", "a"]);
        // b took over a's count of 1, then a took over b's count of 2.
        assert_eq!(s.estimate("a"), Some((3, 2)));
        let (count, error) = s.estimate("a").unwrap();
        assert!(2 <= count && count - error <= 2);
    }

    #[test]
    fn evicts_oldest_in_min_bucket() {
        let s = run(3, &["a", "b", "c", "d"]);
        // a was the oldest count-1 counter.
        assert_eq!(s.estimate("a"), None);
        assert_eq!(s.estimate("d"), Some((2, 1)));
        assert_eq!(s.eviction_order(), ["b", "c", "d"]);
    }

    #[test]
    fn query_exact_regime() {
        let s = run(4, &["a", "a", "b"]);
        let q = s.query_topk(2);
        assert_eq!(q.len(), 2);
        assert_eq!((q[0].element.as_str(), q[0].count), ("a", 2));
        assert_eq!((q[1].element.as_str(), q[1].count), ("b", 1));
        assert!(q.iter().all(|e| e.guaranteed));
    }

    #[test]
    fn query_truncates() {
        let s = run(10, &["a", "b", "c"]);
        assert_eq!(s.query_topk(5).len(), 3);
    }

    #[test]
    fn query_ties_lexicographic() {
        let s = run(10, &["z", "m", "a"]);
        let els: Vec<_> = s.query_topk(3).into_iter().map(|e| e.element).collect();
        assert_eq!(els, ["a", "m", "z"]);
    }

    #[test]
    fn guaranteed_flag_after_eviction() {
        let s = run(3, &["a", "a", "a", "a", "b", "c", "d"]);
        let q = s.query_topk(1);
        assert_eq!(q[0].element, "a");
        assert!(q[0].guaranteed);
        let q = s.query_topk(3);
        assert!(!q[2].guaranteed);
    }

    fn exact(stream: &[String]) -> BTreeMap<&str, u64> {
        let mut m = BTreeMap::new();
        for e in stream {
            *m.entry(e.as_str()).or_insert(0) += 1;
        }
        m
    }

    proptest! {
        #[test]
        fn space_saving_bounds(
            stream in proptest::collection::vec(0u8..20, 0..400),
            m in 1usize..25,
        ) {
            let stream: Vec<String> = stream.into_iter().map(|x| format!("w{x}")).collect();
            let mut s = TopKSketch::new(m).unwrap();
            for e in &stream {
                s.offer(e);
            }
            s.check_structure();
            let truth = exact(&stream);
            let total: u64 = s.iter().map(|(_, c, _)| c).sum();
            prop_assert_eq!(total, stream.len() as u64);
            for (e, c, err) in s.iter() {
                let t = truth[e];
                prop_assert!(t <= c && c - err <= t && err < c);
            }
            if m >= truth.len() {
                for (e, c, err) in s.iter() {
                    prop_assert_eq!((c, err), (truth[e], 0));
                }
            }
        }
    }
}
