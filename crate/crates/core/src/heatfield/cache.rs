use std::collections::{HashMap, VecDeque};
use std::sync::{Arc, Mutex, OnceLock};

use super::{build_score_field, solve_to_times, HeatError, NoiseSchedule, ScoreField, SourceSpec};
use crate::gridmap::{SemanticRegion, WorldMap};

/// Score fields of one label for every level of a schedule.
#[derive(Debug, Clone)]
pub struct FieldStack {
    pub label: String,
    pub map_hash: String,
    pub schedule: NoiseSchedule,
    /// Element `t - 1` is level `t`.
    fields: Vec<ScoreField>,
}

impl FieldStack {
    /// Solves the heat equation from every region carrying `label` and
    /// builds the score field at each heat time.
    pub fn build(
        map: &Arc<WorldMap>,
        label: &str,
        schedule: &NoiseSchedule,
        log_floor: f64,
    ) -> Result<FieldStack, HeatError> {
        let regions: Vec<SemanticRegion> = map
            .regions()
            .iter()
            .filter(|r| r.label == label)
            .cloned()
            .collect();
        if regions.is_empty() {
            return Err(HeatError::NoSources);
        }
        Self::from_sources(map, label, &SourceSpec::equal(regions), schedule, log_floor)
    }

    pub fn from_sources(
        map: &Arc<WorldMap>,
        label: &str,
        sources: &SourceSpec,
        schedule: &NoiseSchedule,
        log_floor: f64,
    ) -> Result<FieldStack, HeatError> {
        let states = solve_to_times(sources, map, schedule)?;
        let fields = states
            .iter()
            .enumerate()
            .map(|(i, s)| build_score_field(s, log_floor).map(|f| f.with_level(i + 1)))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(FieldStack {
            label: label.to_string(),
            map_hash: map.content_hash(),
            schedule: schedule.clone(),
            fields,
        })
    }

    /// Field at level `t` (1-based).
    pub fn level(&self, t: usize) -> &ScoreField {
        assert!((1..=self.fields.len()).contains(&t), "level {t} out of range");
        &self.fields[t - 1]
    }

    pub fn levels(&self) -> &[ScoreField] {
        &self.fields
    }

    pub fn len(&self) -> usize {
        self.fields.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fields.is_empty()
    }
}

/// Cache identity: map content, label and everything that shapes the fields.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FieldKey {
    pub map_hash: String,
    pub label: String,
    schedule_bits: Vec<u64>,
    log_floor_bits: u64,
}

impl FieldKey {
    pub fn new(map_hash: &str, label: &str, schedule: &NoiseSchedule, log_floor: f64) -> Self {
        Self {
            map_hash: map_hash.to_string(),
            label: label.to_string(),
            schedule_bits: schedule.heat_times().iter().map(|t| t.to_bits()).collect(),
            log_floor_bits: log_floor.to_bits(),
        }
    }
}

type Slot = Arc<OnceLock<Result<Arc<FieldStack>, HeatError>>>;

pub const DEFAULT_CACHE_CAPACITY: usize = 32;

/// Shared, bounded cache of field stacks.
///
/// Concurrent requests for the same key wait for a single solve; distinct
/// keys solve in parallel. The oldest entry is evicted once the capacity is
/// exceeded. Results never depend on cache state.
pub struct FieldCache {
    inner: Mutex<Inner>,
    capacity: usize,
}

struct Inner {
    slots: HashMap<FieldKey, Slot>,
    order: VecDeque<FieldKey>,
    hits: u64,
    misses: u64,
}

impl Default for FieldCache {
    fn default() -> Self {
        Self::new(DEFAULT_CACHE_CAPACITY)
    }
}

impl FieldCache {
    pub fn new(capacity: usize) -> Self {
        Self {
            inner: Mutex::new(Inner {
                slots: HashMap::new(),
                order: VecDeque::new(),
                hits: 0,
                misses: 0,
            }),
            capacity: capacity.max(1),
        }
    }

    pub fn get_or_build(
        &self,
        map: &Arc<WorldMap>,
        map_hash: &str,
        label: &str,
        schedule: &NoiseSchedule,
        log_floor: f64,
    ) -> Result<Arc<FieldStack>, HeatError> {
        let key = FieldKey::new(map_hash, label, schedule, log_floor);
        let slot = {
            let mut inner = self.inner.lock().unwrap_or_else(|e| e.into_inner());
            if let Some(slot) = inner.slots.get(&key) {
                let slot = slot.clone();
                inner.hits += 1;
                slot
            } else {
                inner.misses += 1;
                let slot: Slot = Arc::new(OnceLock::new());
                inner.slots.insert(key.clone(), slot.clone());
                inner.order.push_back(key);
                while inner.order.len() > self.capacity {
                    if let Some(old) = inner.order.pop_front() {
                        inner.slots.remove(&old);
                    }
                }
                slot
            }
        };
        slot.get_or_init(|| FieldStack::build(map, label, schedule, log_floor).map(Arc::new))
            .clone()
    }

    pub fn len(&self) -> usize {
        self.inner.lock().unwrap_or_else(|e| e.into_inner()).slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `(hits, misses)` since construction.
    pub fn stats(&self) -> (u64, u64) {
        let inner = self.inner.lock().unwrap_or_else(|e| e.into_inner());
        (inner.hits, inner.misses)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::heatfield::build_schedule;

    fn map() -> Arc<WorldMap> {
        Arc::new(
            WorldMap::empty("e", 32, 32)
                .with_regions(vec![
                    SemanticRegion::rect("apple", 4, 4, 3, 3),
                    SemanticRegion::rect("box", 20, 20, 3, 3),
                ])
                .unwrap(),
        )
    }

    #[test]
    fn second_request_hits() {
        let m = map();
        let hash = m.content_hash();
        let sched = build_schedule(5, 0.05, 0.5, 0.15).unwrap();
        let cache = FieldCache::new(4);
        let a = cache.get_or_build(&m, &hash, "apple", &sched, 1e-12).unwrap();
        let b = cache.get_or_build(&m, &hash, "apple", &sched, 1e-12).unwrap();
        assert!(Arc::ptr_eq(&a, &b));
        assert_eq!(cache.stats(), (1, 1));
        assert_eq!(a.len(), 5);
        assert_eq!(a.level(5).t, 5);
    }

    #[test]
    fn eviction_bounds_size() {
        let m = map();
        let hash = m.content_hash();
        let cache = FieldCache::new(2);
        for steps in 2..6 {
            let sched = build_schedule(steps, 0.05, 0.3, 0.15).unwrap();
            cache.get_or_build(&m, &hash, "box", &sched, 1e-12).unwrap();
        }
        assert_eq!(cache.len(), 2);
    }

    #[test]
    fn unknown_label_errors() {
        let m = map();
        let sched = build_schedule(3, 0.05, 0.3, 0.15).unwrap();
        let cache = FieldCache::default();
        assert_eq!(
            cache.get_or_build(&m, &m.content_hash(), "pear", &sched, 1e-12).unwrap_err(),
            HeatError::NoSources
        );
    }

    #[test]
    fn concurrent_reads_agree() {
        let m = map();
        let hash = m.content_hash();
        let sched = build_schedule(4, 0.05, 0.4, 0.15).unwrap();
        let cache = FieldCache::default();
        let stacks: Vec<Arc<FieldStack>> = std::thread::scope(|s| {
            let handles: Vec<_> = (0..6)
                .map(|_| s.spawn(|| cache.get_or_build(&m, &hash, "apple", &sched, 1e-12).unwrap()))
                .collect();
            handles.into_iter().map(|h| h.join().unwrap()).collect()
        });
        for s in &stacks[1..] {
            assert!(Arc::ptr_eq(s, &stacks[0]));
        }
    }
}
