use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::BeamPair;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BackupPair {
    pub pair: BeamPair,
    pub rss_dbm: f64,
    pub recorded_at_s: f64,
}

impl BackupPair {
    pub fn new(pair: BeamPair, rss_dbm: f64, recorded_at_s: f64) -> Self {
        BackupPair {
            pair,
            rss_dbm,
            recorded_at_s,
        }
    }
}

/// One backup NLoS pair per BS LoS beam. Recording under a beam that
/// already has an entry replaces it.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BeamPairStore {
    entries: BTreeMap<usize, BackupPair>,
}

impl BeamPairStore {
    pub fn record(&mut self, los_bs_beam: usize, backup: BackupPair) -> Option<BackupPair> {
        self.entries.insert(los_bs_beam, backup)
    }

    pub fn get(&self, los_bs_beam: usize) -> Option<&BackupPair> {
        self.entries.get(&los_bs_beam)
    }

    pub fn remove(&mut self, los_bs_beam: usize) -> Option<BackupPair> {
        self.entries.remove(&los_bs_beam)
    }

    pub fn clear(&mut self) {
        self.entries.clear();
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &BackupPair)> {
        self.entries.iter().map(|(k, v)| (*k, v))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overwrite_replaces_and_refreshes() {
        let mut s = BeamPairStore::default();
        assert!(s
            .record(12, BackupPair::new(BeamPair::new(3, 4), -65.0, 0.1))
            .is_none());
        let old = s
            .record(12, BackupPair::new(BeamPair::new(5, 6), -63.0, 0.2))
            .unwrap();
        assert_eq!(old.pair, BeamPair::new(3, 4));
        assert_eq!(s.len(), 1);
        let e = s.get(12).unwrap();
        assert_eq!(e.pair, BeamPair::new(5, 6));
        assert_eq!(e.recorded_at_s, 0.2);
    }

    #[test]
    fn entries_keyed_per_los_beam() {
        let mut s = BeamPairStore::default();
        s.record(1, BackupPair::new(BeamPair::new(0, 0), -70.0, 0.0));
        s.record(2, BackupPair::new(BeamPair::new(1, 1), -70.0, 0.0));
        assert_eq!(s.len(), 2);
        assert_eq!(s.iter().map(|(k, _)| k).collect::<Vec<_>>(), vec![1, 2]);
        s.remove(1);
        assert!(s.get(1).is_none());
        s.clear();
        assert!(s.is_empty());
    }
}
