use std::collections::{BTreeMap, BTreeSet};

use crate::model::{Dataset, Fact};

/// Facts organised as rigid facts plus one slice per time point.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FactStore {
    rigid: BTreeSet<Fact>,
    slices: BTreeMap<i64, BTreeSet<Fact>>,
}

impl FactStore {
    pub fn new() -> Self {
        FactStore::default()
    }

    pub fn insert(&mut self, fact: Fact) -> bool {
        match fact.time {
            None => self.rigid.insert(fact),
            Some(t) => self.slices.entry(t).or_default().insert(fact),
        }
    }

    pub fn extend(&mut self, facts: impl IntoIterator<Item = Fact>) {
        for f in facts {
            self.insert(f);
        }
    }

    /// Removes every temporal fact holding at `time`; returns how many.
    pub fn drop_slice(&mut self, time: i64) -> usize {
        self.slices.remove(&time).map_or(0, |s| s.len())
    }

    pub fn slice(&self, time: i64) -> Option<&BTreeSet<Fact>> {
        self.slices.get(&time)
    }

    pub fn rigid(&self) -> &BTreeSet<Fact> {
        &self.rigid
    }

    /// Number of non-empty time slices.
    pub fn slice_count(&self) -> usize {
        self.slices.values().filter(|s| !s.is_empty()).count()
    }

    pub fn times(&self) -> impl Iterator<Item = i64> + '_ {
        self.slices.iter().filter(|(_, s)| !s.is_empty()).map(|(t, _)| *t)
    }

    pub fn len(&self) -> usize {
        self.rigid.len() + self.slices.values().map(BTreeSet::len).sum::<usize>()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = &Fact> {
        self.rigid.iter().chain(self.slices.values().flatten())
    }

    pub fn to_dataset(&self) -> Dataset {
        self.iter().cloned().collect()
    }
}

impl From<&Dataset> for FactStore {
    fn from(d: &Dataset) -> Self {
        let mut s = FactStore::new();
        s.extend(d.iter().cloned());
        s
    }
}

impl FromIterator<Fact> for FactStore {
    fn from_iter<I: IntoIterator<Item = Fact>>(iter: I) -> Self {
        let mut s = FactStore::new();
        s.extend(iter);
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slices_are_exact() {
        let mut s = FactStore::new();
        s.insert(Fact::temporal("Temp", &["a", "high"], 0));
        s.insert(Fact::temporal("Temp", &["a", "high"], 1));
        s.insert(Fact::rigid("Near", &["a", "b"]));
        assert_eq!(s.slice_count(), 2);
        assert_eq!(s.drop_slice(0), 1);
        assert_eq!(s.slice_count(), 1);
        assert_eq!(s.len(), 2);
        assert!(s.slice(1).unwrap().iter().all(|f| f.time == Some(1)));
    }
}
