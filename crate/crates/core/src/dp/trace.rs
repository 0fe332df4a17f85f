use crate::error::{Error, Result};

/// Per-step `(parent slot, action)` records of every retained entry.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Trace {
    steps: Vec<Vec<(u32, u32)>>,
}

impl Trace {
    pub fn new() -> Self {
        Trace::default()
    }

    pub fn push_step(&mut self, record: Vec<(u32, u32)>) {
        self.steps.push(record);
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn step(&self, t: usize) -> &[(u32, u32)] {
        &self.steps[t]
    }

    /// Total number of stored records.
    pub fn records(&self) -> usize {
        self.steps.iter().map(Vec::len).sum()
    }
}

/// Follows parent pointers back from `slot` of the last step and returns the
/// actions in order.
pub fn backtrack(trace: &Trace, slot: usize) -> Result<Vec<usize>> {
    let mut actions = Vec::with_capacity(trace.len());
    let mut slot = slot;
    for t in (0..trace.len()).rev() {
        let &(parent, action) = trace.step(t).get(slot).ok_or_else(|| {
            Error::Internal(format!(
                "trace step {t} has {} entries, slot {slot} requested",
                trace.step(t).len()
            ))
        })?;
        actions.push(action as usize);
        slot = parent as usize;
    }
    if slot != 0 {
        return Err(Error::Internal(format!(
            "trace does not lead back to the initial entry (slot {slot})"
        )));
    }
    actions.reverse();
    Ok(actions)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn follows_parents() {
        let mut t = Trace::new();
        t.push_step(vec![(0, 3), (0, 1)]);
        t.push_step(vec![(1, 2), (0, 1), (0, 2)]);
        t.push_step(vec![(2, 0)]);
        assert_eq!(backtrack(&t, 0).unwrap(), vec![3, 2, 0]);
    }

    #[test]
    fn rejects_bad_slots() {
        let mut t = Trace::new();
        t.push_step(vec![(0, 3)]);
        t.push_step(vec![(4, 2)]);
        assert!(backtrack(&t, 0).is_err());
        assert!(backtrack(&t, 7).is_err());
    }
}
