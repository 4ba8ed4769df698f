use im::{OrdMap, OrdSet};

use crate::types::Position;

/// Asserted `sub ⊑ sup` pairs over edge types, with the reflexive-transitive
/// closure kept as a "below" set per type. The order is acyclic.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SubPropertyOrder {
    pairs: OrdSet<(Position, Position)>,
    /// `below[x]` = every `y` with `y ⊑ x`, excluding `x` itself.
    below: OrdMap<Position, OrdSet<Position>>,
}

impl SubPropertyOrder {
    pub fn pairs(&self) -> impl Iterator<Item = (Position, Position)> + '_ {
        self.pairs.iter().copied()
    }

    pub fn contains(&self, sub: Position, sup: Position) -> bool {
        self.pairs.contains(&(sub, sup))
    }

    /// The downward closure of `x`, including `x`.
    pub fn below(&self, x: Position) -> OrdSet<Position> {
        let mut out = self.below.get(&x).cloned().unwrap_or_default();
        out.insert(x);
        out
    }

    /// Records `sub ⊑ sup`; callers check acyclicity first.
    pub fn insert(&mut self, sub: Position, sup: Position) {
        if self.pairs.insert((sub, sup)).is_some() {
            return;
        }
        // everything at or below sub is now below sup and everything above sup
        let moved = self.below(sub);
        let mut above = vec![sup];
        above.extend(
            self.below
                .iter()
                .filter(|(_, set)| set.contains(&sup))
                .map(|(k, _)| *k),
        );
        for a in above {
            let entry = self.below.entry(a).or_default();
            for m in moved.iter() {
                if *m != a {
                    entry.insert(*m);
                }
            }
        }
    }
}
