//! Fractional label state shared by every propagation method.

use serde::{Deserialize, Serialize};

use crate::graph::VertexId;

/// Binary ground-truth class.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Class {
    Zero,
    One,
}

impl Class {
    /// The pinned fractional value of a ground-truth vertex of this class.
    pub fn value(self) -> f64 {
        match self {
            Class::Zero => 0.0,
            Class::One => 1.0,
        }
    }

    pub fn from_bit(bit: u8) -> Option<Self> {
        match bit {
            0 => Some(Class::Zero),
            1 => Some(Class::One),
            _ => None,
        }
    }

    pub fn bit(self) -> u8 {
        match self {
            Class::Zero => 0,
            Class::One => 1,
        }
    }

    /// Class reported for a fractional label: 1 iff `f >= 0.5`.
    pub fn of_fraction(f: f64) -> Self {
        if f >= 0.5 {
            Class::One
        } else {
            Class::Zero
        }
    }
}

/// Value given to vertices that have no path to any ground truth.
pub const NEUTRAL: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Role {
    Unlabeled,
    Neutral,
    Truth(Class),
}

/// Fractional labels in `[0, 1]` indexed by vertex id, plus the ground-truth
/// partition.
///
/// Ground-truth vertices always hold their class value. Unlabeled vertices may
/// carry a neutral pin, meaning they are isolated or cannot reach any ground
/// truth and are held at 0.5 outside propagation.
#[derive(Clone, Debug, Default)]
pub struct LabelState {
    f: Vec<f64>,
    role: Vec<Role>,
    class_counts: [usize; 2],
}

impl LabelState {
    pub fn new() -> Self {
        Self::default()
    }

    fn ensure(&mut self, u: VertexId) {
        let need = u.index() + 1;
        if self.f.len() < need {
            self.f.resize(need, NEUTRAL);
            self.role.resize(need, Role::Unlabeled);
        }
    }

    /// Number of id slots (one past the largest id ever touched).
    pub fn capacity(&self) -> usize {
        self.f.len()
    }

    pub fn value(&self, u: VertexId) -> f64 {
        self.f.get(u.index()).copied().unwrap_or(NEUTRAL)
    }

    pub fn values(&self) -> &[f64] {
        &self.f
    }

    pub fn ground_truth(&self, u: VertexId) -> Option<Class> {
        match self.role.get(u.index()) {
            Some(Role::Truth(c)) => Some(*c),
            _ => None,
        }
    }

    pub fn is_labeled(&self, u: VertexId) -> bool {
        self.ground_truth(u).is_some()
    }

    pub fn is_neutral(&self, u: VertexId) -> bool {
        matches!(self.role.get(u.index()), Some(Role::Neutral))
    }

    /// Ground truth or neutral pin: excluded from propagation.
    pub(crate) fn is_fixed(&self, u: VertexId) -> bool {
        !matches!(self.role.get(u.index()), Some(Role::Unlabeled) | None)
    }

    /// Number of ground-truth vertices of `class`.
    pub fn class_count(&self, class: Class) -> usize {
        self.class_counts[class.bit() as usize]
    }

    /// Pins `u` as ground truth of `class`.
    pub fn set_truth(&mut self, u: VertexId, class: Class) {
        self.ensure(u);
        let i = u.index();
        if let Role::Truth(old) = self.role[i] {
            self.class_counts[old.bit() as usize] -= 1;
        }
        self.role[i] = Role::Truth(class);
        self.class_counts[class.bit() as usize] += 1;
        self.f[i] = class.value();
    }

    /// Sets the fractional label of an unlabeled vertex. Ground-truth vertices
    /// are left untouched.
    pub fn set_value(&mut self, u: VertexId, value: f64) {
        self.ensure(u);
        if !matches!(self.role[u.index()], Role::Truth(_)) {
            self.f[u.index()] = value;
        }
    }

    /// Registers a fresh unlabeled vertex with an initial value.
    pub fn insert_unlabeled(&mut self, u: VertexId, value: f64) {
        self.ensure(u);
        let i = u.index();
        if let Role::Truth(old) = self.role[i] {
            self.class_counts[old.bit() as usize] -= 1;
        }
        self.role[i] = Role::Unlabeled;
        self.f[i] = value;
    }

    /// Pins an unlabeled vertex at 0.5 and excludes it from propagation.
    pub fn pin_neutral(&mut self, u: VertexId) {
        self.ensure(u);
        let i = u.index();
        if !matches!(self.role[i], Role::Truth(_)) {
            self.role[i] = Role::Neutral;
            self.f[i] = NEUTRAL;
        }
    }

    pub fn clear_neutral(&mut self, u: VertexId) {
        if let Some(r @ Role::Neutral) = self.role.get_mut(u.index()) {
            *r = Role::Unlabeled;
        }
    }

    /// Forgets a deleted vertex, including any ground-truth membership.
    pub fn remove(&mut self, u: VertexId) {
        let i = u.index();
        if i >= self.f.len() {
            return;
        }
        if let Role::Truth(old) = self.role[i] {
            self.class_counts[old.bit() as usize] -= 1;
        }
        self.role[i] = Role::Unlabeled;
        self.f[i] = NEUTRAL;
    }

    pub(crate) fn reserve_ids(&mut self, capacity: usize) {
        if capacity > 0 {
            self.ensure(VertexId::from_index(capacity - 1));
        }
    }
}
