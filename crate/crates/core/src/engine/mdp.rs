//! The assignment MDP. A state is the QoS class of every service; an action
//! moves one service to one class or leaves the assignment alone.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::model::{QosClassId, ServiceId};

/// Bit `j` of the index is set when service `j` is delay-tolerant, so the
/// all-delay-sensitive assignment is state 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NetworkState {
    index: u32,
    services: u8,
}

impl NetworkState {
    pub fn all_sensitive(services: usize) -> Self {
        NetworkState {
            index: 0,
            services: services as u8,
        }
    }

    pub fn from_index(index: usize, services: usize) -> Self {
        assert!(index < Self::count(services), "state index out of range");
        NetworkState {
            index: index as u32,
            services: services as u8,
        }
    }

    pub fn from_classes(classes: &[QosClassId]) -> Self {
        let index = classes
            .iter()
            .enumerate()
            .map(|(j, c)| (*c == QosClassId::DelayTolerant) as u32 * (1 << j))
            .sum();
        NetworkState {
            index,
            services: classes.len() as u8,
        }
    }

    /// `2^services`.
    pub fn count(services: usize) -> usize {
        1 << services
    }

    pub fn index(self) -> usize {
        self.index as usize
    }

    pub fn services(self) -> usize {
        self.services as usize
    }

    pub fn class_of(self, service: usize) -> QosClassId {
        if self.index >> service & 1 == 1 {
            QosClassId::DelayTolerant
        } else {
            QosClassId::DelaySensitive
        }
    }

    pub fn classes(self) -> Vec<QosClassId> {
        (0..self.services()).map(|j| self.class_of(j)).collect()
    }

    pub fn with(self, service: usize, class: QosClassId) -> Self {
        let bit = 1 << service;
        let index = match class {
            QosClassId::DelaySensitive => self.index & !bit,
            QosClassId::DelayTolerant => self.index | bit,
        };
        NetworkState { index, ..self }
    }

    pub fn label(self, services: &[ServiceId]) -> String {
        let parts: Vec<String> = services
            .iter()
            .enumerate()
            .map(|(j, s)| format!("{}={}", s.name(), self.class_of(j).name()))
            .collect();
        parts.join(",")
    }
}

/// `service` is a position in the scenario's service list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Action {
    NoOp,
    Assign { service: usize, class: QosClassId },
}

impl Action {
    /// `2·services + 1`.
    pub fn count(services: usize) -> usize {
        2 * services + 1
    }

    /// NoOp is 0; `Assign(j, class)` is `1 + 2j + (class is tolerant)`.
    pub fn index(self) -> usize {
        match self {
            Action::NoOp => 0,
            Action::Assign { service, class } => 1 + 2 * service + class.slot(),
        }
    }

    pub fn from_index(index: usize, services: usize) -> Self {
        assert!(index < Self::count(services), "action index out of range");
        if index == 0 {
            Action::NoOp
        } else {
            let service = (index - 1) / 2;
            let class = QosClassId::ALL[(index - 1) % 2];
            Action::Assign { service, class }
        }
    }

    pub fn apply(self, state: NetworkState) -> NetworkState {
        match self {
            Action::NoOp => state,
            Action::Assign { service, class } => state.with(service, class),
        }
    }

    pub fn label(self, services: &[ServiceId]) -> String {
        match self {
            Action::NoOp => String::from("NoOp"),
            Action::Assign { service, class } => format!("Assign({},{})", services[service].name(), class.name()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spaces_have_the_documented_size() {
        assert_eq!(NetworkState::count(3), 8);
        assert_eq!(Action::count(3), 7);
        assert_eq!(NetworkState::count(2), 4);
        assert_eq!(Action::count(2), 5);
    }

    #[test]
    fn action_index_round_trips() {
        for i in 0..7 {
            assert_eq!(Action::from_index(i, 3).index(), i);
        }
    }

    #[test]
    fn state_index_is_tolerant_bitmask() {
        use QosClassId::*;
        let s = NetworkState::from_classes(&[DelayTolerant, DelaySensitive, DelayTolerant]);
        assert_eq!(s.index(), 0b101);
        assert_eq!(s.classes(), [DelayTolerant, DelaySensitive, DelayTolerant]);
        let t = Action::Assign { service: 1, class: DelayTolerant }.apply(s);
        assert_eq!(t.index(), 7);
        assert_eq!(Action::NoOp.apply(t), t);
        assert_eq!(Action::Assign { service: 0, class: DelaySensitive }.apply(t).index(), 6);
    }

    #[test]
    fn labels() {
        let services = [ServiceId::WindTurbine, ServiceId::Transportation];
        let a = Action::Assign { service: 1, class: QosClassId::DelaySensitive };
        assert_eq!(a.label(&services), "Assign(Transportation,DelaySensitive)");
        assert_eq!(
            NetworkState::from_index(1, 2).label(&services),
            "WindTurbine=DelayTolerant,Transportation=DelaySensitive"
        );
    }
}
