use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The four semantic slots of a reservation, in canonical order.
///
/// The order doubles as the order of API-call arguments and the order in
/// which the system asks for missing slots.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Slot {
    Cuisine,
    Location,
    PartySize,
    PriceRange,
}

impl Slot {
    pub const ALL: [Slot; 4] = [Slot::Cuisine, Slot::Location, Slot::PartySize, Slot::PriceRange];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Slot::Cuisine => "cuisine",
            Slot::Location => "location",
            Slot::PartySize => "party_size",
            Slot::PriceRange => "price_range",
        }
    }

    /// Upper-case category label used when slot values are grouped by type.
    pub fn category(self) -> &'static str {
        match self {
            Slot::Cuisine => "CUISINE",
            Slot::Location => "LOCATION",
            Slot::PartySize => "PARTY_SIZE",
            Slot::PriceRange => "PRICE_RANGE",
        }
    }

    pub fn parse(name: &str) -> Option<Slot> {
        Slot::ALL.into_iter().find(|s| s.name() == name)
    }
}

impl fmt::Display for Slot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One value per slot.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct PerSlot<T> {
    pub cuisine: T,
    pub location: T,
    pub party_size: T,
    pub price_range: T,
}

impl<T> PerSlot<T> {
    pub fn from_fn(mut f: impl FnMut(Slot) -> T) -> Self {
        PerSlot {
            cuisine: f(Slot::Cuisine),
            location: f(Slot::Location),
            party_size: f(Slot::PartySize),
            price_range: f(Slot::PriceRange),
        }
    }

    pub fn get(&self, slot: Slot) -> &T {
        match slot {
            Slot::Cuisine => &self.cuisine,
            Slot::Location => &self.location,
            Slot::PartySize => &self.party_size,
            Slot::PriceRange => &self.price_range,
        }
    }

    pub fn get_mut(&mut self, slot: Slot) -> &mut T {
        match slot {
            Slot::Cuisine => &mut self.cuisine,
            Slot::Location => &mut self.location,
            Slot::PartySize => &mut self.party_size,
            Slot::PriceRange => &mut self.price_range,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlotCatalog {
    pub cuisines_in: Vec<String>,
    pub cuisines_oov: Vec<String>,
    pub locations_in: Vec<String>,
    pub locations_oov: Vec<String>,
    pub price_ranges: Vec<String>,
    pub party_sizes: Vec<String>,
}

fn words(list: &[&str]) -> Vec<String> {
    list.iter().map(|s| s.to_string()).collect()
}

impl Default for SlotCatalog {
    fn default() -> Self {
        SlotCatalog {
            cuisines_in: words(&["british", "french", "italian", "spanish", "vietnamese"]),
            cuisines_oov: words(&["cantonese", "indian", "japanese", "korean", "thai"]),
            locations_in: words(&["bombay", "london", "madrid", "paris", "rome"]),
            locations_oov: words(&["bangkok", "beijing", "hanoi", "seoul", "tokyo"]),
            price_ranges: words(&["cheap", "moderate", "expensive"]),
            party_sizes: words(&["two", "four", "six", "eight"]),
        }
    }
}

impl SlotCatalog {
    pub fn validate(&self) -> Result<()> {
        let check_len = |name: &str, list: &[String], n: usize| {
            if list.len() != n {
                return Err(Error::Config(format!(
                    "{name} must have {n} entries, found {}",
                    list.len()
                )));
            }
            Ok(())
        };
        check_len("cuisines_in", &self.cuisines_in, 5)?;
        check_len("cuisines_oov", &self.cuisines_oov, 5)?;
        check_len("locations_in", &self.locations_in, 5)?;
        check_len("locations_oov", &self.locations_oov, 5)?;
        check_len("price_ranges", &self.price_ranges, 3)?;
        check_len("party_sizes", &self.party_sizes, 4)?;

        let mut seen = HashSet::new();
        for token in self.all_tokens() {
            if token.is_empty() || token.contains(char::is_whitespace) {
                return Err(Error::Config(format!("slot value {token:?} is not a single token")));
            }
            if !seen.insert(token) {
                return Err(Error::Config(format!("slot value {token:?} listed twice")));
            }
        }
        Ok(())
    }

    fn all_tokens(&self) -> impl Iterator<Item = &String> {
        self.cuisines_in
            .iter()
            .chain(&self.cuisines_oov)
            .chain(&self.locations_in)
            .chain(&self.locations_oov)
            .chain(&self.price_ranges)
            .chain(&self.party_sizes)
    }

    /// Values a goal may draw for `slot` from the selected partition.
    /// Price range and party size are shared between partitions.
    pub fn values(&self, slot: Slot, oov: bool) -> &[String] {
        match (slot, oov) {
            (Slot::Cuisine, false) => &self.cuisines_in,
            (Slot::Cuisine, true) => &self.cuisines_oov,
            (Slot::Location, false) => &self.locations_in,
            (Slot::Location, true) => &self.locations_oov,
            (Slot::PartySize, _) => &self.party_sizes,
            (Slot::PriceRange, _) => &self.price_ranges,
        }
    }

    /// Every value of `slot` across both partitions, in-vocabulary first.
    pub fn all_values(&self, slot: Slot) -> Vec<String> {
        match slot {
            Slot::Cuisine => self.cuisines_in.iter().chain(&self.cuisines_oov).cloned().collect(),
            Slot::Location => self.locations_in.iter().chain(&self.locations_oov).cloned().collect(),
            _ => self.values(slot, false).to_vec(),
        }
    }

    pub fn slot_of(&self, token: &str) -> Option<Slot> {
        Slot::ALL
            .into_iter()
            .find(|&slot| self.all_values(slot).iter().any(|v| v == token))
    }

    pub fn is_oov_value(&self, token: &str) -> bool {
        self.cuisines_oov.iter().chain(&self.locations_oov).any(|v| v == token)
    }

    pub fn in_vocabulary_combinations(&self) -> usize {
        Slot::ALL.iter().map(|&s| self.values(s, false).len()).product()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_catalog_is_valid() {
        let c = SlotCatalog::default();
        c.validate().unwrap();
        assert_eq!(c.in_vocabulary_combinations(), 300);
        assert_eq!(c.all_values(Slot::Cuisine).len(), 10);
        assert_eq!(c.all_values(Slot::Location).len(), 10);
    }

    #[test]
    fn overlapping_partitions_rejected() {
        let mut c = SlotCatalog::default();
        c.cuisines_oov[0] = "british".into();
        assert!(matches!(c.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn slot_lookup() {
        let c = SlotCatalog::default();
        assert_eq!(c.slot_of("madrid"), Some(Slot::Location));
        assert_eq!(c.slot_of("thai"), Some(Slot::Cuisine));
        assert_eq!(c.slot_of("six"), Some(Slot::PartySize));
        assert_eq!(c.slot_of("table"), None);
        assert!(c.is_oov_value("tokyo"));
        assert!(!c.is_oov_value("cheap"));
    }
}
