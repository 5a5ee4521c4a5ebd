use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::Error;

/// Structure function of a chapter.
///
/// The discriminants are the class ids used throughout (tie-breaks, dense
/// weight layouts, CRF label indices).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Label {
    Introduction = 0,
    RelatedWork = 1,
    Method = 2,
    EvalResult = 3,
    Conclusion = 4,
    Other = 5,
}

pub const NUM_LABELS: usize = 6;

impl Label {
    pub const ALL: [Label; NUM_LABELS] = [
        Label::Introduction,
        Label::RelatedWork,
        Label::Method,
        Label::EvalResult,
        Label::Conclusion,
        Label::Other,
    ];

    /// The five classes that carry a rhetorical role; `Other` is excluded.
    pub const SUBSTANTIVE: [Label; 5] = [
        Label::Introduction,
        Label::RelatedWork,
        Label::Method,
        Label::EvalResult,
        Label::Conclusion,
    ];

    #[inline]
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Label> {
        Label::ALL.get(i).copied()
    }

    pub fn is_substantive(self) -> bool {
        self != Label::Other
    }

    /// Wire name used in corpus files and reports.
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Introduction => "introduction",
            Label::RelatedWork => "related_work",
            Label::Method => "method",
            Label::EvalResult => "eval_result",
            Label::Conclusion => "conclusion",
            Label::Other => "other",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Label::ALL
            .iter()
            .copied()
            .find(|l| l.as_str() == s)
            .ok_or_else(|| Error::UnknownLabel(s.to_string()))
    }
}

impl Serialize for Label {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for Label {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wire_names_round_trip() {
        for l in Label::ALL {
            assert_eq!(l.as_str().parse::<Label>().unwrap(), l);
            assert_eq!(Label::from_index(l.index()), Some(l));
        }
    }

    #[test]
    fn rejects_unknown_names() {
        assert!("Introduction".parse::<Label>().is_err());
        assert!("results".parse::<Label>().is_err());
        assert!("".parse::<Label>().is_err());
    }

    #[test]
    fn only_other_is_non_substantive() {
        assert_eq!(Label::ALL.iter().filter(|l| !l.is_substantive()).count(), 1);
        assert!(!Label::Other.is_substantive());
    }
}
