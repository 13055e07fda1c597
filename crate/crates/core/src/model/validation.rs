use alloc::vec::Vec;
use core::fmt;

/// Which part of a problem a violation refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Location {
    Forcing,
    History,
    Coefficient(usize),
    Delay(usize),
    Impulses,
    InitialValue,
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Location::Forcing => f.write_str("forcing"),
            Location::History => f.write_str("history"),
            Location::Coefficient(i) => write!(f, "term {} coefficient", i + 1),
            Location::Delay(i) => write!(f, "term {} delay", i + 1),
            Location::Impulses => f.write_str("impulses"),
            Location::InitialValue => f.write_str("initial_value"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    PointsNotIncreasing { index: usize },
    PointNotPositive { index: usize },
    LengthMismatch { location: Location, expected: usize, found: usize },
    NotIncreasing { location: Location },
    NonFinite { location: Location },
    Empty { location: Location },
    NonFiniteInitialValue,
    NegativeLag { term: usize },
    DelayExceedsTime { term: usize, t: f64, h: f64 },
    NonMonotoneDeviation { term: usize },
    DeviationStartsLate { term: usize },
    DeviationOvertakes { term: usize },
}

impl Violation {
    pub fn location(&self) -> Location {
        match *self {
            Violation::PointsNotIncreasing { .. } | Violation::PointNotPositive { .. } => {
                Location::Impulses
            }
            Violation::NonFiniteInitialValue => Location::InitialValue,
            Violation::LengthMismatch { location, .. }
            | Violation::NotIncreasing { location }
            | Violation::NonFinite { location }
            | Violation::Empty { location } => location,
            Violation::NegativeLag { term }
            | Violation::DelayExceedsTime { term, .. }
            | Violation::NonMonotoneDeviation { term }
            | Violation::DeviationStartsLate { term }
            | Violation::DeviationOvertakes { term } => Location::Delay(term),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::PointsNotIncreasing { index } => {
                write!(f, "impulse points not strictly increasing at position {}", index + 1)
            }
            Violation::PointNotPositive { index } => {
                write!(f, "impulse point {} is not positive", index + 1)
            }
            Violation::LengthMismatch { location, expected, found } => {
                write!(f, "{location}: expected {expected} values, found {found}")
            }
            Violation::NotIncreasing { location } => {
                write!(f, "{location}: abscissae not strictly increasing")
            }
            Violation::NonFinite { location } => write!(f, "{location}: non-finite value"),
            Violation::Empty { location } => write!(f, "{location}: empty table"),
            Violation::NonFiniteInitialValue => f.write_str("initial value is not finite"),
            Violation::NegativeLag { term } => write!(f, "term {} has a negative lag", term + 1),
            Violation::DelayExceedsTime { term, t, h } => {
                write!(f, "term {}: h({t}) = {h} exceeds t", term + 1)
            }
            Violation::NonMonotoneDeviation { term } => {
                write!(f, "term {}: tabulated deviation is not nondecreasing", term + 1)
            }
            Violation::DeviationStartsLate { term } => {
                write!(f, "term {}: tabulated deviation must start at t <= 0", term + 1)
            }
            Violation::DeviationOvertakes { term } => write!(
                f,
                "term {}: final slope of the deviation exceeds 1, so h(t) > t eventually",
                term + 1
            ),
        }
    }
}

/// Every violation found in a problem.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationErrors(pub Vec<Violation>);

impl ValidationErrors {
    pub fn iter(&self) -> impl Iterator<Item = &Violation> {
        self.0.iter()
    }
}

impl fmt::Display for ValidationErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

impl core::error::Error for ValidationErrors {}
