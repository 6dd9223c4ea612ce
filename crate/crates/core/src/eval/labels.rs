use std::fmt::Debug;

/// Turns raw integer labels into class indices, possibly dropping some.
pub trait LabelMapping: Debug + Send + Sync {
    fn name(&self) -> &'static str;

    /// `Ok(None)` drops the example; `Err` rejects the label.
    fn map(&self, raw: i64) -> Result<Option<usize>, String>;
}

/// Non-negative labels are used as class indices directly.
#[derive(Clone, Copy, Debug)]
pub struct Identity;

impl LabelMapping for Identity {
    fn name(&self) -> &'static str {
        "identity"
    }

    fn map(&self, raw: i64) -> Result<Option<usize>, String> {
        usize::try_from(raw)
            .map(Some)
            .map_err(|_| format!("label {raw} is negative"))
    }
}

/// Star ratings: 1–2 negative, 4–5 positive, 3 dropped.
#[derive(Clone, Copy, Debug)]
pub struct RatingBinary;

impl LabelMapping for RatingBinary {
    fn name(&self) -> &'static str {
        "amazon_binary"
    }

    fn map(&self, raw: i64) -> Result<Option<usize>, String> {
        match raw {
            1 | 2 => Ok(Some(0)),
            3 => Ok(None),
            4 | 5 => Ok(Some(1)),
            _ => Err(format!("rating {raw} outside 1..=5")),
        }
    }
}

/// Star ratings 1–5 as classes 0–4.
#[derive(Clone, Copy, Debug)]
pub struct RatingFive;

impl LabelMapping for RatingFive {
    fn name(&self) -> &'static str {
        "amazon_five"
    }

    fn map(&self, raw: i64) -> Result<Option<usize>, String> {
        match raw {
            1..=5 => Ok(Some(raw as usize - 1)),
            _ => Err(format!("rating {raw} outside 1..=5")),
        }
    }
}

static MAPPINGS: [&dyn LabelMapping; 3] = [&Identity, &RatingBinary, &RatingFive];

pub fn label_mapping_names() -> Vec<&'static str> {
    MAPPINGS.iter().map(|m| m.name()).collect()
}

pub fn label_mapping(name: &str) -> Option<&'static dyn LabelMapping> {
    MAPPINGS.iter().copied().find(|m| m.name() == name)
}
