//! Examples, labels and split-tagged collections.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// The four output categories, in head order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    Harassment,
    Indirect,
    Sexual,
    Physical,
}

impl Category {
    pub const ALL: [Category; 4] = [
        Category::Harassment,
        Category::Indirect,
        Category::Sexual,
        Category::Physical,
    ];

    /// Harassment types, i.e. every category except the gate.
    pub const TYPES: [Category; 3] = [Category::Indirect, Category::Sexual, Category::Physical];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Category::Harassment => "harassment",
            Category::Indirect => "indirect",
            Category::Sexual => "sexual",
            Category::Physical => "physical",
        }
    }

    /// Column name in the corpus CSV.
    pub fn column(self) -> &'static str {
        match self {
            Category::Harassment => "harassment",
            Category::Indirect => "IndirectH",
            Category::Sexual => "SexualH",
            Category::Physical => "PhysicalH",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Category {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Category::ALL
            .into_iter()
            .find(|c| c.name().eq_ignore_ascii_case(s) || c.column().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Config(format!("unknown category '{s}'")))
    }
}

/// The four binary labels of one text.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LabelVector {
    pub harassment: bool,
    pub indirect: bool,
    pub sexual: bool,
    pub physical: bool,
}

impl LabelVector {
    pub fn new(harassment: bool, indirect: bool, sexual: bool, physical: bool) -> Self {
        Self {
            harassment,
            indirect,
            sexual,
            physical,
        }
    }

    pub fn get(&self, c: Category) -> bool {
        match c {
            Category::Harassment => self.harassment,
            Category::Indirect => self.indirect,
            Category::Sexual => self.sexual,
            Category::Physical => self.physical,
        }
    }

    pub fn set(&mut self, c: Category, value: bool) {
        match c {
            Category::Harassment => self.harassment = value,
            Category::Indirect => self.indirect = value,
            Category::Sexual => self.sexual = value,
            Category::Physical => self.physical = value,
        }
    }

    pub fn as_array(&self) -> [bool; 4] {
        Category::ALL.map(|c| self.get(c))
    }

    /// Harassment set iff exactly one type is set.
    pub fn is_well_formed(&self) -> bool {
        let types = Category::TYPES.iter().filter(|&&c| self.get(c)).count();
        if self.harassment {
            types == 1
        } else {
            types == 0
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Validation,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Validation, Split::Test];

    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Validation => "validation",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "train" => Ok(Split::Train),
            "validation" | "val" | "dev" => Ok(Split::Validation),
            "test" => Ok(Split::Test),
            other => Err(Error::Config(format!("unknown split '{other}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Example {
    pub id: String,
    pub text: String,
    pub labels: LabelVector,
    pub split: Split,
    /// Set on generated examples, e.g. `bt:de:shuffle:<source id>`.
    pub provenance: Option<String>,
}

/// A split-tagged collection of examples in file order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Dataset {
    pub examples: Vec<Example>,
}

impl Dataset {
    pub fn new(examples: Vec<Example>) -> Self {
        Self { examples }
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn split(&self, split: Split) -> impl Iterator<Item = &Example> {
        self.examples.iter().filter(move |e| e.split == split)
    }

    pub fn split_len(&self, split: Split) -> usize {
        self.split(split).count()
    }
}

/// A text after encoding: vocabulary indices (length ≥ 1) and its labels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EncodedExample {
    pub ids: Vec<usize>,
    pub labels: LabelVector,
}
