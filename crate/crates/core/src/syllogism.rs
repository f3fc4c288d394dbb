//! The 64-item syllogistic domain: moods, figures, response categories and
//! the 29-dimensional multi-hot premise encoding.
//!
//! Terms are always `a`, `b`, `c` with `b` as the middle term. Figures use the
//! middle-term convention of the classic meta-analysis tables:
//!
//! | figure | premise 1 | premise 2 |
//! |--------|-----------|-----------|
//! | 1      | a-b       | b-c       |
//! | 2      | b-a       | c-b       |
//! | 3      | a-b       | c-b       |
//! | 4      | b-a       | b-c       |

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// Width of the encoded feature vector.
pub const FEATURE_DIM: usize = 29;
/// Width of one premise block inside the feature vector.
pub const PREMISE_BLOCK: usize = 14;
/// Number of response categories.
pub const N_RESPONSES: usize = 9;
/// Number of canonical syllogisms.
pub const N_SYLLOGISMS: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SyllogismError {
    #[error("malformed syllogism code {0:?}: expected [AEIO][AEIO][1-4]")]
    BadCode(String),
    #[error("malformed premise {0:?}: expected quantifier + subject + object, e.g. \"Aab\"")]
    BadPremise(String),
    #[error("premise {0:?} must relate the middle term b to exactly one end term")]
    NoMiddleTerm(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Mood {
    A,
    E,
    I,
    O,
}

impl Mood {
    pub const ALL: [Mood; 4] = [Mood::A, Mood::E, Mood::I, Mood::O];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn letter(self) -> char {
        ['A', 'E', 'I', 'O'][self.index()]
    }

    pub fn from_letter(c: char) -> Option<Mood> {
        match c {
            'A' => Some(Mood::A),
            'E' => Some(Mood::E),
            'I' => Some(Mood::I),
            'O' => Some(Mood::O),
            _ => None,
        }
    }

    pub fn is_universal(self) -> bool {
        matches!(self, Mood::A | Mood::E)
    }

    pub fn is_negative(self) -> bool {
        matches!(self, Mood::E | Mood::O)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    A,
    B,
    C,
}

impl Term {
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn letter(self) -> char {
        ['a', 'b', 'c'][self.index()]
    }

    pub fn from_letter(c: char) -> Option<Term> {
        match c {
            'a' => Some(Term::A),
            'b' => Some(Term::B),
            'c' => Some(Term::C),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Figure {
    One = 1,
    Two = 2,
    Three = 3,
    Four = 4,
}

impl Figure {
    pub const ALL: [Figure; 4] = [Figure::One, Figure::Two, Figure::Three, Figure::Four];

    pub fn number(self) -> u8 {
        self as u8
    }

    pub fn from_number(n: u8) -> Option<Figure> {
        Figure::ALL.get((n as usize).wrapping_sub(1)).copied()
    }
}

/// Which premise of a syllogism.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PremiseIndex {
    First,
    Second,
}

/// (subject, object) term order of one premise under a figure.
pub fn premise_terms(figure: Figure, index: PremiseIndex) -> (Term, Term) {
    use Term::{A, B, C};
    match (figure, index) {
        (Figure::One, PremiseIndex::First) => (A, B),
        (Figure::One, PremiseIndex::Second) => (B, C),
        (Figure::Two, PremiseIndex::First) => (B, A),
        (Figure::Two, PremiseIndex::Second) => (C, B),
        (Figure::Three, PremiseIndex::First) => (A, B),
        (Figure::Three, PremiseIndex::Second) => (C, B),
        (Figure::Four, PremiseIndex::First) => (B, A),
        (Figure::Four, PremiseIndex::Second) => (B, C),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Premise {
    pub quantifier: Mood,
    pub subject: Term,
    pub object: Term,
}

impl Premise {
    pub fn new(quantifier: Mood, subject: Term, object: Term) -> Self {
        Premise {
            quantifier,
            subject,
            object,
        }
    }

    pub fn mentions(&self, term: Term) -> bool {
        self.subject == term || self.object == term
    }
}

impl fmt::Display for Premise {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}{}{}",
            self.quantifier.letter(),
            self.subject.letter(),
            self.object.letter()
        )
    }
}

impl FromStr for Premise {
    type Err = SyllogismError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || SyllogismError::BadPremise(s.to_string());
        let chars: Vec<char> = s.trim().chars().collect();
        if chars.len() != 3 {
            return Err(bad());
        }
        let quantifier = Mood::from_letter(chars[0]).ok_or_else(bad)?;
        let subject = Term::from_letter(chars[1]).ok_or_else(bad)?;
        let object = Term::from_letter(chars[2]).ok_or_else(bad)?;
        let p = Premise::new(quantifier, subject, object);
        if subject == object || !p.mentions(Term::B) {
            return Err(SyllogismError::NoMiddleTerm(s.to_string()));
        }
        Ok(p)
    }
}

/// One of the 64 canonical two-premise syllogisms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Syllogism {
    pub mood1: Mood,
    pub mood2: Mood,
    pub figure: Figure,
    pub premise1: Premise,
    pub premise2: Premise,
}

impl Syllogism {
    pub fn new(mood1: Mood, mood2: Mood, figure: Figure) -> Self {
        let (s1, o1) = premise_terms(figure, PremiseIndex::First);
        let (s2, o2) = premise_terms(figure, PremiseIndex::Second);
        Syllogism {
            mood1,
            mood2,
            figure,
            premise1: Premise::new(mood1, s1, o1),
            premise2: Premise::new(mood2, s2, o2),
        }
    }

    /// Parse a code such as `"IE1"`.
    pub fn parse(code: &str) -> Result<Self, SyllogismError> {
        let bad = || SyllogismError::BadCode(code.to_string());
        let chars: Vec<char> = code.chars().collect();
        if chars.len() != 3 {
            return Err(bad());
        }
        let m1 = Mood::from_letter(chars[0]).ok_or_else(bad)?;
        let m2 = Mood::from_letter(chars[1]).ok_or_else(bad)?;
        let fig = chars[2]
            .to_digit(10)
            .and_then(|d| Figure::from_number(d as u8))
            .ok_or_else(bad)?;
        Ok(Syllogism::new(m1, m2, fig))
    }

    /// Replace the figure-derived premises with explicit ones (data files may
    /// carry their own premise forms). Quantifiers must agree with the code.
    pub fn with_premises(
        mut self,
        premise1: Premise,
        premise2: Premise,
    ) -> Result<Self, SyllogismError> {
        if premise1.quantifier != self.mood1 {
            return Err(SyllogismError::BadPremise(premise1.to_string()));
        }
        if premise2.quantifier != self.mood2 {
            return Err(SyllogismError::BadPremise(premise2.to_string()));
        }
        self.premise1 = premise1;
        self.premise2 = premise2;
        Ok(self)
    }

    pub fn code(&self) -> String {
        self.to_string()
    }

    /// Position of this item in the canonical enumeration order.
    pub fn canonical_index(&self) -> usize {
        self.mood1.index() * 16 + self.mood2.index() * 4 + (self.figure.number() as usize - 1)
    }

    /// 29-dimensional multi-hot encoding.
    ///
    /// Layout: `[premise1 block (14)] ++ [premise2 block (14)] ++ [1.0]`, each
    /// block being quantifier one-hot (4), subject one-hot over a/b/c (3),
    /// object one-hot (3), universal flag, negative flag, mentions-a flag,
    /// mentions-c flag.
    pub fn encode(&self) -> FeatureVector {
        let mut v = [0.0; FEATURE_DIM];
        for (block, p) in [self.premise1, self.premise2].iter().enumerate() {
            let base = block * PREMISE_BLOCK;
            v[base + p.quantifier.index()] = 1.0;
            v[base + 4 + p.subject.index()] = 1.0;
            v[base + 7 + p.object.index()] = 1.0;
            v[base + 10] = flag(p.quantifier.is_universal());
            v[base + 11] = flag(p.quantifier.is_negative());
            v[base + 12] = flag(p.mentions(Term::A));
            v[base + 13] = flag(p.mentions(Term::C));
        }
        v[FEATURE_DIM - 1] = 1.0;
        FeatureVector(v)
    }
}

fn flag(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

impl fmt::Display for Syllogism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}{}{}",
            self.mood1.letter(),
            self.mood2.letter(),
            self.figure.number()
        )
    }
}

impl FromStr for Syllogism {
    type Err = SyllogismError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Syllogism::parse(s)
    }
}

/// All 64 syllogisms, mood1 major, then mood2, then figure: AA1, AA2, ..., OO4.
pub fn enumerate_syllogisms() -> Vec<Syllogism> {
    let mut out = Vec::with_capacity(N_SYLLOGISMS);
    for m1 in Mood::ALL {
        for m2 in Mood::ALL {
            for fig in Figure::ALL {
                out.push(Syllogism::new(m1, m2, fig));
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureVector(pub [f64; FEATURE_DIM]);

impl FeatureVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn nonzero_count(&self) -> usize {
        self.0.iter().filter(|&&x| x != 0.0).count()
    }
}

/// Response categories; the discriminant is the column index used by every
/// 9-column matrix in the crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ResponseType {
    Aac,
    Eac,
    Iac,
    Oac,
    Aca,
    Eca,
    Ica,
    Oca,
    Nvc,
}

impl ResponseType {
    pub const ALL: [ResponseType; N_RESPONSES] = [
        ResponseType::Aac,
        ResponseType::Eac,
        ResponseType::Iac,
        ResponseType::Oac,
        ResponseType::Aca,
        ResponseType::Eca,
        ResponseType::Ica,
        ResponseType::Oca,
        ResponseType::Nvc,
    ];

    pub const LABELS: [&'static str; N_RESPONSES] =
        ["Aac", "Eac", "Iac", "Oac", "Aca", "Eca", "Ica", "Oca", "NVC"];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn label(self) -> &'static str {
        Self::LABELS[self.index()]
    }

    pub fn from_label(s: &str) -> Option<ResponseType> {
        Self::LABELS
            .iter()
            .position(|l| *l == s)
            .map(|i| Self::ALL[i])
    }

    /// Conclusion quantifier and direction, `None` for NVC.
    pub fn conclusion(self) -> Option<(Mood, bool)> {
        let i = self.index();
        if i == 8 {
            None
        } else {
            Some((Mood::ALL[i % 4], i < 4))
        }
    }
}

impl fmt::Display for ResponseType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}
