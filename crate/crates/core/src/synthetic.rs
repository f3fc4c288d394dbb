//! Synthetic response tables in the human-data schema.
//!
//! These are NOT human data. They exist so the full pipeline can be exercised
//! (and its determinism checked) without the real response table. Each row is
//! a noisy mixture of logically valid conclusions, an atmosphere-style bias,
//! and NVC, so the table has enough structure for models to fit.

use crate::dataset::{HumanMatrix, HumanRow};
use crate::nnkit::RngStream;
use crate::syllogism::{enumerate_syllogisms, Figure, Mood, Premise, ResponseType, Syllogism, Term, N_RESPONSES};

const VALID_WEIGHT: f64 = 3.0;
const ATMOSPHERE_WEIGHT: f64 = 1.5;
const NVC_WHEN_NONE_VALID: f64 = 2.0;
const NVC_OTHERWISE: f64 = 0.3;
const BASELINE: f64 = 0.1;
const NOISE_SD: f64 = 0.3;
const MIN_PERCENT: f64 = 1.0;

/// Venn regions are the non-empty subsets of {a, b, c}, as bitmasks 1..=7.
fn in_region(region: u8, t: Term) -> bool {
    region & (1 << t.index()) != 0
}

fn holds(p: &Premise, model: u8) -> bool {
    let mut regions = (1u8..8).filter(|r| model & (1 << (r - 1)) != 0);
    let (s, o) = (p.subject, p.object);
    match p.quantifier {
        Mood::A => regions.all(|r| !in_region(r, s) || in_region(r, o)),
        Mood::E => regions.all(|r| !(in_region(r, s) && in_region(r, o))),
        Mood::I => regions.any(|r| in_region(r, s) && in_region(r, o)),
        Mood::O => regions.any(|r| in_region(r, s) && !in_region(r, o)),
    }
}

fn conclusion_premise(resp: ResponseType) -> Option<Premise> {
    resp.conclusion().map(|(m, ac)| {
        if ac {
            Premise::new(m, Term::A, Term::C)
        } else {
            Premise::new(m, Term::C, Term::A)
        }
    })
}

/// Whether each of the eight conclusions follows from the premises, assuming
/// every term is non-empty (existential import).
pub fn valid_conclusions(s: &Syllogism) -> [bool; N_RESPONSES] {
    let models: Vec<u8> = (1u8..=127)
        .filter(|&m| {
            [Term::A, Term::B, Term::C].iter().all(|&t| {
                (1u8..8).any(|r| m & (1 << (r - 1)) != 0 && in_region(r, t))
            })
        })
        .filter(|&m| holds(&s.premise1, m) && holds(&s.premise2, m))
        .collect();
    std::array::from_fn(|k| match conclusion_premise(ResponseType::ALL[k]) {
        Some(c) => !models.is_empty() && models.iter().all(|&m| holds(&c, m)),
        None => false,
    })
}

/// Conclusion mood favored by the premise moods: negative if any premise is
/// negative, particular if any premise is particular.
fn atmosphere(s: &Syllogism) -> Mood {
    let negative = s.mood1.is_negative() || s.mood2.is_negative();
    let universal = s.mood1.is_universal() && s.mood2.is_universal();
    match (universal, negative) {
        (true, false) => Mood::A,
        (true, true) => Mood::E,
        (false, false) => Mood::I,
        (false, true) => Mood::O,
    }
}

/// Noise-free response weights for one item (unnormalized).
pub fn response_weights(s: &Syllogism) -> [f64; N_RESPONSES] {
    let valid = valid_conclusions(s);
    let any_valid = valid.iter().any(|&v| v);
    let atm = atmosphere(s);
    let (want_ac, want_ca) = match s.figure {
        Figure::One => (true, false),
        Figure::Two => (false, true),
        Figure::Three | Figure::Four => (true, true),
    };
    std::array::from_fn(|k| {
        let resp = ResponseType::ALL[k];
        let mut w = BASELINE;
        match resp.conclusion() {
            None => w += if any_valid { NVC_OTHERWISE } else { NVC_WHEN_NONE_VALID },
            Some((m, ac)) => {
                if valid[k] {
                    w += VALID_WEIGHT;
                }
                if m == atm && ((ac && want_ac) || (!ac && want_ca)) {
                    w += ATMOSPHERE_WEIGHT;
                }
            }
        }
        w
    })
}

/// A 64-row synthetic table: weights perturbed by log-normal noise, scaled to
/// percentages, cells under 1% zeroed, survivors rescaled and rounded to one
/// decimal.
pub fn synthetic_table(seed: u64) -> HumanMatrix {
    let mut rng = RngStream::substream(seed, "synthetic", 0);
    let rows = enumerate_syllogisms()
        .into_iter()
        .enumerate()
        .map(|(i, syllogism)| {
            let mut w = response_weights(&syllogism);
            for v in &mut w {
                *v *= (NOISE_SD * rng.normal()).exp();
            }
            let total: f64 = w.iter().sum();
            for v in &mut w {
                if 100.0 * *v / total < MIN_PERCENT {
                    *v = 0.0;
                }
            }
            let kept: f64 = w.iter().sum();
            let percentages = w.map(|v| (1000.0 * v / kept).round() / 10.0);
            HumanRow {
                syllogism,
                percentages,
                source_row: i + 1,
            }
        })
        .collect();
    HumanMatrix { rows }
}
