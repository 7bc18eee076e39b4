//! Synthetic datasets and agent-profile presets for simulation runs.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::agents::{AgentProfile, WrongAnswerModel};
use crate::domain::{Answer, AnswerMode, Query};

const TOPICS: [(&str, &[&str]); 6] = [
    (
        "algebra",
        &[
            "solve",
            "equation",
            "variable",
            "polynomial",
            "root",
            "factor",
            "linear",
            "quadratic",
            "coefficient",
            "expression",
        ],
    ),
    (
        "geometry",
        &[
            "triangle",
            "angle",
            "circle",
            "radius",
            "area",
            "perimeter",
            "polygon",
            "chord",
            "tangent",
            "volume",
        ],
    ),
    (
        "history",
        &[
            "empire",
            "treaty",
            "dynasty",
            "revolution",
            "war",
            "king",
            "century",
            "colony",
            "parliament",
            "reform",
        ],
    ),
    (
        "chemistry",
        &[
            "molecule",
            "reaction",
            "acid",
            "bond",
            "electron",
            "catalyst",
            "element",
            "compound",
            "solution",
            "oxidation",
        ],
    ),
    (
        "biology",
        &[
            "cell",
            "protein",
            "gene",
            "enzyme",
            "organism",
            "membrane",
            "species",
            "evolution",
            "tissue",
            "neuron",
        ],
    ),
    (
        "literature",
        &[
            "novel",
            "poem",
            "author",
            "metaphor",
            "narrator",
            "chapter",
            "sonnet",
            "character",
            "plot",
            "genre",
        ],
    ),
];

const FILLER: [&str; 6] = ["what", "is", "the", "which", "of", "following"];

pub fn topic_names() -> Vec<&'static str> {
    TOPICS.iter().map(|(t, _)| *t).collect()
}

/// `m` topic-tagged queries `q00000 ...` with multiple-choice gold answers `a`-`e`.
pub fn synthetic_dataset(m: usize, seed: u64) -> Vec<Query> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_da7a);
    (0..m)
        .map(|i| {
            let (topic, vocab) = TOPICS[rng.gen_range(0..TOPICS.len())];
            let mut words: Vec<&str> = Vec::with_capacity(10);
            words.extend(FILLER.choose_multiple(&mut rng, 2));
            words.extend(vocab.choose_multiple(&mut rng, 6));
            let gold = ["A", "B", "C", "D", "E"][rng.gen_range(0..5)];
            Query {
                id: format!("q{i:05}"),
                text: format!("{}?", words.join(" ")),
                gold: Some(Answer::new(gold, AnswerMode::Text)),
                topic: Some(topic.to_string()),
            }
        })
        .collect()
}

/// Three tiers of three agents (0.95, 0.80, 0.60), interleaved so pool
/// order carries no information about reliability.
pub fn heterogeneous_profiles() -> Vec<AgentProfile> {
    let tiers = [0.60, 0.80, 0.95];
    (0..9)
        .map(|i| {
            let p = tiers[i % 3];
            AgentProfile::new(
                format!("sim-{}-{}", (p * 100.0) as u32, i / 3),
                p,
                WrongAnswerModel::UniformDistractor { k: 3 },
            )
        })
        .collect()
}

/// Nine mediocre generalists, each expert (0.97) on one or two topics.
pub fn specialist_profiles() -> Vec<AgentProfile> {
    let topics = topic_names();
    (0..9)
        .map(|i| {
            let mut profile = AgentProfile::new(
                format!("specialist-{i}"),
                0.6,
                WrongAnswerModel::UniformDistractor { k: 3 },
            );
            profile = profile.with_topic(topics[i % topics.len()], 0.97);
            if i >= topics.len() {
                profile = profile.with_topic(topics[(i + 2) % topics.len()], 0.97);
            }
            profile
        })
        .collect()
}

/// Every agent always answers correctly.
pub fn unanimous_profiles(n: usize) -> Vec<AgentProfile> {
    (0..n)
        .map(|i| {
            AgentProfile::new(
                format!("perfect-{i}"),
                1.0,
                WrongAnswerModel::UniformDistractor { k: 1 },
            )
        })
        .collect()
}
