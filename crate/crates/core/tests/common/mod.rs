#![allow(dead_code)]

pub mod oracles;

use kickrec::datagen::{generate, GenConfig, GroundTruth};
use kickrec::ingest::Corpus;

pub fn small_config(seed: u64) -> GenConfig {
    GenConfig { seed, n_projects: 150, n_investors: 500, calibration_samples: 5000, ..Default::default() }
}

pub fn small_corpus(seed: u64) -> (Corpus, GroundTruth) {
    generate(&small_config(seed)).expect("generate")
}
