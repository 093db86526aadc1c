mod common;

use common::oracles::{planted_documents, purity, PLANTED_TOPICS};
use kickrec::topics::{fit_lda, LdaConfig, TopicVector};

#[test]
fn recovers_planted_topics() {
    let (docs, labels) = planted_documents(200, 1);
    let cfg = LdaConfig { topics: PLANTED_TOPICS, iterations: 200, min_count: 1, ..Default::default() };
    let fit = fit_lda(&docs, &cfg).unwrap();
    for v in &fit.doc_topics {
        assert!((v.weights().iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }
    let p = purity(&fit.doc_topics, &labels);
    assert!(p >= 0.9, "training purity {p}");

    let (held_out, held_labels) = planted_documents(50, 2);
    let inferred: Vec<TopicVector> = held_out
        .iter()
        .enumerate()
        .map(|(i, d)| fit.model.infer(d, 50, i as u64).unwrap().vector)
        .collect();
    for v in &inferred {
        assert!((v.weights().iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert!(v.weights().iter().all(|&w| w > 0.0));
    }
    let p = purity(&inferred, &held_labels);
    assert!(p >= 0.9, "held-out purity {p}");
}

#[test]
fn topic_word_rows_are_distributions() {
    let (docs, _) = planted_documents(60, 3);
    let cfg = LdaConfig { topics: PLANTED_TOPICS, iterations: 30, min_count: 1, ..Default::default() };
    let fit = fit_lda(&docs, &cfg).unwrap();
    assert_eq!(fit.model.topic_word.len(), PLANTED_TOPICS);
    for row in &fit.model.topic_word {
        assert_eq!(row.len(), fit.model.vocabulary_size());
        assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }
}
