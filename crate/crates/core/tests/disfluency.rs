use dialab::corpus::{corpus_stats, generate_corpus, CorpusConfig};
use dialab::disfluency::{augment_corpus, measure_rates, strip_disfluencies, DisfluencyConfig, EtPolicy};

fn train() -> dialab::corpus::Corpus {
    generate_corpus(&CorpusConfig::with_seed(7)).unwrap().train
}

#[test]
fn default_rates_within_band() {
    let corpus = train();
    let aug = augment_corpus(&corpus, &DisfluencyConfig::default(), 7).unwrap();
    let r = measure_rates(&aug);
    println!("{r:?}");
    assert!((r.hesitation - 0.21).abs() <= 0.02);
    assert!((r.restart - 0.40).abs() <= 0.02);
    assert!((r.correction - 0.05).abs() <= 0.02);
}

#[test]
fn real_et_fraction() {
    let corpus = train();
    let aug = augment_corpus(&corpus, &DisfluencyConfig::with_policy(EtPolicy::RealEt), 8).unwrap();
    let r = measure_rates(&aug);
    assert!(r.repairs >= 500);
    assert!((r.et_fraction - 0.20).abs() <= 0.05, "{}", r.et_fraction);
}

#[test]
fn augmented_utterances_are_longer_and_strip_back() {
    let corpus = train();
    let aug = augment_corpus(&corpus, &DisfluencyConfig::default(), 9).unwrap();
    let fluent = corpus_stats(&corpus).mean_user_utterance_len;
    let disfluent = corpus_stats(&aug.surface()).mean_user_utterance_len;
    println!("fluent {fluent:.3} disfluent {disfluent:.3}");
    assert!(disfluent > fluent);
    for (src, a) in corpus.dialogues.iter().zip(&aug.dialogues) {
        for (s, t) in src.turns.iter().zip(&a.turns) {
            assert_eq!(strip_disfluencies(&t.user), s.user);
        }
    }
}
