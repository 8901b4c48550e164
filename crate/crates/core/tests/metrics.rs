use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wordclust::quantify::{self, PrevalenceVector};
use wordclust::sentiment::{mae_macro, mae_macro_detailed, OrdinalScale};
use wordclust::seqtag::{decode_bio, encode_bio, entity_f1, BioTag, EntitySpan, TagScheme, TaggedSequence};
use wordclust::textprep::{self, PreprocessRules};
use wordclust_oracle as oracle;

fn random_prevalence(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    // Some coordinates are exactly zero to exercise sparse vectors.
    let raw: Vec<f64> = (0..n)
        .map(|_| if rng.gen_bool(0.2) { 0.0 } else { rng.gen::<f64>() })
        .collect();
    let total: f64 = raw.iter().sum();
    if total == 0.0 {
        let mut v = vec![0.0; n];
        v[rng.gen_range(0..n)] = 1.0;
        return v;
    }
    raw.iter().map(|x| x / total).collect()
}

#[test]
fn emd_matches_transport_oracle() {
    let scale = OrdinalScale::five_point();
    let mut rng = ChaCha8Rng::seed_from_u64(2016);
    for _ in 0..300 {
        let p = random_prevalence(&mut rng, 5);
        let q = random_prevalence(&mut rng, 5);
        let fast = quantify::emd(
            &PrevalenceVector::new(&scale, p.clone()).unwrap(),
            &PrevalenceVector::new(&scale, q.clone()).unwrap(),
        )
        .unwrap();
        let slow = oracle::brute_force_transport(&p, &q).unwrap();
        assert!((fast - slow).abs() < 1e-9, "{:?} {:?}: {} vs {}", p, q, fast, slow);
    }
}

#[test]
fn emd_fixture_cases() {
    let scale = OrdinalScale::five_point();
    let cases = oracle::parse_cases(include_str!("fixtures/oracle_cases.tsv")).unwrap();
    let mut seen = 0;
    for case in cases.iter().filter(|c| c.oracle == "brute_force_transport") {
        let p = PrevalenceVector::new(&scale, case.vector("p").unwrap()).unwrap();
        let q = PrevalenceVector::new(&scale, case.vector("q").unwrap()).unwrap();
        assert_eq!(quantify::emd(&p, &q).unwrap(), case.expected_real().unwrap(), "{}", case.name);
        seen += 1;
    }
    assert!(seen >= 3);
}

fn rank_labels(scale: &OrdinalScale, ranks: &[usize]) -> Vec<String> {
    ranks.iter().map(|&r| scale.classes()[r].clone()).collect()
}

#[test]
fn macro_mae_equals_micro_on_balanced_samples() {
    let scale = OrdinalScale::five_point();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..100 {
        let per_class = rng.gen_range(1..6);
        let gold: Vec<usize> = (0..5).flat_map(|c| std::iter::repeat_n(c, per_class)).collect();
        let pred: Vec<usize> = gold.iter().map(|_| rng.gen_range(0..5)).collect();
        let m = mae_macro(&rank_labels(&scale, &gold), &rank_labels(&scale, &pred), &scale).unwrap();
        assert!((m - oracle::micro_mae(&gold, &pred)).abs() < 1e-12);
    }
}

#[test]
fn macro_mae_matches_definition_on_unbalanced_samples() {
    let scale = OrdinalScale::five_point();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..100 {
        let n = rng.gen_range(1..30);
        let gold: Vec<usize> = (0..n).map(|_| rng.gen_range(0..5)).collect();
        let pred: Vec<usize> = (0..n).map(|_| rng.gen_range(0..5)).collect();
        let m = mae_macro_detailed(&rank_labels(&scale, &gold), &rank_labels(&scale, &pred), &scale).unwrap();
        assert!((m.value - oracle::macro_mae(&gold, &pred, 5)).abs() < 1e-12);
        assert!(m.value >= 0.0 && m.value <= 4.0);
    }
}

#[test]
fn macro_mae_hand_case() {
    let scale = OrdinalScale::five_point();
    let m = mae_macro_detailed(&["Neutral", "Neutral"], &["Positive", "Negative"], &scale).unwrap();
    assert_eq!(m.value, 1.0);
    assert_eq!(m.skipped.len(), 4);
    assert_eq!(mae_macro(&["Neutral"], &["Neutral"], &scale).unwrap(), 0.0);
    assert_eq!(mae_macro(&["VeryNegative", "VeryPositive"], &["VeryPositive", "VeryNegative"], &scale).unwrap(), 4.0);
}

#[test]
fn tweet_example_decodes_to_two_entities() {
    let text = "CLUB BLU tonite ... 90 's music .. oldskool night wiith dj finese";
    let tokens = textprep::tokenize(&textprep::preprocess(text, &PreprocessRules::ner()));
    let surfaces = textprep::surfaces(&tokens);
    let n = surfaces.len();
    let dj = surfaces.iter().position(|s| *s == "dj").unwrap();
    assert_eq!(dj, n - 2);
    let mut tags = vec![BioTag::O; n];
    tags[0] = BioTag::B("facility".into());
    tags[1] = BioTag::I("facility".into());
    tags[dj] = BioTag::B("musicartist".into());
    tags[dj + 1] = BioTag::I("musicartist".into());
    let spans = decode_bio(&tags);
    assert_eq!(
        spans,
        vec![EntitySpan::new(0, 2, "facility"), EntitySpan::new(dj, n, "musicartist")]
    );
    assert_eq!(surfaces[spans[0].start..spans[0].end].join(" "), "CLUB BLU");
    assert_eq!(surfaces[spans[1].start..spans[1].end].join(" "), "dj finese");
    let scheme = TagScheme::new(["facility", "musicartist"]).unwrap();
    assert_eq!(encode_bio(&spans, n, &scheme).unwrap(), tags);
}

#[test]
fn bio_round_trip_on_random_spans() {
    let scheme = TagScheme::new(["a", "b", "c"]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for _ in 0..300 {
        let len = rng.gen_range(0..25);
        let mut spans = Vec::new();
        let mut i = 0;
        while i < len {
            if rng.gen_bool(0.4) {
                let end = rng.gen_range(i + 1..=len.min(i + 4));
                spans.push(EntitySpan::new(i, end, ["a", "b", "c"][rng.gen_range(0..3)]));
                i = end;
            } else {
                i += 1;
            }
        }
        let tags = encode_bio(&spans, len, &scheme).unwrap();
        assert_eq!(decode_bio(&tags), spans);
    }
}

#[test]
fn entity_f1_hand_cases() {
    let gold = TaggedSequence::from_strs(&["a", "b", "c", "d"], &["B-x", "O", "B-y", "I-y"]).unwrap();
    let half = TaggedSequence::from_strs(&["a", "b", "c", "d"], &["B-x", "O", "B-y", "O"]).unwrap();
    let s = entity_f1(std::slice::from_ref(&gold), &[half]).unwrap();
    assert_eq!((s.precision, s.recall, s.f1), (0.5, 0.5, 0.5));
    let s = entity_f1(std::slice::from_ref(&gold), std::slice::from_ref(&gold)).unwrap();
    assert_eq!((s.precision, s.recall, s.f1), (1.0, 1.0, 1.0));
    let empty = TaggedSequence::from_strs(&["a", "b", "c", "d"], &["O"; 4]).unwrap();
    let s = entity_f1(&[gold], &[empty]).unwrap();
    assert_eq!(s.f1, 0.0);
}

#[test]
fn documented_worked_examples() {
    let scale = OrdinalScale::new(["low", "mid", "high"]).unwrap();
    let p = PrevalenceVector::new(&scale, vec![0.2, 0.3, 0.5]).unwrap();
    let q = PrevalenceVector::new(&scale, vec![0.5, 0.3, 0.2]).unwrap();
    let d = quantify::emd(&p, &q).unwrap();
    assert!((d - 0.6).abs() < 1e-12, "{}", d);
    assert!((oracle::brute_force_transport(p.values(), q.values()).unwrap() - d).abs() < 1e-12);

    let five = OrdinalScale::five_point();
    let gold = rank_labels(&five, &[0, 0, 0, 0, 4]);
    let pred = rank_labels(&five, &[0; 5]);
    assert_eq!(mae_macro(&gold, &pred, &five).unwrap(), 2.0);
    assert_eq!(oracle::micro_mae(&[0, 0, 0, 0, 4], &[0; 5]), 0.8);

    let words = ["a", "b", "c", "d"];
    let gold = TaggedSequence::from_strs(&words, &["B-person", "I-person", "O", "B-location"]).unwrap();
    let pred = TaggedSequence::from_strs(&words, &["B-person", "O", "O", "B-location"]).unwrap();
    let score = entity_f1(&[gold], &[pred]).unwrap();
    assert_eq!((score.precision, score.recall, score.f1), (0.5, 0.5, 0.5));
}
