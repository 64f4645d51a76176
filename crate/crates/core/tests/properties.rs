mod common;

use proptest::prelude::*;

use segtag::corpus::{
    from_syllable_repr, parse_corpus, render_corpus, strip_segmentation, to_syllable_repr,
    CombinedTag, Corpus, PosTag, SegTag, Syllable, SyllableSentence, Word, WordSentence,
};
use segtag::eval::{evaluate, f1_joint, EvalMode};
use segtag::strategies::repair_tag_sequence;

use common::{span_oracle, SYLLABLES, TAGS};

fn syllable() -> impl Strategy<Value = Syllable> {
    prop::sample::select(SYLLABLES).prop_map(|s| Syllable::new(s).unwrap())
}

fn pos() -> impl Strategy<Value = PosTag> {
    prop::sample::select(TAGS).prop_map(|s| PosTag::new(s).unwrap())
}

fn sentence() -> impl Strategy<Value = WordSentence> {
    prop::collection::vec((prop::collection::vec(syllable(), 1..=3), pos()), 1..12).prop_map(|items| {
        WordSentence::new(
            items
                .into_iter()
                .map(|(s, t)| (Word::new(s).unwrap(), t))
                .collect(),
        )
        .unwrap()
    })
}

fn combined() -> impl Strategy<Value = CombinedTag> {
    (any::<bool>(), pos()).prop_map(|(b, p)| CombinedTag::new(if b { SegTag::B } else { SegTag::I }, p))
}

/// Gold sentence plus a prediction over the same syllables with its own
/// segmentation and tags.
fn gold_and_pred() -> impl Strategy<Value = (WordSentence, WordSentence)> {
    sentence().prop_flat_map(|gold| {
        let n = gold.syllable_count();
        let tags = prop::collection::vec(combined(), n);
        (Just(gold), tags).prop_map(|(gold, tags)| {
            let items = strip_segmentation(&gold).into_iter().zip(repair_tag_sequence(&tags)).collect();
            let pred = from_syllable_repr(&SyllableSentence::new(items).unwrap()).unwrap();
            (gold, pred)
        })
    })
}

proptest! {
    #[test]
    fn syllable_round_trip(s in sentence()) {
        prop_assert_eq!(from_syllable_repr(&to_syllable_repr(&s)).unwrap(), s);
    }

    #[test]
    fn text_round_trip(s in prop::collection::vec(sentence(), 1..5)) {
        let c = Corpus::new(s);
        prop_assert_eq!(parse_corpus(&render_corpus(&c).unwrap()).unwrap(), c);
    }

    #[test]
    fn repaired_tags_are_well_formed(tags in prop::collection::vec(combined(), 1..20)) {
        let fixed = repair_tag_sequence(&tags);
        prop_assert_eq!(fixed.len(), tags.len());
        for (a, b) in tags.iter().zip(&fixed) {
            prop_assert_eq!(&a.pos, &b.pos);
        }
        let items = (0..fixed.len()).map(|_| Syllable::new("a").unwrap()).zip(fixed).collect();
        prop_assert_eq!(SyllableSentence::new(items).unwrap().first_violation(), None);
    }

    #[test]
    fn repair_keeps_valid_sequences(s in sentence()) {
        let tags: Vec<CombinedTag> = to_syllable_repr(&s).items().iter().map(|(_, t)| t.clone()).collect();
        prop_assert_eq!(repair_tag_sequence(&tags), tags);
    }

    #[test]
    fn conversion_conserves_syllables((gold, pred) in gold_and_pred()) {
        prop_assert_eq!(strip_segmentation(&pred), strip_segmentation(&gold));
        prop_assert_eq!(pred.syllable_count(), gold.syllable_count());
    }

    #[test]
    fn ptag_never_exceeds_wseg((gold, pred) in gold_and_pred()) {
        let r = evaluate(&Corpus::new(vec![gold.clone()]), &Corpus::new(vec![pred.clone()])).unwrap();
        prop_assert!(r.ptag.correct <= r.wseg.correct);
        prop_assert!(r.ptag.f1 <= r.wseg.f1);
        let (seg, tagged, np, ng) = span_oracle(&gold, &pred);
        prop_assert_eq!((r.wseg.correct, r.ptag.correct, r.wseg.predicted, r.wseg.gold), (seg, tagged, np, ng));
    }

    #[test]
    fn swapping_sides_swaps_precision_and_recall((gold, pred) in gold_and_pred()) {
        let (g, p) = (Corpus::new(vec![gold]), Corpus::new(vec![pred]));
        let ab = f1_joint(&g, &p, EvalMode::PTag).unwrap();
        let ba = f1_joint(&p, &g, EvalMode::PTag).unwrap();
        prop_assert_eq!(ab.precision, ba.recall);
        prop_assert_eq!(ab.f1, ba.f1);
    }
}
