use std::sync::Arc;

use proptest::prelude::*;

use urcsc::intent::{IntentBackend, LinkTarget, RuleBasedAnalyzer, SchemaLinkage};
use urcsc::lincheck::{find_witness, Operation, SequentialModel, Stamp};
use urcsc::orchestrator::{rebuild_from_audit, Orchestrator, OrchestratorConfig, Status};
use urcsc::phy::{AnchorTable, Channel, CodecBackend, Surrogate};
use urcsc::store::{SeedConfig, Value};

const T: LinkTarget = LinkTarget { tx_id: 1, rx_id: 2 };

fn verb_pair() -> impl Strategy<Value = (&'static str, &'static str)> {
    prop::sample::select(vec![("improve", "reduce"), ("increase", "decrease"), ("higher", "lower")])
}

fn object() -> impl Strategy<Value = &'static str> {
    prop::sample::select(vec![
        "quality",
        "accuracy",
        "latency",
        "delay",
        "the data transmission quality",
        "image quality",
        "transmit power",
    ])
}

fn filler() -> impl Strategy<Value = &'static str> {
    prop::sample::select(vec!["", "please", "now", "for me", "kindly", "on this link"])
}

fn phrase() -> impl Strategy<Value = (String, String)> {
    (verb_pair(), object(), filler(), filler(), any::<bool>()).prop_map(|((a, b), obj, pre, post, flip)| {
        let (a, b) = if flip { (b, a) } else { (a, b) };
        let make = |v: &str| {
            let core = if matches!(v, "higher" | "lower") {
                format!("{v} {obj}")
            } else {
                format!("{v} the {obj}")
            };
            [pre, core.as_str(), post].iter().filter(|s| !s.is_empty()).cloned().collect::<Vec<_>>().join(" ")
        };
        (make(a), make(b))
    })
}

fn word_soup() -> impl Strategy<Value = String> {
    let words = prop::sample::select(vec![
        "please", "make", "it", "quality", "latency", "faster", "slower", "secure", "roaming", "power",
        "improve", "reduce", "higher", "lower", "between", "transmitter", "receiver", "3", "4", "encrypt",
        "handover", "the", "not", "zzz", "depth", "delay", "more", "less",
    ]);
    prop::collection::vec(words, 0..12).prop_map(|w| w.join(" "))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn antonyms_flip_direction((text, antonym) in phrase()) {
        let a = RuleBasedAnalyzer::default();
        let i = a.analyze(&text, T);
        let j = a.analyze(&antonym, T);
        prop_assert!(i.is_ok() && j.is_ok(), "{}: {:?} / {}: {:?}", text, i, antonym, j);
        let (i, j) = (i.unwrap(), j.unwrap());
        prop_assert_eq!(&i.parameter, &j.parameter, "{} / {}", text, antonym);
        prop_assert_eq!(i.direction.opposite(), j.direction, "{} / {}", text, antonym);
    }

    #[test]
    fn analysis_is_pure_and_closed(text in word_soup()) {
        let a = RuleBasedAnalyzer::default();
        let linkage = SchemaLinkage::default();
        let first = a.analyze(&text, T);
        prop_assert_eq!(&first, &a.analyze(&text, T));
        if let Ok(i) = first {
            prop_assert!(linkage.is_actuatable(i.category, &i.parameter), "{:?}", i);
        }
    }
}

const POOL: &[&str] = &[
    "Please improve the data transmission quality",
    "Please reduce the latency",
    "Improve quality between transmitter 3 and receiver 4",
    "Reduce the delay between transmitter 3 and receiver 4",
    "Please increase the transmit power",
    "Is it going to rain?",
    "Please encrypt my traffic",
    "Improve quality between transmitter 5 and receiver 6",
];

fn two_link_seed() -> SeedConfig {
    let mut seed = SeedConfig::default_config();
    let mut row = seed.rows["links"][0].clone();
    for (k, v) in [("link_id", 2), ("tx_id", 3), ("rx_id", 4), ("encoding_depth", 10)] {
        row.insert(k.into(), v.into());
    }
    row.insert("snr_db".into(), 12.5.into());
    row.insert("channel".into(), "Rayleigh".into());
    row.insert("channel_gain".into(), 1e-12.into());
    seed.rows.get_mut("links").unwrap().push(row);
    seed
}

fn codec() -> Arc<Surrogate> {
    Arc::new(Surrogate::new(AnchorTable::shipped(), (1, 12)).unwrap())
}

fn assert_bounded_and_consistent(orch: &Orchestrator, codec: &Surrogate) {
    let links = orch.links().unwrap();
    let metrics = orch
        .store()
        .execute_sql("SELECT link_id, depth, snr_db, channel, accuracy, latency_ms FROM metrics;")
        .unwrap();
    assert_eq!(metrics.rows().len(), links.len());
    for l in &links {
        assert!((1..=12).contains(&l.encoding_depth), "{l:?}");
        let row = metrics
            .rows()
            .iter()
            .find(|r| r[0] == Value::Integer(l.link_id))
            .expect("metrics row per link");
        let channel: Channel = l.channel.parse().unwrap();
        assert_eq!(row[1], Value::Integer(l.encoding_depth));
        assert_eq!(row[2], Value::Real(l.snr_db));
        assert_eq!(row[3], Value::Text(l.channel.clone()));
        assert_eq!(row[4], Value::Real(codec.accuracy_at(l.encoding_depth, l.snr_db, channel).unwrap()));
        assert_eq!(row[5], Value::Real(codec.latency_at(l.encoding_depth).unwrap()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn request_sequences_keep_invariants(
        steps in prop::collection::vec((0usize..3, 0..POOL.len(), prop::sample::select(vec![0u64, 100, 300])), 1..30)
    ) {
        let seed = two_link_seed();
        let codec = codec();
        let orch = Orchestrator::builder(Arc::new(seed.seed().unwrap()))
            .codec(codec.clone())
            .config(OrchestratorConfig::default())
            .build()
            .unwrap();
        assert_bounded_and_consistent(&orch, &codec);
        let mut t = 0;
        for (user, text, dt) in steps {
            t += dt;
            let before = orch.store().fingerprint();
            let out = orch.handle_request_at(&format!("u{user}"), POOL[text], t);
            let after = orch.store().fingerprint();
            match out.status {
                Status::Applied => {
                    prop_assert_ne!(&before, &after);
                    prop_assert!(out.sql_issued.iter().any(|s| s.starts_with("UPDATE")));
                }
                _ => {
                    prop_assert_eq!(&before, &after, "{:?} mutated the store", out.status);
                    prop_assert_eq!(&out.before, &out.after);
                    prop_assert!(!out.sql_issued.iter().any(|s| s.starts_with("UPDATE")));
                }
            }
            assert_bounded_and_consistent(&orch, &codec);
        }
        let records = orch.audit().records();
        for r in records.iter().filter(|r| r.status == Status::Applied) {
            prop_assert!(r.sql.iter().any(|s| s.starts_with("UPDATE")));
        }
        let rebuilt = rebuild_from_audit(&seed, codec, &records).unwrap();
        prop_assert_eq!(rebuilt.fingerprint(), orch.store().fingerprint());
    }
}

#[derive(Debug, Clone, Copy)]
enum Op {
    Inc,
    Dec,
    Set(i64),
    Read,
}

impl Op {
    fn sql(self) -> String {
        match self {
            Op::Inc => "UPDATE links SET encoding_depth = encoding_depth + 1 WHERE link_id = 1 AND encoding_depth < 12;".into(),
            Op::Dec => "UPDATE links SET encoding_depth = encoding_depth - 1 WHERE link_id = 1 AND encoding_depth > 1;".into(),
            Op::Set(v) => format!("UPDATE links SET encoding_depth = {v} WHERE link_id = 1;"),
            Op::Read => "SELECT encoding_depth FROM links WHERE link_id = 1;".into(),
        }
    }
}

struct DepthRegister;

impl SequentialModel for DepthRegister {
    type State = i64;
    type Input = Op;
    type Output = i64;

    fn step(&self, d: &i64, op: &Op) -> (i64, i64) {
        match *op {
            Op::Inc if *d < 12 => (d + 1, 1),
            Op::Dec if *d > 1 => (d - 1, 1),
            Op::Inc | Op::Dec => (*d, 0),
            Op::Set(v) => (v, 1),
            Op::Read => (*d, *d),
        }
    }
}

#[test]
fn store_histories_are_linearizable() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    for _ in 0..40 {
        let store = SeedConfig::default_config().seed().unwrap();
        let stamp = Stamp::new();
        let scripts: Vec<Vec<Op>> = (0..4)
            .map(|_| {
                (0..8)
                    .map(|_| match rng.random_range(0..4) {
                        0 => Op::Inc,
                        1 => Op::Dec,
                        2 => Op::Set(rng.random_range(1..=12)),
                        _ => Op::Read,
                    })
                    .collect()
            })
            .collect();
        let history: Vec<Operation<Op, i64>> = std::thread::scope(|s| {
            let handles: Vec<_> = scripts
                .iter()
                .map(|script| {
                    let (store, stamp) = (&store, &stamp);
                    s.spawn(move || {
                        script
                            .iter()
                            .map(|&op| {
                                let stmt = store.prepare(&op.sql()).unwrap();
                                let invoke = stamp.next();
                                let r = store.execute(&stmt).unwrap();
                                let response = stamp.next();
                                let output = match op {
                                    Op::Read => match r.scalar() {
                                        Some(Value::Integer(d)) => *d,
                                        other => panic!("unexpected read {other:?}"),
                                    },
                                    _ => r.affected() as i64,
                                };
                                Operation { invoke, response, input: op, output }
                            })
                            .collect::<Vec<_>>()
                    })
                })
                .collect();
            handles.into_iter().flat_map(|h| h.join().unwrap()).collect()
        });
        assert!(
            find_witness(&DepthRegister, 7, &history).is_some(),
            "no serial witness for {history:?}"
        );
    }
}
