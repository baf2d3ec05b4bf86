mod common;

use csg_core::embedding::{self, hash_embed, materialize_class_vectors};
use csg_core::kg::{self, dataset_stats, group_by_tail, parse_triples, read_triple_files, TripleFormat};
use proptest::prelude::*;

#[test]
fn nations_stats() {
    let ts = read_triple_files(&common::splits("nations")).unwrap();
    let s = dataset_stats(&ts);
    assert_eq!((s.entity_count, s.relation_count, s.triple_count), (14, 55, 1992));
    assert_eq!(s.class_count, 14);
    assert_eq!(group_by_tail(&ts).len(), s.class_count);
}

#[test]
fn umls_stats() {
    let ts = read_triple_files(&common::splits("umls")).unwrap();
    let s = dataset_stats(&ts);
    assert_eq!((s.entity_count, s.relation_count, s.triple_count), (135, 46, 6529));
    assert_eq!(s.class_count, 132);
    assert!(s.class_count <= s.entity_count);
}

#[test]
fn split_order_is_file_order() {
    let paths = common::splits("nations");
    let all = read_triple_files(&paths).unwrap();
    let train = read_triple_files(&paths[..1]).unwrap();
    assert_eq!(&all.triples()[..train.len()], train.triples());
}

#[test]
fn nations_materializes_every_triple() {
    let ts = read_triple_files(&common::splits("nations")).unwrap();
    let ci = group_by_tail(&ts);
    let store = hash_embed(embedding::vocabulary(&ts), 8, 3);
    let lists = materialize_class_vectors(&store, &ci).unwrap();
    let total: usize = lists.iter().map(Vec::len).sum();
    assert_eq!(total, dataset_stats(&ts).triple_count);
    assert_eq!(total, 1992);
}

#[test]
fn missing_file_is_reported_with_path() {
    let err = read_triple_files(&[common::data_dir().join("nope.txt")]).unwrap_err();
    assert!(err.to_string().contains("nope.txt"));
    assert_eq!(err.kind(), csg_core::ErrorKind::Data);
}

fn triple_text() -> impl Strategy<Value = Vec<(u8, u8, u8)>> {
    prop::collection::vec((0u8..12, 0u8..4, 0u8..12), 1..80)
}

fn render(rows: &[(u8, u8, u8)]) -> String {
    rows.iter().map(|(h, r, t)| format!("e{h}\tr{r}\te{t}\n")).collect()
}

proptest! {
    #[test]
    fn grouping_partitions_the_triples(rows in triple_text()) {
        let ts = parse_triples(render(&rows).as_bytes(), TripleFormat::Tsv).unwrap();
        let ci = group_by_tail(&ts);
        prop_assert_eq!(ci.pair_count(), ts.len());
        prop_assert!(ci.classes().iter().all(|c| !c.is_empty()));

        let mut grouped: Vec<(String, String)> =
            ci.classes().iter().flat_map(|c| c.pairs.iter().cloned()).collect();
        let mut projected: Vec<(String, String)> =
            ts.triples().iter().map(|t| (t.head.clone(), t.relation.clone())).collect();
        grouped.sort();
        projected.sort();
        prop_assert_eq!(grouped, projected);

        // within a class, pairs keep triple order
        for class in ci.classes() {
            let expected: Vec<(String, String)> = ts
                .triples()
                .iter()
                .filter(|t| t.tail == class.tail)
                .map(|t| (t.head.clone(), t.relation.clone()))
                .collect();
            prop_assert_eq!(&class.pairs, &expected);
        }
        prop_assert_eq!(dataset_stats(&ts).class_count, ci.len());
    }

    #[test]
    fn grouping_is_deterministic(rows in triple_text()) {
        let text = render(&rows);
        let a = group_by_tail(&parse_triples(text.as_bytes(), TripleFormat::Tsv).unwrap());
        let b = group_by_tail(&parse_triples(text.as_bytes(), TripleFormat::Tsv).unwrap());
        prop_assert_eq!(a, b);
    }

    #[test]
    fn filter_keeps_order_and_threshold(
        rows in triple_text(),
        min_pairs in 1usize..4,
        cap in prop::option::of(1usize..6),
    ) {
        let ci = group_by_tail(&parse_triples(render(&rows).as_bytes(), TripleFormat::Tsv).unwrap());
        match kg::filter_classes(&ci, min_pairs, cap) {
            Ok(out) => {
                prop_assert!(out.classes().iter().all(|c| c.len() >= min_pairs));
                if let Some(cap) = cap {
                    prop_assert!(out.len() <= cap);
                }
                let positions: Vec<usize> = out
                    .tails()
                    .iter()
                    .map(|t| ci.tails().iter().position(|u| u == t).unwrap())
                    .collect();
                prop_assert!(positions.windows(2).all(|w| w[0] < w[1]));
            }
            Err(e) => prop_assert!(ci.classes().iter().all(|c| c.len() < min_pairs), "{e}"),
        }
    }

    #[test]
    fn embedding_file_round_trips(
        rows in prop::collection::vec(prop::collection::vec(-1e6f64..1e6, 3), 1..20),
        tiny in -1e-300f64..1e-300,
    ) {
        let mut store = csg_core::EmbeddingStore::new(3);
        for (i, row) in rows.iter().enumerate() {
            let mut row = row.clone();
            row[0] += tiny;
            store.insert(&format!("tok{i}"), &row).unwrap();
        }
        let mut buf = Vec::new();
        store.write(&mut buf).unwrap();
        let back = embedding::load_embeddings(buf.as_slice()).unwrap();
        prop_assert_eq!(back.tokens(), store.tokens());
        for t in store.tokens() {
            let (a, b) = (store.get(t).unwrap(), back.get(t).unwrap());
            prop_assert!(a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits()));
        }
    }
}
