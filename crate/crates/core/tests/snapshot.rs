use graphlens::graph::GraphBuilder;
use graphlens::search::{search, Query, SearchConfig};
use graphlens::snapshot::{self, SnapshotError};
use graphlens::synth::{gen_chain, gen_star};
use proptest::prelude::*;

fn chain_query() -> Query {
    Query::new(["kwd0", "kwd1"]).unwrap()
}

#[test]
fn chain12_round_trip_preserves_results() {
    let g = gen_chain(12);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("chain12.glsnap");
    snapshot::save(&g, &path).unwrap();
    let back = snapshot::load(&path).unwrap();
    let before = search(&g, &chain_query(), SearchConfig::default()).edge_sets();
    let after = search(&back, &chain_query(), SearchConfig::default()).edge_sets();
    assert_eq!(before.len(), 4096);
    assert_eq!(before, after);
    assert_eq!(back.params(), g.params());
}

#[test]
fn load_then_save_is_identical_up_to_timestamp() {
    let g = gen_star(3, 4);
    let bytes = snapshot::encode(&g, 11);
    let back = snapshot::decode(&bytes).unwrap();
    assert_eq!(snapshot::encode(&back, 11), bytes);
    let m1 = snapshot::read_manifest(&bytes).unwrap();
    let m2 = snapshot::read_manifest(&snapshot::encode(&back, 12)).unwrap();
    assert_eq!(m1.created + 1, m2.created);
    assert_eq!((m1.nodes, m1.edges, m1.k), (m2.nodes, m2.edges, 5));
}

#[test]
fn empty_graph() {
    let g = GraphBuilder::new().freeze();
    let back = snapshot::decode(&snapshot::encode(&g, 0)).unwrap();
    assert_eq!((back.node_count(), back.edge_count()), (0, 0));
}

#[test]
fn damaged_files_are_rejected() {
    let bytes = snapshot::encode(&gen_chain(4), 0);
    let mut bad = bytes.clone();
    bad[..4].copy_from_slice(b"PK\x03\x04");
    assert!(matches!(snapshot::decode(&bad), Err(SnapshotError::BadMagic)));

    // flip one payload byte in the middle of the file
    let mut bad = bytes.clone();
    let mid = bytes.len() / 2;
    bad[mid] ^= 0x20;
    assert!(matches!(
        snapshot::decode(&bad),
        Err(SnapshotError::Checksum(_) | SnapshotError::Truncated(_) | SnapshotError::Format(_))
    ));

    let err = snapshot::load("/nonexistent/graph.glsnap").unwrap_err();
    assert!(err.to_string().contains("/nonexistent/graph.glsnap"));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn any_single_byte_change_is_rejected(pos in any::<prop::sample::Index>(), delta in 1u8..=255) {
        let bytes = snapshot::encode(&gen_star(2, 2), 5);
        let mut bad = bytes.clone();
        let i = pos.index(bad.len());
        bad[i] = bad[i].wrapping_add(delta);
        prop_assert!(snapshot::decode(&bad).is_err());
    }

    #[test]
    fn truncation_is_rejected(cut in any::<prop::sample::Index>()) {
        let bytes = snapshot::encode(&gen_chain(3), 5);
        let n = cut.index(bytes.len());
        prop_assert!(snapshot::decode(&bytes[..n]).is_err());
    }
}
