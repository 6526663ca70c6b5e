use prep::io;
use prep::pipeline;
use prep::RunConfig;
use prep_core::synth::{generate, SynthConfig};
use prep_core::{Direction, Variant};

fn small_synth(seed: u64) -> SynthConfig {
    SynthConfig {
        groups: 2,
        group_size: 12,
        planted: 3,
        seed,
        ..SynthConfig::default()
    }
}

#[test]
fn counts_round_trip_exactly() {
    let b = generate(&small_synth(1)).unwrap();
    let text = io::format_counts(&b.table, "h");
    let back = io::parse_counts(&text, "counts").unwrap();
    assert_eq!(back, b.table);
    assert_eq!(io::format_counts(&back, "h"), text);
}

#[test]
fn counts_rows_are_sorted_and_positive() {
    let b = generate(&small_synth(2)).unwrap();
    let text = io::format_counts(&b.table, "h");
    let rows: Vec<(String, String, usize)> = text
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| {
            let f: Vec<&str> = l.split('\t').collect();
            assert!(f[3].parse::<f64>().unwrap() > 0.0);
            (f[0].to_string(), f[1].to_string(), f[2].parse().unwrap())
        })
        .collect();
    let mut sorted = rows.clone();
    sorted.sort();
    assert_eq!(rows, sorted);
}

#[test]
fn checkpoint_round_trip_exactly() {
    let b = generate(&small_synth(3)).unwrap();
    let text = io::format_counts(&b.table, "h");
    let cfg = RunConfig {
        beta: 0.05,
        ..RunConfig::default()
    };
    let out = pipeline::fit_table(&b.table, &text, &cfg, Variant::Full).unwrap();
    let (p, head) = io::parse_checkpoint(&out.checkpoint, "ck", &b.table).unwrap();
    assert_eq!(p, out.fit.params);
    assert_eq!(head.k, b.table.metapath_count());
    assert_eq!(head.beta, 0.05);
    assert_eq!(head.iterations, out.fit.iterations());
    assert_eq!(io::format_checkpoint(&b.table, &p, &head), out.checkpoint);
}

#[test]
fn scores_round_trip() {
    let b = generate(&small_synth(4)).unwrap();
    let cfg = RunConfig::default();
    let table = pipeline::baseline_scores(
        &b.table,
        prep_core::baselines::Measure::PathSim,
        prep_core::baselines::Heuristic::Sd,
        &cfg,
    )
    .unwrap();
    let text = io::format_scores(&table, "h");
    let back = io::parse_scores(&text, "scores").unwrap();
    assert_eq!(back.measure, table.measure);
    assert_eq!(back.fingerprint, table.fingerprint);
    assert_eq!(back.direction, Direction::HigherIsMoreRelevant);
    let ranked: Vec<_> = table.ranked().into_iter().cloned().collect();
    assert_eq!(back.entries, ranked);
}

#[test]
fn labels_round_trip() {
    let rows = vec![
        ("a".to_string(), "b".to_string(), true, Some("x".to_string())),
        ("a".to_string(), "c".to_string(), false, None),
    ];
    let text = io::format_labels(&rows);
    assert_eq!(io::parse_labels(&text, "labels").unwrap(), rows);
}

#[test]
fn errors_name_file_and_line() {
    let e = io::parse_labels("a\tb\t1\na\tc\t2\n", "labels.tsv").unwrap_err();
    assert!(format!("{e:#}").contains("labels.tsv:2"), "{e:#}");
    let e = io::parse_graph("a\tperson\n", "a\tb\tknows\tsideways\n", "n", "edges.tsv").unwrap_err();
    assert!(format!("{e:#}").contains("edges.tsv:1"), "{e:#}");
    let e = io::parse_counts("# metapath 0 cycles m\nu\tv\t3\t1\n", "counts.tsv").unwrap_err();
    assert!(format!("{e:#}").contains("counts.tsv:2"), "{e:#}");
    let e = io::parse_metapaths("person:knows:person\tmaybe\n", "mp.tsv").unwrap_err();
    assert!(format!("{e:#}").contains("mp.tsv:1"), "{e:#}");
}

#[test]
fn undirected_flag_adds_both_directions() {
    let g = io::parse_graph("a\tp\nb\tp\n", "a\tb\tknows\tundirected\n", "n", "e").unwrap();
    assert_eq!(g.edge_count(), 2);
}

#[test]
fn mentions_without_names_form_one_group() {
    let ms = io::parse_mentions("m1\te1\nm2\te1\nm3\te2\n", "m").unwrap();
    assert!(ms.iter().all(|m| m.name.is_empty()));
    let ms = io::parse_mentions("m1\te1\tjo\n", "m").unwrap();
    assert_eq!(ms[0].name, "jo");
}

#[test]
fn checkpoint_rejects_foreign_table() {
    let a = generate(&small_synth(5)).unwrap();
    let b = generate(&SynthConfig {
        group_size: 10,
        ..small_synth(6)
    })
    .unwrap();
    let text = io::format_counts(&a.table, "h");
    let out = pipeline::fit_table(&a.table, &text, &RunConfig::default(), Variant::Full).unwrap();
    assert!(io::parse_checkpoint(&out.checkpoint, "ck", &b.table).is_err());
}
