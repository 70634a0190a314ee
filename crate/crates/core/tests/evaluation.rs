use careercast::evaluation::*;
use careercast::selection::EliminationTrace;
use proptest::prelude::*;

/// Bin by walking the edges instead of dividing.
fn oracle_bin(v: f64, spec: &HeatmapSpec) -> usize {
    let width = (spec.hi - spec.lo) / spec.bins as f64;
    let mut b = 0;
    while b + 1 < spec.bins && v >= spec.lo + (b + 1) as f64 * width {
        b += 1;
    }
    b
}

proptest! {
    #[test]
    fn histogram_matches_edge_walk(pairs in prop::collection::vec((-5.0f64..15.0, -5.0f64..15.0), 0..200), bins in 1usize..50) {
        let spec = HeatmapSpec { bins, lo: -2.0, hi: 10.0 };
        let (a, p): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let h = histogram2d(&a, &p, &spec).unwrap();
        let mut want = vec![vec![0u64; bins]; bins];
        for (x, y) in a.iter().zip(&p) {
            want[oracle_bin(*x, &spec)][oracle_bin(*y, &spec)] += 1;
        }
        prop_assert_eq!(h.iter().flatten().sum::<u64>(), a.len() as u64);
        // values within a rounding error of an edge may fall either side
        let near_edge = a.iter().chain(&p).any(|v| {
            let t = (v - spec.lo) / (spec.hi - spec.lo) * bins as f64;
            (t - t.round()).abs() < 1e-9
        });
        if !near_edge {
            prop_assert_eq!(h, want);
        }
    }

    #[test]
    fn r_squared_ignores_pair_order(pairs in prop::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 3..60), k in 0usize..60) {
        let (a, p): (Vec<f64>, Vec<f64>) = pairs.iter().copied().unzip();
        prop_assume!(a.iter().any(|v| (v - a[0]).abs() > 1e-6));
        let mut rotated = pairs.clone();
        rotated.rotate_left(k % pairs.len());
        let (ra, rp): (Vec<f64>, Vec<f64>) = rotated.into_iter().unzip();
        let (x, y) = (r_squared(&a, &p).unwrap(), r_squared(&ra, &rp).unwrap());
        prop_assert!((x - y).abs() <= 1e-9 * x.abs().max(1.0));
    }

    #[test]
    fn r_squared_ignores_shared_affine_change(pairs in prop::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 3..60), scale in 0.1f64..10.0, shift in -5.0f64..5.0) {
        let (a, p): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        prop_assume!(a.iter().any(|v| (v - a[0]).abs() > 1e-3));
        let f = |v: &Vec<f64>| v.iter().map(|x| scale * x + shift).collect::<Vec<f64>>();
        let (x, y) = (r_squared(&a, &p).unwrap(), r_squared(&f(&a), &f(&p)).unwrap());
        prop_assert!((x - y).abs() <= 1e-8 * x.abs().max(1.0));
    }
}

#[test]
fn r_squared_rejects_degenerate_input() {
    assert!(r_squared(&[1.0, 1.0], &[1.0, 2.0]).is_err());
    assert!(r_squared(&[1.0, 2.0], &[1.0]).is_err());
    assert!(r_squared(&[], &[]).is_err());
}

#[test]
fn heatmap_is_well_formed_svg() {
    let actual: Vec<f64> = (0..300).map(|i| (i % 17) as f64 * 0.6 - 1.0).collect();
    let predicted: Vec<f64> = actual
        .iter()
        .enumerate()
        .map(|(i, a)| a + ((i % 5) as f64 - 2.0) * 0.3)
        .collect();
    let svg = render_heatmap(&actual, &predicted, &HeatmapSpec::default(), "a < b & \"c\"").unwrap();
    let doc = roxmltree::Document::parse(&svg).unwrap();
    let root = doc.root_element();
    assert_eq!(root.tag_name().name(), "svg");
    assert!(doc
        .descendants()
        .any(|n| n.has_tag_name("line") && n.attribute("stroke") == Some("red")));
    assert!(doc.descendants().any(|n| n.text() == Some("a < b & \"c\"")));
    let cells: u64 = doc
        .descendants()
        .filter(|n| n.has_tag_name("rect"))
        .filter_map(|n| n.children().find(|c| c.has_tag_name("title")))
        .map(|t| t.text().unwrap().parse::<u64>().unwrap())
        .sum();
    assert_eq!(cells, 300);
}

#[test]
fn rfe_svg_is_well_formed() {
    let trace = EliminationTrace {
        feature_names: (0..5).map(|i| format!("f{i}")).collect(),
        elimination_order: vec!["f3".into(), "f0".into(), "f4".into(), "f1".into()],
        scores: vec![0.6, 0.58, 0.5, 0.2],
        full_score: 0.61,
    };
    let svg = rfe_curve_svg(&trace, "batters <7>");
    let doc = roxmltree::Document::parse(&svg).unwrap();
    assert_eq!(doc.root_element().tag_name().name(), "svg");
    let csv = rfe_curve_csv(&trace);
    assert_eq!(csv.lines().count(), 5);
    assert!(csv.lines().nth(4).unwrap().starts_with("4,f1,1,0.2,0.61"));
}
