//! Output compared byte for byte with checked-in files.

use twincheck::checker::{explore, export_dot, Bounds, DotOptions};
use twincheck::pgm::{augment, emit_pgm, parse_pgm, uav_pgm};
use twincheck::uav::{build_model, UavConfig};

const AUGMENTED: &str = include_str!("golden/uav_augmented.pgm");
const SMALL_DOT: &str = include_str!("golden/small.dot");

#[test]
fn augmented_uav_graph() {
    let out = augment(&uav_pgm(2)).unwrap();
    assert_eq!(emit_pgm(&out), AUGMENTED);
    assert_eq!(parse_pgm(AUGMENTED).unwrap(), out);
}

#[test]
fn small_state_graph_dot() {
    let cfg = UavConfig { sensors: 1, eta: 1, c_max: 1, t_max: 2, ..UavConfig::baseline() };
    let (graph, _) = explore(&build_model(&cfg).unwrap().model, Bounds::NONE).unwrap();
    let dot = export_dot(&graph, &DotOptions::default()).unwrap();
    assert_eq!(dot, SMALL_DOT);
    assert_eq!(dot.matches("color=blue").count(), 1);
}
