//! Build a mixture model in code, validate it, and see how violations are
//! reported. Also shows the JSON model-file round trip and the speed-factor
//! shorthand for the second generator.

use phasemix::matrix::Matrix;
use phasemix::model::{ExitStructure, GeneratorPair, MixtureModel, StateSpace};

fn main() {
    // Two transient credit grades and one absorbing default state. The
    // regime-1 process moves twice as fast out of grade "aa" and half as
    // fast out of "b".
    let phase = Matrix::from_rows(&[[-0.4, 0.3], [0.1, -0.8]]).unwrap();
    let generators = GeneratorPair::from_speed_factors(phase, &[2.0, 0.5]).unwrap();
    let model = MixtureModel {
        space: StateSpace::new(vec!["aa".into(), "b".into(), "default".into()]).unwrap(),
        generators,
        initial: vec![0.7, 0.3],
        switching: vec![0.2, 0.6],
        exits: ExitStructure::from_transient_members(vec![vec![]], 2).unwrap(),
    };

    let violations = model.validate();
    println!("fresh model violations: {}", violations.len());
    assert!(violations.is_empty());

    // The JSON form is what the CLI consumes.
    let text = model.to_json();
    println!("\nmodel file:\n{text}\n");
    let reparsed = MixtureModel::from_json(&text).unwrap();
    assert_eq!(model, reparsed);
    println!("round trip: identical");

    // Break an invariant on purpose: positive mass on a state inside an
    // exit set, and a positive diagonal entry.
    let mut broken = model.clone();
    broken.generators.a[(0, 0)] = 0.1;
    broken.initial = vec![0.4, 0.5];
    println!("\nbroken model report:");
    for v in broken.validate() {
        println!("  - {v}");
    }
}
