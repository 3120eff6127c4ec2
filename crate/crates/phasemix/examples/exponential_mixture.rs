//! The exponential-race example: three transient states, two exit sets, no
//! simultaneous exits. The joint law of the two exit times is a mixture of
//! products of exponentials, which makes every engine quantity checkable by
//! hand.

use phasemix::distributions::{
    cross_moment_bi, density_joint_bi, is_singular_free, laplace_joint_bi, survival_joint,
    Conditioning, TimeGrid,
};
use phasemix::model::exponential_mixture;
use phasemix::observation::BeliefState;

fn main() {
    let (p, a, b) = (0.3, [1.0, 2.0], [3.0, 4.0]);
    let model = exponential_mixture(a, b, [p, p, p]).unwrap();
    let belief = BeliefState::initial(&model);
    let cond = Conditioning::AtState(0);

    println!(
        "simultaneous exits possible: {}",
        !is_singular_free(&model).unwrap()
    );

    // joint survival against the closed form
    let (t1, t2) = (0.5, 0.25);
    let grid = TimeGrid::new(0.0, vec![t1, t2]).unwrap();
    let engine = survival_joint(&model, &belief, cond, &grid).unwrap();
    let closed = p * (-b[0] * t1 - b[1] * t2).exp() + (1.0 - p) * (-a[0] * t1 - a[1] * t2).exp();
    println!("survival({t1}, {t2}): engine {engine:.12}, closed form {closed:.12}");

    // joint density along a small grid; the singular branch is always zero
    println!("\njoint density (rows t1, cols t2):");
    for i in 0..4 {
        let mut row = String::new();
        for j in 0..4 {
            let e =
                density_joint_bi(&model, &belief, cond, 0.3 * i as f64, 0.3 * j as f64).unwrap();
            row.push_str(&format!(" {:>8.5}", e.value));
        }
        println!("{row}");
    }

    // transform and product moment, both with hand-checkable values
    let psi = laplace_joint_bi(&model, &belief, cond, 1.0, 2.0).unwrap();
    let psi_closed = p * (b[0] / (1.0 + b[0])) * (b[1] / (2.0 + b[1]))
        + (1.0 - p) * (a[0] / (1.0 + a[0])) * (a[1] / (2.0 + a[1]));
    println!("\njoint transform at (1, 2): engine {psi:.12}, closed form {psi_closed:.12}");

    let m = cross_moment_bi(&model, &belief, cond).unwrap();
    let m_closed = p / (b[0] * b[1]) + (1.0 - p) / (a[0] * a[1]);
    println!("E[tau1 tau2]: engine {m:.12}, closed form {m_closed:.12}");

    // the exit times are dependent: the joint density does not factor
    let u = 0.5;
    let joint = density_joint_bi(&model, &belief, cond, u, u + 1e-9)
        .unwrap()
        .value;
    let m1 = p * b[0] * (-b[0] * u).exp() + (1.0 - p) * a[0] * (-a[0] * u).exp();
    let m2 = p * b[1] * (-b[1] * u).exp() + (1.0 - p) * a[1] * (-a[1] * u).exp();
    println!(
        "\ndependence at ({u}, {u}): joint {joint:.6} vs marginal product {:.6}",
        m1 * m2
    );
}
