//! Survival, density, Laplace transform and moments of the absorption time,
//! plus the conditional transition matrix, all under a belief at t > 0.

use phasemix::distributions::{
    density_uni, laplace_uni, moment_uni, moment_uni_raw, survival_uni, transition_matrix,
    Conditioning,
};
use phasemix::model::exponential_mixture;
use phasemix::observation::{belief_state, Information};
use phasemix::quad;

fn main() {
    let model = exponential_mixture([1.0, 2.0], [3.0, 4.0], [0.3, 0.3, 0.3]).unwrap();
    let t = 0.5;
    let belief = belief_state(&model, &Information::NoInfo { t }).unwrap();
    let cond = Conditioning::NoExit;

    println!(
        "state distribution given survival to {t}: {:?}",
        belief.distribution
    );

    println!("\n   s     survival      density");
    for k in 0..6 {
        let s = t + 0.4 * k as f64;
        let surv = survival_uni(&model, &belief, cond, s).unwrap();
        let dens = density_uni(&model, &belief, cond, s).unwrap();
        println!("{s:>5.1}  {surv:>10.6}  {dens:>10.6}");
    }

    // transform checked against direct integration of the density
    let lambda = 1.0;
    let transform = laplace_uni(&model, &belief, cond, lambda).unwrap();
    let integral = quad::integrate(
        |u| (-lambda * u).exp() * density_uni(&model, &belief, cond, t + u).unwrap(),
        0.0,
        60.0,
        1e-10,
    );
    println!(
        "\ntransform at {lambda}: {transform:.10} (integral {:.10})",
        integral.value
    );

    // moments are reported in elapsed time from t; the raw reading shifts back
    let mean_elapsed = moment_uni(&model, &belief, cond, 1).unwrap();
    let mean_raw = moment_uni_raw(&model, &belief, cond, 1).unwrap();
    println!("E[tau - t] = {mean_elapsed:.8},  E[tau] = {mean_raw:.8}");
    let m2 = moment_uni(&model, &belief, cond, 2).unwrap();
    println!("E[(tau - t)^2] = {m2:.8}");

    // the full transition matrix over a horizon; rows sum to one and the
    // absorbing row is fixed
    let p = transition_matrix(&model, &belief, t + 1.0).unwrap();
    println!("\ntransition matrix to s = {}:", t + 1.0);
    for i in 0..p.rows() {
        let cells: Vec<String> = (0..p.cols())
            .map(|j| format!("{:>8.5}", p[(i, j)]))
            .collect();
        println!("  {} [{}]", model.space.label(i), cells.join(" "));
    }
}
