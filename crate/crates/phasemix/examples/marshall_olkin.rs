//! The shared-shock example: a third clock can kill both components at once,
//! so the joint exit-time law carries mass on the diagonal. Shows the three
//! density branches, the simultaneous-exit mass, and the reduced-generator
//! marginals.

use phasemix::distributions::{
    density_joint_bi, is_singular_free, marginal_exit, singular_cdf_bi, Branch, Conditioning,
};
use phasemix::model::marshall_olkin_mixture;
use phasemix::observation::{belief_state, Information};

fn main() {
    let (p, a, b) = (0.5, [1.0, 1.0, 1.0], [2.0, 2.0, 2.0]);
    let model = marshall_olkin_mixture(a, b, [p, p, p]).unwrap();
    println!(
        "simultaneous exits possible: {}",
        !is_singular_free(&model).unwrap()
    );

    // condition on having watched nothing up to t = 0.4 with a known start
    let t = 0.4;
    let belief = belief_state(&model, &Information::NoInfoKnownStart { t, start: 0 }).unwrap();
    let cond = Conditioning::AtState(0);
    println!(
        "posterior regime-1 probability at t = {t}: {:.6}",
        belief.switching[0].unwrap()
    );

    // all three branches of the joint density
    for (t1, t2) in [(1.0, 0.6), (0.6, 1.0), (0.8, 0.8)] {
        let e = density_joint_bi(&model, &belief, cond, t1, t2).unwrap();
        let tag = match e.branch {
            Branch::Component1 => "first exit later",
            Branch::Component2 => "second exit later",
            Branch::Singular => "simultaneous",
        };
        println!("density({t1}, {t2}) = {:.8}  [{tag}]", e.value);
    }

    // mass of the diagonal: a third of all exits tie for these parameters
    let mass = singular_cdf_bi(&model, &belief, cond, t).unwrap();
    let closed = p * b[2] / (b[0] + b[1] + b[2]) + (1.0 - p) * a[2] / (a[0] + a[1] + a[2]);
    // the posterior reweights the two regimes at t > 0
    let s1 = belief.switching[0].unwrap();
    let reweighted = s1 * b[2] / (b[0] + b[1] + b[2]) + (1.0 - s1) * a[2] / (a[0] + a[1] + a[2]);
    println!("\nP(tau1 = tau2 > {t} | state 1 at {t}) = {mass:.8}");
    println!("  prior-weighted closed form {closed:.8}, posterior-weighted {reweighted:.8}");

    // marginals via the reduced generators match the scalar closed form
    for s in [t, t + 0.5, t + 1.5] {
        let m1 = marginal_exit(&model, &belief, cond, 0, s).unwrap();
        let closed =
            s1 * (-(b[0] + b[2]) * (s - t)).exp() + (1.0 - s1) * (-(a[0] + a[2]) * (s - t)).exp();
        println!("P(tau1 > {s:.1}) = {m1:.8} (closed form {closed:.8})");
    }
}
