//! How observing the process changes the belief about the hidden regime:
//! the same model under the three information regimes — a fully observed
//! path, the bare passage of time, and time plus a known start.

use phasemix::model::exponential_mixture;
use phasemix::observation::{
    parse_path_csv, path_likelihood, path_stats, state_update, switching_update, Information,
};

fn main() {
    let model = exponential_mixture([1.0, 2.0], [3.0, 4.0], [0.3, 0.3, 0.3]).unwrap();

    // a path file as the CLI would read it: hold in state 1, jump to 2
    let text = "time,state\n0,1\n0.35,2\nhorizon,0.9\n";
    let path = parse_path_csv(text, &model.space).unwrap();
    let stats = path_stats(&path, model.transient_count() + 1).unwrap();
    println!("occupancy: {:?}", stats.occupancy);
    println!(
        "likelihood under regime 0: {:.6e}",
        path_likelihood(&stats, &model.intensity_regime0()).unwrap()
    );
    println!(
        "likelihood under regime 1: {:.6e}",
        path_likelihood(&stats, &model.intensity_regime1()).unwrap()
    );

    let print_belief = |label: &str, info: &Information| {
        let s = switching_update(&model, info).unwrap();
        let pi = state_update(&model, info).unwrap();
        let s_cells: Vec<String> = s
            .iter()
            .map(|v| match v {
                Some(x) => format!("{x:.4}"),
                None => "undef".into(),
            })
            .collect();
        let pi_cells: Vec<String> = pi.iter().map(|x| format!("{x:.4}")).collect();
        println!(
            "{label:<22} s(t) = [{}]  pi(t) = [{}]",
            s_cells.join(", "),
            pi_cells.join(", ")
        );
    };

    println!("\nbeliefs at t = 0.9:");
    print_belief("full path", &Information::FullPath(path));
    print_belief("no info", &Information::NoInfo { t: 0.9 });
    print_belief(
        "no info, known start",
        &Information::NoInfoKnownStart { t: 0.9, start: 0 },
    );

    // at t = 0 every regime returns the priors exactly
    let s0 = switching_update(&model, &Information::NoInfo { t: 0.0 }).unwrap();
    println!(
        "\ns(0) = {:?} (the prior, exactly)",
        s0.iter().map(|v| v.unwrap()).collect::<Vec<_>>()
    );

    // watching a path under equal generators teaches nothing: the posterior
    // stays at the starting state's prior
    let mut markov = model.clone();
    markov.generators.b = markov.generators.a.clone();
    let path = parse_path_csv(text, &markov.space).unwrap();
    let s = switching_update(&markov, &Information::FullPath(path)).unwrap();
    println!(
        "equal generators, observed jump: s_2(t) = {:.6}",
        s[1].unwrap()
    );
}
