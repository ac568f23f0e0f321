use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ills::datagen::{init_params, ExperimentPreset, InitScheme};
use ills::ills::{fit_layer_params, run_epoch, train_ills, IllsConfig};
use ills::linalg::lstsq;
use ills::network::forward_pass;
use ills::{Activation, Dataset, Matrix};

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

#[test]
fn generating_network_is_a_fixed_point() {
    let act = Activation::tanh();
    for preset in [
        ExperimentPreset::set1(),
        ExperimentPreset::set2(),
        ExperimentPreset::set3(),
    ] {
        let truth = preset.true_params.clone().unwrap();
        let data = preset.dataset(3).unwrap();
        let (next, loss) = run_epoch(&truth, &act, &data, &IllsConfig::new(0.1, 1)).unwrap();
        assert!(loss < 1e-28, "{}: loss {loss}", preset.name);
        let moved = max_diff(&next.flatten(), &truth.flatten());
        assert!(moved < 1e-8, "{}: parameters moved by {moved}", preset.name);
    }
}

#[test]
fn width_one_chain_loss_never_increases() {
    let act = Activation::tanh();
    for seed in 0..10u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<f64> = (0..40).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let y: Vec<f64> = x.iter().map(|v| 0.6 * v).collect();
        let data = Dataset::new(Matrix::column(&x), y).unwrap();
        let start = init_params(&[1, 1, 1], InitScheme::Custom, seed).unwrap();
        for rho in [0.01, 0.05, 0.1] {
            let (_, trace) = train_ills(&start, &act, &data, &IllsConfig::new(rho, 100)).unwrap();
            for (e, w) in trace.losses.windows(2).enumerate() {
                assert!(
                    w[1] <= w[0] + 1e-14,
                    "seed {seed} rho {rho} epoch {e}: {} -> {}",
                    w[0],
                    w[1]
                );
            }
        }
    }
}

#[test]
fn traces_are_bit_identical_across_runs() {
    let act = Activation::tanh();
    let preset = ExperimentPreset::set1();
    let data = preset.dataset(0).unwrap();
    let start = init_params(&preset.topology, InitScheme::DefaultFanIn, 7).unwrap();
    let cfg = IllsConfig::new(0.05, 30);
    let (p1, t1) = train_ills(&start, &act, &data, &cfg).unwrap();
    let (p2, t2) = train_ills(&start, &act, &data, &cfg).unwrap();
    let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&t1.losses), bits(&t2.losses));
    assert_eq!(bits(&p1.flatten()), bits(&p2.flatten()));
}

#[test]
fn single_epoch_trace_has_two_entries() {
    let preset = ExperimentPreset::set2();
    let data = preset.dataset(0).unwrap();
    let start = init_params(&preset.topology, InitScheme::Custom, 0).unwrap();
    let (_, trace) =
        train_ills(&start, &Activation::tanh(), &data, &IllsConfig::new(0.1, 1)).unwrap();
    assert_eq!(trace.losses.len(), 2);
    assert_eq!(trace.epochs(), 1);
    assert!(trace.diverged_at.is_none());
}

#[test]
fn first_epoch_improves_on_experiment_two() {
    let act = Activation::tanh();
    let preset = ExperimentPreset::set2();
    let data = preset.dataset(0).unwrap();
    for seed in 0..10 {
        let start = init_params(&preset.topology, InitScheme::Custom, seed).unwrap();
        let (_, trace) = train_ills(&start, &act, &data, &IllsConfig::new(0.1, 1)).unwrap();
        assert!(
            trace.losses[1] < trace.losses[0],
            "seed {seed}: {:?}",
            trace.losses
        );
    }
}

#[test]
fn output_fit_satisfies_normal_equations() {
    // After an epoch's output refit, no other output layer does better
    // against H on the forward-pass activations used for that fit.
    let act = Activation::tanh();
    let preset = ExperimentPreset::set3();
    let data = preset.dataset(1).unwrap();
    let start = init_params(&preset.topology, InitScheme::Custom, 2).unwrap();
    let (hidden, _) = forward_pass(&start, &act, &data.inputs).unwrap();
    let h = &hidden.activations[0];
    let big_h = Matrix::column(&data.targets.iter().map(|y| y.atanh()).collect::<Vec<_>>());
    let fit = fit_layer_params(h, &big_h).unwrap();
    let (next, _) = run_epoch(&start, &act, &data, &IllsConfig::new(0.1, 1)).unwrap();
    assert_eq!(next.layers()[1], fit.layer);

    let design = Matrix::from_fn(h.rows(), 3, |i, j| if j < 2 { h[(i, j)] } else { -1.0 });
    let theta = [
        fit.layer.weights[(0, 0)],
        fit.layer.weights[(1, 0)],
        fit.layer.biases[0],
    ];
    let resid: Vec<f64> = design
        .matvec(&theta)
        .unwrap()
        .iter()
        .zip(big_h.as_slice())
        .map(|(p, t)| p - t)
        .collect();
    let grad = design.transpose().matvec(&resid).unwrap();
    assert!(grad.iter().all(|g| g.abs() < 1e-9), "{grad:?}");
    let direct = lstsq(&design, big_h.as_slice()).unwrap();
    assert!(max_diff(&direct.coefficients, &theta) < 1e-12);
}

#[test]
fn hidden_activations_stay_inside_range_under_large_steps() {
    let act = Activation::tanh();
    let preset = ExperimentPreset::set1();
    let data = preset.dataset(4).unwrap();
    let mut net = init_params(&preset.topology, InitScheme::Custom, 4).unwrap();
    for _ in 0..20 {
        net = run_epoch(&net, &act, &data, &IllsConfig::new(1.0, 1))
            .unwrap()
            .0;
        assert!(net.is_finite());
        let (hidden, preds) = forward_pass(&net, &act, &data.inputs).unwrap();
        for m in &hidden.activations {
            assert!(m.as_slice().iter().all(|v| v.abs() < 1.0));
        }
        assert!(preds.iter().all(|p| p.is_finite()));
    }
}

#[test]
fn rejects_mismatched_dataset() {
    let net = init_params(&[3, 2, 1], InitScheme::Custom, 0).unwrap();
    let data = ExperimentPreset::set1().dataset(0).unwrap();
    assert!(train_ills(&net, &Activation::tanh(), &data, &IllsConfig::new(0.1, 3)).is_err());
    let data = ExperimentPreset::set2().dataset(0).unwrap();
    assert!(train_ills(&net, &Activation::tanh(), &data, &IllsConfig::new(0.0, 3)).is_err());
}
