use proptest::prelude::*;
use tensorcore::ops::{conv2d, linear};
use tensorcore::{psnt, Adam, AdamConfig, ParamSet, Rng, Tensor};

fn combo(a: f64, x1: &Tensor<f64>, b: f64, x2: &Tensor<f64>) -> Tensor<f64> {
    let data = x1.data().iter().zip(x2.data()).map(|(p, q)| a * p + b * q).collect();
    Tensor::new(x1.shape().to_vec(), data).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn conv_and_dense_are_linear_without_bias(seed in any::<u64>(), a in -2.0f64..2.0, b in -2.0f64..2.0) {
        let mut rng = Rng::new(seed);
        let x1: Tensor<f64> = rng.uniform_tensor(&[2, 4, 4], -1.0, 1.0);
        let x2: Tensor<f64> = rng.uniform_tensor(&[2, 4, 4], -1.0, 1.0);
        let k: Tensor<f64> = rng.uniform_tensor(&[3, 2, 3, 3], -1.0, 1.0);
        let zb = Tensor::zeros(&[3]);
        let lhs = conv2d(&combo(a, &x1, b, &x2), &k, &zb, 1).unwrap();
        let rhs = combo(a, &conv2d(&x1, &k, &zb, 1).unwrap(), b, &conv2d(&x2, &k, &zb, 1).unwrap());
        prop_assert!(lhs.max_abs_diff(&rhs) < 1e-6);

        let v1: Tensor<f64> = rng.uniform_tensor(&[5], -1.0, 1.0);
        let v2: Tensor<f64> = rng.uniform_tensor(&[5], -1.0, 1.0);
        let w: Tensor<f64> = rng.uniform_tensor(&[3, 5], -1.0, 1.0);
        let lhs = linear(&combo(a, &v1, b, &v2), &w, None).unwrap();
        let rhs = combo(a, &linear(&v1, &w, None).unwrap(), b, &linear(&v2, &w, None).unwrap());
        prop_assert!(lhs.max_abs_diff(&rhs) < 1e-6);
    }

    #[test]
    fn adam_with_zero_lr_is_identity(seed in any::<u64>(), steps in 1usize..6) {
        let mut rng = Rng::new(seed);
        let mut ps = ParamSet::<f32>::new();
        ps.add("w", rng.uniform_tensor(&[4, 3], -1.0, 1.0));
        let before = ps.clone();
        let mut opt = Adam::new(AdamConfig::with_lr(0.0), &ps).unwrap();
        for _ in 0..steps {
            ps.get_mut(0).grad = rng.normal_tensor(&[4, 3], 10.0);
            opt.step(&mut ps).unwrap();
        }
        prop_assert_eq!(ps.value(0), before.value(0));
        prop_assert_eq!(opt.steps(), steps as u64);
    }

    #[test]
    fn psnt_round_trip(seed in any::<u64>(), dims in proptest::collection::vec(1usize..5, 1..4)) {
        let mut rng = Rng::new(seed);
        let t: Tensor<f32> = rng.normal_tensor(&dims, 3.0);
        let back: Tensor<f32> = psnt::decode(&psnt::encode(&t)).unwrap();
        prop_assert_eq!(back, t);
    }
}

#[test]
fn identical_seed_gives_identical_training() {
    let run = || {
        let mut rng = Rng::new(99);
        let mut ps = ParamSet::<f32>::new();
        ps.add("w", rng.he_uniform(&[2, 1, 3, 3], 9));
        ps.add("b", Tensor::zeros(&[2]));
        let x: Tensor<f32> = rng.uniform_tensor(&[1, 6, 6], 0.0, 1.0);
        let mut opt = Adam::new(AdamConfig::with_lr(0.01), &ps).unwrap();
        for _ in 0..10 {
            let tape = tensorcore::Tape::new();
            let p = ps.bind(&tape);
            let loss = tape.leaf(x.clone()).conv2d(p[0], p[1], 1).unwrap().sigmoid().sum();
            let g = tape.backward(loss).unwrap();
            ps.zero_grad();
            ps.accumulate(&g, &p).unwrap();
            opt.step(&mut ps).unwrap();
        }
        ps
    };
    let (a, b) = (run(), run());
    assert!(a.same_values(&b));
    let bits = |p: &ParamSet<f32>| p.iter().flat_map(|q| q.value.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>()).collect::<Vec<_>>();
    assert_eq!(bits(&a), bits(&b));
}

#[test]
fn psnt_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.psnt");
    let t = Tensor::<f32>::new(vec![2, 2], vec![0.0, 1.0, -1.0, 0.5]).unwrap();
    psnt::write(&path, &t).unwrap();
    assert_eq!(psnt::read::<f32>(&path).unwrap(), t);
    // f32 files load into wide precision too.
    assert_eq!(psnt::read::<f64>(&path).unwrap().data(), [0.0, 1.0, -1.0, 0.5]);
}
