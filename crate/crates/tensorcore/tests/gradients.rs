use tensorcore::gradcheck::check;
use tensorcore::{LossKind, ParamSet, Rng, Tensor};

const H: f64 = 1e-4;
const TOL: f64 = 1e-4;

fn set(rng: &mut Rng, parts: &[(&str, &[usize])]) -> ParamSet<f64> {
    let mut ps = ParamSet::new();
    for (name, shape) in parts {
        ps.add(*name, rng.uniform_tensor(shape, -1.0, 1.0));
    }
    ps
}

fn assert_ok(report: tensorcore::gradcheck::GradCheck) {
    for (name, e) in &report.relative_errors {
        assert!(*e <= TOL, "{name}: relative error {e:e}");
    }
}

#[test]
fn conv2d_gradients() {
    let mut rng = Rng::new(11);
    for stride in [1, 2] {
        let ps = set(&mut rng, &[("x", &[2, 5, 5]), ("w", &[3, 2, 3, 3]), ("b", &[3])]);
        let target: Tensor<f64> = rng.uniform_tensor(&[3, 5usize.div_ceil(stride), 5usize.div_ceil(stride)], -1.0, 1.0);
        let r = check(&ps, H, |tape, p| {
            let t = tape.leaf(target.clone());
            p[0].conv2d(p[1], p[2], stride)?.loss(t, LossKind::Mse)
        })
        .unwrap();
        assert_ok(r);
    }
}

#[test]
fn dense_gradients() {
    let mut rng = Rng::new(12);
    let ps = set(&mut rng, &[("x", &[4, 3]), ("w", &[2, 3]), ("b", &[2])]);
    let r = check(&ps, H, |tape, p| {
        let t = tape.leaf(Tensor::full(&[4, 2], 0.3));
        p[0].linear(p[1], Some(p[2]))?.loss(t, LossKind::Mse)
    })
    .unwrap();
    assert_ok(r);
}

#[test]
fn activation_gradients() {
    let mut rng = Rng::new(13);
    let ps = set(&mut rng, &[("x", &[12])]);
    for act in ["relu", "sigmoid", "leaky", "elu"] {
        let r = check(&ps, H, |tape, p| {
            let y = match act {
                "relu" => p[0].relu(),
                "sigmoid" => p[0].sigmoid(),
                "leaky" => p[0].leaky_relu(0.2),
                _ => p[0].elu(),
            };
            let w = tape.leaf(Tensor::from_vec((0..12).map(|i| i as f64 * 0.1 - 0.5).collect()));
            Ok(y.mul(w)?.sum())
        })
        .unwrap();
        assert_ok(r);
    }
}

#[test]
fn upsample_gradients() {
    let mut rng = Rng::new(14);
    let ps = set(&mut rng, &[("x", &[2, 3, 3])]);
    let target: Tensor<f64> = rng.uniform_tensor(&[2, 6, 6], 0.0, 1.0);
    let r = check(&ps, H, |tape, p| {
        let t = tape.leaf(target.clone());
        p[0].upsample_nearest(2)?.loss(t, LossKind::Mse)
    })
    .unwrap();
    assert_ok(r);
}

#[test]
fn loss_gradients() {
    let mut rng = Rng::new(15);
    let ps = set(&mut rng, &[("pred", &[3, 4]), ("target", &[3, 4])]);
    for kind in [LossKind::Mse, LossKind::L1] {
        let r = check(&ps, H, |_, p| p[0].loss(p[1], kind)).unwrap();
        assert_ok(r);
    }
}

#[test]
fn graph_primitive_gradients() {
    let mut rng = Rng::new(16);
    let ps = set(&mut rng, &[("h", &[4, 3]), ("s", &[6, 1]), ("e", &[6, 2])]);
    let src = [0, 1, 2, 3, 1, 0];
    let dst = [1, 2, 3, 0, 1, 0];
    let r = check(&ps, H, |_, p| {
        let alpha = p[1].segment_softmax(&dst)?;
        let msgs = p[0].gather_rows(&src)?.concat_cols(p[2])?.scale_rows(alpha)?;
        let agg = msgs.scatter_add_rows(&dst, 4)?;
        let gate = agg.sigmoid();
        let ratio = agg.div(gate.add_scalar(0.5))?;
        Ok(ratio.mul(agg)?.sub(gate)?.mean_rows()?.scale(1.5).sum())
    })
    .unwrap();
    assert_ok(r);
}

#[test]
fn reshape_and_composite_chain() {
    let mut rng = Rng::new(17);
    let ps = set(&mut rng, &[("x", &[1, 4, 4]), ("w1", &[2, 1, 3, 3]), ("b1", &[2]), ("w2", &[3, 32]), ("b2", &[3])]);
    let r = check(&ps, H, |tape, p| {
        let h = p[0].conv2d(p[1], p[2], 1)?.relu().upsample_nearest(1)?;
        let h = p[0].conv2d(p[1], p[2], 1)?.add(h)?.reshape(&[32])?;
        let y = h.linear(p[3], Some(p[4]))?.sigmoid();
        y.loss(tape.leaf(Tensor::full(&[3], 0.2)), LossKind::L1)
    })
    .unwrap();
    assert_ok(r);
}

#[test]
fn standardize_cols_gradients() {
    let mut rng = Rng::new(17);
    let ps = set(&mut rng, &[("x", &[5, 3])]);
    let w: Tensor<f64> = rng.uniform_tensor(&[5, 3], -1.0, 1.0);
    let r = check(&ps, H, |tape, p| Ok(p[0].standardize_cols(1e-5)?.mul(tape.leaf(w.clone()))?.sum())).unwrap();
    assert_ok(r);
}
