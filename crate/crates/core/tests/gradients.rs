use dualcl::layers::{dcl_forward, deep_forward, vcl_prototypes, DclLayer, DeepDcl, VclLayer};
use dualcl::linalg::{DataMatrix, PrototypeSet};
use dualcl::loss::{assign, frozen_loss, grad_dcl, grad_deep, grad_vcl, VoronoiAssignment};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const STEP: f64 = 1e-6;

fn random(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
}

fn relative_error(analytic: &DMatrix<f64>, numeric: &DMatrix<f64>) -> f64 {
    let scale = analytic.norm().max(numeric.norm()).max(1e-12);
    (analytic - numeric).norm() / scale
}

/// Central differences of `f` over every entry of `m`.
fn central_diff(m: &DMatrix<f64>, mut f: impl FnMut(&DMatrix<f64>) -> f64) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(m.nrows(), m.ncols());
    let mut probe = m.clone();
    for idx in 0..m.len() {
        let orig = probe[idx];
        probe[idx] = orig + STEP;
        let up = f(&probe);
        probe[idx] = orig - STEP;
        let down = f(&probe);
        probe[idx] = orig;
        out[idx] = (up - down) / (2.0 * STEP);
    }
    out
}

fn as_column(v: &DVector<f64>) -> DMatrix<f64> {
    DMatrix::from_column_slice(v.len(), 1, v.as_slice())
}

struct Instance {
    x: DataMatrix,
    k: usize,
    lambda: f64,
}

fn instance(seed: u64) -> (Instance, ChaCha8Rng) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = rng.random_range(2..6);
    let n = rng.random_range(6..16);
    let k = rng.random_range(2..6);
    let lambda = [0.0, 0.01, 0.5][seed as usize % 3];
    let x = DataMatrix::new(random(d, n, &mut rng) * 2.0).unwrap();
    (Instance { x, k, lambda }, rng)
}

fn frozen(x: &DataMatrix, p: &PrototypeSet) -> VoronoiAssignment {
    assign(x, p).unwrap()
}

#[test]
fn vcl_gradient_matches_finite_differences() {
    for seed in 0..20 {
        let (inst, mut rng) = instance(seed);
        let layer = VclLayer::new(random(inst.k, inst.x.d(), &mut rng)).unwrap();
        let a = frozen(&inst.x, &vcl_prototypes(&layer));
        let analytic = grad_vcl(&inst.x, &layer, &a, inst.lambda);
        let numeric = central_diff(&layer.weights, |w| {
            frozen_loss(inst.x.as_matrix(), &w.transpose(), &a, inst.lambda).total
        });
        let err = relative_error(&analytic, &numeric);
        assert!(err <= 1e-5, "seed {seed}: relative error {err:e}");
    }
}

#[test]
fn dcl_gradient_matches_finite_differences() {
    for seed in 0..20 {
        let (inst, mut rng) = instance(100 + seed);
        let with_bias = seed % 2 == 1;
        let bias = with_bias.then(|| DVector::from_fn(inst.k, |_, _| rng.random_range(-0.5..0.5)));
        let layer = DclLayer::new(random(inst.k, inst.x.n(), &mut rng) * 0.5, bias).unwrap();
        let a = frozen(&inst.x, &dcl_forward(&layer, &inst.x).unwrap());
        let analytic = grad_dcl(&inst.x, &layer, &a, inst.lambda).unwrap();

        let loss_at = |l: &DclLayer| {
            let p = dcl_forward(l, &inst.x).unwrap();
            frozen_loss(inst.x.as_matrix(), p.as_matrix(), &a, inst.lambda).total
        };
        let numeric = central_diff(&layer.weights, |w| {
            loss_at(&DclLayer::new(w.clone(), layer.bias.clone()).unwrap())
        });
        let err = relative_error(&analytic.weights, &numeric);
        assert!(err <= 1e-5, "seed {seed}: weight relative error {err:e}");

        if let Some(b) = &layer.bias {
            let numeric = central_diff(&as_column(b), |bm| {
                loss_at(&DclLayer::new(layer.weights.clone(), Some(bm.column(0).into_owned())).unwrap())
            });
            let err = relative_error(&as_column(analytic.bias.as_ref().unwrap()), &numeric);
            assert!(err <= 1e-5, "seed {seed}: bias relative error {err:e}");
        } else {
            assert!(analytic.bias.is_none());
        }
    }
}

#[test]
fn deep_gradient_matches_finite_differences() {
    for seed in 0..20 {
        let (inst, _) = instance(200 + seed);
        let mut model = DeepDcl::glorot(inst.x.d(), inst.x.n(), inst.k, &[4, 3], seed, seed % 2 == 0);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for layer in &mut model.encoder {
            layer.bias = DVector::from_fn(layer.bias.len(), |_, _| rng.random_range(-0.3..0.3));
        }
        let (features, p) = deep_forward(&model, &inst.x).unwrap();
        let fx = DataMatrix::new(features).unwrap();
        let a = frozen(&fx, &p);
        let analytic = grad_deep(&model, &inst.x, &a, inst.lambda).unwrap();

        let loss_at = |m: &DeepDcl| {
            let (f, p) = deep_forward(m, &inst.x).unwrap();
            frozen_loss(&f, p.as_matrix(), &a, inst.lambda).total
        };

        let numeric = central_diff(&model.head.weights, |w| {
            let mut m = model.clone();
            m.head.weights = w.clone();
            loss_at(&m)
        });
        let err = relative_error(&analytic.head.weights, &numeric);
        assert!(err <= 1e-4, "seed {seed}: head relative error {err:e}");

        for l in 0..model.encoder.len() {
            let numeric = central_diff(&model.encoder[l].weights, |w| {
                let mut m = model.clone();
                m.encoder[l].weights = w.clone();
                loss_at(&m)
            });
            let err = relative_error(&analytic.encoder[l].weights, &numeric);
            assert!(err <= 1e-4, "seed {seed}: layer {l} weight relative error {err:e}");

            let numeric = central_diff(&as_column(&model.encoder[l].bias), |b| {
                let mut m = model.clone();
                m.encoder[l].bias = b.column(0).into_owned();
                loss_at(&m)
            });
            let err = relative_error(&as_column(&analytic.encoder[l].bias), &numeric);
            assert!(err <= 1e-4, "seed {seed}: layer {l} bias relative error {err:e}");
        }
    }
}

#[test]
fn deep_with_empty_encoder_reduces_to_dcl() {
    let (inst, _) = instance(7);
    let model = DeepDcl::glorot(inst.x.d(), inst.x.n(), inst.k, &[], 3, false);
    let a = frozen(&inst.x, &dcl_forward(&model.head, &inst.x).unwrap());
    let deep = grad_deep(&model, &inst.x, &a, 0.01).unwrap();
    let dcl = grad_dcl(&inst.x, &model.head, &a, 0.01).unwrap();
    assert!(deep.encoder.is_empty());
    assert_eq!(deep.head, dcl);
}

#[test]
fn one_small_step_does_not_increase_frozen_loss() {
    let eps = 1e-4;
    for seed in 0..20 {
        let (inst, mut rng) = instance(300 + seed);
        let x = inst.x.as_matrix();

        let vcl = VclLayer::new(random(inst.k, inst.x.d(), &mut rng)).unwrap();
        let a = frozen(&inst.x, &vcl_prototypes(&vcl));
        let before = frozen_loss(x, &vcl.weights.transpose(), &a, inst.lambda).total;
        let stepped = &vcl.weights - grad_vcl(&inst.x, &vcl, &a, inst.lambda) * eps;
        let after = frozen_loss(x, &stepped.transpose(), &a, inst.lambda).total;
        assert!(after <= before, "vcl seed {seed}: {before} -> {after}");

        let dcl = DclLayer::new(random(inst.k, inst.x.n(), &mut rng) * 0.3, None).unwrap();
        let a = frozen(&inst.x, &dcl_forward(&dcl, &inst.x).unwrap());
        let before = frozen_loss(x, dcl_forward(&dcl, &inst.x).unwrap().as_matrix(), &a, inst.lambda).total;
        let g = grad_dcl(&inst.x, &dcl, &a, inst.lambda).unwrap();
        let next = DclLayer::new(&dcl.weights - g.weights * eps, None).unwrap();
        let after = frozen_loss(x, dcl_forward(&next, &inst.x).unwrap().as_matrix(), &a, inst.lambda).total;
        assert!(after <= before, "dcl seed {seed}: {before} -> {after}");
    }
}
