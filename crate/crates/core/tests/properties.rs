use calibra_core::calibration::{
    associative_plane, is_calibrated, levi_form, phi, psi, restrict_form, G2Structure, KahlerStructure, Plane,
};
use calibra_core::expr::{BinOp, Expr, Func};
use calibra_core::field::from_expr;
use calibra_core::forms::AlternatingForm;
use calibra_core::scenarios::{build_scenario, Scenario, ScenarioConfig};
use nalgebra::DVector;
use proptest::prelude::*;

fn scenario(id: &str) -> Scenario {
    build_scenario(&ScenarioConfig::for_scenario(id)).unwrap()
}

/// Expressions that stay smooth and moderate on [-1, 1]^3.
fn smooth_expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![(0usize..3).prop_map(Expr::var), (0.25f64..2.0).prop_map(Expr::num)];
    leaf.prop_recursive(3, 16, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Binary(BinOp::Add, Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Binary(BinOp::Sub, Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Binary(BinOp::Mul, Box::new(a), Box::new(b))),
            (inner.clone(), 2u32..4).prop_map(|(a, k)| Expr::Binary(
                BinOp::Pow,
                Box::new(a),
                Box::new(Expr::num(k as f64))
            )),
            inner.clone().prop_map(|a| Expr::Neg(Box::new(a))),
            inner.clone().prop_map(|a| Expr::Call(Func::Sin, Box::new(a))),
            inner.clone().prop_map(|a| Expr::Call(Func::Cos, Box::new(a))),
            inner.clone().prop_map(|a| {
                let sq = Expr::Binary(BinOp::Pow, Box::new(a), Box::new(Expr::num(2.0)));
                Expr::Call(Func::Exp, Box::new(Expr::Call(Func::Sin, Box::new(sq))))
            }),
            inner.prop_map(|a| {
                let sq = Expr::Binary(BinOp::Pow, Box::new(a), Box::new(Expr::num(2.0)));
                let den = Expr::Binary(BinOp::Add, Box::new(Expr::num(1.0)), Box::new(sq));
                Expr::Binary(BinOp::Div, Box::new(Expr::num(1.0)), Box::new(den))
            }),
        ]
    })
}

/// Fourth-order central differences, written out independently of the library.
fn fd_oracle(f: &dyn Fn(&[f64]) -> f64, x: &[f64]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = x.len();
    let h = 1e-3;
    let at = |d: &[(usize, f64)]| {
        let mut p = x.to_vec();
        for &(i, s) in d {
            p[i] += s;
        }
        f(&p)
    };
    let d1 = |i: usize, h: f64| (at(&[(i, h)]) - at(&[(i, -h)])) / (2.0 * h);
    let d2 = |i: usize, j: usize, h: f64| {
        (at(&[(i, h), (j, h)]) - at(&[(i, h), (j, -h)]) - at(&[(i, -h), (j, h)]) + at(&[(i, -h), (j, -h)]))
            / (4.0 * h * h)
    };
    let grad = (0..n).map(|i| (4.0 * d1(i, h) - d1(i, 2.0 * h)) / 3.0).collect();
    let hess = (0..n)
        .map(|i| (0..n).map(|j| (4.0 * d2(i, j, h) - d2(i, j, 2.0 * h)) / 3.0).collect())
        .collect();
    (grad, hess)
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1.0)
}

fn unit(v: Vec<f64>) -> DVector<f64> {
    let v = DVector::from_vec(v);
    let n = v.norm();
    v / n
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn printed_expressions_reparse_to_the_same_tree(e in smooth_expr()) {
        let text = e.to_string();
        prop_assert_eq!(Expr::parse(&text).unwrap(), e);
    }

    #[test]
    fn jets_match_finite_differences(e in smooth_expr(), x in prop::array::uniform3(-1.0f64..1.0)) {
        let field = from_expr(e.clone(), 3).unwrap();
        let jet = field.jet(&x);
        prop_assert!(close(jet.value, e.value(&x), 1e-12));
        let (grad, hess) = fd_oracle(&|p| e.value(p), &x);
        for i in 0..3 {
            prop_assert!(close(jet.grad[i], grad[i], 1e-5), "d{} {} vs {} for {}", i, jet.grad[i], grad[i], e);
            for j in 0..3 {
                prop_assert!(close(jet.h(i, j), hess[i][j], 1e-5), "h{}{} {} vs {} for {}", i, j, jet.h(i, j), hess[i][j], e);
                prop_assert_eq!(jet.h(i, j), jet.h(j, i));
            }
        }
    }

    #[test]
    fn symbolic_derivative_agrees_with_the_jet(e in smooth_expr(), x in prop::array::uniform3(-1.0f64..1.0), i in 0usize..3) {
        let jet = from_expr(e.clone(), 3).unwrap().jet(&x);
        prop_assert!(close(e.derivative(i).value(&x), jet.grad[i], 1e-10));
    }

    #[test]
    fn split_is_a_g_orthogonal_decomposition(
        which in 0usize..3,
        b in 0.1f64..0.9,
        y in 0.0..std::f64::consts::TAU,
        v in prop::array::uniform2(-2.0f64..2.0),
    ) {
        let s = scenario(["polar", "cylinder", "s2_latitude"][which]);
        let rs = s.submersion().unwrap();
        let (lo, hi) = (&s.region.0, &s.region.1);
        let base = vec![lo[0] + b * (hi[0] - lo[0])];
        let p = rs.fibre_point(&base, &[y]);
        let v = DVector::from_column_slice(&v);
        let (vert, hor) = rs.split(&p, &v).unwrap();
        let scale = v.norm().max(1.0);
        prop_assert!(((&vert + &hor) - &v).norm() <= 1e-12 * scale);
        prop_assert!((rs.differential(&p) * &vert).norm() <= 1e-10 * scale);
        prop_assert!(rs.total.inner(&p, &vert, &hor).unwrap().abs() <= 1e-10 * scale * scale);
    }

    #[test]
    fn horizontal_lifts_preserve_length(
        which in 0usize..3,
        b in 0.1f64..0.9,
        y in 0.0..std::f64::consts::TAU,
        x in 0.1f64..3.0,
    ) {
        let s = scenario(["polar", "cylinder", "rev_surface"][which]);
        let rs = s.submersion().unwrap();
        let (lo, hi) = (&s.region.0, &s.region.1);
        let base = vec![lo[0] + b * (hi[0] - lo[0])];
        let p = rs.fibre_point(&base, &[y]);
        let xv = DVector::from_element(1, x);
        let lift = rs.horizontal_lift(&base, &xv, &p).unwrap();
        prop_assert!((rs.differential(&p) * &lift - &xv).norm() <= 1e-10 * x);
        prop_assert!(rs.isometry_residual(&base, &xv, &p).unwrap() <= 1e-8);
    }

    #[test]
    fn forms_are_antisymmetric_under_argument_swaps(
        vs in prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 7), 3),
        swap in 0usize..3,
    ) {
        let vs: Vec<DVector<f64>> = vs.into_iter().map(DVector::from_vec).collect();
        let a = phi().evaluate(&vs);
        let mut swapped = vs.clone();
        swapped.swap(swap, (swap + 1) % 3);
        prop_assert!((phi().evaluate(&swapped) + a).abs() <= 1e-12);
    }

    #[test]
    fn cross_product_planes_are_associative(
        u in prop::collection::vec(-1.0f64..1.0, 7),
        v in prop::collection::vec(-1.0f64..1.0, 7),
    ) {
        prop_assume!(u.iter().map(|c| c * c).sum::<f64>() > 0.01);
        let (u, v) = (unit(u), DVector::from_vec(v));
        let v = &v - &u * u.dot(&v);
        prop_assume!(v.norm() > 0.1);
        let v = v.normalize();
        let g2 = G2Structure::standard();
        let pl = associative_plane(&g2, vec![0.0; 7], &u, &v).unwrap();
        prop_assert!(is_calibrated(&phi(), &pl, 1e-9).unwrap());
        // the orthogonal 4-plane is coassociative: psi restricts to one
        let m = pl.matrix();
        let mut frame: Vec<DVector<f64>> = Vec::new();
        for i in 0..7 {
            let mut e = DVector::from_element(7, 0.0);
            e[i] = 1.0;
            let mut w = &e - &m * (m.transpose() * &e);
            for f in &frame {
                w -= f * f.dot(&w);
            }
            if w.norm() > 1e-6 && frame.len() < 4 {
                frame.push(w.normalize());
            }
        }
        let co = Plane::euclidean(vec![0.0; 7], frame).unwrap();
        prop_assert!((restrict_form(&psi(), &co).unwrap().abs() - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn comass_of_phi_is_one(vs in prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 7), 3)) {
        let vs: Vec<DVector<f64>> = vs.into_iter().map(DVector::from_vec).collect();
        prop_assume!(vs.iter().all(|v| v.norm() > 0.1));
        let pl = Plane::from_span(vec![0.0; 7], &vs, &nalgebra::DMatrix::identity(7, 7));
        prop_assume!(pl.is_ok());
        prop_assert!(restrict_form(&phi(), &pl.unwrap()).unwrap() <= 1.0 + 1e-12);
    }

    #[test]
    fn levi_form_is_j_invariant(
        e in smooth_expr(),
        p in prop::collection::vec(-1.0f64..1.0, 4),
        x in prop::collection::vec(-1.0f64..1.0, 4),
    ) {
        let k = KahlerStructure::flat(2);
        let f = from_expr(e, 4).unwrap();
        let x = DVector::from_vec(x);
        let jx = k.j_at(&p).unwrap() * &x;
        let a = levi_form(&k, &*f, &p, &x).unwrap();
        let b = levi_form(&k, &*f, &p, &jx).unwrap();
        prop_assert!(close(a, b, 1e-10));
    }
}

#[test]
fn phi_wedge_psi_is_seven_volume_forms() {
    let top = phi().wedge(&psi());
    let vol = AlternatingForm::volume(7);
    assert!((top.sub(&vol.scale(7.0))).max_abs() <= 1e-12);
}
