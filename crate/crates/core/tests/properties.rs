//! Property tests for the jet kernel and the expression language.

use finsler_lab::chart::{Chart, ChartPoint};
use finsler_lab::jets::{Jet, JetContext};
use finsler_lab::lang::{eval_f64, eval_jet, parse_expr, BinOp, Dot, Expr, Func};
use proptest::prelude::*;

const VARS: usize = 2;
const ORDER: usize = 5;

fn ctx() -> JetContext {
    JetContext::new(VARS, ORDER).unwrap()
}

/// Polynomial of total degree at most `degree` with small integer
/// coefficients, so that every product below is exact in f64.
fn polynomial(degree: usize) -> impl Strategy<Value = Jet> {
    let c = ctx();
    let count = c.len_up_to(degree);
    prop::collection::vec(-4i32..=4, count).prop_map(move |ints| {
        let mut coeffs: Vec<f64> = ints.into_iter().map(f64::from).collect();
        coeffs.resize(c.len(), 0.0);
        Jet::from_coeffs(&c, ORDER, coeffs).unwrap()
    })
}

fn exponents(c: &JetContext, i: usize) -> Vec<usize> {
    c.monomial(i).iter().map(|&e| e as usize).collect()
}

proptest! {
    #[test]
    fn products_of_low_degree_polynomials_are_exact(a in polynomial(2), b in polynomial(3)) {
        let c = ctx();
        let p = &a * &b;
        let mut expected = vec![0.0; c.len()];
        for i in 0..c.len() {
            for j in 0..c.len() {
                let (ai, bj) = (a.coeffs()[i], b.coeffs()[j]);
                if ai == 0.0 || bj == 0.0 {
                    continue;
                }
                let m: Vec<u8> = c.monomial(i).iter().zip(c.monomial(j)).map(|(u, v)| u + v).collect();
                let k = c.index_of(&m).expect("degree stays within the order");
                expected[k] += ai * bj;
            }
        }
        prop_assert_eq!(p.coeffs(), &expected[..]);
    }

    #[test]
    fn leibniz_rule_holds_exactly(a in polynomial(3), b in polynomial(2), var in 0..VARS) {
        let lhs = (&a * &b).partial(var).unwrap();
        let rhs = a.partial(var).unwrap() * b.truncate(ORDER - 1) + a.truncate(ORDER - 1) * b.partial(var).unwrap();
        prop_assert_eq!(lhs.coeffs(), rhs.coeffs());
    }

    #[test]
    fn derivatives_of_polynomials_match_coefficients(a in polynomial(ORDER)) {
        let c = ctx();
        for i in 0..c.len() {
            let m = exponents(&c, i);
            let fact: f64 = m.iter().map(|&e| (1..=e).product::<usize>() as f64).product();
            prop_assert_eq!(a.derivative(&m).unwrap(), a.coeffs()[i] * fact);
        }
    }

    #[test]
    fn composite_derivatives_match_finite_differences(
        a in -1.0f64..1.0, b in -1.0f64..1.0, x0 in -0.5f64..0.5, y0 in 0.5f64..1.5,
    ) {
        // f = exp(sin(a x + b y)) * sqrt(1 + x^2 y^2) / (2 + cos(y))
        let text = format!("exp(sin({a}*x[1] + {b}*y[1])) * sqrt(1 + x[1]^2*y[1]^2) / (2 + cos(y[1]))");
        let expr = parse_expr(&text, 1, 1, 1).unwrap();
        let chart = Chart::new(ChartPoint::new(vec![x0], vec![y0]).unwrap(), 3).unwrap();
        let jet = eval_jet(&expr, &chart, None).unwrap();
        let f = |x: f64, y: f64| eval_f64(&expr, &[x], &[y], None).unwrap();
        let h = 1e-4;
        let fx = (f(x0 + h, y0) - f(x0 - h, y0)) / (2.0 * h);
        let fy = (f(x0, y0 + h) - f(x0, y0 - h)) / (2.0 * h);
        let fxy = (f(x0 + h, y0 + h) - f(x0 + h, y0 - h) - f(x0 - h, y0 + h) + f(x0 - h, y0 - h)) / (4.0 * h * h);
        let scale = 1.0 + jet.value().abs();
        prop_assert!((jet.derivative(&[1, 0]).unwrap() - fx).abs() < 1e-6 * scale);
        prop_assert!((jet.derivative(&[0, 1]).unwrap() - fy).abs() < 1e-6 * scale);
        prop_assert!((jet.derivative(&[1, 1]).unwrap() - fxy).abs() < 1e-5 * scale);
    }
}

fn expr_tree() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        (0u32..20).prop_map(|v| Expr::Num(f64::from(v) / 4.0)),
        (0..VARS).prop_map(Expr::X),
        (0..VARS).prop_map(Expr::Y),
        Just(Expr::Dot(Dot::Xy)),
        Just(Expr::Dot(Dot::Yy)),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone(), 0..4usize).prop_map(|(a, b, op)| {
                let op = [BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::Div][op];
                Expr::binary(op, a, b)
            }),
            inner.clone().prop_map(|e| Expr::Neg(Box::new(e))),
            (inner.clone(), 1u32..4).prop_map(|(e, k)| Expr::Pow(Box::new(e), f64::from(k))),
            (inner, 0..3usize).prop_map(|(e, f)| Expr::Call([Func::Sin, Func::Cos, Func::Exp][f], Box::new(e))),
        ]
    })
}

proptest! {
    #[test]
    fn printing_and_parsing_round_trip(e in expr_tree()) {
        let printed = e.to_string();
        let parsed = parse_expr(&printed, VARS, 1, 1).unwrap();
        prop_assert_eq!(parsed.to_string(), printed);
        let (x, y) = ([0.3, -0.2], [0.7, 1.1]);
        let (a, b) = (eval_f64(&e, &x, &y, None), eval_f64(&parsed, &x, &y, None));
        if let (Ok(a), Ok(b)) = (a, b) {
            prop_assert!(a == b || (a.is_nan() && b.is_nan()) || (a - b).abs() <= 1e-12 * (1.0 + a.abs()));
        }
    }

    #[test]
    fn jet_value_equals_pointwise_value(
        e in expr_tree(),
        x in prop::collection::vec(-0.8f64..0.8, VARS),
        y in prop::collection::vec(0.3f64..1.5, VARS),
    ) {
        let chart = Chart::new(ChartPoint::new(x.clone(), y.clone()).unwrap(), 2).unwrap();
        let pointwise = eval_f64(&e, &x, &y, None);
        let jet = eval_jet(&e, &chart, None);
        match (pointwise, jet) {
            (Ok(a), Ok(j)) if a.is_finite() => {
                prop_assert!((a - j.value()).abs() <= 1e-12 * (1.0 + a.abs()), "{} vs {}", a, j.value());
            }
            _ => {}
        }
    }
}
