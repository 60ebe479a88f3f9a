use effaction::cli::csv;
use effaction::effective::{self, SmearOptions};
use effaction::expr::{parse, BinOp, Expr, Func, Jet4};
use effaction::model::{Problem, ProblemSpec};
use proptest::prelude::*;

fn problem(m: &str, v: &str, domain: (f64, f64)) -> Problem {
    ProblemSpec::from_strings(m, v, 1.0, 0.0, domain)
        .unwrap()
        .validate(101)
        .unwrap()
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

fn richardson(f: impl Fn(f64) -> f64, h: f64) -> f64 {
    let d = |h: f64| (f(h) - f(-h)) / (2.0 * h);
    (4.0 * d(h / 2.0) - d(h)) / 3.0
}

fn arb_expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        (0.0f64..100.0).prop_map(Expr::Const),
        Just(Expr::Var),
        Just(Expr::Const(0.5)),
    ];
    leaf.prop_recursive(4, 32, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(|e| Expr::Neg(Box::new(e))),
            (
                prop::sample::select(vec![
                    BinOp::Add,
                    BinOp::Sub,
                    BinOp::Mul,
                    BinOp::Div,
                    BinOp::Pow
                ]),
                inner.clone(),
                inner.clone()
            )
                .prop_map(|(op, l, r)| Expr::Binary(op, Box::new(l), Box::new(r))),
            (prop::sample::select(Func::ALL.to_vec()), inner)
                .prop_map(|(f, e)| Expr::Call(f, Box::new(e))),
        ]
    })
}

proptest! {
    #[test]
    fn display_round_trips(e in arb_expr()) {
        let text = e.to_string();
        let back = parse(&text).unwrap();
        prop_assert_eq!(back.to_string(), text.clone());
        for x in [-0.7, 0.3, 1.9] {
            match (e.eval(x), back.eval(x)) {
                (Ok(a), Ok(b)) => prop_assert!(a.to_bits() == b.to_bits(), "{text}: {a} vs {b}"),
                (Err(_), Err(_)) => {}
                (a, b) => prop_assert!(false, "{text}: {a:?} vs {b:?}"),
            }
        }
    }

    #[test]
    fn jet_product_and_quotient_rules(
        a in prop::array::uniform5(-3.0f64..3.0),
        b in prop::array::uniform5(-3.0f64..3.0),
    ) {
        let (f, g) = (Jet4::from_derivatives(a), Jet4::from_derivatives(b));
        let fg = (f * g).derivatives();
        // Leibniz: (fg)^(k) = Σ C(k,j) f^(j) g^(k−j)
        let binom = [[1.0, 0.0, 0.0, 0.0, 0.0], [1.0, 1.0, 0.0, 0.0, 0.0], [1.0, 2.0, 1.0, 0.0, 0.0],
                     [1.0, 3.0, 3.0, 1.0, 0.0], [1.0, 4.0, 6.0, 4.0, 1.0]];
        for k in 0..5 {
            let want: f64 = (0..=k).map(|j| binom[k][j] * a[j] * b[k - j]).sum();
            prop_assert!(close(fg[k], want, 1e-12), "k={k}: {} vs {want}", fg[k]);
        }
        prop_assume!(b[0].abs() > 0.5);
        let back = ((f / g) * g).derivatives();
        for k in 0..5 {
            prop_assert!(close(back[k], a[k], 1e-9 * 10f64.powi(k as i32)), "k={k}");
        }
    }

    #[test]
    fn jet_identities(x in -2.0f64..2.0) {
        let t = Jet4::variable(x);
        let one = t.sin() * t.sin() + t.cos() * t.cos();
        let id = t.exp().ln();
        let ch = t.cosh() * t.cosh() - t.sinh() * t.sinh();
        for k in 0..5 {
            let unit = if k == 0 { 1.0 } else { 0.0 };
            let lin = [x, 1.0, 0.0, 0.0, 0.0][k];
            prop_assert!((one.d(k) - unit).abs() < 1e-12);
            prop_assert!((ch.d(k) - unit).abs() < 1e-10);
            prop_assert!((id.d(k) - lin).abs() < 1e-12);
        }
        let sq = (t.exp()).sqrt() * (t.exp()).sqrt();
        for k in 0..5 {
            prop_assert!(close(sq.d(k), x.exp(), 1e-12));
        }
    }

    #[test]
    fn gradient_matches_finite_difference(
        m0 in 0.5f64..2.0,
        alpha in 0.0f64..0.5,
        k in 0.5f64..3.0,
        g in 0.0f64..1.0,
        c in 0.0f64..0.3,
        x in -1.5f64..1.5,
    ) {
        let p = problem(
            &format!("{m0}*(1+{alpha}*x^2)"),
            &format!("0.5*{k}*x^2 + {g}*x^4 + {c}*cos(x)"),
            (-3.0, 3.0),
        );
        let grad = effective::one_loop_gradient(&p, x).unwrap();
        let fd = richardson(|d| effective::one_loop_potential(&p, x + d).unwrap(), 1e-2);
        let scale = effective::one_loop_potential(&p, x).unwrap();
        prop_assert!((grad - fd).abs() <= 1e-6 * grad.abs().max(1e-3 * scale), "{grad} vs {fd}");
    }

    #[test]
    fn heat_equation_on_polynomials(
        coef in prop::collection::vec(-2.0f64..2.0, 1..=7),
        a2 in 0.05f64..=1.0,
        x in -2.0f64..2.0,
    ) {
        let v = coef
            .iter()
            .enumerate()
            .map(|(i, c)| format!("({c})*x^{i}"))
            .collect::<Vec<_>>()
            .join(" + ");
        let p = problem("1", &v, (-3.0, 3.0));
        let opts = SmearOptions::default();
        let jet = effective::smeared_jet(&p, x, a2, opts).unwrap();
        let lhs = richardson(|d| effective::smeared_jet(&p, x, a2 + d, opts).unwrap().value(), 1e-2 * a2);
        prop_assert!((lhs - 0.5 * jet.d(2)).abs() <= 1e-8 * jet.d(2).abs().max(1.0));
    }

    #[test]
    fn csv_numbers_round_trip(bits in any::<u64>()) {
        let v = f64::from_bits(bits);
        prop_assume!(v.is_finite());
        let s = csv::number(v);
        let back: f64 = s.parse().unwrap();
        prop_assert_eq!(back.to_bits(), v.to_bits());
        prop_assert_eq!(csv::number(back), s);
    }
}

#[test]
fn smearing_routes_agree() {
    let p = problem("1", "0.5*x^2 + 0.3*x^4 - 0.1*x^3", (-3.0, 3.0));
    let opts = SmearOptions::default();
    for x in [-1.0, 0.0, 0.7] {
        let fast = effective::smeared_jet(&p, x, 0.3, opts).unwrap();
        let quad = effective::smeared_jet_quadrature(&p, x, 0.3, opts).unwrap();
        for k in 0..5 {
            assert!(close(fast.d(k), quad.d(k), 1e-10), "k={k}");
        }
    }
}
