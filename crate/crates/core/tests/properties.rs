use proptest::prelude::*;
use sikorski::compactify::boundize;
use sikorski::completion::complete;
use sikorski::expr::{parse_expr, Expr, Func};
use sikorski::filters::{enumerate_filters, filter_from_base, intersect_filters, FiniteFilter};
use sikorski::space::{Carrier, DiffSpace, GeneratorFamily, Interval, SmoothFunction};
use sikorski::tangent::{apply, leibniz_check, TangentVector};
use sikorski::uniform::{entourage_contains, probe_cauchy, pseudometric, Entourage, Probe};

const VARS: [&str; 2] = ["x", "y"];

fn func() -> impl Strategy<Value = Func> {
    prop_oneof![
        Just(Func::Sin),
        Just(Func::Cos),
        Just(Func::Tan),
        Just(Func::Atan),
        Just(Func::Exp),
        Just(Func::Log),
        Just(Func::Sqrt),
        Just(Func::Abs),
    ]
}

fn expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        (0..VARS.len()).prop_map(|i| Expr::Var(VARS[i].to_string())),
        (-16i32..=16).prop_map(|k| Expr::Const(k as f64 / 4.0)),
    ];
    leaf.prop_recursive(4, 32, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Add(Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Sub(Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Mul(Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Div(Box::new(a), Box::new(b))),
            (inner.clone(), -3i32..=3).prop_map(|(a, k)| Expr::Pow(Box::new(a), k)),
            inner.clone().prop_map(|a| Expr::Neg(Box::new(a))),
            (func(), inner).prop_map(|(f, a)| Expr::Call(f, Box::new(a))),
        ]
    })
}

fn smooth_expr() -> impl Strategy<Value = Expr> {
    expr().prop_filter("no abs", |e| !e.to_string().contains("abs"))
}

fn close(a: f64, b: f64) -> bool {
    a == b || (a - b).abs() <= 1e-9 * (1.0 + a.abs().max(b.abs())) || (a.is_nan() && b.is_nan())
}

fn plane_family(exprs: &[Expr]) -> GeneratorFamily {
    let mut f = GeneratorFamily::new(VARS.iter().map(|v| v.to_string()).collect());
    for (i, e) in exprs.iter().enumerate() {
        f.push(&format!("g{i}"), e.clone(), None).unwrap();
    }
    f
}

fn point() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-3.0f64..3.0, 2)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn printing_then_parsing_preserves_values(e in expr(), p in point()) {
        let text = e.to_string();
        let back = parse_expr(&text, &VARS).unwrap_or_else(|err| panic!("`{text}`: {err}"));
        let env = [("x", p[0]), ("y", p[1])];
        match (e.eval(&env[..]), back.eval(&env[..])) {
            (Ok(a), Ok(b)) => prop_assert!(close(a, b), "`{text}`: {a} vs {b}"),
            (Err(_), Err(_)) => {}
            (a, b) => prop_assert!(false, "`{text}`: {a:?} vs {b:?}"),
        }
    }

    #[test]
    fn derivative_is_linear(a in smooth_expr(), b in smooth_expr(), s in -2.0f64..2.0, p in point()) {
        let env = [("x", p[0]), ("y", p[1])];
        let combo = Expr::add(Expr::mul(Expr::constant(s), a.clone()), b.clone());
        let lhs = combo.diff("x").eval(&env[..]);
        let rhs = a.diff("x").eval(&env[..]).and_then(|da| b.diff("x").eval(&env[..]).map(|db| s * da + db));
        if let (Ok(l), Ok(r)) = (lhs, rhs) {
            if l.is_finite() && r.abs() < 1e6 {
                prop_assert!((l - r).abs() <= 1e-9 * (1.0 + r.abs()), "{l} vs {r}");
            }
        }
    }

    #[test]
    fn pseudometric_is_symmetric_and_satisfies_the_triangle_inequality(
        gens in prop::collection::vec(smooth_expr(), 1..4),
        x in point(), y in point(), z in point(),
    ) {
        let fam = plane_family(&gens);
        let names = fam.names();
        let d = |a: &[f64], b: &[f64]| pseudometric(&fam, &names, a, b);
        if let (Ok(xy), Ok(yx), Ok(yz), Ok(xz)) = (d(&x, &y), d(&y, &x), d(&y, &z), d(&x, &z)) {
            prop_assume!(xy.is_finite() && yz.is_finite() && xz.is_finite());
            prop_assert_eq!(xy, yx);
            prop_assert!(xz <= (xy + yz) * (1.0 + 1e-12) + 1e-300);
            prop_assert_eq!(d(&x, &x).unwrap(), 0.0);
        }
    }

    #[test]
    fn entourage_membership_is_a_pseudometric_ball(
        gens in prop::collection::vec(smooth_expr(), 1..4),
        eps in 0.01f64..5.0,
        x in point(), y in point(),
    ) {
        let fam = plane_family(&gens);
        let names = fam.names();
        if let Ok(d) = pseudometric(&fam, &names, &x, &y) {
            let v = Entourage::new(names.clone(), eps).unwrap();
            prop_assert_eq!(entourage_contains(&fam, &v, &x, &y).unwrap(), d < eps);
        }
    }

    #[test]
    fn leibniz_rule_holds_at_random_points(
        a in smooth_expr(), b in smooth_expr(), p in point(), c in point(),
    ) {
        let fam = plane_family(&[a, b]);
        let v = TangentVector::new(p, c).unwrap();
        let (ga, gb) = (SmoothFunction::generator("g0"), SmoothFunction::generator("g1"));
        if let Ok(r) = leibniz_check(&v, &ga, &gb, &fam) {
            prop_assume!(r.scale.is_finite() && r.scale < 1e8);
            prop_assert!(r.relative() <= 1e-12, "{r:?}");
        }
    }

    #[test]
    fn tangent_vectors_act_linearly(
        e in smooth_expr(), p in point(), c1 in point(), c2 in point(), s in -3.0f64..3.0,
    ) {
        let fam = plane_family(&[e]);
        let g = SmoothFunction::generator("g0");
        let v = TangentVector::new(p.clone(), c1).unwrap();
        let w = TangentVector::new(p, c2).unwrap();
        let sum = v.combine(s, &w, 1.0).unwrap();
        if let (Ok(a), Ok(b), Ok(c)) = (apply(&v, &g, &fam), apply(&w, &g, &fam), apply(&sum, &g, &fam)) {
            prop_assume!(a.abs() < 1e8 && b.abs() < 1e8);
            prop_assert!((c - (s * a + b)).abs() <= 1e-9 * (1.0 + (s * a).abs() + b.abs()));
        }
    }

    #[test]
    fn intersections_of_filters_are_filters(n in 1usize..=4, picks in prop::collection::vec(any::<prop::sample::Index>(), 1..5)) {
        let all = enumerate_filters(n).unwrap();
        let chosen: Vec<FiniteFilter> = picks.iter().map(|i| all[i.index(all.len())]).collect();
        let meet = intersect_filters(&chosen).unwrap();
        prop_assert!(all.contains(&meet));
        for f in &chosen {
            prop_assert!(meet.is_subfamily_of(f));
        }
        // on a finite set every filter is principal, generated by its core
        prop_assert_eq!(filter_from_base(n, &[meet.core()]).unwrap(), meet);
    }

    #[test]
    fn bounded_generators_follow_the_scale_formula(m in -8.0f64..8.0) {
        let m = (m * 10.0).round() / 10.0;
        let fam = GeneratorFamily::new(vec!["x".into()]).with("id", Expr::var("x")).unwrap();
        let carrier = Carrier::line(Interval::open(f64::NEG_INFINITY, f64::INFINITY), 401, Some((-20.0, 20.0))).unwrap();
        let s = DiffSpace::new("line", carrier, fam).unwrap();
        let b = boundize(&s, &SmoothFunction::generator("id"), &[m]).unwrap();
        prop_assert_eq!(b.mu[0], (m + 2.0).abs().max((m - 2.0).abs()));
        prop_assert!(b.max_abs_gamma[0] <= 1.0);
        prop_assert!(b.local_residual <= 1e-9);
    }

    #[test]
    fn probes_converging_inside_a_compact_carrier_adjoin_nothing(c in 0.0f64..1.0) {
        let fam = GeneratorFamily::new(vec!["x".into()]).with("id", Expr::var("x")).unwrap();
        let s = DiffSpace::new("unit", Carrier::line(Interval::closed(0.0, 1.0), 11, None).unwrap(), fam).unwrap();
        let c = (c * 10.0).round() / 10.0;
        let p = Probe::new("p", vec![parse_expr(&format!("{c} + (1 - {c}) * exp(-n)"), &["n"]).unwrap()], 1000, 1199).unwrap();
        let v = probe_cauchy(&s, &p, 1e-6, 50).unwrap();
        prop_assert!((v.limit.unwrap()[0] - c).abs() < 1e-12);
        prop_assert!(complete(&s, &[p], 1e-6, 50).unwrap().adjoined.is_empty());
    }
}
