use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use tensorium::expr::{simplify, Expr};
use tensorium::Assumptions;

fn random_expr(rng: &mut StdRng, depth: u32) -> Expr {
    if depth == 0 {
        return match rng.gen_range(0..4) {
            0 => Expr::sym(["x", "y", "z", "θ", "M", "r"][rng.gen_range(0..6)]),
            1 => Expr::int(rng.gen_range(-4..5)),
            2 => Expr::rat(rng.gen_range(1..5), rng.gen_range(1..5)),
            _ => Expr::func(["sin", "cos", "f"][rng.gen_range(0..3)], vec![Expr::sym("x")]),
        };
    }
    match rng.gen_range(0..7) {
        0 => Expr::sum((0..rng.gen_range(2..4)).map(|_| random_expr(rng, depth - 1)).collect()),
        1 => Expr::prod((0..rng.gen_range(2..4)).map(|_| random_expr(rng, depth - 1)).collect()),
        2 => Expr::pow(random_expr(rng, depth - 1), Expr::int(rng.gen_range(-3..4))),
        3 => Expr::pow(random_expr(rng, depth - 1), Expr::rat(1, 2)),
        4 => Expr::func("sin", vec![random_expr(rng, depth - 1)]),
        5 => Expr::abs(random_expr(rng, depth - 1)),
        _ => Expr::Deferred { inner: Box::new(random_expr(rng, depth - 1)), param: "λ".into(), order: 1 },
    }
}

fn main() {
    let asm = Assumptions::default();
    let mut rng = StdRng::seed_from_u64(99);
    for i in 0..3000 {
        eprintln!("case {i}");
        let e = random_expr(&mut rng, 6);
        let s = simplify(&e, &asm);
        let again = simplify(&s, &asm);
        assert_eq!(s, again, "not idempotent at case {i}");
    }
    println!("stress: 3000 deep expressions, no hangs, all idempotent");
}
