//! Random well-formed programs for round-trip testing.

use rand::seq::IndexedRandom;
use rand::Rng;

use super::ast::{is_identifier, BoolOp, CmpOp, Expr, Program, Stmt, StmtKind, Target};

const NAMES: [&str; 12] =
    ["a", "b", "obj", "mug_id", "x1", "_t", "bowl_ids", "ids", "pos", "skill", "doc", "learn_skill"];
const CHARS: [char; 16] = ['a', 'z', ' ', '"', '\'', '\\', '\n', '\t', '#', 'é', '0', ':', '(', ']', '_', '='];
const CMP: [CmpOp; 10] = [
    CmpOp::Eq,
    CmpOp::NotEq,
    CmpOp::Lt,
    CmpOp::LtE,
    CmpOp::Gt,
    CmpOp::GtE,
    CmpOp::In,
    CmpOp::NotIn,
    CmpOp::Is,
    CmpOp::IsNot,
];

fn name<R: Rng>(rng: &mut R) -> String {
    if rng.random_bool(0.7) {
        return NAMES.choose(rng).expect("nonempty").to_string();
    }
    loop {
        let len = rng.random_range(1..8);
        let s: String = (0..len)
            .map(|i| {
                let pool: &[u8] = if i == 0 { b"abcxyz_QR" } else { b"abcxyz_QR019" };
                *pool.choose(rng).expect("nonempty") as char
            })
            .collect();
        if is_identifier(&s) {
            return s;
        }
    }
}

fn string<R: Rng>(rng: &mut R) -> String {
    let len = rng.random_range(0..6);
    (0..len).map(|_| *CHARS.choose(rng).expect("nonempty")).collect()
}

fn float<R: Rng>(rng: &mut R) -> f64 {
    match rng.random_range(0..4) {
        0 => [0.0, 0.5, 1.0, 0.25, 1e-7, 2.5e16, 0.1].choose(rng).copied().expect("nonempty"),
        1 => rng.random_range(-10.0..10.0),
        2 => rng.random::<f64>() * 10f64.powi(rng.random_range(-300..300)),
        _ => -(rng.random_range(0..1000) as f64) / 8.0,
    }
}

pub fn random_expr<R: Rng>(rng: &mut R, depth: u32) -> Expr {
    let leaf = depth == 0 || rng.random_bool(0.35);
    if leaf {
        return match rng.random_range(0..7) {
            0 => Expr::None,
            1 => Expr::Bool(rng.random()),
            2 => Expr::Int(rng.random_range(-1_000_000_000_000i64..1_000_000_000_000)),
            3 => Expr::Float(float(rng)),
            4 => Expr::Str(string(rng)),
            _ => Expr::Name(name(rng)),
        };
    }
    let d = depth - 1;
    let many = |rng: &mut R, lo: usize, hi: usize| -> Vec<Expr> {
        let n = rng.random_range(lo..=hi);
        (0..n).map(|_| random_expr(rng, d)).collect()
    };
    match rng.random_range(0..8) {
        0 => Expr::List(many(rng, 0, 3)),
        1 => Expr::Tuple(many(rng, 0, 3)),
        2 | 3 => {
            let args = many(rng, 0, 3);
            let mut kwargs: Vec<(String, Expr)> = vec![];
            for _ in 0..rng.random_range(0..3) {
                let k = name(rng);
                if !kwargs.iter().any(|(n, _)| *n == k) {
                    kwargs.push((k, random_expr(rng, d)));
                }
            }
            Expr::Call { name: name(rng), args, kwargs }
        }
        4 => Expr::Index { value: Box::new(random_expr(rng, d)), index: Box::new(random_expr(rng, d)) },
        5 => {
            let n = rng.random_range(1..=2);
            let ops = (0..n).map(|_| (*CMP.choose(rng).expect("nonempty"), random_expr(rng, d))).collect();
            Expr::Compare { left: Box::new(random_expr(rng, d)), ops }
        }
        6 => {
            let op = if rng.random() { BoolOp::And } else { BoolOp::Or };
            Expr::BoolOp { op, values: many(rng, 2, 3) }
        }
        _ => Expr::Not(Box::new(random_expr(rng, d))),
    }
}

fn block<R: Rng>(rng: &mut R, depth: u32) -> Vec<Stmt> {
    let n = rng.random_range(1..=3);
    (0..n).map(|_| random_stmt(rng, depth)).collect()
}

fn comment<R: Rng>(rng: &mut R) -> String {
    let words = ["pick the mug", "step 2", "# nested", "done", "", "x = (", "if:"];
    words.choose(rng).expect("nonempty").to_string()
}

pub fn random_stmt<R: Rng>(rng: &mut R, depth: u32) -> Stmt {
    let compound = depth > 0 && rng.random_bool(0.3);
    let kind = if compound {
        if rng.random() {
            StmtKind::For { var: name(rng), iter: random_expr(rng, 2), body: block(rng, depth - 1) }
        } else {
            let n = rng.random_range(1..=3);
            let branches = (0..n).map(|_| (random_expr(rng, 2), block(rng, depth - 1))).collect();
            let orelse = rng.random_bool(0.5).then(|| block(rng, depth - 1));
            StmtKind::If { branches, orelse }
        }
    } else {
        match rng.random_range(0..10) {
            0..=2 => StmtKind::Assign { target: Target::Name(name(rng)), value: random_expr(rng, 3) },
            3 => StmtKind::Assign { target: Target::Pair(name(rng), name(rng)), value: random_expr(rng, 3) },
            4..=7 => StmtKind::Expr(random_expr(rng, 3)),
            8 => StmtKind::Pass,
            _ => StmtKind::Comment(comment(rng)),
        }
    };
    Stmt::new(kind)
}

/// A random program with statement nesting up to `depth`.
pub fn random_program<R: Rng>(rng: &mut R, depth: u32) -> Program {
    let n = rng.random_range(0..6);
    Program { body: (0..n).map(|_| random_stmt(rng, depth)).collect() }
}
