use super::{BinOp, Expr, ExprKind, Func};

pub(super) fn simplify(e: &Expr) -> Expr {
    let out = match e.kind() {
        ExprKind::Num(_) | ExprKind::Var | ExprKind::Param(_) => return e.clone(),
        ExprKind::Neg(a) => neg(simplify(a)),
        ExprKind::Call(f, a) => call(*f, simplify(a)),
        ExprKind::Binary(op, l, r) => binary(*op, simplify(l), simplify(r)),
    };
    match out.span {
        Some(_) => out,
        None => Expr { kind: out.kind, span: e.span },
    }
}

fn finite(v: f64) -> Option<Expr> {
    v.is_finite().then(|| Expr::num(v))
}

fn neg(a: Expr) -> Expr {
    match a.kind() {
        ExprKind::Num(v) => Expr::num(-v),
        ExprKind::Neg(inner) => inner.as_ref().clone(),
        _ => -a,
    }
}

fn call(f: Func, a: Expr) -> Expr {
    if let Some(v) = a.as_num() {
        let folded = match f {
            Func::Sqrt if v >= 0.0 => finite(v.sqrt()),
            Func::Exp => finite(v.exp()),
            Func::Ln if v > 0.0 => finite(v.ln()),
            Func::Sin => finite(v.sin()),
            Func::Cos => finite(v.cos()),
            Func::Abs => finite(v.abs()),
            _ => None,
        };
        if let Some(c) = folded {
            return c;
        }
    }
    Expr::call(f, a)
}

fn binary(op: BinOp, l: Expr, r: Expr) -> Expr {
    let (lv, rv) = (l.as_num(), r.as_num());
    if let (Some(a), Some(b)) = (lv, rv) {
        let folded = match op {
            BinOp::Add => finite(a + b),
            BinOp::Sub => finite(a - b),
            BinOp::Mul => finite(a * b),
            BinOp::Div if b != 0.0 => finite(a / b),
            BinOp::Pow if b.fract() == 0.0 && b.abs() < 1024.0 && !(a == 0.0 && b < 0.0) => finite(a.powi(b as i32)),
            BinOp::Pow if a > 0.0 => finite(a.powf(b)),
            _ => None,
        };
        if let Some(c) = folded {
            return c;
        }
    }
    match op {
        BinOp::Add => {
            if lv == Some(0.0) {
                return r;
            }
            if rv == Some(0.0) {
                return l;
            }
            if let ExprKind::Neg(inner) = r.kind() {
                return binary(BinOp::Sub, l, inner.as_ref().clone());
            }
        }
        BinOp::Sub => {
            if rv == Some(0.0) {
                return l;
            }
            if lv == Some(0.0) {
                return neg(r);
            }
            if let ExprKind::Neg(inner) = r.kind() {
                return binary(BinOp::Add, l, inner.as_ref().clone());
            }
        }
        BinOp::Mul => {
            if lv == Some(0.0) || rv == Some(0.0) {
                return Expr::num(0.0);
            }
            if lv == Some(1.0) {
                return r;
            }
            if rv == Some(1.0) {
                return l;
            }
            if lv == Some(-1.0) {
                return neg(r);
            }
            if rv == Some(-1.0) {
                return neg(l);
            }
            // Keep numeric factors on the left and merge adjacent ones.
            if let (None, Some(_)) = (lv, rv) {
                return binary(BinOp::Mul, r, l);
            }
            if let Some(a) = lv {
                if let ExprKind::Binary(BinOp::Mul, il, ir) = r.kind() {
                    if let Some(b) = il.as_num() {
                        return binary(BinOp::Mul, Expr::num(a * b), ir.as_ref().clone());
                    }
                }
                if let ExprKind::Neg(inner) = r.kind() {
                    return binary(BinOp::Mul, Expr::num(-a), inner.as_ref().clone());
                }
            }
        }
        BinOp::Div => {
            if rv == Some(1.0) {
                return l;
            }
            if lv == Some(0.0) {
                return Expr::num(0.0);
            }
        }
        BinOp::Pow => {
            if rv == Some(1.0) {
                return l;
            }
            if rv == Some(0.0) || lv == Some(1.0) {
                return Expr::num(1.0);
            }
        }
    }
    Expr::binary(op, l, r)
}
