use super::{BinOp, Expr, ExprKind, Func};

/// Unsimplified first derivative with respect to the variable.
pub(super) fn derivative(e: &Expr) -> Expr {
    match e.kind() {
        ExprKind::Num(_) | ExprKind::Param(_) => Expr::num(0.0),
        ExprKind::Var => Expr::num(1.0),
        ExprKind::Neg(a) => -derivative(a),
        ExprKind::Binary(op, l, r) => {
            let (u, v) = (l.as_ref().clone(), r.as_ref().clone());
            match op {
                BinOp::Add => derivative(&u) + derivative(&v),
                BinOp::Sub => derivative(&u) - derivative(&v),
                BinOp::Mul => derivative(&u) * v.clone() + u.clone() * derivative(&v),
                BinOp::Div => (derivative(&u) * v.clone() - u.clone() * derivative(&v)) / v.clone().powi(2),
                BinOp::Pow => {
                    if !v.depends_on_var() {
                        // d(u^c) = c u^(c-1) u'
                        let lowered = match v.as_num() {
                            Some(c) => Expr::num(c - 1.0),
                            None => v.clone() - 1.0,
                        };
                        v.clone() * u.clone().pow(lowered) * derivative(&u)
                    } else {
                        e.clone() * (derivative(&v) * u.clone().ln() + v.clone() * derivative(&u) / u.clone())
                    }
                }
            }
        }
        ExprKind::Call(f, a) => {
            let u = a.as_ref().clone();
            let du = derivative(&u);
            match f {
                Func::Sqrt => du / (2.0 * u.sqrt()),
                Func::Exp => u.exp() * du,
                Func::Ln => du / u,
                Func::Sin => Expr::call(Func::Cos, u) * du,
                Func::Cos => -(Expr::call(Func::Sin, u) * du),
                // abs(u)/u is undefined at u = 0, which is where abs has no derivative.
                Func::Abs => du * Expr::call(Func::Abs, u.clone()) / u,
            }
        }
    }
}
