use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
        }
    }

    fn precedence(self) -> u8 {
        match self {
            BinOp::Add | BinOp::Sub => 1,
            BinOp::Mul | BinOp::Div => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sqrt,
    Exp,
    Log,
    Sin,
    Cos,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Sqrt => "sqrt",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sin => "sin",
            Func::Cos => "cos",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "sqrt" => Func::Sqrt,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            _ => return None,
        })
    }
}

/// Euclidean inner products of the chart coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dot {
    /// `⟨x, x⟩`
    Xx,
    /// `⟨x, y⟩`
    Xy,
    /// `⟨y, y⟩`
    Yy,
}

impl Dot {
    fn name(self) -> &'static str {
        match self {
            Dot::Xx => "dot_xx",
            Dot::Xy => "dot_xy",
            Dot::Yy => "dot_yy",
        }
    }
}

/// Expression tree. Coordinate indices are stored 0-based and written
/// 1-based (`x[1]` is `X(0)`).
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    X(usize),
    Y(usize),
    /// The metric function `F` itself; only allowed in ρ, U and V.
    Metric,
    Dot(Dot),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    /// Power with a literal exponent.
    Pow(Box<Expr>, f64),
    Call(Func, Box<Expr>),
}

impl Expr {
    pub fn binary(op: BinOp, lhs: Expr, rhs: Expr) -> Self {
        Expr::Binary(op, Box::new(lhs), Box::new(rhs))
    }

    fn walk(&self, visit: &mut impl FnMut(&Expr)) {
        visit(self);
        match self {
            Expr::Neg(e) | Expr::Pow(e, _) | Expr::Call(_, e) => e.walk(visit),
            Expr::Binary(_, a, b) => {
                a.walk(visit);
                b.walk(visit);
            }
            Expr::Num(_) | Expr::X(_) | Expr::Y(_) | Expr::Metric | Expr::Dot(_) => {}
        }
    }

    /// True if the expression depends on the direction `y` (directly, via
    /// `dot_xy`/`dot_yy`, or through `F`).
    pub fn depends_on_direction(&self) -> bool {
        let mut found = false;
        self.walk(&mut |e| {
            if matches!(e, Expr::Y(_) | Expr::Metric | Expr::Dot(Dot::Xy | Dot::Yy)) {
                found = true;
            }
        });
        found
    }

    pub fn uses_metric(&self) -> bool {
        let mut found = false;
        self.walk(&mut |e| found |= matches!(e, Expr::Metric));
        found
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Binary(op, ..) => op.precedence(),
            _ => 3,
        }
    }
}

fn write_number(f: &mut fmt::Formatter<'_>, v: f64) -> fmt::Result {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        write!(f, "{}", v as i64)
    } else {
        write!(f, "{v}")
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write_number(f, *v),
            Expr::X(i) => write!(f, "x[{}]", i + 1),
            Expr::Y(i) => write!(f, "y[{}]", i + 1),
            Expr::Metric => write!(f, "F"),
            Expr::Dot(d) => write!(f, "{}", d.name()),
            Expr::Neg(e) => {
                if e.precedence() < 3 {
                    write!(f, "-({e})")
                } else {
                    write!(f, "-{e}")
                }
            }
            Expr::Binary(op, a, b) => {
                let p = op.precedence();
                if a.precedence() < p {
                    write!(f, "({a})")?;
                } else {
                    write!(f, "{a}")?;
                }
                write!(f, " {} ", op.symbol())?;
                if b.precedence() <= p {
                    write!(f, "({b})")
                } else {
                    write!(f, "{b}")
                }
            }
            Expr::Pow(base, e) => {
                let atomic = matches!(
                    **base,
                    Expr::Num(_) | Expr::X(_) | Expr::Y(_) | Expr::Metric | Expr::Dot(_) | Expr::Call(..)
                );
                if atomic {
                    write!(f, "{base}^")?;
                } else {
                    write!(f, "({base})^")?;
                }
                write_number(f, *e)
            }
            Expr::Call(func, arg) => write!(f, "{}({arg})", func.name()),
        }
    }
}
