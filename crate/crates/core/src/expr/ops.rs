use crate::Scalar;

/// Operators with built-in numeric semantics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Operator {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
    Neg,
    Sin,
    Cos,
    Tan,
    Exp,
    Log,
    Sqrt,
    Abs,
    Sinh,
    Cosh,
    Tanh,
    Arcsin,
    Arccos,
    Arctan,
}

impl Operator {
    pub const ALL: [Operator; 19] = [
        Operator::Add,
        Operator::Sub,
        Operator::Mul,
        Operator::Div,
        Operator::Pow,
        Operator::Neg,
        Operator::Sin,
        Operator::Cos,
        Operator::Tan,
        Operator::Exp,
        Operator::Log,
        Operator::Sqrt,
        Operator::Abs,
        Operator::Sinh,
        Operator::Cosh,
        Operator::Tanh,
        Operator::Arcsin,
        Operator::Arccos,
        Operator::Arctan,
    ];

    pub fn from_name(name: &str) -> Option<Operator> {
        Operator::ALL.iter().copied().find(|op| op.name() == name)
    }

    pub fn name(self) -> &'static str {
        match self {
            Operator::Add => "add",
            Operator::Sub => "sub",
            Operator::Mul => "mul",
            Operator::Div => "div",
            Operator::Pow => "pow",
            Operator::Neg => "neg",
            Operator::Sin => "sin",
            Operator::Cos => "cos",
            Operator::Tan => "tan",
            Operator::Exp => "exp",
            Operator::Log => "log",
            Operator::Sqrt => "sqrt",
            Operator::Abs => "abs",
            Operator::Sinh => "sinh",
            Operator::Cosh => "cosh",
            Operator::Tanh => "tanh",
            Operator::Arcsin => "arcsin",
            Operator::Arccos => "arccos",
            Operator::Arctan => "arctan",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            Operator::Add | Operator::Sub | Operator::Mul | Operator::Div | Operator::Pow => 2,
            _ => 1,
        }
    }

    /// Symbol used by the infix renderer for binary operators.
    pub fn infix_symbol(self) -> Option<&'static str> {
        match self {
            Operator::Add => Some("+"),
            Operator::Sub => Some("-"),
            Operator::Mul => Some("*"),
            Operator::Div => Some("/"),
            Operator::Pow => Some("^"),
            _ => None,
        }
    }

    pub fn is_trig(self) -> bool {
        matches!(self, Operator::Sin | Operator::Cos | Operator::Tan)
    }

    /// Applies the operator; `None` signals a domain error or a non-finite result.
    pub fn apply<T: Scalar>(self, args: &[T]) -> Option<T> {
        let a = args[0];
        let value = match self {
            Operator::Add => a + args[1],
            Operator::Sub => a - args[1],
            Operator::Mul => a * args[1],
            Operator::Div => {
                if args[1] == T::zero() {
                    return None;
                }
                a / args[1]
            }
            Operator::Pow => a.powf(args[1]),
            Operator::Neg => -a,
            Operator::Sin => a.sin(),
            Operator::Cos => a.cos(),
            Operator::Tan => a.tan(),
            Operator::Exp => a.exp(),
            Operator::Log => {
                if a <= T::zero() {
                    return None;
                }
                a.ln()
            }
            Operator::Sqrt => {
                if a < T::zero() {
                    return None;
                }
                a.sqrt()
            }
            Operator::Abs => a.abs(),
            Operator::Sinh => a.sinh(),
            Operator::Cosh => a.cosh(),
            Operator::Tanh => a.tanh(),
            Operator::Arcsin => {
                if a.abs() > T::one() {
                    return None;
                }
                a.asin()
            }
            Operator::Arccos => {
                if a.abs() > T::one() {
                    return None;
                }
                a.acos()
            }
            Operator::Arctan => a.atan(),
        };
        value.is_finite().then_some(value)
    }
}
