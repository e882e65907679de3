use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::Signed;

/// Source position. Positions are metadata only: any two `Loc`s compare
/// equal, so ASTs compare structurally.
#[derive(Clone, Copy, Debug, Default)]
pub struct Loc {
    pub line: u32,
    pub col: u32,
}

impl Loc {
    pub fn new(line: u32, col: u32) -> Self {
        Loc { line, col }
    }

    pub fn pos(self) -> (u32, u32) {
        (self.line, self.col)
    }
}

impl PartialEq for Loc {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

impl Eq for Loc {}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum ModelKind {
    #[default]
    Ctmc,
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct ModelAst {
    pub kind: ModelKind,
    pub constants: Vec<ConstDecl>,
    pub parameters: Vec<ParamDecl>,
    pub formulas: Vec<FormulaDecl>,
    pub modules: Vec<ModuleDef>,
    pub labels: Vec<LabelDef>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConstDecl {
    pub name: String,
    pub value: Expr,
    pub loc: Loc,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParamDecl {
    pub name: String,
    pub loc: Loc,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FormulaDecl {
    pub name: String,
    pub expr: Expr,
    pub loc: Loc,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModuleDef {
    pub name: String,
    pub variables: Vec<VarDecl>,
    pub commands: Vec<Command>,
    pub loc: Loc,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VarType {
    Range { lo: i64, hi: i64 },
    Bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InitValue {
    Int(i64),
    Bool(bool),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VarDecl {
    pub name: String,
    pub ty: VarType,
    pub init: InitValue,
    pub loc: Loc,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Command {
    pub action: Option<String>,
    pub guard: Expr,
    pub alternatives: Vec<Alternative>,
    pub loc: Loc,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Alternative {
    pub rate: Expr,
    pub updates: Vec<Assignment>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Assignment {
    pub var: String,
    pub value: Expr,
    pub loc: Loc,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabelDef {
    pub name: String,
    pub expr: Expr,
    pub loc: Loc,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UnOp {
    Neg,
    Not,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    Or,
    And,
    Eq,
    Neq,
    Lt,
    Le,
    Gt,
    Ge,
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    /// Binding strength; higher binds tighter.
    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Or => 1,
            BinOp::And => 2,
            BinOp::Eq | BinOp::Neq | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => 4,
            BinOp::Add | BinOp::Sub => 5,
            BinOp::Mul | BinOp::Div => 6,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Or => "|",
            BinOp::And => "&",
            BinOp::Eq => "=",
            BinOp::Neq => "!=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
        }
    }

    pub fn is_comparison(self) -> bool {
        self.precedence() == 4
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    Min,
    Max,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ExprKind {
    /// Nonnegative exact literal.
    Num(BigRational),
    Bool(bool),
    Ident(String),
    Unary(UnOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Expr {
    pub kind: ExprKind,
    pub loc: Loc,
}

impl Expr {
    pub fn new(kind: ExprKind, loc: Loc) -> Self {
        Expr { kind, loc }
    }

    pub fn ident(name: &str) -> Self {
        Expr::new(ExprKind::Ident(name.to_string()), Loc::default())
    }

    pub fn boolean(b: bool) -> Self {
        Expr::new(ExprKind::Bool(b), Loc::default())
    }

    /// Literal for any rational; negative values become a negation node so
    /// the expression renders and re-parses to itself.
    pub fn rational(value: BigRational) -> Self {
        if value.is_negative() {
            Expr::new(
                ExprKind::Unary(UnOp::Neg, Box::new(Expr::rational(-value))),
                Loc::default(),
            )
        } else {
            Expr::new(ExprKind::Num(value), Loc::default())
        }
    }

    pub fn integer(n: i64) -> Self {
        Expr::rational(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn binary(op: BinOp, lhs: Expr, rhs: Expr) -> Self {
        Expr::new(ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)), Loc::default())
    }

    /// Every identifier referenced, in left-to-right order, with its position.
    pub fn identifiers(&self) -> Vec<(&str, Loc)> {
        let mut out = Vec::new();
        self.collect_identifiers(&mut out);
        out
    }

    fn collect_identifiers<'a>(&'a self, out: &mut Vec<(&'a str, Loc)>) {
        match &self.kind {
            ExprKind::Ident(name) => out.push((name, self.loc)),
            ExprKind::Unary(_, e) => e.collect_identifiers(out),
            ExprKind::Binary(_, a, b) => {
                a.collect_identifiers(out);
                b.collect_identifiers(out);
            }
            ExprKind::Call(_, args) => args.iter().for_each(|a| a.collect_identifiers(out)),
            ExprKind::Num(_) | ExprKind::Bool(_) => {}
        }
    }
}

/// True when `value` has a finite decimal expansion (denominator 2^a·5^b).
pub fn is_terminating_decimal(value: &BigRational) -> bool {
    let mut d = value.denom().clone();
    for p in [2u32, 5] {
        let p = BigInt::from(p);
        while d.is_multiple_of(&p) {
            d /= &p;
        }
    }
    d == BigInt::from(1)
}

impl ModelAst {
    pub fn constant(&self, name: &str) -> Option<&ConstDecl> {
        self.constants.iter().find(|c| c.name == name)
    }

    /// Declares `name` as a constant with `value`, replacing a constant or a
    /// parameter of the same name.
    pub fn set_constant(&mut self, name: &str, value: BigRational) {
        self.parameters.retain(|p| p.name != name);
        let expr = Expr::rational(value);
        match self.constants.iter_mut().find(|c| c.name == name) {
            Some(c) => c.value = expr,
            None => self.constants.push(ConstDecl {
                name: name.to_string(),
                value: expr,
                loc: Loc::default(),
            }),
        }
    }

    /// Turns `name` into a free parameter, dropping any constant definition.
    pub fn set_parameter(&mut self, name: &str) {
        self.constants.retain(|c| c.name != name);
        if !self.parameters.iter().any(|p| p.name == name) {
            self.parameters.push(ParamDecl {
                name: name.to_string(),
                loc: Loc::default(),
            });
        }
    }
}
