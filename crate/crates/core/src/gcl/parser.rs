use num_traits::{Signed, ToPrimitive};

use super::ast::*;
use super::error::{ErrorKind, SourceError};
use super::lexer::{describe, tokenize, Keyword, Tok, Token};

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

type PResult<T> = Result<T, SourceError>;

impl Parser {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn loc(&self) -> Loc {
        self.tokens[self.pos].loc
    }

    fn advance(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn unexpected(&self, expected: &str) -> SourceError {
        SourceError::new(
            ErrorKind::Parse,
            self.loc(),
            format!("expected {expected}, found {}", describe(self.peek())),
        )
    }

    fn expect(&mut self, tok: Tok, what: &str) -> PResult<Loc> {
        if *self.peek() == tok {
            Ok(self.advance().loc)
        } else {
            Err(self.unexpected(what))
        }
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == tok {
            self.advance();
            true
        } else {
            false
        }
    }

    fn is_keyword(&self, k: Keyword) -> bool {
        *self.peek() == Tok::Keyword(k)
    }

    fn name(&mut self, what: &str) -> PResult<(String, Loc)> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                let loc = self.advance().loc;
                Ok((s, loc))
            }
            _ => Err(self.unexpected(what)),
        }
    }

    fn model(&mut self) -> PResult<ModelAst> {
        self.expect(Tok::Keyword(Keyword::Ctmc), "`ctmc`")?;
        let mut ast = ModelAst::default();
        loop {
            if self.is_keyword(Keyword::Const) {
                self.advance();
                let (name, loc) = self.name("constant name")?;
                self.expect(Tok::Eq, "`=`")?;
                let value = self.expr()?;
                self.expect(Tok::Semi, "`;`")?;
                ast.constants.push(ConstDecl { name, value, loc });
            } else if self.is_keyword(Keyword::Param) {
                self.advance();
                let (name, loc) = self.name("parameter name")?;
                self.expect(Tok::Semi, "`;`")?;
                ast.parameters.push(ParamDecl { name, loc });
            } else if self.is_keyword(Keyword::Formula) {
                self.advance();
                let (name, loc) = self.name("formula name")?;
                self.expect(Tok::Eq, "`=`")?;
                let expr = self.expr()?;
                self.expect(Tok::Semi, "`;`")?;
                ast.formulas.push(FormulaDecl { name, expr, loc });
            } else {
                break;
            }
        }
        if !self.is_keyword(Keyword::Module) {
            return Err(self.unexpected("a declaration or `module`"));
        }
        while self.is_keyword(Keyword::Module) {
            ast.modules.push(self.module()?);
        }
        while self.is_keyword(Keyword::Label) {
            let loc = self.advance().loc;
            let name = match self.peek().clone() {
                Tok::Str(s) => {
                    self.advance();
                    s
                }
                _ => return Err(self.unexpected("label name string")),
            };
            self.expect(Tok::Eq, "`=`")?;
            let expr = self.expr()?;
            self.expect(Tok::Semi, "`;`")?;
            ast.labels.push(LabelDef { name, expr, loc });
        }
        if *self.peek() != Tok::Eof {
            return Err(self.unexpected("`label` or end of input"));
        }
        Ok(ast)
    }

    fn module(&mut self) -> PResult<ModuleDef> {
        self.expect(Tok::Keyword(Keyword::Module), "`module`")?;
        let (name, loc) = self.name("module name")?;
        let mut variables = Vec::new();
        while matches!(self.peek(), Tok::Ident(_)) {
            variables.push(self.var_decl()?);
        }
        let mut commands = Vec::new();
        while *self.peek() == Tok::LBracket {
            commands.push(self.command()?);
        }
        self.expect(
            Tok::Keyword(Keyword::EndModule),
            "variable declaration, command or `endmodule`",
        )?;
        Ok(ModuleDef {
            name,
            variables,
            commands,
            loc,
        })
    }

    fn int_literal(&mut self) -> PResult<(i64, Loc)> {
        let loc = self.loc();
        let neg = self.eat(&Tok::Minus);
        match self.peek().clone() {
            Tok::Number(n) if n.is_integer() => {
                self.advance();
                let v = n
                    .to_integer()
                    .to_i64()
                    .ok_or_else(|| SourceError::new(ErrorKind::Range, loc, "integer out of range"))?;
                Ok((if neg { -v } else { v }, loc))
            }
            _ => Err(self.unexpected("integer")),
        }
    }

    fn var_decl(&mut self) -> PResult<VarDecl> {
        let (name, loc) = self.name("variable name")?;
        self.expect(Tok::Colon, "`:`")?;
        let ty = if self.eat(&Tok::Keyword(Keyword::Bool)) {
            VarType::Bool
        } else {
            self.expect(Tok::LBracket, "`[` or `bool`")?;
            let (lo, lo_loc) = self.int_literal()?;
            self.expect(Tok::DotDot, "`..`")?;
            let (hi, _) = self.int_literal()?;
            self.expect(Tok::RBracket, "`]`")?;
            if lo > hi {
                return Err(SourceError::new(
                    ErrorKind::Range,
                    lo_loc,
                    format!("empty range [{lo}..{hi}] for `{name}`"),
                ));
            }
            VarType::Range { lo, hi }
        };
        self.expect(Tok::Keyword(Keyword::Init), "`init`")?;
        let init_loc = self.loc();
        let init = match self.peek() {
            Tok::Keyword(Keyword::True) => {
                self.advance();
                InitValue::Bool(true)
            }
            Tok::Keyword(Keyword::False) => {
                self.advance();
                InitValue::Bool(false)
            }
            _ => InitValue::Int(self.int_literal()?.0),
        };
        match (ty, init) {
            (VarType::Range { lo, hi }, InitValue::Int(v)) if v < lo || v > hi => {
                return Err(SourceError::new(
                    ErrorKind::Range,
                    init_loc,
                    format!("initial value {v} of `{name}` outside [{lo}..{hi}]"),
                ))
            }
            (VarType::Range { .. }, InitValue::Bool(_)) | (VarType::Bool, InitValue::Int(_)) => {
                return Err(SourceError::new(
                    ErrorKind::Type,
                    init_loc,
                    format!("initial value of `{name}` does not match its type"),
                ))
            }
            _ => {}
        }
        self.expect(Tok::Semi, "`;`")?;
        Ok(VarDecl { name, ty, init, loc })
    }

    fn command(&mut self) -> PResult<Command> {
        let loc = self.expect(Tok::LBracket, "`[`")?;
        let action = match self.peek().clone() {
            Tok::Ident(s) => {
                self.advance();
                Some(s)
            }
            _ => None,
        };
        self.expect(Tok::RBracket, "`]`")?;
        let guard = self.expr()?;
        self.expect(Tok::Arrow, "`->`")?;
        let mut alternatives = vec![self.alternative()?];
        while self.eat(&Tok::Plus) {
            alternatives.push(self.alternative()?);
        }
        self.expect(Tok::Semi, "`;` or `+`")?;
        Ok(Command {
            action,
            guard,
            alternatives,
            loc,
        })
    }

    fn alternative(&mut self) -> PResult<Alternative> {
        let rate = self.expr()?;
        self.expect(Tok::Colon, "`:`")?;
        let mut updates = vec![self.assignment()?];
        while self.eat(&Tok::Amp) {
            updates.push(self.assignment()?);
        }
        Ok(Alternative { rate, updates })
    }

    fn assignment(&mut self) -> PResult<Assignment> {
        self.expect(Tok::LParen, "`(`")?;
        let (var, loc) = self.name("variable name")?;
        self.expect(Tok::Prime, "`'`")?;
        self.expect(Tok::Eq, "`=`")?;
        let value = self.expr()?;
        self.expect(Tok::RParen, "`)`")?;
        Ok(Assignment { var, value, loc })
    }

    pub fn expr(&mut self) -> PResult<Expr> {
        let mut lhs = self.and_expr()?;
        while *self.peek() == Tok::Pipe {
            self.advance();
            let rhs = self.and_expr()?;
            lhs = binary(BinOp::Or, lhs, rhs);
        }
        Ok(lhs)
    }

    fn and_expr(&mut self) -> PResult<Expr> {
        let mut lhs = self.not_expr()?;
        while *self.peek() == Tok::Amp {
            self.advance();
            let rhs = self.not_expr()?;
            lhs = binary(BinOp::And, lhs, rhs);
        }
        Ok(lhs)
    }

    fn not_expr(&mut self) -> PResult<Expr> {
        if *self.peek() == Tok::Bang {
            let loc = self.advance().loc;
            let inner = self.not_expr()?;
            return Ok(Expr::new(ExprKind::Unary(UnOp::Not, Box::new(inner)), loc));
        }
        self.cmp_expr()
    }

    fn cmp_expr(&mut self) -> PResult<Expr> {
        let lhs = self.add_expr()?;
        let op = match self.peek() {
            Tok::Eq => BinOp::Eq,
            Tok::Neq => BinOp::Neq,
            Tok::Lt => BinOp::Lt,
            Tok::Le => BinOp::Le,
            Tok::Gt => BinOp::Gt,
            Tok::Ge => BinOp::Ge,
            _ => return Ok(lhs),
        };
        self.advance();
        let rhs = self.add_expr()?;
        Ok(binary(op, lhs, rhs))
    }

    fn add_expr(&mut self) -> PResult<Expr> {
        let mut lhs = self.mul_expr()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            // In `rate:(u) + rate:(u)` the `+` after an assignment list is
            // consumed by the command parser, never here.
            self.advance();
            let rhs = self.mul_expr()?;
            lhs = binary(op, lhs, rhs);
        }
    }

    fn mul_expr(&mut self) -> PResult<Expr> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.advance();
            let rhs = self.unary()?;
            lhs = binary(op, lhs, rhs);
        }
    }

    fn unary(&mut self) -> PResult<Expr> {
        if *self.peek() == Tok::Minus {
            let loc = self.advance().loc;
            let inner = self.unary()?;
            return Ok(Expr::new(ExprKind::Unary(UnOp::Neg, Box::new(inner)), loc));
        }
        self.atom()
    }

    fn atom(&mut self) -> PResult<Expr> {
        let loc = self.loc();
        match self.peek().clone() {
            Tok::Number(n) => {
                debug_assert!(!n.is_negative());
                self.advance();
                Ok(Expr::new(ExprKind::Num(n), loc))
            }
            Tok::Keyword(Keyword::True) => {
                self.advance();
                Ok(Expr::new(ExprKind::Bool(true), loc))
            }
            Tok::Keyword(Keyword::False) => {
                self.advance();
                Ok(Expr::new(ExprKind::Bool(false), loc))
            }
            Tok::Keyword(k @ (Keyword::Min | Keyword::Max)) => {
                self.advance();
                self.expect(Tok::LParen, "`(`")?;
                let mut args = vec![self.expr()?];
                while self.eat(&Tok::Comma) {
                    args.push(self.expr()?);
                }
                self.expect(Tok::RParen, "`)` or `,`")?;
                if args.len() < 2 {
                    return Err(SourceError::new(
                        ErrorKind::Parse,
                        loc,
                        format!("`{}` needs at least two arguments", k.as_str()),
                    ));
                }
                let f = if k == Keyword::Min { Func::Min } else { Func::Max };
                Ok(Expr::new(ExprKind::Call(f, args), loc))
            }
            Tok::Ident(name) => {
                self.advance();
                Ok(Expr::new(ExprKind::Ident(name), loc))
            }
            Tok::LParen => {
                self.advance();
                let inner = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(inner)
            }
            _ => Err(self.unexpected("expression")),
        }
    }
}

fn binary(op: BinOp, lhs: Expr, rhs: Expr) -> Expr {
    let loc = lhs.loc;
    Expr::new(ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)), loc)
}

/// Parses model source into a validated AST.
pub fn parse(text: &str) -> Result<ModelAst, SourceError> {
    let tokens = tokenize(text)?;
    let mut parser = Parser { tokens, pos: 0 };
    let ast = parser.model()?;
    super::validate::validate(&ast)?;
    Ok(ast)
}

/// Parses a standalone expression (used for state predicates).
pub fn parse_expression(text: &str) -> Result<Expr, SourceError> {
    let tokens = tokenize(text)?;
    let mut parser = Parser { tokens, pos: 0 };
    let e = parser.expr()?;
    if *parser.peek() != Tok::Eof {
        return Err(parser.unexpected("end of expression"));
    }
    Ok(e)
}
