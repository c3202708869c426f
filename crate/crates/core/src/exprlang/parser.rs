//! Pratt parser over the token stream.
//!
//! Binding powers, loosest first: `+ -` (left), `* /` (left), prefix `-`,
//! `^` (right). Prefix minus therefore binds looser than `^`, so `-2^2`
//! is `-(2^2)`, while `2^-3` still parses as `2^(-3)`.

use super::lexer::{Token, TokenKind};
use super::{BinOp, ExprError, Func, Node};

const ADD_BP: (u8, u8) = (10, 11);
const MUL_BP: (u8, u8) = (20, 21);
const NEG_BP: u8 = 25;
const POW_BP: (u8, u8) = (31, 30);

pub(crate) struct Parser {
    tokens: Vec<Token>,
    cursor: usize,
}

impl Parser {
    pub(crate) fn new(tokens: Vec<Token>) -> Self {
        Self { tokens, cursor: 0 }
    }

    fn peek(&self) -> &Token {
        &self.tokens[self.cursor]
    }

    fn advance(&mut self) -> Token {
        let tok = self.tokens[self.cursor].clone();
        if tok.kind != TokenKind::Eof {
            self.cursor += 1;
        }
        tok
    }

    fn expect(&mut self, kind: TokenKind, what: &str) -> Result<Token, ExprError> {
        if self.peek().kind == kind {
            Ok(self.advance())
        } else {
            let tok = self.peek();
            Err(ExprError::Syntax {
                offset: tok.offset,
                message: format!("expected {what}, found {}", tok.kind.describe()),
            })
        }
    }

    pub(crate) fn parse_complete(mut self) -> Result<Node, ExprError> {
        let node = self.expr(0)?;
        let tok = self.peek();
        if tok.kind != TokenKind::Eof {
            return Err(ExprError::Syntax {
                offset: tok.offset,
                message: format!("expected operator or end of input, found {}", tok.kind.describe()),
            });
        }
        Ok(node)
    }

    fn expr(&mut self, min_bp: u8) -> Result<Node, ExprError> {
        let mut lhs = self.prefix()?;
        loop {
            let (op, (lbp, rbp)) = match self.peek().kind {
                TokenKind::Plus => (BinOp::Add, ADD_BP),
                TokenKind::Minus => (BinOp::Sub, ADD_BP),
                TokenKind::Star => (BinOp::Mul, MUL_BP),
                TokenKind::Slash => (BinOp::Div, MUL_BP),
                TokenKind::Caret => (BinOp::Pow, POW_BP),
                _ => break,
            };
            if lbp < min_bp {
                break;
            }
            self.advance();
            let rhs = self.expr(rbp)?;
            lhs = Node::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn prefix(&mut self) -> Result<Node, ExprError> {
        let tok = self.advance();
        match tok.kind {
            TokenKind::Number(v) => Ok(Node::Number(v)),
            TokenKind::Minus => {
                let operand = self.expr(NEG_BP)?;
                Ok(Node::Neg(Box::new(operand)))
            }
            TokenKind::LParen => {
                let inner = self.expr(0)?;
                self.expect(TokenKind::RParen, "`)`")?;
                Ok(inner)
            }
            TokenKind::Ident(name) => {
                if self.peek().kind == TokenKind::LParen {
                    self.call(name, tok.offset)
                } else if Func::from_name(&name).is_some() {
                    let next = self.peek();
                    Err(ExprError::Syntax {
                        offset: next.offset,
                        message: format!("expected `(` after function `{name}`"),
                    })
                } else if name == "pi" {
                    Ok(Node::Number(std::f64::consts::PI))
                } else {
                    Ok(Node::Var(name))
                }
            }
            other => Err(ExprError::Syntax {
                offset: tok.offset,
                message: format!("expected expression, found {}", other.describe()),
            }),
        }
    }

    fn call(&mut self, name: String, offset: usize) -> Result<Node, ExprError> {
        let func = Func::from_name(&name).ok_or(ExprError::UnknownFunction { name: name.clone(), offset })?;
        self.expect(TokenKind::LParen, "`(`")?;
        let mut args = Vec::new();
        if self.peek().kind != TokenKind::RParen {
            loop {
                args.push(self.expr(0)?);
                if self.peek().kind == TokenKind::Comma {
                    self.advance();
                } else {
                    break;
                }
            }
        }
        let close = self.expect(TokenKind::RParen, "`,` or `)`")?;
        if args.len() != func.arity() {
            return Err(ExprError::Syntax {
                offset: close.offset,
                message: format!(
                    "function `{}` takes {} argument(s), got {}",
                    func.name(),
                    func.arity(),
                    args.len()
                ),
            });
        }
        Ok(Node::Call(func, args))
    }
}
