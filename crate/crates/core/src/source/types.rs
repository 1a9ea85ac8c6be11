//! Types of the effectful source calculus.
//!
//! Grammar: base `b`, `unit`, `empty`, products, sums, and full function
//! types. Ground types exclude arrows; product-ground types additionally
//! exclude `empty` and sums. The product-ground fragment is the coarity
//! discipline constants must satisfy for the analysis to be meaningful.

use std::fmt;

use serde::{Deserialize, Serialize};

/// A source-language type.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SourceType {
    /// Named base type, e.g. `nat` or `real`.
    Base(String),
    /// The one-element type, written `unit`.
    Unit,
    /// The empty type, written `empty`.
    Empty,
    /// Binary product `l * r`.
    Prod(Box<SourceType>, Box<SourceType>),
    /// Binary sum `l + r`.
    Sum(Box<SourceType>, Box<SourceType>),
    /// Function type `dom -> cod`.
    Arrow(Box<SourceType>, Box<SourceType>),
}

impl SourceType {
    pub fn base(name: impl Into<String>) -> Self {
        SourceType::Base(name.into())
    }

    pub fn prod(l: SourceType, r: SourceType) -> Self {
        SourceType::Prod(Box::new(l), Box::new(r))
    }

    pub fn sum(l: SourceType, r: SourceType) -> Self {
        SourceType::Sum(Box::new(l), Box::new(r))
    }

    pub fn arrow(dom: SourceType, cod: SourceType) -> Self {
        SourceType::Arrow(Box::new(dom), Box::new(cod))
    }

    /// `unit + unit + ... + unit` with `n` summands, associated to the left.
    /// `n = 0` is `empty` and `n = 1` is `unit`.
    pub fn finite(n: usize) -> Self {
        match n {
            0 => SourceType::Empty,
            _ => {
                let mut ty = SourceType::Unit;
                for _ in 1..n {
                    ty = SourceType::sum(ty, SourceType::Unit);
                }
                ty
            }
        }
    }

    /// No arrows anywhere in the type.
    pub fn is_ground(&self) -> bool {
        match self {
            SourceType::Base(_) | SourceType::Unit | SourceType::Empty => true,
            SourceType::Prod(l, r) | SourceType::Sum(l, r) => l.is_ground() && r.is_ground(),
            SourceType::Arrow(_, _) => false,
        }
    }

    /// No arrows, no `empty`, no sums: only bases, `unit`, and products.
    pub fn is_product_ground(&self) -> bool {
        match self {
            SourceType::Base(_) | SourceType::Unit => true,
            SourceType::Prod(l, r) => l.is_product_ground() && r.is_product_ground(),
            SourceType::Empty | SourceType::Sum(_, _) | SourceType::Arrow(_, _) => false,
        }
    }
}

/// Precedence levels for printing: arrow < sum < product < atom.
fn fmt_prec(ty: &SourceType, prec: u8, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    let paren = |f: &mut fmt::Formatter<'_>, needed: bool, inner: &dyn Fn(&mut fmt::Formatter<'_>) -> fmt::Result| {
        if needed {
            write!(f, "(")?;
            inner(f)?;
            write!(f, ")")
        } else {
            inner(f)
        }
    };
    match ty {
        SourceType::Base(b) => write!(f, "{b}"),
        SourceType::Unit => write!(f, "unit"),
        SourceType::Empty => write!(f, "empty"),
        SourceType::Prod(l, r) => paren(f, prec > 2, &|f| {
            fmt_prec(l, 2, f)?;
            write!(f, " * ")?;
            fmt_prec(r, 3, f)
        }),
        SourceType::Sum(l, r) => paren(f, prec > 1, &|f| {
            fmt_prec(l, 1, f)?;
            write!(f, " + ")?;
            fmt_prec(r, 2, f)
        }),
        SourceType::Arrow(d, c) => paren(f, prec > 0, &|f| {
            fmt_prec(d, 1, f)?;
            write!(f, " -> ")?;
            fmt_prec(c, 0, f)
        }),
    }
}

impl fmt::Display for SourceType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_prec(self, 0, f)
    }
}
