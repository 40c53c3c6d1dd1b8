//! Type expressions and first-order type unification.

use std::fmt;

use crate::terms::Sym;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Type {
    Var(u32),
    App(Sym, Vec<Type>),
    /// `[arg, ...] =>> result`
    Fun(Vec<Type>, Box<Type>),
    Int,
    Bool,
}

impl Type {
    pub fn list(elem: Type) -> Type {
        Type::App(crate::terms::well_known().list, vec![elem])
    }

    /// Shifts every type variable by `base`; used to instantiate schemes.
    pub fn offset(&self, base: u32) -> Type {
        match self {
            Type::Var(v) => Type::Var(v + base),
            Type::App(n, args) => Type::App(*n, args.iter().map(|a| a.offset(base)).collect()),
            Type::Fun(args, res) => Type::Fun(
                args.iter().map(|a| a.offset(base)).collect(),
                Box::new(res.offset(base)),
            ),
            Type::Int | Type::Bool => self.clone(),
        }
    }

    /// Replaces variable `i` by `args[i]`; variables past the end stay.
    pub fn instantiate(&self, args: &[Type]) -> Type {
        match self {
            Type::Var(v) => args.get(*v as usize).cloned().unwrap_or(Type::Var(*v)),
            Type::App(n, ts) => Type::App(*n, ts.iter().map(|a| a.instantiate(args)).collect()),
            Type::Fun(ts, r) => Type::Fun(
                ts.iter().map(|a| a.instantiate(args)).collect(),
                Box::new(r.instantiate(args)),
            ),
            Type::Int | Type::Bool => self.clone(),
        }
    }

    pub fn max_var(&self) -> Option<u32> {
        match self {
            Type::Var(v) => Some(*v),
            Type::App(_, ts) => ts.iter().filter_map(Type::max_var).max(),
            Type::Fun(ts, r) => ts.iter().chain(std::iter::once(&**r)).filter_map(Type::max_var).max(),
            Type::Int | Type::Bool => None,
        }
    }

    pub fn is_ground(&self) -> bool {
        self.max_var().is_none()
    }
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Type::Var(v) => {
                let letter = (b'A' + (v % 26) as u8) as char;
                if *v < 26 {
                    write!(f, "{letter}")
                } else {
                    write!(f, "{letter}{}", v / 26)
                }
            }
            Type::App(n, args) => {
                write!(f, "{n}")?;
                if !args.is_empty() {
                    f.write_str("(")?;
                    for (i, a) in args.iter().enumerate() {
                        if i > 0 {
                            f.write_str(",")?;
                        }
                        write!(f, "{a}")?;
                    }
                    f.write_str(")")?;
                }
                Ok(())
            }
            Type::Fun(args, res) => {
                f.write_str("[")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{a}")?;
                }
                write!(f, "]=>>{res}")
            }
            Type::Int => f.write_str("int"),
            Type::Bool => f.write_str("bool"),
        }
    }
}

/// A declared signature: argument types and result over variables
/// `0..vars`, all implicitly quantified.
#[derive(Clone, Debug, PartialEq)]
pub struct TypeScheme {
    pub vars: u32,
    pub args: Vec<Type>,
    pub result: Type,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum UnifyError {
    #[error("cannot unify {0} with {1}")]
    Clash(Type, Type),
    #[error("type variable occurs in {1}")]
    Occurs(u32, Type),
}

/// Idempotent-on-read substitution over type variables.
#[derive(Clone, Debug, Default)]
pub struct TypeSubst {
    slots: Vec<Option<Type>>,
}

impl TypeSubst {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn fresh(&mut self) -> Type {
        self.slots.push(None);
        Type::Var(self.slots.len() as u32 - 1)
    }

    /// Reserves `n` fresh variables and returns the first index.
    pub fn reserve(&mut self, n: u32) -> u32 {
        let base = self.slots.len() as u32;
        self.slots.extend((0..n).map(|_| None));
        base
    }

    pub fn instantiate(&mut self, scheme: &TypeScheme) -> (Vec<Type>, Type) {
        let base = self.reserve(scheme.vars);
        (
            scheme.args.iter().map(|t| t.offset(base)).collect(),
            scheme.result.offset(base),
        )
    }

    fn ensure(&mut self, v: u32) {
        if self.slots.len() <= v as usize {
            self.slots.resize(v as usize + 1, None);
        }
    }

    fn shallow(&self, t: &Type) -> Type {
        let mut t = t.clone();
        while let Type::Var(v) = t {
            match self.slots.get(v as usize).and_then(|s| s.as_ref()) {
                Some(b) => t = b.clone(),
                None => break,
            }
        }
        t
    }

    /// Fully applies the substitution.
    pub fn apply(&self, t: &Type) -> Type {
        match self.shallow(t) {
            Type::App(n, args) => Type::App(n, args.iter().map(|a| self.apply(a)).collect()),
            Type::Fun(args, r) => {
                Type::Fun(args.iter().map(|a| self.apply(a)).collect(), Box::new(self.apply(&r)))
            }
            other => other,
        }
    }

    fn occurs(&self, v: u32, t: &Type) -> bool {
        match self.shallow(t) {
            Type::Var(u) => u == v,
            Type::App(_, args) => args.iter().any(|a| self.occurs(v, a)),
            Type::Fun(args, r) => args.iter().any(|a| self.occurs(v, a)) || self.occurs(v, &r),
            Type::Int | Type::Bool => false,
        }
    }
}

/// Most general unifier of two types, extending `subst`. On failure the
/// substitution may be partially extended.
pub fn unify_types(a: &Type, b: &Type, subst: &mut TypeSubst) -> Result<(), UnifyError> {
    let a = subst.shallow(a);
    let b = subst.shallow(b);
    match (&a, &b) {
        (Type::Var(x), Type::Var(y)) if x == y => Ok(()),
        (Type::Var(x), other) | (other, Type::Var(x)) => {
            if subst.occurs(*x, other) {
                return Err(UnifyError::Occurs(*x, subst.apply(other)));
            }
            subst.ensure(*x);
            subst.slots[*x as usize] = Some(other.clone());
            Ok(())
        }
        (Type::Int, Type::Int) | (Type::Bool, Type::Bool) => Ok(()),
        (Type::App(n, xs), Type::App(m, ys)) if n == m && xs.len() == ys.len() => {
            xs.iter().zip(ys).try_for_each(|(x, y)| unify_types(x, y, subst))
        }
        (Type::Fun(xs, r), Type::Fun(ys, q)) if xs.len() == ys.len() => {
            xs.iter().zip(ys).try_for_each(|(x, y)| unify_types(x, y, subst))?;
            unify_types(r, q, subst)
        }
        _ => Err(UnifyError::Clash(subst.apply(&a), subst.apply(&b))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn list(t: Type) -> Type {
        Type::list(t)
    }

    #[test]
    fn list_var_against_list_int() {
        let mut s = TypeSubst::new();
        let a = s.fresh();
        unify_types(&list(a.clone()), &list(Type::Int), &mut s).unwrap();
        assert_eq!(s.apply(&a), Type::Int);
    }

    #[test]
    fn occurs_check_rejects_list_a_against_a() {
        let mut s = TypeSubst::new();
        let a = s.fresh();
        let err = unify_types(&list(a.clone()), &a, &mut s).unwrap_err();
        assert!(matches!(err, UnifyError::Occurs(..)));
    }

    #[test]
    fn function_types_unify_argumentwise() {
        let mut s = TypeSubst::new();
        let a = s.fresh();
        let lhs = Type::Fun(vec![Type::Int, Type::Int], Box::new(Type::Int));
        let rhs = Type::Fun(vec![a.clone(), a.clone()], Box::new(a.clone()));
        unify_types(&lhs, &rhs, &mut s).unwrap();
        assert_eq!(s.apply(&a), Type::Int);
    }

    #[test]
    fn constructor_clash() {
        let mut s = TypeSubst::new();
        assert!(unify_types(&Type::Int, &list(Type::Int), &mut s).is_err());
        assert!(unify_types(&Type::Bool, &Type::Int, &mut s).is_err());
    }

    #[test]
    fn arity_mismatch_in_function_types() {
        let mut s = TypeSubst::new();
        let one = Type::Fun(vec![Type::Int], Box::new(Type::Int));
        let two = Type::Fun(vec![Type::Int, Type::Int], Box::new(Type::Int));
        assert!(unify_types(&one, &two, &mut s).is_err());
    }

    #[test]
    fn display_function_type() {
        let t = Type::Fun(vec![Type::Var(0)], Box::new(list(Type::Var(1))));
        assert_eq!(t.to_string(), "[A]=>>list(B)");
    }
}
