use std::fmt;

use crate::ast::TypeName;

/// Static type of an expression or declaration after resolution.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Ty {
    Int,
    Boolean,
    Text,
    Void,
    /// A class or interface, by qualified name.
    Ref(String),
    /// Result of `Reflect.invoke`; checked at run time.
    Dyn,
}

impl Ty {
    pub fn is_ref(&self) -> bool {
        matches!(self, Ty::Ref(_))
    }
}

impl fmt::Display for Ty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ty::Int => f.write_str("int"),
            Ty::Boolean => f.write_str("boolean"),
            Ty::Text => f.write_str("text"),
            Ty::Void => f.write_str("void"),
            Ty::Ref(q) => f.write_str(q),
            Ty::Dyn => f.write_str("?"),
        }
    }
}

/// Qualifies a type reference relative to `package`.
///
/// JX has no imports: a simple name refers to a type in the same package and a
/// dotted name is already fully qualified.
pub fn qualify(package: &str, name: &str) -> String {
    if name.contains('.') {
        name.to_string()
    } else {
        format!("{package}.{name}")
    }
}

pub fn ty_of(package: &str, t: &TypeName) -> Ty {
    match t {
        TypeName::Int => Ty::Int,
        TypeName::Boolean => Ty::Boolean,
        TypeName::Text => Ty::Text,
        TypeName::Void => Ty::Void,
        TypeName::Named(n) => Ty::Ref(qualify(package, n)),
    }
}

/// `name(t1,t2)` with fully qualified parameter types.
pub fn signature<'a>(name: &str, params: impl IntoIterator<Item = &'a Ty>) -> String {
    let list: Vec<String> = params.into_iter().map(|t| t.to_string()).collect();
    format!("{name}({})", list.join(","))
}

/// Fully qualified member name, e.g. `foo.Bar.baz(int)`.
pub fn member_key<'a>(owner: &str, name: &str, params: impl IntoIterator<Item = &'a Ty>) -> String {
    format!("{owner}.{}", signature(name, params))
}

/// Splits a member key into `(owner, name, parameter list text)`.
pub fn split_member_key(key: &str) -> Option<(&str, &str, &str)> {
    let open = key.find('(')?;
    if !key.ends_with(')') {
        return None;
    }
    let head = &key[..open];
    let dot = head.rfind('.')?;
    Some((
        &head[..dot],
        &head[dot + 1..],
        &key[open + 1..key.len() - 1],
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn member_keys() {
        let k = member_key("foo.Bar", "baz", &[Ty::Int]);
        assert_eq!(k, "foo.Bar.baz(int)");
        assert_eq!(split_member_key(&k), Some(("foo.Bar", "baz", "int")));
        let k = member_key("p.A", "A", &[]);
        assert_eq!(k, "p.A.A()");
        assert_eq!(split_member_key("p.A"), None);
    }

    #[test]
    fn qualification() {
        assert_eq!(qualify("p", "A"), "p.A");
        assert_eq!(qualify("p", "q.B"), "q.B");
    }
}
